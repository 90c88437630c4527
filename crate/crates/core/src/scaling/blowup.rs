use serde::{Deserialize, Serialize};

use crate::crystallography::{TwinNormal, Vec3};
use crate::energy::{energy, EnergyOptions, Microstructure};
use crate::error::{Error, Result};
use crate::fit::fit_loglog;

/// Expected slope of the density product against `h`.
pub const BLOWUP_EXPONENT: f64 = -2.0 / 3.0;

/// Cells of distance from the habit plane below which `h` is not resolved.
const MIN_CELLS: f64 = 4.0;

/// Elastic averages below this multiple of `η^{-2/3}` count as zero.
const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupProfile {
    pub h_values: Vec<f64>,
    /// Interfacial density at `x' + h d`.
    pub interfacial: Vec<f64>,
    /// Elastic density averaged over the segment from `x'` to `x' + h d`.
    pub elastic_average: Vec<f64>,
    /// `interfacial^{2/3} · elastic_average^{1/3}`.
    pub product_values: Vec<f64>,
    /// `h^{2/3} · product`.
    pub compensated: Vec<f64>,
    pub fitted_slope: Option<f64>,
    pub fit_residual: Option<f64>,
    /// Smallest `h` the grid resolves along `d`.
    pub resolution_limit: f64,
}

impl BlowupProfile {
    pub const CSV_HEADER: &'static str = "h,product,compensated";

    /// False when some product vanishes: the densities cannot come from a branching
    /// habit-plane family of finite energy.
    pub fn valid_family(&self) -> bool {
        self.product_values
            .iter()
            .all(|&p| p > 0.0 && p.is_finite())
    }

    /// Compensated products over `h ≤ 10 h_min`.
    pub fn finest_decade(&self) -> Vec<f64> {
        let h_min = self.h_values.iter().copied().fold(f64::INFINITY, f64::min);
        self.h_values
            .iter()
            .zip(&self.compensated)
            .filter(|(h, _)| **h <= 10.0 * h_min * (1.0 + 1e-12))
            .map(|(_, &c)| c)
            .collect()
    }

    /// `min / median` of the compensated product over the finest decade.
    pub fn lower_bound_ratio(&self) -> f64 {
        let mut v = self.finest_decade();
        v.sort_by(f64::total_cmp);
        let median = if v.len() % 2 == 1 {
            v[v.len() / 2]
        } else {
            0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
        };
        if median > 0.0 {
            v[0] / median
        } else {
            0.0
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for ((h, p), c) in self
            .h_values
            .iter()
            .zip(&self.product_values)
            .zip(&self.compensated)
        {
            out.push_str(&format!("{h:?},{p:?},{c:?}\n"));
        }
        out
    }
}

/// The unit direction orthogonal to the twin normal that is closest to the habit normal.
pub fn blowup_direction(habit: TwinNormal, twin: TwinNormal) -> Result<Vec3> {
    let (nu, n) = (habit.unit(), twin.unit());
    let d = nu - nu.dot(&n) * n;
    if d.norm() < 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "{habit} and {twin} are parallel"
        )));
    }
    Ok(d.normalize())
}

/// Dyadic `h = 2^{-k}` that stay inside the domain along `d` and above the resolution limit.
pub fn resolvable_h(ms: &Microstructure, habit: TwinNormal, x_prime: &Vec3, d: &Vec3) -> Vec<f64> {
    let dom = ms.domain();
    let limit = MIN_CELLS * bin_width(ms, &habit.unit()) / d.dot(&habit.unit());
    (0..64)
        .map(|k| 0.5f64.powi(k))
        .filter(|&h| h >= limit && dom.contains(&(x_prime + h * d)))
        .collect()
}

fn bin_width(ms: &Microstructure, nu: &Vec3) -> f64 {
    let dom = ms.domain();
    let c = dom.cell_size();
    (0..3).map(|a| dom.axis(a).dot(nu).abs() * c[a]).sum()
}

/// Density product along `x' + h d` for the habit plane through `x'` with normal `habit`.
///
/// Densities at distance `z` from the plane are averaged over the slab of cells whose
/// centers lie within one bin of `z`; the bin is one cell thick along the habit normal.
pub fn blowup_profile(
    ms: &Microstructure,
    habit: TwinNormal,
    twin: TwinNormal,
    x_prime: &Vec3,
    d: &Vec3,
    h_values: &[f64],
) -> Result<BlowupProfile> {
    let nu = habit.unit();
    if (d.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("d must be a unit vector".into()));
    }
    let dz = d.dot(&nu);
    if dz <= 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "d is not transversal to the habit plane: d·ν = {dz:e}"
        )));
    }
    if d.dot(&twin.unit()).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "d is not orthogonal to the twin normal {twin}"
        )));
    }
    if h_values.len() < 2
        || h_values.windows(2).any(|w| !(w[1] < w[0]))
        || h_values.iter().any(|&h| !(h > 0.0))
    {
        return Err(Error::InvalidArgument(
            "h values must be positive and strictly decreasing".into(),
        ));
    }
    let dom = ms.domain();
    if !dom.contains(x_prime) {
        return Err(Error::InvalidArgument("x' lies outside the domain".into()));
    }
    let w = bin_width(ms, &nu);
    let resolution_limit = MIN_CELLS * w / dz;
    if let Some(h) = h_values
        .iter()
        .find(|&&h| h < resolution_limit * (1.0 - 1e-12))
    {
        return Err(Error::ResolutionTooSmall(format!(
            "h = {h:e} is below the resolved distance {resolution_limit:e}"
        )));
    }
    if let Some(h) = h_values
        .iter()
        .find(|&&h| !dom.contains(&(x_prime + h * d)))
    {
        return Err(Error::InvalidArgument(format!(
            "x' + {h} d leaves the domain"
        )));
    }

    let e = energy(ms, EnergyOptions::default())?;
    let h_max = h_values[0];
    let nbins = (h_max * dz / w).ceil() as usize + 1;
    let mut sums = vec![(0.0, 0.0, 0usize); nbins];
    for idx in 0..dom.len() {
        let z = (dom.center(idx) - x_prime).dot(&nu);
        if z < 0.0 {
            continue;
        }
        let b = (z / w) as usize;
        if b < nbins {
            let s = &mut sums[b];
            s.0 += e.interfacial_density.samples()[idx];
            s.1 += e.elastic_density.samples()[idx];
            s.2 += 1;
        }
    }
    let bins: Vec<(f64, f64)> = sums
        .iter()
        .map(|&(i, el, c)| {
            if c == 0 {
                (f64::NAN, f64::NAN)
            } else {
                (i / c as f64, el / c as f64)
            }
        })
        .collect();

    // Stress-free strains leave roundoff of order 1e-30 in the density.
    let floor = NOISE_FLOOR * ms.eta.powf(-2.0 / 3.0);
    let mut interfacial = Vec::with_capacity(h_values.len());
    let mut elastic_average = Vec::with_capacity(h_values.len());
    for &h in h_values {
        let z = h * dz;
        let top = ((z / w) as usize).min(nbins - 1);
        let mut integral = 0.0;
        for (b, &(_, el)) in bins.iter().enumerate().take(top + 1) {
            let lo = b as f64 * w;
            let hi = (lo + w).min(z);
            if hi > lo {
                integral += el * (hi - lo);
            }
        }
        if bins[..=top].iter().any(|b| b.0.is_nan()) {
            return Err(Error::InvalidDomain(
                "the slab along d contains empty bins".into(),
            ));
        }
        interfacial.push(bins[top].0);
        let avg = integral / z;
        elastic_average.push(if avg < floor { 0.0 } else { avg });
    }
    let product_values: Vec<f64> = interfacial
        .iter()
        .zip(&elastic_average)
        .map(|(i, e)| i.powf(2.0 / 3.0) * e.cbrt())
        .collect();
    let compensated: Vec<f64> = h_values
        .iter()
        .zip(&product_values)
        .map(|(h, p)| h.powf(2.0 / 3.0) * p)
        .collect();
    let fit = fit_loglog(h_values, &product_values).ok();
    Ok(BlowupProfile {
        h_values: h_values.to_vec(),
        interfacial,
        elastic_average,
        product_values,
        compensated,
        fitted_slope: fit.map(|f| f.slope),
        fit_residual: fit.map(|f| f.residual),
        resolution_limit,
    })
}
