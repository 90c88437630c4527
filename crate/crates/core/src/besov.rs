//! Difference-quotient estimates of the `B^{2/3}_{1,∞}` seminorm of twin indicators.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crystallography::{TwinNormal, Vec3};
use crate::energy::EnergyBreakdown;
use crate::error::{Error, Result};
use crate::fields::{l1_difference_over, BoxDomain, Region, Sampling, ScalarField};
use crate::fit::{fit_loglog, LogLogFit};

/// Required `dist(U, ∂Ω) / h`.
pub const MARGIN_C: f64 = 4.0;
pub const BESOV_EXPONENT: f64 = 2.0 / 3.0;

/// `∫_U |χ(x + h d) - χ(x)| dx`, with `U` at least `c h` away from the non-periodic faces.
pub fn local_l1_difference(chi: &ScalarField, region: &Region, d: &Vec3, h: f64) -> Result<f64> {
    local_l1_difference_with(chi, region, d, h, MARGIN_C)
}

pub fn local_l1_difference_with(
    chi: &ScalarField,
    region: &Region,
    d: &Vec3,
    h: f64,
    c: f64,
) -> Result<f64> {
    let dist = region.boundary_distance(chi.domain());
    if dist <= c * h {
        return Err(Error::Margin {
            h,
            required: c * h,
            dist,
        });
    }
    l1_difference_over(chi, region, d, h, Sampling::for_field(chi))
}

/// `h = 2^{-k} diam(U)` for `k = 2..=8`, keeping those that respect the margin.
pub fn dyadic_h_set(region: &Region, domain: &BoxDomain) -> Vec<f64> {
    let diam = region.diameter();
    let dist = region.boundary_distance(domain);
    (2..=8)
        .map(|k| diam * 0.5f64.powi(k))
        .filter(|&h| dist > MARGIN_C * h)
        .collect()
}

/// `n` roughly uniform unit vectors (Fibonacci lattice).
pub fn sphere_points(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// The six twin normals, the three grid axes of `domain`, and ten sphere points.
pub fn standard_directions(domain: &BoxDomain) -> Vec<Vec3> {
    let mut out: Vec<Vec3> = TwinNormal::all().iter().map(|n| n.unit()).collect();
    out.extend((0..3).map(|a| domain.axis(a)));
    out.extend(sphere_points(10));
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BesovReport {
    pub h_values: Vec<f64>,
    pub directions: Vec<Vec3>,
    /// `l1_table[d][k] = ∫_U |∂_d^{h_k} χ|`.
    pub l1_table: Vec<Vec<f64>>,
    /// Slope of `ln L¹` against `ln h` per direction, when four positive values exist.
    pub fits: Vec<Option<LogLogFit>>,
    /// The smallest per-direction slope.
    pub fitted_exponent: Option<LogLogFit>,
    /// `max h^{-2/3} ∫_U |∂_d^h χ|` over the design.
    pub seminorm: f64,
    /// Theorem ratios per direction and `h`, once attached.
    pub ratios: Option<Vec<Vec<f64>>>,
}

pub fn besov_seminorm(
    chi: &ScalarField,
    region: &Region,
    h_set: &[f64],
    directions: &[Vec3],
) -> Result<BesovReport> {
    chi.require_indicator()?;
    if h_set.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 values of h, got {}",
            h_set.len()
        )));
    }
    if directions.is_empty() {
        return Err(Error::InvalidArgument("empty direction design".into()));
    }
    let directions: Vec<Vec3> = directions.iter().map(|d| d.normalize()).collect();
    let l1_table = directions
        .par_iter()
        .map(|d| {
            h_set
                .iter()
                .map(|&h| local_l1_difference(chi, region, d, h))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let fits: Vec<Option<LogLogFit>> = l1_table
        .iter()
        .map(|row| fit_loglog(h_set, row).ok().filter(|f| f.points >= 4))
        .collect();
    let fitted_exponent = fits
        .iter()
        .flatten()
        .copied()
        .min_by(|a, b| a.slope.total_cmp(&b.slope));
    let seminorm = l1_table
        .iter()
        .flat_map(|row| {
            row.iter()
                .zip(h_set)
                .map(|(v, h)| v * h.powf(-BESOV_EXPONENT))
        })
        .fold(0.0, f64::max);
    Ok(BesovReport {
        h_values: h_set.to_vec(),
        directions,
        l1_table,
        fits,
        fitted_exponent,
        seminorm,
        ratios: None,
    })
}

/// Prefactor of the right-hand side: `1/ε` in general, `1/min(a, b)` for checkerboards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Comparator {
    Epsilon { epsilon: f64 },
    Checkerboard { a: f64, b: f64 },
}

impl Comparator {
    pub fn factor(&self) -> Result<f64> {
        match *self {
            Comparator::Epsilon { epsilon } if epsilon > 0.0 => Ok(1.0 / epsilon),
            Comparator::Checkerboard { a, b } if a > 0.0 && b > 0.0 => Ok(1.0 / a.min(b)),
            _ => Err(Error::InvalidArgument(format!(
                "comparator {self:?} needs positive parameters"
            ))),
        }
    }
}

/// `LHS / (factor · E_inter^{2/3} E_elast^{1/3} h^{2/3})`, `0` when the LHS vanishes.
pub fn theorem_comparator(
    lhs: f64,
    e_inter: f64,
    e_elast: f64,
    mode: Comparator,
    h: f64,
) -> Result<f64> {
    let factor = mode.factor()?;
    if lhs < 0.0 || e_inter < 0.0 || e_elast < 0.0 || !(h > 0.0) {
        return Err(Error::InvalidArgument(
            "energies and LHS must be nonnegative, h positive".into(),
        ));
    }
    if lhs == 0.0 {
        return Ok(0.0);
    }
    let rhs = factor * e_inter.powf(2.0 / 3.0) * e_elast.cbrt() * h.powf(BESOV_EXPONENT);
    if rhs == 0.0 {
        return Err(Error::Inconsistent(format!(
            "difference quotient {lhs:e} is nonzero while the energy bound vanishes"
        )));
    }
    Ok(lhs / rhs)
}

/// `(E_inter, E_elast)` restricted to `U + B(0, c h)`.
pub fn local_energies(energy: &EnergyBreakdown, region: &Region, h: f64) -> (f64, f64) {
    let dom = energy.interfacial_density.domain();
    let grown = region.inflate(MARGIN_C * h, dom);
    (
        energy.interfacial_density.integral_over(&grown),
        energy.elastic_density.integral_over(&grown),
    )
}

impl BesovReport {
    pub const CSV_HEADER: &'static str = "h,d_index,l1,normalized,ratio";

    pub fn attach_comparator(
        &mut self,
        energy: &EnergyBreakdown,
        region: &Region,
        mode: Comparator,
    ) -> Result<()> {
        let local: Vec<(f64, f64)> = self
            .h_values
            .iter()
            .map(|&h| local_energies(energy, region, h))
            .collect();
        let ratios = self
            .l1_table
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.h_values)
                    .zip(&local)
                    .map(|((&lhs, &h), &(ei, ee))| theorem_comparator(lhs, ei, ee, mode, h))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        self.ratios = Some(ratios);
        Ok(())
    }

    /// Ratio for direction `d` across `h`, max over min of the nonzero entries.
    pub fn ratio_spread(&self, d: usize) -> Option<f64> {
        let row = self.ratios.as_ref()?.get(d)?;
        let nz: Vec<f64> = row.iter().copied().filter(|&v| v > 0.0).collect();
        if nz.is_empty() {
            return None;
        }
        let max = nz.iter().copied().fold(f64::MIN, f64::max);
        let min = nz.iter().copied().fold(f64::MAX, f64::min);
        Some(max / min)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (d, row) in self.l1_table.iter().enumerate() {
            for (k, (&v, &h)) in row.iter().zip(&self.h_values).enumerate() {
                let ratio = self.ratios.as_ref().map_or(f64::NAN, |r| r[d][k]);
                out.push_str(&format!(
                    "{h:?},{d},{v:?},{:?},{ratio:?}\n",
                    v * h.powf(-BESOV_EXPONENT)
                ));
            }
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "seminorm": self.seminorm,
            "fitted_exponent": self.fitted_exponent.map(|f| f.slope),
            "residual": self.fitted_exponent.map(|f| f.residual),
            "h_count": self.h_values.len(),
            "direction_count": self.directions.len(),
        })
    }
}
