use serde::{Deserialize, Serialize};

use super::spectrum::{spectrum_of, AngularSpectrum, SpectrumOptions};
use super::window::Window;
use super::{oscillation, EtaSequence};
use crate::crystallography::{admissible_normals, PhaseIndex, TwinNormal, Vec3};
use crate::energy::{energy, EnergyOptions};
use crate::error::{Error, Result};
use crate::fields::{MollifierSpec, Region, ScalarField};

/// `18 θ_i (1-θ_i) - 12 θ_0 θ_i + 2 θ_0 (1-θ_0)`: twice the local variance of `∂_i u_i`.
pub fn mass_density(theta_i: f64, theta_0: f64) -> f64 {
    18.0 * theta_i * (1.0 - theta_i) - 12.0 * theta_0 * theta_i + 2.0 * theta_0 * (1.0 - theta_0)
}

/// `∫ψ² g` and `∫ψ²` over the window cells.
fn windowed(g: &ScalarField, window: &Window) -> (f64, f64) {
    let dom = g.domain();
    let mut num = 0.0;
    let mut den = 0.0;
    for idx in window.region.cells(dom) {
        let c = dom.coords(idx);
        let p = window.value(&dom.center_grid(c));
        num += p * p * g.samples()[idx];
        den += p * p;
    }
    (num * dom.cell_volume(), den * dom.cell_volume())
}

fn density_field(theta: &[ScalarField; 4], i: PhaseIndex) -> Result<ScalarField> {
    let ti = theta[i.index()].samples();
    let t0 = theta[0].samples();
    ScalarField::new(
        theta[0].domain().clone(),
        ti.iter()
            .zip(t0)
            .map(|(&a, &b)| mass_density(a, b))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassIdentityReport {
    /// `2 Σ bins`.
    pub measured: f64,
    /// `∫ψ² (18θ_i(1-θ_i) - 12θ_0θ_i + 2θ_0(1-θ_0))`.
    pub predicted: f64,
    /// `|measured - predicted| / predicted`, or the absolute gap when nothing is predicted.
    pub deviation: f64,
}

pub fn mass_identity_check(
    theta: &[ScalarField; 4],
    spectrum: &AngularSpectrum,
    window: &Window,
) -> Result<MassIdentityReport> {
    let i = PhaseIndex::martensite(spectrum.component)?;
    let (predicted, _) = windowed(&density_field(theta, i)?, window);
    let measured = 2.0 * spectrum.total();
    let gap = (measured - predicted).abs();
    let deviation = if predicted > 0.0 {
        gap / predicted
    } else {
        gap
    };
    Ok(MassIdentityReport {
        measured,
        predicted,
        deviation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifiedMass {
    pub delta: f64,
    /// Window average of `τ^{(δ)}`: `2 M^{(δ)} / ∫ψ²`.
    pub tau: f64,
    /// Window average of the mass density.
    pub upper: f64,
    /// `upper - 36 δ ⟨E_inter⟩`.
    pub lower: f64,
    pub upper_ok: bool,
    pub lower_ok: bool,
    /// Cone and other masses, for the comparison with `δ = 0`.
    pub bins: [f64; 7],
}

/// Both bounds on the mollified mass at the finest member, with 10% slack relative to
/// the upper bound.
pub fn mollified_mass_bounds(
    seq: &EtaSequence,
    i: PhaseIndex,
    window: &Window,
    deltas: &[f64],
) -> Result<Vec<MollifiedMass>> {
    let ms = seq.finest();
    let (pred, psi2) = windowed(&density_field(seq.theta(), i)?, window);
    let upper = pred / psi2;
    let e = energy(ms, EnergyOptions::default())?;
    let (ei, _) = windowed(&e.interfacial_density, window);
    let e_inter = ei / psi2;
    deltas
        .iter()
        .map(|&delta| {
            if delta > 0.0 {
                window.check(ms.domain(), MollifierSpec::for_scale(delta, ms.eta)?.radius)?;
            }
            let f = oscillation(ms, seq.theta(), i, delta)?;
            let s = spectrum_of(&f, window, &SpectrumOptions::default())?;
            let tau = 2.0 * s.total() / psi2;
            let lower = upper - 36.0 * delta * e_inter;
            let slack = 0.1 * upper.max(f64::MIN_POSITIVE);
            let mut bins = [0.0; 7];
            bins[..6].copy_from_slice(&s.cone_mass);
            bins[6] = s.other;
            Ok(MollifiedMass {
                delta,
                tau,
                upper,
                lower,
                upper_ok: tau <= upper + slack,
                lower_ok: tau >= lower - slack,
                bins,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveSupportReport {
    pub etas: Vec<f64>,
    /// Angular mass outside the cones of the admissible normals, per member; `None`
    /// when a member carries no angular mass.
    pub off_support: Vec<Option<f64>>,
    /// Each step at most 5% above the previous one, and the last below the first.
    pub decreasing: bool,
}

pub fn wave_support_check(
    seq: &EtaSequence,
    i: PhaseIndex,
    window: &Window,
) -> Result<WaveSupportReport> {
    let support = admissible_normals(i)?;
    let mut etas = Vec::new();
    let mut off_support = Vec::new();
    for ms in seq.members() {
        let f = oscillation(ms, seq.theta(), i, 0.0)?;
        let s = spectrum_of(&f, window, &SpectrumOptions::default())?;
        etas.push(ms.eta);
        off_support.push(s.cone_fraction(&support).map(|c| 1.0 - c));
    }
    let vals: Vec<f64> = off_support.iter().flatten().copied().collect();
    let decreasing = vals.len() == off_support.len()
        && vals.windows(2).all(|w| w[1] <= w[0] * 1.05 + 1e-12)
        && vals.last() < vals.first();
    Ok(WaveSupportReport {
        etas,
        off_support,
        decreasing,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TileEntry {
    pub center: Vec3,
    pub first: (TwinNormal, f64),
    pub second: (TwinNormal, f64),
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViolationMap {
    pub tiles: Vec<TileEntry>,
}

impl ViolationMap {
    pub const CSV_HEADER: &'static str =
        "center_x,center_y,center_z,first,first_mass,second,second_mass,flagged";

    pub fn flagged(&self) -> usize {
        self.tiles.iter().filter(|t| t.flagged).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for t in &self.tiles {
            out.push_str(&format!(
                "{:?},{:?},{:?},{},{:?},{},{:?},{}\n",
                t.center.x,
                t.center.y,
                t.center.z,
                t.first.0,
                t.first.1,
                t.second.0,
                t.second.1,
                t.flagged
            ));
        }
        out
    }
}

/// Flags windows where the second strongest normal class carries more than 10% of the
/// strongest one's mass.
pub fn single_direction_check(f: &ScalarField, windows: &[Window]) -> Result<ViolationMap> {
    let all = TwinNormal::all();
    let tiles = windows
        .iter()
        .map(|w| {
            let s = spectrum_of(f, w, &SpectrumOptions::default())?;
            let mut order: Vec<usize> = (0..6).collect();
            order.sort_by(|&a, &b| s.cone_mass[b].total_cmp(&s.cone_mass[a]));
            let first = (all[order[0]], s.cone_mass[order[0]]);
            let second = (all[order[1]], s.cone_mass[order[1]]);
            let center = f.domain().to_lab(&w.region.center());
            Ok(TileEntry {
                center,
                first,
                second,
                flagged: first.1 > 0.0 && second.1 > 0.1 * first.1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ViolationMap { tiles })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportEntry {
    pub center: Vec3,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransportProfile {
    pub delta: f64,
    pub entries: Vec<TransportEntry>,
}

impl TransportProfile {
    pub fn max_ratio(&self) -> f64 {
        self.entries.iter().map(|e| e.ratio).fold(0.0, f64::max)
    }
}

/// `|∂_d (τ^{(δ)} χ_{[ν]})|` by a difference of window averages at `x` and `x + s d`,
/// over `δ^{-1} (τ^{(δ)} χ_{[ν]})^{1/2} ⟨E_elast⟩^{1/2}`.
///
/// `χ_{[ν]}` of a window is 1 when `[ν]` is its dominant class and holds more than
/// half of the angular mass.
#[allow(clippy::too_many_arguments)]
pub fn transport_ratio(
    seq: &EtaSequence,
    i: PhaseIndex,
    nu: TwinNormal,
    d: &Vec3,
    delta: f64,
    windows: &[Window],
    shift: f64,
) -> Result<TransportProfile> {
    let d = d.normalize();
    if d.dot(&nu.unit()).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "direction is not orthogonal to {nu}"
        )));
    }
    if !(delta > 0.0) || !(shift > 0.0) {
        return Err(Error::InvalidArgument(
            "delta and shift must be positive".into(),
        ));
    }
    let ms = seq.finest();
    let dom = ms.domain();
    let radius = MollifierSpec::for_scale(delta, ms.eta)?.radius;
    let f = oscillation(ms, seq.theta(), i, delta)?;
    let e = energy(ms, EnergyOptions::default())?;
    let dg = dom.frame() * d * shift;
    let tau_chi = |w: &Window| -> Result<(f64, f64)> {
        w.check(dom, radius)?;
        let s = spectrum_of(&f, w, &SpectrumOptions::default())?;
        let (_, psi2) = windowed(&e.elastic_density, w);
        let tau = 2.0 * s.total() / psi2;
        let (dom_n, m) = s.dominant();
        let chi = dom_n == nu && m > 0.5 * s.angular_total();
        Ok((if chi { tau } else { 0.0 }, psi2))
    };
    let entries = windows
        .iter()
        .map(|w| {
            let moved = Window {
                region: Region {
                    lo: std::array::from_fn(|a| w.region.lo[a] + dg[a]),
                    hi: std::array::from_fn(|a| w.region.hi[a] + dg[a]),
                },
            };
            let (a, psi2) = tau_chi(w)?;
            let (b, _) = tau_chi(&moved)?;
            let numerator = (b - a).abs() / shift;
            let (el, _) = windowed(&e.elastic_density, w);
            let denominator = a.sqrt() * (el / psi2).sqrt() / delta;
            let ratio = if numerator == 0.0 {
                0.0
            } else if denominator == 0.0 {
                f64::INFINITY
            } else {
                numerator / denominator
            };
            Ok(TransportEntry {
                center: dom.to_lab(&w.region.center()),
                numerator,
                denominator,
                ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransportProfile { delta, entries })
}
