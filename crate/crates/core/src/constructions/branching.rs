use std::sync::Arc;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::aligned_frame;
use crate::crystallography::well_strain;
use crate::crystallography::{rank_one_decompose, PhaseIndex, SymmetricTensor3, TwinNormal, Vec3};
use crate::energy::Microstructure;
use crate::error::{Error, Result};
use crate::fields::{BoxDomain, DisplacementField, DisplacementSampler, PartitionField};

/// Where a height `z` above the slab face falls in the branching tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Zone {
    /// `0 <= z < z_D`: finest twins, cut off linearly toward the face.
    Boundary,
    /// `z_{k+1} <= z < z_k`: twins split from period `p_k` to `p_k / 2`.
    Layer(usize),
    /// `z >= z_0`: plain laminate of period `p_0`.
    Bulk,
}

/// The scalar branching profile `φ(z, w)` shared by the one- and two-sided constructions.
///
/// `z` is the distance from the face the twins refine toward and `w = x·n` the
/// coordinate across the twins. Layer `k` spans `z_k = top ρ^k` down to `z_{k+1}` and
/// halves the period `p_k = p_0 2^{-k}`. Inside a layer the first variant occupies
/// `[0, λp/2) ∪ [c, c + λp/2)` of every period, with `c` sliding from `λp/2` at the
/// top to `p/2` at the bottom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabPattern {
    pub lambda: f64,
    pub p0: f64,
    pub top: f64,
    pub rho: f64,
    pub depth: usize,
}

/// Profile value, derivatives and phase at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Local {
    pub first: bool,
    pub phi: f64,
    pub phi_z: f64,
    pub phi_w: f64,
}

impl SlabPattern {
    pub fn level(&self, k: usize) -> f64 {
        self.top * self.rho.powi(k as i32)
    }

    pub fn period(&self, k: usize) -> f64 {
        self.p0 * 0.5f64.powi(k as i32)
    }

    pub fn thickness(&self, k: usize) -> f64 {
        self.level(k) - self.level(k + 1)
    }

    pub fn zone(&self, z: f64) -> Zone {
        if z >= self.top {
            return Zone::Bulk;
        }
        for k in 0..self.depth {
            if z >= self.level(k + 1) {
                return Zone::Layer(k);
            }
        }
        Zone::Boundary
    }

    /// `(first variant?, ∫_0^w 1_second, ∂/∂c of that integral)` for cut point `c`.
    #[inline]
    fn running(&self, w: f64, p: f64, c: f64) -> (bool, f64, f64) {
        let m = (w / p).floor();
        let r = w - m * p;
        let h = 0.5 * self.lambda * p;
        let base = m * (1.0 - self.lambda) * p;
        if r < h {
            (true, base, 0.0)
        } else if r < c {
            (false, base + r - h, 0.0)
        } else if r < c + h {
            (true, base + c - h, 1.0)
        } else {
            (false, base + r - 2.0 * h, 0.0)
        }
    }

    pub fn local(&self, z: f64, w: f64) -> Local {
        let lam = self.lambda;
        let flat = |p: f64| {
            let (first, i, _) = self.running(w, p, 0.5 * lam * p);
            let phi = i - (1.0 - lam) * w;
            let phi_w = f64::from(u8::from(!first)) - (1.0 - lam);
            (first, phi, phi_w)
        };
        match self.zone(z) {
            Zone::Bulk => {
                let (first, phi, phi_w) = flat(self.p0);
                Local {
                    first,
                    phi,
                    phi_z: 0.0,
                    phi_w,
                }
            }
            Zone::Layer(k) => {
                let p = self.period(k);
                let l = self.thickness(k);
                let tau = (self.level(k) - z) / l;
                let c = 0.5 * lam * p + tau * 0.5 * (1.0 - lam) * p;
                let (first, i, di_dc) = self.running(w, p, c);
                let dc_dz = -0.5 * (1.0 - lam) * p / l;
                Local {
                    first,
                    phi: i - (1.0 - lam) * w,
                    phi_z: di_dc * dc_dz,
                    phi_w: f64::from(u8::from(!first)) - (1.0 - lam),
                }
            }
            Zone::Boundary => {
                let zd = self.level(self.depth);
                let zeta = z / zd;
                let (first, phi, phi_w) = flat(self.period(self.depth));
                Local {
                    first,
                    phi: zeta * phi,
                    phi_z: phi / zd,
                    phi_w: zeta * phi_w,
                }
            }
        }
    }

    /// Elastic energy per unit face area of layer `k`, where `coef = |sym(a ⊗ ν)|²`.
    pub fn layer_elastic(&self, k: usize, coef: f64, eta: f64) -> f64 {
        let p = self.period(k);
        let l = self.thickness(k);
        let slope = 0.5 * (1.0 - self.lambda) * p / l;
        eta.powf(-2.0 / 3.0) * coef * slope * slope * 0.5 * self.lambda * l
    }

    /// Interfacial energy per unit face area of layer `k`; `n_z = n·ν` for unit twin normal `n`.
    pub fn layer_interfacial(&self, k: usize, n_z: f64, eta: f64) -> f64 {
        let p = self.period(k);
        let l = self.thickness(k);
        let n_s = (1.0 - n_z * n_z).sqrt();
        let slope = -0.5 * (1.0 - self.lambda) * p / l;
        let moving = (1.0 + ((slope - n_z) / n_s).powi(2)).sqrt();
        // Four interfaces per period, each seen by both variant indicators.
        eta.cbrt() * 2.0 * (n_s / p) * l * (2.0 / n_s + 2.0 * moving)
    }
}

fn default_period_ratio() -> f64 {
    0.5
}

fn default_thickness_ratio() -> f64 {
    0.5f64.powf(1.5)
}

fn default_top() -> f64 {
    0.5
}

fn default_twin() -> TwinNormal {
    TwinNormal::plus(3).expect("valid")
}

fn default_habit() -> TwinNormal {
    TwinNormal::plus(1).expect("valid")
}

/// A period-halving branching tree of variants 1 and 2 (fractions 1/3, 2/3) twinned
/// across a normal from `N_3`, meeting austenite at a habit plane with normal from `N_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchTreeSpec {
    pub depth: usize,
    pub base_period: f64,
    #[serde(default = "default_period_ratio")]
    pub period_ratio: f64,
    /// `L_{k+1} / L_k`; the default `2^{-3/2}` balances elastic and interfacial energy
    /// in every layer.
    #[serde(default = "default_thickness_ratio")]
    pub layer_thickness_ratio: f64,
    #[serde(default = "default_twin")]
    pub twin_normal: TwinNormal,
    #[serde(default = "default_habit")]
    pub habit_normal: TwinNormal,
    /// Height above the habit plane where branching starts.
    #[serde(default = "default_top")]
    pub top: f64,
}

/// Share of variant 1 in the habit-plane twin.
pub const HABIT_FRACTION: f64 = 1.0 / 3.0;

impl BranchTreeSpec {
    pub fn new(depth: usize, base_period: f64) -> Self {
        Self {
            depth,
            base_period,
            period_ratio: default_period_ratio(),
            layer_thickness_ratio: default_thickness_ratio(),
            twin_normal: default_twin(),
            habit_normal: default_habit(),
            top: default_top(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::InvalidConstruction(
                "depth must be at least 1".into(),
            ));
        }
        if (self.period_ratio - 0.5).abs() > 1e-12 {
            return Err(Error::InvalidConstruction(format!(
                "period_ratio {} is not supported; branching trees halve the period",
                self.period_ratio
            )));
        }
        if !(self.layer_thickness_ratio > 0.0 && self.layer_thickness_ratio < 1.0) {
            return Err(Error::InvalidConstruction(
                "layer_thickness_ratio must lie in (0, 1)".into(),
            ));
        }
        if !(self.base_period > 0.0) || !self.base_period.is_finite() {
            return Err(Error::InvalidConstruction(
                "base_period must be positive".into(),
            ));
        }
        if !(self.top > 0.0 && self.top <= 1.0) {
            return Err(Error::InvalidConstruction(
                "the branching layers must fit in the unit slab".into(),
            ));
        }
        if self.twin_normal.pair() != 3 {
            return Err(Error::InvalidConstruction(format!(
                "twin normal {} is not in N_3",
                self.twin_normal
            )));
        }
        if self.habit_normal.pair() != 1 {
            return Err(Error::InvalidConstruction(format!(
                "habit normal {} is not in N_1",
                self.habit_normal
            )));
        }
        Ok(())
    }

    pub fn pattern(&self) -> SlabPattern {
        SlabPattern {
            lambda: HABIT_FRACTION,
            p0: self.base_period,
            top: self.top,
            rho: self.layer_thickness_ratio,
            depth: self.depth,
        }
    }

    /// Rows `(ν_h, s, t)`: habit normal, in-plane direction across the twins, and the
    /// direction along which nothing varies.
    pub fn frame(&self) -> Matrix3<f64> {
        aligned_frame(&self.habit_normal.unit(), &self.twin_normal.unit())
            .expect("normals are not parallel")
    }

    /// `|n·s|`: twin coordinate advanced per unit in-plane length.
    pub fn lateral_rate(&self) -> f64 {
        let c = self.twin_normal.unit().dot(&self.habit_normal.unit());
        (1.0 - c * c).sqrt()
    }

    /// The finest lateral period must span at least 4 cells of `domain`.
    pub fn check_resolution(&self, domain: &BoxDomain) -> Result<()> {
        let finest = self.pattern().period(self.depth) / self.lateral_rate();
        let cells = finest / domain.cell_size()[1];
        if cells < 4.0 - 1e-9 {
            return Err(Error::ResolutionTooSmall(format!(
                "depth {} leaves the finest period at {cells:.2} cells; need at least 4",
                self.depth
            )));
        }
        Ok(())
    }

    /// Slab `x·ν_h ∈ (-1, 1)`, one coarse period wide and periodic across the twins,
    /// two periodic cells along the invariant direction.
    pub fn domain(&self, nz: usize, ny: usize) -> Result<BoxDomain> {
        let width = self.base_period / self.lateral_rate();
        Ok(BoxDomain::with_frame(
            [-1.0, 0.0, -1.0],
            [2.0, width, 2.0],
            [nz, ny, 2],
            self.frame(),
        )?
        .with_periodic([false, true, true]))
    }
}

/// `u = F̄ x + a φ(x·ν, x·n)` above the face, zero below it.
#[derive(Debug, Clone)]
pub(crate) struct SlabSampler {
    pub pattern: SlabPattern,
    pub nu: Vec3,
    pub n: Vec3,
    pub a: Vec3,
    pub fbar: Matrix3<f64>,
}

impl DisplacementSampler for SlabSampler {
    fn value(&self, x: &Vec3) -> Vec3 {
        let z = x.dot(&self.nu);
        if z < 0.0 {
            return Vec3::zeros();
        }
        self.fbar * x + self.a * self.pattern.local(z, x.dot(&self.n)).phi
    }

    fn gradient(&self, x: &Vec3) -> Matrix3<f64> {
        let z = x.dot(&self.nu);
        if z < 0.0 {
            return Matrix3::zeros();
        }
        let l = self.pattern.local(z, x.dot(&self.n));
        self.fbar + self.a * (l.phi_z * self.nu + l.phi_w * self.n).transpose()
    }
}

/// Per-layer energies of a branched construction, per unit face area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerInfo {
    pub index: usize,
    pub z_lo: f64,
    pub z_hi: f64,
    pub period: f64,
    pub elastic_per_area: f64,
    pub interfacial_per_area: f64,
}

#[derive(Debug, Clone)]
pub struct Branched {
    pub ms: Microstructure,
    pub spec: BranchTreeSpec,
    pub layers: Vec<LayerInfo>,
}

/// `b` with `sym(b ⊗ ν) = E`, or an error if `E` is not of that form.
pub(crate) fn habit_shear(e: &SymmetricTensor3, nu: &Vec3) -> Result<Vec3> {
    let m = e.to_matrix();
    let en = m * nu;
    let b = 2.0 * en - nu.dot(&en) * nu;
    let back = SymmetricTensor3::sym_outer(&b, nu);
    if back.max_abs_diff(e) > 1e-12 {
        return Err(Error::InvalidConstruction(
            "average twin strain is not compatible with austenite across the habit plane".into(),
        ));
    }
    Ok(b)
}

pub fn branched_habit_plane(
    spec: &BranchTreeSpec,
    domain: &BoxDomain,
    eta: f64,
) -> Result<Branched> {
    spec.validate()?;
    if (domain.frame() - spec.frame()).abs().max() > 1e-12 {
        return Err(Error::InvalidConstruction(
            "domain frame must be (habit normal, in-plane twin direction, invariant direction)"
                .into(),
        ));
    }
    spec.check_resolution(domain)?;
    let pattern = spec.pattern();

    let v1 = PhaseIndex::new(1)?;
    let v2 = PhaseIndex::new(2)?;
    let nu = spec.habit_normal.unit();
    let n = spec.twin_normal.unit();
    let lam = HABIT_FRACTION;
    let a = rank_one_decompose(v1, v2)?.amplitude_for(spec.twin_normal)?;
    let ebar = lam * well_strain(v1) + (1.0 - lam) * well_strain(v2);
    let b = habit_shear(&ebar, &nu)?;
    let sampler = SlabSampler {
        pattern,
        nu,
        n,
        a,
        fbar: b * nu.transpose(),
    };

    let chi = PartitionField::from_fn(domain.clone(), |x| {
        let z = x.dot(&nu);
        if z < 0.0 {
            PhaseIndex::AUSTENITE
        } else if pattern.local(z, x.dot(&n)).first {
            v1
        } else {
            v2
        }
    });
    let u = DisplacementField::from_sampler(domain.clone(), Arc::new(sampler));

    let coef = SymmetricTensor3::sym_outer(&a, &nu).norm_squared();
    let layers = (0..spec.depth)
        .map(|k| LayerInfo {
            index: k,
            z_lo: pattern.level(k + 1),
            z_hi: pattern.level(k),
            period: pattern.period(k),
            elastic_per_area: pattern.layer_elastic(k, coef, eta),
            interfacial_per_area: pattern.layer_interfacial(k, n.dot(&nu), eta),
        })
        .collect();
    Ok(Branched {
        ms: Microstructure::new(u, chi, eta)?,
        spec: *spec,
        layers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern() -> SlabPattern {
        SlabPattern {
            lambda: 1.0 / 3.0,
            p0: 0.3,
            top: 0.5,
            rho: 0.4,
            depth: 3,
        }
    }

    #[test]
    fn zones_are_ordered() {
        let p = pattern();
        assert_eq!(p.zone(0.6), Zone::Bulk);
        assert_eq!(p.zone(0.45), Zone::Layer(0));
        assert_eq!(p.zone(0.5 * 0.4 * 0.9), Zone::Layer(1));
        assert_eq!(p.zone(1e-4), Zone::Boundary);
    }

    #[test]
    fn profile_is_continuous_in_both_coordinates() {
        let p = pattern();
        let eps = 1e-10;
        for k in 0..=p.depth {
            let z = p.level(k);
            for j in 0..200 {
                let w = -0.4 + j as f64 * 0.0041;
                let jump = p.local(z + eps, w).phi - p.local(z - eps, w).phi;
                assert!(jump.abs() < 1e-8, "z = {z}, w = {w}: {jump}");
            }
        }
        for j in 0..400 {
            let z = 0.001 + j as f64 * 0.0014;
            for w in [0.0, 0.05, 0.1, 0.21] {
                let jump = p.local(z, w + eps).phi - p.local(z, w - eps).phi;
                assert!(jump.abs() < 1e-8);
            }
        }
        // The profile vanishes on the face, so u matches austenite.
        for j in 0..50 {
            assert!(p.local(0.0, j as f64 * 0.013).phi.abs() < 1e-15);
        }
    }

    #[test]
    fn profile_derivatives_match_differences() {
        let p = pattern();
        let h = 1e-7;
        for &(z, w) in &[(0.45, 0.031), (0.1, 0.2), (0.7, 0.13), (0.01, 0.022)] {
            let l = p.local(z, w);
            let dz = (p.local(z + h, w).phi - p.local(z - h, w).phi) / (2.0 * h);
            let dw = (p.local(z, w + h).phi - p.local(z, w - h).phi) / (2.0 * h);
            assert!((dz - l.phi_z).abs() < 1e-6, "{dz} vs {}", l.phi_z);
            assert!((dw - l.phi_w).abs() < 1e-6);
        }
    }

    #[test]
    fn first_variant_share_is_lambda_everywhere() {
        let p = pattern();
        for z in [0.7, 0.45, 0.15, 0.05, 0.01] {
            let n = 30000;
            let period = p.p0;
            let share = (0..n)
                .filter(|&j| p.local(z, period * (j as f64 + 0.5) / n as f64).first)
                .count() as f64
                / n as f64;
            assert!((share - 1.0 / 3.0).abs() < 1e-3, "z = {z}: {share}");
        }
    }

    #[test]
    fn habit_shear_matches_average_strain() {
        let e = SymmetricTensor3::diagonal([0.0, -1.0, 1.0]);
        for nu in TwinNormal::pair_of(PhaseIndex::new(1).unwrap()).unwrap() {
            let b = habit_shear(&e, &nu.unit()).unwrap();
            assert!(SymmetricTensor3::sym_outer(&b, &nu.unit()).max_abs_diff(&e) < 1e-14);
        }
        assert!(habit_shear(&SymmetricTensor3::diagonal([-2.0, 1.0, 1.0]), &Vec3::z()).is_err());
    }

    #[test]
    fn spec_validation() {
        let mut s = BranchTreeSpec::new(3, 0.25);
        assert!(s.validate().is_ok());
        s.period_ratio = 0.4;
        assert!(s.validate().is_err());
        let mut s = BranchTreeSpec::new(3, 0.25);
        s.twin_normal = TwinNormal::plus(2).unwrap();
        assert!(s.validate().is_err());
        assert!(BranchTreeSpec::new(0, 0.25).validate().is_err());
    }

    #[test]
    fn resolution_guard() {
        let s = BranchTreeSpec::new(6, 0.25);
        let d = s.domain(64, 128).unwrap();
        assert!(matches!(
            branched_habit_plane(&s, &d, 0.01),
            Err(Error::ResolutionTooSmall(_))
        ));
        let d = s.domain(64, 256).unwrap();
        assert!(branched_habit_plane(&s, &d, 0.01).is_ok());
    }
}
