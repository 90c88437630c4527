use std::sync::Arc;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::aligned_axis;
use super::branching::SlabPattern;
use crate::crystallography::{
    rank_one_decompose, well_strain, PhaseIndex, SymmetricTensor3, TwinNormal, Vec3,
};
use crate::energy::Microstructure;
use crate::error::{Error, Result};
use crate::fields::{BoxDomain, DisplacementField, DisplacementSampler, PartitionField};

/// Ratio of the symmetric two-branch Cantor set whose trace has box dimension `2/3 - ε`.
///
/// The exponent `1/(2/3 - ε)` is snapped to the nearest integer when it is within
/// `1e-9` of one, so `ε = 1/3` gives exactly `1/8`.
pub fn cantor_ratio(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 2.0 / 3.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {epsilon} is outside (0, 2/3)"
        )));
    }
    let mut k = 1.0 / (2.0 / 3.0 - epsilon);
    if (k - k.round()).abs() < 1e-9 {
        k = k.round();
    }
    Ok(0.5f64.powf(k))
}

/// Interior endpoints of generation `g` of the two-branch Cantor construction on
/// `[0, 1]`: `2(2^g - 1)` sorted points.
pub fn cantor_trace(lambda: f64, generations: usize) -> Result<Vec<f64>> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "Cantor ratio {lambda} is outside (0, 1/2)"
        )));
    }
    if generations > 40 {
        return Err(Error::InvalidArgument("at most 40 generations".into()));
    }
    let mut intervals = vec![(0.0f64, 1.0f64)];
    for _ in 0..generations {
        intervals = intervals
            .iter()
            .flat_map(|&(a, b)| {
                let w = lambda * (b - a);
                [(a, a + w), (b - w, b)]
            })
            .collect();
    }
    let mut points: Vec<f64> = intervals.iter().flat_map(|&(a, b)| [a, b]).collect();
    points.sort_by(f64::total_cmp);
    Ok(points[1..points.len() - 1].to_vec())
}

fn default_transversal() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub epsilon: f64,
    pub generations: usize,
    #[serde(default = "default_transversal")]
    pub transversal_direction: [f64; 3],
}

impl ClusterSpec {
    pub fn new(epsilon: f64, generations: usize) -> Self {
        Self {
            epsilon,
            generations,
            transversal_direction: default_transversal(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        cantor_ratio(self.epsilon)?;
        if self.generations == 0 {
            return Err(Error::InvalidConstruction(
                "need at least one generation".into(),
            ));
        }
        let d = Vec3::from(self.transversal_direction);
        if ((d.norm() - 1.0).abs()) > 1e-12 {
            return Err(Error::InvalidConstruction(
                "transversal direction must be a unit vector".into(),
            ));
        }
        for n in gap_normals() {
            if n.unit().dot(&d).abs() > 1.0 - 1e-9 {
                return Err(Error::InvalidConstruction(
                    "transversal direction is parallel to a twin normal".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn ratio(&self) -> Result<f64> {
        cantor_ratio(self.epsilon)
    }

    pub fn trace(&self) -> Result<Vec<f64>> {
        cantor_trace(self.ratio()?, self.generations)
    }

    /// Unit cube with the transversal direction as grid axis 2.
    pub fn domain(&self, n_lateral: usize, n_transversal: usize) -> Result<BoxDomain> {
        let d = Vec3::from(self.transversal_direction);
        let seed = if d.x.abs() < 0.9 {
            Vec3::x()
        } else {
            Vec3::y()
        };
        let s = (seed - seed.dot(&d) * d).normalize();
        let t = d.cross(&s);
        let r = Matrix3::from_rows(&[s.transpose(), t.transpose(), d.transpose()]);
        BoxDomain::with_frame([0.0; 3], [1.0; 3], [n_lateral, n_lateral, n_transversal], r)
    }
}

fn gap_normals() -> [TwinNormal; 2] {
    [
        TwinNormal::plus(3).expect("valid"),
        TwinNormal::minus(3).expect("valid"),
    ]
}

/// Fraction of variant 1 inside every gap.
const GAP_FRACTION: f64 = 0.5;
/// Geometric layer ratio inside a gap; balances both energy terms in every layer.
const GAP_RHO: f64 = 0.353_553_390_593_273_8;
/// Boundary-layer misfit allowed relative to the layered part.
const GAP_BOUNDARY_TOL: f64 = 1e-3;
const GAP_MAX_DEPTH: usize = 80;

/// Per-area energy of one twinned gap of width `d`, refined toward both macro-interfaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEnergy {
    pub width: f64,
    pub eta: f64,
    pub period: f64,
    pub depth: usize,
    pub elastic: f64,
    pub interfacial: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy)]
struct GapConstants {
    /// `|sym(a ⊗ d_T)|²`
    coef_t: f64,
    /// `|sym(a ⊗ n)|²`
    coef_n: f64,
    /// `n · d_T`
    n_t: f64,
}

impl GapConstants {
    fn new(n: TwinNormal, d: &Vec3) -> Result<Self> {
        let a = gap_amplitude(n)?;
        Ok(Self {
            coef_t: SymmetricTensor3::sym_outer(&a, d).norm_squared(),
            coef_n: SymmetricTensor3::sym_outer(&a, &n.unit()).norm_squared(),
            n_t: n.unit().dot(d),
        })
    }
}

fn gap_amplitude(n: TwinNormal) -> Result<Vec3> {
    rank_one_decompose(PhaseIndex::new(1)?, PhaseIndex::new(2)?)?.amplitude_for(n)
}

/// Energy of one half of a gap, slab height `top`, twin coordinate rate `n_z` along the
/// distance to the macro-interface.
fn half_gap(pattern: &SlabPattern, c: &GapConstants, n_z: f64, eta: f64) -> (f64, f64) {
    let mut el = 0.0;
    let mut inter = 0.0;
    for k in 0..pattern.depth {
        el += pattern.layer_elastic(k, c.coef_t, eta);
        inter += pattern.layer_interfacial(k, n_z, eta);
    }
    let (bel, binter) = boundary_layer(pattern, c, eta);
    (el + bel, inter + binter)
}

/// Closed form for `φ = (z/z_D) φ_D`: the slope term `⟨φ_D²⟩|A|²/z_D` plus the
/// damped-twin misfit `|B|² λ(1-λ) z_D/3`; the cross term averages to zero.
fn boundary_layer(pattern: &SlabPattern, c: &GapConstants, eta: f64) -> (f64, f64) {
    let lam = pattern.lambda;
    let zd = pattern.level(pattern.depth);
    let pd = pattern.period(pattern.depth);
    let amp = lam * (1.0 - lam) * pd;
    let el = c.coef_t * amp * amp / 3.0 / zd + c.coef_n * lam * (1.0 - lam) * zd / 3.0;
    (eta.powf(-2.0 / 3.0) * el, eta.cbrt() * 4.0 * zd / pd)
}

fn boundary_misfit(pattern: &SlabPattern, c: &GapConstants, eta: f64) -> f64 {
    let lam = pattern.lambda;
    eta.powf(-2.0 / 3.0) * c.coef_n * lam * (1.0 - lam) * pattern.level(pattern.depth) / 3.0
}

/// Coarse period balancing both energies in the first layer of a half-gap of height `top`.
fn gap_period(top: f64, c: &GapConstants, eta: f64) -> f64 {
    let lam = GAP_FRACTION;
    let l0 = top * (1.0 - GAP_RHO);
    let n_s = (1.0 - c.n_t * c.n_t).sqrt();
    // elastic: coef (1-λ)² λ p² / (8 L);  interfacial ≈ 4 L (1/n_s + 1/n_s) / p
    let inter = 4.0 * l0 * 2.0 / n_s;
    let el = c.coef_t * (1.0 - lam).powi(2) * lam / (8.0 * l0);
    (eta * inter / el).cbrt()
}

fn gap_pattern(width: f64, c: &GapConstants, eta: f64) -> SlabPattern {
    let top = 0.5 * width;
    let mut pattern = SlabPattern {
        lambda: GAP_FRACTION,
        p0: gap_period(top, c, eta),
        top,
        rho: GAP_RHO,
        depth: 1,
    };
    while pattern.depth < GAP_MAX_DEPTH {
        let layered: f64 = (0..pattern.depth)
            .map(|k| {
                pattern.layer_elastic(k, c.coef_t, eta) + pattern.layer_interfacial(k, c.n_t, eta)
            })
            .sum();
        if boundary_misfit(&pattern, c, eta) <= GAP_BOUNDARY_TOL * layered {
            break;
        }
        pattern.depth += 1;
    }
    pattern
}

/// Energy per unit interface area of a gap of width `d`, in closed form.
///
/// The depth grows as `η` falls so that the boundary layer stays a small fraction of
/// the total.
pub fn gap_energy_per_area(width: f64, eta: f64, transversal: &Vec3) -> Result<GapEnergy> {
    if !(width > 0.0) || !(eta > 0.0) {
        return Err(Error::InvalidArgument(
            "gap width and eta must be positive".into(),
        ));
    }
    let c = GapConstants::new(gap_normals()[0], &transversal.normalize())?;
    let pattern = gap_pattern(width, &c, eta);
    let (el_l, in_l) = half_gap(&pattern, &c, c.n_t, eta);
    let (el_r, in_r) = half_gap(&pattern, &c, -c.n_t, eta);
    let elastic = el_l + el_r;
    let interfacial = in_l + in_r;
    Ok(GapEnergy {
        width,
        eta,
        period: pattern.p0,
        depth: pattern.depth,
        elastic,
        interfacial,
        total: elastic + interfacial,
    })
}

#[derive(Debug, Clone)]
struct Gap {
    lo: f64,
    hi: f64,
    normal: Vec3,
    amplitude: Vec3,
    pattern: SlabPattern,
}

/// Gaps between consecutive macro-interfaces, twinned alternately across `ν_3^+` and `ν_3^-`.
#[derive(Debug, Clone)]
struct ClusterSampler {
    transversal: Vec3,
    ebar: Matrix3<f64>,
    gaps: Vec<Gap>,
}

impl ClusterSampler {
    /// Gap containing `t`, the distance to its nearer face, and `dζ/dt`.
    fn locate(&self, t: f64) -> (&Gap, f64, f64) {
        let g = self
            .gaps
            .partition_point(|g| g.hi <= t)
            .min(self.gaps.len() - 1);
        let gap = &self.gaps[g];
        let (l, r) = (t - gap.lo, gap.hi - t);
        if l <= r {
            (gap, l.max(0.0), 1.0)
        } else {
            (gap, r.max(0.0), -1.0)
        }
    }

    fn phase(&self, x: &Vec3) -> bool {
        let (gap, zeta, _) = self.locate(x.dot(&self.transversal));
        gap.pattern.local(zeta, x.dot(&gap.normal)).first
    }
}

impl DisplacementSampler for ClusterSampler {
    fn value(&self, x: &Vec3) -> Vec3 {
        let (gap, zeta, _) = self.locate(x.dot(&self.transversal));
        self.ebar * x + gap.amplitude * gap.pattern.local(zeta, x.dot(&gap.normal)).phi
    }

    fn gradient(&self, x: &Vec3) -> Matrix3<f64> {
        let (gap, zeta, dz) = self.locate(x.dot(&self.transversal));
        let l = gap.pattern.local(zeta, x.dot(&gap.normal));
        self.ebar
            + gap.amplitude * (l.phi_z * dz * self.transversal + l.phi_w * gap.normal).transpose()
    }
}

#[derive(Debug, Clone)]
pub struct Clustered {
    pub ms: Microstructure,
    /// Macro-interface coordinates along the transversal direction.
    pub interfaces: Vec<f64>,
}

impl Clustered {
    pub const CSV_HEADER: &'static str = "index,position";

    pub fn interfaces_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for (k, x) in self.interfaces.iter().enumerate() {
            out.push_str(&format!("{k},{x:?}\n"));
        }
        out
    }
}

/// A second-order laminate whose macro-interfaces sit on the Cantor trace.
///
/// The transversal direction must be a grid axis and the domain must lie in
/// `0 <= x·d_T <= 1`. Fine twins below the grid scale are sampled, not resolved.
pub fn clustering_laminate(spec: &ClusterSpec, domain: &BoxDomain, eta: f64) -> Result<Clustered> {
    spec.validate()?;
    let d = Vec3::from(spec.transversal_direction);
    let axis = aligned_axis(domain, &d).ok_or_else(|| {
        Error::InvalidConstruction("the transversal direction must be a grid axis".into())
    })?;
    let interfaces = spec.trace()?;
    let mut bounds = Vec::with_capacity(interfaces.len() + 2);
    bounds.push(0.0);
    bounds.extend_from_slice(&interfaces);
    bounds.push(1.0);

    let h = domain.cell_size()[axis];
    let min_gap = bounds
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if min_gap < h {
        return Err(Error::ResolutionTooSmall(format!(
            "generation {} has gaps of {min_gap:.3e}, below the cell size {h:.3e}",
            spec.generations
        )));
    }
    let sign = domain.axis(axis).dot(&d);
    let ends = [
        domain.origin()[axis] * sign,
        (domain.origin()[axis] + domain.extent()[axis]) * sign,
    ];
    if ends.iter().any(|t| !(-1e-12..=1.0 + 1e-12).contains(t)) {
        return Err(Error::InvalidConstruction(
            "domain extends beyond 0 <= x·d_T <= 1".into(),
        ));
    }

    let normals = gap_normals();
    let consts = [
        GapConstants::new(normals[0], &d)?,
        GapConstants::new(normals[1], &d)?,
    ];
    let amps = [gap_amplitude(normals[0])?, gap_amplitude(normals[1])?];
    let gaps = bounds
        .windows(2)
        .enumerate()
        .map(|(g, w)| Gap {
            lo: w[0],
            hi: w[1],
            normal: normals[g % 2].unit(),
            amplitude: amps[g % 2],
            pattern: gap_pattern(w[1] - w[0], &consts[g % 2], eta),
        })
        .collect();
    let ebar = (0.5 * well_strain(PhaseIndex::new(1)?) + 0.5 * well_strain(PhaseIndex::new(2)?))
        .to_matrix();
    let sampler = ClusterSampler {
        transversal: d,
        ebar,
        gaps,
    };

    let v1 = PhaseIndex::new(1)?;
    let v2 = PhaseIndex::new(2)?;
    let chi = PartitionField::from_fn(domain.clone(), |x| if sampler.phase(x) { v1 } else { v2 });
    let u = DisplacementField::from_sampler(domain.clone(), Arc::new(sampler));
    Ok(Clustered {
        ms: Microstructure::new(u, chi, eta)?,
        interfaces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::symmetric_gradient;

    #[test]
    fn interface_list_exports_one_row_each() {
        let spec = ClusterSpec::new(1.0 / 3.0, 1);
        let c = clustering_laminate(&spec, &spec.domain(8, 64).unwrap(), 1e-3).unwrap();
        let csv = c.interfaces_csv();
        assert_eq!(csv.lines().count(), c.interfaces.len() + 1);
        assert_eq!(csv.lines().nth(1).unwrap(), "0,0.125");
    }

    #[test]
    fn ratio_for_one_third() {
        assert_eq!(cantor_ratio(1.0 / 3.0).unwrap(), 0.125);
        assert!(cantor_ratio(0.0).is_err());
        assert!(cantor_ratio(0.7).is_err());
    }

    #[test]
    fn trace_counts_and_exact_endpoints() {
        assert_eq!(cantor_trace(0.125, 1).unwrap(), vec![0.125, 0.875]);
        let lam = 0.125f64;
        for g in 1..=6 {
            let t = cantor_trace(lam, g).unwrap();
            assert_eq!(t.len(), 2 * ((1 << g) - 1));
            // left endpoints are sums of digits times (1-λ)λ^{k-1}
            let mut want = Vec::new();
            for bits in 0u32..(1 << g) {
                let left: f64 = (0..g)
                    .filter(|k| bits >> (g - 1 - k) & 1 == 1)
                    .map(|k| (1.0 - lam) * lam.powi(k as i32))
                    .sum();
                want.push(left);
                want.push(left + lam.powi(g as i32));
            }
            want.sort_by(f64::total_cmp);
            assert_eq!(t, want[1..want.len() - 1]);
        }
    }

    #[test]
    fn gap_energy_scales_like_cube_root() {
        let d = Vec3::z();
        let a = gap_energy_per_area(0.2, 1e-9, &d).unwrap();
        let b = gap_energy_per_area(0.1, 1e-9, &d).unwrap();
        let ratio = a.total / b.total;
        assert!((ratio - 2f64.cbrt()).abs() < 0.02, "{ratio}");
        assert!((a.elastic / a.interfacial - 1.0).abs() < 0.2);
    }

    #[test]
    fn clustering_is_stress_free_inside_the_bulk_of_gaps() {
        let spec = ClusterSpec::new(1.0 / 3.0, 1);
        let dom = spec.domain(32, 64).unwrap();
        let c = clustering_laminate(&spec, &dom, 1e-3).unwrap();
        assert_eq!(c.interfaces.len(), 2);
        let e = symmetric_gradient(&c.ms.u).unwrap();
        let mut exact = 0;
        for (k, s) in e.values().iter().enumerate() {
            if s.max_abs_diff(&well_strain(c.ms.chi.label(k))) < 1e-12 {
                exact += 1;
            }
        }
        assert!(exact > dom.len() / 4, "{exact}");
    }

    #[test]
    fn displacement_is_continuous_across_macro_interfaces() {
        let spec = ClusterSpec::new(1.0 / 3.0, 2);
        let dom = spec.domain(8, 128).unwrap();
        let c = clustering_laminate(&spec, &dom, 1e-3).unwrap();
        let s = c.ms.u.sampler().unwrap();
        for &t in &c.interfaces {
            for j in 0..20 {
                let x = Vec3::new(0.05 * j as f64, 0.031 * j as f64, t);
                let jump = s.value(&(x + 1e-13 * Vec3::z())) - s.value(&(x - 1e-13 * Vec3::z()));
                assert!(jump.norm() < 1e-11);
            }
        }
    }

    #[test]
    fn sub_cell_gaps_are_rejected() {
        let spec = ClusterSpec::new(1.0 / 3.0, 3);
        let dom = spec.domain(4, 64).unwrap();
        assert!(matches!(
            clustering_laminate(&spec, &dom, 1e-3),
            Err(Error::ResolutionTooSmall(_))
        ));
    }
}
