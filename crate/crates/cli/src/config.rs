//! Experiment configuration files and their dry-run validation.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use twinlab::besov::MARGIN_C;
use twinlab::constructions::{BranchTreeSpec, CheckerboardSpec, ClusterSpec, LaminateSpec};
use twinlab::fields::{BoxDomain, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Laminate,
    Checkerboard,
    Branch,
    Cluster,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    /// Interface scales, each half the previous one.
    pub eta_sweep: Vec<f64>,
    #[serde(default)]
    pub analyses: Analyses,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Only used by the noise control of the H-measure analysis.
    #[serde(default)]
    pub seed: u64,
    pub laminate: Option<LaminateSection>,
    pub checkerboard: Option<CheckerboardSection>,
    pub branch: Option<BranchSection>,
    pub cluster: Option<ClusterSection>,
    #[serde(default)]
    pub besov: BesovSettings,
    #[serde(default)]
    pub hmeasure: HMeasureSettings,
    #[serde(default)]
    pub scaling: ScalingSettings,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analyses {
    #[serde(default = "yes")]
    pub energy: bool,
    #[serde(default)]
    pub besov: bool,
    #[serde(default)]
    pub hmeasure: bool,
    #[serde(default)]
    pub scaling: bool,
}

impl Default for Analyses {
    fn default() -> Self {
        Self { energy: true, besov: false, hmeasure: false, scaling: false }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaminateSection {
    #[serde(flatten)]
    pub spec: LaminateSpec,
    /// Cells along the normal and the two in-plane axes of the unit box.
    pub resolution: [usize; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckerboardSection {
    #[serde(flatten)]
    pub spec: CheckerboardSpec,
    /// Cells per axis of the unit cube.
    pub resolution: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchSection {
    #[serde(flatten)]
    pub spec: BranchTreeSpec,
    /// Cells across the habit plane and along the twins.
    pub resolution: [usize; 2],
    /// The slab is `|x·ν_h| < half_thickness`.
    #[serde(default = "unit")]
    pub half_thickness: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterSection {
    #[serde(flatten)]
    pub spec: ClusterSpec,
    /// Lateral and transversal cells of the unit cube.
    pub resolution: [usize; 2],
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesovSettings {
    /// Phase whose indicator is measured; defaults to variant 1.
    pub component: Option<u8>,
    pub h_values: Option<Vec<f64>>,
    /// Grid coordinates of `U`; defaults to the middle half of every bounded axis.
    pub region: Option<RegionSpec>,
    /// Lower bound on `18θ_i(1-θ_i)` over mixed regions; derived from the construction by default.
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HMeasureSettings {
    #[serde(default = "one_u8")]
    pub component: u8,
    #[serde(default = "default_window")]
    pub window_sides: [f64; 3],
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    /// Tile size for the single-direction check.
    #[serde(default = "default_tiles")]
    pub tile_sides: [f64; 3],
}

impl Default for HMeasureSettings {
    fn default() -> Self {
        Self { component: 1, window_sides: default_window(), deltas: default_deltas(), tile_sides: default_tiles() }
    }
}

fn one_u8() -> u8 {
    1
}

fn default_window() -> [f64; 3] {
    [0.75; 3]
}

fn default_tiles() -> [f64; 3] {
    [0.25, 0.5, 0.5]
}

fn default_deltas() -> Vec<f64> {
    vec![0.0, 0.25, 0.5]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSettings {
    #[serde(default = "default_r")]
    pub r_values: Vec<f64>,
    /// Box sizes `2^{-k}` for `k` in this inclusive range.
    #[serde(default = "default_box_range")]
    pub box_exponents: [u32; 2],
    /// Generation of the interface trace used for box counting. Defaults to
    /// the cluster's own depth; may exceed what the grid resolves.
    #[serde(default)]
    pub trace_generations: Option<usize>,
}

impl Default for ScalingSettings {
    fn default() -> Self {
        Self { r_values: default_r(), box_exponents: default_box_range(), trace_generations: None }
    }
}

fn default_r() -> Vec<f64> {
    vec![1.0 / 3.0, 0.5, 2.0, 3.0]
}

fn default_box_range() -> [u32; 2] {
    [3, 24]
}

/// One failed check: the offending key and what is wrong with it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

fn violation(field: &str, message: impl Into<String>) -> Violation {
    Violation { field: field.into(), message: message.into() }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).context("config is not valid TOML for this schema")
    }

    pub fn load(path: &Path) -> anyhow::Result<(Self, String)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok((Self::from_toml(&text)?, text))
    }

    pub fn finest_eta(&self) -> f64 {
        self.eta_sweep.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// The grid the construction lives on.
    pub fn domain(&self) -> twinlab::Result<BoxDomain> {
        use twinlab::constructions::twin_frame;
        match self.kind {
            Kind::Laminate => {
                let s = self.laminate.as_ref().expect("checked by validate");
                BoxDomain::with_frame([0.0; 3], [1.0; 3], s.resolution, twin_frame(s.spec.normal))
            }
            Kind::Checkerboard => {
                BoxDomain::unit_cube(self.checkerboard.as_ref().expect("checked by validate").resolution)
            }
            Kind::Branch => {
                let s = self.branch.as_ref().expect("checked by validate");
                let [nz, ny] = s.resolution;
                let d = s.spec.domain(nz, ny)?;
                let h = s.half_thickness;
                Ok(BoxDomain::with_frame([-h, 0.0, -1.0], [2.0 * h, d.extent()[1], 2.0], d.resolution(), d.frame())?
                    .with_periodic(d.periodic()))
            }
            Kind::Cluster => {
                let s = self.cluster.as_ref().expect("checked by validate");
                s.spec.domain(s.resolution[0], s.resolution[1])
            }
        }
    }

    /// Besov region `U` in grid coordinates.
    pub fn besov_region(&self, domain: &BoxDomain) -> twinlab::Result<Region> {
        if let Some(r) = self.besov.region {
            return Region::new(r.lo, r.hi);
        }
        let o = domain.origin();
        let e = domain.extent();
        let p = domain.periodic();
        let lo = std::array::from_fn(|a| if p[a] { o[a] } else { o[a] + 0.25 * e[a] });
        let hi = std::array::from_fn(|a| if p[a] { o[a] + e[a] } else { o[a] + 0.75 * e[a] });
        Region::new(lo, hi)
    }

    /// Every violated invariant, without building fields.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        self.check_sweep(&mut out);
        let sections = [
            (Kind::Laminate, "laminate", self.laminate.is_some()),
            (Kind::Checkerboard, "checkerboard", self.checkerboard.is_some()),
            (Kind::Branch, "branch", self.branch.is_some()),
            (Kind::Cluster, "cluster", self.cluster.is_some()),
        ];
        for (kind, name, present) in sections {
            if kind == self.kind && !present {
                out.push(violation(name, format!("kind = \"{name}\" needs a [{name}] table")));
            }
            if kind != self.kind && present {
                out.push(violation(name, format!("[{name}] is given but kind is {:?}", self.kind)));
            }
        }
        if !out.is_empty() {
            return out;
        }
        if let Err(e) = self.check_spec() {
            out.push(violation(self.section_name(), e.to_string()));
            return out;
        }
        let domain = match self.domain() {
            Ok(d) => d,
            Err(e) => {
                out.push(violation(self.section_name(), e.to_string()));
                return out;
            }
        };
        if let Kind::Branch = self.kind {
            if let Err(e) = self.branch.as_ref().expect("present").spec.check_resolution(&domain) {
                out.push(violation("branch.resolution", e.to_string()));
            }
        }
        if self.analyses.energy && self.kind == Kind::Checkerboard {
            out.push(violation("analyses.energy", "a checkerboard describes limit fractions, not a microstructure"));
        }
        if self.analyses.besov {
            self.check_besov(&domain, &mut out);
        }
        if self.analyses.hmeasure {
            self.check_hmeasure(&domain, &mut out);
        }
        if self.analyses.scaling {
            if self.kind == Kind::Checkerboard {
                out.push(violation("analyses.scaling", "no scaling analysis is defined for checkerboards"));
            }
            if let Some(r) = self.scaling.r_values.iter().find(|r| !(**r > 0.0)) {
                out.push(violation("scaling.r_values", format!("dilation factor {r} must be positive")));
            }
            let [a, b] = self.scaling.box_exponents;
            if b < a + 7 {
                out.push(violation("scaling.box_exponents", "box sizes must span at least two decades"));
            }
        }
        out
    }

    fn section_name(&self) -> &'static str {
        match self.kind {
            Kind::Laminate => "laminate",
            Kind::Checkerboard => "checkerboard",
            Kind::Branch => "branch",
            Kind::Cluster => "cluster",
        }
    }

    fn check_sweep(&self, out: &mut Vec<Violation>) {
        if self.eta_sweep.is_empty() {
            out.push(violation("eta_sweep", "needs at least one value"));
            return;
        }
        if let Some(e) = self.eta_sweep.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
            out.push(violation("eta_sweep", format!("eta = {e} must be positive")));
            return;
        }
        if self.eta_sweep.windows(2).any(|w| (w[0] / w[1] - 2.0).abs() > 1e-9) {
            out.push(violation("eta_sweep", "each eta must be half the previous one"));
        }
    }

    fn check_spec(&self) -> twinlab::Result<()> {
        match self.kind {
            Kind::Laminate => self.laminate.as_ref().expect("present").spec.validate(),
            Kind::Checkerboard => self.checkerboard.as_ref().expect("present").spec.validate(),
            Kind::Branch => {
                let s = self.branch.as_ref().expect("present");
                if !(s.half_thickness > 0.0 && s.half_thickness <= 1.0) {
                    return Err(twinlab::Error::InvalidDomain("half_thickness must lie in (0, 1]".into()));
                }
                s.spec.validate()
            }
            Kind::Cluster => self.cluster.as_ref().expect("present").spec.validate(),
        }
    }

    fn check_besov(&self, domain: &BoxDomain, out: &mut Vec<Violation>) {
        if let Kind::Checkerboard = self.kind {
            let s = &self.checkerboard.as_ref().expect("present").spec;
            if !s.is_strict() {
                out.push(violation(
                    "checkerboard",
                    format!("the checkerboard estimate assumes a > 0 and b > 0, got a = {}, b = {}", s.a, s.b),
                ));
            }
        }
        if let Some(c) = self.besov.component {
            if c > 3 {
                out.push(violation("besov.component", format!("phase {c} does not exist")));
            }
        }
        if let Some(eps) = self.besov.epsilon {
            if !(eps > 0.0) {
                out.push(violation("besov.epsilon", "epsilon must be positive"));
            }
        }
        let region = match self.besov_region(domain) {
            Ok(r) => r,
            Err(e) => {
                out.push(violation("besov.region", e.to_string()));
                return;
            }
        };
        let dist = region.boundary_distance(domain);
        let hs = self.besov.h_values.clone().unwrap_or_else(|| twinlab::besov::dyadic_h_set(&region, domain));
        if hs.len() < 4 {
            out.push(violation("besov.h_values", "need at least 4 values of h"));
        }
        for h in hs {
            if !(h > 0.0) {
                out.push(violation("besov.h_values", format!("h = {h} must be positive")));
            } else if MARGIN_C * h >= dist {
                out.push(violation(
                    "besov.h_values",
                    format!("h = {h} breaks the margin condition h < dist(U, boundary)/c = {dist}/{MARGIN_C}"),
                ));
            }
        }
    }

    fn check_hmeasure(&self, domain: &BoxDomain, out: &mut Vec<Violation>) {
        if self.kind != Kind::Laminate {
            out.push(violation("analyses.hmeasure", "the H-measure analysis runs on laminate eta-sequences"));
            return;
        }
        if self.eta_sweep.len() < 3 {
            out.push(violation("eta_sweep", "the H-measure analysis needs at least 3 values of eta"));
        }
        if !(1..=3).contains(&self.hmeasure.component) {
            out.push(violation("hmeasure.component", "component must be a martensite variant 1..=3"));
        }
        if let Some(d) = self.hmeasure.deltas.iter().find(|d| !(**d >= 0.0)) {
            out.push(violation("hmeasure.deltas", format!("delta = {d} must be non-negative")));
        }
        let o = domain.origin();
        let e = domain.extent();
        let center = twinlab::crystallography::Vec3::from(std::array::from_fn::<f64, 3, _>(|a| o[a] + 0.5 * e[a]));
        if let Err(err) = twinlab::hmeasure::Window::centered(center, self.hmeasure.window_sides, domain) {
            out.push(violation("hmeasure.window_sides", err.to_string()));
        }
    }
}
