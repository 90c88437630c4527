//! Building the configured construction and running the selected analyses.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};
use twinlab::besov::{besov_seminorm, dyadic_h_set, standard_directions, Comparator};
use twinlab::constructions::{
    branched_habit_plane, cantor_trace, checkerboard, clustering_laminate, gap_energy_per_area, simple_laminate,
    CheckerboardFields, HABIT_FRACTION,
};
use twinlab::crystallography::{PhaseIndex, Vec3};
use twinlab::energy::{energy, EnergyBreakdown, EnergyOptions, Microstructure};
use twinlab::fields::{BoxDomain, ScalarField};
use twinlab::hmeasure::{
    angular_spectrum, laminate_sequence, mass_identity_check, mollified_mass_bounds, noise_oscillation,
    oscillation, single_direction_check, spectrum_of, tiles, wave_support_check, SpectrumOptions, Window,
};
use twinlab::scaling::{
    blowup_direction, blowup_profile, box_counting_dimension, dyadic_scales, rescaling_audit, resolvable_h,
    BlowupProfile, TraceSet, AUDIT_CSV_HEADER,
};

use crate::config::{ExperimentConfig, Kind, Violation};
use crate::output::{Failure, OutputDir};

#[derive(Debug)]
pub enum RunError {
    Invalid(Vec<Violation>),
    /// Number of failed analyses; their outputs and the manifest are written.
    Analysis(usize),
    Io(anyhow::Error),
}

impl From<anyhow::Error> for RunError {
    fn from(e: anyhow::Error) -> Self {
        Self::Io(e)
    }
}

enum Built {
    Micro(Microstructure),
    Checkerboard(CheckerboardFields),
}

/// The construction at the finest `η`, plus the macro-interface table for clusters.
fn build(cfg: &ExperimentConfig, domain: &BoxDomain) -> twinlab::Result<(Built, Option<String>)> {
    let eta = cfg.finest_eta();
    let built = match cfg.kind {
        Kind::Laminate => Built::Micro(simple_laminate(&cfg.laminate.as_ref().expect("validated").spec, domain, eta)?),
        Kind::Checkerboard => {
            Built::Checkerboard(checkerboard(&cfg.checkerboard.as_ref().expect("validated").spec, domain)?)
        }
        Kind::Branch => Built::Micro(branched_habit_plane(&cfg.branch.as_ref().expect("validated").spec, domain, eta)?.ms),
        Kind::Cluster => {
            let c = clustering_laminate(&cfg.cluster.as_ref().expect("validated").spec, domain, eta)?;
            let table = c.interfaces_csv();
            return Ok((Built::Micro(c.ms), Some(table)));
        }
    };
    Ok((built, None))
}

/// Runs every enabled analysis, writing into `out_dir`. Invalid configs and
/// construction errors stop before any output is written.
pub fn run(cfg: &ExperimentConfig, config_text: &str, out_dir: &Path) -> Result<OutputDir, RunError> {
    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(RunError::Invalid(violations));
    }
    let domain = cfg.domain().map_err(|e| RunError::Invalid(vec![invalid(cfg, e)]))?;
    let (built, interfaces) = build(cfg, &domain).map_err(|e| RunError::Invalid(vec![invalid(cfg, e)]))?;

    let mut out = OutputDir::create(out_dir, config_text)?;
    if let Some(table) = interfaces {
        out.write_csv("construction", "interfaces.csv", "interfaces", &table)?;
    }
    let mut summary = BTreeMap::new();
    summary.insert("kind".to_string(), json!(cfg.kind));
    summary.insert("eta_sweep".to_string(), json!(cfg.eta_sweep));

    type Job<'a> = Box<dyn Fn(&mut OutputDir) -> anyhow::Result<Value> + 'a>;
    let mut jobs: Vec<(&str, Job)> = Vec::new();
    let ms = match &built {
        Built::Micro(ms) => Some(ms),
        Built::Checkerboard(_) => None,
    };
    if cfg.analyses.energy {
        let ms = ms.expect("validated");
        jobs.push(("energy", Box::new(move |o| energy_analysis(cfg, ms, o))));
    }
    if cfg.analyses.besov {
        jobs.push(("besov", Box::new(|o| besov_analysis(cfg, &built, &domain, o))));
    }
    if cfg.analyses.hmeasure {
        jobs.push(("hmeasure", Box::new(|o| hmeasure_analysis(cfg, &domain, o))));
    }
    if cfg.analyses.scaling {
        let ms = ms.expect("validated");
        jobs.push(("scaling", Box::new(move |o| scaling_analysis(cfg, ms, o))));
    }

    for (name, job) in jobs {
        let start = Instant::now();
        match job(&mut out) {
            Ok(v) => {
                summary.insert(name.to_string(), v);
            }
            Err(e) => {
                out.manifest.failures.push(Failure { analysis: name.into(), error: format!("{e:#}") });
                summary.insert(name.to_string(), json!({ "error": format!("{e:#}") }));
            }
        }
        out.manifest.timings_ms.insert(name.into(), start.elapsed().as_millis());
    }
    let text = serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)?;
    out.write("summary", "summary.json", &(text + "\n"))?;
    out.finish()?;
    match out.manifest.failures.len() {
        0 => Ok(out),
        n => Err(RunError::Analysis(n)),
    }
}

fn invalid(cfg: &ExperimentConfig, e: twinlab::Error) -> Violation {
    let field = match cfg.kind {
        Kind::Laminate => "laminate",
        Kind::Checkerboard => "checkerboard",
        Kind::Branch => "branch",
        Kind::Cluster => "cluster",
    };
    Violation { field: field.into(), message: e.to_string() }
}

fn energy_analysis(cfg: &ExperimentConfig, ms: &Microstructure, out: &mut OutputDir) -> anyhow::Result<Value> {
    let mut table = format!("{}\n", EnergyBreakdown::CSV_HEADER);
    let mut rows = Vec::new();
    for &eta in &cfg.eta_sweep {
        let e = energy(&ms.with_eta(eta)?, EnergyOptions::default())?;
        table.push_str(&e.csv_row());
        table.push('\n');
        rows.push(json!({ "eta": eta, "elastic": e.elastic, "interfacial": e.interfacial, "total": e.total }));
    }
    out.write_csv("energy", "energy.csv", "energy", &table)?;
    Ok(json!({ "rows": rows }))
}

fn default_epsilon(cfg: &ExperimentConfig) -> Option<f64> {
    let mass = |t: f64| 18.0 * t * (1.0 - t);
    match cfg.kind {
        Kind::Laminate => cfg.laminate.as_ref().map(|s| mass(s.spec.fraction)),
        Kind::Branch => Some(mass(HABIT_FRACTION)),
        Kind::Cluster => Some(mass(0.5)),
        Kind::Checkerboard => None,
    }
}

fn besov_analysis(cfg: &ExperimentConfig, built: &Built, domain: &BoxDomain, out: &mut OutputDir) -> anyhow::Result<Value> {
    let region = cfg.besov_region(domain)?;
    let hs = cfg.besov.h_values.clone().unwrap_or_else(|| dyadic_h_set(&region, domain));
    let dirs = standard_directions(domain);
    let component = PhaseIndex::new(cfg.besov.component.unwrap_or(1))?;
    let chi = match built {
        Built::Micro(ms) => ms.chi.indicator(component),
        Built::Checkerboard(cb) => {
            // χ_A is 1 on the regions (1,1) and (1,0).
            let (r0, r2) = (cb.regions[0].samples(), cb.regions[2].samples());
            ScalarField::new(domain.clone(), r0.iter().zip(r2).map(|(a, b)| a + b).collect())?
        }
    };
    let mut report = besov_seminorm(&chi, &region, &hs, &dirs)?;
    let mut summary = report.summary_json();
    let comparator = match (built, cfg.besov.epsilon.or_else(|| default_epsilon(cfg))) {
        (Built::Micro(ms), Some(epsilon)) => {
            let e = energy(ms, EnergyOptions::default())?;
            match report.attach_comparator(&e, &region, Comparator::Epsilon { epsilon }) {
                Ok(()) => json!({ "mode": "epsilon", "epsilon": epsilon }),
                Err(err) => json!({ "mode": "epsilon", "epsilon": epsilon, "skipped": err.to_string() }),
            }
        }
        _ => json!({ "skipped": "no microstructure energy to compare with" }),
    };
    let spreads: Vec<Option<f64>> = (0..report.directions.len()).map(|d| report.ratio_spread(d)).collect();
    summary["comparator"] = comparator;
    summary["ratio_spread"] = json!(spreads);
    out.write_csv("besov", "besov_report.csv", "besov", &report.to_csv())?;
    Ok(summary)
}

fn hmeasure_analysis(cfg: &ExperimentConfig, domain: &BoxDomain, out: &mut OutputDir) -> anyhow::Result<Value> {
    let spec = &cfg.laminate.as_ref().expect("validated").spec;
    let seq = laminate_sequence(spec, domain, &cfg.eta_sweep)?;
    let o = domain.origin();
    let e = domain.extent();
    let center = Vec3::from(std::array::from_fn::<f64, 3, _>(|a| o[a] + 0.5 * e[a]));
    let window = Window::centered(center, cfg.hmeasure.window_sides, domain)?;
    let i = PhaseIndex::martensite(cfg.hmeasure.component)?;
    let opts = SpectrumOptions { fine: true, ..Default::default() };
    let spectrum = angular_spectrum(&seq, i, &window, 0.0, &opts)?;
    let mass = mass_identity_check(seq.theta(), &spectrum.finest, &window)?;
    let wave = wave_support_check(&seq, i, &window)?;
    let mollified = mollified_mass_bounds(&seq, i, &window, &cfg.hmeasure.deltas)?;
    let noise = spectrum_of(&noise_oscillation(domain, i, cfg.seed)?, &window, &SpectrumOptions::default())?;
    let support = twinlab::crystallography::admissible_normals(i)?;
    let f = oscillation(seq.finest(), seq.theta(), i, 0.0)?;
    let map = single_direction_check(&f, &tiles(domain, cfg.hmeasure.tile_sides)?)?;
    out.write_csv("hmeasure", "spectrum.csv", "spectrum", &spectrum.finest.to_csv())?;
    out.write_csv("hmeasure", "violations.csv", "violations", &map.to_csv())?;
    Ok(json!({
        "window": window.describe(),
        "cone_fraction": spectrum.finest.cone_fraction(&[spec.normal, spec.normal.partner()]),
        "extrapolated_cones": spectrum.extrapolated_cones,
        "mass_identity": mass,
        "wave_support": wave,
        "mollified": mollified,
        "noise_off_support": noise.cone_fraction(&support).map(|c| 1.0 - c),
        "flagged_tiles": map.flagged(),
    }))
}

fn scaling_analysis(cfg: &ExperimentConfig, ms: &Microstructure, out: &mut OutputDir) -> anyhow::Result<Value> {
    let rows = rescaling_audit(ms, &cfg.scaling.r_values)?;
    let mut table = format!("{AUDIT_CSV_HEADER}\n");
    for r in &rows {
        table.push_str(&r.csv_row());
        table.push('\n');
    }
    out.write_csv("scaling", "audit.csv", "audit", &table)?;
    let worst = rows.iter().map(|r| (r.ratio - 1.0).abs()).fold(0.0, f64::max);
    let mut summary = json!({ "audit_worst_deviation": worst });

    match cfg.kind {
        Kind::Branch => {
            let spec = &cfg.branch.as_ref().expect("validated").spec;
            let d = blowup_direction(spec.habit_normal, spec.twin_normal)?;
            let dom = ms.domain();
            let xp = dom.to_lab(&Vec3::new(0.0, 0.5 * dom.extent()[1], 0.0));
            let hs = resolvable_h(ms, spec.habit_normal, &xp, &d);
            let prof = blowup_profile(ms, spec.habit_normal, spec.twin_normal, &xp, &d, &hs)?;
            out.write_csv("scaling", "blowup.csv", "blowup", &prof.to_csv())?;
            summary["blowup"] = blowup_summary(&prof);
        }
        Kind::Cluster => {
            let spec = &cfg.cluster.as_ref().expect("validated").spec;
            let generations = cfg.scaling.trace_generations.unwrap_or(spec.generations);
            let trace = TraceSet::new(cantor_trace(spec.ratio()?, generations)?, 1.0)?;
            let [a, b] = cfg.scaling.box_exponents;
            let bc = box_counting_dimension(&trace, &dyadic_scales(1.0, a, b))?;
            let mut table = String::from("scale,count\n");
            for (s, c) in bc.scales.iter().zip(&bc.counts) {
                table.push_str(&format!("{s:?},{c}\n"));
            }
            out.write_csv("scaling", "trace_boxes.csv", "trace_boxes", &table)?;

            let width = 1.0 - 2.0 * spec.ratio()?;
            let dir = Vec3::from(spec.transversal_direction);
            let mut table = String::from("eta,width,total,ratio\n");
            let mut ratios = Vec::new();
            for &eta in &cfg.eta_sweep {
                let big = gap_energy_per_area(width, eta, &dir)?;
                let small = gap_energy_per_area(0.5 * width, eta, &dir)?;
                let ratio = big.total / small.total;
                table.push_str(&format!("{eta:?},{width:?},{:?},{ratio:?}\n", big.total));
                ratios.push(ratio);
            }
            out.write_csv("scaling", "gap_energy.csv", "gap_energy", &table)?;
            summary["box_counting"] = json!({ "dimension": bc.dimension, "residual": bc.residual });
            summary["gap_energy_ratio"] = json!(ratios);
        }
        _ => {}
    }
    Ok(summary)
}

fn blowup_summary(p: &BlowupProfile) -> Value {
    json!({
        "fitted_slope": p.fitted_slope,
        "fit_residual": p.fit_residual,
        "valid_family": p.valid_family(),
        "lower_bound_ratio": p.lower_bound_ratio(),
        "resolution_limit": p.resolution_limit,
    })
}
