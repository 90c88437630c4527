use twinlab::constructions::{branched_habit_plane, BranchTreeSpec, Zone};
use twinlab::crystallography::PhaseIndex;
use twinlab::energy::{energy, EnergyOptions};

/// Per-area elastic energy of the branched tree, integrated by hand: layer `k` carries
/// the constant misfit `|sym(a⊗ν)|² φ_z²` on the moving lamella of width `λp/2`, and the
/// boundary layer carries a damped triangle wave.
fn elastic_oracle(spec: &BranchTreeSpec, eta: f64) -> f64 {
    let lam = 1.0 / 3.0;
    // a = ±6 (1,-1,0)/√2, ν = (0,1,1)/√2: |sym(a⊗ν)|² = (|a|² + (a·ν)²)/2 = (36 + 9)/2
    let coef_nu = 22.5;
    // n = (1,1,0)/√2 and a ⊥ n: |sym(a⊗n)|² = |a|²/2
    let coef_n = 18.0;
    let mut total = 0.0;
    let levels: Vec<f64> = (0..=spec.depth)
        .map(|k| spec.top * spec.layer_thickness_ratio.powi(k as i32))
        .collect();
    for k in 0..spec.depth {
        let p = spec.base_period / 2f64.powi(k as i32);
        let l = levels[k] - levels[k + 1];
        let phi_z = (1.0 - lam) * p / (2.0 * l);
        total += coef_nu * phi_z * phi_z * (lam * p / 2.0) / p * l;
    }
    let zd = levels[spec.depth];
    let pd = spec.base_period / 2f64.powi(spec.depth as i32);
    // ⟨φ_D²⟩ of a triangle wave with amplitude λ(1-λ)p
    let n = 100_000;
    let mean_sq: f64 = (0..n)
        .map(|j| {
            let w = (j as f64 + 0.5) / n as f64;
            let phi = if w < lam {
                -(1.0 - lam) * w
            } else {
                -(1.0 - lam) * lam + lam * (w - lam)
            };
            (phi * pd).powi(2)
        })
        .sum::<f64>()
        / n as f64;
    total += coef_nu * mean_sq / zd + coef_n * lam * (1.0 - lam) * zd / 3.0;
    eta.powf(-2.0 / 3.0) * total
}

#[test]
fn branched_elastic_energy_matches_hand_integration() {
    let spec = BranchTreeSpec::new(3, 0.25);
    let dom = spec.domain(2048, 64).unwrap();
    let eta = 0.01;
    let b = branched_habit_plane(&spec, &dom, eta).unwrap();
    let e = energy(&b.ms, EnergyOptions::default()).unwrap();
    let face_area = dom.extent()[1] * dom.extent()[2];
    let oracle = elastic_oracle(&spec, eta);
    let got = e.elastic / face_area;
    assert!(
        (got / oracle - 1.0).abs() < 0.02,
        "grid {got} vs oracle {oracle}"
    );

    let reported: f64 = b.layers.iter().map(|l| l.elastic_per_area).sum();
    assert!(reported < oracle);
}

#[test]
fn branched_labels_match_the_lemma_hypotheses() {
    let spec = BranchTreeSpec::new(2, 0.25);
    let dom = spec.domain(256, 64).unwrap();
    let b = branched_habit_plane(&spec, &dom, 0.1).unwrap();
    let nu = spec.habit_normal.unit();
    for k in 0..dom.len() {
        let z = dom.center(k).dot(&nu);
        let label = b.ms.chi.label(k);
        assert_ne!(label.value(), 3);
        assert_eq!(label == PhaseIndex::AUSTENITE, z < 0.0);
    }
    let pat = spec.pattern();
    assert_eq!(pat.zone(0.9), Zone::Bulk);
}

#[test]
fn branched_displacement_is_continuous() {
    let spec = BranchTreeSpec::new(4, 0.25);
    let dom = spec.domain(256, 128).unwrap();
    let b = branched_habit_plane(&spec, &dom, 0.1).unwrap();
    let s = b.ms.u.sampler().unwrap();
    let nu = spec.habit_normal.unit();
    let lateral = dom.axis(1);
    let pat = spec.pattern();
    let mut worst = 0.0f64;
    for k in 0..=spec.depth {
        let z = pat.level(k);
        for j in 0..400 {
            let x = z * nu + (j as f64 * 7.3e-4) * lateral;
            let jump = s.value(&(x + 1e-13 * nu)) - s.value(&(x - 1e-13 * nu));
            worst = worst.max(jump.norm());
        }
    }
    for j in 0..400 {
        let x = (j as f64 * 7.3e-4) * lateral;
        worst = worst.max((s.value(&(x + 1e-13 * nu)) - s.value(&(x - 1e-13 * nu))).norm());
    }
    assert!(worst < 1e-12 * dom.diameter(), "{worst}");
}

#[test]
fn per_layer_energies_are_geometric_under_equipartition() {
    let spec = BranchTreeSpec::new(8, 0.25);
    let dom = spec.domain(64, 1024).unwrap();
    let b = branched_habit_plane(&spec, &dom, 0.01).unwrap();
    let ratios: Vec<f64> = b
        .layers
        .windows(2)
        .map(|w| w[1].elastic_per_area / w[0].elastic_per_area)
        .collect();
    for r in &ratios {
        assert!((r - ratios[0]).abs() < 1e-12);
    }
    // p²/L shrinks by 4^{-1} / ρ = 2^{-1/2} per layer
    assert!((ratios[0] - 0.5f64.sqrt()).abs() < 1e-12);
    let total: f64 = b
        .layers
        .iter()
        .map(|l| l.elastic_per_area + l.interfacial_per_area)
        .sum();
    assert!(total.is_finite());
}
