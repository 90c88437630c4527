use twinlab::constructions::{twin_frame, LaminateSpec};
use twinlab::crystallography::{PhaseIndex, TwinNormal, Vec3};
use twinlab::fields::BoxDomain;
use twinlab::hmeasure::{
    angular_spectrum, laminate_sequence, mass_identity_check, mollified_mass_bounds,
    noise_oscillation, spectrum_of, wave_support_check, SpectrumOptions, Window,
};

fn p(i: u8) -> PhaseIndex {
    PhaseIndex::new(i).unwrap()
}

fn setup(fraction: f64) -> (twinlab::hmeasure::EtaSequence, Window) {
    let normal = TwinNormal::plus(3).unwrap();
    let spec = LaminateSpec {
        variant_pair: (p(1), p(2)),
        normal,
        fraction,
        period: 0.05,
    };
    let dom =
        BoxDomain::with_frame([0.0; 3], [1.0; 3], [1024, 32, 32], twin_frame(normal)).unwrap();
    let etas = [1e-3, 5e-4, 2.5e-4, 1.25e-4];
    let seq = laminate_sequence(&spec, &dom, &etas).unwrap();
    let w = Window::centered(Vec3::new(0.5, 0.5, 0.5), [0.75; 3], &dom).unwrap();
    (seq, w)
}

#[test]
fn laminate_mass_concentrates_on_its_normal() {
    let (seq, w) = setup(1.0 / 3.0);
    let s = angular_spectrum(&seq, p(1), &w, 0.0, &SpectrumOptions::default()).unwrap();
    let frac = s
        .finest
        .cone_fraction(&[TwinNormal::plus(3).unwrap()])
        .unwrap();
    println!("cone fraction {frac}");
    assert!(frac > 0.95);
    assert!((s.finest.total() / s.finest.windowed_l2 - 1.0).abs() < 1e-6);
}

#[test]
fn mass_identity_for_two_fractions() {
    for fraction in [1.0 / 3.0, 0.5] {
        let (seq, w) = setup(fraction);
        let s = angular_spectrum(&seq, p(1), &w, 0.0, &SpectrumOptions::default()).unwrap();
        let r = mass_identity_check(seq.theta(), &s.finest, &w).unwrap();
        println!("fraction {fraction}: {r:?}");
        assert!(r.deviation < 0.1);
    }
}

#[test]
fn wave_support_off_fraction_is_small() {
    let (seq, w) = setup(1.0 / 3.0);
    let r = wave_support_check(&seq, p(1), &w).unwrap();
    println!("{r:?}");
    assert!(r.off_support.last().unwrap().unwrap() < 0.05);
    assert!(r.decreasing);
}

#[test]
fn noise_is_not_supported_on_the_wave_cones() {
    let dom = BoxDomain::unit_cube(32).unwrap();
    let f = noise_oscillation(&dom, p(1), 7).unwrap();
    let w = Window::centered(Vec3::new(0.5, 0.5, 0.5), [0.75; 3], &dom).unwrap();
    let s = spectrum_of(&f, &w, &SpectrumOptions::default()).unwrap();
    let support = twinlab::crystallography::admissible_normals(p(1)).unwrap();
    let off = 1.0 - s.cone_fraction(&support).unwrap();
    println!("noise off-support {off}");
    assert!(off > 0.5);
}

#[test]
fn mollified_mass_respects_bounds() {
    let (seq, w) = setup(0.5);
    let deltas = [0.0, 0.125, 0.25, 0.625, 1.0, 1.5];
    let r = mollified_mass_bounds(&seq, p(1), &w, &deltas).unwrap();
    for m in &r {
        println!("{m:?}");
        assert!(m.upper_ok && m.lower_ok);
    }
    for m in &r[1..] {
        assert!(m.tau <= r[0].tau * 1.02);
    }
}

#[test]
fn single_direction_flags_only_macro_interfaces() {
    use twinlab::constructions::{clustering_laminate, ClusterSpec};
    use twinlab::fields::ScalarField;
    use twinlab::hmeasure::{oscillation, single_direction_check, tiles};

    let (seq, _) = setup(1.0 / 3.0);
    let dom = seq.domain();
    let f = oscillation(seq.finest(), seq.theta(), p(1), 0.0).unwrap();
    let lam_tiles = tiles(dom, [0.25, 0.5, 0.5]).unwrap();
    assert_eq!(single_direction_check(&f, &lam_tiles).unwrap().flagged(), 0);

    let spec = ClusterSpec::new(1.0 / 3.0, 1);
    let dom = spec.domain(128, 64).unwrap();
    let c = clustering_laminate(&spec, &dom, 1e-3).unwrap();
    let half = ScalarField::constant(dom.clone(), 0.5);
    let zero = ScalarField::constant(dom.clone(), 0.0);
    let theta = [zero.clone(), half.clone(), half, zero];
    let f = oscillation(&c.ms, &theta, p(1), 0.0).unwrap();
    let map = single_direction_check(&f, &tiles(&dom, [0.5, 0.5, 0.25]).unwrap()).unwrap();
    for t in &map.tiles {
        let straddles = c.interfaces.iter().any(|&z| (t.center.z - z).abs() < 0.125);
        println!(
            "{:.3} {} {:.3e} {} {:.3e} {}",
            t.center.z, t.first.0, t.first.1, t.second.0, t.second.1, t.flagged
        );
        if t.flagged {
            assert!(straddles);
        }
    }
    assert!(map.flagged() > 0);
}

#[test]
fn laminate_transport_numerator_vanishes() {
    use twinlab::hmeasure::transport_ratio;
    let (seq, w) = setup(0.5);
    let nu = TwinNormal::plus(3).unwrap();
    let d = nu.partner().unit();
    let small = Window::centered(Vec3::new(0.5, 0.4, 0.5), [0.5, 0.3, 0.5], seq.domain()).unwrap();
    let prof = transport_ratio(&seq, p(1), nu, &d, 0.25, &[small], 0.125).unwrap();
    println!("{:?}", prof);
    assert_eq!(prof.max_ratio(), 0.0);
    assert!(transport_ratio(&seq, p(1), nu, &nu.unit(), 0.25, &[w], 0.1).is_err());
}

#[test]
fn mollification_does_not_add_mass_to_any_bin() {
    let (seq, w) = setup(1.0 / 3.0);
    let r = mollified_mass_bounds(&seq, p(1), &w, &[0.0, 0.25, 0.5]).unwrap();
    let total: f64 = r[0].bins.iter().sum();
    for m in &r[1..] {
        for (a, b) in m.bins.iter().zip(&r[0].bins) {
            assert!(*a <= b + 1e-6 * total);
        }
    }
}
