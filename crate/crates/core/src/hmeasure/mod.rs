//! Empirical H-measures: windowed Fourier mass of strain oscillations along a
//! sequence of microstructures with decreasing `η`.

mod checks;
mod spectrum;
mod window;

pub use checks::{
    mass_density, mass_identity_check, mollified_mass_bounds, single_direction_check,
    transport_ratio, wave_support_check, MassIdentityReport, MollifiedMass, TileEntry,
    TransportEntry, TransportProfile, ViolationMap, WaveSupportReport,
};
pub use spectrum::{
    hemisphere_points, spectrum_of, AngularSpectrum, SpectrumOptions, CONE_HALF_ANGLE_DEG,
};
pub use window::{tiles, Window, SUPPORT_FRACTION};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constructions::{simple_laminate, LaminateSpec};
use crate::crystallography::PhaseIndex;
use crate::energy::Microstructure;
use crate::error::{Error, Result};
use crate::fields::{mollify, BoxDomain, MollifierSpec, ScalarField};

/// Microstructures on one grid with `η` halving from member to member, plus the
/// analytic weak-limit fractions `θ_0..θ_3`.
#[derive(Debug, Clone)]
pub struct EtaSequence {
    members: Vec<Microstructure>,
    theta: [ScalarField; 4],
}

impl EtaSequence {
    pub fn new(members: Vec<Microstructure>, theta: [ScalarField; 4]) -> Result<Self> {
        if members.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "need at least 3 members, got {}",
                members.len()
            )));
        }
        let dom = members[0].domain();
        for w in members.windows(2) {
            if !w[1].domain().same_grid(dom) {
                return Err(Error::InvalidArgument(
                    "sequence members must share the grid".into(),
                ));
            }
            if ((w[1].eta / w[0].eta) - 0.5).abs() > 1e-9 {
                return Err(Error::InvalidArgument(
                    "eta must halve from member to member".into(),
                ));
            }
        }
        if theta.iter().any(|t| !t.domain().same_grid(dom)) {
            return Err(Error::InvalidArgument(
                "limit fractions must live on the sequence grid".into(),
            ));
        }
        Ok(Self { members, theta })
    }

    pub fn members(&self) -> &[Microstructure] {
        &self.members
    }

    pub fn theta(&self) -> &[ScalarField; 4] {
        &self.theta
    }

    pub fn finest(&self) -> &Microstructure {
        self.members.last().expect("nonempty")
    }

    pub fn domain(&self) -> &BoxDomain {
        self.members[0].domain()
    }
}

/// Laminates with period `p_0 (η/η_0)^{1/3}`, so the interfacial energy stays bounded.
pub fn laminate_sequence(
    spec: &LaminateSpec,
    domain: &BoxDomain,
    etas: &[f64],
) -> Result<EtaSequence> {
    let eta0 = *etas
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty eta list".into()))?;
    let members = etas
        .iter()
        .map(|&eta| {
            let mut s = *spec;
            s.period = spec.period * (eta / eta0).cbrt();
            simple_laminate(&s, domain, eta)
        })
        .collect::<Result<Vec<_>>>()?;
    let (i, j) = spec.variant_pair;
    let theta = std::array::from_fn(|k| {
        let v = if k == i.index() {
            spec.fraction
        } else if k == j.index() {
            1.0 - spec.fraction
        } else {
            0.0
        };
        ScalarField::constant(domain.clone(), v)
    });
    EtaSequence::new(members, theta)
}

/// `∂_i u_i - (1 - 3θ_i - θ_0)`, both mollified at radius `δ η^{1/3}` when `δ > 0`.
pub fn oscillation(
    ms: &Microstructure,
    theta: &[ScalarField; 4],
    i: PhaseIndex,
    delta: f64,
) -> Result<ScalarField> {
    let c = PhaseIndex::martensite(i.value())?.index() - 1;
    let dom = ms.domain();
    let grad = ms.u.gradient()?;
    let du = ScalarField::new(dom.clone(), grad.iter().map(|g| g[(c, c)]).collect())?;
    let ti = theta[i.index()].samples();
    let t0 = theta[0].samples();
    let lim = ScalarField::new(
        dom.clone(),
        ti.iter().zip(t0).map(|(a, b)| 1.0 - 3.0 * a - b).collect(),
    )?;
    if delta > 0.0 {
        let m = MollifierSpec::for_scale(delta, ms.eta)?;
        let a = mollify(&du, &m)?.field;
        let b = mollify(&lim, &m)?.field;
        Ok(&a - &b)
    } else {
        Ok(&du - &lim)
    }
}

/// Spectra of one component at the two finest members, with a first-order
/// extrapolation in the period scale `η^{1/3}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceSpectrum {
    pub finest: AngularSpectrum,
    pub next: AngularSpectrum,
    pub extrapolated_cones: [f64; 6],
    pub extrapolated_other: f64,
}

pub fn angular_spectrum(
    seq: &EtaSequence,
    i: PhaseIndex,
    window: &Window,
    delta: f64,
    opts: &SpectrumOptions,
) -> Result<SequenceSpectrum> {
    let n = seq.members.len();
    let at = |k: usize| -> Result<AngularSpectrum> {
        let ms = &seq.members[k];
        if delta > 0.0 {
            window.check(ms.domain(), MollifierSpec::for_scale(delta, ms.eta)?.radius)?;
        }
        let f = oscillation(ms, &seq.theta, i, delta)?;
        let mut s = spectrum_of(&f, window, opts)?;
        s.component = i.value();
        s.eta = ms.eta;
        s.delta = delta;
        Ok(s)
    };
    let finest = at(n - 1)?;
    let next = at(n - 2)?;
    let q = 2f64.cbrt();
    let ex = |f: f64, c: f64| (q * f - c) / (q - 1.0);
    Ok(SequenceSpectrum {
        extrapolated_cones: std::array::from_fn(|k| ex(finest.cone_mass[k], next.cone_mass[k])),
        extrapolated_other: ex(finest.other, next.other),
        finest,
        next,
    })
}

/// Oscillation `1 - 3χ_i - χ_0` of uniformly random labels, minus its mean.
pub fn noise_oscillation(domain: &BoxDomain, i: PhaseIndex, seed: u64) -> Result<ScalarField> {
    PhaseIndex::martensite(i.value())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..domain.len())
        .map(|_| {
            let l: u8 = rng.random_range(0..4);
            1.0 - 3.0 * f64::from(u8::from(l == i.value())) - f64::from(u8::from(l == 0))
        })
        .collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    ScalarField::new(domain.clone(), raw.into_iter().map(|v| v - mean).collect())
}
