use std::sync::Arc;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::aligned_axis;
use crate::crystallography::{rank_one_decompose, well_strain, PhaseIndex, TwinNormal, Vec3};
use crate::energy::Microstructure;
use crate::error::{Error, Result};
use crate::fields::{BoxDomain, DisplacementField, DisplacementSampler, PartitionField};

/// Variants `i` and `j` alternating along `normal`; `fraction` is the share of `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaminateSpec {
    pub variant_pair: (PhaseIndex, PhaseIndex),
    pub normal: TwinNormal,
    pub fraction: f64,
    pub period: f64,
}

impl LaminateSpec {
    pub fn validate(&self) -> Result<()> {
        let (i, j) = self.variant_pair;
        let c = rank_one_decompose(i, j)?;
        if self.normal.pair() != c.plus.pair() {
            return Err(Error::InvalidConstruction(format!(
                "{} cannot twin variants {i} and {j}; use a normal from N_{}",
                self.normal,
                c.plus.pair()
            )));
        }
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return Err(Error::InvalidConstruction(format!(
                "fraction {} is outside (0, 1)",
                self.fraction
            )));
        }
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(Error::InvalidConstruction(format!(
                "period {} must be positive",
                self.period
            )));
        }
        Ok(())
    }

    pub fn profile(&self) -> LaminateProfile {
        LaminateProfile {
            fraction: self.fraction,
            period: self.period,
        }
    }
}

/// One-dimensional layout of a laminate along `s = x·ν`: the first variant fills the
/// centered band `[(1-λ)p/2, (1+λ)p/2)` of every period, so both interfaces of each
/// period are interior to `[0, kp]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaminateProfile {
    pub fraction: f64,
    pub period: f64,
}

impl LaminateProfile {
    #[inline]
    pub fn is_first(&self, s: f64) -> bool {
        let r = (s / self.period).rem_euclid(1.0);
        let lo = 0.5 * (1.0 - self.fraction);
        (lo..lo + self.fraction).contains(&r)
    }

    /// `∫_0^s 1_{second}(t) dt`.
    #[inline]
    pub fn second_measure(&self, s: f64) -> f64 {
        let p = self.period;
        let m = (s / p).floor();
        let r = s - m * p;
        let half = 0.5 * (1.0 - self.fraction) * p;
        let band = self.fraction * p;
        let within = r.min(half) + (r - half - band).max(0.0);
        m * (1.0 - self.fraction) * p + within
    }

    /// Interface coordinates in `[lo, hi]`.
    pub fn interfaces(&self, lo: f64, hi: f64) -> Vec<f64> {
        let p = self.period;
        let a = 0.5 * (1.0 - self.fraction) * p;
        let b = a + self.fraction * p;
        let mut out = Vec::new();
        let mut m = (lo / p).floor() - 1.0;
        while m * p <= hi {
            for s in [m * p + a, m * p + b] {
                if s >= lo && s <= hi {
                    out.push(s);
                }
            }
            m += 1.0;
        }
        out
    }
}

/// `u(x) = e_i x + a G(x·ν)` with `G` the running measure of variant `j`.
#[derive(Debug, Clone)]
struct LaminateSampler {
    base: Matrix3<f64>,
    amplitude: Vec3,
    normal: Vec3,
    profile: LaminateProfile,
}

impl DisplacementSampler for LaminateSampler {
    fn value(&self, x: &Vec3) -> Vec3 {
        self.base * x + self.amplitude * self.profile.second_measure(x.dot(&self.normal))
    }

    fn gradient(&self, x: &Vec3) -> Matrix3<f64> {
        if self.profile.is_first(x.dot(&self.normal)) {
            self.base
        } else {
            self.base + self.amplitude * self.normal.transpose()
        }
    }
}

/// A simple twin. The domain frame must carry `spec.normal` as a grid axis.
pub fn simple_laminate(
    spec: &LaminateSpec,
    domain: &BoxDomain,
    eta: f64,
) -> Result<Microstructure> {
    spec.validate()?;
    let nu = spec.normal.unit();
    if aligned_axis(domain, &nu).is_none() {
        return Err(Error::InvalidConstruction(format!(
            "no grid axis is parallel to {}; build the domain with twin_frame",
            spec.normal
        )));
    }
    let (i, j) = spec.variant_pair;
    let amplitude = rank_one_decompose(i, j)?.amplitude_for(spec.normal)?;
    let profile = spec.profile();
    let sampler = LaminateSampler {
        base: well_strain(i).to_matrix(),
        amplitude,
        normal: nu,
        profile,
    };
    let chi = PartitionField::from_fn(domain.clone(), |x| {
        if profile.is_first(x.dot(&nu)) {
            i
        } else {
            j
        }
    });
    let u = DisplacementField::from_sampler(domain.clone(), Arc::new(sampler));
    Microstructure::new(u, chi, eta)
}
