use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the discrete hypothesis, per unit of `t`.
pub const ODE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OdeStatus {
    Holds,
    /// `f' ≤ (f g)^{1/2}` fails on the interval starting at this sample; the conclusion is not checked.
    HypothesisViolated {
        interval: usize,
    },
    /// The hypothesis holds but `f ≤ t²⨍g` fails at this sample.
    ConclusionViolated {
        sample: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeReport {
    pub status: OdeStatus,
    /// Smallest `t²⨍_0^t g / f(t)` over samples with `f > 0`; infinite when `f ≡ 0`.
    pub worst_margin: Option<f64>,
    /// Largest `f' - (f g)^{1/2}` over the intervals.
    pub worst_hypothesis_excess: f64,
}

impl OdeReport {
    pub fn holds(&self) -> bool {
        self.status == OdeStatus::Holds
    }
}

/// Samples of `f` and `g` on the uniform grid `t_j = j/(n-1)` of `[0, 1]`.
///
/// On each interval the difference quotient of `f` is compared with the root of the
/// product of the interval means of `f` and `g`; the running average of `g` uses the
/// trapezoid rule.
pub fn ode_bound_check(f: &[f64], g: &[f64]) -> Result<OdeReport> {
    if f.len() != g.len() || f.len() < 2 {
        return Err(Error::InvalidArgument(
            "f and g need the same length, at least 2".into(),
        ));
    }
    if f[0] != 0.0 {
        return Err(Error::InvalidArgument(format!(
            "f(0) = {} must vanish",
            f[0]
        )));
    }
    if let Some(v) = g.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidArgument(format!("g takes the value {v}")));
    }
    if let Some(v) = f.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("f takes the value {v}")));
    }
    let n = f.len();
    let dt = 1.0 / (n - 1) as f64;

    let mut worst_excess = f64::NEG_INFINITY;
    let mut first_bad = None;
    for j in 0..n - 1 {
        let slope = (f[j + 1] - f[j]) / dt;
        let bound = (0.25 * (f[j] + f[j + 1]) * (g[j] + g[j + 1])).sqrt();
        let excess = slope - bound;
        worst_excess = worst_excess.max(excess);
        if excess > ODE_SLACK && first_bad.is_none() {
            first_bad = Some(j);
        }
    }
    if let Some(interval) = first_bad {
        return Ok(OdeReport {
            status: OdeStatus::HypothesisViolated { interval },
            worst_margin: None,
            worst_hypothesis_excess: worst_excess,
        });
    }

    let mut integral = 0.0;
    let mut worst = f64::INFINITY;
    let mut status = OdeStatus::Holds;
    for j in 1..n {
        integral += 0.5 * dt * (g[j - 1] + g[j]);
        let t = j as f64 * dt;
        let rhs = t * integral;
        if f[j] > 0.0 {
            worst = worst.min(rhs / f[j]);
        }
        if f[j] > rhs + ODE_SLACK * t && status == OdeStatus::Holds {
            status = OdeStatus::ConclusionViolated { sample: j };
        }
    }
    Ok(OdeReport {
        status,
        worst_margin: Some(worst),
        worst_hypothesis_excess: worst_excess,
    })
}
