use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{energy, rescale, EnergyOptions, Microstructure, RESCALING_EXPONENT};
use crate::error::{Error, Result};

pub const AUDIT_CSV_HEADER: &str = "r,ratio";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub r: f64,
    pub original: f64,
    pub rescaled: f64,
    /// `E_η̂(rescaled) / (r^{-3+2/3} E_η)`.
    pub ratio: f64,
}

impl AuditRow {
    pub fn csv_row(&self) -> String {
        format!("{:?},{:?}", self.r, self.ratio)
    }
}

pub fn rescaling_audit(ms: &Microstructure, r_values: &[f64]) -> Result<Vec<AuditRow>> {
    if let Some(r) = r_values.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "dilation factor {r} must be positive"
        )));
    }
    let opts = EnergyOptions::default();
    let original = energy(ms, opts)?.total;
    r_values
        .par_iter()
        .map(|&r| {
            let rescaled = energy(&rescale(ms, r)?, opts)?.total;
            let expected = r.powf(RESCALING_EXPONENT) * original;
            let ratio = if expected == 0.0 && rescaled == 0.0 {
                1.0
            } else {
                rescaled / expected
            };
            Ok(AuditRow {
                r,
                original,
                rescaled,
                ratio,
            })
        })
        .collect()
}
