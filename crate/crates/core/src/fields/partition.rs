use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::domain::BoxDomain;
use super::scalar::ScalarField;
use crate::crystallography::{PhaseIndex, Vec3, VolumeFractions};
use crate::error::{Error, Result};

/// One phase label per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionField {
    domain: BoxDomain,
    labels: Vec<PhaseIndex>,
}

impl PartitionField {
    pub fn new(domain: BoxDomain, labels: Vec<PhaseIndex>) -> Result<Self> {
        if labels.len() != domain.len() {
            return Err(Error::InvalidDomain(format!(
                "{} labels for {} cells",
                labels.len(),
                domain.len()
            )));
        }
        Ok(Self { domain, labels })
    }

    pub fn uniform(domain: BoxDomain, phase: PhaseIndex) -> Self {
        let labels = vec![phase; domain.len()];
        Self { domain, labels }
    }

    pub fn from_fn<F>(domain: BoxDomain, f: F) -> Self
    where
        F: Fn(&Vec3) -> PhaseIndex + Sync,
    {
        let labels = (0..domain.len())
            .into_par_iter()
            .map(|i| f(&domain.center(i)))
            .collect();
        Self { domain, labels }
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn labels(&self) -> &[PhaseIndex] {
        &self.labels
    }

    pub fn label(&self, idx: usize) -> PhaseIndex {
        self.labels[idx]
    }

    /// The one-hot field `χ_i`.
    pub fn indicator(&self, phase: PhaseIndex) -> ScalarField {
        let samples = self
            .labels
            .par_iter()
            .map(|&l| f64::from(u8::from(l == phase)))
            .collect();
        ScalarField::new(self.domain.clone(), samples).expect("same domain")
    }

    /// Domain-averaged fractions of the four phases.
    pub fn fractions(&self) -> VolumeFractions {
        let mut counts = [0usize; 4];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        let n = self.labels.len() as f64;
        let mut theta = counts.map(|c| c as f64 / n);
        // Absorb rounding so the sum is exactly one.
        let rest: f64 = theta[1..].iter().sum();
        theta[0] = (1.0 - rest).max(0.0);
        VolumeFractions::new(theta).expect("counts give valid fractions")
    }

    pub fn with_domain(&self, domain: BoxDomain) -> Result<Self> {
        if domain.resolution() != self.domain.resolution() {
            return Err(Error::InvalidDomain("resolution mismatch".into()));
        }
        Ok(Self {
            domain,
            labels: self.labels.clone(),
        })
    }
}
