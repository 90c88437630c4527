use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::domain::{BoxDomain, Region};
use crate::crystallography::Vec3;
use crate::error::{Error, Result};

/// One real sample per cell center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    domain: BoxDomain,
    samples: Vec<f64>,
}

impl ScalarField {
    pub fn new(domain: BoxDomain, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != domain.len() {
            return Err(Error::InvalidDomain(format!(
                "{} samples for {} cells",
                samples.len(),
                domain.len()
            )));
        }
        Ok(Self { domain, samples })
    }

    pub fn constant(domain: BoxDomain, value: f64) -> Self {
        let samples = vec![value; domain.len()];
        Self { domain, samples }
    }

    /// Samples `f` at every cell center (lab coordinates).
    pub fn from_fn<F>(domain: BoxDomain, f: F) -> Self
    where
        F: Fn(&Vec3) -> f64 + Sync,
    {
        let samples = (0..domain.len())
            .into_par_iter()
            .map(|i| f(&domain.center(i)))
            .collect();
        Self { domain, samples }
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        Self {
            domain: self.domain.clone(),
            samples: self.samples.par_iter().map(|&v| f(v)).collect(),
        }
    }

    /// Midpoint-rule integral over the domain.
    pub fn integral(&self) -> f64 {
        super::ordered_sum(self.samples.len(), |i| self.samples[i]) * self.domain.cell_volume()
    }

    pub fn integral_over(&self, region: &Region) -> f64 {
        region
            .cells(&self.domain)
            .iter()
            .map(|&i| self.samples[i])
            .sum::<f64>()
            * self.domain.cell_volume()
    }

    pub fn l1_norm(&self) -> f64 {
        super::ordered_sum(self.samples.len(), |i| self.samples[i].abs())
            * self.domain.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Whether every sample is exactly 0 or 1.
    pub fn is_indicator(&self) -> bool {
        self.samples.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn require_indicator(&self) -> Result<()> {
        match self.samples.iter().find(|&&v| v != 0.0 && v != 1.0) {
            Some(v) => Err(Error::NotIndicator(format!("found sample {v}"))),
            None => Ok(()),
        }
    }

    /// Value of the cell containing `x`.
    #[inline]
    pub fn sample_nearest(&self, x: &Vec3) -> Option<f64> {
        self.domain.nearest_cell(x).map(|i| self.samples[i])
    }

    /// Trilinear interpolation between cell centers, constant extrapolation in the
    /// outer half cells of non-periodic axes.
    #[inline]
    pub fn sample_trilinear(&self, x: &Vec3) -> Option<f64> {
        let s = self.domain.locate_grid(&self.domain.to_grid(x))?;
        let n = self.domain.resolution();
        let p = self.domain.periodic();
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        let mut w = [0.0; 3];
        for a in 0..3 {
            let t = s[a] - 0.5;
            let f = t.floor();
            let frac = t - f;
            let i0 = f as isize;
            let i1 = i0 + 1;
            let wrap = |i: isize| -> usize {
                if p[a] {
                    i.rem_euclid(n[a] as isize) as usize
                } else {
                    i.clamp(0, n[a] as isize - 1) as usize
                }
            };
            lo[a] = wrap(i0);
            hi[a] = wrap(i1);
            w[a] = frac;
        }
        let mut acc = 0.0;
        for corner in 0..8 {
            let mut weight = 1.0;
            let mut c = [0usize; 3];
            for a in 0..3 {
                if corner >> a & 1 == 1 {
                    weight *= w[a];
                    c[a] = hi[a];
                } else {
                    weight *= 1.0 - w[a];
                    c[a] = lo[a];
                }
            }
            if weight != 0.0 {
                acc += weight * self.samples[self.domain.index(c[0], c[1], c[2])];
            }
        }
        Some(acc)
    }
}

impl std::ops::Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        assert!(
            self.domain.same_grid(&rhs.domain),
            "fields live on different grids"
        );
        let samples = self
            .samples
            .iter()
            .zip(&rhs.samples)
            .map(|(a, b)| a - b)
            .collect();
        ScalarField {
            domain: self.domain.clone(),
            samples,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_of_constant() {
        let d = BoxDomain::new([0.0; 3], [2.0, 1.0, 0.5], [4, 3, 2]).unwrap();
        let f = ScalarField::constant(d, 3.0);
        assert!((f.integral() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn trilinear_reproduces_linear_fields_inside() {
        let d = BoxDomain::unit_cube(8).unwrap();
        let f = ScalarField::from_fn(d, |x| 1.0 + 2.0 * x.x - x.y + 0.5 * x.z);
        for x in [Vec3::new(0.3, 0.41, 0.77), Vec3::new(0.1, 0.5, 0.9)] {
            let want = 1.0 + 2.0 * x.x - x.y + 0.5 * x.z;
            assert!((f.sample_trilinear(&x).unwrap() - want).abs() < 1e-13);
        }
        assert!(f.sample_trilinear(&Vec3::new(1.5, 0.5, 0.5)).is_none());
    }

    #[test]
    fn indicator_detection() {
        let d = BoxDomain::unit_cube(2).unwrap();
        assert!(ScalarField::constant(d.clone(), 1.0).is_indicator());
        assert!(ScalarField::constant(d, 0.5).require_indicator().is_err());
    }
}
