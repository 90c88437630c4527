use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix3;
use rayon::prelude::*;

use super::domain::BoxDomain;
use crate::crystallography::{SymmetricTensor3, Vec3};
use crate::error::{Error, Result};

/// A closed-form displacement `u(x)` with its exact gradient `Du(x)`, both in the lab.
pub trait DisplacementSampler: Send + Sync + fmt::Debug {
    fn value(&self, x: &Vec3) -> Vec3;
    fn gradient(&self, x: &Vec3) -> Matrix3<f64>;
}

/// `u(x) = F x + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub matrix: Matrix3<f64>,
    pub offset: Vec3,
}

impl AffineMap {
    pub fn linear(matrix: Matrix3<f64>) -> Self {
        Self {
            matrix,
            offset: Vec3::zeros(),
        }
    }

    pub fn zero() -> Self {
        Self::linear(Matrix3::zeros())
    }
}

impl DisplacementSampler for AffineMap {
    fn value(&self, x: &Vec3) -> Vec3 {
        self.matrix * x + self.offset
    }
    fn gradient(&self, _x: &Vec3) -> Matrix3<f64> {
        self.matrix
    }
}

/// `û(x̂) = u(r x̂) / r`, so that `Dû(x̂) = Du(r x̂)`.
#[derive(Debug, Clone)]
pub struct Dilated {
    inner: Arc<dyn DisplacementSampler>,
    r: f64,
}

impl Dilated {
    pub fn new(inner: Arc<dyn DisplacementSampler>, r: f64) -> Self {
        Self { inner, r }
    }
}

impl DisplacementSampler for Dilated {
    fn value(&self, x: &Vec3) -> Vec3 {
        self.inner.value(&(self.r * x)) / self.r
    }
    fn gradient(&self, x: &Vec3) -> Matrix3<f64> {
        self.inner.gradient(&(self.r * x))
    }
}

/// `u + A x + c` for a skew `A`: same strain as `u`.
#[derive(Debug, Clone)]
pub struct PlusAffine {
    pub inner: Arc<dyn DisplacementSampler>,
    pub map: AffineMap,
}

impl DisplacementSampler for PlusAffine {
    fn value(&self, x: &Vec3) -> Vec3 {
        self.inner.value(x) + self.map.value(x)
    }
    fn gradient(&self, x: &Vec3) -> Matrix3<f64> {
        self.inner.gradient(x) + self.map.matrix
    }
}

/// Grid samples of a displacement, optionally backed by the closed form they came from.
#[derive(Clone)]
pub struct DisplacementField {
    domain: BoxDomain,
    samples: Vec<Vec3>,
    sampler: Option<Arc<dyn DisplacementSampler>>,
}

impl fmt::Debug for DisplacementField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DisplacementField")
            .field("resolution", &self.domain.resolution())
            .field("analytic", &self.sampler.is_some())
            .finish()
    }
}

impl DisplacementField {
    pub fn from_samples(domain: BoxDomain, samples: Vec<Vec3>) -> Result<Self> {
        if samples.len() != domain.len() {
            return Err(Error::InvalidDomain(format!(
                "{} samples for {} cells",
                samples.len(),
                domain.len()
            )));
        }
        Ok(Self {
            domain,
            samples,
            sampler: None,
        })
    }

    /// Samples the closed form at cell centers and keeps it for exact derivatives.
    pub fn from_sampler(domain: BoxDomain, sampler: Arc<dyn DisplacementSampler>) -> Self {
        let samples = (0..domain.len())
            .into_par_iter()
            .map(|i| sampler.value(&domain.center(i)))
            .collect();
        Self {
            domain,
            samples,
            sampler: Some(sampler),
        }
    }

    pub fn zero(domain: BoxDomain) -> Self {
        Self::from_sampler(domain, Arc::new(AffineMap::zero()))
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn samples(&self) -> &[Vec3] {
        &self.samples
    }

    pub fn sampler(&self) -> Option<&Arc<dyn DisplacementSampler>> {
        self.sampler.as_ref()
    }

    /// Drops the closed form, forcing finite differences downstream.
    pub fn grid_only(&self) -> Self {
        Self {
            domain: self.domain.clone(),
            samples: self.samples.clone(),
            sampler: None,
        }
    }

    /// `Du` at every cell: exact when a sampler is attached, else finite differences.
    pub fn gradient(&self) -> Result<Vec<Matrix3<f64>>> {
        if let Some(s) = &self.sampler {
            let d = &self.domain;
            return Ok((0..d.len())
                .into_par_iter()
                .map(|i| s.gradient(&d.center(i)))
                .collect());
        }
        self.grid_gradient()
    }

    fn grid_gradient(&self) -> Result<Vec<Matrix3<f64>>> {
        let d = &self.domain;
        let n = d.resolution();
        if n.iter().any(|&m| m < 2) {
            return Err(Error::ResolutionTooSmall("need 2 cells per axis".into()));
        }
        let dx = d.cell_size();
        let frame = d.frame();
        Ok((0..d.len())
            .into_par_iter()
            .map(|idx| {
                let c = d.coords(idx);
                // Columns: derivative along each grid axis.
                let mut dg = Matrix3::zeros();
                for a in 0..3 {
                    let mut lo = c;
                    let mut hi = c;
                    let span = if c[a] == 0 {
                        hi[a] += 1;
                        1.0
                    } else if c[a] == n[a] - 1 {
                        lo[a] -= 1;
                        1.0
                    } else {
                        lo[a] -= 1;
                        hi[a] += 1;
                        2.0
                    };
                    let du = (self.samples[d.index(hi[0], hi[1], hi[2])]
                        - self.samples[d.index(lo[0], lo[1], lo[2])])
                        / (span * dx[a]);
                    dg.set_column(a, &du);
                }
                dg * frame
            })
            .collect())
    }
}

/// One symmetric tensor per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainField {
    domain: BoxDomain,
    values: Vec<SymmetricTensor3>,
}

impl StrainField {
    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn values(&self) -> &[SymmetricTensor3] {
        &self.values
    }
}

/// `e(u) = (Du + Du^T) / 2` per cell.
pub fn symmetric_gradient(u: &DisplacementField) -> Result<StrainField> {
    let values = u
        .gradient()?
        .par_iter()
        .map(SymmetricTensor3::sym)
        .collect();
    Ok(StrainField {
        domain: u.domain().clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystallography::{well_strain, PhaseIndex};

    fn e1_map() -> AffineMap {
        AffineMap::linear(well_strain(PhaseIndex::new(1).unwrap()).to_matrix())
    }

    #[test]
    fn affine_strain_exact() {
        let d = BoxDomain::unit_cube(4).unwrap();
        let u = DisplacementField::from_sampler(d, Arc::new(e1_map()));
        let e1 = well_strain(PhaseIndex::new(1).unwrap());
        for e in symmetric_gradient(&u).unwrap().values() {
            assert_eq!(*e, e1);
        }
    }

    #[test]
    fn grid_path_matches_affine_in_rotated_frame() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = Matrix3::new(0.0, s, s, 0.0, -s, s, 1.0, 0.0, 0.0);
        let d = BoxDomain::with_frame([-0.5; 3], [1.0; 3], [5, 4, 3], r).unwrap();
        let f = Matrix3::new(1.0, 2.0, 0.0, -0.5, 0.3, 1.0, 0.0, 0.7, -1.0);
        let u = DisplacementField::from_sampler(d, Arc::new(AffineMap::linear(f))).grid_only();
        let want = SymmetricTensor3::sym(&f);
        for e in symmetric_gradient(&u).unwrap().values() {
            assert!(e.max_abs_diff(&want) < 1e-12);
        }
    }

    #[test]
    fn zero_displacement() {
        let u = DisplacementField::zero(BoxDomain::unit_cube(3).unwrap());
        assert!(symmetric_gradient(&u)
            .unwrap()
            .values()
            .iter()
            .all(|e| e.norm_squared() == 0.0));
    }

    #[test]
    fn dilation_keeps_gradient() {
        let inner: Arc<dyn DisplacementSampler> = Arc::new(e1_map());
        let d = Dilated::new(inner.clone(), 0.5);
        let x = Vec3::new(0.2, -0.4, 1.0);
        assert_eq!(d.gradient(&x), inner.gradient(&(0.5 * x)));
        assert!((d.value(&x) - inner.value(&(0.5 * x)) * 2.0).norm() < 1e-15);
    }
}
