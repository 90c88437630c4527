use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::displacement::DisplacementField;
use super::domain::BoxDomain;
use super::scalar::ScalarField;
use crate::crystallography::Vec3;
use crate::error::{Error, Result};
use crate::fft::convolve_periodic;

/// Smooth radial bump `c exp(-1/(1-|x|^2))` on the unit ball, scaled to `radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub radius: f64,
}

/// `∫_{B_1} exp(-1/(1-|x|^2)) dx`, by the radial integral `4π ∫_0^1 r² e^{-1/(1-r²)} dr`.
fn unit_bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(radial_bump_integral)
}

fn radial_bump_integral() -> f64 {
    // The integrand is flat to all orders at both ends, so the trapezoid rule is spectrally accurate.
    let n = 4000;
    let h = 1.0 / n as f64;
    let s: f64 = (1..n)
        .map(|k| {
            let r = k as f64 * h;
            r * r * (-1.0 / (1.0 - r * r)).exp()
        })
        .sum();
    4.0 * std::f64::consts::PI * s * h
}

#[inline]
fn bump(s2: f64) -> f64 {
    if s2 < 1.0 {
        (-1.0 / (1.0 - s2)).exp()
    } else {
        0.0
    }
}

impl MollifierSpec {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "mollifier radius {radius} must be positive"
            )));
        }
        Ok(Self { radius })
    }

    /// Radius `δ η^{1/3}` used to regularize a displacement at scale `η`.
    pub fn for_scale(delta: f64, eta: f64) -> Result<Self> {
        Self::new(delta * eta.cbrt())
    }

    /// Continuous profile `φ_r(x)`, integrating to one over space.
    pub fn profile(&self, x: &Vec3) -> f64 {
        let s2 = x.norm_squared() / (self.radius * self.radius);
        bump(s2) / (unit_bump_mass() * self.radius.powi(3))
    }

    /// The kernel sampled at periodic grid offsets, normalized to sum one.
    fn kernel(&self, domain: &BoxDomain) -> Vec<f64> {
        let n = domain.resolution();
        let dx = domain.cell_size();
        let mut k = vec![0.0; domain.len()];
        let offset = |i: usize, a: usize| crate::fft::signed_index(i, n[a]) * dx[a] / self.radius;
        for i in 0..n[0] {
            let a = offset(i, 0);
            if a.abs() >= 1.0 {
                continue;
            }
            for j in 0..n[1] {
                let b = offset(j, 1);
                if b.abs() >= 1.0 {
                    continue;
                }
                for l in 0..n[2] {
                    let c = offset(l, 2);
                    k[domain.index(i, j, l)] = bump(a * a + b * b + c * c);
                }
            }
        }
        let total: f64 = k.iter().sum();
        if total > 0.0 {
            k.iter_mut().for_each(|v| *v /= total);
        } else {
            k[0] = 1.0;
        }
        k
    }

    fn check(&self, domain: &BoxDomain) -> Result<bool> {
        let half = 0.5 * domain.extent().min();
        if self.radius > half {
            return Err(Error::MollifierTooWide {
                radius: self.radius,
                half_extent: half,
            });
        }
        Ok(self.radius >= domain.min_cell_width())
    }
}

/// Result of a mollification; `applied` is false when the radius was below one cell.
#[derive(Debug, Clone)]
pub struct Mollified<T> {
    pub field: T,
    pub applied: bool,
}

/// Periodic convolution `φ_r * f` over the whole grid.
pub fn mollify(f: &ScalarField, m: &MollifierSpec) -> Result<Mollified<ScalarField>> {
    if !m.check(f.domain())? {
        return Ok(Mollified {
            field: f.clone(),
            applied: false,
        });
    }
    let d = f.domain();
    let out = convolve_periodic(f.samples(), &m.kernel(d), d.resolution());
    Ok(Mollified {
        field: ScalarField::new(d.clone(), out)?,
        applied: true,
    })
}

/// Component-wise mollification. The result carries no closed form.
pub fn mollify_displacement(
    u: &DisplacementField,
    m: &MollifierSpec,
) -> Result<Mollified<DisplacementField>> {
    if !m.check(u.domain())? {
        return Ok(Mollified {
            field: u.clone(),
            applied: false,
        });
    }
    let d = u.domain();
    let kernel = m.kernel(d);
    let comps: Vec<Vec<f64>> = (0..3)
        .map(|c| {
            let s: Vec<f64> = u.samples().iter().map(|v| v[c]).collect();
            convolve_periodic(&s, &kernel, d.resolution())
        })
        .collect();
    let samples = (0..d.len())
        .map(|i| Vec3::new(comps[0][i], comps[1][i], comps[2][i]))
        .collect();
    Ok(Mollified {
        field: DisplacementField::from_samples(d.clone(), samples)?,
        applied: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_has_unit_mass() {
        let m = MollifierSpec::new(0.7).unwrap();
        // Radial quadrature in the scaled variable, independent of the normalization routine.
        let n = 20000;
        let h = m.radius / n as f64;
        let mass: f64 = (1..n)
            .map(|k| {
                let r = k as f64 * h;
                4.0 * std::f64::consts::PI * r * r * m.profile(&Vec3::new(r, 0.0, 0.0))
            })
            .sum::<f64>()
            * h;
        assert!((mass - 1.0).abs() < 1e-8, "{mass}");
        assert_eq!(m.profile(&Vec3::new(0.7, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn constant_preserved() {
        let d = BoxDomain::unit_cube(16).unwrap();
        let f = ScalarField::constant(d, 2.5);
        let g = mollify(&f, &MollifierSpec::new(0.2).unwrap()).unwrap();
        assert!(g.applied);
        assert!(g.field.samples().iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn sub_cell_radius_is_a_no_op() {
        let d = BoxDomain::unit_cube(4).unwrap();
        let f = ScalarField::from_fn(d, |x| x.x);
        let g = mollify(&f, &MollifierSpec::new(0.1).unwrap()).unwrap();
        assert!(!g.applied);
        assert_eq!(g.field, f);
    }

    #[test]
    fn too_wide_is_an_error() {
        let d = BoxDomain::unit_cube(8).unwrap();
        let f = ScalarField::constant(d, 1.0);
        assert!(matches!(
            mollify(&f, &MollifierSpec::new(0.6).unwrap()),
            Err(Error::MollifierTooWide { .. })
        ));
    }
}
