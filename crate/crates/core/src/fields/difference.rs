use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::domain::Region;
use super::scalar::ScalarField;
use crate::crystallography::Vec3;
use crate::error::{Error, Result};

/// How `f(x + h d)` is read off the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Value of the containing cell; keeps indicators in `{0,1}`.
    Nearest,
    Trilinear,
}

impl Sampling {
    /// Nearest for indicators, trilinear otherwise.
    pub fn for_field(f: &ScalarField) -> Self {
        if f.is_indicator() {
            Self::Nearest
        } else {
            Self::Trilinear
        }
    }
}

fn check_step(d: &Vec3, h: f64) -> Result<Vec3> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "step h = {h} must be positive"
        )));
    }
    let n = d.norm();
    if !(n > 0.0) {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    Ok(d / n)
}

#[inline]
fn shifted(f: &ScalarField, idx: usize, step: &Vec3, sampling: Sampling) -> f64 {
    let x = f.domain().center(idx);
    let y = x + step;
    let other = match sampling {
        Sampling::Nearest => f.sample_nearest(&y),
        Sampling::Trilinear => f.sample_trilinear(&y),
    };
    match other {
        Some(v) => v - f.samples()[idx],
        None => 0.0,
    }
}

/// `∂_d^h f(x) = f(x + h d) - f(x)` where both points lie in the domain, else 0.
pub fn difference_quotient(f: &ScalarField, d: &Vec3, h: f64) -> Result<ScalarField> {
    difference_quotient_with(f, d, h, Sampling::for_field(f))
}

pub fn difference_quotient_with(
    f: &ScalarField,
    d: &Vec3,
    h: f64,
    sampling: Sampling,
) -> Result<ScalarField> {
    let step = check_step(d, h)? * h;
    let samples = (0..f.domain().len())
        .into_par_iter()
        .map(|i| shifted(f, i, &step, sampling))
        .collect();
    ScalarField::new(f.domain().clone(), samples)
}

/// `∫_U |∂_d^h f| dx` by cell sums over the cells of `U`, without materializing the field.
pub fn l1_difference_over(
    f: &ScalarField,
    region: &Region,
    d: &Vec3,
    h: f64,
    sampling: Sampling,
) -> Result<f64> {
    let step = check_step(d, h)? * h;
    let cells = region.cells(f.domain());
    let sum = super::ordered_sum(cells.len(), |j| shifted(f, cells[j], &step, sampling).abs());
    Ok(sum * f.domain().cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::BoxDomain;

    fn square_wave(n: usize, p: f64) -> ScalarField {
        let d = BoxDomain::new([0.0; 3], [1.0; 3], [n, 2, 2]).unwrap();
        ScalarField::from_fn(d, move |x| {
            f64::from(u8::from((x.x / p).rem_euclid(1.0) < 0.5))
        })
    }

    #[test]
    fn constant_gives_zero() {
        let f = ScalarField::constant(BoxDomain::unit_cube(6).unwrap(), 4.0);
        let g = difference_quotient(&f, &Vec3::new(1.0, 1.0, 0.0), 0.2).unwrap();
        assert!(g.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn square_wave_oracle() {
        let p = 0.25;
        let f = square_wave(512, p);
        let u = Region::new([0.25, 0.0, 0.0], [0.75, 1.0, 1.0]).unwrap();
        for h in [1.0 / 64.0, 1.0 / 32.0, 3.0 / 32.0] {
            let got = l1_difference_over(&f, &u, &Vec3::x(), h, Sampling::Nearest).unwrap();
            let want = 2.0 * h * u.volume() / p;
            assert!((got - want).abs() < 1e-12, "h={h}: {got} vs {want}");
        }
    }

    #[test]
    fn leaving_the_domain_gives_zero() {
        let f = square_wave(16, 0.25);
        let g = difference_quotient(&f, &Vec3::x(), 1.5).unwrap();
        assert!(g.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bounded_by_twice_the_norm() {
        let f = square_wave(64, 0.3);
        for h in [0.01, 0.1, 0.4] {
            let g = difference_quotient(&f, &Vec3::new(1.0, 0.3, 0.0), h).unwrap();
            assert!(g.l1_norm() <= 2.0 * f.l1_norm() + 1e-12);
        }
    }

    #[test]
    fn linear_in_the_field() {
        let d = BoxDomain::unit_cube(10).unwrap();
        let f = ScalarField::from_fn(d.clone(), |x| (3.0 * x.x).sin() + x.y);
        let g = ScalarField::from_fn(d, |x| x.z * x.x);
        let sum = ScalarField::new(
            f.domain().clone(),
            f.samples()
                .iter()
                .zip(g.samples())
                .map(|(a, b)| 2.0 * a + b)
                .collect(),
        )
        .unwrap();
        let dir = Vec3::new(0.2, 1.0, -0.4);
        let (df, dg, ds) = (
            difference_quotient_with(&f, &dir, 0.13, Sampling::Trilinear).unwrap(),
            difference_quotient_with(&g, &dir, 0.13, Sampling::Trilinear).unwrap(),
            difference_quotient_with(&sum, &dir, 0.13, Sampling::Trilinear).unwrap(),
        );
        for i in 0..ds.samples().len() {
            let want = 2.0 * df.samples()[i] + dg.samples()[i];
            assert!((ds.samples()[i] - want).abs() < 1e-12);
        }
    }
}
