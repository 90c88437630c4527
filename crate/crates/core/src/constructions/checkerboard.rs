use serde::{Deserialize, Serialize};

use crate::crystallography::{PhaseIndex, TwinNormal};
use crate::error::{Error, Result};
use crate::fields::{BoxDomain, ScalarField};

/// A periodic subset of the line: `{s : ((s - offset)/period) mod 1 < fraction}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSet {
    pub period: f64,
    pub fraction: f64,
    #[serde(default)]
    pub offset: f64,
}

impl PeriodicSet {
    pub const EMPTY: Self = Self {
        period: 1.0,
        fraction: 0.0,
        offset: 0.0,
    };

    pub fn contains(&self, s: f64) -> bool {
        ((s - self.offset) / self.period).rem_euclid(1.0) < self.fraction
    }
}

/// Planar checkerboard of variant `i` with the two neighbouring variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckerboardSpec {
    pub i: PhaseIndex,
    /// A normal from `N_{i+1}`; `A` is read along it.
    pub nu_plus_one: TwinNormal,
    /// A normal from `N_{i-1}`; `B` is read along it.
    pub nu_minus_one: TwinNormal,
    pub a: f64,
    pub b: f64,
    pub set_a: PeriodicSet,
    pub set_b: PeriodicSet,
}

impl CheckerboardSpec {
    pub fn validate(&self) -> Result<()> {
        let up = self.i.next()?;
        let down = self.i.prev()?;
        if self.nu_plus_one.pair() != up.value() || self.nu_minus_one.pair() != down.value() {
            return Err(Error::InvalidConstruction(format!(
                "normals must come from N_{up} and N_{down}, got {} and {}",
                self.nu_plus_one, self.nu_minus_one
            )));
        }
        if self.a < 0.0 || self.b < 0.0 || (self.a + self.b - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConstruction(format!(
                "need a, b >= 0 with a + b = 1, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        for s in [&self.set_a, &self.set_b] {
            if !(s.period > 0.0) || !(0.0..=1.0).contains(&s.fraction) {
                return Err(Error::InvalidConstruction(
                    "periodic set needs period > 0 and fraction in [0, 1]".into(),
                ));
            }
        }
        Ok(())
    }

    /// Whether the strict hypothesis `a > 0, b > 0` of the checkerboard estimate holds.
    pub fn is_strict(&self) -> bool {
        self.a > 0.0 && self.b > 0.0
    }

    /// `1/min(a, b)`, the constant in the checkerboard comparator.
    pub fn comparator_factor(&self) -> Result<f64> {
        if !self.is_strict() {
            return Err(Error::InvalidConstruction(
                "the checkerboard estimate needs a > 0 and b > 0".into(),
            ));
        }
        Ok(1.0 / self.a.min(self.b))
    }
}

/// Limit volume fractions of a checkerboard and the indicators of its four
/// constancy regions.
#[derive(Debug, Clone)]
pub struct CheckerboardFields {
    /// `θ_0..θ_3`.
    pub theta: [ScalarField; 4],
    /// Regions where `(χ_A, χ_B)` is `(1,1)`, `(0,1)`, `(1,0)`, `(0,0)`; on them `θ_i` is
    /// `0`, `1-b`, `1-a`, `1` respectively.
    pub regions: [ScalarField; 4],
}

pub fn checkerboard(spec: &CheckerboardSpec, domain: &BoxDomain) -> Result<CheckerboardFields> {
    spec.validate()?;
    let np = spec.nu_plus_one.unit();
    let nm = spec.nu_minus_one.unit();
    let in_a = |x: &crate::crystallography::Vec3| spec.set_a.contains(x.dot(&np));
    let in_b = |x: &crate::crystallography::Vec3| spec.set_b.contains(x.dot(&nm));
    let ind = |v: bool| f64::from(u8::from(v));

    let i = spec.i.index();
    let up = spec.i.next()?.index();
    let down = spec.i.prev()?.index();
    let mut theta: [ScalarField; 4] =
        std::array::from_fn(|_| ScalarField::constant(domain.clone(), 0.0));
    theta[i] = ScalarField::from_fn(domain.clone(), |x| {
        1.0 - spec.a * ind(in_a(x)) - spec.b * ind(in_b(x))
    });
    theta[up] = ScalarField::from_fn(domain.clone(), |x| spec.b * ind(in_b(x)));
    theta[down] = ScalarField::from_fn(domain.clone(), |x| spec.a * ind(in_a(x)));

    let regions = [(true, true), (false, true), (true, false), (false, false)].map(|(wa, wb)| {
        ScalarField::from_fn(domain.clone(), |x| ind(in_a(x) == wa && in_b(x) == wb))
    });
    Ok(CheckerboardFields { theta, regions })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(i: u8) -> PhaseIndex {
        PhaseIndex::new(i).unwrap()
    }

    fn spec(a: f64, set_a: PeriodicSet, set_b: PeriodicSet) -> CheckerboardSpec {
        CheckerboardSpec {
            i: p(1),
            nu_plus_one: TwinNormal::plus(2).unwrap(),
            nu_minus_one: TwinNormal::plus(3).unwrap(),
            a,
            b: 1.0 - a,
            set_a,
            set_b,
        }
    }

    #[test]
    fn empty_sets_give_pure_variant() {
        let d = BoxDomain::unit_cube(6).unwrap();
        let f = checkerboard(&spec(0.5, PeriodicSet::EMPTY, PeriodicSet::EMPTY), &d).unwrap();
        assert!(f.theta[1].samples().iter().all(|&v| v == 1.0));
        assert!(f.regions[3].samples().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn four_regions_and_their_fractions() {
        let d = BoxDomain::unit_cube(16).unwrap();
        let half = PeriodicSet {
            period: 0.3,
            fraction: 0.5,
            offset: 0.0,
        };
        let f = checkerboard(&spec(0.5, half, half), &d).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for k in 0..d.len() {
            let t: [f64; 4] = std::array::from_fn(|q| f.theta[q].samples()[k]);
            assert_eq!(t[0], 0.0);
            assert!((t[1] + t[2] + t[3] - 1.0).abs() < 1e-15);
            let covered: f64 = f.regions.iter().map(|r| r.samples()[k]).sum();
            assert_eq!(covered, 1.0);
            seen.insert([t[1], t[2], t[3]].map(|v| (v * 2.0) as u8));
        }
        let want: std::collections::BTreeSet<_> = [[2, 0, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1]]
            .into_iter()
            .collect();
        assert_eq!(seen, want);
    }

    #[test]
    fn validation() {
        let mut s = spec(0.5, PeriodicSet::EMPTY, PeriodicSet::EMPTY);
        s.b = 0.7;
        assert!(s.validate().is_err());
        let mut s = spec(0.5, PeriodicSet::EMPTY, PeriodicSet::EMPTY);
        s.nu_plus_one = TwinNormal::plus(3).unwrap();
        assert!(s.validate().is_err());
        assert!(!spec(0.0, PeriodicSet::EMPTY, PeriodicSet::EMPTY).is_strict());
        assert_eq!(
            spec(0.5, PeriodicSet::EMPTY, PeriodicSet::EMPTY)
                .comparator_factor()
                .unwrap(),
            2.0
        );
    }
}
