//! Strain wells, twin normals and rank-one connections of the cubic-to-tetragonal
//! transformation in the geometrically linear setting.
//!
//! Everything here is exact: the wells are integer diagonal matrices and the twin
//! normals are stored as integer lattice directions, scaled by `1/sqrt(2)` only when
//! a unit vector is requested.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Tolerance on `sum(theta) = 1`.
pub const FRACTION_SUM_TOL: f64 = 1e-12;

/// A symmetric 3x3 matrix stored by its six independent entries.
///
/// Order is `[xx, yy, zz, yz, xz, xy]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymmetricTensor3(pub [f64; 6]);

impl SymmetricTensor3 {
    pub const ZERO: Self = Self([0.0; 6]);

    pub fn diagonal(d: [f64; 3]) -> Self {
        Self([d[0], d[1], d[2], 0.0, 0.0, 0.0])
    }

    /// Symmetric part of an arbitrary matrix.
    pub fn sym(m: &Matrix3<f64>) -> Self {
        Self([
            m[(0, 0)],
            m[(1, 1)],
            m[(2, 2)],
            0.5 * (m[(1, 2)] + m[(2, 1)]),
            0.5 * (m[(0, 2)] + m[(2, 0)]),
            0.5 * (m[(0, 1)] + m[(1, 0)]),
        ])
    }

    /// `a ⊙ b = (a ⊗ b + b ⊗ a) / 2`.
    pub fn sym_outer(a: &Vec3, b: &Vec3) -> Self {
        Self([
            a.x * b.x,
            a.y * b.y,
            a.z * b.z,
            0.5 * (a.y * b.z + a.z * b.y),
            0.5 * (a.x * b.z + a.z * b.x),
            0.5 * (a.x * b.y + a.y * b.x),
        ])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 0) => self.0[0],
            (1, 1) => self.0[1],
            (2, 2) => self.0[2],
            (1, 2) => self.0[3],
            (0, 2) => self.0[4],
            (0, 1) => self.0[5],
            _ => panic!("tensor index ({i}, {j}) out of range"),
        }
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        let [xx, yy, zz, yz, xz, xy] = self.0;
        Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz)
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    pub fn diag(&self) -> Vec3 {
        Vec3::new(self.0[0], self.0[1], self.0[2])
    }

    pub fn is_diagonal(&self) -> bool {
        self.0[3] == 0.0 && self.0[4] == 0.0 && self.0[5] == 0.0
    }

    /// Squared Frobenius norm `|e|^2 = sum_ij e_ij^2`.
    pub fn norm_squared(&self) -> f64 {
        let [xx, yy, zz, yz, xz, xy] = self.0;
        xx * xx + yy * yy + zz * zz + 2.0 * (yz * yz + xz * xz + xy * xy)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for SymmetricTensor3 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0) {
            *o += r;
        }
        Self(out)
    }
}

impl Sub for SymmetricTensor3 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0) {
            *o -= r;
        }
        Self(out)
    }
}

impl Mul<SymmetricTensor3> for f64 {
    type Output = SymmetricTensor3;
    fn mul(self, rhs: SymmetricTensor3) -> SymmetricTensor3 {
        SymmetricTensor3(rhs.0.map(|v| self * v))
    }
}

/// Phase label: 0 is austenite, 1..=3 are the martensite variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PhaseIndex(u8);

impl PhaseIndex {
    pub const AUSTENITE: Self = Self(0);
    pub const ALL: [Self; 4] = [Self(0), Self(1), Self(2), Self(3)];
    pub const MARTENSITE: [Self; 3] = [Self(1), Self(2), Self(3)];

    pub fn new(value: u8) -> Result<Self> {
        if value <= 3 {
            Ok(Self(value))
        } else {
            Err(Error::PhaseOutOfRange(value))
        }
    }

    pub fn martensite(value: u8) -> Result<Self> {
        match value {
            0 => Err(Error::AusteniteIndex),
            1..=3 => Ok(Self(value)),
            v => Err(Error::PhaseOutOfRange(v)),
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_austenite(self) -> bool {
        self.0 == 0
    }

    /// Cyclic successor among the martensite variants (3 wraps to 1).
    pub fn next(self) -> Result<Self> {
        self.require_martensite()?;
        Ok(Self(self.0 % 3 + 1))
    }

    /// Cyclic predecessor among the martensite variants (1 wraps to 3).
    pub fn prev(self) -> Result<Self> {
        self.require_martensite()?;
        Ok(Self((self.0 + 1) % 3 + 1))
    }

    fn require_martensite(self) -> Result<()> {
        if self.is_austenite() {
            Err(Error::AusteniteIndex)
        } else {
            Ok(())
        }
    }
}

impl TryFrom<u8> for PhaseIndex {
    type Error = Error;
    fn try_from(value: u8) -> Result<Self> {
        Self::new(value)
    }
}

impl From<PhaseIndex> for u8 {
    fn from(p: PhaseIndex) -> u8 {
        p.0
    }
}

impl fmt::Display for PhaseIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

/// One of the six (110)-type twin normals, grouped in the pairs `N_1, N_2, N_3`.
///
/// Serialized as its display form `nu_3^+`; parsing also accepts the short form `3+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TwinNormal {
    pair: u8,
    sign: Sign,
}

impl TwinNormal {
    pub fn new(pair: u8, sign: Sign) -> Result<Self> {
        match pair {
            1..=3 => Ok(Self { pair, sign }),
            0 => Err(Error::AusteniteIndex),
            p => Err(Error::PhaseOutOfRange(p)),
        }
    }

    pub fn plus(pair: u8) -> Result<Self> {
        Self::new(pair, Sign::Plus)
    }

    pub fn minus(pair: u8) -> Result<Self> {
        Self::new(pair, Sign::Minus)
    }

    /// All six normals in the order `ν_1^+, ν_1^-, ν_2^+, ν_2^-, ν_3^+, ν_3^-`.
    pub fn all() -> [Self; 6] {
        let mut out = [Self {
            pair: 1,
            sign: Sign::Plus,
        }; 6];
        for (k, n) in out.iter_mut().enumerate() {
            n.pair = (k / 2) as u8 + 1;
            n.sign = if k % 2 == 0 { Sign::Plus } else { Sign::Minus };
        }
        out
    }

    /// The two normals of pair `N_k`.
    pub fn pair_of(k: PhaseIndex) -> Result<[Self; 2]> {
        Ok([Self::plus(k.value())?, Self::minus(k.value())?])
    }

    pub fn pair(&self) -> u8 {
        self.pair
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// Position in [`TwinNormal::all`].
    pub fn ordinal(&self) -> usize {
        2 * (self.pair as usize - 1) + usize::from(self.sign == Sign::Minus)
    }

    /// Integer direction before normalization, in crystallographic order.
    pub fn lattice(&self) -> [i8; 3] {
        match (self.pair, self.sign) {
            (1, Sign::Plus) => [0, 1, 1],
            (1, Sign::Minus) => [0, 1, -1],
            (2, Sign::Plus) => [1, 0, 1],
            (2, Sign::Minus) => [-1, 0, 1],
            (3, Sign::Plus) => [1, 1, 0],
            (3, Sign::Minus) => [1, -1, 0],
            _ => unreachable!("pair validated on construction"),
        }
    }

    pub fn unit(&self) -> Vec3 {
        let [a, b, c] = self.lattice();
        Vec3::new(a as f64, b as f64, c as f64) * FRAC_1_SQRT_2
    }

    /// The other normal of the same pair.
    pub fn partner(&self) -> Self {
        Self {
            pair: self.pair,
            sign: match self.sign {
                Sign::Plus => Sign::Minus,
                Sign::Minus => Sign::Plus,
            },
        }
    }

    /// Whether `v` lies in the projective class `[ν] = {ν, -ν}` up to `tol` in angle (radians).
    pub fn class_contains(&self, v: &Vec3, tol: f64) -> bool {
        let n = v.norm();
        if n == 0.0 {
            return false;
        }
        (v.dot(&self.unit()).abs() / n).min(1.0).acos() <= tol
    }
}

impl std::str::FromStr for TwinNormal {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let short = t.strip_prefix("nu_").map_or(t.to_string(), |r| r.replace('^', ""));
        let bad = || Error::InvalidArgument(format!("cannot read a twin normal from {s:?}"));
        let (digits, sign) = match short.chars().last() {
            Some('+') => (&short[..short.len() - 1], Sign::Plus),
            Some('-') => (&short[..short.len() - 1], Sign::Minus),
            _ => return Err(bad()),
        };
        Self::new(digits.parse().map_err(|_| bad())?, sign)
    }
}

impl TryFrom<String> for TwinNormal {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TwinNormal> for String {
    fn from(n: TwinNormal) -> String {
        n.to_string()
    }
}

impl fmt::Display for TwinNormal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sign {
            Sign::Plus => '+',
            Sign::Minus => '-',
        };
        write!(f, "nu_{}^{}", self.pair, s)
    }
}

/// Volume fractions `θ_0..θ_3` of austenite and the three variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeFractions {
    theta: [f64; 4],
}

impl VolumeFractions {
    pub fn new(theta: [f64; 4]) -> Result<Self> {
        if let Some(t) = theta.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::InvalidFractions(format!("{t} is outside [0, 1]")));
        }
        let sum: f64 = theta.iter().sum();
        if (sum - 1.0).abs() > FRACTION_SUM_TOL {
            return Err(Error::InvalidFractions(format!(
                "fractions sum to {sum}, not 1"
            )));
        }
        Ok(Self { theta })
    }

    pub fn pure(phase: PhaseIndex) -> Self {
        let mut theta = [0.0; 4];
        theta[phase.index()] = 1.0;
        Self { theta }
    }

    pub fn theta(&self) -> [f64; 4] {
        self.theta
    }

    pub fn get(&self, phase: PhaseIndex) -> f64 {
        self.theta[phase.index()]
    }

    /// Average strain `Σ θ_i e_i`.
    pub fn mean_strain(&self) -> SymmetricTensor3 {
        PhaseIndex::ALL
            .iter()
            .fold(SymmetricTensor3::ZERO, |acc, &p| {
                acc + self.get(p) * well_strain(p)
            })
    }
}

/// The stress-free strain of a phase.
pub fn well_strain(i: PhaseIndex) -> SymmetricTensor3 {
    match i.value() {
        0 => SymmetricTensor3::ZERO,
        1 => SymmetricTensor3::diagonal([-2.0, 1.0, 1.0]),
        2 => SymmetricTensor3::diagonal([1.0, -2.0, 1.0]),
        3 => SymmetricTensor3::diagonal([1.0, 1.0, -2.0]),
        _ => unreachable!("PhaseIndex is validated"),
    }
}

/// `e_j - e_i = scale · ν^+ ⊙ ν^-` with both normals from the pair not in `{i, j}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankOneConnection {
    pub plus: TwinNormal,
    pub minus: TwinNormal,
    pub scale: f64,
}

impl RankOneConnection {
    pub fn reconstruct(&self) -> SymmetricTensor3 {
        self.scale * SymmetricTensor3::sym_outer(&self.plus.unit(), &self.minus.unit())
    }

    /// Amplitude `a` such that `e_j - e_i = sym(a ⊗ n)` when laminating with normal `n`.
    ///
    /// `n` must be one of the two normals of the connection.
    pub fn amplitude_for(&self, n: TwinNormal) -> Result<Vec3> {
        if n == self.plus {
            Ok(self.scale * self.minus.unit())
        } else if n == self.minus {
            Ok(self.scale * self.plus.unit())
        } else {
            Err(Error::InvalidArgument(format!(
                "{n} is not compatible with the pair ({}, {})",
                self.plus, self.minus
            )))
        }
    }
}

/// Decomposes `e_j - e_i`. Cyclic pairs `(1,2), (2,3), (3,1)` carry scale `+6`; the
/// reversed pairs keep the same canonical normals and flip the sign of the scale.
pub fn rank_one_decompose(i: PhaseIndex, j: PhaseIndex) -> Result<RankOneConnection> {
    if i.is_austenite() || j.is_austenite() {
        return Err(Error::AusteniteIndex);
    }
    if i == j {
        return Err(Error::SameVariant(i.value()));
    }
    let k = 6 - i.value() - j.value();
    let scale = if i.next()? == j { 6.0 } else { -6.0 };
    Ok(RankOneConnection {
        plus: TwinNormal::plus(k)?,
        minus: TwinNormal::minus(k)?,
        scale,
    })
}

/// The four normals of `N_{i+1} ∪ N_{i-1}`, along which component `i` may oscillate.
pub fn admissible_normals(i: PhaseIndex) -> Result<[TwinNormal; 4]> {
    let [a, b] = TwinNormal::pair_of(i.next()?)?;
    let [c, d] = TwinNormal::pair_of(i.prev()?)?;
    Ok([a, b, c, d])
}

/// `(∂_1u_1, ∂_2u_2, ∂_3u_3)` with `∂_iu_i = -3θ_i - θ_0 + 1`.
pub fn diagonal_gradient_from_fractions(theta: &VolumeFractions) -> Vec3 {
    let t = theta.theta();
    Vec3::from_fn(|i, _| -3.0 * t[i + 1] - t[0] + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(i: u8) -> PhaseIndex {
        PhaseIndex::new(i).unwrap()
    }

    #[test]
    fn normals_round_trip_through_text() {
        for n in TwinNormal::all() {
            assert_eq!(n.to_string().parse::<TwinNormal>().unwrap(), n);
            let json = serde_json::to_string(&n).unwrap();
            assert_eq!(serde_json::from_str::<TwinNormal>(&json).unwrap(), n);
        }
        assert_eq!("2-".parse::<TwinNormal>().unwrap(), TwinNormal::minus(2).unwrap());
        assert!("4+".parse::<TwinNormal>().is_err());
        assert!("3".parse::<TwinNormal>().is_err());
        assert!(serde_json::from_str::<TwinNormal>("\"0+\"").is_err());
    }

    #[test]
    fn wells_match_table() {
        assert_eq!(well_strain(p(0)), SymmetricTensor3::ZERO);
        assert_eq!(
            well_strain(p(1)),
            SymmetricTensor3::diagonal([-2.0, 1.0, 1.0])
        );
        assert_eq!(
            well_strain(p(3)),
            SymmetricTensor3::diagonal([1.0, 1.0, -2.0])
        );
        for q in PhaseIndex::ALL {
            assert_eq!(well_strain(q).trace(), 0.0);
            assert!(well_strain(q).is_diagonal());
        }
    }

    #[test]
    fn well_norm() {
        assert_eq!(well_strain(p(1)).norm_squared(), 6.0);
    }

    #[test]
    fn normals_match_table() {
        let expect: [[i8; 3]; 6] = [
            [0, 1, 1],
            [0, 1, -1],
            [1, 0, 1],
            [-1, 0, 1],
            [1, 1, 0],
            [1, -1, 0],
        ];
        for (n, e) in TwinNormal::all().iter().zip(expect) {
            assert_eq!(n.lattice(), e);
            assert!((n.unit().norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn normals_orthogonal_within_pairs_and_not_parallel() {
        let all = TwinNormal::all();
        for n in all {
            assert_eq!(n.unit().dot(&n.partner().unit()), 0.0);
        }
        for (a, na) in all.iter().enumerate() {
            for nb in &all[a + 1..] {
                assert!(na.unit().cross(&nb.unit()).norm() > 0.5);
            }
        }
    }

    #[test]
    fn ordinal_round_trips() {
        for (k, n) in TwinNormal::all().iter().enumerate() {
            assert_eq!(n.ordinal(), k);
        }
    }

    #[test]
    fn cyclic_connections() {
        let c = rank_one_decompose(p(1), p(2)).unwrap();
        assert_eq!(
            (c.plus, c.minus, c.scale),
            (
                TwinNormal::plus(3).unwrap(),
                TwinNormal::minus(3).unwrap(),
                6.0
            )
        );
        let rebuilt = c.reconstruct();
        assert!(rebuilt.max_abs_diff(&SymmetricTensor3::diagonal([3.0, -3.0, 0.0])) < 1e-14);

        let c = rank_one_decompose(p(2), p(3)).unwrap();
        assert_eq!(c.plus.pair(), 1);
        assert_eq!(c.scale, 6.0);
    }

    #[test]
    fn reversed_pair_flips_scale() {
        let c = rank_one_decompose(p(2), p(1)).unwrap();
        assert_eq!(c.plus, TwinNormal::plus(3).unwrap());
        assert_eq!(c.scale, -6.0);
    }

    #[test]
    fn all_ordered_pairs_reconstruct() {
        for i in PhaseIndex::MARTENSITE {
            for j in PhaseIndex::MARTENSITE {
                if i == j {
                    assert!(matches!(
                        rank_one_decompose(i, j),
                        Err(Error::SameVariant(_))
                    ));
                    continue;
                }
                let c = rank_one_decompose(i, j).unwrap();
                let diff = well_strain(j) - well_strain(i);
                assert!(c.reconstruct().max_abs_diff(&diff) <= 1e-14, "({i},{j})");
            }
        }
    }

    #[test]
    fn decompose_rejects_austenite() {
        assert!(matches!(
            rank_one_decompose(p(0), p(2)),
            Err(Error::AusteniteIndex)
        ));
    }

    #[test]
    fn amplitude_gives_rank_one_jump() {
        let c = rank_one_decompose(p(1), p(2)).unwrap();
        for n in [c.plus, c.minus] {
            let a = c.amplitude_for(n).unwrap();
            let jump = SymmetricTensor3::sym_outer(&a, &n.unit());
            assert!(jump.max_abs_diff(&(well_strain(p(2)) - well_strain(p(1)))) < 1e-14);
        }
        assert!(c.amplitude_for(TwinNormal::plus(1).unwrap()).is_err());
    }

    #[test]
    fn admissible_sets() {
        let pairs = |i| admissible_normals(p(i)).unwrap().map(|n| n.pair());
        assert_eq!(pairs(1), [2, 2, 3, 3]);
        assert_eq!(pairs(2), [3, 3, 1, 1]);
        assert_eq!(pairs(3), [1, 1, 2, 2]);
        assert!(admissible_normals(p(0)).is_err());
    }

    #[test]
    fn cycling_skips_austenite() {
        assert_eq!(p(3).next().unwrap(), p(1));
        assert_eq!(p(1).prev().unwrap(), p(3));
        assert_eq!(p(2).prev().unwrap(), p(1));
        assert!(p(0).next().is_err());
        assert!(PhaseIndex::new(4).is_err());
    }

    #[test]
    fn gradient_dictionary() {
        let theta = VolumeFractions::new([0.0, 1.0 / 3.0, 2.0 / 3.0, 0.0]).unwrap();
        let g = diagonal_gradient_from_fractions(&theta);
        assert!((g - Vec3::new(0.0, -1.0, 1.0)).norm() < 1e-15);
        assert!((g - theta.mean_strain().diag()).norm() < 1e-15);

        let aus = VolumeFractions::pure(p(0));
        assert_eq!(diagonal_gradient_from_fractions(&aus), Vec3::zeros());
        for q in PhaseIndex::ALL {
            let g = diagonal_gradient_from_fractions(&VolumeFractions::pure(q));
            assert_eq!(g, well_strain(q).diag());
        }
    }

    #[test]
    fn fractions_validate() {
        assert!(VolumeFractions::new([0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(VolumeFractions::new([-0.1, 0.5, 0.6, 0.0]).is_err());
    }

    #[test]
    fn class_membership() {
        let n = TwinNormal::plus(3).unwrap();
        assert!(n.class_contains(&(-n.unit()), 1e-12));
        assert!(!n.class_contains(&n.partner().unit(), 0.1));
    }
}
