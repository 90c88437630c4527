use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::fit_loglog;

/// Points on a transversal segment `[0, ambient_length]`, sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSet {
    points: Vec<f64>,
    ambient_length: f64,
}

impl TraceSet {
    pub fn new(mut points: Vec<f64>, ambient_length: f64) -> Result<Self> {
        if !(ambient_length > 0.0) || !ambient_length.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "segment length {ambient_length} must be positive"
            )));
        }
        if let Some(p) = points.iter().find(|&&p| !(p > 0.0 && p < ambient_length)) {
            return Err(Error::InvalidArgument(format!(
                "point {p} is not inside (0, {ambient_length})"
            )));
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        Ok(Self {
            points,
            ambient_length,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn ambient_length(&self) -> f64 {
        self.ambient_length
    }

    /// Number of boxes `[jε, (j+1)ε)` that meet the set.
    pub fn covering_count(&self, eps: f64) -> usize {
        self.points
            .iter()
            .map(|p| (p / eps).floor() as i64)
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// `x ↦ shift + scale·x` on the points; the segment becomes `[0, shift + scale·L]`.
    pub fn affine(&self, shift: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || shift < 0.0 {
            return Err(Error::InvalidArgument(
                "affine map needs scale > 0 and shift >= 0".into(),
            ));
        }
        Self::new(
            self.points.iter().map(|p| shift + scale * p).collect(),
            shift + scale * self.ambient_length,
        )
    }
}

/// `ambient · 2^{-k}` for `k` in `from..=to`.
pub fn dyadic_scales(ambient: f64, from: u32, to: u32) -> Vec<f64> {
    (from..=to)
        .map(|k| ambient * 0.5f64.powi(k as i32))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCounting {
    pub dimension: f64,
    pub residual: f64,
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Box-counting dimension: slope of `ln N(ε)` against `ln(1/ε)`.
pub fn box_counting_dimension(t: &TraceSet, scales: &[f64]) -> Result<BoxCounting> {
    if t.points.is_empty() {
        return Err(Error::Degenerate("empty trace".into()));
    }
    if scales.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "need at least 5 scales, got {}",
            scales.len()
        )));
    }
    if scales.iter().any(|&s| !(s > 0.0) || s > t.ambient_length) {
        return Err(Error::InvalidArgument(
            "scales must lie in (0, ambient length]".into(),
        ));
    }
    let (lo, hi) = scales
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &s| (a.min(s), b.max(s)));
    if hi / lo < 100.0 - 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "scales span {:.1}, need two decades",
            hi / lo
        )));
    }
    let counts: Vec<usize> = scales.iter().map(|&s| t.covering_count(s)).collect();
    let inv: Vec<f64> = scales.iter().map(|s| 1.0 / s).collect();
    let (dimension, residual) = if t.points.len() == 1 {
        (0.0, 0.0)
    } else {
        let f = fit_loglog(&inv, &counts.iter().map(|&c| c as f64).collect::<Vec<_>>())?;
        (f.slope, f.residual)
    };
    Ok(BoxCounting {
        dimension,
        residual,
        scales: scales.to_vec(),
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{cantor_ratio, cantor_trace};

    #[test]
    fn single_point_has_dimension_zero() {
        let t = TraceSet::new(vec![0.3], 1.0).unwrap();
        let b = box_counting_dimension(&t, &dyadic_scales(1.0, 1, 10)).unwrap();
        assert_eq!(b.dimension, 0.0);
        assert!(box_counting_dimension(
            &TraceSet::new(vec![], 1.0).unwrap(),
            &dyadic_scales(1.0, 1, 10)
        )
        .is_err());
    }

    #[test]
    fn uniform_grid_is_one_dimensional() {
        let k = 1024;
        let t = TraceSet::new((0..k).map(|j| (j as f64 + 0.5) / k as f64).collect(), 1.0).unwrap();
        let b = box_counting_dimension(&t, &dyadic_scales(1.0, 1, 9)).unwrap();
        assert!((b.dimension - 1.0).abs() < 0.1, "{}", b.dimension);
    }

    #[test]
    fn cantor_trace_dimension() {
        let lam = cantor_ratio(1.0 / 3.0).unwrap();
        let t = TraceSet::new(cantor_trace(lam, 10).unwrap(), 1.0).unwrap();
        let b = box_counting_dimension(&t, &dyadic_scales(1.0, 3, 24)).unwrap();
        assert!((b.dimension - 1.0 / 3.0).abs() < 0.05, "{}", b.dimension);
        let moved = t.affine(0.1, 0.5).unwrap();
        let m = box_counting_dimension(&moved, &dyadic_scales(0.5, 3, 24)).unwrap();
        assert!((m.dimension - b.dimension).abs() < 0.05);
    }

    #[test]
    fn rejects_short_scale_ranges() {
        let t = TraceSet::new(vec![0.2, 0.4], 1.0).unwrap();
        assert!(box_counting_dimension(&t, &dyadic_scales(1.0, 1, 4)).is_err());
        assert!(box_counting_dimension(&t, &dyadic_scales(1.0, 1, 5)).is_err());
        assert!(TraceSet::new(vec![1.0], 1.0).is_err());
    }
}
