use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::domain::BoxDomain;
use super::scalar::ScalarField;
use crate::error::Result;

/// Perimeter estimates of a `{0,1}` field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalVariation {
    /// Sum of the areas of cell faces across which the indicator jumps.
    pub face_count: f64,
    /// `∫|∇(φ * χ)|` with a two-cell bump; insensitive to interface orientation.
    pub isotropic: f64,
}

/// Calls `f(a, b, area)` once per interior face (and per wrap face on periodic axes).
pub fn for_each_face(domain: &BoxDomain, mut f: impl FnMut(usize, usize, f64)) {
    let n = domain.resolution();
    let dx = domain.cell_size();
    let periodic = domain.periodic();
    let area = [dx[1] * dx[2], dx[0] * dx[2], dx[0] * dx[1]];
    for i in 0..n[0] {
        for j in 0..n[1] {
            for k in 0..n[2] {
                let c = [i, j, k];
                let here = domain.index(i, j, k);
                for a in 0..3 {
                    let mut nb = c;
                    if c[a] + 1 < n[a] {
                        nb[a] += 1;
                    } else if periodic[a] && n[a] > 2 {
                        nb[a] = 0;
                    } else {
                        continue;
                    }
                    f(here, domain.index(nb[0], nb[1], nb[2]), area[a]);
                }
            }
        }
    }
}

/// Face-counting perimeter of an indicator.
pub fn face_count_tv(chi: &ScalarField) -> Result<f64> {
    chi.require_indicator()?;
    let s = chi.samples();
    let mut tv = 0.0;
    for_each_face(chi.domain(), |a, b, area| {
        if s[a] != s[b] {
            tv += area;
        }
    });
    Ok(tv)
}

/// Both perimeter estimators for an indicator field.
pub fn total_variation(chi: &ScalarField) -> Result<TotalVariation> {
    let face_count = face_count_tv(chi)?;
    Ok(TotalVariation {
        face_count,
        isotropic: isotropic_tv(chi)?,
    })
}

fn isotropic_tv(chi: &ScalarField) -> Result<f64> {
    let d = chi.domain();
    let smooth = smooth_reflecting(chi, 2.0 * d.min_cell_width());
    let n = d.resolution();
    let dx = d.cell_size();
    let periodic = d.periodic();
    let total = super::ordered_sum(d.len(), |idx| {
        let c = d.coords(idx);
        let mut g2 = 0.0;
        for a in 0..3 {
            let (mut lo, mut hi) = (c, c);
            let span = if periodic[a] {
                lo[a] = (c[a] + n[a] - 1) % n[a];
                hi[a] = (c[a] + 1) % n[a];
                2.0
            } else if c[a] == 0 {
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
            let g = (smooth[d.index(hi[0], hi[1], hi[2])] - smooth[d.index(lo[0], lo[1], lo[2])])
                / (span * dx[a]);
            g2 += g * g;
        }
        g2.sqrt()
    });
    Ok(total * d.cell_volume())
}

/// Direct bump convolution with even reflection at non-periodic faces, so the box
/// boundary does not register as an interface.
fn smooth_reflecting(chi: &ScalarField, radius: f64) -> Vec<f64> {
    let d = chi.domain();
    let n = d.resolution();
    let dx = d.cell_size();
    let periodic = d.periodic();
    let reach: [isize; 3] = std::array::from_fn(|a| (radius / dx[a]).floor() as isize);
    let mut stencil = Vec::new();
    for i in -reach[0]..=reach[0] {
        for j in -reach[1]..=reach[1] {
            for k in -reach[2]..=reach[2] {
                let s2 = [(i, 0), (j, 1), (k, 2)]
                    .iter()
                    .map(|&(o, a)| (o as f64 * dx[a] / radius).powi(2))
                    .sum::<f64>();
                if s2 < 1.0 {
                    stencil.push(([i, j, k], (-1.0 / (1.0 - s2)).exp()));
                }
            }
        }
    }
    let norm: f64 = stencil.iter().map(|s| s.1).sum();
    let fold = |i: isize, a: usize| -> usize {
        let m = n[a] as isize;
        if periodic[a] {
            return i.rem_euclid(m) as usize;
        }
        let p = i.rem_euclid(2 * m);
        (if p < m { p } else { 2 * m - 1 - p }) as usize
    };
    let s = chi.samples();
    (0..d.len())
        .into_par_iter()
        .map(|idx| {
            let c = d.coords(idx);
            stencil
                .iter()
                .map(|(o, w)| {
                    let q: [usize; 3] = std::array::from_fn(|a| fold(c[a] as isize + o[a], a));
                    w * s[d.index(q[0], q[1], q[2])]
                })
                .sum::<f64>()
                / norm
        })
        .collect()
}
