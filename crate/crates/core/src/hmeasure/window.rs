use serde::{Deserialize, Serialize};

use crate::crystallography::Vec3;
use crate::error::{Error, Result};
use crate::fields::{BoxDomain, Region};

/// Share of the sub-box covered by the cutoff along each axis.
pub const SUPPORT_FRACTION: f64 = 0.8;

/// Product bump cutoff `ψ` supported on the central 80% of a sub-box (grid coordinates).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub region: Region,
}

#[inline]
fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

impl Window {
    /// Errors if the support reaches a non-periodic face of `domain`.
    pub fn new(region: Region, domain: &BoxDomain) -> Result<Self> {
        let w = Self { region };
        w.check(domain, 0.0)?;
        Ok(w)
    }

    /// Centered sub-box of the given side lengths.
    pub fn centered(center: Vec3, sides: [f64; 3], domain: &BoxDomain) -> Result<Self> {
        let lo = std::array::from_fn(|a| center[a] - 0.5 * sides[a]);
        let hi = std::array::from_fn(|a| center[a] + 0.5 * sides[a]);
        Self::new(Region::new(lo, hi)?, domain)
    }

    pub fn half_support(&self) -> [f64; 3] {
        std::array::from_fn(|a| 0.5 * SUPPORT_FRACTION * (self.region.hi[a] - self.region.lo[a]))
    }

    /// The support must stay `margin` away from non-periodic faces.
    pub fn check(&self, domain: &BoxDomain, margin: f64) -> Result<()> {
        let c = self.region.center();
        let r = self.half_support();
        let o = domain.origin();
        let e = domain.extent();
        for a in 0..3 {
            let outside_box =
                self.region.lo[a] < o[a] - 1e-12 || self.region.hi[a] > o[a] + e[a] + 1e-12;
            let touches = c[a] - r[a] <= o[a] + margin || c[a] + r[a] >= o[a] + e[a] - margin;
            if outside_box || (!domain.periodic()[a] && touches) {
                return Err(Error::WindowTouchesBoundary(a));
            }
        }
        Ok(())
    }

    /// `ψ` at grid coordinates `g`; peak value 1 at the center.
    pub fn value(&self, g: &Vec3) -> f64 {
        let c = self.region.center();
        let r = self.half_support();
        (0..3).map(|a| bump((g[a] - c[a]) / r[a])).product()
    }

    pub fn describe(&self) -> String {
        let c = self.region.center();
        let s: [f64; 3] = std::array::from_fn(|a| self.region.hi[a] - self.region.lo[a]);
        format!(
            "product bump on {:.0}% of box centered ({:.4},{:.4},{:.4}) sides ({:.4},{:.4},{:.4})",
            SUPPORT_FRACTION * 100.0,
            c[0],
            c[1],
            c[2],
            s[0],
            s[1],
            s[2]
        )
    }
}

/// Sub-boxes of side `side` tiling the interior of `domain` (grid coordinates).
pub fn tiles(domain: &BoxDomain, side: [f64; 3]) -> Result<Vec<Window>> {
    let o = domain.origin();
    let e = domain.extent();
    let counts: [usize; 3] = std::array::from_fn(|a| ((e[a] / side[a]) + 1e-9).floor() as usize);
    if counts.iter().any(|&n| n == 0) {
        return Err(Error::InvalidArgument("tile larger than the domain".into()));
    }
    let mut out = Vec::new();
    for i in 0..counts[0] {
        for j in 0..counts[1] {
            for k in 0..counts[2] {
                let idx = [i, j, k];
                let lo: [f64; 3] = std::array::from_fn(|a| {
                    o[a] + 0.5 * (e[a] - counts[a] as f64 * side[a]) + idx[a] as f64 * side[a]
                });
                let hi: [f64; 3] = std::array::from_fn(|a| lo[a] + side[a]);
                out.push(Window::new(Region::new(lo, hi)?, domain)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_and_peak() {
        let d = BoxDomain::unit_cube(8).unwrap();
        let w = Window::centered(Vec3::new(0.5, 0.5, 0.5), [0.5; 3], &d).unwrap();
        assert_eq!(w.value(&Vec3::new(0.5, 0.5, 0.5)), 1.0);
        assert_eq!(w.value(&Vec3::new(0.5, 0.5, 0.71)), 0.0);
        assert!(w.value(&Vec3::new(0.5, 0.5, 0.69)) > 0.0);
    }

    #[test]
    fn boundary_contact_is_an_error() {
        let d = BoxDomain::unit_cube(8).unwrap();
        assert!(matches!(
            Window::centered(Vec3::new(0.5, 0.5, 0.5), [0.5, 1.2, 0.5], &d),
            Err(Error::WindowTouchesBoundary(1))
        ));
        // The whole box is fine: the support stops at 80%, but not with a wide margin.
        let w = Window::centered(Vec3::new(0.5, 0.5, 0.5), [1.0, 0.5, 0.5], &d).unwrap();
        assert!(matches!(w.check(&d, 0.15), Err(Error::WindowTouchesBoundary(0))));
        let p = d.clone().with_periodic([true, false, false]);
        assert!(w.check(&p, 0.15).is_ok());
    }

    #[test]
    fn tiles_cover_the_interior() {
        let d = BoxDomain::unit_cube(8).unwrap();
        let t = tiles(&d, [0.25, 0.5, 1.0]).unwrap();
        assert_eq!(t.len(), 8);
    }
}
