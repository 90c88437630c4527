use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::crystallography::Vec3;
use crate::error::{Error, Result};

const FRAME_TOL: f64 = 1e-12;

/// An axis-aligned box in grid coordinates, carried into the lab by a rotation.
///
/// Grid coordinates are `g = R x` where `R` is [`BoxDomain::frame`]. Cells are indexed
/// row-major, `(i * ny + j) * nz + k`, with centers at `origin + (idx + 1/2) * extent / n`.
/// Axes may be flagged periodic; lookups then wrap instead of leaving the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    origin: [f64; 3],
    extent: [f64; 3],
    resolution: [usize; 3],
    frame: [[f64; 3]; 3],
    #[serde(default)]
    periodic: [bool; 3],
}

impl BoxDomain {
    pub fn new(origin: [f64; 3], extent: [f64; 3], resolution: [usize; 3]) -> Result<Self> {
        Self::with_frame(origin, extent, resolution, Matrix3::identity())
    }

    pub fn unit_cube(n: usize) -> Result<Self> {
        Self::new([0.0; 3], [1.0; 3], [n; 3])
    }

    /// `frame` maps lab vectors to grid vectors; its rows are the grid axes in the lab.
    pub fn with_frame(
        origin: [f64; 3],
        extent: [f64; 3],
        resolution: [usize; 3],
        frame: Matrix3<f64>,
    ) -> Result<Self> {
        for a in 0..3 {
            if !(extent[a] > 0.0) || !extent[a].is_finite() {
                return Err(Error::InvalidDomain(format!(
                    "extent[{a}] = {} must be positive",
                    extent[a]
                )));
            }
            if !origin[a].is_finite() {
                return Err(Error::InvalidDomain(format!("origin[{a}] is not finite")));
            }
            if resolution[a] < 2 {
                return Err(Error::ResolutionTooSmall(format!(
                    "axis {a} has {} cells, need at least 2",
                    resolution[a]
                )));
            }
        }
        let defect = (frame * frame.transpose() - Matrix3::identity())
            .abs()
            .max();
        if defect > FRAME_TOL || frame.determinant() < 0.0 {
            return Err(Error::InvalidDomain(format!(
                "frame is not a rotation (orthogonality defect {defect:e})"
            )));
        }
        let mut rows = [[0.0; 3]; 3];
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = frame[(r, c)];
            }
        }
        Ok(Self {
            origin,
            extent,
            resolution,
            frame: rows,
            periodic: [false; 3],
        })
    }

    pub fn with_periodic(mut self, periodic: [bool; 3]) -> Self {
        self.periodic = periodic;
        self
    }

    pub fn origin(&self) -> Vec3 {
        Vec3::from(self.origin)
    }

    pub fn extent(&self) -> Vec3 {
        Vec3::from(self.extent)
    }

    pub fn resolution(&self) -> [usize; 3] {
        self.resolution
    }

    pub fn periodic(&self) -> [bool; 3] {
        self.periodic
    }

    pub fn frame(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.frame[r][c])
    }

    /// Grid axis `a` expressed as a lab unit vector.
    pub fn axis(&self, a: usize) -> Vec3 {
        Vec3::from(self.frame[a])
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_size(&self) -> Vec3 {
        Vec3::from_fn(|a, _| self.extent[a] / self.resolution[a] as f64)
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size().iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.extent.iter().product()
    }

    pub fn diameter(&self) -> f64 {
        self.extent().norm()
    }

    pub fn min_cell_width(&self) -> f64 {
        self.cell_size().min()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.resolution[1] + j) * self.resolution[2] + k
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let [_, ny, nz] = self.resolution;
        [idx / (ny * nz), (idx / nz) % ny, idx % nz]
    }

    /// Cell center in grid coordinates.
    #[inline]
    pub fn center_grid(&self, c: [usize; 3]) -> Vec3 {
        Vec3::from_fn(|a, _| {
            self.origin[a] + (c[a] as f64 + 0.5) * self.extent[a] / self.resolution[a] as f64
        })
    }

    /// Cell center in lab coordinates.
    #[inline]
    pub fn center(&self, idx: usize) -> Vec3 {
        self.to_lab(&self.center_grid(self.coords(idx)))
    }

    #[inline]
    pub fn to_grid(&self, x: &Vec3) -> Vec3 {
        let f = &self.frame;
        Vec3::new(
            f[0][0] * x.x + f[0][1] * x.y + f[0][2] * x.z,
            f[1][0] * x.x + f[1][1] * x.y + f[1][2] * x.z,
            f[2][0] * x.x + f[2][1] * x.y + f[2][2] * x.z,
        )
    }

    #[inline]
    pub fn to_lab(&self, g: &Vec3) -> Vec3 {
        let f = &self.frame;
        Vec3::new(
            f[0][0] * g.x + f[1][0] * g.y + f[2][0] * g.z,
            f[0][1] * g.x + f[1][1] * g.y + f[2][1] * g.z,
            f[0][2] * g.x + f[1][2] * g.y + f[2][2] * g.z,
        )
    }

    /// Continuous cell coordinate `(g - origin) / dx` along every axis, wrapped on
    /// periodic axes. `None` when the point is outside a non-periodic axis.
    #[inline]
    pub fn locate_grid(&self, g: &Vec3) -> Option<[f64; 3]> {
        let mut out = [0.0; 3];
        for a in 0..3 {
            let n = self.resolution[a] as f64;
            let mut s = (g[a] - self.origin[a]) / self.extent[a] * n;
            if self.periodic[a] {
                s = s.rem_euclid(n);
            } else if !(0.0..=n).contains(&s) {
                return None;
            }
            out[a] = s;
        }
        Some(out)
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        self.locate_grid(&self.to_grid(x)).is_some()
    }

    /// Cell containing the lab point, if any.
    #[inline]
    pub fn nearest_cell(&self, x: &Vec3) -> Option<usize> {
        let s = self.locate_grid(&self.to_grid(x))?;
        let c: [usize; 3] =
            std::array::from_fn(|a| (s[a].floor() as usize).min(self.resolution[a] - 1));
        Some(self.index(c[0], c[1], c[2]))
    }

    /// Same geometry with the box scaled by `1/r` about the lab origin.
    pub fn dilated(&self, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "scale factor {r} must be positive"
            )));
        }
        let origin = self.origin.map(|o| o / r);
        let extent = self.extent.map(|e| e / r);
        let mut d = Self::with_frame(origin, extent, self.resolution, self.frame())?;
        if d.min_cell_width() < f64::MIN_POSITIVE * 1e6 {
            return Err(Error::InvalidDomain("rescaled domain is degenerate".into()));
        }
        d.periodic = self.periodic;
        Ok(d)
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self == other
    }
}

/// A sub-box of a domain, in grid coordinates, used as the set `U` of local estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Region {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Result<Self> {
        for a in 0..3 {
            if !(hi[a] > lo[a]) {
                return Err(Error::InvalidDomain(format!("region axis {a} is empty")));
            }
        }
        Ok(Self { lo, hi })
    }

    /// The whole domain.
    pub fn of(domain: &BoxDomain) -> Self {
        let o = domain.origin();
        let e = domain.extent();
        Self {
            lo: [o.x, o.y, o.z],
            hi: [o.x + e.x, o.y + e.y, o.z + e.z],
        }
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|a| self.hi[a] - self.lo[a]).product()
    }

    pub fn diameter(&self) -> f64 {
        (0..3)
            .map(|a| (self.hi[a] - self.lo[a]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Distance from the region to the non-periodic faces of `domain`.
    pub fn boundary_distance(&self, domain: &BoxDomain) -> f64 {
        let o = domain.origin();
        let e = domain.extent();
        let p = domain.periodic();
        (0..3)
            .filter(|&a| !p[a])
            .map(|a| (self.lo[a] - o[a]).min(o[a] + e[a] - self.hi[a]))
            .fold(f64::INFINITY, f64::min)
    }

    /// `U + B(0, r)` clipped to the domain.
    pub fn inflate(&self, r: f64, domain: &BoxDomain) -> Self {
        let o = domain.origin();
        let e = domain.extent();
        Self {
            lo: std::array::from_fn(|a| (self.lo[a] - r).max(o[a])),
            hi: std::array::from_fn(|a| (self.hi[a] + r).min(o[a] + e[a])),
        }
    }

    /// Per-axis index ranges of the cells whose centers lie in `[lo, hi)`.
    pub fn cell_ranges(&self, domain: &BoxDomain) -> [std::ops::Range<usize>; 3] {
        std::array::from_fn(|a| {
            let o = domain.origin()[a];
            let dx = domain.cell_size()[a];
            let n = domain.resolution()[a];
            let first = ((self.lo[a] - o) / dx - 0.5).ceil().max(0.0) as usize;
            let end = ((self.hi[a] - o) / dx - 0.5).ceil().max(0.0) as usize;
            let end = end.min(n);
            first.min(end)..end
        })
    }

    pub fn center(&self) -> Vec3 {
        Vec3::from(std::array::from_fn::<f64, 3, _>(|a| {
            0.5 * (self.lo[a] + self.hi[a])
        }))
    }

    /// Indices of cells whose centers lie in the half-open box `[lo, hi)`.
    pub fn cells(&self, domain: &BoxDomain) -> Vec<usize> {
        let ranges = self.cell_ranges(domain);
        let mut out = Vec::with_capacity(ranges.iter().map(|r| r.len()).product());
        for i in ranges[0].clone() {
            for j in ranges[1].clone() {
                for k in ranges[2].clone() {
                    out.push(domain.index(i, j, k));
                }
            }
        }
        out
    }
}
