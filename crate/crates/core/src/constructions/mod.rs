//! Closed-form finite-energy microstructures.
//!
//! Every construction pairs a displacement sampler with the labels it induces, both
//! evaluated at the same points, so the analytic strain path sees no spurious misfit.

mod branching;
mod checkerboard;
mod clustering;
mod laminate;

pub use branching::{branched_habit_plane, BranchTreeSpec, Branched, LayerInfo, SlabPattern, Zone, HABIT_FRACTION};
pub use checkerboard::{checkerboard, CheckerboardFields, CheckerboardSpec, PeriodicSet};
pub use clustering::{
    cantor_ratio, cantor_trace, clustering_laminate, gap_energy_per_area, ClusterSpec, Clustered,
    GapEnergy,
};
pub use laminate::{simple_laminate, LaminateProfile, LaminateSpec};

use nalgebra::Matrix3;

use crate::crystallography::{TwinNormal, Vec3};
use crate::error::{Error, Result};
use crate::fields::BoxDomain;

/// Rotation whose first row is `first` and second row is the part of `second`
/// orthogonal to it; the third row completes a right-handed frame.
pub fn aligned_frame(first: &Vec3, second: &Vec3) -> Result<Matrix3<f64>> {
    let e0 = first.normalize();
    let s = second - second.dot(&e0) * e0;
    if s.norm() < 1e-9 {
        return Err(Error::InvalidArgument(
            "frame directions are parallel".into(),
        ));
    }
    let e1 = s.normalize();
    let e2 = e0.cross(&e1);
    Ok(Matrix3::from_rows(&[
        e0.transpose(),
        e1.transpose(),
        e2.transpose(),
    ]))
}

/// Frame with `ν` as grid axis 0 and its partner as grid axis 1.
pub fn twin_frame(normal: TwinNormal) -> Matrix3<f64> {
    aligned_frame(&normal.unit(), &normal.partner().unit()).expect("pair normals are orthogonal")
}

/// The grid axis parallel to `v`, if any.
pub(crate) fn aligned_axis(domain: &BoxDomain, v: &Vec3) -> Option<usize> {
    (0..3).find(|&a| (domain.axis(a).dot(v).abs() - 1.0).abs() < 1e-12)
}
