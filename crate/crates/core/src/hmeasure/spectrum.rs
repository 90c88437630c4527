use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use super::window::Window;
use crate::crystallography::{TwinNormal, Vec3};
use crate::error::{Error, Result};
use crate::fft::{fft3, signed_index, C64};
use crate::fields::{chunked, ScalarField};

pub const CONE_HALF_ANGLE_DEG: f64 = 10.0;
pub const FINE_BINS: usize = 312;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub cone_half_angle_deg: f64,
    /// Also bin into the 312-cell hemisphere grid.
    pub fine: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            cone_half_angle_deg: CONE_HALF_ANGLE_DEG,
            fine: false,
        }
    }
}

/// Windowed Fourier mass of an oscillation, binned by `ξ/|ξ|` with `ξ ~ -ξ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AngularSpectrum {
    pub component: u8,
    pub eta: f64,
    pub delta: f64,
    /// Mass in the cones around the six normal classes, in `TwinNormal::all()` order.
    pub cone_mass: [f64; 6],
    pub other: f64,
    /// The `ξ = 0` mode.
    pub dc: f64,
    /// `∫|ψ f|²` computed in physical space.
    pub windowed_l2: f64,
    /// `∫ψ²`.
    pub window_mass: f64,
    /// Largest `||F(ξ)|² - |F(-ξ)|²|` relative to the largest mode.
    pub antipodal_mismatch: f64,
    pub fine: Option<Vec<f64>>,
    pub window: String,
}

impl AngularSpectrum {
    pub const CSV_HEADER: &'static str = "bin,dir_x,dir_y,dir_z,mass";

    pub fn total(&self) -> f64 {
        self.angular_total() + self.dc
    }

    /// Mass at nonzero frequencies.
    pub fn angular_total(&self) -> f64 {
        self.cone_mass.iter().sum::<f64>() + self.other
    }

    pub fn cone(&self, n: TwinNormal) -> f64 {
        self.cone_mass[n.ordinal()]
    }

    /// Share of the angular mass inside the cones of `normals`; `None` without mass.
    pub fn cone_fraction(&self, normals: &[TwinNormal]) -> Option<f64> {
        let t = self.angular_total();
        if t <= 0.0 {
            return None;
        }
        Some(normals.iter().map(|&n| self.cone(n)).sum::<f64>() / t)
    }

    /// Normal class with the largest cone mass and that mass.
    pub fn dominant(&self) -> (TwinNormal, f64) {
        let all = TwinNormal::all();
        let k = (0..6)
            .max_by(|&a, &b| self.cone_mass[a].total_cmp(&self.cone_mass[b]))
            .unwrap_or(0);
        (all[k], self.cone_mass[k])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for n in TwinNormal::all() {
            let v = n.unit();
            out.push_str(&format!(
                "{n},{:?},{:?},{:?},{:?}\n",
                v.x,
                v.y,
                v.z,
                self.cone(n)
            ));
        }
        out.push_str(&format!("other,NaN,NaN,NaN,{:?}\n", self.other));
        out.push_str(&format!("dc,NaN,NaN,NaN,{:?}\n", self.dc));
        if let Some(fine) = &self.fine {
            for (p, m) in hemisphere_points().iter().zip(fine) {
                out.push_str(&format!("fine,{:?},{:?},{:?},{m:?}\n", p.x, p.y, p.z));
            }
        }
        out
    }
}

/// 312 Fibonacci points on the upper hemisphere.
pub fn hemisphere_points() -> Vec<Vec3> {
    crate::besov::sphere_points(2 * FINE_BINS)
        .into_iter()
        .take(FINE_BINS)
        .collect()
}

fn upper(v: Vec3) -> Vec3 {
    let flip = v.z < 0.0 || (v.z == 0.0 && (v.y < 0.0 || (v.y == 0.0 && v.x < 0.0)));
    if flip {
        -v
    } else {
        v
    }
}

/// Angular spectrum of `f` under `window`, normalized by Plancherel so that the
/// bin masses sum to `∫|ψ f|²`.
pub fn spectrum_of(
    f: &ScalarField,
    window: &Window,
    opts: &SpectrumOptions,
) -> Result<AngularSpectrum> {
    let dom = f.domain();
    window.check(dom, 0.0)?;
    let ranges = window.region.cell_ranges(dom);
    let dims: [usize; 3] = std::array::from_fn(|a| ranges[a].len());
    if dims.iter().any(|&n| n < 2) {
        return Err(Error::ResolutionTooSmall(
            "window covers fewer than 2 cells along an axis".into(),
        ));
    }
    let n: usize = dims.iter().product();
    let mut data = vec![C64::new(0.0, 0.0); n];
    let mut psi2 = 0.0;
    for (i, gi) in ranges[0].clone().enumerate() {
        for (j, gj) in ranges[1].clone().enumerate() {
            for (k, gk) in ranges[2].clone().enumerate() {
                let psi = window.value(&dom.center_grid([gi, gj, gk]));
                psi2 += psi * psi;
                data[(i * dims[1] + j) * dims[2] + k] =
                    C64::new(psi * f.samples()[dom.index(gi, gj, gk)], 0.0);
            }
        }
    }
    let dv = dom.cell_volume();
    let windowed_l2 = data.iter().map(|c| c.norm_sqr()).sum::<f64>() * dv;
    fft3(&mut data, dims, FftDirection::Forward);

    let h = dom.cell_size();
    let rt = dom.frame().transpose();
    let cos_cone = opts.cone_half_angle_deg.to_radians().cos();
    let normals: Vec<Vec3> = TwinNormal::all().iter().map(|n| n.unit()).collect();
    let fine_pts = if opts.fine {
        hemisphere_points()
    } else {
        Vec::new()
    };
    let scale = dv / n as f64;
    let peak = data.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);

    struct Acc {
        cones: [f64; 6],
        other: f64,
        dc: f64,
        mismatch: f64,
        fine: Vec<f64>,
    }
    let empty = || Acc {
        cones: [0.0; 6],
        other: 0.0,
        dc: 0.0,
        mismatch: 0.0,
        fine: vec![0.0; fine_pts.len()],
    };
    let parts = chunked(n, |range| {
        range.fold(empty(), |mut acc, idx| {
            let kk = [
                idx / (dims[1] * dims[2]),
                (idx / dims[2]) % dims[1],
                idx % dims[2],
            ];
            let p = data[idx].norm_sqr();
            let neg = kk
                .iter()
                .zip(&dims)
                .map(|(&k, &m)| (m - k) % m)
                .collect::<Vec<_>>();
            let q = data[(neg[0] * dims[1] + neg[1]) * dims[2] + neg[2]].norm_sqr();
            acc.mismatch = acc.mismatch.max((p - q).abs());
            let m = p * scale;
            let xi_g = Vec3::from(std::array::from_fn::<f64, 3, _>(|a| {
                signed_index(kk[a], dims[a]) / (dims[a] as f64 * h[a])
            }));
            if xi_g.norm() == 0.0 {
                acc.dc += m;
                return acc;
            }
            let xi = (rt * xi_g).normalize();
            match normals.iter().position(|v| v.dot(&xi).abs() >= cos_cone) {
                Some(c) => acc.cones[c] += m,
                None => acc.other += m,
            }
            if !fine_pts.is_empty() {
                let u = upper(xi);
                let b = (0..fine_pts.len())
                    .max_by(|&a, &b| fine_pts[a].dot(&u).total_cmp(&fine_pts[b].dot(&u)))
                    .unwrap_or(0);
                acc.fine[b] += m;
            }
            acc
        })
    });
    let acc = parts.into_iter().fold(empty(), |mut a, b| {
        for c in 0..6 {
            a.cones[c] += b.cones[c];
        }
        a.other += b.other;
        a.dc += b.dc;
        a.mismatch = a.mismatch.max(b.mismatch);
        for (x, y) in a.fine.iter_mut().zip(&b.fine) {
            *x += y;
        }
        a
    });
    Ok(AngularSpectrum {
        component: 0,
        eta: f64::NAN,
        delta: 0.0,
        cone_mass: acc.cones,
        other: acc.other,
        dc: acc.dc,
        windowed_l2,
        window_mass: psi2 * dv,
        antipodal_mismatch: if peak > 0.0 { acc.mismatch / peak } else { 0.0 },
        fine: opts.fine.then_some(acc.fine),
        window: window.describe(),
    })
}
