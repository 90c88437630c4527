//! Separable 3D transforms on row-major grids, backed by `rustfft`.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftDirection, FftPlanner};

pub type C64 = Complex<f64>;

/// In-place unnormalized 3D DFT, `X_k = Σ_n x_n e^{∓2πi k·n/N}`.
pub fn fft3(data: &mut [C64], dims: [usize; 3], direction: FftDirection) {
    assert_eq!(
        data.len(),
        dims.iter().product::<usize>(),
        "buffer does not match dims"
    );
    let mut planner = FftPlanner::new();
    for axis in 0..3 {
        if dims[axis] > 1 {
            let plan = planner.plan_fft(dims[axis], direction);
            transform_axis(data, dims, axis, plan.as_ref());
        }
    }
}

/// Inverse transform scaled by `1/N`, undoing [`fft3`] in the forward direction.
pub fn ifft3_normalized(data: &mut [C64], dims: [usize; 3]) {
    fft3(data, dims, FftDirection::Inverse);
    let scale = 1.0 / data.len() as f64;
    data.par_iter_mut().for_each(|v| *v *= scale);
}

fn transform_axis(data: &mut [C64], dims: [usize; 3], axis: usize, plan: &dyn Fft<f64>) {
    let [n0, n1, n2] = dims;
    if axis == 2 {
        data.par_chunks_mut(n2).for_each(|line| {
            let mut scratch = vec![C64::default(); plan.get_inplace_scratch_len()];
            plan.process_with_scratch(line, &mut scratch);
        });
        return;
    }
    let n = dims[axis];
    let stride = if axis == 0 { n1 * n2 } else { n2 };
    let line_starts: Vec<usize> = if axis == 0 {
        (0..n1 * n2).collect()
    } else {
        (0..n0)
            .flat_map(|i| (0..n2).map(move |k| i * n1 * n2 + k))
            .collect()
    };
    let lines: Vec<Vec<C64>> = line_starts
        .par_iter()
        .map(|&s| {
            let mut line: Vec<C64> = (0..n).map(|m| data[s + m * stride]).collect();
            let mut scratch = vec![C64::default(); plan.get_inplace_scratch_len()];
            plan.process_with_scratch(&mut line, &mut scratch);
            line
        })
        .collect();
    for (s, line) in line_starts.iter().zip(lines) {
        for (m, v) in line.into_iter().enumerate() {
            data[s + m * stride] = v;
        }
    }
}

/// Signed frequency index for bin `k` of an `n`-point transform.
#[inline]
pub fn signed_index(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Circular convolution of a real field with a real kernel of the same shape.
pub fn convolve_periodic(field: &[f64], kernel: &[f64], dims: [usize; 3]) -> Vec<f64> {
    let mut a: Vec<C64> = field.iter().map(|&v| C64::new(v, 0.0)).collect();
    let mut b: Vec<C64> = kernel.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft3(&mut a, dims, FftDirection::Forward);
    fft3(&mut b, dims, FftDirection::Forward);
    a.par_iter_mut()
        .zip(b.par_iter())
        .for_each(|(x, y)| *x *= *y);
    ifft3_normalized(&mut a, dims);
    a.into_iter().map(|v| v.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[C64], dims: [usize; 3]) -> Vec<C64> {
        let [n0, n1, n2] = dims;
        let mut out = vec![C64::default(); x.len()];
        for k0 in 0..n0 {
            for k1 in 0..n1 {
                for k2 in 0..n2 {
                    let mut acc = C64::default();
                    for a in 0..n0 {
                        for b in 0..n1 {
                            for c in 0..n2 {
                                let ph = -2.0
                                    * std::f64::consts::PI
                                    * ((k0 * a) as f64 / n0 as f64
                                        + (k1 * b) as f64 / n1 as f64
                                        + (k2 * c) as f64 / n2 as f64);
                                acc += x[(a * n1 + b) * n2 + c] * C64::from_polar(1.0, ph);
                            }
                        }
                    }
                    out[(k0 * n1 + k1) * n2 + k2] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let dims = [3, 4, 5];
        let x: Vec<C64> = (0..60)
            .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let want = naive_dft(&x, dims);
        let mut got = x.clone();
        fft3(&mut got, dims, FftDirection::Forward);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-10);
        }
        ifft3_normalized(&mut got, dims);
        for (a, b) in got.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn delta_kernel_is_identity() {
        let dims = [4, 2, 6];
        let f: Vec<f64> = (0..48).map(|i| i as f64).collect();
        let mut k = vec![0.0; 48];
        k[0] = 1.0;
        let g = convolve_periodic(&f, &k, dims);
        for (a, b) in f.iter().zip(&g) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
