use rayon::prelude::*;

const CHUNK: usize = 4096;

/// `Σ_{i<n} f(i)` summed in fixed chunks, so the rounding does not depend on the
/// thread schedule.
pub(crate) fn ordered_sum(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    chunked(n, |range| range.map(&f).sum::<f64>()).iter().sum()
}

/// Applies `f` to consecutive index chunks in parallel and returns the results in order.
pub(crate) fn chunked<T: Send>(n: usize, f: impl Fn(std::ops::Range<usize>) -> T + Sync) -> Vec<T> {
    (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(n)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_a_serial_sum_of_integers() {
        let n = 3 * CHUNK + 17;
        assert_eq!(ordered_sum(n, |i| i as f64), (n * (n - 1) / 2) as f64);
        assert_eq!(ordered_sum(0, |_| 1.0), 0.0);
    }
}
