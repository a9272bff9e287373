//! Small shared numeric routines: bracketed bisection, pairwise summation,
//! and a dense solver for the tiny per-step linear systems of the Volterra
//! scheme.

/// Bisection on a function with a sign change over `[lo, hi]`.
///
/// Runs until the bracket collapses to floating-point resolution (or
/// `max_iter`), which for a monotone function pins the root to one ulp.
/// The caller guarantees `f(lo)` and `f(hi)` have opposite (or zero) signs.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, max_iter: usize) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    if flo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
        flo = f(lo);
        if flo == 0.0 {
            return lo;
        }
    }
    debug_assert!(flo < 0.0, "bisect: no sign change in bracket");
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Expand a bracket geometrically from `start` until `f` changes sign, then
/// bisect. `f` must be increasing (from negative to positive) in the large;
/// the expansion floor/cap bound the search.
pub fn bisect_increasing(f: impl Fn(f64) -> f64, start: f64, max_iter: usize) -> f64 {
    let mut lo = start;
    let mut hi = start;
    let mut guard = 0;
    while f(hi) < 0.0 && guard < 4096 {
        hi *= 2.0;
        guard += 1;
    }
    guard = 0;
    while f(lo) > 0.0 && lo > 1e-300 && guard < 4096 {
        lo *= 0.1;
        guard += 1;
    }
    bisect(f, lo, hi, max_iter)
}

/// Order-insensitive deterministic reduction: fixed recursive splitting, so
/// the result depends only on the slice contents, never on thread schedule.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Sample mean and standard error of the mean, with pairwise reductions.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 2, "need at least two samples");
    let mean = pairwise_sum(xs) / n as f64;
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// In-place Gaussian elimination with partial pivoting for the small dense
/// systems (d×d with d = regime count) arising at each Volterra time step.
pub fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        assert!(diag != 0.0, "singular step matrix");
        for row in col + 1..n {
            let factor = a[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
}

/// Linear interpolation of uniformly gridded values (`step` spacing from 0).
pub fn lerp_grid(values: &[f64], step: f64, t: f64) -> f64 {
    let x = (t / step).max(0.0);
    let last = values.len() - 1;
    if x >= last as f64 {
        return values[last];
    }
    let k = x.floor() as usize;
    let frac = x - k as f64;
    values[k] + frac * (values[k + 1] - values[k])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_monotone_root() {
        let root = bisect(|x| x * x - 2.0, 0.0, 2.0, 200);
        assert!((root - 2.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bisect_increasing_expands_bracket() {
        let root = bisect_increasing(|x| x.ln(), 5.0, 200);
        assert!((root - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..1000).map(|k| (k as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
    }

    #[test]
    fn mean_and_se_of_constant_sample() {
        let xs = vec![3.0; 100];
        let (m, se) = mean_and_se(&xs);
        assert_eq!(m, 3.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn solve_dense_2x2() {
        let mut a = vec![2.0, 1.0, 1.0, 3.0];
        let mut b = vec![5.0, 10.0];
        solve_dense(&mut a, &mut b, 2);
        assert!((b[0] - 1.0).abs() < 1e-14);
        assert!((b[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn solve_dense_needs_pivoting() {
        let mut a = vec![0.0, 1.0, 1.0, 0.0];
        let mut b = vec![2.0, 3.0];
        solve_dense(&mut a, &mut b, 2);
        assert!((b[0] - 3.0).abs() < 1e-14);
        assert!((b[1] - 2.0).abs() < 1e-14);
    }
}
