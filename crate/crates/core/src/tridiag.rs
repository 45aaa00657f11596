//! Sturm-sequence bisection eigensolver for symmetric tridiagonal matrices.
//!
//! Eigenvalues only: the spectral pipelines need joint-spectrum values, not
//! vectors, and bisection on the Sturm count is deterministic and
//! dependency-free. The count of negative pivots in the LDL^T factorization
//! of (A - lambda I) equals the number of eigenvalues below lambda.

const PIVOT_GUARD: f64 = 1e-300;

/// Number of eigenvalues of the tridiagonal (diag, off) strictly below `lambda`.
pub fn sturm_count(diag: &[f64], off: &[f64], lambda: f64) -> usize {
    debug_assert!(off.len() + 1 == diag.len() || diag.is_empty());
    let mut count = 0usize;
    let mut q = 1.0f64;
    for i in 0..diag.len() {
        let e2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        let mut denom = q;
        if denom.abs() < PIVOT_GUARD {
            denom = if denom >= 0.0 { PIVOT_GUARD } else { -PIVOT_GUARD };
        }
        q = (diag[i] - lambda) - e2 / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    (lo - 1.0, hi + 1.0)
}

fn bisect_kth(diag: &[f64], off: &[f64], k: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..220 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 2.0 * f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
        if sturm_count(diag, off, mid) <= k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All eigenvalues, ascending.
pub fn eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![diag[0]];
    }
    let (lo, hi) = gershgorin(diag, off);
    (0..n).map(|k| bisect_kth(diag, off, k, lo, hi)).collect()
}

/// Eigenvalues not exceeding `e_max`, ascending.
pub fn eigenvalues_below(diag: &[f64], off: &[f64], e_max: f64) -> Vec<f64> {
    let n = diag.len();
    if n == 0 {
        return Vec::new();
    }
    let (lo, hi) = gershgorin(diag, off);
    // count(e_max+) gives how many to extract
    let m = sturm_count(diag, off, e_max.next_up());
    (0..m)
        .map(|k| bisect_kth(diag, off, k, lo, hi.min(e_max.next_up())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn two_by_two() {
        // [[1,-1],[-1,3]]: eigenvalues 2 -/+ sqrt(2)
        let ev = eigenvalues(&[1.0, 3.0], &[-1.0]);
        assert_abs_diff_eq!(ev[0], 2.0 - 2f64.sqrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(ev[1], 2.0 + 2f64.sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn toeplitz_oracle() {
        // Tridiagonal Toeplitz(d, e): lambda_k = d + 2 e cos(k pi / (n+1))
        let n = 60;
        let (d, e) = (0.7, -0.31);
        let diag = vec![d; n];
        let off = vec![e; n - 1];
        let ev = eigenvalues(&diag, &off);
        let mut expect: Vec<f64> = (1..=n)
            .map(|k| d + 2.0 * e * (k as f64 * PI / (n as f64 + 1.0)).cos())
            .collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn below_cutoff_matches_full() {
        let n = 40;
        let diag: Vec<f64> = (0..n).map(|i| (i as f64) * 0.2).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| 0.1 + 0.01 * i as f64).collect();
        let all = eigenvalues(&diag, &off);
        let cut = 3.0;
        let some = eigenvalues_below(&diag, &off, cut);
        let expect: Vec<f64> = all.iter().copied().filter(|&x| x <= cut).collect();
        assert_eq!(some.len(), expect.len());
        for (a, b) in some.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn clustered_eigenvalues() {
        // near-degenerate pair resolved by count-based extraction
        let diag = vec![1.0, 1.0 + 1e-12, 5.0];
        let off = vec![1e-13, 1e-13];
        let ev = eigenvalues(&diag, &off);
        assert_eq!(ev.len(), 3);
        assert!(ev[0] <= ev[1] && ev[1] <= ev[2]);
    }
}
