//! Sturm-sequence bisection eigensolver for symmetric tridiagonal matrices.
//!
//! Only the few lowest eigenvalues of the charge-basis Hamiltonian are ever
//! needed, so each one is located independently by bisection on the Sturm
//! count instead of running a full QL sweep.

/// Count eigenvalues strictly below `lambda` from the signs of the LDLᵀ
/// pivots. `pivmin` guards against division by a vanishing pivot.
pub fn sturm_count(diag: &[f64], off: &[f64], lambda: f64, pivmin: f64) -> usize {
    let n = diag.len();
    if n == 0 {
        return 0;
    }
    let mut count = 0;
    let mut pivot = diag[0] - lambda;
    if pivot < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let safe = if pivot.abs() < pivmin {
            if pivot < 0.0 {
                -pivmin
            } else {
                pivmin
            }
        } else {
            pivot
        };
        pivot = (diag[i] - lambda) - off[i - 1] * off[i - 1] / safe;
        if pivot < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `count` smallest eigenvalues, ascending. Bisection runs until the
/// bracket collapses to a few ulps, so the result is at machine precision
/// for the matrix scales used here.
pub fn lowest_eigenvalues(diag: &[f64], off: &[f64], count: usize) -> Vec<f64> {
    let n = diag.len();
    debug_assert_eq!(off.len(), n.saturating_sub(1));
    let count = count.min(n);
    if count == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![diag[0]];
    }

    // Gershgorin bounds.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut e_max: f64 = 0.0;
    for i in 0..n {
        let e_left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let e_right = if i < n - 1 { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - e_left - e_right);
        hi = hi.max(diag[i] + e_left + e_right);
        e_max = e_max.max(e_left.max(e_right));
    }
    let span = (hi - lo).max(1.0);
    lo -= 1e-3 * span;
    hi += 1e-3 * span;
    let pivmin = f64::MIN_POSITIVE * (e_max * e_max).max(1.0);

    let mut eigenvalues = Vec::with_capacity(count);
    let mut floor = lo;
    for k in 0..count {
        let mut a = floor;
        let mut b = hi;
        for _ in 0..128 {
            let mid = 0.5 * (a + b);
            if (b - a) < 2.0 * f64::EPSILON * mid.abs().max(1e-3) {
                break;
            }
            if sturm_count(diag, off, mid, pivmin) <= k {
                a = mid;
            } else {
                b = mid;
            }
        }
        eigenvalues.push(0.5 * (a + b));
        // λ_{k+1} >= λ_k: reuse the lower edge of this bracket.
        floor = a;
    }
    eigenvalues
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sturm_count_2x2() {
        // [[1, -1], [-1, 3]] has eigenvalues 2 ± √2 ≈ 0.586, 3.414.
        let d = [1.0, 3.0];
        let e = [-1.0];
        let pivmin = f64::MIN_POSITIVE;
        assert_eq!(sturm_count(&d, &e, 0.0, pivmin), 0);
        assert_eq!(sturm_count(&d, &e, 1.0, pivmin), 1);
        assert_eq!(sturm_count(&d, &e, 4.0, pivmin), 2);
    }

    #[test]
    fn tight_binding_chain_matches_analytic() {
        // d_i = 0, e_i = -1: eigenvalues are -2 cos(kπ/(N+1)), k = 1..N.
        let n = 40;
        let d = vec![0.0; n];
        let e = vec![-1.0; n - 1];
        let got = lowest_eigenvalues(&d, &e, 6);
        let mut exact: Vec<f64> = (1..=n)
            .map(|k| -2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
            .collect();
        exact.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (g, x) in got.iter().zip(exact.iter()) {
            assert!((g - x).abs() < 1e-12, "got {g}, want {x}");
        }
    }

    #[test]
    fn ascending_order() {
        let d: Vec<f64> = (0..50).map(|i| ((i * 7919) % 13) as f64).collect();
        let e: Vec<f64> = (0..49).map(|i| 1.0 + ((i * 104729) % 5) as f64).collect();
        let vals = lowest_eigenvalues(&d, &e, 50);
        for w in vals.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }
}
