//! Dense solves for the small systems that appear in the solvers (a few dozen
//! unknowns at most). Matrices are row-major `n * n` slices.

use crate::scalar::Real;

/// Solves `a x = b` for symmetric positive definite `a` by Cholesky.
/// Returns `None` when a non-positive pivot shows up.
pub fn solve_spd<S: Real>(a: &[S], n: usize, b: &[S]) -> Option<Vec<S>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![S::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > S::zero()) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s = s - l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s = s - l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    Some(y)
}

/// Solves a symmetric positive semidefinite system, adding a growing diagonal
/// shift until the factorization succeeds.
pub fn solve_psd_regularized<S: Real>(a: &[S], n: usize, b: &[S]) -> Vec<S> {
    let scale = (0..n).fold(S::zero(), |m, i| m.max(a[i * n + i].abs())).max(S::one());
    let mut shift = S::zero();
    let mut shifted = a.to_vec();
    loop {
        if let Some(x) = solve_spd(&shifted, n, b) {
            return x;
        }
        shift = if shift == S::zero() {
            scale * S::epsilon().sqrt()
        } else {
            shift * S::lit(10.0)
        };
        for i in 0..n {
            shifted[i * n + i] = a[i * n + i] + shift;
        }
    }
}

/// Gaussian elimination with partial pivoting. `None` if the matrix is
/// numerically singular.
pub fn solve_lu<S: Real>(a: &[S], n: usize, b: &[S]) -> Option<Vec<S>> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = m.iter().fold(S::zero(), |acc, v| acc.max(v.abs()));
    if scale == S::zero() {
        return None;
    }
    let tiny = scale * S::epsilon() * S::from_usize_lossy(n.max(1));
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| {
                m[r1 * n + col]
                    .abs()
                    .partial_cmp(&m[r2 * n + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        if m[pivot * n + col].abs() <= tiny {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            x.swap(col, pivot);
        }
        let p = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / p;
            if f == S::zero() {
                continue;
            }
            for k in col..n {
                m[r * n + k] = m[r * n + k] - f * m[col * n + k];
            }
            x[r] = x[r] - f * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s = s - m[i * n + k] * x[k];
        }
        x[i] = s / m[i * n + i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_and_lu_agree_on_spd_system() {
        let a: [f64; 9] = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let b = [1.0, 2.0, 3.0];
        let x1 = solve_spd(&a, 3, &b).unwrap();
        let x2 = solve_lu(&a, 3, &b).unwrap();
        for i in 0..3 {
            assert!((x1[i] - x2[i]).abs() < 1e-14);
            let r: f64 = (0..3).map(|j| a[i * 3 + j] * x1[j]).sum::<f64>() - b[i];
            assert!(r.abs() < 1e-14);
        }
    }

    #[test]
    fn lu_rejects_singular() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert!(solve_lu(&a, 2, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn lu_pivots() {
        let a = [0.0, 1.0, 1.0, 0.0];
        let x = solve_lu(&a, 2, &[2.0, 3.0]).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn regularized_handles_semidefinite() {
        let a: [f64; 4] = [1.0, 0.0, 0.0, 0.0];
        let x = solve_psd_regularized(&a, 2, &[1.0, 0.0]);
        assert!((x[0] - 1.0).abs() < 1e-6);
        assert!(x[1].abs() < 1e-12);
    }
}
