//! Dense linear solves and subspace comparison.

use thiserror::Error;

use crate::spectral::{eig_sym, SymmetricMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular at column {0}")]
    Singular(usize),
    #[error("solution residual {residual:e} exceeds {tol:e}")]
    Residual { residual: f64, tol: f64 },
}

/// Solves `A x = b` for a row-major `n × n` matrix by Gaussian elimination
/// with partial pivoting, then checks `‖A x − b‖∞ ≤ tol · max(1, ‖x‖∞)`.
pub fn solve(a: &[f64], b: &[f64], tol: f64) -> Result<Vec<f64>, LinalgError> {
    let n = b.len();
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .expect("non-empty range");
        if m[pivot * n + col].abs() <= 1e-13 * scale {
            return Err(LinalgError::Singular(col));
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            x.swap(col, pivot);
        }
        let diag = m[col * n + col];
        for row in col + 1..n {
            let factor = m[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= factor * m[col * n + k];
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for k in col + 1..n {
            acc -= m[col * n + k] * x[k];
        }
        x[col] = acc / m[col * n + col];
    }

    let residual = (0..n)
        .map(|i| {
            let ax: f64 = (0..n).map(|k| a[i * n + k] * x[k]).sum();
            (ax - b[i]).abs()
        })
        .fold(0.0, f64::max);
    let size = x.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    if residual > tol * size {
        return Err(LinalgError::Residual { residual, tol });
    }
    Ok(x)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest principal angle (radians) between the spans of two orthonormal
/// sets of equal size. Computed from the sine side, `‖(I − QQᵀ) Q'‖₂`, so
/// small angles keep full precision.
pub fn max_principal_angle(basis: &[Vec<f64>], other: &[Vec<f64>]) -> f64 {
    assert_eq!(basis.len(), other.len());
    let m = other.len();
    if m == 0 {
        return 0.0;
    }
    let residuals: Vec<Vec<f64>> = other
        .iter()
        .map(|b| {
            let mut r = b.clone();
            for q in basis {
                let c = dot(q, b);
                r.iter_mut().zip(q).for_each(|(ri, qi)| *ri -= c * qi);
            }
            r
        })
        .collect();
    let mut gram = SymmetricMatrix::zeros(m);
    for i in 0..m {
        for j in i..m {
            gram.set(i, j, dot(&residuals[i], &residuals[j]));
        }
    }
    let largest = eig_sym(&gram, 1e-12)
        .map(|e| e.values.last().copied().unwrap_or(0.0))
        .unwrap_or_else(|_| (0..m).map(|i| gram.get(i, i)).sum());
    largest.max(0.0).sqrt().min(1.0).asin()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = [2.0, 1.0, 1.0, 3.0];
        let x = solve(&a, &[3.0, 5.0], 1e-12).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
    }

    #[test]
    fn needs_pivoting() {
        let a = [0.0, 1.0, 1.0, 0.0];
        assert_eq!(solve(&a, &[2.0, 3.0], 1e-12).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn singular_detected() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert_eq!(solve(&a, &[1.0, 2.0], 1e-12), Err(LinalgError::Singular(1)));
    }

    #[test]
    fn principal_angles() {
        let e1 = vec![1.0, 0.0, 0.0];
        let e2 = vec![0.0, 1.0, 0.0];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(max_principal_angle(std::slice::from_ref(&e1), std::slice::from_ref(&e1)), 0.0);
        // Same plane, rotated basis.
        let rotated = [vec![r, r, 0.0], vec![r, -r, 0.0]];
        assert!(max_principal_angle(&[e1.clone(), e2.clone()], &rotated) < 1e-15);
        let tilted = vec![r, 0.0, r];
        let angle = max_principal_angle(&[e1], &[tilted]);
        assert!((angle - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        let tiny = 1e-9_f64;
        let nearly = vec![tiny.cos(), tiny.sin(), 0.0];
        let angle = max_principal_angle(&[vec![1.0, 0.0, 0.0]], &[nearly]);
        assert!((angle - tiny).abs() < 1e-15);
    }
}
