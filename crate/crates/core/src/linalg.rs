//! Small dense linear algebra, generic over [`Scalar`] so determinants of
//! dual-valued matrices can be differentiated.

use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// LU factorisation with partial pivoting (pivot chosen on real parts).
/// Returns `(lu, perm, sign)` or `None` when singular.
fn lu<T: Scalar>(m: &Tensor<T>) -> Option<(Vec<T>, Vec<usize>, f64)> {
    let n = m.dim();
    let mut a = m.as_slice().to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r1, &r2| {
                a[r1 * n + col]
                    .re()
                    .abs()
                    .total_cmp(&a[r2 * n + col].re().abs())
            })
            .unwrap();
        if a[piv * n + col].re() == 0.0 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            perm.swap(piv, col);
            sign = -sign;
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            a[r * n + col] = f;
            for k in col + 1..n {
                let t = a[col * n + k];
                a[r * n + k] -= f * t;
            }
        }
    }
    Some((a, perm, sign))
}

pub fn determinant<T: Scalar>(m: &Tensor<T>) -> T {
    let n = m.dim();
    match lu(m) {
        None => T::zero(),
        Some((a, _, sign)) => (0..n).fold(T::cst(sign), |acc, i| acc * a[i * n + i]),
    }
}

pub fn inverse<T: Scalar>(m: &Tensor<T>) -> Option<Tensor<T>> {
    let n = m.dim();
    let (a, perm, _) = lu(m)?;
    let mut inv = Tensor::zeros(n, 2);
    for col in 0..n {
        // solve for column `col` of the inverse
        let mut x: Vec<T> = (0..n)
            .map(|i| if perm[i] == col { T::one() } else { T::zero() })
            .collect();
        for i in 0..n {
            for k in 0..i {
                let t = a[i * n + k] * x[k];
                x[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let t = a[i * n + k] * x[k];
                x[i] -= t;
            }
            x[i] = x[i] / a[i * n + i];
        }
        for i in 0..n {
            inv[[i, col]] = x[i];
        }
    }
    Some(inv)
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(m: &Tensor<f64>) -> Option<Tensor<f64>> {
    let n = m.dim();
    let mut l = Tensor::<f64>::zeros(n, 2);
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[[i, k]] * l[[j, k]]).sum();
            if i == j {
                let d = m[[i, i]] - s;
                if d <= 0.0 || !d.is_finite() {
                    return None;
                }
                l[[i, i]] = d.sqrt();
            } else {
                l[[i, j]] = (m[[i, j]] - s) / l[[j, j]];
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::mat_mul;
    use approx::assert_relative_eq;

    fn sample() -> Tensor<f64> {
        Tensor::from_vec(
            3,
            2,
            vec![4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0],
        )
    }

    #[test]
    fn inverse_and_determinant() {
        let m = sample();
        let inv = inverse(&m).unwrap();
        let id = mat_mul(&m, &inv);
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(id[[i, j]], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
        // cofactor expansion
        let det = 4.0 * (6.0 - 0.04) - 1.0 * (2.0 + 0.1) + 0.5 * (-0.2 - 1.5);
        assert_relative_eq!(determinant(&m), det, max_relative = 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let l = cholesky(&sample()).unwrap();
        let back = mat_mul(&l, &l.permuted(&[1, 0]));
        assert_relative_eq!(back[[2, 0]], 0.5, epsilon = 1e-14);
        let bad = Tensor::from_vec(2, 2, vec![1.0, 2.0, 2.0, 1.0]);
        assert!(cholesky(&bad).is_none());
    }
}
