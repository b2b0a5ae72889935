//! Differentiation machinery over line elements `(x, y)`.
//!
//! y-derivatives are taken with forward-mode duals (exact to rounding);
//! x-derivatives use central finite differences. Both append one index to
//! the output tensor, so they compose: `GradX(&JacY(&f))` is `∂²f/∂y∂x`
//! stored as `[.., y-index, x-index]`.

use crate::error::Result;
use crate::scalar::{Dual, Scalar};
use crate::tensor::Tensor;

/// A tensor field on the slit tangent bundle whose y-dependence is written
/// generically, so it can be evaluated on dual numbers.
pub trait YField: Sync {
    fn eval<S: Scalar>(&self, x: &[f64], y: &[S]) -> Result<Tensor<S>>;
}

/// Central-difference settings for x-derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fd {
    pub step: f64,
    /// Combine steps `h` and `h/2` to cancel the leading truncation term.
    pub richardson: bool,
}

impl Fd {
    pub const fn central(step: f64) -> Self {
        Self {
            step,
            richardson: false,
        }
    }

    pub fn halved(self) -> Self {
        Self {
            step: self.step * 0.5,
            ..self
        }
    }
}

/// Stack equal-shape tensors along a new trailing index.
pub fn stack_last<S: Scalar>(parts: &[Tensor<S>]) -> Tensor<S> {
    let n = parts.len();
    let inner = parts[0].as_slice().len();
    let rank = parts[0].rank();
    let mut data = Vec::with_capacity(inner * n);
    for k in 0..inner {
        for p in parts {
            data.push(p.as_slice()[k]);
        }
    }
    Tensor::from_vec(n, rank + 1, data)
}

fn seeded<S: Scalar>(y: &[S], m: usize) -> Vec<Dual<S>> {
    y.iter()
        .enumerate()
        .map(|(j, &v)| Dual::new(v, if j == m { S::one() } else { S::zero() }))
        .collect()
}

/// `∂F/∂y^m`, appended as the last index.
pub fn jac_y<F: YField, S: Scalar>(f: &F, x: &[f64], y: &[S]) -> Result<Tensor<S>> {
    let parts = (0..y.len())
        .map(|m| f.eval(x, &seeded(y, m)).map(|t| t.map(|d| d.eps)))
        .collect::<Result<Vec<_>>>()?;
    Ok(stack_last(&parts))
}

/// Directional y-derivative `∂F/∂y^m ξ^m` with one dual evaluation.
pub fn dir_y<F: YField, S: Scalar>(f: &F, x: &[f64], y: &[S], xi: &[S]) -> Result<Tensor<S>> {
    let yd: Vec<Dual<S>> = y.iter().zip(xi).map(|(&v, &e)| Dual::new(v, e)).collect();
    Ok(f.eval(x, &yd)?.map(|d| d.eps))
}

fn central<F: YField, S: Scalar>(f: &F, x: &[f64], y: &[S], m: usize, h: f64) -> Result<Tensor<S>> {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[m] += h;
    xm[m] -= h;
    let fp = f.eval(&xp, y)?;
    let fm = f.eval(&xm, y)?;
    Ok(fp.sub(&fm).scale(S::cst(1.0 / (2.0 * h))))
}

/// `∂F/∂x^m` at fixed y, appended as the last index.
pub fn grad_x<F: YField, S: Scalar>(f: &F, x: &[f64], y: &[S], fd: Fd) -> Result<Tensor<S>> {
    let parts = (0..x.len())
        .map(|m| {
            let d1 = central(f, x, y, m, fd.step)?;
            if fd.richardson {
                let d2 = central(f, x, y, m, fd.step * 0.5)?;
                Ok(d2.scale(S::cst(4.0 / 3.0)).sub(&d1.scale(S::cst(1.0 / 3.0))))
            } else {
                Ok(d1)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(stack_last(&parts))
}

/// Field adapter: y-Jacobian of the wrapped field.
pub struct JacY<'a, F>(pub &'a F);

impl<F: YField> YField for JacY<'_, F> {
    fn eval<S: Scalar>(&self, x: &[f64], y: &[S]) -> Result<Tensor<S>> {
        jac_y(self.0, x, y)
    }
}

/// Field adapter: x-gradient of the wrapped field.
pub struct GradX<'a, F> {
    pub field: &'a F,
    pub fd: Fd,
}

impl<F: YField> YField for GradX<'_, F> {
    fn eval<S: Scalar>(&self, x: &[f64], y: &[S]) -> Result<Tensor<S>> {
        grad_x(self.field, x, y, self.fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// F_i = x_0 · y_i · |y|²
    struct Cubic;
    impl YField for Cubic {
        fn eval<S: Scalar>(&self, x: &[f64], y: &[S]) -> Result<Tensor<S>> {
            let r2 = y.iter().fold(S::zero(), |a, &v| a + v * v);
            Ok(Tensor::from_vec(
                y.len(),
                1,
                y.iter().map(|&v| v * r2 * x[0].sin()).collect(),
            ))
        }
    }

    #[test]
    fn jacobian_and_hessian_exact() {
        let x = [0.7, 0.1];
        let y = [0.3, -1.2];
        let j = jac_y(&Cubic, &x, &y).unwrap();
        let s = x[0].sin();
        let r2 = 0.09 + 1.44;
        // ∂F_i/∂y_k = s (δ_ik r2 + 2 y_i y_k)
        assert_relative_eq!(j[[0, 1]], s * 2.0 * 0.3 * -1.2, max_relative = 1e-15);
        assert_relative_eq!(j[[1, 1]], s * (r2 + 2.0 * 1.44), max_relative = 1e-15);
        let h = jac_y(&JacY(&Cubic), &x, &y).unwrap();
        // ∂²F_0/∂y_0∂y_0 = s·6 y_0
        assert_relative_eq!(h[[0, 0, 0]], s * 6.0 * 0.3, max_relative = 1e-14);
    }

    #[test]
    fn mixed_x_y_derivative() {
        let x = [0.7, 0.1];
        let y = [0.3, -1.2];
        let m = grad_x(&JacY(&Cubic), &x, &y, Fd::central(1e-5)).unwrap();
        let c = x[0].cos();
        assert_relative_eq!(m[[0, 1, 0]], c * 2.0 * 0.3 * -1.2, max_relative = 1e-9);
        assert_eq!(m[[0, 1, 1]], 0.0);
        let r = grad_x(
            &Cubic,
            &x,
            &y,
            Fd {
                step: 1e-2,
                richardson: true,
            },
        )
        .unwrap();
        assert_relative_eq!(r[[0, 0]], c * 0.3 * 1.53, max_relative = 1e-8);
    }
}
