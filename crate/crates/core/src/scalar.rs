//! Scalar abstraction shared by plain `f64` evaluation and forward-mode
//! dual numbers.
//!
//! Every closed form in the engine is written against [`Scalar`], so the same
//! code path can be differentiated exactly in the tangent direction `y` by
//! instantiating it with [`Dual`]. Duals nest: `Dual<Dual<f64>>` carries mixed
//! second derivatives, and so on.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// Lift a constant.
    fn cst(v: f64) -> Self;
    /// Real (value) part, stripping every derivative layer.
    fn re(self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    /// Four-quadrant arctangent of `self / x`.
    fn atan2(self, x: Self) -> Self;
    fn powi(self, n: i32) -> Self;

    #[inline]
    fn zero() -> Self {
        Self::cst(0.0)
    }
    #[inline]
    fn one() -> Self {
        Self::cst(1.0)
    }
    #[inline]
    fn recip(self) -> Self {
        Self::one() / self
    }
    #[inline]
    fn sq(self) -> Self {
        self * self
    }
    #[inline]
    fn abs(self) -> Self {
        if self.re() < 0.0 {
            -self
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// First-order dual number `re + eps·ε`, `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    #[inline]
    pub fn new(re: T, eps: T) -> Self {
        Self { re, eps }
    }

    /// Value with unit tangent.
    #[inline]
    pub fn var(re: T) -> Self {
        Self { re, eps: T::one() }
    }

    #[inline]
    pub fn constant(re: T) -> Self {
        Self { re, eps: T::zero() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = o.re.recip();
        let val = self.re * inv;
        Self::new(val, (self.eps - val * o.eps) * inv)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.re, -self.eps)
    }
}

impl<T: Scalar> AddAssign for Dual<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> SubAssign for Dual<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Scalar> MulAssign for Dual<T> {
    #[inline]
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<T: Scalar> Add<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: f64) -> Self {
        Self::new(self.re + o, self.eps)
    }
}

impl<T: Scalar> Sub<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: f64) -> Self {
        Self::new(self.re - o, self.eps)
    }
}

impl<T: Scalar> Mul<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: f64) -> Self {
        Self::new(self.re * o, self.eps * o)
    }
}

impl<T: Scalar> Div<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        Self::new(self.re / o, self.eps / o)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    #[inline]
    fn cst(v: f64) -> Self {
        Self::constant(T::cst(v))
    }
    #[inline]
    fn re(self) -> f64 {
        self.re.re()
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Self::new(s, self.eps / (s * 2.0))
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.re.exp();
        Self::new(e, self.eps * e)
    }
    #[inline]
    fn ln(self) -> Self {
        Self::new(self.re.ln(), self.eps / self.re)
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        let den = x.re * x.re + self.re * self.re;
        Self::new(
            self.re.atan2(x.re),
            (x.re * self.eps - self.re * x.eps) / den,
        )
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        Self::new(self.re.powi(n), self.eps * self.re.powi(n - 1) * (n as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn poly<S: Scalar>(x: S) -> S {
        x.powi(3) * 2.0 - x.sqrt() + x.exp() * x.ln() + S::cst(0.3).atan2(x)
    }

    #[test]
    fn first_derivative_matches_analytic() {
        let x = 1.7;
        let d = poly(Dual::var(x));
        let expect = 6.0 * x * x - 0.5 / x.sqrt() + x.exp() * x.ln() + x.exp() / x
            - 0.3 / (x * x + 0.09);
        assert_relative_eq!(d.eps, expect, max_relative = 1e-14);
    }

    #[test]
    fn nested_dual_gives_second_derivative() {
        let x = 0.9;
        let xx = Dual::new(Dual::var(x), Dual::constant(1.0));
        let d = poly(xx);
        // d/dx of the inner tangent
        let expect = 12.0 * x + 0.25 * x.powf(-1.5) + x.exp() * x.ln() + 2.0 * x.exp() / x
            - x.exp() / (x * x)
            + 0.6 * x / (x * x + 0.09).powi(2);
        assert_relative_eq!(d.eps.eps, expect, max_relative = 1e-13);
        assert_relative_eq!(d.re.eps, d.eps.re, max_relative = 1e-15);
    }

    #[test]
    fn atan2_derivative_in_both_arguments() {
        let y = Dual::new(0.4, 1.0);
        let x = Dual::new(-1.3, 0.0);
        let d = y.atan2(x);
        assert_relative_eq!(d.re, 0.4f64.atan2(-1.3));
        assert_relative_eq!(d.eps, -1.3 / (1.69 + 0.16), max_relative = 1e-15);
    }
}
