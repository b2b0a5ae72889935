//! Pointwise scalar tower: from a line element `(x, y)` to the Finsleroid
//! metric function `K` and every scalar the tensors consume.
//!
//! Notation used in the formula bodies: `b = b_i y^i` (axial part),
//! `q = √(S² − b²)` (transverse part), `S² = a_ij y^i y^j`, `w = q/b`.

use crate::background::Point;
use crate::error::{FinslerError, Result};
use crate::scalar::Scalar;
use crate::tensor::{dot, mat_vec, Tensor};

/// Directions with `q < Q_EXCLUSION · S` are rejected.
pub const Q_EXCLUSION: f64 = 1e-8;
/// Directions with `|b| < B_EXCLUSION · S` are rejected (`w = q/b` diverges).
pub const B_EXCLUSION: f64 = 1e-8;
/// Smallest nonzero charge accepted by formulas that divide by `g`.
pub const MIN_CHARGE: f64 = 1e-6;

/// Charge-only constants `h`, `G = g/h` and `g± = g/2 ± h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChargeConstants {
    pub g: f64,
    pub h: f64,
    pub big_g: f64,
    pub g_plus: f64,
    pub g_minus: f64,
}

impl ChargeConstants {
    pub fn new(g: f64) -> Self {
        let h = (1.0 - 0.25 * g * g).sqrt();
        Self {
            g,
            h,
            big_g: g / h,
            g_plus: 0.5 * g + h,
            g_minus: 0.5 * g - h,
        }
    }
}

/// The Finsleroid metric function `K(x, y)` straight from its definition,
/// valid on the whole slit tangent space (including `q = 0` and `b = 0`).
pub fn metric_function<S: Scalar>(p: &Point, y: &[S]) -> Result<S> {
    let a = Tensor::<S>::lift(&p.a);
    let b_lo: Vec<S> = p.b.iter().map(|&v| S::cst(v)).collect();
    let s2 = dot(&mat_vec(&a, y), y);
    if s2.re() <= 0.0 {
        return Err(FinslerError::ZeroVector);
    }
    let b = dot(&b_lo, y);
    if p.g == 0.0 {
        return Ok(s2.sqrt());
    }
    let c = ChargeConstants::new(p.g);
    let q2 = s2 - b * b;
    let q = if q2.re() > 0.0 { q2.sqrt() } else { S::zero() };
    let quad = b * b + b * q * p.g + q2;
    let f = (q * c.h).atan2(b + q * (0.5 * p.g));
    Ok(quad.sqrt() * (f * (-0.5 * c.big_g)).exp())
}

/// Algebraic variables of a line element.
#[derive(Clone, Debug, PartialEq)]
pub struct LineElement<S> {
    pub y: Vec<S>,
    /// `u_i = a_ij y^j`
    pub y_lo: Vec<S>,
    /// `v^i = y^i − b b^i`
    pub transverse_up: Vec<S>,
    /// `v_i = u_i − b b_i`
    pub transverse_lo: Vec<S>,
    /// `b = b_i y^i`
    pub axial: S,
    /// `q = √(S² − b²)`
    pub transverse: S,
    /// `S = √(a_ij y^i y^j)`
    pub riemann_len: S,
    /// `w = q/b`
    pub ratio: S,
    /// `λ = w²`
    pub ratio_sq: S,
    /// `z_i = b v_i − q² b_i`
    pub z: Vec<S>,
    /// `e_k = (b/q²) v_k − b_k`
    pub e: Vec<S>,
    /// `η_ij = r_ij − v_i v_j / q²`
    pub eta: Tensor<S>,
    /// `η^i_j`
    pub eta_mixed: Tensor<S>,
    /// `η^ij`
    pub eta_up: Tensor<S>,
}

impl<S: Scalar> LineElement<S> {
    pub fn dim(&self) -> usize {
        self.y.len()
    }
}

pub fn line_element<S: Scalar>(p: &Point, y: &[S]) -> Result<LineElement<S>> {
    let n = p.dim();
    if y.len() != n {
        return Err(FinslerError::Dimension {
            expected: n,
            got: y.len(),
        });
    }
    let a = Tensor::<S>::lift(&p.a);
    let a_inv = Tensor::<S>::lift(&p.a_inv);
    let b_lo: Vec<S> = p.b.iter().map(|&v| S::cst(v)).collect();
    let b_up: Vec<S> = p.b_up.iter().map(|&v| S::cst(v)).collect();

    let u = mat_vec(&a, y);
    let s2 = dot(&u, y);
    if s2.re() <= 0.0 || y.iter().all(|v| v.re() == 0.0) {
        return Err(FinslerError::ZeroVector);
    }
    let s = s2.sqrt();
    let b = dot(&b_lo, y);
    let v_up: Vec<S> = (0..n).map(|i| y[i] - b * b_up[i]).collect();
    let v_lo: Vec<S> = (0..n).map(|i| u[i] - b * b_lo[i]).collect();
    // a(v, v) rather than S² − b²: no cancellation near the axis
    let q2 = dot(&v_lo, &v_up);
    let q_ratio = q2.re().max(0.0).sqrt() / s.re();
    if q_ratio < Q_EXCLUSION {
        return Err(FinslerError::NearAxis {
            ratio: q_ratio,
            min: Q_EXCLUSION,
        });
    }
    let b_ratio = b.re().abs() / s.re();
    if b_ratio < B_EXCLUSION {
        return Err(FinslerError::AxisOrthogonal {
            ratio: b_ratio,
            min: B_EXCLUSION,
        });
    }
    let q = q2.sqrt();
    let w = q / b;
    let z: Vec<S> = (0..n).map(|i| b * v_lo[i] - q2 * b_lo[i]).collect();
    let e: Vec<S> = (0..n).map(|i| b / q2 * v_lo[i] - b_lo[i]).collect();
    let eta = Tensor::from_fn(n, 2, |ix| {
        let (i, j) = (ix[0], ix[1]);
        a[[i, j]] - b_lo[i] * b_lo[j] - v_lo[i] * v_lo[j] / q2
    });
    let eta_mixed = Tensor::from_fn(n, 2, |ix| {
        let (i, j) = (ix[0], ix[1]);
        let delta = if i == j { S::one() } else { S::zero() };
        delta - b_up[i] * b_lo[j] - v_up[i] * v_lo[j] / q2
    });
    let eta_up = Tensor::from_fn(n, 2, |ix| {
        let (i, j) = (ix[0], ix[1]);
        a_inv[[i, j]] - b_up[i] * b_up[j] - v_up[i] * v_up[j] / q2
    });
    Ok(LineElement {
        y: y.to_vec(),
        y_lo: u,
        transverse_up: v_up,
        transverse_lo: v_lo,
        axial: b,
        transverse: q,
        riemann_len: s,
        ratio: w,
        ratio_sq: w * w,
        z,
        e,
        eta,
        eta_mixed,
        eta_up,
    })
}

/// The scalar tower at a line element.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelScalars<S> {
    pub charge: ChargeConstants,
    /// `τ = 1 + g w + w²`
    pub tau: S,
    /// Characteristic quadratic form `B = b² + g b q + q²`.
    pub quad: S,
    /// `L = q + g b / 2`
    pub l_scalar: S,
    /// `A = b + g q / 2`
    pub a_scalar: S,
    /// Polar angle `f ∈ [0, π]`.
    pub angle: S,
    /// `J = exp(−G f / 2)`
    pub j: S,
    /// Generating function `V = K / b`.
    pub v: S,
    /// Metric function `K`.
    pub k: S,
    /// `V'' w² = w² V / τ²`
    pub gamma_det: S,
    /// Coefficients of the contravariant metric
    /// `(K²/B) g^ij = a^ij + p b^i b^j + r (b^i y^j + b^j y^i) + t y^i y^j`:
    /// `p = g/w`, `r = −g/(b w)`, `t = g (1 + g w) / (B w)`.
    pub p: S,
    pub r: S,
    pub t: S,
    /// `M = ∂ ln K² / ∂g`
    pub m: S,
    /// `M̂ = M − 2 b² w / B`
    pub m_hat: S,
}

impl<S: Scalar> KernelScalars<S> {
    /// Whether the Riemannian branch (g = 0) is in effect.
    pub fn riemannian(&self) -> bool {
        self.charge.g == 0.0
    }
}

pub fn kernel_scalars<S: Scalar>(p: &Point, le: &LineElement<S>) -> KernelScalars<S> {
    let g = p.g;
    let c = ChargeConstants::new(g);
    let (b, q, w) = (le.axial, le.transverse, le.ratio);
    let tau = w * w + w * g + 1.0;
    let quad = b * b + b * q * g + q * q;
    let l_scalar = q + b * (0.5 * g);
    let a_scalar = b + q * (0.5 * g);
    let angle = (q * c.h).atan2(a_scalar);
    let j = (angle * (-0.5 * c.big_g)).exp();
    let k = if g == 0.0 {
        le.riemann_len
    } else {
        quad.sqrt() * j
    };
    let v = k / b;
    let gamma_det = w * w * v / (tau * tau);
    let pp = S::cst(g) / w;
    let rr = -S::cst(g) / (b * w);
    let tt = (w * g + 1.0) * g / (quad * w);
    let h = c.h;
    let m = -angle / (h * h * h) + q * q * (0.5 * c.big_g / h) / quad + b * q / (quad * (h * h));
    let m_hat = m - b * b * w * 2.0 / quad;
    KernelScalars {
        charge: c,
        tau,
        quad,
        l_scalar,
        a_scalar,
        angle,
        j,
        v,
        k,
        gamma_det,
        p: pp,
        r: rr,
        t: tt,
        m,
        m_hat,
    }
}

/// Charge derivatives of the kernel at fixed `(x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeDerivatives<S> {
    /// `∂f/∂g`
    pub d_angle: S,
    /// `∂K²/∂g = M K²`
    pub d_k2: S,
    /// `M_i = ∂M/∂y^i = −2 q³ e_i / B²`
    pub m_grad: Vec<S>,
    /// `∂M/∂g`
    pub d_m: S,
    /// `∂M_i/∂g`
    pub d_m_grad: Vec<S>,
    /// `∂M̂/∂g = ∂M/∂g + 2 b² q² / B²`
    pub d_m_hat: S,
    /// Scale in `∂A_i/∂g = (M/2 + 1/g − b q / B) A_i`; absent on the Riemannian branch.
    pub cartan_scale: Option<S>,
}

pub fn g_derivative_scalars<S: Scalar>(p: &Point, le: &LineElement<S>, ks: &KernelScalars<S>) -> ChargeDerivatives<S> {
    let c = ks.charge;
    let (g, h) = (c.g, c.h);
    let (b, q) = (le.axial, le.transverse);
    let quad = ks.quad;
    let n = p.dim();
    let d_angle = (q * (0.25 * c.big_g) + b * (0.5 / h)) * b / quad - 0.5 / h;
    let d_k2 = ks.m * ks.k * ks.k;
    let q3 = q * q * q;
    let m_grad: Vec<S> = (0..n).map(|i| -(q3 * le.e[i] * 2.0) / (quad * quad)).collect();
    let d_m = (ks.m * (0.75 * g) + q * q / quad - q * q / (quad * quad) * (b * b + b * q * (0.5 * g))) / (h * h);
    // −4 b q³/B² · 2/(K N g) A_i with A_i = −K N g q e_i / (2B)
    let d_m_grad: Vec<S> = (0..n)
        .map(|i| b * q3 * q * le.e[i] * 4.0 / (quad * quad * quad))
        .collect();
    let d_m_hat = d_m + b * b * q * q * 2.0 / (quad * quad);
    let cartan_scale = (g != 0.0).then(|| ks.m * 0.5 + 1.0 / g - b * q / quad);
    ChargeDerivatives {
        d_angle,
        d_k2,
        m_grad,
        d_m,
        d_m_grad,
        d_m_hat,
        cartan_scale,
    }
}

/// Reject charges that are nonzero but too small for the `1/g` formulas.
pub fn require_charge(g: f64) -> Result<()> {
    if g != 0.0 && g.abs() < MIN_CHARGE {
        Err(FinslerError::ChargeTooSmall { g, min: MIN_CHARGE })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::{fields, BackgroundGeometry};
    use crate::diff::{jac_y, YField};
    use crate::scalar::Dual;
    use approx::assert_relative_eq;

    fn flat(n: usize, g: f64) -> Point {
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        BackgroundGeometry::new(n, fields::flat_metric(n), fields::constant_axis(b), fields::constant_charge(g))
            .point(&vec![0.0; n])
            .unwrap()
    }

    #[test]
    fn line_element_worked_example() {
        let p = flat(2, 0.5);
        let le = line_element(&p, &[1.0, 1.0]).unwrap();
        assert_eq!(le.axial, 1.0);
        assert_relative_eq!(le.transverse, 1.0, max_relative = 1e-15);
        assert_relative_eq!(le.ratio, 1.0, max_relative = 1e-15);
        assert_relative_eq!(le.riemann_len, 2f64.sqrt(), max_relative = 1e-15);
        assert_eq!(le.transverse_up, vec![0.0, 1.0]);
        assert_relative_eq!(le.z[0], -1.0, max_relative = 1e-15);
        assert_relative_eq!(le.z[1], 1.0, max_relative = 1e-15);
        assert!(dot(&le.y, &le.z).abs() < 1e-15);
    }

    #[test]
    fn axis_ray_is_excluded() {
        let p = flat(3, 0.5);
        assert!(matches!(line_element(&p, &[2.0, 0.0, 0.0]), Err(FinslerError::NearAxis { .. })));
        assert!(matches!(line_element(&p, &[0.0, 0.0, 0.0]), Err(FinslerError::ZeroVector)));
        assert!(matches!(
            line_element(&p, &[0.0, 1.0, 0.0]),
            Err(FinslerError::AxisOrthogonal { .. })
        ));
    }

    #[test]
    fn unit_length_of_axis() {
        for g in [-1.5, -0.3, 0.0, 0.8, 1.9] {
            let p = flat(3, g);
            assert_relative_eq!(metric_function(&p, &[1.0, 0.0, 0.0]).unwrap(), 1.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn zero_charge_is_riemannian() {
        let p = flat(3, 0.0);
        let y = [0.3, -1.1, 0.7];
        let le = line_element(&p, &y).unwrap();
        let ks = kernel_scalars(&p, &le);
        assert_eq!(ks.k, le.riemann_len);
        assert_relative_eq!(ks.tau, 1.0 + le.ratio_sq, max_relative = 1e-15);
        assert_eq!(ks.j, 1.0);
        assert_relative_eq!(ks.v, (1.0 + le.ratio_sq).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn algebraic_identities() {
        let p = flat(4, -0.7);
        for y in [[0.4, 1.0, -0.2, 0.3], [-0.9, 0.2, 0.5, -0.6], [1.3, -0.1, 0.05, 0.2]] {
            let le = line_element(&p, &y).unwrap();
            let ks = kernel_scalars(&p, &le);
            let (b, q) = (le.axial, le.transverse);
            let h = ks.charge.h;
            assert_relative_eq!(ks.l_scalar.powi(2) + h * h * b * b, ks.quad, max_relative = 1e-14);
            assert_relative_eq!(ks.a_scalar.powi(2) + h * h * q * q, ks.quad, max_relative = 1e-14);
            assert_relative_eq!(b * b * ks.tau, ks.quad, max_relative = 1e-14);
            assert!((0.0..=std::f64::consts::PI).contains(&ks.angle));
            assert_relative_eq!(ks.k, metric_function(&p, &y).unwrap(), max_relative = 1e-15);
            // V = √τ J with the sign of b
            assert_relative_eq!(ks.v, b.signum() * ks.tau.sqrt() * ks.j, max_relative = 1e-14);
        }
    }

    #[test]
    fn angle_is_continuous_across_orthogonal_directions() {
        let p = flat(2, 1.2);
        let f = |b: f64| {
            let le = line_element(&p, &[b, 1.0]).unwrap();
            kernel_scalars(&p, &le).angle
        };
        let (lo, hi) = (f(-1e-7), f(1e-7));
        assert!((lo - hi).abs() < 1e-6, "{lo} vs {hi}");
        let c = ChargeConstants::new(1.2);
        // at b = 0 both branches give π/2 − arctan(G/2) + arctan(q·g/(2h b) → ∞)… i.e. f = atan2(h, g/2)
        assert_relative_eq!(0.5 * (lo + hi), c.h.atan2(0.6), max_relative = 1e-6);
    }

    #[test]
    fn positive_homogeneity() {
        let p = flat(3, 1.1);
        let y = [-0.4, 0.8, 0.3];
        let k = metric_function(&p, &y).unwrap();
        for lam in [0.5, 2.0, 7.0] {
            let ys: Vec<f64> = y.iter().map(|v| v * lam).collect();
            assert_relative_eq!(metric_function(&p, &ys).unwrap(), lam * k, max_relative = 1e-14);
        }
    }

    struct MField(Point);
    impl YField for MField {
        fn eval<S: Scalar>(&self, _x: &[f64], y: &[S]) -> Result<Tensor<S>> {
            let le = line_element(&self.0, y)?;
            Ok(Tensor::from_vec(self.0.dim(), 0, vec![kernel_scalars(&self.0, &le).m]))
        }
    }

    #[test]
    fn m_gradient_matches_dual_derivative() {
        let p = flat(3, 0.9);
        let y = [0.6, -0.5, 0.9];
        let grad = jac_y(&MField(p.clone()), &p.x, &y).unwrap();
        let le = line_element(&p, &y).unwrap();
        let ks = kernel_scalars(&p, &le);
        let cd = g_derivative_scalars(&p, &le, &ks);
        for i in 0..3 {
            assert_relative_eq!(grad[[i]], cd.m_grad[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn charge_derivatives_match_central_differences() {
        let p = flat(3, 0.6);
        let y = [-0.3, 0.5, 0.9];
        let eval = |g: f64| {
            let pg = p.with_charge(g);
            let le = line_element(&pg, &y).unwrap();
            let ks = kernel_scalars(&pg, &le);
            let cd = g_derivative_scalars(&pg, &le, &ks);
            (ks.k * ks.k, ks.m, cd.m_grad[1], ks.angle, ks.m_hat)
        };
        let d = 1e-5;
        let (hi, lo) = (eval(0.6 + d), eval(0.6 - d));
        let le = line_element(&p, &y).unwrap();
        let ks = kernel_scalars(&p, &le);
        let cd = g_derivative_scalars(&p, &le, &ks);
        assert_relative_eq!((hi.0 - lo.0) / (2.0 * d), cd.d_k2, max_relative = 1e-8);
        assert_relative_eq!((hi.1 - lo.1) / (2.0 * d), cd.d_m, max_relative = 1e-8);
        assert_relative_eq!((hi.2 - lo.2) / (2.0 * d), cd.d_m_grad[1], max_relative = 1e-7);
        assert_relative_eq!((hi.3 - lo.3) / (2.0 * d), cd.d_angle, max_relative = 1e-8);
        assert_relative_eq!((hi.4 - lo.4) / (2.0 * d), cd.d_m_hat, max_relative = 1e-8);
    }

    /// `∫_0^w t / (1 + g t + t²) dt` by composite Simpson.
    fn log_generating(w: f64, g: f64) -> f64 {
        let n = 20_000;
        let h = w / n as f64;
        let f = |t: f64| t / (1.0 + g * t + t * t);
        let mut acc = f(0.0) + f(w);
        for k in 1..n {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn closed_form_matches_quadrature_of_generating_function() {
        let p = flat(3, 0.8);
        let q = 2f64.sqrt();
        let y = [1.0, 1.0, 1.0];
        let expect = 1.0 * log_generating(q, 0.8).exp();
        assert_relative_eq!(metric_function(&p, &y).unwrap(), expect, max_relative = 1e-12);
        let le = line_element(&p, &y).unwrap();
        assert_relative_eq!(kernel_scalars(&p, &le).k, expect, max_relative = 1e-12);
    }

    #[test]
    fn negative_axial_branch_matches_quadrature() {
        let g = -1.3;
        let p = flat(2, g);
        let c = ChargeConstants::new(g);
        let (b, q) = (-0.7, 0.4);
        let w = q / b;
        // V(0⁻) = −exp(−Gπ/2) fixes the lower hemisphere
        let v0 = -(-0.5 * c.big_g * std::f64::consts::PI).exp();
        let expect = b * v0 * log_generating(w, g).exp();
        assert_relative_eq!(metric_function(&p, &[b, q]).unwrap(), expect, max_relative = 1e-12);
        assert_relative_eq!(metric_function(&p, &[-1.0, 0.0]).unwrap(), -v0, max_relative = 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn rel(a: f64, b: f64) -> f64 {
            (a - b).abs() / b.abs().max(1.0)
        }

        proptest! {
            #[test]
            fn line_element_invariants(
                g in -1.9f64..1.9,
                y in proptest::collection::vec(-2.0f64..2.0, 4),
            ) {
                let p = flat(4, g);
                let Ok(le) = line_element(&p, &y) else { return Ok(()) };
                prop_assume!(le.transverse / le.riemann_len > 1e-3 && le.axial.abs() / le.riemann_len > 1e-3);
                let (b, q, s) = (le.axial, le.transverse, le.riemann_len);
                let tol = 1e-12;
                prop_assert!(rel(dot(&le.y_lo, &le.transverse_up), q * q) < tol);
                prop_assert!(dot(&le.transverse_lo, &p.b_up).abs() < tol);
                prop_assert!(dot(&le.y, &le.z).abs() < tol * s * s * s);
                let az: f64 = dot(&le.z, &mat_vec(&p.a_inv, &le.z));
                prop_assert!(rel(az, s * s * b * b * le.ratio_sq) < tol * (s * s * s * s).max(1.0));
                prop_assert!(dot(&le.e, &le.y).abs() < tol * s / q * s.max(1.0));
                for k in 0..4 {
                    prop_assert!(rel(le.z[k], q * q * le.e[k]) < tol * s.powi(2).max(1.0));
                }
                let e_up = mat_vec(&p.a_inv, &le.e);
                let ee = dot(&le.e, &e_up);
                let w4 = le.ratio_sq * le.ratio_sq;
                prop_assert!(rel(w4 * ee, (1.0 + le.ratio_sq) * le.ratio_sq) < 1e-10);
                let trace: f64 = (0..4).map(|i| le.eta_mixed[[i, i]]).sum();
                prop_assert!((trace - 2.0).abs() < tol);
                for i in 0..4 {
                    let eb: f64 = (0..4).map(|j| le.eta[[i, j]] * p.b_up[j]).sum();
                    let ee: f64 = (0..4).map(|j| le.eta[[i, j]] * e_up[j]).sum();
                    let ey: f64 = (0..4).map(|j| le.eta[[i, j]] * le.y[j]).sum();
                    prop_assert!(eb.abs() < tol && ee.abs() < 1e-10 * (1.0 + ee.abs()) && ey.abs() < tol * s);
                }
                let ks = kernel_scalars(&p, &le);
                prop_assert!(ks.quad > 0.0);
                let h = ks.charge.h;
                prop_assert!(rel(ks.l_scalar.powi(2) + h * h * b * b, ks.quad) < tol);
                prop_assert!(rel(ks.a_scalar.powi(2) + h * h * q * q, ks.quad) < tol);
                prop_assert!(rel(b * b * ks.tau, ks.quad) < tol);
                prop_assert!((0.0..=std::f64::consts::PI).contains(&ks.angle));
            }

            #[test]
            fn homogeneity_of_metric_function(
                g in -1.9f64..1.9,
                y in proptest::collection::vec(-2.0f64..2.0, 3),
                lam in prop::sample::select(vec![0.5, 2.0, 7.0]),
            ) {
                let p = flat(3, g);
                prop_assume!(y.iter().any(|v| v.abs() > 1e-3));
                let k = metric_function(&p, &y).unwrap();
                let ys: Vec<f64> = y.iter().map(|v| v * lam).collect();
                prop_assert!(rel(metric_function(&p, &ys).unwrap(), lam * k) < 1e-12);
            }

            #[test]
            fn log_derivative_of_generating_function(g in -1.9f64..1.9, w in -5.0f64..5.0) {
                prop_assume!(w.abs() > 1e-3);
                // y = (1, w) in the plane of the axis: b = 1, q = |w|
                let p = flat(2, g);
                let b = w.signum();
                let yy = [b, w.abs()];
                let le = line_element(&p, &[Dual::new(yy[0], 0.0), Dual::new(yy[1], 1.0)]).unwrap();
                let ks = kernel_scalars(&p, &le);
                // dV/dq at fixed b equals V'(w)/b
                let dv_dw = ks.v.eps * b;
                let w_here = le.ratio.re;
                prop_assert!(rel(dv_dw / ks.v.re, w_here / ks.tau.re) < 1e-12);
            }
        }
    }
}
