//! Horizontal connection, h-covariant derivatives and the A-special diagnostics.
//!
//! `γ^k_ij` are the Christoffel symbols of the Finslerian metric `g_ij(x, y)`
//! taken with x-differences at fixed y. `Ḡ^n_i = ½ ∂G^n/∂y^i` comes from duals
//! over the closed-form spray. The connection is
//! `Γ^k_ij = γ^k_ij − Ḡ^n_i C_n^k_j − Ḡ^n_j C_n^k_i + g^kl Ḡ^n_l C_nij`, `C = A/K`.

use crate::background::{BackgroundGeometry, Point};
use crate::diff::{grad_x, jac_y, Fd, YField};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::spray::{spray_pack, Local};
use crate::tensor::{dot, Tensor};
use crate::tensors::{element, Element};

/// Pointwise packs that can be evaluated as fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pack {
    /// `g_ij`
    Metric,
    /// `h_ij`
    Angular,
    /// `A_i`
    CartanVector,
    /// `α_i = A_i/‖A‖`
    Alpha,
    /// `H_ij`
    HTensor,
    /// `A_ijk`
    Cartan,
    /// `α_ijk = A_ijk/‖A‖`
    AlphaCartan,
    /// `A^m A_m`
    CartanNormSq,
}

impl Pack {
    pub fn rank(self) -> usize {
        match self {
            Pack::CartanNormSq => 0,
            Pack::CartanVector | Pack::Alpha => 1,
            Pack::Metric | Pack::Angular | Pack::HTensor => 2,
            Pack::Cartan | Pack::AlphaCartan => 3,
        }
    }

    pub fn extract<S: Scalar>(self, el: &Element<S>) -> Tensor<S> {
        let n = el.dim();
        match self {
            Pack::Metric => el.metric.metric.clone(),
            Pack::Angular => el.metric.angular.clone(),
            Pack::CartanVector => Tensor::from_slice(&el.cartan.vector),
            Pack::Alpha => Tensor::from_slice(&el.cartan.alpha),
            Pack::HTensor => el.cartan.h_tensor.clone(),
            Pack::Cartan => el.cartan.cartan.clone(),
            Pack::AlphaCartan => el.cartan.alpha_cartan.clone(),
            Pack::CartanNormSq => Tensor::from_vec(n, 0, vec![dot(&el.cartan.vector, &el.cartan.vector_up)]),
        }
    }
}

/// A pointwise pack as a field over `(x, y)`.
pub struct PackField<'a> {
    pub geom: &'a BackgroundGeometry,
    pub pack: Pack,
}

impl YField for PackField<'_> {
    fn eval<S: Scalar>(&self, x: &[f64], y: &[S]) -> Result<Tensor<S>> {
        let p = self.geom.point(x)?;
        Ok(self.pack.extract(&element(&p, y)?))
    }
}

/// `γ^k_ij = ½ g^kn (∂_j g_ni + ∂_i g_nj − ∂_n g_ji)` at fixed y, `[k, i, j]`.
pub fn finsler_christoffels<S: Scalar>(geom: &BackgroundGeometry, el: &Element<S>, x: &[f64], fd: Fd) -> Result<Tensor<S>> {
    let n = el.dim();
    let dg = grad_x(&PackField { geom, pack: Pack::Metric }, x, &el.line.y, fd)?; // [a, b, m]
    let lowered = Tensor::from_fn(n, 3, |ix| {
        let (nn, i, j) = (ix[0], ix[1], ix[2]);
        (dg[[nn, i, j]] + dg[[nn, j, i]] - dg[[j, i, nn]]) * 0.5
    });
    Ok(el.raise_first(&lowered))
}

/// Closed-form spray at a fixed base point, as a field in y only.
pub(crate) struct FixedSpray<'a>(pub(crate) &'a Local);

impl YField for FixedSpray<'_> {
    fn eval<S: Scalar>(&self, _x: &[f64], y: &[S]) -> Result<Tensor<S>> {
        let el = element(&self.0.point, y)?;
        Ok(Tensor::from_slice(&spray_pack(self.0, &el).spray))
    }
}

/// Everything needed to take horizontal derivatives at one line element.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizontalFrame<S> {
    pub el: Element<S>,
    /// `G^k`
    pub spray: Vec<S>,
    /// `Ḡ^n_i = ½ ∂G^n/∂y^i`, `[n, i]`
    pub half_jac: Tensor<S>,
    /// `γ^k_ij`, `[k, i, j]`
    pub gamma: Tensor<S>,
    /// `Γ^k_ij`, `[k, i, j]`
    pub conn: Tensor<S>,
}

impl<S: Scalar> HorizontalFrame<S> {
    pub fn dim(&self) -> usize {
        self.el.dim()
    }

    /// `C_n^k_j`, `[n, k, j]`
    pub fn cartan_mixed(&self) -> Tensor<S> {
        let c = self.el.cartan.cartan.scale(S::one() / self.el.k());
        self.el.raise_first(&c.permuted(&[1, 0, 2])).permuted(&[1, 0, 2])
    }
}

pub fn connection_coefficients<S: Scalar>(el: &Element<S>, gamma: &Tensor<S>, half_jac: &Tensor<S>) -> Tensor<S> {
    let n = el.dim();
    let inv_k = S::one() / el.k();
    let c = &el.cartan.cartan;
    let cm = el.raise_first(&c.permuted(&[1, 0, 2])).permuted(&[1, 0, 2]); // A_n^k_j
    // g^kl Ḡ^n_l
    let g_up = Tensor::from_fn(n, 2, |ix| {
        (0..n).fold(S::zero(), |acc, l| acc + el.metric.inverse[[ix[0], l]] * half_jac[[ix[1], l]])
    }); // [k, n]
    Tensor::from_fn(n, 3, |ix| {
        let (k, i, j) = (ix[0], ix[1], ix[2]);
        let mut acc = S::zero();
        for m in 0..n {
            acc += -(half_jac[[m, i]] * cm[[m, k, j]]) - half_jac[[m, j]] * cm[[m, k, i]] + g_up[[k, m]] * c[[m, i, j]];
        }
        gamma[[k, i, j]] + acc * inv_k
    })
}

pub fn horizontal_frame<S: Scalar>(geom: &BackgroundGeometry, x: &[f64], y: &[S]) -> Result<HorizontalFrame<S>> {
    let local = Local::at(geom, x)?;
    horizontal_frame_at(geom, &local, y)
}

pub fn horizontal_frame_at<S: Scalar>(geom: &BackgroundGeometry, local: &Local, y: &[S]) -> Result<HorizontalFrame<S>> {
    let el = element(&local.point, y)?;
    let spray = spray_pack(local, &el).spray;
    let half_jac = jac_y(&FixedSpray(local), &local.point.x, y)?.scale(S::cst(0.5));
    let gamma = finsler_christoffels(geom, &el, &local.point.x, geom.fd())?;
    let conn = connection_coefficients(&el, &gamma, &half_jac);
    Ok(HorizontalFrame {
        el,
        spray,
        half_jac,
        gamma,
        conn,
    })
}

/// Index placement of a tensor slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Lower,
    Upper,
}

/// `T_{..|l} = ∂_l T − Ḡ^m_l ∂T/∂y^m ∓ Γ` terms, one per slot; `l` is appended last.
pub fn h_covariant<F: YField, S: Scalar>(f: &F, slots: &[Slot], x: &[f64], frame: &HorizontalFrame<S>, fd: Fd) -> Result<Tensor<S>> {
    let y = &frame.el.line.y;
    let t = f.eval(x, y)?;
    assert_eq!(t.rank(), slots.len(), "slot list must match tensor rank");
    let dx = grad_x(f, x, y, fd)?;
    let dy = jac_y(f, x, y)?;
    Ok(h_covariant_from(&t, &dx, &dy, slots, frame))
}

/// Assemble the h-covariant derivative from precomputed value and partials.
pub fn h_covariant_from<S: Scalar>(t: &Tensor<S>, dx: &Tensor<S>, dy: &Tensor<S>, slots: &[Slot], frame: &HorizontalFrame<S>) -> Tensor<S> {
    let n = frame.dim();
    let (hj, conn) = (&frame.half_jac, &frame.conn);
    let rank = slots.len();
    let mut src = vec![0usize; rank];
    let mut dyi = vec![0usize; rank + 1];
    Tensor::from_fn(n, rank + 1, |ix| {
        let l = ix[rank];
        let mut v = dx.get(ix);
        dyi[..rank].copy_from_slice(&ix[..rank]);
        for m in 0..n {
            dyi[rank] = m;
            v -= dy.get(&dyi) * hj[[m, l]];
        }
        for (s, slot) in slots.iter().enumerate() {
            src.copy_from_slice(&ix[..rank]);
            for m in 0..n {
                src[s] = m;
                let c = match slot {
                    Slot::Lower => -conn[[m, ix[s], l]],
                    Slot::Upper => conn[[ix[s], m, l]],
                };
                v += c * t.get(&src);
            }
        }
        v
    })
}

/// `T_{..|m} l^m`
pub fn dot_along<S: Scalar>(hcov: &Tensor<S>, el: &Element<S>) -> Tensor<S> {
    hcov.contract_last(&el.metric.l_up)
}

/// The over-dot of a pack, as a field; `raise` raises the first index afterwards.
pub struct DotField<'a> {
    pub geom: &'a BackgroundGeometry,
    pub pack: Pack,
    pub raise: bool,
}

impl YField for DotField<'_> {
    fn eval<S: Scalar>(&self, x: &[f64], y: &[S]) -> Result<Tensor<S>> {
        let frame = horizontal_frame(self.geom, x, y)?;
        let f = PackField { geom: self.geom, pack: self.pack };
        let slots = vec![Slot::Lower; self.pack.rank()];
        let d = dot_along(&h_covariant(&f, &slots, x, &frame, self.geom.fd())?, &frame.el);
        Ok(if self.raise { frame.el.raise_first(&d) } else { d })
    }
}

/// `A_i|j` in the `τ`/`Γ̃` arrangement, `[i, j]`.
pub fn cartan_vector_hcov_alt<S: Scalar>(geom: &BackgroundGeometry, x: &[f64], frame: &HorizontalFrame<S>) -> Result<Tensor<S>> {
    let n = frame.dim();
    let el = &frame.el;
    let y = &el.line.y;
    let k = el.k();
    let inv_k = S::one() / k;
    let d = grad_x(&PackField { geom, pack: Pack::CartanVector }, x, y, geom.fd())?;
    let (a, c, tau, l_lo) = (&el.cartan.vector, &el.cartan.cartan, &el.cartan.tau, &el.metric.l_lo);
    let hj = &frame.half_jac;
    let cm = el.raise_first(&c.permuted(&[1, 0, 2])).permuted(&[1, 0, 2]); // A_n^k_j
    let g_up = Tensor::from_fn(n, 2, |ix| {
        (0..n).fold(S::zero(), |acc, l| acc + el.metric.inverse[[ix[0], l]] * hj[[ix[1], l]])
    });
    let tilde = Tensor::from_fn(n, 3, |ix| {
        let (kk, i, j) = (ix[0], ix[1], ix[2]);
        let s = (0..n).fold(S::zero(), |acc, m| acc - hj[[m, i]] * cm[[m, kk, j]] + g_up[[kk, m]] * c[[m, i, j]]);
        frame.gamma[[kk, i, j]] + s * inv_k
    });
    Ok(Tensor::from_fn(n, 2, |ix| {
        let (i, j) = (ix[0], ix[1]);
        let mut v = d[[i, j]];
        for kk in 0..n {
            v += -(hj[[kk, j]] * tau[[i, kk]] * inv_k) - tilde[[kk, i, j]] * a[kk] + hj[[kk, j]] * a[kk] * l_lo[i] * inv_k;
        }
        v
    }))
}

/// `A_i|j` under `∇b = 0`, `g_i = μ b_i`, `[i, j]`.
pub fn cartan_vector_hcov_involutive<S: Scalar>(p: &Point, el: &Element<S>, mu: f64) -> Tensor<S> {
    let n = el.dim();
    let a = &el.cartan.vector;
    let eta = involutive_eta(p, el, mu);
    Tensor::from_fn(n, 2, |ix| {
        let (i, j) = (ix[0], ix[1]);
        a[i] * (mu * p.b[j] / p.g) + eta * el.cartan.h_tensor[[i, j]]
    })
}

/// Coefficient `η` of `H_ij` in the involutive `A_i|j`: `μ N g B (M + M̂) / (8 K q)`.
pub fn involutive_eta<S: Scalar>(p: &Point, el: &Element<S>, mu: f64) -> S {
    let nn = el.dim() as f64;
    let ks = &el.scalars;
    ks.quad * (ks.m + ks.m_hat) * (mu * nn * p.g / 8.0) / (el.line.transverse * ks.k)
}

/// `η` from the collected form whose `M` bracket carries `+ g b` in place of `+ g b/2`.
pub fn involutive_eta_collected<S: Scalar>(p: &Point, el: &Element<S>, mu: f64) -> S {
    let nn = el.dim() as f64;
    let g = p.g;
    let (b, q) = (el.line.axial, el.line.transverse);
    let ks = &el.scalars;
    let ngh = nn * g * 0.5;
    let first = ks.m_hat * ks.quad / q * (mu * 0.25 * ngh);
    let second = ks.m * (b * (b * 2.0 + q * g) / (q * 2.0) + q + b * g) * (mu * 0.25 * ngh);
    (first + second) / ks.k
}

/// Results of the A-special diagnostics at one line element.
#[derive(Clone, Debug, PartialEq)]
pub struct ASpecial {
    /// `γ_k = (A^mA_m)_|k / (2 A^hA_h)`
    pub gamma_k: Vec<f64>,
    /// `γ = γ_k l^k`
    pub gamma: f64,
    /// least-squares `η`; `None` when `H` vanishes identically (N = 2)
    pub eta: Option<f64>,
    /// `A_i|k − γ_k A_i − η H_ik`, `[i, k]`
    pub residual: Tensor<f64>,
}

pub fn a_special(el: &Element<f64>, a_hcov: &Tensor<f64>, norm_sq_hcov: &[f64]) -> ASpecial {
    let n = el.dim();
    let a2: f64 = dot(&el.cartan.vector, &el.cartan.vector_up);
    let gamma_k: Vec<f64> = norm_sq_hcov.iter().map(|v| v / (2.0 * a2)).collect();
    let gamma = dot(&gamma_k, &el.metric.l_up);
    let a = &el.cartan.vector;
    let r0 = Tensor::from_fn(n, 2, |ix| a_hcov[[ix[0], ix[1]]] - gamma_k[ix[1]] * a[ix[0]]);
    let h = &el.cartan.h_tensor;
    let gi = &el.metric.inverse;
    let inner = |x: &Tensor<f64>, y: &Tensor<f64>| {
        let mut s = 0.0;
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        s += x[[i, k]] * y[[j, l]] * gi[[i, j]] * gi[[k, l]];
                    }
                }
            }
        }
        s
    };
    let eta = if n > 2 { Some(inner(&r0, h) / inner(h, h)) } else { None };
    let residual = match eta {
        Some(e) => r0.sub(&h.scale(e)),
        None => r0,
    };
    ASpecial {
        gamma_k,
        gamma,
        eta,
        residual,
    }
}

/// `γ_l A_ijk + (η/N)(H_ij H_kl + H_ik H_jl + H_jk H_il)`, `[i, j, k, l]`.
pub fn a_special_cartan_hcov(el: &Element<f64>, gamma_k: &[f64], eta: f64) -> Tensor<f64> {
    let n = el.dim();
    let nn = n as f64;
    let (c, h) = (&el.cartan.cartan, &el.cartan.h_tensor);
    Tensor::from_fn(n, 4, |ix| {
        let (i, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
        gamma_k[l] * c[[i, j, k]] + eta / nn * (h[[i, j]] * h[[k, l]] + h[[i, k]] * h[[j, l]] + h[[j, k]] * h[[i, l]])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::fields;
    use crate::diff::JacY;

    fn max_rel(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
        a.sub(b).max_abs() / b.max_abs().max(1.0)
    }

    fn involutive(n: usize) -> BackgroundGeometry {
        let mut e0 = vec![0.0; n];
        e0[0] = 1.0;
        let mut geom = BackgroundGeometry::new(
            n,
            fields::flat_metric(n),
            fields::constant_axis(e0.clone()),
            fields::axial_charge(0.8, 0.1, 0.0, e0),
        );
        geom.richardson = true;
        geom
    }

    fn twisted(n: usize) -> BackgroundGeometry {
        let mut grad = vec![0.0; n];
        grad[1] = 0.07;
        grad[0] = -0.05;
        let mut geom = BackgroundGeometry::new(n, fields::flat_metric(n), fields::twisted_axis(n, 0.2), fields::linear_charge(-0.6, grad));
        geom.richardson = true;
        geom
    }

    fn warped_linear(n: usize) -> BackgroundGeometry {
        let mut e0 = vec![0.0; n];
        e0[0] = 1.0;
        let mut grad = vec![0.0; n];
        grad[1] = 0.08;
        let mut geom = BackgroundGeometry::new(n, fields::warped_metric(n, 0.3), fields::constant_axis(e0), fields::linear_charge(0.5, grad));
        geom.richardson = true;
        geom
    }

    #[test]
    fn spray_matches_finsler_christoffels() {
        for geom in [involutive(3), twisted(3), twisted(4), warped_linear(3), warped_linear(4)] {
            let n = geom.dim;
            let x: Vec<f64> = (0..n).map(|i| 0.1 * i as f64 - 0.15).collect();
            let y: Vec<f64> = (0..n).map(|i| [0.6, -0.4, 0.9, 0.3][i]).collect();
            let frame = horizontal_frame(&geom, &x, &y).unwrap();
            let gyy = frame.gamma.contract_last(&y).contract_last(&y);
            let err = max_rel(&Tensor::from_slice(&frame.spray), &gyy);
            assert!(err < 1e-7, "spray vs γyy: {err:e}");
        }
    }

    #[test]
    fn connection_reproduces_half_jacobian() {
        let geom = twisted(3);
        let x = [0.1, -0.2, 0.3];
        let y = [0.6, -0.4, 0.9];
        let frame = horizontal_frame(&geom, &x, &y).unwrap();
        let gy = frame.conn.contract_last(&y);
        assert!(max_rel(&gy, &frame.half_jac) < 1e-7);
        // Ḡ^n_i = γ^n_ij y^j − 2 Ḡ^m C_m^n_i
        let cm = frame.cartan_mixed();
        let alt = Tensor::from_fn(3, 2, |ix| {
            let (nn, i) = (ix[0], ix[1]);
            let s: f64 = (0..3).map(|m| frame.spray[m] * cm[[m, nn, i]]).sum();
            (0..3).map(|j| frame.gamma[[nn, i, j]] * y[j]).sum::<f64>() - s
        });
        assert!(max_rel(&alt, &frame.half_jac) < 1e-7);
    }

    #[test]
    fn angular_metric_is_parallel() {
        let geom = warped_linear(3);
        let x = [0.1, -0.2, 0.3];
        let y = [0.6, -0.4, 0.9];
        let frame = horizontal_frame(&geom, &x, &y).unwrap();
        let f = PackField { geom: &geom, pack: Pack::Angular };
        let d = h_covariant(&f, &[Slot::Lower, Slot::Lower], &x, &frame, geom.fd()).unwrap();
        assert!(d.max_abs() < 1e-8, "{:e}", d.max_abs());
        let fm = PackField { geom: &geom, pack: Pack::Metric };
        let dm = h_covariant(&fm, &[Slot::Lower, Slot::Lower], &x, &frame, geom.fd()).unwrap();
        assert!(dm.max_abs() < 1e-8);
    }

    #[test]
    fn involutive_cartan_vector_derivative() {
        let geom = involutive(3);
        let x = [0.3, 0.2, -0.5];
        let local = Local::at(&geom, &x).unwrap();
        let mu = local.affine.g_gradient[0];
        for y in [[0.5, 0.3, -0.9], [-0.7, 0.2, 0.4]] {
            let frame = horizontal_frame_at(&geom, &local, &y).unwrap();
            let f = PackField { geom: &geom, pack: Pack::CartanVector };
            let num = h_covariant(&f, &[Slot::Lower], &x, &frame, geom.fd()).unwrap();
            let alt = cartan_vector_hcov_alt(&geom, &x, &frame).unwrap();
            let closed = cartan_vector_hcov_involutive(&local.point, &frame.el, mu);
            assert!(max_rel(&alt, &num) < 1e-9);
            assert!(max_rel(&closed, &num) < 1e-8, "{:e}", max_rel(&closed, &num));

            let nf = PackField { geom: &geom, pack: Pack::CartanNormSq };
            let dn = h_covariant(&nf, &[], &x, &frame, geom.fd()).unwrap();
            let sp = a_special(&frame.el, &num, dn.as_slice());
            assert!((sp.gamma_k[0] - mu / local.point.g).abs() < 1e-9);
            assert!(sp.residual.max_abs() < 1e-8);
            let eta = involutive_eta(&local.point, &frame.el, mu);
            assert!((sp.eta.unwrap() - eta).abs() < 1e-8);
            let printed = involutive_eta_collected(&local.point, &frame.el, mu);
            assert!((printed - eta).abs() > 1e-4);

            let cf = PackField { geom: &geom, pack: Pack::Cartan };
            let dc = h_covariant(&cf, &[Slot::Lower; 3], &x, &frame, geom.fd()).unwrap();
            let rebuilt = a_special_cartan_hcov(&frame.el, &sp.gamma_k, sp.eta.unwrap());
            assert!(max_rel(&rebuilt, &dc) < 1e-8);

            let alpha = dot_along(
                &h_covariant(&PackField { geom: &geom, pack: Pack::Alpha }, &[Slot::Lower], &x, &frame, geom.fd()).unwrap(),
                &frame.el,
            );
            assert!(alpha.max_abs() < 1e-9);
        }
    }

    #[test]
    fn landsberg_dot_cartan_vanishes() {
        let n = 3;
        let geom = BackgroundGeometry::new(
            n,
            fields::warped_metric(n, 0.4),
            fields::constant_axis(vec![1.0, 0.0, 0.0]),
            fields::constant_charge(0.6),
        );
        let f = DotField { geom: &geom, pack: Pack::Cartan, raise: false };
        let d = f.eval(&[0.2, 0.1, -0.3], &[0.4, -0.8, 0.5]).unwrap();
        assert!(d.max_abs() < 1e-8, "{:e}", d.max_abs());
        // also through duals in y
        let dj = jac_y(&JacY(&PackField { geom: &geom, pack: Pack::CartanVector }), &[0.2, 0.1, -0.3], &[0.4, -0.8, 0.5]).unwrap();
        assert_eq!(dj.rank(), 3);
    }
}
