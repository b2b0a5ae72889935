//! hh- and hv-curvatures, the divergence current and the involutive closed form.
//!
//! `K²R^i_k` is assembled from `Ḡ = G/2` with duals in y and nested central
//! differences in x; everything downstream inherits that second-order accuracy.

use crate::background::{BackgroundGeometry, Point};
use crate::connection::{h_covariant, DotField, FixedSpray, HorizontalFrame, Pack, PackField, Slot};
use crate::diff::{grad_x, jac_y, Fd, JacY, YField};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::spray::{a_ehess_form, e_grad_involutive_split, e_vector_involutive, quadratic_collected, s_tensor, Local};
use crate::tensor::{dot, Tensor};
use crate::tensors::{element, Element};

/// `∂Ḡ^i/∂y^k` as a field, `[i, k]`.
struct HalfSprayJac<'a>(&'a BackgroundGeometry);

impl YField for HalfSprayJac<'_> {
    fn eval<S: Scalar>(&self, x: &[f64], y: &[S]) -> Result<Tensor<S>> {
        let local = Local::at(self.0, x)?;
        Ok(jac_y(&FixedSpray(&local), x, y)?.scale(S::cst(0.5)))
    }
}

/// `Ḡ^i` as a field.
struct HalfSpray<'a>(&'a BackgroundGeometry);

impl YField for HalfSpray<'_> {
    fn eval<S: Scalar>(&self, x: &[f64], y: &[S]) -> Result<Tensor<S>> {
        let local = Local::at(self.0, x)?;
        Ok(FixedSpray(&local).eval(x, y)?.scale(S::cst(0.5)))
    }
}

/// `K² R^i_k = 2 ∂_k Ḡ^i − Ḡ^i_j Ḡ^j_k − y^j ∂_j Ḡ^i_k + 2 Ḡ^j Ḡ^i_kj`, `[i, k]`.
pub struct CurvatureField<'a> {
    pub geom: &'a BackgroundGeometry,
}

impl YField for CurvatureField<'_> {
    fn eval<S: Scalar>(&self, x: &[f64], y: &[S]) -> Result<Tensor<S>> {
        let geom = self.geom;
        let n = geom.dim;
        let fd = geom.nested_fd();
        let local = Local::at(geom, x)?;
        let fs = FixedSpray(&local);
        let g_half = fs.eval(x, y)?.scale(S::cst(0.5));
        let jac = jac_y(&fs, x, y)?.scale(S::cst(0.5));
        let hess = jac_y(&JacY(&fs), x, y)?.scale(S::cst(0.5)); // [i, k, j]
        let dx = grad_x(&HalfSpray(geom), x, y, fd)?; // [i, k]
        let dxy = grad_x(&HalfSprayJac(geom), x, y, fd)?; // [i, k, j]
        Ok(Tensor::from_fn(n, 2, |ix| {
            let (i, k) = (ix[0], ix[1]);
            let mut v = dx[[i, k]] * 2.0;
            for j in 0..n {
                v += -(jac[[i, j]] * jac[[j, k]]) - y[j] * dxy[[i, k, j]] + g_half[[j]] * hess[[i, k, j]] * 2.0;
            }
            v
        }))
    }
}

/// `R^i_km = (∂_m(K²R^i_k) − ∂_k(K²R^i_m)) / 3K`, `[i, k, m]`.
pub struct TorsionField<'a> {
    pub geom: &'a BackgroundGeometry,
}

impl TorsionField<'_> {
    fn build<S: Scalar>(&self, x: &[f64], y: &[S], k: S) -> Result<Tensor<S>> {
        let d = jac_y(&CurvatureField { geom: self.geom }, x, y)?; // [i, k, m]
        let inv = S::one() / (k * 3.0);
        Ok(d.sub(&d.permuted(&[0, 2, 1])).scale(inv))
    }
}

impl YField for TorsionField<'_> {
    fn eval<S: Scalar>(&self, x: &[f64], y: &[S]) -> Result<Tensor<S>> {
        let p = self.geom.point(x)?;
        let k = element(&p, y)?.k();
        self.build(x, y, k)
    }
}

/// `K R^i_km` as a field.
struct ScaledTorsion<'a>(&'a BackgroundGeometry);

impl YField for ScaledTorsion<'_> {
    fn eval<S: Scalar>(&self, x: &[f64], y: &[S]) -> Result<Tensor<S>> {
        let p = self.0.point(x)?;
        let k = element(&p, y)?.k();
        Ok(TorsionField { geom: self.0 }.build(x, y, k)?.scale(k))
    }
}

/// `R_n^i_km = ∂_n(K R^i_km) − (Ȧ^i_nm|k − Ȧ^i_nk|m + Ȧ^i_uk Ȧ^u_nm − Ȧ^i_um Ȧ^u_nk)`, `[n, i, k, m]`.
pub fn full_curvature(geom: &BackgroundGeometry, x: &[f64], frame: &HorizontalFrame<f64>) -> Result<Tensor<f64>> {
    let n = geom.dim;
    let y = &frame.el.line.y;
    let dk = jac_y(&ScaledTorsion(geom), x, y)?.permuted(&[3, 0, 1, 2]);
    let df = DotField { geom, pack: Pack::Cartan, raise: true };
    let ad = df.eval(x, y)?; // Ȧ^i_nm
    let adh = h_covariant(&df, &[Slot::Upper, Slot::Lower, Slot::Lower], x, frame, geom.nested_fd())?; // [i, n, m, k]
    Ok(Tensor::from_fn(n, 4, |ix| {
        let (nn, i, k, m) = (ix[0], ix[1], ix[2], ix[3]);
        let mut v = adh[[i, nn, m, k]] - adh[[i, nn, k, m]];
        for u in 0..n {
            v += ad[[i, u, k]] * ad[[u, nn, m]] - ad[[i, u, m]] * ad[[u, nn, k]];
        }
        dk[[nn, i, k, m]] - v
    }))
}

/// `P_jikl`, `[j, i, k, l]`, from `A_ijk|l` (`[i, j, k, l]`) and `Ȧ_ijk`.
pub fn hv_curvature(el: &Element<f64>, cartan_hcov: &Tensor<f64>, dot_cartan: &Tensor<f64>) -> Tensor<f64> {
    let n = el.dim();
    let c = &el.cartan.cartan;
    let gi = &el.metric.inverse;
    // A_ij^u
    let cu = Tensor::from_fn(n, 3, |ix| (0..n).map(|m| c[[ix[0], ix[1], m]] * gi[[m, ix[2]]]).sum::<f64>());
    let d = cartan_hcov;
    Tensor::from_fn(n, 4, |ix| {
        let (j, i, k, l) = (ix[0], ix[1], ix[2], ix[3]);
        let mut v = -(d[[i, j, l, k]] - d[[j, k, l, i]] + d[[k, i, l, j]]);
        for u in 0..n {
            v += cu[[i, j, u]] * dot_cartan[[u, k, l]] - cu[[j, k, u]] * dot_cartan[[u, i, l]] + cu[[k, i, u]] * dot_cartan[[u, j, l]];
        }
        v
    })
}

/// `P_[ji]kl = ½(P_jikl − P_ijkl)`
pub fn skew_part(p: &Tensor<f64>) -> Tensor<f64> {
    p.sub(&p.permuted(&[1, 0, 2, 3])).scale(0.5)
}

/// `γ K² R̂_jikl`, the right-hand side of the skew-part theorem.
pub fn skew_theorem_rhs(el: &Element<f64>, gamma: f64) -> Tensor<f64> {
    let k2 = el.k() * el.k();
    el.cartan.indicatrix.scale(gamma * k2)
}

/// `γ_i A_jkl − γ_j A_ikl + γ K² R̂_jikl`: the skew part implied by the A-special relation.
pub fn skew_from_a_special(el: &Element<f64>, gamma_k: &[f64], gamma: f64) -> Tensor<f64> {
    let n = el.dim();
    let c = &el.cartan.cartan;
    let rhs = skew_theorem_rhs(el, gamma);
    Tensor::from_fn(n, 4, |ix| {
        let (j, i, k, l) = (ix[0], ix[1], ix[2], ix[3]);
        gamma_k[i] * c[[j, k, l]] - gamma_k[j] * c[[i, k, l]] + rhs[[j, i, k, l]]
    })
}

/// `γ (A_ki^u A_ujl − A_jk^u A_uil)`
pub fn skew_cartan_quadratic(el: &Element<f64>, gamma: f64) -> Tensor<f64> {
    let n = el.dim();
    let c = &el.cartan.cartan;
    let gi = &el.metric.inverse;
    let cu = Tensor::from_fn(n, 3, |ix| (0..n).map(|m| c[[ix[0], ix[1], m]] * gi[[m, ix[2]]]).sum::<f64>());
    Tensor::from_fn(n, 4, |ix| {
        let (j, i, k, l) = (ix[0], ix[1], ix[2], ix[3]);
        gamma * (0..n).map(|u| cu[[k, i, u]] * c[[u, j, l]] - cu[[j, k, u]] * c[[u, i, l]]).sum::<f64>()
    })
}

/// `ρ_ij = ½(R_i^m_mj + R^m_ijm) − ½ g_ij R^mn_nm` from `R_n^i_km`.
pub fn rho(el: &Element<f64>, full: &Tensor<f64>) -> Tensor<f64> {
    let n = el.dim();
    let (g, gi) = (&el.metric.metric, &el.metric.inverse);
    let mut scalar = 0.0;
    for m in 0..n {
        for a in 0..n {
            for nn in 0..n {
                scalar += gi[[m, a]] * full[[a, nn, nn, m]];
            }
        }
    }
    Tensor::from_fn(n, 2, |ix| {
        let (i, j) = (ix[0], ix[1]);
        let mut v = 0.0;
        for m in 0..n {
            v += full[[i, m, m, j]];
            for a in 0..n {
                for b in 0..n {
                    v += gi[[m, a]] * full[[a, b, j, m]] * g[[b, i]];
                }
            }
        }
        0.5 * v - 0.5 * g[[i, j]] * scalar
    })
}

/// `J_j = P^[lm]_ku (−R^u_lj δ^k_m + ½ R^u_lm δ^k_j)` with the numeric skew part.
pub fn current_from_skew(el: &Element<f64>, p_skew: &Tensor<f64>, torsion: &Tensor<f64>) -> Vec<f64> {
    let n = el.dim();
    let gi = &el.metric.inverse;
    // P^[lm]_ku
    let up = Tensor::from_fn(n, 4, |ix| {
        let (l, m, k, u) = (ix[0], ix[1], ix[2], ix[3]);
        let mut v = 0.0;
        for a in 0..n {
            for b in 0..n {
                v += gi[[l, a]] * gi[[m, b]] * p_skew[[a, b, k, u]];
            }
        }
        v
    });
    contract_current(n, &up, torsion)
}

/// `J_j = c (h^l_u h^m_k − h^l_k h^m_u)(−R^u_lj δ^k_m + ½ R^u_lm δ^k_j)`
pub fn current_from_angular(el: &Element<f64>, coefficient: f64, torsion: &Tensor<f64>) -> Vec<f64> {
    let n = el.dim();
    let (lu, ll) = (&el.metric.l_up, &el.metric.l_lo);
    let h = Tensor::from_fn(n, 2, |ix| if ix[0] == ix[1] { 1.0 } else { 0.0 } - lu[ix[0]] * ll[ix[1]]);
    let up = Tensor::from_fn(n, 4, |ix| {
        let (l, m, k, u) = (ix[0], ix[1], ix[2], ix[3]);
        coefficient * (h[[l, u]] * h[[m, k]] - h[[l, k]] * h[[m, u]])
    });
    contract_current(n, &up, torsion)
}

fn contract_current(n: usize, up: &Tensor<f64>, torsion: &Tensor<f64>) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let mut v = 0.0;
            for l in 0..n {
                for m in 0..n {
                    for u in 0..n {
                        v += -up[[l, m, m, u]] * torsion[[u, l, j]] + 0.5 * up[[l, m, j, u]] * torsion[[u, l, m]];
                    }
                }
            }
            v
        })
        .collect()
}

/// `∂μ/∂x^k` for `μ = g_i b^i`. `g_i` is itself differenced, so pass the nested step.
pub fn involution_gradient(geom: &BackgroundGeometry, x: &[f64], fd: Fd) -> Result<Vec<f64>> {
    let mu = |x: &[f64]| -> Result<f64> {
        let p = geom.point(x)?;
        Ok(dot(&geom.charge_gradient(x), &p.b_up))
    };
    (0..x.len())
        .map(|k| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += fd.step;
            xm[k] -= fd.step;
            Ok((mu(&xp)? - mu(&xm)?) / (2.0 * fd.step))
        })
        .collect()
}

/// Inputs of the involutive closed form at one line element.
pub struct InvolutiveInputs<'a> {
    pub point: &'a Point,
    pub mu: f64,
    pub mu_grad: &'a [f64],
    /// `a_n^i_km`, `[n, i, k, m]`
    pub riemann: &'a Tensor<f64>,
    pub dm_dg: f64,
}

fn riemann_term(el: &Element<f64>, riemann: &Tensor<f64>) -> Tensor<f64> {
    let n = el.dim();
    let y = &el.line.y;
    Tensor::from_fn(n, 2, |ix| {
        let mut v = 0.0;
        for a in 0..n {
            for m in 0..n {
                v += y[a] * riemann[[a, ix[0], ix[1], m]] * y[m];
            }
        }
        v
    })
}

/// `K²R^i_k` from the involutive E-terms:
/// `(1/μ)E^iμ_k − (yμ)E^i_k/(2μ) + ½(yg)²S^i_k + ¼(−E^i_nE^n_k + 2E^nE^i_nk) + y a y`.
pub fn involutive_curvature(inp: &InvolutiveInputs, el: &Element<f64>) -> Tensor<f64> {
    let n = el.dim();
    let (p, mu) = (inp.point, inp.mu);
    let y = &el.line.y;
    let yg = el.line.axial * mu;
    let ymu = dot(y, inp.mu_grad);
    let e = e_vector_involutive(p, el, mu);
    let eg = e_grad_involutive_split(p, el, mu);
    let s = s_tensor(p, el, inp.dm_dg);
    let a_ehess = a_ehess_form(p, el, mu, true);
    let nn = n as f64;
    let (k, w) = (el.k(), el.line.ratio);
    let (m, mh) = (el.scalars.m, el.scalars.m_hat);
    let ra = riemann_term(el, inp.riemann);
    Tensor::from_fn(n, 2, |ix| {
        let (i, kk) = (ix[0], ix[1]);
        let ee: f64 = (0..n).map(|j| eg[[i, j]] * eg[[j, kk]]).sum();
        let e_ehess = m * yg * eg[[i, kk]] * 0.5 - mh * k / (nn * p.g) * w * yg * a_ehess[[i, kk]];
        let quad = 2.0 * e_ehess - ee;
        e[i] * inp.mu_grad[kk] / mu - ymu * eg[[i, kk]] / (2.0 * mu) + 0.5 * yg * yg * s[[i, kk]] + 0.25 * quad + ra[[i, kk]]
    })
}

/// The collected involutive closed form, index pairs read as `(i, k)` throughout
/// and `q̃` read as `q`.
pub fn involutive_curvature_collected(inp: &InvolutiveInputs, el: &Element<f64>) -> Tensor<f64> {
    let n = el.dim();
    let nn = n as f64;
    let (p, mu) = (inp.point, inp.mu);
    let g = p.g;
    let y = &el.line.y;
    let (b, q, w) = (el.line.axial, el.line.transverse, el.line.ratio);
    let quad = el.scalars.quad;
    let mh = el.scalars.m_hat;
    let yg = b * mu;
    let ymu = dot(y, inp.mu_grad);
    let e = e_vector_involutive(p, el, mu);
    let eg = e_grad_involutive_split(p, el, mu);
    let c2 = 2.0 / (nn * g);
    let gw1 = 1.0 + g * w;
    let bb = quad / (b * b);
    let (lu, al, au, hm) = (&el.metric.l_up, &el.cartan.vector, &el.cartan.vector_up, &el.cartan.h_tensor_mixed);
    let tail = quadratic_collected(p, el, mu);
    let ra = riemann_term(el, inp.riemann);
    Tensor::from_fn(n, 2, |ix| {
        let (i, k) = (ix[0], ix[1]);
        let aa = au[i] * al[k];
        let h = hm[[i, k]];
        let bracket = -0.5 * (2.0 * bb * c2 * c2 * aa + gw1 * h) * inp.dm_dg
            - (2.0 * bb * c2 * c2 * aa + gw1 * h) * (b * b * q * q / (quad * quad))
            - mh * w * (0.5 * h + c2 * c2 * aa - c2 * w * al[k] * lu[i]);
        e[i] * inp.mu_grad[k] / mu - ymu * eg[[i, k]] / (2.0 * mu) + 0.5 * yg * yg * bracket + 0.25 * tail[[i, k]] + ra[[i, k]]
    })
}

/// Residuals of a rank-2 `X^i_k` against a reference, split by direction.
#[derive(Clone, Debug, PartialEq)]
pub struct Projections {
    /// `max |ΔX^i_k l^k|, |l_i ΔX^i_k|`
    pub l_direction: f64,
    /// `max |ΔX^i_k A^k|, |A_i ΔX^i_k|` with `A` normalized
    pub a_direction: f64,
    /// `|H^k_i ΔX^i_k|`
    pub h_trace: f64,
    /// scale used to normalize the three numbers above
    pub scale: f64,
}

pub fn projections(el: &Element<f64>, x: &Tensor<f64>, reference: &Tensor<f64>) -> Projections {
    let d = x.sub(reference);
    let scale = reference.max_abs().max(1.0);
    let (lu, ll) = (&el.metric.l_up, &el.metric.l_lo);
    let norm = el.cartan.norm.max(f64::MIN_POSITIVE);
    let au: Vec<f64> = el.cartan.vector_up.iter().map(|v| v / norm).collect();
    let al: Vec<f64> = el.cartan.alpha.clone();
    let vmax = |v: Vec<f64>| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let l_direction = vmax(d.contract_last(lu).into_vec()).max(vmax(d.contract_first(ll).into_vec()));
    let a_direction = vmax(d.contract_last(&au).into_vec()).max(vmax(d.contract_first(&al).into_vec()));
    let hm = &el.cartan.h_tensor_mixed;
    let n = el.dim();
    let mut tr = 0.0;
    for i in 0..n {
        for k in 0..n {
            tr += hm[[k, i]] * d[[i, k]];
        }
    }
    Projections {
        l_direction: l_direction / scale,
        a_direction: a_direction / scale,
        h_trace: tr.abs() / scale,
        scale,
    }
}

/// Everything curvature-related at one line element.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvaturePack {
    /// `K² R^i_k`
    pub k2r: Tensor<f64>,
    /// `R^i_k`
    pub r: Tensor<f64>,
    /// `R^i_km`
    pub torsion: Tensor<f64>,
    /// `A_ijk|l`
    pub cartan_hcov: Tensor<f64>,
    /// `Ȧ_ijk`
    pub dot_cartan: Tensor<f64>,
    /// `Ȧ_i`
    pub dot_vector: Vec<f64>,
    /// `α̇_i`
    pub dot_alpha: Vec<f64>,
    /// `P_jikl`
    pub p: Tensor<f64>,
    /// `P_[ji]kl`
    pub p_skew: Tensor<f64>,
    /// `R_n^i_km`, only when requested
    pub full: Option<Tensor<f64>>,
    /// `ρ_ij`, only with `full`
    pub rho: Option<Tensor<f64>>,
}

pub fn curvatures(geom: &BackgroundGeometry, x: &[f64], frame: &HorizontalFrame<f64>, with_full: bool) -> Result<CurvaturePack> {
    let y = &frame.el.line.y;
    let el = &frame.el;
    let k2r = CurvatureField { geom }.eval(x, y)?;
    let k = el.k();
    let r = k2r.scale(1.0 / (k * k));
    let torsion = TorsionField { geom }.eval(x, y)?;
    let fd = geom.fd();
    let cartan_hcov = h_covariant(&PackField { geom, pack: Pack::Cartan }, &[Slot::Lower; 3], x, frame, fd)?;
    let lu = &el.metric.l_up;
    let dot_cartan = cartan_hcov.contract_last(lu);
    let dv = h_covariant(&PackField { geom, pack: Pack::CartanVector }, &[Slot::Lower], x, frame, fd)?;
    let da = h_covariant(&PackField { geom, pack: Pack::Alpha }, &[Slot::Lower], x, frame, fd)?;
    let p = hv_curvature(el, &cartan_hcov, &dot_cartan);
    let p_skew = skew_part(&p);
    let full = if with_full { Some(full_curvature(geom, x, frame)?) } else { None };
    let rho = full.as_ref().map(|f| rho(el, f));
    Ok(CurvaturePack {
        k2r,
        r,
        torsion,
        cartan_hcov,
        dot_cartan,
        dot_vector: dv.contract_last(lu).into_vec(),
        dot_alpha: da.contract_last(lu).into_vec(),
        p,
        p_skew,
        full,
        rho,
    })
}

/// `Local` plus curvature of the associated Riemannian metric.
pub fn riemann_at(geom: &BackgroundGeometry, local: &Local) -> Result<Tensor<f64>> {
    geom.riemann(&local.point.x, &local.affine.christoffels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::fields;
    use crate::connection::horizontal_frame;
    use crate::kernel::g_derivative_scalars;

    fn max_rel(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
        a.sub(b).max_abs() / b.max_abs().max(1.0)
    }

    #[test]
    fn riemannian_limit_reproduces_background_curvature() {
        let n = 3;
        let mut geom = BackgroundGeometry::new(n, fields::warped_metric(n, 0.5), fields::constant_axis(vec![1.0, 0.0, 0.0]), fields::constant_charge(0.0));
        geom.richardson = true;
        let x = [0.2, 0.1, -0.3];
        let y = [0.4, -0.8, 0.5];
        let local = Local::at(&geom, &x).unwrap();
        let ra = riemann_at(&geom, &local).unwrap();
        let frame = horizontal_frame(&geom, &x, &y).unwrap();
        let k2r = CurvatureField { geom: &geom }.eval(&x, &y).unwrap();
        let yay = riemann_term(&frame.el, &ra);
        assert!(max_rel(&k2r, &yay) < 1e-6, "{:e}", max_rel(&k2r, &yay));
        let full = full_curvature(&geom, &x, &frame).unwrap();
        assert!(max_rel(&full, &ra) < 1e-5, "{:e}", max_rel(&full, &ra));
    }

    #[test]
    fn constant_charge_flat_is_curvature_free() {
        let n = 3;
        let geom = BackgroundGeometry::new(n, fields::flat_metric(n), fields::constant_axis(vec![0.0, 1.0, 0.0]), fields::constant_charge(0.7));
        let x = [0.2, 0.1, -0.3];
        let y = [0.4, -0.8, 0.5];
        let frame = horizontal_frame(&geom, &x, &y).unwrap();
        let cp = curvatures(&geom, &x, &frame, false).unwrap();
        assert_eq!(cp.k2r.max_abs(), 0.0);
        assert_eq!(cp.p.max_abs(), 0.0);
    }

    #[test]
    fn involutive_closed_form_matches_numeric() {
        let n = 3;
        let e0 = vec![1.0, 0.0, 0.0];
        let mut geom = BackgroundGeometry::new(n, fields::flat_metric(n), fields::constant_axis(e0.clone()), fields::axial_charge(0.8, 0.3, 0.2, e0));
        geom.richardson = true;
        let x = [0.3, 0.2, -0.5];
        let local = Local::at(&geom, &x).unwrap();
        let mu = local.affine.g_gradient[0];
        let mu_grad = involution_gradient(&geom, &x, geom.nested_fd()).unwrap();
        let ra = riemann_at(&geom, &local).unwrap();
        for y in [[0.5, 0.3, -0.9], [-0.7, 0.2, 0.4]] {
            let el = element(&local.point, &y).unwrap();
            let dm = g_derivative_scalars(&local.point, &el.line, &el.scalars).d_m;
            let inp = InvolutiveInputs { point: &local.point, mu, mu_grad: &mu_grad, riemann: &ra, dm_dg: dm };
            let closed = involutive_curvature(&inp, &el);
            let k2r = CurvatureField { geom: &geom }.eval(&x, &y).unwrap();
            assert!(max_rel(&closed, &k2r) < 1e-6, "{:e}", max_rel(&closed, &k2r));
            let collected = involutive_curvature_collected(&inp, &el);
            let pr = projections(&el, &collected, &k2r);
            assert!(pr.h_trace > 1e-6);
        }
    }

    #[test]
    fn curvature_identities_and_skew_part() {
        let n = 3;
        let e0 = vec![1.0, 0.0, 0.0];
        let mut geom = BackgroundGeometry::new(n, fields::flat_metric(n), fields::constant_axis(e0.clone()), fields::axial_charge(0.8, 0.1, 0.0, e0));
        geom.richardson = true;
        let x = [0.3, 0.2, -0.5];
        let y = [0.5, 0.3, -0.9];
        let frame = horizontal_frame(&geom, &x, &y).unwrap();
        let cp = curvatures(&geom, &x, &frame, false).unwrap();
        let el = &frame.el;
        let ry = cp.r.contract_last(&y);
        assert!(ry.max_abs() < 1e-6);
        let rkm_y = cp.torsion.contract_last(&y);
        assert!(max_rel(&rkm_y, &cp.r.scale(el.k())) < 1e-6);

        let mu = 0.1;
        let g = frame.el.scalars.charge.g;
        let gamma_k = vec![mu / g, 0.0, 0.0];
        let gamma = dot(&gamma_k, &el.metric.l_up);
        let corrected = skew_from_a_special(el, &gamma_k, gamma);
        assert!(max_rel(&cp.p_skew, &corrected) < 1e-7, "{:e}", max_rel(&cp.p_skew, &corrected));
        let quad = skew_cartan_quadratic(el, gamma);
        let rhs = skew_theorem_rhs(el, gamma);
        assert!(max_rel(&quad, &rhs) < 1e-12);
    }
}
