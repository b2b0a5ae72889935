//! Metric tensor and the Cartan family at a line element.
//!
//! Every field here is a closed form in the algebraic variables of
//! [`LineElement`]; the differentiation oracles that certify them live in the
//! harness. Index order is as written in the field docs, lower indices unless
//! marked `_up`/mixed. Derivative tensors carry the derivative index last.

use crate::background::Point;
use crate::error::{FinslerError, Result};
use crate::kernel::{g_derivative_scalars, kernel_scalars, line_element, require_charge, ChargeDerivatives, KernelScalars, LineElement};
use crate::linalg::determinant;
use crate::scalar::Scalar;
use crate::tensor::{dot, lift_vec, mat_vec, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct MetricPack<S> {
    /// `y_i = ½ ∂K²/∂y^i`
    pub y_lo: Vec<S>,
    /// `l_i = y_i / K`
    pub l_lo: Vec<S>,
    /// `l^i = y^i / K`
    pub l_up: Vec<S>,
    /// `g_ij`
    pub metric: Tensor<S>,
    /// `g^ij`
    pub inverse: Tensor<S>,
    /// `h_ij = g_ij − l_i l_j`
    pub angular: Tensor<S>,
    /// `det g_ij` by elimination.
    pub det: S,
    /// `det g_ij = V^{2N} τ^{−N} det a_ij`
    pub det_closed: S,
}

pub fn metric_pack<S: Scalar>(p: &Point, le: &LineElement<S>, ks: &KernelScalars<S>) -> MetricPack<S> {
    let n = p.dim();
    let a = Tensor::<S>::lift(&p.a);
    let a_inv = Tensor::<S>::lift(&p.a_inv);
    let b_lo: Vec<S> = lift_vec(&p.b);
    let b_up: Vec<S> = lift_vec(&p.b_up);
    let (b, w) = (le.axial, le.ratio);
    let quad = ks.quad;
    let k2 = ks.k * ks.k;
    let v = &le.transverse_lo;
    let y = &le.y;

    let scale = k2 / quad;
    let gs = S::cst(p.g) / quad;
    let c_bb = b * b * (w * p.g + 1.0) * w;
    let c_bv = b * w;
    let c_vv = -w.recip();
    let metric = Tensor::from_fn(n, 2, |ix| {
        let (i, j) = (ix[0], ix[1]);
        let bracket = c_bb * b_lo[i] * b_lo[j] + c_bv * (b_lo[i] * v[j] + b_lo[j] * v[i]) + c_vv * v[i] * v[j];
        scale * (a[[i, j]] + gs * bracket)
    });
    let inv_scale = quad / k2;
    let inverse = Tensor::from_fn(n, 2, |ix| {
        let (i, j) = (ix[0], ix[1]);
        inv_scale
            * (a_inv[[i, j]]
                + ks.p * b_up[i] * b_up[j]
                + ks.r * (b_up[i] * y[j] + b_up[j] * y[i])
                + ks.t * y[i] * y[j])
    });
    let c_e = b * b * w * w / quad;
    let y_lo: Vec<S> = (0..n).map(|k| k2 / b * (b_lo[k] + c_e * le.e[k])).collect();
    let l_lo: Vec<S> = y_lo.iter().map(|&v| v / ks.k).collect();
    let l_up: Vec<S> = y.iter().map(|&v| v / ks.k).collect();
    let angular = Tensor::from_fn(n, 2, |ix| metric[[ix[0], ix[1]]] - l_lo[ix[0]] * l_lo[ix[1]]);
    let det = determinant(&metric);
    let det_closed = ks.v.powi(2 * n as i32) / ks.tau.powi(n as i32) * p.det_a;
    MetricPack {
        y_lo,
        l_lo,
        l_up,
        metric,
        inverse,
        angular,
        det,
        det_closed,
    }
}

/// Cartan family. On the Riemannian branch (g = 0) every Cartan quantity is
/// zero, the normalized vector is set to zero and the H-tensor reduces to `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct CartanPack<S> {
    pub riemannian: bool,
    /// `A_k = g^ij A_ijk`
    pub vector: Vec<S>,
    /// `A^k`
    pub vector_up: Vec<S>,
    /// `‖A‖ = (N/2)|g|`
    pub norm: f64,
    /// `α_k = A_k / ‖A‖`
    pub alpha: Vec<S>,
    pub alpha_up: Vec<S>,
    /// `H_ij = h_ij − α_i α_j`
    pub h_tensor: Tensor<S>,
    /// `H^k_n = δ^k_n − l^k l_n − α^k α_n`, `[k, n]`
    pub h_tensor_mixed: Tensor<S>,
    /// `A_ijk`
    pub cartan: Tensor<S>,
    /// `α_ijk = A_ijk / ‖A‖`
    pub alpha_cartan: Tensor<S>,
    /// Indicatrix curvature `R̂_ijmn`, all indices lowered.
    pub indicatrix: Tensor<S>,
    /// `R_im = R̂_i^j_mj`
    pub indicatrix_ricci: Tensor<S>,
    /// `R = R_im g^im`
    pub indicatrix_scalar: S,
    /// `τ_ij = A_ij − A_k A_i^k_j` with `A_ij = K ∂A_i/∂y^j + l_i A_j`
    pub tau: Tensor<S>,
    /// `τ_ijkn`
    pub tau4: Tensor<S>,
    /// `∂A_k/∂y^n`, `[k, n]`
    pub vector_grad: Tensor<S>,
    /// `∂A^k/∂y^n`, `[k, n]`
    pub vector_up_grad: Tensor<S>,
    /// `∂H^k_n/∂y^m`, `[k, n, m]`
    pub h_tensor_mixed_grad: Tensor<S>,
    /// `∂A_ijk/∂y^n`, `[i, j, k, n]`
    pub cartan_grad: Tensor<S>,
}

pub fn cartan_pack<S: Scalar>(p: &Point, le: &LineElement<S>, ks: &KernelScalars<S>, mp: &MetricPack<S>) -> Result<CartanPack<S>> {
    require_charge(p.g)?;
    let n = p.dim();
    let nn = n as f64;
    let g = p.g;
    let k = ks.k;
    let (b, q, w) = (le.axial, le.transverse, le.ratio);
    let quad = ks.quad;
    let l_lo = &mp.l_lo;
    let l_up = &mp.l_up;
    let hh = &mp.angular;
    let delta = |i: usize, j: usize| if i == j { S::one() } else { S::zero() };

    if ks.riemannian() {
        let zeros = vec![S::zero(); n];
        let h_mixed = Tensor::from_fn(n, 2, |ix| delta(ix[0], ix[1]) - l_up[ix[0]] * l_lo[ix[1]]);
        let h_mixed_grad = Tensor::from_fn(n, 3, |ix| {
            let (kk, nn_, m) = (ix[0], ix[1], ix[2]);
            let hk_m: S = h_mixed[[kk, m]];
            -(hk_m * l_lo[nn_] + l_up[kk] * hh[[nn_, m]]) / k
        });
        return Ok(CartanPack {
            riemannian: true,
            vector: zeros.clone(),
            vector_up: zeros.clone(),
            norm: 0.0,
            alpha: zeros.clone(),
            alpha_up: zeros,
            h_tensor: hh.clone(),
            h_tensor_mixed: h_mixed,
            cartan: Tensor::zeros(n, 3),
            alpha_cartan: Tensor::zeros(n, 3),
            indicatrix: Tensor::zeros(n, 4),
            indicatrix_ricci: Tensor::zeros(n, 2),
            indicatrix_scalar: S::zero(),
            tau: Tensor::zeros(n, 2),
            tau4: Tensor::zeros(n, 4),
            vector_grad: Tensor::zeros(n, 2),
            vector_up_grad: Tensor::zeros(n, 2),
            h_tensor_mixed_grad: h_mixed_grad,
            cartan_grad: Tensor::zeros(n, 4),
        });
    }

    let b_up: Vec<S> = lift_vec(&p.b_up);
    let y = &le.y;
    let vector: Vec<S> = le.e.iter().map(|&e| -(k * q * e) * (nn * g * 0.5) / quad).collect();
    let c_up = S::cst(nn * g * 0.5) / (k * b * w);
    let vector_up: Vec<S> = (0..n)
        .map(|i| c_up * (quad * b_up[i] - b * (w * g + 1.0) * y[i]))
        .collect();
    let norm = 0.5 * nn * g.abs();
    let a2 = S::cst(norm * norm);
    let alpha: Vec<S> = vector.iter().map(|&v| v / norm).collect();
    let alpha_up: Vec<S> = vector_up.iter().map(|&v| v / norm).collect();
    let h_tensor = Tensor::from_fn(n, 2, |ix| hh[[ix[0], ix[1]]] - alpha[ix[0]] * alpha[ix[1]]);
    let h_tensor_mixed = Tensor::from_fn(n, 2, |ix| {
        let (i, j) = (ix[0], ix[1]);
        delta(i, j) - l_up[i] * l_lo[j] - alpha_up[i] * alpha[j]
    });
    let av = &vector;
    let cartan = Tensor::from_fn(n, 3, |ix| {
        let (i, j, kk) = (ix[0], ix[1], ix[2]);
        (hh[[j, kk]] * av[i] + hh[[i, kk]] * av[j] + hh[[i, j]] * av[kk] - av[i] * av[j] * av[kk] / a2) / nn
    });
    let alpha_cartan = cartan.scale(S::cst(1.0 / norm));
    let c_ind = a2 / (k * k * (nn * nn));
    let indicatrix = Tensor::from_fn(n, 4, |ix| {
        let (i, j, m, nq) = (ix[0], ix[1], ix[2], ix[3]);
        c_ind * (hh[[i, nq]] * hh[[m, j]] - hh[[i, m]] * hh[[nq, j]])
    });
    let c_ric = a2 * (2.0 / nn - 1.0) / (k * k * nn);
    let indicatrix_ricci = hh.scale(c_ric);
    let indicatrix_scalar = c_ric * (nn - 1.0);

    let hz = &h_tensor;
    let hm = &h_tensor_mixed;
    let c_tau = -(w * g + 2.0) * (nn * g * 0.25) / w;
    let tau = hz.scale(c_tau);
    let c_tau4 = -(w * g + 2.0) * (g * 0.25) / w;
    let tau4 = Tensor::from_fn(n, 4, |ix| {
        let (i, j, kk, m) = (ix[0], ix[1], ix[2], ix[3]);
        c_tau4 * (hz[[j, kk]] * hz[[i, m]] + hz[[i, kk]] * hz[[j, m]] + hz[[j, i]] * hz[[kk, m]])
    });

    let c_h = S::cst(nn * g * 0.5) / (k * w);
    let vector_grad = Tensor::from_fn(n, 2, |ix| {
        let (kk, m) = (ix[0], ix[1]);
        -(av[m] * l_lo[kk]) / k - c_h * hz[[kk, m]] + av[kk] * av[m] * (2.0 / nn) / k
    });
    let vector_up_grad = Tensor::from_fn(n, 2, |ix| {
        let (kk, m) = (ix[0], ix[1]);
        -(av[m] * l_up[kk]) / k - c_h * (w * g + 1.0) * hm[[kk, m]] - vector_up[kk] * av[m] * (2.0 / nn) / k
    });
    let c_g = S::cst(2.0 / (nn * g)) / w;
    let h_tensor_mixed_grad = Tensor::from_fn(n, 3, |ix| {
        let (kk, nq, m) = (ix[0], ix[1], ix[2]);
        (-(hm[[kk, m]] * l_lo[nq]) - l_up[kk] * hz[[nq, m]]
            + c_g * hz[[nq, m]] * vector_up[kk]
            + c_g * (w * g + 1.0) * hm[[kk, m]] * av[nq])
            / k
    });
    let c_hh = S::cst(g * 0.5) / (k * w);
    let cartan_grad = Tensor::from_fn(n, 4, |ix| {
        let (i, j, kk, m) = (ix[0], ix[1], ix[2], ix[3]);
        let c = &cartan;
        let t1 = (c[[j, kk, m]] * av[i] + c[[i, kk, m]] * av[j] + c[[i, j, m]] * av[kk]) * (2.0 / nn) / k;
        let t2 = (l_lo[j] * c[[kk, m, i]] + l_lo[i] * c[[kk, m, j]] + l_lo[kk] * c[[i, j, m]]) / k;
        let t3 = (hz[[j, kk]] * av[i] * av[m] + hz[[i, kk]] * av[j] * av[m] + hz[[i, j]] * av[kk] * av[m])
            * (2.0 / (nn * nn))
            / k;
        let t4 = c_hh * (hz[[j, kk]] * hz[[i, m]] + hz[[i, kk]] * hz[[j, m]] + hz[[j, i]] * hz[[kk, m]]);
        t1 - t2 + t3 - t4
    });

    Ok(CartanPack {
        riemannian: false,
        vector,
        vector_up,
        norm,
        alpha,
        alpha_up,
        h_tensor,
        h_tensor_mixed,
        cartan,
        alpha_cartan,
        indicatrix,
        indicatrix_ricci,
        indicatrix_scalar,
        tau,
        tau4,
        vector_grad,
        vector_up_grad,
        h_tensor_mixed_grad,
        cartan_grad,
    })
}

/// All pointwise packs at one line element.
#[derive(Clone, Debug, PartialEq)]
pub struct Element<S> {
    pub line: LineElement<S>,
    pub scalars: KernelScalars<S>,
    pub metric: MetricPack<S>,
    pub cartan: CartanPack<S>,
}

impl<S: Scalar> Element<S> {
    pub fn dim(&self) -> usize {
        self.line.dim()
    }

    pub fn k(&self) -> S {
        self.scalars.k
    }

    /// Raise the first index of a covariant tensor with `g^ij`.
    pub fn raise_first(&self, t: &Tensor<S>) -> Tensor<S> {
        let n = self.dim();
        let gi = &self.metric.inverse;
        let stride = t.as_slice().len() / n;
        let src = t.as_slice();
        let mut out = vec![S::zero(); src.len()];
        for i in 0..n {
            for r in 0..n {
                let c = gi[[i, r]];
                for s in 0..stride {
                    out[i * stride + s] += c * src[r * stride + s];
                }
            }
        }
        Tensor::from_vec(n, t.rank(), out)
    }
}

pub fn element<S: Scalar>(p: &Point, y: &[S]) -> Result<Element<S>> {
    require_charge(p.g)?;
    let line = line_element(p, y)?;
    let scalars = kernel_scalars(p, &line);
    let metric = metric_pack(p, &line, &scalars);
    let cartan = cartan_pack(p, &line, &scalars, &metric)?;
    Ok(Element {
        line,
        scalars,
        metric,
        cartan,
    })
}

/// Charge derivatives of the metric family at fixed `(x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeDerivativeTensors<S> {
    pub scalars: ChargeDerivatives<S>,
    /// `∂y_i/∂g = M y_i + (2 q² K / (g N B)) A_i`
    pub y_lo: Vec<S>,
    /// `∂y_i/∂g = M y_i − (q³ K² / B²) e_i`
    pub y_lo_from_axis: Vec<S>,
    /// `∂g_ij/∂g`
    pub metric: Tensor<S>,
    /// `∂A_i/∂g`
    pub vector: Vec<S>,
    /// `∂(K A^k / (N g))/∂g = −½ (y^k − b b^k)`
    pub scaled_vector_up: Vec<S>,
}

pub fn g_derivative_tensors<S: Scalar>(p: &Point, el: &Element<S>) -> Result<ChargeDerivativeTensors<S>> {
    if el.cartan.riemannian {
        return Err(FinslerError::RiemannianBranch("charge derivatives of the Cartan family"));
    }
    let n = p.dim();
    let nn = n as f64;
    let g = p.g;
    let (le, ks, mp, cp) = (&el.line, &el.scalars, &el.metric, &el.cartan);
    let scalars = g_derivative_scalars(p, le, ks);
    let (b, q, k) = (le.axial, le.transverse, ks.k);
    let quad = ks.quad;
    let m = ks.m;
    let av = &cp.vector;
    let y_lo: Vec<S> = (0..n)
        .map(|i| m * mp.y_lo[i] + q * q * k * av[i] * (2.0 / (g * nn)) / quad)
        .collect();
    let y_lo_from_axis: Vec<S> = (0..n)
        .map(|i| m * mp.y_lo[i] - q * q * q * k * k * le.e[i] / (quad * quad))
        .collect();
    let c_al = q * q / quad * (2.0 / (g * nn));
    let c_h = b * q / quad;
    let c_aa = b * q * 2.0 / quad * (4.0 / (g * g * nn * nn));
    let metric = Tensor::from_fn(n, 2, |ix| {
        let (i, j) = (ix[0], ix[1]);
        m * mp.metric[[i, j]] + c_al * (av[i] * mp.l_lo[j] + mp.l_lo[i] * av[j]) - c_h * cp.h_tensor[[i, j]] - c_aa * av[i] * av[j]
    });
    let scale = scalars.cartan_scale.expect("nonzero charge");
    let vector: Vec<S> = av.iter().map(|&a| scale * a).collect();
    let scaled_vector_up: Vec<S> = le.transverse_up.iter().map(|&v| v * -0.5).collect();
    Ok(ChargeDerivativeTensors {
        scalars,
        y_lo,
        y_lo_from_axis,
        metric,
        vector,
        scaled_vector_up,
    })
}

/// `(∂g_kj/∂g g_i + ∂g_ik/∂g g_j − ∂g_ij/∂g g_k) A^k` by direct contraction of
/// the metric charge derivative with the gradient `g_i`.
pub fn charge_gradient_combination<S: Scalar>(el: &Element<S>, dg: &ChargeDerivativeTensors<S>, grad: &[f64]) -> Tensor<S> {
    let n = el.dim();
    let gr: Vec<S> = lift_vec(grad);
    let au = &el.cartan.vector_up;
    let d = &dg.metric;
    let dka = |j: usize| (0..n).fold(S::zero(), |acc, kk| acc + d[[kk, j]] * au[kk]);
    let ga = dot(&gr, au);
    let col: Vec<S> = (0..n).map(dka).collect();
    Tensor::from_fn(n, 2, |ix| {
        let (i, j) = (ix[0], ix[1]);
        col[j] * gr[i] + col[i] * gr[j] - d[[i, j]] * ga
    })
}

/// Closed form of [`charge_gradient_combination`] in terms of the Cartan vector.
pub fn charge_gradient_combination_closed<S: Scalar>(p: &Point, el: &Element<S>, grad: &[f64]) -> Tensor<S> {
    let n = el.dim();
    let nn = n as f64;
    let g = p.g;
    let (le, ks, mp, cp) = (&el.line, &el.scalars, &el.metric, &el.cartan);
    let (b, q) = (le.axial, le.transverse);
    let quad = ks.quad;
    let m = ks.m;
    let gr: Vec<S> = lift_vec(grad);
    let av = &cp.vector;
    let row = |j: usize| m * av[j] + q * q / quad * (g * nn * 0.5) * mp.l_lo[j] - b * q * 2.0 / quad * av[j];
    let ga = dot(&gr, &cp.vector_up);
    let c_al = q * q / quad * (2.0 / (g * nn));
    let c_aa = b * q * 2.0 / quad * (4.0 / (g * g * nn * nn));
    Tensor::from_fn(n, 2, |ix| {
        let (i, j) = (ix[0], ix[1]);
        let dgij = m * mp.metric[[i, j]] + c_al * (av[i] * mp.l_lo[j] + mp.l_lo[i] * av[j])
            - b * q / quad * cp.h_tensor[[i, j]]
            - c_aa * av[i] * av[j];
        row(j) * gr[i] + row(i) * gr[j] - dgij * ga
    })
}

/// The same combination under `g_i = μ b_i`.
pub fn charge_gradient_combination_involutive<S: Scalar>(p: &Point, el: &Element<S>, mu: f64) -> Tensor<S> {
    involutive_combination(p, el, mu, el.scalars.m - el.line.axial.sq() * el.line.ratio / el.scalars.quad)
}

/// Variant of [`charge_gradient_combination_involutive`] carrying `M̂` in the
/// H-tensor coefficient. It differs from the direct contraction by
/// `μ (N g q / 2K)(b² w / B) H_ij` and is kept as a diagnostic.
pub fn charge_gradient_combination_involutive_mhat_trace<S: Scalar>(p: &Point, el: &Element<S>, mu: f64) -> Tensor<S> {
    involutive_combination(p, el, mu, el.scalars.m_hat)
}

fn involutive_combination<S: Scalar>(p: &Point, el: &Element<S>, mu: f64, h_coef: S) -> Tensor<S> {
    let n = el.dim();
    let nn = n as f64;
    let g = p.g;
    let (le, ks, mp, cp) = (&el.line, &el.scalars, &el.metric, &el.cartan);
    let (b, q, w, k) = (le.axial, le.transverse, le.ratio, ks.k);
    let av = &cp.vector;
    let l = &mp.l_lo;
    let c_ll = q * (nn * g * 0.5) / k;
    let c_aa = b * w * (2.0 / (nn * g)) / k;
    Tensor::from_fn(n, 2, |ix| {
        let (i, j) = (ix[0], ix[1]);
        let rest = b / k * (av[j] * l[i] + av[i] * l[j]) - c_ll * l[i] * l[j] + c_aa * av[i] * av[j];
        (ks.m_hat * rest - h_coef * c_ll * cp.h_tensor[[i, j]]) * mu
    })
}

/// Alternative closed forms of the Cartan vector, used as cross-checks.
pub fn cartan_vector_alternatives<S: Scalar>(p: &Point, el: &Element<S>) -> [Vec<S>; 2] {
    let n = el.dim();
    let nn = n as f64;
    let g = p.g;
    let (le, ks, mp) = (&el.line, &el.scalars, &el.metric);
    let (b, q, w, k) = (le.axial, le.transverse, le.ratio, ks.k);
    let b_lo: Vec<S> = lift_vec(&p.b);
    let c = k * (nn * g * 0.5);
    let from_y: Vec<S> = (0..n).map(|i| c / (b * w) * (b_lo[i] - b / (k * k) * mp.y_lo[i])).collect();
    let from_v: Vec<S> = (0..n)
        .map(|i| c / (q * ks.quad) * (q * q * b_lo[i] - b * le.transverse_lo[i]))
        .collect();
    [from_y, from_v]
}

/// `A^k` obtained by raising `A_k` with `g^ij`.
pub fn raised_vector<S: Scalar>(el: &Element<S>) -> Vec<S> {
    mat_vec(&el.metric.inverse, &el.cartan.vector)
}
