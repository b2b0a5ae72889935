//! Check catalog and the per-element evaluation of every closed-form-vs-oracle
//! comparison.
//!
//! Residuals are dimensionless: `‖a − b‖∞ / max(‖b‖∞, 1)` unless the entry
//! says otherwise. Severity `Gate` decides the verdict of a run; `Info`
//! records are reported but never fail it.

use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use crate::background::{build_point_frame, validate_scenario, BackgroundGeometry, Point};
use crate::connection::{
    a_special, a_special_cartan_hcov, cartan_vector_hcov_alt, cartan_vector_hcov_involutive, h_covariant, horizontal_frame_at,
    involutive_eta, involutive_eta_collected, FixedSpray, Pack, PackField, Slot,
};
use crate::curvature::{
    current_from_angular, current_from_skew, curvatures, involution_gradient, involutive_curvature, involutive_curvature_collected,
    projections, skew_cartan_quadratic, skew_from_a_special, skew_theorem_rhs, InvolutiveInputs,
};
use crate::diff::{grad_x, jac_y, JacY, YField};
use crate::error::Result;
use crate::kernel::{g_derivative_scalars, metric_function};
use crate::scalar::{Dual, Scalar};
use crate::spray::{
    a_ehess_form, contractions_from_terms, e_grad_closed, e_grad_involutive, e_grad_involutive_split, e_terms, e_vector,
    e_vector_cartan_form, e_vector_involutive, involutive_contractions, landsberg_spray, quadratic_collected, riemannian_spray,
    s_tensor, spray_pack, EField, InvolutiveContractions, Local,
};
use crate::tensor::{dot, mat_mul, mat_vec, Tensor};
use crate::tensors::{cartan_vector_alternatives, element, g_derivative_tensors, raised_vector, Element};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Gate,
    Info,
}

/// One entry of the catalog.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckSpec {
    pub id: &'static str,
    /// Acceptance criterion the check belongs to, if any.
    pub criterion: Option<u8>,
    /// What is being compared.
    pub label: &'static str,
    pub tolerance: f64,
    pub severity: Severity,
}

const fn gate(id: &'static str, criterion: u8, tolerance: f64, label: &'static str) -> CheckSpec {
    CheckSpec {
        id,
        criterion: if criterion == 0 { None } else { Some(criterion) },
        label,
        tolerance,
        severity: Severity::Gate,
    }
}

const fn info(id: &'static str, criterion: u8, tolerance: f64, label: &'static str) -> CheckSpec {
    CheckSpec {
        severity: Severity::Info,
        ..gate(id, criterion, tolerance, label)
    }
}

pub const CATALOG: &[CheckSpec] = &[
    gate("background.declared", 0, 1e-6, "declared background properties hold at every sampled point"),
    gate("metric.hessian", 1, 1e-9, "g_ij equals half the y-Hessian of K² (nested duals)"),
    gate("metric.homogeneity", 0, 1e-12, "K(x, λy) = λ K(x, y) for λ = 0.5, 2, 7"),
    gate("metric.reciprocity", 2, 1e-10, "g_ij g^jk = δ_i^k"),
    gate("metric.determinant", 2, 1e-9, "det g_ij = V^2N τ^-N det a_ij"),
    gate("metric.lowering", 0, 1e-10, "g_ij y^j = y_i, g_ij y^i y^j = K², h_ij y^j = 0"),
    gate("cartan.norm", 3, 1e-10, "A^k A_k = N² g² / 4 (relative)"),
    gate("cartan.metric_derivative", 3, 1e-9, "A_ijk = (K/2) ∂g_ij/∂y^k (duals)"),
    gate("cartan.vector_contraction", 3, 1e-9, "A^k A_ijk = (A_i A_j + h_ij A^k A_k) / N"),
    gate("cartan.pair_contraction", 3, 1e-9, "A_ijk A^k_mn through A_i, A_jmn and H_ij"),
    gate("cartan.full_contraction", 3, 1e-9, "A^ijk A_ijk = (3 − 2/N) A^h A_h / N"),
    gate("cartan.axis_contractions", 3, 1e-9, "axis contractions y_k b^k, A_k b^k, b_k A^k, K g^kj b_j, K² g^kj b_j and e_k through A_k"),
    gate("cartan.nullification", 0, 1e-10, "A_k y^k = 0, H_ij y^j = 0, H_ij A^j = 0, τ_ij y^j = 0, τ_ij A^j = 0, α_h α^h = 1"),
    gate("cartan.representations", 0, 1e-10, "alternative representations of A_k and A^k"),
    gate("indicatrix.closed_form", 4, 1e-9, "closed-form indicatrix curvature equals the Cartan-quadratic assembly"),
    gate("indicatrix.contractions", 4, 1e-9, "indicatrix Ricci tensor and scalar, closed forms and direct contraction"),
    gate("charge.metric_function", 5, 1e-6, "∂K²/∂g = M K² against differences in g (relative to K²)"),
    gate("charge.covariant_vector", 5, 1e-6, "∂y_i/∂g in both representations against differences in g"),
    gate("charge.metric", 5, 1e-6, "∂g_ij/∂g against differences in g"),
    gate("charge.cartan_vector", 5, 1e-6, "∂A_i/∂g = (M/2 + 1/g − bq/B) A_i against differences in g"),
    gate("charge.m_derivative", 5, 1e-6, "∂M/∂g and ∂M̂/∂g against differences in g"),
    gate("charge.m_gradient", 5, 1e-6, "∂M_i/∂g against differences in g"),
    gate("charge.scaled_vector", 0, 1e-6, "∂(K A^k / (N g))/∂g = −(y^k − b b^k)/2 against differences in g"),
    gate("charge.m_y_gradient", 0, 1e-9, "M_i = −2 q³ e_i / B² against the dual derivative of M"),
    gate("spray.christoffel", 6, 1e-5, "closed-form G^k equals γ^k_ij y^i y^j from x-differences of g_ij"),
    gate("spray.homogeneity", 6, 1e-10, "2G^i = G^i_k y^k, G^i_k = G^i_km y^m, G^i_kmn y^n = 0"),
    gate("connection.half_jacobian", 0, 1e-6, "Γ^n_ij y^j = Ḡ^n_i"),
    gate("connection.parallel_metric", 0, 1e-6, "g_jk|l = 0 and h_jk|l = 0"),
    gate("connection.cartan_vector_alt", 0, 1e-6, "A_i|j in the τ / Γ̃ arrangement equals the direct h-covariant derivative"),
    gate("eterms.e_forms", 0, 1e-10, "E^k in the M_h form, the Cartan-vector form and the involutive form agree"),
    gate("eterms.euler", 0, 1e-10, "E^k_n y^n = 2 E^k"),
    gate("eterms.gradient", 0, 1e-9, "closed-form E^k_n equals the dual derivative of E^k"),
    gate("eterms.involutive_gradient", 0, 1e-9, "involutive E^k_n forms equal the dual derivative"),
    gate("eterms.contractions", 0, 1e-9, "involutive contractions of E-terms with A, H and the Cartan tensor equal direct contraction"),
    info("eterms.a_ehess_printed", 0, 1e-9, "A^n E^k_nm as printed, without the H^k_m term"),
    info("eterms.quadratic_printed", 0, 1e-9, "collected −E^k_n E^n_m + 2 E^n E^k_nm as printed"),
    gate("eterms.s_tensor", 0, 1e-5, "(yg)² S^i_k against x-differences of the E-terms"),
    gate("landsberg.premises", 7, 1e-6, "constant charge, closed axis and ∇b = k (a − b⊗b)"),
    gate("landsberg.dot_cartan", 7, 1e-6, "Ȧ_ijk = 0 (relative to ‖A_ijk‖)"),
    gate("landsberg.spray", 7, 1e-6, "G^k = g k q (y^k − b b^k) + a^k_mn y^m y^n"),
    gate("berwald.spray", 7, 0.0, "k = 0: G^k = a^k_mn y^m y^n exactly"),
    gate("involutive.cartan_vector_hcov", 8, 1e-5, "A_i|j = (μ/g) A_i b_j + η H_ij, η = μ N g B (M + M̂) / (8 K q)"),
    info("involutive.cartan_vector_hcov_printed", 8, 1e-5, "A_i|j with the H_ij coefficient as printed (+gb in the M bracket)"),
    gate("involutive.dot_alpha", 8, 1e-8, "α̇_i = 0"),
    gate("aspecial.residual", 8, 1e-6, "A_i|k − γ_k A_i − η H_ik after extracting γ_k and η"),
    gate("aspecial.gamma", 8, 1e-8, "γ_k = g_k / g"),
    gate("aspecial.eta", 8, 1e-6, "least-squares η equals the involutive η"),
    gate("aspecial.cartan_rebuild", 0, 1e-5, "A_ijk|l rebuilt from γ_l, η and H"),
    gate("aspecial.dot_vector", 0, 1e-6, "Ȧ_i = γ A_i"),
    gate("aspecial.dot_cartan", 0, 1e-6, "Ȧ_ijk = γ A_ijk"),
    gate("aspecial.dot_h", 0, 1e-6, "Ḣ_jk = 0"),
    gate("theorem.skew_hv", 9, 1e-4, "‖P_[ji]kl − γ K² R̂_jikl‖ / ‖P_[ji]kl‖"),
    gate("theorem.skew_hv_corrected", 0, 1e-4, "P_[ji]kl = γ_i A_jkl − γ_j A_ikl + γ K² R̂_jikl"),
    gate("theorem.skew_quadratic", 0, 1e-10, "γ (A_ki^u A_ujl − A_jk^u A_uil) = γ K² R̂_jikl"),
    gate("curvature.ray", 10, 1e-4, "R^i_k y^k = 0 (as K² R^i_k l^k)"),
    gate("curvature.torsion_ray", 10, 1e-4, "R^i_km y^m = K R^i_k"),
    gate("curvature.translation_invariant", 10, 1e-10, "x-independent background: R^i_k = 0"),
    gate("curvature.involutive_closed", 10, 1e-4, "involutive K² R^i_k assembled from the verified E-term pieces"),
    info("curvature.involutive_printed_l", 10, 1e-4, "printed involutive K² R^i_k, l-projection"),
    info("curvature.involutive_printed_a", 10, 1e-4, "printed involutive K² R^i_k, A-projection"),
    info("curvature.involutive_printed_h", 10, 1e-4, "printed involutive K² R^i_k, H-trace"),
    gate("curvature.riemannian_limit", 0, 1e-4, "g = 0: K² R^i_k = y^n a_n^i_km y^m"),
    gate("current.vanishing", 11, 1e-10, "μ = 0: J_j = 0 (γ-assembly with the numeric γ)"),
    gate("current.explicit", 11, 1e-4, "J_j with coefficient μ g b / (4K) equals the γ-assembly with the numeric γ"),
    info("current.skew_assembly", 11, 1e-4, "J_j from the numeric skew hv part equals the γ-assembly"),
    gate("riemannian.metric_function", 12, 1e-12, "g = 0: K = S"),
    gate("riemannian.metric", 12, 1e-12, "g = 0: g_ij = a_ij"),
    gate("riemannian.cartan", 12, 1e-12, "g = 0: A_i, A^i, A_ijk, τ_ij and R̂ vanish"),
    gate("geodesic.drift", 13, 1e-7, "max |K(t) − K(0)| / K(0) per unit parameter along RK4 geodesics"),
    gate("geodesic.order", 13, 0.5, "|log2(drift(h) / drift(h/2)) − 4| at the coarse step"),
];

pub fn spec(id: &str) -> &'static CheckSpec {
    CATALOG
        .iter()
        .find(|c| c.id == id)
        .unwrap_or_else(|| panic!("check `{id}` missing from the catalog"))
}

/// `‖a − b‖∞ / max(‖b‖∞, 1)`
pub fn mixed(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.sub(b).max_abs() / b.max_abs().max(1.0)
}

fn mixed_vec(a: &[f64], b: &[f64]) -> f64 {
    mixed(&Tensor::from_slice(a), &Tensor::from_slice(b))
}

/// `|a − b| / |b|`, falling back to `|a − b|` for `b = 0`.
fn rel(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if b == 0.0 {
        d
    } else {
        d / b.abs()
    }
}

/// `‖a − b‖₂ / ‖a‖₂` with `0/0 = 0`.
fn frob_rel(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    let d = a.sub(b).frobenius();
    let s = a.frobenius();
    if d == 0.0 {
        0.0
    } else {
        d / s
    }
}

/// Per-element measurements in catalog order of insertion.
#[derive(Default)]
pub struct Recorder {
    pub values: Vec<(&'static str, f64)>,
}

impl Recorder {
    fn push(&mut self, id: &'static str, v: f64) {
        debug_assert!(CATALOG.iter().any(|c| c.id == id), "{id}");
        self.values.push((id, v));
    }

    /// Keep the worst of several comparisons under one id.
    fn worst(&mut self, id: &'static str, vals: &[f64]) {
        let v = vals.iter().fold(0.0f64, |m, &x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x) });
        self.push(id, v);
    }
}

/// Shared, read-only inputs of a sweep.
pub struct SweepContext<'a> {
    pub scenario: &'a Scenario,
    pub geom: &'a BackgroundGeometry,
    /// Flattened variant used for the Berwald comparison of Landsberg scenarios.
    pub berwald: Option<&'a BackgroundGeometry>,
}

struct KSquared<'a>(&'a Point);

impl YField for KSquared<'_> {
    fn eval<S: Scalar>(&self, _x: &[f64], y: &[S]) -> Result<Tensor<S>> {
        let k = metric_function(self.0, y)?;
        Ok(Tensor::from_vec(self.0.dim(), 0, vec![k * k]))
    }
}

struct MetricAt<'a>(&'a Point);

impl YField for MetricAt<'_> {
    fn eval<S: Scalar>(&self, _x: &[f64], y: &[S]) -> Result<Tensor<S>> {
        Ok(element(self.0, y)?.metric.metric)
    }
}

/// Evaluate every applicable check at one line element.
pub fn evaluate_element(ctx: &SweepContext, x: &[f64], y: &[f64]) -> Result<Recorder> {
    let sc = ctx.scenario;
    let geom = ctx.geom;
    let flags = sc.flags;
    let n = geom.dim;
    let mut rec = Recorder::default();

    let pf = build_point_frame(geom, x)?;
    let diag = validate_scenario(geom, &pf, sc.tolerance("background.declared"));
    let declared = diag.checks.iter().filter(|c| c.declared).fold(0.0f64, |m, c| m.max(c.residual));
    rec.push("background.declared", declared);
    let local = Local {
        point: pf.point.clone(),
        affine: pf.affine.clone(),
    };
    let p = &local.point;
    let g = p.g;
    let riemannian = g == 0.0;
    let el = element(p, y)?;
    let (le, ks, mp, cp) = (&el.line, &el.scalars, &el.metric, &el.cartan);
    let k = ks.k;

    // metric
    let hess = jac_y(&JacY(&KSquared(p)), x, y)?.scale(0.5);
    rec.push("metric.hessian", mixed(&mp.metric, &hess));
    let homog: Vec<f64> = [0.5, 2.0, 7.0]
        .iter()
        .map(|&lam| {
            let ys: Vec<f64> = y.iter().map(|v| lam * v).collect();
            metric_function(p, &ys).map(|kl| rel(kl, lam * k))
        })
        .collect::<Result<_>>()?;
    rec.worst("metric.homogeneity", &homog);
    rec.push("metric.reciprocity", mixed(&mat_mul(&mp.metric, &mp.inverse), &Tensor::identity(n)));
    rec.push("metric.determinant", rel(mp.det, mp.det_closed));
    let gy = mat_vec(&mp.metric, y);
    rec.worst(
        "metric.lowering",
        &[
            mixed_vec(&gy, &mp.y_lo),
            rel(dot(&gy, y), k * k),
            mat_vec(&mp.angular, y).iter().fold(0.0f64, |m, v| m.max(v.abs())) / k.max(1.0),
        ],
    );

    if riemannian {
        rec.push("riemannian.metric_function", rel(k, le.riemann_len));
        rec.push("riemannian.metric", mixed(&mp.metric, &p.a));
        let family = [
            Tensor::from_slice(&cp.vector).max_abs(),
            Tensor::from_slice(&cp.vector_up).max_abs(),
            cp.cartan.max_abs(),
            cp.tau.max_abs(),
            cp.indicatrix.max_abs(),
        ];
        rec.worst("riemannian.cartan", &family);
    } else {
        cartan_checks(&mut rec, p, &el, x, y)?;
        charge_checks(&mut rec, sc, p, &el, y)?;
    }

    // spray and connection
    let frame = horizontal_frame_at(geom, &local, y)?;
    let gyy = frame.gamma.contract_last(y).contract_last(y);
    let spray_t = Tensor::from_slice(&frame.spray);
    rec.push("spray.christoffel", mixed(&spray_t, &gyy));
    {
        let fs = FixedSpray(&local);
        let d1 = jac_y(&fs, x, y)?;
        let d2 = jac_y(&JacY(&fs), x, y)?;
        let d3 = jac_y(&JacY(&JacY(&fs)), x, y)?;
        rec.worst(
            "spray.homogeneity",
            &[
                mixed(&d1.contract_last(y), &spray_t.scale(2.0)),
                mixed(&d2.contract_last(y), &d1),
                d3.contract_last(y).max_abs() / d2.max_abs().max(1.0),
            ],
        );
    }
    rec.push("connection.half_jacobian", mixed(&frame.conn.contract_last(y), &frame.half_jac));
    let fd = geom.fd();
    let par_g = h_covariant(&PackField { geom, pack: Pack::Metric }, &[Slot::Lower; 2], x, &frame, fd)?;
    let par_h = h_covariant(&PackField { geom, pack: Pack::Angular }, &[Slot::Lower; 2], x, &frame, fd)?;
    rec.push("connection.parallel_metric", par_g.max_abs().max(par_h.max_abs()));

    let mu = dot(&pf.affine.g_gradient, &p.b_up);
    if !riemannian {
        eterm_checks(&mut rec, ctx, &local, &el, x, y, mu)?;
    }

    if flags.landsberg {
        let names = ["constant_charge", "closed_axis", "landsberg_expansion"];
        let prem = names
            .iter()
            .filter_map(|nm| diag.get(nm))
            .fold(0.0f64, |m, c| m.max(c.residual));
        rec.push("landsberg.premises", prem);
        let expect = Tensor::from_slice(&landsberg_spray(&local, &el, diag.expansion_rate));
        rec.push("landsberg.spray", mixed(&spray_t, &expect));
        if let Some(bg) = ctx.berwald {
            let bl = Local::at(bg, x)?;
            let be = element(&bl.point, y)?;
            let sp = spray_pack(&bl, &be).spray;
            let flat = riemannian_spray(&bl, y);
            rec.push("berwald.spray", Tensor::from_slice(&sp).sub(&Tensor::from_slice(&flat)).max_abs());
        }
    }

    // curvature
    let cv = curvatures(geom, x, &frame, false)?;
    let l_up = &mp.l_up;
    rec.push("curvature.ray", cv.k2r.contract_last(l_up).max_abs() / cv.k2r.max_abs().max(1.0));
    let kr = cv.r.scale(k);
    rec.push("curvature.torsion_ray", mixed(&cv.torsion.contract_last(y), &kr));
    if sc.translation_invariant() {
        rec.push("curvature.translation_invariant", cv.k2r.max_abs());
    }
    if riemannian {
        let ra = &pf.riemann;
        let yay = Tensor::from_fn(n, 2, |ix| {
            let mut v = 0.0;
            for a in 0..n {
                for m in 0..n {
                    v += y[a] * ra[[a, ix[0], ix[1], m]] * y[m];
                }
            }
            v
        });
        rec.push("curvature.riemannian_limit", mixed(&cv.k2r, &yay));
    }
    if flags.landsberg && !riemannian {
        rec.push("landsberg.dot_cartan", cv.dot_cartan.max_abs() / cp.cartan.max_abs().max(1.0));
    }

    if riemannian {
        return Ok(rec);
    }

    // A-special family
    let a_hcov = h_covariant(&PackField { geom, pack: Pack::CartanVector }, &[Slot::Lower], x, &frame, fd)?;
    rec.push("connection.cartan_vector_alt", mixed(&cartan_vector_hcov_alt(geom, x, &frame)?, &a_hcov));
    let dn = h_covariant(&PackField { geom, pack: Pack::CartanNormSq }, &[], x, &frame, fd)?;
    let sp = a_special(&el, &a_hcov, dn.as_slice());
    let j_gamma = current_from_angular(&el, 0.25 * g * g * sp.gamma, &cv.torsion);
    if sc.constant_charge() {
        rec.push("current.vanishing", Tensor::from_slice(&j_gamma).max_abs());
    }

    if flags.involutive {
        let closed = cartan_vector_hcov_involutive(p, &el, mu);
        rec.push("involutive.cartan_vector_hcov", mixed(&a_hcov, &closed));
        let eta_printed = involutive_eta_collected(p, &el, mu);
        let printed = Tensor::from_fn(n, 2, |ix| cp.vector[ix[0]] * mu * p.b[ix[1]] / g + eta_printed * cp.h_tensor[[ix[0], ix[1]]]);
        rec.push("involutive.cartan_vector_hcov_printed", mixed(&a_hcov, &printed));
        rec.push("involutive.dot_alpha", Tensor::from_slice(&cv.dot_alpha).max_abs());

        rec.push("aspecial.residual", sp.residual.max_abs() / a_hcov.max_abs().max(1.0));
        let gk: Vec<f64> = pf.affine.g_gradient.iter().map(|v| v / g).collect();
        rec.push("aspecial.gamma", mixed_vec(&sp.gamma_k, &gk));
        let eta = match sp.eta {
            Some(fit) => {
                let e = involutive_eta(p, &el, mu);
                rec.push("aspecial.eta", (fit - e).abs() / e.abs().max(1.0));
                fit
            }
            None => 0.0,
        };
        let rebuilt = a_special_cartan_hcov(&el, &sp.gamma_k, eta);
        rec.push("aspecial.cartan_rebuild", mixed(&cv.cartan_hcov, &rebuilt));
        let ga: Vec<f64> = cp.vector.iter().map(|v| sp.gamma * v).collect();
        rec.push("aspecial.dot_vector", mixed_vec(&cv.dot_vector, &ga));
        rec.push("aspecial.dot_cartan", mixed(&cv.dot_cartan, &cp.cartan.scale(sp.gamma)));
        let dh = h_covariant(&PackField { geom, pack: Pack::HTensor }, &[Slot::Lower; 2], x, &frame, fd)?.contract_last(l_up);
        rec.push("aspecial.dot_h", dh.max_abs());

        let rhs = skew_theorem_rhs(&el, sp.gamma);
        rec.push("theorem.skew_hv", frob_rel(&cv.p_skew, &rhs));
        let corrected = skew_from_a_special(&el, &sp.gamma_k, sp.gamma);
        rec.push("theorem.skew_hv_corrected", mixed(&cv.p_skew, &corrected));
        rec.push("theorem.skew_quadratic", mixed(&skew_cartan_quadratic(&el, sp.gamma), &rhs));

        let mu_grad = involution_gradient(geom, x, geom.nested_fd())?;
        let dm = g_derivative_scalars(p, le, ks).d_m;
        let inp = InvolutiveInputs {
            point: p,
            mu,
            mu_grad: &mu_grad,
            riemann: &pf.riemann,
            dm_dg: dm,
        };
        if mu != 0.0 {
            rec.push("curvature.involutive_closed", mixed(&involutive_curvature(&inp, &el), &cv.k2r));
            let pr = projections(&el, &involutive_curvature_collected(&inp, &el), &cv.k2r);
            rec.push("curvature.involutive_printed_l", pr.l_direction);
            rec.push("curvature.involutive_printed_a", pr.a_direction);
            rec.push("curvature.involutive_printed_h", pr.h_trace);
        }

        let explicit = current_from_angular(&el, mu * g * le.axial / (4.0 * k), &cv.torsion);
        rec.push("current.explicit", mixed_vec(&explicit, &j_gamma));
        let from_skew = current_from_skew(&el, &cv.p_skew, &cv.torsion);
        rec.push("current.skew_assembly", mixed_vec(&from_skew, &j_gamma));
    }
    Ok(rec)
}

fn cartan_checks(rec: &mut Recorder, p: &Point, el: &Element<f64>, x: &[f64], y: &[f64]) -> Result<()> {
    let n = el.dim();
    let nn = n as f64;
    let g = p.g;
    let (le, ks, mp, cp) = (&el.line, &el.scalars, &el.metric, &el.cartan);
    let k = ks.k;
    let (al, au) = (&cp.vector, &cp.vector_up);
    let a2 = dot(al, au);
    let c = &cp.cartan;
    let gi = &mp.inverse;
    let h = &mp.angular;
    let hh = &cp.h_tensor;

    rec.push("cartan.norm", rel(a2, nn * nn * g * g / 4.0));
    let dg = jac_y(&MetricAt(p), x, y)?.scale(0.5 * k);
    rec.push("cartan.metric_derivative", mixed(c, &dg));

    let vc = c.contract_first(au);
    let vc_closed = Tensor::from_fn(n, 2, |ix| (al[ix[0]] * al[ix[1]] + h[[ix[0], ix[1]]] * a2) / nn);
    rec.push("cartan.vector_contraction", mixed(&vc, &vc_closed));

    // A^k_mn with the first index raised
    let cu = el.raise_first(c);
    let pair = Tensor::from_fn(n, 4, |ix| (0..n).map(|kk| c[[ix[0], ix[1], kk]] * cu[[kk, ix[2], ix[3]]]).sum::<f64>());
    let pair_closed = Tensor::from_fn(n, 4, |ix| {
        let (i, j, m, q) = (ix[0], ix[1], ix[2], ix[3]);
        (al[i] * c[[j, m, q]] + al[j] * c[[i, m, q]]) / nn
            + 2.0 / (nn * nn) * hh[[i, j]] * al[m] * al[q]
            + a2 / (nn * nn) * hh[[i, j]] * hh[[m, q]]
    });
    rec.push("cartan.pair_contraction", mixed(&pair, &pair_closed));
    let full: f64 = {
        let c3 = el.raise_first(&el.raise_first(&el.raise_first(c).permuted(&[1, 2, 0])).permuted(&[1, 2, 0])).permuted(&[1, 2, 0]);
        c3.as_slice().iter().zip(c.as_slice()).map(|(a, b)| a * b).sum()
    };
    rec.push("cartan.full_contraction", rel(full, (3.0 - 2.0 / nn) * a2 / nn));

    let (b, q, w) = (le.axial, le.transverse, le.ratio);
    let quad = ks.quad;
    let kgb = mat_vec(gi, &p.b).iter().map(|v| k * v).collect::<Vec<_>>();
    let kgb_closed: Vec<f64> = (0..n).map(|kk| 2.0 * b * w / (nn * g) * au[kk] + b * mp.l_up[kk]).collect();
    let k2gb: Vec<f64> = kgb.iter().map(|v| k * v).collect();
    let k2gb_closed: Vec<f64> = (0..n).map(|kk| quad * p.b_up[kk] - g * b * w * y[kk]).collect();
    let e_closed: Vec<f64> = al.iter().map(|a| -2.0 * quad / (k * nn * g * q) * a).collect();
    rec.worst(
        "cartan.axis_contractions",
        &[
            rel(dot(&mp.y_lo, &p.b_up), b * k * k / quad * (1.0 + g * w)),
            rel(dot(al, &p.b_up), k * nn * g / (2.0 * quad) * b * w),
            rel(dot(&p.b, au), nn * g / (2.0 * k) * b * w),
            mixed_vec(&kgb, &kgb_closed),
            mixed_vec(&k2gb, &k2gb_closed),
            mixed_vec(&le.e, &e_closed),
        ],
    );

    let vmax = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    rec.worst(
        "cartan.nullification",
        &[
            dot(al, y).abs() / k,
            vmax(&mat_vec(hh, y)) / k,
            vmax(&mat_vec(hh, au)),
            vmax(&mat_vec(&cp.tau, y)) / k,
            vmax(&mat_vec(&cp.tau, au)),
            (dot(&cp.alpha, &cp.alpha_up) - 1.0).abs(),
        ],
    );
    let mut reps: Vec<f64> = cartan_vector_alternatives(p, el).iter().map(|alt| mixed_vec(alt, al)).collect();
    reps.push(mixed_vec(&raised_vector(el), au));
    rec.worst("cartan.representations", &reps);

    let k2 = k * k;
    let direct = Tensor::from_fn(n, 4, |ix| {
        let (i, j, m, q) = (ix[0], ix[1], ix[2], ix[3]);
        (0..n).map(|hx| c[[hx, j, m]] * cu[[hx, i, q]] - c[[hx, j, q]] * cu[[hx, i, m]]).sum::<f64>() / k2
    });
    let ind = &cp.indicatrix;
    rec.push("indicatrix.closed_form", mixed(ind, &direct));
    let r = el.raise_first(&ind.permuted(&[1, 0, 2, 3]));
    let ricci = Tensor::from_fn(n, 2, |ix| (0..n).map(|j| r[[j, ix[0], ix[1], j]]).sum::<f64>());
    let c_r = (2.0 / nn - 1.0) * a2 / (nn * k2);
    let ricci_closed = h.scale(c_r);
    let scalar: f64 = ricci.as_slice().iter().zip(gi.as_slice()).map(|(a, b)| a * b).sum();
    rec.worst(
        "indicatrix.contractions",
        &[
            mixed(&cp.indicatrix_ricci, &ricci),
            mixed(&ricci, &ricci_closed),
            rel(cp.indicatrix_scalar, c_r * (nn - 1.0)),
            rel(scalar, c_r * (nn - 1.0)),
        ],
    );
    Ok(())
}

fn charge_checks(rec: &mut Recorder, sc: &Scenario, p: &Point, el: &Element<f64>, y: &[f64]) -> Result<()> {
    let n = el.dim();
    let nn = n as f64;
    let g = p.g;
    let h = sc.numerics.g_step;
    let dg = g_derivative_tensors(p, el)?;
    let hi = element(&p.with_charge(g + h), y)?;
    let lo = element(&p.with_charge(g - h), y)?;
    let cd = |a: f64, b: f64| (a - b) / (2.0 * h);
    let cdv = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(u, v)| cd(*u, *v)).collect() };
    let k2 = |e: &Element<f64>| e.k() * e.k();
    // ∂K²/∂g = M K² may vanish; its natural scale is K²
    let fd_k2 = cd(k2(&hi), k2(&lo));
    rec.push("charge.metric_function", (dg.scalars.d_k2 - fd_k2).abs() / fd_k2.abs().max(k2(el)));
    let fd_ylo = cdv(&hi.metric.y_lo, &lo.metric.y_lo);
    rec.worst("charge.covariant_vector", &[mixed_vec(&dg.y_lo, &fd_ylo), mixed_vec(&dg.y_lo_from_axis, &fd_ylo)]);
    rec.push("charge.metric", mixed(&dg.metric, &hi.metric.metric.sub(&lo.metric.metric).scale(0.5 / h)));
    rec.push("charge.cartan_vector", mixed_vec(&dg.vector, &cdv(&hi.cartan.vector, &lo.cartan.vector)));
    rec.worst(
        "charge.m_derivative",
        &[
            (dg.scalars.d_m - cd(hi.scalars.m, lo.scalars.m)).abs() / dg.scalars.d_m.abs().max(1.0),
            (dg.scalars.d_m_hat - cd(hi.scalars.m_hat, lo.scalars.m_hat)).abs() / dg.scalars.d_m_hat.abs().max(1.0),
        ],
    );
    let mg = |e: &Element<f64>, gg: f64| g_derivative_scalars(&p.with_charge(gg), &e.line, &e.scalars).m_grad;
    rec.push("charge.m_gradient", mixed_vec(&dg.scalars.d_m_grad, &cdv(&mg(&hi, g + h), &mg(&lo, g - h))));
    let scaled = |e: &Element<f64>, gg: f64| -> Vec<f64> { e.cartan.vector_up.iter().map(|v| e.k() * v / (nn * gg)).collect() };
    rec.push("charge.scaled_vector", mixed_vec(&dg.scaled_vector_up, &cdv(&scaled(&hi, g + h), &scaled(&lo, g - h))));
    let m_dual: Vec<f64> = (0..n)
        .map(|i| {
            let yd: Vec<Dual<f64>> = y.iter().enumerate().map(|(j, &v)| if j == i { Dual::var(v) } else { Dual::cst(v) }).collect();
            element(p, &yd).map(|e| e.scalars.m.eps)
        })
        .collect::<Result<_>>()?;
    rec.push("charge.m_y_gradient", mixed_vec(&dg.scalars.m_grad, &m_dual));
    Ok(())
}

fn eterm_checks(rec: &mut Recorder, ctx: &SweepContext, local: &Local, el: &Element<f64>, x: &[f64], y: &[f64], mu: f64) -> Result<()> {
    let geom = ctx.geom;
    let sc = ctx.scenario;
    let p = &local.point;
    let grad = &local.affine.g_gradient;
    let n = el.dim();
    let terms = e_terms(geom, x, y)?;
    let e = Tensor::from_slice(&terms.e);
    let mut forms = vec![mixed(&Tensor::from_slice(&e_vector(el, grad)), &e), mixed(&Tensor::from_slice(&e_vector_cartan_form(p, el, grad)), &e)];
    if sc.flags.involutive {
        forms.push(mixed(&Tensor::from_slice(&e_vector_involutive(p, el, mu)), &e));
    }
    rec.worst("eterms.e_forms", &forms);
    rec.push("eterms.euler", mixed(&terms.grad.contract_last(y), &e.scale(2.0)));
    rec.push("eterms.gradient", mixed(&e_grad_closed(p, el, grad), &terms.grad));
    if !sc.flags.involutive {
        return Ok(());
    }
    let (inv, _) = e_grad_involutive(p, el, mu);
    rec.worst(
        "eterms.involutive_gradient",
        &[mixed(&inv, &terms.grad), mixed(&e_grad_involutive_split(p, el, mu), &terms.grad)],
    );
    let mhg: Vec<f64> = (0..n)
        .map(|i| {
            let yd: Vec<Dual<f64>> = y.iter().enumerate().map(|(j, &v)| if j == i { Dual::var(v) } else { Dual::cst(v) }).collect();
            element(p, &yd).map(|e| e.scalars.m_hat.eps)
        })
        .collect::<Result<_>>()?;
    let num = contractions_from_terms(el, &terms, mhg);
    let cl = involutive_contractions(p, el, mu);
    rec.worst("eterms.contractions", &contraction_errors(&cl, &num));
    rec.push("eterms.a_ehess_printed", mixed(&a_ehess_form(p, el, mu, false), &num.a_ehess));
    rec.push("eterms.quadratic_printed", mixed(&quadratic_collected(p, el, mu), &num.quadratic));

    let yg = el.line.axial * mu;
    if yg != 0.0 {
        let mu_grad = involution_gradient(geom, x, geom.nested_fd())?;
        let ef = EField { geom };
        let fd = geom.nested_fd();
        let dx = grad_x(&ef, x, y, fd)?;
        let dxy = grad_x(&JacY(&ef), x, y, fd)?;
        let ymu = dot(y, &mu_grad);
        // compared times (yg)²: dividing the differences by it amplifies their error where b is small
        let numeric = Tensor::from_fn(n, 2, |ix| {
            let (i, kk) = (ix[0], ix[1]);
            let mixed_d: f64 = (0..n).map(|j| y[j] * dxy[[i, kk, j]]).sum();
            2.0 * dx[[i, kk]] - mixed_d - 2.0 * terms.e[i] * mu_grad[kk] / mu + ymu * terms.grad[[i, kk]] / mu
        });
        let dm = g_derivative_scalars(p, &el.line, &el.scalars).d_m;
        rec.push("eterms.s_tensor", mixed(&s_tensor(p, el, dm).scale(yg * yg), &numeric));
    }
    Ok(())
}

fn contraction_errors(cl: &InvolutiveContractions<f64>, num: &InvolutiveContractions<f64>) -> Vec<f64> {
    let v = |a: &[f64]| Tensor::from_slice(a);
    vec![
        mixed(&v(&[cl.a_e]), &v(&[num.a_e])),
        mixed(&v(&cl.a_egrad), &v(&num.a_egrad)),
        mixed(&v(&cl.egrad_a), &v(&num.egrad_a)),
        mixed(&cl.h_egrad, &num.h_egrad),
        mixed(&cl.egrad_h, &num.egrad_h),
        mixed(&cl.cross, &num.cross),
        mixed(&cl.cross_a, &num.cross_a),
        mixed(&cl.a_ehess, &num.a_ehess),
        mixed(&cl.e_ehess, &num.e_ehess),
        mixed(&cl.quadratic, &num.quadratic),
        mixed(&v(&cl.m_hat_grad), &v(&num.m_hat_grad)),
    ]
}
