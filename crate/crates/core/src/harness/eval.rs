//! Structured dumps of the quantities at one line element.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::background::{build_point_frame, BackgroundGeometry};
use crate::connection::{a_special, h_covariant, horizontal_frame_at, Pack, PackField, Slot};
use crate::curvature::curvatures;
use crate::error::{FinslerError, Result};
use crate::spray::{spray_pack, Local};
use crate::tensor::Tensor;
use crate::tensors::element;

/// Names accepted by [`eval_pack`].
pub const PACKS: [&str; 9] = ["background", "kernel", "metric", "cartan", "spray", "connection", "curvature", "a-special", "all"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Entry {
    pub rank: usize,
    /// Nested arrays, first index outermost.
    pub value: Value,
}

/// Pack name → quantity name → entry.
pub type Dump = BTreeMap<String, BTreeMap<String, Entry>>;

fn nest(t: &Tensor<f64>) -> Value {
    fn rec(data: &[f64], n: usize, rank: usize) -> Value {
        if rank == 0 {
            return Value::from(data[0]);
        }
        let stride = data.len() / n;
        Value::Array((0..n).map(|i| rec(&data[i * stride..(i + 1) * stride], n, rank - 1)).collect())
    }
    rec(t.as_slice(), t.dim(), t.rank())
}

#[derive(Default)]
struct Section(BTreeMap<String, Entry>);

impl Section {
    fn t(&mut self, name: &str, t: &Tensor<f64>) {
        self.0.insert(name.into(), Entry { rank: t.rank(), value: nest(t) });
    }
    fn v(&mut self, name: &str, v: &[f64]) {
        self.t(name, &Tensor::from_slice(v));
    }
    fn s(&mut self, name: &str, s: f64) {
        self.0.insert(name.into(), Entry { rank: 0, value: Value::from(s) });
    }
}

/// Evaluate one pack (or `all`) at `(x, y)`.
pub fn eval_pack(geom: &BackgroundGeometry, x: &[f64], y: &[f64], which: &str) -> Result<Dump> {
    if !PACKS.contains(&which) {
        return Err(FinslerError::UnknownPack(which.to_string()));
    }
    if x.len() != geom.dim || y.len() != geom.dim {
        return Err(FinslerError::Dimension {
            expected: geom.dim,
            got: if x.len() != geom.dim { x.len() } else { y.len() },
        });
    }
    let want = |p: &str| which == "all" || which == p;
    let pf = build_point_frame(geom, x)?;
    let el = element(&pf.point, y)?;
    let mut out = Dump::new();

    if want("background") {
        let mut s = Section::default();
        s.t("a", &pf.point.a);
        s.v("b", &pf.point.b);
        s.v("b_up", &pf.point.b_up);
        s.s("g", pf.point.g);
        s.v("g_gradient", pf.g_gradient());
        s.t("christoffels", pf.christoffels());
        s.t("nabla_b", pf.nabla_b());
        s.t("riemann", &pf.riemann);
        if let Some(mu) = pf.mu {
            s.s("mu", mu);
        }
        out.insert("background".into(), s.0);
    }
    if want("kernel") {
        let (le, ks) = (&el.line, &el.scalars);
        let mut s = Section::default();
        for (name, v) in [
            ("b", le.axial),
            ("q", le.transverse),
            ("S", le.riemann_len),
            ("w", le.ratio),
            ("tau", ks.tau),
            ("B", ks.quad),
            ("L", ks.l_scalar),
            ("A", ks.a_scalar),
            ("angle", ks.angle),
            ("J", ks.j),
            ("V", ks.v),
            ("K", ks.k),
            ("M", ks.m),
            ("M_hat", ks.m_hat),
        ] {
            s.s(name, v);
        }
        s.v("e", &le.e);
        out.insert("kernel".into(), s.0);
    }
    if want("metric") {
        let mp = &el.metric;
        let mut s = Section::default();
        s.v("y_lo", &mp.y_lo);
        s.v("l_up", &mp.l_up);
        s.t("g", &mp.metric);
        s.t("g_inv", &mp.inverse);
        s.t("h", &mp.angular);
        s.s("det", mp.det);
        s.s("det_closed", mp.det_closed);
        out.insert("metric".into(), s.0);
    }
    if want("cartan") {
        let c = &el.cartan;
        let mut s = Section::default();
        s.v("A_lo", &c.vector);
        s.v("A_up", &c.vector_up);
        s.v("alpha", &c.alpha);
        s.t("H", &c.h_tensor);
        s.t("A_ijk", &c.cartan);
        s.t("tau", &c.tau);
        s.t("indicatrix", &c.indicatrix);
        s.t("indicatrix_ricci", &c.indicatrix_ricci);
        s.s("indicatrix_scalar", c.indicatrix_scalar);
        out.insert("cartan".into(), s.0);
    }
    let local = Local {
        point: pf.point.clone(),
        affine: pf.affine.clone(),
    };
    if want("spray") {
        let sp = spray_pack(&local, &el);
        let mut s = Section::default();
        s.v("G", &sp.spray);
        s.v("E", &sp.e);
        s.v("s", &sp.s);
        s.s("yg", sp.charge_slope);
        out.insert("spray".into(), s.0);
    }
    let needs_frame = ["connection", "curvature", "a-special"].iter().any(|p| want(p));
    if needs_frame {
        let frame = horizontal_frame_at(geom, &local, y)?;
        if want("connection") {
            let mut s = Section::default();
            s.t("half_jacobian", &frame.half_jac);
            s.t("gamma", &frame.gamma);
            s.t("Gamma", &frame.conn);
            out.insert("connection".into(), s.0);
        }
        if want("curvature") {
            let cp = curvatures(geom, x, &frame, false)?;
            let mut s = Section::default();
            s.t("K2R", &cp.k2r);
            s.t("R", &cp.r);
            s.t("R_torsion", &cp.torsion);
            s.t("A_ijk_hcov", &cp.cartan_hcov);
            s.t("A_ijk_dot", &cp.dot_cartan);
            s.t("P", &cp.p);
            s.t("P_skew", &cp.p_skew);
            out.insert("curvature".into(), s.0);
        }
        if want("a-special") {
            let fd = geom.fd();
            let a_hcov = h_covariant(&PackField { geom, pack: Pack::CartanVector }, &[Slot::Lower], x, &frame, fd)?;
            let dn = h_covariant(&PackField { geom, pack: Pack::CartanNormSq }, &[], x, &frame, fd)?;
            let sp = a_special(&el, &a_hcov, dn.as_slice());
            let mut s = Section::default();
            s.t("A_hcov", &a_hcov);
            s.v("gamma_k", &sp.gamma_k);
            s.s("gamma", sp.gamma);
            if let Some(eta) = sp.eta {
                s.s("eta", eta);
            }
            s.t("residual", &sp.residual);
            out.insert("a-special".into(), s.0);
        }
    }
    Ok(out)
}
