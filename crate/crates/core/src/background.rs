//! The associated Riemannian space, the axis 1-form and the charge field.
//!
//! Fields are plain closures of the coordinates; all x-derivatives are taken
//! by central differences.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diff::Fd;
use crate::error::{FinslerError, Result};
use crate::linalg::{cholesky, determinant, inverse};
use crate::tensor::Tensor;

pub type MatrixField = Arc<dyn Fn(&[f64]) -> Tensor<f64> + Send + Sync>;
pub type CovectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Properties a scenario claims for its background; checked, never assumed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeclaredProperties {
    /// Associated metric has constant coefficients.
    pub flat: bool,
    /// Charge gradient proportional to the axis: `dg = μ b`.
    pub involutive: bool,
    /// `∇b = 0` in the associated Riemannian space.
    pub b_parallel: bool,
    /// Constant charge, closed axis and `∇b = k (a − b⊗b)`.
    pub landsberg: bool,
    /// Landsberg with `k = 0`.
    pub berwald: bool,
}

#[derive(Clone)]
pub struct BackgroundGeometry {
    pub dim: usize,
    pub metric: MatrixField,
    pub axis: CovectorField,
    pub charge: ScalarField,
    /// Step for first-level x-derivatives of the fields.
    pub x_step: f64,
    /// Step for x-derivatives of quantities that already contain a
    /// finite difference (Christoffel derivatives, spray derivatives).
    pub nested_step: f64,
    pub richardson: bool,
    /// Accepted deviation of `a^{ij} b_i b_j` from 1.
    pub unit_tol: f64,
    pub properties: DeclaredProperties,
}

impl fmt::Debug for BackgroundGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BackgroundGeometry")
            .field("dim", &self.dim)
            .field("x_step", &self.x_step)
            .field("nested_step", &self.nested_step)
            .field("properties", &self.properties)
            .finish_non_exhaustive()
    }
}

/// Pointwise values of the background at one x.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub x: Vec<f64>,
    /// `a_ij`
    pub a: Tensor<f64>,
    /// `a^ij`
    pub a_inv: Tensor<f64>,
    pub det_a: f64,
    /// `b_i`
    pub b: Vec<f64>,
    /// `b^i = a^ij b_j`
    pub b_up: Vec<f64>,
    /// Charge `g(x)`.
    pub g: f64,
}

impl Point {
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Same point with the charge replaced; used for g-differentiation.
    pub fn with_charge(&self, g: f64) -> Self {
        Self { g, ..self.clone() }
    }
}

impl BackgroundGeometry {
    pub fn new(dim: usize, metric: MatrixField, axis: CovectorField, charge: ScalarField) -> Self {
        Self {
            dim,
            metric,
            axis,
            charge,
            x_step: 1e-5,
            nested_step: 1e-4,
            richardson: false,
            unit_tol: 1e-9,
            properties: DeclaredProperties::default(),
        }
    }

    pub fn fd(&self) -> Fd {
        Fd {
            step: self.x_step,
            richardson: self.richardson,
        }
    }

    pub fn nested_fd(&self) -> Fd {
        Fd {
            step: self.nested_step,
            richardson: self.richardson,
        }
    }

    /// Evaluate and validate the fields at `x`.
    pub fn point(&self, x: &[f64]) -> Result<Point> {
        if x.len() != self.dim {
            return Err(FinslerError::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        let a = (self.metric)(x);
        if cholesky(&a).is_none() {
            return Err(FinslerError::MetricNotPositiveDefinite { x: x.to_vec() });
        }
        let a_inv = inverse(&a).ok_or_else(|| FinslerError::MetricNotPositiveDefinite { x: x.to_vec() })?;
        let det_a = determinant(&a);
        let b = (self.axis)(x);
        let b_up = crate::tensor::mat_vec(&a_inv, &b);
        let norm2: f64 = b.iter().zip(&b_up).map(|(p, q)| p * q).sum();
        if (norm2 - 1.0).abs() > self.unit_tol {
            return Err(FinslerError::AxisNotUnit {
                norm: norm2.sqrt(),
                tol: self.unit_tol,
            });
        }
        let g = (self.charge)(x);
        if !(g > -2.0 && g < 2.0) {
            return Err(FinslerError::ChargeOutOfRange { g });
        }
        Ok(Point {
            x: x.to_vec(),
            a,
            a_inv,
            det_a,
            b,
            b_up,
            g,
        })
    }

    fn metric_gradient(&self, x: &[f64], fd: Fd) -> Tensor<f64> {
        // [i, j, m] = ∂_m a_ij
        let n = self.dim;
        let diff = |m: usize, h: f64| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[m] += h;
            xm[m] -= h;
            (self.metric)(&xp).sub(&(self.metric)(&xm)).scale(1.0 / (2.0 * h))
        };
        let parts: Vec<Tensor<f64>> = (0..n)
            .map(|m| {
                let d1 = diff(m, fd.step);
                if fd.richardson {
                    diff(m, fd.step * 0.5).scale(4.0 / 3.0).sub(&d1.scale(1.0 / 3.0))
                } else {
                    d1
                }
            })
            .collect();
        crate::diff::stack_last(&parts)
    }

    /// Columns `[m][i] = ∂_m f_i`.
    fn covector_gradient(&self, f: &(dyn Fn(&[f64]) -> Vec<f64> + Send + Sync), x: &[f64], fd: Fd) -> Vec<Vec<f64>> {
        let n = self.dim;
        let diff = |m: usize, h: f64| -> Vec<f64> {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[m] += h;
            xm[m] -= h;
            f(&xp)
                .iter()
                .zip(f(&xm))
                .map(|(p, q)| (p - q) / (2.0 * h))
                .collect()
        };
        (0..n)
            .map(|m| {
                let d1 = diff(m, fd.step);
                if fd.richardson {
                    diff(m, fd.step * 0.5)
                        .iter()
                        .zip(&d1)
                        .map(|(h2, h1)| (4.0 * h2 - h1) / 3.0)
                        .collect()
                } else {
                    d1
                }
            })
            .collect()
    }

    /// Christoffel symbols `a^k_ij`, stored `[k, i, j]`.
    pub fn christoffels(&self, x: &[f64]) -> Result<Tensor<f64>> {
        let a_inv = inverse(&(self.metric)(x))
            .ok_or_else(|| FinslerError::MetricNotPositiveDefinite { x: x.to_vec() })?;
        let da = self.metric_gradient(x, self.fd());
        let n = self.dim;
        let lowered = Tensor::from_fn(n, 3, |i| {
            let (nn, ii, jj) = (i[0], i[1], i[2]);
            0.5 * (da[[nn, ii, jj]] + da[[nn, jj, ii]] - da[[ii, jj, nn]])
        });
        Ok(Tensor::from_fn(n, 3, |i| {
            (0..n).map(|m| a_inv[[i[0], m]] * lowered[[m, i[1], i[2]]]).sum()
        }))
    }

    /// Gradient of the charge, `g_i = ∂g/∂x^i`.
    pub fn charge_gradient(&self, x: &[f64]) -> Vec<f64> {
        let charge = &self.charge;
        let wrapped = move |p: &[f64]| vec![charge(p)];
        self.covector_gradient(&wrapped, x, self.fd())
            .into_iter()
            .map(|c| c[0])
            .collect()
    }

    /// First-order frame data needed by the spray: Christoffels, `∇b`, `dg`.
    pub fn affine_frame(&self, x: &[f64]) -> Result<AffineFrame> {
        let christoffels = self.christoffels(x)?;
        let b = (self.axis)(x);
        let cols = self.covector_gradient(self.axis.as_ref(), x, self.fd());
        let n = self.dim;
        let db = Tensor::from_fn(n, 2, |i| cols[i[1]][i[0]]); // [j, i] = ∂_i b_j
        let nabla_b = Tensor::from_fn(n, 2, |i| {
            let (ii, jj) = (i[0], i[1]);
            db[[jj, ii]] - (0..n).map(|k| b[k] * christoffels[[k, ii, jj]]).sum::<f64>()
        });
        let curl_b = Tensor::from_fn(n, 2, |i| db[[i[1], i[0]]] - db[[i[0], i[1]]]);
        Ok(AffineFrame {
            christoffels,
            nabla_b,
            curl_b,
            g_gradient: self.charge_gradient(x),
        })
    }

    /// Riemann tensor `a_n^i_km = ∂_k a^i_nm − ∂_m a^i_nk + a^i_hk a^h_nm − a^i_hm a^h_nk`,
    /// stored `[n, i, k, m]`.
    pub fn riemann(&self, x: &[f64], christoffels: &Tensor<f64>) -> Result<Tensor<f64>> {
        let n = self.dim;
        let h = self.nested_step;
        let mut dgam = Vec::with_capacity(n); // dgam[k][[i, a, b]] = ∂_k a^i_ab
        for k in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            let d1 = self
                .christoffels(&xp)?
                .sub(&self.christoffels(&xm)?)
                .scale(1.0 / (2.0 * h));
            dgam.push(if self.richardson {
                let mut xp2 = x.to_vec();
                let mut xm2 = x.to_vec();
                xp2[k] += h * 0.5;
                xm2[k] -= h * 0.5;
                let d2 = self
                    .christoffels(&xp2)?
                    .sub(&self.christoffels(&xm2)?)
                    .scale(1.0 / h);
                d2.scale(4.0 / 3.0).sub(&d1.scale(1.0 / 3.0))
            } else {
                d1
            });
        }
        let c = christoffels;
        Ok(Tensor::from_fn(n, 4, |idx| {
            let (nn, i, k, m) = (idx[0], idx[1], idx[2], idx[3]);
            let mut v = dgam[k][[i, nn, m]] - dgam[m][[i, nn, k]];
            for hh in 0..n {
                v += c[[i, hh, k]] * c[[hh, nn, m]] - c[[i, hh, m]] * c[[hh, nn, k]];
            }
            v
        }))
    }
}

/// Christoffels, covariant derivative of the axis and charge gradient at x.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineFrame {
    /// `a^k_ij`, `[k, i, j]`
    pub christoffels: Tensor<f64>,
    /// `∇_i b_j`, `[i, j]`
    pub nabla_b: Tensor<f64>,
    /// `∂_i b_j − ∂_j b_i`, `[i, j]`
    pub curl_b: Tensor<f64>,
    /// `g_i`
    pub g_gradient: Vec<f64>,
}

/// Everything the engine needs from the background at a base point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointFrame {
    pub x: Vec<f64>,
    pub point: Point,
    pub affine: AffineFrame,
    /// `a_n^i_km`, `[n, i, k, m]`
    pub riemann: Tensor<f64>,
    /// Involution scalar `μ = b^i g_i`, set when the background is declared involutive.
    pub mu: Option<f64>,
    /// `‖g_i − μ b_i‖` with `μ = b^i g_i`.
    pub involution_residual: f64,
}

impl PointFrame {
    pub fn christoffels(&self) -> &Tensor<f64> {
        &self.affine.christoffels
    }
    pub fn nabla_b(&self) -> &Tensor<f64> {
        &self.affine.nabla_b
    }
    pub fn g_gradient(&self) -> &[f64] {
        &self.affine.g_gradient
    }
}

pub fn build_point_frame(geom: &BackgroundGeometry, x: &[f64]) -> Result<PointFrame> {
    let point = geom.point(x)?;
    let affine = geom.affine_frame(x)?;
    let riemann = geom.riemann(x, &affine.christoffels)?;
    let mu_val: f64 = point
        .b_up
        .iter()
        .zip(&affine.g_gradient)
        .map(|(p, q)| p * q)
        .sum();
    let involution_residual = affine
        .g_gradient
        .iter()
        .zip(&point.b)
        .map(|(gi, bi)| (gi - mu_val * bi).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(PointFrame {
        x: x.to_vec(),
        point,
        affine,
        riemann,
        mu: geom.properties.involutive.then_some(mu_val),
        involution_residual,
    })
}

/// One property verdict from [`validate_scenario`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub declared: bool,
    pub holds: bool,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioDiagnostics {
    pub checks: Vec<PropertyCheck>,
    /// Fitted expansion rate `k` in `∇b = k (a − b⊗b)`.
    pub expansion_rate: f64,
}

impl ScenarioDiagnostics {
    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Every declared property holds.
    pub fn consistent(&self) -> bool {
        self.checks.iter().all(|c| !c.declared || c.holds)
    }
}

/// Residual-based verdicts on the background properties at one point.
pub fn validate_scenario(geom: &BackgroundGeometry, frame: &PointFrame, tol: f64) -> ScenarioDiagnostics {
    let n = geom.dim;
    let p = &frame.point;
    let props = geom.properties;
    let nb = frame.nabla_b();
    let norm2: f64 = p.b.iter().zip(&p.b_up).map(|(a, b)| a * b).sum();
    let grad_norm = frame.g_gradient().iter().map(|v| v * v).sum::<f64>().sqrt();
    // k from the trace of ∇b over the complement of b
    let trace: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| p.a_inv[[i, j]] * nb[[i, j]])
        .sum();
    let k = trace / (n as f64 - 1.0);
    let expansion = Tensor::from_fn(n, 2, |i| {
        nb[[i[0], i[1]]] - k * (p.a[[i[0], i[1]]] - p.b[i[0]] * p.b[i[1]])
    })
    .max_abs();
    let parallel = nb.max_abs();
    let curl = frame.affine.curl_b.max_abs();
    let mut checks = vec![
        PropertyCheck {
            name: "unit_axis",
            declared: true,
            holds: (norm2 - 1.0).abs() <= geom.unit_tol,
            residual: (norm2 - 1.0).abs(),
        },
        PropertyCheck {
            name: "charge_range",
            declared: true,
            holds: p.g > -2.0 && p.g < 2.0,
            residual: (p.g.abs() - 2.0).max(0.0),
        },
        PropertyCheck {
            name: "involutive",
            declared: props.involutive,
            holds: frame.involution_residual <= tol,
            residual: frame.involution_residual,
        },
        PropertyCheck {
            name: "b_parallel",
            declared: props.b_parallel,
            holds: parallel <= tol,
            residual: parallel,
        },
        PropertyCheck {
            name: "constant_charge",
            declared: props.landsberg,
            holds: grad_norm <= tol,
            residual: grad_norm,
        },
        PropertyCheck {
            name: "closed_axis",
            declared: props.landsberg,
            holds: curl <= tol,
            residual: curl,
        },
        PropertyCheck {
            name: "landsberg_expansion",
            declared: props.landsberg,
            holds: expansion <= tol,
            residual: expansion,
        },
    ];
    checks.push(PropertyCheck {
        name: "berwald_rate",
        declared: props.berwald,
        holds: k.abs() <= tol && expansion <= tol,
        residual: k.abs().max(expansion),
    });
    ScenarioDiagnostics {
        checks,
        expansion_rate: k,
    }
}

/// Ready-made field families.
pub mod fields {
    use super::*;

    pub fn flat_metric(n: usize) -> MatrixField {
        Arc::new(move |_x: &[f64]| Tensor::identity(n))
    }

    /// `dt² + e^{2kt} Σ dx_i²` with `t = x⁰`.
    pub fn warped_metric(n: usize, k: f64) -> MatrixField {
        Arc::new(move |x: &[f64]| {
            let s = (2.0 * k * x[0]).exp();
            Tensor::from_fn(n, 2, |i| match (i[0], i[1]) {
                (0, 0) => 1.0,
                (a, b) if a == b => s,
                _ => 0.0,
            })
        })
    }

    pub fn constant_axis(b: Vec<f64>) -> CovectorField {
        Arc::new(move |_x: &[f64]| b.clone())
    }

    /// Flat-metric unit axis rotating in the (x⁰, x¹) plane as the last
    /// coordinate advances: `b = (cos cξ, sin cξ, 0, …)`, `ξ = x^{N-1}`.
    pub fn twisted_axis(n: usize, rate: f64) -> CovectorField {
        Arc::new(move |x: &[f64]| {
            let t = rate * x[n - 1];
            let mut b = vec![0.0; n];
            b[0] = t.cos();
            b[1] = t.sin();
            b
        })
    }

    pub fn constant_charge(g0: f64) -> ScalarField {
        Arc::new(move |_x: &[f64]| g0)
    }

    /// `g = g₀ + μ₀ s + ½ μ₁ s²` with `s = ⟨dir, x⟩`; involutive with
    /// `μ(x) = μ₀ + μ₁ s` whenever `dir` is the (constant) axis.
    pub fn axial_charge(g0: f64, mu0: f64, mu1: f64, dir: Vec<f64>) -> ScalarField {
        Arc::new(move |x: &[f64]| {
            let s: f64 = dir.iter().zip(x).map(|(d, v)| d * v).sum();
            g0 + mu0 * s + 0.5 * mu1 * s * s
        })
    }

    /// `g = g₀ + ⟨c, x⟩`; generally not involutive.
    pub fn linear_charge(g0: f64, gradient: Vec<f64>) -> ScalarField {
        Arc::new(move |x: &[f64]| g0 + gradient.iter().zip(x).map(|(d, v)| d * v).sum::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::fields::*;
    use super::*;
    use approx::assert_relative_eq;

    fn e0(n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        v
    }

    #[test]
    fn flat_involutive_frame() {
        let n = 3;
        let mut geom = BackgroundGeometry::new(
            n,
            flat_metric(n),
            constant_axis(e0(n)),
            axial_charge(0.8, 0.1, 0.0, e0(n)),
        );
        geom.properties.involutive = true;
        let f = build_point_frame(&geom, &[0.2, -0.3, 0.5]).unwrap();
        assert_eq!(f.christoffels().max_abs(), 0.0);
        assert_eq!(f.nabla_b().max_abs(), 0.0);
        assert_eq!(f.riemann.max_abs(), 0.0);
        assert_relative_eq!(f.g_gradient()[0], 0.1, max_relative = 1e-9);
        assert!(f.g_gradient()[1].abs() < 1e-15);
        assert_relative_eq!(f.mu.unwrap(), 0.1, max_relative = 1e-9);
        let d = validate_scenario(&geom, &f, 1e-6);
        assert!(d.get("involutive").unwrap().holds);
        assert!(d.get("b_parallel").unwrap().holds);
    }

    #[test]
    fn warped_nabla_b_is_expansion() {
        let n = 3;
        let k = 0.3;
        let mut geom = BackgroundGeometry::new(n, warped_metric(n, k), constant_axis(e0(n)), constant_charge(0.5));
        geom.properties.landsberg = true;
        let x = [0.4, 0.1, -0.2];
        let f = build_point_frame(&geom, &x).unwrap();
        let p = &f.point;
        for i in 0..n {
            for j in 0..n {
                let expect = k * (p.a[[i, j]] - p.b[i] * p.b[j]);
                assert!((f.nabla_b()[[i, j]] - expect).abs() < 1e-9, "{i}{j}");
            }
        }
        // warped product: a^t_ii = -k e^{2kt}, a^i_ti = k
        let s = (2.0 * k * x[0]).exp();
        assert_relative_eq!(f.christoffels()[[0, 1, 1]], -k * s, max_relative = 1e-9);
        assert_relative_eq!(f.christoffels()[[1, 0, 1]], k, max_relative = 1e-9);
        // constant sectional curvature -k²: a_1^0_01 = ∂_0 a^0_11 - ... = -k² e^{2kt}
        assert_relative_eq!(f.riemann[[1, 0, 0, 1]], -k * k * s, max_relative = 1e-6);
        let r = &f.riemann;
        for idx in r.indices() {
            let (nn, i, a, b) = (idx[0], idx[1], idx[2], idx[3]);
            assert!((r[[nn, i, a, b]] + r[[nn, i, b, a]]).abs() < 1e-12);
        }
        let d = validate_scenario(&geom, &f, 1e-6);
        assert!(d.consistent(), "{d:?}");
        assert_relative_eq!(d.expansion_rate, k, max_relative = 1e-8);
    }

    #[test]
    fn rejects_non_unit_axis() {
        let n = 2;
        let geom = BackgroundGeometry::new(
            n,
            flat_metric(n),
            constant_axis(vec![1.01, 0.0]),
            constant_charge(0.3),
        );
        assert!(matches!(geom.point(&[0.0, 0.0]), Err(FinslerError::AxisNotUnit { .. })));
    }

    #[test]
    fn rejects_charge_out_of_range() {
        let n = 2;
        let geom = BackgroundGeometry::new(n, flat_metric(n), constant_axis(e0(n)), constant_charge(2.0));
        assert!(matches!(geom.point(&[0.0, 0.0]), Err(FinslerError::ChargeOutOfRange { .. })));
    }

    #[test]
    fn non_involutive_gradient_detected() {
        let n = 3;
        let mut geom = BackgroundGeometry::new(
            n,
            flat_metric(n),
            constant_axis(e0(n)),
            linear_charge(0.5, vec![0.0, 0.1, 0.0]),
        );
        geom.properties.involutive = true;
        let f = build_point_frame(&geom, &[0.1, 0.2, 0.3]).unwrap();
        assert!(!validate_scenario(&geom, &f, 1e-6).get("involutive").unwrap().holds);
    }

    #[test]
    fn christoffel_metric_compatibility_converges_second_order() {
        // ∂_m a_ij = a_kj a^k_im + a_ik a^k_jm; defect shrinks ~4x per halving
        let n = 3;
        let mut geom = BackgroundGeometry::new(n, warped_metric(n, 0.7), constant_axis(e0(n)), constant_charge(0.1));
        let x = [0.3f64, 0.0, 0.0];
        let exact_da = |i: usize, j: usize, m: usize| -> f64 {
            if m == 0 && i == j && i > 0 {
                1.4 * (1.4f64 * x[0]).exp()
            } else {
                0.0
            }
        };
        let defect = |geom: &BackgroundGeometry| {
            let c = geom.christoffels(&x).unwrap();
            let a = (geom.metric)(&x);
            let mut worst = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    for m in 0..n {
                        let mut v = 0.0;
                        for k in 0..n {
                            v += a[[k, j]] * c[[k, i, m]] + a[[i, k]] * c[[k, j, m]];
                        }
                        worst = worst.max((v - exact_da(i, j, m)).abs());
                    }
                }
            }
            worst
        };
        geom.x_step = 1e-2;
        let d1 = defect(&geom);
        geom.x_step = 5e-3;
        let d2 = defect(&geom);
        let ratio = d1 / d2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }
}
