//! Reference values computed here, independently of the engine's own oracles.

use approx::assert_relative_eq;
use finsleroid::background::fields;
use finsleroid::connection::horizontal_frame_at;
use finsleroid::harness::{trace, Scenario};
use finsleroid::kernel::{g_derivative_scalars, metric_function};
use finsleroid::spray::Local;
use finsleroid::tensors::element;
use finsleroid::{BackgroundGeometry, Point};

fn axis_background(n: usize, g: f64) -> BackgroundGeometry {
    let mut b = vec![0.0; n];
    b[0] = 1.0;
    BackgroundGeometry::new(n, fields::flat_metric(n), fields::constant_axis(b), fields::constant_charge(g))
}

fn k2(p: &Point, y: &[f64]) -> f64 {
    metric_function(p, y).unwrap().powi(2)
}

/// Plain 4-point central stencil for ½ ∂²K²/∂y^i∂y^j.
fn fd_hessian(p: &Point, y: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = y.len();
    let at = |di: usize, si: f64, dj: usize, sj: f64| {
        let mut z = y.to_vec();
        z[di] += si * h;
        z[dj] += sj * h;
        k2(p, &z)
    };
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| 0.5 * (at(i, 1.0, j, 1.0) - at(i, 1.0, j, -1.0) - at(i, -1.0, j, 1.0) + at(i, -1.0, j, -1.0)) / (4.0 * h * h))
                .collect()
        })
        .collect()
}

#[test]
fn metric_matches_finite_difference_hessian() {
    for (g, y) in [(0.6, vec![0.7, -0.4, 0.5]), (-1.3, vec![-0.2, 0.9, 0.3]), (1.8, vec![1.5, 0.1, -0.6, 0.8])] {
        let n = y.len();
        let p = axis_background(n, g).point(&vec![0.0; n]).unwrap();
        let el = element(&p, &y).unwrap();
        let fd = fd_hessian(&p, &y, 1e-4);
        for i in 0..n {
            for j in 0..n {
                assert_relative_eq!(el.metric.metric[[i, j]], fd[i][j], epsilon = 1e-6, max_relative = 1e-6);
            }
        }
    }
}

/// On the axis the angle is 0 forward and π backward: K(b) = 1, K(−b) = exp(−π g / (2h)).
#[test]
fn metric_function_on_the_axis() {
    for g in [-1.5, -0.3, 0.4, 1.9] {
        let p = axis_background(3, g).point(&[0.0; 3]).unwrap();
        let h = (1.0 - g * g / 4.0f64).sqrt();
        assert_relative_eq!(metric_function(&p, &[2.0, 0.0, 0.0]).unwrap(), 2.0, max_relative = 1e-15);
        let back = (-std::f64::consts::PI * g / (2.0 * h)).exp();
        assert_relative_eq!(metric_function(&p, &[-2.0, 0.0, 0.0]).unwrap(), 2.0 * back, max_relative = 1e-14);
    }
}

/// `a = diag(1, e^{2kx⁰}, …)`: `a^0_ii = −k e^{2kx⁰}`, `a^i_0i = a^i_i0 = k` for i ≥ 1.
fn warped_christoffel(k: f64, x0: f64, idx: [usize; 3]) -> f64 {
    match idx {
        [0, i, j] if i == j && i > 0 => -k * (2.0 * k * x0).exp(),
        [i, 0, j] | [i, j, 0] if i == j && i > 0 => k,
        _ => 0.0,
    }
}

#[test]
fn christoffels_converge_at_second_order() {
    let (n, k) = (3, 0.4);
    let x = [0.3, -0.2, 0.5];
    let err = |step: f64| {
        let mut geom = BackgroundGeometry::new(n, fields::warped_metric(n, k), fields::constant_axis(vec![1.0, 0.0, 0.0]), fields::constant_charge(0.6));
        geom.x_step = step;
        geom.richardson = false;
        let c = geom.christoffels(&x).unwrap();
        let mut e = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for d in 0..n {
                    e = e.max((c[[a, b, d]] - warped_christoffel(k, x[0], [a, b, d])).abs());
                }
            }
        }
        e
    };
    let (coarse, fine) = (err(2e-2), err(1e-2));
    let ratio = coarse / fine;
    assert!((3.6..4.4).contains(&ratio), "ratio {ratio}");
    // Richardson removes the leading term entirely
    let mut geom = Scenario::builtin("S2", 3).unwrap().geometry().unwrap();
    geom.richardson = true;
    let c = geom.christoffels(&x).unwrap();
    assert_relative_eq!(c[[0, 1, 1]], warped_christoffel(k, x[0], [0, 1, 1]), max_relative = 1e-9);
}

#[test]
fn spray_christoffel_check_converges_at_second_order() {
    let sc = Scenario::builtin("S1", 3).unwrap();
    let x = [0.2, -0.4, 0.1];
    let y = [0.6, 0.3, -0.5];
    let residual = |step: f64| {
        let mut geom = sc.geometry().unwrap();
        geom.x_step = step;
        geom.richardson = false;
        let local = Local::at(&geom, &x).unwrap();
        let f = horizontal_frame_at(&geom, &local, &y[..]).unwrap();
        let gyy = f.gamma.contract_last(&y).contract_last(&y);
        f.spray.iter().zip(gyy.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let ratio = residual(4e-2) / residual(2e-2);
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn charge_derivative_of_k_squared_matches_differences() {
    let y = [0.5, -0.8, 0.3];
    let g = 0.7;
    let p = axis_background(3, g).point(&[0.0; 3]).unwrap();
    let el = element(&p, &y).unwrap();
    let closed = g_derivative_scalars(&p, &el.line, &el.scalars).d_k2;
    let fd = |h: f64| (k2(&p.with_charge(g + h), &y) - k2(&p.with_charge(g - h), &y)) / (2.0 * h);
    let (e1, e2) = ((fd(2e-2) - closed).abs(), (fd(1e-2) - closed).abs());
    assert!((3.6..4.4).contains(&(e1 / e2)), "ratio {}", e1 / e2);
    assert_relative_eq!(fd(1e-5), closed, max_relative = 1e-8);
}

#[test]
fn constant_data_geodesics_are_straight_and_riemannian_ones_conserve_length() {
    let sc = Scenario::builtin("S0", 3).unwrap();
    let geom = sc.geometry().unwrap();
    let tr = trace(&geom, &sc.domain, &[0.1, 0.2, 0.0], &[0.3, -0.1, 0.2], 1.0, 0.01).unwrap();
    let last = tr.points.last().unwrap();
    for (i, v) in [0.4, 0.1, 0.2].iter().enumerate() {
        assert_relative_eq!(last.x[i], v, epsilon = 1e-14);
    }
    let s = (0.3f64 * 0.3 + 0.01 + 0.04).sqrt();
    assert!(tr.points.iter().all(|p| (p.k - s).abs() < 1e-14));
}
