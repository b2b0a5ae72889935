use finsleroid::background::fields;
use finsleroid::harness::{draw_samples, Scenario};
use finsleroid::kernel::metric_function;
use finsleroid::linalg::cholesky;
use finsleroid::spray::{spray_pack, Local};
use finsleroid::tensors::element;
use finsleroid::{BackgroundGeometry, Point, Tensor};
use proptest::prelude::*;

fn constant_background(n: usize, g: f64) -> BackgroundGeometry {
    let mut b = vec![0.0; n];
    b[0] = 1.0;
    BackgroundGeometry::new(n, fields::flat_metric(n), fields::constant_axis(b), fields::constant_charge(g))
}

/// Away from both excluded cones.
fn admissible(p: &Point, y: &[f64]) -> bool {
    let s = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let b: f64 = p.b.iter().zip(y).map(|(u, v)| u * v).sum();
    s > 1e-3 && (b / s).abs() > 1e-2 && (1.0 - (b / s).powi(2)).sqrt() > 1e-2
}

fn element_input() -> impl Strategy<Value = (usize, f64, Vec<f64>)> {
    (2usize..=4, -1.9f64..1.9).prop_flat_map(|(n, g)| (Just(n), Just(g), prop::collection::vec(-2.0f64..2.0, n)))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_function_is_positively_homogeneous((n, g, y) in element_input(), lambda in 0.1f64..10.0) {
        let p = constant_background(n, g).point(&vec![0.0; n]).unwrap();
        prop_assume!(admissible(&p, &y));
        let k = metric_function(&p, &y).unwrap();
        let ys: Vec<f64> = y.iter().map(|v| v * lambda).collect();
        prop_assert!(k > 0.0);
        prop_assert!(close(metric_function(&p, &ys).unwrap(), lambda * k, 1e-13));
    }

    #[test]
    fn metric_is_symmetric_positive_and_zero_homogeneous((n, g, y) in element_input(), lambda in 0.1f64..10.0) {
        let p = constant_background(n, g).point(&vec![0.0; n]).unwrap();
        prop_assume!(admissible(&p, &y));
        let el = element(&p, &y).unwrap();
        let gm = &el.metric.metric;
        prop_assert!(cholesky(gm).is_some());
        let ys: Vec<f64> = y.iter().map(|v| v * lambda).collect();
        let gs = element(&p, &ys).unwrap().metric.metric;
        for i in 0..n {
            for j in 0..n {
                prop_assert!(close(gm[[i, j]], gm[[j, i]], 1e-14));
                prop_assert!(close(gs[[i, j]], gm[[i, j]], 1e-10));
            }
        }
        let gyy: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| gm[[i, j]] * y[i] * y[j]).sum();
        prop_assert!(close(gyy, el.k() * el.k(), 1e-12));
    }

    #[test]
    fn metric_and_inverse_are_reciprocal((n, g, y) in element_input()) {
        let p = constant_background(n, g).point(&vec![0.0; n]).unwrap();
        prop_assume!(admissible(&p, &y));
        let el = element(&p, &y).unwrap();
        let prod = finsleroid::tensor::mat_mul(&el.metric.metric, &el.metric.inverse);
        prop_assert!(prod.sub(&Tensor::identity(n)).max_abs() < 1e-10);
    }

    #[test]
    fn cartan_tensor_is_symmetric_and_transverse((n, g, y) in element_input()) {
        let p = constant_background(n, g).point(&vec![0.0; n]).unwrap();
        prop_assume!(admissible(&p, &y));
        let el = element(&p, &y).unwrap();
        let c = &el.cartan.cartan;
        let scale = c.max_abs().max(1.0);
        for perm in [[1, 0, 2], [0, 2, 1], [2, 1, 0], [1, 2, 0]] {
            prop_assert!(c.permuted(&perm).sub(c).max_abs() <= 1e-12 * scale);
        }
        prop_assert!(c.contract_last(&y).max_abs() <= 1e-12 * scale * el.k().max(1.0));
        let ay: f64 = el.cartan.vector.iter().zip(&y).map(|(a, v)| a * v).sum();
        prop_assert!(ay.abs() <= 1e-12 * scale * el.k().max(1.0));
    }

    #[test]
    fn zero_charge_is_riemannian(n in 2usize..=4, y in prop::collection::vec(-2.0f64..2.0, 4)) {
        let p = constant_background(n, 0.0).point(&vec![0.0; n]).unwrap();
        let y = &y[..n];
        prop_assume!(admissible(&p, y));
        let s = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(close(metric_function(&p, y).unwrap(), s, 1e-14));
    }

    #[test]
    fn spray_is_quadratic_in_y(name in prop::sample::select(vec!["S1", "S2"]), n in 2usize..=4,
                               y in prop::collection::vec(-2.0f64..2.0, 4), x in prop::collection::vec(-0.8f64..0.8, 4),
                               lambda in 0.2f64..5.0) {
        let geom = Scenario::builtin(name, n).unwrap().geometry().unwrap();
        let (x, y) = (&x[..n], &y[..n]);
        let local = Local::at(&geom, x).unwrap();
        prop_assume!(admissible(&local.point, y));
        let g1 = spray_pack(&local, &element(&local.point, y).unwrap()).spray;
        let ys: Vec<f64> = y.iter().map(|v| v * lambda).collect();
        let g2 = spray_pack(&local, &element(&local.point, &ys).unwrap()).spray;
        let scale = g1.iter().fold(1.0f64, |m, v| m.max(v.abs())) * lambda * lambda;
        for (a, b) in g1.iter().zip(&g2) {
            prop_assert!((a * lambda * lambda - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn samples_depend_only_on_the_seed(seed in any::<u64>()) {
        let mut sc = Scenario::builtin("S1", 3).unwrap();
        sc.samples = 5;
        sc.seed = seed;
        let geom = sc.geometry().unwrap();
        prop_assert_eq!(draw_samples(&sc, &geom).unwrap(), draw_samples(&sc, &geom).unwrap());
    }
}
