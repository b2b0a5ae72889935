//! Fixed-step RK4 integration of `ẍ^k + G^k(x, ẋ) = 0`.

use serde::Serialize;

use super::scenario::Domain;
use crate::background::BackgroundGeometry;
use crate::error::{FinslerError, Result};
use crate::kernel::metric_function;
use crate::spray::{spray_pack, Local};
use crate::tensors::element;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: Vec<f64>,
    #[serde(rename = "x_dot")]
    pub v: Vec<f64>,
    /// `K(x(t), ẋ(t))`
    #[serde(rename = "K")]
    pub k: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    /// Set when the flow left the domain or the admissible cone before `t1`.
    pub exit: Option<GeodesicExit>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeodesicExit {
    pub t: f64,
    pub reason: String,
}

impl Trajectory {
    /// `max_t |K(t) − K(0)| / K(0)`
    pub fn max_relative_drift(&self) -> f64 {
        let k0 = self.points[0].k;
        self.points.iter().fold(0.0f64, |m, p| m.max((p.k - k0).abs() / k0))
    }

    pub fn into_result(self) -> Result<Self> {
        match self.exit {
            Some(e) => Err(FinslerError::GeodesicExit { t: e.t, reason: e.reason }),
            None => Ok(self),
        }
    }
}

fn spray(geom: &BackgroundGeometry, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let local = Local::at(geom, x)?;
    let el = element(&local.point, v)?;
    Ok(spray_pack(&local, &el).spray)
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

/// Integrate from `(x0, y0)` to `t1` with step `dt`; the last step is shortened
/// to land on `t1`.
pub fn trace(geom: &BackgroundGeometry, domain: &Domain, x0: &[f64], y0: &[f64], t1: f64, dt: f64) -> Result<Trajectory> {
    if x0.len() != geom.dim || y0.len() != geom.dim {
        return Err(FinslerError::Dimension {
            expected: geom.dim,
            got: x0.len().min(y0.len()),
        });
    }
    if !(dt > 0.0 && t1 >= 0.0) {
        return Err(FinslerError::Config(format!("geodesic needs dt > 0 and t1 ≥ 0, got dt = {dt}, t1 = {t1}")));
    }
    if !domain.contains(x0) {
        return Err(FinslerError::OutsideDomain { x: x0.to_vec() });
    }
    let k_at = |x: &[f64], v: &[f64]| -> Result<f64> { metric_function(&geom.point(x)?, v) };
    let mut x = x0.to_vec();
    let mut v = y0.to_vec();
    let mut points = vec![TrajectoryPoint {
        t: 0.0,
        x: x.clone(),
        v: v.clone(),
        k: k_at(&x, &v)?,
    }];
    let steps = (t1 / dt).ceil() as usize;
    let mut t = 0.0;
    for step in 0..steps {
        let h = if step + 1 == steps { t1 - t } else { dt };
        let stage = |x: &[f64], v: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
            let a: Vec<f64> = spray(geom, x, v)?.iter().map(|g| -g).collect();
            Ok((v.to_vec(), a))
        };
        let advanced = (|| -> Result<(Vec<f64>, Vec<f64>)> {
            let (k1x, k1v) = stage(&x, &v)?;
            let (k2x, k2v) = stage(&axpy(0.5 * h, &k1x, &x), &axpy(0.5 * h, &k1v, &v))?;
            let (k3x, k3v) = stage(&axpy(0.5 * h, &k2x, &x), &axpy(0.5 * h, &k2v, &v))?;
            let (k4x, k4v) = stage(&axpy(h, &k3x, &x), &axpy(h, &k3v, &v))?;
            let comb = |s: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
                (0..s.len()).map(|i| s[i] + h / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i])).collect()
            };
            Ok((comb(&x, &k1x, &k2x, &k3x, &k4x), comb(&v, &k1v, &k2v, &k3v, &k4v)))
        })();
        let exit = |reason: String| GeodesicExit { t, reason };
        let (nx, nv) = match advanced {
            Ok(s) => s,
            Err(e) => return Ok(Trajectory { points, exit: Some(exit(e.to_string())) }),
        };
        if !domain.contains(&nx) {
            return Ok(Trajectory {
                points,
                exit: Some(exit(format!("left the domain box at x = {nx:?}"))),
            });
        }
        let k = match k_at(&nx, &nv) {
            Ok(k) => k,
            Err(e) => return Ok(Trajectory { points, exit: Some(exit(e.to_string())) }),
        };
        t = if step + 1 == steps { t1 } else { t + h };
        x = nx;
        v = nv;
        points.push(TrajectoryPoint { t, x: x.clone(), v: v.clone(), k });
    }
    Ok(Trajectory { points, exit: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::fields;

    #[test]
    fn constant_charge_flat_gives_straight_lines() {
        let geom = BackgroundGeometry::new(3, fields::flat_metric(3), fields::constant_axis(vec![1.0, 0.0, 0.0]), fields::constant_charge(0.7));
        let tr = trace(&geom, &Domain::default(), &[0.1, 0.0, -0.2], &[0.3, 0.2, 0.1], 1.0, 0.01).unwrap();
        assert!(tr.exit.is_none());
        let last = tr.points.last().unwrap();
        assert_eq!(last.t, 1.0);
        for (i, (x0, v0)) in [(0.1, 0.3), (0.0, 0.2), (-0.2, 0.1)].iter().enumerate() {
            assert!((last.x[i] - (x0 + v0)).abs() < 1e-14);
        }
        assert_eq!(tr.max_relative_drift(), 0.0);
    }

    #[test]
    fn leaving_the_box_is_reported_with_time() {
        let geom = BackgroundGeometry::new(2, fields::flat_metric(2), fields::constant_axis(vec![1.0, 0.0]), fields::constant_charge(0.0));
        let tr = trace(&geom, &Domain::default(), &[0.9, 0.0], &[1.0, 0.5], 1.0, 0.01).unwrap();
        let exit = tr.exit.clone().unwrap();
        assert!(exit.t > 0.05 && exit.t < 0.15, "{}", exit.t);
        assert!(matches!(tr.into_result(), Err(FinslerError::GeodesicExit { .. })));
    }
}
