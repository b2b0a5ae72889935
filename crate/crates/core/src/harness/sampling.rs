//! Seeded line-element sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::scenario::Scenario;
use crate::background::BackgroundGeometry;
use crate::error::{FinslerError, Result};
use crate::linalg::cholesky;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub index: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Homogeneity rescaling applied after drawing on the unit sphere.
    pub lambda: f64,
}

/// Draw a unit vector of `a_ij` at `x` with `q/S` and `|b|/S` above the limit.
fn draw_direction(rng: &mut ChaCha8Rng, geom: &BackgroundGeometry, x: &[f64], min_ratio: f64, attempts: usize) -> Result<Option<Vec<f64>>> {
    let n = geom.dim;
    let p = geom.point(x)?;
    let l = cholesky(&p.a).ok_or_else(|| FinslerError::MetricNotPositiveDefinite { x: x.to_vec() })?;
    for _ in 0..attempts {
        let mut u: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        u.iter_mut().for_each(|v| *v /= norm);
        // a = L Lᵀ; y = L^{-T} u has a(y, y) = 1
        let mut y = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| l[[k, i]] * y[k]).sum();
            y[i] = (u[i] - s) / l[[i, i]];
        }
        let b: f64 = p.b.iter().zip(&y).map(|(u, v)| u * v).sum();
        let q = (1.0 - b * b).max(0.0).sqrt();
        if q >= min_ratio && b.abs() >= min_ratio {
            return Ok(Some(y));
        }
    }
    Ok(None)
}

/// The sample set of a scenario; fully determined by its seed.
pub fn draw_samples(scenario: &Scenario, geom: &BackgroundGeometry) -> Result<Vec<Sample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let s = &scenario.sampling;
    let d = &scenario.domain;
    let mut out = Vec::with_capacity(scenario.samples);
    for index in 0..scenario.samples {
        let mut found = None;
        let mut tries = 0;
        while found.is_none() {
            if tries >= s.max_attempts {
                return Err(FinslerError::Sampling { attempts: tries });
            }
            tries += 1;
            let x: Vec<f64> = (0..geom.dim).map(|_| rng.random_range(d.lo..=d.hi)).collect();
            if geom.point(&x).is_err() {
                continue;
            }
            if let Some(y) = draw_direction(&mut rng, geom, &x, s.min_ratio, s.max_attempts)? {
                found = Some((x, y));
            }
        }
        let (x, y) = found.expect("loop exits with a sample");
        let lambda = rng.random_range(s.scale[0]..=s.scale[1]);
        out.push(Sample {
            index,
            y: y.iter().map(|v| v * lambda).collect(),
            x,
            lambda,
        });
    }
    Ok(out)
}
