//! Sweep over the sample set, geodesic checks and the verification report.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::checks::{evaluate_element, Severity, SweepContext, CATALOG};
use super::geodesic::trace;
use super::sampling::{draw_samples, Sample};
use super::scenario::Scenario;
use crate::background::BackgroundGeometry;
use crate::error::{FinslerError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable overriding the worker count of the sweep.
pub const THREADS_ENV: &str = "FINSLEROID_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// No sampled element exercised the check.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub label: String,
    pub criterion: Option<u8>,
    pub severity: Severity,
    pub tolerance: f64,
    /// `null` when skipped or when a residual was not finite.
    pub max_residual: Option<f64>,
    pub worst_sample: Option<usize>,
    pub samples: usize,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleError {
    pub index: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeodesicRecord {
    pub sample: usize,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub drift: Option<f64>,
    pub drift_coarse: Option<f64>,
    pub drift_half: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionRecord {
    pub criterion: u8,
    pub status: Status,
    pub checks: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub gate_checks: usize,
    pub gate_failed: usize,
    pub info_failed: usize,
    pub skipped: usize,
    pub sample_errors: usize,
    pub passed: bool,
}

/// Everything except timing; identical across runs with the same scenario and seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportBody {
    pub scenario: Scenario,
    pub checks: Vec<CheckRecord>,
    pub criteria: Vec<CriterionRecord>,
    pub geodesics: Vec<GeodesicRecord>,
    pub sample_errors: Vec<SampleError>,
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub total_ms: f64,
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub body: ReportBody,
    pub timing: Timing,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.body.summary.passed
    }

    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.body.checks.iter().find(|c| c.id == id)
    }

    pub fn criterion(&self, c: u8) -> Option<&CriterionRecord> {
        self.body.criteria.iter().find(|r| r.criterion == c)
    }

    pub fn body_json(&self) -> String {
        serde_json::to_string_pretty(&self.body).expect("report body serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Thread count from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Relative K-drift of the three step sizes used by the geodesic checks.
fn geodesic_record(sc: &Scenario, geom: &BackgroundGeometry, s: &Sample) -> GeodesicRecord {
    let gs = &sc.geodesic;
    let x0: Vec<f64> = s.x.iter().map(|v| v * gs.shrink).collect();
    let mut rec = GeodesicRecord {
        sample: s.index,
        x0: x0.clone(),
        y0: Vec::new(),
        drift: None,
        drift_coarse: None,
        drift_half: None,
        error: None,
    };
    let run = || -> Result<(Vec<f64>, f64, f64, f64)> {
        let p = geom.point(&x0)?;
        let len = crate::tensor::dot(&crate::tensor::mat_vec(&p.a, &s.y), &s.y).sqrt();
        let y0: Vec<f64> = s.y.iter().map(|v| v * gs.speed / len).collect();
        let drift = |dt: f64| -> Result<f64> {
            let tr = trace(geom, &sc.domain, &x0, &y0, gs.t1, dt)?.into_result()?;
            Ok(tr.max_relative_drift() / gs.t1)
        };
        Ok((y0.clone(), drift(gs.dt)?, drift(gs.coarse_dt)?, drift(0.5 * gs.coarse_dt)?))
    };
    match run() {
        Ok((y0, d, c, h)) => {
            rec.y0 = y0;
            rec.drift = Some(d);
            rec.drift_coarse = Some(c);
            rec.drift_half = Some(h);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// Half-step drift below this is dominated by rounding and carries no order information.
const ORDER_FLOOR: f64 = 1e-12;

/// `|log2(coarse / half) − 4|`, `None` when the drift is not measurable.
fn order_residual(coarse: f64, half: f64) -> Option<f64> {
    (half >= ORDER_FLOOR).then(|| ((coarse / half).log2() - 4.0).abs())
}

struct Accum {
    max: f64,
    worst: Option<usize>,
    samples: usize,
    finite: bool,
}

impl Accum {
    fn new() -> Self {
        Self {
            max: 0.0,
            worst: None,
            samples: 0,
            finite: true,
        }
    }

    /// Sample-index order makes the first worst case win ties.
    fn add(&mut self, index: usize, v: f64) {
        self.samples += 1;
        if !v.is_finite() {
            if self.finite {
                self.worst = Some(index);
            }
            self.finite = false;
        } else if self.finite && (self.worst.is_none() || v > self.max) {
            self.max = v;
            self.worst = Some(index);
        }
    }
}

/// Run every applicable check over the scenario's sample set.
///
/// `threads = None` uses [`threads_from_env`] and falls back to rayon's default.
pub fn run_suite(scenario: &Scenario, threads: Option<usize>) -> Result<VerificationReport> {
    let start = Instant::now();
    scenario.validate()?;
    let geom = scenario.geometry()?;
    let berwald_sc = scenario.flags.landsberg.then(|| scenario.berwald_variant());
    let berwald = berwald_sc.as_ref().map(|s| s.geometry()).transpose()?;
    let ctx = SweepContext {
        scenario,
        geom: &geom,
        berwald: berwald.as_ref(),
    };
    let samples = draw_samples(scenario, &geom)?;

    let threads = threads.or_else(threads_from_env);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| FinslerError::Config(format!("thread pool: {e}")))?;
    let used = pool.current_num_threads();

    let (outcomes, geodesics) = pool.install(|| {
        let outcomes: Vec<_> = samples.par_iter().map(|s| evaluate_element(&ctx, &s.x, &s.y)).collect();
        let n_geo = scenario.geodesic.trajectories.min(samples.len());
        let geodesics: Vec<_> = samples[..n_geo].par_iter().map(|s| geodesic_record(scenario, &geom, s)).collect();
        (outcomes, geodesics)
    });

    let mut acc: BTreeMap<&str, Accum> = CATALOG.iter().map(|c| (c.id, Accum::new())).collect();
    let mut sample_errors = Vec::new();
    for (s, out) in samples.iter().zip(outcomes) {
        match out {
            Ok(rec) => {
                for (id, v) in rec.values {
                    acc.get_mut(id).expect("recorded id is in the catalog").add(s.index, v);
                }
            }
            Err(e) => sample_errors.push(SampleError {
                index: s.index,
                message: e.to_string(),
            }),
        }
    }
    for g in &geodesics {
        if let Some(e) = &g.error {
            sample_errors.push(SampleError {
                index: g.sample,
                message: format!("geodesic: {e}"),
            });
            continue;
        }
        let (d, c, h) = (g.drift.unwrap(), g.drift_coarse.unwrap(), g.drift_half.unwrap());
        acc.get_mut("geodesic.drift").unwrap().add(g.sample, d);
        if let Some(o) = order_residual(c, h) {
            acc.get_mut("geodesic.order").unwrap().add(g.sample, o);
        }
    }

    let checks: Vec<CheckRecord> = CATALOG
        .iter()
        .map(|c| {
            let a = &acc[c.id];
            let tolerance = scenario.tolerance(c.id);
            let status = if a.samples == 0 {
                Status::Skipped
            } else if a.finite && a.max <= tolerance {
                Status::Pass
            } else {
                Status::Fail
            };
            CheckRecord {
                id: c.id.to_string(),
                label: c.label.to_string(),
                criterion: c.criterion,
                severity: c.severity,
                tolerance,
                max_residual: (a.samples > 0 && a.finite).then_some(a.max),
                worst_sample: a.worst,
                samples: a.samples,
                status,
            }
        })
        .collect();

    let mut by_criterion: BTreeMap<u8, Vec<&CheckRecord>> = BTreeMap::new();
    for c in checks.iter().filter(|c| c.severity == Severity::Gate) {
        if let Some(k) = c.criterion {
            by_criterion.entry(k).or_default().push(c);
        }
    }
    let criteria = by_criterion
        .into_iter()
        .map(|(criterion, cs)| {
            let status = if cs.iter().any(|c| c.status == Status::Fail) {
                Status::Fail
            } else if cs.iter().all(|c| c.status == Status::Skipped) {
                Status::Skipped
            } else {
                Status::Pass
            };
            CriterionRecord {
                criterion,
                status,
                checks: cs.iter().map(|c| c.id.clone()).collect(),
            }
        })
        .collect();

    let gate = |c: &&CheckRecord| c.severity == Severity::Gate;
    let gate_failed = checks.iter().filter(gate).filter(|c| c.status == Status::Fail).count();
    let summary = Summary {
        gate_checks: checks.iter().filter(gate).filter(|c| c.status != Status::Skipped).count(),
        gate_failed,
        info_failed: checks.iter().filter(|c| c.severity == Severity::Info && c.status == Status::Fail).count(),
        skipped: checks.iter().filter(|c| c.status == Status::Skipped).count(),
        sample_errors: sample_errors.len(),
        passed: gate_failed == 0 && sample_errors.is_empty(),
    };

    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        body: ReportBody {
            scenario: scenario.clone(),
            checks,
            criteria,
            geodesics,
            sample_errors,
            summary,
        },
        timing: Timing {
            total_ms: start.elapsed().as_secs_f64() * 1e3,
            threads: used,
        },
    })
}
