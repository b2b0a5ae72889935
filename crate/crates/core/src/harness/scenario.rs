//! Scenario files: background recipe, sampling rule, numerics and tolerances.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::checks::CATALOG;
use crate::background::{fields, BackgroundGeometry, DeclaredProperties};
use crate::error::{FinslerError, Result};

/// Associated Riemannian metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricSpec {
    Flat,
    /// `dt² + e^{2kt} Σ dx_i²`
    Warped { rate: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AxisSpec {
    /// Constant covector; defaults to `(1, 0, …, 0)`.
    Constant {
        #[serde(default)]
        covector: Option<Vec<f64>>,
    },
    /// Flat-metric axis rotating in the (x⁰, x¹) plane along the last coordinate.
    Twisted { rate: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChargeSpec {
    Constant {
        g: f64,
    },
    /// `g = g0 + slope·s + ½ curvature·s²`, `s = ⟨direction, x⟩`; direction
    /// defaults to the constant axis.
    Axial {
        g0: f64,
        slope: f64,
        #[serde(default)]
        curvature: f64,
        #[serde(default)]
        direction: Option<Vec<f64>>,
    },
    Linear {
        g0: f64,
        gradient: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Default for Domain {
    fn default() -> Self {
        Self { lo: -1.0, hi: 1.0 }
    }
}

impl Domain {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|v| *v >= self.lo && *v <= self.hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    /// Rays with `q/S` or `|b|/S` below this are redrawn.
    pub min_ratio: f64,
    /// Range of the homogeneity rescaling `λ`.
    pub scale: [f64; 2],
    /// Redraws allowed per sample before giving up.
    pub max_attempts: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            min_ratio: 1e-3,
            scale: [0.5, 2.0],
            max_attempts: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub x_step: f64,
    pub nested_step: f64,
    pub richardson: bool,
    /// Step of the central differences in the charge.
    pub g_step: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            x_step: 1e-5,
            nested_step: 1e-4,
            richardson: true,
            g_step: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeodesicSettings {
    /// Number of sampled elements used as initial data.
    pub trajectories: usize,
    pub t1: f64,
    pub dt: f64,
    /// Step used for the step-halving order check.
    pub coarse_dt: f64,
    /// Initial points are the sampled x shrunk by this factor.
    pub shrink: f64,
    /// Initial velocities are rescaled to this Riemannian length.
    pub speed: f64,
}

impl Default for GeodesicSettings {
    fn default() -> Self {
        Self {
            trajectories: 3,
            t1: 1.0,
            dt: 1e-3,
            coarse_dt: 0.25,
            shrink: 0.25,
            speed: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub dim: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub domain: Domain,
    pub metric: MetricSpec,
    pub axis: AxisSpec,
    pub charge: ChargeSpec,
    #[serde(default)]
    pub flags: DeclaredProperties,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub geodesic: GeodesicSettings,
    /// Overrides of the default tolerance of individual check ids.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

fn default_samples() -> usize {
    200
}

/// Names accepted by [`Scenario::builtin`].
pub const BUILTIN_NAMES: [&str; 4] = ["S0", "S1", "S2", "S3"];

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

impl Scenario {
    fn base(name: &str, dim: usize, metric: MetricSpec, charge: ChargeSpec, flags: DeclaredProperties) -> Self {
        Self {
            name: name.to_string(),
            dim,
            samples: default_samples(),
            seed: 0,
            domain: Domain::default(),
            metric,
            axis: AxisSpec::Constant { covector: None },
            charge,
            flags,
            sampling: Sampling::default(),
            numerics: Numerics::default(),
            geodesic: GeodesicSettings::default(),
            tolerances: BTreeMap::new(),
        }
    }

    /// Built-in scenarios. Accepts `S0`…`S3` or their long names.
    pub fn builtin(name: &str, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(FinslerError::Config(format!("dimension {dim} < 2")));
        }
        let flat = DeclaredProperties {
            flat: true,
            b_parallel: true,
            ..Default::default()
        };
        let s = match name {
            "S0" | "riemannian" => Self::base("S0", dim, MetricSpec::Flat, ChargeSpec::Constant { g: 0.0 }, DeclaredProperties {
                landsberg: true,
                berwald: true,
                ..flat
            }),
            "S1" | "flat-involutive" => Self::base(
                "S1",
                dim,
                MetricSpec::Flat,
                ChargeSpec::Axial {
                    g0: 0.8,
                    slope: 0.3,
                    curvature: 0.0,
                    direction: None,
                },
                DeclaredProperties { involutive: true, ..flat },
            ),
            "S2" | "warped-landsberg" => Self::base("S2", dim, MetricSpec::Warped { rate: 0.4 }, ChargeSpec::Constant { g: 0.6 }, DeclaredProperties {
                landsberg: true,
                ..Default::default()
            }),
            "S3" | "flat-constant-g" => Self::base("S3", dim, MetricSpec::Flat, ChargeSpec::Constant { g: 0.7 }, DeclaredProperties {
                landsberg: true,
                berwald: true,
                involutive: true,
                ..flat
            }),
            other => {
                return Err(FinslerError::Config(format!(
                    "unknown builtin scenario `{other}` (expected one of {BUILTIN_NAMES:?})"
                )))
            }
        };
        Ok(s)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| FinslerError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| FinslerError::Config(e.to_string()))
    }

    /// A builtin name or a path to a TOML file.
    pub fn load(spec: &str, dim: Option<usize>) -> Result<Self> {
        let path = Path::new(spec);
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| FinslerError::Io(format!("{spec}: {e}")))?;
            let s = Self::from_toml(&text)?;
            if let Some(d) = dim {
                if d != s.dim {
                    return Err(FinslerError::Config(format!("scenario file fixes dim = {}, got --dim {d}", s.dim)));
                }
            }
            s.validate()?;
            Ok(s)
        } else {
            Self::builtin(spec, dim.unwrap_or(3))
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        let cfg = |m: String| Err(FinslerError::Config(m));
        if n < 2 {
            return cfg(format!("dimension {n} < 2"));
        }
        if self.domain.lo.partial_cmp(&self.domain.hi) != Some(std::cmp::Ordering::Less) {
            return cfg("domain requires lo < hi".into());
        }
        let s = &self.sampling;
        if !(s.min_ratio > 0.0 && s.min_ratio < 0.5) || !(s.scale[0] > 0.0 && s.scale[0] <= s.scale[1]) || s.max_attempts == 0 {
            return cfg("sampling rule out of range".into());
        }
        let nm = &self.numerics;
        if !(nm.x_step > 0.0 && nm.nested_step > 0.0 && nm.g_step > 0.0) {
            return cfg("finite-difference steps must be positive".into());
        }
        let gd = &self.geodesic;
        if !(gd.t1 > 0.0 && gd.dt > 0.0 && gd.coarse_dt > gd.dt && gd.shrink > 0.0 && gd.speed > 0.0) {
            return cfg("geodesic settings out of range".into());
        }
        let len_ok = |v: &Option<Vec<f64>>| v.as_ref().is_none_or(|v| v.len() == n);
        match (&self.axis, &self.metric) {
            (AxisSpec::Constant { covector }, _) if !len_ok(covector) => return cfg("axis covector length".into()),
            (AxisSpec::Twisted { .. }, MetricSpec::Warped { .. }) => return cfg("twisted axis is only unit for the flat metric".into()),
            _ => {}
        }
        match &self.charge {
            ChargeSpec::Axial { direction, .. } if !len_ok(direction) => return cfg("charge direction length".into()),
            ChargeSpec::Linear { gradient, .. } if gradient.len() != n => return cfg("charge gradient length".into()),
            _ => {}
        }
        for id in self.tolerances.keys() {
            if !CATALOG.iter().any(|c| c.id == id) {
                return cfg(format!("tolerance for unknown check `{id}`"));
            }
        }
        if self.tolerances.values().any(|t| t.is_nan() || *t < 0.0) {
            return cfg("tolerances must be non-negative".into());
        }
        Ok(())
    }

    /// Effective tolerance of a check id.
    pub fn tolerance(&self, id: &str) -> f64 {
        self.tolerances
            .get(id)
            .copied()
            .or_else(|| CATALOG.iter().find(|c| c.id == id).map(|c| c.tolerance))
            .unwrap_or_else(|| panic!("check `{id}` missing from the catalog"))
    }

    fn axis_covector(&self) -> Vec<f64> {
        match &self.axis {
            AxisSpec::Constant { covector } => covector.clone().unwrap_or_else(|| unit(self.dim, 0)),
            AxisSpec::Twisted { .. } => unit(self.dim, 0),
        }
    }

    pub fn geometry(&self) -> Result<BackgroundGeometry> {
        self.validate()?;
        let n = self.dim;
        let metric = match self.metric {
            MetricSpec::Flat => fields::flat_metric(n),
            MetricSpec::Warped { rate } => fields::warped_metric(n, rate),
        };
        let axis = match &self.axis {
            AxisSpec::Constant { .. } => fields::constant_axis(self.axis_covector()),
            AxisSpec::Twisted { rate } => fields::twisted_axis(n, *rate),
        };
        let charge = match &self.charge {
            ChargeSpec::Constant { g } => fields::constant_charge(*g),
            ChargeSpec::Axial {
                g0,
                slope,
                curvature,
                direction,
            } => fields::axial_charge(*g0, *slope, *curvature, direction.clone().unwrap_or_else(|| self.axis_covector())),
            ChargeSpec::Linear { g0, gradient } => fields::linear_charge(*g0, gradient.clone()),
        };
        let mut geom = BackgroundGeometry::new(n, metric, axis, charge);
        geom.x_step = self.numerics.x_step;
        geom.nested_step = self.numerics.nested_step;
        geom.richardson = self.numerics.richardson;
        geom.properties = self.flags;
        Ok(geom)
    }

    /// The same recipe with the warped metric flattened (`k = 0`).
    pub fn berwald_variant(&self) -> Self {
        let mut s = self.clone();
        if let MetricSpec::Warped { .. } = s.metric {
            s.metric = MetricSpec::Flat;
        }
        s.flags.berwald = true;
        s
    }

    /// Charge field is constant, so `μ = 0` and every `E`-term vanishes.
    pub fn constant_charge(&self) -> bool {
        match &self.charge {
            ChargeSpec::Constant { .. } => true,
            ChargeSpec::Axial { slope, curvature, .. } => *slope == 0.0 && *curvature == 0.0,
            ChargeSpec::Linear { gradient, .. } => gradient.iter().all(|v| *v == 0.0),
        }
    }

    /// Everything is x-independent: flat metric, constant axis, constant charge.
    pub fn translation_invariant(&self) -> bool {
        matches!(self.metric, MetricSpec::Flat) && matches!(self.axis, AxisSpec::Constant { .. }) && self.constant_charge()
    }

    /// Expansion rate `k` of a warped background, zero otherwise.
    pub fn expansion_rate(&self) -> f64 {
        match self.metric {
            MetricSpec::Flat => 0.0,
            MetricSpec::Warped { rate } => rate,
        }
    }
}
