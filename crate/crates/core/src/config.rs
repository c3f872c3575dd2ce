//! Run configuration (JSON, versioned by the `schema` field).
//!
//! Relative paths inside a config resolve against the directory holding the
//! config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::QuadratureOrders;
use crate::dynamics::DynamicModel;
use crate::planet::{PlanetModel, GRAVITATIONAL_CONSTANT};
use crate::wind::{DecayFamily, ParamBounds};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Si,
    /// `R = M = Ω = G = 1`; numeric planet fields are ignored.
    Normalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanetConfig {
    pub units: Units,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    /// CSV `n,J0` overriding the zero background harmonics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background_j: Option<PathBuf>,
}

impl PlanetConfig {
    pub fn model(&self) -> Result<PlanetModel> {
        match self.units {
            Units::Normalized => Ok(PlanetModel::normalized()),
            Units::Si => {
                let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Config(format!("planet.{name} is required in si units")));
                PlanetModel::new(
                    need(self.radius, "radius")?,
                    need(self.mass, "mass")?,
                    need(self.omega, "omega")?,
                    self.g.unwrap_or(GRAVITATIONAL_CONSTANT),
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    #[serde(default = "default_m_max")]
    pub m_max: u32,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    /// Highest output degree `N`; defaults to `n_max` for forward runs and
    /// to the observed file's extent for fits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
}

fn default_m_max() -> u32 {
    60
}

fn default_n_max() -> u32 {
    12
}

impl Default for Truncation {
    fn default() -> Self {
        Self { m_max: default_m_max(), n_max: default_n_max(), degree: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub family: DecayFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<ParamBounds>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindConfig {
    /// CSV `latitude_deg,u_mps` or `t,u_mps`.
    pub profile: PathBuf,
    pub decay: DecayConfig,
    /// Half-width `ε_t` of the equatorial blend; absent means no smoothing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    Wind(WindConfig),
    /// `S = ((π/R)² - γ_{n,m}²) u_{m,n,0}`, for verification runs.
    Manufactured { m: u32, n: u32 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<PathBuf>,
    /// Per-term contribution table (CSV).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contributions: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Grid points per parameter for the pre-pass; 0 disables it.
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default = "default_max_evals")]
    pub max_evaluations: usize,
    /// Simplex diameter in box-normalized coordinates.
    #[serde(default = "default_tol_x")]
    pub tol_x: f64,
    /// Objective spread relative to the objective at the start point.
    #[serde(default = "default_tol_f")]
    pub tol_f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
}

fn default_grid() -> usize {
    11
}

fn default_max_evals() -> usize {
    400
}

fn default_tol_x() -> f64 {
    1e-7
}

fn default_tol_f() -> f64 {
    1e-14
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            grid_points: default_grid(),
            max_evaluations: default_max_evals(),
            tol_x: default_tol_x(),
            tol_f: default_tol_f(),
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub planet: PlanetConfig,
    pub model: DynamicModel,
    #[serde(default)]
    pub truncation: Truncation,
    #[serde(default)]
    pub quadrature: QuadratureOrders,
    pub source: SourceConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl RunConfig {
    /// Parses and validates; relative paths resolve against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &base)
    }

    pub fn to_json(&self) -> Result<String> {
        crate::io::to_json_string(self)
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn wind(&self) -> Option<&WindConfig> {
        match &self.source {
            SourceConfig::Wind(w) => Some(w),
            SourceConfig::Manufactured { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported schema {} (expected {SCHEMA_VERSION})", self.schema)));
        }
        self.planet.model()?;
        let t = &self.truncation;
        if t.m_max < 1 || t.n_max < 2 {
            return Err(Error::Config(format!("truncation needs m_max >= 1 and n_max >= 2, got {} and {}", t.m_max, t.n_max)));
        }
        if let Some(d) = t.degree {
            if d < 2 {
                return Err(Error::Config(format!("truncation.degree must be >= 2, got {d}")));
            }
        }
        let q = &self.quadrature;
        if q.radial < 2 || q.angular < 2 || q.angular % 2 != 0 {
            return Err(Error::Config(format!("quadrature orders must be >= 2 with an even angular order, got {q:?}")));
        }
        if let Some(p) = &self.planet.background_j {
            self.require_file(p)?;
        }
        match &self.source {
            SourceConfig::Wind(w) => {
                self.require_file(&w.profile)?;
                if let Some(eps) = w.smoothing {
                    if !(eps > 0.0 && eps < 1.0) {
                        return Err(Error::Config(format!("smoothing must lie in (0, 1), got {eps}")));
                    }
                }
                let arity = w.decay.family.arity();
                if let Some(p) = &w.decay.params {
                    if p.len() != arity {
                        return Err(Error::Config(format!("decay.params needs {arity} values, got {}", p.len())));
                    }
                }
                if let Some(b) = &w.decay.bounds {
                    if b.dim() != arity {
                        return Err(Error::Config(format!("decay.bounds needs {arity} dimensions, got {}", b.dim())));
                    }
                    ParamBounds::new(b.lower.clone(), b.upper.clone()).map_err(|e| Error::Config(format!("decay.bounds: {e}")))?;
                }
            }
            SourceConfig::Manufactured { m, n } => {
                if *m < 1 || *n < 2 || (*m, *n) == (1, 1) {
                    return Err(Error::Config(format!("manufactured mode needs m >= 1, n >= 2, got ({m}, {n})")));
                }
                if *m > t.m_max || *n > t.n_max {
                    return Err(Error::Config(format!("manufactured mode ({m}, {n}) lies outside the truncation")));
                }
            }
        }
        let f = &self.fit;
        if f.grid_points == 1 || f.max_evaluations == 0 || !(f.tol_x > 0.0) || !(f.tol_f >= 0.0) {
            return Err(Error::Config("fit needs grid_points != 1, max_evaluations > 0, tol_x > 0, tol_f >= 0".into()));
        }
        Ok(())
    }

    fn require_file(&self, p: &Path) -> Result<()> {
        let full = self.resolve(p);
        if full.is_file() {
            Ok(())
        } else {
            Err(Error::Config(format!("referenced file {} does not exist", full.display())))
        }
    }
}
