//! Experiment configuration files (TOML).
//!
//! ```toml
//! schema_version = 1
//! seed = 7
//! desk_scale = true
//! output_dir = "results/ar"
//! couplings = [0.0, 0.3, 0.6]
//!
//! [system]
//! kind = "coupled_ar"
//! n = 100000
//!
//! [method]
//! kind = "slgc"
//!
//! [windowing]
//! window_len = 1000
//! ```
//!
//! Unknown keys are rejected everywhere. Validation happens before any
//! computation and reports the offending line or field.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use csgi_core::slgc::SlgcConfig;
use csgi_core::te::TeConfig;
use csgi_core::SurrogateKind;
use csgi_taci::TaciConfig;

use crate::error::{PipelineError, Result};
use crate::ingest::{IngestOptions, SentinelPolicy};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    /// Selects the small TACI preset when `method.preset` is not given.
    #[serde(default)]
    pub desk_scale: bool,
    pub output_dir: PathBuf,
    /// Coupling strengths to sweep. Must be empty for recorded data.
    #[serde(default)]
    pub couplings: Vec<f64>,
    pub system: SystemConfig,
    pub method: MethodConfig,
    #[serde(default)]
    pub windowing: Windowing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    RosslerLorenz {
        n: usize,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
        #[serde(default = "default_rl_dt")]
        dt: f64,
        #[serde(default)]
        pair: Option<[String; 2]>,
    },
    TwoSpecies {
        n: usize,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
        #[serde(default)]
        pair: Option<[String; 2]>,
    },
    CoupledAr {
        n: usize,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
        #[serde(default = "one")]
        noise_variance: f64,
        #[serde(default)]
        pair: Option<[String; 2]>,
    },
    Henon {
        n: usize,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
        #[serde(default)]
        pair: Option<[String; 2]>,
    },
    /// Hénon maps whose x→y coupling alternates between the swept value and
    /// `off_value` every `segment_len` output samples, starting ON.
    HenonNonstationary {
        n: usize,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
        segment_len: usize,
        #[serde(default)]
        off_value: f64,
        /// Constant y→x coupling.
        #[serde(default)]
        cyx: f64,
        #[serde(default)]
        pair: Option<[String; 2]>,
    },
    Csv {
        path: PathBuf,
        x: String,
        y: String,
        #[serde(default)]
        datetime_column: Option<String>,
        #[serde(default)]
        datetime_format: Option<String>,
        #[serde(default)]
        sentinel_values: Vec<f64>,
        #[serde(default)]
        sentinel_policy: SentinelPolicy,
        /// Largest allowed deviation of a timestamp step from the median
        /// step, in seconds.
        #[serde(default)]
        gap_tolerance: Option<f64>,
    },
}

fn default_burn_in() -> usize {
    1000
}

fn default_rl_dt() -> f64 {
    0.1
}

fn one() -> f64 {
    1.0
}

impl SystemConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            SystemConfig::RosslerLorenz { .. } => "rossler_lorenz",
            SystemConfig::TwoSpecies { .. } => "two_species",
            SystemConfig::CoupledAr { .. } => "coupled_ar",
            SystemConfig::Henon { .. } => "henon",
            SystemConfig::HenonNonstationary { .. } => "henon_nonstationary",
            SystemConfig::Csv { .. } => "csv",
        }
    }

    pub fn is_simulated(&self) -> bool {
        !matches!(self, SystemConfig::Csv { .. })
    }

    /// Labels of the analyzed `(x, y)` components.
    pub fn pair(&self) -> (String, String) {
        let (custom, default) = match self {
            SystemConfig::RosslerLorenz { pair, .. } => (pair, ("x2", "y2")),
            SystemConfig::TwoSpecies { pair, .. } | SystemConfig::CoupledAr { pair, .. } => (pair, ("x", "y")),
            SystemConfig::Henon { pair, .. } | SystemConfig::HenonNonstationary { pair, .. } => (pair, ("x1", "y1")),
            SystemConfig::Csv { x, y, .. } => return (x.clone(), y.clone()),
        };
        match custom {
            Some([x, y]) => (x.clone(), y.clone()),
            None => (default.0.into(), default.1.into()),
        }
    }

    pub fn ingest_options(&self) -> Option<IngestOptions> {
        match self {
            SystemConfig::Csv {
                datetime_column,
                datetime_format,
                sentinel_values,
                sentinel_policy,
                gap_tolerance,
                ..
            } => Some(IngestOptions {
                datetime_column: datetime_column.clone(),
                datetime_format: datetime_format.clone(),
                sentinel_values: sentinel_values.clone(),
                sentinel_policy: *sentinel_policy,
                gap_tolerance: *gap_tolerance,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaciPreset {
    Paper,
    Desk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodConfig {
    Taci {
        #[serde(default)]
        preset: Option<TaciPreset>,
        /// Field overrides applied on top of the preset.
        #[serde(default)]
        params: toml::Table,
        /// Keep the four trained networks of every coupling value.
        #[serde(default)]
        save_models: bool,
    },
    Slgc {
        #[serde(default)]
        order: Option<usize>,
        #[serde(default)]
        surrogate: SurrogateKind,
    },
    Ccm {
        embedding_dim: usize,
        #[serde(default = "one_usize")]
        tau: usize,
        lib_sizes: Vec<usize>,
        #[serde(default = "default_replicates")]
        n_replicates: usize,
    },
    Te {
        #[serde(default = "one_usize")]
        history: usize,
        #[serde(default = "default_bins")]
        bins: usize,
        #[serde(default = "default_shuffles")]
        n_shuffles: usize,
    },
}

fn one_usize() -> usize {
    1
}

fn default_replicates() -> usize {
    10
}

fn default_bins() -> usize {
    8
}

fn default_shuffles() -> usize {
    20
}

impl MethodConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            MethodConfig::Taci { .. } => "taci",
            MethodConfig::Slgc { .. } => "slgc",
            MethodConfig::Ccm { .. } => "ccm",
            MethodConfig::Te { .. } => "te",
        }
    }

    /// Whether results are rolling-window CSGI timecourses.
    pub fn is_windowed(&self) -> bool {
        matches!(self, MethodConfig::Taci { .. } | MethodConfig::Slgc { .. })
    }
}

/// Rolling-window scoring for TACI and SLGC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Windowing {
    pub window_len: usize,
    /// Defaults to `window_len` (disjoint windows).
    #[serde(default)]
    pub stride: Option<usize>,
    #[serde(default = "default_bootstrap")]
    pub n_bootstrap: usize,
}

fn default_bootstrap() -> usize {
    100
}

impl Default for Windowing {
    fn default() -> Self {
        Self { window_len: 1000, stride: None, n_bootstrap: 100 }
    }
}

impl Windowing {
    pub fn stride(&self) -> usize {
        self.stride.unwrap_or(self.window_len)
    }
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

impl ExperimentConfig {
    /// Parse and validate. `origin` names the source in error messages.
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(span) => {
                    let (line, col) = line_col(text, span.start);
                    format!("{origin} line {line}, column {col}")
                }
                None => origin.to_string(),
            };
            PipelineError::config(location, e.message().trim())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let cfg = Self::from_toml_str(&text, &path.display().to_string())?;
        Ok((cfg, text))
    }

    pub fn validate(&self) -> Result<()> {
        fn err(location: impl Into<String>, message: impl Into<String>) -> PipelineError {
            PipelineError::config(location, message)
        }
        if self.schema_version != SCHEMA_VERSION {
            return Err(err(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(err("output_dir", "must not be empty"));
        }
        if self.system.is_simulated() {
            if self.couplings.is_empty() {
                return Err(err("couplings", "at least one coupling value is required for simulated systems"));
            }
        } else if !self.couplings.is_empty() {
            return Err(err("couplings", "must be empty for recorded data"));
        }
        for (i, c) in self.couplings.iter().enumerate() {
            if !c.is_finite() || *c < 0.0 {
                return Err(err(format!("couplings[{i}]"), format!("must be finite and >= 0, got {c}")));
            }
            let unit = matches!(
                self.system,
                SystemConfig::Henon { .. } | SystemConfig::HenonNonstationary { .. } | SystemConfig::CoupledAr { .. }
            );
            if unit && *c > 1.0 {
                return Err(err(format!("couplings[{i}]"), format!("must be <= 1 for this system, got {c}")));
            }
        }
        match &self.system {
            SystemConfig::RosslerLorenz { n, dt, .. } => {
                check_n(*n)?;
                if !(dt.is_finite() && *dt > 0.0) {
                    return Err(err("system.dt", "must be > 0"));
                }
            }
            SystemConfig::TwoSpecies { n, .. } | SystemConfig::Henon { n, .. } => check_n(*n)?,
            SystemConfig::CoupledAr { n, noise_variance, .. } => {
                check_n(*n)?;
                if !(noise_variance.is_finite() && *noise_variance > 0.0) {
                    return Err(err("system.noise_variance", "must be > 0"));
                }
            }
            SystemConfig::HenonNonstationary { n, segment_len, off_value, cyx, .. } => {
                check_n(*n)?;
                if *segment_len == 0 {
                    return Err(err("system.segment_len", "must be >= 1"));
                }
                for (name, v) in [("system.off_value", off_value), ("system.cyx", cyx)] {
                    if !(0.0..=1.0).contains(v) {
                        return Err(err(name, format!("must lie in [0, 1], got {v}")));
                    }
                }
            }
            SystemConfig::Csv { datetime_column, datetime_format, gap_tolerance, .. } => {
                if datetime_format.is_some() && datetime_column.is_none() {
                    return Err(err("system.datetime_format", "requires system.datetime_column"));
                }
                if let Some(t) = gap_tolerance {
                    if !(t.is_finite() && *t >= 0.0) {
                        return Err(err("system.gap_tolerance", "must be >= 0"));
                    }
                }
            }
        }
        let (x, y) = self.system.pair();
        if x == y {
            return Err(err("system.pair", "x and y must be different series"));
        }
        if self.method.is_windowed() {
            let w = &self.windowing;
            if w.window_len < 2 {
                return Err(err("windowing.window_len", "must be >= 2"));
            }
            if w.stride() == 0 {
                return Err(err("windowing.stride", "must be >= 1"));
            }
            if w.n_bootstrap < 2 {
                return Err(err("windowing.n_bootstrap", "must be >= 2"));
            }
        }
        match &self.method {
            MethodConfig::Taci { .. } => {
                self.taci_config()?;
            }
            MethodConfig::Slgc { order, .. } => {
                if *order == Some(0) {
                    return Err(err("method.order", "must be >= 1"));
                }
            }
            MethodConfig::Ccm { embedding_dim, tau, lib_sizes, n_replicates } => {
                if *embedding_dim == 0 || *tau == 0 {
                    return Err(err("method", "embedding_dim and tau must be >= 1"));
                }
                if lib_sizes.is_empty() || lib_sizes.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(err("method.lib_sizes", "must be non-empty and strictly increasing"));
                }
                if *n_replicates == 0 {
                    return Err(err("method.n_replicates", "must be >= 1"));
                }
            }
            MethodConfig::Te { history, bins, .. } => {
                if *history == 0 || *bins < 2 {
                    return Err(err("method", "history must be >= 1 and bins >= 2"));
                }
            }
        }
        Ok(())
    }

    /// Preset plus overrides; `window_len` always follows `windowing`.
    pub fn taci_config(&self) -> Result<TaciConfig> {
        let MethodConfig::Taci { preset, params, .. } = &self.method else {
            return Err(PipelineError::config("method.kind", "not a TACI experiment"));
        };
        let preset = preset.unwrap_or(if self.desk_scale { TaciPreset::Desk } else { TaciPreset::Paper });
        let base = match preset {
            TaciPreset::Paper => TaciConfig::default(),
            TaciPreset::Desk => TaciConfig::desk(),
        };
        let mut table = toml::Table::try_from(&base).map_err(|e| PipelineError::config("method.params", e.to_string()))?;
        for (k, v) in params {
            if k == "window_len" {
                return Err(PipelineError::config("method.params.window_len", "set windowing.window_len instead"));
            }
            table.insert(k.clone(), v.clone());
        }
        let mut cfg: TaciConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| PipelineError::config("method.params", e.message().trim()))?;
        cfg.window_len = self.windowing.window_len;
        cfg.validate()
            .map_err(|e| PipelineError::config("method.params", e.to_string()))?;
        Ok(cfg)
    }

    pub fn slgc_config(&self, seed: u64) -> Option<SlgcConfig> {
        match &self.method {
            MethodConfig::Slgc { order, surrogate } => Some(SlgcConfig {
                order: *order,
                surrogate: *surrogate,
                window_len: self.windowing.window_len,
                stride: self.windowing.stride(),
                n_bootstrap: self.windowing.n_bootstrap,
                seed,
            }),
            _ => None,
        }
    }

    pub fn te_config(&self, seed: u64) -> Option<TeConfig> {
        match &self.method {
            MethodConfig::Te { history, bins, n_shuffles } => Some(TeConfig {
                history: *history,
                bins: *bins,
                n_shuffles: *n_shuffles,
                seed,
            }),
            _ => None,
        }
    }

    /// Sweep points: the coupling values, or a single unlabeled point for
    /// recorded data.
    pub fn points(&self) -> Vec<Option<f64>> {
        if self.system.is_simulated() {
            self.couplings.iter().copied().map(Some).collect()
        } else {
            vec![None]
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(PipelineError::config("system.n", "must be >= 2"));
    }
    Ok(())
}
