//! Run configuration: a TOML file constraining the model, graph source,
//! and the numerical knobs of every pipeline stage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{MutualisticParams, MutualisticUncertainty};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config at `{key}`: {msg}")]
    Invalid { key: &'static str, msg: String },
}

fn invalid(key: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, msg: msg.into() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub model: ModelConfig,
    pub graph: GraphConfig,
    #[serde(default)]
    pub pce: PceConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub bifurcation: BifurcationConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    /// Parameter means; defaults to the case-study values.
    #[serde(default = "MutualisticParams::case_study")]
    pub means: MutualisticParams,
    /// Relative half-widths; defaults to 10% on B, C, K, D and the edge
    /// weight.
    #[serde(default = "MutualisticUncertainty::uniform_ten_percent")]
    pub uncertainty: MutualisticUncertainty,
    /// Support of the uniform noise variable.
    #[serde(default = "default_support")]
    pub support: (f64, f64),
}

fn default_support() -> (f64, f64) {
    (-1.0, 1.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n: usize,
    pub p: f64,
    pub weight: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PceConfig {
    /// Fixed truncation order; adaptive selection when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// Regression sample count; defaults to max(10 (N+1), 100).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub precision: f64,
    pub max_order: usize,
    pub draws: usize,
    pub bins: usize,
}

impl Default for PceConfig {
    fn default() -> Self {
        Self {
            order: None,
            samples: None,
            precision: 5e-4,
            max_order: 8,
            draws: 100_000,
            bins: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub points: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { points: 20 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BifurcationConfig {
    /// Upper bound of the critical-point search; derived from the
    /// carrying capacity when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_hi: Option<f64>,
    pub grid_points: usize,
}

impl Default for BifurcationConfig {
    fn default() -> Self {
        Self { search_hi: None, grid_points: 512 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub trials: usize,
    pub t_max: f64,
    pub tol: f64,
    /// Uniform initial conditions probed for multistability; defaults to
    /// {0.01, 1.2 K}.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<f64>>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { trials: 500, t_max: 500.0, tol: 1e-9, probes: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// `edge_weight` or one of the parameter mean names `b,c,k,d`.
    pub key: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.model.name != "mutualistic" {
            return Err(invalid(
                "model.name",
                format!("unknown model `{}`; built-ins: mutualistic", self.model.name),
            ));
        }
        let m = &self.model.means;
        if !(m.b > 0.0 && m.c > 0.0 && m.k > 0.0 && m.d > 0.0 && m.e > 0.0 && m.h > 0.0) {
            return Err(invalid("model.means", "all parameter means must be positive"));
        }
        if m.c >= m.k {
            return Err(invalid("model.means", "require C < K"));
        }
        let u = &self.model.uncertainty;
        if u.b < 0.0 || u.c < 0.0 || u.k < 0.0 || u.d < 0.0 || u.edge < 0.0 {
            return Err(invalid("model.uncertainty", "half-widths must be nonnegative"));
        }
        if self.model.support.0 >= self.model.support.1 {
            return Err(invalid("model.support", "require a < b"));
        }
        match (&self.graph.file, &self.graph.generator) {
            (Some(_), Some(_)) => {
                return Err(invalid("graph", "give exactly one of `file` / `generator`, not both"))
            }
            (None, None) => {
                return Err(invalid("graph", "give exactly one of `file` / `generator`"))
            }
            _ => {}
        }
        if let Some(gen) = &self.graph.generator {
            if gen.n < 2 {
                return Err(invalid("graph.generator.n", "need at least 2 nodes"));
            }
            if !(gen.p > 0.0 && gen.p <= 1.0) {
                return Err(invalid("graph.generator.p", "edge probability must be in (0, 1]"));
            }
            if !(gen.weight > 0.0) {
                return Err(invalid("graph.generator.weight", "weight must be positive"));
            }
        }
        if let Some(order) = self.pce.order {
            if let Some(samples) = self.pce.samples {
                if samples <= order {
                    return Err(invalid("pce.samples", "regression needs samples > order"));
                }
            }
        }
        if self.pce.max_order < 2 {
            return Err(invalid("pce.max_order", "must be at least 2"));
        }
        if !(self.pce.precision > 0.0) {
            return Err(invalid("pce.precision", "must be positive"));
        }
        if self.pce.draws < 10_000 {
            return Err(invalid("pce.draws", "need at least 10^4 draws"));
        }
        if self.quadrature.points < 1 {
            return Err(invalid("quadrature.points", "must be positive"));
        }
        if self.bifurcation.grid_points < 16 {
            return Err(invalid("bifurcation.grid_points", "need at least 16 scan points"));
        }
        if let Some(hi) = self.bifurcation.search_hi {
            if !(hi > 0.0) {
                return Err(invalid("bifurcation.search_hi", "must be positive"));
            }
        }
        if self.oracle.trials < 30 {
            return Err(invalid("oracle.trials", "need at least 30 trials"));
        }
        if let Some(probes) = &self.oracle.probes {
            if probes.len() < 2 {
                return Err(invalid("oracle.probes", "need at least two probes"));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.steps < 2 {
                return Err(invalid("sweep.steps", "need at least 2 steps"));
            }
            match sweep.key.as_str() {
                "edge_weight" | "b" | "c" | "k" | "d" => {}
                other => {
                    return Err(invalid(
                        "sweep.key",
                        format!("unknown key `{other}`; use edge_weight or b/c/k/d"),
                    ))
                }
            }
        }
        Ok(())
    }

    /// Oracle probe set, defaulting to one low state and one above the
    /// carrying capacity.
    pub fn oracle_probes(&self) -> Vec<f64> {
        self.oracle
            .probes
            .clone()
            .unwrap_or_else(|| vec![0.01, 1.2 * self.model.means.k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [model]
        name = "mutualistic"

        [graph.generator]
        n = 100
        p = 0.1
        weight = 1.0
        seed = 7
    "#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.quadrature.points, 20);
        assert_eq!(cfg.pce.max_order, 8);
        assert_eq!(cfg.model.means, MutualisticParams::case_study());
        assert_eq!(cfg.oracle_probes(), vec![0.01, 6.0]);
    }

    #[test]
    fn rejects_unknown_model() {
        let text = MINIMAL.replace("mutualistic", "predator_prey");
        let err = RunConfig::from_toml(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { key: "model.name", .. }));
    }

    #[test]
    fn requires_exactly_one_graph_source() {
        let both = format!("{MINIMAL}\n[graph]\nfile = \"g.txt\"\n");
        assert!(RunConfig::from_toml(&both).is_err());

        let neither = r#"
            [model]
            name = "mutualistic"
            [graph]
        "#;
        let err = RunConfig::from_toml(neither).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { key: "graph", .. }));
    }

    #[test]
    fn rejects_bad_sweep_key() {
        let text = format!("{MINIMAL}\n[sweep]\nkey = \"zz\"\nfrom = 0.1\nto = 1.0\nsteps = 5\n");
        let err = RunConfig::from_toml(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { key: "sweep.key", .. }));
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        let echoed = toml::to_string(&cfg).unwrap();
        let again = RunConfig::from_toml(&echoed).unwrap();
        assert_eq!(again.seed, cfg.seed);
        assert_eq!(again.model.means, cfg.model.means);
        assert_eq!(again.graph.generator.as_ref().unwrap().n, 100);
    }
}
