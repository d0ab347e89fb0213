use std::fmt;
use std::path::{Path, PathBuf};

use modlab_core::{Error, GridSpec, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Theorem1,
    Theorem3,
    Prop2,
    Freefield,
    Fock,
    Wedgenet,
    All,
}

impl Suite {
    pub const ALL: [Suite; 6] = [Suite::Theorem1, Suite::Theorem3, Suite::Prop2, Suite::Freefield, Suite::Fock, Suite::Wedgenet];

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown suite {s:?}")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Theorem1 => "theorem1",
            Suite::Theorem3 => "theorem3",
            Suite::Prop2 => "prop2",
            Suite::Freefield => "freefield",
            Suite::Fock => "fock",
            Suite::Wedgenet => "wedgenet",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

/// Grid for the grid-scalable relation checks. `kappa_max` is the window of conditions
/// (a), (a_j) and (b); the half-sided conditions keep their own shorter window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_points: usize,
    #[serde(default)]
    pub kappa_max: Option<f64>,
}

pub const DEFAULT_RELATION_WINDOW: f64 = 32.0;

impl GridConfig {
    pub fn window(&self) -> f64 {
        self.kappa_max.unwrap_or(DEFAULT_RELATION_WINDOW)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub ccr: f64,
    pub condition: f64,
    pub margin: f64,
    pub boundary: f64,
    pub tomita: f64,
    /// Largest allowed ratio of the refined to the coarse oracle residual.
    pub tomita_refinement: f64,
    pub classification: f64,
    pub symbol_min: f64,
    pub covariance: f64,
    pub membership: f64,
    pub vacuum: f64,
    pub isotony: f64,
    pub spectral: f64,
    /// Unresolved spectral weight allowed before a group action is refused.
    pub alias_weight: f64,
    /// Relative non-monotonicity tolerated by scan summaries.
    pub scan_noise: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ccr: 1e-8,
            condition: 1e-6,
            margin: 0.05,
            boundary: 1e-6,
            tomita: 1e-3,
            tomita_refinement: 0.5,
            classification: 1e-6,
            symbol_min: 1e-6,
            covariance: 1e-8,
            membership: 1e-6,
            vacuum: 1e-10,
            isotony: 1e-3,
            spectral: 1e-12,
            alias_weight: 1e-6,
            scan_noise: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn validate(&self) -> Result<()> {
        GridSpec::new(self.grid.n_points, self.grid.window()).map_err(|e| Error::Config(format!("grid: {e}")))?;
        let t = &self.tolerances;
        let named = [
            ("ccr", t.ccr),
            ("condition", t.condition),
            ("margin", t.margin),
            ("boundary", t.boundary),
            ("tomita", t.tomita),
            ("tomita_refinement", t.tomita_refinement),
            ("classification", t.classification),
            ("symbol_min", t.symbol_min),
            ("covariance", t.covariance),
            ("membership", t.membership),
            ("vacuum", t.vacuum),
            ("isotony", t.isotony),
            ("spectral", t.spectral),
            ("alias_weight", t.alias_weight),
            ("scan_noise", t.scan_noise),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("tolerances.{name} must be a non-negative number, got {v}")));
            }
        }
        if t.margin <= t.condition {
            return Err(Error::Config(format!("tolerances.margin {} must exceed tolerances.condition {}", t.margin, t.condition)));
        }
        Ok(())
    }
}
