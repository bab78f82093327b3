//! Experiment configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use carnot_core::family::{FamilyClass, FamilySpec, TestFunction};
use carnot_core::functional::UBoundMode;
use carnot_core::grid::GridSpec;
use carnot_core::hopflax::{geometric_times, Exponents, Normalization};
use carnot_core::measure::MeasureOptions;
use carnot_core::metric::DistanceMethod;
use carnot_core::potential::PotentialSpec;
use carnot_core::transport::Solver;
use carnot_core::{CarnotGroup, Grid};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

fn default_distance() -> DistanceMethod {
    DistanceMethod::Shooting
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Family generation without the seed, which comes from the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    /// Members per class.
    pub count: usize,
    pub classes: Vec<FamilyClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<usize>,
}

impl FamilyConfig {
    pub fn spec(&self, seed: u64) -> FamilySpec {
        let mut s = FamilySpec::new(seed, self.count, self.classes.clone());
        if let Some(a) = self.amplitude {
            s.amplitude = a;
        }
        if let Some(c) = self.cap {
            s.cap = c;
        }
        if let Some(w) = self.scale {
            s.scale = w;
        }
        if let Some(t) = self.terms {
            s.terms = t;
        }
        s
    }
}

/// Geometric time grid of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub points: usize,
}

impl TimeGrid {
    pub fn times(&self) -> CliResult<Vec<f64>> {
        Ok(geometric_times(self.t0, self.t1, self.points)?)
    }
}

/// Which functions a check runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Selection {
    /// Family classes to keep; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<FamilyClass>>,
    /// Also run on the configured probes.
    #[serde(default)]
    pub probes: bool,
}

fn default_stability() -> f64 {
    0.1
}

fn all_modes() -> Vec<UBoundMode> {
    vec![
        UBoundMode::DerivativePower,
        UBoundMode::Potential,
        UBoundMode::GradientPlusPotential,
    ]
}

fn default_grad_slack() -> f64 {
    0.05
}

/// One requested check. Constants left out (`k`, `rho`) are derived from the
/// log-Sobolev estimate, which then has to be requested as well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CheckSpec {
    GrowthConditions {
        d_max: f64,
    },
    MetricAssumptions {
        #[serde(default)]
        c0: f64,
        #[serde(default = "default_grad_slack")]
        grad_slack: f64,
    },
    LogSobolev {
        #[serde(default)]
        lower: Option<f64>,
        #[serde(default)]
        upper: Option<f64>,
    },
    /// Poincaré constant, compared against the same check on the doubled family.
    Poincare {
        #[serde(default)]
        reference: Option<f64>,
        #[serde(default = "default_stability")]
        stability: f64,
    },
    /// U-bound fits, compared against the doubled family.
    UBound {
        #[serde(default = "all_modes")]
        modes: Vec<UBoundMode>,
        #[serde(default = "default_stability")]
        stability: f64,
    },
    DualTalagrand {
        #[serde(default)]
        k: Option<f64>,
        tolerance: f64,
        #[serde(default)]
        select: Selection,
    },
    PhiTrace {
        #[serde(default)]
        k: Option<f64>,
        times: TimeGrid,
        tolerance: f64,
        #[serde(default)]
        select: Selection,
        /// Largest accepted ratio of the worst jump after one grid refinement.
        #[serde(default)]
        refinement_ratio: Option<f64>,
    },
    Hypercontractivity {
        #[serde(default)]
        rho: Option<f64>,
        a: f64,
        times: TimeGrid,
        tolerance: f64,
        #[serde(default)]
        select: Selection,
        #[serde(default)]
        refinement_ratio: Option<f64>,
        #[serde(default)]
        log_norm_at_zero: bool,
    },
    /// Densities `h ∝ exp(⟨β, x_h⟩)` on the quadrature atoms of a measure,
    /// built on `grid` (restricted to the box) or on the main grid.
    PrimalTalagrand {
        #[serde(default)]
        k: Option<f64>,
        tilts: Vec<Vec<f64>>,
        #[serde(default)]
        grid: Option<GridSpec>,
        #[serde(default = "default_solver")]
        solver: Solver,
        tolerance: f64,
    },
}

fn default_solver() -> Solver {
    Solver::ExactLp
}

impl CheckSpec {
    /// Report file stem.
    pub fn name(&self) -> &'static str {
        match self {
            Self::GrowthConditions { .. } => "growth-conditions",
            Self::MetricAssumptions { .. } => "metric-assumptions",
            Self::LogSobolev { .. } => "log-sobolev",
            Self::Poincare { .. } => "poincare",
            Self::UBound { .. } => "u-bound",
            Self::DualTalagrand { .. } => "dual-talagrand",
            Self::PhiTrace { .. } => "phi-trace",
            Self::Hypercontractivity { .. } => "hypercontractivity",
            Self::PrimalTalagrand { .. } => "primal-talagrand",
        }
    }

    /// Execution order; the log-Sobolev estimate precedes its consumers.
    pub fn rank(&self) -> usize {
        match self {
            Self::GrowthConditions { .. } => 0,
            Self::MetricAssumptions { .. } => 1,
            Self::LogSobolev { .. } => 2,
            Self::Poincare { .. } => 3,
            Self::UBound { .. } => 4,
            Self::DualTalagrand { .. } => 5,
            Self::PhiTrace { .. } => 6,
            Self::Hypercontractivity { .. } => 7,
            Self::PrimalTalagrand { .. } => 8,
        }
    }

    fn needs_lsi(&self) -> bool {
        match self {
            Self::DualTalagrand { k, .. }
            | Self::PhiTrace { k, .. }
            | Self::PrimalTalagrand { k, .. } => k.is_none(),
            Self::Hypercontractivity { rho, .. } => rho.is_none(),
            _ => false,
        }
    }
}

/// A full experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub group: CarnotGroup,
    pub grid: GridSpec,
    #[serde(default = "default_distance")]
    pub distance: DistanceMethod,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub measure: MeasureOptions,
    pub exponents: Exponents,
    #[serde(default)]
    pub normalization: Normalization,
    pub family: FamilyConfig,
    /// Extra functions, used by checks that select probes.
    #[serde(default)]
    pub probes: Vec<TestFunction>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    /// Master seed; the family draws one substream per class from it.
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_json(&text)
    }

    /// Canonical serialization, the input of the config hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configs serialize")
    }

    pub fn build_grid(&self) -> CliResult<Grid> {
        Ok(Grid::try_from(self.grid.clone())?)
    }

    /// Rejects configurations that would fail halfway through a run.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        let (p, q) = (self.exponents.p, self.exponents.q);
        Exponents::new(p, q).map_err(|e| CliError::Config(e.to_string()))?;
        let grid = self
            .build_grid()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if grid.dim() != self.group.dim() {
            return bad(format!(
                "grid has {} axes but {} has dimension {}",
                grid.dim(),
                self.group,
                self.group.dim()
            ));
        }
        carnot_core::potential::Potential::new(self.potential.clone())
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.family.count == 0 || self.family.classes.is_empty() {
            return bad("the family needs at least one class and one member".into());
        }
        let has_lsi = self
            .checks
            .iter()
            .any(|c| matches!(c, CheckSpec::LogSobolev { .. }));
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.checks {
            if !seen.insert(c.name()) {
                return bad(format!("check {} is listed twice", c.name()));
            }
            if c.needs_lsi() && !has_lsi {
                return bad(format!(
                    "check {} derives its constant from the log-Sobolev estimate; add a log-sobolev check or give the constant",
                    c.name()
                ));
            }
            match c {
                CheckSpec::PhiTrace { times, select, .. }
                | CheckSpec::Hypercontractivity { times, select, .. } => {
                    times
                        .times()
                        .map_err(|e| CliError::Config(format!("{}: {e}", c.name())))?;
                    if select.probes && self.probes.is_empty() {
                        return bad(format!(
                            "check {} selects probes but none are configured",
                            c.name()
                        ));
                    }
                }
                CheckSpec::DualTalagrand { select, .. } => {
                    if select.probes && self.probes.is_empty() {
                        return bad(format!(
                            "check {} selects probes but none are configured",
                            c.name()
                        ));
                    }
                }
                CheckSpec::PrimalTalagrand { tilts, grid, .. } => {
                    let n1 = self.group.horizontal_dim();
                    if tilts.is_empty() || tilts.iter().any(|b| b.len() != n1) {
                        return bad(format!(
                            "primal-talagrand tilts need {n1} horizontal components each"
                        ));
                    }
                    if let Some(g) = grid {
                        Grid::try_from(g.clone()).map_err(|e| CliError::Config(e.to_string()))?;
                    }
                }
                _ => {}
            }
            if matches!(c, CheckSpec::Hypercontractivity { .. }) && q != 2.0 {
                return bad("hypercontractivity needs q = 2".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "group": "abelian:1",
        "grid": {"box": [[-4, 4]], "shape": [81]},
        "potential": {"name": "gaussian-euclid"},
        "exponents": {"p": 2, "q": 2},
        "family": {"count": 2, "classes": ["radial-bump"]},
        "seed": 1
    }"#;

    fn with(extra: &str) -> String {
        let mut v: serde_json::Value = serde_json::from_str(BASE).unwrap();
        let e: serde_json::Value = serde_json::from_str(extra).unwrap();
        for (k, val) in e.as_object().unwrap() {
            v[k] = val.clone();
        }
        v.to_string()
    }

    #[test]
    fn minimal_config_loads_with_defaults() {
        let c = ExperimentConfig::from_json(BASE).unwrap();
        assert_eq!(c.distance, DistanceMethod::Shooting);
        assert_eq!(c.normalization, Normalization::Legendre);
        assert!(c.checks.is_empty());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_exponents() {
        assert!(ExperimentConfig::from_json(&with(r#"{"colour": 1}"#)).is_err());
        assert!(ExperimentConfig::from_json(&with(r#"{"exponents": {"p": 3, "q": 2}}"#)).is_err());
        let bad_check = r#"{"checks": [{"check": "poincare", "bogus": 1}]}"#;
        assert!(ExperimentConfig::from_json(&with(bad_check)).is_err());
    }

    #[test]
    fn derived_constants_need_the_lsi_check() {
        let dual = r#"{"checks": [{"check": "dual-talagrand", "tolerance": 0.01}]}"#;
        let err = ExperimentConfig::from_json(&with(dual)).unwrap_err();
        assert!(err.to_string().contains("log-sobolev"), "{err}");
        let both = r#"{"checks": [{"check": "dual-talagrand", "tolerance": 0.01}, {"check": "log-sobolev"}]}"#;
        assert!(ExperimentConfig::from_json(&with(both)).is_ok());
    }

    #[test]
    fn grid_must_match_the_group() {
        let g = r#"{"group": "heisenberg1"}"#;
        assert!(ExperimentConfig::from_json(&with(g)).is_err());
    }
}
