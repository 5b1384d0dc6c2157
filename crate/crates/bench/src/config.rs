//! Experiment configuration, read from TOML.
//!
//! ```toml
//! trials = 20
//! eps = 1e-5
//! seed = 100
//!
//! [source]
//! kind = "synthetic"
//! n = 256
//! gap = 1e-2
//!
//! [[solvers]]
//! method = "power"
//!
//! [[solvers]]
//! method = "split_merge"
//! rho = "convergence_guaranteed"
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use splitmerge::solvers::{Method, RhoPolicy, SolverConfig, SolverError, StopMode};
use splitmerge::theory::DEFAULT_DENSE_LIMIT;

use crate::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixSource {
    /// A fresh generator matrix per trial, seeded `seed + trial`.
    Synthetic { n: usize, gap: f64 },
    /// One matrix shared by all trials; only the start vector changes.
    MatrixMarket {
        path: PathBuf,
        /// Add the Gershgorin shift so an indefinite matrix becomes PSD.
        #[serde(default)]
        shift: bool,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopModeSetting {
    #[default]
    Oracle,
    Residual,
}

impl std::str::FromStr for StopModeSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(Self::Oracle),
            "residual" => Ok(Self::Residual),
            _ => Err(format!(
                "unknown stop mode {s:?} (expected oracle or residual)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoSetting {
    #[serde(alias = "safeguard")]
    FixedOneWithSafeguard,
    ConvergenceGuaranteed,
    Constant(f64),
}

impl From<RhoSetting> for RhoPolicy {
    fn from(r: RhoSetting) -> Self {
        match r {
            RhoSetting::FixedOneWithSafeguard => RhoPolicy::FixedOneWithSafeguard,
            RhoSetting::ConvergenceGuaranteed => RhoPolicy::ConvergenceGuaranteed,
            RhoSetting::Constant(v) => RhoPolicy::Constant(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub method: String,
    /// Report name; defaults to the method name.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    /// Momentum `β = fraction · λ₂²/4`; needs the full spectrum.
    #[serde(default)]
    pub beta_ideal_fraction: Option<f64>,
    #[serde(default)]
    pub rho: Option<RhoSetting>,
    #[serde(default)]
    pub stage_two_after: Option<usize>,
}

impl SolverSpec {
    pub fn named(method: &str) -> Self {
        Self {
            method: method.to_string(),
            label: None,
            alpha: None,
            beta: None,
            beta_ideal_fraction: None,
            rho: None,
            stage_two_after: None,
        }
    }

    pub fn method(&self) -> Result<Method, BenchError> {
        self.method
            .parse()
            .map_err(|e: SolverError| BenchError::Config(e.to_string()))
    }

    pub fn label(&self) -> String {
        match (&self.label, self.method()) {
            (Some(l), _) => l.clone(),
            (None, Ok(m)) => m.name().to_string(),
            (None, Err(_)) => self.method.clone(),
        }
    }

    /// Momentum runs without an explicit `beta` use the ideal value.
    pub fn ideal_beta_fraction(&self) -> Option<f64> {
        match (self.beta, self.beta_ideal_fraction) {
            (_, Some(f)) => Some(f),
            (None, None) if self.method().ok() == Some(Method::PowerMomentum) => Some(1.0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: MatrixSource,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<SolverSpec>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stop_mode: StopModeSetting,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    /// Compute ground truth. Without it the residual stop rule is used.
    #[serde(default = "default_true")]
    pub oracle: bool,
    /// Largest Matrix Market dimension given to the dense oracle; larger
    /// matrices get a residual-certified reference pair instead.
    #[serde(default = "default_dense_limit")]
    pub dense_limit: usize,
    /// Label of the speed-up baseline; defaults to `power` when present.
    #[serde(default)]
    pub baseline: Option<String>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub traces: bool,
}

fn default_solvers() -> Vec<SolverSpec> {
    vec![SolverSpec::named("power"), SolverSpec::named("split_merge")]
}
fn default_trials() -> usize {
    50
}
fn default_eps() -> f64 {
    1e-5
}
fn default_max_iter() -> usize {
    20_000
}
fn default_residual_tol() -> f64 {
    1e-10
}
fn default_true() -> bool {
    true
}
fn default_dense_limit() -> usize {
    DEFAULT_DENSE_LIMIT
}

impl ExperimentConfig {
    /// Desk-scale defaults on a synthetic source.
    pub fn synthetic(n: usize, gap: f64) -> Self {
        Self::with_source(MatrixSource::Synthetic { n, gap })
    }

    pub fn with_source(source: MatrixSource) -> Self {
        Self {
            source,
            solvers: default_solvers(),
            trials: default_trials(),
            eps: default_eps(),
            max_iter: default_max_iter(),
            seed: 0,
            stop_mode: StopModeSetting::Oracle,
            residual_tol: default_residual_tol(),
            oracle: true,
            dense_limit: default_dense_limit(),
            baseline: None,
            out: None,
            traces: true,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, BenchError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if self.solvers.is_empty() {
            return bad("at least one solver is required".into());
        }
        if let MatrixSource::Synthetic { n, gap } = self.source {
            if n < 2 {
                return bad(format!("n must be at least 2, got {n}"));
            }
            if !(gap > 0.0 && gap < 1.0) {
                return bad(format!("gap must lie in (0, 1), got {gap}"));
            }
        }
        let mut labels = HashSet::new();
        for s in &self.solvers {
            s.method()?;
            if !labels.insert(s.label()) {
                return bad(format!("duplicate solver label {:?}", s.label()));
            }
            if let Some(f) = s.beta_ideal_fraction {
                if !(f >= 0.0 && f.is_finite()) {
                    return bad(format!("beta_ideal_fraction must be nonnegative, got {f}"));
                }
                if s.beta.is_some() {
                    return bad(format!(
                        "{}: give beta or beta_ideal_fraction, not both",
                        s.label()
                    ));
                }
            }
            self.solver_config(s, 0.0)?
                .validate()
                .map_err(|e| BenchError::Config(format!("{}: {e}", s.label())))?;
        }
        if let Some(b) = &self.baseline {
            if !labels.contains(b) {
                return bad(format!("baseline {b:?} is not one of the solvers"));
            }
        }
        Ok(())
    }

    pub fn baseline_label(&self) -> String {
        if let Some(b) = &self.baseline {
            return b.clone();
        }
        let labels: Vec<String> = self.solvers.iter().map(SolverSpec::label).collect();
        if labels.iter().any(|l| l == "power") {
            "power".into()
        } else {
            labels[0].clone()
        }
    }

    /// The stop rule actually used: residual whenever the oracle is off.
    pub fn effective_stop_mode(&self) -> StopMode {
        match (self.oracle, self.stop_mode) {
            (true, StopModeSetting::Oracle) => StopMode::OracleAngle,
            _ => StopMode::Residual,
        }
    }

    /// Solver settings for one spec; `lambda2` feeds the ideal momentum.
    pub fn solver_config(
        &self,
        spec: &SolverSpec,
        lambda2: f64,
    ) -> Result<SolverConfig, BenchError> {
        let mut c = SolverConfig::with_method(spec.method()?);
        c.eps = self.eps;
        c.max_iter = self.max_iter;
        c.stop_mode = self.effective_stop_mode();
        c.residual_tol = self.residual_tol;
        if let Some(a) = spec.alpha {
            c.alpha = a;
        }
        if let Some(b) = spec.beta {
            c.beta = b;
        }
        if let Some(f) = spec.ideal_beta_fraction() {
            c.beta = f * lambda2 * lambda2 / 4.0;
        }
        if let Some(r) = spec.rho {
            c.rho_policy = r.into();
        }
        c.stage_two_after = spec.stage_two_after;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let c = ExperimentConfig::from_toml_str(
            r#"
trials = 20
eps = 1e-5
seed = 100

[source]
kind = "synthetic"
n = 256
gap = 1e-2

[[solvers]]
method = "power"

[[solvers]]
method = "split_merge"
rho = "convergence_guaranteed"
"#,
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.trials, 20);
        assert_eq!(c.source, MatrixSource::Synthetic { n: 256, gap: 1e-2 });
        assert_eq!(c.solvers[1].rho, Some(RhoSetting::ConvergenceGuaranteed));
        assert_eq!(c.baseline_label(), "power");
        assert_eq!(c.max_iter, 20_000);
    }

    #[test]
    fn constant_rho_and_market_source() {
        let c = ExperimentConfig::from_toml_str(
            r#"
oracle = false
[source]
kind = "matrix_market"
path = "a.mtx"
[[solvers]]
method = "split_merge"
rho = { constant = 2.5 }
"#,
        )
        .unwrap();
        assert_eq!(c.solvers[0].rho, Some(RhoSetting::Constant(2.5)));
        assert_eq!(c.effective_stop_mode(), StopMode::Residual);
        assert_eq!(c.baseline_label(), "split_merge");
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = ExperimentConfig::synthetic(64, 0.1);
        c.trials = 0;
        assert!(c.validate().is_err());

        let mut c = ExperimentConfig::synthetic(64, 0.1);
        c.solvers.clear();
        assert!(c.validate().is_err());

        let mut c = ExperimentConfig::synthetic(64, 0.1);
        c.solvers = vec![SolverSpec::named("power"), SolverSpec::named("power")];
        assert!(c.validate().is_err());

        let mut c = ExperimentConfig::synthetic(64, 0.1);
        c.solvers = vec![SolverSpec::named("lanczos")];
        assert!(c.validate().is_err());

        let mut c = ExperimentConfig::synthetic(64, 1.5);
        assert!(c.validate().is_err());
        c.source = MatrixSource::Synthetic { n: 64, gap: 0.1 };
        c.baseline = Some("nope".into());
        assert!(c.validate().is_err());

        assert!(ExperimentConfig::from_toml_str(
            "[source]\nkind = \"synthetic\"\nn = 4\ngap = 0.1\nbogus = 1"
        )
        .is_err());
    }

    #[test]
    fn momentum_defaults_to_ideal_beta() {
        let c = ExperimentConfig::synthetic(8, 0.1);
        let spec = SolverSpec::named("power_momentum");
        assert_eq!(c.solver_config(&spec, 0.9).unwrap().beta, 0.81 / 4.0);
        let spec = SolverSpec {
            beta: Some(0.1),
            ..SolverSpec::named("power_momentum")
        };
        assert_eq!(c.solver_config(&spec, 0.9).unwrap().beta, 0.1);
        let spec = SolverSpec {
            beta_ideal_fraction: Some(0.5),
            ..SolverSpec::named("power_momentum")
        };
        assert_eq!(c.solver_config(&spec, 0.9).unwrap().beta, 0.5 * 0.81 / 4.0);
    }
}
