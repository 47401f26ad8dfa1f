use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpcqoi::QoiKind;
use crate::polybasis::{binomial, PolynomialFamily, MAX_BASIS_SIZE};
use crate::quadrature::{sparse_node_count, DEFAULT_NODE_CAP};
use crate::rbm::BetaMode;
use crate::truthpde::fluctuation_bound;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    #[default]
    Uniform,
    Beta22,
}

impl Distribution {
    pub fn family(&self) -> PolynomialFamily {
        match self {
            Distribution::Uniform => PolynomialFamily::legendre(),
            Distribution::Beta22 => PolynomialFamily::beta22(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum QuadratureSpec {
    /// `q` Gauss points per dimension.
    Tensor { q: usize },
    /// Slow-growth Gauss-Patterson Smolyak rule.
    Sparse { level: usize },
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::Tensor { q: 40 }
    }
}

/// One experiment. Every field has a default, so `{}` is a valid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Parameter dimension.
    pub k: usize,
    /// Total polynomial degree.
    pub p: usize,
    /// Mean diffusion level.
    pub a: f64,
    /// Interior grid nodes `[nx, ny]`.
    pub grid: [usize; 2],
    pub distribution: Distribution,
    pub quadrature: QuadratureSpec,
    pub qoi: QoiKind,
    #[serde(with = "crate::io::extended_f64")]
    pub eps_tol: f64,
    pub n_max: usize,
    pub seed: u64,
    pub beta: BetaMode,
    pub output_dir: PathBuf,
    /// Worker threads for sweeps and ensemble solves.
    pub threads: usize,
    /// Largest number of truth solves the direct baseline runs without `--force`.
    pub direct_budget: usize,
    pub node_cap: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k: 2,
            p: 5,
            a: 5.0,
            grid: [35, 35],
            distribution: Distribution::Uniform,
            quadrature: QuadratureSpec::default(),
            qoi: QoiKind::Mean,
            eps_tol: 1e-6,
            n_max: 60,
            seed: 0,
            beta: BetaMode::Analytic,
            output_dir: PathBuf::from("rbgpc-out"),
            threads: 1,
            direct_budget: 50_000,
            node_cap: DEFAULT_NODE_CAP,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.k == 0 {
            problems.push("k: must be at least 1".to_string());
        } else if !(self.a > fluctuation_bound(self.k)) {
            problems.push(format!(
                "a: must exceed sum_(j<=k) 1/j^2 = {} for uniform ellipticity",
                fluctuation_bound(self.k)
            ));
        }
        match binomial(self.k + self.p, self.k) {
            Some(m) if m <= MAX_BASIS_SIZE as u128 => {}
            _ => problems.push(format!("p: basis for k = {}, p = {} is too large", self.k, self.p)),
        }
        if self.grid.contains(&0) {
            problems.push("grid: both directions need at least one interior node".into());
        }
        match self.quadrature {
            QuadratureSpec::Tensor { q } => {
                if q == 0 {
                    problems.push("quadrature.q: must be at least 1".into());
                } else {
                    let total = (q as u128).checked_pow(self.k as u32);
                    if total.is_none_or(|t| t > self.node_cap as u128) {
                        problems.push(format!(
                            "quadrature: {q}^{} nodes exceed node_cap = {}",
                            self.k, self.node_cap
                        ));
                    }
                }
            }
            QuadratureSpec::Sparse { level } => match sparse_node_count(self.k.max(1), level) {
                Ok(n) if n <= self.node_cap as u128 => {}
                Ok(n) => problems.push(format!(
                    "quadrature: sparse level {level} has {n} nodes, above node_cap = {}",
                    self.node_cap
                )),
                Err(e) => problems.push(format!("quadrature.level: {e}")),
            },
        }
        if !(self.eps_tol > 0.0) {
            problems.push("eps_tol: must be positive".into());
        }
        if self.n_max == 0 {
            problems.push("n_max: must be at least 1".into());
        }
        if self.threads == 0 {
            problems.push("threads: must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_documented_defaults() {
        let c: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!((c.k, c.p, c.a, c.grid), (2, 5, 5.0, [35, 35]));
        assert_eq!(c.quadrature, QuadratureSpec::Tensor { q: 40 });
        assert_eq!(c.eps_tol, 1e-6);
        assert_eq!((c.n_max, c.seed, c.beta), (60, 0, BetaMode::Analytic));
        c.validate().unwrap();
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig {
            k: 4,
            quadrature: QuadratureSpec::Sparse { level: 15 },
            distribution: Distribution::Beta22,
            qoi: QoiKind::NormSquared,
            eps_tol: f64::INFINITY,
            beta: BetaMode::ExactEig,
            ..Default::default()
        };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), c);
    }

    #[test]
    fn validation_lists_every_problem() {
        let c = ExperimentConfig {
            a: 1.0,
            eps_tol: 0.0,
            n_max: 0,
            grid: [0, 3],
            ..Default::default()
        };
        let Err(Error::Config(msg)) = c.validate() else {
            panic!("expected a config error")
        };
        for field in ["a:", "eps_tol:", "n_max:", "grid:"] {
            assert!(msg.contains(field), "{msg}");
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"kk": 3}"#).is_err());
    }
}
