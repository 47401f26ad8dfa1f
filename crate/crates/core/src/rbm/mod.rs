//! Reduced basis surrogate: orthonormal snapshot space, minimum-residual online
//! solve, the weighted a posteriori estimator and the goal-oriented greedy.
//!
//! For a training node `mu^q` with weight `w_q` in a rule of `Q` nodes the weighted
//! estimator is
//!
//! ```text
//! Dw(mu^q) = ||R_N(mu^q)|| / sqrt(beta_LB(mu^q)) * sqrt(Q |w_q|)
//! ```
//!
//! and the greedy stops once `eps = C_QM * sqrt(mean_q Dw^2) <= eps_tol`.

mod artifact;
mod greedy;
mod space;

use serde::{Deserialize, Serialize};

pub use artifact::{load_artifact, problem_hash, save_artifact, ArtifactMetadata, LoadedArtifact};
pub use greedy::{greedy_build, GreedyOptions, GreedyOutcome, GreedyStep};
pub use space::{ReducedBasisSpace, ReducedModel, ReducedSolution};

use crate::error::{Error, Result};
use crate::truthpde::AffineProblem;

/// How `beta_LB(mu)`, a lower bound on `sigma_min(L(mu))^2`, is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BetaMode {
    /// Squared certified coercivity floor of the problem; independent of `mu`.
    #[default]
    Analytic,
    /// Squared smallest singular value of the assembled operator. Full-order cost.
    ExactEig,
}

pub fn beta_lb(problem: &AffineProblem, mu: &[f64], mode: BetaMode) -> Result<f64> {
    let beta = match mode {
        BetaMode::Analytic => {
            problem.check_parameter(mu)?;
            let floor = problem.coercivity_floor().ok_or_else(|| {
                Error::Config("analytic beta needs a problem with a coercivity floor".into())
            })?;
            floor * floor
        }
        BetaMode::ExactEig => problem.smallest_singular_value(mu)?.powi(2),
    };
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Numeric(format!(
            "stability constant {beta} at mu = {mu:?} is not positive"
        )));
    }
    Ok(beta)
}

/// `residual / sqrt(beta) * sqrt(Q |w|)`.
pub fn weighted_estimator(residual: f64, beta: f64, rule_size: usize, weight: f64) -> f64 {
    residual / beta.sqrt() * (rule_size as f64 * weight.abs()).sqrt()
}

/// `C_QM * sqrt(mean(values^2))`.
pub fn epsilon_estimate(values: &[f64], c_qm: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mean_sq = values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64;
    c_qm * mean_sq.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::truthpde::toy;
    use approx::assert_relative_eq;

    #[test]
    fn estimator_arithmetic() {
        assert_relative_eq!(weighted_estimator(1e-3, 4.0, 100, 0.01), 5e-4);
        assert_eq!(weighted_estimator(1.0, 4.0, 100, 0.0), 0.0);
        assert_eq!(epsilon_estimate(&[0.0; 5], 3.0), 0.0);
        assert_relative_eq!(epsilon_estimate(&[0.25; 7], 2.0), 0.5);
    }

    #[test]
    fn beta_modes_on_the_diagonal_toy() {
        let p = toy::diagonal().unwrap();
        assert_relative_eq!(beta_lb(&p, &[0.3], BetaMode::ExactEig).unwrap(), 4.0, epsilon = 1e-12);
        assert_relative_eq!(beta_lb(&p, &[0.3], BetaMode::Analytic).unwrap(), 4.0);
    }

    #[test]
    fn beta_mode_serde_names() {
        assert_eq!(serde_json::to_string(&BetaMode::ExactEig).unwrap(), "\"exact-eig\"");
        assert_eq!(
            serde_json::from_str::<BetaMode>("\"analytic\"").unwrap(),
            BetaMode::Analytic
        );
    }
}
