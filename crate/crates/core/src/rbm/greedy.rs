use log::{debug, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::space::{ReducedBasisSpace, ReducedModel};
use super::{beta_lb, epsilon_estimate, weighted_estimator, BetaMode};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use crate::truthpde::AffineProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyOptions {
    /// Target `eps_tol`; `f64::INFINITY` stops after the first sweep.
    #[serde(with = "crate::io::extended_f64")]
    pub tol: f64,
    pub n_max: usize,
    /// `C_QM` of the quantity of interest.
    pub c_qm: f64,
    pub seed: u64,
    pub beta_mode: BetaMode,
}

/// One sweep of the greedy: the estimate certifying a basis of size `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    pub n: usize,
    pub epsilon: f64,
    pub max_estimate: f64,
    /// Training points still swept after trimming.
    pub active: usize,
}

#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    pub space: ReducedBasisSpace,
    pub model: ReducedModel,
    pub history: Vec<GreedyStep>,
    /// Training-node indices of `nu^1..nu^N`.
    pub selected: Vec<usize>,
    /// Last stored (running minimum) `Dw` per training node.
    pub estimates: Vec<f64>,
    pub betas: Vec<f64>,
    pub converged: bool,
    /// A snapshot was numerically dependent on the basis; no further growth possible.
    pub saturated: bool,
    /// Online solves that fell back to the minimum-norm solution.
    pub rank_warnings: usize,
}

impl GreedyOutcome {
    pub fn epsilon(&self) -> f64 {
        self.history.last().map_or(f64::INFINITY, |s| s.epsilon)
    }

    pub fn basis_size(&self) -> usize {
        self.space.len()
    }
}

/// Goal-oriented greedy over the quadrature nodes of `rule`.
///
/// Each iteration sweeps the active nodes, keeps the running minimum of `Dw` per
/// node, trims nodes below `tol / (2 C_QM)`, and computes `eps` over all nodes
/// (trimmed ones with their last value). It stops when `eps <= tol` or the basis
/// has `n_max` vectors, otherwise adds the truth snapshot at the largest estimate
/// (smallest index on ties).
pub fn greedy_build(
    problem: &AffineProblem,
    rule: &QuadratureRule,
    options: &GreedyOptions,
) -> Result<GreedyOutcome> {
    validate(problem, rule, options)?;
    let q_count = rule.len();

    let betas: Vec<f64> = match options.beta_mode {
        BetaMode::Analytic => {
            let beta = beta_lb(problem, rule.node(0), BetaMode::Analytic)?;
            vec![beta; q_count]
        }
        BetaMode::ExactEig => (0..q_count)
            .into_par_iter()
            .map(|q| {
                beta_lb(problem, rule.node(q), BetaMode::ExactEig).map_err(|e| node_failure(q, e))
            })
            .collect::<Result<_>>()?,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut next = rng.random_range(0..q_count);
    let mut space = ReducedBasisSpace::new(problem.dof(), problem.norm_weight());
    let mut selected = Vec::new();
    let mut estimates = vec![f64::INFINITY; q_count];
    let mut active = vec![true; q_count];
    let mut history = Vec::new();
    let mut rank_warnings = 0;
    let trim_below = if options.c_qm > 0.0 {
        options.tol / (2.0 * options.c_qm)
    } else {
        f64::INFINITY
    };

    loop {
        let snapshot = problem
            .truth_solve(rule.node(next))
            .map_err(|e| node_failure(next, e))?
            .values;
        let grew = space.try_extend(&snapshot, rule.node(next))?;
        estimates[next] = 0.0;
        active[next] = false;
        if !grew {
            warn!("snapshot at node {next} is dependent on the basis; stopping at N = {}", space.len());
            let model = ReducedModel::build(problem, &space)?;
            return Ok(GreedyOutcome {
                space,
                model,
                history,
                selected,
                estimates,
                betas,
                converged: false,
                saturated: true,
                rank_warnings,
            });
        }
        selected.push(next);
        let model = ReducedModel::build(problem, &space)?;

        let sweep: Vec<Option<(f64, bool)>> = (0..q_count)
            .into_par_iter()
            .map(|q| {
                if !active[q] {
                    return Ok(None);
                }
                let sol = model.solve(rule.node(q)).map_err(|e| node_failure(q, e))?;
                let est = weighted_estimator(sol.residual_norm, betas[q], q_count, rule.weight(q));
                Ok(Some((est, sol.rank_deficient)))
            })
            .collect::<Result<_>>()?;
        for (q, entry) in sweep.into_iter().enumerate() {
            if let Some((est, deficient)) = entry {
                estimates[q] = estimates[q].min(est);
                rank_warnings += usize::from(deficient);
            }
        }
        let max_estimate = estimates.iter().copied().fold(0.0, f64::max);
        for (flag, est) in active.iter_mut().zip(&estimates) {
            if *flag && *est < trim_below {
                *flag = false;
            }
        }
        let epsilon = epsilon_estimate(&estimates, options.c_qm);
        let n_active = active.iter().filter(|a| **a).count();
        history.push(GreedyStep {
            n: space.len(),
            epsilon,
            max_estimate,
            active: n_active,
        });
        debug!("N = {:3}  eps = {epsilon:.3e}  active = {n_active}", space.len());

        let converged = epsilon <= options.tol;
        let candidate = argmax_active(&estimates, &active);
        if converged || space.len() >= options.n_max || candidate.is_none() {
            if !converged {
                warn!(
                    "greedy stopped at N = {} with eps = {epsilon:.3e} > {:.3e}",
                    space.len(),
                    options.tol
                );
            } else {
                info!("greedy converged at N = {} with eps = {epsilon:.3e}", space.len());
            }
            return Ok(GreedyOutcome {
                space,
                model,
                history,
                selected,
                estimates,
                betas,
                converged,
                saturated: false,
                rank_warnings,
            });
        }
        next = candidate.expect("checked above");
    }
}

/// Largest estimate among active nodes, smallest index on ties.
fn argmax_active(estimates: &[f64], active: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (q, (&est, &on)) in estimates.iter().zip(active).enumerate() {
        if on && best.is_none_or(|b| est > estimates[b]) {
            best = Some(q);
        }
    }
    best
}

fn node_failure(node: usize, source: Error) -> Error {
    Error::NodeFailure {
        node,
        source: Box::new(source),
    }
}

fn validate(problem: &AffineProblem, rule: &QuadratureRule, options: &GreedyOptions) -> Result<()> {
    if rule.is_empty() {
        return Err(Error::Domain("training set is empty".into()));
    }
    if rule.dim() != problem.param_dim() {
        return Err(Error::Shape(format!(
            "{}-dimensional training set for a {}-dimensional problem",
            rule.dim(),
            problem.param_dim()
        )));
    }
    if !(options.tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {}", options.tol)));
    }
    if options.n_max == 0 {
        return Err(Error::Domain("N_max must be at least 1".into()));
    }
    if !(options.c_qm >= 0.0 && options.c_qm.is_finite()) {
        return Err(Error::Domain(format!("C_QM must be finite and >= 0, got {}", options.c_qm)));
    }
    Ok(())
}
