//! Experiment orchestration: offline greedy, online gPC assembly, the direct
//! quadrature baseline, full reproduction runs and the certification suite.
//!
//! Each `cmd_*` function validates its configuration, runs inside a thread pool of
//! `config.threads` workers and writes its outputs below `config.output_dir`.

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

pub use config::{Distribution, ExperimentConfig, QuadratureSpec};
pub use report::{
    fit_log_decay, read_rows, read_rows_from, write_rows, write_rows_to, ConvergenceRow,
    DecayFit, EfficiencyRow, RunReport,
};

use crate::error::{Error, Result};
use crate::gpcqoi::{
    b_qm, c_qm, coefficient_error_bound_check, qoi, qoi_error, qoi_error_bound_check,
    rb_expansion, truth_expansion, BoundEntry, BoundReport, GpcExpansion, QoiKind, QoiSpec,
};
use crate::io::write_json;
use crate::polybasis::MultiIndexSet;
use crate::quadrature::{sparse_rule_with_cap, tensor_rule_with_cap, gauss_rule_1d, QuadratureRule};
use crate::rbm::{
    greedy_build, load_artifact, problem_hash, save_artifact, weighted_estimator, GreedyOptions,
    GreedyOutcome, ReducedBasisSpace, ReducedModel,
};
use crate::truthpde::{assemble_benchmark_problem, AffineProblem, SpatialGrid};

/// Process exit codes of the command-line interface.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NOT_CONVERGED: i32 = 3;
    pub const BUDGET: i32 = 4;
    pub const CERTIFICATION: i32 = 5;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Json(_) | Error::Compatibility(_) => exit::CONFIG,
        Error::Budget(_) => exit::BUDGET,
        _ => exit::FAILURE,
    }
}

pub fn build_problem(config: &ExperimentConfig) -> Result<AffineProblem> {
    let grid = SpatialGrid::new(config.grid[0], config.grid[1])?;
    assemble_benchmark_problem(config.k, config.a, grid)
}

pub fn build_rule(config: &ExperimentConfig) -> Result<QuadratureRule> {
    let families = vec![config.distribution.family(); config.k];
    match config.quadrature {
        QuadratureSpec::Tensor { q } => {
            let rules = families
                .iter()
                .map(|f| gauss_rule_1d(f, q))
                .collect::<Result<Vec<_>>>()?;
            tensor_rule_with_cap(&rules, config.node_cap)
        }
        QuadratureSpec::Sparse { level } => sparse_rule_with_cap(&families, level, config.node_cap),
    }
}

pub fn build_set(config: &ExperimentConfig) -> Result<MultiIndexSet> {
    MultiIndexSet::total_degree(config.k, config.p)
}

fn thread_pool(config: &ExperimentConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(format!("threads: {e}")))
}

/// Offline phase: quadrature, `C_QM`, `U` and the goal-oriented greedy.
#[derive(Debug, Clone)]
pub struct OfflineRun {
    pub rule: QuadratureRule,
    pub set: MultiIndexSet,
    pub b: Vec<f64>,
    pub c_qm: f64,
    pub spec: QoiSpec,
    pub uniform_bound: f64,
    pub options: GreedyOptions,
    pub outcome: GreedyOutcome,
    /// Total offline seconds.
    pub seconds: f64,
    /// Part of `seconds` spent on the rule, `B_{Q,m}`, `C_QM` and `U`.
    pub setup_seconds: f64,
}

pub fn run_offline(config: &ExperimentConfig, problem: &AffineProblem) -> Result<OfflineRun> {
    config.validate()?;
    // warm-up on a copy so the timed run and its counters are clean
    problem.clone().truth_solve(&vec![0.0; config.k])?;
    let start = Instant::now();
    let rule = build_rule(config)?;
    let set = build_set(config)?;
    let b = b_qm(&rule, &set)?;
    let c = c_qm(&b, config.qoi);
    let uniform_bound = problem.uniform_bound()?;
    let spec = QoiSpec::new(config.qoi, uniform_bound);
    let setup_seconds = start.elapsed().as_secs_f64();
    let options = GreedyOptions {
        tol: config.eps_tol,
        n_max: config.n_max,
        c_qm: c,
        seed: config.seed,
        beta_mode: config.beta,
    };
    let outcome = greedy_build(problem, &rule, &options)?;
    let seconds = start.elapsed().as_secs_f64();
    info!(
        "offline: Q = {}, N = {}, eps = {:.3e}, {seconds:.3} s",
        rule.len(),
        outcome.basis_size(),
        outcome.epsilon()
    );
    Ok(OfflineRun {
        rule,
        set,
        b,
        c_qm: c,
        spec,
        uniform_bound,
        options,
        outcome,
        seconds,
        setup_seconds,
    })
}

/// Online phase: surrogate gPC coefficients over the whole rule.
#[derive(Debug, Clone)]
pub struct OnlineRun {
    pub expansion: GpcExpansion,
    pub seconds: f64,
    pub rank_warnings: usize,
}

pub fn run_online(
    model: &ReducedModel,
    space: &ReducedBasisSpace,
    rule: &QuadratureRule,
    set: &MultiIndexSet,
) -> Result<OnlineRun> {
    let start = Instant::now();
    let (expansion, rank_warnings) = rb_expansion(model, space, rule, set)?;
    let seconds = start.elapsed().as_secs_f64();
    if rank_warnings > 0 {
        warn!("{rank_warnings} online solves were rank deficient");
    }
    Ok(OnlineRun {
        expansion,
        seconds,
        rank_warnings,
    })
}

/// Direct baseline: one truth solve per quadrature node.
#[derive(Debug, Clone)]
pub struct DirectRun {
    pub expansion: GpcExpansion,
    pub seconds: f64,
    pub truth_solves: usize,
}

pub fn check_budget(config: &ExperimentConfig, rule: &QuadratureRule, force: bool) -> Result<()> {
    if rule.len() > config.direct_budget && !force {
        return Err(Error::Budget(format!(
            "{} truth solves exceed direct_budget = {}; pass --force to run anyway",
            rule.len(),
            config.direct_budget
        )));
    }
    Ok(())
}

pub fn run_direct(
    problem: &AffineProblem,
    rule: &QuadratureRule,
    set: &MultiIndexSet,
) -> Result<DirectRun> {
    problem.clone().truth_solve(rule.node(0))?;
    let before = problem.truth_solve_count();
    let start = Instant::now();
    let expansion = truth_expansion(problem, rule, set)?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(DirectRun {
        expansion,
        seconds,
        truth_solves: problem.truth_solve_count() - before,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineSummary {
    pub artifact: PathBuf,
    pub quadrature_size: usize,
    pub basis_size: usize,
    pub epsilon: f64,
    pub converged: bool,
    pub saturated: bool,
    pub c_qm: f64,
    pub c_lip: f64,
    pub uniform_bound: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon: f64,
    pub max_estimate: f64,
    pub active: usize,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn epsilon_rows(outcome: &GreedyOutcome) -> Vec<EpsilonRow> {
    outcome
        .history
        .iter()
        .map(|s| EpsilonRow {
            n: s.n,
            epsilon: s.epsilon,
            max_estimate: s.max_estimate,
            active: s.active,
        })
        .collect()
}

fn write_offline(
    config: &ExperimentConfig,
    problem: &AffineProblem,
    run: &OfflineRun,
) -> Result<OfflineSummary> {
    let out = &config.output_dir;
    ensure_dir(out)?;
    let artifact = out.join("artifact");
    save_artifact(
        &artifact,
        problem,
        &run.rule,
        &run.outcome,
        &run.options,
        Some(serde_json::to_value(config)?),
    )?;
    write_rows_to(&out.join("epsilon.csv"), &epsilon_rows(&run.outcome))?;
    run.rule.export_csv(&out.join("quadrature.csv"))?;
    let summary = OfflineSummary {
        artifact,
        quadrature_size: run.rule.len(),
        basis_size: run.outcome.basis_size(),
        epsilon: run.outcome.epsilon(),
        converged: run.outcome.converged,
        saturated: run.outcome.saturated,
        c_qm: run.c_qm,
        c_lip: run.spec.c_lip,
        uniform_bound: run.uniform_bound,
        seconds: run.seconds,
    };
    write_json(&out.join("offline.json"), &summary)?;
    Ok(summary)
}

/// `offline`: greedy build, artifact in `<output_dir>/artifact`.
pub fn cmd_offline(config: &ExperimentConfig) -> Result<OfflineSummary> {
    config.validate()?;
    thread_pool(config)?.install(|| {
        let problem = build_problem(config)?;
        let run = run_offline(config, &problem)?;
        write_offline(config, &problem, &run)
    })
}

fn write_fields(dir: &Path, problem: &AffineProblem, expansion: &GpcExpansion) -> Result<()> {
    let grid = problem.grid().copied();
    expansion.save(&dir.join("expansion"), grid.map(|g| [g.nx(), g.ny()]))?;
    if let Some(grid) = grid {
        for kind in QoiKind::ALL {
            let field = qoi(expansion, kind);
            grid.export_field_csv(&dir.join(format!("{}.csv", kind.name())), field.as_slice())?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineSummary {
    pub basis_size: usize,
    pub quadrature_size: usize,
    pub terms: usize,
    pub seconds: f64,
    pub truth_solves: usize,
    pub factorizations: usize,
    pub rank_warnings: usize,
}

/// `online`: loads an artifact, checks it against the configuration and writes
/// surrogate coefficient fields and quantities of interest to `<output_dir>/online`.
pub fn cmd_online(config: &ExperimentConfig, artifact_dir: &Path) -> Result<OnlineSummary> {
    config.validate()?;
    thread_pool(config)?.install(|| {
        let problem = build_problem(config)?;
        let artifact = load_artifact(artifact_dir)?;
        let expected = problem_hash(&problem);
        if artifact.metadata.problem_hash != expected {
            return Err(Error::Compatibility(format!(
                "artifact built for problem {} but the configuration describes {}",
                artifact.metadata.problem_hash, expected
            )));
        }
        let rule = build_rule(config)?;
        let set = build_set(config)?;
        let run = run_online(&artifact.model, &artifact.space, &rule, &set)?;
        let summary = OnlineSummary {
            basis_size: artifact.space.len(),
            quadrature_size: rule.len(),
            terms: set.len(),
            seconds: run.seconds,
            truth_solves: problem.truth_solve_count(),
            factorizations: problem.factorization_count(),
            rank_warnings: run.rank_warnings,
        };
        let dir = config.output_dir.join("online");
        ensure_dir(&dir)?;
        write_fields(&dir, &problem, &run.expansion)?;
        write_json(&dir.join("online.json"), &summary)?;
        Ok(summary)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectSummary {
    pub quadrature_size: usize,
    pub terms: usize,
    pub seconds: f64,
    pub truth_solves: usize,
}

/// `direct`: brute-force truth expansion into `<output_dir>/direct`.
pub fn cmd_direct(config: &ExperimentConfig, force: bool) -> Result<DirectSummary> {
    config.validate()?;
    let rule = build_rule(config)?;
    check_budget(config, &rule, force)?;
    thread_pool(config)?.install(|| {
        let problem = build_problem(config)?;
        let set = build_set(config)?;
        let run = run_direct(&problem, &rule, &set)?;
        let summary = DirectSummary {
            quadrature_size: rule.len(),
            terms: set.len(),
            seconds: run.seconds,
            truth_solves: run.truth_solves,
        };
        let dir = config.output_dir.join("direct");
        ensure_dir(&dir)?;
        write_fields(&dir, &problem, &run.expansion)?;
        write_json(&dir.join("direct.json"), &summary)?;
        Ok(summary)
    })
}

/// Runs offline, online and (budget permitting) the direct baseline, then
/// compares surrogate and truth quantities for every intermediate basis size.
pub fn reproduce(config: &ExperimentConfig, force: bool) -> Result<RunReport> {
    config.validate()?;
    thread_pool(config)?.install(|| {
        let problem = build_problem(config)?;
        let offline = run_offline(config, &problem)?;
        let solves_before = problem.truth_solve_count();
        let factorizations_before = problem.factorization_count();
        let online = run_online(
            &offline.outcome.model,
            &offline.outcome.space,
            &offline.rule,
            &offline.set,
        )?;
        let online_truth_solves = problem.truth_solve_count() - solves_before;
        let online_factorizations = problem.factorization_count() - factorizations_before;

        let direct = match check_budget(config, &offline.rule, force) {
            Ok(()) => Some(run_direct(&problem, &offline.rule, &offline.set)?),
            Err(e) => {
                warn!("skipping the direct baseline: {e}");
                None
            }
        };

        let space = &offline.outcome.space;
        let mut convergence = Vec::new();
        for step in &offline.outcome.history {
            let (xi_mean, xi_norm) = match &direct {
                Some(d) => {
                    let expansion = if step.n == space.len() {
                        online.expansion.clone()
                    } else {
                        let sub = space.truncated(step.n);
                        let model = ReducedModel::build(&problem, &sub)?;
                        rb_expansion(&model, &sub, &offline.rule, &offline.set)?.0
                    };
                    (
                        Some(qoi_error(&d.expansion, &expansion, QoiKind::Mean)?),
                        Some(qoi_error(&d.expansion, &expansion, QoiKind::NormSquared)?),
                    )
                }
                None => (None, None),
            };
            convergence.push(ConvergenceRow {
                n: step.n,
                epsilon: step.epsilon,
                xi_mean,
                xi_norm,
            });
        }
        let decay_fit = {
            let (ns, xs): (Vec<usize>, Vec<f64>) = convergence
                .iter()
                .filter_map(|r| r.xi_mean.map(|x| (r.n, x)))
                .unzip();
            fit_log_decay(&ns, &xs)
        };
        let qoi_bounds = match &direct {
            Some(d) => vec![qoi_error_bound_check(
                &d.expansion,
                &online.expansion,
                &offline.spec,
                offline.c_qm,
                &offline.outcome.estimates,
            )?],
            None => Vec::new(),
        };
        let t_direct = direct.as_ref().map(|d| d.seconds);
        let report = RunReport {
            config: config.clone(),
            quadrature_size: offline.rule.len(),
            basis_terms: offline.set.len(),
            final_n: space.len(),
            converged: offline.outcome.converged,
            c_qm: offline.c_qm,
            c_lip: offline.spec.c_lip,
            uniform_bound: offline.uniform_bound,
            history: offline.outcome.history.clone(),
            convergence,
            selected: space.parameters().to_vec(),
            t_offline: offline.seconds,
            t_offline_setup: offline.setup_seconds,
            t_online: online.seconds,
            t_direct,
            efficiency_ratio: t_direct.map(|t| t / (offline.seconds + online.seconds)),
            online_truth_solves,
            online_factorizations,
            decay_fit,
            qoi_bounds,
        };

        let out = &config.output_dir;
        ensure_dir(out)?;
        write_offline(config, &problem, &offline)?;
        write_fields(&out.join("online"), &problem, &online.expansion)?;
        if let Some(d) = &direct {
            write_fields(&out.join("direct"), &problem, &d.expansion)?;
        }
        write_rows_to(&out.join("convergence.csv"), &report.convergence)?;
        write_rows_to(&out.join("efficiency.csv"), &[report.efficiency_row()])?;
        write_json(&out.join("report.json"), &report)?;
        Ok(report)
    })
}

/// Estimator check at one node: `||u - u_N|| <= ||R|| / sqrt(beta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorCheck {
    pub node: usize,
    pub error: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoiCheck {
    pub kind: QoiKind,
    pub c_qm: f64,
    pub c_lip: f64,
    #[serde(flatten)]
    pub entry: BoundEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub basis_size: usize,
    pub quadrature_size: usize,
    pub estimator: Vec<EstimatorCheck>,
    pub coefficients: BoundReport,
    pub qoi: Vec<QoiCheck>,
}

impl ValidationReport {
    pub fn violations(&self) -> usize {
        self.estimator.iter().filter(|c| !c.pass).count()
            + self.coefficients.violations()
            + self.qoi.iter().filter(|c| !c.entry.pass).count()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }
}

/// Certification suite for a built surrogate: the error estimator at up to
/// `samples` nodes, every coefficient bound and the bound for every quantity of
/// interest. Estimates are recomputed for the final basis over the whole rule.
pub fn certify(
    problem: &AffineProblem,
    rule: &QuadratureRule,
    set: &MultiIndexSet,
    outcome: &GreedyOutcome,
    samples: usize,
) -> Result<ValidationReport> {
    let model = &outcome.model;
    let space = &outcome.space;
    let q_count = rule.len();
    let solutions = (0..q_count)
        .map(|q| model.solve(rule.node(q)))
        .collect::<Result<Vec<_>>>()?;
    let estimates: Vec<f64> = solutions
        .iter()
        .enumerate()
        .map(|(q, s)| weighted_estimator(s.residual_norm, outcome.betas[q], q_count, rule.weight(q)))
        .collect();

    let stride = (q_count / samples.max(1)).max(1);
    let mut estimator = Vec::new();
    for q in (0..q_count).step_by(stride).take(samples) {
        let truth = problem.truth_solve(rule.node(q))?.values;
        let error = problem.norm(&(truth - space.reconstruct(&solutions[q].coeffs)));
        let bound = solutions[q].residual_norm / outcome.betas[q].sqrt();
        estimator.push(EstimatorCheck {
            node: q,
            error,
            bound,
            pass: error <= bound * (1.0 + 1e-10) + 1e-14,
        });
    }

    let truth = truth_expansion(problem, rule, set)?;
    let (rb, _) = rb_expansion(model, space, rule, set)?;
    let b = b_qm(rule, set)?;
    let coefficients = coefficient_error_bound_check(&truth, &rb, &b, &estimates)?;
    let uniform_bound = problem.uniform_bound()?;
    let qoi = QoiKind::ALL
        .iter()
        .map(|&kind| {
            let spec = QoiSpec::new(kind, uniform_bound);
            let c = c_qm(&b, kind);
            Ok(QoiCheck {
                kind,
                c_qm: c,
                c_lip: spec.c_lip,
                entry: qoi_error_bound_check(&truth, &rb, &spec, c, &estimates)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ValidationReport {
        basis_size: space.len(),
        quadrature_size: q_count,
        estimator,
        coefficients,
        qoi,
    })
}

/// `validate`: builds the surrogate and runs [`certify`]; the report goes to
/// `<output_dir>/validation.json`.
pub fn cmd_validate(config: &ExperimentConfig) -> Result<ValidationReport> {
    config.validate()?;
    thread_pool(config)?.install(|| {
        let problem = build_problem(config)?;
        let run = run_offline(config, &problem)?;
        let report = certify(&problem, &run.rule, &run.set, &run.outcome, 50)?;
        ensure_dir(&config.output_dir)?;
        write_json(&config.output_dir.join("validation.json"), &report)?;
        Ok(report)
    })
}
