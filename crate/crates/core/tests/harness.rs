use std::path::Path;

use rbgpc::harness::{
    self, exit, read_rows_from, ConvergenceRow, EpsilonRow, ExperimentConfig, QuadratureSpec,
};
use rbgpc::rbm::{load_artifact, BetaMode};
use rbgpc::Error;

fn small(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        grid: [12, 12],
        quadrature: QuadratureSpec::Tensor { q: 8 },
        eps_tol: 1e-5,
        output_dir: out.to_path_buf(),
        ..Default::default()
    }
}

#[test]
fn offline_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = small(&dir.path().join("a"));
    let b = ExperimentConfig {
        output_dir: dir.path().join("b"),
        threads: 3,
        ..a.clone()
    };
    harness::cmd_offline(&a).unwrap();
    harness::cmd_offline(&b).unwrap();
    let ma = load_artifact(&a.output_dir.join("artifact")).unwrap().metadata;
    let mb = load_artifact(&b.output_dir.join("artifact")).unwrap().metadata;
    let strip = |mut m: rbgpc::rbm::ArtifactMetadata| {
        m.config = None;
        m.without_timestamp()
    };
    assert_eq!(strip(ma), strip(mb));
    let ea = std::fs::read(a.output_dir.join("epsilon.csv")).unwrap();
    let eb = std::fs::read(b.output_dir.join("epsilon.csv")).unwrap();
    assert_eq!(ea, eb);
    let rows: Vec<EpsilonRow> = read_rows_from(&a.output_dir.join("epsilon.csv")).unwrap();
    assert!(rows.windows(2).all(|w| w[1].epsilon <= w[0].epsilon));
}

#[test]
fn online_phase_performs_no_truth_work() {
    let dir = tempfile::tempdir().unwrap();
    let config = small(dir.path());
    let off = harness::cmd_offline(&config).unwrap();
    let on = harness::cmd_online(&config, &off.artifact).unwrap();
    assert_eq!((on.truth_solves, on.factorizations), (0, 0));
    assert_eq!(on.basis_size, off.basis_size);
    assert_eq!(on.terms, 21);
    for name in ["mean.csv", "variance.csv", "norm-squared.csv", "online.json"] {
        assert!(dir.path().join("online").join(name).exists(), "{name}");
    }
}

#[test]
fn artifact_for_another_problem_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let config = small(dir.path());
    let off = harness::cmd_offline(&config).unwrap();
    let other = ExperimentConfig { a: 6.0, ..config };
    let err = harness::cmd_online(&other, &off.artifact).unwrap_err();
    assert!(matches!(err, Error::Compatibility(_)), "{err}");
    assert_eq!(harness::exit_code(&err), exit::CONFIG);
}

#[test]
fn single_node_direct_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        quadrature: QuadratureSpec::Tensor { q: 1 },
        p: 2,
        ..small(dir.path())
    };
    let s = harness::cmd_direct(&config, false).unwrap();
    assert_eq!((s.quadrature_size, s.truth_solves, s.terms), (1, 1, 6));
}

#[test]
fn direct_budget_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        direct_budget: 10,
        quadrature: QuadratureSpec::Tensor { q: 4 },
        ..small(dir.path())
    };
    let err = harness::cmd_direct(&config, false).unwrap_err();
    assert!(matches!(err, Error::Budget(_)));
    assert_eq!(harness::exit_code(&err), exit::BUDGET);
    let s = harness::cmd_direct(&config, true).unwrap();
    assert_eq!(s.truth_solves, 16);
    let r = harness::reproduce(&config, false).unwrap();
    assert!(r.t_direct.is_none() && r.efficiency_ratio.is_none());
}

#[test]
fn reproduction_tables_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let config = small(dir.path());
    let r = harness::reproduce(&config, false).unwrap();
    assert_eq!(r.online_truth_solves, 0);
    let rows: Vec<ConvergenceRow> = read_rows_from(&dir.path().join("convergence.csv")).unwrap();
    assert_eq!(rows, r.convergence);
    for row in &rows {
        let xi = row.xi_mean.unwrap();
        assert!(xi <= row.epsilon, "N = {}: {xi:e} > {:e}", row.n, row.epsilon);
    }
    let eff: Vec<rbgpc::harness::EfficiencyRow> =
        read_rows_from(&dir.path().join("efficiency.csv")).unwrap();
    assert_eq!(eff, vec![r.efficiency_row()]);
    assert!(r.qoi_bounds.iter().all(|b| b.pass));
}

#[test]
fn default_experiment_converges_with_a_moderate_basis() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        output_dir: dir.path().to_path_buf(),
        ..Default::default()
    };
    let s = harness::cmd_offline(&config).unwrap();
    assert!(s.converged && s.basis_size <= 40, "{s:?}");
    assert!(s.epsilon <= 1e-6);
}

#[test]
fn huge_tolerance_gives_a_single_vector() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        eps_tol: 1e10,
        ..small(dir.path())
    };
    let s = harness::cmd_offline(&config).unwrap();
    assert_eq!(s.basis_size, 1);
    assert!(s.converged);
}

#[test]
fn validation_passes_in_exact_mode() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        beta: BetaMode::ExactEig,
        eps_tol: 1e-300,
        n_max: 6,
        ..small(dir.path())
    };
    let r = harness::cmd_validate(&config).unwrap();
    assert!(r.passed(), "{r:?}");
    assert_eq!(r.basis_size, 6);
    assert!(dir.path().join("validation.json").exists());
}

#[test]
fn config_files_round_trip_and_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let config = ExperimentConfig {
        eps_tol: f64::INFINITY,
        ..small(dir.path())
    };
    config.save(&path).unwrap();
    assert_eq!(ExperimentConfig::load(&path).unwrap(), config);
    std::fs::write(&path, r#"{"k": 2, "a": 1.0}"#).unwrap();
    let err = ExperimentConfig::load(&path).unwrap_err();
    assert_eq!(harness::exit_code(&err), exit::CONFIG);
    std::fs::write(&path, r#"{"bogus": 1}"#).unwrap();
    assert!(matches!(ExperimentConfig::load(&path), Err(Error::Config(_))));
}
