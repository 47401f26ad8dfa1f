mod common;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use rbgpc::gpcqoi::{
    b_qm, c_qm, coefficient_error_bound_check, pseudospectral_coefficients, qoi, qoi_error,
    qoi_error_bound_check, rb_expansion, truth_expansion, ExpansionSource, GpcExpansion, QoiKind,
    QoiSpec,
};
use rbgpc::polybasis::{eval_multivariate, MultiIndexSet, PolynomialFamily};
use rbgpc::quadrature::{gauss_rule_1d, tensor_gauss, Provenance, QuadratureRule};
use rbgpc::rbm::{greedy_build, BetaMode, GreedyOptions, ReducedModel};
use rbgpc::truthpde::{assemble_benchmark_problem, toy, SpatialGrid};

fn legendre(k: usize) -> Vec<PolynomialFamily> {
    vec![PolynomialFamily::legendre(); k]
}

#[test]
fn reaction_mean_converges_to_the_analytic_integral() {
    let p = toy::reaction(3).unwrap();
    let set = MultiIndexSet::total_degree(1, 5).unwrap();
    let exact = 0.5 * 2f64.ln();
    let mut last = f64::INFINITY;
    for q in [2, 4, 8, 16] {
        let rule = gauss_rule_1d(&PolynomialFamily::legendre(), q).unwrap();
        let exp = truth_expansion(&p, &rule, &set).unwrap();
        let mean = qoi(&exp, QoiKind::Mean);
        let err = mean.iter().map(|v| (v - exact).abs()).fold(0.0, f64::max);
        assert!(err < last);
        last = err;
    }
    assert!(last < 1e-14);
}

#[test]
fn polynomial_fields_are_recovered_exactly() {
    let fams = legendre(2);
    let set = MultiIndexSet::total_degree(2, 4).unwrap();
    let rule = tensor_gauss(&fams, 6).unwrap();
    let g = DVector::from_vec(vec![1.0, -0.5, 2.0, 0.25]);
    let h = DVector::from_vec(vec![0.0, 1.0, 1.0, -3.0]);
    let field = |mu: &[f64]| &g * (1.0 + mu[0] * mu[1]) + &h * mu[1].powi(3);
    let coeffs = pseudospectral_coefficients(|mu| Ok(field(mu)), &rule, &set).unwrap();
    let exp = GpcExpansion::new(coeffs, ExpansionSource::Truth, set.clone(), &rule, 0.5).unwrap();
    let mut rng = common::rng(1);
    for _ in 0..10 {
        let mu = common::random_mu(&mut rng, 2);
        assert!(common::vec_rel_diff(&exp.evaluate(&mu).unwrap(), &field(&mu)) < 1e-13);
    }
    // second moment by quadrature against the coefficient sum
    let second = rule.integrate_vec(|mu| field(mu).map(|v| v * v)).unwrap();
    let norm_sq = qoi(&exp, QoiKind::NormSquared);
    assert!(common::vec_rel_diff(&norm_sq, &second) < 1e-13);
    let var = qoi(&exp, QoiKind::Variance);
    let u0 = exp.coefficient(0);
    assert!(common::vec_rel_diff(&norm_sq, &(var + u0.component_mul(&u0))) < 1e-14);
}

#[test]
fn constant_field_has_only_a_mean() {
    let fams = legendre(3);
    let set = MultiIndexSet::total_degree(3, 3).unwrap();
    let rule = tensor_gauss(&fams, 3).unwrap();
    let g = DVector::from_vec(vec![2.0, -1.0]);
    let coeffs = pseudospectral_coefficients(|_| Ok(g.clone()), &rule, &set).unwrap();
    assert!((coeffs.column(0) - &g).amax() < 1e-14);
    assert!(coeffs.columns(1, set.len() - 1).amax() < 1e-14);
    let exp = GpcExpansion::new(coeffs, ExpansionSource::Truth, set, &rule, 1.0).unwrap();
    assert!(qoi(&exp, QoiKind::Variance).amax() < 1e-27);
}

#[test]
fn single_node_rule_is_a_weighted_outer_product() {
    let fams = legendre(2);
    let set = MultiIndexSet::total_degree(2, 2).unwrap();
    let mu = vec![0.3, -0.6];
    let rule = QuadratureRule::from_parts(2, mu.clone(), vec![1.0], Provenance::Sparse { level: 0 }, fams.clone()).unwrap();
    let u = DVector::from_vec(vec![1.5, -2.0, 0.5]);
    let coeffs = pseudospectral_coefficients(|_| Ok(u.clone()), &rule, &set).unwrap();
    let phi = eval_multivariate(&set, &fams, &mu).unwrap();
    for (m, phi_m) in phi.iter().enumerate() {
        assert!((coeffs.column(m) - &u * *phi_m).amax() < 1e-15);
    }
}

#[test]
fn norm_error_against_zero_is_the_norm_of_the_sum_of_squares() {
    let fams = legendre(1);
    let set = MultiIndexSet::total_degree(1, 3).unwrap();
    let rule = gauss_rule_1d(&fams[0], 5).unwrap();
    let coeffs = DMatrix::from_fn(4, 4, |i, j| (i + 2 * j) as f64 - 3.0);
    let truth = GpcExpansion::new(coeffs.clone(), ExpansionSource::Truth, set.clone(), &rule, 0.1).unwrap();
    let zero = GpcExpansion::new(DMatrix::zeros(4, 4), ExpansionSource::ReducedBasis { n: 0 }, set, &rule, 0.1).unwrap();
    let sum_sq: DVector<f64> = DVector::from_fn(4, |i, _| coeffs.row(i).iter().map(|v| v * v).sum::<f64>());
    assert_relative_eq!(
        qoi_error(&truth, &zero, QoiKind::NormSquared).unwrap(),
        0.1f64.sqrt() * sum_sq.norm(),
        max_relative = 1e-15
    );
    assert_eq!(qoi_error(&truth, &truth, QoiKind::Mean).unwrap(), 0.0);
}

#[test]
fn expansion_round_trips_through_disk() {
    let p = toy::reaction(4).unwrap();
    let set = MultiIndexSet::total_degree(1, 3).unwrap();
    let rule = gauss_rule_1d(&PolynomialFamily::beta22(), 7).unwrap();
    let exp = truth_expansion(&p, &rule, &set).unwrap();
    let dir = tempfile::tempdir().unwrap();
    exp.save(dir.path(), None).unwrap();
    let back = GpcExpansion::load(dir.path()).unwrap();
    assert_eq!(back, exp);
}

#[test]
fn coefficients_do_not_depend_on_the_thread_count() {
    let p = assemble_benchmark_problem(2, 5.0, SpatialGrid::new(8, 8).unwrap()).unwrap();
    let set = MultiIndexSet::total_degree(2, 5).unwrap();
    let rule = tensor_gauss(&legendre(2), 23).unwrap();
    let run = |t: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .unwrap()
            .install(|| truth_expansion(&p, &rule, &set).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn certified_bounds_hold_in_exact_mode() {
    let p = assemble_benchmark_problem(2, 5.0, SpatialGrid::new(15, 15).unwrap()).unwrap();
    let set = MultiIndexSet::total_degree(2, 5).unwrap();
    let rule = tensor_gauss(&legendre(2), 10).unwrap();
    let b = b_qm(&rule, &set).unwrap();
    let opts = GreedyOptions {
        tol: 1e-300,
        n_max: 10,
        c_qm: c_qm(&b, QoiKind::Mean),
        seed: 0,
        beta_mode: BetaMode::ExactEig,
    };
    let out = greedy_build(&p, &rule, &opts).unwrap();
    assert_eq!(out.basis_size(), 10);
    let truth = truth_expansion(&p, &rule, &set).unwrap();
    let (rb, warnings) = rb_expansion(&out.model, &out.space, &rule, &set).unwrap();
    assert_eq!(warnings, 0);
    let report = coefficient_error_bound_check(&truth, &rb, &b, &out.estimates).unwrap();
    assert!(report.all_pass(), "{report:?}");
    let u = p.uniform_bound().unwrap();
    for kind in QoiKind::ALL {
        let entry = qoi_error_bound_check(&truth, &rb, &QoiSpec::new(kind, u), c_qm(&b, kind), &out.estimates).unwrap();
        assert!(entry.pass, "{kind:?}: {entry:?}");
        assert!(entry.error > 0.0);
    }
}

#[test]
fn mean_error_is_below_epsilon_along_the_greedy() {
    let p = assemble_benchmark_problem(2, 5.0, SpatialGrid::new(15, 15).unwrap()).unwrap();
    let set = MultiIndexSet::total_degree(2, 5).unwrap();
    let rule = tensor_gauss(&legendre(2), 10).unwrap();
    let b = b_qm(&rule, &set).unwrap();
    let opts = GreedyOptions {
        tol: 1e-300,
        n_max: 8,
        c_qm: c_qm(&b, QoiKind::Mean),
        seed: 0,
        beta_mode: BetaMode::Analytic,
    };
    let out = greedy_build(&p, &rule, &opts).unwrap();
    let truth = truth_expansion(&p, &rule, &set).unwrap();
    for step in &out.history {
        let space = out.space.truncated(step.n);
        let model = ReducedModel::build(&p, &space).unwrap();
        let (rb, _) = rb_expansion(&model, &space, &rule, &set).unwrap();
        let xi = qoi_error(&truth, &rb, QoiKind::Mean).unwrap();
        assert!(xi <= step.epsilon, "N = {}: {xi:e} > {:e}", step.n, step.epsilon);
    }
}

#[test]
fn rank_one_surrogate_has_vanishing_error_and_bound() {
    let p = toy::rank_one(SpatialGrid::new(10, 10).unwrap()).unwrap();
    let set = MultiIndexSet::total_degree(1, 5).unwrap();
    let rule = gauss_rule_1d(&PolynomialFamily::legendre(), 8).unwrap();
    let b = b_qm(&rule, &set).unwrap();
    let opts = GreedyOptions {
        tol: 1e-300,
        n_max: 1,
        c_qm: 1.0,
        seed: 0,
        beta_mode: BetaMode::Analytic,
    };
    let out = greedy_build(&p, &rule, &opts).unwrap();
    let truth = truth_expansion(&p, &rule, &set).unwrap();
    let (rb, _) = rb_expansion(&out.model, &out.space, &rule, &set).unwrap();
    let scale = truth.field_norm(&truth.coefficient(0));
    let report = coefficient_error_bound_check(&truth, &rb, &b, &out.estimates).unwrap();
    for e in &report.entries {
        assert!(e.error <= 1e-12 * scale && e.bound <= 1e-10 * scale, "{e:?}");
    }
    // the mean is (1 + E[mu]/2) times the f_0 response, the linear term has coefficient 1/(2 sqrt 3)
    let u0 = p.truth_solve(&[0.0]).unwrap().values;
    assert!(common::vec_rel_diff(&truth.coefficient(0), &u0) < 1e-13);
    assert!(common::vec_rel_diff(&truth.coefficient(1), &(&u0 * (0.5 / 3f64.sqrt()))) < 1e-13);
    assert!(truth.coefficient(2).amax() < 1e-14 * u0.amax());
}
