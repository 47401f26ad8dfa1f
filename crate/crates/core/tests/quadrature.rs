mod common;

use approx::assert_relative_eq;
use rbgpc::gpcqoi::b_qm;
use rbgpc::polybasis::{eval_multivariate, MultiIndexSet, PolynomialFamily};
use rbgpc::quadrature::{
    gauss_rule_1d, sparse_node_count, sparse_rule, tensor_gauss, tensor_rule, Provenance,
    QuadratureRule,
};

#[test]
fn gauss_rules_integrate_moments_exactly() {
    for (fam, moment) in [
        (PolynomialFamily::legendre(), common::uniform_moment as fn(usize) -> f64),
        (PolynomialFamily::beta22(), common::beta22_moment),
    ] {
        for q in 1..=20 {
            let rule = gauss_rule_1d(&fam, q).unwrap();
            for d in 0..2 * q {
                let got = rule.integrate(|mu| mu[0].powi(d as i32));
                let exact = moment(d);
                assert!(
                    (got - exact).abs() <= 1e-13 * exact.abs().max(1e-2),
                    "{:?} q = {q}, d = {d}: {got} vs {exact}",
                    fam.kind()
                );
            }
        }
    }
}

#[test]
fn small_rules_have_known_nodes() {
    let fam = PolynomialFamily::legendre();
    let r = gauss_rule_1d(&fam, 2).unwrap();
    assert_relative_eq!(r.node(0)[0], -1.0 / 3f64.sqrt(), epsilon = 1e-15);
    assert_relative_eq!(r.node(1)[0], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
    assert_relative_eq!(r.weight(0), 0.5, epsilon = 1e-15);
    let r = gauss_rule_1d(&fam, 1).unwrap();
    assert_eq!((r.node(0)[0], r.weight(0)), (0.0, 1.0));
    let t = tensor_gauss(&[fam; 2], 2).unwrap();
    assert!(t.weights().iter().all(|w| (w - 0.25).abs() < 1e-15));
    let one = tensor_rule(std::slice::from_ref(&r)).unwrap();
    assert_eq!(one.weights(), r.weights());
}

#[test]
fn tensor_rule_reproduces_orthonormality() {
    let fams = [PolynomialFamily::legendre(), PolynomialFamily::beta22()];
    let rule = tensor_gauss(&fams, 6).unwrap();
    let set = MultiIndexSet::total_degree(2, 5).unwrap();
    let mut gram = vec![0.0; set.len() * set.len()];
    for (mu, w) in rule.nodes().zip(rule.weights()) {
        let phi = eval_multivariate(&set, &fams, mu).unwrap();
        for i in 0..set.len() {
            for j in 0..set.len() {
                gram[i * set.len() + j] += w * phi[i] * phi[j];
            }
        }
    }
    for i in 0..set.len() {
        for j in 0..set.len() {
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((gram[i * set.len() + j] - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn sparse_node_counts_match_the_tabulated_sizes() {
    assert_eq!(sparse_node_count(4, 15).unwrap(), 22_401);
    assert_eq!(sparse_node_count(6, 14).unwrap(), 367_041);
    let rule = sparse_rule(&[PolynomialFamily::legendre(); 4], 15).unwrap();
    assert_eq!(rule.len(), 22_401);
    assert_relative_eq!(rule.weight_sum(), 1.0, epsilon = 1e-12);
    assert_eq!(rule.provenance(), &Provenance::Sparse { level: 15 });
}

#[test]
fn sparse_rule_constants_are_close_to_one() {
    // 50-point tensor Gauss is exact for these polynomials and gives the reference
    for fam in [PolynomialFamily::legendre(), PolynomialFamily::beta22()] {
        let fams = [fam; 2];
        let set = MultiIndexSet::total_degree(2, 5).unwrap();
        let oracle = tensor_gauss(&fams, 50).unwrap();
        for b in b_qm(&oracle, &set).unwrap() {
            assert_relative_eq!(b, 1.0, epsilon = 1e-12);
        }
        let sparse = sparse_rule(&fams, 9).unwrap();
        for (m, b) in b_qm(&sparse, &set).unwrap().into_iter().enumerate() {
            assert!((b - 1.0).abs() < 0.25, "{:?} m = {m}: B = {b}", fam.kind());
        }
    }
    // negative weights push sum |w| above one; exactness for Phi_m^2 keeps B_m >= 1
    let set = MultiIndexSet::total_degree(4, 5).unwrap();
    let sparse = sparse_rule(&[PolynomialFamily::legendre(); 4], 15).unwrap();
    let b = b_qm(&sparse, &set).unwrap();
    let abs_sum: f64 = sparse.weights().iter().map(|w| w.abs()).sum();
    assert_relative_eq!(b[0] * b[0], abs_sum, max_relative = 1e-12);
    for (m, bm) in b.iter().enumerate() {
        assert!(*bm >= 1.0 - 1e-12 && bm.is_finite(), "m = {m}: B = {bm}");
    }
}

#[test]
fn sparse_rule_agrees_with_tensor_oracle_on_low_degree_polynomials() {
    let set = MultiIndexSet::total_degree(3, 5).unwrap();
    for fam in [PolynomialFamily::legendre(), PolynomialFamily::beta22()] {
        let fams = [fam; 3];
        let oracle = tensor_gauss(&fams, 6).unwrap();
        let sparse = sparse_rule(&fams, 8).unwrap();
        for m in 0..set.len() {
            let f = |mu: &[f64]| {
                let phi = eval_multivariate(&set, &fams, mu).unwrap();
                phi[m] * (1.0 + mu[0])
            };
            let a = oracle.integrate(f);
            let b = sparse.integrate(f);
            assert!((a - b).abs() < 1e-12, "{:?} m = {m}: {a} vs {b}", fam.kind());
        }
    }
}

#[test]
fn integration_does_not_depend_on_node_order() {
    let fams = [PolynomialFamily::legendre(); 2];
    let rule = tensor_gauss(&fams, 7).unwrap();
    let mut order: Vec<usize> = (0..rule.len()).rev().collect();
    order.rotate_left(11);
    let nodes: Vec<f64> = order.iter().flat_map(|&q| rule.node(q).to_vec()).collect();
    let weights: Vec<f64> = order.iter().map(|&q| rule.weight(q)).collect();
    let shuffled =
        QuadratureRule::from_parts(2, nodes, weights, rule.provenance().clone(), fams.to_vec())
            .unwrap();
    let f = |mu: &[f64]| (mu[0] * 1.3).exp() * mu[1].powi(4);
    assert_relative_eq!(rule.integrate(f), shuffled.integrate(f), epsilon = 1e-14);
    assert_relative_eq!(rule.integrate(|mu| mu[0]), 0.0, epsilon = 1e-14);
}

#[test]
fn csv_export_lists_every_node() {
    let rule = tensor_gauss(&[PolynomialFamily::beta22(); 2], 3).unwrap();
    let mut buf = Vec::new();
    rule.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("q,mu_1,mu_2,w"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 9);
    for (q, row) in rows.iter().enumerate() {
        assert_eq!(row[0] as usize, q);
        assert_eq!(&row[1..3], rule.node(q));
        assert_eq!(row[3], rule.weight(q));
    }
}
