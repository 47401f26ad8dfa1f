//! Quadrature rules defining the discrete probability measure used for gPC
//! coefficients and as the greedy training set.
//!
//! Three constructions are provided:
//!
//! - [`gauss_rule_1d`]: Golub-Welsch from the family's recurrence, with the nodes
//!   refined by Newton's method and Christoffel weights.
//! - [`tensor_rule`]: isotropic or anisotropic tensor products of 1D rules.
//! - [`sparse_rule`]: Smolyak combination of nested Gauss-Patterson rules with
//!   slow growth. Level `l` in one dimension uses the smallest nested rule with
//!   polynomial exactness at least `2l + 1`, and the sparse rule of level `L`
//!   collects all tensor differences with `l_1 + ... + l_K <= L`.

mod patterson;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polybasis::{FamilyKind, PolynomialFamily};

/// Default cap on the number of nodes of any constructed rule.
pub const DEFAULT_NODE_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Provenance {
    /// Univariate Gauss rule with `points` nodes.
    Gauss { points: usize },
    /// Tensor product of Gauss rules, points per dimension.
    Tensor { points: Vec<usize> },
    /// Slow-growth Gauss-Patterson Smolyak rule.
    Sparse { level: usize },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Gauss { points } => write!(f, "gauss({points})"),
            Provenance::Tensor { points } => write!(f, "tensor({points:?})"),
            Provenance::Sparse { level } => write!(f, "sparse(level {level})"),
        }
    }
}

/// Nodes `mu^q` in `R^K` and weights `w_q` with `sum_q w_q f(mu^q) ~ E[f]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    /// Row-major `Q x K`.
    nodes: Vec<f64>,
    weights: Vec<f64>,
    provenance: Provenance,
    families: Vec<PolynomialFamily>,
}

impl QuadratureRule {
    /// Assembles a rule from raw parts. `nodes` is row-major `Q x K`.
    pub fn from_parts(
        dim: usize,
        nodes: Vec<f64>,
        weights: Vec<f64>,
        provenance: Provenance,
        families: Vec<PolynomialFamily>,
    ) -> Result<Self> {
        if dim == 0 || nodes.len() != weights.len() * dim || families.len() != dim {
            return Err(Error::Shape(format!(
                "rule with dim {dim}: {} coordinates, {} weights, {} families",
                nodes.len(),
                weights.len(),
                families.len()
            )));
        }
        Ok(Self {
            dim,
            nodes,
            weights,
            provenance,
            families,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, q: usize) -> &[f64] {
        &self.nodes[q * self.dim..(q + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.nodes.chunks_exact(self.dim)
    }

    pub fn weight(&self, q: usize) -> f64 {
        self.weights[q]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn families(&self) -> &[PolynomialFamily] {
        &self.families
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn has_negative_weights(&self) -> bool {
        self.weights.iter().any(|&w| w < 0.0)
    }

    /// `sum_q w_q f(mu^q)`, accumulated in node order.
    pub fn integrate<F>(&self, mut f: F) -> f64
    where
        F: FnMut(&[f64]) -> f64,
    {
        self.nodes()
            .zip(&self.weights)
            .map(|(mu, w)| w * f(mu))
            .sum()
    }

    /// Component-wise `sum_q w_q f(mu^q)` for vector-valued integrands.
    pub fn integrate_vec<F>(&self, mut f: F) -> Result<DVector<f64>>
    where
        F: FnMut(&[f64]) -> DVector<f64>,
    {
        let mut acc: Option<DVector<f64>> = None;
        for (mu, &w) in self.nodes().zip(&self.weights) {
            let v = f(mu);
            match acc.as_mut() {
                None => acc = Some(v * w),
                Some(a) if a.len() == v.len() => a.axpy(w, &v, 1.0),
                Some(a) => {
                    return Err(Error::Shape(format!(
                        "integrand changed length from {} to {}",
                        a.len(),
                        v.len()
                    )))
                }
            }
        }
        acc.ok_or_else(|| Error::Shape("empty quadrature rule".into()))
    }

    /// Writes `q, mu_1..mu_K, w` as CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["q".to_string()];
        header.extend((1..=self.dim).map(|k| format!("mu_{k}")));
        header.push("w".into());
        wtr.write_record(&header)?;
        for (q, (mu, w)) in self.nodes().zip(&self.weights).enumerate() {
            let mut row = vec![q.to_string()];
            row.extend(mu.iter().map(|x| x.to_string()));
            row.push(w.to_string());
            wtr.write_record(&row)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Gauss rule with `q` nodes for the family's probability density.
pub fn gauss_rule_1d(family: &PolynomialFamily, q: usize) -> Result<QuadratureRule> {
    let (nodes, weights) = gauss_nodes_weights(family, q)?;
    QuadratureRule::from_parts(
        1,
        nodes,
        weights,
        Provenance::Gauss { points: q },
        vec![*family],
    )
}

pub(crate) fn gauss_nodes_weights(
    family: &PolynomialFamily,
    q: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if q == 0 {
        return Err(Error::Domain("a Gauss rule needs at least one node".into()));
    }
    let mut jacobi = DMatrix::<f64>::zeros(q, q);
    for n in 0..q {
        let (a_n, _) = family.recurrence(n);
        jacobi[(n, n)] = a_n;
        if n + 1 < q {
            let (_, b) = family.recurrence(n + 1);
            jacobi[(n, n + 1)] = b;
            jacobi[(n + 1, n)] = b;
        }
    }
    let eig = jacobi
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric(format!("tridiagonal eigensolver failed for q = {q}")))?;
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));

    // Newton on phi_q sharpens eigenvalue nodes to a few ulps
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = family.eval_with_derivative(q, *x);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.is_finite() || step.abs() > 1e-6 {
                break;
            }
            *x -= step;
            if step.abs() <= f64::EPSILON * x.abs().max(1e-300) {
                break;
            }
        }
    }

    let mut phi = vec![0.0; q];
    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            family.eval_all(x, &mut phi);
            1.0 / phi.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();

    let (alpha, beta) = family.shape();
    if alpha == beta {
        for i in 0..q / 2 {
            let j = q - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -x;
            nodes[j] = x;
            let w = 0.5 * (weights[i] + weights[j]);
            weights[i] = w;
            weights[j] = w;
        }
        if q % 2 == 1 {
            nodes[q / 2] = 0.0;
        }
    }
    Ok((nodes, weights))
}

/// Tensor product of univariate rules, first dimension varying slowest.
pub fn tensor_rule(rules: &[QuadratureRule]) -> Result<QuadratureRule> {
    tensor_rule_with_cap(rules, DEFAULT_NODE_CAP)
}

pub fn tensor_rule_with_cap(rules: &[QuadratureRule], cap: usize) -> Result<QuadratureRule> {
    if rules.is_empty() {
        return Err(Error::Domain("tensor rule needs at least one factor".into()));
    }
    if let Some(r) = rules.iter().find(|r| r.dim != 1) {
        return Err(Error::Shape(format!(
            "tensor factors must be univariate, got dimension {}",
            r.dim
        )));
    }
    if rules.len() == 1 {
        return Ok(rules[0].clone());
    }
    let sizes: Vec<usize> = rules.iter().map(|r| r.len()).collect();
    let total = sizes
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .filter(|&t| t <= cap)
        .ok_or_else(|| {
            Error::Capacity(format!(
                "tensor rule with sizes {sizes:?} exceeds the node cap {cap}"
            ))
        })?;
    let dim = rules.len();
    let mut nodes = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    let mut counter = vec![0usize; dim];
    for _ in 0..total {
        let mut w = 1.0;
        for (k, r) in rules.iter().enumerate() {
            nodes.push(r.nodes[counter[k]]);
            w *= r.weights[counter[k]];
        }
        weights.push(w);
        for k in (0..dim).rev() {
            counter[k] += 1;
            if counter[k] < sizes[k] {
                break;
            }
            counter[k] = 0;
        }
    }
    let provenance = Provenance::Tensor {
        points: sizes.clone(),
    };
    let families = rules.iter().map(|r| r.families[0]).collect();
    QuadratureRule::from_parts(dim, nodes, weights, provenance, families)
}

/// Isotropic tensor Gauss rule with `q` points per dimension.
pub fn tensor_gauss(families: &[PolynomialFamily], q: usize) -> Result<QuadratureRule> {
    let rules = families
        .iter()
        .map(|f| gauss_rule_1d(f, q))
        .collect::<Result<Vec<_>>>()?;
    tensor_rule(&rules)
}

/// Number of tabulated nested rules (sizes 1, 3, ..., 63).
pub const NESTED_DEPTH: usize = patterson::RULES.len();

/// Sizes of the tabulated nested Gauss-Patterson rules.
pub fn nested_sizes() -> Vec<usize> {
    patterson::RULES.iter().map(|(x, _)| x.len()).collect()
}

fn nested_exactness(j: usize) -> usize {
    if j == 0 {
        1
    } else {
        3 * (1 << j) - 1
    }
}

/// Smallest 1D slow-growth level that uses nested rule `j`.
fn first_level_of(j: usize) -> usize {
    if j == 0 {
        0
    } else {
        nested_exactness(j - 1).div_ceil(2)
    }
}

/// Index of the nested rule used at 1D level `level`.
pub fn nested_rule_for_level(level: usize) -> usize {
    let mut j = 0;
    while first_level_of(j + 1) <= level {
        j += 1;
    }
    j
}

/// Nested rules for one family: the Gauss-Patterson nodes, with weights
/// recomputed against the family's density when it is not uniform.
struct NestedSequence {
    /// Per depth, (finest-rule node id, difference weight `w_j - w_{j-1}`).
    deltas: Vec<Vec<(u8, f64)>>,
    /// Finest-rule coordinates indexed by node id.
    coords: Vec<f64>,
}

impl NestedSequence {
    fn new(family: &PolynomialFamily, depth: usize) -> Result<Self> {
        let coords: Vec<f64> = patterson::RULES[depth].0.to_vec();
        let id_of = |x: f64| -> Result<u8> {
            coords
                .iter()
                .position(|&c| (c - x).abs() <= 1e-12)
                .map(|i| i as u8)
                .ok_or_else(|| Error::Numeric(format!("node {x} missing from the finest rule")))
        };
        let mut deltas = Vec::with_capacity(depth + 1);
        let mut previous: Vec<(u8, f64)> = Vec::new();
        for j in 0..=depth {
            let (nodes, table_weights) = patterson::RULES[j];
            let weights = if family.kind() == FamilyKind::Legendre {
                table_weights.to_vec()
            } else {
                interpolatory_weights(family, nodes)?
            };
            let current: Vec<(u8, f64)> = nodes
                .iter()
                .zip(&weights)
                .map(|(&x, &w)| Ok((id_of(x)?, w)))
                .collect::<Result<_>>()?;
            let delta = current
                .iter()
                .map(|&(id, w)| {
                    let old = previous
                        .iter()
                        .find(|(pid, _)| *pid == id)
                        .map_or(0.0, |p| p.1);
                    (id, w - old)
                })
                .collect();
            deltas.push(delta);
            previous = current;
        }
        Ok(Self { deltas, coords })
    }
}

/// Interpolatory weights `int l_i rho` of the nodal Lagrange basis, from the
/// moment conditions `sum_i w_i phi_n(x_i) = delta_n0` in the orthonormal basis.
pub(crate) fn interpolatory_weights(family: &PolynomialFamily, nodes: &[f64]) -> Result<Vec<f64>> {
    let n = nodes.len();
    let mut vander = DMatrix::<f64>::zeros(n, n);
    let mut phi = vec![0.0; n];
    for (i, &x) in nodes.iter().enumerate() {
        family.eval_all(x, &mut phi);
        vander.set_column(i, &DVector::from_column_slice(&phi));
    }
    let mut rhs = DVector::zeros(n);
    rhs[0] = 1.0;
    let w = vander
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("singular moment system for nested nodes".into()))?;
    Ok(w.iter().copied().collect())
}

/// Smolyak sparse rule of the given level.
pub fn sparse_rule(families: &[PolynomialFamily], level: usize) -> Result<QuadratureRule> {
    sparse_rule_with_cap(families, level, DEFAULT_NODE_CAP)
}

pub fn sparse_rule_with_cap(
    families: &[PolynomialFamily],
    level: usize,
    cap: usize,
) -> Result<QuadratureRule> {
    let dim = families.len();
    if dim == 0 {
        return Err(Error::Domain("sparse rule needs at least one dimension".into()));
    }
    let depth = nested_rule_for_level(level);
    if depth >= NESTED_DEPTH {
        return Err(Error::Capacity(format!(
            "level {level} needs nested rule {} but only {NESTED_DEPTH} are tabulated",
            depth + 1
        )));
    }
    let count = sparse_node_count(dim, level)?;
    if count > cap as u128 {
        return Err(Error::Capacity(format!(
            "sparse rule with {count} nodes exceeds the node cap {cap}"
        )));
    }
    let sequences = families
        .iter()
        .map(|f| NestedSequence::new(f, depth))
        .collect::<Result<Vec<_>>>()?;
    let costs: Vec<usize> = (0..=depth).map(first_level_of).collect();

    let mut merged: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
    let mut multi = vec![0usize; dim];
    let mut key = vec![0u8; dim];
    loop {
        add_tensor_difference(&sequences, &multi, 0, 1.0, &mut key, &mut merged);
        if !next_index(&mut multi, &costs, level) {
            break;
        }
    }

    let mut nodes = Vec::with_capacity(merged.len() * dim);
    let mut weights = Vec::with_capacity(merged.len());
    for (ids, w) in merged {
        for (k, &id) in ids.iter().enumerate() {
            nodes.push(sequences[k].coords[id as usize]);
        }
        weights.push(w);
    }
    QuadratureRule::from_parts(
        dim,
        nodes,
        weights,
        Provenance::Sparse { level },
        families.to_vec(),
    )
}

fn add_tensor_difference(
    sequences: &[NestedSequence],
    multi: &[usize],
    k: usize,
    weight: f64,
    key: &mut Vec<u8>,
    merged: &mut BTreeMap<Vec<u8>, f64>,
) {
    if k == multi.len() {
        *merged.entry(key.clone()).or_insert(0.0) += weight;
        return;
    }
    for &(id, w) in &sequences[k].deltas[multi[k]] {
        key[k] = id;
        add_tensor_difference(sequences, multi, k + 1, weight * w, key, merged);
    }
}

/// Advances `multi` to the next tuple with `sum costs[multi_k] <= level`.
fn next_index(multi: &mut [usize], costs: &[usize], level: usize) -> bool {
    for k in (0..multi.len()).rev() {
        multi[k] += 1;
        if multi[k] < costs.len() {
            let total: usize = multi.iter().map(|&j| costs[j]).sum();
            if total <= level {
                return true;
            }
        }
        multi[k] = 0;
    }
    false
}

/// Number of distinct nodes of the sparse rule, without building it.
pub fn sparse_node_count(dim: usize, level: usize) -> Result<u128> {
    let depth = nested_rule_for_level(level);
    if depth >= NESTED_DEPTH {
        return Err(Error::Capacity(format!(
            "level {level} exceeds the tabulated nesting depth"
        )));
    }
    let sizes = nested_sizes();
    let fresh: Vec<u128> = (0..=depth)
        .map(|j| (sizes[j] - if j == 0 { 0 } else { sizes[j - 1] }) as u128)
        .collect();
    // counts[c] = number of nodes whose index tuple has total cost c
    let mut counts = vec![0u128; level + 1];
    counts[0] = 1;
    for _ in 0..dim {
        let mut next = vec![0u128; level + 1];
        for (c, &n) in counts.iter().enumerate().filter(|(_, &n)| n > 0) {
            for j in 0..=depth {
                let cost = c + first_level_of(j);
                if cost <= level {
                    next[cost] = next[cost]
                        .checked_add(n.checked_mul(fresh[j]).ok_or_else(overflow)?)
                        .ok_or_else(overflow)?;
                }
            }
        }
        counts = next;
    }
    Ok(counts.iter().sum())
}

fn overflow() -> Error {
    Error::Capacity("sparse node count overflows".into())
}

/// Free-function form of [`QuadratureRule::integrate`].
pub fn integrate<F: FnMut(&[f64]) -> f64>(rule: &QuadratureRule, f: F) -> f64 {
    rule.integrate(f)
}
