//! Pseudospectral gPC coefficient fields, quantities of interest and the constants
//! that turn averaged estimator values into certified error bounds.
//!
//! With `Phi_1 == 1`, the mean is `u_1`, the variance is `sum_{m>=2} u_m^2` and the
//! `L^2_rho` norm squared is `sum_m u_m^2`, all pointwise over the grid.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_json, read_matrix, write_json, write_matrix};
use crate::polybasis::{MultiIndexSet, PolynomialFamily};
use crate::quadrature::{Provenance, QuadratureRule};
use crate::rbm::{ReducedBasisSpace, ReducedModel};
use crate::truthpde::AffineProblem;

/// Nodes evaluated in parallel before their contributions are summed in order.
const BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum QoiKind {
    #[default]
    Mean,
    Variance,
    NormSquared,
}

impl QoiKind {
    pub const ALL: [QoiKind; 3] = [QoiKind::Mean, QoiKind::Variance, QoiKind::NormSquared];

    /// `F[Phi_m]` for the 0-based basis index `m`.
    pub fn functional_factor(&self, m: usize) -> f64 {
        match (self, m) {
            (QoiKind::Mean, 0) => 1.0,
            (QoiKind::Mean, _) => 0.0,
            (QoiKind::Variance, 0) => 0.0,
            (QoiKind::Variance, _) => 1.0,
            (QoiKind::NormSquared, _) => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            QoiKind::Mean => "mean",
            QoiKind::Variance => "variance",
            QoiKind::NormSquared => "norm-squared",
        }
    }
}

/// A quantity of interest with its Lipschitz constant: 1 for the mean, `2U` for
/// the quadratic ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QoiSpec {
    pub kind: QoiKind,
    pub c_lip: f64,
}

impl QoiSpec {
    pub fn new(kind: QoiKind, uniform_bound: f64) -> Self {
        let c_lip = match kind {
            QoiKind::Mean => 1.0,
            QoiKind::Variance | QoiKind::NormSquared => 2.0 * uniform_bound,
        };
        Self { kind, c_lip }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExpansionSource {
    Truth,
    ReducedBasis { n: usize },
}

/// Coefficient fields `u_1..u_M` as the columns of a `dof x M` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GpcExpansion {
    coefficients: DMatrix<f64>,
    source: ExpansionSource,
    set: MultiIndexSet,
    families: Vec<PolynomialFamily>,
    provenance: Provenance,
    quadrature_size: usize,
    norm_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ExpansionMetadata {
    dof: usize,
    terms: usize,
    norm_weight: f64,
    grid: Option<[usize; 2]>,
    source: ExpansionSource,
    dim: usize,
    degree: usize,
    multi_indices: Vec<Vec<usize>>,
    families: Vec<PolynomialFamily>,
    quadrature: Provenance,
    quadrature_size: usize,
}

impl GpcExpansion {
    pub fn new(
        coefficients: DMatrix<f64>,
        source: ExpansionSource,
        set: MultiIndexSet,
        rule: &QuadratureRule,
        norm_weight: f64,
    ) -> Result<Self> {
        if coefficients.ncols() != set.len() {
            return Err(Error::Shape(format!(
                "{} coefficient fields for a basis of size {}",
                coefficients.ncols(),
                set.len()
            )));
        }
        Ok(Self {
            coefficients,
            source,
            set,
            families: rule.families().to_vec(),
            provenance: rule.provenance().clone(),
            quadrature_size: rule.len(),
            norm_weight,
        })
    }

    /// Number of terms `M`.
    pub fn len(&self) -> usize {
        self.coefficients.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.ncols() == 0
    }

    pub fn dof(&self) -> usize {
        self.coefficients.nrows()
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    /// Field `u_m`, 0-based.
    pub fn coefficient(&self, m: usize) -> DVector<f64> {
        self.coefficients.column(m).into_owned()
    }

    pub fn source(&self) -> ExpansionSource {
        self.source
    }

    pub fn set(&self) -> &MultiIndexSet {
        &self.set
    }

    pub fn norm_weight(&self) -> f64 {
        self.norm_weight
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// `u_M(mu) = sum_m u_m Phi_m(mu)`.
    pub fn evaluate(&self, mu: &[f64]) -> Result<DVector<f64>> {
        let mut phi = vec![0.0; self.len()];
        self.set.eval_into(&self.families, mu, &mut phi)?;
        Ok(&self.coefficients * DVector::from_vec(phi))
    }

    /// Discrete `X` norm of a field on this expansion's grid.
    pub fn field_norm(&self, v: &DVector<f64>) -> f64 {
        self.norm_weight.sqrt() * v.norm()
    }

    /// Writes `expansion.json` and `coefficients.bin` into `dir`.
    pub fn save(&self, dir: &Path, grid: Option<[usize; 2]>) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta = ExpansionMetadata {
            dof: self.dof(),
            terms: self.len(),
            norm_weight: self.norm_weight,
            grid,
            source: self.source,
            dim: self.set.dim(),
            degree: self.set.degree(),
            multi_indices: self.set.indices().to_vec(),
            families: self.families.clone(),
            quadrature: self.provenance.clone(),
            quadrature_size: self.quadrature_size,
        };
        write_matrix(&dir.join("coefficients.bin"), &self.coefficients)?;
        write_json(&dir.join("expansion.json"), &meta)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta: ExpansionMetadata = read_json(&dir.join("expansion.json"))?;
        let set = MultiIndexSet::total_degree(meta.dim, meta.degree)?;
        if set.indices() != meta.multi_indices.as_slice() {
            return Err(Error::Compatibility(
                "stored multi-index list differs from the total-degree ordering".into(),
            ));
        }
        let coefficients = read_matrix(&dir.join("coefficients.bin"), meta.dof, meta.terms)?;
        Ok(Self {
            coefficients,
            source: meta.source,
            set,
            families: meta.families,
            provenance: meta.quadrature,
            quadrature_size: meta.quadrature_size,
            norm_weight: meta.norm_weight,
        })
    }
}

/// `sum_q w_q solver(mu^q) Phi_m(mu^q)` for all `m` in one pass over the nodes.
///
/// Nodes are solved in parallel blocks and accumulated in node order, so the
/// result does not depend on the thread count.
pub fn pseudospectral_coefficients<F>(
    solver: F,
    rule: &QuadratureRule,
    set: &MultiIndexSet,
) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<DVector<f64>> + Sync,
{
    if rule.dim() != set.dim() {
        return Err(Error::Shape(format!(
            "{}-dimensional rule for a {}-dimensional basis",
            rule.dim(),
            set.dim()
        )));
    }
    let families = rule.families();
    let mut acc: Option<DMatrix<f64>> = None;
    for start in (0..rule.len()).step_by(BLOCK) {
        let end = (start + BLOCK).min(rule.len());
        let block: Vec<Result<(DVector<f64>, DVector<f64>)>> = (start..end)
            .into_par_iter()
            .map(|q| {
                let mu = rule.node(q);
                let field = solver(mu)?;
                let mut phi = vec![0.0; set.len()];
                set.eval_into(families, mu, &mut phi)?;
                Ok((field, DVector::from_vec(phi)))
            })
            .collect();
        for (q, item) in (start..end).zip(block) {
            let (field, phi) = item.map_err(|e| Error::NodeFailure {
                node: q,
                source: Box::new(e),
            })?;
            let acc = acc.get_or_insert_with(|| DMatrix::zeros(field.len(), set.len()));
            if field.len() != acc.nrows() {
                return Err(Error::NodeFailure {
                    node: q,
                    source: Box::new(Error::Shape(format!(
                        "field of length {} after fields of length {}",
                        field.len(),
                        acc.nrows()
                    ))),
                });
            }
            acc.ger(rule.weight(q), &field, &phi, 1.0);
        }
    }
    acc.ok_or_else(|| Error::Shape("empty quadrature rule".into()))
}

/// Brute-force expansion from one truth solve per node.
pub fn truth_expansion(
    problem: &AffineProblem,
    rule: &QuadratureRule,
    set: &MultiIndexSet,
) -> Result<GpcExpansion> {
    let coeffs = pseudospectral_coefficients(|mu| Ok(problem.truth_solve(mu)?.values), rule, set)?;
    GpcExpansion::new(coeffs, ExpansionSource::Truth, set.clone(), rule, problem.norm_weight())
}

/// Surrogate expansion: reduced coefficients are accumulated (`N x M`) and mapped
/// to fields once through the basis. Returns the expansion and the number of
/// rank-deficient online solves.
pub fn rb_expansion(
    model: &ReducedModel,
    space: &ReducedBasisSpace,
    rule: &QuadratureRule,
    set: &MultiIndexSet,
) -> Result<(GpcExpansion, usize)> {
    let warnings = std::sync::atomic::AtomicUsize::new(0);
    let reduced = pseudospectral_coefficients(
        |mu| {
            let sol = model.solve(mu)?;
            if sol.rank_deficient {
                warnings.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            }
            Ok(sol.coeffs)
        },
        rule,
        set,
    )?;
    if reduced.nrows() != space.len() {
        return Err(Error::Shape(format!(
            "model of size {} with a basis of size {}",
            reduced.nrows(),
            space.len()
        )));
    }
    let fields = space.basis() * reduced;
    let expansion = GpcExpansion::new(
        fields,
        ExpansionSource::ReducedBasis { n: space.len() },
        set.clone(),
        rule,
        space.norm_weight(),
    )?;
    Ok((expansion, warnings.into_inner()))
}

/// Pointwise quantity of interest.
pub fn qoi(expansion: &GpcExpansion, kind: QoiKind) -> DVector<f64> {
    let c = expansion.coefficients();
    let mut out = DVector::zeros(c.nrows());
    for m in 0..c.ncols() {
        let factor = kind.functional_factor(m);
        if factor == 0.0 {
            continue;
        }
        let col = c.column(m);
        match kind {
            QoiKind::Mean => out += col,
            QoiKind::Variance | QoiKind::NormSquared => out += col.component_mul(&col),
        }
    }
    out
}

/// `B_{Q,m} = sqrt(sum_q |w_q| Phi_m(mu^q)^2)`.
pub fn b_qm(rule: &QuadratureRule, set: &MultiIndexSet) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; set.len()];
    let mut phi = vec![0.0; set.len()];
    for (mu, w) in rule.nodes().zip(rule.weights()) {
        set.eval_into(rule.families(), mu, &mut phi)?;
        for (a, p) in acc.iter_mut().zip(&phi) {
            *a += w.abs() * p * p;
        }
    }
    Ok(acc.into_iter().map(f64::sqrt).collect())
}

/// `C_{Q,M} = sum_m B_{Q,m} |F[Phi_m]|`.
pub fn c_qm(b: &[f64], kind: QoiKind) -> f64 {
    b.iter()
        .enumerate()
        .map(|(m, bm)| bm * kind.functional_factor(m).abs())
        .sum()
}

fn check_compatible(a: &GpcExpansion, b: &GpcExpansion) -> Result<()> {
    if a.coefficients.shape() != b.coefficients.shape() {
        return Err(Error::Shape(format!(
            "expansions of shape {:?} and {:?}",
            a.coefficients.shape(),
            b.coefficients.shape()
        )));
    }
    Ok(())
}

/// `|| F[truth] - F[rb] ||_X`.
pub fn qoi_error(truth: &GpcExpansion, rb: &GpcExpansion, kind: QoiKind) -> Result<f64> {
    check_compatible(truth, rb)?;
    Ok(truth.field_norm(&(qoi(truth, kind) - qoi(rb, kind))))
}

/// `|| u_m^truth - u_m^rb ||_X` for every `m`.
pub fn coefficient_errors(truth: &GpcExpansion, rb: &GpcExpansion) -> Result<Vec<f64>> {
    check_compatible(truth, rb)?;
    let diff = truth.coefficients() - rb.coefficients();
    Ok(diff
        .column_iter()
        .map(|c| truth.norm_weight.sqrt() * c.norm())
        .collect())
}

/// Root mean square of the weighted estimates over the full rule.
pub fn rms(estimates: &[f64]) -> f64 {
    crate::rbm::epsilon_estimate(estimates, 1.0)
}

/// Round-off allowance when comparing an error against its bound.
fn slack(scale: f64) -> f64 {
    1e-13 * scale.max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub m: usize,
    pub error: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub entries: Vec<BoundEntry>,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn violations(&self) -> usize {
        self.entries.iter().filter(|e| !e.pass).count()
    }
}

/// Per-coefficient check of `||u_m^truth - u_m^rb|| <= B_{Q,m} rms(Dw)`.
pub fn coefficient_error_bound_check(
    truth: &GpcExpansion,
    rb: &GpcExpansion,
    b: &[f64],
    estimates: &[f64],
) -> Result<BoundReport> {
    let errors = coefficient_errors(truth, rb)?;
    if b.len() != errors.len() {
        return Err(Error::Shape(format!("{} constants for {} coefficients", b.len(), errors.len())));
    }
    let scale = truth.field_norm(&truth.coefficient(0));
    let r = rms(estimates);
    let entries = errors
        .iter()
        .zip(b)
        .enumerate()
        .map(|(m, (&error, &bm))| {
            let bound = bm * r;
            BoundEntry {
                m,
                error,
                bound,
                margin: bound - error,
                pass: error <= bound + slack(scale),
            }
        })
        .collect();
    Ok(BoundReport { entries })
}

/// `||F[u^rb] - F[u^truth]|| <= C_Lip C_QM rms(Dw)` for one quantity of interest.
pub fn qoi_error_bound_check(
    truth: &GpcExpansion,
    rb: &GpcExpansion,
    spec: &QoiSpec,
    c_qm: f64,
    estimates: &[f64],
) -> Result<BoundEntry> {
    let error = qoi_error(truth, rb, spec.kind)?;
    let bound = spec.c_lip * c_qm * rms(estimates);
    let scale = truth.field_norm(&qoi(truth, spec.kind));
    Ok(BoundEntry {
        m: 0,
        error,
        bound,
        margin: bound - error,
        pass: error <= bound + slack(scale),
    })
}
