//! Offline artifact: `metadata.json`, `basis.bin` and `factor.bin` in one directory.
//! Arrays are little-endian `f64`, column-major, shapes recorded in the metadata.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::greedy::{GreedyOptions, GreedyOutcome, GreedyStep};
use super::space::{ReducedBasisSpace, ReducedModel};
use crate::error::{Error, Result};
use crate::io::{read_json, read_matrix, write_json, write_matrix};
use crate::quadrature::{Provenance, QuadratureRule};
use crate::truthpde::{AffineProblem, Coefficient, ProblemDescriptor};

pub const FORMAT_VERSION: u32 = 1;
const METADATA: &str = "metadata.json";
const BASIS: &str = "basis.bin";
const FACTOR: &str = "factor.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMetadata {
    pub format_version: u32,
    pub problem_hash: String,
    pub descriptor: ProblemDescriptor,
    pub dof: usize,
    pub param_dim: usize,
    pub norm_weight: f64,
    pub basis_size: usize,
    pub basis_shape: [usize; 2],
    pub factor_shape: [usize; 2],
    pub operator_coefficients: Vec<Coefficient>,
    pub load_coefficients: Vec<Coefficient>,
    pub selected_nodes: Vec<usize>,
    pub selected_parameters: Vec<Vec<f64>>,
    pub history: Vec<GreedyStep>,
    pub converged: bool,
    pub saturated: bool,
    pub options: GreedyOptions,
    pub quadrature: Provenance,
    pub quadrature_size: usize,
    /// Opaque experiment configuration the artifact was built from.
    #[serde(default)]
    pub config: Option<serde_json::Value>,
    /// Not part of any reproducibility comparison.
    pub created_unix: u64,
}

impl ArtifactMetadata {
    /// Copy with the timestamp cleared, for determinism comparisons.
    pub fn without_timestamp(&self) -> Self {
        Self {
            created_unix: 0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedArtifact {
    pub metadata: ArtifactMetadata,
    pub space: ReducedBasisSpace,
    pub model: ReducedModel,
}

/// SHA-256 over the problem's descriptor, coefficient maps and component norms.
pub fn problem_hash(problem: &AffineProblem) -> String {
    let mut hasher = Sha256::new();
    let header = serde_json::json!({
        "descriptor": problem.descriptor(),
        "dof": problem.dof(),
        "param_dim": problem.param_dim(),
        "operator_coefficients": problem.operator_coefficients(),
        "load_coefficients": problem.load_coefficients(),
    });
    hasher.update(header.to_string().as_bytes());
    hasher.update(problem.norm_weight().to_le_bytes());
    for q in 0..problem.num_operator_terms() {
        hasher.update(problem.operator(q).norm().to_le_bytes());
    }
    for q in 0..problem.num_load_terms() {
        hasher.update(problem.load(q).norm().to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

pub fn save_artifact(
    dir: &Path,
    problem: &AffineProblem,
    rule: &QuadratureRule,
    outcome: &GreedyOutcome,
    options: &GreedyOptions,
    config: Option<serde_json::Value>,
) -> Result<ArtifactMetadata> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let basis = outcome.space.basis();
    let factor = outcome.model.factor();
    let metadata = ArtifactMetadata {
        format_version: FORMAT_VERSION,
        problem_hash: problem_hash(problem),
        descriptor: problem.descriptor().clone(),
        dof: problem.dof(),
        param_dim: problem.param_dim(),
        norm_weight: problem.norm_weight(),
        basis_size: outcome.space.len(),
        basis_shape: [basis.nrows(), basis.ncols()],
        factor_shape: [factor.nrows(), factor.ncols()],
        operator_coefficients: problem.operator_coefficients().to_vec(),
        load_coefficients: problem.load_coefficients().to_vec(),
        selected_nodes: outcome.selected.clone(),
        selected_parameters: outcome.space.parameters().to_vec(),
        history: outcome.history.clone(),
        converged: outcome.converged,
        saturated: outcome.saturated,
        options: *options,
        quadrature: rule.provenance().clone(),
        quadrature_size: rule.len(),
        config,
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    write_matrix(&dir.join(BASIS), basis)?;
    write_matrix(&dir.join(FACTOR), factor)?;
    write_json(&dir.join(METADATA), &metadata)?;
    Ok(metadata)
}

/// Restores the online model and basis; performs no truth computations.
pub fn load_artifact(dir: &Path) -> Result<LoadedArtifact> {
    let metadata: ArtifactMetadata = read_json(&dir.join(METADATA))?;
    if metadata.format_version != FORMAT_VERSION {
        return Err(Error::Compatibility(format!(
            "artifact format {} (expected {FORMAT_VERSION})",
            metadata.format_version
        )));
    }
    let [br, bc] = metadata.basis_shape;
    let [fr, fc] = metadata.factor_shape;
    if br != metadata.dof || bc != metadata.basis_size {
        return Err(Error::Shape(format!(
            "basis shape {br} x {bc} disagrees with dof {} and N = {}",
            metadata.dof, metadata.basis_size
        )));
    }
    let basis = read_matrix(&dir.join(BASIS), br, bc)?;
    let factor = read_matrix(&dir.join(FACTOR), fr, fc)?;
    let space = ReducedBasisSpace::from_parts(
        basis,
        metadata.selected_parameters.clone(),
        metadata.norm_weight,
    )?;
    let model = ReducedModel::from_parts(
        metadata.basis_size,
        metadata.param_dim,
        metadata.operator_coefficients.clone(),
        metadata.load_coefficients.clone(),
        factor,
    )?;
    Ok(LoadedArtifact {
        metadata,
        space,
        model,
    })
}
