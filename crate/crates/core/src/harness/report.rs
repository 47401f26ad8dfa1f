use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpcqoi::BoundEntry;
use crate::rbm::GreedyStep;

use super::config::ExperimentConfig;

/// One row of the error-decay table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon: f64,
    pub xi_mean: Option<f64>,
    pub xi_norm: Option<f64>,
}

/// One row of the efficiency table; times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub t_direct: Option<f64>,
    pub t_offline: f64,
    pub t_offline_setup: f64,
    pub t_online: f64,
    pub ratio: Option<f64>,
}

/// Least-squares line through `(N, log10 xi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub start_n: usize,
    pub points: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits `log10(xi)` against `N` on the decaying segment: from the largest value to
/// the end. Needs at least three positive values in the segment.
pub fn fit_log_decay(ns: &[usize], values: &[f64]) -> Option<DecayFit> {
    if ns.len() != values.len() || values.is_empty() {
        return None;
    }
    let start = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > values[best] { i } else { best });
    let pts: Vec<(f64, f64)> = ns[start..]
        .iter()
        .zip(&values[start..])
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(n, v)| (*n as f64, v.log10()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let len = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / len;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some(DecayFit {
        start_n: ns[start],
        points: pts.len(),
        slope,
        intercept,
        r_squared,
    })
}

/// Everything a reproduction run measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub quadrature_size: usize,
    pub basis_terms: usize,
    pub final_n: usize,
    pub converged: bool,
    pub c_qm: f64,
    pub c_lip: f64,
    pub uniform_bound: f64,
    pub history: Vec<GreedyStep>,
    pub convergence: Vec<ConvergenceRow>,
    pub selected: Vec<Vec<f64>>,
    /// Seconds; offline includes quadrature, `C_QM` and the greedy.
    pub t_offline: f64,
    /// Part of `t_offline` spent before the greedy (quadrature, `C_QM`, `U`).
    pub t_offline_setup: f64,
    pub t_online: f64,
    pub t_direct: Option<f64>,
    /// `t_direct / (t_offline + t_online)`, present only when the baseline ran.
    pub efficiency_ratio: Option<f64>,
    pub online_truth_solves: usize,
    pub online_factorizations: usize,
    pub decay_fit: Option<DecayFit>,
    pub qoi_bounds: Vec<BoundEntry>,
}

impl RunReport {
    pub fn efficiency_row(&self) -> EfficiencyRow {
        EfficiencyRow {
            k: self.config.k,
            t_direct: self.t_direct,
            t_offline: self.t_offline,
            t_offline_setup: self.t_offline_setup,
            t_online: self.t_online,
            ratio: self.efficiency_ratio,
        }
    }
}

pub fn write_rows<T: Serialize, W: Write>(out: W, rows: &[T]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_rows<T: for<'de> Deserialize<'de>, R: Read>(input: R) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_reader(input);
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_rows_to<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows(std::io::BufWriter::new(file), rows)
}

pub fn read_rows_from<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_rows(std::io::BufReader::new(file))
}
