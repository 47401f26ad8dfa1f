use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::truthpde::{AffineProblem, Coefficient};

/// Relative size below which an orthogonalized snapshot counts as dependent.
const DEPENDENCE_TOL: f64 = 1e-12;

/// Rank threshold on the triangular factor of the online system.
const RANK_TOL: f64 = 1e-12;

/// Orthonormal basis of `span{u(nu^1), ..., u(nu^N)}` in the discrete `X` inner
/// product `<u, v> = w u.v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasisSpace {
    basis: DMatrix<f64>,
    parameters: Vec<Vec<f64>>,
    norm_weight: f64,
}

impl ReducedBasisSpace {
    pub fn new(dof: usize, norm_weight: f64) -> Self {
        Self {
            basis: DMatrix::zeros(dof, 0),
            parameters: Vec::new(),
            norm_weight,
        }
    }

    pub(crate) fn from_parts(
        basis: DMatrix<f64>,
        parameters: Vec<Vec<f64>>,
        norm_weight: f64,
    ) -> Result<Self> {
        if basis.ncols() != parameters.len() {
            return Err(Error::Shape(format!(
                "{} basis vectors for {} parameters",
                basis.ncols(),
                parameters.len()
            )));
        }
        Ok(Self {
            basis,
            parameters,
            norm_weight,
        })
    }

    pub fn len(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.ncols() == 0
    }

    pub fn dof(&self) -> usize {
        self.basis.nrows()
    }

    pub fn norm_weight(&self) -> f64 {
        self.norm_weight
    }

    /// `dof x N` matrix of orthonormal basis vectors.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Selected parameters `nu^1..nu^N`, in selection order.
    pub fn parameters(&self) -> &[Vec<f64>] {
        &self.parameters
    }

    /// Gram-Schmidt with one reorthogonalization pass. Returns `false` and leaves
    /// the space unchanged when the snapshot is numerically in the span.
    pub fn try_extend(&mut self, snapshot: &DVector<f64>, mu: &[f64]) -> Result<bool> {
        if snapshot.len() != self.dof() {
            return Err(Error::Shape(format!(
                "snapshot of length {} for a space of dimension {}",
                snapshot.len(),
                self.dof()
            )));
        }
        let scale = snapshot.norm();
        if scale == 0.0 {
            return Ok(false);
        }
        let mut v = snapshot.clone();
        for _ in 0..2 {
            let coeffs = self.basis.tr_mul(&v) * self.norm_weight;
            v.gemv(-1.0, &self.basis, &coeffs, 1.0);
        }
        let rest = v.norm();
        if rest <= DEPENDENCE_TOL * scale {
            return Ok(false);
        }
        v /= rest * self.norm_weight.sqrt();
        let n = self.len();
        self.basis = std::mem::replace(&mut self.basis, DMatrix::zeros(0, 0)).insert_column(n, 0.0);
        self.basis.set_column(n, &v);
        self.parameters.push(mu.to_vec());
        Ok(true)
    }

    /// The nested space spanned by the first `n` basis vectors.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            basis: self.basis.columns(0, n).into_owned(),
            parameters: self.parameters[..n].to_vec(),
            norm_weight: self.norm_weight,
        }
    }

    /// `sum_k c_k xi_k`.
    pub fn reconstruct(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        &self.basis * coeffs
    }

    /// Coefficients of the `X`-orthogonal projection of `v`.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        self.basis.tr_mul(v) * self.norm_weight
    }

    /// `min_{v in X^N} ||u - v||_X`.
    pub fn best_approximation_error(&self, u: &DVector<f64>) -> f64 {
        let r = u - self.reconstruct(&self.project(u));
        self.norm_weight.sqrt() * r.norm()
    }

    /// `X` Gram matrix of the basis; the identity up to round-off.
    pub fn gram(&self) -> DMatrix<f64> {
        self.basis.tr_mul(&self.basis) * self.norm_weight
    }
}

/// Result of one online solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSolution {
    pub coeffs: DVector<f64>,
    /// `||f(mu) - L(mu) u_N(mu)||_X`.
    pub residual_norm: f64,
    /// The reduced system was rank deficient; `coeffs` is the minimum-norm solution.
    pub rank_deficient: bool,
}

/// Online least-squares model, independent of the truth dimension.
///
/// With `Z = sqrt(w) [L_1 Xi, ..., L_QL Xi, f_1, ..., f_Qf] = Y R` (thin QR), the
/// residual of `c` at `mu` is `||R v(mu, c)||` where
/// `v = (theta_1 c, ..., theta_QL c, -theta^f_1, ..., -theta^f_Qf)`, so only `R`
/// is needed online.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    basis_size: usize,
    param_dim: usize,
    theta_l: Vec<Coefficient>,
    theta_f: Vec<Coefficient>,
    factor: DMatrix<f64>,
}

impl ReducedModel {
    pub fn build(problem: &AffineProblem, space: &ReducedBasisSpace) -> Result<Self> {
        if space.dof() != problem.dof() {
            return Err(Error::Shape(format!(
                "basis of dimension {} for a problem with {} unknowns",
                space.dof(),
                problem.dof()
            )));
        }
        let n = space.len();
        let (ql, qf) = (problem.num_operator_terms(), problem.num_load_terms());
        let cols = ql * n + qf;
        let mut z = DMatrix::zeros(problem.dof(), cols);
        for q in 0..ql {
            let block = problem.operator(q) * space.basis();
            z.columns_mut(q * n, n).copy_from(&block);
        }
        for q in 0..qf {
            z.set_column(ql * n + q, problem.load(q));
        }
        z *= problem.norm_weight().sqrt();
        let factor = if z.nrows() >= z.ncols() {
            z.qr().r()
        } else {
            // more columns than rows: Z itself is a valid (wide) factor
            z
        };
        Ok(Self {
            basis_size: n,
            param_dim: problem.param_dim(),
            theta_l: problem.operator_coefficients().to_vec(),
            theta_f: problem.load_coefficients().to_vec(),
            factor,
        })
    }

    pub(crate) fn from_parts(
        basis_size: usize,
        param_dim: usize,
        theta_l: Vec<Coefficient>,
        theta_f: Vec<Coefficient>,
        factor: DMatrix<f64>,
    ) -> Result<Self> {
        if factor.ncols() != theta_l.len() * basis_size + theta_f.len() {
            return Err(Error::Shape(format!(
                "factor with {} columns for N = {basis_size}, Q_L = {}, Q_f = {}",
                factor.ncols(),
                theta_l.len(),
                theta_f.len()
            )));
        }
        Ok(Self {
            basis_size,
            param_dim,
            theta_l,
            theta_f,
            factor,
        })
    }

    pub fn basis_size(&self) -> usize {
        self.basis_size
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn operator_coefficients(&self) -> &[Coefficient] {
        &self.theta_l
    }

    pub fn load_coefficients(&self) -> &[Coefficient] {
        &self.theta_f
    }

    /// Reduced operator `M(mu)` and right-hand side `g(mu)`, so that the residual
    /// norm of `c` is `||M c - g||`.
    pub fn reduced_system(&self, mu: &[f64]) -> Result<(DMatrix<f64>, DVector<f64>)> {
        if mu.len() != self.param_dim {
            return Err(Error::Shape(format!(
                "parameter of length {} for a {}-dimensional model",
                mu.len(),
                self.param_dim
            )));
        }
        if let Some(x) = mu.iter().find(|x| !(x.abs() <= 1.0 + 1e-12)) {
            return Err(Error::Domain(format!("parameter entry {x} outside [-1, 1]")));
        }
        let n = self.basis_size;
        let rows = self.factor.nrows();
        let mut m = DMatrix::zeros(rows, n);
        for (q, c) in self.theta_l.iter().enumerate() {
            let t = c.eval(mu);
            for j in 0..n {
                m.column_mut(j).axpy(t, &self.factor.column(q * n + j), 1.0);
            }
        }
        let offset = self.theta_l.len() * n;
        let mut g = DVector::zeros(rows);
        for (q, c) in self.theta_f.iter().enumerate() {
            g.axpy(c.eval(mu), &self.factor.column(offset + q), 1.0);
        }
        Ok((m, g))
    }

    /// Minimum-residual coefficients and the residual norm at `mu`.
    pub fn solve(&self, mu: &[f64]) -> Result<ReducedSolution> {
        let (m, g) = self.reduced_system(mu)?;
        let n = self.basis_size;
        if n == 0 {
            return Ok(ReducedSolution {
                coeffs: DVector::zeros(0),
                residual_norm: g.norm(),
                rank_deficient: false,
            });
        }
        if m.nrows() >= n {
            let qr = m.clone().qr();
            let r = qr.r();
            let diag_max = r.diagonal().amax();
            let full_rank = r.diagonal().iter().all(|d| d.abs() > RANK_TOL * diag_max);
            if full_rank {
                let mut qtg = g.clone();
                qr.q_tr_mul(&mut qtg);
                let rhs = qtg.rows(0, n).into_owned();
                if let Some(coeffs) = r.solve_upper_triangular(&rhs) {
                    let residual_norm = qtg.rows(n, qtg.len() - n).norm();
                    return Ok(ReducedSolution {
                        coeffs,
                        residual_norm,
                        rank_deficient: false,
                    });
                }
            }
        }
        let svd = m.clone().svd(true, true);
        let tol = RANK_TOL * svd.singular_values.max();
        let coeffs = svd
            .solve(&g, tol)
            .map_err(|e| Error::Numeric(format!("reduced least squares failed: {e}")))?;
        let residual_norm = (&m * &coeffs - &g).norm();
        Ok(ReducedSolution {
            coeffs,
            residual_norm,
            rank_deficient: true,
        })
    }
}
