//! Affine-parametric truth discretization of `-div(a(x, mu) grad u) = f` on
//! `[-1, 1]^2` with homogeneous Dirichlet data.
//!
//! The operator is stored as components `L_q` with scalar maps `theta_q(mu)`, so
//! `L(mu) = sum_q theta_q(mu) L_q` and likewise for the load. Components come from
//! second-order conservative finite differences with midpoint coefficients on the
//! interior nodes of a uniform grid; unknowns are ordered with `x` fastest.

use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interior nodes of a uniform `(nx + 2) x (ny + 2)` grid on `[-1, 1]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpatialGrid {
    nx: usize,
    ny: usize,
}

impl SpatialGrid {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Domain(format!(
                "grid needs at least one interior node per direction, got {nx} x {ny}"
            )));
        }
        Ok(Self { nx, ny })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Number of unknowns.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn hx(&self) -> f64 {
        2.0 / (self.nx + 1) as f64
    }

    pub fn hy(&self) -> f64 {
        2.0 / (self.ny + 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -1.0 + (i + 1) as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        -1.0 + (j + 1) as f64 * self.hy()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    pub fn coordinates(&self, idx: usize) -> (f64, f64) {
        (self.x(idx % self.nx), self.y(idx / self.nx))
    }

    /// Cell area, the (uniform) mass weight of the discrete norm.
    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    /// Smallest eigenvalue of the 5-point Dirichlet Laplacian on this grid.
    pub fn laplacian_min_eigenvalue(&self) -> f64 {
        let lam = |n: usize, h: f64| {
            let s = (std::f64::consts::PI / (2.0 * (n + 1) as f64)).sin();
            4.0 / (h * h) * s * s
        };
        lam(self.nx, self.hx()) + lam(self.ny, self.hy())
    }

    /// Writes `x, y, value` rows for a nodal field.
    pub fn write_field_csv<W: Write>(&self, out: W, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::Shape(format!(
                "field of length {} on a grid with {} nodes",
                values.len(),
                self.len()
            )));
        }
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["x", "y", "value"])?;
        for (idx, v) in values.iter().enumerate() {
            let (x, y) = self.coordinates(idx);
            wtr.write_record([x.to_string(), y.to_string(), v.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn export_field_csv(&self, path: &Path, values: &[f64]) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_field_csv(std::io::BufWriter::new(file), values)
    }
}

/// Conservative 5-point discretization of `-div(c grad .)`, coefficient sampled at
/// edge midpoints.
pub fn discretize_diffusion<F>(grid: &SpatialGrid, c: F) -> DMatrix<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let (nx, ny) = (grid.nx(), grid.ny());
    let (hx, hy) = (grid.hx(), grid.hy());
    let mut m = DMatrix::zeros(grid.len(), grid.len());
    for j in 0..ny {
        for i in 0..nx {
            let row = grid.index(i, j);
            let (x, y) = (grid.x(i), grid.y(j));
            let east = c(x + 0.5 * hx, y) / (hx * hx);
            let west = c(x - 0.5 * hx, y) / (hx * hx);
            let north = c(x, y + 0.5 * hy) / (hy * hy);
            let south = c(x, y - 0.5 * hy) / (hy * hy);
            m[(row, row)] = east + west + north + south;
            if i + 1 < nx {
                m[(row, grid.index(i + 1, j))] = -east;
            }
            if i > 0 {
                m[(row, grid.index(i - 1, j))] = -west;
            }
            if j + 1 < ny {
                m[(row, grid.index(i, j + 1))] = -north;
            }
            if j > 0 {
                m[(row, grid.index(i, j - 1))] = -south;
            }
        }
    }
    m
}

/// Scalar parameter map `theta(mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Coefficient {
    Constant { value: f64 },
    /// `scale * mu[dim] + offset`
    Linear { dim: usize, scale: f64, offset: f64 },
    /// `scale * cos(freq * mu[dim] + phase)`
    Cosine {
        dim: usize,
        freq: f64,
        phase: f64,
        scale: f64,
    },
}

impl Coefficient {
    pub fn eval(&self, mu: &[f64]) -> f64 {
        match *self {
            Coefficient::Constant { value } => value,
            Coefficient::Linear { dim, scale, offset } => scale * mu[dim] + offset,
            Coefficient::Cosine {
                dim,
                freq,
                phase,
                scale,
            } => scale * (freq * mu[dim] + phase).cos(),
        }
    }

    /// `sup |theta|` over `[-1, 1]^K`.
    pub fn sup_abs(&self) -> f64 {
        match *self {
            Coefficient::Constant { value } => value.abs(),
            Coefficient::Linear { scale, offset, .. } => scale.abs() + offset.abs(),
            Coefficient::Cosine { scale, .. } => scale.abs(),
        }
    }

    fn dim(&self) -> Option<usize> {
        match *self {
            Coefficient::Constant { .. } => None,
            Coefficient::Linear { dim, .. } | Coefficient::Cosine { dim, .. } => Some(dim),
        }
    }
}

/// What a problem was assembled from; hashed to tie artifacts to configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemDescriptor {
    Benchmark {
        k: usize,
        a: f64,
        nx: usize,
        ny: usize,
    },
    Custom {
        name: String,
    },
}

#[derive(Debug, Default)]
struct Counters {
    solves: AtomicUsize,
    factorizations: AtomicUsize,
}

impl Clone for Counters {
    fn clone(&self) -> Self {
        Counters::default()
    }
}

/// Symmetric banded matrix, lower band stored row by row:
/// `data[i * (p + 1) + d] = A[i, i - d]`.
#[derive(Debug, Clone)]
struct Band {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl Band {
    fn from_dense(m: &DMatrix<f64>, p: usize) -> Self {
        let n = m.nrows();
        let mut data = vec![0.0; n * (p + 1)];
        for i in 0..n {
            for d in 0..=p.min(i) {
                data[i * (p + 1) + d] = m[(i, i - d)];
            }
        }
        Self { n, p, data }
    }

    /// In-place Cholesky `A = L L^T`; fails if a pivot is not positive.
    fn factor(mut self) -> Option<Self> {
        let w = self.p + 1;
        for j in 0..self.n {
            let k0 = j.saturating_sub(self.p);
            let mut s = self.data[j * w];
            for k in k0..j {
                let l = self.data[j * w + (j - k)];
                s -= l * l;
            }
            if !(s > 0.0) || !s.is_finite() {
                return None;
            }
            let djj = s.sqrt();
            self.data[j * w] = djj;
            for i in j + 1..(j + w).min(self.n) {
                let k0 = i.saturating_sub(self.p);
                let mut s = self.data[i * w + (i - j)];
                for k in k0..j {
                    s -= self.data[i * w + (i - k)] * self.data[j * w + (j - k)];
                }
                self.data[i * w + (i - j)] = s / djj;
            }
        }
        Some(self)
    }

    fn solve_factored(&self, b: &mut [f64]) {
        let w = self.p + 1;
        for i in 0..self.n {
            let mut s = b[i];
            for k in i.saturating_sub(self.p)..i {
                s -= self.data[i * w + (i - k)] * b[k];
            }
            b[i] = s / self.data[i * w];
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + w).min(self.n) {
                s -= self.data[k * w + (k - i)] * b[k];
            }
            b[i] = s / self.data[i * w];
        }
    }
}

/// Full-order solution at one parameter.
#[derive(Debug, Clone)]
pub struct TruthSolution {
    pub values: DVector<f64>,
    pub mu: Vec<f64>,
    pub elapsed: Duration,
}

/// `L(mu) = sum_q theta^L_q(mu) L_q`, `f(mu) = sum_q theta^f_q(mu) f_q`.
#[derive(Debug, Clone)]
pub struct AffineProblem {
    operators: Vec<DMatrix<f64>>,
    loads: Vec<DVector<f64>>,
    theta_l: Vec<Coefficient>,
    theta_f: Vec<Coefficient>,
    param_dim: usize,
    norm_weight: f64,
    symmetric: bool,
    bands: Option<Vec<Band>>,
    coercivity_floor: Option<f64>,
    ellipticity_floor: Option<f64>,
    grid: Option<SpatialGrid>,
    descriptor: ProblemDescriptor,
    counters: Counters,
}

impl AffineProblem {
    /// Generic constructor. `norm_weight` is the scalar mass weight of the
    /// discrete norm, `||v||^2 = norm_weight * sum v_i^2`.
    pub fn new(
        operators: Vec<DMatrix<f64>>,
        theta_l: Vec<Coefficient>,
        loads: Vec<DVector<f64>>,
        theta_f: Vec<Coefficient>,
        param_dim: usize,
        norm_weight: f64,
    ) -> Result<Self> {
        if operators.is_empty() || loads.is_empty() {
            return Err(Error::Shape("need at least one operator and one load term".into()));
        }
        if operators.len() != theta_l.len() || loads.len() != theta_f.len() {
            return Err(Error::Shape(format!(
                "{} operators with {} coefficients, {} loads with {} coefficients",
                operators.len(),
                theta_l.len(),
                loads.len(),
                theta_f.len()
            )));
        }
        let n = operators[0].nrows();
        if operators.iter().any(|m| m.nrows() != n || m.ncols() != n)
            || loads.iter().any(|f| f.len() != n)
        {
            return Err(Error::Shape(format!("components must all be {n} x {n} / {n}")));
        }
        if let Some(c) = theta_l
            .iter()
            .chain(&theta_f)
            .find(|c| c.dim().is_some_and(|d| d >= param_dim))
        {
            return Err(Error::Shape(format!(
                "coefficient {c:?} reads beyond parameter dimension {param_dim}"
            )));
        }
        if !(norm_weight > 0.0 && norm_weight.is_finite()) {
            return Err(Error::Domain(format!(
                "norm weight must be positive, got {norm_weight}"
            )));
        }
        let symmetric = operators.iter().all(|m| {
            let scale = m.amax().max(f64::MIN_POSITIVE);
            (m - m.transpose()).amax() <= 1e-14 * scale
        });
        let bandwidth = operators
            .iter()
            .flat_map(|m| {
                m.column_iter()
                    .enumerate()
                    .flat_map(|(j, col)| {
                        col.iter()
                            .enumerate()
                            .filter(|(_, v)| **v != 0.0)
                            .map(move |(i, _)| i.abs_diff(j))
                            .collect::<Vec<_>>()
                    })
                    .collect::<Vec<_>>()
            })
            .max()
            .unwrap_or(0);
        let bands = (symmetric && 3 * bandwidth < n.max(3))
            .then(|| operators.iter().map(|m| Band::from_dense(m, bandwidth)).collect());
        Ok(Self {
            operators,
            loads,
            theta_l,
            theta_f,
            param_dim,
            norm_weight,
            symmetric,
            bands,
            coercivity_floor: None,
            ellipticity_floor: None,
            grid: None,
            descriptor: ProblemDescriptor::Custom {
                name: "custom".into(),
            },
            counters: Counters::default(),
        })
    }

    /// Certified lower bound on the smallest singular value of `L(mu)` over the
    /// whole parameter domain.
    pub fn with_coercivity_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(Error::Domain(format!(
                "coercivity floor must be positive, got {floor}"
            )));
        }
        self.coercivity_floor = Some(floor);
        Ok(self)
    }

    pub fn with_grid(mut self, grid: SpatialGrid) -> Result<Self> {
        if grid.len() != self.dof() {
            return Err(Error::Shape(format!(
                "grid with {} nodes for a problem with {} unknowns",
                grid.len(),
                self.dof()
            )));
        }
        self.grid = Some(grid);
        Ok(self)
    }

    pub fn with_descriptor(mut self, descriptor: ProblemDescriptor) -> Self {
        self.descriptor = descriptor;
        self
    }

    pub fn dof(&self) -> usize {
        self.loads[0].len()
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn num_operator_terms(&self) -> usize {
        self.operators.len()
    }

    pub fn num_load_terms(&self) -> usize {
        self.loads.len()
    }

    pub fn operator(&self, q: usize) -> &DMatrix<f64> {
        &self.operators[q]
    }

    pub fn load(&self, q: usize) -> &DVector<f64> {
        &self.loads[q]
    }

    pub fn operator_coefficients(&self) -> &[Coefficient] {
        &self.theta_l
    }

    pub fn load_coefficients(&self) -> &[Coefficient] {
        &self.theta_f
    }

    pub fn norm_weight(&self) -> f64 {
        self.norm_weight
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn coercivity_floor(&self) -> Option<f64> {
        self.coercivity_floor
    }

    /// Analytic lower bound `a_min` on the diffusion coefficient, when known.
    pub fn ellipticity_floor(&self) -> Option<f64> {
        self.ellipticity_floor
    }

    pub fn grid(&self) -> Option<&SpatialGrid> {
        self.grid.as_ref()
    }

    pub fn descriptor(&self) -> &ProblemDescriptor {
        &self.descriptor
    }

    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        self.norm_weight.sqrt() * v.norm()
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.norm_weight * u.dot(v)
    }

    pub fn check_parameter(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.param_dim {
            return Err(Error::Shape(format!(
                "parameter of length {} for a {}-dimensional problem",
                mu.len(),
                self.param_dim
            )));
        }
        if let Some(x) = mu.iter().find(|x| !(x.abs() <= 1.0 + 1e-12)) {
            return Err(Error::Domain(format!("parameter entry {x} outside [-1, 1]")));
        }
        Ok(())
    }

    pub fn operator_thetas(&self, mu: &[f64]) -> Result<Vec<f64>> {
        self.check_parameter(mu)?;
        Ok(self.theta_l.iter().map(|c| c.eval(mu)).collect())
    }

    pub fn load_thetas(&self, mu: &[f64]) -> Result<Vec<f64>> {
        self.check_parameter(mu)?;
        Ok(self.theta_f.iter().map(|c| c.eval(mu)).collect())
    }

    pub fn assemble_at(&self, mu: &[f64]) -> Result<DMatrix<f64>> {
        let thetas = self.operator_thetas(mu)?;
        let mut m = DMatrix::zeros(self.dof(), self.dof());
        for (t, op) in thetas.iter().zip(&self.operators) {
            m.zip_apply(op, |a, b| *a += t * b);
        }
        Ok(m)
    }

    pub fn load_at(&self, mu: &[f64]) -> Result<DVector<f64>> {
        let thetas = self.load_thetas(mu)?;
        let mut f = DVector::zeros(self.dof());
        for (t, load) in thetas.iter().zip(&self.loads) {
            f.axpy(*t, load, 1.0);
        }
        Ok(f)
    }

    /// Solves `L(mu) u = f(mu)`: banded Cholesky for symmetric positive definite
    /// banded systems, dense LU otherwise.
    pub fn truth_solve(&self, mu: &[f64]) -> Result<TruthSolution> {
        let start = Instant::now();
        let thetas = self.operator_thetas(mu)?;
        let f = self.load_at(mu)?;
        self.counters.solves.fetch_add(1, Ordering::Relaxed);
        self.counters.factorizations.fetch_add(1, Ordering::Relaxed);

        let banded = self.bands.as_ref().and_then(|bands| {
            let mut combined = Band {
                n: bands[0].n,
                p: bands[0].p,
                data: vec![0.0; bands[0].data.len()],
            };
            for (t, b) in thetas.iter().zip(bands) {
                for (c, v) in combined.data.iter_mut().zip(&b.data) {
                    *c += t * v;
                }
            }
            combined.factor()
        });
        let values = match banded {
            Some(chol) => {
                let mut u = f.clone();
                chol.solve_factored(u.as_mut_slice());
                u
            }
            None => self
                .assemble_at(mu)?
                .lu()
                .solve(&f)
                .ok_or_else(|| Error::Numeric(format!("singular truth operator at mu = {mu:?}")))?,
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite truth solution at mu = {mu:?}"
            )));
        }
        Ok(TruthSolution {
            values,
            mu: mu.to_vec(),
            elapsed: start.elapsed(),
        })
    }

    /// `sigma_min(L(mu))` by a dense eigen- or singular value decomposition.
    pub fn smallest_singular_value(&self, mu: &[f64]) -> Result<f64> {
        let m = self.assemble_at(mu)?;
        self.counters.factorizations.fetch_add(1, Ordering::Relaxed);
        let sigma = if self.symmetric {
            m.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, v| a.min(v.abs()))
        } else {
            m.singular_values().min()
        };
        Ok(sigma)
    }

    /// `U >= ||u(mu)||` for all `mu`: `sum_q sup|theta^f_q| ||f_q|| / floor`.
    pub fn uniform_bound(&self) -> Result<f64> {
        let floor = self.coercivity_floor.ok_or_else(|| {
            Error::Config("uniform bound needs a certified coercivity floor".into())
        })?;
        let load: f64 = self
            .theta_f
            .iter()
            .zip(&self.loads)
            .map(|(c, f)| c.sup_abs() * self.norm(f))
            .sum();
        Ok(load / floor)
    }

    /// Number of truth solves performed on this problem.
    pub fn truth_solve_count(&self) -> usize {
        self.counters.solves.load(Ordering::Relaxed)
    }

    /// Number of full-order factorizations and decompositions performed.
    pub fn factorization_count(&self) -> usize {
        self.counters.factorizations.load(Ordering::Relaxed)
    }
}

/// `sum_{k=1}^K 1/k^2`, the largest possible fluctuation of the benchmark coefficient.
pub fn fluctuation_bound(k: usize) -> f64 {
    (1..=k).map(|j| 1.0 / (j * j) as f64).sum()
}

/// `a(x, mu) = A + sum_k cos(30 mu_k - 1) / k^2 * cos(k x) sin(k y)`, `f = 1`.
pub fn assemble_benchmark_problem(k: usize, a: f64, grid: SpatialGrid) -> Result<AffineProblem> {
    if k == 0 {
        return Err(Error::Domain("the random coefficient needs K >= 1".into()));
    }
    let bound = fluctuation_bound(k);
    if !(a > bound) {
        return Err(Error::Domain(format!(
            "A = {a} does not exceed sum 1/k^2 = {bound} for K = {k}; the coefficient is not uniformly elliptic"
        )));
    }
    let mut operators = vec![discretize_diffusion(&grid, |_, _| 1.0)];
    let mut theta_l = vec![Coefficient::Constant { value: a }];
    for j in 1..=k {
        let kf = j as f64;
        operators.push(discretize_diffusion(&grid, |x, y| {
            (kf * x).cos() * (kf * y).sin()
        }));
        theta_l.push(Coefficient::Cosine {
            dim: j - 1,
            freq: 30.0,
            phase: -1.0,
            scale: 1.0 / (kf * kf),
        });
    }
    let loads = vec![DVector::from_element(grid.len(), 1.0)];
    let theta_f = vec![Coefficient::Constant { value: 1.0 }];
    let a_min = a - bound;
    let mut problem = AffineProblem::new(operators, theta_l, loads, theta_f, k, grid.cell_area())?
        .with_coercivity_floor(a_min * grid.laplacian_min_eigenvalue())?
        .with_grid(grid)?
        .with_descriptor(ProblemDescriptor::Benchmark {
            k,
            a,
            nx: grid.nx(),
            ny: grid.ny(),
        });
    problem.ellipticity_floor = Some(a_min);
    Ok(problem)
}

/// Small problems with known answers.
pub mod toy {
    use super::*;

    /// `-A lap u = f` with a parameter that nothing depends on.
    pub fn poisson(a: f64, grid: SpatialGrid, load: f64) -> Result<AffineProblem> {
        let mut p = AffineProblem::new(
            vec![discretize_diffusion(&grid, |_, _| 1.0)],
            vec![Coefficient::Constant { value: a }],
            vec![DVector::from_element(grid.len(), 1.0)],
            vec![Coefficient::Constant { value: load }],
            1,
            grid.cell_area(),
        )?
        .with_coercivity_floor(a * grid.laplacian_min_eigenvalue())?
        .with_grid(grid)?
        .with_descriptor(ProblemDescriptor::Custom {
            name: format!("poisson(a={a},load={load})"),
        });
        p.ellipticity_floor = Some(a);
        Ok(p)
    }

    /// Fixed Laplacian, load `(1 + mu_1 / 2) f_0`: the solution manifold is a line.
    pub fn rank_one(grid: SpatialGrid) -> Result<AffineProblem> {
        Ok(AffineProblem::new(
            vec![discretize_diffusion(&grid, |_, _| 1.0)],
            vec![Coefficient::Constant { value: 1.0 }],
            vec![DVector::from_fn(grid.len(), |i, _| {
                let (x, y) = grid.coordinates(i);
                1.0 + 0.5 * x * y
            })],
            vec![Coefficient::Linear {
                dim: 0,
                scale: 0.5,
                offset: 1.0,
            }],
            1,
            grid.cell_area(),
        )?
        .with_coercivity_floor(grid.laplacian_min_eigenvalue())?
        .with_grid(grid)?
        .with_descriptor(ProblemDescriptor::Custom {
            name: "rank_one".into(),
        }))
    }

    /// `(3 + mu) u = 1` on `n` decoupled unknowns with unit norm weight.
    pub fn reaction(n: usize) -> Result<AffineProblem> {
        AffineProblem::new(
            vec![DMatrix::identity(n, n)],
            vec![Coefficient::Linear {
                dim: 0,
                scale: 1.0,
                offset: 3.0,
            }],
            vec![DVector::from_element(n, 1.0)],
            vec![Coefficient::Constant { value: 1.0 }],
            1,
            1.0,
        )?
        .with_coercivity_floor(2.0)
        .map(|p| {
            p.with_descriptor(ProblemDescriptor::Custom {
                name: format!("reaction({n})"),
            })
        })
    }

    /// `diag(2, 3) u = (1, 1)`.
    pub fn diagonal() -> Result<AffineProblem> {
        AffineProblem::new(
            vec![DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]))],
            vec![Coefficient::Constant { value: 1.0 }],
            vec![DVector::from_element(2, 1.0)],
            vec![Coefficient::Constant { value: 1.0 }],
            1,
            1.0,
        )?
        .with_coercivity_floor(2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_geometry() {
        let g = SpatialGrid::new(3, 2).unwrap();
        assert_eq!(g.len(), 6);
        assert_relative_eq!(g.hx(), 0.5);
        assert_relative_eq!(g.x(0), -0.5);
        assert_relative_eq!(g.x(2), 0.5);
        assert_eq!(g.coordinates(g.index(2, 1)), (0.5, g.y(1)));
        assert!(SpatialGrid::new(0, 4).is_err());
    }

    #[test]
    fn laplacian_min_eigenvalue_matches_dense_eigensolver() {
        let g = SpatialGrid::new(7, 5).unwrap();
        let lap = discretize_diffusion(&g, |_, _| 1.0);
        let min = lap.symmetric_eigenvalues().min();
        assert_relative_eq!(min, g.laplacian_min_eigenvalue(), max_relative = 1e-12);
    }

    #[test]
    fn coefficient_evaluation() {
        let c = Coefficient::Cosine {
            dim: 0,
            freq: 30.0,
            phase: -1.0,
            scale: 1.0,
        };
        assert_relative_eq!(c.eval(&[1.0 / 30.0]), 1.0, epsilon = 1e-15);
        let l = Coefficient::Linear {
            dim: 1,
            scale: -2.0,
            offset: 1.0,
        };
        assert_eq!(l.eval(&[0.0, 0.5]), 0.0);
        assert_eq!(l.sup_abs(), 3.0);
    }

    #[test]
    fn benchmark_problem_term_counts_and_floor() {
        let g = SpatialGrid::new(5, 5).unwrap();
        for k in 1..=6 {
            let p = assemble_benchmark_problem(k, 5.0, g).unwrap();
            assert_eq!(p.num_operator_terms(), k + 1);
            assert_eq!(p.num_load_terms(), 1);
            assert!(p.is_symmetric());
        }
        let p = assemble_benchmark_problem(6, 5.0, g).unwrap();
        let a_min = p.ellipticity_floor().unwrap();
        assert!(a_min >= 5.0 - std::f64::consts::PI.powi(2) / 6.0);
        assert!(matches!(
            assemble_benchmark_problem(2, 1.2, g),
            Err(Error::Domain(_))
        ));
        assert!(assemble_benchmark_problem(0, 5.0, g).is_err());
    }

    #[test]
    fn parameters_outside_the_box_are_rejected() {
        let g = SpatialGrid::new(3, 3).unwrap();
        let p = assemble_benchmark_problem(2, 5.0, g).unwrap();
        assert!(matches!(p.assemble_at(&[0.0, 1.5]), Err(Error::Domain(_))));
        assert!(matches!(p.truth_solve(&[0.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn banded_and_dense_solves_agree() {
        let g = SpatialGrid::new(9, 7).unwrap();
        let p = assemble_benchmark_problem(3, 5.0, g).unwrap();
        assert!(p.bands.is_some());
        let mu = [0.3, -0.7, 0.1];
        let u = p.truth_solve(&mu).unwrap().values;
        let dense = p.assemble_at(&mu).unwrap().lu().solve(&p.load_at(&mu).unwrap()).unwrap();
        assert!((u - dense).amax() <= 1e-13);
    }

    #[test]
    fn diagonal_toy() {
        let p = toy::diagonal().unwrap();
        let u = p.truth_solve(&[0.0]).unwrap().values;
        assert_relative_eq!(u[0], 0.5);
        assert_relative_eq!(u[1], 1.0 / 3.0);
        assert_relative_eq!(p.smallest_singular_value(&[0.0]).unwrap(), 2.0);
    }

    #[test]
    fn counters_track_solves() {
        let p = toy::reaction(3).unwrap();
        p.truth_solve(&[0.5]).unwrap();
        p.truth_solve(&[0.1]).unwrap();
        assert_eq!(p.truth_solve_count(), 2);
        assert_eq!(p.clone().truth_solve_count(), 0);
    }
}
