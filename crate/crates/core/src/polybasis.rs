//! Orthonormal polynomial families and total-degree tensor bases.
//!
//! Every family is orthonormal with respect to a *probability* density on [-1, 1],
//! so `phi_0 == 1` and the gPC mean is the first coefficient.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest multi-index set we are willing to materialise.
pub const MAX_BASIS_SIZE: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Legendre,
    Jacobi,
}

/// Orthonormal family for the normalized Jacobi density
/// `rho(x) = (1 - x)^alpha (1 + x)^beta / Z` on [-1, 1].
///
/// Legendre is the `alpha = beta = 0` case (uniform density 1/2). The Beta(a, b)
/// distribution on [-1, 1] corresponds to exponents `(b - 1, a - 1)`, so Beta(2, 2)
/// is Jacobi (1, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFamily {
    kind: FamilyKind,
    alpha: f64,
    beta: f64,
    density_normalizer: f64,
}

impl PolynomialFamily {
    pub fn new(kind: FamilyKind, shape: Option<(f64, f64)>) -> Result<Self> {
        let (alpha, beta) = match (kind, shape) {
            (FamilyKind::Legendre, None) | (FamilyKind::Legendre, Some((0.0, 0.0))) => (0.0, 0.0),
            (FamilyKind::Legendre, Some(s)) => {
                return Err(Error::Domain(format!(
                    "Legendre family takes no shape exponents, got {s:?}"
                )))
            }
            (FamilyKind::Jacobi, None) => {
                return Err(Error::Domain(
                    "Jacobi family requires shape exponents (alpha, beta)".into(),
                ))
            }
            (FamilyKind::Jacobi, Some((a, b))) => (a, b),
        };
        if !(alpha.is_finite() && beta.is_finite() && alpha > -1.0 && beta > -1.0) {
            return Err(Error::Domain(format!(
                "Jacobi exponents must exceed -1, got ({alpha}, {beta})"
            )));
        }
        // Z = 2^(a+b+1) B(a+1, b+1)
        let ln_z = (alpha + beta + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0)
            + ln_gamma(beta + 1.0)
            - ln_gamma(alpha + beta + 2.0);
        Ok(Self {
            kind,
            alpha,
            beta,
            density_normalizer: (-ln_z).exp(),
        })
    }

    pub fn legendre() -> Self {
        Self::new(FamilyKind::Legendre, None).expect("Legendre is always valid")
    }

    /// Orthonormal family of the Beta(2, 2) distribution rescaled to [-1, 1].
    pub fn beta22() -> Self {
        Self::new(FamilyKind::Jacobi, Some((1.0, 1.0))).expect("(1, 1) is a valid shape")
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn shape(&self) -> (f64, f64) {
        (self.alpha, self.beta)
    }

    pub fn support(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }

    pub fn density(&self, x: f64) -> f64 {
        if !(-1.0..=1.0).contains(&x) {
            return 0.0;
        }
        self.density_normalizer * (1.0 - x).powf(self.alpha) * (1.0 + x).powf(self.beta)
    }

    /// Recurrence coefficients `(a_n, b_n)` of
    /// `x phi_n = b_{n+1} phi_{n+1} + a_n phi_n + b_n phi_{n-1}`, with `b_0 = 0`.
    pub fn recurrence(&self, n: usize) -> (f64, f64) {
        let (a, b) = (self.alpha, self.beta);
        let nf = n as f64;
        let s = 2.0 * nf + a + b;
        let diag = if n == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        let off = match n {
            0 => 0.0,
            // the general formula has a removable 0/0 at n = 1 when a + b = -1
            1 => (4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b))).sqrt(),
            _ => (4.0 * nf * (nf + a) * (nf + b) * (nf + a + b)
                / (s * s * (s + 1.0) * (s - 1.0)))
                .sqrt(),
        };
        (diag, off)
    }

    /// Value of the degree-`degree` orthonormal polynomial at `x`.
    pub fn eval(&self, degree: usize, x: f64) -> f64 {
        let mut prev = 0.0;
        let mut cur = 1.0;
        for n in 0..degree {
            let (a_n, b_n) = self.recurrence(n);
            let (_, b_next) = self.recurrence(n + 1);
            let next = ((x - a_n) * cur - b_n * prev) / b_next;
            prev = cur;
            cur = next;
        }
        cur
    }

    /// Fills `out[n] = phi_n(x)` for `n < out.len()`.
    pub fn eval_all(&self, x: f64, out: &mut [f64]) {
        if out.is_empty() {
            return;
        }
        out[0] = 1.0;
        let mut prev = 0.0;
        for n in 0..out.len() - 1 {
            let (a_n, b_n) = self.recurrence(n);
            let (_, b_next) = self.recurrence(n + 1);
            out[n + 1] = ((x - a_n) * out[n] - b_n * prev) / b_next;
            prev = out[n];
        }
    }

    /// `(phi_n(x), phi_n'(x))`, used for Newton refinement of Gauss nodes.
    pub(crate) fn eval_with_derivative(&self, degree: usize, x: f64) -> (f64, f64) {
        let (mut p_prev, mut p) = (0.0, 1.0);
        let (mut d_prev, mut d) = (0.0, 0.0);
        for n in 0..degree {
            let (a_n, b_n) = self.recurrence(n);
            let (_, b_next) = self.recurrence(n + 1);
            let p_next = ((x - a_n) * p - b_n * p_prev) / b_next;
            let d_next = (p + (x - a_n) * d - b_n * d_prev) / b_next;
            p_prev = p;
            p = p_next;
            d_prev = d;
            d = d_next;
        }
        (p, d)
    }
}

/// Free-function form of [`PolynomialFamily::new`].
pub fn make_family(kind: FamilyKind, shape: Option<(f64, f64)>) -> Result<PolynomialFamily> {
    PolynomialFamily::new(kind, shape)
}

pub fn eval_univariate(family: &PolynomialFamily, degree: usize, point: f64) -> f64 {
    family.eval(degree, point)
}

/// Total-degree multi-index set in graded lexicographic order.
///
/// Indices are grouped by total degree; within a degree they are sorted
/// lexicographically, largest first, with the first coordinate most significant.
/// For `K = 2` this gives `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiIndexSet {
    dim: usize,
    degree: usize,
    indices: Vec<Vec<usize>>,
}

impl MultiIndexSet {
    pub fn total_degree(dim: usize, degree: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("parameter dimension must be at least 1".into()));
        }
        let size = binomial(dim + degree, dim).ok_or_else(|| {
            Error::Capacity(format!(
                "binomial({}, {dim}) overflows",
                dim + degree
            ))
        })?;
        if size > MAX_BASIS_SIZE as u128 {
            return Err(Error::Capacity(format!(
                "total-degree space of size {size} exceeds the limit {MAX_BASIS_SIZE}"
            )));
        }
        let mut indices = Vec::with_capacity(size as usize);
        let mut scratch = vec![0usize; dim];
        for d in 0..=degree {
            push_compositions(&mut scratch, 0, d, &mut indices);
        }
        debug_assert_eq!(indices.len() as u128, size);
        Ok(Self {
            dim,
            degree,
            indices,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn get(&self, m: usize) -> &[usize] {
        &self.indices[m]
    }

    /// Position of `alpha` in the ordering.
    pub fn position(&self, alpha: &[usize]) -> Option<usize> {
        self.indices.iter().position(|a| a == alpha)
    }

    /// Evaluates all `Phi_m(mu)` into `out` (length `M`).
    pub fn eval_into(
        &self,
        families: &[PolynomialFamily],
        mu: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        if families.len() != self.dim || mu.len() != self.dim {
            return Err(Error::Shape(format!(
                "expected {} families and a point of length {}, got {} and {}",
                self.dim,
                self.dim,
                families.len(),
                mu.len()
            )));
        }
        if out.len() != self.len() {
            return Err(Error::Shape(format!(
                "output has length {}, basis has {} terms",
                out.len(),
                self.len()
            )));
        }
        let p1 = self.degree + 1;
        let mut table = vec![0.0; self.dim * p1];
        for (k, (family, &x)) in families.iter().zip(mu).enumerate() {
            family.eval_all(x, &mut table[k * p1..(k + 1) * p1]);
        }
        for (value, alpha) in out.iter_mut().zip(&self.indices) {
            *value = alpha
                .iter()
                .enumerate()
                .map(|(k, &a)| table[k * p1 + a])
                .product();
        }
        Ok(())
    }
}

fn push_compositions(
    scratch: &mut [usize],
    pos: usize,
    remaining: usize,
    out: &mut Vec<Vec<usize>>,
) {
    if pos + 1 == scratch.len() {
        scratch[pos] = remaining;
        out.push(scratch.to_vec());
        return;
    }
    for first in (0..=remaining).rev() {
        scratch[pos] = first;
        push_compositions(scratch, pos + 1, remaining - first, out);
    }
    scratch[pos] = 0;
}

/// Exact binomial coefficient, `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at each step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

pub fn total_degree_set(dim: usize, degree: usize) -> Result<MultiIndexSet> {
    MultiIndexSet::total_degree(dim, degree)
}

/// Vector of `Phi_m(mu)` for every index of `set`.
pub fn eval_multivariate(
    set: &MultiIndexSet,
    families: &[PolynomialFamily],
    mu: &[f64],
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; set.len()];
    set.eval_into(families, mu, &mut out)?;
    Ok(out)
}
