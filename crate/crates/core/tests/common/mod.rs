//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use std::f64::consts::PI;

/// `E[mu^d]` for the uniform density `1/2` on `[-1, 1]`.
pub fn uniform_moment(d: usize) -> f64 {
    if d % 2 == 1 {
        0.0
    } else {
        1.0 / (d + 1) as f64
    }
}

/// `E[mu^d]` for the density `3/4 (1 - mu^2)` on `[-1, 1]`.
pub fn beta22_moment(d: usize) -> f64 {
    if d % 2 == 1 {
        0.0
    } else {
        3.0 / ((d + 1) * (d + 3)) as f64
    }
}

/// Center value of `-lap u = 1` on `[-1, 1]^2`, `u = 0` on the boundary.
///
/// Writes `u = (1 - x^2)/2 - sum_k a_k cos(k pi x / 2) cosh(k pi y / 2) / cosh(k pi / 2)`
/// over odd `k`, with `a_k` the cosine coefficients of `(1 - x^2)/2`.
pub fn poisson_center_value() -> f64 {
    let mut u = 0.5;
    for k in (1..200).step_by(2) {
        let kf = k as f64;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let a = 16.0 * sign / (kf.powi(3) * PI.powi(3));
        u -= a / (kf * PI / 2.0).cosh();
    }
    u
}

/// `a(x, y; mu) = A + sum_k cos(30 mu_k - 1)/k^2 cos(k x) sin(k y)`.
pub fn benchmark_coefficient(a: f64, mu: &[f64], x: f64, y: f64) -> f64 {
    let mut c = a;
    for (j, m) in mu.iter().enumerate() {
        let k = (j + 1) as f64;
        c += (30.0 * m - 1.0).cos() / (k * k) * (k * x).cos() * (k * y).sin();
    }
    c
}

/// Flux-form finite differences for `-div(c grad u)` on the interior of an
/// `(nx + 2)^2` grid over `[-1, 1]^2`, assembled by summing edge fluxes.
pub fn fd_operator(nx: usize, ny: usize, c: impl Fn(f64, f64) -> f64) -> DMatrix<f64> {
    let hx = 2.0 / (nx + 1) as f64;
    let hy = 2.0 / (ny + 1) as f64;
    let n = nx * ny;
    let node = |i: usize, j: usize| -> (f64, f64) { (-1.0 + (i + 1) as f64 * hx, -1.0 + (j + 1) as f64 * hy) };
    let mut m = DMatrix::zeros(n, n);
    // loop over edges, including those touching the boundary
    for j in 0..ny {
        for i in 0..=nx {
            // edge between (i-1, j) and (i, j) in interior numbering
            let x_mid = -1.0 + (i as f64 + 0.5) * hx;
            let y = node(0, j).1;
            let k = c(x_mid, y) / (hx * hx);
            let left = (i > 0).then(|| (i - 1) + nx * j);
            let right = (i < nx).then(|| i + nx * j);
            add_edge(&mut m, left, right, k);
        }
    }
    for i in 0..nx {
        for j in 0..=ny {
            let y_mid = -1.0 + (j as f64 + 0.5) * hy;
            let x = node(i, 0).0;
            let k = c(x, y_mid) / (hy * hy);
            let low = (j > 0).then(|| i + nx * (j - 1));
            let high = (j < ny).then(|| i + nx * j);
            add_edge(&mut m, low, high, k);
        }
    }
    m
}

fn add_edge(m: &mut DMatrix<f64>, a: Option<usize>, b: Option<usize>, k: f64) {
    if let Some(a) = a {
        m[(a, a)] += k;
    }
    if let Some(b) = b {
        m[(b, b)] += k;
    }
    if let (Some(a), Some(b)) = (a, b) {
        m[(a, b)] -= k;
        m[(b, a)] -= k;
    }
}

/// `argmin_c ||A c - f||_2` through the SVD of `A`.
pub fn least_squares(a: &DMatrix<f64>, f: &DVector<f64>) -> DVector<f64> {
    a.clone().svd(true, true).solve(f, 1e-14).expect("svd solve")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mu(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn vec_rel_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
}
