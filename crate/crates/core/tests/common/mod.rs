//! Independent reference computations for the integration tests.
//!
//! Nothing here calls into the solver paths it is used to check: dot
//! products, Gramians, projections and LCA steps are written as plain loops
//! over nested `Vec`s.
#![allow(dead_code, clippy::needless_range_loop)]

pub mod properties;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use vitlca::embedset::EmbeddingSet;
use vitlca::lca::Dictionary;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn unit_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let v = gaussian_vec(rng, n);
    let norm = naive_dot(&v, &v).sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

pub fn naive_dot(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        s += x[i] * y[i];
    }
    s
}

pub fn rows(dict: &Dictionary) -> Vec<Vec<f64>> {
    (0..dict.len()).map(|i| dict.atom(i).to_vec()).collect()
}

pub fn naive_gram(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = rows.len();
    let mut g = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            g[i][j] = naive_dot(&rows[i], &rows[j]);
        }
    }
    g
}

pub fn naive_projection(x: &[f64], rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().map(|r| naive_dot(x, r)).collect()
}

pub fn naive_reconstruct(a: &[f64], rows: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; rows[0].len()];
    for (i, r) in rows.iter().enumerate() {
        for j in 0..r.len() {
            out[j] += a[i] * r[j];
        }
    }
    out
}

pub fn shrink(u: f64, lambda: f64) -> f64 {
    if u > lambda {
        u - lambda
    } else if u < -lambda {
        u + lambda
    } else {
        0.0
    }
}

/// The neuron ODE integrated literally: every neuron sums `G[i][m] a[m]`
/// over all `m != i`.
pub fn scalar_lca_step(
    u: &[f64],
    a: &[f64],
    b: &[f64],
    g: &[Vec<f64>],
    rate: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let m = u.len();
    let mut u_next = vec![0.0; m];
    for i in 0..m {
        let mut inhib = 0.0;
        for k in 0..m {
            if k != i {
                inhib += g[i][k] * a[k];
            }
        }
        u_next[i] = u[i] + rate * (b[i] - u[i] - inhib);
    }
    let a_next = u_next.iter().map(|&v| shrink(v, lambda)).collect();
    (u_next, a_next)
}

/// Cyclic coordinate descent on `0.5 ||x - sum a_i r_i||^2 + lambda ||a||_1`
/// for unit-norm rows.
pub fn lasso_coordinate_descent(x: &[f64], rows: &[Vec<f64>], lambda: f64, sweeps: usize) -> Vec<f64> {
    let m = rows.len();
    let mut a = vec![0.0; m];
    let mut resid = x.to_vec();
    for _ in 0..sweeps {
        for i in 0..m {
            let rho = naive_dot(&rows[i], &resid) + a[i];
            let new = shrink(rho, lambda);
            let delta = new - a[i];
            if delta != 0.0 {
                for j in 0..resid.len() {
                    resid[j] -= delta * rows[i][j];
                }
                a[i] = new;
            }
        }
    }
    a
}

pub fn lasso_value(x: &[f64], a: &[f64], rows: &[Vec<f64>], lambda: f64) -> f64 {
    let r = naive_reconstruct(a, rows);
    let mut sq = 0.0;
    for j in 0..x.len() {
        sq += (x[j] - r[j]) * (x[j] - r[j]);
    }
    0.5 * sq + lambda * a.iter().map(|v| v.abs()).sum::<f64>()
}

/// `m` rows close to an orthonormal set: Gram-Schmidt on random vectors,
/// perturbed by `jitter` and renormalized. Requires `m <= n`.
pub fn near_orthogonal_rows(rng: &mut impl Rng, m: usize, n: usize, jitter: f64) -> Vec<Vec<f64>> {
    assert!(m <= n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    while basis.len() < m {
        let mut v = gaussian_vec(rng, n);
        for q in &basis {
            let p = naive_dot(&v, q);
            for j in 0..n {
                v[j] -= p * q[j];
            }
        }
        let norm = naive_dot(&v, &v).sqrt();
        if norm > 1e-6 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
        .into_iter()
        .map(|q| {
            let noise = gaussian_vec(rng, n);
            let v: Vec<f64> = q.iter().zip(&noise).map(|(a, e)| a + jitter * e / (n as f64).sqrt()).collect();
            let norm = naive_dot(&v, &v).sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}

/// Accuracy of assigning each test vector to the class whose mean training
/// vector has the highest cosine similarity.
pub fn nearest_centroid_accuracy(train: &EmbeddingSet, test: &EmbeddingSet) -> f64 {
    let n = train.n_dim();
    let mut centroids = vec![vec![0.0; n]; train.n_classes()];
    for r in train.records() {
        for j in 0..n {
            centroids[r.label as usize][j] += r.vector[j] as f64;
        }
    }
    let correct = test
        .records()
        .iter()
        .filter(|r| {
            let x: Vec<f64> = r.vector.iter().map(|&v| v as f64).collect();
            let mut best = (0usize, f64::NEG_INFINITY);
            for (c, cen) in centroids.iter().enumerate() {
                let s = naive_dot(&x, cen) / naive_dot(cen, cen).sqrt();
                if s > best.1 {
                    best = (c, s);
                }
            }
            best.0 as u32 == r.label
        })
        .count();
    correct as f64 / test.len() as f64
}

/// Accuracy of the label of the single training vector with highest cosine
/// similarity.
pub fn nearest_atom_accuracy(train: &EmbeddingSet, test: &EmbeddingSet) -> f64 {
    let atoms: Vec<(Vec<f64>, u32)> = train
        .records()
        .iter()
        .map(|r| {
            let v: Vec<f64> = r.vector.iter().map(|&x| x as f64).collect();
            let norm = naive_dot(&v, &v).sqrt();
            (v.into_iter().map(|x| x / norm).collect(), r.label)
        })
        .collect();
    let correct = test
        .records()
        .iter()
        .filter(|r| {
            let x: Vec<f64> = r.vector.iter().map(|&v| v as f64).collect();
            let mut best = (0u32, f64::NEG_INFINITY);
            for (a, l) in &atoms {
                let s = naive_dot(&x, a);
                if s > best.1 {
                    best = (*l, s);
                }
            }
            best.0 == r.label
        })
        .count();
    correct as f64 / test.len() as f64
}

/// Multiplies and adds of a naive upper-triangle Gramian, counted by
/// walking the loops.
pub fn enumerate_gramian_ops(m: u64, n: u64) -> u64 {
    let mut ops = 0;
    for i in 0..m {
        for _j in i..m {
            ops += n; // multiplies
            ops += n - 1; // adds
        }
    }
    ops
}

/// A sparse-recovery problem with a known answer: `x` is a combination of a
/// few atoms of a nearly orthogonal dictionary plus small noise.
pub struct Planted {
    pub rows: Vec<Vec<f64>>,
    pub x: Vec<f64>,
    pub support: Vec<usize>,
    pub lambda: f64,
}

pub fn planted_instance(seed: u64) -> Planted {
    let mut r = rng(seed);
    let n = 20;
    let m = r.random_range(8..=20);
    let rows = near_orthogonal_rows(&mut r, m, n, 0.05);
    let k = r.random_range(2..=3);
    let mut support: Vec<usize> = rand::seq::index::sample(&mut r, m, k).into_vec();
    support.sort_unstable();
    let mut x: Vec<f64> = gaussian_vec(&mut r, n)
        .into_iter()
        .map(|e| 0.01 * e / (n as f64).sqrt())
        .collect();
    for &j in &support {
        let c = r.random_range(0.6..1.0) * if r.random::<bool>() { 1.0 } else { -1.0 };
        for t in 0..n {
            x[t] += c * rows[j][t];
        }
    }
    let b = naive_projection(&x, &rows);
    let lambda = 0.1 * b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    Planted {
        rows,
        x,
        support,
        lambda,
    }
}
