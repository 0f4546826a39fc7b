//! Exact t-SNE: perplexity-calibrated input affinities and KL-divergence
//! gradient descent mapping document vectors to 2D.
//!
//! The implementation is the exact O(n²) algorithm (no Barnes–Hut): pairwise
//! affinities with a per-point precision found by binary search, then
//! momentum gradient descent on KL(P‖Q) with a Student-t Q, early
//! exaggeration ×12 for the first 250 iterations, and a NaN watchdog.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::gaussian_pair;

/// Probability floor applied to off-diagonal affinities and to Q inside the
/// KL sum.
const PROB_FLOOR: f64 = 1e-12;
/// Early-exaggeration factor and the iteration it (and the momentum switch)
/// ends at.
const EXAGGERATION: f64 = 12.0;
const EXAGGERATION_ITERS: usize = 250;
const MOMENTUM_EARLY: f64 = 0.5;
const MOMENTUM_LATE: f64 = 0.8;
/// Bisection budget and entropy tolerance (bits) for the perplexity search.
const CALIBRATION_STEPS: usize = 50;
const ENTROPY_TOL_BITS: f64 = 1e-5;
/// Iterations between non-finite coordinate checks.
const WATCHDOG_PERIOD: usize = 50;

/// Symmetric joint input affinities P with the calibrated per-point betas.
#[derive(Debug, Clone)]
pub struct Affinities {
    pub n: usize,
    /// Row-major n×n joint probabilities; zero diagonal; off-diagonal
    /// entries clamped to ≥ 1e-12; Σ ≈ 1.
    pub p: Vec<f64>,
    pub perplexity: f64,
    /// Per-point precision β_i = 1/(2σ_i²) found by the entropy search.
    pub betas: Vec<f64>,
}

/// t-SNE output coordinates plus run diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Projection {
    /// n×2 coordinates aligned to input row order, centered.
    pub coords: Vec<[f64; 2]>,
    /// KL(P‖Q) at the random initialization (un-exaggerated P).
    pub initial_kl: f64,
    /// KL(P‖Q) at the final coordinates (un-exaggerated P).
    pub final_kl: f64,
    pub iterations: usize,
    pub seed: u64,
}

/// Hyperparameters; `Default` gives the canonical values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            seed: 42,
        }
    }
}

/// Full n×n matrix of squared Euclidean distances (row-major).
pub fn pairwise_sq_dists(x: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 2 {
        return Err(Error::Validation(format!(
            "need at least 2 points for pairwise distances, got {n}"
        )));
    }
    let dim = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::Validation(format!(
                "row {i} has {} entries, expected {dim}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite entry in row {i}")));
        }
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            for (j, slot) in row.iter_mut().enumerate() {
                let d: f64 = x[i]
                    .iter()
                    .zip(&x[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                *slot = d;
            }
            row
        })
        .collect();
    Ok(rows.concat())
}

/// Entropy (bits) and conditional distribution for one row at precision
/// `beta`, with the row's self-distance excluded. Numerically shifted so
/// large `beta` values cannot underflow everything to zero.
fn row_entropy(dists: &[f64], skip: usize, beta: f64, out: &mut [f64]) -> f64 {
    let shift = dists
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != skip)
        .map(|(_, d)| *d)
        .fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    let mut weighted = 0.0;
    for (j, &d) in dists.iter().enumerate() {
        if j == skip {
            out[j] = 0.0;
            continue;
        }
        let w = (-beta * (d - shift)).exp();
        out[j] = w;
        sum += w;
        weighted += (d - shift) * w;
    }
    // The shift guarantees one weight of exp(0) = 1, so sum ≥ 1 here.
    for slot in out.iter_mut() {
        *slot /= sum;
    }
    // H = ln Σw + β·E[d−shift], converted to bits.
    (sum.ln() + beta * weighted / sum) / std::f64::consts::LN_2
}

/// Binary search β_i so the conditional entropy hits log2(perplexity).
fn calibrate_row(dists: &[f64], skip: usize, target_bits: f64) -> (f64, Vec<f64>) {
    let n = dists.len();
    let mut cond = vec![0.0; n];
    let mut beta = 1.0;
    let mut beta_min = f64::NEG_INFINITY;
    let mut beta_max = f64::INFINITY;
    for _ in 0..CALIBRATION_STEPS {
        let entropy = row_entropy(dists, skip, beta, &mut cond);
        let diff = entropy - target_bits;
        if diff.abs() < ENTROPY_TOL_BITS {
            break;
        }
        if diff > 0.0 {
            // Too much entropy: sharpen the kernel.
            beta_min = beta;
            beta = if beta_max.is_finite() {
                (beta + beta_max) / 2.0
            } else {
                beta * 2.0
            };
        } else {
            beta_max = beta;
            beta = if beta_min.is_finite() {
                (beta + beta_min) / 2.0
            } else {
                beta / 2.0
            };
        }
    }
    row_entropy(dists, skip, beta, &mut cond);
    (beta, cond)
}

/// Perplexity calibration: per-point entropy binary search, then
/// symmetrization p_ij = (p_{j|i} + p_{i|j}) / 2n with the off-diagonal
/// floor.
pub fn calibrate_affinities(dists: &[f64], n: usize, perplexity: f64) -> Result<Affinities> {
    if dists.len() != n * n {
        return Err(Error::Validation(format!(
            "distance matrix has {} entries, expected {n}×{n}",
            dists.len()
        )));
    }
    if !(perplexity > 1.0 && perplexity < n as f64) {
        return Err(Error::Validation(format!(
            "perplexity must satisfy 1 < perplexity < n (= {n}), got {perplexity}"
        )));
    }
    let target_bits = perplexity.log2();
    let calibrated: Vec<(f64, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| calibrate_row(&dists[i * n..(i + 1) * n], i, target_bits))
        .collect();
    let mut p = vec![0.0; n * n];
    let scale = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let joint = (calibrated[i].1[j] + calibrated[j].1[i]) / scale;
            p[i * n + j] = joint.max(PROB_FLOOR);
        }
    }
    Ok(Affinities {
        n,
        p,
        perplexity,
        betas: calibrated.into_iter().map(|(beta, _)| beta).collect(),
    })
}

/// Student-t weights w_ij = 1/(1+‖y_i−y_j‖²) (zero diagonal) and their total.
fn student_t_weights(coords: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let n = coords.len();
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            let mut row_sum = 0.0;
            for (j, slot) in row.iter_mut().enumerate() {
                if i == j {
                    continue;
                }
                let dx = coords[i][0] - coords[j][0];
                let dy = coords[i][1] - coords[j][1];
                let w = 1.0 / (1.0 + dx * dx + dy * dy);
                *slot = w;
                row_sum += w;
            }
            (row, row_sum)
        })
        .collect();
    let total: f64 = rows.iter().map(|(_, s)| *s).sum();
    let flat: Vec<f64> = rows.into_iter().flat_map(|(row, _)| row).collect();
    (flat, total)
}

/// KL(P‖Q) for the Student-t Q induced by `coords`, with Q floored at 1e-12.
pub fn kl_divergence(aff: &Affinities, coords: &[[f64; 2]]) -> Result<f64> {
    let n = aff.n;
    if coords.len() != n {
        return Err(Error::Validation(format!(
            "coords have {} rows, affinities have {n}",
            coords.len()
        )));
    }
    let (w, total) = student_t_weights(coords);
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let p = aff.p[i * n + j];
            if p <= 0.0 {
                continue;
            }
            let q = (w[i * n + j] / total).max(PROB_FLOOR);
            kl += p * (p / q).ln();
        }
    }
    if !kl.is_finite() {
        return Err(Error::Numeric(
            "KL divergence overflowed to a non-finite value".into(),
        ));
    }
    Ok(kl)
}

/// Analytic gradient of KL(P‖Q) with respect to each 2D coordinate:
/// ∂KL/∂y_i = 4 Σ_j (p_ij − q_ij)·w_ij·(y_i − y_j).
pub fn kl_gradient(aff: &Affinities, coords: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    gradient_with_exaggeration(aff, coords, 1.0)
}

fn gradient_with_exaggeration(
    aff: &Affinities,
    coords: &[[f64; 2]],
    exaggeration: f64,
) -> Result<Vec<[f64; 2]>> {
    let n = aff.n;
    if coords.len() != n {
        return Err(Error::Validation(format!(
            "coords have {} rows, affinities have {n}",
            coords.len()
        )));
    }
    let (w, total) = student_t_weights(coords);
    let grad: Vec<[f64; 2]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut gx = 0.0;
            let mut gy = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let wij = w[i * n + j];
                let q = wij / total;
                let coeff = 4.0 * (exaggeration * aff.p[i * n + j] - q) * wij;
                gx += coeff * (coords[i][0] - coords[j][0]);
                gy += coeff * (coords[i][1] - coords[j][1]);
            }
            [gx, gy]
        })
        .collect();
    Ok(grad)
}

fn recenter(coords: &mut [[f64; 2]]) {
    let n = coords.len() as f64;
    let mean_x: f64 = coords.iter().map(|c| c[0]).sum::<f64>() / n;
    let mean_y: f64 = coords.iter().map(|c| c[1]).sum::<f64>() / n;
    for c in coords.iter_mut() {
        c[0] -= mean_x;
        c[1] -= mean_y;
    }
}

fn max_abs(grad: &[[f64; 2]]) -> f64 {
    grad.iter()
        .flat_map(|g| g.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Run exact t-SNE on the rows of `x`. Deterministic for a given seed.
pub fn tsne(x: &[Vec<f64>], params: &TsneParams) -> Result<Projection> {
    if !(params.perplexity > 0.0 && params.learning_rate > 0.0) {
        return Err(Error::Validation(
            "perplexity and learning_rate must be positive".into(),
        ));
    }
    if params.iterations == 0 {
        return Err(Error::Validation("iterations must be ≥ 1".into()));
    }
    let n = x.len();
    let dists = pairwise_sq_dists(x)?;
    let aff = calibrate_affinities(&dists, n, params.perplexity)?;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut coords: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            let (a, b) = gaussian_pair(&mut rng);
            [a * 1e-4, b * 1e-4]
        })
        .collect();
    let initial_kl = kl_divergence(&aff, &coords)?;

    let mut velocity = vec![[0.0f64; 2]; n];
    for iter in 0..params.iterations {
        let exaggeration = if iter < EXAGGERATION_ITERS {
            EXAGGERATION
        } else {
            1.0
        };
        let momentum = if iter < EXAGGERATION_ITERS {
            MOMENTUM_EARLY
        } else {
            MOMENTUM_LATE
        };
        let grad = gradient_with_exaggeration(&aff, &coords, exaggeration)?;
        for i in 0..n {
            velocity[i][0] = momentum * velocity[i][0] - params.learning_rate * grad[i][0];
            velocity[i][1] = momentum * velocity[i][1] - params.learning_rate * grad[i][1];
            coords[i][0] += velocity[i][0];
            coords[i][1] += velocity[i][1];
        }
        recenter(&mut coords);
        let last = iter + 1 == params.iterations;
        if (iter + 1) % WATCHDOG_PERIOD == 0 || last {
            let bad = coords.iter().any(|c| !c[0].is_finite() || !c[1].is_finite());
            if bad {
                return Err(Error::Numeric(format!(
                    "non-finite coordinates at iteration {iter} (max |gradient| = {:e})",
                    max_abs(&grad)
                )));
            }
        }
    }
    let final_kl = kl_divergence(&aff, &coords)?;
    Ok(Projection {
        coords,
        initial_kl,
        final_kl,
        iterations: params.iterations,
        seed: params.seed,
    })
}
