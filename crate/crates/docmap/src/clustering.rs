//! Gaussian-mixture clustering of the 2D map by EM, posterior-threshold
//! assignment (documents below the threshold stay Unassigned), and
//! silhouette-ranked exemplar documents per cluster.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::derive_seed;

/// Default posterior needed for assignment: a document is Unassigned when
/// its best posterior is ≤ this value.
pub const DEFAULT_THRESHOLD: f64 = 0.6;
/// Diagonal regularization added to every covariance in each M-step.
const COV_REG: f64 = 1e-6;
const MAX_EM_ITERS: usize = 200;
/// Convergence: mean per-point log-likelihood improvement below this.
const EM_TOL: f64 = 1e-6;
const RESTARTS: usize = 5;
const KMEANS_STEPS: usize = 10;

/// Fitted mixture: parameters, per-point posteriors, and assignments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    /// Mixing weights, sum 1.
    pub weights: Vec<f64>,
    pub means: Vec<[f64; 2]>,
    /// Symmetric positive-definite 2×2 matrices.
    pub covariances: Vec<[[f64; 2]; 2]>,
    /// Total log-likelihood of the data under the returned parameters.
    pub log_likelihood: f64,
    /// n×K responsibilities, rows sum to 1.
    pub posteriors: Vec<Vec<f64>>,
    /// Component index, or None (Unassigned) when max posterior ≤ threshold.
    pub assignments: Vec<Option<usize>>,
    pub threshold: f64,
    /// Per-EM-iteration log-likelihood of the winning restart.
    pub ll_trace: Vec<f64>,
}

impl ClusterModel {
    /// Change the assignment threshold and recompute assignments.
    pub fn set_threshold(&mut self, threshold: f64) {
        self.threshold = threshold;
        self.assignments = assign_with_threshold(&self.posteriors, threshold);
    }
}

/// One silhouette-scored exemplar document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub id: String,
    pub silhouette: f64,
}

/// Per-cluster exemplars, best silhouette first.
pub type Exemplars = BTreeMap<usize, Vec<Exemplar>>;

#[derive(Clone)]
struct Params {
    weights: Vec<f64>,
    means: Vec<[f64; 2]>,
    covs: Vec<[[f64; 2]; 2]>,
}

/// Log density of a 2D Gaussian with the 2×2 covariance in closed form.
fn log_gaussian(x: [f64; 2], mean: [f64; 2], cov: [[f64; 2]; 2]) -> f64 {
    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    let dx = x[0] - mean[0];
    let dy = x[1] - mean[1];
    let maha = (dx * dx * cov[1][1] - 2.0 * dx * dy * cov[0][1] + dy * dy * cov[0][0]) / det;
    -(2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * maha
}

/// Responsibilities and total log-likelihood under `params` (one E-step).
fn e_step(coords: &[[f64; 2]], params: &Params) -> (Vec<Vec<f64>>, f64) {
    let k = params.weights.len();
    let rows: Vec<(Vec<f64>, f64)> = coords
        .par_iter()
        .map(|&x| {
            let logp: Vec<f64> = (0..k)
                .map(|j| {
                    params.weights[j].ln() + log_gaussian(x, params.means[j], params.covs[j])
                })
                .collect();
            let max = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum_exp: f64 = logp.iter().map(|v| (v - max).exp()).sum();
            let lse = max + sum_exp.ln();
            let resp: Vec<f64> = logp.iter().map(|v| (v - lse).exp()).collect();
            (resp, lse)
        })
        .collect();
    let ll = rows.iter().map(|(_, lse)| *lse).sum();
    (rows.into_iter().map(|(resp, _)| resp).collect(), ll)
}

/// Maximum-likelihood parameter update with diagonal regularization.
fn m_step(coords: &[[f64; 2]], posteriors: &[Vec<f64>], previous: &Params) -> Params {
    let n = coords.len();
    let k = previous.weights.len();
    let mut params = previous.clone();
    for j in 0..k {
        let total: f64 = posteriors.iter().map(|row| row[j]).sum();
        if total < 1e-10 {
            // Dead component: keep its parameters, carry the residual weight.
            params.weights[j] = total / n as f64;
            continue;
        }
        let mut mx = 0.0;
        let mut my = 0.0;
        for (x, row) in coords.iter().zip(posteriors) {
            mx += row[j] * x[0];
            my += row[j] * x[1];
        }
        let mean = [mx / total, my / total];
        let mut cxx = 0.0;
        let mut cxy = 0.0;
        let mut cyy = 0.0;
        for (x, row) in coords.iter().zip(posteriors) {
            let dx = x[0] - mean[0];
            let dy = x[1] - mean[1];
            cxx += row[j] * dx * dx;
            cxy += row[j] * dx * dy;
            cyy += row[j] * dy * dy;
        }
        params.weights[j] = total / n as f64;
        params.means[j] = mean;
        params.covs[j] = [
            [cxx / total + COV_REG, cxy / total],
            [cxy / total, cyy / total + COV_REG],
        ];
    }
    params
}

fn nearest_center(x: [f64; 2], centers: &[[f64; 2]]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centers.iter().enumerate() {
        let d = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    (best, best_d)
}

/// k-means++ seeding followed by a fixed number of Lloyd steps.
fn kmeans_init(coords: &[[f64; 2]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let n = coords.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(coords[rng.gen_range(0..n)]);
    while centers.len() < k {
        let d2: Vec<f64> = coords.iter().map(|&x| nearest_center(x, &centers).1).collect();
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in d2.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centers.push(coords[next]);
    }
    for _ in 0..KMEANS_STEPS {
        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for &x in coords {
            let (j, _) = nearest_center(x, &centers);
            sums[j][0] += x[0];
            sums[j][1] += x[1];
            counts[j] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = [sums[j][0] / counts[j] as f64, sums[j][1] / counts[j] as f64];
            }
        }
    }
    centers
}

/// Initial GMM parameters from the k-means partition.
fn initial_params(coords: &[[f64; 2]], centers: &[[f64; 2]]) -> Params {
    let n = coords.len();
    let k = centers.len();
    let labels: Vec<usize> = coords.iter().map(|&x| nearest_center(x, centers).0).collect();
    let global = sample_cov(coords.iter().copied());
    let mut params = Params {
        weights: vec![0.0; k],
        means: centers.to_vec(),
        covs: vec![global; k],
    };
    for j in 0..k {
        let members: Vec<[f64; 2]> = coords
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l == j)
            .map(|(x, _)| *x)
            .collect();
        // Smoothed weights keep every component alive at the start.
        params.weights[j] = (members.len() as f64 + 1.0) / (n as f64 + k as f64);
        if members.len() >= 2 {
            params.covs[j] = sample_cov(members.iter().copied());
        }
    }
    let total: f64 = params.weights.iter().sum();
    for w in &mut params.weights {
        *w /= total;
    }
    params
}

fn sample_cov(points: impl Iterator<Item = [f64; 2]> + Clone) -> [[f64; 2]; 2] {
    let n = points.clone().count() as f64;
    let mx = points.clone().map(|p| p[0]).sum::<f64>() / n;
    let my = points.clone().map(|p| p[1]).sum::<f64>() / n;
    let mut cxx = 0.0;
    let mut cxy = 0.0;
    let mut cyy = 0.0;
    for p in points {
        cxx += (p[0] - mx).powi(2);
        cxy += (p[0] - mx) * (p[1] - my);
        cyy += (p[1] - my).powi(2);
    }
    [
        [cxx / n + COV_REG, cxy / n],
        [cxy / n, cyy / n + COV_REG],
    ]
}

struct EmRun {
    params: Params,
    posteriors: Vec<Vec<f64>>,
    log_likelihood: f64,
    ll_trace: Vec<f64>,
}

fn em_run(coords: &[[f64; 2]], k: usize, seed: u64) -> EmRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = kmeans_init(coords, k, &mut rng);
    let mut params = initial_params(coords, &centers);
    let mut ll_trace = Vec::new();
    let mut previous_ll = f64::NEG_INFINITY;
    for _ in 0..MAX_EM_ITERS {
        let (posteriors, ll) = e_step(coords, &params);
        ll_trace.push(ll);
        if ll - previous_ll < EM_TOL * coords.len() as f64 {
            break;
        }
        previous_ll = ll;
        params = m_step(coords, &posteriors, &params);
    }
    // Re-synchronize: posteriors and likelihood of the parameters we return.
    let (posteriors, log_likelihood) = e_step(coords, &params);
    if *ll_trace.last().expect("at least one iteration") != log_likelihood {
        ll_trace.push(log_likelihood);
    }
    EmRun {
        params,
        posteriors,
        log_likelihood,
        ll_trace,
    }
}

/// Fit a K-component full-covariance Gaussian mixture to the 2D coordinates.
/// Five restarts with derived seeds; the best final log-likelihood wins,
/// ties by lowest restart index. Deterministic given `seed`.
pub fn fit_gmm(coords: &[[f64; 2]], k: usize, seed: u64) -> Result<ClusterModel> {
    let n = coords.len();
    if k == 0 {
        return Err(Error::Validation("K must be ≥ 1".into()));
    }
    if n < k {
        return Err(Error::Validation(format!(
            "cannot fit {k} components to {n} points"
        )));
    }
    if coords.iter().any(|c| !c[0].is_finite() || !c[1].is_finite()) {
        return Err(Error::Validation("non-finite coordinates".into()));
    }
    let first = coords[0];
    if k > 1 && coords.iter().all(|&c| c == first) {
        return Err(Error::Validation(
            "degenerate data: all points identical, cannot fit K > 1 components".into(),
        ));
    }
    let runs: Vec<EmRun> = (0..RESTARTS)
        .into_par_iter()
        .map(|r| em_run(coords, k, derive_seed(seed, &format!("gmm-restart-{r}"))))
        .collect();
    let mut best = 0;
    for (r, run) in runs.iter().enumerate().skip(1) {
        if run.log_likelihood > runs[best].log_likelihood {
            best = r;
        }
    }
    let winner = runs.into_iter().nth(best).expect("winner exists");
    let assignments = assign_with_threshold(&winner.posteriors, DEFAULT_THRESHOLD);
    Ok(ClusterModel {
        k,
        weights: winner.params.weights,
        means: winner.params.means,
        covariances: winner.params.covs,
        log_likelihood: winner.log_likelihood,
        posteriors: winner.posteriors,
        assignments,
        threshold: DEFAULT_THRESHOLD,
        ll_trace: winner.ll_trace,
    })
}

/// Threshold rule: argmax posterior if it exceeds `threshold`, else
/// Unassigned; argmax ties go to the lowest component index.
pub fn assign_with_threshold(posteriors: &[Vec<f64>], threshold: f64) -> Vec<Option<usize>> {
    posteriors
        .iter()
        .map(|row| {
            let mut best = 0;
            for (j, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = j;
                }
            }
            (row[best] > threshold).then_some(best)
        })
        .collect()
}

/// The model's own assignment rule (same as its `assignments` field).
pub fn assign(model: &ClusterModel) -> Vec<Option<usize>> {
    assign_with_threshold(&model.posteriors, model.threshold)
}

/// Silhouette-ranked exemplars: per assigned point, s = (b−a)/max(a,b) on
/// the 2D map distances; singleton clusters score 0; top_m per cluster,
/// ties broken by document order.
pub fn silhouette_exemplars(
    coords: &[[f64; 2]],
    ids: &[String],
    assignments: &[Option<usize>],
    top_m: usize,
) -> Result<Exemplars> {
    if coords.len() != ids.len() || coords.len() != assignments.len() {
        return Err(Error::Validation(
            "coords, ids, and assignments must have equal length".into(),
        ));
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, a) in assignments.iter().enumerate() {
        if let Some(c) = a {
            members.entry(*c).or_default().push(i);
        }
    }
    if members.len() < 2 {
        return Err(Error::Validation(format!(
            "silhouette needs ≥ 2 non-empty clusters, found {}",
            members.len()
        )));
    }
    let dist = |i: usize, j: usize| -> f64 {
        ((coords[i][0] - coords[j][0]).powi(2) + (coords[i][1] - coords[j][1]).powi(2)).sqrt()
    };
    let mut result: Exemplars = BTreeMap::new();
    for (&cluster, own) in &members {
        let mut scored: Vec<(usize, f64)> = Vec::with_capacity(own.len());
        for &i in own {
            let s = if own.len() == 1 {
                0.0
            } else {
                let a = own
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| dist(i, j))
                    .sum::<f64>()
                    / (own.len() - 1) as f64;
                let b = members
                    .iter()
                    .filter(|(&c, _)| c != cluster)
                    .map(|(_, other)| {
                        other.iter().map(|&j| dist(i, j)).sum::<f64>() / other.len() as f64
                    })
                    .fold(f64::INFINITY, f64::min);
                let denom = a.max(b);
                if denom == 0.0 {
                    0.0
                } else {
                    (b - a) / denom
                }
            };
            scored.push((i, s));
        }
        // Descending silhouette; equal scores keep ascending document order.
        scored.sort_by(|x, y| y.1.partial_cmp(&x.1).expect("finite").then(x.0.cmp(&y.0)));
        scored.truncate(top_m);
        result.insert(
            cluster,
            scored
                .into_iter()
                .map(|(i, s)| Exemplar {
                    id: ids[i].clone(),
                    silhouette: s,
                })
                .collect(),
        );
    }
    Ok(result)
}
