//! Reference segmentations: K-means and the box-spread-regularised SPA
//! problem, plus the Bayesian readout that turns any hard clustering into a
//! classifier.
//!
//! Both share seeding and empty-box handling with the solver: restart `r`
//! of a baseline seeded with `seed` starts from exactly the boxes and
//! assignments of restart `r` of [`crate::solver::fit`] with the same seed.

use alloc::vec::Vec;

use crate::error::{invalid, EspaError, Result};
use crate::linalg::{cholesky_solve, Matrix};
use crate::model::{EspaModel, FeatureMatrix, Hyperparams, LabelMatrix, SimplexVector};
use crate::objective::{box_spread, spa_error};
use crate::solver::{assign, lambda_step_discrete, one_hot, restart_rng, seed_indices, RIDGE};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    /// D×K box centres.
    pub s: Matrix,
    /// K×T one-hot assignments.
    pub gamma: Matrix,
    /// The method's own functional at `(s, gamma)`.
    pub objective: f64,
    /// Objective after each iteration.
    pub trace: Vec<f64>,
}

impl ClusteringResult {
    /// Wraps the clustering as a classifier: uniform feature weights and the
    /// label frequencies of each cluster as Λ.
    pub fn into_classifier(self, pi: &LabelMatrix, hyper: Hyperparams) -> EspaModel {
        let lambda = bayes_readout(&self.gamma, pi);
        EspaModel {
            w: SimplexVector::uniform(self.s.rows()),
            s: self.s,
            gamma: self.gamma,
            lambda,
            hyper,
            loss_trace: self.trace,
        }
    }
}

/// Lloyd's algorithm from distance-weighted seeding. The reported objective
/// is the mean squared residual per entry, `(1/(TD)) Σ (X - SΓ)^2`.
pub fn kmeans_fit(x: &FeatureMatrix, k: usize, seed: u64, max_iter: usize) -> Result<ClusteringResult> {
    lloyd(x, k, 0.0, seed, 0, max_iter)
}

/// Alternates hard assignment with the exact S minimiser of
/// `(1/(TD)) Σ (X - SΓ)^2 + ε_S Σ_d Σ_{k1,k2} (S_dk1 - S_dk2)^2`.
pub fn spa_fit(
    x: &FeatureMatrix,
    k: usize,
    epsilon_s: f64,
    seed: u64,
    max_iter: usize,
) -> Result<ClusteringResult> {
    lloyd(x, k, epsilon_s, seed, 0, max_iter)
}

/// Best of `n_restarts` restarts of [`spa_fit`] (K-means when `ε_S = 0`),
/// by objective with ties to the lower restart.
pub fn spa_fit_best(
    x: &FeatureMatrix,
    k: usize,
    epsilon_s: f64,
    seed: u64,
    max_iter: usize,
    n_restarts: usize,
) -> Result<ClusteringResult> {
    if n_restarts == 0 {
        return Err(invalid("n_restarts", "must be at least 1"));
    }
    let mut best: Option<ClusteringResult> = None;
    for r in 0..n_restarts {
        let res = lloyd(x, k, epsilon_s, seed, r, max_iter)?;
        if best.as_ref().map_or(true, |b| res.objective < b.objective) {
            best = Some(res);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Label frequencies inside each cluster (uniform for empty clusters).
pub fn bayes_readout(gamma: &Matrix, pi: &LabelMatrix) -> Matrix {
    lambda_step_discrete(pi, gamma)
}

fn lloyd(
    x: &FeatureMatrix,
    k: usize,
    epsilon_s: f64,
    seed: u64,
    restart: usize,
    max_iter: usize,
) -> Result<ClusteringResult> {
    if k == 0 {
        return Err(invalid("K", "must be at least 1"));
    }
    if !(epsilon_s >= 0.0) || !epsilon_s.is_finite() {
        return Err(invalid("epsilon_S", "must be finite and non-negative"));
    }
    let t = x.len();
    if k > t {
        return Err(EspaError::TooManyBoxes { k, t });
    }
    let xv = x.values();
    let w = SimplexVector::uniform(x.dim());
    let mut rng = restart_rng(seed, restart);
    let idx = seed_indices(xv, k, w.as_slice(), &mut rng);
    let mut s = xv.select_columns(&idx);
    let mut labels = assign(xv, &s, w.as_slice(), None);
    let mut trace = Vec::new();
    for _ in 0..max_iter {
        if epsilon_s == 0.0 {
            reseed_empty(xv, &mut s, &labels);
        }
        s = spa_s_step(xv, &labels, k, epsilon_s, &s);
        let gamma = one_hot(&labels, k);
        trace.push(spa_error(xv, &s, &gamma) + epsilon_s * box_spread(&s));
        let next = assign(xv, &s, w.as_slice(), None);
        if next == labels {
            break;
        }
        labels = next;
    }
    let gamma = one_hot(&labels, k);
    let objective = spa_error(xv, &s, &gamma) + epsilon_s * box_spread(&s);
    if trace.last() != Some(&objective) {
        trace.push(objective);
    }
    Ok(ClusteringResult {
        s,
        gamma,
        objective,
        trace,
    })
}

/// Empty clusters jump to the samples farthest from their centres; with
/// `ε_S = 0` an empty centre does not enter the objective.
fn reseed_empty(x: &Matrix, s: &mut Matrix, labels: &[usize]) {
    let k = s.cols();
    let mut counts = alloc::vec![0usize; k];
    labels.iter().for_each(|&l| counts[l] += 1);
    if counts.iter().all(|&c| c > 0) {
        return;
    }
    let mut resid: Vec<(f64, usize)> = labels
        .iter()
        .enumerate()
        .map(|(t, &l)| {
            let d: f64 = x
                .col(t)
                .iter()
                .zip(s.col(l))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d, t)
        })
        .collect();
    resid.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut next = resid.iter();
    for kk in 0..k {
        if counts[kk] == 0 {
            if let Some(&(_, t)) = next.next() {
                s.col_mut(kk).copy_from_slice(x.col(t));
            }
        }
    }
}

/// Exact S for fixed hard assignments. Scaling the stationarity condition
/// by `TD` gives, for each feature, the K×K system
/// `(diag(n_k) + 2 K c I - 2 c 11ᵀ) s = Σ_{t in k} x_t` with `c = ε_S T D`,
/// shared by all features. Without the penalty this is the per-cluster mean.
fn spa_s_step(x: &Matrix, labels: &[usize], k: usize, epsilon_s: f64, previous: &Matrix) -> Matrix {
    let (d, t) = x.shape();
    let mut counts = alloc::vec![0.0; k];
    // rhs is K×D
    let mut rhs = Matrix::zeros(k, d);
    for (tt, &l) in labels.iter().enumerate() {
        counts[l] += 1.0;
        for (dd, &v) in x.col(tt).iter().enumerate() {
            rhs[(l, dd)] += v;
        }
    }
    let mut s = previous.clone();
    if epsilon_s == 0.0 {
        for kk in 0..k {
            if counts[kk] > 0.0 {
                for dd in 0..d {
                    s[(dd, kk)] = rhs[(kk, dd)] / counts[kk];
                }
            }
        }
        return s;
    }
    let c = epsilon_s * (t * d) as f64;
    let a = Matrix::from_fn(k, k, |i, j| {
        let diag = if i == j { counts[i] + 2.0 * k as f64 * c + RIDGE } else { 0.0 };
        diag - 2.0 * c
    });
    if let Some(sol) = cholesky_solve(&a, &rhs) {
        for kk in 0..k {
            for dd in 0..d {
                s[(dd, kk)] = sol[(kk, dd)];
            }
        }
    }
    s
}
