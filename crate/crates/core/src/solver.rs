//! Alternating minimisation of the joint functional.
//!
//! One outer iteration runs the Γ-, S-, W- and Λ-steps in that order. Each
//! step minimises the objective over one block with the others held fixed,
//! exactly in discrete mode and with a monotone safeguard in fuzzy mode, so
//! the recorded objective never increases.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{check_dim, invalid, EspaError, Result};
use crate::linalg::{cholesky_solve, Matrix};
use crate::model::{
    EspaModel, FeatureMatrix, Hyperparams, LabelMatrix, Mode, SimplexVector, LAMBDA_MIN,
};
use crate::objective::{feature_errors, reconstruct, training_objective, weighted_sq_dist};
use crate::rng::{self, purpose, ChaCha8Rng};

/// Ridge added to ΓΓᵀ in the fuzzy S-step.
pub const RIDGE: f64 = 1e-10;
/// Tolerance deciding ties in assignments and in the ε_e = 0 argmin set.
pub const TIE_TOL: f64 = 1e-12;
/// Exponentiated-gradient updates per column in the fuzzy Γ-step.
pub const FUZZY_INNER_STEPS: usize = 5;

/// Per-fit convergence record.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    /// Objective after each outer iteration.
    pub objective: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    pub restart_index_selected: usize,
}

/// Random generator for restart `restart` of a fit seeded with `seed`.
pub(crate) fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    rng::stream(seed, &[purpose::RESTART, restart as u64])
}

/// Distance-weighted seeding: the first box is a uniformly drawn sample,
/// each further box a sample drawn with probability proportional to its
/// squared W-weighted distance to the nearest chosen box. Returns K
/// distinct sample indices.
pub(crate) fn seed_indices(x: &Matrix, k: usize, w: &[f64], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let t = x.cols();
    debug_assert!(k <= t);
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; t];
    let first = rng.random_range(0..t);
    chosen.push(first);
    taken[first] = true;
    let mut nearest: Vec<f64> = (0..t)
        .map(|i| weighted_sq_dist(x.col(i), x.col(first), w))
        .collect();
    while chosen.len() < k {
        let total: f64 = (0..t).filter(|&i| !taken[i]).map(|i| nearest[i]).sum();
        let next = if total > 0.0 && total.is_finite() {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for i in (0..t).filter(|&i| !taken[i]) {
                if nearest[i] <= 0.0 {
                    continue;
                }
                pick = Some(i);
                target -= nearest[i];
                if target < 0.0 {
                    break;
                }
            }
            pick.expect("positive total implies a candidate")
        } else {
            // only duplicates of chosen samples remain
            let free: Vec<usize> = (0..t).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        taken[next] = true;
        for i in 0..t {
            let dist = weighted_sq_dist(x.col(i), x.col(next), w);
            if dist < nearest[i] {
                nearest[i] = dist;
            }
        }
    }
    chosen
}

/// Nearest box per sample under the W-weighted metric, plus an optional
/// per-(box, sample) additive cost. Ties go to the smallest box index.
pub(crate) fn assign(x: &Matrix, s: &Matrix, w: &[f64], extra: Option<&Matrix>) -> Vec<usize> {
    let active: Vec<usize> = (0..w.len()).filter(|&d| w[d] > 0.0).collect();
    let dense = active.len() == w.len();
    let k = s.cols();
    (0..x.cols())
        .map(|t| {
            let xt = x.col(t);
            let mut best = 0;
            let mut best_cost = f64::INFINITY;
            for kk in 0..k {
                let sk = s.col(kk);
                let mut cost = if dense {
                    weighted_sq_dist(xt, sk, w)
                } else {
                    active
                        .iter()
                        .map(|&d| {
                            let r = xt[d] - sk[d];
                            w[d] * r * r
                        })
                        .sum()
                };
                if let Some(extra) = extra {
                    cost += extra[(kk, t)];
                }
                if cost < best_cost - TIE_TOL {
                    best = kk;
                    best_cost = cost;
                }
            }
            best
        })
        .collect()
}

pub(crate) fn one_hot(assignment: &[usize], k: usize) -> Matrix {
    let mut g = Matrix::zeros(k, assignment.len());
    for (t, &kk) in assignment.iter().enumerate() {
        g[(kk, t)] = 1.0;
    }
    g
}

/// Builds the starting point of restart `restart`: K seeded sample columns
/// as boxes, uniform W, one assignment pass and one counting pass for Λ.
pub fn init_model(
    x: &FeatureMatrix,
    pi: &LabelMatrix,
    hyper: &Hyperparams,
    restart: usize,
) -> Result<EspaModel> {
    hyper.validate()?;
    check_dim("label columns", x.len(), pi.len())?;
    let t = x.len();
    if hyper.k > t {
        return Err(EspaError::TooManyBoxes { k: hyper.k, t });
    }
    let w = SimplexVector::uniform(x.dim());
    let mut rng = restart_rng(hyper.seed, restart);
    let idx = seed_indices(x.values(), hyper.k, w.as_slice(), &mut rng);
    let s = x.values().select_columns(&idx);
    let gamma = one_hot(&assign(x.values(), &s, w.as_slice(), None), hyper.k);
    let lambda = lambda_step_discrete(pi, &gamma);
    Ok(EspaModel {
        s,
        gamma,
        w,
        lambda,
        hyper: hyper.clone(),
        loss_trace: Vec::new(),
    })
}

/// Exact minimiser of `Σ_d W_d e_d + (ε_e/D) Σ_d W_d ln W_d` over the simplex.
///
/// For `ε_e > 0` this is the softmax of `-D e_d / ε_e`; for `ε_e = 0` the
/// weight is spread uniformly over the features attaining `min e`.
pub fn w_step(e: &[f64], epsilon_e: f64) -> Result<SimplexVector> {
    if !(epsilon_e >= 0.0) {
        return Err(invalid("epsilon_e", "must be non-negative"));
    }
    if e.is_empty() || e.iter().any(|v| !v.is_finite()) {
        return Err(EspaError::NonFinite);
    }
    let e_min = e.iter().copied().fold(f64::INFINITY, f64::min);
    let d = e.len() as f64;
    let mut w: Vec<f64> = if epsilon_e > 0.0 {
        e.iter()
            .map(|&v| libm::exp(-d * (v - e_min) / epsilon_e))
            .collect()
    } else {
        e.iter()
            .map(|&v| if v <= e_min + TIE_TOL { 1.0 } else { 0.0 })
            .collect()
    };
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Ok(SimplexVector::from_normalized(w))
}

/// Minimiser of `Σ_d W_d Σ_t (X_dt - (SΓ)_dt)^2` over S.
///
/// The problem splits per feature and W only rescales each piece, so the
/// result does not depend on W. Discrete Γ gives per-box means; fuzzy Γ
/// solves `S (ΓΓᵀ + δI) = XΓᵀ`. Boxes holding no mass keep their
/// coordinates from `previous`.
pub fn s_step(x: &FeatureMatrix, gamma: &Matrix, mode: Mode, previous: &Matrix) -> Result<Matrix> {
    let (d, t) = x.values().shape();
    let k = gamma.rows();
    check_dim("Gamma columns", t, gamma.cols())?;
    check_dim("previous S rows", d, previous.rows())?;
    check_dim("previous S columns", k, previous.cols())?;
    match mode {
        Mode::Discrete => Ok(box_means(x.values(), gamma, previous)),
        Mode::Fuzzy => Ok(fuzzy_least_squares(x.values(), gamma, previous)),
    }
}

fn box_means(x: &Matrix, gamma: &Matrix, previous: &Matrix) -> Matrix {
    let (d, t) = x.shape();
    let k = gamma.rows();
    let mut sums = Matrix::zeros(d, k);
    let mut mass = vec![0.0; k];
    for tt in 0..t {
        for (kk, &g) in gamma.col(tt).iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            mass[kk] += g;
            for (s, &xv) in sums.col_mut(kk).iter_mut().zip(x.col(tt)) {
                *s += g * xv;
            }
        }
    }
    for kk in 0..k {
        if mass[kk] > 0.0 {
            sums.col_mut(kk).iter_mut().for_each(|v| *v /= mass[kk]);
        } else {
            sums.col_mut(kk).copy_from_slice(previous.col(kk));
        }
    }
    sums
}

fn fuzzy_least_squares(x: &Matrix, gamma: &Matrix, previous: &Matrix) -> Matrix {
    let (d, t) = x.shape();
    let k = gamma.rows();
    // boxes carrying (numerically) no mass are left where they are
    let active: Vec<usize> = (0..k)
        .filter(|&kk| (0..t).map(|tt| gamma[(kk, tt)]).sum::<f64>() > 1e-12)
        .collect();
    let mut s = previous.clone();
    if active.is_empty() {
        return s;
    }
    let ka = active.len();
    let mut gram = Matrix::zeros(ka, ka);
    // rhs is K_active × D: Γ Xᵀ
    let mut rhs = Matrix::zeros(ka, d);
    for tt in 0..t {
        let g = gamma.col(tt);
        let xt = x.col(tt);
        for (a, &ka_idx) in active.iter().enumerate() {
            let ga = g[ka_idx];
            if ga == 0.0 {
                continue;
            }
            for (b, &kb_idx) in active.iter().enumerate().skip(a) {
                gram[(a, b)] += ga * g[kb_idx];
            }
            for (dd, &xv) in xt.iter().enumerate() {
                rhs[(a, dd)] += ga * xv;
            }
        }
    }
    for a in 0..ka {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
        gram[(a, a)] += RIDGE;
    }
    if let Some(sol) = cholesky_solve(&gram, &rhs) {
        for (a, &kk) in active.iter().enumerate() {
            for dd in 0..d {
                s[(dd, kk)] = sol[(a, dd)];
            }
        }
    }
    s
}

/// `-(ε_CL / M) Σ_m Π_mt ln Λ_mk` for every (box, sample).
fn label_costs(pi: &LabelMatrix, lambda: &Matrix, epsilon_cl: f64) -> Matrix {
    let (m, k) = lambda.shape();
    let t = pi.len();
    let log_l = Matrix::from_fn(m, k, |r, c| libm::log(lambda[(r, c)].max(LAMBDA_MIN)));
    let scale = epsilon_cl / m as f64;
    let mut out = Matrix::zeros(k, t);
    for tt in 0..t {
        let p = pi.values().col(tt);
        let dst = out.col_mut(tt);
        for (kk, v) in dst.iter_mut().enumerate() {
            let lk = log_l.col(kk);
            *v = -scale
                * p.iter()
                    .zip(lk)
                    .filter(|(&pm, _)| pm != 0.0)
                    .map(|(pm, l)| pm * l)
                    .sum::<f64>();
        }
    }
    out
}

/// Hard assignment minimising the per-sample discrete functional:
/// W-weighted squared distance to the box plus the label cost under Λ.
pub fn gamma_step_discrete(
    x: &FeatureMatrix,
    s: &Matrix,
    w: &SimplexVector,
    lambda: &Matrix,
    pi: &LabelMatrix,
    epsilon_cl: f64,
) -> Result<Matrix> {
    check_step_dims(x, s, w, lambda, pi)?;
    let costs = (epsilon_cl > 0.0).then(|| label_costs(pi, lambda, epsilon_cl));
    let a = assign(x.values(), s, w.as_slice(), costs.as_ref());
    Ok(one_hot(&a, s.cols()))
}

fn check_step_dims(
    x: &FeatureMatrix,
    s: &Matrix,
    w: &SimplexVector,
    lambda: &Matrix,
    pi: &LabelMatrix,
) -> Result<()> {
    check_dim("S rows", x.dim(), s.rows())?;
    check_dim("W length", x.dim(), w.len())?;
    check_dim("Lambda columns", s.cols(), lambda.cols())?;
    check_dim("Lambda rows", pi.n_classes(), lambda.rows())?;
    check_dim("label columns", x.len(), pi.len())
}

/// Per-column objective of the fuzzy Γ-step, scaled by T.
struct ColumnProblem<'a> {
    x: &'a [f64],
    s: &'a Matrix,
    w: &'a [f64],
    /// Floored Λ.
    lambda: &'a Matrix,
    pi: &'a [f64],
    label_scale: f64,
}

impl ColumnProblem<'_> {
    fn value(&self, g: &[f64], recon: &mut [f64], mix: &mut [f64]) -> f64 {
        reconstruct(self.s, g, recon);
        let mut v = weighted_sq_dist(self.x, recon, self.w);
        if self.label_scale > 0.0 {
            self.mixture(g, mix);
            for (&p, &q) in self.pi.iter().zip(mix.iter()) {
                if p != 0.0 {
                    v -= self.label_scale * p * libm::log(q);
                }
            }
        }
        v
    }

    fn mixture(&self, g: &[f64], mix: &mut [f64]) {
        mix.iter_mut().for_each(|v| *v = 0.0);
        for (kk, &gk) in g.iter().enumerate() {
            if gk == 0.0 {
                continue;
            }
            for (mv, &l) in mix.iter_mut().zip(self.lambda.col(kk)) {
                *mv += gk * l;
            }
        }
    }

    fn gradient(&self, g: &[f64], recon: &mut [f64], mix: &mut [f64], grad: &mut [f64]) {
        reconstruct(self.s, g, recon);
        let resid: Vec<f64> = self
            .x
            .iter()
            .zip(recon.iter())
            .zip(self.w)
            .map(|((x, r), w)| w * (x - r))
            .collect();
        if self.label_scale > 0.0 {
            self.mixture(g, mix);
        }
        for (kk, gk) in grad.iter_mut().enumerate() {
            let sk = self.s.col(kk);
            let mut v = -2.0 * resid.iter().zip(sk).map(|(r, s)| r * s).sum::<f64>();
            if self.label_scale > 0.0 {
                let lk = self.lambda.col(kk);
                for ((&p, &q), &l) in self.pi.iter().zip(mix.iter()).zip(lk) {
                    if p != 0.0 {
                        v -= self.label_scale * p * l / q;
                    }
                }
            }
            *gk = v;
        }
    }
}

/// Exponentiated-gradient descent on the simplex, column by column, with
/// backtracking. A column is only replaced when its objective strictly
/// improves on `gamma_prev`'s column.
pub fn gamma_step_fuzzy(
    x: &FeatureMatrix,
    s: &Matrix,
    w: &SimplexVector,
    lambda: &Matrix,
    pi: &LabelMatrix,
    epsilon_cl: f64,
    gamma_prev: &Matrix,
) -> Result<Matrix> {
    check_step_dims(x, s, w, lambda, pi)?;
    check_dim("Gamma rows", s.cols(), gamma_prev.rows())?;
    check_dim("Gamma columns", x.len(), gamma_prev.cols())?;
    let k = s.cols();
    let m = pi.n_classes();
    let floored = Matrix::from_fn(lambda.rows(), k, |r, c| lambda[(r, c)].max(LAMBDA_MIN));
    let mut out = gamma_prev.clone();
    let mut recon = vec![0.0; x.dim()];
    let mut mix = vec![0.0; m];
    let mut grad = vec![0.0; k];
    let mut cand = vec![0.0; k];
    for t in 0..x.len() {
        let problem = ColumnProblem {
            x: x.sample(t),
            s,
            w: w.as_slice(),
            lambda: &floored,
            pi: pi.values().col(t),
            label_scale: epsilon_cl / m as f64,
        };
        let prev = gamma_prev.col(t);
        let f_prev = problem.value(prev, &mut recon, &mut mix);
        if !f_prev.is_finite() {
            continue;
        }
        // multiplicative updates cannot leave a face of the simplex, so
        // start from a slightly interior point when on the boundary
        let mut g: Vec<f64> = if prev.iter().any(|&v| v < 1e-12) {
            prev.iter().map(|&v| 0.999 * v + 0.001 / k as f64).collect()
        } else {
            prev.to_vec()
        };
        let mut f_cur = problem.value(&g, &mut recon, &mut mix);
        let mut scale = 2.0;
        for _ in 0..FUZZY_INNER_STEPS {
            problem.gradient(&g, &mut recon, &mut mix, &mut grad);
            if grad.iter().any(|v| !v.is_finite()) {
                break;
            }
            let lo = grad.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let range = hi - lo;
            if !(range > 0.0) {
                break;
            }
            let mut eta = scale / range;
            let mut accepted = false;
            for attempt in 0..40 {
                for ((c, &gv), &gr) in cand.iter_mut().zip(&g).zip(grad.iter()) {
                    *c = gv * libm::exp(-eta * (gr - lo));
                }
                let total: f64 = cand.iter().sum();
                cand.iter_mut().for_each(|c| *c /= total);
                let f_new = problem.value(&cand, &mut recon, &mut mix);
                if f_new.is_finite() && f_new < f_cur {
                    g.copy_from_slice(&cand);
                    f_cur = f_new;
                    accepted = true;
                    scale = if attempt == 0 { scale * 2.0 } else { eta * range };
                    break;
                }
                eta *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if f_cur < f_prev && g.iter().all(|v| v.is_finite()) {
            out.col_mut(t).copy_from_slice(&g);
        }
    }
    Ok(out)
}

/// Floors a probability column at [`LAMBDA_MIN`] and rescales the
/// remaining entries so the column still sums to one.
pub(crate) fn floor_column(col: &mut [f64]) {
    let n = col.len();
    let mut pinned = vec![false; n];
    loop {
        for (p, &v) in pinned.iter_mut().zip(col.iter()) {
            if v < LAMBDA_MIN {
                *p = true;
            }
        }
        let n_pinned = pinned.iter().filter(|&&p| p).count();
        let free: f64 = col
            .iter()
            .zip(&pinned)
            .filter(|(_, &p)| !p)
            .map(|(v, _)| v)
            .sum();
        if n_pinned == n || !(free > 0.0) {
            col.iter_mut().for_each(|v| *v = 1.0 / n as f64);
            return;
        }
        let f = (1.0 - n_pinned as f64 * LAMBDA_MIN) / free;
        for (v, &p) in col.iter_mut().zip(&pinned) {
            *v = if p { LAMBDA_MIN } else { *v * f };
        }
        if col.iter().all(|&v| v >= LAMBDA_MIN) {
            return;
        }
    }
}

/// Closed-form Λ for hard assignments: label frequencies inside each box,
/// `Λ_mk = Σ_t Π_mt Γ_kt / Σ_t Γ_kt`. Empty boxes get a uniform column.
pub fn lambda_step_discrete(pi: &LabelMatrix, gamma: &Matrix) -> Matrix {
    let m = pi.n_classes();
    let k = gamma.rows();
    let mut lambda = Matrix::zeros(m, k);
    let mut mass = vec![0.0; k];
    for t in 0..gamma.cols() {
        let p = pi.values().col(t);
        for (kk, &g) in gamma.col(t).iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            mass[kk] += g;
            for (l, &pm) in lambda.col_mut(kk).iter_mut().zip(p) {
                *l += g * pm;
            }
        }
    }
    for kk in 0..k {
        let col = lambda.col_mut(kk);
        if mass[kk] > 0.0 {
            col.iter_mut().for_each(|v| *v /= mass[kk]);
        } else {
            col.iter_mut().for_each(|v| *v = 1.0 / m as f64);
        }
        floor_column(col);
    }
    lambda
}

/// One multiplicative majorise-minimise update of Λ for the
/// Kullback-Leibler term: `Λ_mk ← Λ_mk Σ_t Γ_kt Π_mt / (ΛΓ)_mt`, then
/// column normalisation and flooring.
pub fn lambda_step_fuzzy(pi: &LabelMatrix, gamma: &Matrix, lambda_prev: &Matrix) -> Matrix {
    let (m, k) = lambda_prev.shape();
    let mut acc = Matrix::zeros(m, k);
    let mut mix = vec![0.0; m];
    for t in 0..gamma.cols() {
        let g = gamma.col(t);
        mix.iter_mut().for_each(|v| *v = 0.0);
        for (kk, &gk) in g.iter().enumerate() {
            if gk == 0.0 {
                continue;
            }
            for (mv, &l) in mix.iter_mut().zip(lambda_prev.col(kk)) {
                *mv += gk * l;
            }
        }
        let p = pi.values().col(t);
        for (kk, &gk) in g.iter().enumerate() {
            if gk == 0.0 {
                continue;
            }
            for (mm, a) in acc.col_mut(kk).iter_mut().enumerate() {
                if p[mm] != 0.0 && mix[mm] > 0.0 {
                    *a += gk * p[mm] / mix[mm];
                }
            }
        }
    }
    let mut out = Matrix::zeros(m, k);
    for kk in 0..k {
        let col = out.col_mut(kk);
        for (mm, v) in col.iter_mut().enumerate() {
            *v = lambda_prev[(mm, kk)] * acc[(mm, kk)];
        }
        let total: f64 = col.iter().sum();
        if total > 0.0 && total.is_finite() {
            col.iter_mut().for_each(|v| *v /= total);
        } else {
            col.copy_from_slice(lambda_prev.col(kk));
        }
        floor_column(col);
    }
    out
}

/// Moves empty boxes onto the worst-reconstructed samples. Box coordinates
/// of an empty box do not enter the objective, so this never changes it.
fn reseed_empty_boxes(x: &Matrix, model: &mut EspaModel) {
    let k = model.s.cols();
    let mut counts = vec![0usize; k];
    let mut owner = Vec::with_capacity(x.cols());
    for t in 0..x.cols() {
        let kk = model
            .gamma
            .col(t)
            .iter()
            .position(|&v| v == 1.0)
            .unwrap_or(0);
        counts[kk] += 1;
        owner.push(kk);
    }
    if counts.iter().all(|&c| c > 0) {
        return;
    }
    let w = model.w.as_slice();
    let mut resid: Vec<(f64, usize)> = (0..x.cols())
        .map(|t| (weighted_sq_dist(x.col(t), model.s.col(owner[t]), w), t))
        .collect();
    resid.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut next = resid.iter();
    for kk in 0..k {
        if counts[kk] == 0 {
            if let Some(&(_, t)) = next.next() {
                model.s.col_mut(kk).copy_from_slice(x.col(t));
            }
        }
    }
}

/// Runs a single restart from [`init_model`].
pub fn fit_restart(
    x: &FeatureMatrix,
    pi: &LabelMatrix,
    hyper: &Hyperparams,
    restart: usize,
) -> Result<(EspaModel, FitTrace)> {
    let mut model = init_model(x, pi, hyper, restart)?;
    let mut prev = training_objective(x, pi, &model);
    if !prev.is_finite() {
        return Err(EspaError::NonFinite);
    }
    let mut objective = Vec::new();
    let mut converged = false;
    for _ in 0..hyper.max_iter {
        match hyper.mode {
            Mode::Discrete => {
                model.gamma =
                    gamma_step_discrete(x, &model.s, &model.w, &model.lambda, pi, hyper.epsilon_cl)?;
                reseed_empty_boxes(x.values(), &mut model);
            }
            Mode::Fuzzy => {
                model.gamma = gamma_step_fuzzy(
                    x,
                    &model.s,
                    &model.w,
                    &model.lambda,
                    pi,
                    hyper.epsilon_cl,
                    &model.gamma,
                )?;
            }
        }
        model.s = s_step(x, &model.gamma, hyper.mode, &model.s)?;
        let e = feature_errors(x.values(), &model.s, &model.gamma);
        model.w = w_step(&e, hyper.epsilon_e)?;
        model.lambda = match hyper.mode {
            Mode::Discrete => lambda_step_discrete(pi, &model.gamma),
            Mode::Fuzzy => lambda_step_fuzzy(pi, &model.gamma, &model.lambda),
        };
        let current = training_objective(x, pi, &model);
        if !current.is_finite() {
            return Err(EspaError::NonFinite);
        }
        objective.push(current);
        let rel = (prev - current) / libm::fabs(prev).max(1e-30);
        prev = current;
        if rel < hyper.tol {
            converged = true;
            break;
        }
    }
    let trace = FitTrace {
        iterations_run: objective.len(),
        objective,
        converged,
        restart_index_selected: restart,
    };
    model.loss_trace = trace.objective.clone();
    Ok((model, trace))
}

/// Trains with `hyper.n_restarts` independent restarts and keeps the one
/// with the lowest final objective (ties to the lower restart index).
pub fn fit(
    x: &FeatureMatrix,
    pi: &LabelMatrix,
    hyper: &Hyperparams,
) -> Result<(EspaModel, FitTrace)> {
    hyper.validate()?;
    check_dim("label columns", x.len(), pi.len())?;
    if hyper.k > x.len() {
        return Err(EspaError::TooManyBoxes { k: hyper.k, t: x.len() });
    }
    let mut best: Option<(f64, EspaModel, FitTrace)> = None;
    for r in 0..hyper.n_restarts {
        let (model, trace) = match fit_restart(x, pi, hyper, r) {
            Ok(v) => v,
            Err(EspaError::NonFinite) => continue,
            Err(e) => return Err(e),
        };
        let last = trace
            .objective
            .last()
            .copied()
            .unwrap_or_else(|| training_objective(x, pi, &model));
        if best.as_ref().map_or(true, |(b, _, _)| last < *b) {
            best = Some((last, model, trace));
        }
    }
    best.map(|(_, m, t)| (m, t))
        .ok_or(EspaError::AllRestartsFailed(hyper.n_restarts))
}
