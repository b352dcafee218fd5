//! Loss functionals.
//!
//! All functionals keep their normalisations (1/T, 1/(TD), ε_e/D, ε_CL/(TM))
//! so hyperparameter grids mean the same thing for datasets of different size.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, EspaError, Result};
use crate::linalg::Matrix;
use crate::model::{neg_entropy, EspaModel, FeatureMatrix, LabelMatrix, LAMBDA_MIN};

/// Which functional to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    /// Feature-weighted error, entropy and label terms with the
    /// label term taken on the mixture `ΛΓ`.
    Joint,
    /// Per-box version of [`Functional::Joint`]; an upper bound on it for
    /// fuzzy Γ and equal to it for one-hot Γ.
    Discrete,
    /// Unweighted segmentation error plus `ε_S` times the pairwise spread
    /// of box coordinates.
    Spa,
    /// Average Kullback-Leibler term `-(1/TM) Σ Π log(ΛΓ)`.
    Kl,
    /// Feature-weighted error plus the entropy term (no labels).
    EntropyWeighted,
}

/// Evaluates the named functional at the model's parameters.
///
/// `Kl` returns `+inf` when a label with positive probability gets zero
/// mixture probability; the other label-bearing functionals floor Λ at
/// [`LAMBDA_MIN`] inside the logarithm.
pub fn evaluate_objective(
    x: &FeatureMatrix,
    pi: Option<&LabelMatrix>,
    model: &EspaModel,
    which: Functional,
) -> Result<f64> {
    let (d, k) = model.s.shape();
    let t = x.len();
    check_dim("feature rows", d, x.dim())?;
    check_dim("Gamma rows", k, model.gamma.rows())?;
    check_dim("Gamma columns", t, model.gamma.cols())?;
    check_dim("W length", d, model.w.len())?;
    let needs_labels = matches!(which, Functional::Joint | Functional::Discrete | Functional::Kl);
    let pi = match (pi, needs_labels) {
        (Some(pi), true) => {
            check_dim("label columns", t, pi.len())?;
            check_dim("Lambda rows", model.lambda.rows(), pi.n_classes())?;
            check_dim("Lambda columns", k, model.lambda.cols())?;
            Some(pi)
        }
        (None, true) => {
            return Err(EspaError::InvalidData(
                "label matrix required for this functional".into(),
            ))
        }
        _ => None,
    };
    let w = model.w.as_slice();
    let h = &model.hyper;
    let value = match which {
        Functional::Joint => {
            weighted_error(x.values(), &model.s, &model.gamma, w)
                + entropy_term(w, h.epsilon_e)
                + h.epsilon_cl * mixture_label_loss(pi.unwrap(), &model.lambda, &model.gamma, true)
        }
        Functional::Discrete => {
            per_box_weighted_error(x.values(), &model.s, &model.gamma, w)
                + entropy_term(w, h.epsilon_e)
                + h.epsilon_cl * per_box_label_loss(pi.unwrap(), &model.lambda, &model.gamma)
        }
        Functional::Spa => {
            spa_error(x.values(), &model.s, &model.gamma) + h.epsilon_s * box_spread(&model.s)
        }
        Functional::Kl => mixture_label_loss(pi.unwrap(), &model.lambda, &model.gamma, false),
        Functional::EntropyWeighted => {
            weighted_error(x.values(), &model.s, &model.gamma, w) + entropy_term(w, h.epsilon_e)
        }
    };
    Ok(value)
}

/// Objective the solver minimises in the given mode; for one-hot Γ both
/// agree.
pub(crate) fn training_objective(
    x: &FeatureMatrix,
    pi: &LabelMatrix,
    model: &EspaModel,
) -> f64 {
    let w = model.w.as_slice();
    let h = &model.hyper;
    let label = if h.epsilon_cl > 0.0 {
        h.epsilon_cl * mixture_label_loss(pi, &model.lambda, &model.gamma, true)
    } else {
        0.0
    };
    weighted_error(x.values(), &model.s, &model.gamma, w) + entropy_term(w, h.epsilon_e) + label
}

/// `(ε_e / D) Σ_d W_d ln W_d`.
pub(crate) fn entropy_term(w: &[f64], epsilon_e: f64) -> f64 {
    if epsilon_e == 0.0 {
        return 0.0;
    }
    epsilon_e / w.len() as f64 * neg_entropy(w)
}

/// Per-feature mean squared reconstruction error
/// `e_d = (1/T) Σ_t (X_dt - (SΓ)_dt)^2`.
pub fn feature_errors(x: &Matrix, s: &Matrix, gamma: &Matrix) -> Vec<f64> {
    let (d, t) = x.shape();
    let mut e = vec![0.0; d];
    let mut recon = vec![0.0; d];
    for tt in 0..t {
        let g = gamma.col(tt);
        let xt = x.col(tt);
        if let Some(k) = single_box(g) {
            for ((ed, &xv), &sv) in e.iter_mut().zip(xt).zip(s.col(k)) {
                let r = xv - sv;
                *ed += r * r;
            }
        } else {
            reconstruct(s, g, &mut recon);
            for ((ed, &xv), &rv) in e.iter_mut().zip(xt).zip(&recon) {
                let r = xv - rv;
                *ed += r * r;
            }
        }
    }
    let inv_t = 1.0 / t as f64;
    e.iter_mut().for_each(|v| *v *= inv_t);
    e
}

/// `(1/T) Σ_d W_d Σ_t (X_dt - (SΓ)_dt)^2`.
pub(crate) fn weighted_error(x: &Matrix, s: &Matrix, gamma: &Matrix, w: &[f64]) -> f64 {
    feature_errors(x, s, gamma)
        .iter()
        .zip(w)
        .map(|(e, w)| e * w)
        .sum()
}

/// `(1/T) Σ_d W_d Σ_k Σ_t Γ_kt (X_dt - S_dk)^2`.
fn per_box_weighted_error(x: &Matrix, s: &Matrix, gamma: &Matrix, w: &[f64]) -> f64 {
    let mut total = 0.0;
    for (tt, xt) in x.columns().enumerate() {
        for (k, &g) in gamma.col(tt).iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            total += g * weighted_sq_dist(xt, s.col(k), w);
        }
    }
    total / x.cols() as f64
}

/// First term of the SPA functional: `(1/(TD)) Σ_d Σ_t (X_dt - (SΓ)_dt)^2`.
pub(crate) fn spa_error(x: &Matrix, s: &Matrix, gamma: &Matrix) -> f64 {
    let e = feature_errors(x, s, gamma);
    e.iter().sum::<f64>() / e.len() as f64
}

/// `Σ_d Σ_{k1,k2} (S_dk1 - S_dk2)^2`.
pub(crate) fn box_spread(s: &Matrix) -> f64 {
    let (d, k) = s.shape();
    let mut total = 0.0;
    for dd in 0..d {
        for a in 0..k {
            for b in 0..k {
                let diff = s[(dd, a)] - s[(dd, b)];
                total += diff * diff;
            }
        }
    }
    total
}

/// `-(1/(TM)) Σ_m Σ_t Π_mt log((ΛΓ)_mt)`; Λ is floored at [`LAMBDA_MIN`]
/// when `floor` is set, otherwise a zero mixture under positive label mass
/// yields `+inf`.
pub(crate) fn mixture_label_loss(pi: &LabelMatrix, lambda: &Matrix, gamma: &Matrix, floor: bool) -> f64 {
    let m = pi.n_classes();
    let t = pi.len();
    let mut total = 0.0;
    for tt in 0..t {
        let g = gamma.col(tt);
        for (mm, &p) in pi.values().col(tt).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mix: f64 = g
                .iter()
                .enumerate()
                .filter(|(_, &gk)| gk != 0.0)
                .map(|(k, &gk)| {
                    let l = lambda[(mm, k)];
                    gk * if floor { l.max(LAMBDA_MIN) } else { l }
                })
                .sum();
            if mix <= 0.0 {
                return f64::INFINITY;
            }
            total -= p * libm::log(mix);
        }
    }
    total / (t * m) as f64
}

/// `-(1/(TM)) Σ_m Σ_t Π_mt Σ_k Γ_kt log Λ_mk`, Λ floored.
fn per_box_label_loss(pi: &LabelMatrix, lambda: &Matrix, gamma: &Matrix) -> f64 {
    let m = pi.n_classes();
    let t = pi.len();
    let mut total = 0.0;
    for tt in 0..t {
        let g = gamma.col(tt);
        for (mm, &p) in pi.values().col(tt).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (k, &gk) in g.iter().enumerate() {
                if gk != 0.0 {
                    total -= p * gk * libm::log(lambda[(mm, k)].max(LAMBDA_MIN));
                }
            }
        }
    }
    total / (t * m) as f64
}

#[inline]
pub(crate) fn weighted_sq_dist(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(w)
        .map(|((x, s), w)| {
            let r = x - s;
            w * r * r
        })
        .sum()
}

/// Index of the box holding all of a one-hot column.
#[inline]
pub(crate) fn single_box(g: &[f64]) -> Option<usize> {
    let k = g.iter().position(|&v| v != 0.0)?;
    (g[k] == 1.0).then_some(k)
}

/// `out = S γ`.
pub(crate) fn reconstruct(s: &Matrix, g: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (k, &gk) in g.iter().enumerate() {
        if gk == 0.0 {
            continue;
        }
        for (o, &sv) in out.iter_mut().zip(s.col(k)) {
            *o += gk * sv;
        }
    }
}
