//! Classification scores and feature-budget arithmetic.

use alloc::vec::Vec;

use crate::error::{check_dim, EspaError, Result};
use crate::linalg::Matrix;

/// Area under the ROC curve: the probability that a random positive scores
/// above a random negative, ties counting one half. Computed from average
/// ranks (Mann-Whitney U).
pub fn auc_binary(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_dim("labels", scores.len(), labels.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EspaError::InvalidData("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EspaError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j share their average
        let avg = (i + 1 + j) as f64 / 2.0;
        let pos_in_group = order[i..j].iter().filter(|&&t| labels[t]).count();
        pos_rank_sum += avg * pos_in_group as f64;
        i = j;
    }
    let p = n_pos as f64;
    let u = pos_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * n_neg as f64))
}

/// Unweighted mean of one-vs-rest AUCs, scoring class `m` by row `m` of
/// `proba`.
pub fn auc_macro(proba: &Matrix, labels: &[usize]) -> Result<f64> {
    check_dim("labels", proba.cols(), labels.len())?;
    let m = proba.rows();
    let mut total = 0.0;
    for class in 0..m {
        let is_class: Vec<bool> = labels.iter().map(|&l| l == class).collect();
        if !is_class.iter().any(|&b| b) {
            return Err(EspaError::MissingClass(class));
        }
        let auc = auc_binary(&proba.row(class), &is_class).map_err(|e| match e {
            EspaError::SingleClass => EspaError::MissingClass(class),
            e => e,
        })?;
        total += auc;
    }
    Ok(total / m as f64)
}

/// Largest feature count a classifier with a linear overfitting barrier of
/// the given slope can handle at `t` samples: `floor(t / slope)`.
pub fn d_max(t: usize, slope: f64) -> usize {
    libm::floor(t as f64 / slope) as usize
}

/// Barrier slope of the best-performing deep classifier on the toy problem.
pub const LSTM_BARRIER_SLOPE: f64 = 13.8;

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_ranking() {
        let auc = auc_binary(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap();
        assert_eq!(auc, 1.0);
    }

    #[test]
    fn one_inverted_pair_of_four() {
        // pairs (0.9,0.6) (0.9,0.1) (0.4,0.6)x (0.4,0.1) -> 3/4
        let auc = auc_binary(&[0.9, 0.6, 0.4, 0.1], &[true, false, true, false]).unwrap();
        assert_eq!(auc, 0.75);
    }

    #[test]
    fn all_ties_give_half() {
        let auc = auc_binary(&[0.3; 6], &[true, false, true, false, false, true]).unwrap();
        assert_eq!(auc, 0.5);
    }

    #[test]
    fn single_class_is_an_error() {
        assert_eq!(auc_binary(&[0.1, 0.2], &[true, true]), Err(EspaError::SingleClass));
    }

    #[test]
    fn macro_reduces_to_binary_for_two_classes() {
        let p1 = [0.2, 0.7, 0.4, 0.9, 0.5];
        let proba = Matrix::from_fn(2, 5, |r, c| if r == 1 { p1[c] } else { 1.0 - p1[c] });
        let labels = [0, 1, 0, 1, 1];
        let bin = auc_binary(&p1, &labels.map(|l| l == 1)).unwrap();
        assert!((auc_macro(&proba, &labels).unwrap() - bin).abs() < 1e-15);
    }

    #[test]
    fn macro_needs_every_class() {
        let proba = Matrix::filled(3, 2, 1.0 / 3.0);
        assert_eq!(auc_macro(&proba, &[0, 1]), Err(EspaError::MissingClass(2)));
    }

    #[test]
    fn feature_budget_example() {
        assert_eq!(d_max(80, LSTM_BARRIER_SLOPE), 5);
        let b = binomial(500, 5);
        assert_eq!(b, 255_244_687_600.0);
        assert!((b / 1e11 - 2.5).abs() < 0.1);
    }
}
