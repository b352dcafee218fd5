//! Labelling unseen samples with a trained model.
//!
//! New samples are assigned to the box with the smallest W-weighted squared
//! distance (labels are unknown, so the label term drops out), and class
//! probabilities follow from the law of total probability `Π = ΛΓ`. The
//! assignment is hard in both training modes.

use alloc::vec::Vec;

use crate::error::{check_dim, Result};
use crate::linalg::Matrix;
use crate::model::{argmax, EspaModel, FeatureMatrix};
use crate::solver::{assign, one_hot};

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// K×T' one-hot box assignment.
    pub gamma: Matrix,
    /// M×T' class probabilities, `Λ · gamma`.
    pub proba: Matrix,
    /// Most probable class per sample, ties to the smallest index.
    pub labels: Vec<usize>,
}

pub fn assign_boxes(x_new: &FeatureMatrix, model: &EspaModel) -> Result<Matrix> {
    check_dim("feature rows", model.n_features(), x_new.dim())?;
    let a = assign(x_new.values(), &model.s, model.w.as_slice(), None);
    Ok(one_hot(&a, model.n_boxes()))
}

pub fn predict_proba(x_new: &FeatureMatrix, model: &EspaModel) -> Result<Prediction> {
    let gamma = assign_boxes(x_new, model)?;
    let proba = model.lambda.matmul(&gamma);
    let labels = proba.columns().map(argmax).collect();
    Ok(Prediction {
        gamma,
        proba,
        labels,
    })
}
