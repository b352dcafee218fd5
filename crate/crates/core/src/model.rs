//! Domain types: feature and label matrices, feature-weight simplex vectors,
//! hyperparameters and the trained model.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, EspaError, Result};
use crate::linalg::Matrix;

/// Floor applied to every entry of the label-given-box matrix.
pub const LAMBDA_MIN: f64 = 1e-12;
/// Tolerance for column sums of label and assignment matrices.
pub const STOCHASTIC_TOL: f64 = 1e-9;
/// Tolerance for the feature-weight simplex sum.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// True iff every entry is `>= -tol` and every column sums to 1 within `tol`.
pub fn validate_stochastic(m: &Matrix, tol: f64) -> bool {
    m.columns().all(|col| {
        col.iter().all(|&v| v >= -tol) && libm::fabs(col.iter().sum::<f64>() - 1.0) <= tol
    })
}

/// True iff every entry is exactly 0 or 1 and each column has a single 1.
pub fn is_one_hot(m: &Matrix) -> bool {
    m.columns().all(|col| {
        col.iter().all(|&v| v == 0.0 || v == 1.0) && col.iter().filter(|&&v| v == 1.0).count() == 1
    })
}

/// D×T matrix of feature values; rows are features, columns are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Matrix,
    feature_names: Option<Vec<String>>,
}

impl FeatureMatrix {
    pub fn new(values: Matrix) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(EspaError::InvalidData(format!(
                "feature matrix must be non-empty, got {}x{}",
                values.rows(),
                values.cols()
            )));
        }
        if let Some(pos) = values.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(EspaError::InvalidData(format!(
                "non-finite feature value at feature {}, sample {}",
                pos % values.rows(),
                pos / values.rows()
            )));
        }
        Ok(Self {
            values,
            feature_names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        check_dim("feature names", self.dim(), names.len())?;
        self.feature_names = Some(names);
        Ok(self)
    }

    /// Number of features D.
    pub fn dim(&self) -> usize {
        self.values.rows()
    }

    /// Number of samples T.
    pub fn len(&self) -> usize {
        self.values.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn sample(&self, t: usize) -> &[f64] {
        self.values.col(t)
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Column subset, keeping feature names.
    pub fn select_samples(&self, idx: &[usize]) -> Self {
        Self {
            values: self.values.select_columns(idx),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Feature names, falling back to `f0, f1, ...`.
    pub fn names_or_default(&self) -> Vec<String> {
        match &self.feature_names {
            Some(n) => n.clone(),
            None => (0..self.dim()).map(|d| format!("f{d}")).collect(),
        }
    }
}

/// M×T column-stochastic matrix of label probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    values: Matrix,
    class_names: Vec<String>,
}

impl LabelMatrix {
    pub fn new(values: Matrix, class_names: Vec<String>) -> Result<Self> {
        check_dim("class names", values.rows(), class_names.len())?;
        if values.rows() == 0 || values.cols() == 0 {
            return Err(EspaError::InvalidData("label matrix must be non-empty".to_string()));
        }
        for (t, col) in values.columns().enumerate() {
            if col.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(EspaError::InvalidData(format!(
                    "label probabilities of sample {t} leave [0, 1]"
                )));
            }
            let s: f64 = col.iter().sum();
            if libm::fabs(s - 1.0) > STOCHASTIC_TOL {
                return Err(EspaError::InvalidData(format!(
                    "label probabilities of sample {t} sum to {s}"
                )));
            }
        }
        Ok(Self {
            values,
            class_names,
        })
    }

    /// One-hot label matrix from class indices.
    pub fn from_indices(labels: &[usize], class_names: Vec<String>) -> Result<Self> {
        let m = class_names.len();
        if let Some(&bad) = labels.iter().find(|&&l| l >= m) {
            return Err(EspaError::InvalidData(format!(
                "class index {bad} out of range for {m} classes"
            )));
        }
        let values = Matrix::from_fn(m, labels.len(), |r, c| if labels[c] == r { 1.0 } else { 0.0 });
        Self::new(values, class_names)
    }

    pub fn n_classes(&self) -> usize {
        self.values.rows()
    }

    pub fn len(&self) -> usize {
        self.values.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Most probable class per sample, ties to the smallest index.
    pub fn hard_labels(&self) -> Vec<usize> {
        self.values.columns().map(argmax).collect()
    }

    pub fn select_samples(&self, idx: &[usize]) -> Self {
        Self {
            values: self.values.select_columns(idx),
            class_names: self.class_names.clone(),
        }
    }
}

/// Index of the first maximal entry.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Probability vector over features.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(EspaError::InvalidData("empty simplex vector".to_string()));
        }
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(EspaError::InvalidData("simplex vector has a negative entry".to_string()));
        }
        let s: f64 = values.iter().sum();
        if libm::fabs(s - 1.0) > SIMPLEX_TOL {
            return Err(EspaError::InvalidData(format!("simplex vector sums to {s}")));
        }
        Ok(Self(values))
    }

    pub fn uniform(d: usize) -> Self {
        Self(vec![1.0 / d as f64; d])
    }

    pub(crate) fn from_normalized(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Shannon entropy with `0 log 0 = 0`.
    pub fn entropy(&self) -> f64 {
        -neg_entropy(&self.0)
    }
}

/// `sum_d w_d ln w_d` with the `0 ln 0 = 0` convention.
pub(crate) fn neg_entropy(w: &[f64]) -> f64 {
    w.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * libm::log(v))
        .sum()
}

/// Segmentation variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// Hard box assignments.
    #[default]
    Discrete,
    /// Probabilistic box assignments.
    Fuzzy,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Discrete => "discrete",
            Mode::Fuzzy => "fuzzy",
        }
    }
}

impl core::str::FromStr for Mode {
    type Err = EspaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discrete" => Ok(Mode::Discrete),
            "fuzzy" => Ok(Mode::Fuzzy),
            other => Err(invalid("mode", format!("expected discrete or fuzzy, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Number of boxes.
    pub k: usize,
    /// Weight of the feature-entropy term.
    pub epsilon_e: f64,
    /// Weight of the label (Kullback-Leibler) term.
    pub epsilon_cl: f64,
    /// Box-spread penalty, used by the SPA baseline only.
    pub epsilon_s: f64,
    pub mode: Mode,
    /// Relative-decrease stopping threshold.
    pub tol: f64,
    pub max_iter: usize,
    pub n_restarts: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            k: 3,
            epsilon_e: 1e-3,
            epsilon_cl: 1e-2,
            epsilon_s: 0.0,
            mode: Mode::Discrete,
            tol: 1e-8,
            max_iter: 200,
            n_restarts: 10,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("K", "must be at least 1"));
        }
        for (name, v) in [
            ("epsilon_e", self.epsilon_e),
            ("epsilon_CL", self.epsilon_cl),
            ("epsilon_S", self.epsilon_s),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be finite and non-negative, got {v}")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", format!("must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "must be at least 1"));
        }
        if self.n_restarts == 0 {
            return Err(invalid("n_restarts", "must be at least 1"));
        }
        Ok(())
    }
}

/// Trained classifier: box coordinates S (D×K), assignments Γ (K×T),
/// feature weights W, label-given-box matrix Λ (M×K).
#[derive(Debug, Clone, PartialEq)]
pub struct EspaModel {
    pub s: Matrix,
    pub gamma: Matrix,
    pub w: SimplexVector,
    pub lambda: Matrix,
    pub hyper: Hyperparams,
    pub loss_trace: Vec<f64>,
}

impl EspaModel {
    pub fn n_features(&self) -> usize {
        self.s.rows()
    }

    pub fn n_boxes(&self) -> usize {
        self.s.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.lambda.rows()
    }

    /// Checks shapes and stochastic constraints of the stored parameters.
    /// An empty Γ (a model restored from disk) is accepted.
    pub fn validate(&self) -> Result<()> {
        let (d, k) = self.s.shape();
        check_dim("W length", d, self.w.len())?;
        check_dim("Lambda columns", k, self.lambda.cols())?;
        if self.gamma.cols() > 0 {
            check_dim("Gamma rows", k, self.gamma.rows())?;
            if !validate_stochastic(&self.gamma, STOCHASTIC_TOL) {
                return Err(EspaError::InvalidData("Gamma is not column-stochastic".to_string()));
            }
        }
        if !validate_stochastic(&self.lambda, STOCHASTIC_TOL) {
            return Err(EspaError::InvalidData("Lambda is not column-stochastic".to_string()));
        }
        if !self.s.all_finite() {
            return Err(EspaError::InvalidData("box coordinates are not finite".to_string()));
        }
        Ok(())
    }

    /// Features ordered by decreasing weight.
    pub fn ranked_features(&self) -> Vec<usize> {
        let w = self.w.as_slice();
        let mut idx: Vec<usize> = (0..w.len()).collect();
        idx.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
        idx
    }
}
