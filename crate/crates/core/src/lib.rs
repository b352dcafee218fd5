//! Entropic box-segmentation classifier.
//!
//! Learns, jointly, a probability vector `W` over features, a segmentation
//! of feature space into `K` boxes (`S`, `Γ`) and a Bayesian matrix `Λ` of
//! label probabilities given a box, by alternating minimisation of
//!
//! ```text
//! L = (1/T) Σ_d W_d Σ_t (X_dt - (SΓ)_dt)^2
//!   + (ε_e/D) Σ_d W_d ln W_d
//!   - (ε_CL/(TM)) Σ_m Σ_t Π_mt ln (ΛΓ)_mt
//! ```
//!
//! Data are stored features × samples. The crate is `no_std` and only needs
//! `alloc`; file formats, the experiment harness and the command line live in
//! the `espa` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod datagen;
mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod objective;
pub mod predict;
pub mod rng;
pub mod scaling;
pub mod solver;

pub use error::{EspaError, Result};
pub use linalg::Matrix;
pub use model::{
    validate_stochastic, EspaModel, FeatureMatrix, Hyperparams, LabelMatrix, Mode, SimplexVector,
    LAMBDA_MIN,
};
pub use objective::{evaluate_objective, Functional};
pub use predict::{assign_boxes, predict_proba, Prediction};
pub use scaling::MinMaxScaler;
pub use solver::{fit, FitTrace};
