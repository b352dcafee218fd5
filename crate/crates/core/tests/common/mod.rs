#![allow(dead_code)]

use espa_core::rng::stream;
use espa_core::{EspaModel, FeatureMatrix, Hyperparams, LabelMatrix, Matrix, SimplexVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    stream(seed, &[999])
}

pub fn names(m: usize) -> Vec<String> {
    (0..m).map(|i| format!("c{i}")).collect()
}

pub fn random_x(rng: &mut ChaCha8Rng, d: usize, t: usize) -> FeatureMatrix {
    FeatureMatrix::new(Matrix::from_fn(d, t, |_, _| rng.random_range(-3.0..3.0))).unwrap()
}

/// Hard labels with every class present.
pub fn random_labels(rng: &mut ChaCha8Rng, m: usize, t: usize) -> LabelMatrix {
    let labels: Vec<usize> = (0..t)
        .map(|i| if i < m { i } else { rng.random_range(0..m) })
        .collect();
    LabelMatrix::from_indices(&labels, names(m)).unwrap()
}

pub fn random_stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize, floor: f64) -> Matrix {
    let mut m = Matrix::from_fn(rows, cols, |_, _| floor + rng.random::<f64>());
    for c in 0..cols {
        let col = m.col_mut(c);
        let s: f64 = col.iter().sum();
        col.iter_mut().for_each(|v| *v /= s);
    }
    m
}

pub fn random_one_hot(rng: &mut ChaCha8Rng, k: usize, t: usize) -> Matrix {
    let mut g = Matrix::zeros(k, t);
    for c in 0..t {
        let kk = if c < k { c } else { rng.random_range(0..k) };
        g[(kk, c)] = 1.0;
    }
    g
}

pub fn random_simplex(rng: &mut ChaCha8Rng, d: usize) -> SimplexVector {
    let m = random_stochastic(rng, d, 1, 0.0);
    SimplexVector::new(m.col(0).to_vec()).unwrap()
}

pub fn model(s: Matrix, gamma: Matrix, w: SimplexVector, lambda: Matrix, hyper: Hyperparams) -> EspaModel {
    EspaModel {
        s,
        gamma,
        w,
        lambda,
        hyper,
        loss_trace: Vec::new(),
    }
}

pub fn hyper(k: usize, epsilon_e: f64, epsilon_cl: f64) -> Hyperparams {
    Hyperparams {
        k,
        epsilon_e,
        epsilon_cl,
        ..Hyperparams::default()
    }
}

/// Minimises a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    (lo + hi) / 2.0
}
