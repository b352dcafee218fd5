//! Each solver step against an independent brute-force minimiser on tiny
//! instances (D = 2, K = 2, T = 4, M = 2).

mod common;

use common::*;
use espa_core::solver::{
    gamma_step_discrete, gamma_step_fuzzy, lambda_step_discrete, lambda_step_fuzzy, s_step, w_step,
};
use espa_core::{evaluate_objective, Functional, Matrix, Mode, SimplexVector};

const TOL: f64 = 1e-6;
const INSTANCES: u64 = 25;

struct Tiny {
    x: espa_core::FeatureMatrix,
    pi: espa_core::LabelMatrix,
    model: espa_core::EspaModel,
}

fn tiny(seed: u64, epsilon_e: f64, epsilon_cl: f64) -> Tiny {
    let mut r = rng(seed);
    let x = random_x(&mut r, 2, 4);
    let pi = random_labels(&mut r, 2, 4);
    let s = Matrix::from_fn(2, 2, |_, _| rand::Rng::random_range(&mut r, -3.0..3.0));
    let gamma = random_one_hot(&mut r, 2, 4);
    let w = random_simplex(&mut r, 2);
    let lambda = random_stochastic(&mut r, 2, 2, 0.05);
    let model = model(s, gamma, w, lambda, hyper(2, epsilon_e, epsilon_cl));
    Tiny { x, pi, model }
}

fn discrete(t: &Tiny, m: &espa_core::EspaModel) -> f64 {
    evaluate_objective(&t.x, Some(&t.pi), m, Functional::Discrete).unwrap()
}

#[test]
fn gamma_step_matches_enumeration() {
    for seed in 0..INSTANCES {
        let t = tiny(seed, 0.3, 0.5 * seed as f64);
        let m = &t.model;
        let g = gamma_step_discrete(&t.x, &m.s, &m.w, &m.lambda, &t.pi, m.hyper.epsilon_cl).unwrap();
        let mut stepped = m.clone();
        stepped.gamma = g;
        let mut best = f64::INFINITY;
        for code in 0..16u32 {
            let mut cand = m.clone();
            cand.gamma = Matrix::from_fn(2, 4, |k, c| ((code >> c & 1) as usize == k) as u8 as f64);
            best = best.min(discrete(&t, &cand));
        }
        let got = discrete(&t, &stepped);
        assert!((got - best).abs() <= TOL, "seed {seed}: {got} vs {best}");
    }
}

#[test]
fn w_step_matches_golden_section() {
    for seed in 0..INSTANCES {
        let eps = [0.0, 1e-3, 0.5, 5.0][seed as usize % 4];
        let t = tiny(seed, eps, 0.1);
        let m = &t.model;
        let e = espa_core::objective::feature_errors(t.x.values(), &m.s, &m.gamma);
        let mut stepped = m.clone();
        stepped.w = w_step(&e, eps).unwrap();
        let at = |w0: f64| {
            let mut c = m.clone();
            c.w = SimplexVector::new(vec![w0, 1.0 - w0]).unwrap();
            discrete(&t, &c)
        };
        let w0 = golden(at, 0.0, 1.0);
        let best = at(w0).min(at(0.0)).min(at(1.0));
        let got = discrete(&t, &stepped);
        assert!(got <= best + TOL, "seed {seed}: {got} vs {best}");
    }
}

#[test]
fn w_step_closed_form_example() {
    let w = w_step(&[0.0, std::f64::consts::LN_2], 2.0).unwrap();
    assert!((w.as_slice()[0] - 2.0 / 3.0).abs() < 1e-12);
    // oracle on the reduced problem min_w w*0 + (1-w) ln2 + (ε_e/D)(w ln w + (1-w) ln(1-w))
    let f = |w: f64| (1.0 - w) * std::f64::consts::LN_2 + (w * w.ln() + (1.0 - w) * (1.0 - w).ln());
    let w0 = golden(f, 1e-12, 1.0 - 1e-12);
    assert!((w0 - 2.0 / 3.0).abs() < 1e-6);
}

#[test]
fn s_step_matches_gradient_descent() {
    for seed in 0..INSTANCES {
        let t = tiny(seed, 0.1, 0.1);
        let m = &t.model;
        let mut stepped = m.clone();
        stepped.s = s_step(&t.x, &m.gamma, Mode::Discrete, &m.s).unwrap();
        // gradient descent on the four coordinates of S
        let mut s = m.s.clone();
        let x = t.x.values();
        let mut lr = 0.2;
        for _ in 0..20_000 {
            let mut grad = Matrix::zeros(2, 2);
            for c in 0..4 {
                for k in 0..2 {
                    if m.gamma[(k, c)] == 0.0 {
                        continue;
                    }
                    for d in 0..2 {
                        grad[(d, k)] += -2.0 * (x[(d, c)] - s[(d, k)]) / 4.0;
                    }
                }
            }
            for k in 0..2 {
                for d in 0..2 {
                    s[(d, k)] -= lr * grad[(d, k)];
                }
            }
            lr = 0.2;
        }
        let mut oracle = m.clone();
        oracle.s = s;
        let got = discrete(&t, &stepped);
        let best = discrete(&t, &oracle);
        assert!(got <= best + TOL, "seed {seed}: {got} vs {best}");
    }
}

#[test]
fn fuzzy_s_step_matches_normal_equation_oracle() {
    for seed in 0..INSTANCES {
        let mut r = rng(100 + seed);
        let x = random_x(&mut r, 2, 4);
        let gamma = random_stochastic(&mut r, 2, 4, 0.05);
        let s = s_step(&x, &gamma, Mode::Fuzzy, &Matrix::zeros(2, 2)).unwrap();
        // oracle: gradient descent on sum (X - S Γ)^2 + δ |S|^2, to a vanishing gradient
        let mut o = Matrix::zeros(2, 2);
        let xv = x.values();
        for _ in 0..5_000_000 {
            let recon = o.matmul(&gamma);
            let mut grad = Matrix::zeros(2, 2);
            for d in 0..2 {
                for k in 0..2 {
                    grad[(d, k)] = (0..4)
                        .map(|c| -2.0 * (xv[(d, c)] - recon[(d, c)]) * gamma[(k, c)])
                        .sum::<f64>()
                        + 2.0 * espa_core::solver::RIDGE * o[(d, k)];
                }
            }
            if grad.as_slice().iter().all(|g| g.abs() < 1e-14) {
                break;
            }
            for d in 0..2 {
                for k in 0..2 {
                    o[(d, k)] -= 0.05 * grad[(d, k)];
                }
            }
        }
        assert!(s.max_abs_diff(&o) < 1e-8, "seed {seed}: {s:?} vs {o:?}");
    }
}

#[test]
fn lambda_step_matches_golden_section() {
    for seed in 0..INSTANCES {
        let t = tiny(seed, 0.1, 1.0 + seed as f64);
        let m = &t.model;
        let mut stepped = m.clone();
        stepped.lambda = lambda_step_discrete(&t.pi, &m.gamma);
        // columns decouple: optimise each column's first entry in turn
        let mut oracle = m.clone();
        for k in 0..2 {
            let at = |p: f64, base: &espa_core::EspaModel| {
                let mut c = base.clone();
                c.lambda[(0, k)] = p;
                c.lambda[(1, k)] = 1.0 - p;
                discrete(&t, &c)
            };
            let snapshot = oracle.clone();
            let p = golden(|p| at(p, &snapshot), 1e-12, 1.0 - 1e-12);
            oracle.lambda[(0, k)] = p;
            oracle.lambda[(1, k)] = 1.0 - p;
        }
        let got = discrete(&t, &stepped);
        let best = discrete(&t, &oracle);
        assert!(got <= best + TOL, "seed {seed}: {got} vs {best}");
    }
}

#[test]
fn lambda_counting_example() {
    let pi = espa_core::LabelMatrix::from_indices(&[0, 0, 1], names(2)).unwrap();
    let gamma = Matrix::from_rows(&[&[1.0, 1.0, 1.0]]);
    let l = lambda_step_discrete(&pi, &gamma);
    // numeric maximiser of 2 ln p + ln(1-p)
    let p = golden(|p| -(2.0 * p.ln() + (1.0 - p).ln()), 1e-9, 1.0 - 1e-9);
    assert!((l[(0, 0)] - p).abs() < 1e-6);
    assert!((l[(0, 0)] - 2.0 / 3.0).abs() < 1e-12);
}

fn column_objective(
    x: &[f64],
    s: &Matrix,
    w: &[f64],
    lambda: &Matrix,
    pi: &[f64],
    eps_cl: f64,
    t: f64,
    gamma: &[f64],
) -> f64 {
    let mut err = 0.0;
    for d in 0..x.len() {
        let r: f64 = x[d] - (0..gamma.len()).map(|k| s[(d, k)] * gamma[k]).sum::<f64>();
        err += w[d] * r * r;
    }
    let m = pi.len() as f64;
    let mut label = 0.0;
    for (mm, &p) in pi.iter().enumerate() {
        if p > 0.0 {
            let mix: f64 = (0..gamma.len()).map(|k| lambda[(mm, k)] * gamma[k]).sum();
            label -= p * mix.ln();
        }
    }
    err / t + eps_cl * label / (t * m)
}

#[test]
fn fuzzy_gamma_keeps_an_optimal_column() {
    for seed in 0..INSTANCES {
        let mut r = rng(200 + seed);
        let x = random_x(&mut r, 2, 4);
        let pi = random_labels(&mut r, 2, 4);
        let s = Matrix::from_fn(2, 2, |_, _| rand::Rng::random_range(&mut r, -3.0..3.0));
        let w = random_simplex(&mut r, 2);
        let lambda = random_stochastic(&mut r, 2, 2, 0.2);
        let eps_cl = 0.5;
        let mut optimal = Matrix::zeros(2, 4);
        for c in 0..4 {
            let f = |g: f64| {
                column_objective(x.sample(c), &s, w.as_slice(), &lambda, pi.values().col(c), eps_cl, 4.0, &[g, 1.0 - g])
            };
            // coarse grid, then golden refinement around the best grid point
            let grid_best = (0..=1000).map(|i| i as f64 / 1000.0).min_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap();
            let g = golden(f, (grid_best - 1e-3).max(0.0), (grid_best + 1e-3).min(1.0));
            optimal[(0, c)] = g;
            optimal[(1, c)] = 1.0 - g;
        }
        let interior = (0..4).all(|c| optimal[(0, c)] > 1e-6 && optimal[(0, c)] < 1.0 - 1e-6);
        let out = gamma_step_fuzzy(&x, &s, &w, &lambda, &pi, eps_cl, &optimal).unwrap();
        if interior {
            assert!(out.max_abs_diff(&optimal) < 1e-8, "seed {seed}: {out:?} vs {optimal:?}");
        }
        for c in 0..4 {
            let before = column_objective(x.sample(c), &s, w.as_slice(), &lambda, pi.values().col(c), eps_cl, 4.0, optimal.col(c));
            let after = column_objective(x.sample(c), &s, w.as_slice(), &lambda, pi.values().col(c), eps_cl, 4.0, out.col(c));
            assert!(after <= before, "seed {seed} column {c}");
        }
    }
}

#[test]
fn fuzzy_lambda_decreases_kl_over_many_updates() {
    for seed in 0..10 {
        let mut r = rng(300 + seed);
        let pi = random_labels(&mut r, 2, 6);
        let gamma = random_stochastic(&mut r, 2, 6, 0.0);
        let mut lambda = random_stochastic(&mut r, 2, 2, 0.01);
        let kl = |lambda: &Matrix| {
            let m = model(Matrix::zeros(1, 2), gamma.clone(), SimplexVector::uniform(1), lambda.clone(), hyper(2, 0.0, 1.0));
            let x = espa_core::FeatureMatrix::new(Matrix::zeros(1, 6)).unwrap();
            evaluate_objective(&x, Some(&pi), &m, Functional::Kl).unwrap()
        };
        let mut prev = kl(&lambda);
        for _ in 0..50 {
            lambda = lambda_step_fuzzy(&pi, &gamma, &lambda);
            let now = kl(&lambda);
            assert!(now <= prev + 1e-12, "seed {seed}: {now} > {prev}");
            prev = now;
        }
    }
}
