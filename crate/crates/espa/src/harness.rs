//! Replicated cross-validation, hyperparameter grid search, (D, T) sweeps
//! and the linear barrier fit.
//!
//! Every task (cell, replicate, grid point) derives its own seeds from the
//! master seed, and results are gathered in task order, so reports do not
//! depend on the number of workers. Datasets depend on (cell, replicate)
//! only: all grid points and all methods of a cell see the same data.

use std::str::FromStr;
use std::time::Instant;

use espa_core::baselines::spa_fit_best;
use espa_core::datagen::{self, LabelledData};
use espa_core::metrics::auc_macro;
use espa_core::rng::{derive_seed, purpose};
use espa_core::{fit, predict_proba, EspaModel, Hyperparams, MinMaxScaler};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::{Scale, Toy};
use crate::error::{Error, ErrorClass, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Espa,
    KmeansBayes,
    SpaBayes,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Espa => "espa",
            Method::KmeansBayes => "kmeans_bayes",
            Method::SpaBayes => "spa_bayes",
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "espa" => Ok(Method::Espa),
            "kmeans_bayes" => Ok(Method::KmeansBayes),
            "spa_bayes" => Ok(Method::SpaBayes),
            _ => Err(format!("expected espa, kmeans_bayes or spa_bayes, got {s:?}")),
        }
    }
}

/// Where replicate data come from.
#[derive(Debug, Clone)]
pub enum Source {
    /// A fresh synthetic dataset per replicate.
    Generator {
        toy: Toy,
        d: usize,
        t: usize,
        sigma: f64,
        blue_fraction: f64,
    },
    /// A fresh random split of a fixed dataset per replicate.
    Dataset(LabelledData),
}

impl Source {
    pub fn toy1(d: usize, t: usize, sigma: f64) -> Self {
        Source::Generator {
            toy: Toy::Toy1,
            d,
            t,
            sigma,
            blue_fraction: 0.5,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Source::Generator {
                toy,
                d,
                t,
                sigma,
                blue_fraction,
            } => match toy {
                Toy::Toy1 => format!("toy1 D={d} T={t} sigma={sigma} blue_fraction={blue_fraction}"),
                Toy::Toy2 => format!("toy2 D={d} T={t} sigma={sigma}"),
            },
            Source::Dataset(data) => format!("dataset D={} T={}", data.x.dim(), data.len()),
        }
    }

    /// Train/validation pair for replicate `rep` of cell `cell`.
    pub fn replicate(
        &self,
        master_seed: u64,
        cell: u64,
        rep: u64,
        train_fraction: f64,
    ) -> Result<Replicate> {
        let split_seed = derive_seed(master_seed, &[purpose::SPLIT, cell, rep]);
        let (data, relevant_dims) = match self {
            Source::Generator {
                toy,
                d,
                t,
                sigma,
                blue_fraction,
            } => {
                let seed = derive_seed(master_seed, &[purpose::DATA, cell, rep]);
                let ds = match toy {
                    Toy::Toy1 => datagen::toy1(*d, *t, *sigma, *blue_fraction, seed)?,
                    Toy::Toy2 => datagen::toy2(*d, *t, *sigma, seed)?,
                };
                (ds.data, Some(ds.relevant_dims))
            }
            Source::Dataset(data) => (data.clone(), None),
        };
        let (train, valid) = datagen::split(&data, train_fraction, split_seed)?;
        Ok(Replicate {
            train,
            valid,
            relevant_dims,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Replicate {
    pub train: LabelledData,
    pub valid: LabelledData,
    /// Informative features, for synthetic data.
    pub relevant_dims: Option<[usize; 2]>,
}

/// Outcome of one fit scored on one validation set.
#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub auc: f64,
    /// Total feature weight on the informative features, when known.
    pub relevant_weight: Option<f64>,
}

/// Fits a model on a replicate's training part and scores it on the
/// validation part.
pub trait Scorer: Sync {
    fn score(&self, hyper: &Hyperparams, rep: &Replicate) -> Result<Score>;
}

/// A classifier together with the preprocessing it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub model: EspaModel,
    pub scaler: Option<MinMaxScaler>,
}

impl Trained {
    pub fn predict_proba(&self, x: &espa_core::FeatureMatrix) -> Result<espa_core::Prediction> {
        let p = match &self.scaler {
            Some(s) => predict_proba(&s.transform(x)?, &self.model)?,
            None => predict_proba(x, &self.model)?,
        };
        Ok(p)
    }
}

/// Trains `method` on `data`. Baselines use `hyper.k`, `hyper.epsilon_s`
/// (SPA only), `hyper.max_iter`, `hyper.n_restarts` and `hyper.seed`.
pub fn train(method: Method, scale: Scale, hyper: &Hyperparams, data: &LabelledData) -> Result<Trained> {
    let (x, scaler) = match scale {
        Scale::MinMax => {
            let s = MinMaxScaler::fit(&data.x);
            (s.transform(&data.x)?, Some(s))
        }
        Scale::None => (data.x.clone(), None),
    };
    let model = match method {
        Method::Espa => fit(&x, &data.pi, hyper)?.0,
        Method::KmeansBayes | Method::SpaBayes => {
            let eps_s = if method == Method::SpaBayes { hyper.epsilon_s } else { 0.0 };
            spa_fit_best(&x, hyper.k, eps_s, hyper.seed, hyper.max_iter, hyper.n_restarts)?
                .into_classifier(&data.pi, hyper.clone())
        }
    };
    Ok(Trained { model, scaler })
}

/// Scores a trained model by macro one-vs-rest AUC on labelled data.
pub fn validation_auc(trained: &Trained, data: &LabelledData) -> Result<f64> {
    let p = trained.predict_proba(&data.x)?;
    Ok(auc_macro(&p.proba, &data.pi.hard_labels())?)
}

/// The standard scorer: train a method, score it on validation data.
#[derive(Debug, Clone, Copy)]
pub struct MethodScorer {
    pub method: Method,
    pub scale: Scale,
}

impl Scorer for MethodScorer {
    fn score(&self, hyper: &Hyperparams, rep: &Replicate) -> Result<Score> {
        let trained = train(self.method, self.scale, hyper, &rep.train)?;
        let auc = validation_auc(&trained, &rep.valid)?;
        let relevant_weight = match (self.method, rep.relevant_dims) {
            (Method::Espa, Some(dims)) => {
                Some(dims.iter().map(|&d| trained.model.w.as_slice()[d]).sum())
            }
            _ => None,
        };
        Ok(Score {
            auc,
            relevant_weight,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvSettings {
    pub n_replicates: usize,
    pub train_fraction: f64,
    pub master_seed: u64,
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self {
            n_replicates: 20,
            train_fraction: 0.75,
            master_seed: 0,
            workers: 0,
        }
    }
}

/// One replicate of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    /// Score, or the error message of a failed replicate.
    pub outcome: std::result::Result<Score, String>,
    pub seconds: f64,
}

/// Aggregated replicates of one hyperparameter setting.
#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub source: String,
    pub hyper: Hyperparams,
    pub replicates: Vec<ReplicateResult>,
    /// Mean validation AUC over successful replicates (NaN if none).
    pub mean_auc: f64,
    /// Sample standard deviation (0 for a single replicate).
    pub std_auc: f64,
    pub n_failed: usize,
    pub mean_seconds: f64,
    pub total_seconds: f64,
}

impl CvReport {
    pub fn aggregate(source: String, hyper: Hyperparams, replicates: Vec<ReplicateResult>) -> Self {
        let aucs: Vec<f64> = replicates
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|s| s.auc))
            .collect();
        let (mean_auc, std_auc) = mean_std(&aucs);
        let total_seconds: f64 = replicates.iter().map(|r| r.seconds).sum();
        Self {
            source,
            hyper,
            n_failed: replicates.len() - aucs.len(),
            mean_seconds: total_seconds / replicates.len().max(1) as f64,
            total_seconds,
            replicates,
            mean_auc,
            std_auc,
        }
    }

    pub fn aucs(&self) -> Vec<f64> {
        self.replicates
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|s| s.auc))
            .collect()
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Grid search outcome: the selected cell's report and every cell's report
/// in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub selected: usize,
    pub table: Vec<CvReport>,
}

impl GridResult {
    pub fn best(&self) -> &CvReport {
        &self.table[self.selected]
    }
}

/// All combinations of K, ε_e and ε_CL on top of `base`, in that nesting
/// order (K outermost).
pub fn espa_grid(base: &Hyperparams, k: &[usize], eps_e: &[f64], eps_cl: &[f64]) -> Vec<Hyperparams> {
    let mut out = Vec::with_capacity(k.len() * eps_e.len() * eps_cl.len());
    for &k in k {
        for &e in eps_e {
            for &c in eps_cl {
                out.push(Hyperparams {
                    k,
                    epsilon_e: e,
                    epsilon_cl: c,
                    ..base.clone()
                });
            }
        }
    }
    out
}

/// Hyperparameter grid a method is tuned over: K, ε_e and ε_CL for eSPA,
/// K for K-means, K and ε_S for SPA.
pub fn method_grid(
    method: Method,
    base: &Hyperparams,
    k: &[usize],
    eps_e: &[f64],
    eps_cl: &[f64],
    eps_s: &[f64],
) -> Vec<Hyperparams> {
    match method {
        Method::Espa => espa_grid(base, k, eps_e, eps_cl),
        Method::KmeansBayes => k
            .iter()
            .map(|&k| Hyperparams {
                k,
                epsilon_s: 0.0,
                ..base.clone()
            })
            .collect(),
        Method::SpaBayes => k
            .iter()
            .flat_map(|&k| {
                eps_s.iter().map(move |&s| Hyperparams {
                    k,
                    epsilon_s: s,
                    ..base.clone()
                })
            })
            .collect(),
    }
}

/// `a` is preferred over `b`: higher mean AUC, then smaller K, larger ε_e,
/// smaller ε_CL, smaller ε_S, earlier grid position.
fn preferred(a: &CvReport, b: &CvReport) -> bool {
    use std::cmp::Ordering::*;
    let (ha, hb) = (&a.hyper, &b.hyper);
    let order = b
        .mean_auc
        .total_cmp(&a.mean_auc)
        .then(ha.k.cmp(&hb.k))
        .then(hb.epsilon_e.total_cmp(&ha.epsilon_e))
        .then(ha.epsilon_cl.total_cmp(&hb.epsilon_cl))
        .then(ha.epsilon_s.total_cmp(&hb.epsilon_s));
    order == Less
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))
}

/// Evaluates every grid point on the same `n_replicates` replicates of
/// `cell` and selects the best by mean validation AUC.
pub fn grid_search_cell(
    source: &Source,
    scorer: &dyn Scorer,
    grid: &[Hyperparams],
    settings: &CvSettings,
    cell: u64,
) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::Usage("hyperparameter grid is empty".into()));
    }
    if settings.n_replicates == 0 {
        return Err(Error::Usage("n_replicates must be at least 1".into()));
    }
    let pool = pool(settings.workers)?;
    let reps = settings.n_replicates;
    let results = pool.install(|| {
        let replicates: Vec<std::result::Result<Replicate, (String, ErrorClass)>> = (0..reps)
            .into_par_iter()
            .map(|r| {
                source
                    .replicate(settings.master_seed, cell, r as u64, settings.train_fraction)
                    .map_err(|e| (e.to_string(), e.class()))
            })
            .collect();
        let results: Vec<(ReplicateResult, Option<ErrorClass>)> = (0..grid.len() * reps)
            .into_par_iter()
            .map(|task| {
                let (g, r) = (task / reps, task % reps);
                let hyper = Hyperparams {
                    seed: derive_seed(settings.master_seed, &[purpose::FIT, cell, r as u64, g as u64]),
                    ..grid[g].clone()
                };
                let start = Instant::now();
                let outcome = match &replicates[r] {
                    Ok(rep) => scorer.score(&hyper, rep).map_err(|e| (e.to_string(), e.class())),
                    Err(e) => Err(e.clone()),
                };
                let seconds = start.elapsed().as_secs_f64();
                let class = outcome.as_ref().err().map(|(_, c)| *c);
                (
                    ReplicateResult {
                        outcome: outcome.map_err(|(m, _)| m),
                        seconds,
                    },
                    class,
                )
            })
            .collect();
        results
    });
    let first_failure = results
        .iter()
        .find_map(|(r, c)| r.outcome.as_ref().err().map(|m| (m.clone(), c.unwrap())));
    let mut results = results.into_iter().map(|(r, _)| r);
    let description = source.describe();
    let table: Vec<CvReport> = grid
        .iter()
        .map(|h| {
            let reps: Vec<ReplicateResult> = results.by_ref().take(reps).collect();
            CvReport::aggregate(description.clone(), h.clone(), reps)
        })
        .collect();
    let mut selected: Option<usize> = None;
    for (i, row) in table.iter().enumerate() {
        if row.mean_auc.is_nan() {
            continue;
        }
        if selected.map_or(true, |s| preferred(row, &table[s])) {
            selected = Some(i);
        }
    }
    match selected {
        Some(selected) => Ok(GridResult { selected, table }),
        None => {
            let (message, class) = first_failure.expect("a cell without AUC has a failure");
            Err(Error::AllCellsFailed { message, class })
        }
    }
}

/// Grid search on cell 0.
pub fn grid_search(
    source: &Source,
    scorer: &dyn Scorer,
    grid: &[Hyperparams],
    settings: &CvSettings,
) -> Result<GridResult> {
    grid_search_cell(source, scorer, grid, settings, 0)
}

/// Replicated cross-validation of one hyperparameter setting. Replicate
/// failures are recorded in the report; only a total failure is an error.
pub fn cross_validate(
    source: &Source,
    scorer: &dyn Scorer,
    hyper: &Hyperparams,
    settings: &CvSettings,
) -> Result<CvReport> {
    let mut res = grid_search(source, scorer, std::slice::from_ref(hyper), settings)?;
    Ok(res.table.swap_remove(0))
}

/// Hyperparameter grids searched in every sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrids {
    pub k: Vec<usize>,
    pub epsilon_e: Vec<f64>,
    pub epsilon_cl: Vec<f64>,
    pub epsilon_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub d: usize,
    pub t: usize,
    pub method: Method,
    /// Selected hyperparameters and their replicate report; `None` if every
    /// grid point failed.
    pub report: Option<CvReport>,
    pub error: Option<String>,
}

impl SweepCell {
    pub fn mean_auc(&self) -> f64 {
        self.report.as_ref().map_or(f64::NAN, |r| r.mean_auc)
    }

    pub fn std_auc(&self) -> f64 {
        self.report.as_ref().map_or(f64::NAN, |r| r.std_auc)
    }

    pub fn mean_seconds(&self) -> f64 {
        self.report.as_ref().map_or(f64::NAN, |r| r.mean_seconds)
    }
}

/// Linear fit of barrier position T* against D for one method.
#[derive(Debug, Clone, PartialEq)]
pub enum BarrierOutcome {
    Fit(BarrierFit),
    /// Fewer than three D values cross the threshold inside the T grid.
    NoBarrier,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub p_value: f64,
    pub threshold: f64,
    /// `(D, T*)` points the line was fitted to.
    pub points: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    pub barriers: Vec<(Method, std::result::Result<BarrierOutcome, String>)>,
    pub threshold: f64,
    pub n_replicates: usize,
    pub master_seed: u64,
}

/// Cross-validated, grid-searched AUC of every method on toy-1 data for
/// every (D, T) cell, followed by a barrier fit per method.
#[allow(clippy::too_many_arguments)]
pub fn barrier_sweep(
    methods: &[Method],
    d_grid: &[usize],
    t_grid: &[usize],
    sigma: f64,
    base: &Hyperparams,
    grids: &SweepGrids,
    scale: Scale,
    settings: &CvSettings,
    threshold: f64,
) -> Result<SweepReport> {
    if methods.is_empty() || d_grid.is_empty() || t_grid.is_empty() {
        return Err(Error::Usage("sweep grids must be non-empty".into()));
    }
    let mut cells = Vec::new();
    for &method in methods {
        let grid = method_grid(method, base, &grids.k, &grids.epsilon_e, &grids.epsilon_cl, &grids.epsilon_s);
        let scorer = MethodScorer { method, scale };
        for (i, &d) in d_grid.iter().enumerate() {
            for (j, &t) in t_grid.iter().enumerate() {
                let cell = (i * t_grid.len() + j) as u64;
                let source = Source::toy1(d, t, sigma);
                // boxes beyond the training size cannot be fitted
                let n_train = (settings.train_fraction * t as f64).round() as usize;
                let grid: Vec<Hyperparams> = grid.iter().filter(|h| h.k <= n_train).cloned().collect();
                let (report, error) = match grid_search_cell(&source, &scorer, &grid, settings, cell) {
                    Ok(res) => (Some(res.best().clone()), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                cells.push(SweepCell {
                    d,
                    t,
                    method,
                    report,
                    error,
                });
            }
        }
    }
    let mut report = SweepReport {
        cells,
        barriers: Vec::new(),
        threshold,
        n_replicates: settings.n_replicates,
        master_seed: settings.master_seed,
    };
    report.barriers = methods
        .iter()
        .map(|&m| (m, barrier_fit(&report, m, threshold).map_err(|e| e.to_string())))
        .collect();
    Ok(report)
}

/// Smallest interpolated T at which mean AUC rises through `threshold`,
/// for each D of `method`, then least squares of T* on D.
pub fn barrier_fit(report: &SweepReport, method: Method, threshold: f64) -> Result<BarrierOutcome> {
    if !(threshold > 0.5 && threshold < 1.0) {
        return Err(Error::Usage(format!("AUC threshold must lie in (0.5, 1), got {threshold}")));
    }
    let mut ds: Vec<usize> = report
        .cells
        .iter()
        .filter(|c| c.method == method)
        .map(|c| c.d)
        .collect();
    ds.sort_unstable();
    ds.dedup();
    let mut points = Vec::new();
    for d in ds {
        let mut curve: Vec<(usize, f64)> = report
            .cells
            .iter()
            .filter(|c| c.method == method && c.d == d && !c.mean_auc().is_nan())
            .map(|c| (c.t, c.mean_auc()))
            .collect();
        curve.sort_by_key(|&(t, _)| t);
        if let Some(t_star) = crossing(&curve, threshold) {
            points.push((d, t_star));
        }
    }
    if points.len() < 3 {
        return Ok(BarrierOutcome::NoBarrier);
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 as f64 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Data("barrier fit is degenerate: every crossing has the same D".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 as f64 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0 as f64).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let df = n - 2.0;
    let se = (ss_res / df / sxx).sqrt();
    let p_value = if se > 0.0 {
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        2.0 * (1.0 - dist.cdf((slope / se).abs()))
    } else if slope != 0.0 {
        0.0
    } else {
        1.0
    };
    Ok(BarrierOutcome::Fit(BarrierFit {
        slope,
        intercept,
        r2,
        p_value,
        threshold,
        points,
    }))
}

/// First upward crossing of `threshold` in a curve sorted by T, linearly
/// interpolated. A curve that starts at or above the threshold has none.
fn crossing(curve: &[(usize, f64)], threshold: f64) -> Option<f64> {
    curve.windows(2).find_map(|w| {
        let ((t0, a0), (t1, a1)) = (w[0], w[1]);
        (a0 < threshold && a1 >= threshold)
            .then(|| t0 as f64 + (threshold - a0) / (a1 - a0) * (t1 - t0) as f64)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surface(method: Method, f: impl Fn(usize, usize) -> f64) -> SweepReport {
        let mut cells = Vec::new();
        for d in [10, 20, 30, 40] {
            for t in (10..=400).step_by(10) {
                let auc = f(d, t);
                cells.push(SweepCell {
                    d,
                    t,
                    method,
                    report: Some(CvReport::aggregate(
                        String::new(),
                        Hyperparams::default(),
                        vec![ReplicateResult {
                            outcome: Ok(Score {
                                auc,
                                relevant_weight: None,
                            }),
                            seconds: 0.0,
                        }],
                    )),
                    error: None,
                });
            }
        }
        SweepReport {
            cells,
            barriers: Vec::new(),
            threshold: 0.75,
            n_replicates: 1,
            master_seed: 0,
        }
    }

    #[test]
    fn step_surface_gives_its_slope() {
        let r = surface(Method::Espa, |d, t| if t >= 5 * d { 1.0 } else { 0.5 });
        let BarrierOutcome::Fit(fit) = barrier_fit(&r, Method::Espa, 0.75).unwrap() else {
            panic!("expected a barrier");
        };
        // the interpolated crossing sits half a T step below 5D
        assert!((fit.slope - 5.0).abs() < 1e-9, "{fit:?}");
        assert!((fit.intercept + 5.0).abs() < 1e-9, "{fit:?}");
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert_eq!(fit.p_value, 0.0);
    }

    #[test]
    fn flat_surface_has_no_barrier() {
        let r = surface(Method::Espa, |_, _| 0.5);
        assert_eq!(barrier_fit(&r, Method::Espa, 0.75).unwrap(), BarrierOutcome::NoBarrier);
    }

    #[test]
    fn noisy_barrier_has_finite_p_value() {
        let r = surface(Method::Espa, |d, t| if t + (d % 20) >= 5 * d { 1.0 } else { 0.5 });
        let BarrierOutcome::Fit(fit) = barrier_fit(&r, Method::Espa, 0.75).unwrap() else {
            panic!("expected a barrier");
        };
        assert!(fit.p_value > 0.0 && fit.p_value < 0.05, "{fit:?}");
    }

    #[test]
    fn same_d_crossings_are_degenerate() {
        let mut r = surface(Method::Espa, |_, t| if t >= 100 { 1.0 } else { 0.5 });
        r.cells.iter_mut().for_each(|c| c.d = 7);
        // duplicate D collapse to one crossing
        assert_eq!(barrier_fit(&r, Method::Espa, 0.75).unwrap(), BarrierOutcome::NoBarrier);
    }

    #[test]
    fn threshold_outside_range_is_rejected() {
        let r = surface(Method::Espa, |_, _| 0.5);
        assert!(barrier_fit(&r, Method::Espa, 0.4).is_err());
    }

    #[test]
    fn crossing_interpolates() {
        let t = crossing(&[(10, 0.5), (20, 1.0)], 0.75).unwrap();
        assert_eq!(t, 15.0);
        assert_eq!(crossing(&[(10, 0.8), (20, 1.0)], 0.75), None);
    }

    #[test]
    fn preference_breaks_ties_by_hyperparameters() {
        let row = |k, e, c, auc| {
            let mut r = CvReport::aggregate(
                String::new(),
                Hyperparams {
                    k,
                    epsilon_e: e,
                    epsilon_cl: c,
                    ..Hyperparams::default()
                },
                Vec::new(),
            );
            r.mean_auc = auc;
            r
        };
        assert!(preferred(&row(5, 0.0, 0.0, 0.9), &row(2, 0.0, 0.0, 0.8)));
        assert!(preferred(&row(2, 0.0, 0.0, 0.9), &row(3, 0.0, 0.0, 0.9)));
        assert!(preferred(&row(2, 0.1, 0.0, 0.9), &row(2, 0.01, 0.0, 0.9)));
        assert!(preferred(&row(2, 0.1, 0.0, 0.9), &row(2, 0.1, 0.01, 0.9)));
        assert!(!preferred(&row(2, 0.1, 0.0, 0.9), &row(2, 0.1, 0.0, 0.9)));
    }
}
