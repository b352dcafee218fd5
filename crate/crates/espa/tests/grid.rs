use espa::harness::{self, CvSettings, Method, MethodScorer, Replicate, Score, Scorer, Source};
use espa::io::{self, RunInfo};
use espa::{Result, Scale};
use espa_core::Hyperparams;

fn settings(workers: usize) -> CvSettings {
    CvSettings {
        n_replicates: 3,
        train_fraction: 0.75,
        master_seed: 17,
        workers,
    }
}

fn base() -> Hyperparams {
    Hyperparams {
        n_restarts: 2,
        ..Hyperparams::default()
    }
}

#[test]
fn full_grid_has_684_cells() {
    let eps = [0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1];
    let k: Vec<usize> = (2..=20).collect();
    assert_eq!(harness::espa_grid(&base(), &k, &eps, &eps).len(), 684);
}

/// Scores by distance of K from 3, ignoring the data.
struct PeakAtThree;

impl Scorer for PeakAtThree {
    fn score(&self, hyper: &Hyperparams, _: &Replicate) -> Result<Score> {
        Ok(Score {
            auc: 1.0 - 0.05 * (hyper.k as f64 - 3.0).abs(),
            relevant_weight: None,
        })
    }
}

#[test]
fn grid_search_finds_the_injected_optimum() {
    let k: Vec<usize> = (2..=8).collect();
    let grid = harness::espa_grid(&base(), &k, &[0.0, 1e-3], &[0.0, 1e-2]);
    let res = harness::grid_search(&Source::toy1(4, 40, 5.0), &PeakAtThree, &grid, &settings(2)).unwrap();
    let best = res.best();
    assert_eq!(best.hyper.k, 3);
    assert_eq!(best.mean_auc, 1.0);
    // ties resolved towards larger epsilon_e, smaller epsilon_CL
    assert_eq!((best.hyper.epsilon_e, best.hyper.epsilon_cl), (1e-3, 0.0));
}

#[test]
fn singleton_grid_equals_cross_validation() {
    let source = Source::toy1(6, 80, 5.0);
    let scorer = MethodScorer {
        method: Method::Espa,
        scale: Scale::MinMax,
    };
    let h = Hyperparams { k: 3, ..base() };
    let res = harness::grid_search(&source, &scorer, std::slice::from_ref(&h), &settings(1)).unwrap();
    let cv = harness::cross_validate(&source, &scorer, &h, &settings(1)).unwrap();
    assert_eq!(res.best().aucs(), cv.aucs());
    assert_eq!(res.best().mean_auc, cv.mean_auc);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let source = Source::toy1(6, 80, 5.0);
    let scorer = MethodScorer {
        method: Method::Espa,
        scale: Scale::MinMax,
    };
    let grid = harness::espa_grid(&base(), &[2, 3, 4], &[0.0, 1e-3], &[1e-2]);
    let one = harness::grid_search(&source, &scorer, &grid, &settings(1)).unwrap();
    let many = harness::grid_search(&source, &scorer, &grid, &settings(8)).unwrap();
    assert_eq!(one.selected, many.selected);
    for (a, b) in one.table.iter().zip(&many.table) {
        assert_eq!(a.aucs(), b.aucs());
    }

    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, res) in dirs.iter().zip([&one, &many]) {
        let info = RunInfo {
            method: Method::Espa,
            scale: Scale::MinMax,
            n_replicates: 3,
            train_fraction: 0.75,
            master_seed: 17,
        };
        io::save_cv_report(dir.path(), res, info).unwrap();
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("cv_report.toml")).unwrap();
    assert_eq!(read(&dirs[0]), read(&dirs[1]));
}

#[test]
fn report_records_the_selected_hyperparameters() {
    let dir = tempfile::tempdir().unwrap();
    let k: Vec<usize> = (2..=6).collect();
    let grid = harness::espa_grid(&base(), &k, &[0.0], &[0.0]);
    let res = harness::grid_search(&Source::toy1(4, 40, 5.0), &PeakAtThree, &grid, &settings(1)).unwrap();
    let info = RunInfo {
        method: Method::Espa,
        scale: Scale::MinMax,
        n_replicates: 3,
        train_fraction: 0.75,
        master_seed: 17,
    };
    let path = io::save_cv_report(dir.path(), &res, info).unwrap();
    let doc: toml::Table = std::fs::read_to_string(path).unwrap().parse().unwrap();
    let selected = doc["selected"]["hyperparameters"].as_table().unwrap();
    assert_eq!(selected["K"].as_integer(), Some(3));
    assert_eq!(doc["format_version"].as_integer(), Some(1));
    assert_eq!(doc["grid"].as_array().unwrap().len(), 5);
}

#[test]
fn tiny_sweep_is_reproducible() {
    let grids = harness::SweepGrids {
        k: vec![2, 3],
        epsilon_e: vec![1e-3],
        epsilon_cl: vec![1e-2],
        epsilon_s: vec![0.0],
    };
    let run = |workers| {
        harness::barrier_sweep(
            &[Method::Espa, Method::KmeansBayes],
            &[4, 8],
            &[20, 60],
            5.0,
            &base(),
            &grids,
            Scale::MinMax,
            &settings(workers),
            0.75,
        )
        .unwrap()
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.cells.len(), 8);
    let aucs = |r: &harness::SweepReport| r.cells.iter().map(|c| c.mean_auc()).collect::<Vec<_>>();
    assert_eq!(aucs(&a), aucs(&b));
    assert_eq!(a.barriers, b.barriers);
}
