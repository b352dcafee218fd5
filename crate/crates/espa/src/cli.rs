//! Command-line front end.
//!
//! Every subcommand accepts `--config PATH` and one `--<key> value` flag per
//! configuration key. Flags are applied after the config file. Exit codes:
//! 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgAction, ArgMatches, Command};
use espa_core::datagen::{self, LabelledData, SyntheticDataset};
use espa_core::metrics::{binomial, d_max, LSTM_BARRIER_SLOPE};
use serde::Serialize;

use crate::config::{Origin, RunConfig, Toy, KEYS};
use crate::error::{Error, ErrorClass};
use crate::harness::{self, CvSettings, MethodScorer, Source, SweepGrids};
use crate::io::{self, RunInfo};

/// An error tagged with the stage that produced it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.error)
    }
}

type Staged<T> = std::result::Result<T, StageError>;

fn at<T>(stage: &'static str, r: crate::error::Result<T>) -> Staged<T> {
    r.map_err(|error| StageError { stage, error })
}

fn key_args() -> Vec<Arg> {
    let mut args = vec![Arg::new("config")
        .long("config")
        .value_name("PATH")
        .help("key = value configuration file")];
    args.extend(KEYS.iter().map(|&k| {
        Arg::new(k)
            .long(k)
            .value_name("VALUE")
            .action(ArgAction::Set)
            .allow_negative_numbers(true)
    }));
    args
}

fn command() -> Command {
    let sub = |name: &'static str, about: &'static str| Command::new(name).about(about).args(key_args());
    Command::new("espa")
        .about("Entropy-optimal scalable probabilistic approximation classifier")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            sub("generate", "Write a synthetic toy dataset as CSV")
                .arg(Arg::new("which").value_parser(["toy1", "toy2"]).help("toy model (default: the `toy` key)")),
        )
        .subcommand(sub("fit", "Train a classifier on CSV data and save the model"))
        .subcommand(sub("predict", "Label CSV samples with a saved model"))
        .subcommand(sub("cv", "Replicated cross-validation with grid search"))
        .subcommand(sub("sweep", "Sample-size barrier sweep over D and T"))
        .subcommand(sub("info", "Feature budget of a deep classifier at D, T"))
}

fn build_config(m: &ArgMatches) -> Staged<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = m.get_one::<String>("config") {
        let path = Path::new(path);
        let text = std::fs::read_to_string(path).map_err(|e| StageError {
            stage: "read config",
            error: Error::io(path, e),
        })?;
        at("parse config", cfg.apply_text(&text).map_err(Error::from))?;
    }
    for &k in KEYS {
        if let Some(v) = m.get_one::<String>(k) {
            at("parse flags", cfg.set(k, v, Origin::Flag).map_err(Error::from))?;
        }
    }
    Ok(cfg)
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ErrorClass::Usage.exit_code() } else { 0 };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let result = build_config(sub).and_then(|cfg| match name {
        "generate" => generate(&cfg, sub.get_one::<String>("which").map(String::as_str)),
        "fit" => fit(&cfg),
        "predict" => predict(&cfg),
        "cv" => cv(&cfg),
        "sweep" => sweep(&cfg),
        "info" => info(&cfg),
        _ => unreachable!("unknown subcommand"),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("espa {name}: {e}");
            e.error.class().exit_code()
        }
    }
}

#[derive(Serialize)]
struct DatasetInfo {
    format_version: u32,
    kind: &'static str,
    toy: &'static str,
    #[serde(rename = "D")]
    d: usize,
    #[serde(rename = "T")]
    t: usize,
    sigma: f64,
    blue_fraction: f64,
    seed: u64,
    /// Zero-based indices of the two informative features.
    relevant_dims: [usize; 2],
    class_names: Vec<String>,
}

fn synthesize(cfg: &RunConfig, toy: Toy) -> crate::error::Result<SyntheticDataset> {
    Ok(match toy {
        Toy::Toy1 => datagen::toy1(cfg.d, cfg.t, cfg.sigma, cfg.blue_fraction, cfg.seed)?,
        Toy::Toy2 => datagen::toy2(cfg.d, cfg.t, cfg.sigma, cfg.seed)?,
    })
}

fn generate(cfg: &RunConfig, which: Option<&str>) -> Staged<()> {
    let toy = match which {
        Some(w) => w.parse::<Toy>().map_err(|e| StageError {
            stage: "parse flags",
            error: Error::Usage(e),
        })?,
        None => cfg.toy,
    };
    let ds = at("generate data", synthesize(cfg, toy))?;
    let (f, l) = at("write dataset", io::save_dataset(&cfg.out, &ds.data.x, &ds.data.pi))?;
    let info = DatasetInfo {
        format_version: io::FORMAT_VERSION,
        kind: "dataset",
        toy: toy.as_str(),
        d: cfg.d,
        t: cfg.t,
        sigma: ds.sigma,
        blue_fraction: cfg.blue_fraction,
        seed: ds.seed,
        relevant_dims: ds.relevant_dims,
        class_names: ds.data.pi.class_names().to_vec(),
    };
    let meta = cfg.out.join("dataset.toml");
    let text = toml::to_string(&info).expect("dataset metadata serializes");
    at("write dataset", std::fs::write(&meta, text).map_err(|e| Error::io(&meta, e)))?;
    println!("wrote {} and {}", f.display(), l.display());
    println!("relevant features: {:?}", ds.relevant_dims);
    Ok(())
}

fn required<'a>(value: &'a Option<PathBuf>, key: &str) -> Staged<&'a Path> {
    value.as_deref().ok_or_else(|| StageError {
        stage: "parse flags",
        error: Error::Usage(format!("--{key} is required")),
    })
}

fn load_data(cfg: &RunConfig) -> Staged<LabelledData> {
    let features = required(&cfg.features, "features")?;
    let labels = required(&cfg.labels, "labels")?;
    let (x, pi) = at("load dataset", io::load_dataset(features, labels))?;
    at("load dataset", LabelledData::new(x, pi).map_err(Error::from))
}

fn fit(cfg: &RunConfig) -> Staged<()> {
    let data = load_data(cfg)?;
    let trained = at("fit", harness::train(cfg.method, cfg.scale, &cfg.seeded_hyper(), &data))?;
    let path = cfg.model.clone().unwrap_or_else(|| cfg.out.join("model.toml"));
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        at("write model", io::ensure_dir(dir))?;
    }
    at(
        "write model",
        io::save_model(&path, &trained, data.pi.class_names(), &data.x.names_or_default()),
    )?;
    let m = &trained.model;
    if let Some(loss) = m.loss_trace.last() {
        println!("objective {loss:.6e} after {} iterations", m.loss_trace.len());
    }
    let top: Vec<String> = m
        .ranked_features()
        .into_iter()
        .take(5)
        .map(|i| format!("{}={:.4}", data.x.names_or_default()[i], m.w.as_slice()[i]))
        .collect();
    println!("top feature weights: {}", top.join(", "));
    println!("wrote {}", path.display());
    Ok(())
}

fn predict(cfg: &RunConfig) -> Staged<()> {
    let model_path = required(&cfg.model, "model")?;
    let saved = at("load model", io::load_model(model_path))?;
    let features = required(&cfg.features, "features")?;
    let x = at("load features", io::load_features(features))?;
    if x.dim() != saved.feature_names.len() {
        return Err(StageError {
            stage: "load features",
            error: Error::Data(format!(
                "{} has {} features but the model expects {}",
                features.display(),
                x.dim(),
                saved.feature_names.len()
            )),
        });
    }
    let pred = at("predict", saved.trained.predict_proba(&x))?;
    at("write predictions", io::ensure_dir(&cfg.out))?;
    let path = cfg.out.join("predictions.csv");
    at("write predictions", io::save_predictions(&path, &saved.class_names, &pred))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn settings(cfg: &RunConfig) -> CvSettings {
    CvSettings {
        n_replicates: cfg.n_replicates,
        train_fraction: cfg.train_fraction,
        master_seed: cfg.seed,
        workers: cfg.workers,
    }
}

fn cv(cfg: &RunConfig) -> Staged<()> {
    let (source, n) = if cfg.features.is_some() || cfg.labels.is_some() {
        let data = load_data(cfg)?;
        let n = data.len();
        (Source::Dataset(data), n)
    } else {
        let source = Source::Generator {
            toy: cfg.toy,
            d: cfg.d,
            t: cfg.t,
            sigma: cfg.sigma,
            blue_fraction: cfg.blue_fraction,
        };
        (source, cfg.t)
    };
    let n_train = (cfg.train_fraction * n as f64).round() as usize;
    let grid: Vec<_> = harness::method_grid(
        cfg.method,
        &cfg.hyper,
        &cfg.k_grid,
        &cfg.epsilon_e_grid,
        &cfg.epsilon_cl_grid,
        &cfg.epsilon_s_grid,
    )
    .into_iter()
    .filter(|h| h.k <= n_train)
    .collect();
    let scorer = MethodScorer {
        method: cfg.method,
        scale: cfg.scale,
    };
    let result = at("cross-validate", harness::grid_search(&source, &scorer, &grid, &settings(cfg)))?;
    let info = RunInfo {
        method: cfg.method,
        scale: cfg.scale,
        n_replicates: cfg.n_replicates,
        train_fraction: cfg.train_fraction,
        master_seed: cfg.seed,
    };
    let path = at("write report", io::save_cv_report(&cfg.out, &result, info))?;
    let best = result.best();
    let h = &best.hyper;
    println!(
        "selected K={} epsilon_e={} epsilon_CL={} epsilon_S={}: AUC {:.4} +- {:.4} ({} failed)",
        h.k, h.epsilon_e, h.epsilon_cl, h.epsilon_s, best.mean_auc, best.std_auc, best.n_failed
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn sweep(cfg: &RunConfig) -> Staged<()> {
    let grids = SweepGrids {
        k: cfg.k_grid.clone(),
        epsilon_e: cfg.epsilon_e_grid.clone(),
        epsilon_cl: cfg.epsilon_cl_grid.clone(),
        epsilon_s: cfg.epsilon_s_grid.clone(),
    };
    let report = at(
        "sweep",
        harness::barrier_sweep(
            &cfg.methods,
            &cfg.d_grid,
            &cfg.t_grid,
            cfg.sigma,
            &cfg.hyper,
            &grids,
            cfg.scale,
            &settings(cfg),
            cfg.auc_threshold,
        ),
    )?;
    let path = at("write report", io::save_sweep_report(&cfg.out, &report))?;
    for (m, outcome) in &report.barriers {
        println!("{}: {}", m.as_str(), io::describe_barrier(outcome));
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn info(cfg: &RunConfig) -> Staged<()> {
    let dm = d_max(cfg.t, LSTM_BARRIER_SLOPE);
    println!("D = {}, T = {}", cfg.d, cfg.t);
    println!("D_max = floor(T / {LSTM_BARRIER_SLOPE}) = {dm}");
    println!("feature subsets of size D_max: binom({}, {dm}) = {:.3e}", cfg.d, binomial(cfg.d, dm));
    Ok(())
}
