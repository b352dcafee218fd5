//! `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, later assignments win.
//! Lists are comma separated and may contain `logspace(a, b, n)` (n points
//! from 10^a to 10^b) and `range(a, b)` (integers a..=b). Every key has a
//! default; unknown keys are rejected.
//!
//! | key | default |
//! |-----|---------|
//! | `K`, `epsilon_e`, `epsilon_CL`, `epsilon_S`, `mode`, `tol`, `max_iter`, `n_restarts` | as [`Hyperparams::default`] |
//! | `seed` | 0 |
//! | `workers` | 0 (all cores) |
//! | `toy` | `toy1` |
//! | `D`, `T`, `sigma`, `blue_fraction` | 50, 600, 5, 0.5 |
//! | `features`, `labels`, `model` | unset |
//! | `out` | `.` |
//! | `scale` | `minmax` |
//! | `method` | `espa` |
//! | `methods` | `espa, kmeans_bayes` |
//! | `train_fraction` | 0.75 |
//! | `n_replicates` | 20 |
//! | `K_grid` | `range(2, 20)` |
//! | `epsilon_e_grid`, `epsilon_CL_grid`, `epsilon_S_grid` | `0, logspace(-5, -1, 5)` |
//! | `D_grid` | `10, 25, 50, 100` |
//! | `T_grid` | `40, 100, 200, 400, 800` |
//! | `auc_threshold` | 0.75 |

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use espa_core::{Hyperparams, Mode};

use crate::harness::Method;

/// Which synthetic problem a generator-backed run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Toy {
    Toy1,
    Toy2,
}

impl Toy {
    pub fn as_str(self) -> &'static str {
        match self {
            Toy::Toy1 => "toy1",
            Toy::Toy2 => "toy2",
        }
    }
}

impl FromStr for Toy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "toy1" => Ok(Toy::Toy1),
            "toy2" => Ok(Toy::Toy2),
            _ => Err(format!("expected toy1 or toy2, got {s:?}")),
        }
    }
}

/// Feature preprocessing applied before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    MinMax,
    None,
}

impl Scale {
    pub fn as_str(self) -> &'static str {
        match self {
            Scale::MinMax => "minmax",
            Scale::None => "none",
        }
    }
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "minmax" => Ok(Scale::MinMax),
            "none" => Ok(Scale::None),
            _ => Err(format!("expected minmax or none, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub hyper: Hyperparams,
    pub seed: u64,
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
    pub toy: Toy,
    pub d: usize,
    pub t: usize,
    pub sigma: f64,
    pub blue_fraction: f64,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: PathBuf,
    pub scale: Scale,
    pub method: Method,
    pub methods: Vec<Method>,
    pub train_fraction: f64,
    pub n_replicates: usize,
    pub k_grid: Vec<usize>,
    pub epsilon_e_grid: Vec<f64>,
    pub epsilon_cl_grid: Vec<f64>,
    pub epsilon_s_grid: Vec<f64>,
    pub d_grid: Vec<usize>,
    pub t_grid: Vec<usize>,
    pub auc_threshold: f64,
}

/// Every accepted key, in documentation order.
pub const KEYS: &[&str] = &[
    "K",
    "epsilon_e",
    "epsilon_CL",
    "epsilon_S",
    "mode",
    "tol",
    "max_iter",
    "n_restarts",
    "seed",
    "workers",
    "toy",
    "D",
    "T",
    "sigma",
    "blue_fraction",
    "features",
    "labels",
    "model",
    "out",
    "scale",
    "method",
    "methods",
    "train_fraction",
    "n_replicates",
    "K_grid",
    "epsilon_e_grid",
    "epsilon_CL_grid",
    "epsilon_S_grid",
    "D_grid",
    "T_grid",
    "auc_threshold",
];

fn default_epsilon_grid() -> Vec<f64> {
    vec![0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1]
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            hyper: Hyperparams::default(),
            seed: 0,
            workers: 0,
            toy: Toy::Toy1,
            d: 50,
            t: 600,
            sigma: 5.0,
            blue_fraction: 0.5,
            features: None,
            labels: None,
            model: None,
            out: PathBuf::from("."),
            scale: Scale::MinMax,
            method: Method::Espa,
            methods: vec![Method::Espa, Method::KmeansBayes],
            train_fraction: 0.75,
            n_replicates: 20,
            k_grid: (2..=20).collect(),
            epsilon_e_grid: default_epsilon_grid(),
            epsilon_cl_grid: default_epsilon_grid(),
            epsilon_s_grid: default_epsilon_grid(),
            d_grid: vec![10, 25, 50, 100],
            t_grid: vec![40, 100, 200, 400, 800],
            auc_threshold: 0.75,
        }
    }
}

/// Where an assignment came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Flag => f.write_str("command line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigErrorKind {
    Syntax,
    UnknownKey,
    Malformed,
    OutOfRange,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}", self.render())]
pub struct ConfigError {
    pub key: String,
    pub origin: Origin,
    pub kind: ConfigErrorKind,
    pub detail: String,
}

impl ConfigError {
    fn render(&self) -> String {
        let head = match self.kind {
            ConfigErrorKind::Syntax => format!("expected `key = value`, {}", self.origin),
            ConfigErrorKind::UnknownKey => format!("unknown key {}, {}", self.key, self.origin),
            ConfigErrorKind::Malformed => format!("malformed value for {}, {}", self.key, self.origin),
            ConfigErrorKind::OutOfRange => format!("{} out of range, {}", self.key, self.origin),
        };
        if self.detail.is_empty() {
            head
        } else {
            format!("{head}: {}", self.detail)
        }
    }
}

/// Parses configuration text on top of the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    cfg.apply_text(text)?;
    Ok(cfg)
}

impl RunConfig {
    /// Applies every assignment in `text`, in order.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let origin = Origin::Line(i + 1);
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError {
                    key: String::new(),
                    origin,
                    kind: ConfigErrorKind::Syntax,
                    detail: format!("{line:?}"),
                });
            };
            self.set(key.trim(), value.trim(), origin)?;
        }
        Ok(())
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), ConfigError> {
        let err = |kind, detail: String| ConfigError {
            key: key.to_string(),
            origin: origin.clone(),
            kind,
            detail,
        };
        let malformed = |detail: String| err(ConfigErrorKind::Malformed, detail);
        let range = |detail: &str| err(ConfigErrorKind::OutOfRange, detail.to_string());
        let value = unquote(value);
        let h = &mut self.hyper;
        match key {
            "K" => h.k = positive_int(value, malformed, range)?,
            "epsilon_e" => h.epsilon_e = non_negative(value, malformed, range)?,
            "epsilon_CL" => h.epsilon_cl = non_negative(value, malformed, range)?,
            "epsilon_S" => h.epsilon_s = non_negative(value, malformed, range)?,
            "mode" => h.mode = value.parse::<Mode>().map_err(|e| malformed(e.to_string()))?,
            "tol" => {
                let v = real(value, malformed)?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(range("must be positive"));
                }
                h.tol = v;
            }
            "max_iter" => h.max_iter = positive_int(value, malformed, range)?,
            "n_restarts" => h.n_restarts = positive_int(value, malformed, range)?,
            "seed" => self.seed = value.parse().map_err(|_| malformed(format!("{value:?}")))?,
            "workers" => self.workers = value.parse().map_err(|_| malformed(format!("{value:?}")))?,
            "toy" => self.toy = value.parse().map_err(malformed)?,
            "D" => {
                self.d = integer(value, malformed)?;
                if self.d < 2 {
                    return Err(range("need at least 2 features"));
                }
            }
            "T" => {
                self.t = integer(value, malformed)?;
                if self.t < 4 {
                    return Err(range("need at least 4 samples"));
                }
            }
            "sigma" => {
                let v = real(value, malformed)?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(range("must be positive"));
                }
                self.sigma = v;
            }
            "blue_fraction" => self.blue_fraction = open_unit(value, malformed, range)?,
            "features" => self.features = Some(PathBuf::from(value)),
            "labels" => self.labels = Some(PathBuf::from(value)),
            "model" => self.model = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "scale" => self.scale = value.parse().map_err(malformed)?,
            "method" => self.method = value.parse().map_err(malformed)?,
            "methods" => {
                let methods = split_top_level(value)
                    .into_iter()
                    .map(|m| m.parse::<Method>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(malformed)?;
                if methods.is_empty() {
                    return Err(range("list is empty"));
                }
                self.methods = methods;
            }
            "train_fraction" => self.train_fraction = open_unit(value, malformed, range)?,
            "n_replicates" => self.n_replicates = positive_int(value, malformed, range)?,
            "K_grid" => {
                let grid = int_list(value).map_err(malformed)?;
                if grid.is_empty() || grid.contains(&0) {
                    return Err(range("needs at least one entry, all positive"));
                }
                self.k_grid = grid;
            }
            "epsilon_e_grid" | "epsilon_CL_grid" | "epsilon_S_grid" => {
                let grid = real_list(value).map_err(malformed)?;
                if grid.is_empty() || grid.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(range("needs at least one entry, all non-negative"));
                }
                match key {
                    "epsilon_e_grid" => self.epsilon_e_grid = grid,
                    "epsilon_CL_grid" => self.epsilon_cl_grid = grid,
                    _ => self.epsilon_s_grid = grid,
                }
            }
            "D_grid" | "T_grid" => {
                let grid = int_list(value).map_err(malformed)?;
                let min = if key == "D_grid" { 2 } else { 4 };
                if grid.is_empty() || grid.iter().any(|&v| v < min) {
                    return Err(range(&format!("needs at least one entry, all >= {min}")));
                }
                if key == "D_grid" {
                    self.d_grid = grid;
                } else {
                    self.t_grid = grid;
                }
            }
            "auc_threshold" => {
                let v = real(value, malformed)?;
                if !(v > 0.5 && v < 1.0) {
                    return Err(range("must lie in (0.5, 1)"));
                }
                self.auc_threshold = v;
            }
            _ => return Err(err(ConfigErrorKind::UnknownKey, String::new())),
        }
        Ok(())
    }

    /// Hyperparameters with the run seed filled in.
    pub fn seeded_hyper(&self) -> Hyperparams {
        Hyperparams {
            seed: self.seed,
            ..self.hyper.clone()
        }
    }
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"')
        .and_then(|v| v.strip_suffix('"'))
        .unwrap_or(v)
}

fn real(v: &str, malformed: impl Fn(String) -> ConfigError) -> Result<f64, ConfigError> {
    v.parse::<f64>().map_err(|_| malformed(format!("{v:?} is not a number")))
}

fn integer(v: &str, malformed: impl Fn(String) -> ConfigError) -> Result<usize, ConfigError> {
    v.parse::<usize>()
        .map_err(|_| malformed(format!("{v:?} is not a non-negative integer")))
}

fn positive_int(
    v: &str,
    malformed: impl Fn(String) -> ConfigError,
    range: impl Fn(&str) -> ConfigError,
) -> Result<usize, ConfigError> {
    match v.parse::<i64>() {
        Ok(n) if n >= 1 => Ok(n as usize),
        Ok(_) => Err(range("must be at least 1")),
        Err(_) => Err(malformed(format!("{v:?} is not an integer"))),
    }
}

fn non_negative(
    v: &str,
    malformed: impl Fn(String) -> ConfigError,
    range: impl Fn(&str) -> ConfigError,
) -> Result<f64, ConfigError> {
    let x = real(v, malformed)?;
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(range("must be finite and non-negative"))
    }
}

fn open_unit(
    v: &str,
    malformed: impl Fn(String) -> ConfigError,
    range: impl Fn(&str) -> ConfigError,
) -> Result<f64, ConfigError> {
    let x = real(v, malformed)?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(range("must lie in (0, 1)"))
    }
}

/// Splits on commas outside parentheses.
fn split_top_level(v: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in v.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(v[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(v[start..].trim());
    parts.retain(|p| !p.is_empty());
    parts
}

/// `name(a, b, ...)` → arguments, if `item` is a call of `name`.
fn call_args<'a>(item: &'a str, name: &str) -> Option<Vec<&'a str>> {
    let inner = item.strip_prefix(name)?.trim_start().strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.split(',').map(str::trim).collect())
}

fn real_list(v: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in split_top_level(v) {
        if let Some(args) = call_args(item, "logspace") {
            let [a, b, n] = args[..] else {
                return Err(format!("logspace takes 3 arguments in {item:?}"));
            };
            let a: f64 = a.parse().map_err(|_| format!("bad start in {item:?}"))?;
            let b: f64 = b.parse().map_err(|_| format!("bad stop in {item:?}"))?;
            let n: usize = n.parse().map_err(|_| format!("bad count in {item:?}"))?;
            out.extend(logspace(a, b, n));
        } else if let Some(args) = call_args(item, "range") {
            out.extend(int_range(&args, item)?.into_iter().map(|v| v as f64));
        } else {
            out.push(item.parse().map_err(|_| format!("{item:?} is not a number"))?);
        }
    }
    Ok(out)
}

fn int_list(v: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for item in split_top_level(v) {
        if let Some(args) = call_args(item, "range") {
            out.extend(int_range(&args, item)?);
        } else {
            out.push(
                item.parse()
                    .map_err(|_| format!("{item:?} is not a non-negative integer"))?,
            );
        }
    }
    Ok(out)
}

fn int_range(args: &[&str], item: &str) -> Result<Vec<usize>, String> {
    let [a, b] = args[..] else {
        return Err(format!("range takes 2 arguments in {item:?}"));
    };
    let a: usize = a.parse().map_err(|_| format!("bad start in {item:?}"))?;
    let b: usize = b.parse().map_err(|_| format!("bad stop in {item:?}"))?;
    Ok((a..=b).collect())
}

/// `n` points from `10^a` to `10^b`, evenly spaced in the exponent.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![10f64.powf(a)],
        _ => (0..n)
            .map(|i| {
                let e = a + (b - a) * i as f64 / (n - 1) as f64;
                // exact powers for integral exponents
                if e.fract() == 0.0 {
                    format!("1e{}", e as i64).parse().unwrap()
                } else {
                    10f64.powf(e)
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_on_defaults() {
        let cfg = parse_config("K = 3\nepsilon_e = 1e-4").unwrap();
        assert_eq!(cfg.hyper.k, 3);
        assert_eq!(cfg.hyper.epsilon_e, 1e-4);
        let def = RunConfig::default();
        assert_eq!(cfg.hyper.epsilon_cl, def.hyper.epsilon_cl);
        assert_eq!(cfg.k_grid, def.k_grid);
    }

    #[test]
    fn negative_epsilon_names_key_and_line() {
        let e = parse_config("epsilon_CL = -1").unwrap_err();
        assert!(e.to_string().starts_with("epsilon_CL out of range, line 1"), "{e}");
    }

    #[test]
    fn k_grid_range_is_inclusive() {
        let cfg = parse_config("K_grid = range(2,20)").unwrap();
        assert_eq!(cfg.k_grid, (2..=20).collect::<Vec<_>>());
    }

    #[test]
    fn logspace_grid_matches_literal_list() {
        let cfg = parse_config("epsilon_e_grid = 0, logspace(-5, -1, 5)").unwrap();
        assert_eq!(cfg.epsilon_e_grid, vec![0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1]);
    }

    #[test]
    fn later_keys_win_and_comments_are_ignored() {
        let cfg = parse_config("# header\nK = 2 # first\n\nK = 7\n").unwrap();
        assert_eq!(cfg.hyper.k, 7);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let e = parse_config("K = 2\nbogus = 1").unwrap_err();
        assert_eq!(e.kind, ConfigErrorKind::UnknownKey);
        assert_eq!(e.origin, Origin::Line(2));
        assert!(e.to_string().contains("bogus"));
    }

    #[test]
    fn malformed_value_is_rejected() {
        let e = parse_config("tol = fast").unwrap_err();
        assert_eq!(e.kind, ConfigErrorKind::Malformed);
        assert!(e.to_string().contains("tol"));
    }

    #[test]
    fn missing_equals_is_a_syntax_error() {
        assert_eq!(parse_config("K 3").unwrap_err().kind, ConfigErrorKind::Syntax);
    }

    #[test]
    fn methods_and_paths() {
        let cfg = parse_config("methods = espa, spa_bayes\nfeatures = \"a b.csv\"").unwrap();
        assert_eq!(cfg.methods, vec![Method::Espa, Method::SpaBayes]);
        assert_eq!(cfg.features, Some(PathBuf::from("a b.csv")));
    }

    #[test]
    fn every_key_is_accepted() {
        let def = RunConfig::default();
        for key in KEYS {
            let value = match *key {
                "mode" => "fuzzy",
                "toy" => "toy2",
                "scale" => "none",
                "method" => "kmeans_bayes",
                "methods" => "espa",
                "blue_fraction" | "train_fraction" => "0.5",
                "auc_threshold" => "0.8",
                "D" | "T" | "D_grid" | "T_grid" => "10",
                _ => "1",
            };
            let mut cfg = def.clone();
            cfg.set(key, value, Origin::Flag).unwrap_or_else(|e| panic!("{key}: {e}"));
        }
    }
}
