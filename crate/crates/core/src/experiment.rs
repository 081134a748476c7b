//! Reproducible Monte Carlo runs: configs, parallel replication, summaries
//! and output files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::functionals::{empirical_stabilization_radius, FunctionalRecord, FunctionalValue, Model};
use crate::geometry::{Window, DEFAULT_MARGIN};
use crate::process::sample_ppp;
use crate::rng::{replication_seed, stream, Purpose};
use crate::stats::{ols, variance_scaling_fit, LinearFit, SampleSummary, ScalingFit};

pub const SCHEMA_VERSION: u32 = 1;
pub const SUMMARY_HEADER: &str = "model,n,M,mean,var,w1,ks,seed";
pub const REPLICATIONS_HEADER: &str = "model,n,replication,seed,value,admissible_count,dropped_zero_G";
pub const LONG_HEADER: &str = "n,metric,value";
pub const SEED_ENV: &str = "PAIRFUNC_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Config(format!("unknown format {s:?}; expected csv or json"))),
        }
    }
}

fn default_dim() -> usize {
    2
}
fn default_margin() -> f64 {
    DEFAULT_MARGIN
}
fn default_replications() -> usize {
    100
}

/// A run description. Unknown keys are rejected; omitted keys take the
/// defaults below and are echoed into the run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Locality; must match the model when given.
    #[serde(default)]
    pub k: Option<usize>,
    pub grid: Vec<f64>,
    /// Window coefficients `a_2..a_d`, default all 1.
    #[serde(default)]
    pub a: Option<Vec<f64>>,
    /// Growth exponents `α_2..α_d`, default all 1.
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub cutoff: Option<f64>,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub beta3: Option<f64>,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn new(model: Model, dim: usize, grid: Vec<f64>, replications: usize, seed: u64) -> Self {
        ExperimentConfig {
            model,
            dim,
            k: None,
            grid,
            a: None,
            alpha: None,
            replications,
            seed,
            cutoff: None,
            margin: DEFAULT_MARGIN,
            beta3: None,
            out: None,
            format: OutputFormat::Csv,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Replaces the seed with `PAIRFUNC_SEED` when that is set.
    pub fn apply_env(mut self) -> Result<Self> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v.trim().parse().map_err(|_| Error::Config(format!("{SEED_ENV} is not a u64: {v:?}")))?;
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(k) = self.k {
            if k != self.model.locality() {
                return Err(Error::Config(format!("k = {k} does not match {} (k = {})", self.model, self.model.locality())));
            }
        }
        if self.dim < self.model.min_dim() {
            return Err(Error::Config(format!("{} needs d ≥ {}", self.model, self.model.min_dim())));
        }
        if self.grid.is_empty() || self.grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("grid must be nonempty and strictly increasing".into()));
        }
        if self.replications < 2 {
            return Err(Error::Config("need at least two replications".into()));
        }
        if let Some(c) = self.cutoff {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Config(format!("cutoff must be positive, got {c}")));
            }
        }
        for n in &self.grid {
            self.window(*n).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn resolved_model(&self) -> Model {
        match self.cutoff {
            Some(c) => self.model.with_cutoff(c),
            None => self.model,
        }
    }

    pub fn window(&self, n: f64) -> Result<Window> {
        let m = self.dim.saturating_sub(1);
        let a = self.a.clone().unwrap_or_else(|| vec![1.0; m]);
        let alpha = self.alpha.clone().unwrap_or_else(|| vec![1.0; m]);
        Window::new(self.dim, n, a, alpha, self.margin)
    }

    /// The config with every default filled in, as canonical JSON.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        let m = self.dim.saturating_sub(1);
        c.k = Some(self.model.locality());
        c.a.get_or_insert_with(|| vec![1.0; m]);
        c.alpha.get_or_insert_with(|| vec![1.0; m]);
        c.cutoff = match self.resolved_model() {
            Model::Crossing { cutoff, .. } => Some(cutoff),
            _ => None,
        };
        c.out = None;
        serde_json::to_string(&c).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// All replication values of a run. `wall_time` is informational and never
/// written to output files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub version: String,
    pub seeds: Vec<Vec<u64>>,
    #[serde(skip)]
    pub values: Vec<Vec<FunctionalValue>>,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Summary of one grid point. Distances are absent when the sample has
/// zero variance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSummary {
    pub n: f64,
    pub m: usize,
    pub mean: f64,
    pub variance: f64,
    pub w1: Option<f64>,
    pub ks: Option<f64>,
    pub ks_pvalue: Option<f64>,
}

impl GridSummary {
    fn from_values(n: f64, raw: &[f64]) -> Self {
        let m = raw.len();
        let mean = raw.iter().sum::<f64>() / m as f64;
        let variance = raw.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1) as f64;
        let (w1, ks, p) = match SampleSummary::new(raw.to_vec()) {
            Ok(s) => (Some(s.w1()), Some(s.ks()), Some(s.ks_pvalue())),
            Err(_) => (None, None, None),
        };
        GridSummary { n, m, mean, variance, w1, ks, ks_pvalue: p }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub record: RunRecord,
    pub summaries: Vec<GridSummary>,
    pub fit: Option<ScalingFit>,
}

impl ExperimentOutput {
    pub fn scalars(&self, grid_index: usize) -> Vec<f64> {
        self.record.values[grid_index].iter().map(FunctionalValue::scalar).collect()
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Config("thread count must be positive".into()));
        }
        b = b.num_threads(t);
    }
    b.build().map_err(|e| Error::Config(e.to_string()))
}

/// Runs every replication at every grid point. Replication `r` at grid
/// index `e` draws from `replication_seed(seed, e, r)` alone, and results
/// are gathered in index order, so output does not depend on `threads`.
pub fn run_experiment(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentOutput> {
    config.validate()?;
    let start = Instant::now();
    let model = config.resolved_model();
    let marks = model.mark_model();
    let pool = pool(threads)?;
    let mut values = Vec::with_capacity(config.grid.len());
    let mut seeds = Vec::with_capacity(config.grid.len());
    for (e, n) in config.grid.iter().enumerate() {
        let window = config.window(*n)?;
        let s: Vec<u64> = (0..config.replications).map(|r| replication_seed(config.seed, e as u64, r as u64)).collect();
        let v: Vec<FunctionalValue> = pool.install(|| {
            s.par_iter()
                .map(|seed| {
                    let cfg = sample_ppp(&window, 1.0, &marks, *seed)?;
                    Ok(model.prepare(&cfg)?.value())
                })
                .collect::<Result<Vec<_>>>()
        })?;
        values.push(v);
        seeds.push(s);
    }
    let summaries: Vec<GridSummary> = config
        .grid
        .iter()
        .zip(&values)
        .map(|(n, v)| GridSummary::from_values(*n, &v.iter().map(FunctionalValue::scalar).collect::<Vec<_>>()))
        .collect();
    let fit = if summaries.len() >= 3 {
        variance_scaling_fit(&config.grid, &summaries.iter().map(|s| s.variance).collect::<Vec<_>>()).ok()
    } else {
        None
    };
    let record = RunRecord {
        config_hash: config.hash(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seeds,
        values,
        wall_time: start.elapsed(),
    };
    Ok(ExperimentOutput { config: config.clone(), record, summaries, fit })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| x.to_string())
}

pub fn summary_csv(out: &ExperimentOutput) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    for g in &out.summaries {
        let _ = writeln!(s, "{},{},{},{},{},{},{},{}", out.config.model, g.n, g.m, g.mean, g.variance, opt(g.w1), opt(g.ks), out.config.seed);
    }
    s
}

pub fn replications_csv(out: &ExperimentOutput) -> String {
    let mut s = format!("{REPLICATIONS_HEADER}\n");
    for ((n, vals), seeds) in out.config.grid.iter().zip(&out.record.values).zip(&out.record.seeds) {
        for (r, (v, seed)) in vals.iter().zip(seeds).enumerate() {
            let rec = v.record();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                out.config.model,
                n,
                r,
                seed,
                v.scalar(),
                rec.admissible_count.map_or(String::new(), |c| c.to_string()),
                rec.dropped_zero_g.map_or(String::new(), |c| c.to_string()),
            );
        }
    }
    s
}

pub fn long_csv(out: &ExperimentOutput) -> String {
    let mut s = format!("{LONG_HEADER}\n");
    for g in &out.summaries {
        for (metric, v) in [("mean", Some(g.mean)), ("var", Some(g.variance)), ("w1", g.w1), ("ks", g.ks), ("ks_pvalue", g.ks_pvalue)] {
            let _ = writeln!(s, "{},{},{}", g.n, metric, opt(v));
        }
    }
    s
}

#[derive(Serialize)]
struct FitPoint {
    n: f64,
    variance: f64,
}

#[derive(Serialize)]
struct FitJson {
    slope: f64,
    stderr: f64,
    intercept: f64,
    r_squared: f64,
    points: Vec<FitPoint>,
}

pub fn fit_json(fit: &ScalingFit) -> String {
    let j = FitJson {
        slope: fit.slope,
        stderr: fit.stderr,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        points: fit.ns.iter().zip(&fit.variances).map(|(n, v)| FitPoint { n: *n, variance: *v }).collect(),
    };
    serde_json::to_string_pretty(&j).expect("fit serializes") + "\n"
}

#[derive(Serialize)]
struct Metadata<'a> {
    schema_version: u32,
    config_hash: &'a str,
    version: &'a str,
    standardization: &'static str,
    config: serde_json::Value,
}

pub fn metadata_json(out: &ExperimentOutput) -> String {
    let m = Metadata {
        schema_version: SCHEMA_VERSION,
        config_hash: &out.record.config_hash,
        version: &out.record.version,
        standardization: "self",
        config: serde_json::from_str(&out.config.canonical_json()).expect("canonical json parses"),
    };
    serde_json::to_string_pretty(&m).expect("metadata serializes") + "\n"
}

#[derive(Serialize)]
struct ReplicationRow<'a> {
    n: f64,
    replication: usize,
    seed: u64,
    #[serde(flatten)]
    value: &'a FunctionalRecord,
}

/// Writes the run's files into `dir` and returns their names.
pub fn write_outputs(out: &ExperimentOutput, dir: &Path, format: OutputFormat) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut files: Vec<(String, String)> = vec![("metadata.json".into(), metadata_json(out))];
    match format {
        OutputFormat::Csv => {
            files.push(("summary.csv".into(), summary_csv(out)));
            files.push(("replications.csv".into(), replications_csv(out)));
            files.push(("long.csv".into(), long_csv(out)));
        }
        OutputFormat::Json => {
            files.push(("summary.json".into(), serde_json::to_string_pretty(&out.summaries).expect("summaries serialize") + "\n"));
            let mut rows = Vec::new();
            let recs: Vec<Vec<FunctionalRecord>> = out.record.values.iter().map(|v| v.iter().map(|x| x.record()).collect()).collect();
            for (e, n) in out.config.grid.iter().enumerate() {
                for (r, rec) in recs[e].iter().enumerate() {
                    rows.push(ReplicationRow { n: *n, replication: r, seed: out.record.seeds[e][r], value: rec });
                }
            }
            files.push(("replications.json".into(), serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n"));
        }
    }
    if let Some(fit) = &out.fit {
        files.push(("fit.json".into(), fit_json(fit)));
    }
    for (name, body) in &files {
        fs::write(dir.join(name), body)?;
    }
    Ok(files.into_iter().map(|(n, _)| n).collect())
}

/// Empirical stabilization radii over independent `(configuration, x)`
/// draws, with a log-linear fit of the survival function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilizationReport {
    pub model: Model,
    pub n: f64,
    pub draws: usize,
    pub radii: Vec<u64>,
    /// `(m, #{R̂ ≥ m})` for `m = 1..=max R̂`.
    pub survival: Vec<(u64, usize)>,
    /// OLS of `ln P̂(R̂ ≥ m)` on `m` over `m` with at least `min_count` exceedances.
    pub fit: Option<LinearFit>,
}

pub fn stabilization_survey(
    model: &Model,
    window: &Window,
    draws: usize,
    seed: u64,
    min_count: usize,
    threads: Option<usize>,
) -> Result<StabilizationReport> {
    if draws == 0 {
        return Err(Error::Config("need at least one draw".into()));
    }
    let marks = model.mark_model();
    let sides = window.sides().to_vec();
    let radii: Vec<u64> = pool(threads)?.install(|| {
        (0..draws)
            .into_par_iter()
            .map(|r| {
                let cfg = sample_ppp(window, 1.0, &marks, replication_seed(seed, 0, r as u64))?;
                let mut rng = stream(seed, 0, r as u64, Purpose::Insertions);
                let x: Vec<f64> = sides.iter().map(|s| rng.random_range(0.0..*s)).collect();
                let mark = marks.sample(&mut rng);
                empirical_stabilization_radius(model, &cfg, &x, mark)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let max = radii.iter().copied().max().unwrap_or(1);
    let survival: Vec<(u64, usize)> = (1..=max).map(|m| (m, radii.iter().filter(|r| **r >= m).count())).collect();
    let pts: Vec<(f64, f64)> = survival
        .iter()
        .filter(|(_, c)| *c >= min_count)
        .map(|(m, c)| (*m as f64, (*c as f64 / draws as f64).ln()))
        .collect();
    let fit = if pts.len() >= 3 {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        ols(&x, &y).ok()
    } else {
        None
    };
    Ok(StabilizationReport { model: *model, n: window.n(), draws, radii, survival, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(model: &str) -> ExperimentConfig {
        ExperimentConfig::new(model.parse().unwrap(), 2, vec![4.0, 6.0, 8.0], 6, 99)
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = ExperimentConfig::from_json(r#"{"model":"inversion-uniform","grid":[4,8]}"#).unwrap();
        assert_eq!(c.dim, 2);
        assert_eq!(c.replications, 100);
        assert_eq!(c.margin, DEFAULT_MARGIN);
        for bad in [
            r#"{"model":"inversion-uniform","grid":[8,4]}"#,
            r#"{"model":"inversion-uniform","grid":[4],"replications":1}"#,
            r#"{"model":"crossing-fixed","grid":[4],"k":1}"#,
            r#"{"model":"nope","grid":[4]}"#,
            r#"{"model":"inversion-tree","grid":[4],"dim":1}"#,
            r#"{"model":"inversion-uniform","grid":[4],"colour":"red"}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn hash_covers_defaults() {
        let a = ExperimentConfig::from_json(r#"{"model":"inversion-uniform","grid":[4,8]}"#).unwrap();
        let b = ExperimentConfig::from_json(r#"{"model":"inversion-uniform","grid":[4,8],"dim":2,"k":1,"a":[1]}"#).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::from_json(r#"{"model":"inversion-uniform","grid":[4,8],"seed":1}"#).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn smoke_every_model() {
        for m in ["crossing-fixed", "crossing-directed", "crossing-max", "crossing-localized:3", "inversion-uniform", "inversion-tree", "treelog-uniform", "treelog-tree"] {
            let mut c = small(m);
            c.replications = 2;
            c.grid = vec![3.0];
            let out = run_experiment(&c, Some(2)).unwrap();
            assert_eq!(out.record.values[0].len(), 2);
            assert_eq!(replications_csv(&out).lines().count(), 3);
        }
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let c = small("treelog-uniform");
        let a = run_experiment(&c, Some(1)).unwrap();
        let b = run_experiment(&c, Some(4)).unwrap();
        assert_eq!(summary_csv(&a), summary_csv(&b));
        assert_eq!(replications_csv(&a), replications_csv(&b));
        assert_eq!(metadata_json(&a), metadata_json(&b));
    }

    #[test]
    fn replication_value_independent_of_replication_count() {
        let mut c = small("inversion-uniform");
        let a = run_experiment(&c, Some(3)).unwrap();
        c.replications = 9;
        let b = run_experiment(&c, Some(3)).unwrap();
        assert_eq!(a.record.values[1][..], b.record.values[1][..6]);
    }

    #[test]
    fn golden_headers() {
        let out = run_experiment(&small("inversion-uniform"), Some(1)).unwrap();
        assert_eq!(summary_csv(&out).lines().next().unwrap(), "model,n,M,mean,var,w1,ks,seed");
        assert_eq!(replications_csv(&out).lines().next().unwrap(), "model,n,replication,seed,value,admissible_count,dropped_zero_G");
        assert_eq!(long_csv(&out).lines().next().unwrap(), "n,metric,value");
        let fit: serde_json::Value = serde_json::from_str(&fit_json(out.fit.as_ref().unwrap())).unwrap();
        let keys: Vec<&String> = fit.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["intercept", "points", "r_squared", "slope", "stderr"]);
        let meta: serde_json::Value = serde_json::from_str(&metadata_json(&out)).unwrap();
        assert_eq!(meta["schema_version"], 1);
        assert_eq!(meta["config"]["margin"], DEFAULT_MARGIN);
    }

    #[test]
    fn written_files_are_reproducible() {
        let c = small("crossing-fixed");
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        for fmt in [OutputFormat::Csv, OutputFormat::Json] {
            let names = write_outputs(&run_experiment(&c, Some(1)).unwrap(), d1.path(), fmt).unwrap();
            write_outputs(&run_experiment(&c, Some(3)).unwrap(), d2.path(), fmt).unwrap();
            for n in names {
                assert_eq!(fs::read(d1.path().join(&n)).unwrap(), fs::read(d2.path().join(&n)).unwrap(), "{n}");
            }
        }
    }

    #[test]
    fn fixed_radius_survey_is_all_ones() {
        let m: Model = "crossing-fixed".parse().unwrap();
        let w = Window::cube(3, 4.0).unwrap();
        let rep = stabilization_survey(&m, &w, 20, 5, 10, Some(2)).unwrap();
        assert!(rep.radii.iter().all(|r| *r == 1));
        assert_eq!(rep.survival, vec![(1, 20)]);
        assert!(rep.fit.is_none());
    }
}
