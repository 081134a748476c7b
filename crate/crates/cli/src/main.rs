use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use pairfunc::barcodes::shield::{centred_box, inner_cube, outside_score_changes, ShieldedBoxConfig};
use pairfunc::experiment::{
    fit_json, long_csv, run_experiment, stabilization_survey, summary_csv, write_outputs, ExperimentConfig, ExperimentOutput,
    OutputFormat,
};
use pairfunc::functionals::{evaluate, FunctionalValue, Model};
use pairfunc::graphs::{ConnectivityKernel, GeometricGraph};
use pairfunc::process::sample_ppp;
use pairfunc::rng::{stream, Purpose};
use pairfunc::stats::{binomial_lower_tail_bound, poisson_upper_tail_bound};
use pairfunc::{AxisBox, Error, MarkModel, PointConfiguration, Window};

#[derive(Parser)]
#[command(name = "pairfunc", version, about = "Monte Carlo experiments for stabilizing Poisson pair functionals")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; flags given on the command line override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, env = "PAIRFUNC_SEED")]
    seed: Option<u64>,
    /// Output directory (experiments) or file (sample).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Connectivity kernel for crossing models: fixed, directed, max, localized:N.
    #[arg(long, global = true)]
    kernel: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a marked Poisson process and print it in the points format.
    Sample {
        #[command(flatten)]
        window: WindowArgs,
        /// Take the mark law from this model.
        #[arg(long, conflicts_with = "marks")]
        model: Option<String>,
        /// Mark law: none, uniform01, exp[:rate], uniform-radius:lo:hi.
        #[arg(long)]
        marks: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        intensity: f64,
    },
    /// Evaluate a model's functional on a points file.
    Evaluate {
        #[arg(long)]
        model: String,
        #[arg(long)]
        points: PathBuf,
        /// Explicit edge list for crossing models instead of a kernel graph.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Replicate at each grid point and report distances to N(0,1).
    Clt(ExperimentArgs),
    /// Replicate at each grid point and fit the variance exponent.
    Scaling(ExperimentArgs),
    /// Survey empirical stabilization radii.
    Stabilization {
        #[arg(long)]
        model: String,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long, default_value_t = 200)]
        draws: usize,
        /// Minimum exceedance count for a survival point to enter the fit.
        #[arg(long, default_value_t = 10)]
        min_count: usize,
    },
    /// Check shield membership of a box and the shield property under random insertions.
    ShieldCheck {
        #[arg(long)]
        fixture: PathBuf,
        /// Lower corner of the side-8 box; defaults to the box centred in time.
        #[arg(long, value_delimiter = ',')]
        box_lo: Option<Vec<f64>>,
        #[arg(long, default_value_t = 20)]
        insertions: usize,
    },
    /// Evaluate a closed-form concentration bound.
    Bounds {
        #[command(subcommand)]
        which: Bound,
    },
}

#[derive(Subcommand)]
enum Bound {
    /// exp(−mp(1/2 + ½ ln ½)) for P(Bin(m, p) < mp/2).
    Binomial { m: u64, p: f64 },
    /// exp(−(ln 8)/4 · ℓ) for P(Poisson(ℓ) > 8ℓ).
    Poisson { l: f64 },
}

#[derive(Args)]
struct WindowArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 16.0)]
    n: f64,
    /// Side coefficients a_2..a_d, comma separated.
    #[arg(long, value_delimiter = ',')]
    a: Option<Vec<f64>>,
    #[arg(long)]
    margin: Option<f64>,
}

impl WindowArgs {
    fn window(&self) -> pairfunc::Result<Window> {
        let m = self.dim.saturating_sub(1);
        let a = self.a.clone().unwrap_or_else(|| vec![1.0; m]);
        Window::new(self.dim, self.n, a, vec![1.0; m], self.margin.unwrap_or(pairfunc::geometry::DEFAULT_MARGIN))
    }
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// Window scales, comma separated and strictly increasing.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    cutoff: Option<f64>,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Config(_) => (2, "config"),
            Error::Parse { .. } => (2, "parse"),
            Error::InvalidParameter(_) | Error::InvalidWindow(_) | Error::MalformedBox(_) | Error::DimensionMismatch { .. } => (2, "invalid"),
            Error::MarkMismatch(_) => (2, "marks"),
            Error::Io(_) => (3, "io"),
            Error::Precondition(_) => (3, "precondition"),
            _ => (3, "runtime"),
        };
        Failure { code, kind, message: e.to_string() }
    }
}

fn config_error(msg: impl Into<String>) -> Failure {
    Failure { code: 2, kind: "config", message: msg.into() }
}

type CliResult<T> = Result<T, Failure>;

fn parse_model(s: &str, kernel: Option<&str>) -> CliResult<Model> {
    let m: Model = s.parse()?;
    match (m, kernel) {
        (Model::Crossing { cutoff, .. }, Some(k)) => Ok(Model::Crossing { kernel: k.parse::<ConnectivityKernel>()?, cutoff }),
        (_, Some(_)) => Err(config_error("--kernel only applies to crossing models")),
        (m, None) => Ok(m),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure { code: 3, kind: "io", message: format!("{}: {e}", path.display()) })
}

fn experiment_config(common: &Common, args: &ExperimentArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => serde_json::from_str::<ExperimentConfig>(&read(p)?).map_err(|e| config_error(format!("{}: {e}", p.display())))?,
        None => {
            let model = args.model.as_deref().ok_or_else(|| config_error("need --model or --config"))?;
            let grid = args.grid.clone().ok_or_else(|| config_error("need --grid or --config"))?;
            ExperimentConfig::new(model.parse()?, 2, grid, 100, 0)
        }
    };
    if let Some(m) = &args.model {
        cfg.model = m.parse()?;
    }
    if let Some(k) = &common.kernel {
        cfg.model = parse_model(&cfg.model.to_string(), Some(k))?;
    }
    if let Some(d) = args.dim {
        cfg.dim = d;
    }
    if let Some(g) = &args.grid {
        cfg.grid = g.clone();
    }
    if let Some(r) = args.replications {
        cfg.replications = r;
    }
    if let Some(m) = args.margin {
        cfg.margin = m;
    }
    if args.cutoff.is_some() {
        cfg.cutoff = args.cutoff;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(f) = common.format {
        cfg.format = f;
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_and_write(common: &Common, args: &ExperimentArgs) -> CliResult<ExperimentOutput> {
    let cfg = experiment_config(common, args)?;
    let out = run_experiment(&cfg, common.threads)?;
    if let Some(dir) = &cfg.out {
        write_outputs(&out, Path::new(dir), cfg.format)?;
    }
    Ok(out)
}

fn print_value(v: &FunctionalValue, format: OutputFormat) {
    match format {
        OutputFormat::Json => println!("{}", serde_json::to_string(&v.record()).expect("record serializes")),
        OutputFormat::Csv => match v {
            FunctionalValue::DoubleSum { value } => println!("{value}"),
            FunctionalValue::SumLogSum { value, admissible, dropped_zero_g } | FunctionalValue::ProductSum { log_value: value, admissible, dropped_zero_g } => {
                let (m, e) = v.product_scientific().expect("sum-log-sum has a product form");
                println!("{value}");
                println!("product {m:.6}e{e}");
                println!("admissible {admissible}");
                println!("dropped_zero_G {dropped_zero_g}");
            }
        },
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let common = &cli.common;
    let format = common.format.unwrap_or_default();
    match &cli.command {
        Command::Sample { window, model, marks, intensity } => {
            let marks = match (model, marks) {
                (Some(m), _) => parse_model(m, common.kernel.as_deref())?.mark_model(),
                (None, Some(s)) => s.parse::<MarkModel>()?,
                (None, None) => MarkModel::NoMark,
            };
            let cfg = sample_ppp(&window.window()?, *intensity, &marks, common.seed.unwrap_or(0))?;
            match &common.out {
                Some(p) => fs::write(p, cfg.to_text()).map_err(Error::from)?,
                None => print!("{}", cfg.to_text()),
            }
        }
        Command::Evaluate { model, points, graph } => {
            let model = parse_model(model, common.kernel.as_deref())?;
            let cfg = PointConfiguration::from_text(&read(points)?)?;
            let v = match graph {
                Some(g) => {
                    if !matches!(model, Model::Crossing { .. }) {
                        return Err(config_error("--graph needs a crossing model"));
                    }
                    FunctionalValue::DoubleSum { value: GeometricGraph::from_text(&read(g)?, &cfg)?.crossing_number() as f64 }
                }
                None => evaluate(&model, &cfg)?,
            };
            print_value(&v, format);
        }
        Command::Clt(args) => {
            let out = run_and_write(common, args)?;
            match format {
                OutputFormat::Csv => print!("{}", summary_csv(&out)),
                OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&out.summaries).expect("summaries serialize")),
            }
        }
        Command::Scaling(args) => {
            let out = run_and_write(common, args)?;
            match &out.fit {
                Some(fit) => match format {
                    OutputFormat::Json => print!("{}", fit_json(fit)),
                    OutputFormat::Csv => {
                        print!("{}", long_csv(&out));
                        println!("slope {} stderr {}", fit.slope, fit.stderr);
                    }
                },
                None => return Err(config_error("scaling needs at least three grid points with positive variance")),
            }
        }
        Command::Stabilization { model, window, draws, min_count } => {
            let model = parse_model(model, common.kernel.as_deref())?;
            let rep = stabilization_survey(&model, &window.window()?, *draws, common.seed.unwrap_or(0), *min_count, common.threads)?;
            match format {
                OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes")),
                OutputFormat::Csv => {
                    println!("m,count,survival");
                    for (m, c) in &rep.survival {
                        println!("{m},{c},{}", *c as f64 / rep.draws as f64);
                    }
                    if let Some(f) = rep.fit {
                        println!("slope {} r_squared {}", f.slope, f.r_squared);
                    }
                }
            }
        }
        Command::ShieldCheck { fixture, box_lo, insertions } => {
            let cfg = PointConfiguration::from_text(&read(fixture)?)?;
            let bx = match box_lo {
                Some(lo) => AxisBox::new(lo.clone(), lo.iter().map(|x| x + pairfunc::barcodes::shield::SHIELD_SIDE).collect())?,
                None => centred_box(cfg.window())?,
            };
            let report = ShieldedBoxConfig::from_configuration(&cfg, &bx)?.report();
            if report.member() {
                let inner = inner_cube(&bx);
                let mut rng = stream(common.seed.unwrap_or(0), 0, 0, Purpose::Insertions);
                let mut changed = 0usize;
                for _ in 0..*insertions {
                    let x: Vec<f64> = inner.lo.iter().zip(&inner.hi).map(|(l, h)| l + (h - l) * rng.random::<f64>()).collect();
                    if !outside_score_changes(&cfg, &bx, &x)?.is_empty() {
                        changed += 1;
                    }
                }
                println!("member=true, property={}", changed == 0);
                if changed > 0 {
                    eprintln!("{changed} of {insertions} insertions changed outside scores");
                }
            } else {
                println!("member=false, property=unchecked");
                eprintln!("failed clauses: {}", report.failed().join(", "));
            }
        }
        Command::Bounds { which } => {
            let b = match which {
                Bound::Binomial { m, p } => binomial_lower_tail_bound(*m, *p)?,
                Bound::Poisson { l } => poisson_upper_tail_bound(*l)?,
            };
            match format {
                OutputFormat::Json => println!("{{\"bound\":{b}}}"),
                OutputFormat::Csv => println!("{b:.2e}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("pairfunc-error code={} kind={} message={:?}", f.code, f.kind, f.message);
            ExitCode::from(f.code)
        }
    }
}
