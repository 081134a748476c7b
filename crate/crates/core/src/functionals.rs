//! Double sums, sum-log-sums, difference operators and empirical
//! stabilization radii over the three model families.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::barcodes::{build_merge_forest, elder_lifetimes, inversion_count, inversion_degrees, inversion_score, uniform_lifetimes, Barcode};
use crate::error::{Error, Result};
use crate::geometry::{chebyshev, DEFAULT_CUTOFF};
use crate::graphs::{build_edges, ConnectivityKernel, GeometricGraph};
use crate::process::{Mark, MarkModel, PointConfiguration, PointId};

/// Source of bar lifetimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LifetimeModel {
    Uniform,
    PoissonTree { rho: f64 },
}

/// One of the model families, each fixing its pair score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Model {
    /// Projected crossings of a geometric graph, `k = 2`.
    Crossing { kernel: ConnectivityKernel, cutoff: f64 },
    /// Barcode inversions, `k = 1`.
    Inversion(LifetimeModel),
    /// Log tree realization number: sum-log-sum of inversion degrees over
    /// admissible bars.
    TreeLog(LifetimeModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionalKind {
    DoubleSum,
    SumLogSum,
}

impl Model {
    pub fn crossing(kernel: ConnectivityKernel) -> Self {
        Model::Crossing { kernel, cutoff: DEFAULT_CUTOFF }
    }

    /// Mark distribution the model samples with.
    pub fn mark_model(&self) -> MarkModel {
        match self {
            Model::Crossing { kernel, .. } if !kernel.needs_marks() => MarkModel::NoMark,
            Model::Crossing { .. } => MarkModel::ExponentialTail { rate: 1.0 },
            Model::Inversion(LifetimeModel::Uniform) | Model::TreeLog(LifetimeModel::Uniform) => MarkModel::Uniform01,
            _ => MarkModel::NoMark,
        }
    }

    pub fn locality(&self) -> usize {
        match self {
            Model::Crossing { .. } => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> FunctionalKind {
        match self {
            Model::TreeLog(_) => FunctionalKind::SumLogSum,
            _ => FunctionalKind::DoubleSum,
        }
    }

    pub fn min_dim(&self) -> usize {
        match self {
            Model::Crossing { .. } | Model::Inversion(LifetimeModel::PoissonTree { .. }) | Model::TreeLog(LifetimeModel::PoissonTree { .. }) => 2,
            _ => 1,
        }
    }

    pub fn with_cutoff(self, cutoff: f64) -> Self {
        match self {
            Model::Crossing { kernel, .. } => Model::Crossing { kernel, cutoff },
            m => m,
        }
    }

    pub fn prepare(&self, cfg: &PointConfiguration) -> Result<ModelInstance> {
        ModelInstance::new(*self, cfg)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let life = |l: &LifetimeModel| match l {
            LifetimeModel::Uniform => "uniform",
            LifetimeModel::PoissonTree { .. } => "tree",
        };
        match self {
            Model::Crossing { kernel, .. } => write!(f, "crossing-{kernel}"),
            Model::Inversion(l) => write!(f, "inversion-{}", life(l)),
            Model::TreeLog(l) => write!(f, "treelog-{}", life(l)),
        }
    }
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let tree = LifetimeModel::PoissonTree { rho: 1.0 };
        match s {
            "inversion-uniform" => Ok(Model::Inversion(LifetimeModel::Uniform)),
            "inversion-tree" => Ok(Model::Inversion(tree)),
            "treelog-uniform" => Ok(Model::TreeLog(LifetimeModel::Uniform)),
            "treelog-tree" => Ok(Model::TreeLog(tree)),
            _ => match s.strip_prefix("crossing-") {
                Some(k) => Ok(Model::crossing(k.parse()?)),
                None => Err(Error::Config(format!(
                    "unknown model {s:?}; expected crossing-<kernel>, inversion-uniform, inversion-tree, treelog-uniform or treelog-tree"
                ))),
            },
        }
    }
}

impl TryFrom<String> for Model {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Model> for String {
    fn from(m: Model) -> String {
        m.to_string()
    }
}

/// Which points enter a sum-log-sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdmissibilityRule {
    All,
    /// Inside the shrunk window and lifetime in `(0, 1)`.
    TreeRealization,
}

/// A pair score over the points of one configuration, addressed by index.
pub trait PairScore {
    fn len(&self) -> usize;
    fn score(&self, z: usize, v: usize) -> f64;
    fn locality(&self) -> usize;
    fn integer_valued(&self) -> bool;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A pair score given by a closure; handy for custom scores and tests.
pub struct FnScore<F: Fn(usize, usize) -> f64> {
    pub len: usize,
    pub k: usize,
    pub integer: bool,
    pub f: F,
}

impl<F: Fn(usize, usize) -> f64> PairScore for FnScore<F> {
    fn len(&self) -> usize {
        self.len
    }
    fn score(&self, z: usize, v: usize) -> f64 {
        if z == v {
            0.0
        } else {
            (self.f)(z, v)
        }
    }
    fn locality(&self) -> usize {
        self.k
    }
    fn integer_valued(&self) -> bool {
        self.integer
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Graph {
        graph: Box<GeometricGraph>,
        crossings: u64,
        /// Ordered index pair → count of eighths.
        eighths: HashMap<(usize, usize), u64>,
    },
    Bars {
        barcode: Barcode,
    },
}

/// A model built on one configuration: the graph or barcode plus whatever
/// is needed to read off pair scores.
#[derive(Debug, Clone)]
pub struct ModelInstance {
    model: Model,
    cfg: PointConfiguration,
    repr: Repr,
}

impl ModelInstance {
    pub fn new(model: Model, cfg: &PointConfiguration) -> Result<Self> {
        if cfg.dim() < model.min_dim() {
            return Err(Error::DimensionMismatch { expected: model.min_dim(), got: cfg.dim() });
        }
        let repr = match model {
            Model::Crossing { kernel, cutoff } => {
                let graph = build_edges(cfg, &kernel)?.with_cutoff(cutoff)?;
                let pairs = graph.crossing_pairs();
                let mut eighths = HashMap::new();
                for ((a, b), (c, d)) in &pairs {
                    for (z, v) in [(*a, *c), (*a, *d), (*b, *c), (*b, *d)] {
                        *eighths.entry((z, v)).or_insert(0) += 1;
                        *eighths.entry((v, z)).or_insert(0) += 1;
                    }
                }
                Repr::Graph { graph: Box::new(graph), crossings: pairs.len() as u64, eighths }
            }
            Model::Inversion(l) | Model::TreeLog(l) => {
                let barcode = match l {
                    LifetimeModel::Uniform => uniform_lifetimes(cfg)?,
                    LifetimeModel::PoissonTree { rho } => elder_lifetimes(&build_merge_forest(cfg, rho)?),
                };
                Repr::Bars { barcode }
            }
        };
        Ok(ModelInstance { model, cfg: cfg.clone(), repr })
    }

    pub fn model(&self) -> Model {
        self.model
    }
    pub fn config(&self) -> &PointConfiguration {
        &self.cfg
    }

    pub fn graph(&self) -> Option<&GeometricGraph> {
        match &self.repr {
            Repr::Graph { graph, .. } => Some(graph.as_ref()),
            _ => None,
        }
    }

    pub fn barcode(&self) -> Option<&Barcode> {
        match &self.repr {
            Repr::Bars { barcode } => Some(barcode),
            _ => None,
        }
    }

    /// Admissibility of every point under `rule`.
    pub fn admissible(&self, rule: AdmissibilityRule) -> Vec<bool> {
        match rule {
            AdmissibilityRule::All => vec![true; self.cfg.len()],
            AdmissibilityRule::TreeRealization => {
                let shrunk = self.cfg.window().shrunk();
                self.cfg
                    .points()
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        shrunk.as_ref().is_some_and(|b| b.contains(&p.position))
                            && self.barcode().is_some_and(|bc| bc.bars[i].admissible())
                    })
                    .collect()
            }
        }
    }

    fn default_rule(&self) -> AdmissibilityRule {
        match self.model {
            Model::TreeLog(_) => AdmissibilityRule::TreeRealization,
            _ => AdmissibilityRule::All,
        }
    }

    /// `G(Z)` for every point, computed from the sparse structure.
    pub fn compound_scores(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Graph { eighths, .. } => {
                let mut g = vec![0u64; self.cfg.len()];
                for ((z, _), c) in eighths {
                    g[*z] += c;
                }
                g.into_iter().map(|c| c as f64 / 8.0).collect()
            }
            Repr::Bars { barcode } => {
                let deg = inversion_degrees(barcode);
                let adm = self.admissible(self.default_rule());
                deg.into_iter().zip(adm).map(|(d, a)| if a { d as f64 } else { 0.0 }).collect()
            }
        }
    }

    /// The model's functional, via the fast paths.
    pub fn value(&self) -> FunctionalValue {
        match (&self.repr, self.model.kind()) {
            (Repr::Graph { crossings, .. }, _) => FunctionalValue::DoubleSum { value: *crossings as f64 },
            (Repr::Bars { barcode }, FunctionalKind::DoubleSum) => {
                FunctionalValue::DoubleSum { value: inversion_count(barcode) as f64 }
            }
            (Repr::Bars { barcode }, FunctionalKind::SumLogSum) => {
                let deg = inversion_degrees(barcode);
                let adm = self.admissible(AdmissibilityRule::TreeRealization);
                log_sum(deg.iter().map(|d| *d as f64), &adm)
            }
        }
    }

    /// All nonzero pair scores keyed by point ids.
    pub fn score_table(&self) -> ScoreTable {
        let pts = self.cfg.points();
        let mut entries = BTreeMap::new();
        let denom = match &self.repr {
            Repr::Graph { eighths, .. } => {
                for ((z, v), c) in eighths {
                    entries.insert((pts[*z].id, pts[*v].id), *c);
                }
                8
            }
            Repr::Bars { barcode } => {
                let b = &barcode.bars;
                let adm = self.admissible(self.default_rule());
                for i in 0..b.len() {
                    if !adm[i] {
                        continue;
                    }
                    let lo = b.partition_point(|y| y.birth <= b[i].birth - 1.0);
                    let hi = b.partition_point(|y| y.birth < b[i].birth + 1.0);
                    for j in lo..hi {
                        if j != i && inversion_score(&b[i], &b[j]) == 1 {
                            entries.insert((pts[i].id, pts[j].id), 1);
                        }
                    }
                }
                1
            }
        };
        let positive = match self.model.kind() {
            FunctionalKind::SumLogSum => {
                let g = self.compound_scores();
                let adm = self.admissible(AdmissibilityRule::TreeRealization);
                Some((0..pts.len()).filter(|i| adm[*i] && g[*i] > 0.0).map(|i| pts[i].id).collect())
            }
            FunctionalKind::DoubleSum => None,
        };
        ScoreTable { denom, entries, positive }
    }
}

impl PairScore for ModelInstance {
    fn len(&self) -> usize {
        self.cfg.len()
    }

    fn score(&self, z: usize, v: usize) -> f64 {
        if z == v {
            return 0.0;
        }
        match &self.repr {
            Repr::Graph { eighths, .. } => eighths.get(&(z, v)).copied().unwrap_or(0) as f64 / 8.0,
            Repr::Bars { barcode } => {
                let pass = match self.model {
                    Model::TreeLog(_) => self.admissible(AdmissibilityRule::TreeRealization)[z],
                    _ => true,
                };
                if pass {
                    inversion_score(&barcode.bars[z], &barcode.bars[v]) as f64
                } else {
                    0.0
                }
            }
        }
    }

    fn locality(&self) -> usize {
        self.model.locality()
    }

    fn integer_valued(&self) -> bool {
        !matches!(self.model, Model::Crossing { .. })
    }
}

/// Sparse pair scores `numerator / denom` keyed by `(Z, V)` ids, plus the
/// set `A⁺` for sum-log-sum models.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub denom: u64,
    pub entries: BTreeMap<(PointId, PointId), u64>,
    pub positive: Option<BTreeSet<PointId>>,
}

impl ScoreTable {
    /// `Σ_Z Σ_V f` as an exact numerator over `denom`.
    pub fn numerator_sum(&self) -> u128 {
        self.entries.values().map(|v| *v as u128).sum()
    }

    pub fn get(&self, z: PointId, v: PointId) -> u64 {
        self.entries.get(&(z, v)).copied().unwrap_or(0)
    }
}

/// Value of a functional on one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionalValue {
    DoubleSum { value: f64 },
    SumLogSum { value: f64, admissible: u64, dropped_zero_g: u64 },
    /// `Π = exp(Σ^log)`, held as its natural log.
    ProductSum { log_value: f64, admissible: u64, dropped_zero_g: u64 },
}

impl FunctionalValue {
    /// The number the Monte Carlo layer aggregates: `Σ`, `Σ^log`, or `log Π`.
    pub fn scalar(&self) -> f64 {
        match self {
            FunctionalValue::DoubleSum { value } | FunctionalValue::SumLogSum { value, .. } => *value,
            FunctionalValue::ProductSum { log_value, .. } => *log_value,
        }
    }

    pub fn to_product(self) -> Option<FunctionalValue> {
        match self {
            FunctionalValue::SumLogSum { value, admissible, dropped_zero_g } => {
                Some(FunctionalValue::ProductSum { log_value: value, admissible, dropped_zero_g })
            }
            FunctionalValue::ProductSum { .. } => Some(self),
            _ => None,
        }
    }

    /// `(mantissa, exponent)` with `Π = mantissa · 10^exponent`, `1 ≤ mantissa < 10`.
    pub fn product_scientific(&self) -> Option<(f64, i64)> {
        match self {
            FunctionalValue::SumLogSum { value, .. } | FunctionalValue::ProductSum { log_value: value, .. } => {
                let l10 = value / std::f64::consts::LN_10;
                let e = l10.floor();
                Some((10f64.powf(l10 - e), e as i64))
            }
            _ => None,
        }
    }

    pub fn record(&self) -> FunctionalRecord {
        let (kind, value, adm, dropped) = match *self {
            FunctionalValue::DoubleSum { value } => ("double_sum", value, None, None),
            FunctionalValue::SumLogSum { value, admissible, dropped_zero_g } => ("sum_log_sum", value, Some(admissible), Some(dropped_zero_g)),
            FunctionalValue::ProductSum { log_value, admissible, dropped_zero_g } => ("product_sum", log_value, Some(admissible), Some(dropped_zero_g)),
        };
        let sci = self.product_scientific();
        FunctionalRecord {
            kind: kind.to_string(),
            value,
            admissible_count: adm,
            dropped_zero_g: dropped,
            log10: sci.map(|_| value / std::f64::consts::LN_10),
            mantissa: sci.map(|s| s.0),
            exponent: sci.map(|s| s.1),
        }
    }
}

/// Serialized form of a [`FunctionalValue`]. For product sums `value` is
/// `ln Π`; `log10`, `mantissa` and `exponent` describe `Π` without overflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalRecord {
    pub kind: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub admissible_count: Option<u64>,
    #[serde(rename = "dropped_zero_G", skip_serializing_if = "Option::is_none")]
    pub dropped_zero_g: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log10: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mantissa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<i64>,
}

fn log_sum(g: impl Iterator<Item = f64>, admissible: &[bool]) -> FunctionalValue {
    let mut value = 0.0;
    let mut count = 0;
    let mut dropped = 0;
    for (gz, a) in g.zip(admissible) {
        if !a {
            continue;
        }
        count += 1;
        if gz > 0.0 {
            value += gz.ln();
        } else {
            dropped += 1;
        }
    }
    FunctionalValue::SumLogSum { value, admissible: count, dropped_zero_g: dropped }
}

/// `Σ_Z Σ_V f(Z, V)` over ordered pairs, by direct enumeration.
pub fn double_sum(score: &impl PairScore) -> f64 {
    let n = score.len();
    (0..n).map(|z| (0..n).map(|v| score.score(z, v)).sum::<f64>()).sum()
}

/// `G(Z) = Σ_V f(Z, V)` by direct enumeration.
pub fn compound_score(score: &impl PairScore, z: usize) -> Result<f64> {
    if z >= score.len() {
        return Err(Error::IndexOutOfRange { index: z as u64, count: score.len() as u64 });
    }
    Ok((0..score.len()).map(|v| score.score(z, v)).sum())
}

/// `Σ_{Z ∈ A⁺} log G(Z)` with `A⁺` the admissible points with `G > 0`.
pub fn sum_log_sum(score: &impl PairScore, admissible: &[bool]) -> Result<FunctionalValue> {
    if !score.integer_valued() {
        return Err(Error::Precondition("sum-log-sum needs an integer-valued score".into()));
    }
    if admissible.len() != score.len() {
        return Err(Error::DimensionMismatch { expected: score.len(), got: admissible.len() });
    }
    let g: Vec<f64> = (0..score.len()).map(|z| compound_score(score, z).expect("index in range")).collect();
    Ok(log_sum(g.into_iter(), admissible))
}

/// The model's functional on `cfg`.
pub fn evaluate(model: &Model, cfg: &PointConfiguration) -> Result<FunctionalValue> {
    Ok(model.prepare(cfg)?.value())
}

/// `D_x F = F(P ∪ {x}) − F(P)`, rebuilding the model from scratch.
pub fn diff_first(model: &Model, cfg: &PointConfiguration, x: &[f64], mark: Mark) -> Result<f64> {
    let (px, _) = cfg.insert(x, mark)?;
    Ok(evaluate(model, &px)?.scalar() - evaluate(model, cfg)?.scalar())
}

/// `D²_{xy} F = F(P^{xy}) − F(P^x) − F(P^y) + F(P)`.
pub fn diff_second(model: &Model, cfg: &PointConfiguration, x: (&[f64], Mark), y: (&[f64], Mark)) -> Result<f64> {
    let (px, _) = cfg.insert(x.0, x.1)?;
    let (py, _) = cfg.insert(y.0, y.1)?;
    let (pxy, _) = px.insert(y.0, y.1)?;
    let f = |c: &PointConfiguration| evaluate(model, c).map(|v| v.scalar());
    Ok(f(&pxy)? - f(&px)? - f(&py)? + f(cfg)?)
}

/// Ids whose pair score or `A⁺` membership changes when `x` is inserted,
/// with the Chebyshev distance that must be covered to exclude them.
fn changes(model: &Model, cfg: &PointConfiguration, x: &[f64], mark: Mark) -> Result<Vec<f64>> {
    let (aug, _) = cfg.insert(x, mark)?;
    let before = model.prepare(cfg)?.score_table();
    let after = model.prepare(&aug)?.score_table();
    let dist = |id: PointId| chebyshev(&cfg.get(id).expect("id from cfg").position, x);
    let mut out = Vec::new();
    let keys: BTreeSet<(PointId, PointId)> = before
        .entries
        .keys()
        .chain(after.entries.keys().filter(|(z, v)| cfg.position_of(*z).is_ok() && cfg.position_of(*v).is_ok()))
        .copied()
        .collect();
    for (z, v) in keys {
        if before.get(z, v) * after.denom != after.get(z, v) * before.denom {
            out.push(dist(z).min(dist(v)));
        }
    }
    if let (Some(b), Some(a)) = (&before.positive, &after.positive) {
        for z in b.symmetric_difference(a) {
            if cfg.position_of(*z).is_ok() {
                out.push(dist(*z));
            }
        }
    }
    Ok(out)
}

/// Smallest integer `m ≥ 1` such that inserting `x` changes no score
/// between points both outside `Q(x, m)` and, for sum-log-sum models, no
/// `A⁺` membership outside `Q(x, m)`.
pub fn empirical_stabilization_radius(model: &Model, cfg: &PointConfiguration, x: &[f64], mark: Mark) -> Result<u64> {
    let worst = changes(model, cfg, x, mark)?.into_iter().fold(0.0, f64::max);
    Ok((worst.ceil() as u64).max(1))
}

/// Samples admissible points and reports how often `G(Z) < β₃ |S^k(Z)|`.
pub fn concentration_check_g(
    model: &Model,
    windows: &[crate::geometry::Window],
    beta3: f64,
    replications: usize,
    seed: u64,
) -> Result<crate::stats::ConcentrationReport> {
    use crate::geometry::Slab;
    use crate::stats::{ConcentrationReport, ConcentrationRow};
    if model.kind() != FunctionalKind::SumLogSum {
        return Err(Error::Precondition(format!("{model} is not a sum-log-sum model")));
    }
    if !(beta3 >= 0.0) {
        return Err(Error::InvalidParameter(format!("β₃ must be nonnegative, got {beta3}")));
    }
    let mut rows = Vec::new();
    for (e, w) in windows.iter().enumerate() {
        let mut sampled = 0;
        let mut below = 0;
        let mut volume = 0.0;
        for r in 0..replications {
            let s = crate::rng::replication_seed(seed, e as u64, r as u64);
            let cfg = crate::process::sample_ppp(w, 1.0, &model.mark_model(), s)?;
            let inst = model.prepare(&cfg)?;
            let g = inst.compound_scores();
            let adm = inst.admissible(AdmissibilityRule::TreeRealization);
            for (i, p) in cfg.points().iter().enumerate() {
                if !adm[i] {
                    continue;
                }
                let vol = Slab::local(w, &p.position, model.locality())?.volume();
                volume += vol;
                sampled += 1;
                if g[i] < beta3 * vol {
                    below += 1;
                }
            }
        }
        if sampled == 0 {
            return Err(Error::Precondition(format!("no admissible points observed at n = {}", w.n())));
        }
        rows.push(ConcentrationRow {
            n: w.n(),
            slab_volume: volume / sampled as f64,
            sampled,
            below,
            frequency: below as f64 / sampled as f64,
        });
    }
    Ok(ConcentrationReport::new(beta3, rows))
}
