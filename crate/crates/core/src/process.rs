//! Marked points, configurations and Poisson sampling.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fmt_f64, Region, Window};
use crate::rng::{self, Purpose};

pub type PointId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mark {
    None,
    Real(f64),
}

impl Mark {
    pub fn value(&self) -> Option<f64> {
        match self {
            Mark::None => None,
            Mark::Real(v) => Some(*v),
        }
    }
}

/// Distribution of the marks attached to the points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MarkModel {
    NoMark,
    Uniform01,
    /// Exponential with the given rate, so `μ((s,∞)) = e^{−γs}`.
    ExponentialTail { rate: f64 },
    UniformRadius { lower: f64, upper: f64 },
}

impl MarkModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MarkModel::ExponentialTail { rate } if !(rate.is_finite() && rate > 0.0) => {
                Err(Error::InvalidParameter(format!("exponential rate must be positive, got {rate}")))
            }
            MarkModel::UniformRadius { lower, upper }
                if !(lower >= 0.0 && upper >= 1.0 && lower < upper && upper.is_finite()) =>
            {
                Err(Error::InvalidParameter(format!("uniform radius needs 0 ≤ lower < upper, upper ≥ 1; got [{lower},{upper}]")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Mark {
        match *self {
            MarkModel::NoMark => Mark::None,
            MarkModel::Uniform01 => Mark::Real(rng.random::<f64>()),
            MarkModel::ExponentialTail { rate } => Mark::Real(Exp::new(rate).expect("validated rate").sample(rng)),
            MarkModel::UniformRadius { lower, upper } => Mark::Real(rng.random_range(lower..upper)),
        }
    }

    pub fn accepts(&self, mark: &Mark) -> bool {
        match (self, mark) {
            (MarkModel::NoMark, Mark::None) => true,
            (MarkModel::NoMark, _) | (_, Mark::None) => false,
            (MarkModel::Uniform01, Mark::Real(v)) => (0.0..=1.0).contains(v),
            (MarkModel::ExponentialTail { .. }, Mark::Real(v)) => *v >= 0.0 && v.is_finite(),
            (MarkModel::UniformRadius { lower, upper }, Mark::Real(v)) => *v >= *lower && *v <= *upper,
        }
    }

    /// Marks that carry a real value.
    pub fn is_real(&self) -> bool {
        !matches!(self, MarkModel::NoMark)
    }
}

impl fmt::Display for MarkModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkModel::NoMark => write!(f, "none"),
            MarkModel::Uniform01 => write!(f, "uniform01"),
            MarkModel::ExponentialTail { rate } => write!(f, "exp:{rate}"),
            MarkModel::UniformRadius { lower, upper } => write!(f, "uniform-radius:{lower}:{upper}"),
        }
    }
}

impl FromStr for MarkModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| t.parse::<f64>().map_err(|_| Error::Config(format!("bad number {t:?} in mark model {s:?}")));
        let m = match parts.as_slice() {
            ["none"] => MarkModel::NoMark,
            ["uniform01"] => MarkModel::Uniform01,
            ["exp"] => MarkModel::ExponentialTail { rate: 1.0 },
            ["exp", r] => MarkModel::ExponentialTail { rate: num(r)? },
            ["uniform-radius", lo, hi] => MarkModel::UniformRadius { lower: num(lo)?, upper: num(hi)? },
            _ => return Err(Error::Config(format!("unknown mark model {s:?}"))),
        };
        m.validate()?;
        Ok(m)
    }
}

impl TryFrom<String> for MarkModel {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MarkModel> for String {
    fn from(m: MarkModel) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub id: PointId,
    pub position: Vec<f64>,
    pub mark: Mark,
}

impl MarkedPoint {
    pub fn new(id: PointId, position: Vec<f64>, mark: Mark) -> Self {
        MarkedPoint { id, position, mark }
    }

    pub fn time(&self) -> f64 {
        self.position[0]
    }
}

/// Canonical order: coordinate 1, then the remaining coordinates, then id.
pub fn canonical_cmp(a: &MarkedPoint, b: &MarkedPoint) -> Ordering {
    for (x, y) in a.position.iter().zip(&b.position) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.id.cmp(&b.id)
}

/// A finite marked point set in a window, stored in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfiguration {
    window: Window,
    marks: MarkModel,
    points: Vec<MarkedPoint>,
    seed: Option<u64>,
    index: HashMap<PointId, usize>,
}

impl PointConfiguration {
    pub fn new(window: Window, marks: MarkModel, mut points: Vec<MarkedPoint>, seed: Option<u64>) -> Result<Self> {
        marks.validate()?;
        for p in &points {
            if p.position.len() != window.dim() {
                return Err(Error::DimensionMismatch { expected: window.dim(), got: p.position.len() });
            }
            if p.position.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
            if !window.contains(&p.position) {
                return Err(Error::OutsideWindow);
            }
            if !marks.accepts(&p.mark) {
                return Err(Error::MarkMismatch(format!("point {} has mark {:?} under model {marks}", p.id, p.mark)));
            }
        }
        points.sort_by(canonical_cmp);
        let index: HashMap<_, _> = points.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
        if index.len() != points.len() {
            return Err(Error::InvalidParameter("duplicate point ids".into()));
        }
        Ok(PointConfiguration { window, marks, points, seed, index })
    }

    pub fn empty(window: Window, marks: MarkModel) -> Result<Self> {
        Self::new(window, marks, Vec::new(), None)
    }

    /// Ids are assigned `0, 1, …` in the given order.
    pub fn from_positions(window: Window, marks: MarkModel, items: Vec<(Vec<f64>, Mark)>) -> Result<Self> {
        let pts = items.into_iter().enumerate().map(|(i, (x, m))| MarkedPoint::new(i as PointId, x, m)).collect();
        Self::new(window, marks, pts, None)
    }

    pub fn window(&self) -> &Window {
        &self.window
    }
    pub fn mark_model(&self) -> &MarkModel {
        &self.marks
    }
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
    pub fn points(&self) -> &[MarkedPoint] {
        &self.points
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    /// Position of point `id` in [`Self::points`].
    pub fn position_of(&self, id: PointId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownPoint(id))
    }

    pub fn get(&self, id: PointId) -> Result<&MarkedPoint> {
        Ok(&self.points[self.position_of(id)?])
    }

    pub fn next_id(&self) -> PointId {
        self.points.iter().map(|p| p.id + 1).max().unwrap_or(0)
    }

    /// `P ∪ {x}` with `x` under a fresh id; returns the new configuration and that id.
    pub fn insert(&self, position: &[f64], mark: Mark) -> Result<(Self, PointId)> {
        let id = self.next_id();
        let mut pts = self.points.clone();
        pts.push(MarkedPoint::new(id, position.to_vec(), mark));
        Ok((Self::new(self.window.clone(), self.marks.clone(), pts, self.seed)?, id))
    }

    /// Inserts a copy of `x`; its id is replaced by a fresh one.
    pub fn insert_point(&self, x: &MarkedPoint) -> Result<(Self, PointId)> {
        self.insert(&x.position, x.mark)
    }

    pub fn remove_point(&self, id: PointId) -> Result<Self> {
        let at = self.position_of(id)?;
        let mut pts = self.points.clone();
        pts.remove(at);
        Self::new(self.window.clone(), self.marks.clone(), pts, self.seed)
    }

    pub fn count_in(&self, region: &Region) -> usize {
        self.points.iter().filter(|p| region.contains(&p.position)).count()
    }

    /// Same points and window with a different seed tag.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    /// Line-oriented text dump; every float round-trips exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("pairfunc-points 1\n");
        s.push_str(&format!("dim {}\n", self.dim()));
        s.push_str(&format!("window {}\n", self.window.to_record()));
        s.push_str(&format!("marks {}\n", self.marks));
        match self.seed {
            Some(v) => s.push_str(&format!("seed {v}\n")),
            None => s.push_str("seed -\n"),
        }
        s.push_str(&format!("points {}\n", self.len()));
        for p in &self.points {
            s.push_str(&p.id.to_string());
            for x in &p.position {
                s.push(' ');
                s.push_str(&fmt_f64(*x));
            }
            match p.mark {
                Mark::None => s.push_str(" -"),
                Mark::Real(v) => {
                    s.push(' ');
                    s.push_str(&fmt_f64(v));
                }
            }
            s.push('\n');
        }
        s
    }

    /// Parses [`Self::to_text`] output. Blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut header = |key: &str| -> Result<(usize, String)> {
            let (no, line) = lines.next().ok_or(Error::Parse { line: 0, msg: format!("missing {key} line") })?;
            let rest = line
                .strip_prefix(key)
                .ok_or_else(|| Error::Parse { line: no, msg: format!("expected {key:?}") })?;
            Ok((no, rest.trim().to_string()))
        };
        let (no, ver) = header("pairfunc-points")?;
        if ver != "1" {
            return Err(Error::Parse { line: no, msg: format!("unsupported version {ver}") });
        }
        let (no, dim) = header("dim")?;
        let dim: usize = dim.parse().map_err(|_| Error::Parse { line: no, msg: "bad dim".into() })?;
        let (no, win) = header("window")?;
        let window = Window::from_record(&win).map_err(|e| Error::Parse { line: no, msg: e.to_string() })?;
        if window.dim() != dim {
            return Err(Error::Parse { line: no, msg: "window dimension disagrees with dim".into() });
        }
        let (no, marks) = header("marks")?;
        let marks: MarkModel = marks.parse().map_err(|e: Error| Error::Parse { line: no, msg: e.to_string() })?;
        let (no, seed) = header("seed")?;
        let seed = match seed.as_str() {
            "-" => None,
            v => Some(v.parse::<u64>().map_err(|_| Error::Parse { line: no, msg: "bad seed".into() })?),
        };
        let (no, count) = header("points")?;
        let count: usize = count.parse().map_err(|_| Error::Parse { line: no, msg: "bad point count".into() })?;
        let mut pts = Vec::with_capacity(count);
        for (no, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != dim + 2 {
                return Err(Error::Parse { line: no, msg: format!("expected {} fields, got {}", dim + 2, toks.len()) });
            }
            let bad = |what: &str| Error::Parse { line: no, msg: format!("bad {what}") };
            let id: PointId = toks[0].parse().map_err(|_| bad("id"))?;
            let position = toks[1..=dim]
                .iter()
                .map(|t| t.parse::<f64>().map_err(|_| bad("coordinate")))
                .collect::<Result<Vec<_>>>()?;
            let mark = match toks[dim + 1] {
                "-" => Mark::None,
                t => Mark::Real(t.parse::<f64>().map_err(|_| bad("mark"))?),
            };
            pts.push(MarkedPoint::new(id, position, mark));
        }
        if pts.len() != count {
            return Err(Error::Parse { line: 0, msg: format!("header promised {count} points, found {}", pts.len()) });
        }
        Self::new(window, marks, pts, seed)
    }
}

/// Samples `P ∩ W` for a homogeneous Poisson process with i.i.d. marks.
///
/// The count, positions and marks are drawn from three streams derived from
/// `seed`, the count first. Ids are `0..N` in draw order.
pub fn sample_ppp(window: &Window, intensity: f64, marks: &MarkModel, seed: u64) -> Result<PointConfiguration> {
    if !(intensity.is_finite() && intensity > 0.0) {
        return Err(Error::InvalidParameter(format!("intensity must be positive, got {intensity}")));
    }
    marks.validate()?;
    let mean = intensity * window.volume();
    if !(mean.is_finite() && mean > 0.0) {
        return Err(Error::InvalidWindow("window has no volume".into()));
    }
    let mut count_rng = rng::stream(seed, 0, 0, Purpose::Count);
    let mut pos_rng = rng::stream(seed, 0, 0, Purpose::Positions);
    let mut mark_rng = rng::stream(seed, 0, 0, Purpose::Marks);
    let count = Poisson::new(mean)
        .map_err(|e| Error::InvalidParameter(format!("Poisson mean {mean}: {e}")))?
        .sample(&mut count_rng) as u64;
    let sides = window.sides();
    let pts = (0..count)
        .map(|id| {
            let x = sides.iter().map(|s| pos_rng.random::<f64>() * s).collect();
            MarkedPoint::new(id, x, marks.sample(&mut mark_rng))
        })
        .collect();
    PointConfiguration::new(window.clone(), marks.clone(), pts, Some(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AxisBox, Cube, Slab};
    use proptest::prelude::*;

    fn sq(n: f64) -> Window {
        Window::cube(2, n).unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        let w = sq(10.0);
        let a = sample_ppp(&w, 1.0, &MarkModel::Uniform01, 17).unwrap();
        let b = sample_ppp(&w, 1.0, &MarkModel::Uniform01, 17).unwrap();
        assert_eq!(a, b);
        let c = sample_ppp(&w, 1.0, &MarkModel::Uniform01, 18).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_intensity_and_tiny_window() {
        assert!(sample_ppp(&sq(10.0), 0.0, &MarkModel::NoMark, 1).is_err());
        assert!(sample_ppp(&sq(10.0), -1.0, &MarkModel::NoMark, 1).is_err());
        // n → 0 is rejected when the window is built.
        assert!(Window::cube(2, 0.0).is_err());
        let tiny = Window::cube(2, 1e-200).unwrap();
        assert!(sample_ppp(&tiny, 1.0, &MarkModel::NoMark, 1).is_err());
    }

    #[test]
    fn mean_count_matches_volume() {
        let w = sq(5.0);
        let total: usize = (0..10_000).map(|s| sample_ppp(&w, 1.0, &MarkModel::NoMark, s).unwrap().len()).sum();
        let mean = total as f64 / 1e4;
        assert!((mean - 25.0).abs() <= 1.0, "mean {mean}");
    }

    #[test]
    fn positions_marks_and_order() {
        let w = Window::linear(6.0, vec![0.5]).unwrap();
        let cfg = sample_ppp(&w, 2.0, &MarkModel::ExponentialTail { rate: 1.0 }, 3).unwrap();
        assert!(cfg.points().iter().all(|p| w.contains(&p.position)));
        assert!(cfg.points().iter().all(|p| matches!(p.mark, Mark::Real(v) if v >= 0.0)));
        assert!(cfg.points().windows(2).all(|p| canonical_cmp(&p[0], &p[1]) == Ordering::Less));
    }

    #[test]
    fn insert_and_remove() {
        let w = sq(4.0);
        let empty = PointConfiguration::empty(w.clone(), MarkModel::NoMark).unwrap();
        let (one, id) = empty.insert(&[1.0, 1.0], Mark::None).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.remove_point(id).unwrap(), empty);
        assert!(empty.insert(&[5.0, 1.0], Mark::None).is_err());
        assert!(empty.insert(&[1.0, 1.0], Mark::Real(0.5)).is_err());
        let cfg = sample_ppp(&w, 1.0, &MarkModel::NoMark, 9).unwrap();
        let x = MarkedPoint::new(999, vec![2.0, 2.0], Mark::None);
        let (c1, i1) = cfg.insert_point(&x).unwrap();
        let (c2, i2) = c1.insert_point(&x).unwrap();
        assert_ne!(i1, i2);
        assert_eq!(c2.len(), cfg.len() + 2);
        assert_eq!(c2.remove_point(i2).unwrap().remove_point(i1).unwrap().points(), cfg.points());
        assert!(cfg.remove_point(12345).is_err());
    }

    #[test]
    fn counting() {
        let w = sq(10.0);
        let empty = PointConfiguration::empty(w.clone(), MarkModel::NoMark).unwrap();
        assert_eq!(empty.count_in(&Cube::new(&[5.0, 5.0], 3.0).unwrap().into()), 0);
        let three = PointConfiguration::from_positions(
            w.clone(),
            MarkModel::NoMark,
            vec![(vec![1.0, 1.0], Mark::None), (vec![2.0, 2.0], Mark::None), (vec![1.5, 3.0], Mark::None)],
        )
        .unwrap();
        let region: Region = AxisBox::new(vec![0.0, 0.0], vec![4.0, 4.0]).unwrap().into();
        assert_eq!(three.count_in(&region), 3);
        let cfg = sample_ppp(&w, 1.0, &MarkModel::NoMark, 5).unwrap();
        let cube = Cube::new(&[3.0, 7.0], 2.5).unwrap();
        let naive = cfg.points().iter().filter(|p| (p.position[0] - 3.0).abs() <= 2.5 && (p.position[1] - 7.0).abs() <= 2.5).count();
        assert_eq!(cfg.count_in(&cube.into()), naive);
        let slab = Slab::local(&w, &[5.0, 5.0], 1).unwrap();
        let naive = cfg.points().iter().filter(|p| (p.position[0] - 5.0).abs() <= 1.0).count();
        assert_eq!(cfg.count_in(&slab.into()), naive);
    }

    #[test]
    fn poisson_law_chi_square() {
        let w = Window::cube(2, 2.0).unwrap();
        let counts: Vec<u64> = (0..10_000).map(|s| sample_ppp(&w, 1.0, &MarkModel::NoMark, s + 1_000_000).unwrap().len() as u64).collect();
        let p = crate::stats::poisson_chi_square_pvalue(&counts, 4.0).unwrap();
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn text_round_trip() {
        let w = Window::new(3, 5.0, vec![0.3, 1.7], vec![1.0, 0.5], 0.2).unwrap();
        for marks in [MarkModel::NoMark, MarkModel::Uniform01, MarkModel::ExponentialTail { rate: 2.5 }, MarkModel::UniformRadius { lower: 0.0, upper: 2.0 }] {
            let cfg = sample_ppp(&w, 1.0, &marks, 77).unwrap();
            let back = PointConfiguration::from_text(&cfg.to_text()).unwrap();
            assert_eq!(back, cfg);
        }
        assert!(PointConfiguration::from_text("pairfunc-points 2\n").is_err());
    }

    #[test]
    fn mark_model_strings() {
        for m in ["none", "uniform01", "exp:1.5", "uniform-radius:0:2"] {
            assert_eq!(m.parse::<MarkModel>().unwrap().to_string(), m);
        }
        assert!("exp:-1".parse::<MarkModel>().is_err());
        assert!("uniform-radius:0:0.5".parse::<MarkModel>().is_err());
        assert!("gamma".parse::<MarkModel>().is_err());
    }

    proptest! {
        #[test]
        fn disjoint_counts_add(seed in 0u64..500, cut in 0.5f64..9.5) {
            let w = sq(10.0);
            let cfg = sample_ppp(&w, 1.0, &MarkModel::NoMark, seed).unwrap();
            let left: Region = AxisBox::new(vec![0.0, 0.0], vec![cut, 10.0]).unwrap().into();
            let right: Region = AxisBox::new(vec![cut.next_up(), 0.0], vec![10.0, 10.0]).unwrap().into();
            prop_assert_eq!(cfg.count_in(&left) + cfg.count_in(&right), cfg.len());
        }
    }
}
