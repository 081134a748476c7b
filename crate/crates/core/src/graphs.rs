//! Connectivity kernels and the projected crossing-number functional.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fmt_f64, segments_properly_cross, DEFAULT_CUTOFF};
use crate::process::{PointConfiguration, PointId};

/// Rule deciding which pairs of points are joined by an edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ConnectivityKernel {
    /// `‖Ż − Ż′‖ ≤ ρ`, marks ignored.
    FixedRadius { radius: f64 },
    /// `Z → Z′` iff `‖Ż − Ż′‖ ≤ R_Z`.
    DirectedRandom,
    /// `‖Ż − Ż′‖ ≤ R_Z ∧ R_Z′`.
    MaxKernel,
    /// Min-kernel on `R_x · 1{|P ∩ B(ẋ, R_x)| ≤ cap}`; `cap = None` is ∞.
    Localized { cap: Option<u64> },
}

impl ConnectivityKernel {
    pub const FIXED: Self = ConnectivityKernel::FixedRadius { radius: 1.0 };

    pub fn is_directed(&self) -> bool {
        matches!(self, ConnectivityKernel::DirectedRandom)
    }

    pub fn needs_marks(&self) -> bool {
        !matches!(self, ConnectivityKernel::FixedRadius { .. })
    }
}

impl fmt::Display for ConnectivityKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConnectivityKernel::FixedRadius { radius } if *radius == 1.0 => write!(f, "fixed"),
            ConnectivityKernel::FixedRadius { radius } => write!(f, "fixed:{radius}"),
            ConnectivityKernel::DirectedRandom => write!(f, "directed"),
            ConnectivityKernel::MaxKernel => write!(f, "max"),
            ConnectivityKernel::Localized { cap: Some(c) } => write!(f, "localized:{c}"),
            ConnectivityKernel::Localized { cap: None } => write!(f, "localized:inf"),
        }
    }
}

impl FromStr for ConnectivityKernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown kernel {s:?}; expected fixed, directed, max or localized:<cap>"));
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("fixed", None) => Ok(Self::FIXED),
            ("fixed", Some(r)) => {
                let radius: f64 = r.parse().map_err(|_| bad())?;
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(bad());
                }
                Ok(ConnectivityKernel::FixedRadius { radius })
            }
            ("directed", None) => Ok(ConnectivityKernel::DirectedRandom),
            ("max", None) => Ok(ConnectivityKernel::MaxKernel),
            ("localized", Some("inf")) => Ok(ConnectivityKernel::Localized { cap: None }),
            ("localized", Some(c)) => {
                let cap: u64 = c.parse().map_err(|_| bad())?;
                if cap == 0 {
                    return Err(bad());
                }
                Ok(ConnectivityKernel::Localized { cap: Some(cap) })
            }
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for ConnectivityKernel {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ConnectivityKernel> for String {
    fn from(k: ConnectivityKernel) -> String {
        k.to_string()
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A graph on the points of a configuration.
///
/// Vertices are addressed by their index in [`PointConfiguration::points`].
/// Edges are stored as index pairs; undirected edges have `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricGraph {
    cfg: PointConfiguration,
    kernel: Option<ConnectivityKernel>,
    edges: Vec<(usize, usize)>,
    directed: bool,
    cutoff: f64,
}

/// Radius each point uses under `kernel`.
fn radii(cfg: &PointConfiguration, kernel: &ConnectivityKernel) -> Result<Vec<f64>> {
    let pts = cfg.points();
    if let ConnectivityKernel::FixedRadius { radius } = kernel {
        return Ok(vec![*radius; pts.len()]);
    }
    let base: Vec<f64> = pts
        .iter()
        .map(|p| {
            p.mark
                .value()
                .ok_or_else(|| Error::MarkMismatch(format!("kernel {kernel} needs real-valued radius marks")))
        })
        .collect::<Result<_>>()?;
    match kernel {
        ConnectivityKernel::Localized { cap: Some(cap) } => Ok(base
            .iter()
            .enumerate()
            .map(|(i, r)| if ball_count(cfg, i, *r) <= *cap { *r } else { 0.0 })
            .collect()),
        _ => Ok(base),
    }
}

/// `|P ∩ B(ẋ_i, r)|`, counting the point itself.
fn ball_count(cfg: &PointConfiguration, i: usize, r: f64) -> u64 {
    let pts = cfg.points();
    let x = &pts[i].position;
    let lo = pts.partition_point(|p| p.position[0] < x[0] - r);
    let hi = pts.partition_point(|p| p.position[0] <= x[0] + r);
    pts[lo..hi].iter().filter(|p| dist2(&p.position, x) <= r * r).count() as u64
}

/// All-pairs edge set; the brute-force reference for [`build_edges`].
pub fn build_edges_naive(cfg: &PointConfiguration, kernel: &ConnectivityKernel) -> Result<Vec<(usize, usize)>> {
    let r = radii(cfg, kernel)?;
    let pts = cfg.points();
    let mut out = Vec::new();
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            if i == j {
                continue;
            }
            let d2 = dist2(&pts[i].position, &pts[j].position);
            let ok = match kernel {
                ConnectivityKernel::DirectedRandom => d2 <= r[i] * r[i],
                _ => i < j && d2 <= r[i].min(r[j]).powi(2),
            };
            if ok {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

/// Edges of `kernel` over `cfg`, found with a sweep along coordinate 1.
pub fn build_edges(cfg: &PointConfiguration, kernel: &ConnectivityKernel) -> Result<GeometricGraph> {
    let r = radii(cfg, kernel)?;
    let pts = cfg.points();
    let mut edges = Vec::new();
    for i in 0..pts.len() {
        let x = &pts[i].position;
        if kernel.is_directed() {
            let lo = pts.partition_point(|p| p.position[0] < x[0] - r[i]);
            let hi = pts.partition_point(|p| p.position[0] <= x[0] + r[i]);
            for j in lo..hi {
                if j != i && dist2(x, &pts[j].position) <= r[i] * r[i] {
                    edges.push((i, j));
                }
            }
        } else {
            for j in i + 1..pts.len() {
                if pts[j].position[0] - x[0] > r[i] {
                    break;
                }
                let rr = r[i].min(r[j]);
                if dist2(x, &pts[j].position) <= rr * rr {
                    edges.push((i, j));
                }
            }
        }
    }
    edges.sort_unstable();
    Ok(GeometricGraph { cfg: cfg.clone(), kernel: Some(*kernel), edges, directed: kernel.is_directed(), cutoff: DEFAULT_CUTOFF })
}

/// Projected segment with its endpoints' vertex indices.
#[derive(Clone, Copy)]
struct Seg {
    a: usize,
    b: usize,
    p: [f64; 2],
    q: [f64; 2],
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Seg {
    fn adjacent(&self, o: &Seg) -> bool {
        self.a == o.a || self.a == o.b || self.b == o.a || self.b == o.b
    }

    fn crosses(&self, o: &Seg) -> bool {
        !self.adjacent(o) && segments_properly_cross(self.p, self.q, o.p, o.q)
    }
}

impl GeometricGraph {
    /// Graph with a prescribed edge list given by point ids.
    pub fn from_edges(cfg: &PointConfiguration, edges: &[(PointId, PointId)], directed: bool) -> Result<Self> {
        let mut idx = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            let (i, j) = (cfg.position_of(*u)?, cfg.position_of(*v)?);
            if i == j {
                return Err(Error::InvalidParameter(format!("self-loop at point {u}")));
            }
            idx.push(if directed { (i, j) } else { (i.min(j), i.max(j)) });
        }
        idx.sort_unstable();
        idx.dedup();
        Ok(GeometricGraph { cfg: cfg.clone(), kernel: None, edges: idx, directed, cutoff: DEFAULT_CUTOFF })
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) {
            return Err(Error::InvalidParameter(format!("cutoff must be positive, got {cutoff}")));
        }
        self.cutoff = cutoff;
        Ok(self)
    }

    pub fn config(&self) -> &PointConfiguration {
        &self.cfg
    }
    pub fn kernel(&self) -> Option<ConnectivityKernel> {
        self.kernel
    }
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }
    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Edge list as index pairs.
    pub fn edge_indices(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edge list as id pairs.
    pub fn edges(&self) -> Vec<(PointId, PointId)> {
        let pts = self.cfg.points();
        self.edges.iter().map(|(i, j)| (pts[*i].id, pts[*j].id)).collect()
    }

    /// Whether `[i, j]` survives the locality cut: `j ∈ S²(i, cutoff)`.
    fn in_slab(&self, i: usize, j: usize) -> bool {
        let (a, b) = (&self.cfg.points()[i].position, &self.cfg.points()[j].position);
        a.iter().zip(b).take(2).all(|(x, y)| (x - y).abs() <= self.cutoff)
    }

    /// Undirected support of the slab-retained edges, `i < j`.
    pub fn retained_edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|(i, j)| self.in_slab(*i, *j))
            .map(|(i, j)| (*i.min(j), *i.max(j)))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn segments(&self) -> Vec<Seg> {
        let pts = self.cfg.points();
        self.retained_edges()
            .into_iter()
            .map(|(a, b)| {
                let p = [pts[a].position[0], pts[a].position[1]];
                let q = [pts[b].position[0], pts[b].position[1]];
                Seg { a, b, p, q, xmin: p[0].min(q[0]), xmax: p[0].max(q[0]), ymin: p[1].min(q[1]), ymax: p[1].max(q[1]) }
            })
            .collect()
    }

    fn require_plane(&self) -> Result<()> {
        if self.cfg.dim() < 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: self.cfg.dim() });
        }
        Ok(())
    }

    /// Unordered crossing edge pairs, as index pairs into
    /// [`Self::retained_edges`], found with a sweep over projected x-extents.
    pub fn crossing_pairs(&self) -> Vec<((usize, usize), (usize, usize))> {
        if self.cfg.dim() < 2 {
            return Vec::new();
        }
        let mut segs = self.segments();
        segs.sort_by(|s, t| s.xmin.total_cmp(&t.xmin));
        let mut out: Vec<_> = (0..segs.len())
            .into_par_iter()
            .flat_map_iter(|i| {
                let s = segs[i];
                segs[i + 1..]
                    .iter()
                    .take_while(move |t| t.xmin <= s.xmax)
                    .filter(move |t| t.ymin <= s.ymax && s.ymin <= t.ymax && s.crosses(t))
                    .map(move |t| {
                        let (e, f) = ((s.a, s.b), (t.a, t.b));
                        (e.min(f), e.max(f))
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Number of unordered pairs of distinct, non-adjacent retained edges
    /// whose projections properly cross.
    pub fn crossing_number(&self) -> u64 {
        self.crossing_pairs().len() as u64
    }

    /// Plain double loop over retained edge pairs.
    pub fn crossing_number_direct(&self) -> u64 {
        if self.require_plane().is_err() {
            return 0;
        }
        let segs = self.segments();
        let mut count = 0;
        for i in 0..segs.len() {
            for j in i + 1..segs.len() {
                if segs[i].crosses(&segs[j]) {
                    count += 1;
                }
            }
        }
        count
    }

    /// Number of ordered `(Z′, V′)` with `[Z,Z′]` and `[V,V′]` retained,
    /// non-adjacent and properly crossing. The pair score is this count / 8.
    pub fn crossing_score_eighths(&self, z: PointId, v: PointId) -> Result<u64> {
        let (zi, vi) = (self.cfg.position_of(z)?, self.cfg.position_of(v)?);
        if zi == vi {
            return Ok(0);
        }
        let segs = self.segments();
        let at_z: Vec<&Seg> = segs.iter().filter(|s| s.a == zi || s.b == zi).collect();
        let at_v: Vec<&Seg> = segs.iter().filter(|s| s.a == vi || s.b == vi).collect();
        let mut count = 0;
        for s in &at_z {
            for t in &at_v {
                if s.crosses(t) {
                    count += 1;
                }
            }
        }
        Ok(count)
    }

    pub fn crossing_score(&self, z: PointId, v: PointId) -> Result<f64> {
        Ok(self.crossing_score_eighths(z, v)? as f64 / 8.0)
    }

    /// Text dump: kernel, cut-off, point file reference and id pairs.
    pub fn to_text(&self, points_ref: &str) -> String {
        let mut s = String::from("pairfunc-graph 1\n");
        s.push_str(&format!("kernel {}\n", self.kernel.map_or("explicit".to_string(), |k| k.to_string())));
        s.push_str(&format!("directed {}\n", self.directed));
        s.push_str(&format!("cutoff {}\n", fmt_f64(self.cutoff)));
        s.push_str(&format!("points {points_ref}\n"));
        s.push_str(&format!("edges {}\n", self.edges.len()));
        for (u, v) in self.edges() {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    /// Parses [`Self::to_text`] output against an already loaded configuration.
    pub fn from_text(text: &str, cfg: &PointConfiguration) -> Result<Self> {
        let mut kernel = None;
        let mut directed = false;
        let mut cutoff = DEFAULT_CUTOFF;
        let mut edges = Vec::new();
        let mut in_edges = false;
        for (no, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: &str| Error::Parse { line: no, msg: m.to_string() };
            if in_edges {
                let mut it = line.split_whitespace().map(|t| t.parse::<PointId>());
                match (it.next(), it.next(), it.next()) {
                    (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
                    _ => return Err(bad("expected an id pair")),
                }
                continue;
            }
            let (key, val) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "pairfunc-graph" if val == "1" => {}
                "kernel" if val == "explicit" => kernel = None,
                "kernel" => kernel = Some(val.parse::<ConnectivityKernel>().map_err(|e| bad(&e.to_string()))?),
                "directed" => directed = val.parse().map_err(|_| bad("bad directed flag"))?,
                "cutoff" => cutoff = val.parse().map_err(|_| bad("bad cutoff"))?,
                "points" => {}
                "edges" => in_edges = true,
                _ => return Err(bad("unexpected line")),
            }
        }
        let mut g = GeometricGraph::from_edges(cfg, &edges, directed)?.with_cutoff(cutoff)?;
        g.kernel = kernel;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Window;
    use crate::process::{sample_ppp, Mark, MarkModel};
    use proptest::prelude::*;

    fn cfg_of(dim: usize, n: f64, marks: MarkModel, pts: Vec<(Vec<f64>, Mark)>) -> PointConfiguration {
        PointConfiguration::from_positions(Window::cube(dim, n).unwrap(), marks, pts).unwrap()
    }

    #[test]
    fn kernel_strings() {
        for s in ["fixed", "directed", "max", "localized:3", "localized:inf", "fixed:0.5"] {
            assert_eq!(s.parse::<ConnectivityKernel>().unwrap().to_string(), s);
        }
        for s in ["localized", "localized:0", "star", "fixed:-1"] {
            assert!(s.parse::<ConnectivityKernel>().is_err());
        }
    }

    #[test]
    fn two_close_points_fixed_radius() {
        let cfg = cfg_of(2, 4.0, MarkModel::NoMark, vec![(vec![1.0, 1.0], Mark::None), (vec![1.5, 1.0], Mark::None)]);
        assert_eq!(build_edges(&cfg, &ConnectivityKernel::FIXED).unwrap().edges().len(), 1);
    }

    #[test]
    fn max_kernel_uses_smaller_radius() {
        let m = MarkModel::ExponentialTail { rate: 1.0 };
        let cfg = cfg_of(2, 4.0, m, vec![(vec![1.0, 1.0], Mark::Real(0.6)), (vec![1.5, 1.0], Mark::Real(0.3))]);
        assert!(build_edges(&cfg, &ConnectivityKernel::MaxKernel).unwrap().edges().is_empty());
        let d = build_edges(&cfg, &ConnectivityKernel::DirectedRandom).unwrap();
        assert_eq!(d.edges(), vec![(0, 1)]);
    }

    #[test]
    fn kernels_needing_marks_reject_unmarked_configs() {
        let cfg = cfg_of(2, 4.0, MarkModel::NoMark, vec![(vec![1.0, 1.0], Mark::None)]);
        assert!(matches!(build_edges(&cfg, &ConnectivityKernel::DirectedRandom), Err(Error::MarkMismatch(_))));
        assert!(build_edges(&cfg, &ConnectivityKernel::FIXED).is_ok());
    }

    fn x_config() -> PointConfiguration {
        // Two unit-length edges in d = 3 at different heights whose shadows cross.
        cfg_of(
            3,
            4.0,
            MarkModel::NoMark,
            vec![
                (vec![1.0, 1.0, 1.0], Mark::None),
                (vec![1.6, 1.6, 1.0], Mark::None),
                (vec![1.0, 1.6, 1.9], Mark::None),
                (vec![1.6, 1.0, 1.9], Mark::None),
            ],
        )
    }

    #[test]
    fn x_configuration_scores() {
        let cfg = x_config();
        let g = GeometricGraph::from_edges(&cfg, &[(0, 1), (2, 3)], false).unwrap();
        assert_eq!(g.crossing_number(), 1);
        assert_eq!(g.crossing_number_direct(), 1);
        let mut total = 0.0;
        let mut nonzero = 0;
        for z in 0..4 {
            for v in 0..4 {
                let f = g.crossing_score(z, v).unwrap();
                if f > 0.0 {
                    assert_eq!(f, 0.125);
                    nonzero += 1;
                }
                total += f;
            }
        }
        assert_eq!(nonzero, 8);
        assert_eq!(total, 1.0);
        assert_eq!(g.crossing_score(0, 0).unwrap(), 0.0);
        assert!(g.crossing_score(0, 42).is_err());
    }

    #[test]
    fn small_graphs() {
        let cfg = x_config();
        let empty = GeometricGraph::from_edges(&cfg, &[], false).unwrap();
        assert_eq!(empty.crossing_number(), 0);
        assert_eq!(empty.crossing_number_direct(), 0);
        let single = GeometricGraph::from_edges(&cfg, &[(0, 1)], false).unwrap();
        assert_eq!(single.crossing_number_direct(), 0);
        assert_eq!(single.crossing_score(0, 1).unwrap(), 0.0);
    }

    #[test]
    fn adjacent_edges_never_cross() {
        let cfg = x_config();
        let g = GeometricGraph::from_edges(&cfg, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)], false).unwrap();
        // (0,1) crosses (2,3) only; (2,3) is absent and every other pair shares a vertex or is disjoint.
        assert_eq!(g.crossing_number(), g.crossing_number_direct());
    }

    #[test]
    fn slab_cut_removes_long_edges() {
        let cfg = cfg_of(2, 6.0, MarkModel::NoMark, vec![(vec![1.0, 1.0], Mark::None), (vec![3.0, 1.2], Mark::None)]);
        let g = GeometricGraph::from_edges(&cfg, &[(0, 1)], false).unwrap();
        assert!(g.retained_edges().is_empty());
        assert_eq!(g.clone().with_cutoff(2.5).unwrap().retained_edges().len(), 1);
    }

    #[test]
    fn graph_text_round_trip() {
        let w = Window::cube(3, 5.0).unwrap();
        let cfg = sample_ppp(&w, 1.0, &MarkModel::ExponentialTail { rate: 1.0 }, 4).unwrap();
        for k in ["fixed", "directed", "max", "localized:4"] {
            let g = build_edges(&cfg, &k.parse().unwrap()).unwrap();
            assert_eq!(GeometricGraph::from_text(&g.to_text("pts.txt"), &cfg).unwrap(), g);
        }
    }

    fn kernels() -> Vec<ConnectivityKernel> {
        vec![
            ConnectivityKernel::FIXED,
            ConnectivityKernel::DirectedRandom,
            ConnectivityKernel::MaxKernel,
            ConnectivityKernel::Localized { cap: Some(3) },
            ConnectivityKernel::Localized { cap: None },
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sweep_edges_match_all_pairs(seed in 0u64..10_000, n in 2.0f64..4.5) {
            let w = Window::cube(3, n).unwrap();
            let cfg = sample_ppp(&w, 1.0, &MarkModel::ExponentialTail { rate: 1.0 }, seed).unwrap();
            for k in kernels() {
                let g = build_edges(&cfg, &k).unwrap();
                let mut naive = build_edges_naive(&cfg, &k).unwrap();
                naive.sort_unstable();
                prop_assert_eq!(g.edge_indices(), &naive[..]);
                prop_assert_eq!(g.crossing_number(), g.crossing_number_direct());
            }
        }

        #[test]
        fn kernel_relations(seed in 0u64..10_000) {
            let w = Window::cube(2, 5.0).unwrap();
            let cfg = sample_ppp(&w, 1.0, &MarkModel::ExponentialTail { rate: 1.0 }, seed).unwrap();
            let dir = build_edges(&cfg, &ConnectivityKernel::DirectedRandom).unwrap();
            let max = build_edges(&cfg, &ConnectivityKernel::MaxKernel).unwrap();
            let inf = build_edges(&cfg, &ConnectivityKernel::Localized { cap: None }).unwrap();
            for e in max.edge_indices() {
                prop_assert!(dir.edge_indices().binary_search(e).is_ok());
            }
            prop_assert_eq!(max.edge_indices(), inf.edge_indices());
            let fixed = build_edges(&cfg, &ConnectivityKernel::FIXED).unwrap();
            for (i, j) in fixed.edge_indices() {
                prop_assert_eq!(fixed.edge_indices().iter().filter(|e| **e == (*i, *j)).count(), 1);
            }
        }

        #[test]
        fn fixed_radius_insertion_is_monotone(seed in 0u64..10_000, x in 0.0f64..6.0, y in 0.0f64..6.0) {
            let w = Window::cube(2, 6.0).unwrap();
            let cfg = sample_ppp(&w, 1.0, &MarkModel::NoMark, seed).unwrap();
            let before = build_edges(&cfg, &ConnectivityKernel::FIXED).unwrap();
            let (aug, _) = cfg.insert(&[x, y], Mark::None).unwrap();
            let after = build_edges(&aug, &ConnectivityKernel::FIXED).unwrap();
            let old: std::collections::BTreeSet<_> = before.edges().into_iter().collect();
            let new: std::collections::BTreeSet<_> = after.edges().into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
            let old: std::collections::BTreeSet<_> = old.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
            prop_assert!(old.is_subset(&new));
            prop_assert!(after.crossing_number() >= before.crossing_number());
        }

        #[test]
        fn localized_depends_only_on_ball(seed in 0u64..10_000, far in 0.0f64..1.0) {
            // Adding a point far from every ball leaves the effective radii of the others unchanged.
            let w = Window::cube(2, 8.0).unwrap();
            let m = MarkModel::UniformRadius { lower: 0.0, upper: 1.0 };
            let pts: Vec<_> = sample_ppp(&w, 1.0, &m, seed).unwrap().points().iter()
                .filter(|p| p.position[0] < 4.0)
                .map(|p| (p.position.clone(), p.mark))
                .collect();
            let base = PointConfiguration::from_positions(w.clone(), m.clone(), pts).unwrap();
            let k = ConnectivityKernel::Localized { cap: Some(2) };
            let r0 = radii(&base, &k).unwrap();
            let (aug, id) = base.insert(&[6.0 + far, 4.0], Mark::Real(0.5)).unwrap();
            let r1 = radii(&aug, &k).unwrap();
            let skip = aug.position_of(id).unwrap();
            let r1: Vec<f64> = r1.into_iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, r)| r).collect();
            prop_assert_eq!(r0, r1);
        }
    }
}
