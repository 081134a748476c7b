//! Shield configurations: dense padding of a side-8 box that keeps
//! insertions in its inner cube from reaching bars outside the box.

use rand::Rng;

use super::{build_merge_forest, elder_lifetimes, inversion_score};
use crate::error::{Error, Result};
use crate::geometry::{AxisBox, BoxPartition, Window};
use crate::process::{canonical_cmp, sample_ppp, Mark, MarkModel, MarkedPoint, PointConfiguration, PointId};
use crate::rng::{stream, Purpose};

pub const SHIELD_SIDE: f64 = 8.0;
const HALF: f64 = SHIELD_SIDE / 2.0;
/// Half-side of the inner cube `Q(1/2)`.
const INNER_HALF: f64 = HALF / 2.0;
/// Width of the padding strips in the time direction.
const STRIP: f64 = 0.5;
const BALL: f64 = 0.25;
const GAP: f64 = 0.5;
/// Grid step for the ball-cover check when `d ≥ 3`.
const COVER_STEP: f64 = 1.0 / 16.0;

/// The points of one side-8 box lying outside its inner cube, together
/// with the box and the window it sits in.
#[derive(Debug, Clone)]
pub struct ShieldedBoxConfig {
    window: Window,
    bx: AxisBox,
    points: Vec<MarkedPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Minus,
    Plus,
}

impl ShieldedBoxConfig {
    pub fn new(window: Window, bx: AxisBox, mut points: Vec<MarkedPoint>) -> Result<Self> {
        if bx.dim() != window.dim() {
            return Err(Error::DimensionMismatch { expected: window.dim(), got: bx.dim() });
        }
        if window.dim() < 2 {
            return Err(Error::MalformedBox("shields need d ≥ 2".into()));
        }
        if bx.widths().iter().any(|w| *w != SHIELD_SIDE) {
            return Err(Error::MalformedBox(format!("shield boxes must be cubes of side {SHIELD_SIDE}, got widths {:?}", bx.widths())));
        }
        let inner = inner_cube(&bx);
        for p in &points {
            if p.position.len() != window.dim() {
                return Err(Error::DimensionMismatch { expected: window.dim(), got: p.position.len() });
            }
            if !bx.contains(&p.position) || inner.contains(&p.position) {
                return Err(Error::MalformedBox(format!("point {} is not in the box minus its inner cube", p.id)));
            }
        }
        points.sort_by(canonical_cmp);
        Ok(ShieldedBoxConfig { window, bx, points })
    }

    /// Restriction of `cfg` to `bx` minus the inner cube.
    pub fn from_configuration(cfg: &PointConfiguration, bx: &AxisBox) -> Result<Self> {
        let inner = inner_cube(bx);
        let pts = cfg.points().iter().filter(|p| bx.contains(&p.position) && !inner.contains(&p.position)).cloned().collect();
        Self::new(cfg.window().clone(), bx.clone(), pts)
    }

    /// Box `j` of a partition whose boxes are side-8 cubes.
    pub fn from_partition(cfg: &PointConfiguration, partition: &BoxPartition, j: u64) -> Result<Self> {
        Self::from_configuration(cfg, &partition.box_at_index(j)?)
    }

    pub fn window(&self) -> &Window {
        &self.window
    }
    pub fn bounding_box(&self) -> &AxisBox {
        &self.bx
    }
    pub fn points(&self) -> &[MarkedPoint] {
        &self.points
    }
    pub fn inner(&self) -> AxisBox {
        inner_cube(&self.bx)
    }

    fn strip(&self, side: Side) -> AxisBox {
        let mut lo = self.bx.lo.clone();
        let mut hi = self.bx.hi.clone();
        match side {
            Side::Minus => hi[0] = lo[0] + STRIP,
            Side::Plus => lo[0] = hi[0] - STRIP,
        }
        AxisBox { lo, hi }
    }

    /// `F⁻` or `F⁺`.
    pub fn padding(&self, plus: bool) -> AxisBox {
        self.strip(if plus { Side::Plus } else { Side::Minus })
    }

    /// `F^{−↑}` or `F^{+↑}`: the top half-unit of a padding strip in coordinate `d`.
    pub fn padding_top(&self, plus: bool) -> AxisBox {
        let mut b = self.padding(plus);
        let d = b.lo.len() - 1;
        b.lo[d] = b.hi[d] - STRIP;
        b
    }

    /// Clause-by-clause membership in the shield set.
    pub fn report(&self) -> ShieldReport {
        let fm = self.padding(false);
        let fp = self.padding(true);
        let fm_top = self.padding_top(false);
        let fp_top = self.padding_top(true);
        let pts = &self.points;
        let spatial = |p: &[f64]| p[1..].to_vec();

        let spans_window = (1..self.window.dim()).all(|i| self.bx.lo[i] <= 0.0 && self.bx.hi[i] >= self.window.sides()[i]);
        let void = pts.iter().all(|p| fm.contains(&p.position) || fp.contains(&p.position));
        let ball_containment = pts.iter().all(|p| {
            [&fm, &fp].iter().any(|f| p.position.iter().zip(f.lo.iter().zip(&f.hi)).all(|(x, (lo, hi))| x - BALL >= *lo && x + BALL <= *hi))
        });

        let ancestor = ancestors(pts);
        let mut nearest_pred: Vec<Option<usize>> = vec![None; pts.len()];
        for (i, a) in ancestor.iter().enumerate() {
            if let Some(a) = a {
                // Predecessors come earlier in canonical order, so the last one seen is nearest in time.
                nearest_pred[*a] = Some(i);
            }
        }
        let lower_minus: Vec<usize> = (0..pts.len()).filter(|i| fm.contains(&pts[*i].position) && !fm_top.contains(&pts[*i].position)).collect();
        let lower_plus: Vec<usize> = (0..pts.len()).filter(|i| fp.contains(&pts[*i].position) && !fp_top.contains(&pts[*i].position)).collect();
        let t = |i: usize| pts[i].position[0];
        let successor_gaps = lower_minus.iter().all(|i| ancestor[*i].map_or(0.0, |a| t(a) - t(*i)) <= GAP);
        let predecessor_gaps = lower_plus.iter().all(|i| nearest_pred[*i].map_or(0.0, |v| t(*i) - t(v)) <= GAP);
        let anchored = lower_minus.iter().all(|i| ancestor[*i].is_some());

        let inner = self.inner();
        let centres = |f: &AxisBox| -> Vec<Vec<f64>> { pts.iter().filter(|p| f.contains(&p.position)).map(|p| spatial(&p.position)).collect() };
        let target = |reach: f64| -> (Vec<f64>, Vec<f64>) {
            let lo = (1..inner.lo.len()).map(|i| (inner.lo[i] - reach).max(0.0)).collect();
            let hi = (1..inner.hi.len()).map(|i| (inner.hi[i] + reach).min(self.window.sides()[i])).collect();
            (lo, hi)
        };
        let (llo, lhi) = target(1.0);
        let (rlo, rhi) = target(0.0);
        let left_cover = balls_cover(&centres(&fm), &llo, &lhi);
        let right_cover = balls_cover(&centres(&fp), &rlo, &rhi);

        ShieldReport { spans_window, void, ball_containment, successor_gaps, predecessor_gaps, anchored, left_cover, right_cover }
    }
}

/// Outcome of each membership clause.
///
/// `void`, `ball_containment` and the two gap clauses are the defining
/// conditions. The gap clauses read `p⁺ = p` (no ancestor) as a zero gap
/// and measure the predecessor gap to the nearest predecessor in time.
/// `anchored`, `left_cover`, `right_cover` and `spans_window` close the
/// loopholes those leave open: an empty padding, columns with holes that
/// let outside branches reach the inner cube, and outside points beside
/// the box in the spatial directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShieldReport {
    pub spans_window: bool,
    pub void: bool,
    pub ball_containment: bool,
    pub successor_gaps: bool,
    pub predecessor_gaps: bool,
    /// Every point of `F⁻ \ F^{−↑}` has an ancestor among the box points.
    pub anchored: bool,
    /// Unit balls around `F⁻` cover the 1-neighbourhood of the inner cube in coordinates `2..d`.
    pub left_cover: bool,
    /// Unit balls around `F⁺` cover the inner cube in coordinates `2..d`.
    pub right_cover: bool,
}

impl ShieldReport {
    pub fn member(&self) -> bool {
        self.spans_window
            && self.void
            && self.ball_containment
            && self.successor_gaps
            && self.predecessor_gaps
            && self.anchored
            && self.left_cover
            && self.right_cover
    }

    pub fn failed(&self) -> Vec<&'static str> {
        [
            ("spans_window", self.spans_window),
            ("void", self.void),
            ("ball_containment", self.ball_containment),
            ("successor_gaps", self.successor_gaps),
            ("predecessor_gaps", self.predecessor_gaps),
            ("anchored", self.anchored),
            ("left_cover", self.left_cover),
            ("right_cover", self.right_cover),
        ]
        .into_iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| name)
        .collect()
    }
}

pub fn inner_cube(bx: &AxisBox) -> AxisBox {
    let c = bx.center();
    AxisBox { lo: c.iter().map(|x| x - INNER_HALF).collect(), hi: c.iter().map(|x| x + INNER_HALF).collect() }
}

/// Right ancestors (radius 1) among `pts`, which must be in canonical order.
fn ancestors(pts: &[MarkedPoint]) -> Vec<Option<usize>> {
    (0..pts.len())
        .map(|i| {
            (i + 1..pts.len()).find(|j| {
                let d2: f64 = pts[i].position[1..].iter().zip(&pts[*j].position[1..]).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 <= 1.0
            })
        })
        .collect()
}

/// Whether closed unit balls around `centres` cover the box `[lo, hi]`.
/// Exact in one dimension; in more it checks grid cells whose far corner
/// lies in one ball, so it can only err towards `false`.
fn balls_cover(centres: &[Vec<f64>], lo: &[f64], hi: &[f64]) -> bool {
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return true;
    }
    if lo.len() == 1 {
        let mut xs: Vec<f64> = centres.iter().map(|c| c[0]).collect();
        xs.sort_by(f64::total_cmp);
        let mut reach = lo[0];
        for x in xs {
            if x - 1.0 > reach {
                break;
            }
            reach = reach.max(x + 1.0);
            if reach >= hi[0] {
                return true;
            }
        }
        return reach >= hi[0];
    }
    let counts: Vec<usize> = lo.iter().zip(hi).map(|(l, h)| (((h - l) / COVER_STEP).ceil() as usize).max(1)).collect();
    let total: usize = counts.iter().product();
    (0..total).all(|mut k| {
        let mut clo = Vec::with_capacity(lo.len());
        let mut chi = Vec::with_capacity(lo.len());
        for (i, c) in counts.iter().enumerate() {
            let step = (hi[i] - lo[i]) / *c as f64;
            let idx = k % c;
            k /= c;
            clo.push(lo[i] + idx as f64 * step);
            chi.push(if idx + 1 == *c { hi[i] } else { lo[i] + (idx + 1) as f64 * step });
        }
        centres.iter().any(|q| {
            let far: f64 = q.iter().zip(clo.iter().zip(&chi)).map(|(x, (a, b))| (x - a).abs().max((x - b).abs()).powi(2)).sum();
            far <= 1.0
        })
    })
}

pub fn shield_membership(box_cfg: &ShieldedBoxConfig) -> bool {
    box_cfg.report().member()
}

/// Pairs of points outside `bx` whose inversion score changes when `x` is
/// inserted, under Poisson-tree lifetimes with unit cylinders.
pub fn outside_score_changes(cfg: &PointConfiguration, bx: &AxisBox, x: &[f64]) -> Result<Vec<(PointId, PointId)>> {
    let mark = if cfg.mark_model().is_real() {
        return Err(Error::MarkMismatch("shield checks use unmarked configurations".into()));
    } else {
        Mark::None
    };
    let (aug, _) = cfg.insert(x, mark)?;
    let before = elder_lifetimes(&build_merge_forest(cfg, 1.0)?);
    let after = elder_lifetimes(&build_merge_forest(&aug, 1.0)?);
    let outside: Vec<(usize, usize)> = cfg
        .points()
        .iter()
        .enumerate()
        .filter(|(_, p)| !bx.contains(&p.position))
        .map(|(i, p)| (i, aug.position_of(p.id).expect("original id survives insertion")))
        .collect();
    let mut changed = Vec::new();
    for (a, (ib, ia)) in outside.iter().enumerate() {
        for (jb, ja) in &outside[a + 1..] {
            let s0 = inversion_score(&before.bars[*ib], &before.bars[*jb]);
            let s1 = inversion_score(&after.bars[*ia], &after.bars[*ja]);
            if s0 != s1 {
                let (u, v) = (cfg.points()[*ib].id, cfg.points()[*jb].id);
                changed.push((u.min(v), u.max(v)));
            }
        }
    }
    changed.sort();
    Ok(changed)
}

/// For a shielded box, whether inserting `x` (in the inner cube) leaves every
/// inversion score between points outside the box unchanged.
pub fn shield_property_check(cfg: &PointConfiguration, bx: &AxisBox, x: &[f64]) -> Result<bool> {
    let box_cfg = ShieldedBoxConfig::from_configuration(cfg, bx)?;
    let report = box_cfg.report();
    if !report.member() {
        return Err(Error::Precondition(format!("box is not shielded; failed clauses: {}", report.failed().join(", "))));
    }
    if x.len() != cfg.dim() || !box_cfg.inner().contains(x) {
        return Err(Error::InvalidParameter("insertion must lie in the inner cube".into()));
    }
    Ok(outside_score_changes(cfg, bx, x)?.is_empty())
}

/// [`shield_property_check`] on box `j` of a partition.
pub fn shield_property_check_at(cfg: &PointConfiguration, partition: &BoxPartition, j: u64, x: &[f64]) -> Result<bool> {
    shield_property_check(cfg, &partition.box_at_index(j)?, x)
}

/// The side-8 box centred in the window's first coordinate, spanning the
/// window in the others when they have side 8.
pub fn centred_box(window: &Window) -> Result<AxisBox> {
    let sides = window.sides();
    if sides[0] < SHIELD_SIDE {
        return Err(Error::MalformedBox(format!("window is shorter than {SHIELD_SIDE} in time")));
    }
    let mut lo = vec![0.0; sides.len()];
    lo[0] = ((sides[0] - SHIELD_SIDE) / 2.0).floor();
    let hi = lo.iter().map(|l| l + SHIELD_SIDE).collect();
    AxisBox::new(lo, hi)
}

/// Unit-intensity Poisson points outside `bx` and in its inner cube, plus
/// padding columns in the middle of `F⁻` and `F⁺` on a quarter grid in
/// coordinates `2..d`, jittered in coordinate `d` only so each column still
/// chains up to its top.
pub fn sample_shielded(window: &Window, bx: &AxisBox, seed: u64) -> Result<PointConfiguration> {
    let base = sample_ppp(window, 1.0, &MarkModel::NoMark, seed)?;
    let inner = inner_cube(bx);
    let mut items: Vec<(Vec<f64>, Mark)> = base
        .points()
        .iter()
        .filter(|p| !bx.contains(&p.position) || inner.contains(&p.position))
        .map(|p| (p.position.clone(), Mark::None))
        .collect();
    let mut rng = stream(seed, 0, 0, Purpose::Auxiliary);
    let d = window.dim();
    let per = ((SHIELD_SIDE - 2.0 * BALL) / 0.25).round() as usize + 1;
    let total = per.pow(d as u32 - 1);
    for t in [bx.lo[0] + BALL, bx.hi[0] - BALL] {
        for mut k in 0..total {
            let mut pos = vec![t];
            for i in 1..d {
                let g = bx.lo[i] + BALL + (k % per) as f64 * 0.25;
                k /= per;
                let jitter: f64 = if i + 1 == d { rng.random_range(-1.0 / 16.0..1.0 / 16.0) } else { 0.0 };
                pos.push((g + jitter).clamp(bx.lo[i] + BALL, bx.hi[i] - BALL));
            }
            items.push((pos, Mark::None));
        }
    }
    Ok(PointConfiguration::from_positions(window.clone(), MarkModel::NoMark, items)?.with_seed(Some(seed)))
}
