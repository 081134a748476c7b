//! Bars, lifetime models, inversion counts and shield configurations.

mod forest;
pub mod shield;

pub use forest::{build_merge_forest, elder_lifetimes, MergeForest};
pub use shield::{shield_membership, shield_property_check, ShieldReport, ShieldedBoxConfig};


use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::fmt_f64;
use crate::geometry::predicates::compare_sums;
use crate::process::{MarkModel, PointConfiguration, PointId};

/// A bar born at `birth` that lives for `lifetime` (possibly `+∞`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub owner: PointId,
    pub birth: f64,
    pub lifetime: f64,
}

impl Bar {
    pub fn new(owner: PointId, birth: f64, lifetime: f64) -> Self {
        Bar { owner, birth, lifetime }
    }

    /// Lifetime strictly inside `(0, 1)`.
    pub fn admissible(&self) -> bool {
        self.lifetime > 0.0 && self.lifetime < 1.0
    }
}

/// Bars listed in the canonical order of their owning points.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Barcode {
    pub bars: Vec<Bar>,
}

impl Barcode {
    pub fn new(bars: Vec<Bar>) -> Self {
        Barcode { bars }
    }
    pub fn len(&self) -> usize {
        self.bars.len()
    }
    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("pairfunc-barcode 1\nbars {}\n", self.bars.len());
        for b in &self.bars {
            s.push_str(&format!("{} {} {}\n", b.owner, fmt_f64(b.birth), fmt_f64(b.lifetime)));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut bars = Vec::new();
        let mut expected = None;
        for (no, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
            if line.is_empty() || line.starts_with('#') || line == "pairfunc-barcode 1" {
                continue;
            }
            let bad = |m: &str| Error::Parse { line: no, msg: m.to_string() };
            if let Some(n) = line.strip_prefix("bars ") {
                expected = Some(n.parse::<usize>().map_err(|_| bad("bad bar count"))?);
                continue;
            }
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 3 {
                return Err(bad("expected owner, birth and lifetime"));
            }
            let owner = t[0].parse().map_err(|_| bad("bad owner"))?;
            let birth: f64 = t[1].parse().map_err(|_| bad("bad birth"))?;
            let lifetime: f64 = t[2].parse().map_err(|_| bad("bad lifetime"))?;
            if !(lifetime >= 0.0) || !birth.is_finite() {
                return Err(bad("lifetimes must be nonnegative and births finite"));
            }
            bars.push(Bar::new(owner, birth, lifetime));
        }
        if expected.is_some_and(|n| n != bars.len()) {
            return Err(Error::Parse { line: 0, msg: "bar count disagrees with header".into() });
        }
        Ok(Barcode { bars })
    }
}

/// Bars with i.i.d. Uniform(0,1) lifetimes taken from the marks.
pub fn uniform_lifetimes(cfg: &PointConfiguration) -> Result<Barcode> {
    if *cfg.mark_model() != MarkModel::Uniform01 {
        return Err(Error::MarkMismatch(format!("uniform lifetimes need uniform01 marks, got {}", cfg.mark_model())));
    }
    Ok(Barcode {
        bars: cfg
            .points()
            .iter()
            .map(|p| Bar::new(p.id, p.time(), p.mark.value().expect("uniform01 marks are real")))
            .collect(),
    })
}

/// 1 iff `(b_x − b_y)(b_x − b_y + ℓ_x − ℓ_y) < 0` and both lifetimes lie in
/// `(0, 1)`. The sign is evaluated exactly.
pub fn inversion_score(x: &Bar, y: &Bar) -> u32 {
    if !(x.admissible() && y.admissible()) {
        return 0;
    }
    let births = x.birth.total_cmp(&y.birth);
    let deaths = compare_sums(&[x.birth, x.lifetime], &[y.birth, y.lifetime]);
    match (births, deaths) {
        (Ordering::Less, Ordering::Greater) | (Ordering::Greater, Ordering::Less) => 1,
        _ => 0,
    }
}

/// Exact comparison of the death times `b + ℓ`.
fn death_cmp(x: &Bar, y: &Bar) -> Ordering {
    compare_sums(&[x.birth, x.lifetime], &[y.birth, y.lifetime])
}

struct Fenwick(Vec<u64>);

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick(vec![0; n + 1])
    }
    fn add(&mut self, i: usize) {
        let mut i = i + 1;
        while i < self.0.len() {
            self.0[i] += 1;
            i += i & i.wrapping_neg();
        }
    }
    /// Number of inserted ranks `< i`.
    fn prefix(&self, i: usize) -> u64 {
        let mut i = i;
        let mut s = 0;
        while i > 0 {
            s += self.0[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// `Σ_x Σ_y inversion_score(x, y)` over ordered pairs, so each inversion is
/// counted twice. Runs in `O(N log N)`.
pub fn inversion_count(barcode: &Barcode) -> u64 {
    let mut bars: Vec<Bar> = barcode.bars.iter().filter(|b| b.admissible()).copied().collect();
    if bars.len() < 2 {
        return 0;
    }
    // Dense ranks of exact death times.
    let mut by_death: Vec<usize> = (0..bars.len()).collect();
    by_death.sort_by(|a, b| death_cmp(&bars[*a], &bars[*b]));
    let mut rank = vec![0usize; bars.len()];
    let mut r = 0;
    for k in 0..by_death.len() {
        if k > 0 && death_cmp(&bars[by_death[k - 1]], &bars[by_death[k]]) != Ordering::Equal {
            r += 1;
        }
        rank[by_death[k]] = r;
    }
    let mut order: Vec<usize> = (0..bars.len()).collect();
    order.sort_by(|a, b| bars[*a].birth.total_cmp(&bars[*b].birth));
    bars = order.iter().map(|i| bars[*i]).collect();
    let rank: Vec<usize> = order.iter().map(|i| rank[*i]).collect();
    let mut tree = Fenwick::new(r + 1);
    let mut inserted = 0u64;
    let mut unordered = 0u64;
    let mut k = 0;
    while k < bars.len() {
        let mut end = k + 1;
        while end < bars.len() && bars[end].birth == bars[k].birth {
            end += 1;
        }
        // Earlier-born bars that die strictly later than each member of the group.
        for j in k..end {
            unordered += inserted - tree.prefix(rank[j] + 1);
        }
        for j in k..end {
            tree.add(rank[j]);
            inserted += 1;
        }
        k = end;
    }
    2 * unordered
}

/// The `O(N²)` reference for [`inversion_count`].
pub fn inversion_count_direct(barcode: &Barcode) -> u64 {
    let b = &barcode.bars;
    let mut total = 0u64;
    for i in 0..b.len() {
        for j in 0..b.len() {
            if i != j {
                total += inversion_score(&b[i], &b[j]) as u64;
            }
        }
    }
    total
}

/// `G(x) = Σ_y inversion_score(x, y)` for every bar, using that inversions
/// need `|b_x − b_y| < 1`. Bars must be sorted by birth, as produced by the
/// lifetime models.
pub fn inversion_degrees(barcode: &Barcode) -> Vec<u64> {
    let b = &barcode.bars;
    debug_assert!(b.windows(2).all(|w| w[0].birth <= w[1].birth));
    (0..b.len())
        .map(|i| {
            if !b[i].admissible() {
                return 0;
            }
            let lo = b.partition_point(|y| y.birth <= b[i].birth - 1.0);
            let hi = b.partition_point(|y| y.birth < b[i].birth + 1.0);
            (lo..hi).filter(|j| *j != i).map(|j| inversion_score(&b[i], &b[j]) as u64).sum()
        })
        .collect()
}
