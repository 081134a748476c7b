use crate::error::{Error, Result};
use crate::process::{PointConfiguration, PointId};

use super::{Bar, Barcode};

/// Poisson tree on a configuration together with its Elder-rule data.
///
/// Every point links to its right ancestor: the first later point (in the
/// canonical order) whose coordinates `2..d` lie within Euclidean distance
/// `ρ`. Points without one are roots. Indices refer to
/// [`PointConfiguration::points`].
#[derive(Debug, Clone)]
pub struct MergeForest {
    cfg: PointConfiguration,
    rho: f64,
    ancestor: Vec<usize>,
    preds: Vec<Vec<usize>>,
    /// Merge point → surviving leaf.
    survivor: Vec<Option<usize>>,
    /// Leaf → merge point where its branch dies.
    death: Vec<Option<usize>>,
}

fn cylinder_dist2(a: &[f64], b: &[f64]) -> f64 {
    a[1..].iter().zip(&b[1..]).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn build_merge_forest(cfg: &PointConfiguration, rho: f64) -> Result<MergeForest> {
    if cfg.dim() < 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: cfg.dim() });
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("cylinder radius must be positive, got {rho}")));
    }
    let pts = cfg.points();
    let n = pts.len();
    let r2 = rho * rho;
    let ancestor: Vec<usize> = (0..n)
        .map(|i| {
            (i + 1..n)
                .find(|j| cylinder_dist2(&pts[i].position, &pts[*j].position) <= r2)
                .unwrap_or(i)
        })
        .collect();
    let mut preds = vec![Vec::new(); n];
    for (i, a) in ancestor.iter().enumerate() {
        if *a != i {
            preds[*a].push(i);
        }
    }
    // Sweep in time order carrying the oldest leaf that reaches each point.
    // Predecessors always precede their ancestor, so one pass suffices.
    let mut oldest = vec![usize::MAX; n];
    let mut survivor = vec![None; n];
    let mut death = vec![None; n];
    for j in 0..n {
        if preds[j].is_empty() {
            oldest[j] = j;
            continue;
        }
        let best = preds[j].iter().map(|p| oldest[*p]).min().expect("nonempty");
        oldest[j] = best;
        if preds[j].len() >= 2 {
            survivor[j] = Some(best);
            for p in &preds[j] {
                if oldest[*p] != best {
                    death[oldest[*p]] = Some(j);
                }
            }
        }
    }
    Ok(MergeForest { cfg: cfg.clone(), rho, ancestor, preds, survivor, death })
}

impl MergeForest {
    pub fn config(&self) -> &PointConfiguration {
        &self.cfg
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Ancestor index of each point; a root maps to itself.
    pub fn ancestor_indices(&self) -> &[usize] {
        &self.ancestor
    }

    pub fn ancestor(&self, id: PointId) -> Result<PointId> {
        Ok(self.cfg.points()[self.ancestor[self.cfg.position_of(id)?]].id)
    }

    pub fn predecessors(&self, i: usize) -> &[usize] {
        &self.preds[i]
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        self.preds[i].is_empty()
    }

    /// Points where two or more paths meet.
    pub fn is_merge(&self, i: usize) -> bool {
        self.preds[i].len() >= 2
    }

    pub fn leaves(&self) -> Vec<PointId> {
        let pts = self.cfg.points();
        (0..pts.len()).filter(|i| self.is_leaf(*i)).map(|i| pts[i].id).collect()
    }

    pub fn merge_points(&self) -> Vec<PointId> {
        let pts = self.cfg.points();
        (0..pts.len()).filter(|i| self.is_merge(*i)).map(|i| pts[i].id).collect()
    }

    pub fn survivor(&self, merge: PointId) -> Result<Option<PointId>> {
        Ok(self.survivor[self.cfg.position_of(merge)?].map(|i| self.cfg.points()[i].id))
    }

    pub fn death_point(&self, leaf: PointId) -> Result<Option<PointId>> {
        Ok(self.death[self.cfg.position_of(leaf)?].map(|i| self.cfg.points()[i].id))
    }

    /// `ℓ = Z†₁ − Z₁` for leaves that die, `+∞` for leaves that survive to
    /// the window edge, and 0 for every other point.
    pub fn lifetimes(&self) -> Vec<f64> {
        let pts = self.cfg.points();
        (0..pts.len())
            .map(|i| {
                if !self.is_leaf(i) {
                    0.0
                } else {
                    match self.death[i] {
                        Some(d) => pts[d].time() - pts[i].time(),
                        None => f64::INFINITY,
                    }
                }
            })
            .collect()
    }
}

/// Bars of the Elder rule, one per point.
pub fn elder_lifetimes(forest: &MergeForest) -> Barcode {
    let pts = forest.cfg.points();
    Barcode {
        bars: forest.lifetimes().into_iter().zip(pts).map(|(l, p)| Bar::new(p.id, p.time(), l)).collect(),
    }
}
