use super::window::{AxisBox, Window};
use crate::error::{Error, Result};

/// Default locality cut-off distance of a slab.
pub const DEFAULT_CUTOFF: f64 = 1.0;

/// `S^k(x, s)`: window points within `s` of `x` in each of the first `k`
/// coordinates, unconstrained in the remaining ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Slab {
    center: Vec<f64>,
    half_width: f64,
    k: usize,
    window: Window,
}

impl Slab {
    pub fn new(window: &Window, center: &[f64], half_width: f64, k: usize) -> Result<Self> {
        if center.len() != window.dim() {
            return Err(Error::DimensionMismatch { expected: window.dim(), got: center.len() });
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidParameter(format!("slab half-width must be positive, got {half_width}")));
        }
        if k == 0 || k > window.dim() {
            return Err(Error::InvalidParameter(format!("locality order {k} outside 1..={}", window.dim())));
        }
        Ok(Slab { center: center.to_vec(), half_width, k, window: window.clone() })
    }

    /// Slab with the default cut-off.
    pub fn local(window: &Window, center: &[f64], k: usize) -> Result<Self> {
        Self::new(window, center, DEFAULT_CUTOFF, k)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }
    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        self.window.contains(y)
            && self.center[..self.k].iter().zip(y).all(|(c, v)| (c - v).abs() <= self.half_width)
    }

    /// Lebesgue volume of the slab clipped to the window.
    pub fn volume(&self) -> f64 {
        self.window
            .sides()
            .iter()
            .enumerate()
            .map(|(j, side)| {
                if j < self.k {
                    let lo = (self.center[j] - self.half_width).max(0.0);
                    let hi = (self.center[j] + self.half_width).min(*side);
                    (hi - lo).max(0.0)
                } else {
                    *side
                }
            })
            .product()
    }
}

/// `Q(x, m) = x + [−m, m]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    pub center: Vec<f64>,
    pub half_side: f64,
}

impl Cube {
    pub fn new(center: &[f64], half_side: f64) -> Result<Self> {
        if !(half_side >= 0.0 && half_side.is_finite()) {
            return Err(Error::InvalidParameter(format!("cube half-side must be nonnegative, got {half_side}")));
        }
        Ok(Cube { center: center.to_vec(), half_side })
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.center.len() && self.center.iter().zip(y).all(|(c, v)| (c - v).abs() <= self.half_side)
    }

    pub fn as_box(&self) -> AxisBox {
        AxisBox {
            lo: self.center.iter().map(|c| c - self.half_side).collect(),
            hi: self.center.iter().map(|c| c + self.half_side).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Slab(Slab),
    Cube(Cube),
    Box(AxisBox),
}

impl Region {
    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            Region::Slab(s) => s.contains(y),
            Region::Cube(c) => c.contains(y),
            Region::Box(b) => b.contains(y),
        }
    }
}

impl From<Slab> for Region {
    fn from(s: Slab) -> Self {
        Region::Slab(s)
    }
}
impl From<Cube> for Region {
    fn from(c: Cube) -> Self {
        Region::Cube(c)
    }
}
impl From<AxisBox> for Region {
    fn from(b: AxisBox) -> Self {
        Region::Box(b)
    }
}
