use super::window::{AxisBox, Window};
use crate::error::{Error, Result};

/// The partition of a window into equal boxes `Q_{n,j,r}` of side `r·a_i`,
/// indexed lexicographically from 1 with axis 1 varying fastest.
///
/// Each axis carries `⌈n/r⌉` boxes, so the last layer may overhang the
/// window when `r` does not divide `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxPartition {
    window: Window,
    r: f64,
    per_axis: u64,
    count: u64,
}

impl BoxPartition {
    pub fn new(window: &Window, r: f64) -> Result<Self> {
        let n = window.n();
        if n.fract() != 0.0 {
            return Err(Error::InvalidWindow(format!("box partitions need integer n, got {n}")));
        }
        if window.alpha().iter().any(|a| *a != 1.0) {
            return Err(Error::InvalidWindow("box partitions need linear growth on every axis".into()));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParameter(format!("box scale must be positive, got {r}")));
        }
        // Tolerate quotients like 3/0.1 landing a hair above an integer.
        let q = n / r;
        let per_axis = if (q - q.round()).abs() <= 1e-9 * q.max(1.0) { q.round() } else { q.ceil() } as u64;
        let count = (0..window.dim())
            .try_fold(1u64, |acc, _| acc.checked_mul(per_axis))
            .ok_or_else(|| Error::InvalidParameter("box count overflows u64".into()))?;
        Ok(BoxPartition { window: window.clone(), r, per_axis, count })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn per_axis(&self) -> u64 {
        self.per_axis
    }
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Side length along axis `i` (0-based).
    pub fn side(&self, i: usize) -> f64 {
        if i == 0 {
            self.r
        } else {
            self.r * self.window.a()[i - 1]
        }
    }

    /// Integer grid coordinates of box `j` (1-based).
    pub fn digits(&self, j: u64) -> Result<Vec<u64>> {
        if j == 0 || j > self.count {
            return Err(Error::IndexOutOfRange { index: j, count: self.count });
        }
        let mut rest = j - 1;
        Ok((0..self.window.dim())
            .map(|_| {
                let d = rest % self.per_axis;
                rest /= self.per_axis;
                d
            })
            .collect())
    }

    pub fn box_at_index(&self, j: u64) -> Result<AxisBox> {
        let digits = self.digits(j)?;
        let lo: Vec<f64> = digits.iter().enumerate().map(|(i, d)| *d as f64 * self.side(i)).collect();
        let hi: Vec<f64> = digits.iter().enumerate().map(|(i, d)| (*d + 1) as f64 * self.side(i)).collect();
        Ok(AxisBox { lo, hi })
    }

    /// Index of the box whose half-open cell `∏ [lo, hi)` holds `y`.
    pub fn index_of(&self, y: &[f64]) -> Option<u64> {
        if !self.window.contains(y) {
            return None;
        }
        let mut j = 0u64;
        let mut stride = 1u64;
        for (i, v) in y.iter().enumerate() {
            let d = ((v / self.side(i)).floor() as u64).min(self.per_axis - 1);
            j += d * stride;
            stride *= self.per_axis;
        }
        Some(j + 1)
    }

    pub fn boxes(&self) -> impl Iterator<Item = AxisBox> + '_ {
        (1..=self.count).map(|j| self.box_at_index(j).expect("index within range"))
    }
}
