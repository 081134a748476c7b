use serde::{Deserialize, Serialize};

use super::fmt_f64;
use crate::error::{Error, Result};

/// Default boundary margin exponent α₁ of the shrunk window.
pub const DEFAULT_MARGIN: f64 = 0.1;

/// The observation window `[0,n] × [0, a₂ n^α₂] × … × [0, a_d n^α_d]`.
///
/// `a` and `alpha` hold the coefficients for axes 2..=d, so both have
/// length `dim - 1`. `margin` is the exponent α₁ of the shrunk window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindowRecord", into = "WindowRecord")]
pub struct Window {
    dim: usize,
    n: f64,
    a: Vec<f64>,
    alpha: Vec<f64>,
    margin: f64,
    sides: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WindowRecord {
    dim: usize,
    n: f64,
    a: Vec<f64>,
    alpha: Vec<f64>,
    #[serde(default = "default_margin")]
    margin: f64,
}

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

impl TryFrom<WindowRecord> for Window {
    type Error = Error;
    fn try_from(r: WindowRecord) -> Result<Self> {
        Window::new(r.dim, r.n, r.a, r.alpha, r.margin)
    }
}

impl From<Window> for WindowRecord {
    fn from(w: Window) -> Self {
        WindowRecord { dim: w.dim, n: w.n, a: w.a, alpha: w.alpha, margin: w.margin }
    }
}

impl Window {
    pub fn new(dim: usize, n: f64, a: Vec<f64>, alpha: Vec<f64>, margin: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidWindow("dimension must be positive".into()));
        }
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidWindow(format!("scale n must be positive and finite, got {n}")));
        }
        if a.len() != dim - 1 || alpha.len() != dim - 1 {
            return Err(Error::InvalidWindow(format!(
                "expected {} coefficients and exponents, got {} and {}",
                dim - 1,
                a.len(),
                alpha.len()
            )));
        }
        if a.iter().chain(&alpha).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidWindow("coefficients and exponents must be positive".into()));
        }
        if !(margin > 0.0 && margin < 1.0) {
            return Err(Error::InvalidWindow(format!("margin exponent must lie in (0,1), got {margin}")));
        }
        let mut sides = Vec::with_capacity(dim);
        sides.push(n);
        sides.extend(a.iter().zip(&alpha).map(|(aj, al)| aj * n.powf(*al)));
        if sides.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidWindow("degenerate side length".into()));
        }
        Ok(Window { dim, n, a, alpha, margin, sides })
    }

    /// `[0,n]^d`.
    pub fn cube(dim: usize, n: f64) -> Result<Self> {
        Self::new(dim, n, vec![1.0; dim.saturating_sub(1)], vec![1.0; dim.saturating_sub(1)], DEFAULT_MARGIN)
    }

    /// `[0,n] × [0, a₂ n] × …` with linear growth on every axis.
    pub fn linear(n: f64, a: Vec<f64>) -> Result<Self> {
        let k = a.len();
        Self::new(k + 1, n, a, vec![1.0; k], DEFAULT_MARGIN)
    }

    pub fn with_margin(&self, margin: f64) -> Result<Self> {
        Self::new(self.dim, self.n, self.a.clone(), self.alpha.clone(), margin)
    }

    /// Same shape parameters at a different scale.
    pub fn rescaled(&self, n: f64) -> Result<Self> {
        Self::new(self.dim, n, self.a.clone(), self.alpha.clone(), self.margin)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn n(&self) -> f64 {
        self.n
    }
    pub fn a(&self) -> &[f64] {
        &self.a
    }
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Side lengths `(n, a₂ n^α₂, …)`.
    pub fn sides(&self) -> &[f64] {
        &self.sides
    }

    pub fn volume(&self) -> f64 {
        self.sides.iter().product()
    }

    pub fn as_box(&self) -> AxisBox {
        AxisBox { lo: vec![0.0; self.dim], hi: self.sides.clone() }
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.dim && y.iter().zip(&self.sides).all(|(v, s)| *v >= 0.0 && *v <= *s)
    }

    /// The boundary width `n^α₁` removed on every face by [`Window::shrunk`].
    pub fn margin_width(&self) -> f64 {
        self.n.powf(self.margin)
    }

    /// `[n^α₁, side₁ − n^α₁] × …`; `None` once the margin eats a whole side.
    pub fn shrunk(&self) -> Option<AxisBox> {
        let m = self.margin_width();
        if self.sides.iter().any(|s| 2.0 * m > *s) {
            return None;
        }
        Some(AxisBox { lo: vec![m; self.dim], hi: self.sides.iter().map(|s| s - m).collect() })
    }

    pub fn in_shrunk(&self, y: &[f64]) -> bool {
        self.shrunk().is_some_and(|b| b.contains(y))
    }

    /// Structured text record `{dim, n, a, alpha, margin}` with
    /// round-trip float formatting.
    pub fn to_record(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",");
        format!(
            "{{\"dim\":{},\"n\":{},\"a\":[{}],\"alpha\":[{}],\"margin\":{}}}",
            self.dim,
            fmt_f64(self.n),
            list(&self.a),
            list(&self.alpha),
            fmt_f64(self.margin)
        )
    }

    pub fn from_record(s: &str) -> Result<Self> {
        let r: WindowRecord = serde_json::from_str(s).map_err(|e| Error::Config(format!("window record: {e}")))?;
        r.try_into()
    }
}

/// Closed axis-aligned box `∏ [lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::MalformedBox("corner dimensions differ".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && l <= h)) {
            return Err(Error::MalformedBox("lower corner must not exceed upper corner".into()));
        }
        Ok(AxisBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.lo.len() && y.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| v >= l && v <= h)
    }

    pub fn contains_interior(&self, y: &[f64]) -> bool {
        y.len() == self.lo.len() && y.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| v > l && v < h)
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).collect()
    }

    pub fn to_record(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",");
        format!("{{\"lo\":[{}],\"hi\":[{}]}}", list(&self.lo), list(&self.hi))
    }

    pub fn from_record(s: &str) -> Result<Self> {
        let b: AxisBox = serde_json::from_str(s).map_err(|e| Error::Config(format!("box record: {e}")))?;
        AxisBox::new(b.lo, b.hi)
    }
}
