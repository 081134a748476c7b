//! Exact sign predicates on floating-point input.
//!
//! All predicates evaluate the sign of a polynomial in the stored `f64`
//! coordinates without rounding error: products are split with an FMA into
//! exact two-term expansions and summed with Shewchuk's grow-expansion.
//! A cheap floating-point filter answers the easy cases first.

use std::cmp::Ordering;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bv = s - a;
    let av = s - bv;
    (s, (a - av) + (b - bv))
}

#[inline]
fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Nonoverlapping expansion, components stored in increasing magnitude.
#[derive(Default)]
struct Expansion(Vec<f64>);

impl Expansion {
    fn with_capacity(n: usize) -> Self {
        Expansion(Vec::with_capacity(n))
    }

    fn grow(&mut self, b: f64) {
        let mut q = b;
        let mut out = Vec::with_capacity(self.0.len() + 1);
        for &e in &self.0 {
            let (s, err) = two_sum(q, e);
            if err != 0.0 {
                out.push(err);
            }
            q = s;
        }
        if q != 0.0 {
            out.push(q);
        }
        self.0 = out;
    }

    fn sign(&self) -> Ordering {
        match self.0.last() {
            Some(v) if *v > 0.0 => Ordering::Greater,
            Some(v) if *v < 0.0 => Ordering::Less,
            _ => Ordering::Equal,
        }
    }
}

/// Exact sign of `terms.iter().sum()`.
pub fn sum_sign(terms: &[f64]) -> Ordering {
    let mut e = Expansion::with_capacity(terms.len());
    for &t in terms {
        e.grow(t);
    }
    e.sign()
}

/// Exact sign of `sum(lhs) - sum(rhs)`.
pub fn compare_sums(lhs: &[f64], rhs: &[f64]) -> Ordering {
    let mut e = Expansion::with_capacity(lhs.len() + rhs.len());
    for &t in lhs {
        e.grow(t);
    }
    for &t in rhs {
        e.grow(-t);
    }
    e.sign()
}

/// Sign of the signed area of the triangle `(a, b, c)`: `Greater` when the
/// triple turns counter-clockwise, `Less` when clockwise, `Equal` when the
/// points are collinear. Exact for all finite inputs that do not overflow.
pub fn orient2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Ordering {
    let l = (b[0] - a[0]) * (c[1] - a[1]);
    let r = (b[1] - a[1]) * (c[0] - a[0]);
    let det = l - r;
    // Shewchuk's ccwerrboundA.
    const EPS: f64 = f64::EPSILON * 0.5;
    const BOUND: f64 = (3.0 + 16.0 * EPS) * EPS;
    let detsum = l.abs() + r.abs();
    if det.abs() > BOUND * detsum {
        return det.partial_cmp(&0.0).unwrap_or(Ordering::Equal);
    }
    orient2d_exact(a, b, c)
}

fn orient2d_exact(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Ordering {
    let products = [
        two_product(a[0], b[1]),
        two_product(-a[0], c[1]),
        two_product(b[0], c[1]),
        two_product(-b[0], a[1]),
        two_product(c[0], a[1]),
        two_product(-c[0], b[1]),
    ];
    let mut e = Expansion::with_capacity(12);
    for (hi, lo) in products {
        e.grow(lo);
        e.grow(hi);
    }
    e.sign()
}

/// True iff the open segments `(p1, q1)` and `(p2, q2)` meet in exactly one
/// point that is interior to both. Shared endpoints, an endpoint touching the
/// other segment, collinear overlaps and degenerate segments all return false.
pub fn segments_properly_cross(p1: [f64; 2], q1: [f64; 2], p2: [f64; 2], q2: [f64; 2]) -> bool {
    // Bounding-box rejection is exact and skips most pairs.
    let (min1x, max1x) = minmax(p1[0], q1[0]);
    let (min2x, max2x) = minmax(p2[0], q2[0]);
    if max1x < min2x || max2x < min1x {
        return false;
    }
    let (min1y, max1y) = minmax(p1[1], q1[1]);
    let (min2y, max2y) = minmax(p2[1], q2[1]);
    if max1y < min2y || max2y < min1y {
        return false;
    }
    let o1 = orient2d(p1, q1, p2);
    let o2 = orient2d(p1, q1, q2);
    if o1 == Ordering::Equal || o2 == Ordering::Equal || o1 == o2 {
        return false;
    }
    let o3 = orient2d(p2, q2, p1);
    let o4 = orient2d(p2, q2, q1);
    o3 != Ordering::Equal && o4 != Ordering::Equal && o3 != o4
}

#[inline]
fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}
