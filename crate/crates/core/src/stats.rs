//! Distances to the standard normal, scaling fits and tail bounds.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use libm::erfc;

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF.
pub fn phi_cdf(t: f64) -> f64 {
    0.5 * erfc(-t / SQRT_2)
}

/// `1 − Φ(t)` without cancellation.
pub fn phi_sf(t: f64) -> f64 {
    0.5 * erfc(t / SQRT_2)
}

pub fn phi_pdf(t: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * t * t).exp()
}

/// `Φ⁻¹(p)` refined with two Newton steps.
pub fn phi_inv(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut t = Normal::standard().inverse_cdf(p);
    for _ in 0..2 {
        let d = phi_pdf(t);
        if d > 0.0 {
            let err = if p < 0.5 { phi_cdf(t) - p } else { (1.0 - p) - phi_sf(t) };
            t -= err / d;
        }
    }
    t
}

/// `∫_{−∞}^t Φ = tΦ(t) + φ(t)`.
fn psi(t: f64) -> f64 {
    t * phi_cdf(t) + phi_pdf(t)
}

/// `∫_t^∞ (1 − Φ) = φ(t) − t(1 − Φ(t))`.
fn psi_c(t: f64) -> f64 {
    phi_pdf(t) - t * phi_sf(t)
}

/// `∫_a^b |c − Φ(t)| dt` on a piece where `c − Φ` keeps one sign and which
/// does not straddle 0.
fn piece(a: f64, b: f64, c: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let below = phi_cdf(mid) < c;
    let len = b - a;
    let v = if b <= 0.0 {
        let int_phi = psi(b) - psi(a);
        if below {
            c * len - int_phi
        } else {
            int_phi - c * len
        }
    } else {
        let int_sf = psi_c(a) - psi_c(b);
        if below {
            int_sf - (1.0 - c) * len
        } else {
            (1.0 - c) * len - int_sf
        }
    };
    v.max(0.0)
}

fn check_finite(sample: &[f64]) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `∫ |F̂_M − Φ|`, integrated exactly between order statistics.
pub fn wasserstein1_to_standard_normal(sample: &[f64]) -> Result<f64> {
    check_finite(sample)?;
    let xs = sorted(sample);
    let m = xs.len();
    let mut total = psi(xs[0]) + psi_c(xs[m - 1]);
    for i in 1..m {
        let (a, b) = (xs[i - 1], xs[i]);
        if b <= a {
            continue;
        }
        let c = i as f64 / m as f64;
        let mut cuts = vec![a];
        let t_star = phi_inv(c);
        for s in [0.0, t_star] {
            if s > a && s < b {
                cuts.push(s);
            }
        }
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        total += cuts.windows(2).map(|w| piece(w[0], w[1], c)).sum::<f64>();
    }
    Ok(total)
}

/// `sup_t |F̂_M(t) − F(t)|` for a continuous CDF `F`.
pub fn kolmogorov_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    check_finite(sample)?;
    let xs = sorted(sample);
    let m = xs.len() as f64;
    Ok(xs.iter().enumerate().fold(0.0, |d, (i, x)| {
        let f = cdf(*x);
        d.max((i as f64 + 1.0) / m - f).max(f - i as f64 / m)
    }))
}

pub fn kolmogorov_to_standard_normal(sample: &[f64]) -> Result<f64> {
    kolmogorov_distance(sample, phi_cdf)
}

/// Asymptotic p-value of the one-sample KS statistic `d` at sample size
/// `m`, with Stephens' finite-sample correction.
pub fn ks_pvalue(d: f64, m: usize) -> f64 {
    let sm = (m as f64).sqrt();
    let lambda = (sm + 0.12 + 0.11 / sm) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Pearson chi-square p-value for observed against expected bin counts.
/// `ddof` extra degrees of freedom are removed for fitted parameters.
pub fn chi_square_pvalue(observed: &[f64], expected: &[f64], ddof: usize) -> Result<f64> {
    if observed.len() != expected.len() || observed.len() < 2 + ddof {
        return Err(Error::InvalidParameter("chi-square needs matching bins and positive degrees of freedom".into()));
    }
    if expected.iter().any(|e| *e <= 0.0) {
        return Err(Error::InvalidParameter("expected counts must be positive".into()));
    }
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = (observed.len() - 1 - ddof) as f64;
    let dist = ChiSquared::new(df).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(dist.sf(stat))
}

/// Goodness of fit of integer counts against Poisson(`mean`). Bins with
/// expected count below 5 are pooled into the two tails.
pub fn poisson_chi_square_pvalue(counts: &[u64], mean: f64) -> Result<f64> {
    if counts.is_empty() || !(mean > 0.0) {
        return Err(Error::InvalidParameter("need counts and a positive mean".into()));
    }
    let total = counts.len() as f64;
    let max = *counts.iter().max().unwrap() as usize;
    let upper = max.max(mean.ceil() as usize * 4 + 10);
    let mut pmf = Vec::with_capacity(upper + 1);
    let mut p = (-mean).exp();
    for k in 0..=upper {
        if k > 0 {
            p *= mean / k as f64;
        }
        pmf.push(p);
    }
    let mut obs = vec![0.0; upper + 1];
    for c in counts {
        obs[*c as usize] += 1.0;
    }
    // Left edge: first k with enough mass accumulated.
    let mut bins_o = Vec::new();
    let mut bins_e = Vec::new();
    let (mut acc_o, mut acc_e) = (0.0, 0.0);
    for k in 0..=upper {
        acc_o += obs[k];
        acc_e += pmf[k] * total;
        if acc_e >= 5.0 {
            bins_o.push(acc_o);
            bins_e.push(acc_e);
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    // The remaining tail, including mass beyond `upper`, joins the last bin.
    let tail_e = total - bins_e.iter().sum::<f64>();
    if let (Some(lo), Some(le)) = (bins_o.last_mut(), bins_e.last_mut()) {
        *lo += acc_o;
        *le += tail_e;
    }
    chi_square_pvalue(&bins_o, &bins_e, 0)
}

/// Replication summary and self-standardized sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub m: usize,
    pub mean: f64,
    pub variance: f64,
    /// `(x − mean)/sd`, sorted ascending.
    pub standardized: Vec<f64>,
    pub raw: Vec<f64>,
}

impl SampleSummary {
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::InvalidParameter("summary needs at least two replications".into()));
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let m = raw.len();
        let mean = raw.iter().sum::<f64>() / m as f64;
        let variance = raw.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1) as f64;
        if !(variance > 0.0) {
            return Err(Error::InvalidParameter("sample has zero variance".into()));
        }
        let sd = variance.sqrt();
        let mut standardized: Vec<f64> = raw.iter().map(|x| (x - mean) / sd).collect();
        standardized.sort_by(f64::total_cmp);
        Ok(SampleSummary { m, mean, variance, standardized, raw })
    }

    pub fn w1(&self) -> f64 {
        wasserstein1_to_standard_normal(&self.standardized).expect("finite standardized sample")
    }

    pub fn ks(&self) -> f64 {
        kolmogorov_to_standard_normal(&self.standardized).expect("finite standardized sample")
    }

    pub fn ks_pvalue(&self) -> f64 {
        ks_pvalue(self.ks(), self.m)
    }
}

/// Delta-method standardization of `Π = exp(L)` from samples of `L`,
/// kept in log space: `(exp(L − μ̂) − 1)/σ̂`, sorted ascending.
pub fn delta_method_product_standardized(log_values: &[f64]) -> Result<Vec<f64>> {
    let s = SampleSummary::new(log_values.to_vec())?;
    let sd = s.variance.sqrt();
    let mut out: Vec<f64> = log_values.iter().map(|l| (l - s.mean).exp_m1() / sd).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Ordinary least squares `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter("least squares needs at least two paired values".into()));
    }
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidParameter("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_stderr = if x.len() > 2 { (sse / (k - 2.0) / sxx).sqrt() } else { f64::NAN };
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LinearFit { slope, intercept, slope_stderr, r_squared })
}

/// Power-law fit `V(n) ≈ e^intercept · n^slope`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub ns: Vec<f64>,
    pub variances: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r_squared: f64,
}

pub fn variance_scaling_fit(ns: &[f64], variances: &[f64]) -> Result<ScalingFit> {
    if ns.len() != variances.len() || ns.len() < 3 {
        return Err(Error::InvalidParameter("scaling fit needs at least three grid points".into()));
    }
    if variances.iter().chain(ns).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParameter("scaling fit needs positive grid values and variances".into()));
    }
    let lx: Vec<f64> = ns.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = variances.iter().map(|v| v.ln()).collect();
    let fit = ols(&lx, &ly)?;
    Ok(ScalingFit {
        ns: ns.to_vec(),
        variances: variances.to_vec(),
        slope: fit.slope,
        intercept: fit.intercept,
        stderr: fit.slope_stderr,
        r_squared: fit.r_squared,
    })
}

/// `P(X < mp/2) ≤ exp(−mp(1/2 + ½ ln ½))` for `X ~ Bin(m, p)`.
pub fn binomial_lower_tail_bound(m: u64, p: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (0,1), got {p}")));
    }
    Ok((-(m as f64) * p * (0.5 + 0.5 * 0.5f64.ln())).exp())
}

/// `P(X > 8ℓ) ≤ exp(−(ln 8)/4 · ℓ)` for `X ~ Poisson(ℓ)`.
pub fn poisson_upper_tail_bound(l: f64) -> Result<f64> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidParameter(format!("ℓ must be positive, got {l}")));
    }
    Ok((-(8f64.ln()) / 4.0 * l).exp())
}

/// Exceedance frequencies `P̂(G(Z) < β₃·|S|)` per window scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub beta3: f64,
    pub rows: Vec<ConcentrationRow>,
    /// Slope of `ln frequency` against slab volume, over rows with a
    /// positive frequency; `None` with fewer than two such rows.
    pub log_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub n: f64,
    pub slab_volume: f64,
    pub sampled: usize,
    pub below: usize,
    pub frequency: f64,
}

impl ConcentrationReport {
    pub fn new(beta3: f64, rows: Vec<ConcentrationRow>) -> Self {
        let pos: Vec<&ConcentrationRow> = rows.iter().filter(|r| r.frequency > 0.0).collect();
        let log_slope = if pos.len() >= 2 {
            let x: Vec<f64> = pos.iter().map(|r| r.slab_volume).collect();
            let y: Vec<f64> = pos.iter().map(|r| r.frequency.ln()).collect();
            ols(&x, &y).ok().map(|f| f.slope)
        } else {
            None
        };
        ConcentrationReport { beta3, rows, log_slope }
    }
}
