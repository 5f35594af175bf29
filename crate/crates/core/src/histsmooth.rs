//! Regularized histogram smoothing and cumulative-histogram remapping.
//!
//! The smoothed histogram solves
//! `((1 + λ)·I + γ·DᵀD)·h = h_i + λ·u`
//! where `D` is the 255×256 first-difference operator and `u` the uniform
//! histogram with the same mass. `DᵀD` is tridiagonal, so the system is solved
//! directly with the Thomas algorithm.

use crate::error::{Error, Result};
use crate::imagebuf::Channel;

pub const BINS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram256 {
    counts: [f64; BINS],
    total: f64,
}

impl Histogram256 {
    pub fn from_counts(counts: [f64; BINS]) -> Result<Self> {
        if counts.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return Err(Error::arg(
                "histogram counts must be finite and non-negative",
            ));
        }
        let total = counts.iter().sum();
        Ok(Self { counts, total })
    }

    pub fn counts(&self) -> &[f64; BINS] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.total
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothParams {
    /// Pull toward the uniform histogram.
    pub lambda: f64,
    /// Second-difference smoothness penalty.
    pub gamma: f64,
}

impl Default for SmoothParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            gamma: 1.0,
        }
    }
}

impl SmoothParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.gamma >= 0.0) {
            return Err(Error::arg(format!(
                "histogram smoothing weights must be >= 0 (lambda={}, gamma={})",
                self.lambda, self.gamma
            )));
        }
        Ok(())
    }
}

#[inline]
pub fn bin_of(v: f32) -> usize {
    let b = (f64::from(v) * BINS as f64).floor();
    if b >= (BINS - 1) as f64 {
        BINS - 1
    } else if b > 0.0 {
        b as usize
    } else {
        0
    }
}

pub fn build_histogram(l: &Channel) -> Histogram256 {
    let mut counts = [0f64; BINS];
    for &v in l.data() {
        counts[bin_of(v)] += 1.0;
    }
    Histogram256 {
        counts,
        total: l.len() as f64,
    }
}

/// Solves a tridiagonal system in place. `sub[i]` couples rows `i+1` and `i`,
/// `sup[i]` rows `i` and `i+1`. Requires a nonsingular, pivot-free matrix
/// (diagonally dominant here).
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n > 0 && sub.len() + 1 == n && sup.len() + 1 == n && rhs.len() == n);
    let mut c = vec![0f64; n];
    let mut d = vec![0f64; n];
    c[0] = if n > 1 { sup[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = sup[i] / m;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

/// Bands of `(1 + λ)I + γDᵀD`: `(sub, diag, sup)`.
pub fn system_bands(p: &SmoothParams) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut diag = vec![1.0 + p.lambda + 2.0 * p.gamma; BINS];
    diag[0] = 1.0 + p.lambda + p.gamma;
    diag[BINS - 1] = 1.0 + p.lambda + p.gamma;
    let off = vec![-p.gamma; BINS - 1];
    (off.clone(), diag, off)
}

/// Smooths `h_i` toward the uniform histogram, then clamps negatives and
/// rescales to the original mass.
pub fn smooth_histogram(h_i: &Histogram256, p: &SmoothParams) -> Result<Histogram256> {
    p.validate()?;
    if !(h_i.total > 0.0) {
        return Err(Error::arg("cannot smooth an empty histogram"));
    }
    let uniform = h_i.total / BINS as f64;
    let rhs: Vec<f64> = h_i.counts.iter().map(|&c| c + p.lambda * uniform).collect();
    let (sub, diag, sup) = system_bands(p);
    let solved = solve_tridiagonal(&sub, &diag, &sup, &rhs);
    let mut counts = [0f64; BINS];
    for (dst, &v) in counts.iter_mut().zip(&solved) {
        *dst = v.max(0.0);
    }
    let mass: f64 = counts.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::Degenerate("smoothed histogram has no mass".into()));
    }
    let scale = h_i.total / mass;
    for c in counts.iter_mut() {
        *c *= scale;
    }
    Ok(Histogram256 {
        counts,
        total: h_i.total,
    })
}

/// Piecewise-linear cumulative map with knots at bin edges `k/256`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeMap {
    knots: [f64; BINS + 1],
}

impl CumulativeMap {
    pub fn identity() -> Self {
        let mut knots = [0f64; BINS + 1];
        for (k, v) in knots.iter_mut().enumerate() {
            *v = k as f64 / BINS as f64;
        }
        Self { knots }
    }

    pub fn knots(&self) -> &[f64; BINS + 1] {
        &self.knots
    }

    #[inline]
    pub fn eval(&self, v: f32) -> f32 {
        let pos = f64::from(v).clamp(0.0, 1.0) * BINS as f64;
        let i = (pos.floor() as usize).min(BINS - 1);
        let frac = pos - i as f64;
        (self.knots[i] + frac * (self.knots[i + 1] - self.knots[i])) as f32
    }
}

pub fn cumulative_map(h: &Histogram256) -> Result<CumulativeMap> {
    if !(h.total > 0.0) {
        return Err(Error::arg("cumulative map of an empty histogram"));
    }
    let mut knots = [0f64; BINS + 1];
    let mut acc = 0f64;
    for (i, &c) in h.counts.iter().enumerate() {
        acc += c;
        knots[i + 1] = (acc / h.total).min(1.0);
    }
    knots[BINS] = 1.0;
    Ok(CumulativeMap { knots })
}

pub fn apply_map(l: &Channel, map: &CumulativeMap) -> Channel {
    l.map(|v| map.eval(v))
}
