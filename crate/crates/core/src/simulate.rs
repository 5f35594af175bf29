//! Synthetic night-image degradations and per-channel Poisson noise.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagebuf::{clamp_sample, ImageF};

const LEVELS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegradeKind {
    /// Low light level.
    Lll,
    /// Very low light level.
    Vlll,
    /// High dynamic range.
    Hdr,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradeSpec {
    pub kind: DegradeKind,
    /// Fraction of darkest samples crushed to zero.
    pub t: f64,
    /// Brightness scale after the shift.
    pub alpha: f64,
    pub t_low: f64,
    pub t_high: f64,
}

impl DegradeSpec {
    pub fn lll() -> Self {
        Self::custom(0.03, 0.7).with_kind(DegradeKind::Lll)
    }

    pub fn vlll() -> Self {
        Self::custom(0.03, 0.3).with_kind(DegradeKind::Vlll)
    }

    pub fn hdr() -> Self {
        Self {
            kind: DegradeKind::Hdr,
            t: 0.0,
            alpha: 1.0,
            t_low: 0.05,
            t_high: 0.05,
        }
    }

    pub fn custom(t: f64, alpha: f64) -> Self {
        Self {
            kind: DegradeKind::Custom,
            t,
            alpha,
            t_low: 0.0,
            t_high: 0.0,
        }
    }

    fn with_kind(mut self, kind: DegradeKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn apply(&self, img: &ImageF) -> Result<ImageF> {
        match self.kind {
            DegradeKind::Hdr => degrade_hdr(img, self.t_low, self.t_high),
            _ => degrade_low(img, self.t, self.alpha),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Expected photon count at full scale.
    pub peak: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            peak: 100.0,
            seed: 0,
        }
    }
}

/// Cumulative distribution of all samples (every channel) over 256 levels.
fn level_cdf(img: &ImageF) -> [f64; LEVELS] {
    let mut counts = [0u64; LEVELS];
    for &v in img.data() {
        counts[(clamp_sample(v) * 255.0).round() as usize] += 1;
    }
    let n = img.data().len() as f64;
    let mut cdf = [0f64; LEVELS];
    let mut acc = 0u64;
    for (i, c) in counts.iter().enumerate() {
        acc += c;
        cdf[i] = acc as f64 / n;
    }
    cdf
}

fn check_fraction(name: &str, t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::arg(format!("{name}={t} must lie in [0, 1]")));
    }
    Ok(())
}

/// Smallest level whose cumulative fraction reaches `t`, as a value in `[0, 1]`.
pub fn cdf_quantile(img: &ImageF, t: f64) -> Result<f64> {
    check_fraction("t", t)?;
    let cdf = level_cdf(img);
    let i = cdf.iter().position(|&c| c >= t).unwrap_or(LEVELS - 1);
    Ok(i as f64 / 255.0)
}

/// `alpha·max(x − d, 0)` with `d` the `t`-quantile of all samples.
pub fn degrade_low(img: &ImageF, t: f64, alpha: f64) -> Result<ImageF> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::arg(format!("alpha={alpha} must lie in (0, 1]")));
    }
    let d = cdf_quantile(img, t)?;
    Ok(img.map(|x| (alpha * (f64::from(x) - d).max(0.0)) as f32))
}

/// Clips the `t_low` darkest and `t_high` brightest fractions and stretches
/// the remaining interval onto `[0, 1]`.
pub fn degrade_hdr(img: &ImageF, t_low: f64, t_high: f64) -> Result<ImageF> {
    check_fraction("t_low", t_low)?;
    check_fraction("t_high", t_high)?;
    if t_low + t_high >= 1.0 {
        return Err(Error::arg("t_low + t_high must be below 1"));
    }
    let cdf = level_cdf(img);
    let low = cdf.iter().position(|&c| c >= t_low).unwrap_or(LEVELS - 1);
    let high = cdf.iter().rposition(|&c| c <= 1.0 - t_high);
    let degenerate = || {
        Error::Degenerate(format!(
            "histogram too narrow for t_low={t_low}, t_high={t_high}"
        ))
    };
    let high = high.ok_or_else(degenerate)?;
    if high <= low {
        return Err(degenerate());
    }
    let (d_low, d_high) = (low as f64 / 255.0, high as f64 / 255.0);
    let alpha = 1.0 / (d_high - d_low);
    Ok(img.map(|x| (alpha * (f64::from(x) - d_low).max(0.0)).min(1.0) as f32))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the independent stream for one (channel, row).
fn stream_seed(seed: u64, channel: usize, row: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ channel as u64) ^ row as u64)
}

/// Uniform in `[0, 1)` from the top 53 bits.
#[inline]
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn ln_factorial(k: f64) -> f64 {
    if k < 10.0 {
        let mut acc = 0.0;
        let mut i = 2.0;
        while i <= k {
            acc += f64::ln(i);
            i += 1.0;
        }
        return acc;
    }
    // Stirling series; error below 1e-12 for k >= 10.
    let k2 = k * k;
    k * k.ln() - k + 0.5 * (2.0 * std::f64::consts::PI * k).ln() + 1.0 / (12.0 * k)
        - 1.0 / (360.0 * k * k2)
        + 1.0 / (1260.0 * k * k2 * k2)
}

/// Draws from Poisson(`mean`).
///
/// Sequential-search inversion below a mean of 10; above it, Hörmann's
/// transformed rejection with squeeze (PTRS). Both consume uniforms from
/// `rng` in a fixed order, so a seed reproduces on every platform.
pub fn sample_poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    if mean < 10.0 {
        let u = uniform(rng);
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf && k < 1000 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        return k;
    }
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.024_83 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = uniform(rng) - 0.5;
        let v = uniform(rng);
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln()
            <= -mean + k * loglam - ln_factorial(k)
        {
            return k as u64;
        }
    }
}

/// Independent Poisson noise per channel: `Poisson(x·peak)/peak`, clamped.
///
/// Every (channel, row) draws from its own seeded stream, so the result does
/// not depend on thread scheduling.
pub fn add_poisson(img: &ImageF, n: &NoiseSpec) -> Result<ImageF> {
    if !(n.peak > 0.0 && n.peak.is_finite()) {
        return Err(Error::arg(format!(
            "poisson peak {} must be positive",
            n.peak
        )));
    }
    let (w, h) = (img.width(), img.height());
    let mut out = vec![0f32; img.data().len()];
    out.par_chunks_mut(w)
        .enumerate()
        .for_each(|(row_idx, row)| {
            let (c, y) = (row_idx / h, row_idx % h);
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(n.seed, c, y));
            let src = &img.plane(c)[y * w..(y + 1) * w];
            for (dst, &x) in row.iter_mut().zip(src) {
                let mean = f64::from(clamp_sample(x)) * n.peak;
                let k = sample_poisson(&mut rng, mean);
                *dst = clamp_sample((k as f64 / n.peak) as f32);
            }
        });
    ImageF::new(w, h, img.channels(), out)
}
