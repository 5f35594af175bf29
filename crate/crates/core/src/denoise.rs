//! Exact windowed bilateral filter and the Gaussian baseline.
//!
//! Windows are clipped at the image border and the surviving weights
//! renormalized, so every output is a convex combination of its inputs.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagebuf::{Channel, ImageF};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilateralParams {
    /// Odd window side length in pixels.
    pub window: usize,
    pub sigma_spatial: f64,
    /// Range sigma in normalized intensity units.
    pub sigma_range: f64,
}

impl Default for BilateralParams {
    fn default() -> Self {
        Self {
            window: 15,
            sigma_spatial: 3.0,
            sigma_range: 0.1,
        }
    }
}

impl BilateralParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(Error::arg(format!(
                "bilateral window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if !(self.sigma_spatial > 0.0 && self.sigma_range > 0.0) {
            return Err(Error::arg("bilateral sigmas must be positive"));
        }
        Ok(())
    }
}

/// Gaussian baseline parameters. The default is a 9-px window with
/// `sigma = 0.3·w/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    pub window: usize,
    pub sigma: f64,
}

impl Default for GaussianParams {
    fn default() -> Self {
        Self {
            window: 9,
            sigma: 0.3 * 9.0 / 2.0,
        }
    }
}

fn check_window(w: usize) -> Result<()> {
    if w == 0 || w.is_multiple_of(2) {
        return Err(Error::arg(format!("window must be odd, got {w}")));
    }
    Ok(())
}

pub fn bilateral(chan: &Channel, p: &BilateralParams) -> Result<Channel> {
    p.validate()?;
    let r = (p.window / 2) as isize;
    let side = p.window;
    let spatial: Vec<f64> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .map(|(dx, dy)| {
            (-((dx * dx + dy * dy) as f64) / (2.0 * p.sigma_spatial * p.sigma_spatial)).exp()
        })
        .collect();
    let range_coeff = -1.0 / (2.0 * p.sigma_range * p.sigma_range);
    let (w, h) = (chan.width() as isize, chan.height() as isize);
    let data = chan.data();
    let mut out = vec![0f32; chan.len()];
    out.par_chunks_mut(chan.width())
        .enumerate()
        .for_each(|(y, row)| {
            let y = y as isize;
            let y0 = (y - r).max(0);
            let y1 = (y + r).min(h - 1);
            for (x, slot) in row.iter_mut().enumerate() {
                let x = x as isize;
                let x0 = (x - r).max(0);
                let x1 = (x + r).min(w - 1);
                let center = f64::from(data[(y * w + x) as usize]);
                let mut num = 0f64;
                let mut den = 0f64;
                for qy in y0..=y1 {
                    let krow = ((qy - y + r) as usize) * side;
                    let drow = (qy * w) as usize;
                    for qx in x0..=x1 {
                        let v = f64::from(data[drow + qx as usize]);
                        let d = v - center;
                        let wt =
                            spatial[krow + (qx - x + r) as usize] * (range_coeff * d * d).exp();
                        num += wt * v;
                        den += wt;
                    }
                }
                *slot = (num / den) as f32;
            }
        });
    Channel::new(chan.width(), chan.height(), out)
}

fn kernel_1d(window: usize, sigma: f64) -> Vec<f64> {
    let r = (window / 2) as isize;
    (-r..=r)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
        .collect()
}

/// One clipped, renormalized 1-D pass along rows (`horizontal`) or columns.
fn convolve_axis(src: &[f64], w: usize, h: usize, k: &[f64], horizontal: bool) -> Vec<f64> {
    let r = (k.len() / 2) as isize;
    let mut out = vec![0f64; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, slot) in row.iter_mut().enumerate() {
            let (pos, len) = if horizontal { (x, w) } else { (y, h) };
            let lo = (pos as isize - r).max(0);
            let hi = (pos as isize + r).min(len as isize - 1);
            let mut num = 0.0;
            let mut den = 0.0;
            for q in lo..=hi {
                let wt = k[(q - pos as isize + r) as usize];
                let v = if horizontal {
                    src[y * w + q as usize]
                } else {
                    src[q as usize * w + x]
                };
                num += wt * v;
                den += wt;
            }
            *slot = num / den;
        }
    });
    out
}

/// Normalized Gaussian blur over a clipped `window × window` box.
///
/// Evaluated separably: the clipped box is a product of clipped intervals, so
/// per-axis renormalization equals 2-D renormalization.
pub fn gaussian(chan: &Channel, window: usize, sigma: f64) -> Result<Channel> {
    check_window(window)?;
    if !(sigma > 0.0) {
        return Err(Error::arg("gaussian sigma must be positive"));
    }
    let k = kernel_1d(window, sigma);
    let (w, h) = (chan.width(), chan.height());
    let src: Vec<f64> = chan.data().iter().map(|&v| f64::from(v)).collect();
    let tmp = convolve_axis(&src, w, h, &k, true);
    let out = convolve_axis(&tmp, w, h, &k, false);
    Channel::new(w, h, out.into_iter().map(|v| v as f32).collect())
}

/// Clipped separable Gaussian over an `f64` plane.
pub(crate) fn gaussian_f64(src: &[f64], w: usize, h: usize, window: usize, sigma: f64) -> Vec<f64> {
    let k = kernel_1d(window, sigma);
    let tmp = convolve_axis(src, w, h, &k, true);
    convolve_axis(&tmp, w, h, &k, false)
}

/// Bilateral filter applied to each channel independently.
pub fn denoise_rgb(img: &ImageF, p: &BilateralParams) -> Result<ImageF> {
    let planes = img
        .split()
        .iter()
        .map(|c| bilateral(c, p))
        .collect::<Result<Vec<_>>>()?;
    ImageF::from_channels(&planes)
}
