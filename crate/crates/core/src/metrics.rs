//! Evaluation metrics: SSIM, mean luminance, visual contrast measure (VCM)
//! and gradient edge energy.

use crate::denoise::gaussian_f64;
use crate::error::{Error, Result};
use crate::imagebuf::{Channel, ImageF};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

/// Mean SSIM over Gaussian windows (11×11, σ = 1.5) centred on every pixel.
/// Windows are clipped at the border and renormalized.
pub fn ssim(a: &Channel, b: &Channel) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::arg(format!(
            "ssim dimension mismatch: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let (w, h) = (a.width(), a.height());
    let x: Vec<f64> = a.data().iter().map(|&v| f64::from(v)).collect();
    let y: Vec<f64> = b.data().iter().map(|&v| f64::from(v)).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let blur = |s: &[f64]| gaussian_f64(s, w, h, SSIM_WINDOW, SSIM_SIGMA);
    let (mx, my, exx, eyy, exy) = (blur(&x), blur(&y), blur(&xx), blur(&yy), blur(&xy));
    let mut total = 0f64;
    for i in 0..w * h {
        let vx = exx[i] - mx[i] * mx[i];
        let vy = eyy[i] - my[i] * my[i];
        let cov = exy[i] - mx[i] * my[i];
        let num = (2.0 * mx[i] * my[i] + SSIM_C1) * (2.0 * cov + SSIM_C2);
        let den = (mx[i] * mx[i] + my[i] * my[i] + SSIM_C1) * (vx + vy + SSIM_C2);
        total += num / den;
    }
    Ok(total / (w * h) as f64)
}

/// Mean of the luminance plane; RGB luminance is `(R + G + B) / 3`.
pub fn mean_luminance(img: &ImageF) -> f64 {
    img.luminance().mean()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VcmParams {
    pub block: usize,
    /// Standard deviation a tile must exceed to count as contrasted.
    pub tau: f64,
}

impl Default for VcmParams {
    fn default() -> Self {
        Self {
            block: 16,
            tau: 0.02,
        }
    }
}

/// `100 · (fraction of tiles with std > tau) · (mean std of those tiles)`
/// over non-overlapping luminance tiles; partial edge tiles are dropped.
pub fn vcm(img: &ImageF, p: &VcmParams) -> Result<f64> {
    if p.block < 2 {
        return Err(Error::arg("vcm block must be at least 2"));
    }
    if !(p.tau > 0.0) {
        return Err(Error::arg("vcm tau must be positive"));
    }
    let (tx, ty) = (img.width() / p.block, img.height() / p.block);
    if tx == 0 || ty == 0 {
        return Err(Error::arg(format!(
            "image {}x{} smaller than one {}-px vcm block",
            img.width(),
            img.height(),
            p.block
        )));
    }
    let lum = img.luminance();
    let n = (p.block * p.block) as f64;
    let mut qualifying = 0usize;
    let mut std_sum = 0f64;
    for by in 0..ty {
        for bx in 0..tx {
            let mut s = 0f64;
            let mut s2 = 0f64;
            for y in by * p.block..(by + 1) * p.block {
                for &v in &lum.row(y)[bx * p.block..(bx + 1) * p.block] {
                    let v = f64::from(v);
                    s += v;
                    s2 += v * v;
                }
            }
            let mean = s / n;
            let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
            let sd = var.sqrt();
            if sd > p.tau {
                qualifying += 1;
                std_sum += sd;
            }
        }
    }
    if qualifying == 0 {
        return Ok(0.0);
    }
    let fraction = qualifying as f64 / (tx * ty) as f64;
    Ok(100.0 * fraction * (std_sum / qualifying as f64))
}

/// Mean squared central-difference gradient magnitude of luminance over
/// interior pixels. Zero when the image is narrower than 3 px.
pub fn edge_energy(img: &ImageF) -> f64 {
    let lum = img.luminance();
    let (w, h) = (lum.width(), lum.height());
    if w < 3 || h < 3 {
        return 0.0;
    }
    let mut acc = 0f64;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = 0.5 * (f64::from(lum.get(x + 1, y)) - f64::from(lum.get(x - 1, y)));
            let gy = 0.5 * (f64::from(lum.get(x, y + 1)) - f64::from(lum.get(x, y - 1)));
            acc += gx * gx + gy * gy;
        }
    }
    acc / ((w - 2) * (h - 2)) as f64
}

/// The metric row reported for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    /// Present only when a reference was supplied.
    pub ssim: Option<f64>,
    pub mean_luminance: f64,
    pub vcm: f64,
    pub edge_energy: f64,
    pub reference: Option<String>,
}

impl MetricReport {
    pub fn measure(
        img: &ImageF,
        reference: Option<&ImageF>,
        vcm_params: &VcmParams,
    ) -> Result<Self> {
        let ssim = reference
            .map(|r| ssim(&img.luminance(), &r.luminance()))
            .transpose()?;
        Ok(Self {
            ssim,
            mean_luminance: mean_luminance(img),
            vcm: vcm(img, vcm_params)?,
            edge_energy: edge_energy(img),
            reference: None,
        })
    }

    pub fn with_reference_id(mut self, id: impl Into<String>) -> Self {
        self.reference = Some(id.into());
        self
    }
}
