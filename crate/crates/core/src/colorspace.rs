//! Luminance/chroma separation by principal component analysis of log-RGB.
//!
//! Each pixel's log-RGB vector (after centering on the image mean) is rotated
//! by an orthonormal basis whose first row is the dominant, all-positive
//! "brightness" direction. The remaining two coordinates are signed chroma.
//! The luminance coordinate is mapped to a linear-light plane in `[0, 1]`
//! relative to a recorded window, so the transform is exactly invertible.

use nalgebra::{Matrix3, SymmetricEigen};

use crate::error::{Error, Result};
use crate::imagebuf::{clamp_sample, Channel, ImageF};

/// Floor applied to RGB samples before taking logarithms.
pub const LOG_FLOOR: f64 = 1.0 / 512.0;

const ORTHO_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisSource {
    Fitted,
    FixedOpponent,
}

/// Orthonormal 3×3 rotation of centered log-RGB into (luminance, chroma 1, chroma 2).
#[derive(Debug, Clone, PartialEq)]
pub struct ColorBasis {
    rows: [[f64; 3]; 3],
    mean: [f64; 3],
    source: BasisSource,
}

impl ColorBasis {
    /// The opponent basis used when the covariance is degenerate.
    pub fn fixed_opponent(mean: [f64; 3]) -> Self {
        let a = 1.0 / 3f64.sqrt();
        let b = 1.0 / 2f64.sqrt();
        let c = 1.0 / 6f64.sqrt();
        Self {
            rows: [[a, a, a], [b, 0.0, -b], [c, -2.0 * c, c]],
            mean,
            source: BasisSource::FixedOpponent,
        }
    }

    /// Builds a basis from explicit rows, checking orthonormality and the
    /// non-negative luminance row.
    pub fn from_rows(rows: [[f64; 3]; 3], mean: [f64; 3]) -> Result<Self> {
        let basis = Self {
            rows,
            mean,
            source: BasisSource::Fitted,
        };
        if basis.orthonormality_error() > ORTHO_TOL {
            return Err(Error::arg("basis rows are not orthonormal"));
        }
        if rows[0].iter().any(|&v| v < -1e-9) {
            return Err(Error::arg(
                "luminance row must have non-negative components",
            ));
        }
        Ok(basis)
    }

    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.rows
    }

    pub fn mean(&self) -> [f64; 3] {
        self.mean
    }

    pub fn source(&self) -> BasisSource {
        self.source
    }

    /// max |W·Wᵀ − I| over all entries.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| self.rows[i][k] * self.rows[j][k]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    pub fn determinant(&self) -> f64 {
        let r = &self.rows;
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    }

    /// W·(log-RGB − mean).
    #[inline]
    pub fn forward(&self, log_rgb: [f64; 3]) -> [f64; 3] {
        let d = [
            log_rgb[0] - self.mean[0],
            log_rgb[1] - self.mean[1],
            log_rgb[2] - self.mean[2],
        ];
        let r = &self.rows;
        [
            r[0][0] * d[0] + r[0][1] * d[1] + r[0][2] * d[2],
            r[1][0] * d[0] + r[1][1] * d[1] + r[1][2] * d[2],
            r[2][0] * d[0] + r[2][1] * d[1] + r[2][2] * d[2],
        ]
    }

    /// Wᵀ·v + mean.
    #[inline]
    pub fn inverse(&self, v: [f64; 3]) -> [f64; 3] {
        let r = &self.rows;
        [
            r[0][0] * v[0] + r[1][0] * v[1] + r[2][0] * v[2] + self.mean[0],
            r[0][1] * v[0] + r[1][1] * v[1] + r[2][1] * v[2] + self.mean[1],
            r[0][2] * v[0] + r[1][2] * v[1] + r[2][2] * v[2] + self.mean[2],
        ]
    }

    /// Sum of the luminance row's components. At least 1 for a unit row
    /// with non-negative entries.
    fn luminance_weight(&self) -> f64 {
        self.rows[0].iter().sum()
    }

    /// Luminance coordinate of pure white (log-RGB = 0).
    pub fn white_point(&self) -> f64 {
        self.forward([0.0; 3])[0]
    }
}

#[inline]
fn log_rgb(img: &ImageF, i: usize) -> [f64; 3] {
    [
        f64::from(img.plane(0)[i]).max(LOG_FLOOR).ln(),
        f64::from(img.plane(1)[i]).max(LOG_FLOOR).ln(),
        f64::from(img.plane(2)[i]).max(LOG_FLOOR).ln(),
    ]
}

fn require_rgb(img: &ImageF) -> Result<()> {
    if img.channels() != 3 {
        return Err(Error::arg(format!(
            "expected a 3-channel image, got {} channel(s)",
            img.channels()
        )));
    }
    Ok(())
}

/// Fits the PCA basis of the image's log-RGB samples.
///
/// Falls back to [`ColorBasis::fixed_opponent`] when the covariance has rank
/// below two, or when the dominant direction mixes signs and so cannot serve
/// as a brightness axis.
pub fn fit_basis(img: &ImageF) -> Result<ColorBasis> {
    require_rgb(img)?;
    let n = img.width() * img.height();
    let mut sum = [0f64; 3];
    for i in 0..n {
        let l = log_rgb(img, i);
        for c in 0..3 {
            sum[c] += l[c];
        }
    }
    let mean = sum.map(|s| s / n as f64);
    let mut cov = [[0f64; 3]; 3];
    for i in 0..n {
        let l = log_rgb(img, i);
        let d = [l[0] - mean[0], l[1] - mean[1], l[2] - mean[2]];
        for a in 0..3 {
            for b in a..3 {
                cov[a][b] += d[a] * d[b];
            }
        }
    }
    let m = Matrix3::from_fn(|a, b| {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        cov[a][b] / n as f64
    });
    let eig = SymmetricEigen::new(m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lambda: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    if lambda[0] <= 1e-12 || lambda[1] <= 1e-9 * lambda[0] {
        return Ok(ColorBasis::fixed_opponent(mean));
    }
    let mut rows = [[0f64; 3]; 3];
    for (r, &k) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        rows[r] = [col[0], col[1], col[2]];
    }
    if rows[0].iter().sum::<f64>() < 0.0 {
        rows[0] = rows[0].map(|v| -v);
    }
    if rows[0].iter().any(|&v| v < -1e-9) {
        return Ok(ColorBasis::fixed_opponent(mean));
    }
    for row in rows.iter_mut().skip(1) {
        let lead = row
            .iter()
            .copied()
            .fold(0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if lead < 0.0 {
            *row = row.map(|v| -v);
        }
    }
    Ok(ColorBasis {
        rows,
        mean,
        source: BasisSource::Fitted,
    })
}

/// Luminance plus chroma planes, with the window that maps the luminance
/// coordinate to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LccPlanes {
    pub l: Channel,
    pub c1: Channel,
    pub c2: Channel,
    pub basis: ColorBasis,
    pub lmin: f64,
    pub lmax: f64,
    /// Set when every pixel had the same luminance coordinate.
    pub degenerate: bool,
}

impl LccPlanes {
    /// Re-targets the luminance window so `L = 1` reconstructs to white while
    /// keeping the recorded black point. Brightening stages need headroom up
    /// to full scale, not just up to the brightest input pixel.
    pub fn with_display_window(mut self) -> Self {
        self.lmax = self.lmax.max(self.basis.white_point());
        if self.lmax - self.lmin < 1e-9 {
            self.lmin = self.lmax - 1.0;
        }
        self
    }
}

/// Maps luminance coordinate `v0` to linear light relative to the window.
#[inline]
fn encode_luminance(v0: f64, lmin: f64, lmax: f64, weight: f64) -> f64 {
    let floor = ((lmin - lmax) / weight).exp();
    let y = ((v0 - lmax) / weight).exp();
    ((y - floor) / (1.0 - floor)).clamp(0.0, 1.0)
}

#[inline]
fn decode_luminance(l: f64, lmin: f64, lmax: f64, weight: f64) -> f64 {
    let floor = ((lmin - lmax) / weight).exp();
    lmax + weight * (l * (1.0 - floor) + floor).ln()
}

/// Splits an RGB image into luminance `L ∈ [0, 1]` and chroma planes.
///
/// `L` is linear light: `exp(v0 / s)` rescaled so the darkest pixel maps to 0
/// and the brightest to 1, where `s` is the sum of the luminance row.
pub fn to_lcc(img: &ImageF, basis: &ColorBasis) -> Result<LccPlanes> {
    require_rgb(img)?;
    let (w, h) = (img.width(), img.height());
    let n = w * h;
    let mut v0 = Vec::with_capacity(n);
    let mut c1 = Vec::with_capacity(n);
    let mut c2 = Vec::with_capacity(n);
    for i in 0..n {
        let v = basis.forward(log_rgb(img, i));
        v0.push(v[0]);
        c1.push(v[1] as f32);
        c2.push(v[2] as f32);
    }
    let weight = basis.luminance_weight();
    let (mut lmin, mut lmax) = v0
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let degenerate = lmax - lmin < 1e-9;
    let l: Vec<f32> = if degenerate {
        // Window of unit width placed so that L = 0.5 decodes back to v0.
        let floor = (-1.0 / weight).exp();
        lmax = v0[0] - weight * (0.5 * (1.0 - floor) + floor).ln();
        lmin = lmax - 1.0;
        vec![0.5; n]
    } else {
        v0.iter()
            .map(|&v| encode_luminance(v, lmin, lmax, weight) as f32)
            .collect()
    };
    Ok(LccPlanes {
        l: Channel::new(w, h, l)?,
        c1: Channel::new(w, h, c1)?,
        c2: Channel::new(w, h, c2)?,
        basis: basis.clone(),
        lmin,
        lmax,
        degenerate,
    })
}

/// Recombines luminance and `alpha`-scaled chroma into a clamped RGB image.
pub fn from_lcc(planes: &LccPlanes, alpha: f64) -> Result<ImageF> {
    let l = &planes.l;
    if !l.same_dims(&planes.c1) || !l.same_dims(&planes.c2) {
        return Err(Error::arg("luminance and chroma planes differ in size"));
    }
    if planes.lmax <= planes.lmin {
        return Err(Error::arg("luminance window is empty"));
    }
    let weight = planes.basis.luminance_weight();
    let n = l.len();
    let mut data = vec![0f32; 3 * n];
    for i in 0..n {
        let v0 = decode_luminance(
            f64::from(l.data()[i]).clamp(0.0, 1.0),
            planes.lmin,
            planes.lmax,
            weight,
        );
        let v = [
            v0,
            alpha * f64::from(planes.c1.data()[i]),
            alpha * f64::from(planes.c2.data()[i]),
        ];
        let rgb = planes.basis.inverse(v);
        for c in 0..3 {
            data[c * n + i] = clamp_sample(rgb[c].exp() as f32);
        }
    }
    ImageF::new(l.width(), l.height(), 3, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_image(w: usize, h: usize, seed: u64, lo: f32, hi: f32) -> ImageF {
        let mut s = seed;
        let data = (0..w * h * 3)
            .map(|_| {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                lo + (hi - lo) * ((s >> 40) as f32 / (1u64 << 24) as f32)
            })
            .collect();
        ImageF::new(w, h, 3, data).unwrap()
    }

    #[test]
    fn gray_image_uses_opponent_basis() {
        let g = ImageF::from_channels(&vec![
            Channel::from_fn(8, 8, |x, y| (x + y) as f32 / 16.0
                + 0.05);
            3
        ])
        .unwrap();
        let b = fit_basis(&g).unwrap();
        assert_eq!(b.source(), BasisSource::FixedOpponent);
        assert!(b.orthonormality_error() < 1e-12);
    }

    #[test]
    fn fitted_basis_is_orthonormal() {
        let img = lcg_image(32, 32, 7, 0.05, 1.0);
        let b = fit_basis(&img).unwrap();
        assert!(b.orthonormality_error() < 1e-5);
        assert!((b.determinant().abs() - 1.0).abs() < 1e-5);
        assert!(b.rows()[0].iter().all(|&v| v >= -1e-9));
    }

    #[test]
    fn basis_is_permutation_invariant_and_deterministic() {
        let img = lcg_image(16, 16, 3, 0.1, 0.9);
        let n = 256;
        let planes: Vec<Channel> = (0..3)
            .map(|c| {
                let p = img.plane(c);
                Channel::new(16, 16, (0..n).map(|i| p[(i * 97) % n]).collect()).unwrap()
            })
            .collect();
        let shuffled = ImageF::from_channels(&planes).unwrap();
        let a = fit_basis(&img).unwrap();
        let b = fit_basis(&shuffled).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert!((a.rows()[r][c] - b.rows()[r][c]).abs() < 1e-12);
            }
        }
        assert_eq!(fit_basis(&img).unwrap(), a);
    }

    #[test]
    fn constant_gray_gives_half_luminance_and_zero_chroma() {
        let img = ImageF::filled(6, 5, 3, 0.5);
        let b = fit_basis(&img).unwrap();
        let p = to_lcc(&img, &b).unwrap();
        assert!(p.degenerate);
        assert!(p.l.data().iter().all(|&v| v == 0.5));
        assert!(p.c1.data().iter().all(|&v| v.abs() < 1e-12));
        assert!(p.c2.data().iter().all(|&v| v.abs() < 1e-12));
        let back = from_lcc(&p, 1.0).unwrap();
        assert!(back.data().iter().all(|&v| (v - 0.5).abs() < 1e-5));
    }

    #[test]
    fn luminance_spans_unit_interval() {
        let img = lcg_image(20, 10, 11, 0.02, 0.98);
        let p = to_lcc(&img, &fit_basis(&img).unwrap()).unwrap();
        let (lo, hi) = p.l.min_max();
        assert_eq!(lo, 0.0);
        assert!((hi - 1.0).abs() < 1e-6);
    }

    #[test]
    fn four_pixel_oracle() {
        // Rotation by hand: opponent rows with a chosen mean.
        let s3 = 1.0 / 3f64.sqrt();
        let s2 = 1.0 / 2f64.sqrt();
        let s6 = 1.0 / 6f64.sqrt();
        let rows = [[s3, s3, s3], [s2, 0.0, -s2], [s6, -2.0 * s6, s6]];
        let mean = [-1.0, -0.5, -2.0];
        let basis = ColorBasis::from_rows(rows, mean).unwrap();
        let px = [
            [0.9f32, 0.2, 0.4],
            [0.1, 0.6, 0.3],
            [0.5, 0.5, 0.05],
            [0.7, 0.8, 0.9],
        ];
        let mut data = vec![0f32; 12];
        for (i, p) in px.iter().enumerate() {
            for c in 0..3 {
                data[c * 4 + i] = p[c];
            }
        }
        let img = ImageF::new(2, 2, 3, data).unwrap();
        let planes = to_lcc(&img, &basis).unwrap();
        let v: Vec<[f64; 3]> = px
            .iter()
            .map(|p| {
                let d: Vec<f64> = (0..3).map(|c| f64::from(p[c]).ln() - mean[c]).collect();
                let mut out = [0.0; 3];
                for r in 0..3 {
                    out[r] = rows[r][0] * d[0] + rows[r][1] * d[1] + rows[r][2] * d[2];
                }
                out
            })
            .collect();
        let (lo, hi) = v
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p[0]), b.max(p[0])));
        let s = 3f64.sqrt();
        let floor = ((lo - hi) / s).exp();
        for (i, p) in v.iter().enumerate() {
            let l = (((p[0] - hi) / s).exp() - floor) / (1.0 - floor);
            assert!((f64::from(planes.l.data()[i]) - l).abs() < 1e-5);
            assert!((f64::from(planes.c1.data()[i]) - p[1]).abs() < 1e-5);
            assert!((f64::from(planes.c2.data()[i]) - p[2]).abs() < 1e-5);
        }
        assert!((planes.lmin - lo).abs() < 1e-12 && (planes.lmax - hi).abs() < 1e-12);
    }

    #[test]
    fn round_trip_identity() {
        let img = lcg_image(24, 24, 5, 0.02, 0.98);
        let basis = fit_basis(&img).unwrap();
        let back = from_lcc(&to_lcc(&img, &basis).unwrap(), 1.0).unwrap();
        let worst = img
            .data()
            .iter()
            .zip(back.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0f32, f32::max);
        assert!(worst <= 1e-4, "worst {worst}");
    }

    #[test]
    fn zero_alpha_is_gray_along_luminance() {
        let img = lcg_image(8, 8, 9, 0.1, 0.9);
        let basis = fit_basis(&img).unwrap();
        let out = from_lcc(&to_lcc(&img, &basis).unwrap(), 0.0).unwrap();
        let re = to_lcc(&out, &basis).unwrap();
        assert!(re.c1.data().iter().all(|v| v.abs() < 1e-4));
        assert!(re.c2.data().iter().all(|v| v.abs() < 1e-4));
    }

    #[test]
    fn alpha_scales_chroma() {
        // Mildly colored, in-gamut patch so the ×1.6 result is not clamped.
        let r = Channel::from_fn(16, 16, |x, _| 0.30 + 0.01 * x as f32);
        let g = Channel::from_fn(16, 16, |_, y| 0.20 + 0.005 * y as f32);
        let b = Channel::from_fn(16, 16, |x, y| 0.15 + 0.004 * (x + y) as f32);
        let img = ImageF::from_channels(&[r, g, b]).unwrap();
        let basis = fit_basis(&img).unwrap();
        let planes = to_lcc(&img, &basis).unwrap();
        let out = from_lcc(&planes, 1.6).unwrap();
        assert!(out.data().iter().all(|&v| v > 0.0 && v < 1.0));
        let re = to_lcc(&out, &basis).unwrap();
        let mag = |p: &LccPlanes| -> f64 {
            p.c1.data()
                .iter()
                .zip(p.c2.data())
                .map(|(a, b)| f64::from(a * a + b * b).sqrt())
                .sum()
        };
        let ratio = mag(&re) / mag(&planes);
        assert!((ratio - 1.6).abs() <= 0.05 * 1.6, "ratio {ratio}");
    }

    #[test]
    fn luminance_invariant_under_rgb_scaling() {
        let img = lcg_image(16, 16, 21, 0.05, 0.95);
        let half = img.map(|v| 0.5 * v);
        let a = to_lcc(&img, &fit_basis(&img).unwrap()).unwrap();
        let b = to_lcc(&half, &fit_basis(&half).unwrap()).unwrap();
        for (x, y) in a.l.data().iter().zip(b.l.data()) {
            assert!((x - y).abs() < 1e-5);
        }
    }

    #[test]
    fn display_window_reaches_white() {
        let img = lcg_image(8, 8, 2, 0.01, 0.2);
        let basis = fit_basis(&img).unwrap();
        let mut planes = to_lcc(&img, &basis).unwrap().with_display_window();
        let white = basis.forward([0.0; 3]);
        planes.l = Channel::filled(8, 8, 1.0);
        planes.c1 = Channel::filled(8, 8, white[1] as f32);
        planes.c2 = Channel::filled(8, 8, white[2] as f32);
        let out = from_lcc(&planes, 1.0).unwrap();
        assert!(out.data().iter().all(|&v| (v - 1.0).abs() < 1e-4));
    }

    #[test]
    fn rejects_gray_input() {
        assert!(to_lcc(
            &ImageF::filled(2, 2, 1, 0.5),
            &ColorBasis::fixed_opponent([0.0; 3])
        )
        .is_err());
    }
}
