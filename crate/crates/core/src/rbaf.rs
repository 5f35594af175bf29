//! Retinex-based adaptive filtering of the luminance plane.
//!
//! The illumination ("surround mask") is a Gaussian-weighted disk average whose
//! width is chosen per direction: each pixel scans eight rays, and a ray that
//! crosses a high-contrast step gets the narrow `sigma1` instead of `sigma0`.
//! Keeping the surround from reaching across strong edges is what suppresses
//! the bright/dark bands (halos) of classic single-scale Retinex.

use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagebuf::Channel;

pub const DIRECTIONS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbafParams {
    /// Surround width (px) along rays that stay in smooth regions.
    pub sigma0: f64,
    /// Surround width (px) along rays that cross an edge.
    pub sigma1: f64,
    /// Step between consecutive ray samples that counts as an edge.
    pub edge_threshold: f64,
    /// Disk radius; `None` means `ceil(3·sigma0)`.
    pub r_max: Option<usize>,
    /// Gain of the darkness sigmoid.
    pub sigmoid_gain: f64,
    pub log_floor: f64,
}

impl Default for RbafParams {
    fn default() -> Self {
        Self {
            sigma0: 16.0,
            sigma1: 5.0,
            edge_threshold: 0.15,
            r_max: None,
            sigmoid_gain: 10.0,
            log_floor: 1.0 / 512.0,
        }
    }
}

impl RbafParams {
    pub fn radius(&self) -> usize {
        self.r_max
            .unwrap_or_else(|| (3.0 * self.sigma0).ceil() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma1 > 0.0 && self.sigma1 <= self.sigma0 / 2.0) {
            return Err(Error::arg(format!(
                "need 0 < sigma1 <= sigma0/2, got sigma0={} sigma1={}",
                self.sigma0, self.sigma1
            )));
        }
        if self.radius() < 1 {
            return Err(Error::arg("r_max must be at least 1"));
        }
        if !(self.sigmoid_gain > 0.0) {
            return Err(Error::arg("sigmoid gain must be positive"));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::arg("log floor must be positive"));
        }
        if self.edge_threshold.is_nan() {
            return Err(Error::arg("edge threshold is NaN"));
        }
        Ok(())
    }
}

/// Unit step of direction `k`, at angle `k·45°` (x right, y down).
#[inline]
fn direction(k: usize) -> (f64, f64) {
    let theta = k as f64 * FRAC_PI_4;
    (theta.cos(), theta.sin())
}

/// Bit `k` is set when ray `k` from `(x, y)` crosses an edge.
fn edge_bits(l: &Channel, p: &RbafParams, rays: &[Vec<(isize, isize)>], x: usize, y: usize) -> u8 {
    let (w, h) = (l.width() as isize, l.height() as isize);
    let data = l.data();
    let mut bits = 0u8;
    for (k, ray) in rays.iter().enumerate() {
        let mut prev = f64::from(data[y * l.width() + x]);
        for &(dx, dy) in ray {
            let (px, py) = (x as isize + dx, y as isize + dy);
            if px < 0 || py < 0 || px >= w || py >= h {
                break;
            }
            let cur = f64::from(data[py as usize * l.width() + px as usize]);
            if (cur - prev).abs() > p.edge_threshold {
                bits |= 1 << k;
                break;
            }
            prev = cur;
        }
    }
    bits
}

/// Ray sample offsets `(round(r·cosθ), round(r·sinθ))` for `r = 1..=r_max`.
fn ray_offsets(r_max: usize) -> Vec<Vec<(isize, isize)>> {
    (0..DIRECTIONS)
        .map(|k| {
            let (c, s) = direction(k);
            (1..=r_max)
                .map(|r| {
                    let r = r as f64;
                    ((r * c).round() as isize, (r * s).round() as isize)
                })
                .collect()
        })
        .collect()
}

/// Per-direction surround variances at one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaField {
    pub sigma_sq: [f64; DIRECTIONS],
}

impl SigmaField {
    pub fn crosses_edge(&self, k: usize, p: &RbafParams) -> bool {
        self.sigma_sq[k] == p.sigma1 * p.sigma1
    }
}

/// Scans the eight rays from `(x, y)` and assigns each direction its variance.
pub fn scan_directions(l: &Channel, p: &RbafParams, x: usize, y: usize) -> SigmaField {
    assert!(x < l.width() && y < l.height(), "pixel out of bounds");
    let bits = edge_bits(l, p, &ray_offsets(p.radius()), x, y);
    let mut sigma_sq = [p.sigma0 * p.sigma0; DIRECTIONS];
    for (k, s) in sigma_sq.iter_mut().enumerate() {
        if bits & (1 << k) != 0 {
            *s = p.sigma1 * p.sigma1;
        }
    }
    SigmaField { sigma_sq }
}

/// Nearest of the eight scan directions for a nonzero offset.
#[inline]
pub fn nearest_direction(dx: isize, dy: isize) -> usize {
    let a = (dy as f64).atan2(dx as f64);
    ((a / FRAC_PI_4).round() as i64).rem_euclid(DIRECTIONS as i64) as usize
}

struct Tap {
    dx: isize,
    dy: isize,
    smooth: f64,
    edge: f64,
}

/// Disk taps grouped by direction, with both candidate weights precomputed.
struct Kernel {
    by_dir: Vec<Vec<Tap>>,
}

impl Kernel {
    fn new(p: &RbafParams) -> Self {
        let r = p.radius() as isize;
        let (s0, s1) = (p.sigma0 * p.sigma0, p.sigma1 * p.sigma1);
        let mut by_dir: Vec<Vec<Tap>> = (0..DIRECTIONS).map(|_| Vec::new()).collect();
        for dy in -r..=r {
            for dx in -r..=r {
                let r2 = (dx * dx + dy * dy) as f64;
                if r2 > (r * r) as f64 || (dx == 0 && dy == 0) {
                    continue;
                }
                by_dir[nearest_direction(dx, dy)].push(Tap {
                    dx,
                    dy,
                    smooth: (-r2 / s0).exp(),
                    edge: (-r2 / s1).exp(),
                });
            }
        }
        Self { by_dir }
    }
}

/// Edge-aware surround mask: a normalized disk average whose Gaussian width
/// switches per direction according to [`scan_directions`]. Taps outside the
/// image are dropped and the remaining weights renormalized.
pub fn adaptive_mask(l: &Channel, p: &RbafParams) -> Result<Channel> {
    p.validate()?;
    let kernel = Kernel::new(p);
    let rays = ray_offsets(p.radius());
    let (w, h) = (l.width(), l.height());
    let r = p.radius();
    let data = l.data();
    let mut out = vec![0f32; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, slot) in row.iter_mut().enumerate() {
            let bits = edge_bits(l, p, &rays, x, y);
            let interior = x >= r && y >= r && x + r < w && y + r < h;
            // Center tap, weight 1.
            let mut num = f64::from(data[y * w + x]);
            let mut den = 1.0f64;
            for (k, taps) in kernel.by_dir.iter().enumerate() {
                let edge = bits & (1 << k) != 0;
                if interior {
                    for t in taps {
                        let wt = if edge { t.edge } else { t.smooth };
                        let idx = (y as isize + t.dy) as usize * w + (x as isize + t.dx) as usize;
                        num += wt * f64::from(data[idx]);
                        den += wt;
                    }
                } else {
                    for t in taps {
                        let (px, py) = (x as isize + t.dx, y as isize + t.dy);
                        if px < 0 || py < 0 || px >= w as isize || py >= h as isize {
                            continue;
                        }
                        let wt = if edge { t.edge } else { t.smooth };
                        num += wt * f64::from(data[py as usize * w + px as usize]);
                        den += wt;
                    }
                }
            }
            *slot = (num / den) as f32;
        }
    });
    Channel::new(w, h, out)
}

/// Darkness weight `1 − sigmoid(gain·(v − 0.5))`: near 1 in shadows, near 0 in highlights.
#[inline]
pub fn beta(v: f64, gain: f64) -> f64 {
    1.0 - 1.0 / (1.0 + (-gain * (v - 0.5)).exp())
}

pub fn beta_map(lp: &Channel, p: &RbafParams) -> Channel {
    lp.map(|v| beta(f64::from(v), p.sigmoid_gain) as f32)
}

/// `log(lp) − β·log(mask)` with both arguments floored.
pub fn reflectance(
    lp: &Channel,
    mask: &Channel,
    beta: &Channel,
    p: &RbafParams,
) -> Result<Channel> {
    if !lp.same_dims(mask) || !lp.same_dims(beta) {
        return Err(Error::arg("reflectance planes differ in size"));
    }
    let floor = p.log_floor;
    let data = lp
        .data()
        .iter()
        .zip(mask.data())
        .zip(beta.data())
        .map(|((&v, &m), &b)| {
            let lv = f64::from(v).max(floor).ln();
            let lm = f64::from(m).max(floor).ln();
            (lv - f64::from(b) * lm) as f32
        })
        .collect();
    Channel::new(lp.width(), lp.height(), data)
}

/// Min-max stretch to `[0, 1]`. A flat input maps to 0.5 and sets the flag.
pub fn normalize_stretch(r: &Channel) -> (Channel, bool) {
    let (lo, hi) = r.min_max();
    let (lo, hi) = (f64::from(lo), f64::from(hi));
    if !(hi - lo >= 1e-9) {
        return (r.map(|_| 0.5), true);
    }
    let span = hi - lo;
    (
        r.map(|v| ((f64::from(v) - lo) / span).clamp(0.0, 1.0) as f32),
        false,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn step(w: usize, h: usize, at: usize, lo: f32, hi: f32) -> Channel {
        Channel::from_fn(w, h, |x, _| if x < at { lo } else { hi })
    }

    /// Walks a ray exactly as described: rounded positions, stop at the border.
    fn brute_walk(l: &Channel, p: &RbafParams, x: usize, y: usize, k: usize) -> bool {
        let theta = k as f64 * std::f64::consts::PI / 4.0;
        let mut prev = l.get(x, y);
        for r in 1..=p.radius() {
            let px = (x as f64 + r as f64 * theta.cos()).round();
            let py = (y as f64 + r as f64 * theta.sin()).round();
            if px < 0.0 || py < 0.0 || px >= l.width() as f64 || py >= l.height() as f64 {
                return false;
            }
            let cur = l.get(px as usize, py as usize);
            if f64::from((cur - prev).abs()) > p.edge_threshold {
                return true;
            }
            prev = cur;
        }
        false
    }

    #[test]
    fn constant_image_has_no_edges() {
        let p = RbafParams::default();
        let c = Channel::filled(20, 20, 0.4);
        let f = scan_directions(&c, &p, 10, 10);
        assert!(f.sigma_sq.iter().all(|&s| s == 256.0));
    }

    #[test]
    fn step_edge_matches_walk_oracle() {
        let p = RbafParams::default();
        let img = step(32, 32, 16, 0.2, 0.7);
        let f = scan_directions(&img, &p, 14, 16);
        for k in 0..DIRECTIONS {
            assert_eq!(
                f.crosses_edge(k, &p),
                brute_walk(&img, &p, 14, 16, k),
                "dir {k}"
            );
        }
        // East-pointing rays cross; west-pointing do not.
        for k in [7, 0, 1] {
            assert!(f.crosses_edge(k, &p));
        }
        for k in [3, 4, 5] {
            assert!(!f.crosses_edge(k, &p));
        }
        for y in 0..32 {
            for x in 0..32 {
                let f = scan_directions(&img, &p, x, y);
                for k in 0..DIRECTIONS {
                    assert_eq!(f.crosses_edge(k, &p), brute_walk(&img, &p, x, y, k));
                }
            }
        }
    }

    #[test]
    fn infinite_threshold_never_crosses() {
        let p = RbafParams {
            edge_threshold: f64::INFINITY,
            ..RbafParams::default()
        };
        let f = scan_directions(&step(32, 32, 16, 0.0, 1.0), &p, 14, 16);
        assert!(f.sigma_sq.iter().all(|&s| s == 256.0));
    }

    #[test]
    fn direction_assignment() {
        assert_eq!(nearest_direction(5, 0), 0);
        assert_eq!(nearest_direction(3, 3), 1);
        assert_eq!(nearest_direction(0, 4), 2);
        assert_eq!(nearest_direction(-1, 0), 4);
        assert_eq!(nearest_direction(2, -2), 7);
        assert_eq!(nearest_direction(5, -1), 0);
    }

    #[test]
    fn constant_mask_is_identity() {
        let p = RbafParams {
            sigma0: 4.0,
            sigma1: 2.0,
            ..RbafParams::default()
        };
        let c = Channel::filled(17, 11, 0.37);
        let m = adaptive_mask(&c, &p).unwrap();
        assert!(m.data().iter().all(|&v| (v - 0.37).abs() < 1e-6));
    }

    #[test]
    fn adaptive_mask_narrows_edge_band() {
        let img = step(64, 8, 32, 0.1, 0.9);
        let adaptive = RbafParams {
            sigma0: 8.0,
            sigma1: 2.0,
            ..RbafParams::default()
        };
        let fixed = RbafParams {
            edge_threshold: f64::INFINITY,
            ..adaptive
        };
        let ma = adaptive_mask(&img, &adaptive).unwrap();
        let mf = adaptive_mask(&img, &fixed).unwrap();
        // Width of the band where the mask departs from the true level by > 0.05.
        let band = |m: &Channel| {
            (0..64)
                .filter(|&x| (m.get(x, 4) - img.get(x, 4)).abs() > 0.05)
                .count()
        };
        assert!(band(&ma) < band(&mf), "{} vs {}", band(&ma), band(&mf));
    }

    #[test]
    fn beta_values() {
        assert_eq!(beta(0.5, 10.0), 0.5);
        assert!((beta(1.0, 10.0) - 0.006_692_850_9).abs() < 1e-9);
        assert!((beta(0.0, 10.0) - 0.993_307_149_1).abs() < 1e-9);
    }

    #[test]
    fn reflectance_special_cases() {
        let p = RbafParams::default();
        let lp = Channel::from_fn(5, 3, |x, y| 0.1 + 0.05 * (x + y) as f32);
        let mask = Channel::from_fn(5, 3, |x, _| 0.2 + 0.1 * x as f32);
        let ones = Channel::filled(5, 3, 1.0);
        let zeros = Channel::filled(5, 3, 0.0);
        let r1 = reflectance(&lp, &mask, &ones, &p).unwrap();
        for i in 0..lp.len() {
            let want = (f64::from(lp.data()[i]).ln() - f64::from(mask.data()[i]).ln()) as f32;
            assert_eq!(r1.data()[i], want);
        }
        let r0 = reflectance(&lp, &mask, &zeros, &p).unwrap();
        for i in 0..lp.len() {
            assert_eq!(r0.data()[i], f64::from(lp.data()[i]).ln() as f32);
        }
        for c in [0.05f32, 0.3, 0.8] {
            let img = Channel::filled(3, 3, c);
            let b = beta_map(&img, &p);
            let r = reflectance(&img, &img, &b, &p).unwrap();
            let want = (1.0 - beta(f64::from(c), 10.0)) * f64::from(c).ln();
            assert!(r.data().iter().all(|&v| (f64::from(v) - want).abs() < 1e-6));
        }
    }

    #[test]
    fn stretch_examples() {
        let r = Channel::new(3, 1, vec![-2.0, -1.0, 0.0]).unwrap();
        let (n, flag) = normalize_stretch(&r);
        assert_eq!(n.data(), &[0.0, 0.5, 1.0]);
        assert!(!flag);
        let (n, flag) = normalize_stretch(&Channel::filled(2, 2, 3.0));
        assert!(flag);
        assert!(n.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn params_validation() {
        let p = RbafParams {
            sigma1: 9.0,
            ..RbafParams::default()
        };
        assert!(p.validate().is_err());
        assert_eq!(RbafParams::default().radius(), 48);
    }

    proptest! {
        #[test]
        fn beta_strictly_decreasing(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            prop_assume!((a - b).abs() > 1e-6);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(beta(lo, 10.0) > beta(hi, 10.0));
        }

        #[test]
        fn stretch_affine_invariant(
            vals in proptest::collection::vec(-5.0f32..5.0, 4..40),
            scale in 0.1f32..10.0,
            shift in -3.0f32..3.0,
        ) {
            let n = vals.len();
            let r = Channel::new(n, 1, vals).unwrap();
            let moved = r.map(|v| scale * v + shift);
            let (a, fa) = normalize_stretch(&r);
            let (b, fb) = normalize_stretch(&moved);
            prop_assert_eq!(fa, fb);
            for (x, y) in a.data().iter().zip(b.data()) {
                prop_assert!((x - y).abs() < 1e-4);
            }
        }
    }
}
