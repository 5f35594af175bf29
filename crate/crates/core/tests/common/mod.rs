//! Deterministic synthetic fixtures shared by the integration tests.
#![allow(dead_code)]

use lowlight::{Channel, ImageF};

fn hash(x: usize, y: usize, salt: u64) -> f32 {
    let mut z = (x as u64) << 32 ^ y as u64 ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 40) as f32 / (1u64 << 24) as f32
}

/// A daylight-like 256×256 RGB scene: sky gradient, textured ground,
/// colored objects with hard edges, a striped "hat", a shaded region and fine
/// grain. Every sample lies in [0.03, 0.97].
pub fn scene(size: usize) -> ImageF {
    let s = size as f32;
    let mut planes = [
        Vec::with_capacity(size * size),
        Vec::with_capacity(size * size),
        Vec::with_capacity(size * size),
    ];
    for y in 0..size {
        for x in 0..size {
            let (u, v) = (x as f32 / s, y as f32 / s);
            let mut rgb = if v < 0.4 {
                // Sky.
                [0.45 + 0.3 * v, 0.6 + 0.2 * v, 0.85 - 0.1 * v]
            } else {
                // Ground with a soft texture.
                let t = 0.08 * ((u * 40.0).sin() * (v * 25.0).cos());
                [0.42 + t, 0.36 + t, 0.22 + 0.5 * t]
            };
            // Red disk.
            if (u - 0.28).powi(2) + (v - 0.62).powi(2) < 0.012 {
                rgb = [0.85, 0.18, 0.15];
            }
            // Green box with a dark window.
            if (0.55..0.85).contains(&u) && (0.5..0.8).contains(&v) {
                rgb = [0.2, 0.65, 0.3];
                if (0.62..0.72).contains(&u) && (0.58..0.7).contains(&v) {
                    rgb = [0.08, 0.1, 0.12];
                }
            }
            // Striped hat brim.
            if (0.15..0.45).contains(&u) && (0.25..0.33).contains(&v) {
                let stripe = ((x / 4) % 2) as f32;
                rgb = [0.9 - 0.5 * stripe, 0.8 - 0.5 * stripe, 0.3];
            }
            // Shaded region.
            if u > 0.05 && u < 0.5 && v > 0.82 {
                for c in rgb.iter_mut() {
                    *c *= 0.35;
                }
            }
            let grain = 0.04 * (hash(x, y, 7) - 0.5);
            for c in 0..3 {
                planes[c].push((rgb[c] + grain).clamp(0.03, 0.97));
            }
        }
    }
    let [r, g, b] = planes;
    ImageF::from_channels(&[
        Channel::new(size, size, r).unwrap(),
        Channel::new(size, size, g).unwrap(),
        Channel::new(size, size, b).unwrap(),
    ])
    .unwrap()
}

/// Bright disk of radius `radius` on a dark background, single plane.
pub fn disk(size: usize, radius: f32, bright: f32, dark: f32) -> Channel {
    let c = (size as f32 - 1.0) / 2.0;
    Channel::from_fn(size, size, |x, y| {
        let d = ((x as f32 - c).powi(2) + (y as f32 - c).powi(2)).sqrt();
        if d <= radius {
            bright
        } else {
            dark
        }
    })
}

/// Distance from pixel centre to the disk edge.
pub fn edge_distance(size: usize, radius: f32, x: usize, y: usize) -> f32 {
    let c = (size as f32 - 1.0) / 2.0;
    (((x as f32 - c).powi(2) + (y as f32 - c).powi(2)).sqrt() - radius).abs()
}

/// Uniform noise channel in [0, 1) from a fixed LCG.
pub fn noise(w: usize, h: usize, seed: u64) -> Channel {
    let mut s = seed;
    Channel::from_fn(w, h, |_, _| {
        s = s
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (s >> 40) as f32 / (1u64 << 24) as f32
    })
}

/// Smooth, edge-free plane.
pub fn smooth(w: usize, h: usize) -> Channel {
    Channel::from_fn(w, h, |x, y| {
        0.3 + 0.25 * (x as f32 / w as f32) + 0.15 * ((y as f32 / h as f32) * 3.0).sin()
    })
}
