//! Binary netpbm codec: P5 (gray) and P6 (RGB), 8-bit samples only.

use std::io;

use crate::error::{Error, Result};

/// A decoded netpbm raster with interleaved 8-bit samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnmRaster {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub maxval: u16,
    pub samples: Vec<u8>,
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return match self.bytes.get(self.pos) {
                None => Err(truncated(what)),
                Some(_) => Err(Error::Format(format!("expected {what} in netpbm header"))),
            };
        }
        // At most 9 digits, so the value always fits.
        let digits = &self.bytes[start..self.pos];
        if digits.len() > 9 {
            return Err(Error::Format(format!("{what} too large")));
        }
        Ok(digits
            .iter()
            .fold(0usize, |acc, d| acc * 10 + usize::from(d - b'0')))
    }
}

fn truncated(what: &str) -> Error {
    Error::Io(io::Error::new(
        io::ErrorKind::UnexpectedEof,
        format!("netpbm data truncated while reading {what}"),
    ))
}

/// True when `bytes` starts with a P5 or P6 magic number.
pub fn is_pnm(bytes: &[u8]) -> bool {
    matches!(bytes, [b'P', b'5' | b'6', ..])
}

/// Decodes a binary P5/P6 file with maxval ≤ 255.
pub fn decode(bytes: &[u8]) -> Result<PnmRaster> {
    let channels = match bytes {
        [b'P', b'5', ..] => 1,
        [b'P', b'6', ..] => 3,
        [b'P', ..] | [] | [_] => {
            return Err(Error::Format(
                "only binary PGM (P5) and PPM (P6) are supported".into(),
            ))
        }
        _ => return Err(Error::Format("missing netpbm magic number".into())),
    };
    let mut hdr = Header { bytes, pos: 2 };
    match hdr.bytes.get(hdr.pos) {
        Some(b) if b.is_ascii_whitespace() || *b == b'#' => {}
        None => return Err(truncated("header")),
        Some(_) => return Err(Error::Format("malformed netpbm magic number".into())),
    }
    let width = hdr.number("width")?;
    let height = hdr.number("height")?;
    let maxval = hdr.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format(format!(
            "zero image dimension {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!(
            "maxval {maxval} unsupported (8-bit only)"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match hdr.bytes.get(hdr.pos) {
        Some(b) if b.is_ascii_whitespace() => hdr.pos += 1,
        None => return Err(truncated("header")),
        Some(_) => return Err(Error::Format("malformed netpbm header".into())),
    }
    let len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::Format("image dimensions overflow".into()))?;
    let raster = &bytes[hdr.pos..];
    if raster.len() < len {
        return Err(truncated("raster"));
    }
    let samples = raster[..len].to_vec();
    if let Some(bad) = samples.iter().find(|&&s| usize::from(s) > maxval) {
        return Err(Error::Format(format!(
            "sample {bad} exceeds maxval {maxval}"
        )));
    }
    Ok(PnmRaster {
        width,
        height,
        channels,
        maxval: maxval as u16,
        samples,
    })
}

/// Encodes interleaved 8-bit samples as P5 (1 channel) or P6 (3 channels).
pub fn encode(width: usize, height: usize, channels: usize, samples: &[u8]) -> Vec<u8> {
    assert!(channels == 1 || channels == 3);
    assert_eq!(samples.len(), width * height * channels);
    let magic = if channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(samples);
    out
}
