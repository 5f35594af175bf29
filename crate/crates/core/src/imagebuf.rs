//! Planar floating-point images and 8-bit file I/O (PNG, binary PPM/PGM).

use std::fs;
use std::io::{self, Cursor};
use std::path::Path;

use crate::error::{Error, Result};
use crate::pnm;

/// A single plane of `f32` samples in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Channel {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::arg(format!("empty channel {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::arg(format!(
                "channel data length {} != {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        assert!(width > 0 && height > 0, "empty channel");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        assert!(width > 0 && height > 0, "empty channel");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn same_dims(&self, other: &Channel) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Applies `f` to every sample.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Channel {
        Channel {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Minimum and maximum sample.
    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| f64::from(v)).sum::<f64>() / self.data.len() as f64
    }
}

/// A planar image with 1 or 3 channels. Samples are nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageF {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImageF {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::arg(format!("unsupported channel count {channels}")));
        }
        if width == 0 || height == 0 {
            return Err(Error::arg(format!("empty image {width}x{height}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::arg(format!(
                "image data length {} != {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
        .expect("valid dimensions")
    }

    /// Stacks planes of equal size into one image.
    pub fn from_channels(planes: &[Channel]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::arg("no channels supplied"))?;
        if planes.iter().any(|p| !p.same_dims(first)) {
            return Err(Error::arg("channel dimensions differ"));
        }
        let mut data = Vec::with_capacity(first.len() * planes.len());
        for p in planes {
            data.extend_from_slice(&p.data);
        }
        Self::new(first.width, first.height, planes.len(), data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, c: usize, x: usize, y: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn channel(&self, c: usize) -> Channel {
        Channel {
            width: self.width,
            height: self.height,
            data: self.plane(c).to_vec(),
        }
    }

    pub fn split(&self) -> Vec<Channel> {
        (0..self.channels).map(|c| self.channel(c)).collect()
    }

    pub fn same_dims(&self, other: &ImageF) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Gray images become three identical planes; RGB is returned as is.
    pub fn to_rgb(&self) -> ImageF {
        if self.channels == 3 {
            return self.clone();
        }
        let mut data = Vec::with_capacity(self.data.len() * 3);
        for _ in 0..3 {
            data.extend_from_slice(&self.data);
        }
        ImageF {
            width: self.width,
            height: self.height,
            channels: 3,
            data,
        }
    }

    /// Luminance plane: the gray plane itself, or the unweighted mean of R, G, B.
    pub fn luminance(&self) -> Channel {
        if self.channels == 1 {
            return self.channel(0);
        }
        let (r, g, b) = (self.plane(0), self.plane(1), self.plane(2));
        let data = r
            .iter()
            .zip(g)
            .zip(b)
            .map(|((&r, &g), &b)| (r + g + b) / 3.0)
            .collect();
        Channel {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> ImageF {
        ImageF {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }
}

/// Clamps every sample to `[0, 1]`. NaN becomes 0.
pub fn clamp01(img: &ImageF) -> ImageF {
    img.map(clamp_sample)
}

#[inline]
pub(crate) fn clamp_sample(v: f32) -> f32 {
    if v >= 1.0 {
        1.0
    } else if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Quantizes a sample to 8 bits: clamp, then round half away from zero.
#[inline]
pub fn to_u8(v: f32) -> u8 {
    (clamp_sample(v) * 255.0).round() as u8
}

/// Decodes PNG or binary PPM/PGM bytes, sniffing the format from the magic number.
pub fn decode_image(bytes: &[u8]) -> Result<ImageF> {
    if pnm::is_pnm(bytes) {
        let raster = pnm::decode(bytes)?;
        return Ok(from_interleaved(
            raster.width,
            raster.height,
            raster.channels,
            &raster.samples,
            f32::from(raster.maxval),
        ));
    }
    if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        return decode_png(bytes);
    }
    Err(Error::Format(
        "expected PNG or binary PPM/PGM data".to_string(),
    ))
}

fn png_error(e: png::DecodingError) -> Error {
    match e {
        png::DecodingError::IoError(io) => Error::Io(io),
        other => Error::Format(other.to_string()),
    }
}

fn decode_png(bytes: &[u8]) -> Result<ImageF> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(png_error)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format("PNG dimensions overflow".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(png_error)?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Format(format!(
            "only 8-bit PNG is supported, got {:?}",
            info.bit_depth
        )));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let buf = &buf[..info.buffer_size()];
    let scale = 255.0;
    let drop_alpha = |stride: usize, keep: usize| -> Vec<u8> {
        buf.chunks_exact(stride)
            .flat_map(|px| px[..keep].iter().copied())
            .collect()
    };
    match info.color_type {
        png::ColorType::Grayscale => Ok(from_interleaved(w, h, 1, buf, scale)),
        png::ColorType::GrayscaleAlpha => Ok(from_interleaved(w, h, 1, &drop_alpha(2, 1), scale)),
        png::ColorType::Rgb => Ok(from_interleaved(w, h, 3, buf, scale)),
        png::ColorType::Rgba => Ok(from_interleaved(w, h, 3, &drop_alpha(4, 3), scale)),
        png::ColorType::Indexed => Err(Error::Format("unexpanded palette PNG".into())),
    }
}

fn encode_png(img: &ImageF) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
        enc.set_color(if img.channels == 1 {
            png::ColorType::Grayscale
        } else {
            png::ColorType::Rgb
        });
        enc.set_depth(png::BitDepth::Eight);
        let encode_err = |e: png::EncodingError| match e {
            png::EncodingError::IoError(io) => Error::Io(io),
            other => Error::Io(io::Error::other(other)),
        };
        let mut writer = enc.write_header().map_err(encode_err)?;
        writer
            .write_image_data(&to_interleaved(img))
            .map_err(encode_err)?;
        writer.finish().map_err(encode_err)?;
    }
    Ok(out)
}

fn from_interleaved(w: usize, h: usize, channels: usize, samples: &[u8], maxval: f32) -> ImageF {
    let n = w * h;
    let mut data = vec![0.0f32; n * channels];
    for (i, px) in samples.chunks_exact(channels).enumerate() {
        for (c, &s) in px.iter().enumerate() {
            data[c * n + i] = f32::from(s) / maxval;
        }
    }
    ImageF {
        width: w,
        height: h,
        channels,
        data,
    }
}

fn to_interleaved(img: &ImageF) -> Vec<u8> {
    let n = img.width * img.height;
    let mut out = Vec::with_capacity(n * img.channels);
    for i in 0..n {
        for c in 0..img.channels {
            out.push(to_u8(img.data[c * n + i]));
        }
    }
    out
}

/// Output encodings selected from a file extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Png,
    Ppm,
    Pgm,
}

impl FileFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("png") => Ok(FileFormat::Png),
            Some("ppm") => Ok(FileFormat::Ppm),
            Some("pgm") => Ok(FileFormat::Pgm),
            _ => Err(Error::Format(format!(
                "cannot infer output format from {}; use .png, .ppm or .pgm",
                path.display()
            ))),
        }
    }
}

/// Encodes an image as 8-bit bytes. PPM promotes gray to RGB; PGM requires one channel.
pub fn encode_image(img: &ImageF, format: FileFormat) -> Result<Vec<u8>> {
    match format {
        FileFormat::Png => encode_png(img),
        FileFormat::Ppm => {
            let rgb = img.to_rgb();
            Ok(pnm::encode(rgb.width, rgb.height, 3, &to_interleaved(&rgb)))
        }
        FileFormat::Pgm => {
            if img.channels != 1 {
                return Err(Error::arg("PGM output requires a single-channel image"));
            }
            Ok(pnm::encode(img.width, img.height, 1, &to_interleaved(img)))
        }
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<ImageF> {
    let bytes = fs::read(path.as_ref())?;
    decode_image(&bytes)
}

/// Clamps, quantizes to 8 bits and writes PNG/PPM/PGM according to the extension.
pub fn save_image(img: &ImageF, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_image(img, FileFormat::from_path(path)?)?;
    fs::write(path, bytes)?;
    Ok(())
}
