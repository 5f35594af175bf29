//! Global power-law brightening driven by the image's geometric-mean luminance.

use crate::error::{Error, Result};
use crate::imagebuf::Channel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneParams {
    /// Slope of the exponent in the mean luminance.
    pub slope_coeff: f64,
    /// Exponent offset; the exponent never drops below this.
    pub offset: f64,
    pub log_floor: f64,
}

impl Default for ToneParams {
    fn default() -> Self {
        Self {
            slope_coeff: 1.0 / 6.0,
            offset: 2.0 / 3.0,
            log_floor: 1.0 / 512.0,
        }
    }
}

impl ToneParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.offset > 0.0 && self.offset <= 1.0) {
            return Err(Error::arg(format!(
                "tone offset {} not in (0, 1]",
                self.offset
            )));
        }
        if !(self.slope_coeff >= 0.0) {
            return Err(Error::arg(format!(
                "tone slope {} must be >= 0",
                self.slope_coeff
            )));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::arg("tone log floor must be positive"));
        }
        Ok(())
    }

    /// The applied exponent `min(1, slope·mean + offset)`.
    pub fn exponent(&self, mean_luminance: f64) -> f64 {
        (self.slope_coeff * mean_luminance + self.offset).min(1.0)
    }
}

/// Geometric mean of the floored samples, accumulated in `f64`.
pub fn log_average_luminance(l: &Channel, p: &ToneParams) -> Result<f64> {
    if l.is_empty() {
        return Err(Error::arg("log-average of an empty channel"));
    }
    let sum: f64 = l
        .data()
        .iter()
        .map(|&v| f64::from(v).max(p.log_floor).ln())
        .sum();
    Ok((sum / l.len() as f64).exp())
}

/// Raises every sample to the shared exponent. Returns the plane and the exponent used.
pub fn tone_map_with_exponent(l: &Channel, p: &ToneParams) -> Result<(Channel, f64)> {
    p.validate()?;
    let exponent = p.exponent(log_average_luminance(l, p)?);
    let out = l.map(|v| (f64::from(v.clamp(0.0, 1.0)).powf(exponent)) as f32);
    Ok((out, exponent))
}

pub fn tone_map(l: &Channel, p: &ToneParams) -> Result<Channel> {
    tone_map_with_exponent(l, p).map(|(c, _)| c)
}
