//! Flat `key=value` configuration files.
//!
//! ```text
//! # comments and blank lines are ignored
//! tone.gamma_slope = 0.1667
//! rbaf.sigma0 = 10
//! pipeline.order = denoise-first
//! ```

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pipeline::{EnhanceConfig, Order};

/// A parsed `key=value` line with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits config text into entries. Does not interpret keys.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            msg: format!("expected key=value, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(Error::Config {
                line,
                msg: "empty key".into(),
            });
        }
        out.push(Entry {
            line,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(out)
}

fn num<T: FromStr>(e: &Entry) -> Result<T> {
    e.value.parse().map_err(|_| Error::Config {
        line: e.line,
        msg: format!("`{}` is not a valid number for {}", e.value, e.key),
    })
}

fn flag(e: &Entry) -> Result<bool> {
    match e.value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config {
            line: e.line,
            msg: format!("`{}` is not a boolean", e.value),
        }),
    }
}

/// Applies one entry to `cfg`. Unknown keys are errors.
pub fn apply_entry(cfg: &mut EnhanceConfig, e: &Entry) -> Result<()> {
    match e.key.as_str() {
        "tone.gamma_slope" | "tone.slope_coeff" => cfg.tone.slope_coeff = num(e)?,
        "tone.epsilon" | "tone.offset" => cfg.tone.offset = num(e)?,
        "tone.log_floor" => cfg.tone.log_floor = num(e)?,
        "rbaf.sigma0" => cfg.rbaf.sigma0 = num(e)?,
        "rbaf.sigma1" => cfg.rbaf.sigma1 = num(e)?,
        "rbaf.edge_threshold" => cfg.rbaf.edge_threshold = num(e)?,
        "rbaf.r_max" => cfg.rbaf.r_max = Some(num(e)?),
        "rbaf.sigmoid_gain" => cfg.rbaf.sigmoid_gain = num(e)?,
        "rbaf.log_floor" => cfg.rbaf.log_floor = num(e)?,
        "hist.lambda" => cfg.smooth.lambda = num(e)?,
        "hist.gamma" => cfg.smooth.gamma = num(e)?,
        "hist.enabled" => cfg.histogram_smoothing = flag(e)?,
        "color.alpha" => cfg.chroma_alpha = num(e)?,
        "bilateral.window" => cfg.bilateral.window = num(e)?,
        "bilateral.sigma_d" => cfg.bilateral.sigma_spatial = num(e)?,
        "bilateral.sigma_r" => cfg.bilateral.sigma_range = num(e)?,
        "pipeline.order" => {
            cfg.order = e
                .value
                .parse()
                .map_err(|msg| Error::Config { line: e.line, msg })?
        }
        other => {
            return Err(Error::Config {
                line: e.line,
                msg: format!("unknown key `{other}`"),
            })
        }
    }
    Ok(())
}

/// Parses config text on top of `base`, then validates the result.
pub fn parse_config(text: &str, base: EnhanceConfig) -> Result<EnhanceConfig> {
    let mut cfg = base;
    for e in parse_entries(text)? {
        apply_entry(&mut cfg, &e)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

impl FromStr for Order {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ce-first" => Ok(Order::CeThenDenoise),
            "denoise-first" => Ok(Order::DenoiseThenCe),
            _ => Err(format!(
                "order must be ce-first or denoise-first, got `{s}`"
            )),
        }
    }
}
