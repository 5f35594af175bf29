//! The enhancement chain, the ordering experiment, and CSV metric reports.
//!
//! Luminance path: tone mapping, edge-aware Retinex, stretch, histogram
//! smoothing. Color path: PCA chroma carried through and scaled by
//! `chroma_alpha` at recombination. Bilateral denoising runs either after
//! contrast enhancement (default) or before it.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::colorspace::{fit_basis, from_lcc, to_lcc};
use crate::denoise::{denoise_rgb, BilateralParams};
use crate::error::{Error, Result};
use crate::histsmooth::{
    apply_map, build_histogram, cumulative_map, smooth_histogram, CumulativeMap, Histogram256,
    SmoothParams,
};
use crate::imagebuf::{save_image, Channel, ImageF};
use crate::metrics::{MetricReport, VcmParams};
use crate::rbaf::{adaptive_mask, beta_map, normalize_stretch, reflectance, RbafParams};
use crate::simulate::{add_poisson, DegradeSpec, NoiseSpec};
use crate::tonemap::{tone_map_with_exponent, ToneParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Order {
    /// Contrast enhancement, then bilateral denoising.
    #[default]
    CeThenDenoise,
    /// Bilateral denoising, then contrast enhancement.
    DenoiseThenCe,
}

impl Order {
    pub fn label(self) -> &'static str {
        match self {
            Order::CeThenDenoise => "ce-then-denoise",
            Order::DenoiseThenCe => "denoise-then-ce",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhanceConfig {
    pub tone: ToneParams,
    pub rbaf: RbafParams,
    pub smooth: SmoothParams,
    /// When false the stretched reflectance is used as the enhanced luminance.
    pub histogram_smoothing: bool,
    pub chroma_alpha: f64,
    pub bilateral: BilateralParams,
    pub order: Order,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        Self {
            tone: ToneParams::default(),
            rbaf: RbafParams::default(),
            smooth: SmoothParams::default(),
            histogram_smoothing: true,
            chroma_alpha: 1.6,
            bilateral: BilateralParams::default(),
            order: Order::CeThenDenoise,
        }
    }
}

impl EnhanceConfig {
    pub fn validate(&self) -> Result<()> {
        self.tone.validate()?;
        self.rbaf.validate()?;
        self.smooth.validate()?;
        self.bilateral.validate()?;
        if !(self.chroma_alpha >= 0.0 && self.chroma_alpha.is_finite()) {
            return Err(Error::arg(format!(
                "chroma alpha {} must be finite and >= 0",
                self.chroma_alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageTiming {
    pub stage: &'static str,
    pub millis: f64,
}

/// Intermediate planes of the luminance path, kept for inspection.
#[derive(Debug, Clone)]
pub struct StageOutputs {
    pub luminance: Channel,
    pub tone_exponent: f64,
    pub toned: Channel,
    pub mask: Channel,
    pub beta: Channel,
    pub reflectance: Channel,
    /// Reflectance stretched to `[0, 1]`.
    pub stretched: Channel,
    pub stretch_degenerate: bool,
    pub histogram: Histogram256,
    pub smoothed: Option<Histogram256>,
    pub map: Option<CumulativeMap>,
    pub enhanced_luminance: Channel,
}

#[derive(Debug, Clone)]
pub struct Enhanced {
    pub image: ImageF,
    pub stages: StageOutputs,
    pub timings: Vec<StageTiming>,
}

struct Clock {
    timings: Vec<StageTiming>,
}

impl Clock {
    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage))?;
        self.timings.push(StageTiming {
            stage,
            millis: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(out)
    }
}

/// Runs the full chain and keeps every intermediate plane.
pub fn enhance_detailed(img: &ImageF, cfg: &EnhanceConfig) -> Result<Enhanced> {
    cfg.validate()?;
    let mut clock = Clock {
        timings: Vec::new(),
    };
    let mut rgb = img.to_rgb();
    if cfg.order == Order::DenoiseThenCe {
        rgb = clock.run("denoise", || denoise_rgb(&rgb, &cfg.bilateral))?;
    }

    let basis = clock.run("fit_basis", || fit_basis(&rgb))?;
    let planes = clock.run("to_lcc", || to_lcc(&rgb, &basis))?;
    let luminance = planes.l.clone();
    let (toned, tone_exponent) =
        clock.run("tone_map", || tone_map_with_exponent(&luminance, &cfg.tone))?;
    let mask = clock.run("adaptive_mask", || adaptive_mask(&toned, &cfg.rbaf))?;
    let beta = beta_map(&toned, &cfg.rbaf);
    let refl = clock.run("reflectance", || {
        reflectance(&toned, &mask, &beta, &cfg.rbaf)
    })?;
    let (stretched, stretch_degenerate) = normalize_stretch(&refl);

    let histogram = build_histogram(&stretched);
    let (smoothed, map, enhanced_luminance) = if cfg.histogram_smoothing {
        let smoothed = clock.run("smooth_histogram", || {
            smooth_histogram(&histogram, &cfg.smooth)
        })?;
        let map = clock.run("cumulative_map", || cumulative_map(&smoothed))?;
        let out = apply_map(&stretched, &map);
        (Some(smoothed), Some(map), out)
    } else {
        (None, None, stretched.clone())
    };

    let mut recombine = planes.with_display_window();
    recombine.l = enhanced_luminance.clone();
    let mut image = clock.run("from_lcc", || from_lcc(&recombine, cfg.chroma_alpha))?;
    if cfg.order == Order::CeThenDenoise {
        image = clock.run("denoise", || denoise_rgb(&image, &cfg.bilateral))?;
    }

    Ok(Enhanced {
        image,
        stages: StageOutputs {
            luminance,
            tone_exponent,
            toned,
            mask,
            beta,
            reflectance: refl,
            stretched,
            stretch_degenerate,
            histogram,
            smoothed,
            map,
            enhanced_luminance,
        },
        timings: clock.timings,
    })
}

pub fn enhance(img: &ImageF, cfg: &EnhanceConfig) -> Result<ImageF> {
    enhance_detailed(img, cfg).map(|e| e.image)
}

/// Writes every intermediate plane as PNG plus the histograms as CSV.
pub fn dump_stages(stages: &StageOutputs, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let plane = |c: &Channel| ImageF::from_channels(std::slice::from_ref(c));
    save_image(&plane(&stages.luminance)?, dir.join("01_luminance.png"))?;
    save_image(&plane(&stages.toned)?, dir.join("02_toned.png"))?;
    save_image(&plane(&stages.mask)?, dir.join("03_mask.png"))?;
    save_image(&plane(&stages.beta)?, dir.join("04_beta.png"))?;
    save_image(&plane(&stages.stretched)?, dir.join("05_reflectance.png"))?;
    save_image(
        &plane(&stages.enhanced_luminance)?,
        dir.join("06_enhanced_luminance.png"),
    )?;

    let mut csv = String::from("bin,input,smoothed,map\n");
    for i in 0..crate::histsmooth::BINS {
        let smoothed = stages.smoothed.as_ref().map(|h| h.counts()[i]);
        let map = stages.map.as_ref().map(|m| m.knots()[i + 1]);
        let _ = writeln!(
            csv,
            "{i},{},{},{}",
            fmt_sig(stages.histogram.counts()[i]),
            smoothed.map(fmt_sig).unwrap_or_default(),
            map.map(fmt_sig).unwrap_or_default()
        );
    }
    fs::write(dir.join("histograms.csv"), csv)?;
    Ok(())
}

/// Outcome of one pipeline run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub label: String,
    pub order: Order,
    pub timings: Vec<StageTiming>,
    pub output_path: Option<PathBuf>,
    /// Metrics of the output, with SSIM against the clean reference.
    pub metrics: MetricReport,
}

#[derive(Debug, Clone)]
pub struct OrderExperiment {
    pub degraded: ImageF,
    pub degraded_metrics: MetricReport,
    pub runs: [(ImageF, RunReport); 2],
}

impl OrderExperiment {
    /// The two runs as CSV: one row per order.
    pub fn csv(&self) -> Result<String> {
        let rows: Vec<ReportRow> = self
            .runs
            .iter()
            .map(|(_, r)| ReportRow::Metrics {
                label: r.label.clone(),
                metrics: r.metrics.clone(),
            })
            .collect();
        write_csv(&rows)
    }
}

/// Degrades `clean`, adds Poisson noise, and enhances under both orders.
pub fn order_experiment(
    clean: &ImageF,
    spec: &DegradeSpec,
    noise: &NoiseSpec,
    cfg: &EnhanceConfig,
) -> Result<OrderExperiment> {
    let degraded = spec.apply(clean).map_err(|e| e.in_stage("degrade"))?;
    let degraded = add_poisson(&degraded, noise).map_err(|e| e.in_stage("poisson"))?;
    let vcm = VcmParams::default();
    let degraded_metrics = MetricReport::measure(&degraded, Some(clean), &vcm)?;
    let run = |order: Order| -> Result<(ImageF, RunReport)> {
        let cfg = EnhanceConfig { order, ..*cfg };
        let out = enhance_detailed(&degraded, &cfg)?;
        let metrics =
            MetricReport::measure(&out.image, Some(clean), &vcm)?.with_reference_id("clean");
        Ok((
            out.image,
            RunReport {
                label: order.label().to_string(),
                order,
                timings: out.timings,
                output_path: None,
                metrics,
            },
        ))
    };
    let runs = [run(Order::CeThenDenoise)?, run(Order::DenoiseThenCe)?];
    Ok(OrderExperiment {
        degraded,
        degraded_metrics,
        runs,
    })
}

pub const CSV_HEADER: [&str; 5] = ["label", "ssim", "luminance", "vcm", "edge_energy"];

/// One input to [`compare_report`].
#[derive(Debug, Clone)]
pub struct ReportEntry<'a> {
    pub label: String,
    pub image: &'a ImageF,
    pub reference: Option<&'a ImageF>,
}

#[derive(Debug, Clone)]
enum ReportRow {
    Metrics {
        label: String,
        metrics: MetricReport,
    },
    Failed {
        label: String,
        error: String,
    },
}

/// Formats a value with 6 significant digits.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let mag = v.abs().log10().floor() as i32;
    if (-5..=14).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

fn write_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for row in rows {
        match row {
            ReportRow::Metrics { label, metrics } => {
                let ssim = metrics.ssim.map(fmt_sig).unwrap_or_default();
                w.write_record([
                    label.as_str(),
                    &ssim,
                    &fmt_sig(metrics.mean_luminance),
                    &fmt_sig(metrics.vcm),
                    &fmt_sig(metrics.edge_energy),
                ])
                .map_err(csv_err)?;
            }
            ReportRow::Failed { label, error } => {
                w.write_record([label.as_str(), &format!("error: {error}"), "", "", ""])
                    .map_err(csv_err)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Scores each entry and renders one CSV row per entry.
///
/// A failing entry (e.g. reference of a different size) gets its error in the
/// `ssim` cell and empty metric cells; the remaining rows are still produced.
pub fn compare_report(entries: &[ReportEntry<'_>], vcm: &VcmParams) -> Result<String> {
    let rows: Vec<ReportRow> = entries
        .iter()
        .map(|e| {
            if let Some(r) = e.reference {
                if !r.same_dims(e.image) {
                    return ReportRow::Failed {
                        label: e.label.clone(),
                        error: format!(
                            "reference {}x{} vs image {}x{}",
                            r.width(),
                            r.height(),
                            e.image.width(),
                            e.image.height()
                        ),
                    };
                }
            }
            match MetricReport::measure(e.image, e.reference, vcm) {
                Ok(metrics) => ReportRow::Metrics {
                    label: e.label.clone(),
                    metrics,
                },
                Err(err) => ReportRow::Failed {
                    label: e.label.clone(),
                    error: err.to_string(),
                },
            }
        })
        .collect();
    write_csv(&rows)
}
