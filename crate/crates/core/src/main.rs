use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lowlight::config::{apply_entry, parse_entries};
use lowlight::denoise::{denoise_rgb, BilateralParams};
use lowlight::metrics::VcmParams;
use lowlight::pipeline::{
    compare_report, dump_stages, enhance_detailed, order_experiment, ReportEntry,
};
use lowlight::simulate::{add_poisson, DegradeKind, DegradeSpec, NoiseSpec};
use lowlight::{load_image, save_image, EnhanceConfig, Error, ImageF, Order};

/// Night image enhancement and degradation tools.
#[derive(Parser)]
#[command(name = "lowlight", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    CeFirst,
    DenoiseFirst,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Lll,
    Vlll,
    Hdr,
}

#[derive(Subcommand)]
enum Command {
    /// Enhance a night image.
    Enhance {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// key=value configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        order: Option<OrderArg>,
        /// Write every intermediate plane into this directory.
        #[arg(long)]
        dump_stages: Option<PathBuf>,
        /// Chroma gain at recombination.
        #[arg(long)]
        alpha: Option<f64>,
        /// Override a configuration key, e.g. `--set rbaf.sigma0=10`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Print per-stage timings to stderr.
        #[arg(short, long)]
        verbose: bool,
    },
    /// Simulate a low-light capture from a clean image.
    Degrade {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum)]
        preset: Preset,
        /// Dark-tail fraction (LLL/VLLL) or both tail fractions (HDR).
        #[arg(long)]
        t: Option<f64>,
        /// Brightness scale (LLL/VLLL only).
        #[arg(long)]
        alpha: Option<f64>,
        /// Add Poisson noise with this photon count at full scale.
        #[arg(long)]
        poisson_peak: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Bilateral-filter each channel.
    Denoise {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        sigma_d: Option<f64>,
        #[arg(long)]
        sigma_r: Option<f64>,
    },
    /// Score images: SSIM (with --ref), mean luminance, VCM, edge energy.
    Metrics {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        vcm_block: usize,
        #[arg(long, default_value_t = 0.02)]
        vcm_tau: f64,
    },
    /// Compare enhancement-then-denoise against denoise-then-enhancement.
    OrderExp {
        clean: PathBuf,
        #[arg(long, value_enum)]
        preset: Preset,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 100.0)]
        poisson_peak: f64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Io(_) | Error::Format(_) => 2,
        Error::Config { .. } => 1,
        Error::Argument(_) | Error::Degenerate(_) => 3,
        Error::Stage { .. } => unreachable!("root strips stages"),
    }
}

fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<EnhanceConfig, Failure> {
    let mut cfg = EnhanceConfig::default();
    let file_text = match path {
        Some(p) => fs::read_to_string(p).map_err(Error::from)?,
        None => String::new(),
    };
    for e in parse_entries(&file_text)?
        .into_iter()
        .chain(parse_entries(&overrides.join("\n"))?)
    {
        apply_entry(&mut cfg, &e)?;
    }
    Ok(cfg)
}

fn validated(cfg: EnhanceConfig) -> Result<EnhanceConfig, Failure> {
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn degrade_spec(
    preset: Preset,
    t: Option<f64>,
    alpha: Option<f64>,
) -> Result<DegradeSpec, Failure> {
    let mut spec = match preset {
        Preset::Lll => DegradeSpec::lll(),
        Preset::Vlll => DegradeSpec::vlll(),
        Preset::Hdr => DegradeSpec::hdr(),
    };
    if spec.kind == DegradeKind::Hdr {
        if alpha.is_some() {
            return Err(Failure::Usage(
                "--alpha does not apply to the hdr preset".into(),
            ));
        }
        if let Some(t) = t {
            spec.t_low = t;
            spec.t_high = t;
        }
    } else {
        spec.t = t.unwrap_or(spec.t);
        spec.alpha = alpha.unwrap_or(spec.alpha);
    }
    Ok(spec)
}

fn label_of(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Enhance {
            input,
            output,
            config,
            order,
            dump_stages: dump,
            alpha,
            overrides,
            verbose,
        } => {
            let mut cfg = load_config(config.as_deref(), &overrides)?;
            if let Some(o) = order {
                cfg.order = match o {
                    OrderArg::CeFirst => Order::CeThenDenoise,
                    OrderArg::DenoiseFirst => Order::DenoiseThenCe,
                };
            }
            if let Some(a) = alpha {
                cfg.chroma_alpha = a;
            }
            let cfg = validated(cfg)?;
            let img = load_image(&input)?;
            let out = enhance_detailed(&img, &cfg)?;
            if let Some(dir) = dump {
                dump_stages(&out.stages, &dir)?;
            }
            save_image(&out.image, &output)?;
            if verbose {
                for t in &out.timings {
                    eprintln!("{:>18} {:9.2} ms", t.stage, t.millis);
                }
            }
        }
        Command::Degrade {
            input,
            output,
            preset,
            t,
            alpha,
            poisson_peak,
            seed,
        } => {
            let spec = degrade_spec(preset, t, alpha)?;
            let img = load_image(&input)?;
            let mut out = spec.apply(&img)?;
            if let Some(peak) = poisson_peak {
                out = add_poisson(&out, &NoiseSpec { peak, seed })?;
            }
            save_image(&out, &output)?;
        }
        Command::Denoise {
            input,
            output,
            window,
            sigma_d,
            sigma_r,
        } => {
            let d = BilateralParams::default();
            let p = BilateralParams {
                window: window.unwrap_or(d.window),
                sigma_spatial: sigma_d.unwrap_or(d.sigma_spatial),
                sigma_range: sigma_r.unwrap_or(d.sigma_range),
            };
            p.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let img = load_image(&input)?;
            save_image(&denoise_rgb(&img, &p)?, &output)?;
        }
        Command::Metrics {
            images,
            reference,
            csv,
            vcm_block,
            vcm_tau,
        } => {
            let vcm = VcmParams {
                block: vcm_block,
                tau: vcm_tau,
            };
            let reference = reference.map(load_image).transpose()?;
            let loaded = images
                .iter()
                .map(|p| Ok((label_of(p), load_image(p)?)))
                .collect::<Result<Vec<(String, ImageF)>, Error>>()?;
            let entries: Vec<ReportEntry<'_>> = loaded
                .iter()
                .map(|(label, img)| ReportEntry {
                    label: label.clone(),
                    image: img,
                    reference: reference.as_ref(),
                })
                .collect();
            let text = compare_report(&entries, &vcm)?;
            match csv {
                Some(path) => fs::write(path, text).map_err(Error::from)?,
                None => print!("{text}"),
            }
        }
        Command::OrderExp {
            clean,
            preset,
            seed,
            csv,
            out_dir,
            poisson_peak,
            config,
        } => {
            let cfg = validated(load_config(config.as_deref(), &[])?)?;
            let spec = degrade_spec(preset, None, None)?;
            let img = load_image(&clean)?;
            let exp = order_experiment(
                &img,
                &spec,
                &NoiseSpec {
                    peak: poisson_peak,
                    seed,
                },
                &cfg,
            )?;
            fs::write(&csv, exp.csv()?).map_err(Error::from)?;
            if let Some(dir) = out_dir {
                fs::create_dir_all(&dir).map_err(Error::from)?;
                save_image(&exp.degraded, dir.join("degraded.png"))?;
                for (image, report) in &exp.runs {
                    save_image(image, dir.join(format!("{}.png", report.label)))?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
