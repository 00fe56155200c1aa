//! Command-line entry point: diagnose, rank, calibrate, plot, and synth
//! subcommands over the standard prediction file format.
//!
//! Exit codes: 0 success, 2 usage or input validation error, 1 internal
//! error. Output files are written to a temporary file and renamed, so a
//! failing run leaves no partial output.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use vbcal::binning::{BinningKind, BinningScheme};
use vbcal::calibrate::{self, CalibratorModel, DEFAULT_DIRICHLET_LAMBDA};
use vbcal::error::Error;
use vbcal::loess::LoessConfig;
use vbcal::plot::{emit_plot, PlotFormat};
use vbcal::synth::{self, SynthMetadata};
use vbcal::tree::TreeSpec;
use vbcal::{
    calibration_curves, ece_hat, gen_consistent_overconfident, gen_theorem1, gen_theorem2,
    load_predictions, rank_variables, vece_hat, write_predictions, Dataset, OverconfidentConfig,
    TheoremConfig,
};

/// Default RNG seed used when --seed is omitted.
const DEFAULT_SEED: u64 = 17;

#[derive(Parser)]
#[command(
    name = "vbcal",
    about = "Score-based (ECE) and variable-based (VECE) calibration diagnostics and post-hoc calibration"
)]
struct Cli {
    /// Optional TOML config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    EqualSupport,
    EqualWidth,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Svg,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Platt,
    Beta,
    Dirichlet,
    ScalingBinning,
    TreeVb,
    AugLogistic,
    AugBeta,
}

#[derive(Args, Clone)]
struct MetricFlags {
    /// Binning scheme for ECE/VECE.
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Number of bins B.
    #[arg(long)]
    bins: Option<usize>,
    /// LOESS smoothing span in (0, 1].
    #[arg(long)]
    span: Option<f64>,
    /// Number of LOESS grid points.
    #[arg(long)]
    grid_size: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Report ECE plus per-variable VECE and worst-case VCE, ranked by VECE.
    Diagnose {
        input: PathBuf,
        #[command(flatten)]
        metrics: MetricFlags,
        /// Write the tabular report to a file (also printed to stdout).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Rank variables by VECE (same report as diagnose, stdout only).
    Rank {
        input: PathBuf,
        #[command(flatten)]
        metrics: MetricFlags,
    },
    /// Fit a calibration method on one file and apply it to another.
    Calibrate {
        input_cal: PathBuf,
        input_target: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Variable of interest (required for tree-vb / aug-logistic / aug-beta).
        #[arg(long)]
        variable: Option<String>,
        /// Calibrated prediction file.
        #[arg(long, default_value = "calibrated.csv")]
        output: PathBuf,
        /// Serialized model file (default: <output>.model.json).
        #[arg(long)]
        model_out: Option<PathBuf>,
        /// Dirichlet regularization strength.
        #[arg(long)]
        lambda: Option<f64>,
        /// Include a quadratic variable term (aug-beta only).
        #[arg(long)]
        quadratic: bool,
        #[command(flatten)]
        metrics: MetricFlags,
    },
    /// Emit a variable-based calibration plot (SVG or table).
    Plot {
        input: PathBuf,
        #[arg(long)]
        variable: String,
        #[arg(long, value_enum, default_value = "svg")]
        format: FormatArg,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        metrics: MetricFlags,
    },
    /// Generate a synthetic dataset with known analytic ECE/VECE targets.
    Synth {
        /// 1 and 2 are the uniform-score constructions; 3 is the
        /// consistently-overconfident construction.
        #[arg(long)]
        theorem: u8,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.5)]
        v_t: f64,
        /// Overconfidence gap (theorem 3).
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 0.6)]
        score_lo: f64,
        #[arg(long, default_value_t = 0.9)]
        score_hi: f64,
        #[arg(long)]
        output: PathBuf,
    },
}

/// Optional config file; every field may be overridden by a flag.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    scheme: Option<String>,
    bins: Option<usize>,
    span: Option<f64>,
    grid_size: Option<usize>,
    lambda: Option<f64>,
    seed: Option<u64>,
    max_depth: Option<usize>,
    min_leaf_fraction: Option<f64>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self, Error> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                toml::from_str(&text)
                    .map_err(|e| Error::Parameter(format!("bad config file: {e}")))
            }
        }
    }

    fn scheme_kind(&self) -> Result<Option<BinningKind>, Error> {
        match self.scheme.as_deref() {
            None => Ok(None),
            Some("equal_support") => Ok(Some(BinningKind::EqualSupport)),
            Some("equal_width") => Ok(Some(BinningKind::EqualWidth)),
            Some(other) => Err(Error::Parameter(format!("unknown scheme `{other}`"))),
        }
    }
}

struct Resolved {
    scheme: BinningScheme,
    loess: LoessConfig,
    lambda: f64,
    tree: TreeSpec,
}

fn resolve(metrics: &MetricFlags, cfg: &FileConfig) -> Result<Resolved, Error> {
    let kind = match metrics.scheme {
        Some(SchemeArg::EqualSupport) => BinningKind::EqualSupport,
        Some(SchemeArg::EqualWidth) => BinningKind::EqualWidth,
        None => cfg.scheme_kind()?.unwrap_or(BinningKind::EqualSupport),
    };
    let num_bins = metrics.bins.or(cfg.bins).unwrap_or(10);
    let span = metrics.span.or(cfg.span).unwrap_or(0.85);
    let grid_size = metrics.grid_size.or(cfg.grid_size).unwrap_or(256);
    Ok(Resolved {
        scheme: BinningScheme { kind, num_bins },
        loess: LoessConfig {
            span,
            degree: 2,
            grid_size,
        },
        lambda: cfg.lambda.unwrap_or(DEFAULT_DIRICHLET_LAMBDA),
        tree: TreeSpec {
            max_depth: cfg.max_depth.unwrap_or(2),
            min_leaf_fraction: cfg.min_leaf_fraction.unwrap_or(0.1),
        },
    })
}

fn atomic_write(path: &Path, content: &str) -> Result<(), Error> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    std::fs::write(tmp.path(), content)?;
    tmp.persist(path)
        .map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn atomic_write_predictions(dataset: &Dataset, path: &Path) -> Result<(), Error> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    write_predictions(dataset, tmp.path())?;
    tmp.persist(path)
        .map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Diagnose {
            input,
            metrics,
            output,
            json,
        } => {
            let r = resolve(&metrics, &cfg)?;
            let dataset = load_predictions(&input)?;
            let report = rank_variables(&dataset, &r.scheme, &r.loess)?;
            let table = report.to_table();
            print!("{table}");
            if let Some(path) = output {
                atomic_write(&path, &table)?;
            }
            if let Some(path) = json {
                atomic_write(&path, &serde_json::to_string_pretty(&report)?)?;
            }
        }
        Command::Rank { input, metrics } => {
            let r = resolve(&metrics, &cfg)?;
            let dataset = load_predictions(&input)?;
            let report = rank_variables(&dataset, &r.scheme, &r.loess)?;
            print!("{}", report.to_table());
        }
        Command::Calibrate {
            input_cal,
            input_target,
            method,
            variable,
            output,
            model_out,
            lambda,
            quadratic,
            metrics,
        } => {
            let r = resolve(&metrics, &cfg)?;
            let lambda = lambda.unwrap_or(r.lambda);
            let cal = load_predictions(&input_cal)?;
            let target = load_predictions(&input_target)?;

            let needs_variable = matches!(
                method,
                MethodArg::TreeVb | MethodArg::AugLogistic | MethodArg::AugBeta
            );
            if needs_variable && variable.is_none() {
                return Err(Error::Parameter(
                    "this method requires --variable <name>".into(),
                ));
            }
            let var = variable.as_deref();
            let model: CalibratorModel = match method {
                MethodArg::Platt => calibrate::fit_platt(&cal)?,
                MethodArg::Beta => calibrate::fit_beta(&cal)?,
                MethodArg::Dirichlet => calibrate::fit_dirichlet(&cal, lambda)?,
                MethodArg::ScalingBinning => {
                    calibrate::fit_scaling_binning(&cal, r.scheme.num_bins)?
                }
                MethodArg::TreeVb => calibrate::fit_tree_vb(&cal, var.unwrap(), &r.tree)?,
                MethodArg::AugLogistic => calibrate::fit_aug_logistic(&cal, var.unwrap())?,
                MethodArg::AugBeta => {
                    calibrate::fit_aug_beta(&cal, var.unwrap(), quadratic)?
                }
            };
            let calibrated = calibrate::apply(&model, &target)?;

            println!(
                "ECE      before: {:.6}  after: {:.6}",
                ece_hat(&target, &r.scheme)?,
                ece_hat(&calibrated, &r.scheme)?
            );
            let report_vars: Vec<String> = match var {
                Some(v) => vec![v.to_string()],
                None => target.variable_names().to_vec(),
            };
            for name in &report_vars {
                println!(
                    "VECE({}) before: {:.6}  after: {:.6}",
                    name,
                    vece_hat(&target, name, &r.scheme)?,
                    vece_hat(&calibrated, name, &r.scheme)?
                );
            }

            atomic_write_predictions(&calibrated, &output)?;
            let model_path = model_out.unwrap_or_else(|| {
                let mut p = output.clone().into_os_string();
                p.push(".model.json");
                PathBuf::from(p)
            });
            let dir = model_path.parent().filter(|p| !p.as_os_str().is_empty());
            let tmp = match dir {
                Some(d) => tempfile::NamedTempFile::new_in(d)?,
                None => tempfile::NamedTempFile::new_in(".")?,
            };
            calibrate::save_model(&model, tmp.path())?;
            tmp.persist(&model_path).map_err(|e| Error::Io(e.error))?;
        }
        Command::Plot {
            input,
            variable,
            format,
            output,
            metrics,
        } => {
            let r = resolve(&metrics, &cfg)?;
            let dataset = load_predictions(&input)?;
            let (err_curve, pred_curve) = calibration_curves(&dataset, &variable, &r.loess)?;
            let fmt = match format {
                FormatArg::Svg => PlotFormat::Svg,
                FormatArg::Table => PlotFormat::Table,
            };
            let artifact = emit_plot(&err_curve, &pred_curve, fmt)?;
            atomic_write(&output, &artifact)?;
        }
        Command::Synth {
            theorem,
            k,
            alpha,
            n,
            seed,
            v_t,
            delta,
            score_lo,
            score_hi,
            output,
        } => {
            let seed = seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
            let (dataset, meta) = match theorem {
                1 | 2 => {
                    let tcfg = TheoremConfig {
                        k,
                        alpha,
                        n,
                        v_t,
                        seed,
                    };
                    let dataset = if theorem == 1 {
                        gen_theorem1(&tcfg)?
                    } else {
                        gen_theorem2(&tcfg)?
                    };
                    let (ece, vece) = synth::analytic_targets(theorem, k, alpha)?;
                    let meta = SynthMetadata {
                        generator: format!("theorem{theorem}"),
                        k,
                        n,
                        seed,
                        rng: synth::RNG_NAME.to_string(),
                        alpha: Some(alpha),
                        v_t: Some(v_t),
                        delta: None,
                        score_lo: None,
                        score_hi: None,
                        analytic_ece: ece,
                        analytic_vece: vece,
                    };
                    (dataset, meta)
                }
                3 => {
                    let ocfg = OverconfidentConfig {
                        score_lo,
                        score_hi,
                        delta,
                        n,
                        seed,
                    };
                    let dataset = gen_consistent_overconfident(&ocfg)?;
                    let meta = SynthMetadata {
                        generator: "consistent_overconfident".into(),
                        k: 2,
                        n,
                        seed,
                        rng: synth::RNG_NAME.to_string(),
                        alpha: None,
                        v_t: None,
                        delta: Some(delta),
                        score_lo: Some(score_lo),
                        score_hi: Some(score_hi),
                        analytic_ece: delta,
                        analytic_vece: delta,
                    };
                    (dataset, meta)
                }
                other => {
                    return Err(Error::Parameter(format!(
                        "--theorem must be 1, 2, or 3, got {other}"
                    )))
                }
            };
            atomic_write_predictions(&dataset, &output)?;
            let mut sidecar = output.clone().into_os_string();
            sidecar.push(".meta.json");
            atomic_write(
                Path::new(&sidecar),
                &serde_json::to_string_pretty(&meta)?,
            )?;
        }
    }
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Schema(_)
        | Error::Validation { .. }
        | Error::Parameter(_)
        | Error::UnknownVariable(_)
        | Error::NotApplicable(_)
        | Error::Csv(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
