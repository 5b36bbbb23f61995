use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use subdiffcq_core::cq_weights::{bdf_poly, frac_power_weights};
use subdiffcq_core::harness::{
    render, run_oracle_compare_detailed, run_study, CaseId, ErrorPairing, ExperimentCase, OutputFormat,
};
use subdiffcq_core::oracle::ContourParams;
use subdiffcq_core::{Error, Precision, Result};

#[derive(Parser)]
#[command(name = "subdiffcq", version, about = "Smoothing BDF convolution quadrature for subdiffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Temporal refinement study: errors between successive step counts.
    Study(StudyArgs),
    /// Errors of the march against the contour-integral reference solution.
    OracleCompare(OracleArgs),
    /// Convolution weights of the fractional BDF power as CSV.
    Weights(WeightArgs),
}

#[derive(Args)]
struct StudyArgs {
    /// JSON file with the same keys as the flags; flags win on conflict.
    #[arg(long)]
    config: Option<PathBuf>,
    /// a, b-conv, b-prod, scalar, oracle-compare or baseline
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Doubling list of step counts, e.g. 200,400,800.
    #[arg(long = "N", value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Spatial polynomial degree.
    #[arg(long = "M")]
    degree: Option<usize>,
    #[arg(long = "prec-bits")]
    prec_bits: Option<u32>,
    #[arg(long = "T")]
    final_time: Option<f64>,
    #[arg(long = "quad-n")]
    quad_n: Option<usize>,
    /// coarse: row N holds |u^{N/2} - u^N|; fine: row N holds |u^N - u^{2N}|.
    #[arg(long)]
    pairing: Option<String>,
    /// csv or markdown
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    study: StudyArgs,
    /// Ray angle of the contour in radians.
    #[arg(long)]
    theta: Option<f64>,
    /// Arc radius of the contour.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long = "n-ray")]
    n_ray: Option<usize>,
    #[arg(long = "n-arc")]
    n_arc: Option<usize>,
}

#[derive(Args)]
struct WeightArgs {
    /// BDF order.
    #[arg(long)]
    k: usize,
    /// Power of the generating polynomial.
    #[arg(long, allow_hyphen_values = true)]
    order: f64,
    /// Last weight index.
    #[arg(long)]
    n: usize,
    #[arg(long = "prec-bits")]
    prec_bits: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ConfigFile {
    case: Option<String>,
    alpha: Option<f64>,
    mu: Option<f64>,
    k: Option<usize>,
    m: Option<usize>,
    #[serde(rename = "N")]
    n: Option<Vec<usize>>,
    #[serde(rename = "M")]
    degree: Option<usize>,
    prec_bits: Option<u32>,
    #[serde(rename = "T")]
    final_time: Option<f64>,
    quad_n: Option<usize>,
    pairing: Option<String>,
    format: Option<String>,
    out: Option<PathBuf>,
}

fn missing(key: &str) -> Error {
    Error::Config(format!("missing --{key}"))
}

/// Merged flags and config file.
struct Resolved {
    case: ExperimentCase,
    format: OutputFormat,
    out: Option<PathBuf>,
}

fn resolve(args: StudyArgs, default_case: &str) -> Result<Resolved> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<ConfigFile>(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };
    let id = CaseId::parse(args.case.or(file.case).as_deref().unwrap_or(default_case))?;
    let alpha = args.alpha.or(file.alpha).ok_or_else(|| missing("alpha"))?;
    let k = args.k.or(file.k).ok_or_else(|| missing("k"))?;
    let m = args.m.or(file.m).ok_or_else(|| missing("m"))?;
    let n_list = args.n.or(file.n).unwrap_or_else(|| vec![200, 400, 800]);
    let mut case = ExperimentCase::new(id, alpha, args.mu.or(file.mu), k, m, n_list);
    if let Some(degree) = args.degree.or(file.degree) {
        case.degree = degree;
    }
    if let Some(bits) = args.prec_bits.or(file.prec_bits) {
        case.precision = Precision::new(bits)?;
    }
    if let Some(t) = args.final_time.or(file.final_time) {
        case.final_time = t;
    }
    if let Some(q) = args.quad_n.or(file.quad_n) {
        case.quad_n = q;
    }
    if let Some(pairing) = args.pairing.or(file.pairing) {
        case.pairing = ErrorPairing::parse(&pairing)?;
    }
    let format = OutputFormat::parse(args.format.or(file.format).as_deref().unwrap_or("csv"))?;
    Ok(Resolved { case, format, out: args.out.or(file.out) })
}

fn write_output(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Study(args) => {
            let r = resolve(args, "a")?;
            let rows = run_study(&r.case)?;
            write_output(&render(&rows, r.format)?, r.out.as_deref())
        }
        Command::OracleCompare(args) => {
            let r = resolve(args.study, "a")?;
            let defaults = ContourParams::default();
            let params = ContourParams {
                theta: args.theta.unwrap_or(defaults.theta),
                kappa: args.kappa,
                radius: None,
                n_ray: args.n_ray.unwrap_or(defaults.n_ray),
                n_arc: args.n_arc.unwrap_or(defaults.n_arc),
            };
            let study = run_oracle_compare_detailed(&r.case, &params, false)?;
            write_output(&render(&study.rows, r.format)?, r.out.as_deref())
        }
        Command::Weights(args) => {
            let prec = args.prec_bits.map(Precision::new).transpose()?.unwrap_or_default();
            let table = frac_power_weights(&bdf_poly(args.k, prec)?, &prec.from_f64(args.order), args.n)?;
            match &args.out {
                Some(path) => table.write_csv(std::fs::File::create(path)?),
                None => table.write_csv(std::io::stdout().lock()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
