//! Command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 soundness
//! violation, 3 numeric failure. Errors are reported as one JSON object on
//! stderr.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::certificates::{build_report, fmt_float, CertificateConfig};
use crate::decayfit::{gamma_estimate, DecayFit, Window};
use crate::error::{Error, Result};
use crate::galerkin::{approx_numbers, assemble, unboundedness_witness, ApproxNumbers, AssembleOptions, DEFAULT_MAX_BASIS};
use crate::spec::SpecDocument;
use crate::symbols::{SelfMap, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(name = "compop", version, about = "Approximation numbers of composition operators on H²(Ω)")]
pub struct Cli {
    /// Worker threads for assembly (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for every sampled check.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compressed approximation numbers a_n^(p) as CSV.
    Singvals(SingvalsArgs),
    /// Compressed values with lower and upper certificates as CSV.
    Bounds(BoundsArgs),
    /// Decay-rate fit of a singular-value sample as JSON.
    Decay(DecayArgs),
    /// Growth of ‖C_φ f‖/‖f‖ for the duplicate map as CSV.
    Witness(WitnessArgs),
}

#[derive(Debug, Args)]
pub struct OperatorArgs {
    /// Symbol specification (JSON).
    #[arg(long)]
    pub symbol: PathBuf,
    /// Truncation degree p.
    #[arg(long)]
    pub degree: u32,
    /// Upper limit on the basis size N_p.
    #[arg(long, default_value_t = DEFAULT_MAX_BASIS)]
    pub max_basis: u64,
}

#[derive(Debug, Args)]
pub struct SingvalsArgs {
    #[command(flatten)]
    pub op: OperatorArgs,
    /// Output directory; CSV goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write matrix.bin and matrix.json into the output directory.
    #[arg(long, requires = "out")]
    pub export_matrix: bool,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub op: OperatorArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of weyl,kernel,tail.
    #[arg(long, default_value = "weyl,kernel,tail")]
    pub certificates: String,
    /// Lens-grid spacing σ.
    #[arg(long, default_value_t = 1.0)]
    pub grid_sigma: f64,
    /// Largest per-axis lens-grid size.
    #[arg(long, default_value_t = 3)]
    pub grid_n: usize,
    /// Rigorous upper bound for a_1, making the Weyl column certified.
    #[arg(long)]
    pub a1_upper: Option<f64>,
    /// Value of ‖φ‖_∞ to use instead of the sampled estimate.
    #[arg(long)]
    pub sup_norm: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    /// CSV of singular values (column `a_n` or `compressed`, else the second column).
    #[arg(long, conflicts_with = "symbol")]
    pub input: Option<PathBuf>,
    #[arg(long, requires = "degree")]
    pub symbol: Option<PathBuf>,
    #[arg(long)]
    pub degree: Option<u32>,
    /// Dimension d for `--input` samples.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Fitting window `lo:hi` (1-based, inclusive).
    #[arg(long)]
    pub window: Option<Window>,
    #[arg(long, default_value_t = DEFAULT_MAX_BASIS)]
    pub max_basis: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    #[arg(long)]
    pub n_max: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let rep = ErrorReport { error: "usage", message: e.to_string().trim().to_string(), exit_code: 1 };
            let _ = writeln!(stderr, "{}", serde_json::to_string(&rep).expect("serializable"));
            return 1;
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let rep = ErrorReport { error: e.kind(), message: e.to_string(), exit_code: e.exit_code() };
            let _ = writeln!(stderr, "{}", serde_json::to_string(&rep).expect("serializable"));
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::InvalidArgument("--jobs must be >= 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut buf = Vec::new();
        let res = pool.install(|| dispatch(cli, &mut buf));
        stdout.write_all(&buf)?;
        return res;
    }
    dispatch(cli, stdout)
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Singvals(a) => cmd_singvals(a, cli.seed, stdout),
        Command::Bounds(a) => cmd_bounds(a, cli.seed, stdout),
        Command::Decay(a) => cmd_decay(a, cli.seed, stdout).map(|_| ()),
        Command::Witness(a) => cmd_witness(a, stdout),
    }
}

fn load_map(path: &Path, seed: u64) -> Result<SelfMap> {
    SpecDocument::load(path)?.build(seed)
}

/// Writes `bytes` to `dir/name` when `dir` is given, else to stdout.
fn emit(out: Option<&Path>, name: &str, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), bytes)?;
        }
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

fn log_interlacing(a: &ApproxNumbers) {
    if let Some(prev) = &a.previous {
        let gap = prev.iter().zip(&a.values).map(|(o, n)| (n - o).abs()).fold(0.0, f64::max);
        let converged = a.converged.iter().take_while(|c| **c).count();
        log::info!(
            "p = {}: max |a_n^(p) - a_n^(p-2)| = {gap:e}; leading {converged} values stable; {} interlacing violations",
            a.p,
            a.interlacing_violations.len()
        );
    }
}

pub fn singvals_csv(values: &[f64]) -> Result<Vec<u8>> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    wtr.write_record(["n", "a_n"])?;
    for (i, v) in values.iter().enumerate() {
        wtr.write_record([(i + 1).to_string(), fmt_float(*v)])?;
    }
    wtr.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn cmd_singvals(args: &SingvalsArgs, seed: u64, stdout: &mut dyn Write) -> Result<()> {
    let map = load_map(&args.op.symbol, seed)?;
    let m = assemble(&map, args.op.degree, AssembleOptions { max_basis: args.op.max_basis })?;
    if args.export_matrix {
        let dir = args.out.as_deref().expect("clap enforces --out");
        m.export(dir, "matrix")?;
    }
    let a = ApproxNumbers::from_compression(&m)?;
    log_interlacing(&a);
    emit(args.out.as_deref(), "singvals.csv", &singvals_csv(&a.values)?, stdout)
}

fn parse_certificates(list: &str) -> Result<(bool, bool, bool)> {
    let (mut w, mut k, mut t) = (false, false, false);
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item {
            "weyl" => w = true,
            "kernel" => k = true,
            "tail" => t = true,
            other => return Err(Error::InvalidArgument(format!("unknown certificate {other:?}"))),
        }
    }
    Ok((w, k, t))
}

pub fn cmd_bounds(args: &BoundsArgs, seed: u64, stdout: &mut dyn Write) -> Result<()> {
    let (weyl, kernel, tail) = parse_certificates(&args.certificates)?;
    let map = load_map(&args.op.symbol, seed)?;
    let approx = approx_numbers(&map, args.op.degree, AssembleOptions { max_basis: args.op.max_basis })?;
    log_interlacing(&approx);
    let cfg = CertificateConfig {
        weyl,
        kernel,
        tail,
        grid_sigma: args.grid_sigma,
        grid_n: args.grid_n,
        a1_upper: args.a1_upper,
        sup_norm: args.sup_norm,
    };
    let report = build_report(&map, &approx, &cfg)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    emit(args.out.as_deref(), "bounds.csv", &csv, stdout)?;
    match args.out.as_deref() {
        Some(dir) => report.write_provenance(&dir.join("bounds.provenance.json"))?,
        None => log::info!("provenance: {}", serde_json::to_string(&report.provenance)?),
    }
    // written first so a violating run still leaves its evidence behind
    report.check_soundness()
}

fn read_sample(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h == "a_n" || h == "compressed")
        .unwrap_or(if headers.len() > 1 { 1 } else { 0 });
    rdr.records()
        .map(|r| {
            let r = r?;
            let field = r.get(col).unwrap_or("").trim();
            field
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("cannot parse {field:?} as a number")))
        })
        .collect()
}

pub fn cmd_decay(args: &DecayArgs, seed: u64, stdout: &mut dyn Write) -> Result<DecayFit> {
    let (values, d) = match (&args.input, &args.symbol) {
        (Some(path), None) => (read_sample(path)?, args.dim),
        (None, Some(path)) => {
            let map = load_map(path, seed)?;
            let p = args.degree.expect("clap enforces --degree");
            let a = approx_numbers(&map, p, AssembleOptions { max_basis: args.max_basis })?;
            (a.values, map.dim())
        }
        _ => return Err(Error::InvalidArgument("give either --input or --symbol with --degree".into())),
    };
    let fit = gamma_estimate(&values, d, args.window)?;
    let mut json = serde_json::to_vec_pretty(&fit)?;
    json.push(b'\n');
    emit(args.out.as_deref(), "decay.json", &json, stdout)?;
    Ok(fit)
}

pub fn cmd_witness(args: &WitnessArgs, stdout: &mut dyn Write) -> Result<()> {
    if args.n_max < 1 {
        return Err(Error::InvalidArgument("--n-max must be >= 1".into()));
    }
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    wtr.write_record(["n", "ratio"])?;
    for n in 1..=args.n_max {
        wtr.write_record([n.to_string(), fmt_float(unboundedness_witness(n)?)])?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    emit(args.out.as_deref(), "witness.csv", &bytes, stdout)
}
