//! Command-line front end.
//!
//! Exit codes: 0 success, 1 output I/O failure, 2 unreadable or invalid
//! input, 3 numerical failure of the reconstruction, 4 channel that is not
//! physical.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{self, Classification, DiscriminatorTolerance, Family};
use crate::config::{self, Mode};
use crate::error::QptError;
use crate::io;
use crate::measurement::{self, Experiment};
use crate::tomography::{self, Reconstruction};

pub const EXIT_IO: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_NONPHYSICAL: i32 = 4;

/// Shots per setting when neither the command line nor the config sets it.
pub const DEFAULT_SHOTS: u64 = 10_000;

/// Environment variable selecting the worker thread count.
pub const THREADS_VAR: &str = "QPT_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "fano-qpt",
    version,
    about = "Quantum process tomography in the Fano representation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reconstruct the process matrix of a configured channel.
    Qpt(QptArgs),
    /// Sparsity pattern, channel fits and parameter budget of a process matrix.
    Analyze(AnalyzeArgs),
    /// Correlated vs uncorrelated dephasing test on a two-qubit channel.
    Discriminate(DiscriminateArgs),
    /// Built-in channel families.
    Channels {
        #[command(subcommand)]
        action: ChannelsAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum ChannelsAction {
    List,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
}

#[derive(Debug, clap::Args)]
pub struct QptArgs {
    /// Channel or run configuration (JSON).
    #[arg(long, required_unless_present = "counts")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Shots per (state, setting) pair.
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for chi.json / chi.csv (and shots.jsonl).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Restrict output to one format; both are written to --out by default.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Reconstruct from previously recorded shot tables (JSON lines).
    #[arg(long, conflicts_with_all = ["mode", "shots", "seed"])]
    pub counts: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct AnalyzeArgs {
    /// Process matrix file (JSON).
    pub input: PathBuf,
    /// Deviation from identity counted as nonzero.
    #[arg(long, default_value_t = analysis::DEFAULT_PATTERN_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value = "table")]
    pub format: ReportFormat,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct DiscriminateArgs {
    /// Two-qubit channel or run configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fixed tolerance replacing the default (1e-6 exact, 3σ with shots).
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Qpt(QptError),
    Input(String),
    Output(String),
}

impl From<QptError> for Failure {
    fn from(e: QptError) -> Self {
        Failure::Qpt(e)
    }
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Qpt(e) if e.is_nonphysical() => EXIT_NONPHYSICAL,
            Failure::Qpt(e) if e.is_numerical() => EXIT_NUMERICAL,
            Failure::Qpt(_) | Failure::Input(_) => EXIT_INPUT,
            Failure::Output(_) => EXIT_IO,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Qpt(e) => e.to_string(),
            Failure::Input(m) | Failure::Output(m) => m.clone(),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Output(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> Outcome {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::Output(e.to_string()))
}

/// Sizes the global rayon pool from `QPT_THREADS`; unset or invalid values
/// leave rayon's default.
pub fn init_threads() {
    if let Some(n) = std::env::var(THREADS_VAR)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    if let Err(e) = tomography::self_test() {
        let _ = writeln!(err, "error: built-in basis self-test failed: {e}");
        return EXIT_NUMERICAL;
    }
    let result = match cli.command {
        Command::Qpt(a) => cmd_qpt(&a, out, err),
        Command::Analyze(a) => cmd_analyze(&a, out),
        Command::Discriminate(a) => cmd_discriminate(&a, out),
        Command::Channels {
            action: ChannelsAction::List,
        } => cmd_channels_list(out),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn cmd_qpt(args: &QptArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let (reconstruction, tables) = if let Some(path) = &args.counts {
        let tables = io::parse_shot_tables_jsonl(&read(path)?)?;
        let n = tables
            .first()
            .map(|t| t.setting.n())
            .ok_or_else(|| Failure::Input(format!("{}: no shot tables", path.display())))?;
        let exp = measurement::reconstruct_from_tables(n, &tables)?;
        (exp.reconstruction, None)
    } else {
        let path = args.config.as_ref().expect("clap enforces --config");
        let cfg = config::parse_run_config(&read(path)?)?;
        match args.mode.or(cfg.mode).unwrap_or(Mode::Exact) {
            Mode::Exact => (tomography::exact_tomography(&cfg.channel)?, None),
            Mode::Shots => {
                let shots = args.shots.or(cfg.shots).unwrap_or(DEFAULT_SHOTS);
                if shots == 0 {
                    return Err(Failure::Input("--shots must be positive".into()));
                }
                let seed = args.seed.or(cfg.seed).unwrap_or(0);
                let Experiment {
                    reconstruction,
                    tables,
                    ..
                } = measurement::tomography_experiment(&cfg.channel, shots, seed)?;
                (reconstruction, Some(tables))
            }
        }
    };
    report_diagnostics(&reconstruction, err);
    let json = io::chi_to_json(&reconstruction.process, Some(&reconstruction.diagnostics)) + "\n";
    let csv = io::chi_to_csv(&reconstruction.process);
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)
                .map_err(|e| Failure::Output(format!("{}: {e}", dir.display())))?;
            if args.format != Some(Format::Csv) {
                write(&dir.join("chi.json"), &json)?;
            }
            if args.format != Some(Format::Json) {
                write(&dir.join("chi.csv"), &csv)?;
            }
            if let Some(tables) = tables {
                write(&dir.join("shots.jsonl"), &io::shot_tables_to_jsonl(&tables))?;
            }
            Ok(())
        }
        None => match args.format.unwrap_or(Format::Json) {
            Format::Json => emit(out, &json),
            Format::Csv => emit(out, &csv),
        },
    }
}

/// Choi eigenvalues below this are reported as a positivity violation.
const CHOI_WARNING: f64 = -1e-9;

fn report_diagnostics(r: &Reconstruction, err: &mut dyn Write) {
    let d = &r.diagnostics;
    if d.min_choi_eigenvalue < CHOI_WARNING {
        let _ = writeln!(
            err,
            "warning: reconstructed map is not completely positive (min Choi eigenvalue {:e})",
            d.min_choi_eigenvalue
        );
    }
}

fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> Outcome {
    let record = io::parse_chi_json(&read(&args.input)?)?;
    let report = analysis::analyze(&record.process, args.threshold)?;
    let json = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
    if let Some(path) = &args.out {
        write(path, &json)?;
    }
    match args.format {
        ReportFormat::Table => emit(out, &report.table()),
        ReportFormat::Json => emit(out, &json),
    }
}

#[derive(Serialize)]
struct DiscriminationReport {
    c_xx: f64,
    c_yy: f64,
    std_errors: Option<(f64, f64)>,
    classification: Classification,
    g_hat: Option<f64>,
    g_std_error: Option<f64>,
}

fn cmd_discriminate(args: &DiscriminateArgs, out: &mut dyn Write) -> Outcome {
    let cfg = config::parse_run_config(&read(&args.config)?)?;
    let shots = match args.mode.or(cfg.mode).unwrap_or(Mode::Exact) {
        Mode::Exact => None,
        Mode::Shots => Some(args.shots.or(cfg.shots).unwrap_or(DEFAULT_SHOTS)),
    };
    if shots == Some(0) {
        return Err(Failure::Input("--shots must be positive".into()));
    }
    if let Some(t) = args.tolerance {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Failure::Input(format!("invalid tolerance {t}")));
        }
    }
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let pair = measurement::polarization_experiment(&cfg.channel, shots, seed)?;
    let d = match (args.tolerance, pair.std_errors) {
        (Some(t), _) => analysis::dephasing_discriminator(
            pair.c_xx,
            pair.c_yy,
            DiscriminatorTolerance::uniform(t),
        )?,
        (None, Some((se_xx, se_yy))) => {
            analysis::discriminate_with_errors(pair.c_xx, pair.c_yy, se_xx, se_yy)?
        }
        (None, None) => {
            analysis::dephasing_discriminator(pair.c_xx, pair.c_yy, DiscriminatorTolerance::EXACT)?
        }
    };
    let report = DiscriminationReport {
        c_xx: pair.c_xx,
        c_yy: pair.c_yy,
        std_errors: pair.std_errors,
        classification: d.classification,
        g_hat: d.g_hat,
        g_std_error: d.g_std_error,
    };
    let json = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
    if let Some(path) = &args.out {
        write(path, &json)?;
    }
    emit(out, &json)
}

fn cmd_channels_list(out: &mut dyn Write) -> Outcome {
    let mut text = format!("{:<24} {:>6} {:>6}  range\n", "family", "qubits", "param");
    for f in Family::ALL {
        let (lo, hi) = f.range();
        text.push_str(&format!(
            "{:<24} {:>6} {:>6}  [{lo}, {hi}]\n",
            f.name(),
            f.n(),
            f.param_name()
        ));
    }
    text.push_str("config-only types: unitary, kraus, tensor\n");
    emit(out, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("fano-qpt").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn channels_list() {
        let (code, out, _) = run_capture(&["channels", "list"]);
        assert_eq!(code, 0);
        assert!(out.contains("correlated_dephasing"));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_capture(&["qpt"]).0, EXIT_INPUT);
        assert_eq!(run_capture(&["bogus"]).0, EXIT_INPUT);
        assert_eq!(run_capture(&["--help"]).0, 0);
    }

    #[test]
    fn error_classes_map_to_codes() {
        let code = |e: QptError| Failure::Qpt(e).code();
        assert_eq!(
            code(QptError::SingularBasis { condition: 1e20 }),
            EXIT_NUMERICAL
        );
        assert_eq!(
            code(QptError::IncompleteKraus { residual: 0.1 }),
            EXIT_NONPHYSICAL
        );
        assert_eq!(code(QptError::Parse("x".into())), EXIT_INPUT);
        assert_eq!(Failure::Output("disk full".into()).code(), EXIT_IO);
    }

    #[test]
    fn missing_file_exit_2() {
        let (code, _, err) = run_capture(&["qpt", "--config", "/nonexistent/cfg.json"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("error:"));
    }
}
