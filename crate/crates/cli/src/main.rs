use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use rmfkit::config::{ExperimentConfig, OutputFormat};
use rmfkit::record::{self, ResultRecord};
use rmfkit::runner::{self, RunOptions, Subcommand};
use rmfkit::Error;

/// Directory used for output when neither `--out` nor the config names a file.
const OUT_DIR_VAR: &str = "RMFKIT_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "rmfkit", version, about = "Random multiplicative function experiments")]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// Experiment file (TOML). Defaults apply to any field it omits.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Overrides the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Output file; records are appended. `-` writes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum)]
    format: Option<Format>,

    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    /// Run jobs that exceed the enumeration or memory caps.
    #[arg(long)]
    override_budget: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Command {
    Sample,
    Moments,
    Counts,
    Identity,
    Clt,
    Supnorm,
    Longtail,
    Validate,
    Factorize,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Sample => Subcommand::Sample,
            Command::Moments => Subcommand::Moments,
            Command::Counts => Subcommand::Counts,
            Command::Identity => Subcommand::Identity,
            Command::Clt => Subcommand::Clt,
            Command::Supnorm => Subcommand::Supnorm,
            Command::Longtail => Subcommand::Longtail,
            Command::Validate => Subcommand::Validate,
            Command::Factorize => Subcommand::Factorize,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Csv,
    Jsonl,
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("rmfkit: {e}");
            let config_error = matches!(
                e,
                Error::Config { .. } | Error::InvalidArgument(_) | Error::GridTooSmall { .. } | Error::InvalidLimit(_)
            );
            ExitCode::from(if config_error { EXIT_CONFIG } else { EXIT_FAIL })
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, Error> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        field: "<file>".into(),
        message: format!("{}: {e}", path.display()),
    })?;
    ExperimentConfig::parse(&text)
}

/// Returns whether every hard check passed.
fn real_main(cli: Cli) -> Result<bool, Error> {
    let cmd: Subcommand = cli.command.into();
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::InvalidArgument("--threads must be positive".into()));
        }
        // fails only if a global pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let format = match cli.format {
        Some(Format::Csv) => OutputFormat::Csv,
        Some(Format::Jsonl) => OutputFormat::Jsonl,
        None => cfg.format.unwrap_or_default(),
    };
    let out = cli.out.or_else(|| cfg.output.as_ref().map(PathBuf::from)).or_else(|| {
        std::env::var_os(OUT_DIR_VAR).map(|dir| {
            let ext = match format {
                OutputFormat::Csv => "csv",
                OutputFormat::Jsonl => "jsonl",
            };
            Path::new(&dir).join(format!("{}-{cmd}.{ext}", cfg.name))
        })
    });

    let records = runner::run(
        cmd,
        &cfg,
        RunOptions {
            override_budget: cli.override_budget,
        },
    )?;
    emit(&records, format, out.as_deref())?;
    for r in records.iter().filter(|r| r.is_hard_failure()) {
        eprintln!(
            "rmfkit: FAILED {} {} n={:?} j={:?} k={:?} {}",
            r.quantity, r.kind, r.n, r.j, r.k, r.detail
        );
    }
    Ok(!runner::any_failed(&records))
}

fn emit(records: &[ResultRecord], format: OutputFormat, out: Option<&Path>) -> Result<(), Error> {
    match out {
        None => write_to(records, format, io::stdout().lock(), true),
        Some(p) if p == Path::new("-") => write_to(records, format, io::stdout().lock(), true),
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            let fresh = std::fs::metadata(p).map_or(true, |m| m.len() == 0);
            let file = OpenOptions::new().create(true).append(true).open(p)?;
            write_to(records, format, io::BufWriter::new(file), fresh)
        }
    }
}

fn write_to<W: Write>(records: &[ResultRecord], format: OutputFormat, mut w: W, header: bool) -> Result<(), Error> {
    match format {
        OutputFormat::Jsonl => record::write_jsonl(records, &mut w),
        OutputFormat::Csv if header => record::write_csv(records, &mut w),
        OutputFormat::Csv => {
            // appending to an existing table: drop the header line
            let mut buf = Vec::new();
            record::write_csv(records, &mut buf)?;
            let body = buf
                .iter()
                .position(|&b| b == b'\n')
                .map_or(&buf[..0], |i| &buf[i + 1..]);
            w.write_all(body)?;
            w.flush()?;
            Ok(())
        }
    }
}
