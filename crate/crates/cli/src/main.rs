//! `pdfrelay`: run an SNR sweep, write the outage CSV and print a summary.
//!
//! Exit codes: 0 on success, 1 for configuration or flag errors, 2 when the
//! simulation or output fails.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use pdfrelay::config::{load_config, ConfigError, IntervalMethod, PrecoderMode, SimConfig, SnrRange};
use pdfrelay::outage::run_config;
use pdfrelay::protocol::ProtocolKind;
use pdfrelay::report::{summary, write_csv};

#[derive(Debug, Parser)]
#[command(name = "pdfrelay", version, about = "Outage sweeps for a two-hop MIMO relay link")]
struct Cli {
    /// TOML configuration; omitted keys take their defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// SNR sweep in dB as START:STOP:STEP.
    #[arg(long, value_name = "A:B:STEP")]
    snr: Option<SnrRange>,
    /// Protocols to simulate, comma separated.
    #[arg(long, value_name = "NAME[,NAME...]", value_delimiter = ',')]
    protocol: Option<Vec<String>>,
    /// Precoder modes, comma separated.
    #[arg(long, value_name = "NAME[,NAME...]", value_delimiter = ',')]
    mode: Option<Vec<String>>,
    #[arg(long, value_name = "N")]
    trials: Option<u64>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// CSV destination.
    #[arg(long, value_name = "PATH", default_value = "outage.csv")]
    output: PathBuf,
    /// Outage level at which SNR gains are reported.
    #[arg(long, value_name = "X")]
    target_outage: Option<f64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Confidence interval method in the summary: normal or clopper_pearson.
    #[arg(long, value_name = "METHOD")]
    interval: Option<String>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn parse_list<T>(field: &str, items: &[String], parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, Failure> {
    items
        .iter()
        .map(|s| parse(s).ok_or_else(|| Failure::Config(format!("invalid `{field}`: unknown value `{s}`"))))
        .collect()
}

fn effective_config(cli: &Cli) -> Result<SimConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => SimConfig::default(),
    };
    let s = &mut cfg.sweep;
    if let Some(snr) = cli.snr {
        s.snr_db = snr;
    }
    if let Some(p) = &cli.protocol {
        s.protocols = parse_list("protocol", p, |x| x.parse::<ProtocolKind>().ok())?;
    }
    if let Some(m) = &cli.mode {
        s.modes = parse_list("mode", m, |x| x.parse::<PrecoderMode>().ok())?;
    }
    if let Some(t) = cli.trials {
        s.trials = t;
    }
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    if let Some(t) = cli.target_outage {
        s.target_outage = t;
    }
    if let Some(w) = cli.workers {
        s.workers = w;
    }
    if let Some(i) = &cli.interval {
        s.interval = match i.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "normal" => IntervalMethod::Normal,
            "clopper_pearson" => IntervalMethod::ClopperPearson,
            other => return Err(Failure::Config(format!("invalid `interval`: unknown method `{other}`"))),
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes to a sibling temporary file and renames it into place, so a failed
/// run never leaves a partial CSV behind.
fn write_atomically(path: &Path, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> io::Result<()> {
    let mut tmp_name = path.file_name().map(|n| n.to_os_string()).unwrap_or_else(|| "outage.csv".into());
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        body(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = effective_config(cli)?;
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let rows = run_config::<f64>(&cfg).map_err(|e| Failure::Runtime(e.to_string()))?;
    write_atomically(&cli.output, |w| write_csv(w, &rows, cfg.sweep.seed))
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", cli.output.display())))?;
    let s = &cfg.sweep;
    print!("{}", summary(&rows, s.target_outage, s.confidence, s.interval));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
