use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use plnc::config::parse_schemes;
use plnc::report::{emit_report, sidecar_path, write_trace};
use plnc::sim::{run_sweep, Protocol, SweepOptions, SweepPlan};
use plnc::{Error, ReceiverKind, SystemConfig};

#[derive(Parser)]
#[command(
    name = "plnc-sim",
    version,
    about = "Monte-Carlo BER sweeps for buffer-aided PLNC relaying"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured scheme over a list of SNR points and write a CSV.
    Sweep(SweepArgs),
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// SNR points in dB: `start:step:stop`, a comma list, or one value.
    #[arg(long, default_value = "0:2:14")]
    snr: String,
    /// Information bits per point and protocol.
    #[arg(long, default_value_t = 200_000)]
    bits: u64,
    /// Results CSV; the configuration echo goes to `<out>.cfg`.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated schemes, overriding the configuration file.
    #[arg(long)]
    schemes: Option<String>,
    /// Only run the unbuffered baseline.
    #[arg(long)]
    no_buffers: bool,
    #[arg(long)]
    receiver: Option<ReceiverKind>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write one row per slot to this CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Packets per independent chunk.
    #[arg(long, default_value_t = 50)]
    chunk: usize,
}

fn parse_snr(text: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::Config(format!("bad --snr `{text}` (expected start:step:stop or a comma list)"));
    let num = |s: &str| s.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad);
    let parts: Vec<&str> = text.split(':').collect();
    match parts[..] {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if step <= 0.0 || stop < start || (stop - start) / step > 10_000.0 {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        [list] => list.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}

fn sweep(args: SweepArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| Error::Io {
        path: args.config.clone(),
        source: e,
    })?;
    let mut config = SystemConfig::parse_kv(&text)?;
    if let Some(s) = &args.schemes {
        config.schemes = parse_schemes(s)?;
    }
    if let Some(r) = args.receiver {
        config.receiver = r;
    }
    if let Some(s) = args.seed {
        config.rng_seed = s;
    }
    if args.no_buffers {
        config.buffers_enabled = false;
    }
    config.validate()?;
    if args.bits == 0 {
        return Err(Error::Config("--bits must be positive".into()));
    }
    if args.threads == Some(0) {
        return Err(Error::Config("--threads must be positive".into()));
    }

    let protocols = if config.buffers_enabled {
        vec![Protocol::Buffered, Protocol::Unbuffered]
    } else {
        vec![Protocol::Unbuffered]
    };
    let plan = SweepPlan {
        snr_db: parse_snr(&args.snr)?,
        bits_per_point: args.bits,
        protocols,
    };
    let options = SweepOptions {
        threads: args.threads,
        chunk_packets: args.chunk,
        record_trace: args.trace.is_some(),
    };
    let report = run_sweep(&config, &plan, &options)?;
    emit_report(&report, &args.out)?;
    if let Some(path) = &args.trace {
        write_trace(&report.trace, path)?;
    }
    eprintln!(
        "wrote {} rows to {} (config echo {}) in {:.1} s",
        report.points.len(),
        args.out.display(),
        sidecar_path(&args.out).display(),
        report.wall_clock.as_secs_f64()
    );
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
    let result = match cli.command {
        Command::Sweep(args) => sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("plnc-sim: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
