use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mpsi_app::anomaly::parse_threshold;
use mpsi_app::report::{gate_csv, gate_row, gate_table, live_csv, live_row, live_table, SigmaChoice};
use mpsi_app::tokens::parse_tokens;
use mpsi_app::{anomaly_local, load_config, render_intersection, run_networked, verdict_from_report, AppError, Overrides};
use mpsi_core::ot::OtBackend;
use mpsi_core::psi::Mode;
use mpsi_core::Exec;

#[derive(Parser)]
#[command(name = "mpsi", version, about = "Multi-party private set intersection from garbled Sort-Compare-Shuffle circuits")]
struct Cli {
    /// Disable data-parallel garbling, evaluation and OT extension.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one party of a PSI session.
    Psi {
        #[command(subcommand)]
        action: PsiAction,
    },
    /// Score a traffic window against peer blacklists by Jaccard similarity.
    Anomaly(AnomalyArgs),
    /// Report gate counts, and optionally measured traffic and time.
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum PsiAction {
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Session config (key=value).
    #[arg(long)]
    config: PathBuf,
    /// Newline-delimited tokens.
    #[arg(long)]
    input: PathBuf,
    /// Override the config's output mode.
    #[arg(long)]
    mode: Option<Mode>,
    /// Override the config's element width (bits or `auto`).
    #[arg(long)]
    sigma: Option<SigmaChoice>,
}

#[derive(Args)]
struct AnomalyArgs {
    /// Own traffic window (newline-delimited tokens).
    #[arg(long)]
    input: PathBuf,
    /// Similarity threshold in [0, 1], decimal or fraction.
    #[arg(long)]
    threshold: String,
    /// Two-party session config per peer; this party must be P1 or P2.
    #[arg(long, required_unless_present = "blacklist")]
    config: Vec<PathBuf>,
    /// Peer blacklist files scored in-process instead of over the network.
    #[arg(long, conflicts_with = "config")]
    blacklist: Vec<PathBuf>,
    /// Element width (bits or `auto`).
    #[arg(long)]
    sigma: Option<SigmaChoice>,
    /// OT backend for in-process scoring.
    #[arg(long, default_value = "real")]
    ot_backend: OtBackend,
}

#[derive(Args)]
struct BenchArgs {
    /// Set sizes (powers of two).
    #[arg(long, value_delimiter = ',', default_values_t = vec![4096usize, 65536])]
    bench_n: Vec<usize>,
    /// Party counts.
    #[arg(long, value_delimiter = ',', default_values_t = vec![3usize])]
    bench_m: Vec<usize>,
    /// Element widths (bits or `auto`).
    #[arg(long, value_delimiter = ',', default_values_t = vec![SigmaChoice::Bits(32)])]
    bench_sigma: Vec<SigmaChoice>,
    /// Machine-readable output.
    #[arg(long)]
    csv: bool,
    /// Also run full in-process sessions and measure traffic and time.
    #[arg(long)]
    live: bool,
    /// OT backend for live sessions.
    #[arg(long, default_value = "real")]
    ot_backend: OtBackend,
}

fn read(path: &Path) -> Result<String, AppError> {
    fs::read_to_string(path).map_err(|e| AppError::Input(format!("{}: {e}", path.display())))
}

fn psi_run(args: RunArgs, exec: Exec) -> Result<(), AppError> {
    let overrides = Overrides { mode: args.mode, sigma: args.sigma };
    let cfg = load_config(&read(&args.config)?, overrides)?;
    let tokens = parse_tokens(&read(&args.input)?);
    let (report, encoded) = run_networked(&cfg, &tokens, exec)?;
    if let Some(elements) = &report.result.intersection {
        println!("intersection: {}", render_intersection(elements, &encoded));
    }
    if let Some(c) = report.result.cardinality {
        println!("cardinality: {c}");
    }
    eprintln!("sent {} bytes in {:.3} s", report.bytes_sent(), report.total_time().as_secs_f64());
    Ok(())
}

fn anomaly(args: AnomalyArgs, exec: Exec) -> Result<(), AppError> {
    let threshold = parse_threshold(&args.threshold).map_err(|e| AppError::Input(e.to_string()))?;
    let window = parse_tokens(&read(&args.input)?);
    if window.is_empty() {
        return Err(AppError::Input("traffic window is empty".into()));
    }
    let verdicts = if args.blacklist.is_empty() {
        let mut out = Vec::new();
        for path in &args.config {
            let overrides = Overrides { mode: Some(Mode::Cardinality), sigma: args.sigma };
            let cfg = load_config(&read(path)?, overrides)?;
            if cfg.params.parties != 2 {
                return Err(AppError::Input(format!("{}: anomaly sessions are two-party", path.display())));
            }
            let (report, _) = run_networked(&cfg, &window, exec)?;
            let peer = 3 - cfg.party_id;
            let mut v = verdict_from_report(&report, peer, threshold)?;
            v.peer = cfg.roster[&peer].clone();
            out.push(v);
        }
        out
    } else {
        let lists = args.blacklist.iter().map(|p| read(p).map(|t| parse_tokens(&t))).collect::<Result<Vec<_>, _>>()?;
        let sigma = args.sigma.unwrap_or(SigmaChoice::Auto);
        let mut verdicts = anomaly_local(&window, &lists, threshold, sigma, args.ot_backend, exec)?;
        for (v, p) in verdicts.iter_mut().zip(&args.blacklist) {
            v.peer = p.display().to_string();
        }
        verdicts
    };
    for v in verdicts {
        println!("{v}");
    }
    Ok(())
}

fn bench(args: BenchArgs, exec: Exec) -> Result<(), AppError> {
    let mut rows = Vec::new();
    for &m in &args.bench_m {
        for &sigma in &args.bench_sigma {
            for &n in &args.bench_n {
                rows.push(gate_row(m, n, sigma).map_err(|e| AppError::Input(e.to_string()))?);
            }
        }
    }
    print!("{}", if args.csv { gate_csv(&rows) } else { gate_table(&rows) });
    if args.live {
        let mut live = Vec::new();
        for r in &rows {
            live.push(live_row(r.m, r.n, r.sigma_bits, args.ot_backend, exec, 1)?);
        }
        println!();
        print!("{}", if args.csv { live_csv(&live) } else { live_table(&live) });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    let outcome = match cli.command {
        Command::Psi { action: PsiAction::Run(args) } => psi_run(args, exec),
        Command::Anomaly(args) => anomaly(args, exec),
        Command::Bench(args) => bench(args, exec),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mpsi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
