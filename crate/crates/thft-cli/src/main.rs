use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use thft_cli::{emit, report, run, CliError, Command, ExperimentConfig, Format, Preset};

#[derive(Parser)]
#[command(name = "thft", version, about = "Wheel weights, anomalies and regulator integrals for THFTs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON experiment config; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for report files; without it the report goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Ladder rungs.
    #[arg(long)]
    rungs: Option<usize>,
    /// Base scale L of the ladder, or of the regulator window.
    #[arg(long)]
    l: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Algebraic vanishing verdicts for k' = 1..=k.
    Vanish(Overrides),
    /// Epsilon ladder of the wheel weight.
    Weight(Overrides),
    /// Anomaly double limit, or the 2d framing coefficient when m = 0.
    Anomaly(Overrides),
    /// Scale integral I_{N,k}(epsilon, L).
    Regulator {
        #[command(flatten)]
        o: Overrides,
        /// Power N of the total scale.
        #[arg(long)]
        power: Option<u32>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Gaussian moment from the `moments` config section.
    Moments(Overrides),
    /// Re-derives the verdicts of a stored JSON report.
    Report { path: PathBuf },
}

fn merge(cfg: &mut ExperimentConfig, o: &Overrides, regulator: bool) {
    cfg.preset = o.preset.or(cfg.preset);
    cfg.m = o.m.or(cfg.m);
    cfg.n = o.n.or(cfg.n);
    cfg.k = o.k.or(cfg.k);
    cfg.ladder.rungs = o.rungs.or(cfg.ladder.rungs);
    if regulator {
        cfg.regulator.l = o.l.or(cfg.regulator.l);
    } else {
        cfg.ladder.l = o.l.or(cfg.ladder.l);
    }
}

fn recheck(path: &PathBuf) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let rep = report::Report::from_json(&text)?;
    let bad = report::recheck(&rep)?;
    if bad.is_empty() {
        println!("{}: config hash ok, verdicts reproduced", path.display());
        Ok(())
    } else {
        Err(CliError::Numerical(format!("verdicts differ for: {}", bad.join("; "))))
    }
}

fn main_inner(cli: Cli) -> Result<bool, CliError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.seed = cli.seed.or(cfg.seed);
    let (command, o) = match &cli.command {
        Cmd::Vanish(o) => (Command::Vanish, o),
        Cmd::Weight(o) => (Command::Weight, o),
        Cmd::Anomaly(o) => (Command::Anomaly, o),
        Cmd::Moments(o) => (Command::Moments, o),
        Cmd::Regulator { o, power, epsilon } => {
            cfg.regulator.power = power.or(cfg.regulator.power);
            cfg.regulator.epsilon = epsilon.or(cfg.regulator.epsilon);
            (Command::Regulator, o)
        }
        Cmd::Report { path } => {
            recheck(path)?;
            return Ok(false);
        }
    };
    merge(&mut cfg, o, command == Command::Regulator);
    let out = cli.out.clone().or_else(|| cfg.out.clone().map(PathBuf::from));
    let rep = run(command, &cfg)?;
    eprintln!("{}", rep.summary);
    if rep.inconclusive {
        eprintln!("note: at least one ladder is Inconclusive");
    }
    if let Some(text) = emit(&rep, cli.format, out.as_deref())? {
        print!("{text}");
    }
    Ok(rep.inconclusive)
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("thft: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
