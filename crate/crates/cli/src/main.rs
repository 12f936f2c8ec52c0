use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nldg::studies::{
    run_convergence, run_delta_limit, run_energy, run_solve, write_solution_csv, DeltaSpec, StudyConfig, StudyKind,
};
use nldg::SchemeVariant;

/// DG solver for the periodic nonlocal wave equation on (0, 1).
///
/// Every study writes CSV to `--out`, or to stdout when no path is given.
#[derive(Debug, Parser)]
#[command(name = "nldg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Manufactured-solution error table with observed orders.
    Converge(StudyArgs),
    /// Energy trace of an unforced run (single case).
    Energy(StudyArgs),
    /// Distance to the local solution over a ladder of horizons.
    Limit(StudyArgs),
    /// Final field of an unforced run at the Lobatto nodes (single case).
    Solve(StudyArgs),
    /// Shift-operator identities and the piecewise-constant stiffness check.
    Selftest,
}

#[derive(Debug, Clone, Default, Args)]
struct StudyArgs {
    /// Kernel exponents, comma separated, each in (0, 3).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    alpha: Option<Vec<f64>>,
    /// Absolute horizons.
    #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with = "delta_mult")]
    delta: Option<Vec<f64>>,
    /// Horizons as multiples of the mesh size h.
    #[arg(long = "delta-mult", value_delimiter = ',', num_args = 1..)]
    delta_mult: Option<Vec<f64>>,
    /// Polynomial degrees.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    k: Option<Vec<usize>>,
    /// Cell counts.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    cells: Option<Vec<usize>>,
    /// Time step; t-final must be an integer multiple.
    #[arg(long)]
    dt: Option<f64>,
    /// Final time.
    #[arg(long = "t-final")]
    t_final: Option<f64>,
    /// Difference quotient carrying the auxiliary variable: forward|backward.
    #[arg(long)]
    variant: Option<SchemeVariant>,
    /// Extra s-quadrature nodes per panel.
    #[arg(long = "squad-nodes")]
    squad_nodes: Option<usize>,
    /// Sample the energy every this many steps.
    #[arg(long = "energy-stride")]
    energy_stride: Option<usize>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// INI file of `key = value` lines using the flag names; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Long runs: N = 80 for converge, T = 1000 for energy, a fifth horizon for limit.
    #[arg(long)]
    full: bool,
}

/// Exit 2 for anything rejected before computing, 1 for failures during a run.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => m,
        }
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, Failure> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("config key '{key}': cannot parse '{}'", v.trim())))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Failure> {
    value
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("config key '{key}': cannot parse '{}'", value.trim())))
}

/// Reads the config file into a `StudyArgs`, then lets every flag given on
/// the command line replace the file's value.
fn merge_config(flags: StudyArgs, path: &Path) -> Result<StudyArgs, Failure> {
    let ini = ini::Ini::load_from_file(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut file = StudyArgs::default();
    for (section, props) in ini.iter() {
        if let Some(name) = section {
            return Err(Failure::Usage(format!("config sections are not supported: [{name}]")));
        }
        for (key, value) in props.iter() {
            match key.trim().replace('_', "-").as_str() {
                "alpha" => file.alpha = Some(parse_list(key, value)?),
                "delta" => file.delta = Some(parse_list(key, value)?),
                "delta-mult" => file.delta_mult = Some(parse_list(key, value)?),
                "k" => file.k = Some(parse_list(key, value)?),
                "cells" => file.cells = Some(parse_list(key, value)?),
                "dt" => file.dt = Some(parse_one(key, value)?),
                "t-final" => file.t_final = Some(parse_one(key, value)?),
                "variant" => {
                    file.variant = Some(value.parse().map_err(|e: String| Failure::Usage(format!("config key '{key}': {e}")))?)
                }
                "squad-nodes" => file.squad_nodes = Some(parse_one(key, value)?),
                "energy-stride" => file.energy_stride = Some(parse_one(key, value)?),
                "out" => file.out = Some(PathBuf::from(value.trim())),
                "full" => file.full = parse_one(key, value)?,
                other => return Err(Failure::Usage(format!("unknown config key '{other}'"))),
            }
        }
    }
    if file.delta.is_some() && file.delta_mult.is_some() {
        return Err(Failure::Usage("config sets both delta and delta-mult".into()));
    }
    // the horizon is one setting, whichever form the flags use
    let (delta, delta_mult) = if flags.delta.is_some() || flags.delta_mult.is_some() {
        (flags.delta, flags.delta_mult)
    } else {
        (file.delta, file.delta_mult)
    };
    Ok(StudyArgs {
        alpha: flags.alpha.or(file.alpha),
        delta,
        delta_mult,
        k: flags.k.or(file.k),
        cells: flags.cells.or(file.cells),
        dt: flags.dt.or(file.dt),
        t_final: flags.t_final.or(file.t_final),
        variant: flags.variant.or(file.variant),
        squad_nodes: flags.squad_nodes.or(file.squad_nodes),
        energy_stride: flags.energy_stride.or(file.energy_stride),
        out: flags.out.or(file.out),
        config: None,
        full: flags.full || file.full,
    })
}

fn build_config(kind: StudyKind, args: StudyArgs) -> Result<StudyConfig, Failure> {
    let args = match args.config.clone() {
        Some(path) => merge_config(args, &path)?,
        None => args,
    };
    let mut cfg = StudyConfig::defaults_for(kind);
    if args.full {
        match kind {
            StudyKind::Converge => cfg.cells.push(80),
            StudyKind::Energy => cfg.t_final = 1000.0,
            StudyKind::Limit => {
                if let DeltaSpec::Fixed(ladder) = &mut cfg.delta {
                    ladder.push(3.125e-4);
                }
            }
            StudyKind::Solve => {}
        }
    }
    if let Some(v) = args.alpha {
        cfg.alphas = v;
    }
    if let Some(v) = args.delta {
        cfg.delta = DeltaSpec::Fixed(v);
    }
    if let Some(v) = args.delta_mult {
        cfg.delta = DeltaSpec::MultipleOfH(v);
    }
    if let Some(v) = args.k {
        cfg.degrees = v;
    }
    if let Some(v) = args.cells {
        cfg.cells = v;
    }
    if let Some(v) = args.dt {
        cfg.dt = v;
    }
    if let Some(v) = args.t_final {
        cfg.t_final = v;
    }
    if let Some(v) = args.variant {
        cfg.variant = v;
    }
    if let Some(v) = args.squad_nodes {
        cfg.squad_nodes = v;
    }
    if let Some(v) = args.energy_stride {
        cfg.energy_stride = v;
    }
    cfg.out = args.out;

    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if matches!(kind, StudyKind::Energy | StudyKind::Solve) {
        let deltas = match &cfg.delta {
            DeltaSpec::Fixed(v) | DeltaSpec::MultipleOfH(v) => v.len(),
        };
        let count = cfg.alphas.len() * deltas * cfg.degrees.len() * cfg.cells.len();
        if count != 1 {
            return Err(Failure::Usage(format!(
                "this study takes a single (alpha, delta, k, cells) case, got {count}"
            )));
        }
    }
    Ok(cfg)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("NLDG_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("NLDG_THREADS must be a positive integer, got '{raw}'")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Runtime(format!("cannot start worker pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn runtime(e: nldg::Error) -> Failure {
    Failure::Runtime(e.to_string())
}

fn run_study(kind: StudyKind, args: StudyArgs) -> Result<(), Failure> {
    let cfg = build_config(kind, args)?;
    let stdout = std::io::stdout().lock();
    let to_stdout = cfg.out.is_none();
    let rows = match kind {
        StudyKind::Converge => {
            let table = run_convergence(&cfg).map_err(runtime)?;
            if to_stdout {
                table.write_csv_to(stdout).map_err(runtime)?;
            }
            table.rows.len()
        }
        StudyKind::Energy => {
            let trace = run_energy(&cfg).map_err(runtime)?;
            if to_stdout {
                trace.write_csv_to(stdout).map_err(runtime)?;
            } else {
                eprintln!("max relative energy drift {:.3e}", trace.max_drift());
            }
            trace.rows.len()
        }
        StudyKind::Limit => {
            let table = run_delta_limit(&cfg).map_err(runtime)?;
            if to_stdout {
                table.write_csv_to(stdout).map_err(runtime)?;
            }
            table.rows.len()
        }
        StudyKind::Solve => {
            let u = run_solve(&cfg).map_err(runtime)?;
            if to_stdout {
                write_solution_csv(&u, cfg.t_final, stdout).map_err(runtime)?;
            }
            u.space().cells() * (u.space().degree() + 3)
        }
    };
    if let Some(path) = &cfg.out {
        eprintln!("wrote {rows} rows to {}", path.display());
    }
    Ok(())
}

fn run_selftest() -> Result<(), Failure> {
    let checks = nldg::selftest::run_all().map_err(runtime)?;
    let mut out = std::io::stdout().lock();
    let mut failed = 0;
    for c in &checks {
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        failed += usize::from(!c.passed());
        writeln!(
            out,
            "{verdict} {} ({} cases, worst {:.2e}, tolerance {:.0e})",
            c.name, c.cases, c.worst, c.tolerance
        )
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Converge(a) => run_study(StudyKind::Converge, a),
        Command::Energy(a) => run_study(StudyKind::Energy, a),
        Command::Limit(a) => run_study(StudyKind::Limit, a),
        Command::Solve(a) => run_study(StudyKind::Solve, a),
        Command::Selftest => run_selftest(),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("nldg: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
