mod commands;
mod config;
mod error;
mod output;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use latdisp::decay::SupStrategy;
use latdisp::nls::Method;
use serde_json::Value;

use config::*;
use error::CliError;

#[derive(Parser)]
#[command(name = "latdisp", version, about = "Dispersive decay and small-data experiments on the lattice")]
struct Cli {
    /// Worker threads; overrides LATDISP_WORKERS.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate G(x, t) by quadrature.
    Green {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<f64>,
        #[arg(long)]
        dim: Option<usize>,
        /// Times: a:b:geomN, a:b:linN or a comma list.
        #[arg(long)]
        t: Option<String>,
        /// Box radius of lattice points.
        #[arg(long)]
        radius: Option<i64>,
    },
    /// Sweep sup|G(·,t)| and fit (β, p).
    DecayFit {
        #[command(flatten)]
        common: Common,
        /// Comma list of γ values.
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<String>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        t: Option<String>,
        #[arg(long, value_parser = parse_strategy)]
        strategy: Option<SupStrategy>,
    },
    /// Critical points of the phase and the degenerate catalog.
    CriticalPoints {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<f64>,
        #[arg(long)]
        dim: Option<usize>,
        /// Velocity as a comma list.
        #[arg(long, allow_hyphen_values = true)]
        v: Option<String>,
        #[arg(long)]
        seed_grid: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        catalog: bool,
    },
    /// Newton polygon and adaptedness at a degenerate point or for a given series.
    Newton {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<f64>,
        /// Base point as a comma list.
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Evolve the nonlinear equation.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<f64>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<i8>,
        #[arg(long, value_parser = parse_method)]
        method: Option<Method>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long)]
        grid_n: Option<usize>,
        #[arg(long, value_enum)]
        data: Option<DataKind>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        radius: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Strichartz experiments, nonlinear small data or linear.
    Strichartz {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<StrichartzMode>,
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Comma list of horizons T for the linear mode.
        #[arg(long)]
        horizons: Option<String>,
    },
    /// Render a result file as SVG.
    Plot {
        /// Result file (CSV or JSON).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: plot::PlotKind,
        /// Output directory; defaults to the input's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_strategy(s: &str) -> Result<SupStrategy, String> {
    serde_json::from_value(Value::String(s.to_string()))
        .map_err(|_| "expected full-grid, candidate-velocity or auto".into())
}

fn parse_method(s: &str) -> Result<Method, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|_| "expected strang or picard".into())
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn configure_workers(flag: Option<usize>) -> Result<(), CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("LATDISP_WORKERS") {
            Ok(s) => Some(s.trim().parse().map_err(|_| CliError::Validation(format!("LATDISP_WORKERS={s:?}")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Validation("worker count must be ≥ 1".into()));
        }
        // only fails if the pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Value, CliError> {
    configure_workers(cli.workers)?;
    match cli.command {
        Command::Green { common, gamma, dim, t, radius } => {
            let mut c: GreenConfig = load(common.config.as_deref())?;
            set(&mut c.gamma, gamma);
            set(&mut c.dim, dim);
            set(&mut c.t, t.map(|s| s.parse()).transpose()?);
            set(&mut c.radius, radius);
            commands::green(&c, &common.out)
        }
        Command::DecayFit { common, gamma, dim, t, strategy } => {
            let mut c: DecayFitConfig = load(common.config.as_deref())?;
            set(&mut c.gamma, gamma.as_deref().map(parse_list).transpose()?);
            set(&mut c.dim, dim);
            set(&mut c.t, t.map(|s| s.parse()).transpose()?);
            set(&mut c.sup.strategy, strategy);
            commands::decay_fit(&c, &common.out)
        }
        Command::CriticalPoints { common, gamma, dim, v, seed_grid, tol, catalog } => {
            let mut c: CriticalConfig = load(common.config.as_deref())?;
            set(&mut c.gamma, gamma);
            set(&mut c.dim, dim);
            set(&mut c.v, v.as_deref().map(parse_list).transpose()?);
            set(&mut c.seed_grid_n, seed_grid);
            set(&mut c.tol, tol);
            c.catalog |= catalog;
            commands::critical_points(&c, &common.out)
        }
        Command::Newton { common, preset, gamma, xi, order } => {
            let mut c: NewtonConfig = load(common.config.as_deref())?;
            if preset.is_some() {
                c.preset = preset;
            }
            set(&mut c.gamma, gamma);
            set(&mut c.xi, xi.as_deref().map(parse_list).transpose()?);
            set(&mut c.order, order);
            commands::newton(&c, &common.out)
        }
        Command::Solve { common, gamma, dim, s, sign, method, dt, t_final, grid_n, data, epsilon, radius, seed } => {
            let mut c: SolveConfig = load(common.config.as_deref())?;
            set(&mut c.gamma, gamma);
            set(&mut c.dim, dim);
            set(&mut c.solver.s, s);
            set(&mut c.solver.sign, sign);
            set(&mut c.solver.method, method);
            set(&mut c.solver.dt, dt);
            set(&mut c.solver.t_final, t_final);
            set(&mut c.solver.grid_n, grid_n);
            set(&mut c.data.kind, data);
            set(&mut c.data.epsilon, epsilon);
            set(&mut c.data.radius, radius);
            set(&mut c.data.seed, seed);
            commands::solve(&c, &common.out)
        }
        Command::Strichartz { common, mode, gamma, epsilon, s, t_final, samples, horizons } => {
            let mut c: StrichartzConfig = load(common.config.as_deref())?;
            set(&mut c.mode, mode);
            set(&mut c.gamma, gamma);
            set(&mut c.epsilon, epsilon);
            set(&mut c.s, s);
            set(&mut c.t_final, t_final);
            set(&mut c.linear.samples, samples);
            set(&mut c.linear.horizons, horizons.as_deref().map(parse_list).transpose()?);
            commands::strichartz(&c, &common.out)
        }
        Command::Plot { input, kind, out } => plot_command(&input, kind, out.as_deref()),
    }
}

/// Writes `<stem>.svg` and registers it in the directory's manifest.
fn plot_command(input: &Path, kind: plot::PlotKind, out: Option<&Path>) -> Result<Value, CliError> {
    let svg = plot::render(input, kind)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| input.parent().map(Path::to_path_buf).unwrap_or_default());
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "plot".into());
    let name = format!("{stem}.svg");
    let manifest_path = dir.join("manifest.json");
    match std::fs::read_to_string(&manifest_path) {
        Ok(text) => {
            output::write_atomic(&dir.join(&name), svg.as_bytes())?;
            let mut m: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Parse { path: manifest_path.display().to_string(), message: e.to_string() })?;
            let outputs = m["outputs"].as_array_mut().ok_or_else(|| CliError::Parse {
                path: manifest_path.display().to_string(),
                message: "manifest has no outputs list".into(),
            })?;
            if !outputs.iter().any(|o| o.as_str() == Some(name.as_str())) {
                outputs.push(Value::String(name));
            }
            output::write_atomic(&manifest_path, output::sorted_json(&m)?.as_bytes())?;
            Ok(m)
        }
        Err(_) => {
            let cfg = serde_json::json!({ "input": input.display().to_string(), "kind": format!("{kind:?}") });
            let mut run = output::Run::new("plot", &dir, &cfg)?;
            run.text(&name, &svg)?;
            run.finish()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(manifest) => {
            println!("{}", serde_json::to_string(&manifest).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
