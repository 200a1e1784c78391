use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pricelab_core::manifold::project_kernel_about;
use pricelab_core::model::{admissibility_bounds, equilibrium_from_masses, MassPair};
use pricelab_core::spectral::{eigenpairs, CouplingSign};
use pricelab_core::{GridFunction, ModelParams};
use pricelab_harness::plot::{line_chart, Series};
use pricelab_harness::study::{convergence_study, sweep_equilibria};
use pricelab_harness::{run_scenario, HarnessError, Result, ScenarioConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "pricelab", version, about = "Numerical lab for the Lasry-Lions price formation model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario JSON; its model parameters override the geometry flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args, Clone, Copy)]
struct Geometry {
    #[arg(long = "left", default_value_t = 1.0)]
    left: f64,
    #[arg(long = "right", default_value_t = 1.0)]
    right: f64,
    #[arg(long = "cost", default_value_t = 0.4)]
    cost: f64,
}

#[derive(Copy, Clone, ValueEnum)]
enum Sign {
    Printed,
    Dynamic,
}

impl From<Sign> for CouplingSign {
    fn from(s: Sign) -> Self {
        match s {
            Sign::Printed => CouplingSign::Printed,
            Sign::Dynamic => CouplingSign::Dynamic,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium from side masses, as JSON.
    Equilibrium {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        geometry: Geometry,
        #[arg(long)]
        m1: Option<f64>,
        #[arg(long)]
        m2: Option<f64>,
    },
    /// Eigenvalues of the linearized operator as CSV (alpha,mu,dim,family,case).
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        geometry: Geometry,
        #[arg(long, default_value_t = 8)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Sign::Printed)]
        sign: Sign,
        /// Number of eigenfunctions drawn into `eigenfunctions.svg` under `--out`.
        #[arg(long, default_value_t = 4)]
        plot: usize,
    },
    /// Runs a scenario and prints its summary JSON.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Kernel coordinates of a sampled profile, as JSON.
    Project {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        geometry: Geometry,
        /// GridFunction CSV (header `x,value`).
        input: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        p0: f64,
    },
    /// Repeats a scenario with h and dt halved per level.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Random equilibria with lambda0 in [chi, chi + 1], each perturbed and run.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.5)]
        chi: f64,
        #[arg(long, default_value_t = 5)]
        count: usize,
    },
}

fn load(common: &Common) -> Result<ScenarioConfig> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| HarnessError::Config("--config is required".into()))?;
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn params(common: &Common, g: Geometry) -> Result<(ModelParams, Option<ScenarioConfig>)> {
    if common.config.is_some() {
        let cfg = load(common)?;
        Ok((cfg.params, Some(cfg)))
    } else {
        let prm = ModelParams::new(g.left, g.right, g.cost).map_err(HarnessError::config)?;
        Ok((prm, None))
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(|e| HarnessError::io(Path::new("<stdout>"), e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

#[derive(Serialize)]
struct EquilibriumOut {
    params: ModelParams,
    masses: MassPair,
    ratio_bounds: (f64, f64),
    p0: f64,
    lambda0: f64,
}

fn equilibrium(common: &Common, g: Geometry, m1: Option<f64>, m2: Option<f64>) -> Result<()> {
    let (prm, cfg) = params(common, g)?;
    let (m1, m2) = match (m1, m2, cfg.as_ref()) {
        (Some(m1), Some(m2), _) => (m1, m2),
        (None, None, Some(c)) => {
            let m = c.base_equilibrium()?.masses(&prm);
            (m.m1, m.m2)
        }
        _ => return Err(HarnessError::Config("give --m1 and --m2, or a --config".into())),
    };
    let masses = MassPair::new(m1, m2).map_err(HarnessError::config)?;
    let e = equilibrium_from_masses(&masses, &prm).map_err(HarnessError::config)?;
    print_json(&EquilibriumOut {
        params: prm,
        masses,
        ratio_bounds: admissibility_bounds(&prm),
        p0: e.p0,
        lambda0: e.lambda0,
    })
}

fn spectrum(common: &Common, g: Geometry, count: usize, sign: Sign, plot: usize) -> Result<()> {
    let (prm, _) = params(common, g)?;
    let pairs = eigenpairs(&prm, count, sign.into()).map_err(HarnessError::config)?;
    let mut csv = String::from("alpha,mu,dim,family,case\n");
    for p in &pairs {
        let families: Vec<&str> = p.families.iter().map(|f| f.label()).collect();
        let case = p.case.map(|c| c.to_string()).unwrap_or_default();
        csv.push_str(&format!("{:?},{:?},{},{},{}\n", p.alpha, p.mu, p.dim, families.join("+"), case));
    }
    match &common.out {
        None => print!("{csv}"),
        Some(dir) => {
            write_file(&dir.join("spectrum.csv"), &csv)?;
            let (lo, hi) = (prm.lo(), prm.hi());
            let samples = 400;
            let mut series = Vec::new();
            for p in pairs.iter().take(plot) {
                for k in 0..p.dim {
                    let points = (0..=samples)
                        .map(|i| {
                            let x = lo + (hi - lo) * i as f64 / samples as f64;
                            p.eval(k, x).map(|y| (x, y))
                        })
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(HarnessError::config)?;
                    series.push(Series { label: format!("alpha = {:.4} [{k}]", p.alpha), points });
                }
            }
            write_file(&dir.join("eigenfunctions.svg"), &line_chart("eigenfunctions", "x", "g", &series))?;
        }
    }
    Ok(())
}

fn project(common: &Common, g: Geometry, input: &Path, p0: f64) -> Result<()> {
    let (prm, _) = params(common, g)?;
    let file = fs::File::open(input).map_err(|e| HarnessError::io(input, e))?;
    let f = GridFunction::read_csv(BufReader::new(file), prm).map_err(HarnessError::config)?;
    let k = project_kernel_about(&f, p0, &prm).map_err(HarnessError::config)?;
    print_json(&serde_json::json!({ "c": k.c, "d": k.d, "I1": k.i1, "I2": k.i2 }))
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Equilibrium { common, geometry, m1, m2 } => equilibrium(&common, geometry, m1, m2),
        Command::Spectrum { common, geometry, count, sign, plot } => spectrum(&common, geometry, count, sign, plot),
        Command::Simulate { common } => {
            let cfg = load(&common)?;
            let outcome = run_scenario(&cfg)?;
            print_json(&outcome.summary)
        }
        Command::Project { common, geometry, input, p0 } => project(&common, geometry, &input, p0),
        Command::Convergence { common, levels } => print_json(&convergence_study(&load(&common)?, levels)?),
        Command::Sweep { common, chi, count } => {
            let cfg = load(&common)?;
            let seed = common.seed.unwrap_or(cfg.seed);
            print_json(&sweep_equilibria(&cfg, chi, count, seed)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
