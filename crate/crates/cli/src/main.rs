//! `spinthermo`: evaluate, optimize and reproduce heat-capacity studies.

mod archive;
mod config;
mod evaluate;
mod failure;
mod optimize;
mod reproduce;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spinthermo_core::models::ModelSpec;

use archive::Archive;
use config::{OptimizeConfig, ReproduceConfig, Scale, Target, SCHEMA_VERSION};
use evaluate::Method;
use failure::Failure;

#[derive(Parser)]
#[command(name = "spinthermo", version, about = "Heat-capacity maximization for classical spin networks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Inverse temperature; overrides the config value.
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// RNG seed; overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Archive root.
    #[arg(long, global = true, env = "SPINTHERMO_OUT", default_value = "runs")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Print ln Z, <E>, Var(E) and C of a model file.
    Evaluate {
        model: PathBuf,
        /// `auto` uses the analytic form when there is one and, up to 14
        /// spins, cross-checks it against enumeration.
        #[arg(long, value_enum, default_value = "auto")]
        method: Method,
        /// Write the energy spectrum as JSON.
        #[arg(long)]
        spectrum: Option<PathBuf>,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Run an optimization config and archive the result.
    Optimize {
        config: PathBuf,
        /// Allow runs gated for their length.
        #[arg(long)]
        long: bool,
    },
    /// Regenerate the data behind a table or figure.
    ///
    /// Desk scale: table1 N in 8..24; table2 and table3 as published;
    /// fig1 and fig6 N = 2..24; fig7 N = 2..24; fig9 c = 1, N = 3..12 with
    /// 2000 steps. Full scale extends fig1/fig6 to 48, fig7 to 50, table1
    /// to 48 and fig9 to c in 0.5, 1, 2 and N up to 20.
    Reproduce {
        #[arg(value_enum, required_unless_present = "config")]
        target: Option<Target>,
        #[arg(long, value_enum, default_value = "desk")]
        scale: Scale,
        /// Re-run an archived reproduce config instead.
        #[arg(long, conflicts_with = "target")]
        config: Option<PathBuf>,
    },
    /// Direct optimization masked to a Chimera graph.
    Chimera {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        units: u8,
        /// Required for 3 units, which takes hours.
        #[arg(long)]
        long: bool,
        #[arg(long, default_value_t = optimize::CHIMERA_STEPS)]
        steps: usize,
    },
}

fn print_archive(dir: &Path) {
    println!("archive    {}", dir.display());
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(t) = cli.global.threads {
        if t == 0 {
            return Err(Failure::validation("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::internal(e.to_string()))?;
    }
    let g = &cli.global;
    match cli.command {
        Command::Evaluate {
            model,
            method,
            spectrum,
            json,
        } => {
            let text = std::fs::read_to_string(&model).map_err(|e| Failure::io(&model, e))?;
            let spec = ModelSpec::from_json(&text).map_err(|e| Failure::validation(format!("{}: {e}", model.display())))?;
            let beta = g.beta.unwrap_or(1.0);
            let e = evaluate::evaluate(&spec, beta, method)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&e).map_err(|e| Failure::internal(e.to_string()))?);
            } else {
                print!("{}", evaluate::render_text(&e, beta));
            }
            if let Some(path) = spectrum {
                evaluate::write_spectrum(&spec, &path)?;
            }
            Ok(())
        }
        Command::Optimize { config, long } => {
            let mut cfg: OptimizeConfig = config::load(&config)?;
            if let Some(b) = g.beta {
                cfg.beta = b;
            }
            if let Some(s) = g.seed {
                cfg.optimizer.seed = s;
            }
            cfg.validate()?;
            optimize::chimera_gate(&cfg, long)?;
            run_optimize(&cfg, &g.out)
        }
        Command::Chimera { units, long, steps } => {
            let cfg = optimize::chimera_config(units as usize, steps, g.seed.unwrap_or(0), g.beta.unwrap_or(1.0));
            cfg.validate()?;
            optimize::chimera_gate(&cfg, long)?;
            run_optimize(&cfg, &g.out)
        }
        Command::Reproduce { target, scale, config } => {
            let mut cfg = match (config, target) {
                (Some(path), _) => config::load::<ReproduceConfig>(&path)?,
                (None, Some(target)) => ReproduceConfig {
                    schema_version: SCHEMA_VERSION,
                    target,
                    scale,
                    seed: 0,
                },
                (None, None) => return Err(Failure::validation("a target or --config is required")),
            };
            if let Some(s) = g.seed {
                cfg.seed = s;
            }
            if g.beta.is_some_and(|b| b != 1.0) {
                return Err(Failure::validation("reproduce targets are defined at beta = 1"));
            }
            config::check_schema(cfg.schema_version)?;
            let name = format!("{:?}-{:?}", cfg.target, cfg.scale).to_lowercase();
            let mut archive = Archive::create(&g.out, &name)?;
            match reproduce::run(&cfg, &mut archive) {
                Ok(()) => {
                    let dir = archive.finish()?;
                    print_archive(&dir);
                    Ok(())
                }
                Err(e) => {
                    archive.log(format!("failed: {e}"));
                    Err(e)
                }
            }
        }
    }
}

fn run_optimize(cfg: &OptimizeConfig, root: &Path) -> Result<(), Failure> {
    let mut archive = Archive::create(root, &cfg.name)?;
    match optimize::run(cfg, &mut archive) {
        Ok(r) => {
            println!("best C     {}", r.best_c);
            println!("verdict    {}", r.verdict);
            if let Some(c) = &r.chimera {
                if let Some(per) = &c.hubs_per_unit {
                    println!("hubs/unit  {per:?}");
                }
            }
            let dir = archive.finish()?;
            print_archive(&dir);
            Ok(())
        }
        Err(e) => {
            archive.log(format!("failed: {e}"));
            eprintln!("archive    {}", archive.dir().display());
            Err(e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
