use std::time::Instant;

use serde::Serialize;
use spinthermo_core::analysis::{CurvePoint, ScalingCurve};
use spinthermo_core::models::{star_chain_chimera_embedding, ModelSpec};
use spinthermo_core::optimize::{
    detect_structure, multi_restart, warm_start_chain, Init, OptimizationRun, OptimizerConfig, ParameterSpace,
    RestartOutcome, Structure, TiedFamily, TrajectoryPoint,
};

use crate::archive::Archive;
use crate::config::{OptimizeConfig, Task, SCHEMA_VERSION};
use crate::failure::{Failure, EXIT_GATED};

#[derive(Serialize)]
pub struct RunSummary {
    pub n_spins: usize,
    pub restart: usize,
    pub initial_theta: Vec<f64>,
    pub best_c: f64,
    pub best_step: usize,
    pub best_theta: Vec<f64>,
    pub final_c: f64,
    pub structure: Structure,
    pub verdict: String,
    pub model: ModelSpec,
    pub trajectory: Vec<TrajectoryPoint>,
}

#[derive(Serialize)]
pub struct ChimeraReport {
    pub units: usize,
    /// Recognized hubs in each unit, when the verdict is a star-chain.
    pub hubs_per_unit: Option<Vec<usize>>,
    /// Hub sites of the tied star-chain embedding, for comparison.
    pub reference_hubs: Vec<usize>,
}

#[derive(Serialize)]
pub struct OptimizeResult {
    pub config: OptimizeConfig,
    pub best_c: f64,
    pub verdict: String,
    pub runs: Vec<RunSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub restarts: Vec<RestartOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chimera: Option<ChimeraReport>,
}

fn summarize(run: &OptimizationRun) -> Result<RunSummary, Failure> {
    let h = run.space.render(&run.best_theta)?;
    let structure = detect_structure(&h);
    Ok(RunSummary {
        n_spins: run.space.n_spins(),
        restart: run.restart,
        initial_theta: run.initial_theta.clone(),
        best_c: run.best_c,
        best_step: run.best_step,
        best_theta: run.best_theta.clone(),
        final_c: run.final_c,
        verdict: structure.to_string(),
        structure,
        model: ModelSpec::from_hamiltonian(&h),
        trajectory: run.trajectory.clone(),
    })
}

fn tied_point(family: &TiedFamily, n: usize, c: f64, theta: &[f64]) -> CurvePoint {
    let mut p = CurvePoint::bare(n, c);
    for (name, &v) in family.param_names().iter().zip(theta) {
        match *name {
            "a" | "h" => p.a = Some(v),
            "b" => p.b = Some(v),
            _ => p.j = Some(v),
        }
    }
    p
}

fn chimera_report(units: usize, structure: &Structure) -> Result<ChimeraReport, Failure> {
    let hubs_per_unit = match structure {
        Structure::StarChain { hubs, .. } => {
            let mut per = vec![0; units];
            for &h in hubs {
                per[h / 8] += 1;
            }
            Some(per)
        }
        _ => None,
    };
    Ok(ChimeraReport {
        units,
        hubs_per_unit,
        reference_hubs: star_chain_chimera_embedding(units)?,
    })
}

pub fn run(cfg: &OptimizeConfig, archive: &mut Archive) -> Result<OptimizeResult, Failure> {
    cfg.validate()?;
    archive.write_json("config.json", cfg)?;
    archive.log(format!("optimize {:?} beta={}", cfg.task, cfg.beta));
    let started = Instant::now();
    let result = match &cfg.task {
        Task::TiedSweep { model, n_values } => {
            let runs = warm_start_chain(*model, n_values, &cfg.optimizer, cfg.beta)?;
            let mut points = Vec::new();
            let mut summaries = Vec::new();
            for r in &runs {
                archive.log(format!(
                    "N={} best C={} at step {} theta={:?} ({:.3?})",
                    r.space.n_spins(),
                    r.best_c,
                    r.best_step,
                    r.best_theta,
                    r.wall_time
                ));
                points.push(tied_point(model, r.space.n_spins(), r.best_c, &r.best_theta));
                summaries.push(summarize(r)?);
            }
            let curve = ScalingCurve::new(
                "best_c",
                format!("{:?} tied ADAM, warm-started, analytic gradient", model),
                points,
            );
            archive.write_curve(&curve)?;
            let last = summaries.last().expect("validated non-empty");
            OptimizeResult {
                config: cfg.clone(),
                best_c: last.best_c,
                verdict: last.verdict.clone(),
                runs: summaries,
                restarts: Vec::new(),
                chimera: None,
            }
        }
        task => {
            let space = task.space(None)?;
            let m = multi_restart(&space, &cfg.optimizer, cfg.beta);
            let m = match m {
                Ok(m) => m,
                Err(e) => {
                    archive.log(format!("aborted: {e}"));
                    return Err(e.into());
                }
            };
            for o in &m.outcomes {
                match (&o.best_c, &o.error) {
                    (Some(c), _) => archive.log(format!("restart {} lr={} best C={c}", o.restart, o.learning_rate)),
                    (_, Some(e)) => archive.log(format!("restart {} lr={} failed: {e}", o.restart, o.learning_rate)),
                    _ => {}
                }
            }
            let summary = summarize(&m.best)?;
            archive.log(format!("best restart {} C={} verdict {}", m.best.restart, m.best.best_c, summary.verdict));
            let traj = ScalingCurve::new(
                "trajectory",
                "best restart: step in n, C in value, learning rate in param:a",
                m.best
                    .trajectory
                    .iter()
                    .map(|t| CurvePoint {
                        a: Some(t.learning_rate),
                        ..CurvePoint::bare(t.step, t.c)
                    })
                    .collect(),
            );
            archive.write_curve(&traj)?;
            let chimera = match task {
                Task::Chimera { units } => Some(chimera_report(*units, &summary.structure)?),
                _ => None,
            };
            if let ParameterSpace::Tied { family, n_spins } = &space {
                let p = tied_point(family, *n_spins, m.best.best_c, &m.best.best_theta);
                archive.write_curve(&ScalingCurve::new("best_c", "tied ADAM, analytic gradient", vec![p]))?;
            }
            OptimizeResult {
                config: cfg.clone(),
                best_c: m.best.best_c,
                verdict: summary.verdict.clone(),
                runs: vec![summary],
                restarts: m.outcomes,
                chimera,
            }
        }
    };
    archive.log(format!("wall time {:.3?}", started.elapsed()));
    archive.note("result.json:best_c", "exact enumeration or analytic ln Z, ADAM best iterate");
    archive.write_json("result.json", &result)?;
    Ok(result)
}

/// Default steps of a Chimera run.
pub const CHIMERA_STEPS: usize = 20000;
pub const CHIMERA_RATES: [f64; 3] = [0.01, 0.03, 0.03];

pub fn chimera_config(units: usize, steps: usize, seed: u64, beta: f64) -> OptimizeConfig {
    let mut opt = OptimizerConfig::fixed(steps, CHIMERA_RATES[0], Init::Uniform { lo: -1.5, hi: 1.5 });
    opt.seed = seed;
    opt.restarts = CHIMERA_RATES.len();
    opt.restart_learning_rates = Some(CHIMERA_RATES.to_vec());
    OptimizeConfig {
        schema_version: SCHEMA_VERSION,
        name: format!("chimera-{units}"),
        beta,
        task: Task::Chimera { units },
        optimizer: opt,
    }
}

/// Refuses the 3-unit run unless `long` is set, quoting a runtime estimate
/// from one timed gradient evaluation.
pub fn chimera_gate(cfg: &OptimizeConfig, long: bool) -> Result<(), Failure> {
    let Task::Chimera { units } = cfg.task else {
        return Ok(());
    };
    if !(1..=3).contains(&units) {
        return Err(Failure::validation(format!("units must be 1, 2 or 3, got {units}")));
    }
    if units < 3 || long {
        return Ok(());
    }
    let space = cfg.task.space(None)?;
    let theta = vec![0.1; space.dim()];
    let t = Instant::now();
    space.evaluate(&theta, cfg.beta)?;
    let per = t.elapsed().as_secs_f64();
    let threads = rayon::current_num_threads().min(cfg.optimizer.restarts).max(1);
    let waves = cfg.optimizer.restarts.div_ceil(threads);
    let hours = per * (cfg.optimizer.steps + 1) as f64 * waves as f64 / 3600.0;
    Err(Failure::new(
        EXIT_GATED,
        format!(
            "a {units}-unit Chimera run needs about {hours:.1} h here ({:.3} s per gradient, {} steps, {} restarts on {threads} threads); pass --long to run it",
            per, cfg.optimizer.steps, cfg.optimizer.restarts
        ),
    ))
}
