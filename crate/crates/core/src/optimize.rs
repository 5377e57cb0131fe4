//! Gradient ascent on the heat capacity.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumerate::enumerate_gradient;
use crate::error::{Error, Result};
use crate::models::{
    all_to_all_log_z_generic, build_all_to_all, build_ising_1d, build_star, build_star_bar,
    build_star_chain, ising_1d_log_z_generic, star_chain_log_z_generic, star_log_z_generic,
    ChainBoundary, SpinHamiltonian, StarChainParams, StarParams, Topology,
};
use crate::scalar::{heat_capacity_from_log_z, Jet, Real, Scalar, COMPLEX_STEP};

/// Learning-rate schedule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LrSchedule {
    #[default]
    Fixed,
    /// Triangle wave `min → max → min` with `up_steps` per half period.
    CyclicTriangular {
        min: f64,
        max: f64,
        up_steps: usize,
        #[serde(default)]
        halve_each_cycle: bool,
    },
}

/// Triangle wave; with halving, the apex of cycle `k` is `min + (max − min)/2^k`.
pub fn cyclic_lr(step: usize, min: f64, max: f64, up_steps: usize, halve_each_cycle: bool) -> f64 {
    let up = up_steps.max(1);
    let cycle = step / (2 * up);
    let pos = step % (2 * up);
    let frac = if pos <= up { pos } else { 2 * up - pos } as f64 / up as f64;
    let amp = if halve_each_cycle {
        (max - min) * 0.5f64.powi(cycle.min(1074) as i32)
    } else {
        max - min
    };
    min + amp * frac
}

impl LrSchedule {
    pub fn rate(&self, step: usize, base: f64) -> f64 {
        match *self {
            LrSchedule::Fixed => base,
            LrSchedule::CyclicTriangular {
                min,
                max,
                up_steps,
                halve_each_cycle,
            } => cyclic_lr(step, min, max, up_steps, halve_each_cycle),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LrSchedule::Fixed => Ok(()),
            LrSchedule::CyclicTriangular { min, max, up_steps, .. } => {
                if !(min > 0.0 && min < max && max.is_finite()) || up_steps == 0 {
                    Err(Error::Domain(
                        "cyclic schedule needs 0 < min < max and up_steps >= 1".into(),
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Bias-corrected ADAM with the usual defaults.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Real> Adam<T> {
    pub fn new(dim: usize) -> Self {
        Adam {
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            m: vec![T::zero(); dim],
            v: vec![T::zero(); dim],
            t: 0,
        }
    }

    /// One descent step on a loss with gradient `grad`.
    pub fn step(&mut self, theta: &mut [T], grad: &[T], lr: T) {
        self.t += 1;
        let one = T::one();
        let c1 = one - self.beta1.powi(self.t);
        let c2 = one - self.beta2.powi(self.t);
        for k in 0..theta.len() {
            let g = grad[k];
            self.m[k] = self.beta1 * self.m[k] + (one - self.beta1) * g;
            self.v[k] = self.beta2 * self.v[k] + (one - self.beta2) * g * g;
            let mh = self.m[k] / c1;
            let vh = self.v[k] / c2;
            theta[k] = theta[k] - lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Named-scalar families with an analytic partition function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TiedFamily {
    /// `(a, b)`.
    Star,
    /// `b` only, with `a = b(N − 3)`.
    StarTied,
    /// `(a, b, J)`.
    StarChain {
        leaves_per_unit: usize,
        #[serde(default)]
        boundary: ChainBoundary,
    },
    /// `(h, J)` on a periodic chain.
    Ising,
    /// `(h, J)` on the complete graph.
    AllToAll,
}

impl TiedFamily {
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            TiedFamily::Star => &["a", "b"],
            TiedFamily::StarTied => &["b"],
            TiedFamily::StarChain { .. } => &["a", "b", "j"],
            TiedFamily::Ising | TiedFamily::AllToAll => &["h", "j"],
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        let ok = match *self {
            TiedFamily::Star => n >= 2,
            TiedFamily::StarTied => n >= 2,
            TiedFamily::StarChain { leaves_per_unit, .. } => {
                leaves_per_unit >= 1 && n > leaves_per_unit && n.is_multiple_of(leaves_per_unit + 1)
            }
            TiedFamily::Ising => n >= 3,
            TiedFamily::AllToAll => n >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("{self:?} cannot have {n} spins")))
        }
    }

    fn log_z<S: Scalar>(&self, n: usize, t: &[S], beta: S) -> S {
        match *self {
            TiedFamily::Star => star_log_z_generic(n, t[0], t[1], beta),
            TiedFamily::StarTied => star_log_z_generic(n, t[0].scale(n as f64 - 3.0), t[0], beta),
            TiedFamily::StarChain {
                leaves_per_unit: m,
                boundary,
            } => star_chain_log_z_generic(n / (m + 1), m, boundary, t[0], t[1], t[2], beta),
            TiedFamily::Ising => ising_1d_log_z_generic(t[0], t[1], n, beta),
            TiedFamily::AllToAll => all_to_all_log_z_generic(t[0], t[1], n, beta),
        }
    }

    pub fn heat_capacity(&self, n: usize, theta: &[f64], beta: f64) -> f64 {
        let t: Vec<Jet<f64>> = theta.iter().map(|&x| Jet::cst(x)).collect();
        heat_capacity_from_log_z(|b| self.log_z(n, &t, b), beta)
    }

    /// Heat capacity and its gradient, the latter by complex step.
    pub fn heat_capacity_gradient(&self, n: usize, theta: &[f64], beta: f64) -> (f64, Vec<f64>) {
        let c = self.heat_capacity(n, theta, beta);
        let mut z: Vec<Jet<Complex64>> = theta
            .iter()
            .map(|&x| Jet::constant(Complex64::new(x, 0.0)))
            .collect();
        let bz = Complex64::new(beta, 0.0);
        let g = (0..theta.len())
            .map(|k| {
                z[k].v.im = COMPLEX_STEP;
                let ck = heat_capacity_from_log_z(|b| self.log_z(n, &z, b), bz);
                z[k].v.im = 0.0;
                ck.im / COMPLEX_STEP
            })
            .collect();
        (c, g)
    }

    pub fn render(&self, n: usize, t: &[f64]) -> Result<SpinHamiltonian<f64>> {
        self.check(n)?;
        match *self {
            TiedFamily::Star => build_star(&StarParams::new(n, t[0], t[1])?),
            TiedFamily::StarTied => build_star(&StarParams::tied(n, t[0])?),
            TiedFamily::StarChain {
                leaves_per_unit: m,
                boundary,
            } => build_star_chain(
                &StarChainParams::new(n / (m + 1), m, t[0], t[1], t[2])?.with_boundary(boundary),
            ),
            TiedFamily::Ising => build_ising_1d(t[0], t[1], n),
            TiedFamily::AllToAll => build_all_to_all(t[0], t[1], n),
        }
    }
}

/// How free parameters map onto fields and couplings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParameterSpace {
    /// `θ` are the fields followed by the couplings on the topology edges.
    DirectMasked { topology: Topology },
    /// `h_i = c tanh x_i`, `J_ij = c tanh y_ij`.
    TanhBounded { topology: Topology, c: f64 },
    Tied { family: TiedFamily, n_spins: usize },
}

impl ParameterSpace {
    pub fn direct(topology: Topology, bound_c: Option<f64>) -> Self {
        match bound_c {
            Some(c) => ParameterSpace::TanhBounded { topology, c },
            None => ParameterSpace::DirectMasked { topology },
        }
    }

    pub fn n_spins(&self) -> usize {
        match self {
            ParameterSpace::DirectMasked { topology } | ParameterSpace::TanhBounded { topology, .. } => {
                topology.n_spins()
            }
            ParameterSpace::Tied { n_spins, .. } => *n_spins,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ParameterSpace::DirectMasked { topology } | ParameterSpace::TanhBounded { topology, .. } => {
                topology.n_spins() + topology.n_edges()
            }
            ParameterSpace::Tied { family, .. } => family.param_names().len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ParameterSpace::DirectMasked { topology } => {
                SpinHamiltonian::<f64>::new(topology.clone()).map(|_| ())
            }
            ParameterSpace::TanhBounded { topology, c } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(Error::Domain(format!("bound c must be positive, got {c}")));
                }
                SpinHamiltonian::<f64>::new(topology.clone()).map(|_| ())
            }
            ParameterSpace::Tied { family, n_spins } => family.check(*n_spins),
        }
    }

    pub fn render(&self, theta: &[f64]) -> Result<SpinHamiltonian<f64>> {
        match self {
            ParameterSpace::DirectMasked { topology } => {
                SpinHamiltonian::from_parameters(topology.clone(), theta)
            }
            ParameterSpace::TanhBounded { topology, c } => {
                let v: Vec<f64> = theta.iter().map(|&x| c * x.tanh()).collect();
                SpinHamiltonian::from_parameters(topology.clone(), &v)
            }
            ParameterSpace::Tied { family, n_spins } => family.render(*n_spins, theta),
        }
    }

    pub fn heat_capacity(&self, theta: &[f64], beta: f64) -> Result<f64> {
        match self {
            ParameterSpace::Tied { family, n_spins } => Ok(family.heat_capacity(*n_spins, theta, beta)),
            _ => Ok(crate::enumerate::enumerate_stats(&self.render(theta)?, beta)?.heat_capacity),
        }
    }

    /// `C(θ)` and `∂C/∂θ`.
    pub fn evaluate(&self, theta: &[f64], beta: f64) -> Result<(f64, Vec<f64>)> {
        match self {
            ParameterSpace::DirectMasked { .. } => {
                let (s, g) = enumerate_gradient(&self.render(theta)?, beta)?;
                Ok((s.heat_capacity, g.to_vec()))
            }
            ParameterSpace::TanhBounded { c, .. } => {
                let (s, g) = enumerate_gradient(&self.render(theta)?, beta)?;
                let g = g
                    .to_vec()
                    .into_iter()
                    .zip(theta)
                    .map(|(gk, &x)| {
                        let t = x.tanh();
                        gk * c * (1.0 - t * t)
                    })
                    .collect();
                Ok((s.heat_capacity, g))
            }
            ParameterSpace::Tied { family, n_spins } => {
                Ok(family.heat_capacity_gradient(*n_spins, theta, beta))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Init {
    Uniform { lo: f64, hi: f64 },
    Explicit { theta: Vec<f64> },
    /// Start from the best point of the previous run in a chain.
    WarmStart,
}

fn default_restarts() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub steps: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub schedule: LrSchedule,
    pub init: Init,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_c: Option<f64>,
    /// Per-restart base learning rates; overrides `learning_rate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart_learning_rates: Option<Vec<f64>>,
}

impl OptimizerConfig {
    pub fn fixed(steps: usize, learning_rate: f64, init: Init) -> Self {
        OptimizerConfig {
            steps,
            learning_rate,
            schedule: LrSchedule::Fixed,
            init,
            seed: 0,
            restarts: 1,
            bound_c: None,
            restart_learning_rates: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Domain("learning_rate must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Domain("restarts must be >= 1".into()));
        }
        if let Some(c) = self.bound_c {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Domain("bound_c must be positive".into()));
            }
        }
        if let Some(r) = &self.restart_learning_rates {
            if r.len() != self.restarts || r.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::Domain(
                    "restart_learning_rates needs one positive rate per restart".into(),
                ));
            }
        }
        if let Init::Uniform { lo, hi } = self.init {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(Error::Domain("uniform init needs lo < hi".into()));
            }
        }
        Ok(())
    }

    fn base_rate(&self, restart: usize) -> f64 {
        self.restart_learning_rates
            .as_ref()
            .map_or(self.learning_rate, |r| r[restart])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub c: f64,
    pub learning_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRun {
    pub config: OptimizerConfig,
    pub space: ParameterSpace,
    pub beta: f64,
    pub restart: usize,
    pub initial_theta: Vec<f64>,
    pub best_theta: Vec<f64>,
    pub best_c: f64,
    pub best_step: usize,
    pub final_theta: Vec<f64>,
    pub final_c: f64,
    pub trajectory: Vec<TrajectoryPoint>,
    #[serde(skip)]
    pub wall_time: Duration,
}

fn space_for(space: &ParameterSpace, cfg: &OptimizerConfig) -> ParameterSpace {
    match (space, cfg.bound_c) {
        (ParameterSpace::DirectMasked { topology }, Some(c)) => ParameterSpace::TanhBounded {
            topology: topology.clone(),
            c,
        },
        _ => space.clone(),
    }
}

fn initial_theta(space: &ParameterSpace, cfg: &OptimizerConfig, restart: usize) -> Result<Vec<f64>> {
    let dim = space.dim();
    match &cfg.init {
        Init::Uniform { lo, hi } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(restart as u64);
            Ok((0..dim).map(|_| rng.gen_range(*lo..*hi)).collect())
        }
        Init::Explicit { theta } if theta.len() == dim => Ok(theta.clone()),
        Init::Explicit { theta } => Err(Error::Domain(format!(
            "explicit init has {} parameters, space has {dim}",
            theta.len()
        ))),
        Init::WarmStart => Err(Error::Domain(
            "warm_start needs a previous run; use warm_start_chain".into(),
        )),
    }
}

fn run_from(
    space: &ParameterSpace,
    cfg: &OptimizerConfig,
    beta: f64,
    restart: usize,
    theta0: Vec<f64>,
) -> Result<OptimizationRun> {
    let clock = Instant::now();
    let stride = cfg.steps.div_ceil(1000).max(1);
    let base = cfg.base_rate(restart);
    let mut theta = theta0.clone();
    let mut adam = Adam::new(theta.len());
    let mut best = (f64::NEG_INFINITY, theta.clone(), 0);
    let mut trajectory = Vec::new();
    let mut last_c = f64::NAN;
    for step in 0..=cfg.steps {
        let (c, g) = space.evaluate(&theta, beta)?;
        if !c.is_finite() || g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                step,
                detail: format!("C = {c}, theta = {theta:?}"),
            });
        }
        if c > best.0 {
            best = (c, theta.clone(), step);
        }
        last_c = c;
        let lr = cfg.schedule.rate(step, base);
        if step % stride == 0 || step == cfg.steps {
            trajectory.push(TrajectoryPoint {
                step,
                c,
                learning_rate: lr,
            });
        }
        if step == cfg.steps {
            break;
        }
        let loss_grad: Vec<f64> = g.iter().map(|x| -x).collect();
        adam.step(&mut theta, &loss_grad, lr);
    }
    Ok(OptimizationRun {
        config: cfg.clone(),
        space: space.clone(),
        beta,
        restart,
        initial_theta: theta0,
        best_theta: best.1,
        best_c: best.0,
        best_step: best.2,
        final_theta: theta,
        final_c: last_c,
        trajectory,
        wall_time: clock.elapsed(),
    })
}

fn single(space: &ParameterSpace, cfg: &OptimizerConfig, beta: f64, restart: usize) -> Result<OptimizationRun> {
    let theta0 = initial_theta(space, cfg, restart)?;
    run_from(space, cfg, beta, restart, theta0)
}

fn prepare(space: &ParameterSpace, cfg: &OptimizerConfig, beta: f64) -> Result<ParameterSpace> {
    cfg.validate()?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let s = space_for(space, cfg);
    s.validate()?;
    Ok(s)
}

/// One ADAM run (restart stream 0); reports the best iterate visited.
pub fn adam_maximize(space: &ParameterSpace, cfg: &OptimizerConfig, beta: f64) -> Result<OptimizationRun> {
    let s = prepare(space, cfg, beta)?;
    single(&s, cfg, beta, 0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartOutcome {
    pub restart: usize,
    pub learning_rate: f64,
    pub best_c: Option<f64>,
    pub best_theta: Option<Vec<f64>>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiRun {
    pub best: OptimizationRun,
    pub outcomes: Vec<RestartOutcome>,
}

/// Independent restarts in parallel; the highest `best_c` wins, the lowest
/// restart index on ties.
pub fn multi_restart(space: &ParameterSpace, cfg: &OptimizerConfig, beta: f64) -> Result<MultiRun> {
    let s = prepare(space, cfg, beta)?;
    let runs: Vec<Result<OptimizationRun>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| single(&s, cfg, beta, r))
        .collect();
    let outcomes = runs
        .iter()
        .enumerate()
        .map(|(r, res)| RestartOutcome {
            restart: r,
            learning_rate: cfg.base_rate(r),
            best_c: res.as_ref().ok().map(|x| x.best_c),
            best_theta: res.as_ref().ok().map(|x| x.best_theta.clone()),
            error: res.as_ref().err().map(|e| e.to_string()),
        })
        .collect();
    let mut best: Option<OptimizationRun> = None;
    let mut errors = Vec::new();
    for res in runs {
        match res {
            Ok(run) => {
                if best.as_ref().is_none_or(|b| run.best_c > b.best_c) {
                    best = Some(run);
                }
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    match best {
        Some(best) => Ok(MultiRun { best, outcomes }),
        None => Err(Error::RestartsExhausted(cfg.restarts, errors.join("; "))),
    }
}

/// ADAM over a tied family using analytic gradients.
pub fn tied_model_optimize(
    family: TiedFamily,
    n_spins: usize,
    cfg: &OptimizerConfig,
    beta: f64,
) -> Result<OptimizationRun> {
    let space = ParameterSpace::Tied { family, n_spins };
    multi_restart(&space, cfg, beta).map(|m| m.best)
}

/// Tied optimizations over increasing `N`, each started from the best
/// parameters of the previous one. The first run uses `cfg.init`.
pub fn warm_start_chain(
    family: TiedFamily,
    ns: &[usize],
    cfg: &OptimizerConfig,
    beta: f64,
) -> Result<Vec<OptimizationRun>> {
    let mut out: Vec<OptimizationRun> = Vec::with_capacity(ns.len());
    for &n in ns {
        let space = ParameterSpace::Tied { family, n_spins: n };
        let run = match out.last() {
            None => {
                let s = prepare(&space, cfg, beta)?;
                single(&s, cfg, beta, 0)?
            }
            Some(prev) => {
                let mut c = cfg.clone();
                c.init = Init::WarmStart;
                let s = prepare(&space, &c, beta)?;
                run_from(&s, &c, beta, 0, prev.best_theta.clone())?
            }
        };
        out.push(run);
    }
    Ok(out)
}

/// Recognized model structure, up to relabeling and gauge flips.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Structure {
    AllToAll { h: f64, j: f64 },
    Star { hub: usize, a: f64, b: f64 },
    StarBar { hubs: (usize, usize), a: f64, b: f64 },
    StarChain { hubs: Vec<usize>, leaves_per_unit: usize },
    Other,
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Structure::AllToAll { .. } => write!(f, "all-to-all"),
            Structure::Star { .. } => write!(f, "star"),
            Structure::StarBar { .. } => write!(f, "star-bar"),
            Structure::StarChain { leaves_per_unit, .. } => write!(f, "star-chain m={leaves_per_unit}"),
            Structure::Other => write!(f, "other"),
        }
    }
}

/// Fingerprint match tolerance, relative to the largest reference entry.
pub const FINGERPRINT_TOLERANCE: f64 = 0.02;

struct Fingerprint {
    fields: Vec<f64>,
    weights: Vec<f64>,
    pairs: Vec<f64>,
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

impl Fingerprint {
    fn of(h: &SpinHamiltonian<f64>) -> Self {
        let n = h.n_spins();
        let mut weights = vec![0.0; n];
        let mut pairs = vec![0.0; n * (n - 1) / 2];
        for (k, (&(i, j), &v)) in h.couplings().iter().enumerate() {
            weights[i] += v.abs();
            weights[j] += v.abs();
            pairs[k] = v.abs();
        }
        Fingerprint {
            fields: sorted(h.fields().iter().map(|x| x.abs()).collect()),
            weights: sorted(weights),
            pairs: sorted(pairs),
        }
    }

    fn matches(&self, r: &Fingerprint) -> bool {
        let scale = r
            .fields
            .iter()
            .chain(&r.weights)
            .fold(0.0f64, |m, x| m.max(x.abs()));
        let tol = FINGERPRINT_TOLERANCE * scale;
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol);
        scale > 0.0
            && close(&self.fields, &r.fields)
            && close(&self.weights, &r.weights)
            && close(&self.pairs, &r.pairs)
    }
}

fn weights(h: &SpinHamiltonian<f64>) -> Vec<f64> {
    let mut w = vec![0.0; h.n_spins()];
    for (&(i, j), &v) in h.couplings() {
        w[i] += v.abs();
        w[j] += v.abs();
    }
    w
}

fn ranked(w: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..w.len()).collect();
    idx.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    idx
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Classifies a Hamiltonian after gauge normalization.
pub fn detect_structure(h: &SpinHamiltonian<f64>) -> Structure {
    let g = h.gauge_normalized();
    let n = g.n_spins();
    if n < 2 {
        return Structure::Other;
    }
    let fp = Fingerprint::of(&g);
    let abs_h = |i: usize| g.field(i).abs();
    let abs_j = |i: usize, j: usize| g.coupling(i, j).abs();

    let hm = mean((0..n).map(abs_h));
    let jm = mean(g.couplings().values().map(|v| v.abs()));
    if g.couplings().len() == n * (n - 1) / 2 {
        if let Ok(r) = build_all_to_all(hm, jm, n) {
            if fp.matches(&Fingerprint::of(&r)) {
                return Structure::AllToAll { h: hm, j: jm };
            }
        }
    }

    let order = ranked(&weights(&g));
    let hub = order[0];
    let leaves: Vec<usize> = (0..n).filter(|&i| i != hub).collect();
    let b = mean(leaves.iter().flat_map(|&i| [abs_h(i), abs_j(hub, i)]));
    let a = abs_h(hub);
    if let Ok(r) = StarParams::new(n, a, b).and_then(|p| build_star(&p)) {
        if fp.matches(&Fingerprint::of(&r)) {
            return Structure::Star { hub, a, b };
        }
    }

    if n >= 3 {
        let (p, q) = (order[0].min(order[1]), order[0].max(order[1]));
        let rest: Vec<usize> = (0..n).filter(|&i| i != p && i != q).collect();
        let b = mean(
            [abs_h(p), abs_h(q)]
                .into_iter()
                .chain(rest.iter().flat_map(|&i| [abs_j(p, i), abs_j(q, i)])),
        );
        let a = abs_j(p, q);
        if let Ok(r) = build_star_bar(n, a, b) {
            if fp.matches(&Fingerprint::of(&r)) {
                return Structure::StarBar { hubs: (p, q), a, b };
            }
        }
    }

    star_chain_pattern(&g).unwrap_or(Structure::Other)
}

/// Relative coupling magnitude below which an edge counts as inactive in
/// the star-chain pattern test.
pub const ACTIVE_COUPLING: f64 = 0.1;

fn star_chain_pattern(g: &SpinHamiltonian<f64>) -> Option<Structure> {
    let n = g.n_spins();
    let jmax = g.couplings().values().fold(0.0f64, |m, v| m.max(v.abs()));
    if jmax == 0.0 {
        return None;
    }
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&(i, j), &v) in g.couplings() {
        if v.abs() > ACTIVE_COUPLING * jmax {
            adj.entry(i).or_default().push(j);
            adj.entry(j).or_default().push(i);
        }
    }
    let deg = |i: usize| adj.get(&i).map_or(0, Vec::len);
    let hubs: Vec<usize> = (0..n).filter(|&i| deg(i) >= 2).collect();
    if hubs.len() < 2 {
        return None;
    }
    let is_hub = |i: usize| deg(i) >= 2;
    let mut leaves = vec![0usize; n];
    for i in 0..n {
        if is_hub(i) {
            continue;
        }
        let nb = adj.get(&i)?;
        if nb.len() != 1 || !is_hub(nb[0]) {
            return None;
        }
        leaves[nb[0]] += 1;
    }
    let m = leaves[hubs[0]];
    if m == 0 || hubs.iter().any(|&h| leaves[h] != m) {
        return None;
    }
    // the hub graph must be a path or a ring
    let hub_deg: Vec<usize> = hubs
        .iter()
        .map(|&h| adj[&h].iter().filter(|&&x| is_hub(x)).count())
        .collect();
    let ends = hub_deg.iter().filter(|&&d| d == 1).count();
    let edges: usize = hub_deg.iter().sum::<usize>() / 2;
    let path = ends == 2 && edges == hubs.len() - 1 && hub_deg.iter().all(|&d| d == 1 || d == 2);
    let ring = hubs.len() >= 3 && hub_deg.iter().all(|&d| d == 2) && edges == hubs.len();
    if !(path || ring) || !connected(&hubs, |h| adj[&h].iter().copied().filter(|&x| is_hub(x)).collect()) {
        return None;
    }
    Some(Structure::StarChain {
        hubs,
        leaves_per_unit: m,
    })
}

fn connected<F: Fn(usize) -> Vec<usize>>(nodes: &[usize], nb: F) -> bool {
    let mut seen = vec![nodes[0]];
    let mut stack = vec![nodes[0]];
    while let Some(x) = stack.pop() {
        for y in nb(x) {
            if !seen.contains(&y) {
                seen.push(y);
                stack.push(y);
            }
        }
    }
    seen.len() == nodes.len()
}
