use std::path::Path;

use serde::Serialize;
use spinthermo_core::enumerate::{enumerate_spectrum, enumerate_stats};
use spinthermo_core::models::ModelSpec;
use spinthermo_core::thermo::ThermalStats;

use crate::failure::{Failure, EXIT_TRIPWIRE};

/// Largest `N` at which `auto` also enumerates to cross-check.
pub const CROSS_CHECK_SPINS: usize = 14;
pub const TRIPWIRE_RTOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Auto,
    Enumerate,
    Analytic,
}

#[derive(Serialize)]
pub struct Evaluation {
    pub n_spins: usize,
    pub method: &'static str,
    pub stats: ThermalStats<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_check_rel_diff: Option<f64>,
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d <= 1e-14 {
        0.0
    } else {
        d / a.abs().max(b.abs())
    }
}

pub fn evaluate(model: &ModelSpec, beta: f64, method: Method) -> Result<Evaluation, Failure> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Failure::validation("beta must be positive"));
    }
    let n = model.n_spins();
    let enumerated = || -> Result<ThermalStats<f64>, Failure> { Ok(enumerate_stats(&model.render()?, beta)?) };
    match method {
        Method::Enumerate => Ok(Evaluation {
            n_spins: n,
            method: "enumerate",
            stats: enumerated()?,
            cross_check_rel_diff: None,
        }),
        Method::Analytic => match model.analytic_stats(beta) {
            Some(s) => Ok(Evaluation {
                n_spins: n,
                method: "analytic",
                stats: s?,
                cross_check_rel_diff: None,
            }),
            None => Err(Failure::validation("no analytic form for a generic model")),
        },
        Method::Auto => match model.analytic_stats(beta) {
            None => Ok(Evaluation {
                n_spins: n,
                method: "enumerate",
                stats: enumerated()?,
                cross_check_rel_diff: None,
            }),
            Some(s) if n > CROSS_CHECK_SPINS => Ok(Evaluation {
                n_spins: n,
                method: "analytic",
                stats: s?,
                cross_check_rel_diff: None,
            }),
            Some(s) => {
                let a = s?;
                let e = enumerated()?;
                let dc = rel_diff(a.heat_capacity, e.heat_capacity);
                let dz = rel_diff(a.log_partition, e.log_partition);
                if dc > TRIPWIRE_RTOL || dz > TRIPWIRE_RTOL {
                    return Err(Failure::new(
                        EXIT_TRIPWIRE,
                        format!(
                            "analytic and enumerated results disagree: C {} vs {} (rel {dc:.3e}), ln Z {} vs {} (rel {dz:.3e})",
                            a.heat_capacity, e.heat_capacity, a.log_partition, e.log_partition
                        ),
                    ));
                }
                Ok(Evaluation {
                    n_spins: n,
                    method: "analytic+enumerate",
                    stats: a,
                    cross_check_rel_diff: Some(dc),
                })
            }
        },
    }
}

pub fn write_spectrum(model: &ModelSpec, path: &Path) -> Result<(), Failure> {
    let spectrum = match model.analytic_spectrum() {
        Some(s) => s?,
        None => enumerate_spectrum(&model.render()?)?,
    };
    let text = serde_json::to_string_pretty(&spectrum).map_err(|e| Failure::internal(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Failure::io(path, e))
}

pub fn render_text(e: &Evaluation, beta: f64) -> String {
    let s = &e.stats;
    let mut out = format!(
        "spins      {}\nmethod     {}\nbeta       {beta}\nln Z       {}\n<E>        {}\nVar(E)     {}\nC          {}\n",
        e.n_spins, e.method, s.log_partition, s.mean_energy, s.energy_variance, s.heat_capacity
    );
    if let Some(d) = e.cross_check_rel_diff {
        out.push_str(&format!("cross-check relative difference in C: {d:.3e}\n"));
    }
    out
}
