use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use spinthermo_core::models::{chimera_topology, Topology};
use spinthermo_core::optimize::{OptimizerConfig, ParameterSpace, TiedFamily};

use crate::failure::Failure;

pub const SCHEMA_VERSION: u32 = 1;

fn default_beta() -> f64 {
    1.0
}

/// What an `optimize` run searches over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    /// All fields and couplings on `edges` (complete graph when absent).
    Direct {
        n_spins: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edges: Option<Vec<(usize, usize)>>,
    },
    /// Direct optimization masked to a Chimera graph of `units` cells.
    Chimera { units: usize },
    Tied { model: TiedFamily, n_spins: usize },
    /// Tied runs over increasing `N`, each warm-started from the last.
    TiedSweep { model: TiedFamily, n_values: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub schema_version: u32,
    pub name: String,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub task: Task,
    pub optimizer: OptimizerConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Table1,
    Table2,
    Table3,
    Fig1,
    Fig6,
    Fig7,
    Fig9,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproduceConfig {
    pub schema_version: u32,
    pub target: Target,
    pub scale: Scale,
    #[serde(default)]
    pub seed: u64,
}

pub fn check_schema(version: u32) -> Result<(), Failure> {
    if version != SCHEMA_VERSION {
        return Err(Failure::validation(format!(
            "unsupported schema_version {version}, expected {SCHEMA_VERSION}"
        )));
    }
    Ok(())
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))
}

impl Task {
    pub fn space(&self, bound_c: Option<f64>) -> Result<ParameterSpace, Failure> {
        let space = match self {
            Task::Direct { n_spins, edges: None } => ParameterSpace::direct(Topology::complete(*n_spins), bound_c),
            Task::Direct {
                n_spins,
                edges: Some(e),
            } => ParameterSpace::direct(Topology::from_edges(*n_spins, e.iter().copied())?, bound_c),
            Task::Chimera { units } => ParameterSpace::direct(chimera_topology(*units)?, bound_c),
            Task::Tied { model, n_spins } => ParameterSpace::Tied {
                family: *model,
                n_spins: *n_spins,
            },
            Task::TiedSweep { .. } => {
                return Err(Failure::internal("a sweep has no single parameter space"));
            }
        };
        space.validate()?;
        Ok(space)
    }
}

impl OptimizeConfig {
    pub fn validate(&self) -> Result<(), Failure> {
        check_schema(self.schema_version)?;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Failure::validation("beta must be positive"));
        }
        self.optimizer.validate()?;
        match &self.task {
            Task::TiedSweep { model, n_values } => {
                if n_values.is_empty() {
                    return Err(Failure::validation("n_values must not be empty"));
                }
                for &n in n_values {
                    ParameterSpace::Tied {
                        family: *model,
                        n_spins: n,
                    }
                    .validate()?;
                }
            }
            t => {
                t.space(self.optimizer.bound_c)?;
            }
        }
        Ok(())
    }
}
