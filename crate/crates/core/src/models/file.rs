use serde::{Deserialize, Serialize};

use super::{
    all_to_all_spectrum, all_to_all_stats, build_all_to_all, build_ising_1d, build_star,
    build_star_chain, ising_1d_stats, star_chain_spectrum, star_chain_stats, star_spectrum,
    star_stats, ChainBoundary, SpinHamiltonian, StarChainParams, StarParams, Topology,
};
use crate::error::{Error, Result};
use crate::thermo::{Spectrum, ThermalStats};

/// Model document, tagged by `"model"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", deny_unknown_fields)]
pub enum ModelSpec {
    #[serde(rename = "star")]
    Star { n_spins: usize, a: f64, b: f64 },
    #[serde(rename = "star_chain")]
    StarChain {
        n_units: usize,
        leaves_per_unit: usize,
        a: f64,
        b: f64,
        j: f64,
        #[serde(default)]
        boundary: ChainBoundary,
    },
    #[serde(rename = "ising_1d")]
    Ising1d { n_spins: usize, h: f64, j: f64 },
    #[serde(rename = "all_to_all")]
    AllToAll { n_spins: usize, h: f64, j: f64 },
    /// Explicit fields and `[i, j, J_ij]` couplings. Without a topology the
    /// coupling list defines it.
    #[serde(rename = "generic")]
    Generic {
        n_spins: usize,
        h: Vec<f64>,
        couplings: Vec<(usize, usize, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        topology: Option<Vec<(usize, usize)>>,
    },
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: ModelSpec = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn from_hamiltonian(h: &SpinHamiltonian<f64>) -> Self {
        ModelSpec::Generic {
            n_spins: h.n_spins(),
            h: h.fields().to_vec(),
            couplings: h.couplings().iter().map(|(&(i, j), &v)| (i, j, v)).collect(),
            topology: Some(h.topology().edges().collect()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Star { .. } => {
                self.star()?;
            }
            ModelSpec::StarChain { .. } => {
                self.star_chain()?;
            }
            ModelSpec::Ising1d { n_spins, .. } if *n_spins < 3 => {
                return Err(Error::InvalidModel("ising_1d needs n_spins >= 3".into()))
            }
            ModelSpec::AllToAll { n_spins, .. } if *n_spins < 2 => {
                return Err(Error::InvalidModel("all_to_all needs n_spins >= 2".into()))
            }
            ModelSpec::Generic { .. } => {
                self.render()?;
            }
            _ => {}
        }
        Ok(())
    }

    fn star(&self) -> Result<Option<StarParams>> {
        match *self {
            ModelSpec::Star { n_spins, a, b } => Ok(Some(StarParams::new(n_spins, a, b)?)),
            _ => Ok(None),
        }
    }

    fn star_chain(&self) -> Result<Option<StarChainParams>> {
        match *self {
            ModelSpec::StarChain {
                n_units,
                leaves_per_unit,
                a,
                b,
                j,
                boundary,
            } => Ok(Some(
                StarChainParams::new(n_units, leaves_per_unit, a, b, j)?.with_boundary(boundary),
            )),
            _ => Ok(None),
        }
    }

    pub fn n_spins(&self) -> usize {
        match self {
            ModelSpec::Star { n_spins, .. }
            | ModelSpec::Ising1d { n_spins, .. }
            | ModelSpec::AllToAll { n_spins, .. }
            | ModelSpec::Generic { n_spins, .. } => *n_spins,
            ModelSpec::StarChain {
                n_units,
                leaves_per_unit,
                ..
            } => n_units * (leaves_per_unit + 1),
        }
    }

    pub fn has_analytic(&self) -> bool {
        !matches!(self, ModelSpec::Generic { .. })
    }

    /// Generic Hamiltonian; fails above the enumeration size limit.
    pub fn render(&self) -> Result<SpinHamiltonian<f64>> {
        match self {
            ModelSpec::Star { .. } => build_star(&self.star()?.expect("star")),
            ModelSpec::StarChain { .. } => build_star_chain(&self.star_chain()?.expect("chain")),
            ModelSpec::Ising1d { n_spins, h, j } => build_ising_1d(*h, *j, *n_spins),
            ModelSpec::AllToAll { n_spins, h, j } => build_all_to_all(*h, *j, *n_spins),
            ModelSpec::Generic {
                n_spins,
                h,
                couplings,
                topology,
            } => {
                let topo = match topology {
                    Some(edges) => Topology::from_edges(*n_spins, edges.iter().copied())?,
                    None => Topology::from_edges(*n_spins, couplings.iter().map(|c| (c.0, c.1)))?,
                };
                SpinHamiltonian::from_parts(
                    topo,
                    h.clone(),
                    couplings.iter().map(|&(i, j, v)| ((i, j), v)),
                )
            }
        }
    }

    /// Closed-form statistics, when the family has them.
    pub fn analytic_stats(&self, beta: f64) -> Option<Result<ThermalStats<f64>>> {
        match self {
            ModelSpec::Star { .. } => Some(self.star().and_then(|p| star_stats(&p.expect("star"), beta))),
            ModelSpec::StarChain { .. } => Some(
                self.star_chain()
                    .and_then(|p| star_chain_stats(&p.expect("chain"), beta)),
            ),
            ModelSpec::Ising1d { n_spins, h, j } => Some(ising_1d_stats(*h, *j, *n_spins, beta)),
            ModelSpec::AllToAll { n_spins, h, j } => {
                Some(all_to_all_stats(*h, *j, *n_spins, beta))
            }
            ModelSpec::Generic { .. } => None,
        }
    }

    /// Closed-form spectrum, when the family has one.
    pub fn analytic_spectrum(&self) -> Option<Result<Spectrum<f64>>> {
        match self {
            ModelSpec::Star { .. } => Some(self.star().and_then(|p| star_spectrum(&p.expect("star")))),
            ModelSpec::StarChain { .. } => Some(
                self.star_chain()
                    .and_then(|p| star_chain_spectrum(&p.expect("chain"))),
            ),
            ModelSpec::AllToAll { n_spins, h, j } => Some(all_to_all_spectrum(*h, *j, *n_spins)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_family() {
        let docs = [
            r#"{"model":"star","n_spins":7,"a":5.07,"b":1.267}"#,
            r#"{"model":"star_chain","n_units":2,"leaves_per_unit":3,"a":1.0,"b":0.5,"j":-1.0,"boundary":"open"}"#,
            r#"{"model":"ising_1d","n_spins":10,"h":0.5,"j":1.0}"#,
            r#"{"model":"all_to_all","n_spins":4,"h":0.377,"j":0.377}"#,
            r#"{"model":"generic","n_spins":3,"h":[0.1,0.2,0.3],"couplings":[[0,2,1.5]]}"#,
        ];
        for d in docs {
            let m = ModelSpec::from_json(d).unwrap();
            let back: ModelSpec = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
            assert_eq!(back, m);
            assert!(m.render().is_ok());
        }
    }

    #[test]
    fn rejects_unknown_keys_and_models() {
        assert!(ModelSpec::from_json(r#"{"model":"star","n_spins":7,"a":1,"b":1,"c":2}"#).is_err());
        assert!(ModelSpec::from_json(r#"{"model":"pegasus","n_spins":7}"#).is_err());
        assert!(ModelSpec::from_json(r#"{"model":"star","n_spins":1,"a":1,"b":1}"#).is_err());
        assert!(ModelSpec::from_json(
            r#"{"model":"generic","n_spins":3,"h":[0,0,0],"couplings":[[0,1,1.0]],"topology":[[1,2]]}"#
        )
        .is_err());
    }

    #[test]
    fn generic_round_trip_through_hamiltonian() {
        let h = build_star(&StarParams::new(5, 2.0, 0.5).unwrap()).unwrap();
        let m = ModelSpec::from_hamiltonian(&h);
        assert_eq!(m.render().unwrap(), h);
    }
}
