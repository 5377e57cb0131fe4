//! Heat-capacity maximization for classical spin Hamiltonians.
//!
//! Thermodynamics of finite spectra, model constructors with analytic
//! partition functions, exhaustive enumeration, ADAM optimization and
//! the scaling studies built on them.

pub mod analysis;
pub mod enumerate;
pub mod error;
pub mod models;
pub mod optimize;
pub mod scalar;
pub mod thermo;

pub use error::{Error, Result};

pub type Spectrum64 = thermo::Spectrum<f64>;
pub type Spectrum32 = thermo::Spectrum<f32>;
pub type ThermalStats64 = thermo::ThermalStats<f64>;
pub type ThermalStats32 = thermo::ThermalStats<f32>;
pub type Hamiltonian64 = models::SpinHamiltonian<f64>;
pub type Hamiltonian32 = models::SpinHamiltonian<f32>;
pub type GradientRecord64 = enumerate::GradientRecord<f64>;
