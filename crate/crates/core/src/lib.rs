//! Deterministic simulator for a self-organizing neural coding model.
//!
//! Neurons integrate EPSP traces into charge and fire; synapses carry a
//! strength, a persistence that slows passive decay, and an LTD devaluation
//! factor; dendrites sharing an axonal branch depress one another through
//! retrograde messengers, which yields winner-take-all attribute slots.
//! On top of these rules a layered network grows coding trees for the
//! patterns it sees. A small compiler maps boolean expressions onto
//! single-layer attribute-slot networks.

pub mod cli;
pub mod competition;
pub mod config;
pub mod experiments;
pub mod growth;
pub mod logic;
pub mod neuron;
pub mod numerics;
pub mod synapse;

use thiserror::Error;

/// A parameter outside its admissible range.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("parameter {name} = {value}: {constraint}")]
pub struct ParamError {
    pub name: &'static str,
    pub constraint: &'static str,
    pub value: f64,
}

impl ParamError {
    pub fn new(name: &'static str, constraint: &'static str, value: f64) -> Self {
        Self { name, constraint, value }
    }

    pub(crate) fn positive(name: &'static str, value: f64) -> Result<(), ParamError> {
        if value > 0.0 && value.is_finite() {
            Ok(())
        } else {
            Err(Self::new(name, "must be > 0", value))
        }
    }
}

/// Every dynamical constant a simulation needs, plus the integration step.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelParams {
    pub neuron: NeuronParams,
    pub synapse: SynapseParams,
    pub competition: CompetitionParams,
    pub dt: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            neuron: NeuronParams::default(),
            synapse: SynapseParams::default(),
            competition: CompetitionParams::default(),
            dt: numerics::DEFAULT_DT,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        self.neuron.validate()?;
        self.synapse.validate()?;
        self.competition.validate()?;
        ParamError::positive("sim.dt", self.dt)
    }
}

pub use competition::CompetitionParams;
pub use growth::{GrowthConfig, InputPattern, Network, NeuronId};
pub use neuron::{ModulationContext, NeuronParams};
pub use synapse::{SynapseParams, SynapseState};
