//! Scripted protocols that drive the neuron, synapse and growth models
//! through classic plasticity and memory experiments. Each returns a
//! [`ProtocolResult`] table that renders to CSV.

mod grow;
mod memory;
mod plasticity;
#[cfg(test)]
mod tests;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::growth::GrowthError;
use crate::{ModelParams, ParamError};

pub use grow::{grow_protocol, random_patterns, GrowArgs};
pub use memory::{interference_protocol, savings_protocol, InterferenceArgs, Order, SavingsArgs};
pub use plasticity::{
    forgetting_protocol, frequency_protocol, hebb_grid, hebb_protocol, stdp_delta_ts, stdp_protocol, FrequencyArgs,
    ForgettingArgs,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format_sig(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Nine significant digits: fixed notation for magnitudes in
/// `[1e-4, 1e9)`, scientific otherwise.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0.00000000".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let sci = format!("{v:.8e}");
    // rounding can carry into the next decade; read the exponent back
    let exp_after: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(exp);
    if (-4..9).contains(&exp_after) {
        format!("{v:.*}", (8 - exp_after) as usize)
    } else {
        sci
    }
}

/// Rows of observations plus the settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub protocol: String,
    pub seed: u64,
    pub params: ModelParams,
    /// Protocol arguments as `key = value` strings.
    pub settings: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Derived scalars such as fitted exponents.
    pub summary: Vec<(String, f64)>,
}

impl ProtocolResult {
    fn new(protocol: &str, seed: u64, params: &ModelParams, columns: &[&str]) -> Self {
        Self {
            protocol: protocol.to_string(),
            seed,
            params: *params,
            settings: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Vec::new(),
        }
    }

    fn setting(&mut self, key: &str, value: impl std::fmt::Debug) {
        self.settings.push((key.to_string(), format!("{value:?}")));
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        self.rows.iter().map(|r| r[i].as_f64()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}
