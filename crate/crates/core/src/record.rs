//! Diagnostic records and captured trajectories.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;

/// Column names shared between diagnostics, reports and the CSV schema.
pub mod columns {
    pub const T: &str = "t";
    pub const MASS: &str = "mass";
    pub const BOUNDARY_FRACTION: &str = "boundary_fraction";
    pub const ENERGY: &str = "energy";
    pub const MODIFIED_ENERGY: &str = "modified_energy";
    pub const M_INTERACTION: &str = "M_interaction";
    pub const HDOT_HALF: &str = "hdot_half";
    pub const HS_NORM: &str = "hs_norm";
    pub const L4X_FOURTH: &str = "l4x_fourth";
    pub const RUNNING_SPACETIME_L4: &str = "running_spacetime_l4";
    pub const VALID: &str = "valid";

    /// Morawetz action about the `i`-th configured centre.
    pub fn morawetz_action(i: usize) -> String {
        format!("M_y{i}")
    }

    /// Modified energy for the `i`-th entry of an N list.
    pub fn modified_energy_at(i: usize) -> String {
        format!("modified_energy_N{i}")
    }

    /// Instantaneous `‖⟨∇⟩^s u‖_{L^r}` feeding the Strichartz monitor for pair `i`.
    pub fn strichartz_lr(i: usize) -> String {
        format!("strichartz_lr{i}")
    }

    /// Running Strichartz partial norm for pair `i`.
    pub fn strichartz_partial(i: usize) -> String {
        format!("strichartz_partial{i}")
    }
}

/// Something evaluated on the field at every record time.
///
/// Implementations must be pure over the field; the integrator may evaluate
/// several of them concurrently.
pub trait Diagnostic: Send + Sync {
    fn columns(&self) -> Vec<String>;
    fn evaluate(&self, field: &Field) -> Vec<f64>;
}

/// A single-column diagnostic backed by a closure.
pub struct FnDiagnostic<F> {
    name: String,
    f: F,
}

impl<F> FnDiagnostic<F>
where
    F: Fn(&Field) -> f64 + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnDiagnostic {
            name: name.into(),
            f,
        }
    }
}

impl<F> Diagnostic for FnDiagnostic<F>
where
    F: Fn(&Field) -> f64 + Send + Sync,
{
    fn columns(&self) -> Vec<String> {
        vec![self.name.clone()]
    }

    fn evaluate(&self, field: &Field) -> Vec<f64> {
        vec![(self.f)(field)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub valid: bool,
    /// One value per trajectory column, in column order.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truncation {
    pub last_valid_t: f64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub columns: Vec<String>,
    pub records: Vec<DiagnosticRecord>,
    pub snapshots: Vec<Field>,
    pub config_hash: Option<String>,
    pub truncation: Option<Truncation>,
}

impl Trajectory {
    pub fn new(columns: Vec<String>) -> Self {
        Trajectory {
            columns,
            records: Vec::new(),
            snapshots: Vec::new(),
            config_hash: None,
            truncation: None,
        }
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        Ok(self.records.iter().map(|r| r.values[i]).collect())
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    /// Number of leading records whose validity flag is set.
    pub fn valid_prefix_len(&self) -> usize {
        self.records.iter().take_while(|r| r.valid).count()
    }

    /// Time of the last record in the leading valid run, if any.
    pub fn validity_horizon(&self) -> Option<f64> {
        match self.valid_prefix_len() {
            0 => None,
            k => Some(self.records[k - 1].t),
        }
    }

    /// Snapshots taken no later than the validity horizon.
    pub fn valid_snapshots(&self) -> &[Field] {
        let horizon = self.validity_horizon().unwrap_or(f64::NEG_INFINITY);
        let k = self
            .snapshots
            .iter()
            .take_while(|s| s.t() <= horizon + 1e-12 * horizon.abs().max(1.0))
            .count();
        &self.snapshots[..k]
    }

    /// Appends derived columns computed after the run (e.g. running integrals).
    pub fn push_column(&mut self, name: impl Into<String>, values: &[f64]) -> Result<()> {
        if values.len() != self.records.len() {
            return Err(Error::param("values", "length must match the record count"));
        }
        self.columns.push(name.into());
        for (r, v) in self.records.iter_mut().zip(values) {
            r.values.push(*v);
        }
        Ok(())
    }

    pub fn is_truncated(&self) -> bool {
        self.truncation.is_some()
    }
}
