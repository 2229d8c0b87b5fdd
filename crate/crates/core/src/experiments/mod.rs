//! Scripted reproductions of the worked examples, each returning a
//! machine-readable record with the measured values, the reference values
//! they are compared against (tagged by provenance), and a verdict.
//!
//! Verdict policy: `Match` when every measured value lands within 3 standard
//! errors (or the stated tolerance) of its oracle, `Mismatch` otherwise, and
//! `Investigative` where the source display is internally inconsistent, in
//! which case the record carries both readings and takes no side.

mod improved_rate;
mod kernel_limit;
mod log_uniform;
mod perturbation;
mod resampling;
mod rescaled_mixing;
mod sharpness;

pub use improved_rate::{exp_improved_rate, exp_improved_rate_sweep};
pub use kernel_limit::exp_kernel_limit;
pub use log_uniform::exp_log_uniform;
pub use perturbation::{exp_perturbation_a_sweep, exp_small_perturbation, perturbation_delta, subsample_factor, PerturbationGridSpec};
pub use resampling::exp_resampling_help;
pub use rescaled_mixing::{exp_rescaled_mixing, RescaledMixingSpec};
pub use sharpness::{exp_sharpness, exp_sharpness_scan, sharpness_exact_mse, sharpness_paper_mse};

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Where a reference value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Figure reported by the source material, quoted for comparison.
    Reported,
    /// Closed form derived and verified independently here.
    Analytic,
    /// Independent brute-force simulation oracle.
    Simulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Match,
    Mismatch,
    Investigative,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceValue {
    pub name: String,
    pub value: f64,
    pub provenance: Provenance,
}

/// Sweep data suitable for CSV emission.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Full record of one experiment run; reproducible from (name, seed, inputs).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub seed: u64,
    pub inputs: Vec<(String, f64)>,
    pub measured: Vec<Measurement>,
    pub reference: Vec<ReferenceValue>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    pub table: Option<Table>,
}

impl ExperimentResult {
    pub(crate) fn new(name: &str, seed: u64) -> Self {
        ExperimentResult {
            name: name.into(),
            seed,
            inputs: Vec::new(),
            measured: Vec::new(),
            reference: Vec::new(),
            verdict: Verdict::Match,
            notes: Vec::new(),
            table: None,
        }
    }

    pub(crate) fn input(&mut self, name: &str, v: f64) -> &mut Self {
        self.inputs.push((name.into(), v));
        self
    }

    pub(crate) fn measure(&mut self, name: &str, value: f64, se: Option<f64>) -> &mut Self {
        self.measured.push(Measurement { name: name.into(), value, std_error: se });
        self
    }

    pub(crate) fn reference(&mut self, name: &str, value: f64, provenance: Provenance) -> &mut Self {
        self.reference.push(ReferenceValue { name: name.into(), value, provenance });
        self
    }

    pub(crate) fn note(&mut self, s: String) -> &mut Self {
        self.notes.push(s);
        self
    }

    /// Downgrade Match to Mismatch; never upgrades.
    pub(crate) fn require(&mut self, ok: bool) -> &mut Self {
        if !ok && self.verdict == Verdict::Match {
            self.verdict = Verdict::Mismatch;
        }
        self
    }

    pub fn measurement(&self, name: &str) -> Option<&Measurement> {
        self.measured.iter().find(|m| m.name == name)
    }

    pub fn reference_value(&self, name: &str) -> Option<&ReferenceValue> {
        self.reference.iter().find(|r| r.name == name)
    }

    /// Worst slack over bound-type rows: positive means every bound held.
    pub fn min_slack(&self) -> Option<f64> {
        let table = self.table.as_ref()?;
        let idx = table.columns.iter().position(|c| c == "slack")?;
        table.rows.iter().map(|r| r[idx]).min_by(|a, b| a.partial_cmp(b).unwrap())
    }
}
