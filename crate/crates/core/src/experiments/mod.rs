//! Parameter sweeps that set Monte Carlo estimates against the closed forms,
//! and the reports they produce.
//!
//! A sweep runs one [`mc_run`](crate::simulate::mc_run) per `(R, T)` pair
//! and fans its results out over the `β` axis, so every cell of the report
//! sees the same realisations. Every `(R, T)` pair uses the sweep's master
//! seed: trial `i` of one cell and trial `i` of another share their random
//! stream, which pairs the comparisons across cells.

mod bounds_table;
mod output;
mod slepian_check;
mod sweep;

use serde::{Deserialize, Serialize};

pub use bounds_table::{compare_bounds, BoundsComparison, BoundsGrid, BoundsRow, Regime};
pub use output::{quantity_names, write_cells_csv, write_json, write_matrix_csv, write_plot_data};
pub use slepian_check::{
    slepian_residuals, validate_slepian, KsReport, SlepianResiduals, MIN_RESOLVED_G,
};
pub use sweep::{sweep_psi, sweep_threshold, ThresholdAnalysis, ThresholdFit};

use crate::error::{Error, Result};
use crate::model::{AmplitudePolicy, GridSpec, RawParams, SystemParams};
use crate::simulate::{Estimator, McConfig, Mode, TrueParams};

/// Largest mean `|ψ_emp − ψ|` accepted in a phase interior at the longest
/// duration; doubled for cells on a boundary.
pub const PSI_GAP_TOL: f64 = 0.15;

/// Analytic quantities to attach to each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Targets {
    pub psi: bool,
    pub bounds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Parameters shared by all cells; `R` and `T` come from the axes.
    pub base: RawParams,
    pub betas: Vec<f64>,
    pub rates: Vec<f64>,
    pub durations: Vec<f64>,
    pub trials: usize,
    pub mode: Mode,
    pub master_seed: u64,
    pub grid: GridSpec,
    pub estimator: Estimator,
    pub truth: TrueParams,
    pub targets: Targets,
    /// Overrides the mode's default `K` budget.
    pub k_max: Option<f64>,
    /// Skip the unit mean-square amplitude check.
    pub unchecked_amplitudes: bool,
}

impl SweepSpec {
    pub fn new(
        base: RawParams,
        rates: Vec<f64>,
        durations: Vec<f64>,
        trials: usize,
        mode: Mode,
        master_seed: u64,
    ) -> Self {
        SweepSpec {
            base,
            betas: Vec::new(),
            rates,
            durations,
            trials,
            mode,
            master_seed,
            grid: GridSpec::default(),
            estimator: Estimator::Delay,
            truth: TrueParams::default(),
            targets: Targets::default(),
            k_max: None,
            unchecked_amplitudes: false,
        }
    }

    pub fn policy(&self) -> AmplitudePolicy {
        if self.unchecked_amplitudes {
            AmplitudePolicy::Unchecked
        } else {
            AmplitudePolicy::Normalized
        }
    }

    pub fn cell_params(&self, r: f64, t: f64) -> Result<SystemParams> {
        SystemParams::validate_with(&self.base.with_rate(r).with_duration(t), self.policy())
    }

    pub fn mc_config(&self) -> McConfig {
        McConfig {
            trials: self.trials,
            mode: self.mode,
            master_seed: self.master_seed,
            grid: self.grid,
            betas: self.betas.clone(),
            estimator: self.estimator,
            truth: self.truth,
            k_max: self.k_max,
        }
    }

    /// Checks the axes and that every cell has valid parameters. Budget
    /// overruns are not errors here; such cells are reported as skipped.
    pub fn validate(&self) -> Result<()> {
        if self.rates.is_empty() || self.durations.is_empty() {
            return Err(Error::domain("sweep axes R and T must be nonempty"));
        }
        if self.trials == 0 {
            return Err(Error::domain("trials must be >= 1"));
        }
        if let Some(b) = self.betas.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::domain(format!(
                "beta must be finite and >= 0 (got {b})"
            )));
        }
        for &r in &self.rates {
            for &t in &self.durations {
                let p = self.cell_params(r, t)?;
                self.truth.check(&p)?;
            }
        }
        Ok(())
    }

    /// Number of report cells: `max(1, |β|) · |R| · |T|`.
    pub fn cell_count(&self) -> usize {
        self.betas.len().max(1) * self.rates.len() * self.durations.len()
    }
}

/// Empirical against analytic free energy in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiComparison {
    pub emp_mean: f64,
    pub emp_std: f64,
    pub analytic: f64,
    pub branch: String,
    pub on_boundary: bool,
    /// Distance in `(β, R)` to the nearest phase boundary.
    pub boundary_distance: f64,
    /// Mean over realisations of `|ψ_emp − ψ|`.
    pub gap: f64,
    pub gap_se: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationStats {
    pub anomaly_rate: f64,
    pub anomaly_se: f64,
    pub mse: f64,
    pub local_mse: Option<f64>,
    pub local_trials: usize,
    pub alpha_hat_median: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsRecord {
    pub wwb: f64,
    /// `−ln(WWB)/T`.
    pub wwb_rate: f64,
    pub wwb_exponent: f64,
    pub ml_mse_exponent: f64,
    pub error_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    /// `None` when the sweep has no `β` axis.
    pub beta: Option<f64>,
    pub r: f64,
    pub t: f64,
    pub k: f64,
    /// Why the cell carries no empirical values.
    pub skipped: Option<String>,
    pub psi: Option<PsiComparison>,
    pub estimation: Option<EstimationStats>,
    pub bounds: Option<BoundsRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub(crate) fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub kind: String,
    pub spec: SweepSpec,
    /// Ordered by `T`, then `R`, then `β`.
    pub cells: Vec<CellRecord>,
    pub threshold: Option<ThresholdAnalysis>,
    pub verdicts: Vec<Verdict>,
}

impl ComparisonReport {
    pub fn cell(&self, beta: Option<f64>, r: f64, t: f64) -> Option<&CellRecord> {
        self.cells
            .iter()
            .find(|c| c.beta == beta && c.r == r && c.t == t)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}
