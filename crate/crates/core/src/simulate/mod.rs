//! Monte Carlo simulation of the correlation receiver.
//!
//! *Exact* mode synthesises the noise correlation from a Wiener path and
//! takes grid maxima per interval. *Surrogate* mode draws the interval
//! maxima independently from their marginal law, which scales to `K` far
//! beyond what a path can cover.

pub mod correlation;
pub mod estimate;
pub mod inversion;
pub mod montecarlo;
pub mod partition;
pub mod rng;
pub mod surrogate;
pub mod wiener;

use serde::{Deserialize, Serialize};

pub use correlation::{
    correlation_process, energy_levels_exact, levels_from_correlation, CorrelationProcess,
    EnergyLevels, Mode,
};
pub use estimate::{joint_ml_estimate, ml_delay_estimate, TrialOutcome};
pub use inversion::InversionTable;
pub use montecarlo::{
    mc_run, write_trials_csv, Estimator, McConfig, McResult, McSummary, PsiStat, TrialRecord,
};
pub use partition::{partition_empirical, partition_empirical_with, LevelEnergy, PartitionSummary};
pub use surrogate::{energy_levels_surrogate, sample_wrong_max, surrogate_sweep};
pub use wiener::WienerPath;

use crate::error::{Error, Result};
use crate::model::SystemParams;

/// The true delay and amplitude generating the observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueParams {
    pub m0: f64,
    pub alpha0: f64,
}

impl Default for TrueParams {
    fn default() -> Self {
        TrueParams {
            m0: 0.0,
            alpha0: 1.0,
        }
    }
}

impl TrueParams {
    /// The pulse centred at `m0` must stay inside the search range.
    pub fn check(&self, params: &SystemParams) -> Result<()> {
        let w = params.delta() / params.t();
        if !(self.m0.abs() <= params.m() - w) {
            return Err(Error::domain(format!(
                "true delay m0 = {} must satisfy |m0| <= M − Δ/T = {}",
                self.m0,
                params.m() - w
            )));
        }
        if !(self.alpha0.is_finite() && self.alpha0 >= 0.0) {
            return Err(Error::domain(format!(
                "alpha0 must be finite and >= 0 (got {})",
                self.alpha0
            )));
        }
        Ok(())
    }
}
