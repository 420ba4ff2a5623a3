//! Empirical partition functions `Z(β) = e^{βε0} + Σ_i e^{βε_i}`, in the log
//! domain throughout.

use serde::{Deserialize, Serialize};

use super::correlation::EnergyLevels;
use crate::model::{AmplitudeRange, SystemParams};
use crate::numeric::{log_add_exp, LogSumExp};

/// The energy a level contributes to the Boltzmann weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelEnergy {
    /// The correlation maximum itself.
    Correlation,
    /// `max_α (α ε − α² E/2)` over the amplitude range: the joint
    /// Hamiltonian profiled over the amplitude.
    AmplitudeProfile {
        energy: f64,
        amplitudes: AmplitudeRange,
    },
}

impl LevelEnergy {
    pub fn profile(params: &SystemParams) -> Self {
        LevelEnergy::AmplitudeProfile {
            energy: params.energy(),
            amplitudes: params.amplitudes(),
        }
    }

    pub fn of(&self, eps: f64) -> f64 {
        match *self {
            LevelEnergy::Correlation => eps,
            LevelEnergy::AmplitudeProfile { energy, amplitudes } => {
                let a = amplitudes.clamp(eps / energy);
                a * eps - a * a * energy / 2.0
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub beta: f64,
    pub log_z0: f64,
    pub log_za: f64,
    pub log_z: f64,
    /// `ln Z / T`.
    pub psi_emp: f64,
}

impl PartitionSummary {
    /// Completes a summary from `ε0` and the accumulated `ln Z_a`.
    pub fn from_parts(beta: f64, eps0: f64, za: &LogSumExp, duration: f64) -> Self {
        let log_z0 = beta * eps0;
        let log_za = za.value();
        let log_z = log_add_exp(log_z0, log_za);
        PartitionSummary {
            beta,
            log_z0,
            log_za,
            log_z,
            psi_emp: log_z / duration,
        }
    }
}

pub fn partition_empirical(levels: &EnergyLevels, beta: f64) -> PartitionSummary {
    partition_empirical_with(levels, beta, LevelEnergy::Correlation)
}

pub fn partition_empirical_with(
    levels: &EnergyLevels,
    beta: f64,
    energy: LevelEnergy,
) -> PartitionSummary {
    let mut za = LogSumExp::default();
    levels
        .eps
        .iter()
        .for_each(|&e| za.push(beta * energy.of(e)));
    PartitionSummary::from_parts(beta, energy.of(levels.eps0), &za, levels.duration)
}
