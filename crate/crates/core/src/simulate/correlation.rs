//! The sampled correlation `y(m) = ∫ r(t) s(t − mT) dt` and the
//! per-interval energy levels derived from it.
//!
//! For the rectangular pulse the noise part of `y` is exactly
//! `√(E/Δ)·[W(mT + Δ/2) − W(mT − Δ/2)]`, so sampling the Wiener path on the
//! grid gives the correlation without quadrature error.

use serde::{Deserialize, Serialize};

use super::wiener::WienerPath;
use super::TrueParams;
use crate::error::{Error, Result};
use crate::model::{GridSpec, SystemParams};

/// `y` on the grid `m_k = kδ/T`, `k = -KG/2 ..= KG/2`, `δ = Δ/G`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProcess {
    k_lo: i64,
    points_per_pulse: usize,
    step: f64,
    duration: f64,
    /// True delay in grid units, `m0 T / δ`.
    kappa0: f64,
    values: Vec<f64>,
}

fn half_span(params: &SystemParams, grid: &GridSpec) -> Result<i64> {
    params
        .k_count()
        .and_then(|k| k.checked_mul(grid.points_per_pulse))
        .map(|n| (n / 2) as i64)
        .ok_or_else(|| Error::Grid(format!("K·G overflows for K = {:.3e}", params.k())))
}

impl CorrelationProcess {
    /// Wraps precomputed samples, one per grid point.
    pub fn from_values(
        params: &SystemParams,
        grid: &GridSpec,
        truth: &TrueParams,
        values: Vec<f64>,
    ) -> Result<Self> {
        let half = half_span(params, grid)?;
        if values.len() as i64 != 2 * half + 1 {
            return Err(Error::Grid(format!(
                "expected {} correlation samples, got {}",
                2 * half + 1,
                values.len()
            )));
        }
        let step = params.delta() / grid.points_per_pulse as f64;
        Ok(CorrelationProcess {
            k_lo: -half,
            points_per_pulse: grid.points_per_pulse,
            step,
            duration: params.t(),
            kappa0: truth.m0 * params.t() / step,
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Grid index of sample `i`.
    pub fn k_at(&self, i: usize) -> i64 {
        self.k_lo + i as i64
    }

    /// Delay of sample `i`.
    pub fn m_at(&self, i: usize) -> f64 {
        self.k_at(i) as f64 * self.step / self.duration
    }

    /// Sample index of delay `m`, rounded to the nearest grid point.
    pub fn index_of(&self, m: f64) -> Option<usize> {
        let i = (m * self.duration / self.step).round() as i64 - self.k_lo;
        (0..self.values.len() as i64)
            .contains(&i)
            .then_some(i as usize)
    }

    /// Whether sample `i` lies farther than one pulse width from the truth.
    pub fn is_anomalous(&self, i: usize) -> bool {
        (self.k_at(i) as f64 - self.kappa0).abs() > self.points_per_pulse as f64 * (1.0 + 1e-12)
    }

    /// Interval of sample `i`: `None` for the correct region
    /// `|m − m0| <= Δ/T`, otherwise the block index `floor((k − κ0)/G)`, with
    /// the closing point `m = M` folded into the last block.
    fn block_of(&self, i: usize) -> Option<i64> {
        let g = self.points_per_pulse as f64;
        let d = self.k_at(i) as f64 - self.kappa0;
        if d.abs() <= g * (1.0 + 1e-12) {
            return None;
        }
        let q = d / g;
        let mut block = q.floor() as i64;
        if i + 1 == self.values.len() && q == q.floor() {
            block -= 1;
        }
        Some(block)
    }
}

/// Samples `y(m) = α0 R_s((m − m0)T) + √(E/Δ)[W(mT + Δ/2) − W(mT − Δ/2)]`.
pub fn correlation_process(
    path: &WienerPath,
    params: &SystemParams,
    grid: &GridSpec,
    truth: &TrueParams,
) -> Result<CorrelationProcess> {
    let g = grid.points_per_pulse;
    let step = params.delta() / g as f64;
    if ((path.step() - step) / step).abs() > 1e-9 {
        return Err(Error::Grid(format!(
            "path step {} does not match Δ/G = {step}",
            path.step()
        )));
    }
    let half = half_span(params, grid)?;
    let needed_lo = -params.m() * params.t() - params.delta() / 2.0;
    let offset = (needed_lo - path.start()) / step;
    let offset_i = offset.round();
    if offset_i < 0.0 || (offset - offset_i).abs() > 1e-6 {
        return Err(Error::Grid(format!(
            "path starts at {} but the grid needs {needed_lo} on a Δ/G lattice",
            path.start()
        )));
    }
    let offset_i = offset_i as usize;
    let n = (2 * half) as usize + 1;
    let w = path.values();
    if offset_i + n - 1 + g >= w.len() {
        return Err(Error::Grid(format!(
            "path ends at {} but the grid needs {}",
            path.end(),
            params.m() * params.t() + params.delta() / 2.0
        )));
    }
    let pulse = params.pulse();
    let amp = pulse.amplitude();
    let shift = truth.m0 * params.t();
    let values = (0..n)
        .map(|i| {
            let tau = (i as i64 - half) as f64 * step;
            let noise = amp * (w[offset_i + i + g] - w[offset_i + i]);
            truth.alpha0 * pulse.autocorrelation(tau - shift) + noise
        })
        .collect();
    Ok(CorrelationProcess {
        k_lo: -half,
        points_per_pulse: g,
        step,
        duration: params.t(),
        kappa0: shift / step,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Energy levels from a simulated Wiener path.
    Exact,
    /// Independent draws from the per-interval marginal law.
    Surrogate,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Surrogate => "surrogate",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "surrogate" => Ok(Mode::Surrogate),
            _ => Err(Error::Parse {
                location: "mode".into(),
                message: format!("expected `exact` or `surrogate`, got {s:?}"),
            }),
        }
    }
}

/// `ε0`, the correlation maximum over the correct region, and one maximum
/// per wrong interval.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLevels {
    pub eps0: f64,
    pub eps: Vec<f64>,
    pub mode: Mode,
    /// Observation length `T`, which normalises the free energy.
    pub duration: f64,
}

/// Grid maxima of `y`: `ε0` over `|m − m0| <= Δ/T` and one level per
/// remaining width-`Δ/T` interval.
pub fn levels_from_correlation(y: &CorrelationProcess) -> EnergyLevels {
    let mut eps0 = f64::NEG_INFINITY;
    let mut eps = Vec::new();
    let mut current: Option<(i64, f64)> = None;
    for (i, &v) in y.values.iter().enumerate() {
        match y.block_of(i) {
            None => eps0 = eps0.max(v),
            Some(b) => match current {
                Some((cb, ref mut max)) if cb == b => *max = max.max(v),
                _ => {
                    if let Some((_, max)) = current {
                        eps.push(max);
                    }
                    current = Some((b, v));
                }
            },
        }
    }
    if let Some((_, max)) = current {
        eps.push(max);
    }
    EnergyLevels {
        eps0,
        eps,
        mode: Mode::Exact,
        duration: y.duration,
    }
}

pub fn energy_levels_exact(
    path: &WienerPath,
    params: &SystemParams,
    grid: &GridSpec,
    truth: &TrueParams,
) -> Result<EnergyLevels> {
    Ok(levels_from_correlation(&correlation_process(
        path, params, grid, truth,
    )?))
}
