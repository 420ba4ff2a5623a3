//! Brownian paths sampled on a uniform grid.

use rand_distr::{Distribution, StandardNormal};

use super::rng::rng_from_seed;
use crate::error::{Error, Result};
use crate::model::{GridSpec, SystemParams};

/// Hard cap on stored path points (16 GiB of `f64`s).
pub const MAX_PATH_POINTS: usize = 1 << 31;

/// `W(start + j·step)` for `j = 0..=n`, with `W(start) = 0` and independent
/// `Normal(0, variance_rate·step)` increments.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    start: f64,
    step: f64,
    variance_rate: f64,
    seed: u64,
    values: Vec<f64>,
}

impl WienerPath {
    pub fn simulate(
        start: f64,
        step: f64,
        n_steps: usize,
        variance_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Grid(format!("path step must be > 0 (got {step})")));
        }
        if n_steps >= MAX_PATH_POINTS {
            return Err(Error::Grid(format!(
                "{n_steps} path steps exceed the storage cap"
            )));
        }
        let sd = (variance_rate * step).sqrt();
        let mut rng = rng_from_seed(seed);
        let mut values = Vec::with_capacity(n_steps + 1);
        let mut w = 0.0;
        values.push(w);
        for _ in 0..n_steps {
            let z: f64 = StandardNormal.sample(&mut rng);
            w += sd * z;
            values.push(w);
        }
        Ok(WienerPath {
            start,
            step,
            variance_rate,
            seed,
            values,
        })
    }

    /// The identically-zero path, for noise-free runs.
    pub fn zero(start: f64, step: f64, n_steps: usize) -> Self {
        WienerPath {
            start,
            step,
            variance_rate: 0.0,
            seed: 0,
            values: vec![0.0; n_steps + 1],
        }
    }

    /// Number of steps needed to cover `[-MT − Δ/2, MT + Δ/2]` at `Δ/G`.
    pub fn steps_for(params: &SystemParams, grid: &GridSpec) -> Result<usize> {
        let g = grid.points_per_pulse;
        params
            .k_count()
            .and_then(|k| k.checked_mul(g))
            .and_then(|n| n.checked_add(g))
            .filter(|&n| n < MAX_PATH_POINTS)
            .ok_or_else(|| {
                Error::Grid(format!(
                    "K·G = {:.3e}·{g} path steps exceed the storage cap",
                    params.k()
                ))
            })
    }

    /// A path over exactly the window the correlation grid needs,
    /// `[-MT − Δ/2, MT + Δ/2]`, with variance rate `N0/2`.
    pub fn for_params(params: &SystemParams, grid: &GridSpec, seed: u64) -> Result<Self> {
        let (start, step) = Self::window(params, grid);
        Self::simulate(
            start,
            step,
            Self::steps_for(params, grid)?,
            params.n0() / 2.0,
            seed,
        )
    }

    pub fn zero_for_params(params: &SystemParams, grid: &GridSpec) -> Result<Self> {
        let (start, step) = Self::window(params, grid);
        Ok(Self::zero(start, step, Self::steps_for(params, grid)?))
    }

    fn window(params: &SystemParams, grid: &GridSpec) -> (f64, f64) {
        let start = -params.m() * params.t() - params.delta() / 2.0;
        (start, params.delta() / grid.points_per_pulse as f64)
    }

    /// Every `factor`-th point: the same path seen on a coarser grid.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !(self.values.len() - 1).is_multiple_of(factor) {
            return Err(Error::Grid(format!(
                "coarsening factor {factor} does not divide {} steps",
                self.values.len() - 1
            )));
        }
        Ok(WienerPath {
            start: self.start,
            step: self.step * factor as f64,
            variance_rate: self.variance_rate,
            seed: self.seed,
            values: self.values.iter().step_by(factor).copied().collect(),
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }
    pub fn step(&self) -> f64 {
        self.step
    }
    pub fn end(&self) -> f64 {
        self.start + self.step * (self.values.len() - 1) as f64
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn variance_rate(&self) -> f64 {
        self.variance_rate
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }
}
