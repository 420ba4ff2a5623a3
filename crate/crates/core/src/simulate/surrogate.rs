//! Fast sampler: wrong-interval levels drawn independently from their
//! marginal law `σ F₀⁻¹(U)`, `σ = √(N0PT/2)`, and `ε0 = α0 PT + Normal(0, σ²)`.
//!
//! Stream layout under a trial seed `s`: `ε0` and the anomalous estimate's
//! position come from `mix(s, 0)`; wrong levels come in blocks of
//! [`BLOCK`], block `b` from `mix(s, b + 1)`. Materialised and streaming
//! evaluation therefore see identical levels.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::correlation::{EnergyLevels, Mode};
use super::inversion::InversionTable;
use super::partition::{LevelEnergy, PartitionSummary};
use super::rng::{mix, open_unit, rng_from_seed, SimRng};
use super::TrueParams;
use crate::model::SystemParams;
use crate::numeric::LogSumExp;

pub const BLOCK: u64 = 1 << 16;

/// Number of wrong intervals: `K − 2`, as the correct region spans two.
pub fn wrong_count(params: &SystemParams) -> f64 {
    (params.k() - 2.0).max(0.0)
}

/// The generator for `ε0` and position draws of trial `seed`.
pub fn head_rng(seed: u64) -> SimRng {
    rng_from_seed(mix(seed, 0))
}

pub fn draw_eps0(params: &SystemParams, truth: &TrueParams, rng: &mut SimRng) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    truth.alpha0 * params.energy() + params.sigma() * z
}

fn block_levels(
    seed: u64,
    block: u64,
    count: u64,
    sigma: f64,
    table: &InversionTable,
) -> impl Iterator<Item = f64> + '_ {
    let mut rng = rng_from_seed(mix(seed, block + 1));
    let len = BLOCK.min(count - block * BLOCK);
    (0..len).map(move |_| sigma * table.inverse_cdf(open_unit(&mut rng)))
}

fn block_count(count: u64) -> u64 {
    count.div_ceil(BLOCK)
}

/// Materialises `ε0` and `count` wrong levels.
pub fn energy_levels_surrogate(
    params: &SystemParams,
    truth: &TrueParams,
    count: u64,
    seed: u64,
    table: &InversionTable,
) -> EnergyLevels {
    let eps0 = draw_eps0(params, truth, &mut head_rng(seed));
    let sigma = params.sigma();
    let eps = (0..block_count(count))
        .flat_map(|b| block_levels(seed, b, count, sigma, table))
        .collect();
    EnergyLevels {
        eps0,
        eps,
        mode: Mode::Surrogate,
        duration: params.t(),
    }
}

/// Result of streaming over all surrogate levels of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateSweep {
    pub eps0: f64,
    pub max_wrong: f64,
    pub partitions: Vec<PartitionSummary>,
}

/// Streams `count` wrong levels in parallel blocks, accumulating `ln Z_a(β)`
/// for every `β` over `energy`-transformed levels, and the largest raw level. Blocks merge in index order, so the
/// result does not depend on the thread count.
pub fn surrogate_sweep(
    params: &SystemParams,
    truth: &TrueParams,
    count: u64,
    betas: &[f64],
    energy: LevelEnergy,
    seed: u64,
    table: &InversionTable,
) -> SurrogateSweep {
    let eps0 = draw_eps0(params, truth, &mut head_rng(seed));
    let sigma = params.sigma();
    let partials: Vec<(Vec<LogSumExp>, f64)> = (0..block_count(count))
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![LogSumExp::default(); betas.len()];
            let mut max = f64::NEG_INFINITY;
            for e in block_levels(seed, b, count, sigma, table) {
                max = max.max(e);
                let h = energy.of(e);
                for (a, &beta) in acc.iter_mut().zip(betas) {
                    a.push(beta * h);
                }
            }
            (acc, max)
        })
        .collect();
    let mut total = vec![LogSumExp::default(); betas.len()];
    let mut max_wrong = f64::NEG_INFINITY;
    for (acc, max) in &partials {
        for (t, a) in total.iter_mut().zip(acc) {
            t.merge(a);
        }
        max_wrong = max_wrong.max(*max);
    }
    let partitions = betas
        .iter()
        .zip(&total)
        .map(|(&beta, za)| PartitionSummary::from_parts(beta, energy.of(eps0), za, params.t()))
        .collect();
    SurrogateSweep {
        eps0,
        max_wrong,
        partitions,
    }
}

/// Largest of `n` independent levels, drawn directly from `F₀(a/σ)^n`
/// by inverting `ln(1 − F₀) = ln(1 − U^{1/n})`. `-inf` when `n = 0`.
pub fn sample_wrong_max(n: f64, sigma: f64, rng: &mut impl Rng, table: &InversionTable) -> f64 {
    if n < 1.0 {
        return f64::NEG_INFINITY;
    }
    let u = open_unit(rng);
    let log_sf = (-(u.ln() / n).exp_m1()).ln();
    sigma * table.from_log_survival(log_sf)
}
