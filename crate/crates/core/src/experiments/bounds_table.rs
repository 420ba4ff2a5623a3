use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Verdict;
use crate::analytic::{error_exponent, ml_mse_exponent, wwb, wwb_exponent, BoundsConfig};
use crate::error::{Error, Result};
use crate::model::{GridSpec, RawParams};
use crate::simulate::{mc_run, McConfig, Mode};

/// Points `(C, R/C, T)`; `C` is realised as `P = C·N0` with the base `N0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsGrid {
    pub base: RawParams,
    pub capacities: Vec<f64>,
    pub rate_ratios: Vec<f64>,
    pub durations: Vec<f64>,
    /// Monte Carlo trials per point for the empirical MSE; 0 disables it.
    pub trials: usize,
    pub mode: Mode,
    pub master_seed: u64,
    pub grid: GridSpec,
}

impl BoundsGrid {
    pub fn new(
        base: RawParams,
        capacities: Vec<f64>,
        rate_ratios: Vec<f64>,
        durations: Vec<f64>,
    ) -> Self {
        BoundsGrid {
            base,
            capacities,
            rate_ratios,
            durations,
            trials: 0,
            mode: Mode::Surrogate,
            master_seed: 0,
            grid: GridSpec::default(),
        }
    }
}

/// Where the two exponents stand relative to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `R ≤ C/6`: both are `2R`.
    Agree,
    /// `C/6 < R < C`: the bound keeps `2R` or `C/2` while ML follows `E(R)`.
    Differ,
    /// `R ≥ C`: the bound saturates at `C/2`, the ML exponent vanishes.
    AboveCapacity,
}

impl Regime {
    pub fn of(r: f64, c: f64) -> Self {
        if r <= c / 6.0 {
            Regime::Agree
        } else if r < c {
            Regime::Differ
        } else {
            Regime::AboveCapacity
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub c: f64,
    pub r: f64,
    pub t: f64,
    pub k: f64,
    pub wwb: f64,
    /// `−ln(WWB)/T`.
    pub wwb_rate: f64,
    pub wwb_exponent: f64,
    pub ml_mse_exponent: f64,
    pub error_exponent: f64,
    pub regime: Regime,
    /// `|wwb_rate − wwb_exponent| / wwb_exponent`; `None` at `R = 0`.
    pub relative_gap: Option<f64>,
    pub empirical_mse: Option<f64>,
    pub anomaly_rate: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsComparison {
    pub grid: BoundsGrid,
    pub rows: Vec<BoundsRow>,
    pub verdicts: Vec<Verdict>,
}

fn row(grid: &BoundsGrid, c: f64, ratio: f64, t: f64) -> Result<BoundsRow> {
    let r = ratio * c;
    let raw = RawParams {
        p: c * grid.base.n0,
        r,
        t,
        ..grid.base
    };
    let params = raw.validate()?;
    let value = wwb(&params, &BoundsConfig::for_params(&params))?;
    let wwb_exp = wwb_exponent(r, c);
    let wwb_rate = -value.ln() / t;
    let mut out = BoundsRow {
        c,
        r,
        t,
        k: params.k(),
        wwb: value,
        wwb_rate,
        wwb_exponent: wwb_exp,
        ml_mse_exponent: ml_mse_exponent(r, c),
        error_exponent: error_exponent(r, c)?,
        regime: Regime::of(r, c),
        relative_gap: (wwb_exp > 0.0).then(|| (wwb_rate - wwb_exp).abs() / wwb_exp),
        empirical_mse: None,
        anomaly_rate: None,
        skipped: None,
    };
    if grid.trials > 0 {
        let mut config = McConfig::new(grid.trials, grid.mode, grid.master_seed);
        config.grid = grid.grid;
        match mc_run(&params, &config) {
            Ok(result) => {
                out.empirical_mse = Some(result.summary.mse);
                out.anomaly_rate = Some(result.summary.anomaly_rate);
            }
            Err(e @ Error::Budget { .. }) => out.skipped = Some(e.to_string()),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn verdicts(rows: &[BoundsRow]) -> Vec<Verdict> {
    let mut out = Vec::new();
    let mut check = |name: &str, regime: Regime, holds: &dyn Fn(&BoundsRow) -> bool, what: &str| {
        let selected: Vec<&BoundsRow> = rows.iter().filter(|r| r.regime == regime).collect();
        if selected.is_empty() {
            return;
        }
        let bad: Vec<String> = selected
            .iter()
            .filter(|r| !holds(r))
            .map(|r| {
                format!(
                    "(C={}, R={}): WWB {} vs ML {}",
                    r.c, r.r, r.wwb_exponent, r.ml_mse_exponent
                )
            })
            .collect();
        out.push(Verdict::new(
            name,
            bad.is_empty(),
            if bad.is_empty() {
                format!("{} rows: {what}", selected.len())
            } else {
                bad.join("; ")
            },
        ));
    };
    check(
        "small-rate-agreement",
        Regime::Agree,
        &|r| {
            r.wwb_exponent == r.ml_mse_exponent && (r.wwb_exponent - 2.0 * r.r).abs() <= 1e-15 * r.c
        },
        "both exponents equal 2R",
    );
    check(
        "mid-range-difference",
        Regime::Differ,
        &|r| r.wwb_exponent != r.ml_mse_exponent,
        "the exponents differ",
    );
    check(
        "large-rate-disagreement",
        Regime::AboveCapacity,
        &|r| r.wwb_exponent == r.c / 2.0 && r.ml_mse_exponent == 0.0,
        "WWB exponent C/2, ML exponent 0",
    );
    let t_max = rows.iter().map(|r| r.t).fold(f64::NEG_INFINITY, f64::max);
    let outer: Vec<&BoundsRow> = rows
        .iter()
        .filter(|r| r.t == t_max && r.regime != Regime::Differ)
        .filter(|r| r.relative_gap.is_some())
        .collect();
    if !outer.is_empty() {
        let detail: Vec<String> = outer
            .iter()
            .map(|r| {
                format!(
                    "(C={}, R={}): rate {:.4} vs {}",
                    r.c, r.r, r.wwb_rate, r.wwb_exponent
                )
            })
            .collect();
        out.push(Verdict::new(
            "numeric-rate",
            outer
                .iter()
                .all(|r| r.relative_gap.is_some_and(|g| g < 0.2)),
            format!("T = {t_max}: {}", detail.join("; ")),
        ));
    }
    out
}

/// Tabulates the Weiss–Weinstein bound against the ML exponents over a grid
/// and checks where they agree. Points whose `K` exceeds the Monte Carlo
/// budget keep their analytic columns and record the skip.
pub fn compare_bounds(grid: &BoundsGrid) -> Result<BoundsComparison> {
    if grid.capacities.is_empty() || grid.rate_ratios.is_empty() || grid.durations.is_empty() {
        return Err(Error::domain("bounds grid axes must be nonempty"));
    }
    let points: Vec<(f64, f64, f64)> = grid
        .capacities
        .iter()
        .flat_map(|&c| {
            grid.rate_ratios
                .iter()
                .flat_map(move |&q| grid.durations.iter().map(move |&t| (c, q, t)))
        })
        .collect();
    let rows = points
        .par_iter()
        .map(|&(c, q, t)| row(grid, c, q, t))
        .collect::<Result<Vec<_>>>()?;
    let verdicts = verdicts(&rows);
    Ok(BoundsComparison {
        grid: grid.clone(),
        rows,
        verdicts,
    })
}
