//! Monte Carlo driver: independent trials in parallel, reduced in index
//! order so aggregates are bit-identical for any thread count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::correlation::{correlation_process, levels_from_correlation, Mode};
use super::estimate::{joint_ml_estimate, ml_delay_estimate, surrogate_outcome, TrialOutcome};
use super::inversion::InversionTable;
use super::partition::{partition_empirical_with, LevelEnergy, PartitionSummary};
use super::rng::{mix, trial_seed};
use super::surrogate::{head_rng, sample_wrong_max, surrogate_sweep, wrong_count};
use super::wiener::WienerPath;
use super::TrueParams;
use crate::error::{Error, Result};
use crate::model::{GridSpec, SystemParams};
use crate::numeric::{fmt17, mean_std};

/// Default `K` budgets: the largest `K` a run may touch level by level.
pub const K_MAX_EXACT: f64 = 1e5;
pub const K_MAX_SURROGATE: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Delay,
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub trials: usize,
    pub mode: Mode,
    pub master_seed: u64,
    pub grid: GridSpec,
    /// Inverse temperatures at which to evaluate `ln Z`; may be empty. Joint
    /// estimation weighs levels by their amplitude-profiled energy.
    pub betas: Vec<f64>,
    pub estimator: Estimator,
    pub truth: TrueParams,
    /// Overrides the mode's default `K` budget.
    pub k_max: Option<f64>,
}

impl McConfig {
    pub fn new(trials: usize, mode: Mode, master_seed: u64) -> Self {
        McConfig {
            trials,
            mode,
            master_seed,
            grid: GridSpec::default(),
            betas: Vec::new(),
            estimator: Estimator::Delay,
            truth: TrueParams::default(),
            k_max: None,
        }
    }

    pub fn k_max(&self) -> f64 {
        self.k_max.unwrap_or(match self.mode {
            Mode::Exact => K_MAX_EXACT,
            Mode::Surrogate => K_MAX_SURROGATE,
        })
    }

    /// Whether a run at `params` must visit every level. Surrogate
    /// estimation without partition functions samples the maximum directly.
    pub fn touches_every_level(&self) -> bool {
        self.mode == Mode::Exact || !self.betas.is_empty()
    }

    pub fn check_budget(&self, params: &SystemParams) -> Result<()> {
        if self.touches_every_level() && params.k() > self.k_max() {
            return Err(Error::Budget {
                k: params.k(),
                k_max: self.k_max(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: u64,
    pub outcome: TrialOutcome,
    pub partitions: Vec<PartitionSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiStat {
    pub beta: f64,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub trials: usize,
    pub mode: Mode,
    pub master_seed: u64,
    pub k: f64,
    pub mse: f64,
    /// Mean squared error over non-anomalous trials; `None` if there are none.
    pub local_mse: Option<f64>,
    pub local_trials: usize,
    pub anomaly_rate: f64,
    /// Binomial standard error of `anomaly_rate`.
    pub anomaly_se: f64,
    pub alpha_hat_mean: f64,
    pub alpha_hat_median: f64,
    pub psi: Vec<PsiStat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub summary: McSummary,
    pub trials: Vec<TrialRecord>,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn run_trial(
    params: &SystemParams,
    config: &McConfig,
    index: u64,
    table: &InversionTable,
) -> Result<TrialRecord> {
    let seed = trial_seed(config.master_seed, index);
    let joint = config.estimator == Estimator::Joint;
    let energy = if joint {
        LevelEnergy::profile(params)
    } else {
        LevelEnergy::Correlation
    };
    let (outcome, partitions) = match config.mode {
        Mode::Exact => {
            let path = WienerPath::for_params(params, &config.grid, mix(seed, 0))?;
            let y = correlation_process(&path, params, &config.grid, &config.truth)?;
            let outcome = if joint {
                joint_ml_estimate(&y, params, &config.truth, seed)
            } else {
                ml_delay_estimate(&y, &config.truth, seed)
            };
            let partitions = if config.betas.is_empty() {
                Vec::new()
            } else {
                let levels = levels_from_correlation(&y);
                config
                    .betas
                    .iter()
                    .map(|&b| partition_empirical_with(&levels, b, energy))
                    .collect()
            };
            (outcome, partitions)
        }
        Mode::Surrogate => {
            let n = wrong_count(params);
            let mut rng = head_rng(seed);
            let (eps0, max_wrong, partitions) = if config.betas.is_empty() {
                let eps0 = super::surrogate::draw_eps0(params, &config.truth, &mut rng);
                let mut max_rng = super::rng::rng_from_seed(mix(seed, 1));
                (
                    eps0,
                    sample_wrong_max(n, params.sigma(), &mut max_rng, table),
                    Vec::new(),
                )
            } else {
                let sweep = surrogate_sweep(
                    params,
                    &config.truth,
                    n as u64,
                    &config.betas,
                    energy,
                    seed,
                    table,
                );
                // keep the position draw on the head stream, after ε0
                super::surrogate::draw_eps0(params, &config.truth, &mut rng);
                (sweep.eps0, sweep.max_wrong, sweep.partitions)
            };
            let outcome = surrogate_outcome(
                params,
                &config.truth,
                eps0,
                max_wrong,
                joint,
                &mut rng,
                seed,
            );
            (outcome, partitions)
        }
    };
    Ok(TrialRecord {
        index,
        outcome,
        partitions,
    })
}

/// Runs `config.trials` independent trials. Trial `i` uses only the stream
/// `trial_seed(master_seed, i)`; a failing trial aborts the run with that
/// seed in the error.
pub fn mc_run(params: &SystemParams, config: &McConfig) -> Result<McResult> {
    if config.trials == 0 {
        return Err(Error::domain("trials must be >= 1"));
    }
    config.truth.check(params)?;
    config.check_budget(params)?;
    let table = InversionTable::global();
    let results: Vec<Result<TrialRecord>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|i| {
            run_trial(params, config, i, table).map_err(|e| Error::Trial {
                index: i,
                seed: trial_seed(config.master_seed, i),
                source: Box::new(e),
            })
        })
        .collect();
    let trials = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(McResult {
        summary: summarize(params, config, &trials),
        trials,
    })
}

fn summarize(params: &SystemParams, config: &McConfig, trials: &[TrialRecord]) -> McSummary {
    let n = trials.len() as f64;
    let anomalies = trials.iter().filter(|t| t.outcome.anomalous).count();
    let anomaly_rate = anomalies as f64 / n;
    let mse = trials.iter().map(|t| t.outcome.sq_error).sum::<f64>() / n;
    let local: Vec<f64> = trials
        .iter()
        .filter(|t| !t.outcome.anomalous)
        .map(|t| t.outcome.sq_error)
        .collect();
    let local_mse = (!local.is_empty()).then(|| local.iter().sum::<f64>() / local.len() as f64);
    let mut alphas: Vec<f64> = trials.iter().map(|t| t.outcome.alpha_hat).collect();
    let alpha_hat_mean = alphas.iter().sum::<f64>() / n;
    let alpha_hat_median = median(&mut alphas);
    let psi = config
        .betas
        .iter()
        .enumerate()
        .map(|(j, &beta)| {
            let values: Vec<f64> = trials.iter().map(|t| t.partitions[j].psi_emp).collect();
            let (mean, std) = mean_std(&values);
            PsiStat {
                beta,
                mean,
                std,
                n: values.len(),
            }
        })
        .collect();
    McSummary {
        trials: trials.len(),
        mode: config.mode,
        master_seed: config.master_seed,
        k: params.k(),
        mse,
        local_mse,
        local_trials: local.len(),
        anomaly_rate,
        anomaly_se: (anomaly_rate * (1.0 - anomaly_rate) / n).sqrt(),
        alpha_hat_mean,
        alpha_hat_median,
        psi,
    }
}

/// Per-trial CSV: `trial_index,seed,m_hat,alpha_hat,sq_error,anomalous`,
/// then one `psi_emp` column per `β`.
pub fn write_trials_csv(
    result: &McResult,
    betas: &[f64],
    out: &mut dyn Write,
) -> std::io::Result<()> {
    write!(out, "trial_index,seed,m_hat,alpha_hat,sq_error,anomalous")?;
    for b in betas {
        write!(out, ",psi_emp_beta_{}", fmt17(*b))?;
    }
    writeln!(out)?;
    for t in &result.trials {
        let o = &t.outcome;
        write!(
            out,
            "{},{},{},{},{},{}",
            t.index,
            o.seed,
            fmt17(o.m_hat),
            fmt17(o.alpha_hat),
            fmt17(o.sq_error),
            o.anomalous
        )?;
        for p in &t.partitions {
            write!(out, ",{}", fmt17(p.psi_emp))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RawParams;

    fn params(r: f64) -> SystemParams {
        RawParams {
            r,
            ..RawParams::default()
        }
        .validate()
        .unwrap()
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let p = params(0.3);
        let mut config = McConfig::new(64, Mode::Exact, 11);
        config.betas = vec![0.5, 2.0];
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| mc_run(&p, &config)).unwrap();
        let b = four.install(|| mc_run(&p, &config)).unwrap();
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.trials, b.trials);
        config.mode = Mode::Surrogate;
        let a = one.install(|| mc_run(&p, &config)).unwrap();
        let b = four.install(|| mc_run(&p, &config)).unwrap();
        assert_eq!(a.trials, b.trials);
    }

    #[test]
    fn single_trial_summary_equals_trial() {
        let p = params(0.3);
        let mut config = McConfig::new(1, Mode::Exact, 3);
        config.betas = vec![1.0];
        let r = mc_run(&p, &config).unwrap();
        let t = &r.trials[0];
        assert_eq!(r.summary.mse, t.outcome.sq_error);
        assert_eq!(
            r.summary.anomaly_rate,
            if t.outcome.anomalous { 1.0 } else { 0.0 }
        );
        assert_eq!(r.summary.psi[0].mean, t.partitions[0].psi_emp);
    }

    #[test]
    fn budget_guard() {
        let p = params(1.5);
        let mut config = McConfig::new(4, Mode::Exact, 0);
        assert!(matches!(mc_run(&p, &config), Err(Error::Budget { .. })));
        config.mode = Mode::Surrogate;
        assert!(mc_run(&p, &config).is_ok());
        config.betas = vec![1.0];
        assert!(matches!(mc_run(&p, &config), Err(Error::Budget { .. })));
    }

    #[test]
    fn failed_trial_reports_its_seed() {
        let p = params(0.3);
        let mut config = McConfig::new(3, Mode::Exact, 9);
        config.truth = TrueParams {
            m0: 0.0,
            alpha0: 1.0,
        };
        config.grid = GridSpec {
            points_per_pulse: usize::MAX / 2,
        };
        let err = mc_run(&p, &config).unwrap_err();
        match err {
            Error::Trial { index, seed, .. } => {
                assert_eq!(index, 0);
                assert_eq!(seed, trial_seed(9, 0));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn high_snr_has_rare_anomalies() {
        // C T = 40 with R small: E(R)·T ≈ 19
        let raw = RawParams {
            t: 40.0,
            r: 0.05,
            m: 0.1,
            ..RawParams::default()
        };
        let p = raw.validate().unwrap();
        let r = mc_run(&p, &McConfig::new(1000, Mode::Exact, 1)).unwrap();
        assert!(r.summary.anomaly_rate < 0.01, "{}", r.summary.anomaly_rate);
    }

    #[test]
    fn anomaly_rate_rises_through_threshold() {
        let lo = mc_run(&params(0.3), &McConfig::new(200, Mode::Surrogate, 2)).unwrap();
        let hi = mc_run(&params(1.5), &McConfig::new(200, Mode::Surrogate, 2)).unwrap();
        assert!(hi.summary.anomaly_rate - lo.summary.anomaly_rate >= 0.7);
    }

    #[test]
    fn csv_has_one_row_per_trial() {
        let p = params(0.3);
        let mut config = McConfig::new(5, Mode::Surrogate, 4);
        config.betas = vec![1.0];
        let r = mc_run(&p, &config).unwrap();
        let mut buf = Vec::new();
        write_trials_csv(&r, &config.betas, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(
            text.starts_with("trial_index,seed,m_hat,alpha_hat,sq_error,anomalous,psi_emp_beta_")
        );
    }
}
