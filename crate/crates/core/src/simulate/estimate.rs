//! ML delay and joint amplitude+delay estimators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::correlation::CorrelationProcess;
use super::TrueParams;
use crate::model::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub m_hat: f64,
    /// One in delay-only estimation.
    pub alpha_hat: f64,
    pub sq_error: f64,
    /// `|m_hat − m0| > Δ/T`.
    pub anomalous: bool,
    pub seed: u64,
}

/// Index of the first maximum.
fn first_argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn outcome_at(
    y: &CorrelationProcess,
    i: usize,
    alpha_hat: f64,
    truth: &TrueParams,
    seed: u64,
) -> TrialOutcome {
    let m_hat = y.m_at(i);
    TrialOutcome {
        m_hat,
        alpha_hat,
        sq_error: (m_hat - truth.m0).powi(2),
        anomalous: y.is_anomalous(i),
        seed,
    }
}

/// Maximum-correlation delay estimate: the first grid argmax of `y`.
pub fn ml_delay_estimate(y: &CorrelationProcess, truth: &TrueParams, seed: u64) -> TrialOutcome {
    let i = first_argmax(y.values().iter().copied());
    outcome_at(y, i, 1.0, truth, seed)
}

/// Amplitude maximising `α y − α² E/2` over the range: `clamp(y/E)`.
pub fn best_amplitude(y: f64, params: &SystemParams) -> f64 {
    params.amplitudes().clamp(y / params.energy())
}

/// Joint estimate: `m_hat` maximises `max_α (α y(m) − α² E/2)` and
/// `alpha_hat` is the inner maximiser at `m_hat`.
pub fn joint_ml_estimate(
    y: &CorrelationProcess,
    params: &SystemParams,
    truth: &TrueParams,
    seed: u64,
) -> TrialOutcome {
    let e = params.energy();
    let profile = |v: f64| {
        let a = best_amplitude(v, params);
        a * v - a * a * e / 2.0
    };
    let i = first_argmax(y.values().iter().map(|&v| profile(v)));
    outcome_at(y, i, best_amplitude(y.values()[i], params), truth, seed)
}

/// Delay of an anomalous estimate when only its level is known: uniform over
/// `[-M, M]` minus the correct region `[m0 − Δ/T, m0 + Δ/T)`.
pub fn anomalous_position(params: &SystemParams, truth: &TrueParams, rng: &mut impl Rng) -> f64 {
    let m = params.m();
    let w = params.delta() / params.t();
    let lo = (truth.m0 - w).max(-m);
    let hi = (truth.m0 + w).min(m);
    let free = 2.0 * m - (hi - lo);
    let v = -m + rng.random::<f64>() * free;
    if v >= lo {
        v + (hi - lo)
    } else {
        v
    }
}

/// Outcome when the estimator only sees `ε0` and the largest wrong level:
/// the larger wins (ties go to the correct region). A correct-region win is
/// recorded as `m_hat = m0` exactly.
pub fn surrogate_outcome(
    params: &SystemParams,
    truth: &TrueParams,
    eps0: f64,
    max_wrong: f64,
    joint: bool,
    rng: &mut impl Rng,
    seed: u64,
) -> TrialOutcome {
    let anomalous = max_wrong > eps0;
    let winner = if anomalous { max_wrong } else { eps0 };
    let m_hat = if anomalous {
        anomalous_position(params, truth, rng)
    } else {
        truth.m0
    };
    TrialOutcome {
        m_hat,
        alpha_hat: if joint {
            best_amplitude(winner, params)
        } else {
            1.0
        },
        sq_error: (m_hat - truth.m0).powi(2),
        anomalous,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AmplitudePolicy, GridSpec, RawParams};
    use crate::simulate::correlation::correlation_process;
    use crate::simulate::rng::rng_from_seed;
    use crate::simulate::wiener::WienerPath;

    fn params() -> SystemParams {
        RawParams {
            r: 0.05,
            ..RawParams::default()
        }
        .validate()
        .unwrap()
    }

    #[test]
    fn zero_noise_recovers_truth_at_every_resolution() {
        let p = params();
        for g in [2, 3, 8, 33] {
            let grid = GridSpec::new(g).unwrap();
            let path = WienerPath::zero_for_params(&p, &grid).unwrap();
            let y = correlation_process(&path, &p, &grid, &TrueParams::default()).unwrap();
            let ml = ml_delay_estimate(&y, &TrueParams::default(), 0);
            assert_eq!((ml.m_hat, ml.sq_error, ml.anomalous), (0.0, 0.0, false));
            let joint = joint_ml_estimate(&y, &p, &TrueParams::default(), 0);
            assert_eq!((joint.m_hat, joint.alpha_hat), (0.0, 1.0));
        }
    }

    #[test]
    fn constructed_spike_is_found() {
        let p = params();
        let grid = GridSpec::new(8).unwrap();
        let truth = TrueParams::default();
        let path = WienerPath::zero_for_params(&p, &grid).unwrap();
        let mut values = correlation_process(&path, &p, &grid, &truth)
            .unwrap()
            .values()
            .to_vec();
        let n = values.len();
        let target = n / 2 + 3 * 8;
        values[target] = 2.0 * p.energy();
        let y = CorrelationProcess::from_values(&p, &grid, &truth, values).unwrap();
        let ml = ml_delay_estimate(&y, &truth, 0);
        assert!((ml.m_hat - 3.0 * p.delta() / p.t()).abs() < 1e-12);
        assert!(ml.anomalous);
        // boundary: exactly one width away is not anomalous
        let mut edge = vec![0.0; n];
        edge[n / 2 + 8] = 1.0;
        let y = CorrelationProcess::from_values(&p, &grid, &truth, edge).unwrap();
        assert!(!ml_delay_estimate(&y, &truth, 0).anomalous);
    }

    #[test]
    fn amplitude_clamps() {
        let raw = RawParams {
            r: 0.05,
            alpha_min: 0.5,
            alpha_max: 1.5,
            ..RawParams::default()
        };
        let p = SystemParams::validate_with(&raw, AmplitudePolicy::Unchecked).unwrap();
        assert_eq!(best_amplitude(2.0 * p.energy(), &p), 1.5);
        assert_eq!(best_amplitude(0.0, &p), 0.5);
        assert_eq!(best_amplitude(1.2 * p.energy(), &p), 1.2);
        let grid = GridSpec::new(4).unwrap();
        let truth = TrueParams::default();
        let path = WienerPath::zero_for_params(&p, &grid).unwrap();
        let mut values = correlation_process(&path, &p, &grid, &truth)
            .unwrap()
            .values()
            .to_vec();
        let n = values.len();
        values[n / 2 + 12] = 2.0 * p.energy();
        let y = CorrelationProcess::from_values(&p, &grid, &truth, values).unwrap();
        let joint = joint_ml_estimate(&y, &p, &truth, 0);
        assert_eq!(joint.alpha_hat, 1.5);
        assert!(joint.anomalous);
    }

    #[test]
    fn joint_and_delay_estimates_share_the_argmax() {
        // the profile max_α(αy − α²E/2) is increasing in y
        let p = params();
        let grid = GridSpec::new(8).unwrap();
        for seed in 0..50 {
            let path = WienerPath::for_params(&p, &grid, seed).unwrap();
            let y = correlation_process(&path, &p, &grid, &TrueParams::default()).unwrap();
            let a = ml_delay_estimate(&y, &TrueParams::default(), seed);
            let b = joint_ml_estimate(&y, &p, &TrueParams::default(), seed);
            assert_eq!(a.m_hat, b.m_hat);
        }
    }

    #[test]
    fn anomalous_positions_avoid_the_correct_region() {
        let p = params();
        let mut rng = rng_from_seed(4);
        let w = p.delta() / p.t();
        let mut sum = 0.0;
        for _ in 0..20_000 {
            let m = anomalous_position(&p, &TrueParams::default(), &mut rng);
            assert!(m.abs() <= p.m() && !(-w..w).contains(&m));
            sum += m;
        }
        assert!((sum / 20_000.0).abs() < 0.01);
    }
}
