//! Error exponents, the Weiss–Weinstein lower bound and the high-SNR
//! background MSE formulas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::numeric::golden_max;

fn check_rate(r: f64, c: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::domain(format!("C must be finite and > 0 (got {c})")));
    }
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::domain(format!(
            "R must be finite and >= 0 (got {r})"
        )));
    }
    Ok(())
}

fn exponent_unchecked(r: f64, c: f64) -> f64 {
    if r < c / 4.0 {
        c / 2.0 - r
    } else if r < c {
        (c.sqrt() - r.sqrt()).powi(2)
    } else {
        0.0
    }
}

/// Reliability function of orthogonal signalling over the infinite-bandwidth
/// AWGN channel: `C/2 − R`, then `(√C − √R)²` from `C/4`, zero from `C`.
pub fn error_exponent(r: f64, c: f64) -> Result<f64> {
    check_rate(r, c)?;
    Ok(exponent_unchecked(r, c))
}

/// Exponential decay rate of the ML mean-square error: `2R` below `C/6`,
/// `E(R)` up to `C`, zero beyond. Requires `R >= 0`, `C > 0`.
pub fn ml_mse_exponent(r: f64, c: f64) -> f64 {
    if r < c / 6.0 {
        2.0 * r
    } else {
        exponent_unchecked(r, c)
    }
}

/// Exponential decay rate of the Weiss–Weinstein bound: `2R` below `C/4`,
/// `C/2` beyond.
pub fn wwb_exponent(r: f64, c: f64) -> f64 {
    if r < c / 4.0 {
        2.0 * r
    } else {
        c / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsConfig {
    /// Mean-square error of an anomalous estimate in the total-MSE formula.
    pub b: f64,
    /// Points in each of the two `h` search grids.
    pub wwb_h_grid: usize,
}

impl BoundsConfig {
    pub const MIN_H_GRID: usize = 1000;

    pub fn new(b: f64, wwb_h_grid: usize) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::domain(format!("B must be finite and > 0 (got {b})")));
        }
        if wwb_h_grid < Self::MIN_H_GRID {
            return Err(Error::domain(format!(
                "wwb_h_grid must be >= {} (got {wwb_h_grid})",
                Self::MIN_H_GRID
            )));
        }
        Ok(BoundsConfig { b, wwb_h_grid })
    }

    /// `B = M²/3`: an anomalous estimate is roughly uniform on `[-M, M]`.
    pub fn for_params(params: &SystemParams) -> Self {
        BoundsConfig {
            b: params.m() * params.m() / 3.0,
            wwb_h_grid: 4096,
        }
    }
}

/// Logarithm of the bound's objective at trial shift `h`; `None` where the
/// denominator vanishes.
fn wwb_log_objective(h: f64, t: f64, delta: f64, c: f64) -> Option<f64> {
    if !(h > 0.0) || h >= t {
        return None;
    }
    let decay = (h / delta).min(1.0) * c * t / 2.0;
    let log_num = 2.0 * h.ln() + 2.0 * (1.0 - h / t).ln() - decay;
    let overlap = 1.0 - 2.0 * h / t;
    let den = if overlap > 0.0 {
        2.0 * -(overlap.ln() - decay).exp_m1()
    } else {
        2.0
    };
    (den > 0.0).then(|| log_num - den.ln())
}

/// Weiss–Weinstein bound for a rectangular pulse of width `delta` in a
/// window of length `t` at capacity `c`, maximised over `h` by grid search
/// and golden-section refinement.
pub fn wwb_value(t: f64, delta: f64, c: f64, config: &BoundsConfig) -> Result<f64> {
    let n = config.wwb_h_grid.max(BoundsConfig::MIN_H_GRID);
    let lo = delta * 1e-12;
    let log_grid = (0..n).map(|i| lo * (delta / lo).powf(i as f64 / (n - 1) as f64));
    let lin_grid = (0..n).map(|i| delta + (t - delta) * i as f64 / (n - 1) as f64);
    let grid: Vec<f64> = log_grid
        .chain(lin_grid)
        .filter(|&h| h > 0.0 && h <= t)
        .collect();
    let objective = |h: f64| wwb_log_objective(h, t, delta, c).unwrap_or(f64::NEG_INFINITY);
    let (best, best_val) = grid
        .iter()
        .enumerate()
        .map(|(i, &h)| (i, objective(h)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Numerical("empty WWB search grid".into()))?;
    if best_val == f64::NEG_INFINITY {
        return Err(Error::Numerical(
            "WWB denominator underflows to zero at every grid point".into(),
        ));
    }
    let left = grid[best.saturating_sub(1)];
    let right = grid[(best + 1).min(grid.len() - 1)];
    let (_, refined) = golden_max(objective, left, right, 200);
    Ok(refined.max(best_val).exp())
}

pub fn wwb(params: &SystemParams, config: &BoundsConfig) -> Result<f64> {
    wwb_value(params.t(), params.delta(), params.capacity(), config)
}

/// Closed-form MSE floors of the high-SNR regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackgroundMse {
    /// Linear modulation: `N0 / 2E`.
    Linear { n0: f64, energy: f64 },
    /// Delay estimation: `N0 / (2 W² E)` with Gabor bandwidth `W`.
    Gabor {
        n0: f64,
        bandwidth: f64,
        energy: f64,
    },
    /// Signal-locus form `2 N0 M² / L²`.
    Locus { n0: f64, m: f64, length: f64 },
    /// Local error plus anomalies: `N0 / (2W²E) + B K e^{−E/(2N0)}`.
    Total {
        n0: f64,
        bandwidth: f64,
        energy: f64,
        b: f64,
        k: f64,
    },
}

/// Locus length `L = 2M √Ė` for a delay range `[-M, M]`.
pub fn locus_length(m: f64, energy_derivative: f64) -> f64 {
    2.0 * m * energy_derivative.sqrt()
}

pub fn background_mse(kind: &BackgroundMse) -> Result<f64> {
    let positive = |name: &str, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(Error::domain(format!(
                "{name} must be finite and > 0 (got {v})"
            )))
        }
    };
    match *kind {
        BackgroundMse::Linear { n0, energy } => {
            Ok(positive("N0", n0)? / (2.0 * positive("E", energy)?))
        }
        BackgroundMse::Gabor {
            n0,
            bandwidth,
            energy,
        } => Ok(positive("N0", n0)?
            / (2.0 * positive("W", bandwidth)?.powi(2) * positive("E", energy)?)),
        BackgroundMse::Locus { n0, m, length } => {
            Ok(2.0 * positive("N0", n0)? * positive("M", m)?.powi(2)
                / positive("L", length)?.powi(2))
        }
        BackgroundMse::Total {
            n0,
            bandwidth,
            energy,
            b,
            k,
        } => {
            let local = background_mse(&BackgroundMse::Gabor {
                n0,
                bandwidth,
                energy,
            })?;
            Ok(local + positive("B", b)? * positive("K", k)? * (-energy / (2.0 * n0)).exp())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RawParams;
    use proptest::prelude::*;

    #[test]
    fn error_exponent_examples() {
        assert_eq!(error_exponent(0.0, 1.0).unwrap(), 0.5);
        assert!((error_exponent(0.25, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((error_exponent(1.0 / 6.0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(error_exponent(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(error_exponent(3.0, 1.0).unwrap(), 0.0);
        assert!(error_exponent(0.1, 0.0).unwrap_err().is_domain());
        assert!(error_exponent(-0.1, 1.0).is_err());
    }

    #[test]
    fn exponent_examples() {
        assert!((wwb_exponent(0.2, 1.0) - 0.4).abs() < 1e-15);
        assert_eq!(wwb_exponent(1.0, 1.0), 0.5);
        assert!((ml_mse_exponent(0.05, 1.0) - 0.1).abs() < 1e-15);
        let sixth = 1.0 / 6.0;
        assert!((ml_mse_exponent(sixth, 1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((ml_mse_exponent(sixth - 1e-12, 1.0) - 1.0 / 3.0).abs() < 1e-11);
        assert_eq!(ml_mse_exponent(1.0, 1.0), 0.0);
        assert!(ml_mse_exponent(1.0 - 1e-9, 1.0) < 1e-9);
    }

    #[test]
    fn exponents_agree_in_the_outer_regimes() {
        for r in [0.0, 0.05, 0.1, 0.16] {
            assert_eq!(wwb_exponent(r, 1.0), ml_mse_exponent(r, 1.0));
        }
        for r in [1.0, 1.5, 4.0] {
            assert_eq!(wwb_exponent(r, 1.0), 0.5);
            assert_eq!(ml_mse_exponent(r, 1.0), 0.0);
        }
    }

    /// Brute-force oracle: dense linear-domain evaluation of the objective.
    fn wwb_oracle(t: f64, delta: f64, c: f64) -> f64 {
        let n = 2_000_000;
        let f = |h: f64| {
            let e = (-(h / delta).min(1.0) * c * t / 2.0).exp();
            h * h * (1.0 - h / t).max(0.0).powi(2) * e
                / (2.0 * (1.0 - (1.0 - 2.0 * h / t).max(0.0) * e))
        };
        let grid = (1..=n).map(|i| delta * i as f64 / n as f64);
        let coarse = (1..=n).map(|i| t * i as f64 / n as f64);
        grid.chain(coarse)
            .map(f)
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max)
    }

    #[test]
    fn wwb_matches_dense_oracle() {
        let config = BoundsConfig::new(1.0, 4096).unwrap();
        for (t, delta, c) in [(10.0, 0.3, 1.0), (10.0, 0.01, 1.0), (20.0, 1e-3, 2.0)] {
            let fast = wwb_value(t, delta, c, &config).unwrap();
            let dense = wwb_oracle(t, delta, c);
            assert!(
                (fast / dense - 1.0).abs() < 1e-4,
                "{t} {delta} {c}: {fast} vs {dense}"
            );
            assert!(fast >= dense * (1.0 - 1e-9));
        }
    }

    #[test]
    fn wwb_at_reference_parameters() {
        let raw = RawParams {
            t: 40.0,
            r: 2.0,
            ..RawParams::default()
        };
        let p = raw.validate().unwrap();
        let config = BoundsConfig::for_params(&p);
        assert!((config.b - 0.16 / 3.0).abs() < 1e-15);
        let w = wwb(&p, &config).unwrap();
        assert!(w > 0.0 && w.is_finite());
        // below e^{-CT/2} at most by polynomial factors
        let rate = -w.ln() / 40.0;
        assert!(rate > 0.3 && rate < 0.6, "{rate}");
    }

    #[test]
    fn config_validation() {
        assert!(BoundsConfig::new(0.0, 2000).is_err());
        assert!(BoundsConfig::new(1.0, 999).is_err());
        assert!(BoundsConfig::new(1.0, 1000).is_ok());
    }

    #[test]
    fn background_examples() {
        let lin = background_mse(&BackgroundMse::Linear {
            n0: 2.0,
            energy: 10.0,
        })
        .unwrap();
        assert!((lin - 0.1).abs() < 1e-15);
        let (n0, m, w, e) = (2.0, 0.4, 1.7, 20.0);
        let gabor = background_mse(&BackgroundMse::Gabor {
            n0,
            bandwidth: w,
            energy: e,
        })
        .unwrap();
        let locus = background_mse(&BackgroundMse::Locus {
            n0,
            m,
            length: locus_length(m, w * w * e),
        })
        .unwrap();
        assert!((gabor - locus).abs() < 1e-15);
        let b = m * m / 3.0;
        let total = background_mse(&BackgroundMse::Total {
            n0: 2.0,
            bandwidth: 1.0,
            energy: 20.0,
            b,
            k: 100.0,
        })
        .unwrap();
        assert!((total - (0.05 + b * 100.0 * (-5f64).exp())).abs() < 1e-15);
        assert!(background_mse(&BackgroundMse::Linear {
            n0: 0.0,
            energy: 1.0
        })
        .unwrap_err()
        .is_domain());
    }

    proptest! {
        #[test]
        fn exponents_nonincreasing_and_continuous(r in 0.0f64..3.0, dr in 0.0f64..0.5, c in 0.1f64..4.0) {
            let e = |r| error_exponent(r, c).unwrap();
            prop_assert!(e(r + dr) <= e(r) + 1e-15);
            // the ML exponent rises as 2R up to C/6 and only falls beyond
            if r >= c / 6.0 {
                prop_assert!(ml_mse_exponent(r + dr, c) <= ml_mse_exponent(r, c) + 1e-15);
            }
            let h = 1e-9;
            prop_assert!((e(r + h) - e(r)).abs() < 1e-6);
            prop_assert!((ml_mse_exponent(r + h, c) - ml_mse_exponent(r, c)).abs() < 1e-6);
            if r >= c { prop_assert_eq!(e(r), 0.0); }
        }
    }
}
