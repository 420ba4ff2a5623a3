//! Domain types shared by every other module: validated system parameters,
//! the rectangular pulse and the correlation grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the amplitude mean-square normalization.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Power and noise level; the only inputs most closed forms need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    /// Signal power (energy per unit time).
    pub p: f64,
    /// Noise level; the white noise has two-sided spectral density `n0 / 2`.
    pub n0: f64,
}

impl Channel {
    pub fn new(p: f64, n0: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::domain(format!("P must be finite and > 0 (got {p})")));
        }
        if !(n0.is_finite() && n0 > 0.0) {
            return Err(Error::domain(format!(
                "N0 must be finite and > 0 (got {n0})"
            )));
        }
        Ok(Channel { p, n0 })
    }

    /// Infinite-bandwidth AWGN capacity `C = P / N0`.
    pub fn capacity(&self) -> f64 {
        self.p / self.n0
    }

    /// The inverse temperature of the true posterior, `2 / N0`.
    pub fn posterior_beta(&self) -> f64 {
        2.0 / self.n0
    }
}

/// Amplitude search range `[min, max]`.
///
/// The analytic module accepts the degenerate limits `min = 0` and
/// `max = +inf`; [`SystemParams`] additionally requires `min > 0`, a finite
/// `max` and (by default) unit mean-square amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRange {
    pub min: f64,
    pub max: f64,
}

impl AmplitudeRange {
    /// Single-parameter mode: the amplitude is known to be one.
    pub const FIXED: AmplitudeRange = AmplitudeRange { min: 1.0, max: 1.0 };

    pub fn new(min: f64, max: f64) -> Result<Self> {
        if min.is_nan() || max.is_nan() || !(0.0..=1.0).contains(&min) || max < 1.0 {
            return Err(Error::domain(format!(
                "amplitude range requires 0 <= alpha_min <= 1 <= alpha_max (got [{min}, {max}])"
            )));
        }
        Ok(AmplitudeRange { min, max })
    }

    /// The range `[min, max]` whose uniform mean-square amplitude is one:
    /// `max² + max·min + min² = 3`.
    pub fn normalized(min: f64) -> Result<Self> {
        if !(min > 0.0 && min <= 1.0) {
            return Err(Error::domain(format!(
                "normalized range needs 0 < alpha_min <= 1 (got {min})"
            )));
        }
        let max = 0.5 * (-min + (12.0 - 3.0 * min * min).sqrt());
        Ok(AmplitudeRange { min, max })
    }

    pub fn is_fixed(&self) -> bool {
        self.min == self.max
    }

    pub fn contains(&self, alpha: f64) -> bool {
        alpha >= self.min && alpha <= self.max
    }

    pub fn clamp(&self, alpha: f64) -> f64 {
        alpha.clamp(self.min, self.max)
    }

    /// `(1/(max-min)) ∫ α² dα` over the range; `None` for a degenerate or
    /// unbounded range.
    pub fn mean_square(&self) -> Option<f64> {
        if self.is_fixed() || !self.max.is_finite() {
            return None;
        }
        let (a, b) = (self.min, self.max);
        Some((a * a + a * b + b * b) / 3.0)
    }
}

/// Unvalidated model parameters, keyed exactly as in parameter files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "N0")]
    pub n0: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "Delta0")]
    pub delta0: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(default = "one")]
    pub alpha_min: f64,
    #[serde(default = "one")]
    pub alpha_max: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for RawParams {
    /// The reference configuration used throughout the tests and docs:
    /// `P = N0 = 2` (so `C = 1`), `T = 10`, `Delta0 = 1`, `R = 0.5`, `M = 0.4`.
    fn default() -> Self {
        RawParams {
            p: 2.0,
            n0: 2.0,
            t: 10.0,
            delta0: 1.0,
            r: 0.5,
            m: 0.4,
            alpha_min: 1.0,
            alpha_max: 1.0,
        }
    }
}

impl RawParams {
    pub fn validate(&self) -> Result<SystemParams> {
        SystemParams::validate(self)
    }

    pub fn with_duration(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn with_rate(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    pub fn with_amplitudes(mut self, range: AmplitudeRange) -> Self {
        self.alpha_min = range.min;
        self.alpha_max = range.max;
        self
    }
}

/// Whether [`SystemParams`] enforces unit mean-square amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudePolicy {
    Normalized,
    /// Accept any `0 < alpha_min <= 1 <= alpha_max`. Only the `Z0` energy
    /// bookkeeping relies on the normalization; estimators merely clamp.
    Unchecked,
}

/// Validated parameters with every derived quantity cached.
///
/// `K` is rounded to the nearest even integer and `Δ` re-derived as
/// `2MT/K`, so the interval partition of `[-M, M]` is exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    raw: RawParams,
    capacity: f64,
    energy: f64,
    delta: f64,
    k: f64,
    k_raw: f64,
}

impl SystemParams {
    pub fn validate(raw: &RawParams) -> Result<Self> {
        Self::validate_with(raw, AmplitudePolicy::Normalized)
    }

    pub fn validate_with(raw: &RawParams, policy: AmplitudePolicy) -> Result<Self> {
        let channel = Channel::new(raw.p, raw.n0)?;
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::domain(format!(
                    "{name} must be finite and > 0 (got {v})"
                )))
            }
        };
        positive("T", raw.t)?;
        positive("Delta0", raw.delta0)?;
        if !(raw.r.is_finite() && raw.r >= 0.0) {
            return Err(Error::domain(format!(
                "R must be finite and >= 0 (got {})",
                raw.r
            )));
        }
        if !(raw.m > 0.0 && raw.m < 0.5) {
            return Err(Error::domain(format!(
                "M must lie in (0, 1/2) (got {})",
                raw.m
            )));
        }
        let (a_min, a_max) = (raw.alpha_min, raw.alpha_max);
        if !(a_min > 0.0 && a_min <= 1.0 && a_max >= 1.0 && a_max.is_finite()) {
            return Err(Error::domain(format!(
                "amplitude range requires 0 < alpha_min <= 1 <= alpha_max < inf (got [{a_min}, {a_max}])"
            )));
        }
        let amplitudes = AmplitudeRange {
            min: a_min,
            max: a_max,
        };
        if policy == AmplitudePolicy::Normalized {
            if let Some(ms) = amplitudes.mean_square() {
                if (ms - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(Error::domain(format!(
                        "amplitude normalization violated: ∫α²dα/(alpha_max − alpha_min) = {ms} != 1"
                    )));
                }
            }
        }

        let span = 2.0 * raw.m * raw.t;
        let k_raw = span / raw.delta0 * (raw.r * raw.t).exp();
        if !k_raw.is_finite() {
            return Err(Error::domain(format!(
                "K = 2MT/Delta0·e^(RT) overflows (RT = {})",
                raw.r * raw.t
            )));
        }
        let k = 2.0 * (k_raw / 2.0).round();
        if k < 2.0 {
            return Err(Error::domain(format!("K = {k_raw} rounds below 2")));
        }
        if k != k_raw {
            log::debug!("K rounded from {k_raw} to even {k}; Δ re-derived as 2MT/K");
        }
        let delta = span / k;
        let m_limit = 0.5 - delta / raw.t;
        if raw.m > m_limit {
            return Err(Error::domain(format!(
                "M exceeds 1/2 − Δ/T = {m_limit} (M = {}): pulse support leaves the window",
                raw.m
            )));
        }

        Ok(SystemParams {
            raw: *raw,
            capacity: channel.capacity(),
            energy: raw.p * raw.t,
            delta,
            k,
            k_raw,
        })
    }

    pub fn raw(&self) -> RawParams {
        self.raw
    }
    pub fn p(&self) -> f64 {
        self.raw.p
    }
    pub fn n0(&self) -> f64 {
        self.raw.n0
    }
    pub fn t(&self) -> f64 {
        self.raw.t
    }
    pub fn delta0(&self) -> f64 {
        self.raw.delta0
    }
    pub fn r(&self) -> f64 {
        self.raw.r
    }
    pub fn m(&self) -> f64 {
        self.raw.m
    }
    pub fn alpha_min(&self) -> f64 {
        self.raw.alpha_min
    }
    pub fn alpha_max(&self) -> f64 {
        self.raw.alpha_max
    }

    /// `C = P / N0`.
    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// `E = P T`.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Pulse width `Δ = 2MT / K` (≈ `Delta0 e^{-RT}` before rounding).
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of width-`Δ/T` sub-intervals of `[-M, M]`; an even integer.
    pub fn k(&self) -> f64 {
        self.k
    }

    /// `K` before rounding.
    pub fn k_raw(&self) -> f64 {
        self.k_raw
    }

    /// `K` as a count, when it fits in memory-addressable range.
    pub fn k_count(&self) -> Option<usize> {
        (self.k <= (1u64 << 52) as f64).then_some(self.k as usize)
    }

    /// Rate actually realised after rounding `K`: `ln(K Delta0 / 2MT) / T`.
    pub fn effective_rate(&self) -> f64 {
        (self.k * self.raw.delta0 / (2.0 * self.raw.m * self.raw.t)).ln() / self.raw.t
    }

    /// Standard deviation of every noise correlation sample, `sqrt(N0 P T / 2)`.
    pub fn sigma(&self) -> f64 {
        (0.5 * self.raw.n0 * self.energy).sqrt()
    }

    pub fn channel(&self) -> Channel {
        Channel {
            p: self.raw.p,
            n0: self.raw.n0,
        }
    }

    pub fn amplitudes(&self) -> AmplitudeRange {
        AmplitudeRange {
            min: self.raw.alpha_min,
            max: self.raw.alpha_max,
        }
    }

    pub fn pulse(&self) -> RectangularPulse {
        RectangularPulse::new(self)
    }
}

/// `s(t) = sqrt(E/Δ)` on `|t| <= Δ/2`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectangularPulse {
    energy: f64,
    delta: f64,
}

impl RectangularPulse {
    pub fn new(params: &SystemParams) -> Self {
        RectangularPulse {
            energy: params.energy(),
            delta: params.delta(),
        }
    }

    pub fn amplitude(&self) -> f64 {
        (self.energy / self.delta).sqrt()
    }

    pub fn width(&self) -> f64 {
        self.delta
    }

    pub fn value(&self, t: f64) -> f64 {
        if t.abs() <= 0.5 * self.delta {
            self.amplitude()
        } else {
            0.0
        }
    }

    /// `R_s(τ) = E [1 − |τ|/Δ]₊`.
    pub fn autocorrelation(&self, tau: f64) -> f64 {
        self.energy * (1.0 - tau.abs() / self.delta).max(0.0)
    }
}

/// Discretisation of the continuous argmax: `G` samples per pulse width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points_per_pulse: usize,
}

impl GridSpec {
    /// Ties in every argmax resolve to the lowest grid index.
    pub const TIE_BREAK: &'static str = "lowest-index";

    pub fn new(points_per_pulse: usize) -> Result<Self> {
        if points_per_pulse < 2 {
            return Err(Error::Grid(format!(
                "G must be >= 2 (got {points_per_pulse})"
            )));
        }
        Ok(GridSpec { points_per_pulse })
    }

    /// Sub-interval samples over `[-M, M]`: `K·G` steps, `K·G + 1` points.
    pub fn total_points(&self, params: &SystemParams) -> Option<usize> {
        params
            .k_count()
            .and_then(|k| k.checked_mul(self.points_per_pulse))
            .map(|n| n + 1)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points_per_pulse: 16,
        }
    }
}
