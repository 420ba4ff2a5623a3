//! Distribution of `Y = sup_{0<=θ<=1} X_θ` for a stationary Gaussian process
//! with triangular covariance `[1 − |τ|]₊`, and the scaled density of the
//! per-interval energy levels.

use std::f64::consts::{PI, SQRT_2};

use crate::model::SystemParams;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn normal_pdf(a: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * a * a).exp()
}

/// Upper-tail Gaussian integral `(1/√2π) ∫_a^∞ e^{−u²/2} du`, computed from
/// `erfc` so that it keeps full relative precision for large `a`.
#[inline]
pub fn upper_tail(a: f64) -> f64 {
    0.5 * libm::erfc(a / SQRT_2)
}

/// Lower-tail Gaussian integral, `1 − upper_tail(a)` without cancellation.
#[inline]
pub fn lower_tail(a: f64) -> f64 {
    0.5 * libm::erfc(-a / SQRT_2)
}

/// `F₀(a) = [1−Φ(a)]² − a e^{−a²/2}/√2π [1−Φ(a)] − e^{−a²}/2π`, where `Φ` is
/// the upper-tail integral. Clamped to `[0, 1]`.
pub fn slepian_cdf(a: f64) -> f64 {
    if a.is_nan() {
        return f64::NAN;
    }
    if a > 0.0 {
        return (1.0 - slepian_survival(a)).clamp(0.0, 1.0);
    }
    let lower = lower_tail(a);
    let phi = normal_pdf(a);
    (lower * lower - a * phi * lower - phi * phi).clamp(0.0, 1.0)
}

/// `1 − F₀(a) = Φ(2 − Φ) + a φ (1 − Φ) + φ²`, accurate deep in the upper tail.
pub fn slepian_survival(a: f64) -> f64 {
    if a <= 0.0 {
        return 1.0 - slepian_cdf(a);
    }
    let q = upper_tail(a);
    let phi = normal_pdf(a);
    (q * (2.0 - q) + a * phi * (1.0 - q) + phi * phi).clamp(0.0, 1.0)
}

/// `ln(1 − F₀(a))`, finite far beyond the range where the survival
/// probability itself underflows.
pub fn slepian_log_survival(a: f64) -> f64 {
    if a < 30.0 {
        return slepian_survival(a).ln();
    }
    // Survival = φ(a) [a + 2 Φ(a)/φ(a)] up to terms below 1e−390; the Mills
    // ratio is taken from its asymptotic series.
    let inv2 = 1.0 / (a * a);
    let mills = (1.0 / a) * (1.0 - inv2 * (1.0 - 3.0 * inv2 * (1.0 - 5.0 * inv2)));
    -0.5 * a * a - 0.5 * (2.0 * PI).ln() + (a + 2.0 * mills).ln()
}

/// `f₀(a) = a e^{−a²}/2π + [1−Φ(a)](1+a²) e^{−a²/2}/√2π`.
pub fn slepian_pdf(a: f64) -> f64 {
    let phi = normal_pdf(a);
    (a * phi * phi + lower_tail(a) * (1.0 + a * a) * phi).max(0.0)
}

/// Dominant large-`a` behaviour of the density, `a² e^{−a²/2}/√2π`.
pub fn slepian_tail(a: f64) -> f64 {
    a * a * normal_pdf(a)
}

/// `sqrt(N0 P T / 2)`: the scale turning standardized levels into energies.
pub fn energy_scale(params: &SystemParams) -> f64 {
    params.sigma()
}

/// Density of a wrong-interval energy level,
/// `f(ε) = √(2/(N0 P T)) f₀(ε / √(N0 P T/2))`.
pub fn f_epsilon(eps: f64, params: &SystemParams) -> f64 {
    let sigma = energy_scale(params);
    slepian_pdf(eps / sigma) / sigma
}

/// Large-`T` edge of the populated energy band, `ε_T = √(N0 P R) T`.
pub fn epsilon_t(params: &SystemParams) -> f64 {
    (params.n0() * params.p() * params.r()).sqrt() * params.t()
}

/// Large-`T` maximiser of `ln f(ε) + βε` below `ε_T`:
/// `ε* = min{√(N0 P R) T, β N0 P T / 2}`.
pub fn epsilon_star(beta: f64, params: &SystemParams) -> f64 {
    epsilon_t(params).min(0.5 * beta * params.n0() * params.p() * params.t())
}
