//! Closed-form large-`T` results: the energy-level distribution, free
//! energies and their phase diagrams, error exponents and lower bounds.

pub mod boundary;
pub mod bounds;
pub mod phase;
pub mod slepian;

use serde::Serialize;

pub use boundary::{
    mismatch_boundaries, phase_boundaries_joint, phase_boundaries_joint_anomalous,
    phase_boundaries_single, BoundaryCurve, CurveShape, MultiPoint, PhaseDiagram,
};
pub use bounds::{
    background_mse, error_exponent, locus_length, ml_mse_exponent, wwb, wwb_exponent, wwb_value,
    BackgroundMse, BoundsConfig,
};
pub use phase::{
    beta_c, classify_phase_joint, classify_phase_single, psi_a_alpha, psi_a_joint, psi_a_single,
    psi_joint, psi_single, r_beta, Phase, PhaseLabel, PsiBreakdown,
};
pub use slepian::{
    energy_scale, epsilon_star, epsilon_t, f_epsilon, slepian_cdf, slepian_log_survival,
    slepian_pdf, slepian_survival, slepian_tail,
};

use crate::error::Result;
use crate::model::Channel;

/// Phase diagram of a receiver correlating with a mismatched pulse whose
/// normalised overlap with the true one is `rho`: `β` degrades by `ρ` and
/// rates by `ρ²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MismatchDiagram {
    pub rho: f64,
    /// `(β, R) = (2ρ/N0, ρ²C)`.
    pub triple_point: (f64, f64),
    pub diagram: PhaseDiagram,
}

pub fn mismatch_transform(rho: f64, ch: &Channel) -> Result<MismatchDiagram> {
    let diagram = mismatch_boundaries(ch, rho)?;
    Ok(MismatchDiagram {
        rho,
        triple_point: (2.0 * rho / ch.n0, rho * rho * ch.capacity()),
        diagram,
    })
}

/// `max(βρP, ψ_a(β,R))`: the mismatched receiver's free energy, with the
/// ordered phase contributing overlap `ρE` instead of `E`.
pub fn psi_mismatch(beta: f64, r: f64, rho: f64, ch: &Channel) -> Result<PsiBreakdown> {
    let mismatch = mismatch_transform(rho, ch)?;
    let anomalous = psi_a_single(beta, r, ch);
    let ordered = beta * rho * ch.p;
    let value = ordered.max(anomalous.value);
    let tol = phase::BOUNDARY_TOL * value.abs().max(1.0);
    let mut phases = Vec::new();
    if ordered >= value - tol {
        phases.push(Phase::Ordered);
    }
    if anomalous.value >= value - tol {
        phases.extend(anomalous.branch.phases());
    }
    let branch = match phases.as_slice() {
        [one] => PhaseLabel::Interior(*one),
        _ => PhaseLabel::Boundary(phases),
    };
    let boundary_distance = if branch.is_boundary() {
        0.0
    } else {
        mismatch.diagram.distance(beta, r)
    };
    Ok(PsiBreakdown {
        value,
        branch,
        boundary_distance,
        alpha_hat: None,
    })
}
