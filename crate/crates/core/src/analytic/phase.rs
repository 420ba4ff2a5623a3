//! Free energies `ψ = lim ln Z / T` of the delay-only and the joint
//! amplitude+delay systems, and the classification of `(β, R)` points into
//! thermodynamic phases.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::boundary::{self, PhaseDiagram};
use crate::error::{Error, Result};
use crate::model::{AmplitudeRange, Channel};

/// Two branches closer than this (relative to `max(1, |ψ|)`) are reported as
/// a boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Ordered,
    Glassy,
    Paramagnetic,
    /// Glassy with the amplitude pinned at `alpha_min`.
    GlassyWest,
    /// Glassy with interior amplitude `√(R/C)`.
    GlassyCentral,
    /// Glassy with the amplitude pinned at `alpha_max`.
    GlassyEast,
    /// Paramagnetic above `β = 2/N0`, amplitude `alpha_max`.
    ParamagneticNorth,
    /// Paramagnetic below `β = 2/N0`, amplitude `alpha_min`.
    ParamagneticSouth,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Ordered => "ordered",
            Phase::Glassy => "glassy",
            Phase::Paramagnetic => "paramagnetic",
            Phase::GlassyWest => "glassy-west",
            Phase::GlassyCentral => "glassy-central",
            Phase::GlassyEast => "glassy-east",
            Phase::ParamagneticNorth => "paramagnetic-north",
            Phase::ParamagneticSouth => "paramagnetic-south",
        }
    }

    /// Maps a joint-model phase onto the delay-only family.
    pub fn collapse(self) -> Phase {
        match self {
            Phase::GlassyWest | Phase::GlassyCentral | Phase::GlassyEast => Phase::Glassy,
            Phase::ParamagneticNorth | Phase::ParamagneticSouth => Phase::Paramagnetic,
            p => p,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Phase of a `(β, R)` point; points where two or more branches meet carry
/// every adjacent phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseLabel {
    Interior(Phase),
    Boundary(Vec<Phase>),
}

impl PhaseLabel {
    fn from_phases(mut phases: Vec<Phase>) -> Self {
        phases.sort();
        phases.dedup();
        match phases.as_slice() {
            [single] => PhaseLabel::Interior(*single),
            _ => PhaseLabel::Boundary(phases),
        }
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self, PhaseLabel::Boundary(_))
    }

    pub fn phases(&self) -> Vec<Phase> {
        match self {
            PhaseLabel::Interior(p) => vec![*p],
            PhaseLabel::Boundary(ps) => ps.clone(),
        }
    }

    pub fn contains(&self, phase: Phase) -> bool {
        self.phases().contains(&phase)
    }

    pub fn interior(&self) -> Option<Phase> {
        match self {
            PhaseLabel::Interior(p) => Some(*p),
            PhaseLabel::Boundary(_) => None,
        }
    }

    fn collapse(&self) -> PhaseLabel {
        PhaseLabel::from_phases(self.phases().into_iter().map(Phase::collapse).collect())
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseLabel::Interior(p) => f.write_str(p.name()),
            PhaseLabel::Boundary(ps) => {
                let names: Vec<_> = ps.iter().map(|p| p.name()).collect();
                write!(f, "boundary({})", names.join("|"))
            }
        }
    }
}

/// A free-energy value with the branch that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiBreakdown {
    /// Free-energy density in nats per unit time.
    pub value: f64,
    pub branch: PhaseLabel,
    /// Euclidean distance in the `(β, R)` plane to the nearest boundary
    /// curve of the corresponding phase diagram; zero on a boundary.
    pub boundary_distance: f64,
    /// Dominant amplitude estimate, for the joint model only.
    pub alpha_hat: Option<f64>,
}

/// One closed-form branch together with how far inside its domain the point
/// lies (`margin >= 0` means inside).
#[derive(Debug, Clone, Copy)]
struct Branch {
    phase: Phase,
    value: f64,
    margin: f64,
    alpha: Option<f64>,
}

/// `β·α` with `0·∞ = 0`.
fn scaled(beta: f64, alpha: f64) -> f64 {
    if beta == 0.0 {
        0.0
    } else {
        beta * alpha
    }
}

/// Picks the active branch among `anomalous` (those partition the plane) and,
/// when given, lets `ordered` compete by maximum.
fn resolve(
    anomalous: &[Branch],
    ordered: Option<Branch>,
    scale: f64,
) -> (f64, PhaseLabel, Option<f64>) {
    let active = anomalous
        .iter()
        .copied()
        .max_by(|a, b| a.margin.total_cmp(&b.margin))
        .expect("at least one branch");
    let value = match ordered {
        Some(o) => o.value.max(active.value),
        None => active.value,
    };
    let tol_v = BOUNDARY_TOL * value.abs().max(1.0);
    let tol_m = BOUNDARY_TOL * scale.max(1.0);
    let mut phases = Vec::new();
    let mut alpha = None;
    if let Some(o) = ordered {
        if o.value >= value - tol_v {
            phases.push(o.phase);
            alpha = o.alpha;
        }
    }
    for b in anomalous {
        if b.margin >= -tol_m && b.value >= value - tol_v && (b.value - value).abs() <= tol_v {
            if phases.is_empty() {
                alpha = b.alpha;
            }
            phases.push(b.phase);
        }
    }
    if phases.is_empty() {
        phases.push(active.phase);
        alpha = active.alpha;
    }
    (value, PhaseLabel::from_phases(phases), alpha)
}

/// Glassy-transition inverse temperature `β_c(R) = (2/N0) √(R/C)`.
pub fn beta_c(r: f64, ch: &Channel) -> f64 {
    2.0 / ch.n0 * (r / ch.capacity()).sqrt()
}

fn single_anomalous(beta: f64, r: f64, ch: &Channel) -> [Branch; 2] {
    let bc = beta_c(r, ch);
    [
        Branch {
            phase: Phase::Paramagnetic,
            value: r + beta * beta * ch.n0 * ch.p / 4.0,
            margin: bc - beta,
            alpha: None,
        },
        Branch {
            phase: Phase::Glassy,
            value: beta * (ch.n0 * ch.p * r).sqrt(),
            margin: beta - bc,
            alpha: None,
        },
    ]
}

fn finish(
    value: f64,
    branch: PhaseLabel,
    alpha_hat: Option<f64>,
    diagram: &PhaseDiagram,
    beta: f64,
    r: f64,
) -> PsiBreakdown {
    let boundary_distance = if branch.is_boundary() {
        0.0
    } else {
        diagram.distance(beta, r)
    };
    PsiBreakdown {
        value,
        branch,
        boundary_distance,
        alpha_hat,
    }
}

/// `ψ_a(β,R)`: the anomalous part alone. Paramagnetic `R + β²N0P/4` below
/// `β_c(R)`, glassy `β√(N0PR)` above.
pub fn psi_a_single(beta: f64, r: f64, ch: &Channel) -> PsiBreakdown {
    let branches = single_anomalous(beta, r, ch);
    let (value, label, _) = resolve(&branches, None, beta + r);
    finish(value, label, None, &boundary::anomalous_single(ch), beta, r)
}

/// Three-phase `ψ(β,R) = max(βP, ψ_a(β,R))`.
pub fn psi_single(beta: f64, r: f64, ch: &Channel) -> PsiBreakdown {
    let ordered = Branch {
        phase: Phase::Ordered,
        value: beta * ch.p,
        margin: f64::INFINITY,
        alpha: None,
    };
    let (value, label, _) = resolve(&single_anomalous(beta, r, ch), Some(ordered), beta + r);
    finish(
        value,
        label,
        None,
        &boundary::phase_boundaries_single(ch),
        beta,
        r,
    )
}

pub fn classify_phase_single(beta: f64, r: f64, ch: &Channel) -> PhaseLabel {
    psi_single(beta, r, ch).branch
}

fn alpha_branches(alpha: f64, beta: f64, r: f64, ch: &Channel) -> [Branch; 2] {
    let bc = beta_c(r, ch);
    let ba = scaled(beta, alpha);
    [
        Branch {
            phase: Phase::Paramagnetic,
            value: r + beta * alpha * alpha * ch.p / 4.0 * (beta * ch.n0 - 2.0),
            margin: bc - ba,
            alpha: Some(alpha),
        },
        Branch {
            phase: Phase::Glassy,
            value: beta * (alpha * (ch.n0 * ch.p * r).sqrt() - alpha * alpha * ch.p / 2.0),
            margin: ba - bc,
            alpha: Some(alpha),
        },
    ]
}

#[cfg(test)]
/// Value of [`psi_a_alpha`] without the boundary bookkeeping.
pub(crate) fn psi_a_alpha_value(alpha: f64, beta: f64, r: f64, ch: &Channel) -> f64 {
    resolve(&alpha_branches(alpha, beta, r, ch), None, beta + r).0
}

/// Per-amplitude anomalous free energy `ψ_a(α,β,R)`: paramagnetic
/// `R + (βα²P/4)(βN0 − 2)` while `βα < β_c(R)`, glassy
/// `β(α√(N0PR) − α²P/2)` beyond.
pub fn psi_a_alpha(
    alpha: f64,
    beta: f64,
    r: f64,
    ch: &Channel,
    amps: &AmplitudeRange,
) -> Result<PsiBreakdown> {
    if !amps.contains(alpha) {
        return Err(Error::domain(format!(
            "alpha = {alpha} outside [{}, {}]",
            amps.min, amps.max
        )));
    }
    let (value, label, _) = resolve(&alpha_branches(alpha, beta, r, ch), None, beta + r);
    let diagram = boundary::anomalous_single_scaled(ch, alpha);
    Ok(finish(value, label, Some(alpha), &diagram, beta, r))
}

fn joint_anomalous(beta: f64, r: f64, ch: &Channel, amps: &AmplitudeRange) -> [Branch; 5] {
    let c = ch.capacity();
    let bc = beta_c(r, ch);
    let b2 = ch.posterior_beta();
    let s = (r / c).sqrt();
    let (a_lo, a_hi) = (amps.min, amps.max);
    let para = |a: f64| r + beta * a * a * ch.p / 4.0 * (beta * ch.n0 - 2.0);
    let glassy = |a: f64| beta * (a * (ch.n0 * ch.p * r).sqrt() - a * a * ch.p / 2.0);
    let (east_value, north_value) = if a_hi.is_finite() {
        (glassy(a_hi), para(a_hi))
    } else {
        (f64::NEG_INFINITY, f64::NEG_INFINITY)
    };
    [
        Branch {
            phase: Phase::ParamagneticSouth,
            value: para(a_lo),
            margin: (b2 - beta).min(bc - scaled(beta, a_lo)),
            alpha: Some(a_lo),
        },
        Branch {
            phase: Phase::GlassyWest,
            value: glassy(a_lo),
            margin: (scaled(beta, a_lo) - bc).min(a_lo - s),
            alpha: Some(a_lo),
        },
        Branch {
            phase: Phase::GlassyCentral,
            value: beta * ch.n0 * r / 2.0,
            margin: (beta - b2).min(s - a_lo).min(a_hi - s),
            alpha: Some(s),
        },
        Branch {
            phase: Phase::GlassyEast,
            value: east_value,
            margin: (s - a_hi).min(scaled(beta, a_hi) - bc),
            alpha: Some(a_hi),
        },
        Branch {
            phase: Phase::ParamagneticNorth,
            value: north_value,
            margin: (beta - b2).min(bc - scaled(beta, a_hi)),
            alpha: Some(a_hi),
        },
    ]
}

/// Five-phase `ψ_a(β,R) = max_α ψ_a(α,β,R)` of the joint model.
pub fn psi_a_joint(beta: f64, r: f64, ch: &Channel, amps: &AmplitudeRange) -> PsiBreakdown {
    let (value, mut label, alpha) = resolve(&joint_anomalous(beta, r, ch, amps), None, beta + r);
    if amps.is_fixed() {
        label = label.collapse();
    }
    finish(
        value,
        label,
        alpha,
        &boundary::anomalous_joint(ch, amps),
        beta,
        r,
    )
}

/// `R_β = (P/2)[β(1 + α_min²) − β²N0α_min²/2]`: where the ordered phase
/// meets the southern paramagnetic phase.
pub fn r_beta(beta: f64, ch: &Channel, amps: &AmplitudeRange) -> f64 {
    let a2 = amps.min * amps.min;
    0.5 * ch.p * (beta * (1.0 + a2) - beta * beta * ch.n0 * a2 / 2.0)
}

/// Joint `ψ(β,R) = max(βP/2, ψ_a(β,R))`, with `Z0 = e^{βPT/2}` for true
/// amplitude one.
pub fn psi_joint(beta: f64, r: f64, ch: &Channel, amps: &AmplitudeRange) -> PsiBreakdown {
    let ordered = Branch {
        phase: Phase::Ordered,
        value: beta * ch.p / 2.0,
        margin: f64::INFINITY,
        alpha: Some(1.0),
    };
    let (value, mut label, alpha) =
        resolve(&joint_anomalous(beta, r, ch, amps), Some(ordered), beta + r);
    if amps.is_fixed() {
        label = label.collapse();
    }
    finish(
        value,
        label,
        alpha,
        &boundary::phase_boundaries_joint(ch, amps),
        beta,
        r,
    )
}

pub fn classify_phase_joint(beta: f64, r: f64, ch: &Channel, amps: &AmplitudeRange) -> PhaseLabel {
    psi_joint(beta, r, ch, amps).branch
}
