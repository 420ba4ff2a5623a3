//! Phase boundaries as explicit curves in the `(β, R)` plane.
//!
//! Every boundary is either a quadratic `R = c0 + lin·β + quad·β²` over a
//! `β`-interval or a vertical segment `β = const` over an `R`-interval.

use std::io::Write;

use serde::Serialize;

use super::phase::Phase;
use crate::error::{Error, Result};
use crate::model::{AmplitudeRange, Channel};
use crate::numeric::{fmt17, golden_max};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CurveShape {
    Quadratic {
        c0: f64,
        lin: f64,
        quad: f64,
        beta_lo: f64,
        beta_hi: f64,
    },
    Vertical {
        beta: f64,
        r_lo: f64,
        r_hi: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryCurve {
    pub id: String,
    pub phases: [Phase; 2],
    pub shape: CurveShape,
}

impl BoundaryCurve {
    fn quadratic(
        a: Phase,
        b: Phase,
        c0: f64,
        lin: f64,
        quad: f64,
        beta_lo: f64,
        beta_hi: f64,
    ) -> Self {
        BoundaryCurve {
            id: format!("{a}|{b}"),
            phases: [a, b],
            shape: CurveShape::Quadratic {
                c0,
                lin,
                quad,
                beta_lo,
                beta_hi,
            },
        }
    }

    fn vertical(a: Phase, b: Phase, beta: f64, r_lo: f64, r_hi: f64) -> Self {
        BoundaryCurve {
            id: format!("{a}|{b}"),
            phases: [a, b],
            shape: CurveShape::Vertical { beta, r_lo, r_hi },
        }
    }

    /// `R` on the curve at `beta`, if `beta` lies in its range.
    pub fn r_at(&self, beta: f64) -> Option<f64> {
        match self.shape {
            CurveShape::Quadratic {
                c0,
                lin,
                quad,
                beta_lo,
                beta_hi,
            } => {
                (beta >= beta_lo && beta <= beta_hi).then_some(c0 + lin * beta + quad * beta * beta)
            }
            CurveShape::Vertical { .. } => None,
        }
    }

    fn is_empty(&self) -> bool {
        match self.shape {
            CurveShape::Quadratic {
                beta_lo, beta_hi, ..
            } => !(beta_lo <= beta_hi),
            CurveShape::Vertical { r_lo, r_hi, .. } => !(r_lo <= r_hi),
        }
    }

    /// Euclidean distance from `(beta, r)` to the curve.
    pub fn distance(&self, beta: f64, r: f64) -> f64 {
        match self.shape {
            CurveShape::Vertical {
                beta: b,
                r_lo,
                r_hi,
            } => {
                let dr = if r < r_lo {
                    r_lo - r
                } else if r > r_hi {
                    r - r_hi
                } else {
                    0.0
                };
                (beta - b).hypot(dr)
            }
            CurveShape::Quadratic {
                c0,
                lin,
                quad,
                beta_lo,
                beta_hi,
            } => {
                let on = |b: f64| c0 + lin * b + quad * b * b;
                let dist = |b: f64| (b - beta).hypot(on(b) - r);
                // no point beyond |β − beta| > d(beta_lo) can be closer
                let anchor = beta.clamp(beta_lo, beta_hi.max(beta_lo));
                let bound = dist(anchor);
                let lo = beta_lo.max(beta - bound);
                let hi = beta_hi.min(beta + bound);
                if !(lo < hi) {
                    return bound;
                }
                const SAMPLES: usize = 128;
                let step = (hi - lo) / SAMPLES as f64;
                let best = (0..=SAMPLES)
                    .map(|i| lo + step * i as f64)
                    .min_by(|a, b| dist(*a).total_cmp(&dist(*b)))
                    .expect("non-empty");
                let (_, neg) = golden_max(
                    |b| -dist(b),
                    (best - step).max(lo),
                    (best + step).min(hi),
                    100,
                );
                (-neg).min(bound)
            }
        }
    }

    /// Points along the curve clipped to `[0, beta_max] × [0, r_max]`.
    pub fn polyline(&self, beta_max: f64, r_max: f64, n: usize) -> Vec<(f64, f64)> {
        let n = n.max(2);
        match self.shape {
            CurveShape::Vertical { beta, r_lo, r_hi } => {
                let hi = r_hi.min(r_max);
                if beta > beta_max || r_lo > hi {
                    return Vec::new();
                }
                (0..n)
                    .map(|i| (beta, r_lo + (hi - r_lo) * i as f64 / (n - 1) as f64))
                    .collect()
            }
            CurveShape::Quadratic {
                beta_lo, beta_hi, ..
            } => {
                let hi = beta_hi.min(beta_max);
                if beta_lo > hi {
                    return Vec::new();
                }
                (0..n)
                    .map(|i| beta_lo + (hi - beta_lo) * i as f64 / (n - 1) as f64)
                    .filter_map(|b| self.r_at(b).map(|r| (b, r)))
                    .filter(|&(_, r)| (0.0..=r_max).contains(&r))
                    .collect()
            }
        }
    }
}

/// A point where three or more phases meet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiPoint {
    pub beta: f64,
    pub r: f64,
    pub phases: Vec<Phase>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagram {
    pub curves: Vec<BoundaryCurve>,
    pub points: Vec<MultiPoint>,
}

impl PhaseDiagram {
    fn new(curves: Vec<BoundaryCurve>, points: Vec<MultiPoint>) -> Self {
        PhaseDiagram {
            curves: curves.into_iter().filter(|c| !c.is_empty()).collect(),
            points,
        }
    }

    pub fn curve(&self, id: &str) -> Option<&BoundaryCurve> {
        self.curves.iter().find(|c| c.id == id)
    }

    /// The first multi-phase point, if any.
    pub fn triple_point(&self) -> Option<(f64, f64)> {
        self.points.first().map(|p| (p.beta, p.r))
    }

    /// Distance from `(beta, r)` to the nearest curve.
    pub fn distance(&self, beta: f64, r: f64) -> f64 {
        self.curves
            .iter()
            .map(|c| c.distance(beta, r))
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV `curve_id,beta,R`, `n` points per curve.
    pub fn write_polylines_csv(
        &self,
        out: &mut dyn Write,
        beta_max: f64,
        r_max: f64,
        n: usize,
    ) -> std::io::Result<()> {
        writeln!(out, "curve_id,beta,R")?;
        for curve in &self.curves {
            for (b, r) in curve.polyline(beta_max, r_max, n) {
                writeln!(out, "{},{},{}", curve.id, fmt17(b), fmt17(r))?;
            }
        }
        Ok(())
    }
}

/// Single-parameter diagram with the ordered phase worth `βρP`; `ρ = 1` is
/// the matched case.
fn single_with_overlap(ch: &Channel, rho: f64) -> PhaseDiagram {
    let c = ch.capacity();
    let b_t = 2.0 * rho / ch.n0;
    let glassy_para = c * ch.n0 * ch.n0 / 4.0;
    PhaseDiagram::new(
        vec![
            BoundaryCurve::quadratic(
                Phase::Ordered,
                Phase::Glassy,
                rho * rho * c,
                0.0,
                0.0,
                b_t,
                f64::INFINITY,
            ),
            BoundaryCurve::quadratic(
                Phase::Ordered,
                Phase::Paramagnetic,
                0.0,
                ch.p * rho,
                -ch.p * ch.n0 / 4.0,
                0.0,
                b_t,
            ),
            BoundaryCurve::quadratic(
                Phase::Glassy,
                Phase::Paramagnetic,
                0.0,
                0.0,
                glassy_para,
                b_t,
                f64::INFINITY,
            ),
        ],
        vec![MultiPoint {
            beta: b_t,
            r: rho * rho * c,
            phases: vec![Phase::Ordered, Phase::Glassy, Phase::Paramagnetic],
        }],
    )
}

/// Boundaries of the three-phase delay-only free energy, with the triple
/// point `(β, R) = (2/N0, C)`.
pub fn phase_boundaries_single(ch: &Channel) -> PhaseDiagram {
    single_with_overlap(ch, 1.0)
}

/// Boundaries when the receiver correlates with a mismatched pulse of
/// normalised overlap `rho`.
pub fn mismatch_boundaries(ch: &Channel, rho: f64) -> Result<PhaseDiagram> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::domain(format!("rho must lie in (0, 1] (got {rho})")));
    }
    Ok(single_with_overlap(ch, rho))
}

/// The glassy/paramagnetic parabola of the anomalous part alone.
pub fn anomalous_single(ch: &Channel) -> PhaseDiagram {
    anomalous_single_scaled(ch, 1.0)
}

/// Glassy/paramagnetic crossover `βα = β_c(R)` at fixed amplitude `alpha`.
pub(crate) fn anomalous_single_scaled(ch: &Channel, alpha: f64) -> PhaseDiagram {
    let quad = ch.capacity() * (alpha * ch.n0 / 2.0).powi(2);
    PhaseDiagram::new(
        vec![BoundaryCurve::quadratic(
            Phase::Paramagnetic,
            Phase::Glassy,
            0.0,
            0.0,
            quad,
            0.0,
            f64::INFINITY,
        )],
        Vec::new(),
    )
}

/// Curves shared by the joint diagrams: everything at or above the
/// eastern edge `R = α_max²C`, which vanishes for unbounded `α_max`.
fn eastern_curves(
    ch: &Channel,
    amps: &AmplitudeRange,
    curves: &mut Vec<BoundaryCurve>,
    points: &mut Vec<MultiPoint>,
) {
    let c = ch.capacity();
    let b2 = ch.posterior_beta();
    let a_hi = amps.max;
    if !a_hi.is_finite() {
        curves.push(BoundaryCurve::vertical(
            Phase::GlassyCentral,
            Phase::ParamagneticSouth,
            b2,
            amps.min.max(1.0).powi(2) * c,
            f64::INFINITY,
        ));
        return;
    }
    let east = a_hi * a_hi * c;
    curves.push(BoundaryCurve::quadratic(
        Phase::GlassyCentral,
        Phase::GlassyEast,
        east,
        0.0,
        0.0,
        b2,
        f64::INFINITY,
    ));
    curves.push(BoundaryCurve::quadratic(
        Phase::GlassyEast,
        Phase::ParamagneticNorth,
        0.0,
        0.0,
        c * (a_hi * ch.n0 / 2.0).powi(2),
        b2,
        f64::INFINITY,
    ));
    curves.push(BoundaryCurve::vertical(
        Phase::ParamagneticNorth,
        Phase::ParamagneticSouth,
        b2,
        east,
        f64::INFINITY,
    ));
    points.push(MultiPoint {
        beta: b2,
        r: east,
        phases: vec![
            Phase::GlassyCentral,
            Phase::GlassyEast,
            Phase::ParamagneticNorth,
            Phase::ParamagneticSouth,
        ],
    });
}

/// Boundaries of the joint free energy `max(βP/2, ψ_a)`.
pub fn phase_boundaries_joint(ch: &Channel, amps: &AmplitudeRange) -> PhaseDiagram {
    let c = ch.capacity();
    let b2 = ch.posterior_beta();
    let a2 = amps.min * amps.min;
    let mut curves = vec![
        BoundaryCurve::quadratic(
            Phase::Ordered,
            Phase::GlassyCentral,
            c,
            0.0,
            0.0,
            b2,
            f64::INFINITY,
        ),
        BoundaryCurve::quadratic(
            Phase::Ordered,
            Phase::ParamagneticSouth,
            0.0,
            0.5 * ch.p * (1.0 + a2),
            -0.25 * ch.p * ch.n0 * a2,
            0.0,
            b2,
        ),
    ];
    let mut points = vec![MultiPoint {
        beta: b2,
        r: c,
        phases: vec![
            Phase::Ordered,
            Phase::GlassyCentral,
            Phase::ParamagneticSouth,
        ],
    }];
    if amps.max.is_finite() {
        curves.push(BoundaryCurve::vertical(
            Phase::GlassyCentral,
            Phase::ParamagneticSouth,
            b2,
            c,
            amps.max * amps.max * c,
        ));
    }
    eastern_curves(ch, amps, &mut curves, &mut points);
    PhaseDiagram::new(curves, points)
}

/// Boundaries of the five-phase anomalous free energy `ψ_a` alone.
pub fn phase_boundaries_joint_anomalous(ch: &Channel, amps: &AmplitudeRange) -> PhaseDiagram {
    let c = ch.capacity();
    let b2 = ch.posterior_beta();
    let a_lo = amps.min;
    let west = a_lo * a_lo * c;
    let mut curves = vec![
        BoundaryCurve::quadratic(
            Phase::ParamagneticSouth,
            Phase::GlassyWest,
            0.0,
            0.0,
            c * (a_lo * ch.n0 / 2.0).powi(2),
            0.0,
            b2,
        ),
        BoundaryCurve::quadratic(
            Phase::GlassyWest,
            Phase::GlassyCentral,
            west,
            0.0,
            0.0,
            b2,
            f64::INFINITY,
        ),
    ];
    let mut points = vec![MultiPoint {
        beta: b2,
        r: west,
        phases: vec![
            Phase::ParamagneticSouth,
            Phase::GlassyWest,
            Phase::GlassyCentral,
        ],
    }];
    if amps.max.is_finite() {
        curves.push(BoundaryCurve::vertical(
            Phase::GlassyCentral,
            Phase::ParamagneticSouth,
            b2,
            west,
            amps.max * amps.max * c,
        ));
        eastern_curves(ch, amps, &mut curves, &mut points);
    } else {
        curves.push(BoundaryCurve::vertical(
            Phase::GlassyCentral,
            Phase::ParamagneticSouth,
            b2,
            west,
            f64::INFINITY,
        ));
    }
    PhaseDiagram::new(curves, points)
}

pub(crate) fn anomalous_joint(ch: &Channel, amps: &AmplitudeRange) -> PhaseDiagram {
    phase_boundaries_joint_anomalous(ch, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::phase::{psi_a_joint, psi_a_single, psi_joint, psi_single};
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn ch() -> Channel {
        Channel::new(2.0, 2.0).unwrap()
    }

    #[test]
    fn single_curves_meet_at_triple_point() {
        let c = ch();
        let d = phase_boundaries_single(&c);
        assert_eq!(d.curves.len(), 3);
        assert_eq!(d.triple_point(), Some((1.0, 1.0)));
        let para = d.curve("ordered|paramagnetic").unwrap();
        assert_eq!(para.r_at(1.0), Some(1.0));
        assert_eq!(para.r_at(0.0), Some(0.0));
        assert_eq!(d.curve("glassy|paramagnetic").unwrap().r_at(1.0), Some(1.0));
        assert_eq!(d.curve("ordered|glassy").unwrap().r_at(1.0), Some(1.0));
    }

    #[test]
    fn mismatch_examples() {
        let c = ch();
        assert_eq!(
            mismatch_boundaries(&c, 1.0).unwrap(),
            phase_boundaries_single(&c)
        );
        let d = mismatch_boundaries(&c, 0.5).unwrap();
        assert_eq!(d.triple_point(), Some((0.5, 0.25)));
        // the ordered/paramagnetic parabola peaks at β = 2ρ/N0 with value ρ²C
        let para = d.curve("ordered|paramagnetic").unwrap();
        let (b, r) = golden_max(|b| para.r_at(b).unwrap_or(f64::NEG_INFINITY), 0.0, 0.5, 200);
        assert!((b - 0.5).abs() < 1e-6 && (r - 0.25).abs() < 1e-12);
        assert!(mismatch_boundaries(&c, 0.0).is_err());
        assert!(mismatch_boundaries(&c, 1.5).is_err());
    }

    #[test]
    fn distances() {
        let c = ch();
        let d = phase_boundaries_single(&c);
        assert!(d.distance(1.0, 1.0) < 1e-12);
        // (3, 2) lies one unit above R = C and the parabola is farther away
        assert!((d.distance(3.0, 2.0) - 1.0).abs() < 1e-9);
        let vertical = BoundaryCurve::vertical(Phase::Glassy, Phase::Ordered, 1.0, 0.0, 2.0);
        assert!((vertical.distance(4.0, 6.0) - 5.0).abs() < 1e-15);
        // distance to R = β² from the origin side
        let para = BoundaryCurve::quadratic(
            Phase::Glassy,
            Phase::Paramagnetic,
            0.0,
            0.0,
            1.0,
            0.0,
            f64::INFINITY,
        );
        // nearest point to (0, 1) is (√½, ½)
        assert!((para.distance(0.0, 1.0) - 0.75f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn joint_diagram_shape() {
        let c = ch();
        let amps = AmplitudeRange::new(0.5, 2.0).unwrap();
        let d = phase_boundaries_joint(&c, &amps);
        assert_eq!(d.curves.len(), 6);
        let a = phase_boundaries_joint_anomalous(&c, &amps);
        assert_eq!(a.curves.len(), 6);
        let open = AmplitudeRange::new(0.0, f64::INFINITY).unwrap();
        let d = phase_boundaries_joint(&c, &open);
        assert!(d
            .curves
            .iter()
            .all(|c| !c.phases.contains(&Phase::GlassyEast)
                && !c.phases.contains(&Phase::ParamagneticNorth)));
        let straight = d.curve("ordered|paramagnetic-south").unwrap();
        assert!((straight.r_at(0.7).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn polyline_export() {
        let d = phase_boundaries_single(&ch());
        let mut buf = Vec::new();
        d.write_polylines_csv(&mut buf, 4.0, 5.0, 11).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("curve_id,beta,R"));
        let first = lines.next().unwrap();
        assert!(
            first.starts_with("ordered|glassy,1.0000000000000000e0,"),
            "{first}"
        );
    }

    /// Samples `n` points of `curve` inside the box and checks `psi` is
    /// continuous across it.
    fn assert_continuous(
        curve: &BoundaryCurve,
        psi: &dyn Fn(f64, f64) -> f64,
        rng: &mut Xoshiro256PlusPlus,
    ) {
        let h = 1e-11;
        let mut checked = 0;
        while checked < 100 {
            let (b, r, db, dr) = match curve.shape {
                CurveShape::Vertical { beta, r_lo, r_hi } => {
                    let hi = r_hi.min(r_lo + 5.0);
                    (beta, rng.random_range(r_lo..=hi), h, 0.0)
                }
                CurveShape::Quadratic {
                    beta_lo, beta_hi, ..
                } => {
                    let hi = beta_hi.min(beta_lo + 4.0);
                    let b = rng.random_range(beta_lo..=hi);
                    (b, curve.r_at(b).unwrap(), 0.0, h)
                }
            };
            if r - dr < 0.0 || b - db < 0.0 {
                continue;
            }
            let jump = (psi(b + db, r + dr) - psi(b - db, r - dr)).abs();
            assert!(jump < 1e-9, "{} at ({b}, {r}): jump {jump}", curve.id);
            checked += 1;
        }
    }

    #[test]
    fn free_energies_continuous_across_boundaries() {
        let c = ch();
        let amps = AmplitudeRange::normalized(0.5).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(17);
        for curve in &phase_boundaries_single(&c).curves {
            assert_continuous(curve, &|b, r| psi_single(b, r, &c).value, &mut rng);
        }
        for curve in &anomalous_single(&c).curves {
            assert_continuous(curve, &|b, r| psi_a_single(b, r, &c).value, &mut rng);
        }
        for curve in &phase_boundaries_joint(&c, &amps).curves {
            assert_continuous(curve, &|b, r| psi_joint(b, r, &c, &amps).value, &mut rng);
        }
        for curve in &phase_boundaries_joint_anomalous(&c, &amps).curves {
            assert_continuous(curve, &|b, r| psi_a_joint(b, r, &c, &amps).value, &mut rng);
        }
    }

    #[test]
    fn labels_on_curves_name_both_phases() {
        let c = ch();
        let amps = AmplitudeRange::new(0.5, 2.0).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(23);
        type Labeller<'a> = &'a dyn Fn(f64, f64) -> crate::analytic::PhaseLabel;
        let diagrams: [(PhaseDiagram, Labeller); 2] = [
            (phase_boundaries_single(&c), &|b, r| {
                psi_single(b, r, &c).branch
            }),
            (phase_boundaries_joint(&c, &amps), &|b, r| {
                psi_joint(b, r, &c, &amps).branch
            }),
        ];
        for (diagram, label) in diagrams.iter() {
            for curve in &diagram.curves {
                if let CurveShape::Quadratic {
                    beta_lo, beta_hi, ..
                } = curve.shape
                {
                    for _ in 0..20 {
                        // dyadic-free points still sit within the 1e-12 band
                        let b = rng.random_range(beta_lo..=beta_hi.min(beta_lo + 3.0));
                        let r = curve.r_at(b).unwrap();
                        let l = label(b, r);
                        assert!(
                            curve.phases.iter().all(|p| l.contains(*p)),
                            "{} at ({b}, {r}) labelled {l}",
                            curve.id
                        );
                    }
                }
            }
        }
    }
}
