use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    BoundsRecord, CellRecord, ComparisonReport, EstimationStats, PsiComparison, SweepSpec, Verdict,
    PSI_GAP_TOL,
};
use crate::analytic::{
    error_exponent, ml_mse_exponent, psi_joint, psi_single, wwb, wwb_exponent, BoundsConfig,
    PsiBreakdown,
};
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::numeric::{fit_line, mean_std, LineFit};
use crate::simulate::{mc_run, Estimator, McResult};

/// One `mc_run` and the parameters it ran at; `Err` holds a skip reason.
struct Group {
    r: f64,
    t: f64,
    params: SystemParams,
    run: std::result::Result<McResult, String>,
}

fn run_groups(spec: &SweepSpec) -> Result<Vec<Group>> {
    spec.validate()?;
    let config = spec.mc_config();
    let pairs: Vec<(f64, f64)> = spec
        .durations
        .iter()
        .flat_map(|&t| spec.rates.iter().map(move |&r| (r, t)))
        .collect();
    pairs
        .par_iter()
        .map(|&(r, t)| {
            let params = spec.cell_params(r, t)?;
            let run = match mc_run(&params, &config) {
                Ok(result) => Ok(result),
                Err(e @ Error::Budget { .. }) => Err(e.to_string()),
                Err(e) => return Err(e),
            };
            Ok(Group { r, t, params, run })
        })
        .collect()
}

fn analytic_psi(spec: &SweepSpec, params: &SystemParams, beta: f64) -> PsiBreakdown {
    let ch = params.channel();
    match spec.estimator {
        Estimator::Delay => psi_single(beta, params.r(), &ch),
        Estimator::Joint => psi_joint(beta, params.r(), &ch, &params.amplitudes()),
    }
}

fn bounds_record(params: &SystemParams) -> Result<BoundsRecord> {
    let (r, c) = (params.r(), params.capacity());
    let value = wwb(params, &BoundsConfig::for_params(params))?;
    Ok(BoundsRecord {
        wwb: value,
        wwb_rate: -value.ln() / params.t(),
        wwb_exponent: wwb_exponent(r, c),
        ml_mse_exponent: ml_mse_exponent(r, c),
        error_exponent: error_exponent(r, c)?,
    })
}

fn psi_comparison(
    spec: &SweepSpec,
    params: &SystemParams,
    result: &McResult,
    j: usize,
    beta: f64,
) -> PsiComparison {
    let analytic = analytic_psi(spec, params, beta);
    let values: Vec<f64> = result
        .trials
        .iter()
        .map(|t| t.partitions[j].psi_emp)
        .collect();
    let gaps: Vec<f64> = values.iter().map(|v| (v - analytic.value).abs()).collect();
    let (emp_mean, emp_std) = mean_std(&values);
    let (gap, gap_std) = mean_std(&gaps);
    let on_boundary = analytic.branch.is_boundary();
    PsiComparison {
        emp_mean,
        emp_std,
        analytic: analytic.value,
        branch: analytic.branch.to_string(),
        on_boundary,
        boundary_distance: analytic.boundary_distance,
        gap,
        gap_se: gap_std / (gaps.len() as f64).sqrt(),
        tolerance: if on_boundary {
            2.0 * PSI_GAP_TOL
        } else {
            PSI_GAP_TOL
        },
    }
}

fn build_cells(spec: &SweepSpec, groups: &[Group]) -> Result<Vec<CellRecord>> {
    let betas: Vec<Option<f64>> = if spec.betas.is_empty() {
        vec![None]
    } else {
        spec.betas.iter().copied().map(Some).collect()
    };
    let mut cells = Vec::with_capacity(spec.cell_count());
    for g in groups {
        let bounds = if spec.targets.bounds {
            Some(bounds_record(&g.params)?)
        } else {
            None
        };
        for (j, &beta) in betas.iter().enumerate() {
            let mut cell = CellRecord {
                beta,
                r: g.r,
                t: g.t,
                k: g.params.k(),
                skipped: None,
                psi: None,
                estimation: None,
                bounds,
            };
            match &g.run {
                Err(reason) => cell.skipped = Some(reason.clone()),
                Ok(result) => {
                    let s = &result.summary;
                    cell.estimation = Some(EstimationStats {
                        anomaly_rate: s.anomaly_rate,
                        anomaly_se: s.anomaly_se,
                        mse: s.mse,
                        local_mse: s.local_mse,
                        local_trials: s.local_trials,
                        alpha_hat_median: s.alpha_hat_median,
                    });
                    if let (true, Some(b)) = (spec.targets.psi, beta) {
                        cell.psi = Some(psi_comparison(spec, &g.params, result, j, b));
                    }
                }
            }
            cells.push(cell);
        }
    }
    Ok(cells)
}

fn psi_verdicts(spec: &SweepSpec, cells: &[CellRecord]) -> Vec<Verdict> {
    let t_max = spec
        .durations
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let at_max: Vec<(&CellRecord, &PsiComparison)> = cells
        .iter()
        .filter(|c| c.t == t_max)
        .filter_map(|c| c.psi.as_ref().map(|p| (c, p)))
        .collect();
    let failing: Vec<String> = at_max
        .iter()
        .filter(|(_, p)| !(p.gap < p.tolerance))
        .map(|(c, p)| {
            format!(
                "(β={}, R={}): {:.4} ≥ {}",
                c.beta.unwrap_or(f64::NAN),
                c.r,
                p.gap,
                p.tolerance
            )
        })
        .collect();
    let gap = Verdict::new(
        "psi-gap",
        !at_max.is_empty() && failing.is_empty(),
        if at_max.is_empty() {
            format!("no evaluated cells at T = {t_max}")
        } else if failing.is_empty() {
            format!("{} cells at T = {t_max} within tolerance", at_max.len())
        } else {
            format!("T = {t_max}: {}", failing.join("; "))
        },
    );
    let mut violations = Vec::new();
    for &beta in &spec.betas {
        for &r in &spec.rates {
            let mut series: Vec<(f64, &PsiComparison)> = cells
                .iter()
                .filter(|c| c.beta == Some(beta) && c.r == r)
                .filter_map(|c| c.psi.as_ref().map(|p| (c.t, p)))
                .collect();
            series.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in series.windows(2) {
                let (t0, a) = w[0];
                let (t1, b) = w[1];
                let slack = 2.0 * a.gap_se.hypot(b.gap_se);
                if b.gap > a.gap + slack {
                    violations.push(format!(
                        "(β={beta}, R={r}): gap {:.4} at T={t0} → {:.4} at T={t1}",
                        a.gap, b.gap
                    ));
                }
            }
        }
    }
    let trend = Verdict::new(
        "psi-trend",
        violations.is_empty(),
        if violations.is_empty() {
            "gap nonincreasing in T within 2 standard errors".to_string()
        } else {
            violations.join("; ")
        },
    );
    vec![gap, trend]
}

/// Compares empirical free energies with the closed forms over a
/// `(β, R, T)` grid. Cells whose `K` exceeds the budget are reported as
/// skipped rather than failing the sweep.
pub fn sweep_psi(spec: &SweepSpec) -> Result<ComparisonReport> {
    if spec.betas.is_empty() {
        return Err(Error::domain("sweep-psi needs a nonempty beta axis"));
    }
    let mut spec = spec.clone();
    spec.targets.psi = true;
    let groups = run_groups(&spec)?;
    let cells = build_cells(&spec, &groups)?;
    let verdicts = psi_verdicts(&spec, &cells);
    Ok(ComparisonReport {
        kind: "sweep-psi".into(),
        spec,
        cells,
        threshold: None,
        verdicts,
    })
}

/// Anomaly-rate curve over `R` at one duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFit {
    pub t: f64,
    pub rates: Vec<f64>,
    pub anomaly_rates: Vec<f64>,
    pub anomaly_se: Vec<f64>,
    /// `R` at which the interpolated rate crosses 1/2.
    pub crossing: Option<f64>,
    pub monotone: bool,
}

/// Regression of `ln(local MSE)` on `T` at one small rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub r: f64,
    pub fit: Option<LineFit>,
    /// `−2R`.
    pub target: f64,
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdAnalysis {
    pub capacity: f64,
    pub curves: Vec<ThresholdFit>,
    pub slopes: Vec<SlopeFit>,
}

/// Linear interpolation between the first bracketing pair of rates.
fn crossing(rates: &[f64], values: &[f64]) -> Option<f64> {
    rates.windows(2).zip(values.windows(2)).find_map(|(r, v)| {
        (v[0] < 0.5 && v[1] >= 0.5).then(|| r[0] + (0.5 - v[0]) * (r[1] - r[0]) / (v[1] - v[0]))
    })
}

fn threshold_analysis(spec: &SweepSpec, capacity: f64, cells: &[CellRecord]) -> ThresholdAnalysis {
    let first_beta = spec.betas.first().copied();
    let stats_at = |r: f64, t: f64| {
        cells
            .iter()
            .find(|c| c.beta == first_beta && c.r == r && c.t == t)
            .and_then(|c| c.estimation.as_ref())
    };
    let mut rates = spec.rates.clone();
    rates.sort_by(f64::total_cmp);
    let mut durations = spec.durations.clone();
    durations.sort_by(f64::total_cmp);
    let curves = durations
        .iter()
        .map(|&t| {
            let points: Vec<(f64, f64, f64)> = rates
                .iter()
                .filter_map(|&r| stats_at(r, t).map(|s| (r, s.anomaly_rate, s.anomaly_se)))
                .collect();
            let rs: Vec<f64> = points.iter().map(|p| p.0).collect();
            let vs: Vec<f64> = points.iter().map(|p| p.1).collect();
            let ses: Vec<f64> = points.iter().map(|p| p.2).collect();
            let monotone = points
                .windows(2)
                .all(|w| w[1].1 >= w[0].1 - 2.0 * w[0].2.hypot(w[1].2));
            ThresholdFit {
                t,
                crossing: crossing(&rs, &vs),
                rates: rs,
                anomaly_rates: vs,
                anomaly_se: ses,
                monotone,
            }
        })
        .collect();
    let slopes = rates
        .iter()
        .filter(|&&r| r < capacity / 6.0)
        .map(|&r| {
            let (ts, ys): (Vec<f64>, Vec<f64>) = durations
                .iter()
                .filter_map(|&t| {
                    let mse = stats_at(r, t)?.local_mse?;
                    (mse > 0.0).then(|| (t, mse.ln()))
                })
                .unzip();
            let fit = fit_line(&ts, &ys);
            let target = -2.0 * r;
            SlopeFit {
                r,
                fit,
                target,
                relative_error: fit.map(|f| ((f.slope - target) / target).abs()),
            }
        })
        .collect();
    ThresholdAnalysis {
        capacity,
        curves,
        slopes,
    }
}

fn threshold_verdicts(analysis: &ThresholdAnalysis) -> Vec<Verdict> {
    let c = analysis.capacity;
    let mut out = Vec::new();
    for curve in &analysis.curves {
        let t = curve.t;
        if let (Some(&lo), Some(&hi)) = (curve.anomaly_rates.first(), curve.anomaly_rates.last()) {
            out.push(Verdict::new(
                &format!("anomaly-low[T={t}]"),
                lo < 0.1,
                format!("rate {lo:.4} at R = {}", curve.rates[0]),
            ));
            out.push(Verdict::new(
                &format!("anomaly-high[T={t}]"),
                hi > 0.9,
                format!("rate {hi:.4} at R = {}", curve.rates[curve.rates.len() - 1]),
            ));
        }
        out.push(Verdict::new(
            &format!("anomaly-monotone[T={t}]"),
            curve.monotone,
            format!("rates {:?}", curve.anomaly_rates),
        ));
        out.push(Verdict::new(
            &format!("crossing[T={t}]"),
            curve
                .crossing
                .is_some_and(|x| (0.6 * c..=1.4 * c).contains(&x)),
            match curve.crossing {
                Some(x) => format!("R* = {x:.4}, window [{}, {}]", 0.6 * c, 1.4 * c),
                None => "rate never crosses 1/2".into(),
            },
        ));
    }
    let spreads: Vec<f64> = analysis
        .curves
        .iter()
        .filter_map(|c0| c0.crossing.map(|x| (x - c).abs()))
        .collect();
    if spreads.len() >= 2 {
        out.push(Verdict::new(
            "crossing-tightens",
            spreads.windows(2).all(|w| w[1] <= w[0]),
            format!("|R* − C| by increasing T: {spreads:?}"),
        ));
    }
    for s in &analysis.slopes {
        out.push(Verdict::new(
            &format!("local-slope[R={}]", s.r),
            s.relative_error.is_some_and(|e| e <= 0.3),
            match s.fit {
                Some(f) => format!(
                    "slope {:.4} ± {:.4} vs {:.4}",
                    f.slope, f.slope_stderr, s.target
                ),
                None => "fewer than two durations with a positive local MSE".into(),
            },
        ));
    }
    out
}

/// Anomaly rate against `R` across the capacity, the crossing point where
/// it reaches 1/2, and the small-`R` decay rate of the local error.
pub fn sweep_threshold(spec: &SweepSpec) -> Result<ComparisonReport> {
    let capacity = spec.base.p / spec.base.n0;
    let lo = spec.rates.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = spec.rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo < capacity && capacity < hi) {
        return Err(Error::domain(format!(
            "the R axis [{lo}, {hi}] must straddle C = {capacity}"
        )));
    }
    let groups = run_groups(spec)?;
    let cells = build_cells(spec, &groups)?;
    let analysis = threshold_analysis(spec, capacity, &cells);
    let verdicts = threshold_verdicts(&analysis);
    Ok(ComparisonReport {
        kind: "sweep-threshold".into(),
        spec: spec.clone(),
        cells,
        threshold: Some(analysis),
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RawParams;
    use crate::simulate::Mode;

    #[test]
    fn crossing_interpolates_linearly() {
        assert_eq!(crossing(&[0.3, 0.6, 0.9], &[0.0, 0.25, 0.75]), Some(0.75));
        assert_eq!(crossing(&[0.3, 0.6], &[0.6, 0.9]), None);
        assert_eq!(crossing(&[0.3, 0.6], &[0.0, 0.5]), Some(0.6));
    }

    #[test]
    fn infinite_temperature_cell_is_exact() {
        let mut spec = SweepSpec::new(
            RawParams::default(),
            vec![0.5],
            vec![6.0, 10.0],
            3,
            Mode::Surrogate,
            1,
        );
        spec.betas = vec![0.0];
        let report = sweep_psi(&spec).unwrap();
        for t in [6.0, 10.0] {
            let cell = report.cell(Some(0.0), 0.5, t).unwrap();
            let psi = cell.psi.as_ref().unwrap();
            let k = cell.k;
            // Z(0) counts ε0 plus K − 2 wrong levels
            assert!((psi.emp_mean - (k - 1.0).ln() / t).abs() < 1e-12);
            assert_eq!(psi.analytic, 0.5);
            assert!((psi.gap - ((k - 1.0).ln() / t - 0.5)).abs() < 1e-12);
        }
        let g6 = report
            .cell(Some(0.0), 0.5, 6.0)
            .unwrap()
            .psi
            .as_ref()
            .unwrap()
            .gap;
        let g10 = report
            .cell(Some(0.0), 0.5, 10.0)
            .unwrap()
            .psi
            .as_ref()
            .unwrap()
            .gap;
        assert!(g10 < g6);
    }

    #[test]
    fn over_budget_cells_are_kept_and_marked() {
        let mut spec = SweepSpec::new(
            RawParams::default(),
            vec![0.3, 1.5],
            vec![10.0],
            2,
            Mode::Exact,
            1,
        );
        spec.betas = vec![1.0, 2.0];
        spec.targets.bounds = true;
        let report = sweep_psi(&spec).unwrap();
        assert_eq!(report.cells.len(), spec.cell_count());
        let skipped = report.cell(Some(2.0), 1.5, 10.0).unwrap();
        assert!(skipped.skipped.as_ref().unwrap().contains("budget"));
        assert!(skipped.psi.is_none() && skipped.bounds.is_some());
        let done = report.cell(Some(1.0), 0.3, 10.0).unwrap();
        assert!(done.skipped.is_none() && done.psi.is_some() && done.estimation.is_some());
    }

    #[test]
    fn boundary_cells_get_double_tolerance() {
        // ordered/paramagnetic boundary 2β = R + β² at C = 1, P = N0 = 2
        let mut spec = SweepSpec::new(
            RawParams::default(),
            vec![0.75],
            vec![6.0],
            2,
            Mode::Surrogate,
            1,
        );
        spec.betas = vec![0.5, 3.0];
        let report = sweep_psi(&spec).unwrap();
        let on = report
            .cell(Some(0.5), 0.75, 6.0)
            .unwrap()
            .psi
            .as_ref()
            .unwrap();
        assert!(on.on_boundary, "{}", on.branch);
        assert_eq!(on.tolerance, 2.0 * PSI_GAP_TOL);
        let off = report
            .cell(Some(3.0), 0.75, 6.0)
            .unwrap()
            .psi
            .as_ref()
            .unwrap();
        assert!(!off.on_boundary);
        assert_eq!(off.tolerance, PSI_GAP_TOL);
    }

    #[test]
    fn threshold_needs_straddling_axis() {
        let spec = SweepSpec::new(
            RawParams::default(),
            vec![0.3, 0.6],
            vec![10.0],
            2,
            Mode::Surrogate,
            1,
        );
        assert!(sweep_threshold(&spec).unwrap_err().is_domain());
    }

    #[test]
    fn invalid_cells_are_errors() {
        let spec = SweepSpec::new(
            RawParams::default(),
            vec![0.5],
            vec![],
            2,
            Mode::Surrogate,
            1,
        );
        assert!(spec.validate().is_err());
        let mut spec = SweepSpec::new(
            RawParams::default(),
            vec![0.5],
            vec![1.0],
            2,
            Mode::Surrogate,
            1,
        );
        spec.base.m = 0.49;
        assert!(sweep_threshold(&spec).is_err());
    }
}
