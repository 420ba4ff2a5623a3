use threshlab::analytic::{
    classify_phase_single, mismatch_transform, phase_boundaries_joint,
    phase_boundaries_joint_anomalous, phase_boundaries_single, psi_a_joint, psi_a_single,
    psi_joint, psi_mismatch, psi_single, slepian_cdf, slepian_pdf, slepian_survival, slepian_tail,
    PhaseDiagram, PsiBreakdown,
};
use threshlab::experiments::{
    compare_bounds, slepian_residuals, sweep_psi, sweep_threshold, validate_slepian,
    write_cells_csv, write_json, write_matrix_csv, write_plot_data, BoundsGrid, ComparisonReport,
    SweepSpec,
};
use threshlab::numeric::fmt17;
use threshlab::simulate::{mc_run, write_trials_csv, Estimator, McConfig, Mode};
use threshlab::{AmplitudePolicy, AmplitudeRange, Channel, GridSpec, RawParams, SystemParams};

use crate::config::Resolved;
use crate::error::CliError;
use crate::run_dir::RunDir;

const DEFAULT_RESOLUTION: u64 = 200;
const POLYLINE_POINTS: usize = 200;
const DEFAULT_SLEPIAN_G: usize = 512;

fn channel(r: &Resolved) -> Result<Channel, CliError> {
    let m = r.param_set()?.model;
    Ok(Channel::new(m.p, m.n0)?)
}

/// Both ends given: taken as is. Only `alpha_min`: the upper end follows
/// from unit mean square. Neither: the known-amplitude case.
fn amplitudes(r: &Resolved) -> Result<AmplitudeRange, CliError> {
    match (r.scalar("alpha_min")?, r.scalar("alpha_max")?) {
        (None, None) => Ok(AmplitudeRange::FIXED),
        (Some(lo), None) => Ok(AmplitudeRange::normalized(lo)?),
        (Some(lo), Some(hi)) => Ok(AmplitudeRange::new(lo, hi)?),
        (None, Some(_)) => Err(CliError::Usage("alpha_max needs alpha_min".into())),
    }
}

fn raw_params(r: &Resolved) -> Result<RawParams, CliError> {
    Ok(r.param_set()?.model.with_amplitudes(amplitudes(r)?))
}

fn policy(r: &Resolved) -> Result<AmplitudePolicy, CliError> {
    Ok(if r.flag("unchecked_amplitudes")? {
        AmplitudePolicy::Unchecked
    } else {
        AmplitudePolicy::Normalized
    })
}

fn mode(r: &Resolved) -> Result<Mode, CliError> {
    Ok(r.str("mode")
        .map(str::parse)
        .transpose()?
        .unwrap_or(Mode::Surrogate))
}

fn estimator(r: &Resolved, raw: &RawParams) -> Result<Estimator, CliError> {
    match r.str("estimator") {
        Some("delay") => Ok(Estimator::Delay),
        Some("joint") => Ok(Estimator::Joint),
        Some(other) => Err(CliError::Usage(format!(
            "estimator must be delay or joint (got {other:?})"
        ))),
        None if raw.alpha_min < raw.alpha_max => Ok(Estimator::Joint),
        None => Ok(Estimator::Delay),
    }
}

fn grid(r: &Resolved) -> Result<GridSpec, CliError> {
    Ok(GridSpec::new(r.param_set()?.g)?)
}

/// `n` evenly spaced points on `[0, max]`.
fn axis(max: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| max * i as f64 / (n - 1) as f64)
}

struct DiagramWindow {
    beta_max: f64,
    r_max: f64,
    n: usize,
}

fn window(r: &Resolved) -> Result<DiagramWindow, CliError> {
    let beta_max = r.scalar("beta_max")?.unwrap_or(3.0);
    let r_max = r.scalar("R_max")?.unwrap_or(2.0);
    let n = r.u64("resolution")?.unwrap_or(DEFAULT_RESOLUTION) as usize;
    if !(beta_max > 0.0 && beta_max.is_finite() && r_max > 0.0 && r_max.is_finite()) {
        return Err(threshlab::Error::Domain(format!(
            "beta_max and R_max must be finite and > 0 (got {beta_max}, {r_max})"
        ))
        .into());
    }
    if n < 2 {
        return Err(CliError::Usage(format!(
            "resolution must be >= 2 (got {n})"
        )));
    }
    Ok(DiagramWindow { beta_max, r_max, n })
}

fn write_diagram(
    dir: &mut RunDir,
    w: &DiagramWindow,
    diagram: &PhaseDiagram,
    eval: impl Fn(f64, f64) -> Result<(PsiBreakdown, f64), CliError>,
) -> Result<(), CliError> {
    let mut rows = Vec::with_capacity(w.n * w.n);
    for beta in axis(w.beta_max, w.n) {
        for rate in axis(w.r_max, w.n) {
            rows.push((beta, rate, eval(beta, rate)?));
        }
    }
    dir.write(
        "psi_grid.csv",
        &format!("{}×{} grid of ψ", w.n, w.n),
        |out| {
            writeln!(out, "beta,R,psi,psi_a,phase,alpha_hat")?;
            for (beta, rate, (psi, psi_a)) in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    fmt17(*beta),
                    fmt17(*rate),
                    fmt17(psi.value),
                    fmt17(*psi_a),
                    psi.branch,
                    psi.alpha_hat.map(fmt17).unwrap_or_default()
                )?;
            }
            Ok(())
        },
    )?;
    let summary = match diagram.triple_point() {
        Some((b, rr)) => format!(
            "{} boundary curves, triple point (β, R) = ({b}, {rr})",
            diagram.curves.len()
        ),
        None => format!("{} boundary curves", diagram.curves.len()),
    };
    dir.write("boundaries.csv", &summary, |out| {
        diagram.write_polylines_csv(out, w.beta_max, w.r_max, POLYLINE_POINTS)
    })
}

fn phase_diagram(r: &Resolved, dir: &mut RunDir) -> Result<(), CliError> {
    let ch = channel(r)?;
    let w = window(r)?;
    write_diagram(dir, &w, &phase_boundaries_single(&ch), |b, rate| {
        Ok((psi_single(b, rate, &ch), psi_a_single(b, rate, &ch).value))
    })
}

fn phase_diagram_joint(r: &Resolved, dir: &mut RunDir) -> Result<(), CliError> {
    let ch = channel(r)?;
    let amps = amplitudes(r)?;
    if amps.is_fixed() {
        return Err(CliError::Usage(
            "phase-diagram-joint needs --alpha-min".into(),
        ));
    }
    let w = window(r)?;
    if r.flag("anomalous")? {
        write_diagram(
            dir,
            &w,
            &phase_boundaries_joint_anomalous(&ch, &amps),
            |b, rate| {
                let a = psi_a_joint(b, rate, &ch, &amps);
                let v = a.value;
                Ok((a, v))
            },
        )
    } else {
        write_diagram(dir, &w, &phase_boundaries_joint(&ch, &amps), |b, rate| {
            Ok((
                psi_joint(b, rate, &ch, &amps),
                psi_a_joint(b, rate, &ch, &amps).value,
            ))
        })
    }
}

fn psi(r: &Resolved, dir: &mut RunDir) -> Result<(), CliError> {
    let ch = channel(r)?;
    let amps = amplitudes(r)?;
    let betas = r.required_list("beta")?;
    let rates = r.required_list("R")?;
    let mut rows = Vec::new();
    for &b in &betas {
        for &rate in &rates {
            if !(b >= 0.0 && rate >= 0.0) {
                return Err(threshlab::Error::Domain(format!(
                    "beta and R must be >= 0 (got {b}, {rate})"
                ))
                .into());
            }
            let (full, anomalous) = if amps.is_fixed() {
                (psi_single(b, rate, &ch), psi_a_single(b, rate, &ch))
            } else {
                (
                    psi_joint(b, rate, &ch, &amps),
                    psi_a_joint(b, rate, &ch, &amps),
                )
            };
            rows.push((b, rate, full, anomalous));
        }
    }
    dir.write("psi.csv", &format!("{} points", rows.len()), |out| {
        writeln!(
            out,
            "beta,R,psi,psi_a,phase,anomalous_phase,boundary_distance,alpha_hat"
        )?;
        for (b, rate, full, a) in &rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                fmt17(*b),
                fmt17(*rate),
                fmt17(full.value),
                fmt17(a.value),
                full.branch,
                a.branch,
                fmt17(full.boundary_distance),
                a.alpha_hat.map(fmt17).unwrap_or_default()
            )?;
        }
        Ok(())
    })
}

fn simulate(r: &Resolved, dir: &mut RunDir) -> Result<(), CliError> {
    r.scalar("R")?;
    r.scalar("T")?;
    let raw = raw_params(r)?;
    let params = SystemParams::validate_with(&raw, policy(r)?)?;
    let trials = r.u64("trials")?.unwrap_or(100) as usize;
    let mut config = McConfig::new(trials, mode(r)?, r.param_set()?.seed);
    config.grid = grid(r)?;
    config.betas = r.list("beta")?.unwrap_or_default();
    config.estimator = estimator(r, &raw)?;
    config.k_max = r.scalar("k_max")?;
    let result = mc_run(&params, &config)?;
    dir.write("trials.csv", &format!("{trials} trials"), |out| {
        write_trials_csv(&result, &config.betas, out)
    })?;
    let s = &result.summary;
    dir.write(
        "summary.json",
        &format!(
            "K = {:.3e}, anomaly rate {:.4} ± {:.4}, MSE {:.4e}",
            s.k, s.anomaly_rate, s.anomaly_se, s.mse
        ),
        |out| write_json(s, out),
    )
}

fn sweep_spec(r: &Resolved, default_trials: u64) -> Result<SweepSpec, CliError> {
    let ps = r.param_set()?;
    let base = raw_params(r)?;
    let mut spec = SweepSpec::new(
        base,
        r.required_list("R")?,
        r.required_list("T")?,
        r.u64("trials")?.unwrap_or(default_trials) as usize,
        mode(r)?,
        ps.seed,
    );
    spec.betas = r.list("beta")?.unwrap_or_default();
    spec.grid = grid(r)?;
    spec.estimator = estimator(r, &base)?;
    spec.k_max = r.scalar("k_max")?;
    spec.targets.bounds = r.flag("with_bounds")?;
    spec.unchecked_amplitudes = r.flag("unchecked_amplitudes")?;
    Ok(spec)
}

fn write_report(r: &Resolved, dir: &mut RunDir, report: &ComparisonReport) -> Result<(), CliError> {
    let passed = report.verdicts.iter().filter(|v| v.pass).count();
    let skipped = report.cells.iter().filter(|c| c.skipped.is_some()).count();
    dir.write(
        "report.json",
        &format!(
            "{} cells ({skipped} skipped), {passed}/{} checks pass",
            report.cells.len(),
            report.verdicts.len()
        ),
        |out| write_json(report, out),
    )?;
    dir.write(
        "cells.csv",
        &format!("{} cells", report.cells.len()),
        |out| write_cells_csv(report, out),
    )?;
    let quantities: &[&str] = if report.spec.betas.is_empty() {
        &["anomaly_rate", "mse", "local_mse"]
    } else {
        &["psi_emp", "gap", "anomaly_rate"]
    };
    for q in quantities {
        dir.write(
            &format!("matrix_{q}.csv"),
            &format!("{q} by (β, R) × T"),
            |out| write_matrix_csv(report, q, out).map(|_| ()),
        )?;
    }
    if r.flag("emit_plot_data")? {
        dir.write("plot_data.csv", "long format", |out| {
            write_plot_data(report, out)
        })?;
    }
    for v in &report.verdicts {
        println!(
            "{} {}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.detail
        );
    }
    Ok(())
}

fn slepian(r: &Resolved, dir: &mut RunDir) -> Result<(), CliError> {
    dir.write("slepian.csv", "F₀ and f₀ on [−4, 8]", |out| {
        writeln!(out, "a,cdf,pdf,survival,tail_density")?;
        for i in 0..=1200 {
            let a = -4.0 + i as f64 * 0.01;
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt17(a),
                fmt17(slepian_cdf(a)),
                fmt17(slepian_pdf(a)),
                fmt17(slepian_survival(a)),
                fmt17(slepian_tail(a))
            )?;
        }
        Ok(())
    })?;
    if r.flag("check")? {
        let res = slepian_residuals();
        println!(
            "normalization residual |∫f₀ − 1| = {:.3e}",
            res.normalization
        );
        println!(
            "derivative residual max|f₀ − dF₀/da| = {:.3e}",
            res.derivative
        );
        println!(
            "tail asymptotic relative error at a = 8: {:.3e}",
            res.tail_at_8
        );
        dir.write("check.json", "residuals", |out| write_json(&res, out))?;
    }
    if let Some(paths) = r.u64("paths")? {
        let g = match r.u64("G")? {
            Some(g) => g as usize,
            None => DEFAULT_SLEPIAN_G,
        };
        let report = validate_slepian(paths as usize, g, r.param_set()?.seed)?;
        let flag = if report.under_resolved {
            ", under-resolved grid"
        } else {
            ""
        };
        dir.write(
            "ks.json",
            &format!(
                "KS = {:.4} vs threshold {:.4}: {}{flag}",
                report.ks,
                report.threshold,
                if report.pass { "pass" } else { "fail" }
            ),
            |out| write_json(&report, out),
        )?;
    }
    Ok(())
}

fn bounds(r: &Resolved, dir: &mut RunDir) -> Result<(), CliError> {
    let ps = r.param_set()?;
    let c = channel(r)?.capacity();
    let rates = r.list("R")?.unwrap_or_else(|| vec![ps.model.r]);
    let durations = r.list("T")?.unwrap_or_else(|| vec![ps.model.t]);
    let mut grid_spec = BoundsGrid::new(
        ps.model,
        vec![c],
        rates.iter().map(|x| x / c).collect(),
        durations,
    );
    grid_spec.trials = r.u64("trials")?.unwrap_or(0) as usize;
    grid_spec.mode = mode(r)?;
    grid_spec.master_seed = ps.seed;
    grid_spec.grid = grid(r)?;
    let cmp = compare_bounds(&grid_spec)?;
    dir.write("bounds.csv", &format!("{} rows", cmp.rows.len()), |out| {
        writeln!(
            out,
            "C,R,T,K,wwb,wwb_rate,wwb_exponent,ml_mse_exponent,error_exponent,regime,empirical_mse,anomaly_rate"
        )?;
        for row in &cmp.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                fmt17(row.c),
                fmt17(row.r),
                fmt17(row.t),
                fmt17(row.k),
                fmt17(row.wwb),
                fmt17(row.wwb_rate),
                fmt17(row.wwb_exponent),
                fmt17(row.ml_mse_exponent),
                fmt17(row.error_exponent),
                serde_json::to_value(row.regime).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                row.empirical_mse.map(fmt17).unwrap_or_default(),
                row.anomaly_rate.map(fmt17).unwrap_or_default()
            )?;
        }
        Ok(())
    })?;
    dir.write("bounds.json", "rows and checks", |out| {
        write_json(&cmp, out)
    })?;
    for v in &cmp.verdicts {
        println!(
            "{} {}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.detail
        );
    }
    Ok(())
}

fn mismatch(r: &Resolved, dir: &mut RunDir) -> Result<(), CliError> {
    let ch = channel(r)?;
    let rho = r
        .scalar("rho")?
        .ok_or_else(|| CliError::Usage("mismatch needs --rho".into()))?;
    let m = mismatch_transform(rho, &ch)?;
    let w = window(r)?;
    write_diagram(dir, &w, &m.diagram, |b, rate| {
        let full = psi_mismatch(b, rate, rho, &ch)?;
        Ok((full, psi_a_single(b, rate, &ch).value))
    })?;
    let matched = classify_phase_single(m.triple_point.0, m.triple_point.1, &ch);
    println!(
        "triple point (β, R) = ({}, {}); the matched receiver is {} there",
        m.triple_point.0, m.triple_point.1, matched
    );
    Ok(())
}

pub fn run(r: &Resolved, dir: &mut RunDir) -> Result<(), CliError> {
    match r.command {
        "phase-diagram" => phase_diagram(r, dir),
        "phase-diagram-joint" => phase_diagram_joint(r, dir),
        "psi" => psi(r, dir),
        "simulate" => simulate(r, dir),
        "sweep-psi" => {
            let report = sweep_psi(&sweep_spec(r, 20)?)?;
            write_report(r, dir, &report)
        }
        "sweep-threshold" => {
            let report = sweep_threshold(&sweep_spec(r, 200)?)?;
            write_report(r, dir, &report)
        }
        "slepian" => slepian(r, dir),
        "bounds" => bounds(r, dir),
        "mismatch" => mismatch(r, dir),
        other => Err(CliError::Usage(format!("unknown command {other:?}"))),
    }
}
