use std::io::Write;

use serde::Serialize;

use super::{CellRecord, ComparisonReport};
use crate::numeric::fmt17;

/// Pretty JSON followed by a newline.
pub fn write_json(value: &impl Serialize, out: &mut dyn Write) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

/// A named per-cell quantity and its standard error, if it has one.
type Quantity = (
    &'static str,
    fn(&CellRecord) -> Option<f64>,
    fn(&CellRecord) -> Option<f64>,
);

const QUANTITIES: [Quantity; 6] = [
    (
        "psi_emp",
        |c| c.psi.as_ref().map(|p| p.emp_mean),
        |c| c.psi.as_ref().map(|p| p.emp_std),
    ),
    (
        "psi_analytic",
        |c| c.psi.as_ref().map(|p| p.analytic),
        |_| None,
    ),
    (
        "gap",
        |c| c.psi.as_ref().map(|p| p.gap),
        |c| c.psi.as_ref().map(|p| p.gap_se),
    ),
    (
        "anomaly_rate",
        |c| c.estimation.as_ref().map(|e| e.anomaly_rate),
        |c| c.estimation.as_ref().map(|e| e.anomaly_se),
    ),
    ("mse", |c| c.estimation.as_ref().map(|e| e.mse), |_| None),
    (
        "local_mse",
        |c| c.estimation.as_ref().and_then(|e| e.local_mse),
        |_| None,
    ),
];

/// Names accepted by [`write_matrix_csv`].
pub fn quantity_names() -> impl Iterator<Item = &'static str> {
    QUANTITIES.iter().map(|q| q.0)
}

/// One row per cell with every empirical and analytic column.
pub fn write_cells_csv(report: &ComparisonReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "beta,R,T,K,skipped,psi_emp_mean,psi_emp_std,psi_analytic,branch,gap,gap_se,anomaly_rate,anomaly_se,mse,local_mse,alpha_hat_median,wwb,wwb_rate,wwb_exponent,ml_mse_exponent"
    )?;
    for c in &report.cells {
        let psi = c.psi.as_ref();
        let est = c.estimation.as_ref();
        let b = c.bounds.as_ref();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            opt(c.beta),
            fmt17(c.r),
            fmt17(c.t),
            fmt17(c.k),
            c.skipped
                .as_deref()
                .map(|s| s.replace(',', ";"))
                .unwrap_or_default(),
            opt(psi.map(|p| p.emp_mean)),
            opt(psi.map(|p| p.emp_std)),
            opt(psi.map(|p| p.analytic)),
            psi.map(|p| p.branch.as_str()).unwrap_or(""),
            opt(psi.map(|p| p.gap)),
            opt(psi.map(|p| p.gap_se)),
            opt(est.map(|e| e.anomaly_rate)),
            opt(est.map(|e| e.anomaly_se)),
            opt(est.map(|e| e.mse)),
            opt(est.and_then(|e| e.local_mse)),
            opt(est.map(|e| e.alpha_hat_median)),
            opt(b.map(|b| b.wwb)),
            opt(b.map(|b| b.wwb_rate)),
            opt(b.map(|b| b.wwb_exponent)),
            opt(b.map(|b| b.ml_mse_exponent)),
        )?;
    }
    Ok(())
}

/// `quantity` as a matrix: one row per `(β, R)`, one column per `T`.
/// Returns `false` if the quantity is unknown.
pub fn write_matrix_csv(
    report: &ComparisonReport,
    quantity: &str,
    out: &mut dyn Write,
) -> std::io::Result<bool> {
    let Some(&(_, value, _)) = QUANTITIES.iter().find(|q| q.0 == quantity) else {
        return Ok(false);
    };
    let spec = &report.spec;
    write!(out, "beta,R")?;
    for t in &spec.durations {
        write!(out, ",T={t}")?;
    }
    writeln!(out)?;
    let betas: Vec<Option<f64>> = if spec.betas.is_empty() {
        vec![None]
    } else {
        spec.betas.iter().copied().map(Some).collect()
    };
    for &beta in &betas {
        for &r in &spec.rates {
            write!(out, "{},{}", opt(beta), fmt17(r))?;
            for &t in &spec.durations {
                write!(out, ",{}", opt(report.cell(beta, r, t).and_then(value)))?;
            }
            writeln!(out)?;
        }
    }
    Ok(true)
}

/// Long format, one observation per line, for external plotting tools.
pub fn write_plot_data(report: &ComparisonReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "quantity,beta,R,T,value,se")?;
    for &(name, value, se) in &QUANTITIES {
        for c in &report.cells {
            if let Some(v) = value(c) {
                writeln!(
                    out,
                    "{name},{},{},{},{},{}",
                    opt(c.beta),
                    fmt17(c.r),
                    fmt17(c.t),
                    fmt17(v),
                    opt(se(c))
                )?;
            }
        }
    }
    Ok(())
}
