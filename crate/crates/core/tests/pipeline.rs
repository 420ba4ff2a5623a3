//! End-to-end use of the public API: parameter file to simulation to
//! report, checked against closed forms where they apply.

use threshlab::analytic::{classify_phase_single, psi_single, Phase, PhaseLabel};
use threshlab::experiments::{
    sweep_psi, sweep_threshold, write_cells_csv, write_json, ComparisonReport, SweepSpec,
};
use threshlab::paramfile::ParamSet;
use threshlab::simulate::{mc_run, McConfig, Mode};
use threshlab::{Error, SystemParams};

const FILE: &str = "P = 2\nN0 = 2\nT = 8\nDelta0 = 1\nR = 0.4\nM = 0.4\nG = 16\nseed = 11\n";

#[test]
fn parameter_file_drives_a_simulation() {
    let set = ParamSet::parse_kv(FILE).unwrap();
    let params = SystemParams::validate(&set.model).unwrap();
    assert_eq!(params.capacity(), 1.0);
    let reparsed = ParamSet::parse_kv(&set.to_kv()).unwrap();
    assert_eq!(reparsed, set);

    let mut config = McConfig::new(50, Mode::Exact, set.seed);
    config.betas = vec![1.0];
    let result = mc_run(&params, &config).unwrap();
    assert_eq!(result.trials.len(), 50);
    assert_eq!(result.summary.psi.len(), 1);
    // R < C: most trials land near the truth
    assert!(
        result.summary.anomaly_rate < 0.5,
        "{}",
        result.summary.anomaly_rate
    );
}

#[test]
fn missing_keys_and_bad_values_are_reported() {
    let err = ParamSet::parse_kv("P = 2\nN0 = 2\n").unwrap_err();
    assert!(matches!(err, Error::Parse { .. }), "{err}");
    let set = ParamSet::parse_kv(&FILE.replace("M = 0.4", "M = 0.6")).unwrap();
    assert!(SystemParams::validate(&set.model).unwrap_err().is_domain());
}

#[test]
fn psi_sweep_report_round_trips_and_labels_cells() {
    let set = ParamSet::parse_kv(FILE).unwrap();
    let mut spec = SweepSpec::new(
        set.model,
        vec![0.5, 1.5],
        vec![6.0, 8.0],
        6,
        Mode::Surrogate,
        3,
    );
    spec.betas = vec![0.5, 2.0];
    let report = sweep_psi(&spec).unwrap();
    assert_eq!(report.cells.len(), spec.cell_count());
    let ch = SystemParams::validate(&set.model).unwrap().channel();
    for cell in &report.cells {
        let psi = cell.psi.as_ref().expect("psi attached");
        let beta = cell.beta.unwrap();
        assert_eq!(psi.analytic, psi_single(beta, cell.r, &ch).value);
        assert_eq!(
            psi.branch,
            classify_phase_single(beta, cell.r, &ch).to_string()
        );
    }
    assert_eq!(
        classify_phase_single(2.0, 1.5, &ch),
        PhaseLabel::Interior(Phase::Glassy)
    );

    let mut json = Vec::new();
    write_json(&report, &mut json).unwrap();
    let back: ComparisonReport = serde_json::from_slice(&json).unwrap();
    assert_eq!(back, report);
    let mut csv = Vec::new();
    write_cells_csv(&report, &mut csv).unwrap();
    assert_eq!(
        String::from_utf8(csv).unwrap().lines().count(),
        1 + report.cells.len()
    );
}

#[test]
fn threshold_sweep_orders_anomaly_rates() {
    let set = ParamSet::parse_kv(FILE).unwrap();
    let spec = SweepSpec::new(
        set.model,
        vec![0.2, 1.0, 2.5],
        vec![8.0],
        100,
        Mode::Surrogate,
        4,
    );
    let report = sweep_threshold(&spec).unwrap();
    let analysis = report.threshold.as_ref().unwrap();
    let rates = &analysis.curves[0].anomaly_rates;
    assert!(rates[0] < rates[1] && rates[1] < rates[2], "{rates:?}");
    assert!(report.verdict("anomaly-monotone[T=8]").unwrap().pass);
}
