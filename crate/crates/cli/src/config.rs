//! Merges a parameter file with command-line flags into one key-value
//! document. Flags win; the merged document is what runs, what is hashed
//! for the run directory, and what the manifest records.

use std::fmt::Write as _;

use threshlab::paramfile::{KvDocument, ParamSet, PARAM_KEYS};

use crate::args::{Axis, Cli, Command, DiagramArgs, SimulateArgs};
use crate::error::CliError;

/// Keys beyond the model parameters that a config file may set.
pub const EXTRA_KEYS: [&str; 15] = [
    "beta",
    "trials",
    "mode",
    "estimator",
    "k_max",
    "unchecked_amplitudes",
    "with_bounds",
    "rho",
    "beta_max",
    "R_max",
    "resolution",
    "anomalous",
    "check",
    "paths",
    "emit_plot_data",
];

#[derive(Debug, Clone)]
pub struct Resolved {
    pub command: &'static str,
    pub doc: KvDocument,
}

fn axis_text(axis: &Axis) -> String {
    axis.0
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn set_opt<T: ToString>(doc: &mut KvDocument, key: &str, value: Option<T>) {
    if let Some(v) = value {
        doc.set(key, v.to_string());
    }
}

fn set_flag(doc: &mut KvDocument, key: &str, on: bool) {
    if on {
        doc.set(key, "true");
    }
}

fn set_diagram(doc: &mut KvDocument, d: &DiagramArgs) {
    set_opt(doc, "beta_max", d.beta_max);
    set_opt(doc, "R_max", d.r_max);
    set_opt(doc, "resolution", d.resolution);
}

fn set_sim(doc: &mut KvDocument, s: &SimulateArgs) {
    set_opt(doc, "estimator", s.estimator.as_ref());
    set_opt(doc, "k_max", s.k_max);
    set_flag(doc, "unchecked_amplitudes", s.unchecked_amplitudes);
}

impl Resolved {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let mut doc = match &cli.common.config {
            Some(path) => KvDocument::load(path)?,
            None => KvDocument::default(),
        };
        let allowed: Vec<&str> = PARAM_KEYS
            .iter()
            .chain(EXTRA_KEYS.iter())
            .copied()
            .collect();
        doc.reject_unknown(&allowed)?;
        let c = &cli.common;
        set_opt(&mut doc, "P", c.p);
        set_opt(&mut doc, "N0", c.n0);
        set_opt(&mut doc, "T", c.t.as_ref().map(axis_text));
        set_opt(&mut doc, "Delta0", c.delta0);
        set_opt(&mut doc, "R", c.r.as_ref().map(axis_text));
        set_opt(&mut doc, "M", c.m);
        set_opt(&mut doc, "alpha_min", c.alpha_min);
        set_opt(&mut doc, "alpha_max", c.alpha_max);
        set_opt(&mut doc, "G", c.g);
        set_opt(&mut doc, "beta", c.beta.as_ref().map(axis_text));
        set_opt(&mut doc, "seed", c.seed);
        set_opt(&mut doc, "trials", c.trials);
        set_opt(&mut doc, "mode", c.mode.as_ref());
        set_flag(&mut doc, "emit_plot_data", c.emit_plot_data);
        let command = match &cli.command {
            Command::PhaseDiagram(d) => {
                set_diagram(&mut doc, d);
                "phase-diagram"
            }
            Command::PhaseDiagramJoint(j) => {
                set_diagram(&mut doc, &j.diagram);
                set_flag(&mut doc, "anomalous", j.anomalous);
                "phase-diagram-joint"
            }
            Command::Psi => "psi",
            Command::Simulate(s) => {
                set_sim(&mut doc, s);
                "simulate"
            }
            Command::SweepPsi(s) | Command::SweepThreshold(s) => {
                set_sim(&mut doc, &s.sim);
                set_flag(&mut doc, "with_bounds", s.with_bounds);
                if matches!(cli.command, Command::SweepPsi(_)) {
                    "sweep-psi"
                } else {
                    "sweep-threshold"
                }
            }
            Command::Slepian(s) => {
                set_flag(&mut doc, "check", s.check);
                set_opt(&mut doc, "paths", s.paths);
                "slepian"
            }
            Command::Bounds => "bounds",
            Command::Mismatch(m) => {
                set_opt(&mut doc, "rho", m.rho);
                set_diagram(&mut doc, &m.diagram);
                "mismatch"
            }
        };
        Ok(Resolved { command, doc })
    }

    /// `name = value` lines in key order, prefixed by the command.
    pub fn canonical_text(&self) -> String {
        let mut out = format!("command = {}\n", self.command);
        for key in self.doc.keys() {
            let _ = writeln!(out, "{key} = {}", self.doc.get(key).unwrap_or_default());
        }
        out
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        Ok(self.doc.get_list(key)?)
    }

    /// A single number; a list with more than one entry is a usage error.
    pub fn scalar(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.list(key)? {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(v[0])),
            Some(v) => Err(CliError::Usage(format!(
                "{} takes a single value for `{key}` (got {} values)",
                self.command,
                v.len()
            ))),
        }
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        Ok(self.doc.get_u64(key)?)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.doc.get(key)
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.doc.get(key) {
            None => Ok(false),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(CliError::Usage(format!(
                "`{key}` must be true or false (got {other:?})"
            ))),
        }
    }

    pub fn required_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        self.list(key)?.ok_or_else(|| {
            CliError::Usage(format!(
                "{} needs `{key}` (flag or config key)",
                self.command
            ))
        })
    }

    /// The parameter set, with list-valued `R` and `T` reduced to their
    /// first entry; sweeps read the full axes separately.
    pub fn param_set(&self) -> Result<ParamSet, CliError> {
        let mut doc = self.doc.clone();
        for key in ["R", "T"] {
            if let Some(v) = self.list(key)? {
                doc.set(key, v[0].to_string());
            }
        }
        Ok(ParamSet::from_kv(&doc, ParamSet::default())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;
    use std::io::Write;

    #[test]
    fn flags_override_the_file() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "P = 3\nR = 0.3, 0.6\ntrials = 10").unwrap();
        let path = file.path().to_str().unwrap().to_string();
        let cli = Cli::try_parse_from([
            "threshlab",
            "sweep-threshold",
            "--config",
            &path,
            "--trials",
            "200",
        ])
        .unwrap();
        let r = Resolved::from_cli(&cli).unwrap();
        assert_eq!(r.u64("trials").unwrap(), Some(200));
        assert_eq!(r.list("R").unwrap(), Some(vec![0.3, 0.6]));
        let ps = r.param_set().unwrap();
        assert_eq!(ps.model.p, 3.0);
        assert_eq!(ps.model.r, 0.3);
        assert!(r.scalar("R").is_err());
        assert!(r
            .canonical_text()
            .starts_with("command = sweep-threshold\n"));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "P = 3\nQ = 1").unwrap();
        let path = file.path().to_str().unwrap().to_string();
        let cli = Cli::try_parse_from(["threshlab", "psi", "--config", &path]).unwrap();
        assert!(Resolved::from_cli(&cli).is_err());
    }

    #[test]
    fn json_config_is_sniffed_by_extension() {
        let mut file = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        writeln!(file, r#"{{"P": 4, "beta": [0.5, 1]}}"#).unwrap();
        let path = file.path().to_str().unwrap().to_string();
        let cli = Cli::try_parse_from(["threshlab", "psi", "--config", &path]).unwrap();
        let r = Resolved::from_cli(&cli).unwrap();
        assert_eq!(r.scalar("P").unwrap(), Some(4.0));
        assert_eq!(r.list("beta").unwrap(), Some(vec![0.5, 1.0]));
    }
}
