//! Flat `name = value` parameter files and their JSON equivalent.
//!
//! ```text
//! # reference configuration
//! P = 2
//! N0 = 2
//! T = 10
//! ```
//!
//! Blank lines and `#` comments are ignored. Values may be comma-separated
//! lists, which sweep configurations use for their axes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RawParams;

/// The ten keys of a parameter set, in canonical order.
pub const PARAM_KEYS: [&str; 10] = [
    "P",
    "N0",
    "T",
    "Delta0",
    "R",
    "M",
    "alpha_min",
    "alpha_max",
    "G",
    "seed",
];

/// Key-value document with insertion-independent (sorted) iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDocument {
    entries: BTreeMap<String, (usize, String)>,
}

impl KvDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (name, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                location: format!("line {lineno}"),
                message: format!("expected `name = value`, found {content:?}"),
            })?;
            let (name, value) = (name.trim(), value.trim());
            if name.is_empty() || value.is_empty() {
                return Err(Error::Parse {
                    location: format!("line {lineno}"),
                    message: "empty name or value".into(),
                });
            }
            if entries
                .insert(name.to_string(), (lineno, value.to_string()))
                .is_some()
            {
                return Err(Error::Parse {
                    location: format!("line {lineno}"),
                    message: format!("duplicate key {name:?}"),
                });
            }
        }
        Ok(KvDocument { entries })
    }

    /// Builds a document from a JSON object whose values are numbers,
    /// strings, or arrays of those.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let obj = value.as_object().ok_or_else(|| Error::Parse {
            location: "json".into(),
            message: "top level must be an object".into(),
        })?;
        let scalar = |v: &serde_json::Value| match v {
            serde_json::Value::String(s) => Some(s.clone()),
            serde_json::Value::Number(n) => Some(n.to_string()),
            _ => None,
        };
        let mut doc = KvDocument::default();
        for (i, (k, v)) in obj.iter().enumerate() {
            let text = match v {
                serde_json::Value::Array(items) => items
                    .iter()
                    .map(scalar)
                    .collect::<Option<Vec<_>>>()
                    .map(|xs| xs.join(", ")),
                other => scalar(other),
            }
            .ok_or_else(|| Error::Parse {
                location: format!("json key {k:?}"),
                message: "value must be a number, string or array of those".into(),
            })?;
            doc.entries.insert(k.clone(), (i + 1, text));
        }
        Ok(doc)
    }

    /// Reads `path`, choosing JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        {
            Self::from_json(&text)
        } else {
            Self::parse(&text)
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let line = self.entries.get(key).map_or(0, |e| e.0);
        self.entries.insert(key.to_string(), (line, value.into()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn location(&self, key: &str) -> String {
        match self.entries.get(key) {
            Some((line, _)) if *line > 0 => format!("key {key:?} (line {line})"),
            _ => format!("key {key:?}"),
        }
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>().map_err(|_| Error::Parse {
                    location: self.location(key),
                    message: format!("not a number: {v:?}"),
                })
            })
            .transpose()
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| {
                v.parse::<u64>().map_err(|_| Error::Parse {
                    location: self.location(key),
                    message: format!("not a non-negative integer: {v:?}"),
                })
            })
            .transpose()
    }

    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                parse_list(v).map_err(|message| Error::Parse {
                    location: self.location(key),
                    message,
                })
            })
            .transpose()
    }

    /// Fails on the first key not in `allowed`.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        match self.keys().find(|k| !allowed.contains(k)) {
            Some(k) => Err(Error::Parse {
                location: self.location(k),
                message: format!("unknown key {k:?}"),
            }),
            None => Ok(()),
        }
    }
}

/// Parses `"0.5, 1, 2"` into numbers.
pub fn parse_list(text: &str) -> std::result::Result<Vec<f64>, String> {
    let values = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("not a number: {s:?}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("empty list".into());
    }
    Ok(values)
}

/// A complete parameter file: the model parameters plus grid resolution and
/// master seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    #[serde(flatten)]
    pub model: RawParams,
    #[serde(rename = "G", default = "default_g")]
    pub g: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_g() -> usize {
    16
}

impl Default for ParamSet {
    fn default() -> Self {
        ParamSet {
            model: RawParams::default(),
            g: default_g(),
            seed: 0,
        }
    }
}

impl ParamSet {
    /// Reads the ten parameter keys, falling back to `base` for absent ones.
    /// Other keys are left for the caller to interpret.
    pub fn from_kv(doc: &KvDocument, base: ParamSet) -> Result<Self> {
        let mut out = base;
        let m = &mut out.model;
        for (key, slot) in [
            ("P", &mut m.p),
            ("N0", &mut m.n0),
            ("T", &mut m.t),
            ("Delta0", &mut m.delta0),
            ("R", &mut m.r),
            ("M", &mut m.m),
            ("alpha_min", &mut m.alpha_min),
            ("alpha_max", &mut m.alpha_max),
        ] {
            if let Some(v) = doc.get_f64(key)? {
                *slot = v;
            }
        }
        if let Some(g) = doc.get_u64("G")? {
            out.g = g as usize;
        }
        if let Some(seed) = doc.get_u64("seed")? {
            out.seed = seed;
        }
        Ok(out)
    }

    pub fn parse_kv(text: &str) -> Result<Self> {
        let doc = KvDocument::parse(text)?;
        doc.reject_unknown(&PARAM_KEYS)?;
        for key in ["P", "N0", "T", "Delta0", "R", "M"] {
            if doc.get(key).is_none() {
                return Err(Error::Parse {
                    location: "parameter file".into(),
                    message: format!("missing required key {key:?}"),
                });
            }
        }
        Self::from_kv(&doc, ParamSet::default())
    }

    /// One `name = value` line per key in canonical order; floats use the
    /// shortest representation that round-trips.
    pub fn to_kv(&self) -> String {
        let m = &self.model;
        let mut out = String::new();
        for (key, value) in [
            ("P", m.p),
            ("N0", m.n0),
            ("T", m.t),
            ("Delta0", m.delta0),
            ("R", m.r),
            ("M", m.m),
            ("alpha_min", m.alpha_min),
            ("alpha_max", m.alpha_max),
        ] {
            let _ = writeln!(out, "{key} = {value:?}");
        }
        let _ = writeln!(out, "G = {}", self.g);
        let _ = writeln!(out, "seed = {}", self.seed);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameter set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
