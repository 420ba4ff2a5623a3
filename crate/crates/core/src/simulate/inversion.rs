//! Tabulated inverse of the per-interval maximum's law `F₀`.
//!
//! Below the median the table interpolates `a` against `ln F₀(a)`; above it,
//! against `ln(1 − F₀(a))`. Both coordinates keep full relative precision in
//! their tails, so the inverse is accurate for `U` arbitrarily close to
//! either end. Targets beyond the tabulated range fall back to Newton
//! iteration on the exact log-probability.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use crate::analytic::slepian::{slepian_cdf, slepian_log_survival, slepian_pdf};
use crate::error::{Error, Result};

pub const DEFAULT_NODES: usize = 10_000;
pub const DEFAULT_RANGE: (f64, f64) = (-6.0, 8.0);

const MAGIC: &[u8; 8] = b"THLF0INV";
const VERSION: u32 = 1;

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone, PartialEq)]
struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// `xs` strictly increasing, `ys` monotone.
    fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            slopes[i] = if secants[i - 1] * secants[i] <= 0.0 {
                0.0
            } else {
                0.5 * (secants[i - 1] + secants[i])
            };
        }
        for i in 0..n - 1 {
            if secants[i] == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let a = slopes[i] / secants[i];
            let b = slopes[i + 1] / secants[i];
            let h = a * a + b * b;
            if h > 9.0 {
                let t = 3.0 / h.sqrt();
                slopes[i] = t * a * secants[i];
                slopes[i + 1] = t * b * secants[i];
            }
        }
        MonotoneCubic { xs, ys, slopes }
    }

    fn range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Evaluates inside `[xs[0], xs[n-1]]`.
    fn eval(&self, x: f64) -> f64 {
        let i = match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return self.ys[i],
            Err(i) => i.clamp(1, self.xs.len() - 1) - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i]
            + h10 * h * self.slopes[i]
            + h01 * self.ys[i + 1]
            + h11 * h * self.slopes[i + 1]
    }
}

/// Inverse of `F₀` built from `nodes` equally spaced levels on `range`.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionTable {
    nodes: usize,
    range: (f64, f64),
    /// `a` as a function of `ln F₀(a)` below the median.
    lower: MonotoneCubic,
    /// `a` as a function of `ln(1 − F₀(a))` above the median, stored with
    /// increasing abscissa.
    upper: MonotoneCubic,
}

fn log_cdf(a: f64) -> f64 {
    slepian_cdf(a).ln()
}

/// Newton iteration for `g(a) = target` with `g` monotone and `g'` given.
fn newton(g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64, target: f64, start: f64) -> f64 {
    let mut a = start;
    for _ in 0..100 {
        let step = (g(a) - target) / dg(a);
        if !step.is_finite() {
            break;
        }
        a -= step;
        if step.abs() <= 1e-14 * a.abs().max(1.0) {
            break;
        }
    }
    a
}

impl InversionTable {
    pub fn build(nodes: usize, range: (f64, f64)) -> Result<Self> {
        let (lo, hi) = range;
        if nodes < 16 || !(lo < 0.0 && hi > 1.0) {
            return Err(Error::Table(format!(
                "need >= 16 nodes on a range straddling the median (got {nodes} on [{lo}, {hi}])"
            )));
        }
        let grid: Vec<f64> = (0..nodes)
            .map(|i| lo + (hi - lo) * i as f64 / (nodes - 1) as f64)
            .collect();
        let ln_cdf: Vec<f64> = grid.iter().map(|&a| log_cdf(a)).collect();
        let ln_sf: Vec<f64> = grid.iter().map(|&a| slepian_log_survival(a)).collect();
        Ok(Self::from_columns(nodes, range, &grid, &ln_cdf, &ln_sf))
    }

    fn from_columns(
        nodes: usize,
        range: (f64, f64),
        grid: &[f64],
        ln_cdf: &[f64],
        ln_sf: &[f64],
    ) -> Self {
        // the median lies near a = 0.93; split at the first node past it
        let split = ln_cdf
            .iter()
            .position(|&l| l >= 0.5f64.ln())
            .unwrap_or(nodes - 1)
            .clamp(2, nodes - 2);
        let lower = MonotoneCubic::new(ln_cdf[..=split].to_vec(), grid[..=split].to_vec());
        let mut xs: Vec<f64> = ln_sf[split - 1..].to_vec();
        let mut ys: Vec<f64> = grid[split - 1..].to_vec();
        xs.reverse();
        ys.reverse();
        let upper = MonotoneCubic::new(xs, ys);
        InversionTable {
            nodes,
            range,
            lower,
            upper,
        }
    }

    /// The process-wide table with default resolution.
    pub fn global() -> &'static InversionTable {
        static TABLE: OnceLock<InversionTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            InversionTable::build(DEFAULT_NODES, DEFAULT_RANGE).expect("default table builds")
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    /// `F₀⁻¹(u)` for `u` in `(0, 1)`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        if u <= 0.5 {
            self.from_log_cdf(u.ln())
        } else {
            self.from_log_survival((-u).ln_1p())
        }
    }

    /// The level `a` with `ln F₀(a) = target`.
    pub fn from_log_cdf(&self, target: f64) -> f64 {
        let (x0, x1) = self.lower.range();
        if target >= x0 && target <= x1 {
            return self.lower.eval(target);
        }
        if target > x1 {
            return self.from_log_survival((-target.exp()).ln_1p());
        }
        newton(
            log_cdf,
            |a| slepian_pdf(a) / slepian_cdf(a),
            target,
            self.range.0,
        )
    }

    /// The level `a` with `ln(1 − F₀(a)) = target`.
    pub fn from_log_survival(&self, target: f64) -> f64 {
        let (x0, x1) = self.upper.range();
        if target >= x0 && target <= x1 {
            return self.upper.eval(target);
        }
        if target > x1 {
            return self.from_log_cdf((-target.exp()).ln_1p());
        }
        // d/da ln S(a) = −f₀(a)/S(a) ≈ −(a + 1/a) for large a
        let dg = |a: f64| {
            let ls = slepian_log_survival(a);
            let lf = slepian_pdf(a).ln();
            if lf.is_finite() {
                -(lf - ls).exp()
            } else {
                -(a + 1.0 / a)
            }
        };
        newton(slepian_log_survival, dg, target, self.range.1)
    }

    /// Writes the table: magic, version, node count, range, then per node
    /// `a`, `ln F₀(a)`, `ln(1 − F₀(a))`, all little-endian.
    pub fn write_to(&self, out: &mut dyn Write) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(self.nodes as u64).to_le_bytes())?;
        out.write_all(&self.range.0.to_le_bytes())?;
        out.write_all(&self.range.1.to_le_bytes())?;
        let (lo, hi) = self.range;
        for i in 0..self.nodes {
            let a = lo + (hi - lo) * i as f64 / (self.nodes - 1) as f64;
            for v in [a, log_cdf(a), slepian_log_survival(a)] {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a table written by [`write_to`](Self::write_to), requiring the
    /// given node count and range.
    pub fn read_from(input: &mut dyn Read, nodes: usize, range: (f64, f64)) -> Result<Self> {
        let mut buf = Vec::new();
        input
            .read_to_end(&mut buf)
            .map_err(|e| Error::Table(format!("cannot read cache: {e}")))?;
        let header = MAGIC.len() + 4 + 8 + 16;
        if buf.len() < header || &buf[..8] != MAGIC {
            return Err(Error::Table("not an inversion table cache".into()));
        }
        let f = |at: usize| f64::from_le_bytes(buf[at..at + 8].try_into().expect("8 bytes"));
        let version = u32::from_le_bytes(buf[8..12].try_into().expect("4 bytes"));
        let stored = u64::from_le_bytes(buf[12..20].try_into().expect("8 bytes")) as usize;
        let stored_range = (f(20), f(28));
        if version != VERSION {
            return Err(Error::Table(format!(
                "cache version {version}, expected {VERSION}"
            )));
        }
        if stored != nodes || stored_range != range {
            return Err(Error::Table(format!(
                "cache holds {stored} nodes on [{}, {}], expected {nodes} on [{}, {}]",
                stored_range.0, stored_range.1, range.0, range.1
            )));
        }
        if buf.len() != header + nodes * 24 || nodes < 16 {
            return Err(Error::Table(format!(
                "cache length {} does not match {nodes} nodes",
                buf.len()
            )));
        }
        let mut grid = Vec::with_capacity(nodes);
        let mut ln_cdf = Vec::with_capacity(nodes);
        let mut ln_sf = Vec::with_capacity(nodes);
        for i in 0..nodes {
            let at = header + 24 * i;
            grid.push(f(at));
            ln_cdf.push(f(at + 8));
            ln_sf.push(f(at + 16));
        }
        Ok(Self::from_columns(nodes, range, &grid, &ln_cdf, &ln_sf))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(&mut file).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, nodes: usize, range: (f64, f64)) -> Result<Self> {
        let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut file, nodes, range)
    }

    /// Loads the cache at `path` when it matches, otherwise rebuilds and
    /// rewrites it.
    pub fn load_or_build(path: &Path, nodes: usize, range: (f64, f64)) -> Result<Self> {
        match Self::load(path, nodes, range) {
            Ok(t) => Ok(t),
            Err(e) => {
                log::info!("rebuilding inversion table ({e})");
                let table = Self::build(nodes, range)?;
                table.save(path)?;
                Ok(table)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::slepian::slepian_survival;
    use proptest::prelude::*;

    #[test]
    fn monotone_cubic_reproduces_nodes_and_keeps_order() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys = vec![0.0, 0.0, 0.1, 0.1, 2.0, 2.1, 2.1, 5.0, 5.0, 9.0];
        let c = MonotoneCubic::new(xs, ys.clone());
        assert_eq!(c.eval(4.0), 2.0);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=900 {
            let v = c.eval(i as f64 / 100.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn inverse_round_trips_to_1e6() {
        let t = InversionTable::global();
        for i in 1..2000 {
            let u = i as f64 / 2000.0;
            let a = t.inverse_cdf(u);
            assert!(
                (slepian_cdf(a) - u).abs() < 1e-6 * u.min(1.0 - u).max(1e-3),
                "u = {u}"
            );
        }
    }

    #[test]
    fn deep_tails_use_exact_log_probabilities() {
        let t = InversionTable::global();
        for target in [-40.0, -100.0, -1e4] {
            let a = t.from_log_survival(target);
            assert!(
                (slepian_log_survival(a) - target).abs() < 1e-9 * target.abs(),
                "{target}"
            );
        }
        let a = t.from_log_survival(-20.0);
        assert!((slepian_survival(a).ln() + 20.0).abs() < 1e-6);
        let low = t.from_log_cdf(-50.0);
        assert!(low < -6.0 && (log_cdf(low) + 50.0).abs() < 1e-6);
    }

    #[test]
    fn cache_round_trip_and_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f0.bin");
        let table = InversionTable::build(512, DEFAULT_RANGE).unwrap();
        table.save(&path).unwrap();
        let back = InversionTable::load(&path, 512, DEFAULT_RANGE).unwrap();
        assert_eq!(back, table);
        assert!(matches!(
            InversionTable::load(&path, 1024, DEFAULT_RANGE),
            Err(Error::Table(_))
        ));
        assert!(matches!(
            InversionTable::load(&path, 512, (-5.0, 8.0)),
            Err(Error::Table(_))
        ));
        std::fs::write(&path, b"garbage").unwrap();
        assert!(matches!(
            InversionTable::load(&path, 512, DEFAULT_RANGE),
            Err(Error::Table(_))
        ));
        let rebuilt = InversionTable::load_or_build(&path, 512, DEFAULT_RANGE).unwrap();
        assert_eq!(rebuilt, table);
    }

    proptest! {
        #[test]
        fn inverse_is_monotone(u in 1e-9f64..0.999_999_999, v in 1e-9f64..0.999_999_999) {
            let t = InversionTable::global();
            let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
            prop_assert!(t.inverse_cdf(lo) <= t.inverse_cdf(hi));
        }
    }
}
