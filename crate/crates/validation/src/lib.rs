//! Bookkeeping for the acceptance suite: each criterion collects named
//! requirements and free-form notes, and the runner prints one verdict
//! line per criterion followed by its details.

use std::time::{Duration, Instant};

/// Requirements gathered while evaluating one criterion.
#[derive(Debug, Default)]
pub struct Check {
    lines: Vec<(Option<bool>, String)>,
}

impl Check {
    /// Records a requirement; the criterion passes only if all hold.
    pub fn require(&mut self, ok: bool, what: impl Into<String>) -> bool {
        self.lines.push((Some(ok), what.into()));
        ok
    }

    /// Records a diagnostic that does not affect the verdict.
    pub fn note(&mut self, what: impl Into<String>) {
        self.lines.push((None, what.into()));
    }

    pub fn passed(&self) -> bool {
        self.lines.iter().all(|(ok, _)| ok.unwrap_or(true))
    }
}

pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
    /// Wall-clock limit that is itself part of the criterion.
    pub budget: Option<Duration>,
    pub run: fn() -> Check,
}

#[derive(Debug)]
pub struct Outcome {
    pub id: u32,
    pub pass: bool,
    pub elapsed: Duration,
}

fn mark(ok: Option<bool>) -> &'static str {
    match ok {
        Some(true) => "ok  ",
        Some(false) => "FAIL",
        None => "note",
    }
}

/// Runs one criterion and prints its verdict line and details.
pub fn evaluate(c: &Criterion) -> Outcome {
    let start = Instant::now();
    let mut check = (c.run)();
    let elapsed = start.elapsed();
    if let Some(limit) = c.budget {
        check.require(
            elapsed <= limit,
            format!(
                "runtime {:.2} s within {:.0} s",
                elapsed.as_secs_f64(),
                limit.as_secs_f64()
            ),
        );
    }
    let pass = check.passed();
    println!(
        "{} criterion {}: {} [{:.1} s]",
        if pass { "PASS" } else { "FAIL" },
        c.id,
        c.title,
        elapsed.as_secs_f64()
    );
    for (ok, line) in &check.lines {
        println!("    {} {line}", mark(*ok));
    }
    Outcome {
        id: c.id,
        pass,
        elapsed,
    }
}

/// Runs the criteria whose ids appear in `only` (all if empty) and prints
/// a closing tally. Returns whether every criterion run passed.
pub fn run_all(criteria: &[Criterion], only: &[u32]) -> bool {
    let outcomes: Vec<Outcome> = criteria
        .iter()
        .filter(|c| only.is_empty() || only.contains(&c.id))
        .map(evaluate)
        .collect();
    let passed = outcomes.iter().filter(|o| o.pass).count();
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.pass)
        .map(|o| o.id.to_string())
        .collect();
    println!(
        "acceptance: {passed}/{} criteria pass{}",
        outcomes.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failing: {}", failed.join(", "))
        }
    );
    failed.is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn notes_do_not_affect_the_verdict() {
        let mut c = Check::default();
        c.note("diagnostic");
        assert!(c.passed());
        assert!(!c.require(false, "x"));
        assert!(!c.passed());
    }

    #[test]
    fn budget_is_enforced() {
        fn slow() -> Check {
            std::thread::sleep(Duration::from_millis(20));
            Check::default()
        }
        let c = Criterion {
            id: 0,
            title: "t",
            budget: Some(Duration::from_millis(1)),
            run: slow,
        };
        assert!(!evaluate(&c).pass);
    }
}
