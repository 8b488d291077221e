//! Pass/fail bookkeeping for the acceptance target.
//!
//! The harness lives in its own package so that cargo runs it after the
//! unit and integration suites of `gkit` and `gkit-core`.

use std::time::{Duration, Instant};

/// Outcome of one criterion: whether it held and a one-line summary of
/// the measured quantities.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Default)]
pub struct Sheet {
    rows: Vec<(usize, String, Verdict, Duration, Option<Duration>)>,
}

impl Sheet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs `f`, times it, and prints the verdict line immediately. A
    /// runtime budget, if given, is part of the verdict.
    pub fn check(
        &mut self,
        id: usize,
        name: &str,
        budget: Option<Duration>,
        f: impl FnOnce() -> Verdict,
    ) {
        let t0 = Instant::now();
        let mut v = f();
        let took = t0.elapsed();
        if let Some(b) = budget {
            if took > b {
                v.pass = false;
                v.detail
                    .push_str(&format!("; over budget {:.0}s", b.as_secs_f64()));
            }
        }
        println!(
            "{} [{id:>2}] {name}: {} ({:.2}s)",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64()
        );
        self.rows.push((id, name.to_string(), v, took, budget));
    }

    pub fn failures(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| !r.2.pass)
            .map(|r| r.0)
            .collect()
    }

    pub fn summary(&self) -> String {
        let failed = self.failures();
        format!(
            "{} of {} criteria passed{}",
            self.rows.len() - failed.len(),
            self.rows.len(),
            if failed.is_empty() {
                String::new()
            } else {
                format!("; failed: {failed:?}")
            }
        )
    }
}
