//! Verification driver for the Plebański complex toolkit.
//!
//! Every suite returns a [`Report`] of [`Check`] records. A check has a
//! stable JSON shape `{check_id, paper_ref, status, residual, tolerance, seed}`
//! and is decided when it is constructed, so a report can be printed,
//! serialized and summarized without re-running anything.

use std::fmt;
use std::path::Path;

use pleb_core::{standard_triple, PerfectTriple};
use serde::Serialize;

pub mod app;
pub mod solve;
pub mod suites;

/// Outcome of a single check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// One verified identity or measured property.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub check_id: String,
    /// Short tag naming the identity under test.
    pub paper_ref: String,
    pub status: Status,
    pub residual: f64,
    /// Upper bound for the residual, or the lower bound for [`Check::at_least`] checks.
    pub tolerance: f64,
    pub seed: u64,
    /// Human-readable detail shown in the text report only.
    #[serde(skip)]
    pub note: String,
}

impl Check {
    /// Passes when `residual <= tolerance`.
    pub fn at_most(id: &str, tag: &str, residual: f64, tolerance: f64, seed: u64) -> Self {
        let pass = residual <= tolerance;
        Check::new(id, tag, pass, residual, tolerance, seed)
    }

    /// Passes when `value > bound`.
    pub fn at_least(id: &str, tag: &str, value: f64, bound: f64, seed: u64) -> Self {
        let pass = value > bound;
        Check::new(id, tag, pass, value, bound, seed)
    }

    /// An exact statement: residual 0 on success, 1 on failure.
    pub fn exact(id: &str, tag: &str, holds: bool, seed: u64) -> Self {
        Check::new(id, tag, holds, if holds { 0.0 } else { 1.0 }, 0.0, seed)
    }

    /// A check whose computation raised an error.
    pub fn error(id: &str, tag: &str, err: impl fmt::Display, seed: u64) -> Self {
        Check::new(id, tag, false, f64::NAN, 0.0, seed).with_note(err.to_string())
    }

    fn new(id: &str, tag: &str, pass: bool, residual: f64, tolerance: f64, seed: u64) -> Self {
        Check {
            check_id: id.to_string(),
            paper_ref: tag.to_string(),
            status: if pass { Status::Pass } else { Status::Fail },
            residual,
            tolerance,
            seed,
            note: String::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// All checks of one `verify` invocation.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub n: usize,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(suite: &str, opts: &Options, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(Check::passed);
        Report {
            suite: suite.to_string(),
            seed: opts.seed,
            n: opts.n,
            pass,
            checks,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "suite {} (seed {}, N = {})",
            self.suite, self.seed, self.n
        )?;
        for c in &self.checks {
            let mark = if c.passed() { "PASS" } else { "FAIL" };
            write!(
                f,
                "  {mark} {:<40} residual {:>11.3e}  tol {:>9.1e}  [{}]",
                c.check_id, c.residual, c.tolerance, c.paper_ref
            )?;
            if !c.note.is_empty() {
                write!(f, "  {}", c.note)?;
            }
            writeln!(f)?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// Shared settings of the verification suites.
#[derive(Clone, Debug)]
pub struct Options {
    /// Lattice size per axis.
    pub n: usize,
    pub seed: u64,
    /// Replaces the default floating-point tolerances when set.
    pub tol: Option<f64>,
    /// Number of random covectors for symbol sweeps.
    pub samples: usize,
    /// Random lattice field pairs per adjoint check.
    pub trials: usize,
    pub triple: PerfectTriple,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            n: 8,
            seed: 0,
            tol: None,
            samples: 1000,
            trials: 50,
            triple: standard_triple(),
        }
    }
}

impl Options {
    /// The tolerance to use in place of `default`.
    pub fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

/// Reads a PerfectTriple JSON fixture.
pub fn load_triple(path: &Path) -> anyhow::Result<PerfectTriple> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// The named verification suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Algebra,
    Decompose,
    Ellipticity,
    Complex,
    Einstein,
    Coefficients,
    Twisted,
    Split,
    All,
}

impl Suite {
    pub const EACH: [Suite; 8] = [
        Suite::Algebra,
        Suite::Decompose,
        Suite::Ellipticity,
        Suite::Complex,
        Suite::Einstein,
        Suite::Coefficients,
        Suite::Twisted,
        Suite::Split,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Decompose => "decompose",
            Suite::Ellipticity => "ellipticity",
            Suite::Complex => "complex",
            Suite::Einstein => "einstein",
            Suite::Coefficients => "coefficients",
            Suite::Twisted => "twisted",
            Suite::Split => "split",
            Suite::All => "all",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
    }
}

/// Runs a suite, or every suite in order for [`Suite::All`].
pub fn run_suite(suite: Suite, opts: &Options) -> Report {
    let checks = match suite {
        Suite::Algebra => suites::algebra(opts),
        Suite::Decompose => suites::decompose(opts),
        Suite::Ellipticity => suites::ellipticity(opts),
        Suite::Complex => suites::complex(opts),
        Suite::Einstein => suites::einstein(opts),
        Suite::Coefficients => suites::coefficients(opts),
        Suite::Twisted => suites::twisted(opts),
        Suite::Split => suites::split(opts),
        Suite::All => return run_all(opts),
    };
    Report::new(suite.name(), opts, checks)
}

fn run_all(opts: &Options) -> Report {
    let checks = Suite::EACH
        .into_iter()
        .flat_map(|s| run_suite(s, opts).checks)
        .collect();
    Report::new("all", opts, checks)
}
