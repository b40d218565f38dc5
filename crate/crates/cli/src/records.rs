//! Result records and their CSV/JSON serialization.

use std::path::{Path, PathBuf};

use linpencil::C64;
use serde::Serialize;

use crate::{CliError, Result};

/// `Some(x)` when finite; a `None` is always accompanied by a flag.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Collects flags for non-finite values while building a record.
#[derive(Debug, Default)]
pub struct Flags(Vec<String>);

impl Flags {
    pub fn num(&mut self, name: &str, x: f64) -> Option<f64> {
        let v = finite(x);
        if v.is_none() {
            self.0.push(format!("nonfinite:{name}"));
        }
        v
    }

    pub fn push(&mut self, flag: impl Into<String>) {
        self.0.push(flag.into());
    }

    pub fn join(self) -> String {
        self.0.join(";")
    }
}

/// One `(z, n)` row of the convergence experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub z_re: f64,
    pub z_im: f64,
    pub n: usize,
    pub m_re: Option<f64>,
    pub m_im: Option<f64>,
    pub reference_re: Option<f64>,
    pub reference_im: Option<f64>,
    pub abs_error: Option<f64>,
    /// Fitted over all orders at this `z`; repeated on each row.
    pub rate: Option<f64>,
    pub kappa: Option<f64>,
    pub outside_range: bool,
    pub passed: bool,
    pub flags: String,
}

/// One order of the subsequence experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsequenceRecord {
    pub experiment: String,
    pub xi_re: f64,
    pub xi_im: f64,
    pub n: usize,
    pub epsilon: Option<u8>,
    pub u_abs: Option<f64>,
    /// `|u_n(ξ)|` recomputed from the recurrence table.
    pub u_recurrence: Option<f64>,
    pub sup_error: Option<f64>,
    pub passed: bool,
    pub flags: String,
}

/// A single checked quantity: factorization identities and functional values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub experiment: String,
    pub check: String,
    pub x_re: f64,
    pub x_im: f64,
    pub param_re: Option<f64>,
    pub param_im: Option<f64>,
    pub j: Option<usize>,
    pub k: Option<usize>,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub passed: bool,
    pub detail: String,
}

impl CheckRecord {
    pub fn new(experiment: &str, check: &str, x: C64) -> Self {
        Self {
            experiment: experiment.to_string(),
            check: check.to_string(),
            x_re: x.re,
            x_im: x.im,
            param_re: None,
            param_im: None,
            j: None,
            k: None,
            value: None,
            tolerance: None,
            passed: true,
            detail: String::new(),
        }
    }

    pub fn param(mut self, p: C64) -> Self {
        self.param_re = Some(p.re);
        self.param_im = Some(p.im);
        self
    }

    pub fn at(mut self, j: usize, k: usize) -> Self {
        self.j = Some(j);
        self.k = Some(k);
        self
    }

    /// Passes when `value <= tol`; NaN fails.
    pub fn bounded(mut self, value: f64, tol: f64) -> Self {
        self.value = finite(value);
        if self.value.is_none() {
            self.detail = "nonfinite:value".into();
        }
        self.tolerance = Some(tol);
        self.passed = value <= tol;
        self
    }

    /// Value with an externally decided verdict.
    pub fn judged(mut self, value: f64, passed: bool) -> Self {
        self.value = finite(value);
        if self.value.is_none() {
            self.detail = "nonfinite:value".into();
        }
        self.passed = passed;
        self
    }

    /// Informational value without an assertion.
    pub fn report(mut self, value: f64) -> Self {
        self.value = finite(value);
        if self.value.is_none() {
            self.detail = "nonfinite:value".into();
        }
        self
    }

    pub fn failure(mut self, err: impl std::fmt::Display) -> Self {
        self.passed = false;
        self.detail = err.to_string();
        self
    }
}

/// Verb-level outcome written as JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub verb: String,
    pub passed: bool,
    pub records: usize,
    pub failures: usize,
    pub details: serde_json::Value,
}

/// Records plus summary for one verb.
#[derive(Debug, Clone, PartialEq)]
pub struct Report<R> {
    pub records: Vec<R>,
    pub summary: Summary,
}

impl<R: Serialize> Report<R> {
    pub fn new(
        experiment: &str,
        verb: &str,
        records: Vec<R>,
        failures: usize,
        details: serde_json::Value,
    ) -> Self {
        let summary = Summary {
            experiment: experiment.to_string(),
            verb: verb.to_string(),
            passed: failures == 0,
            records: records.len(),
            failures,
            details,
        };
        Self { records, summary }
    }

    pub fn passed(&self) -> bool {
        self.summary.passed
    }

    pub fn csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Output(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)? + "\n")
    }

    /// Writes `<id>_<verb>.csv` (when there are records) and
    /// `<id>_<verb>.json` into `dir`; returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let stem = format!("{}_{}", self.summary.experiment, self.summary.verb);
        let mut out = Vec::new();
        if !self.records.is_empty() {
            out.push((dir.join(format!("{stem}.csv")), self.csv()?));
        }
        out.push((dir.join(format!("{stem}.json")), self.summary_json()?));
        for (path, text) in &out {
            std::fs::write(path, text).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
        }
        Ok(out.into_iter().map(|(p, _)| p).collect())
    }
}
