//! Versioned JSON summaries, CSV detail rows and the plain-text table.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

/// Format tag embedded in every JSON and CSV file.
pub const SCHEMA: &str = "qhrom-sim/report/v1";
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Overall outcome of a suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Budget,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Budget => 3,
        }
    }

    /// A definite failure wins over an incomplete check.
    pub fn combine(checks: impl IntoIterator<Item = Check>) -> Verdict {
        let mut out = Verdict::Pass;
        for c in checks {
            match (c.pass, c.complete) {
                (true, _) => {}
                (false, true) => return Verdict::Fail,
                (false, false) => out = Verdict::Budget,
            }
        }
        out
    }
}

/// One pass/fail decision and whether every input to it was computed.
#[derive(Clone, Copy, Debug)]
pub struct Check {
    pub pass: bool,
    pub complete: bool,
}

impl Check {
    pub fn done(pass: bool) -> Self {
        Check { pass, complete: true }
    }
}

/// One CSV line: a measured value against its bound or reference.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub suite: String,
    pub id: String,
    pub n: usize,
    pub t: Option<usize>,
    pub measured: Option<f64>,
    pub bound: Option<f64>,
    pub verdict: String,
}

impl Row {
    pub fn new(suite: &str, id: impl Into<String>, n: usize) -> Self {
        Row { suite: suite.into(), id: id.into(), n, t: None, measured: None, bound: None, verdict: String::new() }
    }

    pub fn t(mut self, t: usize) -> Self {
        self.t = Some(t);
        self
    }

    pub fn measured(mut self, v: Option<f64>) -> Self {
        self.measured = v;
        self
    }

    pub fn bound(mut self, v: Option<f64>) -> Self {
        self.bound = v;
        self
    }

    pub fn verdict(mut self, v: impl Into<String>) -> Self {
        self.verdict = v.into();
        self
    }
}

/// Everything a subcommand produces.
pub struct SuiteOutput {
    pub verdict: Verdict,
    pub results: Value,
    pub rows: Vec<Row>,
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema: &'static str,
    code_version: &'static str,
    command: &'a str,
    config: &'a Value,
    verdict: Verdict,
    results: &'a Value,
}

/// Removes every "seconds" field so identical runs serialize identically.
pub fn strip_timings(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("seconds");
            map.values_mut().for_each(strip_timings);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

/// Pretty JSON summary with the config and version embedded.
pub fn summary_json(command: &str, config: &Value, out: &SuiteOutput, timings: bool) -> Result<String> {
    let mut results = out.results.clone();
    if !timings {
        strip_timings(&mut results);
    }
    let env = Envelope { schema: SCHEMA, code_version: CODE_VERSION, command, config, verdict: out.verdict, results: &results };
    Ok(serde_json::to_string_pretty(&env)? + "\n")
}

pub fn detail_csv(rows: &[Row]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(["schema", "suite", "id", "n", "t", "measured", "bound", "verdict"])?;
    for r in rows {
        w.write_record([
            SCHEMA.to_string(),
            r.suite.clone(),
            r.id.clone(),
            r.n.to_string(),
            r.t.map(|t| t.to_string()).unwrap_or_default(),
            r.measured.map(|v| format!("{v:e}")).unwrap_or_default(),
            r.bound.map(|v| format!("{v:e}")).unwrap_or_default(),
            r.verdict.clone(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `<dir>/<command>.json` and `<dir>/<command>.csv`.
pub fn write_files(dir: &Path, command: &str, config: &Value, out: &SuiteOutput, timings: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{command}.json")), summary_json(command, config, out, timings)?)?;
    fs::write(dir.join(format!("{command}.csv")), detail_csv(&out.rows)?)?;
    Ok(())
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "-".into())
}

/// Fixed-width table of the detail rows.
pub fn table(rows: &[Row]) -> String {
    let mut s = format!("{:<14} {:<28} {:>4} {:>3} {:>14} {:>14}  {}\n", "suite", "id", "N", "t", "measured", "bound", "verdict");
    for r in rows {
        s += &format!(
            "{:<14} {:<28} {:>4} {:>3} {:>14} {:>14}  {}\n",
            r.suite,
            r.id,
            r.n,
            r.t.map(|t| t.to_string()).unwrap_or_else(|| "-".into()),
            cell(r.measured),
            cell(r.bound),
            r.verdict
        );
    }
    s
}
