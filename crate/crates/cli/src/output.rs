use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use lazyvi::estimators::Method;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// A tidy table; cells are pre-formatted so that output is byte-stable.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.into());
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }

    /// Rows as JSON objects; numeric cells become numbers.
    pub fn to_json(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(r)
                    .map(|(c, v)| {
                        let cell = match v.parse::<f64>() {
                            Ok(x) if x.is_finite() => json!(x),
                            _ if v.is_empty() => Value::Null,
                            _ => json!(v),
                        };
                        (c.to_string(), cell)
                    })
                    .collect();
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }
}

/// Formats an optional cell; absent values are empty.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Everything an experiment produces, accumulated in order so that a
/// failure part way through can still be flushed.
#[derive(Debug)]
pub struct Collector {
    pub results: Table,
    /// Extra tables written next to `results.csv`, by file stem.
    pub extra: BTreeMap<&'static str, Table>,
    pub summary: Map<String, Value>,
    /// Wall-clock per method, summed over variables and runs.
    pub method_seconds: BTreeMap<String, f64>,
    pub training_seconds: f64,
}

impl Collector {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            results: Table::new(columns),
            extra: BTreeMap::new(),
            summary: Map::new(),
            method_seconds: BTreeMap::new(),
            training_seconds: 0.0,
        }
    }

    pub fn add_seconds(&mut self, method: Method, seconds: f64) {
        *self.method_seconds.entry(method.to_string()).or_default() += seconds;
    }

    pub fn summarize(&mut self, key: &str, value: impl Serialize) {
        self.summary
            .insert(key.to_owned(), serde_json::to_value(value).expect("summary serializes"));
    }
}

/// Run outcome recorded in the manifest.
pub enum Status<'a> {
    Ok,
    Failed(&'a CliError),
}

/// Writes `results.csv`, `results.json`, any extra tables and
/// `manifest.json` into `dir`. Timing lives only in the manifest so that
/// the results files are reproducible byte for byte.
pub fn write_outputs(
    dir: &Path,
    cfg: &RunConfig,
    out: &Collector,
    status: Status<'_>,
    total_seconds: f64,
) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> CliResult<()> {
        let path = dir.join(name);
        fs::write(&path, bytes)?;
        written.push(path);
        Ok(())
    };
    put("results.csv".into(), out.results.to_csv()?)?;
    for (stem, table) in &out.extra {
        put(format!("{stem}.csv"), table.to_csv()?)?;
    }
    let results = json!({
        "experiment": cfg.experiment,
        "config": cfg,
        "rows": out.results.to_json(),
        "summary": out.summary,
    });
    put("results.json".into(), pretty(&results))?;
    let (status, error) = match status {
        Status::Ok => ("ok", Value::Null),
        Status::Failed(e) => ("failed", json!(e.to_string())),
    };
    let manifest = json!({
        "experiment": cfg.experiment,
        "config_sha256": cfg.hash(),
        "seeds": cfg.seeds,
        "method_seconds": out.method_seconds,
        "training_seconds": out.training_seconds,
        "total_seconds": total_seconds,
        "rows": out.results.rows.len(),
        "status": status,
        "error": error,
        "lazyvi_version": env!("CARGO_PKG_VERSION"),
    });
    put("manifest.json".into(), pretty(&manifest))?;
    Ok(written)
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("json serializes");
    bytes.push(b'\n');
    bytes
}

/// One estimate against a known truth, for coverage summaries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageInput {
    /// One-based variable.
    pub variable: usize,
    pub method: Method,
    pub vi_hat: f64,
    pub ci: (f64, f64),
    pub truth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub variable: usize,
    pub method: Method,
    pub sims: usize,
    /// Fraction of intervals containing the truth.
    pub coverage: f64,
    /// Mean of `truth - vi_hat`.
    pub mean_bias: f64,
}

/// Per-(variable, method) coverage and bias, sorted by variable then
/// method. Fails with `MissingTruth` unless every record carries a truth.
pub fn summarize_coverage(experiment: &str, results: &[CoverageInput]) -> CliResult<Vec<CoverageRow>> {
    if results.is_empty() || results.iter().any(|r| r.truth.is_none()) {
        return Err(CliError::MissingTruth(experiment.to_owned()));
    }
    let mut groups: BTreeMap<(usize, &'static str), (Method, Vec<&CoverageInput>)> = BTreeMap::new();
    for r in results {
        groups
            .entry((r.variable, r.method.as_str()))
            .or_insert((r.method, Vec::new()))
            .1
            .push(r);
    }
    Ok(groups
        .into_iter()
        .map(|((variable, _), (method, rows))| {
            let sims = rows.len();
            let covered = rows
                .iter()
                .filter(|r| {
                    let t = r.truth.expect("checked above");
                    r.ci.0 <= t && t <= r.ci.1
                })
                .count();
            let bias = rows
                .iter()
                .map(|r| r.truth.expect("checked above") - r.vi_hat)
                .sum::<f64>()
                / sims as f64;
            CoverageRow {
                variable,
                method,
                sims,
                coverage: covered as f64 / sims as f64,
                mean_bias: bias,
            }
        })
        .collect())
}

pub fn coverage_table(rows: &[CoverageRow]) -> Table {
    let mut t = Table::new(&["variable", "method", "sims", "coverage", "mean_bias"]);
    for r in rows {
        t.push(vec![
            r.variable.to_string(),
            r.method.to_string(),
            r.sims.to_string(),
            r.coverage.to_string(),
            r.mean_bias.to_string(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(variable: usize, lo: f64, hi: f64, truth: Option<f64>) -> CoverageInput {
        CoverageInput {
            variable,
            method: Method::Lazy,
            vi_hat: (lo + hi) / 2.0,
            ci: (lo, hi),
            truth,
        }
    }

    #[test]
    fn full_coverage() {
        let rows: Vec<_> = (0..5).map(|_| input(1, 0.0, 1.0, Some(0.5))).collect();
        let s = summarize_coverage("x", &rows).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].coverage, 1.0);
        assert_eq!(s[0].mean_bias, 0.0);
    }

    #[test]
    fn nineteen_of_twenty() {
        let mut rows: Vec<_> = (0..19).map(|_| input(2, 0.0, 1.0, Some(0.5))).collect();
        rows.push(input(2, 0.6, 1.0, Some(0.5)));
        let s = summarize_coverage("x", &rows).unwrap();
        assert!((s[0].coverage - 0.95).abs() < 1e-12);
        assert_eq!(s[0].sims, 20);
    }

    #[test]
    fn groups_by_variable_and_method() {
        let mut rows = vec![input(2, 0.0, 1.0, Some(0.5)), input(1, 0.0, 1.0, Some(2.0))];
        rows[1].method = Method::Retrain;
        let s = summarize_coverage("x", &rows).unwrap();
        assert_eq!((s[0].variable, s[0].method, s[0].coverage), (1, Method::Retrain, 0.0));
        assert_eq!((s[1].variable, s[1].coverage), (2, 1.0));
    }

    #[test]
    fn missing_truth_is_an_error() {
        let rows = vec![input(1, 0.0, 1.0, None)];
        assert!(matches!(summarize_coverage("csv_vi", &rows), Err(CliError::MissingTruth(e)) if e == "csv_vi"));
        assert!(summarize_coverage("csv_vi", &[]).is_err());
    }

    #[test]
    fn table_csv_and_json() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1.5".into(), "lazy".into()]);
        t.push(vec!["".into(), "2".into()]);
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "a,b\n1.5,lazy\n,2\n");
        assert_eq!(t.to_json(), json!([{"a": 1.5, "b": "lazy"}, {"a": null, "b": 2.0}]));
    }
}
