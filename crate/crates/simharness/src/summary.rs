//! Per-trial records, their CSV form, and the summary table.

use std::io::{Read, Write};

use crate::config::Method;
use crate::SimError;

/// Metric columns of `trials.csv`, in order.
pub const METRICS: [&str; 13] = [
    "selected",
    "fcr",
    "ci_length",
    "fsr",
    "power_sign",
    "power_selected",
    "precision_selected",
    "fdp",
    "power",
    "miscoverage",
    "aggregate_length",
    "sim_type1",
    "uniform_length",
];

/// Summary row derived from the status column.
pub const FAILURE_RATE: &str = "failure_rate";

/// Metric values of one method in one trial; `None` where a metric does
/// not apply or is undefined (e.g. a mean interval length with nothing
/// selected).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metrics {
    pub selected: Option<f64>,
    pub fcr: Option<f64>,
    pub ci_length: Option<f64>,
    pub fsr: Option<f64>,
    pub power_sign: Option<f64>,
    pub power_selected: Option<f64>,
    pub precision_selected: Option<f64>,
    pub fdp: Option<f64>,
    pub power: Option<f64>,
    pub miscoverage: Option<f64>,
    pub aggregate_length: Option<f64>,
    pub sim_type1: Option<f64>,
    pub uniform_length: Option<f64>,
}

impl Metrics {
    pub fn values(&self) -> [Option<f64>; 13] {
        [
            self.selected,
            self.fcr,
            self.ci_length,
            self.fsr,
            self.power_sign,
            self.power_selected,
            self.precision_selected,
            self.fdp,
            self.power,
            self.miscoverage,
            self.aggregate_length,
            self.sim_type1,
            self.uniform_length,
        ]
    }
}

/// Outcome of one method on one simulated dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub method: Method,
    /// `None` on success, otherwise why the method produced no metrics.
    pub failure: Option<String>,
    pub metrics: Metrics,
}

impl TrialRecord {
    pub fn ok(trial: usize, method: Method, metrics: Metrics) -> Self {
        Self {
            trial,
            method,
            failure: None,
            metrics,
        }
    }

    pub fn failed(trial: usize, method: Method, reason: impl std::fmt::Display) -> Self {
        Self {
            trial,
            method,
            failure: Some(reason.to_string()),
            metrics: Metrics::default(),
        }
    }

    pub fn status(&self) -> &str {
        match &self.failure {
            None => "ok",
            Some(_) => "failed",
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `trials.csv`: one row per (trial, method).
pub fn write_trials<W: Write>(out: W, experiment: &str, records: &[TrialRecord]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["experiment", "trial", "method", "status", "reason"];
    header.extend(METRICS);
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            experiment.to_string(),
            r.trial.to_string(),
            r.method.name().to_string(),
            r.status().to_string(),
            r.failure.clone().unwrap_or_default(),
        ];
        row.extend(r.metrics.values().into_iter().map(cell));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Monte Carlo mean of one metric for one method.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryEntry {
    pub method: Method,
    pub metric: &'static str,
    /// `None` when no trial produced the metric.
    pub mean: Option<f64>,
    /// Standard error of `mean`; `None` with fewer than two values.
    pub se: Option<f64>,
    /// Number of trials contributing.
    pub count: usize,
}

/// Per-method means and Monte Carlo standard errors of every metric.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsSummary {
    pub entries: Vec<SummaryEntry>,
}

fn mean_se(values: &[f64]) -> (Option<f64>, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (None, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (Some(mean), Some((var / n as f64).sqrt()))
}

impl MetricsSummary {
    /// Summarizes records for `methods` in the given order. Failed trials
    /// count toward the failure rate only.
    pub fn from_records(methods: &[Method], records: &[TrialRecord]) -> Self {
        let mut entries = Vec::new();
        for &method in methods {
            let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.method == method).collect();
            for (k, &metric) in METRICS.iter().enumerate() {
                let values: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.failure.is_none())
                    .filter_map(|r| r.metrics.values()[k])
                    .collect();
                if values.is_empty() {
                    continue;
                }
                let (mean, se) = mean_se(&values);
                entries.push(SummaryEntry {
                    method,
                    metric,
                    mean,
                    se,
                    count: values.len(),
                });
            }
            let failures: Vec<f64> = rows.iter().map(|r| f64::from(u8::from(r.failure.is_some()))).collect();
            let (mean, se) = mean_se(&failures);
            entries.push(SummaryEntry {
                method,
                metric: FAILURE_RATE,
                mean,
                se,
                count: failures.len(),
            });
        }
        Self { entries }
    }

    pub fn get(&self, method: Method, metric: &str) -> Option<&SummaryEntry> {
        self.entries.iter().find(|e| e.method == method && e.metric == metric)
    }

    /// Mean of a metric, if it was produced.
    pub fn mean(&self, method: Method, metric: &str) -> Option<f64> {
        self.get(method, metric).and_then(|e| e.mean)
    }

    /// Writes `summary.csv`.
    pub fn write_csv<W: Write>(&self, out: W, experiment: &str) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["experiment", "method", "metric", "mean", "se", "count"])?;
        for e in &self.entries {
            w.write_record([
                experiment.to_string(),
                e.method.name().to_string(),
                e.metric.to_string(),
                cell(e.mean),
                cell(e.se),
                e.count.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads back `trials.csv` as written by [`write_trials`].
pub fn read_trials<R: Read>(input: R) -> Result<Vec<TrialRecord>, SimError> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let bad = |what: &str| SimError::Parse(format!("trials.csv line {}: {what}", out.len() + 2));
        let trial = field(1).parse().map_err(|_| bad("bad trial index"))?;
        let method: Method = field(2).parse().map_err(|_| bad("bad method"))?;
        let mut v = [None; 13];
        for (k, slot) in v.iter_mut().enumerate() {
            let s = field(5 + k);
            if !s.is_empty() {
                *slot = Some(s.parse().map_err(|_| bad("bad number"))?);
            }
        }
        let metrics = Metrics {
            selected: v[0],
            fcr: v[1],
            ci_length: v[2],
            fsr: v[3],
            power_sign: v[4],
            power_selected: v[5],
            precision_selected: v[6],
            fdp: v[7],
            power: v[8],
            miscoverage: v[9],
            aggregate_length: v[10],
            sim_type1: v[11],
            uniform_length: v[12],
        };
        out.push(TrialRecord {
            trial,
            method,
            failure: (field(3) != "ok").then(|| field(4).to_string()),
            metrics,
        });
    }
    Ok(out)
}
