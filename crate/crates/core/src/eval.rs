//! Shared-task metrics (MAP@K, Potential@K, Accuracy@K@top1) and the
//! metric-intercorrelation report.
//!
//! All comparisons are lowercased exact string matches against the gold
//! annotations. Average precision at K is normalized by K:
//!
//! `AP@K = (1/K) * sum_{i <= min(K, |pred|)} rel_i * precision@i`
//!
//! so that at K = 1 it coincides with accuracy, precision@1 and Potential@1.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::par;
use crate::stats;
use crate::text;
use crate::types::GoldAnnotations;

pub const DEFAULT_KS: [usize; 4] = [1, 3, 5, 10];
pub const DEFAULT_TOP1_KS: [usize; 3] = [1, 2, 3];

/// Reject prediction lists with repeated (case-insensitive) entries.
pub fn check_predictions<S: AsRef<str>>(pred: &[S]) -> Result<()> {
    let mut seen = HashSet::new();
    for p in pred {
        if !seen.insert(text::normalize(p.as_ref())) {
            return Err(Error::DuplicatePrediction {
                word: p.as_ref().to_string(),
            });
        }
    }
    Ok(())
}

fn top<S: AsRef<str>>(pred: &[S], k: usize) -> impl Iterator<Item = &str> {
    pred.iter().take(k).map(AsRef::as_ref)
}

pub fn potential_at_k<S: AsRef<str>>(pred: &[S], gold: &GoldAnnotations, k: usize) -> f64 {
    f64::from(u8::from(top(pred, k).any(|p| gold.contains(p))))
}

pub fn accuracy_at_k_top1<S: AsRef<str>>(pred: &[S], gold: &GoldAnnotations, k: usize) -> f64 {
    f64::from(u8::from(top(pred, k).any(|p| gold.is_top1(p))))
}

pub fn precision_at_k<S: AsRef<str>>(pred: &[S], gold: &GoldAnnotations, k: usize) -> f64 {
    let hits = top(pred, k).filter(|p| gold.contains(p)).count();
    hits as f64 / k as f64
}

pub fn average_precision_at_k<S: AsRef<str>>(pred: &[S], gold: &GoldAnnotations, k: usize) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, p) in top(pred, k).enumerate() {
        if gold.contains(p) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / k as f64
}

/// Named metric values over a dataset, in report order.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub values: Vec<(String, f64)>,
    pub instances: usize,
    pub ks: Vec<usize>,
    pub top1_ks: Vec<usize>,
}

impl MetricReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    pub fn to_tsv(&self) -> String {
        self.values
            .iter()
            .map(|(n, v)| format!("{n}\t{v:.4}\n"))
            .collect()
    }

    pub fn to_table(&self) -> String {
        let width = self
            .values
            .iter()
            .map(|(n, _)| n.len())
            .max()
            .unwrap_or(6)
            .max(6);
        let mut out = format!("{:<width$}  {:>6}\n", "metric", "value");
        for (n, v) in &self.values {
            let _ = writeln!(out, "{n:<width$}  {v:>6.4}");
        }
        let _ = writeln!(out, "({} instances)", self.instances);
        out
    }
}

#[derive(Debug, Clone, Copy)]
enum Metric {
    Acc1,
    Map(usize),
    Potential(usize),
    AccTop1(usize),
}

impl Metric {
    fn name(self) -> String {
        match self {
            Metric::Acc1 => "ACC@1".into(),
            Metric::Map(k) => format!("MAP@{k}"),
            Metric::Potential(k) => format!("Potential@{k}"),
            Metric::AccTop1(k) => format!("ACC@{k}@top1"),
        }
    }

    fn score<S: AsRef<str>>(self, pred: &[S], gold: &GoldAnnotations) -> f64 {
        match self {
            Metric::Acc1 => precision_at_k(pred, gold, 1),
            Metric::Map(k) => average_precision_at_k(pred, gold, k),
            Metric::Potential(k) => potential_at_k(pred, gold, k),
            Metric::AccTop1(k) => accuracy_at_k_top1(pred, gold, k),
        }
    }
}

/// Score `preds` against `golds` instance by instance and average.
///
/// `ks` drives MAP@K and Potential@K (plus ACC@1 when it contains 1);
/// `top1_ks` drives ACC@K@top1. Per-instance scores are summed in input order
/// so the result does not depend on `jobs`.
pub fn evaluate<S: AsRef<str> + Sync>(
    golds: &[GoldAnnotations],
    preds: &[Vec<S>],
    ks: &[usize],
    top1_ks: &[usize],
    jobs: usize,
) -> Result<MetricReport> {
    if golds.len() != preds.len() {
        return Err(Error::InvalidInput(format!(
            "{} gold instances but {} prediction lists",
            golds.len(),
            preds.len()
        )));
    }
    if golds.is_empty() {
        return Err(Error::InvalidInput("no instances to evaluate".into()));
    }
    if ks.iter().chain(top1_ks).any(|&k| k == 0) {
        return Err(Error::InvalidInput("K must be at least 1".into()));
    }
    for p in preds {
        check_predictions(p)?;
    }

    let mut metrics = Vec::new();
    if ks.contains(&1) {
        metrics.push(Metric::Acc1);
    }
    metrics.extend(ks.iter().map(|&k| Metric::Map(k)));
    metrics.extend(ks.iter().map(|&k| Metric::Potential(k)));
    metrics.extend(top1_ks.iter().map(|&k| Metric::AccTop1(k)));

    let pairs: Vec<(&GoldAnnotations, &Vec<S>)> = golds.iter().zip(preds).collect();
    let per_instance: Vec<Vec<f64>> = par::map_ordered(&pairs, jobs, |(g, p)| {
        metrics.iter().map(|m| m.score(p, g)).collect()
    });
    let n = per_instance.len() as f64;
    let values = metrics
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let sum: f64 = per_instance.iter().map(|row| row[j]).sum();
            (m.name(), sum / n)
        })
        .collect();
    Ok(MetricReport {
        values,
        instances: golds.len(),
        ks: ks.to_vec(),
        top1_ks: top1_ks.to_vec(),
    })
}

/// Systems × metrics table of official results.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    pub labels: Vec<String>,
    pub metrics: Vec<String>,
    /// One row per system, one column per metric.
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub metrics: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    /// Mean of the upper-triangle coefficients.
    pub mean: f64,
    /// Sample standard deviation of the upper-triangle coefficients.
    pub sd: f64,
}

impl CorrelationReport {
    pub fn render(&self) -> String {
        let w = self
            .metrics
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(4)
            .max(6);
        let mut out = format!("{:w$}", "");
        for m in &self.metrics {
            let _ = write!(out, "  {m:>w$}");
        }
        out.push('\n');
        for (m, row) in self.metrics.iter().zip(&self.matrix) {
            let _ = write!(out, "{m:<w$}");
            for r in row {
                let _ = write!(out, "  {r:>w$.3}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "mean_r\t{:.3}", self.mean);
        let _ = writeln!(out, "sd_r\t{:.3}", self.sd);
        out
    }
}

/// Pairwise Pearson correlations between metric columns over systems.
pub fn metric_correlation_report(table: &ResultsTable) -> Result<CorrelationReport> {
    let m = table.metrics.len();
    if table.rows.len() < 3 || m < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 systems and 2 metrics, got {} x {m}",
            table.rows.len()
        )));
    }
    let columns: Vec<Vec<f64>> = (0..m)
        .map(|j| table.rows.iter().map(|r| r[j]).collect())
        .collect();
    let mut matrix = vec![vec![1.0; m]; m];
    let mut upper = Vec::with_capacity(m * (m - 1) / 2);
    for a in 0..m {
        for b in a + 1..m {
            let r = stats::pearson(&columns[a], &columns[b]).ok_or_else(|| {
                let flat = if stats::pearson(&columns[a], &columns[a]).is_none() {
                    a
                } else {
                    b
                };
                Error::DegenerateColumn(table.metrics[flat].clone())
            })?;
            matrix[a][b] = r;
            matrix[b][a] = r;
            upper.push(r);
        }
    }
    let sd = if upper.len() > 1 {
        stats::sample_sd(&upper)
    } else {
        0.0
    };
    Ok(CorrelationReport {
        metrics: table.metrics.clone(),
        matrix,
        mean: stats::mean(&upper),
        sd,
    })
}
