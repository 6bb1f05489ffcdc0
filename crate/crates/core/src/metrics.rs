//! Confusion matrices and the classification scores derived from them.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::dataset::LabeledDataset;
use crate::error::{bail, Result};
use crate::kan::KanNetwork;

/// Index of the largest score; the lowest index wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    /// True-class sample counts (row sums).
    pub support: Vec<u64>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
}

impl EvalReport {
    /// Derives every score from a square confusion matrix. Classes with a
    /// zero denominator score 0.
    pub fn from_confusion(confusion: Vec<Vec<u64>>) -> Result<Self> {
        let c = confusion.len();
        if c == 0 || confusion.iter().any(|r| r.len() != c) {
            bail!(Contract, "confusion matrix must be square and non-empty");
        }
        let total: u64 = confusion.iter().flatten().sum();
        if total == 0 {
            bail!(Input, "confusion matrix holds no samples");
        }
        let support: Vec<u64> = confusion.iter().map(|r| r.iter().sum()).collect();
        let predicted: Vec<u64> = (0..c).map(|j| confusion.iter().map(|r| r[j]).sum()).collect();
        let diag: Vec<u64> = (0..c).map(|i| confusion[i][i]).collect();

        let precision: Vec<f64> = (0..c).map(|i| ratio(diag[i] as f64, predicted[i] as f64)).collect();
        let recall: Vec<f64> = (0..c).map(|i| ratio(diag[i] as f64, support[i] as f64)).collect();
        let f1: Vec<f64> = precision
            .iter()
            .zip(&recall)
            .map(|(&p, &r)| ratio(2.0 * p * r, p + r))
            .collect();

        let cf = c as f64;
        let n = total as f64;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / cf;
        let weighted = |v: &[f64]| v.iter().zip(&support).map(|(x, &s)| x * s as f64).sum::<f64>() / n;

        Ok(Self {
            accuracy: diag.iter().sum::<u64>() as f64 / n,
            macro_precision: mean(&precision),
            macro_recall: mean(&recall),
            macro_f1: mean(&f1),
            weighted_precision: weighted(&precision),
            weighted_recall: weighted(&recall),
            weighted_f1: weighted(&f1),
            confusion,
            precision,
            recall,
            f1,
            support,
        })
    }

    pub fn class_count(&self) -> usize {
        self.confusion.len()
    }

    pub fn total(&self) -> u64 {
        self.support.iter().sum()
    }

    /// Pooled precision over all decisions.
    pub fn micro_precision(&self) -> f64 {
        let tp: u64 = (0..self.class_count()).map(|i| self.confusion[i][i]).sum();
        let predicted: u64 = self.confusion.iter().flatten().sum();
        ratio(tp as f64, predicted as f64)
    }

    /// Pooled recall over all samples.
    pub fn micro_recall(&self) -> f64 {
        let tp: u64 = (0..self.class_count()).map(|i| self.confusion[i][i]).sum();
        ratio(tp as f64, self.total() as f64)
    }
}

/// Confusion matrix of `(true, predicted)` label pairs.
pub fn confusion_matrix(truth: &[usize], predicted: &[usize], class_count: usize) -> Result<Vec<Vec<u64>>> {
    if truth.len() != predicted.len() {
        bail!(
            Contract,
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        );
    }
    let mut m = vec![vec![0u64; class_count]; class_count];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= class_count || p >= class_count {
            bail!(Contract, "label pair ({t}, {p}) out of range for {class_count} classes");
        }
        m[t][p] += 1;
    }
    Ok(m)
}

pub fn predict(net: &KanNetwork, data: &LabeledDataset) -> Result<Vec<usize>> {
    data.features
        .iter()
        .map(|x| net.forward(x).map(|s| argmax(&s)))
        .collect()
}

/// Scores the network's argmax predictions on a labeled set.
pub fn evaluate(net: &KanNetwork, test_set: &LabeledDataset) -> Result<EvalReport> {
    if test_set.is_empty() {
        bail!(Input, "test set is empty");
    }
    if test_set.dim() != net.input_dim() {
        bail!(
            Contract,
            "features have {} columns but the network expects {}",
            test_set.dim(),
            net.input_dim()
        );
    }
    let predicted = predict(net, test_set)?;
    EvalReport::from_confusion(confusion_matrix(&test_set.labels, &predicted, net.output_dim())?)
}

/// Human-readable and machine-readable forms of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedReport {
    pub text: String,
    pub csv: String,
}

pub const CSV_HEADER: &str = "metric,class,value";

pub fn render_report(report: &EvalReport, class_names: &[&str]) -> Result<RenderedReport> {
    let c = report.class_count();
    if class_names.len() != c {
        bail!(Contract, "{} class names for {c} classes", class_names.len());
    }
    if let Some(bad) = class_names
        .iter()
        .find(|n| n.is_empty() || n.contains([',', '\n', '\r']))
    {
        bail!(Contract, "class name {bad:?} cannot be written to the metrics file");
    }
    Ok(RenderedReport {
        text: render_text(report, class_names),
        csv: render_csv(report, class_names),
    })
}

fn render_text(report: &EvalReport, names: &[&str]) -> String {
    let c = report.class_count();
    let count_width = report
        .confusion
        .iter()
        .flatten()
        .map(|v| v.to_string().len())
        .max()
        .unwrap_or(1);
    let cell = names.iter().map(|n| n.len()).max().unwrap_or(1).max(count_width);
    let label_col = cell.max("true \\ predicted".len());

    let mut out = String::new();
    let _ = writeln!(out, "Confusion matrix (rows = true class, columns = predicted)");
    let _ = write!(out, "{:<label_col$}", "true \\ predicted");
    for n in names {
        let _ = write!(out, "  {n:>cell$}");
    }
    out.push('\n');
    for (i, row) in report.confusion.iter().enumerate() {
        let _ = write!(out, "{:<label_col$}", names[i]);
        for v in row {
            let _ = write!(out, "  {v:>cell$}");
        }
        out.push('\n');
    }

    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<label_col$}  {:>9}  {:>9}  {:>9}  {:>7}",
        "class", "precision", "recall", "f1", "support"
    );
    for i in 0..c {
        let _ = writeln!(
            out,
            "{:<label_col$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}",
            names[i], report.precision[i], report.recall[i], report.f1[i], report.support[i]
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<label_col$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}",
        "macro avg",
        report.macro_precision,
        report.macro_recall,
        report.macro_f1,
        report.total()
    );
    let _ = writeln!(
        out,
        "{:<label_col$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}",
        "weighted avg",
        report.weighted_precision,
        report.weighted_recall,
        report.weighted_f1,
        report.total()
    );
    let _ = writeln!(out, "accuracy: {:.4} ({} samples)", report.accuracy, report.total());
    out
}

fn render_csv(report: &EvalReport, names: &[&str]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_HEADER}");
    let _ = writeln!(out, "accuracy,all,{}", report.accuracy);
    for (metric, value) in [
        ("macro_precision", report.macro_precision),
        ("macro_recall", report.macro_recall),
        ("macro_f1", report.macro_f1),
        ("weighted_precision", report.weighted_precision),
        ("weighted_recall", report.weighted_recall),
        ("weighted_f1", report.weighted_f1),
    ] {
        let _ = writeln!(out, "{metric},all,{value}");
    }
    for (i, name) in names.iter().enumerate() {
        let _ = writeln!(out, "support,{name},{}", report.support[i]);
        let _ = writeln!(out, "precision,{name},{}", report.precision[i]);
        let _ = writeln!(out, "recall,{name},{}", report.recall[i]);
        let _ = writeln!(out, "f1,{name},{}", report.f1[i]);
    }
    for (i, row) in report.confusion.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let _ = writeln!(out, "confusion:{},{},{v}", names[i], names[j]);
        }
    }
    out
}

/// Reads the machine-readable form back into class names and a report
/// rebuilt from its confusion counts.
pub fn parse_metrics_csv(text: &str) -> Result<(Vec<String>, EvalReport)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        bail!(Input, "metrics file must start with '{CSV_HEADER}'");
    }
    let mut names: Vec<String> = Vec::new();
    let mut cells: Vec<(String, String, u64)> = Vec::new();
    for (n, line) in lines.enumerate() {
        let mut parts = line.splitn(3, ',');
        let (Some(metric), Some(class), Some(value)) = (parts.next(), parts.next(), parts.next()) else {
            bail!(Input, "line {}: expected metric,class,value", n + 2);
        };
        if metric == "support" {
            names.push(class.to_string());
        } else if let Some(truth) = metric.strip_prefix("confusion:") {
            let count = value
                .trim()
                .parse::<u64>()
                .map_err(|_| crate::Error::Input(format!("line {}: bad count '{value}'", n + 2)))?;
            cells.push((truth.to_string(), class.to_string(), count));
        }
    }
    let index = |name: &str| names.iter().position(|n| n == name);
    let mut confusion = vec![vec![0u64; names.len()]; names.len()];
    for (t, p, v) in cells {
        match (index(&t), index(&p)) {
            (Some(i), Some(j)) => confusion[i][j] = v,
            _ => bail!(Input, "confusion cell ({t}, {p}) names an unknown class"),
        }
    }
    let report = EvalReport::from_confusion(confusion)?;
    Ok((names, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_class_hand_example() {
        let r = EvalReport::from_confusion(vec![vec![8, 2], vec![1, 9]]).unwrap();
        assert_eq!(r.accuracy, 17.0 / 20.0);
        assert_eq!(r.precision, vec![8.0 / 9.0, 9.0 / 11.0]);
        assert_eq!(r.recall, vec![0.8, 0.9]);
        let f1_0 = 2.0 * (8.0 / 9.0) * 0.8 / (8.0 / 9.0 + 0.8);
        assert_eq!(r.f1[0], f1_0);
        assert!((r.f1[0] - 0.842_105_263_157_894_7).abs() < 1e-15);
        assert_eq!(r.support, vec![10, 10]);
    }

    #[test]
    fn argmax_ties_pick_lowest() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0]), 0);
        assert_eq!(argmax(&[-1.0]), 0);
    }

    #[test]
    fn zero_denominators_score_zero() {
        // class 2 never occurs and is never predicted
        let r = EvalReport::from_confusion(vec![vec![3, 1, 0], vec![0, 2, 0], vec![0, 0, 0]]).unwrap();
        assert_eq!(r.precision[2], 0.0);
        assert_eq!(r.recall[2], 0.0);
        assert_eq!(r.f1[2], 0.0);
        assert!(EvalReport::from_confusion(vec![vec![0, 0], vec![0, 0]]).is_err());
        assert!(EvalReport::from_confusion(vec![vec![1, 0]]).is_err());
    }

    #[test]
    fn constant_predictor_on_balanced_data() {
        let truth: Vec<usize> = (0..60).map(|i| i % 6).collect();
        let m = confusion_matrix(&truth, &[4; 60], 6).unwrap();
        let r = EvalReport::from_confusion(m).unwrap();
        assert!((r.accuracy - 1.0 / 6.0).abs() < 1e-15);
        assert!((r.macro_recall - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn rendering_and_round_trip() {
        let r = EvalReport::from_confusion(vec![vec![5, 0, 0], vec![0, 12, 0], vec![0, 0, 7]]).unwrap();
        let names = ["a", "longer_name", "mid"];
        let out = render_report(&r, &names).unwrap();
        let rows: Vec<&str> = out.text.lines().skip(1).take(4).collect();
        assert!(rows.iter().all(|l| l.len() == rows[0].len()), "{rows:?}");
        assert!(rows[1].trim_end().ends_with('0'));
        let (parsed_names, parsed) = parse_metrics_csv(&out.csv).unwrap();
        assert_eq!(parsed_names, names);
        assert_eq!(parsed, r);
        assert!(render_report(&r, &["a", "b"]).is_err());
        assert!(render_report(&r, &["a", "b,c", "d"]).is_err());
    }
}
