//! Selection accuracy, error statistics, attention confidence histograms,
//! and sweep aggregation.

use std::fmt::Write as _;

use crate::{Error, Result};

/// True positive rate: fraction of samples whose predicted argmax node equals
/// the ground-truth relevant node.
pub fn tpr(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.is_empty() || predicted.len() != truth.len() {
        return Err(Error::contract("tpr needs equal-length nonempty index lists"));
    }
    let tp = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(tp as f64 / predicted.len() as f64)
}

/// Argmax with ties broken toward the lowest index.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    /// Mean absolute prediction error.
    pub me: f64,
    /// Population variance of the absolute errors.
    pub variance: f64,
    /// Maximum absolute error.
    pub max_error: f64,
    /// Signed mean prediction error, emitted alongside for transparency.
    pub me_signed: f64,
}

pub fn error_stats(predicted: &[f64], truth: &[f64]) -> Result<ErrorStats> {
    if predicted.is_empty() || predicted.len() != truth.len() {
        return Err(Error::contract("error_stats needs equal-length nonempty lists"));
    }
    let n = predicted.len() as f64;
    let abs_errs: Vec<f64> = predicted.iter().zip(truth).map(|(p, t)| (p - t).abs()).collect();
    let me = abs_errs.iter().sum::<f64>() / n;
    let variance = abs_errs.iter().map(|e| (e - me) * (e - me)).sum::<f64>() / n;
    let max_error = abs_errs.iter().cloned().fold(0.0, f64::max);
    let me_signed = predicted.iter().zip(truth).map(|(p, t)| p - t).sum::<f64>() / n;
    Ok(ErrorStats { me, variance, max_error, me_signed })
}

pub const HISTOGRAM_BINS: usize = 10;

/// Attention-confidence histogram over right-closed bins of width 0.1.
/// The population is the attention score assigned to the true node, counted
/// only on true-positive samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceHistogram {
    /// Bin centers 0.05, 0.15, ..., 0.95.
    pub bin_centers: Vec<f64>,
    pub rel_freq: Vec<f64>,
    pub population: usize,
}

impl ConfidenceHistogram {
    pub fn is_empty(&self) -> bool {
        self.population == 0
    }

    /// Mass in the top bin (0.9, 1.0].
    pub fn top_bin_mass(&self) -> f64 {
        *self.rel_freq.last().unwrap()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_center,rel_freq\n");
        for (c, f) in self.bin_centers.iter().zip(&self.rel_freq) {
            let _ = writeln!(out, "{c:.2},{f:.17}");
        }
        out
    }
}

fn bin_index(alpha: f64) -> usize {
    // right-closed bins: (0.0, 0.1], ..., (0.9, 1.0]
    let idx = (alpha * HISTOGRAM_BINS as f64).ceil() as isize - 1;
    idx.clamp(0, HISTOGRAM_BINS as isize - 1) as usize
}

/// Build the histogram from per-sample attention values at the true node's
/// position, restricted to true positives.
pub fn confidence_histogram(
    alpha_at_true: &[f64],
    predicted: &[usize],
    truth: &[usize],
) -> Result<ConfidenceHistogram> {
    if alpha_at_true.len() != predicted.len() || predicted.len() != truth.len() {
        return Err(Error::contract("confidence_histogram needs equal-length lists"));
    }
    let mut counts = [0usize; HISTOGRAM_BINS];
    let mut population = 0usize;
    for ((&a, p), t) in alpha_at_true.iter().zip(predicted).zip(truth) {
        if p == t {
            counts[bin_index(a)] += 1;
            population += 1;
        }
    }
    let rel_freq = if population == 0 {
        vec![0.0; HISTOGRAM_BINS]
    } else {
        counts.iter().map(|&c| c as f64 / population as f64).collect()
    };
    let bin_centers = (0..HISTOGRAM_BINS).map(|k| 0.05 + 0.1 * k as f64).collect();
    Ok(ConfidenceHistogram { bin_centers, rel_freq, population })
}

/// Quantile with linear interpolation over the sorted sample
/// (`h = (n - 1) q`); the median of an even-length sample is the mean of the
/// two middle values.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Five-number boxplot summary with 1.5 IQR whiskers.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

pub fn box_stats(values: &[f64]) -> Result<BoxStats> {
    if values.is_empty() {
        return Err(Error::contract("box_stats needs a nonempty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    let whisker_lo = sorted.iter().cloned().find(|&v| v >= lo_fence).unwrap_or(q1);
    let whisker_hi = sorted.iter().cloned().rev().find(|&v| v <= hi_fence).unwrap_or(q3);
    let outliers = sorted
        .iter()
        .cloned()
        .filter(|&v| v < lo_fence || v > hi_fence)
        .collect();
    Ok(BoxStats { q1, median, q3, whisker_lo, whisker_hi, outliers })
}

/// Per-variant arrays over seeds plus boxplot summaries.
#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub variant: String,
    pub me: Vec<f64>,
    pub tpr: Vec<f64>,
    pub max_error: Vec<f64>,
    pub variance: Vec<f64>,
    pub me_box: BoxStats,
    pub tpr_box: BoxStats,
}

impl SweepSummary {
    pub fn new(
        variant: String,
        me: Vec<f64>,
        tpr: Vec<f64>,
        max_error: Vec<f64>,
        variance: Vec<f64>,
    ) -> Result<Self> {
        let me_box = box_stats(&me)?;
        let tpr_box = box_stats(&tpr)?;
        Ok(SweepSummary { variant, me, tpr, max_error, variance, me_box, tpr_box })
    }

    /// Per-seed CSV with header `idx,me,tpr,max_error,variance`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("idx,me,tpr,max_error,variance\n");
        for i in 0..self.me.len() {
            let _ = writeln!(
                out,
                "{i},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.me[i], self.tpr[i], self.max_error[i], self.variance[i]
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
        let mut me = Vec::new();
        let mut tpr = Vec::new();
        let mut max_error = Vec::new();
        let mut variance = Vec::new();
        for (idx, line) in text.lines().enumerate().skip(1) {
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected 5 columns, got {}", f.len()),
                });
            }
            let p = |s: &str| -> Result<f64> {
                s.parse().map_err(|e: std::num::ParseFloatError| Error::Parse {
                    line: lineno,
                    msg: e.to_string(),
                })
            };
            me.push(p(f[1])?);
            tpr.push(p(f[2])?);
            max_error.push(p(f[3])?);
            variance.push(p(f[4])?);
        }
        Ok((me, tpr, max_error, variance))
    }
}
