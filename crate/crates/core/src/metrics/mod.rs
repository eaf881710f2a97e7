//! Detection quality: matching, precision / recall / F1, AP and mAP.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classes::{glyph, ClassId, NUM_CLASSES};
use crate::detect::{iou, Detection};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("average precision is undefined without ground truth")]
    NoTruths,
    #[error("invalid threshold {0}")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl MatchCounts {
    pub fn add(&mut self, other: &MatchCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

/// Result of matching one class on one image.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub counts: MatchCounts,
    /// `(confidence, is_tp)` per prediction, in the order they were matched.
    pub flags: Vec<(f64, bool)>,
}

/// Greedy matching: predictions by descending confidence (stable), each
/// taking the unmatched truth with the highest IoU ≥ `iou_thresh`.
pub fn match_detections(preds: &[Detection], truths: &[Detection], iou_thresh: f64) -> MatchResult {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].confidence.total_cmp(&preds[a].confidence));
    let mut taken = vec![false; truths.len()];
    let mut flags = Vec::with_capacity(preds.len());
    for i in order {
        let mut best: Option<(usize, f64)> = None;
        for (t, truth) in truths.iter().enumerate() {
            if taken[t] {
                continue;
            }
            let v = iou(&preds[i], truth);
            if v >= iou_thresh && best.is_none_or(|(_, b)| v > b) {
                best = Some((t, v));
            }
        }
        if let Some((t, _)) = best {
            taken[t] = true;
        }
        flags.push((preds[i].confidence, best.is_some()));
    }
    let tp = flags.iter().filter(|f| f.1).count();
    MatchResult { counts: MatchCounts { tp, fp: flags.len() - tp, fn_: truths.len() - tp }, flags }
}

/// TP / (TP + FP), 1 when nothing was predicted.
pub fn precision(c: &MatchCounts) -> f64 {
    if c.tp + c.fp == 0 {
        1.0
    } else {
        c.tp as f64 / (c.tp + c.fp) as f64
    }
}

/// TP / (TP + FN), 1 when there was nothing to find.
pub fn recall(c: &MatchCounts) -> f64 {
    if c.tp + c.fn_ == 0 {
        1.0
    } else {
        c.tp as f64 / (c.tp + c.fn_) as f64
    }
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub confidence: f64,
    pub precision: f64,
    pub recall: f64,
}

/// One PR point per distinct confidence, highest first: predictions with
/// confidence ≥ the threshold count as positive.
pub fn pr_curve(flags: &[(f64, bool)], n_truths: usize) -> Vec<PrPoint> {
    let mut sorted = flags.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = Vec::new();
    let (mut tp, mut seen) = (0usize, 0usize);
    for (k, &(conf, hit)) in sorted.iter().enumerate() {
        seen += 1;
        tp += hit as usize;
        let last_of_group = sorted.get(k + 1).is_none_or(|next| next.0 != conf);
        if last_of_group {
            points.push(PrPoint {
                confidence: conf,
                precision: tp as f64 / seen as f64,
                recall: if n_truths == 0 { 1.0 } else { tp as f64 / n_truths as f64 },
            });
        }
    }
    points
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Exact area under the monotone envelope.
    #[default]
    AllPoints,
    /// Mean envelope precision at recall 0, 0.1, …, 1.
    ElevenPoint,
}

/// Area under the precision envelope of the PR curve.
pub fn average_precision(flags: &[(f64, bool)], n_truths: usize, interp: Interpolation) -> Result<f64, MetricsError> {
    if n_truths == 0 {
        return Err(MetricsError::NoTruths);
    }
    let points = pr_curve(flags, n_truths);
    // envelope: best precision at this recall or any higher one
    let mut env: Vec<f64> = points.iter().map(|p| p.precision).collect();
    for i in (0..env.len().saturating_sub(1)).rev() {
        env[i] = env[i].max(env[i + 1]);
    }
    Ok(match interp {
        Interpolation::AllPoints => {
            let mut ap = 0.0;
            let mut prev_r = 0.0;
            for (p, e) in points.iter().zip(&env) {
                ap += (p.recall - prev_r) * e;
                prev_r = p.recall;
            }
            ap
        }
        Interpolation::ElevenPoint => {
            (0..=10)
                .map(|k| {
                    let t = k as f64 / 10.0;
                    points.iter().zip(&env).filter(|(p, _)| p.recall >= t).map(|(_, e)| *e).fold(0.0, f64::max)
                })
                .sum::<f64>()
                / 11.0
        }
    })
}

/// Unweighted mean; `None` for an empty list.
pub fn mean_ap(aps: &[f64]) -> Option<f64> {
    (!aps.is_empty()).then(|| aps.iter().sum::<f64>() / aps.len() as f64)
}

/// `0.5, 0.55, …, 0.95`.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|k| (50 + 5 * k) as f64 / 100.0).collect()
}

/// Predictions and ground truth of one image, in the same unit.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageEval {
    pub name: String,
    pub predictions: Vec<Detection>,
    pub truths: Vec<Detection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class_id: ClassId,
    pub glyph: String,
    pub truths: usize,
    pub predictions: usize,
    /// Counts at the first IoU threshold.
    pub counts: MatchCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// AP per IoU threshold, keyed by the threshold printed with two decimals.
    pub ap: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub images: usize,
    pub iou_thresholds: Vec<f64>,
    pub interpolation: Interpolation,
    pub classes: Vec<ClassReport>,
    /// mAP per IoU threshold over classes with ground truth.
    pub map: BTreeMap<String, f64>,
    /// Mean over classes and thresholds.
    pub map_mean: f64,
    pub counts: MatchCounts,
    #[serde(skip)]
    pub pr_curves: Vec<(ClassId, f64, Vec<PrPoint>)>,
}

fn key(t: f64) -> String {
    format!("{t:.2}")
}

/// Evaluate a dataset: matching per image and class, pooling per class.
pub fn evaluate(images: &[ImageEval], iou_thresholds: &[f64], interp: Interpolation) -> Result<EvalReport, MetricsError> {
    if iou_thresholds.is_empty() {
        return Err(MetricsError::InvalidThreshold(f64::NAN));
    }
    if let Some(&bad) = iou_thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(MetricsError::InvalidThreshold(bad));
    }
    let mut classes = Vec::new();
    let mut pr_curves = Vec::new();
    let mut per_threshold: Vec<Vec<f64>> = vec![Vec::new(); iou_thresholds.len()];
    let mut total = MatchCounts::default();
    for class_id in 0..NUM_CLASSES as ClassId {
        let of = |v: &[Detection]| v.iter().filter(|d| d.class_id == class_id).copied().collect::<Vec<_>>();
        let split: Vec<(Vec<Detection>, Vec<Detection>)> =
            images.iter().map(|im| (of(&im.predictions), of(&im.truths))).collect();
        let n_truths: usize = split.iter().map(|s| s.1.len()).sum();
        let n_preds: usize = split.iter().map(|s| s.0.len()).sum();
        if n_truths == 0 && n_preds == 0 {
            continue;
        }
        let mut ap = BTreeMap::new();
        let mut first_counts = MatchCounts::default();
        for (ti, &t) in iou_thresholds.iter().enumerate() {
            let mut flags = Vec::new();
            let mut counts = MatchCounts::default();
            for (p, g) in &split {
                let m = match_detections(p, g, t);
                counts.add(&m.counts);
                flags.extend(m.flags);
            }
            if ti == 0 {
                first_counts = counts;
            }
            if n_truths > 0 {
                let v = average_precision(&flags, n_truths, interp)?;
                ap.insert(key(t), v);
                per_threshold[ti].push(v);
                pr_curves.push((class_id, t, pr_curve(&flags, n_truths)));
            }
        }
        total.add(&first_counts);
        let (p, r) = (precision(&first_counts), recall(&first_counts));
        classes.push(ClassReport {
            class_id,
            glyph: glyph(class_id).unwrap_or("?").to_string(),
            truths: n_truths,
            predictions: n_preds,
            counts: first_counts,
            precision: p,
            recall: r,
            f1: f1(p, r),
            ap,
        });
    }
    if per_threshold[0].is_empty() {
        return Err(MetricsError::NoTruths);
    }
    let map: BTreeMap<String, f64> =
        iou_thresholds.iter().zip(&per_threshold).map(|(t, v)| (key(*t), mean_ap(v).unwrap())).collect();
    let all: Vec<f64> = per_threshold.iter().flatten().copied().collect();
    Ok(EvalReport {
        images: images.len(),
        iou_thresholds: iou_thresholds.to_vec(),
        interpolation: interp,
        classes,
        map_mean: mean_ap(&all).unwrap(),
        map,
        counts: total,
        pr_curves,
    })
}

impl EvalReport {
    /// `class_id,iou,confidence,precision,recall` rows.
    pub fn pr_csv(&self) -> String {
        let mut out = String::from("class_id,iou,confidence,precision,recall\n");
        for (class_id, t, points) in &self.pr_curves {
            for p in points {
                writeln!(out, "{class_id},{t:.2},{},{},{}", p.confidence, p.precision, p.recall).unwrap();
            }
        }
        out
    }
}
