//! Rank metrics and threshold selection for the cascade classifier.
//! Positive class = unreliable.

use crate::error::{Error, Result};

fn class_counts(labels: &[bool]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&l| l).count();
    (pos, labels.len() - pos)
}

/// ROC AUC via midranks (Mann-Whitney), exact under score ties.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::invalid("AUC needs both classes"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0; // average of ranks i+1 ..= j
        for &idx in &order[i..j] {
            if labels[idx] {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

/// Average precision with tied scores handled as one group.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = class_counts(labels);
    if pos == 0 {
        return Err(Error::invalid("average precision needs positives"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut ap = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut group_tp = 0usize;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                group_tp += 1;
            }
            j += 1;
        }
        tp += group_tp;
        seen += j - i;
        if group_tp > 0 {
            let precision = tp as f64 / seen as f64;
            ap += precision * group_tp as f64 / pos as f64;
        }
        i = j;
    }
    Ok(ap)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    /// Predictions are score > theta.
    pub fn at_threshold(scores: &[f64], labels: &[bool], theta: f64) -> Confusion {
        let mut c = Confusion::default();
        for (s, &l) in scores.iter().zip(labels) {
            match (*s > theta, l) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn sensitivity(&self) -> f64 {
        self.recall()
    }

    pub fn specificity(&self) -> f64 {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    /// Macro-F1: mean of the positive-class F1 and the negative-class F1.
    pub fn macro_f1(&self) -> f64 {
        let neg = Confusion { tp: self.tn, fp: self.fn_, tn: self.tp, fn_: self.fp };
        (self.f1() + neg.f1()) / 2.0
    }

    pub fn gmean(&self) -> f64 {
        (self.sensitivity() * self.specificity()).sqrt()
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Candidate thresholds: midpoints between consecutive distinct values of
/// the scores with sentinels 0 and 1 included. Every candidate lies in
/// (0, 1) for probability scores.
pub fn threshold_candidates(scores: &[f64]) -> Vec<f64> {
    let mut values: Vec<f64> = scores.to_vec();
    values.push(0.0);
    values.push(1.0);
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    values.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect()
}

/// Threshold maximizing the geometric mean of sensitivity and specificity
/// on a validation set; ties resolve to the smallest candidate.
pub fn select_threshold(scores: &[f64], labels: &[bool]) -> Result<(f64, f64)> {
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::invalid("threshold selection needs both classes in validation"));
    }
    let mut best: Option<(f64, f64)> = None;
    for theta in threshold_candidates(scores) {
        let g = Confusion::at_threshold(scores, labels, theta).gmean();
        if best.map_or(true, |(_, bg)| g > bg) {
            best = Some((theta, g));
        }
    }
    Ok(best.unwrap())
}
