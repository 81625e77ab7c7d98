//! Cascade classifier combining three signals: a recurrent capture network
//! over per-event features (text, temporal, account), an account
//! suspiciousness score over reduced co-engagement vectors, and late fusion
//! into one probability. Trained with 5-fold cross validation, a
//! geometric-mean decision threshold, and margin-based inference.

pub mod gru;
pub mod metrics;
pub mod user_vectors;

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascades::{Cascade, CascadeLabel, SECONDS_PER_HOUR};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::topics::{preprocess, EmbeddingTable};
use gru::{sigmoid, Gru};
pub use metrics::{auc, average_precision, select_threshold, Confusion};
pub use user_vectors::{build_user_vectors, UserVectors};

/// Feature rows for one cascade: text vector, hours since previous event,
/// hours since root, tweet-type one-hot, log(1+followers), log(1+friends),
/// account age in days. Width = embedding dim + 9.
#[derive(Clone, Debug)]
pub struct CascadeFeatures {
    pub rows: Vec<Vec<f64>>,
    /// Distinct engaging accounts, sorted.
    pub authors: Vec<String>,
    pub truncated: bool,
}

pub const EXTRA_FEATURES: usize = 9;

/// One feature row per event in time order. Sequences longer than
/// `max_sequence` are truncated and flagged.
pub fn featurize(cascade: &Cascade, table: &EmbeddingTable, max_sequence: usize) -> CascadeFeatures {
    let dim = table.dim;
    let root_t = cascade.events[0].created_at;
    let take = cascade.events.len().min(max_sequence.max(1));
    let mut rows = Vec::with_capacity(take);
    let mut prev_t = root_t;
    for e in &cascade.events[..take] {
        let mut row = Vec::with_capacity(dim + EXTRA_FEATURES);
        match table.embed_tokens(&preprocess(&e.text)) {
            Some(v) => row.extend(v),
            None => row.extend(std::iter::repeat(0.0).take(dim)),
        }
        row.push(((e.created_at - prev_t).max(0)) as f64 / SECONDS_PER_HOUR);
        row.push(((e.created_at - root_t).max(0)) as f64 / SECONDS_PER_HOUR);
        let onehot = match e.tweet_type {
            crate::ingest::TweetType::Original => [1.0, 0.0, 0.0, 0.0],
            crate::ingest::TweetType::Reply => [0.0, 1.0, 0.0, 0.0],
            crate::ingest::TweetType::Retweet => [0.0, 0.0, 1.0, 0.0],
            crate::ingest::TweetType::Quote => [0.0, 0.0, 0.0, 1.0],
        };
        row.extend(onehot);
        row.push((1.0 + e.author_followers as f64).ln());
        row.push((1.0 + e.author_friends as f64).ln());
        row.push(((e.created_at - e.author_created_at).max(0)) as f64 / 86_400.0);
        rows.push(row);
        prev_t = e.created_at;
    }
    let authors: BTreeSet<String> = cascade.events.iter().map(|e| e.author_id.clone()).collect();
    CascadeFeatures {
        rows,
        authors: authors.into_iter().collect(),
        truncated: cascade.events.len() > take,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub hidden: usize,
    pub user_dims: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub max_sequence: usize,
    pub shuffle_each_epoch: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            hidden: 32,
            user_dims: 50,
            learning_rate: 1e-3,
            epochs: 30,
            batch_size: 32,
            seed: 42,
            max_sequence: 500,
            shuffle_each_epoch: true,
        }
    }
}

/// Trained cascade classifier:
/// p = sigma(alpha * capture(sequence) + beta_s * mean_u sigma(w . v_u) + c).
#[derive(Clone, Debug)]
pub struct DetectorModel {
    pub gru: Gru,
    pub capture_w: Vec<f64>,
    pub capture_b: f64,
    pub score_w: Vec<f64>,
    pub alpha: f64,
    pub beta_s: f64,
    pub fusion_c: f64,
    /// Decision threshold; unset until selected on validation data.
    pub threshold: Option<f64>,
    pub user_vectors: UserVectors,
    pub max_sequence: usize,
}

/// A featurized, labeled training sample.
pub struct Sample {
    pub features: CascadeFeatures,
    pub label: bool,
}

impl DetectorModel {
    pub fn init(
        input_dim: usize,
        hidden: usize,
        user_vectors: UserVectors,
        max_sequence: usize,
        rng: &mut SplitMix64,
    ) -> Self {
        let limit_c = (6.0 / (hidden + 1) as f64).sqrt();
        let k = user_vectors.k;
        let limit_s = (6.0 / (k + 1) as f64).sqrt();
        DetectorModel {
            gru: Gru::init(input_dim, hidden, rng),
            capture_w: (0..hidden).map(|_| (2.0 * rng.next_f64() - 1.0) * limit_c).collect(),
            capture_b: 0.0,
            score_w: (0..k).map(|_| (2.0 * rng.next_f64() - 1.0) * limit_s).collect(),
            alpha: 1.0,
            beta_s: 1.0,
            fusion_c: 0.0,
            threshold: None,
            user_vectors,
            max_sequence,
        }
    }

    fn account_score_mean(&self, authors: &[String]) -> f64 {
        if authors.is_empty() {
            return sigmoid(0.0);
        }
        let mut total = 0.0;
        for a in authors {
            let dot = match self.user_vectors.get(a) {
                Some(v) => self.score_w.iter().zip(v).map(|(w, x)| w * x).sum(),
                None => 0.0, // unknown accounts get the zero vector
            };
            total += sigmoid(dot);
        }
        total / authors.len() as f64
    }

    /// Fused logit for one cascade.
    pub fn logit(&self, features: &CascadeFeatures) -> f64 {
        let tape = self.gru.forward(&features.rows);
        let h = tape.last_state();
        let capture: f64 =
            self.capture_w.iter().zip(h).map(|(w, x)| w * x).sum::<f64>() + self.capture_b;
        self.alpha * capture + self.beta_s * self.account_score_mean(&features.authors) + self.fusion_c
    }

    /// Probability that the cascade is unreliable.
    pub fn score(&self, features: &CascadeFeatures) -> f64 {
        sigmoid(self.logit(features))
    }

    /// Mean binary cross-entropy over a batch (stable logit form).
    pub fn batch_loss(&self, samples: &[&Sample]) -> f64 {
        let total: f64 = samples
            .iter()
            .map(|s| {
                let g = self.logit(&s.features);
                let y = if s.label { 1.0 } else { 0.0 };
                g.max(0.0) - g * y + (-g.abs()).exp().ln_1p()
            })
            .sum();
        total / samples.len() as f64
    }

    /// Mean loss and its gradient in flat-parameter order.
    pub fn batch_loss_and_grad(&self, samples: &[&Sample]) -> (f64, Vec<f64>) {
        let mut g_gru = self.gru.zeros_like();
        let mut g_capture_w = vec![0.0; self.capture_w.len()];
        let mut g_capture_b = 0.0;
        let mut g_score_w = vec![0.0; self.score_w.len()];
        let (mut g_alpha, mut g_beta, mut g_c) = (0.0, 0.0, 0.0);
        let mut total_loss = 0.0;

        for s in samples {
            let tape = self.gru.forward(&s.features.rows);
            let h = tape.last_state().to_vec();
            let capture: f64 =
                self.capture_w.iter().zip(&h).map(|(w, x)| w * x).sum::<f64>() + self.capture_b;
            let sbar = self.account_score_mean(&s.features.authors);
            let g = self.alpha * capture + self.beta_s * sbar + self.fusion_c;
            let y = if s.label { 1.0 } else { 0.0 };
            total_loss += g.max(0.0) - g * y + (-g.abs()).exp().ln_1p();

            let dg = sigmoid(g) - y;
            g_alpha += dg * capture;
            g_beta += dg * sbar;
            g_c += dg;

            let du = dg * self.alpha;
            for (gw, x) in g_capture_w.iter_mut().zip(&h) {
                *gw += du * x;
            }
            g_capture_b += du;

            if !s.features.authors.is_empty() {
                let dsbar = dg * self.beta_s / s.features.authors.len() as f64;
                for a in &s.features.authors {
                    if let Some(v) = self.user_vectors.get(a) {
                        let dot: f64 = self.score_w.iter().zip(v).map(|(w, x)| w * x).sum();
                        let sc = sigmoid(dot);
                        let da = dsbar * sc * (1.0 - sc);
                        for (gw, x) in g_score_w.iter_mut().zip(v) {
                            *gw += da * x;
                        }
                    }
                }
            }

            let dh: Vec<f64> = self.capture_w.iter().map(|w| du * w).collect();
            self.gru.backward(&s.features.rows, &tape, &dh, &mut g_gru);
        }

        let scale = 1.0 / samples.len() as f64;
        let mut flat = Vec::with_capacity(self.n_params());
        for (_, t, _, _) in g_gru.tensors() {
            flat.extend(t.iter().map(|x| x * scale));
        }
        flat.extend(g_capture_w.iter().map(|x| x * scale));
        flat.push(g_capture_b * scale);
        flat.push(g_alpha * scale);
        flat.push(g_beta * scale);
        flat.push(g_c * scale);
        flat.extend(g_score_w.iter().map(|x| x * scale));
        (total_loss * scale, flat)
    }

    pub fn n_params(&self) -> usize {
        self.gru.n_params() + self.capture_w.len() + 4 + self.score_w.len()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.n_params());
        for (_, t, _, _) in self.gru.tensors() {
            flat.extend_from_slice(t);
        }
        flat.extend_from_slice(&self.capture_w);
        flat.push(self.capture_b);
        flat.push(self.alpha);
        flat.push(self.beta_s);
        flat.push(self.fusion_c);
        flat.extend_from_slice(&self.score_w);
        flat
    }

    pub fn assign_from_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params());
        let mut at = 0usize;
        for t in self.gru.tensors_mut() {
            let len = t.len();
            t.copy_from_slice(&flat[at..at + len]);
            at += len;
        }
        let cw = self.capture_w.len();
        self.capture_w.copy_from_slice(&flat[at..at + cw]);
        at += cw;
        self.capture_b = flat[at];
        self.alpha = flat[at + 1];
        self.beta_s = flat[at + 2];
        self.fusion_c = flat[at + 3];
        at += 4;
        self.score_w.copy_from_slice(&flat[at..]);
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    lr: f64,
}

impl Adam {
    fn new(n: usize, lr: f64) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0, lr }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t as i32);
        let c2 = 1.0 - B2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * grads[i];
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * grads[i] * grads[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + EPS);
        }
    }
}

pub struct TrainOutcome {
    pub model: DetectorModel,
    /// Mean training loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub n_truncated: u64,
}

fn labeled_samples(
    cascades: &[Cascade],
    table: &EmbeddingTable,
    max_sequence: usize,
) -> Result<Vec<Sample>> {
    let samples: Vec<Sample> = cascades
        .par_iter()
        .filter(|c| c.label != CascadeLabel::Unlabeled)
        .map(|c| Sample {
            features: featurize(c, table, max_sequence),
            label: c.label == CascadeLabel::Unreliable,
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::invalid("no labeled cascades to train on"));
    }
    Ok(samples)
}

fn require_both_classes(samples: &[Sample]) -> Result<()> {
    let pos = samples.iter().filter(|s| s.label).count();
    if pos == 0 || pos == samples.len() {
        return Err(Error::invalid("training requires both classes present"));
    }
    Ok(())
}

/// Train a detector on labeled cascades by mini-batch adaptive-moment
/// gradient descent. Deterministic given the config seed.
pub fn train(
    cascades: &[Cascade],
    table: &EmbeddingTable,
    config: &DetectorConfig,
) -> Result<TrainOutcome> {
    let samples = labeled_samples(cascades, table, config.max_sequence)?;
    require_both_classes(&samples)?;
    let labeled: Vec<&Cascade> =
        cascades.iter().filter(|c| c.label != CascadeLabel::Unlabeled).collect();
    let owned: Vec<Cascade> = labeled.into_iter().cloned().collect();
    let user_vectors = build_user_vectors(&owned, config.user_dims);
    train_on_samples(&samples, table.dim + EXTRA_FEATURES, user_vectors, config)
}

fn train_on_samples(
    samples: &[Sample],
    input_dim: usize,
    user_vectors: UserVectors,
    config: &DetectorConfig,
) -> Result<TrainOutcome> {
    let mut rng = SplitMix64::new(config.seed);
    let mut model =
        DetectorModel::init(input_dim, config.hidden, user_vectors, config.max_sequence, &mut rng);
    let mut params = model.flatten();
    let mut adam = Adam::new(params.len(), config.learning_rate);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for _epoch in 0..config.epochs {
        if config.shuffle_each_epoch {
            rng.shuffle(&mut order);
        }
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size.max(1)) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
            model.assign_from_flat(&params);
            let (loss, grads) = model.batch_loss_and_grad(&batch);
            if !loss.is_finite() {
                return Err(Error::numerical(format!(
                    "non-finite training loss ({loss}); lower the learning rate (current {})",
                    config.learning_rate
                )));
            }
            loss_sum += loss * batch.len() as f64;
            adam.step(&mut params, &grads);
        }
        epoch_losses.push(loss_sum / samples.len() as f64);
    }
    model.assign_from_flat(&params);
    let n_truncated = samples.iter().filter(|s| s.features.truncated).count() as u64;
    Ok(TrainOutcome { model, epoch_losses, n_truncated })
}

/// Maximum relative error between analytic and central-difference gradients
/// on a random coordinate subset (step 1e-5).
pub fn gradient_check(
    model: &DetectorModel,
    samples: &[&Sample],
    n_coords: usize,
    seed: u64,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("gradient check needs a non-empty batch"));
    }
    let (_, analytic) = model.batch_loss_and_grad(samples);
    let coords = SplitMix64::new(seed).sample_indices(analytic.len(), n_coords.min(analytic.len()));
    Ok(max_relative_gradient_error(model, samples, &analytic, &coords))
}

/// Shared comparison core, also used by the harness self-test with a
/// deliberately corrupted analytic gradient.
pub fn max_relative_gradient_error(
    model: &DetectorModel,
    samples: &[&Sample],
    analytic: &[f64],
    coords: &[usize],
) -> f64 {
    const STEP: f64 = 1e-5;
    let base = model.flatten();
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for &c in coords {
        let mut params = base.clone();
        params[c] = base[c] + STEP;
        probe.assign_from_flat(&params);
        let up = probe.batch_loss(samples);
        params[c] = base[c] - STEP;
        probe.assign_from_flat(&params);
        let down = probe.batch_loss(samples);
        let numeric = (up - down) / (2.0 * STEP);
        let denom = (analytic[c].abs() + numeric.abs()).max(1e-8);
        worst = worst.max((analytic[c] - numeric).abs() / denom);
    }
    worst
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub auc: f64,
    pub average_precision: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub macro_f1: f64,
    pub theta: f64,
    pub gmean: f64,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> MeanStd {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = if n > 1.0 {
        xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    MeanStd { mean, std: var.sqrt() }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct CvSummary {
    pub auc: MeanStd,
    pub average_precision: MeanStd,
    pub f1: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub macro_f1: MeanStd,
}

pub struct CrossValidation {
    pub reports: Vec<FoldReport>,
    pub summary: CvSummary,
    pub ensemble: Vec<DetectorModel>,
}

/// Stratified k-fold cross validation. Each fold trains on the remaining
/// folds, selects its threshold on its own validation split, and joins the
/// inference ensemble.
pub fn cross_validate(
    cascades: &[Cascade],
    folds: usize,
    table: &EmbeddingTable,
    config: &DetectorConfig,
) -> Result<CrossValidation> {
    if folds < 2 {
        return Err(Error::invalid("cross validation needs at least 2 folds"));
    }
    let labeled: Vec<Cascade> = cascades
        .iter()
        .filter(|c| c.label != CascadeLabel::Unlabeled)
        .cloned()
        .collect();
    let samples = labeled_samples(&labeled, table, config.max_sequence)?;
    require_both_classes(&samples)?;

    // Stratified assignment: shuffle within each class, deal round-robin.
    let mut rng = SplitMix64::new(config.seed ^ 0xF01D);
    let mut fold_of = vec![0usize; samples.len()];
    for class in [true, false] {
        let mut idx: Vec<usize> =
            (0..samples.len()).filter(|&i| samples[i].label == class).collect();
        if idx.len() < folds {
            return Err(Error::invalid(format!(
                "stratification impossible: class has {} members for {folds} folds",
                idx.len()
            )));
        }
        rng.shuffle(&mut idx);
        for (pos, i) in idx.into_iter().enumerate() {
            fold_of[i] = pos % folds;
        }
    }

    let input_dim = table.dim + EXTRA_FEATURES;
    let results: Vec<Result<(FoldReport, DetectorModel)>> = (0..folds)
        .into_par_iter()
        .map(|fold| {
            let train_idx: Vec<usize> =
                (0..samples.len()).filter(|&i| fold_of[i] != fold).collect();
            let val_idx: Vec<usize> = (0..samples.len()).filter(|&i| fold_of[i] == fold).collect();
            let train_cascades: Vec<Cascade> =
                train_idx.iter().map(|&i| labeled[i].clone()).collect();
            let train_samples: Vec<Sample> = train_idx
                .iter()
                .map(|&i| Sample {
                    features: samples[i].features.clone(),
                    label: samples[i].label,
                })
                .collect();
            let user_vectors = build_user_vectors(&train_cascades, config.user_dims);
            let fold_config = DetectorConfig {
                seed: config.seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                ..config.clone()
            };
            let outcome = train_on_samples(&train_samples, input_dim, user_vectors, &fold_config)?;
            let mut model = outcome.model;

            let scores: Vec<f64> =
                val_idx.iter().map(|&i| model.score(&samples[i].features)).collect();
            let labels: Vec<bool> = val_idx.iter().map(|&i| samples[i].label).collect();
            let (theta, gmean) = select_threshold(&scores, &labels)?;
            model.threshold = Some(theta);
            let confusion = Confusion::at_threshold(&scores, &labels, theta);
            let report = FoldReport {
                fold,
                auc: auc(&scores, &labels)?,
                average_precision: average_precision(&scores, &labels)?,
                f1: confusion.f1(),
                precision: confusion.precision(),
                recall: confusion.recall(),
                macro_f1: confusion.macro_f1(),
                theta,
                gmean,
            };
            Ok((report, model))
        })
        .collect();

    let mut reports = Vec::with_capacity(folds);
    let mut ensemble = Vec::with_capacity(folds);
    for r in results {
        let (report, model) = r?;
        reports.push(report);
        ensemble.push(model);
    }
    let summary = CvSummary {
        auc: mean_std(reports.iter().map(|r| r.auc)),
        average_precision: mean_std(reports.iter().map(|r| r.average_precision)),
        f1: mean_std(reports.iter().map(|r| r.f1)),
        precision: mean_std(reports.iter().map(|r| r.precision)),
        recall: mean_std(reports.iter().map(|r| r.recall)),
        macro_f1: mean_std(reports.iter().map(|r| r.macro_f1)),
    };
    Ok(CrossValidation { reports, summary, ensemble })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Unreliable,
    Reliable,
    Abstain,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Prediction {
    pub cascade_id: String,
    pub score: f64,
    pub margin: f64,
    pub decision: Decision,
}

pub struct MarginInference {
    pub predictions: Vec<Prediction>,
    pub unreliable: BTreeSet<String>,
    pub reliable: BTreeSet<String>,
    pub abstained: BTreeSet<String>,
}

/// Ensemble inference keeping only the top `keep_fraction` of cascades by
/// margin on each side of the mean fold threshold; the rest abstain.
pub fn infer_with_margins(
    ensemble: &[DetectorModel],
    cascades: &[Cascade],
    table: &EmbeddingTable,
    keep_fraction: f64,
) -> Result<MarginInference> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::invalid(format!("keep fraction {keep_fraction} outside (0, 1]")));
    }
    if ensemble.is_empty() {
        return Err(Error::invalid("empty ensemble"));
    }
    let mut theta_sum = 0.0;
    for m in ensemble {
        theta_sum += m
            .threshold
            .ok_or_else(|| Error::invalid("ensemble model without a selected threshold"))?;
    }
    let mean_theta = theta_sum / ensemble.len() as f64;
    let max_sequence = ensemble[0].max_sequence;

    let mut scored: Vec<(String, f64, f64)> = cascades
        .par_iter()
        .map(|c| {
            let features = featurize(c, table, max_sequence);
            let score = ensemble.iter().map(|m| m.score(&features)).sum::<f64>()
                / ensemble.len() as f64;
            (c.cascade_id.clone(), score, score - mean_theta)
        })
        .collect();
    // Deterministic regardless of input order.
    scored.sort_by(|a, b| {
        b.2.abs()
            .partial_cmp(&a.2.abs())
            .unwrap()
            .then_with(|| a.0.cmp(&b.0))
    });

    let n_pos = scored.iter().filter(|(_, _, m)| *m > 0.0).count();
    let n_neg = scored.len() - n_pos;
    let keep_pos = (keep_fraction * n_pos as f64).ceil() as usize;
    let keep_neg = (keep_fraction * n_neg as f64).ceil() as usize;

    let mut unreliable = BTreeSet::new();
    let mut reliable = BTreeSet::new();
    let mut abstained = BTreeSet::new();
    let mut predictions = Vec::with_capacity(scored.len());
    let (mut taken_pos, mut taken_neg) = (0usize, 0usize);
    for (id, score, margin) in scored {
        let decision = if margin > 0.0 && taken_pos < keep_pos {
            taken_pos += 1;
            unreliable.insert(id.clone());
            Decision::Unreliable
        } else if margin <= 0.0 && taken_neg < keep_neg {
            taken_neg += 1;
            reliable.insert(id.clone());
            Decision::Reliable
        } else {
            abstained.insert(id.clone());
            Decision::Abstain
        };
        predictions.push(Prediction { cascade_id: id, score, margin, decision });
    }
    predictions.sort_by(|a, b| a.cascade_id.cmp(&b.cascade_id));
    Ok(MarginInference { predictions, unreliable, reliable, abstained })
}

const CHECKPOINT_MAGIC: &str = "cascade-detector-checkpoint v1";

/// Plain-text tensor dump with a shape header per tensor.
pub fn save_checkpoint<W: Write>(model: &DetectorModel, mut out: W) -> Result<()> {
    writeln!(out, "{CHECKPOINT_MAGIC}")?;
    writeln!(out, "hidden {}", model.gru.hidden)?;
    writeln!(out, "input {}", model.gru.input)?;
    writeln!(out, "user_dim {}", model.user_vectors.k)?;
    writeln!(out, "max_sequence {}", model.max_sequence)?;
    match model.threshold {
        Some(t) => writeln!(out, "threshold {t}")?,
        None => writeln!(out, "threshold none")?,
    }
    let write_tensor = |out: &mut W, name: &str, data: &[f64], rows: usize, cols: usize| -> Result<()> {
        writeln!(out, "tensor {name} {rows} {cols}")?;
        for r in 0..rows {
            let row: Vec<String> = data[r * cols..(r + 1) * cols].iter().map(f64::to_string).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    };
    for (name, data, rows, cols) in model.gru.tensors() {
        write_tensor(&mut out, name, data, rows, cols)?;
    }
    write_tensor(&mut out, "capture_w", &model.capture_w, 1, model.capture_w.len())?;
    let fusion = [model.capture_b, model.alpha, model.beta_s, model.fusion_c];
    write_tensor(&mut out, "fusion", &fusion, 1, 4)?;
    write_tensor(&mut out, "score_w", &model.score_w, 1, model.score_w.len())?;
    write_tensor(
        &mut out,
        "singular_values",
        &model.user_vectors.singular_values,
        1,
        model.user_vectors.singular_values.len(),
    )?;
    writeln!(out, "users {} {}", model.user_vectors.vectors.len(), model.user_vectors.k)?;
    for (account, v) in &model.user_vectors.vectors {
        if account.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!("account id with whitespace: {account:?}")));
        }
        let row: Vec<String> = v.iter().map(f64::to_string).collect();
        writeln!(out, "{account} {}", row.join(" "))?;
    }
    Ok(())
}

pub fn load_checkpoint<R: BufRead>(reader: R) -> Result<DetectorModel> {
    let mut lines = reader.lines();
    let mut next_line = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::parse("unexpected end of checkpoint"))?
            .map_err(Error::from)
    };
    if next_line()? != CHECKPOINT_MAGIC {
        return Err(Error::parse("not a detector checkpoint (bad magic line)"));
    }
    let mut header = |key: &str| -> Result<String> {
        let line = next_line()?;
        let (k, v) = line
            .split_once(' ')
            .ok_or_else(|| Error::parse(format!("bad header line: {line:?}")))?;
        if k != key {
            return Err(Error::parse(format!("expected header {key}, found {k}")));
        }
        Ok(v.to_string())
    };
    let hidden: usize = header("hidden")?.parse().map_err(|e| Error::parse(format!("hidden: {e}")))?;
    let input: usize = header("input")?.parse().map_err(|e| Error::parse(format!("input: {e}")))?;
    let user_dim: usize =
        header("user_dim")?.parse().map_err(|e| Error::parse(format!("user_dim: {e}")))?;
    let max_sequence: usize =
        header("max_sequence")?.parse().map_err(|e| Error::parse(format!("max_sequence: {e}")))?;
    let threshold_raw = header("threshold")?;
    let threshold = if threshold_raw == "none" {
        None
    } else {
        Some(threshold_raw.parse::<f64>().map_err(|e| Error::parse(format!("threshold: {e}")))?)
    };

    let mut read_tensor = |name: &str, rows: usize, cols: usize| -> Result<Vec<f64>> {
        let line = next_line()?;
        let expect = format!("tensor {name} {rows} {cols}");
        if line != expect {
            return Err(Error::parse(format!("expected {expect:?}, found {line:?}")));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let row = next_line()?;
            for v in row.split_whitespace() {
                data.push(v.parse::<f64>().map_err(|e| Error::parse(format!("{name}: {e}")))?);
            }
        }
        if data.len() != rows * cols {
            return Err(Error::parse(format!("tensor {name} has wrong element count")));
        }
        Ok(data)
    };

    let w_z = read_tensor("w_z", hidden, input)?;
    let u_z = read_tensor("u_z", hidden, hidden)?;
    let b_z = read_tensor("b_z", 1, hidden)?;
    let w_r = read_tensor("w_r", hidden, input)?;
    let u_r = read_tensor("u_r", hidden, hidden)?;
    let b_r = read_tensor("b_r", 1, hidden)?;
    let w_h = read_tensor("w_h", hidden, input)?;
    let u_h = read_tensor("u_h", hidden, hidden)?;
    let b_h = read_tensor("b_h", 1, hidden)?;
    let capture_w = read_tensor("capture_w", 1, hidden)?;
    let fusion = read_tensor("fusion", 1, 4)?;
    let score_w = read_tensor("score_w", 1, user_dim)?;
    let singular_values = read_tensor("singular_values", 1, user_dim)?;

    let users_line = next_line()?;
    let parts: Vec<&str> = users_line.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != "users" {
        return Err(Error::parse(format!("expected users header, found {users_line:?}")));
    }
    let n_users: usize = parts[1].parse().map_err(|e| Error::parse(format!("users: {e}")))?;
    let mut vectors = std::collections::BTreeMap::new();
    for _ in 0..n_users {
        let line = next_line()?;
        let mut it = line.split_whitespace();
        let account = it.next().ok_or_else(|| Error::parse("empty user row"))?.to_string();
        let v: Vec<f64> = it
            .map(|x| x.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(format!("user vector: {e}")))?;
        if v.len() != user_dim {
            return Err(Error::parse(format!("user vector for {account} has wrong width")));
        }
        vectors.insert(account, v);
    }

    Ok(DetectorModel {
        gru: Gru { hidden, input, w_z, u_z, b_z, w_r, u_r, b_r, w_h, u_h, b_h },
        capture_w,
        capture_b: fusion[0],
        alpha: fusion[1],
        beta_s: fusion[2],
        fusion_c: fusion[3],
        score_w,
        threshold,
        user_vectors: UserVectors { k: user_dim, vectors, singular_values },
        max_sequence,
    })
}
