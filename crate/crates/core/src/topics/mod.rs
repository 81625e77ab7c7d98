//! Topic clustering of tweet texts: word-embedding loading, preprocessing,
//! mean-pooled tweet vectors, k-means over a K range with joint
//! silhouette/Davies-Bouldin selection, and tf-idf cluster summaries.

pub mod kmeans;
pub mod stopwords;

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use kmeans::{davies_bouldin, kmeans_best_of, silhouette, KMeansFit};

/// Token -> vector table in the textual word-vector format (optional
/// "count dim" header line, then one "token v1 .. vd" row per line).
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    vectors: HashMap<String, Vec<f64>>,
    pub dim: usize,
    pub n_duplicates: u64,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable { vectors: HashMap::new(), dim, n_duplicates: 0 }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(|v| v.as_slice())
    }

    /// First occurrence of a token wins; later duplicates are counted.
    pub fn insert(&mut self, token: String, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::parse(format!(
                "embedding for {token:?} has {} values, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if self.vectors.contains_key(&token) {
            self.n_duplicates += 1;
        } else {
            self.vectors.insert(token, vector);
        }
        Ok(())
    }

    /// Mean of the in-vocabulary token vectors; None when every token is
    /// out of vocabulary.
    pub fn embed_tokens(&self, tokens: &[String]) -> Option<Vec<f64>> {
        let mut sum = vec![0.0; self.dim];
        let mut n = 0usize;
        for t in tokens {
            if let Some(v) = self.vectors.get(t) {
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += x;
                }
                n += 1;
            }
        }
        if n == 0 {
            return None;
        }
        for s in sum.iter_mut() {
            *s /= n as f64;
        }
        Some(sum)
    }
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let reader = BufReader::new(File::open(path)?);
    let mut table: Option<EmbeddingTable> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else { continue };
        let values: Vec<&str> = parts.collect();
        if lineno == 0 && values.len() == 1 {
            // "count dim" header
            if token.parse::<usize>().is_ok() {
                if let Ok(dim) = values[0].parse::<usize>() {
                    table = Some(EmbeddingTable::new(dim));
                    continue;
                }
            }
        }
        if values.is_empty() {
            return Err(Error::parse(format!("line {}: no vector values", lineno + 1)));
        }
        let parsed: Vec<f64> = values
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(format!("line {}: {e}", lineno + 1)))?;
        let table = table.get_or_insert_with(|| EmbeddingTable::new(parsed.len()));
        if parsed.len() != table.dim {
            return Err(Error::parse(format!(
                "line {}: dimension {} does not match table dimension {}",
                lineno + 1,
                parsed.len(),
                table.dim
            )));
        }
        table.insert(token.to_string(), parsed)?;
    }
    let table = table.ok_or_else(|| Error::parse("embedding file is empty"))?;
    if table.n_duplicates > 0 {
        log::warn!("{} duplicate embedding tokens ignored (first wins)", table.n_duplicates);
    }
    Ok(table)
}

fn is_url(token: &str) -> bool {
    token.starts_with("http://") || token.starts_with("https://") || token.starts_with("www.")
}

/// Lowercase, drop URLs/mentions/hashtags, strip punctuation and special
/// characters, and remove bundled stop-words.
pub fn preprocess(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for raw in text.split_whitespace() {
        let lower = raw.to_lowercase();
        let trimmed = lower.trim_start_matches(|c: char| !(c.is_alphanumeric() || c == '@' || c == '#'));
        if is_url(trimmed) || trimmed.starts_with('@') || trimmed.starts_with('#') {
            continue;
        }
        let cleaned: String = lower.chars().filter(|c| c.is_alphanumeric()).collect();
        if cleaned.is_empty() || stopwords::is_stopword(&cleaned) {
            continue;
        }
        tokens.push(cleaned);
    }
    tokens
}

#[derive(Clone, Debug, Default)]
pub struct EmbeddedCorpus {
    pub vectors: Vec<Vec<f64>>,
    /// Index into the input tweet list for each row of `vectors`.
    pub kept: Vec<usize>,
    pub n_excluded: u64,
}

/// Mean-pool each tweet's token embeddings; tweets with no in-vocabulary
/// token are excluded and counted.
pub fn embed_corpus(texts: &[String], table: &EmbeddingTable) -> EmbeddedCorpus {
    let mut corpus = EmbeddedCorpus::default();
    for (i, text) in texts.iter().enumerate() {
        let tokens = preprocess(text);
        match table.embed_tokens(&tokens) {
            Some(v) => {
                corpus.vectors.push(v);
                corpus.kept.push(i);
            }
            None => corpus.n_excluded += 1,
        }
    }
    corpus
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KDiagnostic {
    pub k: usize,
    pub silhouette: f64,
    pub davies_bouldin: f64,
    /// Sum of the min-max normalized silhouette and the normalized,
    /// negated Davies-Bouldin score; the chosen K maximizes this.
    pub combined: f64,
}

#[derive(Clone, Debug)]
pub struct TopicModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    pub inertia: f64,
    pub diagnostics: Vec<KDiagnostic>,
}

pub struct ClusteringConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub silhouette_sample: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            k_min: 3,
            k_max: 35,
            restarts: 10,
            max_iterations: 300,
            tolerance: 1e-6,
            silhouette_sample: 5000,
        }
    }
}

/// Sweep K over the configured range and keep the K that jointly maximizes
/// the two separability measures (ties go to the smaller K).
pub fn cluster_topics(
    vectors: &[Vec<f64>],
    config: &ClusteringConfig,
    seed: u64,
) -> Result<TopicModel> {
    if config.k_min < 2 || config.k_min > config.k_max {
        return Err(Error::invalid(format!(
            "bad K range [{}, {}]",
            config.k_min, config.k_max
        )));
    }
    let mut runs: Vec<(usize, KMeansFit, f64, f64)> = Vec::new();
    for k in config.k_min..=config.k_max {
        if vectors.len() < k + 1 {
            continue; // fewer points than K: skipped
        }
        let fit = kmeans_best_of(
            vectors,
            k,
            seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            config.restarts,
            config.max_iterations,
            config.tolerance,
        );
        let sil = silhouette(vectors, &fit.assignment, k, config.silhouette_sample, seed ^ 0x51);
        let db = davies_bouldin(vectors, &fit.assignment, k);
        runs.push((k, fit, sil, db));
    }
    if runs.is_empty() {
        return Err(Error::invalid("no candidate K fits the corpus size"));
    }

    let (sil_lo, sil_hi) = runs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.2), hi.max(r.2)));
    let (db_lo, db_hi) = runs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.3), hi.max(r.3)));
    let norm = |x: f64, lo: f64, hi: f64| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 };

    let diagnostics: Vec<KDiagnostic> = runs
        .iter()
        .map(|(k, _, sil, db)| KDiagnostic {
            k: *k,
            silhouette: *sil,
            davies_bouldin: *db,
            combined: norm(*sil, sil_lo, sil_hi) + (1.0 - norm(*db, db_lo, db_hi)),
        })
        .collect();

    let best = diagnostics
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            a.combined
                .partial_cmp(&b.combined)
                .unwrap()
                .then(b.k.cmp(&a.k)) // ties -> smaller K
        })
        .map(|(i, _)| i)
        .unwrap();
    let (k, fit, _, _) = runs.swap_remove(best);
    Ok(TopicModel {
        k,
        centroids: fit.centroids,
        assignment: fit.assignment,
        inertia: fit.inertia,
        diagnostics,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster: usize,
    pub size: usize,
    pub top_words: Vec<(String, f64)>,
    /// Tweet indices closest to the cluster centroid, nearest first.
    pub representatives: Vec<usize>,
}

/// Summaries for an arbitrary (possibly merged/filtered) assignment where
/// `None` marks a discarded tweet. Each cluster's concatenated tokens form
/// one document; tf-idf uses idf = ln(n_clusters / df).
pub fn summarize_clusters(
    assignment: &[Option<usize>],
    n_clusters: usize,
    vectors: &[Vec<f64>],
    tokens: &[Vec<String>],
    top_words: usize,
    top_tweets: usize,
) -> Vec<ClusterSummary> {
    assert_eq!(assignment.len(), vectors.len());
    assert_eq!(assignment.len(), tokens.len());

    let mut tf: Vec<BTreeMap<&str, u64>> = vec![BTreeMap::new(); n_clusters];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
    for (i, assigned) in assignment.iter().enumerate() {
        let Some(c) = assigned else { continue };
        members[*c].push(i);
        for t in &tokens[i] {
            *tf[*c].entry(t.as_str()).or_default() += 1;
        }
    }
    let mut df: BTreeMap<&str, u64> = BTreeMap::new();
    for cluster_tf in &tf {
        for term in cluster_tf.keys() {
            *df.entry(term).or_default() += 1;
        }
    }

    let dim = vectors.first().map(|v| v.len()).unwrap_or(0);
    (0..n_clusters)
        .map(|c| {
            let mut scored: Vec<(String, f64)> = tf[c]
                .iter()
                .map(|(term, count)| {
                    let idf = (n_clusters as f64 / df[term] as f64).ln();
                    (term.to_string(), *count as f64 * idf)
                })
                .collect();
            scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            scored.truncate(top_words);

            let mut centroid = vec![0.0; dim];
            for &i in &members[c] {
                for (s, v) in centroid.iter_mut().zip(&vectors[i]) {
                    *s += v;
                }
            }
            if !members[c].is_empty() {
                for s in centroid.iter_mut() {
                    *s /= members[c].len() as f64;
                }
            }
            let mut by_dist: Vec<(usize, f64)> = members[c]
                .iter()
                .map(|&i| (i, kmeans::sq_dist(&vectors[i], &centroid)))
                .collect();
            by_dist.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            ClusterSummary {
                cluster: c,
                size: members[c].len(),
                top_words: scored,
                representatives: by_dist.into_iter().take(top_tweets).map(|(i, _)| i).collect(),
            }
        })
        .collect()
}

/// Per-cluster top tf-idf words and most representative tweets for a fitted
/// model.
pub fn summarize_topics(
    model: &TopicModel,
    vectors: &[Vec<f64>],
    tokens: &[Vec<String>],
    top_words: usize,
    top_tweets: usize,
) -> Vec<ClusterSummary> {
    let assignment: Vec<Option<usize>> = model.assignment.iter().map(|&c| Some(c)).collect();
    summarize_clusters(&assignment, model.k, vectors, tokens, top_words, top_tweets)
}

/// Apply manual post-hoc directives: merge groups of cluster ids, then
/// discard clusters. Returns the remapped assignment (None = discarded) and
/// the resulting cluster count. Ids are renumbered in ascending old-id
/// order; each merge group keeps its smallest id as representative.
pub fn apply_directives(
    assignment: &[usize],
    n_clusters: usize,
    discard: &[usize],
    merge: &[Vec<usize>],
) -> (Vec<Option<usize>>, usize) {
    let mut canon: Vec<usize> = (0..n_clusters).collect();
    for group in merge {
        if let Some(&target) = group.iter().min() {
            for &c in group {
                if c < n_clusters {
                    canon[c] = target;
                }
            }
        }
    }
    let dropped: Vec<bool> = {
        let mut d = vec![false; n_clusters];
        for &c in discard {
            if c < n_clusters {
                d[c] = true;
            }
        }
        d
    };
    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    for c in 0..n_clusters {
        let target = canon[c];
        if !dropped[target] && !remap.contains_key(&target) {
            let next = remap.len();
            remap.insert(target, next);
        }
    }
    let out: Vec<Option<usize>> = assignment
        .iter()
        .map(|&c| {
            let target = canon[c];
            if dropped[target] {
                None
            } else {
                Some(remap[&target])
            }
        })
        .collect();
    (out, remap.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn preprocess_strips_noise() {
        assert_eq!(preprocess("Check https://x.co #tag @u NOW!"), vec!["check"]);
        assert_eq!(preprocess(""), Vec::<String>::new());
        assert_eq!(preprocess("The the THE"), Vec::<String>::new());
        assert_eq!(preprocess("Mail-in ballots, fraud!"), vec!["mailin", "ballots", "fraud"]);
        assert_eq!(preprocess("(@user) (#tag) (www.x.com)"), Vec::<String>::new());
    }

    #[test]
    fn embedding_mean() {
        let mut table = EmbeddingTable::new(2);
        table.insert("alpha".into(), vec![1.0, 0.0]).unwrap();
        table.insert("beta".into(), vec![0.0, 1.0]).unwrap();
        let v = table.embed_tokens(&["alpha".into(), "beta".into()]).unwrap();
        assert_eq!(v, vec![0.5, 0.5]);
        assert_eq!(table.embed_tokens(&["gamma".into()]), None);
    }

    #[test]
    fn load_embeddings_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vecs.txt");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "3 4").unwrap();
        writeln!(f, "one 1 0 0 0").unwrap();
        writeln!(f, "two 0 1 0 0").unwrap();
        writeln!(f, "one 9 9 9 9").unwrap();
        let table = load_embeddings(&path).unwrap();
        assert_eq!(table.dim, 4);
        assert_eq!(table.len(), 2);
        assert_eq!(table.n_duplicates, 1);
        assert_eq!(table.get("one"), Some(&[1.0, 0.0, 0.0, 0.0][..]));
    }

    #[test]
    fn load_embeddings_dimension_mismatch_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vecs.txt");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "one 1 0 0").unwrap();
        writeln!(f, "two 0 1").unwrap();
        let err = load_embeddings(&path).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn embed_corpus_excludes_oov() {
        let mut table = EmbeddingTable::new(2);
        table.insert("vote".into(), vec![1.0, 2.0]).unwrap();
        let texts = vec!["vote now".to_string(), "zzz qqq".to_string()];
        let corpus = embed_corpus(&texts, &table);
        assert_eq!(corpus.kept, vec![0]);
        assert_eq!(corpus.n_excluded, 1);
        assert_eq!(corpus.vectors[0], vec![1.0, 2.0]);
    }

    #[test]
    fn tfidf_idf_extremes() {
        // term in one of four clusters: idf = ln 4; term everywhere: idf 0.
        let tokens: Vec<Vec<String>> = vec![
            vec!["unique".into(), "common".into()],
            vec!["common".into()],
            vec!["common".into()],
            vec!["common".into()],
        ];
        let vectors = vec![vec![0.0]; 4];
        let assignment: Vec<Option<usize>> = (0..4).map(Some).collect();
        let summaries = summarize_clusters(&assignment, 4, &vectors, &tokens, 5, 5);
        let c0: BTreeMap<&str, f64> =
            summaries[0].top_words.iter().map(|(w, s)| (w.as_str(), *s)).collect();
        assert!((c0["unique"] - 4.0f64.ln()).abs() < 1e-12);
        assert_eq!(c0["common"], 0.0);
    }

    #[test]
    fn directives_merge_and_discard() {
        let assignment = vec![0, 1, 2, 3, 1, 2];
        let (out, n) = apply_directives(&assignment, 4, &[3], &[vec![1, 2]]);
        assert_eq!(n, 2); // {0} and {1,2}; 3 discarded
        assert_eq!(out, vec![Some(0), Some(1), Some(1), None, Some(1), Some(1)]);
    }

    #[test]
    fn chooses_planted_k_on_blobs() {
        let mut rng = crate::rng::SplitMix64::new(33);
        let mut data = Vec::new();
        for c in 0..3 {
            for _ in 0..25 {
                data.push(vec![
                    10.0 * c as f64 + 0.05 * rng.next_normal(),
                    10.0 * ((c * 7) % 3) as f64 + 0.05 * rng.next_normal(),
                ]);
            }
        }
        let config = ClusteringConfig { k_min: 2, k_max: 8, restarts: 4, ..Default::default() };
        let model = cluster_topics(&data, &config, 5).unwrap();
        assert_eq!(model.k, 3);
    }
}
