//! Political-leaning inference: media-URL seed labels with an entropy
//! filter, a weighted retweet graph over active accounts, Louvain
//! communities labeled by their seed accounts, a label-propagation
//! baseline, and held-out evaluation.

pub mod louvain;

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{TweetRecord, TweetType};
use crate::labeling::{extract_domain, longest_suffix_match, normalize_domain};
use crate::rng::SplitMix64;
pub use louvain::{louvain_communities, modularity, Partition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bias {
    Left,
    LeanLeft,
    Center,
    LeanRight,
    Right,
}

impl Bias {
    fn parse(raw: &str) -> Option<Bias> {
        let canon: String = raw.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_lowercase();
        match canon.as_str() {
            "left" => Some(Bias::Left),
            "leanleft" => Some(Bias::LeanLeft),
            "center" | "centre" => Some(Bias::Center),
            "leanright" => Some(Bias::LeanRight),
            "right" => Some(Bias::Right),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    Undetermined,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Undetermined => "undetermined",
        }
    }
}

/// Domain -> bias rating for the tracked news outlets.
#[derive(Clone, Debug, Default)]
pub struct MediaOutletTable {
    entries: BTreeMap<String, Bias>,
}

impl MediaOutletTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, domain: &str, bias: Bias) -> Result<()> {
        let norm = normalize_domain(domain)
            .ok_or_else(|| Error::parse(format!("not a domain: {domain:?}")))?;
        self.entries.insert(norm, bias);
        Ok(())
    }

    pub fn bias_of_url(&self, url: &str) -> Option<Bias> {
        let domain = extract_domain(url)?;
        longest_suffix_match(&self.entries, &domain).copied()
    }
}

/// Load a `domain,bias` CSV (optional header, `#` comments).
pub fn load_outlet_table(path: &Path) -> Result<MediaOutletTable> {
    let reader = BufReader::new(File::open(path)?);
    let mut table = MediaOutletTable::default();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let entry = line.split('#').next().unwrap_or("").trim();
        if entry.is_empty() {
            continue;
        }
        if lineno == 0 && entry.eq_ignore_ascii_case("domain,bias") {
            continue;
        }
        let (domain, bias_raw) = entry
            .split_once(',')
            .ok_or_else(|| Error::parse(format!("line {}: expected domain,bias", lineno + 1)))?;
        let bias = Bias::parse(bias_raw)
            .ok_or_else(|| Error::parse(format!("line {}: unknown bias {bias_raw:?}", lineno + 1)))?;
        table.insert(domain, bias)?;
    }
    Ok(table)
}

/// An account whose leaning is known from the media outlets it endorsed.
/// Score s = (n_right - n_left) / (n_right + n_left).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedLabel {
    pub account_id: String,
    pub n_left: u64,
    pub n_right: u64,
    pub score: f64,
}

impl SeedLabel {
    pub fn side(&self) -> Side {
        if self.score < 0.0 {
            Side::Left
        } else if self.score > 0.0 {
            Side::Right
        } else {
            Side::Undetermined
        }
    }
}

/// Count left/right outlet URLs in each account's original tweets and
/// retweets. Accounts with fewer than `min_urls` counted URLs, or whose
/// shares stay within the near-uniform band (max share below
/// `keep_threshold`), are filtered out.
pub fn compute_seed_labels(
    records: &[TweetRecord],
    outlets: &MediaOutletTable,
    min_urls: u64,
    keep_threshold: f64,
) -> Vec<SeedLabel> {
    let mut counts: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for r in records {
        if !matches!(r.tweet_type, TweetType::Original | TweetType::Retweet) {
            continue;
        }
        for url in &r.urls {
            match outlets.bias_of_url(url) {
                Some(Bias::Left) | Some(Bias::LeanLeft) => {
                    counts.entry(r.author_id.as_str()).or_default().0 += 1;
                }
                Some(Bias::Right) | Some(Bias::LeanRight) => {
                    counts.entry(r.author_id.as_str()).or_default().1 += 1;
                }
                _ => {}
            }
        }
    }
    counts
        .into_iter()
        .filter_map(|(account, (n_left, n_right))| {
            let n = n_left + n_right;
            if n < min_urls {
                return None;
            }
            let top_share = n_left.max(n_right) as f64 / n as f64;
            if top_share < keep_threshold {
                return None; // near-uniform: entropy filter
            }
            Some(SeedLabel {
                account_id: account.to_string(),
                n_left,
                n_right,
                score: (n_right as f64 - n_left as f64) / n as f64,
            })
        })
        .collect()
}

/// Undirected weighted graph over active accounts; edge weight is the
/// number of retweets between the pair (both directions summed).
#[derive(Clone, Debug)]
pub struct RetweetGraph {
    names: Vec<String>,
    index: HashMap<String, usize>,
    adj: Vec<Vec<(u32, f64)>>,
    total_weight: f64,
}

impl RetweetGraph {
    pub fn n_nodes(&self) -> usize {
        self.names.len()
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(|n| n.len()).sum::<usize>() / 2
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn neighbors(&self, i: usize) -> &[(u32, f64)] {
        &self.adj[i]
    }

    pub fn edge_weight(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.node_index(a)?;
        let j = self.node_index(b)? as u32;
        self.adj[i].iter().find(|(n, _)| *n == j).map(|(_, w)| *w)
    }

    /// Build from explicit weighted edges (used by fixtures and tests).
    /// Parallel edges merge; self-loops are dropped.
    pub fn from_weighted_edges(names: Vec<String>, edges: &[(u32, u32, f64)]) -> RetweetGraph {
        let mut merged: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for &(u, v, w) in edges {
            if u == v {
                continue;
            }
            let key = (u.min(v), u.max(v));
            *merged.entry(key).or_default() += w;
        }
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); names.len()];
        let mut total = 0.0;
        for ((u, v), w) in merged {
            adj[u as usize].push((v, w));
            adj[v as usize].push((u, w));
            total += w;
        }
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        RetweetGraph { names, index, adj, total_weight: total }
    }
}

/// Nodes are accounts authoring at least `min_appearances` records of any
/// type; edges aggregate retweet events between node pairs.
pub fn build_retweet_graph(records: &[TweetRecord], min_appearances: u64) -> RetweetGraph {
    let mut appearances: BTreeMap<&str, u64> = BTreeMap::new();
    for r in records {
        *appearances.entry(r.author_id.as_str()).or_default() += 1;
    }
    let names: Vec<String> = appearances
        .iter()
        .filter(|(_, &n)| n >= min_appearances)
        .map(|(a, _)| a.to_string())
        .collect();
    let index: HashMap<&str, u32> =
        names.iter().enumerate().map(|(i, n)| (n.as_str(), i as u32)).collect();

    let mut edges: Vec<(u32, u32, f64)> = Vec::new();
    for r in records {
        if r.tweet_type != TweetType::Retweet {
            continue;
        }
        let Some(parent_author) = r.parent_author_id.as_deref() else { continue };
        if parent_author == r.author_id {
            continue;
        }
        let (Some(&a), Some(&b)) = (index.get(r.author_id.as_str()), index.get(parent_author))
        else {
            continue;
        };
        edges.push((a, b, 1.0));
    }
    RetweetGraph::from_weighted_edges(names, &edges)
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct CommunityScore {
    pub n_seeds: u64,
    /// Mean seed score; None with fewer than two in-community seeds.
    pub score: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LeaningAssignment {
    pub labels: BTreeMap<String, Side>,
    pub community: BTreeMap<String, u32>,
    pub community_scores: BTreeMap<u32, CommunityScore>,
}

impl LeaningAssignment {
    pub fn side_of(&self, account: &str) -> Side {
        self.labels.get(account).copied().unwrap_or(Side::Undetermined)
    }

    pub fn count(&self, side: Side) -> usize {
        self.labels.values().filter(|&&s| s == side).count()
    }
}

/// Label each community by the mean score of its seed accounts (two seeds
/// minimum) and let every member inherit the community label.
pub fn assign_leanings(
    graph: &RetweetGraph,
    partition: &Partition,
    seeds: &[SeedLabel],
) -> LeaningAssignment {
    let mut sums: BTreeMap<u32, (f64, u64)> = BTreeMap::new();
    for seed in seeds {
        if let Some(i) = graph.node_index(&seed.account_id) {
            let c = partition.assignment[i];
            let e = sums.entry(c).or_default();
            e.0 += seed.score;
            e.1 += 1;
        }
    }
    let mut community_scores: BTreeMap<u32, CommunityScore> = BTreeMap::new();
    for c in 0..partition.n_communities as u32 {
        let (sum, n) = sums.get(&c).copied().unwrap_or((0.0, 0));
        let score = (n >= 2).then(|| sum / n as f64);
        community_scores.insert(c, CommunityScore { n_seeds: n, score });
    }
    let mut labels = BTreeMap::new();
    let mut community = BTreeMap::new();
    for i in 0..graph.n_nodes() {
        let c = partition.assignment[i];
        let side = match community_scores[&c].score {
            Some(s) if s > 0.0 => Side::Right,
            Some(s) if s < 0.0 => Side::Left,
            _ => Side::Undetermined,
        };
        labels.insert(graph.name(i).to_string(), side);
        community.insert(graph.name(i).to_string(), c);
    }
    LeaningAssignment { labels, community, community_scores }
}

/// Synchronous weighted-majority label propagation from clamped seeds.
/// Ties keep the previous label; stops at a fixpoint or `max_iterations`.
pub fn label_propagation_baseline(
    graph: &RetweetGraph,
    seeds: &[SeedLabel],
    max_iterations: usize,
) -> LeaningAssignment {
    let n = graph.n_nodes();
    let mut state = vec![Side::Undetermined; n];
    let mut clamped = vec![false; n];
    for seed in seeds {
        if let Some(i) = graph.node_index(&seed.account_id) {
            let side = seed.side();
            if side != Side::Undetermined {
                state[i] = side;
                clamped[i] = true;
            }
        }
    }
    for _ in 0..max_iterations {
        let mut next = state.clone();
        let mut changed = false;
        for i in 0..n {
            if clamped[i] {
                continue;
            }
            let mut left = 0.0;
            let mut right = 0.0;
            for &(j, w) in graph.neighbors(i) {
                match state[j as usize] {
                    Side::Left => left += w,
                    Side::Right => right += w,
                    Side::Undetermined => {}
                }
            }
            let winner = if left > right {
                Side::Left
            } else if right > left {
                Side::Right
            } else {
                state[i] // tie keeps previous label
            };
            if winner != state[i] {
                next[i] = winner;
                changed = true;
            }
        }
        state = next;
        if !changed {
            break;
        }
    }
    let mut labels = BTreeMap::new();
    for (i, side) in state.iter().enumerate() {
        labels.insert(graph.name(i).to_string(), *side);
    }
    LeaningAssignment { labels, community: BTreeMap::new(), community_scores: BTreeMap::new() }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SideErrorRow {
    pub method: String,
    pub source: String,
    pub side: Side,
    /// Evaluation accounts of this side with a determined inferred label.
    pub n: u64,
    pub n_errors: u64,
    pub error_rate: f64,
}

fn side_errors(
    assignment: &LeaningAssignment,
    truth: &BTreeMap<String, Side>,
    method: &str,
    source: &str,
) -> Vec<SideErrorRow> {
    let mut rows = Vec::new();
    for side in [Side::Left, Side::Right] {
        let mut n = 0u64;
        let mut n_errors = 0u64;
        for (account, &truth_side) in truth {
            if truth_side != side {
                continue;
            }
            match assignment.side_of(account) {
                Side::Undetermined => {}
                inferred => {
                    n += 1;
                    if inferred != truth_side {
                        n_errors += 1;
                    }
                }
            }
        }
        rows.push(SideErrorRow {
            method: method.to_string(),
            source: source.to_string(),
            side,
            n,
            n_errors,
            error_rate: if n > 0 { n_errors as f64 / n as f64 } else { 0.0 },
        });
    }
    rows
}

/// Error rates of an assignment against an external label set (profile
/// hashtags, manual verification).
pub fn evaluate_against(
    assignment: &LeaningAssignment,
    truth: &BTreeMap<String, Side>,
    method: &str,
    source: &str,
) -> Result<Vec<SideErrorRow>> {
    if truth.is_empty() {
        return Err(Error::invalid("empty evaluation label set"));
    }
    Ok(side_errors(assignment, truth, method, source))
}

#[derive(Clone, Copy, Debug)]
pub enum InferenceMethod {
    Louvain { seed: u64 },
    LabelPropagation { max_iterations: usize },
}

impl InferenceMethod {
    fn name(&self) -> &'static str {
        match self {
            InferenceMethod::Louvain { .. } => "louvain",
            InferenceMethod::LabelPropagation { .. } => "label-propagation",
        }
    }

    fn run(&self, graph: &RetweetGraph, seeds: &[SeedLabel]) -> LeaningAssignment {
        match self {
            InferenceMethod::Louvain { seed } => {
                let partition = louvain_communities(graph, *seed);
                assign_leanings(graph, &partition, seeds)
            }
            InferenceMethod::LabelPropagation { max_iterations } => {
                label_propagation_baseline(graph, seeds, *max_iterations)
            }
        }
    }
}

/// K-fold held-out media-URL evaluation: each fold re-runs inference with
/// its seeds withheld and scores the held-out seeds, aggregated per side.
pub fn evaluate_media_url_holdout(
    graph: &RetweetGraph,
    seeds: &[SeedLabel],
    folds: usize,
    shuffle_seed: u64,
    method: InferenceMethod,
) -> Result<Vec<SideErrorRow>> {
    if seeds.is_empty() {
        return Err(Error::invalid("no seed labels to evaluate"));
    }
    if folds < 2 || folds > seeds.len() {
        return Err(Error::invalid(format!("cannot hold out {folds} folds of {} seeds", seeds.len())));
    }
    let mut order: Vec<usize> = (0..seeds.len()).collect();
    SplitMix64::new(shuffle_seed).shuffle(&mut order);

    let mut totals: BTreeMap<Side, (u64, u64)> = BTreeMap::new();
    for fold in 0..folds {
        let held: Vec<usize> =
            order.iter().copied().filter(|i| i % folds == fold).collect();
        let train: Vec<SeedLabel> = order
            .iter()
            .copied()
            .filter(|i| i % folds != fold)
            .map(|i| seeds[i].clone())
            .collect();
        let assignment = method.run(graph, &train);
        let truth: BTreeMap<String, Side> = held
            .iter()
            .map(|&i| (seeds[i].account_id.clone(), seeds[i].side()))
            .filter(|(_, s)| *s != Side::Undetermined)
            .collect();
        for row in side_errors(&assignment, &truth, method.name(), "media-urls") {
            let e = totals.entry(row.side).or_default();
            e.0 += row.n;
            e.1 += row.n_errors;
        }
    }
    Ok(totals
        .into_iter()
        .map(|(side, (n, n_errors))| SideErrorRow {
            method: method.name().to_string(),
            source: "media-urls".to_string(),
            side,
            n,
            n_errors,
            error_rate: if n > 0 { n_errors as f64 / n as f64 } else { 0.0 },
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::TweetType;

    fn outlet_table() -> MediaOutletTable {
        let mut t = MediaOutletTable::default();
        t.insert("lefty.com", Bias::Left).unwrap();
        t.insert("leanleft.com", Bias::LeanLeft).unwrap();
        t.insert("mid.com", Bias::Center).unwrap();
        t.insert("righty.com", Bias::Right).unwrap();
        t.insert("leanright.com", Bias::LeanRight).unwrap();
        t
    }

    fn url_record(id: u64, author: &str, urls: &[&str], tweet_type: TweetType) -> TweetRecord {
        TweetRecord {
            tweet_id: format!("t{id}"),
            author_id: author.to_string(),
            created_at: id as i64 + 1,
            tweet_type,
            parent_tweet_id: tweet_type.is_engagement().then(|| "p".to_string()),
            parent_author_id: tweet_type.is_engagement().then(|| "pa".to_string()),
            text: String::new(),
            urls: urls.iter().map(|u| u.to_string()).collect(),
            hashtags: vec![],
            author_created_at: 1,
            author_followers: 0,
            author_friends: 0,
        }
    }

    #[test]
    fn seed_label_examples() {
        let outlets = outlet_table();
        let mut records = Vec::new();
        let mut id = 0;
        // account a: 10 left URLs -> s = -1.0 kept
        for _ in 0..10 {
            records.push(url_record(id, "a", &["https://lefty.com/x"], TweetType::Original));
            id += 1;
        }
        // account b: 5 left + 5 right -> exactly uniform, filtered
        for i in 0..10 {
            let url = if i < 5 { "https://lefty.com/x" } else { "https://righty.com/x" };
            records.push(url_record(id, "b", &[url], TweetType::Original));
            id += 1;
        }
        // account c: 7 right + 3 left -> share 0.7 kept, s = 0.4
        for i in 0..10 {
            let url = if i < 7 { "https://leanright.com/x" } else { "https://leanleft.com/x" };
            records.push(url_record(id, "c", &[url], TweetType::Retweet));
            id += 1;
        }
        // account d: 9 counted URLs only -> filtered by the volume rule
        for _ in 0..9 {
            records.push(url_record(id, "d", &["https://righty.com/x"], TweetType::Original));
            id += 1;
        }
        // center URLs are ignored
        for _ in 0..12 {
            records.push(url_record(id, "e", &["https://mid.com/x"], TweetType::Original));
            id += 1;
        }
        // replies and quotes never count
        for _ in 0..12 {
            records.push(url_record(id, "f", &["https://righty.com/x"], TweetType::Reply));
            id += 1;
        }
        let seeds = compute_seed_labels(&records, &outlets, 10, 0.7);
        let by_id: BTreeMap<&str, &SeedLabel> =
            seeds.iter().map(|s| (s.account_id.as_str(), s)).collect();
        assert_eq!(seeds.len(), 2);
        assert_eq!(by_id["a"].score, -1.0);
        assert_eq!(by_id["a"].side(), Side::Left);
        assert!((by_id["c"].score - 0.4).abs() < 1e-12);
        assert_eq!(by_id["c"].side(), Side::Right);
    }

    #[test]
    fn retweet_graph_weights_and_threshold() {
        let mut records = Vec::new();
        let mut id = 0;
        // u retweets v three times; both busy enough to be nodes.
        for _ in 0..3 {
            let mut r = url_record(id, "u", &[], TweetType::Retweet);
            r.parent_author_id = Some("v".to_string());
            records.push(r);
            id += 1;
        }
        for _ in 0..17 {
            records.push(url_record(id, "u", &[], TweetType::Original));
            id += 1;
        }
        for _ in 0..20 {
            records.push(url_record(id, "v", &[], TweetType::Original));
            id += 1;
        }
        // w has 19 appearances: excluded
        for _ in 0..19 {
            records.push(url_record(id, "w", &[], TweetType::Original));
            id += 1;
        }
        let graph = build_retweet_graph(&records, 20);
        assert_eq!(graph.n_nodes(), 2);
        assert_eq!(graph.edge_weight("u", "v"), Some(3.0));
        assert!(graph.node_index("w").is_none());
    }

    #[test]
    fn graph_edges_match_quadratic_recount() {
        let fixture = crate::synth::cascade_forest(&crate::synth::CascadeForestSpec {
            seed: 5,
            n_roots: 30,
            n_accounts: 60,
            ..Default::default()
        });
        let records = &fixture.records;
        let graph = build_retweet_graph(records, 3);
        // brute force: for every ordered pair, count retweets linking them
        for i in 0..graph.n_nodes() {
            for j in (i + 1)..graph.n_nodes() {
                let (a, b) = (graph.name(i), graph.name(j));
                let count = records
                    .iter()
                    .filter(|r| {
                        r.tweet_type == TweetType::Retweet
                            && ((r.author_id == a
                                && r.parent_author_id.as_deref() == Some(b))
                                || (r.author_id == b
                                    && r.parent_author_id.as_deref() == Some(a)))
                    })
                    .count();
                let weight = graph.edge_weight(a, b).unwrap_or(0.0);
                assert_eq!(weight, count as f64, "pair {a},{b}");
            }
        }
    }

    fn seed(account: &str, score: f64) -> SeedLabel {
        let n = 10u64;
        let n_right = ((score + 1.0) / 2.0 * n as f64).round() as u64;
        SeedLabel { account_id: account.to_string(), n_left: n - n_right, n_right, score }
    }

    #[test]
    fn community_labeling_rules() {
        let names: Vec<String> = (0..5).map(|i| format!("a{i}")).collect();
        let edges = vec![(0, 1, 2.0), (1, 2, 2.0), (3, 4, 2.0)];
        let graph = RetweetGraph::from_weighted_edges(names, &edges);
        let partition = louvain_communities(&graph, 1);
        assert_eq!(partition.n_communities, 2);
        // two seeds in a0's community with mean -0.75; one seed in a3's
        let seeds = vec![seed("a0", -1.0), seed("a1", -0.5), seed("a3", 1.0)];
        let assignment = assign_leanings(&graph, &partition, &seeds);
        assert_eq!(assignment.side_of("a2"), Side::Left);
        assert_eq!(assignment.side_of("a0"), Side::Left);
        // fewer than two seeds -> undetermined
        assert_eq!(assignment.side_of("a3"), Side::Undetermined);
        assert_eq!(assignment.side_of("a4"), Side::Undetermined);
    }

    #[test]
    fn relabeling_communities_does_not_change_sides() {
        let names: Vec<String> = (0..6).map(|i| format!("a{i}")).collect();
        let edges =
            vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)];
        let graph = RetweetGraph::from_weighted_edges(names, &edges);
        let seeds = vec![seed("a0", -1.0), seed("a1", -1.0), seed("a3", 1.0), seed("a4", 1.0)];
        let p1 = louvain_communities(&graph, 1);
        let mut p2 = p1.clone();
        // swap community ids
        for c in p2.assignment.iter_mut() {
            *c = 1 - *c;
        }
        let a1 = assign_leanings(&graph, &p1, &seeds);
        let a2 = assign_leanings(&graph, &p2, &seeds);
        assert_eq!(a1.labels, a2.labels);
    }

    #[test]
    fn label_propagation_tie_and_star() {
        // path L - x - R with equal weights: x stays undetermined
        let names: Vec<String> = vec!["l".into(), "x".into(), "r".into()];
        let graph =
            RetweetGraph::from_weighted_edges(names, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let seeds = vec![seed("l", -1.0), seed("r", 1.0)];
        let assignment = label_propagation_baseline(&graph, &seeds, 50);
        assert_eq!(assignment.side_of("x"), Side::Undetermined);

        // star with a left center: all leaves left after one round
        let names: Vec<String> =
            vec!["c".into(), "p".into(), "q".into(), "s".into()];
        let graph = RetweetGraph::from_weighted_edges(
            names,
            &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)],
        );
        let assignment = label_propagation_baseline(&graph, &[seed("c", -1.0)], 1);
        for leaf in ["p", "q", "s"] {
            assert_eq!(assignment.side_of(leaf), Side::Left);
        }
    }

    #[test]
    fn label_propagation_matches_dense_iteration() {
        let fixture = crate::synth::planted_partition(&crate::synth::PlantedPartitionSpec {
            seed: 8,
            blocks: 2,
            nodes_per_block: 12,
            p_in: 0.5,
            p_out: 0.05,
        });
        let names: Vec<String> = (0..fixture.n_nodes).map(|i| format!("n{i:04}")).collect();
        let graph = RetweetGraph::from_weighted_edges(names.clone(), &fixture.edges);
        let seeds =
            vec![seed(&names[0], -1.0), seed(&names[1], -1.0), seed(&names[12], 1.0), seed(&names[13], 1.0)];
        let fast = label_propagation_baseline(&graph, &seeds, 100);

        // independent dense-matrix iteration
        let n = fixture.n_nodes;
        let mut w = vec![0.0f64; n * n];
        for &(u, v, weight) in &fixture.edges {
            w[u as usize * n + v as usize] += weight;
            w[v as usize * n + u as usize] += weight;
        }
        let mut state = vec![0i8; n];
        state[0] = -1;
        state[1] = -1;
        state[12] = 1;
        state[13] = 1;
        let clamped: Vec<bool> = (0..n).map(|i| [0, 1, 12, 13].contains(&i)).collect();
        for _ in 0..100 {
            let mut next = state.clone();
            let mut changed = false;
            for i in 0..n {
                if clamped[i] {
                    continue;
                }
                let mut left = 0.0;
                let mut right = 0.0;
                for j in 0..n {
                    if state[j] == -1 {
                        left += w[i * n + j];
                    } else if state[j] == 1 {
                        right += w[i * n + j];
                    }
                }
                let v = if left > right {
                    -1
                } else if right > left {
                    1
                } else {
                    state[i]
                };
                if v != state[i] {
                    next[i] = v;
                    changed = true;
                }
            }
            state = next;
            if !changed {
                break;
            }
        }
        for (i, name) in names.iter().enumerate() {
            let expect = match state[i] {
                -1 => Side::Left,
                1 => Side::Right,
                _ => Side::Undetermined,
            };
            assert_eq!(fast.side_of(name), expect, "node {name}");
        }
    }

    #[test]
    fn perfect_assignment_zero_error() {
        let names: Vec<String> = vec!["a".into(), "b".into()];
        let graph = RetweetGraph::from_weighted_edges(names, &[(0, 1, 1.0)]);
        let mut assignment = LeaningAssignment::default();
        assignment.labels.insert("a".into(), Side::Left);
        assignment.labels.insert("b".into(), Side::Right);
        let truth: BTreeMap<String, Side> =
            [("a".to_string(), Side::Left), ("b".to_string(), Side::Right)].into_iter().collect();
        let rows = evaluate_against(&assignment, &truth, "louvain", "manual").unwrap();
        assert!(rows.iter().all(|r| r.n_errors == 0));
        let _ = graph;
    }

    #[test]
    fn empty_evaluation_errors() {
        let assignment = LeaningAssignment::default();
        assert!(evaluate_against(&assignment, &BTreeMap::new(), "louvain", "manual").is_err());
    }
}
