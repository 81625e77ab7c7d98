//! Engagement-cascade reconstruction and propagation-dynamics metrics.
//!
//! A cascade is the time-ordered sequence of engagements rooted at a source
//! tweet, found by following parent links transitively. Engagements whose
//! parent is missing from the corpus become roots of their own cascades.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{TweetRecord, TweetType};

pub const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CascadeLabel {
    Reliable,
    Unreliable,
    Unlabeled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeEvent {
    pub author_id: String,
    pub tweet_id: String,
    pub created_at: i64,
    pub tweet_type: TweetType,
    pub parent_tweet_id: Option<String>,
    pub parent_author_id: Option<String>,
    pub urls: Vec<String>,
    pub text: String,
    pub author_created_at: i64,
    pub author_followers: u64,
    pub author_friends: u64,
}

impl CascadeEvent {
    fn from_record(rec: &TweetRecord) -> Self {
        CascadeEvent {
            author_id: rec.author_id.clone(),
            tweet_id: rec.tweet_id.clone(),
            created_at: rec.created_at,
            tweet_type: rec.tweet_type,
            parent_tweet_id: rec.parent_tweet_id.clone(),
            parent_author_id: rec.parent_author_id.clone(),
            urls: rec.urls.clone(),
            text: rec.text.clone(),
            author_created_at: rec.author_created_at,
            author_followers: rec.author_followers,
            author_friends: rec.author_friends,
        }
    }
}

/// Time-ordered engagement sequence rooted at a source tweet. Events are
/// sorted ascending by `created_at` with ties broken by `tweet_id`; the root
/// event is pinned first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cascade {
    pub cascade_id: String,
    pub events: Vec<CascadeEvent>,
    pub label: CascadeLabel,
}

impl Cascade {
    pub fn size(&self) -> usize {
        self.events.len()
    }

    pub fn root(&self) -> &CascadeEvent {
        &self.events[0]
    }

    pub fn duration_hours(&self) -> f64 {
        let root = self.events[0].created_at;
        let last = self.events.last().map(|e| e.created_at).unwrap_or(root);
        (last - root) as f64 / SECONDS_PER_HOUR
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CascadeBuild {
    pub cascades: Vec<Cascade>,
    /// Records dropped because their parent chain contains a cycle.
    pub n_quarantined: u64,
}

/// Group records into cascades by resolving each record's root.
///
/// Roots are original tweets plus engagements whose parent is absent from
/// the corpus. Records whose parent chain loops (data corruption) are
/// quarantined and counted.
pub fn build_cascades(records: &[TweetRecord]) -> CascadeBuild {
    let index: HashMap<&str, usize> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.tweet_id.as_str(), i))
        .collect();

    // root[i]: resolved root record index, usize::MAX while unknown.
    const UNKNOWN: usize = usize::MAX;
    const CYCLIC: usize = usize::MAX - 1;
    let mut root = vec![UNKNOWN; records.len()];

    for start in 0..records.len() {
        if root[start] != UNKNOWN {
            continue;
        }
        let mut path = vec![start];
        let mut on_path: HashMap<usize, ()> = HashMap::new();
        on_path.insert(start, ());
        let resolved = loop {
            let cur = *path.last().unwrap();
            if root[cur] != UNKNOWN {
                break root[cur];
            }
            match records[cur]
                .parent_tweet_id
                .as_deref()
                .and_then(|p| index.get(p).copied())
            {
                None => break cur, // original, or parent outside the corpus
                Some(parent) if parent == cur => break CYCLIC,
                Some(parent) => {
                    if on_path.contains_key(&parent) {
                        break CYCLIC;
                    }
                    on_path.insert(parent, ());
                    path.push(parent);
                }
            }
        };
        for i in path {
            root[i] = resolved;
        }
    }

    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut n_quarantined = 0u64;
    for (i, r) in root.iter().enumerate() {
        if *r == CYCLIC {
            n_quarantined += 1;
        } else {
            groups.entry(records[*r].tweet_id.as_str()).or_default().push(i);
        }
    }

    let cascades = groups
        .into_iter()
        .map(|(root_id, members)| {
            let root_idx = members
                .iter()
                .copied()
                .find(|&i| records[i].tweet_id == root_id)
                .expect("root record present in its own group");
            let mut rest: Vec<&TweetRecord> = members
                .iter()
                .copied()
                .filter(|&i| i != root_idx)
                .map(|i| &records[i])
                .collect();
            rest.sort_by(|a, b| {
                a.created_at
                    .cmp(&b.created_at)
                    .then_with(|| a.tweet_id.cmp(&b.tweet_id))
            });
            let mut events = Vec::with_capacity(members.len());
            events.push(CascadeEvent::from_record(&records[root_idx]));
            events.extend(rest.into_iter().map(CascadeEvent::from_record));
            Cascade {
                cascade_id: root_id.to_string(),
                events,
                label: CascadeLabel::Unlabeled,
            }
        })
        .collect();

    CascadeBuild { cascades, n_quarantined }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Subsample {
    pub kept: Vec<Cascade>,
    pub kept_accounts: BTreeSet<String>,
    /// Fraction of all input tweets covered by the kept cascades.
    pub coverage: f64,
}

/// Keep cascades with at least `min_cascade_size` events and the
/// `top_k_accounts` accounts ranked by active plus passive engagement
/// counts (ties broken by account id).
pub fn subsample_for_training(
    cascades: &[Cascade],
    min_cascade_size: usize,
    top_k_accounts: usize,
) -> Subsample {
    let mut engagement: BTreeMap<&str, u64> = BTreeMap::new();
    let mut total_events = 0u64;
    for c in cascades {
        for e in &c.events {
            total_events += 1;
            *engagement.entry(e.author_id.as_str()).or_default() += 1;
            if let Some(pa) = e.parent_author_id.as_deref() {
                *engagement.entry(pa).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, u64)> = engagement.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let kept_accounts: BTreeSet<String> = ranked
        .into_iter()
        .take(top_k_accounts)
        .map(|(a, _)| a.to_string())
        .collect();

    let kept: Vec<Cascade> = cascades
        .iter()
        .filter(|c| c.size() >= min_cascade_size)
        .cloned()
        .collect();
    let covered: u64 = kept.iter().map(|c| c.size() as u64).sum();
    let coverage = if total_events == 0 {
        0.0
    } else {
        covered as f64 / total_events as f64
    };
    Subsample { kept, kept_accounts, coverage }
}

/// Parent-link tree of a cascade. `parent[i]` is the node index of node i's
/// parent (`None` for the root); `depth[0] == 0`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropagationTree {
    pub root: String,
    pub nodes: Vec<String>,
    pub parent: Vec<Option<usize>>,
    pub depth: Vec<u32>,
    /// True when some event's parent was outside the cascade node set and
    /// the event was re-attached to the root.
    pub repaired: bool,
}

impl PropagationTree {
    pub fn n_edges(&self) -> usize {
        self.parent.iter().filter(|p| p.is_some()).count()
    }

    pub fn max_depth(&self) -> u32 {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// Node count per depth level, index = depth.
    pub fn breadth_profile(&self) -> Vec<u64> {
        let mut profile = vec![0u64; self.max_depth() as usize + 1];
        for d in &self.depth {
            profile[*d as usize] += 1;
        }
        profile
    }
}

/// Build the propagation tree of a cascade. Edges follow parent links within
/// the cascade; events whose parent is not among the cascade's tweets are
/// attached to the root and the tree is flagged repaired.
pub fn build_tree(cascade: &Cascade) -> PropagationTree {
    let mut nodes: Vec<String> = Vec::with_capacity(cascade.events.len());
    let mut index: HashMap<&str, usize> = HashMap::new();
    for e in &cascade.events {
        if !index.contains_key(e.tweet_id.as_str()) {
            index.insert(e.tweet_id.as_str(), nodes.len());
            nodes.push(e.tweet_id.clone());
        }
    }
    let mut parent: Vec<Option<usize>> = vec![None; nodes.len()];
    let mut repaired = false;
    for e in &cascade.events {
        let ni = index[e.tweet_id.as_str()];
        if ni == 0 {
            continue;
        }
        parent[ni] = match e.parent_tweet_id.as_deref().and_then(|p| index.get(p)) {
            Some(&pi) if pi != ni => Some(pi),
            _ => {
                repaired = true;
                Some(0)
            }
        };
    }
    // Depths via BFS from the root; events are time-ordered so parents are
    // normally seen before children, but BFS does not rely on that.
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (i, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(i);
        }
    }
    let mut depth = vec![0u32; nodes.len()];
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut seen = vec![false; nodes.len()];
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &children[u] {
            if !seen[v] {
                seen[v] = true;
                depth[v] = depth[u] + 1;
                queue.push_back(v);
            }
        }
    }
    PropagationTree {
        root: cascade.cascade_id.clone(),
        nodes,
        parent,
        depth,
        repaired,
    }
}

/// One point of an aggregate curve; `n` is the sample count behind `y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
    pub n: u64,
}

/// Propagation-dynamics curves for one group of cascades.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropagationMetrics {
    pub group: String,
    /// (size, P(size' >= size)); non-increasing, starts at 1.0.
    pub size_ccdf: Vec<CurvePoint>,
    /// (depth, mean node count at that depth over trees reaching it).
    pub breadth_by_depth: Vec<CurvePoint>,
    /// Same curve restricted to trees that needed no root re-attachment.
    pub breadth_by_depth_strict: Vec<CurvePoint>,
    /// (event index, mean distinct authors after that many events).
    pub unique_users: Vec<CurvePoint>,
    /// (k, mean hours until the k-th distinct author appears).
    pub time_to_kth_unique: Vec<CurvePoint>,
}

fn breadth_curve(trees: &[&PropagationTree]) -> Vec<CurvePoint> {
    let mut sums: Vec<(f64, u64)> = Vec::new();
    for t in trees {
        for (d, count) in t.breadth_profile().into_iter().enumerate() {
            if sums.len() <= d {
                sums.resize(d + 1, (0.0, 0));
            }
            sums[d].0 += count as f64;
            sums[d].1 += 1;
        }
    }
    sums.into_iter()
        .enumerate()
        .map(|(d, (sum, n))| CurvePoint { x: d as f64, y: sum / n as f64, n })
        .collect()
}

/// Compute all four propagation curves for a group of cascades.
pub fn propagation_metrics(cascades: &[Cascade], group: &str) -> Result<PropagationMetrics> {
    if cascades.is_empty() {
        return Err(Error::invalid(format!("propagation metrics over empty group '{group}'")));
    }
    let n_total = cascades.len() as u64;

    // CCDF over cascade sizes.
    let mut sizes: Vec<usize> = cascades.iter().map(|c| c.size()).collect();
    sizes.sort_unstable();
    let mut size_ccdf = Vec::new();
    let mut i = 0;
    while i < sizes.len() {
        let s = sizes[i];
        let ge = sizes.len() - i;
        size_ccdf.push(CurvePoint {
            x: s as f64,
            y: ge as f64 / sizes.len() as f64,
            n: n_total,
        });
        while i < sizes.len() && sizes[i] == s {
            i += 1;
        }
    }

    // Breadth per depth, full and with repaired trees excluded.
    let trees: Vec<PropagationTree> = cascades.iter().map(build_tree).collect();
    let all: Vec<&PropagationTree> = trees.iter().collect();
    let clean: Vec<&PropagationTree> = trees.iter().filter(|t| !t.repaired).collect();
    let breadth_by_depth = breadth_curve(&all);
    let breadth_by_depth_strict = breadth_curve(&clean);

    // Mean distinct authors after the i-th event (x is 1-based).
    let max_len = cascades.iter().map(|c| c.size()).max().unwrap_or(0);
    let mut uu_sum = vec![0.0f64; max_len];
    let mut uu_n = vec![0u64; max_len];
    for c in cascades {
        let mut seen = BTreeSet::new();
        for (i, e) in c.events.iter().enumerate() {
            seen.insert(e.author_id.as_str());
            uu_sum[i] += seen.len() as f64;
            uu_n[i] += 1;
        }
    }
    let unique_users = (0..max_len)
        .map(|i| CurvePoint { x: (i + 1) as f64, y: uu_sum[i] / uu_n[i] as f64, n: uu_n[i] })
        .collect();

    // Mean elapsed hours until the k-th distinct author.
    let mut tk_sum: Vec<f64> = Vec::new();
    let mut tk_n: Vec<u64> = Vec::new();
    for c in cascades {
        let t0 = c.events[0].created_at;
        let mut seen = BTreeSet::new();
        for e in &c.events {
            if seen.insert(e.author_id.as_str()) {
                let k = seen.len();
                if tk_sum.len() < k {
                    tk_sum.resize(k, 0.0);
                    tk_n.resize(k, 0);
                }
                tk_sum[k - 1] += (e.created_at - t0) as f64 / SECONDS_PER_HOUR;
                tk_n[k - 1] += 1;
            }
        }
    }
    let time_to_kth_unique = tk_sum
        .iter()
        .zip(&tk_n)
        .enumerate()
        .map(|(i, (sum, n))| CurvePoint { x: (i + 1) as f64, y: sum / *n as f64, n: *n })
        .collect();

    Ok(PropagationMetrics {
        group: group.to_string(),
        size_ccdf,
        breadth_by_depth,
        breadth_by_depth_strict,
        unique_users,
        time_to_kth_unique,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_cascades: u64,
    pub avg_size: f64,
    pub avg_duration_hours: f64,
    /// Mean of per-cascade mean inter-engagement gaps, over cascades with at
    /// least two events. None when no cascade qualifies.
    pub avg_gap_hours: Option<f64>,
    pub n_reliable: u64,
    pub n_unreliable: u64,
    pub n_unlabeled: u64,
}

pub fn cascade_corpus_stats(cascades: &[Cascade]) -> Result<CorpusStats> {
    if cascades.is_empty() {
        return Err(Error::invalid("corpus stats over empty cascade set"));
    }
    let n = cascades.len() as f64;
    let avg_size = cascades.iter().map(|c| c.size() as f64).sum::<f64>() / n;
    let avg_duration_hours = cascades.iter().map(|c| c.duration_hours()).sum::<f64>() / n;
    let mut gap_sum = 0.0;
    let mut gap_n = 0u64;
    for c in cascades {
        if c.size() < 2 {
            continue;
        }
        let deltas: f64 = c
            .events
            .windows(2)
            .map(|w| (w[1].created_at - w[0].created_at) as f64 / SECONDS_PER_HOUR)
            .sum();
        gap_sum += deltas / (c.size() - 1) as f64;
        gap_n += 1;
    }
    let mut stats = CorpusStats {
        n_cascades: cascades.len() as u64,
        avg_size,
        avg_duration_hours,
        avg_gap_hours: (gap_n > 0).then(|| gap_sum / gap_n as f64),
        n_reliable: 0,
        n_unreliable: 0,
        n_unlabeled: 0,
    };
    for c in cascades {
        match c.label {
            CascadeLabel::Reliable => stats.n_reliable += 1,
            CascadeLabel::Unreliable => stats.n_unreliable += 1,
            CascadeLabel::Unlabeled => stats.n_unlabeled += 1,
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn record(
        id: &str,
        author: &str,
        at: i64,
        tweet_type: TweetType,
        parent: Option<(&str, &str)>,
    ) -> TweetRecord {
        TweetRecord {
            tweet_id: id.to_string(),
            author_id: author.to_string(),
            created_at: at,
            tweet_type,
            parent_tweet_id: parent.map(|(p, _)| p.to_string()),
            parent_author_id: parent.map(|(_, a)| a.to_string()),
            text: String::new(),
            urls: vec![],
            hashtags: vec![],
            author_created_at: 1,
            author_followers: 0,
            author_friends: 0,
        }
    }

    #[test]
    fn single_chain() {
        let records = vec![
            record("a", "ua", 0, TweetType::Original, None),
            record("b", "ub", 5, TweetType::Retweet, Some(("a", "ua"))),
            record("c", "uc", 9, TweetType::Reply, Some(("b", "ub"))),
        ];
        let build = build_cascades(&records);
        assert_eq!(build.cascades.len(), 1);
        let ids: Vec<&str> = build.cascades[0].events.iter().map(|e| e.tweet_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b", "c"]);
        assert_eq!(build.n_quarantined, 0);
    }

    #[test]
    fn orphan_becomes_root() {
        let records = vec![record("x", "ux", 10, TweetType::Reply, Some(("missing", "um")))];
        let build = build_cascades(&records);
        assert_eq!(build.cascades.len(), 1);
        assert_eq!(build.cascades[0].cascade_id, "x");
        assert_eq!(build.cascades[0].size(), 1);
    }

    #[test]
    fn cycle_quarantined() {
        let records = vec![
            record("a", "u1", 1, TweetType::Reply, Some(("b", "u2"))),
            record("b", "u2", 2, TweetType::Reply, Some(("a", "u1"))),
            record("c", "u3", 3, TweetType::Original, None),
        ];
        let build = build_cascades(&records);
        assert_eq!(build.n_quarantined, 2);
        assert_eq!(build.cascades.len(), 1);
        assert_eq!(build.cascades[0].cascade_id, "c");
    }

    #[test]
    fn subsample_size_filter() {
        let mut records = vec![];
        // cascades of sizes 1, 4, 5, 9
        for (root, size) in [("r1", 1usize), ("r2", 4), ("r3", 5), ("r4", 9)] {
            records.push(record(root, &format!("a{root}"), 10, TweetType::Original, None));
            for i in 1..size {
                records.push(record(
                    &format!("{root}-{i}"),
                    &format!("u{root}{i}"),
                    10 + i as i64,
                    TweetType::Retweet,
                    Some((root, &format!("a{root}"))),
                ));
            }
        }
        let build = build_cascades(&records);
        let sub = subsample_for_training(&build.cascades, 5, usize::MAX);
        let mut sizes: Vec<usize> = sub.kept.iter().map(|c| c.size()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![5, 9]);
        assert!((sub.coverage - 14.0 / 19.0).abs() < 1e-12);

        let all = subsample_for_training(&build.cascades, 1, usize::MAX);
        assert_eq!(all.kept.len(), 4);
        assert!((all.coverage - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tree_chain_and_star() {
        let chain = build_cascades(&[
            record("a", "u1", 0, TweetType::Original, None),
            record("b", "u2", 1, TweetType::Retweet, Some(("a", "u1"))),
            record("c", "u3", 2, TweetType::Reply, Some(("b", "u2"))),
        ]);
        let t = build_tree(&chain.cascades[0]);
        assert_eq!(t.depth, vec![0, 1, 2]);
        assert!(!t.repaired);
        assert_eq!(t.n_edges(), t.nodes.len() - 1);

        let star = build_cascades(&[
            record("r", "u1", 0, TweetType::Original, None),
            record("s1", "u2", 1, TweetType::Retweet, Some(("r", "u1"))),
            record("s2", "u3", 2, TweetType::Retweet, Some(("r", "u1"))),
            record("s3", "u4", 3, TweetType::Retweet, Some(("r", "u1"))),
        ]);
        let t = build_tree(&star.cascades[0]);
        assert_eq!(t.breadth_profile(), vec![1, 3]);
    }

    #[test]
    fn tree_repair_attaches_to_root() {
        // c's parent "gone" is not part of the cascade node set.
        let cascade = Cascade {
            cascade_id: "a".into(),
            events: vec![
                CascadeEvent::from_record(&record("a", "u1", 0, TweetType::Original, None)),
                CascadeEvent::from_record(&record(
                    "c",
                    "u2",
                    5,
                    TweetType::Reply,
                    Some(("gone", "ux")),
                )),
            ],
            label: CascadeLabel::Unlabeled,
        };
        let t = build_tree(&cascade);
        assert!(t.repaired);
        assert_eq!(t.parent[1], Some(0));
        assert_eq!(t.depth[1], 1);
    }

    #[test]
    fn ccdf_example() {
        let mk = |root: &str, size: usize| {
            let mut records = vec![record(root, "a", 0, TweetType::Original, None)];
            for i in 1..size {
                records.push(record(
                    &format!("{root}{i}"),
                    &format!("u{i}"),
                    i as i64,
                    TweetType::Retweet,
                    Some((root, "a")),
                ));
            }
            build_cascades(&records).cascades.remove(0)
        };
        let group = vec![mk("x", 5), mk("y", 5), mk("z", 10)];
        let m = propagation_metrics(&group, "test").unwrap();
        assert_eq!(m.size_ccdf.len(), 2);
        assert_eq!(m.size_ccdf[0].x, 5.0);
        assert!((m.size_ccdf[0].y - 1.0).abs() < 1e-15);
        assert_eq!(m.size_ccdf[1].x, 10.0);
        assert!((m.size_ccdf[1].y - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unique_user_curve_example() {
        // author sequence a, b, a, c
        let records = vec![
            record("r", "a", 0, TweetType::Original, None),
            record("e1", "b", 1, TweetType::Retweet, Some(("r", "a"))),
            record("e2", "a", 2, TweetType::Reply, Some(("r", "a"))),
            record("e3", "c", 3, TweetType::Quote, Some(("r", "a"))),
        ];
        let build = build_cascades(&records);
        let m = propagation_metrics(&build.cascades, "test").unwrap();
        let ys: Vec<f64> = m.unique_users.iter().map(|p| p.y).collect();
        assert_eq!(ys, vec![1.0, 2.0, 2.0, 3.0]);
    }

    #[test]
    fn corpus_stats_two_hour_cascade() {
        let records = vec![
            record("r", "a", 0, TweetType::Original, None),
            record("e", "b", 7200, TweetType::Retweet, Some(("r", "a"))),
        ];
        let build = build_cascades(&records);
        let stats = cascade_corpus_stats(&build.cascades).unwrap();
        assert!((stats.avg_duration_hours - 2.0).abs() < 1e-12);
        assert_eq!(stats.avg_gap_hours, Some(2.0));
        assert_eq!(stats.n_unlabeled, 1);
    }

    #[test]
    fn empty_group_errors() {
        assert!(propagation_metrics(&[], "empty").is_err());
        assert!(cascade_corpus_stats(&[]).is_err());
    }
}
