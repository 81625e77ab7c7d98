//! Deterministic synthetic fixtures with recorded ground truth, plus the
//! independent oracles in [`oracle`]. Every draw flows from the spec's seed
//! through the pinned splitmix64 generator, so identical specs produce
//! byte-identical fixtures on every platform.

pub mod oracle;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cascades::{Cascade, CascadeEvent, CascadeLabel};
use crate::ingest::{TweetRecord, TweetType, TypeCounts};
use crate::rng::SplitMix64;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FixtureSpec {
    CascadeForest(CascadeForestSpec),
    PlantedPartition(PlantedPartitionSpec),
    StepSeries(StepSeriesSpec),
    BlobVectors(BlobVectorsSpec),
    PlantedSignalCascades(PlantedSignalSpec),
}

pub enum Fixture {
    CascadeForest(ForestFixture),
    PlantedPartition(GraphFixture),
    StepSeries(SeriesFixture),
    BlobVectors(BlobFixture),
    PlantedSignalCascades(SignalFixture),
}

pub fn generate_fixture(spec: &FixtureSpec) -> crate::error::Result<Fixture> {
    match spec {
        FixtureSpec::CascadeForest(s) => Ok(Fixture::CascadeForest(cascade_forest(s))),
        FixtureSpec::PlantedPartition(s) => Ok(Fixture::PlantedPartition(planted_partition(s))),
        FixtureSpec::StepSeries(s) => Ok(Fixture::StepSeries(step_series(s))),
        FixtureSpec::BlobVectors(s) => Ok(Fixture::BlobVectors(blob_vectors(s))),
        FixtureSpec::PlantedSignalCascades(s) => {
            Ok(Fixture::PlantedSignalCascades(planted_signal_cascades(s)))
        }
    }
}

// ---------------------------------------------------------------------------
// Cascade forest (optionally enriched into a full pipeline corpus)
// ---------------------------------------------------------------------------

pub const DEFAULT_START_TIME: i64 = 1_592_611_200; // 2020-06-20 00:00:00 UTC
pub const DEFAULT_INTERVENTION: i64 = 1_595_289_600; // 2020-07-21 00:00:00 UTC

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CascadeForestSpec {
    pub seed: u64,
    pub n_roots: usize,
    pub mean_size: f64,
    pub n_accounts: usize,
    /// Engagements whose parent is outside the corpus; they root their own
    /// cascades.
    pub n_orphans: usize,
    pub start_time: i64,
    pub span_days: usize,
    /// Attach URLs, hashtags, keyword posts, seed-account behavior, topic
    /// texts, and an embedding vocabulary so the whole pipeline can run.
    pub enrich: bool,
    /// Fraction of seed accounts whose endorsed outlets point the wrong way.
    pub seed_noise: f64,
}

impl Default for CascadeForestSpec {
    fn default() -> Self {
        CascadeForestSpec {
            seed: 1,
            n_roots: 150,
            mean_size: 8.0,
            n_accounts: 400,
            n_orphans: 10,
            start_time: DEFAULT_START_TIME,
            span_days: 79,
            enrich: true,
            seed_noise: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantedSide {
    Left,
    Right,
    Neutral,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ForestTruth {
    /// tweet_id -> cascade root tweet_id.
    pub membership: BTreeMap<String, String>,
    pub n_records: u64,
    pub type_counts: TypeCounts,
    pub n_accounts: u64,
    pub time_span: (i64, i64),
    pub account_sides: BTreeMap<String, PlantedSide>,
    /// Accounts planted as the conspiracy cohort (keyword posters in the
    /// right block).
    pub cohort: BTreeSet<String>,
    /// root tweet_id -> planted label ("reliable" / "unreliable").
    pub root_labels: BTreeMap<String, String>,
    pub intervention_ts: i64,
}

/// Auxiliary pipeline inputs emitted with an enriched forest.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PipelineAux {
    pub reliable_domains: Vec<String>,
    pub unreliable_domains: Vec<String>,
    /// `domain,bias` rows for the outlet table.
    pub outlet_rows: Vec<String>,
    /// Keyword entries; a leading '#' marks hashtag-only matching.
    pub keywords: Vec<String>,
    /// Word-vector file content ("count dim" header then rows).
    pub embeddings_text: String,
}

pub struct ForestFixture {
    pub records: Vec<TweetRecord>,
    pub truth: ForestTruth,
    pub aux: Option<PipelineAux>,
}

const TOPIC_VOCABS: [[&str; 8]; 3] = [
    ["ballot", "fraud", "mail", "rigged", "votes", "harvest", "dump", "count"],
    ["virus", "cure", "pill", "doctors", "hidden", "plandemic", "vaccine", "hoax"],
    ["censor", "banned", "silenced", "bigtech", "shadow", "media", "truth", "platform"],
];
const REPORT_VOCAB: [&str; 8] =
    ["poll", "campaign", "debate", "policy", "senate", "governor", "economy", "turnout"];
const KEYWORD_TOKENS: [&str; 3] = ["wwg1wga", "trusttheplan", "greatawakening"];
const KEYWORD_HASHTAGS: [&str; 2] = ["qanon", "qarmy"];
// (tag, daily attach probability before, after)
const PLANTED_TAGS: [(&str, f64, f64); 3] =
    [("fadeaway", 0.5, 0.1), ("risingtag", 0.05, 0.3), ("steadytag", 0.2, 0.2)];

struct AccountPool {
    ids: Vec<String>,
    sides: Vec<PlantedSide>,
    created: Vec<i64>,
    followers: Vec<u64>,
    friends: Vec<u64>,
    left: Vec<usize>,
    right: Vec<usize>,
    cohort: Vec<usize>,
    suspicious: Vec<usize>,
}

fn make_accounts(spec: &CascadeForestSpec, rng: &mut SplitMix64) -> AccountPool {
    let n = spec.n_accounts.max(20);
    let mut pool = AccountPool {
        ids: Vec::with_capacity(n),
        sides: Vec::with_capacity(n),
        created: Vec::with_capacity(n),
        followers: Vec::with_capacity(n),
        friends: Vec::with_capacity(n),
        left: Vec::new(),
        right: Vec::new(),
        cohort: Vec::new(),
        suspicious: Vec::new(),
    };
    let intervention = DEFAULT_INTERVENTION.max(spec.start_time);
    for i in 0..n {
        pool.ids.push(format!("u{i:05}"));
        let side = match i % 10 {
            0..=3 => PlantedSide::Left,
            4..=7 => PlantedSide::Right,
            _ => PlantedSide::Neutral,
        };
        pool.sides.push(side);
        match side {
            PlantedSide::Left => pool.left.push(i),
            PlantedSide::Right => pool.right.push(i),
            PlantedSide::Neutral => {}
        }
        // A sliver of cohort accounts are created after the intervention.
        let created = if side == PlantedSide::Right && i % 40 == 4 {
            intervention + rng.next_index(20 * 86_400) as i64 + 1
        } else {
            spec.start_time - 86_400 * (10 + rng.next_index(900) as i64)
        };
        pool.created.push(created);
        pool.followers.push((50.0 * (1.0 + 9.0 * rng.next_f64())) as u64);
        pool.friends.push((30.0 * (1.0 + 9.0 * rng.next_f64())) as u64);
    }
    // Cohort: a fixed slice of the right block. Suspicious accounts (who
    // engage unreliable cascades) are the cohort plus more right accounts.
    let cohort_size = (pool.right.len() / 3).max(4);
    pool.cohort = pool.right[..cohort_size.min(pool.right.len())].to_vec();
    let extra = (pool.right.len() / 2).min(pool.right.len());
    pool.suspicious = pool.right[..extra].to_vec();
    pool
}

fn geometric_size(mean: f64, rng: &mut SplitMix64) -> usize {
    let p = (1.0 / mean.max(1.0)).clamp(1e-6, 1.0);
    let u = rng.next_f64();
    let tail = ((1.0 - u).ln() / (1.0 - p).ln()).floor() as usize;
    (1 + tail).min(60)
}

fn exp_gap_secs(mean_hours: f64, rng: &mut SplitMix64) -> i64 {
    let u = rng.next_f64();
    let hours = -mean_hours * (1.0 - u).ln();
    (hours * 3600.0).max(1.0) as i64
}

fn sample<'a, T>(xs: &'a [T], rng: &mut SplitMix64) -> &'a T {
    &xs[rng.next_index(xs.len())]
}

/// Generate a planted cascade forest. With `enrich` the corpus carries
/// everything the downstream stages consume; without it, records hold only
/// structure (ids, parents, times, types).
pub fn cascade_forest(spec: &CascadeForestSpec) -> ForestFixture {
    let mut rng = SplitMix64::new(spec.seed);
    let mut acc_rng = rng.fork(1);
    let pool = make_accounts(spec, &mut acc_rng);
    let span_secs = (spec.span_days.max(2) as i64) * 86_400;
    let intervention = DEFAULT_INTERVENTION.clamp(spec.start_time, spec.start_time + span_secs);

    let mut truth = ForestTruth {
        intervention_ts: if spec.enrich { intervention } else { 0 },
        ..ForestTruth::default()
    };
    if spec.enrich {
        for (i, id) in pool.ids.iter().enumerate() {
            truth.account_sides.insert(id.clone(), pool.sides[i]);
        }
        for &i in &pool.cohort {
            truth.cohort.insert(pool.ids[i].clone());
        }
    }

    let reliable_domains: Vec<String> =
        (0..6).map(|i| format!("steady-news-{i}.org")).collect();
    let unreliable_domains: Vec<String> =
        (0..6).map(|i| format!("hoax-news-{i}.net")).collect();
    let left_outlets: Vec<String> = (0..4).map(|i| format!("left-outlet-{i}.com")).collect();
    let right_outlets: Vec<String> = (0..4).map(|i| format!("right-outlet-{i}.com")).collect();

    let mut records: Vec<TweetRecord> = Vec::new();
    let mut next_id = 0usize;
    let fresh_id = |next_id: &mut usize| {
        let id = format!("t{:07}", *next_id);
        *next_id += 1;
        id
    };

    let mut text_rng = rng.fork(2);
    let cohort_text = |author: usize,
                           tweet_type: TweetType,
                           at: i64,
                           text: &mut String,
                           hashtags: &mut Vec<String>,
                           rng: &mut SplitMix64| {
        if !spec.enrich || !pool.cohort.contains(&author) {
            return;
        }
        let before = at < intervention;
        let keyword_p = if before { 0.5 } else { 0.15 };
        if tweet_type != TweetType::Retweet && rng.next_bool(keyword_p) {
            if rng.next_bool(0.5) {
                text.push_str(" ");
                text.push_str(sample(&KEYWORD_TOKENS, rng));
            } else {
                hashtags.push(sample(&KEYWORD_HASHTAGS, rng).to_string());
            }
        }
        for (tag, p_before, p_after) in PLANTED_TAGS {
            if rng.next_bool(if before { p_before } else { p_after }) {
                hashtags.push(tag.to_string());
            }
        }
        if rng.next_bool(0.3) {
            hashtags.push(format!("gen-{}", rng.next_index(20)));
        }
    };

    // Planted cascades.
    let mut forest_rng = rng.fork(3);
    for j in 0..spec.n_roots {
        let rng = &mut forest_rng;
        let label = match j % 5 {
            0 | 1 => Some(CascadeLabel::Reliable),
            2 | 3 => Some(CascadeLabel::Unreliable),
            _ => None,
        };
        let unreliable = label == Some(CascadeLabel::Unreliable);
        let root_author = if unreliable && spec.enrich {
            *sample(&pool.suspicious, rng)
        } else if j % 3 == 0 && spec.enrich {
            *sample(&pool.cohort, rng)
        } else {
            rng.next_index(pool.ids.len())
        };
        let root_time = spec.start_time + rng.next_index((span_secs - 86_400) as usize) as i64;
        let root_id = fresh_id(&mut next_id);
        truth.membership.insert(root_id.clone(), root_id.clone());

        let mut text = String::new();
        let mut urls = Vec::new();
        let mut hashtags = Vec::new();
        if spec.enrich {
            match label {
                Some(CascadeLabel::Unreliable) => {
                    let topic = j % TOPIC_VOCABS.len();
                    let n_words = 5 + rng.next_index(4);
                    let words: Vec<&str> =
                        (0..n_words).map(|_| *sample(&TOPIC_VOCABS[topic], rng)).collect();
                    text = words.join(" ");
                    urls.push(format!(
                        "https://{}/story/{j}",
                        sample(&unreliable_domains, rng)
                    ));
                    truth.root_labels.insert(root_id.clone(), "unreliable".to_string());
                }
                Some(CascadeLabel::Reliable) => {
                    let n_words = 5 + rng.next_index(4);
                    let words: Vec<&str> =
                        (0..n_words).map(|_| *sample(&REPORT_VOCAB, rng)).collect();
                    text = words.join(" ");
                    urls.push(format!("https://{}/article/{j}", sample(&reliable_domains, rng)));
                    truth.root_labels.insert(root_id.clone(), "reliable".to_string());
                }
                _ => {
                    text = format!("update {j}");
                }
            }
            cohort_text(root_author, TweetType::Original, root_time, &mut text, &mut hashtags, &mut text_rng);
        }
        records.push(TweetRecord {
            tweet_id: root_id.clone(),
            author_id: pool.ids[root_author].clone(),
            created_at: root_time,
            tweet_type: TweetType::Original,
            parent_tweet_id: None,
            parent_author_id: None,
            text,
            urls,
            hashtags,
            author_created_at: pool.created[root_author],
            author_followers: pool.followers[root_author],
            author_friends: pool.friends[root_author],
        });

        let size = geometric_size(spec.mean_size, rng);
        let mut members: Vec<(String, usize, i64)> = vec![(root_id.clone(), root_author, root_time)];
        let gap_mean = if unreliable { 0.08 } else { 0.8 };
        let mut t = root_time;
        for _ in 1..size {
            let parent_pos = if rng.next_bool(0.6) { 0 } else { rng.next_index(members.len()) };
            let (parent_id, parent_author, _) = members[parent_pos].clone();
            let tweet_type = match rng.next_index(100) {
                0..=59 => TweetType::Retweet,
                60..=84 => TweetType::Reply,
                _ => TweetType::Quote,
            };
            let author = if unreliable && spec.enrich && rng.next_bool(0.7) {
                *sample(&pool.suspicious, rng)
            } else if tweet_type == TweetType::Retweet && spec.enrich && rng.next_bool(0.95) {
                // retweets are endorsements: stay inside the parent's block
                match pool.sides[parent_author] {
                    PlantedSide::Left => *sample(&pool.left, rng),
                    PlantedSide::Right => *sample(&pool.right, rng),
                    PlantedSide::Neutral => rng.next_index(pool.ids.len()),
                }
            } else if tweet_type == TweetType::Reply && spec.enrich && rng.next_bool(0.4) {
                // replies cross blocks more often
                match pool.sides[parent_author] {
                    PlantedSide::Left => *sample(&pool.right, rng),
                    _ => *sample(&pool.left, rng),
                }
            } else {
                rng.next_index(pool.ids.len())
            };
            t += exp_gap_secs(gap_mean, rng);
            let id = fresh_id(&mut next_id);
            truth.membership.insert(id.clone(), root_id.clone());
            let mut text = String::new();
            let mut hashtags = Vec::new();
            if spec.enrich && tweet_type != TweetType::Retweet && rng.next_bool(0.3) {
                text = format!("re {}", sample(&REPORT_VOCAB, rng));
            }
            cohort_text(author, tweet_type, t, &mut text, &mut hashtags, &mut text_rng);
            records.push(TweetRecord {
                tweet_id: id.clone(),
                author_id: pool.ids[author].clone(),
                created_at: t,
                tweet_type,
                parent_tweet_id: Some(parent_id),
                parent_author_id: Some(pool.ids[parent_author].clone()),
                text,
                urls: Vec::new(),
                hashtags,
                author_created_at: pool.created[author],
                author_followers: pool.followers[author],
                author_friends: pool.friends[author],
            });
            members.push((id, author, t));
        }
    }

    // Orphan engagements: parents outside the corpus, so each roots itself.
    let mut orphan_rng = rng.fork(4);
    for o in 0..spec.n_orphans {
        let rng = &mut orphan_rng;
        let author = rng.next_index(pool.ids.len());
        let at = spec.start_time + rng.next_index(span_secs as usize) as i64;
        let id = fresh_id(&mut next_id);
        truth.membership.insert(id.clone(), id.clone());
        records.push(TweetRecord {
            tweet_id: id,
            author_id: pool.ids[author].clone(),
            created_at: at,
            tweet_type: TweetType::Reply,
            parent_tweet_id: Some(format!("outside-{o}")),
            parent_author_id: Some(format!("stranger-{o}")),
            text: String::new(),
            urls: Vec::new(),
            hashtags: Vec::new(),
            author_created_at: pool.created[author],
            author_followers: pool.followers[author],
            author_friends: pool.friends[author],
        });
    }

    // Seed-account outlet endorsements: standalone original tweets carrying
    // media URLs, 12 per seed account, mostly from the account's own side.
    // A `seed_noise` fraction of seed accounts endorses the wrong side.
    let mut aux = None;
    if spec.enrich {
        let mut seed_rng = rng.fork(5);
        let emit_seed_tweets = |account: usize,
                                    own: &[String],
                                    other: &[String],
                                    rng: &mut SplitMix64,
                                    records: &mut Vec<TweetRecord>,
                                    next_id: &mut usize| {
            let flipped = rng.next_bool(spec.seed_noise);
            for _ in 0..12 {
                let own_share = rng.next_bool(0.9);
                let domain = match (flipped, own_share) {
                    (false, true) | (true, false) => sample(own, rng),
                    _ => sample(other, rng),
                };
                let at = spec.start_time + rng.next_index(span_secs as usize) as i64;
                let id = format!("t{:07}", *next_id);
                *next_id += 1;
                truth.membership.insert(id.clone(), id.clone());
                let words: Vec<&str> = (0..3).map(|_| *sample(&REPORT_VOCAB, rng)).collect();
                records.push(TweetRecord {
                    tweet_id: id,
                    author_id: pool.ids[account].clone(),
                    created_at: at,
                    tweet_type: TweetType::Original,
                    parent_tweet_id: None,
                    parent_author_id: None,
                    text: words.join(" "),
                    urls: vec![format!("https://{domain}/op-ed/{account}")],
                    hashtags: Vec::new(),
                    author_created_at: pool.created[account],
                    author_followers: pool.followers[account],
                    author_friends: pool.friends[account],
                });
            }
        };
        for (pos, &i) in pool.left.iter().enumerate() {
            if pos % 3 == 0 {
                emit_seed_tweets(i, &left_outlets, &right_outlets, &mut seed_rng, &mut records, &mut next_id);
            }
        }
        for (pos, &i) in pool.right.iter().enumerate() {
            if pos % 3 == 0 {
                emit_seed_tweets(i, &right_outlets, &left_outlets, &mut seed_rng, &mut records, &mut next_id);
            }
        }

        // Embedding vocabulary: topic words sit near per-topic centers so
        // the cluster sweep can find them; report words near a fourth.
        let mut emb_rng = rng.fork(6);
        let dim = 8usize;
        let mut lines = Vec::new();
        let push_word = |word: &str, center_axis: usize, lines: &mut Vec<String>, rng: &mut SplitMix64| {
            let mut v = vec![0.0f64; dim];
            v[center_axis] = 6.0;
            for x in v.iter_mut() {
                *x += 0.3 * rng.next_normal();
            }
            let row: Vec<String> = v.iter().map(f64::to_string).collect();
            lines.push(format!("{word} {}", row.join(" ")));
        };
        for (ti, vocab) in TOPIC_VOCABS.iter().enumerate() {
            for w in vocab {
                push_word(w, ti, &mut lines, &mut emb_rng);
            }
        }
        for w in REPORT_VOCAB {
            push_word(w, 3, &mut lines, &mut emb_rng);
        }
        push_word("update", 4, &mut lines, &mut emb_rng);
        push_word("re", 4, &mut lines, &mut emb_rng);
        let embeddings_text = format!("{} {dim}\n{}\n", lines.len(), lines.join("\n"));

        let mut outlet_rows = Vec::new();
        for (i, d) in left_outlets.iter().enumerate() {
            outlet_rows.push(format!("{d},{}", if i % 2 == 0 { "left" } else { "lean left" }));
        }
        for (i, d) in right_outlets.iter().enumerate() {
            outlet_rows.push(format!("{d},{}", if i % 2 == 0 { "right" } else { "lean right" }));
        }
        outlet_rows.push("center-outlet.com,center".to_string());

        let mut keywords: Vec<String> =
            KEYWORD_TOKENS.iter().map(|k| k.to_string()).collect();
        keywords.extend(KEYWORD_HASHTAGS.iter().map(|k| format!("#{k}")));

        aux = Some(PipelineAux {
            reliable_domains,
            unreliable_domains,
            outlet_rows,
            keywords,
            embeddings_text,
        });
    }

    // Archived streams arrive in time order.
    records.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.tweet_id.cmp(&b.tweet_id)));

    truth.n_records = records.len() as u64;
    let mut accounts = BTreeSet::new();
    let mut span = (i64::MAX, i64::MIN);
    for r in &records {
        match r.tweet_type {
            TweetType::Original => truth.type_counts.original += 1,
            TweetType::Reply => truth.type_counts.reply += 1,
            TweetType::Retweet => truth.type_counts.retweet += 1,
            TweetType::Quote => truth.type_counts.quote += 1,
        }
        accounts.insert(r.author_id.as_str());
        span = (span.0.min(r.created_at), span.1.max(r.created_at));
    }
    truth.n_accounts = accounts.len() as u64;
    truth.time_span = span;

    ForestFixture { records, truth, aux }
}

// ---------------------------------------------------------------------------
// Planted-partition graphs
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlantedPartitionSpec {
    pub seed: u64,
    pub blocks: usize,
    pub nodes_per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
}

pub struct GraphFixture {
    pub n_nodes: usize,
    pub edges: Vec<(u32, u32, f64)>,
    pub labels: Vec<usize>,
}

pub fn planted_partition(spec: &PlantedPartitionSpec) -> GraphFixture {
    let n = spec.blocks * spec.nodes_per_block;
    let mut rng = SplitMix64::new(spec.seed);
    let labels: Vec<usize> = (0..n).map(|i| i / spec.nodes_per_block).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if labels[u] == labels[v] { spec.p_in } else { spec.p_out };
            if rng.next_bool(p) {
                edges.push((u as u32, v as u32, 1.0));
            }
        }
    }
    GraphFixture { n_nodes: n, edges, labels }
}

// ---------------------------------------------------------------------------
// Step series for discontinuity fits
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepSeriesSpec {
    pub seed: u64,
    pub n_days: usize,
    pub x0: f64,
    pub intercept: f64,
    pub slope: f64,
    pub jump: f64,
    pub noise_sigma: f64,
}

pub struct SeriesFixture {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub spec: StepSeriesSpec,
}

impl SeriesFixture {
    pub fn as_series(&self, name: &str) -> crate::rdd::HashtagSeries {
        crate::rdd::HashtagSeries {
            hashtag: name.to_string(),
            points: self.xs.iter().copied().zip(self.ys.iter().copied()).collect(),
            total_count: self.ys.len() as u64,
        }
    }
}

pub fn step_series(spec: &StepSeriesSpec) -> SeriesFixture {
    let mut rng = SplitMix64::new(spec.seed);
    let mut xs = Vec::with_capacity(spec.n_days);
    let mut ys = Vec::with_capacity(spec.n_days);
    for day in 0..spec.n_days {
        let x = day as f64;
        let mut y = spec.intercept + spec.slope * x;
        if x > spec.x0 {
            y += spec.jump;
        }
        if spec.noise_sigma > 0.0 {
            y += spec.noise_sigma * rng.next_normal();
        }
        xs.push(x);
        ys.push(y);
    }
    SeriesFixture { xs, ys, spec: spec.clone() }
}

// ---------------------------------------------------------------------------
// Gaussian blobs for cluster-count selection
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlobVectorsSpec {
    pub seed: u64,
    pub k: usize,
    pub per_cluster: usize,
    pub dim: usize,
    pub sigma: f64,
    pub center_distance: f64,
}

pub struct BlobFixture {
    pub vectors: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
}

pub fn blob_vectors(spec: &BlobVectorsSpec) -> BlobFixture {
    let mut rng = SplitMix64::new(spec.seed);
    let mut centers = Vec::with_capacity(spec.k);
    for j in 0..spec.k {
        let mut c = vec![0.0; spec.dim];
        c[j % spec.dim] = spec.center_distance * (1.0 + (j / spec.dim) as f64);
        centers.push(c);
    }
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for (j, center) in centers.iter().enumerate() {
        for _ in 0..spec.per_cluster {
            let v: Vec<f64> =
                center.iter().map(|c| c + spec.sigma * rng.next_normal()).collect();
            vectors.push(v);
            labels.push(j);
        }
    }
    BlobFixture { vectors, labels, centers }
}

// ---------------------------------------------------------------------------
// Planted-signal labeled cascades for the detector
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlantedSignalSpec {
    pub seed: u64,
    pub n_cascades: usize,
    pub mean_events: f64,
    pub unreliable_gap_hours: f64,
    pub reliable_gap_hours: f64,
    pub n_accounts_per_pool: usize,
}

impl Default for PlantedSignalSpec {
    fn default() -> Self {
        PlantedSignalSpec {
            seed: 7,
            n_cascades: 500,
            mean_events: 10.0,
            unreliable_gap_hours: 0.08,
            reliable_gap_hours: 0.8,
            n_accounts_per_pool: 40,
        }
    }
}

pub struct SignalFixture {
    pub cascades: Vec<Cascade>,
    pub labels: Vec<bool>,
    pub spec: PlantedSignalSpec,
}

pub fn planted_signal_cascades(spec: &PlantedSignalSpec) -> SignalFixture {
    let mut rng = SplitMix64::new(spec.seed);
    let pool = spec.n_accounts_per_pool.max(2);
    let suspicious: Vec<String> = (0..pool).map(|i| format!("s{i:04}")).collect();
    let clean: Vec<String> = (0..pool).map(|i| format!("c{i:04}")).collect();
    let shared: Vec<String> = (0..pool).map(|i| format!("m{i:04}")).collect();

    let mut cascades = Vec::with_capacity(spec.n_cascades);
    let mut labels = Vec::with_capacity(spec.n_cascades);
    for j in 0..spec.n_cascades {
        let unreliable = j % 2 == 0;
        let gap_mean = if unreliable { spec.unreliable_gap_hours } else { spec.reliable_gap_hours };
        let own_pool = if unreliable { &suspicious } else { &clean };
        let size = (3 + geometric_size(spec.mean_events - 3.0, &mut rng)).min(60);
        let root_id = format!("p{j:06}");
        let mut t = 1_600_000_000 + (j as i64) * 100_000;
        let mut events = Vec::with_capacity(size);
        let root_author =
            if rng.next_bool(0.75) { sample(own_pool, &mut rng) } else { sample(&shared, &mut rng) };
        events.push(CascadeEvent {
            author_id: root_author.clone(),
            tweet_id: root_id.clone(),
            created_at: t,
            tweet_type: TweetType::Original,
            parent_tweet_id: None,
            parent_author_id: None,
            urls: vec![],
            text: String::new(),
            author_created_at: 1_500_000_000,
            author_followers: 100 + rng.next_index(900) as u64,
            author_friends: 50 + rng.next_index(400) as u64,
        });
        for e in 1..size {
            t += exp_gap_secs(gap_mean, &mut rng);
            let author =
                if rng.next_bool(0.75) { sample(own_pool, &mut rng) } else { sample(&shared, &mut rng) };
            let parent = rng.next_index(e);
            let parent_event: (String, String) =
                (events[parent].tweet_id.clone(), events[parent].author_id.clone());
            events.push(CascadeEvent {
                author_id: author.clone(),
                tweet_id: format!("{root_id}-{e}"),
                created_at: t,
                tweet_type: if rng.next_bool(0.7) { TweetType::Retweet } else { TweetType::Reply },
                parent_tweet_id: Some(parent_event.0),
                parent_author_id: Some(parent_event.1),
                urls: vec![],
                text: String::new(),
                author_created_at: 1_500_000_000,
                author_followers: 100 + rng.next_index(900) as u64,
                author_friends: 50 + rng.next_index(400) as u64,
            });
        }
        cascades.push(Cascade {
            cascade_id: root_id,
            events,
            label: if unreliable { CascadeLabel::Unreliable } else { CascadeLabel::Reliable },
        });
        labels.push(unreliable);
    }
    SignalFixture { cascades, labels, spec: spec.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascades::build_cascades;

    #[test]
    fn forest_is_deterministic() {
        let spec = CascadeForestSpec { n_roots: 20, n_accounts: 50, ..Default::default() };
        let a = cascade_forest(&spec);
        let b = cascade_forest(&spec);
        assert_eq!(a.records, b.records);
        assert_eq!(a.truth.membership, b.truth.membership);
        let aux_a = a.aux.as_ref().unwrap();
        let aux_b = b.aux.as_ref().unwrap();
        assert_eq!(aux_a.embeddings_text, aux_b.embeddings_text);
    }

    #[test]
    fn forest_membership_recovered_by_reconstruction() {
        let spec = CascadeForestSpec {
            n_roots: 50,
            n_accounts: 100,
            enrich: false,
            ..Default::default()
        };
        let fixture = cascade_forest(&spec);
        let build = build_cascades(&fixture.records);
        assert_eq!(build.n_quarantined, 0);
        let mut rebuilt: BTreeMap<String, String> = BTreeMap::new();
        for c in &build.cascades {
            for e in &c.events {
                rebuilt.insert(e.tweet_id.clone(), c.cascade_id.clone());
            }
        }
        assert_eq!(rebuilt, fixture.truth.membership);
    }

    #[test]
    fn forest_tallies_match_parse() {
        let spec = CascadeForestSpec { n_roots: 40, n_accounts: 80, ..Default::default() };
        let fixture = cascade_forest(&spec);
        let mut buf = Vec::new();
        crate::ingest::write_tweet_stream(&fixture.records, &mut buf).unwrap();
        let (records, stats) = crate::ingest::parse_tweet_stream(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(records.len() as u64, fixture.truth.n_records);
        assert_eq!(stats.n_skipped, 0);
        assert_eq!(stats.type_counts, fixture.truth.type_counts);
        assert_eq!(stats.n_accounts, fixture.truth.n_accounts);
        assert_eq!(stats.time_span, Some(fixture.truth.time_span));
    }

    #[test]
    fn step_series_zero_noise_is_exact() {
        let spec = StepSeriesSpec {
            seed: 0,
            n_days: 80,
            x0: 39.0,
            intercept: 0.1,
            slope: 0.0,
            jump: 0.2,
            noise_sigma: 0.0,
        };
        let fixture = step_series(&spec);
        for (x, y) in fixture.xs.iter().zip(&fixture.ys) {
            let expect = if *x > 39.0 { 0.3 } else { 0.1 };
            assert_eq!(*y, expect);
        }
    }

    #[test]
    fn planted_partition_has_expected_shape() {
        let spec = PlantedPartitionSpec {
            seed: 3,
            blocks: 4,
            nodes_per_block: 50,
            p_in: 0.3,
            p_out: 0.01,
        };
        let g = planted_partition(&spec);
        assert_eq!(g.n_nodes, 200);
        assert_eq!(g.labels.len(), 200);
        let intra = g.edges.iter().filter(|(u, v, _)| g.labels[*u as usize] == g.labels[*v as usize]).count();
        assert!(intra as f64 > 0.8 * g.edges.len() as f64, "assortative structure expected");
    }

    #[test]
    fn bayes_oracle_separates_planted_signal() {
        let spec = PlantedSignalSpec::default();
        let fixture = planted_signal_cascades(&spec);
        let scores: Vec<f64> = fixture
            .cascades
            .iter()
            .map(|c| {
                let gaps: Vec<f64> = c
                    .events
                    .windows(2)
                    .map(|w| (w[1].created_at - w[0].created_at) as f64 / 3600.0)
                    .collect();
                oracle::bayes_gap_score(&gaps, spec.unreliable_gap_hours, spec.reliable_gap_hours)
            })
            .collect();
        let auc = crate::detector::auc(&scores, &fixture.labels).unwrap();
        assert!(auc >= 0.99, "Bayes-rate AUC only {auc}");
    }
}
