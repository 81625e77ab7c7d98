//! Conspiracy-cohort analytics: keyword + right-leaning two-stage account
//! identification, directional interaction partitions, tweet-type by
//! leaning breakdowns, activity and account-creation timelines, and the
//! before/after engagement-change table.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{TweetRecord, TweetType};
use crate::leaning::{LeaningAssignment, Side};
use crate::rng::SplitMix64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchMode {
    /// Entry written with '#': matches only the hashtag list.
    HashtagOnly,
    /// Matches hashtags or whole lowercased text tokens.
    Anywhere,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeywordEntry {
    pub pattern: String,
    pub mode: MatchMode,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct KeywordSet {
    pub entries: Vec<KeywordEntry>,
    hashtag_patterns: BTreeSet<String>,
    anywhere_patterns: BTreeSet<String>,
}

impl KeywordSet {
    pub fn from_entries(entries: Vec<KeywordEntry>) -> Result<KeywordSet> {
        if entries.is_empty() {
            return Err(Error::invalid("empty keyword set"));
        }
        let mut set = KeywordSet { entries, ..KeywordSet::default() };
        for e in &set.entries {
            match e.mode {
                MatchMode::HashtagOnly => set.hashtag_patterns.insert(e.pattern.clone()),
                MatchMode::Anywhere => set.anywhere_patterns.insert(e.pattern.clone()),
            };
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when any hashtag matches, or any whole text token matches an
    /// anywhere-mode entry.
    pub fn matches_record(&self, record: &TweetRecord) -> bool {
        for tag in &record.hashtags {
            if self.hashtag_patterns.contains(tag) || self.anywhere_patterns.contains(tag) {
                return true;
            }
        }
        if self.anywhere_patterns.is_empty() {
            return false;
        }
        text_tokens(&record.text).any(|t| self.anywhere_patterns.contains(&t))
    }
}

fn text_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

/// One entry per line; a leading '#' marks hashtag-only matching.
pub fn load_keywords(path: &Path) -> Result<KeywordSet> {
    let reader = BufReader::new(File::open(path)?);
    let mut entries = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let entry = line.trim();
        if entry.is_empty() {
            continue;
        }
        let (pattern, mode) = match entry.strip_prefix('#') {
            Some(rest) => (rest.to_lowercase(), MatchMode::HashtagOnly),
            None => (entry.to_lowercase(), MatchMode::Anywhere),
        };
        entries.push(KeywordEntry { pattern, mode });
    }
    KeywordSet::from_entries(entries)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CohortIdentification {
    /// Stage 2: keyword posters inferred right-leaning.
    pub cohort: BTreeSet<String>,
    /// Stage 1: accounts with a keyword-bearing original, quote, or reply.
    pub stage1: BTreeSet<String>,
    pub stage1_left: u64,
    pub stage1_right: u64,
    pub stage1_undetermined: u64,
}

/// Stage 1 collects accounts with at least one keyword-bearing original,
/// quote, or reply (retweets excluded); stage 2 keeps the right-leaning.
pub fn identify_cohort(
    records: &[TweetRecord],
    keywords: &KeywordSet,
    assignment: &LeaningAssignment,
) -> Result<CohortIdentification> {
    if keywords.is_empty() {
        return Err(Error::invalid("empty keyword set"));
    }
    let mut stage1: BTreeSet<String> = BTreeSet::new();
    for r in records {
        if r.tweet_type == TweetType::Retweet {
            continue;
        }
        if stage1.contains(&r.author_id) {
            continue;
        }
        if keywords.matches_record(r) {
            stage1.insert(r.author_id.clone());
        }
    }
    let mut id = CohortIdentification {
        cohort: BTreeSet::new(),
        stage1: stage1.clone(),
        stage1_left: 0,
        stage1_right: 0,
        stage1_undetermined: 0,
    };
    for account in &stage1 {
        match assignment.side_of(account) {
            Side::Left => id.stage1_left += 1,
            Side::Right => {
                id.stage1_right += 1;
                id.cohort.insert(account.clone());
            }
            Side::Undetermined => id.stage1_undetermined += 1,
        }
    }
    Ok(id)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PartitionCounts {
    /// Both influencer and influenced.
    pub both: u64,
    pub ir_only: u64,
    pub id_only: u64,
    pub neither: u64,
    /// Group members found inside the universe (excluded from the classes).
    pub group_in_universe: u64,
}

impl PartitionCounts {
    pub fn classified(&self) -> u64 {
        self.both + self.ir_only + self.id_only + self.neither
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct PartitionShares {
    pub both: f64,
    pub ir_only: f64,
    pub id_only: f64,
    pub neither: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionOutcome {
    pub counts: PartitionCounts,
    /// Mean counts over random same-size account groups, when requested.
    pub random_mean: Option<PartitionShares>,
}

fn partition_for(
    records: &[TweetRecord],
    group: &BTreeSet<String>,
    universe: &BTreeSet<String>,
) -> PartitionCounts {
    // influenced: universe accounts engaging group tweets
    // influencer: universe accounts whose tweets the group engaged
    let mut influenced: BTreeSet<&str> = BTreeSet::new();
    let mut influencer: BTreeSet<&str> = BTreeSet::new();
    for r in records {
        if !r.tweet_type.is_engagement() {
            continue;
        }
        let Some(parent_author) = r.parent_author_id.as_deref() else { continue };
        if group.contains(parent_author) && universe.contains(r.author_id.as_str()) {
            influenced.insert(r.author_id.as_str());
        }
        if group.contains(&r.author_id) && universe.contains(parent_author) {
            influencer.insert(parent_author);
        }
    }
    let mut counts = PartitionCounts::default();
    for account in universe {
        if group.contains(account) {
            counts.group_in_universe += 1;
            continue;
        }
        let is_id = influenced.contains(account.as_str());
        let is_ir = influencer.contains(account.as_str());
        match (is_ir, is_id) {
            (true, true) => counts.both += 1,
            (true, false) => counts.ir_only += 1,
            (false, true) => counts.id_only += 1,
            (false, false) => counts.neither += 1,
        }
    }
    counts
}

/// Partition the universe (minus the cohort) into IR&ID / IR-only /
/// ID-only / Neither by direct engagement with cohort tweets. With
/// `random_draws > 0` the same statistic is averaged over that many random
/// same-size account groups.
pub fn interaction_partition(
    records: &[TweetRecord],
    cohort: &BTreeSet<String>,
    universe: &BTreeSet<String>,
    random_draws: usize,
    seed: u64,
) -> Result<PartitionOutcome> {
    if universe.is_empty() {
        return Err(Error::invalid("empty universe"));
    }
    let counts = partition_for(records, cohort, universe);
    let random_mean = if random_draws > 0 {
        let pool: Vec<&String> = universe.iter().collect();
        let sample_size = counts.group_in_universe as usize;
        if sample_size == 0 || sample_size >= pool.len() {
            None
        } else {
            let mut rng = SplitMix64::new(seed);
            let mut acc = PartitionShares::default();
            for draw in 0..random_draws {
                let mut fork = rng.fork(draw as u64);
                let picked = fork.sample_indices(pool.len(), sample_size);
                let group: BTreeSet<String> =
                    picked.into_iter().map(|i| pool[i].clone()).collect();
                let c = partition_for(records, &group, universe);
                acc.both += c.both as f64;
                acc.ir_only += c.ir_only as f64;
                acc.id_only += c.id_only as f64;
                acc.neither += c.neither as f64;
            }
            let d = random_draws as f64;
            Some(PartitionShares {
                both: acc.both / d,
                ir_only: acc.ir_only / d,
                id_only: acc.id_only / d,
                neither: acc.neither / d,
            })
        }
    } else {
        None
    };
    Ok(PartitionOutcome { counts, random_mean })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InteractionKind {
    /// Accounts the cohort replied to.
    RepliedToByCohort,
    /// Accounts replying to cohort tweets.
    RepliesToCohort,
    /// Accounts retweeting cohort tweets.
    RetweetsOfCohort,
    /// Accounts quoting cohort tweets.
    QuotesOfCohort,
}

impl InteractionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InteractionKind::RepliedToByCohort => "replied-to-by-cohort",
            InteractionKind::RepliesToCohort => "replies-to-cohort",
            InteractionKind::RetweetsOfCohort => "retweets-of-cohort",
            InteractionKind::QuotesOfCohort => "quotes-of-cohort",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub kind: InteractionKind,
    pub n_accounts: u64,
    pub left_pct: f64,
    pub right_pct: f64,
    pub undetermined_pct: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SideEngagement {
    pub side: Side,
    pub n_accounts: u64,
    pub frac_replied_to_by_cohort: f64,
    pub frac_replies_to_cohort: f64,
    pub frac_retweets_of_cohort: f64,
    pub frac_quotes_of_cohort: f64,
    /// Share of this side never retweeting or quoting cohort tweets.
    pub frac_never_retweet_or_quote: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Breakdown {
    pub rows: Vec<BreakdownRow>,
    pub side_engagement: Vec<SideEngagement>,
}

/// Distinct non-cohort accounts per interaction kind, split by leaning
/// percentages, plus per-side engagement and never-endorsed shares.
pub fn engagement_breakdown(
    records: &[TweetRecord],
    cohort: &BTreeSet<String>,
    assignment: &LeaningAssignment,
) -> Breakdown {
    use InteractionKind::*;
    let mut sets: BTreeMap<&'static str, BTreeSet<&str>> = BTreeMap::new();
    for r in records {
        let Some(parent_author) = r.parent_author_id.as_deref() else { continue };
        // cohort engaging someone else's tweet
        if cohort.contains(&r.author_id)
            && !cohort.contains(parent_author)
            && r.tweet_type == TweetType::Reply
        {
            sets.entry(RepliedToByCohort.as_str()).or_default().insert(parent_author);
        }
        // someone engaging a cohort tweet
        if cohort.contains(parent_author) && !cohort.contains(&r.author_id) {
            let kind = match r.tweet_type {
                TweetType::Reply => Some(RepliesToCohort),
                TweetType::Retweet => Some(RetweetsOfCohort),
                TweetType::Quote => Some(QuotesOfCohort),
                _ => None,
            };
            if let Some(kind) = kind {
                sets.entry(kind.as_str()).or_default().insert(r.author_id.as_str());
            }
        }
    }

    let rows = [RepliedToByCohort, RepliesToCohort, RetweetsOfCohort, QuotesOfCohort]
        .into_iter()
        .map(|kind| {
            let empty = BTreeSet::new();
            let accounts = sets.get(kind.as_str()).unwrap_or(&empty);
            let n = accounts.len() as u64;
            let mut left = 0u64;
            let mut right = 0u64;
            let mut und = 0u64;
            for a in accounts {
                match assignment.side_of(a) {
                    Side::Left => left += 1,
                    Side::Right => right += 1,
                    Side::Undetermined => und += 1,
                }
            }
            let pct = |x: u64| if n > 0 { 100.0 * x as f64 / n as f64 } else { 0.0 };
            BreakdownRow {
                kind,
                n_accounts: n,
                left_pct: pct(left),
                right_pct: pct(right),
                undetermined_pct: pct(und),
            }
        })
        .collect();

    let side_engagement = [Side::Left, Side::Right, Side::Undetermined]
        .into_iter()
        .map(|side| {
            let members: Vec<&str> = assignment
                .labels
                .iter()
                .filter(|(a, &s)| s == side && !cohort.contains(*a))
                .map(|(a, _)| a.as_str())
                .collect();
            let n = members.len() as u64;
            let contains = |kind: InteractionKind, a: &str| {
                sets.get(kind.as_str()).map_or(false, |s| s.contains(a))
            };
            let frac = |kind: InteractionKind| {
                if n == 0 {
                    return 0.0;
                }
                members.iter().filter(|a| contains(kind, a)).count() as f64 / n as f64
            };
            let endorsed = if n == 0 {
                0.0
            } else {
                members
                    .iter()
                    .filter(|a| contains(RetweetsOfCohort, a) || contains(QuotesOfCohort, a))
                    .count() as f64
                    / n as f64
            };
            SideEngagement {
                side,
                n_accounts: n,
                frac_replied_to_by_cohort: frac(RepliedToByCohort),
                frac_replies_to_cohort: frac(RepliesToCohort),
                frac_retweets_of_cohort: frac(RetweetsOfCohort),
                frac_quotes_of_cohort: frac(QuotesOfCohort),
                frac_never_retweet_or_quote: 1.0 - endorsed,
            }
        })
        .collect();

    Breakdown { rows, side_engagement }
}

fn epoch_day(ts: i64) -> i64 {
    ts.div_euclid(86_400)
}

fn day_to_date(day: i64) -> String {
    NaiveDate::from_num_days_from_ce_opt((day + 719_163) as i32)
        .map(|d| d.format("%Y-%m-%d").to_string())
        .unwrap_or_else(|| day.to_string())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DailyActivity {
    pub date: String,
    pub day_index: i64,
    pub cohort_volume: u64,
    pub keyword_volume: u64,
    /// Fraction of cohort accounts created on this day.
    pub new_account_fraction: f64,
    /// Share of this day's cohort volume from accounts created after the
    /// intervention.
    pub new_account_volume_share: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EngagementChangeRow {
    pub kind: String,
    pub before_per_day: f64,
    pub after_per_day: f64,
    pub pct_change_volume: Option<f64>,
    /// Percent change of engagements per cohort tweet (None for the cohort
    /// volume row itself).
    pub pct_change_per_tweet: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CohortTimelines {
    pub daily: Vec<DailyActivity>,
    /// Share of total cohort volume from accounts created after the
    /// intervention.
    pub new_account_total_share: f64,
    pub engagement_change: Vec<EngagementChangeRow>,
}

/// Daily cohort activity, account-creation series, and the before/after
/// engagement-change table around `intervention_ts` (00:00 UTC of the
/// intervention day starts the "after" window).
pub fn cohort_timelines(
    records: &[TweetRecord],
    cohort: &BTreeSet<String>,
    keywords: &KeywordSet,
    intervention_ts: i64,
) -> Result<CohortTimelines> {
    if records.is_empty() {
        return Err(Error::invalid("no records"));
    }
    let min_day = records.iter().map(|r| epoch_day(r.created_at)).min().unwrap();
    let max_day = records.iter().map(|r| epoch_day(r.created_at)).max().unwrap();
    let intervention_day = epoch_day(intervention_ts);
    if intervention_day <= min_day || intervention_day > max_day {
        return Err(Error::invalid(format!(
            "intervention day {} outside the record span {}..{}",
            day_to_date(intervention_day),
            day_to_date(min_day),
            day_to_date(max_day)
        )));
    }

    let n_days = (max_day - min_day + 1) as usize;
    let mut cohort_volume = vec![0u64; n_days];
    let mut keyword_volume = vec![0u64; n_days];
    let mut new_account_volume = vec![0u64; n_days];
    let mut replies_to = vec![0u64; n_days];
    let mut retweets_of = vec![0u64; n_days];
    let mut quotes_of = vec![0u64; n_days];
    // account -> first-seen creation timestamp
    let mut created: BTreeMap<&str, i64> = BTreeMap::new();

    for r in records {
        let day = (epoch_day(r.created_at) - min_day) as usize;
        if cohort.contains(&r.author_id) {
            cohort_volume[day] += 1;
            if keywords.matches_record(r) {
                keyword_volume[day] += 1;
            }
            if r.author_created_at >= intervention_ts {
                new_account_volume[day] += 1;
            }
            created.entry(r.author_id.as_str()).or_insert(r.author_created_at);
        }
        if let Some(parent_author) = r.parent_author_id.as_deref() {
            if cohort.contains(parent_author) {
                match r.tweet_type {
                    TweetType::Reply => replies_to[day] += 1,
                    TweetType::Retweet => retweets_of[day] += 1,
                    TweetType::Quote => quotes_of[day] += 1,
                    TweetType::Original => {}
                }
            }
        }
    }

    let mut created_per_day: BTreeMap<i64, u64> = BTreeMap::new();
    for ts in created.values() {
        *created_per_day.entry(epoch_day(*ts)).or_default() += 1;
    }
    let n_cohort_seen = created.len().max(1) as f64;

    let daily: Vec<DailyActivity> = (0..n_days)
        .map(|i| {
            let day = min_day + i as i64;
            DailyActivity {
                date: day_to_date(day),
                day_index: i as i64,
                cohort_volume: cohort_volume[i],
                keyword_volume: keyword_volume[i],
                new_account_fraction: created_per_day.get(&day).copied().unwrap_or(0) as f64
                    / n_cohort_seen,
                new_account_volume_share: if cohort_volume[i] > 0 {
                    new_account_volume[i] as f64 / cohort_volume[i] as f64
                } else {
                    0.0
                },
            }
        })
        .collect();

    let total_volume: u64 = cohort_volume.iter().sum();
    let total_new: u64 = new_account_volume.iter().sum();
    let new_account_total_share =
        if total_volume > 0 { total_new as f64 / total_volume as f64 } else { 0.0 };

    let split = (intervention_day - min_day) as usize;
    let n_before = split as f64;
    let n_after = (n_days - split) as f64;
    let mean_of = |xs: &[u64]| -> (f64, f64) {
        let before: u64 = xs[..split].iter().sum();
        let after: u64 = xs[split..].iter().sum();
        (before as f64 / n_before, after as f64 / n_after)
    };
    let (cohort_before, cohort_after) = mean_of(&cohort_volume);

    let change_row = |kind: &str, xs: &[u64], per_tweet: bool| -> EngagementChangeRow {
        let (before, after) = mean_of(xs);
        let pct_change_volume =
            (before > 0.0).then(|| 100.0 * (after - before) / before);
        let pct_change_per_tweet = if per_tweet && before > 0.0 && cohort_before > 0.0 && cohort_after > 0.0
        {
            let ratio_before = before / cohort_before;
            let ratio_after = after / cohort_after;
            Some(100.0 * (ratio_after - ratio_before) / ratio_before)
        } else {
            None
        };
        EngagementChangeRow {
            kind: kind.to_string(),
            before_per_day: before,
            after_per_day: after,
            pct_change_volume,
            pct_change_per_tweet,
        }
    };
    let engagement_change = vec![
        change_row("cohort-volume", &cohort_volume, false),
        change_row("replies-to", &replies_to, true),
        change_row("retweets-of", &retweets_of, true),
        change_row("quotes-of", &quotes_of, true),
    ];

    Ok(CohortTimelines { daily, new_account_total_share, engagement_change })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keywords() -> KeywordSet {
        KeywordSet::from_entries(vec![
            KeywordEntry { pattern: "qanon".into(), mode: MatchMode::HashtagOnly },
            KeywordEntry { pattern: "wwg1wga".into(), mode: MatchMode::Anywhere },
        ])
        .unwrap()
    }

    fn record(
        id: &str,
        author: &str,
        at: i64,
        tweet_type: TweetType,
        parent_author: Option<&str>,
        text: &str,
        hashtags: Vec<&str>,
    ) -> TweetRecord {
        TweetRecord {
            tweet_id: id.to_string(),
            author_id: author.to_string(),
            created_at: at,
            tweet_type,
            parent_tweet_id: parent_author.map(|_| format!("p-{id}")),
            parent_author_id: parent_author.map(String::from),
            text: text.to_string(),
            urls: vec![],
            hashtags: hashtags.into_iter().map(String::from).collect(),
            author_created_at: 1,
            author_followers: 0,
            author_friends: 0,
        }
    }

    fn assignment(pairs: &[(&str, Side)]) -> LeaningAssignment {
        let mut a = LeaningAssignment::default();
        for (account, side) in pairs {
            a.labels.insert(account.to_string(), *side);
        }
        a
    }

    #[test]
    fn keyword_matching_modes() {
        let ks = keywords();
        // hashtag-only entry does not fire on body text
        let r = record("1", "a", 10, TweetType::Original, None, "talking about qanon", vec![]);
        assert!(!ks.matches_record(&r));
        let r = record("2", "a", 10, TweetType::Original, None, "", vec!["qanon"]);
        assert!(ks.matches_record(&r));
        // anywhere entry fires on whole tokens only
        let r = record("3", "a", 10, TweetType::Original, None, "WWG1WGA!", vec![]);
        assert!(ks.matches_record(&r));
        let r = record("4", "a", 10, TweetType::Original, None, "xwwg1wgax", vec![]);
        assert!(!ks.matches_record(&r));
        // anywhere entries also match the hashtag list
        let r = record("5", "a", 10, TweetType::Original, None, "", vec!["wwg1wga"]);
        assert!(ks.matches_record(&r));
    }

    #[test]
    fn two_stage_filter() {
        let ks = keywords();
        let records = vec![
            record("1", "righty", 10, TweetType::Original, None, "wwg1wga rally", vec![]),
            record("2", "lefty", 11, TweetType::Reply, Some("x"), "", vec!["qanon"]),
            record("3", "rtonly", 12, TweetType::Retweet, Some("righty"), "wwg1wga", vec![]),
            record("4", "silent", 13, TweetType::Original, None, "nothing here", vec![]),
        ];
        let assignment = assignment(&[
            ("righty", Side::Right),
            ("lefty", Side::Left),
            ("rtonly", Side::Right),
        ]);
        let id = identify_cohort(&records, &ks, &assignment).unwrap();
        // retweets are excluded from stage 1
        assert_eq!(id.stage1.len(), 2);
        assert!(id.stage1.contains("righty") && id.stage1.contains("lefty"));
        assert_eq!(id.stage1_left, 1);
        assert_eq!(id.stage1_right, 1);
        // stage 2 keeps only right-leaning accounts
        assert_eq!(id.cohort.len(), 1);
        assert!(id.cohort.contains("righty"));
        assert!(id.cohort.is_subset(&id.stage1));
    }

    #[test]
    fn partition_directions() {
        let cohort: BTreeSet<String> = ["q".to_string()].into_iter().collect();
        let records = vec![
            // b retweets cohort tweet -> ID-only
            record("1", "b", 10, TweetType::Retweet, Some("q"), "", vec![]),
            // cohort replies to c -> c is IR-only
            record("2", "q", 11, TweetType::Reply, Some("c"), "", vec![]),
            // d both ways
            record("3", "d", 12, TweetType::Quote, Some("q"), "", vec![]),
            record("4", "q", 13, TweetType::Retweet, Some("d"), "", vec![]),
        ];
        let universe: BTreeSet<String> =
            ["q", "b", "c", "d", "e"].iter().map(|s| s.to_string()).collect();
        let outcome = interaction_partition(&records, &cohort, &universe, 0, 1).unwrap();
        let c = outcome.counts;
        assert_eq!(c.id_only, 1, "b");
        assert_eq!(c.ir_only, 1, "c");
        assert_eq!(c.both, 1, "d");
        assert_eq!(c.neither, 1, "e");
        assert_eq!(c.group_in_universe, 1, "q");
        assert_eq!(c.classified() + c.group_in_universe, universe.len() as u64);
    }

    #[test]
    fn breakdown_rows_sum_to_hundred() {
        let cohort: BTreeSet<String> = ["q".to_string()].into_iter().collect();
        let records = vec![
            record("1", "r1", 10, TweetType::Retweet, Some("q"), "", vec![]),
            record("2", "r2", 11, TweetType::Retweet, Some("q"), "", vec![]),
            record("3", "l1", 12, TweetType::Reply, Some("q"), "", vec![]),
            record("4", "q", 13, TweetType::Reply, Some("l2"), "", vec![]),
        ];
        let assignment = assignment(&[
            ("r1", Side::Right),
            ("r2", Side::Right),
            ("l1", Side::Left),
            ("l2", Side::Left),
            ("q", Side::Right),
        ]);
        let breakdown = engagement_breakdown(&records, &cohort, &assignment);
        for row in &breakdown.rows {
            if row.n_accounts > 0 {
                let total = row.left_pct + row.right_pct + row.undetermined_pct;
                assert!((total - 100.0).abs() < 0.01, "{:?} sums to {total}", row.kind);
            }
        }
        let rt = breakdown
            .rows
            .iter()
            .find(|r| r.kind == InteractionKind::RetweetsOfCohort)
            .unwrap();
        assert_eq!(rt.right_pct, 100.0);
        assert_eq!(rt.left_pct, 0.0);
        // left block: l1, l2 (non-cohort), neither retweeted/quoted cohort
        let left = breakdown.side_engagement.iter().find(|s| s.side == Side::Left).unwrap();
        assert_eq!(left.n_accounts, 2);
        assert_eq!(left.frac_never_retweet_or_quote, 1.0);
        assert_eq!(left.frac_replies_to_cohort, 0.5);
    }

    #[test]
    fn timeline_volume_change_example() {
        // 2 tweets/day on days 0-1, 4/day on days 2-3; intervention at day 2
        let cohort: BTreeSet<String> = ["q".to_string()].into_iter().collect();
        let mut records = Vec::new();
        let mut id = 0;
        for day in 0..4i64 {
            let per_day = if day < 2 { 2 } else { 4 };
            for k in 0..per_day {
                records.push(record(
                    &format!("t{id}"),
                    "q",
                    day * 86_400 + k * 100 + 1,
                    TweetType::Original,
                    None,
                    "",
                    vec![],
                ));
                id += 1;
            }
        }
        let tl = cohort_timelines(&records, &cohort, &keywords(), 2 * 86_400).unwrap();
        let volume_row = &tl.engagement_change[0];
        assert_eq!(volume_row.before_per_day, 2.0);
        assert_eq!(volume_row.after_per_day, 4.0);
        assert_eq!(volume_row.pct_change_volume, Some(100.0));
        assert_eq!(tl.new_account_total_share, 0.0);
        assert_eq!(tl.daily.len(), 4);
    }

    #[test]
    fn engagement_per_tweet_change() {
        // cohort volume doubles; retweet volume stays flat -> per-tweet -50%
        let cohort: BTreeSet<String> = ["q".to_string()].into_iter().collect();
        let mut records = Vec::new();
        let mut id = 0;
        for day in 0..4i64 {
            let per_day = if day < 2 { 2 } else { 4 };
            for k in 0..per_day {
                records.push(record(
                    &format!("t{id}"),
                    "q",
                    day * 86_400 + k * 100 + 1,
                    TweetType::Original,
                    None,
                    "",
                    vec![],
                ));
                id += 1;
            }
            for k in 0..3 {
                records.push(record(
                    &format!("rt{id}-{k}"),
                    "fan",
                    day * 86_400 + k * 7 + 2,
                    TweetType::Retweet,
                    Some("q"),
                    "",
                    vec![],
                ));
                id += 1;
            }
        }
        let tl = cohort_timelines(&records, &cohort, &keywords(), 2 * 86_400).unwrap();
        let rt = tl.engagement_change.iter().find(|r| r.kind == "retweets-of").unwrap();
        assert_eq!(rt.pct_change_volume, Some(0.0));
        assert_eq!(rt.pct_change_per_tweet, Some(-50.0));
    }

    #[test]
    fn intervention_outside_span_errors() {
        let cohort: BTreeSet<String> = ["q".to_string()].into_iter().collect();
        let records =
            vec![record("1", "q", 86_400, TweetType::Original, None, "", vec![])];
        assert!(cohort_timelines(&records, &cohort, &keywords(), 50 * 86_400).is_err());
    }
}
