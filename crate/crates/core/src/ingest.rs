//! Parsing of archived tweet streams into normalized records.
//!
//! Input is UTF-8 line-delimited JSON, one record per line (schema in the
//! README). Malformed lines are counted and skipped; they never abort the
//! stream.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TweetType {
    Original,
    Reply,
    Retweet,
    Quote,
}

impl TweetType {
    pub fn is_engagement(self) -> bool {
        self != TweetType::Original
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TweetType::Original => "original",
            TweetType::Reply => "reply",
            TweetType::Retweet => "retweet",
            TweetType::Quote => "quote",
        }
    }
}

/// One normalized tweet or engagement.
///
/// Invariant: `tweet_type == Original` iff `parent_tweet_id` is absent.
/// Hashtags are lowercase with any leading `#` stripped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub author_id: String,
    /// UTC epoch seconds.
    pub created_at: i64,
    pub tweet_type: TweetType,
    pub parent_tweet_id: Option<String>,
    pub parent_author_id: Option<String>,
    pub text: String,
    pub urls: Vec<String>,
    pub hashtags: Vec<String>,
    /// UTC epoch seconds of account creation.
    pub author_created_at: i64,
    pub author_followers: u64,
    pub author_friends: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetTypeMarkers {
    #[serde(default)]
    pub is_retweet: bool,
    #[serde(default)]
    pub is_quote: bool,
    #[serde(default)]
    pub is_reply: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCounts {
    pub original: u64,
    pub reply: u64,
    pub retweet: u64,
    pub quote: u64,
}

impl TypeCounts {
    pub fn total(&self) -> u64 {
        self.original + self.reply + self.retweet + self.quote
    }

    fn bump(&mut self, t: TweetType) {
        match t {
            TweetType::Original => self.original += 1,
            TweetType::Reply => self.reply += 1,
            TweetType::Retweet => self.retweet += 1,
            TweetType::Quote => self.quote += 1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamStats {
    pub n_records: u64,
    /// Malformed lines dropped by the skip rule; accepted + skipped = lines.
    pub n_skipped: u64,
    pub n_accounts: u64,
    pub type_counts: TypeCounts,
    /// `[min created_at, max created_at]` over accepted records.
    pub time_span: Option<(i64, i64)>,
}

/// Raw line as it appears in the archived stream.
#[derive(Deserialize)]
struct RawRecord {
    tweet_id: Option<String>,
    author_id: Option<String>,
    created_at: Option<i64>,
    #[serde(default)]
    tweet_type_markers: TweetTypeMarkers,
    #[serde(default)]
    parent_tweet_id: Option<String>,
    #[serde(default)]
    parent_author_id: Option<String>,
    #[serde(default)]
    text: String,
    #[serde(default)]
    urls: Vec<String>,
    #[serde(default)]
    hashtags: Vec<String>,
    #[serde(default)]
    author_created_at: i64,
    #[serde(default)]
    author_followers: u64,
    #[serde(default)]
    author_friends: u64,
}

/// Map the reply/retweet/quote markers to a single type. When markers
/// co-occur the precedence is Retweet > Quote > Reply.
pub fn classify_tweet_type(markers: &TweetTypeMarkers) -> TweetType {
    if markers.is_retweet {
        TweetType::Retweet
    } else if markers.is_quote {
        TweetType::Quote
    } else if markers.is_reply {
        TweetType::Reply
    } else {
        TweetType::Original
    }
}

pub fn normalize_hashtag(tag: &str) -> String {
    tag.trim().trim_start_matches('#').to_lowercase()
}

fn accept(raw: RawRecord) -> Option<TweetRecord> {
    let tweet_id = raw.tweet_id?;
    let author_id = raw.author_id?;
    let created_at = raw.created_at?;
    if tweet_id.is_empty() || author_id.is_empty() || created_at <= 0 {
        return None;
    }
    let tweet_type = classify_tweet_type(&raw.tweet_type_markers);
    let parent_tweet_id = raw.parent_tweet_id.filter(|p| !p.is_empty());
    // Engagements need a parent link; originals must not carry one.
    if tweet_type.is_engagement() != parent_tweet_id.is_some() {
        return None;
    }
    let parent_author_id = if tweet_type.is_engagement() {
        raw.parent_author_id.filter(|p| !p.is_empty())
    } else {
        None
    };
    let hashtags = raw
        .hashtags
        .iter()
        .map(|h| normalize_hashtag(h))
        .filter(|h| !h.is_empty())
        .collect();
    Some(TweetRecord {
        tweet_id,
        author_id,
        created_at,
        tweet_type,
        parent_tweet_id,
        parent_author_id,
        text: raw.text,
        urls: raw.urls,
        hashtags,
        author_created_at: raw.author_created_at,
        author_followers: raw.author_followers,
        author_friends: raw.author_friends,
    })
}

/// Parse a line-delimited record stream in file order.
///
/// Unreadable input is a fatal I/O error; lines that fail to parse or miss a
/// required field are skipped and counted in `StreamStats::n_skipped`.
pub fn parse_tweet_stream<R: BufRead>(reader: R) -> Result<(Vec<TweetRecord>, StreamStats)> {
    let mut records = Vec::new();
    let mut stats = StreamStats::default();
    let mut accounts = std::collections::HashSet::new();

    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RawRecord>(&line).ok().and_then(accept);
        match parsed {
            Some(rec) => {
                stats.n_records += 1;
                stats.type_counts.bump(rec.tweet_type);
                accounts.insert(rec.author_id.clone());
                stats.time_span = Some(match stats.time_span {
                    None => (rec.created_at, rec.created_at),
                    Some((lo, hi)) => (lo.min(rec.created_at), hi.max(rec.created_at)),
                });
                records.push(rec);
            }
            None => stats.n_skipped += 1,
        }
    }
    stats.n_accounts = accounts.len() as u64;
    Ok((records, stats))
}

/// Serialize records back into the archived input schema, one JSON object
/// per line. `parse_tweet_stream` over the output reproduces the records.
pub fn write_tweet_stream<W: Write>(records: &[TweetRecord], mut out: W) -> Result<()> {
    #[derive(Serialize)]
    struct RawOut<'a> {
        tweet_id: &'a str,
        author_id: &'a str,
        created_at: i64,
        tweet_type_markers: TweetTypeMarkers,
        #[serde(skip_serializing_if = "Option::is_none")]
        parent_tweet_id: Option<&'a str>,
        #[serde(skip_serializing_if = "Option::is_none")]
        parent_author_id: Option<&'a str>,
        text: &'a str,
        urls: &'a [String],
        hashtags: &'a [String],
        author_created_at: i64,
        author_followers: u64,
        author_friends: u64,
    }
    for rec in records {
        let markers = TweetTypeMarkers {
            is_retweet: rec.tweet_type == TweetType::Retweet,
            is_quote: rec.tweet_type == TweetType::Quote,
            is_reply: rec.tweet_type == TweetType::Reply,
        };
        let raw = RawOut {
            tweet_id: &rec.tweet_id,
            author_id: &rec.author_id,
            created_at: rec.created_at,
            tweet_type_markers: markers,
            parent_tweet_id: rec.parent_tweet_id.as_deref(),
            parent_author_id: rec.parent_author_id.as_deref(),
            text: &rec.text,
            urls: &rec.urls,
            hashtags: &rec.hashtags,
            author_created_at: rec.author_created_at,
            author_followers: rec.author_followers,
            author_friends: rec.author_friends,
        };
        serde_json::to_writer(&mut out, &raw).map_err(|e| crate::error::Error::parse(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn line(id: &str, t: &str, parent: Option<&str>) -> String {
        let markers = match t {
            "retweet" => r#"{"is_retweet":true}"#,
            "quote" => r#"{"is_quote":true}"#,
            "reply" => r#"{"is_reply":true}"#,
            _ => "{}",
        };
        match parent {
            Some(p) => format!(
                r#"{{"tweet_id":"{id}","author_id":"u{id}","created_at":100,"tweet_type_markers":{markers},"parent_tweet_id":"{p}"}}"#
            ),
            None => format!(
                r#"{{"tweet_id":"{id}","author_id":"u{id}","created_at":100,"tweet_type_markers":{markers}}}"#
            ),
        }
    }

    #[test]
    fn empty_stream() {
        let (records, stats) = parse_tweet_stream(Cursor::new("")).unwrap();
        assert!(records.is_empty());
        assert_eq!(stats.n_records, 0);
        assert_eq!(stats.time_span, None);
    }

    #[test]
    fn truncated_line_skipped() {
        let input = format!(
            "{}\n{}\n{}\n{}",
            line("1", "original", None),
            line("2", "retweet", Some("1")),
            line("3", "reply", Some("1")),
            r#"{"tweet_id":"4","author_id":"u4","crea"#
        );
        let (records, stats) = parse_tweet_stream(Cursor::new(input)).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(stats.n_skipped, 1);
        assert_eq!(stats.n_records + stats.n_skipped, 4);
    }

    #[test]
    fn classify_precedence() {
        let all = TweetTypeMarkers { is_retweet: true, is_quote: true, is_reply: true };
        assert_eq!(classify_tweet_type(&all), TweetType::Retweet);
        let qr = TweetTypeMarkers { is_retweet: false, is_quote: true, is_reply: true };
        assert_eq!(classify_tweet_type(&qr), TweetType::Quote);
        let none = TweetTypeMarkers::default();
        assert_eq!(classify_tweet_type(&none), TweetType::Original);
    }

    #[test]
    fn marker_parent_consistency_enforced() {
        // Retweet marker without a parent link, and a parent link without a
        // marker, are both malformed.
        let input = format!(
            "{}\n{}",
            line("1", "retweet", None),
            line("2", "original", Some("1"))
        );
        let (records, stats) = parse_tweet_stream(Cursor::new(input)).unwrap();
        assert!(records.is_empty());
        assert_eq!(stats.n_skipped, 2);
    }

    #[test]
    fn hashtags_normalized() {
        let input = r##"{"tweet_id":"1","author_id":"a","created_at":5,"hashtags":["#QAnon","Tag "]}"##;
        let (records, _) = parse_tweet_stream(Cursor::new(input)).unwrap();
        assert_eq!(records[0].hashtags, vec!["qanon", "tag"]);
    }

    #[test]
    fn stats_account_and_span() {
        let input = format!(
            "{}\n{}\n{}",
            r#"{"tweet_id":"1","author_id":"a","created_at":50}"#,
            r#"{"tweet_id":"2","author_id":"b","created_at":10}"#,
            r#"{"tweet_id":"3","author_id":"a","created_at":99}"#
        );
        let (_, stats) = parse_tweet_stream(Cursor::new(input)).unwrap();
        assert_eq!(stats.n_accounts, 2);
        assert_eq!(stats.time_span, Some((10, 99)));
        assert_eq!(stats.type_counts.total(), stats.n_records);
    }

    #[test]
    fn round_trip_preserves_records() {
        let input = format!(
            "{}\n{}\n{}",
            line("1", "original", None),
            line("2", "quote", Some("1")),
            line("3", "reply", Some("2")),
        );
        let (records, _) = parse_tweet_stream(Cursor::new(&input)).unwrap();
        let mut buf = Vec::new();
        write_tweet_stream(&records, &mut buf).unwrap();
        let (again, stats) = parse_tweet_stream(Cursor::new(buf)).unwrap();
        assert_eq!(records, again);
        assert_eq!(stats.n_skipped, 0);
    }
}
