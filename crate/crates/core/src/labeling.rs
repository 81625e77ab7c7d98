//! Source-list loading and URL-based cascade labeling.
//!
//! Lists are plain text, one domain per line, `#` comments allowed. A
//! cascade is labeled from the registered domains of its root tweet's URLs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cascades::{Cascade, CascadeLabel};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reliability {
    Reliable,
    Unreliable,
}

/// Map from registered domain to reliability class. Domains are stored
/// lowercase without scheme or path; a domain may appear on one side only.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SourceList {
    entries: BTreeMap<String, Reliability>,
}

impl SourceList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn counts(&self) -> (usize, usize) {
        let reliable = self
            .entries
            .values()
            .filter(|r| **r == Reliability::Reliable)
            .count();
        (reliable, self.entries.len() - reliable)
    }

    pub fn insert(&mut self, domain: &str, class: Reliability) -> Result<()> {
        let norm = normalize_domain(domain)
            .ok_or_else(|| Error::parse(format!("not a domain: {domain:?}")))?;
        if let Some(prev) = self.entries.get(&norm) {
            if *prev != class {
                return Err(Error::SourceConflict(vec![norm]));
            }
        }
        self.entries.insert(norm, class);
        Ok(())
    }

    /// Classify a registered domain by longest-suffix match, so that
    /// `sub.example.com` matches a listed `example.com`.
    pub fn classify_domain(&self, domain: &str) -> Option<Reliability> {
        let norm = normalize_domain(domain)?;
        longest_suffix_match(&self.entries, &norm).copied()
    }

    pub fn classify_url(&self, url: &str) -> Option<Reliability> {
        self.classify_domain(&extract_domain(url)?)
    }
}

/// Longest-suffix lookup shared by source lists and outlet tables.
pub(crate) fn longest_suffix_match<'a, V>(
    entries: &'a BTreeMap<String, V>,
    domain: &str,
) -> Option<&'a V> {
    let mut candidate = domain;
    loop {
        if let Some(v) = entries.get(candidate) {
            return Some(v);
        }
        match candidate.find('.') {
            Some(dot) => candidate = &candidate[dot + 1..],
            None => return None,
        }
    }
}

/// Lowercase a host name and strip scheme, userinfo, port, path, query,
/// fragment, and trailing dots. Returns None when nothing host-like remains.
pub fn normalize_domain(raw: &str) -> Option<String> {
    let mut s = raw.trim();
    if let Some(pos) = s.find("://") {
        s = &s[pos + 3..];
    }
    for sep in ['/', '?', '#'] {
        if let Some(pos) = s.find(sep) {
            s = &s[..pos];
        }
    }
    if let Some(pos) = s.rfind('@') {
        s = &s[pos + 1..];
    }
    if let Some(pos) = s.find(':') {
        s = &s[..pos];
    }
    let s = s.trim_matches('.').to_lowercase();
    if s.is_empty() || !s.contains('.') && s != "localhost" {
        return None;
    }
    Some(s)
}

/// Registered-domain part of a URL, i.e. its normalized host.
pub fn extract_domain(url: &str) -> Option<String> {
    normalize_domain(url)
}

fn read_domain_file(path: &Path, class: Reliability, into: &mut SourceList) -> Result<Vec<String>> {
    let reader = BufReader::new(File::open(path)?);
    let mut conflicts = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let entry = line.split('#').next().unwrap_or("").trim();
        if entry.is_empty() {
            continue;
        }
        match into.insert(entry, class) {
            Ok(()) => {}
            Err(Error::SourceConflict(mut d)) => conflicts.append(&mut d),
            Err(e) => return Err(e),
        }
    }
    Ok(conflicts)
}

/// Load and merge the reliable and unreliable domain lists. A domain listed
/// on both sides is a fatal conflict; all offenders are reported.
pub fn load_source_lists(reliable: &Path, unreliable: &Path) -> Result<SourceList> {
    let mut list = SourceList::default();
    let mut conflicts = read_domain_file(reliable, Reliability::Reliable, &mut list)?;
    conflicts.extend(read_domain_file(unreliable, Reliability::Unreliable, &mut list)?);
    if !conflicts.is_empty() {
        conflicts.sort();
        conflicts.dedup();
        return Err(Error::SourceConflict(conflicts));
    }
    Ok(list)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub reliable: u64,
    pub unreliable: u64,
    pub unlabeled: u64,
}

/// Label a cascade from its root tweet's URLs: any unreliable match wins,
/// otherwise any reliable match, otherwise unlabeled.
pub fn label_for_urls(urls: &[String], sources: &SourceList) -> CascadeLabel {
    let mut label = CascadeLabel::Unlabeled;
    for url in urls {
        match sources.classify_url(url) {
            Some(Reliability::Unreliable) => return CascadeLabel::Unreliable,
            Some(Reliability::Reliable) => label = CascadeLabel::Reliable,
            None => {}
        }
    }
    label
}

/// Assign ground-truth labels to cascades in place and tally the outcome.
pub fn label_cascades(cascades: &mut [Cascade], sources: &SourceList) -> LabelCounts {
    let mut counts = LabelCounts::default();
    for cascade in cascades.iter_mut() {
        cascade.label = label_for_urls(&cascade.events[0].urls, sources);
        match cascade.label {
            CascadeLabel::Reliable => counts.reliable += 1,
            CascadeLabel::Unreliable => counts.unreliable += 1,
            CascadeLabel::Unlabeled => counts.unlabeled += 1,
        }
    }
    counts
}
