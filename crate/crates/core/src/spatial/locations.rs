use std::collections::HashMap;

use serde::Serialize;

use super::geo::GeoPoint;
use super::geocode::normalize_location;
use crate::ingest::EventRecord;

pub const DEFAULT_TOP_K: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationStats {
    pub name: String,
    pub rank: usize,
    pub count: u64,
    #[serde(skip)]
    pub coordinates: Option<GeoPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopLocations {
    pub locations: Vec<LocationStats>,
    /// Fewer than `k` distinct locations were available.
    pub short: bool,
}

impl TopLocations {
    pub fn position(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.name == name)
    }

    pub fn index_map(&self) -> HashMap<&str, usize> {
        self.locations
            .iter()
            .enumerate()
            .map(|(i, l)| (l.name.as_str(), i))
            .collect()
    }
}

/// Ranks normalized profile locations by event count (ties lexicographic).
pub fn top_locations(events: &[EventRecord], k: usize) -> TopLocations {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for ev in events {
        if let Some(loc) = ev.profile_location.as_deref() {
            let norm = normalize_location(loc);
            if !norm.is_empty() {
                *counts.entry(norm).or_insert(0) += 1;
            }
        }
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let short = ranked.len() < k;
    ranked.truncate(k);
    TopLocations {
        locations: ranked
            .into_iter()
            .enumerate()
            .map(|(i, (name, count))| LocationStats {
                name,
                rank: i + 1,
                count,
                coordinates: None,
            })
            .collect(),
        short,
    }
}

/// Each user's most frequent normalized non-empty profile location; ties go
/// to the location the user showed first.
pub fn user_locations(events: &[EventRecord]) -> HashMap<String, String> {
    // user -> location -> (count, first position)
    let mut seen: HashMap<&str, HashMap<String, (u64, usize)>> = HashMap::new();
    for (pos, ev) in events.iter().enumerate() {
        let Some(loc) = ev.profile_location.as_deref() else {
            continue;
        };
        let norm = normalize_location(loc);
        if norm.is_empty() {
            continue;
        }
        let slot = seen
            .entry(ev.user_id.as_str())
            .or_default()
            .entry(norm)
            .or_insert((0, pos));
        slot.0 += 1;
    }
    seen.into_iter()
        .map(|(user, locs)| {
            let best = locs
                .into_iter()
                .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then_with(|| b.1 .1.cmp(&a.1 .1)))
                .map(|(l, _)| l)
                .expect("at least one location");
            (user.to_owned(), best)
        })
        .collect()
}
