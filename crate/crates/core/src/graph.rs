//! Cumulative daily communication networks.
//!
//! Edges point from the acting user to the user whose content was
//! retweeted, replied to or quoted. Each edge keeps its full weight history
//! as per-day deltas so any day's snapshot can be materialized from a single
//! store whose size is bounded by the final graph.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::ingest::DayBucket;

/// Interned user identifiers. Index order is first-appearance order.
#[derive(Debug, Default, Clone)]
pub struct UserIndex {
    names: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl UserIndex {
    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.lookup.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.lookup.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.lookup.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub source: u32,
    pub target: u32,
    pub weight: u64,
    pub first_seen: u32,
}

/// The cumulative network through `day`. Nodes are the ids
/// `0..node_count()` of the shared user index; edges are sorted by
/// `(source, target)`.
#[derive(Debug, Clone)]
pub struct NetworkSnapshot {
    day: u32,
    users: Arc<UserIndex>,
    node_count: usize,
    edges: Vec<Edge>,
}

impl NetworkSnapshot {
    /// Builds a snapshot from named nodes and `(source, target, weight,
    /// first_seen)` edges. Edge endpoints missing from `nodes` are added;
    /// duplicate edge keys are merged by summing weights.
    pub fn from_parts<S: AsRef<str>>(day: u32, nodes: &[S], edges: &[(S, S, u64, u32)]) -> Self {
        let mut users = UserIndex::default();
        for n in nodes {
            users.intern(n.as_ref());
        }
        let mut merged: BTreeMap<(u32, u32), (u64, u32)> = BTreeMap::new();
        for (s, t, w, f) in edges {
            let key = (users.intern(s.as_ref()), users.intern(t.as_ref()));
            let slot = merged.entry(key).or_insert((0, *f));
            slot.0 += *w;
            slot.1 = slot.1.min(*f);
        }
        let edges = merged
            .into_iter()
            .map(|((source, target), (weight, first_seen))| Edge {
                source,
                target,
                weight,
                first_seen,
            })
            .collect();
        let node_count = users.len();
        Self {
            day,
            users: Arc::new(users),
            node_count,
            edges,
        }
    }

    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn users(&self) -> &UserIndex {
        &self.users
    }

    pub fn user_id(&self, node: u32) -> &str {
        self.users.name(node)
    }

    pub fn node_of(&self, name: &str) -> Option<u32> {
        self.users
            .get(name)
            .filter(|&id| (id as usize) < self.node_count)
    }

    pub fn node_names(&self) -> impl Iterator<Item = &str> {
        (0..self.node_count as u32).map(|i| self.users.name(i))
    }

    pub fn has_edge(&self, source: u32, target: u32) -> bool {
        self.edges
            .binary_search_by(|e| (e.source, e.target).cmp(&(source, target)))
            .is_ok()
    }

    pub fn weight(&self, source: u32, target: u32) -> Option<u64> {
        self.edges
            .binary_search_by(|e| (e.source, e.target).cmp(&(source, target)))
            .ok()
            .map(|i| self.edges[i].weight)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Writes `<stem>.edges.tsv` and `<stem>.nodes.txt` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> io::Result<()> {
        let stem = format!("day_{:03}", self.day);
        let mut ew = BufWriter::new(fs::File::create(dir.join(format!("{stem}.edges.tsv")))?);
        for e in &self.edges {
            writeln!(
                ew,
                "{}\t{}\t{}\t{}",
                self.user_id(e.source),
                self.user_id(e.target),
                e.weight,
                e.first_seen
            )?;
        }
        ew.flush()?;
        let mut nw = BufWriter::new(fs::File::create(dir.join(format!("{stem}.nodes.txt")))?);
        for name in self.node_names() {
            writeln!(nw, "{name}")?;
        }
        nw.flush()
    }

    pub fn read_from_files(day: u32, edges_path: &Path, nodes_path: &Path) -> io::Result<Self> {
        let nodes: Vec<String> = io::BufReader::new(fs::File::open(nodes_path)?)
            .lines()
            .filter(|l| l.as_ref().map_or(true, |s| !s.is_empty()))
            .collect::<io::Result<_>>()?;
        let mut edges = Vec::new();
        for (lineno, line) in io::BufReader::new(fs::File::open(edges_path)?)
            .lines()
            .enumerate()
        {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let bad = || {
                io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!(
                        "{}:{}: malformed edge line",
                        edges_path.display(),
                        lineno + 1
                    ),
                )
            };
            let mut f = line.split('\t');
            let (s, t, w, d) = (f.next(), f.next(), f.next(), f.next());
            let (Some(s), Some(t), Some(w), Some(d)) = (s, t, w, d) else {
                return Err(bad());
            };
            let w: u64 = w.parse().map_err(|_| bad())?;
            let d: u32 = d.parse().map_err(|_| bad())?;
            if w == 0 {
                return Err(bad());
            }
            edges.push((s.to_owned(), t.to_owned(), w, d));
        }
        Ok(Self::from_parts(day, &nodes, &edges))
    }
}

/// Reads every `day_NNN.edges.tsv` / `day_NNN.nodes.txt` pair in `dir`,
/// ordered by day.
pub fn read_snapshot_dir(dir: &Path) -> io::Result<Vec<NetworkSnapshot>> {
    let mut days = Vec::new();
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name();
        let name = name.to_string_lossy();
        if let Some(day) = name
            .strip_prefix("day_")
            .and_then(|r| r.strip_suffix(".edges.tsv"))
            .and_then(|d| d.parse::<u32>().ok())
        {
            days.push(day);
        }
    }
    days.sort_unstable();
    days.into_iter()
        .map(|d| {
            NetworkSnapshot::read_from_files(
                d,
                &dir.join(format!("day_{d:03}.edges.tsv")),
                &dir.join(format!("day_{d:03}.nodes.txt")),
            )
        })
        .collect()
}

#[derive(Debug, Clone)]
struct EdgeHistory {
    source: u32,
    target: u32,
    /// `(day, cumulative weight)`, one entry per day the pair was active.
    deltas: Vec<(u32, u64)>,
}

impl EdgeHistory {
    fn weight_through(&self, day: u32) -> Option<u64> {
        let idx = self.deltas.partition_point(|&(d, _)| d <= day);
        (idx > 0).then(|| self.deltas[idx - 1].1)
    }
}

/// All cumulative daily snapshots of a study, stored once.
#[derive(Debug, Clone)]
pub struct SnapshotSeries {
    users: Arc<UserIndex>,
    node_counts: Vec<usize>,
    edges: Vec<EdgeHistory>,
}

impl SnapshotSeries {
    pub fn days(&self) -> usize {
        self.node_counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_counts.is_empty()
    }

    pub fn users(&self) -> &Arc<UserIndex> {
        &self.users
    }

    pub fn snapshot(&self, day: usize) -> NetworkSnapshot {
        let d = day as u32;
        let edges = self
            .edges
            .iter()
            .filter_map(|h| {
                h.weight_through(d).map(|weight| Edge {
                    source: h.source,
                    target: h.target,
                    weight,
                    first_seen: h.deltas[0].0,
                })
            })
            .collect();
        NetworkSnapshot {
            day: d,
            users: Arc::clone(&self.users),
            node_count: self.node_counts[day],
            edges,
        }
    }

    pub fn snapshots(&self) -> Vec<NetworkSnapshot> {
        (0..self.days()).map(|d| self.snapshot(d)).collect()
    }

    /// Same result as [`new_edge_ratio`] over all snapshots, read directly
    /// from the delta store.
    pub fn new_edge_ratios(&self) -> Vec<(u32, Option<f64>)> {
        let mut active = vec![0usize; self.days()];
        let mut fresh = vec![0usize; self.days()];
        for h in &self.edges {
            for (i, &(d, _)) in h.deltas.iter().enumerate() {
                active[d as usize] += 1;
                if i == 0 {
                    fresh[d as usize] += 1;
                }
            }
        }
        (0..self.days())
            .map(|d| {
                let r = (active[d] > 0).then(|| fresh[d] as f64 / active[d] as f64);
                (d as u32, r)
            })
            .collect()
    }
}

/// Builds cumulative snapshots from contiguous day buckets starting at day 0.
pub fn build_daily_snapshots(buckets: &[DayBucket]) -> SnapshotSeries {
    let mut users = UserIndex::default();
    let mut slots: HashMap<(u32, u32), usize> = HashMap::new();
    let mut edges: Vec<EdgeHistory> = Vec::new();
    let mut node_counts = Vec::with_capacity(buckets.len());

    for (day, bucket) in buckets.iter().enumerate() {
        debug_assert_eq!(bucket.day_index, day, "buckets must be contiguous from 0");
        let day = day as u32;
        for ev in &bucket.events {
            let actor = users.intern(&ev.user_id);
            let Some(target) = ev.target_user_id.as_deref() else {
                continue;
            };
            if !ev.kind.is_communication() {
                continue;
            }
            let target = users.intern(target);
            let slot = *slots.entry((actor, target)).or_insert_with(|| {
                edges.push(EdgeHistory {
                    source: actor,
                    target,
                    deltas: Vec::new(),
                });
                edges.len() - 1
            });
            let h = &mut edges[slot];
            match h.deltas.last_mut() {
                Some((d, w)) if *d == day => *w += 1,
                Some(&mut (_, w)) => h.deltas.push((day, w + 1)),
                None => h.deltas.push((day, 1)),
            }
        }
        node_counts.push(users.len());
    }
    edges.sort_unstable_by_key(|h| (h.source, h.target));
    SnapshotSeries {
        users: Arc::new(users),
        node_counts,
        edges,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightStats {
    pub edges: usize,
    pub median: f64,
    pub variance: f64,
    pub max: u64,
    pub histogram: BTreeMap<u64, u64>,
}

/// Median, population variance, max and histogram of edge weights; `None`
/// for a snapshot without edges.
pub fn edge_weight_distribution(snapshot: &NetworkSnapshot) -> Option<WeightStats> {
    let mut weights: Vec<u64> = snapshot.edges().iter().map(|e| e.weight).collect();
    if weights.is_empty() {
        return None;
    }
    weights.sort_unstable();
    let n = weights.len();
    let median = if n % 2 == 1 {
        weights[n / 2] as f64
    } else {
        (weights[n / 2 - 1] + weights[n / 2]) as f64 / 2.0
    };
    let mean = weights.iter().map(|&w| w as f64).sum::<f64>() / n as f64;
    let variance = weights
        .iter()
        .map(|&w| (w as f64 - mean).powi(2))
        .sum::<f64>()
        / n as f64;
    let mut histogram = BTreeMap::new();
    for &w in &weights {
        *histogram.entry(w).or_insert(0) += 1;
    }
    Some(WeightStats {
        edges: n,
        median,
        variance,
        max: weights[n - 1],
        histogram,
    })
}

/// Share of each day's distinct active ordered pairs that did not exist
/// through the previous day. A pair is active on day `d` when its cumulative
/// weight grew from `d - 1` to `d`. Days without any active pair yield `None`.
pub fn new_edge_ratio(snapshots: &[NetworkSnapshot]) -> Vec<(u32, Option<f64>)> {
    let mut out = Vec::with_capacity(snapshots.len());
    for (i, snap) in snapshots.iter().enumerate() {
        let prev: HashMap<(&str, &str), u64> = match i.checked_sub(1) {
            Some(p) => snapshots[p]
                .edges()
                .iter()
                .map(|e| {
                    (
                        (
                            snapshots[p].user_id(e.source),
                            snapshots[p].user_id(e.target),
                        ),
                        e.weight,
                    )
                })
                .collect(),
            None => HashMap::new(),
        };
        let (mut active, mut fresh) = (0usize, 0usize);
        for e in snap.edges() {
            let key = (snap.user_id(e.source), snap.user_id(e.target));
            match prev.get(&key) {
                None => {
                    active += 1;
                    fresh += 1;
                }
                Some(&w) if e.weight > w => active += 1,
                Some(_) => {}
            }
        }
        let ratio = (active > 0).then(|| fresh as f64 / active as f64);
        out.push((snap.day(), ratio));
    }
    out
}
