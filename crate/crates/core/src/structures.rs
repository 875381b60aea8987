//! Communication-structure classes of information-source users.
//!
//! A user is classified when it has an inbound edge or a self-loop. Three
//! existential predicates over the (unweighted) edge set decide the class:
//!
//! * self-loop: the edge `(u, u)` exists;
//! * reciprocal: some `v != u` has both `(u, v)` and `(v, u)`;
//! * converging: some `v != u` has `(v, u)` but not `(u, v)`.

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::graph::NetworkSnapshot;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StructureError {
    #[error("user `{0}` is not in the snapshot")]
    UnknownUser(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StructureClass {
    Con,
    CS,
    Sel,
    SR,
    Rec,
    RC,
    CSR,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Predicates {
    pub converging: bool,
    pub self_loop: bool,
    pub reciprocal: bool,
}

impl StructureClass {
    pub const ALL: [StructureClass; 7] = [
        StructureClass::Con,
        StructureClass::CS,
        StructureClass::Sel,
        StructureClass::SR,
        StructureClass::Rec,
        StructureClass::RC,
        StructureClass::CSR,
    ];

    pub fn from_predicates(p: Predicates) -> Option<Self> {
        use StructureClass::*;
        match (p.converging, p.self_loop, p.reciprocal) {
            (false, false, false) => None,
            (true, false, false) => Some(Con),
            (true, true, false) => Some(CS),
            (false, true, false) => Some(Sel),
            (false, true, true) => Some(SR),
            (false, false, true) => Some(Rec),
            (true, false, true) => Some(RC),
            (true, true, true) => Some(CSR),
        }
    }

    pub fn predicates(self) -> Predicates {
        use StructureClass::*;
        let (converging, self_loop, reciprocal) = match self {
            Con => (true, false, false),
            CS => (true, true, false),
            Sel => (false, true, false),
            SR => (false, true, true),
            Rec => (false, false, true),
            RC => (true, false, true),
            CSR => (true, true, true),
        };
        Predicates {
            converging,
            self_loop,
            reciprocal,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StructureClass::Con => "Con",
            StructureClass::CS => "C_S",
            StructureClass::Sel => "Sel",
            StructureClass::SR => "S_R",
            StructureClass::Rec => "Rec",
            StructureClass::RC => "R_C",
            StructureClass::CSR => "CSR",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for StructureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// In-neighbor lists for every node, used to evaluate predicates without
/// scanning the edge list per user.
pub struct StructureIndex<'a> {
    snapshot: &'a NetworkSnapshot,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
}

impl<'a> StructureIndex<'a> {
    pub fn new(snapshot: &'a NetworkSnapshot) -> Self {
        let n = snapshot.node_count();
        let mut in_offsets = vec![0usize; n + 1];
        for e in snapshot.edges() {
            in_offsets[e.target as usize + 1] += 1;
        }
        for i in 0..n {
            in_offsets[i + 1] += in_offsets[i];
        }
        let mut fill = in_offsets.clone();
        let mut in_sources = vec![0u32; snapshot.edges().len()];
        for e in snapshot.edges() {
            let slot = &mut fill[e.target as usize];
            in_sources[*slot] = e.source;
            *slot += 1;
        }
        Self {
            snapshot,
            in_offsets,
            in_sources,
        }
    }

    pub fn predicates(&self, node: u32) -> Predicates {
        let mut p = Predicates {
            self_loop: self.snapshot.has_edge(node, node),
            ..Predicates::default()
        };
        let (lo, hi) = (
            self.in_offsets[node as usize],
            self.in_offsets[node as usize + 1],
        );
        for &v in &self.in_sources[lo..hi] {
            if v == node {
                continue;
            }
            if self.snapshot.has_edge(node, v) {
                p.reciprocal = true;
            } else {
                p.converging = true;
            }
            if p.reciprocal && p.converging {
                break;
            }
        }
        p
    }

    pub fn classify(&self, node: u32) -> Option<StructureClass> {
        StructureClass::from_predicates(self.predicates(node))
    }
}

/// Class of one user, or `None` when the user is not an information source
/// (no inbound edge and no self-loop).
pub fn classify_user(
    snapshot: &NetworkSnapshot,
    user_id: &str,
) -> Result<Option<StructureClass>, StructureError> {
    let node = snapshot
        .node_of(user_id)
        .ok_or_else(|| StructureError::UnknownUser(user_id.to_owned()))?;
    Ok(StructureIndex::new(snapshot).classify(node))
}

/// Classes for every node, indexed by node id.
pub fn classify_all(snapshot: &NetworkSnapshot) -> Vec<Option<StructureClass>> {
    let index = StructureIndex::new(snapshot);
    (0..snapshot.node_count() as u32)
        .map(|n| index.classify(n))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureProportions {
    pub counts: [usize; 7],
    pub classified_users: usize,
}

impl StructureProportions {
    pub fn ratio(&self, class: StructureClass) -> f64 {
        self.counts[class.index()] as f64 / self.classified_users as f64
    }
}

impl Serialize for StructureProportions {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(8))?;
        for class in StructureClass::ALL {
            map.serialize_entry(class.label(), &self.ratio(class))?;
        }
        map.serialize_entry("classified_users", &self.classified_users)?;
        map.end()
    }
}

/// Class shares over classified users; `None` when nobody is classifiable.
pub fn structure_proportions(snapshot: &NetworkSnapshot) -> Option<StructureProportions> {
    let mut counts = [0usize; 7];
    for class in classify_all(snapshot).into_iter().flatten() {
        counts[class.index()] += 1;
    }
    let classified_users = counts.iter().sum();
    (classified_users > 0).then_some(StructureProportions {
        counts,
        classified_users,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(edges: &[(&str, &str)]) -> NetworkSnapshot {
        let e: Vec<_> = edges.iter().map(|&(s, t)| (s, t, 1, 0)).collect();
        NetworkSnapshot::from_parts(0, &[], &e)
    }

    #[test]
    fn converging_only() {
        let s = snap(&[("a", "u"), ("b", "u")]);
        assert_eq!(classify_user(&s, "u"), Ok(Some(StructureClass::Con)));
        assert_eq!(classify_user(&s, "a"), Ok(None));
    }

    #[test]
    fn self_loop_only() {
        let s = snap(&[("u", "u")]);
        assert_eq!(classify_user(&s, "u"), Ok(Some(StructureClass::Sel)));
    }

    #[test]
    fn all_three() {
        let s = snap(&[("a", "u"), ("u", "a"), ("b", "u"), ("u", "u")]);
        assert_eq!(classify_user(&s, "u"), Ok(Some(StructureClass::CSR)));
        // a: inbound from u, reciprocated
        assert_eq!(classify_user(&s, "a"), Ok(Some(StructureClass::Rec)));
    }

    #[test]
    fn unknown_user() {
        let s = snap(&[("a", "b")]);
        assert_eq!(
            classify_user(&s, "zz"),
            Err(StructureError::UnknownUser("zz".into()))
        );
    }

    #[test]
    fn one_user_per_class() {
        let s = snap(&[
            ("x1", "con"),
            ("x2", "cs"),
            ("cs", "cs"),
            ("sel", "sel"),
            ("sr", "sr"),
            ("sr", "y1"),
            ("y1", "sr"),
            ("rec", "y2"),
            ("y2", "rec"),
            ("x3", "rc"),
            ("rc", "y3"),
            ("y3", "rc"),
            ("x4", "csr"),
            ("csr", "csr"),
            ("csr", "y4"),
            ("y4", "csr"),
        ]);
        let expect = [
            ("con", StructureClass::Con),
            ("cs", StructureClass::CS),
            ("sel", StructureClass::Sel),
            ("sr", StructureClass::SR),
            ("rec", StructureClass::Rec),
            ("rc", StructureClass::RC),
            ("csr", StructureClass::CSR),
        ];
        for (u, c) in expect {
            assert_eq!(classify_user(&s, u), Ok(Some(c)), "{u}");
        }
        // the y-helpers are reciprocal partners and are classified too
        let p = structure_proportions(&s).unwrap();
        assert_eq!(p.classified_users, 11);
        let total: f64 = StructureClass::ALL.iter().map(|&c| p.ratio(c)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_result_without_sources() {
        let s = NetworkSnapshot::from_parts::<&str>(0, &["a", "b"], &[]);
        assert!(structure_proportions(&s).is_none());
    }

    #[test]
    fn label_predicate_bijection() {
        for c in StructureClass::ALL {
            assert_eq!(StructureClass::from_predicates(c.predicates()), Some(c));
        }
        let labels: std::collections::HashSet<_> =
            StructureClass::ALL.iter().map(|c| c.label()).collect();
        assert_eq!(labels.len(), 7);
    }

    #[test]
    fn reverse_edge_revokes_converging_only() {
        let before = snap(&[("v", "u")]);
        assert_eq!(classify_user(&before, "u"), Ok(Some(StructureClass::Con)));
        let after = snap(&[("v", "u"), ("u", "v")]);
        assert_eq!(classify_user(&after, "u"), Ok(Some(StructureClass::Rec)));
    }

    #[test]
    fn serializes_labels() {
        let s = snap(&[("a", "u")]);
        let json = serde_json::to_value(structure_proportions(&s).unwrap()).unwrap();
        assert_eq!(json["Con"], 1.0);
        assert_eq!(json["C_S"], 0.0);
        assert_eq!(json["classified_users"], 1);
    }
}
