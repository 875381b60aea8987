use serde::Serialize;

use crate::graph::NetworkSnapshot;

/// Shares of communication events (edge-weight units) between influential
/// and ordinary users, in percent. The first letter of each field is the
/// origin (the user whose content was adopted, i.e. the edge target), the
/// second the diffuser (the acting user, i.e. the edge source).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowMatrix {
    pub ii: f64,
    pub io: f64,
    pub oi: f64,
    pub oo: f64,
    pub top_pct: f64,
    pub influential_users: usize,
    pub total_weight: u64,
}

impl FlowMatrix {
    pub fn total(&self) -> f64 {
        self.ii + self.io + self.oi + self.oo
    }
}

/// Membership flags for the top `ceil(top_pct% * n)` nodes by score. Ties
/// are broken by ascending user id.
pub fn influential_set(snapshot: &NetworkSnapshot, scores: &[f64], top_pct: f64) -> Vec<bool> {
    let n = snapshot.node_count();
    let k = ((top_pct * n as f64 / 100.0).ceil() as usize).min(n);
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&a, &b| {
        scores[b as usize]
            .total_cmp(&scores[a as usize])
            .then_with(|| snapshot.user_id(a).cmp(snapshot.user_id(b)))
    });
    let mut flags = vec![false; n];
    for &node in &order[..k] {
        flags[node as usize] = true;
    }
    flags
}

/// An empty edge set yields all-zero entries with `total_weight == 0`.
pub fn flow_matrix(snapshot: &NetworkSnapshot, scores: &[f64], top_pct: f64) -> FlowMatrix {
    let influential = influential_set(snapshot, scores, top_pct);
    let mut cells = [[0u64; 2]; 2];
    for e in snapshot.edges() {
        let origin = usize::from(!influential[e.target as usize]);
        let diffuser = usize::from(!influential[e.source as usize]);
        cells[origin][diffuser] += e.weight;
    }
    let total: u64 = cells.iter().flatten().sum();
    let pct = |c: u64| {
        if total == 0 {
            0.0
        } else {
            100.0 * c as f64 / total as f64
        }
    };
    FlowMatrix {
        ii: pct(cells[0][0]),
        io: pct(cells[0][1]),
        oi: pct(cells[1][0]),
        oo: pct(cells[1][1]),
        top_pct,
        influential_users: influential.iter().filter(|&&f| f).count(),
        total_weight: total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_equal_channels() {
        // i1, i2 influential; o1, o2 ordinary
        let s = NetworkSnapshot::from_parts(
            0,
            &["i1", "i2", "o1", "o2"],
            &[
                ("i1", "i2", 1, 0), // origin i2 -> diffuser i1: ii
                ("o1", "i1", 1, 0), // io
                ("i2", "o1", 1, 0), // oi
                ("o2", "o1", 1, 0), // oo
            ],
        );
        let scores = [0.4, 0.4, 0.1, 0.1];
        let f = flow_matrix(&s, &scores, 50.0);
        assert_eq!(f.influential_users, 2);
        for v in [f.ii, f.io, f.oi, f.oo] {
            assert!((v - 25.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_pct_is_all_ordinary() {
        let s = NetworkSnapshot::from_parts(0, &["a"], &[("a", "b", 3, 0), ("b", "c", 2, 0)]);
        let f = flow_matrix(&s, &[0.5, 0.3, 0.2], 0.0);
        assert_eq!(f.oo, 100.0);
        assert_eq!(f.influential_users, 0);
    }

    #[test]
    fn ties_break_by_user_id() {
        let s = NetworkSnapshot::from_parts::<&str>(0, &["zed", "amy", "bob"], &[]);
        let flags = influential_set(&s, &[0.3, 0.3, 0.3], 34.0);
        // ceil(0.34 * 3) = 2
        assert_eq!(flags, vec![false, true, true]);
    }

    #[test]
    fn weights_count_as_events() {
        let s = NetworkSnapshot::from_parts::<&str>(
            0,
            &["hub", "x"],
            &[("x", "hub", 3, 0), ("hub", "x", 1, 0)],
        );
        let f = flow_matrix(&s, &[0.9, 0.1], 50.0);
        assert!((f.io - 75.0).abs() < 1e-12);
        assert!((f.oi - 25.0).abs() < 1e-12);
        assert!((f.total() - 100.0).abs() < 1e-9);
    }
}
