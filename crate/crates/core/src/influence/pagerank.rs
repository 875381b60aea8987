use crate::graph::NetworkSnapshot;

use super::InfluenceError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankParams {
    pub beta: f64,
    pub epsilon: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        Self {
            beta: 0.85,
            epsilon: 1e-8,
            max_iter: 200,
        }
    }
}

/// Stationary scores aligned with the snapshot's node ids.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceScores {
    pub scores: Vec<f64>,
    pub beta: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl InfluenceScores {
    pub fn score_of(&self, snapshot: &NetworkSnapshot, user_id: &str) -> Option<f64> {
        snapshot.node_of(user_id).map(|n| self.scores[n as usize])
    }
}

pub fn pagerank(
    snapshot: &NetworkSnapshot,
    params: &PageRankParams,
) -> Result<InfluenceScores, InfluenceError> {
    pagerank_observed(snapshot, params, |_, _, _| {})
}

/// Power iteration from the uniform vector. Edges are unweighted: each node
/// splits its mass evenly over its distinct out-neighbors, and nodes without
/// out-edges spread theirs over every node. `observer` sees each iterate with
/// its L1 change.
pub fn pagerank_observed<F>(
    snapshot: &NetworkSnapshot,
    params: &PageRankParams,
    mut observer: F,
) -> Result<InfluenceScores, InfluenceError>
where
    F: FnMut(usize, &[f64], f64),
{
    let n = snapshot.node_count();
    if n == 0 {
        return Err(InfluenceError::EmptyGraph);
    }
    let beta = params.beta;
    if !(0.8..=0.9).contains(&beta) {
        return Err(InfluenceError::InvalidBeta(beta));
    }

    let mut out_degree = vec![0u32; n];
    let mut in_offsets = vec![0usize; n + 1];
    for e in snapshot.edges() {
        out_degree[e.source as usize] += 1;
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

    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut share = vec![0.0; n];
    let mut residual = f64::INFINITY;

    for iteration in 1..=params.max_iter {
        let mut dangling = 0.0;
        for i in 0..n {
            if out_degree[i] == 0 {
                dangling += rank[i];
                share[i] = 0.0;
            } else {
                share[i] = rank[i] / out_degree[i] as f64;
            }
        }
        let base = (1.0 - beta) / nf + beta * dangling / nf;
        let pull = |j: usize| {
            let inflow: f64 = in_sources[in_offsets[j]..in_offsets[j + 1]]
                .iter()
                .map(|&s| share[s as usize])
                .sum();
            base + beta * inflow
        };
        fill_nodes(&mut next, pull);

        residual = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        observer(iteration, &rank, residual);
        if residual < params.epsilon {
            return Ok(InfluenceScores {
                scores: rank,
                beta,
                epsilon: params.epsilon,
                iterations: iteration,
                residual,
            });
        }
    }
    Err(InfluenceError::NonConvergence {
        iterations: params.max_iter,
        residual,
    })
}

#[cfg(feature = "parallel")]
fn fill_nodes<F: Fn(usize) -> f64 + Sync>(out: &mut [f64], f: F) {
    use rayon::prelude::*;
    out.par_iter_mut().enumerate().for_each(|(j, v)| *v = f(j));
}

#[cfg(not(feature = "parallel"))]
fn fill_nodes<F: Fn(usize) -> f64>(out: &mut [f64], f: F) {
    for (j, v) in out.iter_mut().enumerate() {
        *v = f(j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(nodes: &[&str], edges: &[(&str, &str)]) -> NetworkSnapshot {
        let e: Vec<_> = edges.iter().map(|&(s, t)| (s, t, 1, 0)).collect();
        NetworkSnapshot::from_parts(0, nodes, &e)
    }

    #[test]
    fn two_cycle_is_uniform() {
        let s = snap(&[], &[("a", "b"), ("b", "a")]);
        for beta in [0.8, 0.85, 0.9] {
            let r = pagerank(
                &s,
                &PageRankParams {
                    beta,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!((r.scores[0] - 0.5).abs() < 1e-12);
            assert!((r.scores[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn star_hub_wins() {
        let edges: Vec<(String, String)> = (0..10)
            .map(|i| (format!("leaf{i}"), "hub".to_string()))
            .collect();
        let e: Vec<_> = edges
            .iter()
            .map(|(s, t)| (s.as_str(), t.as_str(), 1, 0))
            .collect();
        let s = NetworkSnapshot::from_parts(0, &["hub"], &e);
        let r = pagerank(&s, &PageRankParams::default()).unwrap();
        let hub = s.node_of("hub").unwrap() as usize;
        assert!(r
            .scores
            .iter()
            .enumerate()
            .all(|(i, &v)| i == hub || v < r.scores[hub]));
    }

    #[test]
    fn weights_are_ignored() {
        let light = NetworkSnapshot::from_parts(0, &["c"], &[("a", "b", 1, 0), ("a", "c", 1, 0)]);
        let heavy = NetworkSnapshot::from_parts(0, &["c"], &[("a", "b", 9, 0), ("a", "c", 1, 0)]);
        let p = PageRankParams::default();
        assert_eq!(
            pagerank(&light, &p).unwrap().scores,
            pagerank(&heavy, &p).unwrap().scores
        );
    }

    #[test]
    fn isolated_nodes_keep_positive_mass() {
        let s = snap(&["iso"], &[("a", "b")]);
        let r = pagerank(&s, &PageRankParams::default()).unwrap();
        assert!(r.scores.iter().all(|&v| v > 0.0));
        assert!((r.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = snap(&[], &[("a", "b")]);
        assert_eq!(
            pagerank(
                &s,
                &PageRankParams {
                    beta: 0.5,
                    ..Default::default()
                }
            ),
            Err(InfluenceError::InvalidBeta(0.5))
        );
        let empty = NetworkSnapshot::from_parts::<&str>(0, &[], &[]);
        assert_eq!(
            pagerank(&empty, &PageRankParams::default()),
            Err(InfluenceError::EmptyGraph)
        );
        let stingy = PageRankParams {
            max_iter: 2,
            epsilon: 1e-15,
            ..Default::default()
        };
        let chain = snap(&[], &[("a", "b"), ("b", "c")]);
        assert!(matches!(
            pagerank(&chain, &stingy),
            Err(InfluenceError::NonConvergence { iterations: 2, .. })
        ));
    }
}
