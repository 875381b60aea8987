use std::collections::HashSet;

use proptest::prelude::*;

use crisis_netkit::graph::{build_daily_snapshots, read_snapshot_dir, NetworkSnapshot};
use crisis_netkit::influence::{alpha_mle, pagerank, PageRankParams};
use crisis_netkit::ingest::{day_partition, ActivityKind};
use crisis_netkit::report::{run_on_events, IngestSummary, ReportConfig, Section, StudyReport};
use crisis_netkit::stats::spearman;
use crisis_netkit::synth::{gen_power_law_samples, generate, Scenario, ScenarioConfig};

fn report_for(scenario: &Scenario, seed: u64) -> StudyReport {
    let dir = tempfile::tempdir().unwrap();
    let gaz = dir.path().join("gazetteer.csv");
    scenario
        .write_gazetteer(std::fs::File::create(&gaz).unwrap())
        .unwrap();
    let config = ReportConfig {
        gazetteer: Some(gaz),
        replicates: 100,
        seed,
        ..ReportConfig::default()
    };
    let n = scenario.events.len();
    let ingest = IngestSummary {
        lines: n,
        malformed: 0,
        parsed: n,
        kept: 0,
    };
    run_on_events(scenario.events.clone(), ingest, &config).unwrap()
}

#[test]
fn report_memory_matches_ledger_and_sections_agree() {
    let cfg = ScenarioConfig {
        n_users: 3000,
        repeat_prob: 0.3,
        seed: 5,
        ..ScenarioConfig::default()
    };
    let scenario = generate(&cfg).unwrap();
    let report = report_for(&scenario, 1);
    assert_eq!(report.days.len(), cfg.days);
    assert_eq!(report.ingest.kept, scenario.events.len());
    for (day, truth) in report.days.iter().zip(&scenario.ledger.new_edge_ratio) {
        let got = day.memory.ok().map(|m| m.new_edge_ratio);
        assert_eq!(got, *truth, "day {}", day.day);
        if let Section::Ok(inf) = &day.influence {
            assert_eq!(inf.nodes, day.graph.nodes);
        }
        if let Section::Ok(s) = &day.structures {
            assert!(s.classified_users <= day.graph.nodes);
        }
        if let Section::Ok(f) = &day.flows {
            assert_eq!(f.total_weight, day.graph.total_weight);
            assert!((f.total() - 100.0).abs() < 1e-9);
        }
    }
    let users: HashSet<&str> = scenario.events.iter().map(|e| e.user_id.as_str()).collect();
    let last = report.days.last().unwrap();
    assert!(last.graph.nodes <= users.len() + scenario.ledger.flow.influential_users);
}

#[test]
fn no_gravity_means_no_decay() {
    let mut rhos = Vec::new();
    for seed in 1..=8 {
        let cfg = ScenarioConfig {
            n_users: 10_000,
            n_locations: 8,
            gravity_exponent: 0.0,
            self_loop_prob: 0.0,
            seed,
            ..ScenarioConfig::default()
        };
        let report = report_for(&generate(&cfg).unwrap(), seed);
        let spatial = report.spatial.ok().expect("spatial section");
        let (xs, ys): (Vec<f64>, Vec<f64>) = spatial
            .decay
            .points()
            .filter_map(|b| b.mean.map(|m| (b.lo_m, m)))
            .unzip();
        rhos.push(spearman(&xs, &ys).expect("enough bins"));
    }
    let mean = rhos.iter().sum::<f64>() / rhos.len() as f64;
    assert!(mean.abs() < 0.3, "mean rho {mean} from {rhos:?}");
}

#[test]
fn broadcast_regime_concentrates_origins() {
    let cfg = ScenarioConfig {
        n_users: 20_000,
        influence_alpha: 1.25,
        seed: 21,
        ..ScenarioConfig::default()
    };
    let scenario = generate(&cfg).unwrap();
    let report = report_for(&scenario, 3);
    let flows = report.days.last().unwrap().flows.ok().expect("flows");
    let originated = flows.ii + flows.io;
    assert!(originated > 90.0, "top set originated {originated:.1}%");
}

#[test]
fn mle_matches_numeric_maximum() {
    let v = gen_power_law_samples(2.5, 1.0, 5000, 3).unwrap();
    let alpha = alpha_mle(&v, 1.0).unwrap();
    let log_sum: f64 = v.iter().map(|x| x.ln()).sum();
    let n = v.len() as f64;
    let ll = |a: f64| n * (a - 1.0).ln() - a * log_sum;
    let (mut lo, mut hi) = (1.0001, 10.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-10 {
        let (c, d) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if ll(c) > ll(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    assert!((alpha - (lo + hi) / 2.0).abs() < 1e-6);
}

#[test]
fn snapshot_files_roundtrip() {
    let scenario = generate(&ScenarioConfig {
        n_users: 500,
        days: 4,
        ..ScenarioConfig::default()
    })
    .unwrap();
    let start = ScenarioConfig::default().start;
    let buckets = day_partition(scenario.events, start).unwrap();
    let snaps = build_daily_snapshots(&buckets).snapshots();
    let dir = tempfile::tempdir().unwrap();
    for s in &snaps {
        s.write_to_dir(dir.path()).unwrap();
    }
    let back = read_snapshot_dir(dir.path()).unwrap();
    assert_eq!(back.len(), snaps.len());
    for (a, b) in snaps.iter().zip(&back) {
        assert_eq!(a.day(), b.day());
        assert_eq!(a.node_count(), b.node_count());
        let names = |s: &NetworkSnapshot| s.node_names().map(String::from).collect::<Vec<_>>();
        assert_eq!(names(a), names(b));
        assert_eq!(a.edges(), b.edges());
    }
}

#[test]
fn synthetic_events_are_well_formed() {
    let cfg = ScenarioConfig {
        n_users: 800,
        ..ScenarioConfig::default()
    };
    let scenario = generate(&cfg).unwrap();
    let ids: HashSet<&str> = scenario
        .events
        .iter()
        .map(|e| e.event_id.as_str())
        .collect();
    assert_eq!(ids.len(), scenario.events.len());
    let end = cfg.start + cfg.days as i64 * 86_400;
    for e in &scenario.events {
        e.validate(None).unwrap();
        assert!((cfg.start..end).contains(&e.timestamp));
        assert!(e.text.as_deref().unwrap().contains(&cfg.keyword));
        assert!(e.profile_location.is_some());
        if e.kind != ActivityKind::Post {
            assert!(ids.contains(e.target_event_id.as_deref().unwrap()));
        }
    }
    assert!(scenario
        .events
        .windows(2)
        .all(|w| w[0].timestamp <= w[1].timestamp));
    let ledger = serde_json::to_value(&scenario.ledger).unwrap();
    for key in [
        "seed",
        "new_edge_ratio",
        "flow",
        "delays",
        "attachment_strength",
    ] {
        assert!(ledger.get(key).is_some(), "ledger lacks {key}");
    }
    assert_eq!(
        scenario.ledger.delays.len(),
        cfg.n_locations * cfg.n_locations
    );
}

fn arb_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>, Vec<usize>)> {
    (1usize..15).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec((0..n, 0..n), 0..40),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
        )
    })
}

proptest! {
    #[test]
    fn pagerank_follows_relabeling((n, edges, perm) in arb_graph()) {
        let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let build = |label: &dyn Fn(usize) -> usize| {
            let nodes: Vec<String> = (0..n).map(|i| names[label(i)].clone()).collect();
            let e: Vec<(String, String, u64, u32)> = edges
                .iter()
                .map(|&(s, t)| (names[label(s)].clone(), names[label(t)].clone(), 1, 0))
                .collect();
            NetworkSnapshot::from_parts(0, &nodes, &e)
        };
        let a = build(&|i| i);
        let b = build(&|i| perm[i]);
        let params = PageRankParams::default();
        let ra = pagerank(&a, &params).unwrap();
        let rb = pagerank(&b, &params).unwrap();
        for i in 0..n {
            let x = ra.score_of(&a, &names[i]).unwrap();
            let y = rb.score_of(&b, &names[perm[i]]).unwrap();
            prop_assert!((x - y).abs() < 1e-12, "node {i}: {x} vs {y}");
        }
    }
}
