use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn netkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crisis-netkit"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn synth_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let synth_cfg = dir.path().join("scenario.conf");
    fs::write(&synth_cfg, "n_users = 3000\ndays = 4\nseed = 3\n").unwrap();
    let events = dir.path().join("events.jsonl");
    let out = netkit(&["synth", "--config", arg(&synth_cfg), "--out", arg(&events)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("events.ledger.json").exists());
    assert!(dir.path().join("events.gazetteer.csv").exists());

    let report_cfg = dir.path().join("report.conf");
    fs::write(
        &report_cfg,
        "# relative to this file\ngazetteer = events.gazetteer.csv\nreplicates = 100\nkeywords = Hurricane\n",
    )
    .unwrap();
    let report = dir.path().join("report.json");
    let out = netkit(&[
        "report",
        "--events",
        arg(&events),
        "--config",
        arg(&report_cfg),
        "--out",
        arg(&report),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["days"].as_array().unwrap().len(), 4);
    assert_eq!(json["spatial"]["status"], "ok");
}

#[test]
fn missing_locations_give_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.jsonl");
    fs::write(
        &events,
        r#"{"event_id":"1","user_id":"a","kind":"post","ts":1503619200,"text":"storm"}
{"event_id":"2","user_id":"b","kind":"retweet","target_user_id":"a","target_event_id":"1","ts":1503619300}
{"event_id":"3","user_id":"c","kind":"reply","target_user_id":"a","target_event_id":"1","ts":1503705700}
"#,
    )
    .unwrap();
    let report = dir.path().join("report.json");
    let out = netkit(&["report", "--events", arg(&events), "--out", arg(&report)]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["spatial"]["status"], "skipped");
    assert!(json["spatial"]["reason"]
        .as_str()
        .unwrap()
        .contains("no geocodable locations"));
}

#[test]
fn empty_keyword_stream_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.jsonl");
    fs::write(
        &events,
        r#"{"event_id":"1","user_id":"a","kind":"post","ts":1503619200,"text":"lunch"}
"#,
    )
    .unwrap();
    let cfg = dir.path().join("report.conf");
    fs::write(&cfg, "keywords = flood\n").unwrap();
    let report = dir.path().join("report.json");
    let out = netkit(&[
        "report",
        "--events",
        arg(&events),
        "--config",
        arg(&cfg),
        "--out",
        arg(&report),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no events left"), "{}", stderr(&out));
    assert!(!report.exists());
}

#[test]
fn mostly_malformed_input_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.jsonl");
    fs::write(
        &events,
        "not json\n{\"event_id\":\"1\"}\n{\"event_id\":\"2\",\"user_id\":\"a\",\"kind\":\"post\",\"ts\":5}\n",
    )
    .unwrap();
    let out = netkit(&[
        "report",
        "--events",
        arg(&events),
        "--out",
        arg(&dir.path().join("r.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error:"), "{}", stderr(&out));
}

#[test]
fn stage_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let synth_cfg = dir.path().join("s.conf");
    fs::write(&synth_cfg, "n_users = 400\ndays = 3\n").unwrap();
    let raw = dir.path().join("raw.jsonl");
    assert!(
        netkit(&["synth", "--config", arg(&synth_cfg), "--out", arg(&raw)])
            .status
            .success()
    );
    let keywords = dir.path().join("kw.txt");
    fs::write(&keywords, "hurricane\n").unwrap();
    let kept = dir.path().join("kept.jsonl");
    let out = netkit(&[
        "ingest",
        "--input",
        arg(&raw),
        "--keywords",
        arg(&keywords),
        "--out",
        arg(&kept),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let snaps = dir.path().join("snaps");
    assert!(
        netkit(&["snapshot", "--events", arg(&kept), "--out-dir", arg(&snaps)])
            .status
            .success()
    );
    assert!(snaps.join("memory.json").exists());
    let structures = dir.path().join("structures.json");
    assert!(netkit(&[
        "structures",
        "--snapshot-dir",
        arg(&snaps),
        "--out",
        arg(&structures)
    ])
    .status
    .success());
    let rows: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&structures).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 3);
}
