use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use crisis_netkit::config::KeyValues;
use crisis_netkit::graph::{build_daily_snapshots, read_snapshot_dir};
use crisis_netkit::influence::{DEFAULT_BINS, DEFAULT_REPLICATES};
use crisis_netkit::ingest::{
    day_partition, filter_by_keywords, parse_events, parse_instant, read_keywords, utc_midnight,
    write_jsonl, EventRecord, InputFormat, StudyWindow, SECONDS_PER_DAY,
};
use crisis_netkit::report::{
    activity_section, detect_format, influence_section, run_pipeline, spatial_sections,
    ReportConfig, Section, CONFIG_KEYS,
};
use crisis_netkit::structures::structure_proportions;
use crisis_netkit::synth::{generate, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "crisis-netkit",
    version,
    about = "Crisis communication network analytics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, validate and keyword-filter an event stream into JSONL.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// jsonl or csv; guessed from the extension when omitted.
        #[arg(long)]
        format: Option<InputFormat>,
        /// One keyword per line; all events are kept when omitted.
        #[arg(long)]
        keywords: Option<PathBuf>,
        /// Study start (date, RFC 3339 instant or epoch seconds).
        #[arg(long)]
        start: Option<String>,
        #[arg(long, requires = "start")]
        days: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build cumulative daily snapshots as edge and node files.
    Snapshot {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Activity proportions and their transforms for one day.
    Activity {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        day: usize,
        #[arg(long)]
        start: Option<String>,
        #[arg(long, default_value_t = 0.3)]
        bandwidth: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Structure-class proportions for every snapshot in a directory.
    Structures {
        #[arg(long)]
        snapshot_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// PageRank, power-law tail fit and flow matrix per snapshot.
    Influence {
        #[arg(long)]
        snapshot_dir: PathBuf,
        #[arg(long, default_value_t = 0.85)]
        beta: f64,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[arg(long, default_value_t = DEFAULT_REPLICATES)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2.0)]
        top_pct: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Location matrices, distance decay and surrogate models.
    Spatial {
        #[arg(long)]
        events: PathBuf,
        /// location,lat,lon CSV; the built-in US city list when omitted.
        #[arg(long)]
        gazetteer: Option<PathBuf>,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        top: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic scenario. Also writes `<out>.ledger.json` and
    /// `<out>.gazetteer.csv`.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full pipeline. Exit code 2 means some sections were skipped.
    #[command(after_help = format!("Config keys (key = value, one per line):\n{CONFIG_KEYS}"))]
    Report {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(suffix);
    out.with_file_name(name)
}

fn parse_start(start: Option<&str>) -> Result<Option<i64>> {
    start
        .map(|s| {
            parse_instant(s)
                .map(utc_midnight)
                .with_context(|| format!("not a date or instant: `{s}`"))
        })
        .transpose()
}

fn load_events(
    path: &Path,
    format: Option<InputFormat>,
    window: Option<StudyWindow>,
) -> Result<Vec<EventRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let outcome = parse_events(
        BufReader::new(file),
        format.unwrap_or_else(|| detect_format(path)),
        window,
    )?;
    if outcome.malformed > 0 {
        log::warn!(
            "{} of {} records skipped as malformed",
            outcome.malformed,
            outcome.lines
        );
    }
    Ok(outcome.events)
}

fn study_start(events: &[EventRecord], start: Option<i64>) -> Result<i64> {
    match start {
        Some(s) => Ok(s),
        None => match events.iter().map(|e| e.timestamp).min() {
            Some(t) => Ok(utc_midnight(t)),
            None => bail!("event stream is empty"),
        },
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Ingest {
            input,
            format,
            keywords,
            start,
            days,
            out,
        } => {
            let window = parse_start(start.as_deref())?.map(|s| StudyWindow {
                start: s,
                end: days.map_or(i64::MAX, |d| s + d as i64 * SECONDS_PER_DAY),
            });
            let mut events = load_events(&input, format, window)?;
            let parsed = events.len();
            if let Some(path) = keywords {
                let kw = read_keywords(BufReader::new(File::open(&path)?))?;
                events = filter_by_keywords(events, &kw);
            }
            write_jsonl(BufWriter::new(File::create(&out)?), &events)?;
            log::info!("kept {} of {parsed} events", events.len());
        }
        Command::Snapshot {
            events,
            start,
            out_dir,
        } => {
            let events = load_events(&events, None, None)?;
            let start = study_start(&events, parse_start(start.as_deref())?)?;
            let buckets = day_partition(events, start)?;
            let series = build_daily_snapshots(&buckets);
            fs::create_dir_all(&out_dir)?;
            for snap in series.snapshots() {
                snap.write_to_dir(&out_dir)?;
            }
            let ratios: Vec<_> = series.new_edge_ratios();
            write_json(&out_dir.join("memory.json"), &ratios)?;
            log::info!("wrote {} snapshots to {}", series.days(), out_dir.display());
        }
        Command::Activity {
            events,
            day,
            start,
            bandwidth,
            out,
        } => {
            let events = load_events(&events, None, None)?;
            let start = study_start(&events, parse_start(start.as_deref())?)?;
            let buckets = day_partition(events, start)?;
            if day >= buckets.len() {
                bail!(
                    "day {day} is past the last day with events ({})",
                    buckets.len() - 1
                );
            }
            let config = ReportConfig {
                bandwidth,
                ..ReportConfig::default()
            };
            write_json(&out, &activity_section(&buckets, day, &config))?;
        }
        Command::Structures { snapshot_dir, out } => {
            let snaps = read_snapshot_dir(&snapshot_dir)?;
            let rows: Vec<_> = snaps
                .iter()
                .map(|s| {
                    let section = structure_proportions(s)
                        .map_or_else(|| Section::skipped("no classifiable users"), Section::Ok);
                    (s.day(), section)
                })
                .collect();
            write_json(&out, &rows)?;
        }
        Command::Influence {
            snapshot_dir,
            beta,
            bins,
            replicates,
            seed,
            top_pct,
            out,
        } => {
            let config = ReportConfig {
                beta,
                bins,
                replicates,
                seed,
                top_pct,
                ..ReportConfig::default()
            };
            config.validate()?;
            #[derive(Serialize)]
            struct Row {
                day: u32,
                influence: Section<crisis_netkit::report::InfluenceSection>,
                flows: Section<crisis_netkit::influence::FlowMatrix>,
            }
            let rows: Vec<Row> = read_snapshot_dir(&snapshot_dir)?
                .iter()
                .map(|s| match influence_section(s, s.day() as usize, &config) {
                    Ok((section, scores)) => Row {
                        day: s.day(),
                        influence: Section::Ok(section),
                        flows: Section::Ok(crisis_netkit::influence::flow_matrix(
                            s, &scores, top_pct,
                        )),
                    },
                    Err(reason) => Row {
                        day: s.day(),
                        influence: Section::skipped(reason.clone()),
                        flows: Section::skipped(reason),
                    },
                })
                .collect();
            write_json(&out, &rows)?;
        }
        Command::Spatial {
            events,
            gazetteer,
            cache,
            top,
            out,
        } => {
            let events = load_events(&events, None, None)?;
            let config = ReportConfig {
                gazetteer,
                cache,
                top_locations: top,
                ..ReportConfig::default()
            };
            config.validate()?;
            let (spatial, response) = spatial_sections(&events, &config)?;
            let partial = spatial.is_skipped() || response.is_skipped();
            write_json(
                &out,
                &serde_json::json!({ "spatial": spatial, "response": response }),
            )?;
            if partial {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Synth { config, out } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg = ScenarioConfig::from_key_values(KeyValues::parse(&text)?)?;
            let scenario = generate(&cfg)?;
            write_jsonl(BufWriter::new(File::create(&out)?), &scenario.events)?;
            write_json(&sidecar(&out, ".ledger.json"), &scenario.ledger)?;
            scenario.write_gazetteer(BufWriter::new(File::create(sidecar(
                &out,
                ".gazetteer.csv",
            ))?))?;
            log::info!("generated {} events", scenario.events.len());
        }
        Command::Report {
            events,
            config,
            out,
        } => {
            let cfg = match config {
                Some(p) => ReportConfig::from_file(&p)?,
                None => ReportConfig::default(),
            };
            let report = run_pipeline(&events, &cfg)?;
            fs::write(&out, report.to_json() + "\n")
                .with_context(|| format!("writing {}", out.display()))?;
            if report.is_partial() {
                log::warn!("report is partial: some sections were skipped");
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
