//! End-to-end pipeline producing one versioned JSON report per study.
//!
//! Every section is either populated or marked skipped with a reason, so a
//! failure in one analysis never hides the others.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::activity::{
    activity_proportions, transform_summary, TransformSummary, DEFAULT_BANDWIDTH,
};
use crate::config::{ConfigError, KeyValues};
use crate::graph::{build_daily_snapshots, edge_weight_distribution, NetworkSnapshot, WeightStats};
use crate::influence::{
    ccdf, fit_power_law, flow_matrix, ks_gof, normalize_scores, pagerank, FlowMatrix,
    PageRankParams, PowerLawFit, DEFAULT_BINS, DEFAULT_REPLICATES,
};
use crate::ingest::{
    day_partition, filter_by_keywords, pad_days, parse_events, parse_instant, utc_midnight,
    ActivityKind, DayBucket, EventRecord, IngestError, InputFormat, StudyWindow, SECONDS_PER_DAY,
};
use crate::spatial::{
    decay_curve, frequency_matrix, read_point_csv, response_times, surrogate_model, top_locations,
    user_locations, DecayCurve, DistanceBins, Gazetteer, GeocodeCache, GeocodeSource, Geocoder,
    PairMatrix, SurrogateEdge, CITY_MARK_M, DEFAULT_TOP_K, EARTH_RADIUS_M, STATE_MARK_M,
};
use crate::structures::{structure_proportions, StructureProportions};

pub const SCHEMA_VERSION: u32 = 1;

/// Built-in gazetteer of major US cities, used when no other is configured.
pub const BUILTIN_GAZETTEER: &str = include_str!("../data/gazetteer.csv");

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("no events left after keyword filtering ({parsed} parsed)")]
    EmptyStream { parsed: usize },
}

/// Pipeline settings. Defaults are the published analysis constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub name: String,
    pub beta: f64,
    pub bandwidth: f64,
    pub bins: usize,
    pub replicates: usize,
    pub top_pct: f64,
    pub top_locations: usize,
    pub radius_m: f64,
    pub city_mark_m: f64,
    pub state_mark_m: f64,
    pub seed: u64,
    /// Lowercase substrings; empty keeps every event.
    pub keywords: Vec<String>,
    /// Day 0 midnight; defaults to the midnight before the first event.
    pub start: Option<i64>,
    /// Study length; defaults to the span of the data.
    pub days: Option<usize>,
    pub gazetteer: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub format: Option<InputFormat>,
    /// Cap on Q-Q pairs kept per transform.
    pub qq_points: usize,
    /// Cap on CCDF points kept per day.
    pub ccdf_points: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            name: "study".into(),
            beta: 0.85,
            bandwidth: DEFAULT_BANDWIDTH,
            bins: DEFAULT_BINS,
            replicates: DEFAULT_REPLICATES,
            top_pct: 2.0,
            top_locations: DEFAULT_TOP_K,
            radius_m: EARTH_RADIUS_M,
            city_mark_m: CITY_MARK_M,
            state_mark_m: STATE_MARK_M,
            seed: 0,
            keywords: Vec::new(),
            start: None,
            days: None,
            gazetteer: None,
            cache: None,
            format: None,
            qq_points: 1000,
            ccdf_points: 1000,
        }
    }
}

/// Keys accepted in a report config file, with their meaning.
pub const CONFIG_KEYS: &str = "\
name          study label (default study)
beta          PageRank damping factor in [0.8, 0.9] (0.85)
bandwidth     KDE bandwidth h (0.3)
bins          histogram bins for tail normalization (500)
replicates    bootstrap replicates for the KS test (1000)
top_pct       influential share of users in percent (2)
top_locations ranked locations kept for spatial analysis (100)
radius_m      sphere radius for great-circle distances (6371000)
city_mark_m   city-scale mark on decay curves (2000)
state_mark_m  state-scale mark on decay curves (100000)
seed          bootstrap seed (0)
keywords      comma-separated keyword filter, empty keeps all
start         study start date or instant, UTC (first event's midnight)
days          study length in days (span of data)
gazetteer     location,lat,lon CSV (built-in US cities)
cache         geocode cache CSV, created if missing
format        jsonl or csv (by file extension)
qq_points     Q-Q pairs kept per transform (1000)
ccdf_points   CCDF points kept per day (1000)";

impl ReportConfig {
    /// Relative paths resolve against `base`.
    pub fn from_key_values(mut kv: KeyValues, base: Option<&Path>) -> Result<Self, ConfigError> {
        let d = Self::default();
        let path = |kv: &mut KeyValues, key: &str| {
            kv.take_str(key).map(|p| match base {
                Some(b) if Path::new(&p).is_relative() => b.join(p),
                _ => PathBuf::from(p),
            })
        };
        let start = kv
            .take_str("start")
            .map(|s| {
                parse_instant(&s)
                    .map(utc_midnight)
                    .ok_or_else(|| ConfigError::value("start", format!("not an instant: `{s}`")))
            })
            .transpose()?;
        let cfg = Self {
            name: kv.take_or("name", d.name)?,
            beta: kv.take_or("beta", d.beta)?,
            bandwidth: kv.take_or("bandwidth", d.bandwidth)?,
            bins: kv.take_or("bins", d.bins)?,
            replicates: kv.take_or("replicates", d.replicates)?,
            top_pct: kv.take_or("top_pct", d.top_pct)?,
            top_locations: kv.take_or("top_locations", d.top_locations)?,
            radius_m: kv.take_or("radius_m", d.radius_m)?,
            city_mark_m: kv.take_or("city_mark_m", d.city_mark_m)?,
            state_mark_m: kv.take_or("state_mark_m", d.state_mark_m)?,
            seed: kv.take_or("seed", d.seed)?,
            keywords: kv
                .take_list::<String>("keywords")?
                .unwrap_or_default()
                .into_iter()
                .map(|k| k.to_lowercase())
                .collect(),
            start,
            days: kv.take("days")?,
            gazetteer: path(&mut kv, "gazetteer"),
            cache: path(&mut kv, "cache"),
            format: kv.take("format")?,
            qq_points: kv.take_or("qq_points", d.qq_points)?,
            ccdf_points: kv.take_or("ccdf_points", d.ccdf_points)?,
        };
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path).map_err(|source| ReportError::File {
            path: path.to_owned(),
            source,
        })?;
        Ok(Self::from_key_values(
            KeyValues::parse(&text)?,
            path.parent(),
        )?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, key: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::value(key, msg))
            }
        };
        check(
            (0.8..=0.9).contains(&self.beta),
            "beta",
            "must lie in [0.8, 0.9]",
        )?;
        check(self.bandwidth > 0.0, "bandwidth", "must be positive")?;
        check(self.bins >= 2, "bins", "need at least 2")?;
        check(
            (0.0..=100.0).contains(&self.top_pct),
            "top_pct",
            "must lie in [0, 100]",
        )?;
        check(self.top_locations > 0, "top_locations", "must be positive")?;
        check(self.radius_m > 0.0, "radius_m", "must be positive")?;
        check(self.days != Some(0), "days", "must be positive")?;
        check(
            self.qq_points >= 2 && self.ccdf_points >= 2,
            "qq_points",
            "need at least 2",
        )
    }

    fn distance_bins(&self) -> DistanceBins {
        DistanceBins {
            radius_m: self.radius_m,
            city_mark_m: self.city_mark_m,
            state_mark_m: self.state_mark_m,
            ..DistanceBins::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Section<T> {
    Ok(T),
    Skipped { reason: String },
}

impl<T> Section<T> {
    pub fn skipped(reason: impl Into<String>) -> Self {
        Section::Skipped {
            reason: reason.into(),
        }
    }

    pub fn is_skipped(&self) -> bool {
        matches!(self, Section::Skipped { .. })
    }

    pub fn ok(&self) -> Option<&T> {
        match self {
            Section::Ok(v) => Some(v),
            Section::Skipped { .. } => None,
        }
    }

    fn from_result<E: std::fmt::Display>(r: Result<T, E>) -> Self {
        match r {
            Ok(v) => Section::Ok(v),
            Err(e) => Section::skipped(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyMeta {
    pub name: String,
    pub start: String,
    pub start_ts: i64,
    pub days: usize,
    pub config: ReportConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub lines: usize,
    pub malformed: usize,
    pub parsed: usize,
    pub kept: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub total_weight: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivitySection {
    pub users: usize,
    pub transforms: BTreeMap<&'static str, Section<TransformSummary>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemorySection {
    pub new_edge_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailSection {
    pub x_min_raw: f64,
    pub bin_width: f64,
    pub excluded: usize,
    pub fit: Section<PowerLawFit>,
    pub ccdf: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfluenceSection {
    pub nodes: usize,
    pub beta: f64,
    pub iterations: usize,
    pub residual: f64,
    pub top_users: Vec<(String, f64)>,
    pub tail: Section<TailSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayReport {
    pub day: usize,
    pub date: String,
    pub graph: GraphSummary,
    pub activity: Section<ActivitySection>,
    pub structures: Section<StructureProportions>,
    pub memory: Section<MemorySection>,
    pub weights: Section<WeightStats>,
    pub influence: Section<InfluenceSection>,
    pub flows: Section<FlowMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationEntry {
    pub name: String,
    pub rank: usize,
    pub count: u64,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialSection {
    pub locations: Vec<LocationEntry>,
    /// Fewer distinct locations than requested.
    pub short: bool,
    pub unresolved_locations: usize,
    pub distance_bins: DistanceBins,
    pub frequency: PairMatrix,
    pub decay: DecayCurve,
    pub excluded_pairs: usize,
    pub surrogate: Vec<SurrogateEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResponseSection {
    /// Median delay in seconds; rows are diffuser locations, columns origin
    /// locations, in the spatial ranking order.
    pub medians: PairMatrix,
    pub resolved: usize,
    pub unresolved: usize,
    pub clock_anomalies: usize,
    pub decay: DecayCurve,
    pub surrogate: Vec<SurrogateEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub schema_version: u32,
    pub study: StudyMeta,
    pub ingest: IngestSummary,
    pub days: Vec<DayReport>,
    pub spatial: Section<SpatialSection>,
    pub response: Section<ResponseSection>,
}

impl StudyReport {
    /// True when any section was skipped.
    pub fn is_partial(&self) -> bool {
        self.spatial.is_skipped()
            || self.response.is_skipped()
            || self.days.iter().any(|d| {
                d.activity.is_skipped()
                    || d.activity
                        .ok()
                        .is_some_and(|a| a.transforms.values().any(Section::is_skipped))
                    || d.structures.is_skipped()
                    || d.memory.is_skipped()
                    || d.weights.is_skipped()
                    || d.influence.is_skipped()
                    || d.influence.ok().is_some_and(|i| {
                        i.tail.is_skipped() || i.tail.ok().is_some_and(|t| t.fit.is_skipped())
                    })
                    || d.flows.is_skipped()
            })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn detect_format(path: &Path) -> InputFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => InputFormat::Csv,
        _ => InputFormat::Jsonl,
    }
}

pub fn run_pipeline(events_path: &Path, config: &ReportConfig) -> Result<StudyReport, ReportError> {
    let file = File::open(events_path).map_err(|source| ReportError::File {
        path: events_path.to_owned(),
        source,
    })?;
    let format = config.format.unwrap_or_else(|| detect_format(events_path));
    let window = config.start.map(|start| StudyWindow {
        start,
        end: config
            .days
            .map_or(i64::MAX, |d| start + d as i64 * SECONDS_PER_DAY),
    });
    let parsed = parse_events(BufReader::new(file), format, window)?;
    let ingest = IngestSummary {
        lines: parsed.lines,
        malformed: parsed.malformed,
        parsed: parsed.events.len(),
        kept: 0,
    };
    run_on_events(parsed.events, ingest, config)
}

/// Runs everything after parsing. `ingest.kept` is filled in here.
pub fn run_on_events(
    events: Vec<EventRecord>,
    mut ingest: IngestSummary,
    config: &ReportConfig,
) -> Result<StudyReport, ReportError> {
    config.validate()?;
    let events = if config.keywords.is_empty() {
        events
    } else {
        filter_by_keywords(events, &config.keywords)
    };
    ingest.kept = events.len();
    if events.is_empty() {
        return Err(ReportError::EmptyStream {
            parsed: ingest.parsed,
        });
    }
    let start = config.start.unwrap_or_else(|| {
        utc_midnight(events.iter().map(|e| e.timestamp).min().expect("non-empty"))
    });

    let spatial_input = events.clone();
    let mut buckets = day_partition(events, start)?;
    if let Some(days) = config.days {
        pad_days(&mut buckets, days);
        buckets.truncate(days);
    }
    let series = build_daily_snapshots(&buckets);
    let ratios = series.new_edge_ratios();

    let day_report =
        |d: usize| day_report(d, start, &buckets, &series.snapshot(d), ratios[d].1, config);
    #[cfg(feature = "parallel")]
    let days: Vec<DayReport> = {
        use rayon::prelude::*;
        (0..buckets.len()).into_par_iter().map(day_report).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let days: Vec<DayReport> = (0..buckets.len()).map(day_report).collect();

    let (spatial, response) = spatial_sections(&spatial_input, config)?;
    Ok(StudyReport {
        schema_version: SCHEMA_VERSION,
        study: StudyMeta {
            name: config.name.clone(),
            start: format_date(start),
            start_ts: start,
            days: buckets.len(),
            config: config.clone(),
        },
        ingest,
        days,
        spatial,
        response,
    })
}

fn format_date(ts: i64) -> String {
    chrono::DateTime::from_timestamp(ts, 0)
        .map(|d| d.format("%Y-%m-%d").to_string())
        .unwrap_or_default()
}

fn day_report(
    day: usize,
    start: i64,
    buckets: &[DayBucket],
    snap: &NetworkSnapshot,
    ratio: Option<f64>,
    config: &ReportConfig,
) -> DayReport {
    let influence = influence_section(snap, day, config);
    let flows = match &influence {
        Err(reason) => Section::skipped(reason.clone()),
        Ok(_) if snap.edges().is_empty() => Section::skipped("no edges"),
        Ok((_, scores)) => Section::Ok(flow_matrix(snap, scores, config.top_pct)),
    };
    DayReport {
        day,
        date: format_date(start + day as i64 * SECONDS_PER_DAY),
        graph: GraphSummary {
            nodes: snap.node_count(),
            edges: snap.edges().len(),
            total_weight: snap.total_weight(),
        },
        activity: activity_section(buckets, day, config),
        structures: structure_proportions(snap)
            .map_or_else(|| Section::skipped("no classifiable users"), Section::Ok),
        memory: ratio.map_or_else(
            || Section::skipped("no active pairs"),
            |r| Section::Ok(MemorySection { new_edge_ratio: r }),
        ),
        weights: edge_weight_distribution(snap)
            .map_or_else(|| Section::skipped("no edges"), Section::Ok),
        influence: match influence {
            Ok((section, _)) => Section::Ok(section),
            Err(reason) => Section::skipped(reason),
        },
        flows,
    }
}

pub fn activity_section(
    buckets: &[DayBucket],
    day: usize,
    config: &ReportConfig,
) -> Section<ActivitySection> {
    let profiles = activity_proportions(buckets, day);
    if profiles.is_empty() {
        return Section::skipped("no active users");
    }
    let transforms = ActivityKind::ALL
        .iter()
        .map(|&kind| {
            let mut s = Section::from_result(transform_summary(&profiles, kind, config.bandwidth));
            if let Section::Ok(t) = &mut s {
                t.qq = thin_even(&t.qq, config.qq_points);
            }
            (kind.as_str(), s)
        })
        .collect();
    Section::Ok(ActivitySection {
        users: profiles.len(),
        transforms,
    })
}

pub fn influence_section(
    snap: &NetworkSnapshot,
    day: usize,
    config: &ReportConfig,
) -> Result<(InfluenceSection, Vec<f64>), String> {
    let params = PageRankParams {
        beta: config.beta,
        ..PageRankParams::default()
    };
    let pr = pagerank(snap, &params).map_err(|e| e.to_string())?;
    let mut order: Vec<u32> = (0..snap.node_count() as u32).collect();
    order.sort_by(|&a, &b| {
        pr.scores[b as usize]
            .total_cmp(&pr.scores[a as usize])
            .then_with(|| snap.user_id(a).cmp(snap.user_id(b)))
    });
    let top_users = order
        .iter()
        .take(10)
        .map(|&n| (snap.user_id(n).to_owned(), pr.scores[n as usize]))
        .collect();
    let tail = match normalize_scores(&pr.scores, config.bins) {
        Err(e) => Section::skipped(e.to_string()),
        Ok(norm) => {
            let fit = fit_power_law(&norm.values).and_then(|mut fit| {
                let seed = config.seed.wrapping_add(day as u64);
                fit.p_value = Some(ks_gof(&norm.values, &fit, config.replicates, seed)?);
                fit.replicates = config.replicates;
                Ok(fit)
            });
            Section::Ok(TailSection {
                x_min_raw: norm.x_min_raw,
                bin_width: norm.bin_width,
                excluded: norm.excluded,
                fit: Section::from_result(fit),
                ccdf: thin_ccdf(&ccdf(&norm.values), config.ccdf_points),
            })
        }
    };
    Ok((
        InfluenceSection {
            nodes: snap.node_count(),
            beta: pr.beta,
            iterations: pr.iterations,
            residual: pr.residual,
            top_users,
            tail,
        },
        pr.scores,
    ))
}

/// At most `max` points at evenly spaced ranks, keeping both ends.
pub fn thin_even<T: Clone>(points: &[T], max: usize) -> Vec<T> {
    if points.len() <= max {
        return points.to_vec();
    }
    let last = points.len() - 1;
    (0..max)
        .map(|i| points[(i * last + (max - 1) / 2) / (max - 1)].clone())
        .collect()
}

/// At most about `max` CCDF points, log-spaced in probability so the tail
/// keeps its resolution on log-log axes. The first and last points stay.
pub fn thin_ccdf(points: &[(f64, f64)], max: usize) -> Vec<(f64, f64)> {
    if points.len() <= max {
        return points.to_vec();
    }
    let lo = points[points.len() - 1].1.ln();
    let step = -lo / (max - 1) as f64;
    let mut out = vec![points[0]];
    let mut next = -step;
    for &p in &points[1..points.len() - 1] {
        if p.1.ln() <= next {
            out.push(p);
            while next >= p.1.ln() {
                next -= step;
            }
        }
    }
    out.push(points[points.len() - 1]);
    out
}

pub fn spatial_sections(
    events: &[EventRecord],
    config: &ReportConfig,
) -> Result<(Section<SpatialSection>, Section<ResponseSection>), ReportError> {
    const NO_LOCATIONS: &str = "no geocodable locations";
    let mut top = top_locations(events, config.top_locations);
    if top.locations.is_empty() {
        return Ok((
            Section::skipped(NO_LOCATIONS),
            Section::skipped(NO_LOCATIONS),
        ));
    }
    let gazetteer = match &config.gazetteer {
        Some(p) => Gazetteer::load(p).map_err(|source| ReportError::File {
            path: p.clone(),
            source,
        })?,
        None => Gazetteer::from_entries(
            read_point_csv(BUILTIN_GAZETTEER.as_bytes()).expect("built-in gazetteer parses"),
        ),
    };
    let cache = match &config.cache {
        Some(p) => GeocodeCache::open(p).map_err(|source| ReportError::File {
            path: p.clone(),
            source,
        })?,
        None => GeocodeCache::in_memory(),
    };
    let mut geocoder = Geocoder::new(gazetteer, cache);
    let mut unresolved = 0;
    for loc in &mut top.locations {
        let (point, source) = geocoder.resolve(&loc.name);
        if source == GeocodeSource::Unresolved {
            unresolved += 1;
        }
        loc.coordinates = point;
    }
    if unresolved == top.locations.len() {
        return Ok((
            Section::skipped(NO_LOCATIONS),
            Section::skipped(NO_LOCATIONS),
        ));
    }

    let coords: Vec<_> = top.locations.iter().map(|l| l.coordinates).collect();
    let bins = config.distance_bins();
    let users = user_locations(events);
    let frequency = frequency_matrix(events, &top, &users);
    let decay = decay_curve(&frequency, &coords, &bins);
    let spatial = SpatialSection {
        locations: top
            .locations
            .iter()
            .map(|l| LocationEntry {
                name: l.name.clone(),
                rank: l.rank,
                count: l.count,
                lat: l.coordinates.map(|p| p.lat()),
                lon: l.coordinates.map(|p| p.lon()),
            })
            .collect(),
        short: top.short,
        unresolved_locations: unresolved,
        distance_bins: bins,
        surrogate: surrogate_model(&frequency),
        excluded_pairs: decay.excluded_pairs,
        frequency,
        decay,
    };

    let rt = response_times(events, &top, &users);
    let response = if rt.resolved == 0 {
        Section::skipped("no resolvable adoption chains")
    } else {
        Section::Ok(ResponseSection {
            decay: decay_curve(&rt.matrix, &coords, &bins),
            surrogate: surrogate_model(&rt.matrix),
            medians: rt.matrix,
            resolved: rt.resolved,
            unresolved: rt.unresolved,
            clock_anomalies: rt.clock_anomalies,
        })
    };
    Ok((Section::Ok(spatial), response))
}
