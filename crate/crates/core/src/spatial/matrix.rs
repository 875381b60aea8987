use std::collections::HashMap;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use super::geo::{haversine_with_radius, GeoPoint, EARTH_RADIUS_M};
use super::locations::TopLocations;
use crate::ingest::EventRecord;
use crate::stats::median;

/// City-scale radius used to annotate decay curves.
pub const CITY_MARK_M: f64 = 2_000.0;
/// State-scale radius used to annotate decay curves.
pub const STATE_MARK_M: f64 = 100_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Frequency,
    ResponseTime,
}

/// Square matrix over ranked locations. Rows are the diffuser's location,
/// columns the origin's location. `None` marks an absent cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix {
    pub kind: MatrixKind,
    size: usize,
    cells: Vec<Option<f64>>,
}

impl PairMatrix {
    pub fn new(kind: MatrixKind, size: usize) -> Self {
        let fill = match kind {
            MatrixKind::Frequency => Some(0.0),
            MatrixKind::ResponseTime => None,
        };
        Self {
            kind,
            size,
            cells: vec![fill; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row * self.size + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Option<f64>) {
        self.cells[row * self.size + col] = value;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Option<f64>]> {
        self.cells.chunks(self.size.max(1))
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().flatten().sum()
    }
}

impl Serialize for PairMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.size))?;
        if self.size > 0 {
            for row in self.rows() {
                seq.serialize_element(row)?;
            }
        }
        seq.end()
    }
}

fn located(
    user: &str,
    user_loc: &HashMap<String, String>,
    index: &HashMap<&str, usize>,
) -> Option<usize> {
    user_loc
        .get(user)
        .and_then(|loc| index.get(loc.as_str()).copied())
}

/// Counts retweet/reply/quote events from an actor in location `i` to a
/// target user in location `j`, over the ranked locations only.
pub fn frequency_matrix(
    events: &[EventRecord],
    top: &TopLocations,
    user_loc: &HashMap<String, String>,
) -> PairMatrix {
    let index = top.index_map();
    let mut m = PairMatrix::new(MatrixKind::Frequency, top.locations.len());
    for ev in events.iter().filter(|e| e.kind.is_communication()) {
        let Some(target) = ev.target_user_id.as_deref() else {
            continue;
        };
        if let (Some(i), Some(j)) = (
            located(&ev.user_id, user_loc, &index),
            located(target, user_loc, &index),
        ) {
            let cell = m.get(i, j).unwrap_or(0.0);
            m.set(i, j, Some(cell + 1.0));
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseTimes {
    /// Median delay in seconds per location pair.
    pub matrix: PairMatrix,
    /// Delay samples behind each cell, row-major.
    pub samples: Vec<Vec<f64>>,
    pub resolved: usize,
    pub unresolved: usize,
    pub clock_anomalies: usize,
}

/// Median delay between an origin event and each retweet/reply/quote of it,
/// grouped by (actor location, origin-author location).
pub fn response_times(
    events: &[EventRecord],
    top: &TopLocations,
    user_loc: &HashMap<String, String>,
) -> ResponseTimes {
    let index = top.index_map();
    let k = top.locations.len();
    let by_id: HashMap<&str, &EventRecord> =
        events.iter().map(|e| (e.event_id.as_str(), e)).collect();
    let mut samples = vec![Vec::new(); k * k];
    let (mut resolved, mut unresolved, mut clock_anomalies) = (0, 0, 0);

    for ev in events.iter().filter(|e| e.kind.is_communication()) {
        let Some(origin) = ev.target_event_id.as_deref().and_then(|id| by_id.get(id)) else {
            unresolved += 1;
            continue;
        };
        let delay = ev.timestamp - origin.timestamp;
        if delay < 0 {
            clock_anomalies += 1;
            continue;
        }
        resolved += 1;
        if let (Some(i), Some(j)) = (
            located(&ev.user_id, user_loc, &index),
            located(&origin.user_id, user_loc, &index),
        ) {
            samples[i * k + j].push(delay as f64);
        }
    }

    let mut matrix = PairMatrix::new(MatrixKind::ResponseTime, k);
    for (cell, s) in samples.iter().enumerate() {
        matrix.set(cell / k.max(1), cell % k.max(1), median(s));
    }
    ResponseTimes {
        matrix,
        samples,
        resolved,
        unresolved,
        clock_anomalies,
    }
}

/// Logarithmic distance bins plus the scale marks drawn on decay curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceBins {
    pub min_m: f64,
    pub max_m: f64,
    pub count: usize,
    pub radius_m: f64,
    pub city_mark_m: f64,
    pub state_mark_m: f64,
}

impl Default for DistanceBins {
    fn default() -> Self {
        Self {
            min_m: 1_000.0,
            max_m: 20_000_000.0,
            count: 20,
            radius_m: EARTH_RADIUS_M,
            city_mark_m: CITY_MARK_M,
            state_mark_m: STATE_MARK_M,
        }
    }
}

impl DistanceBins {
    /// Bin index of a positive distance; values outside the range clamp to
    /// the end bins.
    pub fn index(&self, d: f64) -> usize {
        if d <= self.min_m {
            return 0;
        }
        let frac = (d / self.min_m).ln() / (self.max_m / self.min_m).ln();
        ((frac * self.count as f64) as usize).min(self.count - 1)
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let ratio = self.max_m / self.min_m;
        let at = |k: usize| self.min_m * ratio.powf(k as f64 / self.count as f64);
        (at(i), at(i + 1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayBin {
    pub lo_m: f64,
    pub hi_m: f64,
    /// Location pairs assigned to the bin.
    pub pairs: usize,
    /// Pairs with a defined cell value.
    pub values: usize,
    pub mean: Option<f64>,
}

impl Serialize for DecayBin {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (self.lo_m, self.hi_m, self.mean).serialize(serializer)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    /// Same-location pairs (the matrix diagonal), reported at distance 0.
    pub zero: Option<DecayBin>,
    /// Occupied distance bins in increasing order.
    pub bins: Vec<DecayBin>,
    /// Pairs dropped because a location has no coordinates.
    pub excluded_pairs: usize,
    pub city_mark_m: f64,
    pub state_mark_m: f64,
}

impl DecayCurve {
    /// Bins with a defined mean, zero bucket first.
    pub fn points(&self) -> impl Iterator<Item = &DecayBin> {
        self.zero
            .iter()
            .chain(self.bins.iter())
            .filter(|b| b.mean.is_some())
    }
}

impl Serialize for DecayCurve {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let pts: Vec<&DecayBin> = self.points().collect();
        pts.serialize(serializer)
    }
}

#[derive(Default)]
struct Acc {
    pairs: usize,
    values: usize,
    sum: f64,
}

impl Acc {
    fn add(&mut self, v: Option<f64>) {
        self.pairs += 1;
        if let Some(v) = v {
            self.values += 1;
            self.sum += v;
        }
    }

    fn finish(&self, lo_m: f64, hi_m: f64) -> DecayBin {
        DecayBin {
            lo_m,
            hi_m,
            pairs: self.pairs,
            values: self.values,
            mean: (self.values > 0).then(|| self.sum / self.values as f64),
        }
    }
}

/// Mean cell value per great-circle distance bin.
pub fn decay_curve(
    matrix: &PairMatrix,
    coordinates: &[Option<GeoPoint>],
    bins: &DistanceBins,
) -> DecayCurve {
    let k = matrix.size();
    let mut zero = Acc::default();
    let mut accs: Vec<Acc> = (0..bins.count).map(|_| Acc::default()).collect();
    let mut excluded_pairs = 0;
    for i in 0..k {
        for j in 0..k {
            let (Some(a), Some(b)) = (coordinates[i], coordinates[j]) else {
                excluded_pairs += 1;
                continue;
            };
            let v = matrix.get(i, j);
            if i == j {
                zero.add(v);
            } else {
                let d = haversine_with_radius(a, b, bins.radius_m);
                accs[bins.index(d)].add(v);
            }
        }
    }
    DecayCurve {
        zero: (zero.pairs > 0).then(|| zero.finish(0.0, 0.0)),
        bins: accs
            .iter()
            .enumerate()
            .filter(|(_, a)| a.pairs > 0)
            .map(|(i, a)| {
                let (lo, hi) = bins.edges(i);
                a.finish(lo, hi)
            })
            .collect(),
        excluded_pairs,
        city_mark_m: bins.city_mark_m,
        state_mark_m: bins.state_mark_m,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateEdge {
    pub from: usize,
    pub to: usize,
    pub width: f64,
}

impl Serialize for SurrogateEdge {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (self.from, self.to, self.width).serialize(serializer)
    }
}

pub const MIN_WIDTH: f64 = 0.5;
pub const MAX_WIDTH: f64 = 5.0;

/// Edge widths min-max scaled to `[0.5, 5.0]`: proportional to frequency,
/// or to the inverse median delay for response-time matrices. Zero
/// frequencies and absent cells get no edge.
pub fn surrogate_model(matrix: &PairMatrix) -> Vec<SurrogateEdge> {
    let k = matrix.size();
    let mut raw = Vec::new();
    for i in 0..k {
        for j in 0..k {
            let strength = match (matrix.kind, matrix.get(i, j)) {
                (MatrixKind::Frequency, Some(v)) if v > 0.0 => v,
                (MatrixKind::ResponseTime, Some(v)) if v > 0.0 => 1.0 / v,
                // zero delay: strongest possible link
                (MatrixKind::ResponseTime, Some(_)) => f64::INFINITY,
                _ => continue,
            };
            raw.push((i, j, strength));
        }
    }
    let finite = raw.iter().map(|r| r.2).filter(|s| s.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    raw.into_iter()
        .map(|(from, to, s)| {
            let width = if !s.is_finite() || hi <= lo {
                MAX_WIDTH
            } else {
                MIN_WIDTH + (MAX_WIDTH - MIN_WIDTH) * (s - lo) / (hi - lo)
            };
            SurrogateEdge { from, to, width }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ActivityKind;
    use crate::spatial::locations::{top_locations, user_locations};

    fn ev(id: &str, user: &str, loc: &str, target: Option<(&str, &str)>, ts: i64) -> EventRecord {
        EventRecord {
            event_id: id.into(),
            user_id: user.into(),
            kind: if target.is_some() {
                ActivityKind::Retweet
            } else {
                ActivityKind::Post
            },
            target_user_id: target.map(|t| t.0.into()),
            target_event_id: target.map(|t| t.1.into()),
            timestamp: ts,
            profile_location: Some(loc.into()),
            text: None,
        }
    }

    fn houston_austin() -> Vec<EventRecord> {
        vec![
            ev("p1", "b", "Austin", None, 100),
            ev("p2", "b", "Austin", None, 150),
            ev("r1", "a", "Houston", Some(("b", "p1")), 400),
        ]
    }

    #[test]
    fn single_event_frequency() {
        let evs = houston_austin();
        let top = top_locations(&evs, 100);
        let users = user_locations(&evs);
        let m = frequency_matrix(&evs, &top, &users);
        let (h, a) = (
            top.position("houston").unwrap(),
            top.position("austin").unwrap(),
        );
        assert_eq!(m.get(h, a), Some(1.0));
        assert_eq!(m.total(), 1.0);
    }

    #[test]
    fn response_delay() {
        let evs = houston_austin();
        let top = top_locations(&evs, 100);
        let r = response_times(&evs, &top, &user_locations(&evs));
        let (h, a) = (
            top.position("houston").unwrap(),
            top.position("austin").unwrap(),
        );
        assert_eq!(r.matrix.get(h, a), Some(300.0));
        assert_eq!(r.matrix.get(a, h), None);
        assert_eq!((r.resolved, r.unresolved, r.clock_anomalies), (1, 0, 0));
    }

    #[test]
    fn response_anomalies_and_unresolved() {
        let mut evs = houston_austin();
        evs.push(ev("r2", "a", "Houston", Some(("b", "p2")), 120));
        evs.push(ev("r3", "a", "Houston", Some(("b", "missing")), 500));
        let top = top_locations(&evs, 100);
        let r = response_times(&evs, &top, &user_locations(&evs));
        assert_eq!((r.resolved, r.unresolved, r.clock_anomalies), (1, 1, 1));
    }

    #[test]
    fn median_resists_extremes() {
        let mut evs = vec![ev("p", "b", "Austin", None, 0)];
        for (i, d) in [10, 20, 1000].into_iter().enumerate() {
            evs.push(ev(&format!("r{i}"), "a", "Houston", Some(("b", "p")), d));
        }
        let top = top_locations(&evs, 100);
        let r = response_times(&evs, &top, &user_locations(&evs));
        let (h, a) = (
            top.position("houston").unwrap(),
            top.position("austin").unwrap(),
        );
        assert_eq!(r.matrix.get(h, a), Some(20.0));
    }

    fn pt(lat: f64, lon: f64) -> Option<GeoPoint> {
        Some(GeoPoint::new(lat, lon).unwrap())
    }

    #[test]
    fn one_pair_one_bin() {
        let mut m = PairMatrix::new(MatrixKind::Frequency, 2);
        m.set(0, 1, Some(7.0));
        m.set(1, 0, None);
        let coords = [pt(29.7604, -95.3698), pt(30.2672, -97.7431)];
        let c = decay_curve(&m, &coords, &DistanceBins::default());
        assert_eq!(c.bins.len(), 1);
        assert_eq!(c.bins[0].pairs, 2);
        assert_eq!(c.bins[0].mean, Some(7.0));
        assert_eq!(c.zero.as_ref().unwrap().pairs, 2);
        assert_eq!(c.excluded_pairs, 0);
        let d = haversine_with_radius(coords[0].unwrap(), coords[1].unwrap(), EARTH_RADIUS_M);
        assert!(c.bins[0].lo_m <= d && d < c.bins[0].hi_m);
    }

    #[test]
    fn flat_values_flat_curve_and_exclusions() {
        let mut m = PairMatrix::new(MatrixKind::Frequency, 4);
        for i in 0..4 {
            for j in 0..4 {
                m.set(i, j, Some(3.0));
            }
        }
        let coords = [pt(0.0, 0.0), pt(0.0, 2.0), pt(10.0, 40.0), None];
        let c = decay_curve(&m, &coords, &DistanceBins::default());
        assert!(c.points().all(|b| b.mean == Some(3.0)));
        assert_eq!(c.excluded_pairs, 7);
        let assigned: usize = c.bins.iter().map(|b| b.pairs).sum::<usize>() + c.zero.unwrap().pairs;
        assert_eq!(assigned + c.excluded_pairs, 16);
    }

    #[test]
    fn bin_edges() {
        let b = DistanceBins::default();
        assert_eq!(b.index(10.0), 0);
        assert_eq!(b.index(3e7), 19);
        let (lo, hi) = b.edges(19);
        assert!((lo - 2e7 / 20_000f64.powf(0.05)).abs() < 1e-3);
        assert!((hi - 2e7).abs() < 1e-3);
        for d in [1500.0, 99_000.0, 1.2e6] {
            let (lo, hi) = b.edges(b.index(d));
            assert!(lo <= d && d < hi, "{d}");
        }
    }

    #[test]
    fn surrogate_widths() {
        let mut f = PairMatrix::new(MatrixKind::Frequency, 2);
        f.set(0, 0, Some(10.0));
        f.set(0, 1, Some(1.0));
        f.set(1, 0, Some(5.5));
        let w = surrogate_model(&f);
        assert_eq!(w.len(), 3);
        assert_eq!(w[0].width, 5.0);
        assert_eq!(w[1].width, 0.5);
        assert!((w[2].width - 2.75).abs() < 1e-12);

        let mut r = PairMatrix::new(MatrixKind::ResponseTime, 2);
        r.set(0, 0, Some(30.0));
        r.set(1, 1, Some(600.0));
        r.set(0, 1, Some(90.0));
        let w = surrogate_model(&r);
        let fastest = w.iter().find(|e| (e.from, e.to) == (0, 0)).unwrap();
        assert_eq!(fastest.width, 5.0);
        assert_eq!(
            w.iter().find(|e| (e.from, e.to) == (1, 1)).unwrap().width,
            0.5
        );
    }

    #[test]
    fn matrix_serializes_nulls() {
        let mut m = PairMatrix::new(MatrixKind::ResponseTime, 2);
        m.set(0, 1, Some(4.0));
        assert_eq!(
            serde_json::to_string(&m).unwrap(),
            "[[null,4.0],[null,null]]"
        );
    }
}
