//! Synthetic event streams and samples with known ground truth.
//!
//! A scenario places users in a ring of locations around a base point, lets
//! them act once per active day, and picks the users they adopt content from
//! by preferential attachment damped by a distance-decay (gravity) factor.
//! Every adoption gets its own origin post, so response delays are exact.
//! The generator keeps a ledger of what it did so each analytic can be
//! checked by bookkeeping instead of re-estimation.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{self, Write};
use std::str::FromStr;

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, KeyValues};
use crate::ingest::{parse_instant, ActivityKind, EventRecord, SECONDS_PER_DAY};
use crate::spatial::{haversine, GeoPoint};
use crate::stats::median;

/// Upper bound on the attachment exponent derived from `influence_alpha`.
pub const MAX_ATTACHMENT_STRENGTH: f64 = 4.0;
const FRESH_TRIES: usize = 32;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, SynthError> {
    Err(SynthError::Invalid(msg.into()))
}

/// Inverse CDF of the continuous power law with lower bound `x_min`.
pub fn power_law_quantile(u: f64, alpha: f64, x_min: f64) -> f64 {
    x_min * (1.0 - u).powf(-1.0 / (alpha - 1.0))
}

pub fn gen_power_law_samples(
    alpha: f64,
    x_min: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, SynthError> {
    if !(alpha > 1.0) || !(x_min > 0.0) || n == 0 {
        return invalid(format!(
            "power-law sampling needs alpha > 1, x_min > 0, n >= 1 (got {alpha}, {x_min}, {n})"
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| power_law_quantile(rng.gen::<f64>(), alpha, x_min))
        .collect())
}

/// Median response delay in seconds per location-pair class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayMedians {
    pub same: f64,
    pub regional: f64,
    pub distant: f64,
}

impl DelayMedians {
    pub fn get(&self, class: PairClass) -> f64 {
        match class {
            PairClass::Same => self.same,
            PairClass::Regional => self.regional,
            PairClass::Distant => self.distant,
        }
    }
}

impl FromStr for DelayMedians {
    type Err = String;

    /// `same:600,regional:1800,distant:3600`
    fn from_str(s: &str) -> Result<Self, String> {
        let mut m = DelayMedians {
            same: f64::NAN,
            regional: f64::NAN,
            distant: f64::NAN,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once(':')
                .ok_or_else(|| format!("expected class:seconds, got `{part}`"))?;
            let v: f64 = v.trim().parse().map_err(|_| format!("bad delay `{v}`"))?;
            match k.trim() {
                "same" => m.same = v,
                "regional" => m.regional = v,
                "distant" => m.distant = v,
                other => return Err(format!("unknown pair class `{other}`")),
            }
        }
        if [m.same, m.regional, m.distant].iter().any(|v| v.is_nan()) {
            return Err("need same, regional and distant".into());
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairClass {
    Same,
    Regional,
    Distant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub days: usize,
    pub n_users: usize,
    /// Target tail exponent; attachment strength is `1 / (alpha - 1)`.
    pub influence_alpha: f64,
    /// Dirichlet parameters over post, retweet, reply, quote.
    pub activity_mixture: [f64; 4],
    pub repeat_prob: f64,
    pub gravity_exponent: f64,
    pub n_locations: usize,
    pub delay_median_map: DelayMedians,
    pub seed: u64,
    /// UTC midnight of day 0.
    pub start: i64,
    /// Chance that a user acts on a given day.
    pub activity_rate: f64,
    pub self_loop_prob: f64,
    /// Log-normal shape of response delays.
    pub delay_sigma: f64,
    /// Location pairs closer than this are regional.
    pub regional_km: f64,
    /// Distances below this count as this in the gravity factor.
    pub gravity_floor_km: f64,
    /// Distance of the first ring location from the base point.
    pub spacing_km: f64,
    /// Each further location sits this many times farther out.
    pub spacing_growth: f64,
    pub keyword: String,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            days: 10,
            n_users: 1000,
            influence_alpha: 2.0,
            activity_mixture: [1.0, 3.0, 1.0, 1.0],
            repeat_prob: 0.1,
            gravity_exponent: 1.5,
            n_locations: 5,
            delay_median_map: DelayMedians {
                same: 600.0,
                regional: 1800.0,
                distant: 3600.0,
            },
            seed: 1,
            // 2017-08-25T00:00:00Z
            start: 1_503_619_200,
            activity_rate: 0.3,
            self_loop_prob: 0.01,
            delay_sigma: 0.25,
            regional_km: 500.0,
            gravity_floor_km: 25.0,
            spacing_km: 150.0,
            spacing_growth: 2.2,
            keyword: "hurricane".into(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_key_values(mut kv: KeyValues) -> Result<Self, SynthError> {
        let d = Self::default();
        let start = match kv.take_str("start") {
            Some(s) => parse_instant(&s)
                .ok_or_else(|| ConfigError::value("start", format!("not an instant: `{s}`")))?,
            None => d.start,
        };
        let mixture: Vec<f64> = kv
            .take_list("activity_mixture")?
            .unwrap_or_else(|| d.activity_mixture.to_vec());
        let activity_mixture: [f64; 4] = mixture
            .try_into()
            .map_err(|_| ConfigError::value("activity_mixture", "need 4 values"))?;
        let delay_median_map = match kv.take_str("delay_median_map") {
            Some(s) => s
                .parse()
                .map_err(|e: String| ConfigError::value("delay_median_map", e))?,
            None => d.delay_median_map,
        };
        let cfg = Self {
            days: kv.take_or("days", d.days)?,
            n_users: kv.take_or("n_users", d.n_users)?,
            influence_alpha: kv.take_or("influence_alpha", d.influence_alpha)?,
            activity_mixture,
            repeat_prob: kv.take_or("repeat_prob", d.repeat_prob)?,
            gravity_exponent: kv.take_or("gravity_exponent", d.gravity_exponent)?,
            n_locations: kv.take_or("n_locations", d.n_locations)?,
            delay_median_map,
            seed: kv.take_or("seed", d.seed)?,
            start,
            activity_rate: kv.take_or("activity_rate", d.activity_rate)?,
            self_loop_prob: kv.take_or("self_loop_prob", d.self_loop_prob)?,
            delay_sigma: kv.take_or("delay_sigma", d.delay_sigma)?,
            regional_km: kv.take_or("regional_km", d.regional_km)?,
            gravity_floor_km: kv.take_or("gravity_floor_km", d.gravity_floor_km)?,
            spacing_km: kv.take_or("spacing_km", d.spacing_km)?,
            spacing_growth: kv.take_or("spacing_growth", d.spacing_growth)?,
            keyword: kv.take_or("keyword", d.keyword)?,
        };
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let prob = |name: &str, p: f64, upper_open: bool| {
            let ok = p >= 0.0 && if upper_open { p < 1.0 } else { p <= 1.0 };
            if ok {
                Ok(())
            } else {
                invalid(format!("{name} = {p} is not a probability"))
            }
        };
        if self.days == 0 || self.n_users == 0 || self.n_locations == 0 {
            return invalid("days, n_users and n_locations must be positive");
        }
        if !(self.influence_alpha > 1.0) {
            return invalid("influence_alpha must exceed 1");
        }
        if self.activity_mixture.iter().any(|&a| !(a > 0.0)) {
            return invalid("activity_mixture parameters must be positive");
        }
        prob("repeat_prob", self.repeat_prob, true)?;
        prob("activity_rate", self.activity_rate, false)?;
        prob("self_loop_prob", self.self_loop_prob, false)?;
        if !(self.gravity_exponent >= 0.0) {
            return invalid("gravity_exponent must be non-negative");
        }
        let m = self.delay_median_map;
        if [m.same, m.regional, m.distant].iter().any(|&v| !(v > 0.0)) {
            return invalid("delay medians must be positive");
        }
        if !(self.delay_sigma >= 0.0) || !(self.gravity_floor_km > 0.0) {
            return invalid("delay_sigma must be >= 0 and gravity_floor_km > 0");
        }
        if !(self.spacing_km > 0.0) || !(self.spacing_growth >= 1.0) {
            return invalid("spacing_km must be > 0 and spacing_growth >= 1");
        }
        if self.start.rem_euclid(SECONDS_PER_DAY) != 0 {
            return invalid("start must be a UTC midnight");
        }
        if self.keyword.trim().is_empty() {
            return invalid("keyword must not be empty");
        }
        Ok(())
    }

    pub fn attachment_strength(&self) -> f64 {
        (1.0 / (self.influence_alpha - 1.0)).min(MAX_ATTACHMENT_STRENGTH)
    }
}

impl FromStr for ScenarioConfig {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, SynthError> {
        Self::from_key_values(KeyValues::parse(s)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthLocation {
    pub name: String,
    pub lat: f64,
    pub lon: f64,
}

impl SynthLocation {
    pub fn point(&self) -> GeoPoint {
        GeoPoint::new(self.lat, self.lon).expect("generated coordinates are valid")
    }
}

/// Ring of locations around a base point: location 0 at the base, then
/// golden-angle bearings at geometrically growing distances.
pub fn place_locations(cfg: &ScenarioConfig) -> Vec<SynthLocation> {
    let base = GeoPoint::new(29.7604, -95.3698).expect("valid base point");
    (0..cfg.n_locations)
        .map(|i| {
            let p = if i == 0 {
                base
            } else {
                let bearing = 137.507_764 * i as f64;
                let km = cfg.spacing_km * cfg.spacing_growth.powi(i as i32 - 1);
                base.destination(bearing, km * 1000.0)
            };
            SynthLocation {
                name: format!("synth city {i}"),
                lat: p.lat(),
                lon: p.lon(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowTruth {
    pub top_pct: f64,
    pub influential_users: usize,
    pub ii: f64,
    pub io: f64,
    pub oi: f64,
    pub oo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDelay {
    pub diffuser_location: String,
    pub origin_location: String,
    pub class: PairClass,
    pub distance_km: f64,
    pub configured_median: f64,
    pub realized_median: Option<f64>,
    pub samples: usize,
}

/// What the generator did, recorded as it happened.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub days: usize,
    pub attachment_strength: f64,
    pub adoptions: usize,
    pub repeat_adoptions: usize,
    pub skipped_adoptions: usize,
    /// Distinct ordered pairs first used on each day.
    pub fresh_pairs: Vec<usize>,
    /// Distinct ordered pairs used on each day.
    pub active_pairs: Vec<usize>,
    pub new_edge_ratio: Vec<Option<f64>>,
    /// Shares on the final cumulative graph, with the influential set taken
    /// as the top users by adoptions received (ties by user id).
    pub flow: FlowTruth,
    pub delays: Vec<PairDelay>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub events: Vec<EventRecord>,
    pub locations: Vec<SynthLocation>,
    pub ledger: GroundTruth,
}

impl Scenario {
    pub fn write_gazetteer<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "location,lat,lon")?;
        for l in &self.locations {
            writeln!(w, "\"{}\",{},{}", l.name, l.lat, l.lon)?;
        }
        Ok(())
    }
}

/// Fenwick tree over non-negative weights.
struct Fenwick {
    tree: Vec<f64>,
    values: Vec<f64>,
}

impl Fenwick {
    fn new(values: Vec<f64>) -> Self {
        let mut f = Fenwick {
            tree: vec![0.0; values.len() + 1],
            values: vec![0.0; values.len()],
        };
        for (i, v) in values.into_iter().enumerate() {
            f.set(i, v);
        }
        f
    }

    fn set(&mut self, i: usize, v: f64) {
        let delta = v - self.values[i];
        self.values[i] = v;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        let mut k = self.values.len();
        let mut s = 0.0;
        while k > 0 {
            s += self.tree[k];
            k &= k - 1;
        }
        s
    }

    /// Index whose cumulative range contains `target`.
    fn find(&self, mut target: f64) -> usize {
        let n = self.values.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }
}

struct Raw {
    seq: u64,
    ts: i64,
    user: u32,
    kind: ActivityKind,
    /// Target user and the sequence number of its origin post.
    target: Option<(u32, u64)>,
}

fn push_post(raws: &mut Vec<Raw>, seq: &mut u64, user: u32, ts: i64) -> u64 {
    raws.push(Raw {
        seq: *seq,
        ts,
        user,
        kind: ActivityKind::Post,
        target: None,
    });
    *seq += 1;
    *seq - 1
}

pub fn gen_scenario(cfg: &ScenarioConfig) -> Result<Vec<EventRecord>, SynthError> {
    Ok(generate(cfg)?.events)
}

pub fn generate(cfg: &ScenarioConfig) -> Result<Scenario, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_users;
    let k = cfg.n_locations;
    let locations = place_locations(cfg);
    let points: Vec<GeoPoint> = locations.iter().map(SynthLocation::point).collect();
    let dist_km: Vec<Vec<f64>> = points
        .iter()
        .map(|a| points.iter().map(|b| haversine(*a, *b) / 1000.0).collect())
        .collect();
    let gravity: Vec<Vec<f64>> = dist_km
        .iter()
        .map(|row| {
            row.iter()
                .map(|&d| d.max(cfg.gravity_floor_km).powf(-cfg.gravity_exponent))
                .collect()
        })
        .collect();
    let class_of = |i: usize, j: usize| {
        if i == j {
            PairClass::Same
        } else if dist_km[i][j] < cfg.regional_km {
            PairClass::Regional
        } else {
            PairClass::Distant
        }
    };
    let loc_of = |u: usize| u % k;

    let dirichlet =
        Dirichlet::new(&cfg.activity_mixture).map_err(|e| SynthError::Invalid(e.to_string()))?;
    let mixtures: Vec<[f64; 4]> = (0..n)
        .map(|_| {
            let p = dirichlet.sample(&mut rng);
            [p[0], p[0] + p[1], p[0] + p[1] + p[2], 1.0]
        })
        .collect();

    let gamma = cfg.attachment_strength();
    let attach = |deg: u32| (deg as f64 + 1.0).powf(gamma);
    let mut pools: Vec<Fenwick> = (0..k)
        .map(|j| Fenwick::new(vec![attach(0); (n + k - 1 - j) / k]))
        .collect();
    let mut in_degree = vec![0u32; n];
    let mut targets: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut seen: HashSet<(u32, u32)> = HashSet::new();
    let mut raws: Vec<Raw> = Vec::new();
    let mut delays: Vec<Vec<f64>> = vec![Vec::new(); k * k];
    let mut seq = 0u64;
    let (mut repeat_adoptions, mut skipped) = (0usize, 0usize);
    let end = cfg.start + cfg.days as i64 * SECONDS_PER_DAY;

    for day in 0..cfg.days {
        let prior: Vec<usize> = targets.iter().map(Vec::len).collect();
        let day_start = cfg.start + day as i64 * SECONDS_PER_DAY;
        for u in 0..n {
            if rng.gen::<f64>() >= cfg.activity_rate {
                continue;
            }
            let ts = day_start + rng.gen_range(0..SECONDS_PER_DAY);
            let draw = rng.gen::<f64>();
            let kind = ActivityKind::ALL[mixtures[u].iter().position(|&c| draw < c).unwrap_or(3)];
            if !kind.is_communication() {
                push_post(&mut raws, &mut seq, u as u32, ts);
                continue;
            }

            let uu = u as u32;
            let target = if prior[u] > 0 && rng.gen::<f64>() < cfg.repeat_prob {
                repeat_adoptions += 1;
                Some(targets[u][rng.gen_range(0..prior[u])])
            } else if rng.gen::<f64>() < cfg.self_loop_prob && !seen.contains(&(uu, uu)) {
                Some(uu)
            } else {
                let i = loc_of(u);
                let mut found = None;
                for _ in 0..FRESH_TRIES {
                    let weights: Vec<f64> =
                        (0..k).map(|j| pools[j].total() * gravity[i][j]).collect();
                    let total: f64 = weights.iter().sum();
                    let mut r = rng.gen::<f64>() * total;
                    let mut j = k - 1;
                    for (jj, &w) in weights.iter().enumerate() {
                        if r < w {
                            j = jj;
                            break;
                        }
                        r -= w;
                    }
                    let local = pools[j].find(rng.gen::<f64>() * pools[j].total());
                    let v = (local * k + j) as u32;
                    if v != uu && !seen.contains(&(uu, v)) {
                        found = Some(v);
                        break;
                    }
                }
                found
            };
            let Some(v) = target else {
                skipped += 1;
                push_post(&mut raws, &mut seq, uu, ts);
                continue;
            };
            if seen.insert((uu, v)) {
                targets[u].push(v);
                in_degree[v as usize] += 1;
                let vi = v as usize;
                pools[loc_of(vi)].set(vi / k, attach(in_degree[vi]));
            }

            let (i, j) = (loc_of(u), loc_of(v as usize));
            let median = cfg.delay_median_map.get(class_of(i, j));
            let z: f64 = rng.sample(StandardNormal);
            let delay = (median * (cfg.delay_sigma * z).exp())
                .round()
                .clamp(0.0, (SECONDS_PER_DAY - 1) as f64) as i64;
            let (mut t, mut o) = (ts, ts - delay);
            if o < cfg.start {
                o = cfg.start;
                t = cfg.start + delay;
            }
            debug_assert!(t < end);
            delays[i * k + j].push(delay as f64);
            let origin = push_post(&mut raws, &mut seq, v, o);
            raws.push(Raw {
                seq,
                ts: t,
                user: uu,
                kind,
                target: Some((v, origin)),
            });
            seq += 1;
        }
    }

    raws.sort_by_key(|r| (r.ts, r.seq));
    let user_name = |u: u32| format!("u{u}");
    let events: Vec<EventRecord> = raws
        .iter()
        .map(|r| EventRecord {
            event_id: format!("e{}", r.seq),
            user_id: user_name(r.user),
            kind: r.kind,
            target_user_id: r.target.map(|(v, _)| user_name(v)),
            target_event_id: r.target.map(|(_, o)| format!("e{o}")),
            timestamp: r.ts,
            profile_location: Some(format!("Synth City {}", loc_of(r.user as usize))),
            text: Some(format!("{} update #{}", cfg.keyword, r.seq % 97)),
        })
        .collect();

    let (fresh_pairs, active_pairs) = pair_ledger(&raws, cfg);
    let new_edge_ratio = fresh_pairs
        .iter()
        .zip(&active_pairs)
        .map(|(&f, &a)| (a > 0).then(|| f as f64 / a as f64))
        .collect();
    let delays = (0..k * k)
        .map(|c| {
            let (i, j) = (c / k, c % k);
            let class = class_of(i, j);
            PairDelay {
                diffuser_location: locations[i].name.clone(),
                origin_location: locations[j].name.clone(),
                class,
                distance_km: dist_km[i][j],
                configured_median: cfg.delay_median_map.get(class),
                realized_median: median(&delays[c]),
                samples: delays[c].len(),
            }
        })
        .collect();

    let ledger = GroundTruth {
        seed: cfg.seed,
        days: cfg.days,
        attachment_strength: gamma,
        adoptions: raws.iter().filter(|r| r.target.is_some()).count(),
        repeat_adoptions,
        skipped_adoptions: skipped,
        fresh_pairs,
        active_pairs,
        new_edge_ratio,
        flow: flow_truth(&raws, 2.0, user_name),
        delays,
    };
    Ok(Scenario {
        events,
        locations,
        ledger,
    })
}

fn pair_ledger(raws: &[Raw], cfg: &ScenarioConfig) -> (Vec<usize>, Vec<usize>) {
    let mut first_day: HashMap<(u32, u32), usize> = HashMap::new();
    let mut active: HashSet<(u32, u32, usize)> = HashSet::new();
    for r in raws {
        if let Some((v, _)) = r.target {
            let day = ((r.ts - cfg.start) / SECONDS_PER_DAY) as usize;
            let e = first_day.entry((r.user, v)).or_insert(day);
            *e = (*e).min(day);
            active.insert((r.user, v, day));
        }
    }
    let mut fresh = vec![0; cfg.days];
    let mut act = vec![0; cfg.days];
    for &d in first_day.values() {
        fresh[d] += 1;
    }
    for &(_, _, d) in &active {
        act[d] += 1;
    }
    (fresh, act)
}

fn flow_truth(raws: &[Raw], top_pct: f64, user_name: impl Fn(u32) -> String) -> FlowTruth {
    let mut received: BTreeMap<u32, u64> = BTreeMap::new();
    for r in raws {
        received.entry(r.user).or_insert(0);
        if let Some((v, _)) = r.target {
            *received.entry(v).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(u64, String, u32)> = received
        .iter()
        .map(|(&u, &w)| (w, user_name(u), u))
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let n_top = ((top_pct * ranked.len() as f64 / 100.0).ceil() as usize).min(ranked.len());
    let top: HashSet<u32> = ranked[..n_top].iter().map(|r| r.2).collect();

    let mut cells = [[0u64; 2]; 2];
    for r in raws {
        if let Some((v, _)) = r.target {
            cells[usize::from(!top.contains(&v))][usize::from(!top.contains(&r.user))] += 1;
        }
    }
    let total = cells.iter().flatten().sum::<u64>().max(1) as f64;
    FlowTruth {
        top_pct,
        influential_users: n_top,
        ii: 100.0 * cells[0][0] as f64 / total,
        io: 100.0 * cells[0][1] as f64 / total,
        oi: 100.0 * cells[1][0] as f64 / total,
        oo: 100.0 * cells[1][1] as f64 / total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::StudyWindow;

    #[test]
    fn quantile_examples() {
        assert_eq!(power_law_quantile(0.0, 2.5, 3.0), 3.0);
        assert!((power_law_quantile(0.75, 2.0, 1.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn samples_are_seeded() {
        let a = gen_power_law_samples(2.5, 1.0, 100, 9).unwrap();
        assert_eq!(a, gen_power_law_samples(2.5, 1.0, 100, 9).unwrap());
        assert_ne!(a, gen_power_law_samples(2.5, 1.0, 100, 10).unwrap());
        assert!(a.iter().all(|&x| x >= 1.0));
        assert!(gen_power_law_samples(1.0, 1.0, 5, 0).is_err());
    }

    #[test]
    fn alpha_recovered_at_2_5() {
        let v = gen_power_law_samples(2.5, 1.0, 100_000, 3).unwrap();
        let a = crate::influence::alpha_mle(&v, 1.0).unwrap();
        assert!((2.47..=2.53).contains(&a), "{a}");
    }

    #[test]
    fn fenwick_find() {
        let f = Fenwick::new(vec![1.0, 0.0, 2.0, 1.0]);
        assert_eq!(f.total(), 4.0);
        assert_eq!(f.find(0.5), 0);
        assert_eq!(f.find(1.0), 2);
        assert_eq!(f.find(2.9), 2);
        assert_eq!(f.find(3.5), 3);
    }

    #[test]
    fn config_parsing() {
        let cfg: ScenarioConfig = "days = 3\nn_users=20\nactivity_mixture = 1,1,1,1\n\
            delay_median_map = same:10, regional:20, distant:30\nstart = 2020-01-01"
            .parse()
            .unwrap();
        assert_eq!(cfg.days, 3);
        assert_eq!(cfg.delay_median_map.regional, 20.0);
        assert!("n_locations = 0".parse::<ScenarioConfig>().is_err());
        assert!("repeat_prob = 1".parse::<ScenarioConfig>().is_err());
        assert!("colour = red".parse::<ScenarioConfig>().is_err());
    }

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            n_users: 400,
            days: 5,
            activity_rate: 0.5,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn deterministic_and_valid() {
        let cfg = small();
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.events, b.events);
        assert_eq!(a.ledger, b.ledger);
        let window = StudyWindow::from_days(cfg.start, cfg.days);
        let ids: HashSet<&str> = a.events.iter().map(|e| e.event_id.as_str()).collect();
        for ev in &a.events {
            ev.validate(Some(window)).unwrap();
            if let Some(t) = &ev.target_event_id {
                assert!(ids.contains(t.as_str()));
            }
        }
        assert!(a
            .events
            .windows(2)
            .all(|w| w[0].timestamp <= w[1].timestamp));
    }

    #[test]
    fn no_repeats_means_all_fresh() {
        let cfg = ScenarioConfig {
            repeat_prob: 0.0,
            ..small()
        };
        let s = generate(&cfg).unwrap();
        assert!(s.ledger.new_edge_ratio.iter().all(|r| *r == Some(1.0)));
    }

    #[test]
    fn realized_delays_track_configuration() {
        let cfg = ScenarioConfig {
            delay_sigma: 0.05,
            ..small()
        };
        let s = generate(&cfg).unwrap();
        for d in s.ledger.delays.iter().filter(|d| d.samples >= 20) {
            let r = d.realized_median.unwrap();
            assert!((r / d.configured_median - 1.0).abs() < 0.05, "{d:?}");
        }
    }

    #[test]
    fn locations_are_spread() {
        let locs = place_locations(&ScenarioConfig::default());
        let d = haversine(locs[0].point(), locs[1].point()) / 1000.0;
        assert!((d - 150.0).abs() < 1e-6);
        let d4 = haversine(locs[0].point(), locs[4].point()) / 1000.0;
        assert!((d4 - 150.0 * 2.2f64.powi(3)).abs() < 1e-6);
    }
}
