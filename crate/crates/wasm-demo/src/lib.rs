//! Browser bindings for three interactive views: activity transforms,
//! power-law tail fitting and distance decay on a synthetic scenario.
//! Every entry point returns a JSON string; errors come back as
//! `{"error": "..."}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;
use wasm_bindgen::prelude::*;

use crisis_netkit::activity::{profiles_from_events, transform_summary, TransformSummary};
use crisis_netkit::influence::{ccdf, fit_power_law, ks_gof, power_law_cdf};
use crisis_netkit::ingest::ActivityKind;
use crisis_netkit::spatial::{
    decay_curve, frequency_matrix, haversine, top_locations, user_locations, DecayCurve,
    DistanceBins, Gazetteer, GeoPoint, PairMatrix, SurrogateEdge,
};
use crisis_netkit::synth::{gen_power_law_samples, generate, ScenarioConfig};

const MAX_CURVE_POINTS: usize = 400;

fn to_json<T: Serialize>(result: Result<T, String>) -> String {
    match result {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e),
    }
}

fn error_json(message: &str) -> String {
    serde_json::json!({ "error": message }).to_string()
}

fn thin<T: Clone>(points: &[T], max: usize) -> Vec<T> {
    if points.len() <= max {
        return points.to_vec();
    }
    let step = (points.len() - 1) as f64 / (max - 1) as f64;
    (0..max)
        .map(|i| points[(i as f64 * step).round() as usize].clone())
        .collect()
}

#[derive(Debug, Serialize)]
pub struct KindView {
    pub kind: &'static str,
    pub lambda: f64,
    pub n: usize,
    pub excluded: usize,
    pub kde: Vec<(f64, f64)>,
    pub qq: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize)]
pub struct ActivityView {
    pub users: usize,
    pub events: usize,
    pub kinds: Vec<Result<KindView, String>>,
}

fn kind_view(s: TransformSummary) -> KindView {
    KindView {
        kind: s.kind.as_str(),
        lambda: s.lambda,
        n: s.n,
        excluded: s.excluded_low + s.excluded_high,
        kde: thin(&s.kde, MAX_CURVE_POINTS),
        qq: thin(&s.qq, MAX_CURVE_POINTS),
    }
}

pub fn activity_view(
    n_users: usize,
    days: usize,
    bandwidth: f64,
    seed: u64,
) -> Result<ActivityView, String> {
    let cfg = ScenarioConfig {
        n_users,
        days,
        seed,
        ..ScenarioConfig::default()
    };
    let scenario = generate(&cfg).map_err(|e| e.to_string())?;
    let profiles = profiles_from_events(&scenario.events);
    let kinds = ActivityKind::ALL
        .iter()
        .map(|&k| {
            transform_summary(&profiles, k, bandwidth)
                .map(kind_view)
                .map_err(|e| format!("{k}: {e}"))
        })
        .collect();
    Ok(ActivityView {
        users: profiles.len(),
        events: scenario.events.len(),
        kinds,
    })
}

/// Per-user activity proportions of a synthetic stream, negative-log and
/// Box-Cox transformed, with density estimate and normal Q-Q pairs.
#[wasm_bindgen]
pub fn activity_transforms(n_users: u32, days: u32, bandwidth: f64, seed: u32) -> String {
    to_json(activity_view(
        n_users as usize,
        days as usize,
        bandwidth,
        seed as u64,
    ))
}

#[derive(Debug, Serialize)]
pub struct TailView {
    pub alpha: f64,
    pub ks_statistic: f64,
    pub p_value: f64,
    pub replicates: usize,
    /// Empirical `(x, P(X >= x))`.
    pub ccdf: Vec<(f64, f64)>,
    /// Fitted model at the same abscissas.
    pub model: Vec<(f64, f64)>,
}

pub fn tail_view(
    alpha: f64,
    n: usize,
    exponential: bool,
    replicates: usize,
    seed: u64,
) -> Result<TailView, String> {
    let values = if exponential {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| 1.0 + <Exp1 as Distribution<f64>>::sample(&Exp1, &mut rng))
            .collect()
    } else {
        gen_power_law_samples(alpha, 1.0, n, seed).map_err(|e| e.to_string())?
    };
    let fit = fit_power_law(&values).map_err(|e| e.to_string())?;
    let p_value = ks_gof(&values, &fit, replicates, seed).map_err(|e| e.to_string())?;
    let empirical = thin(&ccdf(&values), MAX_CURVE_POINTS);
    let model = empirical
        .iter()
        .map(|&(x, _)| (x, 1.0 - power_law_cdf(x, fit.alpha, fit.x_min)))
        .collect();
    Ok(TailView {
        alpha: fit.alpha,
        ks_statistic: fit.ks_statistic,
        p_value,
        replicates,
        ccdf: empirical,
        model,
    })
}

/// Draws `n` values from a power law with exponent `alpha` (or from a
/// shifted exponential), fits the exponent and runs the bootstrap KS test.
#[wasm_bindgen]
pub fn power_law_tail(alpha: f64, n: u32, exponential: bool, replicates: u32, seed: u32) -> String {
    to_json(tail_view(
        alpha,
        n as usize,
        exponential,
        replicates as usize,
        seed as u64,
    ))
}

#[derive(Debug, Serialize)]
pub struct PlaceView {
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub events: u64,
}

#[derive(Debug, Serialize)]
pub struct DecayView {
    pub places: Vec<PlaceView>,
    /// Great-circle distance in km, row-major.
    pub distances_km: Vec<Vec<f64>>,
    pub frequency: PairMatrix,
    pub decay: DecayCurve,
    pub surrogate: Vec<SurrogateEdge>,
}

pub fn decay_view(
    n_users: usize,
    n_locations: usize,
    gravity_exponent: f64,
    seed: u64,
) -> Result<DecayView, String> {
    let cfg = ScenarioConfig {
        n_users,
        n_locations,
        gravity_exponent,
        seed,
        days: 5,
        ..ScenarioConfig::default()
    };
    let scenario = generate(&cfg).map_err(|e| e.to_string())?;
    let gazetteer = Gazetteer::from_entries(
        scenario
            .locations
            .iter()
            .map(|l| (l.name.clone(), l.point())),
    );
    let top = top_locations(&scenario.events, n_locations);
    let points: Vec<Option<GeoPoint>> = top
        .locations
        .iter()
        .map(|l| gazetteer.get(&l.name))
        .collect();
    let users = user_locations(&scenario.events);
    let frequency = frequency_matrix(&scenario.events, &top, &users);
    let decay = decay_curve(&frequency, &points, &DistanceBins::default());
    let distances_km = points
        .iter()
        .map(|a| {
            points
                .iter()
                .map(|b| match (a, b) {
                    (Some(a), Some(b)) => haversine(*a, *b) / 1000.0,
                    _ => f64::NAN,
                })
                .collect()
        })
        .collect();
    let places = top
        .locations
        .iter()
        .zip(&points)
        .map(|(l, p)| PlaceView {
            name: l.name.clone(),
            lat: p.map_or(f64::NAN, |p| p.lat()),
            lon: p.map_or(f64::NAN, |p| p.lon()),
            events: l.count,
        })
        .collect();
    Ok(DecayView {
        places,
        distances_km,
        surrogate: crisis_netkit::spatial::surrogate_model(&frequency),
        frequency,
        decay,
    })
}

/// Synthetic gravity scenario: location-pair communication counts, the
/// distance-decay curve and surrogate edge widths.
#[wasm_bindgen]
pub fn distance_decay(n_users: u32, n_locations: u32, gravity_exponent: f64, seed: u32) -> String {
    to_json(decay_view(
        n_users as usize,
        n_locations as usize,
        gravity_exponent,
        seed as u64,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activity_view_covers_every_kind() {
        let v = activity_view(2000, 3, 0.3, 1).unwrap();
        assert_eq!(v.kinds.len(), 4);
        for k in &v.kinds {
            let k = k.as_ref().unwrap();
            assert!(k.kde.len() <= MAX_CURVE_POINTS && k.kde.len() > 10);
            assert!(k.lambda.is_finite());
        }
    }

    #[test]
    fn tail_view_recovers_exponent() {
        let v = tail_view(2.2, 5000, false, 100, 4).unwrap();
        assert!((v.alpha - 2.2).abs() < 0.1);
        assert!(v.p_value > 0.01);
        let e = tail_view(2.2, 5000, true, 100, 4).unwrap();
        assert!(e.p_value <= 0.01);
    }

    #[test]
    fn decay_view_is_square() {
        let v = decay_view(3000, 4, 1.5, 2).unwrap();
        assert_eq!(v.places.len(), 4);
        assert_eq!(v.distances_km.len(), 4);
        assert_eq!(v.frequency.size(), 4);
        assert!(v.distances_km[0][0] == 0.0);
        assert!(!v.surrogate.is_empty());
    }

    #[test]
    fn errors_are_json() {
        let out = power_law_tail(0.5, 100, false, 100, 1);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v["error"].is_string());
        let ok: serde_json::Value = serde_json::from_str(&distance_decay(1000, 3, 1.0, 1)).unwrap();
        assert!(ok.get("error").is_none());
    }
}
