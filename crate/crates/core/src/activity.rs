//! Per-user activity proportions and their distributional summary.
//!
//! For each activity kind, users whose proportion is strictly between 0 and
//! 1 are mapped through `-ln r`, normalized with a Box-Cox power transform
//! whose exponent maximizes the normal profile likelihood, and summarized by
//! a Gaussian kernel density estimate and normal Q-Q points.

use std::collections::HashMap;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::ingest::{ActivityKind, DayBucket, EventRecord};
use crate::stats::mean_variance;

pub const DEFAULT_BANDWIDTH: f64 = 0.3;
pub const KDE_GRID_POINTS: usize = 512;
const KDE_MAX_GRID_POINTS: usize = 1 << 16;
pub const LAMBDA_BOUNDS: (f64, f64) = (-5.0, 5.0);
pub const LAMBDA_TOLERANCE: f64 = 1e-5;
pub const MIN_BOXCOX_SAMPLES: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum ActivityError {
    #[error("value {0} is outside the transform domain (must be > 0)")]
    Domain(f64),
    #[error("need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("constant input gives a flat likelihood")]
    FlatLikelihood,
    #[error("zero-variance sample")]
    Degenerate,
    #[error("bandwidth must be positive, got {0}")]
    Bandwidth(f64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityProfile {
    pub user_id: String,
    pub counts: [u64; 4],
}

impl ActivityProfile {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn proportion(&self, kind: ActivityKind) -> f64 {
        self.counts[kind.index()] as f64 / self.total() as f64
    }
}

/// Profiles over events from every bucket up to and including `day`.
pub fn activity_proportions(buckets: &[DayBucket], day: usize) -> Vec<ActivityProfile> {
    profiles_from_events(buckets.iter().take(day + 1).flat_map(|b| b.events.iter()))
}

/// One profile per acting user, in first-appearance order.
pub fn profiles_from_events<'a, I>(events: I) -> Vec<ActivityProfile>
where
    I: IntoIterator<Item = &'a EventRecord>,
{
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut out: Vec<ActivityProfile> = Vec::new();
    for ev in events {
        let slot = *index.entry(ev.user_id.as_str()).or_insert_with(|| {
            out.push(ActivityProfile {
                user_id: ev.user_id.clone(),
                counts: [0; 4],
            });
            out.len() - 1
        });
        out[slot].counts[ev.kind.index()] += 1;
    }
    out
}

pub fn neg_log_transform(r: f64) -> Result<f64, ActivityError> {
    if r > 0.0 && r.is_finite() {
        Ok(-r.ln())
    } else {
        Err(ActivityError::Domain(r))
    }
}

/// Box-Cox transform of one positive value. `expm1` keeps the small-λ
/// branch continuous with the logarithm.
pub fn boxcox(value: f64, lambda: f64) -> f64 {
    let ln = value.ln();
    if lambda == 0.0 {
        ln
    } else {
        (lambda * ln).exp_m1() / lambda
    }
}

fn check_positive(values: &[f64]) -> Result<(), ActivityError> {
    match values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        Some(&v) => Err(ActivityError::Domain(v)),
        None => Ok(()),
    }
}

/// Normal profile log-likelihood of the Box-Cox model (additive constants
/// dropped): `-n/2 ln σ²(λ) + (λ - 1) Σ ln x`.
pub fn boxcox_log_likelihood(values: &[f64], lambda: f64) -> f64 {
    let n = values.len() as f64;
    let transformed: Vec<f64> = values.iter().map(|&v| boxcox(v, lambda)).collect();
    let (_, var) = mean_variance(&transformed).unwrap_or((0.0, 0.0));
    let log_sum: f64 = values.iter().map(|v| v.ln()).sum();
    -0.5 * n * var.ln() + (lambda - 1.0) * log_sum
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxCoxFit {
    pub lambda: f64,
    pub log_likelihood: f64,
    pub transformed: Vec<f64>,
}

pub fn boxcox_with_lambda(values: &[f64], lambda: f64) -> Result<Vec<f64>, ActivityError> {
    check_positive(values)?;
    Ok(values.iter().map(|&v| boxcox(v, lambda)).collect())
}

/// Maximum-likelihood Box-Cox exponent by golden-section search on
/// [`LAMBDA_BOUNDS`].
pub fn boxcox_mle(values: &[f64]) -> Result<BoxCoxFit, ActivityError> {
    if values.len() < MIN_BOXCOX_SAMPLES {
        return Err(ActivityError::InsufficientData {
            needed: MIN_BOXCOX_SAMPLES,
            got: values.len(),
        });
    }
    check_positive(values)?;
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return Err(ActivityError::FlatLikelihood);
    }
    let ll = |l: f64| boxcox_log_likelihood(values, l);
    let lambda = golden_section_max(ll, LAMBDA_BOUNDS.0, LAMBDA_BOUNDS.1, LAMBDA_TOLERANCE);
    Ok(BoxCoxFit {
        lambda,
        log_likelihood: ll(lambda),
        transformed: values.iter().map(|&v| boxcox(v, lambda)).collect(),
    })
}

pub(crate) fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        // NaN likelihoods (overflowing powers) compare as worse
        if fc > fd || fd.is_nan() {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KdeGrid {
    pub bandwidth: f64,
    pub points: Vec<(f64, f64)>,
}

fn gaussian(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Density estimate at a single point.
pub fn kde_density(values: &[f64], bandwidth: f64, y: f64) -> f64 {
    let sum: f64 = values.iter().map(|&v| gaussian((y - v) / bandwidth)).sum();
    sum / (values.len() as f64 * bandwidth)
}

/// Gaussian kernel density estimate on a uniform grid spanning
/// `[min - 4h, max + 4h]`. The grid has [`KDE_GRID_POINTS`] points, more when
/// the data range needs them to keep the spacing at or below `h / 2`.
pub fn kde(values: &[f64], bandwidth: f64) -> Result<KdeGrid, ActivityError> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(ActivityError::Bandwidth(bandwidth));
    }
    if values.is_empty() {
        return Err(ActivityError::InsufficientData { needed: 1, got: 0 });
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min) - 4.0 * bandwidth;
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 4.0 * bandwidth;
    let needed = ((hi - lo) / (bandwidth / 2.0)).ceil() as usize + 1;
    let count = needed.clamp(KDE_GRID_POINTS, KDE_MAX_GRID_POINTS);
    let step = (hi - lo) / (count - 1) as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // kernel mass beyond 9h is below 1e-18
    let reach = 9.0 * bandwidth;
    let scale = 1.0 / (values.len() as f64 * bandwidth);
    let points = (0..count)
        .map(|i| {
            let y = lo + step * i as f64;
            let from = sorted.partition_point(|&v| v < y - reach);
            let to = sorted.partition_point(|&v| v <= y + reach);
            let sum: f64 = sorted[from..to]
                .iter()
                .map(|&v| gaussian((y - v) / bandwidth))
                .sum();
            (y, sum * scale)
        })
        .collect();
    Ok(KdeGrid { bandwidth, points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QqScale {
    /// Sample standardized to mean 0, variance 1 before pairing.
    Standardized,
    /// Sample used as given.
    Raw,
}

/// Sorted sample paired with standard-normal quantiles at plotting
/// positions `(i - 0.5) / n`.
pub fn qq_normal(values: &[f64], scale: QqScale) -> Result<Vec<(f64, f64)>, ActivityError> {
    if values.len() < 3 {
        return Err(ActivityError::InsufficientData {
            needed: 3,
            got: values.len(),
        });
    }
    let (mean, var) = mean_variance(values).expect("non-empty");
    if var == 0.0 {
        return Err(ActivityError::Degenerate);
    }
    let mut sample: Vec<f64> = match scale {
        QqScale::Standardized => {
            let sd = var.sqrt();
            values.iter().map(|v| (v - mean) / sd).collect()
        }
        QqScale::Raw => values.to_vec(),
    };
    sample.sort_by(f64::total_cmp);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let n = sample.len() as f64;
    Ok(sample
        .into_iter()
        .enumerate()
        .map(|(i, s)| (normal.inverse_cdf((i as f64 + 0.5) / n), s))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformSummary {
    #[serde(skip)]
    pub kind: ActivityKind,
    pub lambda: f64,
    pub n: usize,
    pub excluded_low: usize,
    pub excluded_high: usize,
    pub bandwidth: f64,
    pub kde: Vec<(f64, f64)>,
    pub qq: Vec<(f64, f64)>,
    pub mean: f64,
    pub variance: f64,
    #[serde(skip)]
    pub transformed: Vec<f64>,
}

/// Full transform pipeline for one kind. Users at proportion 0 or 1 are
/// counted but left out of the fit.
pub fn transform_summary(
    profiles: &[ActivityProfile],
    kind: ActivityKind,
    bandwidth: f64,
) -> Result<TransformSummary, ActivityError> {
    let (mut excluded_low, mut excluded_high) = (0, 0);
    let mut scaled = Vec::new();
    for p in profiles.iter().filter(|p| p.total() > 0) {
        let c = p.counts[kind.index()];
        if c == 0 {
            excluded_low += 1;
        } else if c == p.total() {
            excluded_high += 1;
        } else {
            scaled.push(neg_log_transform(p.proportion(kind))?);
        }
    }
    let fit = boxcox_mle(&scaled)?;
    let grid = kde(&fit.transformed, bandwidth)?;
    let qq = qq_normal(&fit.transformed, QqScale::Standardized)?;
    let (mean, variance) = mean_variance(&fit.transformed).expect("non-empty");
    Ok(TransformSummary {
        kind,
        lambda: fit.lambda,
        n: scaled.len(),
        excluded_low,
        excluded_high,
        bandwidth,
        kde: grid.points,
        qq,
        mean,
        variance,
        transformed: fit.transformed,
    })
}
