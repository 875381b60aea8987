use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::InfluenceError;
use crate::synth::power_law_quantile;

pub const DEFAULT_BINS: usize = 500;
pub const DEFAULT_REPLICATES: usize = 1000;
pub const MIN_TAIL: usize = 50;
pub const MIN_REPLICATES: usize = 100;
/// Goodness-of-fit threshold on the bootstrap p-value.
pub const P_VALUE_THRESHOLD: f64 = 0.01;
/// Pooled final-day exponent reported for the original corpora; kept only as
/// a comparison constant.
pub const REFERENCE_ALPHA: f64 = 1.9825;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedScores {
    /// Scores at or above `x_min_raw`, divided by it.
    pub values: Vec<f64>,
    pub x_min_raw: f64,
    pub bin_width: f64,
    /// Scores below the lower bound.
    pub excluded: usize,
}

/// Divides scores by the lower edge of the second-lowest occupied bin of a
/// `bins`-bin linear histogram over `[min, max]`. Scores in lower bins are
/// dropped and counted.
pub fn normalize_scores(scores: &[f64], bins: usize) -> Result<NormalizedScores, InfluenceError> {
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 || bins < 2 {
        return Err(InfluenceError::DegenerateDistribution {
            occupied_bins: distinct.len().min(1),
        });
    }
    let (lo, hi) = (distinct[0], distinct[distinct.len() - 1]);
    let width = (hi - lo) / bins as f64;
    let bin_of = |s: f64| (((s - lo) / width) as usize).min(bins - 1);

    let mut occupied: Vec<usize> = distinct.iter().map(|&s| bin_of(s)).collect();
    occupied.dedup();
    if occupied.len() < 2 {
        return Err(InfluenceError::DegenerateDistribution {
            occupied_bins: occupied.len(),
        });
    }
    let second = occupied[1];
    let x_min_raw = lo + width * second as f64;

    let mut values = Vec::new();
    let mut excluded = 0;
    for &s in scores {
        if bin_of(s) >= second {
            // rounding at the bin edge can put a member a hair below it
            values.push((s / x_min_raw).max(1.0));
        } else {
            excluded += 1;
        }
    }
    Ok(NormalizedScores {
        values,
        x_min_raw,
        bin_width: width,
        excluded,
    })
}

/// Closed-form continuous MLE `1 + n / Σ ln(x / x_min)`.
pub fn alpha_mle(values: &[f64], x_min: f64) -> Result<f64, InfluenceError> {
    if values.is_empty() {
        return Err(InfluenceError::InsufficientTail {
            n_tail: 0,
            needed: 1,
        });
    }
    let mut log_sum = 0.0;
    for &x in values {
        if !(x >= x_min) {
            return Err(InfluenceError::Domain(x));
        }
        log_sum += (x / x_min).ln();
    }
    if log_sum <= 0.0 {
        return Err(InfluenceError::FlatTail);
    }
    Ok(1.0 + values.len() as f64 / log_sum)
}

pub fn power_law_cdf(x: f64, alpha: f64, x_min: f64) -> f64 {
    if x <= x_min {
        0.0
    } else {
        1.0 - (x / x_min).powf(1.0 - alpha)
    }
}

/// Sup-norm distance between the empirical CDF of `sorted` and the fitted
/// power-law CDF.
fn ks_sorted(sorted: &[f64], alpha: f64, x_min: f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = power_law_cdf(x, alpha, x_min);
            (((i + 1) as f64 / n) - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

pub fn ks_statistic(values: &[f64], alpha: f64, x_min: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    ks_sorted(&sorted, alpha, x_min)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub x_min: f64,
    pub n_tail: usize,
    pub ks_statistic: f64,
    /// Filled in by the bootstrap test.
    pub p_value: Option<f64>,
    pub replicates: usize,
}

/// Fits normalized values (all `>= 1`) with the lower bound fixed at 1.
pub fn fit_power_law(values: &[f64]) -> Result<PowerLawFit, InfluenceError> {
    if values.len() < MIN_TAIL {
        return Err(InfluenceError::InsufficientTail {
            n_tail: values.len(),
            needed: MIN_TAIL,
        });
    }
    let alpha = alpha_mle(values, 1.0)?;
    Ok(PowerLawFit {
        alpha,
        x_min: 1.0,
        n_tail: values.len(),
        ks_statistic: ks_statistic(values, alpha, 1.0),
        p_value: None,
        replicates: 0,
    })
}

/// Parametric bootstrap: each replicate draws `n_tail` values from the
/// fitted law on its own ChaCha stream, refits the exponent and measures its
/// KS distance. Returns the share of replicate distances at or above the
/// empirical one.
pub fn ks_gof(
    values: &[f64],
    fit: &PowerLawFit,
    replicates: usize,
    seed: u64,
) -> Result<f64, InfluenceError> {
    if replicates < MIN_REPLICATES {
        return Err(InfluenceError::TooFewReplicates {
            needed: MIN_REPLICATES,
            got: replicates,
        });
    }
    let empirical = ks_statistic(values, fit.alpha, fit.x_min);
    let n = values.len();
    let replicate = |r: usize| -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let sample: Vec<f64> = sorted_uniforms(&mut rng, n)
            .into_iter()
            .map(|u| power_law_quantile(u, fit.alpha, fit.x_min))
            .collect();
        match alpha_mle(&sample, fit.x_min) {
            Ok(a) => ks_sorted(&sample, a, fit.x_min),
            Err(_) => f64::INFINITY,
        }
    };
    #[cfg(feature = "parallel")]
    let distances: Vec<f64> = {
        use rayon::prelude::*;
        (0..replicates).into_par_iter().map(replicate).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let distances: Vec<f64> = (0..replicates).map(replicate).collect();

    let hits = distances.iter().filter(|&&d| d >= empirical).count();
    Ok(hits as f64 / replicates as f64)
}

/// Order statistics of `n` uniforms from normalized exponential spacings,
/// which avoids sorting the sample.
fn sorted_uniforms<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut spacing = || -(1.0 - rng.gen::<f64>()).ln();
    let mut acc = 0.0;
    let mut cum: Vec<f64> = (0..n)
        .map(|_| {
            acc += spacing();
            acc
        })
        .collect();
    let total = acc + spacing();
    for c in &mut cum {
        *c /= total;
    }
    cum
}

pub fn fit_with_gof(
    values: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<PowerLawFit, InfluenceError> {
    let mut fit = fit_power_law(values)?;
    fit.p_value = Some(ks_gof(values, &fit, replicates, seed)?);
    fit.replicates = replicates;
    Ok(fit)
}

/// Step curve `(X, Pr(x >= X))` over the sorted distinct values.
pub fn ccdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        if out.last().is_none_or(|&(prev, _)| prev != x) {
            out.push((x, (sorted.len() - i) as f64 / n));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_case_alpha() {
        let a = alpha_mle(&[1.0, 2.0, 4.0], 1.0).unwrap();
        assert!((a - (1.0 + 1.0 / 2f64.ln())).abs() < 1e-12);
        assert!((a - 2.4427).abs() < 1e-4);
    }

    #[test]
    fn alpha_errors() {
        assert_eq!(alpha_mle(&[1.0, 1.0], 1.0), Err(InfluenceError::FlatTail));
        assert_eq!(
            alpha_mle(&[0.5, 2.0], 1.0),
            Err(InfluenceError::Domain(0.5))
        );
        assert!(matches!(
            fit_power_law(&[2.0; 49]),
            Err(InfluenceError::InsufficientTail {
                n_tail: 49,
                needed: 50
            })
        ));
    }

    #[test]
    fn second_occupied_bin() {
        // width 0.1 over [0, 1] with 10 bins; occupied bins 0, 1, 4 and 9
        let scores = [0.0, 0.0, 0.0, 0.12, 0.45, 1.0];
        let norm = normalize_scores(&scores, 10).unwrap();
        assert!((norm.x_min_raw - 0.1).abs() < 1e-12);
        assert_eq!(norm.excluded, 3);
        assert_eq!(norm.values.len(), 3);
        assert!(norm.values.iter().all(|&v| v >= 1.0));
        assert!((norm.values[2] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn gap_before_second_bin() {
        // width 0.05, occupied bins {0, 1, 9}: lower edge of bin 1
        let scores = [0.0, 0.07, 0.45, 0.5];
        let norm = normalize_scores(&scores, 10).unwrap();
        assert!((norm.x_min_raw - 0.05).abs() < 1e-12);
        // width 0.1, occupied bins {0, 4, 9}: lower edge of bin 4
        let scores = [0.0, 0.45, 1.0];
        let norm = normalize_scores(&scores, 10).unwrap();
        assert!((norm.x_min_raw - 0.4).abs() < 1e-12);
    }

    #[test]
    fn degenerate_scores() {
        assert!(matches!(
            normalize_scores(&[0.2, 0.2, 0.3], 500),
            Err(InfluenceError::DegenerateDistribution { .. })
        ));
    }

    #[test]
    fn ccdf_example() {
        assert_eq!(ccdf(&[1.0, 2.0, 1.0]), vec![(1.0, 1.0), (2.0, 1.0 / 3.0)]);
    }

    #[test]
    fn bootstrap_needs_replicates() {
        let v: Vec<f64> = (1..=60).map(|i| i as f64).collect();
        let fit = fit_power_law(&v).unwrap();
        assert!(matches!(
            ks_gof(&v, &fit, 10, 1),
            Err(InfluenceError::TooFewReplicates { .. })
        ));
    }

    proptest! {
        #[test]
        fn ccdf_is_decreasing(v in prop::collection::vec(1.0f64..100.0, 1..80)) {
            let c = ccdf(&v);
            prop_assert_eq!(c[0].1, 1.0);
            for w in c.windows(2) {
                prop_assert!(w[1].0 > w[0].0);
                prop_assert!(w[1].1 < w[0].1);
            }
        }

        #[test]
        fn normalized_values_at_least_one(v in prop::collection::vec(1e-6f64..1.0, 3..200)) {
            if let Ok(n) = normalize_scores(&v, 500) {
                prop_assert!(n.values.iter().all(|&x| x >= 1.0));
                prop_assert_eq!(n.values.len() + n.excluded, v.len());
            }
        }
    }
}
