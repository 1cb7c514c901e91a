//! Generalized-Pareto tail experiment: how sample quantiles and sample
//! expectiles react when every value above the quantile is pushed further
//! into the tail.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::risk::{
    expectile_level_of_value_with, return_period_from_value, sample_expectile_with,
    sample_quantiles, Level, Sample,
};

/// Identifier of the sampling scheme recorded in every report.
pub const GENERATOR_ID: &str = "chacha8-u64seed-stream-per-65536-chunk/inverse-cdf";

/// Levels below the experiment level at which deltas are tracked.
pub const DELTA_LEVELS: [f64; 4] = [0.5, 0.75, 0.9, 0.95];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GpParams {
    pub mu: f64,
    pub sigma: f64,
    pub xi: f64,
}

impl GpParams {
    pub fn new(mu: f64, sigma: f64, xi: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) || !xi.is_finite() || !mu.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "GP parameters need finite mu, xi and sigma > 0 (mu={mu}, sigma={sigma}, xi={xi})"
            )));
        }
        Ok(GpParams { mu, sigma, xi })
    }

    /// Analytic mean, finite for `xi < 1`.
    pub fn mean(&self) -> Option<f64> {
        (self.xi < 1.0).then(|| self.mu + self.sigma / (1.0 - self.xi))
    }
}

const XI_ZERO: f64 = 1e-12;

/// GP quantile function.
pub fn gp_inverse_cdf(p: f64, params: &GpParams) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "probability must lie in [0, 1), got {p}"
        )));
    }
    Ok(inverse_cdf_unchecked(p, params))
}

#[inline]
fn inverse_cdf_unchecked(p: f64, g: &GpParams) -> f64 {
    if g.xi.abs() < XI_ZERO {
        g.mu - g.sigma * (-p).ln_1p()
    } else {
        g.mu + g.sigma * ((1.0 - p).powf(-g.xi) - 1.0) / g.xi
    }
}

/// GP distribution function.
pub fn gp_cdf(x: f64, g: &GpParams) -> f64 {
    if x <= g.mu {
        return 0.0;
    }
    let z = (x - g.mu) / g.sigma;
    if g.xi.abs() < XI_ZERO {
        -(-z).exp_m1()
    } else {
        let base = 1.0 + g.xi * z;
        if base <= 0.0 {
            // beyond the upper endpoint for xi < 0
            1.0
        } else {
            1.0 - base.powf(-1.0 / g.xi)
        }
    }
}

/// Inverse-transform GP sample. Chunk `i` of `CHUNK` draws uses stream `i`
/// of a ChaCha8 generator seeded from `seed`, so output does not depend on
/// the execution strategy.
pub fn gp_sample(params: &GpParams, n: usize, seed: u64) -> Result<Sample> {
    gp_sample_with(params, n, seed, Execution::default())
}

pub fn gp_sample_with(params: &GpParams, n: usize, seed: u64, exec: Execution) -> Result<Sample> {
    if n == 0 {
        return Err(Error::EmptyInput("GP sample size"));
    }
    let mut out = vec![0.0; n];
    exec.fill_chunks(&mut out, |chunk, slot| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        for v in slot.iter_mut() {
            let u: f64 = rng.random();
            *v = inverse_cdf_unchecked(u, params);
        }
    });
    Sample::new(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelDelta {
    pub level: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub params: GpParams,
    pub level: f64,
    pub shift: f64,
    pub n: usize,
    pub seed: u64,
    pub generator: &'static str,
    pub q_before: f64,
    pub e_before: f64,
    pub q_after: f64,
    pub e_after: f64,
    /// Expectile level of `e_before` in the original and the shifted sample.
    pub level_before: f64,
    pub level_after: f64,
    pub rp_before: f64,
    pub rp_after: f64,
    /// Number of values that received the shift.
    pub n_shifted: usize,
    pub lower_level_quantile_deltas: Vec<LevelDelta>,
    pub all_level_expectile_deltas: Vec<LevelDelta>,
}

pub fn run_tail_experiment(
    params: &GpParams,
    n: usize,
    level: Level,
    shift: f64,
    seed: u64,
) -> Result<TailReport> {
    run_tail_experiment_with(params, n, level, shift, seed, Execution::default())
}

pub fn run_tail_experiment_with(
    params: &GpParams,
    n: usize,
    level: Level,
    shift: f64,
    seed: u64,
    exec: Execution,
) -> Result<TailReport> {
    if !(shift > 0.0 && shift.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "shift must be positive and finite, got {shift}"
        )));
    }
    let before = gp_sample_with(params, n, seed, exec)?;
    let delta_levels: Vec<Level> = DELTA_LEVELS
        .iter()
        .map(|&v| Level::new(v))
        .collect::<Result<_>>()?;
    let mut q_levels = delta_levels.clone();
    q_levels.push(level);

    let q_all_before = sample_quantiles(&before, &q_levels);
    let q_before = q_all_before[q_levels.len() - 1];
    let e_before = sample_expectile_with(&before, level, exec);
    let e_lower_before: Vec<f64> = delta_levels
        .iter()
        .map(|&t| sample_expectile_with(&before, t, exec))
        .collect();
    let level_before = expectile_level_of_value_with(&before, e_before, exec).value;

    let mut shifted = before.into_values();
    let n_shifted = shifted.iter().filter(|&&x| x > q_before).count();
    exec.fill_chunks(&mut shifted, |_, c| {
        for x in c.iter_mut().filter(|x| **x > q_before) {
            *x += shift;
        }
    });
    let after = Sample::new(shifted)?;

    let q_all_after = sample_quantiles(&after, &q_levels);
    let q_after = q_all_after[q_levels.len() - 1];
    let e_after = sample_expectile_with(&after, level, exec);
    let level_after = expectile_level_of_value_with(&after, e_before, exec).value;

    let lower_level_quantile_deltas = delta_levels
        .iter()
        .enumerate()
        .map(|(i, l)| LevelDelta {
            level: l.value(),
            delta: q_all_after[i] - q_all_before[i],
        })
        .collect();
    let mut all_level_expectile_deltas: Vec<LevelDelta> = delta_levels
        .iter()
        .zip(&e_lower_before)
        .map(|(l, &eb)| LevelDelta {
            level: l.value(),
            delta: sample_expectile_with(&after, *l, exec) - eb,
        })
        .collect();
    all_level_expectile_deltas.push(LevelDelta {
        level: level.value(),
        delta: e_after - e_before,
    });

    Ok(TailReport {
        params: *params,
        level: level.value(),
        shift,
        n,
        seed,
        generator: GENERATOR_ID,
        q_before,
        e_before,
        q_after,
        e_after,
        level_before,
        level_after,
        rp_before: return_period_from_value(level_before),
        rp_after: return_period_from_value(level_after),
        n_shifted,
        lower_level_quantile_deltas,
        all_level_expectile_deltas,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

/// Fixed-width histogram over `[lo, hi)`; values outside are dropped
/// (display truncation), and their count is returned alongside the bins.
pub fn truncated_histogram(
    values: &[f64],
    lo: f64,
    hi: f64,
    width: f64,
) -> Result<(Vec<HistBin>, u64)> {
    if !(width > 0.0) || !(hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "histogram needs width > 0 and hi > lo (lo={lo}, hi={hi}, width={width})"
        )));
    }
    let n_bins = ((hi - lo) / width).round().max(1.0) as usize;
    let mut counts = vec![0u64; n_bins];
    let mut dropped = 0u64;
    for &x in values {
        if x < lo || x >= hi {
            dropped += 1;
            continue;
        }
        let i = (((x - lo) / width) as usize).min(n_bins - 1);
        counts[i] += 1;
    }
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistBin {
            lo: lo + i as f64 * width,
            hi: lo + (i + 1) as f64 * width,
            count,
        })
        .collect();
    Ok((bins, dropped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::CHUNK;

    fn reference_gp() -> GpParams {
        GpParams::new(0.0, 1.0, 0.2).unwrap()
    }

    #[test]
    fn inverse_cdf_examples() {
        let g = GpParams::new(1.5, 2.0, 0.3).unwrap();
        assert_eq!(gp_inverse_cdf(0.0, &g).unwrap(), 1.5);
        let q = gp_inverse_cdf(0.975, &reference_gp()).unwrap();
        // (0.025^-0.2 - 1) / 0.2
        assert!((q - 5.456_395_525_912_732).abs() < 1e-12, "{q}");
        let e = GpParams::new(0.0, 1.0, 0.0).unwrap();
        assert!((gp_inverse_cdf(0.5, &e).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn inverse_cdf_rejects_out_of_domain() {
        for p in [-0.1, 1.0, 1.2, f64::NAN] {
            assert!(matches!(
                gp_inverse_cdf(p, &reference_gp()),
                Err(Error::Domain(_))
            ));
        }
    }

    #[test]
    fn cdf_inverts_quantile_function() {
        for g in [
            reference_gp(),
            GpParams::new(0.0, 2.0, 0.0).unwrap(),
            GpParams::new(1.0, 1.0, -0.3).unwrap(),
        ] {
            for p in [0.0, 0.1, 0.5, 0.9, 0.999] {
                let x = gp_inverse_cdf(p, &g).unwrap();
                assert!((gp_cdf(x, &g) - p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn params_validated() {
        assert!(GpParams::new(0.0, 0.0, 0.2).is_err());
        assert!(GpParams::new(0.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn sample_is_deterministic_and_strategy_independent() {
        let a = gp_sample_with(&reference_gp(), 3 * CHUNK + 11, 7, Execution::Sequential).unwrap();
        let b = gp_sample_with(&reference_gp(), 3 * CHUNK + 11, 7, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let c = gp_sample(&reference_gp(), 1000, 8).unwrap();
        assert_ne!(&a.values()[..1000], c.values());
        assert!(matches!(
            gp_sample(&reference_gp(), 0, 1),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn experiment_rejects_non_positive_shift() {
        let r = run_tail_experiment(&reference_gp(), 100, Level::new(0.9).unwrap(), 0.0, 1);
        assert!(r.is_err());
    }

    #[test]
    fn small_experiment_keeps_quantiles_and_raises_expectiles() {
        let rep = run_tail_experiment(&reference_gp(), 20_000, Level::new(0.975).unwrap(), 0.1, 3)
            .unwrap();
        assert_eq!(rep.q_after, rep.q_before);
        assert!(rep.e_after > rep.e_before);
        assert!(rep
            .lower_level_quantile_deltas
            .iter()
            .all(|d| d.delta == 0.0));
        assert!(rep.all_level_expectile_deltas.iter().all(|d| d.delta > 0.0));
        assert!(rep.rp_after < rep.rp_before);
        assert_eq!(rep.n_shifted, 500);
    }

    #[test]
    fn histogram_drops_outside_values() {
        let (bins, dropped) =
            truncated_histogram(&[0.05, 0.15, 0.15, 7.99, 8.0, 12.0], 0.0, 8.0, 0.1).unwrap();
        assert_eq!(bins.len(), 80);
        assert_eq!(bins[0].count, 1);
        assert_eq!(bins[1].count, 2);
        assert_eq!(bins[79].count, 1);
        assert_eq!(dropped, 2);
    }
}
