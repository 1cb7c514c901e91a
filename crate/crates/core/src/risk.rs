//! Quantile and expectile losses, their empirical estimators, and the
//! expectile-level diagnostic.
//!
//! Ties count as "at or below" throughout: the indicator is `x <= r`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;

/// A probability level in the open interval (0, 1), used both as a quantile
/// level and as an expectile level.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Level(f64);

impl Level {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Level(value))
        } else {
            Err(Error::InvalidArgument(format!(
                "level must lie in (0, 1), got {value}"
            )))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Level {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Level::new(value)
    }
}

impl From<Level> for f64 {
    fn from(level: Level) -> f64 {
        level.0
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which asymmetric loss a calibration or evaluation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Expectile,
    Quantile,
}

impl LossKind {
    /// Loss of prediction `r` for materialization `x`. Inputs are assumed finite.
    #[inline]
    pub fn eval(self, r: f64, x: f64, level: Level) -> f64 {
        match self {
            LossKind::Expectile => expectile_loss_unchecked(r, x, level.0),
            LossKind::Quantile => quantile_loss_unchecked(r, x, level.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::Expectile => "expectile",
            LossKind::Quantile => "quantile",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "expectile" => Ok(LossKind::Expectile),
            "quantile" => Ok(LossKind::Quantile),
            _ => Err(Error::InvalidArgument(format!(
                "unknown loss kind '{s}' (expected 'expectile' or 'quantile')"
            ))),
        }
    }
}

/// A non-empty collection of finite materializations.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample(Vec<f64>);

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("sample"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample value at index {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Sample(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }
}

/// An observation together with its prediction, both finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionPair {
    pub observed: f64,
    pub predicted: f64,
}

impl PredictionPair {
    pub fn new(observed: f64, predicted: f64) -> Result<Self> {
        check_finite(&[("observed", observed), ("predicted", predicted)])?;
        Ok(PredictionPair {
            observed,
            predicted,
        })
    }

    pub fn loss(&self, kind: LossKind, level: Level) -> f64 {
        kind.eval(self.predicted, self.observed, level)
    }
}

fn check_finite(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "{name} is not finite ({v})"
            )));
        }
    }
    Ok(())
}

#[inline]
fn indicator(x: f64, r: f64) -> f64 {
    if x <= r {
        1.0
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn quantile_loss_unchecked(r: f64, x: f64, a: f64) -> f64 {
    (r - x) * (indicator(x, r) - a)
}

#[inline]
pub(crate) fn expectile_loss_unchecked(r: f64, x: f64, tau: f64) -> f64 {
    let d = r - x;
    d * d * (indicator(x, r) - tau).abs()
}

/// Pinball loss `(r - x)(1{x <= r} - a)` of predictive quantile `r`.
pub fn quantile_loss(r: f64, x: f64, a: Level) -> Result<f64> {
    check_finite(&[("r", r), ("x", x)])?;
    Ok(quantile_loss_unchecked(r, x, a.0))
}

/// Asymmetric squared loss `(r - x)^2 |1{x <= r} - tau|` of predictive expectile `r`.
pub fn expectile_loss(r: f64, x: f64, tau: Level) -> Result<f64> {
    check_finite(&[("r", r), ("x", x)])?;
    Ok(expectile_loss_unchecked(r, x, tau.0))
}

/// Smallest `k` in `1..=n` with `k / n >= a`.
fn quantile_rank(n: usize, a: f64) -> usize {
    let nf = n as f64;
    let mut k = ((a * nf).ceil() as usize).clamp(1, n);
    while k > 1 && (k - 1) as f64 / nf >= a {
        k -= 1;
    }
    while k < n && (k as f64) / nf < a {
        k += 1;
    }
    k
}

/// Left-continuous inverse of the empirical CDF: the smallest order
/// statistic `x_(k)` with `k/n >= a`. No interpolation.
pub fn sample_quantile(s: &Sample, a: Level) -> f64 {
    let k = quantile_rank(s.len(), a.0);
    let mut scratch = s.0.clone();
    let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

/// Sample quantiles at several levels from one sort.
pub fn sample_quantiles(s: &Sample, levels: &[Level]) -> Vec<f64> {
    let mut sorted = s.0.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    levels
        .iter()
        .map(|a| sorted[quantile_rank(sorted.len(), a.0) - 1])
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
struct SplitSums {
    n_above: f64,
    sum_above: f64,
    n_below: f64,
    sum_below: f64,
}

impl SplitSums {
    fn of(values: &[f64], e: f64) -> Self {
        let mut acc = SplitSums::default();
        for &x in values {
            if x <= e {
                acc.n_below += 1.0;
                acc.sum_below += x;
            } else {
                acc.n_above += 1.0;
                acc.sum_above += x;
            }
        }
        acc
    }

    fn merge(self, o: Self) -> Self {
        SplitSums {
            n_above: self.n_above + o.n_above,
            sum_above: self.sum_above + o.sum_above,
            n_below: self.n_below + o.n_below,
            sum_below: self.sum_below + o.sum_below,
        }
    }

    fn chunked(values: &[f64], e: f64, exec: Execution) -> Self {
        exec.map_chunks(values, |c| SplitSums::of(c, e))
            .into_iter()
            .fold(SplitSums::default(), SplitSums::merge)
    }
}

const EXPECTILE_MAX_ITER: usize = 200;
const EXPECTILE_REL_TOL: f64 = 1e-10;

/// Sample expectile: the root of
/// `g(e) = tau * sum (x - e)+ - (1 - tau) * sum (e - x)+`.
///
/// `g` is continuous, piecewise linear and strictly decreasing, so the root
/// is bracketed by `[min, max]`. Each iteration takes the Newton step on the
/// linear piece containing the iterate (which lands exactly on the root once
/// the right piece is found) and falls back to bisection if that step leaves
/// the bracket. Stops once a Newton step stays on its piece or the bracket is
/// narrower than `1e-10 (1 + |e|)`.
pub fn sample_expectile(s: &Sample, tau: Level) -> f64 {
    sample_expectile_with(s, tau, Execution::default())
}

pub fn sample_expectile_with(s: &Sample, tau: Level, exec: Execution) -> f64 {
    let t = tau.0;
    let values = &s.0;
    let (mut lo, mut hi) = (s.min(), s.max());
    if lo == hi {
        return lo;
    }
    let tol = |e: f64| EXPECTILE_REL_TOL * (1.0 + e.abs());
    let mut e = s.mean().clamp(lo, hi);
    // count below the iterate a Newton step was taken from
    let mut newton_from: Option<f64> = None;
    for _ in 0..EXPECTILE_MAX_ITER {
        let sums = SplitSums::chunked(values, e, exec);
        if newton_from == Some(sums.n_below) {
            // the step stayed on its own linear piece, so it hit the root
            return e;
        }
        let g = t * (sums.sum_above - e * sums.n_above)
            - (1.0 - t) * (e * sums.n_below - sums.sum_below);
        if g > 0.0 {
            lo = e;
        } else if g < 0.0 {
            hi = e;
        } else {
            return e;
        }
        if hi - lo <= tol(e) {
            return 0.5 * (lo + hi);
        }
        let slope = t * sums.n_above + (1.0 - t) * sums.n_below;
        let next = (t * sums.sum_above + (1.0 - t) * sums.sum_below) / slope;
        let next = if next >= lo - tol(lo) && next <= hi + tol(hi) {
            newton_from = Some(sums.n_below);
            next.clamp(lo, hi)
        } else {
            newton_from = None;
            0.5 * (lo + hi)
        };
        if next == e {
            return e;
        }
        e = next;
    }
    e
}

/// Expectile as the minimizer of the empirical mean expectile loss, by
/// golden-section search on `[min, max]`. Slow; exists to cross-check
/// [`sample_expectile`] through the argmin characterization.
pub fn expectile_argmin_oracle(s: &Sample, tau: Level) -> f64 {
    let values = &s.0;
    let objective = |r: f64| -> f64 {
        values
            .iter()
            .map(|&x| expectile_loss_unchecked(r, x, tau.0))
            .sum::<f64>()
            / values.len() as f64
    };
    let (mut a, mut b) = (s.min(), s.max());
    if a == b {
        return a;
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while (b - a) > 1e-8 * (1.0 + a.abs().max(b.abs())) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    0.5 * (a + b)
}

/// An expectile level estimate. `degenerate` is set when every deviation is
/// zero, in which case `value` is 0.5 by convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectileLevel {
    pub value: f64,
    pub degenerate: bool,
}

impl ExpectileLevel {
    fn from_masses(below: f64, total: f64) -> Self {
        if total > 0.0 {
            ExpectileLevel {
                value: (below / total).clamp(0.0, 1.0),
                degenerate: false,
            }
        } else {
            ExpectileLevel {
                value: 0.5,
                degenerate: true,
            }
        }
    }
}

/// `sum |x - e| 1{x <= e} / sum |x - e|`: the level at which `e` is the
/// sample expectile.
pub fn expectile_level_of_value(s: &Sample, e: f64) -> ExpectileLevel {
    expectile_level_of_value_with(s, e, Execution::default())
}

pub fn expectile_level_of_value_with(s: &Sample, e: f64, exec: Execution) -> ExpectileLevel {
    let (below, above) = exec
        .map_chunks(&s.0, |c| {
            c.iter().fold((0.0, 0.0), |(b, a), &x| {
                if x <= e {
                    (b + (e - x), a)
                } else {
                    (b, a + (x - e))
                }
            })
        })
        .into_iter()
        .fold((0.0, 0.0), |(b, a), (cb, ca)| (b + cb, a + ca));
    ExpectileLevel::from_masses(below, below + above)
}

/// Expectile level of observations relative to paired predictions:
/// `sum |x_t - r_t| 1{x_t <= r_t} / sum |x_t - r_t|`.
pub fn prediction_expectile_level(observed: &[f64], predicted: &[f64]) -> Result<ExpectileLevel> {
    if observed.len() != predicted.len() {
        return Err(Error::Alignment(format!(
            "{} observations vs {} predictions",
            observed.len(),
            predicted.len()
        )));
    }
    let (below, total) = observed
        .iter()
        .zip(predicted)
        .fold((0.0, 0.0), |(b, t), (&x, &r)| {
            let d = (x - r).abs();
            (b + d * indicator(x, r), t + d)
        });
    Ok(ExpectileLevel::from_masses(below, total))
}

/// Return period `1 / (1 - level)` in units of the sampling interval.
pub fn return_period_from_level(level: Level) -> f64 {
    1.0 / (1.0 - level.0)
}

/// Return period for a level that may sit on the closed interval [0, 1];
/// infinite at 1.
pub fn return_period_from_value(level: f64) -> f64 {
    1.0 / (1.0 - level)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(v: f64) -> Level {
        Level::new(v).unwrap()
    }

    fn sample(v: &[f64]) -> Sample {
        Sample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn level_rejects_closed_endpoints() {
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(Level::new(bad).is_err(), "{bad}");
        }
        assert_eq!(lv(0.975).value(), 0.975);
    }

    #[test]
    fn sample_rejects_empty_and_non_finite() {
        assert!(matches!(Sample::new(vec![]), Err(Error::EmptyInput(_))));
        assert!(Sample::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(Sample::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn quantile_loss_examples() {
        assert!((quantile_loss(1.0, 0.0, lv(0.95)).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(quantile_loss(3.7, 3.7, lv(0.25)).unwrap(), 0.0);
        assert!((quantile_loss(-1.0, 0.0, lv(0.95)).unwrap() - 0.95).abs() < 1e-15);
        assert!(quantile_loss(f64::NAN, 0.0, lv(0.5)).is_err());
    }

    #[test]
    fn expectile_loss_examples() {
        assert!((expectile_loss(1.0, 0.0, lv(0.95)).unwrap() - 0.05).abs() < 1e-15);
        assert!((expectile_loss(-2.0, 0.0, lv(0.95)).unwrap() - 3.8).abs() < 1e-15);
        assert_eq!(expectile_loss(3.0, 1.0, lv(0.5)).unwrap(), 2.0);
        assert!(expectile_loss(0.0, f64::INFINITY, lv(0.5)).is_err());
    }

    #[test]
    fn sample_quantile_examples() {
        assert_eq!(
            sample_quantile(&sample(&[1.0, 2.0, 3.0, 4.0]), lv(0.5)),
            2.0
        );
        assert_eq!(
            sample_quantile(&sample(&[4.0, 3.0, 1.0, 2.0]), lv(0.51)),
            3.0
        );
        for a in [0.01, 0.5, 0.99] {
            assert_eq!(sample_quantile(&sample(&[5.0]), lv(a)), 5.0);
        }
    }

    #[test]
    fn quantile_rank_is_minimal() {
        for n in 1..60 {
            for a in [0.05, 0.1, 0.2, 0.25, 0.3, 0.5, 0.7, 0.9, 0.95, 0.975, 0.999] {
                let k = quantile_rank(n, a);
                assert!(k as f64 / n as f64 >= a || k == n);
                assert!(k == 1 || ((k - 1) as f64 / n as f64) < a);
            }
        }
    }

    #[test]
    fn sample_quantiles_matches_single_calls() {
        let s = sample(&[3.0, -1.0, 7.5, 2.0, 2.0, 9.0, 0.5]);
        let levels = [lv(0.1), lv(0.5), lv(0.9)];
        let batch = sample_quantiles(&s, &levels);
        for (a, q) in levels.iter().zip(batch) {
            assert_eq!(sample_quantile(&s, *a), q);
        }
    }

    #[test]
    fn sample_expectile_examples() {
        assert_eq!(sample_expectile(&sample(&[1.0, 2.0, 3.0]), lv(0.5)), 2.0);
        // tau (1 - e) = (1 - tau) e  =>  e = tau
        assert!((sample_expectile(&sample(&[0.0, 1.0]), lv(0.9)) - 0.9).abs() < 1e-12);
        assert_eq!(sample_expectile(&sample(&[2.5, 2.5]), lv(0.9)), 2.5);
    }

    #[test]
    fn argmin_oracle_examples() {
        assert!((expectile_argmin_oracle(&sample(&[1.0, 2.0, 3.0]), lv(0.5)) - 2.0).abs() < 1e-7);
        assert!((expectile_argmin_oracle(&sample(&[0.0, 1.0]), lv(0.9)) - 0.9).abs() < 1e-7);
        let s = sample(&[-1.0, 0.0, 4.0, 4.0]);
        let a = expectile_argmin_oracle(&s, lv(0.75));
        let b = sample_expectile(&s, lv(0.75));
        assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
    }

    #[test]
    fn expectile_level_examples() {
        let lvl = expectile_level_of_value(&sample(&[0.0, 1.0]), 0.9);
        assert!((lvl.value - 0.9).abs() < 1e-15);
        assert!(!lvl.degenerate);
        let deg = expectile_level_of_value(&sample(&[3.0, 3.0, 3.0]), 3.0);
        assert_eq!(deg.value, 0.5);
        assert!(deg.degenerate);
    }

    #[test]
    fn prediction_level_examples() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(prediction_expectile_level(&x, &x).unwrap().value, 0.5);
        assert_eq!(
            prediction_expectile_level(&x, &[1.0, 2.5, 3.0])
                .unwrap()
                .value,
            1.0
        );
        assert_eq!(
            prediction_expectile_level(&[1.0, 2.0], &[2.0, 1.0])
                .unwrap()
                .value,
            0.5
        );
        assert!(matches!(
            prediction_expectile_level(&x, &x[..2]),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn return_period_examples() {
        assert!((return_period_from_level(lv(0.975)) - 40.0).abs() < 1e-9);
        assert_eq!(return_period_from_level(lv(0.5)), 2.0);
        assert!((return_period_from_level(lv(0.99)) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn loss_kind_parses() {
        assert_eq!(
            "Expectile".parse::<LossKind>().unwrap(),
            LossKind::Expectile
        );
        assert_eq!("quantile".parse::<LossKind>().unwrap(), LossKind::Quantile);
        assert!("mse".parse::<LossKind>().is_err());
    }

    #[test]
    fn expectile_parallel_matches_sequential() {
        let v: Vec<f64> = (0..300_000)
            .map(|i| ((i as f64) * 0.37).sin().exp())
            .collect();
        let s = Sample::new(v).unwrap();
        for t in [0.1, 0.5, 0.975] {
            let a = sample_expectile_with(&s, lv(t), Execution::Sequential);
            let b = sample_expectile_with(&s, lv(t), Execution::Parallel);
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
