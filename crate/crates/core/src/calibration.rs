//! Derivative-free minimization of the mean expectile or quantile loss over
//! model parameters.
//!
//! The search runs in a transformed parameter space (log for positive
//! scale parameters, `asinh(x2 / 4)` for the signed GR4J exchange
//! coefficient). It screens a seeded, randomly shifted Halton sequence over
//! the transformed box, then refines the best candidate with a coordinate
//! pattern search that halves its step whenever a full sweep fails to
//! improve.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hydro::{simulate_values, DailySeries, DateRange, ModelId, ModelParams};
use crate::par::Execution;
use crate::risk::{Level, LossKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub loss: LossKind,
    pub level: Level,
    pub warmup: DateRange,
    pub calibration: DateRange,
}

impl Objective {
    pub fn new(
        loss: LossKind,
        level: Level,
        warmup: DateRange,
        calibration: DateRange,
    ) -> Result<Self> {
        if warmup.end >= calibration.start {
            return Err(Error::InvalidArgument(format!(
                "warm-up {warmup} must end before calibration {calibration} starts"
            )));
        }
        Ok(Objective {
            loss,
            level,
            warmup,
            calibration,
        })
    }

    /// Span simulated for one objective evaluation.
    pub fn simulated_range(&self) -> DateRange {
        DateRange {
            start: self.warmup.start,
            end: self.calibration.end,
        }
    }
}

/// Aligned precipitation and PET (mm/day).
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    pub precip: DailySeries,
    pub pet: DailySeries,
}

impl Forcing {
    pub fn new(precip: DailySeries, pet: DailySeries) -> Result<Self> {
        precip.check_aligned(&pet)?;
        Ok(Forcing { precip, pet })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub screen_count: usize,
    /// Initial pattern-search step in transformed units.
    pub initial_step: f64,
    pub step_shrink: f64,
    /// The search stops once the step is no longer larger than this.
    pub min_step: f64,
    /// Budget on objective evaluations, screening included.
    pub max_evals: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            screen_count: 200,
            initial_step: 0.25,
            step_shrink: 0.5,
            min_step: 1e-3,
            max_evals: 20_000,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.screen_count == 0 {
            return bad("screen_count must be at least 1".into());
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return bad(format!(
                "step_shrink must lie in (0, 1), got {}",
                self.step_shrink
            ));
        }
        if !(self.min_step > 0.0
            && self.initial_step.is_finite()
            && self.min_step <= self.initial_step)
        {
            return bad(format!(
                "need 0 < min_step <= initial_step (min_step={}, initial_step={})",
                self.min_step, self.initial_step
            ));
        }
        if self.max_evals < self.screen_count {
            return bad(format!(
                "max_evals ({}) is smaller than screen_count ({})",
                self.max_evals, self.screen_count
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MinStep,
    MaxEvals,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub eval_index: usize,
    pub objective_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibResult {
    pub params: ModelParams,
    pub objective_value: f64,
    pub screening_value: f64,
    pub n_evals: usize,
    /// Screening best followed by every accepted pattern-search move.
    pub trace: Vec<TracePoint>,
    pub seed: u64,
    pub stop: StopReason,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Transform {
    Log,
    /// `asinh(x / 4)`
    Asinh4,
}

impl Transform {
    fn forward(self, x: f64) -> f64 {
        match self {
            Transform::Log => x.ln(),
            Transform::Asinh4 => (x / 4.0).asinh(),
        }
    }

    fn inverse(self, t: f64) -> f64 {
        match self {
            Transform::Log => t.exp(),
            Transform::Asinh4 => 4.0 * t.sinh(),
        }
    }
}

fn transforms(model: ModelId) -> &'static [Transform] {
    use Transform::*;
    match model {
        ModelId::Gr4j => &[Log, Asinh4, Log, Log],
        ModelId::Lr2 => &[Log, Log],
    }
}

/// The model's search box in transformed coordinates.
pub fn transformed_bounds(model: ModelId) -> Vec<(f64, f64)> {
    model
        .bounds()
        .iter()
        .zip(transforms(model))
        .map(|(&(lo, hi), t)| (t.forward(lo), t.forward(hi)))
        .collect()
}

pub fn to_transformed(params: &ModelParams) -> Vec<f64> {
    params
        .values()
        .iter()
        .zip(transforms(params.model()))
        .map(|(&v, t)| t.forward(v))
        .collect()
}

/// Maps a transformed point back to natural units, clamped into the bounds.
pub fn from_transformed(model: ModelId, point: &[f64]) -> Result<ModelParams> {
    let values: Vec<f64> = point
        .iter()
        .zip(transforms(model))
        .zip(model.bounds())
        .map(|((&t, tr), &(lo, hi))| tr.inverse(t).clamp(lo, hi))
        .collect();
    ModelParams::from_values(model, &values)
}

const HALTON_BASES: [u32; 4] = [2, 3, 5, 7];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// `count` screening points in transformed space: Halton points 1..=count,
/// rotated modulo 1 by a seeded uniform shift, scaled onto the box.
pub fn screening_points(model: ModelId, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let bounds = transformed_bounds(model);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = bounds.iter().map(|_| rng.random::<f64>()).collect();
    (1..=count as u64)
        .map(|i| {
            bounds
                .iter()
                .enumerate()
                .map(|(d, &(lo, hi))| {
                    let u = (radical_inverse(i, HALTON_BASES[d]) + shift[d]).fract();
                    lo + u * (hi - lo)
                })
                .collect()
        })
        .collect()
}

/// Pre-sliced data for repeated objective evaluations.
#[derive(Debug, Clone)]
pub struct CalibrationProblem<'a> {
    pub model: ModelId,
    precip: &'a [f64],
    pet: &'a [f64],
    observed: &'a [f64],
    skip: usize,
    loss: LossKind,
    level: Level,
}

impl<'a> CalibrationProblem<'a> {
    pub fn new(
        model: ModelId,
        forcing: &'a Forcing,
        observed: &'a DailySeries,
        objective: &Objective,
    ) -> Result<Self> {
        let sim_span = forcing
            .precip
            .span(&objective.simulated_range())
            .map_err(|_| {
                Error::Coverage(format!(
                    "forcing {}..={} does not cover warm-up and calibration {}",
                    forcing.precip.start(),
                    forcing.precip.end(),
                    objective.simulated_range()
                ))
            })?;
        let obs = observed.slice(&objective.calibration).map_err(|_| {
            Error::Coverage(format!(
                "observations {}..={} do not cover calibration {}",
                observed.start(),
                observed.end(),
                objective.calibration
            ))
        })?;
        let skip = (objective.calibration.start - objective.warmup.start).num_days() as usize;
        Ok(CalibrationProblem {
            model,
            precip: &forcing.precip.values()[sim_span.clone()],
            pet: &forcing.pet.values()[sim_span],
            observed: obs,
            skip,
            loss: objective.loss,
            level: objective.level,
        })
    }

    /// Mean per-day loss over the calibration range.
    pub fn score(&self, params: &ModelParams) -> Result<f64> {
        if params.model() != self.model {
            return Err(Error::InvalidArgument(format!(
                "parameters for {} given to a {} problem",
                params.model(),
                self.model
            )));
        }
        let sim = simulate_values(params, self.precip, self.pet)?;
        let total: f64 = sim[self.skip..]
            .iter()
            .zip(self.observed)
            .map(|(&r, &x)| self.loss.eval(r, x, self.level))
            .sum();
        Ok(total / self.observed.len() as f64)
    }

    /// Objective at a transformed point; non-finite or invalid points score
    /// `+inf`.
    fn score_transformed(&self, point: &[f64]) -> f64 {
        match from_transformed(self.model, point).and_then(|p| self.score(&p)) {
            Ok(v) if v.is_finite() => v,
            _ => f64::INFINITY,
        }
    }
}

/// Mean per-day loss of `params` over the objective's calibration range,
/// after simulating through the warm-up.
pub fn objective_score(
    params: &ModelParams,
    forcing: &Forcing,
    observed: &DailySeries,
    objective: &Objective,
) -> Result<f64> {
    CalibrationProblem::new(params.model(), forcing, observed, objective)?.score(params)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Screening {
    pub point: Vec<f64>,
    pub params: ModelParams,
    pub score: f64,
    /// Zero-based position of the winner within the screening sequence.
    pub index: usize,
}

pub fn screen_candidates(
    problem: &CalibrationProblem<'_>,
    config: &SearchConfig,
) -> Result<Screening> {
    screen_candidates_with(problem, config, Execution::default())
}

pub fn screen_candidates_with(
    problem: &CalibrationProblem<'_>,
    config: &SearchConfig,
    exec: Execution,
) -> Result<Screening> {
    config.validate()?;
    let points = screening_points(problem.model, config.screen_count, config.seed);
    let scores = exec.map_slice(&points, |p| problem.score_transformed(p));
    let (index, score) = scores
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, s)| s.is_finite())
        .fold(None, |best: Option<(usize, f64)>, (i, s)| match best {
            Some((_, b)) if b <= s => best,
            _ => Some((i, s)),
        })
        .ok_or(Error::ScreeningFailure(config.screen_count))?;
    let point = points[index].clone();
    Ok(Screening {
        params: from_transformed(problem.model, &point)?,
        point,
        score,
        index,
    })
}

pub fn calibrate(
    model: ModelId,
    forcing: &Forcing,
    observed: &DailySeries,
    objective: &Objective,
    config: &SearchConfig,
) -> Result<CalibResult> {
    let problem = CalibrationProblem::new(model, forcing, observed, objective)?;
    calibrate_problem(&problem, config, Execution::default())
}

/// Screening followed by coordinate pattern search.
pub fn calibrate_problem(
    problem: &CalibrationProblem<'_>,
    config: &SearchConfig,
    exec: Execution,
) -> Result<CalibResult> {
    let screening = screen_candidates_with(problem, config, exec)?;
    let bounds = transformed_bounds(problem.model);
    let mut x = screening.point.clone();
    let mut fx = screening.score;
    let mut n_evals = config.screen_count;
    let mut trace = vec![TracePoint {
        eval_index: screening.index,
        objective_value: fx,
    }];
    let mut step = config.initial_step;
    let mut stop = StopReason::MinStep;

    'search: while step > config.min_step {
        let mut improved = false;
        for d in 0..x.len() {
            let (lo, hi) = bounds[d];
            let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(2);
            for dir in [1.0, -1.0] {
                let mut c = x.clone();
                c[d] = (x[d] + dir * step).clamp(lo, hi);
                if c[d] != x[d] && !candidates.contains(&c) {
                    candidates.push(c);
                }
            }
            let room = config.max_evals - n_evals;
            if room == 0 {
                stop = StopReason::MaxEvals;
                break 'search;
            }
            candidates.truncate(room);
            let scores = exec.map_slice(&candidates, |c| problem.score_transformed(c));
            let first_eval = n_evals;
            n_evals += candidates.len();
            // strict improvement only; ties keep the incumbent
            let best = scores.iter().copied().enumerate().fold(
                None,
                |acc: Option<(usize, f64)>, (i, s)| match acc {
                    Some((_, b)) if b <= s => acc,
                    _ => Some((i, s)),
                },
            );
            if let Some((i, s)) = best {
                if s < fx {
                    x = candidates.swap_remove(i);
                    fx = s;
                    improved = true;
                    trace.push(TracePoint {
                        eval_index: first_eval + i,
                        objective_value: fx,
                    });
                }
            }
        }
        if !improved {
            step *= config.step_shrink;
        }
    }

    Ok(CalibResult {
        params: from_transformed(problem.model, &x)?,
        objective_value: fx,
        screening_value: screening.score,
        n_evals,
        trace,
        seed: config.seed,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transforms_roundtrip_inside_bounds() {
        for model in ModelId::ALL {
            for p in screening_points(model, 50, 3) {
                let params = from_transformed(model, &p).unwrap();
                assert!(params.within_bounds());
                let back = to_transformed(&params);
                for (a, b) in p.iter().zip(&back) {
                    assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
                }
            }
        }
    }

    #[test]
    fn screening_points_are_seeded() {
        assert_eq!(
            screening_points(ModelId::Gr4j, 10, 1),
            screening_points(ModelId::Gr4j, 10, 1)
        );
        assert_ne!(
            screening_points(ModelId::Gr4j, 10, 1),
            screening_points(ModelId::Gr4j, 10, 2)
        );
        let b = transformed_bounds(ModelId::Gr4j);
        for p in screening_points(ModelId::Gr4j, 500, 9) {
            for (v, (lo, hi)) in p.iter().zip(&b) {
                assert!(lo <= v && v <= hi);
            }
        }
    }

    #[test]
    fn radical_inverse_base_two() {
        let seq: Vec<f64> = (1..=4).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(seq, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        let c = SearchConfig {
            step_shrink: 1.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = SearchConfig {
            min_step: 0.5,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = SearchConfig {
            screen_count: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn objective_requires_ordered_ranges() {
        let d = |y| chrono::NaiveDate::from_ymd_opt(y, 1, 1).unwrap();
        let w = DateRange::new(d(2000), d(2001)).unwrap();
        let c = DateRange::new(d(2001), d(2003)).unwrap();
        let lvl = Level::new(0.5).unwrap();
        assert!(Objective::new(LossKind::Expectile, lvl, w, c).is_err());
        let c = DateRange::new(d(2002), d(2003)).unwrap();
        assert!(Objective::new(LossKind::Expectile, lvl, w, c).is_ok());
    }
}
