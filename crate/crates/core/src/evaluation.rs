//! Split-sample evaluation, relative scores against a benchmark model, and
//! the aggregate tables behind the summary figures.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use log::warn;
use serde::Serialize;

use crate::calibration::CalibResult;
use crate::error::{Error, Result};
use crate::hydro::{DailySeries, DateRange, ModelId};
use crate::risk::{prediction_expectile_level, Level, LossKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct SplitSpec {
    pub warmup: DateRange,
    pub calibration: DateRange,
    pub evaluation: DateRange,
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid literal date")
}

impl SplitSpec {
    /// 1980-1981 warm-up, 1982-1997 calibration, 1998-2013 evaluation.
    pub fn camels_default() -> Self {
        SplitSpec {
            warmup: DateRange {
                start: ymd(1980, 1, 1),
                end: ymd(1981, 12, 31),
            },
            calibration: DateRange {
                start: ymd(1982, 1, 1),
                end: ymd(1997, 12, 31),
            },
            evaluation: DateRange {
                start: ymd(1998, 1, 1),
                end: ymd(2013, 12, 31),
            },
        }
    }

    pub fn whole(&self) -> DateRange {
        DateRange {
            start: self.warmup.start,
            end: self.evaluation.end,
        }
    }
}

/// Checks that the three intervals are well formed, chronological,
/// contiguous and inside `record`.
pub fn make_split(record: &DateRange, spec: SplitSpec) -> Result<SplitSpec> {
    let named = [
        ("warm-up", spec.warmup),
        ("calibration", spec.calibration),
        ("evaluation", spec.evaluation),
    ];
    for (name, r) in named {
        if r.end < r.start {
            return Err(Error::Split {
                interval: name,
                reason: format!("ends ({}) before it starts ({})", r.end, r.start),
            });
        }
    }
    for pair in named.windows(2) {
        let (prev_name, prev) = pair[0];
        let (name, cur) = pair[1];
        if cur.start <= prev.end {
            return Err(Error::Split {
                interval: name,
                reason: format!("{cur} overlaps or precedes the {prev_name} interval {prev}"),
            });
        }
        if cur.start != prev.end + Duration::days(1) {
            return Err(Error::Split {
                interval: name,
                reason: format!("gap between the {prev_name} interval {prev} and {cur}"),
            });
        }
    }
    for (name, r) in named {
        if !record.covers(&r) {
            return Err(Error::Coverage(format!(
                "{name} interval {r} lies outside the data record {record}"
            )));
        }
    }
    Ok(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalOutcome {
    /// Mean per-day loss over the evaluation range.
    pub score: f64,
    /// Expectile level of the observations relative to the simulation.
    pub diag_level: f64,
    pub diag_degenerate: bool,
    pub mean_sim: f64,
    pub mean_obs: f64,
}

pub fn evaluate_run(
    sim: &DailySeries,
    obs: &DailySeries,
    loss: LossKind,
    level: Level,
    eval_range: &DateRange,
) -> Result<EvalOutcome> {
    let r = sim.slice(eval_range)?;
    let x = obs.slice(eval_range)?;
    let n = x.len() as f64;
    let score = r
        .iter()
        .zip(x)
        .map(|(&r, &x)| loss.eval(r, x, level))
        .sum::<f64>()
        / n;
    let diag = prediction_expectile_level(x, r)?;
    Ok(EvalOutcome {
        score,
        diag_level: diag.value,
        diag_degenerate: diag.degenerate,
        mean_sim: r.iter().sum::<f64>() / n,
        mean_obs: x.iter().sum::<f64>() / n,
    })
}

/// `(bench - model) / bench`; `None` when the benchmark score is zero or
/// the ratio is not finite.
pub fn relative_score(score_bench: f64, score_model: f64) -> Option<f64> {
    if score_bench == 0.0 {
        return None;
    }
    let v = (score_bench - score_model) / score_bench;
    v.is_finite().then_some(v)
}

/// Exact median; even counts average the two middle values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

/// Fixed-width histogram over `[lo, hi]`; values outside are clamped into
/// the edge bins, so the counts always sum to `values.len()`.
pub fn histogram_truncated(values: &[f64], bin_width: f64, lo: f64, hi: f64) -> Result<Vec<Bin>> {
    if !(bin_width > 0.0) || !(hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "histogram needs bin_width > 0 and hi > lo (width={bin_width}, lo={lo}, hi={hi})"
        )));
    }
    let n_bins = ((hi - lo) / bin_width - 1e-9).ceil().max(1.0) as usize;
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        let c = v.clamp(lo, hi);
        let i = (((c - lo) / bin_width).floor() as usize).min(n_bins - 1);
        counts[i] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| Bin {
            lo: lo + i as f64 * bin_width,
            hi: (lo + (i + 1) as f64 * bin_width).min(hi),
            count,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossCurveRow {
    pub kind: LossKind,
    pub level: f64,
    pub r: f64,
    pub loss: f64,
}

/// Both losses for a fixed materialization `x` over a grid of predictions.
pub fn loss_curve_table(x: f64, levels: &[Level], r_grid: &[f64]) -> Result<Vec<LossCurveRow>> {
    if r_grid.is_empty() || levels.is_empty() {
        return Err(Error::EmptyInput("loss curve grid"));
    }
    if !x.is_finite() || r_grid.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidArgument(
            "loss curve inputs must be finite".into(),
        ));
    }
    let mut rows = Vec::with_capacity(2 * levels.len() * r_grid.len());
    for kind in [LossKind::Quantile, LossKind::Expectile] {
        for &level in levels {
            for &r in r_grid {
                rows.push(LossCurveRow {
                    kind,
                    level: level.value(),
                    r,
                    loss: kind.eval(r, x, level),
                });
            }
        }
    }
    Ok(rows)
}

/// One calibrated and evaluated (basin, model, loss, level) run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub basin_id: String,
    pub model: ModelId,
    pub loss: LossKind,
    pub level: Level,
    pub calib: CalibResult,
    pub eval: EvalOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelativeScoreRow {
    pub basin_id: String,
    pub model: ModelId,
    pub benchmark: ModelId,
    pub loss: LossKind,
    pub level: f64,
    pub score_model: f64,
    pub score_bench: f64,
    pub relative_score: Option<f64>,
}

/// Grouping key; `level = None` pools every level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupKey {
    pub model: ModelId,
    pub loss: LossKind,
    pub level: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianRow {
    pub key: GroupKey,
    pub median: Option<f64>,
    pub n_defined: usize,
    pub n_undefined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub model: ModelId,
    pub loss: LossKind,
    pub level: f64,
    pub bin: Bin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct AggregateReport {
    pub relative_scores: Vec<RelativeScoreRow>,
    pub medians: Vec<MedianRow>,
    pub diag_medians: Vec<MedianRow>,
    pub histogram: Vec<HistogramRow>,
    pub warnings: Vec<String>,
}

pub const HIST_LO: f64 = -0.5;
pub const HIST_HI: f64 = 0.5;
pub const DEFAULT_BIN_WIDTH: f64 = 0.02;

type LevelKey = u64;

/// Key, relative scores and diagnostic levels of one group.
type Group = (GroupKey, Vec<Option<f64>>, Vec<f64>);

fn level_key(l: Level) -> LevelKey {
    l.value().to_bits()
}

/// Compares every run with the benchmark run of the same basin, loss and
/// level, then folds the comparisons into medians and histograms. Records
/// are processed in a canonical order so the result does not depend on the
/// order they were produced in.
pub fn aggregate(
    records: &[RunRecord],
    benchmark: ModelId,
    bin_width: f64,
) -> Result<AggregateReport> {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (a.basin_id.as_str(), a.model, a.loss)
            .cmp(&(b.basin_id.as_str(), b.model, b.loss))
            .then(a.level.value().total_cmp(&b.level.value()))
    });

    let bench: BTreeMap<(&str, LossKind, LevelKey), f64> = sorted
        .iter()
        .filter(|r| r.model == benchmark)
        .map(|r| {
            (
                (r.basin_id.as_str(), r.loss, level_key(r.level)),
                r.eval.score,
            )
        })
        .collect();

    let mut report = AggregateReport::default();
    let mut diags = Vec::new();
    for r in &sorted {
        match bench.get(&(r.basin_id.as_str(), r.loss, level_key(r.level))) {
            Some(&b) => {
                diags.push(r.eval.diag_level);
                report.relative_scores.push(RelativeScoreRow {
                    basin_id: r.basin_id.clone(),
                    model: r.model,
                    benchmark,
                    loss: r.loss,
                    level: r.level.value(),
                    score_model: r.eval.score,
                    score_bench: b,
                    relative_score: relative_score(b, r.eval.score),
                })
            }
            None => report.warnings.push(format!(
                "basin {}: no {benchmark} run for {} level {}; {} run not compared",
                r.basin_id, r.loss, r.level, r.model
            )),
        }
    }

    // groups in (model, loss, level) order, pooled rows after the per-level ones
    let mut groups: BTreeMap<(ModelId, LossKind, u8, LevelKey), Group> = BTreeMap::new();
    for (row, &diag) in report.relative_scores.iter().zip(&diags) {
        for (pooled, level) in [(0u8, Some(row.level)), (1u8, None)] {
            let entry = groups
                .entry((row.model, row.loss, pooled, level.map_or(0, f64::to_bits)))
                .or_insert_with(|| {
                    (
                        GroupKey {
                            model: row.model,
                            loss: row.loss,
                            level,
                        },
                        Vec::new(),
                        Vec::new(),
                    )
                });
            entry.1.push(row.relative_score);
            entry.2.push(diag);
        }
    }

    for (key, rel, diag) in groups.into_values() {
        let defined: Vec<f64> = rel.iter().flatten().copied().collect();
        let n_undefined = rel.len() - defined.len();
        let m = median(&defined);
        if m.is_none() {
            let msg = format!(
                "{} {} level {}: no defined relative score, group omitted from medians",
                key.model,
                key.loss,
                key.level.map_or("all".to_string(), |l| l.to_string())
            );
            warn!("{msg}");
            report.warnings.push(msg);
        }
        report.medians.push(MedianRow {
            key,
            median: m,
            n_defined: defined.len(),
            n_undefined,
        });
        report.diag_medians.push(MedianRow {
            key,
            median: median(&diag),
            n_defined: diag.len(),
            n_undefined: 0,
        });
        if let Some(level) = key.level {
            for bin in histogram_truncated(&defined, bin_width, HIST_LO, HIST_HI)? {
                report.histogram.push(HistogramRow {
                    model: key.model,
                    loss: key.loss,
                    level,
                    bin,
                });
            }
        }
    }
    Ok(report)
}
