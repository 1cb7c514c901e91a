//! Report tables.
//!
//! | file | columns |
//! |------|---------|
//! | `runs.csv` | basin_id, model, loss, level, params, calib_objective, n_evals, stop, eval_score, diag_level, diag_degenerate, mean_sim, mean_obs |
//! | `relative_scores.csv` | basin_id, model, benchmark, loss, level, score_model, score_bench, relative_score (empty when undefined) |
//! | `medians_heatmap.csv` | model, loss, level (`all` pools levels), median_relative_score, n_defined, n_undefined |
//! | `diag_levels_heatmap.csv` | model, loss, level, median_diag_level, n |
//! | `histogram.csv` | model, loss, level, bin_lo, bin_hi, count |
//! | `loss_curves.csv` | kind, level, r, loss |
//! | `tail_report.csv` | quantity, level, value |
//! | `tail_histogram.csv` | bin_lo, bin_hi, count |
//!
//! Floats use Rust's shortest round-trip formatting, and rows follow the
//! canonical record order, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::calibration::{StopReason, TracePoint};
use crate::error::{Error, Result};
use crate::evaluation::{loss_curve_table, LossCurveRow, MedianRow};
use crate::hydro::ModelParams;
use crate::io::config::RunConfig;
use crate::io::pipeline::{BasinFailure, PipelineOutput};
use crate::risk::Level;
use crate::tail::{truncated_histogram, TailReport, GENERATOR_ID};

pub const RUNS_CSV: &str = "runs.csv";
pub const RELATIVE_SCORES_CSV: &str = "relative_scores.csv";
pub const MEDIANS_CSV: &str = "medians_heatmap.csv";
pub const DIAG_CSV: &str = "diag_levels_heatmap.csv";
pub const HISTOGRAM_CSV: &str = "histogram.csv";
pub const LOSS_CURVES_CSV: &str = "loss_curves.csv";
pub const TAIL_REPORT_CSV: &str = "tail_report.csv";
pub const TAIL_HISTOGRAM_CSV: &str = "tail_histogram.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

/// Histogram settings for GP samples: 0.1-wide bins cut off at 8.
pub const TAIL_HIST_WIDTH: f64 = 0.1;
pub const TAIL_HIST_MAX: f64 = 8.0;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
    Ok(p)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn params_field(p: &ModelParams) -> String {
    p.model()
        .param_names()
        .iter()
        .zip(p.values())
        .map(|(n, v)| format!("{n}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn median_table(rows: &[MedianRow], header: &str, with_undefined: bool) -> String {
    let mut s = format!("{header}\n");
    for r in rows {
        let level = r.key.level.map_or("all".to_string(), |l| l.to_string());
        if with_undefined {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.key.model,
                r.key.loss,
                level,
                opt(r.median),
                r.n_defined,
                r.n_undefined
            );
        } else {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.key.model,
                r.key.loss,
                level,
                opt(r.median),
                r.n_defined
            );
        }
    }
    s
}

pub fn loss_curves_csv(rows: &[LossCurveRow]) -> String {
    let mut s = String::from("kind,level,r,loss\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", r.kind, r.level, r.r, r.loss);
    }
    s
}

/// Loss curves at `x = 0` for levels {0.05, 0.25, 0.75, 0.95} and
/// `r` in [-2, 2] by 0.05.
pub fn default_loss_curves() -> Vec<LossCurveRow> {
    let levels: Vec<Level> = [0.05, 0.25, 0.75, 0.95]
        .iter()
        .map(|&v| Level::new(v).expect("literal level"))
        .collect();
    let grid: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.05).collect();
    loss_curve_table(0.0, &levels, &grid).expect("non-empty literal grid")
}

pub fn tail_report_csv(t: Option<&TailReport>) -> String {
    let mut s = String::from("quantity,level,value\n");
    let Some(t) = t else { return s };
    let lvl = t.level;
    let rows: Vec<(&str, String, String)> = vec![
        ("generator", String::new(), t.generator.to_string()),
        ("seed", String::new(), t.seed.to_string()),
        ("n", String::new(), t.n.to_string()),
        ("mu", String::new(), t.params.mu.to_string()),
        ("sigma", String::new(), t.params.sigma.to_string()),
        ("xi", String::new(), t.params.xi.to_string()),
        ("shift", String::new(), t.shift.to_string()),
        ("n_shifted", lvl.to_string(), t.n_shifted.to_string()),
        ("q_before", lvl.to_string(), t.q_before.to_string()),
        ("e_before", lvl.to_string(), t.e_before.to_string()),
        ("q_after", lvl.to_string(), t.q_after.to_string()),
        ("e_after", lvl.to_string(), t.e_after.to_string()),
        (
            "expectile_level_before",
            lvl.to_string(),
            t.level_before.to_string(),
        ),
        (
            "expectile_level_after",
            lvl.to_string(),
            t.level_after.to_string(),
        ),
        ("rp_before", lvl.to_string(), t.rp_before.to_string()),
        ("rp_after", lvl.to_string(), t.rp_after.to_string()),
    ];
    for (q, l, v) in rows {
        let _ = writeln!(s, "{q},{l},{v}");
    }
    for d in &t.lower_level_quantile_deltas {
        let _ = writeln!(s, "quantile_delta,{},{}", d.level, d.delta);
    }
    for d in &t.all_level_expectile_deltas {
        let _ = writeln!(s, "expectile_delta,{},{}", d.level, d.delta);
    }
    s
}

/// Writes `tail_report.csv` and `tail_histogram.csv` for a tail experiment
/// whose pre-perturbation sample is `sample`.
pub fn write_tail_outputs(
    report: &TailReport,
    sample: &[f64],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let (bins, dropped) =
        truncated_histogram(sample, report.params.mu, TAIL_HIST_MAX, TAIL_HIST_WIDTH)?;
    let mut h = String::from("bin_lo,bin_hi,count\n");
    for b in &bins {
        let _ = writeln!(h, "{},{},{}", b.lo, b.hi, b.count);
    }
    let _ = writeln!(h, "{TAIL_HIST_MAX},inf,{dropped}");
    Ok(vec![
        write_file(out_dir, TAIL_REPORT_CSV, &tail_report_csv(Some(report)))?,
        write_file(out_dir, TAIL_HISTOGRAM_CSV, &h)?,
    ])
}

pub fn write_loss_curves(rows: &[LossCurveRow], out_dir: &Path) -> Result<PathBuf> {
    ensure_dir(out_dir)?;
    write_file(out_dir, LOSS_CURVES_CSV, &loss_curves_csv(rows))
}

#[derive(Serialize)]
struct ManifestRun<'a> {
    basin_id: &'a str,
    model: String,
    loss: String,
    level: f64,
    params: &'a ModelParams,
    objective_value: f64,
    screening_value: f64,
    n_evals: usize,
    seed: u64,
    stop: StopReason,
    trace: &'a [TracePoint],
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    generator: &'static str,
    config: &'a RunConfig,
    basins: &'a [String],
    failures: &'a [BasinFailure],
    warnings: &'a [String],
    runs: Vec<ManifestRun<'a>>,
}

/// Writes every pipeline table plus `manifest.json` into `out_dir`.
pub fn write_report(
    out: &PipelineOutput,
    config: &RunConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let mut written = Vec::new();

    let mut runs = String::from(
        "basin_id,model,loss,level,params,calib_objective,n_evals,stop,eval_score,diag_level,diag_degenerate,mean_sim,mean_obs\n",
    );
    for r in &out.records {
        let _ = writeln!(
            runs,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.basin_id,
            r.model,
            r.loss,
            r.level,
            params_field(&r.calib.params),
            r.calib.objective_value,
            r.calib.n_evals,
            match r.calib.stop {
                StopReason::MinStep => "min_step",
                StopReason::MaxEvals => "max_evals",
            },
            r.eval.score,
            r.eval.diag_level,
            r.eval.diag_degenerate,
            r.eval.mean_sim,
            r.eval.mean_obs
        );
    }
    written.push(write_file(out_dir, RUNS_CSV, &runs)?);

    let mut rel = String::from(
        "basin_id,model,benchmark,loss,level,score_model,score_bench,relative_score\n",
    );
    for r in &out.report.relative_scores {
        let _ = writeln!(
            rel,
            "{},{},{},{},{},{},{},{}",
            r.basin_id,
            r.model,
            r.benchmark,
            r.loss,
            r.level,
            r.score_model,
            r.score_bench,
            opt(r.relative_score)
        );
    }
    written.push(write_file(out_dir, RELATIVE_SCORES_CSV, &rel)?);

    written.push(write_file(
        out_dir,
        MEDIANS_CSV,
        &median_table(
            &out.report.medians,
            "model,loss,level,median_relative_score,n_defined,n_undefined",
            true,
        ),
    )?);
    written.push(write_file(
        out_dir,
        DIAG_CSV,
        &median_table(
            &out.report.diag_medians,
            "model,loss,level,median_diag_level,n",
            false,
        ),
    )?);

    let mut hist = String::from("model,loss,level,bin_lo,bin_hi,count\n");
    for h in &out.report.histogram {
        let _ = writeln!(
            hist,
            "{},{},{},{},{},{}",
            h.model, h.loss, h.level, h.bin.lo, h.bin.hi, h.bin.count
        );
    }
    written.push(write_file(out_dir, HISTOGRAM_CSV, &hist)?);
    written.push(write_file(
        out_dir,
        LOSS_CURVES_CSV,
        &loss_curves_csv(&default_loss_curves()),
    )?);
    written.push(write_file(
        out_dir,
        TAIL_REPORT_CSV,
        &tail_report_csv(out.tail.as_ref()),
    )?);

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        generator: GENERATOR_ID,
        config,
        basins: &out.basins,
        failures: &out.failures,
        warnings: &out.report.warnings,
        runs: out
            .records
            .iter()
            .map(|r| ManifestRun {
                basin_id: &r.basin_id,
                model: r.model.to_string(),
                loss: r.loss.to_string(),
                level: r.level.value(),
                params: &r.calib.params,
                objective_value: r.calib.objective_value,
                screening_value: r.calib.screening_value,
                n_evals: r.calib.n_evals,
                seed: r.calib.seed,
                stop: r.calib.stop,
                trace: &r.calib.trace,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    written.push(write_file(out_dir, MANIFEST_JSON, &(json + "\n"))?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::AggregateReport;

    #[test]
    fn empty_output_writes_headers_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = PipelineOutput {
            basins: vec![],
            records: vec![],
            report: AggregateReport::default(),
            failures: vec![],
            tail: None,
        };
        let files = write_report(&out, &RunConfig::default(), dir.path()).unwrap();
        assert_eq!(files.len(), 8);
        for name in [
            RUNS_CSV,
            RELATIVE_SCORES_CSV,
            MEDIANS_CSV,
            DIAG_CSV,
            HISTOGRAM_CSV,
            TAIL_REPORT_CSV,
        ] {
            let body = fs::read_to_string(dir.path().join(name)).unwrap();
            assert_eq!(body.lines().count(), 1, "{name}");
        }
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST_JSON)).unwrap())
                .unwrap();
        assert_eq!(manifest["runs"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn default_loss_curve_grid() {
        let rows = default_loss_curves();
        assert_eq!(rows.len(), 2 * 4 * 81);
        assert!(loss_curves_csv(&rows).starts_with("kind,level,r,loss\nquantile,0.05,-2,"));
    }
}
