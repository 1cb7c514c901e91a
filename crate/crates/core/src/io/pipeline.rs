use log::{info, warn};
use serde::Serialize;

use crate::calibration::{calibrate_problem, CalibrationProblem, Objective};
use crate::error::Result;
use crate::evaluation::{aggregate, evaluate_run, make_split, AggregateReport, RunRecord};
use crate::hydro::{simulate, ModelId};
use crate::io::basin::{load_basin_csv_with, BasinRecord};
use crate::io::config::RunConfig;
use crate::io::synth::{synth_basin_with, SynthOptions};
use crate::par::Execution;
use crate::risk::{Level, LossKind};
use crate::tail::{run_tail_experiment_with, GpParams, TailReport};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinFailure {
    pub basin: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineOutput {
    pub basins: Vec<String>,
    pub records: Vec<RunRecord>,
    pub report: AggregateReport,
    pub failures: Vec<BasinFailure>,
    pub tail: Option<TailReport>,
}

pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutput> {
    run_pipeline_with(config, Execution::default())
}

/// Calibrates every (model, loss, level) combination on every basin,
/// evaluates on the evaluation interval and aggregates against the
/// benchmark. Basin failures abort in strict mode and are collected
/// otherwise.
pub fn run_pipeline_with(config: &RunConfig, exec: Execution) -> Result<PipelineOutput> {
    config.validate()?;
    with_pool(config.threads, exec, || pipeline_inner(config, exec))
}

#[cfg(feature = "parallel")]
fn with_pool<T: Send>(
    threads: usize,
    exec: Execution,
    f: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    if threads == 0 || !exec.is_parallel() {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::Error::Config(format!("cannot build a {threads}-thread pool: {e}")))?
        .install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_pool<T: Send>(
    _threads: usize,
    _exec: Execution,
    f: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    f()
}

fn pipeline_inner(config: &RunConfig, exec: Execution) -> Result<PipelineOutput> {
    let mut failures = Vec::new();
    let mut basins: Vec<BasinRecord> = Vec::new();

    for path in &config.basins {
        match load_basin_csv_with(path, config.streamflow_unit) {
            Ok(b) => basins.push(b),
            Err(e) if config.strict => return Err(e),
            Err(e) => {
                warn!("skipping {}: {e}", path.display());
                failures.push(BasinFailure {
                    basin: path.display().to_string(),
                    error: e.to_string(),
                });
            }
        }
    }
    if let Some(s) = &config.synthetic {
        for i in 0..s.count as u64 {
            let mut opt = SynthOptions::new(s.seed + i, s.years);
            opt.noise = s.noise;
            basins.push(synth_basin_with(&opt)?);
        }
    }

    let results = exec.map_slice(&basins, |b| run_basin(b, config, exec));
    let mut records = Vec::new();
    let mut names = Vec::new();
    for (b, r) in basins.iter().zip(results) {
        match r {
            Ok(rs) => {
                info!("basin {}: {} runs", b.basin_id, rs.len());
                names.push(b.basin_id.clone());
                records.extend(rs);
            }
            Err(e) if config.strict => return Err(e),
            Err(e) => {
                warn!("basin {} failed: {e}", b.basin_id);
                failures.push(BasinFailure {
                    basin: b.basin_id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }

    let report = aggregate(&records, config.benchmark_model, config.histogram_bin_width)?;
    let tail = match &config.tail {
        Some(t) => Some(run_tail_experiment_with(
            &GpParams::new(t.mu, t.sigma, t.xi)?,
            t.n,
            t.level,
            t.shift,
            t.seed,
            exec,
        )?),
        None => None,
    };
    Ok(PipelineOutput {
        basins: names,
        records,
        report,
        failures,
        tail,
    })
}

/// All configured runs for one basin.
pub fn run_basin(
    basin: &BasinRecord,
    config: &RunConfig,
    exec: Execution,
) -> Result<Vec<RunRecord>> {
    let split = make_split(&basin.range(), config.split)?;
    let window = basin.window(&split.whole())?;
    let forcing = window.forcing()?;
    let observed = window.observed()?;
    let search = config.search_config();

    let jobs: Vec<(ModelId, LossKind, Level)> = config
        .models
        .iter()
        .flat_map(|&m| {
            config
                .loss_kinds
                .iter()
                .flat_map(move |&k| config.levels.iter().map(move |&l| (m, k, l)))
        })
        .collect();

    exec.map_slice(&jobs, |&(model, loss, level)| {
        let objective = Objective::new(loss, level, split.warmup, split.calibration)?;
        let problem = CalibrationProblem::new(model, &forcing, &observed, &objective)?;
        let calib = calibrate_problem(&problem, &search, exec)?;
        let sim = simulate(&calib.params, &forcing.precip, &forcing.pet)?;
        let eval = evaluate_run(&sim, &observed, loss, level, &split.evaluation)?;
        Ok(RunRecord {
            basin_id: basin.basin_id.clone(),
            model,
            loss,
            level,
            calib,
            eval,
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::SyntheticSpec;

    #[test]
    fn missing_file_is_skipped_unless_strict() {
        let mut cfg = RunConfig {
            basins: vec!["/nonexistent/basin.csv".into()],
            ..Default::default()
        };
        let out = run_pipeline(&cfg).unwrap();
        assert_eq!(out.failures.len(), 1);
        assert!(out.records.is_empty());
        cfg.strict = true;
        assert!(run_pipeline(&cfg).unwrap_err().is_io());
    }

    #[test]
    fn short_basin_fails_split() {
        let cfg = RunConfig {
            synthetic: Some(SyntheticSpec {
                count: 1,
                years: 3,
                seed: 1,
                noise: 0.3,
            }),
            ..Default::default()
        };
        let out = run_pipeline(&cfg).unwrap();
        assert_eq!(out.failures.len(), 1);
        assert!(
            out.failures[0].error.contains("coverage"),
            "{}",
            out.failures[0].error
        );
    }
}
