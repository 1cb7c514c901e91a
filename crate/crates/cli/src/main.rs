use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use exphydro::calibration::{calibrate_problem, CalibrationProblem, Objective};
use exphydro::evaluation::{evaluate_run, make_split};
use exphydro::hydro::{simulate, ModelId, ModelParams};
use exphydro::io::basin::{
    compute_pet, load_basin_csv_with, meta_path, write_basin_csv, BasinRecord,
};
use exphydro::io::config::RunConfig;
use exphydro::io::report::{
    default_loss_curves, write_loss_curves, write_report, write_tail_outputs,
};
use exphydro::io::run_pipeline;
use exphydro::io::synth::{synth_basin_with, SynthOptions};
use exphydro::tail::{gp_sample, run_tail_experiment, GpParams};
use exphydro::{Error, Execution, Level, LossKind, Result};

#[derive(Parser)]
#[command(
    name = "exphydro",
    version,
    about = "Expectile and quantile calibration of daily rainfall-runoff models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generalized-Pareto tail experiment: shift the values above the
    /// quantile and compare quantile, expectile and return period.
    TailDemo {
        #[arg(long, default_value_t = 10_000_000)]
        n: usize,
        #[arg(long, default_value_t = 0.975)]
        level: f64,
        #[arg(long, default_value_t = 0.1)]
        shift: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.2)]
        xi: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean temperature and Oudin PET for a basin file.
    Pet {
        #[command(flatten)]
        basin: BasinArgs,
        /// Overrides the latitude from the sidecar metadata.
        #[arg(long)]
        latitude: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a basin with given parameters.
    Simulate {
        #[command(flatten)]
        basin: BasinArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate one model on one basin for one loss and level.
    Calibrate {
        #[command(flatten)]
        basin: BasinArgs,
        #[arg(long)]
        model: ModelId,
        #[command(flatten)]
        objective: ObjectiveArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score given parameters on the evaluation interval.
    Evaluate {
        #[command(flatten)]
        basin: BasinArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        objective: ObjectiveArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline over the basins of a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Abort on the first failing basin.
        #[arg(long)]
        strict: bool,
        /// Defaults to `out_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quantile and expectile loss curves around a fixed outcome.
    LossCurves {
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic basin file and its metadata.
    Synth {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 34)]
        years: u32,
        #[arg(long, default_value_t = 0.3)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct BasinArgs {
    /// Basin CSV (date,precip_mm,tmin_c,tmax_c,q_mm[,pet_mm]).
    #[arg(long)]
    input: PathBuf,
    /// Run config supplying split, search settings and streamflow unit.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    model: ModelId,
    /// Parameter values in model order (gr4j: x1,x2,x3,x4; lr2: c,k).
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        required = true
    )]
    params: Vec<f64>,
}

#[derive(Args)]
struct ObjectiveArgs {
    #[arg(long, default_value = "expectile")]
    loss: LossKind,
    #[arg(long, default_value_t = 0.5)]
    level: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            error!("{e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}

/// Returns `Ok(false)` when the command completed but some inputs failed
/// validation.
fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::TailDemo {
            n,
            level,
            shift,
            seed,
            mu,
            sigma,
            xi,
            out,
        } => {
            let g = GpParams::new(mu, sigma, xi)?;
            let report = run_tail_experiment(&g, n, Level::new(level)?, shift, seed)?;
            let sample = gp_sample(&g, n, seed)?;
            write_tail_outputs(&report, sample.values(), &out)?;
            println!(
                "quantile {:.4} -> {:.4}; expectile {:.4} -> {:.4}; return period {:.2} -> {:.2} years",
                report.q_before, report.q_after, report.e_before, report.e_after, report.rp_before, report.rp_after
            );
            Ok(true)
        }
        Command::Pet {
            basin,
            latitude,
            out,
        } => {
            let (record, _) = load(&basin)?;
            let lat = latitude.or(record.latitude_deg).ok_or_else(|| {
                Error::Config(format!(
                    "no latitude: pass --latitude or set latitude_deg in {}",
                    meta_path(&basin.input).display()
                ))
            })?;
            let pet = compute_pet(record.start, &record.tmin, &record.tmax, lat)?;
            let tmean = record.mean_temperature()?;
            let mut s = String::from("date,tmean_c,pet_mm\n");
            for (i, (t, p)) in tmean.values().iter().zip(&pet).enumerate() {
                let _ = writeln!(s, "{},{t},{p}", record.date_at(i));
            }
            write_out(&out, "pet.csv", &s)?;
            Ok(true)
        }
        Command::Simulate { basin, model, out } => {
            let (record, _) = load(&basin)?;
            let params = ModelParams::from_values(model.model, &model.params)?;
            let f = record.forcing()?;
            let sim = simulate(&params, &f.precip, &f.pet)?;
            let mut s = String::from("date,q_sim,q_obs\n");
            for (i, (q, o)) in sim.values().iter().zip(&record.q_obs).enumerate() {
                let obs = if o.is_nan() {
                    String::new()
                } else {
                    o.to_string()
                };
                let _ = writeln!(s, "{},{q},{obs}", record.date_at(i));
            }
            write_out(&out, "simulation.csv", &s)?;
            Ok(true)
        }
        Command::Calibrate {
            basin,
            model,
            objective,
            out,
        } => {
            let (record, cfg) = load(&basin)?;
            let split = make_split(&record.range(), cfg.split)?;
            let w = record.window(&split.whole())?;
            let (forcing, observed) = (w.forcing()?, w.observed()?);
            let obj = Objective::new(
                objective.loss,
                Level::new(objective.level)?,
                split.warmup,
                split.calibration,
            )?;
            let problem = CalibrationProblem::new(model, &forcing, &observed, &obj)?;
            let result = calibrate_problem(&problem, &cfg.search_config(), Execution::default())?;
            info!(
                "{} objective {} after {} evaluations",
                result.params, result.objective_value, result.n_evals
            );
            write_out(&out, "calibration.json", &to_json(&result)?)?;
            Ok(true)
        }
        Command::Evaluate {
            basin,
            model,
            objective,
            out,
        } => {
            let (record, cfg) = load(&basin)?;
            let split = make_split(&record.range(), cfg.split)?;
            let w = record.window(&split.whole())?;
            let (forcing, observed) = (w.forcing()?, w.observed()?);
            let params = ModelParams::from_values(model.model, &model.params)?;
            let sim = simulate(&params, &forcing.precip, &forcing.pet)?;
            let outcome = evaluate_run(
                &sim,
                &observed,
                objective.loss,
                Level::new(objective.level)?,
                &split.evaluation,
            )?;
            println!(
                "score {} diag_level {} (mean sim {}, mean obs {})",
                outcome.score, outcome.diag_level, outcome.mean_sim, outcome.mean_obs
            );
            write_out(&out, "evaluation.json", &to_json(&outcome)?)?;
            Ok(true)
        }
        Command::Run {
            config,
            strict,
            out,
        } => {
            let mut cfg = RunConfig::from_path(&config)?;
            cfg.strict |= strict;
            let out = out.or_else(|| cfg.out_dir.clone()).ok_or_else(|| {
                Error::Config("no output directory: pass --out or set out_dir".into())
            })?;
            let output = run_pipeline(&cfg)?;
            write_report(&output, &cfg, &out)?;
            for f in &output.failures {
                error!("basin {} failed: {}", f.basin, f.error);
            }
            info!(
                "{} runs over {} basins written to {}",
                output.records.len(),
                output.basins.len(),
                out.display()
            );
            Ok(output.failures.is_empty())
        }
        Command::LossCurves { out } => {
            write_loss_curves(&default_loss_curves(), &out)?;
            Ok(true)
        }
        Command::Synth {
            seed,
            years,
            noise,
            out,
        } => {
            let mut opt = SynthOptions::new(seed, years);
            opt.noise = noise;
            let b = synth_basin_with(&opt)?;
            fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            let path = out.join(format!("{}.csv", b.basin_id));
            write_basin_csv(&b, &path)?;
            println!("{}", path.display());
            Ok(true)
        }
    }
}

fn load(args: &BasinArgs) -> Result<(BasinRecord, RunConfig)> {
    let cfg = match &args.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    Ok((load_basin_csv_with(&args.input, cfg.streamflow_unit)?, cfg))
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Error::Config(e.to_string()))
}

fn write_out(dir: &Path, name: &str, body: &str) -> Result<()> {
    let io = |path: &Path, e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let p = dir.join(name);
    fs::write(&p, body).map_err(|e| io(&p, e))
}
