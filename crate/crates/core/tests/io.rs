use std::fs;

use chrono::NaiveDate;

use exphydro::evaluation::SplitSpec;
use exphydro::hydro::DateRange;
use exphydro::io::basin::{load_basin_csv, load_basin_csv_with, write_basin_csv, StreamflowUnit};
use exphydro::io::config::{RunConfig, SyntheticSpec};
use exphydro::io::{run_pipeline, synth_basin, write_report};
use exphydro::{Error, Execution};

fn d(y: i32, m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).unwrap()
}

fn small_config() -> RunConfig {
    let mut cfg = RunConfig {
        synthetic: Some(SyntheticSpec {
            count: 2,
            years: 5,
            seed: 1,
            noise: 0.3,
        }),
        split: SplitSpec {
            warmup: DateRange::new(d(1980, 1, 1), d(1980, 12, 31)).unwrap(),
            calibration: DateRange::new(d(1981, 1, 1), d(1982, 12, 31)).unwrap(),
            evaluation: DateRange::new(d(1983, 1, 1), d(1984, 12, 31)).unwrap(),
        },
        ..RunConfig::default()
    };
    cfg.search.screen_count = 32;
    cfg.search.max_evals = 300;
    cfg
}

#[test]
fn basin_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let b = synth_basin(7, 2).unwrap();
    let path = dir.path().join("synth.csv");
    write_basin_csv(&b, &path).unwrap();
    let back = load_basin_csv(&path).unwrap();
    assert_eq!(back, b);
}

#[test]
fn loader_reports_line_of_bad_value() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(
        &path,
        "date,precip_mm,tmin_c,tmax_c,q_mm,pet_mm\n\
         1990-01-01,1.0,0.0,5.0,0.5,1.0\n\
         1990-01-02,-1.0,0.0,5.0,0.5,1.0\n",
    )
    .unwrap();
    match load_basin_csv(&path) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    assert!(load_basin_csv(&dir.path().join("missing.csv"))
        .unwrap_err()
        .is_io());
}

#[test]
fn volume_rate_streamflow_is_converted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cms.csv");
    fs::write(
        &path,
        "date,precip_mm,tmin_c,tmax_c,q_mm,pet_mm\n1990-01-01,1.0,0.0,5.0,10.0,1.0\n",
    )
    .unwrap();
    fs::write(dir.path().join("cms.meta.toml"), "area_km2 = 864.0\n").unwrap();
    let b = load_basin_csv_with(&path, StreamflowUnit::CubicMetresPerSecond).unwrap();
    assert!((b.q_obs[0] - 1.0).abs() < 1e-12);
}

#[test]
fn pipeline_produces_one_record_per_combination() {
    let out = run_pipeline(&small_config()).unwrap();
    assert!(out.failures.is_empty());
    // 2 basins x 2 models x 4 levels
    assert_eq!(out.records.len(), 16);
    assert_eq!(out.report.relative_scores.len(), 16);
    assert!(out
        .report
        .relative_scores
        .iter()
        .filter(|r| r.model == r.benchmark)
        .all(|r| r.relative_score == Some(0.0)));
}

#[test]
fn reports_are_byte_identical_across_runs_and_strategies() {
    let cfg = small_config();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let files = write_report(&run_pipeline(&cfg).unwrap(), &cfg, a.path()).unwrap();
    let seq = exphydro::io::run_pipeline_with(&cfg, Execution::Sequential).unwrap();
    write_report(&seq, &cfg, b.path()).unwrap();
    for f in files {
        let name = f.file_name().unwrap();
        assert_eq!(
            fs::read(&f).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn config_file_resolves_relative_basins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    fs::write(&cfg_path, "basins = [\"data/a.csv\"]\nlevels = [0.5]\n").unwrap();
    let cfg = RunConfig::from_path(&cfg_path).unwrap();
    assert_eq!(cfg.basins[0], dir.path().join("data/a.csv"));
    fs::write(&cfg_path, "levels = [0.5,\n  2.0]\n").unwrap();
    assert!(matches!(
        RunConfig::from_path(&cfg_path),
        Err(Error::Parse { .. })
    ));
}
