//! Synthetic basins with known generating parameters.

use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hydro::{simulate_values, Gr4jParams, ModelParams};
use crate::io::basin::{compute_pet, BasinRecord};

/// Generating parameters of synthetic streamflow.
pub const SYNTH_THETA: Gr4jParams = Gr4jParams {
    x1: 350.0,
    x2: 0.5,
    x3: 90.0,
    x4: 1.7,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthOptions {
    pub seed: u64,
    pub n_years: u32,
    pub start_year: i32,
    pub latitude_deg: f64,
    /// Standard deviation of the log-normal multiplicative noise on
    /// streamflow; 0 leaves the simulation untouched.
    pub noise: f64,
    pub theta: Gr4jParams,
    /// Mean precipitation depth on wet days (mm).
    pub wet_day_mean_mm: f64,
}

impl SynthOptions {
    pub fn new(seed: u64, n_years: u32) -> Self {
        SynthOptions {
            seed,
            n_years,
            start_year: 1980,
            latitude_deg: 45.0,
            noise: 0.3,
            theta: SYNTH_THETA,
            wet_day_mean_mm: 7.0,
        }
    }
}

/// Synthetic basin with default options.
pub fn synth_basin(seed: u64, n_years: u32) -> Result<BasinRecord> {
    synth_basin_with(&SynthOptions::new(seed, n_years))
}

/// Seasonal sinusoidal temperatures, Markov-chain intermittent rainfall,
/// and streamflow from GR4J at `theta` times seeded log-normal noise.
pub fn synth_basin_with(opt: &SynthOptions) -> Result<BasinRecord> {
    if opt.n_years == 0 {
        return Err(Error::InvalidArgument(
            "synthetic basin needs at least one year".into(),
        ));
    }
    if !(opt.noise >= 0.0 && opt.noise.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise must be >= 0, got {}",
            opt.noise
        )));
    }
    opt.theta.validate()?;
    let start = NaiveDate::from_ymd_opt(opt.start_year, 1, 1)
        .ok_or_else(|| Error::InvalidArgument(format!("bad start year {}", opt.start_year)))?;
    let end = NaiveDate::from_ymd_opt(opt.start_year + opt.n_years as i32, 1, 1)
        .ok_or_else(|| Error::InvalidArgument("end year out of range".into()))?;
    let n = (end - start).num_days() as usize;

    let mut rain_rng = ChaCha8Rng::seed_from_u64(opt.seed);
    rain_rng.set_stream(0);
    let depth =
        Exp::new(1.0 / opt.wet_day_mean_mm).map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let mut precip = Vec::with_capacity(n);
    let mut tmin = Vec::with_capacity(n);
    let mut tmax = Vec::with_capacity(n);
    let mut wet = false;
    for i in 0..n {
        let doy = (start + chrono::Duration::days(i as i64)).ordinal() as f64;
        let season = (2.0 * PI * (doy - 105.0) / 365.25).sin();
        let tmean = 9.0 + 11.0 * season;
        let half_range = 5.0 + 1.5 * season;
        tmin.push(tmean - half_range);
        tmax.push(tmean + half_range);

        // wetter winters
        let p_wet = if wet { 0.62 } else { 0.28 } - 0.06 * season;
        wet = rain_rng.random::<f64>() < p_wet;
        precip.push(if wet {
            depth.sample(&mut rain_rng)
        } else {
            0.0
        });
    }

    let pet = compute_pet(start, &tmin, &tmax, opt.latitude_deg)?;
    let sim = simulate_values(&ModelParams::Gr4j(opt.theta), &precip, &pet)?;

    let mut noise_rng = ChaCha8Rng::seed_from_u64(opt.seed);
    noise_rng.set_stream(1);
    let s = opt.noise;
    let q_obs = sim
        .iter()
        .map(|&q| {
            let z: f64 = StandardNormal.sample(&mut noise_rng);
            q * (s * z - 0.5 * s * s).exp()
        })
        .collect();

    Ok(BasinRecord {
        basin_id: format!("synth-{}", opt.seed),
        latitude_deg: Some(opt.latitude_deg),
        area_km2: None,
        start,
        precip,
        tmin,
        tmax,
        q_obs,
        pet,
    })
}
