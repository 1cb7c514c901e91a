//! Basin time-series files.
//!
//! A basin is a CSV with header `date,precip_mm,tmin_c,tmax_c,q_mm[,pet_mm]`
//! (ISO-8601 dates, one row per consecutive day) plus an optional sidecar
//! `<stem>.meta.toml` holding `basin_id`, `latitude_deg` and `area_km2`.
//! Streamflow may be left empty on days without an observation; every
//! other field is required.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::calibration::Forcing;
use crate::error::{Error, Result};
use crate::hydro::{daily_mean_temp, oudin_pet, DailySeries, DateRange, Unit};

const HEADER: [&str; 5] = ["date", "precip_mm", "tmin_c", "tmax_c", "q_mm"];
const PET_COLUMN: &str = "pet_mm";

/// Unit of the streamflow column in the input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StreamflowUnit {
    #[default]
    #[serde(rename = "mm/day")]
    MmPerDay,
    /// Cubic metres per second; converted with the sidecar `area_km2`.
    #[serde(rename = "m3/s")]
    CubicMetresPerSecond,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinMeta {
    pub basin_id: Option<String>,
    pub latitude_deg: Option<f64>,
    pub area_km2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinRecord {
    pub basin_id: String,
    pub latitude_deg: Option<f64>,
    pub area_km2: Option<f64>,
    pub start: NaiveDate,
    pub precip: Vec<f64>,
    pub tmin: Vec<f64>,
    pub tmax: Vec<f64>,
    /// Observed streamflow (mm/day); NaN marks a missing observation.
    pub q_obs: Vec<f64>,
    pub pet: Vec<f64>,
}

impl BasinRecord {
    pub fn len(&self) -> usize {
        self.precip.len()
    }

    pub fn is_empty(&self) -> bool {
        self.precip.is_empty()
    }

    pub fn range(&self) -> DateRange {
        DateRange {
            start: self.start,
            end: self.start + Duration::days(self.len() as i64 - 1),
        }
    }

    pub fn date_at(&self, i: usize) -> NaiveDate {
        self.start + Duration::days(i as i64)
    }

    /// Sub-record restricted to `range`, which must lie inside the record.
    pub fn window(&self, range: &DateRange) -> Result<BasinRecord> {
        if !self.range().covers(range) {
            return Err(Error::Coverage(format!(
                "basin {} covers {}, requested {range}",
                self.basin_id,
                self.range()
            )));
        }
        let a = (range.start - self.start).num_days() as usize;
        let b = a + range.days();
        Ok(BasinRecord {
            basin_id: self.basin_id.clone(),
            latitude_deg: self.latitude_deg,
            area_km2: self.area_km2,
            start: range.start,
            precip: self.precip[a..b].to_vec(),
            tmin: self.tmin[a..b].to_vec(),
            tmax: self.tmax[a..b].to_vec(),
            q_obs: self.q_obs[a..b].to_vec(),
            pet: self.pet[a..b].to_vec(),
        })
    }

    pub fn forcing(&self) -> Result<Forcing> {
        Forcing::new(
            DailySeries::new(self.start, self.precip.clone(), Unit::MmPerDay)?,
            DailySeries::new(self.start, self.pet.clone(), Unit::MmPerDay)?,
        )
    }

    /// Observed streamflow; fails on the first missing day.
    pub fn observed(&self) -> Result<DailySeries> {
        if let Some(i) = self.q_obs.iter().position(|v| v.is_nan()) {
            return Err(Error::Coverage(format!(
                "basin {}: streamflow missing on {}",
                self.basin_id,
                self.date_at(i)
            )));
        }
        DailySeries::new(self.start, self.q_obs.clone(), Unit::MmPerDay)
    }

    pub fn mean_temperature(&self) -> Result<DailySeries> {
        let t = self
            .tmin
            .iter()
            .zip(&self.tmax)
            .enumerate()
            .map(|(i, (&lo, &hi))| {
                daily_mean_temp(lo, hi).map_err(|e| match e {
                    Error::Ordering { tmin, tmax, .. } => Error::Ordering {
                        date: Some(self.date_at(i)),
                        tmin,
                        tmax,
                    },
                    e => e,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        DailySeries::new(self.start, t, Unit::Celsius)
    }
}

/// Oudin PET for each day of a record, from the mean of tmin and tmax.
pub fn compute_pet(
    start: NaiveDate,
    tmin: &[f64],
    tmax: &[f64],
    latitude_deg: f64,
) -> Result<Vec<f64>> {
    let lat = latitude_deg.to_radians();
    tmin.iter()
        .zip(tmax)
        .enumerate()
        .map(|(i, (&lo, &hi))| {
            let date = start + Duration::days(i as i64);
            let t = daily_mean_temp(lo, hi).map_err(|_| Error::Ordering {
                date: Some(date),
                tmin: lo,
                tmax: hi,
            })?;
            oudin_pet(t, lat, date.ordinal())
        })
        .collect()
}

/// `<dir>/<stem>.meta.toml` next to a basin CSV.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path.file_stem().unwrap_or_default().to_string_lossy();
    csv_path.with_file_name(format!("{stem}.meta.toml"))
}

fn read_meta(csv_path: &Path) -> Result<BasinMeta> {
    let p = meta_path(csv_path);
    if !p.exists() {
        return Ok(BasinMeta::default());
    }
    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: p.clone(),
        line: e
            .span()
            .map_or(0, |s| text[..s.start].lines().count() as u64),
        message: e.message().to_string(),
    })
}

pub fn load_basin_csv(path: &Path) -> Result<BasinRecord> {
    load_basin_csv_with(path, StreamflowUnit::MmPerDay)
}

/// Loads and validates a basin file, computing PET when the file has no
/// `pet_mm` column and converting streamflow to mm/day when requested.
pub fn load_basin_csv_with(path: &Path, unit: StreamflowUnit) -> Result<BasinRecord> {
    let meta = read_meta(path)?;
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    let has_pet = match cols.as_slice() {
        c if c == HEADER => false,
        [head @ .., last] if head == HEADER && *last == PET_COLUMN => true,
        _ => {
            return Err(parse_err(
                1,
                format!(
                    "expected header '{}[,{PET_COLUMN}]', found '{}'",
                    HEADER.join(","),
                    cols.join(",")
                ),
            ))
        }
    };

    let q_factor = match unit {
        StreamflowUnit::MmPerDay => 1.0,
        StreamflowUnit::CubicMetresPerSecond => {
            let area = meta.area_km2.filter(|a| *a > 0.0).ok_or_else(|| {
                Error::Config(format!(
                    "{}: converting m3/s streamflow needs a positive area_km2 in {}",
                    path.display(),
                    meta_path(path).display()
                ))
            })?;
            // m3/s * 86400 s/day / (area_km2 * 1e6 m2) * 1000 mm/m
            86.4 / area
        }
    };

    let mut start = None;
    let mut prev: Option<NaiveDate> = None;
    let (mut precip, mut tmin, mut tmax, mut q_obs, mut pet) =
        (vec![], vec![], vec![], vec![], vec![]);
    for rec in rdr.records() {
        let rec =
            rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|e| parse_err(line, format!("bad date '{}': {e}", &rec[0])))?;
        if let Some(p) = prev {
            if date != p + Duration::days(1) {
                return Err(parse_err(
                    line,
                    format!("dates not contiguous: {date} follows {p} (gap or disorder)"),
                ));
            }
        } else {
            start = Some(date);
        }
        prev = Some(date);

        let field = |i: usize, name: &str| -> Result<f64> {
            let raw = &rec[i];
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(line, format!("{date}: {name} '{raw}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("{date}: {name} is not finite")));
            }
            Ok(v)
        };
        let p = field(1, "precip_mm")?;
        let lo = field(2, "tmin_c")?;
        let hi = field(3, "tmax_c")?;
        let q = if rec[4].is_empty() {
            f64::NAN
        } else {
            field(4, "q_mm")? * q_factor
        };
        if p < 0.0 {
            return Err(parse_err(
                line,
                format!("{date}: negative precipitation {p}"),
            ));
        }
        if q < 0.0 {
            return Err(parse_err(line, format!("{date}: negative streamflow {q}")));
        }
        if lo > hi {
            return Err(parse_err(
                line,
                Error::Ordering {
                    date: Some(date),
                    tmin: lo,
                    tmax: hi,
                }
                .to_string(),
            ));
        }
        if has_pet {
            let e = field(5, PET_COLUMN)?;
            if e < 0.0 {
                return Err(parse_err(line, format!("{date}: negative PET {e}")));
            }
            pet.push(e);
        }
        precip.push(p);
        tmin.push(lo);
        tmax.push(hi);
        q_obs.push(q);
    }
    let start = start.ok_or(Error::EmptyInput("basin file has no data rows"))?;
    if !has_pet {
        let lat = meta.latitude_deg.ok_or_else(|| {
            Error::Config(format!(
                "{}: no {PET_COLUMN} column and no latitude_deg in {}",
                path.display(),
                meta_path(path).display()
            ))
        })?;
        pet = compute_pet(start, &tmin, &tmax, lat)?;
    }
    let basin_id = meta.basin_id.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "basin".into())
    });
    Ok(BasinRecord {
        basin_id,
        latitude_deg: meta.latitude_deg,
        area_km2: meta.area_km2,
        start,
        precip,
        tmin,
        tmax,
        q_obs,
        pet,
    })
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Writes the CSV (always including `pet_mm`) and its sidecar.
pub fn write_basin_csv(record: &BasinRecord, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(record.len() * 48);
    out.push_str(&HEADER.join(","));
    out.push(',');
    out.push_str(PET_COLUMN);
    out.push('\n');
    for i in 0..record.len() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            record.date_at(i).format("%Y-%m-%d"),
            fmt_value(record.precip[i]),
            fmt_value(record.tmin[i]),
            fmt_value(record.tmax[i]),
            fmt_value(record.q_obs[i]),
            fmt_value(record.pet[i]),
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;
    let meta = BasinMeta {
        basin_id: Some(record.basin_id.clone()),
        latitude_deg: record.latitude_deg,
        area_km2: record.area_km2,
    };
    let mp = meta_path(path);
    let text = toml::to_string(&meta).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(&mp, text).map_err(|e| Error::io(&mp, e))
}
