//! Forcing preparation: daily mean temperature and temperature-based PET.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Solar constant, MJ m^-2 min^-1.
const GSC: f64 = 0.0820;

pub fn daily_mean_temp(tmin: f64, tmax: f64) -> Result<f64> {
    if !tmin.is_finite() || !tmax.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "temperatures must be finite (tmin={tmin}, tmax={tmax})"
        )));
    }
    if tmin > tmax {
        return Err(Error::Ordering {
            date: None,
            tmin,
            tmax,
        });
    }
    Ok(0.5 * (tmin + tmax))
}

/// Extraterrestrial radiation (MJ m^-2 day^-1) at `latitude` (radians) on
/// calendar day `day_of_year`; day 366 is evaluated as day 365.
pub fn extraterrestrial_radiation(latitude: f64, day_of_year: u32) -> Result<f64> {
    if !(1..=366).contains(&day_of_year) {
        return Err(Error::Domain(format!(
            "day of year must be in 1..=366, got {day_of_year}"
        )));
    }
    if !(latitude.abs() < PI / 2.0) {
        return Err(Error::Domain(format!(
            "latitude must satisfy |lat| < pi/2 radians, got {latitude}"
        )));
    }
    let j = day_of_year.min(365) as f64;
    let decl = 0.409 * (2.0 * PI * j / 365.0 - 1.39).sin();
    let dr = 1.0 + 0.033 * (2.0 * PI * j / 365.0).cos();
    let ws = (-latitude.tan() * decl.tan()).clamp(-1.0, 1.0).acos();
    Ok((24.0 * 60.0 / PI)
        * GSC
        * dr
        * (ws * latitude.sin() * decl.sin() + latitude.cos() * decl.cos() * ws.sin()))
}

/// Oudin PET (mm/day): `Re * 0.408 * (T + 5) / 100`, zero when `T + 5 <= 0`.
pub fn oudin_pet(tmean: f64, latitude: f64, day_of_year: u32) -> Result<f64> {
    if !tmean.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "temperature is not finite ({tmean})"
        )));
    }
    let re = extraterrestrial_radiation(latitude, day_of_year)?;
    if tmean + 5.0 <= 0.0 {
        return Ok(0.0);
    }
    Ok((re * 0.408 * (tmean + 5.0) / 100.0).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_temp_examples() {
        assert_eq!(daily_mean_temp(0.0, 10.0).unwrap(), 5.0);
        assert_eq!(daily_mean_temp(-8.0, -2.0).unwrap(), -5.0);
        assert_eq!(daily_mean_temp(3.3, 3.3).unwrap(), 3.3);
        assert!(matches!(
            daily_mean_temp(2.0, 1.0),
            Err(Error::Ordering { .. })
        ));
    }

    #[test]
    fn pet_zero_at_and_below_threshold() {
        for lat in [-1.0, 0.0, 0.8] {
            for day in [1, 100, 200, 366] {
                assert_eq!(oudin_pet(-10.0, lat, day).unwrap(), 0.0);
                assert_eq!(oudin_pet(-5.0, lat, day).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn pet_matches_scripted_oracle() {
        // Independent evaluation (Python, math module) of the declination,
        // sunset-angle and radiation formulas at lat 0, day 80, T = 20.
        let expected = 3.858_069_736_977_822_3;
        let got = oudin_pet(20.0, 0.0, 80).unwrap();
        assert!((got - expected).abs() < 1e-6, "{got}");
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(oudin_pet(10.0, 0.1, 0), Err(Error::Domain(_))));
        assert!(matches!(oudin_pet(10.0, 0.1, 367), Err(Error::Domain(_))));
        assert!(matches!(
            oudin_pet(10.0, PI / 2.0, 10),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn polar_night_gives_zero_radiation() {
        // 80 N in late December: sunset hour angle clamps to 0
        let re = extraterrestrial_radiation(80f64.to_radians(), 355).unwrap();
        assert!(re.abs() < 1e-12);
        assert_eq!(oudin_pet(10.0, 80f64.to_radians(), 355).unwrap(), 0.0);
    }
}
