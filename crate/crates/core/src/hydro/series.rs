use std::fmt;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "mm/day")]
    MmPerDay,
    #[serde(rename = "degC")]
    Celsius,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::MmPerDay => "mm/day",
            Unit::Celsius => "degC",
        })
    }
}

/// Inclusive range of calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::InvalidArgument(format!(
                "date range ends ({end}) before it starts ({start})"
            )));
        }
        Ok(DateRange { start, end })
    }

    pub fn days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }

    pub fn covers(&self, other: &DateRange) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl fmt::Display for DateRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..={}", self.start, self.end)
    }
}

/// Contiguous daily values starting at `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    start: NaiveDate,
    values: Vec<f64>,
    unit: Unit,
}

impl DailySeries {
    /// Validates finiteness, and non-negativity for `mm/day` quantities.
    pub fn new(start: NaiveDate, values: Vec<f64>, unit: Unit) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            let bad = !v.is_finite() || (unit == Unit::MmPerDay && v < 0.0);
            if bad {
                return Err(Error::InvalidArgument(format!(
                    "invalid {unit} value {v} on {}",
                    start + Duration::days(i as i64)
                )));
            }
        }
        Ok(DailySeries {
            start,
            values,
            unit,
        })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    /// Last date, or the day before `start` for an empty series.
    pub fn end(&self) -> NaiveDate {
        self.start + Duration::days(self.values.len() as i64 - 1)
    }

    pub fn range(&self) -> Option<DateRange> {
        (!self.values.is_empty()).then(|| DateRange {
            start: self.start,
            end: self.end(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn date_at(&self, i: usize) -> NaiveDate {
        self.start + Duration::days(i as i64)
    }

    pub fn index_of(&self, d: NaiveDate) -> Option<usize> {
        let off = (d - self.start).num_days();
        (off >= 0 && (off as usize) < self.values.len()).then_some(off as usize)
    }

    /// Index span `[from, to)` of `range` within this series.
    pub fn span(&self, range: &DateRange) -> Result<std::ops::Range<usize>> {
        match (self.index_of(range.start), self.index_of(range.end)) {
            (Some(a), Some(b)) => Ok(a..b + 1),
            _ => Err(Error::Coverage(format!(
                "series {}..={} does not cover {range}",
                self.start,
                self.end()
            ))),
        }
    }

    pub fn slice(&self, range: &DateRange) -> Result<&[f64]> {
        Ok(&self.values[self.span(range)?])
    }

    /// Same start date and length.
    pub fn check_aligned(&self, other: &DailySeries) -> Result<()> {
        if self.start != other.start || self.values.len() != other.values.len() {
            return Err(Error::Alignment(format!(
                "series starting {} ({} days) vs series starting {} ({} days)",
                self.start,
                self.values.len(),
                other.start,
                other.values.len()
            )));
        }
        Ok(())
    }
}
