//! Two-parameter linear-reservoir benchmark: a bucket of capacity `c`
//! that spills when full, loses water to ET in proportion to its filling,
//! and drains linearly with residence time `k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lr2Params {
    /// Storage capacity (mm).
    pub c: f64,
    /// Residence time (days).
    pub k: f64,
}

impl Lr2Params {
    pub fn new(c: f64, k: f64) -> Result<Self> {
        let p = Lr2Params { c, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite() && self.k >= 1.0 && self.k.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "LR2 needs c > 0 and k >= 1 (c={}, k={})",
                self.c, self.k
            )));
        }
        Ok(())
    }

    /// Half-full store.
    pub fn initial_storage(&self) -> f64 {
        0.5 * self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lr2Step {
    pub storage: f64,
    pub q: f64,
    pub aet: f64,
}

/// One step from storage `w`. Forcings are assumed finite and non-negative.
#[inline]
pub fn lr2_advance(w: f64, p: f64, e: f64, params: &Lr2Params) -> Lr2Step {
    let Lr2Params { c, k } = *params;
    let filled = w + p;
    let overflow = (filled - c).max(0.0);
    let w1 = filled.min(c);
    let et = (e * (w1 / c)).min(w1);
    let w2 = (w1 - et).max(0.0);
    let drain = w2 / k;
    Lr2Step {
        storage: w2 - drain,
        q: overflow + drain,
        aet: et,
    }
}

/// Checked step returning `(w', q)`.
pub fn lr2_step(w: f64, p: f64, e: f64, params: &Lr2Params) -> Result<(f64, f64)> {
    params.validate()?;
    if !(p >= 0.0 && e >= 0.0 && p.is_finite() && e.is_finite()) {
        return Err(Error::Domain(format!(
            "forcing must be finite and non-negative (p={p}, e={e})"
        )));
    }
    if !(0.0..=params.c).contains(&w) {
        return Err(Error::Domain(format!(
            "storage {w} outside [0, {}]",
            params.c
        )));
    }
    let st = lr2_advance(w, p, e, params);
    Ok((st.storage, st.q))
}
