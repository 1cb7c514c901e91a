//! Four-parameter GR4J daily model: a production store, two unit
//! hydrographs, groundwater exchange and a non-linear routing store.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Buffer lengths; sufficient for `x4 <= 10`.
pub const UH1_LEN: usize = 20;
pub const UH2_LEN: usize = 40;

pub const X4_MIN: f64 = 0.5;
pub const X4_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gr4jParams {
    /// Production store capacity (mm).
    pub x1: f64,
    /// Groundwater exchange coefficient (mm/day).
    pub x2: f64,
    /// Routing store capacity (mm).
    pub x3: f64,
    /// Unit-hydrograph time base (days).
    pub x4: f64,
}

impl Gr4jParams {
    pub fn new(x1: f64, x2: f64, x3: f64, x4: f64) -> Result<Self> {
        let p = Gr4jParams { x1, x2, x3, x4 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let Gr4jParams { x1, x2, x3, x4 } = *self;
        if ![x1, x2, x3, x4].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite GR4J parameter in {self:?}"
            )));
        }
        if x1 <= 0.0 || x3 <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "GR4J store capacities must be positive (x1={x1}, x3={x3})"
            )));
        }
        if !(X4_MIN..=X4_MAX).contains(&x4) {
            return Err(Error::Domain(format!(
                "GR4J x4 must lie in [{X4_MIN}, {X4_MAX}] days, got {x4}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gr4jState {
    /// Production store level (mm).
    pub s: f64,
    /// Routing store level (mm).
    pub r: f64,
    /// Pending unit-hydrograph outputs; index 0 is released next.
    pub uh1: [f64; UH1_LEN],
    pub uh2: [f64; UH2_LEN],
}

impl Gr4jState {
    /// `s = 0.3 x1`, `r = 0.5 x3`, empty unit hydrographs.
    pub fn initial(params: &Gr4jParams) -> Self {
        Gr4jState {
            s: 0.3 * params.x1,
            r: 0.5 * params.x3,
            uh1: [0.0; UH1_LEN],
            uh2: [0.0; UH2_LEN],
        }
    }

    pub fn empty() -> Self {
        Gr4jState {
            s: 0.0,
            r: 0.0,
            uh1: [0.0; UH1_LEN],
            uh2: [0.0; UH2_LEN],
        }
    }

    /// Water held in the stores and in transit through the unit hydrographs.
    pub fn storage(&self) -> f64 {
        self.s + self.r + self.uh1.iter().sum::<f64>() + self.uh2.iter().sum::<f64>()
    }
}

fn sh1(t: f64, x4: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t < x4 {
        (t / x4).powf(2.5)
    } else {
        1.0
    }
}

fn sh2(t: f64, x4: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t <= x4 {
        0.5 * (t / x4).powf(2.5)
    } else if t < 2.0 * x4 {
        1.0 - 0.5 * (2.0 - t / x4).powf(2.5)
    } else {
        1.0
    }
}

/// Unit-hydrograph ordinates: `ceil(x4)` for UH1 and `ceil(2 x4)` for UH2,
/// differences of the S-curves at consecutive whole days.
pub fn uh_ordinates(x4: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(X4_MIN..=X4_MAX).contains(&x4) {
        return Err(Error::Domain(format!(
            "x4 must lie in [{X4_MIN}, {X4_MAX}] days, got {x4}"
        )));
    }
    let ordinates = |len: usize, sh: fn(f64, f64) -> f64| -> Vec<f64> {
        (1..=len)
            .map(|i| sh(i as f64, x4) - sh((i - 1) as f64, x4))
            .collect()
    };
    Ok((
        ordinates(x4.ceil() as usize, sh1),
        ordinates((2.0 * x4).ceil() as usize, sh2),
    ))
}

/// Fluxes of one model step (mm/day).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepFluxes {
    pub q: f64,
    pub aet: f64,
    /// Groundwater exchange actually applied (positive = gain).
    pub exchange: f64,
}

/// GR4J with precomputed unit-hydrograph ordinates.
#[derive(Debug, Clone)]
pub struct Gr4j {
    params: Gr4jParams,
    ord1: [f64; UH1_LEN],
    ord2: [f64; UH2_LEN],
    n1: usize,
    n2: usize,
}

impl Gr4j {
    pub fn new(params: Gr4jParams) -> Result<Self> {
        params.validate()?;
        let (o1, o2) = uh_ordinates(params.x4)?;
        let mut ord1 = [0.0; UH1_LEN];
        let mut ord2 = [0.0; UH2_LEN];
        ord1[..o1.len()].copy_from_slice(&o1);
        ord2[..o2.len()].copy_from_slice(&o2);
        Ok(Gr4j {
            params,
            ord1,
            ord2,
            n1: o1.len(),
            n2: o2.len(),
        })
    }

    pub fn params(&self) -> &Gr4jParams {
        &self.params
    }

    pub fn initial_state(&self) -> Gr4jState {
        Gr4jState::initial(&self.params)
    }

    /// Advances `state` by one day of precipitation `p` and PET `e`.
    /// Forcings are assumed finite and non-negative.
    pub fn step(&self, state: &mut Gr4jState, p: f64, e: f64) -> StepFluxes {
        let Gr4jParams { x1, x2, x3, .. } = self.params;

        // interception
        let (pn, en) = if p >= e { (p - e, 0.0) } else { (0.0, e - p) };
        let mut aet = p.min(e);

        let mut s = state.s;
        let mut ps = 0.0;
        if pn > 0.0 {
            let sr = s / x1;
            let tw = (pn / x1).tanh();
            ps = x1 * (1.0 - sr * sr) * tw / (1.0 + sr * tw);
            s += ps;
        }
        if en > 0.0 {
            let sr = s / x1;
            let tw = (en / x1).tanh();
            let es = s * (2.0 - sr) * tw / (1.0 + (1.0 - sr) * tw);
            s -= es;
            aet += es;
        }
        s = s.clamp(0.0, x1);

        let perc = s * (1.0 - (1.0 + (4.0 * s / (9.0 * x1)).powi(4)).powf(-0.25));
        s -= perc;

        let pr = perc + (pn - ps);
        let q9 = convolve(&mut state.uh1, &self.ord1[..self.n1], 0.9 * pr);
        let q1 = convolve(&mut state.uh2, &self.ord2[..self.n2], 0.1 * pr);

        let f = x2 * (state.r / x3).powf(3.5);
        let mut r = state.r + q9 + f;
        let mut exchange = f;
        if r < 0.0 {
            exchange = -(state.r + q9);
            r = 0.0;
        }
        let qr = r * (1.0 - (1.0 + (r / x3).powi(4)).powf(-0.25));
        r -= qr;

        let mut qd = q1 + f;
        if qd < 0.0 {
            exchange -= q1;
            qd = 0.0;
        } else {
            exchange += f;
        }

        state.s = s;
        state.r = r.min(x3);
        StepFluxes {
            q: qr + qd,
            aet,
            exchange,
        }
    }
}

/// Adds `input` spread over `ord` to the pending outputs in `buf`, then
/// releases and returns the head.
#[inline]
fn convolve(buf: &mut [f64], ord: &[f64], input: f64) -> f64 {
    for (b, o) in buf.iter_mut().zip(ord) {
        *b += o * input;
    }
    let out = buf[0];
    buf.copy_within(1.., 0);
    let last = buf.len() - 1;
    buf[last] = 0.0;
    out
}

/// Single pure step: returns the advanced state and the discharge.
pub fn gr4j_step(
    state: &Gr4jState,
    p: f64,
    e: f64,
    params: &Gr4jParams,
) -> Result<(Gr4jState, f64)> {
    if !(p >= 0.0 && e >= 0.0 && p.is_finite() && e.is_finite()) {
        return Err(Error::Domain(format!(
            "forcing must be finite and non-negative (p={p}, e={e})"
        )));
    }
    let model = Gr4j::new(*params)?;
    let mut next = state.clone();
    let fl = model.step(&mut next, p, e);
    Ok((next, fl.q))
}
