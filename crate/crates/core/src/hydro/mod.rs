//! Daily lumped rainfall-runoff simulation.

mod forcing;
mod gr4j;
mod lr2;
mod series;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use forcing::{daily_mean_temp, extraterrestrial_radiation, oudin_pet};
pub use gr4j::{
    gr4j_step, uh_ordinates, Gr4j, Gr4jParams, Gr4jState, StepFluxes, UH1_LEN, UH2_LEN,
};
pub use lr2::{lr2_advance, lr2_step, Lr2Params, Lr2Step};
pub use series::{DailySeries, DateRange, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    Gr4j,
    Lr2,
}

/// Search bounds in natural units, one `(lo, hi)` pair per parameter.
const GR4J_BOUNDS: [(f64, f64); 4] = [(10.0, 3000.0), (-10.0, 10.0), (5.0, 1000.0), (0.5, 10.0)];
const LR2_BOUNDS: [(f64, f64); 2] = [(10.0, 2000.0), (1.0, 200.0)];

impl ModelId {
    pub const ALL: [ModelId; 2] = [ModelId::Gr4j, ModelId::Lr2];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Gr4j => "gr4j",
            ModelId::Lr2 => "lr2",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelId::Gr4j => &["x1", "x2", "x3", "x4"],
            ModelId::Lr2 => &["c", "k"],
        }
    }

    pub fn bounds(self) -> &'static [(f64, f64)] {
        match self {
            ModelId::Gr4j => &GR4J_BOUNDS,
            ModelId::Lr2 => &LR2_BOUNDS,
        }
    }

    pub fn n_params(self) -> usize {
        self.bounds().len()
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gr4j" => Ok(ModelId::Gr4j),
            "lr2" => Ok(ModelId::Lr2),
            _ => Err(Error::InvalidArgument(format!(
                "unknown model '{s}' (expected 'gr4j' or 'lr2')"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelParams {
    Gr4j(Gr4jParams),
    Lr2(Lr2Params),
}

impl ModelParams {
    pub fn model(&self) -> ModelId {
        match self {
            ModelParams::Gr4j(_) => ModelId::Gr4j,
            ModelParams::Lr2(_) => ModelId::Lr2,
        }
    }

    /// Builds validated parameters from natural-unit values in
    /// [`ModelId::param_names`] order.
    pub fn from_values(model: ModelId, v: &[f64]) -> Result<Self> {
        if v.len() != model.n_params() {
            return Err(Error::InvalidArgument(format!(
                "{model} takes {} parameters, got {}",
                model.n_params(),
                v.len()
            )));
        }
        Ok(match model {
            ModelId::Gr4j => ModelParams::Gr4j(Gr4jParams::new(v[0], v[1], v[2], v[3])?),
            ModelId::Lr2 => ModelParams::Lr2(Lr2Params::new(v[0], v[1])?),
        })
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            ModelParams::Gr4j(p) => vec![p.x1, p.x2, p.x3, p.x4],
            ModelParams::Lr2(p) => vec![p.c, p.k],
        }
    }

    pub fn within_bounds(&self) -> bool {
        self.values()
            .iter()
            .zip(self.model().bounds())
            .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.model().param_names();
        write!(f, "{}(", self.model())?;
        for (i, (n, v)) in names.iter().zip(self.values()).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n}={v}")?;
        }
        write!(f, ")")
    }
}

/// Full per-step accounting of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub q: Vec<f64>,
    pub aet: Vec<f64>,
    pub exchange: Vec<f64>,
    pub initial_storage: f64,
    pub final_storage: f64,
}

impl SimulationTrace {
    /// `sum P - sum AET - sum Q + sum exchange - delta storage`.
    pub fn balance_residual(&self, precip: &[f64]) -> f64 {
        let p: f64 = precip.iter().sum();
        let aet: f64 = self.aet.iter().sum();
        let q: f64 = self.q.iter().sum();
        let x: f64 = self.exchange.iter().sum();
        p - aet - q + x - (self.final_storage - self.initial_storage)
    }
}

/// Runs the model over raw forcing slices from the standard initial state.
/// Slices must have equal length and valid (finite, non-negative) values.
pub fn simulate_values(params: &ModelParams, precip: &[f64], pet: &[f64]) -> Result<Vec<f64>> {
    let mut q = Vec::with_capacity(precip.len());
    run(params, precip, pet, |fl| q.push(fl.q))?;
    Ok(q)
}

pub fn simulate_trace(
    params: &ModelParams,
    precip: &[f64],
    pet: &[f64],
) -> Result<SimulationTrace> {
    let n = precip.len();
    let (mut q, mut aet, mut exchange) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    let (initial_storage, final_storage) = run(params, precip, pet, |fl| {
        q.push(fl.q);
        aet.push(fl.aet);
        exchange.push(fl.exchange);
    })?;
    Ok(SimulationTrace {
        q,
        aet,
        exchange,
        initial_storage,
        final_storage,
    })
}

fn run(
    params: &ModelParams,
    precip: &[f64],
    pet: &[f64],
    mut sink: impl FnMut(StepFluxes),
) -> Result<(f64, f64)> {
    if precip.len() != pet.len() {
        return Err(Error::Alignment(format!(
            "{} precipitation values vs {} PET values",
            precip.len(),
            pet.len()
        )));
    }
    match params {
        ModelParams::Gr4j(p) => {
            let model = Gr4j::new(*p)?;
            let mut state = model.initial_state();
            let s0 = state.storage();
            for (&pp, &ee) in precip.iter().zip(pet) {
                sink(model.step(&mut state, pp, ee));
            }
            Ok((s0, state.storage()))
        }
        ModelParams::Lr2(p) => {
            p.validate()?;
            let mut w = p.initial_storage();
            let w0 = w;
            for (&pp, &ee) in precip.iter().zip(pet) {
                let st = lr2_advance(w, pp, ee, p);
                w = st.storage;
                sink(StepFluxes {
                    q: st.q,
                    aet: st.aet,
                    exchange: 0.0,
                });
            }
            Ok((w0, w))
        }
    }
}

/// Simulated discharge (mm/day) over the full forcing record. Callers slice
/// off the warm-up.
pub fn simulate(
    params: &ModelParams,
    precip: &DailySeries,
    pet: &DailySeries,
) -> Result<DailySeries> {
    precip.check_aligned(pet)?;
    for s in [precip, pet] {
        if s.unit() != Unit::MmPerDay {
            return Err(Error::InvalidArgument(format!(
                "forcing must be in mm/day, got {}",
                s.unit()
            )));
        }
    }
    let q = simulate_values(params, precip.values(), pet.values())?;
    DailySeries::new(precip.start(), q, Unit::MmPerDay)
}
