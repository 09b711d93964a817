//! Fixed-step closed-loop simulation.
//!
//! Each sample: read the plant output, add seeded Gaussian measurement noise,
//! run the controller, queue the applied command behind the loop delay and
//! integrate the plant over one sample with RK4. The plant always runs in
//! `f64`; the controller runs in the selected [`Precision`].

use std::collections::VecDeque;
use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{fbtf_synthesize, DesignError, DesignSpec};
use crate::runtime::{ControllerKind, FbtfController, Limiter, RuntimeError, SsController, StepOutput};
use crate::scalar::{Precision, Scalar};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error("simulation diverged at sample {sample}")]
    Divergence { sample: usize },
}

/// Piecewise-constant signal given as `[time, value]` breakpoints. The value
/// is 0 before the first breakpoint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule(pub Vec<(f64, f64)>);

impl Schedule {
    pub fn value_at(&self, t: f64) -> f64 {
        self.0.iter().take_while(|(at, _)| *at <= t).last().map_or(0.0, |&(_, v)| v)
    }

    fn is_sorted(&self) -> bool {
        self.0.windows(2).all(|w| w[0].0 <= w[1].0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PlantModel {
    /// `x_1' = x_2, ..., x_n' = b0 (u + d)`, output `x_1`; the disturbance
    /// schedule is in input units.
    IntegratorChain { order: usize, b0: f64 },
    /// Averaged buck converter output stage behind an ideal current-mode
    /// inner loop: `C v' = i_L - v/R - i_load`, with `i_L` the applied
    /// command and `i_load` the disturbance schedule.
    BuckAveraged { capacitance: f64, resistance: f64 },
}

impl PlantModel {
    fn dim(&self) -> usize {
        match self {
            PlantModel::IntegratorChain { order, .. } => *order,
            PlantModel::BuckAveraged { .. } => 1,
        }
    }

    fn derivative(&self, x: &[f64], u: f64, d: f64, dx: &mut [f64]) {
        match *self {
            PlantModel::IntegratorChain { order, b0 } => {
                dx[..order - 1].copy_from_slice(&x[1..]);
                dx[order - 1] = b0 * (u + d);
            }
            PlantModel::BuckAveraged { capacitance, resistance } => {
                dx[0] = (u - x[0] / resistance - d) / capacitance;
            }
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidScenario(m.to_string()));
        match *self {
            PlantModel::IntegratorChain { order, b0 } => {
                if order == 0 {
                    return bad("integrator chain order must be >= 1");
                }
                if !b0.is_finite() {
                    return bad("integrator chain b0 must be finite");
                }
            }
            PlantModel::BuckAveraged { capacitance, resistance } => {
                if !(capacitance > 0.0 && capacitance.is_finite() && resistance > 0.0) {
                    return bad("buck capacitance and resistance must be positive");
                }
            }
        }
        Ok(())
    }
}

/// Tuning of the controller under test; the sample time is the scenario's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub order: usize,
    pub b0: f64,
    pub omega_cl: f64,
    pub k_eso: f64,
}

/// Output limits; a missing `rate_max` means no rate limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimiterConfig {
    pub u_min: f64,
    pub u_max: f64,
    #[serde(default)]
    pub rate_max: Option<f64>,
}

fn default_substeps() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub duration: f64,
    #[serde(rename = "T")]
    pub ts: f64,
    #[serde(default)]
    pub setpoint_schedule: Schedule,
    #[serde(default)]
    pub disturbance_schedule: Schedule,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub loop_delay_samples: usize,
    pub plant: PlantModel,
    pub controller: ControllerConfig,
    #[serde(default)]
    pub limiter: Option<LimiterConfig>,
    /// RK4 substeps per sample (at least 4).
    #[serde(default = "default_substeps")]
    pub substeps: usize,
}

impl Scenario {
    pub fn design_spec(&self) -> Result<DesignSpec, DesignError> {
        let c = &self.controller;
        DesignSpec::new(c.order, c.b0, self.ts, c.omega_cl, c.k_eso)
    }

    pub fn samples(&self) -> usize {
        (self.duration / self.ts).round() as usize
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidScenario(m.to_string()));
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return bad("T must be positive");
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return bad("duration must be non-negative");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be non-negative");
        }
        if self.substeps < 4 {
            return bad("substeps must be at least 4");
        }
        if !self.setpoint_schedule.is_sorted() || !self.disturbance_schedule.is_sorted() {
            return bad("schedules must be sorted by time");
        }
        self.plant.validate()?;
        self.design_spec()?;
        if let Some(l) = self.limiter {
            self.build_limiter::<f64>(&l)?;
        }
        Ok(())
    }

    fn build_limiter<S: Scalar>(&self, l: &LimiterConfig) -> Result<Limiter<S>, RuntimeError> {
        Limiter::new(l.u_min, l.u_max, l.rate_max.unwrap_or(f64::INFINITY), self.ts)
    }
}

/// One sample of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRecord {
    pub k: usize,
    pub t: f64,
    pub r: f64,
    /// Measurement seen by the controller, including noise.
    pub y: f64,
    pub y_true: f64,
    pub u: f64,
    pub u_lim: f64,
    /// Limiter engaged, i.e. `u != u_lim`.
    pub sat: bool,
    pub dist: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub ts: f64,
    pub records: Vec<SimRecord>,
}

pub const CSV_HEADER: &str = "k,t,r,y,y_true,u,u_lim,sat,dist";

impl SimTrace {
    /// Writes the trace as CSV with shortest round-trip number formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:?},{:?},{:?},{:?},{:?},{:?},{},{:?}",
                r.k, r.t, r.r, r.y, r.y_true, r.u, r.u_lim, r.sat as u8, r.dist
            )?;
        }
        Ok(())
    }

    /// Largest per-sample change of the applied output.
    pub fn max_output_step(&self) -> f64 {
        self.records.windows(2).map(|w| (w[1].u_lim - w[0].u_lim).abs()).fold(0.0, f64::max)
    }

    /// Fraction of samples with the limiter engaged.
    pub fn saturation_duty(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.sat).count() as f64 / self.records.len() as f64
    }
}

enum Ctrl<S> {
    Fbtf(FbtfController<S>),
    Ss(SsController<S>),
}

impl<S: Scalar> Ctrl<S> {
    fn step(&mut self, r: S, y: S) -> Result<StepOutput<S>, RuntimeError> {
        match self {
            Ctrl::Fbtf(c) => c.step(r, y),
            Ctrl::Ss(c) => c.step(r, y),
        }
    }
}

/// Runs `scenario` with the given controller form and precision.
pub fn simulate(scenario: &Scenario, kind: ControllerKind, precision: Precision) -> Result<SimTrace, SimError> {
    match precision {
        Precision::Single => run::<f32>(scenario, kind),
        Precision::Double => run::<f64>(scenario, kind),
    }
}

fn run<S: Scalar>(sc: &Scenario, kind: ControllerKind) -> Result<SimTrace, SimError> {
    sc.validate()?;
    let spec = sc.design_spec()?;
    let limiter = sc.limiter.map(|l| sc.build_limiter::<S>(&l)).transpose()?;
    let mut ctrl = match kind {
        ControllerKind::Fbtf => {
            let mut c = FbtfController::<S>::new(&fbtf_synthesize(&spec)?).strict(true);
            if let Some(l) = limiter {
                c = c.with_limiter(l);
            }
            c.init_direct(S::zero(), S::zero());
            Ctrl::Fbtf(c)
        }
        ControllerKind::StateSpace => {
            // zero estimate and output is the state-space image of init_direct(0, 0)
            let mut c = SsController::<S>::from_spec(&spec)?.strict(true);
            if let Some(l) = limiter {
                c = c.with_limiter(l);
            }
            c.start();
            Ctrl::Ss(c)
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let mut x = vec![0.0; sc.plant.dim()];
    let mut queue: VecDeque<f64> = std::iter::repeat_n(0.0, sc.loop_delay_samples).collect();
    let mut rk = Rk4::new(x.len());
    let n = sc.samples();
    let mut records = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * sc.ts;
        let r = sc.setpoint_schedule.value_at(t);
        let dist = sc.disturbance_schedule.value_at(t);
        let y_true = x[0];
        let e: f64 = StandardNormal.sample(&mut rng);
        let y = y_true + sc.noise_sigma * e;
        let out = ctrl.step(S::from_f64(r), S::from_f64(y))?;
        let (u, u_lim) = (out.u.to_f64(), out.u_lim.to_f64());
        if !(u.is_finite() && y_true.is_finite()) {
            return Err(SimError::Divergence { sample: k });
        }
        records.push(SimRecord { k, t, r, y, y_true, u, u_lim, sat: u != u_lim, dist });
        queue.push_back(u_lim);
        let applied = queue.pop_front().unwrap_or(u_lim);
        rk.advance(&sc.plant, &mut x, applied, dist, sc.ts, sc.substeps);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Divergence { sample: k });
        }
    }
    Ok(SimTrace { ts: sc.ts, records })
}

struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(dim: usize) -> Self {
        Rk4 { k: std::array::from_fn(|_| vec![0.0; dim]), tmp: vec![0.0; dim] }
    }

    /// Integrates over `ts` with input and disturbance held constant.
    fn advance(&mut self, plant: &PlantModel, x: &mut [f64], u: f64, d: f64, ts: f64, substeps: usize) {
        let h = ts / substeps as f64;
        let Rk4 { k, tmp } = self;
        for _ in 0..substeps {
            plant.derivative(x, u, d, &mut k[0]);
            for stage in 1..4 {
                let scale = if stage == 3 { h } else { 0.5 * h };
                let (prev, next) = k.split_at_mut(stage);
                for i in 0..x.len() {
                    tmp[i] = x[i] + scale * prev[stage - 1][i];
                }
                plant.derivative(tmp, u, d, &mut next[0]);
            }
            for i in 0..x.len() {
                x[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
            }
        }
    }
}

/// Time from `step_time` until `y_true` enters and stays within
/// `band * |step size|` of the new setpoint, measured up to the next change
/// of setpoint or disturbance. `None` if it never settles in that window.
pub fn settling_time(trace: &SimTrace, step_time: f64, band: f64) -> Option<f64> {
    let recs = &trace.records;
    let half = trace.ts / 2.0;
    let start = recs.iter().position(|r| r.t >= step_time - half)?;
    let before = if start > 0 { recs[start - 1].r } else { 0.0 };
    let target = recs[start].r;
    let dist = recs[start].dist;
    let end = recs[start..].iter().position(|r| r.r != target || r.dist != dist).map_or(recs.len(), |p| start + p);
    let tol = band * (target - before).abs();
    let window = &recs[start..end];
    match window.iter().rposition(|r| (r.y_true - target).abs() > tol) {
        None => Some(0.0),
        Some(last) if last + 1 < window.len() => Some(window[last + 1].t - recs[start].t),
        Some(_) => None,
    }
}
