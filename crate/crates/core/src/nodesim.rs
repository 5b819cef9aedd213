//! Battery-managed on/off duty cycle of a self-powered node.
//!
//! While the MCU is on, the node drains one activity cycle's energy per
//! activity window. Once the residual energy drops below the threshold `T` the
//! MCU switches off and the piezoelectric harvester recharges the battery
//! until the reference level `RE` is reached, then the MCU switches back on.
//!
//! The harvester is the mass-spring-damper plant under sinusoidal base
//! excitation. Extracted power is `c_e * v^2`, and the matching reaction force
//! `-c_e * v` acts on the mass. With a controller, a PID actuator drives the
//! mass to follow a sinusoidal displacement reference whose amplitude scales
//! with the normalized energy error `(RE - E_r) / RE`. The plant only evolves
//! while the MCU is off; its clock and state are frozen during on phases.
//!
//! Every step books energy so that `E_r(t) = E_h(t) + E_r(t-1) - E_c(t)`
//! holds exactly: the booked flows are the realized residual differences.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::energy::{energy_error, EnergyParams};
use crate::error::{Error, Result};
use crate::lti::MsdParams;
use crate::pid::PidGains;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum McuMode {
    On,
    Off,
}

impl McuMode {
    pub fn as_str(self) -> &'static str {
        match self {
            McuMode::On => "on",
            McuMode::Off => "off",
        }
    }
}

/// Sinusoidal base displacement `y(t) = amplitude * sin(frequency * t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Excitation {
    pub amplitude_m: f64,
    pub frequency_rad_s: f64,
}

impl Excitation {
    /// Resonant excitation sized so that the passive harvester settles at
    /// `target_power_w` of extracted power.
    ///
    /// At resonance the relative velocity amplitude is `F / (D + c_e)` with
    /// `F = M A w^2 = K A`, and mean extracted power is `c_e V^2 / 2`.
    pub fn resonant_for_power(
        plant: &MsdParams,
        electrical_damping: f64,
        target_power_w: f64,
    ) -> Self {
        let total_damping = plant.damping_ns_per_m + electrical_damping;
        let force = total_damping * (2.0 * target_power_w / electrical_damping).sqrt();
        Self {
            amplitude_m: force / plant.stiffness_n_per_m,
            frequency_rad_s: plant.natural_frequency_rad_s(),
        }
    }
}

/// PID harvesting loop settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarvestController {
    pub gains: PidGains,
    /// Reference displacement amplitude at full energy error.
    pub reference_amplitude_m: f64,
    /// Lower bound on the normalized effort so every off phase terminates.
    pub min_effort: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarvestConfig {
    pub plant: MsdParams,
    #[serde(rename = "electrical_damping_Ns_per_m")]
    pub electrical_damping_ns_per_m: f64,
    pub excitation: Excitation,
    pub controller: Option<HarvestController>,
    pub dt_s: f64,
    #[serde(rename = "capacity_J")]
    pub capacity_j: f64,
    /// Duration over which one full activity cycle's energy is drained.
    pub activity_window_s: f64,
    /// Radio link distance used for the transmit energy.
    pub distance_m: f64,
}

/// Mean passive harvest power the default excitation is sized for.
pub const DEFAULT_PASSIVE_POWER_W: f64 = 1e-3;

impl HarvestConfig {
    /// Defaults for the Mica2 harvester: matched electrical damping, resonant
    /// excitation sized for 1 mW passive harvest, 1 ms steps, 0.5 J storage.
    pub fn mica2(gains: Option<PidGains>) -> Self {
        let plant = MsdParams::mica2();
        let electrical = plant.damping_ns_per_m;
        Self {
            plant,
            electrical_damping_ns_per_m: electrical,
            excitation: Excitation::resonant_for_power(&plant, electrical, DEFAULT_PASSIVE_POWER_W),
            controller: gains.map(|gains| HarvestController {
                gains,
                reference_amplitude_m: 0.2,
                min_effort: 0.25,
            }),
            dt_s: 1e-3,
            capacity_j: 0.5,
            activity_window_s: 0.3,
            distance_m: 50.0,
        }
    }

    pub fn validate(&self, params: &EnergyParams) -> Result<()> {
        self.plant.validate()?;
        let positive = [
            (
                "electrical_damping_Ns_per_m",
                self.electrical_damping_ns_per_m,
            ),
            ("dt_s", self.dt_s),
            ("activity_window_s", self.activity_window_s),
            ("frequency_rad_s", self.excitation.frequency_rad_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.excitation.amplitude_m.is_finite() && self.excitation.amplitude_m >= 0.0) {
            return Err(Error::invalid("amplitude_m", "must be non-negative"));
        }
        if !(self.distance_m.is_finite() && self.distance_m >= 0.0) {
            return Err(Error::invalid("distance_m", "must be non-negative"));
        }
        if self.capacity_j.is_nan() || self.capacity_j < params.reference_energy_j {
            return Err(Error::invalid(
                "capacity_J",
                format!(
                    "must be at least the reference energy {} J, got {}",
                    params.reference_energy_j, self.capacity_j
                ),
            ));
        }
        if params.initial_energy_j > self.capacity_j {
            return Err(Error::invalid(
                "initial_energy_J",
                "exceeds storage capacity",
            ));
        }
        if let Some(c) = &self.controller {
            c.gains.validate()?;
            if !(c.reference_amplitude_m >= 0.0 && (0.0..=1.0).contains(&c.min_effort)) {
                return Err(Error::invalid(
                    "controller",
                    "need reference_amplitude_m >= 0 and min_effort in [0, 1]",
                ));
            }
        }
        Ok(())
    }
}

/// Complete simulation state of the node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub residual_energy_j: f64,
    pub mode: McuMode,
    pub plant_position_m: f64,
    pub plant_velocity_m_s: f64,
    /// Integral of the PID tracking error.
    pub pid_integral: f64,
    /// Time the harvester has spent running (off phases only).
    pub harvest_clock_s: f64,
    pub time_s: f64,
    /// Completed on-to-off transitions.
    pub cycle_count: usize,
    /// Cumulative work done on the mass by the base excitation.
    pub excitation_work_j: f64,
    /// Cumulative work done on the mass by the PID actuator.
    pub actuator_work_j: f64,
    /// Cumulative energy extracted through electrical damping, before any
    /// clamping at storage capacity.
    pub extracted_j: f64,
}

impl NodeState {
    pub fn initial(params: &EnergyParams) -> Self {
        Self {
            residual_energy_j: params.initial_energy_j,
            mode: McuMode::On,
            plant_position_m: 0.0,
            plant_velocity_m_s: 0.0,
            pid_integral: 0.0,
            harvest_clock_s: 0.0,
            time_s: 0.0,
            cycle_count: 0,
            excitation_work_j: 0.0,
            actuator_work_j: 0.0,
            extracted_j: 0.0,
        }
    }
}

/// Instantaneous power extracted through the electrical damping, `c_e v^2`.
pub fn harvest_power(state: &NodeState, cfg: &HarvestConfig) -> f64 {
    cfg.electrical_damping_ns_per_m * state.plant_velocity_m_s * state.plant_velocity_m_s
}

/// One step's bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub t_s: f64,
    /// Mode the node was in while the step's flows occurred.
    pub mode: McuMode,
    #[serde(rename = "residual_J")]
    pub residual_j: f64,
    #[serde(rename = "harvested_J")]
    pub harvested_j: f64,
    #[serde(rename = "consumed_J")]
    pub consumed_j: f64,
    pub z_m: f64,
}

/// Harvester ODE state: position, velocity, PID integral and the three
/// cumulative energy integrals.
type PlantState = [f64; 6];

struct PlantDynamics<'a> {
    cfg: &'a HarvestConfig,
    /// Reference amplitude held over the step.
    reference_amplitude: f64,
}

impl PlantDynamics<'_> {
    fn derivative(&self, tau: f64, s: &PlantState) -> PlantState {
        let cfg = self.cfg;
        let p = &cfg.plant;
        let (z, v, integral) = (s[0], s[1], s[2]);
        let w = cfg.excitation.frequency_rad_s;
        let (sin, cos) = (w * tau).sin_cos();
        // f = -M y'' with y = A sin(w t)
        let force = p.mass_kg * cfg.excitation.amplitude_m * w * w * sin;
        let (u, err) = match &cfg.controller {
            Some(c) => {
                let r = self.reference_amplitude * sin;
                let r_dot = self.reference_amplitude * w * cos;
                let err = r - z;
                let g = &c.gains;
                (g.kp * err + g.ki * integral + g.kd * (r_dot - v), err)
            }
            None => (0.0, 0.0),
        };
        let c_e = cfg.electrical_damping_ns_per_m;
        let accel =
            (force + u - (p.damping_ns_per_m + c_e) * v - p.stiffness_n_per_m * z) / p.mass_kg;
        [v, accel, err, force * v, u * v, c_e * v * v]
    }

    fn rk4(&self, tau: f64, s: &PlantState, dt: f64) -> PlantState {
        let add = |a: &PlantState, k: &PlantState, h: f64| -> PlantState {
            let mut out = *a;
            for i in 0..6 {
                out[i] += h * k[i];
            }
            out
        };
        let k1 = self.derivative(tau, s);
        let k2 = self.derivative(tau + 0.5 * dt, &add(s, &k1, 0.5 * dt));
        let k3 = self.derivative(tau + 0.5 * dt, &add(s, &k2, 0.5 * dt));
        let k4 = self.derivative(tau + dt, &add(s, &k3, dt));
        let mut out = *s;
        for i in 0..6 {
            out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }
}

fn check_livelock(params: &EnergyParams, cfg: &HarvestConfig) -> Result<()> {
    let cycle = params.cycle_energy(cfg.distance_m).total_j;
    let band = params.reference_energy_j - params.threshold_energy_j;
    if cycle > band {
        return Err(Error::Livelock {
            cycle_energy_j: cycle,
            band_j: band,
        });
    }
    Ok(())
}

/// Advances the node by one `cfg.dt_s` step.
///
/// On: drain `cycle_energy * dt / activity_window`; dropping below `T` pays
/// the MCU switch energy and turns the MCU off. Off: a node at or above `RE`
/// pays the switch energy and turns on; otherwise the harvester advances one
/// step and its extracted energy is stored, clamped at capacity. Switch costs
/// are always booked to an on-mode record.
pub fn step_node(
    state: &NodeState,
    params: &EnergyParams,
    cfg: &HarvestConfig,
) -> Result<(NodeState, NodeRecord)> {
    check_livelock(params, cfg)?;
    let dt = cfg.dt_s;
    let mut next = *state;
    let before = state.residual_energy_j;
    let record_mode;
    match state.mode {
        McuMode::On => {
            let drain = params.cycle_energy(cfg.distance_m).total_j * dt / cfg.activity_window_s;
            let mut residual = (before - drain).max(0.0);
            if residual < params.threshold_energy_j {
                residual = (residual - params.mcu_switch_energy()).max(0.0);
                next.mode = McuMode::Off;
                next.cycle_count += 1;
            }
            next.residual_energy_j = residual;
            record_mode = McuMode::On;
        }
        McuMode::Off if before >= params.reference_energy_j => {
            next.residual_energy_j = (before - params.mcu_switch_energy()).max(0.0);
            next.mode = McuMode::On;
            record_mode = McuMode::On;
        }
        McuMode::Off => {
            let reference_amplitude = match &cfg.controller {
                Some(c) => {
                    let effort =
                        energy_error(params.reference_energy_j, before) / params.reference_energy_j;
                    c.reference_amplitude_m * effort.clamp(c.min_effort, 1.0)
                }
                None => 0.0,
            };
            let dynamics = PlantDynamics {
                cfg,
                reference_amplitude,
            };
            let s0: PlantState = [
                state.plant_position_m,
                state.plant_velocity_m_s,
                state.pid_integral,
                state.excitation_work_j,
                state.actuator_work_j,
                state.extracted_j,
            ];
            let s1 = dynamics.rk4(state.harvest_clock_s, &s0, dt);
            let extracted = (s1[5] - s0[5]).max(0.0);
            next.plant_position_m = s1[0];
            next.plant_velocity_m_s = s1[1];
            next.pid_integral = s1[2];
            next.excitation_work_j = s1[3];
            next.actuator_work_j = s1[4];
            next.extracted_j = s1[5];
            next.harvest_clock_s = state.harvest_clock_s + dt;
            next.residual_energy_j = (before + extracted).min(cfg.capacity_j);
            record_mode = McuMode::Off;
        }
    }
    next.time_s = state.time_s + dt;

    let after = next.residual_energy_j;
    let (harvested_j, consumed_j) = if after >= before {
        (after - before, 0.0)
    } else {
        (0.0, before - after)
    };
    let record = NodeRecord {
        t_s: next.time_s,
        mode: record_mode,
        residual_j: after,
        harvested_j,
        consumed_j,
        z_m: next.plant_position_m,
    };
    Ok((next, record))
}

/// A complete duty-cycle run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeTrace {
    pub dt_s: f64,
    /// Record of the initial state at `t = 0` (no flows).
    pub initial: NodeRecord,
    pub steps: Vec<NodeRecord>,
    pub final_state: NodeState,
}

impl NodeTrace {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Initial record followed by every step.
    pub fn records(&self) -> impl Iterator<Item = &NodeRecord> {
        std::iter::once(&self.initial).chain(self.steps.iter())
    }

    /// CSV with header `t,mode,residual_J,harvested_J,consumed_J,z_m`,
    /// keeping every `stride`-th step (the initial row is always written).
    pub fn write_csv<W: Write>(&self, mut w: W, stride: usize) -> io::Result<()> {
        let stride = stride.max(1);
        writeln!(w, "t,mode,residual_J,harvested_J,consumed_J,z_m")?;
        let rows = std::iter::once(&self.initial)
            .chain(self.steps.iter().skip(stride - 1).step_by(stride));
        for r in rows {
            writeln!(
                w,
                "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.t_s,
                r.mode.as_str(),
                r.residual_j,
                r.harvested_j,
                r.consumed_j,
                r.z_m
            )?;
        }
        Ok(())
    }

    /// Times at which the MCU turned off (end of the switching step).
    pub fn off_transitions(&self) -> Vec<f64> {
        self.transitions(McuMode::On, McuMode::Off)
    }

    /// Times at which the MCU turned on (start of the switching step).
    pub fn on_transitions(&self) -> Vec<f64> {
        self.transitions(McuMode::Off, McuMode::On)
    }

    fn transitions(&self, from: McuMode, to: McuMode) -> Vec<f64> {
        let records: Vec<&NodeRecord> = self.records().collect();
        records
            .windows(2)
            .filter(|w| w[0].mode == from && w[1].mode == to)
            .map(|w| w[0].t_s)
            .collect()
    }

    /// Durations of each completed off (recharge) phase.
    pub fn recharge_times(&self) -> Vec<f64> {
        let ons = self.on_transitions();
        self.off_transitions()
            .iter()
            .filter_map(|&off| ons.iter().find(|&&on| on >= off).map(|&on| on - off))
            .collect()
    }

    pub fn residual_range(&self) -> (f64, f64) {
        self.records()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.residual_j), hi.max(r.residual_j))
            })
    }
}

/// Runs the duty cycle from the initial state (MCU on, plant at rest).
pub fn run_sim(params: &EnergyParams, cfg: &HarvestConfig, t_end_s: f64) -> Result<NodeTrace> {
    params.validate()?;
    cfg.validate(params)?;
    check_livelock(params, cfg)?;
    if !(t_end_s.is_finite() && t_end_s >= 0.0) {
        return Err(Error::invalid("t_end_s", "must be non-negative"));
    }
    let mut state = NodeState::initial(params);
    let initial = NodeRecord {
        t_s: 0.0,
        mode: state.mode,
        residual_j: state.residual_energy_j,
        harvested_j: 0.0,
        consumed_j: 0.0,
        z_m: 0.0,
    };
    let n = (t_end_s / cfg.dt_s).round() as usize;
    let mut steps = Vec::with_capacity(n);
    for i in 1..=n {
        let (mut next, record) = step_node(&state, params, cfg)?;
        // Keep the time base exact rather than accumulating dt.
        next.time_s = i as f64 * cfg.dt_s;
        steps.push(NodeRecord {
            t_s: next.time_s,
            ..record
        });
        state = next;
    }
    Ok(NodeTrace {
        dt_s: cfg.dt_s,
        initial,
        steps,
        final_state: state,
    })
}

/// Fraction by which consecutive cycle durations may differ and still count
/// as periodic.
pub const PERIOD_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub periodic: bool,
    pub cycles: usize,
    pub period_s: f64,
    pub duty_fraction: f64,
}

/// Measures the on/off cycle between consecutive on-to-off transitions.
pub fn detect_cycle(trace: &NodeTrace) -> Result<CycleReport> {
    let offs = trace.off_transitions();
    if offs.len() < 3 {
        return Err(Error::InsufficientTransitions {
            found: offs.len(),
            required: 3,
        });
    }
    let durations: Vec<f64> = offs.windows(2).map(|w| w[1] - w[0]).collect();
    let periodic = durations
        .windows(2)
        .all(|w| (w[1] - w[0]).abs() <= PERIOD_TOLERANCE * w[0].max(w[1]));
    let (start, end) = (offs[0], offs[offs.len() - 1]);
    let on_steps = trace
        .steps
        .iter()
        .filter(|r| r.mode == McuMode::On && r.t_s > start && r.t_s <= end)
        .count();
    Ok(CycleReport {
        periodic,
        cycles: durations.len(),
        period_s: (end - start) / durations.len() as f64,
        duty_fraction: on_steps as f64 * trace.dt_s / (end - start),
    })
}

/// Run summary as emitted next to the trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSummary {
    pub cycles: usize,
    pub periodic: bool,
    pub period_s: Option<f64>,
    pub duty_fraction: Option<f64>,
    #[serde(rename = "min_residual_J")]
    pub min_residual_j: f64,
    #[serde(rename = "max_residual_J")]
    pub max_residual_j: f64,
}

impl NodeSummary {
    pub fn from_trace(trace: &NodeTrace) -> Self {
        let (min_residual_j, max_residual_j) = trace.residual_range();
        match detect_cycle(trace) {
            Ok(c) => Self {
                cycles: c.cycles,
                periodic: c.periodic,
                period_s: Some(c.period_s),
                duty_fraction: Some(c.duty_fraction),
                min_residual_j,
                max_residual_j,
            },
            Err(_) => Self {
                cycles: 0,
                periodic: false,
                period_s: None,
                duty_fraction: None,
                min_residual_j,
                max_residual_j,
            },
        }
    }
}
