use serde::Serialize;
use serde_json::json;

use selfpower::energy::RadioBranch;
use selfpower::lti::{msd_plant, simulate_step, step_metrics, MsdParams, TransferFunction};
use selfpower::nodesim::{run_sim, NodeSummary};
use selfpower::pid::{closed_loop, TuningReport};
use selfpower::scenario::{Scenario, ScenarioFile, Tuning};
use selfpower::stability::{routh_table, verdict, Stability};
use selfpower::{Error, OscillationSearchConfig, Polynomial, StepMetrics};

use crate::args::{EnergyArgs, Format, SimulateArgs, StabilityArgs, StepArgs, TuneArgs};
use crate::svg::Plot;
use crate::CliError;

/// What a command produced: the stdout report, artifacts for `--out`, and
/// the exit code.
pub struct Report {
    pub stdout: String,
    pub files: Vec<(String, String)>,
    pub svg: Option<(String, String)>,
    pub exit: u8,
}

impl Report {
    fn ok(stdout: String) -> Self {
        Self {
            stdout,
            files: Vec::new(),
            svg: None,
            exit: 0,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct StepReport {
    #[serde(rename = "loop")]
    loop_kind: &'static str,
    dt_s: f64,
    t_end_s: f64,
    #[serde(flatten)]
    metrics: StepMetrics,
}

pub fn step_response(
    scenario: &Scenario,
    args: &StepArgs,
    format: Option<Format>,
) -> Result<Report, CliError> {
    let plant_params = match &args.plant {
        Some(v) if v.len() == 3 => MsdParams::new(v[0], v[1], v[2])?,
        Some(v) => {
            return Err(CliError::Usage(format!(
                "--plant takes mass,damping,stiffness; got {} values",
                v.len()
            )))
        }
        None => scenario.plant,
    };
    let plant = msd_plant(&plant_params)?;
    let (tf, default_dt, loop_kind): (TransferFunction, f64, &str) = if args.closed_loop {
        (
            closed_loop(&plant, &scenario.gains()?)?,
            scenario.sim.closed_loop_dt_s,
            "closed",
        )
    } else {
        (plant, scenario.sim.step_dt_s, "open")
    };
    let dt = args.dt.unwrap_or(default_dt);
    let t_end = args.t_end.unwrap_or(scenario.sim.step_t_end_s);
    let trace = simulate_step(&tf, dt, t_end, 1.0)?;
    let csv = trace.to_csv_string();
    let metrics = step_metrics(&trace)?;
    let json = to_json(&StepReport {
        loop_kind,
        dt_s: dt,
        t_end_s: t_end,
        metrics,
    });
    let points: Vec<(f64, f64)> = trace.samples.iter().map(|s| (s.t_s, s.output)).collect();
    let title = format!("Step response ({loop_kind} loop)");
    let svg = Plot {
        title: &title,
        x_label: "time [s]",
        y_label: "displacement [m]",
        points: &points,
    }
    .render();
    let stdout = match format {
        Some(Format::Csv) => csv.clone(),
        _ => json.clone(),
    };
    Ok(Report {
        stdout,
        files: vec![
            ("step_response.csv".into(), csv),
            ("step_response.json".into(), json),
        ],
        svg: Some(("step_response.svg".into(), svg)),
        exit: 0,
    })
}

pub fn tune(scenario: &Scenario, args: &TuneArgs) -> Result<Report, CliError> {
    let tuning = if let (Some(ku), Some(tu_s)) = (args.ku, args.tu) {
        Tuning::Ultimate { ku, tu_s }
    } else if args.search
        || args.sample_period.is_some()
        || args.gain_lo.is_some()
        || args.gain_hi.is_some()
    {
        let mut cfg = match scenario.tuning {
            Tuning::Search { search } => search,
            _ => OscillationSearchConfig::default(),
        };
        if let Some(h) = args.sample_period {
            cfg.sample_period_s = h;
        }
        if let Some(lo) = args.gain_lo {
            cfg.gain_lo = lo;
        }
        if let Some(hi) = args.gain_hi {
            cfg.gain_hi = hi;
        }
        Tuning::Search { search: cfg }
    } else {
        scenario.tuning
    };
    let report: TuningReport = tuning.resolve(&scenario.plant)?;
    let json = to_json(&report);
    Ok(Report {
        files: vec![("tuning.json".into(), json.clone())],
        ..Report::ok(json)
    })
}

pub fn stability(
    scenario: &Scenario,
    args: &StabilityArgs,
    format: Option<Format>,
) -> Result<Report, CliError> {
    let (poly, source) = match (&args.poly, args.closed_loop) {
        (Some(c), _) => (Polynomial::new(c.clone()), "polynomial"),
        (None, true) => {
            let t = closed_loop(&msd_plant(&scenario.plant)?, &scenario.gains()?)?;
            (t.den().clone(), "closed_loop")
        }
        (None, false) => (msd_plant(&scenario.plant)?.den().clone(), "open_loop"),
    };
    if poly.is_zero() || poly.degree() == 0 {
        return Err(CliError::Usage(format!(
            "stability needs a polynomial of degree >= 1, got {poly}"
        )));
    }
    let table = routh_table(&poly)?;
    let v = verdict(&table);
    let exit = match v.stability {
        Stability::Stable => 0,
        Stability::Unstable => 4,
        Stability::Marginal => 5,
    };
    let json = to_json(&json!({
        "source": source,
        "polynomial": poly.coeffs(),
        "rows": table.rows,
        "special_cases": table.special_cases,
        "stability": v.stability,
        "stable": v.stable,
        "sign_changes": v.sign_changes,
        "first_column": v.first_column,
        "imaginary_axis_roots": v.imaginary_axis_roots,
        "marginal_adjacent": v.marginal_adjacent,
    }));
    let text = format!(
        "characteristic polynomial: {poly}\n\n{}\nverdict: {} ({} sign change{} in the first column)\n",
        table.render(),
        match v.stability {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginally stable",
        },
        v.sign_changes,
        if v.sign_changes == 1 { "" } else { "s" }
    );
    let stdout = match format {
        Some(Format::Json) => json.clone(),
        Some(Format::Csv) => {
            return Err(CliError::Usage(
                "stability supports --format json or the default text".into(),
            ))
        }
        None => text.clone(),
    };
    Ok(Report {
        stdout,
        files: vec![
            ("stability.json".into(), json),
            ("stability.txt".into(), text),
        ],
        svg: None,
        exit,
    })
}

pub fn energy(
    scenario: &Scenario,
    args: &EnergyArgs,
    format: Option<Format>,
) -> Result<Report, CliError> {
    let d = args.distance.unwrap_or(scenario.harvest.distance_m);
    if !(d.is_finite() && d >= 0.0) {
        return Err(CliError::Usage(format!(
            "--distance must be non-negative, got {d}"
        )));
    }
    let p = &scenario.energy;
    let e = p.cycle_energy(d);
    let branch = match p.radio_branch(d) {
        RadioBranch::FreeSpace => "free_space",
        RadioBranch::Multipath => "multipath",
    };
    let json = to_json(&json!({
        "distance_m": d,
        "branch": branch,
        "threshold_distance_m": p.threshold_distance(),
        "sense_J": e.sense_j,
        "process_J": e.process_j,
        "transmit_J": e.transmit_j,
        "receive_J": e.receive_j,
        "mcu_switch_J": e.mcu_switch_j,
        "total_J": e.total_j,
    }));
    let csv = format!(
        "component,energy_J\nsense,{:e}\nprocess,{:e}\ntransmit,{:e}\nreceive,{:e}\nmcu_switch,{:e}\ntotal,{:e}\n",
        e.sense_j, e.process_j, e.transmit_j, e.receive_j, e.mcu_switch_j, e.total_j
    );
    let stdout = match format {
        Some(Format::Csv) => csv.clone(),
        _ => json.clone(),
    };
    Ok(Report {
        files: vec![("energy.json".into(), json), ("energy.csv".into(), csv)],
        ..Report::ok(stdout)
    })
}

#[derive(Serialize)]
struct SimulateSummary {
    controller: bool,
    t_end_s: f64,
    #[serde(flatten)]
    summary: NodeSummary,
    first_recharge_s: Option<f64>,
}

pub fn simulate(
    scenario: &Scenario,
    args: &SimulateArgs,
    format: Option<Format>,
) -> Result<Report, CliError> {
    let gains = if args.no_controller || scenario.harvest.controller.is_none() {
        None
    } else {
        Some(scenario.gains()?)
    };
    let cfg = scenario.harvest_config(gains);
    let t_end = args.t_end.unwrap_or(scenario.sim.node_t_end_s);
    let trace = run_sim(&scenario.energy, &cfg, t_end)?;
    let mut csv = Vec::new();
    trace
        .write_csv(&mut csv, args.stride)
        .map_err(|e| CliError::Io(e.to_string()))?;
    let csv = String::from_utf8(csv).expect("CSV is ASCII");
    let json = to_json(&SimulateSummary {
        controller: cfg.controller.is_some(),
        t_end_s: t_end,
        summary: NodeSummary::from_trace(&trace),
        first_recharge_s: trace.recharge_times().first().copied(),
    });
    let points: Vec<(f64, f64)> = trace.records().map(|r| (r.t_s, r.residual_j)).collect();
    let svg = Plot {
        title: if cfg.controller.is_some() {
            "Residual energy (PID harvesting)"
        } else {
            "Residual energy (passive harvesting)"
        },
        x_label: "time [s]",
        y_label: "residual energy [J]",
        points: &points,
    }
    .render();
    let stdout = match format {
        Some(Format::Csv) => csv.clone(),
        _ => json.clone(),
    };
    Ok(Report {
        stdout,
        files: vec![
            ("node_trace.csv".into(), csv),
            ("summary.json".into(), json),
        ],
        svg: Some(("node_trace.svg".into(), svg)),
        exit: 0,
    })
}

pub fn show_preset(file: &ScenarioFile) -> Report {
    Report::ok(to_json(file))
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NotSettled { .. } => 2,
        Error::NoUltimateGain { .. }
        | Error::OscillatesAtLowerBound { .. }
        | Error::NotSustained { .. }
        | Error::UnstablePlant => 3,
        Error::Livelock { .. } => 6,
        _ => 1,
    }
}
