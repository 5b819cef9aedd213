//! Scenario files and built-in presets.
//!
//! A scenario is resolved by layering JSON documents: the named preset first,
//! then a user file merged over it key by key. Callers apply command-line
//! overrides to the resolved [`Scenario`] afterwards.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::energy::{EnergyConfig, EnergyParams};
use crate::error::{Error, Result};
use crate::lti::{msd_plant, MsdParams};
use crate::nodesim::{Excitation, HarvestConfig, HarvestController};
use crate::pid::{
    find_ultimate, zn_gains, OscillationSearchConfig, PidGains, TuningReport, UltimateParams,
};

pub const PRESET_NAMES: [&str; 2] = ["mica2", "mica2-alpha1"];

/// Controller tuning source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tuning {
    Ultimate { ku: f64, tu_s: f64 },
    Gains { kp: f64, ki: f64, kd: f64 },
    Search { search: OscillationSearchConfig },
}

impl Tuning {
    /// Resolves the PID gains, running the ultimate-gain search if needed.
    pub fn resolve(&self, plant: &MsdParams) -> Result<TuningReport> {
        match *self {
            Tuning::Ultimate { ku, tu_s } => {
                Ok(TuningReport::new(&UltimateParams::new(ku, tu_s)?, None))
            }
            Tuning::Gains { kp, ki, kd } => {
                let g = PidGains::new(kp, ki, kd)?;
                Ok(TuningReport {
                    ku: None,
                    tu_s: None,
                    kp: g.kp,
                    ki: g.ki,
                    kd: g.kd,
                    sample_period_s: None,
                })
            }
            Tuning::Search { search } => {
                let ultimate = find_ultimate(&msd_plant(plant)?, &search)?;
                Ok(TuningReport::new(&ultimate, Some(search.sample_period_s)))
            }
        }
    }
}

/// Harvester settings; gains come from the scenario's tuning section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarvestSettings {
    #[serde(rename = "electrical_damping_Ns_per_m")]
    pub electrical_damping_ns_per_m: f64,
    pub excitation: Excitation,
    pub controller: Option<ControllerSettings>,
    pub dt_s: f64,
    #[serde(rename = "capacity_J")]
    pub capacity_j: f64,
    pub activity_window_s: f64,
    pub distance_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSettings {
    pub reference_amplitude_m: f64,
    pub min_effort: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    /// Step size for step-response traces.
    pub step_dt_s: f64,
    /// Step size for closed-loop step responses (fast PID poles).
    pub closed_loop_dt_s: f64,
    pub step_t_end_s: f64,
    pub node_t_end_s: f64,
}

/// On-disk scenario layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub energy: EnergyConfig,
    pub plant: MsdParams,
    pub harvest: HarvestSettings,
    pub tuning: Tuning,
    pub sim: SimSettings,
}

/// Fully resolved scenario in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub energy: EnergyParams,
    pub plant: MsdParams,
    pub harvest: HarvestSettings,
    pub tuning: Tuning,
    pub sim: SimSettings,
}

fn preset_file(name: &str) -> Result<ScenarioFile> {
    let energy = match name {
        "mica2" => EnergyConfig::mica2(),
        "mica2-alpha1" => EnergyConfig::mica2_uncompressed(),
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    let base = HarvestConfig::mica2(None);
    Ok(ScenarioFile {
        energy,
        plant: base.plant,
        harvest: HarvestSettings {
            electrical_damping_ns_per_m: base.electrical_damping_ns_per_m,
            excitation: base.excitation,
            controller: Some(ControllerSettings {
                reference_amplitude_m: 0.2,
                min_effort: 0.25,
            }),
            dt_s: base.dt_s,
            capacity_j: base.capacity_j,
            activity_window_s: base.activity_window_s,
            distance_m: base.distance_m,
        },
        tuning: Tuning::Ultimate {
            ku: 33.727,
            tu_s: 3.90176,
        },
        sim: SimSettings {
            step_dt_s: 1e-3,
            closed_loop_dt_s: 1e-4,
            step_t_end_s: 12.0,
            node_t_end_s: 300.0,
        },
    })
}

/// Recursively merges `overlay` into `base`; objects merge key by key, any
/// other value replaces the base value.
pub fn merge_json(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge_json(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl ScenarioFile {
    pub fn preset(name: &str) -> Result<Self> {
        preset_file(name)
    }

    /// Preset with `overlay` merged on top.
    pub fn layered(preset: &str, overlay: Option<&str>) -> Result<Self> {
        let base = preset_file(preset)?;
        let Some(text) = overlay else {
            return Ok(base);
        };
        let overlay: Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario: {e}")))?;
        if let Some(Value::Object(tuning)) = overlay.get("tuning") {
            // A tuning section replaces the preset's rather than merging,
            // since its variants are mutually exclusive.
            if !tuning.is_empty() {
                let mut doc =
                    serde_json::to_value(&base).map_err(|e| Error::Config(e.to_string()))?;
                let mut overlay = overlay.clone();
                let tuning = overlay
                    .as_object_mut()
                    .and_then(|o| o.remove("tuning"))
                    .unwrap_or(Value::Null);
                merge_json(&mut doc, overlay);
                doc["tuning"] = tuning;
                return serde_json::from_value(doc)
                    .map_err(|e| Error::Config(format!("scenario: {e}")));
            }
        }
        let mut doc = serde_json::to_value(&base).map_err(|e| Error::Config(e.to_string()))?;
        merge_json(&mut doc, overlay);
        serde_json::from_value(doc).map_err(|e| Error::Config(format!("scenario: {e}")))
    }

    pub fn resolve(&self) -> Result<Scenario> {
        let scenario = Scenario {
            energy: self.energy.to_si(),
            plant: self.plant,
            harvest: self.harvest,
            tuning: self.tuning,
            sim: self.sim,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

impl Scenario {
    pub fn preset(name: &str) -> Result<Self> {
        ScenarioFile::preset(name)?.resolve()
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            energy: EnergyConfig::from_si(&self.energy),
            plant: self.plant,
            harvest: self.harvest,
            tuning: self.tuning,
            sim: self.sim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.energy.validate()?;
        self.plant.validate()?;
        let sim = [
            ("step_dt_s", self.sim.step_dt_s),
            ("closed_loop_dt_s", self.sim.closed_loop_dt_s),
        ];
        for (name, v) in sim {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("step_t_end_s", self.sim.step_t_end_s),
            ("node_t_end_s", self.sim.node_t_end_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("must be non-negative, got {v}"),
                ));
            }
        }
        self.harvest_config(None).validate(&self.energy)
    }

    /// Harvester configuration; `gains` enables the PID loop when the
    /// scenario has controller settings.
    pub fn harvest_config(&self, gains: Option<PidGains>) -> HarvestConfig {
        let h = &self.harvest;
        HarvestConfig {
            plant: self.plant,
            electrical_damping_ns_per_m: h.electrical_damping_ns_per_m,
            excitation: h.excitation,
            controller: match (gains, h.controller) {
                (Some(gains), Some(c)) => Some(HarvestController {
                    gains,
                    reference_amplitude_m: c.reference_amplitude_m,
                    min_effort: c.min_effort,
                }),
                _ => None,
            },
            dt_s: h.dt_s,
            capacity_j: h.capacity_j,
            activity_window_s: h.activity_window_s,
            distance_m: h.distance_m,
        }
    }

    pub fn tuning_report(&self) -> Result<TuningReport> {
        self.tuning.resolve(&self.plant)
    }

    pub fn gains(&self) -> Result<PidGains> {
        Ok(self.tuning_report()?.gains())
    }
}

/// Z-N gains for the preset's ultimate parameters.
pub fn preset_gains() -> PidGains {
    zn_gains(&UltimateParams {
        ku: 33.727,
        tu_s: 3.90176,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for name in PRESET_NAMES {
            let s = Scenario::preset(name).unwrap();
            assert_eq!(s.plant, MsdParams::mica2());
        }
        assert!(matches!(Scenario::preset("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn overlay_merges_nested_keys() {
        let f = ScenarioFile::layered(
            "mica2",
            Some(r#"{"energy": {"i_sens_mA": 30}, "sim": {"node_t_end_s": 10}}"#),
        )
        .unwrap();
        assert_eq!(f.energy.i_sens_ma, 30.0);
        assert_eq!(f.energy.vdc_v, 2.7);
        assert_eq!(f.sim.node_t_end_s, 10.0);
        assert_eq!(f.sim.step_dt_s, 1e-3);
    }

    #[test]
    fn overlay_replaces_tuning() {
        let f = ScenarioFile::layered("mica2", Some(r#"{"tuning": {"kp": 1, "ki": 2, "kd": 3}}"#))
            .unwrap();
        assert_eq!(
            f.tuning,
            Tuning::Gains {
                kp: 1.0,
                ki: 2.0,
                kd: 3.0
            }
        );
        let g = f.resolve().unwrap().gains().unwrap();
        assert_eq!((g.kp, g.ki, g.kd), (1.0, 2.0, 3.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ScenarioFile::layered("mica2", Some(r#"{"sim": {"bogus": 1}}"#)).is_err());
        assert!(ScenarioFile::layered("mica2", Some("not json")).is_err());
    }

    #[test]
    fn file_round_trip() {
        let s = Scenario::preset("mica2").unwrap();
        let text = serde_json::to_string(&s.to_file()).unwrap();
        let back = ScenarioFile::layered("mica2-alpha1", Some(&text))
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(back.plant, s.plant);
        assert!((back.energy.alpha - s.energy.alpha).abs() < 1e-15);
    }
}
