//! Per-activity energy consumption of a Mica2-class sensor node.
//!
//! All arithmetic is in SI units. The unit-suffixed [`EnergyConfig`] is the
//! on-disk form (milliamps, microseconds, nanojoules per bit and so on) and
//! is converted once at load time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Energy model constants, SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub vdc_v: f64,
    pub i_sens_a: f64,
    pub t_sens_s_per_bit: f64,
    pub i_write_a: f64,
    pub t_write_s: f64,
    pub i_read_a: f64,
    pub t_read_s: f64,
    pub i_active_a: f64,
    pub t_active_s: f64,
    pub i_sleep_a: f64,
    pub t_sleep_s: f64,
    pub e_elec_j_per_bit: f64,
    pub e_fs_j_per_bit_m2: f64,
    pub e_mp_j_per_bit_m4: f64,
    pub packet_bits: f64,
    /// Fraction of the packet retained after compression, in (0, 1].
    pub alpha: f64,
    pub reference_energy_j: f64,
    pub threshold_energy_j: f64,
    pub initial_energy_j: f64,
    /// Carried for completeness; no consumption term uses it.
    pub aggregation_energy_j: f64,
}

impl EnergyParams {
    /// Mica2 mote constants with 20 % compression; the initial energy is
    /// `0.5 * alpha` joules.
    pub fn mica2() -> Self {
        EnergyConfig::mica2().to_si()
    }

    /// Mica2 constants without compression (`alpha = 1`, 0.5 J initial energy).
    pub fn mica2_uncompressed() -> Self {
        EnergyConfig::mica2_uncompressed().to_si()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vdc_V", self.vdc_v),
            ("i_sens", self.i_sens_a),
            ("t_sens", self.t_sens_s_per_bit),
            ("i_write", self.i_write_a),
            ("t_write", self.t_write_s),
            ("i_read", self.i_read_a),
            ("t_read", self.t_read_s),
            ("i_active", self.i_active_a),
            ("t_active", self.t_active_s),
            ("i_sleep", self.i_sleep_a),
            ("t_sleep", self.t_sleep_s),
            ("e_elec", self.e_elec_j_per_bit),
            ("e_fs", self.e_fs_j_per_bit_m2),
            ("e_mp", self.e_mp_j_per_bit_m4),
            ("packet_bits", self.packet_bits),
            ("reference_energy_J", self.reference_energy_j),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(
                "alpha",
                format!("must lie in (0, 1], got {}", self.alpha),
            ));
        }
        if !(self.threshold_energy_j >= 0.0 && self.threshold_energy_j < self.reference_energy_j) {
            return Err(Error::invalid(
                "threshold_energy_J",
                format!(
                    "need 0 <= threshold < reference ({}), got {}",
                    self.reference_energy_j, self.threshold_energy_j
                ),
            ));
        }
        if !(self.initial_energy_j.is_finite() && self.initial_energy_j >= 0.0) {
            return Err(Error::invalid("initial_energy_J", "must be non-negative"));
        }
        Ok(())
    }

    /// Bits actually handled per packet, `alpha * N`.
    pub fn payload_bits(&self) -> f64 {
        self.alpha * self.packet_bits
    }

    /// `alpha N V I_sens T_sens`
    pub fn sensing_energy(&self) -> f64 {
        self.payload_bits() * self.vdc_v * self.i_sens_a * self.t_sens_s_per_bit
    }

    /// `(alpha N V / 8) (I_write T_write + I_read T_read)`
    pub fn processing_energy(&self) -> f64 {
        self.payload_bits() * self.vdc_v / 8.0
            * (self.i_write_a * self.t_write_s + self.i_read_a * self.t_read_s)
    }

    /// Crossover distance `sqrt(E_fs / E_mp)` between the free-space and
    /// multipath amplifier models.
    pub fn threshold_distance(&self) -> f64 {
        (self.e_fs_j_per_bit_m2 / self.e_mp_j_per_bit_m4).sqrt()
    }

    /// Amplifier model used at `distance_m`; the crossover distance itself
    /// belongs to the multipath branch.
    pub fn radio_branch(&self, distance_m: f64) -> RadioBranch {
        if distance_m < self.threshold_distance() {
            RadioBranch::FreeSpace
        } else {
            RadioBranch::Multipath
        }
    }

    pub fn transmit_energy(&self, distance_m: f64) -> f64 {
        let bits = self.payload_bits();
        let amp = match self.radio_branch(distance_m) {
            RadioBranch::FreeSpace => self.e_fs_j_per_bit_m2 * distance_m.powi(2),
            RadioBranch::Multipath => self.e_mp_j_per_bit_m4 * distance_m.powi(4),
        };
        bits * self.e_elec_j_per_bit + bits * amp
    }

    pub fn receive_energy(&self) -> f64 {
        self.payload_bits() * self.e_elec_j_per_bit
    }

    /// `V (I_active T_active + I_sleep T_sleep)`; independent of the payload.
    pub fn mcu_switch_energy(&self) -> f64 {
        self.vdc_v * (self.i_active_a * self.t_active_s + self.i_sleep_a * self.t_sleep_s)
    }

    pub fn cycle_energy(&self, distance_m: f64) -> EnergyBreakdown {
        EnergyBreakdown::new(
            self.sensing_energy(),
            self.processing_energy(),
            self.transmit_energy(distance_m),
            self.receive_energy(),
            self.mcu_switch_energy(),
        )
    }

    /// One active plus one sleep period of the MCU.
    pub fn activity_window_s(&self) -> f64 {
        self.t_active_s + self.t_sleep_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadioBranch {
    FreeSpace,
    Multipath,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    #[serde(rename = "sense_J")]
    pub sense_j: f64,
    #[serde(rename = "process_J")]
    pub process_j: f64,
    #[serde(rename = "transmit_J")]
    pub transmit_j: f64,
    #[serde(rename = "receive_J")]
    pub receive_j: f64,
    #[serde(rename = "mcu_switch_J")]
    pub mcu_switch_j: f64,
    #[serde(rename = "total_J")]
    pub total_j: f64,
}

impl EnergyBreakdown {
    pub fn new(
        sense_j: f64,
        process_j: f64,
        transmit_j: f64,
        receive_j: f64,
        mcu_switch_j: f64,
    ) -> Self {
        Self {
            sense_j,
            process_j,
            transmit_j,
            receive_j,
            mcu_switch_j,
            total_j: sense_j + process_j + transmit_j + receive_j + mcu_switch_j,
        }
    }
}

/// Distance of the residual energy from the reference level, `RE - E_r`.
pub fn energy_error(reference_j: f64, residual_j: f64) -> f64 {
    reference_j - residual_j
}

/// Energy storage viewed as an ideal capacitor, `E = C V^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageCapacitor {
    pub capacitance_f: f64,
}

impl StorageCapacitor {
    /// Capacitor that holds `full_energy_j` at `voltage_v`.
    pub fn sized_for(full_energy_j: f64, voltage_v: f64) -> Self {
        Self {
            capacitance_f: 2.0 * full_energy_j / (voltage_v * voltage_v),
        }
    }

    pub fn voltage(&self, energy_j: f64) -> f64 {
        (2.0 * energy_j / self.capacitance_f).sqrt()
    }

    /// Energy error in its voltage form, `C (V_ref^2 - V_r^2) / 2`.
    pub fn energy_error(&self, v_ref: f64, v_r: f64) -> f64 {
        0.5 * self.capacitance_f * (v_ref * v_ref - v_r * v_r)
    }
}

/// On-disk energy parameters in the units of the Mica2 datasheet table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    #[serde(rename = "vdc_V")]
    pub vdc_v: f64,
    #[serde(rename = "i_sens_mA")]
    pub i_sens_ma: f64,
    #[serde(rename = "t_sens_ms")]
    pub t_sens_ms: f64,
    #[serde(rename = "i_write_mA")]
    pub i_write_ma: f64,
    #[serde(rename = "t_write_ms")]
    pub t_write_ms: f64,
    #[serde(rename = "i_read_mA")]
    pub i_read_ma: f64,
    #[serde(rename = "t_read_us")]
    pub t_read_us: f64,
    #[serde(rename = "i_active_mA")]
    pub i_active_ma: f64,
    #[serde(rename = "t_active_ms")]
    pub t_active_ms: f64,
    #[serde(rename = "i_sleep_uA")]
    pub i_sleep_ua: f64,
    #[serde(rename = "t_sleep_ms")]
    pub t_sleep_ms: f64,
    #[serde(rename = "e_elec_nJ_per_bit")]
    pub e_elec_nj_per_bit: f64,
    #[serde(rename = "e_fs_pJ_per_bit_m2")]
    pub e_fs_pj_per_bit_m2: f64,
    #[serde(rename = "e_mp_pJ_per_bit_m4")]
    pub e_mp_pj_per_bit_m4: f64,
    pub packet_bits: f64,
    pub alpha_percent: f64,
    #[serde(rename = "reference_energy_J")]
    pub reference_energy_j: f64,
    #[serde(rename = "threshold_energy_J")]
    pub threshold_energy_j: f64,
    #[serde(rename = "initial_energy_J")]
    pub initial_energy_j: f64,
    #[serde(rename = "aggregation_energy_J")]
    pub aggregation_energy_j: f64,
}

const MILLI: f64 = 1e-3;
const MICRO: f64 = 1e-6;
const NANO: f64 = 1e-9;
const PICO: f64 = 1e-12;

impl EnergyConfig {
    pub fn mica2() -> Self {
        let alpha_percent = 20.0;
        Self {
            vdc_v: 2.7,
            i_sens_ma: 25.0,
            t_sens_ms: 0.5,
            i_write_ma: 18.4,
            t_write_ms: 12.9,
            i_read_ma: 6.2,
            t_read_us: 565.0,
            i_active_ma: 8.0,
            t_active_ms: 1.0,
            i_sleep_ua: 1.0,
            t_sleep_ms: 299.0,
            e_elec_nj_per_bit: 50.0,
            e_fs_pj_per_bit_m2: 10.0,
            e_mp_pj_per_bit_m4: 0.0013,
            packet_bits: 4000.0,
            alpha_percent,
            reference_energy_j: 0.2,
            threshold_energy_j: 0.1,
            initial_energy_j: 0.5 * alpha_percent / 100.0,
            aggregation_energy_j: 5e-12,
        }
    }

    pub fn mica2_uncompressed() -> Self {
        Self {
            alpha_percent: 100.0,
            initial_energy_j: 0.5,
            ..Self::mica2()
        }
    }

    pub fn to_si(&self) -> EnergyParams {
        EnergyParams {
            vdc_v: self.vdc_v,
            i_sens_a: self.i_sens_ma * MILLI,
            t_sens_s_per_bit: self.t_sens_ms * MILLI,
            i_write_a: self.i_write_ma * MILLI,
            t_write_s: self.t_write_ms * MILLI,
            i_read_a: self.i_read_ma * MILLI,
            t_read_s: self.t_read_us * MICRO,
            i_active_a: self.i_active_ma * MILLI,
            t_active_s: self.t_active_ms * MILLI,
            i_sleep_a: self.i_sleep_ua * MICRO,
            t_sleep_s: self.t_sleep_ms * MILLI,
            e_elec_j_per_bit: self.e_elec_nj_per_bit * NANO,
            e_fs_j_per_bit_m2: self.e_fs_pj_per_bit_m2 * PICO,
            e_mp_j_per_bit_m4: self.e_mp_pj_per_bit_m4 * PICO,
            packet_bits: self.packet_bits,
            alpha: self.alpha_percent / 100.0,
            reference_energy_j: self.reference_energy_j,
            threshold_energy_j: self.threshold_energy_j,
            initial_energy_j: self.initial_energy_j,
            aggregation_energy_j: self.aggregation_energy_j,
        }
    }

    pub fn from_si(p: &EnergyParams) -> Self {
        Self {
            vdc_v: p.vdc_v,
            i_sens_ma: p.i_sens_a / MILLI,
            t_sens_ms: p.t_sens_s_per_bit / MILLI,
            i_write_ma: p.i_write_a / MILLI,
            t_write_ms: p.t_write_s / MILLI,
            i_read_ma: p.i_read_a / MILLI,
            t_read_us: p.t_read_s / MICRO,
            i_active_ma: p.i_active_a / MILLI,
            t_active_ms: p.t_active_s / MILLI,
            i_sleep_ua: p.i_sleep_a / MICRO,
            t_sleep_ms: p.t_sleep_s / MILLI,
            e_elec_nj_per_bit: p.e_elec_j_per_bit / NANO,
            e_fs_pj_per_bit_m2: p.e_fs_j_per_bit_m2 / PICO,
            e_mp_pj_per_bit_m4: p.e_mp_j_per_bit_m4 / PICO,
            packet_bits: p.packet_bits,
            alpha_percent: p.alpha * 100.0,
            reference_energy_j: p.reference_energy_j,
            threshold_energy_j: p.threshold_energy_j,
            initial_energy_j: p.initial_energy_j,
            aggregation_energy_j: p.aggregation_energy_j,
        }
    }

    /// Parses and validates a JSON energy block.
    pub fn from_json(text: &str) -> Result<EnergyParams> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let p = cfg.to_si();
        p.validate()?;
        Ok(p)
    }
}
