//! Device parameter set.
//!
//! Defaults reproduce the room-temperature Au/BiFeO3/Pt/Ti device: the
//! measured material constants plus a calibrated set of fitting parameters
//! (`lambda_*`, `delta_max`, `alpha_r`). All quantities are SI except barrier
//! heights and activation energies, which are in eV.

use serde::{Deserialize, Serialize};

use crate::constants::VACUUM_PERMITTIVITY;
use crate::error::{Error, Result};

/// Effective Richardson constant used by the Schottky contacts, A/(m^2 K^2).
pub const DEFAULT_RICHARDSON: f64 = 1.20173e6;

/// 1 cm^-3 expressed in m^-3.
pub const PER_CM3: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceParameters {
    pub temperature_k: f64,
    /// Attempt (phonon) frequency, Hz.
    pub phonon_freq_hz: f64,
    /// Hop distance, m.
    pub lattice_const_m: f64,
    pub area_m2: f64,
    pub rel_permittivity: f64,
    /// Bulk conductivity, S/m.
    pub conductivity_s_per_m: f64,
    /// Oxide thickness, m.
    pub length_m: f64,
    /// Density of mobile (and of fixed) defects, m^-3.
    pub defect_density_per_m3: f64,
    pub phi0_top_ev: f64,
    pub phi0_bot_ev: f64,
    pub n0_top: f64,
    pub n0_bot: f64,
    /// Bias coupling of the activation energy.
    pub lambda_u: f64,
    pub lambda_b_top: f64,
    pub lambda_b_bot: f64,
    pub lambda_n_top: f64,
    pub lambda_n_bot: f64,
    /// Temperature friction on the drift velocity.
    pub lambda_t: f64,
    /// Maximum relative stochastic displacement.
    pub delta_max: f64,
    /// Charge number of the mobile defect (+1 for V_O+).
    pub charge_number: i32,
    pub richardson_a_per_m2k2: f64,
    /// Reverse-bias barrier-lowering coefficient, eV V^-1/2.
    pub alpha_r: f64,
    /// Optional target for the initial mean vacancy position, m. When set,
    /// the sampled ensemble is remapped so its mean equals this value.
    pub initial_mean_position_m: Option<f64>,
}

impl Default for DeviceParameters {
    fn default() -> Self {
        Self {
            temperature_k: 298.0,
            phonon_freq_hz: 1e12,
            lattice_const_m: 0.56e-9,
            area_m2: 0.04e-6,
            rel_permittivity: 52.0,
            conductivity_s_per_m: 7.0e-4,
            length_m: 600e-9,
            defect_density_per_m3: 2e16 * PER_CM3,
            phi0_top_ev: 0.8,
            phi0_bot_ev: 0.85,
            n0_top: 4.2,
            n0_bot: 4.5,
            lambda_u: calibrated::LAMBDA_U,
            lambda_b_top: calibrated::LAMBDA_B_TOP,
            lambda_b_bot: calibrated::LAMBDA_B_BOT,
            lambda_n_top: calibrated::LAMBDA_N_TOP,
            lambda_n_bot: calibrated::LAMBDA_N_BOT,
            lambda_t: 0.0,
            delta_max: calibrated::DELTA_MAX,
            charge_number: 1,
            richardson_a_per_m2k2: DEFAULT_RICHARDSON,
            alpha_r: calibrated::ALPHA_R,
            initial_mean_position_m: None,
        }
    }
}

/// Fitting parameters obtained by calibrating the ±8.5 V sweep of the
/// default device. See the README for the procedure.
pub mod calibrated {
    pub const LAMBDA_U: f64 = 0.001;
    pub const LAMBDA_B_TOP: f64 = 0.01;
    pub const LAMBDA_B_BOT: f64 = -0.9;
    pub const LAMBDA_N_TOP: f64 = 0.01;
    pub const LAMBDA_N_BOT: f64 = -0.74;
    pub const DELTA_MAX: f64 = 0.5;
    pub const ALPHA_R: f64 = 0.45;
}

impl DeviceParameters {
    /// Absolute permittivity of the oxide, F/m.
    pub fn permittivity(&self) -> f64 {
        VACUUM_PERMITTIVITY * self.rel_permittivity
    }

    /// Ohmic resistance of the oxide bulk, ohm.
    pub fn bulk_resistance(&self) -> f64 {
        self.length_m / (self.conductivity_s_per_m * self.area_m2)
    }

    /// Number of physical mobile defects in the device volume.
    pub fn physical_defect_count(&self) -> f64 {
        self.defect_density_per_m3 * self.area_m2 * self.length_m
    }

    /// Checks every field against its admissible range.
    pub fn validate(&self) -> Result<()> {
        fn finite(name: &str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(name, v, "must be finite"))
            }
        }
        fn positive(name: &str, v: f64) -> Result<()> {
            finite(name, v)?;
            if v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(name, v, "must be > 0"))
            }
        }
        fn unit(name: &str, v: f64) -> Result<()> {
            finite(name, v)?;
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(name, v, "must lie in [0, 1]"))
            }
        }
        fn ideality(name: &str, v: f64) -> Result<()> {
            finite(name, v)?;
            if v >= 1.0 {
                Ok(())
            } else {
                Err(Error::config(name, v, "ideality factor must be >= 1"))
            }
        }

        positive("temperature_k", self.temperature_k)?;
        positive("phonon_freq_hz", self.phonon_freq_hz)?;
        positive("lattice_const_m", self.lattice_const_m)?;
        positive("area_m2", self.area_m2)?;
        positive("rel_permittivity", self.rel_permittivity)?;
        positive("conductivity_s_per_m", self.conductivity_s_per_m)?;
        positive("length_m", self.length_m)?;
        positive("defect_density_per_m3", self.defect_density_per_m3)?;
        positive("phi0_top_ev", self.phi0_top_ev)?;
        positive("phi0_bot_ev", self.phi0_bot_ev)?;
        ideality("n0_top", self.n0_top)?;
        ideality("n0_bot", self.n0_bot)?;
        unit("lambda_u", self.lambda_u)?;
        unit("lambda_t", self.lambda_t)?;
        unit("delta_max", self.delta_max)?;
        finite("lambda_b_top", self.lambda_b_top)?;
        finite("lambda_b_bot", self.lambda_b_bot)?;
        finite("lambda_n_top", self.lambda_n_top)?;
        finite("lambda_n_bot", self.lambda_n_bot)?;
        positive("richardson_a_per_m2k2", self.richardson_a_per_m2k2)?;
        finite("alpha_r", self.alpha_r)?;
        if self.alpha_r < 0.0 {
            return Err(Error::config("alpha_r", self.alpha_r, "must be >= 0"));
        }
        if self.charge_number == 0 {
            return Err(Error::config("charge_number", self.charge_number, "must be non-zero"));
        }
        if let Some(target) = self.initial_mean_position_m {
            finite("initial_mean_position_m", target)?;
            if !(target > 0.0 && target < self.length_m) {
                return Err(Error::config(
                    "initial_mean_position_m",
                    target,
                    "must lie strictly inside (0, length_m)",
                ));
            }
        }
        Ok(())
    }
}
