use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rejection sampling from `N(mean, sd)` restricted to `[lo, hi]`.
///
/// Fails if the interval lies entirely outside `mean +- 8 sd`, where the
/// acceptance rate would be negligible.
pub fn sample_truncated_gaussian<R: Rng + ?Sized>(mean: f64, sd: f64, lo: f64, hi: f64, rng: &mut R) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::config("truncation", format!("[{lo}, {hi}]"), "need lo < hi"));
    }
    if !(sd >= 0.0 && sd.is_finite()) {
        return Err(Error::config("sd", sd, "must be >= 0"));
    }
    if sd == 0.0 {
        return if (lo..=hi).contains(&mean) {
            Ok(mean)
        } else {
            Err(Error::config("mean", mean, "outside truncation interval"))
        };
    }
    if hi < mean - 8.0 * sd || lo > mean + 8.0 * sd {
        return Err(Error::config(
            "truncation",
            format!("[{lo}, {hi}]"),
            "interval excludes mean +- 8 sd",
        ));
    }
    let normal = Normal::new(mean, sd).map_err(|e| Error::Internal(e.to_string()))?;
    loop {
        let x = normal.sample(rng);
        if (lo..=hi).contains(&x) {
            return Ok(x);
        }
    }
}

/// Parameter spread of a device population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariabilitySpec {
    pub n_devices: usize,
    pub length_mean_m: f64,
    pub length_sd_m: f64,
    pub density_mean_per_m3: f64,
    pub density_sd_per_m3: f64,
    /// Samples are kept within `mean +- truncation_sd * sd`.
    pub truncation_sd: f64,
}

impl Default for VariabilitySpec {
    /// Spread comparable to the four measured devices.
    fn default() -> Self {
        Self {
            n_devices: 10,
            length_mean_m: 594e-9,
            length_sd_m: 7e-9,
            density_mean_per_m3: 2.05e22,
            density_sd_per_m3: 0.45e22,
            truncation_sd: 2.0,
        }
    }
}

impl VariabilitySpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_devices < 2 {
            return Err(Error::config("variability.n_devices", self.n_devices, "must be >= 2"));
        }
        for (name, v) in [
            ("variability.length_sd_m", self.length_sd_m),
            ("variability.density_sd_per_m3", self.density_sd_per_m3),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(name, v, "must be >= 0"));
            }
        }
        if !(self.truncation_sd > 0.0 && self.truncation_sd.is_finite()) {
            return Err(Error::config(
                "variability.truncation_sd",
                self.truncation_sd,
                "must be > 0",
            ));
        }
        for (name, m, sd) in [
            ("variability.length_mean_m", self.length_mean_m, self.length_sd_m),
            (
                "variability.density_mean_per_m3",
                self.density_mean_per_m3,
                self.density_sd_per_m3,
            ),
        ] {
            if !(m - self.truncation_sd * sd > 0.0) {
                return Err(Error::config(name, m, "truncated samples must stay positive"));
            }
        }
        Ok(())
    }

    fn bounds(&self, mean: f64, sd: f64) -> (f64, f64) {
        if sd == 0.0 {
            (mean, mean * (1.0 + f64::EPSILON) + f64::MIN_POSITIVE)
        } else {
            (mean - self.truncation_sd * sd, mean + self.truncation_sd * sd)
        }
    }

    /// Draws `(length_m, density_per_m3)` for one device.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, f64)> {
        let (lo, hi) = self.bounds(self.length_mean_m, self.length_sd_m);
        let length = sample_truncated_gaussian(self.length_mean_m, self.length_sd_m, lo, hi, rng)?;
        let (lo, hi) = self.bounds(self.density_mean_per_m3, self.density_sd_per_m3);
        let density = sample_truncated_gaussian(self.density_mean_per_m3, self.density_sd_per_m3, lo, hi, rng)?;
        Ok((length, density))
    }
}
