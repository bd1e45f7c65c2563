//! Vacancy transport: field-assisted Arrhenius drift, the stochastic
//! perturbation of each push, and the gated thermal hopping used while the
//! device sits unbiased.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::guarded_exp_arg;
use crate::constants::thermal_voltage;
use crate::error::{Error, Result};
use crate::params::DeviceParameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryPolicy {
    /// Particles stop at the interfaces.
    #[default]
    Clamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    /// Simulation time step, s.
    pub dt_s: f64,
    /// Probability that a vacancy attempts to move during an unbiased step.
    pub retention_move_prob: f64,
    /// Time step used while relaxing between retention reads, s.
    pub retention_substep_s: f64,
    pub boundary_policy: BoundaryPolicy,
    /// Upper bound on the number of sub-steps a biased step may be split into.
    pub max_substeps: usize,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            dt_s: 1e-3,
            retention_move_prob: 0.33,
            retention_substep_s: 1.0,
            boundary_policy: BoundaryPolicy::Clamp,
            max_substeps: 64,
        }
    }
}

impl TransportConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_s > 0.0 && self.dt_s.is_finite()) {
            return Err(Error::config("transport.dt_s", self.dt_s, "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.retention_move_prob) {
            return Err(Error::config(
                "transport.retention_move_prob",
                self.retention_move_prob,
                "must lie in [0, 1]",
            ));
        }
        if !(self.retention_substep_s > 0.0 && self.retention_substep_s.is_finite()) {
            return Err(Error::config(
                "transport.retention_substep_s",
                self.retention_substep_s,
                "must be > 0",
            ));
        }
        if self.max_substeps == 0 {
            return Err(Error::config("transport.max_substeps", 0, "must be >= 1"));
        }
        Ok(())
    }
}

/// Drift velocity law with its temperature-dependent constants folded in.
#[derive(Debug, Clone, Copy)]
pub struct DriftModel {
    /// `nu0 d (1 - lambda_T)`, m/s.
    prefactor: f64,
    /// `nu0`, 1/s.
    attempt_freq: f64,
    /// `1 / (k_B T)`, 1/eV.
    inv_kt: f64,
    /// `|z| d / (2 k_B T / e)`, m/V.
    field_coef: f64,
    /// Direction of drift relative to the field.
    sign: f64,
}

impl DriftModel {
    pub fn new(params: &DeviceParameters) -> Self {
        let vt = thermal_voltage(params.temperature_k);
        Self {
            prefactor: params.phonon_freq_hz * params.lattice_const_m * (1.0 - params.lambda_t),
            attempt_freq: params.phonon_freq_hz,
            inv_kt: 1.0 / vt,
            field_coef: params.charge_number.unsigned_abs() as f64 * params.lattice_const_m / (2.0 * vt),
            sign: f64::from(params.charge_number.signum()),
        }
    }

    /// `nu0 d exp(-U/kT) [exp(|z| e d E / 2kT) - exp(-|z| e d E / 2kT)] (1 - lambda_T)`.
    #[inline]
    pub fn velocity(&self, field_v_per_m: f64, u_eff_ev: f64) -> f64 {
        let arg = self.field_coef * field_v_per_m;
        let arg = guarded_exp_arg(arg.abs()).copysign(arg);
        self.sign * self.prefactor * (-u_eff_ev * self.inv_kt).exp() * 2.0 * arg.sinh()
    }

    /// Thermal attempt rate `nu0 exp(-U/kT)`, 1/s.
    #[inline]
    pub fn hop_rate(&self, u_ev: f64) -> f64 {
        self.attempt_freq * (-u_ev * self.inv_kt).exp()
    }
}

/// Drift velocity of a vacancy in field `e_field` with effective activation `u_a_eff`.
pub fn drift_velocity(e_field: f64, u_a_eff: f64, params: &DeviceParameters) -> f64 {
    DriftModel::new(params).velocity(e_field, u_a_eff)
}

/// Deterministic displacement of every particle over `dt`.
pub fn displacements(fields: &[f64], u_eff: &[f64], dt: f64, drift: &DriftModel, out: &mut Vec<f64>) {
    out.clear();
    out.extend(fields.iter().zip(u_eff).map(|(&e, &u)| drift.velocity(e, u) * dt));
}

/// Applies `x += dx + (r - 0.5) * delta * |dx|` and clamps to `[0, length]`.
pub fn apply_push(positions: &mut [f64], steps: &[f64], draws: &[f64], delta: f64, length: f64) {
    for ((x, &dx), &r) in positions.iter_mut().zip(steps).zip(draws) {
        let moved = *x + dx + (r - 0.5) * delta * dx.abs();
        *x = moved.clamp(0.0, length);
    }
}

/// One stochastic push. A uniform draw in `[0, 1)` is taken for every
/// particle, in index order, before any position is updated.
#[allow(clippy::too_many_arguments)]
pub fn push<R: Rng + ?Sized>(
    positions: &mut [f64],
    fields: &[f64],
    u_eff: &[f64],
    dt: f64,
    delta: f64,
    drift: &DriftModel,
    length: f64,
    rng: &mut R,
) {
    let mut steps = Vec::with_capacity(positions.len());
    displacements(fields, u_eff, dt, drift, &mut steps);
    let draws: Vec<f64> = (0..positions.len()).map(|_| rng.random::<f64>()).collect();
    apply_push(positions, &steps, &draws, delta, length);
}

/// Unbiased relaxation step.
///
/// Each vacancy draws `beta`; only when `beta < move_prob` does it move,
/// by its drift in the internal field plus, with probability
/// `min(1, nu0 exp(-U/kT) dt)`, a hop of one lattice spacing in a random
/// direction. Three draws are consumed per particle regardless of outcome.
#[allow(clippy::too_many_arguments)]
pub fn retention_step<R: Rng + ?Sized>(
    positions: &mut [f64],
    fields: &[f64],
    u_local: &[f64],
    dt: f64,
    move_prob: f64,
    hop_distance: f64,
    drift: &DriftModel,
    length: f64,
    rng: &mut R,
) {
    for ((x, &e), &u) in positions.iter_mut().zip(fields).zip(u_local) {
        let beta: f64 = rng.random();
        let hop_draw: f64 = rng.random();
        let dir_draw: f64 = rng.random();
        if beta >= move_prob {
            continue;
        }
        let mut dx = drift.velocity(e, u) * dt;
        let p_hop = (drift.hop_rate(u) * dt).min(1.0);
        if hop_draw < p_hop {
            dx += if dir_draw < 0.5 { -hop_distance } else { hop_distance };
        }
        *x = (*x + dx).clamp(0.0, length);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{BOLTZMANN, ELEMENTARY_CHARGE};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> DeviceParameters {
        DeviceParameters::default()
    }

    #[test]
    fn zero_field_gives_zero_velocity() {
        assert_eq!(drift_velocity(0.0, 0.55, &params()), 0.0);
    }

    #[test]
    fn velocity_point_value() {
        // Independent scalar evaluation.
        let kt = BOLTZMANN * 298.0 / ELEMENTARY_CHARGE;
        let arg = 0.56e-9 * 1.4e7 / (2.0 * kt);
        let expect = 1e12 * 0.56e-9 * (-0.55 / kt).exp() * (arg.exp() - (-arg).exp());
        let got = drift_velocity(1.4e7, 0.55, &params());
        assert!(((got - expect) / expect).abs() < 1e-12);
        assert!((got - 8.6e-8).abs() < 0.1e-8, "{got:e}");
    }

    #[test]
    fn friction_scales_velocity() {
        let mut p = params();
        p.temperature_k = 348.0;
        let free = drift_velocity(5e6, 0.55, &p);
        p.lambda_t = 0.062;
        let damped = drift_velocity(5e6, 0.55, &p);
        assert!((damped / free - 0.938).abs() < 1e-12);
    }

    #[test]
    fn trapping_ratio_between_bulk_and_interface() {
        let p = params();
        let ratio = drift_velocity(1e7, 0.75, &p) / drift_velocity(1e7, 0.55, &p);
        let kt = BOLTZMANN * 298.0 / ELEMENTARY_CHARGE;
        assert!((ratio - (-0.2 / kt).exp()).abs() < 1e-15);
        assert!((ratio - 4.2e-4).abs() < 0.3e-4, "{ratio:e}");
    }

    #[test]
    fn negative_charge_drifts_against_field() {
        let mut p = params();
        p.charge_number = -1;
        assert!(drift_velocity(1e7, 0.55, &p) < 0.0);
    }

    #[test]
    fn zero_delta_is_deterministic() {
        let mut x = vec![100e-9, 200e-9];
        apply_push(&mut x, &[1e-9, -2e-9], &[0.9, 0.1], 0.0, 600e-9);
        assert!((x[0] - 101e-9).abs() < 1e-22 && (x[1] - 198e-9).abs() < 1e-22);
    }

    #[test]
    fn centered_draw_has_no_perturbation() {
        let mut x = vec![100e-9];
        apply_push(&mut x, &[1e-9], &[0.5], 1.0, 600e-9);
        assert!((x[0] - 101e-9).abs() < 1e-22);
    }

    #[test]
    fn perturbation_scales_with_step() {
        // v = 1e-8 m/s, dt = 0.1 s, delta = 0.5, r = 1 -> 1 nm + 0.25 nm.
        let mut x = vec![0.0];
        apply_push(&mut x, &[1e-8 * 0.1], &[1.0], 0.5, 600e-9);
        assert!((x[0] - 1.25e-9).abs() < 1e-21);
    }

    #[test]
    fn perturbation_has_zero_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let mut x = vec![300e-9; n];
        let draws: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        apply_push(&mut x, &vec![1e-9; n], &draws, 0.5, 600e-9);
        let samples: Vec<f64> = x.iter().map(|x| (x - 301e-9) / 1e-9).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn gated_relaxation_can_freeze_everything() {
        let p = params();
        let drift = DriftModel::new(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let start: Vec<f64> = (0..100).map(|i| i as f64 * 6e-9).collect();
        let mut x = start.clone();
        let fields = vec![1e6; 100];
        let u = vec![0.55; 100];
        retention_step(
            &mut x,
            &fields,
            &u,
            10.0,
            0.0,
            p.lattice_const_m,
            &drift,
            600e-9,
            &mut rng,
        );
        assert_eq!(x, start);
    }

    #[test]
    fn deep_traps_hop_less() {
        let p = params();
        let drift = DriftModel::new(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 20_000;
        let mut shallow = vec![300e-9; n];
        let mut deep = vec![300e-9; n];
        let zeros = vec![0.0; n];
        let dt = 1e-3;
        retention_step(
            &mut shallow,
            &zeros,
            &vec![0.55; n],
            dt,
            1.0,
            p.lattice_const_m,
            &drift,
            600e-9,
            &mut rng,
        );
        retention_step(
            &mut deep,
            &zeros,
            &vec![0.75; n],
            dt,
            1.0,
            p.lattice_const_m,
            &drift,
            600e-9,
            &mut rng,
        );
        let moved = |v: &[f64]| v.iter().filter(|&&x| x != 300e-9).count();
        assert!(moved(&shallow) > 100 * moved(&deep).max(1));
    }

    proptest! {
        #[test]
        fn velocity_is_odd_in_field(e in 0.0f64..5e7, u in 0.4f64..0.8) {
            let p = params();
            prop_assert_eq!(drift_velocity(-e, u, &p), -drift_velocity(e, u, &p));
        }

        #[test]
        fn warmer_is_faster(e in 1e5f64..3e7, u in 0.5f64..0.8, t in 298.0f64..340.0, dt in 1.0f64..8.0) {
            let mut p = params();
            p.temperature_k = t;
            let cold = drift_velocity(e, u, &p);
            p.temperature_k = t + dt;
            prop_assert!(drift_velocity(e, u, &p) > cold);
        }

        #[test]
        fn pushes_stay_inside(x0 in 0.0f64..=600e-9, dx in -1e-6f64..1e-6, r in 0.0f64..1.0, delta in 0.0f64..=1.0) {
            let mut x = vec![x0];
            apply_push(&mut x, &[dx], &[r], delta, 600e-9);
            prop_assert!((0.0..=600e-9).contains(&x[0]));
        }
    }
}
