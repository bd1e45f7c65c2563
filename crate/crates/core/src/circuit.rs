//! Back-to-back Schottky contacts in series with the Ohmic oxide bulk.
//!
//! Sign conventions: `V_device = V_sc,top + V_bulk - V_sc,bot` and
//! `I_sc,top = I_bulk = -I_sc,bot = I`. Each contact voltage is measured in
//! that contact's own forward direction, so for a positive device bias the
//! top contact is forward biased and the bottom one reverse biased.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::constants::{thermal_voltage, MAX_EXP_ARG};
use crate::error::{Error, Result};
use crate::params::DeviceParameters;

static CLAMPED_EXPONENTS: AtomicU64 = AtomicU64::new(0);

/// Number of exponential arguments clamped at [`MAX_EXP_ARG`] so far in this process.
pub fn clamped_exponent_count() -> u64 {
    CLAMPED_EXPONENTS.load(Ordering::Relaxed)
}

#[inline]
pub(crate) fn guarded_exp_arg(arg: f64) -> f64 {
    if arg > MAX_EXP_ARG {
        CLAMPED_EXPONENTS.fetch_add(1, Ordering::Relaxed);
        MAX_EXP_ARG
    } else {
        arg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Top,
    Bottom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactModel {
    pub phi0_ev: f64,
    pub n0: f64,
    pub lambda_b: f64,
    pub lambda_n: f64,
    pub alpha_r: f64,
    pub orientation: Orientation,
}

impl ContactModel {
    pub fn top(params: &DeviceParameters) -> Self {
        Self {
            phi0_ev: params.phi0_top_ev,
            n0: params.n0_top,
            lambda_b: params.lambda_b_top,
            lambda_n: params.lambda_n_top,
            alpha_r: params.alpha_r,
            orientation: Orientation::Top,
        }
    }

    pub fn bottom(params: &DeviceParameters) -> Self {
        Self {
            phi0_ev: params.phi0_bot_ev,
            n0: params.n0_bot,
            lambda_b: params.lambda_b_bot,
            lambda_n: params.lambda_n_bot,
            alpha_r: params.alpha_r,
            orientation: Orientation::Bottom,
        }
    }

    /// Checks that the effective barrier stays admissible for every `q` in
    /// `[q_min, q_max]`. Both relations are linear in `q`, so the endpoints suffice.
    pub fn validate_range(&self, q_min: f64, q_max: f64) -> Result<()> {
        let name = match self.orientation {
            Orientation::Top => "top",
            Orientation::Bottom => "bottom",
        };
        for q in [q_min, q_max] {
            if let Err(e) = effective_barrier(self, q) {
                return Err(Error::config(
                    format!("lambda_b_{name}/lambda_n_{name}"),
                    format!("q = {q:.4}"),
                    format!("reachable internal state gives {e}"),
                ));
            }
        }
        Ok(())
    }
}

/// `(Phi0 (1 + lambda_b q), n0 (1 + lambda_n q))`.
pub fn effective_barrier(contact: &ContactModel, q: f64) -> Result<(f64, f64)> {
    if !q.is_finite() {
        return Err(Error::State(format!("internal state q = {q} is not finite")));
    }
    let phi = contact.phi0_ev * (1.0 + contact.lambda_b * q);
    let n = contact.n0 * (1.0 + contact.lambda_n * q);
    if !(phi > 0.0) {
        return Err(Error::State(format!("effective barrier {phi} eV is not positive")));
    }
    if !(n >= 1.0) {
        return Err(Error::State(format!("effective ideality factor {n} is below 1")));
    }
    Ok((phi, n))
}

/// Thermionic-emission current of one contact with TFE ideality correction
/// and reverse-bias barrier lowering.
pub fn schottky_current(
    v_sc: f64,
    phi_eff_ev: f64,
    n_eff: f64,
    temperature_k: f64,
    area_m2: f64,
    alpha_r: f64,
    richardson: f64,
) -> f64 {
    Diode::new(phi_eff_ev, n_eff, temperature_k, area_m2, alpha_r, richardson).current(v_sc)
}

/// Ohm's law for the oxide bulk.
pub fn bulk_current(v_bfo: f64, params: &DeviceParameters) -> f64 {
    params.conductivity_s_per_m * params.area_m2 * v_bfo / params.length_m
}

/// One contact evaluated at fixed effective parameters.
#[derive(Debug, Clone, Copy)]
pub struct Diode {
    /// Saturation current without barrier lowering, A.
    pub i_r: f64,
    /// `n_eff k_B T / e`, V.
    pub n_vt: f64,
    /// `alpha_r / (k_B T)`, V^-1/2.
    pub alpha_over_kt: f64,
}

impl Diode {
    pub fn new(phi_eff_ev: f64, n_eff: f64, temperature_k: f64, area_m2: f64, alpha_r: f64, richardson: f64) -> Self {
        let vt = thermal_voltage(temperature_k);
        Self {
            i_r: area_m2 * richardson * temperature_k * temperature_k * (-phi_eff_ev / vt).exp(),
            n_vt: n_eff * vt,
            alpha_over_kt: alpha_r / vt,
        }
    }

    #[inline]
    fn reverse_saturation(&self, v: f64) -> f64 {
        self.i_r * guarded_exp_arg(self.alpha_over_kt * (-v).sqrt()).exp()
    }

    pub fn current(&self, v: f64) -> f64 {
        if v >= 0.0 {
            self.i_r * guarded_exp_arg(v / self.n_vt).exp_m1()
        } else {
            self.reverse_saturation(v) * (v / self.n_vt).exp_m1()
        }
    }

    /// Small-signal conductance `dI/dV`.
    pub fn conductance(&self, v: f64) -> f64 {
        if v >= 0.0 {
            self.i_r * guarded_exp_arg(v / self.n_vt).exp() / self.n_vt
        } else {
            let u = -v;
            let sat = self.reverse_saturation(v);
            let em = (-u / self.n_vt).exp();
            // d/du of sat(u) (1 - e^{-u/nVt})
            let dsat = if u > 0.0 {
                sat * self.alpha_over_kt / (2.0 * u.sqrt())
            } else {
                0.0
            };
            dsat * (1.0 - em) + sat * em / self.n_vt
        }
    }

    /// Contact voltage that carries `current`.
    pub fn voltage_for(&self, current: f64) -> Result<f64> {
        if current == 0.0 {
            return Ok(0.0);
        }
        if current > 0.0 {
            return Ok(self.n_vt * (current / self.i_r).ln_1p());
        }
        let m = -current;
        if self.alpha_over_kt == 0.0 {
            if m >= self.i_r {
                return Err(Error::State(format!(
                    "reverse current {m:e} A exceeds saturation {:e} A",
                    self.i_r
                )));
            }
            return Ok(self.n_vt * (-m / self.i_r).ln_1p());
        }
        Ok(-self.reverse_magnitude_for(m))
    }

    /// Solves `ln I_R + a sqrt(u) + ln(1 - exp(-u/nVt)) = ln m` for `u > 0`.
    fn reverse_magnitude_for(&self, m: f64) -> f64 {
        let target = m.ln();
        let ln_ir = self.i_r.ln();
        let a = self.alpha_over_kt;
        let h = |u: f64| ln_ir + a * u.sqrt() + (-(-u / self.n_vt).exp_m1()).ln() - target;
        let dh = |u: f64| {
            let em = (-u / self.n_vt).exp();
            a / (2.0 * u.sqrt()) + em / (self.n_vt * (1.0 - em))
        };

        // Bracket the root.
        let mut lo = 0.0;
        let mut hi = {
            let gap = (target - ln_ir).max(0.0) / a;
            (gap * gap).max(self.n_vt)
        };
        while h(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        let mut u = 0.5 * (lo + hi);
        for _ in 0..200 {
            let hu = h(u);
            if hu == 0.0 {
                return u;
            }
            if hu < 0.0 {
                lo = u;
            } else {
                hi = u;
            }
            let newton = u - hu / dh(u);
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - u).abs() <= 4.0 * f64::EPSILON * u || hi - lo <= 4.0 * f64::EPSILON * hi {
                return next;
            }
            u = next;
        }
        u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CircuitState {
    pub v_sc_top_v: f64,
    pub v_bfo_v: f64,
    pub v_sc_bot_v: f64,
    pub current_a: f64,
    pub phi_eff_top_ev: f64,
    pub phi_eff_bot_ev: f64,
    pub n_eff_top: f64,
    pub n_eff_bot: f64,
}

impl CircuitState {
    /// `|V_top + V_bulk - V_bot - V_device|`.
    pub fn kvl_residual(&self, v_device: f64) -> f64 {
        (self.v_sc_top_v + self.v_bfo_v - self.v_sc_bot_v - v_device).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// KVL tolerance relative to `max(1, |V_device|)`.
    pub kvl_tol: f64,
    /// Relative KCL tolerance.
    pub kcl_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            kvl_tol: 1e-12,
            kcl_tol: 1e-12,
        }
    }
}

/// The series circuit at a fixed internal state.
#[derive(Debug, Clone, Copy)]
pub struct SeriesCircuit {
    pub top: Diode,
    pub bottom: Diode,
    pub bulk_resistance: f64,
    pub phi_eff_top_ev: f64,
    pub phi_eff_bot_ev: f64,
    pub n_eff_top: f64,
    pub n_eff_bot: f64,
}

impl SeriesCircuit {
    pub fn new(q: f64, top: &ContactModel, bottom: &ContactModel, params: &DeviceParameters) -> Result<Self> {
        let (phi_t, n_t) = effective_barrier(top, q)?;
        let (phi_b, n_b) = effective_barrier(bottom, q)?;
        let diode = |phi, n, alpha| {
            Diode::new(
                phi,
                n,
                params.temperature_k,
                params.area_m2,
                alpha,
                params.richardson_a_per_m2k2,
            )
        };
        Ok(Self {
            top: diode(phi_t, n_t, top.alpha_r),
            bottom: diode(phi_b, n_b, bottom.alpha_r),
            bulk_resistance: params.bulk_resistance(),
            phi_eff_top_ev: phi_t,
            phi_eff_bot_ev: phi_b,
            n_eff_top: n_t,
            n_eff_bot: n_b,
        })
    }

    /// Element voltages `(V_top, V_bulk, V_bot)` carrying series current `i`.
    pub fn voltages(&self, i: f64) -> Result<(f64, f64, f64)> {
        Ok((
            self.top.voltage_for(i)?,
            i * self.bulk_resistance,
            self.bottom.voltage_for(-i)?,
        ))
    }

    fn state(&self, i: f64, (vt, vb, vbot): (f64, f64, f64)) -> CircuitState {
        CircuitState {
            v_sc_top_v: vt,
            v_bfo_v: vb,
            v_sc_bot_v: vbot,
            current_a: i,
            phi_eff_top_ev: self.phi_eff_top_ev,
            phi_eff_bot_ev: self.phi_eff_bot_ev,
            n_eff_top: self.n_eff_top,
            n_eff_bot: self.n_eff_bot,
        }
    }

    /// Largest relative deviation of any element current from `state.current_a`.
    pub fn kcl_residual(&self, state: &CircuitState) -> f64 {
        let i = state.current_a;
        if i == 0.0 {
            return 0.0;
        }
        let i_top = self.top.current(state.v_sc_top_v);
        let i_bulk = state.v_bfo_v / self.bulk_resistance;
        let i_bot = -self.bottom.current(state.v_sc_bot_v);
        [i_top, i_bulk, i_bot]
            .iter()
            .map(|x| ((x - i) / i).abs())
            .fold(0.0, f64::max)
    }

    /// Finds the operating point for `v_device`.
    ///
    /// The unknown is the voltage `u` across the reverse-biased (blocking)
    /// contact: the series current follows from that contact's law, the other
    /// two elements are inverted analytically, and the KVL mismatch
    /// `h(u) = u + V_fwd + I R - |V_device|` is strictly increasing with
    /// `h(0) < 0 <= h(|V_device|)`. Newton steps are taken inside the bracket,
    /// with bisection whenever a step leaves it. Working in `u` rather than in
    /// `I` keeps the solve well posed when the blocking contact saturates.
    pub fn solve(&self, v_device: f64, opts: &SolverOptions) -> Result<CircuitState> {
        if !v_device.is_finite() {
            return Err(Error::State(format!("device voltage {v_device} is not finite")));
        }
        if v_device == 0.0 {
            return Ok(self.state(0.0, (0.0, 0.0, 0.0)));
        }
        let positive = v_device > 0.0;
        let (blocking, forward) = if positive {
            (&self.bottom, &self.top)
        } else {
            (&self.top, &self.bottom)
        };
        let target = v_device.abs();
        let tol = opts.kvl_tol * target.max(1.0);

        let eval = |u: f64| -> Result<(f64, f64, f64, f64)> {
            let m = -blocking.current(-u);
            let w = forward.voltage_for(m)?;
            let h = u + w + m * self.bulk_resistance - target;
            let dh = 1.0 + blocking.conductance(-u) * (1.0 / forward.conductance(w) + self.bulk_resistance);
            Ok((h, dh, m, w))
        };
        let assemble = |u: f64, m: f64, w: f64| {
            if positive {
                self.state(m, (w, m * self.bulk_resistance, -u))
            } else {
                self.state(-m, (-u, -m * self.bulk_resistance, w))
            }
        };

        let (mut lo, mut hi) = (0.0, target);
        let mut u = 0.5 * target;
        let mut last_residual = f64::INFINITY;
        for _ in 0..opts.max_iterations {
            let (h, dh, m, w) = eval(u)?;
            last_residual = h.abs();
            if last_residual < tol {
                let state = assemble(u, m, w);
                if self.kcl_residual(&state) < opts.kcl_tol {
                    return Ok(state);
                }
            }
            if h < 0.0 {
                lo = u;
            } else {
                hi = u;
            }
            let newton = u - h / dh;
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if next == u {
                break;
            }
            u = next;
        }
        Err(Error::Solver {
            iterations: opts.max_iterations,
            residual: last_residual,
        })
    }
}

/// Solves Kirchhoff's laws for the back-to-back contact circuit at state `q`.
pub fn solve_partition(
    v_device: f64,
    q: f64,
    top: &ContactModel,
    bottom: &ContactModel,
    params: &DeviceParameters,
    opts: &SolverOptions,
) -> Result<CircuitState> {
    SeriesCircuit::new(q, top, bottom, params)?.solve(v_device, opts)
}
