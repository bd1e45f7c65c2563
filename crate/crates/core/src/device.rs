//! A single simulated device: the vacancy ensemble, its internal state and
//! the per-step coupling of field solve, circuit solve and transport.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitState, ContactModel, SeriesCircuit, SolverOptions};
use crate::constants::ELEMENTARY_CHARGE;
use crate::error::{Error, Result};
use crate::field::{electric_field, Grid1D, PoissonSolver};
use crate::params::DeviceParameters;
use crate::transport::{apply_push, displacements, retention_step, DriftModel, TransportConfig};

/// Activation energy in the bulk of the oxide, eV.
pub const ACTIVATION_BULK_EV: f64 = 0.55;
/// Activation energy at the oxide/Pt interface, eV.
pub const ACTIVATION_INTERFACE_EV: f64 = 0.75;
/// Fraction of the thickness, adjacent to the bottom interface, over which
/// the activation energy ramps up (50 nm of 600 nm).
pub const ACTIVATION_RAMP_FRACTION: f64 = 50.0 / 600.0;

#[derive(Debug, Clone, PartialEq)]
pub struct VacancyEnsemble {
    /// Mobile V_O+ positions measured from the Au/oxide interface, m.
    pub mobile_positions_m: Vec<f64>,
    /// Fixed compensating defects, m.
    pub fixed_positions_m: Vec<f64>,
    /// Physical defects represented by one super-particle.
    pub particle_weight: f64,
    /// Mean mobile position at initialization, m.
    pub initial_mean_position_m: f64,
}

impl VacancyEnsemble {
    pub fn len(&self) -> usize {
        self.mobile_positions_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mobile_positions_m.is_empty()
    }

    pub fn mean_position(&self) -> Result<f64> {
        mean(&self.mobile_positions_m).ok_or_else(|| Error::State("ensemble has no mobile particles".into()))
    }

    /// Charge carried by one mobile super-particle, C.
    pub fn particle_charge(&self, charge_number: i32) -> f64 {
        f64::from(charge_number) * ELEMENTARY_CHARGE * self.particle_weight
    }

    /// Net charge of all mobile and fixed particles, C.
    pub fn total_charge(&self, charge_number: i32) -> f64 {
        let q = self.particle_charge(charge_number);
        q * self.mobile_positions_m.len() as f64 - q * self.fixed_positions_m.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceState {
    pub q: f64,
    pub mean_position_m: f64,
    pub time_s: f64,
    /// Zero-bias activation energy at each grid node, eV.
    pub activation_profile_ev: Vec<f64>,
}

/// Observables of one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time_s: f64,
    pub v_device_v: f64,
    pub i_device_a: f64,
    pub q: f64,
    pub d_mean_m: f64,
    pub v_sc_top_v: f64,
    pub v_bfo_v: f64,
    pub v_sc_bot_v: f64,
    pub phi_eff_top_ev: f64,
    pub phi_eff_bot_ev: f64,
    pub n_eff_top: f64,
    pub n_eff_bot: f64,
}

impl TraceRecord {
    pub fn new(time_s: f64, v_device_v: f64, circuit: &CircuitState, q: f64, d_mean_m: f64) -> Self {
        Self {
            time_s,
            v_device_v,
            i_device_a: circuit.current_a,
            q,
            d_mean_m,
            v_sc_top_v: circuit.v_sc_top_v,
            v_bfo_v: circuit.v_bfo_v,
            v_sc_bot_v: circuit.v_sc_bot_v,
            phi_eff_top_ev: circuit.phi_eff_top_ev,
            phi_eff_bot_ev: circuit.phi_eff_bot_ev,
            n_eff_top: circuit.n_eff_top,
            n_eff_bot: circuit.n_eff_bot,
        }
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Zero-bias activation energy: flat in the bulk, rising linearly across the
/// Ti-rich layer next to the bottom interface.
pub fn activation_profile(x: f64, params: &DeviceParameters) -> Result<f64> {
    let l = params.length_m;
    if !(0.0..=l).contains(&x) {
        return Err(Error::Domain { x, length: l });
    }
    Ok(activation_unchecked(x, l))
}

#[inline]
fn activation_unchecked(x: f64, length: f64) -> f64 {
    let ramp_start = (1.0 - ACTIVATION_RAMP_FRACTION) * length;
    if x <= ramp_start {
        ACTIVATION_BULK_EV
    } else {
        let f = (x - ramp_start) / (length - ramp_start);
        ACTIVATION_BULK_EV + f * (ACTIVATION_INTERFACE_EV - ACTIVATION_BULK_EV)
    }
}

/// `U_A + lambda_U V_device (1 - x / l)`.
pub fn effective_activation(u_a: f64, v_device: f64, x: f64, params: &DeviceParameters) -> Result<f64> {
    let l = params.length_m;
    if !(0.0..=l).contains(&x) {
        return Err(Error::Domain { x, length: l });
    }
    Ok(u_a + params.lambda_u * v_device * (1.0 - x / l))
}

/// `q = (d - d_r) / d_r` with `d` the mean mobile position.
pub fn internal_state(ensemble: &VacancyEnsemble) -> Result<f64> {
    let d = ensemble.mean_position()?;
    Ok((d - ensemble.initial_mean_position_m) / ensemble.initial_mean_position_m)
}

/// Places `n_super` mobile and `n_super` fixed super-particles uniformly at
/// random. If `params.initial_mean_position_m` is set, the mobile positions
/// are remapped affinely (towards whichever interface keeps them inside the
/// device) so that their mean matches it.
pub fn init_device(params: &DeviceParameters, n_super: usize, seed: u64) -> Result<(VacancyEnsemble, DeviceState)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ensemble, state) = init_with_rng(params, n_super, &mut rng)?;
    Ok((ensemble, state))
}

fn init_with_rng(
    params: &DeviceParameters,
    n_super: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(VacancyEnsemble, DeviceState)> {
    params.validate()?;
    if n_super < 2 {
        return Err(Error::config("n_super", n_super, "need at least 2 super-particles"));
    }
    let l = params.length_m;
    let mut mobile: Vec<f64> = (0..n_super).map(|_| rng.random::<f64>() * l).collect();
    let fixed: Vec<f64> = (0..n_super).map(|_| rng.random::<f64>() * l).collect();

    if let Some(target) = params.initial_mean_position_m {
        let m = mean(&mobile).expect("n_super >= 2");
        if target <= m {
            let s = target / m;
            mobile.iter_mut().for_each(|x| *x *= s);
        } else {
            let s = (l - target) / (l - m);
            mobile.iter_mut().for_each(|x| *x = (l - (l - *x) * s).clamp(0.0, l));
        }
    }
    let d_r = mean(&mobile).expect("n_super >= 2");
    let ensemble = VacancyEnsemble {
        mobile_positions_m: mobile,
        fixed_positions_m: fixed,
        particle_weight: params.physical_defect_count() / n_super as f64,
        initial_mean_position_m: d_r,
    };
    let state = DeviceState {
        q: 0.0,
        mean_position_m: d_r,
        time_s: 0.0,
        activation_profile_ev: Vec::new(),
    };
    Ok((ensemble, state))
}

/// Everything needed to build a device, minus its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceSetup {
    pub params: DeviceParameters,
    pub transport: TransportConfig,
    pub solver: SolverOptions,
    pub n_nodes: usize,
    pub n_super: usize,
}

impl Default for DeviceSetup {
    fn default() -> Self {
        Self {
            params: DeviceParameters::default(),
            transport: TransportConfig::default(),
            solver: SolverOptions::default(),
            n_nodes: 601,
            n_super: 5000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Device {
    params: DeviceParameters,
    transport: TransportConfig,
    solver: SolverOptions,
    ensemble: VacancyEnsemble,
    state: DeviceState,
    grid: Grid1D,
    poisson: PoissonSolver,
    top: ContactModel,
    bottom: ContactModel,
    drift: DriftModel,
    rng: ChaCha8Rng,
    /// Node charge of the fixed defects; they never move.
    fixed_node_charge: Vec<f64>,
    steps_taken: usize,
    fields: Vec<f64>,
    u_eff: Vec<f64>,
    steps: Vec<f64>,
    draws: Vec<f64>,
}

impl Device {
    pub fn new(setup: &DeviceSetup, seed: u64) -> Result<Self> {
        Self::with_rng(setup, ChaCha8Rng::seed_from_u64(seed))
    }

    /// Builds a device whose initialization and dynamics consume `rng`.
    pub fn with_rng(setup: &DeviceSetup, mut rng: ChaCha8Rng) -> Result<Self> {
        setup.transport.validate()?;
        let params = setup.params.clone();
        let (ensemble, mut state) = init_with_rng(&params, setup.n_super, &mut rng)?;
        let grid = Grid1D::new(setup.n_nodes, params.length_m)?;
        state.activation_profile_ev = (0..grid.n_nodes())
            .map(|k| activation_unchecked(grid.node_position(k), params.length_m))
            .collect();

        let top = ContactModel::top(&params);
        let bottom = ContactModel::bottom(&params);
        let q_max = params.length_m / ensemble.initial_mean_position_m - 1.0;
        top.validate_range(-1.0, q_max)?;
        bottom.validate_range(-1.0, q_max)?;

        let mut fixed_grid = grid.clone();
        fixed_grid.deposit(
            &ensemble.fixed_positions_m,
            -ensemble.particle_charge(params.charge_number),
        )?;

        let n = ensemble.len();
        Ok(Self {
            poisson: PoissonSolver::new(grid.n_nodes())?,
            fixed_node_charge: fixed_grid.node_charge_c,
            drift: DriftModel::new(&params),
            transport: setup.transport.clone(),
            solver: setup.solver,
            params,
            ensemble,
            state,
            grid,
            top,
            bottom,
            rng,
            steps_taken: 0,
            fields: Vec::with_capacity(n),
            u_eff: Vec::with_capacity(n),
            steps: Vec::with_capacity(n),
            draws: Vec::with_capacity(n),
        })
    }

    pub fn params(&self) -> &DeviceParameters {
        &self.params
    }

    pub fn transport(&self) -> &TransportConfig {
        &self.transport
    }

    pub fn ensemble(&self) -> &VacancyEnsemble {
        &self.ensemble
    }

    pub fn state(&self) -> &DeviceState {
        &self.state
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// Operating point at `v_device` for the present internal state. Does not
    /// touch the ensemble.
    pub fn circuit_at(&self, v_device: f64) -> Result<CircuitState> {
        SeriesCircuit::new(self.state.q, &self.top, &self.bottom, &self.params)?.solve(v_device, &self.solver)
    }

    fn deposit(&mut self) -> Result<()> {
        self.grid.node_charge_c.copy_from_slice(&self.fixed_node_charge);
        let q = self.ensemble.particle_charge(self.params.charge_number);
        self.grid.deposit(&self.ensemble.mobile_positions_m, q)?;
        self.grid.update_density(self.params.area_m2);
        Ok(())
    }

    /// Deposit, solve for the potential between the given interface
    /// potentials, and interpolate the field at every mobile particle.
    fn solve_fields(&mut self, phi_left: f64, phi_right: f64) -> Result<()> {
        self.deposit()?;
        self.poisson
            .solve(&mut self.grid, phi_left, phi_right, self.params.permittivity())?;
        electric_field(&mut self.grid);
        self.grid
            .gather_all(&self.ensemble.mobile_positions_m, &mut self.fields)
    }

    fn update_activation(&mut self, v_device: f64) {
        let l = self.params.length_m;
        let lu = self.params.lambda_u;
        self.u_eff.clear();
        self.u_eff.extend(
            self.ensemble
                .mobile_positions_m
                .iter()
                .map(|&x| activation_unchecked(x, l) + lu * v_device * (1.0 - x / l)),
        );
    }

    fn refresh_state(&mut self) -> Result<()> {
        self.state.mean_position_m = self.ensemble.mean_position()?;
        self.state.q = internal_state(&self.ensemble)?;
        Ok(())
    }

    /// Advances the device by `dt` under `v_device`.
    ///
    /// The record carries the time at the start of the step, the operating
    /// point computed from the state entering the step, and the internal
    /// state after the vacancy push.
    pub fn step(&mut self, v_device: f64, dt: f64) -> Result<TraceRecord> {
        let index = self.steps_taken;
        self.step_inner(v_device, dt).map_err(|e| e.at_step(index))
    }

    fn step_inner(&mut self, v_device: f64, dt: f64) -> Result<TraceRecord> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config("dt", dt, "time step must be > 0"));
        }
        let time = self.state.time_s;

        let circuit = self.circuit_at(v_device)?;
        let phi_left = v_device - circuit.v_sc_top_v;
        let phi_right = -circuit.v_sc_bot_v;

        self.update_activation(v_device);
        self.solve_fields(phi_left, phi_right)?;
        displacements(&self.fields, &self.u_eff, dt, &self.drift, &mut self.steps);

        // Never let a particle cross more than one cell per push.
        let max_step = self.steps.iter().fold(0.0f64, |m, s| m.max(s.abs())) * (1.0 + 0.5 * self.params.delta_max);
        let substeps = ((max_step / self.grid.dx_m()).ceil() as usize).clamp(1, self.transport.max_substeps);
        let sub_dt = dt / substeps as f64;
        for sub in 0..substeps {
            if sub > 0 {
                self.update_activation(v_device);
                self.solve_fields(phi_left, phi_right)?;
            }
            if substeps > 1 {
                displacements(&self.fields, &self.u_eff, sub_dt, &self.drift, &mut self.steps);
            }
            self.draws.clear();
            let rng = &mut self.rng;
            self.draws.extend((0..self.steps.len()).map(|_| rng.random::<f64>()));
            apply_push(
                &mut self.ensemble.mobile_positions_m,
                &self.steps,
                &self.draws,
                self.params.delta_max,
                self.params.length_m,
            );
        }

        self.refresh_state()?;
        self.state.time_s = time + dt;
        self.steps_taken += 1;
        Ok(TraceRecord::new(
            time,
            v_device,
            &circuit,
            self.state.q,
            self.state.mean_position_m,
        ))
    }

    /// Lets the unbiased device relax for `duration` seconds using gated
    /// thermal hops in the internal space-charge field.
    pub fn relax(&mut self, duration: f64) -> Result<()> {
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(Error::config("duration", duration, "must be >= 0"));
        }
        let n_sub = (duration / self.transport.retention_substep_s).round().max(1.0) as usize;
        let dt = duration / n_sub as f64;
        if duration == 0.0 {
            return Ok(());
        }
        for _ in 0..n_sub {
            self.update_activation(0.0);
            self.solve_fields(0.0, 0.0)?;
            retention_step(
                &mut self.ensemble.mobile_positions_m,
                &self.fields,
                &self.u_eff,
                dt,
                self.transport.retention_move_prob,
                self.params.lattice_const_m,
                &self.drift,
                self.params.length_m,
                &mut self.rng,
            );
        }
        self.refresh_state()?;
        self.state.time_s += duration;
        Ok(())
    }

    /// Operating point at `v_device` with the ensemble frozen.
    pub fn read(&self, v_device: f64) -> Result<TraceRecord> {
        let circuit = self.circuit_at(v_device)?;
        Ok(TraceRecord::new(
            self.state.time_s,
            v_device,
            &circuit,
            self.state.q,
            self.state.mean_position_m,
        ))
    }

    /// Mean `|v_D|` over all mobile particles under `v_device`, without
    /// moving them. Refreshes the grid fields.
    pub fn mean_drift_speed(&mut self, v_device: f64) -> Result<f64> {
        let circuit = self.circuit_at(v_device)?;
        self.update_activation(v_device);
        self.solve_fields(v_device - circuit.v_sc_top_v, -circuit.v_sc_bot_v)?;
        let n = self.fields.len().max(1) as f64;
        Ok(self
            .fields
            .iter()
            .zip(&self.u_eff)
            .map(|(&e, &u)| self.drift.velocity(e, u).abs())
            .sum::<f64>()
            / n)
    }

    /// Net charge currently on the grid, C.
    pub fn grid_charge(&self) -> f64 {
        self.grid.total_charge(self.params.area_m2)
    }
}
