use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::device::{Device, DeviceSetup, TraceRecord};
use crate::error::{Error, Result};
use crate::harness::metrics::{sweep_metrics, SweepMetrics};
use crate::harness::sampling::VariabilitySpec;
use crate::harness::waveform::{Waveform, WaveformSamples};

/// Mixed into the master seed for the stream that samples device parameters.
const PARAMETER_SALT: u64 = 0x5eed_da7a_d2d0_0001;

/// RNG of device `index` under `master_seed`: one ChaCha stream per index,
/// so adding devices never changes the earlier ones.
pub fn device_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Steps `device` through every sample.
pub fn run_iv_sweep(device: &mut Device, samples: &WaveformSamples) -> Result<Vec<TraceRecord>> {
    samples.volts.iter().map(|&v| device.step(v, samples.dt_s)).collect()
}

/// One device driven through back-to-back cycles.
#[derive(Debug, Clone)]
pub struct CycleRun {
    pub cycles: Vec<Vec<TraceRecord>>,
    pub metrics: Vec<SweepMetrics>,
}

impl CycleRun {
    /// Splits a multi-cycle trace into cycles of `cycle_len` samples and
    /// evaluates each one.
    pub fn from_records(records: Vec<TraceRecord>, cycle_len: usize, read_v: f64) -> Result<Self> {
        let cycles: Vec<Vec<TraceRecord>> = records.chunks(cycle_len.max(1)).map(<[_]>::to_vec).collect();
        let metrics = cycles.iter().map(|c| sweep_metrics(c, read_v)).collect::<Result<_>>()?;
        Ok(CycleRun { cycles, metrics })
    }

    pub fn records(&self) -> impl Iterator<Item = &TraceRecord> {
        self.cycles.iter().flatten()
    }
}

/// Sweeps one device `waveform.n_cycles` times without re-initialization.
pub fn run_c2c(device: &mut Device, waveform: &Waveform, read_v: f64) -> Result<CycleRun> {
    if waveform.n_cycles < 2 {
        return Err(Error::config(
            "waveform.n_cycles",
            waveform.n_cycles,
            "cycle-to-cycle runs need >= 2 cycles",
        ));
    }
    let samples = waveform.samples(device.transport().dt_s)?;
    let records = run_iv_sweep(device, &samples)?;
    CycleRun::from_records(records, samples.cycle_len, read_v)
}

/// Per-device parameters of a device-to-device study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceVariant {
    pub length_m: f64,
    pub defect_density_per_m3: f64,
    /// Target initial mean vacancy position; `None` keeps the sampled one.
    pub initial_mean_position_m: Option<f64>,
    /// Index of this device's random stream.
    pub stream: u64,
}

impl DeviceVariant {
    pub fn apply(&self, setup: &DeviceSetup) -> DeviceSetup {
        let mut s = setup.clone();
        s.params.length_m = self.length_m;
        s.params.defect_density_per_m3 = self.defect_density_per_m3;
        s.params.initial_mean_position_m = self.initial_mean_position_m;
        s
    }
}

/// The four measured devices.
pub fn measured_devices() -> Vec<DeviceVariant> {
    [
        (295.4e-9, 600e-9, 2.0e22),
        (306.89e-9, 588.2e-9, 2.6e22),
        (299.001e-9, 601.5e-9, 2.1e22),
        (302.23e-9, 586.9e-9, 1.5e22),
    ]
    .into_iter()
    .enumerate()
    .map(|(k, (d_r, l, rho))| DeviceVariant {
        length_m: l,
        defect_density_per_m3: rho,
        initial_mean_position_m: Some(d_r),
        stream: k as u64,
    })
    .collect()
}

/// Devices drawn from `spec`. Device `k` uses stream `k` both for its
/// parameters (under a salted seed) and for its own dynamics.
pub fn sample_variants(spec: &VariabilitySpec, master_seed: u64) -> Result<Vec<DeviceVariant>> {
    spec.validate()?;
    (0..spec.n_devices as u64)
        .map(|k| {
            let mut rng = device_rng(master_seed ^ PARAMETER_SALT, k);
            let (length_m, defect_density_per_m3) = spec.sample(&mut rng)?;
            Ok(DeviceVariant {
                length_m,
                defect_density_per_m3,
                initial_mean_position_m: None,
                stream: k,
            })
        })
        .collect()
}

/// Single sweep of one variant.
pub fn run_variant(
    setup: &DeviceSetup,
    variant: &DeviceVariant,
    waveform: &Waveform,
    master_seed: u64,
    read_v: f64,
) -> Result<CycleRun> {
    let mut device = Device::with_rng(&variant.apply(setup), device_rng(master_seed, variant.stream))?;
    let samples = waveform.samples(setup.transport.dt_s)?;
    let records = run_iv_sweep(&mut device, &samples)?;
    CycleRun::from_records(records, samples.cycle_len, read_v)
}

/// Independent devices, one sweep each; results follow the order of `variants`.
pub fn run_d2d(
    setup: &DeviceSetup,
    variants: &[DeviceVariant],
    waveform: &Waveform,
    master_seed: u64,
    read_v: f64,
) -> Result<Vec<CycleRun>> {
    if variants.len() < 2 {
        return Err(Error::config(
            "n_devices",
            variants.len(),
            "device-to-device runs need >= 2 devices",
        ));
    }
    variants
        .iter()
        .map(|v| run_variant(setup, v, waveform, master_seed, read_v))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureRow {
    pub temperature_k: f64,
    pub rel_permittivity: f64,
    pub conductivity_s_per_m: f64,
    pub lambda_t: f64,
}

/// Temperature series of the measured device.
pub fn temperature_rows() -> Vec<TemperatureRow> {
    [
        (298.0, 52.0, 8e-4, 0.0),
        (313.0, 60.0, 9e-4, 0.005),
        (323.0, 72.0, 1e-3, 0.01),
        (333.0, 100.0, 3.5e-3, 0.04),
        (343.0, 132.0, 5e-3, 0.06),
        (348.0, 145.0, 7e-3, 0.062),
    ]
    .into_iter()
    .map(|(t, eps, sigma, lt)| TemperatureRow {
        temperature_k: t,
        rel_permittivity: eps,
        conductivity_s_per_m: sigma,
        lambda_t: lt,
    })
    .collect()
}

impl TemperatureRow {
    pub fn apply(&self, setup: &DeviceSetup, with_friction: bool) -> DeviceSetup {
        let mut s = setup.clone();
        s.params.temperature_k = self.temperature_k;
        s.params.rel_permittivity = self.rel_permittivity;
        s.params.conductivity_s_per_m = self.conductivity_s_per_m;
        s.params.lambda_t = if with_friction { self.lambda_t } else { 0.0 };
        s
    }
}

#[derive(Debug, Clone)]
pub struct TemperaturePoint {
    pub row: TemperatureRow,
    pub with_friction: CycleRun,
    pub without_friction: CycleRun,
    /// Mean drift speed over all particles and steps of the set half, m/s.
    pub mean_speed_with_friction: f64,
    pub mean_speed_without_friction: f64,
}

/// Runs every row with and without its friction coefficient. All rows and
/// both variants share the initial configuration drawn from `seed`, so the
/// comparison across temperatures is free of sampling noise.
pub fn run_temperature_series(
    setup: &DeviceSetup,
    rows: &[TemperatureRow],
    waveform: &Waveform,
    seed: u64,
    read_v: f64,
) -> Result<Vec<TemperaturePoint>> {
    if rows.is_empty() {
        return Err(Error::config("rows", 0, "need at least one temperature row"));
    }
    let samples = waveform.samples(setup.transport.dt_s)?;
    let run = |with_friction: bool, row: &TemperatureRow| -> Result<(CycleRun, f64)> {
        let s = row.apply(setup, with_friction);
        let mut device = Device::new(&s, seed)?;
        let mut records = Vec::with_capacity(samples.len());
        let mut speed_sum = 0.0;
        let half = samples.cycle_len / 2;
        for (k, &v) in samples.volts.iter().enumerate() {
            if k < half {
                speed_sum += device.mean_drift_speed(v)?;
            }
            records.push(device.step(v, samples.dt_s)?);
        }
        Ok((
            CycleRun::from_records(records, samples.cycle_len, read_v)?,
            speed_sum / half.max(1) as f64,
        ))
    };
    rows.iter()
        .map(|row| {
            let (with_friction, mean_speed_with_friction) = run(true, row)?;
            let (without_friction, mean_speed_without_friction) = run(false, row)?;
            Ok(TemperaturePoint {
                row: *row,
                with_friction,
                without_friction,
                mean_speed_with_friction,
                mean_speed_without_friction,
            })
        })
        .collect()
}

/// Spread `max - min` of the detected switching voltages; `None` if any is missing.
pub fn switching_spread(voltages: &[Option<f64>]) -> Option<f64> {
    let vs: Option<Vec<f64>> = voltages.iter().copied().collect();
    let vs = vs?;
    let max = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vs.iter().copied().fold(f64::INFINITY, f64::min);
    (!vs.is_empty()).then_some(max - min)
}

pub const AMPLITUDES_V: [f64; 4] = [3.0, 5.0, 7.0, 8.5];

/// One fresh device per amplitude, all from the same seed.
pub fn run_amplitude_series(
    setup: &DeviceSetup,
    amplitudes: &[f64],
    waveform: &Waveform,
    seed: u64,
    read_v: f64,
) -> Result<Vec<(f64, CycleRun)>> {
    amplitudes
        .iter()
        .map(|&v_max| {
            let w = Waveform {
                v_max_v: v_max,
                ..waveform.clone()
            };
            let mut device = Device::new(setup, seed)?;
            let samples = w.samples(setup.transport.dt_s)?;
            let records = run_iv_sweep(&mut device, &samples)?;
            Ok((v_max, CycleRun::from_records(records, samples.cycle_len, read_v)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResistanceState {
    Lrs,
    Hrs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetentionSpec {
    pub n_reads: usize,
    pub read_v: f64,
    pub interval_s: f64,
    /// Programming sweep amplitude, V.
    pub program_v: f64,
    pub program_rate_v_per_s: f64,
}

impl Default for RetentionSpec {
    fn default() -> Self {
        Self {
            n_reads: 3000,
            read_v: 2.0,
            interval_s: 10.0,
            program_v: 8.5,
            program_rate_v_per_s: 3.6,
        }
    }
}

impl RetentionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_reads == 0 {
            return Err(Error::config("retention.n_reads", 0, "must be >= 1"));
        }
        if !self.read_v.is_finite() {
            return Err(Error::config("retention.read_v", self.read_v, "must be finite"));
        }
        if !(self.interval_s >= 0.0 && self.interval_s.is_finite()) {
            return Err(Error::config("retention.interval_s", self.interval_s, "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RetentionRun {
    /// Trace of the programming sweep.
    pub program: Vec<TraceRecord>,
    /// One record per read; `time_s` is the read time.
    pub reads: Vec<TraceRecord>,
}

/// Programs the device (the set half-sweep for LRS, a full set/reset cycle
/// so that HRS ends on the reset half-sweep) and then alternates unbiased
/// relaxation with frozen reads.
pub fn run_retention(device: &mut Device, state: ResistanceState, spec: &RetentionSpec) -> Result<RetentionRun> {
    spec.validate()?;
    let cycle = Waveform::triangle(spec.program_v, spec.program_rate_v_per_s, 1).samples(device.transport().dt_s)?;
    let program_volts = match state {
        ResistanceState::Lrs => &cycle.volts[..cycle.cycle_len / 2],
        ResistanceState::Hrs => &cycle.volts[..cycle.cycle_len],
    };
    let program = program_volts
        .iter()
        .map(|&v| device.step(v, cycle.dt_s))
        .collect::<Result<Vec<_>>>()?;

    let mut reads = Vec::with_capacity(spec.n_reads);
    for _ in 0..spec.n_reads {
        device.relax(spec.interval_s)?;
        reads.push(device.read(spec.read_v)?);
    }
    Ok(RetentionRun { program, reads })
}
