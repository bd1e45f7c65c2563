//! Run configuration: TOML in, validated `RunConfig` out.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use memkin_core::harness::{
    measured_devices, temperature_rows, DeviceVariant, ResistanceState, RetentionSpec, TemperatureRow, VariabilitySpec,
    Waveform, AMPLITUDES_V,
};
use memkin_core::{DeviceParameters, DeviceSetup, SolverOptions, TransportConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Sweep,
    C2c,
    D2d,
    Temperature,
    Amplitude,
    Retention,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Sweep => "sweep",
            Experiment::C2c => "c2c",
            Experiment::D2d => "d2d",
            Experiment::Temperature => "temperature",
            Experiment::Amplitude => "amplitude",
            Experiment::Retention => "retention",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n_nodes: usize,
    /// Mobile super-particles (the same number of fixed ones is added).
    pub n_super: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        let d = DeviceSetup::default();
        Self {
            n_nodes: d.n_nodes,
            n_super: d.n_super,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub waveform: Waveform,
    /// Voltage at which the HRS/LRS ratio is evaluated, V.
    pub read_v: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            waveform: Waveform::default(),
            read_v: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct C2cConfig {
    pub n_cycles: usize,
}

impl Default for C2cConfig {
    fn default() -> Self {
        Self { n_cycles: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum D2dSource {
    /// The four measured devices.
    #[default]
    Table,
    /// Devices drawn from `variability`.
    Sampled,
    /// The rows listed in `devices`.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct D2dConfig {
    pub source: D2dSource,
    pub variability: VariabilitySpec,
    pub devices: Vec<DeviceVariant>,
}

impl Default for D2dConfig {
    fn default() -> Self {
        Self {
            source: D2dSource::Table,
            variability: VariabilitySpec::default(),
            devices: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemperatureConfig {
    pub v_max_v: f64,
    pub rows: Vec<TemperatureRow>,
}

impl Default for TemperatureConfig {
    fn default() -> Self {
        Self {
            v_max_v: 11.0,
            rows: temperature_rows(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmplitudeConfig {
    pub amplitudes_v: Vec<f64>,
}

impl Default for AmplitudeConfig {
    fn default() -> Self {
        Self {
            amplitudes_v: AMPLITUDES_V.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetentionConfig {
    pub state: ResistanceState,
    pub protocol: RetentionSpec,
}

impl Default for RetentionConfig {
    fn default() -> Self {
        Self {
            state: ResistanceState::Lrs,
            protocol: RetentionSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Traces longer than this are decimated by a constant stride.
    pub max_trace_rows: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            max_trace_rows: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub device: DeviceParameters,
    pub transport: TransportConfig,
    pub solver: SolverOptions,
    pub grid: GridConfig,
    pub sweep: SweepConfig,
    pub c2c: C2cConfig,
    pub d2d: D2dConfig,
    pub temperature: TemperatureConfig,
    pub amplitude: AmplitudeConfig,
    pub retention: RetentionConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn setup(&self) -> DeviceSetup {
        DeviceSetup {
            params: self.device.clone(),
            transport: self.transport.clone(),
            solver: self.solver,
            n_nodes: self.grid.n_nodes,
            n_super: self.grid.n_super,
        }
    }

    /// Device variants of the d2d experiment.
    pub fn d2d_variants(&self) -> Result<Vec<DeviceVariant>> {
        Ok(match self.d2d.source {
            D2dSource::Table => measured_devices(),
            D2dSource::Sampled => memkin_core::harness::sample_variants(&self.d2d.variability, self.seed.unwrap_or(0))?,
            D2dSource::Explicit => self.d2d.devices.clone(),
        })
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        self.device.validate()?;
        self.transport.validate()?;
        self.sweep.waveform.validate()?;
        if self.grid.n_nodes < 3 {
            bail!(memkin_core::Error::Config {
                field: "grid.n_nodes".into(),
                value: self.grid.n_nodes.to_string(),
                reason: "must be >= 3".into()
            });
        }
        if self.grid.n_super < 2 {
            bail!(memkin_core::Error::Config {
                field: "grid.n_super".into(),
                value: self.grid.n_super.to_string(),
                reason: "must be >= 2".into()
            });
        }
        if self.c2c.n_cycles < 2 {
            bail!(memkin_core::Error::Config {
                field: "c2c.n_cycles".into(),
                value: self.c2c.n_cycles.to_string(),
                reason: "must be >= 2".into()
            });
        }
        if self.d2d.source == D2dSource::Sampled {
            self.d2d.variability.validate()?;
        }
        if self.d2d.source == D2dSource::Explicit && self.d2d.devices.len() < 2 {
            bail!(memkin_core::Error::Config {
                field: "d2d.devices".into(),
                value: self.d2d.devices.len().to_string(),
                reason: "need >= 2 devices".into()
            });
        }
        for row in &self.temperature.rows {
            let mut s = self.setup();
            s.params = row.apply(&s, true).params;
            s.params.validate()?;
        }
        for &a in &self.amplitude.amplitudes_v {
            Waveform {
                v_max_v: a,
                ..self.sweep.waveform.clone()
            }
            .validate()?;
        }
        self.retention.protocol.validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

/// Parses TOML text and applies `key.path=value` overrides before
/// deserializing. Values are parsed as TOML, falling back to a string.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut doc: toml::Table = toml::from_str(text).context("parsing configuration")?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let config: RunConfig = toml::Value::Table(doc).try_into().context("reading configuration")?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => String::new(),
    };
    parse_config(&text, overrides)
}

fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .with_context(|| format!("override `{spec}` is not of the form key=value"))?;
    let key = key.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .with_context(|| format!("empty override key in `{spec}`"))?;
    let mut table = doc;
    for p in parts {
        table = table
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .with_context(|| format!("override `{key}`: `{p}` is not a table"))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_defaults() {
        let c = parse_config("", &[]).unwrap();
        assert_eq!(c, RunConfig::default());
        let d = &c.device;
        assert_eq!(d.temperature_k, 298.0);
        assert_eq!(d.phonon_freq_hz, 1e12);
        assert_eq!(d.lattice_const_m, 0.56e-9);
        assert_eq!(d.area_m2, 0.04e-6);
        assert_eq!(d.rel_permittivity, 52.0);
        assert_eq!(d.conductivity_s_per_m, 7e-4);
        assert_eq!(d.length_m, 600e-9);
        assert_eq!(d.defect_density_per_m3, 2e22);
        assert_eq!(
            (d.phi0_top_ev, d.n0_top, d.phi0_bot_ev, d.n0_bot),
            (0.8, 4.2, 0.85, 4.5)
        );
        assert_eq!(c.grid.n_nodes, 601);
    }

    #[test]
    fn empty_device_section_is_defaults() {
        let c = parse_config("[device]\n", &[]).unwrap();
        assert_eq!(c.device, DeviceParameters::default());
    }

    #[test]
    fn ideality_bound_is_enforced() {
        let err = parse_config("[device]\nn0_top = 0.5\n", &[]).unwrap_err();
        assert!(format!("{err:#}").contains("n0_top"), "{err:#}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_config("[device]\nfoo = 1\n", &[]).is_err());
        assert!(parse_config("bogus = 1\n", &[]).is_err());
    }

    #[test]
    fn parse_errors_carry_line_info() {
        let err = parse_config("seed = 1\n[device\n", &[]).unwrap_err();
        assert!(format!("{err:#}").contains("line 2"), "{err:#}");
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig {
            seed: Some(99),
            experiment: Some(Experiment::D2d),
            ..Default::default()
        };
        c.device.lambda_u = 0.02;
        c.d2d.source = D2dSource::Explicit;
        c.d2d.devices = measured_devices();
        let text = c.to_toml().unwrap();
        assert_eq!(parse_config(&text, &[]).unwrap(), c);
    }

    #[test]
    fn overrides_apply_in_order() {
        let c = parse_config(
            "[device]\nlambda_u = 0.1\n",
            &[
                "device.lambda_u=0.2".into(),
                "seed=7".into(),
                "retention.state=hrs".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.device.lambda_u, 0.2);
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.retention.state, ResistanceState::Hrs);
        assert!(parse_config("", &["nonsense".into()]).is_err());
        assert!(parse_config("", &["device.nope=1".into()]).is_err());
    }
}
