//! Experiment execution and artifact emission.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use memkin_core::circuit::clamped_exponent_count;
use memkin_core::harness::{
    run_amplitude_series, run_c2c, run_d2d, run_iv_sweep, run_retention, run_temperature_series, switching_spread,
    CycleRun, SweepMetrics, TemperaturePoint, Waveform,
};
use memkin_core::trace::write_trace;
use memkin_core::{Device, TraceRecord};

use crate::config::{Experiment, RunConfig};

/// Everything a run produces, held in memory until it is written.
#[derive(Debug, Default)]
pub struct Artifacts {
    /// Trace files keyed by path relative to the output directory.
    pub traces: BTreeMap<PathBuf, Vec<TraceRecord>>,
    pub summary: Value,
}

#[derive(Serialize)]
struct CycleSummary<'a> {
    cycle: usize,
    rows: usize,
    #[serde(flatten)]
    metrics: &'a SweepMetrics,
}

fn cycle_summaries(run: &CycleRun) -> Vec<CycleSummary<'_>> {
    run.cycles
        .iter()
        .zip(&run.metrics)
        .enumerate()
        .map(|(k, (c, m))| CycleSummary {
            cycle: k,
            rows: c.len(),
            metrics: m,
        })
        .collect()
}

/// Runs the configured experiment. `config.seed` must be set.
pub fn execute(config: &RunConfig, experiment: Experiment) -> Result<Artifacts> {
    let seed = config.seed.context("seed must be resolved before running")?;
    let setup = config.setup();
    let read_v = config.sweep.read_v;
    let waveform = &config.sweep.waveform;
    let mut art = Artifacts::default();

    let metrics = match experiment {
        Experiment::Sweep => {
            let mut device = Device::new(&setup, seed)?;
            let samples = waveform.samples(setup.transport.dt_s)?;
            let records = run_iv_sweep(&mut device, &samples)?;
            let run = CycleRun::from_records(records, samples.cycle_len, read_v)?;
            art.traces.insert("trace.csv".into(), run.records().copied().collect());
            json!({ "cycles": cycle_summaries(&run) })
        }
        Experiment::C2c => {
            let mut device = Device::new(&setup, seed)?;
            let w = Waveform {
                n_cycles: config.c2c.n_cycles,
                ..waveform.clone()
            };
            let run = run_c2c(&mut device, &w, read_v)?;
            art.traces.insert("trace.csv".into(), run.records().copied().collect());
            for (k, c) in run.cycles.iter().enumerate() {
                art.traces.insert(format!("cycle_{k:02}/trace.csv").into(), c.clone());
            }
            let areas: Vec<f64> = run.metrics.iter().map(|m| m.loop_area_va).collect();
            json!({ "cycles": cycle_summaries(&run), "loop_area_variance": variance(&areas) })
        }
        Experiment::D2d => {
            let variants = config.d2d_variants()?;
            let runs = run_d2d(&setup, &variants, waveform, seed, read_v)?;
            let mut devices = Vec::new();
            for (k, (v, run)) in variants.iter().zip(&runs).enumerate() {
                art.traces.insert(
                    format!("device_{k:02}/trace.csv").into(),
                    run.records().copied().collect(),
                );
                devices.push(json!({ "device": k, "variant": v, "cycles": cycle_summaries(run) }));
            }
            let areas: Vec<f64> = runs.iter().map(|r| r.metrics[0].loop_area_va).collect();
            json!({ "devices": devices, "loop_area_variance": variance(&areas) })
        }
        Experiment::Temperature => {
            let w = Waveform {
                v_max_v: config.temperature.v_max_v,
                ..waveform.clone()
            };
            let points = run_temperature_series(&setup, &config.temperature.rows, &w, seed, read_v)?;
            let mut rows = Vec::new();
            for p in &points {
                let dir = format!("T{:.0}K", p.row.temperature_k);
                art.traces.insert(
                    format!("{dir}/with_friction/trace.csv").into(),
                    p.with_friction.records().copied().collect(),
                );
                art.traces.insert(
                    format!("{dir}/without_friction/trace.csv").into(),
                    p.without_friction.records().copied().collect(),
                );
                rows.push(json!({
                    "row": p.row,
                    "with_friction": p.with_friction.metrics,
                    "without_friction": p.without_friction.metrics,
                    "mean_drift_speed_with_friction_m_per_s": p.mean_speed_with_friction,
                    "mean_drift_speed_without_friction_m_per_s": p.mean_speed_without_friction,
                }));
            }
            let spread =
                |f: fn(&TemperaturePoint) -> Option<f64>| switching_spread(&points.iter().map(f).collect::<Vec<_>>());
            json!({
                "rows": rows,
                "switching_spread_with_friction_v": spread(|p| p.with_friction.metrics[0].switching_voltage_v),
                "switching_spread_without_friction_v": spread(|p| p.without_friction.metrics[0].switching_voltage_v),
            })
        }
        Experiment::Amplitude => {
            let runs = run_amplitude_series(&setup, &config.amplitude.amplitudes_v, waveform, seed, read_v)?;
            let mut out = Vec::new();
            for (v, run) in &runs {
                art.traces.insert(
                    format!("amplitude_{v}V/trace.csv").into(),
                    run.records().copied().collect(),
                );
                out.push(json!({ "v_max_v": v, "cycles": cycle_summaries(run) }));
            }
            json!({ "amplitudes": out })
        }
        Experiment::Retention => {
            let mut device = Device::new(&setup, seed)?;
            let run = run_retention(&mut device, config.retention.state, &config.retention.protocol)?;
            let first = run.reads.first().map(|r| r.i_device_a);
            let last = run.reads.last().map(|r| r.i_device_a);
            let d_last = run.reads.last().map(|r| r.d_mean_m);
            art.traces.insert("trace.csv".into(), run.reads);
            art.traces.insert("program/trace.csv".into(), run.program);
            json!({
                "state": config.retention.state,
                "first_read_current_a": first,
                "last_read_current_a": last,
                "final_d_mean_m": d_last,
            })
        }
    };

    art.summary = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": experiment.name(),
        "seed": seed,
        "metrics": metrics,
        "clamped_exponents": clamped_exponent_count(),
        "config": config,
    });
    Ok(art)
}

fn variance(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    Some(xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Keeps every `stride`-th row (and the last one) so at most `max_rows` remain.
fn decimate(records: &[TraceRecord], max_rows: usize) -> (Vec<TraceRecord>, bool) {
    if records.len() <= max_rows || max_rows < 2 {
        return (records.to_vec(), false);
    }
    let stride = records.len().div_ceil(max_rows - 1);
    let mut out: Vec<TraceRecord> = records.iter().step_by(stride).copied().collect();
    if !(records.len() - 1).is_multiple_of(stride) {
        out.push(*records.last().expect("non-empty"));
    }
    (out, true)
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
fn write_atomic(path: &Path, bytes: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = path.parent().context("artifact path has no parent")?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        bytes(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Writes every trace and `summary.json` below `out_dir`.
pub fn write_artifacts(art: &Artifacts, out_dir: &Path, max_rows: usize) -> Result<()> {
    let mut downsampled = Vec::new();
    for (rel, records) in &art.traces {
        let (rows, cut) = decimate(records, max_rows);
        if cut {
            downsampled.push(rel.display().to_string());
        }
        write_atomic(&out_dir.join(rel), |w| Ok(write_trace(w, &rows)?))?;
    }
    let mut summary = art.summary.clone();
    summary["downsampled"] = json!(downsampled);
    summary["traces"] = json!(art.traces.keys().map(|p| p.display().to_string()).collect::<Vec<_>>());
    write_atomic(&out_dir.join("summary.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &summary)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}
