use serde::{Deserialize, Serialize};

use crate::device::TraceRecord;
use crate::error::{Error, Result};

/// Return/forward current ratio below which a sweep counts as not switched.
pub const MIN_SWITCH_RATIO: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepMetrics {
    /// Applied voltage of maximal dI/dV on the rising positive branch, V.
    pub switching_voltage_v: Option<f64>,
    /// LRS/HRS current ratio at the read voltage (return over forward branch).
    pub hrs_lrs_ratio: Option<f64>,
    pub switched: bool,
    /// Sum of the absolute areas enclosed by the positive and negative lobes, V A.
    pub loop_area_va: f64,
    pub q_final: f64,
    pub d_mean_final_m: f64,
    pub d_mean_max_m: f64,
    /// Mean position when the positive lobe ends, m.
    pub d_mean_end_of_set_m: Option<f64>,
}

/// Index ranges `[start, end]` (inclusive) of the rising and falling parts
/// of the positive lobe.
fn positive_lobe(trace: &[TraceRecord]) -> Option<(usize, usize, usize)> {
    let (peak, rec) = trace
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.v_device_v.total_cmp(&b.1.v_device_v))?;
    if rec.v_device_v <= 0.0 {
        return None;
    }
    let start = trace[..peak].iter().rposition(|r| r.v_device_v <= 0.0).unwrap_or(0);
    let end = trace[peak..]
        .iter()
        .position(|r| r.v_device_v <= 0.0)
        .map_or(trace.len() - 1, |k| peak + k);
    Some((start, peak, end))
}

/// Linear interpolation of the current at `v` along a monotone branch.
fn current_at(branch: &[TraceRecord], v: f64) -> Option<f64> {
    branch.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        let (lo, hi) = if a.v_device_v <= b.v_device_v { (a, b) } else { (b, a) };
        if lo.v_device_v <= v && v <= hi.v_device_v {
            let span = hi.v_device_v - lo.v_device_v;
            Some(if span == 0.0 {
                lo.i_device_a
            } else {
                lo.i_device_a + (hi.i_device_a - lo.i_device_a) * (v - lo.v_device_v) / span
            })
        } else {
            None
        }
    })
}

/// Voltage at the largest secant slope dI/dV between consecutive distinct
/// voltages of `branch`.
pub fn max_slope_voltage(branch: &[TraceRecord]) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for w in branch.windows(2) {
        let dv = w[1].v_device_v - w[0].v_device_v;
        if dv <= 0.0 {
            continue;
        }
        let slope = (w[1].i_device_a - w[0].i_device_a) / dv;
        if best.is_none_or(|(s, _)| slope > s) {
            best = Some((slope, 0.5 * (w[0].v_device_v + w[1].v_device_v)));
        }
    }
    best.map(|(_, v)| v)
}

/// Trapezoidal `I dV` around the polygon through the samples, closed back
/// to the first one.
fn path_integral(trace: &[TraceRecord]) -> f64 {
    let seg = |a: &TraceRecord, b: &TraceRecord| 0.5 * (a.i_device_a + b.i_device_a) * (b.v_device_v - a.v_device_v);
    match (trace.first(), trace.last()) {
        (Some(first), Some(last)) => trace.windows(2).map(|w| seg(&w[0], &w[1])).sum::<f64>() + seg(last, first),
        _ => 0.0,
    }
}

/// Sum of absolute enclosed areas of the positive and negative lobes.
pub fn loop_area(trace: &[TraceRecord]) -> f64 {
    let mut area = 0.0;
    let mut start = 0;
    for k in 1..=trace.len() {
        let boundary = k == trace.len() || (trace[k].v_device_v >= 0.0) != (trace[start].v_device_v >= 0.0);
        if boundary {
            // include the crossing sample so the lobe closes
            let end = k.min(trace.len() - 1);
            area += path_integral(&trace[start..=end]).abs();
            start = k;
        }
    }
    area
}

/// Metrics of one sweep cycle.
pub fn sweep_metrics(trace: &[TraceRecord], read_v: f64) -> Result<SweepMetrics> {
    let last = trace.last().ok_or_else(|| Error::State("empty trace".into()))?;
    let lobe = positive_lobe(trace);
    let switching_voltage_v = lobe.and_then(|(s, p, _)| max_slope_voltage(&trace[s..=p]));
    let hrs_lrs_ratio = lobe.and_then(|(s, p, e)| {
        let forward = current_at(&trace[s..=p], read_v)?;
        let back = current_at(&trace[p..=e], read_v)?;
        (forward > 0.0).then(|| back / forward)
    });
    Ok(SweepMetrics {
        switching_voltage_v,
        hrs_lrs_ratio,
        switched: hrs_lrs_ratio.is_some_and(|r| r >= MIN_SWITCH_RATIO),
        loop_area_va: loop_area(trace),
        q_final: last.q,
        d_mean_final_m: last.d_mean_m,
        d_mean_max_m: trace.iter().map(|r| r.d_mean_m).fold(f64::NEG_INFINITY, f64::max),
        d_mean_end_of_set_m: lobe.map(|(_, _, e)| trace[e].d_mean_m),
    })
}
