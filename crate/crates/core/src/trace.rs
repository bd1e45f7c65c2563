//! CSV serialization of per-step records.

use std::io::{BufRead, Write};

use crate::device::TraceRecord;
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "time_s,v_device_V,i_device_A,q,d_mean_m,v_sc_top_V,v_bfo_V,v_sc_bot_V,\
phi_eff_top_eV,phi_eff_bot_eV,n_eff_top,n_eff_bot";

fn fields(r: &TraceRecord) -> [f64; 12] {
    [
        r.time_s,
        r.v_device_v,
        r.i_device_a,
        r.q,
        r.d_mean_m,
        r.v_sc_top_v,
        r.v_bfo_v,
        r.v_sc_bot_v,
        r.phi_eff_top_ev,
        r.phi_eff_bot_ev,
        r.n_eff_top,
        r.n_eff_bot,
    ]
}

/// Writes the header and one LF-terminated row per record. Floats use the
/// shortest representation that parses back to the same value.
pub fn write_trace<W: Write>(mut out: W, records: &[TraceRecord]) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    let mut line = String::with_capacity(256);
    for r in records {
        line.clear();
        for (k, v) in fields(r).iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v:e}"));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<TraceRecord>> {
    let mut lines = input.lines();
    match lines.next().transpose()? {
        Some(h) if h == TRACE_HEADER => {}
        other => return Err(Error::State(format!("unexpected trace header: {other:?}"))),
    }
    let mut records = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let v = line
            .split(',')
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::State(format!("trace row {}: {e}", n + 1)))?;
        if v.len() != 12 {
            return Err(Error::State(format!(
                "trace row {}: expected 12 columns, found {}",
                n + 1,
                v.len()
            )));
        }
        records.push(TraceRecord {
            time_s: v[0],
            v_device_v: v[1],
            i_device_a: v[2],
            q: v[3],
            d_mean_m: v[4],
            v_sc_top_v: v[5],
            v_bfo_v: v[6],
            v_sc_bot_v: v[7],
            phi_eff_top_ev: v[8],
            phi_eff_bot_ev: v[9],
            n_eff_top: v[10],
            n_eff_bot: v[11],
        });
    }
    Ok(records)
}
