use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveformKind {
    #[default]
    Triangle,
    /// The triangle quantized to plateaus of `dwell_s`.
    Staircase,
    /// `v_max_v` held for `dwell_s` per cycle.
    Constant,
    /// One read at `v_max_v` every `dwell_s`; the samples are read voltages.
    RetentionRead,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Waveform {
    pub kind: WaveformKind,
    pub v_max_v: f64,
    pub rate_v_per_s: f64,
    pub dwell_s: f64,
    pub n_cycles: usize,
    /// Overrides the rate-derived cycle duration of triangle and staircase
    /// waveforms when set.
    pub cycle_duration_s: Option<f64>,
}

impl Default for Waveform {
    fn default() -> Self {
        Self {
            kind: WaveformKind::Triangle,
            v_max_v: 8.5,
            rate_v_per_s: 3.6,
            dwell_s: 0.1,
            n_cycles: 1,
            cycle_duration_s: None,
        }
    }
}

/// Voltages applied at successive steps of length `dt_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformSamples {
    pub dt_s: f64,
    pub volts: Vec<f64>,
    /// Samples per cycle.
    pub cycle_len: usize,
}

impl WaveformSamples {
    pub fn len(&self) -> usize {
        self.volts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volts.is_empty()
    }

    pub fn n_cycles(&self) -> usize {
        self.volts.len() / self.cycle_len.max(1)
    }
}

/// Triangle value at `phase` in `[0, 1)` of a cycle 0 -> +v -> 0 -> -v -> 0.
pub fn triangle_value(v_max: f64, phase: f64) -> f64 {
    let p = 4.0 * phase;
    if p < 1.0 {
        v_max * p
    } else if p < 3.0 {
        v_max * (2.0 - p)
    } else {
        v_max * (p - 4.0)
    }
}

impl Waveform {
    pub fn triangle(v_max_v: f64, rate_v_per_s: f64, n_cycles: usize) -> Self {
        Self {
            kind: WaveformKind::Triangle,
            v_max_v,
            rate_v_per_s,
            n_cycles,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.v_max_v.is_finite() {
            return Err(Error::config("waveform.v_max_v", self.v_max_v, "must be finite"));
        }
        if self.v_max_v < 0.0 && self.kind != WaveformKind::Constant {
            return Err(Error::config("waveform.v_max_v", self.v_max_v, "must be >= 0"));
        }
        if !(self.rate_v_per_s > 0.0 && self.rate_v_per_s.is_finite()) {
            return Err(Error::config("waveform.rate_v_per_s", self.rate_v_per_s, "must be > 0"));
        }
        if !(self.dwell_s > 0.0 && self.dwell_s.is_finite()) {
            return Err(Error::config("waveform.dwell_s", self.dwell_s, "must be > 0"));
        }
        if self.n_cycles == 0 {
            return Err(Error::config("waveform.n_cycles", 0, "must be >= 1"));
        }
        if let Some(t) = self.cycle_duration_s {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::config("waveform.cycle_duration_s", t, "must be > 0"));
            }
        }
        Ok(())
    }

    /// Duration of one cycle, s.
    pub fn cycle_duration(&self) -> f64 {
        match self.kind {
            WaveformKind::Triangle | WaveformKind::Staircase => {
                self.cycle_duration_s.unwrap_or(4.0 * self.v_max_v / self.rate_v_per_s)
            }
            WaveformKind::Constant | WaveformKind::RetentionRead => self.dwell_s,
        }
    }

    /// Samples the waveform on steps close to `dt_s`. The step is adjusted
    /// so that each cycle holds a whole number of samples.
    pub fn samples(&self, dt_s: f64) -> Result<WaveformSamples> {
        self.validate()?;
        if !(dt_s > 0.0 && dt_s.is_finite()) {
            return Err(Error::config("dt_s", dt_s, "must be > 0"));
        }
        if self.kind == WaveformKind::RetentionRead {
            return Ok(WaveformSamples {
                dt_s: self.dwell_s,
                volts: vec![self.v_max_v; self.n_cycles],
                cycle_len: 1,
            });
        }
        let period = self.cycle_duration();
        let n_per = ((period / dt_s).round() as usize).max(1);
        let dt = if period > 0.0 { period / n_per as f64 } else { dt_s };
        let cycle: Vec<f64> = (0..n_per)
            .map(|k| {
                let t = k as f64 * dt;
                match self.kind {
                    WaveformKind::Triangle => triangle_value(self.v_max_v, k as f64 / n_per as f64),
                    WaveformKind::Staircase => {
                        let t0 = (t / self.dwell_s).floor() * self.dwell_s;
                        triangle_value(self.v_max_v, (t0 / period).min(1.0))
                    }
                    WaveformKind::Constant => self.v_max_v,
                    WaveformKind::RetentionRead => unreachable!(),
                }
            })
            .collect();
        let volts = cycle.iter().copied().cycle().take(n_per * self.n_cycles).collect();
        Ok(WaveformSamples {
            dt_s: dt,
            volts,
            cycle_len: n_per,
        })
    }
}

/// Samples of `n_cycles` triangle cycles between `+v_max` and `-v_max`.
pub fn triangle_sweep(v_max: f64, rate: f64, n_cycles: usize, dt_s: f64) -> Result<WaveformSamples> {
    Waveform::triangle(v_max, rate, n_cycles).samples(dt_s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sweep_duration() {
        let s = triangle_sweep(8.5, 3.6, 1, 1e-3).unwrap();
        let duration = s.dt_s * s.len() as f64;
        assert!((duration - 4.0 * 8.5 / 3.6).abs() < 1e-9);
        assert_eq!(s.len(), 9444);
        assert!((s.dt_s - 1e-3).abs() < 1e-6);
    }

    #[test]
    fn triangle_visits_extremes_in_order() {
        let s = triangle_sweep(2.0, 1.0, 1, 1e-3).unwrap();
        assert_eq!(s.len(), 8000);
        assert_eq!(s.volts[0], 0.0);
        assert_eq!(s.volts[2000], 2.0);
        assert_eq!(s.volts[4000], 0.0);
        assert_eq!(s.volts[6000], -2.0);
        let imax = s.volts.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let imin = s.volts.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(imax < imin);
        for w in s.volts.windows(2) {
            assert!((w[1] - w[0]).abs() <= 1e-3 + 1e-12);
        }
    }

    #[test]
    fn zero_amplitude_is_flat() {
        let s = triangle_sweep(0.0, 3.6, 3, 1e-3).unwrap();
        assert!(s.volts.iter().all(|&v| v == 0.0));
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn cycles_repeat_exactly() {
        let one = triangle_sweep(8.5, 3.6, 1, 1e-3).unwrap();
        let four = triangle_sweep(8.5, 3.6, 4, 1e-3).unwrap();
        assert_eq!(four.len(), 4 * one.len());
        assert_eq!(four.n_cycles(), 4);
        for c in four.volts.chunks(one.len()) {
            assert_eq!(c, one.volts.as_slice());
        }
    }

    #[test]
    fn duration_overrides_rate() {
        let w = Waveform {
            cycle_duration_s: Some(8.0),
            ..Waveform::default()
        };
        assert_eq!(w.samples(1e-3).unwrap().len(), 8000);
    }

    #[test]
    fn staircase_holds_plateaus() {
        let w = Waveform {
            kind: WaveformKind::Staircase,
            v_max_v: 1.0,
            rate_v_per_s: 1.0,
            dwell_s: 0.5,
            ..Waveform::default()
        };
        let s = w.samples(0.1).unwrap();
        assert_eq!(s.len(), 40);
        assert_eq!(&s.volts[0..5], &[0.0; 5]);
        assert_eq!(&s.volts[5..10], &[0.5; 5]);
        assert_eq!(s.volts[10], 1.0);
    }

    #[test]
    fn constant_and_read_kinds() {
        let c = Waveform {
            kind: WaveformKind::Constant,
            v_max_v: -1.5,
            dwell_s: 0.01,
            n_cycles: 2,
            ..Waveform::default()
        };
        let s = c.samples(1e-3).unwrap();
        assert_eq!(s.len(), 20);
        assert!(s.volts.iter().all(|&v| v == -1.5));

        let r = Waveform {
            kind: WaveformKind::RetentionRead,
            v_max_v: 2.0,
            dwell_s: 10.0,
            n_cycles: 3000,
            ..Waveform::default()
        };
        let s = r.samples(1e-3).unwrap();
        assert_eq!((s.len(), s.dt_s), (3000, 10.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(triangle_sweep(-1.0, 3.6, 1, 1e-3).is_err());
        assert!(triangle_sweep(1.0, 0.0, 1, 1e-3).is_err());
        assert!(triangle_sweep(1.0, 1.0, 0, 1e-3).is_err());
        assert!(triangle_sweep(1.0, 1.0, 1, 0.0).is_err());
    }
}
