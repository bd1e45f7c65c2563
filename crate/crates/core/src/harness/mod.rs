//! Experiment protocols and the metrics extracted from their traces.

pub mod experiments;
pub mod metrics;
pub mod sampling;
pub mod waveform;

pub use experiments::*;
pub use metrics::{loop_area, sweep_metrics, SweepMetrics};
pub use sampling::{sample_truncated_gaussian, VariabilitySpec};
pub use waveform::{triangle_sweep, Waveform, WaveformKind, WaveformSamples};
