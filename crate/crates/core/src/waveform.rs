//! Piecewise-linear bias programs: triangular sweeps and write/read pulse trains.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// What a segment of a bias program is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Ramp,
    Write,
    Read,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub v_start: f64,
    pub v_end: f64,
    pub kind: SegmentKind,
}

impl Segment {
    pub fn ramp(duration: f64, v_start: f64, v_end: f64) -> Self {
        Self { duration, v_start, v_end, kind: SegmentKind::Ramp }
    }

    pub fn hold(duration: f64, v: f64, kind: SegmentKind) -> Self {
        Self { duration, v_start: v, v_end: v, kind }
    }

    fn at(&self, frac: f64) -> f64 {
        self.v_start + (self.v_end - self.v_start) * frac
    }
}

/// One sampling point of a waveform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveformSample {
    pub t: f64,
    pub v: f64,
    /// Index of the segment that ends at or contains this sample.
    pub segment: usize,
    /// Whether this sample is the last one of its segment.
    pub segment_end: bool,
}

/// Voltage-vs-time program built from linear segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasWaveform {
    pub segments: Vec<Segment>,
    /// Maximum spacing between output samples (s).
    pub sample_interval: f64,
    /// Pulse trains may jump between segments; sweeps must be continuous.
    pub discontinuous: bool,
}

impl BiasWaveform {
    pub fn new(segments: Vec<Segment>, sample_interval: f64, discontinuous: bool) -> Result<Self> {
        let w = Self { segments, sample_interval, discontinuous };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_interval.is_finite() && self.sample_interval > 0.0) {
            return Err(param("sample_interval", "must be finite and > 0"));
        }
        if self.segments.is_empty() {
            return Err(param("segments", "waveform has no segments"));
        }
        for (k, s) in self.segments.iter().enumerate() {
            if !(s.duration.is_finite() && s.duration > 0.0) {
                return Err(param("segments", format!("segment {k} has non-positive duration")));
            }
            if !(s.v_start.is_finite() && s.v_end.is_finite()) {
                return Err(param("segments", format!("segment {k} has a non-finite voltage")));
            }
        }
        if !self.discontinuous {
            for (k, pair) in self.segments.windows(2).enumerate() {
                if pair[0].v_end != pair[1].v_start {
                    return Err(param(
                        "segments",
                        format!("segments {k} and {} are not contiguous", k + 1),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Voltage at time `t`; at a discontinuity the earlier segment wins.
    pub fn voltage_at(&self, t: f64) -> f64 {
        let mut start = 0.0;
        for s in &self.segments {
            if t <= start + s.duration {
                return s.at(((t - start) / s.duration).clamp(0.0, 1.0));
            }
            start += s.duration;
        }
        self.segments.last().map(|s| s.v_end).unwrap_or(0.0)
    }

    /// Samples every segment on its own uniform grid no coarser than
    /// `sample_interval`, so segment end points (sweep vertices, pulse edges) are
    /// always hit. The first sample is t = 0.
    pub fn samples(&self) -> Vec<WaveformSample> {
        let mut out = Vec::new();
        out.push(WaveformSample {
            t: 0.0,
            v: self.segments[0].v_start,
            segment: 0,
            segment_end: false,
        });
        let mut start = 0.0;
        for (k, s) in self.segments.iter().enumerate() {
            let steps = ((s.duration / self.sample_interval) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            for j in 1..=steps {
                let frac = j as f64 / steps as f64;
                let t = if j == steps { start + s.duration } else { start + s.duration * frac };
                out.push(WaveformSample { t, v: s.at(frac), segment: k, segment_end: j == steps });
            }
            start += s.duration;
        }
        out
    }
}

/// Triangular sweep v_hi -> v_lo -> v_hi repeated `cycles` times.
pub fn build_sweep(v_hi: f64, v_lo: f64, rate: f64, cycles: usize, sample_interval: f64) -> Result<BiasWaveform> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(param("rate", format!("sweep rate must be > 0, got {rate}")));
    }
    if !(sample_interval.is_finite() && sample_interval > 0.0) {
        return Err(param("sample_interval", "must be finite and > 0"));
    }
    if !(v_hi > v_lo) {
        return Err(param("v_hi", format!("must exceed v_lo ({v_hi} <= {v_lo})")));
    }
    if cycles == 0 {
        return Err(param("cycles", "at least one cycle is required"));
    }
    let half = (v_hi - v_lo) / rate;
    let mut segments = Vec::with_capacity(2 * cycles);
    for _ in 0..cycles {
        segments.push(Segment::ramp(half, v_hi, v_lo));
        segments.push(Segment::ramp(half, v_lo, v_hi));
    }
    BiasWaveform::new(segments, sample_interval, false)
}

/// Continuous sweep starting at `v_start` visiting each vertex in turn at a fixed rate.
pub fn build_vertex_sweep(vertices: &[f64], rate: f64, sample_interval: f64) -> Result<BiasWaveform> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(param("rate", format!("sweep rate must be > 0, got {rate}")));
    }
    let segments: Vec<Segment> = vertices
        .windows(2)
        .filter(|w| w[0] != w[1])
        .map(|w| Segment::ramp((w[1] - w[0]).abs() / rate, w[0], w[1]))
        .collect();
    BiasWaveform::new(segments, sample_interval, false)
}

/// Retention program: a SET write pulse followed by reads at `read_v` on
/// `read_schedule` (times after the end of the pulse), then the same for a RESET
/// pulse. Each read is the end point of a hold segment at `read_v`.
pub fn build_pulse_train(
    set_v: f64,
    reset_v: f64,
    read_v: f64,
    pulse_width: f64,
    read_schedule: &[f64],
) -> Result<BiasWaveform> {
    if !(pulse_width.is_finite() && pulse_width > 0.0) {
        return Err(param("pulse_width", "must be finite and > 0"));
    }
    if read_schedule.is_empty() {
        return Err(param("read_schedule", "read schedule is empty"));
    }
    if read_schedule[0] <= 0.0 || read_schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(param("read_schedule", "read times must be positive and strictly increasing"));
    }
    let mut segments = Vec::with_capacity(2 * (read_schedule.len() + 1));
    for write_v in [set_v, reset_v] {
        segments.push(Segment::hold(pulse_width, write_v, SegmentKind::Write));
        let mut prev = 0.0;
        for &t in read_schedule {
            segments.push(Segment::hold(t - prev, read_v, SegmentKind::Read));
            prev = t;
        }
    }
    let longest = segments.iter().map(|s| s.duration).fold(0.0, f64::max);
    BiasWaveform::new(segments, longest, true)
}

/// `count` logarithmically spaced times from `t_first` to `t_last` inclusive.
pub fn log_schedule(t_first: f64, t_last: f64, count: usize) -> Result<Vec<f64>> {
    if !(t_first > 0.0 && t_last > t_first) || count < 2 {
        return Err(param("schedule", "need 0 < t_first < t_last and at least two points"));
    }
    let (a, b) = (t_first.ln(), t_last.ln());
    Ok((0..count)
        .map(|k| {
            if k + 1 == count {
                t_last
            } else {
                (a + (b - a) * k as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}
