//! Pump-current waveforms.
//!
//! Drives are piecewise constant on a fixed grid. Long pulse trains are made
//! of a handful of distinct levels, so samples are stored run-length encoded
//! and expanded lazily while integrating.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::hex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Run {
    pub current: f64,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveWaveform {
    dt: f64,
    runs: Vec<Run>,
    len: usize,
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("must be finite and > 0, got {dt}")));
    }
    Ok(())
}

fn check_current(i: f64) -> Result<()> {
    if !(i.is_finite() && i >= 0.0) {
        return Err(Error::param("current", format!("must be finite and >= 0, got {i}")));
    }
    Ok(())
}

impl DriveWaveform {
    pub fn new(dt: f64, samples: &[f64]) -> Result<Self> {
        let mut b = WaveformBuilder::new(dt)?;
        for &s in samples {
            b.push(s, 1)?;
        }
        b.build()
    }

    pub fn constant(dt: f64, current: f64, n: usize) -> Result<Self> {
        let mut b = WaveformBuilder::new(dt)?;
        b.push(current, n)?;
        b.build()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn duration(&self) -> f64 {
        self.len as f64 * self.dt
    }

    /// Canonical runs: adjacent runs always hold different currents.
    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn first(&self) -> f64 {
        self.runs[0].current
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.runs
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.current, r.len))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.iter().collect()
    }

    /// Current at sample `k`. Linear in the number of runs.
    pub fn sample(&self, k: usize) -> Option<f64> {
        let mut acc = 0;
        for r in &self.runs {
            acc += r.len;
            if k < acc {
                return Some(r.current);
            }
        }
        None
    }

    pub fn max_current(&self) -> f64 {
        self.runs.iter().map(|r| r.current).fold(f64::MIN, f64::max)
    }

    pub fn min_current(&self) -> f64 {
        self.runs.iter().map(|r| r.current).fold(f64::MAX, f64::min)
    }

    /// Sample indices where the current rises, with the level it rises to.
    pub fn rising_edges(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut pos = 0;
        for w in self.runs.windows(2) {
            pos += w[0].len;
            if w[1].current > w[0].current {
                out.push(pos);
            }
        }
        out
    }

    /// Replace every step between levels by a linear ramp lasting
    /// `edge_time`, taken from the start of the new level.
    pub fn with_edge_ramp(&self, edge_time: f64) -> Result<Self> {
        if !(edge_time.is_finite() && edge_time >= 0.0) {
            return Err(Error::param("edge_time", format!("must be >= 0, got {edge_time}")));
        }
        let m = (edge_time / self.dt).round() as usize;
        if m == 0 {
            return Ok(self.clone());
        }
        let mut b = WaveformBuilder::new(self.dt)?;
        let mut prev: Option<f64> = None;
        for r in &self.runs {
            let mut left = r.len;
            if let Some(a) = prev {
                let n = m.min(r.len);
                for j in 0..n {
                    let x = (j + 1) as f64 / (m + 1) as f64;
                    b.push(a + (r.current - a) * x, 1)?;
                }
                left -= n;
            }
            b.push(r.current, left)?;
            prev = Some(r.current);
        }
        b.build()
    }

    /// Hex SHA-256 over dt and the canonical runs. Two waveforms with the
    /// same samples always share a digest.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.dt.to_bits().to_le_bytes());
        for r in &self.runs {
            h.update(r.current.to_bits().to_le_bytes());
            h.update((r.len as u64).to_le_bytes());
        }
        hex(&h.finalize())
    }
}

#[derive(Debug, Clone)]
pub struct WaveformBuilder {
    dt: f64,
    runs: Vec<Run>,
    len: usize,
}

impl WaveformBuilder {
    pub fn new(dt: f64) -> Result<Self> {
        check_dt(dt)?;
        Ok(WaveformBuilder {
            dt,
            runs: Vec::new(),
            len: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, current: f64, n: usize) -> Result<&mut Self> {
        check_current(current)?;
        if n == 0 {
            return Ok(self);
        }
        self.len += n;
        match self.runs.last_mut() {
            Some(last) if last.current.to_bits() == current.to_bits() => last.len += n,
            _ => self.runs.push(Run { current, len: n }),
        }
        Ok(self)
    }

    pub fn extend(&mut self, other: &DriveWaveform) -> Result<&mut Self> {
        for r in other.runs() {
            self.push(r.current, r.len)?;
        }
        Ok(self)
    }

    pub fn build(self) -> Result<DriveWaveform> {
        if self.len == 0 {
            return Err(Error::param("samples", "waveform must be non-empty"));
        }
        Ok(DriveWaveform {
            dt: self.dt,
            runs: self.runs,
            len: self.len,
        })
    }
}
