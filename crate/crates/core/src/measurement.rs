//! Observables: pulse amplitudes, delay-line demodulation, constellations,
//! fringe visibility, turn-on jitter and phase uniformity.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::drive::ClockConfig;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::injection::wrap_phase;

/// `sqrt(S) exp(i phi)` for every sample.
pub fn complex_field(traj: &Trajectory) -> Vec<Complex64> {
    traj.photon_density
        .iter()
        .zip(&traj.phase)
        .map(|(&s, &phi)| Complex64::from_polar(s.max(0.0).sqrt(), phi))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseAmplitude {
    pub pulse_index: usize,
    pub symbol_index: usize,
    /// Position within the symbol, 0 = early.
    pub slot_index: usize,
    pub amplitude: Complex64,
}

/// Averages the field over the detection window of each pulse slot. Feed
/// samples in order; only complete windows produce amplitudes.
#[derive(Debug, Clone)]
pub struct PulseAccumulator {
    period: usize,
    lo: usize,
    hi: usize,
    acc: Complex64,
    amplitudes: Vec<Complex64>,
}

impl PulseAccumulator {
    pub fn new(clock: &ClockConfig) -> Result<Self> {
        clock.validate()?;
        let (lo, hi) = clock.pulse_window(0);
        Ok(PulseAccumulator {
            period: clock.samples_per_pulse(),
            lo,
            hi,
            acc: Complex64::new(0.0, 0.0),
            amplitudes: Vec::new(),
        })
    }

    #[inline]
    pub fn push(&mut self, k: usize, photon_density: f64, phase: f64) {
        let o = k % self.period;
        if o >= self.lo && o < self.hi {
            self.acc += Complex64::from_polar(photon_density.max(0.0).sqrt(), phase);
            if o + 1 == self.hi {
                self.amplitudes.push(self.acc / (self.hi - self.lo) as f64);
                self.acc = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }
}

/// Windowed mean field of each pulse slot of a sampled field.
pub fn pulse_amplitudes(field: &[Complex64], clock: &ClockConfig) -> Result<Vec<PulseAmplitude>> {
    clock.validate()?;
    let spp = clock.samples_per_pulse();
    let p = clock.pulses_per_symbol();
    let n = field.len() / spp;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let (lo, hi) = clock.pulse_window(j);
        let sum: Complex64 = field[lo..hi].iter().sum();
        out.push(PulseAmplitude {
            pulse_index: j,
            symbol_index: j / p,
            slot_index: j % p,
            amplitude: sum / (hi - lo) as f64,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqPoint {
    pub symbol_index: usize,
    pub i: f64,
    pub q: f64,
}

impl IqPoint {
    pub fn phase(&self) -> f64 {
        self.q.atan2(self.i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demodulated {
    pub points: Vec<IqPoint>,
    /// Indices of pairs where neither pulse is above the empty threshold.
    pub no_clicks: Vec<usize>,
    /// Indices of pairs with exactly one empty pulse.
    pub unpaired: Vec<usize>,
    /// Magnitude below which a pulse counts as empty.
    pub empty_threshold: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One percent of the median magnitude of occupied pulses. The median is
/// refined until the set of occupied pulses stops changing.
pub fn empty_threshold(amps: &[Complex64]) -> f64 {
    let mags: Vec<f64> = amps.iter().map(|a| a.norm()).collect();
    let mut thr = 0.0;
    for _ in 0..64 {
        let mut occ: Vec<f64> = mags.iter().copied().filter(|&m| m > thr).collect();
        if occ.is_empty() {
            return thr;
        }
        let next = 0.01 * median(&mut occ);
        if next == thr {
            break;
        }
        thr = next;
    }
    thr
}

/// Normalised interference of each listed pair `(earlier, later)`. The
/// reported index is the position in `pairs`.
pub fn demodulate_pairs(amps: &[Complex64], pairs: &[(usize, usize)]) -> Result<Demodulated> {
    if amps.len() < 2 {
        return Err(Error::InsufficientData("demodulation needs two pulses".into()));
    }
    let thr = empty_threshold(amps);
    let mut out = Demodulated {
        points: Vec::with_capacity(pairs.len()),
        no_clicks: Vec::new(),
        unpaired: Vec::new(),
        empty_threshold: thr,
    };
    for (idx, &(a, b)) in pairs.iter().enumerate() {
        let (x, y) = (amps[a], amps[b]);
        match (x.norm() > thr, y.norm() > thr) {
            (true, true) => {
                let z = y * x.conj() / (x.norm() * y.norm());
                out.points.push(IqPoint {
                    symbol_index: idx,
                    i: z.re,
                    q: z.im,
                });
            }
            (false, false) => out.no_clicks.push(idx),
            _ => out.unpaired.push(idx),
        }
    }
    Ok(out)
}

/// Delay-line demodulation of consecutive pulses `k - delay` and `k`.
pub fn demodulate(amps: &[Complex64], delay: usize) -> Result<Demodulated> {
    if delay == 0 || amps.len() < delay + 1 {
        return Err(Error::InsufficientData(format!(
            "need at least {} amplitudes for delay {delay}",
            delay + 1
        )));
    }
    let pairs: Vec<(usize, usize)> = (delay..amps.len()).map(|k| (k - delay, k)).collect();
    let mut d = demodulate_pairs(amps, &pairs)?;
    for p in &mut d.points {
        p.symbol_index += delay;
    }
    for v in d.no_clicks.iter_mut().chain(d.unpaired.iter_mut()) {
        *v += delay;
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub target: f64,
    pub count: usize,
    /// Circular mean [rad]; `None` for an empty cluster.
    pub mean_angle: Option<f64>,
    /// Circular standard deviation `sqrt(-2 ln R)` [rad].
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationReport {
    pub clusters: Vec<ClusterStats>,
    /// Target index assigned to each point.
    pub assignments: Vec<usize>,
    pub symbol_errors: Option<usize>,
}

/// Circular mean and standard deviation of a set of angles.
pub fn circular_stats(angles: &[f64]) -> Option<(f64, f64)> {
    if angles.is_empty() {
        return None;
    }
    let (s, c) = angles
        .iter()
        .fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    let n = angles.len() as f64;
    let r = ((s / n).powi(2) + (c / n).powi(2)).sqrt().min(1.0);
    Some((s.atan2(c), (-2.0 * r.ln()).max(0.0).sqrt()))
}

fn angular_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// Assigns each point to the nearest target angle (ties to the lower index)
/// after rotating the points by `-reference`, and summarises each cluster.
/// With `intended` target indices, mismatched assignments are counted.
pub fn constellation(
    points: &[IqPoint],
    targets: &[f64],
    intended: Option<&[usize]>,
    reference: f64,
) -> Result<ConstellationReport> {
    if targets.is_empty() {
        return Err(Error::InsufficientData("no constellation targets".into()));
    }
    for i in 0..targets.len() {
        for j in 0..i {
            if angular_distance(targets[i], targets[j]) < 1e-12 {
                return Err(Error::Config(format!("targets {j} and {i} coincide modulo 2 pi")));
            }
        }
    }
    if let Some(int) = intended {
        if int.len() != points.len() {
            return Err(Error::Alignment(format!(
                "{} intended symbols for {} points",
                int.len(),
                points.len()
            )));
        }
    }
    let angles: Vec<f64> = points.iter().map(|p| p.phase() - reference).collect();
    let assignments: Vec<usize> = angles
        .iter()
        .map(|&a| {
            let mut best = 0;
            let mut d = f64::INFINITY;
            for (j, &t) in targets.iter().enumerate() {
                let dj = angular_distance(a, t);
                if dj < d {
                    d = dj;
                    best = j;
                }
            }
            best
        })
        .collect();
    let clusters = targets
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let members: Vec<f64> = angles
                .iter()
                .zip(&assignments)
                .filter(|(_, &a)| a == j)
                .map(|(&x, _)| x)
                .collect();
            let st = circular_stats(&members);
            ClusterStats {
                target: t,
                count: members.len(),
                mean_angle: st.map(|s| s.0),
                std: st.map(|s| s.1),
            }
        })
        .collect();
    let symbol_errors = intended.map(|int| {
        int.iter()
            .zip(&assignments)
            .filter(|(a, b)| a != b)
            .count()
    });
    Ok(ConstellationReport {
        clusters,
        assignments,
        symbol_errors,
    })
}

/// `(Imax - Imin) / (Imax + Imin)`.
pub fn visibility(imax: f64, imin: f64) -> Result<f64> {
    if !(imax.is_finite() && imin.is_finite() && imin >= 0.0 && imax >= imin) {
        return Err(Error::param(
            "intensities",
            format!("need Imax >= Imin >= 0, got Imax={imax}, Imin={imin}"),
        ));
    }
    if imax == 0.0 {
        return Err(Error::UndefinedVisibility);
    }
    Ok((imax - imin) / (imax + imin))
}

/// Extremes of the mean interference intensity `|a + e^{i theta} b|^2 / 4`
/// over the interferometer phase `theta`, for the given pulse pairs.
pub fn fringe_extrema(amps: &[Complex64], pairs: &[(usize, usize)]) -> (f64, f64) {
    let mut power = 0.0;
    let mut cross = Complex64::new(0.0, 0.0);
    for &(a, b) in pairs {
        power += amps[a].norm_sqr() + amps[b].norm_sqr();
        cross += amps[b] * amps[a].conj();
    }
    let n = pairs.len().max(1) as f64;
    let (p, c) = (power / n, 2.0 * cross.norm() / n);
    ((p + c) / 4.0, ((p - c) / 4.0).max(0.0))
}

/// Interference visibility of a pulse train scanned over the
/// interferometer phase.
pub fn fringe_visibility(amps: &[Complex64], pairs: &[(usize, usize)]) -> Result<f64> {
    let (imax, imin) = fringe_extrema(amps, pairs);
    visibility(imax, imin)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JitterReport {
    /// Turn-on delay of each measured pulse [s].
    pub delays: Vec<f64>,
    /// Pulses that never crossed the threshold from below.
    pub excluded: usize,
    pub mean: f64,
    pub std: f64,
}

impl JitterReport {
    fn from_delays(delays: Vec<f64>, excluded: usize) -> Self {
        let n = delays.len().max(1) as f64;
        let mean = delays.iter().sum::<f64>() / n;
        let var = if delays.len() > 1 {
            delays.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (delays.len() - 1) as f64
        } else {
            0.0
        };
        JitterReport {
            delays,
            excluded,
            mean,
            std: var.sqrt(),
        }
    }
}

/// Delay in samples from `0` to the first upward crossing of `fraction` of
/// the segment peak, linearly interpolated.
fn crossing(segment: &[f64], fraction: f64) -> Option<f64> {
    let peak = segment.iter().copied().fold(f64::MIN, f64::max);
    let th = fraction * peak;
    if peak.is_nan() || peak <= 0.0 || segment[0] >= th {
        return None;
    }
    for k in 1..segment.len() {
        if segment[k] >= th {
            let (a, b) = (segment[k - 1], segment[k]);
            return Some((k - 1) as f64 + (th - a) / (b - a));
        }
    }
    None
}

/// Turn-on delays of the pulses following each electrical rising edge. Each
/// pulse is searched up to the next edge (or the end of the record).
pub fn jitter_stats(power: &[f64], dt: f64, rising_edges: &[usize], fraction: f64) -> Result<JitterReport> {
    if rising_edges.len() < 2 {
        return Err(Error::InsufficientData("jitter needs at least two pulses".into()));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::param("power_threshold_fraction", "must lie in (0, 1)"));
    }
    let mut delays = Vec::with_capacity(rising_edges.len());
    let mut excluded = 0;
    for (j, &e) in rising_edges.iter().enumerate() {
        let end = rising_edges.get(j + 1).copied().unwrap_or(power.len()).min(power.len());
        if e >= end {
            excluded += 1;
            continue;
        }
        match crossing(&power[e..end], fraction) {
            Some(d) => delays.push(d * dt),
            None => excluded += 1,
        }
    }
    Ok(JitterReport::from_delays(delays, excluded))
}

/// Streaming form of [`jitter_stats`] for a periodic drive: the record is
/// cut into fixed segments starting at `edge_offset` within each period.
#[derive(Debug, Clone)]
pub struct JitterAccumulator {
    period: usize,
    edge_offset: usize,
    fraction: f64,
    dt: f64,
    buf: Vec<f64>,
    delays: Vec<f64>,
    excluded: usize,
}

impl JitterAccumulator {
    pub fn new(period: usize, edge_offset: usize, fraction: f64, dt: f64) -> Self {
        JitterAccumulator {
            period,
            edge_offset: edge_offset % period,
            fraction,
            dt,
            buf: Vec::with_capacity(period),
            delays: Vec::new(),
            excluded: 0,
        }
    }

    #[inline]
    pub fn push(&mut self, k: usize, power: f64) {
        if k < self.edge_offset {
            return;
        }
        if (k - self.edge_offset).is_multiple_of(self.period) && !self.buf.is_empty() {
            self.flush();
        }
        self.buf.push(power);
    }

    fn flush(&mut self) {
        match crossing(&self.buf, self.fraction) {
            Some(d) => self.delays.push(d * self.dt),
            None => self.excluded += 1,
        }
        self.buf.clear();
    }

    pub fn finish(mut self) -> JitterReport {
        if self.buf.len() == self.period {
            self.flush();
        }
        JitterReport::from_delays(self.delays, self.excluded)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformityTest {
    pub chi2: f64,
    pub critical: f64,
    pub bins: usize,
    pub samples: usize,
    /// True when uniformity is not rejected.
    pub pass: bool,
}

/// Chi-square goodness of fit of phases against the uniform law on
/// (-pi, pi].
pub fn phase_uniformity_test(phases: &[f64], n_bins: usize, significance: f64) -> Result<UniformityTest> {
    if n_bins < 2 {
        return Err(Error::param("n_bins", "need at least two bins"));
    }
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::param("significance", "must lie in (0, 1)"));
    }
    if phases.len() < 10 * n_bins {
        return Err(Error::InsufficientData(format!(
            "{} phases, need at least {}",
            phases.len(),
            10 * n_bins
        )));
    }
    let mut counts = vec![0usize; n_bins];
    for &p in phases {
        let w = wrap_phase(p);
        let b = (((w + PI) / (2.0 * PI)) * n_bins as f64).floor() as isize;
        counts[b.clamp(0, n_bins as isize - 1) as usize] += 1;
    }
    let e = phases.len() as f64 / n_bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let dist = ChiSquared::new((n_bins - 1) as f64)
        .map_err(|e| Error::param("n_bins", e.to_string()))?;
    let critical = dist.inverse_cdf(1.0 - significance);
    Ok(UniformityTest {
        chi2,
        critical,
        bins: n_bins,
        samples: phases.len(),
        pass: chi2 <= critical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::LaserParams;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn field_of_dark_trajectory_is_zero() {
        let p = LaserParams::typical_dfb();
        let mut t = Trajectory::with_capacity(p, 1e-13, 0, 3);
        for k in 0..3 {
            t.push(0.0, &crate::SimState::new(1e24, 0.0, k as f64));
        }
        assert!(complex_field(&t).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn field_golden_values() {
        let p = LaserParams::typical_dfb();
        let mut t = Trajectory::with_capacity(p, 1e-13, 0, 2);
        t.push(0.0, &crate::SimState::new(1e24, 4.0e20, 0.0));
        t.push(0.0, &crate::SimState::new(1e24, 9.0e20, PI / 2.0));
        let f = complex_field(&t);
        assert!((f[0] - c(2e10, 0.0)).norm() < 1e-3);
        assert!((f[1] - c(0.0, 3e10)).norm() < 1e-3);
    }

    #[test]
    fn plateau_pulse_gives_plateau_phasor() {
        let clock = ClockConfig {
            symbol_rate: 1e9,
            secondary_pulse_rate: 1e9,
            dt: 1e-10,
            pulse_center: 0.5,
            window_fraction: 0.5,
        };
        // 10 samples per slot, window samples 3..8
        let z = Complex64::from_polar(2.0, 0.7);
        let mut field = vec![c(0.0, 0.0); 20];
        for v in field.iter_mut().take(8).skip(3) {
            *v = z;
        }
        let a = pulse_amplitudes(&field, &clock).unwrap();
        assert_eq!(a.len(), 2);
        assert!((a[0].amplitude - z).norm() < 1e-15);
        assert_eq!(a[1].amplitude.norm(), 0.0);
        let mut acc = PulseAccumulator::new(&clock).unwrap();
        for (k, f) in field.iter().enumerate() {
            acc.push(k, f.norm_sqr(), f.arg());
        }
        assert!((acc.amplitudes()[0] - z).norm() < 1e-12);
    }

    #[test]
    fn demodulation_basics() {
        let a = vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 2.0)];
        let d = demodulate(&a, 1).unwrap();
        assert_eq!(d.points.len(), 2);
        assert!((d.points[0].i - 1.0).abs() < 1e-15 && d.points[0].q.abs() < 1e-15);
        assert!((d.points[1].phase() - PI / 2.0).abs() < 1e-15);
        assert!(demodulate(&a[..1], 1).is_err());
    }

    #[test]
    fn empty_pulses_are_flagged() {
        let a = vec![c(1.0, 0.0), c(0.001, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.1, 0.0)];
        let d = demodulate(&a, 1).unwrap();
        assert_eq!(d.unpaired, vec![1, 4]);
        assert_eq!(d.no_clicks, vec![2, 3]);
        assert!(d.points.is_empty());
    }

    #[test]
    fn constellation_exact_points() {
        let targets = [0.0, PI / 2.0, PI, 1.5 * PI];
        let pts: Vec<IqPoint> = targets
            .iter()
            .enumerate()
            .map(|(k, &t)| IqPoint {
                symbol_index: k,
                i: t.cos(),
                q: t.sin(),
            })
            .collect();
        let r = constellation(&pts, &targets, Some(&[0, 1, 2, 3]), 0.0).unwrap();
        assert_eq!(r.symbol_errors, Some(0));
        for cl in &r.clusters {
            assert_eq!(cl.count, 1);
            assert!(cl.std.unwrap() < 1e-7);
        }
        // halfway between 0 and pi/2 goes to the lower index
        let mid = IqPoint {
            symbol_index: 0,
            i: (PI / 4.0).cos(),
            q: (PI / 4.0).sin(),
        };
        let r = constellation(&[mid], &[0.0, PI / 2.0], None, 0.0).unwrap();
        assert_eq!(r.assignments, vec![0]);
        assert!(constellation(&pts, &[0.0, 2.0 * PI], None, 0.0).is_err());
    }

    #[test]
    fn visibility_cases() {
        assert_eq!(visibility(2.0, 0.0).unwrap(), 1.0);
        assert_eq!(visibility(2.0, 2.0).unwrap(), 0.0);
        assert!(matches!(visibility(0.0, 0.0), Err(Error::UndefinedVisibility)));
        assert!(visibility(1.0, 2.0).is_err());
    }

    #[test]
    fn coherent_train_has_full_fringe() {
        let a: Vec<Complex64> = (0..10).map(|k| Complex64::from_polar(1.0, 0.3 * k as f64)).collect();
        let pairs: Vec<(usize, usize)> = (1..10).map(|k| (k - 1, k)).collect();
        assert!((fringe_visibility(&a, &pairs).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jitter_of_identical_pulses_is_zero() {
        let mut power = Vec::new();
        for _ in 0..4 {
            for k in 0..100 {
                power.push(if k < 20 { 0.0 } else { (k - 20) as f64 });
            }
        }
        let edges = [0, 100, 200, 300];
        let r = jitter_stats(&power, 1e-12, &edges, 0.5).unwrap();
        assert_eq!(r.delays.len(), 4);
        assert_eq!(r.std, 0.0);
        // threshold 39.5 is crossed between samples 59 and 60
        assert!((r.mean - 59.5e-12).abs() < 1e-24);
        let mut acc = JitterAccumulator::new(100, 0, 0.5, 1e-12);
        for (k, &p) in power.iter().enumerate() {
            acc.push(k, p);
        }
        let s = acc.finish();
        assert_eq!(s.delays, r.delays);
    }

    #[test]
    fn uniformity_calibration() {
        let mut rng = crate::rng::rng_from_seed(11);
        let u: Vec<f64> = (0..2000).map(|_| rng.random_range(-PI..PI)).collect();
        assert!(phase_uniformity_test(&u, 16, 0.01).unwrap().pass);
        let same = vec![0.3; 2000];
        let t = phase_uniformity_test(&same, 16, 0.01).unwrap();
        assert!(!t.pass && t.chi2 > 100.0 * t.critical);
        // chi-square 0.99 quantile for 15 degrees of freedom
        assert!((t.critical - 30.577_914_166_892_5).abs() < 1e-6);
        assert!(phase_uniformity_test(&u[..100], 16, 0.01).is_err());
    }
}
