//! Pump-current patterns for gain switching, phase seeding and the QKD
//! protocols.
//!
//! Time is organised in secondary pulse slots. A slot starts with the
//! electrical on-time of the secondary and its optical pulse is expected
//! around `pulse_center` of the slot. Symbols group `pulses_per_symbol`
//! slots. With two slots per symbol the differential phase of symbol `k`
//! sits between pulses `2k` and `2k + 1`; with one slot per symbol it sits
//! between pulses `k` and `k + 1`, so such trains carry one extra slot.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{LaserParams, ELECTRON_CHARGE};
use crate::rng::rng_from_seed;
use crate::waveform::{DriveWaveform, WaveformBuilder};

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClockConfig {
    /// Symbol rate [Hz].
    pub symbol_rate: f64,
    /// Secondary gain-switching rate [Hz], an integer multiple of the
    /// symbol rate.
    pub secondary_pulse_rate: f64,
    /// Integration and drive sample interval [s].
    pub dt: f64,
    /// Nominal optical pulse position as a fraction of its slot.
    #[serde(default = "half")]
    pub pulse_center: f64,
    /// Detection window width as a fraction of the slot.
    #[serde(default = "half")]
    pub window_fraction: f64,
}

impl Default for ClockConfig {
    fn default() -> Self {
        ClockConfig {
            symbol_rate: 1e9,
            secondary_pulse_rate: 2e9,
            dt: 1e-13,
            pulse_center: 0.5,
            window_fraction: 0.5,
        }
    }
}

fn near_integer(x: f64) -> bool {
    (x - x.round()).abs() <= 1e-6 * x.abs().max(1.0)
}

impl ClockConfig {
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !pos(self.symbol_rate) {
            v.push(("symbol_rate", format!("must be > 0, got {}", self.symbol_rate)));
        }
        if !pos(self.secondary_pulse_rate) {
            v.push((
                "secondary_pulse_rate",
                format!("must be > 0, got {}", self.secondary_pulse_rate),
            ));
        }
        if !pos(self.dt) {
            v.push(("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !v.is_empty() {
            return v;
        }
        let per_pulse = 1.0 / (self.secondary_pulse_rate * self.dt);
        let per_symbol = 1.0 / (self.symbol_rate * self.dt);
        if !near_integer(per_pulse) || per_pulse.round() < 2.0 {
            v.push(("dt", format!("pulse period is {per_pulse} samples, not a whole number")));
        }
        if !near_integer(per_symbol) {
            v.push(("dt", format!("symbol period is {per_symbol} samples, not a whole number")));
        }
        let ratio = self.secondary_pulse_rate / self.symbol_rate;
        if !near_integer(ratio) || ratio.round() < 1.0 {
            v.push((
                "secondary_pulse_rate",
                format!("must be an integer multiple of symbol_rate, ratio is {ratio}"),
            ));
        }
        if !(self.pulse_center > 0.0 && self.pulse_center < 1.0) {
            v.push(("pulse_center", format!("must lie in (0, 1), got {}", self.pulse_center)));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            v.push((
                "window_fraction",
                format!("must lie in (0, 1], got {}", self.window_fraction),
            ));
        } else if self.pulse_center - 0.5 * self.window_fraction < -1e-12
            || self.pulse_center + 0.5 * self.window_fraction > 1.0 + 1e-12
        {
            v.push((
                "window_fraction",
                "detection window spills into the neighbouring slot".to_string(),
            ));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some((k, m)) => Err(Error::Config(format!("{k}: {m}"))),
        }
    }

    pub fn samples_per_pulse(&self) -> usize {
        (1.0 / (self.secondary_pulse_rate * self.dt)).round() as usize
    }

    pub fn samples_per_symbol(&self) -> usize {
        (1.0 / (self.symbol_rate * self.dt)).round() as usize
    }

    pub fn pulses_per_symbol(&self) -> usize {
        (self.secondary_pulse_rate / self.symbol_rate).round() as usize
    }

    pub fn pulse_period(&self) -> f64 {
        self.samples_per_pulse() as f64 * self.dt
    }

    pub fn symbol_period(&self) -> f64 {
        self.samples_per_symbol() as f64 * self.dt
    }

    /// Slots needed to carry `n_symbols` differential phases.
    pub fn pulses_for_symbols(&self, n_symbols: usize) -> usize {
        let p = self.pulses_per_symbol();
        n_symbols * p + usize::from(p == 1)
    }

    /// The two pulses whose phase difference encodes symbol `k`.
    pub fn symbol_pair(&self, k: usize) -> (usize, usize) {
        let p = self.pulses_per_symbol();
        if p == 1 {
            (k, k + 1)
        } else {
            (k * p, k * p + 1)
        }
    }

    /// Nominal optical center of pulse `j` in samples.
    pub fn pulse_center_sample(&self, j: usize) -> f64 {
        let spp = self.samples_per_pulse() as f64;
        j as f64 * spp + self.pulse_center * spp
    }

    /// Detection window `[start, end)` of pulse `j` in samples.
    pub fn pulse_window(&self, j: usize) -> (usize, usize) {
        let spp = self.samples_per_pulse();
        let w = ((self.window_fraction * spp as f64).round() as usize).max(1);
        let lo = ((self.pulse_center * spp as f64) - 0.5 * w as f64).round().max(0.0) as usize;
        let lo = lo.min(spp - w);
        (j * spp + lo, j * spp + lo + w)
    }
}

fn default_perturbation_duty() -> f64 {
    0.2
}

fn default_pulse_duty() -> f64 {
    0.8
}

/// Primary-laser modulation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationSpec {
    /// CW level, or the off level of a gain-switched primary [A].
    pub base_current: f64,
    /// On level of a gain-switched primary [A].
    #[serde(default)]
    pub high_current: f64,
    /// Explicit perturbation amplitudes for the levels `2 pi k / M` of an
    /// `M`-ary alphabet [A]. Empty means amplitudes follow from the carrier
    /// phase response.
    #[serde(default)]
    pub perturbation_currents: Vec<f64>,
    /// Perturbation length as a fraction of the symbol period.
    #[serde(default = "default_perturbation_duty")]
    pub perturbation_duty: f64,
    /// On-time of a gain-switched primary as a fraction of the symbol.
    #[serde(default = "default_pulse_duty")]
    pub pulse_duty: f64,
    /// Linear rise/fall time of every current step [s].
    #[serde(default)]
    pub edge_time: f64,
}

impl ModulationSpec {
    pub fn cw(base_current: f64) -> Self {
        ModulationSpec {
            base_current,
            high_current: 0.0,
            perturbation_currents: Vec::new(),
            perturbation_duty: default_perturbation_duty(),
            pulse_duty: default_pulse_duty(),
            edge_time: 0.0,
        }
    }

    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !nonneg(self.base_current) {
            v.push(("base_current", format!("must be >= 0, got {}", self.base_current)));
        }
        if !nonneg(self.high_current) {
            v.push(("high_current", format!("must be >= 0, got {}", self.high_current)));
        }
        if self.perturbation_currents.iter().any(|x| !nonneg(*x)) {
            v.push(("perturbation_currents", "levels must be finite and >= 0".to_string()));
        }
        if !(self.perturbation_duty > 0.0 && self.perturbation_duty < 1.0) {
            v.push((
                "perturbation_duty",
                format!("must lie in (0, 1), got {}", self.perturbation_duty),
            ));
        }
        if !(self.pulse_duty > 0.0 && self.pulse_duty < 1.0) {
            v.push(("pulse_duty", format!("must lie in (0, 1), got {}", self.pulse_duty)));
        }
        if !nonneg(self.edge_time) {
            v.push(("edge_time", format!("must be >= 0, got {}", self.edge_time)));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some((k, m)) => Err(Error::param(k, m)),
        }
    }
}

/// Secondary gain-switching levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSwitchSpec {
    pub off_current: f64,
    pub on_current: f64,
    #[serde(default = "half")]
    pub duty: f64,
}

impl GainSwitchSpec {
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        if !(self.off_current.is_finite() && self.off_current >= 0.0) {
            v.push(("off_current", format!("must be >= 0, got {}", self.off_current)));
        }
        if !(self.on_current.is_finite() && self.on_current >= 0.0) {
            v.push(("on_current", format!("must be >= 0, got {}", self.on_current)));
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            v.push(("duty", format!("must lie in (0, 1), got {}", self.duty)));
        }
        v
    }

    /// Advisory notes when the levels do not straddle threshold.
    pub fn warnings(&self, params: &LaserParams) -> Vec<String> {
        let ith = params.threshold_current();
        let mut w = Vec::new();
        if self.off_current >= ith {
            w.push(format!(
                "off current {:.3e} A is not below threshold {:.3e} A",
                self.off_current, ith
            ));
        }
        if self.on_current <= ith {
            w.push(format!(
                "on current {:.3e} A is not above threshold {:.3e} A",
                self.on_current, ith
            ));
        }
        w
    }
}

/// Current step that shifts the primary phase by `delta_phi` when held for
/// `duration`: `delta_phi * 2 q V / (duration * Gamma * alpha * eps)`.
pub fn phase_shift_current(delta_phi: f64, duration: f64, params: &LaserParams) -> Result<f64> {
    let denom = duration
        * params.confinement
        * params.linewidth_enhancement
        * params.gain_compression;
    if !(denom.is_finite() && denom > 0.0) {
        return Err(Error::param(
            "perturbation",
            "phase response needs positive duration, alpha and gain compression",
        ));
    }
    Ok(delta_phi * 2.0 * ELECTRON_CHARGE * params.active_volume / denom)
}

/// Maps a requested differential phase onto `[0, 2 pi]`, so negative shifts
/// become the equivalent positive one.
pub fn nonnegative_phase(delta_phi: f64) -> Result<f64> {
    if !(delta_phi.is_finite() && delta_phi.abs() <= 2.0 * PI + 1e-12) {
        return Err(Error::param(
            "phase",
            format!("differential phase must satisfy |phase| <= 2 pi, got {delta_phi}"),
        ));
    }
    Ok(if delta_phi < 0.0 {
        2.0 * PI - delta_phi.abs()
    } else {
        delta_phi
    })
}

/// Square wave at the secondary pulse rate, on for the first `duty` of
/// every slot.
pub fn gain_switch_wave(
    clock: &ClockConfig,
    off_current: f64,
    on_current: f64,
    duty: f64,
    n_pulses: usize,
) -> Result<DriveWaveform> {
    slot_wave(clock, off_current, on_current, duty, &vec![true; n_pulses])
}

/// Gain switching where each slot is either pulsed or left at the off level.
pub fn slot_wave(
    clock: &ClockConfig,
    off_current: f64,
    on_current: f64,
    duty: f64,
    slots: &[bool],
) -> Result<DriveWaveform> {
    clock.validate()?;
    if !(duty > 0.0 && duty < 1.0) {
        return Err(Error::param("duty", format!("must lie in (0, 1), got {duty}")));
    }
    let spp = clock.samples_per_pulse();
    let on = ((duty * spp as f64).round() as usize).clamp(1, spp - 1);
    let mut b = WaveformBuilder::new(clock.dt)?;
    for &fire in slots {
        if fire {
            b.push(on_current, on)?;
            b.push(off_current, spp - on)?;
        } else {
            b.push(off_current, spp)?;
        }
    }
    b.build()
}

/// Rectangles `(start, len, amplitude)` added on top of a background level,
/// swept into runs.
fn compose(dt: f64, total: usize, background: f64, rects: &[(usize, usize, f64)]) -> Result<DriveWaveform> {
    let mut events: Vec<(usize, usize, bool)> = Vec::with_capacity(2 * rects.len());
    for (id, &(start, len, amp)) in rects.iter().enumerate() {
        if len == 0 || amp == 0.0 {
            continue;
        }
        if start + len > total {
            return Err(Error::Config(format!(
                "modulation at samples {start}..{} runs past the waveform end {total}",
                start + len
            )));
        }
        events.push((start, id, true));
        events.push((start + len, id, false));
    }
    events.sort_by_key(|e| e.0);
    let mut b = WaveformBuilder::new(dt)?;
    let mut active: Vec<usize> = Vec::new();
    let mut pos = 0;
    let mut i = 0;
    while i < events.len() {
        let at = events[i].0;
        let level = active.iter().fold(background, |acc, &id| acc + rects[id].2);
        b.push(level, at - pos)?;
        while i < events.len() && events[i].0 == at {
            let (_, id, opens) = events[i];
            if opens {
                active.push(id);
                active.sort_unstable();
            } else {
                active.retain(|&x| x != id);
            }
            i += 1;
        }
        pos = at;
    }
    b.push(background, total - pos)?;
    b.build()
}

fn overlaps(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

/// Sample span `[start, start + len)` of the perturbation of symbol `k`,
/// centered between the two pulses of its pair.
fn perturbation_span(clock: &ClockConfig, k: usize, len: usize) -> Result<(usize, usize)> {
    let (a, b) = clock.symbol_pair(k);
    let mid = 0.5 * (clock.pulse_center_sample(a) + clock.pulse_center_sample(b));
    let start = (mid - 0.5 * len as f64).round();
    if start < 0.0 {
        return Err(Error::Config("perturbation starts before the waveform".into()));
    }
    let span = (start as usize, start as usize + len);
    for j in [a, b] {
        if overlaps(span, clock.pulse_window(j)) {
            return Err(Error::Config(format!(
                "perturbation of symbol {k} overlaps the detection window of pulse {j}; \
                 shorten perturbation_duty or window_fraction"
            )));
        }
    }
    Ok(span)
}

fn perturbation_len(clock: &ClockConfig, spec: &ModulationSpec) -> usize {
    ((spec.perturbation_duty * clock.samples_per_symbol() as f64).round() as usize).max(1)
}

fn amplitudes_for_phases(
    clock: &ClockConfig,
    spec: &ModulationSpec,
    params: &LaserParams,
    phases: &[f64],
) -> Result<Vec<f64>> {
    let t_m = perturbation_len(clock, spec) as f64 * clock.dt;
    phases
        .iter()
        .map(|&p| phase_shift_current(nonnegative_phase(p)?, t_m, params))
        .collect()
}

/// Primary drive carrying one perturbation per symbol with the given
/// amplitudes, either CW or gain-switched once per symbol.
pub fn seeded_wave(
    clock: &ClockConfig,
    spec: &ModulationSpec,
    amplitudes: &[f64],
    pulsed: bool,
) -> Result<DriveWaveform> {
    clock.validate()?;
    spec.validate()?;
    if amplitudes.is_empty() {
        return Err(Error::InsufficientData("no symbols to encode".into()));
    }
    let n = amplitudes.len();
    let total = clock.pulses_for_symbols(n) * clock.samples_per_pulse();
    let m = perturbation_len(clock, spec);
    let mut rects = Vec::with_capacity(2 * n);
    let background = spec.base_current;
    if pulsed {
        if clock.pulses_per_symbol() != 2 {
            return Err(Error::Config(
                "pulsed seeding needs secondary_pulse_rate = 2 x symbol_rate".into(),
            ));
        }
        if spec.perturbation_duty >= spec.pulse_duty {
            return Err(Error::Config(
                "perturbation_duty must be shorter than pulse_duty".into(),
            ));
        }
        let w = (spec.pulse_duty * clock.samples_per_symbol() as f64).round() as usize;
        for k in 0..n {
            let (a, b) = clock.symbol_pair(k);
            let mid = 0.5 * (clock.pulse_center_sample(a) + clock.pulse_center_sample(b));
            let start = (mid - 0.5 * w as f64).round().max(0.0) as usize;
            rects.push((start, w.min(total - start), spec.high_current - spec.base_current));
        }
    }
    for (k, &amp) in amplitudes.iter().enumerate() {
        let (s, e) = perturbation_span(clock, k, m)?;
        rects.push((s, e - s, amp));
    }
    let w = compose(clock.dt, total, background, &rects)?;
    w.with_edge_ramp(spec.edge_time)
}

/// CW primary drive with one square perturbation per symbol, sized to shift
/// the primary phase by the requested differential phase.
pub fn phase_seed_pattern(
    clock: &ClockConfig,
    spec: &ModulationSpec,
    params: &LaserParams,
    phases: &[f64],
) -> Result<DriveWaveform> {
    let amps = amplitudes_for_phases(clock, spec, params, phases)?;
    seeded_wave(clock, spec, &amps, false)
}

/// Primary gain-switched once per symbol (`pulse_duty` of the symbol,
/// centered on the pulse pair) with the phase perturbation on top.
pub fn pulsed_seeding_pattern(
    clock: &ClockConfig,
    spec: &ModulationSpec,
    params: &LaserParams,
    phases: &[f64],
) -> Result<DriveWaveform> {
    let amps = amplitudes_for_phases(clock, spec, params, phases)?;
    seeded_wave(clock, spec, &amps, true)
}

/// Perturbation amplitude for each level `2 pi k / m`.
pub fn level_amplitudes(
    clock: &ClockConfig,
    spec: &ModulationSpec,
    params: &LaserParams,
    m: usize,
) -> Result<Vec<f64>> {
    if !spec.perturbation_currents.is_empty() {
        if spec.perturbation_currents.len() != m {
            return Err(Error::Config(format!(
                "perturbation_currents lists {} levels, alphabet has {m}",
                spec.perturbation_currents.len()
            )));
        }
        return Ok(spec.perturbation_currents.clone());
    }
    let phases: Vec<f64> = (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect();
    amplitudes_for_phases(clock, spec, params, &phases)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Protocol {
    Cow,
    Dps,
    Bb84,
    Mdpsk(u32),
    Raw,
}

impl Protocol {
    pub fn name(&self) -> String {
        match self {
            Protocol::Cow => "COW".into(),
            Protocol::Dps => "DPS".into(),
            Protocol::Bb84 => "BB84".into(),
            Protocol::Mdpsk(m) => format!("MDPSK{m}"),
            Protocol::Raw => "RAW".into(),
        }
    }

    /// Number of distinct symbol values.
    pub fn alphabet(&self) -> u32 {
        match self {
            Protocol::Cow => 3,
            Protocol::Dps => 2,
            Protocol::Bb84 => 2,
            Protocol::Mdpsk(m) => *m,
            Protocol::Raw => u32::MAX,
        }
    }
}

/// COW symbol values.
pub const COW_ZERO: u32 = 0;
pub const COW_ONE: u32 = 1;
pub const COW_DECOY: u32 = 2;
/// Share of decoy symbols in randomly generated COW sequences.
pub const COW_DECOY_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolPattern {
    pub protocol: Protocol,
    pub values: Vec<u32>,
    /// BB84 basis per symbol (0 or 1).
    pub bases: Option<Vec<u32>>,
    /// Seed the values were drawn with, if random.
    pub seed: Option<u64>,
}

impl SymbolPattern {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InsufficientData("symbol pattern is empty".into()));
        }
        let a = self.protocol.alphabet();
        if let Some(v) = self.values.iter().find(|&&v| v >= a) {
            return Err(Error::Config(format!(
                "value {v} outside the {} alphabet",
                self.protocol.name()
            )));
        }
        match (&self.protocol, &self.bases) {
            (Protocol::Bb84, Some(b)) if b.len() == self.values.len() && b.iter().all(|&x| x < 2) => {}
            (Protocol::Bb84, _) => {
                return Err(Error::Config("BB84 needs one basis (0 or 1) per symbol".into()))
            }
            (_, None) => {}
            (_, Some(_)) => return Err(Error::Config("only BB84 carries bases".into())),
        }
        Ok(())
    }

    /// Index into [`SymbolPattern::target_phases`] for symbol `k`, for
    /// phase-encoded protocols.
    pub fn phase_index(&self, k: usize) -> Option<usize> {
        let v = self.values[k] as usize;
        match self.protocol {
            Protocol::Dps | Protocol::Mdpsk(_) => Some(v),
            Protocol::Bb84 => Some(self.bases.as_ref()?[k] as usize + 2 * v),
            _ => None,
        }
    }

    /// Differential phases of the alphabet, index-aligned with
    /// [`SymbolPattern::phase_index`].
    pub fn target_phases(&self) -> Vec<f64> {
        let m = match self.protocol {
            Protocol::Dps => 2,
            Protocol::Bb84 => 4,
            Protocol::Mdpsk(m) => m as usize,
            _ => return Vec::new(),
        };
        (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect()
    }
}

/// Where symbol values come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SymbolSource {
    Given { values: Vec<u32>, bases: Option<Vec<u32>> },
    Random { count: usize, seed: u64 },
}

fn draw_pattern(protocol: Protocol, source: &SymbolSource) -> Result<SymbolPattern> {
    let p = match source {
        SymbolSource::Given { values, bases } => SymbolPattern {
            protocol,
            values: values.clone(),
            bases: bases.clone(),
            seed: None,
        },
        SymbolSource::Random { count, seed } => {
            let mut rng = rng_from_seed(*seed);
            let mut values = Vec::with_capacity(*count);
            let mut bases = Vec::with_capacity(*count);
            for _ in 0..*count {
                match protocol {
                    Protocol::Cow => {
                        let decoy = rng.random::<f64>() < COW_DECOY_FRACTION;
                        let bit = rng.random_range(0..2u32);
                        values.push(if decoy { COW_DECOY } else { bit });
                    }
                    Protocol::Bb84 => {
                        values.push(rng.random_range(0..2u32));
                        bases.push(rng.random_range(0..2u32));
                    }
                    Protocol::Raw => {
                        return Err(Error::Config("RAW patterns cannot be drawn at random".into()))
                    }
                    _ => values.push(rng.random_range(0..protocol.alphabet())),
                }
            }
            SymbolPattern {
                protocol,
                values,
                bases: (protocol == Protocol::Bb84).then_some(bases),
                seed: Some(*seed),
            }
        }
    };
    p.validate()?;
    Ok(p)
}

/// Primary and secondary drives of a transmitter plus the encoded symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitterDrive {
    pub primary: DriveWaveform,
    pub secondary: DriveWaveform,
    pub pattern: SymbolPattern,
}

/// COW, DPS and BB84 drive sets.
pub fn protocol_pattern(
    protocol: Protocol,
    clock: &ClockConfig,
    spec: &ModulationSpec,
    secondary: &GainSwitchSpec,
    params: &LaserParams,
    source: &SymbolSource,
) -> Result<TransmitterDrive> {
    clock.validate()?;
    spec.validate()?;
    let pattern = draw_pattern(protocol, source)?;
    let n = pattern.len();
    match protocol {
        Protocol::Cow => {
            if clock.pulses_per_symbol() != 2 {
                return Err(Error::Config("COW needs two pulse slots per symbol".into()));
            }
            let slots: Vec<bool> = pattern
                .values
                .iter()
                .flat_map(|&v| match v {
                    COW_ZERO => [true, false],
                    COW_ONE => [false, true],
                    _ => [true, true],
                })
                .collect();
            let sec = slot_wave(clock, secondary.off_current, secondary.on_current, secondary.duty, &slots)?;
            let prim = DriveWaveform::constant(clock.dt, spec.base_current, sec.len())?;
            Ok(TransmitterDrive {
                primary: prim.with_edge_ramp(spec.edge_time)?,
                secondary: sec,
                pattern,
            })
        }
        Protocol::Dps | Protocol::Mdpsk(_) => {
            let m = protocol.alphabet() as usize;
            if !matches!(m, 2 | 4 | 8 | 16) {
                return Err(Error::Config(format!("M-DPSK order must be 2, 4, 8 or 16, got {m}")));
            }
            let levels = level_amplitudes(clock, spec, params, m)?;
            let amps: Vec<f64> = pattern.values.iter().map(|&v| levels[v as usize]).collect();
            let prim = seeded_wave(clock, spec, &amps, false)?;
            let sec = gain_switch_wave(
                clock,
                secondary.off_current,
                secondary.on_current,
                secondary.duty,
                clock.pulses_for_symbols(n),
            )?;
            Ok(TransmitterDrive {
                primary: prim,
                secondary: sec,
                pattern,
            })
        }
        Protocol::Bb84 => {
            let levels = level_amplitudes(clock, spec, params, 4)?;
            let amps: Vec<f64> = (0..n)
                .map(|k| levels[pattern.phase_index(k).unwrap_or(0)])
                .collect();
            let prim = seeded_wave(clock, spec, &amps, true)?;
            let sec = gain_switch_wave(
                clock,
                secondary.off_current,
                secondary.on_current,
                secondary.duty,
                clock.pulses_for_symbols(n),
            )?;
            Ok(TransmitterDrive {
                primary: prim,
                secondary: sec,
                pattern,
            })
        }
        Protocol::Raw => Err(Error::Config(
            "RAW has no protocol drive; use phase_seed_pattern".into(),
        )),
    }
}

/// M-ary differential phase shift keying with alphabet `2 pi k / M`.
pub fn mdpsk_pattern(
    m: u32,
    clock: &ClockConfig,
    spec: &ModulationSpec,
    secondary: &GainSwitchSpec,
    params: &LaserParams,
    source: &SymbolSource,
) -> Result<TransmitterDrive> {
    if !matches!(m, 2 | 4 | 8 | 16) {
        return Err(Error::Config(format!("M-DPSK order must be 2, 4, 8 or 16, got {m}")));
    }
    protocol_pattern(Protocol::Mdpsk(m), clock, spec, secondary, params, source)
}

/// Bits carried per symbol of an M-ary alphabet.
pub fn bits_per_symbol(m: u32) -> u32 {
    m.trailing_zeros()
}
