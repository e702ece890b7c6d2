//! Run configuration: a JSON document with one section per component.
//! Every section is optional and falls back to the defaults below; unknown
//! keys are rejected. Currents are given as multiples of the threshold
//! current of the laser they drive.

use std::fmt;
use std::path::Path;

use phaseseed::drive::{
    gain_switch_wave, phase_shift_current, phase_seed_pattern, ClockConfig, GainSwitchSpec,
    ModulationSpec, Protocol,
};
use phaseseed::injection::{injection_ratio, locking_range, steady_frequency_offset, InjectionConfig};
use phaseseed::params::cgs_key;
use phaseseed::rng::derive_seed;
use phaseseed::{CgsParams, LaserParams, NoiseConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    GainSwitch,
    CwSeed,
    PhaseSeed,
    PulsedSeed,
    Protocol(Protocol),
    Mdpsk(u32),
    QrngDelayed,
    QrngTwoLaser,
}

impl Scenario {
    pub fn parse(tag: &str) -> Result<Self, String> {
        let s = match tag {
            "gain_switch" => Scenario::GainSwitch,
            "cw_seed" => Scenario::CwSeed,
            "phase_seed" => Scenario::PhaseSeed,
            "pulsed_seed" => Scenario::PulsedSeed,
            "protocol:cow" => Scenario::Protocol(Protocol::Cow),
            "protocol:dps" => Scenario::Protocol(Protocol::Dps),
            "protocol:bb84" => Scenario::Protocol(Protocol::Bb84),
            "qrng:delayed" => Scenario::QrngDelayed,
            "qrng:two_laser" => Scenario::QrngTwoLaser,
            _ => match tag.strip_prefix("mdpsk:").map(str::parse::<u32>) {
                Some(Ok(m)) if matches!(m, 2 | 4 | 8 | 16) => Scenario::Mdpsk(m),
                Some(_) => return Err(format!("M-DPSK order in `{tag}` must be 2, 4, 8 or 16")),
                None => {
                    return Err(format!(
                        "unknown scenario `{tag}`; expected gain_switch, cw_seed, phase_seed, \
                         pulsed_seed, protocol:{{cow,dps,bb84}}, mdpsk:M or qrng:{{delayed,two_laser}}"
                    ))
                }
            },
        };
        Ok(s)
    }

    /// Whether a primary laser takes part.
    pub fn has_primary(&self) -> bool {
        !matches!(self, Scenario::GainSwitch | Scenario::QrngDelayed | Scenario::QrngTwoLaser)
    }

    /// Whether the primary is gain-switched rather than CW.
    pub fn pulsed_primary(&self) -> bool {
        matches!(self, Scenario::PulsedSeed | Scenario::Protocol(Protocol::Bb84))
    }

    /// Number of phase levels, for phase-encoding scenarios.
    pub fn phase_levels(&self, cfg: &RunConfig) -> Option<u32> {
        match self {
            Scenario::PhaseSeed | Scenario::PulsedSeed => Some(cfg.symbols.levels),
            Scenario::Mdpsk(m) => Some(*m),
            Scenario::Protocol(Protocol::Dps) => Some(2),
            Scenario::Protocol(Protocol::Bb84) => Some(4),
            _ => None,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::GainSwitch => write!(f, "gain_switch"),
            Scenario::CwSeed => write!(f, "cw_seed"),
            Scenario::PhaseSeed => write!(f, "phase_seed"),
            Scenario::PulsedSeed => write!(f, "pulsed_seed"),
            Scenario::Protocol(p) => write!(f, "protocol:{}", p.name().to_lowercase()),
            Scenario::Mdpsk(m) => write!(f, "mdpsk:{m}"),
            Scenario::QrngDelayed => write!(f, "qrng:delayed"),
            Scenario::QrngTwoLaser => write!(f, "qrng:two_laser"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    #[serde(default)]
    pub seed: u64,
    /// Used when `--out` is not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub primary: CgsParams,
    #[serde(default)]
    pub secondary: CgsParams,
    #[serde(default)]
    pub clock: ClockConfig,
    #[serde(default)]
    pub secondary_drive: SecondaryDrive,
    #[serde(default)]
    pub modulation: Modulation,
    #[serde(default)]
    pub injection: Injection,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default)]
    pub symbols: Symbols,
    #[serde(default)]
    pub pulses: Pulses,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub analysis: Analysis,
    #[serde(default)]
    pub qrng: Qrng,
}

/// Gain switching of the secondary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecondaryDrive {
    pub off_ith: f64,
    pub on_ith: f64,
    pub duty: f64,
}

impl Default for SecondaryDrive {
    fn default() -> Self {
        SecondaryDrive {
            off_ith: 0.0,
            on_ith: 2.0,
            duty: 0.5,
        }
    }
}

/// Primary drive. `base_ith` is the CW level, or the off level of a
/// gain-switched primary whose on level is `high_ith`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Modulation {
    pub base_ith: f64,
    pub high_ith: f64,
    pub perturbation_duty: f64,
    pub pulse_duty: f64,
    pub edge_time_ps: f64,
    /// Explicit perturbation current per phase level [mA]. Empty means
    /// derived from the phase-shift relation.
    pub perturbation_ma: Vec<f64>,
}

impl Default for Modulation {
    fn default() -> Self {
        Modulation {
            base_ith: 6.0,
            high_ith: 8.0,
            perturbation_duty: 0.2,
            pulse_duty: 0.8,
            edge_time_ps: 0.0,
            perturbation_ma: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Injection {
    pub enabled: bool,
    pub efficiency: f64,
    /// Added to the chirp compensation, if any [rad/s].
    pub detuning_rad_per_s: f64,
    /// Cancel the primary's steady frequency offset at its drive level.
    pub compensate_chirp: bool,
}

impl Default for Injection {
    fn default() -> Self {
        Injection {
            enabled: true,
            efficiency: 0.05,
            detuning_rad_per_s: 0.0,
            compensate_chirp: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Noise {
    pub enabled: bool,
    pub langevin_scale: f64,
}

impl Default for Noise {
    fn default() -> Self {
        Noise {
            enabled: true,
            langevin_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Symbols {
    /// Number of random symbols when `values` is absent.
    pub count: usize,
    pub values: Option<Vec<u32>>,
    pub bases: Option<Vec<u32>>,
    /// Alphabet size of phase_seed and pulsed_seed.
    pub levels: u32,
}

impl Default for Symbols {
    fn default() -> Self {
        Symbols {
            count: 200,
            values: None,
            bases: None,
            levels: 4,
        }
    }
}

/// Pulse counts of the free-running and CW-seeded scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Pulses {
    pub count: usize,
    /// Leading pulses simulated but left out of every statistic.
    pub warmup: usize,
}

impl Default for Pulses {
    fn default() -> Self {
        Pulses { count: 200, warmup: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    /// Pulses covered by the trajectory CSVs.
    pub trajectory_pulses: usize,
    /// Write every n-th sample of the trajectory.
    pub trajectory_stride: usize,
    pub chirp: bool,
    /// Rerun the secondary without injection and report it alongside.
    pub free_running_reference: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            trajectory_pulses: 8,
            trajectory_stride: 1,
            chirp: false,
            free_running_reference: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Analysis {
    /// Turn-on is the first crossing of this fraction of the pulse peak.
    pub jitter_fraction: f64,
    pub uniformity_bins: usize,
    pub significance: f64,
}

impl Default for Analysis {
    fn default() -> Self {
        Analysis {
            jitter_fraction: 0.5,
            uniformity_bins: 16,
            significance: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Qrng {
    pub adc_bits: u32,
    /// Interferometer delay in pulses.
    pub delay: usize,
}

impl Default for Qrng {
    fn default() -> Self {
        Qrng { adc_bits: 8, delay: 1 }
    }
}

/// A configuration with every quantity converted to SI and checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub seed: u64,
    pub primary: LaserParams,
    pub secondary: LaserParams,
    pub clock: ClockConfig,
    pub gain_switch: GainSwitchSpec,
    pub modulation: ModulationSpec,
    pub injection: InjectionConfig,
    /// Primary current the compensation and locking range refer to [A].
    pub primary_reference: f64,
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            CliError::Config(vec![format!("{origin}:{}:{}: {e}", e.line(), e.column())])
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Canonical serialisation, the basis of the config hash.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        serde_json::to_string_pretty(&c).expect("config serialises") + "\n"
    }

    pub fn noise_for(&self, params: &LaserParams, component: &str) -> NoiseConfig {
        let mut n = if self.noise.enabled {
            NoiseConfig::on(params, derive_seed(self.seed, component))
        } else {
            NoiseConfig::off(params)
        };
        n.langevin_scale = self.noise.langevin_scale;
        n
    }

    /// Converts and checks everything, collecting every violation.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let mut bad = Vec::new();
        let scenario = match Scenario::parse(&self.scenario) {
            Ok(s) => Some(s),
            Err(e) => {
                bad.push(format!("scenario: {e}"));
                None
            }
        };
        let primary = LaserParams::from(self.primary);
        let secondary = LaserParams::from(self.secondary);
        for (section, p) in [("primary", &primary), ("secondary", &secondary)] {
            for v in p.violations() {
                bad.push(format!("{section}.{}: {}", cgs_key(v.field), v.message));
            }
        }
        for (k, m) in self.clock.violations() {
            bad.push(format!("clock.{k}: {m}"));
        }
        let sd = &self.secondary_drive;
        for (k, v) in [("off_ith", sd.off_ith), ("on_ith", sd.on_ith)] {
            if !(v.is_finite() && v >= 0.0) {
                bad.push(format!("secondary_drive.{k}: must be >= 0, got {v}"));
            }
        }
        if !(sd.duty > 0.0 && sd.duty < 1.0) {
            bad.push(format!("secondary_drive.duty: must lie in (0, 1), got {}", sd.duty));
        }
        let m = &self.modulation;
        for (k, v) in [("base_ith", m.base_ith), ("high_ith", m.high_ith)] {
            if !(v.is_finite() && v >= 0.0) {
                bad.push(format!("modulation.{k}: must be >= 0, got {v}"));
            }
        }
        if !(m.perturbation_duty > 0.0 && m.perturbation_duty < 1.0) {
            bad.push(format!(
                "modulation.perturbation_duty: must lie in (0, 1), got {}",
                m.perturbation_duty
            ));
        }
        if !(m.pulse_duty > 0.0 && m.pulse_duty < 1.0) {
            bad.push(format!("modulation.pulse_duty: must lie in (0, 1), got {}", m.pulse_duty));
        }
        if !(m.edge_time_ps.is_finite() && m.edge_time_ps >= 0.0) {
            bad.push(format!("modulation.edge_time_ps: must be >= 0, got {}", m.edge_time_ps));
        }
        if m.perturbation_ma.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            bad.push("modulation.perturbation_ma: levels must be finite and >= 0".into());
        }
        let inj = &self.injection;
        if !(0.0..=1.0).contains(&inj.efficiency) {
            bad.push(format!("injection.efficiency: must lie in [0, 1], got {}", inj.efficiency));
        }
        if !inj.detuning_rad_per_s.is_finite() {
            bad.push("injection.detuning_rad_per_s: must be finite".into());
        }
        if !(self.noise.langevin_scale.is_finite() && self.noise.langevin_scale >= 0.0) {
            bad.push(format!(
                "noise.langevin_scale: must be finite and >= 0, got {}",
                self.noise.langevin_scale
            ));
        }
        let sy = &self.symbols;
        if !matches!(sy.levels, 2 | 4 | 8 | 16) {
            bad.push(format!("symbols.levels: must be 2, 4, 8 or 16, got {}", sy.levels));
        }
        match &sy.values {
            Some(v) if v.is_empty() => bad.push("symbols.values: must not be empty".into()),
            None if sy.count == 0 => bad.push("symbols.count: must be >= 1".into()),
            _ => {}
        }
        if sy.bases.is_some() && sy.values.is_none() {
            bad.push("symbols.bases: given without symbols.values".into());
        }
        if let (Some(s), Some(values)) = (scenario, &sy.values) {
            let alphabet = match s {
                Scenario::Protocol(p) => Some(p.alphabet()),
                _ => s.phase_levels(self),
            };
            if let Some(a) = alphabet {
                if let Some(v) = values.iter().find(|&&v| v >= a) {
                    bad.push(format!("symbols.values: {v} is outside the alphabet of size {a}"));
                }
            }
            match (s, &sy.bases) {
                (Scenario::Protocol(Protocol::Bb84), Some(b))
                    if b.len() == values.len() && b.iter().all(|&x| x < 2) => {}
                (Scenario::Protocol(Protocol::Bb84), _) => {
                    bad.push("symbols.bases: BB84 needs one basis (0 or 1) per value".into())
                }
                (_, Some(_)) => bad.push("symbols.bases: only protocol:bb84 carries bases".into()),
                _ => {}
            }
        }
        if self.pulses.count < 2 {
            bad.push(format!("pulses.count: must be >= 2, got {}", self.pulses.count));
        }
        if self.outputs.trajectory_stride == 0 {
            bad.push("outputs.trajectory_stride: must be >= 1".into());
        }
        let an = &self.analysis;
        if !(an.jitter_fraction > 0.0 && an.jitter_fraction < 1.0) {
            bad.push(format!(
                "analysis.jitter_fraction: must lie in (0, 1), got {}",
                an.jitter_fraction
            ));
        }
        if an.uniformity_bins < 2 {
            bad.push("analysis.uniformity_bins: must be >= 2".into());
        }
        if !(an.significance > 0.0 && an.significance < 1.0) {
            bad.push(format!("analysis.significance: must lie in (0, 1), got {}", an.significance));
        }
        if !(1..=16).contains(&self.qrng.adc_bits) {
            bad.push(format!("qrng.adc_bits: must lie in 1..=16, got {}", self.qrng.adc_bits));
        }
        if self.qrng.delay == 0 {
            bad.push("qrng.delay: must be >= 1".into());
        }
        if let Some(s) = scenario {
            if matches!(s, Scenario::Protocol(Protocol::Cow)) && self.clock.violations().is_empty()
                && self.clock.pulses_per_symbol() != 2
            {
                bad.push("clock.secondary_pulse_rate: COW needs two pulse slots per symbol".into());
            }
        }
        if !bad.is_empty() {
            return Err(CliError::Config(bad));
        }
        let scenario = scenario.expect("checked above");

        let ith_p = primary.threshold_current();
        let ith_s = secondary.threshold_current();
        let modulation = ModulationSpec {
            base_current: m.base_ith * ith_p,
            high_current: m.high_ith * ith_p,
            perturbation_currents: m.perturbation_ma.iter().map(|x| x * 1e-3).collect(),
            perturbation_duty: m.perturbation_duty,
            pulse_duty: m.pulse_duty,
            edge_time: m.edge_time_ps * 1e-12,
        };
        let gain_switch = GainSwitchSpec {
            off_current: sd.off_ith * ith_s,
            on_current: sd.on_ith * ith_s,
            duty: sd.duty,
        };
        let primary_reference = if scenario.pulsed_primary() {
            modulation.high_current
        } else {
            modulation.base_current
        };
        let mut detuning = inj.detuning_rad_per_s;
        if inj.compensate_chirp && scenario.has_primary() {
            detuning -= steady_frequency_offset(&primary, primary_reference).map_err(CliError::from)?;
        }
        let injection = if inj.enabled && scenario.has_primary() {
            InjectionConfig::new(secondary.injection_coupling, detuning, inj.efficiency)
                .map_err(|e| CliError::Config(vec![format!("injection: {e}")]))?
        } else {
            InjectionConfig::disabled()
        };
        let r = Resolved {
            scenario,
            seed: self.seed,
            primary,
            secondary,
            clock: self.clock,
            gain_switch,
            modulation,
            injection,
            primary_reference,
        };
        r.check_drive_layout(self)?;
        Ok(r)
    }
}

impl Resolved {
    /// Builds a short stretch of the primary pattern so that layout errors
    /// such as a perturbation reaching into a detection window surface
    /// before any integration.
    fn check_drive_layout(&self, cfg: &RunConfig) -> Result<(), CliError> {
        let Some(levels) = self.scenario.phase_levels(cfg) else {
            return Ok(());
        };
        let levels = levels as usize;
        if !self.modulation.perturbation_currents.is_empty()
            && self.modulation.perturbation_currents.len() != levels
        {
            return Err(CliError::Config(vec![format!(
                "modulation.perturbation_ma: lists {} levels, the alphabet has {levels}",
                self.modulation.perturbation_currents.len()
            )]));
        }
        let phases: Vec<f64> = (0..levels)
            .map(|k| 2.0 * std::f64::consts::PI * k as f64 / levels as f64)
            .collect();
        let spec = if self.scenario.pulsed_primary() {
            self.modulation.clone()
        } else {
            ModulationSpec {
                high_current: 0.0,
                ..self.modulation.clone()
            }
        };
        let built = if self.scenario.pulsed_primary() {
            phaseseed::drive::pulsed_seeding_pattern(&self.clock, &spec, &self.primary, &phases)
        } else {
            phase_seed_pattern(&self.clock, &spec, &self.primary, &phases)
        };
        built.map(|_| ()).map_err(|e| CliError::Config(vec![format!("modulation: {e}")]))
    }

    /// Detuning between the primary's line at its reference current and the
    /// secondary's line: its CW line when its drive is constant, its
    /// threshold line otherwise [rad/s].
    pub fn effective_detuning(&self) -> Result<f64, CliError> {
        let gs = &self.gain_switch;
        let secondary_line = if gs.off_current == gs.on_current {
            steady_frequency_offset(&self.secondary, gs.on_current)?
        } else {
            0.0
        };
        Ok(self.injection.detuning + steady_frequency_offset(&self.primary, self.primary_reference)?
            - secondary_line)
    }

    /// Derived quantities printed by `validate`.
    pub fn derived(&self, cfg: &RunConfig) -> Result<Vec<(String, String)>, CliError> {
        let mut out = Vec::new();
        let ith_p = self.primary.threshold_current();
        let ith_s = self.secondary.threshold_current();
        out.push(("scenario".into(), self.scenario.to_string()));
        out.push(("seed".into(), self.seed.to_string()));
        out.push(("secondary_threshold_mA".into(), format!("{:.4}", ith_s * 1e3)));
        if self.scenario.has_primary() {
            out.push(("primary_threshold_mA".into(), format!("{:.4}", ith_p * 1e3)));
        }
        out.push(("pulse_period_ps".into(), format!("{:.3}", self.clock.pulse_period() * 1e12)));
        out.push(("samples_per_pulse".into(), self.clock.samples_per_pulse().to_string()));
        for w in self.gain_switch.warnings(&self.secondary) {
            out.push(("warning".into(), w));
        }
        if self.scenario.has_primary() && self.injection.is_active() {
            let on = self.gain_switch.on_current.max(1.001 * ith_s);
            let ratio = injection_ratio(
                &self.primary,
                self.primary_reference,
                &self.secondary,
                on,
                self.injection.efficiency,
            )?;
            let range = locking_range(&self.secondary, &self.injection, ratio)?;
            out.push(("injection_ratio".into(), format!("{ratio:.6e}")));
            out.push(("locking_range_min_rad_per_s".into(), format!("{:.6e}", range.omega_min)));
            out.push(("locking_range_max_rad_per_s".into(), format!("{:.6e}", range.omega_max)));
            let effective = self.effective_detuning()?;
            out.push(("detuning_rad_per_s".into(), format!("{effective:.6e}")));
            out.push(("detuning_within_locking_range".into(), range.contains(effective).to_string()));
        }
        if let Some(m) = self.scenario.phase_levels(cfg) {
            let t_m = self.modulation.perturbation_duty * self.clock.symbol_period();
            out.push(("perturbation_ps".into(), format!("{:.3}", t_m * 1e12)));
            for k in 0..m {
                let phase = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                let di = match self.modulation.perturbation_currents.get(k as usize) {
                    Some(&x) => x,
                    None => phase_shift_current(phase, t_m, &self.primary)?,
                };
                out.push((
                    format!("level_{k}_phase_rad"),
                    format!("{phase:.6} delta_I_mA {:.4}", di * 1e3),
                ));
            }
        }
        // The gain-switch wave must be buildable for one pulse.
        gain_switch_wave(
            &self.clock,
            self.gain_switch.off_current,
            self.gain_switch.on_current,
            self.gain_switch.duty,
            1,
        )?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> RunConfig {
        RunConfig::from_json(json, "test").unwrap()
    }

    #[test]
    fn scenario_tags_print_as_parsed() {
        for tag in ["gain_switch", "protocol:bb84", "mdpsk:16", "qrng:two_laser"] {
            assert_eq!(Scenario::parse(tag).unwrap().to_string(), tag);
        }
        assert!(Scenario::parse("mdpsk:6").is_err());
        assert!(Scenario::parse("protocol:e91").is_err());
    }

    #[test]
    fn missing_sections_take_defaults() {
        let cfg = parse(r#"{"scenario": "cw_seed", "primary": {"alpha": 4.0}}"#);
        assert_eq!(cfg.primary.alpha, 4.0);
        assert_eq!(cfg.primary.tau_p_ps, CgsParams::typical_dfb().tau_p_ps);
        assert_eq!(cfg.secondary, CgsParams::typical_dfb());
        assert_eq!(cfg.clock, ClockConfig::default());
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn compensation_cancels_the_primary_offset() {
        let cfg = parse(r#"{"scenario": "cw_seed", "injection": {"detuning_rad_per_s": 1e9}}"#);
        let r = cfg.resolve().unwrap();
        let offset = steady_frequency_offset(&r.primary, r.primary_reference).unwrap();
        assert!((r.injection.detuning - (1e9 - offset)).abs() < 1e-3);
        assert!((r.effective_detuning().unwrap() - 1e9).abs() < 1e-3);
        assert_eq!(r.primary_reference, 6.0 * r.primary.threshold_current());
    }

    #[test]
    fn free_running_scenarios_switch_injection_off() {
        let r = parse(r#"{"scenario": "qrng:delayed"}"#).resolve().unwrap();
        assert!(!r.injection.is_active());
    }

    #[test]
    fn canonical_form_ignores_the_output_directory() {
        let a = parse(r#"{"scenario": "gain_switch", "output_dir": "x"}"#);
        let b = parse(r#"{"scenario": "gain_switch"}"#);
        assert_eq!(a.canonical_json(), b.canonical_json());
        assert_eq!(RunConfig::from_json(&a.canonical_json(), "c").unwrap(), b);
    }

    #[test]
    fn noise_seeds_differ_by_component() {
        let cfg = parse(r#"{"scenario": "cw_seed", "seed": 9}"#);
        let p = LaserParams::typical_dfb();
        let a = cfg.noise_for(&p, "primary");
        let b = cfg.noise_for(&p, "secondary");
        assert_ne!(a.seed, b.seed);
        assert_eq!(a.seed, derive_seed(9, "primary"));
    }
}
