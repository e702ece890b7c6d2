//! Physical parameters of a single-mode laser diode.
//!
//! Everything is stored in SI units. The [`CgsParams`] form mirrors the way
//! rate-equation parameters are usually tabulated (cm^3, ns, ps) and exists
//! only to ingest such tables without hand-converting volumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Elementary charge [C].
pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant [J s].
pub const PLANCK: f64 = 6.626_070_15e-34;

const CM3: f64 = 1e-6;
const PER_CM3: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserParams {
    /// Carrier lifetime [s].
    pub carrier_lifetime: f64,
    /// Photon lifetime [s].
    pub photon_lifetime: f64,
    /// Differential gain coefficient [m^3 s^-1].
    pub differential_gain: f64,
    /// Gain compression factor [m^3].
    pub gain_compression: f64,
    /// Carrier density at transparency [m^-3].
    pub transparency_density: f64,
    /// Fraction of spontaneous emission coupled into the lasing mode.
    pub spontaneous_coupling: f64,
    /// Linewidth enhancement factor.
    pub linewidth_enhancement: f64,
    /// Differential quantum efficiency.
    pub quantum_efficiency: f64,
    /// Active layer volume [m^3].
    pub active_volume: f64,
    /// Mode confinement factor.
    pub confinement: f64,
    /// Center optical frequency [Hz].
    pub optical_frequency: f64,
    /// Optical injection coupling rate [s^-1].
    pub injection_coupling: f64,
}

/// The same parameters in tabulated laboratory units. Missing fields take
/// their typical DFB value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CgsParams {
    pub tau_n_ns: f64,
    pub tau_p_ps: f64,
    pub gain_cm3_per_s: f64,
    pub eps_cm3: f64,
    pub n0_per_cm3: f64,
    pub beta: f64,
    pub alpha: f64,
    pub eta: f64,
    pub volume_cm3: f64,
    pub confinement: f64,
    pub frequency_hz: f64,
    pub kappa_per_s: f64,
}

impl CgsParams {
    /// Typical DFB values (1550 nm band) used throughout the examples and
    /// recipes, with the optical frequency at 193.4 THz.
    pub fn typical_dfb() -> Self {
        CgsParams {
            tau_n_ns: 0.74,
            tau_p_ps: 0.74,
            gain_cm3_per_s: 1.27e-6,
            eps_cm3: 1.18e-17,
            n0_per_cm3: 0.85e18,
            beta: 0.50e-5,
            alpha: 2.7,
            eta: 0.20,
            volume_cm3: 1.72e-11,
            confinement: 0.27,
            frequency_hz: 193.4e12,
            kappa_per_s: 1.13e11,
        }
    }
}

impl Default for CgsParams {
    fn default() -> Self {
        CgsParams::typical_dfb()
    }
}

/// Laboratory-unit key of a [`LaserParams`] field.
pub fn cgs_key(field: &str) -> &str {
    match field {
        "carrier_lifetime" => "tau_n_ns",
        "photon_lifetime" => "tau_p_ps",
        "differential_gain" => "gain_cm3_per_s",
        "gain_compression" => "eps_cm3",
        "transparency_density" => "n0_per_cm3",
        "spontaneous_coupling" => "beta",
        "linewidth_enhancement" => "alpha",
        "quantum_efficiency" => "eta",
        "active_volume" => "volume_cm3",
        "optical_frequency" => "frequency_hz",
        "injection_coupling" => "kappa_per_s",
        other => other,
    }
}

impl From<CgsParams> for LaserParams {
    fn from(c: CgsParams) -> Self {
        LaserParams {
            carrier_lifetime: c.tau_n_ns * 1e-9,
            photon_lifetime: c.tau_p_ps * 1e-12,
            differential_gain: c.gain_cm3_per_s * CM3,
            gain_compression: c.eps_cm3 * CM3,
            transparency_density: c.n0_per_cm3 * PER_CM3,
            spontaneous_coupling: c.beta,
            linewidth_enhancement: c.alpha,
            quantum_efficiency: c.eta,
            active_volume: c.volume_cm3 * CM3,
            confinement: c.confinement,
            optical_frequency: c.frequency_hz,
            injection_coupling: c.kappa_per_s,
        }
    }
}

impl From<LaserParams> for CgsParams {
    fn from(p: LaserParams) -> Self {
        CgsParams {
            tau_n_ns: p.carrier_lifetime / 1e-9,
            tau_p_ps: p.photon_lifetime / 1e-12,
            gain_cm3_per_s: p.differential_gain / CM3,
            eps_cm3: p.gain_compression / CM3,
            n0_per_cm3: p.transparency_density / PER_CM3,
            beta: p.spontaneous_coupling,
            alpha: p.linewidth_enhancement,
            eta: p.quantum_efficiency,
            volume_cm3: p.active_volume / CM3,
            confinement: p.confinement,
            frequency_hz: p.optical_frequency,
            kappa_per_s: p.injection_coupling,
        }
    }
}

/// A single violated invariant, keyed by the field name.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl LaserParams {
    pub fn typical_dfb() -> Self {
        CgsParams::typical_dfb().into()
    }

    pub fn from_cgs(cgs: CgsParams) -> Result<Self> {
        let p = LaserParams::from(cgs);
        p.validate()?;
        Ok(p)
    }

    pub fn to_cgs(&self) -> CgsParams {
        (*self).into()
    }

    /// Every invariant this parameter set breaks. Empty means valid.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut check = |field: &'static str, value: f64, ok: bool, rule: &str| {
            if !value.is_finite() {
                out.push(Violation {
                    field,
                    message: format!("must be finite, got {value}"),
                });
            } else if !ok {
                out.push(Violation {
                    field,
                    message: format!("{rule}, got {value}"),
                });
            }
        };
        let p = self;
        check("carrier_lifetime", p.carrier_lifetime, p.carrier_lifetime > 0.0, "must be > 0");
        check("photon_lifetime", p.photon_lifetime, p.photon_lifetime > 0.0, "must be > 0");
        check("differential_gain", p.differential_gain, p.differential_gain > 0.0, "must be > 0");
        check("gain_compression", p.gain_compression, p.gain_compression >= 0.0, "must be >= 0");
        check(
            "transparency_density",
            p.transparency_density,
            p.transparency_density >= 0.0,
            "must be >= 0",
        );
        check(
            "spontaneous_coupling",
            p.spontaneous_coupling,
            (0.0..=1.0).contains(&p.spontaneous_coupling),
            "must lie in [0, 1]",
        );
        check("linewidth_enhancement", p.linewidth_enhancement, true, "");
        check(
            "quantum_efficiency",
            p.quantum_efficiency,
            p.quantum_efficiency > 0.0 && p.quantum_efficiency <= 1.0,
            "must lie in (0, 1]",
        );
        check("active_volume", p.active_volume, p.active_volume > 0.0, "must be > 0");
        check(
            "confinement",
            p.confinement,
            p.confinement > 0.0 && p.confinement <= 1.0,
            "must lie in (0, 1]",
        );
        check("optical_frequency", p.optical_frequency, p.optical_frequency > 0.0, "must be > 0");
        check(
            "injection_coupling",
            p.injection_coupling,
            p.injection_coupling >= 0.0,
            "must be >= 0",
        );
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::param(v.field, v.message)),
        }
    }

    /// Carrier density at which modal gain balances cavity loss, ignoring
    /// gain compression and spontaneous emission.
    pub fn threshold_density(&self) -> f64 {
        self.transparency_density
            + 1.0 / (self.confinement * self.differential_gain * self.photon_lifetime)
    }

    /// Approximate threshold current `q V N_th / tau_n`. Gain compression and
    /// the spontaneous-emission fraction are neglected, so this is meant for
    /// designing drive levels rather than as an exact lasing onset.
    pub fn threshold_current(&self) -> f64 {
        ELECTRON_CHARGE * self.active_volume * self.threshold_density() / self.carrier_lifetime
    }

    /// Photon energy `h nu` [J].
    pub fn photon_energy(&self) -> f64 {
        PLANCK * self.optical_frequency
    }

    /// Output power per unit photon density [W m^3].
    pub fn power_per_density(&self) -> f64 {
        self.active_volume * self.quantum_efficiency * self.photon_energy()
            / (2.0 * self.confinement * self.photon_lifetime)
    }

    /// Photon-density floor of one photon in the cavity volume.
    pub fn one_photon_density(&self) -> f64 {
        1.0 / self.active_volume
    }
}

/// Optical output power for a photon density: `P = V eta h nu S / (2 Gamma tau_p)`.
pub fn output_power(photon_density: f64, params: &LaserParams) -> f64 {
    params.power_per_density() * photon_density
}

pub fn threshold_current(params: &LaserParams) -> f64 {
    params.threshold_current()
}
