//! Optical injection locking of a secondary laser by a primary laser.
//!
//! The secondary obeys the free-running rate equations plus two coupling
//! terms driven by the injected photon density and phase. Instead of the raw
//! phase difference the integrator carries
//! `psi = phi - phi_inj - detuning * t`, which stays bounded while locked and
//! keeps the trigonometric arguments small.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{steady_state, Coupling, InitialState, Laser, NoiseConfig, SimState, Trajectory};
use crate::error::{Error, Result};
use crate::params::LaserParams;
use crate::rng::SimRng;
use crate::waveform::DriveWaveform;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionConfig {
    /// Coupling rate [s^-1].
    pub coupling: f64,
    /// Primary minus secondary angular frequency, both taken at their
    /// threshold reference frequencies [rad/s].
    pub detuning: f64,
    /// Fraction of the primary photon density reaching the secondary cavity.
    pub efficiency: f64,
}

impl InjectionConfig {
    pub fn new(coupling: f64, detuning: f64, efficiency: f64) -> Result<Self> {
        let c = InjectionConfig {
            coupling,
            detuning,
            efficiency,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn disabled() -> Self {
        InjectionConfig {
            coupling: 0.0,
            detuning: 0.0,
            efficiency: 0.0,
        }
    }

    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        if !(self.coupling.is_finite() && self.coupling >= 0.0) {
            v.push(("coupling", format!("must be finite and >= 0, got {}", self.coupling)));
        }
        if !self.detuning.is_finite() {
            v.push(("detuning", format!("must be finite, got {}", self.detuning)));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            v.push(("efficiency", format!("must lie in [0, 1], got {}", self.efficiency)));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some((k, m)) => Err(Error::param(k, m)),
        }
    }

    pub fn is_active(&self) -> bool {
        self.coupling > 0.0 && self.efficiency > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockingRange {
    pub omega_min: f64,
    pub omega_max: f64,
}

impl LockingRange {
    pub fn contains(&self, detuning: f64) -> bool {
        self.omega_min < detuning && detuning < self.omega_max
    }
}

/// Stable-locking detuning interval for an injected-to-free-running power
/// ratio. The lower edge is wider by `sqrt(1 + alpha^2)`.
pub fn locking_range(params: &LaserParams, cfg: &InjectionConfig, ratio: f64) -> Result<LockingRange> {
    if !(ratio.is_finite() && ratio >= 0.0) {
        return Err(Error::param("ratio", format!("must be >= 0, got {ratio}")));
    }
    let up = cfg.coupling * ratio.sqrt();
    let a = params.linewidth_enhancement;
    Ok(LockingRange {
        omega_min: -(1.0 + a * a).sqrt() * up,
        omega_max: up,
    })
}

/// Injected-to-free-running photon density ratio for CW operation of both
/// lasers at the given currents.
pub fn injection_ratio(
    primary: &LaserParams,
    primary_current: f64,
    secondary: &LaserParams,
    secondary_current: f64,
    efficiency: f64,
) -> Result<f64> {
    let sp = steady_state(primary_current, primary, primary.one_photon_density())?;
    let ss = steady_state(secondary_current, secondary, secondary.one_photon_density())?;
    Ok(efficiency * sp.photon_density / ss.photon_density)
}

/// Free-running CW angular frequency offset [rad/s] from the threshold
/// reference frame, from the steady state at `current`.
pub fn steady_frequency_offset(params: &LaserParams, current: f64) -> Result<f64> {
    let s = steady_state(current, params, params.one_photon_density())?;
    let r = crate::dynamics::derivatives(&s, current, params)?;
    Ok(r.phase)
}

/// Wrap to (-pi, pi]. Values within a few ulps above pi are read as pi.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y - PI > 8.0 * f64::EPSILON * PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Differential phase between successive secondary pulses spaced by
/// `period`, accumulated by a residual angular frequency offset.
pub fn predicted_differential_phase(detuning: f64, period: f64) -> Result<f64> {
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::param("period", format!("must be > 0, got {period}")));
    }
    Ok(wrap_phase(detuning * period))
}

/// Injected density and phase at step `k` of a primary run.
pub fn injected_field(primary: &Trajectory, cfg: &InjectionConfig, k: usize) -> Result<(f64, f64)> {
    if k >= primary.len() {
        return Err(Error::Alignment(format!(
            "step {k} beyond primary trajectory of {} samples",
            primary.len()
        )));
    }
    Ok((cfg.efficiency * primary.photon_density[k], primary.phase[k]))
}

/// Secondary laser state together with the locking phase `psi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OilState {
    pub laser: SimState,
    pub psi: f64,
}

/// The injected field seen over one step: density at the step start and the
/// primary phase advance across the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectedSample {
    pub photon_density: f64,
    pub phase_increment: f64,
}

#[inline]
fn coupling_terms(s: f64, psi: f64, s_inj: f64, kappa: f64) -> Coupling {
    if s_inj <= 0.0 || kappa == 0.0 {
        return Coupling::default();
    }
    let (sin, cos) = psi.sin_cos();
    Coupling {
        photon: 2.0 * kappa * (s_inj * s).sqrt() * cos,
        phase: -kappa * (s_inj / s).sqrt() * sin,
    }
}

/// One Euler-Maruyama step of the injected secondary.
#[allow(clippy::too_many_arguments)]
pub fn oil_step(
    state: &OilState,
    current: f64,
    params: &LaserParams,
    dt: f64,
    inj: InjectedSample,
    cfg: &InjectionConfig,
    noise: &NoiseConfig,
    rng: &mut SimRng,
) -> Result<OilState> {
    if !(inj.photon_density.is_finite() && inj.photon_density >= 0.0) {
        return Err(Error::param(
            "injected photon density",
            format!("must be >= 0, got {}", inj.photon_density),
        ));
    }
    let c = coupling_terms(state.laser.photon_density, state.psi, inj.photon_density, cfg.coupling);
    let (laser, rate) = crate::dynamics::advance(&state.laser, current, params, dt, noise, rng, c, 0)?;
    Ok(OilState {
        laser,
        psi: state.psi + dt * (rate - cfg.detuning) - inj.phase_increment,
    })
}

/// Streaming integrator for an injected secondary laser.
#[derive(Debug, Clone)]
pub struct InjectedLaser {
    laser: Laser,
    cfg: InjectionConfig,
    psi: f64,
}

impl InjectedLaser {
    /// `psi` starts at the phase difference between the two initial states.
    pub fn new(laser: Laser, cfg: InjectionConfig, primary_phase: f64) -> Result<Self> {
        cfg.validate()?;
        let psi = laser.state().phase - primary_phase;
        Ok(InjectedLaser { laser, cfg, psi })
    }

    pub fn state(&self) -> SimState {
        self.laser.state()
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn config(&self) -> &InjectionConfig {
        &self.cfg
    }

    pub fn laser(&self) -> &Laser {
        &self.laser
    }

    pub fn step(&mut self, current: f64, inj: InjectedSample) -> Result<SimState> {
        let s = self.laser.state().photon_density;
        let c = coupling_terms(s, self.psi, inj.photon_density, self.cfg.coupling);
        let (next, rate) = self.laser.step_coupled(current, c)?;
        self.psi += self.laser.dt() * (rate - self.cfg.detuning) - inj.phase_increment;
        Ok(next)
    }
}

/// Secondary trajectory under injection, with the locking phase series.
#[derive(Debug, Clone)]
pub struct InjectedTrajectory {
    pub trajectory: Trajectory,
    pub psi: Vec<f64>,
    pub config: InjectionConfig,
}

/// Integrates the secondary against a stored primary run sharing dt and
/// time origin.
pub fn simulate_injected(
    primary: &Trajectory,
    drive: &DriveWaveform,
    params: &LaserParams,
    cfg: &InjectionConfig,
    init: InitialState,
    noise: &NoiseConfig,
) -> Result<InjectedTrajectory> {
    cfg.validate()?;
    if (primary.dt - drive.dt()).abs() > 1e-9 * drive.dt() {
        return Err(Error::Alignment(format!(
            "primary dt {} differs from secondary dt {}",
            primary.dt,
            drive.dt()
        )));
    }
    if primary.len() < drive.len() {
        return Err(Error::Alignment(format!(
            "primary covers {} samples, secondary drive needs {}",
            primary.len(),
            drive.len()
        )));
    }
    let laser = Laser::start(*params, drive.dt(), init, drive.first(), *noise)?;
    let mut oil = InjectedLaser::new(laser, *cfg, primary.phase[0])?;
    let mut traj = Trajectory::with_capacity(*params, drive.dt(), noise.seed, drive.len());
    let mut psi = Vec::with_capacity(drive.len());
    for (k, i) in drive.iter().enumerate() {
        traj.push(i, &oil.state());
        psi.push(oil.psi());
        let (s_inj, phi) = injected_field(primary, cfg, k)?;
        let next_phi = primary.phase.get(k + 1).copied().unwrap_or(phi);
        oil.step(
            i,
            InjectedSample {
                photon_density: s_inj,
                phase_increment: next_phi - phi,
            },
        )?;
    }
    Ok(InjectedTrajectory {
        trajectory: traj,
        psi,
        config: *cfg,
    })
}

/// Whole `2 pi` slips of a locking-phase record: net drift between the first
/// and last sample, in turns, rounded toward zero.
pub fn phase_slips(psi: &[f64]) -> usize {
    match (psi.first(), psi.last()) {
        (Some(a), Some(b)) => ((b - a).abs() / (2.0 * PI)).floor() as usize,
        _ => 0,
    }
}

/// Peak-to-peak excursion of a locking-phase record [rad].
pub fn phase_span(psi: &[f64]) -> f64 {
    let (lo, hi) = psi
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if psi.is_empty() {
        0.0
    } else {
        hi - lo
    }
}
