//! Single-mode rate equations with Langevin noise.
//!
//! The state is carrier density `N`, photon density `S` and optical phase
//! `phi`, the latter measured in the frame rotating at the laser's threshold
//! frequency. Integration is explicit Euler-Maruyama on a fixed grid.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{LaserParams, ELECTRON_CHARGE};
use crate::rng::{rng_from_seed, SimRng};
use crate::waveform::DriveWaveform;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    /// Carrier density [m^-3].
    pub carrier_density: f64,
    /// Photon density [m^-3].
    pub photon_density: f64,
    /// Unwrapped optical phase [rad].
    pub phase: f64,
}

impl SimState {
    pub fn new(carrier_density: f64, photon_density: f64, phase: f64) -> Self {
        SimState {
            carrier_density,
            photon_density,
            phase,
        }
    }

    fn check_finite(&self, context: &'static str) -> Result<()> {
        for (q, v) in [
            ("carrier density", self.carrier_density),
            ("photon density", self.photon_density),
            ("phase", self.phase),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite { quantity: q, context });
            }
        }
        Ok(())
    }
}

/// Deterministic right-hand sides of the rate equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub carrier: f64,
    pub photon: f64,
    pub phase: f64,
}

/// One realisation of the Langevin forces, already divided by `sqrt(dt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LangevinForces {
    pub carrier: f64,
    pub photon: f64,
    pub phase: f64,
}

impl LangevinForces {
    pub const ZERO: LangevinForces = LangevinForces {
        carrier: 0.0,
        photon: 0.0,
        phase: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub enabled: bool,
    pub seed: u64,
    /// Lower clamp on photon density [m^-3].
    pub photon_floor: f64,
    /// Multiplies every Langevin coefficient. 1 is the physical model.
    #[serde(default = "unit_scale")]
    pub langevin_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl NoiseConfig {
    /// Noise on, floor at one photon per cavity volume.
    pub fn on(params: &LaserParams, seed: u64) -> Self {
        NoiseConfig {
            enabled: true,
            seed,
            photon_floor: params.one_photon_density(),
            langevin_scale: 1.0,
        }
    }

    pub fn off(params: &LaserParams) -> Self {
        NoiseConfig {
            enabled: false,
            seed: 0,
            photon_floor: params.one_photon_density(),
            langevin_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.photon_floor.is_finite() && self.photon_floor > 0.0) {
            return Err(Error::param(
                "photon_floor",
                format!("must be finite and > 0, got {}", self.photon_floor),
            ));
        }
        if !(self.langevin_scale.is_finite() && self.langevin_scale >= 0.0) {
            return Err(Error::param(
                "langevin_scale",
                format!("must be finite and >= 0, got {}", self.langevin_scale),
            ));
        }
        Ok(())
    }
}

#[inline]
fn gain_excess(state: &SimState, p: &LaserParams) -> f64 {
    p.differential_gain * (state.carrier_density - p.transparency_density)
}

#[inline]
fn rates_unchecked(state: &SimState, current: f64, p: &LaserParams) -> Rates {
    let n = state.carrier_density;
    let s = state.photon_density;
    let g = gain_excess(state, p);
    let stim = g * s / (1.0 + p.gain_compression * s);
    let spont = n / p.carrier_lifetime;
    Rates {
        carrier: current / (ELECTRON_CHARGE * p.active_volume) - spont - stim,
        photon: p.confinement * stim - s / p.photon_lifetime
            + p.confinement * p.spontaneous_coupling * spont,
        phase: 0.5 * p.linewidth_enhancement * (p.confinement * g - 1.0 / p.photon_lifetime),
    }
}

/// Deterministic rates `(dN/dt, dS/dt, dphi/dt)` at a state and pump current.
pub fn derivatives(state: &SimState, current: f64, params: &LaserParams) -> Result<Rates> {
    state.check_finite("derivatives")?;
    if !current.is_finite() {
        return Err(Error::NonFinite {
            quantity: "current",
            context: "derivatives",
        });
    }
    Ok(rates_unchecked(state, current, params))
}

/// Standard deviations of the Langevin forces for unit normal draws.
#[inline]
fn langevin_coefficients(state: &SimState, p: &LaserParams, dt: f64) -> (f64, f64, f64) {
    let n = state.carrier_density;
    let s = state.photon_density;
    let gb = p.confinement * p.spontaneous_coupling * n / p.carrier_lifetime;
    let photon = (2.0 * gb * s / dt).sqrt();
    let phase = (gb / (2.0 * s * dt)).sqrt();
    let carrier = (2.0 * n / (p.active_volume * p.carrier_lifetime * dt)).sqrt();
    (photon, phase, carrier)
}

/// Draws the three unit normals in the fixed order photon, phase, carrier
/// and assembles the forces. The carrier force is the uncorrelated
/// contribution minus the photon force over the confinement factor.
pub fn langevin_increments(
    state: &SimState,
    params: &LaserParams,
    dt: f64,
    rng: &mut SimRng,
) -> LangevinForces {
    draw_forces(state, params, dt, 1.0, rng)
}

#[inline]
fn draw_forces(
    state: &SimState,
    p: &LaserParams,
    dt: f64,
    scale: f64,
    rng: &mut SimRng,
) -> LangevinForces {
    let x_s: f64 = StandardNormal.sample(rng);
    let x_phi: f64 = StandardNormal.sample(rng);
    let x_z: f64 = StandardNormal.sample(rng);
    let (cs, cphi, cz) = langevin_coefficients(state, p, dt);
    let photon = scale * cs * x_s;
    let phase = scale * cphi * x_phi;
    let z = scale * cz * x_z;
    LangevinForces {
        carrier: z - photon / p.confinement,
        photon,
        phase,
    }
}

/// Extra photon and phase rates added on top of the free-running model,
/// used by the injection-locking extension.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Coupling {
    pub photon: f64,
    pub phase: f64,
}

/// One Euler-Maruyama step. Returns the new state and the total phase rate
/// that was applied, including noise and coupling.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn advance(
    state: &SimState,
    current: f64,
    p: &LaserParams,
    dt: f64,
    noise: &NoiseConfig,
    rng: &mut SimRng,
    coupling: Coupling,
    index: usize,
) -> Result<(SimState, f64)> {
    let r = rates_unchecked(state, current, p);
    let f = if noise.enabled {
        draw_forces(state, p, dt, noise.langevin_scale, rng)
    } else {
        LangevinForces::ZERO
    };
    let phase_rate = (r.phase + f.phase) + coupling.phase;
    let n = state.carrier_density + dt * (r.carrier + f.carrier);
    let s = state.photon_density + dt * ((r.photon + f.photon) + coupling.photon);
    let phi = state.phase + dt * phase_rate;
    for (quantity, value) in [("carrier density", n), ("photon density", s), ("phase", phi)] {
        if !value.is_finite() {
            return Err(Error::IntegrationBlowup {
                step: index,
                quantity,
                value,
            });
        }
    }
    Ok((
        SimState {
            carrier_density: n.max(0.0),
            photon_density: s.max(noise.photon_floor),
            phase: phi,
        },
        phase_rate,
    ))
}

/// A single free-running step. Blowups report step index 0; use [`Laser`]
/// to get the running index.
pub fn step(
    state: &SimState,
    current: f64,
    params: &LaserParams,
    dt: f64,
    noise: &NoiseConfig,
    rng: &mut SimRng,
) -> Result<SimState> {
    state.check_finite("step")?;
    advance(state, current, params, dt, noise, rng, Coupling::default(), 0).map(|(s, _)| s)
}

/// Output power [W] for a photon density.
pub fn output_power(photon_density: f64, params: &LaserParams) -> f64 {
    crate::params::output_power(photon_density, params)
}

/// Noise-free steady state at constant current.
///
/// Below the approximate threshold the cavity holds the photon floor and the
/// carriers sit at `I tau_n / (q V)`. Above it, the photon balance is solved
/// by bisection on `S` with `N` eliminated through the carrier equation.
pub fn steady_state(current: f64, params: &LaserParams, photon_floor: f64) -> Result<SimState> {
    if !(current.is_finite() && current >= 0.0) {
        return Err(Error::param("current", format!("must be >= 0, got {current}")));
    }
    let p = params;
    let qv = ELECTRON_CHARGE * p.active_volume;
    if current < p.threshold_current() {
        return Ok(SimState::new(
            current * p.carrier_lifetime / qv,
            photon_floor,
            0.0,
        ));
    }
    let pump = current / qv;
    let carriers = |s: f64| {
        p.carrier_lifetime * (pump - s / (p.confinement * p.photon_lifetime))
            / (1.0 - p.spontaneous_coupling)
    };
    // Photon balance with N(S) substituted. Positive at S -> 0, negative
    // where the carriers are exhausted.
    let balance = |s: f64| {
        let n = carriers(s);
        p.confinement * p.differential_gain * (n - p.transparency_density) * s
            / (1.0 + p.gain_compression * s)
            - s / p.photon_lifetime
            + p.confinement * p.spontaneous_coupling * n / p.carrier_lifetime
    };
    let mut lo = 0.0_f64;
    let mut hi = p.confinement * p.photon_lifetime * pump;
    const MAX_ITER: usize = 100_000;
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if balance(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            let s = 0.5 * (lo + hi);
            return Ok(SimState::new(carriers(s), s.max(photon_floor), 0.0));
        }
    }
    Err(Error::SteadyState {
        iterations: MAX_ITER,
    })
}

/// Time series of one run. Sample `k` holds the state at `t0 + k dt`, before
/// the drive sample `k` is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub t0: f64,
    pub current: Vec<f64>,
    pub carrier_density: Vec<f64>,
    pub photon_density: Vec<f64>,
    pub phase: Vec<f64>,
    pub power: Vec<f64>,
    pub seed: u64,
    pub params: LaserParams,
}

impl Trajectory {
    pub fn with_capacity(params: LaserParams, dt: f64, seed: u64, n: usize) -> Self {
        Trajectory {
            dt,
            t0: 0.0,
            current: Vec::with_capacity(n),
            carrier_density: Vec::with_capacity(n),
            photon_density: Vec::with_capacity(n),
            phase: Vec::with_capacity(n),
            power: Vec::with_capacity(n),
            seed,
            params,
        }
    }

    pub fn push(&mut self, current: f64, s: &SimState) {
        self.current.push(current);
        self.carrier_density.push(s.carrier_density);
        self.photon_density.push(s.photon_density);
        self.phase.push(s.phase);
        self.power.push(output_power(s.photon_density, &self.params));
    }

    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn state(&self, k: usize) -> SimState {
        SimState::new(self.carrier_density[k], self.photon_density[k], self.phase[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    /// Noise-free steady state at the first drive sample.
    Auto,
    Given(SimState),
}

/// Stateful integrator for streaming long runs without storing them.
#[derive(Debug, Clone)]
pub struct Laser {
    params: LaserParams,
    dt: f64,
    noise: NoiseConfig,
    rng: SimRng,
    state: SimState,
    index: usize,
}

impl Laser {
    pub fn new(params: LaserParams, dt: f64, init: SimState, noise: NoiseConfig) -> Result<Self> {
        params.validate()?;
        noise.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("must be > 0, got {dt}")));
        }
        init.check_finite("Laser::new")?;
        let state = SimState {
            carrier_density: init.carrier_density.max(0.0),
            photon_density: init.photon_density.max(noise.photon_floor),
            phase: init.phase,
        };
        Ok(Laser {
            params,
            dt,
            noise,
            rng: rng_from_seed(noise.seed),
            state,
            index: 0,
        })
    }

    /// Starts from `init`, resolving [`InitialState::Auto`] at `first_current`.
    pub fn start(
        params: LaserParams,
        dt: f64,
        init: InitialState,
        first_current: f64,
        noise: NoiseConfig,
    ) -> Result<Self> {
        let s0 = match init {
            InitialState::Given(s) => s,
            InitialState::Auto => steady_state(first_current, &params, noise.photon_floor)?,
        };
        Laser::new(params, dt, s0, noise)
    }

    pub fn params(&self) -> &LaserParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn state(&self) -> SimState {
        self.state
    }

    pub fn steps_taken(&self) -> usize {
        self.index
    }

    pub fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    pub fn step(&mut self, current: f64) -> Result<SimState> {
        self.step_coupled(current, Coupling::default()).map(|(s, _)| s)
    }

    pub(crate) fn step_coupled(&mut self, current: f64, coupling: Coupling) -> Result<(SimState, f64)> {
        let (next, phase_rate) = advance(
            &self.state,
            current,
            &self.params,
            self.dt,
            &self.noise,
            &mut self.rng,
            coupling,
            self.index,
        )?;
        self.state = next;
        self.index += 1;
        Ok((next, phase_rate))
    }

    /// Steps through a drive, handing each pre-step state to `sink` as
    /// `(index, current, state)`.
    pub fn run<F>(&mut self, drive: &DriveWaveform, mut sink: F) -> Result<()>
    where
        F: FnMut(usize, f64, &SimState),
    {
        if (drive.dt() - self.dt).abs() > 1e-9 * self.dt {
            return Err(Error::Alignment(format!(
                "drive dt {} differs from integrator dt {}",
                drive.dt(),
                self.dt
            )));
        }
        for (k, i) in drive.iter().enumerate() {
            sink(k, i, &self.state);
            self.step(i)?;
        }
        Ok(())
    }
}

/// Integrates a whole drive and records every sample.
pub fn simulate(
    drive: &DriveWaveform,
    params: &LaserParams,
    init: InitialState,
    noise: &NoiseConfig,
) -> Result<Trajectory> {
    let mut laser = Laser::start(*params, drive.dt(), init, drive.first(), *noise)?;
    let mut traj = Trajectory::with_capacity(*params, drive.dt(), noise.seed, drive.len());
    laser.run(drive, |_, i, s| traj.push(i, s))?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> LaserParams {
        LaserParams::typical_dfb()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn spontaneous_term_only_at_transparency_and_dark() {
        let p = p();
        let s = SimState::new(p.transparency_density, 0.0, 0.0);
        let r = derivatives(&s, 0.0, &p).unwrap();
        let expect = p.confinement * p.spontaneous_coupling * p.transparency_density / p.carrier_lifetime;
        assert!(rel(r.photon, expect) < 1e-15);
    }

    #[test]
    fn phase_rate_vanishes_at_threshold_density() {
        let mut p = p();
        p.gain_compression = 0.0;
        let s = SimState::new(p.threshold_density(), 3.0e21, 0.0);
        let r = derivatives(&s, 0.02, &p).unwrap();
        assert!(r.phase.abs() < 1e-9 * (1.0 / p.photon_lifetime));
    }

    #[test]
    fn derivatives_golden_values() {
        // N = 4e18 cm^-3, S = 1e15 cm^-3, I = 30 mA, evaluated with 50-digit
        // mpmath from the same table values.
        let p = p();
        let s = SimState::new(4.0e24, 1.0e21, 0.0);
        let r = derivatives(&s, 30e-3, &p).unwrap();
        assert!(rel(r.carrier, GOLDEN_DN) < 1e-12, "{}", r.carrier);
        assert!(rel(r.photon, GOLDEN_DS) < 1e-12, "{}", r.photon);
        assert!(rel(r.phase, GOLDEN_DPHI) < 1e-12, "{}", r.phase);
    }

    const GOLDEN_DN: f64 = 1.527_102_998_118_017_5e33;
    const GOLDEN_DS: f64 = -2.838_060_030_558_330_6e32;
    const GOLDEN_DPHI: f64 = -3.661_420_743_243_243_2e11;

    #[test]
    fn derivatives_reject_non_finite() {
        let p = p();
        let s = SimState::new(f64::NAN, 1.0, 0.0);
        assert!(matches!(
            derivatives(&s, 0.0, &p),
            Err(Error::NonFinite { .. })
        ));
        let s = SimState::new(1.0, 1.0, 0.0);
        assert!(derivatives(&s, f64::INFINITY, &p).is_err());
    }

    #[test]
    fn zero_beta_kills_photon_and_phase_noise() {
        let mut p = p();
        p.spontaneous_coupling = 0.0;
        let mut rng = rng_from_seed(1);
        let s = SimState::new(4e24, 1e21, 0.0);
        for _ in 0..10 {
            let f = langevin_increments(&s, &p, 1e-13, &mut rng);
            assert_eq!(f.photon, 0.0);
            assert_eq!(f.phase, 0.0);
            assert!(f.carrier != 0.0);
        }
    }

    #[test]
    fn increments_are_reproducible() {
        let p = p();
        let s = SimState::new(4e24, 1e21, 0.0);
        let a = langevin_increments(&s, &p, 1e-13, &mut rng_from_seed(9));
        let b = langevin_increments(&s, &p, 1e-13, &mut rng_from_seed(9));
        assert_eq!(a, b);
    }

    #[test]
    fn zero_scale_reproduces_noise_off_bitwise() {
        let p = p();
        let drive = DriveWaveform::constant(1e-13, 2.0 * p.threshold_current(), 5000).unwrap();
        let off = NoiseConfig::off(&p);
        let mut zero = NoiseConfig::on(&p, 3);
        zero.langevin_scale = 0.0;
        let a = simulate(&drive, &p, InitialState::Auto, &off).unwrap();
        let b = simulate(&drive, &p, InitialState::Auto, &zero).unwrap();
        assert_eq!(a.photon_density, b.photon_density);
        assert_eq!(a.carrier_density, b.carrier_density);
        assert_eq!(a.phase, b.phase);
    }

    #[test]
    fn steady_state_is_a_fixed_point() {
        let p = p();
        let i = 3.0 * p.threshold_current();
        let s = steady_state(i, &p, p.one_photon_density()).unwrap();
        let r = derivatives(&s, i, &p).unwrap();
        assert!(r.carrier.abs() * p.carrier_lifetime < 1e-9 * s.carrier_density);
        assert!(r.photon.abs() * p.photon_lifetime < 1e-9 * s.photon_density);
    }

    #[test]
    fn below_threshold_start_uses_floor() {
        let p = p();
        let i = 0.5 * p.threshold_current();
        let s = steady_state(i, &p, p.one_photon_density()).unwrap();
        assert_eq!(s.photon_density, p.one_photon_density());
        assert!(rel(s.carrier_density, i * p.carrier_lifetime / (ELECTRON_CHARGE * p.active_volume)) < 1e-15);
    }

    #[test]
    fn photon_density_decays_when_pump_is_removed() {
        let mut p = p();
        p.spontaneous_coupling = 0.0;
        let ith = p.threshold_current();
        let init = steady_state(2.0 * ith, &p, p.one_photon_density()).unwrap();
        let drive = DriveWaveform::constant(1e-13, 0.0, 20_000).unwrap();
        let t = simulate(&drive, &p, InitialState::Given(init), &NoiseConfig::off(&p)).unwrap();
        let nth = p.threshold_density();
        let mut below = false;
        for k in 1..t.len() {
            if t.carrier_density[k - 1] < nth {
                below = true;
            }
            if below {
                assert!(t.photon_density[k] <= t.photon_density[k - 1]);
            }
        }
        assert!(below);
        assert!(t.photon_density[t.len() - 1] < 1e-3 * init.photon_density);
    }

    #[test]
    fn blowup_names_step_and_quantity() {
        let p = p();
        let mut laser = Laser::new(p, 1e-13, SimState::new(1e24, 1e21, 0.0), NoiseConfig::off(&p)).unwrap();
        laser.step(1e-3).unwrap();
        match laser.step(f64::INFINITY) {
            Err(Error::IntegrationBlowup { step, quantity, .. }) => {
                assert_eq!(step, 1);
                assert_eq!(quantity, "carrier density");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trajectory_power_matches_photon_density() {
        let p = p();
        let drive = DriveWaveform::constant(1e-13, 2.0 * p.threshold_current(), 100).unwrap();
        let t = simulate(&drive, &p, InitialState::Auto, &NoiseConfig::on(&p, 5)).unwrap();
        assert_eq!(t.len(), drive.len());
        for k in 0..t.len() {
            assert_eq!(t.power[k], output_power(t.photon_density[k], &p));
        }
        assert_eq!(t.seed, 5);
    }
}
