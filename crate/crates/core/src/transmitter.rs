//! Primary and secondary lasers integrated in lockstep.
//!
//! Long pulse trains do not fit in memory as full trajectories, so the
//! runner hands every step to an observer that keeps only what it needs.

use num_complex::Complex64;

use crate::drive::ClockConfig;
use crate::dynamics::{InitialState, Laser, NoiseConfig, SimState};
use crate::error::{Error, Result};
use crate::injection::{InjectedLaser, InjectedSample, InjectionConfig};
use crate::measurement::PulseAccumulator;
use crate::params::LaserParams;
use crate::waveform::DriveWaveform;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserSetup {
    pub params: LaserParams,
    pub noise: NoiseConfig,
    pub init: InitialState,
}

impl LaserSetup {
    pub fn new(params: LaserParams, noise: NoiseConfig) -> Self {
        LaserSetup {
            params,
            noise,
            init: InitialState::Auto,
        }
    }
}

/// Everything known at one step, before it is taken.
#[derive(Debug, Clone, Copy)]
pub struct StepView {
    pub index: usize,
    pub primary_current: f64,
    pub secondary_current: f64,
    pub primary: SimState,
    pub secondary: SimState,
    pub psi: f64,
}

/// Runs the secondary under injection from the primary. Without a primary
/// drive the secondary runs free and the primary state stays at zero.
pub fn run_transmitter<F>(
    primary_drive: Option<&DriveWaveform>,
    secondary_drive: &DriveWaveform,
    primary: &LaserSetup,
    secondary: &LaserSetup,
    cfg: &InjectionConfig,
    mut observer: F,
) -> Result<()>
where
    F: FnMut(&StepView),
{
    let dt = secondary_drive.dt();
    let mut prim = match primary_drive {
        Some(d) => {
            if (d.dt() - dt).abs() > 1e-9 * dt {
                return Err(Error::Alignment(format!(
                    "primary dt {} differs from secondary dt {dt}",
                    d.dt()
                )));
            }
            if d.len() < secondary_drive.len() {
                return Err(Error::Alignment(format!(
                    "primary drive covers {} samples, secondary needs {}",
                    d.len(),
                    secondary_drive.len()
                )));
            }
            Some((
                Laser::start(primary.params, dt, primary.init, d.first(), primary.noise)?,
                d.iter(),
            ))
        }
        None => None,
    };
    let cfg = if prim.is_some() { *cfg } else { InjectionConfig::disabled() };
    let sec = Laser::start(
        secondary.params,
        dt,
        secondary.init,
        secondary_drive.first(),
        secondary.noise,
    )?;
    let p0 = prim.as_ref().map(|p| p.0.state().phase).unwrap_or(0.0);
    let mut sec = InjectedLaser::new(sec, cfg, p0)?;
    let dark = SimState::new(0.0, 0.0, 0.0);
    for (k, i_s) in secondary_drive.iter().enumerate() {
        let (i_p, ps) = match prim.as_mut() {
            Some((l, it)) => (it.next().unwrap_or(0.0), l.state()),
            None => (0.0, dark),
        };
        observer(&StepView {
            index: k,
            primary_current: i_p,
            secondary_current: i_s,
            primary: ps,
            secondary: sec.state(),
            psi: sec.psi(),
        });
        let inj = match prim.as_mut() {
            Some((l, _)) => {
                let next = l.step(i_p)?;
                InjectedSample {
                    photon_density: cfg.efficiency * ps.photon_density,
                    phase_increment: next.phase - ps.phase,
                }
            }
            None => InjectedSample {
                photon_density: 0.0,
                phase_increment: 0.0,
            },
        };
        sec.step(i_s, inj)?;
    }
    Ok(())
}

/// Windowed pulse amplitudes of both lasers.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrains {
    pub secondary: Vec<Complex64>,
    pub primary: Vec<Complex64>,
}

/// Runs the transmitter and reduces it to pulse amplitudes on the clock's
/// detection windows.
pub fn pulse_trains(
    clock: &ClockConfig,
    primary_drive: Option<&DriveWaveform>,
    secondary_drive: &DriveWaveform,
    primary: &LaserSetup,
    secondary: &LaserSetup,
    cfg: &InjectionConfig,
) -> Result<PulseTrains> {
    let mut acc_s = PulseAccumulator::new(clock)?;
    let mut acc_p = PulseAccumulator::new(clock)?;
    run_transmitter(primary_drive, secondary_drive, primary, secondary, cfg, |v| {
        acc_s.push(v.index, v.secondary.photon_density, v.secondary.phase);
        acc_p.push(v.index, v.primary.photon_density, v.primary.phase);
    })?;
    Ok(PulseTrains {
        secondary: acc_s.into_amplitudes(),
        primary: acc_p.into_amplitudes(),
    })
}
