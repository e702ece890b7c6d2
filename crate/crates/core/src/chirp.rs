//! Frequency chirp of the emitted light.

use std::f64::consts::PI;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::params::LaserParams;

/// Central difference of a uniformly sampled series, one-sided at the ends.
fn derivative(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            if k == 0 {
                (x[1] - x[0]) / dt
            } else if k == n - 1 {
                (x[n - 1] - x[n - 2]) / dt
            } else {
                (x[k + 1] - x[k - 1]) / (2.0 * dt)
            }
        })
        .collect()
}

/// Instantaneous frequency offset `(1/2pi) dphi/dt` [Hz] of a trajectory.
pub fn instantaneous_chirp(traj: &Trajectory) -> Result<Vec<f64>> {
    phase_chirp(&traj.phase, traj.dt)
}

/// As [`instantaneous_chirp`] for a bare phase series.
pub fn phase_chirp(phase: &[f64], dt: f64) -> Result<Vec<f64>> {
    if phase.len() < 2 {
        return Err(Error::InsufficientData("chirp needs at least two samples".into()));
    }
    Ok(derivative(phase, dt)
        .into_iter()
        .map(|w| w / (2.0 * PI))
        .collect())
}

/// Chirp predicted from the output power alone, spontaneous emission
/// neglected: transient part from `d ln P / dt` plus the adiabatic part
/// proportional to `P`. Samples whose stencil touches a non-positive power
/// come back as `None`.
pub fn chirp_from_power(power: &[f64], dt: f64, params: &LaserParams) -> Result<Vec<Option<f64>>> {
    let n = power.len();
    if n < 2 {
        return Err(Error::InsufficientData("chirp needs at least two samples".into()));
    }
    let adiabatic = adiabatic_coefficient(params);
    let pref = params.linewidth_enhancement / (4.0 * PI);
    let ln = |k: usize| if power[k] > 0.0 { Some(power[k].ln()) } else { None };
    Ok((0..n)
        .map(|k| {
            let (a, b, span) = if k == 0 {
                (0, 1, dt)
            } else if k == n - 1 {
                (n - 2, n - 1, dt)
            } else {
                (k - 1, k + 1, 2.0 * dt)
            };
            if power[k] <= 0.0 {
                return None;
            }
            let d = (ln(b)? - ln(a)?) / span;
            Some(pref * (d + adiabatic * power[k]))
        })
        .collect())
}

/// `2 Gamma eps / (V eta h nu)` [1/(W s)].
pub fn adiabatic_coefficient(params: &LaserParams) -> f64 {
    2.0 * params.confinement * params.gain_compression
        / (params.active_volume * params.quantum_efficiency * params.photon_energy())
}

/// Adiabatic chirp [Hz] at a constant output power.
pub fn adiabatic_chirp(power: f64, params: &LaserParams) -> f64 {
    params.linewidth_enhancement / (4.0 * PI) * adiabatic_coefficient(params) * power
}
