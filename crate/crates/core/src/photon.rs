//! Photon-number statistics of weak coherent pulses.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// `cos(theta/2)|0> + e^{i varphi} sin(theta/2)|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    pub theta: f64,
    pub varphi: f64,
    pub c0: Complex64,
    pub c1: Complex64,
}

pub fn qubit_state(theta: f64, varphi: f64) -> Result<QubitState> {
    if !(theta.is_finite() && varphi.is_finite()) {
        return Err(Error::NonFinite {
            quantity: "angle",
            context: "qubit_state",
        });
    }
    Ok(QubitState {
        theta,
        varphi,
        c0: Complex64::new((theta / 2.0).cos(), 0.0),
        c1: Complex64::from_polar((theta / 2.0).sin(), varphi),
    })
}

impl QubitState {
    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &QubitState) -> Complex64 {
        self.c0.conj() * other.c0 + self.c1.conj() * other.c1
    }
}

fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `e^{-mu} mu^n / n!`, evaluated in log space.
pub fn poisson_pmf(n: usize, mu: f64) -> f64 {
    if mu == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (n as f64 * mu.ln() - mu - ln_factorial(n)).exp()
}

/// Truncation keeping the Poisson tail negligible.
pub fn default_truncation(mu: f64) -> usize {
    20usize.max((mu + 10.0 * mu.sqrt()).ceil() as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub amplitudes: Vec<Complex64>,
}

impl FockVector {
    pub fn n_max(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Probability outside the truncation.
    pub fn tail(&self) -> f64 {
        (1.0 - self.norm_sqr()).max(0.0)
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::param("mu", format!("must be finite and >= 0, got {mu}")));
    }
    Ok(())
}

/// Coherent state of mean photon number `mu` and phase `phase` in the
/// Fock basis up to `n_max`.
pub fn coherent_fock(mu: f64, phase: f64, n_max: usize) -> Result<FockVector> {
    check_mu(mu)?;
    let amplitudes = (0..=n_max)
        .map(|n| {
            let mag = if mu == 0.0 {
                if n == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (0.5 * (n as f64 * mu.ln() - mu - ln_factorial(n))).exp()
            };
            Complex64::from_polar(mag, n as f64 * phase)
        })
        .collect();
    Ok(FockVector { amplitudes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zeros(n_max: usize) -> Self {
        let dim = n_max + 1;
        DensityMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn n_max(&self) -> usize {
        self.dim - 1
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    fn add(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.dim + col] += v;
    }

    pub fn projector(v: &FockVector) -> Self {
        let mut m = DensityMatrix::zeros(v.n_max());
        for (r, a) in v.amplitudes.iter().enumerate() {
            for (c, b) in v.amplitudes.iter().enumerate() {
                m.add(r, c, a * b.conj());
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|k| self.get(k, k).re).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|k| self.get(k, k).re).collect()
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let mut m: f64 = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                if r != c {
                    m = m.max(self.get(r, c).norm());
                }
            }
        }
        m
    }

    /// Largest `|rho_rc - conj(rho_cr)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut m: f64 = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                m = m.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        m
    }

    /// Entries `(row, col, value)` with magnitude above `threshold`.
    pub fn entries_above(&self, threshold: f64) -> Vec<(usize, usize, Complex64)> {
        let mut out = Vec::new();
        for r in 0..self.dim {
            for c in 0..self.dim {
                let v = self.get(r, c);
                if v.norm() > threshold {
                    out.push((r, c, v));
                }
            }
        }
        out
    }
}

/// Average of `|alpha><alpha|` over `k_phases` equally spaced global
/// phases. Coherences with `0 < |n - m| < k_phases` cancel, so for
/// `k_phases > n_max` only the Poisson diagonal remains.
///
/// The average is formed analytically per element: the phase sum
/// `sum_j exp(i (n - m) 2 pi j / K)` is exactly `K` when `K` divides
/// `n - m` and zero otherwise.
pub fn phase_averaged_density_matrix(mu: f64, n_max: usize, k_phases: usize) -> Result<DensityMatrix> {
    check_mu(mu)?;
    if k_phases == 0 {
        return Err(Error::param("k_phases", "must be >= 1"));
    }
    let base = coherent_fock(mu, 0.0, n_max)?;
    let mut m = DensityMatrix::zeros(n_max);
    for r in 0..=n_max {
        for c in 0..=n_max {
            let d = r.abs_diff(c);
            if d % k_phases == 0 {
                m.add(r, c, base.amplitudes[r] * base.amplitudes[c]);
            }
        }
    }
    Ok(m)
}

/// Literal phase average: projectors summed over the `k_phases` phases.
pub fn phase_averaged_by_sum(mu: f64, n_max: usize, k_phases: usize) -> Result<DensityMatrix> {
    check_mu(mu)?;
    if k_phases == 0 {
        return Err(Error::param("k_phases", "must be >= 1"));
    }
    let mut m = DensityMatrix::zeros(n_max);
    let w = 1.0 / k_phases as f64;
    for j in 0..k_phases {
        let v = coherent_fock(mu, 2.0 * PI * j as f64 / k_phases as f64, n_max)?;
        let p = DensityMatrix::projector(&v);
        for (a, b) in m.data.iter_mut().zip(&p.data) {
            *a += b * w;
        }
    }
    Ok(m)
}

/// Mean photon number after `loss_db` of attenuation.
pub fn attenuate(mu: f64, loss_db: f64) -> Result<f64> {
    check_mu(mu)?;
    if !(loss_db.is_finite() && loss_db >= 0.0) {
        return Err(Error::param("loss_db", format!("must be >= 0, got {loss_db}")));
    }
    Ok(mu * 10f64.powf(-loss_db / 10.0))
}

/// Probability of two or more photons, `1 - e^{-mu}(1 + mu)`.
pub fn multiphoton_probability(mu: f64) -> Result<f64> {
    check_mu(mu)?;
    // -expm1(-mu) - mu e^{-mu} keeps precision for small mu.
    Ok(-(-mu).exp_m1() - mu * (-mu).exp())
}
