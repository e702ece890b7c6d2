//! Random numbers from interfering phase-randomised pulses.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|a_k + a_{k-delay}|^2 / 4` for every `k >= delay`.
pub fn interfere_delayed(amps: &[Complex64], delay: usize) -> Result<Vec<f64>> {
    if delay == 0 || amps.len() < delay + 1 {
        return Err(Error::InsufficientData(format!(
            "need at least {} pulses for delay {delay}",
            delay + 1
        )));
    }
    Ok((delay..amps.len())
        .map(|k| (amps[k] + amps[k - delay]).norm_sqr() / 4.0)
        .collect())
}

/// `|a_k + b_k|^2 / 4` for two independent trains.
pub fn interfere_two_sources(a: &[Complex64], b: &[Complex64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Alignment(format!(
            "trains have {} and {} pulses",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x + y).norm_sqr() / 4.0).collect())
}

/// Interference samples rescaled by their own input powers:
/// `(4 I - (|a| - |b|)^2) / (4 |a| |b|)`, which equals `(1 + cos dphi) / 2`
/// and so removes pulse-energy fluctuations. Pairs with an empty input give
/// `None`.
pub fn normalized_fringe(intensity: f64, a: Complex64, b: Complex64) -> Option<f64> {
    let (x, y) = (a.norm(), b.norm());
    if x <= 0.0 || y <= 0.0 {
        return None;
    }
    Some(((4.0 * intensity - (x - y).powi(2)) / (4.0 * x * y)).clamp(0.0, 1.0))
}

/// Normalised fringe of a delayed self-interference train.
pub fn normalized_delayed(amps: &[Complex64], delay: usize) -> Result<Vec<f64>> {
    let raw = interfere_delayed(amps, delay)?;
    Ok(raw
        .iter()
        .enumerate()
        .filter_map(|(j, &i)| normalized_fringe(i, amps[j + delay], amps[j]))
        .collect())
}

/// Distribution function of `(1 + cos dphi) / 2` for uniform `dphi`:
/// `(2 / pi) asin(sqrt(x))`.
pub fn arcsine_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        std::f64::consts::FRAC_2_PI * x.sqrt().asin()
    }
}

/// Kolmogorov distance between a sample and a continuous distribution
/// function.
pub fn kolmogorov_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdcConfig {
    pub bits: u32,
    /// Input mapped to one past the top code.
    pub full_scale: f64,
    #[serde(default)]
    pub offset: f64,
}

impl AdcConfig {
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        if !(1..=16).contains(&self.bits) {
            v.push(("bits", format!("must lie in [1, 16], got {}", self.bits)));
        }
        if !(self.full_scale.is_finite() && self.full_scale > 0.0) {
            v.push(("full_scale", format!("must be > 0, got {}", self.full_scale)));
        }
        if !self.offset.is_finite() {
            v.push(("offset", format!("must be finite, got {}", self.offset)));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some((k, m)) => Err(Error::param(k, m)),
        }
    }

    /// Full scale set to the largest calibration sample above the offset.
    pub fn calibrated(bits: u32, offset: f64, calibration: &[f64]) -> Result<Self> {
        let max = calibration.iter().copied().fold(f64::MIN, f64::max);
        let cfg = AdcConfig {
            bits,
            full_scale: max - offset,
            offset,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn levels(&self) -> u32 {
        1 << self.bits
    }
}

/// `clamp(floor((I - offset) / full_scale * 2^bits), 0, 2^bits - 1)`.
pub fn adc_sample(intensities: &[f64], cfg: &AdcConfig) -> Result<Vec<u16>> {
    cfg.validate()?;
    let levels = cfg.levels() as f64;
    let top = (cfg.levels() - 1) as f64;
    Ok(intensities
        .iter()
        .map(|&i| ((i - cfg.offset) / cfg.full_scale * levels).floor().clamp(0.0, top) as u16)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub samples: usize,
    pub histogram: Vec<u64>,
    /// `-log2` of the most frequent code probability [bits/sample].
    pub min_entropy: f64,
}

pub fn min_entropy(codes: &[u16], bits: u32) -> Result<EntropyReport> {
    if codes.len() < 1000 {
        return Err(Error::InsufficientData(format!(
            "{} codes, need at least 1000",
            codes.len()
        )));
    }
    if !(1..=16).contains(&bits) {
        return Err(Error::param("bits", "must lie in [1, 16]"));
    }
    let mut histogram = vec![0u64; 1 << bits];
    for &c in codes {
        let c = c as usize;
        if c >= histogram.len() {
            return Err(Error::param("codes", format!("code {c} exceeds {bits} bits")));
        }
        histogram[c] += 1;
    }
    let max = *histogram.iter().max().unwrap_or(&0) as f64;
    let h = -(max / codes.len() as f64).log2();
    Ok(EntropyReport {
        samples: codes.len(),
        histogram,
        min_entropy: h.max(0.0),
    })
}

/// Packs the low `bits` of every code into a little-endian bit stream,
/// least significant bit first.
pub fn pack_codes(codes: &[u16], bits: u32) -> Vec<u8> {
    let total = codes.len() * bits as usize;
    let mut out = vec![0u8; total.div_ceil(8)];
    let mut pos = 0usize;
    for &c in codes {
        for b in 0..bits {
            if (c >> b) & 1 == 1 {
                out[pos / 8] |= 1 << (pos % 8);
            }
            pos += 1;
        }
    }
    out
}

/// Monobit frequency check over the first `n_bits` bits of a packed stream:
/// returns `(ones - zeros) / n`.
pub fn monobit_bias(bytes: &[u8], n_bits: usize) -> f64 {
    let n = n_bits.min(bytes.len() * 8);
    if n == 0 {
        return 0.0;
    }
    let full = n / 8;
    let mut ones: u64 = bytes[..full].iter().map(|b| b.count_ones() as u64).sum();
    for k in full * 8..n {
        ones += ((bytes[k / 8] >> (k % 8)) & 1) as u64;
    }
    (2.0 * ones as f64 - n as f64) / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn interference_extremes() {
        let a = [c(1.0, 1.0), c(1.0, 1.0), c(-1.0, -1.0)];
        let i = interfere_delayed(&a, 1).unwrap();
        assert!((i[0] - 2.0).abs() < 1e-15);
        assert_eq!(i[1], 0.0);
        let z = [c(0.0, 0.0); 3];
        let t = interfere_two_sources(&a, &z).unwrap();
        assert!((t[0] - 0.5).abs() < 1e-15);
        let neg: Vec<Complex64> = a.iter().map(|x| -x).collect();
        assert!(interfere_two_sources(&a, &neg).unwrap().iter().all(|&x| x == 0.0));
        assert!(interfere_two_sources(&a, &z[..2]).is_err());
    }

    #[test]
    fn normalized_fringe_is_raised_cosine() {
        for d in [0.0, 0.4, 1.7, 3.0] {
            let a = Complex64::from_polar(2.0, 0.3);
            let b = Complex64::from_polar(0.7, 0.3 + d);
            let i = (a + b).norm_sqr() / 4.0;
            let x = normalized_fringe(i, a, b).unwrap();
            assert!((x - (1.0 + f64::cos(d)) / 2.0).abs() < 1e-12);
        }
        assert!(normalized_fringe(1.0, c(0.0, 0.0), c(1.0, 0.0)).is_none());
    }

    #[test]
    fn adc_edges() {
        let cfg = AdcConfig {
            bits: 8,
            full_scale: 2.0,
            offset: 0.0,
        };
        let codes = adc_sample(&[0.0, 2.0, 5.0, -1.0, 1.0], &cfg).unwrap();
        assert_eq!(codes, vec![0, 255, 255, 0, 128]);
        let bad = AdcConfig { bits: 17, ..cfg };
        assert!(adc_sample(&[0.0], &bad).is_err());
    }

    #[test]
    fn uniform_input_fills_codes_evenly() {
        let mut rng = crate::rng::rng_from_seed(5);
        let cfg = AdcConfig {
            bits: 4,
            full_scale: 1.0,
            offset: 0.0,
        };
        let x: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let r = min_entropy(&adc_sample(&x, &cfg).unwrap(), 4).unwrap();
        let e = 100_000.0 / 16.0;
        for h in &r.histogram {
            assert!((*h as f64 - e).abs() / e < 0.05);
        }
    }

    #[test]
    fn entropy_bounds() {
        let same = vec![7u16; 2000];
        assert_eq!(min_entropy(&same, 8).unwrap().min_entropy, 0.0);
        assert!(min_entropy(&same[..10], 8).is_err());
        let mut rng = crate::rng::rng_from_seed(6);
        let u: Vec<u16> = (0..1_000_000).map(|_| rng.random_range(0..256u16)).collect();
        assert!(min_entropy(&u, 8).unwrap().min_entropy >= 7.8);
    }

    #[test]
    fn packing_is_lsb_first() {
        assert_eq!(pack_codes(&[0b1011, 0b0001], 4), vec![0b0001_1011]);
        assert_eq!(pack_codes(&[0x1234], 16), vec![0x34, 0x12]);
        assert_eq!(monobit_bias(&[0xff, 0x00], 16), 0.0);
        assert_eq!(monobit_bias(&[0xff], 8), 1.0);
    }

    #[test]
    fn arcsine_distance_of_exact_sample() {
        let mut rng = crate::rng::rng_from_seed(8);
        let x: Vec<f64> = (0..20_000)
            .map(|_| (1.0 + rng.random_range(-3.2f64..3.2).cos()) / 2.0)
            .collect();
        assert!(kolmogorov_distance(&x, arcsine_cdf) < 0.02);
        let flat: Vec<f64> = (0..1000).map(|k| k as f64 / 1000.0).collect();
        assert!(kolmogorov_distance(&flat, arcsine_cdf) > 0.1);
    }
}
