//! Scenario execution: drive construction, the lockstep integration, and
//! the measurement chain, reduced to in-memory files and scalar metrics.

use std::fmt::Write as _;

use num_complex::Complex64;
use phaseseed::chirp::{chirp_from_power, phase_chirp};
use phaseseed::drive::{
    gain_switch_wave, level_amplitudes, mdpsk_pattern, protocol_pattern, seeded_wave, Protocol,
    SymbolPattern, SymbolSource, TransmitterDrive,
};
use phaseseed::export::{sci, trajectory_row, write_histogram, write_iq, write_symbols, TRAJECTORY_HEADER};
use phaseseed::injection::phase_slips;
use phaseseed::measurement::{
    circular_stats, constellation, demodulate, demodulate_pairs, fringe_visibility, phase_uniformity_test,
    IqPoint, JitterAccumulator, JitterReport, PulseAccumulator, UniformityTest,
};
use phaseseed::qrng::{
    adc_sample, arcsine_cdf, interfere_delayed, interfere_two_sources, kolmogorov_distance, min_entropy,
    monobit_bias, normalized_fringe, pack_codes, AdcConfig,
};
use phaseseed::rng::derive_seed;
use phaseseed::transmitter::{run_transmitter, LaserSetup};
use phaseseed::{output_power, DriveWaveform};

use crate::config::{Resolved, RunConfig, Scenario};
use crate::error::CliError;

/// Scalars collected for sweep summaries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub jitter_std_s: Option<f64>,
    pub visibility: Option<f64>,
    pub cluster_std_rad: Option<f64>,
    pub min_entropy_bits: Option<f64>,
    pub phase_slips: Option<usize>,
    pub symbol_errors: Option<usize>,
}

impl Metrics {
    pub const HEADER: &'static str =
        "jitter_std_s,visibility,cluster_std_rad,min_entropy_bits,phase_slips,symbol_errors";

    pub fn csv_fields(&self) -> String {
        let f = |x: Option<f64>| x.map(sci).unwrap_or_default();
        let u = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            f(self.jitter_std_s),
            f(self.visibility),
            f(self.cluster_std_rad),
            f(self.min_entropy_bits),
            u(self.phase_slips),
            u(self.symbol_errors)
        )
    }
}

pub struct Outcome {
    /// Relative path and contents, in write order.
    pub files: Vec<(String, Vec<u8>)>,
    pub report: Vec<(String, String)>,
    pub metrics: Metrics,
}

struct Drives {
    primary: Option<DriveWaveform>,
    secondary: DriveWaveform,
    pattern: Option<SymbolPattern>,
    warmup: usize,
}

/// What one pass of the transmitter leaves behind.
struct Capture {
    secondary: Vec<Complex64>,
    trajectory: String,
    primary_trajectory: String,
    phase: Vec<f64>,
    power: Vec<f64>,
    jitter: JitterReport,
    slips: Option<usize>,
}

fn symbol_source(cfg: &RunConfig) -> SymbolSource {
    match &cfg.symbols.values {
        Some(v) => SymbolSource::Given {
            values: v.clone(),
            bases: cfg.symbols.bases.clone(),
        },
        None => SymbolSource::Random {
            count: cfg.symbols.count,
            seed: derive_seed(cfg.seed, "symbols"),
        },
    }
}

fn build_drives(cfg: &RunConfig, r: &Resolved) -> Result<Drives, CliError> {
    let gs = &r.gain_switch;
    let clock = &r.clock;
    let free = |n: usize| gain_switch_wave(clock, gs.off_current, gs.on_current, gs.duty, n);
    let warm = cfg.pulses.warmup;
    let n = warm + cfg.pulses.count;
    let spec = &r.modulation;
    let from = |td: TransmitterDrive| Drives {
        primary: Some(td.primary),
        secondary: td.secondary,
        pattern: Some(td.pattern),
        warmup: 0,
    };
    let src = symbol_source(cfg);
    Ok(match r.scenario {
        Scenario::GainSwitch | Scenario::QrngDelayed | Scenario::QrngTwoLaser => Drives {
            primary: None,
            secondary: free(n)?,
            pattern: None,
            warmup: warm,
        },
        Scenario::CwSeed => {
            let secondary = free(n)?;
            let primary = DriveWaveform::constant(clock.dt, spec.base_current, secondary.len())?
                .with_edge_ramp(spec.edge_time)?;
            Drives {
                primary: Some(primary),
                secondary,
                pattern: None,
                warmup: warm,
            }
        }
        Scenario::Protocol(p) => from(protocol_pattern(p, clock, spec, gs, &r.primary, &src)?),
        Scenario::Mdpsk(m) => from(mdpsk_pattern(m, clock, spec, gs, &r.primary, &src)?),
        Scenario::PhaseSeed => from(mdpsk_pattern(cfg.symbols.levels, clock, spec, gs, &r.primary, &src)?),
        Scenario::PulsedSeed => {
            let mut td = mdpsk_pattern(cfg.symbols.levels, clock, spec, gs, &r.primary, &src)?;
            let levels = level_amplitudes(clock, spec, &r.primary, cfg.symbols.levels as usize)?;
            let amps: Vec<f64> = td.pattern.values.iter().map(|&v| levels[v as usize]).collect();
            td.primary = seeded_wave(clock, spec, &amps, true)?;
            from(td)
        }
    })
}

fn capture(
    cfg: &RunConfig,
    r: &Resolved,
    primary_drive: Option<&DriveWaveform>,
    secondary_drive: &DriveWaveform,
    secondary_component: &str,
    warmup: usize,
) -> Result<Capture, CliError> {
    let clock = &r.clock;
    let spp = clock.samples_per_pulse();
    let dt = clock.dt;
    let ps = LaserSetup::new(r.primary, cfg.noise_for(&r.primary, "primary"));
    let ss = LaserSetup::new(r.secondary, cfg.noise_for(&r.secondary, secondary_component));
    let mut acc_s = PulseAccumulator::new(clock)?;
    let start = warmup * spp;
    let mut jitter = JitterAccumulator::new(spp, 0, cfg.analysis.jitter_fraction, dt);
    let traj_len = (cfg.outputs.trajectory_pulses * spp).min(secondary_drive.len());
    let stride = cfg.outputs.trajectory_stride;
    let mut trajectory = format!("{TRAJECTORY_HEADER}\n");
    let mut primary_trajectory = trajectory.clone();
    let mut phase = Vec::new();
    let mut power = Vec::new();
    let (mut psi_start, mut psi_end) = (0.0, 0.0);
    run_transmitter(primary_drive, secondary_drive, &ps, &ss, &r.injection, |v| {
        let k = v.index;
        let s = &v.secondary;
        let p_s = output_power(s.photon_density, &r.secondary);
        acc_s.push(k, s.photon_density, s.phase);
        if k < traj_len {
            if k % stride == 0 {
                let t = k as f64 * dt;
                trajectory.push_str(&trajectory_row(
                    t,
                    v.secondary_current,
                    s.carrier_density,
                    s.photon_density,
                    p_s,
                    s.phase,
                ));
                if primary_drive.is_some() {
                    let p = &v.primary;
                    primary_trajectory.push_str(&trajectory_row(
                        t,
                        v.primary_current,
                        p.carrier_density,
                        p.photon_density,
                        output_power(p.photon_density, &r.primary),
                        p.phase,
                    ));
                }
            }
            if cfg.outputs.chirp {
                phase.push(s.phase);
                power.push(p_s);
            }
        }
        if k >= start {
            jitter.push(k - start, p_s);
            if k == start {
                psi_start = v.psi;
            }
            psi_end = v.psi;
        }
    })?;
    Ok(Capture {
        secondary: acc_s.into_amplitudes(),
        trajectory,
        primary_trajectory: if primary_drive.is_some() { primary_trajectory } else { String::new() },
        phase,
        power,
        jitter: jitter.finish(),
        slips: primary_drive.map(|_| phase_slips(&[psi_start, psi_end])),
    })
}

fn pulses_csv(amps: &[Complex64], warmup: usize) -> String {
    let mut s = String::from("pulse_index,warmup,re,im,magnitude,phase_rad\n");
    for (j, a) in amps.iter().enumerate() {
        let _ = writeln!(
            s,
            "{j},{},{},{},{},{}",
            (j < warmup) as u8,
            sci(a.re),
            sci(a.im),
            sci(a.norm()),
            sci(a.arg())
        );
    }
    s
}

fn iq_csv(points: &[IqPoint], assigned: Option<&[usize]>) -> Vec<u8> {
    let mut buf = Vec::new();
    write_iq(&mut buf, points, assigned).expect("writes to memory");
    buf
}

fn jitter_csv(j: &JitterReport) -> String {
    let mut s = String::from("index,delay_s\n");
    for (k, d) in j.delays.iter().enumerate() {
        let _ = writeln!(s, "{k},{}", sci(*d));
    }
    s
}

fn chirp_csv(c: &Capture, r: &Resolved) -> Result<String, CliError> {
    let dt = r.clock.dt;
    let measured = phase_chirp(&c.phase, dt)?;
    let predicted = chirp_from_power(&c.power, dt, &r.secondary)?;
    let mut s = String::from("t_s,P_W,chirp_hz,chirp_from_power_hz\n");
    for k in 0..measured.len() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            sci(k as f64 * dt),
            sci(c.power[k]),
            sci(measured[k]),
            predicted[k].map(sci).unwrap_or_default()
        );
    }
    Ok(s)
}

fn neighbours(n: usize, delay: usize) -> Vec<(usize, usize)> {
    (0..n.saturating_sub(delay)).map(|j| (j, j + delay)).collect()
}

fn uniformity(phases: &[f64], cfg: &RunConfig) -> Option<UniformityTest> {
    phase_uniformity_test(phases, cfg.analysis.uniformity_bins, cfg.analysis.significance).ok()
}

fn push_uniformity(report: &mut Vec<(String, String)>, prefix: &str, u: Option<UniformityTest>) {
    if let Some(u) = u {
        report.push((format!("{prefix}_chi2"), sci(u.chi2)));
        report.push((format!("{prefix}_critical"), sci(u.critical)));
        report.push((format!("{prefix}_uniform"), u.pass.to_string()));
    }
}

fn worst_cluster(stds: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    stds.map(|s| s.unwrap_or(f64::INFINITY)).reduce(f64::max)
}

pub fn execute(cfg: &RunConfig, r: &Resolved) -> Result<Outcome, CliError> {
    let drives = build_drives(cfg, r)?;
    let run = capture(cfg, r, drives.primary.as_ref(), &drives.secondary, "secondary", drives.warmup)?;
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut report: Vec<(String, String)> = vec![
        ("scenario".into(), r.scenario.to_string()),
        ("seed".into(), r.seed.to_string()),
        ("secondary_threshold_A".into(), sci(r.secondary.threshold_current())),
        ("samples".into(), drives.secondary.len().to_string()),
        ("pulses".into(), run.secondary.len().to_string()),
        ("warmup_pulses".into(), drives.warmup.to_string()),
    ];
    let mut metrics = Metrics::default();

    files.push(("trajectory.csv".into(), run.trajectory.clone().into_bytes()));
    if !run.primary_trajectory.is_empty() {
        files.push(("primary_trajectory.csv".into(), run.primary_trajectory.clone().into_bytes()));
    }
    files.push(("pulses.csv".into(), pulses_csv(&run.secondary, drives.warmup).into_bytes()));
    if cfg.outputs.chirp {
        files.push(("chirp.csv".into(), chirp_csv(&run, r)?.into_bytes()));
    }
    if let Some(pattern) = &drives.pattern {
        let mut buf = Vec::new();
        write_symbols(&mut buf, pattern).expect("writes to memory");
        files.push(("symbols.csv".into(), buf));
        report.push(("symbols".into(), pattern.len().to_string()));
    }
    if let Some(s) = run.slips.filter(|_| !r.scenario.pulsed_primary()) {
        report.push(("phase_slips".into(), s.to_string()));
        metrics.phase_slips = Some(s);
    }
    let post = &run.secondary[drives.warmup.min(run.secondary.len())..];

    match r.scenario {
        Scenario::GainSwitch | Scenario::CwSeed => {
            let d = demodulate(post, 1)?;
            files.push(("iq.csv".into(), iq_csv(&d.points, None)));
            let diffs: Vec<f64> = d.points.iter().map(IqPoint::phase).collect();
            let absolute: Vec<f64> = post.iter().map(|a| a.arg()).collect();
            if let Some((mean, std)) = circular_stats(&diffs) {
                report.push(("differential_phase_mean_rad".into(), sci(mean)));
                report.push(("differential_phase_std_rad".into(), sci(std)));
                if r.scenario == Scenario::CwSeed {
                    metrics.cluster_std_rad = Some(std);
                }
            }
            push_uniformity(&mut report, "absolute_phase", uniformity(&absolute, cfg));
            push_uniformity(&mut report, "differential_phase", uniformity(&diffs, cfg));
            metrics.visibility = fringe_visibility(post, &neighbours(post.len(), 1)).ok();
            files.push(("jitter.csv".into(), jitter_csv(&run.jitter).into_bytes()));
            report.push(("turn_on_delay_mean_s".into(), sci(run.jitter.mean)));
            report.push(("turn_on_delay_std_s".into(), sci(run.jitter.std)));
            report.push(("turn_on_excluded".into(), run.jitter.excluded.to_string()));
            metrics.jitter_std_s = Some(run.jitter.std);
            if r.scenario == Scenario::CwSeed && cfg.outputs.free_running_reference {
                let free = capture(cfg, r, None, &drives.secondary, "secondary", drives.warmup)?;
                let fpost = &free.secondary[drives.warmup..];
                report.push(("free_running_turn_on_delay_std_s".into(), sci(free.jitter.std)));
                if let Ok(v) = fringe_visibility(fpost, &neighbours(fpost.len(), 1)) {
                    report.push(("free_running_visibility".into(), sci(v)));
                }
                files.push(("jitter_free_running.csv".into(), jitter_csv(&free.jitter).into_bytes()));
            }
        }
        Scenario::Protocol(Protocol::Cow) => {
            let pattern = drives.pattern.as_ref().expect("symbol scenario");
            let d = demodulate(post, 1)?;
            let thr = d.empty_threshold;
            let mut errors = 0;
            let mut leaks = 0;
            let mut both = Vec::new();
            for (k, &v) in pattern.values.iter().enumerate() {
                let occ = [post[2 * k].norm() >= thr, post[2 * k + 1].norm() >= thr];
                let want = match v {
                    0 => [true, false],
                    1 => [false, true],
                    _ => [true, true],
                };
                errors += (occ != want) as usize;
                leaks += occ.iter().zip(&want).filter(|(o, w)| **o && !**w).count();
                if want == [true, true] {
                    both.push((2 * k, 2 * k + 1));
                }
                if k + 1 < pattern.len() && want[1] && pattern.values[k + 1] != 1 {
                    both.push((2 * k + 1, 2 * k + 2));
                }
            }
            files.push(("iq.csv".into(), iq_csv(&d.points, None)));
            report.push(("empty_threshold".into(), sci(thr)));
            report.push(("empty_slots_above_threshold".into(), leaks.to_string()));
            report.push(("symbol_errors".into(), errors.to_string()));
            metrics.symbol_errors = Some(errors);
            metrics.visibility = fringe_visibility(post, &both).ok();
        }
        Scenario::Protocol(_) | Scenario::Mdpsk(_) | Scenario::PhaseSeed | Scenario::PulsedSeed => {
            let pattern = drives.pattern.as_ref().expect("symbol scenario");
            let n = pattern.len();
            let pairs: Vec<(usize, usize)> = (0..n).map(|k| r.clock.symbol_pair(k)).collect();
            let d = demodulate_pairs(post, &pairs)?;
            let targets = pattern.target_phases();
            let intended: Vec<usize> = d
                .points
                .iter()
                .map(|q| pattern.phase_index(q.symbol_index).unwrap_or(0))
                .collect();
            let c = constellation(&d.points, &targets, Some(&intended), 0.0)?;
            files.push(("iq.csv".into(), iq_csv(&d.points, Some(&c.assignments))));
            for (j, cl) in c.clusters.iter().enumerate() {
                report.push((
                    format!("cluster_{j}"),
                    format!(
                        "target {} count {} mean {} std {}",
                        sci(cl.target),
                        cl.count,
                        cl.mean_angle.map(sci).unwrap_or_else(|| "-".into()),
                        cl.std.map(sci).unwrap_or_else(|| "-".into())
                    ),
                ));
            }
            let errors = c.symbol_errors.unwrap_or(0) + d.no_clicks.len();
            report.push(("no_click_symbols".into(), d.no_clicks.len().to_string()));
            report.push(("symbol_errors".into(), errors.to_string()));
            metrics.symbol_errors = Some(errors);
            metrics.cluster_std_rad = worst_cluster(c.clusters.iter().filter(|c| c.count > 0).map(|c| c.std));
            let decoded: Vec<Complex64> = pairs
                .iter()
                .enumerate()
                .flat_map(|(k, &(a, b))| {
                    let target = pattern.phase_index(k).map(|j| targets[j]).unwrap_or(0.0);
                    [post[a], post[b] * Complex64::from_polar(1.0, -target)]
                })
                .collect();
            let within: Vec<(usize, usize)> = (0..n).map(|k| (2 * k, 2 * k + 1)).collect();
            metrics.visibility = fringe_visibility(&decoded, &within).ok();
            if r.scenario.pulsed_primary() && n > 1 {
                let between: Vec<(usize, usize)> = (0..n - 1)
                    .map(|k| (r.clock.symbol_pair(k).1, r.clock.symbol_pair(k + 1).0))
                    .collect();
                let g = demodulate_pairs(post, &between)?;
                files.push(("global_iq.csv".into(), iq_csv(&g.points, None)));
                let phases: Vec<f64> = g.points.iter().map(IqPoint::phase).collect();
                push_uniformity(&mut report, "global_phase", uniformity(&phases, cfg));
            }
        }
        Scenario::QrngDelayed | Scenario::QrngTwoLaser => {
            let delay = cfg.qrng.delay;
            let (intensity, inputs): (Vec<f64>, Vec<(Complex64, Complex64)>) = if r.scenario == Scenario::QrngDelayed {
                let i = interfere_delayed(post, delay)?;
                let inputs = (0..i.len()).map(|j| (post[j + delay], post[j])).collect();
                (i, inputs)
            } else {
                let other = capture(cfg, r, None, &drives.secondary, "secondary_b", drives.warmup)?;
                let b = &other.secondary[drives.warmup..];
                let i = interfere_two_sources(post, b)?;
                let inputs = post.iter().copied().zip(b.iter().copied()).collect();
                (i, inputs)
            };
            let normalized: Vec<Option<f64>> = intensity
                .iter()
                .zip(&inputs)
                .map(|(&i, &(a, b))| normalized_fringe(i, a, b))
                .collect();
            let mut fringe = String::from("sample_index,intensity,normalized\n");
            for (j, (i, x)) in intensity.iter().zip(&normalized).enumerate() {
                let _ = writeln!(fringe, "{j},{},{}", sci(*i), x.map(sci).unwrap_or_default());
            }
            files.push(("fringe.csv".into(), fringe.into_bytes()));
            let samples: Vec<f64> = normalized.iter().flatten().copied().collect();
            let bits = cfg.qrng.adc_bits;
            let adc = AdcConfig::calibrated(bits, 0.0, &samples)?;
            let codes = adc_sample(&samples, &adc)?;
            let entropy = min_entropy(&codes, bits)?;
            let packed = pack_codes(&codes, bits);
            let n_bits = codes.len() * bits as usize;
            let mut hist = Vec::new();
            write_histogram(&mut hist, &entropy.histogram).expect("writes to memory");
            files.push(("histogram.csv".into(), hist));
            files.push(("random.bin".into(), packed.clone()));
            report.push(("fringe_samples".into(), samples.len().to_string()));
            report.push(("kolmogorov_distance_arcsine".into(), sci(kolmogorov_distance(&samples, arcsine_cdf))));
            report.push(("adc_bits".into(), bits.to_string()));
            report.push(("adc_full_scale".into(), sci(adc.full_scale)));
            report.push(("min_entropy_bits_per_sample".into(), sci(entropy.min_entropy)));
            report.push(("random_bits".into(), n_bits.to_string()));
            report.push(("monobit_bias".into(), sci(monobit_bias(&packed, n_bits))));
            metrics.min_entropy_bits = Some(entropy.min_entropy);
            files.push(("jitter.csv".into(), jitter_csv(&run.jitter).into_bytes()));
            report.push(("turn_on_delay_std_s".into(), sci(run.jitter.std)));
            metrics.jitter_std_s = Some(run.jitter.std);
        }
    }
    if let Some(v) = metrics.visibility {
        report.push(("visibility".into(), sci(v)));
    }
    Ok(Outcome { files, report, metrics })
}
