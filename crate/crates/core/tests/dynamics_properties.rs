use phaseseed::injection::{simulate_injected, InjectionConfig};
use phaseseed::rng::rng_from_seed;
use phaseseed::waveform::WaveformBuilder;
use phaseseed::{
    langevin_increments, output_power, simulate, steady_state, DriveWaveform, InitialState,
    LaserParams, NoiseConfig, SimState, Trajectory,
};
use proptest::prelude::*;

fn dfb() -> (LaserParams, f64) {
    let p = LaserParams::typical_dfb();
    let ith = p.threshold_current();
    (p, ith)
}

/// Piecewise-constant drive from `(multiple of I_th, samples)` segments.
fn drive_from(levels: &[(f64, usize)], ith: f64) -> DriveWaveform {
    let mut b = WaveformBuilder::new(1e-13).unwrap();
    for &(m, n) in levels {
        b.push(m * ith, n).unwrap();
    }
    b.build().unwrap()
}

fn segments() -> impl Strategy<Value = Vec<(f64, usize)>> {
    prop::collection::vec((0.0f64..4.0, 200usize..3000), 1..5)
}

fn endpoint(p: &LaserParams, dt: f64, from: f64, to: f64) -> f64 {
    let n = (0.2e-9 / dt).round() as usize;
    let start = steady_state(from, p, p.one_photon_density()).unwrap();
    let drive = DriveWaveform::constant(dt, to, n + 1).unwrap();
    simulate(&drive, p, InitialState::Given(start), &NoiseConfig::off(p))
        .unwrap()
        .photon_density[n]
}

fn assert_same_amplitudes(a: &Trajectory, b: &Trajectory) {
    assert_eq!(a.carrier_density, b.carrier_density);
    assert_eq!(a.photon_density, b.photon_density);
    assert_eq!(a.power, b.power);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn initial_phase_only_offsets_phase(levels in segments(), seed in any::<u64>(), c in -20.0f64..20.0) {
        let (p, ith) = dfb();
        let drive = drive_from(&levels, ith);
        let noise = NoiseConfig::on(&p, seed);
        let init = steady_state(drive.first(), &p, p.one_photon_density()).unwrap();
        let shifted = SimState::new(init.carrier_density, init.photon_density, init.phase + c);
        let a = simulate(&drive, &p, InitialState::Given(init), &noise).unwrap();
        let b = simulate(&drive, &p, InitialState::Given(shifted), &noise).unwrap();
        assert_same_amplitudes(&a, &b);
        for (x, y) in a.phase.iter().zip(&b.phase) {
            prop_assert!((y - x - c).abs() < 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn floors_hold_for_any_drive(levels in segments(), seed in any::<u64>()) {
        let (p, ith) = dfb();
        let noise = NoiseConfig::on(&p, seed);
        let t = simulate(&drive_from(&levels, ith), &p, InitialState::Auto, &noise).unwrap();
        let floor = p.one_photon_density();
        prop_assert!(t.photon_density.iter().all(|&s| s >= floor));
        prop_assert!(t.carrier_density.iter().all(|&n| n >= 0.0));
    }

    #[test]
    fn noise_off_runs_are_identical(levels in segments()) {
        let (p, ith) = dfb();
        let drive = drive_from(&levels, ith);
        let a = simulate(&drive, &p, InitialState::Auto, &NoiseConfig::off(&p)).unwrap();
        let b = simulate(&drive, &p, InitialState::Auto, &NoiseConfig::off(&p)).unwrap();
        assert_same_amplitudes(&a, &b);
        prop_assert_eq!(a.phase, b.phase);
    }

    #[test]
    fn power_is_linear_in_photon_density(s in 0.0f64..1e23, a in 0.0f64..1e3) {
        let p = LaserParams::typical_dfb();
        let lhs = output_power(a * s, &p);
        let rhs = a * output_power(s, &p);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
    }

    #[test]
    fn halving_the_step_shrinks_the_error(from in 1.5f64..3.0, to in 1.5f64..4.0) {
        prop_assume!((to - from).abs() > 0.2);
        let (p, ith) = dfb();
        let base = 0.2e-12;
        let reference = endpoint(&p, base / 16.0, from * ith, to * ith);
        let errors: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|h| (endpoint(&p, base / h, from * ith, to * ith) - reference).abs())
            .collect();
        for w in errors.windows(2) {
            prop_assert!(w[1] < w[0], "errors {:?}", errors);
        }
    }

    #[test]
    fn langevin_spread_scales_as_inverse_root_dt(
        n in 1e23f64..5e24,
        s in 1e17f64..1e22,
        seed in any::<u64>(),
        ratio in 0.01f64..100.0,
    ) {
        let p = LaserParams::typical_dfb();
        let state = SimState::new(n, s, 0.0);
        let (dt1, dt2) = (1e-13, 1e-13 * ratio);
        let mut r1 = rng_from_seed(seed);
        let mut r2 = rng_from_seed(seed);
        for _ in 0..16 {
            let a = langevin_increments(&state, &p, dt1, &mut r1);
            let b = langevin_increments(&state, &p, dt2, &mut r2);
            for (x, y) in [(a.photon, b.photon), (a.phase, b.phase), (a.carrier, b.carrier)] {
                let (x, y) = (x * dt1.sqrt(), y * dt2.sqrt());
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn joint_phase_offset_leaves_amplitudes(seed in any::<u64>(), c in -10.0f64..10.0, det in -2e10f64..2e10) {
        let (p, ith) = dfb();
        let drive = drive_from(&[(3.0, 4000)], ith);
        let primary = simulate(&drive, &p, InitialState::Auto, &NoiseConfig::on(&p, seed)).unwrap();
        let mut moved = primary.clone();
        moved.phase.iter_mut().for_each(|x| *x += c);
        let sec = drive_from(&[(0.5, 1500), (2.0, 2500)], ith);
        let init = steady_state(sec.first(), &p, p.one_photon_density()).unwrap();
        let init_c = SimState::new(init.carrier_density, init.photon_density, init.phase + c);
        let cfg = InjectionConfig::new(p.injection_coupling, det, 0.05).unwrap();
        let noise = NoiseConfig::on(&p, seed ^ 1);
        let a = simulate_injected(&primary, &sec, &p, &cfg, InitialState::Given(init), &noise).unwrap();
        let b = simulate_injected(&moved, &sec, &p, &cfg, InitialState::Given(init_c), &noise).unwrap();
        let (ta, tb) = (&a.trajectory, &b.trajectory);
        for k in 0..ta.len() {
            let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(1e-300);
            prop_assert!(rel(ta.photon_density[k], tb.photon_density[k]) < 1e-9);
            prop_assert!(rel(ta.carrier_density[k], tb.carrier_density[k]) < 1e-9);
            prop_assert!((tb.phase[k] - ta.phase[k] - c).abs() < 1e-7);
        }
    }

    #[test]
    fn switched_off_injection_is_free_running(seed in any::<u64>(), zero_coupling in any::<bool>()) {
        let (p, ith) = dfb();
        let drive = drive_from(&[(0.0, 1000), (2.0, 2500), (0.0, 1500)], ith);
        let primary = simulate(&drive, &p, InitialState::Auto, &NoiseConfig::on(&p, !seed)).unwrap();
        let cfg = if zero_coupling {
            InjectionConfig::new(0.0, 1e9, 0.05).unwrap()
        } else {
            InjectionConfig::new(p.injection_coupling, 1e9, 0.0).unwrap()
        };
        let noise = NoiseConfig::on(&p, seed);
        let free = simulate(&drive, &p, InitialState::Auto, &noise).unwrap();
        let inj = simulate_injected(&primary, &drive, &p, &cfg, InitialState::Auto, &noise).unwrap();
        assert_same_amplitudes(&free, &inj.trajectory);
        prop_assert_eq!(&free.phase, &inj.trajectory.phase);
    }
}

#[test]
fn photon_noise_variance_matches_its_coefficient() {
    let p = LaserParams::typical_dfb();
    let state = SimState::new(2e24, 5e20, 0.0);
    let dt = 1e-13;
    let mut rng = rng_from_seed(77);
    let n = 100_000;
    let var = (0..n)
        .map(|_| langevin_increments(&state, &p, dt, &mut rng).photon.powi(2))
        .sum::<f64>()
        / n as f64;
    let want = 2.0 * p.confinement * p.spontaneous_coupling * state.carrier_density * state.photon_density
        / (p.carrier_lifetime * dt);
    assert!((var / want - 1.0).abs() < 0.02, "{var} vs {want}");
}

#[test]
fn half_threshold_rests_on_the_floor() {
    let (p, ith) = dfb();
    let s = steady_state(0.5 * ith, &p, p.one_photon_density()).unwrap();
    assert_eq!(s.photon_density, p.one_photon_density());
    let n = 0.5 * ith * p.carrier_lifetime / (phaseseed::params::ELECTRON_CHARGE * p.active_volume);
    assert!((s.carrier_density / n - 1.0).abs() < 1e-12);
    assert_eq!(s.phase, 0.0);
}
