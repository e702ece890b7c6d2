use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use phaseseed::injection::{injection_ratio, locking_range, InjectionConfig};
use phaseseed::rng::sha256_hex;
use phaseseed::LaserParams;
use serde_json::Value;
use tempfile::TempDir;

fn phaseseed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phaseseed"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &TempDir, name: &str, json: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, json).unwrap();
    p.to_string_lossy().into_owned()
}

fn out(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn files_under(root: &Path) -> Vec<String> {
    let mut found = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                found.push(p.strip_prefix(root).unwrap().to_string_lossy().into_owned());
            }
        }
    }
    found.sort();
    found
}

const SMALL: &str = r#"{
  "scenario": "gain_switch",
  "seed": 42,
  "pulses": { "count": 12, "warmup": 2 },
  "outputs": { "trajectory_pulses": 2, "trajectory_stride": 5 }
}"#;

#[test]
fn same_config_and_seed_give_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "run.json", SMALL);
    for name in ["a", "b"] {
        let o = phaseseed(&["--quiet", "--out", &out(&tmp, name), "simulate", &cfg]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let names = files_under(&a);
    assert_eq!(names, files_under(&b));
    for n in &names {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n} differs");
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "run.json", SMALL);
    for (name, seed) in [("a", None), ("b", Some("7"))] {
        let mut args = vec!["--quiet", "--out"];
        let dir = out(&tmp, name);
        args.push(&dir);
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        args.extend(["simulate", &cfg]);
        assert_eq!(code(&phaseseed(&args)), 0);
    }
    assert_eq!(manifest(&tmp.path().join("a"))["seed"], 42);
    assert_eq!(manifest(&tmp.path().join("b"))["seed"], 7);
    let pulses = |d: &str| fs::read(tmp.path().join(d).join("pulses.csv")).unwrap();
    assert_ne!(pulses("a"), pulses("b"));
}

#[test]
fn manifest_lists_every_file_with_its_checksum() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "run.json", SMALL);
    let dir = tmp.path().join("o");
    let o = phaseseed(&["--quiet", "--out", dir.to_str().unwrap(), "simulate", &cfg]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = manifest(&dir);
    let listed: Vec<String> = m["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| {
            let path = f["path"].as_str().unwrap();
            let bytes = fs::read(dir.join(path)).unwrap();
            assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64, "{path}");
            assert_eq!(f["sha256"].as_str().unwrap(), sha256_hex(&bytes), "{path}");
            path.to_string()
        })
        .collect();
    let mut listed_sorted = listed.clone();
    listed_sorted.sort();
    let mut on_disk = files_under(&dir);
    on_disk.retain(|n| n != "manifest.json");
    assert_eq!(listed_sorted, on_disk);
    assert_eq!(m["config_sha256"].as_str().unwrap(), sha256_hex(&fs::read(dir.join("config.json")).unwrap()));
    assert_eq!(m["scenario"], "gain_switch");
    for f in ["trajectory.csv", "pulses.csv", "iq.csv", "jitter.csv", "report.txt"] {
        assert!(listed.iter().any(|l| l == f), "{f} missing");
    }
}

#[test]
fn validate_reports_the_threshold_current() {
    let o = phaseseed(&["validate", "fig18_mdpsk"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let ith: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("primary_threshold_mA: "))
        .unwrap()
        .parse()
        .unwrap();
    let want = LaserParams::typical_dfb().threshold_current() * 1e3;
    assert!((ith - want).abs() < 1e-3, "{ith} vs {want}");
    assert!((ith - 17.8).abs() < 0.1);
    assert!(text.contains("locking_range_max_rad_per_s"));
    assert_eq!(text.matches("delta_I_mA").count(), 8);
}

#[test]
fn every_bundled_recipe_validates() {
    let o = phaseseed(&["recipes"]);
    let names = stdout(&o);
    assert!(names.lines().count() >= 11);
    for name in names.lines() {
        let v = phaseseed(&["--quiet", "validate", name]);
        assert_eq!(code(&v), 0, "{name}: {}", stderr(&v));
    }
}

#[test]
fn negative_photon_lifetime_names_the_key() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "bad.json", r#"{"scenario": "cw_seed", "primary": {"tau_p_ps": -1.0}}"#);
    let o = phaseseed(&["validate", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("primary.tau_p_ps"), "{}", stderr(&o));
}

#[test]
fn every_violation_is_listed() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "bad.json",
        r#"{"scenario": "cw_seed", "secondary": {"beta": 2.0}, "injection": {"efficiency": 1.5}, "qrng": {"adc_bits": 0}}"#,
    );
    let o = phaseseed(&["validate", &cfg]);
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    for key in ["secondary.beta", "injection.efficiency", "qrng.adc_bits"] {
        assert!(e.contains(key), "{key} missing from {e}");
    }
}

#[test]
fn perturbation_overlapping_the_pulses_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "bad.json", r#"{"scenario": "mdpsk:4", "modulation": {"perturbation_duty": 0.6}}"#);
    let o = phaseseed(&["validate", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("overlaps"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_report_their_position() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "bad.json", "{\n  \"scenario\": \"gain_switch\",\n  \"bogus\": 1\n}\n");
    let o = phaseseed(&["validate", &cfg]);
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    assert!(e.contains("bad.json:3:"), "{e}");
    assert!(e.contains("bogus"), "{e}");
}

#[test]
fn unknown_scenario_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "bad.json", r#"{"scenario": "mdpsk:3"}"#);
    let o = phaseseed(&["simulate", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("scenario"));
}

#[test]
fn runaway_integration_exits_3() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "hot.json",
        r#"{"scenario": "gain_switch", "secondary_drive": {"on_ith": 1e306}, "pulses": {"count": 4, "warmup": 0}}"#,
    );
    let o = phaseseed(&["--out", &out(&tmp, "o"), "simulate", &cfg]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn io_failures_exit_4() {
    let tmp = TempDir::new().unwrap();
    let o = phaseseed(&["simulate", &out(&tmp, "missing.json")]);
    assert_eq!(code(&o), 4);
    let cfg = write_config(&tmp, "run.json", SMALL);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let o = phaseseed(&["--out", blocker.join("sub").to_str().unwrap(), "simulate", &cfg]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn empty_sweep_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "run.json", SMALL);
    let o = phaseseed(&["--out", &out(&tmp, "o"), "sweep", &cfg, "--param", "injection.efficiency", "--values", ""]);
    assert_eq!(code(&o), 2);
    assert!(!tmp.path().join("o").exists());
    let o = phaseseed(&["sweep", &cfg, "--param", "no.such.key", "--values", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no.such.key"));
}

fn sweep_rows(dir: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(dir.join("sweep.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn detuning_sweep_shows_the_locking_edges() {
    let p = LaserParams::typical_dfb();
    let i = 3.0 * p.threshold_current();
    let r = injection_ratio(&p, i, &p, i, 0.1).unwrap();
    let range = locking_range(&p, &InjectionConfig::new(p.injection_coupling, 0.0, 0.1).unwrap(), r).unwrap();
    let values: Vec<String> = [0.5 * range.omega_max, 2.0 * range.omega_max, 0.5 * range.omega_min, 2.0 * range.omega_min]
        .iter()
        .map(|x| format!("{x:e}"))
        .collect();
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "lock.json",
        r#"{
  "scenario": "cw_seed",
  "secondary_drive": {"off_ith": 3.0, "on_ith": 3.0},
  "modulation": {"base_ith": 3.0},
  "injection": {"efficiency": 0.1, "compensate_chirp": false},
  "noise": {"enabled": false},
  "pulses": {"count": 40, "warmup": 40},
  "outputs": {"trajectory_pulses": 1, "trajectory_stride": 50}
}"#,
    );
    let dir = tmp.path().join("o");
    let list = values.join(",");
    let o = phaseseed(&["--quiet", "--out", dir.to_str().unwrap(), "sweep", &cfg, "--param", "injection.detuning_rad_per_s", "--values", &list]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let slips: Vec<usize> = sweep_rows(&dir).iter().map(|r| r[6].parse().unwrap()).collect();
    assert_eq!(slips[0], 0);
    assert!(slips[1] > 0);
    assert_eq!(slips[2], 0);
    assert!(slips[3] > 0);
    for k in 0..4 {
        assert!(dir.join(format!("run_{k:03}/manifest.json")).exists());
    }
    let top = manifest(&dir);
    let paths: Vec<&str> = top["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
    assert!(paths.contains(&"run_003/pulses.csv"));
    assert!(paths.contains(&"sweep.csv"));
}

#[test]
fn injection_cuts_jitter_across_the_efficiency_sweep() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "jit.json",
        r#"{
  "scenario": "cw_seed",
  "seed": 3,
  "modulation": {"base_ith": 3.0},
  "pulses": {"count": 400, "warmup": 10},
  "outputs": {"trajectory_pulses": 1, "trajectory_stride": 50}
}"#,
    );
    let dir = tmp.path().join("o");
    let o = phaseseed(&["--quiet", "--out", dir.to_str().unwrap(), "sweep", &cfg, "--param", "injection.efficiency", "--values", "0,0.005,0.01,0.02,0.05,0.1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let std: Vec<f64> = sweep_rows(&dir).iter().map(|r| r[2].parse().unwrap()).collect();
    // Relative standard error of a sample standard deviation.
    let slack = 1.0 + 3.0 / (2.0 * 400.0f64).sqrt();
    for w in std[..4].windows(2) {
        assert!(w[1] <= w[0] * slack, "{std:?}");
    }
    assert!(std[1..].iter().all(|&s| s < 0.2 * std[0]), "{std:?}");
}

fn csv_column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let col = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn gain_switch_recipe_shows_relaxation_oscillations() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("o");
    let o = phaseseed(&["--quiet", "--out", dir.to_str().unwrap(), "simulate", "fig04_gain_switch"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let power = csv_column(&dir.join("trajectory.csv"), "P_W");
    let current = csv_column(&dir.join("trajectory.csv"), "I_A");
    // Second pulse: from its rising current edge to its falling edge.
    let rises: Vec<usize> = (1..current.len()).filter(|&k| current[k] > current[k - 1]).collect();
    let start = rises[0];
    let stop = start + current[start..].iter().position(|&i| i < current[start]).unwrap();
    let seg = &power[start..stop];
    let settled = seg[seg.len() - 200..].iter().sum::<f64>() / 200.0;
    let (peak_at, peak) = seg.iter().enumerate().fold((0, 0.0), |a, (k, &p)| if p > a.1 { (k, p) } else { a });
    assert!(peak > 2.0 * settled, "overshoot {peak} vs {settled}");
    assert!(peak_at > 0 && seg[0] < 0.01 * peak, "pulse must build up from a dark cavity");
    // Damped ringing: the 2 ps averaged power leaves a +-4% band around its
    // final level, alternating sides, at least three times after the spike.
    let mut swings = 0;
    let mut above = true;
    for p in seg[peak_at..].chunks(20).map(|c| c.iter().sum::<f64>() / c.len() as f64) {
        if above && p < 0.96 * settled {
            swings += 1;
            above = false;
        } else if !above && p > 1.04 * settled {
            swings += 1;
            above = true;
        }
    }
    assert!(swings >= 3, "{swings} swings");
    // After switch-off the light dies within the slot.
    assert!(power[stop + 5000] < 1e-3 * settled);
}

#[test]
fn pulsed_seeding_recipe_gives_four_clusters_and_random_global_phase() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("o");
    let o = phaseseed(&["--quiet", "--out", dir.to_str().unwrap(), "simulate", "fig16_pulsed_seeding"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let assigned = csv_column(&dir.join("iq.csv"), "assigned_target_index");
    let phase = csv_column(&dir.join("iq.csv"), "phase_rad");
    let symbols = csv_column(&dir.join("symbols.csv"), "value");
    for t in 0..4 {
        let members: Vec<f64> = phase.iter().zip(&assigned).filter(|(_, &a)| a == t as f64).map(|(p, _)| *p).collect();
        assert!(members.len() > 150, "cluster {t} has {}", members.len());
        let target = std::f64::consts::FRAC_PI_2 * t as f64;
        let (s, c) = members.iter().fold((0.0, 0.0), |(s, c), p| (s + (p - target).sin(), c + (p - target).cos()));
        let r = (s * s + c * c).sqrt() / members.len() as f64;
        assert!(r > 0.95, "cluster {t} resultant {r}");
    }
    assert!(assigned.iter().zip(&symbols).all(|(a, v)| a == v));
    let report = fs::read_to_string(dir.join("report.txt")).unwrap();
    assert!(report.contains("global_phase_uniform: true"), "{report}");
    assert_eq!(csv_column(&dir.join("global_iq.csv"), "phase_rad").len(), 999);
}
