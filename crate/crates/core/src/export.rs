//! Plain-text output formats. All writers emit LF line endings.

use std::io::{self, Write};

use crate::drive::SymbolPattern;
use crate::dynamics::Trajectory;
use crate::measurement::IqPoint;
use crate::photon::DensityMatrix;

/// `printf("%.12e")` formatting: twelve fraction digits, signed exponent of
/// at least two digits.
pub fn sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.12e}");
    let (mant, exp) = s.split_once('e').unwrap_or((&s, "0"));
    let e: i32 = exp.parse().unwrap_or(0);
    let sign = if e < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", e.abs())
}

pub const TRAJECTORY_HEADER: &str = "t_s,I_A,N_per_m3,S_per_m3,P_W,phi_rad";

pub fn trajectory_row(t: f64, current: f64, n: f64, s: f64, p: f64, phi: f64) -> String {
    format!("{},{},{},{},{},{}\n", sci(t), sci(current), sci(n), sci(s), sci(p), sci(phi))
}

pub fn write_trajectory<W: Write>(mut w: W, traj: &Trajectory) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for k in 0..traj.len() {
        w.write_all(
            trajectory_row(
                traj.time(k),
                traj.current[k],
                traj.carrier_density[k],
                traj.photon_density[k],
                traj.power[k],
                traj.phase[k],
            )
            .as_bytes(),
        )?;
    }
    Ok(())
}

pub fn write_symbols<W: Write>(mut w: W, pattern: &SymbolPattern) -> io::Result<()> {
    writeln!(w, "symbol_index,protocol,value,basis")?;
    let name = pattern.protocol.name();
    for (k, v) in pattern.values.iter().enumerate() {
        let basis = pattern
            .bases
            .as_ref()
            .map(|b| b[k].to_string())
            .unwrap_or_default();
        writeln!(w, "{k},{name},{v},{basis}")?;
    }
    Ok(())
}

/// IQ points with their assigned constellation target, if any.
pub fn write_iq<W: Write>(mut w: W, points: &[IqPoint], assigned: Option<&[usize]>) -> io::Result<()> {
    writeln!(w, "symbol_index,I,Q,phase_rad,assigned_target_index")?;
    for (k, p) in points.iter().enumerate() {
        let a = assigned.map(|a| a[k].to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{}", p.symbol_index, sci(p.i), sci(p.q), sci(p.phase()), a)?;
    }
    Ok(())
}

pub fn write_density_matrix<W: Write>(mut w: W, m: &DensityMatrix) -> io::Result<()> {
    writeln!(w, "row,col,re,im")?;
    for (r, c, v) in m.entries_above(1e-15) {
        writeln!(w, "{r},{c},{},{}", sci(v.re), sci(v.im))?;
    }
    Ok(())
}

pub fn write_histogram<W: Write>(mut w: W, histogram: &[u64]) -> io::Result<()> {
    writeln!(w, "code,count")?;
    for (c, n) in histogram.iter().enumerate() {
        writeln!(w, "{c},{n}")?;
    }
    Ok(())
}

/// `key: value` report, one entry per line, in the given order.
pub fn write_report<W: Write>(mut w: W, entries: &[(String, String)]) -> io::Result<()> {
    for (k, v) in entries {
        writeln!(w, "{k}: {v}")?;
    }
    Ok(())
}
