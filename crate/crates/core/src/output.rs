//! Long-format CSV and JSON writers.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which parses back
//! to the same `f64`.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::euler::EulerFrame;
use crate::model::Problem;
use crate::stepper::Trajectory;

pub const TIMESERIES_HEADER: &str = "t,cell,y,J,v,theta,G,eta";
pub const EULER_HEADER: &str = "t,x,y,rho,u,theta";

fn num(out: &mut String, x: f64) {
    write!(out, ",{x:.16e}").unwrap();
}

/// One row per cell per snapshot. `y` is the cell centre; the node fields `v`
/// and `eta` are averaged onto it.
pub fn timeseries_csv(traj: &Trajectory, problem: &Problem) -> String {
    let g = &problem.grid;
    let mut out = String::from(TIMESERIES_HEADER);
    out.push('\n');
    for snap in &traj.snapshots {
        let s = &snap.state;
        let flux = s.effective_flux(problem);
        for c in 0..g.cells {
            write!(out, "{:.16e},{c}", s.t).unwrap();
            num(&mut out, g.center(c));
            num(&mut out, s.jac[c]);
            num(&mut out, 0.5 * (s.v[c] + s.v[c + 1]));
            num(&mut out, s.theta[c]);
            num(&mut out, flux[c]);
            let eta = 0.5 * (g.node(c) + s.acc_eta[c] + g.node(c + 1) + s.acc_eta[c + 1]);
            num(&mut out, eta);
            out.push('\n');
        }
    }
    out
}

pub fn euler_csv(frames: &[EulerFrame]) -> String {
    let mut out = String::from(EULER_HEADER);
    out.push('\n');
    for f in frames {
        for k in 0..f.x.len() {
            write!(out, "{:.16e}", f.t).unwrap();
            for x in [f.x[k], f.y[k], f.rho[k], f.u[k], f.theta[k]] {
                num(&mut out, x);
            }
            out.push('\n');
        }
    }
    out
}

/// Pretty JSON with fields in declaration order and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| Error::Structural(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes `contents`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)
}

pub fn write_timeseries(traj: &Trajectory, problem: &Problem, path: &Path) -> Result<()> {
    write_file(path, &timeseries_csv(traj, problem))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_file(path, &to_json(value)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::{audit_trajectory, AuditConfig};
    use crate::grid::{Grid, ThetaBc};
    use crate::model::PhysicalParams;
    use crate::profiles;
    use crate::stepper::{run, SchemeConfig};

    fn stationary(n: usize) -> Problem {
        let g = Grid::new(1.0, n).unwrap();
        Problem::new(
            &profiles::constant(&g, 1.0, 1.0),
            &PhysicalParams::default(),
            g,
            ThetaBc::NeumannNeumann,
        )
        .unwrap()
    }

    #[test]
    fn stationary_csv_row_count_and_round_trip() {
        let p = stationary(2);
        let traj = run(&p, &SchemeConfig::fixed(0.01), 0.1, &[]).unwrap();
        assert_eq!(traj.snapshots.len(), 2);
        let csv = timeseries_csv(&traj, &p);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], TIMESERIES_HEADER);
        assert_eq!(lines.len(), 5);
        let last: Vec<&str> = lines[4].split(',').collect();
        assert_eq!(last.len(), 8);
        assert_eq!(last[1], "1");
        let t: f64 = last[0].parse().unwrap();
        assert_eq!(t, traj.last().t);
        let j: f64 = last[3].parse().unwrap();
        assert_eq!(j, traj.last().jac[1]);
    }

    #[test]
    fn t0_audit_json_has_zero_errors() {
        let p = stationary(4);
        let traj = run(&p, &SchemeConfig::fixed(0.01), 0.05, &[]).unwrap();
        let report = audit_trajectory(&traj, &p, &AuditConfig::default()).unwrap();
        let json: serde_json::Value = serde_json::from_str(&to_json(&report).unwrap()).unwrap();
        let r0 = &json["records"][0];
        assert_eq!(r0["t"], 0.0);
        for key in ["mass_error", "energy_error", "ks_residual_sup"] {
            assert_eq!(r0[key]["value"], 0.0, "{key}");
            assert!(r0[key]["threshold"].is_number());
            assert_eq!(r0[key]["verdict"], "pass");
        }
        assert_eq!(to_json(&report).unwrap(), to_json(&report.clone()).unwrap());
    }

    #[test]
    fn io_errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let target = blocker.join("sub").join("a.json");
        let e = write_file(&target, "{}").unwrap_err();
        assert!(matches!(e, Error::Io { .. }));
        assert!(e.to_string().contains("file"));
        let ok = dir.path().join("deep").join("a.csv");
        write_file(&ok, "a\n").unwrap();
        assert_eq!(std::fs::read_to_string(ok).unwrap(), "a\n");
    }
}
