//! CSV formats for trajectories, phase schedules, iteration logs and sweeps.
//!
//! Slots and elements are numbered from 1 on disk. Floats are written in
//! shortest round-trip form, so a write/read cycle is lossless and two runs
//! with equal inputs produce identical bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::beamforming::PhaseSchedule;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::sca::IterationRecord;
use crate::scenario::Trajectory;

pub const TRAJECTORY_HEADER: [&str; 3] = ["slot", "x_m", "y_m"];
pub const PHASES_HEADER: [&str; 3] = ["slot", "element", "theta_rad"];

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRow {
    slot: usize,
    x_m: f64,
    y_m: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PhaseRow {
    slot: usize,
    element: usize,
    theta_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub iter: usize,
    pub avg_rate_bps_hz: f64,
    pub surrogate_obj: f64,
    pub max_step_m: f64,
    pub subproblem_sweeps: usize,
    pub slack_gap: f64,
}

impl From<&IterationRecord> for IterationRow {
    fn from(r: &IterationRecord) -> Self {
        IterationRow {
            iter: r.iter,
            avg_rate_bps_hz: r.avg_rate_bps_hz,
            surrogate_obj: r.surrogate_obj,
            max_step_m: r.max_step_m,
            subproblem_sweeps: r.subproblem_sweeps,
            slack_gap: r.slack_gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "T_s")]
    pub t_s: f64,
    pub algorithm: String,
    pub avg_rate_bps_hz: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub algorithm: String,
    pub avg_rate_bps_hz: f64,
    pub stderr: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trajectory_file: String,
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn from_csv<T: for<'de> Deserialize<'de>>(text: &str, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let found: Vec<&str> = r.headers()?.iter().collect();
    if found != header {
        return Err(Error::Parse(format!("expected header `{}`, found `{}`", header.join(","), found.join(","))));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    to_csv(traj.points.iter().enumerate().map(|(k, p)| TrajectoryRow {
        slot: k + 1,
        x_m: p.x,
        y_m: p.y,
    }))
}

/// Parses `slot,x_m,y_m` with slots `1..=N` in order and finite coordinates.
pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory> {
    let rows: Vec<TrajectoryRow> = from_csv(text, &TRAJECTORY_HEADER)?;
    if rows.is_empty() {
        return Err(Error::Parse("trajectory has no waypoints".into()));
    }
    let mut points = Vec::with_capacity(rows.len());
    for (k, row) in rows.into_iter().enumerate() {
        if row.slot != k + 1 {
            return Err(Error::Parse(format!("row {}: expected slot {}, found {}", k + 1, k + 1, row.slot)));
        }
        let p = Vec2::new(row.x_m, row.y_m);
        if !p.is_finite() {
            return Err(Error::Parse(format!("slot {}: non-finite coordinate", row.slot)));
        }
        points.push(p);
    }
    Ok(Trajectory::new(points))
}

pub fn phases_csv(schedule: &PhaseSchedule) -> Result<String> {
    to_csv(schedule.theta.iter().enumerate().flat_map(|(n, row)| {
        row.iter().enumerate().map(move |(i, &t)| PhaseRow {
            slot: n + 1,
            element: i + 1,
            theta_rad: t,
        })
    }))
}

/// Parses `slot,element,theta_rad` in slot-major order covering a full
/// `N x M` grid with phases in `[0, 2*pi)`.
pub fn parse_phases_csv(text: &str) -> Result<PhaseSchedule> {
    let rows: Vec<PhaseRow> = from_csv(text, &PHASES_HEADER)?;
    let m = rows.iter().take_while(|r| r.slot == 1).count();
    if m == 0 || rows.len() % m != 0 {
        return Err(Error::Parse("phase rows do not form a complete slot x element grid".into()));
    }
    let mut theta = vec![Vec::with_capacity(m); rows.len() / m];
    for (k, row) in rows.into_iter().enumerate() {
        let (slot, element) = (k / m + 1, k % m + 1);
        if row.slot != slot || row.element != element {
            return Err(Error::Parse(format!(
                "row {}: expected slot {slot} element {element}, found slot {} element {}",
                k + 1,
                row.slot,
                row.element
            )));
        }
        theta[slot - 1].push(row.theta_rad);
    }
    let schedule = PhaseSchedule { theta };
    schedule.validate()?;
    Ok(schedule)
}

pub fn iteration_log_csv(history: &[IterationRecord]) -> Result<String> {
    to_csv(history.iter().map(IterationRow::from))
}

pub fn parse_iteration_log_csv(text: &str) -> Result<Vec<IterationRow>> {
    from_csv(
        text,
        &["iter", "avg_rate_bps_hz", "surrogate_obj", "max_step_m", "subproblem_sweeps", "slack_gap"],
    )
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    to_csv(rows)
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    from_csv(text, &["T_s", "algorithm", "avg_rate_bps_hz", "stderr"])
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> Result<String> {
    to_csv(rows)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    #[test]
    fn trajectory_format() {
        let t = Trajectory::new(vec![Vec2::new(-500.0, 20.0), Vec2::new(-475.5, 20.125)]);
        let text = trajectory_csv(&t).unwrap();
        assert_eq!(text, "slot,x_m,y_m\n1,-500.0,20.0\n2,-475.5,20.125\n");
        assert_eq!(parse_trajectory_csv(&text).unwrap(), t);
    }

    #[test]
    fn phases_format() {
        let s = PhaseSchedule { theta: vec![vec![0.0, 1.5], vec![3.0, 0.25]] };
        let text = phases_csv(&s).unwrap();
        assert!(text.starts_with("slot,element,theta_rad\n1,1,0.0\n1,2,1.5\n2,1,3.0\n"));
        assert_eq!(parse_phases_csv(&text).unwrap(), s);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        for bad in [
            "",
            "slot,x,y\n1,0,0\n",
            "slot,x_m,y_m\n",
            "slot,x_m,y_m\n2,0,0\n",
            "slot,x_m,y_m\n1,NaN,0\n",
            "slot,x_m,y_m\n1,abc,0\n",
        ] {
            assert!(parse_trajectory_csv(bad).is_err(), "{bad:?}");
        }
        for bad in [
            "slot,element,theta_rad\n",
            "slot,element,theta_rad\n1,1,0\n1,2,0\n2,1,0\n",
            "slot,element,theta_rad\n1,1,0\n2,2,0\n",
            "slot,element,theta_rad\n1,1,7.0\n",
            "slot,element,theta_rad\n1,1,-0.1\n",
        ] {
            assert!(parse_phases_csv(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn nan_surrogate_survives_round_trip() {
        let rows = [IterationRow {
            iter: 0,
            avg_rate_bps_hz: 1.25,
            surrogate_obj: f64::NAN,
            max_step_m: 0.0,
            subproblem_sweeps: 0,
            slack_gap: 0.0,
        }];
        let text = to_csv(&rows).unwrap();
        let back = parse_iteration_log_csv(&text).unwrap();
        assert!(back[0].surrogate_obj.is_nan());
        assert_eq!(back[0].avg_rate_bps_hz, 1.25);
    }

    #[test]
    fn sweep_round_trip() {
        let rows = vec![SweepRow {
            t_s: 200.0,
            algorithm: "HT/NPB".into(),
            avg_rate_bps_hz: 0.4438,
            stderr: 5e-4,
        }];
        let text = sweep_csv(&rows).unwrap();
        assert!(text.starts_with("T_s,algorithm,avg_rate_bps_hz,stderr\n"));
        assert_eq!(parse_sweep_csv(&text).unwrap(), rows);
    }

    proptest! {
        #[test]
        fn trajectory_round_trip_is_lossless(pts in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 1..40)) {
            let t = Trajectory::new(pts.into_iter().map(|(x, y)| Vec2::new(x, y)).collect());
            prop_assert_eq!(parse_trajectory_csv(&trajectory_csv(&t).unwrap()).unwrap(), t);
        }

        #[test]
        fn phases_round_trip_is_lossless(n in 1usize..6, m in 1usize..6, raw in prop::collection::vec(0.0f64..TAU, 36)) {
            let theta = (0..n).map(|i| (0..m).map(|j| raw[i * 6 + j]).collect()).collect();
            let s = PhaseSchedule { theta };
            prop_assert_eq!(parse_phases_csv(&phases_csv(&s).unwrap()).unwrap(), s);
        }

        #[test]
        fn parsers_never_panic(text in ".{0,200}") {
            let _ = parse_trajectory_csv(&text);
            let _ = parse_phases_csv(&text);
            let _ = parse_iteration_log_csv(&text);
        }
    }
}
