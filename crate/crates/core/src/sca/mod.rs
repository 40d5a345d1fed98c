//! Successive convex approximation of the joint trajectory/phase problem.
//!
//! Each outer iteration linearizes the per-slot rate around the current
//! trajectory, maximizes the resulting convex surrogate over the mobility
//! constraints, re-aligns the RIS phases in closed form and evaluates the
//! true average rate. Because the surrogate is a global under-estimator that
//! is exact at the expansion point, the true rate never decreases.

mod barrier;
pub mod disc;
pub mod subproblem;
pub mod surrogate;

use serde::{Deserialize, Serialize};

use crate::beamforming::{average_rate, optimal_phases, PhaseSchedule};
use crate::channel::SlotFading;
use crate::error::{Error, Result};
use crate::scenario::{Scenario, Trajectory};

pub use subproblem::{solve_subproblem, ChainProblem, ChainSolution, SubproblemSolution};
pub use surrogate::{slack_from_trajectory, surrogate_lower_bound, taylor_coeffs, SurrogateCoeffs};

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Uniformly spaced straight line from `q0` towards `qF`.
    StraightLine,
    Given(Trajectory),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaOptions {
    /// Relative-improvement threshold of the outer loop.
    pub epsilon: f64,
    pub max_iter: usize,
    pub init: Init,
    /// Stop the block-coordinate sweeps once a sweep gains less than this.
    pub inner_tol: f64,
    pub max_sweeps: usize,
    /// Keep every accepted trajectory in [`IterationRecord::trajectory`].
    pub record_iterates: bool,
}

impl Default for ScaOptions {
    fn default() -> Self {
        ScaOptions {
            epsilon: 1e-4,
            max_iter: 500,
            init: Init::StraightLine,
            inner_tol: 1e-8,
            max_sweeps: 200,
            record_iterates: false,
        }
    }
}

/// One accepted outer iterate. Iteration 0 is the initial point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub avg_rate_bps_hz: f64,
    /// `(1/N) * surrogate` at the new iterate (NaN for iteration 0).
    pub surrogate_obj: f64,
    /// `(1/N) * surrogate` at the expansion point, equal to the previous rate.
    pub surrogate_at_expansion: f64,
    /// Largest waypoint displacement relative to the previous iterate.
    pub max_step_m: f64,
    pub subproblem_sweeps: usize,
    /// Largest `|u - d_UG| / u` and `|v - d_UR| / v` of the slacks carried
    /// into the next iteration.
    pub slack_gap: f64,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone)]
pub struct ScaOutcome {
    pub trajectory: Trajectory,
    pub schedule: PhaseSchedule,
    /// `R_k` for `k = 0..=iterations`.
    pub objective_log: Vec<f64>,
    pub history: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
}

impl ScaOutcome {
    pub fn final_rate(&self) -> f64 {
        *self.objective_log.last().expect("log holds the initial rate")
    }
}

fn max_slack_gap(traj: &Trajectory, scenario: &Scenario, u: &[f64], v: &[f64]) -> f64 {
    traj.points
        .iter()
        .zip(u.iter().zip(v))
        .map(|(&q, (&u, &v))| {
            let gu = (u - scenario.d_ug(q)).abs() / u;
            let gv = (v - scenario.d_ur(q)).abs() / v;
            gu.max(gv)
        })
        .fold(0.0, f64::max)
}

/// Runs the outer loop until `(R_k - R_{k-1}) / R_k < epsilon` or
/// `max_iter` iterations.
pub fn run_sca<F: SlotFading + ?Sized>(scenario: &Scenario, fading: &F, options: &ScaOptions) -> Result<ScaOutcome> {
    if !(options.epsilon > 0.0) {
        return Err(Error::Domain("epsilon must be positive".into()));
    }
    scenario.validate()?;
    let mut traj = match &options.init {
        Init::StraightLine => scenario.straight_line(),
        Init::Given(t) => t.clone(),
    };
    let report = traj.check_mobility(scenario);
    if !report.is_empty() {
        return Err(Error::Infeasible(format!("initial trajectory: {}", report.violations[0])));
    }

    let mut schedule = optimal_phases(&traj, fading, scenario)?;
    let mut rate = average_rate(&traj, &schedule, fading, scenario)?;
    let mut objective_log = vec![rate];
    let (u, v) = slack_from_trajectory(&traj, scenario);
    let mut history = vec![IterationRecord {
        iter: 0,
        avg_rate_bps_hz: rate,
        surrogate_obj: f64::NAN,
        surrogate_at_expansion: f64::NAN,
        max_step_m: 0.0,
        subproblem_sweeps: 0,
        slack_gap: max_slack_gap(&traj, scenario, &u, &v),
        trajectory: options.record_iterates.then(|| traj.clone()),
    }];
    let n = scenario.n_slots as f64;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iter {
        iterations += 1;
        let sub = solve_subproblem(&traj, fading, scenario, options.inner_tol, options.max_sweeps)?;
        let report = sub.trajectory.check_mobility(scenario);
        if !report.is_empty() {
            return Err(Error::Solver(format!("subproblem returned an infeasible trajectory: {}", report.violations[0])));
        }
        let displacement = sub.trajectory.max_displacement(&traj);
        traj = sub.trajectory;
        schedule = optimal_phases(&traj, fading, scenario)?;
        let prev = rate;
        rate = average_rate(&traj, &schedule, fading, scenario)?;
        objective_log.push(rate);

        // slacks re-tightened to the distances of the accepted trajectory
        let (u, v) = slack_from_trajectory(&traj, scenario);
        history.push(IterationRecord {
            iter: iterations,
            avg_rate_bps_hz: rate,
            surrogate_obj: sub.surrogate_at_solution / n,
            surrogate_at_expansion: sub.surrogate_at_expansion / n,
            max_step_m: displacement,
            subproblem_sweeps: sub.sweeps,
            slack_gap: max_slack_gap(&traj, scenario, &u, &v),
            trajectory: options.record_iterates.then(|| traj.clone()),
        });

        if rate == 0.0 || (rate - prev) / rate < options.epsilon {
            converged = true;
            break;
        }
    }

    Ok(ScaOutcome {
        trajectory: traj,
        schedule,
        objective_log,
        history,
        iterations,
        converged,
    })
}
