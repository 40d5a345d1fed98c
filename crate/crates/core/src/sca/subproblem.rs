//! The convex trajectory subproblem solved at every outer iteration.
//!
//! The linearized slack constraints are tight at the optimum because the
//! surrogate is decreasing in both slacks, so `u` and `v` can be eliminated:
//! `u = (d_UG^2 + u0^2) / (2 u0)`. What remains is a separable concave
//! quadratic
//!
//! ```text
//! sum_n c1[n] |q[n] - wG|^2 + c2[n] |q[n] - wR|^2,   c1, c2 <= 0
//! ```
//!
//! maximized over the chain of mobility discs. Each block (one waypoint,
//! neighbours fixed) is isotropic, so its optimum is the projection of the
//! weighted centroid of `wG` and `wR` onto the lens formed by the two
//! neighbouring discs.

use std::f64::consts::LN_2;

use crate::channel::SlotFading;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::scenario::{Scenario, Trajectory};

use super::disc::{project_onto_lens, Disc};
use super::barrier::solve_barrier;
use super::surrogate::{
    slack_from_trajectory, surrogate_lower_bound, taylor_coeffs_per_slot, tight_linearized_slack, SurrogateCoeffs,
};

/// Maximize `sum_n c1[n] |q[n] - w_g|^2 + c2[n] |q[n] - w_r|^2` subject to
/// `q[0] = start`, `|q[n+1] - q[n]| <= step`, `|q[N-1] - end| <= step`.
#[derive(Debug, Clone)]
pub struct ChainProblem {
    pub start: Vec2,
    pub end: Vec2,
    pub step: f64,
    pub w_g: Vec2,
    pub w_r: Vec2,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ChainSolution {
    pub points: Vec<Vec2>,
    pub sweeps: usize,
    /// Objective gain of the final sweep.
    pub last_improvement: f64,
    pub newton_steps: usize,
}

impl ChainProblem {
    pub fn len(&self) -> usize {
        self.c1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c1.is_empty()
    }

    fn slot_value(&self, n: usize, q: Vec2) -> f64 {
        self.c1[n] * (q - self.w_g).norm_sq() + self.c2[n] * (q - self.w_r).norm_sq()
    }

    pub fn objective(&self, points: &[Vec2]) -> f64 {
        points.iter().enumerate().map(|(n, &q)| self.slot_value(n, q)).sum()
    }

    /// Unconstrained maximizer of slot `n`, or `None` when the slot's
    /// objective is flat.
    pub fn attractor(&self, n: usize) -> Option<Vec2> {
        let w = self.c1[n] + self.c2[n];
        if w == 0.0 {
            None
        } else {
            Some((self.w_g * self.c1[n] + self.w_r * self.c2[n]) * (1.0 / w))
        }
    }

    fn validate(&self, init: &[Vec2]) -> Result<()> {
        if self.c2.len() != self.c1.len() || init.len() != self.c1.len() {
            return Err(Error::Domain("coefficient and waypoint counts differ".into()));
        }
        if !self.c1.iter().chain(&self.c2).all(|c| c.is_finite() && *c <= 0.0) {
            return Err(Error::Solver("subproblem weights must be finite and non-positive".into()));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Domain("step must be positive".into()));
        }
        Ok(())
    }

    /// Cyclic block-coordinate ascent from a feasible `init`. Stops when a
    /// sweep gains less than `tol` or after `max_sweeps` sweeps.
    pub fn solve(&self, init: &[Vec2], tol: f64, max_sweeps: usize) -> Result<ChainSolution> {
        self.validate(init)?;
        let n = init.len();
        let mut q = init.to_vec();
        q[0] = self.start;
        let mut sweeps = 0;
        let mut last_improvement = 0.0;
        while sweeps < max_sweeps {
            sweeps += 1;
            let mut gain = 0.0;
            for k in 1..n {
                let Some(target) = self.attractor(k) else { continue };
                let prev = Disc::new(q[k - 1], self.step);
                let next = Disc::new(if k + 1 < n { q[k + 1] } else { self.end }, self.step);
                let candidate = project_onto_lens(target, prev, next)?;
                let delta = self.slot_value(k, candidate) - self.slot_value(k, q[k]);
                // keep the incumbent on (rounding-level) ties so the objective never drops
                if delta > 0.0 {
                    q[k] = candidate;
                    gain += delta;
                }
            }
            last_improvement = gain;
            if gain < tol {
                break;
            }
        }
        Ok(ChainSolution {
            points: q,
            sweeps,
            last_improvement,
            newton_steps: 0,
        })
    }

    /// Global solve: an interior-point pass over the whole chain, polished by
    /// coordinate ascent. Coordinate ascent from `init` is run as well and
    /// the better of the two is kept, so the result never scores below `init`.
    pub fn solve_global(&self, init: &[Vec2], tol: f64, max_sweeps: usize) -> Result<ChainSolution> {
        let local = self.solve(init, tol, max_sweeps)?;
        let Some(ip) = solve_barrier(self, 1e-13)? else {
            return Ok(local);
        };
        let mut polished = self.solve(&ip.points, tol, max_sweeps)?;
        polished.newton_steps = ip.newton_steps;
        if self.objective(&polished.points) > self.objective(&local.points) {
            Ok(polished)
        } else {
            Ok(ChainSolution { newton_steps: ip.newton_steps, ..local })
        }
    }
}

/// Result of one subproblem solve around an expansion trajectory.
#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub trajectory: Trajectory,
    pub coeffs: SurrogateCoeffs,
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
    /// Slack values of the solution (tight in the linearized constraints).
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Surrogate (sum over slots) at the expansion point and at the solution.
    pub surrogate_at_expansion: f64,
    pub surrogate_at_solution: f64,
    pub sweeps: usize,
    pub last_improvement: f64,
}

pub fn slot_amplitudes<F: SlotFading + ?Sized>(fading: &F, n_slots: usize) -> Vec<(f64, f64)> {
    (0..n_slots)
        .map(|n| {
            let r = fading.at_slot(n);
            (r.a, r.b)
        })
        .collect()
}

/// Builds the eliminated problem around `traj0` from its surrogate coefficients.
pub fn chain_problem(scenario: &Scenario, coeffs: &SurrogateCoeffs, u0: &[f64], v0: &[f64]) -> ChainProblem {
    let c1 = (0..coeffs.len())
        .map(|n| coeffs.b0[n] / (2.0 * u0[n] * coeffs.a0[n] * LN_2))
        .collect();
    let c2 = (0..coeffs.len())
        .map(|n| coeffs.c0[n] / (2.0 * v0[n] * coeffs.a0[n] * LN_2))
        .collect();
    ChainProblem {
        start: scenario.q0,
        end: scenario.q_f,
        step: scenario.max_step(),
        w_g: scenario.w_g,
        w_r: scenario.w_r,
        c1,
        c2,
    }
}

/// Maximizes the surrogate around the feasible trajectory `traj0`.
pub fn solve_subproblem<F: SlotFading + ?Sized>(
    traj0: &Trajectory,
    fading: &F,
    scenario: &Scenario,
    tol: f64,
    max_sweeps: usize,
) -> Result<SubproblemSolution> {
    if !(tol > 0.0) {
        return Err(Error::Domain("subproblem tolerance must be positive".into()));
    }
    let report = traj0.check_mobility(scenario);
    if !report.is_empty() {
        return Err(Error::Infeasible(format!(
            "expansion trajectory violates mobility constraints: {}",
            report.violations[0]
        )));
    }
    let (u0, v0) = slack_from_trajectory(traj0, scenario);
    let dz = scenario.z_u - scenario.z_r;
    debug_assert!(u0.iter().all(|&u| u >= scenario.z_u * (1.0 - 1e-12)));
    debug_assert!(v0.iter().all(|&v| v >= dz * (1.0 - 1e-12)));

    let amps = slot_amplitudes(fading, traj0.len());
    let coeffs = taylor_coeffs_per_slot(&u0, &v0, &amps, scenario.gamma0(), scenario.kappa)?;
    if !coeffs.is_finite() {
        return Err(Error::Solver("non-finite surrogate coefficients".into()));
    }
    let problem = chain_problem(scenario, &coeffs, &u0, &v0);
    let chain = problem.solve_global(&traj0.points, tol, max_sweeps)?;
    let trajectory = Trajectory::new(chain.points);

    let (d_ug, d_ur) = slack_from_trajectory(&trajectory, scenario);
    let u: Vec<f64> = d_ug.iter().zip(&u0).map(|(&d, &e)| tight_linearized_slack(d, e)).collect();
    let v: Vec<f64> = d_ur.iter().zip(&v0).map(|(&d, &e)| tight_linearized_slack(d, e)).collect();
    let surrogate_at_expansion = surrogate_lower_bound(&u0, &v0, &u0, &v0, &coeffs);
    let surrogate_at_solution = surrogate_lower_bound(&u, &v, &u0, &v0, &coeffs);

    Ok(SubproblemSolution {
        trajectory,
        coeffs,
        u0,
        v0,
        u,
        v,
        surrogate_at_expansion,
        surrogate_at_solution,
        sweeps: chain.sweeps,
        last_improvement: chain.last_improvement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy(n: usize, step: f64, c1: f64, c2: f64) -> ChainProblem {
        ChainProblem {
            start: Vec2::new(-10.0, 0.0),
            end: Vec2::new(10.0, 0.0),
            step,
            w_g: Vec2::new(0.0, 5.0),
            w_r: Vec2::new(0.0, -3.0),
            c1: vec![c1; n],
            c2: vec![c2; n],
        }
    }

    fn line(p: &ChainProblem) -> Vec<Vec2> {
        let n = p.len();
        (0..n).map(|k| p.start.lerp(p.end, k as f64 / n as f64)).collect()
    }

    #[test]
    fn single_attractor_is_reached_when_unconstrained() {
        let p = toy(6, 100.0, -1.0, 0.0);
        let sol = p.solve(&line(&p), 1e-12, 200).unwrap();
        for q in &sol.points[1..] {
            assert!(q.dist(p.w_g) < 1e-12);
        }
    }

    #[test]
    fn three_slots_weighted_centroid() {
        let p = toy(3, 1e6, -2.0, -0.5);
        let sol = p.solve(&line(&p), 1e-14, 200).unwrap();
        let want = (p.w_g * -2.0 + p.w_r * -0.5) * (1.0 / -2.5);
        assert!(sol.points[1].dist(want) < 1e-12);
        assert!(sol.points[2].dist(want) < 1e-12);
    }

    #[test]
    fn flat_objective_leaves_init_untouched() {
        let p = toy(5, 6.0, 0.0, 0.0);
        let init = line(&p);
        let sol = p.solve(&init, 1e-12, 10).unwrap();
        assert_eq!(sol.points, init);
        assert_eq!(sol.sweeps, 1);
    }

    #[test]
    fn objective_never_decreases_and_stays_feasible() {
        let p = toy(8, 3.0, -0.3, -1.7);
        let init = line(&p);
        let sol = p.solve(&init, 1e-12, 500).unwrap();
        assert!(p.objective(&sol.points) >= p.objective(&init));
        assert_eq!(sol.points[0], p.start);
        for w in sol.points.windows(2) {
            assert!(w[0].dist(w[1]) <= p.step + 1e-9);
        }
        assert!(sol.points.last().unwrap().dist(p.end) <= p.step + 1e-9);
    }

    #[test]
    fn rejects_positive_weights() {
        let p = toy(3, 3.0, 1.0, -1.0);
        assert!(p.solve(&line(&p), 1e-9, 5).is_err());
    }

    #[test]
    fn subproblem_does_not_decrease_surrogate() {
        let s = Scenario::reference(120.0);
        let r = crate::channel::sample_realization(&s, 1).unwrap();
        let traj0 = s.straight_line();
        let sol = solve_subproblem(&traj0, &r, &s, 1e-8, 200).unwrap();
        assert!(sol.trajectory.check_mobility(&s).is_empty());
        assert!(sol.surrogate_at_solution >= sol.surrogate_at_expansion);
        // surrogate at expansion equals the true objective there
        let (u0, v0) = slack_from_trajectory(&traj0, &s);
        let exact = super::super::surrogate::slack_objective(&u0, &v0, &slot_amplitudes(&r, s.n_slots), s.gamma0(), s.kappa);
        assert_relative_eq!(sol.surrogate_at_expansion, exact, max_relative = 1e-12);
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let s = Scenario::reference(120.0);
        let r = crate::channel::sample_realization(&s, 1).unwrap();
        let mut traj0 = s.straight_line();
        traj0.points[10].x += 100.0;
        assert!(matches!(solve_subproblem(&traj0, &r, &s, 1e-8, 10), Err(Error::Infeasible(_))));
    }
}
