//! Slack variables and the first-order lower bound of the per-slot rate.
//!
//! With slacks `u >= d_UG` and `v >= d_UR`, the slot rate
//! `log2(1 + g0 (A/u^(k/2) + B/v)^2)` is jointly convex in `(u, v)`, so its
//! tangent plane at `(u0, v0)` is a global under-estimator:
//!
//! ```text
//! R(u, v) >= log2 A0 + B0 (u - u0) / (A0 ln 2) + C0 (v - v0) / (A0 ln 2)
//! ```

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::scenario::{Scenario, Trajectory};

/// Tangent-plane coefficients at one expansion point, one entry per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateCoeffs {
    pub a0: Vec<f64>,
    pub b0: Vec<f64>,
    pub c0: Vec<f64>,
    pub gamma0: f64,
}

impl SurrogateCoeffs {
    pub fn len(&self) -> usize {
        self.a0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a0.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.gamma0.is_finite()
            && self
                .a0
                .iter()
                .chain(&self.b0)
                .chain(&self.c0)
                .all(|c| c.is_finite())
    }
}

/// Tight slacks: `u[n] = d_UG(q[n])`, `v[n] = d_UR(q[n])`.
pub fn slack_from_trajectory(traj: &Trajectory, scenario: &Scenario) -> (Vec<f64>, Vec<f64>) {
    traj.points
        .iter()
        .map(|&q| (scenario.d_ug(q), scenario.d_ur(q)))
        .unzip()
}

/// Coefficients for a common `(A, B)` across slots.
pub fn taylor_coeffs(u0: &[f64], v0: &[f64], a: f64, b: f64, gamma0: f64, kappa: f64) -> Result<SurrogateCoeffs> {
    let amps = vec![(a, b); u0.len()];
    taylor_coeffs_per_slot(u0, v0, &amps, gamma0, kappa)
}

/// Coefficients with a separate `(A, B)` pair for every slot.
pub fn taylor_coeffs_per_slot(
    u0: &[f64],
    v0: &[f64],
    amps: &[(f64, f64)],
    gamma0: f64,
    kappa: f64,
) -> Result<SurrogateCoeffs> {
    if u0.len() != v0.len() || u0.len() != amps.len() {
        return Err(Error::Domain("slack and amplitude vectors differ in length".into()));
    }
    let n = u0.len();
    let mut out = SurrogateCoeffs {
        a0: Vec::with_capacity(n),
        b0: Vec::with_capacity(n),
        c0: Vec::with_capacity(n),
        gamma0,
    };
    for ((&u, &v), &(a, b)) in u0.iter().zip(v0).zip(amps) {
        if !(u > 0.0 && v > 0.0) {
            return Err(Error::Domain(format!("expansion point must be positive, got u0 = {u}, v0 = {v}")));
        }
        let u_half = u.powf(kappa / 2.0);
        let interior = a * a / u.powf(kappa) + b * b / (v * v) + 2.0 * a * b / (u_half * v);
        out.a0.push(1.0 + gamma0 * interior);
        out.b0.push(-gamma0 * (kappa * a * a / u.powf(kappa + 1.0) + kappa * a * b / (v * u_half * u)));
        out.c0.push(-gamma0 * (2.0 * b * b / (v * v * v) + 2.0 * a * b / (u_half * v * v)));
    }
    Ok(out)
}

/// `sum_n [log2 A0 + B0 (u - u0)/(A0 ln2) + C0 (v - v0)/(A0 ln2)]`.
pub fn surrogate_lower_bound(u: &[f64], v: &[f64], u0: &[f64], v0: &[f64], coeffs: &SurrogateCoeffs) -> f64 {
    let mut total = 0.0;
    for n in 0..coeffs.len() {
        let a0 = coeffs.a0[n];
        total += (a0 - 1.0).ln_1p() / LN_2
            + (coeffs.b0[n] * (u[n] - u0[n]) + coeffs.c0[n] * (v[n] - v0[n])) / (a0 * LN_2);
    }
    total
}

/// `sum_n log2(1 + g0 (A/u^(k/2) + B/v)^2)`: the objective of the slack
/// problem (without the `1/N` factor).
pub fn slack_objective(u: &[f64], v: &[f64], amps: &[(f64, f64)], gamma0: f64, kappa: f64) -> f64 {
    u.iter()
        .zip(v)
        .zip(amps)
        .map(|((&u, &v), &(a, b))| {
            let g = a / u.powf(kappa / 2.0) + b / v;
            (gamma0 * g * g).ln_1p() / LN_2
        })
        .sum()
}

/// Slack values that make the linearized constraints
/// `d^2 + u0^2 - 2 u0 u <= 0` tight: `u = (d^2 + u0^2) / (2 u0)`.
pub fn tight_linearized_slack(distance: f64, expansion: f64) -> f64 {
    (distance * distance + expansion * expansion) / (2.0 * expansion)
}
