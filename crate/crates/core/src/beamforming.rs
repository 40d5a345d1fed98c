//! Closed-form passive beamforming and rate evaluation.
//!
//! With `theta_i = arg(h_tilde) + omega_i + 2pi (d/lambda)(i-1) cos_AoA` every
//! reflected path arrives with the phase of the direct path, and the
//! composite gain collapses to `A / d_UG^(kappa/2) + B / d_UR` in magnitude.

use std::f64::consts::{LN_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{gain_rg, gain_ug, gain_ur, phase_of, wrap_phase, ChannelRealization, SlotFading};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::scenario::{Scenario, Trajectory};

/// RIS phase shifts, `theta[n][i]` for slot `n` and element `i` (both
/// zero-based), each in `[0, 2*pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSchedule {
    pub theta: Vec<Vec<f64>>,
}

impl PhaseSchedule {
    pub fn zeros(n_slots: usize, m_elements: usize) -> Self {
        PhaseSchedule {
            theta: vec![vec![0.0; m_elements]; n_slots],
        }
    }

    pub fn n_slots(&self) -> usize {
        self.theta.len()
    }

    pub fn m_elements(&self) -> usize {
        self.theta.first().map_or(0, Vec::len)
    }

    pub fn slot(&self, n: usize) -> &[f64] {
        &self.theta[n]
    }

    /// Checks shape and that every entry lies in `[0, 2*pi)`.
    pub fn validate(&self) -> Result<()> {
        let m = self.m_elements();
        for (n, row) in self.theta.iter().enumerate() {
            if row.len() != m {
                return Err(Error::invalid("theta", format!("slot {} has {} elements, expected {m}", n + 1, row.len())));
            }
            if let Some(bad) = row.iter().find(|t| !(0.0..TAU).contains(*t)) {
                return Err(Error::invalid("theta", format!("phase {bad} outside [0, 2pi) in slot {}", n + 1)));
            }
        }
        Ok(())
    }
}

/// Phase-aligning shifts for a single waypoint.
pub fn optimal_phases_at(q: Vec2, realization: &ChannelRealization, scenario: &Scenario) -> Result<Vec<f64>> {
    let base = phase_of(realization.h_tilde);
    let progression = TAU * scenario.d_over_lambda * scenario.cos_aoa_ur(q)?;
    Ok(realization
        .h_rg_phase
        .iter()
        .enumerate()
        .map(|(i, &omega)| wrap_phase(base + omega + progression * i as f64))
        .collect())
}

pub fn optimal_phases<F: SlotFading + ?Sized>(
    traj: &Trajectory,
    fading: &F,
    scenario: &Scenario,
) -> Result<PhaseSchedule> {
    let theta = traj
        .points
        .iter()
        .enumerate()
        .map(|(n, &q)| optimal_phases_at(q, fading.at_slot(n), scenario))
        .collect::<Result<_>>()?;
    Ok(PhaseSchedule { theta })
}

fn check_len(theta: &[f64], realization: &ChannelRealization) -> Result<()> {
    if theta.len() != realization.m_elements() {
        return Err(Error::invalid(
            "theta",
            format!("{} phases for {} RIS elements", theta.len(), realization.m_elements()),
        ));
    }
    Ok(())
}

/// `h_UG + h_RG^H Theta h_UR`, evaluated element-wise through the
/// magnitude/phase form of `h_RG`.
pub fn combined_gain(q: Vec2, theta: &[f64], realization: &ChannelRealization, scenario: &Scenario) -> Result<Complex64> {
    check_len(theta, realization)?;
    let progression = TAU * scenario.d_over_lambda * scenario.cos_aoa_ur(q)?;
    let reflected: Complex64 = theta
        .iter()
        .zip(realization.h_rg_mag.iter().zip(&realization.h_rg_phase))
        .enumerate()
        .map(|(i, (&t, (&mag, &omega)))| Complex64::from_polar(mag, t - omega - progression * i as f64))
        .sum();
    let scale = scenario.rho.sqrt() / scenario.d_ur(q);
    Ok(gain_ug(q, realization, scenario) + reflected * scale)
}

/// Same quantity as [`combined_gain`], computed as `h_RG^H diag(e^{j theta}) h_UR`.
pub fn combined_gain_matrix(
    q: Vec2,
    theta: &[f64],
    realization: &ChannelRealization,
    scenario: &Scenario,
) -> Result<Complex64> {
    check_len(theta, realization)?;
    let h_ur = gain_ur(q, scenario)?;
    let reflected: Complex64 = gain_rg(realization)
        .iter()
        .zip(theta)
        .zip(&h_ur)
        .map(|((g, &t), h)| g.conj() * Complex64::from_polar(1.0, t) * h)
        .sum();
    Ok(gain_ug(q, realization, scenario) + reflected)
}

/// Magnitude of the composite gain under optimal phases:
/// `A / d_UG^(kappa/2) + B / d_UR`.
pub fn aligned_gain(q: Vec2, a: f64, b: f64, scenario: &Scenario) -> f64 {
    a * scenario.d_ug(q).powf(-scenario.kappa / 2.0) + b / scenario.d_ur(q)
}

pub fn snr(q: Vec2, theta: &[f64], realization: &ChannelRealization, scenario: &Scenario) -> Result<f64> {
    Ok(scenario.gamma0() * combined_gain(q, theta, realization, scenario)?.norm_sqr())
}

/// `log2(1 + snr)` in bps/Hz.
pub fn rate_slot(snr: f64) -> f64 {
    snr.ln_1p() / LN_2
}

/// Mean of the per-slot rates under the given phase schedule.
pub fn average_rate<F: SlotFading + ?Sized>(
    traj: &Trajectory,
    schedule: &PhaseSchedule,
    fading: &F,
    scenario: &Scenario,
) -> Result<f64> {
    if schedule.n_slots() != traj.len() {
        return Err(Error::invalid("theta", "schedule and trajectory lengths differ"));
    }
    let mut total = 0.0;
    for (n, (&q, theta)) in traj.points.iter().zip(&schedule.theta).enumerate() {
        total += rate_slot(snr(q, theta, fading.at_slot(n), scenario)?);
    }
    Ok(total / traj.len() as f64)
}

/// Rate of slot `n` with optimal phases, via the closed-form gain.
pub fn reduced_rate_slot(q: Vec2, realization: &ChannelRealization, scenario: &Scenario) -> f64 {
    let g = aligned_gain(q, realization.a, realization.b, scenario);
    rate_slot(scenario.gamma0() * g * g)
}

/// Average rate with optimal phases, evaluated without forming the phases.
pub fn reduced_rate<F: SlotFading + ?Sized>(traj: &Trajectory, fading: &F, scenario: &Scenario) -> f64 {
    let total: f64 = traj
        .points
        .iter()
        .enumerate()
        .map(|(n, &q)| reduced_rate_slot(q, fading.at_slot(n), scenario))
        .sum();
    total / traj.len() as f64
}

/// Average rate when the RIS is absent: only the direct U-G link remains.
pub fn direct_link_rate<F: SlotFading + ?Sized>(traj: &Trajectory, fading: &F, scenario: &Scenario) -> f64 {
    let total: f64 = traj
        .points
        .iter()
        .enumerate()
        .map(|(n, &q)| rate_slot(scenario.gamma0() * gain_ug(q, fading.at_slot(n), scenario).norm_sqr()))
        .sum();
    total / traj.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_realization;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small(m: usize) -> Scenario {
        let mut s = Scenario::reference(20.0);
        s.m_elements = m;
        s
    }

    #[test]
    fn single_element_phase_ignores_position() {
        let s = small(1);
        let r = sample_realization(&s, 4).unwrap();
        let want = wrap_phase(phase_of(r.h_tilde) + r.h_rg_phase[0]);
        for q in [Vec2::new(-400.0, 3.0), Vec2::new(10.0, 90.0)] {
            let th = optimal_phases_at(q, &r, &s).unwrap();
            assert_relative_eq!(th[0], want, max_relative = 1e-15);
        }
    }

    #[test]
    fn aligned_real_channel_needs_no_shift() {
        let s = small(4);
        let r = ChannelRealization::from_parts(
            Complex64::new(0.7, 0.0),
            vec![Complex64::new(1e-4, 0.0); 4],
            s.rho,
            0,
        );
        let th = optimal_phases_at(Vec2::new(0.0, 50.0), &r, &s).unwrap();
        assert!(th.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn optimal_gain_equals_reduced_form() {
        let s = small(90);
        let r = sample_realization(&s, 8).unwrap();
        for q in [Vec2::new(-500.0, 20.0), Vec2::new(0.0, 70.0), Vec2::new(33.0, -12.0)] {
            let th = optimal_phases_at(q, &r, &s).unwrap();
            let g = combined_gain(q, &th, &r, &s).unwrap();
            assert_relative_eq!(g.norm(), aligned_gain(q, r.a, r.b, &s), max_relative = 1e-10);
            // all terms share the direct path's phase
            let dphi = wrap_phase(g.arg() - r.h_tilde.arg());
            assert!(dphi < 1e-9 || dphi > TAU - 1e-9);
        }
    }

    #[test]
    fn matrix_and_sum_forms_agree() {
        let s = small(16);
        let r = sample_realization(&s, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let q = Vec2::new(rng.random_range(-600.0..600.0), rng.random_range(-100.0..200.0));
            let th: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..TAU)).collect();
            let a = combined_gain(q, &th, &r, &s).unwrap();
            let b = combined_gain_matrix(q, &th, &r, &s).unwrap();
            assert!((a - b).norm() <= 1e-12 * a.norm().max(b.norm()));
        }
    }

    #[test]
    fn antiphase_cancels_magnitudes() {
        let s = small(5);
        let r = sample_realization(&s, 21).unwrap();
        let q = Vec2::new(-40.0, 60.0);
        let aligned = optimal_phases_at(q, &r, &s).unwrap();
        let flipped: Vec<f64> = aligned.iter().map(|t| wrap_phase(t + std::f64::consts::PI)).collect();
        let g = combined_gain(q, &flipped, &r, &s).unwrap();
        let direct = r.a * s.d_ug(q).powf(-s.kappa / 2.0);
        let reflected = r.b / s.d_ur(q);
        assert_relative_eq!(g.norm(), (direct - reflected).abs(), max_relative = 1e-9);
    }

    #[test]
    fn snr_and_rate_examples() {
        let s = small(1);
        let zero = ChannelRealization::from_parts(Complex64::new(0.0, 0.0), vec![Complex64::new(0.0, 0.0)], s.rho, 0);
        assert_eq!(snr(s.q0, &[0.0], &zero, &s).unwrap(), 0.0);

        // P = 0.01 W, sigma^2 = 1e-11 W, |g|^2 = 1e-7  ->  0.01 * 1e-7 / 1e-11 = 100
        let mut t = small(1);
        t.p_tx = 0.01;
        t.sigma2 = 1e-11;
        t.rho = 1.0;
        t.kappa = 2.0;
        // choose h_tilde so that |h_UG|^2 = 1e-7 at d_UG = zU = 80
        let h = (1e-7f64 * 80.0 * 80.0).sqrt();
        let r = ChannelRealization::from_parts(Complex64::new(h, 0.0), vec![Complex64::new(0.0, 0.0)], 1.0, 0);
        let got = snr(t.w_g, &[0.0], &r, &t).unwrap();
        assert_relative_eq!(got, 100.0, max_relative = 1e-12);
        t.p_tx *= 2.0;
        assert_relative_eq!(snr(t.w_g, &[0.0], &r, &t).unwrap(), 200.0, max_relative = 1e-12);

        assert_eq!(rate_slot(0.0), 0.0);
        assert_eq!(rate_slot(1.0), 1.0);
        assert_relative_eq!(rate_slot(255.0), 8.0, max_relative = 1e-15);
    }

    #[test]
    fn average_rate_is_mean_of_slot_rates() {
        let s = small(8);
        let r = sample_realization(&s, 2).unwrap();
        let traj = s.straight_line();
        let sched = optimal_phases(&traj, &r, &s).unwrap();
        let avg = average_rate(&traj, &sched, &r, &s).unwrap();
        let slots: Vec<f64> = traj
            .points
            .iter()
            .zip(&sched.theta)
            .map(|(&q, th)| {
                let g = combined_gain_matrix(q, th, &r, &s).unwrap();
                (1.0 + s.gamma0() * g.norm_sqr()).log2()
            })
            .collect();
        let mean = slots.iter().sum::<f64>() / slots.len() as f64;
        assert_relative_eq!(avg, mean, max_relative = 1e-12);
        assert_relative_eq!(reduced_rate(&traj, &r, &s), avg, max_relative = 1e-10);

        let one = Trajectory::new(vec![traj.points[3]]);
        let one_sched = PhaseSchedule { theta: vec![sched.theta[3].clone()] };
        assert_relative_eq!(average_rate(&one, &one_sched, &r, &s).unwrap(), slots[3], max_relative = 1e-12);

        let hover = Trajectory::new(vec![traj.points[5]; 6]);
        let hover_sched = PhaseSchedule { theta: vec![sched.theta[5].clone(); 6] };
        assert_relative_eq!(average_rate(&hover, &hover_sched, &r, &s).unwrap(), slots[5], max_relative = 1e-12);
    }

    #[test]
    fn schedule_validation() {
        let mut p = PhaseSchedule::zeros(3, 2);
        assert_eq!(p.theta, vec![vec![0.0; 2]; 3]);
        p.validate().unwrap();
        p.theta[1][0] = TAU;
        assert!(p.validate().is_err());
    }

    #[test]
    fn brute_force_grid_never_beats_alignment() {
        let s = small(3);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let grid = 16;
        for seed in 0..5 {
            let r = sample_realization(&s, seed).unwrap();
            let q = Vec2::new(rng.random_range(-500.0..500.0), rng.random_range(-50.0..150.0));
            let best = combined_gain(q, &optimal_phases_at(q, &r, &s).unwrap(), &r, &s).unwrap().norm_sqr();
            for i in 0..grid {
                for j in 0..grid {
                    for k in 0..grid {
                        let th = [i, j, k].map(|v| TAU * v as f64 / grid as f64);
                        let g = combined_gain(q, &th, &r, &s).unwrap().norm_sqr();
                        assert!(g <= best * (1.0 + 1e-12));
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn random_phases_never_beat_alignment(seed in 0u64..1000, qx in -800.0f64..800.0, qy in -200.0f64..300.0,
                                              phases in proptest::collection::vec(0.0f64..TAU, 12)) {
            let s = small(12);
            let r = sample_realization(&s, seed).unwrap();
            let q = Vec2::new(qx, qy);
            let best = combined_gain(q, &optimal_phases_at(q, &r, &s).unwrap(), &r, &s).unwrap().norm();
            let other = combined_gain(q, &phases, &r, &s).unwrap().norm();
            prop_assert!(other <= best * (1.0 + 1e-12));
        }

        #[test]
        fn wrapping_does_not_change_gain(seed in 0u64..1000, shift in -5i32..5, qx in -800.0f64..800.0) {
            let s = small(6);
            let r = sample_realization(&s, seed).unwrap();
            let q = Vec2::new(qx, 10.0);
            let th = optimal_phases_at(q, &r, &s).unwrap();
            let unwrapped: Vec<f64> = th.iter().map(|t| t + TAU * shift as f64).collect();
            let a = combined_gain(q, &th, &r, &s).unwrap();
            let b = combined_gain(q, &unwrapped, &r, &s).unwrap();
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-12 * a.norm());
        }

        #[test]
        fn aligned_rate_decreases_with_distance(a in 1e-3f64..1.0, b in 1e-4f64..1e-1, du in 80.0f64..1000.0, dv in 40.0f64..1000.0, bump in 1.0f64..50.0) {
            let s = small(1);
            let g = |u: f64, v: f64| rate_slot(s.gamma0() * (a * u.powf(-s.kappa / 2.0) + b / v).powi(2));
            prop_assert!(g(du + bump, dv) < g(du, dv));
            prop_assert!(g(du, dv + bump) < g(du, dv));
        }
    }
}
