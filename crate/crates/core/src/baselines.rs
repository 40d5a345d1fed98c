//! Benchmark algorithms and the phase policies they need.
//!
//! * T/NPB: trajectory optimized as if the RIS were absent, then flown with
//!   non-aligned phases.
//! * HT/PB: fly-hover-fly heuristic with aligned phases.
//! * HT/NPB: the same heuristic path with non-aligned phases.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::{average_rate, direct_link_rate, optimal_phases, PhaseSchedule};
use crate::channel::{Fading, SlotFading};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::rng;
use crate::sca::{run_sca, ScaOptions, ScaOutcome};
use crate::scenario::{Scenario, Trajectory};

/// Fly to `w_G` at full speed, hover, and leave just in time to reach `q_F`.
pub fn heuristic_trajectory(scenario: &Scenario) -> Result<Trajectory> {
    scenario.validate()?;
    let d = scenario.max_step();
    let n = scenario.n_slots;
    let l1 = scenario.q0.dist(scenario.w_g);
    let l2 = scenario.w_g.dist(scenario.q_f);
    let total = l1 + l2;
    if total > n as f64 * d * (1.0 + 1e-12) {
        let slots = (total / d * (1.0 - 1e-12)).ceil();
        return Err(Error::Infeasible(format!(
            "fly-hover-fly path needs {total:.3} m but only {:.3} m is available; minimum T is {} s",
            n as f64 * d,
            slots * scenario.delta_t
        )));
    }
    let at = |s: f64| -> Vec2 {
        if s <= l1 {
            if l1 == 0.0 {
                scenario.w_g
            } else {
                scenario.q0.lerp(scenario.w_g, s / l1)
            }
        } else if l2 == 0.0 {
            scenario.w_g
        } else {
            scenario.w_g.lerp(scenario.q_f, ((s - l1) / l2).min(1.0))
        }
    };
    let points = (0..n)
        .map(|k| {
            let outbound = (k as f64 * d).min(l1);
            let inbound = total - (n - k) as f64 * d;
            at(outbound.max(inbound))
        })
        .collect();
    Ok(Trajectory::new(points))
}

/// Phase policy used when the RIS is not steered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NpbMode {
    /// All phases zero.
    Zero,
    /// Independent uniform phases, averaged over `draws` schedules.
    Random { draws: usize },
    /// Reflected path removed.
    NoRis,
}

impl NpbMode {
    pub const DEFAULT_DRAWS: usize = 100;
}

impl Default for NpbMode {
    fn default() -> Self {
        NpbMode::Random { draws: Self::DEFAULT_DRAWS }
    }
}

impl fmt::Display for NpbMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NpbMode::Zero => f.write_str("zero"),
            NpbMode::Random { .. } => f.write_str("random"),
            NpbMode::NoRis => f.write_str("no-ris"),
        }
    }
}

impl FromStr for NpbMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(NpbMode::Zero),
            "random" => Ok(NpbMode::default()),
            "no-ris" | "no_ris" => Ok(NpbMode::NoRis),
            other => Err(Error::invalid("npb_mode", format!("unknown mode `{other}`"))),
        }
    }
}

/// A concrete non-aligned policy: either phases to apply or no RIS at all.
#[derive(Debug, Clone, PartialEq)]
pub enum NpbPolicy {
    Phases(PhaseSchedule),
    NoRis,
}

fn random_schedule(scenario: &Scenario, seed: u64, draw: usize) -> PhaseSchedule {
    let mut r = rng::stream(seed, &format!("npb/draw{draw}"));
    let theta = (0..scenario.n_slots)
        .map(|_| (0..scenario.m_elements).map(|_| r.random_range(0.0..TAU)).collect())
        .collect();
    PhaseSchedule { theta }
}

/// The policy for `mode`; random mode yields its first draw.
pub fn npb_schedule(mode: NpbMode, scenario: &Scenario, seed: u64) -> NpbPolicy {
    match mode {
        NpbMode::Zero => NpbPolicy::Phases(PhaseSchedule::zeros(scenario.n_slots, scenario.m_elements)),
        NpbMode::Random { .. } => NpbPolicy::Phases(random_schedule(scenario, seed, 0)),
        NpbMode::NoRis => NpbPolicy::NoRis,
    }
}

pub fn policy_rate<F: SlotFading + ?Sized>(
    traj: &Trajectory,
    policy: &NpbPolicy,
    fading: &F,
    scenario: &Scenario,
) -> Result<f64> {
    match policy {
        NpbPolicy::Phases(s) => average_rate(traj, s, fading, scenario),
        NpbPolicy::NoRis => Ok(direct_link_rate(traj, fading, scenario)),
    }
}

/// Average rate with its Monte-Carlo standard error (zero for
/// deterministic policies).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub draws: usize,
}

impl RateEstimate {
    pub fn exact(rate: f64) -> Self {
        RateEstimate { mean: rate, stderr: 0.0, draws: 1 }
    }
}

/// Rate of `traj` under a non-aligned policy. Random draws are evaluated in
/// parallel; the result does not depend on the thread count.
pub fn npb_rate<F: SlotFading + ?Sized>(
    traj: &Trajectory,
    fading: &F,
    scenario: &Scenario,
    mode: NpbMode,
    seed: u64,
) -> Result<RateEstimate> {
    match mode {
        NpbMode::Random { draws } => {
            if draws == 0 {
                return Err(Error::invalid("npb_draws", "at least one draw is required"));
            }
            let rates: Vec<f64> = (0..draws)
                .into_par_iter()
                .map(|k| average_rate(traj, &random_schedule(scenario, seed, k), fading, scenario))
                .collect::<Result<_>>()?;
            let n = draws as f64;
            let mean = rates.iter().sum::<f64>() / n;
            let stderr = if draws > 1 {
                let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            Ok(RateEstimate { mean, stderr, draws })
        }
        _ => Ok(RateEstimate::exact(policy_rate(traj, &npb_schedule(mode, scenario, seed), fading, scenario)?)),
    }
}

/// SCA planned with the reflected link removed, then evaluated with a
/// non-aligned policy on the true channel.
pub fn t_npb_optimize(
    scenario: &Scenario,
    fading: &Fading,
    options: &ScaOptions,
    mode: NpbMode,
    seed: u64,
) -> Result<(ScaOutcome, RateEstimate)> {
    let planning = fading.direct_only();
    let outcome = run_sca(scenario, &planning, options)?;
    let rate = npb_rate(&outcome.trajectory, fading, scenario, mode, seed)?;
    Ok((outcome, rate))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "JT&PB")]
    JtPb,
    #[serde(rename = "T/NPB")]
    TNpb,
    #[serde(rename = "HT/PB")]
    HtPb,
    #[serde(rename = "HT/NPB")]
    HtNpb,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::JtPb, Algorithm::TNpb, Algorithm::HtPb, Algorithm::HtNpb];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::JtPb => "JT&PB",
            Algorithm::TNpb => "T/NPB",
            Algorithm::HtPb => "HT/PB",
            Algorithm::HtNpb => "HT/NPB",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone)]
pub struct AlgorithmRun {
    pub algorithm: Algorithm,
    pub trajectory: Trajectory,
    pub rate: RateEstimate,
    /// Present for the SCA-based algorithms.
    pub sca: Option<ScaOutcome>,
}

/// All four algorithms on one scenario and fading realization.
pub fn compare_all(
    scenario: &Scenario,
    fading: &Fading,
    options: &ScaOptions,
    mode: NpbMode,
    npb_seed: u64,
) -> Result<Vec<AlgorithmRun>> {
    let jt = run_sca(scenario, fading, options)?;
    let (tn, tn_rate) = t_npb_optimize(scenario, fading, options, mode, npb_seed)?;
    let ht = heuristic_trajectory(scenario)?;
    let ht_pb = average_rate(&ht, &optimal_phases(&ht, fading, scenario)?, fading, scenario)?;
    let ht_npb = npb_rate(&ht, fading, scenario, mode, npb_seed)?;
    Ok(vec![
        AlgorithmRun {
            algorithm: Algorithm::JtPb,
            trajectory: jt.trajectory.clone(),
            rate: RateEstimate::exact(jt.final_rate()),
            sca: Some(jt),
        },
        AlgorithmRun {
            algorithm: Algorithm::TNpb,
            trajectory: tn.trajectory.clone(),
            rate: tn_rate,
            sca: Some(tn),
        },
        AlgorithmRun {
            algorithm: Algorithm::HtPb,
            trajectory: ht.clone(),
            rate: RateEstimate::exact(ht_pb),
            sca: None,
        },
        AlgorithmRun {
            algorithm: Algorithm::HtNpb,
            trajectory: ht,
            rate: ht_npb,
            sca: None,
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_realization;
    use proptest::prelude::*;

    #[test]
    fn hover_everywhere_when_endpoints_coincide() {
        let mut s = Scenario::reference(20.0);
        s.q0 = s.w_g;
        s.q_f = s.w_g;
        let t = heuristic_trajectory(&s).unwrap();
        assert!(t.points.iter().all(|&p| p == s.w_g));
        assert!(t.check_mobility(&s).is_empty());
    }

    #[test]
    fn reference_geometry_reaches_user_on_schedule() {
        let s = Scenario::reference(740.0);
        let t = heuristic_trajectory(&s).unwrap();
        assert!(t.check_mobility(&s).is_empty());
        let l1 = s.q0.dist(s.w_g);
        let arrive = (l1 / s.max_step()).ceil() as usize;
        assert_eq!(arrive, 21);
        assert!(t.points[arrive - 1].dist(s.w_g) > 1e-9);
        assert!(t.points[arrive].dist(s.w_g) < 1e-9);
        // symmetric departure
        let l2 = s.w_g.dist(s.q_f);
        let leave = s.n_slots - (l2 / s.max_step()).ceil() as usize;
        assert!(t.points[leave].dist(s.w_g) < 1e-9);
        assert!(t.points[leave + 1].dist(s.w_g) > 1e-9);
    }

    #[test]
    fn minimum_time_has_no_hover() {
        let mut s = Scenario::reference(40.0);
        s.q0 = Vec2::new(0.0, 0.0);
        s.w_g = Vec2::new(500.0, 0.0);
        s.q_f = Vec2::new(1000.0, 0.0);
        let t = heuristic_trajectory(&s).unwrap();
        assert!(t.check_mobility(&s).is_empty());
        assert_eq!(t.points.iter().filter(|p| p.dist(s.w_g) < 1e-9).count(), 1);
        s.t_total = 39.0;
        s.n_slots = 39;
        s.q_f = Vec2::new(975.0, 0.0);
        s.w_g = Vec2::new(500.0, 100.0);
        match heuristic_trajectory(&s) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("minimum T is 40 s"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn npb_policies() {
        let mut s = Scenario::reference(3.0);
        s.m_elements = 2;
        match npb_schedule(NpbMode::Zero, &s, 0) {
            NpbPolicy::Phases(p) => assert_eq!(p.theta, vec![vec![0.0; 2]; 3]),
            NpbPolicy::NoRis => panic!(),
        }
        let a = npb_schedule(NpbMode::default(), &s, 4);
        assert_eq!(a, npb_schedule(NpbMode::default(), &s, 4));
        assert_ne!(a, npb_schedule(NpbMode::default(), &s, 5));
    }

    #[test]
    fn no_ris_equals_direct_link() {
        let s = Scenario::reference(100.0);
        let r = sample_realization(&s, 3).unwrap();
        let t = s.straight_line();
        let est = npb_rate(&t, &r, &s, NpbMode::NoRis, 0).unwrap();
        assert_eq!(est.mean, direct_link_rate(&t, &r, &s));
        assert_eq!(est.stderr, 0.0);
        let zero_b = average_rate(&t, &PhaseSchedule::zeros(s.n_slots, s.m_elements), &r.direct_only(), &s).unwrap();
        assert!((est.mean - zero_b).abs() < 1e-12);
    }

    #[test]
    fn random_mode_reports_stderr() {
        let s = Scenario::reference(100.0);
        let r = sample_realization(&s, 3).unwrap();
        let t = s.straight_line();
        let est = npb_rate(&t, &r, &s, NpbMode::Random { draws: 20 }, 1).unwrap();
        assert_eq!(est.draws, 20);
        assert!(est.stderr > 0.0 && est.stderr < est.mean);
        assert_eq!(est, npb_rate(&t, &r, &s, NpbMode::Random { draws: 20 }, 1).unwrap());
    }

    #[test]
    fn mode_parsing_round_trips() {
        for m in [NpbMode::Zero, NpbMode::default(), NpbMode::NoRis] {
            assert_eq!(m.to_string().parse::<NpbMode>().unwrap(), m);
        }
        assert!("half".parse::<NpbMode>().is_err());
    }

    #[test]
    fn t_npb_with_dead_direct_link_keeps_straight_line() {
        let s = Scenario::reference(100.0);
        let mut r = sample_realization(&s, 3).unwrap();
        r.h_tilde = num_complex::Complex64::new(0.0, 0.0);
        r.a = 0.0;
        let (out, _) = t_npb_optimize(&s, &Fading::Static(r), &ScaOptions::default(), NpbMode::Zero, 0).unwrap();
        assert_eq!(out.trajectory, s.straight_line());
    }

    #[test]
    fn t_npb_hovers_near_user_with_generous_time() {
        let s = Scenario::reference(740.0);
        let f = Fading::sample(&s, 7, false).unwrap();
        let (out, _) = t_npb_optimize(&s, &f, &ScaOptions::default(), NpbMode::Zero, 0).unwrap();
        assert!(out.trajectory.check_mobility(&s).is_empty());
        let mid = out.trajectory.points[s.n_slots / 2];
        assert!(mid.dist(s.w_g) < 1.0, "{mid:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn aligned_phases_dominate_every_policy(seed in 0u64..1000, t in 60.0f64..200.0) {
            let s = Scenario::reference(t.round());
            let r = sample_realization(&s, seed).unwrap();
            let traj = heuristic_trajectory(&s).unwrap();
            let best = average_rate(&traj, &optimal_phases(&traj, &r, &s).unwrap(), &r, &s).unwrap();
            for mode in [NpbMode::Zero, NpbMode::Random { draws: 4 }, NpbMode::NoRis] {
                let est = npb_rate(&traj, &r, &s, mode, seed).unwrap();
                prop_assert!(est.mean <= best + 1e-12);
            }
        }

        #[test]
        fn heuristic_is_feasible(t in 40.0f64..800.0, gx in 0.0f64..1000.0, gy in -50.0f64..50.0) {
            let mut s = Scenario::reference(t.round());
            s.w_g = Vec2::new(gx, gy);
            if let Ok(traj) = heuristic_trajectory(&s) {
                prop_assert!(traj.check_mobility(&s).is_empty());
            } else {
                let need = s.q0.dist(s.w_g) + s.w_g.dist(s.q_f);
                prop_assert!(need > s.n_slots as f64 * s.max_step());
            }
        }
    }
}
