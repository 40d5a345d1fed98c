//! Physical configuration, link geometry and mobility feasibility.
//!
//! Slots are numbered `1..=N` in documentation and reports; storage is
//! zero-based (`q[0]` is slot 1). The RIS enters the geometry only through
//! its reference element at `(w_r, z_r)`.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Absolute tolerance (meters) used when checking the mobility constraints.
pub const MOBILITY_TOL: f64 = 1e-9;

/// Static geometry, RF constants and time discretization. All power-like
/// quantities are linear (watts or plain ratios).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub q0: Vec2,
    pub q_f: Vec2,
    pub w_g: Vec2,
    pub w_r: Vec2,
    pub z_u: f64,
    pub z_r: f64,
    pub t_total: f64,
    pub n_slots: usize,
    pub delta_t: f64,
    pub v_max: f64,
    pub m_elements: usize,
    pub p_tx: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
    pub d_over_lambda: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

const CONFIG_KEYS: &[&str] = &[
    "q0",
    "qF",
    "wG",
    "wR",
    "zU",
    "zR",
    "T",
    "delta_t",
    "vmax",
    "M",
    "P_dBm",
    "P_W",
    "sigma2_dBm",
    "rho_dB",
    "kappa",
    "alpha",
    "beta_dB",
    "d_over_lambda",
];

fn get<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::MissingKey(key.to_string()))
}

fn number(obj: &Map<String, Value>, key: &str) -> Result<f64> {
    let v = get(obj, key)?
        .as_f64()
        .ok_or_else(|| Error::invalid(key, "expected a number"))?;
    if !v.is_finite() {
        return Err(Error::invalid(key, "must be finite"));
    }
    Ok(v)
}

fn point(obj: &Map<String, Value>, key: &str) -> Result<Vec2> {
    let arr = get(obj, key)?
        .as_array()
        .ok_or_else(|| Error::invalid(key, "expected [x, y]"))?;
    if arr.len() != 2 {
        return Err(Error::invalid(key, "expected exactly two coordinates"));
    }
    let mut xy = [0.0; 2];
    for (slot, v) in xy.iter_mut().zip(arr) {
        *slot = v
            .as_f64()
            .filter(|c| c.is_finite())
            .ok_or_else(|| Error::invalid(key, "coordinates must be finite numbers"))?;
    }
    Ok(Vec2::from(xy))
}

fn count(obj: &Map<String, Value>, key: &str) -> Result<usize> {
    let v = get(obj, key)?;
    v.as_u64()
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| Error::invalid(key, "expected a non-negative integer"))
}

/// `T / delta_t`, which must be a whole number.
fn slot_count(t_total: f64, delta_t: f64) -> Result<usize> {
    let ratio = t_total / delta_t;
    let n_slots = ratio.round();
    if (ratio - n_slots).abs() > 1e-9 * ratio.max(1.0) || n_slots > 1e8 {
        return Err(Error::invalid(
            "T",
            format!("T / delta_t = {ratio} is not a whole number of slots"),
        ));
    }
    Ok(n_slots as usize)
}

/// The shipped configuration: the evaluation setup with `T = 740 s`.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.json");

impl Scenario {
    /// Parses the JSON configuration schema (dB/dBm fields are converted to
    /// linear units here) and validates the result.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_config_value(&value)
    }

    pub fn from_config_value(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("configuration must be a JSON object".into()))?;
        if let Some(k) = obj.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(Error::UnknownKey(k.clone()));
        }

        let p_tx = match (obj.get("P_dBm"), obj.get("P_W")) {
            (Some(_), Some(_)) => {
                return Err(Error::invalid("P_W", "give exactly one of `P_dBm` or `P_W`"))
            }
            (Some(_), None) => dbm_to_watts(number(obj, "P_dBm")?),
            (None, Some(_)) => number(obj, "P_W")?,
            (None, None) => return Err(Error::MissingKey("P_dBm".into())),
        };

        let t_total = number(obj, "T")?;
        let delta_t = number(obj, "delta_t")?;
        if delta_t <= 0.0 {
            return Err(Error::invalid("delta_t", "must be positive"));
        }
        if t_total <= 0.0 {
            return Err(Error::invalid("T", "must be positive"));
        }
        let n_slots = slot_count(t_total, delta_t)?;

        let scenario = Scenario {
            q0: point(obj, "q0")?,
            q_f: point(obj, "qF")?,
            w_g: point(obj, "wG")?,
            w_r: point(obj, "wR")?,
            z_u: number(obj, "zU")?,
            z_r: number(obj, "zR")?,
            t_total,
            n_slots,
            delta_t,
            v_max: number(obj, "vmax")?,
            m_elements: count(obj, "M")?,
            p_tx,
            sigma2: dbm_to_watts(number(obj, "sigma2_dBm")?),
            rho: db_to_linear(number(obj, "rho_dB")?),
            kappa: number(obj, "kappa")?,
            alpha: number(obj, "alpha")?,
            beta: db_to_linear(number(obj, "beta_dB")?),
            d_over_lambda: number(obj, "d_over_lambda")?,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// The evaluation setup with the given flight time: endpoints at
    /// (-500, 20) and (500, 20), user at (0, 70), RIS at the origin, 90
    /// elements, 1 s slots.
    pub fn reference(t_total: f64) -> Self {
        let delta_t = 1.0;
        Scenario {
            q0: Vec2::new(-500.0, 20.0),
            q_f: Vec2::new(500.0, 20.0),
            w_g: Vec2::new(0.0, 70.0),
            w_r: Vec2::new(0.0, 0.0),
            z_u: 80.0,
            z_r: 40.0,
            t_total,
            n_slots: (t_total / delta_t).round() as usize,
            delta_t,
            v_max: 25.0,
            m_elements: 90,
            p_tx: 0.01,
            sigma2: dbm_to_watts(-80.0),
            rho: db_to_linear(-20.0),
            kappa: 3.5,
            alpha: 2.8,
            beta: db_to_linear(3.0),
            d_over_lambda: 0.5,
        }
    }

    /// Same scenario with a different flight time.
    pub fn with_total_time(&self, t_total: f64) -> Result<Self> {
        if !(t_total > 0.0 && t_total.is_finite()) {
            return Err(Error::invalid("T", "must be positive"));
        }
        let s = Scenario {
            t_total,
            n_slots: slot_count(t_total, self.delta_t)?,
            ..self.clone()
        };
        s.validate()?;
        Ok(s)
    }

    /// Checks every invariant. Bad parameter values yield
    /// [`Error::InvalidField`]; endpoints that cannot be joined within the
    /// time budget yield [`Error::Infeasible`].
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("q0", self.q0), ("qF", self.q_f), ("wG", self.w_g), ("wR", self.w_r)] {
            if !p.is_finite() {
                return Err(Error::invalid(name, "coordinates must be finite"));
            }
        }
        let positive = [
            ("zR", self.z_r),
            ("T", self.t_total),
            ("delta_t", self.delta_t),
            ("vmax", self.v_max),
            ("P", self.p_tx),
            ("sigma2", self.sigma2),
            ("rho", self.rho),
            ("kappa", self.kappa),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("d_over_lambda", self.d_over_lambda),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.z_u.is_finite() && self.z_u > self.z_r) {
            return Err(Error::invalid("zU", "UAV altitude must exceed the RIS altitude"));
        }
        if self.m_elements < 1 {
            return Err(Error::invalid("M", "at least one RIS element is required"));
        }
        if self.n_slots < 2 {
            return Err(Error::invalid("T", "at least two slots are required"));
        }
        let implied = self.n_slots as f64 * self.delta_t;
        if (implied - self.t_total).abs() > 1e-9 * self.t_total {
            return Err(Error::invalid("T", "T must equal N * delta_t"));
        }
        let reach = self.n_slots as f64 * self.max_step();
        let gap = self.q0.dist(self.q_f);
        if gap > reach + MOBILITY_TOL {
            return Err(Error::Infeasible(format!(
                "|qF - q0| = {gap:.3} m exceeds N * vmax * delta_t = {reach:.3} m"
            )));
        }
        Ok(())
    }

    /// Maximum horizontal displacement per slot, `D = vmax * delta_t`.
    pub fn max_step(&self) -> f64 {
        self.v_max * self.delta_t
    }

    /// Transmit-power-to-noise ratio `P / sigma^2`.
    pub fn gamma0(&self) -> f64 {
        self.p_tx / self.sigma2
    }

    /// UAV to ground-user distance.
    pub fn d_ug(&self, q: Vec2) -> f64 {
        (self.z_u * self.z_u + (q - self.w_g).norm_sq()).sqrt()
    }

    /// UAV to RIS reference-element distance.
    pub fn d_ur(&self, q: Vec2) -> f64 {
        let dz = self.z_u - self.z_r;
        (dz * dz + (q - self.w_r).norm_sq()).sqrt()
    }

    /// RIS reference-element to ground-user distance; constant over the flight.
    pub fn d_rg(&self) -> f64 {
        (self.z_r * self.z_r + (self.w_r - self.w_g).norm_sq()).sqrt()
    }

    /// Cosine of the angle of arrival at the RIS, `(x_R - x) / d_UR`.
    pub fn cos_aoa_ur(&self, q: Vec2) -> Result<f64> {
        let d = self.d_ur(q);
        if d <= 0.0 {
            return Err(Error::Domain("UAV coincides with the RIS reference element".into()));
        }
        Ok((self.w_r.x - q.x) / d)
    }

    /// Cosine of the angle of departure from the RIS, `(x_G - x_R) / d_RG`.
    pub fn cos_aod_rg(&self) -> Result<f64> {
        let d = self.d_rg();
        if d <= 0.0 {
            return Err(Error::Domain("ground user coincides with the RIS reference element".into()));
        }
        Ok((self.w_g.x - self.w_r.x) / d)
    }

    /// Short hex digest of the canonical (linear-unit) serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("scenario serializes");
        let digest = Sha256::digest(&canonical);
        hex::encode(&digest[..8])
    }

    /// Straight line from `q0` towards `qF` with `N` equal steps, the last
    /// of which (from slot N to `qF`) is implicit. Feasible whenever the
    /// scenario validates.
    pub fn straight_line(&self) -> Trajectory {
        let n = self.n_slots;
        let points = (0..n)
            .map(|k| self.q0.lerp(self.q_f, k as f64 / n as f64))
            .collect();
        Trajectory::new(points)
    }
}

/// Horizontal UAV positions, one per slot.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<Vec2>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    /// `q[1] != q0`.
    Start { offset: f64 },
    /// `|q[n+1] - q[n]| > D`; `slot` is the 1-based index `n`.
    Step { slot: usize, length: f64 },
    /// `|q[N] - qF| > D`.
    Final { gap: f64 },
    /// Trajectory length differs from the scenario's slot count.
    Length { expected: usize, found: usize },
    NonFinite { slot: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::Start { offset } => write!(f, "q[1] is {offset:.3e} m from q0"),
            Violation::Step { slot, length } => {
                write!(f, "step {slot}->{} has length {length:.6} m", slot + 1)
            }
            Violation::Final { gap } => write!(f, "q[N] is {gap:.6} m from qF"),
            Violation::Length { expected, found } => {
                write!(f, "expected {expected} waypoints, found {found}")
            }
            Violation::NonFinite { slot } => write!(f, "waypoint {slot} is not finite"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MobilityReport {
    pub violations: Vec<Violation>,
}

impl MobilityReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Trajectory {
    pub fn new(points: Vec<Vec2>) -> Self {
        Trajectory { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Evaluates every mobility constraint; violations are returned as data.
    pub fn check_mobility(&self, scenario: &Scenario) -> MobilityReport {
        let mut violations = Vec::new();
        let d_max = scenario.max_step() + MOBILITY_TOL;
        if self.points.len() != scenario.n_slots {
            violations.push(Violation::Length {
                expected: scenario.n_slots,
                found: self.points.len(),
            });
        }
        for (i, p) in self.points.iter().enumerate() {
            if !p.is_finite() {
                violations.push(Violation::NonFinite { slot: i + 1 });
            }
        }
        let Some((first, last)) = self.points.first().zip(self.points.last()) else {
            return MobilityReport { violations };
        };
        let offset = first.dist(scenario.q0);
        if offset > MOBILITY_TOL {
            violations.push(Violation::Start { offset });
        }
        for (i, w) in self.points.windows(2).enumerate() {
            let length = w[0].dist(w[1]);
            if !(length <= d_max) {
                violations.push(Violation::Step { slot: i + 1, length });
            }
        }
        let gap = last.dist(scenario.q_f);
        if !(gap <= d_max) {
            violations.push(Violation::Final { gap });
        }
        MobilityReport { violations }
    }

    /// Largest distance between two consecutive waypoints.
    pub fn max_step(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[0].dist(w[1]))
            .fold(0.0, f64::max)
    }

    /// Largest per-slot displacement between two trajectories of equal length.
    pub fn max_displacement(&self, other: &Trajectory) -> f64 {
        self.points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| a.dist(*b))
            .fold(0.0, f64::max)
    }
}
