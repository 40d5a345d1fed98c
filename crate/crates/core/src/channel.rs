//! Fading realizations and the three link gains.
//!
//! * U-G: Rayleigh, `sqrt(rho * d_UG^-kappa) * h_tilde`.
//! * U-R: pure LoS with free-space exponent 2 and a ULA response.
//! * R-G: Rician with factor `beta` and exponent `alpha`.
//!
//! A realization is drawn once per flight; neither `h_tilde` nor the R-G
//! vector carries a slot index. [`PerSlotFading`] is an extension that
//! redraws everything per slot for sensitivity studies.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::rng;
use crate::scenario::Scenario;

/// Maps an angle to its representative in `[0, 2*pi)`.
pub fn wrap_phase(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `arg(z)` in `[0, 2*pi)`, with `arg(0) = 0`.
pub fn phase_of(z: Complex64) -> f64 {
    if z == Complex64::new(0.0, 0.0) {
        0.0
    } else {
        wrap_phase(z.arg())
    }
}

/// ULA response `[1, e^{-j 2pi (d/lambda) cos}, ..., e^{-j 2pi (d/lambda) (M-1) cos}]`.
pub fn steering_vector(m: usize, d_over_lambda: f64, cosine: f64) -> Vec<Complex64> {
    let step = -TAU * d_over_lambda * cosine;
    (0..m)
        .map(|k| Complex64::from_polar(1.0, step * k as f64))
        .collect()
}

/// One draw of every random fading quantity plus the derived constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub h_tilde: Complex64,
    pub h_rg: Vec<Complex64>,
    pub h_rg_mag: Vec<f64>,
    pub h_rg_phase: Vec<f64>,
    /// `sqrt(rho) * |h_tilde|`.
    #[serde(rename = "A")]
    pub a: f64,
    /// `sqrt(rho) * sum_i |h_RG,i|`.
    #[serde(rename = "B")]
    pub b: f64,
    pub seed: u64,
}

impl ChannelRealization {
    /// Builds a realization from raw fading values, filling in the
    /// magnitude/phase decomposition and `A`, `B`.
    pub fn from_parts(h_tilde: Complex64, h_rg: Vec<Complex64>, rho: f64, seed: u64) -> Self {
        let h_rg_mag: Vec<f64> = h_rg.iter().map(|h| h.norm()).collect();
        let h_rg_phase = h_rg.iter().map(|&h| phase_of(h)).collect();
        let sqrt_rho = rho.sqrt();
        ChannelRealization {
            a: sqrt_rho * h_tilde.norm(),
            b: sqrt_rho * h_rg_mag.iter().sum::<f64>(),
            h_tilde,
            h_rg,
            h_rg_mag,
            h_rg_phase,
            seed,
        }
    }

    /// Same U-G fading, RIS path removed (`h_RG = 0`, so `B = 0`). Used to
    /// plan trajectories that ignore the reflected link.
    pub fn direct_only(&self) -> Self {
        let m = self.h_rg.len();
        ChannelRealization {
            h_tilde: self.h_tilde,
            h_rg: vec![Complex64::new(0.0, 0.0); m],
            h_rg_mag: vec![0.0; m],
            h_rg_phase: vec![0.0; m],
            a: self.a,
            b: 0.0,
            seed: self.seed,
        }
    }

    pub fn m_elements(&self) -> usize {
        self.h_rg.len()
    }

    /// Parses a realization serialized with [`ChannelRealization::to_json`] and
    /// checks internal consistency.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let r: ChannelRealization =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        r.check_consistency()?;
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("realization serializes")
    }

    fn check_consistency(&self) -> Result<()> {
        let m = self.h_rg.len();
        if m == 0 {
            return Err(Error::invalid("h_rg", "at least one element is required"));
        }
        if self.h_rg_mag.len() != m || self.h_rg_phase.len() != m {
            return Err(Error::invalid("h_rg_mag", "length differs from h_rg"));
        }
        let finite = |z: Complex64| z.re.is_finite() && z.im.is_finite();
        if !finite(self.h_tilde) || !self.h_rg.iter().all(|&z| finite(z)) {
            return Err(Error::invalid("h_rg", "non-finite entry"));
        }
        if !(self.a.is_finite() && self.a >= 0.0 && self.b.is_finite() && self.b >= 0.0) {
            return Err(Error::invalid("A", "A and B must be finite and non-negative"));
        }
        for ((&h, &mag), &phase) in self.h_rg.iter().zip(&self.h_rg_mag).zip(&self.h_rg_phase) {
            if !(mag >= 0.0 && (0.0..TAU).contains(&phase)) {
                return Err(Error::invalid("h_rg_phase", "magnitudes must be >= 0 and phases in [0, 2pi)"));
            }
            let rebuilt = Complex64::from_polar(mag, phase);
            if (rebuilt - h).norm() > 1e-9 * h.norm().max(f64::MIN_POSITIVE) {
                return Err(Error::invalid("h_rg_mag", "magnitude/phase do not reconstruct h_rg"));
            }
        }
        let sum: f64 = self.h_rg_mag.iter().sum();
        // A / |h_tilde| and B / sum|h| must both equal sqrt(rho)
        if self.h_tilde.norm() > 0.0 && sum > 0.0 {
            let r1 = self.a / self.h_tilde.norm();
            let r2 = self.b / sum;
            if (r1 - r2).abs() > 1e-9 * r1.max(r2) {
                return Err(Error::invalid("B", "A and B imply different path-loss constants"));
            }
        }
        Ok(())
    }
}

/// Draws `h_tilde ~ CSCG(0,1)` and the Rician R-G vector.
pub fn sample_realization(scenario: &Scenario, seed: u64) -> Result<ChannelRealization> {
    sample_tagged(scenario, seed, "")
}

fn sample_tagged(scenario: &Scenario, seed: u64, suffix: &str) -> Result<ChannelRealization> {
    let mut rng_ug = rng::stream(seed, &format!("{}{suffix}", rng::TAG_H_TILDE));
    let mut rng_nlos = rng::stream(seed, &format!("{}{suffix}", rng::TAG_NLOS));
    let h_tilde = rng::cscg(&mut rng_ug);

    let beta = scenario.beta;
    let path = (scenario.rho * scenario.d_rg().powf(-scenario.alpha)).sqrt();
    let w_los = (beta / (1.0 + beta)).sqrt();
    let w_nlos = (1.0 / (1.0 + beta)).sqrt();
    let los = steering_vector(scenario.m_elements, scenario.d_over_lambda, scenario.cos_aod_rg()?);
    let h_rg = los
        .into_iter()
        .map(|l| (l * w_los + rng::cscg(&mut rng_nlos) * w_nlos) * path)
        .collect();
    Ok(ChannelRealization::from_parts(h_tilde, h_rg, scenario.rho, seed))
}

/// `h_UG[n] = sqrt(rho) * d_UG^(-kappa/2) * h_tilde`.
pub fn gain_ug(q: Vec2, realization: &ChannelRealization, scenario: &Scenario) -> Complex64 {
    realization.h_tilde * (scenario.rho.sqrt() * scenario.d_ug(q).powf(-scenario.kappa / 2.0))
}

/// `h_UR[n]`: LoS path loss `sqrt(rho) / d_UR` times the ULA response at the AoA.
pub fn gain_ur(q: Vec2, scenario: &Scenario) -> Result<Vec<Complex64>> {
    let cosine = scenario.cos_aoa_ur(q)?;
    let scale = scenario.rho.sqrt() / scenario.d_ur(q);
    Ok(steering_vector(scenario.m_elements, scenario.d_over_lambda, cosine)
        .into_iter()
        .map(|s| s * scale)
        .collect())
}

pub fn gain_rg(realization: &ChannelRealization) -> &[Complex64] {
    &realization.h_rg
}

/// Fading seen in slot `n` (zero-based).
pub trait SlotFading: Sync {
    fn at_slot(&self, n: usize) -> &ChannelRealization;
}

impl SlotFading for ChannelRealization {
    fn at_slot(&self, _n: usize) -> &ChannelRealization {
        self
    }
}

/// Extension: an independent realization per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerSlotFading {
    pub slots: Vec<ChannelRealization>,
}

impl PerSlotFading {
    pub fn sample(scenario: &Scenario, seed: u64) -> Result<Self> {
        let slots = (0..scenario.n_slots)
            .map(|n| sample_tagged(scenario, seed, &format!("/slot{n}")))
            .collect::<Result<_>>()?;
        Ok(PerSlotFading { slots })
    }

    pub fn direct_only(&self) -> Self {
        PerSlotFading {
            slots: self.slots.iter().map(ChannelRealization::direct_only).collect(),
        }
    }
}

impl SlotFading for PerSlotFading {
    fn at_slot(&self, n: usize) -> &ChannelRealization {
        &self.slots[n]
    }
}

/// Either one realization for the whole flight or one per slot.
#[derive(Debug, Clone, PartialEq)]
pub enum Fading {
    Static(ChannelRealization),
    PerSlot(PerSlotFading),
}

impl Fading {
    pub fn sample(scenario: &Scenario, seed: u64, per_slot: bool) -> Result<Self> {
        Ok(if per_slot {
            Fading::PerSlot(PerSlotFading::sample(scenario, seed)?)
        } else {
            Fading::Static(sample_realization(scenario, seed)?)
        })
    }

    pub fn direct_only(&self) -> Self {
        match self {
            Fading::Static(r) => Fading::Static(r.direct_only()),
            Fading::PerSlot(p) => Fading::PerSlot(p.direct_only()),
        }
    }
}

impl SlotFading for Fading {
    fn at_slot(&self, n: usize) -> &ChannelRealization {
        match self {
            Fading::Static(r) => r,
            Fading::PerSlot(p) => p.at_slot(n),
        }
    }
}
