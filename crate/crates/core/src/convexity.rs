//! Convexity of `f(x, y) = log2(1 + K1 x^-κ + K2 y^-2 + K3 x^-κ/2 y^-1)`.
//!
//! Under `K1 = γ0 A²`, `K2 = γ0 B²`, `K3 = 2 γ0 A B` this is the per-slot
//! rate as a function of the slack distances, so its convexity is what makes
//! the first-order expansion in [`crate::sca::surrogate`] a global lower
//! bound.
//!
//! Besides the compact gradient/Hessian, this module carries the fully
//! expanded monomial sums of the `η`-scaled second derivatives,
//! `η = ln2 · (1 + S)²`, and a numerical sweep that cross-checks the two.
//! Monomials are evaluated in log space since they span dozens of orders of
//! magnitude.

use std::f64::consts::LN_2;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaParams {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub kappa: f64,
}

impl LemmaParams {
    pub fn new(k1: f64, k2: f64, k3: f64, kappa: f64) -> Result<Self> {
        for (name, v) in [("K1", k1), ("K2", k2), ("K3", k3), ("kappa", kappa)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(LemmaParams { k1, k2, k3, kappa })
    }

    /// Constants of the single-slot rate with direct amplitude `a` and
    /// reflected amplitude `b`.
    pub fn from_amplitudes(a: f64, b: f64, gamma0: f64, kappa: f64) -> Result<Self> {
        Self::new(gamma0 * a * a, gamma0 * b * b, 2.0 * gamma0 * a * b, kappa)
    }
}

fn check_point(x: f64, y: f64) -> Result<()> {
    if x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("f is defined for x > 0, y > 0; got ({x}, {y})")))
    }
}

/// `S` and its partial derivatives up to second order.
#[derive(Debug, Clone, Copy)]
struct SParts {
    s: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

fn s_parts(x: f64, y: f64, p: &LemmaParams) -> SParts {
    let k = p.kappa;
    let t1 = p.k1 * x.powf(-k);
    let t2 = p.k2 / (y * y);
    let t3 = p.k3 * x.powf(-k / 2.0) / y;
    SParts {
        s: t1 + t2 + t3,
        sx: (-k * t1 - k / 2.0 * t3) / x,
        sy: (-2.0 * t2 - t3) / y,
        sxx: (k * (k + 1.0) * t1 + k / 2.0 * (k / 2.0 + 1.0) * t3) / (x * x),
        syy: (6.0 * t2 + 2.0 * t3) / (y * y),
        sxy: k / 2.0 * t3 / (x * y),
    }
}

pub fn f_value(x: f64, y: f64, p: &LemmaParams) -> Result<f64> {
    check_point(x, y)?;
    Ok(s_parts(x, y, p).s.ln_1p() / LN_2)
}

pub fn grad_f(x: f64, y: f64, p: &LemmaParams) -> Result<[f64; 2]> {
    check_point(x, y)?;
    let d = s_parts(x, y, p);
    let denom = LN_2 * (1.0 + d.s);
    Ok([d.sx / denom, d.sy / denom])
}

pub fn hessian_f(x: f64, y: f64, p: &LemmaParams) -> Result<[[f64; 2]; 2]> {
    check_point(x, y)?;
    let e = eta_scaled(&s_parts(x, y, p));
    let eta = eta(x, y, p);
    let xy = e[2] / eta;
    Ok([[e[0] / eta, xy], [xy, e[1] / eta]])
}

/// `η = ln2 · (1 + S)²`.
pub fn eta(x: f64, y: f64, p: &LemmaParams) -> f64 {
    let s = s_parts(x, y, p).s;
    LN_2 * (1.0 + s) * (1.0 + s)
}

/// Compact `[η f_xx, η f_yy, η f_xy]`.
fn eta_scaled(d: &SParts) -> [f64; 3] {
    let one_s = 1.0 + d.s;
    [
        d.sxx * one_s - d.sx * d.sx,
        d.syy * one_s - d.sy * d.sy,
        d.sxy * one_s - d.sx * d.sy,
    ]
}

/// `coef · K1^k[0] K2^k[1] K3^k[2] · x^(xk·κ + xc) · y^ye`.
#[derive(Debug, Clone, Copy)]
struct Monomial {
    coef: f64,
    k: [i32; 3],
    xk: f64,
    xc: f64,
    ye: i32,
}

const fn mono(coef: f64, k: [i32; 3], xk: f64, xc: f64, ye: i32) -> Monomial {
    Monomial { coef, k, xk, xc, ye }
}

impl Monomial {
    fn eval(&self, ln: &LogPoint) -> f64 {
        if self.coef == 0.0 {
            return 0.0;
        }
        let e = self.coef.abs().ln()
            + self.k[0] as f64 * ln.k1
            + self.k[1] as f64 * ln.k2
            + self.k[2] as f64 * ln.k3
            + (self.xk * ln.kappa + self.xc) * ln.x
            + self.ye as f64 * ln.y;
        self.coef.signum() * e.exp()
    }
}

struct LogPoint {
    k1: f64,
    k2: f64,
    k3: f64,
    kappa: f64,
    x: f64,
    y: f64,
}

/// Value of an expanded sum and `Σ|monomial|`, the scale its rounding error
/// is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermSum {
    pub value: f64,
    pub abs_sum: f64,
}

fn sum_terms(terms: &[Monomial], ln: &LogPoint) -> TermSum {
    let mut value = 0.0;
    let mut abs_sum = 0.0;
    for t in terms {
        let v = t.eval(ln);
        value += v;
        abs_sum += v.abs();
    }
    TermSum { value, abs_sum }
}

fn eta_fxx_terms(k: f64) -> Vec<Monomial> {
    vec![
        mono(k * (k + 1.0), [1, 0, 0], -1.0, -2.0, 0),
        mono(k / 2.0 * (k / 2.0 + 1.0), [0, 0, 1], -0.5, -2.0, -1),
        mono(k, [2, 0, 0], -2.0, -2.0, 0),
        mono(k * k / 4.0 + 1.5 * k, [1, 0, 1], -1.5, -2.0, -1),
        mono(k * (k + 1.0), [1, 1, 0], -1.0, -2.0, -2),
        mono(k / 2.0 * (k / 2.0 + 1.0), [0, 1, 1], -0.5, -2.0, -3),
        mono(k / 2.0, [0, 0, 2], -1.0, -2.0, -2),
    ]
}

fn eta_fyy_terms(_k: f64) -> Vec<Monomial> {
    vec![
        mono(6.0, [0, 1, 0], 0.0, 0.0, -4),
        mono(2.0, [0, 0, 1], -0.5, 0.0, -3),
        mono(6.0, [1, 1, 0], -1.0, 0.0, -4),
        mono(2.0, [0, 2, 0], 0.0, 0.0, -6),
        mono(4.0, [0, 1, 1], -0.5, 0.0, -5),
        mono(1.0, [0, 0, 2], -1.0, 0.0, -4),
        mono(2.0, [1, 0, 1], -1.5, 0.0, -3),
    ]
}

fn eta_fxy_terms(k: f64) -> Vec<Monomial> {
    vec![
        mono(k / 2.0, [0, 0, 1], -0.5, -1.0, -2),
        mono(-k / 2.0, [1, 0, 1], -1.5, -1.0, -2),
        mono(-k / 2.0, [0, 1, 1], -0.5, -1.0, -4),
        mono(-2.0 * k, [1, 1, 0], -1.0, -1.0, -3),
    ]
}

/// `η² f_xy²`, expanded.
fn eta2_fxy2_terms(k: f64) -> Vec<Monomial> {
    let k2 = k * k;
    vec![
        mono(-k2 / 2.0, [0, 1, 2], -1.0, -2.0, -6),
        mono(-2.0 * k2, [1, 1, 1], -1.5, -2.0, -5),
        mono(-k2 / 2.0, [1, 0, 2], -2.0, -2.0, -4),
        mono(k2 / 4.0, [0, 0, 2], -1.0, -2.0, -4),
        mono(k2 / 4.0, [2, 0, 2], -3.0, -2.0, -4),
        mono(k2 / 4.0, [0, 2, 2], -1.0, -2.0, -8),
        mono(4.0 * k2, [2, 2, 0], -2.0, -2.0, -6),
        mono(2.0 * k2, [1, 2, 1], -1.5, -2.0, -7),
        mono(k2 / 2.0, [1, 1, 2], -2.0, -2.0, -6),
        mono(2.0 * k2, [2, 1, 1], -2.5, -2.0, -5),
    ]
}

/// `η² f_xx f_yy`, expanded.
fn eta2_fxx_fyy_terms(k: f64) -> Vec<Monomial> {
    let a = k * (k + 1.0);
    let b = k / 2.0 * (k / 2.0 + 1.0);
    let c = k * k / 4.0 + 1.5 * k;
    let h = k / 2.0 + 1.0;
    vec![
        mono(6.0 * a, [1, 1, 0], -1.0, -2.0, -4),
        mono(3.0 * k * h, [0, 1, 1], -0.5, -2.0, -5),
        mono(6.0 * c, [1, 1, 1], -1.5, -2.0, -5),
        mono(6.0 * k, [2, 1, 0], -2.0, -2.0, -4),
        mono(4.0 * a, [1, 1, 1], -1.5, -2.0, -5),
        mono(2.0 * k, [2, 0, 1], -2.5, -2.0, -3),
        mono(2.0 * a, [1, 0, 1], -1.5, -2.0, -3),
        mono(6.0 * k, [3, 1, 0], -3.0, -2.0, -4),
        mono(2.0 * a, [1, 1, 1], -1.5, -2.0, -5),
        mono(k, [0, 2, 2], -1.0, -2.0, -8),
        mono(6.0 * a, [2, 1, 0], -2.0, -2.0, -4),
        mono(3.0 * k, [1, 1, 2], -2.0, -2.0, -6),
        mono(3.0 * k * h, [1, 2, 1], -1.5, -2.0, -7),
        mono(k, [0, 0, 3], -1.5, -2.0, -5),
        mono(6.0 * (c + 2.0 * k / 3.0), [2, 1, 1], -2.5, -2.0, -5),
        mono(k / 2.0, [0, 0, 4], -2.0, -2.0, -6),
        mono(k * h, [1, 1, 2], -2.0, -2.0, -6),
        mono(k, [1, 0, 3], -2.5, -2.0, -5),
        mono(k * h, [0, 2, 1], -0.5, -2.0, -7),
        mono(2.0 * k, [2, 2, 0], -2.0, -2.0, -6),
        mono(k * h, [0, 3, 1], -0.5, -2.0, -9),
        mono(2.0 * a, [2, 0, 1], -2.5, -2.0, -3),
        mono(2.0 * k * h, [0, 1, 2], -1.0, -2.0, -6),
        mono(2.0 * a, [1, 2, 0], -1.0, -2.0, -6),
        mono(b, [0, 0, 3], -1.5, -2.0, -5),
        mono(c, [1, 0, 3], -2.5, -2.0, -5),
        mono(3.0 * k * h, [0, 2, 1], -0.5, -2.0, -7),
        mono(3.0 * k, [0, 1, 2], -1.0, -2.0, -6),
        mono(3.0 * k * h, [1, 1, 1], -1.5, -2.0, -5),
        mono(2.0 * k, [0, 1, 3], -1.5, -2.0, -7),
        mono(k * h, [1, 0, 2], -2.0, -2.0, -4),
        mono(k * h, [0, 1, 2], -1.0, -2.0, -6),
        mono(4.0 * c, [1, 1, 2], -2.0, -2.0, -6),
        mono(2.0 * k, [3, 0, 1], -3.5, -2.0, -3),
        mono(k * (1.5 * k + 4.0), [1, 0, 2], -2.0, -2.0, -4),
        mono(2.0 * a, [1, 3, 0], -1.0, -2.0, -8),
        mono(b, [0, 1, 3], -1.5, -2.0, -7),
        mono(6.0 * a, [1, 2, 0], -1.0, -2.0, -6),
        mono(2.0 * c, [1, 2, 1], -1.5, -2.0, -7),
        mono(k, [2, 0, 2], -3.0, -2.0, -4),
        // the group matched against the signed part of η² f_xy²
        mono(k * k / 2.0 + k, [0, 0, 2], -1.0, -2.0, -4),
        mono(k * k / 2.0 + 3.0 * k, [2, 0, 2], -3.0, -2.0, -4),
        mono(k * k + 2.0 * k, [0, 2, 2], -1.0, -2.0, -8),
        mono(6.0 * k * k + 6.0 * k, [2, 2, 0], -2.0, -2.0, -6),
        mono(4.0 * k * k + 4.0 * k, [1, 2, 1], -1.5, -2.0, -7),
        mono(k * k + k, [1, 1, 2], -2.0, -2.0, -6),
        mono(2.0 * k * k + 2.0 * k, [2, 1, 1], -2.5, -2.0, -5),
    ]
}

/// `η² (f_xx f_yy − f_xy²)` with like monomials collected. Every
/// coefficient is positive for `κ > 0`, so the sum is a strict positivity
/// certificate for the Hessian determinant.
fn det_surplus_terms(k: f64) -> Vec<Monomial> {
    vec![
        mono(k * (k + 4.0) / 4.0, [0, 0, 2], -1.0, -2.0, -4),
        mono(k / 2.0, [0, 0, 4], -2.0, -2.0, -6),
        mono(k * (k + 6.0) / 4.0, [0, 0, 3], -1.5, -2.0, -5),
        mono(k * (k + 2.0) / 2.0, [0, 3, 1], -0.5, -2.0, -9),
        mono(2.0 * k * (k + 1.0), [1, 0, 1], -1.5, -2.0, -3),
        mono(2.0 * k * (k + 1.0), [1, 3, 0], -1.0, -2.0, -8),
        mono(2.0 * k * (k + 3.0), [0, 1, 2], -1.0, -2.0, -6),
        mono(2.0 * k, [3, 0, 1], -3.5, -2.0, -3),
        mono(2.0 * k * (k + 2.0), [2, 0, 1], -2.5, -2.0, -3),
        mono(2.0 * k * (k + 2.0), [0, 2, 1], -0.5, -2.0, -7),
        mono(2.0 * k * (k + 4.0), [2, 2, 0], -2.0, -2.0, -6),
        mono(1.5 * k * (k + 2.0), [0, 1, 1], -0.5, -2.0, -5),
        mono(0.75 * k * (k + 4.0), [0, 2, 2], -1.0, -2.0, -8),
        mono(k * (k + 16.0) / 4.0, [2, 0, 2], -3.0, -2.0, -4),
        mono(2.5 * k * (k + 2.0), [1, 0, 2], -2.0, -2.0, -4),
        mono(6.0 * k * (k + 1.0), [1, 1, 0], -1.0, -2.0, -4),
        mono(6.0 * k, [3, 1, 0], -3.0, -2.0, -4),
        mono(6.0 * k * (k + 2.0), [2, 1, 0], -2.0, -2.0, -4),
        mono(8.0 * k * (k + 1.0), [1, 2, 0], -1.0, -2.0, -6),
        mono(k * (k + 10.0) / 4.0, [1, 0, 3], -2.5, -2.0, -5),
        mono(k * (k + 10.0) / 4.0, [0, 1, 3], -1.5, -2.0, -7),
        mono(k * (2.0 * k + 11.0), [1, 1, 2], -2.0, -2.0, -6),
        mono(2.0 * k * (2.0 * k + 5.0), [1, 2, 1], -1.5, -2.0, -7),
        mono(k * (11.0 * k + 18.0), [1, 1, 1], -1.5, -2.0, -5),
        mono(1.5 * k * (k + 10.0), [2, 1, 1], -2.5, -2.0, -5),
    ]
}

/// Expanded sums next to their compact counterparts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateTerms {
    pub eta_fxx: TermSum,
    pub eta_fyy: TermSum,
    pub eta_fxy: TermSum,
    pub eta2_fxx_fyy: TermSum,
    pub eta2_fxy2: TermSum,
    /// `η² (f_xx f_yy − f_xy²)` from the collected positive form.
    pub det_surplus: TermSum,
    /// Compact `[η f_xx, η f_yy, η f_xy]`.
    pub compact: [f64; 3],
}

impl CertificateTerms {
    /// Largest discrepancy between expanded and compact forms, each relative
    /// to the magnitude scale of the sum involved.
    pub fn max_expansion_error(&self) -> f64 {
        let [cxx, cyy, cxy] = self.compact;
        let rel = |a: f64, b: f64, scale: f64| (a - b).abs() / scale;
        let xy_scale = self.eta_fxy.abs_sum.max(cxy.abs());
        let sq_scale = xy_scale * xy_scale;
        let prod_scale = self.eta2_fxx_fyy.abs_sum.max((cxx * cyy).abs());
        [
            rel(self.eta_fxx.value, cxx, self.eta_fxx.abs_sum),
            rel(self.eta_fyy.value, cyy, self.eta_fyy.abs_sum),
            rel(self.eta_fxy.value, cxy, xy_scale),
            rel(self.eta2_fxx_fyy.value, cxx * cyy, prod_scale),
            rel(self.eta2_fxy2.value, cxy * cxy, sq_scale),
            rel(
                self.det_surplus.value,
                self.eta2_fxx_fyy.value - self.eta2_fxy2.value,
                prod_scale + sq_scale,
            ),
            rel(self.det_surplus.value, cxx * cyy - cxy * cxy, prod_scale + sq_scale),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn hessian_certificate_terms(x: f64, y: f64, p: &LemmaParams) -> Result<CertificateTerms> {
    check_point(x, y)?;
    let ln = LogPoint {
        k1: p.k1.ln(),
        k2: p.k2.ln(),
        k3: p.k3.ln(),
        kappa: p.kappa,
        x: x.ln(),
        y: y.ln(),
    };
    let k = p.kappa;
    Ok(CertificateTerms {
        eta_fxx: sum_terms(&eta_fxx_terms(k), &ln),
        eta_fyy: sum_terms(&eta_fyy_terms(k), &ln),
        eta_fxy: sum_terms(&eta_fxy_terms(k), &ln),
        eta2_fxx_fyy: sum_terms(&eta2_fxx_fyy_terms(k), &ln),
        eta2_fxy2: sum_terms(&eta2_fxy2_terms(k), &ln),
        det_surplus: sum_terms(&det_surplus_terms(k), &ln),
        compact: eta_scaled(&s_parts(x, y, p)),
    })
}

/// Sampling box of the verification sweep: every `K` log-uniform in
/// `[k_lo, k_hi]`, `κ` uniform in `(0, kappa_max]`, `x, y` log-uniform in
/// `[xy_lo, xy_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepDomain {
    pub k_lo: f64,
    pub k_hi: f64,
    pub kappa_max: f64,
    pub xy_lo: f64,
    pub xy_hi: f64,
}

impl Default for SweepDomain {
    fn default() -> Self {
        SweepDomain {
            k_lo: 1e-3,
            k_hi: 1e3,
            kappa_max: 6.0,
            xy_lo: 1e-2,
            xy_hi: 1e3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub params: LemmaParams,
    pub x: f64,
    pub y: f64,
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

/// Deterministic sample of `count` points from `domain`.
pub fn sample_points(domain: &SweepDomain, count: usize, seed: u64) -> Vec<SweepPoint> {
    let mut r = rng::stream(seed, "convexity/sweep");
    (0..count)
        .map(|_| {
            let mut k = || log_uniform(&mut r, domain.k_lo, domain.k_hi);
            let (k1, k2, k3) = (k(), k(), k());
            // (0, kappa_max]: flip the half-open [0, max) draw
            let kappa = domain.kappa_max - r.random_range(0.0..domain.kappa_max);
            SweepPoint {
                params: LemmaParams { k1, k2, k3, kappa },
                x: log_uniform(&mut r, domain.xy_lo, domain.xy_hi),
                y: log_uniform(&mut r, domain.xy_lo, domain.xy_hi),
            }
        })
        .collect()
}

fn fd_step(v: f64) -> f64 {
    1e-6 * v.abs().max(1.0)
}

/// Relative error of the analytic gradient against central differences of
/// `f`. Components are measured against the gradient norm.
pub fn grad_fd_error(pt: &SweepPoint) -> Result<f64> {
    let (x, y, p) = (pt.x, pt.y, &pt.params);
    let g = grad_f(x, y, p)?;
    let (hx, hy) = (fd_step(x).min(x / 2.0), fd_step(y).min(y / 2.0));
    let fx = (f_value(x + hx, y, p)? - f_value(x - hx, y, p)?) / (2.0 * hx);
    let fy = (f_value(x, y + hy, p)? - f_value(x, y - hy, p)?) / (2.0 * hy);
    let scale = g[0].hypot(g[1]);
    Ok(((fx - g[0]).abs() / scale).max((fy - g[1]).abs() / scale))
}

/// Relative error of the analytic Hessian against central differences of
/// the analytic gradient. Diagonal entries are compared to themselves; the
/// off-diagonal, which changes sign, to `sqrt(f_xx f_yy)`.
///
/// Steps are relative to the coordinate: with curvature ratios up to `1e17`
/// inside the sweep box, an absolute `1e-6` step leaves the off-diagonal
/// difference quotient dominated by rounding in `∇f`.
pub fn hessian_fd_error(pt: &SweepPoint) -> Result<f64> {
    let (x, y, p) = (pt.x, pt.y, &pt.params);
    let h = hessian_f(x, y, p)?;
    // central differences at steps h and h/2, Richardson-combined
    let diff = |dx: f64, dy: f64| -> Result<[f64; 2]> {
        let plus = grad_f(x + dx, y + dy, p)?;
        let minus = grad_f(x - dx, y - dy, p)?;
        let step = 2.0 * (dx + dy);
        Ok([(plus[0] - minus[0]) / step, (plus[1] - minus[1]) / step])
    };
    let richardson = |dx: f64, dy: f64| -> Result<[f64; 2]> {
        let coarse = diff(dx, dy)?;
        let fine = diff(dx / 2.0, dy / 2.0)?;
        Ok([(4.0 * fine[0] - coarse[0]) / 3.0, (4.0 * fine[1] - coarse[1]) / 3.0])
    };
    let [fxx, fyx] = richardson(1e-3 * x, 0.0)?;
    let [fxy, fyy] = richardson(0.0, 1e-3 * y)?;
    let off = (h[0][0] * h[1][1]).sqrt();
    Ok([
        (fxx - h[0][0]).abs() / h[0][0].abs(),
        (fyy - h[1][1]).abs() / h[1][1].abs(),
        (fxy - h[0][1]).abs() / off,
        (fyx - h[1][0]).abs() / off,
    ]
    .into_iter()
    .fold(0.0, f64::max))
}

/// Output of [`verify_lemma`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub points_tested: usize,
    /// Smallest of `f_xx` and `det ∇²f` over all points.
    pub min_leading_minor: f64,
    /// Smallest `η² det ∇²f`.
    pub min_det_surplus: f64,
    /// Largest analytic-vs-finite-difference error of the Hessian.
    pub max_fd_rel_error: f64,
    /// Same for the gradient, against differences of `f` itself.
    pub max_grad_fd_rel_error: f64,
    /// Largest expanded-vs-compact discrepancy.
    pub max_expansion_rel_error: f64,
    pub fd_tolerance: f64,
    pub expansion_tolerance: f64,
    pub passed: bool,
}

struct PointResult {
    leading_minor: f64,
    det_surplus: f64,
    fd: f64,
    grad_fd: f64,
    expansion: f64,
}

fn check_one(pt: &SweepPoint) -> Result<PointResult> {
    let (x, y, p) = (pt.x, pt.y, &pt.params);
    let terms = hessian_certificate_terms(x, y, p)?;
    let eta = eta(x, y, p);
    // signs taken from the all-positive expansions, so no cancellation
    let fxx = terms.eta_fxx.value / eta;
    let det = terms.det_surplus.value / (eta * eta);
    Ok(PointResult {
        leading_minor: fxx.min(det),
        det_surplus: terms.det_surplus.value,
        fd: hessian_fd_error(pt)?,
        grad_fd: grad_fd_error(pt)?,
        expansion: terms.max_expansion_error(),
    })
}

/// Runs every check of the sweep over `points`.
pub fn verify_points(points: &[SweepPoint], fd_tolerance: f64, expansion_tolerance: f64) -> Result<VerificationReport> {
    let results: Vec<PointResult> = points.par_iter().map(check_one).collect::<Result<_>>()?;
    let min_leading_minor = results.iter().map(|r| r.leading_minor).fold(f64::INFINITY, f64::min);
    let min_det_surplus = results.iter().map(|r| r.det_surplus).fold(f64::INFINITY, f64::min);
    let max_fd_rel_error = results.iter().map(|r| r.fd).fold(0.0, f64::max);
    let max_grad_fd_rel_error = results.iter().map(|r| r.grad_fd).fold(0.0, f64::max);
    let max_expansion_rel_error = results.iter().map(|r| r.expansion).fold(0.0, f64::max);
    let passed = !results.is_empty()
        && min_leading_minor > 0.0
        && min_det_surplus > 0.0
        && max_fd_rel_error <= fd_tolerance
        && max_grad_fd_rel_error <= fd_tolerance
        && max_expansion_rel_error <= expansion_tolerance;
    Ok(VerificationReport {
        points_tested: results.len(),
        min_leading_minor,
        min_det_surplus,
        max_fd_rel_error,
        max_grad_fd_rel_error,
        max_expansion_rel_error,
        fd_tolerance,
        expansion_tolerance,
        passed,
    })
}

/// The standard sweep: 10⁴ points from [`SweepDomain::default`], finite
/// differences at `1e-5`, expansions at `1e-10`.
pub fn verify_lemma(seed: u64) -> Result<VerificationReport> {
    let points = sample_points(&SweepDomain::default(), 10_000, seed);
    verify_points(&points, 1e-5, 1e-10)
}
