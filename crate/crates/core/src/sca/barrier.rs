//! Log-barrier Newton method for the chain subproblem.
//!
//! Block-coordinate ascent alone can stall when the chain is taut: every
//! waypoint is pinned by its two neighbours even though moving them
//! together would help. The barrier method solves the whole chain jointly.
//! Its Newton systems are block tridiagonal with 2x2 blocks, so each step
//! costs O(N).

use crate::error::{Error, Result};
use crate::geometry::Vec2;

use super::subproblem::ChainProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Sym2 {
    xx: f64,
    xy: f64,
    yy: f64,
}

impl Sym2 {
    const ZERO: Sym2 = Sym2 { xx: 0.0, xy: 0.0, yy: 0.0 };

    fn scaled_identity(a: f64) -> Self {
        Sym2 { xx: a, xy: 0.0, yy: a }
    }

    fn add(self, o: Sym2) -> Self {
        Sym2 { xx: self.xx + o.xx, xy: self.xy + o.xy, yy: self.yy + o.yy }
    }

    fn neg(self) -> Self {
        Sym2 { xx: -self.xx, xy: -self.xy, yy: -self.yy }
    }

    fn apply(self, v: Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }
}

/// General 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy)]
struct Mat2 {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Mat2 {
    fn from_sym(s: Sym2) -> Self {
        Mat2 { a: s.xx, b: s.xy, c: s.xy, d: s.yy }
    }

    fn inverse(self) -> Option<Self> {
        let det = self.a * self.d - self.b * self.c;
        if !(det.abs() > 0.0) || !det.is_finite() {
            return None;
        }
        Some(Mat2 { a: self.d / det, b: -self.b / det, c: -self.c / det, d: self.a / det })
    }

    fn mul(self, o: Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    fn sub(self, o: Mat2) -> Mat2 {
        Mat2 { a: self.a - o.a, b: self.b - o.b, c: self.c - o.c, d: self.d - o.d }
    }

    fn apply(self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }
}

/// Solves the block-tridiagonal system with symmetric diagonal blocks
/// `diag[j]`, symmetric coupling blocks `off[j]` between `j` and `j + 1`.
fn block_thomas(diag: &[Sym2], off: &[Sym2], rhs: &[Vec2]) -> Option<Vec<Vec2>> {
    let m = diag.len();
    let mut dinv: Vec<Mat2> = Vec::with_capacity(m);
    let mut r: Vec<Vec2> = Vec::with_capacity(m);
    for j in 0..m {
        let (dj, rj) = if j == 0 {
            (Mat2::from_sym(diag[0]), rhs[0])
        } else {
            let o = Mat2::from_sym(off[j - 1]);
            let factor = o.mul(dinv[j - 1]);
            (Mat2::from_sym(diag[j]).sub(factor.mul(o)), rhs[j] - factor.apply(r[j - 1]))
        };
        dinv.push(dj.inverse()?);
        r.push(rj);
    }
    let mut x = vec![Vec2::ZERO; m];
    x[m - 1] = dinv[m - 1].apply(r[m - 1]);
    for j in (0..m - 1).rev() {
        x[j] = dinv[j].apply(r[j] - off[j].apply(x[j + 1]));
    }
    Some(x)
}

pub struct BarrierSolution {
    pub points: Vec<Vec2>,
    pub newton_steps: usize,
}

struct Barrier<'a> {
    p: &'a ChainProblem,
    /// `-(c1 + c2)` per slot.
    weight: Vec<f64>,
    /// Per-slot attractor (unused when the weight is zero).
    target: Vec<Vec2>,
    r2: f64,
}

impl Barrier<'_> {
    fn position(&self, free: &[Vec2], k: usize) -> Vec2 {
        match k {
            0 => self.p.start,
            k if k <= free.len() => free[k - 1],
            _ => self.p.end,
        }
    }

    /// `t * (-objective) - sum log(slack)`, up to constants; `None` outside
    /// the open feasible set.
    fn value(&self, free: &[Vec2], t: f64) -> Option<f64> {
        let mut v = 0.0;
        for (j, &q) in free.iter().enumerate() {
            let w = self.weight[j + 1];
            if w > 0.0 {
                v += t * w * (q - self.target[j + 1]).norm_sq();
            }
        }
        for k in 0..=free.len() {
            let s = self.r2 - (self.position(free, k + 1) - self.position(free, k)).norm_sq();
            if !(s > 0.0) {
                return None;
            }
            v -= s.ln();
        }
        Some(v)
    }

    fn newton_direction(&self, free: &[Vec2], t: f64) -> Option<(Vec<Vec2>, f64)> {
        let m = free.len();
        let mut diag = vec![Sym2::ZERO; m];
        let mut off = vec![Sym2::ZERO; m.saturating_sub(1)];
        let mut grad = vec![Vec2::ZERO; m];
        for j in 0..m {
            let w = self.weight[j + 1];
            if w > 0.0 {
                grad[j] = grad[j] + (free[j] - self.target[j + 1]) * (2.0 * t * w);
                diag[j] = diag[j].add(Sym2::scaled_identity(2.0 * t * w));
            }
        }
        // constraint k couples waypoint k (free index k-1) and k+1 (free index k)
        for k in 0..=m {
            let delta = self.position(free, k + 1) - self.position(free, k);
            let s = self.r2 - delta.norm_sq();
            let g = delta * (2.0 / s);
            let h = Sym2 {
                xx: 2.0 / s + 4.0 * delta.x * delta.x / (s * s),
                xy: 4.0 * delta.x * delta.y / (s * s),
                yy: 2.0 / s + 4.0 * delta.y * delta.y / (s * s),
            };
            if k < m {
                grad[k] = grad[k] + g;
                diag[k] = diag[k].add(h);
            }
            if k >= 1 {
                grad[k - 1] = grad[k - 1] - g;
                diag[k - 1] = diag[k - 1].add(h);
            }
            if k >= 1 && k < m {
                off[k - 1] = off[k - 1].add(h.neg());
            }
        }
        let rhs: Vec<Vec2> = grad.iter().map(|&g| -g).collect();
        let step = block_thomas(&diag, &off, &rhs)?;
        let slope: f64 = grad.iter().zip(&step).map(|(g, d)| g.dot(*d)).sum();
        Some((step, slope))
    }
}

/// Maximizes the chain objective to within a duality gap of
/// `gap_rel * sum_n |c1 + c2| D^2`. Returns `None` when the feasible set has
/// no interior (the endpoints are exactly `N` full steps apart) or the
/// objective is flat.
pub fn solve_barrier(p: &ChainProblem, gap_rel: f64) -> Result<Option<BarrierSolution>> {
    let n = p.len();
    if n < 2 {
        return Ok(None);
    }
    let weight: Vec<f64> = (0..n).map(|k| -(p.c1[k] + p.c2[k])).collect();
    if weight.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Solver("subproblem weights must be finite and non-positive".into()));
    }
    let scale: f64 = weight.iter().sum::<f64>() * p.step * p.step;
    if !(scale > 0.0) {
        return Ok(None);
    }
    let line_step = p.start.dist(p.end) / n as f64;
    if line_step >= p.step * (1.0 - 1e-9) {
        return Ok(None);
    }
    let target = (0..n).map(|k| p.attractor(k).unwrap_or(p.start)).collect();
    let b = Barrier { p, weight, target, r2: p.step * p.step };

    let mut free: Vec<Vec2> = (1..n).map(|k| p.start.lerp(p.end, k as f64 / n as f64)).collect();
    let constraints = n as f64;
    let mut t = constraints / scale;
    let target_gap = gap_rel * scale;
    let mut newton_steps = 0;
    loop {
        for _ in 0..200 {
            let Some((dir, slope)) = b.newton_direction(&free, t) else {
                return Err(Error::Solver("singular barrier Newton system".into()));
            };
            if -slope / 2.0 <= 1e-12 {
                break;
            }
            newton_steps += 1;
            let f0 = b.value(&free, t).expect("iterate stays interior");
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..80 {
                let trial: Vec<Vec2> = free.iter().zip(&dir).map(|(&q, &d)| q + d * alpha).collect();
                if let Some(f1) = b.value(&trial, t) {
                    if f1 <= f0 + 0.25 * alpha * slope {
                        free = trial;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if constraints / t <= target_gap {
            break;
        }
        t *= 20.0;
    }
    let mut points = Vec::with_capacity(n);
    points.push(p.start);
    points.extend(free);
    Ok(Some(BarrierSolution { points, newton_steps }))
}
