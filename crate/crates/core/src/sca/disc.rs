//! Euclidean projection onto the intersection of two closed discs.

use crate::error::{Error, Result};
use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub center: Vec2,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: Vec2, radius: f64) -> Self {
        Disc { center, radius }
    }

    fn slack(&self) -> f64 {
        1e-12 * self.radius.max(1.0)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.dist(self.center) <= self.radius + self.slack()
    }

    pub fn project(&self, p: Vec2) -> Vec2 {
        let offset = p - self.center;
        let dist = offset.norm();
        if dist <= self.radius {
            p
        } else {
            self.center + offset * (self.radius / dist)
        }
    }
}

/// Closest point to `p` in `first ∩ second`.
///
/// Exact case analysis: `p` itself, the projection onto either disc when it
/// lands inside the other, or the nearer of the two boundary crossings.
/// Falls back to Dykstra's alternating projections when the crossing
/// computation is numerically unreliable (nearly tangent discs).
pub fn project_onto_lens(p: Vec2, first: Disc, second: Disc) -> Result<Vec2> {
    let gap = first.center.dist(second.center);
    if gap > first.radius + second.radius + first.slack() + second.slack() {
        return Err(Error::Infeasible(format!(
            "discs do not intersect (centers {gap:.6} m apart, radii {} and {})",
            first.radius, second.radius
        )));
    }
    if first.contains(p) && second.contains(p) {
        return Ok(p);
    }
    let p1 = first.project(p);
    if second.contains(p1) {
        return Ok(p1);
    }
    let p2 = second.project(p);
    if first.contains(p2) {
        return Ok(p2);
    }
    if let Some(corner) = nearest_crossing(p, first, second) {
        if first.contains(corner) && second.contains(corner) {
            return Ok(corner);
        }
    }
    dykstra(p, first, second, 10_000, 1e-13)
}

fn nearest_crossing(p: Vec2, first: Disc, second: Disc) -> Option<Vec2> {
    let axis = second.center - first.center;
    let d = axis.norm();
    if d == 0.0 {
        return None;
    }
    let along = (d * d + first.radius * first.radius - second.radius * second.radius) / (2.0 * d);
    let h2 = first.radius * first.radius - along * along;
    let h = if h2 > 0.0 { h2.sqrt() } else { 0.0 };
    let e = axis * (1.0 / d);
    let perp = Vec2::new(-e.y, e.x);
    let mid = first.center + e * along;
    let a = mid + perp * h;
    let b = mid - perp * h;
    Some(if a.dist(p) <= b.dist(p) { a } else { b })
}

/// Dykstra's algorithm for the projection onto the intersection of two
/// convex sets.
pub fn dykstra(p: Vec2, first: Disc, second: Disc, max_iter: usize, tol: f64) -> Result<Vec2> {
    let mut x = p;
    let mut corr_first = Vec2::ZERO;
    let mut corr_second = Vec2::ZERO;
    for _ in 0..max_iter {
        let y = first.project(x + corr_first);
        corr_first = x + corr_first - y;
        let next = second.project(y + corr_second);
        corr_second = y + corr_second - next;
        let moved = next.dist(x);
        x = next;
        if moved <= tol * first.radius.max(1.0) && first.contains(x) {
            return Ok(x);
        }
    }
    if first.contains(x) && second.contains(x) {
        Ok(x)
    } else {
        Err(Error::Solver("Dykstra projection did not converge".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn point_inside_both_is_unchanged() {
        let a = Disc::new(Vec2::new(0.0, 0.0), 2.0);
        let b = Disc::new(Vec2::new(1.0, 0.0), 2.0);
        let p = Vec2::new(0.5, 0.3);
        assert_eq!(project_onto_lens(p, a, b).unwrap(), p);
    }

    #[test]
    fn single_disc_active() {
        let a = Disc::new(Vec2::new(0.0, 0.0), 1.0);
        let b = Disc::new(Vec2::new(0.0, 0.0), 10.0);
        let got = project_onto_lens(Vec2::new(3.0, 4.0), a, b).unwrap();
        assert!((got - Vec2::new(0.6, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn corner_case() {
        // unit discs centered at (-0.5, 0) and (0.5, 0) cross at (0, +-sqrt(3)/2)
        let a = Disc::new(Vec2::new(-0.5, 0.0), 1.0);
        let b = Disc::new(Vec2::new(0.5, 0.0), 1.0);
        let got = project_onto_lens(Vec2::new(0.0, 5.0), a, b).unwrap();
        assert!((got - Vec2::new(0.0, 3f64.sqrt() / 2.0)).norm() < 1e-14);
    }

    #[test]
    fn tangent_discs_give_touch_point() {
        let a = Disc::new(Vec2::new(0.0, 0.0), 1.0);
        let b = Disc::new(Vec2::new(2.0, 0.0), 1.0);
        let got = project_onto_lens(Vec2::new(1.0, 3.0), a, b).unwrap();
        assert!((got - Vec2::new(1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn disjoint_discs_error() {
        let a = Disc::new(Vec2::new(0.0, 0.0), 1.0);
        let b = Disc::new(Vec2::new(3.0, 0.0), 1.0);
        assert!(project_onto_lens(Vec2::new(1.5, 0.0), a, b).is_err());
    }

    proptest! {
        #[test]
        fn case_analysis_matches_dykstra(
            cx in -3.0f64..3.0, cy in -3.0f64..3.0,
            r1 in 0.5f64..3.0, r2 in 0.5f64..3.0,
            px in -10.0f64..10.0, py in -10.0f64..10.0,
        ) {
            let a = Disc::new(Vec2::new(0.0, 0.0), r1);
            let b = Disc::new(Vec2::new(cx, cy), r2);
            prop_assume!(b.center.norm() < r1 + r2 - 1e-3);
            let p = Vec2::new(px, py);
            let exact = project_onto_lens(p, a, b).unwrap();
            let iterative = dykstra(p, a, b, 200_000, 1e-15).unwrap();
            prop_assert!(a.contains(exact) && b.contains(exact));
            prop_assert!(exact.dist(iterative) < 1e-6, "{:?} vs {:?}", exact, iterative);
        }

        #[test]
        fn projection_is_closest_feasible_point(
            cx in -2.0f64..2.0, r1 in 0.5f64..2.0, r2 in 0.5f64..2.0,
            px in -6.0f64..6.0, py in -6.0f64..6.0, t in 0.0f64..std::f64::consts::TAU, s in 0.0f64..1.0,
        ) {
            let a = Disc::new(Vec2::new(0.0, 0.0), r1);
            let b = Disc::new(Vec2::new(cx, 0.3), r2);
            prop_assume!(b.center.norm() < r1 + r2 - 1e-3);
            let p = Vec2::new(px, py);
            let best = project_onto_lens(p, a, b).unwrap();
            // random point of the first disc, kept only if it is in the lens
            let cand = Vec2::new(t.cos(), t.sin()) * (s * r1);
            if b.contains(cand) {
                prop_assert!(best.dist(p) <= cand.dist(p) + 1e-12);
            }
        }
    }
}
