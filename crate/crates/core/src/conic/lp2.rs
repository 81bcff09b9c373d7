use super::FeasibilityVerdict;

/// `a[0] x + a[1] y <= b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearConstraint {
    pub a: [f64; 2],
    pub b: f64,
}

impl LinearConstraint {
    pub fn new(a: [f64; 2], b: f64) -> Self {
        LinearConstraint { a, b }
    }

    /// `a . x - b`; positive means violated.
    pub fn residual(&self, x: [f64; 2]) -> f64 {
        self.a[0] * x[0] + self.a[1] * x[1] - self.b
    }

    fn slack_tol(&self, x: [f64; 2]) -> f64 {
        let scale = (self.a[0] * x[0]).abs() + (self.a[1] * x[1]).abs() + self.b.abs();
        1e-12 * scale.max(1.0)
    }
}

const MAX_CONSTRAINTS: usize = 8;

/// All vertices of `{x in [0, p0] x [0, p1] : constraints}`, deduplicated.
///
/// The region is bounded by the box, so it is nonempty iff this list is.
pub fn lp2_vertices(constraints: &[LinearConstraint], bounds: [f64; 2]) -> Vec<[f64; 2]> {
    assert!(
        constraints.len() <= MAX_CONSTRAINTS,
        "at most {MAX_CONSTRAINTS} constraints"
    );
    if !(bounds[0] >= 0.0 && bounds[1] >= 0.0) {
        return Vec::new();
    }
    let mut all: Vec<LinearConstraint> = constraints.to_vec();
    all.push(LinearConstraint::new([-1.0, 0.0], 0.0));
    all.push(LinearConstraint::new([0.0, -1.0], 0.0));
    all.push(LinearConstraint::new([1.0, 0.0], bounds[0]));
    all.push(LinearConstraint::new([0.0, 1.0], bounds[1]));

    let mut out: Vec<[f64; 2]> = Vec::new();
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            let (p, q) = (all[i], all[j]);
            let det = p.a[0] * q.a[1] - p.a[1] * q.a[0];
            let scale = (p.a[0].abs() + p.a[1].abs()) * (q.a[0].abs() + q.a[1].abs());
            if det.abs() <= 1e-14 * scale || scale == 0.0 {
                continue;
            }
            let x = [
                (p.b * q.a[1] - p.a[1] * q.b) / det,
                (p.a[0] * q.b - p.b * q.a[0]) / det,
            ];
            if !x.iter().all(|v| v.is_finite()) {
                continue;
            }
            // snap round-off onto the box
            let x = [x[0].clamp(0.0, bounds[0]), x[1].clamp(0.0, bounds[1])];
            if all.iter().all(|c| c.residual(x) <= c.slack_tol(x)) {
                let dup = out.iter().any(|v| {
                    (v[0] - x[0]).abs() <= 1e-12 * (1.0 + x[0].abs())
                        && (v[1] - x[1]).abs() <= 1e-12 * (1.0 + x[1].abs())
                });
                if !dup {
                    out.push(x);
                }
            }
        }
    }
    out
}

/// Decides nonemptiness of `{x in [0, p0] x [0, p1] : constraints}` by
/// vertex enumeration. The witness is the first feasible vertex found.
pub fn lp2_feasible(
    constraints: &[LinearConstraint],
    bounds: [f64; 2],
) -> FeasibilityVerdict<[f64; 2]> {
    let verts = lp2_vertices(constraints, bounds);
    let worst = |x: [f64; 2]| {
        constraints
            .iter()
            .map(|c| c.residual(x))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    match verts.first() {
        Some(&x) => FeasibilityVerdict::feasible(x, worst(x).max(0.0)),
        None => {
            let corner = [bounds[0].max(0.0), bounds[1].max(0.0)];
            FeasibilityVerdict::infeasible(worst([0.0, 0.0]).min(worst(corner)).max(0.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::Decision;

    #[test]
    fn unconstrained_box_has_four_corners() {
        let v = lp2_vertices(&[], [1.0, 2.0]);
        assert_eq!(v.len(), 4);
        assert!(lp2_feasible(&[], [0.0, 0.0]).is_feasible());
    }

    #[test]
    fn empty_box() {
        assert_eq!(
            lp2_feasible(&[], [-1.0, 1.0]).decision,
            Decision::Infeasible
        );
    }

    #[test]
    fn triangle() {
        // x + y <= 1 inside [0,2]^2
        let c = [LinearConstraint::new([1.0, 1.0], 1.0)];
        let mut v = lp2_vertices(&c, [2.0, 2.0]);
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(v, vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn infeasible_half_planes() {
        let c = [
            LinearConstraint::new([1.0, 0.0], 0.2),
            LinearConstraint::new([-1.0, 0.0], -0.3),
        ];
        let v = lp2_feasible(&c, [1.0, 1.0]);
        assert_eq!(v.decision, Decision::Infeasible);
        assert!(v.witness.is_none());
    }

    #[test]
    fn single_point_region() {
        // x >= 0.5, x <= 0.5, y >= 0.25, y <= 0.25
        let c = [
            LinearConstraint::new([1.0, 0.0], 0.5),
            LinearConstraint::new([-1.0, 0.0], -0.5),
            LinearConstraint::new([0.0, 1.0], 0.25),
            LinearConstraint::new([0.0, -1.0], -0.25),
        ];
        let v = lp2_feasible(&c, [1.0, 1.0]);
        assert_eq!(v.witness, Some([0.5, 0.25]));
    }
}
