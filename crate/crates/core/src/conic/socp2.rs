use num_complex::Complex64;

use super::FeasibilityVerdict;

/// Absolute feasibility tolerance on the residual, scaled by the box size.
pub const SOCP_TOL: f64 = 1e-9;

const GOLDEN_ITERS: usize = 64;

/// Data of the two-cone feasibility problem in `(x, t)`:
///
/// `sqrt(a0 |g00 x + g01 t e^{i theta}|^2 + b0) <= w0 t`,
/// `sqrt(a1 |g10 x + g11 t e^{i theta}|^2 + b1) <= w1 x`,
/// `0 <= x <= x_max`, `0 <= t <= t_max`.
///
/// The weights are `1` for the usual normalized form; a zero weight encodes
/// a user with no incoming interference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Socp2Data {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub w: [f64; 2],
    /// Squared channel gains `h_kj^2`.
    pub g: [[Complex64; 2]; 2],
    pub theta: f64,
    pub x_max: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Socp2Witness {
    pub x: f64,
    pub t: f64,
    /// Pointwise max of the two cone residuals at `(x, t)`.
    pub residual: f64,
}

/// `max_k (sqrt(a_k |..|^2 + b_k) - rhs_k)`, convex in `(x, t)`.
pub fn socp2_residual(d: &Socp2Data, x: f64, t: f64) -> f64 {
    let z = Complex64::from_polar(t, d.theta);
    let l0 = d.g[0][0] * x + d.g[0][1] * z;
    let l1 = d.g[1][0] * x + d.g[1][1] * z;
    let r0 = (d.a[0] * l0.norm_sqr() + d.b[0]).sqrt() - d.w[0] * t;
    let r1 = (d.a[1] * l1.norm_sqr() + d.b[1]).sqrt() - d.w[1] * x;
    r0.max(r1)
}

/// Minimizes a convex function on `[lo, hi]`; endpoints are always examined.
fn golden_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut best = (lo, f(lo));
    let fh = f(hi);
    if fh < best.1 {
        best = (hi, fh);
    }
    if hi <= lo {
        return best;
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Decides the two-cone problem by minimizing the max-residual over the box.
///
/// The minimizer maximizes the smaller of the two cone slacks, so the
/// witness is the most robust feasible point.
pub fn socp2_feasible(d: &Socp2Data) -> FeasibilityVerdict<Socp2Witness> {
    let (xm, tm) = (d.x_max.max(0.0), d.t_max.max(0.0));
    if !(d.x_max >= 0.0 && d.t_max >= 0.0) {
        return FeasibilityVerdict::infeasible(f64::INFINITY);
    }
    let inner = |x: f64| golden_min(|t| socp2_residual(d, x, t), 0.0, tm);
    let (x, _) = golden_min(|x| inner(x).1, 0.0, xm);
    let (t, residual) = inner(x);
    let tol = SOCP_TOL * xm.max(tm).max(1.0);
    let w = Socp2Witness { x, t, residual };
    if residual <= tol {
        FeasibilityVerdict::feasible(w, residual.max(0.0))
    } else {
        FeasibilityVerdict::infeasible(residual)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::Decision;
    use crate::par::stream_rng;
    use rand::Rng;

    fn zero() -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    #[test]
    fn trivial_feasible_at_origin() {
        let d = Socp2Data {
            a: [1.0, 1.0],
            b: [0.0, 0.0],
            w: [1.0, 1.0],
            g: [[zero(); 2]; 2],
            theta: 0.3,
            x_max: 5.0,
            t_max: 5.0,
        };
        let v = socp2_feasible(&d);
        assert!(v.is_feasible());
        assert!(socp2_residual(&d, 0.0, 0.0) <= 0.0);
    }

    #[test]
    fn second_cone_needs_large_x() {
        let mut rng = stream_rng(1, 0);
        for _ in 0..20 {
            let g = [[Complex64::new(rng.random(), rng.random()); 2]; 2];
            let d = Socp2Data {
                a: [0.3, 0.3],
                b: [0.0, 4.01],
                w: [1.0, 1.0],
                g,
                theta: rng.random_range(-3.0..3.0),
                x_max: 2.0,
                t_max: 2.0,
            };
            assert_eq!(socp2_feasible(&d).decision, Decision::Infeasible);
        }
    }

    pub(crate) fn random_instance(rng: &mut impl Rng) -> Socp2Data {
        let mut g = || Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        let g = [[g(), g()], [g(), g()]];
        Socp2Data {
            a: [rng.random_range(0.0..0.6), rng.random_range(0.0..0.6)],
            b: [rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)],
            w: [1.0, 1.0],
            g,
            theta: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
            x_max: rng.random_range(0.5..4.0),
            t_max: rng.random_range(0.5..4.0),
        }
    }

    /// Brute-force 400x400 scan; disagreements must be explained by the
    /// scan's own resolution.
    #[test]
    fn agrees_with_box_scan() {
        let mut rng = stream_rng(77, 0);
        let n = 400;
        let mut feasible_seen = 0;
        for _ in 0..500 {
            let d = random_instance(&mut rng);
            let v = socp2_feasible(&d);
            let hx = d.x_max / (n - 1) as f64;
            let ht = d.t_max / (n - 1) as f64;
            let mut grid_min = f64::INFINITY;
            for i in 0..n {
                for j in 0..n {
                    grid_min = grid_min.min(socp2_residual(&d, i as f64 * hx, j as f64 * ht));
                }
            }
            let solver_min = match &v.witness {
                Some(w) => w.residual,
                None => v.max_violation,
            };
            // solver never does worse than the scan
            assert!(solver_min <= grid_min + 1e-9, "{solver_min} > {grid_min}");
            // Lipschitz bound of the residual times the cell diagonal
            let lip = 1.0
                + (0..2)
                    .map(|k| d.a[k].sqrt() * (d.g[k][0].norm() + d.g[k][1].norm()))
                    .fold(0.0, f64::max);
            assert!(grid_min <= solver_min + lip * (hx + ht));
            if grid_min <= 0.0 {
                assert!(v.is_feasible());
                feasible_seen += 1;
            }
            if !v.is_feasible() {
                assert!(grid_min > 0.0);
            }
        }
        assert!(feasible_seen > 50 && feasible_seen < 450, "{feasible_seen}");
    }
}
