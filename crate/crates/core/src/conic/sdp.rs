//! Max-slack phase-I barrier method for one fixed SDP shape.
//!
//! Unknowns are a real symmetric `3x3` matrix `C` with `C[0][0] = 1` and a
//! Hermitian `2x2` matrix `Q`, packed as
//! `y = (c01, c02, c11, c12, c22, q00, q11, Re q01, Im q01)`. The solver
//! maximizes `s` subject to `g_i(y) >= s`, `C - sI >= 0`, `Q - sI >= 0`.
//! The original system is feasible iff the optimal `s` is `>= -tol`.
//! Every unknown is confined to `[-BOX, BOX]`, which keeps the barrier
//! bounded below when the forms leave directions unconstrained.

use nalgebra::{Matrix2, Matrix3, SMatrix, SVector};
use num_complex::Complex64;

use super::FeasibilityVerdict;

pub const SDP_TOL: f64 = 1e-7;
/// Newton steps allowed per solve before giving up as undecided.
pub const SDP_ITERATION_CAP: usize = 200;

/// Bound on each packed unknown.
pub const BOX: f64 = 1e3;

const NV: usize = 10;
type Vec10 = SVector<f64, NV>;
type Mat10 = SMatrix<f64, NV, NV>;

/// Affine form `coef . y + constant >= 0` in the packed unknowns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearForm {
    pub coef: [f64; 9],
    pub constant: f64,
}

impl LinearForm {
    pub fn eval(&self, y: &[f64; 9]) -> f64 {
        self.coef.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() + self.constant
    }

    fn norm(&self) -> f64 {
        self.coef.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SdpProblem {
    pub constraints: Vec<LinearForm>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpWitness {
    pub y: [f64; 9],
    /// Optimal common slack found; `>= -tol` at a feasible verdict.
    pub slack: f64,
}

impl SdpWitness {
    pub fn c_matrix(&self) -> Matrix3<f64> {
        c_of(&self.y)
    }

    pub fn q_matrix(&self) -> Matrix2<Complex64> {
        q_of(&self.y)
    }
}

fn c_of(y: &[f64; 9]) -> Matrix3<f64> {
    Matrix3::new(1.0, y[0], y[1], y[0], y[2], y[3], y[1], y[3], y[4])
}

fn q_of(y: &[f64; 9]) -> Matrix2<Complex64> {
    let off = Complex64::new(y[7], y[8]);
    Matrix2::new(
        Complex64::new(y[5], 0.0),
        off,
        off.conj(),
        Complex64::new(y[6], 0.0),
    )
}

fn c_basis(j: usize) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    let (r, c) = match j {
        0 => (0, 1),
        1 => (0, 2),
        2 => (1, 1),
        3 => (1, 2),
        4 => (2, 2),
        _ => unreachable!(),
    };
    m[(r, c)] = 1.0;
    m[(c, r)] = 1.0;
    m
}

fn q_basis(j: usize) -> Matrix2<Complex64> {
    let (o, z, i) = (
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 1.0),
    );
    match j {
        5 => Matrix2::new(o, z, z, z),
        6 => Matrix2::new(z, z, z, o),
        7 => Matrix2::new(z, o, o, z),
        8 => Matrix2::new(z, i, -i, z),
        _ => unreachable!(),
    }
}

struct Barrier<'a> {
    rows: &'a [(Vec10, f64)],
}

struct Eval {
    value: f64,
    grad: Vec10,
    hess: Mat10,
}

fn split(z: &Vec10) -> ([f64; 9], f64) {
    let mut y = [0.0; 9];
    y.copy_from_slice(&z.as_slice()[..9]);
    (y, z[9])
}

impl Barrier<'_> {
    /// `-t s - sum ln(g_i - s) - ln det(C - sI) - ln det(Q - sI)`, or `None`
    /// outside the strict domain.
    fn eval(&self, z: &Vec10, t: f64, derivs: bool) -> Option<Eval> {
        let (y, s) = split(z);
        let mut value = -t * s;
        let mut grad = Vec10::zeros();
        let mut hess = Mat10::zeros();
        grad[9] = -t;
        for (row, c0) in self.rows {
            let h = row.dot(z) + c0;
            if !(h > 0.0) {
                return None;
            }
            value -= h.ln();
            if derivs {
                grad -= row / h;
                hess += row * row.transpose() / (h * h);
            }
        }

        let m = c_of(&y) - Matrix3::identity() * s;
        let chol = m.cholesky()?;
        value -= 2.0 * (0..3).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>();
        let n = q_of(&y) - Matrix2::identity() * Complex64::new(s, 0.0);
        let det_n = (n[(0, 0)] * n[(1, 1)] - n[(0, 1)] * n[(1, 0)]).re;
        if !(n[(0, 0)].re > 0.0 && det_n > 0.0) {
            return None;
        }
        value -= det_n.ln();

        if derivs {
            let mi = chol.inverse();
            let cb: Vec<(usize, Matrix3<f64>)> = (0..5)
                .map(|j| (j, c_basis(j)))
                .chain(std::iter::once((9, -Matrix3::identity())))
                .collect();
            let prod: Vec<Matrix3<f64>> = cb.iter().map(|(_, b)| mi * b).collect();
            for (a, (ja, _)) in cb.iter().enumerate() {
                grad[*ja] -= prod[a].trace();
                for (b, (jb, _)) in cb.iter().enumerate() {
                    hess[(*ja, *jb)] += (prod[a] * prod[b]).trace();
                }
            }

            let ni = Matrix2::new(n[(1, 1)], -n[(0, 1)], -n[(1, 0)], n[(0, 0)])
                / Complex64::new(det_n, 0.0);
            let qb: Vec<(usize, Matrix2<Complex64>)> = (5..9)
                .map(|j| (j, q_basis(j)))
                .chain(std::iter::once((9, -Matrix2::identity())))
                .collect();
            let prod: Vec<Matrix2<Complex64>> = qb.iter().map(|(_, b)| ni * b).collect();
            for (a, (ja, _)) in qb.iter().enumerate() {
                grad[*ja] -= prod[a].trace().re;
                for (b, (jb, _)) in qb.iter().enumerate() {
                    hess[(*ja, *jb)] += (prod[a] * prod[b]).trace().re;
                }
            }
        }
        Some(Eval { value, grad, hess })
    }
}

/// Largest common slack of the linear forms and both PSD blocks at `y`.
fn slack_at(rows: &[(Vec10, f64)], y: &[f64; 9]) -> f64 {
    let mut z = Vec10::zeros();
    z.as_mut_slice()[..9].copy_from_slice(y);
    let lin = rows
        .iter()
        .map(|(r, c)| r.dot(&z) + c)
        .fold(f64::INFINITY, f64::min);
    let c_min = c_of(y).symmetric_eigenvalues().min();
    let q = q_of(y);
    let (a, d, b) = (q[(0, 0)].re, q[(1, 1)].re, q[(0, 1)].norm());
    let q_min = 0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt();
    lin.min(c_min).min(q_min)
}

/// Decides the SDP by maximizing the common slack with a barrier method.
pub fn sdp_feasible(problem: &SdpProblem, tol: f64) -> FeasibilityVerdict<SdpWitness> {
    // Rows normalized so the slack is a distance in y-space. Forms with no
    // y-dependence are checked directly.
    let mut rows: Vec<(Vec10, f64)> = Vec::with_capacity(problem.constraints.len());
    for f in &problem.constraints {
        let nrm = f.norm();
        if nrm <= 1e-12 * (1.0 + f.constant.abs()) {
            if f.constant < -tol * (1.0 + f.constant.abs()).max(1.0) {
                return FeasibilityVerdict::infeasible(-f.constant);
            }
            continue;
        }
        let mut r = Vec10::zeros();
        for j in 0..9 {
            r[j] = f.coef[j] / nrm;
        }
        r[9] = -1.0;
        rows.push((r, f.constant / nrm));
    }
    let checked = rows.len();
    for j in 0..9 {
        for sign in [1.0, -1.0] {
            let mut r = Vec10::zeros();
            r[j] = sign;
            rows.push((r, BOX));
        }
    }
    let barrier = Barrier { rows: &rows };
    let m = rows.len() as f64 + 5.0;

    let y0 = [0.25, 0.25, 0.5, 0.0, 0.5, 0.1, 0.1, 0.0, 0.0];
    let s0 = slack_at(&rows[..checked], &y0) - 1.0;
    let mut z = Vec10::from_iterator(y0.iter().copied().chain(std::iter::once(s0)));
    let mut t = 1.0;
    let mut steps = 0;

    loop {
        // centering
        loop {
            if steps >= SDP_ITERATION_CAP {
                let (y, s) = split(&z);
                log::debug!("sdp undecided after {steps} Newton steps, slack {s:.3e}, t {t:.1e}");
                let _ = y;
                return FeasibilityVerdict::undecided(-s);
            }
            let Some(e) = barrier.eval(&z, t, true) else {
                unreachable!("iterate left the barrier domain")
            };
            let Some(dz) = e.hess.cholesky().map(|c| -c.solve(&e.grad)) else {
                let (_, s) = split(&z);
                return FeasibilityVerdict::undecided(-s);
            };
            steps += 1;
            let decrement = -e.grad.dot(&dz);
            if decrement <= 1e-8 {
                break;
            }
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-12 {
                let cand = z + dz * alpha;
                if let Some(v) = barrier.eval(&cand, t, false) {
                    if v.value <= e.value - 0.25 * alpha * decrement {
                        z = cand;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
            // a strictly positive slack settles feasibility at once
            if z[9] > 0.0 {
                break;
            }
        }

        let (y, s) = split(&z);
        if s > 0.0 {
            return FeasibilityVerdict::feasible(SdpWitness { y, slack: s }, 0.0);
        }
        let gap = m / t;
        if s + gap < -tol {
            return FeasibilityVerdict::infeasible(-s);
        }
        if gap < tol {
            return if s >= -tol {
                FeasibilityVerdict::feasible(SdpWitness { y, slack: s }, -s)
            } else {
                FeasibilityVerdict::infeasible(-s)
            };
        }
        t *= 10.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::Decision;

    fn form(pairs: &[(usize, f64)], constant: f64) -> LinearForm {
        let mut coef = [0.0; 9];
        for &(j, v) in pairs {
            coef[j] = v;
        }
        LinearForm { coef, constant }
    }

    #[test]
    fn unconstrained_is_feasible() {
        let v = sdp_feasible(&SdpProblem::default(), SDP_TOL);
        assert!(v.is_feasible());
        let w = v.witness.unwrap();
        assert!(w.c_matrix().symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn contradictory_bounds() {
        // c11 <= 0.2 and c11 >= 0.5
        let p = SdpProblem {
            constraints: vec![form(&[(2, -1.0)], 0.2), form(&[(2, 1.0)], -0.5)],
        };
        assert_eq!(sdp_feasible(&p, SDP_TOL).decision, Decision::Infeasible);
    }

    #[test]
    fn psd_forces_infeasibility() {
        // c01 >= 2 with c11 <= 1 is impossible since c01^2 <= c00 c11
        let p = SdpProblem {
            constraints: vec![form(&[(0, 1.0)], -2.0), form(&[(2, -1.0)], 1.0)],
        };
        assert_eq!(sdp_feasible(&p, SDP_TOL).decision, Decision::Infeasible);
        // c01 >= 0.9 with c11 <= 1 is fine
        let p = SdpProblem {
            constraints: vec![form(&[(0, 1.0)], -0.9), form(&[(2, -1.0)], 1.0)],
        };
        let v = sdp_feasible(&p, SDP_TOL);
        assert!(v.is_feasible());
        let y = v.witness.unwrap().y;
        assert!(y[0] >= 0.9 - 1e-7 && y[2] <= 1.0 + 1e-7);
    }

    #[test]
    fn boundary_case_without_interior() {
        // c01 >= 1, c11 <= 1: only c01 = c11 = 1 remains, a rank-deficient block
        let p = SdpProblem {
            constraints: vec![form(&[(0, 1.0)], -1.0), form(&[(2, -1.0)], 1.0)],
        };
        let v = sdp_feasible(&p, SDP_TOL);
        assert!(v.is_feasible(), "{v:?}");
        assert!(v.witness.unwrap().slack >= -SDP_TOL);
    }

    #[test]
    fn hermitian_block_couples_offdiagonal() {
        // |q01|^2 <= q00 q11 with q00, q11 <= 1 rules out Im q01 >= 1.5
        let p = SdpProblem {
            constraints: vec![
                form(&[(5, -1.0)], 1.0),
                form(&[(6, -1.0)], 1.0),
                form(&[(8, 1.0)], -1.5),
            ],
        };
        assert_eq!(sdp_feasible(&p, SDP_TOL).decision, Decision::Infeasible);
        let p = SdpProblem {
            constraints: vec![
                form(&[(5, -1.0)], 1.0),
                form(&[(6, -1.0)], 1.0),
                form(&[(8, 1.0)], -0.7),
                form(&[(7, 1.0)], -0.6),
            ],
        };
        let v = sdp_feasible(&p, SDP_TOL);
        assert!(v.is_feasible());
        let q = v.witness.unwrap().q_matrix();
        assert!(q[(0, 1)].norm() <= 1.0 + 1e-7);
    }

    #[test]
    fn constant_forms_are_checked_directly() {
        let ok = SdpProblem {
            constraints: vec![form(&[], 0.0)],
        };
        assert!(sdp_feasible(&ok, SDP_TOL).is_feasible());
        let bad = SdpProblem {
            constraints: vec![form(&[], -1.0)],
        };
        assert_eq!(sdp_feasible(&bad, SDP_TOL).decision, Decision::Infeasible);
    }
}
