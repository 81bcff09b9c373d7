//! Joint covariance and pseudo-covariance design by semidefinite relaxation.
//!
//! With `c = (C_1, C_2)` and `q = (Ct_1, Ct_2)`, every received statistic is
//! affine in `(c, q)`: `Cy_k = sigma^2 + a_k . c`, `Cty_k = f_k^H q`, and
//! likewise `Cs_k`, `Cts_k` with `b_k`, `g_k`. Squaring and homogenizing with
//! `[1; c][1; c]^T -> C` and `q q^H -> Q` turns each rate constraint into a
//! linear inequality in `(C, Q)`. Dropping the rank-one requirement leaves an
//! SDP whose optimum bounds the true problem from above; Gaussian
//! randomization around the relaxed solution recovers feasible strategies.

use nalgebra::{DMatrix, Matrix2, Matrix3, Vector2, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::conic::{bisect_sup, sdp_feasible, LinearForm, SdpProblem, SdpWitness, SDP_TOL};
use crate::par::{argmax_range, stream_rng, Execution};
use crate::profile::{ParetoPoint, PointDiagnostics, RateProfile, SdrDiagnostics};
use crate::signal_model::{SisoIcInstance, SisoStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointOptions {
    /// Randomization trials, including the principal-component trial.
    pub trials: usize,
    pub seed: u64,
    /// Bisection tolerance in nats.
    pub tol: f64,
    pub exec: Execution,
    /// Adds `C_kk <= P_k C_{1,k+1}` to the relaxation. Redundant for
    /// rank-one `C` since `0 <= c_k <= P_k`; off gives the plain lifting.
    #[serde(default = "default_product_cuts")]
    pub product_cuts: bool,
}

fn default_product_cuts() -> bool {
    true
}

impl Default for JointOptions {
    fn default() -> Self {
        JointOptions {
            trials: 1000,
            seed: 0,
            tol: 1e-4,
            exec: Execution::default(),
            product_cuts: true,
        }
    }
}

/// Vectorized and lifted problem data for one instance and profile.
#[derive(Debug, Clone, PartialEq)]
pub struct SdrData {
    /// `a_k = (|h_k1|^2, |h_k2|^2)`.
    pub a: [Vector2<f64>; 2],
    /// `a_k` with the own-signal entry zeroed.
    pub b: [Vector2<f64>; 2],
    /// `f_k = conj(h_k1^2, h_k2^2)`, so that `Cty_k = f_k^H q`.
    pub f: [Vector2<Complex64>; 2],
    pub g: [Vector2<Complex64>; 2],
    /// `[sigma^2; a_k][sigma^2; a_k]^T`.
    pub big_a: [Matrix3<f64>; 2],
    pub big_b: [Matrix3<f64>; 2],
    pub big_f: [Matrix2<Complex64>; 2],
    pub big_g: [Matrix2<Complex64>; 2],
    pub profile: RateProfile,
    pub power: [f64; 2],
    pub noise: f64,
    /// See [`JointOptions::product_cuts`].
    pub product_cuts: bool,
}

/// Selector of `C_{k+1,k+1}` (the squared power of user `k`).
pub fn power_selector(k: usize) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    m[(k + 1, k + 1)] = 1.0;
    m
}

/// Symmetric selector with `Tr(K_k C) = C_{1,k+1}`.
pub fn cross_selector(k: usize) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    m[(0, k + 1)] = 0.5;
    m[(k + 1, 0)] = 0.5;
    m
}

/// Selector of `Q_kk`.
pub fn pseudo_selector(k: usize) -> Matrix2<Complex64> {
    let mut m = Matrix2::zeros();
    m[(k, k)] = Complex64::new(1.0, 0.0);
    m
}

pub fn build_sdr(instance: &SisoIcInstance, profile: RateProfile) -> SdrData {
    let n = instance.noise();
    let h = instance.gains();
    let sq = |z: Complex64| z * z;
    let a = [0, 1].map(|k| Vector2::new(h[k][0].norm_sqr(), h[k][1].norm_sqr()));
    let b = [0, 1].map(|k| {
        let mut v = a[k];
        v[k] = 0.0;
        v
    });
    let f = [0, 1].map(|k| Vector2::new(sq(h[k][0]).conj(), sq(h[k][1]).conj()));
    let g = [0, 1].map(|k| {
        let mut v = f[k];
        v[k] = Complex64::new(0.0, 0.0);
        v
    });
    let lift = |v: Vector2<f64>| {
        let x = Vector3::new(n, v[0], v[1]);
        x * x.transpose()
    };
    SdrData {
        big_a: a.map(lift),
        big_b: b.map(lift),
        big_f: f.map(|v| v * v.adjoint()),
        big_g: g.map(|v| v * v.adjoint()),
        a,
        b,
        f,
        g,
        profile,
        power: instance.powers(),
        noise: n,
        product_cuts: true,
    }
}

impl SdrData {
    /// Scale of user `k`'s power axis in the solver's normalized unknowns.
    fn axis(&self, k: usize) -> f64 {
        if self.power[k] > 0.0 {
            self.power[k]
        } else {
            1.0
        }
    }

    /// `Tr(W C) - Tr(V Q) + kappa >= 0` in the solver's packed unknowns,
    /// where `C = D Cn D`, `D = diag(1, p1, p2)` and `Q = diag(p) Qn diag(p)`.
    fn form(&self, w: &Matrix3<f64>, v: &Matrix2<Complex64>, kappa: f64) -> LinearForm {
        let (p1, p2) = (self.axis(0), self.axis(1));
        let s = 1.0 / (self.noise * self.noise);
        let coef = [
            2.0 * w[(0, 1)] * p1,
            2.0 * w[(0, 2)] * p2,
            w[(1, 1)] * p1 * p1,
            2.0 * w[(1, 2)] * p1 * p2,
            w[(2, 2)] * p2 * p2,
            -v[(0, 0)].re * p1 * p1,
            -v[(1, 1)].re * p2 * p2,
            -2.0 * v[(1, 0)].re * p1 * p2,
            2.0 * v[(1, 0)].im * p1 * p2,
        ]
        .map(|c| c * s);
        LinearForm {
            coef,
            constant: (w[(0, 0)] + kappa) * s,
        }
    }

    /// The relaxed feasibility problem at target `r` (nats).
    pub fn problem(&self, r: f64) -> SdpProblem {
        let zero2 = Matrix2::zeros();
        let sigma4 = self.noise * self.noise;
        let mut constraints = Vec::with_capacity(14);
        for k in 0..2 {
            let e = (2.0 * self.profile.get(k) * r).exp();
            constraints.push(self.form(&-power_selector(k), &zero2, self.power[k] * self.power[k]));
            constraints.push(self.form(&cross_selector(k), &zero2, 0.0));
            if self.product_cuts {
                let w = cross_selector(k) * self.power[k] - power_selector(k);
                constraints.push(self.form(&w, &zero2, 0.0));
            }
            constraints.push(self.form(&power_selector(k), &pseudo_selector(k), 0.0));
            constraints.push(self.form(&self.big_a[k], &self.big_f[k], -sigma4));
            constraints.push(self.form(&self.big_b[k], &self.big_g[k], -sigma4));
            constraints.push(self.form(
                &(self.big_a[k] - self.big_b[k] * e),
                &(self.big_f[k] - self.big_g[k] * Complex64::new(e, 0.0)),
                0.0,
            ));
        }
        SdpProblem { constraints }
    }

    /// Unscaled `(C, Q)` of a solver witness.
    pub fn unscale(&self, w: &SdpWitness) -> (Matrix3<f64>, Matrix2<Complex64>) {
        let d = Matrix3::from_diagonal(&Vector3::new(1.0, self.axis(0), self.axis(1)));
        let dq = Matrix2::from_diagonal(&Vector2::new(
            Complex64::new(self.axis(0), 0.0),
            Complex64::new(self.axis(1), 0.0),
        ));
        (d * w.c_matrix() * d, dq * w.q_matrix() * dq)
    }

    /// `r` above which the relaxation is provably infeasible:
    /// `min_k (1/alpha_k) ln(1 + sum_j |h_kj|^2 P_j / sigma^2)`.
    pub fn upper_bound(&self) -> f64 {
        (0..2)
            .map(|k| {
                (self.a[k].dot(&Vector2::new(self.power[0], self.power[1])) / self.noise).ln_1p()
                    / self.profile.get(k)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Relaxed optimum and the matrices at the last feasible probe.
#[derive(Debug, Clone, PartialEq)]
pub struct SdrSolution {
    pub r_lower: f64,
    /// Smallest probe found infeasible; bounds the relaxation from above.
    pub r_upper: f64,
    pub c: Matrix3<f64>,
    pub q: Matrix2<Complex64>,
    pub iterations: usize,
    pub undecided: usize,
}

pub fn solve_sdr(sdr: &SdrData, tol: f64) -> SdrSolution {
    let trivial = || {
        let mut c = Matrix3::zeros();
        c[(0, 0)] = 1.0;
        SdrSolution {
            r_lower: 0.0,
            r_upper: 0.0,
            c,
            q: Matrix2::zeros(),
            iterations: 0,
            undecided: 0,
        }
    };
    if sdr.power.iter().any(|&p| !(p > 0.0)) {
        return trivial();
    }
    let hi = sdr.upper_bound();
    let res = bisect_sup(|r| sdp_feasible(&sdr.problem(r), SDP_TOL), 0.0, hi, tol);
    let undecided = res.undecided();
    let Some(w) = res.witness else {
        log::warn!("relaxation infeasible at zero target");
        return trivial();
    };
    let (c, q) = sdr.unscale(&w);
    SdrSolution {
        r_lower: res.value,
        r_upper: res.upper,
        c,
        q,
        iterations: res.iterations,
        undecided,
    }
}

/// Second-largest eigenvalue at most `tol` times the largest.
pub fn is_rank1(m: &DMatrix<Complex64>, tol: f64) -> bool {
    let mut e: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(|a, b| b.total_cmp(a));
    e.len() < 2 || e[1] <= tol * e[0].max(0.0)
}

fn real_to_dmatrix(m: &Matrix3<f64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(3, 3, |i, j| Complex64::new(m[(i, j)], 0.0))
}

fn herm_to_dmatrix(m: &Matrix2<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(2, 2, |i, j| m[(i, j)])
}

/// Factors `F` with `F F^H = M` for PSD `M` (negative eigenvalues dropped),
/// columns sorted by decreasing eigenvalue.
fn psd_factor(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    let herm = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    DMatrix::from_fn(n, n, |i, j| {
        let col = order[j];
        eig.eigenvectors[(i, col)] * eig.eigenvalues[col].max(0.0).sqrt()
    })
}

/// Projects a candidate onto the power box and the validity cone.
fn project(c: [f64; 2], q: [Complex64; 2], power: [f64; 2]) -> [SisoStrategy; 2] {
    [0, 1].map(|k| {
        let ck = c[k].clamp(0.0, power[k]);
        let m = q[k].norm();
        let eta = if m > ck { ck / m } else { 1.0 };
        SisoStrategy::new(ck, q[k] * eta)
    })
}

/// Draws candidate strategies around the relaxed solution and keeps the one
/// with the best profile-scaled rate. Trial `0` is the principal component.
pub fn randomize(
    instance: &SisoIcInstance,
    sol: &SdrSolution,
    profile: RateProfile,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> (usize, [SisoStrategy; 2], f64) {
    let power = instance.powers();
    let fc = psd_factor(real_to_dmatrix(&sol.c)).map(|z| z.re);
    let fq = psd_factor(herm_to_dmatrix(&sol.q));

    let candidate = |l: usize| -> Option<[SisoStrategy; 2]> {
        let (x, beta) = if l == 0 {
            (
                Vector3::new(fc[(0, 0)], fc[(1, 0)], fc[(2, 0)]),
                Vector2::new(fq[(0, 0)], fq[(1, 0)]),
            )
        } else {
            let mut rng = stream_rng(seed, l as u64);
            let mut draw = || -> Option<Vector3<f64>> {
                for _ in 0..64 {
                    let z = Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
                    let x = Vector3::from_fn(|i, _| (0..3).map(|j| fc[(i, j)] * z[j]).sum::<f64>());
                    if x[0].abs() >= 1e-12 {
                        return Some(x);
                    }
                    log::debug!("trial {l}: homogenizing coordinate near zero, redrawn");
                }
                None
            };
            let x = draw()?;
            let w = Vector2::from_fn(|_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            });
            let beta = Vector2::from_fn(|i, _| fq[(i, 0)] * w[0] + fq[(i, 1)] * w[1]);
            (x, beta)
        };
        if x[0].abs() < 1e-12 {
            return None;
        }
        let t = x[0];
        let c = [x[1] / t, x[2] / t];
        let q = [beta[0] / t, beta[1] / t];
        Some(project(c, q, power))
    };
    let score = |l: usize| match candidate(l) {
        Some(s) => profile.objective(crate::siso_rates(instance, &s)),
        None => f64::NAN,
    };
    match argmax_range(exec, trials.max(1), score) {
        Some((l, v)) => (l, candidate(l).expect("winning trial is valid"), v),
        None => {
            let s = [SisoStrategy::default(); 2];
            (0, s, 0.0)
        }
    }
}

/// Pareto point of the relaxation-plus-randomization method.
pub fn joint_pareto_point(
    instance: &SisoIcInstance,
    profile: RateProfile,
    opts: &JointOptions,
) -> ParetoPoint {
    let sdr = SdrData {
        product_cuts: opts.product_cuts,
        ..build_sdr(instance, profile)
    };
    let sol = solve_sdr(&sdr, opts.tol);
    let (best, strategies, _) =
        randomize(instance, &sol, profile, opts.trials, opts.seed, opts.exec);
    let rank_one =
        is_rank1(&real_to_dmatrix(&sol.c), 1e-6) && is_rank1(&herm_to_dmatrix(&sol.q), 1e-6);
    ParetoPoint::evaluate(instance, profile, strategies).with_diagnostics(PointDiagnostics {
        sdr: Some(SdrDiagnostics {
            r_sdr_lower: sol.r_lower,
            r_sdr_upper: sol.r_upper,
            rank_one,
            trials: opts.trials.max(1),
            seed: opts.seed,
            best_trial: best,
            bisection_steps: sol.iterations,
            undecided: sol.undecided,
        }),
        ..Default::default()
    })
}
