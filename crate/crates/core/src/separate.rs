//! Two-step Pareto point: proper power control, then pseudo-covariance
//! design with the powers frozen.
//!
//! The second step fixes `Ct_1` real and nonnegative (rates only depend on
//! the relative phase) and writes `Ct_2 = t e^{i theta}`. For a fixed
//! `theta` the rate constraints become two second-order cones in `(x, t)`.
//! The optimal `theta` lies in a finite candidate set: the two antiphase
//! angles, and the angles at which both cones are tight with one magnitude
//! pinned at its power.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conic::{
    bisect_sup, lp2_feasible, lp2_vertices, socp2_feasible, FeasibilityVerdict, LinearConstraint,
    Socp2Data, Socp2Witness,
};
use crate::par::{map_slice, Execution};
use crate::profile::{ParetoPoint, PointDiagnostics, RateProfile, SeparateDiagnostics};
use crate::rate::single_user_bound;
use crate::signal_model::{SisoIcInstance, SisoStrategy};
use crate::wrap_phase;

/// Gains below this magnitude are treated as absent.
const GAIN_EPS: f64 = 1e-12;
/// Points of the dense phase grid used for degenerate channels.
pub const FALLBACK_GRID: usize = 720;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparateOptions {
    /// Bisection tolerance in nats.
    pub tol: f64,
    pub exec: Execution,
}

impl Default for SeparateOptions {
    fn default() -> Self {
        SeparateOptions {
            tol: 1e-4,
            exec: Execution::default(),
        }
    }
}

// ---------------------------------------------------------------------------
// Proper step
// ---------------------------------------------------------------------------

/// Best profile-scaled rate with proper signaling and its powers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProperSolution {
    /// Largest feasible `r` found (nats).
    pub r_star: f64,
    /// Smallest infeasible `r` probed.
    pub r_upper: f64,
    pub powers: [f64; 2],
    pub iterations: usize,
}

impl ProperSolution {
    pub fn strategies(&self) -> [SisoStrategy; 2] {
        self.powers.map(SisoStrategy::proper)
    }

    pub fn to_point(&self, instance: &SisoIcInstance, profile: RateProfile) -> ParetoPoint {
        ParetoPoint::evaluate(instance, profile, self.strategies()).with_diagnostics(
            PointDiagnostics {
                separate: Some(SeparateDiagnostics {
                    r_proper: self.r_star,
                    theta: None,
                    candidates: 0,
                    bisection_steps: self.iterations,
                }),
                ..Default::default()
            },
        )
    }
}

/// Linear constraints `R_k >= alpha_k r` in the powers, for proper signaling.
///
/// `|h_kk|^2 C_k >= (sigma^2 + |h_kj|^2 C_j)(e^{alpha_k r} - 1)`.
pub fn proper_constraints(
    instance: &SisoIcInstance,
    profile: RateProfile,
    r: f64,
) -> [LinearConstraint; 2] {
    let n = instance.noise();
    let g = |k: usize| (profile.get(k) * r).exp_m1();
    let (g0, g1) = (g(0), g(1));
    [
        LinearConstraint::new(
            [-instance.gain_sq(0, 0), g0 * instance.gain_sq(0, 1)],
            -n * g0,
        ),
        LinearConstraint::new(
            [g1 * instance.gain_sq(1, 0), -instance.gain_sq(1, 1)],
            -n * g1,
        ),
    ]
}

fn proper_objective(instance: &SisoIcInstance, profile: RateProfile, powers: [f64; 2]) -> f64 {
    profile.objective(crate::siso_rates(
        instance,
        &powers.map(SisoStrategy::proper),
    ))
}

/// Bisection on `r` over LP feasibility of the proper power-control problem.
///
/// Among the vertices of the last feasible polygon the one with the best
/// profile-scaled rate is returned.
pub fn proper_pareto_point(
    instance: &SisoIcInstance,
    profile: RateProfile,
    tol: f64,
) -> ProperSolution {
    let bounds = instance.powers();
    let hi = single_user_bound(instance, profile.alpha());
    let res = bisect_sup(
        |r| lp2_feasible(&proper_constraints(instance, profile, r), bounds),
        0.0,
        hi,
        tol,
    );
    let verts = lp2_vertices(&proper_constraints(instance, profile, res.value), bounds);
    let powers = verts
        .into_iter()
        .map(|v| (proper_objective(instance, profile, v), v))
        .fold(None::<(f64, [f64; 2])>, |best, (o, v)| match best {
            Some((bo, _)) if bo >= o => best,
            _ => Some((o, v)),
        })
        .map(|(_, v)| v)
        .or(res.witness)
        .unwrap_or([0.0, 0.0]);
    ProperSolution {
        r_star: res.value,
        r_upper: res.upper,
        powers,
        iterations: res.iterations,
    }
}

// ---------------------------------------------------------------------------
// Pseudo-covariance step
// ---------------------------------------------------------------------------

/// Coefficients of the rate constraints with the powers frozen.
///
/// User `k`'s constraint reads `a_k |h_kk^2 X_k + h_kj^2 X_j|^2 + b_k <= w_k^2 |X_j|^2`
/// with `a_k = Cs^2 / (beta Cy^2 |h_kj|^4)` and `b_k = (1 - 1/beta) Cs^2 / |h_kj|^4`,
/// where `beta_k = max(1, e^{2 alpha_k R} Cs^2 / Cy^2)` and `w_k = 1`. When
/// `h_kj` vanishes the `|h_kj|^4` division is skipped and `w_k = |h_kj|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoCoeffs {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub beta: [f64; 2],
    pub w: [f64; 2],
    pub powers: [f64; 2],
    pub cy: [f64; 2],
    pub cs: [f64; 2],
    /// Some gain is below `1e-12`; the closed-form candidate formulas do not apply.
    pub degenerate: bool,
    pub target: f64,
}

pub fn pseudo_coeffs(
    instance: &SisoIcInstance,
    powers: [f64; 2],
    r: f64,
    profile: RateProfile,
) -> PseudoCoeffs {
    let stats = instance.received_stats(&powers.map(SisoStrategy::proper));
    let mut pc = PseudoCoeffs {
        a: [0.0; 2],
        b: [0.0; 2],
        beta: [1.0; 2],
        w: [1.0; 2],
        powers,
        cy: [stats[0].cy, stats[1].cy],
        cs: [stats[0].cs, stats[1].cs],
        degenerate: (0..2).any(|k| (0..2).any(|j| instance.gain(k, j).norm() < GAIN_EPS)),
        target: r,
    };
    for k in 0..2 {
        let (cy, cs) = (pc.cy[k], pc.cs[k]);
        // beta_k = e^{2 alpha_k (R - r_k)} with r_k user k's own proper profile rate
        let beta = ((2.0 * profile.get(k) * r).exp() * cs * cs / (cy * cy)).max(1.0);
        let cross = instance.gain_sq(k, 1 - k);
        let (div, w) = if cross.sqrt() >= GAIN_EPS {
            (cross * cross, 1.0)
        } else {
            (1.0, cross)
        };
        pc.beta[k] = beta;
        pc.a[k] = cs * cs / (beta * cy * cy * div);
        pc.b[k] = (1.0 - 1.0 / beta) * cs * cs / div;
        pc.w[k] = w;
    }
    pc
}

impl PseudoCoeffs {
    /// Cone data for a given relative phase.
    pub fn socp(&self, instance: &SisoIcInstance, theta: f64) -> Socp2Data {
        let g = instance.gains();
        Socp2Data {
            a: self.a,
            b: self.b,
            w: self.w,
            g: [
                [g[0][0] * g[0][0], g[0][1] * g[0][1]],
                [g[1][0] * g[1][0], g[1][1] * g[1][1]],
            ],
            theta,
            x_max: self.powers[0],
            t_max: self.powers[1],
        }
    }

    /// Signed residuals `lhs - rhs` of both constraints at `(Ct_1, Ct_2) = (x, t e^{i theta})`,
    /// relative to the largest term involved.
    pub fn equality_residuals(
        &self,
        instance: &SisoIcInstance,
        x: f64,
        t: f64,
        theta: f64,
    ) -> [f64; 2] {
        let x2 = Complex64::from_polar(t, theta);
        let own = [Complex64::new(x, 0.0), x2];
        let mut out = [0.0; 2];
        for k in 0..2 {
            let j = 1 - k;
            let hk = instance.gain(k, k);
            let hj = instance.gain(k, j);
            let l = hk * hk * own[k] + hj * hj * own[j];
            let lhs = self.a[k] * l.norm_sqr() + self.b[k];
            let rhs = self.w[k] * self.w[k] * own[j].norm_sqr();
            let scale = lhs
                .abs()
                .max(rhs)
                .max(self.a[k] * (hk.norm_sqr() * x.max(t)).powi(2))
                .max(1e-300);
            out[k] = (lhs - rhs) / scale;
        }
        out
    }
}

/// Which magnitude is pinned at its power while solving for the phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frozen {
    /// `|Ct_1| = C_1`, solve for `(theta, |Ct_2|)`.
    First,
    /// `|Ct_2| = C_2`, solve for `(theta, |Ct_1|)`.
    Second,
}

/// A phase at which both constraints are tight, with the free magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaRoot {
    pub theta: f64,
    pub companion: f64,
    /// Largest relative residual of the two equalities.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaCandidateSet {
    /// Phases that put each receiver's two pseudo-covariance terms in antiphase.
    pub closed_form: [f64; 2],
    pub theta_a: Vec<ThetaRoot>,
    pub theta_b: Vec<ThetaRoot>,
    /// Degenerate channel: probe the dense grid as well.
    pub fallback_grid: bool,
}

impl ThetaCandidateSet {
    /// All phases to probe, closed forms first, deduplicated modulo `2 pi`.
    pub fn angles(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        let extra = self.theta_a.iter().chain(&self.theta_b).map(|r| r.theta);
        let grid = (0..if self.fallback_grid { FALLBACK_GRID } else { 0 })
            .map(|i| -PI + TAU * (i + 1) as f64 / FALLBACK_GRID as f64);
        for th in self.closed_form.into_iter().chain(extra).chain(grid) {
            let th = wrap_phase(th);
            if !out.iter().any(|&o| crate::phase_distance(o, th) < 1e-9) {
                out.push(th);
            }
        }
        out
    }
}

/// Antiphase angles `pi + 2(phi_11 - phi_12)` and `pi + 2(phi_21 - phi_22)`.
pub fn antiphase_angles(instance: &SisoIcInstance) -> [f64; 2] {
    let p = |k, j| instance.phase(k, j);
    [
        wrap_phase(PI + 2.0 * (p(0, 0) - p(0, 1))),
        wrap_phase(PI + 2.0 * (p(1, 0) - p(1, 1))),
    ]
}

/// Solutions `(eta, u)` with `0 <= u <= u_max` of
/// `u cos(eta) + d1 u^2 + d2 = 0` and `u cos(eta + omega) + d3 u^2 + d4 = 0`.
///
/// Eliminating `eta` gives a quadratic in `z = u^2`; each admissible root
/// yields up to two `eta` branches. Branches introduced by the squaring are
/// not filtered here.
pub fn solve_phase_pair(d: [f64; 4], omega: f64, u_max: f64) -> Vec<(f64, f64)> {
    let [d1, d2, d3, d4] = d;
    let (cw, sw) = (omega.cos(), omega.sin());
    let e1 = d3 * d3 + d1 * d1 - 2.0 * d1 * d3 * cw;
    let e2 = 2.0 * (d1 * d2 + d3 * d4) - 2.0 * (d1 * d4 + d2 * d3) * cw - sw * sw;
    let e3 = d2 * d2 + d4 * d4 - 2.0 * d2 * d4 * cw;
    let dscale = d.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let escale = e1.abs().max(e2.abs()).max(e3.abs());

    let mut us: Vec<f64> = Vec::new();
    let push_z = |z: f64, us: &mut Vec<f64>| {
        let zmax = u_max * u_max;
        if z.is_finite() && z >= -1e-12 * zmax.max(1.0) && z <= zmax * (1.0 + 1e-9) {
            us.push(z.clamp(0.0, zmax).sqrt());
        }
    };
    if escale <= 1e-13 * dscale * dscale {
        // the two equations coincide: any u works, keep the extremes of cos(eta)
        for sign in [1.0, -1.0] {
            for u in real_quadratic_roots(d1, sign, d2) {
                if (0.0..=u_max).contains(&u) {
                    us.push(u);
                }
            }
        }
        us.push(u_max);
    } else if e1.abs() <= 1e-14 * escale {
        push_z(-e3 / e2, &mut us);
    } else {
        for z in real_quadratic_roots(e1, e2, e3) {
            push_z(z, &mut us);
        }
    }

    let mut out = Vec::new();
    for u in us {
        if u <= 1e-12 * u_max.max(1.0) {
            continue;
        }
        let arg = -(d1 * u * u + d2) / u;
        if arg.abs() > 1.0 + 1e-10 {
            continue;
        }
        let ac = arg.clamp(-1.0, 1.0).acos();
        for eta in [ac, TAU - ac] {
            out.push(polish(d, omega, eta, u));
        }
    }
    out
}

/// Real roots of `a z^2 + b z + c`, computed without cancellation.
fn real_quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b != 0.0 { vec![-c / b] } else { vec![] };
    }
    let mut disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        if disc < -1e-12 * b * b.max(4.0 * (a * c).abs()) {
            return vec![];
        }
        disc = 0.0;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

/// A few Newton steps on the undivided pair; keeps the start if they do not help.
fn polish(d: [f64; 4], omega: f64, eta: f64, u: f64) -> (f64, f64) {
    let [d1, d2, d3, d4] = d;
    let f = |eta: f64, u: f64| {
        [
            u * eta.cos() + d1 * u * u + d2,
            u * (eta + omega).cos() + d3 * u * u + d4,
        ]
    };
    let norm = |v: [f64; 2]| v[0].abs().max(v[1].abs());
    let (mut e, mut x) = (eta, u);
    let mut best = norm(f(e, x));
    for _ in 0..4 {
        let r = f(e, x);
        let j = [
            [-x * e.sin(), e.cos() + 2.0 * d1 * x],
            [-x * (e + omega).sin(), (e + omega).cos() + 2.0 * d3 * x],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let de = (r[0] * j[1][1] - r[1] * j[0][1]) / det;
        let dx = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        let (ne, nx) = (e - de, x - dx);
        let nr = norm(f(ne, nx));
        if !(nr < best) || nx < 0.0 {
            break;
        }
        (e, x, best) = (ne, nx, nr);
    }
    (e, x)
}

/// Phases where both constraints are tight with one magnitude pinned.
///
/// Pinning `|Ct_1| = C_1` uses `eta = theta + 2(phi_12 - phi_11)`; pinning
/// `|Ct_2| = C_2` is the same system with the users' roles exchanged, i.e.
/// `eta = theta + 2(phi_22 - phi_21)` and `omega -> -omega`.
pub fn solve_theta_system(
    pc: &PseudoCoeffs,
    instance: &SisoIcInstance,
    frozen: Frozen,
) -> Vec<ThetaRoot> {
    if pc.degenerate || pc.w != [1.0, 1.0] {
        return Vec::new();
    }
    let g2 = |k, j| instance.gain_sq(k, j);
    let ph = |k, j| instance.phase(k, j);
    let omega = 2.0 * (ph(1, 1) + ph(0, 0) - ph(0, 1) - ph(1, 0));
    let [a1, a2] = pc.a;
    let [b1, b2] = pc.b;
    // (pinned user p, free user q): p's equation in the free magnitude comes first
    let (p, q, pinned, u_max, om, shift) = match frozen {
        Frozen::First => (
            0,
            1,
            pc.powers[0],
            pc.powers[1],
            omega,
            2.0 * (ph(0, 1) - ph(0, 0)),
        ),
        Frozen::Second => (
            1,
            0,
            pc.powers[1],
            pc.powers[0],
            -omega,
            2.0 * (ph(1, 1) - ph(1, 0)),
        ),
    };
    if !(pinned > 0.0) || !(u_max > 0.0) {
        return Vec::new();
    }
    let (ap, bp, aq, bq) = if p == 0 {
        (a1, b1, a2, b2)
    } else {
        (a2, b2, a1, b1)
    };
    // p's constraint: free magnitude on the right-hand side
    let den_p = 2.0 * ap * g2(p, p) * g2(p, q) * pinned;
    let d1 = (ap * g2(p, q).powi(2) - 1.0) / den_p;
    let d2 = (ap * g2(p, p).powi(2) * pinned * pinned + bp) / den_p;
    // q's constraint: pinned magnitude on the right-hand side
    let d3 = g2(q, q) / (2.0 * g2(q, p) * pinned);
    let d4 = ((aq * g2(q, p).powi(2) - 1.0) * pinned * pinned + bq)
        / (2.0 * aq * g2(q, p) * g2(q, q) * pinned);
    let d = [d1, d2, d3, d4];
    if d.iter().any(|v| !v.is_finite()) {
        return Vec::new();
    }

    let mut out: Vec<ThetaRoot> = Vec::new();
    for (eta, u) in solve_phase_pair(d, om, u_max) {
        let theta = wrap_phase(eta - shift);
        let (x, t) = if p == 0 { (pinned, u) } else { (u, pinned) };
        let res = pc.equality_residuals(instance, x, t, theta);
        let residual = res[0].abs().max(res[1].abs());
        if residual < 1e-8
            && !out
                .iter()
                .any(|r| crate::phase_distance(r.theta, theta) < 1e-9)
        {
            out.push(ThetaRoot {
                theta,
                companion: u,
                residual,
            });
        }
    }
    out
}

pub fn theta_candidates(pc: &PseudoCoeffs, instance: &SisoIcInstance) -> ThetaCandidateSet {
    ThetaCandidateSet {
        closed_form: antiphase_angles(instance),
        theta_a: solve_theta_system(pc, instance, Frozen::First),
        theta_b: solve_theta_system(pc, instance, Frozen::Second),
        fallback_grid: pc.degenerate,
    }
}

/// Feasibility of target `r` with the powers frozen: some probed phase must
/// admit a point in both cones.
pub fn pseudo_feasible(
    instance: &SisoIcInstance,
    profile: RateProfile,
    powers: [f64; 2],
    r: f64,
    exec: Execution,
) -> FeasibilityVerdict<(f64, Socp2Witness)> {
    let pc = pseudo_coeffs(instance, powers, r, profile);
    let angles = theta_candidates(&pc, instance).angles();
    probe_angles(&pc, instance, &angles, exec, false)
}

/// Same decision as [`pseudo_feasible`], probing `n` evenly spaced phases
/// instead of the candidate set.
pub fn pseudo_feasible_on_grid(
    instance: &SisoIcInstance,
    profile: RateProfile,
    powers: [f64; 2],
    r: f64,
    n: usize,
    exec: Execution,
) -> FeasibilityVerdict<(f64, Socp2Witness)> {
    let pc = pseudo_coeffs(instance, powers, r, profile);
    let angles: Vec<f64> = (1..=n).map(|i| -PI + TAU * i as f64 / n as f64).collect();
    probe_angles(&pc, instance, &angles, exec, false)
}

/// Probes `angles` in order. Returns the first feasible one, or with
/// `best_slack` the feasible one with the smallest residual.
fn probe_angles(
    pc: &PseudoCoeffs,
    instance: &SisoIcInstance,
    angles: &[f64],
    exec: Execution,
    best_slack: bool,
) -> FeasibilityVerdict<(f64, Socp2Witness)> {
    let solve = |th: &f64| socp2_feasible(&pc.socp(instance, *th));
    let verdicts: Vec<FeasibilityVerdict<Socp2Witness>> = match exec {
        Execution::Sequential if !best_slack => {
            let mut v = Vec::new();
            for th in angles {
                let r = solve(th);
                let done = r.is_feasible();
                v.push(r);
                if done {
                    break;
                }
            }
            v
        }
        _ => map_slice(exec, angles, solve),
    };
    let mut pick: Option<(f64, Socp2Witness)> = None;
    let mut least = f64::INFINITY;
    for (th, v) in angles.iter().zip(verdicts) {
        match v.witness {
            Some(w) if v.is_feasible() => {
                let better = pick.map_or(true, |(_, p)| w.residual < p.residual);
                if better {
                    pick = Some((*th, w));
                }
                if !best_slack {
                    break;
                }
            }
            _ => least = least.min(v.max_violation),
        }
    }
    match pick {
        Some(p) => FeasibilityVerdict::feasible(p, p.1.residual.max(0.0)),
        None => FeasibilityVerdict::infeasible(least),
    }
}

/// Pareto point of the two-step method: proper power control followed by
/// pseudo-covariance optimization. Never worse than the proper point.
pub fn improper_pareto_point(
    instance: &SisoIcInstance,
    profile: RateProfile,
    opts: &SeparateOptions,
) -> ParetoPoint {
    let proper = proper_pareto_point(instance, profile, opts.tol);
    let powers = proper.powers;
    let r_star = proper.r_star;
    let hi = single_user_bound(instance, profile.alpha()).max(r_star);

    let res = bisect_sup(
        |r| pseudo_feasible(instance, profile, powers, r, opts.exec),
        r_star,
        hi,
        opts.tol,
    );
    let proper_point = proper.to_point(instance, profile);
    if res.value <= r_star {
        return proper_point;
    }

    let pc = pseudo_coeffs(instance, powers, res.value, profile);
    let cands = theta_candidates(&pc, instance);
    let angles = cands.angles();
    let chosen = probe_angles(&pc, instance, &angles, opts.exec, true)
        .witness
        .or(res.witness);
    let Some((theta, w)) = chosen else {
        return proper_point;
    };
    let strategies = [
        SisoStrategy::new(powers[0], Complex64::new(w.x, 0.0)),
        SisoStrategy::new(powers[1], Complex64::from_polar(w.t, theta)),
    ];
    let point =
        ParetoPoint::evaluate(instance, profile, strategies).with_diagnostics(PointDiagnostics {
            separate: Some(SeparateDiagnostics {
                r_proper: r_star,
                theta: Some(theta),
                candidates: angles.len(),
                bisection_steps: proper.iterations + res.iterations,
            }),
            ..Default::default()
        });
    if point.objective > proper_point.objective {
        point
    } else {
        proper_point
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::stream_rng;
    use crate::{bits_to_nats, nats_to_bits};
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn table_channel() -> SisoIcInstance {
        SisoIcInstance::new(
            [
                [c(2.7388, -0.2498), c(0.9956, 1.8047)],
                [c(0.6680, -1.6470), c(0.4760, 1.2706)],
            ],
            1.0,
            [10.0, 10.0],
        )
        .unwrap()
    }

    fn random_channel(rng: &mut impl Rng, p: f64) -> SisoIcInstance {
        let mut g = || {
            let (re, im): (f64, f64) = (
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            );
            c(re, im) * std::f64::consts::FRAC_1_SQRT_2
        };
        SisoIcInstance::new([[g(), g()], [g(), g()]], 1.0, [p, p]).unwrap()
    }

    #[test]
    fn proper_without_interference_is_closed_form() {
        let z = c(0.0, 0.0);
        let inst =
            SisoIcInstance::new([[c(1.0, 0.5), z], [z, c(-0.3, 0.8)]], 1.0, [4.0, 4.0]).unwrap();
        let prof = RateProfile::new(0.3, 0.7).unwrap();
        let want = (0..2)
            .map(|k| (inst.gain_sq(k, k) * 4.0).ln_1p() / prof.get(k))
            .fold(f64::INFINITY, f64::min);
        let sol = proper_pareto_point(&inst, prof, 1e-6);
        assert!((sol.r_star - want).abs() < 2e-6, "{} vs {want}", sol.r_star);
    }

    #[test]
    fn proper_zero_direct_gains() {
        let z = c(0.0, 0.0);
        let inst =
            SisoIcInstance::new([[z, c(1.0, 0.0)], [c(1.0, 0.0), z]], 1.0, [4.0, 4.0]).unwrap();
        let sol = proper_pareto_point(&inst, RateProfile::symmetric(), 1e-4);
        assert_eq!(sol.r_star, 0.0);
    }

    #[test]
    fn proper_symmetric_channel_equal_powers() {
        let inst = SisoIcInstance::new(
            [[c(1.0, 0.2), c(0.4, -0.5)], [c(0.5, 0.4), c(-0.2, 1.0)]],
            1.0,
            [5.0, 5.0],
        )
        .unwrap();
        let sol = proper_pareto_point(&inst, RateProfile::symmetric(), 1e-6);
        assert!(
            (sol.powers[0] - sol.powers[1]).abs() < 1e-6,
            "{:?}",
            sol.powers
        );
        let rates = crate::siso_rates(&inst, &sol.strategies());
        for k in 0..2 {
            assert!(rates[k] >= 0.5 * sol.r_star - 1e-6);
        }
    }

    #[test]
    fn pseudo_coeffs_at_boundary() {
        let inst = table_channel();
        let prof = RateProfile::new(0.6130, 0.3870).unwrap();
        let sol = proper_pareto_point(&inst, prof, 1e-8);
        let pc = pseudo_coeffs(&inst, sol.powers, sol.r_star, prof);
        for k in 0..2 {
            assert!((pc.beta[k] - 1.0).abs() < 1e-6, "{:?}", pc.beta);
            assert!(pc.b[k] < 1e-5 * pc.cs[k] * pc.cs[k]);
        }
        let hi = pseudo_coeffs(&inst, sol.powers, sol.r_star + 0.1, prof);
        let higher = pseudo_coeffs(&inst, sol.powers, sol.r_star + 0.2, prof);
        for k in 0..2 {
            assert!(higher.beta[k] > hi.beta[k] && hi.beta[k] > 1.0);
        }
    }

    /// Substituting a point back into the coefficient form reproduces the
    /// rate constraint `R_k = alpha_k R` exactly when it is tight.
    #[test]
    fn pseudo_coeffs_reproduce_rate_constraint() {
        let mut rng = stream_rng(3, 0);
        for _ in 0..100 {
            let inst = random_channel(&mut rng, 3.0);
            let prof = RateProfile::from_first(rng.random_range(0.2..0.8)).unwrap();
            let powers = [rng.random_range(0.5..3.0), rng.random_range(0.5..3.0)];
            let s = [
                SisoStrategy::new(powers[0], c(rng.random_range(0.0..powers[0]), 0.0)),
                SisoStrategy::polar(
                    powers[1],
                    rng.random_range(0.0..powers[1]),
                    rng.random_range(-PI..PI),
                ),
            ];
            let rates = crate::siso_rates(&inst, &s);
            // the target that makes user k's constraint tight
            for k in 0..2 {
                let r = rates[k] / prof.get(k);
                let pc = pseudo_coeffs(&inst, powers, r, prof);
                if pc.beta[k] <= 1.0 {
                    continue;
                }
                let res = pc.equality_residuals(
                    &inst,
                    s[0].pseudo.re,
                    s[1].pseudo.norm(),
                    s[1].pseudo.arg(),
                );
                assert!(res[k].abs() < 1e-10, "{res:?}");
            }
        }
    }

    #[test]
    fn antiphase_minimizes_first_receiver_pseudo() {
        let inst = table_channel();
        let th = antiphase_angles(&inst)[0];
        let h11 = inst.gain(0, 0);
        let h12 = inst.gain(0, 1);
        let a = h11 * h11 * 3.0;
        let b = h12 * h12 * Complex64::from_polar(2.0, th);
        assert!(crate::phase_distance(a.arg(), b.arg()) > PI - 1e-12);
    }

    /// Plant a solution `(eta0, u0)` by choosing `d2`, `d4`, then recover it.
    #[test]
    fn planted_roots_are_recovered() {
        let mut rng = stream_rng(8, 0);
        for _ in 0..200 {
            let d1 = rng.random_range(-1.0..1.0);
            let d3 = rng.random_range(0.1..2.0);
            let omega = rng.random_range(-PI..PI);
            let eta0 = rng.random_range(0.0..TAU);
            let u0 = rng.random_range(0.2..3.0);
            let d2 = -u0 * eta0.cos() - d1 * u0 * u0;
            let d4 = -u0 * (eta0 + omega).cos() - d3 * u0 * u0;
            let sols = solve_phase_pair([d1, d2, d3, d4], omega, 3.0);
            let hit = sols
                .iter()
                .any(|&(e, u)| crate::phase_distance(e, eta0) < 1e-8 && (u - u0).abs() < 1e-8);
            assert!(hit, "eta0 {eta0} u0 {u0} sols {sols:?}");
        }
    }

    #[test]
    fn coincident_equations() {
        let sols = solve_phase_pair([0.2, 0.5, 0.2, 0.5], 0.0, 2.0);
        assert!(!sols.is_empty());
        for (e, u) in sols {
            assert!((u * e.cos() + 0.2 * u * u + 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn no_real_roots() {
        // e2^2 < 4 e1 e3 and the coincident test fails
        let sols = solve_phase_pair([0.0, 5.0, 0.0, 5.0], 1.0, 1.0);
        assert!(sols.is_empty());
    }

    #[test]
    fn emitted_roots_satisfy_equalities() {
        let mut rng = stream_rng(21, 0);
        let mut seen = 0;
        for _ in 0..200 {
            let inst = random_channel(&mut rng, 10.0);
            let prof = RateProfile::from_first(rng.random_range(0.2..0.8)).unwrap();
            let sol = proper_pareto_point(&inst, prof, 1e-4);
            let r = sol.r_star + rng.random_range(0.0..0.5);
            let pc = pseudo_coeffs(&inst, sol.powers, r, prof);
            let set = theta_candidates(&pc, &inst);
            assert!(set.angles().len() <= 2 + 8 + 8);
            for (root, frozen) in set
                .theta_a
                .iter()
                .map(|r| (r, Frozen::First))
                .chain(set.theta_b.iter().map(|r| (r, Frozen::Second)))
            {
                let (x, t) = match frozen {
                    Frozen::First => (sol.powers[0], root.companion),
                    Frozen::Second => (root.companion, sol.powers[1]),
                };
                let res = pc.equality_residuals(&inst, x, t, root.theta);
                assert!(res[0].abs() < 1e-8 && res[1].abs() < 1e-8);
                seen += 1;
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn no_interference_stays_proper() {
        let z = c(0.0, 0.0);
        let inst =
            SisoIcInstance::new([[c(1.0, 0.5), z], [z, c(-0.3, 0.8)]], 1.0, [4.0, 4.0]).unwrap();
        let prof = RateProfile::symmetric();
        let p = improper_pareto_point(&inst, prof, &SeparateOptions::default());
        let sol = proper_pareto_point(&inst, prof, 1e-4);
        assert!((p.objective - sol.to_point(&inst, prof).objective).abs() < 1e-12);
        assert!(p.strategies.iter().all(|s| s.pseudo.norm() == 0.0));
    }

    #[test]
    fn table_channel_separate_sum() {
        let inst = table_channel();
        let prof = RateProfile::new(0.6130, 0.3870).unwrap();
        let p = improper_pareto_point(&inst, prof, &SeparateOptions::default());
        let sum = nats_to_bits(p.sum_rate());
        eprintln!(
            "separate: sum {sum} rates {:?} strategies {:?}",
            p.rates_bits(),
            p.strategies
        );
        assert!(p.strategies.iter().all(|s| s.validate(10.0).is_valid()));
        assert!(p.objective >= p.diagnostics.separate.as_ref().unwrap().r_proper - 1e-9);
        assert!(bits_to_nats(sum) > 0.0);
    }

    #[test]
    fn improvement_guarantee_and_profile() {
        let mut rng = stream_rng(5, 0);
        for _ in 0..30 {
            let inst = random_channel(&mut rng, 1.0);
            let prof = RateProfile::symmetric();
            let opts = SeparateOptions {
                exec: Execution::Sequential,
                ..Default::default()
            };
            let p = improper_pareto_point(&inst, prof, &opts);
            let d = p.diagnostics.separate.as_ref().unwrap();
            assert!(p.objective >= d.r_proper - 1e-9);
            for k in 0..2 {
                assert!(p.rates[k] >= prof.get(k) * p.objective - 1e-6);
                assert!(p.strategies[k].validate(1.0).is_valid());
            }
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let inst = table_channel();
        let prof = RateProfile::symmetric();
        let a = improper_pareto_point(
            &inst,
            prof,
            &SeparateOptions {
                exec: Execution::Sequential,
                ..Default::default()
            },
        );
        let b = improper_pareto_point(&inst, prof, &SeparateOptions::default());
        assert_eq!(a, b);
    }
}
