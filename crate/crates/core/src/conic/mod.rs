//! Fixed-shape feasibility solvers and the bisection driver built on them.

mod bisect;
mod lp2;
mod sdp;
mod socp2;

pub use bisect::{bisect_sup, BisectionResult};
pub use lp2::{lp2_feasible, lp2_vertices, LinearConstraint};
pub use sdp::{
    sdp_feasible, LinearForm, SdpProblem, SdpWitness, BOX as SDP_BOX, SDP_ITERATION_CAP, SDP_TOL,
};
pub use socp2::{socp2_feasible, socp2_residual, Socp2Data, Socp2Witness, SOCP_TOL};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Feasible,
    Infeasible,
    /// The solver hit its iteration cap before deciding.
    Undecided,
}

/// Outcome of one feasibility probe.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityVerdict<W> {
    pub decision: Decision,
    /// Present iff `decision` is `Feasible`.
    pub witness: Option<W>,
    /// Worst constraint residual at the witness, or at the best point found
    /// when infeasible. Positive means violated.
    pub max_violation: f64,
}

impl<W> FeasibilityVerdict<W> {
    pub fn feasible(witness: W, max_violation: f64) -> Self {
        FeasibilityVerdict {
            decision: Decision::Feasible,
            witness: Some(witness),
            max_violation,
        }
    }

    pub fn infeasible(max_violation: f64) -> Self {
        FeasibilityVerdict {
            decision: Decision::Infeasible,
            witness: None,
            max_violation,
        }
    }

    pub fn undecided(max_violation: f64) -> Self {
        FeasibilityVerdict {
            decision: Decision::Undecided,
            witness: None,
            max_violation,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.decision == Decision::Feasible
    }
}
