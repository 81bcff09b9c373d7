use super::{Decision, FeasibilityVerdict};

/// Result of a bisection for the largest feasible target.
#[derive(Debug, Clone, PartialEq)]
pub struct BisectionResult<W> {
    /// Largest probe found feasible; equals the starting `lo` if only that passed.
    pub value: f64,
    /// Smallest probe found infeasible (or undecided); `value` when `hi` was feasible.
    pub upper: f64,
    /// Witness of the probe at `value`; `None` iff `lo` itself was infeasible.
    pub witness: Option<W>,
    pub iterations: usize,
    /// Every probe in order, with its decision.
    pub history: Vec<(f64, Decision)>,
}

impl<W> BisectionResult<W> {
    pub fn is_empty(&self) -> bool {
        self.witness.is_none()
    }

    /// Probes that came back undecided.
    pub fn undecided(&self) -> usize {
        self.history
            .iter()
            .filter(|(_, d)| *d == Decision::Undecided)
            .count()
    }
}

/// Largest `r` in `[lo, hi]` with `oracle(r)` feasible, to within `tol`.
///
/// The feasible set must be an interval starting at `lo`. Undecided probes
/// count as infeasible.
pub fn bisect_sup<W, F>(mut oracle: F, lo: f64, hi: f64, tol: f64) -> BisectionResult<W>
where
    F: FnMut(f64) -> FeasibilityVerdict<W>,
{
    assert!(hi >= lo && tol > 0.0, "bad bracket [{lo}, {hi}] tol {tol}");
    let mut history = Vec::new();
    let mut probe = |r: f64, history: &mut Vec<(f64, Decision)>| {
        let v = oracle(r);
        history.push((r, v.decision));
        if v.decision == Decision::Undecided {
            log::warn!("feasibility probe at {r} undecided, treated as infeasible");
        }
        v
    };

    let first = probe(lo, &mut history);
    let Some(mut witness) = first
        .witness
        .filter(|_| first.decision == Decision::Feasible)
    else {
        return BisectionResult {
            value: lo,
            upper: lo,
            witness: None,
            iterations: 1,
            history,
        };
    };
    if hi == lo {
        return BisectionResult {
            value: lo,
            upper: lo,
            witness: Some(witness),
            iterations: 1,
            history,
        };
    }
    let top = probe(hi, &mut history);
    if let (Decision::Feasible, Some(w)) = (top.decision, top.witness) {
        return BisectionResult {
            value: hi,
            upper: hi,
            witness: Some(w),
            iterations: 2,
            history,
        };
    }

    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let v = probe(mid, &mut history);
        match (v.decision, v.witness) {
            (Decision::Feasible, Some(w)) => {
                lo = mid;
                witness = w;
            }
            _ => hi = mid,
        }
    }
    BisectionResult {
        value: lo,
        upper: hi,
        witness: Some(witness),
        iterations: history.len(),
        history,
    }
}
