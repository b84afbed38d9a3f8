//! Three-valued outcomes for bounded exhaustive searches, and the work
//! budgets that bound them.
//!
//! `Refuted` always carries a structured witness that can be replayed
//! through the corresponding checker; `Inconclusive` is returned when a
//! budget ran out and never stands in for a refutation. `Refuted` is only
//! produced after the full witness space was exhausted.

use serde::Serialize;

/// Result of a bounded check, generic over the refutation witness type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "detail", rename_all = "snake_case")]
pub enum Verdict<W> {
    Verified,
    Refuted(W),
    Inconclusive { budget_spent: u64 },
}

impl<W> Verdict<W> {
    pub fn is_verified(&self) -> bool {
        matches!(self, Verdict::Verified)
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, Verdict::Refuted(_))
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self, Verdict::Inconclusive { .. })
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Verdict::Refuted(w) => Some(w),
            _ => None,
        }
    }

    pub fn map_witness<V>(self, f: impl FnOnce(W) -> V) -> Verdict<V> {
        match self {
            Verdict::Verified => Verdict::Verified,
            Verdict::Refuted(w) => Verdict::Refuted(f(w)),
            Verdict::Inconclusive { budget_spent } => Verdict::Inconclusive { budget_spent },
        }
    }
}

/// Outcome of a search for a positive witness (an isomorphism, a
/// construction tree): either the witness, a completed search that found
/// none, or an exhausted budget.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", content = "detail", rename_all = "snake_case")]
pub enum Search<T> {
    Found(T),
    Exhausted,
    OutOfBudget { budget_spent: u64 },
}

impl<T> Search<T> {
    pub fn found(&self) -> Option<&T> {
        match self {
            Search::Found(t) => Some(t),
            _ => None,
        }
    }
}

/// Work caps for the bounded searches. Each cap counts concrete units of
/// work (quadruples examined, instances enumerated, search nodes visited),
/// so the defaults below reproduce the documented exhaustiveness cutoffs:
///
/// * linkage is exhaustive for p = 2 up to h_dim = 4
///   (2^(4·4) = 65 536 quadruples);
/// * the M(n) instance sweep is exhaustive for p = 2, h_dim ≤ 3 (≤ 448
///   instances) and p = 3, h_dim ≤ 2 (81 instances), but not for
///   p = 2, h_dim = 4 (8 960) or p = 3, h_dim = 3 (≈ 9 477);
/// * isomorphism search covers GL up to h_dim = 4 over F2 (20 160 maps)
///   and h_dim = 3 over F3 (11 232), but not GL₄(F₃) (≈ 2.4·10⁷).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Budget {
    /// Max (a,b,c,d) quadruples examined by the linkage check.
    pub linkage_quadruples: u64,
    /// Max (a-tuple, b-tuple) instances enumerated by an M(n) sweep.
    pub mn_instances: u64,
    /// Max candidate-map search nodes visited per isomorphism search.
    pub iso_nodes: u64,
    /// Max construction trees tried by the elementary-type search.
    pub et_trees: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            linkage_quadruples: 65_536,
            mn_instances: 1_000,
            iso_nodes: 200_000,
            et_trees: 10_000,
        }
    }
}

impl Budget {
    /// Scales every cap by a factor; `--budget N` on the command line maps
    /// to this.
    pub fn scaled(factor: u64) -> Self {
        let d = Budget::default();
        Budget {
            linkage_quadruples: d.linkage_quadruples.saturating_mul(factor),
            mn_instances: d.mn_instances.saturating_mul(factor),
            iso_nodes: d.iso_nodes.saturating_mul(factor),
            et_trees: d.et_trees.saturating_mul(factor),
        }
    }
}
