//! Outcome types shared by the comparison and shrinking criteria.

use serde::{Deserialize, Serialize};

use crate::index::DiagonalBlock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    WitnessFound,
    NoWitness,
    Indeterminate,
}

/// Which criterion produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    /// Upper comparison blocks `C_0 >= C_1`.
    UpperComparison,
    /// Lower comparison blocks `D_1 >= D_0`.
    LowerComparison,
    /// Scalar envelope with `gamma_1 < beta_0`.
    EnvelopeDecreasing,
    /// Scalar envelope with `gamma_0 < beta_1`.
    EnvelopeIncreasing,
    /// 2x2 bounds, upper comparison, witness in the first component.
    Bounds2x2UpperFirst,
    /// 2x2 bounds, upper comparison, witness in the second component.
    Bounds2x2UpperSecond,
    /// 2x2 bounds, lower comparison, witness in the first component.
    Bounds2x2LowerFirst,
    /// 2x2 bounds, lower comparison, witness in the second component.
    Bounds2x2LowerSecond,
    /// Shrinking domain, constant `B`: `-alpha_1 < mu_1(B)` and `alpha_1 < mu_p(B)`
    /// with a nondegenerate linearisation.
    ShrinkIndexNonzero,
    /// Shrinking domain, constant `B`: `mu_1(B) > alpha_1`.
    ShrinkSmallestEigenvalue,
    /// Shrinking domain, 2x2 bounds with a positive definite coefficient.
    Shrink2x2Positive,
    /// Shrinking domain, 2x2 bounds with a negative definite coefficient.
    Shrink2x2Negative,
}

impl Clause {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::UpperComparison => "upper-comparison",
            Self::LowerComparison => "lower-comparison",
            Self::EnvelopeDecreasing => "envelope-decreasing",
            Self::EnvelopeIncreasing => "envelope-increasing",
            Self::Bounds2x2UpperFirst => "bounds2x2-upper-first",
            Self::Bounds2x2UpperSecond => "bounds2x2-upper-second",
            Self::Bounds2x2LowerFirst => "bounds2x2-lower-first",
            Self::Bounds2x2LowerSecond => "bounds2x2-lower-second",
            Self::ShrinkIndexNonzero => "shrink-index-nonzero",
            Self::ShrinkSmallestEigenvalue => "shrink-smallest-eigenvalue",
            Self::Shrink2x2Positive => "shrink2x2-positive",
            Self::Shrink2x2Negative => "shrink2x2-negative",
        }
    }
}

/// The data certifying `lo < ±alpha_k < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// 1-based eigenvalue index within the block.
    pub j: usize,
    /// 1-based Dirichlet eigenvalue index.
    pub k: usize,
    pub alpha_k: f64,
    /// `Upper` compares against `+alpha_k`, `Lower` against `-alpha_k`.
    pub block: DiagonalBlock,
    pub interval: (f64, f64),
    /// Distance from `±alpha_k` to the nearer interval end.
    pub margin: f64,
}

impl Witness {
    /// The compared value, `alpha_k` or `-alpha_k`.
    pub fn point(&self) -> f64 {
        match self.block {
            DiagonalBlock::Upper => self.alpha_k,
            DiagonalBlock::Lower => -self.alpha_k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningKind {
    /// An eigenvalue sits within tolerance of `±alpha_k`.
    BoundarySingular,
    /// A reduced block is singular within tolerance.
    SingularBlock,
    /// A strict inequality holds by less than the tolerance.
    SmallMargin,
    /// A required ordering `X >= Y` fails.
    MonotonicityViolated,
    /// A hypothesis the data cannot certify.
    Unverified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Warning {
    pub kind: WarningKind,
    pub detail: String,
    /// The numeric distance behind the warning (0 when not applicable).
    pub margin: f64,
}

impl Warning {
    pub fn new(kind: WarningKind, detail: impl Into<String>, margin: f64) -> Self {
        Self {
            kind,
            detail: detail.into(),
            margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationVerdict {
    pub outcome: Outcome,
    pub witness: Option<Witness>,
    pub clause: Clause,
    pub warnings: Vec<Warning>,
}

impl BifurcationVerdict {
    pub fn found(clause: Clause, witness: Witness) -> Self {
        debug_assert!(witness.interval.0 < witness.point() && witness.point() < witness.interval.1);
        Self {
            outcome: Outcome::WitnessFound,
            witness: Some(witness),
            clause,
            warnings: Vec::new(),
        }
    }

    pub fn none(clause: Clause) -> Self {
        Self {
            outcome: Outcome::NoWitness,
            witness: None,
            clause,
            warnings: Vec::new(),
        }
    }

    pub fn indeterminate(clause: Clause) -> Self {
        Self {
            outcome: Outcome::Indeterminate,
            witness: None,
            clause,
            warnings: Vec::new(),
        }
    }

    pub fn with_warnings(mut self, warnings: impl IntoIterator<Item = Warning>) -> Self {
        self.warnings.extend(warnings);
        self
    }

    pub fn is_found(&self) -> bool {
        self.outcome == Outcome::WitnessFound
    }
}

/// Result of testing `lo < x < hi` with a tolerance band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Strict {
    Holds(f64),
    Grazing(f64),
    Fails,
}

pub(crate) fn strictly_inside(lo: f64, x: f64, hi: f64, tol: f64) -> Strict {
    let margin = (x - lo).min(hi - x);
    if margin > tol {
        Strict::Holds(margin)
    } else if margin > 0.0 {
        Strict::Grazing(margin)
    } else {
        Strict::Fails
    }
}
