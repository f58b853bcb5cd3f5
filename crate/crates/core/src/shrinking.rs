//! Bifurcation radii for star-shaped domains `U_r = r U` shrinking to a point.
//!
//! Rescaling `U_r` back to `U` multiplies the coefficient term by `r^2`, so
//! the Hessian path runs from `-A` (at `r = 0`, invertible) to the problem on
//! `U` itself (at `r = 1`); its spectral flow is `i(B)` for constant `B`.

use serde::{Deserialize, Serialize};

use crate::comparison::EntryBounds;
use crate::error::{Result, SpecflowError};
use crate::index::{index, DiagonalBlock, SignatureSplit};
use crate::spectra::DomainSpectrum;
use crate::symmat::SymmetricMatrix;
use crate::verdict::{BifurcationVerdict, Clause, Warning, WarningKind, Witness};

/// User assertion about the sign of `d/dr <B(r x) u, u>` at `r = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialMonotonicity {
    NonDecreasing,
    NonIncreasing,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    PositiveDefinite,
    NegativeDefinite,
    Indefinite,
    Degenerate,
}

/// Classification of the crossing form `-2 ∫ <B u, u>` at `r = 1` for constant `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingFormReport {
    /// Definiteness of `B` itself; the crossing form has the opposite sign.
    pub definite: Definiteness,
    pub regular: bool,
}

fn require_mixed_split(split: SignatureSplit) -> Result<()> {
    if split.p1 == 0 || split.p2 == 0 {
        return Err(SpecflowError::InvalidSignatureSplit {
            p1: split.p1,
            p2: split.p2,
            reason: "both signs must be present in A",
        });
    }
    Ok(())
}

/// Verdict for a constant coefficient matrix `B`.
///
/// The smallest-eigenvalue criterion `mu_1(B) > alpha_1` is tried first since it
/// needs no nondegeneracy check. Otherwise `-alpha_1 < mu_1(B)` and
/// `alpha_1 < mu_p(B)` with nonsingular reduced blocks are checked, and the
/// witness additionally requires the computed index to be nonzero: the two
/// inequalities force `i(B) <= 0` but not `i(B) != 0` (for `A = diag(-1, 1)`,
/// `B = diag(0, 2)` satisfies both and has index 0).
pub fn shrink_verdict_constant(
    split: SignatureSplit,
    b: &SymmetricMatrix,
    spectrum: &DomainSpectrum,
    tol: f64,
) -> Result<BifurcationVerdict> {
    require_mixed_split(split)?;
    split.check(b, "shrinking coefficient")?;
    let alpha_1 = spectrum.alpha(1)?;
    let eig = b.eigenvalues()?;
    let mu_1 = eig[0];
    let mu_p = eig[eig.len() - 1];
    let mut warnings = Vec::new();

    let margin = mu_1 - alpha_1;
    if margin > tol {
        let witness = Witness {
            j: 1,
            k: 1,
            alpha_k: alpha_1,
            block: DiagonalBlock::Upper,
            interval: (0.0, mu_1),
            margin,
        };
        return Ok(BifurcationVerdict::found(
            Clause::ShrinkSmallestEigenvalue,
            witness,
        ));
    }
    if margin > 0.0 {
        warnings.push(Warning::new(
            WarningKind::SmallMargin,
            format!("mu_1(B) = {mu_1} exceeds alpha_1 = {alpha_1} by less than the tolerance"),
            margin,
        ));
    }

    let clause = Clause::ShrinkIndexNonzero;
    let lower_margin = mu_1 + alpha_1;
    let upper_margin = mu_p - alpha_1;
    let margin = lower_margin.min(upper_margin);
    if margin <= 0.0 {
        return Ok(match warnings.is_empty() {
            true => BifurcationVerdict::none(clause),
            false => BifurcationVerdict::indeterminate(Clause::ShrinkSmallestEigenvalue)
                .with_warnings(warnings),
        });
    }
    if margin <= tol {
        warnings.push(Warning::new(
            WarningKind::SmallMargin,
            format!("alpha_1 = {alpha_1} lies in (-mu_1, mu_p) = ({}, {mu_p}) by less than the tolerance", -mu_1),
            margin,
        ));
        return Ok(BifurcationVerdict::indeterminate(clause).with_warnings(warnings));
    }

    let report = index(split, b, spectrum, tol)?;
    if !report.is_nondegenerate() {
        warnings.extend(report.singular_blocks.iter().map(|s| {
            Warning::new(
                WarningKind::SingularBlock,
                format!(
                    "reduced block k = {} is singular: the linearised equation may have nontrivial solutions",
                    s.k
                ),
                s.eigenvalue.abs(),
            )
        }));
        return Ok(BifurcationVerdict::indeterminate(clause).with_warnings(warnings));
    }
    if report.index == 0 {
        warnings.push(Warning::new(
            WarningKind::Unverified,
            format!(
                "alpha_1 lies in (-mu_1, mu_p) but i(B) = 0 over {} blocks: the largest eigenvalue of B does not push a positive direction of -A below zero",
                report.truncation_rank
            ),
            margin,
        ));
        return Ok(BifurcationVerdict::none(clause).with_warnings(warnings));
    }
    debug_assert!(report.index <= -1);
    let witness = Witness {
        j: eig.len(),
        k: 1,
        alpha_k: alpha_1,
        block: DiagonalBlock::Upper,
        interval: (-mu_1, mu_p),
        margin,
    };
    Ok(BifurcationVerdict::found(clause, witness).with_warnings(warnings))
}

/// Verdict for a 2x2 coefficient `B(x)` known through entry bounds, with `A = diag(-1, 1)`.
pub fn shrink_verdict_2x2(
    split: SignatureSplit,
    bounds: &EntryBounds,
    radial: RadialMonotonicity,
    spectrum: &DomainSpectrum,
    tol: f64,
) -> Result<BifurcationVerdict> {
    if (split.p1, split.p2) != (1, 1) {
        return Err(SpecflowError::InvalidSignatureSplit {
            p1: split.p1,
            p2: split.p2,
            reason: "the 2x2 criterion needs p1 = p2 = 1",
        });
    }
    bounds.validate()?;
    let alpha_1 = spectrum.alpha(1)?;
    let m12 = bounds.max_abs_b12;

    // (clause, margins of both strict inequalities, witness interval, required monotonicity)
    let positive = (
        Clause::Shrink2x2Positive,
        [bounds.min_b22 - m12, bounds.min_b11 - m12 - alpha_1],
        (0.0, bounds.min_b11 - m12),
        RadialMonotonicity::NonDecreasing,
        1,
    );
    let negative = (
        Clause::Shrink2x2Negative,
        [-m12 - bounds.max_b11, -m12 - alpha_1 - bounds.max_b22],
        (0.0, -m12 - bounds.max_b22),
        RadialMonotonicity::NonIncreasing,
        2,
    );

    let mut pending: Option<BifurcationVerdict> = None;
    for (clause, margins, interval, needed, j) in [positive, negative] {
        let margin = margins[0].min(margins[1]);
        if margin <= 0.0 {
            continue;
        }
        if margin <= tol {
            pending.get_or_insert_with(|| {
                BifurcationVerdict::indeterminate(clause).with_warnings([Warning::new(
                    WarningKind::SmallMargin,
                    "entry-bound inequalities hold by less than the tolerance",
                    margin,
                )])
            });
            continue;
        }
        if radial != needed {
            pending.get_or_insert_with(|| {
                BifurcationVerdict::indeterminate(clause).with_warnings([Warning::new(
                    WarningKind::Unverified,
                    format!(
                        "entry bounds pass but the radial derivative of <B(rx)u,u> is {radial:?}, {needed:?} is required"
                    ),
                    margin,
                )])
            });
            continue;
        }
        let witness = Witness {
            j,
            k: 1,
            alpha_k: alpha_1,
            block: DiagonalBlock::Upper,
            interval,
            margin,
        };
        return Ok(BifurcationVerdict::found(clause, witness));
    }
    Ok(pending.unwrap_or_else(|| BifurcationVerdict::none(Clause::Shrink2x2Positive)))
}

/// Definiteness of constant `B`; definite `B` makes the crossing at `r = 1` regular.
pub fn crossing_form_constant(b: &SymmetricMatrix, tol: f64) -> Result<CrossingFormReport> {
    let t = b.inertia(tol)?;
    let definite = if t.n_zero > 0 {
        Definiteness::Degenerate
    } else if t.n_neg == 0 {
        Definiteness::PositiveDefinite
    } else if t.n_pos == 0 {
        Definiteness::NegativeDefinite
    } else {
        Definiteness::Indefinite
    };
    Ok(CrossingFormReport {
        definite,
        regular: matches!(
            definite,
            Definiteness::PositiveDefinite | Definiteness::NegativeDefinite
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{spectrum, DomainSpec};
    use crate::verdict::Outcome;

    fn interval() -> DomainSpectrum {
        spectrum(DomainSpec::unit_interval_pi()).unwrap()
    }

    fn split11() -> SignatureSplit {
        SignatureSplit::new(1, 1).unwrap()
    }

    #[test]
    fn constant_examples() {
        let s = interval();
        let v = shrink_verdict_constant(split11(), &SymmetricMatrix::diag(&[2.0, 2.0]), &s, 1e-7)
            .unwrap();
        assert_eq!(v.outcome, Outcome::WitnessFound);
        assert_eq!(v.clause, Clause::ShrinkSmallestEigenvalue);

        let v = shrink_verdict_constant(split11(), &SymmetricMatrix::zeros(2), &s, 1e-7).unwrap();
        assert_eq!(v.outcome, Outcome::NoWitness);

        let v = shrink_verdict_constant(split11(), &SymmetricMatrix::diag(&[0.5, -0.5]), &s, 1e-7)
            .unwrap();
        assert_eq!(v.outcome, Outcome::NoWitness);
    }

    #[test]
    fn index_clause_fires_for_indefinite_b() {
        // mu_1 = -0.5 > -1 and mu_p = 3 > 1; blocks nonsingular
        let s = interval();
        let v = shrink_verdict_constant(split11(), &SymmetricMatrix::diag(&[3.0, -0.5]), &s, 1e-7)
            .unwrap();
        assert_eq!(v.outcome, Outcome::WitnessFound);
        assert_eq!(v.clause, Clause::ShrinkIndexNonzero);
        assert_eq!(
            index(split11(), &SymmetricMatrix::diag(&[3.0, -0.5]), &s, 1e-9)
                .unwrap()
                .index,
            -1
        );
    }

    #[test]
    fn index_clause_rejects_vanishing_index() {
        let s = interval();
        let b = SymmetricMatrix::diag(&[0.0, 2.0]);
        assert_eq!(index(split11(), &b, &s, 1e-9).unwrap().index, 0);
        let v = shrink_verdict_constant(split11(), &b, &s, 1e-7).unwrap();
        assert_eq!(v.outcome, Outcome::NoWitness);
        assert!(v.warnings.iter().any(|w| w.kind == WarningKind::Unverified));
    }

    #[test]
    fn index_clause_needs_nonsingular_blocks() {
        // 1 - 4/4 = 0 at k = 2
        let s = interval();
        let v = shrink_verdict_constant(split11(), &SymmetricMatrix::diag(&[4.0, -0.5]), &s, 1e-7)
            .unwrap();
        assert_eq!(v.outcome, Outcome::Indeterminate);
        assert!(v
            .warnings
            .iter()
            .any(|w| w.kind == WarningKind::SingularBlock));
    }

    #[test]
    fn split_must_be_mixed() {
        let s = interval();
        let only = SignatureSplit::new(2, 0).unwrap();
        assert!(matches!(
            shrink_verdict_constant(only, &SymmetricMatrix::zeros(2), &s, 1e-7),
            Err(SpecflowError::InvalidSignatureSplit { .. })
        ));
        assert!(shrink_verdict_2x2(
            SignatureSplit::new(2, 1).unwrap(),
            &EntryBounds::constant(0.0, 0.0, 0.0),
            RadialMonotonicity::Unknown,
            &s,
            1e-7
        )
        .is_err());
    }

    #[test]
    fn disc_2x2_example() {
        for r in [1.0, 0.5, 2.0] {
            let s = spectrum(DomainSpec::disc(r)).unwrap();
            let bounds = EntryBounds {
                min_b11: 7.0 / (r * r),
                max_b11: 7.0 / (r * r),
                min_b22: 1.0,
                max_b22: 1.0,
                max_abs_b12: 0.0,
            };
            let v = shrink_verdict_2x2(
                split11(),
                &bounds,
                RadialMonotonicity::NonDecreasing,
                &s,
                1e-7,
            )
            .unwrap();
            assert_eq!(v.outcome, Outcome::WitnessFound);
            assert_eq!(v.clause, Clause::Shrink2x2Positive);

            let v = shrink_verdict_2x2(split11(), &bounds, RadialMonotonicity::Unknown, &s, 1e-7)
                .unwrap();
            assert_eq!(v.outcome, Outcome::Indeterminate);
        }
    }

    #[test]
    fn negative_2x2_clause() {
        let s = interval();
        let bounds = EntryBounds {
            min_b11: -3.0,
            max_b11: -2.0,
            min_b22: -5.0,
            max_b22: -4.0,
            max_abs_b12: 1.0,
        };
        let v = shrink_verdict_2x2(
            split11(),
            &bounds,
            RadialMonotonicity::NonIncreasing,
            &s,
            1e-7,
        )
        .unwrap();
        assert_eq!(v.clause, Clause::Shrink2x2Negative);
        assert_eq!(v.outcome, Outcome::WitnessFound);
        let zero = EntryBounds::constant(0.0, 0.0, 0.0);
        assert_eq!(
            shrink_verdict_2x2(
                split11(),
                &zero,
                RadialMonotonicity::NonDecreasing,
                &s,
                1e-7
            )
            .unwrap()
            .outcome,
            Outcome::NoWitness
        );
    }

    #[test]
    fn crossing_form_examples() {
        let r = crossing_form_constant(&SymmetricMatrix::diag(&[2.0, 3.0]), 1e-9).unwrap();
        assert_eq!(r.definite, Definiteness::PositiveDefinite);
        assert!(r.regular);
        let r = crossing_form_constant(&SymmetricMatrix::diag(&[2.0, -3.0]), 1e-9).unwrap();
        assert_eq!(r.definite, Definiteness::Indefinite);
        assert!(!r.regular);
        let b = SymmetricMatrix::from_rows(vec![vec![8.0, -2.0], vec![-2.0, 5.0]]).unwrap();
        let r = crossing_form_constant(&b, 1e-9).unwrap();
        assert_eq!(r.definite, Definiteness::PositiveDefinite);
        let r = crossing_form_constant(&b.scaled(-1.0), 1e-9).unwrap();
        assert_eq!(r.definite, Definiteness::NegativeDefinite);
        let r = crossing_form_constant(&SymmetricMatrix::diag(&[0.0, 1.0]), 1e-9).unwrap();
        assert_eq!(r.definite, Definiteness::Degenerate);
    }
}
