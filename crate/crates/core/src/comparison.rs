//! Bifurcation criteria for `x`-dependent coefficients by comparison with
//! block-diagonal constant paths.
//!
//! If `B_0(x) >= C_0` and `C_1 >= B_1(x)` for block-diagonal `C_lambda`, the
//! spectral flow of the true path dominates that of the comparison path, and a
//! Dirichlet eigenvalue strictly inside `(mu_j(C_{1,1}), mu_j(C_{1,0}))` (or
//! `-alpha_k` inside the corresponding interval of the second block) makes it
//! strictly positive. The lower variant mirrors this with `D_lambda`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpecflowError};
use crate::index::{
    block_diag_sfl, DiagonalBlock, DiagonalBlocks, SignatureSplit, TRUNCATION_MARGIN,
};
use crate::spectra::DomainSpectrum;
use crate::symmat::SymmetricMatrix;
use crate::verdict::{
    strictly_inside, BifurcationVerdict, Clause, Strict, Warning, WarningKind, Witness,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonRole {
    /// `C_lambda` with `B_0(x) >= C_0`, `C_1 >= B_1(x)`.
    UpperC,
    /// `D_lambda` with `D_0 >= B_0(x)`, `B_1(x) >= D_1`.
    LowerD,
}

/// Block-diagonal comparison data at `lambda = 0` (start) and `lambda = 1` (end).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonPair {
    pub role: ComparisonRole,
    pub blocks: DiagonalBlocks,
}

/// Upper and lower eigenvalue envelopes of `B_lambda(x)` over the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeBounds {
    /// `sup_x mu_p(B_0(x))`.
    pub gamma_0: f64,
    /// `sup_x mu_p(B_1(x))`.
    pub gamma_1: f64,
    /// `inf_x mu_1(B_0(x))`.
    pub beta_0: f64,
    /// `inf_x mu_1(B_1(x))`.
    pub beta_1: f64,
}

/// Entrywise bounds of a symmetric 2x2 coefficient `[[b11, b12], [b12, b22]]` over the closed domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryBounds {
    pub min_b11: f64,
    pub max_b11: f64,
    pub min_b22: f64,
    pub max_b22: f64,
    pub max_abs_b12: f64,
}

impl EntryBounds {
    /// Bounds of a constant matrix.
    pub fn constant(b11: f64, b12: f64, b22: f64) -> Self {
        Self {
            min_b11: b11,
            max_b11: b11,
            min_b22: b22,
            max_b22: b22,
            max_abs_b12: b12.abs(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.min_b11 <= self.max_b11
            && self.min_b22 <= self.max_b22
            && self.max_abs_b12 >= 0.0
            && [
                self.min_b11,
                self.max_b11,
                self.min_b22,
                self.max_b22,
                self.max_abs_b12,
            ]
            .iter()
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(SpecflowError::OutOfRange(format!(
                "inconsistent entry bounds {self:?}"
            )))
        }
    }

    /// Largest diagonal `c1` with `B(x) - diag(c1, .) >= 0` by diagonal dominance.
    fn floor_first(&self) -> f64 {
        self.min_b11 - self.max_abs_b12
    }

    fn floor_second(&self) -> f64 {
        self.min_b22 - self.max_abs_b12
    }

    /// Smallest diagonal `d1` with `diag(d1, .) - B(x) >= 0` by diagonal dominance.
    fn ceiling_first(&self) -> f64 {
        self.max_b11 + self.max_abs_b12
    }

    fn ceiling_second(&self) -> f64 {
        self.max_b22 + self.max_abs_b12
    }
}

/// Entry bounds at both ends of the parameter interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds2x2 {
    pub start: EntryBounds,
    pub end: EntryBounds,
}

/// Slack below which a psd check is treated as exact (rounding in the eigensolver).
fn psd_roundoff(m: &SymmetricMatrix) -> f64 {
    64.0 * f64::EPSILON * m.max_abs().max(1.0)
}

/// `high - low >= 0`: `Ok(None)` if it holds, `Ok(Some(warning))` with the
/// violating eigenvalue otherwise; the bool is true when the violation is within `tol`.
fn check_order(
    high: &SymmetricMatrix,
    low: &SymmetricMatrix,
    what: &str,
    tol: f64,
) -> Result<Option<(bool, Warning)>> {
    let diff = high.try_sub(low)?;
    let smallest = diff.eigen()?.smallest();
    if smallest >= -psd_roundoff(&diff) {
        return Ok(None);
    }
    let within_tol = smallest >= -tol;
    Ok(Some((
        within_tol,
        Warning::new(
            WarningKind::MonotonicityViolated,
            format!("{what} is not positive semi-definite (smallest eigenvalue {smallest:e})"),
            -smallest,
        ),
    )))
}

/// Criterion for upper comparison blocks `C_0 >= C_1`.
pub fn check_upper_comparison(
    split: SignatureSplit,
    pair: &ComparisonPair,
    spectrum: &DomainSpectrum,
    tol: f64,
) -> Result<BifurcationVerdict> {
    if pair.role != ComparisonRole::UpperC {
        return Err(SpecflowError::OutOfRange(
            "upper comparison needs a pair with role UpperC".into(),
        ));
    }
    let b = &pair.blocks;
    // witness intervals run from the end (lambda = 1) to the start (lambda = 0)
    comparison_verdict(
        split,
        b,
        (&b.upper_end, &b.upper_start),
        (&b.lower_end, &b.lower_start),
        spectrum,
        tol,
        Clause::UpperComparison,
    )
}

/// Criterion for lower comparison blocks `D_1 >= D_0`.
pub fn check_lower_comparison(
    split: SignatureSplit,
    pair: &ComparisonPair,
    spectrum: &DomainSpectrum,
    tol: f64,
) -> Result<BifurcationVerdict> {
    if pair.role != ComparisonRole::LowerD {
        return Err(SpecflowError::OutOfRange(
            "lower comparison needs a pair with role LowerD".into(),
        ));
    }
    let b = &pair.blocks;
    comparison_verdict(
        split,
        b,
        (&b.upper_start, &b.upper_end),
        (&b.lower_start, &b.lower_end),
        spectrum,
        tol,
        Clause::LowerComparison,
    )
}

/// Shared search: `upper = (low, high)` must satisfy `high >= low`, likewise
/// `lower`; a witness is `mu_j(low) < alpha_k < mu_j(high)` in the upper block
/// or `mu_j(low) < -alpha_k < mu_j(high)` in the lower block.
fn comparison_verdict(
    split: SignatureSplit,
    blocks: &DiagonalBlocks,
    upper: (&SymmetricMatrix, &SymmetricMatrix),
    lower: (&SymmetricMatrix, &SymmetricMatrix),
    spectrum: &DomainSpectrum,
    tol: f64,
    clause: Clause,
) -> Result<BifurcationVerdict> {
    blocks.check(split)?;
    let upper_present = split.p1 > 0;
    let lower_present = split.p2 > 0;

    let mut warnings = vec![Warning::new(
        WarningKind::Unverified,
        "the linearised equation is assumed to have only the trivial solution at lambda = 0 and lambda = 1",
        0.0,
    )];

    // monotonicity of the comparison path
    let mut order_fails = false;
    let mut order_grazes = false;
    for (present, (low, high), what) in [
        (upper_present, upper, "upper block difference"),
        (lower_present, lower, "lower block difference"),
    ] {
        if !present {
            continue;
        }
        if let Some((within_tol, w)) = check_order(high, low, what, tol)? {
            if within_tol {
                order_grazes = true;
            } else {
                order_fails = true;
            }
            warnings.push(w);
        }
    }
    if order_fails {
        return Ok(BifurcationVerdict::none(clause).with_warnings(warnings));
    }

    // boundary coincidences and the comparison path's own spectral flow
    let upper_pair = upper_present.then_some((&blocks.upper_start, &blocks.upper_end));
    let lower_pair = lower_present.then_some((&blocks.lower_start, &blocks.lower_end));
    let flow = block_diag_sfl(split, upper_pair, lower_pair, spectrum, tol)?;
    for bw in &flow.warnings {
        warnings.push(Warning::new(
            WarningKind::BoundarySingular,
            format!(
                "k = {}: eigenvalue {} of the {:?} block at the {:?} sits on {}alpha_{} = {}",
                bw.k,
                bw.eigenvalue,
                bw.block,
                bw.endpoint,
                if bw.block == DiagonalBlock::Upper {
                    ""
                } else {
                    "-"
                },
                bw.k,
                bw.alpha_k
            ),
            bw.distance,
        ));
    }

    let upper_eigs = if upper_present {
        Some((upper.0.eigenvalues()?, upper.1.eigenvalues()?))
    } else {
        None
    };
    let lower_eigs = if lower_present {
        Some((lower.0.eigenvalues()?, lower.1.eigenvalues()?))
    } else {
        None
    };
    let norm = [&upper_eigs, &lower_eigs]
        .iter()
        .filter_map(|e| e.as_ref())
        .flat_map(|(a, b)| a.iter().chain(b.iter()))
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let rank = spectrum.first_index_above(norm * TRUNCATION_MARGIN)?;

    let mut grazing: Option<Warning> = None;
    for k in 1..=rank {
        let alpha_k = spectrum.alpha(k)?;
        for (eigs, block) in [
            (&upper_eigs, DiagonalBlock::Upper),
            (&lower_eigs, DiagonalBlock::Lower),
        ] {
            let Some((low, high)) = eigs else { continue };
            let point = match block {
                DiagonalBlock::Upper => alpha_k,
                DiagonalBlock::Lower => -alpha_k,
            };
            for (j, (&lo, &hi)) in low.iter().zip(high.iter()).enumerate() {
                match strictly_inside(lo, point, hi, tol) {
                    Strict::Holds(margin) if !order_grazes => {
                        let witness = Witness {
                            j: j + 1,
                            k,
                            alpha_k,
                            block,
                            interval: (lo, hi),
                            margin,
                        };
                        return Ok(
                            BifurcationVerdict::found(clause, witness).with_warnings(warnings)
                        );
                    }
                    Strict::Holds(_) => {}
                    Strict::Grazing(margin) => {
                        grazing.get_or_insert_with(|| {
                            Warning::new(
                                WarningKind::SmallMargin,
                                format!(
                                    "{point} lies in ({lo}, {hi}) by less than the tolerance (j = {}, k = {k})",
                                    j + 1
                                ),
                                margin,
                            )
                        });
                    }
                    Strict::Fails => {}
                }
            }
        }
    }

    if order_grazes {
        return Ok(BifurcationVerdict::indeterminate(clause).with_warnings(warnings));
    }
    match grazing {
        Some(w) => {
            warnings.push(w);
            Ok(BifurcationVerdict::indeterminate(clause).with_warnings(warnings))
        }
        None => Ok(BifurcationVerdict::none(clause).with_warnings(warnings)),
    }
}

/// `gamma_lambda = max_i mu_p(B_lambda(x_i))`, `beta_lambda = min_i mu_1(B_lambda(x_i))`
/// over the supplied sample matrices.
pub fn envelope_bounds(
    samples_start: &[SymmetricMatrix],
    samples_end: &[SymmetricMatrix],
) -> Result<EnvelopeBounds> {
    fn extremes(samples: &[SymmetricMatrix]) -> Result<(f64, f64)> {
        if samples.is_empty() {
            return Err(SpecflowError::EmptyInput(
                "envelope needs at least one sample matrix",
            ));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for m in samples {
            let e = m.eigen()?;
            lo = lo.min(e.smallest());
            hi = hi.max(e.largest());
        }
        Ok((lo, hi))
    }
    let (beta_0, gamma_0) = extremes(samples_start)?;
    let (beta_1, gamma_1) = extremes(samples_end)?;
    Ok(EnvelopeBounds {
        gamma_0,
        gamma_1,
        beta_0,
        beta_1,
    })
}

/// Scalar comparison with `C_lambda = (beta_0 + lambda (gamma_1 - beta_0)) I`
/// (first clause) or `D_lambda = (gamma_0 + lambda (beta_1 - gamma_0)) I`
/// (second clause): some `±alpha_k` strictly between the envelopes.
pub fn check_envelope(
    split: SignatureSplit,
    env: &EnvelopeBounds,
    spectrum: &DomainSpectrum,
    tol: f64,
) -> Result<BifurcationVerdict> {
    let clauses = [
        (Clause::EnvelopeDecreasing, env.gamma_1, env.beta_0),
        (Clause::EnvelopeIncreasing, env.gamma_0, env.beta_1),
    ];
    let norm = [env.gamma_0, env.gamma_1, env.beta_0, env.beta_1]
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let rank = spectrum.first_index_above(norm * TRUNCATION_MARGIN)?;

    let mut grazing: Option<(Clause, Warning)> = None;
    for (clause, lo, hi) in clauses {
        if lo >= hi {
            continue;
        }
        for k in 1..=rank {
            let alpha_k = spectrum.alpha(k)?;
            for (present, block, point) in [
                (split.p1 > 0, DiagonalBlock::Upper, alpha_k),
                (split.p2 > 0, DiagonalBlock::Lower, -alpha_k),
            ] {
                if !present {
                    continue;
                }
                match strictly_inside(lo, point, hi, tol) {
                    Strict::Holds(margin) => {
                        let witness = Witness {
                            j: 1,
                            k,
                            alpha_k,
                            block,
                            interval: (lo, hi),
                            margin,
                        };
                        return Ok(BifurcationVerdict::found(clause, witness));
                    }
                    Strict::Grazing(margin) => {
                        grazing.get_or_insert_with(|| {
                            (
                                clause,
                                Warning::new(
                                    WarningKind::SmallMargin,
                                    format!(
                                        "{point} lies in ({lo}, {hi}) by less than the tolerance"
                                    ),
                                    margin,
                                ),
                            )
                        });
                    }
                    Strict::Fails => {}
                }
            }
        }
    }
    Ok(match grazing {
        Some((clause, w)) => BifurcationVerdict::indeterminate(clause).with_warnings([w]),
        None => BifurcationVerdict::none(Clause::EnvelopeDecreasing),
    })
}

/// The four 2x2 criteria with `A = diag(-1, 1)`, using diagonal comparison
/// matrices bounded through diagonal dominance by the entry bounds.
///
/// Each criterion reduces to one non-strict ordering between the constant
/// comparison entries of one component and one strict interval containing
/// `alpha_k` (or `-alpha_k`) for the other.
pub fn check_2x2_conditions(
    bounds: &Bounds2x2,
    spectrum: &DomainSpectrum,
    tol: f64,
) -> Result<BifurcationVerdict> {
    bounds.start.validate()?;
    bounds.end.validate()?;
    let (s, e) = (&bounds.start, &bounds.end);

    // (clause, ordering high >= low, interval (lo, hi), block)
    let criteria = [
        (
            Clause::Bounds2x2UpperFirst,
            (s.floor_second(), e.ceiling_second()),
            (e.ceiling_first(), s.floor_first()),
            DiagonalBlock::Upper,
        ),
        (
            Clause::Bounds2x2UpperSecond,
            (s.floor_first(), e.ceiling_first()),
            (e.ceiling_second(), s.floor_second()),
            DiagonalBlock::Lower,
        ),
        (
            Clause::Bounds2x2LowerFirst,
            (e.floor_second(), s.ceiling_second()),
            (s.ceiling_first(), e.floor_first()),
            DiagonalBlock::Upper,
        ),
        (
            Clause::Bounds2x2LowerSecond,
            (e.floor_first(), s.ceiling_first()),
            (s.ceiling_second(), e.floor_second()),
            DiagonalBlock::Lower,
        ),
    ];

    let norm = [s, e]
        .iter()
        .flat_map(|b| {
            [
                b.floor_first(),
                b.floor_second(),
                b.ceiling_first(),
                b.ceiling_second(),
            ]
        })
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let rank = spectrum.first_index_above(norm * TRUNCATION_MARGIN)?;

    let mut grazing: Option<(Clause, Warning)> = None;
    for (clause, (high, low), (lo, hi), block) in criteria {
        let slack = high - low;
        let order_grazes = if slack >= 0.0 {
            false
        } else if slack >= -tol {
            true
        } else {
            continue;
        };
        for k in 1..=rank {
            let alpha_k = spectrum.alpha(k)?;
            let point = match block {
                DiagonalBlock::Upper => alpha_k,
                DiagonalBlock::Lower => -alpha_k,
            };
            match strictly_inside(lo, point, hi, tol) {
                Strict::Holds(margin) if !order_grazes => {
                    let witness = Witness {
                        j: 1,
                        k,
                        alpha_k,
                        block,
                        interval: (lo, hi),
                        margin,
                    };
                    return Ok(BifurcationVerdict::found(clause, witness).with_warnings([
                        Warning::new(
                            WarningKind::Unverified,
                            "the linearised equation is assumed to have only the trivial solution at lambda = 0 and lambda = 1",
                            0.0,
                        ),
                    ]));
                }
                Strict::Holds(margin) | Strict::Grazing(margin) => {
                    let margin = if order_grazes {
                        margin.min(-slack)
                    } else {
                        margin
                    };
                    grazing.get_or_insert_with(|| {
                        (
                            clause,
                            Warning::new(
                                WarningKind::SmallMargin,
                                format!("{point} against ({lo}, {hi}) with ordering slack {slack}"),
                                margin,
                            ),
                        )
                    });
                }
                Strict::Fails => {}
            }
        }
    }
    Ok(match grazing {
        Some((clause, w)) => BifurcationVerdict::indeterminate(clause).with_warnings([w]),
        None => BifurcationVerdict::none(Clause::Bounds2x2UpperFirst),
    })
}
