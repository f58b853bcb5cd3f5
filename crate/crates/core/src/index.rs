//! Reduced blocks `L^k = -A - B/alpha_k`, the index `i(B)` and the spectral
//! flow `i(B_1) - i(B_0)` for coefficient matrices that do not depend on `x`.
//!
//! On the `k`-th Dirichlet eigenspace the Hessian acts as the `p x p` matrix
//! `L^k`. Once `alpha_k` exceeds `|B|`, every eigenvalue of `-A` moves by less
//! than one and `sgn(L^k) = sgn(-A)`, so the index is a finite sum.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpecflowError};
use crate::spectra::DomainSpectrum;
use crate::symmat::SymmetricMatrix;

/// `alpha_k` must exceed `|B|` by this factor before a block counts as stable.
pub const TRUNCATION_MARGIN: f64 = 1.1;

/// Absolute zero tolerance used for block eigenvalues when none is given.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

/// The pair `(p1, p2)` fixing `A = diag(-1 x p1, +1 x p2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureSplit {
    pub p1: usize,
    pub p2: usize,
}

impl SignatureSplit {
    pub fn new(p1: usize, p2: usize) -> Result<Self> {
        if p1 + p2 == 0 {
            return Err(SpecflowError::InvalidSignatureSplit {
                p1,
                p2,
                reason: "p1 + p2 must be at least 1",
            });
        }
        Ok(Self { p1, p2 })
    }

    pub fn dim(&self) -> usize {
        self.p1 + self.p2
    }

    /// `-A = diag(+1 x p1, -1 x p2)`.
    pub fn minus_a(&self) -> SymmetricMatrix {
        let mut d = vec![1.0; self.p1];
        d.extend(std::iter::repeat_n(-1.0, self.p2));
        SymmetricMatrix::diag(&d)
    }

    /// `sgn(-A) = p1 - p2`.
    pub fn minus_a_signature(&self) -> i64 {
        self.p1 as i64 - self.p2 as i64
    }

    pub(crate) fn check(&self, m: &SymmetricMatrix, context: &'static str) -> Result<()> {
        if m.dim() != self.dim() {
            return Err(SpecflowError::DimensionMismatch {
                expected: self.dim(),
                found: m.dim(),
                context,
            });
        }
        Ok(())
    }
}

/// A reduced block with an eigenvalue within tolerance of zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularBlock {
    pub k: usize,
    pub alpha_k: f64,
    /// The offending eigenvalue; its absolute value is the distance to singularity.
    pub eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub index: i64,
    pub truncation_rank: usize,
    /// `sgn(L^k)` for `k = 1..=truncation_rank`.
    pub block_signatures: Vec<i64>,
    /// `mu_Morse(L^k)` for `k = 1..=truncation_rank`.
    pub block_morse: Vec<usize>,
    pub singular_blocks: Vec<SingularBlock>,
}

impl IndexReport {
    pub fn is_nondegenerate(&self) -> bool {
        self.singular_blocks.is_empty()
    }
}

/// `-A - B / alpha_k`.
pub fn reduced_block(
    split: SignatureSplit,
    b: &SymmetricMatrix,
    alpha_k: f64,
) -> Result<SymmetricMatrix> {
    split.check(b, "reduced block")?;
    if alpha_k.is_nan() || alpha_k <= 0.0 {
        return Err(SpecflowError::OutOfRange(format!(
            "Dirichlet eigenvalue must be positive, got {alpha_k}"
        )));
    }
    split.minus_a().try_sub(&b.scaled(1.0 / alpha_k))
}

/// Smallest `k` with `alpha_k > 1.1 |B|`; all later blocks have the signature of `-A`.
pub fn truncation_rank(
    split: SignatureSplit,
    b: &SymmetricMatrix,
    spectrum: &DomainSpectrum,
) -> Result<usize> {
    split.check(b, "truncation rank")?;
    spectrum.first_index_above(b.operator_norm()? * TRUNCATION_MARGIN)
}

/// Inertia of one reduced block by strict sign, plus a singularity flag.
pub(crate) struct BlockCount {
    pub n_neg: usize,
    pub n_pos: usize,
    pub closest_to_zero: f64,
}

pub(crate) fn count_block(block: &SymmetricMatrix) -> Result<BlockCount> {
    let eig = block.eigenvalues()?;
    let n_neg = eig.iter().filter(|&&m| m < 0.0).count();
    let n_pos = eig.iter().filter(|&&m| m > 0.0).count();
    let closest_to_zero = eig
        .iter()
        .copied()
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .expect("blocks are nonempty");
    Ok(BlockCount {
        n_neg,
        n_pos,
        closest_to_zero,
    })
}

/// The index `i(B) = 1/2 sum_k (sgn L^k - sgn(-A))`.
///
/// Eigenvalues are counted by strict sign. Blocks with an eigenvalue within
/// `tol` of zero are reported in `singular_blocks`; the returned integer is
/// `sum_k (p2 - mu_Morse(L^k))`, which equals the half-sum above whenever no
/// block is singular.
pub fn index(
    split: SignatureSplit,
    b: &SymmetricMatrix,
    spectrum: &DomainSpectrum,
    tol: f64,
) -> Result<IndexReport> {
    let rank = truncation_rank(split, b, spectrum)?;
    index_with_rank(split, b, spectrum, tol, rank)
}

/// [`index`] summed over an explicit number of blocks (at least the truncation rank
/// for a meaningful value).
pub fn index_with_rank(
    split: SignatureSplit,
    b: &SymmetricMatrix,
    spectrum: &DomainSpectrum,
    tol: f64,
    rank: usize,
) -> Result<IndexReport> {
    split.check(b, "index")?;
    let mut report = IndexReport {
        index: 0,
        truncation_rank: rank,
        block_signatures: Vec::with_capacity(rank),
        block_morse: Vec::with_capacity(rank),
        singular_blocks: Vec::new(),
    };
    for k in 1..=rank {
        let alpha_k = spectrum.alpha(k)?;
        let count = count_block(&reduced_block(split, b, alpha_k)?)?;
        if count.closest_to_zero.abs() <= tol {
            report.singular_blocks.push(SingularBlock {
                k,
                alpha_k,
                eigenvalue: count.closest_to_zero,
            });
        }
        report
            .block_signatures
            .push(count.n_pos as i64 - count.n_neg as i64);
        report.block_morse.push(count.n_neg);
        report.index += split.p2 as i64 - count.n_neg as i64;
    }
    Ok(report)
}

/// Which endpoint of the path a warning refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endpoint {
    Start,
    End,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointWarning {
    pub endpoint: Endpoint,
    pub block: SingularBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub value: i64,
    pub start: IndexReport,
    pub end: IndexReport,
    /// Singular blocks at either endpoint; the formula assumes invertible endpoints.
    pub warnings: Vec<EndpointWarning>,
}

/// `sfl = i(B_1) - i(B_0)`.
pub fn spectral_flow(
    split: SignatureSplit,
    b0: &SymmetricMatrix,
    b1: &SymmetricMatrix,
    spectrum: &DomainSpectrum,
    tol: f64,
) -> Result<FlowReport> {
    let start = index(split, b0, spectrum, tol)?;
    let end = index(split, b1, spectrum, tol)?;
    Ok(assemble_flow(start, end))
}

/// [`spectral_flow`] with both indices summed over `rank` blocks.
pub fn spectral_flow_with_rank(
    split: SignatureSplit,
    b0: &SymmetricMatrix,
    b1: &SymmetricMatrix,
    spectrum: &DomainSpectrum,
    tol: f64,
    rank: usize,
) -> Result<FlowReport> {
    let start = index_with_rank(split, b0, spectrum, tol, rank)?;
    let end = index_with_rank(split, b1, spectrum, tol, rank)?;
    Ok(assemble_flow(start, end))
}

fn assemble_flow(start: IndexReport, end: IndexReport) -> FlowReport {
    let warnings = start
        .singular_blocks
        .iter()
        .map(|&block| EndpointWarning {
            endpoint: Endpoint::Start,
            block,
        })
        .chain(end.singular_blocks.iter().map(|&block| EndpointWarning {
            endpoint: Endpoint::End,
            block,
        }))
        .collect();
    FlowReport {
        value: end.index - start.index,
        start,
        end,
        warnings,
    }
}

/// Which diagonal block a boundary warning refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagonalBlock {
    /// The `p1 x p1` block, compared against `+alpha_k`.
    Upper,
    /// The `p2 x p2` block, compared against `-alpha_k`.
    Lower,
}

/// An eigenvalue of a diagonal block within tolerance of `+-alpha_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryWarning {
    pub k: usize,
    pub alpha_k: f64,
    pub endpoint: Endpoint,
    pub block: DiagonalBlock,
    pub eigenvalue: f64,
    /// `|eigenvalue -+ alpha_k|`.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockFlowReport {
    pub value: i64,
    pub truncation_rank: usize,
    pub warnings: Vec<BoundaryWarning>,
}

/// Diagonal blocks `C_{1,lambda}` (`p1 x p1`) and `C_{2,lambda}` (`p2 x p2`)
/// at both endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalBlocks {
    pub upper_start: SymmetricMatrix,
    pub lower_start: SymmetricMatrix,
    pub upper_end: SymmetricMatrix,
    pub lower_end: SymmetricMatrix,
}

impl DiagonalBlocks {
    pub fn check(&self, split: SignatureSplit) -> Result<()> {
        for (m, want, what) in [
            (&self.upper_start, split.p1, "upper block at lambda = 0"),
            (&self.lower_start, split.p2, "lower block at lambda = 0"),
            (&self.upper_end, split.p1, "upper block at lambda = 1"),
            (&self.lower_end, split.p2, "lower block at lambda = 1"),
        ] {
            if m.dim() != want {
                return Err(SpecflowError::DimensionMismatch {
                    expected: want,
                    found: m.dim(),
                    context: what,
                });
            }
        }
        Ok(())
    }

    /// `diag(C_1, C_2)` at the start and end.
    pub fn assembled(&self) -> (SymmetricMatrix, SymmetricMatrix) {
        (
            SymmetricMatrix::block_diag(&self.upper_start, &self.lower_start),
            SymmetricMatrix::block_diag(&self.upper_end, &self.lower_end),
        )
    }
}

/// Spectral flow for block-diagonal `B_lambda = diag(C_1, C_2)` by counting
/// eigenvalues in `(alpha_k, inf)` and `(-alpha_k, inf)`:
///
/// `sum_k |(a_k,inf) ∩ σ(C_{1,0})| + |(-a_k,inf) ∩ σ(C_{2,0})|
///        - |(a_k,inf) ∩ σ(C_{1,1})| - |(-a_k,inf) ∩ σ(C_{2,1})|`.
///
/// The sum stops once `alpha_k` exceeds every block norm by the truncation margin.
/// Blocks with `p1 = 0` or `p2 = 0` are absent and must be passed as `None`.
pub fn block_diag_sfl(
    split: SignatureSplit,
    upper: Option<(&SymmetricMatrix, &SymmetricMatrix)>,
    lower: Option<(&SymmetricMatrix, &SymmetricMatrix)>,
    spectrum: &DomainSpectrum,
    tol: f64,
) -> Result<BlockFlowReport> {
    let mut pieces: Vec<(DiagonalBlock, Endpoint, Vec<f64>)> = Vec::new();
    for (blocks, want, kind) in [
        (upper, split.p1, DiagonalBlock::Upper),
        (lower, split.p2, DiagonalBlock::Lower),
    ] {
        match blocks {
            Some((start, end)) => {
                for (m, endpoint) in [(start, Endpoint::Start), (end, Endpoint::End)] {
                    if m.dim() != want {
                        return Err(SpecflowError::DimensionMismatch {
                            expected: want,
                            found: m.dim(),
                            context: "diagonal comparison block",
                        });
                    }
                    pieces.push((kind, endpoint, m.eigenvalues()?));
                }
            }
            None if want != 0 => {
                return Err(SpecflowError::DimensionMismatch {
                    expected: want,
                    found: 0,
                    context: "missing diagonal block",
                })
            }
            None => {}
        }
    }

    let norm = pieces
        .iter()
        .flat_map(|(_, _, eig)| eig.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let rank = spectrum.first_index_above(norm * TRUNCATION_MARGIN)?;

    let mut value = 0i64;
    let mut warnings = Vec::new();
    for k in 1..=rank {
        let alpha_k = spectrum.alpha(k)?;
        for (kind, endpoint, eig) in &pieces {
            let threshold = match kind {
                DiagonalBlock::Upper => alpha_k,
                DiagonalBlock::Lower => -alpha_k,
            };
            let count = eig.iter().filter(|&&mu| mu > threshold).count() as i64;
            value += match endpoint {
                Endpoint::Start => count,
                Endpoint::End => -count,
            };
            for &mu in eig {
                let distance = (mu - threshold).abs();
                if distance <= tol {
                    warnings.push(BoundaryWarning {
                        k,
                        alpha_k,
                        endpoint: *endpoint,
                        block: *kind,
                        eigenvalue: mu,
                        distance,
                    });
                }
            }
        }
    }
    Ok(BlockFlowReport {
        value,
        truncation_rank: rank,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{spectrum, DomainSpec};

    fn interval() -> DomainSpectrum {
        spectrum(DomainSpec::unit_interval_pi()).unwrap()
    }

    fn split11() -> SignatureSplit {
        SignatureSplit::new(1, 1).unwrap()
    }

    fn m2(a: f64, b: f64, d: f64) -> SymmetricMatrix {
        SymmetricMatrix::from_rows(vec![vec![a, b], vec![b, d]]).unwrap()
    }

    #[test]
    fn reduced_block_examples() {
        let l = reduced_block(split11(), &SymmetricMatrix::diag(&[5.0, 3.0]), 1.0).unwrap();
        assert_eq!(l, SymmetricMatrix::diag(&[-4.0, -4.0]));

        let l = reduced_block(split11(), &SymmetricMatrix::zeros(2), 7.5).unwrap();
        assert_eq!(l, SymmetricMatrix::diag(&[1.0, -1.0]));

        let l = reduced_block(split11(), &m2(8.0, -2.0, 5.0), 1.0).unwrap();
        assert_eq!(l, m2(-7.0, 2.0, -6.0));

        assert!(matches!(
            reduced_block(split11(), &SymmetricMatrix::zeros(3), 1.0),
            Err(SpecflowError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn truncation_rank_examples() {
        let s = interval();
        assert_eq!(
            truncation_rank(split11(), &SymmetricMatrix::diag(&[5.0, 3.0]), &s).unwrap(),
            3
        );
        assert_eq!(
            truncation_rank(split11(), &SymmetricMatrix::zeros(2), &s).unwrap(),
            1
        );
        assert_eq!(
            truncation_rank(split11(), &m2(8.0, -2.0, 5.0), &s).unwrap(),
            4
        );
    }

    #[test]
    fn index_examples() {
        let s = interval();
        let r = index(split11(), &SymmetricMatrix::diag(&[5.0, 3.0]), &s, 1e-9).unwrap();
        assert_eq!(r.index, -2);
        assert_eq!(r.block_signatures, vec![-2, -2, 0]);
        assert!(r.is_nondegenerate());

        assert_eq!(
            index(split11(), &SymmetricMatrix::zeros(2), &s, 1e-9)
                .unwrap()
                .index,
            0
        );

        let r = index(split11(), &m2(-3.0, 1.0, 2.0), &s, 1e-9).unwrap();
        assert_eq!(r.index, 0);
        assert!(r.block_signatures.iter().all(|&g| g == 0));
    }

    #[test]
    fn half_sum_matches_morse_form_when_nondegenerate() {
        let s = interval();
        let split = split11();
        for b in [m2(8.0, -2.0, 5.0), m2(-3.0, 1.0, 2.0), m2(30.0, 4.0, -12.5)] {
            let r = index(split, &b, &s, 1e-9).unwrap();
            assert!(r.is_nondegenerate());
            let twice: i64 = r
                .block_signatures
                .iter()
                .map(|g| g - split.minus_a_signature())
                .sum();
            assert_eq!(twice, 2 * r.index);
        }
    }

    #[test]
    fn singular_block_is_flagged_not_fatal() {
        // alpha_1 = 1 makes 1 - 1/1 exactly zero
        let r = index(
            split11(),
            &SymmetricMatrix::diag(&[1.0, 3.0]),
            &interval(),
            1e-9,
        )
        .unwrap();
        assert_eq!(r.singular_blocks.len(), 1);
        assert_eq!(r.singular_blocks[0].k, 1);
        assert_eq!(r.singular_blocks[0].eigenvalue, 0.0);
    }

    #[test]
    fn worked_example_flow() {
        let s = interval();
        let f = spectral_flow(
            split11(),
            &m2(8.0, -2.0, 5.0),
            &m2(-3.0, 1.0, 2.0),
            &s,
            1e-9,
        )
        .unwrap();
        assert_eq!(f.value, 2);
        assert!(f.warnings.is_empty());
        let back = spectral_flow(
            split11(),
            &m2(-3.0, 1.0, 2.0),
            &m2(8.0, -2.0, 5.0),
            &s,
            1e-9,
        )
        .unwrap();
        assert_eq!(back.value, -2);
        let same = spectral_flow(
            split11(),
            &m2(8.0, -2.0, 5.0),
            &m2(8.0, -2.0, 5.0),
            &s,
            1e-9,
        )
        .unwrap();
        assert_eq!(same.value, 0);
    }

    fn scalar(v: f64) -> SymmetricMatrix {
        SymmetricMatrix::diag(&[v])
    }

    #[test]
    fn block_diag_examples() {
        let s = interval();
        let (c10, c20, c11, c21) = (scalar(5.0), scalar(3.0), scalar(0.9), scalar(3.0));
        let r =
            block_diag_sfl(split11(), Some((&c10, &c11)), Some((&c20, &c21)), &s, 1e-9).unwrap();
        assert_eq!(r.value, 2);
        assert!(r.warnings.is_empty());

        let z = scalar(0.0);
        let r = block_diag_sfl(split11(), Some((&z, &z)), Some((&z, &z)), &s, 1e-9).unwrap();
        assert_eq!(r.value, 0);

        let c11 = scalar(1.0);
        let r =
            block_diag_sfl(split11(), Some((&c10, &c11)), Some((&c20, &c21)), &s, 1e-9).unwrap();
        assert_eq!(r.value, 2);
        assert_eq!(r.warnings.len(), 1);
        let w = r.warnings[0];
        assert_eq!(
            (w.k, w.endpoint, w.block),
            (1, Endpoint::End, DiagonalBlock::Upper)
        );
        assert_eq!(w.distance, 0.0);
    }

    #[test]
    fn block_diag_matches_full_formula() {
        let s = interval();
        let (c10, c20, c11, c21) = (scalar(5.0), scalar(3.0), scalar(0.9), scalar(3.0));
        let r =
            block_diag_sfl(split11(), Some((&c10, &c11)), Some((&c20, &c21)), &s, 1e-9).unwrap();
        let f = spectral_flow(
            split11(),
            &SymmetricMatrix::block_diag(&c10, &c20),
            &SymmetricMatrix::block_diag(&c11, &c21),
            &s,
            1e-9,
        )
        .unwrap();
        assert_eq!(r.value, f.value);
    }

    #[test]
    fn block_diag_requires_present_blocks() {
        let s = interval();
        let c = scalar(1.0);
        assert!(block_diag_sfl(split11(), Some((&c, &c)), None, &s, 1e-9).is_err());
        let only_upper = SignatureSplit::new(1, 0).unwrap();
        assert!(block_diag_sfl(only_upper, Some((&c, &c)), None, &s, 1e-9).is_ok());
    }
}
