use proptest::prelude::*;
use specflow_core::index::{index_with_rank, spectral_flow_with_rank};
use specflow_core::{
    block_diag_sfl, check_envelope, check_lower_comparison, check_upper_comparison,
    crossing_form_constant, index, shrink_verdict_constant, spectral_flow, spectrum,
    truncation_rank, Clause, ComparisonPair, ComparisonRole, Definiteness, DiagonalBlock,
    DiagonalBlocks, DomainSpec, DomainSpectrum, EnvelopeBounds, Outcome, SignatureSplit,
    SymmetricMatrix,
};

const TOL: f64 = 1e-9;
const WTOL: f64 = 1e-7;

fn interval() -> DomainSpectrum {
    spectrum(DomainSpec::unit_interval_pi()).unwrap()
}

fn sym(dim: usize, upper: &[f64]) -> SymmetricMatrix {
    let mut rows = vec![vec![0.0; dim]; dim];
    let mut it = upper.iter();
    for i in 0..dim {
        for j in i..dim {
            let v = *it.next().unwrap();
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    SymmetricMatrix::from_rows(rows).unwrap()
}

fn gram(dim: usize, g: &[f64]) -> SymmetricMatrix {
    let rows = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| (0..dim).map(|l| g[dim * i + l] * g[dim * j + l]).sum())
                .collect()
        })
        .collect();
    SymmetricMatrix::from_rows_symmetrized(rows, 1e-9).unwrap()
}

fn mat(dim: usize) -> impl Strategy<Value = SymmetricMatrix> {
    prop::collection::vec(-10.0f64..10.0, dim * (dim + 1) / 2).prop_map(move |u| sym(dim, &u))
}

fn psd(dim: usize, bound: f64) -> impl Strategy<Value = SymmetricMatrix> {
    prop::collection::vec(-bound..bound, dim * dim).prop_map(move |g| gram(dim, &g))
}

/// Split with `p1, p2 >= 1` and total dimension in `2..=max`.
fn split(max: usize) -> impl Strategy<Value = SignatureSplit> {
    (2..=max).prop_flat_map(|p| (1..p).prop_map(move |p1| SignatureSplit::new(p1, p - p1).unwrap()))
}

fn split_and_mat(max: usize) -> impl Strategy<Value = (SignatureSplit, SymmetricMatrix)> {
    split(max).prop_flat_map(|s| (Just(s), mat(s.dim())))
}

fn split_and_pair(
    max: usize,
) -> impl Strategy<Value = (SignatureSplit, SymmetricMatrix, SymmetricMatrix)> {
    split(max).prop_flat_map(|s| (Just(s), mat(s.dim()), mat(s.dim())))
}

/// Monotone diagonal blocks `high = low + G G^T` for both components.
fn monotone_blocks(
    max: usize,
) -> impl Strategy<
    Value = (
        SignatureSplit,
        SymmetricMatrix,
        SymmetricMatrix,
        SymmetricMatrix,
        SymmetricMatrix,
    ),
> {
    split(max).prop_flat_map(|s| {
        (
            Just(s),
            mat(s.p1),
            psd(s.p1, 2.0),
            mat(s.p2),
            psd(s.p2, 2.0),
        )
            .prop_map(|(s, l1, g1, l2, g2)| {
                let h1 = l1.try_add(&g1).unwrap();
                let h2 = l2.try_add(&g2).unwrap();
                (s, l1, h1, l2, h2)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn index_is_stable_beyond_truncation_rank((s, b) in split_and_mat(6)) {
        let sp = interval();
        let r = index(s, &b, &sp, TOL).unwrap();
        let doubled = index_with_rank(s, &b, &sp, TOL, 2 * r.truncation_rank).unwrap();
        prop_assert_eq!(r.index, doubled.index);
    }

    #[test]
    fn per_block_contribution_is_half_signature_defect((s, b) in split_and_mat(6)) {
        let sp = interval();
        let r = index(s, &b, &sp, TOL).unwrap();
        prop_assume!(r.is_nondegenerate());
        let half_sum: i64 = r
            .block_signatures
            .iter()
            .map(|&sig| sig - s.minus_a_signature())
            .sum::<i64>();
        prop_assert_eq!(half_sum % 2, 0);
        prop_assert_eq!(half_sum / 2, r.index);
    }

    #[test]
    fn spectral_flow_is_antisymmetric_and_additive(
        (s, b0, b1) in split_and_pair(5),
        extra in prop::collection::vec(-10.0f64..10.0, 15),
    ) {
        let sp = interval();
        let b2 = sym(s.dim(), &extra[..s.dim() * (s.dim() + 1) / 2]);
        let f01 = spectral_flow(s, &b0, &b1, &sp, TOL).unwrap().value;
        let f10 = spectral_flow(s, &b1, &b0, &sp, TOL).unwrap().value;
        let f12 = spectral_flow(s, &b1, &b2, &sp, TOL).unwrap().value;
        let f02 = spectral_flow(s, &b0, &b2, &sp, TOL).unwrap().value;
        prop_assert_eq!(f01, -f10);
        prop_assert_eq!(f01 + f12, f02);
    }

    #[test]
    fn larger_coefficients_lower_the_index((s, b) in split_and_mat(5), g in prop::collection::vec(-2.0f64..2.0, 25)) {
        let sp = interval();
        let bigger = b.try_add(&gram(s.dim(), &g[..s.dim() * s.dim()])).unwrap();
        let rank = truncation_rank(s, &b, &sp).unwrap().max(truncation_rank(s, &bigger, &sp).unwrap());
        let flow = spectral_flow_with_rank(s, &b, &bigger, &sp, TOL, rank).unwrap();
        prop_assert!(flow.value <= 0, "index rose from {} to {}", flow.start.index, flow.end.index);
    }

    #[test]
    fn block_formula_matches_assembled_flow((s, l1, h1, l2, h2) in monotone_blocks(5)) {
        let sp = interval();
        let blocks = DiagonalBlocks { upper_start: h1, lower_start: l2, upper_end: l1, lower_end: h2 };
        let r = block_diag_sfl(
            s,
            Some((&blocks.upper_start, &blocks.upper_end)),
            Some((&blocks.lower_start, &blocks.lower_end)),
            &sp,
            TOL,
        )
        .unwrap();
        prop_assume!(r.warnings.is_empty());
        let (b0, b1) = blocks.assembled();
        let full = spectral_flow(s, &b0, &b1, &sp, TOL).unwrap();
        prop_assert!(full.warnings.is_empty());
        prop_assert_eq!(r.value, full.value);
    }

    #[test]
    fn monotone_counting((_s, low, high, _, _) in monotone_blocks(5)) {
        let sp = interval();
        let el = low.eigenvalues().unwrap();
        let eh = high.eigenvalues().unwrap();
        for k in 1..=12 {
            let a = sp.alpha(k).unwrap();
            let count = |e: &[f64]| e.iter().filter(|&&m| m > a).count();
            prop_assert!(count(&eh) >= count(&el));
        }
    }

    #[test]
    fn upper_witness_gives_positive_flow((s, l1, h1, l2, h2) in monotone_blocks(5)) {
        let sp = interval();
        let blocks = DiagonalBlocks { upper_start: h1, lower_start: h2, upper_end: l1, lower_end: l2 };
        let pair = ComparisonPair { role: ComparisonRole::UpperC, blocks };
        let v = check_upper_comparison(s, &pair, &sp, WTOL).unwrap();
        prop_assume!(v.outcome == Outcome::WitnessFound);
        let b = &pair.blocks;
        let r = block_diag_sfl(s, Some((&b.upper_start, &b.upper_end)), Some((&b.lower_start, &b.lower_end)), &sp, TOL).unwrap();
        prop_assert!(r.value >= 1, "flow {}", r.value);
    }

    #[test]
    fn lower_witness_gives_negative_flow((s, l1, h1, l2, h2) in monotone_blocks(5)) {
        let sp = interval();
        let blocks = DiagonalBlocks { upper_start: l1, lower_start: l2, upper_end: h1, lower_end: h2 };
        let pair = ComparisonPair { role: ComparisonRole::LowerD, blocks };
        let v = check_lower_comparison(s, &pair, &sp, WTOL).unwrap();
        prop_assume!(v.outcome == Outcome::WitnessFound);
        let b = &pair.blocks;
        let r = block_diag_sfl(s, Some((&b.upper_start, &b.upper_end)), Some((&b.lower_start, &b.lower_end)), &sp, TOL).unwrap();
        prop_assert!(r.value <= -1, "flow {}", r.value);
    }

    #[test]
    fn endpoint_swap_duality((s, l1, h1, l2, h2) in monotone_blocks(5)) {
        let sp = interval();
        let upper = ComparisonPair {
            role: ComparisonRole::UpperC,
            blocks: DiagonalBlocks { upper_start: h1.clone(), lower_start: h2.clone(), upper_end: l1.clone(), lower_end: l2.clone() },
        };
        let lower = ComparisonPair {
            role: ComparisonRole::LowerD,
            blocks: DiagonalBlocks { upper_start: l1, lower_start: l2, upper_end: h1, lower_end: h2 },
        };
        let u = check_upper_comparison(s, &upper, &sp, WTOL).unwrap();
        let l = check_lower_comparison(s, &lower, &sp, WTOL).unwrap();
        let u2 = check_upper_comparison(s, &upper, &sp, WTOL).unwrap();
        prop_assert_eq!(&u, &u2);
        prop_assert_eq!(u.outcome, l.outcome);
        prop_assert_eq!(u.witness, l.witness);
        prop_assert_eq!(u.warnings.len(), l.warnings.len());
    }

    #[test]
    fn envelope_witness_implies_scalar_comparison_witness(
        s in split(4),
        beta_0 in -20.0f64..20.0,
        spread_0 in 0.0f64..10.0,
        beta_1 in -20.0f64..20.0,
        spread_1 in 0.0f64..10.0,
    ) {
        let sp = interval();
        // sup of the top eigenvalue dominates inf of the bottom one at each endpoint
        let env = EnvelopeBounds { gamma_0: beta_0 + spread_0, gamma_1: beta_1 + spread_1, beta_0, beta_1 };
        let v = check_envelope(s, &env, &sp, WTOL).unwrap();
        prop_assume!(v.outcome == Outcome::WitnessFound);
        let scalar = |d: usize, c: f64| SymmetricMatrix::scalar(d, c);
        let found = match v.clause {
            Clause::EnvelopeDecreasing => {
                let blocks = DiagonalBlocks {
                    upper_start: scalar(s.p1, env.beta_0),
                    lower_start: scalar(s.p2, env.beta_0),
                    upper_end: scalar(s.p1, env.gamma_1),
                    lower_end: scalar(s.p2, env.gamma_1),
                };
                check_upper_comparison(s, &ComparisonPair { role: ComparisonRole::UpperC, blocks }, &sp, WTOL).unwrap()
            }
            _ => {
                let blocks = DiagonalBlocks {
                    upper_start: scalar(s.p1, env.gamma_0),
                    lower_start: scalar(s.p2, env.gamma_0),
                    upper_end: scalar(s.p1, env.beta_1),
                    lower_end: scalar(s.p2, env.beta_1),
                };
                check_lower_comparison(s, &ComparisonPair { role: ComparisonRole::LowerD, blocks }, &sp, WTOL).unwrap()
            }
        };
        prop_assert_eq!(found.outcome, Outcome::WitnessFound);
    }

    #[test]
    fn smallest_eigenvalue_clause_survives_positive_shifts(
        raw in mat(2),
        lift in 1e-3f64..10.0,
        c in 0.0f64..5.0,
    ) {
        let s = SignatureSplit::new(1, 1).unwrap();
        let sp = interval();
        // place mu_1(B) at alpha_1 + lift
        let b = raw.shifted(1.0 + lift - raw.eigenvalues().unwrap()[0]);
        let v = shrink_verdict_constant(s, &b, &sp, WTOL).unwrap();
        prop_assume!(v.clause == Clause::ShrinkSmallestEigenvalue && v.is_found());
        let w = shrink_verdict_constant(s, &b.shifted(c), &sp, WTOL).unwrap();
        prop_assert!(w.is_found());
        prop_assert_eq!(w.clause, Clause::ShrinkSmallestEigenvalue);
        prop_assert!(index(s, &b, &sp, TOL).unwrap().index <= -1);
    }

    #[test]
    fn shrink_verdict_on_scaled_domain_is_definitional((s, b) in split_and_mat(4), r in 0.2f64..3.0) {
        let sp = interval();
        let scaled = sp.scale(r).unwrap();
        let rank = truncation_rank(s, &b, &scaled).unwrap() + 5;
        let values: Vec<f64> = sp.take(rank).unwrap().into_iter().map(|a| a / (r * r)).collect();
        let custom = spectrum(DomainSpec::custom(&values)).unwrap();
        let a = shrink_verdict_constant(s, &b, &scaled, WTOL).unwrap();
        let c = shrink_verdict_constant(s, &b, &custom, WTOL).unwrap();
        prop_assert_eq!(a, c);
    }

    #[test]
    fn crossing_form_flips_under_negation(b in mat(3)) {
        let r = crossing_form_constant(&b, TOL).unwrap();
        let n = crossing_form_constant(&b.scaled(-1.0), TOL).unwrap();
        let flipped = match r.definite {
            Definiteness::PositiveDefinite => Definiteness::NegativeDefinite,
            Definiteness::NegativeDefinite => Definiteness::PositiveDefinite,
            other => other,
        };
        prop_assert_eq!(n.definite, flipped);
        prop_assert_eq!(n.regular, r.regular);
    }
}

#[test]
fn witness_points_are_strictly_inside() {
    // witnesses from the comparison search land in the block they name
    let sp = interval();
    let s = SignatureSplit::new(1, 1).unwrap();
    let pair = ComparisonPair {
        role: ComparisonRole::UpperC,
        blocks: DiagonalBlocks {
            upper_start: SymmetricMatrix::diag(&[2.0]),
            lower_start: SymmetricMatrix::diag(&[-0.5]),
            upper_end: SymmetricMatrix::diag(&[1.5]),
            lower_end: SymmetricMatrix::diag(&[-6.0]),
        },
    };
    let v = check_upper_comparison(s, &pair, &sp, WTOL).unwrap();
    let w = v.witness.unwrap();
    assert_eq!(w.block, DiagonalBlock::Lower);
    assert!(w.interval.0 < w.point() && w.point() < w.interval.1);
}
