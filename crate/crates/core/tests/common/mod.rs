#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use specflow_core::{reduced_block, DomainSpectrum, SignatureSplit, SymmetricMatrix};

pub fn sym_uniform(rng: &mut ChaCha8Rng, dim: usize, bound: f64) -> SymmetricMatrix {
    let mut rows = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in i..dim {
            let v = rng.gen_range(-bound..=bound);
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    SymmetricMatrix::from_rows(rows).unwrap()
}

/// `G G^T` with `G` uniform in `[-bound, bound]`.
pub fn psd_uniform(rng: &mut ChaCha8Rng, dim: usize, bound: f64) -> SymmetricMatrix {
    let g: Vec<Vec<f64>> = (0..dim)
        .map(|_| (0..dim).map(|_| rng.gen_range(-bound..=bound)).collect())
        .collect();
    let rows = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| (0..dim).map(|l| g[i][l] * g[j][l]).sum())
                .collect()
        })
        .collect();
    SymmetricMatrix::from_rows_symmetrized(rows, 1e-9).unwrap()
}

pub fn random_split(rng: &mut ChaCha8Rng, p: usize) -> SignatureSplit {
    let p1 = rng.gen_range(1..p);
    SignatureSplit::new(p1, p - p1).unwrap()
}

/// Smallest `|eigenvalue|` over the reduced blocks `k = 1..=n_blocks`.
pub fn min_block_gap(
    split: SignatureSplit,
    b: &SymmetricMatrix,
    spectrum: &DomainSpectrum,
    n_blocks: usize,
) -> f64 {
    (1..=n_blocks)
        .flat_map(|k| {
            reduced_block(split, b, spectrum.alpha(k).unwrap())
                .unwrap()
                .eigenvalues()
                .unwrap()
        })
        .fold(f64::INFINITY, |acc, e| acc.min(e.abs()))
}

/// Eigenvalues of a symmetric 2x2 matrix by the quadratic formula, ascending.
pub fn eig2(a: f64, b: f64, d: f64) -> (f64, f64) {
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - radius, mean + radius)
}

/// Permutation placing two splits side by side: positive parts first, then negative parts.
pub fn direct_sum(
    s1: SignatureSplit,
    b1: &SymmetricMatrix,
    s2: SignatureSplit,
    b2: &SymmetricMatrix,
) -> (SignatureSplit, SymmetricMatrix) {
    let order: Vec<(usize, usize)> = (0..s1.p1)
        .map(|i| (0, i))
        .chain((0..s2.p1).map(|i| (1, i)))
        .chain((s1.p1..s1.dim()).map(|i| (0, i)))
        .chain((s2.p1..s2.dim()).map(|i| (1, i)))
        .collect();
    let rows = order
        .iter()
        .map(|&(pa, ia)| {
            order
                .iter()
                .map(|&(pb, ib)| match (pa, pb) {
                    (0, 0) => b1.get(ia, ib),
                    (1, 1) => b2.get(ia, ib),
                    _ => 0.0,
                })
                .collect()
        })
        .collect();
    (
        SignatureSplit::new(s1.p1 + s2.p1, s1.p2 + s2.p2).unwrap(),
        SymmetricMatrix::from_rows(rows).unwrap(),
    )
}
