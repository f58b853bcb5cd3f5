//! Dense real symmetric matrices and their spectral data.
//!
//! Everything in this crate that is a "matrix" (coefficient Hessians, comparison
//! blocks, reduced blocks, assembled Galerkin operators) lives in a
//! [`SymmetricMatrix`]. Eigenvalues come from a cyclic Jacobi sweep, which is
//! unconditionally stable for symmetric input and needs no external LAPACK.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpecflowError};

/// Default relative stopping tolerance for the Jacobi sweep.
pub const EIGEN_TOL: f64 = 1e-14;

/// Maximum number of cyclic sweeps before giving up.
pub const MAX_SWEEPS: usize = 100;

/// Relative factor of the default zero tolerance, see [`SymmetricMatrix::default_zero_tol`].
pub const ZERO_TOL_FACTOR: f64 = 1e-9;

/// Dense real symmetric `p x p` matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    /// Build from rows. Symmetry must hold exactly.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(SpecflowError::MalformedMatrix("no rows".into()));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(SpecflowError::MalformedMatrix(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(SpecflowError::MalformedMatrix(format!(
                    "non-finite entry {bad} in row {i}"
                )));
            }
            data.extend_from_slice(row);
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let gap = (data[i * dim + j] - data[j * dim + i]).abs();
                if gap != 0.0 {
                    return Err(SpecflowError::Asymmetric {
                        row: i,
                        col: j,
                        gap,
                    });
                }
            }
        }
        Ok(Self { dim, data })
    }

    /// Build from rows, averaging `(M + M^T)/2` when the asymmetry is at most `max_gap`.
    pub fn from_rows_symmetrized(rows: Vec<Vec<f64>>, max_gap: f64) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(SpecflowError::MalformedMatrix(
                "matrix must be square and non-empty".into(),
            ));
        }
        let mut sym = rows.clone();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let gap = (rows[i][j] - rows[j][i]).abs();
                if gap > max_gap {
                    return Err(SpecflowError::Asymmetric {
                        row: i,
                        col: j,
                        gap,
                    });
                }
                let avg = 0.5 * (rows[i][j] + rows[j][i]);
                sym[i][j] = avg;
                sym[j][i] = avg;
            }
        }
        Self::from_rows(sym)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = value;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.data[i * values.len() + i] = v;
        }
        m
    }

    /// Block-diagonal assembly `diag(upper, lower)`.
    pub fn block_diag(upper: &Self, lower: &Self) -> Self {
        let dim = upper.dim + lower.dim;
        let mut m = Self::zeros(dim);
        for i in 0..upper.dim {
            for j in 0..upper.dim {
                m.data[i * dim + j] = upper.get(i, j);
            }
        }
        let off = upper.dim;
        for i in 0..lower.dim {
            for j in 0..lower.dim {
                m.data[(off + i) * dim + off + j] = lower.get(i, j);
            }
        }
        m
    }

    /// Build from a row-major buffer whose symmetry the caller guarantees.
    pub(crate) fn from_raw(dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        let mut m = Self { dim, data };
        // mirror the upper triangle so symmetry is exact
        for i in 0..dim {
            for j in (i + 1)..dim {
                m.data[j * dim + i] = m.data[i * dim + j];
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `1e-9 * max(1, |M|_max)`.
    pub fn default_zero_tol(&self) -> f64 {
        ZERO_TOL_FACTOR * self.max_abs().max(1.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// `self + t (other - self)`, returning `other` exactly at `t = 1`.
    pub fn lerp(&self, other: &Self, t: f64) -> Result<Self> {
        self.check_same_dim(other)?;
        if t == 1.0 {
            return Ok(other.clone());
        }
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + t * (b - a))
                .collect(),
        })
    }

    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] += c;
        }
        m
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(SpecflowError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
                context: "matrix arithmetic",
            });
        }
        Ok(())
    }

    pub fn eigen(&self) -> Result<EigenDecomposition> {
        eigen_decompose(self, EIGEN_TOL)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigen()?.eigenvalues)
    }

    pub fn inertia(&self, zero_tol: f64) -> Result<InertiaTriple> {
        inertia(self, zero_tol)
    }

    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        is_psd(self, tol)
    }

    pub fn operator_norm(&self) -> Result<f64> {
        operator_norm(self)
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymmetricMatrix {
    type Error = SpecflowError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<SymmetricMatrix> for Vec<Vec<f64>> {
    fn from(m: SymmetricMatrix) -> Self {
        m.rows()
    }
}

/// Ascending eigenvalues with orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[i]` pairs with `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<f64>>,
    /// `max |M - Q Λ Q^T|`.
    pub residual: f64,
}

impl EigenDecomposition {
    pub fn smallest(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn largest(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// `max |Q^T Q - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.eigenvectors.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = self.eigenvectors[i]
                    .iter()
                    .zip(&self.eigenvectors[j])
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Counts of negative, zero and positive eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InertiaTriple {
    pub n_neg: usize,
    pub n_zero: usize,
    pub n_pos: usize,
}

impl InertiaTriple {
    pub fn dim(&self) -> usize {
        self.n_neg + self.n_zero + self.n_pos
    }

    pub fn signature(&self) -> i64 {
        self.n_pos as i64 - self.n_neg as i64
    }

    pub fn morse(&self) -> usize {
        self.n_neg
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.n_zero == 0
    }
}

/// Cyclic Jacobi eigendecomposition.
///
/// Converges when the off-diagonal Frobenius mass drops to `tol * |M|_F`.
/// Eigenpairs are returned in ascending order, ties keeping their original
/// column order, so repeated calls are bit-identical.
pub fn eigen_decompose(m: &SymmetricMatrix, tol: f64) -> Result<EigenDecomposition> {
    let n = m.dim;
    let mut a = m.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.frobenius();
    let target = tol * scale;

    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= target {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(SpecflowError::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // below rounding level of both diagonal entries: drop it
                if apq.abs() <= 0.25 * f64::EPSILON * (app.abs() + aqq.abs()) {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row * n + col]).collect())
        .collect();

    let mut residual = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let rec: f64 = eigenvalues
                .iter()
                .zip(&eigenvectors)
                .map(|(lam, q)| lam * q[i] * q[j])
                .sum();
            residual = residual.max((m.get(i, j) - rec).abs());
        }
    }

    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
        residual,
    })
}

/// Classifies eigenvalues with `|mu| <= zero_tol` as zero.
pub fn inertia(m: &SymmetricMatrix, zero_tol: f64) -> Result<InertiaTriple> {
    Ok(inertia_of(&m.eigenvalues()?, zero_tol))
}

pub(crate) fn inertia_of(eigenvalues: &[f64], zero_tol: f64) -> InertiaTriple {
    let mut t = InertiaTriple {
        n_neg: 0,
        n_zero: 0,
        n_pos: 0,
    };
    for &mu in eigenvalues {
        if mu.abs() <= zero_tol {
            t.n_zero += 1;
        } else if mu < 0.0 {
            t.n_neg += 1;
        } else {
            t.n_pos += 1;
        }
    }
    t
}

/// True iff the smallest eigenvalue is at least `-tol`.
pub fn is_psd(m: &SymmetricMatrix, tol: f64) -> Result<bool> {
    Ok(m.eigen()?.smallest() >= -tol)
}

/// Spectral norm `max(|mu_1|, |mu_p|)`.
pub fn operator_norm(m: &SymmetricMatrix) -> Result<f64> {
    let e = m.eigen()?;
    Ok(e.smallest().abs().max(e.largest().abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(a: f64, b: f64, d: f64) -> SymmetricMatrix {
        SymmetricMatrix::from_rows(vec![vec![a, b], vec![b, d]]).unwrap()
    }

    /// Closed-form eigenvalues of `[[a, b], [b, d]]`, ascending.
    fn quad_formula(a: f64, b: f64, d: f64) -> (f64, f64) {
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mean - rad, mean + rad)
    }

    #[test]
    fn worked_example_matrices() {
        let e = m2(8.0, -2.0, 5.0).eigen().unwrap();
        assert!((e.eigenvalues[0] - 4.0).abs() < 1e-12);
        assert!((e.eigenvalues[1] - 9.0).abs() < 1e-12);

        let e = m2(-3.0, 1.0, 2.0).eigen().unwrap();
        let s = 29f64.sqrt();
        assert!((e.eigenvalues[0] - (-1.0 - s) / 2.0).abs() < 1e-12);
        assert!((e.eigenvalues[1] - (s - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn identity_is_fixed() {
        let e = SymmetricMatrix::identity(3).eigen().unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);
        assert!(e.orthogonality_error() < 1e-15);
        assert_eq!(e.residual, 0.0);
    }

    #[test]
    fn inertia_examples() {
        let t = inertia(&SymmetricMatrix::diag(&[-1.0, 1.0]), 1e-9).unwrap();
        assert_eq!((t.n_neg, t.n_zero, t.n_pos), (1, 0, 1));
        assert_eq!(t.signature(), 0);

        let (lo, hi) = quad_formula(-7.0, 2.0, -6.0);
        assert!(lo < 0.0 && hi < 0.0);
        let t = inertia(&m2(-7.0, 2.0, -6.0), 1e-9).unwrap();
        assert_eq!((t.n_neg, t.n_zero, t.n_pos), (2, 0, 0));
        assert_eq!(t.signature(), -2);

        let t = inertia(&SymmetricMatrix::zeros(2), 1e-12).unwrap();
        assert_eq!((t.n_neg, t.n_zero, t.n_pos), (0, 2, 0));
    }

    #[test]
    fn psd_examples() {
        let diff = SymmetricMatrix::diag(&[5.0, 3.0])
            .try_sub(&SymmetricMatrix::diag(&[1.0, 3.0]))
            .unwrap();
        assert!(is_psd(&diff, 1e-12).unwrap());
        assert!(!is_psd(&SymmetricMatrix::diag(&[-1.0, 1.0]), 1e-12).unwrap());
        let (lo, _) = quad_formula(1.0, 2.0, 1.0);
        assert_eq!(lo, -1.0);
        assert!(!is_psd(&m2(1.0, 2.0, 1.0), 1e-12).unwrap());
    }

    #[test]
    fn norm_examples() {
        assert_eq!(
            operator_norm(&SymmetricMatrix::diag(&[5.0, 3.0])).unwrap(),
            5.0
        );
        assert!((operator_norm(&m2(8.0, -2.0, 5.0)).unwrap() - 9.0).abs() < 1e-12);
        assert_eq!(operator_norm(&SymmetricMatrix::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn rejects_asymmetric_and_ragged() {
        assert!(matches!(
            SymmetricMatrix::from_rows(vec![vec![1.0, 2.0], vec![2.5, 1.0]]),
            Err(SpecflowError::Asymmetric { .. })
        ));
        assert!(matches!(
            SymmetricMatrix::from_rows(vec![vec![1.0, 2.0], vec![2.0]]),
            Err(SpecflowError::MalformedMatrix(_))
        ));
        assert!(SymmetricMatrix::from_rows(vec![]).is_err());
    }

    #[test]
    fn symmetrize_small_gap_only() {
        let m = SymmetricMatrix::from_rows_symmetrized(
            vec![vec![1.0, 2.0], vec![2.0 + 1e-13, 1.0]],
            1e-12,
        )
        .unwrap();
        assert_eq!(m.get(0, 1), m.get(1, 0));
        assert!(SymmetricMatrix::from_rows_symmetrized(
            vec![vec![1.0, 2.0], vec![2.1, 1.0]],
            1e-12
        )
        .is_err());
    }

    #[test]
    fn quadratic_formula_agrees_on_grid() {
        for a in [-4.0, -0.5, 0.0, 3.0] {
            for b in [-2.0, 0.0, 1e-8, 5.0] {
                for d in [-1.0, 0.0, 2.5] {
                    let (lo, hi) = quad_formula(a, b, d);
                    let e = m2(a, b, d).eigen().unwrap();
                    assert!((e.eigenvalues[0] - lo).abs() < 1e-12);
                    assert!((e.eigenvalues[1] - hi).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn ties_are_deterministic() {
        let m = SymmetricMatrix::diag(&[2.0, 1.0, 2.0]);
        let e = m.eigen().unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 2.0, 2.0]);
        assert_eq!(e.eigenvectors[1], vec![1.0, 0.0, 0.0]);
        assert_eq!(e.eigenvectors[2], vec![0.0, 0.0, 1.0]);
    }
}
