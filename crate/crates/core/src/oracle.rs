//! Finite Galerkin truncation of `L_λ = T + K_λ` in the Dirichlet eigenbasis.
//!
//! Basis vectors are `f_k e_i` with `f_k` normalised so that `∫ |f_k'|^2 = 1`,
//! hence `∫ f_k f_l = δ_kl / alpha_k`. Index `(k - 1) p + i` is used for the
//! pair `(k, i)`. The matrix entry for `(f_k e_i, f_l e_j)` is
//! `δ_kl (-A)_ij - ∫ B_ij(λ, x) f_k f_l dx`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpecflowError};
use crate::index::{truncation_rank, SignatureSplit};
use crate::quadrature::{composite_nodes, QuadratureRule};
use crate::spectra::{DomainSpec, DomainSpectrum};
use crate::symmat::{eigen_decompose, SymmetricMatrix, EIGEN_TOL};

/// Default number of uniform λ samples for crossing localisation.
pub const DEFAULT_SAMPLES: usize = 256;
/// Crossings are located to this width in λ.
pub const CROSSING_LAMBDA_TOL: f64 = 1e-10;
/// Roots closer than this are treated as one crossing.
pub const CROSSING_MERGE_TOL: f64 = 1e-7;
/// Relative size of an eigenvalue counted as kernel at a located crossing.
pub const KERNEL_TOL: f64 = 1e-7;
/// Step of the central difference for the path derivative.
pub const FD_STEP: f64 = 1e-5;
/// Gauss–Legendre points per panel.
pub const GL_ORDER: usize = 10;
const MIN_PANELS: usize = 32;
const MAX_POLY_DEGREE: usize = 6;

/// One entry `B_ij(x)` of an x-dependent coefficient on `[0, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryProfile {
    Constant(f64),
    /// Coefficients `c_0, c_1, ..` of `sum c_n x^n`, degree at most 6.
    Polynomial(Vec<f64>),
    /// Values on the uniform grid `x_m = m L / (len - 1)`, linearly interpolated.
    Tabulated(Vec<f64>),
}

impl EntryProfile {
    fn validate(&self) -> Result<()> {
        let values: &[f64] = match self {
            Self::Constant(c) => std::slice::from_ref(c),
            Self::Polynomial(c) => {
                if c.is_empty() || c.len() > MAX_POLY_DEGREE + 1 {
                    return Err(SpecflowError::MalformedMatrix(format!(
                        "polynomial entry needs 1 to {} coefficients, got {}",
                        MAX_POLY_DEGREE + 1,
                        c.len()
                    )));
                }
                c
            }
            Self::Tabulated(t) => {
                if t.len() < 2 {
                    return Err(SpecflowError::MalformedMatrix(
                        "tabulated entry needs at least both endpoint values".into(),
                    ));
                }
                t
            }
        };
        if values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(SpecflowError::MalformedMatrix(
                "coefficient profile contains a non-finite value".into(),
            ))
        }
    }

    /// Value at `x ∈ [0, length]`.
    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci),
            Self::Tabulated(t) => {
                let cells = t.len() - 1;
                let s = (x / length).clamp(0.0, 1.0) * cells as f64;
                let m = (s.floor() as usize).min(cells - 1);
                let frac = s - m as f64;
                t[m] + frac * (t[m + 1] - t[m])
            }
        }
    }

    fn cells(&self) -> Option<usize> {
        match self {
            Self::Tabulated(t) => Some(t.len() - 1),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldRepr {
    length: f64,
    entries: Vec<Vec<EntryProfile>>,
}

/// Symmetric matrix field `B(x)` on the interval `[0, length]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldRepr", into = "FieldRepr")]
pub struct CoefficientField1D {
    length: f64,
    dim: usize,
    /// Upper triangle, row-major.
    upper: Vec<EntryProfile>,
}

impl TryFrom<FieldRepr> for CoefficientField1D {
    type Error = SpecflowError;
    fn try_from(r: FieldRepr) -> Result<Self> {
        Self::new(r.length, r.entries)
    }
}

impl From<CoefficientField1D> for FieldRepr {
    fn from(f: CoefficientField1D) -> Self {
        let entries = (0..f.dim)
            .map(|i| (0..f.dim).map(|j| f.entry(i, j).clone()).collect())
            .collect();
        FieldRepr {
            length: f.length,
            entries,
        }
    }
}

impl CoefficientField1D {
    /// Field from a full square table of profiles; mirrored profiles must be equal.
    pub fn new(length: f64, entries: Vec<Vec<EntryProfile>>) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(SpecflowError::InvalidDomain(format!(
                "field length must be positive, got {length}"
            )));
        }
        let dim = entries.len();
        if dim == 0 {
            return Err(SpecflowError::EmptyInput("coefficient field"));
        }
        for row in &entries {
            if row.len() != dim {
                return Err(SpecflowError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                    context: "coefficient field row",
                });
            }
        }
        let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in i..dim {
                let e = &entries[i][j];
                e.validate()?;
                if e != &entries[j][i] {
                    return Err(SpecflowError::MalformedMatrix(format!(
                        "coefficient field profiles ({i},{j}) and ({j},{i}) differ"
                    )));
                }
                upper.push(e.clone());
            }
        }
        Ok(Self { length, dim, upper })
    }

    /// The x-independent field `B(x) = b`.
    pub fn constant(length: f64, b: &SymmetricMatrix) -> Result<Self> {
        let entries = b
            .rows()
            .into_iter()
            .map(|row| row.into_iter().map(EntryProfile::Constant).collect())
            .collect();
        Self::new(length, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn entry(&self, i: usize, j: usize) -> &EntryProfile {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.upper[i * self.dim - i * (i + 1) / 2 + j]
    }

    pub fn evaluate(&self, x: f64) -> SymmetricMatrix {
        let rows = (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| self.entry(i, j).eval(x, self.length))
                    .collect()
            })
            .collect();
        SymmetricMatrix::from_rows(rows).expect("profiles are finite and symmetric")
    }

    fn table_cells(&self) -> Vec<usize> {
        self.upper.iter().filter_map(EntryProfile::cells).collect()
    }
}

/// `λ ↦ B_λ` for x-independent coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixPath {
    Linear {
        start: SymmetricMatrix,
        end: SymmetricMatrix,
    },
    /// Piecewise linear through `(λ, B)` nodes; λ strictly increasing from 0 to 1.
    Sampled(Vec<(f64, SymmetricMatrix)>),
}

impl MatrixPath {
    pub fn linear(start: SymmetricMatrix, end: SymmetricMatrix) -> Result<Self> {
        if start.dim() != end.dim() {
            return Err(SpecflowError::DimensionMismatch {
                expected: start.dim(),
                found: end.dim(),
                context: "path endpoints",
            });
        }
        Ok(Self::Linear { start, end })
    }

    pub fn constant(b: SymmetricMatrix) -> Self {
        Self::Linear {
            start: b.clone(),
            end: b,
        }
    }

    pub fn sampled(nodes: Vec<(f64, SymmetricMatrix)>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(SpecflowError::EmptyInput("sampled path needs two nodes"));
        }
        if nodes[0].0 != 0.0 || nodes[nodes.len() - 1].0 != 1.0 {
            return Err(SpecflowError::OutOfRange(
                "sampled path must start at 0 and end at 1".into(),
            ));
        }
        if !nodes.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(SpecflowError::OutOfRange(
                "sampled path parameters must increase strictly".into(),
            ));
        }
        let dim = nodes[0].1.dim();
        if let Some((_, m)) = nodes.iter().find(|(_, m)| m.dim() != dim) {
            return Err(SpecflowError::DimensionMismatch {
                expected: dim,
                found: m.dim(),
                context: "sampled path node",
            });
        }
        Ok(Self::Sampled(nodes))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Linear { start, .. } => start.dim(),
            Self::Sampled(nodes) => nodes[0].1.dim(),
        }
    }

    /// `B_λ`; λ outside `[0, 1]` extrapolates linearly from the nearest segment.
    pub fn evaluate(&self, lambda: f64) -> SymmetricMatrix {
        match self {
            Self::Linear { start, end } => {
                if lambda == 0.0 {
                    start.clone()
                } else if lambda == 1.0 {
                    end.clone()
                } else {
                    start.lerp(end, lambda).expect("endpoint dimensions agree")
                }
            }
            Self::Sampled(nodes) => {
                let seg = nodes
                    .windows(2)
                    .position(|w| lambda <= w[1].0)
                    .unwrap_or(nodes.len() - 2);
                let (l0, b0) = &nodes[seg];
                let (l1, b1) = &nodes[seg + 1];
                let t = (lambda - l0) / (l1 - l0);
                if t == 0.0 {
                    b0.clone()
                } else if t == 1.0 {
                    b1.clone()
                } else {
                    b0.lerp(b1, t).expect("node dimensions agree")
                }
            }
        }
    }

    /// Matrices whose convex hull contains every `B_λ`, λ in `[0, 1]`.
    fn hull(&self) -> Vec<&SymmetricMatrix> {
        match self {
            Self::Linear { start, end } => vec![start, end],
            Self::Sampled(nodes) => nodes.iter().map(|(_, m)| m).collect(),
        }
    }
}

/// `B(λ, x) = (1 - λ) B_0(x) + λ B_1(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldPath {
    pub start: CoefficientField1D,
    pub end: CoefficientField1D,
}

impl FieldPath {
    pub fn new(start: CoefficientField1D, end: CoefficientField1D) -> Result<Self> {
        if start.dim() != end.dim() {
            return Err(SpecflowError::DimensionMismatch {
                expected: start.dim(),
                found: end.dim(),
                context: "field path endpoints",
            });
        }
        if (start.length() - end.length()).abs() > 1e-12 * start.length() {
            return Err(SpecflowError::InvalidDomain(format!(
                "field path endpoints live on different intervals ({} and {})",
                start.length(),
                end.length()
            )));
        }
        Ok(Self { start, end })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OraclePath {
    Matrix(MatrixPath),
    Field(FieldPath),
}

impl OraclePath {
    pub fn dim(&self) -> usize {
        match self {
            Self::Matrix(m) => m.dim(),
            Self::Field(f) => f.start.dim(),
        }
    }
}

impl From<MatrixPath> for OraclePath {
    fn from(p: MatrixPath) -> Self {
        Self::Matrix(p)
    }
}

impl From<FieldPath> for OraclePath {
    fn from(p: FieldPath) -> Self {
        Self::Field(p)
    }
}

/// Truncated operator in the basis `f_k e_i`, `k <= n_blocks`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalerkinMatrix {
    pub n_blocks: usize,
    pub split: SignatureSplit,
    pub matrix: SymmetricMatrix,
}

impl GalerkinMatrix {
    /// The `p x p` block coupling modes `k` and `l`, 1-based.
    pub fn block(&self, k: usize, l: usize) -> Vec<Vec<f64>> {
        let p = self.split.dim();
        (0..p)
            .map(|i| {
                (0..p)
                    .map(|j| self.matrix.get((k - 1) * p + i, (l - 1) * p + j))
                    .collect()
            })
            .collect()
    }

    /// Largest entry outside the diagonal `p x p` blocks.
    pub fn max_off_block(&self) -> f64 {
        let p = self.split.dim();
        let n = self.matrix.dim();
        let mut m = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                if r / p != c / p {
                    m = m.max(self.matrix.get(r, c).abs());
                }
            }
        }
        m
    }
}

/// Quadrature data for x-dependent assembly: `w_q f_k(x_q) f_l(x_q)` for `k <= l`.
struct FieldData {
    nodes: Vec<f64>,
    products: Vec<Vec<f64>>,
}

/// Reusable assembler for one path, spectrum and truncation.
pub struct GalerkinAssembler<'a> {
    split: SignatureSplit,
    path: &'a OraclePath,
    n_blocks: usize,
    alphas: Vec<f64>,
    field: Option<FieldData>,
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

/// Panel count of at least `max(32, 4 n_blocks)` that is a multiple of every table grid.
fn panel_count(cells: &[usize], n_blocks: usize) -> usize {
    let min = MIN_PANELS.max(4 * n_blocks);
    let step = cells.iter().fold(1usize, |acc, &c| lcm(acc, c));
    if step > 64 * min {
        // grids too incommensurate to align; fall back to a fine uniform split
        return 16 * min;
    }
    step * min.div_ceil(step)
}

impl<'a> GalerkinAssembler<'a> {
    pub fn new(
        split: SignatureSplit,
        path: &'a OraclePath,
        spectrum: &DomainSpectrum,
        n_blocks: usize,
    ) -> Result<Self> {
        if n_blocks == 0 {
            return Err(SpecflowError::OutOfRange(
                "n_blocks must be at least 1".into(),
            ));
        }
        if path.dim() != split.dim() {
            return Err(SpecflowError::DimensionMismatch {
                expected: split.dim(),
                found: path.dim(),
                context: "oracle path",
            });
        }
        let alphas = spectrum.take(n_blocks)?;
        let field = match path {
            OraclePath::Matrix(_) => None,
            OraclePath::Field(f) => Some(field_data(f, spectrum, &alphas)?),
        };
        Ok(Self {
            split,
            path,
            n_blocks,
            alphas,
            field,
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn assemble(&self, lambda: f64) -> GalerkinMatrix {
        let p = self.split.dim();
        let n = p * self.n_blocks;
        let mut data = vec![0.0; n * n];
        let minus_a = |i: usize| if i < self.split.p1 { 1.0 } else { -1.0 };
        match (self.path, &self.field) {
            (OraclePath::Matrix(m), _) => {
                let b = m.evaluate(lambda);
                for (k, &alpha) in self.alphas.iter().enumerate() {
                    for i in 0..p {
                        for j in 0..p {
                            let mut v = -b.get(i, j) / alpha;
                            if i == j {
                                v += minus_a(i);
                            }
                            data[(k * p + i) * n + k * p + j] = v;
                        }
                    }
                }
            }
            (OraclePath::Field(f), Some(fd)) => {
                let len = f.start.length();
                for i in 0..p {
                    for j in i..p {
                        let s = f.start.entry(i, j);
                        let e = f.end.entry(i, j);
                        let b: Vec<f64> = fd
                            .nodes
                            .iter()
                            .map(|&x| (1.0 - lambda) * s.eval(x, len) + lambda * e.eval(x, len))
                            .collect();
                        let mut pair = 0;
                        for k in 0..self.n_blocks {
                            for l in k..self.n_blocks {
                                let integral: f64 =
                                    fd.products[pair].iter().zip(&b).map(|(w, bq)| w * bq).sum();
                                pair += 1;
                                let mut v = -integral;
                                if k == l && i == j {
                                    v += minus_a(i);
                                }
                                let (r, c) = (k * p + i, l * p + j);
                                data[r * n + c] = v;
                                data[c * n + r] = v;
                                let (r, c) = (k * p + j, l * p + i);
                                data[r * n + c] = v;
                                data[c * n + r] = v;
                            }
                        }
                    }
                }
            }
            (OraclePath::Field(_), None) => unreachable!("field data built in new"),
        }
        GalerkinMatrix {
            n_blocks: self.n_blocks,
            split: self.split,
            matrix: SymmetricMatrix::from_raw(n, data),
        }
    }
}

fn field_data(f: &FieldPath, spectrum: &DomainSpectrum, alphas: &[f64]) -> Result<FieldData> {
    let length = match spectrum.source() {
        DomainSpec::Interval { length } => length * spectrum.radius_scale(),
        other => {
            return Err(SpecflowError::UnsupportedDomain(format!(
                "x-dependent coefficients need an interval domain, got {other:?}"
            )))
        }
    };
    let len = f.start.length();
    if (len - length).abs() > 1e-12 * length {
        return Err(SpecflowError::InvalidDomain(format!(
            "field is defined on [0, {len}] but the domain is [0, {length}]"
        )));
    }
    let mut cells = f.start.table_cells();
    cells.extend(f.end.table_cells());
    let n_blocks = alphas.len();
    let rule = QuadratureRule::GaussLegendre {
        order: GL_ORDER,
        panels: panel_count(&cells, n_blocks),
    };
    let qn = composite_nodes(0.0, len, rule);
    let nodes: Vec<f64> = qn.iter().map(|&(x, _)| x).collect();
    let norm = (2.0 / len).sqrt();
    let basis: Vec<Vec<f64>> = (1..=n_blocks)
        .map(|k| {
            let scale = norm / alphas[k - 1].sqrt();
            let freq = k as f64 * std::f64::consts::PI / len;
            nodes.iter().map(|&x| scale * (freq * x).sin()).collect()
        })
        .collect();
    let mut products = Vec::with_capacity(n_blocks * (n_blocks + 1) / 2);
    for k in 0..n_blocks {
        for l in k..n_blocks {
            products.push(
                qn.iter()
                    .enumerate()
                    .map(|(q, &(_, w))| w * basis[k][q] * basis[l][q])
                    .collect(),
            );
        }
    }
    Ok(FieldData { nodes, products })
}

/// Truncated matrix of `L_λ` with `n_blocks` Dirichlet modes.
pub fn assemble(
    split: SignatureSplit,
    path: &OraclePath,
    lambda: f64,
    spectrum: &DomainSpectrum,
    n_blocks: usize,
) -> Result<GalerkinMatrix> {
    Ok(GalerkinAssembler::new(split, path, spectrum, n_blocks)?.assemble(lambda))
}

/// `truncation_rank + 2` over the path's hull; for fields the sup norm is sampled on a grid.
pub fn default_n_blocks(
    split: SignatureSplit,
    path: &OraclePath,
    spectrum: &DomainSpectrum,
) -> Result<usize> {
    let rank = match path {
        OraclePath::Matrix(m) => m
            .hull()
            .into_iter()
            .map(|b| truncation_rank(split, b, spectrum))
            .try_fold(1usize, |acc, r| r.map(|r| acc.max(r)))?,
        OraclePath::Field(f) => {
            let mut rank = 1usize;
            for field in [&f.start, &f.end] {
                for m in 0..=256 {
                    let x = field.length() * m as f64 / 256.0;
                    rank = rank.max(truncation_rank(split, &field.evaluate(x), spectrum)?);
                }
            }
            rank
        }
    };
    Ok(rank + 2)
}

fn morse_checked(m: &SymmetricMatrix, lambda: f64, tol: f64) -> Result<usize> {
    let eig = m.eigenvalues()?;
    let threshold = tol * m.max_abs().max(1.0);
    if let Some(&e) = eig.iter().find(|e| e.abs() <= threshold) {
        return Err(SpecflowError::SingularEndpoint {
            lambda,
            eigenvalue: e,
        });
    }
    Ok(eig.iter().filter(|&&e| e < 0.0).count())
}

/// `mu_Morse(L_0) - mu_Morse(L_1)` of the truncated path.
pub fn oracle_sfl_endpoint(
    split: SignatureSplit,
    path: &OraclePath,
    spectrum: &DomainSpectrum,
    n_blocks: usize,
    tol: f64,
) -> Result<i64> {
    let asm = GalerkinAssembler::new(split, path, spectrum, n_blocks)?;
    endpoint_value(&asm, tol)
}

fn endpoint_value(asm: &GalerkinAssembler<'_>, tol: f64) -> Result<i64> {
    let m0 = morse_checked(&asm.assemble(0.0).matrix, 0.0, tol)?;
    let m1 = morse_checked(&asm.assemble(1.0).matrix, 1.0, tol)?;
    Ok(m0 as i64 - m1 as i64)
}

/// Endpoint value at `n_blocks` and at `n_blocks + 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergenceCheck {
    pub n_blocks: usize,
    pub value: i64,
    pub refined_value: i64,
    pub stable: bool,
}

pub fn convergence_check(
    split: SignatureSplit,
    path: &OraclePath,
    spectrum: &DomainSpectrum,
    n_blocks: usize,
    tol: f64,
) -> Result<ConvergenceCheck> {
    let value = oracle_sfl_endpoint(split, path, spectrum, n_blocks, tol)?;
    let refined_value = oracle_sfl_endpoint(split, path, spectrum, n_blocks + 2, tol)?;
    Ok(ConvergenceCheck {
        n_blocks,
        value,
        refined_value,
        stable: value == refined_value,
    })
}

/// One located crossing of the truncated path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub lambda: f64,
    pub kernel_dim: usize,
    /// Signature of the crossing form on the kernel.
    pub signature: i64,
    pub form_eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    /// Sum of crossing signatures.
    pub value: i64,
    /// Ascending in λ.
    pub crossings: Vec<Crossing>,
    pub n_blocks: usize,
    pub n_samples: usize,
}

/// Spectral flow as the sum of crossing-form signatures along the truncated path.
///
/// Sign changes of each ordered eigenvalue between samples are bisected; sampled
/// local minima of `|e_j|` that come close to zero are refined by golden-section
/// search to catch double crossings and tangencies inside one sampling cell.
pub fn oracle_sfl_crossings(
    split: SignatureSplit,
    path: &OraclePath,
    spectrum: &DomainSpectrum,
    n_blocks: usize,
    n_samples: usize,
    tol: f64,
) -> Result<CrossingReport> {
    if n_samples < 2 {
        return Err(SpecflowError::OutOfRange(format!(
            "at least 2 samples are needed, got {n_samples}"
        )));
    }
    let asm = GalerkinAssembler::new(split, path, spectrum, n_blocks)?;
    endpoint_value(&asm, tol)?;

    let eigs = |lambda: f64| -> Result<Vec<f64>> { asm.assemble(lambda).matrix.eigenvalues() };
    let grid: Vec<f64> = (0..n_samples)
        .map(|i| i as f64 / (n_samples - 1) as f64)
        .collect();
    let samples = grid.iter().map(|&l| eigs(l)).collect::<Result<Vec<_>>>()?;
    let dim = samples[0].len();
    let kernel_tol = |lambda: f64| KERNEL_TOL * asm.assemble(lambda).matrix.max_abs().max(1.0);

    let mut roots: Vec<(f64, usize)> = Vec::new();
    for j in 0..dim {
        let e: Vec<f64> = samples.iter().map(|s| s[j]).collect();
        let side = |v: f64| v >= 0.0;
        for i in 0..n_samples - 1 {
            if side(e[i]) != side(e[i + 1]) {
                roots.push((bisect(&eigs, j, grid[i], grid[i + 1], side(e[i]))?, j));
            }
        }
        for i in 1..n_samples - 1 {
            let s = if side(e[i]) { 1.0 } else { -1.0 };
            if side(e[i - 1]) != side(e[i]) || side(e[i + 1]) != side(e[i]) {
                continue;
            }
            let (a, b, c) = (s * e[i - 1], s * e[i], s * e[i + 1]);
            let spread = (e[i] - e[i - 1]).abs().max((e[i + 1] - e[i]).abs());
            if !(b <= a && b <= c && b <= 2.0 * spread) {
                continue;
            }
            let (lmin, vmin) = golden_min(&eigs, j, s, grid[i - 1], grid[i + 1])?;
            if vmin < 0.0 {
                roots.push((bisect(&eigs, j, grid[i - 1], lmin, s > 0.0)?, j));
                roots.push((bisect(&eigs, j, lmin, grid[i + 1], s < 0.0)?, j));
            } else if vmin <= kernel_tol(lmin) {
                roots.push((lmin, j));
            }
        }
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    roots.dedup_by(|b, a| a.1 == b.1 && (b.0 - a.0).abs() <= CROSSING_MERGE_TOL);

    let mut crossings = Vec::new();
    let mut start = 0;
    while start < roots.len() {
        let mut end = start + 1;
        while end < roots.len() && roots[end].0 - roots[end - 1].0 <= CROSSING_MERGE_TOL {
            end += 1;
        }
        let cluster = &roots[start..end];
        let lambda = cluster.iter().map(|r| r.0).sum::<f64>() / cluster.len() as f64;
        let mut idx: Vec<usize> = cluster.iter().map(|r| r.1).collect();
        idx.sort_unstable();
        idx.dedup();
        crossings.push(crossing_form(&asm, lambda, &idx, tol)?);
        start = end;
    }
    Ok(CrossingReport {
        value: crossings.iter().map(|c| c.signature).sum(),
        crossings,
        n_blocks,
        n_samples,
    })
}

/// Root of the `j`-th ordered eigenvalue in `[lo, hi]`; `lo_nonneg` is the side at `lo`.
fn bisect(
    eigs: &impl Fn(f64) -> Result<Vec<f64>>,
    j: usize,
    mut lo: f64,
    mut hi: f64,
    lo_nonneg: bool,
) -> Result<f64> {
    while hi - lo > CROSSING_LAMBDA_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (eigs(mid)?[j] >= 0.0) == lo_nonneg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimiser of `s e_j(λ)` on `[lo, hi]` and the minimum value.
fn golden_min(
    eigs: &impl Fn(f64) -> Result<Vec<f64>>,
    j: usize,
    s: f64,
    mut lo: f64,
    mut hi: f64,
) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |l: f64| -> Result<f64> { Ok(s * eigs(l)?[j]) };
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > CROSSING_LAMBDA_TOL {
        if f1 < 0.0 {
            return Ok((x1, f1));
        }
        if f2 < 0.0 {
            return Ok((x2, f2));
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Crossing form `V^T L' V` on the eigenvectors `idx` at `lambda`.
fn crossing_form(
    asm: &GalerkinAssembler<'_>,
    lambda: f64,
    idx: &[usize],
    tol: f64,
) -> Result<Crossing> {
    let m = asm.assemble(lambda).matrix;
    let dec = eigen_decompose(&m, EIGEN_TOL)?;
    let lo = (lambda - FD_STEP).max(0.0);
    let hi = (lambda + FD_STEP).min(1.0);
    let deriv = asm
        .assemble(hi)
        .matrix
        .try_sub(&asm.assemble(lo).matrix)?
        .scaled(1.0 / (hi - lo));
    let n = m.dim();
    let form: Vec<Vec<f64>> = idx
        .iter()
        .map(|&a| {
            let va = &dec.eigenvectors[a];
            let dva: Vec<f64> = (0..n)
                .map(|r| (0..n).map(|c| deriv.get(r, c) * va[c]).sum())
                .collect();
            idx.iter()
                .map(|&b| {
                    dec.eigenvectors[b]
                        .iter()
                        .zip(&dva)
                        .map(|(x, y)| x * y)
                        .sum()
                })
                .collect()
        })
        .collect();
    let form = SymmetricMatrix::from_rows_symmetrized(form, 1e-6 * deriv.max_abs().max(1.0))?;
    let form_eigenvalues = form.eigenvalues()?;
    let threshold = tol * deriv.max_abs().max(1.0);
    if let Some(&g) = form_eigenvalues.iter().find(|g| g.abs() <= threshold) {
        return Err(SpecflowError::DegenerateCrossing {
            lambda,
            eigenvalue: g,
        });
    }
    let signature = form_eigenvalues
        .iter()
        .map(|&g| if g > 0.0 { 1 } else { -1 })
        .sum();
    Ok(Crossing {
        lambda,
        kernel_dim: idx.len(),
        signature,
        form_eigenvalues,
    })
}
