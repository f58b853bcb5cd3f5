//! Spectral-flow index computations for strongly indefinite elliptic systems
//! `A Δu = ∇_u F(λ, x, u)` with `A = diag(-1, .., -1, 1, .., 1)`.
//!
//! The crate turns finite matrix data (coefficient Hessians at the trivial
//! solution, comparison blocks, entrywise bounds) and the Dirichlet spectrum of
//! the domain into integer spectral-flow values and bifurcation verdicts. A
//! Galerkin truncation of the operator path in the Dirichlet eigenbasis serves
//! as an independent oracle for every integer the closed formulas produce.

pub mod bessel;
pub mod comparison;
pub mod error;
pub mod index;
pub mod oracle;
pub mod quadrature;
pub mod shrinking;
pub mod spectra;
pub mod symmat;
pub mod verdict;

pub use comparison::{
    check_2x2_conditions, check_envelope, check_lower_comparison, check_upper_comparison,
    envelope_bounds, Bounds2x2, ComparisonPair, ComparisonRole, EntryBounds, EnvelopeBounds,
};
pub use error::{Result, SpecflowError};
pub use index::{
    block_diag_sfl, index, reduced_block, spectral_flow, truncation_rank, BlockFlowReport,
    DiagonalBlock, DiagonalBlocks, FlowReport, IndexReport, SignatureSplit,
};
pub use oracle::{
    assemble, convergence_check, default_n_blocks, oracle_sfl_crossings, oracle_sfl_endpoint,
    CoefficientField1D, ConvergenceCheck, Crossing, CrossingReport, EntryProfile, FieldPath,
    GalerkinAssembler, GalerkinMatrix, MatrixPath, OraclePath,
};
pub use quadrature::{integrate, QuadratureRule};
pub use shrinking::{
    crossing_form_constant, shrink_verdict_2x2, shrink_verdict_constant, CrossingFormReport,
    Definiteness, RadialMonotonicity,
};
pub use spectra::{spectrum, DomainSpec, DomainSpectrum};
pub use symmat::{
    eigen_decompose, inertia, is_psd, operator_norm, EigenDecomposition, InertiaTriple,
    SymmetricMatrix,
};
pub use verdict::{BifurcationVerdict, Clause, Outcome, Warning, WarningKind, Witness};
