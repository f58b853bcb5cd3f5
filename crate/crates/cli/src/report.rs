//! Dispatch of a validated problem to the computation modules, and the resulting report.

use std::fmt::Write as _;

use serde::Serialize;
use specflow_core::{
    check_2x2_conditions, check_envelope, check_lower_comparison, check_upper_comparison,
    convergence_check, default_n_blocks, envelope_bounds, index, oracle_sfl_crossings,
    oracle_sfl_endpoint, shrink_verdict_2x2, shrink_verdict_constant, spectral_flow, spectrum,
    truncation_rank, BifurcationVerdict, Clause, ComparisonPair, ComparisonRole, ConvergenceCheck,
    Crossing, DiagonalBlocks, DomainSpec, DomainSpectrum, EnvelopeBounds, FieldPath, IndexReport,
    MatrixPath, OraclePath, Outcome, SpecflowError, Warning, WarningKind, Witness,
};

use crate::error::CliError;
use crate::problem::{BlockInput, EnvelopeInput, Mode, OracleInput, Payload, ProblemFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Computed,
    Indeterminate,
}

/// The module that produced the result and the criterion or formula it applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub module: &'static str,
    pub clause: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResultBody {
    Index {
        value: i64,
        truncation_rank: usize,
        block_signatures: Vec<i64>,
    },
    SpectralFlow {
        value: i64,
        index_start: i64,
        index_end: i64,
        truncation_rank_start: usize,
        truncation_rank_end: usize,
    },
    Verdict {
        outcome: Outcome,
        clause: Clause,
        witness: Option<Witness>,
        /// Envelope computed from sample matrices, when the input gave samples.
        #[serde(skip_serializing_if = "Option::is_none")]
        envelope: Option<EnvelopeBounds>,
    },
    Oracle {
        /// Endpoint-method value.
        value: i64,
        /// Crossing-method value; absent when a crossing was degenerate.
        crossing_value: Option<i64>,
        n_blocks: usize,
        n_samples: usize,
        crossings: Vec<Crossing>,
        #[serde(skip_serializing_if = "Option::is_none")]
        convergence: Option<ConvergenceCheck>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub mode: Mode,
    pub status: Status,
    pub provenance: Provenance,
    pub result: ResultBody,
    pub warnings: Vec<Warning>,
    /// The validated problem with defaults filled in.
    pub input: ProblemFile,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Computed => 0,
            Status::Indeterminate => 2,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let status = match self.status {
            Status::Computed => "computed",
            Status::Indeterminate => "indeterminate",
        };
        let _ = writeln!(s, "mode        {}", self.mode.name());
        let _ = writeln!(s, "domain      {}", describe_domain(&self.input.domain));
        let _ = writeln!(
            s,
            "signature   p1 = {}, p2 = {}",
            self.input.split.p1, self.input.split.p2
        );
        let _ = writeln!(s, "status      {status}");
        let _ = writeln!(
            s,
            "provenance  {} / {}",
            self.provenance.module, self.provenance.clause
        );
        match &self.result {
            ResultBody::Index {
                value,
                truncation_rank,
                ..
            } => {
                let _ = writeln!(s, "result      i(B) = {value}");
                let _ = writeln!(s, "            summed over k = 1..{truncation_rank}");
            }
            ResultBody::SpectralFlow {
                value,
                index_start,
                index_end,
                truncation_rank_start,
                truncation_rank_end,
            } => {
                let _ = writeln!(s, "result      sfl = {value}");
                let _ = writeln!(
                    s,
                    "            i(B0) = {index_start} (k <= {truncation_rank_start}), i(B1) = {index_end} (k <= {truncation_rank_end})"
                );
            }
            ResultBody::Verdict {
                outcome,
                clause,
                witness,
                envelope,
            } => {
                let outcome = match outcome {
                    Outcome::WitnessFound => "witness found",
                    Outcome::NoWitness => "no witness",
                    Outcome::Indeterminate => "indeterminate",
                };
                let _ = writeln!(s, "result      {outcome} (criterion {})", clause.tag());
                if let Some(w) = witness {
                    let _ = writeln!(
                        s,
                        "witness     j = {}, k = {}, alpha_k = {}, {:?} block: {} < {} < {} (margin {:e})",
                        w.j,
                        w.k,
                        w.alpha_k,
                        w.block,
                        w.interval.0,
                        w.point(),
                        w.interval.1,
                        w.margin
                    );
                }
                if let Some(e) = envelope {
                    let _ = writeln!(
                        s,
                        "envelope    gamma_0 = {}, gamma_1 = {}, beta_0 = {}, beta_1 = {}",
                        e.gamma_0, e.gamma_1, e.beta_0, e.beta_1
                    );
                }
            }
            ResultBody::Oracle {
                value,
                crossing_value,
                n_blocks,
                n_samples,
                crossings,
                convergence,
            } => {
                let _ = writeln!(
                    s,
                    "result      sfl = {value} (endpoint method, {n_blocks} modes)"
                );
                match crossing_value {
                    Some(c) => {
                        let _ = writeln!(
                            s,
                            "            crossing method: {c} from {} crossings ({n_samples} samples)",
                            crossings.len()
                        );
                    }
                    None => {
                        let _ = writeln!(s, "            crossing method: unavailable");
                    }
                }
                for c in crossings {
                    let _ = writeln!(
                        s,
                        "            crossing at lambda = {:.12} kernel {} signature {:+}",
                        c.lambda, c.kernel_dim, c.signature
                    );
                }
                if let Some(c) = convergence {
                    let _ = writeln!(
                        s,
                        "            refined with {} modes: {}",
                        c.n_blocks + 2,
                        c.refined_value
                    );
                }
            }
        }
        if self.warnings.is_empty() {
            let _ = writeln!(s, "warnings    none");
        } else {
            let _ = writeln!(s, "warnings");
            for w in &self.warnings {
                let kind = serde_json::to_value(w.kind)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default();
                let _ = writeln!(s, "  - {kind} (margin {:e}): {}", w.margin, w.detail);
            }
        }
        s
    }
}

fn describe_domain(d: &DomainSpec) -> String {
    match d {
        DomainSpec::Interval { length } => format!("interval (0, {length})"),
        DomainSpec::Box { sides } => format!("box with sides {sides:?}"),
        DomainSpec::Disc { radius } => format!("disc of radius {radius}"),
        DomainSpec::Custom { values, dimension } => {
            format!(
                "custom spectrum of {} values in dimension {dimension}",
                values.len()
            )
        }
    }
}

fn domain_spectrum(p: &ProblemFile) -> Result<DomainSpectrum, CliError> {
    spectrum(p.domain.clone()).map_err(|e| match e {
        SpecflowError::InvalidDomain(msg) => CliError::InvalidDomain(msg),
        other => CliError::compute("domain spectrum")(other),
    })
}

/// Dispatch on the problem's mode.
pub fn run(problem: &ProblemFile) -> Result<Report, CliError> {
    let spec = domain_spectrum(problem)?;
    let split = problem.split;
    let zero_tol = problem.tolerances.zero_tol;
    let tol = problem.tolerances.witness_tol;
    let verdict =
        |module: &'static str, v: BifurcationVerdict, envelope: Option<EnvelopeBounds>| {
            let status = if v.outcome == Outcome::Indeterminate {
                Status::Indeterminate
            } else {
                Status::Computed
            };
            Report {
                mode: problem.mode(),
                status,
                provenance: Provenance {
                    module,
                    clause: v.clause.tag(),
                },
                result: ResultBody::Verdict {
                    outcome: v.outcome,
                    clause: v.clause,
                    witness: v.witness,
                    envelope,
                },
                warnings: v.warnings,
                input: problem.clone(),
            }
        };

    match &problem.payload {
        Payload::Index { b } => {
            let r = index(split, b, &spec, zero_tol).map_err(CliError::compute("index"))?;
            let warnings = singular_warnings("", &r);
            Ok(Report {
                mode: Mode::Index,
                status: status_from(&warnings),
                provenance: Provenance {
                    module: "index-core",
                    clause: "index-formula",
                },
                result: ResultBody::Index {
                    value: r.index,
                    truncation_rank: r.truncation_rank,
                    block_signatures: r.block_signatures,
                },
                warnings,
                input: problem.clone(),
            })
        }
        Payload::Sfl { b0, b1 } => {
            let r = spectral_flow(split, b0, b1, &spec, zero_tol)
                .map_err(CliError::compute("spectral flow"))?;
            let mut warnings = singular_warnings("B0: ", &r.start);
            warnings.extend(singular_warnings("B1: ", &r.end));
            Ok(Report {
                mode: Mode::Sfl,
                status: status_from(&warnings),
                provenance: Provenance {
                    module: "index-core",
                    clause: "spectral-flow-formula",
                },
                result: ResultBody::SpectralFlow {
                    value: r.value,
                    index_start: r.start.index,
                    index_end: r.end.index,
                    truncation_rank_start: r.start.truncation_rank,
                    truncation_rank_end: r.end.truncation_rank,
                },
                warnings,
                input: problem.clone(),
            })
        }
        Payload::CompareUpper(blocks) => {
            let pair = comparison_pair(ComparisonRole::UpperC, blocks);
            let v = check_upper_comparison(split, &pair, &spec, tol)
                .map_err(CliError::compute("upper comparison"))?;
            Ok(verdict("comparison", v, None))
        }
        Payload::CompareLower(blocks) => {
            let pair = comparison_pair(ComparisonRole::LowerD, blocks);
            let v = check_lower_comparison(split, &pair, &spec, tol)
                .map_err(CliError::compute("lower comparison"))?;
            Ok(verdict("comparison", v, None))
        }
        Payload::Envelope(input) => {
            let (env, computed) = match input {
                EnvelopeInput::Bounds(e) => (*e, None),
                EnvelopeInput::Samples { start, end } => {
                    let e = envelope_bounds(start, end).map_err(CliError::compute("envelope"))?;
                    (e, Some(e))
                }
            };
            let v = check_envelope(split, &env, &spec, tol)
                .map_err(CliError::compute("envelope criterion"))?;
            Ok(verdict("comparison", v, computed))
        }
        Payload::Cond2x2(bounds) => {
            let v = check_2x2_conditions(bounds, &spec, tol)
                .map_err(CliError::compute("2x2 conditions"))?;
            Ok(verdict("comparison", v, None))
        }
        Payload::ShrinkConstant { b } => {
            let v = shrink_verdict_constant(split, b, &spec, tol)
                .map_err(CliError::compute("shrinking, constant coefficient"))?;
            Ok(verdict("shrinking", v, None))
        }
        Payload::Shrink2x2 { bounds, radial } => {
            let v = shrink_verdict_2x2(split, bounds, *radial, &spec, tol)
                .map_err(CliError::compute("shrinking, 2x2 bounds"))?;
            Ok(verdict("shrinking", v, None))
        }
        Payload::Oracle(input) => run_oracle(problem, input, &spec),
    }
}

fn comparison_pair(role: ComparisonRole, b: &BlockInput) -> ComparisonPair {
    ComparisonPair {
        role,
        blocks: DiagonalBlocks {
            upper_start: b.upper_start.clone(),
            lower_start: b.lower_start.clone(),
            upper_end: b.upper_end.clone(),
            lower_end: b.lower_end.clone(),
        },
    }
}

fn singular_warnings(prefix: &str, r: &IndexReport) -> Vec<Warning> {
    r.singular_blocks
        .iter()
        .map(|s| {
            Warning::new(
                WarningKind::SingularBlock,
                format!(
                    "{prefix}reduced block k = {} (alpha_k = {}) has eigenvalue {:e}; the index formula needs invertible blocks",
                    s.k, s.alpha_k, s.eigenvalue
                ),
                s.eigenvalue.abs(),
            )
        })
        .collect()
}

fn status_from(warnings: &[Warning]) -> Status {
    if warnings
        .iter()
        .any(|w| w.kind == WarningKind::SingularBlock)
    {
        Status::Indeterminate
    } else {
        Status::Computed
    }
}

/// The path an oracle problem describes.
pub(crate) fn oracle_path(input: &OracleInput) -> Result<OraclePath, CliError> {
    Ok(match input {
        OracleInput::Matrices { b0, b1 } => MatrixPath::linear(b0.clone(), b1.clone())
            .map_err(CliError::compute("oracle path"))?
            .into(),
        OracleInput::Fields { start, end } => FieldPath::new(start.clone(), end.clone())
            .map_err(CliError::compute("oracle path"))?
            .into(),
    })
}

pub(crate) fn oracle_n_blocks(
    problem: &ProblemFile,
    path: &OraclePath,
    spec: &DomainSpectrum,
) -> Result<usize, CliError> {
    match problem.oracle.n_blocks {
        Some(n) => Ok(n),
        None => default_n_blocks(problem.split, path, spec)
            .map_err(CliError::compute("default truncation")),
    }
}

fn run_oracle(
    problem: &ProblemFile,
    input: &OracleInput,
    spec: &DomainSpectrum,
) -> Result<Report, CliError> {
    let split = problem.split;
    let tol = problem.tolerances.zero_tol;
    let n_samples = problem.oracle.n_samples;
    let path = oracle_path(input)?;
    let n_blocks = oracle_n_blocks(problem, &path, spec)?;
    let mut warnings = Vec::new();
    let mut status = Status::Computed;

    if let (OracleInput::Matrices { b0, b1 }, Some(n)) = (input, problem.oracle.n_blocks) {
        let mut rank = 1;
        for b in [b0, b1] {
            rank = rank.max(
                truncation_rank(split, b, spec).map_err(CliError::compute("truncation rank"))?,
            );
        }
        if n < rank {
            warnings.push(Warning::new(
                WarningKind::Unverified,
                format!(
                    "n_blocks = {n} is below the truncation rank {rank}; modes k > {n} are ignored"
                ),
                (rank - n) as f64,
            ));
        }
    }

    let value = oracle_sfl_endpoint(split, &path, spec, n_blocks, tol)
        .map_err(CliError::compute("oracle, endpoint method"))?;
    let (crossing_value, crossings) = match oracle_sfl_crossings(
        split, &path, spec, n_blocks, n_samples, tol,
    ) {
        Ok(r) => (Some(r.value), r.crossings),
        Err(SpecflowError::DegenerateCrossing { lambda, eigenvalue }) => {
            warnings.push(Warning::new(
                    WarningKind::Unverified,
                    format!(
                        "crossing at lambda = {lambda} has a degenerate crossing form (eigenvalue {eigenvalue:e}); crossing method skipped"
                    ),
                    eigenvalue.abs(),
                ));
            (None, Vec::new())
        }
        Err(e) => return Err(CliError::compute("oracle, crossing method")(e)),
    };
    if let Some(c) = crossing_value {
        if c != value {
            status = Status::Indeterminate;
            warnings.push(Warning::new(
                WarningKind::Unverified,
                format!("endpoint method gives {value} but crossing method gives {c}"),
                (c - value).abs() as f64,
            ));
        }
    }

    let convergence = match input {
        OracleInput::Fields { .. } => {
            let c = convergence_check(split, &path, spec, n_blocks, tol)
                .map_err(CliError::compute("oracle, convergence check"))?;
            if !c.stable {
                status = Status::Indeterminate;
                warnings.push(Warning::new(
                    WarningKind::Unverified,
                    format!(
                        "value {} at {} modes changes to {} at {} modes",
                        c.value,
                        c.n_blocks,
                        c.refined_value,
                        c.n_blocks + 2
                    ),
                    (c.refined_value - c.value).abs() as f64,
                ));
            }
            Some(c)
        }
        OracleInput::Matrices { .. } => None,
    };

    Ok(Report {
        mode: Mode::Oracle,
        status,
        provenance: Provenance {
            module: "galerkin-oracle",
            clause: "truncated-morse-difference",
        },
        result: ResultBody::Oracle {
            value,
            crossing_value,
            n_blocks,
            n_samples,
            crossings,
            convergence,
        },
        warnings,
        input: problem.clone(),
    })
}

/// First `count` Dirichlet eigenvalues of a domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub domain: DomainSpec,
    pub eigenvalues: Vec<f64>,
}

impl SpectrumReport {
    pub fn new(domain: &DomainSpec, count: usize) -> Result<Self, CliError> {
        let s = spectrum(domain.clone()).map_err(|e| match e {
            SpecflowError::InvalidDomain(msg) => CliError::InvalidDomain(msg),
            other => CliError::compute("domain spectrum")(other),
        })?;
        let eigenvalues = s
            .take(count)
            .map_err(CliError::compute("domain spectrum"))?;
        Ok(Self {
            domain: domain.clone(),
            eigenvalues,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("domain      {}\n", describe_domain(&self.domain));
        for (k, a) in self.eigenvalues.iter().enumerate() {
            let _ = writeln!(s, "alpha_{:<5} {a:.16e}", k + 1);
        }
        s
    }
}
