//! Problem files: JSON parsing, per-mode field validation and serialization.

use serde::{Deserialize, Serialize};
use specflow_core::{
    Bounds2x2, CoefficientField1D, DomainSpec, EntryBounds, EnvelopeBounds, RadialMonotonicity,
    SignatureSplit, SpecflowError, SymmetricMatrix,
};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
/// Largest `|m_ij - m_ji|` repaired by averaging.
pub const SYMMETRY_REPAIR: f64 = 1e-12;
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;
pub const DEFAULT_WITNESS_TOL: f64 = 1e-7;
pub const DEFAULT_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Index,
    Sfl,
    CompareUpper,
    CompareLower,
    Envelope,
    Cond2x2,
    ShrinkConstant,
    Shrink2x2,
    Oracle,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Index => "index",
            Self::Sfl => "sfl",
            Self::CompareUpper => "compare_upper",
            Self::CompareLower => "compare_lower",
            Self::Envelope => "envelope",
            Self::Cond2x2 => "cond2x2",
            Self::ShrinkConstant => "shrink_constant",
            Self::Shrink2x2 => "shrink_2x2",
            Self::Oracle => "oracle",
        }
    }

    fn takes_oracle_controls(self) -> bool {
        matches!(self, Self::Sfl | Self::Oracle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Eigenvalues within this (scale-aware) band of zero count as singular.
    #[serde(default = "default_zero_tol")]
    pub zero_tol: f64,
    /// Strict inequalities holding by less than this are indeterminate.
    #[serde(default = "default_witness_tol")]
    pub witness_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            zero_tol: DEFAULT_ZERO_TOL,
            witness_tol: DEFAULT_WITNESS_TOL,
        }
    }
}

fn default_zero_tol() -> f64 {
    DEFAULT_ZERO_TOL
}

fn default_witness_tol() -> f64 {
    DEFAULT_WITNESS_TOL
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleControls {
    /// Galerkin modes; `None` picks the truncation rank over the path plus two.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_blocks: Option<usize>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
}

impl Default for OracleControls {
    fn default() -> Self {
        Self {
            n_blocks: None,
            n_samples: DEFAULT_SAMPLES,
        }
    }
}

/// Block-diagonal comparison data with upper blocks `p1 x p1` and lower blocks `p2 x p2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockInput {
    pub upper_start: SymmetricMatrix,
    pub lower_start: SymmetricMatrix,
    pub upper_end: SymmetricMatrix,
    pub lower_end: SymmetricMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvelopeInput {
    Bounds(EnvelopeBounds),
    /// Sample matrices of `B_0(x)` and `B_1(x)`; the envelope is taken over them.
    Samples {
        start: Vec<SymmetricMatrix>,
        end: Vec<SymmetricMatrix>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleInput {
    Matrices {
        b0: SymmetricMatrix,
        b1: SymmetricMatrix,
    },
    Fields {
        start: CoefficientField1D,
        end: CoefficientField1D,
    },
}

/// The mode together with exactly the data it needs.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Index {
        b: SymmetricMatrix,
    },
    Sfl {
        b0: SymmetricMatrix,
        b1: SymmetricMatrix,
    },
    CompareUpper(BlockInput),
    CompareLower(BlockInput),
    Envelope(EnvelopeInput),
    Cond2x2(Bounds2x2),
    ShrinkConstant {
        b: SymmetricMatrix,
    },
    Shrink2x2 {
        bounds: EntryBounds,
        radial: RadialMonotonicity,
    },
    Oracle(OracleInput),
}

impl Payload {
    pub fn mode(&self) -> Mode {
        match self {
            Self::Index { .. } => Mode::Index,
            Self::Sfl { .. } => Mode::Sfl,
            Self::CompareUpper(_) => Mode::CompareUpper,
            Self::CompareLower(_) => Mode::CompareLower,
            Self::Envelope(_) => Mode::Envelope,
            Self::Cond2x2(_) => Mode::Cond2x2,
            Self::ShrinkConstant { .. } => Mode::ShrinkConstant,
            Self::Shrink2x2 { .. } => Mode::Shrink2x2,
            Self::Oracle(_) => Mode::Oracle,
        }
    }
}

/// A validated problem: symmetric matrices of the right sizes, defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "RawProblem")]
pub struct ProblemFile {
    pub schema_version: u32,
    pub domain: DomainSpec,
    pub split: SignatureSplit,
    pub tolerances: Tolerances,
    /// Meaningful only for `sfl` and `oracle`.
    pub oracle: OracleControls,
    pub payload: Payload,
}

impl ProblemFile {
    pub fn new(domain: DomainSpec, split: SignatureSplit, payload: Payload) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            domain,
            split,
            tolerances: Tolerances::default(),
            oracle: OracleControls::default(),
            payload,
        }
    }

    pub fn mode(&self) -> Mode {
        self.payload.mode()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }
}

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlocks {
    upper_start: Rows,
    lower_start: Rows,
    upper_end: Rows,
    lower_end: Rows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSamples {
    start: Vec<Rows>,
    end: Vec<Rows>,
}

/// Wire format; every mode-specific field is optional here and checked afterwards.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    schema_version: u32,
    domain: DomainSpec,
    signature: SignatureSplit,
    mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b0: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b1: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    blocks: Option<RawBlocks>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    envelope: Option<EnvelopeBounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<RawSamples>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounds: Option<Bounds2x2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entry_bounds: Option<EntryBounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radial_monotonicity: Option<RadialMonotonicity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    field0: Option<CoefficientField1D>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    field1: Option<CoefficientField1D>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleControls>,
}

impl RawProblem {
    fn empty(p: &ProblemFile) -> Self {
        Self {
            schema_version: p.schema_version,
            domain: p.domain.clone(),
            signature: p.split,
            mode: p.mode(),
            b: None,
            b0: None,
            b1: None,
            blocks: None,
            envelope: None,
            samples: None,
            bounds: None,
            entry_bounds: None,
            radial_monotonicity: None,
            field0: None,
            field1: None,
            tolerances: Some(p.tolerances),
            oracle: p.mode().takes_oracle_controls().then_some(p.oracle),
        }
    }

    /// Names of the populated mode-specific fields.
    fn present(&self) -> Vec<&'static str> {
        [
            ("b", self.b.is_some()),
            ("b0", self.b0.is_some()),
            ("b1", self.b1.is_some()),
            ("blocks", self.blocks.is_some()),
            ("envelope", self.envelope.is_some()),
            ("samples", self.samples.is_some()),
            ("bounds", self.bounds.is_some()),
            ("entry_bounds", self.entry_bounds.is_some()),
            ("radial_monotonicity", self.radial_monotonicity.is_some()),
            ("field0", self.field0.is_some()),
            ("field1", self.field1.is_some()),
        ]
        .into_iter()
        .filter_map(|(name, set)| set.then_some(name))
        .collect()
    }
}

impl From<ProblemFile> for RawProblem {
    fn from(p: ProblemFile) -> Self {
        let mut raw = RawProblem::empty(&p);
        match p.payload {
            Payload::Index { b } | Payload::ShrinkConstant { b } => raw.b = Some(b.rows()),
            Payload::Sfl { b0, b1 } | Payload::Oracle(OracleInput::Matrices { b0, b1 }) => {
                raw.b0 = Some(b0.rows());
                raw.b1 = Some(b1.rows());
            }
            Payload::CompareUpper(blocks) | Payload::CompareLower(blocks) => {
                raw.blocks = Some(RawBlocks {
                    upper_start: blocks.upper_start.rows(),
                    lower_start: blocks.lower_start.rows(),
                    upper_end: blocks.upper_end.rows(),
                    lower_end: blocks.lower_end.rows(),
                })
            }
            Payload::Envelope(EnvelopeInput::Bounds(e)) => raw.envelope = Some(e),
            Payload::Envelope(EnvelopeInput::Samples { start, end }) => {
                raw.samples = Some(RawSamples {
                    start: start.iter().map(SymmetricMatrix::rows).collect(),
                    end: end.iter().map(SymmetricMatrix::rows).collect(),
                })
            }
            Payload::Cond2x2(b) => raw.bounds = Some(b),
            Payload::Shrink2x2 { bounds, radial } => {
                raw.entry_bounds = Some(bounds);
                raw.radial_monotonicity = Some(radial);
            }
            Payload::Oracle(OracleInput::Fields { start, end }) => {
                raw.field0 = Some(start);
                raw.field1 = Some(end);
            }
        }
        raw
    }
}

/// Parse and validate a UTF-8 JSON problem file.
pub fn parse_problem(text: &[u8]) -> Result<ProblemFile, CliError> {
    let text = std::str::from_utf8(text)
        .map_err(|e| CliError::Schema(format!("problem file is not UTF-8: {e}")))?;
    let raw: RawProblem =
        serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
    validate(raw)
}

fn validate(raw: RawProblem) -> Result<ProblemFile, CliError> {
    if raw.schema_version != SCHEMA_VERSION {
        return Err(CliError::Schema(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            raw.schema_version
        )));
    }
    raw.domain.validate().map_err(|e| match e {
        SpecflowError::InvalidDomain(msg) => CliError::InvalidDomain(msg),
        other => CliError::InvalidDomain(other.to_string()),
    })?;
    let split = SignatureSplit::new(raw.signature.p1, raw.signature.p2)
        .map_err(|e| CliError::Schema(e.to_string()))?;

    let tolerances = raw.tolerances.unwrap_or_default();
    for (name, v) in [
        ("zero_tol", tolerances.zero_tol),
        ("witness_tol", tolerances.witness_tol),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::Schema(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    if raw.oracle.is_some() && !raw.mode.takes_oracle_controls() {
        return Err(CliError::Schema(format!(
            "field `oracle` is not used by mode {}",
            raw.mode.name()
        )));
    }
    let oracle = raw.oracle.unwrap_or_default();
    if oracle.n_samples < 2 || oracle.n_blocks == Some(0) {
        return Err(CliError::Schema(
            "oracle controls need n_samples >= 2 and n_blocks >= 1".into(),
        ));
    }

    let payload = payload(&raw, split)?;
    Ok(ProblemFile {
        schema_version: raw.schema_version,
        domain: raw.domain,
        split,
        tolerances,
        oracle,
        payload,
    })
}

/// Accepted field sets per mode; alternatives are tried in order.
fn shapes(mode: Mode) -> &'static [&'static [&'static str]] {
    match mode {
        Mode::Index | Mode::ShrinkConstant => &[&["b"]],
        Mode::Sfl => &[&["b0", "b1"]],
        Mode::CompareUpper | Mode::CompareLower => &[&["blocks"]],
        Mode::Envelope => &[&["envelope"], &["samples"]],
        Mode::Cond2x2 => &[&["bounds"]],
        Mode::Shrink2x2 => &[&["entry_bounds", "radial_monotonicity"]],
        Mode::Oracle => &[&["b0", "b1"], &["field0", "field1"]],
    }
}

fn payload(raw: &RawProblem, split: SignatureSplit) -> Result<Payload, CliError> {
    let present = raw.present();
    let shape = shapes(raw.mode)
        .iter()
        .find(|s| {
            let mut want = s.to_vec();
            want.sort_unstable();
            let mut have = present.clone();
            have.sort_unstable();
            want == have
        })
        .ok_or_else(|| {
            let options: Vec<String> = shapes(raw.mode).iter().map(|s| s.join(" + ")).collect();
            CliError::Schema(format!(
                "mode {} needs exactly {{{}}}, found {{{}}}",
                raw.mode.name(),
                options.join("} or {"),
                present.join(", ")
            ))
        })?;

    let p = split.dim();
    let m = |name: &str, rows: &Option<Rows>| matrix(name, rows.clone().unwrap_or_default(), p);
    Ok(match raw.mode {
        Mode::Index => Payload::Index { b: m("b", &raw.b)? },
        Mode::ShrinkConstant => Payload::ShrinkConstant { b: m("b", &raw.b)? },
        Mode::Sfl => Payload::Sfl {
            b0: m("b0", &raw.b0)?,
            b1: m("b1", &raw.b1)?,
        },
        Mode::CompareUpper | Mode::CompareLower => {
            let blocks = block_input(raw.blocks.as_ref().expect("shape checked"), split)?;
            if raw.mode == Mode::CompareUpper {
                Payload::CompareUpper(blocks)
            } else {
                Payload::CompareLower(blocks)
            }
        }
        Mode::Envelope => match (&raw.envelope, &raw.samples) {
            (Some(e), _) => Payload::Envelope(EnvelopeInput::Bounds(*e)),
            (None, Some(s)) => {
                let list = |name: &str, rows: &[Rows]| -> Result<Vec<SymmetricMatrix>, CliError> {
                    if rows.is_empty() {
                        return Err(CliError::Schema(format!(
                            "{name} needs at least one matrix"
                        )));
                    }
                    rows.iter()
                        .enumerate()
                        .map(|(i, r)| matrix(&format!("{name}[{i}]"), r.clone(), p))
                        .collect()
                };
                Payload::Envelope(EnvelopeInput::Samples {
                    start: list("samples.start", &s.start)?,
                    end: list("samples.end", &s.end)?,
                })
            }
            (None, None) => unreachable!("shape checked"),
        },
        Mode::Cond2x2 => {
            require_dim(split, 2, "cond2x2")?;
            Payload::Cond2x2(raw.bounds.expect("shape checked"))
        }
        Mode::Shrink2x2 => {
            require_dim(split, 2, "shrink_2x2")?;
            Payload::Shrink2x2 {
                bounds: raw.entry_bounds.expect("shape checked"),
                radial: raw.radial_monotonicity.expect("shape checked"),
            }
        }
        Mode::Oracle if shape.contains(&"b0") => Payload::Oracle(OracleInput::Matrices {
            b0: m("b0", &raw.b0)?,
            b1: m("b1", &raw.b1)?,
        }),
        Mode::Oracle => {
            let start = raw.field0.clone().expect("shape checked");
            let end = raw.field1.clone().expect("shape checked");
            for (name, f) in [("field0", &start), ("field1", &end)] {
                if f.dim() != p {
                    return Err(dim_error(name, f.dim(), p));
                }
            }
            Payload::Oracle(OracleInput::Fields { start, end })
        }
    })
}

fn require_dim(split: SignatureSplit, dim: usize, mode: &str) -> Result<(), CliError> {
    if split.dim() == dim {
        Ok(())
    } else {
        Err(CliError::Schema(format!(
            "mode {mode} needs p1 + p2 = {dim}, got {}",
            split.dim()
        )))
    }
}

fn dim_error(name: &str, found: usize, want: usize) -> CliError {
    CliError::Schema(format!(
        "`{name}` is {found}x{found}, expected {want}x{want}"
    ))
}

/// Square, finite and symmetric up to [`SYMMETRY_REPAIR`]; `dim` must match.
fn matrix(name: &str, rows: Rows, dim: usize) -> Result<SymmetricMatrix, CliError> {
    if rows.len() != dim {
        return Err(dim_error(name, rows.len(), dim));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != dim) {
        return Err(CliError::Schema(format!(
            "`{name}` has a row of length {}, expected {dim}",
            r.len()
        )));
    }
    SymmetricMatrix::from_rows_symmetrized(rows, SYMMETRY_REPAIR).map_err(|e| match e {
        SpecflowError::Asymmetric { row, col, gap } => CliError::Asymmetry {
            field: name.to_string(),
            row,
            col,
            gap,
        },
        other => CliError::Schema(format!("`{name}`: {other}")),
    })
}

fn block_input(raw: &RawBlocks, split: SignatureSplit) -> Result<BlockInput, CliError> {
    let upper = |name: &str, rows: &Rows| {
        if split.p1 == 0 {
            empty_block(name, rows)
        } else {
            matrix(name, rows.clone(), split.p1)
        }
    };
    let lower = |name: &str, rows: &Rows| {
        if split.p2 == 0 {
            empty_block(name, rows)
        } else {
            matrix(name, rows.clone(), split.p2)
        }
    };
    Ok(BlockInput {
        upper_start: upper("blocks.upper_start", &raw.upper_start)?,
        lower_start: lower("blocks.lower_start", &raw.lower_start)?,
        upper_end: upper("blocks.upper_end", &raw.upper_end)?,
        lower_end: lower("blocks.lower_end", &raw.lower_end)?,
    })
}

/// Comparison criteria need both blocks, so a zero-size block is a schema error.
fn empty_block(name: &str, _rows: &Rows) -> Result<SymmetricMatrix, CliError> {
    Err(CliError::Schema(format!(
        "`{name}` is a zero-size block; comparison modes need p1 >= 1 and p2 >= 1"
    )))
}
