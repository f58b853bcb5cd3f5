//! Subcommands on top of the problem/report layer, including batch processing.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::curves::emit_curves;
use crate::error::CliError;
use crate::problem::{parse_problem, Mode, OracleInput, Payload, ProblemFile};
use crate::report::{run, SpectrumReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Index,
    Sfl,
    Compare,
    Cond2x2,
    Shrink,
    Oracle,
    Curves,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Index => "index",
            Self::Sfl => "sfl",
            Self::Compare => "compare",
            Self::Cond2x2 => "cond2x2",
            Self::Shrink => "shrink",
            Self::Oracle => "oracle",
            Self::Curves => "curves",
        }
    }

    fn accepts(self, mode: Mode) -> bool {
        match self {
            Self::Spectrum => true,
            Self::Index => mode == Mode::Index,
            Self::Sfl => mode == Mode::Sfl,
            Self::Compare => matches!(
                mode,
                Mode::CompareUpper | Mode::CompareLower | Mode::Envelope
            ),
            Self::Cond2x2 => mode == Mode::Cond2x2,
            Self::Shrink => matches!(mode, Mode::ShrinkConstant | Mode::Shrink2x2),
            Self::Oracle | Self::Curves => matches!(mode, Mode::Sfl | Mode::Oracle),
        }
    }

    /// Whether `--tol` sets the zero tolerance rather than the witness tolerance.
    fn tol_is_zero_tol(self) -> bool {
        matches!(self, Self::Index | Self::Sfl | Self::Oracle | Self::Curves)
    }

    fn output_suffix(self, json: bool) -> &'static str {
        match (self, json) {
            (Self::Curves, _) => "curves.csv",
            (Self::Spectrum, true) => "spectrum.json",
            (Self::Spectrum, false) => "spectrum.txt",
            (_, true) => "report.json",
            (_, false) => "report.txt",
        }
    }
}

/// Command-line overrides and output choices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Options {
    pub json: bool,
    pub n_blocks: Option<usize>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    /// Number of eigenvalues listed by `spectrum`.
    pub count: usize,
}

/// Check the subcommand against the problem's mode and apply overrides.
///
/// `oracle` on an `sfl` problem runs the Galerkin oracle on the same linear path.
pub fn prepare(
    command: Command,
    mut problem: ProblemFile,
    options: &Options,
) -> Result<ProblemFile, CliError> {
    if !command.accepts(problem.mode()) {
        return Err(CliError::Usage(format!(
            "subcommand `{}` cannot run a problem of mode {}",
            command.name(),
            problem.mode().name()
        )));
    }
    if command == Command::Oracle {
        if let Payload::Sfl { b0, b1 } = &problem.payload {
            problem.payload = Payload::Oracle(OracleInput::Matrices {
                b0: b0.clone(),
                b1: b1.clone(),
            });
        }
    }
    if let Some(tol) = options.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(CliError::Usage(format!(
                "--tol must be positive, got {tol}"
            )));
        }
        if command.tol_is_zero_tol() {
            problem.tolerances.zero_tol = tol;
        } else {
            problem.tolerances.witness_tol = tol;
        }
    }
    if options.n_blocks.is_some() || options.samples.is_some() {
        if !matches!(problem.mode(), Mode::Sfl | Mode::Oracle) || command == Command::Sfl {
            return Err(CliError::Usage(
                "--n-blocks and --samples apply only to `oracle` and `curves`".into(),
            ));
        }
        if let Some(n) = options.n_blocks {
            if n == 0 {
                return Err(CliError::Usage("--n-blocks must be at least 1".into()));
            }
            problem.oracle.n_blocks = Some(n);
        }
        if let Some(n) = options.samples {
            if n < 2 {
                return Err(CliError::Usage("--samples must be at least 2".into()));
            }
            problem.oracle.n_samples = n;
        }
    }
    Ok(problem)
}

/// Rendered output of one problem and its exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub body: String,
    pub exit_code: i32,
}

/// Parse, check and run one problem file's contents.
pub fn execute(command: Command, text: &[u8], options: &Options) -> Result<Output, CliError> {
    let problem = prepare(command, parse_problem(text)?, options)?;
    match command {
        Command::Spectrum => {
            let r = SpectrumReport::new(&problem.domain, options.count.max(1))?;
            Ok(Output {
                body: if options.json {
                    r.to_json()
                } else {
                    r.to_text()
                },
                exit_code: 0,
            })
        }
        Command::Curves => {
            let mut buf = Vec::new();
            emit_curves(&problem, &mut buf)?;
            Ok(Output {
                body: String::from_utf8(buf).expect("curves are ASCII"),
                exit_code: 0,
            })
        }
        _ => {
            let report = run(&problem)?;
            Ok(Output {
                body: if options.json {
                    report.to_json()
                } else {
                    report.to_text()
                },
                exit_code: report.exit_code(),
            })
        }
    }
}

/// Read, execute and return the output or the error.
pub fn execute_file(command: Command, path: &Path, options: &Options) -> Result<Output, CliError> {
    let text = std::fs::read(path).map_err(CliError::io(path.display().to_string()))?;
    execute(command, &text, options)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchEntry {
    pub input: PathBuf,
    /// Written output, absent when the problem failed.
    pub output: Option<PathBuf>,
    pub exit_code: i32,
    pub error: Option<String>,
}

/// Worst status over a batch: any error gives 1, else any indeterminate gives 2.
pub fn batch_exit_code(entries: &[BatchEntry]) -> i32 {
    if entries.iter().any(|e| e.exit_code == 1) {
        1
    } else if entries.iter().any(|e| e.exit_code == 2) {
        2
    } else {
        0
    }
}

/// Run every `*.json` file in `dir` concurrently; each output goes to
/// `<out_dir>/<stem>.<suffix>` (default `out_dir = dir`). Entries are sorted by input path.
pub fn run_batch(
    command: Command,
    dir: &Path,
    out_dir: Option<&Path>,
    options: &Options,
) -> Result<Vec<BatchEntry>, CliError> {
    let io = |p: &Path| CliError::io(p.display().to_string());
    let mut inputs: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
        .filter(|p| !is_own_output(p))
        .collect();
    inputs.sort();
    let out_dir = out_dir.unwrap_or(dir);
    std::fs::create_dir_all(out_dir).map_err(io(out_dir))?;

    let workers = std::thread::available_parallelism()
        .map_or(4, |n| n.get())
        .min(inputs.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<BatchEntry>> = Mutex::new(Vec::with_capacity(inputs.len()));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(input) = inputs.get(i) else { break };
                let entry = batch_one(command, input, out_dir, options);
                results
                    .lock()
                    .expect("no worker panics while holding the lock")
                    .push(entry);
            });
        }
    });
    let mut entries = results.into_inner().expect("workers finished");
    entries.sort_by(|a, b| a.input.cmp(&b.input));
    Ok(entries)
}

/// Reports written by an earlier batch run into the same directory.
fn is_own_output(path: &Path) -> bool {
    path.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.ends_with(".report.json") || n.ends_with(".spectrum.json"))
}

fn batch_one(command: Command, input: &Path, out_dir: &Path, options: &Options) -> BatchEntry {
    let failed = |e: CliError| BatchEntry {
        input: input.to_path_buf(),
        output: None,
        exit_code: e.exit_code(),
        error: Some(e.to_string()),
    };
    let out = match execute_file(command, input, options) {
        Ok(out) => out,
        Err(e) => return failed(e),
    };
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "problem".into());
    let target = out_dir.join(format!("{stem}.{}", command.output_suffix(options.json)));
    if let Err(e) = std::fs::write(&target, &out.body) {
        return failed(CliError::io(target.display().to_string())(e));
    }
    BatchEntry {
        input: input.to_path_buf(),
        output: Some(target),
        exit_code: out.exit_code,
        error: None,
    }
}
