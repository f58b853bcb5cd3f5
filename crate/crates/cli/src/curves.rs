//! Eigenvalue curves along the path as CSV for external plotting.

use std::io::Write;

use specflow_core::{
    default_n_blocks, reduced_block, spectrum, GalerkinAssembler, MatrixPath, OraclePath,
};

use crate::error::CliError;
use crate::problem::{Payload, ProblemFile};
use crate::report::{oracle_n_blocks, oracle_path};

pub const CURVES_HEADER: &str = "lambda,block_k,eig_index,value";

/// `i / (n - 1)` for `i = 0..n`, hitting both endpoints exactly.
pub fn lambda_grid(n_samples: usize) -> Vec<f64> {
    (0..n_samples)
        .map(|i| i as f64 / (n_samples - 1) as f64)
        .collect()
}

fn number(v: f64) -> String {
    // 17 significant digits
    format!("{v:.16e}")
}

/// Write the curve table and return the number of data rows.
///
/// `sfl` problems give the eigenvalues of each reduced block `L^k(B_lambda)`,
/// `k = 1..n_blocks`; `oracle` problems give the eigenvalues of the assembled
/// Galerkin matrix, reported under `block_k = 0`.
pub fn emit_curves<W: Write>(problem: &ProblemFile, out: &mut W) -> Result<usize, CliError> {
    let spec = spectrum(problem.domain.clone()).map_err(CliError::compute("domain spectrum"))?;
    let split = problem.split;
    let grid = lambda_grid(problem.oracle.n_samples);
    let mut rows: Vec<(f64, usize, usize, f64)> = Vec::new();

    match &problem.payload {
        Payload::Sfl { b0, b1 } => {
            let path = MatrixPath::linear(b0.clone(), b1.clone())
                .map_err(CliError::compute("curves path"))?;
            let path: OraclePath = path.into();
            let n_blocks = match problem.oracle.n_blocks {
                Some(n) => n,
                None => default_n_blocks(split, &path, &spec)
                    .map_err(CliError::compute("default truncation"))?,
            };
            let OraclePath::Matrix(m) = &path else {
                unreachable!("built from matrices")
            };
            let alphas = spec
                .take(n_blocks)
                .map_err(CliError::compute("domain spectrum"))?;
            for &lambda in &grid {
                let b = m.evaluate(lambda);
                for (k, &alpha) in alphas.iter().enumerate() {
                    let eig = reduced_block(split, &b, alpha)
                        .and_then(|l| l.eigenvalues())
                        .map_err(CliError::compute("reduced block"))?;
                    rows.extend(
                        eig.into_iter()
                            .enumerate()
                            .map(|(i, e)| (lambda, k + 1, i + 1, e)),
                    );
                }
            }
        }
        Payload::Oracle(input) => {
            let path = oracle_path(input)?;
            let n_blocks = oracle_n_blocks(problem, &path, &spec)?;
            let asm = GalerkinAssembler::new(split, &path, &spec, n_blocks)
                .map_err(CliError::compute("oracle assembly"))?;
            for &lambda in &grid {
                let eig = asm
                    .assemble(lambda)
                    .matrix
                    .eigenvalues()
                    .map_err(CliError::compute("oracle assembly"))?;
                rows.extend(
                    eig.into_iter()
                        .enumerate()
                        .map(|(i, e)| (lambda, 0, i + 1, e)),
                );
            }
        }
        _ => {
            return Err(CliError::Usage(format!(
                "curves need mode sfl or oracle, got {}",
                problem.mode().name()
            )))
        }
    }

    let mut text = String::with_capacity(48 * (rows.len() + 1));
    text.push_str(CURVES_HEADER);
    text.push('\n');
    for (lambda, k, i, v) in &rows {
        text.push_str(&format!("{},{k},{i},{}\n", number(*lambda), number(*v)));
    }
    let sink = CliError::io("curves output");
    out.write_all(text.as_bytes()).map_err(sink)?;
    Ok(rows.len())
}
