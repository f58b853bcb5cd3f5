use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use specflow_cli::{batch_exit_code, execute_file, run_batch, Command, Options};

#[derive(Parser)]
#[command(
    name = "specflow",
    version,
    about = "Index, spectral flow and bifurcation criteria for Hamiltonian elliptic systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// List the first Dirichlet eigenvalues of the problem's domain.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// How many eigenvalues to list.
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Index of a constant coefficient (mode `index`).
    Index(Common),
    /// Spectral flow of a linear path by the index formula (mode `sfl`).
    Sfl(Common),
    /// Comparison and envelope criteria (modes `compare_upper`, `compare_lower`, `envelope`).
    Compare(Common),
    /// 2x2 entry-bound conditions (mode `cond2x2`).
    Cond2x2(Common),
    /// Shrinking-domain criteria (modes `shrink_constant`, `shrink_2x2`).
    Shrink(Common),
    /// Galerkin oracle (mode `oracle`, or an `sfl` problem).
    Oracle(Common),
    /// Eigenvalue curves along the path as CSV (modes `sfl`, `oracle`).
    Curves(Common),
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["problem", "batch"])))]
struct Common {
    /// Problem file (JSON).
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Process every `*.json` file in this directory concurrently.
    #[arg(long)]
    batch: Option<PathBuf>,
    /// Emit the JSON report instead of text.
    #[arg(long)]
    json: bool,
    /// Output file (with --batch: output directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Galerkin modes for `oracle` and `curves`.
    #[arg(long)]
    n_blocks: Option<usize>,
    /// Parameter samples for `oracle` and `curves`.
    #[arg(long)]
    samples: Option<usize>,
    /// Tolerance override: zero tolerance for index/sfl/oracle/curves, witness margin otherwise.
    #[arg(long)]
    tol: Option<f64>,
}

fn main() -> ExitCode {
    // clap's own usage status is 2, which is reserved for indeterminate verdicts
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (command, common, count) = match cli.command {
        Sub::Spectrum { common, count } => (Command::Spectrum, common, count),
        Sub::Index(c) => (Command::Index, c, 0),
        Sub::Sfl(c) => (Command::Sfl, c, 0),
        Sub::Compare(c) => (Command::Compare, c, 0),
        Sub::Cond2x2(c) => (Command::Cond2x2, c, 0),
        Sub::Shrink(c) => (Command::Shrink, c, 0),
        Sub::Oracle(c) => (Command::Oracle, c, 0),
        Sub::Curves(c) => (Command::Curves, c, 0),
    };
    let options = Options {
        json: common.json,
        n_blocks: common.n_blocks,
        samples: common.samples,
        tol: common.tol,
        count,
    };
    let code = if let Some(dir) = &common.batch {
        match run_batch(command, dir, common.out.as_deref(), &options) {
            Ok(entries) => {
                for e in &entries {
                    match (&e.output, &e.error) {
                        (Some(out), _) => println!(
                            "{} -> {} (exit {})",
                            e.input.display(),
                            out.display(),
                            e.exit_code
                        ),
                        (None, Some(err)) => println!("{}: error: {err}", e.input.display()),
                        (None, None) => unreachable!("failed entries carry an error"),
                    }
                }
                batch_exit_code(&entries)
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        }
    } else {
        let path = common.problem.as_ref().expect("clap enforces one source");
        match execute_file(command, path, &options) {
            Ok(out) => match &common.out {
                Some(target) => match std::fs::write(target, &out.body) {
                    Ok(()) => out.exit_code,
                    Err(e) => {
                        eprintln!("error: {}: {e}", target.display());
                        1
                    }
                },
                None => {
                    print!("{}", out.body);
                    out.exit_code
                }
            },
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        }
    };
    ExitCode::from(code as u8)
}
