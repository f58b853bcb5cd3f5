use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use specflow_cli::{
    emit_curves, parse_problem, prepare, CliError, Command, Options, Payload, ProblemFile,
    CURVES_HEADER,
};
use specflow_core::{
    default_n_blocks, oracle_sfl_crossings, DomainSpec, MatrixPath, OraclePath, SignatureSplit,
    SymmetricMatrix,
};

type Curves = BTreeMap<(usize, usize), Vec<(f64, f64)>>;

fn example(name: &str) -> ProblemFile {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(name);
    parse_problem(&std::fs::read(path).unwrap()).unwrap()
}

fn csv(problem: &ProblemFile) -> String {
    let mut out = Vec::new();
    let rows = emit_curves(problem, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), rows + 1);
    text
}

fn curves(text: &str) -> Curves {
    let mut map = Curves::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 4, "{line}");
        map.entry((f[1].parse().unwrap(), f[2].parse().unwrap()))
            .or_default()
            .push((f[0].parse().unwrap(), f[3].parse().unwrap()));
    }
    map
}

fn with_samples(mut p: ProblemFile, n: usize) -> ProblemFile {
    p.oracle.n_samples = n;
    p
}

#[test]
fn format_is_lf_csv_with_seventeen_digits() {
    let text = csv(&with_samples(example("indefinite_pair.json"), 5));
    assert!(text.starts_with(&format!("{CURVES_HEADER}\n")));
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        for number in [f[0], f[3]] {
            let mantissa = number.split('e').next().unwrap().trim_start_matches('-');
            let digits = mantissa.chars().filter(char::is_ascii_digit).count();
            assert_eq!(digits, 17, "{number}");
            assert!(!number.contains(','));
        }
    }
}

#[test]
fn two_samples_give_two_rows_per_curve() {
    let p = with_samples(example("indefinite_pair.json"), 2);
    let c = curves(&csv(&p));
    let Payload::Sfl { b0, b1 } = &p.payload else {
        unreachable!()
    };
    let path: OraclePath = MatrixPath::linear(b0.clone(), b1.clone()).unwrap().into();
    let s = specflow_core::spectrum(DomainSpec::interval(PI)).unwrap();
    let n = default_n_blocks(p.split, &path, &s).unwrap();
    assert_eq!(c.len(), 2 * n);
    for ((k, _), points) in &c {
        assert!((1..=n).contains(k));
        assert_eq!(
            points.iter().map(|p| p.0).collect::<Vec<_>>(),
            vec![0.0, 1.0]
        );
    }
}

#[test]
fn rows_are_ordered_by_lambda_block_index() {
    let text = csv(&with_samples(example("indefinite_pair.json"), 7));
    let keys: Vec<(f64, usize, usize)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
            )
        })
        .collect();
    assert!(keys
        .windows(2)
        .all(|w| w[0].partial_cmp(&w[1]) == Some(std::cmp::Ordering::Less)));
}

#[test]
fn constant_path_gives_constant_curves() {
    let b = SymmetricMatrix::from_rows(vec![vec![3.0, 1.0], vec![1.0, -2.0]]).unwrap();
    let split = SignatureSplit::new(1, 1).unwrap();
    let sfl = ProblemFile::new(
        DomainSpec::interval(PI),
        split,
        Payload::Sfl {
            b0: b.clone(),
            b1: b,
        },
    );
    for p in [
        sfl.clone(),
        prepare(Command::Oracle, sfl, &Options::default()).unwrap(),
    ] {
        let c = curves(&csv(&with_samples(p, 17)));
        for points in c.values() {
            assert_eq!(points.len(), 17);
            assert!(points.iter().all(|q| q.1 == points[0].1));
        }
    }
}

#[test]
fn oracle_curves_are_reported_under_block_zero() {
    let p = prepare(
        Command::Oracle,
        with_samples(example("indefinite_pair.json"), 3),
        &Options::default(),
    )
    .unwrap();
    let c = curves(&csv(&p));
    assert!(c.keys().all(|(k, _)| *k == 0));
    // default truncation is 6 modes of size 2
    assert_eq!(
        c.keys().map(|(_, i)| *i).collect::<Vec<_>>(),
        (1..=12).collect::<Vec<_>>()
    );
    let field = curves(&csv(&with_samples(example("field_oracle.json"), 3)));
    assert!(field.keys().all(|(k, _)| *k == 0));
}

/// Indices `i` with a crossing in `[lambda_i, lambda_{i+1}]` according to the curves.
fn sign_change_cells(c: &Curves) -> Vec<usize> {
    let mut cells: Vec<usize> = c
        .values()
        .flat_map(|pts| {
            pts.windows(2)
                .enumerate()
                .filter(|(_, w)| (w[0].1 < 0.0) != (w[1].1 < 0.0))
                .map(|(i, _)| i)
                .collect::<Vec<_>>()
        })
        .collect();
    cells.sort_unstable();
    cells
}

#[test]
fn curve_zero_crossings_match_oracle_crossings() {
    for p in [
        example("indefinite_pair.json"),
        prepare(
            Command::Oracle,
            example("indefinite_pair.json"),
            &Options::default(),
        )
        .unwrap(),
    ] {
        let n_samples = p.oracle.n_samples;
        let c = curves(&csv(&p));
        let split = p.split;
        let (Payload::Sfl { b0, b1 }
        | Payload::Oracle(specflow_cli::OracleInput::Matrices { b0, b1 })) = &p.payload
        else {
            unreachable!()
        };
        let path: OraclePath = MatrixPath::linear(b0.clone(), b1.clone()).unwrap().into();
        let s = specflow_core::spectrum(p.domain.clone()).unwrap();
        let n = default_n_blocks(split, &path, &s).unwrap();
        let report = oracle_sfl_crossings(split, &path, &s, n, n_samples, 1e-9).unwrap();
        let h = 1.0 / (n_samples - 1) as f64;
        let mut expected: Vec<usize> = report
            .crossings
            .iter()
            .flat_map(|x| std::iter::repeat_n((x.lambda / h).floor() as usize, x.kernel_dim))
            .collect();
        expected.sort_unstable();
        assert!(!expected.is_empty());
        assert_eq!(sign_change_cells(&c), expected);
    }
}

#[test]
fn curves_reject_other_modes() {
    let mut out = Vec::new();
    let err = emit_curves(&example("shrink_scalar.json"), &mut out).unwrap_err();
    assert!(matches!(err, CliError::Usage(_)));
    assert!(prepare(
        Command::Curves,
        example("shrink_scalar.json"),
        &Options::default()
    )
    .is_err());
}

struct FailingSink;

impl std::io::Write for FailingSink {
    fn write(&mut self, _: &[u8]) -> std::io::Result<usize> {
        Err(std::io::Error::other("disk full"))
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

#[test]
fn sink_failures_are_io_errors() {
    let err = emit_curves(
        &with_samples(example("indefinite_pair.json"), 2),
        &mut FailingSink,
    )
    .unwrap_err();
    assert!(matches!(err, CliError::Io { .. }));
}
