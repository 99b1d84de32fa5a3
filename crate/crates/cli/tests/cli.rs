use std::path::PathBuf;
use std::process::Command;

use bratteli_cli::format::{parse_diagram, serialize_diagram, DiagramFile, ExtendRule, FormatError};
use bratteli_cli::{run, EXIT_INPUT, EXIT_NEGATIVE, EXIT_OK};
use bratteli_core::{BratteliDiagram, IntMatrix};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn diagrams_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../diagrams")
}

fn sample(name: &str) -> String {
    diagrams_dir().join(name).to_string_lossy().into_owned()
}

fn scratch(name: &str, contents: &str) -> String {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

fn binary(args: &[&str]) -> (String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_bratteli")).args(args).output().unwrap();
    (String::from_utf8(out.stdout).unwrap(), out.status.code().unwrap())
}

fn porcelain(args: &[&str]) -> (Vec<(String, String)>, u8) {
    let out = run(std::iter::once("--porcelain").chain(args.iter().copied()));
    let fields = out
        .stdout
        .lines()
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect();
    (fields, out.code)
}

fn field<'a>(fields: &'a [(String, String)], key: &str) -> &'a str {
    &fields.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("missing {key}")).1
}

fn random_file(rng: &mut ChaCha8Rng) -> DiagramFile {
    let levels = rng.gen_range(1..=5);
    let mut matrices = Vec::new();
    let mut prev = 1;
    for _ in 0..levels {
        let next = rng.gen_range(1..=4);
        loop {
            let m = IntMatrix::from_fn(prev, next, |_, _| match rng.gen_range(0..10) {
                0..=3 => BigInt::from(0),
                4 => BigInt::from(rng.gen::<u64>()) * BigInt::from(rng.gen::<u64>()),
                _ => BigInt::from(rng.gen_range(1..=9)),
            });
            matrices.push(m);
            if bratteli_core::bratteli::validate(&matrices).is_ok() {
                break;
            }
            matrices.pop();
        }
        prev = next;
    }
    let last = matrices.last().unwrap();
    let extend = if last.rows() == last.cols() && rng.gen_bool(0.5) {
        ExtendRule::Repeat
    } else {
        ExtendRule::None
    };
    let name = rng.gen_bool(0.5).then(|| format!("random {}", rng.gen::<u16>()));
    DiagramFile {
        name,
        diagram: BratteliDiagram::new(matrices).unwrap(),
        extend,
    }
}

#[test]
fn car_round_trip_is_byte_identical() {
    let canon = "bratteli v1\nlevel 1\n2\nextend repeat\n";
    let f = parse_diagram("level 1\n2\nextend repeat\n").unwrap();
    assert_eq!(f.diagram, BratteliDiagram::car(1));
    assert_eq!(serialize_diagram(&f), canon);
    assert_eq!(serialize_diagram(&parse_diagram(canon).unwrap()), canon);
}

#[test]
fn gicar_file_round_trip_and_dimensions() {
    let text = std::fs::read_to_string(diagrams_dir().join("gicar.diagram")).unwrap();
    let f = parse_diagram(&text).unwrap();
    assert_eq!(f.diagram, BratteliDiagram::gicar(5));
    let dims: Vec<i64> = vec![1, 4, 6, 4, 1];
    assert_eq!(
        f.diagram.dim_vector(4).unwrap(),
        dims.into_iter().map(BigInt::from).collect::<Vec<_>>()
    );
    let canon = serialize_diagram(&f);
    let again = parse_diagram(&canon).unwrap();
    assert_eq!(again, f);
    assert_eq!(serialize_diagram(&again), canon);
}

#[test]
fn random_diagrams_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let f = random_file(&mut rng);
        let text = serialize_diagram(&f);
        let parsed = parse_diagram(&text).unwrap();
        assert_eq!(parsed, f);
        assert_eq!(serialize_diagram(&parsed), text);
    }
}

#[test]
fn serialization_canonicalizes() {
    let messy = "# comment\n\nbratteli v1\n  level 1  # trailing\n1   1\nlevel 2\n1 0 \n 1 1\n";
    let canon = serialize_diagram(&parse_diagram(messy).unwrap());
    assert_eq!(canon, "bratteli v1\nlevel 1\n1 1\nlevel 2\n1 0\n1 1\nextend none\n");
    assert_eq!(serialize_diagram(&parse_diagram(&canon).unwrap()), canon);
}

#[test]
fn empty_edge_section_is_a_parse_error() {
    assert!(matches!(
        parse_diagram("bratteli v1\nlevel 1\n"),
        Err(FormatError::Parse { line: 2, .. })
    ));
    let path = scratch("empty_level.diagram", "bratteli v1\nlevel 1\nlevel 2\n1\n");
    let out = run(["validate", path.as_str()]);
    assert_eq!(out.code, EXIT_INPUT);
    assert!(out.stderr.contains("line 2"), "{}", out.stderr);
}

#[test]
fn k0_car_six_levels() {
    let car = sample("car.diagram");
    let (f, code) = porcelain(&["k0", &car, "--levels", "6"]);
    assert_eq!(code, EXIT_OK);
    for n in 0..5 {
        assert_eq!(field(&f, &format!("matrix[{n}]")), "[[2]]");
    }
    assert!(f.iter().all(|(k, _)| k != "matrix[5]"));
    for (n, u) in [1, 2, 4, 8, 16, 32].iter().enumerate() {
        assert_eq!(field(&f, &format!("unit[{n}]")), format!("[{u}]"));
    }
}

#[test]
fn k0_gicar_units_are_binomial_rows() {
    let (f, code) = porcelain(&["k0", &sample("gicar.diagram"), "--levels", "5"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(field(&f, "unit[4]"), "[1,4,6,4,1]");
    assert_eq!(field(&f, "matrix[3]"), "[[1,0,0,0],[1,1,0,0],[0,1,1,0],[0,0,1,1],[0,0,0,1]]");
    let (_, code) = porcelain(&["k0", &sample("gicar.diagram"), "--levels", "9"]);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn eq_car_dyadic() {
    let car = sample("car.diagram");
    let (f, code) = porcelain(&["eq", &car, "--a", "1:[1]", "--b", "2:[2]", "--horizon", "10"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(field(&f, "verdict"), "Equal(2)");
    let (f, code) = porcelain(&["eq", &car, "--a", "1:[1]", "--b", "2:[3]", "--horizon", "10"]);
    assert_eq!(code, EXIT_NEGATIVE);
    assert_eq!(field(&f, "verdict"), "Distinct(2)");
}

#[test]
fn pos_verdicts_and_codes() {
    let car = sample("car.diagram");
    let (f, code) = porcelain(&["pos", &car, "--e", "3:[5]"]);
    assert_eq!((field(&f, "verdict"), code), ("Positive(3)", EXIT_OK));
    let (f, code) = porcelain(&["pos", &car, "--e", "3:[-5]"]);
    assert_eq!((field(&f, "verdict"), code), ("NotPositive(3)", EXIT_NEGATIVE));
    let (f, code) = porcelain(&["pos", &car, "--e", "0:[0]"]);
    assert_eq!((field(&f, "verdict"), code), ("Zero", EXIT_OK));
    let (_, code) = porcelain(&["pos", &car, "--e", "3:[1,2]"]);
    assert_eq!(code, EXIT_INPUT);
    let (_, code) = porcelain(&["pos", &car, "--e", "3:1"]);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn check_af_odometer_certificate() {
    let args = ["check-af", "odometer", "--base", "2", "--word-len", "2", "--depth", "3"];
    let (f, code) = porcelain(&args);
    assert_eq!(code, EXIT_NEGATIVE);
    assert_eq!(field(&f, "result"), "certificate");
    assert_eq!(field(&f, "word"), "phi.phi");
    assert_eq!(field(&f, "b"), "(0)");
    assert_eq!(field(&f, "witness"), "(0,0,0)");
    assert_eq!(field(&f, "witness_image"), "(0,1,0)");
    assert_eq!(field(&f, "revalidated"), "true");

    let (human, status) = binary(&args);
    assert_eq!(status, 1);
    assert!(human.lines().any(|l| l.starts_with("word:") && l.ends_with("φφ")), "{human}");
}

#[test]
fn check_af_canonical_car_finds_nothing() {
    let (f, code) = porcelain(&["check-af", &sample("car.diagram"), "--word-len", "2", "--depth", "4"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(field(&f, "result"), "not-found");
    let (_, code) = porcelain(&["check-af", "odometer", "--word-len", "0", "--depth", "3"]);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn gicar_subcommands() {
    let (f, code) = porcelain(&["gicar", "--lemma", "6"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(field(&f, "all_match"), "true");
    assert_eq!(field(&f, "column[1]"), "[1,-6,15,-20,15,-6,1]");

    let (f, code) = porcelain(&["gicar", "--phi", "2", "--alpha", "1,2,3"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(field(&f, "beta"), "[1,0,2]");
    let (f, code) = porcelain(&["gicar", "--cone", "2", "--beta", "1,0,2"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!((field(&f, "member"), field(&f, "alpha")), ("true", "[1,2,3]"));
    let (f, code) = porcelain(&["gicar", "--cone", "2", "--beta", "-1,0,0"]);
    assert_eq!(code, EXIT_NEGATIVE);
    assert_eq!(field(&f, "member"), "false");

    assert_eq!(porcelain(&["gicar", "--cone", "2", "--beta", "1,2"]).1, EXIT_INPUT);
    assert_eq!(porcelain(&["gicar", "--cone", "2"]).1, EXIT_INPUT);
    assert_eq!(porcelain(&["gicar"]).1, EXIT_INPUT);
}

#[test]
fn dual_reconstruction() {
    let (f, code) = porcelain(&["dual", "--scale", "2,6,24,120", "--depth", "4", "--verify"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(field(&f, "conditions"), "pass");
    assert_eq!(field(&f, "verified"), "true");
    let matrices: Vec<&str> = (0..4).map(|n| field(&f, &format!("matrix[{n}]"))).collect();
    assert_eq!(matrices, ["[[2]]", "[[3]]", "[[4]]", "[[5]]"]);
    assert_eq!(field(&f, "unit[4]"), "[120]");

    let out = run(["dual", "--scale", "2,5", "--depth", "2"]);
    assert_eq!(out.code, EXIT_INPUT);
    assert!(out.stderr.contains("divide"), "{}", out.stderr);
    assert_eq!(run(["dual", "--scale", "2,4", "--depth", "3"]).code, EXIT_INPUT);
}

#[test]
fn validate_exit_codes() {
    let (f, code) = porcelain(&["validate", &sample("gicar.diagram")]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(field(&f, "vertices"), "[1,2,3,4,5,6]");

    let zero_column = scratch("zero_column.diagram", "bratteli v1\nlevel 1\n1 0\n");
    let (f, code) = porcelain(&["validate", &zero_column]);
    assert_eq!(code, EXIT_NEGATIVE);
    assert_eq!(field(&f, "valid"), "false");

    let shape = scratch("shape.diagram", "bratteli v1\nlevel 1\n1 1\nlevel 2\n1\n");
    assert_eq!(porcelain(&["validate", &shape]).1, EXIT_NEGATIVE);

    let repeat = scratch("repeat.diagram", "bratteli v1\nlevel 1\n1 1\nextend repeat\n");
    assert_eq!(porcelain(&["validate", &repeat]).1, EXIT_NEGATIVE);

    let garbage = scratch("garbage.diagram", "bratteli v1\nlevel 1\ntwo\n");
    assert_eq!(porcelain(&["validate", &garbage]).1, EXIT_INPUT);
    assert_eq!(porcelain(&["validate", "/nonexistent/file.diagram"]).1, EXIT_INPUT);
    assert_eq!(porcelain(&["frobnicate"]).1, EXIT_INPUT);
}

#[test]
fn invalid_diagram_is_an_input_error_elsewhere() {
    let zero_column = scratch("zero_column_k0.diagram", "bratteli v1\nlevel 1\n1 0\n");
    assert_eq!(porcelain(&["k0", &zero_column, "--levels", "2"]).1, EXIT_INPUT);
}

#[test]
fn output_is_deterministic() {
    let car = sample("car.diagram");
    let gicar = sample("gicar.diagram");
    let triadic = sample("triadic.diagram");
    let invocations: Vec<Vec<&str>> = vec![
        vec!["k0", &gicar, "--levels", "5"],
        vec!["check-af", "odometer", "--word-len", "2", "--depth", "3"],
        vec!["check-af", &triadic, "--word-len", "2", "--depth", "3"],
        vec!["eq", &car, "--a", "4:[3]", "--b", "1:[1]"],
        vec!["gicar", "--lemma", "5"],
        vec!["dual", "--scale", "2,4,8", "--depth", "3", "--verify"],
    ];
    for args in invocations {
        for flags in [vec![], vec!["--porcelain"]] {
            let all: Vec<&str> = flags.iter().copied().chain(args.iter().copied()).collect();
            let first = binary(&all);
            let second = binary(&all);
            assert_eq!(first, second, "{all:?}");
            assert!(!first.0.is_empty());
        }
    }
}
