//! Command-line front end for `bratteli-core`.
//!
//! [`run`] parses arguments, executes one subcommand and returns the rendered
//! output together with the exit status: 0 on success, 1 on a mathematical
//! negative (certificate found, not positive, distinct, failed check), 2 on
//! input errors.

pub mod format;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use bratteli_core::duality::{build_dual_system, verify_reconstruction, ScaleExtension, SupernaturalScale};
use bratteli_core::dynsys::{
    canonical_system, check_conditions, find_non_af_certificate, ConditionReport, GeneratorFamily, SearchOutcome,
};
use bratteli_core::ktheory::{DirectLimitGroup, Verdict};
use bratteli_core::matrix::format_vector;
use bratteli_core::models;
use clap::{ArgGroup, Parser, Subcommand};
use thiserror::Error;

use format::{parse_diagram, parse_element, parse_integers, DiagramFile, FormatError};
use report::{ascii_name, Report};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NEGATIVE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "bratteli", version, about = "Exact AF groupoid and dimension group computations")]
struct Cli {
    /// Print `key=value` lines instead of the human-readable report.
    #[arg(long, global = true)]
    porcelain: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a diagram file.
    Validate { file: PathBuf },
    /// Connecting matrices and units of the canonical generator system.
    K0 {
        file: PathBuf,
        /// Number of units u_0..u_{L-1} to report.
        #[arg(long)]
        levels: usize,
    },
    /// Decide equality of two elements `LEVEL:[v1,...]` of the direct limit.
    Eq {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        #[arg(long, default_value_t = 20)]
        horizon: usize,
    },
    /// Decide positivity of an element `LEVEL:[v1,...]`.
    Pos {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        e: String,
        #[arg(long, default_value_t = 20)]
        horizon: usize,
    },
    /// Search for a non-AF certificate: `odometer` or a diagram file.
    CheckAf {
        target: String,
        /// Digit base of the odometer.
        #[arg(long, default_value_t = 2)]
        base: u64,
        #[arg(long)]
        word_len: usize,
        #[arg(long)]
        depth: usize,
    },
    /// GICAR basis change, positive cone and the map φ_n.
    #[command(group(ArgGroup::new("mode").required(true).args(["lemma", "cone", "phi"])))]
    Gicar {
        /// Compare every column of A_N with its binomial closed form.
        #[arg(long, value_name = "N")]
        lemma: Option<usize>,
        /// Test membership of --beta in the level-N cone.
        #[arg(long, value_name = "N", requires = "beta")]
        cone: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<String>,
        /// Evaluate φ_N on --alpha.
        #[arg(long, value_name = "N", requires = "alpha")]
        phi: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
    },
    /// Translation system of a divisibility chain `u_1,u_2,...`.
    Dual {
        #[arg(long)]
        scale: String,
        #[arg(long)]
        depth: usize,
        /// Rebuild the dimension group from the system and compare.
        #[arg(long)]
        verify: bool,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
    #[error("{path}: {source}")]
    Format { path: String, source: FormatError },
    #[error("{0}")]
    Input(String),
}

impl CliError {
    fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Rendered result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: u8,
}

/// Runs the command line `args` (without the program name).
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(std::iter::once(OsString::from("bratteli")).chain(args.iter().cloned())) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    stdout: String::new(),
                    stderr: text,
                    code: EXIT_INPUT,
                }
            } else {
                Outcome {
                    stdout: text,
                    stderr: String::new(),
                    code: EXIT_OK,
                }
            };
        }
    };
    let echo = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .filter(|a| a != "--porcelain")
        .collect::<Vec<_>>()
        .join(" ");
    match execute(&cli.command, &echo) {
        Ok((report, code)) => Outcome {
            stdout: report.render(cli.porcelain),
            stderr: String::new(),
            code,
        },
        Err(e) => Outcome {
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
            code: EXIT_INPUT,
        },
    }
}

fn read_diagram(path: &Path) -> Result<DiagramFile, CliError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: shown.clone(),
        reason: e.to_string(),
    })?;
    parse_diagram(&text).map_err(|source| CliError::Format { path: shown, source })
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Equal(_) | Verdict::Positive(_) | Verdict::Zero => EXIT_OK,
        Verdict::Distinct(_) | Verdict::NotPositive(_) | Verdict::Unknown(_) => EXIT_NEGATIVE,
    }
}

fn execute(command: &Command, echo: &str) -> Result<(Report, u8), CliError> {
    let mut r = Report::new(echo);
    let code = match command {
        Command::Validate { file } => validate(file, &mut r)?,
        Command::K0 { file, levels } => k0(file, *levels, &mut r)?,
        Command::Eq { file, a, b, horizon } => {
            let group = limit_group(file)?;
            let a = parse_element(a).map_err(CliError::Input)?;
            let b = parse_element(b).map_err(CliError::Input)?;
            let v = group.equal(&a, &b, *horizon).map_err(CliError::input)?;
            r.field("a", &a).field("b", &b).field("horizon", horizon).field("verdict", v);
            verdict_code(v)
        }
        Command::Pos { file, e, horizon } => {
            let group = limit_group(file)?;
            let e = parse_element(e).map_err(CliError::Input)?;
            let v = group.positive(&e, *horizon).map_err(CliError::input)?;
            r.field("e", &e).field("horizon", horizon).field("verdict", v);
            verdict_code(v)
        }
        Command::CheckAf {
            target,
            base,
            word_len,
            depth,
        } => check_af(target, *base, *word_len, *depth, &mut r)?,
        Command::Gicar {
            lemma,
            cone,
            beta,
            phi,
            alpha,
        } => match (lemma, cone, phi) {
            (Some(n), _, _) => gicar_columns(*n, &mut r),
            (_, Some(n), _) => gicar_cone(*n, beta.as_deref().unwrap_or(""), &mut r)?,
            (_, _, Some(n)) => gicar_phi(*n, alpha.as_deref().unwrap_or(""), &mut r)?,
            _ => unreachable!("clap requires one mode"),
        },
        Command::Dual { scale, depth, verify } => dual(scale, *depth, *verify, &mut r)?,
    };
    Ok((r, code))
}

fn validate(file: &Path, r: &mut Report) -> Result<u8, CliError> {
    match read_diagram(file) {
        Ok(f) => {
            let d = &f.diagram;
            let counts: Vec<String> = (0..=d.levels())
                .map(|n| d.vertex_count(n).expect("level in range").to_string())
                .collect();
            r.field("valid", true);
            if let Some(name) = &f.name {
                r.field("name", name);
            }
            r.field("levels", d.levels())
                .field("vertices", format!("[{}]", counts.join(",")))
                .field("dim_vector", format_vector(&d.dim_vector(d.levels()).expect("level in range")))
                .field(
                    "extend",
                    match f.extend {
                        format::ExtendRule::Repeat => "repeat",
                        format::ExtendRule::None => "none",
                    },
                );
            Ok(EXIT_OK)
        }
        Err(CliError::Format {
            source: FormatError::InvalidDiagram(reason),
            ..
        }) => {
            r.field("valid", false).field("reason", reason);
            Ok(EXIT_NEGATIVE)
        }
        Err(e) => Err(e),
    }
}

fn k0(file: &Path, levels: usize, r: &mut Report) -> Result<u8, CliError> {
    if levels < 2 {
        return Err(CliError::Input("--levels must be at least 2".into()));
    }
    let f = read_diagram(file)?;
    let depth = levels - 1;
    let diagram = f.diagram_with_levels(depth).map_err(CliError::Input)?;
    let system = canonical_system(&diagram, depth).map_err(CliError::input)?;
    let group = DirectLimitGroup::from_system(&system, depth).map_err(CliError::input)?;
    r.field("levels", levels);
    for n in 0..depth {
        r.field(format!("matrix[{n}]"), group.matrix(n).map_err(CliError::input)?);
    }
    for n in 0..levels {
        r.field(format!("unit[{n}]"), format_vector(&group.unit(n).map_err(CliError::input)?));
    }
    Ok(EXIT_OK)
}

fn limit_group(file: &Path) -> Result<DirectLimitGroup, CliError> {
    let f = read_diagram(file)?;
    DirectLimitGroup::from_diagram(&f.diagram, f.extend.extension()).map_err(CliError::input)
}

fn check_af(target: &str, base: u64, word_len: usize, depth: usize, r: &mut Report) -> Result<u8, CliError> {
    let family = if target == "odometer" {
        r.field("system", format!("odometer base {base}"));
        GeneratorFamily::odometer(base, depth).map_err(CliError::input)?
    } else {
        let f = read_diagram(Path::new(target))?;
        let diagram = f.diagram_with_levels(depth).map_err(CliError::Input)?;
        let system = canonical_system(&diagram, depth).map_err(CliError::input)?;
        r.field("system", "canonical");
        GeneratorFamily::from_system(&system)
    };
    r.field("generators", family.len())
        .field("word_len", word_len)
        .field("depth", depth);
    match find_non_af_certificate(&family, word_len, depth).map_err(CliError::input)? {
        SearchOutcome::Found(cert) => {
            let ascii: Vec<String> = cert
                .word
                .letters()
                .iter()
                .map(|l| {
                    let name = ascii_name(family.name(l.generator).unwrap_or("?"));
                    if l.inverse {
                        format!("{name}^-1")
                    } else {
                        name
                    }
                })
                .collect();
            let valid = cert.revalidate(&family).map_err(CliError::input)?;
            r.field("result", "certificate")
                .field_alt("word", &cert.rendered_word, ascii.join("."))
                .field("b", &cert.b_cylinder)
                .field("witness", &cert.witness)
                .field("witness_image", &cert.witness_image)
                .field("tail_identity", cert.tail_identity)
                .field("revalidated", valid);
            Ok(EXIT_NEGATIVE)
        }
        SearchOutcome::NotFound { .. } => {
            r.field("result", "not-found");
            Ok(EXIT_OK)
        }
    }
}

fn gicar_columns(n: usize, r: &mut Report) -> u8 {
    let a = models::gicar_basis_change(n);
    let mut all = true;
    r.field("n", n).field("basis_change", &a);
    for col in 1..=n + 1 {
        let closed = models::gicar_binomial_column(n, col).expect("column in range");
        let equal = closed == a.column(col - 1);
        all &= equal;
        r.field(format!("column[{col}]"), format_vector(&closed))
            .field(format!("match[{col}]"), equal);
    }
    r.field("all_match", all);
    if all {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    }
}

fn gicar_cone(n: usize, beta: &str, r: &mut Report) -> Result<u8, CliError> {
    let beta = parse_integers(beta).map_err(CliError::Input)?;
    let member = models::gicar_cone_member(n, &beta).map_err(CliError::input)?;
    let alpha = models::gicar_recover_alpha(n, &beta).map_err(CliError::input)?;
    r.field("n", n)
        .field("beta", format_vector(&beta))
        .field("alpha", format_vector(&alpha))
        .field("member", member);
    Ok(if member { EXIT_OK } else { EXIT_NEGATIVE })
}

fn gicar_phi(n: usize, alpha: &str, r: &mut Report) -> Result<u8, CliError> {
    let alpha = parse_integers(alpha).map_err(CliError::Input)?;
    let beta = models::gicar_phi(n, &alpha).map_err(CliError::input)?;
    let padded = beta.padded(n + 1);
    let member = models::gicar_cone_member(n, &padded).map_err(CliError::input)?;
    r.field("n", n)
        .field("alpha", format_vector(&alpha))
        .field("beta", format_vector(&padded))
        .field("member", member);
    Ok(EXIT_OK)
}

fn dual(scale: &str, depth: usize, verify: bool, r: &mut Report) -> Result<u8, CliError> {
    let tail = scale
        .split(',')
        .map(|w| w.trim().parse::<u64>().map_err(|_| format!("not a positive integer: `{w}`")))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::Input)?;
    let scale = SupernaturalScale::from_tail(&tail, ScaleExtension::None).map_err(CliError::input)?;
    if depth == 0 {
        return Err(CliError::Input("--depth must be at least 1".into()));
    }
    let system = build_dual_system(&scale, depth).map_err(CliError::input)?;
    let units: Vec<String> = (0..=depth).map(|n| scale.unit(n).expect("checked").to_string()).collect();
    let ratios: Vec<String> = scale.ratios(depth).map_err(CliError::input)?.iter().map(u64::to_string).collect();
    r.field("depth", depth)
        .field("units", format!("[{}]", units.join(",")))
        .field("ratios", format!("[{}]", ratios.join(",")));
    let mut ok = match check_conditions(&system, depth).map_err(CliError::input)? {
        ConditionReport::Pass => {
            r.field("conditions", "pass");
            true
        }
        ConditionReport::Fail(v) => {
            r.field("conditions", v);
            false
        }
    };
    if verify {
        let rec = verify_reconstruction(&scale, depth).map_err(CliError::input)?;
        for (n, m) in rec.matrices.iter().enumerate() {
            r.field(format!("matrix[{n}]"), m);
        }
        for (n, u) in rec.units.iter().enumerate() {
            r.field(format!("unit[{n}]"), format_vector(u));
        }
        r.field("verified", rec.matches_scale);
        ok &= rec.matches_scale;
    }
    Ok(if ok { EXIT_OK } else { EXIT_NEGATIVE })
}
