//! The `bratteli v1` diagram file format and command-line element literals.
//!
//! ```text
//! bratteli v1
//! name car
//! level 1
//! 2
//! extend repeat
//! ```
//!
//! Each `level n` block holds `m_{n-1}` rows of `m_n` nonnegative integers.
//! `#` starts a comment. The header may be omitted on input; serialization
//! always writes it, and always writes the `extend` line.

use std::fmt::Write as _;

use bratteli_core::ktheory::{Extension, LimitElement};
use bratteli_core::{BratteliDiagram, IntMatrix};
use num_bigint::BigInt;
use thiserror::Error;

pub const HEADER: &str = "bratteli v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),
}

fn parse_error(line: usize, reason: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtendRule {
    Repeat,
    None,
}

impl ExtendRule {
    pub fn extension(self) -> Extension {
        match self {
            ExtendRule::Repeat => Extension::RepeatLast,
            ExtendRule::None => Extension::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagramFile {
    pub name: Option<String>,
    pub diagram: BratteliDiagram,
    pub extend: ExtendRule,
}

impl DiagramFile {
    /// The diagram with at least `levels` levels, repeating the last matrix
    /// when the file allows it.
    pub fn diagram_with_levels(&self, levels: usize) -> Result<BratteliDiagram, String> {
        let have = self.diagram.levels();
        if levels <= have {
            return Ok(self.diagram.clone());
        }
        match self.extend {
            ExtendRule::Repeat => self.diagram.extended_by_repeat(levels).map_err(|e| e.to_string()),
            ExtendRule::None => Err(format!("diagram has {have} levels, {levels} needed (file says extend none)")),
        }
    }
}

/// Parses the unvalidated matrices of a diagram file.
fn parse_sections(text: &str) -> Result<(Option<String>, Vec<IntMatrix>, ExtendRule), FormatError> {
    let lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut lines = lines.peekable();
    match lines.peek() {
        Some((_, l)) if *l == HEADER => {
            lines.next();
        }
        Some((n, l)) if l.starts_with("bratteli") => {
            return Err(parse_error(*n, format!("unsupported header `{l}`, expected `{HEADER}`")))
        }
        Some(_) => {}
        None => return Err(parse_error(1, "empty input")),
    }

    let mut name = None;
    let mut extend = None;
    let mut blocks: Vec<(usize, Vec<Vec<BigInt>>)> = Vec::new();
    for (n, line) in lines {
        if extend.is_some() {
            return Err(parse_error(n, "content after `extend`"));
        }
        let mut words = line.split_whitespace();
        let head = words.next().unwrap_or("");
        match head {
            "name" => {
                if name.is_some() || !blocks.is_empty() {
                    return Err(parse_error(n, "`name` must appear once, before the levels"));
                }
                let rest = line["name".len()..].trim();
                if rest.is_empty() {
                    return Err(parse_error(n, "empty name"));
                }
                name = Some(rest.to_string());
            }
            "level" => {
                let expected = blocks.len() + 1;
                let level: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| parse_error(n, "expected `level <n>`"))?;
                if level != expected || words.next().is_some() {
                    return Err(parse_error(n, format!("expected `level {expected}`")));
                }
                if let Some((at, rows)) = blocks.last() {
                    if rows.is_empty() {
                        return Err(parse_error(*at, "level has no rows"));
                    }
                }
                blocks.push((n, Vec::new()));
            }
            "extend" => {
                extend = Some(match (words.next(), words.next()) {
                    (Some("repeat"), None) => ExtendRule::Repeat,
                    (Some("none"), None) => ExtendRule::None,
                    _ => return Err(parse_error(n, "expected `extend repeat` or `extend none`")),
                });
            }
            _ => {
                let Some((_, rows)) = blocks.last_mut() else {
                    return Err(parse_error(n, format!("unexpected `{line}` before the first level")));
                };
                let row = line
                    .split_whitespace()
                    .map(|w| {
                        if w.bytes().all(|b| b.is_ascii_digit()) {
                            w.parse::<BigInt>().ok()
                        } else {
                            None
                        }
                    })
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| parse_error(n, format!("expected nonnegative integers, found `{line}`")))?;
                if rows.first().is_some_and(|r: &Vec<BigInt>| r.len() != row.len()) {
                    return Err(parse_error(n, "rows of a level differ in length"));
                }
                rows.push(row);
            }
        }
    }
    match blocks.last() {
        None => return Err(parse_error(text.lines().count().max(1), "no levels")),
        Some((at, rows)) if rows.is_empty() => return Err(parse_error(*at, "level has no rows")),
        _ => {}
    }
    let matrices = blocks
        .into_iter()
        .map(|(_, rows)| IntMatrix::from_rows(rows).expect("rows checked rectangular"))
        .collect();
    Ok((name, matrices, extend.unwrap_or(ExtendRule::None)))
}

pub fn parse_diagram(text: &str) -> Result<DiagramFile, FormatError> {
    let (name, matrices, extend) = parse_sections(text)?;
    let diagram = BratteliDiagram::new(matrices).map_err(|e| FormatError::InvalidDiagram(e.to_string()))?;
    let last = diagram.edge_matrices().last().expect("validated diagram is nonempty");
    if extend == ExtendRule::Repeat && last.rows() != last.cols() {
        return Err(FormatError::InvalidDiagram("`extend repeat` needs a square last matrix".into()));
    }
    Ok(DiagramFile { name, diagram, extend })
}

pub fn serialize_diagram(file: &DiagramFile) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    if let Some(name) = &file.name {
        let _ = writeln!(out, "name {name}");
    }
    for (i, m) in file.diagram.edge_matrices().iter().enumerate() {
        let _ = writeln!(out, "level {}", i + 1);
        for r in 0..m.rows() {
            let row: Vec<String> = m.row(r).iter().map(BigInt::to_string).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out.push_str(match file.extend {
        ExtendRule::Repeat => "extend repeat\n",
        ExtendRule::None => "extend none\n",
    });
    out
}

/// `LEVEL:[v1,v2,...]`.
pub fn parse_element(text: &str) -> Result<LimitElement, String> {
    let bad = || format!("expected LEVEL:[v1,v2,...], found `{text}`");
    let (level, rest) = text.split_once(':').ok_or_else(bad)?;
    let level: usize = level.trim().parse().map_err(|_| bad())?;
    let inner = rest
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(bad)?;
    let vector = parse_integers(inner).map_err(|_| bad())?;
    if vector.is_empty() {
        return Err(bad());
    }
    Ok(LimitElement::new(level, vector))
}

/// Comma- or space-separated integers.
pub fn parse_integers(text: &str) -> Result<Vec<BigInt>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|w| !w.is_empty())
        .map(|w| w.parse::<BigInt>().map_err(|_| format!("not an integer: `{w}`")))
        .collect()
}
