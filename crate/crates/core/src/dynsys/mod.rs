//! Partial homeomorphisms of the path space, generator systems and the
//! certificate search for non-AF generator families.

mod certificate;
mod odometer;
mod partial_map;
mod system;

use thiserror::Error;

use crate::bratteli::DiagramError;

pub use certificate::{
    find_non_af_certificate, find_non_af_certificate_with, word_image, Generator, GeneratorFamily, Letter,
    NonAFCertificate, SearchOutcome, Word, WordImage,
};
pub use odometer::AddingMachine;
pub use partial_map::{PartialMap, PrefixSwap};
pub use system::{
    build_tau, canonical_system, check_conditions, graph_contained, groupoid_level, verify_nesting,
    verify_nesting_with, Condition, ConditionReport, GeneratorSystem, MatrixUnit, SystemLevel, Violation,
};
pub(crate) use system::tau_unchecked;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DynError {
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error("objects belong to different diagrams")]
    DiagramMismatch,
    #[error("swap prefixes have lengths {from_len} and {to_len}")]
    SwapLengthMismatch { from_len: usize, to_len: usize },
    #[error("swap prefixes end at vertices {from_vertex} and {to_vertex}")]
    SwapTerminalMismatch { from_vertex: usize, to_vertex: usize },
    #[error("rule sources overlap")]
    OverlappingSources,
    #[error("rule targets overlap")]
    OverlappingTargets,
    #[error("generator system is malformed at level {level}")]
    MalformedSystem { level: usize },
    #[error("level {level} out of range (system has {levels} levels)")]
    LevelOutOfRange { level: usize, levels: usize },
    #[error("vertex {vertex} out of range at level {level}")]
    VertexOutOfRange { level: usize, vertex: usize },
    #[error("generator ({level}, {vertex}, {index}) out of range")]
    GeneratorOutOfRange { level: usize, vertex: usize, index: usize },
    #[error("{0}")]
    ConditionsViolated(Violation),
    #[error("depth {depth} is too shallow, need {required}")]
    DepthTooShallow { depth: usize, required: usize },
    #[error("adding machine bases must be nonempty and at least 2")]
    InvalidBases,
    #[error("unknown generator {0}")]
    UnknownGenerator(String),
    #[error("word is undefined on the cylinder")]
    UndefinedOnCylinder,
    #[error("word does not act uniformly on the cylinder")]
    NotUniformOnCylinder,
    #[error("empty word")]
    EmptyWord,
    #[error("search bounds must be positive")]
    InvalidSearchBounds,
}
