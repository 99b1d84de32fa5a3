//! Exact computations for AF groupoids built from partial dynamical systems.
//!
//! The crate runs in both directions:
//!
//! * from a Bratteli diagram (or a hand-built family of partial
//!   homeomorphisms) to the groupoid filtration and its dimension group
//!   `(K_0, K_0^+, u)`, see [`bratteli`], [`dynsys`] and [`ktheory`];
//! * from a rank-one dimension group given by a divisibility chain of order
//!   units back to a generating system of translations on a profinite
//!   character group, see [`duality`].
//!
//! [`dynsys::find_non_af_certificate`] searches for the obstruction that
//! rules out AF-ness (the odometer being the standard example), and
//! [`models`] holds closed forms for the CAR, Cantor, hybrid and GICAR
//! algebras.
//!
//! All arithmetic is exact. Data-parallel loops use rayon when the
//! `parallel` feature is enabled (the default); see [`Execution`].

pub mod bratteli;
pub mod duality;
pub mod dynsys;
pub mod ktheory;
pub mod matrix;
pub mod models;
mod par;

pub use bratteli::{BratteliDiagram, ClopenSet, Cylinder, DiagramError, PathPrefix};
pub use dynsys::{GeneratorSystem, PartialMap, PrefixSwap};
pub use ktheory::{DirectLimitGroup, LimitElement, Verdict};
pub use matrix::{IntMatrix, IntVector};
pub use par::Execution;
