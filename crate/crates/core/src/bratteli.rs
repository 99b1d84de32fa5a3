//! Bratteli diagrams, their finite path space, and the clopen-set algebra of
//! cylinder sets.
//!
//! A point of the space `X` is an infinite path starting at the root. Since
//! a diagram is always a finite truncation, points only exist as limits of
//! cylinders: a [`Cylinder`] is the set of infinite paths extending a fixed
//! finite [`PathPrefix`], and a [`ClopenSet`] is a finite union of them.
//!
//! Paths are ordered lexicographically by edge id, and edge ids at each level
//! are assigned in order of `(source, target, local index)`. Vertices are
//! 0-based here; user-facing output is 1-based.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::matrix::{IntMatrix, IntVector};

/// Upper bound on the number of edges materialized at a single level.
pub const MAX_EDGES_PER_LEVEL: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagramError {
    #[error("no levels given")]
    Empty,
    #[error("level {level}: expected {expected} rows, found {found}")]
    ShapeMismatch {
        level: usize,
        expected: usize,
        found: usize,
    },
    #[error("level {level}: column {column} is all zero (vertex without incoming edges)")]
    ZeroColumn { level: usize, column: usize },
    #[error("level {level}: row {row} is all zero (vertex without outgoing edges)")]
    ZeroRow { level: usize, row: usize },
    #[error("level {level}: negative entry at row {row}, column {column}")]
    NegativeEntry {
        level: usize,
        row: usize,
        column: usize,
    },
    #[error("level {level} out of range (diagram has {levels} levels)")]
    LevelOutOfRange { level: usize, levels: usize },
    #[error("vertex {vertex} out of range at level {level} ({count} vertices)")]
    VertexOutOfRange {
        level: usize,
        vertex: usize,
        count: usize,
    },
    #[error("level {level} has too many edges to enumerate")]
    TooManyEdges { level: usize },
    #[error("invalid path prefix at step {step}")]
    InvalidPrefix { step: usize },
    #[error("refinement depth {depth} is shallower than a cylinder of depth {required}")]
    DepthTooShallow { depth: usize, required: usize },
    #[error("operands live on different diagrams")]
    DiagramMismatch,
}

/// One edge between consecutive levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    /// Index within the bundle of parallel edges `source -> target`.
    pub local: usize,
}

#[derive(Debug, Clone)]
struct LevelEdges {
    edges: Vec<Edge>,
    outgoing: Vec<Vec<u32>>,
    incoming: Vec<Vec<u32>>,
}

#[derive(Debug)]
struct Inner {
    matrices: Vec<IntMatrix>,
    edges: Vec<OnceLock<Result<LevelEdges, DiagramError>>>,
    canonical: Vec<OnceLock<Vec<PathPrefix>>>,
}

/// A validated, finitely truncated Bratteli diagram.
///
/// `edge_matrix(n)` for `1 <= n <= levels()` has shape `m_{n-1} x m_n`, and
/// entry `(i, j)` counts edges from vertex `i` at level `n-1` to vertex `j` at
/// level `n`. The root level has a single vertex. Cloning is cheap.
#[derive(Clone)]
pub struct BratteliDiagram {
    inner: Arc<Inner>,
}

impl PartialEq for BratteliDiagram {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.matrices == other.inner.matrices
    }
}

impl Eq for BratteliDiagram {}

impl fmt::Debug for BratteliDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BratteliDiagram")
            .field("matrices", &self.inner.matrices)
            .finish()
    }
}

/// Checks every diagram invariant and reports the first violation.
///
/// Levels are reported 1-based (the matrix `matrices[0]` is level 1), rows and
/// columns 0-based.
pub fn validate(matrices: &[IntMatrix]) -> Result<(), DiagramError> {
    if matrices.is_empty() {
        return Err(DiagramError::Empty);
    }
    let mut expected_rows = 1;
    for (i, m) in matrices.iter().enumerate() {
        let level = i + 1;
        if m.rows() != expected_rows {
            return Err(DiagramError::ShapeMismatch {
                level,
                expected: expected_rows,
                found: m.rows(),
            });
        }
        if m.cols() == 0 {
            return Err(DiagramError::ShapeMismatch {
                level,
                expected: 1,
                found: 0,
            });
        }
        if let Some((row, column, _)) = m.entries().find(|(_, _, v)| v.is_negative()) {
            return Err(DiagramError::NegativeEntry { level, row, column });
        }
        if let Some(column) = (0..m.cols()).find(|&c| (0..m.rows()).all(|r| m.get(r, c).is_zero())) {
            return Err(DiagramError::ZeroColumn { level, column });
        }
        if let Some(row) = (0..m.rows()).find(|&r| m.row(r).iter().all(Zero::is_zero)) {
            return Err(DiagramError::ZeroRow { level, row });
        }
        expected_rows = m.cols();
    }
    Ok(())
}

impl BratteliDiagram {
    pub fn new(matrices: Vec<IntMatrix>) -> Result<Self, DiagramError> {
        validate(&matrices)?;
        let levels = matrices.len();
        Ok(Self {
            inner: Arc::new(Inner {
                matrices,
                edges: (0..levels).map(|_| OnceLock::new()).collect(),
                canonical: (0..=levels).map(|_| OnceLock::new()).collect(),
            }),
        })
    }

    /// A diagram repeating one matrix `levels` times (e.g. CAR: `[[2]]`).
    pub fn stationary(matrix: IntMatrix, levels: usize) -> Result<Self, DiagramError> {
        Self::new(vec![matrix; levels])
    }

    /// The CAR diagram: one vertex per level joined by a double edge.
    pub fn car(levels: usize) -> Self {
        Self::stationary(IntMatrix::from_i64_rows(&[[2]]), levels).expect("CAR diagram is valid")
    }

    /// The GICAR (Pascal) diagram: vertex `j` at level `n-1` feeds vertices
    /// `j` and `j+1` at level `n`.
    pub fn gicar(levels: usize) -> Self {
        let matrices = (1..=levels)
            .map(|n| {
                IntMatrix::from_fn(n, n + 1, |i, j| {
                    if j == i || j == i + 1 {
                        BigInt::one()
                    } else {
                        BigInt::zero()
                    }
                })
            })
            .collect();
        Self::new(matrices).expect("GICAR diagram is valid")
    }

    /// Rank-one diagram with the given multiplicities (the path space of an
    /// odometer with these digit bases).
    pub fn rank_one(multiplicities: &[u64]) -> Result<Self, DiagramError> {
        Self::new(
            multiplicities
                .iter()
                .map(|&b| IntMatrix::from_fn(1, 1, |_, _| BigInt::from(b)))
                .collect(),
        )
    }

    /// Extends the diagram to `levels` levels by repeating its last matrix,
    /// which must be square for the shapes to chain.
    pub fn extended_by_repeat(&self, levels: usize) -> Result<Self, DiagramError> {
        if levels <= self.levels() {
            return Ok(self.clone());
        }
        let mut matrices = self.inner.matrices.clone();
        let last = matrices.last().cloned().expect("validated diagram is nonempty");
        matrices.resize(levels, last);
        Self::new(matrices)
    }

    /// Keeps only the first `levels` levels.
    pub fn truncated(&self, levels: usize) -> Result<Self, DiagramError> {
        if levels == 0 || levels > self.levels() {
            return Err(DiagramError::LevelOutOfRange {
                level: levels,
                levels: self.levels(),
            });
        }
        Self::new(self.inner.matrices[..levels].to_vec())
    }

    /// Number of edge levels `L`; vertex levels are `0..=L`.
    pub fn levels(&self) -> usize {
        self.inner.matrices.len()
    }

    pub fn edge_matrices(&self) -> &[IntMatrix] {
        &self.inner.matrices
    }

    /// Edge matrix between levels `n-1` and `n`, for `1 <= n <= levels()`.
    pub fn edge_matrix(&self, n: usize) -> Result<&IntMatrix, DiagramError> {
        self.check_edge_level(n)?;
        Ok(&self.inner.matrices[n - 1])
    }

    /// Number of vertices `m_n` at level `n`.
    pub fn vertex_count(&self, n: usize) -> Result<usize, DiagramError> {
        self.check_level(n)?;
        Ok(if n == 0 {
            1
        } else {
            self.inner.matrices[n - 1].cols()
        })
    }

    /// Total multiplicity `κ(r, n)` of edges into vertex `r` at level `n`.
    pub fn in_degree(&self, n: usize, r: usize) -> Result<BigInt, DiagramError> {
        self.check_vertex(n, r)?;
        let m = self.edge_matrix(n)?;
        Ok(m.column(r).into_iter().sum())
    }

    fn check_level(&self, n: usize) -> Result<(), DiagramError> {
        if n > self.levels() {
            return Err(DiagramError::LevelOutOfRange {
                level: n,
                levels: self.levels(),
            });
        }
        Ok(())
    }

    fn check_edge_level(&self, n: usize) -> Result<(), DiagramError> {
        if n == 0 || n > self.levels() {
            return Err(DiagramError::LevelOutOfRange {
                level: n,
                levels: self.levels(),
            });
        }
        Ok(())
    }

    fn check_vertex(&self, n: usize, r: usize) -> Result<(), DiagramError> {
        let count = self.vertex_count(n)?;
        if r >= count {
            return Err(DiagramError::VertexOutOfRange {
                level: n,
                vertex: r,
                count,
            });
        }
        Ok(())
    }

    /// The dimension vector `k(·, n)`: entry `r` counts root-to-`r` paths of
    /// length `n`.
    pub fn dim_vector(&self, n: usize) -> Result<IntVector, DiagramError> {
        self.check_level(n)?;
        let mut k = vec![BigInt::one()];
        for m in &self.inner.matrices[..n] {
            k = m.vec_mul(&k);
        }
        Ok(k)
    }

    fn level_edges(&self, n: usize) -> Result<&LevelEdges, DiagramError> {
        self.check_edge_level(n)?;
        self.inner.edges[n - 1]
            .get_or_init(|| build_level_edges(n, &self.inner.matrices[n - 1]))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// All edges between levels `n-1` and `n`, indexed by edge id.
    pub fn edges(&self, n: usize) -> Result<&[Edge], DiagramError> {
        Ok(&self.level_edges(n)?.edges)
    }

    pub fn edge(&self, n: usize, id: u32) -> Result<Edge, DiagramError> {
        self.edges(n)?
            .get(id as usize)
            .copied()
            .ok_or(DiagramError::InvalidPrefix { step: n })
    }

    /// Ids of edges leaving vertex `v` at level `n-1`, in increasing order.
    pub fn outgoing(&self, n: usize, v: usize) -> Result<&[u32], DiagramError> {
        let level = self.level_edges(n)?;
        level
            .outgoing
            .get(v)
            .map(Vec::as_slice)
            .ok_or(DiagramError::VertexOutOfRange {
                level: n - 1,
                vertex: v,
                count: level.outgoing.len(),
            })
    }

    /// Ids of edges entering vertex `r` at level `n`, in increasing order.
    pub fn incoming(&self, n: usize, r: usize) -> Result<&[u32], DiagramError> {
        let level = self.level_edges(n)?;
        level
            .incoming
            .get(r)
            .map(Vec::as_slice)
            .ok_or(DiagramError::VertexOutOfRange {
                level: n,
                vertex: r,
                count: level.incoming.len(),
            })
    }

    /// Checks that consecutive edges of `prefix` connect and returns its
    /// terminal vertex.
    pub fn terminal_vertex(&self, prefix: &PathPrefix) -> Result<usize, DiagramError> {
        let mut vertex = 0;
        for (i, &id) in prefix.edges().iter().enumerate() {
            let level = i + 1;
            if level > self.levels() {
                return Err(DiagramError::LevelOutOfRange {
                    level,
                    levels: self.levels(),
                });
            }
            let edge = self
                .edges(level)?
                .get(id as usize)
                .ok_or(DiagramError::InvalidPrefix { step: level })?;
            if edge.source != vertex {
                return Err(DiagramError::InvalidPrefix { step: level });
            }
            vertex = edge.target;
        }
        Ok(vertex)
    }

    /// All length-`n` paths ending at vertex `r`, in lexicographic order.
    pub fn enumerate_paths(&self, n: usize, r: usize) -> Result<Vec<PathPrefix>, DiagramError> {
        self.check_vertex(n, r)?;
        let mut ends: Vec<Vec<PathPrefix>> = vec![vec![PathPrefix::root()]];
        for level in 1..=n {
            let count = self.vertex_count(level)?;
            let mut next = vec![Vec::new(); count];
            for (target, slot) in next.iter_mut().enumerate() {
                for &id in self.incoming(level, target)? {
                    let source = self.edges(level)?[id as usize].source;
                    slot.extend(ends[source].iter().map(|p| p.child(id)));
                }
                slot.sort();
            }
            ends = next;
        }
        Ok(std::mem::take(&mut ends[r]))
    }

    /// All length-`n` paths, in lexicographic order.
    pub fn all_paths(&self, n: usize) -> Result<Vec<PathPrefix>, DiagramError> {
        self.extensions(&PathPrefix::root(), n)
    }

    /// All extensions of `prefix` to length `depth`, in lexicographic order.
    pub fn extensions(&self, prefix: &PathPrefix, depth: usize) -> Result<Vec<PathPrefix>, DiagramError> {
        if depth < prefix.len() {
            return Err(DiagramError::DepthTooShallow {
                depth,
                required: prefix.len(),
            });
        }
        self.check_level(depth)?;
        let start = self.terminal_vertex(prefix)?;
        let mut frontier = vec![(prefix.clone(), start)];
        for level in prefix.len() + 1..=depth {
            let mut next = Vec::new();
            for (p, v) in &frontier {
                for &id in self.outgoing(level, *v)? {
                    next.push((p.child(id), self.edges(level)?[id as usize].target));
                }
            }
            frontier = next;
        }
        Ok(frontier.into_iter().map(|(p, _)| p).collect())
    }

    /// The lexicographically first length-`n` path into `r`.
    pub fn canonical_path(&self, n: usize, r: usize) -> Result<PathPrefix, DiagramError> {
        self.check_vertex(n, r)?;
        Ok(self.canonical_paths(n)?[r].clone())
    }

    fn canonical_paths(&self, n: usize) -> Result<&[PathPrefix], DiagramError> {
        if let Some(paths) = self.inner.canonical[n].get() {
            return Ok(paths);
        }
        let paths = if n == 0 {
            vec![PathPrefix::root()]
        } else {
            let previous = self.canonical_paths(n - 1)?;
            let count = self.vertex_count(n)?;
            let mut paths = Vec::with_capacity(count);
            let edges = self.edges(n)?;
            for r in 0..count {
                // The minimum of c(src(e)) · e over incoming e is the first path into r.
                let best = self
                    .incoming(n, r)?
                    .iter()
                    .map(|&id| previous[edges[id as usize].source].child(id))
                    .min()
                    .expect("validated diagram has no zero column");
                paths.push(best);
            }
            paths
        };
        Ok(self.inner.canonical[n].get_or_init(|| paths))
    }

    /// The distinguished base set `B(r, n)`: the cylinder over the
    /// lexicographically first path into `r`.
    pub fn canonical_base_set(&self, n: usize, r: usize) -> Result<Cylinder, DiagramError> {
        Ok(Cylinder::new(self.canonical_path(n, r)?))
    }
}

fn build_level_edges(level: usize, m: &IntMatrix) -> Result<LevelEdges, DiagramError> {
    let mut total: usize = 0;
    for (_, _, v) in m.entries() {
        let count = v.to_usize().ok_or(DiagramError::TooManyEdges { level })?;
        total = total
            .checked_add(count)
            .filter(|&t| t <= MAX_EDGES_PER_LEVEL)
            .ok_or(DiagramError::TooManyEdges { level })?;
    }
    let mut edges = Vec::with_capacity(total);
    let mut outgoing = vec![Vec::new(); m.rows()];
    let mut incoming = vec![Vec::new(); m.cols()];
    for source in 0..m.rows() {
        for target in 0..m.cols() {
            let count = m.get(source, target).to_usize().unwrap_or(0);
            for local in 0..count {
                let id = edges.len() as u32;
                edges.push(Edge {
                    source,
                    target,
                    local,
                });
                outgoing[source].push(id);
                incoming[target].push(id);
            }
        }
    }
    Ok(LevelEdges {
        edges,
        outgoing,
        incoming,
    })
}

/// A finite path from the root, stored as edge ids (one per level).
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathPrefix {
    edges: Vec<u32>,
}

impl PathPrefix {
    pub fn root() -> Self {
        Self::default()
    }

    /// Wraps edge ids without checking them against a diagram.
    pub fn from_edges(edges: Vec<u32>) -> Self {
        Self { edges }
    }

    pub fn edges(&self) -> &[u32] {
        &self.edges
    }

    /// The level of the terminal vertex.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn child(&self, edge: u32) -> Self {
        let mut edges = Vec::with_capacity(self.edges.len() + 1);
        edges.extend_from_slice(&self.edges);
        edges.push(edge);
        Self { edges }
    }

    pub fn parent(&self) -> Option<Self> {
        let (_, rest) = self.edges.split_last()?;
        Some(Self {
            edges: rest.to_vec(),
        })
    }

    pub fn truncate(&self, len: usize) -> Self {
        Self {
            edges: self.edges[..len.min(self.edges.len())].to_vec(),
        }
    }

    pub fn is_prefix_of(&self, other: &PathPrefix) -> bool {
        other.edges.starts_with(&self.edges)
    }

    /// `self = prefix · rest`; returns `rest`.
    pub fn strip_prefix(&self, prefix: &PathPrefix) -> Option<&[u32]> {
        self.edges.strip_prefix(prefix.edges.as_slice())
    }

    pub fn concat(&self, tail: &[u32]) -> Self {
        let mut edges = self.edges.clone();
        edges.extend_from_slice(tail);
        Self { edges }
    }

    /// Two cylinders intersect iff one prefix extends the other.
    pub fn is_comparable(&self, other: &PathPrefix) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }
}

impl fmt::Display for PathPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.edges.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// The clopen set of infinite paths extending a prefix.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cylinder {
    prefix: PathPrefix,
}

impl Cylinder {
    pub fn new(prefix: PathPrefix) -> Self {
        Self { prefix }
    }

    /// The whole space `X`.
    pub fn whole() -> Self {
        Self::default()
    }

    pub fn prefix(&self) -> &PathPrefix {
        &self.prefix
    }

    pub fn depth(&self) -> usize {
        self.prefix.len()
    }

    pub fn contains(&self, other: &Cylinder) -> bool {
        self.prefix.is_prefix_of(&other.prefix)
    }

    pub fn intersects(&self, other: &Cylinder) -> bool {
        self.prefix.is_comparable(&other.prefix)
    }
}

impl From<PathPrefix> for Cylinder {
    fn from(prefix: PathPrefix) -> Self {
        Self::new(prefix)
    }
}

impl fmt::Display for Cylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.prefix.fmt(f)
    }
}

/// A finite union of cylinders in normal form.
///
/// The normal form is the coarsest antichain: no cylinder contains another,
/// no complete family of siblings is left unmerged, and cylinders are sorted.
/// Equal sets therefore have equal representations.
#[derive(Clone, PartialEq, Eq)]
pub struct ClopenSet {
    diagram: BratteliDiagram,
    cylinders: Vec<Cylinder>,
}

impl fmt::Debug for ClopenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ClopenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.cylinders.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

impl ClopenSet {
    pub fn empty(diagram: &BratteliDiagram) -> Self {
        Self {
            diagram: diagram.clone(),
            cylinders: Vec::new(),
        }
    }

    pub fn whole(diagram: &BratteliDiagram) -> Self {
        Self {
            diagram: diagram.clone(),
            cylinders: vec![Cylinder::whole()],
        }
    }

    pub fn from_cylinder(diagram: &BratteliDiagram, cylinder: Cylinder) -> Result<Self, DiagramError> {
        Self::from_cylinders(diagram, [cylinder])
    }

    /// Validates each cylinder and normalizes the union.
    pub fn from_cylinders(
        diagram: &BratteliDiagram,
        cylinders: impl IntoIterator<Item = Cylinder>,
    ) -> Result<Self, DiagramError> {
        let cylinders: Vec<Cylinder> = cylinders.into_iter().collect();
        for c in &cylinders {
            diagram.terminal_vertex(c.prefix())?;
        }
        normalize(diagram, cylinders).map(|cylinders| Self {
            diagram: diagram.clone(),
            cylinders,
        })
    }

    pub fn diagram(&self) -> &BratteliDiagram {
        &self.diagram
    }

    pub fn cylinders(&self) -> &[Cylinder] {
        &self.cylinders
    }

    pub fn is_empty(&self) -> bool {
        self.cylinders.is_empty()
    }

    /// Depth of the deepest cylinder (0 for the empty set).
    pub fn max_depth(&self) -> usize {
        self.cylinders.iter().map(Cylinder::depth).max().unwrap_or(0)
    }

    /// The exact list of depth-`depth` cylinders whose union is this set.
    pub fn refine(&self, depth: usize) -> Result<Vec<Cylinder>, DiagramError> {
        if let Some(deep) = self.cylinders.iter().find(|c| c.depth() > depth) {
            return Err(DiagramError::DepthTooShallow {
                depth,
                required: deep.depth(),
            });
        }
        let mut out = Vec::new();
        for c in &self.cylinders {
            out.extend(self.diagram.extensions(c.prefix(), depth)?.into_iter().map(Cylinder::new));
        }
        Ok(out)
    }

    /// Whether the cylinder lies entirely inside this set.
    pub fn contains_cylinder(&self, c: &Cylinder) -> bool {
        // Normal form is coarsest, but a cylinder can still be covered by
        // several deeper pieces, so fall back to a difference check.
        if self.cylinders.iter().any(|own| own.contains(c)) {
            return true;
        }
        if !self.cylinders.iter().any(|own| c.contains(own)) {
            return false;
        }
        ClopenSet::from_cylinder(&self.diagram, c.clone())
            .and_then(|single| single.difference(self))
            .map(|rest| rest.is_empty())
            .unwrap_or(false)
    }

    fn check_same(&self, other: &ClopenSet) -> Result<(), DiagramError> {
        if self.diagram != other.diagram {
            return Err(DiagramError::DiagramMismatch);
        }
        Ok(())
    }

    pub fn union(&self, other: &ClopenSet) -> Result<ClopenSet, DiagramError> {
        self.check_same(other)?;
        let all = self.cylinders.iter().chain(&other.cylinders).cloned().collect();
        Ok(Self {
            diagram: self.diagram.clone(),
            cylinders: normalize(&self.diagram, all)?,
        })
    }

    pub fn intersection(&self, other: &ClopenSet) -> Result<ClopenSet, DiagramError> {
        self.check_same(other)?;
        let mut out = Vec::new();
        for a in &self.cylinders {
            for b in &other.cylinders {
                if a.contains(b) {
                    out.push(b.clone());
                } else if b.contains(a) {
                    out.push(a.clone());
                }
            }
        }
        Ok(Self {
            diagram: self.diagram.clone(),
            cylinders: normalize(&self.diagram, out)?,
        })
    }

    pub fn difference(&self, other: &ClopenSet) -> Result<ClopenSet, DiagramError> {
        self.check_same(other)?;
        let mut out = Vec::new();
        for a in &self.cylinders {
            let inside: Vec<&Cylinder> = other.cylinders.iter().filter(|b| a.intersects(b)).collect();
            subtract(&self.diagram, a, &inside, &mut out)?;
        }
        Ok(Self {
            diagram: self.diagram.clone(),
            cylinders: normalize(&self.diagram, out)?,
        })
    }

    pub fn is_subset(&self, other: &ClopenSet) -> Result<bool, DiagramError> {
        Ok(self.difference(other)?.is_empty())
    }

    pub fn is_disjoint(&self, other: &ClopenSet) -> Result<bool, DiagramError> {
        Ok(self.intersection(other)?.is_empty())
    }

    /// Extensional equality; the normal form makes this structural.
    pub fn equals(&self, other: &ClopenSet) -> Result<bool, DiagramError> {
        self.check_same(other)?;
        Ok(self.cylinders == other.cylinders)
    }
}

/// Pushes the pieces of `a \ ⋃ removed` onto `out`. Every cylinder in
/// `removed` intersects `a`.
fn subtract(
    diagram: &BratteliDiagram,
    a: &Cylinder,
    removed: &[&Cylinder],
    out: &mut Vec<Cylinder>,
) -> Result<(), DiagramError> {
    if removed.is_empty() {
        out.push(a.clone());
        return Ok(());
    }
    if removed.iter().any(|b| b.contains(a)) {
        return Ok(());
    }
    let depth = a.depth() + 1;
    for child in diagram.extensions(a.prefix(), depth)? {
        let child = Cylinder::new(child);
        let inside: Vec<&Cylinder> = removed.iter().copied().filter(|b| child.intersects(b)).collect();
        subtract(diagram, &child, &inside, out)?;
    }
    Ok(())
}

/// Sorts, drops nested cylinders and merges complete sibling families.
fn normalize(diagram: &BratteliDiagram, mut cylinders: Vec<Cylinder>) -> Result<Vec<Cylinder>, DiagramError> {
    cylinders.sort();
    cylinders.dedup();
    let mut antichain: Vec<Cylinder> = Vec::with_capacity(cylinders.len());
    for c in cylinders {
        // Extensions of a prefix sort directly after it.
        if antichain.last().is_some_and(|last| last.contains(&c)) {
            continue;
        }
        antichain.push(c);
    }
    let max_depth = antichain.iter().map(Cylinder::depth).max().unwrap_or(0);
    for depth in (1..=max_depth).rev() {
        let mut families: BTreeMap<PathPrefix, usize> = BTreeMap::new();
        for c in antichain.iter().filter(|c| c.depth() == depth) {
            *families.entry(c.prefix().parent().expect("depth >= 1")).or_default() += 1;
        }
        let mut complete = Vec::new();
        for (parent, count) in families {
            let v = diagram.terminal_vertex(&parent)?;
            if diagram.outgoing(depth, v)?.len() == count {
                complete.push(parent);
            }
        }
        if complete.is_empty() {
            continue;
        }
        antichain.retain(|c| {
            c.depth() != depth
                || complete
                    .binary_search(&c.prefix().parent().expect("depth >= 1"))
                    .is_err()
        });
        antichain.extend(complete.into_iter().map(Cylinder::new));
        antichain.sort();
    }
    Ok(antichain)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(edges: &[u32]) -> PathPrefix {
        PathPrefix::from_edges(edges.to_vec())
    }

    fn set(d: &BratteliDiagram, cyls: &[&[u32]]) -> ClopenSet {
        ClopenSet::from_cylinders(d, cyls.iter().map(|e| Cylinder::new(p(e)))).unwrap()
    }

    #[test]
    fn validate_reports_violations() {
        assert!(validate(BratteliDiagram::car(3).edge_matrices()).is_ok());
        assert!(validate(BratteliDiagram::gicar(6).edge_matrices()).is_ok());
        assert_eq!(
            validate(&[IntMatrix::from_i64_rows(&[[0]])]),
            Err(DiagramError::ZeroColumn { level: 1, column: 0 })
        );
        assert_eq!(
            validate(&[IntMatrix::from_i64_rows(&[[1, 1]]), IntMatrix::from_i64_rows(&[[1]])]),
            Err(DiagramError::ShapeMismatch {
                level: 2,
                expected: 2,
                found: 1
            })
        );
        assert_eq!(
            validate(&[IntMatrix::from_i64_rows(&[[1, 1]]), IntMatrix::from_i64_rows(&[[1], [0]])]),
            Err(DiagramError::ZeroRow { level: 2, row: 1 })
        );
        assert_eq!(
            validate(&[IntMatrix::from_i64_rows(&[[2, -1]])]),
            Err(DiagramError::NegativeEntry {
                level: 1,
                row: 0,
                column: 1
            })
        );
        assert_eq!(validate(&[]), Err(DiagramError::Empty));
    }

    #[test]
    fn dimension_vectors() {
        let car = BratteliDiagram::car(6);
        assert_eq!(car.dim_vector(5).unwrap(), crate::matrix::int_vector(&[32]));
        assert_eq!(car.dim_vector(0).unwrap(), crate::matrix::int_vector(&[1]));
        assert!(matches!(
            car.dim_vector(7),
            Err(DiagramError::LevelOutOfRange { .. })
        ));
        let gicar = BratteliDiagram::gicar(5);
        assert_eq!(
            gicar.dim_vector(4).unwrap(),
            crate::matrix::int_vector(&[1, 4, 6, 4, 1])
        );
    }

    #[test]
    fn path_enumeration_order() {
        let car = BratteliDiagram::car(3);
        let paths = car.enumerate_paths(2, 0).unwrap();
        assert_eq!(paths, vec![p(&[0, 0]), p(&[0, 1]), p(&[1, 0]), p(&[1, 1])]);
        assert_eq!(car.enumerate_paths(0, 0).unwrap(), vec![PathPrefix::root()]);
        let gicar = BratteliDiagram::gicar(3);
        assert_eq!(gicar.enumerate_paths(2, 1).unwrap().len(), 2);
        assert!(matches!(
            gicar.enumerate_paths(2, 3),
            Err(DiagramError::VertexOutOfRange { .. })
        ));
    }

    #[test]
    fn canonical_base_sets() {
        let car = BratteliDiagram::car(4);
        assert_eq!(car.canonical_base_set(0, 0).unwrap(), Cylinder::whole());
        assert_eq!(car.canonical_base_set(3, 0).unwrap(), Cylinder::new(p(&[0, 0, 0])));
        // GICAR level 1: edge 0 goes to vertex 0, edge 1 to vertex 1.
        let gicar = BratteliDiagram::gicar(3);
        assert_eq!(gicar.canonical_base_set(1, 1).unwrap(), Cylinder::new(p(&[1])));
        for n in 0..=3 {
            let bases: Vec<Cylinder> = (0..=n)
                .map(|r| gicar.canonical_base_set(n, r).unwrap())
                .collect();
            for (i, a) in bases.iter().enumerate() {
                for b in &bases[i + 1..] {
                    assert!(!a.intersects(b));
                }
            }
        }
    }

    #[test]
    fn canonical_path_is_first_enumerated() {
        let d = BratteliDiagram::new(vec![
            IntMatrix::from_i64_rows(&[[1, 2]]),
            IntMatrix::from_i64_rows(&[[0, 1], [3, 1]]),
        ])
        .unwrap();
        for r in 0..2 {
            assert_eq!(
                d.canonical_path(2, r).unwrap(),
                d.enumerate_paths(2, r).unwrap()[0]
            );
        }
    }

    #[test]
    fn refinement() {
        let car = BratteliDiagram::car(3);
        let a = set(&car, &[&[0]]);
        assert_eq!(
            a.refine(2).unwrap(),
            vec![Cylinder::new(p(&[0, 0])), Cylinder::new(p(&[0, 1]))]
        );
        assert!(ClopenSet::empty(&car).refine(3).unwrap().is_empty());
        assert!(matches!(
            set(&car, &[&[0, 1]]).refine(1),
            Err(DiagramError::DepthTooShallow { .. })
        ));
        let gicar = BratteliDiagram::gicar(3);
        assert_eq!(ClopenSet::whole(&gicar).refine(2).unwrap().len(), 4);
    }

    #[test]
    fn normal_form_merges_siblings() {
        let car = BratteliDiagram::car(3);
        assert_eq!(set(&car, &[&[0], &[1]]), ClopenSet::whole(&car));
        assert_eq!(set(&car, &[&[0, 0], &[0, 1], &[1]]), ClopenSet::whole(&car));
        assert_eq!(set(&car, &[&[0], &[0, 1]]).cylinders(), &[Cylinder::new(p(&[0]))]);
    }

    #[test]
    fn set_algebra() {
        let car = BratteliDiagram::car(3);
        let a = set(&car, &[&[0]]);
        let empty = ClopenSet::empty(&car);
        assert_eq!(a.union(&empty).unwrap(), a);
        assert_eq!(
            a.intersection(&set(&car, &[&[0, 1]])).unwrap(),
            set(&car, &[&[0, 1]])
        );
        assert_eq!(
            ClopenSet::whole(&car).difference(&set(&car, &[&[0, 1, 0]])).unwrap(),
            set(&car, &[&[1], &[0, 0], &[0, 1, 1]])
        );
        assert!(set(&car, &[&[0, 0], &[0, 1]]).equals(&a).unwrap());
        let other = ClopenSet::whole(&BratteliDiagram::car(2));
        assert_eq!(a.union(&other), Err(DiagramError::DiagramMismatch));
    }

    #[test]
    fn contains_cylinder_handles_split_cover() {
        let car = BratteliDiagram::car(3);
        let s = set(&car, &[&[0, 0], &[1]]);
        assert!(s.contains_cylinder(&Cylinder::new(p(&[1, 0]))));
        assert!(!s.contains_cylinder(&Cylinder::new(p(&[0]))));
    }

    #[test]
    fn invalid_prefix_rejected() {
        let gicar = BratteliDiagram::gicar(3);
        // Edge 0 at level 1 ends at vertex 0, whose outgoing edges at level 2 are 0 and 1.
        assert!(ClopenSet::from_cylinder(&gicar, Cylinder::new(p(&[0, 2]))).is_err());
        assert!(ClopenSet::from_cylinder(&gicar, Cylinder::new(p(&[0, 1]))).is_ok());
    }
}
