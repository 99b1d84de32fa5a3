use std::collections::HashMap;
use std::fmt;

use crate::bratteli::{BratteliDiagram, ClopenSet, Cylinder, PathPrefix};
use crate::par::{self, Execution};

use super::{DynError, PartialMap};

/// One level `n >= 1` of a generator system: the base sets `B(r, n)` and for
/// each `r` the ordered family `σ_{r,1}, …, σ_{r,κ(r,n)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemLevel {
    pub base_sets: Vec<Cylinder>,
    pub generators: Vec<Vec<PartialMap>>,
}

/// An organized family of partial homeomorphisms `σ_{r,s}^{(n)}` on the path
/// space of a diagram, together with their common domains `B(r, n)`.
///
/// Construction only checks shapes; [`check_conditions`] decides whether the
/// family actually satisfies the structural conditions, so that hand-built
/// and deliberately broken systems can be represented.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSystem {
    diagram: BratteliDiagram,
    levels: Vec<SystemLevel>,
}

impl GeneratorSystem {
    pub fn new(diagram: &BratteliDiagram, levels: Vec<SystemLevel>) -> Result<Self, DynError> {
        for (i, level) in levels.iter().enumerate() {
            let n = i + 1;
            if level.base_sets.len() != level.generators.len() || level.base_sets.is_empty() {
                return Err(DynError::MalformedSystem { level: n });
            }
            if level.generators.iter().any(Vec::is_empty) {
                return Err(DynError::MalformedSystem { level: n });
            }
            for c in &level.base_sets {
                diagram.terminal_vertex(c.prefix())?;
            }
            if level.generators.iter().flatten().any(|g| g.diagram() != diagram) {
                return Err(DynError::DiagramMismatch);
            }
        }
        Ok(Self {
            diagram: diagram.clone(),
            levels,
        })
    }

    pub fn diagram(&self) -> &BratteliDiagram {
        &self.diagram
    }

    /// Number of generator levels `N`.
    pub fn levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, n: usize) -> Result<&SystemLevel, DynError> {
        self.check_level(n)?;
        Ok(&self.levels[n - 1])
    }

    fn check_level(&self, n: usize) -> Result<(), DynError> {
        if n == 0 || n > self.levels.len() {
            return Err(DynError::LevelOutOfRange {
                level: n,
                levels: self.levels.len(),
            });
        }
        Ok(())
    }

    /// Number of base sets `m_n` (1 at level 0).
    pub fn base_count(&self, n: usize) -> Result<usize, DynError> {
        if n == 0 {
            return Ok(1);
        }
        Ok(self.level(n)?.base_sets.len())
    }

    /// `B(r, n)`; `B(0, 0)` is the whole space.
    pub fn base_set(&self, n: usize, r: usize) -> Result<Cylinder, DynError> {
        if n == 0 {
            return if r == 0 {
                Ok(Cylinder::whole())
            } else {
                Err(DynError::VertexOutOfRange { level: 0, vertex: r })
            };
        }
        self.level(n)?
            .base_sets
            .get(r)
            .cloned()
            .ok_or(DynError::VertexOutOfRange { level: n, vertex: r })
    }

    /// `U_n = ⋃_r B(r, n)`.
    pub fn u_set(&self, n: usize) -> Result<ClopenSet, DynError> {
        if n == 0 {
            return Ok(ClopenSet::whole(&self.diagram));
        }
        Ok(ClopenSet::from_cylinders(&self.diagram, self.level(n)?.base_sets.iter().cloned())?)
    }

    /// `σ_{r,s}^{(n)}`, 0-based `r` and `s`.
    pub fn generator(&self, n: usize, r: usize, s: usize) -> Result<&PartialMap, DynError> {
        self.level(n)?
            .generators
            .get(r)
            .and_then(|family| family.get(s))
            .ok_or(DynError::GeneratorOutOfRange { level: n, vertex: r, index: s })
    }

    pub fn generator_mut(&mut self, n: usize, r: usize, s: usize) -> Result<&mut PartialMap, DynError> {
        self.check_level(n)?;
        self.levels[n - 1]
            .generators
            .get_mut(r)
            .and_then(|family| family.get_mut(s))
            .ok_or(DynError::GeneratorOutOfRange { level: n, vertex: r, index: s })
    }

    /// Swaps the positions of two generators in the family at `(n, r)`.
    pub fn swap_generators(&mut self, n: usize, r: usize, s1: usize, s2: usize) -> Result<(), DynError> {
        self.generator(n, r, s1)?;
        self.generator(n, r, s2)?;
        self.levels[n - 1].generators[r].swap(s1, s2);
        Ok(())
    }

    /// All generators in `(n, r, s)` order, with their 0-based indices.
    pub fn all_generators(&self) -> impl Iterator<Item = ((usize, usize, usize), &PartialMap)> {
        self.levels.iter().enumerate().flat_map(|(i, level)| {
            level.generators.iter().enumerate().flat_map(move |(r, family)| {
                family.iter().enumerate().map(move |(s, g)| ((i + 1, r, s), g))
            })
        })
    }
}

/// The system read off a diagram: `B(r, n)` is the cylinder over the first
/// path into `r`, and the generators at `(n, r)` are the swaps from that path
/// to `c(i, n-1)·e`, one for every edge `e: i -> r`, ordered by target path.
pub fn canonical_system(diagram: &BratteliDiagram, levels: usize) -> Result<GeneratorSystem, DynError> {
    if levels > diagram.levels() {
        return Err(DynError::LevelOutOfRange {
            level: levels,
            levels: diagram.levels(),
        });
    }
    let mut out = Vec::with_capacity(levels);
    for n in 1..=levels {
        let count = diagram.vertex_count(n)?;
        let edges = diagram.edges(n)?;
        let mut base_sets = Vec::with_capacity(count);
        let mut generators = Vec::with_capacity(count);
        for r in 0..count {
            let source = diagram.canonical_path(n, r)?;
            let mut targets: Vec<PathPrefix> = diagram
                .incoming(n, r)?
                .iter()
                .map(|&id| {
                    diagram
                        .canonical_path(n - 1, edges[id as usize].source)
                        .map(|p| p.child(id))
                })
                .collect::<Result<_, _>>()?;
            targets.sort();
            debug_assert_eq!(targets[0], source);
            let family = targets
                .into_iter()
                .map(|t| PartialMap::swap(diagram, source.clone(), t))
                .collect::<Result<Vec<_>, _>>()?;
            base_sets.push(Cylinder::new(source));
            generators.push(family);
        }
        out.push(SystemLevel {
            base_sets,
            generators,
        });
    }
    GeneratorSystem::new(diagram, out)
}

/// Which structural requirement a generator system violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// The base sets at a level are not pairwise disjoint.
    BaseSets,
    /// `Dom(σ_{r,s}) != B(r, n)`.
    Domain,
    /// (i): `σ_{r,1}` is not the identity on `B(r, n)`.
    Identity,
    /// (ii): an image is not inside a single `B(i, n-1)`.
    Containment,
    /// (iii): the images do not partition `U_{n-1}`.
    Partition,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::BaseSets => "base-sets",
            Condition::Domain => "domain",
            Condition::Identity => "(i)",
            Condition::Containment => "(ii)",
            Condition::Partition => "(iii)",
        })
    }
}

/// Location of the first violated condition; indices are 0-based and
/// displayed 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub level: usize,
    pub vertex: Option<usize>,
    pub generator: Option<usize>,
    pub condition: Condition,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "condition {} fails at n={}", self.condition, self.level)?;
        if let Some(r) = self.vertex {
            write!(f, ", r={}", r + 1)?;
        }
        if let Some(s) = self.generator {
            write!(f, ", s={}", s + 1)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionReport {
    Pass,
    Fail(Violation),
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        matches!(self, ConditionReport::Pass)
    }
}

/// Checks the structural conditions level by level through `up_to`.
///
/// Within a level the checks run in the order: disjoint base sets, domains,
/// (i), (ii), (iii); the first failure is reported.
pub fn check_conditions(system: &GeneratorSystem, up_to: usize) -> Result<ConditionReport, DynError> {
    for n in 1..=up_to {
        if let Some(v) = check_level(system, n)? {
            return Ok(ConditionReport::Fail(v));
        }
    }
    Ok(ConditionReport::Pass)
}

fn check_level(system: &GeneratorSystem, n: usize) -> Result<Option<Violation>, DynError> {
    let d = system.diagram();
    let level = system.level(n)?;
    let fail = |vertex, generator, condition| {
        Ok(Some(Violation {
            level: n,
            vertex,
            generator,
            condition,
        }))
    };

    for (r, b) in level.base_sets.iter().enumerate() {
        if level.base_sets[..r].iter().any(|a| a.intersects(b)) {
            return fail(Some(r), None, Condition::BaseSets);
        }
    }

    let bases: Vec<ClopenSet> = level
        .base_sets
        .iter()
        .map(|c| ClopenSet::from_cylinder(d, c.clone()))
        .collect::<Result<_, _>>()?;
    for (r, family) in level.generators.iter().enumerate() {
        for (s, g) in family.iter().enumerate() {
            if g.domain() != bases[r] {
                return fail(Some(r), Some(s), Condition::Domain);
            }
        }
    }

    for (r, family) in level.generators.iter().enumerate() {
        if family[0] != PartialMap::identity_on(&bases[r]) {
            return fail(Some(r), Some(0), Condition::Identity);
        }
    }

    let previous: Vec<ClopenSet> = (0..system.base_count(n - 1)?)
        .map(|i| Ok(ClopenSet::from_cylinder(d, system.base_set(n - 1, i)?)?))
        .collect::<Result<_, DynError>>()?;
    for (r, family) in level.generators.iter().enumerate() {
        for (s, g) in family.iter().enumerate() {
            let image = g.range();
            let mut hits = 0;
            for b in &previous {
                if image.is_subset(b)? {
                    hits += 1;
                }
            }
            if hits != 1 {
                return fail(Some(r), Some(s), Condition::Containment);
            }
        }
    }

    let mut covered = ClopenSet::empty(d);
    for (r, family) in level.generators.iter().enumerate() {
        for (s, g) in family.iter().enumerate() {
            let image = g.range();
            if !image.is_disjoint(&covered)? {
                return fail(Some(r), Some(s), Condition::Partition);
            }
            covered = covered.union(&image)?;
        }
    }
    if covered != system.u_set(n - 1)? {
        return fail(None, None, Condition::Partition);
    }
    Ok(None)
}

/// The family `τ_{r,s}^{(n)}` for every vertex `r` at level `n`, after
/// checking the conditions through `n`.
pub fn build_tau(system: &GeneratorSystem, n: usize) -> Result<Vec<Vec<PartialMap>>, DynError> {
    if let ConditionReport::Fail(v) = check_conditions(system, n)? {
        return Err(DynError::ConditionsViolated(v));
    }
    tau_unchecked(system, n)
}

/// `τ^{(1)} = σ^{(1)}`; `τ^{(n+1)}_r` lists `τ^{(n)}_{i,s'} ∘ σ^{(n+1)}_{r,s}`
/// in lexicographic order of `(s', s)`, where `i` is the base set receiving
/// the image of `σ_{r,s}`. Generators whose image meets no base set are
/// skipped, which only happens for systems failing the conditions.
pub(crate) fn tau_unchecked(system: &GeneratorSystem, n: usize) -> Result<Vec<Vec<PartialMap>>, DynError> {
    system.check_level(n)?;
    let mut tau: Vec<Vec<PartialMap>> = system.level(1)?.generators.clone();
    for m in 2..=n {
        let level = system.level(m)?;
        let previous_bases = &system.level(m - 1)?.base_sets;
        let mut next = Vec::with_capacity(level.generators.len());
        for family in &level.generators {
            let receivers: Vec<Option<usize>> = family.iter().map(|g| receiver(g, previous_bases)).collect();
            let widest = receivers.iter().flatten().map(|&i| tau[i].len()).max().unwrap_or(0);
            let mut maps = Vec::new();
            for s_prime in 0..widest {
                for (g, i) in family.iter().zip(&receivers) {
                    let Some(i) = *i else { continue };
                    if let Some(t) = tau[i].get(s_prime) {
                        maps.push(t.compose(g)?);
                    }
                }
            }
            next.push(maps);
        }
        tau = next;
    }
    Ok(tau)
}

fn receiver(g: &PartialMap, bases: &[Cylinder]) -> Option<usize> {
    let image = g.range();
    let cyls = image.cylinders();
    bases
        .iter()
        .position(|b| !cyls.is_empty() && cyls.iter().all(|c| b.contains(c)))
        .or_else(|| bases.iter().position(|b| cyls.iter().any(|c| c.intersects(b))))
}

/// A matrix-unit map `τ_{r,s} ∘ τ_{r,s'}^{-1}` of `R_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixUnit {
    pub vertex: usize,
    pub s: usize,
    pub s_prime: usize,
    pub map: PartialMap,
}

/// The matrix-unit maps generating `R_n`, ordered by `(r, s, s')`.
pub fn groupoid_level(system: &GeneratorSystem, n: usize) -> Result<Vec<MatrixUnit>, DynError> {
    let tau = build_tau(system, n)?;
    matrix_units(&tau)
}

fn matrix_units(tau: &[Vec<PartialMap>]) -> Result<Vec<MatrixUnit>, DynError> {
    let mut out = Vec::new();
    for (r, family) in tau.iter().enumerate() {
        let inverses: Vec<PartialMap> = family.iter().map(PartialMap::invert).collect();
        for (s, t) in family.iter().enumerate() {
            for (s_prime, inv) in inverses.iter().enumerate() {
                out.push(MatrixUnit {
                    vertex: r,
                    s,
                    s_prime,
                    map: t.compose(inv)?,
                });
            }
        }
    }
    Ok(out)
}

/// Whether the depth-`depth` cylinder graph of `R_n` lies inside that of
/// `R_{n+1}`. Conditions are not checked first, so broken systems can be
/// probed.
pub fn verify_nesting(system: &GeneratorSystem, n: usize, depth: usize) -> Result<bool, DynError> {
    verify_nesting_with(system, n, depth, Execution::default())
}

pub fn verify_nesting_with(
    system: &GeneratorSystem,
    n: usize,
    depth: usize,
    exec: Execution,
) -> Result<bool, DynError> {
    let lower: Vec<PartialMap> = matrix_units(&tau_unchecked(system, n)?)?
        .into_iter()
        .map(|u| u.map)
        .collect();
    let upper: Vec<PartialMap> = matrix_units(&tau_unchecked(system, n + 1)?)?
        .into_iter()
        .map(|u| u.map)
        .collect();
    graph_contained(&lower, &upper, depth, exec)
}

/// Whether every pair in the depth-`depth` refinement of the graphs of `inner`
/// appears in the union of the graphs of `outer`.
pub fn graph_contained(
    inner: &[PartialMap],
    outer: &[PartialMap],
    depth: usize,
    exec: Execution,
) -> Result<bool, DynError> {
    let required = inner.iter().chain(outer).map(PartialMap::depth).max().unwrap_or(0);
    if depth < required {
        return Err(DynError::DepthTooShallow { depth, required });
    }
    let mut index: HashMap<&PathPrefix, Vec<&PathPrefix>> = HashMap::new();
    for rule in outer.iter().flat_map(PartialMap::rules) {
        index.entry(rule.source()).or_default().push(rule.target());
    }
    let results = par::map(exec, inner, |map| -> Result<bool, DynError> {
        for (p, q) in map.refined_pairs(depth)? {
            let hit = (0..=p.len()).any(|len| {
                let head = p.truncate(len);
                index.get(&head).is_some_and(|targets| {
                    let tail = &p.edges()[len..];
                    targets.iter().any(|t| q.strip_prefix(t) == Some(tail))
                })
            });
            if !hit {
                return Ok(false);
            }
        }
        Ok(true)
    });
    for r in results {
        if !r? {
            return Ok(false);
        }
    }
    Ok(true)
}
