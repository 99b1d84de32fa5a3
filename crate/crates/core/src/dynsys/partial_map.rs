use std::collections::BTreeMap;
use std::fmt;

use crate::bratteli::{BratteliDiagram, ClopenSet, Cylinder, PathPrefix};

use super::DynError;

/// "Replace the prefix `source` by `target`, keep the tail."
///
/// Both prefixes have the same length and end at the same vertex, so the
/// rule is a homeomorphism between the two cylinders.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrefixSwap {
    source: PathPrefix,
    target: PathPrefix,
}

impl PrefixSwap {
    pub fn new(diagram: &BratteliDiagram, source: PathPrefix, target: PathPrefix) -> Result<Self, DynError> {
        if source.len() != target.len() {
            return Err(DynError::SwapLengthMismatch {
                from_len: source.len(),
                to_len: target.len(),
            });
        }
        let a = diagram.terminal_vertex(&source)?;
        let b = diagram.terminal_vertex(&target)?;
        if a != b {
            return Err(DynError::SwapTerminalMismatch { from_vertex: a, to_vertex: b });
        }
        Ok(Self { source, target })
    }

    pub fn identity(diagram: &BratteliDiagram, prefix: PathPrefix) -> Result<Self, DynError> {
        Self::new(diagram, prefix.clone(), prefix)
    }

    pub fn source(&self) -> &PathPrefix {
        &self.source
    }

    pub fn target(&self) -> &PathPrefix {
        &self.target
    }

    pub fn depth(&self) -> usize {
        self.source.len()
    }

    pub fn inverse(&self) -> Self {
        Self {
            source: self.target.clone(),
            target: self.source.clone(),
        }
    }

    /// Image of a point prefix lying inside the source cylinder.
    pub fn apply(&self, prefix: &PathPrefix) -> Option<PathPrefix> {
        prefix.strip_prefix(&self.source).map(|tail| self.target.concat(tail))
    }
}

impl fmt::Display for PrefixSwap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.source, self.target)
    }
}

/// An element of the inverse semigroup: a finite, injective union of prefix
/// swaps with pairwise disjoint sources and pairwise disjoint targets.
///
/// Values are kept in normal form (coarsest rules, sorted by source), so
/// `==` is equality of the underlying partial homeomorphisms. The empty map
/// is a valid value.
#[derive(Clone, PartialEq, Eq)]
pub struct PartialMap {
    diagram: BratteliDiagram,
    rules: Vec<PrefixSwap>,
}

impl fmt::Debug for PartialMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PartialMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, r) in self.rules.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "}}")
    }
}

impl PartialMap {
    /// Builds a map from rules, rejecting overlapping sources or targets.
    pub fn new(diagram: &BratteliDiagram, rules: Vec<PrefixSwap>) -> Result<Self, DynError> {
        for r in &rules {
            PrefixSwap::new(diagram, r.source.clone(), r.target.clone())?;
        }
        if !is_antichain(rules.iter().map(PrefixSwap::source)) {
            return Err(DynError::OverlappingSources);
        }
        if !is_antichain(rules.iter().map(PrefixSwap::target)) {
            return Err(DynError::OverlappingTargets);
        }
        Ok(Self::normalized(diagram, rules))
    }

    pub fn empty(diagram: &BratteliDiagram) -> Self {
        Self {
            diagram: diagram.clone(),
            rules: Vec::new(),
        }
    }

    /// The single swap `source -> target`.
    pub fn swap(diagram: &BratteliDiagram, source: PathPrefix, target: PathPrefix) -> Result<Self, DynError> {
        let rule = PrefixSwap::new(diagram, source, target)?;
        Ok(Self::normalized(diagram, vec![rule]))
    }

    /// The identity on a clopen set.
    pub fn identity_on(set: &ClopenSet) -> Self {
        let rules = set
            .cylinders()
            .iter()
            .map(|c| PrefixSwap {
                source: c.prefix().clone(),
                target: c.prefix().clone(),
            })
            .collect();
        Self::normalized(set.diagram(), rules)
    }

    pub fn identity_on_cylinder(diagram: &BratteliDiagram, c: &Cylinder) -> Result<Self, DynError> {
        Ok(Self::identity_on(&ClopenSet::from_cylinder(diagram, c.clone())?))
    }

    fn normalized(diagram: &BratteliDiagram, rules: Vec<PrefixSwap>) -> Self {
        Self {
            diagram: diagram.clone(),
            rules: normalize(diagram, rules),
        }
    }

    pub fn diagram(&self) -> &BratteliDiagram {
        &self.diagram
    }

    pub fn rules(&self) -> &[PrefixSwap] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Depth of the deepest rule.
    pub fn depth(&self) -> usize {
        self.rules.iter().map(PrefixSwap::depth).max().unwrap_or(0)
    }

    pub fn domain(&self) -> ClopenSet {
        ClopenSet::from_cylinders(&self.diagram, self.rules.iter().map(|r| Cylinder::new(r.source.clone())))
            .expect("rules are valid prefixes")
    }

    pub fn range(&self) -> ClopenSet {
        ClopenSet::from_cylinders(&self.diagram, self.rules.iter().map(|r| Cylinder::new(r.target.clone())))
            .expect("rules are valid prefixes")
    }

    pub fn is_identity(&self) -> bool {
        self.rules.iter().all(|r| r.source == r.target)
    }

    fn check_same(&self, other: &PartialMap) -> Result<(), DynError> {
        if self.diagram != other.diagram {
            return Err(DynError::DiagramMismatch);
        }
        Ok(())
    }

    /// The rule whose source cylinder contains `prefix`, if any.
    pub fn rule_covering(&self, prefix: &PathPrefix) -> Option<&PrefixSwap> {
        // Sources form a sorted antichain, so the only candidate is the
        // greatest source not exceeding `prefix`.
        let idx = self.rules.partition_point(|r| r.source <= *prefix);
        let rule = self.rules[..idx].last()?;
        rule.source.is_prefix_of(prefix).then_some(rule)
    }

    /// Image of a point prefix; `None` if no rule covers it.
    pub fn apply(&self, prefix: &PathPrefix) -> Option<PathPrefix> {
        self.rule_covering(prefix).and_then(|r| r.apply(prefix))
    }

    /// Whether some rule's source lies strictly inside the cylinder over
    /// `prefix` (the map is then defined on part of it only).
    pub fn splits(&self, prefix: &PathPrefix) -> bool {
        let start = self.rules.partition_point(|r| r.source <= *prefix);
        self.rules[start..]
            .first()
            .is_some_and(|r| prefix.is_prefix_of(&r.source))
    }

    /// `self ∘ f` (apply `f` first), defined on `f^{-1}(Ran f ∩ Dom self)`.
    pub fn compose(&self, f: &PartialMap) -> Result<PartialMap, DynError> {
        self.check_same(f)?;
        let mut out = Vec::new();
        for inner in &f.rules {
            for outer in &self.rules {
                if let Some(tail) = outer.source.strip_prefix(&inner.target) {
                    out.push(PrefixSwap {
                        source: inner.source.concat(tail),
                        target: outer.target.clone(),
                    });
                } else if let Some(tail) = inner.target.strip_prefix(&outer.source) {
                    out.push(PrefixSwap {
                        source: inner.source.clone(),
                        target: outer.target.concat(tail),
                    });
                }
            }
        }
        Ok(Self::normalized(&self.diagram, out))
    }

    pub fn invert(&self) -> PartialMap {
        Self::normalized(&self.diagram, self.rules.iter().map(PrefixSwap::inverse).collect())
    }

    /// Restriction to `Dom(self) ∩ set`.
    pub fn restrict(&self, set: &ClopenSet) -> Result<PartialMap, DynError> {
        if &self.diagram != set.diagram() {
            return Err(DynError::DiagramMismatch);
        }
        let mut out = Vec::new();
        for rule in &self.rules {
            for c in set.cylinders() {
                if let Some(tail) = c.prefix().strip_prefix(&rule.source) {
                    out.push(PrefixSwap {
                        source: c.prefix().clone(),
                        target: rule.target.concat(tail),
                    });
                } else if c.prefix().is_prefix_of(&rule.source) {
                    out.push(rule.clone());
                }
            }
        }
        Ok(Self::normalized(&self.diagram, out))
    }

    /// All rules pushed down to `depth`, as `(source, target)` pairs.
    pub fn refined_pairs(&self, depth: usize) -> Result<Vec<(PathPrefix, PathPrefix)>, DynError> {
        let mut out = Vec::new();
        for rule in &self.rules {
            for p in self.diagram.extensions(&rule.source, depth)? {
                let q = rule.apply(&p).expect("extension of the source");
                out.push((p, q));
            }
        }
        Ok(out)
    }
}

fn is_antichain<'a>(prefixes: impl Iterator<Item = &'a PathPrefix>) -> bool {
    let mut sorted: Vec<&PathPrefix> = prefixes.collect();
    sorted.sort();
    sorted.windows(2).all(|w| !w[0].is_prefix_of(w[1]))
}

/// Sorts rules and merges complete sibling families `s·e -> t·e` into
/// `s -> t`, bottom-up, which yields the unique coarsest representation.
fn normalize(diagram: &BratteliDiagram, mut rules: Vec<PrefixSwap>) -> Vec<PrefixSwap> {
    rules.sort();
    rules.dedup();
    let max_depth = rules.iter().map(PrefixSwap::depth).max().unwrap_or(0);
    for depth in (1..=max_depth).rev() {
        // parent source -> (common parent target if consistent, count)
        let mut families: BTreeMap<PathPrefix, (Option<PathPrefix>, usize)> = BTreeMap::new();
        for rule in rules.iter().filter(|r| r.depth() == depth) {
            let parent = rule.source.parent().expect("depth >= 1");
            let consistent = rule.source.edges().last() == rule.target.edges().last();
            let target_parent = rule.target.parent().expect("depth >= 1");
            let entry = families
                .entry(parent)
                .or_insert_with(|| (Some(target_parent.clone()), 0));
            if !consistent || entry.0.as_ref() != Some(&target_parent) {
                entry.0 = None;
            }
            entry.1 += 1;
        }
        let mut merged = Vec::new();
        for (parent, (target, count)) in families {
            let Some(target) = target else { continue };
            let Ok(v) = diagram.terminal_vertex(&parent) else {
                continue;
            };
            let Ok(children) = diagram.outgoing(depth, v) else {
                continue;
            };
            if children.len() == count {
                merged.push(PrefixSwap {
                    source: parent,
                    target,
                });
            }
        }
        if merged.is_empty() {
            continue;
        }
        rules.retain(|r| {
            r.depth() != depth
                || merged
                    .binary_search_by(|m| m.source.cmp(&r.source.parent().expect("depth >= 1")))
                    .is_err()
        });
        rules.extend(merged);
        rules.sort();
    }
    rules
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::IntMatrix;

    fn p(edges: &[u32]) -> PathPrefix {
        PathPrefix::from_edges(edges.to_vec())
    }

    fn swap(d: &BratteliDiagram, a: &[u32], b: &[u32]) -> PartialMap {
        PartialMap::swap(d, p(a), p(b)).unwrap()
    }

    #[test]
    fn inverse_law_on_a_swap() {
        let car = BratteliDiagram::car(3);
        let rho = swap(&car, &[0, 1], &[1, 0]);
        let id = rho.invert().compose(&rho).unwrap();
        assert_eq!(id, PartialMap::identity_on(&rho.domain()));
    }

    #[test]
    fn disjoint_composition_is_empty() {
        let car = BratteliDiagram::car(2);
        let rho = swap(&car, &[0], &[1]);
        assert!(rho.compose(&rho).unwrap().is_empty());
    }

    #[test]
    fn invert_examples() {
        let car = BratteliDiagram::car(2);
        let id = PartialMap::identity_on(&ClopenSet::from_cylinder(&car, Cylinder::new(p(&[1]))).unwrap());
        assert_eq!(id.invert(), id);
        assert_eq!(swap(&car, &[0], &[1]).invert(), swap(&car, &[1], &[0]));
    }

    #[test]
    fn restrict_examples() {
        let car = BratteliDiagram::car(3);
        let f = swap(&car, &[0], &[1]);
        assert_eq!(f.restrict(&ClopenSet::whole(&car)).unwrap(), f);
        assert!(f.restrict(&ClopenSet::empty(&car)).unwrap().is_empty());
        let b = ClopenSet::from_cylinder(&car, Cylinder::new(p(&[0, 1]))).unwrap();
        assert_eq!(f.restrict(&b).unwrap(), swap(&car, &[0, 1], &[1, 1]));
    }

    #[test]
    fn normal_form_merges_children() {
        let car = BratteliDiagram::car(3);
        let split = PartialMap::new(
            &car,
            vec![
                PrefixSwap::new(&car, p(&[0, 0]), p(&[1, 0])).unwrap(),
                PrefixSwap::new(&car, p(&[0, 1]), p(&[1, 1])).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(split, swap(&car, &[0], &[1]));
        // Crossed children do not merge.
        let crossed = PartialMap::new(
            &car,
            vec![
                PrefixSwap::new(&car, p(&[0, 0]), p(&[1, 1])).unwrap(),
                PrefixSwap::new(&car, p(&[0, 1]), p(&[1, 0])).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(crossed.rules().len(), 2);
    }

    #[test]
    fn rejects_invalid_rules() {
        let car = BratteliDiagram::car(3);
        assert!(matches!(
            PrefixSwap::new(&car, p(&[0]), p(&[0, 1])),
            Err(DynError::SwapLengthMismatch { .. })
        ));
        let gicar = BratteliDiagram::gicar(2);
        assert!(matches!(
            PrefixSwap::new(&gicar, p(&[0]), p(&[1])),
            Err(DynError::SwapTerminalMismatch { .. })
        ));
        let overlapping = vec![
            PrefixSwap::new(&car, p(&[0]), p(&[0])).unwrap(),
            PrefixSwap::new(&car, p(&[0, 1]), p(&[1, 1])).unwrap(),
        ];
        assert_eq!(
            PartialMap::new(&car, overlapping),
            Err(DynError::OverlappingSources)
        );
        let non_injective = vec![
            PrefixSwap::new(&car, p(&[0]), p(&[1])).unwrap(),
            PrefixSwap::new(&car, p(&[1]), p(&[1])).unwrap(),
        ];
        assert_eq!(
            PartialMap::new(&car, non_injective),
            Err(DynError::OverlappingTargets)
        );
    }

    #[test]
    fn compose_refines_to_the_deeper_side() {
        let car = BratteliDiagram::car(3);
        let f = swap(&car, &[0], &[1]);
        let g = swap(&car, &[1, 0], &[0, 1]);
        let gf = g.compose(&f).unwrap();
        assert_eq!(gf, swap(&car, &[0, 0], &[0, 1]));
        let fg = f.compose(&g).unwrap();
        assert_eq!(fg, swap(&car, &[1, 0], &[1, 1]));
        assert!(f.invert().compose(&g).unwrap().is_empty());
    }

    #[test]
    fn lookup_and_split() {
        let d = BratteliDiagram::new(vec![
            IntMatrix::from_i64_rows(&[[1, 2]]),
            IntMatrix::from_i64_rows(&[[1, 1], [2, 1]]),
        ])
        .unwrap();
        let f = swap(&d, &[1, 2], &[2, 2]);
        assert_eq!(f.apply(&p(&[1, 2])), Some(p(&[2, 2])));
        assert_eq!(f.apply(&p(&[1, 3])), None);
        assert!(f.splits(&p(&[1])));
        assert!(!f.splits(&p(&[2])));
    }

    #[test]
    fn diagram_mismatch() {
        let a = swap(&BratteliDiagram::car(2), &[0], &[1]);
        let b = swap(&BratteliDiagram::car(3), &[0], &[1]);
        assert_eq!(a.compose(&b), Err(DynError::DiagramMismatch));
    }
}
