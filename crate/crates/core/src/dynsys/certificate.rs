//! Word evaluation on cylinders and the search for obstructions to AF-ness.
//!
//! In an AF inverse semigroup, an element `ρ` with `ρ(Dom ρ) = Dom ρ` must be
//! the identity. A certificate is therefore a word `ρ` in the generators, a
//! cylinder `B` with `ρ(B) = B`, and a sub-cylinder `c ⊆ B` that `ρ` moves off
//! itself. Absence of a certificate in the searched range proves nothing.

use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::bratteli::{BratteliDiagram, ClopenSet, Cylinder, PathPrefix};
use crate::par::{self, Execution};

use super::{AddingMachine, DynError, GeneratorSystem, PartialMap};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Generator {
    Swap(PartialMap),
    Machine(AddingMachine),
}

/// A generator together with its precomputed inverse and display name.
#[derive(Debug, Clone)]
struct Entry {
    name: String,
    generator: Generator,
    inverse: Option<PartialMap>,
}

/// A named family of generators acting on the path space of one diagram.
#[derive(Debug, Clone)]
pub struct GeneratorFamily {
    diagram: BratteliDiagram,
    entries: Vec<Entry>,
}

/// A generator reference, possibly inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

/// A word in composition order: `[a, b, c]` is `a ∘ b ∘ c`, so `c` acts
/// first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Self { letters }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

impl GeneratorFamily {
    pub fn new(diagram: &BratteliDiagram) -> Self {
        Self {
            diagram: diagram.clone(),
            entries: Vec::new(),
        }
    }

    /// The odometer `φ` on `{0, …, base-1}^depth`.
    pub fn odometer(base: u64, depth: usize) -> Result<Self, DynError> {
        let phi = AddingMachine::odometer(base, depth)?;
        let mut family = Self::new(&phi.diagram());
        family.push("φ", Generator::Machine(phi))?;
        Ok(family)
    }

    /// Every `σ_{r,s}^{(n)}` of the system, named `σ[n,r,s]` (1-based).
    pub fn from_system(system: &GeneratorSystem) -> Self {
        let mut family = Self::new(system.diagram());
        for ((n, r, s), g) in system.all_generators() {
            family
                .push(format!("σ[{},{},{}]", n, r + 1, s + 1), Generator::Swap(g.clone()))
                .expect("system generators share its diagram");
        }
        family
    }

    pub fn push(&mut self, name: impl Into<String>, generator: Generator) -> Result<(), DynError> {
        let inverse = match &generator {
            Generator::Swap(map) => {
                if map.diagram() != &self.diagram {
                    return Err(DynError::DiagramMismatch);
                }
                Some(map.invert())
            }
            Generator::Machine(machine) => {
                if machine.diagram() != self.diagram {
                    return Err(DynError::DiagramMismatch);
                }
                None
            }
        };
        self.entries.push(Entry {
            name: name.into(),
            generator,
            inverse,
        });
        Ok(())
    }

    pub fn diagram(&self) -> &BratteliDiagram {
        &self.diagram
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.entries.get(index).map(|e| e.name.as_str())
    }

    pub fn generator(&self, index: usize) -> Option<&Generator> {
        self.entries.get(index).map(|e| &e.generator)
    }

    pub fn letter(&self, name: &str, inverse: bool) -> Result<Letter, DynError> {
        self.entries
            .iter()
            .position(|e| e.name == name)
            .map(|generator| Letter { generator, inverse })
            .ok_or_else(|| DynError::UnknownGenerator(name.to_string()))
    }

    /// The search alphabet: each generator followed by its inverse.
    pub fn alphabet(&self) -> Vec<Letter> {
        (0..self.entries.len())
            .flat_map(|g| {
                [false, true].map(|inverse| Letter {
                    generator: g,
                    inverse,
                })
            })
            .collect()
    }

    /// Renders a word, e.g. `φφ` or `σ[1,1,2]⁻¹σ[2,1,1]`.
    pub fn render(&self, word: &Word) -> String {
        word.letters
            .iter()
            .map(|l| {
                let name = self.name(l.generator).unwrap_or("?");
                if l.inverse {
                    format!("{name}⁻¹")
                } else {
                    name.to_string()
                }
            })
            .collect()
    }
}

/// Image of a cylinder under a word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordImage {
    pub image: Cylinder,
    /// True when the word provably keeps the tail of every point of the
    /// cylinder fixed.
    pub tail_identity: bool,
}

/// Evaluates `word` on the cylinder `c` (depth at least 1).
///
/// Prefix swaps act exactly when one rule covers the current cylinder. Runs
/// of adding-machine letters over the same digit bases are merged into one
/// total increment before the carry test.
pub fn word_image(family: &GeneratorFamily, word: &Word, c: &Cylinder) -> Result<WordImage, DynError> {
    if word.is_empty() {
        return Err(DynError::EmptyWord);
    }
    if c.depth() == 0 {
        return Err(DynError::DepthTooShallow {
            depth: 0,
            required: 1,
        });
    }
    family.diagram.terminal_vertex(c.prefix())?;
    let mut current = c.prefix().clone();
    let mut tail_identity = true;
    let mut pending: Option<(&AddingMachine, BigInt)> = None;

    for letter in word.letters.iter().rev() {
        let entry = family
            .entries
            .get(letter.generator)
            .ok_or_else(|| DynError::UnknownGenerator(format!("#{}", letter.generator)))?;
        match &entry.generator {
            Generator::Machine(machine) => {
                let step = if letter.inverse {
                    -machine.increment().clone()
                } else {
                    machine.increment().clone()
                };
                pending = match pending.take() {
                    Some((m, total)) if m.bases() == machine.bases() => Some((m, total + step)),
                    Some((m, total)) => {
                        let (next, flag) = m.add_to_prefix(&current, &total)?;
                        current = next;
                        tail_identity &= flag;
                        Some((machine, step))
                    }
                    None => Some((machine, step)),
                };
            }
            Generator::Swap(map) => {
                if let Some((m, total)) = pending.take() {
                    let (next, flag) = m.add_to_prefix(&current, &total)?;
                    current = next;
                    tail_identity &= flag;
                }
                let map = if letter.inverse {
                    entry.inverse.as_ref().expect("swaps carry their inverse")
                } else {
                    map
                };
                current = apply_swap(map, &current)?;
            }
        }
    }
    if let Some((m, total)) = pending {
        if !total.is_zero() {
            let (next, flag) = m.add_to_prefix(&current, &total)?;
            current = next;
            tail_identity &= flag;
        }
    }
    Ok(WordImage {
        image: Cylinder::new(current),
        tail_identity,
    })
}

fn apply_swap(map: &PartialMap, prefix: &PathPrefix) -> Result<PathPrefix, DynError> {
    if let Some(image) = map.apply(prefix) {
        return Ok(image);
    }
    if map.splits(prefix) {
        Err(DynError::NotUniformOnCylinder)
    } else {
        Err(DynError::UndefinedOnCylinder)
    }
}

/// A word `ρ`, a cylinder `B` with `ρ(B) = B`, and a witness `c ⊆ B` with
/// `ρ(c) ∩ c = ∅`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonAFCertificate {
    pub word: Word,
    pub rendered_word: String,
    pub b_set: ClopenSet,
    pub b_cylinder: Cylinder,
    pub witness: Cylinder,
    pub witness_image: Cylinder,
    pub tail_identity: bool,
}

impl NonAFCertificate {
    /// Re-evaluates the certificate from scratch.
    pub fn revalidate(&self, family: &GeneratorFamily) -> Result<bool, DynError> {
        let fixed = word_image(family, &self.word, &self.b_cylinder)?.image == self.b_cylinder;
        let inside = self.b_set.contains_cylinder(&self.witness);
        let moved = word_image(family, &self.word, &self.witness)?.image;
        Ok(fixed && inside && moved == self.witness_image && !moved.intersects(&self.witness))
    }
}

impl fmt::Display for NonAFCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "word {} fixes B={} and moves {} to {}",
            self.rendered_word, self.b_cylinder, self.witness, self.witness_image
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(NonAFCertificate),
    /// Nothing in the searched range; not a proof of AF-ness.
    NotFound { max_word_len: usize, max_depth: usize },
}

/// Breadth-first search over words of length `<= max_word_len` (shorter
/// first, then lexicographic in [`GeneratorFamily::alphabet`] order) and
/// cylinders `B` of depth `1..=max_depth` (shallower first, then
/// lexicographic). Witnesses are the depth-`max_depth` sub-cylinders of `B`
/// in lexicographic order. The first hit is returned.
pub fn find_non_af_certificate(
    family: &GeneratorFamily,
    max_word_len: usize,
    max_depth: usize,
) -> Result<SearchOutcome, DynError> {
    find_non_af_certificate_with(family, max_word_len, max_depth, Execution::default())
}

/// As [`find_non_af_certificate`]; the parallel strategy returns the same
/// first hit as the sequential one.
pub fn find_non_af_certificate_with(
    family: &GeneratorFamily,
    max_word_len: usize,
    max_depth: usize,
    exec: Execution,
) -> Result<SearchOutcome, DynError> {
    if max_word_len == 0 || max_depth == 0 {
        return Err(DynError::InvalidSearchBounds);
    }
    let diagram = &family.diagram;
    if max_depth > diagram.levels() {
        return Err(DynError::DepthTooShallow {
            depth: diagram.levels(),
            required: max_depth,
        });
    }
    let mut candidates = Vec::new();
    for depth in 1..=max_depth {
        candidates.extend(diagram.all_paths(depth)?.into_iter().map(Cylinder::new));
    }
    let alphabet = family.alphabet();
    if alphabet.is_empty() {
        return Ok(SearchOutcome::NotFound {
            max_word_len,
            max_depth,
        });
    }

    let mut words: Vec<Word> = vec![Word::new(Vec::new())];
    for _ in 0..max_word_len {
        words = words
            .iter()
            .flat_map(|w| {
                alphabet.iter().map(move |&l| {
                    let mut letters = w.letters.clone();
                    letters.push(l);
                    Word::new(letters)
                })
            })
            .collect();
        let hit = par::find_map_first(exec, &words, |word| {
            candidates
                .iter()
                .find_map(|b| certificate_for(family, word, b, max_depth))
        });
        if let Some(cert) = hit {
            return Ok(SearchOutcome::Found(cert));
        }
    }
    Ok(SearchOutcome::NotFound {
        max_word_len,
        max_depth,
    })
}

fn certificate_for(family: &GeneratorFamily, word: &Word, b: &Cylinder, depth: usize) -> Option<NonAFCertificate> {
    let image = word_image(family, word, b).ok()?;
    if image.image != *b {
        return None;
    }
    let subs = family.diagram.extensions(b.prefix(), depth).ok()?;
    subs.into_iter().find_map(|p| {
        let c = Cylinder::new(p);
        let moved = word_image(family, word, &c).ok()?;
        (!moved.image.intersects(&c)).then(|| NonAFCertificate {
            word: word.clone(),
            rendered_word: family.render(word),
            b_set: ClopenSet::from_cylinder(&family.diagram, b.clone()).expect("valid cylinder"),
            b_cylinder: b.clone(),
            witness: c,
            witness_image: moved.image,
            tail_identity: moved.tail_identity,
        })
    })
}
