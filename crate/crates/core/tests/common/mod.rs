#![allow(dead_code)]

use bratteli_core::dynsys::{PartialMap, PrefixSwap};
use bratteli_core::{BratteliDiagram, IntMatrix, PathPrefix};
use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A valid diagram with `levels` levels, at most 3 vertices per level and
/// edge multiplicities at most 3.
pub fn random_diagram(rng: &mut ChaCha8Rng, levels: usize) -> BratteliDiagram {
    let mut matrices = Vec::with_capacity(levels);
    let mut prev = 1;
    for _ in 0..levels {
        let next = rng.gen_range(1..=3);
        loop {
            let m = IntMatrix::from_fn(prev, next, |_, _| {
                if rng.gen_bool(0.4) {
                    BigInt::from(0)
                } else {
                    BigInt::from(rng.gen_range(1..=3))
                }
            });
            matrices.push(m);
            if bratteli_core::bratteli::validate(&matrices).is_ok() {
                break;
            }
            matrices.pop();
        }
        prev = next;
    }
    BratteliDiagram::new(matrices).expect("levels validated one by one")
}

/// The 20 diagrams shared by the structural criteria: 4 or 5 levels each, so
/// nesting up to `R_4` and depth-4 refinement are available.
pub fn shared_diagrams() -> Vec<BratteliDiagram> {
    let mut r = rng(20);
    (0..20)
        .map(|_| {
            let levels = r.gen_range(4..=5);
            random_diagram(&mut r, levels)
        })
        .collect()
}

/// A random partial map made of prefix swaps at one depth in `1..=max_depth`.
pub fn random_partial_map(rng: &mut ChaCha8Rng, d: &BratteliDiagram, max_depth: usize) -> PartialMap {
    let depth = rng.gen_range(1..=max_depth);
    let paths = d.all_paths(depth).unwrap();
    let mut by_vertex: std::collections::BTreeMap<usize, Vec<PathPrefix>> = Default::default();
    for p in paths {
        by_vertex.entry(d.terminal_vertex(&p).unwrap()).or_default().push(p);
    }
    let mut rules = Vec::new();
    for group in by_vertex.values() {
        let k = rng.gen_range(0..=group.len());
        let mut sources = group.clone();
        sources.shuffle(rng);
        let mut targets = group.clone();
        targets.shuffle(rng);
        for (s, t) in sources.into_iter().zip(targets).take(k) {
            rules.push(PrefixSwap::new(d, s, t).unwrap());
        }
    }
    PartialMap::new(d, rules).unwrap()
}

/// Pointwise image of a full-depth prefix, looking rules up by scanning.
pub fn apply_by_scan(f: &PartialMap, p: &PathPrefix) -> Option<PathPrefix> {
    f.rules().iter().find_map(|r| {
        let tail = p.strip_prefix(r.source())?;
        Some(r.target().concat(tail))
    })
}
