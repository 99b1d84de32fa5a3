//! Rank-one dimension groups `ℤ → ℤ → …` with order units `u_0 | u_1 | …`
//! and their dual generating systems.
//!
//! The dual of `ℤ` with unit `u_n` is `ℤ_{u_n}`, written additively, and the
//! inverse limit of these cyclic groups is a Cantor set. Its clopen subgroups
//! `{χ : χ ≡ 0 mod u_n}` play the role of the base sets, and translations by
//! coset representatives `(s-1) u_{n-1}` are the generators. On the rank-one
//! diagram with multiplicities `s(n) = u_n / u_{n-1}` a path `(d_1, …, d_n)`
//! is the residue `Σ d_i u_{i-1}`.

use num_bigint::BigInt;
use thiserror::Error;

use crate::bratteli::{BratteliDiagram, Cylinder, DiagramError, PathPrefix};
use crate::dynsys::{DynError, GeneratorSystem, PartialMap, SystemLevel};
use crate::ktheory::{DirectLimitGroup, KError};
use crate::matrix::{IntMatrix, IntVector};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DualityError {
    #[error("u_{level} does not divide u_{next}", next = level + 1)]
    DivisibilityViolated { level: usize },
    #[error("u_{level} must be positive")]
    NonPositiveUnit { level: usize },
    #[error("u_0 must be 1")]
    BaseNotOne,
    #[error("level {level} is not available (scale has {available})")]
    LevelUnavailable { level: usize, available: usize },
    #[error("s_{position} = {value} is outside [1, {bound}]")]
    IndexOutOfRange { position: usize, value: u64, bound: u64 },
    #[error("residue at level {level} is out of range")]
    ResidueOutOfRange { level: usize },
    #[error("residues at levels {level} and {next} are incompatible", next = level + 1)]
    IncompatibleResidue { level: usize },
    #[error("unit overflow at level {level}")]
    Overflow { level: usize },
    #[error(transparent)]
    Dyn(#[from] DynError),
    #[error(transparent)]
    K(#[from] KError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

/// How a finite list of units continues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleExtension {
    None,
    /// `u_{n+1} = u_n · (u_k / u_{k-1})` for the last supplied `k`.
    RepeatRatio,
}

/// A divisibility chain `1 = u_0 | u_1 | u_2 | …`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupernaturalScale {
    units: Vec<u64>,
    extension: ScaleExtension,
}

impl SupernaturalScale {
    /// `units` starts with `u_0 = 1`.
    pub fn new(units: Vec<u64>, extension: ScaleExtension) -> Result<Self, DualityError> {
        if units.first() != Some(&1) {
            return Err(DualityError::BaseNotOne);
        }
        for (n, w) in units.windows(2).enumerate() {
            if w[1] == 0 {
                return Err(DualityError::NonPositiveUnit { level: n + 1 });
            }
            if w[1] % w[0] != 0 {
                return Err(DualityError::DivisibilityViolated { level: n });
            }
        }
        Ok(Self { units, extension })
    }

    /// From `u_1, u_2, …` with `u_0 = 1` implied.
    pub fn from_tail(tail: &[u64], extension: ScaleExtension) -> Result<Self, DualityError> {
        let mut units = vec![1];
        units.extend_from_slice(tail);
        Self::new(units, extension)
    }

    /// `u_n = base^n` for `n <= levels`.
    pub fn powers(base: u64, levels: usize) -> Result<Self, DualityError> {
        let mut units = vec![1u64];
        for n in 1..=levels {
            let next = units[n - 1].checked_mul(base).ok_or(DualityError::Overflow { level: n })?;
            units.push(next);
        }
        Self::new(units, ScaleExtension::None)
    }

    /// `u_n = n!` for `n <= levels`, so `u = (1, 1, 2, 6, 24, …)`.
    pub fn factorial(levels: usize) -> Result<Self, DualityError> {
        let mut units = vec![1u64];
        for n in 1..=levels {
            let next = units[n - 1].checked_mul(n as u64).ok_or(DualityError::Overflow { level: n })?;
            units.push(next);
        }
        Self::new(units, ScaleExtension::None)
    }

    /// Last level with a stored unit when bounded.
    pub fn available_levels(&self) -> Option<usize> {
        match self.extension {
            ScaleExtension::None => Some(self.units.len() - 1),
            ScaleExtension::RepeatRatio => None,
        }
    }

    pub fn unit(&self, n: usize) -> Result<u64, DualityError> {
        if let Some(&u) = self.units.get(n) {
            return Ok(u);
        }
        let last = self.units.len() - 1;
        match self.extension {
            ScaleExtension::None => Err(DualityError::LevelUnavailable { level: n, available: last }),
            ScaleExtension::RepeatRatio => {
                let ratio = if last == 0 { 1 } else { self.units[last] / self.units[last - 1] };
                let mut u = self.units[last];
                for level in last + 1..=n {
                    u = u.checked_mul(ratio).ok_or(DualityError::Overflow { level })?;
                }
                Ok(u)
            }
        }
    }

    /// `s(n) = u_n / u_{n-1}` for `n >= 1`.
    pub fn ratio(&self, n: usize) -> Result<u64, DualityError> {
        Ok(self.unit(n)? / self.unit(n - 1)?)
    }

    pub fn ratios(&self, depth: usize) -> Result<Vec<u64>, DualityError> {
        (1..=depth).map(|n| self.ratio(n)).collect()
    }

    /// The rank-one diagram with multiplicities `s(1), …, s(depth)`.
    pub fn diagram(&self, depth: usize) -> Result<BratteliDiagram, DualityError> {
        Ok(BratteliDiagram::rank_one(&self.ratios(depth)?)?)
    }

    /// The depth-`n` path with residue `x mod u_n`.
    pub fn path_of_residue(&self, n: usize, x: u64) -> Result<PathPrefix, DualityError> {
        let mut rest = x % self.unit(n)?;
        let mut digits = Vec::with_capacity(n);
        for i in 1..=n {
            let s = self.ratio(i)?;
            digits.push(u32::try_from(rest % s).expect("digit fits"));
            rest /= s;
        }
        Ok(PathPrefix::from_edges(digits))
    }

    /// `Σ d_i u_{i-1}` for the path `(d_1, …, d_n)`.
    pub fn residue_of_path(&self, path: &PathPrefix) -> Result<u64, DualityError> {
        path.edges()
            .iter()
            .enumerate()
            .map(|(i, &d)| Ok(u64::from(d) * self.unit(i)?))
            .sum()
    }
}

/// A depth-`N` point of the inverse limit: residues `r_n mod u_n` for
/// `n = 1..=N` with `r_{n+1} ≡ r_n (mod u_n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CharacterApprox {
    residues: Vec<u64>,
}

impl CharacterApprox {
    pub fn new(scale: &SupernaturalScale, residues: Vec<u64>) -> Result<Self, DualityError> {
        for (i, &r) in residues.iter().enumerate() {
            let level = i + 1;
            if r >= scale.unit(level)? {
                return Err(DualityError::ResidueOutOfRange { level });
            }
            if i > 0 && r % scale.unit(i)? != residues[i - 1] {
                return Err(DualityError::IncompatibleResidue { level: i });
            }
        }
        Ok(Self { residues })
    }

    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    pub fn depth(&self) -> usize {
        self.residues.len()
    }

    /// The residue at the deepest level, 0 at depth 0.
    pub fn residue(&self) -> u64 {
        self.residues.last().copied().unwrap_or(0)
    }

    /// Drops the deepest residue.
    pub fn truncate(&self) -> Self {
        let mut residues = self.residues.clone();
        residues.pop();
        Self { residues }
    }
}

/// The translation system on the rank-one diagram of `scale` through
/// `depth` levels: `B(1, n) = 0^n` and `σ^{(n)}_{1,s}` translates it by
/// `(s-1) u_{n-1}` into `B(1, n-1)`.
pub fn build_dual_system(scale: &SupernaturalScale, depth: usize) -> Result<GeneratorSystem, DualityError> {
    let diagram = scale.diagram(depth)?;
    let mut levels = Vec::with_capacity(depth);
    for n in 1..=depth {
        let base = PathPrefix::from_edges(vec![0; n]);
        let u_prev = scale.unit(n - 1)?;
        let generators = (1..=scale.ratio(n)?)
            .map(|s| {
                let target = scale.path_of_residue(n, (s - 1) * u_prev)?;
                Ok(PartialMap::swap(&diagram, base.clone(), target)?)
            })
            .collect::<Result<Vec<_>, DualityError>>()?;
        levels.push(SystemLevel {
            base_sets: vec![Cylinder::new(base)],
            generators: vec![generators],
        });
    }
    Ok(GeneratorSystem::new(&diagram, levels)?)
}

/// The character `Σ_i (s_i - 1) u_{i-1}` translating `B(1, n)` onto the
/// image of `τ_{(s_1, …, s_n)}`, as a residue tower.
pub fn tau_translation(scale: &SupernaturalScale, tuple: &[u64]) -> Result<CharacterApprox, DualityError> {
    let mut residues = Vec::with_capacity(tuple.len());
    let mut acc = 0u64;
    for (i, &s) in tuple.iter().enumerate() {
        let level = i + 1;
        let bound = scale.ratio(level)?;
        if s == 0 || s > bound {
            return Err(DualityError::IndexOutOfRange {
                position: level,
                value: s,
                bound,
            });
        }
        acc += (s - 1) * scale.unit(i)?;
        residues.push(acc % scale.unit(level)?);
    }
    CharacterApprox::new(scale, residues)
}

/// The dimension group recovered from the dual system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconstruction {
    pub matrices: Vec<IntMatrix>,
    pub units: Vec<IntVector>,
    /// Rank one at every level, `C_n = [s(n+1)]` and `u_n = [u_n]`.
    pub matches_scale: bool,
}

/// Runs the dual system through the generic group construction and compares
/// the result with the scale.
pub fn verify_reconstruction(scale: &SupernaturalScale, depth: usize) -> Result<Reconstruction, DualityError> {
    let system = build_dual_system(scale, depth)?;
    let group = DirectLimitGroup::from_system(&system, depth)?;
    let mut matrices = Vec::with_capacity(depth);
    let mut units = Vec::with_capacity(depth + 1);
    let mut matches_scale = true;
    for n in 0..=depth {
        let u = group.unit(n)?;
        matches_scale &= u == vec![BigInt::from(scale.unit(n)?)];
        units.push(u);
        if n < depth {
            let c = group.matrix(n)?;
            matches_scale &= c == IntMatrix::from_fn(1, 1, |_, _| BigInt::from(scale.ratio(n + 1).unwrap_or(0)));
            matrices.push(c);
        }
    }
    Ok(Reconstruction {
        matrices,
        units,
        matches_scale,
    })
}
