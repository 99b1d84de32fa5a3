//! Dimension groups as direct limits `ℤ^{m_0} → ℤ^{m_1} → …` of integer
//! lattices with order units.
//!
//! Equality and positivity in a direct limit are only semi-decidable, so
//! queries return a [`Verdict`] with the level at which it was settled or the
//! horizon at which the search gave up.

use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bratteli::{BratteliDiagram, DiagramError};
use crate::dynsys::{check_conditions, tau_unchecked, ConditionReport, DynError, GeneratorSystem};
use crate::matrix::{format_vector, is_zero_vector, IntMatrix, IntVector};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KError {
    #[error("level {level} is not available (limit is {available})")]
    LevelUnavailable { level: usize, available: usize },
    #[error("cannot push from level {from} down to level {to}")]
    BackwardPush { from: usize, to: usize },
    #[error("horizon {horizon} is below level {level}")]
    HorizonTooSmall { horizon: usize, level: usize },
    #[error("vector at level {level} has length {found}, expected {expected}")]
    LengthMismatch { level: usize, expected: usize, found: usize },
    #[error("connecting matrix {level} has the wrong shape")]
    ShapeMismatch { level: usize },
    #[error("order unit at level {level} is not strictly positive")]
    NonPositiveUnit { level: usize },
    #[error("order units are incompatible at level {level}")]
    UnitMismatch { level: usize },
    #[error("connecting matrix {level} lacks full column rank")]
    InjectivityViolated { level: usize },
    #[error("images of τ at level {level} are not distinct cylinders of that depth")]
    BasisAssumptionUnverified { level: usize },
    #[error(transparent)]
    Dyn(#[from] DynError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

/// Produces the connecting matrix `C_n` for levels beyond the supplied list.
pub type MatrixRule = Arc<dyn Fn(usize) -> IntMatrix + Send + Sync>;

/// How a finite list of connecting matrices continues.
#[derive(Clone)]
pub enum Extension {
    /// The group stops at the last supplied level.
    None,
    /// The last supplied matrix repeats forever (stationary diagrams).
    RepeatLast,
    /// `rule(n)` yields `C_n`. `injective` claims every generated matrix has
    /// full column rank; the claim is checked on materialization.
    Generated { rule: MatrixRule, injective: bool },
}

impl fmt::Debug for Extension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extension::None => f.write_str("None"),
            Extension::RepeatLast => f.write_str("RepeatLast"),
            Extension::Generated { injective, .. } => write!(f, "Generated {{ injective: {injective} }}"),
        }
    }
}

/// An element of the limit, represented at some level.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LimitElement {
    pub level: usize,
    pub vector: IntVector,
}

impl LimitElement {
    pub fn new(level: usize, vector: IntVector) -> Self {
        Self { level, vector }
    }

    pub fn from_i64(level: usize, values: &[i64]) -> Self {
        Self::new(level, values.iter().map(|&v| BigInt::from(v)).collect())
    }

    pub fn neg(&self) -> Self {
        Self::new(self.level, self.vector.iter().map(|v| -v).collect())
    }
}

impl fmt::Display for LimitElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.level, format_vector(&self.vector))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Equal(usize),
    Distinct(usize),
    Positive(usize),
    NotPositive(usize),
    Zero,
    Unknown(usize),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Equal(n) => write!(f, "Equal({n})"),
            Verdict::Distinct(n) => write!(f, "Distinct({n})"),
            Verdict::Positive(n) => write!(f, "Positive({n})"),
            Verdict::NotPositive(n) => write!(f, "NotPositive({n})"),
            Verdict::Zero => f.write_str("Zero"),
            Verdict::Unknown(h) => write!(f, "Unknown({h})"),
        }
    }
}

#[derive(Debug, Default)]
struct Materialized {
    matrices: Vec<IntMatrix>,
    units: Vec<IntVector>,
}

/// A scaled direct limit with lazily materialized levels.
///
/// `C_n` has shape `m_{n+1} × m_n` and `u_{n+1} = C_n u_n`.
#[derive(Debug)]
pub struct DirectLimitGroup {
    supplied: usize,
    extension: Extension,
    injective_forever: bool,
    state: RwLock<Materialized>,
}

impl DirectLimitGroup {
    /// Builds a group from `C_0, …, C_{k-1}`, the unit `u_0` and an
    /// extension rule. Later units are `C_n u_n`.
    pub fn new(matrices: Vec<IntMatrix>, unit0: IntVector, extension: Extension) -> Result<Self, KError> {
        if unit0.is_empty() || unit0.iter().any(|x| !x.is_positive()) {
            return Err(KError::NonPositiveUnit { level: 0 });
        }
        if matches!(extension, Extension::RepeatLast) {
            match matrices.last() {
                Some(m) if m.rows() == m.cols() => {}
                _ => return Err(KError::ShapeMismatch { level: matrices.len() }),
            }
        }
        let injective_forever = matrices.iter().all(IntMatrix::has_full_column_rank)
            && match &extension {
                Extension::None | Extension::RepeatLast => true,
                Extension::Generated { injective, .. } => *injective,
            };
        let mut state = Materialized {
            matrices: Vec::with_capacity(matrices.len()),
            units: vec![unit0],
        };
        for (n, m) in matrices.into_iter().enumerate() {
            state.push(n, m, false)?;
        }
        Ok(Self {
            supplied: state.matrices.len(),
            extension,
            injective_forever,
            state: RwLock::new(state),
        })
    }

    /// The group of a Bratteli diagram: `C_n` is the transposed edge matrix
    /// and `u_n` the path counts.
    pub fn from_diagram(diagram: &BratteliDiagram, extension: Extension) -> Result<Self, KError> {
        let matrices = diagram.edge_matrices().iter().map(IntMatrix::transpose).collect();
        Self::new(matrices, diagram.dim_vector(0)?, extension)
    }

    /// The group of a generator system through `levels` levels.
    ///
    /// `C_n[r', r]` counts the `τ^{(n+1)}_{r'}` images contained in
    /// `B(r, n)` and `u_n[r]` is the number of maps `τ^{(n)}_r`. The images
    /// of `τ^{(n)}` must be pairwise distinct cylinders of depth `n`, which
    /// is what makes them a basis of the topology.
    pub fn from_system(system: &GeneratorSystem, levels: usize) -> Result<Self, KError> {
        if levels > system.levels() {
            return Err(DynError::LevelOutOfRange {
                level: levels,
                levels: system.levels(),
            }
            .into());
        }
        if let ConditionReport::Fail(v) = check_conditions(system, levels)? {
            return Err(DynError::ConditionsViolated(v).into());
        }
        let mut images: Vec<Vec<Vec<crate::Cylinder>>> = vec![vec![vec![crate::Cylinder::whole()]]];
        for n in 1..=levels {
            let tau = tau_unchecked(system, n)?;
            let mut level_images = Vec::with_capacity(tau.len());
            let mut seen = std::collections::HashSet::new();
            for family in &tau {
                let mut cyls = Vec::with_capacity(family.len());
                for map in family {
                    let range = map.range();
                    let single = range.cylinders().len() == 1 && range.max_depth() <= n;
                    let refined = if single { range.refine(n)? } else { Vec::new() };
                    match refined.as_slice() {
                        [c] if seen.insert(c.clone()) => cyls.push(c.clone()),
                        _ => return Err(KError::BasisAssumptionUnverified { level: n }),
                    }
                }
                level_images.push(cyls);
            }
            images.push(level_images);
        }
        let mut matrices = Vec::with_capacity(levels);
        for n in 0..levels {
            let lower = system.base_count(n)?;
            let upper = &images[n + 1];
            let bases: Vec<crate::Cylinder> = (0..lower).map(|r| system.base_set(n, r)).collect::<Result<_, _>>()?;
            matrices.push(IntMatrix::from_fn(upper.len(), lower, |rp, r| {
                BigInt::from(upper[rp].iter().filter(|c| bases[r].contains(c)).count())
            }));
        }
        let group = Self::new(matrices, vec![BigInt::from(1)], Extension::None)?;
        for (n, family) in images.iter().enumerate() {
            let counted: IntVector = family.iter().map(|f| BigInt::from(f.len())).collect();
            if group.unit(n)? != counted {
                return Err(KError::UnitMismatch { level: n });
            }
        }
        Ok(group)
    }

    /// True when every connecting matrix, including future ones, is known to
    /// have full column rank.
    pub fn injective_forever(&self) -> bool {
        self.injective_forever
    }

    /// Number of connecting matrices, or `None` if unbounded.
    pub fn available_levels(&self) -> Option<usize> {
        match self.extension {
            Extension::None => Some(self.supplied),
            _ => None,
        }
    }

    fn ensure(&self, level: usize) -> Result<(), KError> {
        if self.state.read().expect("lock poisoned").matrices.len() >= level {
            return Ok(());
        }
        if let Some(available) = self.available_levels() {
            if level > available {
                return Err(KError::LevelUnavailable { level, available });
            }
        }
        let mut state = self.state.write().expect("lock poisoned");
        while state.matrices.len() < level {
            let n = state.matrices.len();
            let (m, check) = match &self.extension {
                Extension::None => unreachable!("bounded groups are fully materialized"),
                Extension::RepeatLast => (state.matrices[self.supplied - 1].clone(), false),
                Extension::Generated { rule, injective } => (rule(n), *injective),
            };
            state.push(n, m, check)?;
        }
        Ok(())
    }

    /// `m_n`.
    pub fn rank(&self, n: usize) -> Result<usize, KError> {
        self.ensure(n)?;
        Ok(self.state.read().expect("lock poisoned").units[n].len())
    }

    /// `C_n`.
    pub fn matrix(&self, n: usize) -> Result<IntMatrix, KError> {
        self.ensure(n + 1)?;
        Ok(self.state.read().expect("lock poisoned").matrices[n].clone())
    }

    /// `u_n`.
    pub fn unit(&self, n: usize) -> Result<IntVector, KError> {
        self.ensure(n)?;
        Ok(self.state.read().expect("lock poisoned").units[n].clone())
    }

    pub fn order_unit(&self, n: usize) -> Result<LimitElement, KError> {
        Ok(LimitElement::new(n, self.unit(n)?))
    }

    pub fn zero(&self, n: usize) -> Result<LimitElement, KError> {
        Ok(LimitElement::new(n, vec![BigInt::zero(); self.rank(n)?]))
    }

    fn check_element(&self, e: &LimitElement) -> Result<(), KError> {
        let expected = self.rank(e.level)?;
        if e.vector.len() != expected {
            return Err(KError::LengthMismatch {
                level: e.level,
                expected,
                found: e.vector.len(),
            });
        }
        Ok(())
    }

    /// `C_{to-1} ⋯ C_{e.level} · e.vector`.
    pub fn push(&self, e: &LimitElement, to: usize) -> Result<IntVector, KError> {
        if to < e.level {
            return Err(KError::BackwardPush { from: e.level, to });
        }
        self.check_element(e)?;
        self.ensure(to)?;
        let state = self.state.read().expect("lock poisoned");
        let mut v = e.vector.clone();
        for m in &state.matrices[e.level..to] {
            v = m.mul_vec(&v);
        }
        Ok(v)
    }

    /// `a + b` represented at the higher of the two levels.
    pub fn add(&self, a: &LimitElement, b: &LimitElement) -> Result<LimitElement, KError> {
        let level = a.level.max(b.level);
        let (x, y) = (self.push(a, level)?, self.push(b, level)?);
        Ok(LimitElement::new(level, x.iter().zip(&y).map(|(p, q)| p + q).collect()))
    }

    fn last_searchable(&self, horizon: usize) -> usize {
        self.available_levels().map_or(horizon, |a| a.min(horizon))
    }

    /// Equal once the difference vanishes at some level `<= horizon`;
    /// Distinct at the common level when [`Self::injective_forever`] holds
    /// and the difference is nonzero there.
    pub fn equal(&self, a: &LimitElement, b: &LimitElement, horizon: usize) -> Result<Verdict, KError> {
        let start = a.level.max(b.level);
        if horizon < start {
            return Err(KError::HorizonTooSmall { horizon, level: start });
        }
        let diff = self.add(a, &b.neg())?;
        if is_zero_vector(&diff.vector) {
            return Ok(Verdict::Equal(start));
        }
        if self.injective_forever {
            return Ok(Verdict::Distinct(start));
        }
        let last = self.last_searchable(horizon);
        let mut v = diff.vector;
        for n in start..last {
            v = self.matrix(n)?.mul_vec(&v);
            if is_zero_vector(&v) {
                return Ok(Verdict::Equal(n + 1));
            }
        }
        Ok(Verdict::Unknown(horizon))
    }

    /// Zero, Positive at the first level where a push is componentwise
    /// nonnegative, NotPositive where `-e` is, otherwise Unknown.
    pub fn positive(&self, e: &LimitElement, horizon: usize) -> Result<Verdict, KError> {
        if horizon < e.level {
            return Err(KError::HorizonTooSmall { horizon, level: e.level });
        }
        if let Verdict::Equal(_) = self.equal(e, &self.zero(e.level)?, horizon)? {
            return Ok(Verdict::Zero);
        }
        self.check_element(e)?;
        let last = self.last_searchable(horizon);
        let mut v = e.vector.clone();
        let mut first_negative = None;
        for n in e.level..=last {
            if n > e.level {
                v = self.matrix(n - 1)?.mul_vec(&v);
            }
            if v.iter().all(|x| !x.is_negative()) {
                return Ok(Verdict::Positive(n));
            }
            if first_negative.is_none() && v.iter().all(|x| !x.is_positive()) {
                first_negative = Some(n);
            }
        }
        Ok(first_negative.map_or(Verdict::Unknown(horizon), Verdict::NotPositive))
    }
}

impl Materialized {
    fn push(&mut self, n: usize, m: IntMatrix, check_rank: bool) -> Result<(), KError> {
        let unit = &self.units[n];
        if m.cols() != unit.len() || m.rows() == 0 {
            return Err(KError::ShapeMismatch { level: n });
        }
        if check_rank && !m.has_full_column_rank() {
            return Err(KError::InjectivityViolated { level: n });
        }
        let next = m.mul_vec(unit);
        if next.iter().any(|x| !x.is_positive()) {
            return Err(KError::NonPositiveUnit { level: n + 1 });
        }
        self.matrices.push(m);
        self.units.push(next);
        Ok(())
    }
}

/// A family of level maps `φ_n : ℤ^{m_n} → V`.
pub trait LevelEvaluation {
    type Value: PartialEq;
    fn evaluate(&self, level: usize, v: &[BigInt]) -> Self::Value;
}

impl<V: PartialEq, F: Fn(usize, &[BigInt]) -> V> LevelEvaluation for F {
    type Value = V;
    fn evaluate(&self, level: usize, v: &[BigInt]) -> V {
        self(level, v)
    }
}

const SAMPLE_SEED: u64 = 0x5eed_cafe;

/// The first `(n, v)` with `φ_{n+1}(C_n v) != φ_n(v)`, for `n < levels`.
///
/// Samples are the standard basis vectors, `u_n`, and `samples` seeded
/// random vectors with entries in `[-10, 10]`.
pub fn find_cone_morphism_failure<E: LevelEvaluation>(
    group: &DirectLimitGroup,
    eval: &E,
    levels: usize,
    samples: usize,
) -> Result<Option<(usize, IntVector)>, KError> {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    for n in 0..levels {
        let c = group.matrix(n)?;
        let m = c.cols();
        let mut vectors: Vec<IntVector> = (0..m)
            .map(|i| (0..m).map(|j| BigInt::from(u8::from(i == j))).collect())
            .collect();
        vectors.push(group.unit(n)?);
        vectors.extend((0..samples).map(|_| (0..m).map(|_| BigInt::from(rng.gen_range(-10i64..=10))).collect()));
        for v in vectors {
            if eval.evaluate(n + 1, &c.mul_vec(&v)) != eval.evaluate(n, &v) {
                return Ok(Some((n, v)));
            }
        }
    }
    Ok(None)
}

/// True iff the evaluations commute with the connecting maps on all samples.
pub fn verify_cone_morphism<E: LevelEvaluation>(
    group: &DirectLimitGroup,
    eval: &E,
    levels: usize,
    samples: usize,
) -> Result<bool, KError> {
    Ok(find_cone_morphism_failure(group, eval, levels, samples)?.is_none())
}
