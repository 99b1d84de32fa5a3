//! Closed-form models: the CAR algebra (dyadic rationals), continuous
//! functions on the Cantor set, the hybrid example on `X_min`, and the GICAR
//! algebra with its basis change and positive cone.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::ktheory::{DirectLimitGroup, Extension, LimitElement};
use crate::matrix::{IntMatrix, IntVector};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("index r={r} out of range for n={n}")]
    IndexOutOfRange { n: usize, r: usize },
    #[error("expected a vector of length {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
}

/// `numerator / 2^exponent`, normalized so the numerator is odd or the
/// exponent is zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numerator: BigInt,
    exponent: u32,
}

impl Dyadic {
    pub fn new(numerator: BigInt, exponent: u32) -> Self {
        let mut d = Self { numerator, exponent };
        if d.numerator.is_zero() {
            d.exponent = 0;
        }
        while d.exponent > 0 && d.numerator.is_even() {
            d.numerator >>= 1u32;
            d.exponent -= 1;
        }
        d
    }

    pub fn integer(value: i64) -> Self {
        Self::new(BigInt::from(value), 0)
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/{}", self.numerator, BigInt::one() << self.exponent)
        }
    }
}

fn level_u32(n: usize) -> u32 {
    u32::try_from(n).expect("level fits in u32")
}

/// `ℤ → ℤ → …` with every step multiplication by 2 and `u_n = 2^n`.
pub fn car_group() -> DirectLimitGroup {
    DirectLimitGroup::new(vec![IntMatrix::from_i64_rows(&[[2]])], vec![BigInt::one()], Extension::RepeatLast)
        .expect("valid CAR data")
}

/// `(n, [α]) ↦ α / 2^n`.
pub fn car_value(e: &LimitElement) -> Dyadic {
    Dyadic::new(e.vector[0].clone(), level_u32(e.level))
}

/// `m_{n+1} × m_n` matrix sending vertex `j` to its children `2j, 2j+1`,
/// each edge with multiplicity `weight`.
fn duplication(n: usize, weight: i64) -> IntMatrix {
    let cols = 1usize << n;
    IntMatrix::from_fn(2 * cols, cols, |i, j| if i / 2 == j { BigInt::from(weight) } else { BigInt::zero() })
}

/// The binary-splitting diagram with simple edges through `depth` levels.
/// Elements are integer-valued locally constant functions on the Cantor set.
pub fn cantor_group(depth: usize) -> DirectLimitGroup {
    let matrices = (0..depth).map(|n| duplication(n, 1)).collect();
    DirectLimitGroup::new(matrices, vec![BigInt::one()], Extension::None).expect("valid Cantor data")
}

/// Values of `(n, α)` on the `2^depth` cylinders of depth `depth >= n`.
pub fn cantor_function(e: &LimitElement, depth: usize) -> Vec<BigInt> {
    refine(&e.vector, depth - e.level)
}

fn refine<T: Clone>(values: &[T], steps: usize) -> Vec<T> {
    let copies = 1usize << steps;
    values
        .iter()
        .flat_map(|v| std::iter::repeat_n(v.clone(), copies))
        .collect()
}

/// Ranks `2^n`; each vertex has a double edge to each of its two children.
pub fn hybrid_group() -> DirectLimitGroup {
    let rule = Arc::new(|n| duplication(n, 2));
    DirectLimitGroup::new(vec![], vec![BigInt::one()], Extension::Generated { rule, injective: true })
        .expect("valid hybrid data")
}

/// `(n, α) ↦ 2^{-n} α` on the `2^n` cylinders of depth `n` meeting `X_min`.
pub fn hybrid_value(e: &LimitElement) -> Vec<Dyadic> {
    e.vector
        .iter()
        .map(|a| Dyadic::new(a.clone(), level_u32(e.level)))
        .collect()
}

/// [`hybrid_value`] refined to cylinders of depth `depth >= e.level`.
pub fn hybrid_function(e: &LimitElement, depth: usize) -> Vec<Dyadic> {
    refine(&hybrid_value(e), depth - e.level)
}

/// `C(a, b)`, zero outside `0 <= b <= a`.
pub fn binomial(a: i64, b: i64) -> BigInt {
    if a < 0 || b < 0 || b > a {
        return BigInt::zero();
    }
    let b = b.min(a - b);
    let mut acc = BigInt::one();
    for i in 0..b {
        acc = acc * BigInt::from(a - i) / BigInt::from(i + 1);
    }
    acc
}

/// `A_{n,n+1}`: `(n+2) × (n+2)`, ones on the diagonal and subdiagonal.
pub fn gicar_step_matrix(n: usize) -> IntMatrix {
    IntMatrix::from_fn(n + 2, n + 2, |i, j| BigInt::from(u8::from(i == j || i == j + 1)))
}

/// `A_{n,n+1}^{-1}`, with entry `(-1)^{i-j}` for `i >= j`.
pub fn gicar_step_inverse(n: usize) -> IntMatrix {
    IntMatrix::from_fn(n + 2, n + 2, |i, j| {
        if i < j {
            BigInt::zero()
        } else if (i - j) % 2 == 0 {
            BigInt::one()
        } else {
            -BigInt::one()
        }
    })
}

/// `A_n = [A_{0,1}^{-1} ⊕ I_{n-1}] [A_{1,2}^{-1} ⊕ I_{n-2}] ⋯ A_{n-1,n}^{-1}`;
/// `A_0 = I_1`.
pub fn gicar_basis_change(n: usize) -> IntMatrix {
    let mut acc = IntMatrix::identity(n + 1);
    for k in 0..n {
        let factor = gicar_step_inverse(k).direct_sum(&IntMatrix::identity(n - 1 - k));
        acc = acc.mul(&factor);
    }
    acc
}

/// Column `r` (1-based) of `A_n` in closed form:
/// `Σ_{j=r}^{n+1} (-1)^{j-r} C(n+1-r, j-r) e_j`.
pub fn gicar_binomial_column(n: usize, r: usize) -> Result<IntVector, ModelError> {
    if r == 0 || r > n + 1 {
        return Err(ModelError::IndexOutOfRange { n, r });
    }
    let top = (n + 1 - r) as i64;
    Ok((1..=n + 1)
        .map(|j| {
            if j < r {
                BigInt::zero()
            } else {
                let k = (j - r) as i64;
                let c = binomial(top, k);
                if k % 2 == 0 {
                    c
                } else {
                    -c
                }
            }
        })
        .collect())
}

/// A function on `X_min` written as `Σ_r β_r χ_{B(r,r-1) ∩ X_min}`, with
/// trailing zero coefficients trimmed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct XminFunction {
    coefficients: Vec<BigInt>,
}

impl XminFunction {
    pub fn new(mut coefficients: Vec<BigInt>) -> Self {
        while coefficients.last().is_some_and(Zero::is_zero) {
            coefficients.pop();
        }
        Self { coefficients }
    }

    pub fn coefficients(&self) -> &[BigInt] {
        &self.coefficients
    }

    /// The coefficients padded with zeros to length `len`.
    pub fn padded(&self, len: usize) -> Vec<BigInt> {
        let mut v = self.coefficients.clone();
        v.resize(len.max(v.len()), BigInt::zero());
        v
    }
}

impl fmt::Display for XminFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::matrix::format_vector(&self.coefficients))
    }
}

fn check_len(n: usize, v: &[BigInt]) -> Result<(), ModelError> {
    if v.len() != n + 1 {
        return Err(ModelError::LengthMismatch {
            expected: n + 1,
            found: v.len(),
        });
    }
    Ok(())
}

/// `φ_n = R_n ∘ A_n`.
pub fn gicar_phi(n: usize, alpha: &[BigInt]) -> Result<XminFunction, ModelError> {
    check_len(n, alpha)?;
    Ok(XminFunction::new(gicar_basis_change(n).mul_vec(alpha)))
}

/// `S_k = Σ_{l=0}^k C(n-l, k-l) β_{l+1}` for `k = 0..=n`.
fn partial_sums(n: usize, beta: &[BigInt]) -> IntVector {
    (0..=n)
        .map(|k| {
            (0..=k)
                .map(|l| binomial((n - l) as i64, (k - l) as i64) * &beta[l])
                .sum()
        })
        .collect()
}

/// Membership in `P_n^+`: every `S_k` is nonnegative.
pub fn gicar_cone_member(n: usize, beta: &[BigInt]) -> Result<bool, ModelError> {
    check_len(n, beta)?;
    Ok(partial_sums(n, beta).iter().all(|s| !s.is_negative()))
}

/// The `α` with `φ_n(α) = β`, namely `α_{k+1} = S_k`.
pub fn gicar_recover_alpha(n: usize, beta: &[BigInt]) -> Result<IntVector, ModelError> {
    check_len(n, beta)?;
    Ok(partial_sums(n, beta))
}

/// The Pascal-triangle group: `C_n` is `(n+2) × (n+1)` with ones on the
/// diagonal and subdiagonal.
pub fn gicar_group() -> DirectLimitGroup {
    let rule = Arc::new(|n| {
        IntMatrix::from_fn(n + 2, n + 1, |i, j| BigInt::from(u8::from(i == j || i == j + 1)))
    });
    DirectLimitGroup::new(vec![], vec![BigInt::one()], Extension::Generated { rule, injective: true })
        .expect("valid GICAR data")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ktheory::{verify_cone_morphism, Verdict};
    use crate::matrix::int_vector;

    #[test]
    fn dyadic_normalization() {
        assert_eq!(Dyadic::new(BigInt::from(4), 3), Dyadic::new(BigInt::from(1), 1));
        assert_eq!(Dyadic::new(BigInt::zero(), 7), Dyadic::integer(0));
        assert_eq!(Dyadic::new(BigInt::from(5), 3).to_string(), "5/8");
        assert_eq!(Dyadic::new(BigInt::from(-6), 1).to_string(), "-3");
    }

    #[test]
    fn car_values() {
        let g = car_group();
        assert_eq!(car_value(&LimitElement::from_i64(3, &[5])).to_string(), "5/8");
        assert_eq!(car_value(&LimitElement::from_i64(0, &[0])), Dyadic::integer(0));
        for n in 0..10 {
            assert_eq!(car_value(&g.order_unit(n).unwrap()), Dyadic::integer(1));
        }
    }

    #[test]
    fn cantor_examples() {
        let g = cantor_group(4);
        assert_eq!(g.order_unit(3).unwrap().vector, vec![BigInt::one(); 8]);
        let a = LimitElement::from_i64(1, &[2, 3]);
        let b = LimitElement::from_i64(2, &[2, 2, 3, 3]);
        assert_eq!(g.equal(&a, &b, 4).unwrap(), Verdict::Equal(2));
        assert_eq!(cantor_function(&a, 2), b.vector);
        assert_eq!(g.positive(&LimitElement::from_i64(1, &[1, 0]), 4).unwrap(), Verdict::Positive(1));
    }

    #[test]
    fn hybrid_examples() {
        let g = hybrid_group();
        let v = hybrid_value(&LimitElement::from_i64(1, &[1, 0]));
        assert_eq!(v, vec![Dyadic::new(BigInt::one(), 1), Dyadic::integer(0)]);
        for n in 0..6 {
            assert!(hybrid_value(&g.order_unit(n).unwrap()).iter().all(|d| *d == Dyadic::integer(1)));
        }
        let eval = |n: usize, v: &[BigInt]| hybrid_function(&LimitElement::new(n, v.to_vec()), 8);
        assert!(verify_cone_morphism(&g, &eval, 7, 5).unwrap());
    }

    #[test]
    fn gicar_matrices() {
        assert_eq!(gicar_step_matrix(0), IntMatrix::from_i64_rows(&[[1, 0], [1, 1]]));
        assert_eq!(gicar_step_inverse(0).mul_vec(&int_vector(&[1, 0])), int_vector(&[1, -1]));
        for n in 0..=12 {
            assert_eq!(gicar_step_matrix(n).mul(&gicar_step_inverse(n)), IntMatrix::identity(n + 2));
        }
        assert_eq!(gicar_basis_change(1), IntMatrix::from_i64_rows(&[[1, 0], [-1, 1]]));
        assert_eq!(gicar_basis_change(2).column(0), int_vector(&[1, -2, 1]));
        assert_eq!(gicar_binomial_column(2, 1).unwrap(), int_vector(&[1, -2, 1]));
        assert_eq!(gicar_binomial_column(3, 4).unwrap(), int_vector(&[0, 0, 0, 1]));
        assert_eq!(gicar_binomial_column(2, 0), Err(ModelError::IndexOutOfRange { n: 2, r: 0 }));
        for n in 1..=12 {
            let a = gicar_basis_change(n);
            assert_eq!(a.determinant(), BigInt::one());
            assert!(a.is_lower_triangular());
        }
    }

    #[test]
    fn gicar_cone_examples() {
        assert_eq!(gicar_phi(1, &int_vector(&[1, 2])).unwrap().coefficients(), &int_vector(&[1, 1])[..]);
        assert_eq!(gicar_phi(2, &int_vector(&[1, 0, 0])).unwrap().coefficients(), &int_vector(&[1, -2, 1])[..]);
        assert!(gicar_cone_member(2, &int_vector(&[1, -2, 1])).unwrap());
        assert!(gicar_cone_member(2, &int_vector(&[0, 0, 0])).unwrap());
        assert!(!gicar_cone_member(2, &int_vector(&[-1, 0, 0])).unwrap());
        assert_eq!(gicar_recover_alpha(2, &int_vector(&[1, -2, 1])).unwrap(), int_vector(&[1, 0, 0]));
        assert_eq!(gicar_recover_alpha(2, &int_vector(&[0, 0, 0])).unwrap(), int_vector(&[0, 0, 0]));
        assert_eq!(
            gicar_phi(2, &int_vector(&[1, 0])),
            Err(ModelError::LengthMismatch { expected: 3, found: 2 })
        );
    }

    #[test]
    fn gicar_group_units_and_triangles() {
        let g = gicar_group();
        assert_eq!(g.order_unit(2).unwrap().vector, int_vector(&[1, 2, 1]));
        assert_eq!(g.push(&LimitElement::from_i64(0, &[1]), 2).unwrap(), int_vector(&[1, 2, 1]));
        assert_eq!(g.positive(&LimitElement::from_i64(2, &[1, 1, 1]), 4).unwrap(), Verdict::Positive(2));
        let eval = |n: usize, v: &[BigInt]| gicar_phi(n, v).unwrap();
        assert!(verify_cone_morphism(&g, &eval, 10, 5).unwrap());
        for n in 0..6 {
            let mut padded = int_vector(&[3, -1]);
            padded.resize(n + 2, BigInt::zero());
            let alpha = &padded[..n + 1];
            let mut ext = alpha.to_vec();
            ext.push(BigInt::zero());
            assert_eq!(
                gicar_phi(n + 1, &gicar_step_matrix(n).mul_vec(&ext)).unwrap(),
                gicar_phi(n, alpha).unwrap()
            );
        }
    }

    #[test]
    fn binomial_identity() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(3, 5), BigInt::zero());
        assert_eq!(binomial(3, -1), BigInt::zero());
        for m in 0..=30 {
            for n in 0..=30 {
                let lhs: BigInt = (0..=n).map(|k| binomial(m + k, k)).sum();
                assert_eq!(lhs, binomial(m + n + 1, n));
            }
        }
    }
}
