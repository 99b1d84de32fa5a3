use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::bratteli::{BratteliDiagram, PathPrefix};

use super::DynError;

/// The map "add `increment` with carry" on `Π_t {0, …, b_t - 1}`, digits
/// least significant first. With `increment = 1` this is the odometer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddingMachine {
    bases: Vec<u64>,
    increment: BigInt,
}

impl AddingMachine {
    pub fn new(bases: Vec<u64>, increment: BigInt) -> Result<Self, DynError> {
        if bases.is_empty() || bases.iter().any(|&b| b < 2) {
            return Err(DynError::InvalidBases);
        }
        Ok(Self { bases, increment })
    }

    /// The odometer on `{0, …, base-1}^depth`.
    pub fn odometer(base: u64, depth: usize) -> Result<Self, DynError> {
        Self::new(vec![base; depth], BigInt::one())
    }

    pub fn bases(&self) -> &[u64] {
        &self.bases
    }

    pub fn increment(&self) -> &BigInt {
        &self.increment
    }

    /// The digit space as a rank-one Bratteli diagram.
    pub fn diagram(&self) -> BratteliDiagram {
        BratteliDiagram::rank_one(&self.bases).expect("bases are at least 2")
    }

    /// Adds `amount` to the prefix read as a mixed-radix number.
    ///
    /// Returns the image prefix (same depth) and whether no carry or borrow
    /// leaves the prefix, i.e. whether the map keeps the tail of every point
    /// of the cylinder fixed.
    pub fn add_to_prefix(&self, prefix: &PathPrefix, amount: &BigInt) -> Result<(PathPrefix, bool), DynError> {
        let depth = prefix.len();
        if depth > self.bases.len() {
            return Err(DynError::DepthTooShallow {
                depth: self.bases.len(),
                required: depth,
            });
        }
        let mut value = BigInt::zero();
        let mut weight = BigInt::one();
        for (&digit, &base) in prefix.edges().iter().zip(&self.bases) {
            if u64::from(digit) >= base {
                return Err(DynError::Diagram(crate::DiagramError::InvalidPrefix {
                    step: depth,
                }));
            }
            value += &weight * digit;
            weight *= base;
        }
        let total = value + amount;
        let tail_identity = !total.is_negative() && total < weight;
        let mut rest = total.mod_floor(&weight);
        let mut digits = Vec::with_capacity(depth);
        for &base in &self.bases[..depth] {
            let (q, r) = rest.div_rem(&BigInt::from(base));
            digits.push(r.to_u32().expect("digit below base"));
            rest = q;
        }
        Ok((PathPrefix::from_edges(digits), tail_identity))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(edges: &[u32]) -> PathPrefix {
        PathPrefix::from_edges(edges.to_vec())
    }

    #[test]
    fn binary_increment() {
        let phi = AddingMachine::odometer(2, 3).unwrap();
        assert_eq!(phi.add_to_prefix(&p(&[1, 1, 0]), &BigInt::one()).unwrap(), (p(&[0, 0, 1]), true));
        assert_eq!(phi.add_to_prefix(&p(&[1, 1, 1]), &BigInt::one()).unwrap(), (p(&[0, 0, 0]), false));
        assert_eq!(phi.add_to_prefix(&p(&[0, 0, 0]), &BigInt::from(2)).unwrap(), (p(&[0, 1, 0]), true));
        assert_eq!(phi.add_to_prefix(&p(&[0, 0]), &BigInt::from(-1)).unwrap(), (p(&[1, 1]), false));
    }

    #[test]
    fn mixed_radix() {
        let m = AddingMachine::new(vec![2, 3], BigInt::one()).unwrap();
        // (1, 2) = 1 + 2·2 = 5, the largest value of depth 2.
        assert_eq!(m.add_to_prefix(&p(&[1, 2]), &BigInt::one()).unwrap(), (p(&[0, 0]), false));
        assert_eq!(m.add_to_prefix(&p(&[1, 0]), &BigInt::one()).unwrap(), (p(&[0, 1]), true));
    }

    #[test]
    fn rejects_bad_bases() {
        assert_eq!(AddingMachine::new(vec![2, 1], BigInt::one()), Err(DynError::InvalidBases));
    }
}
