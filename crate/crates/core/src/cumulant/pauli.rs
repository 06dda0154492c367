//! Same-spin operator products reduced to `{1, σz, σ⁺, σ⁻}`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpinOp {
    Plus,
    Minus,
    Z,
}

impl SpinOp {
    pub fn dagger(self) -> Self {
        match self {
            SpinOp::Plus => SpinOp::Minus,
            SpinOp::Minus => SpinOp::Plus,
            SpinOp::Z => SpinOp::Z,
        }
    }
}

/// `c₀·1 + c_z σz + c₊ σ⁺ + c₋ σ⁻` with real coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PauliCombination {
    pub identity: f64,
    pub z: f64,
    pub plus: f64,
    pub minus: f64,
}

impl PauliCombination {
    pub fn one() -> Self {
        Self { identity: 1.0, ..Default::default() }
    }

    fn of(op: SpinOp) -> Self {
        match op {
            SpinOp::Plus => Self { plus: 1.0, ..Default::default() },
            SpinOp::Minus => Self { minus: 1.0, ..Default::default() },
            SpinOp::Z => Self { z: 1.0, ..Default::default() },
        }
    }

    /// Right-multiplies by a single operator.
    fn times(self, op: SpinOp) -> Self {
        let mut r = Self::default();
        // 1·X
        r = r.add(Self::of(op), self.identity);
        match op {
            SpinOp::Z => {
                // σzσz = 1, σ⁺σz = −σ⁺, σ⁻σz = σ⁻
                r.identity += self.z;
                r.plus -= self.plus;
                r.minus += self.minus;
            }
            SpinOp::Minus => {
                // σzσ⁻ = −σ⁻, σ⁺σ⁻ = (1+σz)/2, σ⁻σ⁻ = 0
                r.minus -= self.z;
                r.identity += 0.5 * self.plus;
                r.z += 0.5 * self.plus;
            }
            SpinOp::Plus => {
                // σzσ⁺ = σ⁺, σ⁻σ⁺ = (1−σz)/2, σ⁺σ⁺ = 0
                r.plus += self.z;
                r.identity += 0.5 * self.minus;
                r.z -= 0.5 * self.minus;
            }
        }
        r
    }

    fn add(mut self, o: Self, s: f64) -> Self {
        self.identity += s * o.identity;
        self.z += s * o.z;
        self.plus += s * o.plus;
        self.minus += s * o.minus;
        self
    }

    /// Nonzero terms as `(coefficient, operator)`, `None` meaning the identity.
    pub fn terms(&self) -> Vec<(f64, Option<SpinOp>)> {
        [
            (self.identity, None),
            (self.z, Some(SpinOp::Z)),
            (self.plus, Some(SpinOp::Plus)),
            (self.minus, Some(SpinOp::Minus)),
        ]
        .into_iter()
        .filter(|(c, _)| *c != 0.0)
        .collect()
    }
}

/// Reduces an ordered product of operators acting on one spin.
pub fn pauli_reduce(product: &[SpinOp]) -> PauliCombination {
    product.iter().fold(PauliCombination::one(), |acc, &op| acc.times(op))
}

#[cfg(test)]
mod tests {
    use super::SpinOp::*;
    use super::*;

    fn pc(identity: f64, z: f64, plus: f64, minus: f64) -> PauliCombination {
        PauliCombination { identity, z, plus, minus }
    }

    #[test]
    fn two_level_algebra() {
        assert_eq!(pauli_reduce(&[Z, Minus]), pc(0.0, 0.0, 0.0, -1.0));
        assert_eq!(pauli_reduce(&[Minus, Z]), pc(0.0, 0.0, 0.0, 1.0));
        assert_eq!(pauli_reduce(&[Z, Plus]), pc(0.0, 0.0, 1.0, 0.0));
        assert_eq!(pauli_reduce(&[Plus, Z]), pc(0.0, 0.0, -1.0, 0.0));
        assert_eq!(pauli_reduce(&[Plus, Minus]), pc(0.5, 0.5, 0.0, 0.0));
        assert_eq!(pauli_reduce(&[Minus, Plus]), pc(0.5, -0.5, 0.0, 0.0));
        assert_eq!(pauli_reduce(&[Minus, Minus]), pc(0.0, 0.0, 0.0, 0.0));
        assert_eq!(pauli_reduce(&[Plus, Plus]), pc(0.0, 0.0, 0.0, 0.0));
        assert_eq!(pauli_reduce(&[Z, Z]), pc(1.0, 0.0, 0.0, 0.0));
        assert_eq!(pauli_reduce(&[]), pc(1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn longer_products() {
        // σ⁺σ⁻σ⁺ = σ⁺, σzσ⁺σ⁻ = (1+σz)/2
        assert_eq!(pauli_reduce(&[Plus, Minus, Plus]), pc(0.0, 0.0, 1.0, 0.0));
        assert_eq!(pauli_reduce(&[Z, Plus, Minus]), pc(0.5, 0.5, 0.0, 0.0));
    }
}
