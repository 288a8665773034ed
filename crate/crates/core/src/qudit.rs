//! N-atom qutrit register.
//!
//! Basis kets are labelled by digit strings `d₁…d_N` with `dᵢ ∈ {0, 1, 2}`
//! and ordered lexicographically with atom 1 most significant, so `|ij⟩`
//! reads as the base-3 number `ij`.

use ndarray::Array2;

use crate::{ComplexMatrix, Error, Result, C64};

/// Number of levels per atom: ground `|0⟩`, `|1⟩` and Rydberg `|2⟩`.
pub const LEVELS: usize = 3;
/// Index of the Rydberg level.
pub const RYDBERG: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuditRegister {
    n_atoms: usize,
}

impl QuditRegister {
    pub fn new(n_atoms: usize) -> Result<Self> {
        if !(2..=3).contains(&n_atoms) {
            return Err(Error::config(format!(
                "register supports 2 or 3 atoms, got {n_atoms}"
            )));
        }
        Ok(Self { n_atoms })
    }

    pub fn two_atoms() -> Self {
        Self { n_atoms: 2 }
    }

    pub fn three_atoms() -> Self {
        Self { n_atoms: 3 }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        LEVELS.pow(self.n_atoms as u32)
    }

    /// Lexicographic index of a basis label, atom 1 most significant.
    pub fn basis_index(&self, labels: &[u8]) -> Result<usize> {
        if labels.len() != self.n_atoms || labels.iter().any(|&d| d as usize >= LEVELS) {
            return Err(Error::InvalidLabel {
                labels: labels.to_vec(),
                n_atoms: self.n_atoms,
            });
        }
        Ok(labels
            .iter()
            .fold(0, |acc, &d| acc * LEVELS + d as usize))
    }

    /// Inverse of [`basis_index`](Self::basis_index).
    pub fn labels(&self, index: usize) -> Vec<u8> {
        let mut out = vec![0u8; self.n_atoms];
        let mut rest = index;
        for slot in out.iter_mut().rev() {
            *slot = (rest % LEVELS) as u8;
            rest /= LEVELS;
        }
        out
    }

    /// All basis labels in index order.
    pub fn basis_labels(&self) -> Vec<Vec<u8>> {
        (0..self.dim()).map(|i| self.labels(i)).collect()
    }

    fn check_atom(&self, atom: usize) -> Result<()> {
        if atom == 0 || atom > self.n_atoms {
            return Err(Error::AtomOutOfRange {
                atom,
                n_atoms: self.n_atoms,
            });
        }
        Ok(())
    }

    /// `1 ⊗ … ⊗ |upper⟩⟨lower| ⊗ … ⊗ 1` with the nontrivial factor on atom
    /// `atom` (1-based).
    pub fn transition_operator(&self, atom: usize, upper: u8, lower: u8) -> Result<ComplexMatrix> {
        self.check_atom(atom)?;
        for level in [upper, lower] {
            if level as usize >= LEVELS {
                return Err(Error::InvalidLevel(level));
            }
        }
        let dim = self.dim();
        let slot = atom - 1;
        let mut op = Array2::zeros((dim, dim));
        for col in 0..dim {
            let mut labels = self.labels(col);
            if labels[slot] == lower {
                labels[slot] = upper;
                let row = self.basis_index(&labels)?;
                op[[row, col]] = C64::new(1.0, 0.0);
            }
        }
        Ok(op)
    }

    /// Number of Rydberg-excited atoms in basis state `index`.
    pub fn rydberg_count(&self, index: usize) -> usize {
        self.labels(index).iter().filter(|&&d| d == RYDBERG).count()
    }

    /// Pairwise interaction `Σ_{m>n} V |2⟩_m⟨2| ⊗ |2⟩_n⟨2|` as a diagonal.
    pub fn rydberg_shifts(&self, v: f64) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let r = self.rydberg_count(i);
                v * (r * r.saturating_sub(1) / 2) as f64
            })
            .collect()
    }

    /// Dense form of [`rydberg_shifts`](Self::rydberg_shifts).
    pub fn rydberg_interaction(&self, v: f64) -> Result<ComplexMatrix> {
        if !(v >= 0.0) {
            return Err(Error::config(format!("interaction strength must be >= 0, got {v}")));
        }
        let shifts = self.rydberg_shifts(v);
        Ok(Array2::from_diag(
            &shifts.iter().map(|&s| C64::new(s, 0.0)).collect::<ndarray::Array1<_>>(),
        ))
    }

    /// Computational basis ket.
    pub fn ket(&self, labels: &[u8]) -> Result<crate::ComplexVector> {
        let mut v = ndarray::Array1::zeros(self.dim());
        v[self.basis_index(labels)?] = C64::new(1.0, 0.0);
        Ok(v)
    }
}

/// Brute-force Kronecker product, used to cross-check operator placement.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(upper: u8, lower: u8) -> ComplexMatrix {
        let mut m = Array2::zeros((3, 3));
        m[[upper as usize, lower as usize]] = C64::new(1.0, 0.0);
        m
    }

    #[test]
    fn basis_index_examples() {
        let two = QuditRegister::two_atoms();
        let three = QuditRegister::three_atoms();
        assert_eq!(two.basis_index(&[0, 0]).unwrap(), 0);
        assert_eq!(two.basis_index(&[2, 2]).unwrap(), 8);
        assert_eq!(three.basis_index(&[2, 1, 2]).unwrap(), 2 * 9 + 3 + 2);
        assert_eq!(three.dim(), 27);
    }

    #[test]
    fn invalid_labels_are_rejected() {
        let two = QuditRegister::two_atoms();
        assert!(matches!(two.basis_index(&[0, 3]), Err(Error::InvalidLabel { .. })));
        assert!(matches!(two.basis_index(&[0]), Err(Error::InvalidLabel { .. })));
        assert!(QuditRegister::new(4).is_err());
    }

    #[test]
    fn labels_round_trip() {
        let three = QuditRegister::three_atoms();
        for i in 0..27 {
            assert_eq!(three.basis_index(&three.labels(i)).unwrap(), i);
        }
    }

    #[test]
    fn transition_operator_structure() {
        let two = QuditRegister::two_atoms();
        let op = two.transition_operator(1, 2, 0).unwrap();
        let nonzero: Vec<_> = op.indexed_iter().filter(|(_, v)| v.norm() > 0.0).collect();
        assert_eq!(nonzero.len(), 3);
        for j in 0..3u8 {
            let row = two.basis_index(&[2, j]).unwrap();
            let col = two.basis_index(&[0, j]).unwrap();
            assert_eq!(op[[row, col]], C64::new(1.0, 0.0));
        }

        let proj = two.transition_operator(1, 2, 2).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let expected = if i == j && i >= 6 { 1.0 } else { 0.0 };
                assert_eq!(proj[[i, j]].re, expected);
            }
        }
        assert!(matches!(
            two.transition_operator(3, 2, 0),
            Err(Error::AtomOutOfRange { .. })
        ));
    }

    #[test]
    fn transition_operator_matches_kronecker_oracle() {
        let three = QuditRegister::three_atoms();
        let id = Array2::from_diag(&ndarray::Array1::from_elem(3, C64::new(1.0, 0.0)));
        for atom in 1..=3 {
            for upper in 0..3u8 {
                for lower in 0..3u8 {
                    let factors: Vec<ComplexMatrix> = (1..=3)
                        .map(|k| if k == atom { single(upper, lower) } else { id.clone() })
                        .collect();
                    let oracle = kron(&kron(&factors[0], &factors[1]), &factors[2]);
                    assert_eq!(three.transition_operator(atom, upper, lower).unwrap(), oracle);
                }
            }
        }
        let op = three.transition_operator(2, 2, 1).unwrap();
        let r = three.basis_index(&[0, 2, 0]).unwrap();
        let c = three.basis_index(&[0, 1, 0]).unwrap();
        assert_eq!(op[[r, c]], C64::new(1.0, 0.0));
    }

    #[test]
    fn interaction_shifts() {
        let two = QuditRegister::two_atoms();
        let h = two.rydberg_interaction(200.0).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let expected = if i == 8 && j == 8 { 200.0 } else { 0.0 };
                assert_eq!(h[[i, j]], C64::new(expected, 0.0));
            }
        }

        let three = QuditRegister::three_atoms();
        let v = 7.5;
        let shifts = three.rydberg_shifts(v);
        assert_eq!(shifts[three.basis_index(&[2, 2, 2]).unwrap()], 3.0 * v);
        assert_eq!(shifts[three.basis_index(&[2, 1, 2]).unwrap()], v);
        // Brute-force pair enumeration.
        for (i, shift) in shifts.iter().enumerate() {
            let l = three.labels(i);
            let mut pairs = 0;
            for m in 0..3 {
                for n in 0..m {
                    if l[m] == 2 && l[n] == 2 {
                        pairs += 1;
                    }
                }
            }
            assert_eq!(*shift, pairs as f64 * v);
        }
        assert!(two.rydberg_interaction(-1.0).is_err());
    }

    #[test]
    fn adjoint_pairs_and_commutation() {
        let three = QuditRegister::three_atoms();
        for atom in 1..=3 {
            for a in 0..3u8 {
                for b in 0..3u8 {
                    let op = three.transition_operator(atom, a, b).unwrap();
                    let adj = three.transition_operator(atom, b, a).unwrap();
                    assert_eq!(op.t().mapv(|z| z.conj()), adj);
                }
            }
        }
        for (a, b, c, d) in [(2, 0, 2, 1), (1, 2, 0, 2), (2, 2, 1, 0)] {
            let x = three.transition_operator(2, a, b).unwrap();
            let y = three.transition_operator(3, c, d).unwrap();
            let comm = x.dot(&y) - y.dot(&x);
            assert!(comm.iter().all(|z| z.norm() <= 1e-12));
        }
    }
}
