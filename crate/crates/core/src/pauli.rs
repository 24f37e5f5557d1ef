//! Pauli-string algebra on up to 64 qubits.
//!
//! A [`PauliString`] is the literal tensor product of single-qubit Pauli
//! operators, encoded as a pair of bitmasks: qubit `q` carries `X` if only
//! the X bit is set, `Z` if only the Z bit is set, and `Y` if both are set.
//! Products of strings are again strings up to a global phase; that phase is
//! returned separately and ends up in the coefficients of a
//! [`QubitOperator`], which is a sparse real- or complex-weighted sum of
//! strings kept in a canonical (sorted, merged, pruned) form.

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficients with magnitude at or below this value are dropped when an
/// operator is brought to canonical form.
pub const COEFF_PRUNE_THRESHOLD: f64 = 1e-12;

/// Tensor product of single-qubit Pauli operators (no phase).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PauliString {
    // Ordering derives lexicographically on (x_mask, z_mask); this is the
    // canonical "bitmask ascending" order used for tie-breaking.
    x_mask: u64,
    z_mask: u64,
}

impl PauliString {
    pub fn identity() -> Self {
        PauliString { x_mask: 0, z_mask: 0 }
    }

    pub fn from_masks(x_mask: u64, z_mask: u64) -> Self {
        PauliString { x_mask, z_mask }
    }

    pub fn x(qubit: usize) -> Self {
        PauliString { x_mask: 1 << qubit, z_mask: 0 }
    }

    pub fn y(qubit: usize) -> Self {
        PauliString { x_mask: 1 << qubit, z_mask: 1 << qubit }
    }

    pub fn z(qubit: usize) -> Self {
        PauliString { x_mask: 0, z_mask: 1 << qubit }
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    /// Number of qubits on which the string acts non-trivially (Z chains
    /// included).
    pub fn weight(&self) -> u32 {
        (self.x_mask | self.z_mask).count_ones()
    }

    /// Smallest qubit count that contains the string's support.
    pub fn min_qubits(&self) -> usize {
        (64 - (self.x_mask | self.z_mask).leading_zeros()) as usize
    }

    fn num_y(&self) -> u32 {
        (self.x_mask & self.z_mask).count_ones()
    }

    /// Phase picked up when the string acts on computational basis state
    /// `n`: `P|n> = phase * |n ^ x_mask>`.
    pub fn phase_for_basis(&self, n: u64) -> Complex64 {
        let k = (self.num_y() as i64 + 2 * (self.z_mask & n).count_ones() as i64).rem_euclid(4);
        I_POWERS[k as usize]
    }

    /// Symplectic commutation test: strings either commute or anticommute.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let s = (self.x_mask & other.z_mask).count_ones()
            + (self.z_mask & other.x_mask).count_ones();
        s % 2 == 0
    }

    /// Product of two strings: `self * other = phase * result`.
    pub fn mul(&self, other: &PauliString) -> (Complex64, PauliString) {
        let out = PauliString {
            x_mask: self.x_mask ^ other.x_mask,
            z_mask: self.z_mask ^ other.z_mask,
        };
        // With P(x,z) = i^{|x&z|} X^x Z^z, commuting Z^za past X^xb gives
        // (-1)^{|za & xb|}; the i powers reassemble into the result's own
        // Y count.
        let k = (self.num_y() as i64 + other.num_y() as i64 - out.num_y() as i64)
            .rem_euclid(4) as usize;
        let sign = if (self.z_mask & other.x_mask).count_ones() % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        (I_POWERS[k] * sign, out)
    }
}

const I_POWERS: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "I");
        }
        let mut first = true;
        for q in 0..64 {
            let x = self.x_mask >> q & 1 == 1;
            let z = self.z_mask >> q & 1 == 1;
            let sym = match (x, z) {
                (true, false) => "X",
                (true, true) => "Y",
                (false, true) => "Z",
                (false, false) => continue,
            };
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{sym}{q}")?;
            first = false;
        }
        Ok(())
    }
}

/// Sparse sum of Pauli strings with complex coefficients, kept sorted by
/// string, merged, and pruned below [`COEFF_PRUNE_THRESHOLD`].
#[derive(Clone, Debug, PartialEq)]
pub struct QubitOperator {
    num_qubits: usize,
    terms: Vec<(Complex64, PauliString)>,
}

impl QubitOperator {
    pub fn zero(num_qubits: usize) -> Self {
        QubitOperator { num_qubits, terms: Vec::new() }
    }

    pub fn identity(num_qubits: usize) -> Self {
        QubitOperator {
            num_qubits,
            terms: vec![(Complex64::new(1.0, 0.0), PauliString::identity())],
        }
    }

    pub fn from_terms(
        num_qubits: usize,
        terms: impl IntoIterator<Item = (Complex64, PauliString)>,
    ) -> Result<Self> {
        let terms: Vec<_> = terms.into_iter().collect();
        for (_, s) in &terms {
            if s.min_qubits() > num_qubits {
                return Err(Error::InvalidOperator(format!(
                    "string {s} exceeds the declared {num_qubits}-qubit register"
                )));
            }
        }
        let mut op = QubitOperator { num_qubits, terms };
        op.simplify();
        Ok(op)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[(Complex64, PauliString)] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the given string, zero when absent.
    pub fn coefficient(&self, string: &PauliString) -> Complex64 {
        match self.terms.binary_search_by(|(_, s)| s.cmp(string)) {
            Ok(i) => self.terms[i].0,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn add(&self, other: &QubitOperator) -> Result<QubitOperator> {
        self.check_register(other)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        let mut op = QubitOperator { num_qubits: self.num_qubits, terms };
        op.simplify();
        Ok(op)
    }

    pub fn sub(&self, other: &QubitOperator) -> Result<QubitOperator> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> QubitOperator {
        let mut op = QubitOperator {
            num_qubits: self.num_qubits,
            terms: self
                .terms
                .iter()
                .map(|(c, s)| (c * factor, *s))
                .collect(),
        };
        op.simplify();
        op
    }

    /// Operator product: bilinear expansion over string products, then
    /// canonicalization.
    pub fn mul(&self, other: &QubitOperator) -> Result<QubitOperator> {
        self.check_register(other)?;
        let mut acc: HashMap<PauliString, Complex64> =
            HashMap::with_capacity(self.terms.len() * other.terms.len());
        for (ca, sa) in &self.terms {
            for (cb, sb) in &other.terms {
                let (phase, s) = sa.mul(sb);
                *acc.entry(s).or_insert(Complex64::new(0.0, 0.0)) += ca * cb * phase;
            }
        }
        let mut op = QubitOperator {
            num_qubits: self.num_qubits,
            terms: acc.into_iter().map(|(s, c)| (c, s)).collect(),
        };
        op.simplify();
        Ok(op)
    }

    /// Hermitian adjoint. Strings are Hermitian, so only coefficients
    /// conjugate.
    pub fn adjoint(&self) -> QubitOperator {
        QubitOperator {
            num_qubits: self.num_qubits,
            terms: self.terms.iter().map(|(c, s)| (c.conj(), *s)).collect(),
        }
    }

    /// True when every coefficient is real to within `tol` (Hermitian
    /// operator in the Pauli basis).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|(c, _)| c.im.abs() <= tol)
    }

    /// True when every coefficient is purely imaginary to within `tol`
    /// (anti-Hermitian operator).
    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|(c, _)| c.re.abs() <= tol)
    }

    pub fn terms_commute_pairwise(&self) -> bool {
        for i in 0..self.terms.len() {
            for j in i + 1..self.terms.len() {
                if !self.terms[i].1.commutes_with(&self.terms[j].1) {
                    return false;
                }
            }
        }
        true
    }

    /// Sum of absolute coefficients, excluding the identity term (which
    /// contributes no measurement variance).
    pub fn coefficient_l1_norm(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(_, s)| !s.is_identity())
            .map(|(c, _)| c.norm())
            .sum()
    }

    /// Terms ordered for product-formula evolution: descending |coefficient|,
    /// ties broken by (x_mask, z_mask) ascending.
    pub fn evolution_order(&self) -> Vec<(Complex64, PauliString)> {
        let mut terms = self.terms.clone();
        terms.sort_by(|(ca, sa), (cb, sb)| {
            cb.norm()
                .partial_cmp(&ca.norm())
                .expect("coefficient norms are finite")
                .then(sa.cmp(sb))
        });
        terms
    }

    fn check_register(&self, other: &QubitOperator) -> Result<()> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::InvalidOperator(format!(
                "register mismatch: {} vs {} qubits",
                self.num_qubits, other.num_qubits
            )));
        }
        Ok(())
    }

    fn simplify(&mut self) {
        let mut acc: HashMap<PauliString, Complex64> = HashMap::with_capacity(self.terms.len());
        for (c, s) in self.terms.drain(..) {
            *acc.entry(s).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        self.terms = acc
            .into_iter()
            .filter(|(_, c)| c.norm() > COEFF_PRUNE_THRESHOLD)
            .map(|(s, c)| (c, s))
            .collect();
        self.terms.sort_by(|(_, a), (_, b)| a.cmp(b));
    }
}

impl fmt::Display for QubitOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, s)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:+.6}{:+.6}i) {s}", c.re, c.im)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_qubit_products_match_pauli_table() {
        let x = PauliString::x(0);
        let y = PauliString::y(0);
        let z = PauliString::z(0);
        // XY = iZ, YX = -iZ, ZX = iY, XZ = -iY, YZ = iX, ZY = -iX.
        let cases = [
            (x, y, c(0.0, 1.0), z),
            (y, x, c(0.0, -1.0), z),
            (z, x, c(0.0, 1.0), y),
            (x, z, c(0.0, -1.0), y),
            (y, z, c(0.0, 1.0), x),
            (z, y, c(0.0, -1.0), x),
        ];
        for (a, b, phase, result) in cases {
            let (p, s) = a.mul(&b);
            assert_eq!(s, result);
            assert!((p - phase).norm() < 1e-15, "{a} * {b}");
        }
        for p in [x, y, z] {
            let (phase, s) = p.mul(&p);
            assert!(s.is_identity());
            assert!((phase - c(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn basis_phases_match_matrix_entries() {
        // Y|0> = i|1>, Y|1> = -i|0>, Z|1> = -|1>, X has unit entries.
        assert_eq!(PauliString::y(0).phase_for_basis(0), c(0.0, 1.0));
        assert_eq!(PauliString::y(0).phase_for_basis(1), c(0.0, -1.0));
        assert_eq!(PauliString::z(0).phase_for_basis(1), c(-1.0, 0.0));
        assert_eq!(PauliString::x(0).phase_for_basis(0), c(1.0, 0.0));
    }

    #[test]
    fn anticommuting_and_commuting_pairs() {
        let xz = PauliString::from_masks(0b01, 0b10); // X0 Z1
        let zx = PauliString::from_masks(0b10, 0b01); // Z0 X1
        assert!(xz.commutes_with(&zx));
        assert!(!PauliString::x(0).commutes_with(&PauliString::z(0)));
        assert!(PauliString::x(0).commutes_with(&PauliString::z(1)));
    }

    #[test]
    fn simplify_merges_and_prunes() {
        let s = PauliString::x(2);
        let op = QubitOperator::from_terms(
            3,
            vec![
                (c(0.5, 0.0), s),
                (c(0.5, 0.0), s),
                (c(1e-13, 0.0), PauliString::z(0)),
            ],
        )
        .unwrap();
        assert_eq!(op.num_terms(), 1);
        assert_eq!(op.coefficient(&s), c(1.0, 0.0));
    }

    #[test]
    fn product_of_sums_expands() {
        // (X0 + Z0)(X0 - Z0) = X0^2 - X0 Z0 + Z0 X0 - Z0^2 = iY0 - iY0 ... = 0
        // with the cross terms: -X0Z0 + Z0X0 = iY0 + iY0 = 2i Y0.
        let a = QubitOperator::from_terms(
            1,
            vec![(c(1.0, 0.0), PauliString::x(0)), (c(1.0, 0.0), PauliString::z(0))],
        )
        .unwrap();
        let b = QubitOperator::from_terms(
            1,
            vec![(c(1.0, 0.0), PauliString::x(0)), (c(-1.0, 0.0), PauliString::z(0))],
        )
        .unwrap();
        let prod = a.mul(&b).unwrap();
        // X0X0 - Z0Z0 cancel; -X0Z0 = +iY0, +Z0X0 = +iY0.
        assert_eq!(prod.num_terms(), 1);
        assert_eq!(prod.coefficient(&PauliString::y(0)), c(0.0, 2.0));
    }

    #[test]
    fn mixed_string_product_tracks_phase() {
        // (X0 Z1)(Z0 Z1): qubit 0 gives XZ = -iY, qubit 1 gives Z^2 = I.
        let a = PauliString::from_masks(0b01, 0b10);
        let b = PauliString::from_masks(0b00, 0b11);
        let (phase, s) = a.mul(&b);
        assert_eq!(phase, c(0.0, -1.0));
        assert_eq!(s, PauliString::y(0));
        // Reversed order conjugates the phase (the strings anticommute).
        let (phase_rev, s_rev) = b.mul(&a);
        assert_eq!(phase_rev, c(0.0, 1.0));
        assert_eq!(s_rev, s);
    }

    #[test]
    fn register_mismatch_is_rejected() {
        let a = QubitOperator::identity(2);
        let b = QubitOperator::identity(3);
        assert!(a.add(&b).is_err());
        assert!(QubitOperator::from_terms(1, vec![(c(1.0, 0.0), PauliString::x(5))]).is_err());
    }

    #[test]
    fn evolution_order_is_descending_with_bitmask_ties() {
        let op = QubitOperator::from_terms(
            2,
            vec![
                (c(0.1, 0.0), PauliString::z(1)),
                (c(-0.5, 0.0), PauliString::x(0)),
                (c(0.1, 0.0), PauliString::z(0)),
            ],
        )
        .unwrap();
        let order = op.evolution_order();
        assert_eq!(order[0].1, PauliString::x(0));
        // |0.1| tie: Z0 = (x=0,z=1) before Z1 = (x=0,z=2).
        assert_eq!(order[1].1, PauliString::z(0));
        assert_eq!(order[2].1, PauliString::z(1));
    }
}
