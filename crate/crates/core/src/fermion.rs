//! Second-quantized determinants, particle-conserving excitation operators,
//! and their mapping to qubit operators.
//!
//! Spin orbitals are interleaved: spin orbital `2*p` is the alpha (up) spin
//! of spatial orbital `p` and `2*p + 1` is the beta (down) spin. A
//! [`Determinant`] stores occupations as a bitmask with bit `q` set when
//! spin orbital `q` is occupied; under the chosen encoding qubit `q` in
//! state `|1>` is occupied spin orbital `q`.
//!
//! A [`FermionExcitation`] with holes `i < j < ...` and particles
//! `a < b < ...` stands for the normal-ordered product
//! `a+_a a+_b ... a_j a_i`. Its anti-Hermitian generator (the operator
//! minus its adjoint) maps under the lowering-chain encoding
//! `a_q = 1/2 (X_q + iY_q) Z_{q-1} ... Z_0` to a sum of `2^(2n-1)` Pauli
//! strings with purely imaginary coefficients, where `n` is the rank.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliString, QubitOperator};

/// Spin label of a spin orbital.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Spin {
    Alpha,
    Beta,
}

/// Interleaved spin-orbital index for a spatial orbital and spin.
pub fn spin_orbital(spatial: usize, spin: Spin) -> usize {
    2 * spatial
        + match spin {
            Spin::Alpha => 0,
            Spin::Beta => 1,
        }
}

/// Spatial orbital of a spin-orbital index.
pub fn spatial_orbital(so: usize) -> usize {
    so / 2
}

/// Spin of a spin-orbital index.
pub fn spin_of(so: usize) -> Spin {
    if so % 2 == 0 {
        Spin::Alpha
    } else {
        Spin::Beta
    }
}

/// Occupation-number basis state over at most 64 spin orbitals.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Determinant(u64);

impl Determinant {
    pub fn empty() -> Self {
        Determinant(0)
    }

    pub fn from_bits(bits: u64) -> Self {
        Determinant(bits)
    }

    pub fn from_occupied(orbitals: &[usize]) -> Self {
        let mut bits = 0u64;
        for &p in orbitals {
            bits |= 1 << p;
        }
        Determinant(bits)
    }

    pub fn bits(&self) -> u64 {
        self.0
    }

    pub fn is_occupied(&self, so: usize) -> bool {
        self.0 >> so & 1 == 1
    }

    pub fn electron_count(&self) -> u32 {
        self.0.count_ones()
    }

    pub fn occupied(&self) -> Vec<usize> {
        (0..64).filter(|&q| self.is_occupied(q)).collect()
    }

    /// Twice the z-projection of total spin (alpha count minus beta count).
    pub fn sz_twice(&self) -> i32 {
        const ALPHA: u64 = 0x5555_5555_5555_5555;
        let na = (self.0 & ALPHA).count_ones() as i32;
        let nb = (self.0 & !ALPHA).count_ones() as i32;
        na - nb
    }

    fn parity_below(&self, so: usize) -> f64 {
        let below = self.0 & ((1u64 << so) - 1);
        if below.count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Apply the annihilation operator for spin orbital `so`. Returns the
    /// fermionic sign and the resulting determinant, or `None` if the
    /// orbital is empty.
    pub fn annihilate(&self, so: usize) -> Option<(f64, Determinant)> {
        if !self.is_occupied(so) {
            return None;
        }
        Some((self.parity_below(so), Determinant(self.0 & !(1 << so))))
    }

    /// Apply the creation operator for spin orbital `so`. Returns the
    /// fermionic sign and the resulting determinant, or `None` if the
    /// orbital is already occupied.
    pub fn create(&self, so: usize) -> Option<(f64, Determinant)> {
        if self.is_occupied(so) {
            return None;
        }
        Some((self.parity_below(so), Determinant(self.0 | 1 << so)))
    }
}

impl fmt::Display for Determinant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        let occ = self.occupied();
        for (i, q) in occ.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{q}")?;
        }
        write!(f, ">")
    }
}

/// Particle-conserving excitation `a+_a a+_b ... a_j a_i` with distinct
/// holes `i < j < ...` and distinct particles `a < b < ...`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FermionExcitation {
    holes: Vec<usize>,
    particles: Vec<usize>,
}

impl FermionExcitation {
    pub fn new(mut holes: Vec<usize>, mut particles: Vec<usize>) -> Result<Self> {
        if holes.is_empty() || holes.len() != particles.len() {
            return Err(Error::InvalidOperator(format!(
                "excitation needs equal nonzero hole/particle counts, got {}/{}",
                holes.len(),
                particles.len()
            )));
        }
        holes.sort_unstable();
        particles.sort_unstable();
        let distinct = |v: &[usize]| v.windows(2).all(|w| w[0] != w[1]);
        if !distinct(&holes) || !distinct(&particles) {
            return Err(Error::InvalidOperator(
                "excitation indices repeat within holes or particles".into(),
            ));
        }
        if holes.iter().any(|h| particles.contains(h)) {
            return Err(Error::InvalidOperator(
                "holes and particles must be disjoint index sets".into(),
            ));
        }
        Ok(FermionExcitation { holes, particles })
    }

    pub fn holes(&self) -> &[usize] {
        &self.holes
    }

    pub fn particles(&self) -> &[usize] {
        &self.particles
    }

    pub fn rank(&self) -> usize {
        self.holes.len()
    }

    /// Change in twice the spin z-projection effected by the excitation.
    pub fn sz_twice_change(&self) -> i32 {
        let w = |so: usize| if so % 2 == 0 { 1 } else { -1 };
        let p: i32 = self.particles.iter().map(|&q| w(q)).sum();
        let h: i32 = self.holes.iter().map(|&q| w(q)).sum();
        p - h
    }

    /// Largest spin-orbital index touched, plus one.
    pub fn min_qubits(&self) -> usize {
        1 + *self
            .holes
            .iter()
            .chain(self.particles.iter())
            .max()
            .expect("excitations are non-empty")
    }

    /// The adjoint excitation (holes and particles swapped).
    pub fn adjoint(&self) -> FermionExcitation {
        FermionExcitation {
            holes: self.particles.clone(),
            particles: self.holes.clone(),
        }
    }

    /// Apply the excitation to a determinant: annihilate the holes, create
    /// the particles, tracking the fermionic sign. `None` when a hole is
    /// empty or a particle occupied.
    pub fn apply(&self, det: Determinant) -> Option<(f64, Determinant)> {
        let mut sign = 1.0;
        let mut cur = det;
        // Rightmost operators act first: annihilations ascending, then
        // creations descending.
        for &h in &self.holes {
            let (s, next) = cur.annihilate(h)?;
            sign *= s;
            cur = next;
        }
        for &p in self.particles.iter().rev() {
            let (s, next) = cur.create(p)?;
            sign *= s;
            cur = next;
        }
        Some((sign, cur))
    }

    /// The excitation turning `from` into `to`: holes are occupied only in
    /// `from`, particles only in `to`. `None` when the electron counts
    /// differ or the determinants are equal.
    pub fn between(from: Determinant, to: Determinant) -> Option<FermionExcitation> {
        if from == to || from.electron_count() != to.electron_count() {
            return None;
        }
        let diff = from.bits() ^ to.bits();
        let holes: Vec<usize> = (0..64).filter(|&q| diff >> q & 1 == 1 && from.is_occupied(q)).collect();
        let particles: Vec<usize> = (0..64).filter(|&q| diff >> q & 1 == 1 && to.is_occupied(q)).collect();
        Some(FermionExcitation { holes, particles })
    }

    /// Qubit representation of the excitation operator itself.
    pub fn jw_operator(&self, num_qubits: usize) -> Result<QubitOperator> {
        if self.min_qubits() > num_qubits {
            return Err(Error::InvalidOperator(format!(
                "excitation {self} exceeds the {num_qubits}-qubit register"
            )));
        }
        // a+_a a+_b ... a_j a_i, multiplied left to right.
        let mut op = QubitOperator::identity(num_qubits);
        for &p in &self.particles {
            op = op.mul(&jw_raising(num_qubits, p))?;
        }
        for &h in self.holes.iter().rev() {
            op = op.mul(&jw_lowering(num_qubits, h))?;
        }
        Ok(op)
    }

    /// Qubit representation of the anti-Hermitian generator (operator minus
    /// adjoint). All coefficients are purely imaginary.
    pub fn jw_generator(&self, num_qubits: usize) -> Result<QubitOperator> {
        let tau = self.jw_operator(num_qubits)?;
        tau.sub(&tau.adjoint())
    }
}

fn jw_ladder(num_qubits: usize, so: usize, raise: bool) -> QubitOperator {
    let chain = (1u64 << so) - 1;
    let im = if raise { -0.5 } else { 0.5 };
    QubitOperator::from_terms(
        num_qubits,
        vec![
            (
                Complex64::new(0.5, 0.0),
                PauliString::from_masks(1 << so, chain),
            ),
            (
                Complex64::new(0.0, im),
                PauliString::from_masks(1 << so, chain | 1 << so),
            ),
        ],
    )
    .expect("ladder strings fit the register")
}

/// Qubit encoding of the annihilation operator for spin orbital `so`.
pub fn jw_lowering(num_qubits: usize, so: usize) -> QubitOperator {
    jw_ladder(num_qubits, so, false)
}

/// Qubit encoding of the creation operator for spin orbital `so`.
pub fn jw_raising(num_qubits: usize, so: usize) -> QubitOperator {
    jw_ladder(num_qubits, so, true)
}

impl PartialOrd for FermionExcitation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FermionExcitation {
    /// Canonical pool order: by rank, then holes, then particles.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank()
            .cmp(&other.rank())
            .then_with(|| self.holes.cmp(&other.holes))
            .then_with(|| self.particles.cmp(&other.particles))
    }
}

impl fmt::Display for FermionExcitation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[usize]| {
            v.iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "{} -> {}", list(&self.holes), list(&self.particles))
    }
}
