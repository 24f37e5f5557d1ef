//! Dense state-vector simulation of qubit registers.
//!
//! Amplitudes are stored for all `2^n` computational basis states, indexed
//! so that bit `q` of the basis label is qubit `q`. The register size is
//! capped at [`MAX_QUBITS`] to keep memory use predictable.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::fermion::Determinant;
use crate::pauli::{PauliString, QubitOperator};

/// Largest register the dense engine will allocate (16 MiB of amplitudes).
pub const MAX_QUBITS: usize = 20;

/// Dense complex amplitude vector over a fixed-size qubit register.
#[derive(Clone, Debug)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros computational basis state.
    pub fn zero_state(num_qubits: usize) -> Result<Self> {
        Self::from_basis(num_qubits, 0)
    }

    /// A single computational basis state.
    pub fn from_basis(num_qubits: usize, basis: u64) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits { qubits: num_qubits, max: MAX_QUBITS });
        }
        if basis >> num_qubits != 0 {
            return Err(Error::Domain(format!(
                "basis state {basis} outside a {num_qubits}-qubit register"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[basis as usize] = Complex64::new(1.0, 0.0);
        Ok(StateVector { num_qubits, amps })
    }

    /// Basis state for a determinant's occupation bits.
    pub fn from_determinant(num_qubits: usize, det: Determinant) -> Result<Self> {
        Self::from_basis(num_qubits, det.bits())
    }

    /// Wrap an explicit amplitude vector (length must be `2^num_qubits`).
    pub fn from_amplitudes(num_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits { qubits: num_qubits, max: MAX_QUBITS });
        }
        if amps.len() != 1 << num_qubits {
            return Err(Error::Domain(format!(
                "amplitude vector length {} does not match {num_qubits} qubits",
                amps.len()
            )));
        }
        Ok(StateVector { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, basis: u64) -> Complex64 {
        self.amps[basis as usize]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Inner product `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        debug_assert_eq!(self.num_qubits, other.num_qubits);
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// In-place application of a single Pauli string (a permutation with
    /// phases).
    pub fn apply_pauli(&mut self, string: &PauliString) {
        let x = string.x_mask();
        if x == 0 {
            for (n, amp) in self.amps.iter_mut().enumerate() {
                *amp *= string.phase_for_basis(n as u64);
            }
            return;
        }
        for n in 0..self.amps.len() {
            let m = n ^ x as usize;
            if n < m {
                // P|n> lands at m and vice versa.
                let pn = string.phase_for_basis(n as u64);
                let pm = string.phase_for_basis(m as u64);
                let an = self.amps[n];
                let am = self.amps[m];
                self.amps[n] = pm * am;
                self.amps[m] = pn * an;
            }
        }
    }

    /// In-place application of `exp(i * phi * P)` for a Pauli string `P`:
    /// `cos(phi) + i sin(phi) P` on each conjugate pair of basis states.
    pub fn apply_exp_pauli(&mut self, phi: f64, string: &PauliString) {
        let (cos, sin) = (phi.cos(), phi.sin());
        let isin = Complex64::new(0.0, sin);
        let x = string.x_mask();
        if x == 0 {
            for (n, amp) in self.amps.iter_mut().enumerate() {
                // Diagonal strings have real basis phases.
                *amp *= Complex64::new(cos, 0.0) + isin * string.phase_for_basis(n as u64);
            }
            return;
        }
        for n in 0..self.amps.len() {
            let m = n ^ x as usize;
            if n < m {
                let pn = string.phase_for_basis(n as u64);
                let pm = string.phase_for_basis(m as u64);
                let an = self.amps[n];
                let am = self.amps[m];
                self.amps[n] = cos * an + isin * pm * am;
                self.amps[m] = cos * am + isin * pn * an;
            }
        }
    }

    /// In-place application of `exp(t * G)` for an anti-Hermitian generator
    /// `G` whose Pauli terms commute pairwise, so the factorization into
    /// string exponentials is exact. Particle-conserving excitation
    /// generators have this property.
    pub fn apply_exp_generator(&mut self, t: f64, generator: &QubitOperator) -> Result<()> {
        self.check_register(generator)?;
        if !generator.is_anti_hermitian(1e-12) {
            return Err(Error::InvalidOperator(
                "generator exponential requires purely imaginary term coefficients".into(),
            ));
        }
        if !generator.terms_commute_pairwise() {
            return Err(Error::InvalidOperator(
                "generator terms do not commute pairwise; the factored exponential \
                 would not equal exp(tG)"
                    .into(),
            ));
        }
        for (c, s) in generator.terms() {
            // c = i*g with g real, so exp(t c P) = exp(i (t g) P).
            self.apply_exp_pauli(t * c.im, s);
        }
        Ok(())
    }

    /// `op|self>` as a new vector.
    pub fn apply_operator(&self, op: &QubitOperator) -> Result<StateVector> {
        self.check_register(op)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (c, s) in op.terms() {
            let x = s.x_mask() as usize;
            for (n, amp) in self.amps.iter().enumerate() {
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                out[n ^ x] += c * s.phase_for_basis(n as u64) * amp;
            }
        }
        Ok(StateVector { num_qubits: self.num_qubits, amps: out })
    }

    /// `<self|op|self>` for a Hermitian operator. The result is real by
    /// construction; the residual imaginary part (round-off) is checked
    /// against 1e-10 and dropped.
    pub fn expectation(&self, op: &QubitOperator) -> Result<f64> {
        self.check_register(op)?;
        if !op.is_hermitian(1e-12) {
            return Err(Error::InvalidOperator(
                "expectation value requires a Hermitian operator".into(),
            ));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, s) in op.terms() {
            let x = s.x_mask() as usize;
            let mut term = Complex64::new(0.0, 0.0);
            for (n, amp) in self.amps.iter().enumerate() {
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                term += self.amps[n ^ x].conj() * s.phase_for_basis(n as u64) * amp;
            }
            acc += c * term;
        }
        if acc.im.abs() >= 1e-10 {
            return Err(Error::Domain(format!(
                "expectation of a Hermitian operator came out complex \
                 (imaginary part {:.3e})",
                acc.im
            )));
        }
        Ok(acc.re)
    }

    /// First-order product-formula evolution `exp(-i * dt * H)` for a
    /// Hermitian `H`, split into `steps` repetitions of one string
    /// exponential per term. Terms are ordered by descending coefficient
    /// magnitude (ties by ascending bitmask) with the largest term acting
    /// last on the state in each repetition. The identity term contributes
    /// an exact global phase.
    pub fn apply_trotter_evolution(
        &mut self,
        hamiltonian: &QubitOperator,
        dt: f64,
        steps: usize,
    ) -> Result<()> {
        self.check_register(hamiltonian)?;
        if !hamiltonian.is_hermitian(1e-12) {
            return Err(Error::InvalidOperator(
                "product-formula evolution requires real term coefficients".into(),
            ));
        }
        if steps == 0 {
            return Err(Error::Domain(
                "product-formula evolution needs at least one step".into(),
            ));
        }
        let ordered = hamiltonian.evolution_order();
        let slice = -dt / steps as f64;
        for _ in 0..steps {
            for (c, s) in ordered.iter().rev() {
                if s.is_identity() {
                    let phase = Complex64::from_polar(1.0, slice * c.re);
                    for amp in &mut self.amps {
                        *amp *= phase;
                    }
                } else {
                    self.apply_exp_pauli(slice * c.re, s);
                }
            }
        }
        Ok(())
    }

    /// Draw `shots` computational basis outcomes from the Born distribution
    /// using a counter-based generator seeded by `seed`, so identical calls
    /// reproduce identical counts. Returns outcome counts keyed by basis
    /// label; the counts sum to `shots`.
    pub fn sample_basis(&self, shots: u64, seed: u64) -> Result<BTreeMap<u64, u64>> {
        if shots == 0 {
            return Err(Error::Domain("sampling requires at least one shot".into()));
        }
        let mut cdf = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let total = acc;
        if total < 1e-24 {
            return Err(Error::Domain("cannot sample a zero-norm state".into()));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            let u: f64 = rng.random::<f64>() * total;
            let idx = cdf.partition_point(|&c| c <= u).min(self.amps.len() - 1);
            *counts.entry(idx as u64).or_insert(0) += 1;
        }
        Ok(counts)
    }

    fn check_register(&self, op: &QubitOperator) -> Result<()> {
        if op.num_qubits() != self.num_qubits {
            return Err(Error::InvalidOperator(format!(
                "operator register {} does not match state register {}",
                op.num_qubits(),
                self.num_qubits
            )));
        }
        Ok(())
    }
}
