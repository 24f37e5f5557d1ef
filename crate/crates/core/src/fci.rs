//! Exact diagonalization in a fixed particle-number and spin-projection
//! sector.
//!
//! Matrix elements between determinants follow the usual rules for
//! one- and two-body operators over orthonormal spin orbitals, with
//! fermionic phases delegated to the determinant algebra in [`crate::fermion`].
//! Small sectors are diagonalized densely; larger ones fall back to a
//! single-root Davidson iteration with on-the-fly matrix-vector products.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fermion::{Determinant, FermionExcitation};
use crate::molecule::MolecularProblem;
use crate::state::StateVector;

/// Largest determinant-space dimension the dense eigensolver will accept.
pub const DENSE_MAX_DIMENSION: usize = 5000;

/// How to diagonalize the sector Hamiltonian. There is no automatic
/// fallback: above [`DENSE_MAX_DIMENSION`] the caller must opt into the
/// iterative solver explicitly.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EigMethod {
    Dense,
    Davidson,
}

/// Ground state of one symmetry sector.
#[derive(Clone, Debug)]
pub struct FciState {
    energy: f64,
    determinants: Vec<Determinant>,
    coefficients: Vec<f64>,
}

impl FciState {
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn determinants(&self) -> &[Determinant] {
        &self.determinants
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Embed the eigenvector into the full qubit register.
    pub fn state_vector(&self, num_qubits: usize) -> Result<StateVector> {
        let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); 1 << num_qubits];
        for (det, c) in self.determinants.iter().zip(&self.coefficients) {
            amps[det.bits() as usize] = num_complex::Complex64::new(*c, 0.0);
        }
        StateVector::from_amplitudes(num_qubits, amps)
    }
}

/// All determinants with the problem's particle numbers, ascending by bit
/// pattern.
pub fn enumerate_sector(problem: &MolecularProblem) -> Vec<Determinant> {
    let norb = problem.norb();
    let alpha_sets = orbital_subsets(norb, problem.num_alpha());
    let beta_sets = orbital_subsets(norb, problem.num_beta());
    let mut dets = Vec::with_capacity(alpha_sets.len() * beta_sets.len());
    for a in &alpha_sets {
        for b in &beta_sets {
            // Interleave: alpha in even bits, beta in odd bits.
            let mut bits = 0u64;
            for p in 0..norb {
                if a >> p & 1 == 1 {
                    bits |= 1 << (2 * p);
                }
                if b >> p & 1 == 1 {
                    bits |= 1 << (2 * p + 1);
                }
            }
            dets.push(Determinant::from_bits(bits));
        }
    }
    dets.sort();
    dets
}

fn orbital_subsets(norb: usize, count: usize) -> Vec<u64> {
    let mut out = Vec::new();
    for bits in 0..(1u64 << norb) {
        if bits.count_ones() as usize == count {
            out.push(bits);
        }
    }
    out
}

/// Hamiltonian matrix element between two determinants of the same sector.
pub fn matrix_element(problem: &MolecularProblem, bra: Determinant, ket: Determinant) -> f64 {
    let diff = (bra.bits() ^ ket.bits()).count_ones();
    match diff {
        0 => {
            let occ = ket.occupied();
            let mut e = problem.core_energy();
            for &i in &occ {
                e += problem.h_spin(i, i);
            }
            for &i in &occ {
                for &j in &occ {
                    e += 0.5 * problem.anti(i, j, i, j);
                }
            }
            e
        }
        2 => {
            let exc = FermionExcitation::between(ket, bra).expect("single excitation");
            let (sign, _) = exc.apply(ket).expect("hole occupied, particle empty");
            let h = exc.holes()[0];
            let p = exc.particles()[0];
            let mut v = problem.h_spin(p, h);
            for i in ket.occupied() {
                if i != h {
                    v += problem.anti(p, i, h, i);
                }
            }
            sign * v
        }
        4 => {
            let exc = FermionExcitation::between(ket, bra).expect("double excitation");
            let (sign, _) = exc.apply(ket).expect("holes occupied, particles empty");
            let (h1, h2) = (exc.holes()[0], exc.holes()[1]);
            let (p1, p2) = (exc.particles()[0], exc.particles()[1]);
            sign * problem.anti(p1, p2, h1, h2)
        }
        _ => 0.0,
    }
}

/// Determinants reachable from the reference through chains of nonzero
/// Hamiltonian matrix elements (the symmetry block containing the ground
/// state), ascending by bit pattern.
pub fn reachable_determinants(problem: &MolecularProblem) -> Vec<Determinant> {
    let sector = enumerate_sector(problem);
    let index: HashMap<u64, usize> = sector
        .iter()
        .enumerate()
        .map(|(i, d)| (d.bits(), i))
        .collect();
    let start = index[&problem.reference().bits()];
    let mut seen = vec![false; sector.len()];
    seen[start] = true;
    let mut frontier = vec![start];
    while let Some(i) = frontier.pop() {
        let from = sector[i];
        for target in connected_determinants(problem, from) {
            let j = index[&target.bits()];
            if !seen[j] && matrix_element(problem, target, from).abs() > 1e-10 {
                seen[j] = true;
                frontier.push(j);
            }
        }
    }
    sector
        .into_iter()
        .zip(seen)
        .filter_map(|(d, s)| s.then_some(d))
        .collect()
}

/// Single and double excitations of `det` within its spin sector.
fn connected_determinants(problem: &MolecularProblem, det: Determinant) -> Vec<Determinant> {
    let nso = problem.num_spin_orbitals();
    let occ = det.occupied();
    let virt: Vec<usize> = (0..nso).filter(|&p| !det.is_occupied(p)).collect();
    let mut out = Vec::new();
    for (hi, &h) in occ.iter().enumerate() {
        for (pi, &p) in virt.iter().enumerate() {
            if h % 2 == p % 2 {
                let single = FermionExcitation::new(vec![h], vec![p]).expect("disjoint");
                out.push(single.apply(det).expect("valid single").1);
            }
            for &h2 in &occ[hi + 1..] {
                for &p2 in &virt[pi + 1..] {
                    if (h % 2 + h2 % 2) != (p % 2 + p2 % 2) {
                        continue;
                    }
                    let double =
                        FermionExcitation::new(vec![h, h2], vec![p, p2]).expect("disjoint");
                    out.push(double.apply(det).expect("valid double").1);
                }
            }
        }
    }
    out
}

/// Ground-state energy and eigenvector of the problem's sector, densely.
pub fn fci_ground(problem: &MolecularProblem) -> Result<FciState> {
    fci_ground_with(problem, EigMethod::Dense)
}

/// Ground state with an explicit diagonalization method.
pub fn fci_ground_with(problem: &MolecularProblem, method: EigMethod) -> Result<FciState> {
    fci_solve_with(problem, 1, method).map(|(_, state)| state)
}

/// The `roots` lowest eigenvalues of the sector Hamiltonian (ascending) and
/// the ground eigenvector, using the dense solver.
pub fn fci_solve(problem: &MolecularProblem, roots: usize) -> Result<(Vec<f64>, FciState)> {
    fci_solve_with(problem, roots, EigMethod::Dense)
}

/// Lowest eigenvalues and ground eigenvector with an explicit method.
pub fn fci_solve_with(
    problem: &MolecularProblem,
    roots: usize,
    method: EigMethod,
) -> Result<(Vec<f64>, FciState)> {
    let dets = enumerate_sector(problem);
    if dets.is_empty() {
        return Err(Error::Domain("empty determinant sector".into()));
    }
    if roots == 0 || roots > dets.len() {
        return Err(Error::Domain(format!(
            "requested {roots} roots of a {}-dimensional sector",
            dets.len()
        )));
    }
    if method == EigMethod::Dense && dets.len() > DENSE_MAX_DIMENSION {
        return Err(Error::Domain(format!(
            "determinant space has dimension {} > {DENSE_MAX_DIMENSION}; \
             select the iterative eigensolver for sectors this large",
            dets.len()
        )));
    }
    let (energies, mut coefficients) = match method {
        EigMethod::Dense => dense_roots(problem, &dets, roots),
        EigMethod::Davidson => davidson_roots(problem, &dets, roots)?,
    };
    // Deterministic global sign: largest component positive.
    let (imax, _) = coefficients
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.abs().partial_cmp(&b.abs()).expect("finite"))
        .expect("non-empty eigenvector");
    if coefficients[imax] < 0.0 {
        for c in &mut coefficients {
            *c = -*c;
        }
    }
    let state = FciState {
        energy: energies[0],
        determinants: dets,
        coefficients,
    };
    verify_eigenpair(problem, &state)?;
    Ok((energies, state))
}

/// Residual check on the returned ground pair: ||Hc - Ec|| must be tiny.
fn verify_eigenpair(problem: &MolecularProblem, state: &FciState) -> Result<()> {
    let op = SectorOperator::new(problem, &state.determinants);
    let hc = op.apply(&state.coefficients);
    let resid: f64 = hc
        .iter()
        .zip(&state.coefficients)
        .map(|(h, c)| (h - state.energy * c).powi(2))
        .sum::<f64>()
        .sqrt();
    if resid >= 1e-9 {
        return Err(Error::Domain(format!(
            "eigensolver returned an unconverged ground pair (residual {resid:.3e})"
        )));
    }
    Ok(())
}

/// Sector Hamiltonian as a matrix-free operator over the two-body
/// connectivity graph.
struct SectorOperator<'a> {
    problem: &'a MolecularProblem,
    dets: &'a [Determinant],
    index: HashMap<u64, usize>,
    diag: Vec<f64>,
}

impl<'a> SectorOperator<'a> {
    fn new(problem: &'a MolecularProblem, dets: &'a [Determinant]) -> Self {
        let index = dets
            .iter()
            .enumerate()
            .map(|(i, d)| (d.bits(), i))
            .collect();
        let diag = dets
            .iter()
            .map(|&d| matrix_element(problem, d, d))
            .collect();
        SectorOperator { problem, dets, index, diag }
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dets.len()];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            out[i] += self.diag[i] * vi;
            for target in connected_determinants(self.problem, self.dets[i]) {
                let j = self.index[&target.bits()];
                let hij = matrix_element(self.problem, target, self.dets[i]);
                if hij != 0.0 {
                    out[j] += hij * vi;
                }
            }
        }
        out
    }
}

fn dense_roots(
    problem: &MolecularProblem,
    dets: &[Determinant],
    roots: usize,
) -> (Vec<f64>, Vec<f64>) {
    let dim = dets.len();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v = matrix_element(problem, dets[i], dets[j]);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("finite")
    });
    let energies = order[..roots].iter().map(|&i| eig.eigenvalues[i]).collect();
    let ground = eig.eigenvectors.column(order[0]).iter().copied().collect();
    (energies, ground)
}

fn davidson_roots(
    problem: &MolecularProblem,
    dets: &[Determinant],
    roots: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let dim = dets.len();
    let op = SectorOperator::new(problem, dets);
    let matvec = |v: &DVector<f64>| -> DVector<f64> { DVector::from_vec(op.apply(v.as_slice())) };

    // Determinants ordered by diagonal energy; unit vectors on these seed
    // the search for successive roots.
    let mut by_diag: Vec<usize> = (0..dim).collect();
    by_diag.sort_by(|&a, &b| op.diag[a].partial_cmp(&op.diag[b]).expect("finite"));

    let mut locked: Vec<(f64, DVector<f64>)> = Vec::new();
    for _ in 0..roots {
        let (theta, x) = davidson_one_root(&matvec, &op.diag, &by_diag, &locked)?;
        locked.push((theta, x));
    }
    locked.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
    let energies = locked.iter().map(|(e, _)| *e).collect();
    let ground = locked[0].1.iter().copied().collect();
    Ok((energies, ground))
}

/// Lowest eigenpair in the orthogonal complement of the locked vectors.
fn davidson_one_root(
    matvec: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    diag: &[f64],
    by_diag: &[usize],
    locked: &[(f64, DVector<f64>)],
) -> Result<(f64, DVector<f64>)> {
    let dim = diag.len();
    const MAX_SUBSPACE: usize = 40;
    const MAX_ITERS: usize = 300;
    const TOL: f64 = 5e-10;

    let project_out = |v: &mut DVector<f64>, basis: &[DVector<f64>]| {
        for _ in 0..2 {
            for (_, l) in locked {
                let overlap = l.dot(v);
                *v -= l * overlap;
            }
            for b in basis {
                let overlap = b.dot(v);
                *v -= b * overlap;
            }
        }
    };

    // Seed with the lowest-diagonal unit vector that survives projection
    // against the locked roots.
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut sigma: Vec<DVector<f64>> = Vec::new();
    let mut guess = DVector::<f64>::zeros(dim);
    for &i in by_diag {
        let mut candidate = DVector::<f64>::zeros(dim);
        candidate[i] = 1.0;
        project_out(&mut candidate, &basis);
        if candidate.norm() > 1e-6 {
            guess = candidate;
            break;
        }
    }

    for _ in 0..MAX_ITERS {
        project_out(&mut guess, &basis);
        let norm = guess.norm();
        if norm < 1e-12 {
            return Err(Error::Domain(
                "eigensolver stalled: new direction lies in the subspace".into(),
            ));
        }
        guess /= norm;
        sigma.push(matvec(&guess));
        basis.push(guess.clone());

        let k = basis.len();
        let mut small = DMatrix::<f64>::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                small[(a, b)] = basis[a].dot(&sigma[b]);
            }
        }
        // Symmetrize away round-off.
        let small = (&small + small.transpose()) * 0.5;
        let eig = small.symmetric_eigen();
        let (imin, theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.partial_cmp(b).expect("finite"))
            .map(|(i, &e)| (i, e))
            .expect("non-empty subspace");
        let y = eig.eigenvectors.column(imin);

        let mut x = DVector::<f64>::zeros(dim);
        let mut hx = DVector::<f64>::zeros(dim);
        for a in 0..k {
            x += &basis[a] * y[a];
            hx += &sigma[a] * y[a];
        }
        let mut resid = &hx - &x * theta;
        // Components along locked roots are converged round-off; drop them
        // so they cannot stall the complement search.
        for (_, l) in locked {
            let overlap = l.dot(&resid);
            resid -= l * overlap;
        }
        if resid.norm() < TOL {
            return Ok((theta, x));
        }

        if k >= MAX_SUBSPACE {
            // Restart from the current best estimate.
            basis.clear();
            sigma.clear();
            guess = x;
            continue;
        }

        // Diagonal preconditioner.
        guess = DVector::from_iterator(
            dim,
            resid.iter().enumerate().map(|(i, &r)| {
                let denom = theta - diag[i];
                if denom.abs() > 1e-8 {
                    r / denom
                } else {
                    r / 1e-8_f64.copysign(denom)
                }
            }),
        );
    }
    Err(Error::Domain(format!(
        "eigensolver did not converge in {MAX_ITERS} iterations"
    )))
}
