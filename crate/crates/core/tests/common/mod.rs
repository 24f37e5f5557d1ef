//! Shared helpers for integration tests: fixture loading and a dense
//! linear-algebra oracle built independently of the library's own operator
//! algebra.

#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use num_complex::Complex64;
use pqe_core::molecule::MolecularProblem;

/// Absolute path of a fixture FCIDUMP by short name.
pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.fcidump"))
}

/// Load a fixture by short name.
pub fn fixture(name: &str) -> MolecularProblem {
    MolecularProblem::from_fcidump_file(fixture_path(name))
        .unwrap_or_else(|e| panic!("loading fixture {name}: {e}"))
}

pub type CMatrix = DMatrix<Complex64>;

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity2() -> CMatrix {
    CMatrix::identity(2, 2)
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// Lowering matrix in the occupation convention `|1> = occupied`:
/// maps `|1>` to `|0>`.
fn sigma_minus() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
}

/// Dense annihilation operator for spin orbital `p` on `n` qubits, built
/// from first principles: qubit 0 is the rightmost Kronecker factor, and
/// the fermionic phase string acts on qubits below `p`.
pub fn dense_annihilation(n: usize, p: usize) -> CMatrix {
    let mut op = CMatrix::identity(1, 1);
    // Qubit n-1 is the leftmost factor; build from the top down.
    for q in (0..n).rev() {
        let factor = if q == p {
            sigma_minus()
        } else if q < p {
            sigma_z()
        } else {
            identity2()
        };
        op = kron(&op, &factor);
    }
    op
}

/// Dense creation operator, the adjoint of [`dense_annihilation`].
pub fn dense_creation(n: usize, p: usize) -> CMatrix {
    dense_annihilation(n, p).adjoint()
}

/// Dense matrix of a qubit operator, assembled term by term from 2x2
/// Pauli matrices (independent of the library's mask-based application).
pub fn dense_operator(op: &pqe_core::pauli::QubitOperator) -> CMatrix {
    let n = op.num_qubits();
    let dim = 1 << n;
    let sx = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let sy = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
    let mut out = CMatrix::zeros(dim, dim);
    for (coeff, s) in op.terms() {
        let mut term = CMatrix::identity(1, 1);
        for q in (0..n).rev() {
            let x = s.x_mask() >> q & 1 == 1;
            let z = s.z_mask() >> q & 1 == 1;
            let factor = match (x, z) {
                (false, false) => identity2(),
                (true, false) => sx.clone(),
                (false, true) => sigma_z(),
                (true, true) => sy.clone(),
            };
            term = kron(&term, &factor);
        }
        out += term * *coeff;
    }
    out
}

/// Dense matrix exponential by scaling and squaring with a Taylor series.
pub fn dense_expm(a: &CMatrix) -> CMatrix {
    let norm = a
        .iter()
        .map(|x| x.norm())
        .fold(0.0f64, f64::max)
        * a.nrows() as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / Complex64::new(2f64.powi(squarings as i32), 0.0);
    let dim = a.nrows();
    let mut result = CMatrix::identity(dim, dim);
    let mut term = CMatrix::identity(dim, dim);
    for k in 1..=30 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        result += &term;
        if term.iter().map(|x| x.norm()).fold(0.0f64, f64::max) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Column vector of a state's amplitudes.
pub fn dense_state(sv: &pqe_core::state::StateVector) -> CMatrix {
    CMatrix::from_iterator(sv.amplitudes().len(), 1, sv.amplitudes().iter().copied())
}
