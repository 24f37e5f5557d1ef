//! End-to-end checks of the integral loader and exact diagonalization
//! against the shipped FCIDUMP fixtures. Reference energies were computed
//! with an independent restricted Hartree-Fock and dense CI implementation
//! at fixture-generation time.

use approx::assert_abs_diff_eq;
use pqe_core::fci::{fci_ground, fci_ground_with, reachable_determinants, EigMethod};
use pqe_core::molecule::{MolecularProblem, PoolKind};
use pqe_core::state::StateVector;

mod common;
use common::fixture;

struct Reference {
    name: &'static str,
    hf: f64,
    fci: f64,
}

const REFERENCES: &[Reference] = &[
    Reference { name: "h2_0.75", hf: -1.1247307453, fci: -1.1457416710 },
    Reference { name: "h4_0.75", hf: -2.1210298139, fci: -2.1628978849 },
    Reference { name: "h4_1.00", hf: -2.1124606973, fci: -2.1809665136 },
    Reference { name: "h4_1.50", hf: -1.8447884853, fci: -2.0126741246 },
    Reference { name: "h6_0.50", hf: -2.2243737753, fci: -2.2629940011 },
    Reference { name: "h6_1.00", hf: -3.1560009276, fci: -3.2576068311 },
    Reference { name: "h6_1.50", hf: -2.7733889094, fci: -3.0201980939 },
    Reference { name: "h6_2.00", hf: -2.3956447517, fci: -2.8740730696 },
    Reference { name: "beh2_1.00", hf: -15.6247373221, fci: -15.6506874575 },
    Reference { name: "beh2_2.00", hf: -15.5167041772, fci: -15.6086197212 },
    Reference { name: "h4h2_composite", hf: -3.2457605592, fci: -3.3086395559 },
];

#[test]
fn reference_energies_match_integrals() {
    for r in REFERENCES {
        let m = fixture(r.name);
        assert_abs_diff_eq!(m.reference_energy(), r.hf, epsilon = 5e-10);
    }
}

#[test]
fn qubit_hamiltonian_reproduces_reference_energy() {
    for name in ["h2_0.75", "h4_1.00", "h6_1.00", "beh2_1.00"] {
        let m = fixture(name);
        let h = m.jw_hamiltonian().unwrap();
        assert!(h.is_hermitian(1e-10), "{name}");
        let hf_state =
            StateVector::from_determinant(m.num_qubits(), m.reference()).unwrap();
        let e = hf_state.expectation(&h).unwrap();
        assert_abs_diff_eq!(e, m.reference_energy(), epsilon = 1e-9);
    }
}

#[test]
fn exact_ground_energies_match_pinned_values() {
    for r in REFERENCES {
        let m = fixture(r.name);
        let fci = fci_ground(&m).unwrap();
        assert_abs_diff_eq!(fci.energy(), r.fci, epsilon = 5e-10);
    }
}

#[test]
fn davidson_matches_dense_on_medium_sectors() {
    for name in ["h6_1.00", "beh2_1.00"] {
        let m = fixture(name);
        let dense = fci_ground_with(&m, EigMethod::Dense).unwrap();
        let dav = fci_ground_with(&m, EigMethod::Davidson).unwrap();
        assert_abs_diff_eq!(dense.energy(), dav.energy(), epsilon = 1e-8);
    }
}

#[test]
fn pool_sizes_and_order() {
    let m = fixture("h6_1.00");
    let sd = m.enumerate_pool(2, PoolKind::SinglesDoubles).unwrap();
    assert_eq!(sd.len(), 117);
    assert_eq!(m.enumerate_pool(6, PoolKind::AllParticleHole).unwrap().len(), 399);
    assert_eq!(
        m.enumerate_pool(2, PoolKind::GeneralizedSinglesDoubles).unwrap().len(),
        570
    );
    // Operators are listed by ascending excited-determinant label.
    let labels: Vec<u64> = sd
        .iter()
        .map(|exc| exc.apply(m.reference()).unwrap().1.bits())
        .collect();
    assert!(labels.windows(2).all(|w| w[0] < w[1]));

    let h4 = fixture("h4_1.00");
    let h4_sd = h4.enumerate_pool(2, PoolKind::SinglesDoubles).unwrap();
    assert_eq!(h4_sd.len(), 26); // 8 spin-conserving singles + 18 doubles
    assert_eq!(h4_sd.iter().filter(|e| e.rank() == 1).count(), 8);
}

#[test]
fn h6_reachable_block_has_200_determinants() {
    let m = fixture("h6_1.00");
    assert_eq!(reachable_determinants(&m).len(), 200);
}

#[test]
fn composite_energies_are_additive() {
    let composite = fixture("h4h2_composite");
    let h4 = fixture("h4_0.75");
    let h2 = fixture("h2_0.75");
    assert_abs_diff_eq!(
        composite.reference_energy(),
        h4.reference_energy() + h2.reference_energy(),
        epsilon = 1e-9
    );
    let e_composite = fci_ground(&composite).unwrap().energy();
    let e_parts = fci_ground(&h4).unwrap().energy() + fci_ground(&h2).unwrap().energy();
    assert_abs_diff_eq!(e_composite, e_parts, epsilon = 1e-8);
}
