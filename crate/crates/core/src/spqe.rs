//! Adaptive operator selection driven by a short time evolution.
//!
//! A brief evolution of the current trial state under the Hamiltonian,
//! viewed from the trial state's own frame, piles amplitude onto exactly
//! the determinants whose projections are still nonzero: to first order
//! in the step length the amplitude on determinant mu is `i dt r_mu`.
//! Measuring that state in the computational basis therefore estimates
//! all squared residuals at once, without iterating over operators. The
//! macro-loop alternates such importance measurements (which grow the
//! operator set) with projective micro-solves of the amplitudes, until a
//! measurement finds nothing above the selection threshold.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::ansatz::DuccAnsatz;
use crate::error::{Error, Result};
use crate::fci::{enumerate_sector, fci_solve_with, EigMethod};
use crate::fermion::{Determinant, FermionExcitation};
use crate::molecule::MolecularProblem;
use crate::pauli::QubitOperator;
use crate::pqe::{run_pqe, PqeConfig};
use crate::state::StateVector;

/// Sector dimension up to which the exact reference energy for the trace
/// is obtained by dense diagonalization; larger sectors use the iterative
/// solver.
pub(crate) const DENSE_TRACE_LIMIT: usize = 5000;

/// How squared residuals are estimated from the evolved state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    /// Read probabilities directly from the state amplitudes (an
    /// idealized, noise-free measurement).
    Exact,
    /// Estimate probabilities from a fixed number of basis-measurement
    /// shots per macro-iteration.
    Sampled { shots: u64 },
    /// Convergence-test protocol: the shot count is tied to the threshold
    /// (see [`fixed_shot_mode`]), every measured non-reference determinant
    /// is appended, and convergence is declared only when every shot
    /// returns the reference.
    FixedShots,
}

/// Knobs for the macro-loop.
#[derive(Debug, Clone)]
pub struct SpqeConfig {
    /// Cumulative selection threshold: operators are discarded, smallest
    /// squared residual first, for as long as the discarded total stays
    /// within `omega^2`.
    pub omega: f64,
    /// Evolution time step, in atomic units.
    pub dt: f64,
    /// First-order product-formula steps used for the evolution.
    pub trotter_steps: usize,
    /// How squared residuals are estimated.
    pub mode: SelectionMode,
    /// Settings for the inner amplitude solves.
    pub micro: PqeConfig,
    /// Hard cap on macro-iterations; hitting it flags non-convergence.
    pub max_macro: usize,
    /// Seed for the measurement stream (sampled modes only).
    pub rng_seed: u64,
}

impl Default for SpqeConfig {
    fn default() -> Self {
        SpqeConfig {
            omega: 1e-1,
            dt: 0.05,
            trotter_steps: 1,
            mode: SelectionMode::Exact,
            micro: PqeConfig::default(),
            max_macro: 50,
            rng_seed: 0,
        }
    }
}

impl SpqeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::Config(format!(
                "selection threshold omega must be positive, got {}",
                self.omega
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!(
                "evolution step dt must be positive, got {}",
                self.dt
            )));
        }
        if self.trotter_steps == 0 {
            return Err(Error::Config(
                "trotter_steps must be at least one".into(),
            ));
        }
        if self.max_macro == 0 {
            return Err(Error::Config(
                "max_macro must allow at least one iteration".into(),
            ));
        }
        if let SelectionMode::Sampled { shots } = self.mode {
            if shots == 0 {
                return Err(Error::Config(
                    "sampled selection needs at least one shot".into(),
                ));
            }
        }
        self.micro.validate()
    }
}

/// Shot counts per measured determinant from one macro-iteration.
#[derive(Debug, Clone)]
pub struct SelectionTally {
    counts: BTreeMap<u64, u64>,
    total: u64,
}

impl SelectionTally {
    /// Wrap raw counts; the per-determinant counts must sum to the total.
    pub fn new(counts: BTreeMap<u64, u64>, total: u64) -> Result<Self> {
        let sum: u64 = counts.values().sum();
        if sum != total {
            return Err(Error::Domain(format!(
                "tally counts sum to {sum} but claim {total} shots"
            )));
        }
        Ok(SelectionTally { counts, total })
    }

    /// Measure the state `shots` times in the computational basis.
    pub fn from_state(state: &StateVector, shots: u64, seed: u64) -> Result<Self> {
        let counts = state.sample_basis(shots, seed)?;
        Ok(SelectionTally { counts, total: shots })
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Probability estimates `N_mu / M` per determinant.
    pub fn weights(&self) -> Vec<(u64, f64)> {
        let m = self.total as f64;
        self.counts
            .iter()
            .map(|(&det, &n)| (det, n as f64 / m))
            .collect()
    }
}

/// Probabilities read directly from the state, skipping numerically dead
/// amplitudes.
pub fn exact_weights(state: &StateVector) -> Vec<(u64, f64)> {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter_map(|(basis, amp)| {
            let p = amp.norm_sqr();
            (p > 1e-28).then_some((basis as u64, p))
        })
        .collect()
}

/// Evolve the trial state briefly and return to its own frame:
/// `U^dag exp(+i dt H) U |Phi_0>`. To first order in `dt` the amplitude
/// on excited determinant mu is `i dt r_mu`, so the state's measurement
/// statistics encode the full residual vector.
pub fn build_residual_state(
    ansatz: &DuccAnsatz,
    hamiltonian: &QubitOperator,
    dt: f64,
    trotter_steps: usize,
) -> Result<StateVector> {
    let mut state = ansatz.prepare_state()?;
    // The engine's evolution implements exp(-i a H); the residual state
    // needs the opposite phase direction.
    state.apply_trotter_evolution(hamiltonian, -dt, trotter_steps)?;
    ansatz.apply_adjoint(&mut state)?;
    Ok(state)
}

/// The excitation that maps `reference` onto `det`, when one exists.
///
/// Every particle-number-conserving determinant pair defines exactly one
/// such operator: annihilate the occupied orbitals missing from `det`,
/// create the ones new in it.
pub fn excitation_between(
    reference: Determinant,
    det: Determinant,
) -> Option<FermionExcitation> {
    if reference == det {
        return None;
    }
    let holes = bits_of(reference.bits() & !det.bits());
    let particles = bits_of(det.bits() & !reference.bits());
    if holes.is_empty() || holes.len() != particles.len() {
        return None;
    }
    FermionExcitation::new(holes, particles).ok()
}

fn bits_of(mut mask: u64) -> Vec<usize> {
    let mut out = Vec::new();
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        out.push(i);
        mask &= mask - 1;
    }
    out
}

/// Pick which operators to append given squared-residual estimates.
///
/// The candidates (reference and already-present operators excluded) are
/// sorted by ascending weight and discarded greedily for as long as the
/// discarded weight total stays within `(omega * dt)^2` — i.e. as long as
/// the residual mass being ignored stays within `omega^2`. Survivors are
/// returned in descending weight order (ties broken by ascending
/// determinant label), which is the order they should be appended in. An
/// empty result means nothing above the threshold remains: the macro-loop
/// has converged.
pub fn select_operators(
    weights: &[(u64, f64)],
    ansatz: &DuccAnsatz,
    omega: f64,
    dt: f64,
) -> Vec<FermionExcitation> {
    let reference = ansatz.reference();
    let present: BTreeSet<u64> = ansatz
        .excitations()
        .filter_map(|exc| exc.apply(reference).map(|(_, image)| image.bits()))
        .collect();

    let mut candidates: Vec<(u64, f64, FermionExcitation)> = weights
        .iter()
        .filter(|(det, _)| *det != reference.bits() && !present.contains(det))
        .filter_map(|&(det, w)| {
            excitation_between(reference, Determinant::from_bits(det))
                .map(|exc| (det, w, exc))
        })
        .collect();

    candidates.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .expect("weights are finite")
            .then(a.0.cmp(&b.0))
    });
    let budget = (omega * dt).powi(2);
    let mut discarded = 0.0;
    let mut keep_from = candidates.len();
    for (i, (_, w, _)) in candidates.iter().enumerate() {
        if discarded + w <= budget {
            discarded += w;
        } else {
            keep_from = i;
            break;
        }
    }

    let mut survivors = candidates.split_off(keep_from);
    survivors.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("weights are finite")
            .then(a.0.cmp(&b.0))
    });
    survivors.into_iter().map(|(_, _, exc)| exc).collect()
}

/// Shot count that makes an all-reference measurement outcome certify
/// `|r| < omega` at one-sigma confidence: `ceil(1 / (dt * omega)^2)`.
pub fn fixed_shot_mode(config: &SpqeConfig) -> u64 {
    (1.0 / (config.dt * config.omega).powi(2)).ceil() as u64
}

/// Splice a freshly selected batch (importance-descending) into an ansatz.
///
/// Each batch enters the circuit nearest the reference, least important
/// first, so that across the whole product the strongest corrections act
/// last. Retained operators keep their amplitudes; new ones start at zero.
/// The terminal operator set -- and hence the converged energy -- depends
/// on this placement.
pub fn insert_batch(ansatz: &DuccAnsatz, added: &[FermionExcitation]) -> Result<DuccAnsatz> {
    let mut ordered: Vec<FermionExcitation> = added.iter().rev().cloned().collect();
    let mut amplitudes = vec![0.0; ordered.len()];
    amplitudes.extend(ansatz.amplitudes());
    ordered.extend(ansatz.excitations().cloned());
    let mut merged = DuccAnsatz::from_pool(ansatz.num_qubits(), ansatz.reference(), &ordered)?;
    merged.set_amplitudes(&amplitudes)?;
    Ok(merged)
}

/// One macro-iteration's record.
#[derive(Debug, Clone)]
pub struct SpqeMacroRow {
    /// 1-based macro-iteration number.
    pub macro_iter: usize,
    /// Operators appended this iteration, in append order.
    pub added: Vec<FermionExcitation>,
    /// Ansatz size after the append.
    pub n_par: usize,
    /// How many operators excite three or more electrons.
    pub n_tplus: usize,
    /// Energy after the micro-solve.
    pub energy: f64,
    /// Energy error against the exact ground state.
    pub error_vs_exact: f64,
    /// Residual norm at the end of the micro-solve.
    pub residual_norm: f64,
    /// Whether the micro-solve hit its own iteration cap.
    pub micro_converged: bool,
    /// Running total of residual element evaluations (micro-iterations
    /// times the ansatz size at the time).
    pub residual_element_evals: u64,
    /// Two-qubit gate estimate for the current unitary.
    pub cnot_estimate: u64,
}

/// Full record of one adaptive run.
#[derive(Debug)]
pub struct SpqeTrace {
    pub rows: Vec<SpqeMacroRow>,
    /// True when a measurement round found nothing left to select.
    pub converged: bool,
    pub final_energy: f64,
    /// Exact ground-state energy of the sector, for error columns.
    pub exact_energy: f64,
    /// The ansatz as built, amplitudes included.
    pub ansatz: DuccAnsatz,
    /// Total residual element evaluations across all micro-solves.
    pub residual_element_evals: u64,
}

/// Grow an ansatz from nothing by alternating importance measurements
/// with projective micro-solves.
///
/// Retained operators keep their converged amplitudes between macro
/// iterations; new operators start at zero. Convergence means a
/// measurement round selected nothing; exhausting `max_macro` first
/// returns the trace with the failure flag instead of an error.
pub fn run_spqe(problem: &MolecularProblem, config: &SpqeConfig) -> Result<SpqeTrace> {
    config.validate()?;
    let hamiltonian = problem.jw_hamiltonian()?;
    let method = if enumerate_sector(problem).len() <= DENSE_TRACE_LIMIT {
        EigMethod::Dense
    } else {
        EigMethod::Davidson
    };
    let (spectrum, _) = fci_solve_with(problem, 1, method)?;
    let exact_energy = spectrum[0];

    let mut ansatz = DuccAnsatz::new(problem.num_qubits(), problem.reference())?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.rng_seed);
    let mut rows: Vec<SpqeMacroRow> = Vec::new();
    let mut element_evals = 0u64;
    let mut converged = false;
    let mut energy = problem.reference_energy();

    for macro_iter in 1..=config.max_macro {
        let residual_state =
            build_residual_state(&ansatz, &hamiltonian, config.dt, config.trotter_steps)?;
        let (weights, omega) = match config.mode {
            SelectionMode::Exact => (exact_weights(&residual_state), config.omega),
            SelectionMode::Sampled { shots } => {
                let tally =
                    SelectionTally::from_state(&residual_state, shots, rng.random())?;
                (tally.weights(), config.omega)
            }
            SelectionMode::FixedShots => {
                let shots = fixed_shot_mode(config);
                let tally =
                    SelectionTally::from_state(&residual_state, shots, rng.random())?;
                // Every measured non-reference determinant is kept: a zero
                // threshold discards nothing.
                (tally.weights(), 0.0)
            }
        };
        let added = select_operators(&weights, &ansatz, omega, config.dt);
        if added.is_empty() {
            converged = true;
            break;
        }
        ansatz = insert_batch(&ansatz, &added)?;

        let micro = run_pqe(problem, &mut ansatz, &config.micro)?;
        element_evals += micro.residual_evaluations as u64 * ansatz.len() as u64;
        energy = micro.final_energy;
        rows.push(SpqeMacroRow {
            macro_iter,
            n_par: ansatz.len(),
            n_tplus: ansatz.excitations().filter(|exc| exc.rank() >= 3).count(),
            energy,
            error_vs_exact: energy - exact_energy,
            residual_norm: micro.rows.last().map_or(0.0, |row| row.residual_norm),
            micro_converged: micro.converged,
            residual_element_evals: element_evals,
            cnot_estimate: ansatz.estimate_cnots(),
            added,
        });
    }

    Ok(SpqeTrace {
        rows,
        converged,
        final_energy: energy,
        exact_energy,
        ansatz,
        residual_element_evals: element_evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fci::matrix_element;
    use crate::molecule::PoolKind;
    use approx::assert_abs_diff_eq;

    fn toy_problem() -> MolecularProblem {
        let mut one = vec![0.0; 4];
        one[0] = -1.25;
        one[3] = -0.47;
        let mut two = vec![0.0; 16];
        let mut set = |i: usize, j: usize, k: usize, l: usize, v: f64| {
            let perms = [
                (i, j, k, l),
                (j, i, k, l),
                (i, j, l, k),
                (j, i, l, k),
                (k, l, i, j),
                (l, k, i, j),
                (k, l, j, i),
                (l, k, j, i),
            ];
            for (a, b, c, d) in perms {
                two[((a * 2 + b) * 2 + c) * 2 + d] = v;
            }
        };
        set(0, 0, 0, 0, 0.675);
        set(1, 1, 1, 1, 0.697);
        set(0, 0, 1, 1, 0.664);
        set(0, 1, 0, 1, 0.181);
        MolecularProblem::from_integrals(2, 2, 0, 0.71, one, two).unwrap()
    }

    #[test]
    fn zero_time_returns_the_reference() {
        let problem = toy_problem();
        let pool = problem.enumerate_pool(2, PoolKind::SinglesDoubles).unwrap();
        let mut ansatz =
            DuccAnsatz::from_pool(problem.num_qubits(), problem.reference(), &pool)
                .unwrap();
        let amps: Vec<f64> = (0..ansatz.len()).map(|i| 0.03 * (i as f64 + 1.0)).collect();
        ansatz.set_amplitudes(&amps).unwrap();
        let h = problem.jw_hamiltonian().unwrap();
        let state = build_residual_state(&ansatz, &h, 0.0, 1).unwrap();
        let on_ref = state.amplitude(problem.reference().bits());
        assert_abs_diff_eq!(on_ref.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn short_evolution_amplitudes_approach_bare_couplings() {
        let problem = toy_problem();
        let ansatz = DuccAnsatz::new(problem.num_qubits(), problem.reference()).unwrap();
        let h = problem.jw_hamiltonian().unwrap();
        let reference = problem.reference();
        // Many product-formula steps stand in for exact evolution here, so
        // the remaining deviation is dominated by the step length itself.
        let deviation = |dt: f64| -> f64 {
            let state = build_residual_state(&ansatz, &h, dt, 256).unwrap();
            enumerate_sector(&problem)
                .iter()
                .filter(|det| **det != reference)
                .map(|det| {
                    let measured = state.amplitude(det.bits()).norm() / dt;
                    let bare = matrix_element(&problem, *det, reference).abs();
                    (measured - bare).abs()
                })
                .fold(0.0, f64::max)
        };
        let coarse = deviation(0.08);
        let fine = deviation(0.04);
        assert!(
            fine < 0.75 * coarse,
            "deviation should shrink with dt: {coarse} -> {fine}"
        );
        assert!(coarse < 0.1);
    }

    #[test]
    fn tally_counts_must_sum_to_total() {
        let mut counts = BTreeMap::new();
        counts.insert(3u64, 5u64);
        counts.insert(12u64, 5u64);
        assert!(SelectionTally::new(counts.clone(), 10).is_ok());
        assert!(SelectionTally::new(counts, 11).is_err());
    }

    #[test]
    fn threshold_keeps_only_the_dominant_determinant() {
        let problem = toy_problem();
        let ansatz = DuccAnsatz::new(problem.num_qubits(), problem.reference()).unwrap();
        // Reference 0b0011; candidate images: 12 (double), 6 and 9
        // (singles). Shot counts 9/1/1 with 89 reference shots.
        let mut counts = BTreeMap::new();
        counts.insert(0b0011u64, 89u64);
        counts.insert(0b1100u64, 9u64);
        counts.insert(0b0110u64, 1u64);
        counts.insert(0b1001u64, 1u64);
        let tally = SelectionTally::new(counts, 100).unwrap();
        // With dt = 0.05 the discard budget (omega * dt)^2 must sit in
        // [0.02, 0.11): omega = 4 gives 0.04.
        let picked = select_operators(&tally.weights(), &ansatz, 4.0, 0.05);
        assert_eq!(picked.len(), 1);
        let image = picked[0].apply(problem.reference()).unwrap().1;
        assert_eq!(image.bits(), 0b1100);
        // A threshold above everything selects nothing.
        assert!(select_operators(&tally.weights(), &ansatz, 10.0, 0.05).is_empty());
    }

    #[test]
    fn selection_lists_descending_weight_with_ties_by_label() {
        let problem = toy_problem();
        let ansatz = DuccAnsatz::new(problem.num_qubits(), problem.reference()).unwrap();
        let weights = vec![(0b1001u64, 0.25), (0b0110u64, 0.25), (0b1100u64, 0.5)];
        let picked = select_operators(&weights, &ansatz, 1e-6, 0.05);
        let images: Vec<u64> = picked
            .iter()
            .map(|exc| exc.apply(problem.reference()).unwrap().1.bits())
            .collect();
        assert_eq!(images, vec![0b1100, 0b0110, 0b1001]);
    }

    #[test]
    fn later_batches_sit_closest_to_the_reference() {
        let problem = toy_problem();
        let reference = problem.reference();
        let double =
            excitation_between(reference, Determinant::from_bits(0b1100)).unwrap();
        let single_a =
            excitation_between(reference, Determinant::from_bits(0b0110)).unwrap();
        let single_b =
            excitation_between(reference, Determinant::from_bits(0b1001)).unwrap();

        let mut ansatz = DuccAnsatz::new(problem.num_qubits(), reference).unwrap();
        ansatz = insert_batch(&ansatz, &[double.clone()]).unwrap();
        ansatz.set_amplitudes(&[0.3]).unwrap();
        // Second batch arrives importance-descending: single_a outranks
        // single_b. In the circuit they must land innermost and reversed,
        // with the earlier double pushed outermost, amplitude intact.
        ansatz = insert_batch(&ansatz, &[single_a.clone(), single_b.clone()]).unwrap();

        let order: Vec<_> = ansatz.excitations().cloned().collect();
        assert_eq!(order, vec![single_b, single_a, double]);
        assert_eq!(ansatz.amplitudes(), vec![0.0, 0.0, 0.3]);
    }

    #[test]
    fn present_operators_and_reference_are_never_reselected() {
        let problem = toy_problem();
        let mut ansatz =
            DuccAnsatz::new(problem.num_qubits(), problem.reference()).unwrap();
        let double = excitation_between(
            problem.reference(),
            Determinant::from_bits(0b1100),
        )
        .unwrap();
        ansatz.push(double, 0.1).unwrap();
        let weights = vec![
            (0b0011u64, 0.9),
            (0b1100u64, 0.05),
            (0b0110u64, 0.05),
        ];
        let picked = select_operators(&weights, &ansatz, 1e-6, 0.05);
        let images: Vec<u64> = picked
            .iter()
            .map(|exc| exc.apply(problem.reference()).unwrap().1.bits())
            .collect();
        assert_eq!(images, vec![0b0110]);
    }

    #[test]
    fn shot_budget_arithmetic() {
        let base = SpqeConfig::default();
        let cfg = |omega: f64, dt: f64| SpqeConfig { omega, dt, ..base.clone() };
        assert_eq!(fixed_shot_mode(&cfg(1e-1, 0.05)), 40_000);
        assert_eq!(fixed_shot_mode(&cfg(5e-2, 0.05)), 160_000);
        assert_eq!(fixed_shot_mode(&cfg(1.0, 1.0)), 1);
    }

    #[test]
    fn oversized_threshold_converges_to_the_mean_field_state() {
        let problem = toy_problem();
        let config = SpqeConfig { omega: 10.0, ..SpqeConfig::default() };
        let trace = run_spqe(&problem, &config).unwrap();
        assert!(trace.converged);
        assert!(trace.rows.is_empty());
        assert_abs_diff_eq!(
            trace.final_energy,
            problem.reference_energy(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn tight_threshold_reaches_the_exact_energy() {
        let problem = toy_problem();
        let config = SpqeConfig { omega: 1e-4, ..SpqeConfig::default() };
        let trace = run_spqe(&problem, &config).unwrap();
        assert!(trace.converged);
        assert!(!trace.rows.is_empty());
        assert!(
            (trace.final_energy - trace.exact_energy).abs() < 1e-6,
            "adaptive solve should hit the exact energy, got error {}",
            trace.final_energy - trace.exact_energy
        );
        // Element accounting: each macro row's running total grows by
        // micro-iterations times the ansatz size.
        for row in &trace.rows {
            assert!(row.residual_element_evals >= row.n_par as u64);
        }
    }

    #[test]
    fn sampled_runs_are_seed_deterministic() {
        let problem = toy_problem();
        let config = SpqeConfig {
            omega: 0.05,
            mode: SelectionMode::Sampled { shots: 20_000 },
            rng_seed: 11,
            ..SpqeConfig::default()
        };
        let a = run_spqe(&problem, &config).unwrap();
        let b = run_spqe(&problem, &config).unwrap();
        assert_eq!(a.rows.len(), b.rows.len());
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.energy.to_bits(), rb.energy.to_bits());
            assert_eq!(ra.added, rb.added);
        }
    }

    #[test]
    fn fixed_shot_protocol_terminates_on_all_reference_shots() {
        let problem = toy_problem();
        // 160000 shots per round: the double's excitation probability of
        // (dt * 0.181)^2 gets hit about thirteen times in round one.
        let config = SpqeConfig {
            omega: 0.05,
            mode: SelectionMode::FixedShots,
            rng_seed: 3,
            max_macro: 20,
            ..SpqeConfig::default()
        };
        let trace = run_spqe(&problem, &config).unwrap();
        assert!(trace.converged);
        assert!(!trace.rows.is_empty(), "the dominant operator must be found");
        // Everything measurable was added, so the result is essentially
        // exact.
        assert!((trace.final_energy - trace.exact_energy).abs() < 1e-4);
    }

    #[test]
    fn config_validation_rejects_bad_knobs() {
        let bad = SpqeConfig { omega: 0.0, ..SpqeConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SpqeConfig { dt: -0.1, ..SpqeConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SpqeConfig { trotter_steps: 0, ..SpqeConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SpqeConfig {
            mode: SelectionMode::Sampled { shots: 0 },
            ..SpqeConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
