//! Projective amplitude solver.
//!
//! The working equations project the similarity-transformed Hamiltonian
//! onto the excited determinants reachable from the reference: the
//! residual element for operator mu is `r_mu = <Phi_mu| U^dag H U |Phi_0>`,
//! and the amplitudes are refined with quasi-Newton steps
//! `t_mu <- t_mu + r_mu / Delta_mu` using Moller-Plesset denominators,
//! accelerated by DIIS extrapolation over the recent iterates. A solved
//! amplitude set has every projection zero, so the energy
//! `<Phi_0| U^dag H U |Phi_0>` is stationary against those rotations.
//!
//! Residuals are evaluated by default through a single state-vector
//! pipeline (`U|Phi_0>`, then `H`, then `U^dag`, then overlaps with every
//! excited determinant at once). A second route evaluates one element at a
//! time from three diagonal expectation values; it models how hardware
//! would measure the off-diagonal element and doubles as a cross-check of
//! the pipeline.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::ansatz::DuccAnsatz;
use crate::error::{Error, Result};
use crate::fci::{enumerate_sector, fci_solve};
use crate::molecule::MolecularProblem;
use crate::pauli::QubitOperator;
use crate::state::StateVector;

/// Largest imaginary part tolerated in a projection that should be real.
const IMAG_TOL: f64 = 1e-10;

/// Smallest Moller-Plesset denominator accepted by the quasi-Newton step.
const DENOMINATOR_FLOOR: f64 = 1e-8;

/// Worst metric deviation tolerated before projective residuals are
/// declared undefined.
const METRIC_TOL: f64 = 1e-10;

/// Residual projections, ordered like the ansatz operator list.
#[derive(Debug, Clone)]
pub struct ResidualVector {
    values: Vec<f64>,
}

impl ResidualVector {
    pub fn new(values: Vec<f64>) -> Self {
        ResidualVector { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Euclidean norm of the projection vector.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|r| r * r).sum::<f64>().sqrt()
    }
}

/// Knobs for the micro-iteration loop.
#[derive(Debug, Clone)]
pub struct PqeConfig {
    /// Stop once the residual norm is at or below this threshold.
    pub omega_r: f64,
    /// Hard cap on micro-iterations; hitting it flags non-convergence.
    pub max_micro: usize,
    /// How many recent iterates DIIS keeps.
    pub diis_depth: usize,
    /// First iteration (1-based) allowed to extrapolate.
    pub diis_start: usize,
    /// Standard deviation of Gaussian noise added to each residual
    /// element after evaluation; zero leaves the residuals exact.
    pub noise_sigma: f64,
    /// Seed for the noise stream; runs with equal seeds are identical.
    pub rng_seed: u64,
}

impl Default for PqeConfig {
    fn default() -> Self {
        PqeConfig {
            omega_r: 1e-5,
            max_micro: 100,
            diis_depth: 8,
            diis_start: 2,
            noise_sigma: 0.0,
            rng_seed: 0,
        }
    }
}

impl PqeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_r > 0.0) {
            return Err(Error::Config(format!(
                "residual threshold omega_r must be positive, got {}",
                self.omega_r
            )));
        }
        if self.max_micro == 0 {
            return Err(Error::Config(
                "max_micro must allow at least one iteration".into(),
            ));
        }
        if self.diis_depth == 0 {
            return Err(Error::Config(
                "diis_depth must keep at least one iterate".into(),
            ));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Config(format!(
                "noise_sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// One row of the micro-iteration trace.
#[derive(Debug, Clone)]
pub struct PqeIteration {
    /// 1-based micro-iteration number.
    pub iteration: usize,
    /// Energy from a fresh expectation value at the updated amplitudes.
    pub energy: f64,
    /// Change against the previous row (first row: against the starting
    /// amplitudes' energy).
    pub delta_energy: f64,
    /// Cumulative residual-vector evaluations so far.
    pub residual_evaluations: usize,
    /// Norm of the residual that drove this iteration's update, as the
    /// solver saw it (noise included when enabled).
    pub residual_norm: f64,
}

/// Full record of one solve.
#[derive(Debug, Clone)]
pub struct PqeTrace {
    pub rows: Vec<PqeIteration>,
    /// False when the loop hit `max_micro` with the residual still above
    /// threshold.
    pub converged: bool,
    pub final_energy: f64,
    pub final_amplitudes: Vec<f64>,
    pub residual_evaluations: usize,
}

/// Evaluate every residual element through one `U^dag H U` pipeline.
///
/// Requires the ansatz metric to be the identity: each operator must map
/// the reference to a distinct excited determinant, or the projections do
/// not correspond to independent equations.
pub fn residual_projective(
    ansatz: &DuccAnsatz,
    hamiltonian: &QubitOperator,
) -> Result<ResidualVector> {
    let deviation = ansatz.check_metric();
    if deviation > METRIC_TOL {
        return Err(Error::Domain(format!(
            "ansatz metric deviates from the identity by {deviation:.3e}; \
             projective residuals are only defined for particle-hole \
             operator sets with orthonormal excited determinants"
        )));
    }
    let state = ansatz.prepare_state()?;
    let mut transformed = state.apply_operator(hamiltonian)?;
    ansatz.apply_adjoint(&mut transformed)?;

    let reference = ansatz.reference();
    let mut values = Vec::with_capacity(ansatz.len());
    for exc in ansatz.excitations() {
        let (sign, image) = exc.apply(reference).ok_or_else(|| {
            Error::Domain(format!(
                "operator {exc} does not move the reference determinant; \
                 its projection is undefined"
            ))
        })?;
        let overlap = transformed.amplitude(image.bits()) * sign;
        if overlap.im.abs() >= IMAG_TOL {
            return Err(Error::Domain(format!(
                "projection onto {exc} has imaginary part {:.3e}; \
                 the transformed Hamiltonian should stay real on this basis",
                overlap.im
            )));
        }
        values.push(overlap.re);
    }
    Ok(ResidualVector::new(values))
}

/// Evaluate one residual element from diagonal expectation values only.
///
/// With `|Omega> = exp(pi/4 kappa_mu) |Phi_0>`, the off-diagonal element
/// equals `<Omega|U^dag H U|Omega> - E_mu/2 - E_0/2`, where `E_mu` and
/// `E_0` are the diagonal elements on the excited determinant and the
/// reference. Three expectation values per element, all measurable as
/// averages of the Hamiltonian on prepared states.
pub fn residual_via_expectation(
    ansatz: &DuccAnsatz,
    hamiltonian: &QubitOperator,
    index: usize,
) -> Result<f64> {
    let reference = ansatz.reference();
    let exc = ansatz.excitation(index);
    let (_, image) = exc.apply(reference).ok_or_else(|| {
        Error::Domain(format!(
            "operator {exc} does not move the reference determinant; \
             its projection is undefined"
        ))
    })?;

    let mut rotated = StateVector::from_determinant(ansatz.num_qubits(), reference)?;
    rotated.apply_exp_generator(std::f64::consts::FRAC_PI_4, ansatz.generator(index))?;
    ansatz.apply_unitary(&mut rotated)?;
    let omega_energy = rotated.expectation(hamiltonian)?;

    let mut excited = StateVector::from_determinant(ansatz.num_qubits(), image)?;
    ansatz.apply_unitary(&mut excited)?;
    let excited_energy = excited.expectation(hamiltonian)?;

    let ground = ansatz.prepare_state()?;
    let reference_energy = ground.expectation(hamiltonian)?;

    Ok(omega_energy - 0.5 * excited_energy - 0.5 * reference_energy)
}

/// One quasi-Newton update: `t_mu <- t_mu + r_mu / Delta_mu`.
///
/// `excitations` labels the entries for error reporting; a vanishing
/// denominator means the orbitals are too degenerate for this
/// preconditioner and is rejected rather than amplified.
pub fn quasi_newton_step(
    residual: &ResidualVector,
    denominators: &[f64],
    amplitudes: &[f64],
    ansatz: &DuccAnsatz,
) -> Result<Vec<f64>> {
    if residual.len() != denominators.len() || residual.len() != amplitudes.len() {
        return Err(Error::Domain(format!(
            "mismatched lengths in quasi-Newton step: {} residuals, \
             {} denominators, {} amplitudes",
            residual.len(),
            denominators.len(),
            amplitudes.len()
        )));
    }
    for (i, &delta) in denominators.iter().enumerate() {
        if delta.abs() <= DENOMINATOR_FLOOR {
            return Err(Error::Domain(format!(
                "Moller-Plesset denominator for {} is {delta:.3e}; \
                 degenerate orbital energies make the quasi-Newton step \
                 ill-defined",
                ansatz.excitation(i)
            )));
        }
    }
    Ok(amplitudes
        .iter()
        .zip(residual.values())
        .zip(denominators)
        .map(|((t, r), delta)| t + r / delta)
        .collect())
}

/// DIIS extrapolation over `(amplitudes, residual)` iterates.
///
/// Minimizes the norm of the extrapolated residual subject to the
/// coefficients summing to one (Pulay's bordered linear system). When the
/// system is singular the oldest iterates are dropped and the solve is
/// retried; a single iterate is always returned as-is. `None` only when
/// every retry fails, in which case the caller keeps its un-extrapolated
/// amplitudes.
pub fn diis_extrapolate(history: &[(Vec<f64>, Vec<f64>)]) -> Option<Vec<f64>> {
    for start in 0..history.len() {
        let window = &history[start..];
        let m = window.len();
        let mut bordered = DMatrix::zeros(m + 1, m + 1);
        for i in 0..m {
            for j in 0..m {
                let dot: f64 = window[i]
                    .1
                    .iter()
                    .zip(&window[j].1)
                    .map(|(a, b)| a * b)
                    .sum();
                bordered[(i, j)] = dot;
            }
            bordered[(i, m)] = -1.0;
            bordered[(m, i)] = -1.0;
        }
        let mut rhs = DVector::zeros(m + 1);
        rhs[m] = -1.0;
        let Some(solution) = bordered.full_piv_lu().solve(&rhs) else {
            continue;
        };
        if solution.iter().any(|c| !c.is_finite()) {
            continue;
        }
        let n = window[0].0.len();
        let mut mixed = vec![0.0; n];
        for (i, (amps, _)) in window.iter().enumerate() {
            for (out, t) in mixed.iter_mut().zip(amps) {
                *out += solution[i] * t;
            }
        }
        return Some(mixed);
    }
    None
}

/// Add zero-mean Gaussian noise elementwise; `sigma == 0` returns the
/// input unchanged. Deterministic for a given seed.
pub fn inject_noise(values: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    perturb(values, sigma, &mut rng)
}

fn perturb(values: &[f64], sigma: f64, rng: &mut impl Rng) -> Vec<f64> {
    if sigma == 0.0 {
        return values.to_vec();
    }
    let normal = Normal::new(0.0, sigma).expect("validated sigma");
    values.iter().map(|v| v + normal.sample(rng)).collect()
}

/// Iterate residual evaluation, quasi-Newton update, and DIIS until the
/// residual norm falls to `omega_r` or the iteration budget runs out.
///
/// Each trace row records the residual norm that drove the update and the
/// energy from a fresh expectation value at the updated amplitudes, so the
/// row count equals the number of residual evaluations. Noise, when
/// enabled, is added after each residual evaluation and before the update;
/// the solver then sees only the noisy values, including in its stopping
/// test. Non-convergence is reported through the trace flag, not an error:
/// a noisy run that plateaus is still a result.
pub fn run_pqe(
    problem: &MolecularProblem,
    ansatz: &mut DuccAnsatz,
    config: &PqeConfig,
) -> Result<PqeTrace> {
    config.validate()?;
    let hamiltonian = problem.jw_hamiltonian()?;
    let denominators: Vec<f64> = ansatz
        .excitations()
        .map(|exc| problem.mp_denominator(exc))
        .collect();
    let mut rng = ChaCha12Rng::seed_from_u64(config.rng_seed);

    let mut previous_energy = ansatz.prepare_state()?.expectation(&hamiltonian)?;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>)> =
        VecDeque::with_capacity(config.diis_depth);
    let mut rows = Vec::new();
    let mut converged = false;
    let mut previous_norm = f64::INFINITY;

    for iteration in 1..=config.max_micro {
        let exact = residual_projective(ansatz, &hamiltonian)?;
        let seen = ResidualVector::new(perturb(
            exact.values(),
            config.noise_sigma,
            &mut rng,
        ));
        let residual_norm = seen.norm();
        // A sharply growing residual means the extrapolation subspace has
        // gone bad; restarting it from the current point breaks the
        // divergence without touching healthy trajectories.
        if residual_norm > 2.0 * previous_norm {
            history.clear();
        }
        previous_norm = residual_norm;

        let stepped =
            quasi_newton_step(&seen, &denominators, &ansatz.amplitudes(), ansatz)?;
        if history.len() == config.diis_depth {
            history.pop_front();
        }
        history.push_back((stepped.clone(), seen.values().to_vec()));
        let next = if iteration >= config.diis_start {
            diis_extrapolate(history.make_contiguous()).unwrap_or(stepped)
        } else {
            stepped
        };
        ansatz.set_amplitudes(&next)?;

        let energy = ansatz.prepare_state()?.expectation(&hamiltonian)?;
        rows.push(PqeIteration {
            iteration,
            energy,
            delta_energy: energy - previous_energy,
            residual_evaluations: iteration,
            residual_norm,
        });
        previous_energy = energy;

        if residual_norm <= config.omega_r {
            converged = true;
            break;
        }
    }

    Ok(PqeTrace {
        converged,
        final_energy: previous_energy,
        final_amplitudes: ansatz.amplitudes(),
        residual_evaluations: rows.len(),
        rows,
    })
}

/// Off-diagonal mass of the similarity-transformed Hamiltonian's first
/// column, and whether it brackets an exact eigenvalue.
///
/// The first column of `U^dag H U` in the determinant basis has the
/// computed energy on the diagonal; the sum of the other entries' absolute
/// values is a disc radius that must cover at least one exact eigenvalue.
/// Returns `(radius, holds)` where `holds` checks the disc against the
/// full exact spectrum of the sector, with a 1e-10 cushion for arithmetic.
/// The spectrum comes from a dense solve, so sectors beyond the dense
/// ceiling are rejected.
pub fn gershgorin_radius(
    problem: &MolecularProblem,
    ansatz: &DuccAnsatz,
) -> Result<(f64, bool)> {
    let hamiltonian = problem.jw_hamiltonian()?;
    let state = ansatz.prepare_state()?;
    let mut transformed = state.apply_operator(&hamiltonian)?;
    ansatz.apply_adjoint(&mut transformed)?;

    let reference = ansatz.reference().bits();
    let energy = transformed.amplitude(reference).re;
    let radius: f64 = transformed
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(basis, _)| *basis as u64 != reference)
        .map(|(_, amp)| amp.norm())
        .sum();

    let dimension = enumerate_sector(problem).len();
    let (spectrum, _) = fci_solve(problem, dimension)?;
    let nearest = spectrum
        .iter()
        .map(|e| (energy - e).abs())
        .fold(f64::INFINITY, f64::min);
    Ok((radius, nearest <= radius + 1e-10))
}
