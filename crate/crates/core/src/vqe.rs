//! Variational reference solver: energy and analytic amplitude gradients
//! for the factorized-unitary ansatz, quasi-Newton minimization, adaptive
//! operator growth driven by pool gradients, and shot-count bounds for the
//! two measurement strategies.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::ansatz::DuccAnsatz;
use crate::bfgs::{minimize, BfgsConfig};
use crate::error::{Error, Result};
use crate::fci::{fci_solve_with, EigMethod};
use crate::fermion::FermionExcitation;
use crate::molecule::{MolecularProblem, PoolKind};
use crate::pauli::QubitOperator;
use crate::spqe::DENSE_TRACE_LIMIT;
use crate::state::StateVector;

/// Pool gradients below this are indistinguishable from round-off; selecting
/// such an operator would only churn.
const STAGNATION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct VqeConfig {
    /// Stop the amplitude optimization when the largest gradient component
    /// falls to this (Eh).
    pub omega_g: f64,
    /// Pool-gradient norm at which adaptive growth stops.
    pub adapt_epsilon: f64,
    pub max_bfgs_iters: usize,
    /// Standard deviation of Gaussian noise added to every gradient
    /// component the optimizer sees. Zero means exact.
    pub noise_sigma: f64,
    pub rng_seed: u64,
    /// Operator pool for adaptive growth.
    pub pool_kind: PoolKind,
}

impl Default for VqeConfig {
    fn default() -> Self {
        VqeConfig {
            omega_g: 1e-5,
            adapt_epsilon: 1e-3,
            max_bfgs_iters: 200,
            noise_sigma: 0.0,
            rng_seed: 0,
            pool_kind: PoolKind::SinglesDoubles,
        }
    }
}

impl VqeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_g > 0.0) {
            return Err(Error::Config("gradient threshold must be positive".into()));
        }
        if !(self.adapt_epsilon > 0.0) {
            return Err(Error::Config("pool threshold must be positive".into()));
        }
        if self.max_bfgs_iters == 0 {
            return Err(Error::Config("need at least one optimizer iteration".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Config("noise level must be nonnegative".into()));
        }
        Ok(())
    }
}

/// `<Phi0| U(t)^dagger H U(t) |Phi0>`.
pub fn vqe_energy(ansatz: &DuccAnsatz, hamiltonian: &QubitOperator) -> Result<f64> {
    ansatz.prepare_state()?.expectation(hamiltonian)
}

/// Analytic amplitude gradient, `dE/dt_k = 2 Re <psi| H d(psi)/dt_k>`.
///
/// One Hamiltonian application plus a reverse sweep: both the prepared
/// state and `H|psi>` are peeled factor by factor from the outside in, and
/// each step costs one generator application and one inner product.
pub fn vqe_gradient(ansatz: &DuccAnsatz, hamiltonian: &QubitOperator) -> Result<Vec<f64>> {
    let n = ansatz.len();
    let mut phi = ansatz.prepare_state()?;
    let mut lambda = phi.apply_operator(hamiltonian)?;
    let mut gradient = vec![0.0; n];
    for k in (0..n).rev() {
        let kappa_phi = phi.apply_operator(ansatz.generator(k))?;
        gradient[k] = 2.0 * lambda.inner(&kappa_phi).re;
        if k > 0 {
            let t = ansatz.amplitude(k);
            phi.apply_exp_generator(-t, ansatz.generator(k))?;
            lambda.apply_exp_generator(-t, ansatz.generator(k))?;
        }
    }
    Ok(gradient)
}

/// One accepted optimizer iterate.
#[derive(Debug, Clone)]
pub struct VqeIteration {
    pub iteration: usize,
    pub energy: f64,
    pub delta_energy: f64,
    /// Gradient-vector evaluations so far, line-search probes included.
    pub gradient_evaluations: usize,
    /// Euclidean norm of the (possibly noisy) gradient at this iterate.
    pub gradient_norm: f64,
}

#[derive(Debug, Clone)]
pub struct VqeTrace {
    pub rows: Vec<VqeIteration>,
    pub converged: bool,
    /// The line search gave up before the gradient test was met.
    pub line_search_failed: bool,
    pub final_energy: f64,
    pub final_amplitudes: Vec<f64>,
    pub gradient_evaluations: usize,
}

/// Minimize the ansatz energy over its amplitudes.
///
/// Convergence tests the largest gradient component against `omega_g`.
/// With `noise_sigma > 0`, every gradient the optimizer sees — probes,
/// accepted steps, and the stopping test — carries fresh seeded Gaussian
/// noise; energies stay exact.
pub fn run_vqe(
    problem: &MolecularProblem,
    ansatz: &mut DuccAnsatz,
    config: &VqeConfig,
) -> Result<VqeTrace> {
    config.validate()?;
    let hamiltonian = problem.jw_hamiltonian()?;
    let x0 = ansatz.amplitudes();

    let mut scratch = ansatz.clone();
    let mut rng = ChaCha12Rng::seed_from_u64(config.rng_seed);
    let noise = if config.noise_sigma > 0.0 {
        Some(Normal::new(0.0, config.noise_sigma).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    };

    let objective = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        scratch.set_amplitudes(x)?;
        let energy = vqe_energy(&scratch, &hamiltonian)?;
        let mut gradient = vqe_gradient(&scratch, &hamiltonian)?;
        if let Some(normal) = &noise {
            for g in &mut gradient {
                *g += normal.sample(&mut rng);
            }
        }
        Ok((energy, gradient))
    };

    let bfgs = BfgsConfig {
        grad_tol: config.omega_g,
        max_iters: config.max_bfgs_iters,
        ..BfgsConfig::default()
    };
    let outcome = minimize(objective, &x0, &bfgs)?;

    ansatz.set_amplitudes(&outcome.x)?;
    let rows = outcome
        .iterates
        .iter()
        .map(|it| VqeIteration {
            iteration: it.iteration,
            energy: it.value,
            delta_energy: it.delta_value,
            gradient_evaluations: it.evaluations,
            gradient_norm: it.gradient_norm,
        })
        .collect();
    Ok(VqeTrace {
        rows,
        converged: outcome.converged,
        line_search_failed: outcome.line_search_failed,
        final_energy: outcome.value,
        final_amplitudes: outcome.x,
        gradient_evaluations: outcome.evaluations,
    })
}

/// Energy gradient of each candidate operator about the current state:
/// `g = <psi|[H, kappa]|psi>`, which for real states equals
/// `2 Re <psi|H kappa|psi>`.
pub fn adapt_pool_gradients(
    state: &StateVector,
    pool: &[FermionExcitation],
    hamiltonian: &QubitOperator,
) -> Result<Vec<f64>> {
    let h_psi = state.apply_operator(hamiltonian)?;
    pool.par_iter()
        .map(|exc| {
            let kappa = exc.jw_generator(state.num_qubits())?;
            let kappa_psi = state.apply_operator(&kappa)?;
            Ok(2.0 * h_psi.inner(&kappa_psi).re)
        })
        .collect()
}

/// One growth step.
#[derive(Debug, Clone)]
pub struct AdaptIteration {
    pub macro_iter: usize,
    pub n_par: usize,
    pub energy: f64,
    pub error_vs_exact: f64,
    /// Euclidean norm of the full pool gradient before this step's append.
    pub pool_gradient_norm: f64,
    pub selected: FermionExcitation,
    pub selected_gradient: f64,
    /// Gradient-vector evaluations across all optimizations so far.
    pub gradient_evaluations: usize,
    pub micro_converged: bool,
}

#[derive(Debug)]
pub struct AdaptTrace {
    pub rows: Vec<AdaptIteration>,
    /// Pool-gradient norm fell to the threshold.
    pub converged: bool,
    /// Best candidate gradient was numerically zero — nothing to gain.
    pub stagnated: bool,
    pub final_energy: f64,
    pub exact_energy: f64,
    pub ansatz: DuccAnsatz,
    pub gradient_evaluations: usize,
}

/// Grow an ansatz one operator at a time by the largest pool gradient,
/// re-optimizing every amplitude after each append.
///
/// Growth stops when the pool-gradient norm reaches `adapt_epsilon`, when
/// `budget` operators have been placed, or on stagnation. Ties in the
/// selection break toward the smaller excited-determinant label.
pub fn run_adapt_vqe(
    problem: &MolecularProblem,
    config: &VqeConfig,
    budget: Option<usize>,
) -> Result<AdaptTrace> {
    config.validate()?;
    let hamiltonian = problem.jw_hamiltonian()?;
    let pool = problem.enumerate_pool(2, config.pool_kind)?;

    let sector: Vec<_> = crate::fci::enumerate_sector(problem);
    let method = if sector.len() <= DENSE_TRACE_LIMIT {
        EigMethod::Dense
    } else {
        EigMethod::Davidson
    };
    let (spectrum, _) = fci_solve_with(problem, 1, method)?;
    let exact_energy = spectrum[0];

    let mut ansatz = DuccAnsatz::new(problem.num_qubits(), problem.reference())?;
    let mut rows: Vec<AdaptIteration> = Vec::new();
    let mut energy = problem.reference_energy();
    let mut evaluations = 0usize;
    let mut converged = false;
    let mut stagnated = false;
    let cap = budget.unwrap_or(usize::MAX);

    for macro_iter in 1.. {
        if ansatz.len() >= cap {
            break;
        }
        let state = ansatz.prepare_state()?;
        let gradients = adapt_pool_gradients(&state, &pool, &hamiltonian)?;
        let pool_norm = gradients.iter().map(|g| g * g).sum::<f64>().sqrt();
        if pool_norm <= config.adapt_epsilon {
            converged = true;
            break;
        }
        let reference = problem.reference().bits();
        let best = gradients
            .iter()
            .zip(&pool)
            .max_by(|(ga, ea), (gb, eb)| {
                let key = |exc: &FermionExcitation| {
                    exc.holes().iter().chain(exc.particles()).fold(reference, |m, &q| m ^ (1 << q))
                };
                ga.abs()
                    .total_cmp(&gb.abs())
                    .then_with(|| key(eb).cmp(&key(ea)))
            })
            .map(|(g, exc)| (*g, exc.clone()));
        let Some((selected_gradient, selected)) = best else { break };
        if selected_gradient.abs() < STAGNATION_FLOOR {
            stagnated = true;
            break;
        }

        // The new operator acts last in the product (outermost factor).
        ansatz.push(selected.clone(), 0.0)?;
        let micro = run_vqe(problem, &mut ansatz, config)?;
        evaluations += micro.gradient_evaluations;
        energy = micro.final_energy;
        rows.push(AdaptIteration {
            macro_iter,
            n_par: ansatz.len(),
            energy,
            error_vs_exact: energy - exact_energy,
            pool_gradient_norm: pool_norm,
            selected,
            selected_gradient,
            gradient_evaluations: evaluations,
            micro_converged: micro.converged,
        });
    }

    Ok(AdaptTrace {
        rows,
        converged,
        stagnated,
        final_energy: energy,
        exact_energy,
        ansatz,
        gradient_evaluations: evaluations,
    })
}

/// Shot-count upper bounds for estimating a full gradient vector versus a
/// full residual vector to component precision `epsilon`, given the
/// measured operator's coefficient one-norm.
#[derive(Debug, Clone, Copy)]
pub struct MeasurementCosts {
    pub m_grad: f64,
    pub m_res: f64,
    /// `m_res / m_grad`, exactly 3/4 for equal target precision.
    pub ratio: f64,
}

/// Evaluate both bounds: `m_grad <= 4 n (sum_l |h_l|)^2 / eps^2` and
/// `m_res <= 3 n (sum_l |h_l|)^2 / eps^2`. The identity component needs no
/// measurement and is excluded from the one-norm.
pub fn measurement_cost_estimates(
    hamiltonian: &QubitOperator,
    n_par: usize,
    epsilon: f64,
) -> Result<MeasurementCosts> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain("precision target must be positive".into()));
    }
    let one_norm: f64 = hamiltonian
        .terms()
        .iter()
        .filter(|(_, s)| !s.is_identity())
        .map(|(c, _)| c.norm())
        .sum();
    let shared = n_par as f64 * (one_norm / epsilon).powi(2);
    // The common factor cancels algebraically; dividing the rounded
    // products would smear the exact 3/4.
    Ok(MeasurementCosts { m_grad: 4.0 * shared, m_res: 3.0 * shared, ratio: 3.0 / 4.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fci::{fci_ground, matrix_element};
    use crate::fermion::Determinant;
    use crate::pqe::{run_pqe, PqeConfig};
    use approx::assert_abs_diff_eq;

    fn toy_problem() -> MolecularProblem {
        let mut one = vec![0.0; 4];
        one[0] = -1.25;
        one[3] = -0.47;
        let mut two = vec![0.0; 16];
        let mut set = |i: usize, j: usize, k: usize, l: usize, v: f64| {
            for (a, b, c, d) in [
                (i, j, k, l),
                (j, i, k, l),
                (i, j, l, k),
                (j, i, l, k),
                (k, l, i, j),
                (l, k, i, j),
                (k, l, j, i),
                (l, k, j, i),
            ] {
                two[((a * 2 + b) * 2 + c) * 2 + d] = v;
            }
        };
        set(0, 0, 0, 0, 0.675);
        set(1, 1, 1, 1, 0.697);
        set(0, 0, 1, 1, 0.664);
        set(0, 1, 0, 1, 0.181);
        MolecularProblem::from_integrals(2, 2, 0, 0.71, one, two).unwrap()
    }

    fn sd_ansatz(problem: &MolecularProblem) -> DuccAnsatz {
        let pool = problem.enumerate_pool(2, PoolKind::SinglesDoubles).unwrap();
        DuccAnsatz::from_pool(problem.num_qubits(), problem.reference(), &pool).unwrap()
    }

    #[test]
    fn zero_amplitudes_give_the_mean_field_energy() {
        let problem = toy_problem();
        let h = problem.jw_hamiltonian().unwrap();
        let ansatz = sd_ansatz(&problem);
        assert_abs_diff_eq!(
            vqe_energy(&ansatz, &h).unwrap(),
            problem.reference_energy(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn gradient_at_zero_reproduces_bare_couplings_and_kills_singles() {
        let problem = toy_problem();
        let h = problem.jw_hamiltonian().unwrap();
        let ansatz = sd_ansatz(&problem);
        let gradient = vqe_gradient(&ansatz, &h).unwrap();
        for (exc, g) in ansatz.excitations().zip(&gradient) {
            let image = exc.apply(problem.reference()).unwrap().1;
            let coupling = matrix_element(&problem, image, problem.reference());
            if exc.rank() == 1 {
                assert!(g.abs() < 1e-9, "occupied-virtual coupling should vanish: {g}");
            } else {
                assert_abs_diff_eq!(*g, 2.0 * coupling, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let problem = toy_problem();
        let h = problem.jw_hamiltonian().unwrap();
        let mut ansatz = sd_ansatz(&problem);
        let amps: Vec<f64> = (0..ansatz.len())
            .map(|k| 0.1 * ((k as f64 + 1.3).sin()))
            .collect();
        ansatz.set_amplitudes(&amps).unwrap();
        let analytic = vqe_gradient(&ansatz, &h).unwrap();
        let step = 1e-5;
        for k in 0..ansatz.len() {
            let mut plus = amps.clone();
            plus[k] += step;
            let mut minus = amps.clone();
            minus[k] -= step;
            let mut probe = ansatz.clone();
            probe.set_amplitudes(&plus).unwrap();
            let ep = vqe_energy(&probe, &h).unwrap();
            probe.set_amplitudes(&minus).unwrap();
            let em = vqe_energy(&probe, &h).unwrap();
            assert_abs_diff_eq!(analytic[k], (ep - em) / (2.0 * step), epsilon = 1e-7);
        }
    }

    #[test]
    fn gradient_vanishes_at_the_projective_solution() {
        // The toy's doubles+singles ansatz spans its whole excitation
        // manifold, so the projective root is the exact state and the
        // variational gradient must vanish there too.
        let problem = toy_problem();
        let h = problem.jw_hamiltonian().unwrap();
        let mut ansatz = sd_ansatz(&problem);
        let config = PqeConfig { omega_r: 1e-10, ..PqeConfig::default() };
        let trace = run_pqe(&problem, &mut ansatz, &config).unwrap();
        assert!(trace.converged);
        let gradient = vqe_gradient(&ansatz, &h).unwrap();
        let norm = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(norm < 1e-6, "gradient norm {norm} at the projective root");
    }

    #[test]
    fn variational_solve_reaches_the_exact_toy_energy() {
        let problem = toy_problem();
        let mut ansatz = sd_ansatz(&problem);
        let config = VqeConfig { omega_g: 1e-8, ..VqeConfig::default() };
        let trace = run_vqe(&problem, &mut ansatz, &config).unwrap();
        assert!(trace.converged);
        let exact = fci_ground(&problem).unwrap().energy();
        assert_abs_diff_eq!(trace.final_energy, exact, epsilon = 1e-8);
        for pair in trace.rows.windows(2) {
            assert!(pair[1].energy <= pair[0].energy + 1e-12);
        }
        assert!(trace.gradient_evaluations >= trace.rows.len());
    }

    #[test]
    fn pool_gradients_agree_with_the_amplitude_gradient_at_zero() {
        let problem = toy_problem();
        let h = problem.jw_hamiltonian().unwrap();
        let ansatz = sd_ansatz(&problem);
        let pool: Vec<FermionExcitation> = ansatz.excitations().cloned().collect();
        let state = ansatz.prepare_state().unwrap();
        let pool_grads = adapt_pool_gradients(&state, &pool, &h).unwrap();
        let amp_grads = vqe_gradient(&ansatz, &h).unwrap();
        for (a, b) in pool_grads.iter().zip(&amp_grads) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn eigenstates_have_zero_pool_gradient() {
        let problem = toy_problem();
        let h = problem.jw_hamiltonian().unwrap();
        let state = fci_ground(&problem)
            .unwrap()
            .state_vector(problem.num_qubits())
            .unwrap();
        let pool = problem.enumerate_pool(2, PoolKind::SinglesDoubles).unwrap();
        for g in adapt_pool_gradients(&state, &pool, &h).unwrap() {
            assert!(g.abs() < 1e-8, "commutator expectation {g} on an eigenstate");
        }
    }

    #[test]
    fn adaptive_growth_descends_to_the_exact_energy() {
        let problem = toy_problem();
        let config = VqeConfig {
            adapt_epsilon: 1e-7,
            omega_g: 1e-9,
            ..VqeConfig::default()
        };
        let trace = run_adapt_vqe(&problem, &config, None).unwrap();
        assert!(trace.converged, "{trace:?}");
        assert_abs_diff_eq!(trace.final_energy, trace.exact_energy, epsilon = 1e-7);
        let mut previous = problem.reference_energy();
        for row in &trace.rows {
            assert!(row.energy < previous + 1e-12, "append failed to descend: {row:?}");
            previous = row.energy;
        }
    }

    #[test]
    fn oversized_pool_threshold_keeps_the_reference() {
        let problem = toy_problem();
        let config = VqeConfig { adapt_epsilon: 10.0, ..VqeConfig::default() };
        let trace = run_adapt_vqe(&problem, &config, None).unwrap();
        assert!(trace.converged);
        assert!(trace.rows.is_empty());
        assert_abs_diff_eq!(
            trace.final_energy,
            problem.reference_energy(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn parameter_budget_caps_growth() {
        let problem = toy_problem();
        let config = VqeConfig { adapt_epsilon: 1e-9, ..VqeConfig::default() };
        let trace = run_adapt_vqe(&problem, &config, Some(1)).unwrap();
        assert_eq!(trace.ansatz.len(), 1);
        assert_eq!(trace.rows.len(), 1);
        // One operator is the dominant double, which recovers most but not
        // all of the correlation energy.
        assert_eq!(trace.rows[0].selected.rank(), 2);
    }

    #[test]
    fn noisy_gradients_are_seeded_and_steer_the_stopping_test() {
        let problem = toy_problem();
        let config = VqeConfig {
            noise_sigma: 1e-3,
            omega_g: 1e-5,
            rng_seed: 7,
            ..VqeConfig::default()
        };
        let mut a1 = sd_ansatz(&problem);
        let t1 = run_vqe(&problem, &mut a1, &config).unwrap();
        let mut a2 = sd_ansatz(&problem);
        let t2 = run_vqe(&problem, &mut a2, &config).unwrap();
        assert_eq!(t1.final_energy.to_bits(), t2.final_energy.to_bits());
        assert_eq!(t1.gradient_evaluations, t2.gradient_evaluations);
        // At sigma well above omega_g the exact stationary point can no
        // longer be certified; the run either wanders longer or flags the
        // line search, but it must not silently "converge" on iterate one.
        assert!(t1.rows.len() > 1);
    }

    #[test]
    fn measurement_bounds_keep_their_ratio_and_scaling() {
        let problem = toy_problem();
        let h = problem.jw_hamiltonian().unwrap();
        let at = |n: usize| measurement_cost_estimates(&h, n, 1e-3).unwrap();
        let single = at(7);
        let double = at(14);
        assert_abs_diff_eq!(single.ratio, 0.75, epsilon = 0.0);
        assert_abs_diff_eq!(double.m_grad, 2.0 * single.m_grad, epsilon = 1e-9);
        assert_abs_diff_eq!(double.m_res, 2.0 * single.m_res, epsilon = 1e-9);
        assert!(single.m_grad > 0.0);
        assert!(measurement_cost_estimates(&h, 7, 0.0).is_err());
    }

    #[test]
    fn config_validation_rejects_bad_knobs() {
        let ok = VqeConfig::default();
        assert!(ok.validate().is_ok());
        assert!(VqeConfig { omega_g: 0.0, ..ok.clone() }.validate().is_err());
        assert!(VqeConfig { adapt_epsilon: -1.0, ..ok.clone() }.validate().is_err());
        assert!(VqeConfig { max_bfgs_iters: 0, ..ok.clone() }.validate().is_err());
        assert!(VqeConfig { noise_sigma: -0.1, ..ok }.validate().is_err());
    }
}
