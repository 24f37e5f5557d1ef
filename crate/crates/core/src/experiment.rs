//! Config-driven experiment runner behind the `pqe` binary.
//!
//! One TOML document describes a study — fixture, method, solver knobs,
//! noise model, output directory — and each command turns it into on-disk
//! artifacts: a per-iteration trace CSV plus a summary JSON for single
//! runs, an ensemble-statistics CSV for noise studies, and an aggregate
//! curve CSV for scans. Identical config and seeds produce byte-identical
//! files; every artifact lands through a write-then-rename so readers
//! never observe a half-written file. CSV files open with a `# schema:`
//! comment line and JSON documents carry a `schema` field, so downstream
//! tooling can tell at a glance which column layout it is holding.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::DuccAnsatz;
use crate::error::{Error, Result};
use crate::fci::{enumerate_sector, fci_solve_with, EigMethod};
use crate::molecule::{MolecularProblem, PoolKind};
use crate::pqe::{run_pqe, PqeConfig, PqeTrace};
use crate::spqe::{run_spqe, SelectionMode, SpqeConfig, SpqeTrace};
use crate::vqe::{run_adapt_vqe, run_vqe, AdaptTrace, VqeConfig, VqeTrace};

/// Only config documents with this `schema` value are accepted.
pub const CONFIG_SCHEMA: u32 = 1;

/// Largest determinant sector for which an exact reference energy is
/// computed on demand; beyond it the error columns are left empty.
const EXACT_FEASIBLE_DETS: usize = 1_000_000;

/// Sector size at which the exact solve switches from dense
/// diagonalization to the iterative eigensolver.
const DENSE_SOLVE_LIMIT: usize = 5000;

// ---------------------------------------------------------------------------
// Configuration document
// ---------------------------------------------------------------------------

/// Which solver a study drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pqe,
    Vqe,
    Spqe,
    AdaptVqe,
    Fci,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Pqe => "pqe",
            Method::Vqe => "vqe",
            Method::Spqe => "spqe",
            Method::AdaptVqe => "adapt-vqe",
            Method::Fci => "fci",
        }
    }
}

/// Operator pool named in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolChoice {
    SinglesDoubles,
    AllParticleHole,
    GeneralizedSinglesDoubles,
}

impl From<PoolChoice> for PoolKind {
    fn from(c: PoolChoice) -> PoolKind {
        match c {
            PoolChoice::SinglesDoubles => PoolKind::SinglesDoubles,
            PoolChoice::AllParticleHole => PoolKind::AllParticleHole,
            PoolChoice::GeneralizedSinglesDoubles => PoolKind::GeneralizedSinglesDoubles,
        }
    }
}

/// How the adaptive selector estimates importance weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeChoice {
    Exact,
    Sampled,
    FixedShots,
}

/// `[ansatz]` table: fixed-pool settings for `pqe`, `vqe`, and the
/// candidate pool for `adapt-vqe`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnsatzSection {
    pub pool: PoolChoice,
    pub max_rank: usize,
}

impl Default for AnsatzSection {
    fn default() -> Self {
        AnsatzSection {
            pool: PoolChoice::SinglesDoubles,
            max_rank: 2,
        }
    }
}

/// `[selection]` table: knobs for the `spqe` importance measurements.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionSection {
    /// Cumulative importance threshold.
    pub omega: f64,
    /// Evolution time step (atomic units).
    pub dt: f64,
    /// Product-formula steps per evolution.
    pub trotter_steps: usize,
    /// Weight estimation: exact amplitudes, a fixed shot budget, or the
    /// threshold-tied shot protocol.
    pub mode: ModeChoice,
    /// Shots per macro-iteration; required by (and only valid with)
    /// `mode = "sampled"`.
    pub shots: Option<u64>,
    /// Scan axis: thresholds to sweep in a `scan` over a single fixture
    /// list. Only meaningful for `method = "spqe"`.
    pub omegas: Vec<f64>,
}

impl Default for SelectionSection {
    fn default() -> Self {
        SelectionSection {
            omega: 1e-1,
            dt: 0.05,
            trotter_steps: 1,
            mode: ModeChoice::Exact,
            shots: None,
            omegas: Vec::new(),
        }
    }
}

/// `[solver]` table: iteration caps and convergence thresholds shared by
/// the iterative methods.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    /// Residual-norm convergence threshold for projective solves.
    pub residual_tol: f64,
    /// Largest-gradient-component threshold for variational solves.
    pub gradient_tol: f64,
    /// Pool-gradient-norm threshold at which adaptive growth stops.
    pub pool_tol: f64,
    /// Micro-iteration / optimizer-step cap.
    pub max_iters: usize,
    /// Macro-iteration cap for the adaptive methods.
    pub max_macro: usize,
    /// Extrapolation history depth for projective solves.
    pub diis_depth: usize,
    /// Optional hard cap on adaptive ansatz size.
    pub budget: Option<usize>,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            residual_tol: 1e-5,
            gradient_tol: 1e-5,
            pool_tol: 1e-3,
            max_iters: 100,
            max_macro: 50,
            diis_depth: 8,
            budget: None,
        }
    }
}

/// `[noise]` table: measurement-noise model and ensemble settings.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    /// Standard deviation of the Gaussian noise injected into residual
    /// elements (projective methods) or gradient components (variational
    /// methods). Zero runs are exact.
    pub sigma: f64,
    /// Ensemble size for `noise-study`; members run seeds
    /// `seed, seed+1, ..`.
    pub ensemble: usize,
    /// Base RNG seed; also drives the measurement stream of sampled
    /// selection modes.
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            sigma: 0.0,
            ensemble: 50,
            seed: 0,
        }
    }
}

/// `[output]` table.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Artifact directory, resolved against the working directory; the
    /// `--out` flag overrides it.
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
        }
    }
}

/// The whole study description, as parsed from one TOML document.
///
/// Unknown keys anywhere in the document are rejected, so typos fail the
/// load instead of silently running with defaults.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Config-document layout version; must equal [`CONFIG_SCHEMA`].
    #[serde(default = "config_schema_default")]
    pub schema: u32,
    /// Integral file for `run`, `noise-study`, and `fci`, resolved
    /// relative to the config file's directory.
    pub fixture: Option<PathBuf>,
    /// Integral files for `scan`, resolved the same way.
    #[serde(default)]
    pub fixtures: Vec<PathBuf>,
    pub method: Method,
    #[serde(default)]
    pub ansatz: AnsatzSection,
    #[serde(default)]
    pub selection: SelectionSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn config_schema_default() -> u32 {
    CONFIG_SCHEMA
}

/// A parsed config along with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    /// Hex digest of the config file bytes, recorded as provenance.
    pub config_sha256: String,
    /// Directory the config file lives in; relative fixture paths are
    /// resolved against it.
    pub base_dir: PathBuf,
}

/// Read and validate a config document.
pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| {
        Error::Config(format!("{}: config is not UTF-8: {e}", path.display()))
    })?;
    let config: ExperimentConfig = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if config.schema != CONFIG_SCHEMA {
        return Err(Error::Config(format!(
            "{}: unsupported config schema {} (this build reads schema {})",
            path.display(),
            config.schema,
            CONFIG_SCHEMA
        )));
    }
    let loaded = LoadedConfig {
        config_sha256: sha256_hex(text.as_bytes()),
        base_dir: path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."))
            .to_path_buf(),
        config,
    };
    loaded.validate_common()?;
    Ok(loaded)
}

impl LoadedConfig {
    fn resolve(&self, fixture: &Path) -> PathBuf {
        if fixture.is_absolute() {
            fixture.to_path_buf()
        } else {
            self.base_dir.join(fixture)
        }
    }

    /// Checks that hold regardless of which command runs the config.
    fn validate_common(&self) -> Result<()> {
        let c = &self.config;
        match (c.selection.mode, c.selection.shots) {
            (ModeChoice::Sampled, None) => {
                return Err(Error::Config(
                    "selection mode \"sampled\" needs `shots = <count>`".into(),
                ));
            }
            (ModeChoice::Sampled, Some(0)) => {
                return Err(Error::Config("`shots` must be at least 1".into()));
            }
            (ModeChoice::Sampled, Some(_)) => {}
            (_, Some(_)) => {
                return Err(Error::Config(
                    "`shots` is only meaningful with mode = \"sampled\"".into(),
                ));
            }
            (_, None) => {}
        }
        if !c.selection.omegas.is_empty() && c.method != Method::Spqe {
            return Err(Error::Config(
                "`omegas` is a selection-threshold scan axis and needs method = \"spqe\"".into(),
            ));
        }
        if c.noise.sigma < 0.0 || !c.noise.sigma.is_finite() {
            return Err(Error::Config(format!(
                "noise sigma must be finite and non-negative, got {}",
                c.noise.sigma
            )));
        }
        for fixture in self.fixture_list() {
            let path = self.resolve(&fixture);
            if !path.is_file() {
                return Err(Error::Config(format!(
                    "fixture not found: {} (resolved to {})",
                    fixture.display(),
                    path.display()
                )));
            }
        }
        Ok(())
    }

    fn fixture_list(&self) -> Vec<PathBuf> {
        let mut all = Vec::new();
        if let Some(f) = &self.config.fixture {
            all.push(f.clone());
        }
        all.extend(self.config.fixtures.iter().cloned());
        all
    }

    /// The single fixture required by `run`, `noise-study`, and `fci`.
    fn single_fixture(&self) -> Result<&Path> {
        if !self.config.fixtures.is_empty() {
            return Err(Error::Config(
                "this command takes `fixture = \"...\"` (singular); \
                 `fixtures = [...]` is for `scan`"
                    .into(),
            ));
        }
        self.config
            .fixture
            .as_deref()
            .ok_or_else(|| Error::Config("this command needs `fixture = \"...\"`".into()))
    }
}

/// Map a library error onto the process exit codes the CLI promises:
/// 1 for configuration and i/o problems the user can fix, 2 for failures
/// inside the numerics.
pub fn error_exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Parse { .. } | Error::Config(_) => 1,
        Error::TooManyQubits { .. } | Error::InvalidOperator(_) | Error::Domain(_) => 2,
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing: hashing, atomic writes, the exact-energy cache
// ---------------------------------------------------------------------------

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Write a file through a temporary sibling and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn load_problem(path: &Path) -> Result<(MolecularProblem, String)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let sha = sha256_hex(&bytes);
    let text = String::from_utf8(bytes).map_err(|e| {
        Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("not UTF-8: {e}"),
        }
    })?;
    let problem = MolecularProblem::from_fcidump_str(&text, &path.display().to_string())?;
    Ok((problem, sha))
}

const FCI_CACHE_SCHEMA: &str = "fci-cache/1";

#[derive(Serialize, Deserialize)]
struct FciCacheFile {
    schema: String,
    fixture_sha256: String,
    energy: f64,
}

fn solve_exact(problem: &MolecularProblem) -> Result<f64> {
    let method = if enumerate_sector(problem).len() <= DENSE_SOLVE_LIMIT {
        EigMethod::Dense
    } else {
        EigMethod::Davidson
    };
    let (spectrum, _) = fci_solve_with(problem, 1, method)?;
    Ok(spectrum[0])
}

/// Exact sector ground-state energy, memoized in a JSON file beside the
/// fixture (`x.fcidump` -> `x.fci.json`). The cache is keyed on the
/// fixture hash, so edited integrals invalidate it; an unwritable fixture
/// directory silently degrades to computing without caching.
pub fn cached_exact_energy(
    problem: &MolecularProblem,
    fixture_path: &Path,
    fixture_sha256: &str,
) -> Result<f64> {
    let cache_path = fixture_path.with_extension("fci.json");
    if let Ok(text) = fs::read_to_string(&cache_path) {
        if let Ok(cache) = serde_json::from_str::<FciCacheFile>(&text) {
            if cache.schema == FCI_CACHE_SCHEMA && cache.fixture_sha256 == fixture_sha256 {
                return Ok(cache.energy);
            }
        }
    }
    let energy = solve_exact(problem)?;
    let cache = FciCacheFile {
        schema: FCI_CACHE_SCHEMA.to_string(),
        fixture_sha256: fixture_sha256.to_string(),
        energy,
    };
    if let Ok(mut text) = serde_json::to_string_pretty(&cache) {
        text.push('\n');
        let _ = write_atomic(&cache_path, text.as_bytes());
    }
    Ok(energy)
}

/// Exact energy when the sector is small enough to solve on demand.
fn exact_energy_if_feasible(
    problem: &MolecularProblem,
    fixture_path: &Path,
    fixture_sha256: &str,
) -> Result<Option<f64>> {
    if enumerate_sector(problem).len() > EXACT_FEASIBLE_DETS {
        return Ok(None);
    }
    cached_exact_energy(problem, fixture_path, fixture_sha256).map(Some)
}

// ---------------------------------------------------------------------------
// One point: solve + structured record
// ---------------------------------------------------------------------------

enum Trace {
    Pqe(PqeTrace),
    Vqe(VqeTrace),
    Spqe(SpqeTrace),
    Adapt(AdaptTrace),
    Exact,
}

/// Everything a single solve produces: the structured trace plus the
/// summary document that describes it.
pub struct RunOutcome {
    trace: Trace,
    pub summary: Summary,
}

/// `summary.json` layout. Fields that a method does not produce are
/// serialized as `null`, so every summary carries the same key set.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema: String,
    pub method: Method,
    pub fixture: String,
    pub fixture_sha256: String,
    /// Final energy of the run (for `fci`, the exact energy itself).
    pub energy: f64,
    /// Exact sector ground-state energy, when small enough to compute.
    pub fci_energy: Option<f64>,
    /// Signed error `energy - fci_energy`.
    pub error_vs_fci: Option<f64>,
    pub reference_energy: f64,
    pub converged: bool,
    pub iterations: usize,
    pub n_parameters: usize,
    /// Operators of rank three or higher in the final ansatz (adaptive
    /// projective runs only).
    pub n_triples_plus: Option<usize>,
    /// Residual-vector evaluations (projective solves).
    pub residual_evaluations: Option<u64>,
    /// Gradient-vector evaluations, line-search probes included
    /// (variational solves).
    pub gradient_evaluations: Option<u64>,
    /// Residual element evaluations summed over micro-solves (adaptive
    /// projective runs).
    pub residual_element_evals: Option<u64>,
    /// Two-qubit gate estimate for the final circuit.
    pub cnot_estimate: Option<u64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub package_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub noise_sigma: f64,
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, Serialize)]
pub struct Thresholds {
    pub residual_tol: f64,
    pub gradient_tol: f64,
    pub pool_tol: f64,
    pub selection_omega: Option<f64>,
    pub selection_dt: Option<f64>,
}

struct PointSetup<'a> {
    loaded: &'a LoadedConfig,
    /// Fixture path exactly as the config wrote it (for the summary).
    fixture_label: String,
    fixture_path: PathBuf,
    seed: u64,
    /// Selection-threshold override for scan points.
    omega: Option<f64>,
}

fn provenance(setup: &PointSetup<'_>) -> Provenance {
    let c = &setup.loaded.config;
    let spqe = c.method == Method::Spqe;
    Provenance {
        package_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: setup.loaded.config_sha256.clone(),
        seed: setup.seed,
        noise_sigma: c.noise.sigma,
        thresholds: Thresholds {
            residual_tol: c.solver.residual_tol,
            gradient_tol: c.solver.gradient_tol,
            pool_tol: c.solver.pool_tol,
            selection_omega: spqe.then(|| setup.omega.unwrap_or(c.selection.omega)),
            selection_dt: spqe.then_some(c.selection.dt),
        },
    }
}

fn pqe_config(c: &ExperimentConfig, seed: u64) -> PqeConfig {
    PqeConfig {
        omega_r: c.solver.residual_tol,
        max_micro: c.solver.max_iters,
        diis_depth: c.solver.diis_depth,
        diis_start: 2,
        noise_sigma: c.noise.sigma,
        rng_seed: seed,
    }
}

fn vqe_config(c: &ExperimentConfig, seed: u64) -> VqeConfig {
    VqeConfig {
        omega_g: c.solver.gradient_tol,
        adapt_epsilon: c.solver.pool_tol,
        max_bfgs_iters: c.solver.max_iters,
        noise_sigma: c.noise.sigma,
        rng_seed: seed,
        pool_kind: c.ansatz.pool.into(),
    }
}

fn fixed_ansatz(problem: &MolecularProblem, c: &ExperimentConfig) -> Result<DuccAnsatz> {
    let pool = problem.enumerate_pool(c.ansatz.max_rank, c.ansatz.pool.into())?;
    DuccAnsatz::from_pool(problem.num_qubits(), problem.reference(), &pool)
}

/// Solve one (fixture, method) point and assemble its records.
fn run_point(setup: &PointSetup<'_>) -> Result<RunOutcome> {
    let c = &setup.loaded.config;
    let (problem, fixture_sha) = load_problem(&setup.fixture_path)?;
    let reference_energy = problem.reference_energy();

    let mut summary = Summary {
        schema: "pqe-summary/1".to_string(),
        method: c.method,
        fixture: setup.fixture_label.clone(),
        fixture_sha256: fixture_sha.clone(),
        energy: 0.0,
        fci_energy: None,
        error_vs_fci: None,
        reference_energy,
        converged: false,
        iterations: 0,
        n_parameters: 0,
        n_triples_plus: None,
        residual_evaluations: None,
        gradient_evaluations: None,
        residual_element_evals: None,
        cnot_estimate: None,
        provenance: provenance(setup),
    };

    let trace = match c.method {
        Method::Fci => {
            let energy = cached_exact_energy(&problem, &setup.fixture_path, &fixture_sha)?;
            summary.energy = energy;
            summary.fci_energy = Some(energy);
            summary.error_vs_fci = Some(0.0);
            summary.converged = true;
            Trace::Exact
        }
        Method::Pqe => {
            let mut ansatz = fixed_ansatz(&problem, c)?;
            let trace = run_pqe(&problem, &mut ansatz, &pqe_config(c, setup.seed))?;
            summary.energy = trace.final_energy;
            summary.converged = trace.converged;
            summary.iterations = trace.rows.len();
            summary.n_parameters = ansatz.amplitudes().len();
            summary.residual_evaluations = Some(trace.residual_evaluations as u64);
            summary.cnot_estimate = Some(ansatz.estimate_cnots());
            summary.fci_energy =
                exact_energy_if_feasible(&problem, &setup.fixture_path, &fixture_sha)?;
            Trace::Pqe(trace)
        }
        Method::Vqe => {
            let mut ansatz = fixed_ansatz(&problem, c)?;
            let trace = run_vqe(&problem, &mut ansatz, &vqe_config(c, setup.seed))?;
            summary.energy = trace.final_energy;
            summary.converged = trace.converged;
            summary.iterations = trace.rows.len();
            summary.n_parameters = ansatz.amplitudes().len();
            summary.gradient_evaluations = Some(trace.gradient_evaluations as u64);
            summary.cnot_estimate = Some(ansatz.estimate_cnots());
            summary.fci_energy =
                exact_energy_if_feasible(&problem, &setup.fixture_path, &fixture_sha)?;
            Trace::Vqe(trace)
        }
        Method::Spqe => {
            let mode = match c.selection.mode {
                ModeChoice::Exact => SelectionMode::Exact,
                ModeChoice::Sampled => SelectionMode::Sampled {
                    shots: c.selection.shots.unwrap_or(0),
                },
                ModeChoice::FixedShots => SelectionMode::FixedShots,
            };
            let config = SpqeConfig {
                omega: setup.omega.unwrap_or(c.selection.omega),
                dt: c.selection.dt,
                trotter_steps: c.selection.trotter_steps,
                mode,
                micro: pqe_config(c, setup.seed),
                max_macro: c.solver.max_macro,
                rng_seed: setup.seed,
            };
            let trace = run_spqe(&problem, &config)?;
            summary.energy = trace.final_energy;
            summary.fci_energy = Some(trace.exact_energy);
            summary.converged = trace.converged;
            summary.iterations = trace.rows.len();
            summary.n_parameters = trace.ansatz.amplitudes().len();
            summary.n_triples_plus = Some(trace.rows.last().map_or(0, |r| r.n_tplus));
            summary.residual_element_evals = Some(trace.residual_element_evals);
            summary.cnot_estimate = Some(trace.ansatz.estimate_cnots());
            Trace::Spqe(trace)
        }
        Method::AdaptVqe => {
            let trace = run_adapt_vqe(&problem, &vqe_config(c, setup.seed), c.solver.budget)?;
            summary.energy = trace.final_energy;
            summary.fci_energy = Some(trace.exact_energy);
            summary.converged = trace.converged;
            summary.iterations = trace.rows.len();
            summary.n_parameters = trace.ansatz.amplitudes().len();
            summary.gradient_evaluations = Some(trace.gradient_evaluations as u64);
            summary.cnot_estimate = Some(trace.ansatz.estimate_cnots());
            Trace::Adapt(trace)
        }
    };

    if let Some(exact) = summary.fci_energy {
        summary.error_vs_fci = Some(summary.energy - exact);
    }
    Ok(RunOutcome { trace, summary })
}

// ---------------------------------------------------------------------------
// Trace rendering
// ---------------------------------------------------------------------------

fn excitation_label(holes: &[usize], particles: &[usize]) -> String {
    let join = |v: &[usize]| {
        v.iter()
            .map(|q| q.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    format!("{}->{}", join(holes), join(particles))
}

/// Render a trace as CSV text; `fci` runs have no trace and return `None`.
fn trace_csv(trace: &Trace) -> Option<String> {
    let mut s = String::new();
    match trace {
        Trace::Exact => return None,
        Trace::Pqe(t) => {
            s.push_str("# schema: pqe-trace/1\n");
            s.push_str("iteration,energy,delta_energy,residual_evaluations,residual_norm\n");
            for r in &t.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    r.iteration, r.energy, r.delta_energy, r.residual_evaluations, r.residual_norm
                );
            }
        }
        Trace::Vqe(t) => {
            s.push_str("# schema: vqe-trace/1\n");
            s.push_str("iteration,energy,delta_energy,gradient_evaluations,gradient_norm\n");
            for r in &t.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    r.iteration, r.energy, r.delta_energy, r.gradient_evaluations, r.gradient_norm
                );
            }
        }
        Trace::Spqe(t) => {
            s.push_str("# schema: spqe-trace/1\n");
            s.push_str(
                "macro_iter,n_parameters,n_triples_plus,energy,error_vs_exact,\
                 residual_norm,residual_element_evals,cnot_estimate\n",
            );
            for r in &t.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    r.macro_iter,
                    r.n_par,
                    r.n_tplus,
                    r.energy,
                    r.error_vs_exact,
                    r.residual_norm,
                    r.residual_element_evals,
                    r.cnot_estimate
                );
            }
        }
        Trace::Adapt(t) => {
            s.push_str("# schema: adapt-trace/1\n");
            s.push_str(
                "macro_iter,n_parameters,energy,error_vs_exact,pool_gradient_norm,\
                 selected,selected_gradient,gradient_evaluations\n",
            );
            for r in &t.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    r.macro_iter,
                    r.n_par,
                    r.energy,
                    r.error_vs_exact,
                    r.pool_gradient_norm,
                    excitation_label(r.selected.holes(), r.selected.particles()),
                    r.selected_gradient,
                    r.gradient_evaluations
                );
            }
        }
    }
    Some(s)
}

/// `(energy error, solver norm)` per iteration, for ensemble statistics.
fn error_norm_rows(trace: &Trace, exact: f64) -> Vec<(f64, f64)> {
    match trace {
        Trace::Exact => Vec::new(),
        Trace::Pqe(t) => t
            .rows
            .iter()
            .map(|r| (r.energy - exact, r.residual_norm))
            .collect(),
        Trace::Vqe(t) => t
            .rows
            .iter()
            .map(|r| (r.energy - exact, r.gradient_norm))
            .collect(),
        Trace::Spqe(t) => t
            .rows
            .iter()
            .map(|r| (r.error_vs_exact, r.residual_norm))
            .collect(),
        Trace::Adapt(t) => t
            .rows
            .iter()
            .map(|r| (r.error_vs_exact, r.pool_gradient_norm))
            .collect(),
    }
}

fn summary_json(summary: &Summary) -> Result<String> {
    let mut text = serde_json::to_string_pretty(summary)
        .map_err(|e| Error::Domain(format!("serializing summary: {e}")))?;
    text.push('\n');
    Ok(text)
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Flag overrides shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl CliOverrides {
    fn out_dir(&self, config: &ExperimentConfig) -> PathBuf {
        self.out.clone().unwrap_or_else(|| config.output.dir.clone())
    }

    fn seed(&self, config: &ExperimentConfig) -> u64 {
        self.seed.unwrap_or(config.noise.seed)
    }
}

/// What `run` leaves behind.
pub struct RunReport {
    pub out_dir: PathBuf,
    pub summary: Summary,
}

fn point_setup<'a>(
    loaded: &'a LoadedConfig,
    fixture: &Path,
    seed: u64,
    omega: Option<f64>,
) -> PointSetup<'a> {
    PointSetup {
        loaded,
        fixture_label: fixture.display().to_string(),
        fixture_path: loaded.resolve(fixture),
        seed,
        omega,
    }
}

/// Solve the configured fixture once and write `trace.csv` (iterative
/// methods) plus `summary.json` into the output directory.
pub fn cmd_run(loaded: &LoadedConfig, overrides: &CliOverrides) -> Result<RunReport> {
    let fixture = loaded.single_fixture()?.to_path_buf();
    let seed = overrides.seed(&loaded.config);
    let outcome = run_point(&point_setup(loaded, &fixture, seed, None))?;

    let out_dir = overrides.out_dir(&loaded.config);
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    if let Some(csv) = trace_csv(&outcome.trace) {
        write_atomic(&out_dir.join("trace.csv"), csv.as_bytes())?;
    }
    write_atomic(
        &out_dir.join("summary.json"),
        summary_json(&outcome.summary)?.as_bytes(),
    )?;
    Ok(RunReport {
        out_dir,
        summary: outcome.summary,
    })
}

/// Compute (or reuse) the exact sector energy of the configured fixture
/// and write a summary document for it.
pub fn cmd_fci(loaded: &LoadedConfig, overrides: &CliOverrides) -> Result<RunReport> {
    let fixture = loaded.single_fixture()?.to_path_buf();
    let seed = overrides.seed(&loaded.config);
    let exact_loaded = LoadedConfig {
        config: ExperimentConfig {
            method: Method::Fci,
            ..loaded.config.clone()
        },
        config_sha256: loaded.config_sha256.clone(),
        base_dir: loaded.base_dir.clone(),
    };
    let outcome = run_point(&point_setup(&exact_loaded, &fixture, seed, None))?;

    let out_dir = overrides.out_dir(&loaded.config);
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    write_atomic(
        &out_dir.join("summary.json"),
        summary_json(&outcome.summary)?.as_bytes(),
    )?;
    Ok(RunReport {
        out_dir,
        summary: outcome.summary,
    })
}

/// One iteration row of the ensemble statistics.
#[derive(Debug, Clone)]
pub struct EnsembleRow {
    pub iteration: usize,
    /// Members whose trace reaches this iteration.
    pub samples: usize,
    pub mean_energy_error: f64,
    pub std_energy_error: f64,
    pub mean_norm: f64,
    pub std_norm: f64,
}

/// What `noise-study` leaves behind.
pub struct NoiseReport {
    pub out_dir: PathBuf,
    pub rows: Vec<EnsembleRow>,
    pub final_error_mean: f64,
    pub final_error_std: f64,
}

#[derive(Serialize)]
struct NoiseSummary {
    schema: String,
    method: Method,
    fixture: String,
    fixture_sha256: String,
    sigma: f64,
    ensemble: usize,
    seed_base: u64,
    fci_energy: f64,
    final_energy_mean: f64,
    final_energy_std: f64,
    final_error_mean: f64,
    final_error_std: f64,
    provenance: Provenance,
}

/// Population mean and standard deviation. Bitwise-identical samples
/// return an exactly zero spread, so exact ensembles report zero variance
/// instead of accumulated rounding dust.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let first = values[0];
    if values.iter().all(|v| v.to_bits() == first.to_bits()) {
        return (first, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Run an ensemble of identically configured solves differing only in
/// seed, and write per-iteration mean/std statistics of the energy error
/// and the solver's norm.
pub fn cmd_noise_study(loaded: &LoadedConfig, overrides: &CliOverrides) -> Result<NoiseReport> {
    use rayon::prelude::*;

    let c = &loaded.config;
    if c.method == Method::Fci {
        return Err(Error::Config(
            "noise-study needs an iterative method, not \"fci\"".into(),
        ));
    }
    if c.noise.ensemble < 2 {
        return Err(Error::Config(format!(
            "noise-study needs `ensemble >= 2`, got {}",
            c.noise.ensemble
        )));
    }
    let fixture = loaded.single_fixture()?.to_path_buf();
    let seed_base = overrides.seed(&loaded.config);

    // The error columns need the exact energy up front; a sector too big
    // to solve exactly has no error to study.
    let fixture_path = loaded.resolve(&fixture);
    let (problem, fixture_sha) = load_problem(&fixture_path)?;
    let exact = exact_energy_if_feasible(&problem, &fixture_path, &fixture_sha)?.ok_or_else(
        || {
            Error::Config(format!(
                "noise-study needs an exactly solvable sector; {} exceeds {} determinants",
                fixture.display(),
                EXACT_FEASIBLE_DETS
            ))
        },
    )?;

    let outcomes: Vec<Result<RunOutcome>> = (0..c.noise.ensemble)
        .into_par_iter()
        .map(|k| run_point(&point_setup(loaded, &fixture, seed_base + k as u64, None)))
        .collect();
    let mut members = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        members.push(outcome?);
    }

    let member_rows: Vec<Vec<(f64, f64)>> = members
        .iter()
        .map(|m| error_norm_rows(&m.trace, exact))
        .collect();
    let depth = member_rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut rows = Vec::with_capacity(depth);
    for i in 0..depth {
        let errors: Vec<f64> = member_rows
            .iter()
            .filter_map(|m| m.get(i).map(|r| r.0))
            .collect();
        let norms: Vec<f64> = member_rows
            .iter()
            .filter_map(|m| m.get(i).map(|r| r.1))
            .collect();
        let (mean_e, std_e) = mean_std(&errors);
        let (mean_n, std_n) = mean_std(&norms);
        rows.push(EnsembleRow {
            iteration: i + 1,
            samples: errors.len(),
            mean_energy_error: mean_e,
            std_energy_error: std_e,
            mean_norm: mean_n,
            std_norm: std_n,
        });
    }

    let finals: Vec<f64> = members.iter().map(|m| m.summary.energy).collect();
    let (final_mean, final_std) = mean_std(&finals);
    let final_errors: Vec<f64> = finals.iter().map(|e| e - exact).collect();
    let (final_error_mean, final_error_std) = mean_std(&final_errors);

    let mut csv = String::from("# schema: noise-ensemble/1\n");
    csv.push_str("iteration,samples,mean_energy_error,std_energy_error,mean_norm,std_norm\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.iteration, r.samples, r.mean_energy_error, r.std_energy_error, r.mean_norm, r.std_norm
        );
    }

    let summary = NoiseSummary {
        schema: "pqe-noise-summary/1".to_string(),
        method: c.method,
        fixture: fixture.display().to_string(),
        fixture_sha256: fixture_sha,
        sigma: c.noise.sigma,
        ensemble: c.noise.ensemble,
        seed_base,
        fci_energy: exact,
        final_energy_mean: final_mean,
        final_energy_std: final_std,
        final_error_mean,
        final_error_std,
        provenance: provenance(&point_setup(loaded, &fixture, seed_base, None)),
    };
    let mut summary_text = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::Domain(format!("serializing summary: {e}")))?;
    summary_text.push('\n');

    let out_dir = overrides.out_dir(&loaded.config);
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    write_atomic(&out_dir.join("ensemble.csv"), csv.as_bytes())?;
    write_atomic(&out_dir.join("summary.json"), summary_text.as_bytes())?;
    Ok(NoiseReport {
        out_dir,
        rows,
        final_error_mean,
        final_error_std,
    })
}

/// Outcome of one scan point, as recorded in the curve CSV.
#[derive(Debug, Clone, Serialize)]
pub struct ScanPointRecord {
    pub label: String,
    pub fixture: String,
    pub omega: Option<f64>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// What `scan` leaves behind.
pub struct ScanReport {
    pub out_dir: PathBuf,
    pub points: Vec<ScanPointRecord>,
    pub n_failed: usize,
}

#[derive(Serialize)]
struct ScanSummary {
    schema: String,
    method: Method,
    n_points: usize,
    n_failed: usize,
    points: Vec<ScanPointRecord>,
    provenance: Provenance,
}

fn point_label(fixture: &Path, omega: Option<f64>) -> String {
    let stem = fixture
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| fixture.display().to_string());
    match omega {
        Some(w) => format!("{stem}_omega{w}"),
        None => stem,
    }
}

/// Run every configured point (fixtures x threshold values), write each
/// point's artifacts under `points/<label>/`, and aggregate the finals
/// into `curve.csv`. A failing point is recorded and the rest of the scan
/// continues.
pub fn cmd_scan(loaded: &LoadedConfig, overrides: &CliOverrides) -> Result<ScanReport> {
    use rayon::prelude::*;

    let c = &loaded.config;
    if c.fixtures.is_empty() {
        return Err(Error::Config(
            "scan needs `fixtures = [\"...\", ...]` (plural)".into(),
        ));
    }
    if c.fixture.is_some() {
        return Err(Error::Config(
            "scan takes `fixtures = [...]`; drop the singular `fixture` key".into(),
        ));
    }
    let seed = overrides.seed(&loaded.config);
    let omegas: Vec<Option<f64>> = if c.selection.omegas.is_empty() {
        vec![None]
    } else {
        c.selection.omegas.iter().copied().map(Some).collect()
    };

    let mut specs = Vec::new();
    for fixture in &c.fixtures {
        for omega in &omegas {
            specs.push((fixture.clone(), *omega));
        }
    }

    let out_dir = overrides.out_dir(&loaded.config);
    let points_dir = out_dir.join("points");
    fs::create_dir_all(&points_dir).map_err(|e| Error::io(&points_dir, e))?;

    let results: Vec<(ScanPointRecord, Option<Summary>)> = specs
        .par_iter()
        .map(|(fixture, omega)| {
            let label = point_label(fixture, *omega);
            let mut record = ScanPointRecord {
                label: label.clone(),
                fixture: fixture.display().to_string(),
                omega: *omega,
                status: "ok".to_string(),
                message: None,
            };
            let point = (|| -> Result<Summary> {
                let outcome = run_point(&point_setup(loaded, fixture, seed, *omega))?;
                let dir = points_dir.join(&label);
                fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                if let Some(csv) = trace_csv(&outcome.trace) {
                    write_atomic(&dir.join("trace.csv"), csv.as_bytes())?;
                }
                write_atomic(
                    &dir.join("summary.json"),
                    summary_json(&outcome.summary)?.as_bytes(),
                )?;
                Ok(outcome.summary)
            })();
            match point {
                Ok(summary) => (record, Some(summary)),
                Err(e) => {
                    record.status = "failed".to_string();
                    record.message = Some(e.to_string());
                    (record, None)
                }
            }
        })
        .collect();

    let mut csv = String::from("# schema: scan-curve/1\n");
    csv.push_str(
        "label,fixture,omega,status,energy,fci_energy,error_vs_fci,\
         n_parameters,evaluations,cnot_estimate\n",
    );
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let opt_u = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (record, summary) in &results {
        match summary {
            Some(s) => {
                // The evaluation column carries the method's own work
                // counter: residual evaluations for pqe, gradient
                // evaluations for the variational methods, residual
                // element evaluations for spqe.
                let evals = s
                    .residual_element_evals
                    .or(s.residual_evaluations)
                    .or(s.gradient_evaluations);
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{}",
                    record.label,
                    record.fixture,
                    opt(record.omega),
                    record.status,
                    s.energy,
                    opt(s.fci_energy),
                    opt(s.error_vs_fci),
                    s.n_parameters,
                    opt_u(evals),
                    opt_u(s.cnot_estimate)
                );
            }
            None => {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},,,,,,",
                    record.label,
                    record.fixture,
                    opt(record.omega),
                    record.status
                );
            }
        }
    }

    let points: Vec<ScanPointRecord> = results.iter().map(|(r, _)| r.clone()).collect();
    let n_failed = points.iter().filter(|p| p.status == "failed").count();
    let summary = ScanSummary {
        schema: "pqe-scan-summary/1".to_string(),
        method: c.method,
        n_points: points.len(),
        n_failed,
        points: points.clone(),
        provenance: provenance(&point_setup(loaded, &c.fixtures[0], seed, None)),
    };
    let mut summary_text = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::Domain(format!("serializing summary: {e}")))?;
    summary_text.push('\n');

    write_atomic(&out_dir.join("curve.csv"), csv.as_bytes())?;
    write_atomic(&out_dir.join("summary.json"), summary_text.as_bytes())?;
    Ok(ScanReport {
        out_dir,
        points,
        n_failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn fixture_source(name: &str) -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("../../fixtures")
            .join(format!("{name}.fcidump"))
    }

    /// Copy a fixture into `dir` so cache files land in scratch space.
    fn stage_fixture(dir: &Path, name: &str) -> PathBuf {
        let dest = dir.join(format!("{name}.fcidump"));
        fs::copy(fixture_source(name), &dest).expect("staging fixture");
        dest
    }

    fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
        let path = dir.join(name);
        fs::write(&path, body).expect("writing config");
        path
    }

    fn load(dir: &Path, name: &str, body: &str) -> LoadedConfig {
        load_config(&write_config(dir, name, body)).expect("config should load")
    }

    #[test]
    fn config_rejects_typos_bad_modes_and_wrong_schema() {
        let dir = tempfile::tempdir().unwrap();
        stage_fixture(dir.path(), "h2_0.75");

        let unknown = load_config(&write_config(
            dir.path(),
            "a.toml",
            "fixture = \"h2_0.75.fcidump\"\nmethod = \"pqe\"\nmax_rnak = 2\n",
        ));
        assert!(unknown.is_err(), "unknown key must fail the load");

        let sampled_without_shots = load_config(&write_config(
            dir.path(),
            "b.toml",
            "fixture = \"h2_0.75.fcidump\"\nmethod = \"spqe\"\n\
             [selection]\nmode = \"sampled\"\n",
        ));
        let msg = sampled_without_shots.unwrap_err().to_string();
        assert!(msg.contains("shots"), "got: {msg}");

        let stray_shots = load_config(&write_config(
            dir.path(),
            "c.toml",
            "fixture = \"h2_0.75.fcidump\"\nmethod = \"spqe\"\n\
             [selection]\nmode = \"exact\"\nshots = 100\n",
        ));
        assert!(stray_shots.is_err(), "shots without sampled mode must fail");

        let wrong_schema = load_config(&write_config(
            dir.path(),
            "d.toml",
            "schema = 99\nfixture = \"h2_0.75.fcidump\"\nmethod = \"pqe\"\n",
        ));
        let msg = wrong_schema.unwrap_err().to_string();
        assert!(msg.contains("schema"), "got: {msg}");

        let missing = load_config(&write_config(
            dir.path(),
            "e.toml",
            "fixture = \"nope.fcidump\"\nmethod = \"pqe\"\n",
        ));
        let msg = missing.unwrap_err().to_string();
        assert!(msg.contains("nope.fcidump"), "got: {msg}");
        assert_eq!(error_exit_code(&Error::Config("x".into())), 1);
        assert_eq!(error_exit_code(&Error::Domain("x".into())), 2);
    }

    #[test]
    fn run_writes_deterministic_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        stage_fixture(dir.path(), "h2_0.75");
        let loaded = load(
            dir.path(),
            "run.toml",
            "fixture = \"h2_0.75.fcidump\"\nmethod = \"pqe\"\n",
        );

        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        for out in [&out_a, &out_b] {
            let overrides = CliOverrides {
                out: Some(out.clone()),
                seed: None,
            };
            let report = cmd_run(&loaded, &overrides).expect("run should succeed");
            let exact = report.summary.fci_energy.expect("tiny sector is feasible");
            assert!(
                (report.summary.energy - exact).abs() < 2e-3,
                "run landed {} from the exact energy",
                report.summary.energy - exact
            );
        }
        for name in ["trace.csv", "summary.json"] {
            let a = fs::read(out_a.join(name)).unwrap();
            let b = fs::read(out_b.join(name)).unwrap();
            assert_eq!(a, b, "{name} must be byte-identical across reruns");
        }
        let trace = fs::read_to_string(out_a.join("trace.csv")).unwrap();
        assert!(trace.starts_with("# schema: pqe-trace/1\n"));
        let iters: Vec<usize> = trace
            .lines()
            .skip(2)
            .map(|l| l.split(',').next().unwrap().parse().unwrap())
            .collect();
        assert!(!iters.is_empty());
        assert!(
            iters.windows(2).all(|w| w[1] == w[0] + 1),
            "iteration column must count up from 1: {iters:?}"
        );
        assert_eq!(iters[0], 1);
    }

    #[test]
    fn exact_energy_cache_is_reused_and_keyed_on_content() {
        let dir = tempfile::tempdir().unwrap();
        let fixture = stage_fixture(dir.path(), "h2_0.75");
        let (problem, sha) = load_problem(&fixture).unwrap();

        let first = cached_exact_energy(&problem, &fixture, &sha).unwrap();
        let cache_path = fixture.with_extension("fci.json");
        assert!(cache_path.is_file(), "solve should leave a cache file");

        // A matching hash short-circuits the solve: plant a sentinel value
        // and watch it come back.
        let planted = FciCacheFile {
            schema: FCI_CACHE_SCHEMA.to_string(),
            fixture_sha256: sha.clone(),
            energy: 42.0,
        };
        fs::write(&cache_path, serde_json::to_string(&planted).unwrap()).unwrap();
        assert_eq!(cached_exact_energy(&problem, &fixture, &sha).unwrap(), 42.0);

        // A stale hash forces a recompute and rewrites the entry.
        let stale = FciCacheFile {
            schema: FCI_CACHE_SCHEMA.to_string(),
            fixture_sha256: "0".repeat(64),
            energy: 42.0,
        };
        fs::write(&cache_path, serde_json::to_string(&stale).unwrap()).unwrap();
        let recomputed = cached_exact_energy(&problem, &fixture, &sha).unwrap();
        assert!((recomputed - first).abs() < 1e-12);
        let rewritten: FciCacheFile =
            serde_json::from_str(&fs::read_to_string(&cache_path).unwrap()).unwrap();
        assert_eq!(rewritten.fixture_sha256, sha);
    }

    #[test]
    fn exact_ensembles_report_zero_variance() {
        let dir = tempfile::tempdir().unwrap();
        stage_fixture(dir.path(), "h2_0.75");
        let loaded = load(
            dir.path(),
            "noise.toml",
            "fixture = \"h2_0.75.fcidump\"\nmethod = \"pqe\"\n\
             [noise]\nsigma = 0.0\nensemble = 3\n",
        );
        let overrides = CliOverrides {
            out: Some(dir.path().join("out")),
            seed: None,
        };
        let report = cmd_noise_study(&loaded, &overrides).expect("study should run");
        assert!(!report.rows.is_empty());
        for row in &report.rows {
            assert_eq!(row.samples, 3);
            assert_eq!(row.std_energy_error, 0.0, "exact runs must not scatter");
            assert_eq!(row.std_norm, 0.0);
        }
        assert_eq!(report.final_error_std, 0.0);

        let csv = fs::read_to_string(dir.path().join("out/ensemble.csv")).unwrap();
        assert!(csv.starts_with("# schema: noise-ensemble/1\n"));
        for line in csv.lines().skip(2) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols[3], "0", "std column must be exactly zero: {line}");
            assert_eq!(cols[5], "0", "std column must be exactly zero: {line}");
        }

        let noisy = load(
            dir.path(),
            "noisy.toml",
            "fixture = \"h2_0.75.fcidump\"\nmethod = \"pqe\"\n\
             [noise]\nsigma = 1e-4\nensemble = 4\n",
        );
        let overrides = CliOverrides {
            out: Some(dir.path().join("noisy_out")),
            seed: None,
        };
        let noisy_report = cmd_noise_study(&noisy, &overrides).unwrap();
        assert!(
            noisy_report.rows.iter().any(|r| r.std_energy_error > 0.0),
            "a noisy ensemble should scatter somewhere"
        );
    }

    #[test]
    fn scan_continues_past_a_broken_point() {
        let dir = tempfile::tempdir().unwrap();
        stage_fixture(dir.path(), "h2_0.75");
        // Present but unparseable: passes the existence check, fails the run.
        fs::write(dir.path().join("broken.fcidump"), "not an integral file\n").unwrap();
        let loaded = load(
            dir.path(),
            "scan.toml",
            "fixtures = [\"h2_0.75.fcidump\", \"broken.fcidump\"]\nmethod = \"pqe\"\n",
        );
        let overrides = CliOverrides {
            out: Some(dir.path().join("out")),
            seed: None,
        };
        let report = cmd_scan(&loaded, &overrides).expect("scan itself should survive");
        assert_eq!(report.points.len(), 2);
        assert_eq!(report.n_failed, 1);
        assert_eq!(report.points[0].status, "ok");
        assert_eq!(report.points[1].status, "failed");
        assert!(report.points[1].message.is_some());

        let curve = fs::read_to_string(dir.path().join("out/curve.csv")).unwrap();
        assert!(curve.starts_with("# schema: scan-curve/1\n"));
        let rows: Vec<&str> = curve.lines().skip(2).collect();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].contains(",ok,"));
        assert!(rows[1].contains(",failed,"));
        assert!(
            dir.path().join("out/points/h2_0.75/summary.json").is_file(),
            "the healthy point must still leave artifacts"
        );
    }

    #[test]
    fn threshold_scans_label_points_by_omega() {
        let dir = tempfile::tempdir().unwrap();
        stage_fixture(dir.path(), "h2_0.75");
        let loaded = load(
            dir.path(),
            "scan.toml",
            "fixtures = [\"h2_0.75.fcidump\"]\nmethod = \"spqe\"\n\
             [selection]\nomegas = [0.1, 0.5]\n",
        );
        let overrides = CliOverrides {
            out: Some(dir.path().join("out")),
            seed: None,
        };
        let report = cmd_scan(&loaded, &overrides).unwrap();
        assert_eq!(report.n_failed, 0);
        let labels: Vec<&str> = report.points.iter().map(|p| p.label.as_str()).collect();
        assert_eq!(labels, ["h2_0.75_omega0.1", "h2_0.75_omega0.5"]);
        for label in labels {
            assert!(dir
                .path()
                .join(format!("out/points/{label}/summary.json"))
                .is_file());
        }
    }
}
