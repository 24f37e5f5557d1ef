//! Quasi-Newton minimization with a strong-Wolfe line search.
//!
//! The inverse Hessian starts at the identity and is rebuilt by rank-two
//! updates; the line search brackets and zooms with cubic interpolation.
//! Every objective call returns both the value and the gradient, and the
//! evaluation counter includes line-search probes, so the reported totals
//! track how often a gradient vector was actually computed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Sufficient-decrease constant for the line search.
pub const ARMIJO_C1: f64 = 1e-4;
/// Curvature constant for the line search.
pub const CURVATURE_C2: f64 = 0.9;

const MAX_BRACKET: usize = 20;
const MAX_ZOOM: usize = 30;
const STEP_GROWTH: f64 = 2.0;
const MIN_INTERVAL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct BfgsConfig {
    /// Stop once the largest gradient component drops to this.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub c1: f64,
    pub c2: f64,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        BfgsConfig {
            grad_tol: 1e-5,
            max_iters: 200,
            c1: ARMIJO_C1,
            c2: CURVATURE_C2,
        }
    }
}

impl BfgsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::Config("gradient tolerance must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("need at least one iteration".into()));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::Config(format!(
                "line-search constants must satisfy 0 < c1 < c2 < 1, got {} and {}",
                self.c1, self.c2
            )));
        }
        Ok(())
    }
}

/// One accepted iterate.
#[derive(Debug, Clone)]
pub struct BfgsIterate {
    pub iteration: usize,
    pub value: f64,
    pub delta_value: f64,
    /// Objective calls so far, initial point and probes included.
    pub evaluations: usize,
    /// Euclidean norm of the gradient at this iterate.
    pub gradient_norm: f64,
    /// Largest-magnitude gradient component (the convergence test).
    pub gradient_max: f64,
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterates: Vec<BfgsIterate>,
    pub evaluations: usize,
    pub converged: bool,
    /// Set when the line search could not place a Wolfe point; the outcome
    /// still carries the best iterate found.
    pub line_search_failed: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimize `f`, starting from `x0`.
///
/// The objective may fail (propagated) and may be stochastic: the solver
/// only ever sees what the closure returns, so injected noise steers the
/// search and the stopping test alike.
pub fn minimize<F>(mut f: F, x0: &[f64], config: &BfgsConfig) -> Result<BfgsOutcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    config.validate()?;
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut value, grad) = f(x.as_slice())?;
    let mut grad = DVector::from_vec(grad);
    let mut evaluations = 1usize;

    let mut iterates = vec![BfgsIterate {
        iteration: 0,
        value,
        delta_value: 0.0,
        evaluations,
        gradient_norm: grad.norm(),
        gradient_max: inf_norm(grad.as_slice()),
    }];

    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut converged = inf_norm(grad.as_slice()) <= config.grad_tol;
    let mut line_search_failed = false;

    let mut iteration = 0;
    while !converged && iteration < config.max_iters {
        iteration += 1;
        let mut direction = -(&h_inv * &grad);
        let mut slope = direction.dot(&grad);
        if !(slope < 0.0) {
            // The curvature model has gone indefinite; fall back to
            // steepest descent for this step.
            h_inv = DMatrix::identity(n, n);
            direction = -grad.clone();
            slope = direction.dot(&grad);
            if !(slope < 0.0) {
                converged = true;
                break;
            }
        }

        let search = wolfe_search(
            &mut f,
            x.as_slice(),
            direction.as_slice(),
            value,
            slope,
            config,
            &mut evaluations,
        )?;
        let Some((alpha, new_value, new_grad)) = search else {
            line_search_failed = true;
            break;
        };
        let new_grad = DVector::from_vec(new_grad);

        let step = &direction * alpha;
        let grad_change = &new_grad - &grad;
        let sy = step.dot(&grad_change);
        // Strong Wolfe guarantees sy > 0 on exact arithmetic; skip the
        // update rather than corrupt the model when noise breaks that.
        if sy > f64::EPSILON * step.norm() * grad_change.norm() {
            let rho = 1.0 / sy;
            let hy = &h_inv * &grad_change;
            let yhy = grad_change.dot(&hy);
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T, expanded
            // so only matrix-vector products are needed.
            let ss = &step * step.transpose();
            let hy_s = &hy * step.transpose();
            h_inv += ss * (rho * (1.0 + rho * yhy)) - (&hy_s + hy_s.transpose()) * rho;
        }

        x += step;
        let delta = new_value - value;
        value = new_value;
        grad = new_grad;
        iterates.push(BfgsIterate {
            iteration,
            value,
            delta_value: delta,
            evaluations,
            gradient_norm: grad.norm(),
            gradient_max: inf_norm(grad.as_slice()),
        });
        converged = inf_norm(grad.as_slice()) <= config.grad_tol;
    }

    Ok(BfgsOutcome {
        x: x.as_slice().to_vec(),
        value,
        gradient: grad.as_slice().to_vec(),
        iterates,
        evaluations,
        converged,
        line_search_failed,
    })
}

/// Strong-Wolfe line search: bracket by doubling, then zoom.
///
/// Returns `Ok(None)` when no acceptable point was found within the probe
/// budget — the caller decides whether that is fatal.
#[allow(clippy::too_many_arguments)]
fn wolfe_search<F>(
    f: &mut F,
    x: &[f64],
    direction: &[f64],
    value0: f64,
    slope0: f64,
    config: &BfgsConfig,
    evaluations: &mut usize,
) -> Result<Option<(f64, f64, Vec<f64>)>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut probe = |alpha: f64, evals: &mut usize| -> Result<(f64, f64, Vec<f64>)> {
        let point: Vec<f64> = x
            .iter()
            .zip(direction)
            .map(|(xi, di)| xi + alpha * di)
            .collect();
        let (v, g) = f(&point)?;
        *evals += 1;
        let slope = g.iter().zip(direction).map(|(gi, di)| gi * di).sum::<f64>();
        Ok((v, slope, g))
    };

    let mut alpha_prev = 0.0;
    let mut value_prev = value0;
    let mut slope_prev = slope0;
    let mut alpha = 1.0;

    for i in 0..MAX_BRACKET {
        let (v, slope, g) = probe(alpha, evaluations)?;
        if v > value0 + config.c1 * alpha * slope0 || (i > 0 && v >= value_prev) {
            return zoom(
                f,
                x,
                direction,
                value0,
                slope0,
                (alpha_prev, value_prev, slope_prev),
                (alpha, v, slope),
                config,
                evaluations,
            );
        }
        if slope.abs() <= -config.c2 * slope0 {
            return Ok(Some((alpha, v, g)));
        }
        if slope >= 0.0 {
            return zoom(
                f,
                x,
                direction,
                value0,
                slope0,
                (alpha, v, slope),
                (alpha_prev, value_prev, slope_prev),
                config,
                evaluations,
            );
        }
        alpha_prev = alpha;
        value_prev = v;
        slope_prev = slope;
        alpha *= STEP_GROWTH;
    }
    Ok(None)
}

/// Interval refinement for the line search (values and slopes at both ends
/// known, minimum bracketed).
#[allow(clippy::too_many_arguments)]
fn zoom<F>(
    f: &mut F,
    x: &[f64],
    direction: &[f64],
    value0: f64,
    slope0: f64,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
    config: &BfgsConfig,
    evaluations: &mut usize,
) -> Result<Option<(f64, f64, Vec<f64>)>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    for _ in 0..MAX_ZOOM {
        let (alpha_lo, value_lo, slope_lo) = lo;
        let (alpha_hi, value_hi, slope_hi) = hi;
        if (alpha_hi - alpha_lo).abs() < MIN_INTERVAL {
            return Ok(None);
        }
        let mut alpha = cubic_minimum(alpha_lo, value_lo, slope_lo, alpha_hi, value_hi, slope_hi);
        let left = alpha_lo.min(alpha_hi);
        let right = alpha_lo.max(alpha_hi);
        let width = right - left;
        if !alpha.is_finite() || alpha <= left + 0.05 * width || alpha >= right - 0.05 * width {
            alpha = 0.5 * (left + right);
        }

        let point: Vec<f64> = x
            .iter()
            .zip(direction)
            .map(|(xi, di)| xi + alpha * di)
            .collect();
        let (v, g) = f(&point)?;
        *evaluations += 1;
        let slope = g.iter().zip(direction).map(|(gi, di)| gi * di).sum::<f64>();

        if v > value0 + config.c1 * alpha * slope0 || v >= value_lo {
            hi = (alpha, v, slope);
        } else {
            if slope.abs() <= -config.c2 * slope0 {
                return Ok(Some((alpha, v, g)));
            }
            if slope * (alpha_hi - alpha_lo) >= 0.0 {
                hi = lo;
            }
            lo = (alpha, v, slope);
        }
    }
    Ok(None)
}

/// Minimizer of the cubic interpolating two points with values and slopes.
fn cubic_minimum(a: f64, fa: f64, ga: f64, b: f64, fb: f64, gb: f64) -> f64 {
    let d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    let radicand = d1 * d1 - ga * gb;
    if radicand < 0.0 {
        return f64::NAN;
    }
    let d2 = radicand.sqrt() * (b - a).signum();
    b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2)
}
