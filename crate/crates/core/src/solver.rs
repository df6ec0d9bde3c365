//! Maximum-entropy solves through the convex dual
//!
//! ```text
//! D(λ) = log Z(λ) + Σ_j λ_j b_j,    Z(λ) = Σ_i w_i exp(−Σ_j λ_j h_j(x_i))
//! ```
//!
//! whose gradient is b − E_λ[h] and whose Hessian is Cov_λ(h). Equality
//! problems are solved by damped Newton; interval targets add an active-set
//! outer loop on top.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{
    log_sum_exp_weighted, BoundState, ConstraintFunction, Diagnostics, MaxEntSolution, Problem,
    Target,
};

pub const DISCRETE_TOL: f64 = 1e-9;
pub const CONTINUOUS_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_MULTIPLIER_CAP: f64 = 1e4;
pub const MAX_OUTER_ITERATIONS: usize = 50;

const ARMIJO_FRACTION: f64 = 1e-4;
const BACKTRACK_SHRINK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;
const HESSIAN_RIDGE: f64 = 1e-10;
const MAX_CONDITION: f64 = 1e12;
const SIGN_TOL: f64 = 1e-10;
/// Relative size of a predicted decrease that rounding noise can swamp.
const ROUNDOFF_SLOPE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Residual tolerance; `None` picks 1e-9 (discrete) or 1e-8 (continuous).
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub multiplier_cap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: None,
            max_iter: DEFAULT_MAX_ITER,
            multiplier_cap: DEFAULT_MULTIPLIER_CAP,
        }
    }
}

impl SolverOptions {
    pub fn tolerance_for(&self, problem: &Problem) -> f64 {
        self.tol.unwrap_or(if problem.grid().is_continuous() {
            CONTINUOUS_TOL
        } else {
            DISCRETE_TOL
        })
    }
}

/// Dual objective, gradient and Hessian at one multiplier vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub multipliers: DVector<f64>,
    pub log_partition: f64,
    pub value: f64,
    /// b_j − E_λ[h_j]
    pub gradient: DVector<f64>,
    /// Cov_λ(h_j, h_k)
    pub hessian: DMatrix<f64>,
    pub iteration: usize,
}

/// The dual function of an equality-constrained maximum-entropy problem.
#[derive(Debug, Clone)]
pub struct Dual {
    weights: Vec<f64>,
    tables: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl Dual {
    /// Dual of `problem` with the given target per constraint.
    pub fn new(problem: &Problem, targets: &[f64]) -> Self {
        assert_eq!(targets.len(), problem.len());
        Dual {
            weights: problem.grid().weights().to_vec(),
            tables: problem.tables().to_vec(),
            targets: targets.to_vec(),
        }
    }

    fn from_parts(weights: Vec<f64>, tables: Vec<Vec<f64>>, targets: Vec<f64>) -> Self {
        Dual {
            weights,
            tables,
            targets,
        }
    }

    pub fn dim(&self) -> usize {
        self.tables.len()
    }

    fn exponents(&self, lambda: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.weights.len()];
        for (l, table) in lambda.iter().zip(&self.tables) {
            for (o, h) in out.iter_mut().zip(table) {
                *o -= l * h;
            }
        }
        out
    }

    pub fn log_partition(&self, lambda: &[f64]) -> f64 {
        log_sum_exp_weighted(&self.exponents(lambda), &self.weights)
    }

    pub fn value(&self, lambda: &[f64]) -> f64 {
        let dot: f64 = lambda.iter().zip(&self.targets).map(|(l, b)| l * b).sum();
        self.log_partition(lambda) + dot
    }

    pub fn state(&self, lambda: &[f64]) -> DualState {
        let m = self.dim();
        let exponents = self.exponents(lambda);
        let log_z = log_sum_exp_weighted(&exponents, &self.weights);
        let mass: Vec<f64> = exponents
            .iter()
            .zip(&self.weights)
            .map(|(e, w)| w * (e - log_z).exp())
            .collect();
        let means: Vec<f64> = self
            .tables
            .iter()
            .map(|t| t.iter().zip(&mass).map(|(h, p)| h * p).sum())
            .collect();
        let mut hessian = DMatrix::zeros(m, m);
        for j in 0..m {
            for k in 0..=j {
                let cov: f64 = mass
                    .iter()
                    .zip(self.tables[j].iter().zip(&self.tables[k]))
                    .map(|(p, (hj, hk))| p * (hj - means[j]) * (hk - means[k]))
                    .sum();
                hessian[(j, k)] = cov;
                hessian[(k, j)] = cov;
            }
        }
        let dot: f64 = lambda.iter().zip(&self.targets).map(|(l, b)| l * b).sum();
        DualState {
            multipliers: DVector::from_column_slice(lambda),
            log_partition: log_z,
            value: log_z + dot,
            gradient: DVector::from_iterator(
                m,
                self.targets.iter().zip(&means).map(|(b, e)| b - e),
            ),
            hessian,
            iteration: 0,
        }
    }
}

/// log Z(λ) for the problem's constraint functions.
pub fn log_partition(problem: &Problem, multipliers: &[f64]) -> f64 {
    assert_eq!(multipliers.len(), problem.len());
    log_sum_exp_weighted(&problem.exponents(multipliers), problem.grid().weights())
}

/// E[h_j] under the solution for each function.
pub fn moments(solution: &MaxEntSolution, functions: &[ConstraintFunction]) -> Result<Vec<f64>> {
    let grid = solution.grid();
    functions
        .iter()
        .map(|f| {
            if let ConstraintFunction::Tabulated { values, .. } = f {
                if values.len() != grid.len() {
                    return Err(Error::SupportMismatch(format!(
                        "tabulated function has {} values for {} nodes",
                        values.len(),
                        grid.len()
                    )));
                }
            }
            let h = f.tabulate(grid);
            let prod: Vec<f64> = h
                .iter()
                .zip(solution.density())
                .map(|(h, p)| h * p)
                .collect();
            Ok(grid.integrate(&prod))
        })
        .collect()
}

/// Solves a problem whose targets are all equalities.
pub fn solve_equality(problem: &Problem, options: &SolverOptions) -> Result<MaxEntSolution> {
    if let Some(i) = problem
        .constraints()
        .iter()
        .position(|c| !matches!(c.target, Target::Equal(_)))
    {
        return Err(Error::InvalidInput(format!(
            "constraint {i} has an interval target; use solve_interval"
        )));
    }
    solve_interval(problem, options)
}

/// Solves a problem with any mix of equality and interval targets.
pub fn solve_interval(problem: &Problem, options: &SolverOptions) -> Result<MaxEntSolution> {
    let tol = options.tolerance_for(problem);
    let m = problem.len();
    let ranges: Vec<(f64, f64)> = problem
        .tables()
        .iter()
        .map(|t| {
            t.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(*v), hi.max(*v))
                })
        })
        .collect();

    let mut states = Vec::with_capacity(m);
    for (j, c) in problem.constraints().iter().enumerate() {
        let (hmin, hmax) = ranges[j];
        match c.target {
            Target::Equal(b) => {
                check_interior(j, b, hmin, hmax)?;
                states.push(BoundState::Equality);
            }
            Target::Between { lo, hi } if lo == hi => {
                check_interior(j, lo, hmin, hmax)?;
                states.push(BoundState::Equality);
            }
            Target::Between { lo, hi } => {
                if hi <= hmin || lo >= hmax {
                    return Err(Error::Infeasible(format!(
                        "constraint {j}: interval [{lo}, {hi}] does not meet the attainable range ({hmin}, {hmax})"
                    )));
                }
                states.push(BoundState::Slack);
            }
        }
    }

    let target_of = |j: usize, state: BoundState| -> f64 {
        match (problem.constraints()[j].target, state) {
            (Target::Equal(b), _) => b,
            (Target::Between { lo, .. }, BoundState::Equality | BoundState::Lower) => lo,
            (Target::Between { hi, .. }, BoundState::Upper) => hi,
            (Target::Between { .. }, BoundState::Slack) => unreachable!("slack has no target"),
        }
    };

    let mut lambda = vec![0.0; m];
    let mut seen: HashSet<Vec<BoundState>> = HashSet::new();
    let mut iterations = 0;
    for outer in 1..=MAX_OUTER_ITERATIONS {
        if !seen.insert(states.clone()) {
            return Err(Error::ActiveSetCycle {
                iterations: outer - 1,
            });
        }
        let active: Vec<usize> = (0..m).filter(|&j| states[j] != BoundState::Slack).collect();
        let targets: Vec<f64> = active.iter().map(|&j| target_of(j, states[j])).collect();
        let start: Vec<f64> = active.iter().map(|&j| lambda[j]).collect();
        let inner = newton(problem, &active, &targets, &start, tol, options)?;
        iterations += inner.iterations;
        lambda.iter_mut().for_each(|l| *l = 0.0);
        for (&j, l) in active.iter().zip(&inner.multipliers) {
            lambda[j] = *l;
        }

        let (density, _) = problem.density_for(&lambda);
        let grid = problem.grid();
        let means: Vec<f64> = problem
            .tables()
            .iter()
            .map(|t| {
                let prod: Vec<f64> = t.iter().zip(&density).map(|(h, p)| h * p).collect();
                grid.integrate(&prod)
            })
            .collect();

        // Drop the bound whose multiplier has the most wrong sign.
        let wrong_sign = (0..m)
            .filter_map(|j| match states[j] {
                BoundState::Lower if lambda[j] > SIGN_TOL => Some((j, lambda[j].abs())),
                BoundState::Upper if lambda[j] < -SIGN_TOL => Some((j, lambda[j].abs())),
                _ => None,
            })
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((j, _)) = wrong_sign {
            states[j] = BoundState::Slack;
            lambda[j] = 0.0;
            continue;
        }

        // Activate the most violated slack bound.
        let violated = (0..m)
            .filter(|&j| states[j] == BoundState::Slack)
            .filter_map(|j| match problem.constraints()[j].target {
                Target::Between { lo, .. } if means[j] < lo - tol => {
                    Some((j, BoundState::Lower, lo - means[j]))
                }
                Target::Between { hi, .. } if means[j] > hi + tol => {
                    Some((j, BoundState::Upper, means[j] - hi))
                }
                _ => None,
            })
            .max_by(|a, b| a.2.total_cmp(&b.2));
        if let Some((j, bound, _)) = violated {
            states[j] = bound;
            continue;
        }

        let residuals: Vec<f64> = (0..m)
            .map(|j| match (problem.constraints()[j].target, states[j]) {
                (_, BoundState::Slack) => {
                    let Target::Between { lo, hi } = problem.constraints()[j].target else {
                        unreachable!()
                    };
                    if means[j] < lo {
                        means[j] - lo
                    } else if means[j] > hi {
                        means[j] - hi
                    } else {
                        0.0
                    }
                }
                (_, state) => means[j] - target_of(j, state),
            })
            .collect();
        let gradient_max_norm = active
            .iter()
            .map(|&j| residuals[j].abs())
            .fold(0.0, f64::max);
        let diagnostics = Diagnostics {
            iterations,
            outer_iterations: outer,
            gradient_max_norm,
            residuals,
            active: states,
            dual_trace: inner.trace,
        };
        return MaxEntSolution::from_multipliers(problem.clone(), lambda, diagnostics);
    }
    Err(Error::ActiveSetCycle {
        iterations: MAX_OUTER_ITERATIONS,
    })
}

fn check_interior(j: usize, b: f64, hmin: f64, hmax: f64) -> Result<()> {
    if b <= hmin || b >= hmax {
        let what = if b == hmin || b == hmax {
            "degenerate target on the boundary of"
        } else {
            "target outside"
        };
        return Err(Error::Infeasible(format!(
            "constraint {j}: {what} the attainable range ({hmin}, {hmax}): {b}"
        )));
    }
    Ok(())
}

struct InnerResult {
    multipliers: Vec<f64>,
    iterations: usize,
    trace: Vec<f64>,
}

/// Damped Newton on the dual restricted to `active` constraints. Tables are
/// centered and scaled by their uniform-weight mean and spread; multipliers
/// are mapped back on return.
fn newton(
    problem: &Problem,
    active: &[usize],
    targets: &[f64],
    start: &[f64],
    tol: f64,
    options: &SolverOptions,
) -> Result<InnerResult> {
    if active.is_empty() {
        return Ok(InnerResult {
            multipliers: Vec::new(),
            iterations: 0,
            trace: Vec::new(),
        });
    }
    let grid = problem.grid();
    let total_weight: f64 = grid.weights().iter().sum();
    let mut shifts = Vec::with_capacity(active.len());
    let mut scales = Vec::with_capacity(active.len());
    let mut tables = Vec::with_capacity(active.len());
    for &j in active {
        let raw = &problem.tables()[j];
        let mean = grid.integrate(raw) / total_weight;
        let centered: Vec<f64> = raw.iter().map(|h| h - mean).collect();
        let sq: Vec<f64> = centered.iter().map(|c| c * c).collect();
        let spread = (grid.integrate(&sq) / total_weight).sqrt();
        let scale = if spread > 0.0 { spread } else { 1.0 };
        tables.push(centered.iter().map(|c| c / scale).collect());
        shifts.push(mean);
        scales.push(scale);
    }
    let scaled_targets: Vec<f64> = targets
        .iter()
        .zip(shifts.iter().zip(&scales))
        .map(|(b, (mu, s))| (b - mu) / s)
        .collect();
    let dual = Dual::from_parts(grid.weights().to_vec(), tables, scaled_targets);

    let mut lambda: Vec<f64> = start.iter().zip(&scales).map(|(l, s)| l * s).collect();
    let mut trace = Vec::new();
    let unscale =
        |lambda: &[f64]| -> Vec<f64> { lambda.iter().zip(&scales).map(|(l, s)| l / s).collect() };

    for iter in 0..options.max_iter {
        let state = dual.state(&lambda);
        if iter == 0 {
            trace.push(state.value);
        }
        let residual = state
            .gradient
            .iter()
            .zip(&scales)
            .map(|(g, s)| (g * s).abs())
            .fold(0.0, f64::max);
        if residual <= tol {
            return Ok(InnerResult {
                multipliers: unscale(&lambda),
                iterations: iter,
                trace,
            });
        }

        let direction = newton_direction(&state.hessian, &state.gradient);
        let slope = state.gradient.dot(&direction);
        let mut step = 1.0;
        let mut accepted = None;
        if -slope <= ROUNDOFF_SLOPE * state.value.abs().max(1.0) {
            // The predicted decrease is below the rounding noise of the dual
            // value, so Armijo cannot judge the step; take the full Newton
            // step when it still shrinks the gradient.
            let trial: Vec<f64> = lambda
                .iter()
                .zip(direction.iter())
                .map(|(l, d)| l + d)
                .collect();
            let next = dual.state(&trial);
            if next.value.is_finite() && next.gradient.amax() < state.gradient.amax() {
                accepted = Some((trial, next.value));
            }
        }
        for _ in 0..MAX_BACKTRACKS {
            if accepted.is_some() {
                break;
            }
            let trial: Vec<f64> = lambda
                .iter()
                .zip(direction.iter())
                .map(|(l, d)| l + step * d)
                .collect();
            let value = dual.value(&trial);
            if value.is_finite() && value <= state.value + ARMIJO_FRACTION * step * slope {
                accepted = Some((trial, value));
                break;
            }
            step *= BACKTRACK_SHRINK;
        }
        let Some((next, value)) = accepted else {
            return Err(Error::Infeasible(format!(
                "line search stalled with residual {residual:e}"
            )));
        };
        lambda = next;
        trace.push(value);

        let cap = unscale(&lambda).iter().fold(0.0f64, |m, l| m.max(l.abs()));
        if cap > options.multiplier_cap {
            return Err(Error::Infeasible(format!(
                "multiplier magnitude {cap:e} exceeds cap {:e}",
                options.multiplier_cap
            )));
        }
    }
    Err(Error::Infeasible(format!(
        "no convergence within {} iterations",
        options.max_iter
    )))
}

/// Newton direction −H⁻¹g with a small ridge, or −g when H is too badly
/// conditioned to trust.
fn newton_direction(hessian: &DMatrix<f64>, gradient: &DVector<f64>) -> DVector<f64> {
    let m = hessian.nrows();
    let ridged = hessian + DMatrix::identity(m, m) * HESSIAN_RIDGE;
    let eig = ridged.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min > 0.0 && max / min <= MAX_CONDITION {
        if let Some(chol) = ridged.cholesky() {
            return -chol.solve(gradient);
        }
    }
    -gradient
}
