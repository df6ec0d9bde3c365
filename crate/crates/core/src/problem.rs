//! Shared domain types: supports, constraint functions and targets, validated
//! problems and solved densities.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::quadrature::{Grid, ReferenceRule};

/// Default node count for continuous supports: 32 panels of 32 nodes.
pub const DEFAULT_NODES: usize = 1024;
/// Smallest accepted node count for a continuous support.
pub const MIN_NODES: usize = 16;

/// Normalization tolerance for discrete masses.
pub const DISCRETE_NORM_TOL: f64 = 1e-12;
/// Normalization tolerance for continuous densities under quadrature.
pub const CONTINUOUS_NORM_TOL: f64 = 1e-10;

fn reference_rule(per_panel: usize) -> Arc<ReferenceRule> {
    static R16: OnceLock<Arc<ReferenceRule>> = OnceLock::new();
    static R32: OnceLock<Arc<ReferenceRule>> = OnceLock::new();
    match per_panel {
        16 => R16.get_or_init(|| Arc::new(ReferenceRule::new(16))).clone(),
        32 => R32.get_or_init(|| Arc::new(ReferenceRule::new(32))).clone(),
        n => Arc::new(ReferenceRule::new(n)),
    }
}

/// Domain of the random variable (or of the prospects).
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    /// Finite, strictly increasing abscissas.
    Discrete { points: Vec<f64> },
    /// Interval [a, b] discretized by `nodes` composite Gauss–Legendre nodes.
    /// `knots` are interior points where panel edges are pinned.
    Continuous {
        a: f64,
        b: f64,
        nodes: usize,
        knots: Vec<f64>,
    },
}

impl Support {
    pub fn discrete(points: Vec<f64>) -> Result<Self> {
        let s = Support::Discrete { points };
        s.validate()?;
        Ok(s)
    }

    pub fn continuous(a: f64, b: f64, nodes: usize) -> Result<Self> {
        let s = Support::Continuous {
            a,
            b,
            nodes,
            knots: Vec::new(),
        };
        s.validate()?;
        Ok(s)
    }

    /// Pins panel edges at the given interior points. Knots are merged with
    /// any existing ones; duplicates collapse.
    pub fn with_knots(self, extra: &[f64]) -> Result<Self> {
        match self {
            Support::Discrete { .. } => Err(Error::InvalidSupport(
                "knots apply only to continuous supports".into(),
            )),
            Support::Continuous {
                a,
                b,
                nodes,
                mut knots,
            } => {
                knots.extend_from_slice(extra);
                knots.sort_by(f64::total_cmp);
                knots.dedup();
                let s = Support::Continuous { a, b, nodes, knots };
                s.validate()?;
                Ok(s)
            }
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Support::Continuous { .. })
    }

    /// Smallest and largest abscissa.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Support::Discrete { points } => (
                points.first().copied().unwrap_or(f64::NAN),
                points.last().copied().unwrap_or(f64::NAN),
            ),
            Support::Continuous { a, b, .. } => (*a, *b),
        }
    }

    /// Number of grid nodes this support discretizes into.
    pub fn node_count(&self) -> usize {
        match self {
            Support::Discrete { points } => points.len(),
            Support::Continuous { nodes, .. } => *nodes,
        }
    }

    pub fn knots(&self) -> &[f64] {
        match self {
            Support::Discrete { .. } => &[],
            Support::Continuous { knots, .. } => knots,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Support::Discrete { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidSupport(
                        "discrete support needs at least 2 points".into(),
                    ));
                }
                if points.iter().any(|p| !p.is_finite()) {
                    return Err(Error::InvalidSupport("non-finite point".into()));
                }
                if points.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidSupport(
                        "points must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
            Support::Continuous { a, b, nodes, knots } => {
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidSupport("bounds must be finite".into()));
                }
                if a >= b {
                    return Err(Error::InvalidSupport(format!("need a < b, got [{a}, {b}]")));
                }
                if *nodes < MIN_NODES {
                    return Err(Error::InvalidSupport(format!(
                        "need at least {MIN_NODES} nodes, got {nodes}"
                    )));
                }
                if knots.iter().any(|k| !(k > a && k < b)) {
                    return Err(Error::InvalidSupport("knot outside (a, b)".into()));
                }
                if knots.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidSupport(
                        "knots must be strictly increasing".into(),
                    ));
                }
                panel_layout(*a, *b, knots, *nodes).map(|_| ())
            }
        }
    }

    /// The quadrature grid for this support. Deterministic in the support.
    pub fn grid(&self) -> Result<Grid> {
        self.validate()?;
        Ok(match self {
            Support::Discrete { points } => Grid::discrete(points),
            Support::Continuous { a, b, nodes, knots } => {
                let (edges, per) = panel_layout(*a, *b, knots, *nodes)?;
                Grid::composite(&edges, knots, reference_rule(per))
            }
        })
    }
}

/// Panel edges and nodes per panel. Node counts must be multiples of 16;
/// 32-node panels are preferred when they divide the count and leave at
/// least one panel per knot segment.
fn panel_layout(a: f64, b: f64, knots: &[f64], nodes: usize) -> Result<(Vec<f64>, usize)> {
    let segments = knots.len() + 1;
    let per = if nodes.is_multiple_of(32) && nodes / 32 >= segments {
        32
    } else if nodes.is_multiple_of(16) && nodes / 16 >= segments {
        16
    } else {
        return Err(Error::InvalidSupport(format!(
            "node count {nodes} must be a multiple of 16 with at least one 16-node panel per segment ({segments} segments)"
        )));
    };
    let panels = nodes / per;

    let mut bounds = Vec::with_capacity(segments + 1);
    bounds.push(a);
    bounds.extend_from_slice(knots);
    bounds.push(b);
    let width = b - a;
    let ideal: Vec<f64> = bounds
        .windows(2)
        .map(|w| panels as f64 * (w[1] - w[0]) / width)
        .collect();
    let mut alloc: Vec<usize> = ideal.iter().map(|v| (v.floor() as usize).max(1)).collect();
    let mut total: usize = alloc.iter().sum();
    while total < panels {
        let best = (0..segments)
            .max_by(|&i, &j| {
                let ri = ideal[i] - alloc[i] as f64;
                let rj = ideal[j] - alloc[j] as f64;
                ri.total_cmp(&rj).then(j.cmp(&i))
            })
            .expect("at least one segment");
        alloc[best] += 1;
        total += 1;
    }
    while total > panels {
        let best = (0..segments)
            .filter(|&i| alloc[i] > 1)
            .max_by(|&i, &j| alloc[i].cmp(&alloc[j]).then(j.cmp(&i)))
            .expect("more panels than segments");
        alloc[best] -= 1;
        total -= 1;
    }

    let mut edges = Vec::with_capacity(panels + 1);
    edges.push(a);
    for (s, count) in alloc.iter().enumerate() {
        let (lo, hi) = (bounds[s], bounds[s + 1]);
        for k in 1..*count {
            edges.push(lo + (hi - lo) * k as f64 / *count as f64);
        }
        edges.push(hi);
    }
    Ok((edges, per))
}

/// Adds a knot at every interior indicator edge so that indicator jumps fall
/// on panel edges. Discrete supports are returned unchanged.
pub fn align_indicator_knots(support: Support, constraints: &[ConstraintSpec]) -> Result<Support> {
    if !support.is_continuous() {
        return Ok(support);
    }
    let (a, b) = support.bounds();
    let edges: Vec<f64> = constraints
        .iter()
        .filter_map(|c| match c.function {
            ConstraintFunction::Indicator { lo, hi } => Some([lo, hi]),
            _ => None,
        })
        .flatten()
        .filter(|e| *e > a && *e < b)
        .collect();
    if edges.is_empty() {
        Ok(support)
    } else {
        support.with_knots(&edges)
    }
}

/// A constraint function h evaluated on the support.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintFunction {
    /// h(x) = x^k, k ≥ 1.
    Power(u32),
    /// h(x) = 1 on [lo, hi], 0 elsewhere.
    Indicator { lo: f64, hi: f64 },
    /// One value per grid node, optionally with the derivative per node.
    Tabulated {
        values: Vec<f64>,
        derivative: Option<Vec<f64>>,
    },
}

impl ConstraintFunction {
    pub fn tabulate(&self, grid: &Grid) -> Vec<f64> {
        match self {
            ConstraintFunction::Power(k) => {
                grid.nodes().iter().map(|x| x.powi(*k as i32)).collect()
            }
            ConstraintFunction::Indicator { lo, hi } => grid
                .nodes()
                .iter()
                .map(|x| if *x >= *lo && *x <= *hi { 1.0 } else { 0.0 })
                .collect(),
            ConstraintFunction::Tabulated { values, .. } => values.clone(),
        }
    }

    /// h′ at every node, when it has a pointwise value. Indicators return 0
    /// everywhere; callers mask their edges separately.
    pub fn derivative(&self, grid: &Grid) -> Option<Vec<f64>> {
        match self {
            ConstraintFunction::Power(k) => {
                let kf = *k as f64;
                Some(
                    grid.nodes()
                        .iter()
                        .map(|x| kf * x.powi(*k as i32 - 1))
                        .collect(),
                )
            }
            ConstraintFunction::Indicator { .. } => Some(vec![0.0; grid.len()]),
            ConstraintFunction::Tabulated { derivative, .. } => derivative.clone(),
        }
    }

    fn validate(&self, index: usize, support: &Support) -> Result<()> {
        match self {
            ConstraintFunction::Power(k) => {
                if *k < 1 {
                    return Err(Error::constraint(index, "power must be at least 1"));
                }
            }
            ConstraintFunction::Indicator { lo, hi } => {
                let (a, b) = support.bounds();
                if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                    return Err(Error::constraint(index, "indicator needs finite c < d"));
                }
                if *lo < a || *hi > b {
                    return Err(Error::constraint(index, "indicator exceeds support"));
                }
            }
            ConstraintFunction::Tabulated { values, derivative } => {
                let n = support.node_count();
                if values.len() != n {
                    return Err(Error::constraint(
                        index,
                        format!(
                            "tabulated function has {} values for {n} nodes",
                            values.len()
                        ),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::constraint(index, "tabulated value is not finite"));
                }
                if let Some(d) = derivative {
                    if d.len() != n || d.iter().any(|v| !v.is_finite()) {
                        return Err(Error::constraint(
                            index,
                            "tabulated derivative needs one finite value per node",
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Target for E[h]: an exact value or a closed interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Equal(f64),
    Between { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    pub function: ConstraintFunction,
    pub target: Target,
}

impl ConstraintSpec {
    pub fn equal(function: ConstraintFunction, value: f64) -> Self {
        ConstraintSpec {
            function,
            target: Target::Equal(value),
        }
    }

    pub fn between(function: ConstraintFunction, lo: f64, hi: f64) -> Self {
        ConstraintSpec {
            function,
            target: Target::Between { lo, hi },
        }
    }

    pub fn power(k: u32, value: f64) -> Self {
        Self::equal(ConstraintFunction::Power(k), value)
    }

    fn validate(&self, index: usize, support: &Support) -> Result<()> {
        self.function.validate(index, support)?;
        match self.target {
            Target::Equal(v) if !v.is_finite() => {
                Err(Error::constraint(index, "target must be finite"))
            }
            Target::Between { lo, hi } if !lo.is_finite() || !hi.is_finite() => {
                Err(Error::constraint(index, "interval bounds must be finite"))
            }
            Target::Between { lo, hi } if lo > hi => Err(Error::constraint(
                index,
                format!("interval lo > hi ({lo} > {hi})"),
            )),
            _ => Ok(()),
        }
    }
}

/// A support and constraint list that passed validation, with every
/// constraint function tabulated on the support's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    support: Support,
    grid: Grid,
    constraints: Vec<ConstraintSpec>,
    tables: Vec<Vec<f64>>,
}

/// Checks every support and constraint invariant, reporting the first one
/// violated.
pub fn validate_problem(support: Support, constraints: Vec<ConstraintSpec>) -> Result<Problem> {
    let grid = support.grid()?;
    for (i, c) in constraints.iter().enumerate() {
        c.validate(i, &support)?;
    }
    let tables = constraints
        .iter()
        .map(|c| c.function.tabulate(&grid))
        .collect();
    Ok(Problem {
        support,
        grid,
        constraints,
        tables,
    })
}

impl Problem {
    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn constraints(&self) -> &[ConstraintSpec] {
        &self.constraints
    }

    /// h_j tabulated at every node.
    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Exponential-form density exp(−Σ λ_j h_j) / Z at every node, with log Z.
    pub fn density_for(&self, multipliers: &[f64]) -> (Vec<f64>, f64) {
        assert_eq!(multipliers.len(), self.len());
        let exponents = self.exponents(multipliers);
        let log_z = log_sum_exp_weighted(&exponents, self.grid.weights());
        let density = exponents.iter().map(|e| (e - log_z).exp()).collect();
        (density, log_z)
    }

    /// −Σ λ_j h_j(x_i) per node.
    pub(crate) fn exponents(&self, multipliers: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (lambda, table) in multipliers.iter().zip(&self.tables) {
            if *lambda == 0.0 {
                continue;
            }
            for (o, h) in out.iter_mut().zip(table) {
                *o -= lambda * h;
            }
        }
        out
    }
}

/// log Σ w_i exp(e_i), shifted by the largest exponent.
pub(crate) fn log_sum_exp_weighted(exponents: &[f64], weights: &[f64]) -> f64 {
    let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = exponents
        .iter()
        .zip(weights)
        .map(|(e, w)| w * (e - max).exp())
        .sum();
    max + sum.ln()
}

/// Status of a constraint at the returned solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundState {
    Equality,
    Lower,
    Upper,
    Slack,
}

impl BoundState {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundState::Equality => "equality",
            BoundState::Lower => "lower",
            BoundState::Upper => "upper",
            BoundState::Slack => "slack",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// Newton iterations summed over all inner solves.
    pub iterations: usize,
    /// Active-set passes (1 for pure equality problems).
    pub outer_iterations: usize,
    /// Max-norm of the dual gradient at the returned multipliers.
    pub gradient_max_norm: f64,
    /// E[h_j] − b_j for equalities; distance outside [lo, hi] for intervals
    /// (negative below lo, positive above hi, 0 inside).
    pub residuals: Vec<f64>,
    pub active: Vec<BoundState>,
    /// Dual objective after each accepted step of the final inner solve.
    pub dual_trace: Vec<f64>,
}

/// Solved maximum-entropy density.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntSolution {
    problem: Problem,
    density: Vec<f64>,
    multipliers: Vec<f64>,
    log_partition: f64,
    entropy: f64,
    diagnostics: Diagnostics,
}

impl MaxEntSolution {
    /// Builds the density from the multipliers and checks normalization and
    /// strict positivity.
    pub fn from_multipliers(
        problem: Problem,
        multipliers: Vec<f64>,
        diagnostics: Diagnostics,
    ) -> Result<Self> {
        if multipliers.len() != problem.len() {
            return Err(Error::InvalidInput(format!(
                "{} multipliers for {} constraints",
                multipliers.len(),
                problem.len()
            )));
        }
        if multipliers.iter().any(|l| !l.is_finite()) {
            return Err(Error::Infeasible("non-finite multiplier".into()));
        }
        let (density, log_partition) = problem.density_for(&multipliers);
        let grid = problem.grid();
        let total = grid.integrate(&density);
        let tol = if grid.is_continuous() {
            CONTINUOUS_NORM_TOL
        } else {
            DISCRETE_NORM_TOL
        };
        if !((total - 1.0).abs() <= tol) {
            return Err(Error::Infeasible(format!(
                "density normalizes to {total}, not 1"
            )));
        }
        if density.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::Infeasible(
                "density underflows to zero at some node".into(),
            ));
        }
        let entropy = crate::entropy::raw_entropy(&density, grid.weights());
        Ok(MaxEntSolution {
            problem,
            density,
            multipliers,
            log_partition,
            entropy,
            diagnostics,
        })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn support(&self) -> &Support {
        self.problem.support()
    }

    pub fn grid(&self) -> &Grid {
        self.problem.grid()
    }

    /// Probability mass per point (discrete) or density value per node
    /// (continuous).
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    /// log Z(λ); the normalization multiplier satisfies λ_0 + 1 = log Z.
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    /// λ_0 in p = exp(−λ_0 − 1 − Σ λ_j h_j).
    pub fn lambda0(&self) -> f64 {
        self.log_partition - 1.0
    }

    /// Entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// exp(−λ_0 − 1 − Σ λ_j h_j(x)) at every node, from the stored multipliers
    /// and log-partition.
    pub fn reconstruct(&self) -> Vec<f64> {
        let lambda0 = self.lambda0();
        self.problem
            .exponents(&self.multipliers)
            .iter()
            .map(|e| (e - lambda0 - 1.0).exp())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_constraint_set_is_valid() {
        let s = Support::continuous(0.0, 1.0, 256).unwrap();
        let p = validate_problem(s, vec![]).unwrap();
        assert_eq!(p.grid().len(), 256);
    }

    #[test]
    fn minimal_discrete_problem_is_valid() {
        let s = Support::discrete(vec![0.0, 1.0]).unwrap();
        let p = validate_problem(s, vec![ConstraintSpec::power(1, 0.5)]).unwrap();
        assert_eq!(p.tables()[0], vec![0.0, 1.0]);
    }

    #[test]
    fn indicator_outside_support_is_rejected() {
        let s = Support::continuous(0.0, 1.0, 256).unwrap();
        let err = validate_problem(
            s,
            vec![ConstraintSpec::equal(
                ConstraintFunction::Indicator { lo: 0.5, hi: 1.5 },
                0.5,
            )],
        )
        .unwrap_err();
        assert!(
            err.to_string().contains("indicator exceeds support"),
            "{err}"
        );
    }

    #[test]
    fn support_invariants() {
        assert!(Support::discrete(vec![]).is_err());
        assert!(Support::discrete(vec![1.0]).is_err());
        assert!(Support::discrete(vec![1.0, 0.0]).is_err());
        assert!(Support::discrete(vec![0.0, 0.0]).is_err());
        assert!(Support::continuous(1.0, 1.0, 64).is_err());
        assert!(Support::continuous(0.0, f64::INFINITY, 64).is_err());
        assert!(Support::continuous(0.0, 1.0, 8).is_err());
        assert!(Support::continuous(0.0, 1.0, 100).is_err());
        assert!(Support::continuous(0.0, 1.0, 48).is_ok());
    }

    #[test]
    fn interval_target_with_lo_above_hi_is_rejected() {
        let s = Support::discrete(vec![0.0, 1.0]).unwrap();
        let err = validate_problem(
            s,
            vec![ConstraintSpec::between(
                ConstraintFunction::Power(1),
                0.8,
                0.2,
            )],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidConstraint { index: 0, .. }));
    }

    #[test]
    fn tabulated_length_must_match() {
        let s = Support::discrete(vec![0.0, 1.0, 2.0]).unwrap();
        let f = ConstraintFunction::Tabulated {
            values: vec![1.0, 2.0],
            derivative: None,
        };
        assert!(validate_problem(s, vec![ConstraintSpec::equal(f, 1.5)]).is_err());
    }

    #[test]
    fn default_grid_has_32_panels() {
        let g = Support::continuous(0.0, 1.0, DEFAULT_NODES)
            .unwrap()
            .grid()
            .unwrap();
        assert_eq!(g.panels().len(), 32);
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn knots_become_panel_edges() {
        let s = Support::continuous(0.0, 10.0, 1024)
            .unwrap()
            .with_knots(&[2.0, 5.0])
            .unwrap();
        let g = s.grid().unwrap();
        let edges: Vec<f64> = g.panels().iter().map(|p| p.hi).collect();
        assert!(edges.contains(&2.0) && edges.contains(&5.0));
        assert_eq!(g.len(), 1024);
        assert_eq!(g.segments().len(), 3);
    }

    #[test]
    fn validation_is_idempotent() {
        let s = Support::continuous(-1.0, 2.0, 64).unwrap();
        let cs = vec![
            ConstraintSpec::power(2, 1.0),
            ConstraintSpec::between(ConstraintFunction::Indicator { lo: 0.0, hi: 1.0 }, 0.1, 0.4),
        ];
        let once = validate_problem(s, cs).unwrap();
        let twice = validate_problem(once.support().clone(), once.constraints().to_vec()).unwrap();
        assert_eq!(once, twice);
    }
}
