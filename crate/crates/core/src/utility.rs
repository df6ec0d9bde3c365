//! Normalized utilities treated as distributions: utility vectors and their
//! increments, utility curves and utility densities, and maximum-entropy
//! utility estimation.

use crate::error::{Error, Result};
use crate::problem::{
    validate_problem, ConstraintFunction, ConstraintSpec, MaxEntSolution, Problem, Support, Target,
};
use crate::quadrature::Grid;
use crate::solver::{solve_equality, solve_interval, SolverOptions};

const INCREMENT_SUM_TOL: f64 = 1e-12;
const DENSITY_NORM_TOL: f64 = 1e-8;
const CURVE_RANGE_TOL: f64 = 1e-10;

/// Utilities of K ranked prospects, worst first: (0, u_1, …, u_{K−2}, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityVector(Vec<f64>);

impl UtilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput("utility vector needs K >= 2".into()));
        }
        if values[0] != 0.0 || values[values.len() - 1] != 1.0 {
            return Err(Error::InvalidInput(
                "utility vector must start at 0 and end at 1".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput(
                "utility vector must be nondecreasing".into(),
            ));
        }
        Ok(UtilityVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Consecutive differences of a utility vector: nonnegative, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityIncrementVector(Vec<f64>);

impl UtilityIncrementVector {
    pub fn new(increments: Vec<f64>) -> Result<Self> {
        if increments.is_empty() {
            return Err(Error::InvalidInput("increment vector is empty".into()));
        }
        if increments.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::InvalidInput("increments must be nonnegative".into()));
        }
        let total: f64 = increments.iter().sum();
        if (total - 1.0).abs() > INCREMENT_SUM_TOL {
            return Err(Error::InvalidInput(format!(
                "increments sum to {total}, not 1"
            )));
        }
        Ok(UtilityIncrementVector(increments))
    }

    /// K − 1 equal increments.
    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput("need K >= 2".into()));
        }
        Self::new(vec![1.0 / (k - 1) as f64; k - 1])
    }

    pub fn increments(&self) -> &[f64] {
        &self.0
    }
}

pub fn increments(u: &UtilityVector) -> UtilityIncrementVector {
    UtilityIncrementVector(u.0.windows(2).map(|w| w[1] - w[0]).collect())
}

pub fn cumulate(du: &UtilityIncrementVector) -> UtilityVector {
    let mut values = Vec::with_capacity(du.0.len() + 1);
    values.push(0.0);
    let mut acc: f64 = 0.0;
    for d in &du.0 {
        acc = (acc + d).min(1.0);
        values.push(acc);
    }
    // The sum is 1 only to rounding; the endpoint is 1 by definition.
    *values.last_mut().expect("nonempty") = 1.0;
    UtilityVector(values)
}

/// Volume 1/(K−2)! of the region 0 ≤ u_1 ≤ … ≤ u_{K−2} ≤ 1.
pub fn utility_volume(k: usize) -> Result<f64> {
    if k < 3 {
        return Err(Error::InvalidInput(format!(
            "utility volume needs K >= 3, got {k}"
        )));
    }
    let factorial: f64 = (1..=k - 2).map(|i| i as f64).product();
    Ok(1.0 / factorial)
}

/// Normalized utility curve U(x) sampled on a continuous grid, with its
/// density u(x) = U′(x).
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityCurve {
    support: Support,
    grid: Grid,
    density: Vec<f64>,
    curve: Vec<f64>,
    total: f64,
}

impl UtilityCurve {
    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// U at every grid node.
    pub fn values(&self) -> &[f64] {
        &self.curve
    }

    /// U(x) anywhere in the support; 0 at a and 1 at b.
    pub fn value_at(&self, x: f64) -> f64 {
        let (a, b) = self.support.bounds();
        if x <= a {
            return 0.0;
        }
        if x >= b {
            return 1.0;
        }
        (self.grid.cumulative_at(&self.density, x) / self.total).clamp(0.0, 1.0)
    }
}

fn continuous_grid(support: &Support, len: usize) -> Result<Grid> {
    if !support.is_continuous() {
        return Err(Error::InvalidInput(
            "utility curves need a continuous support".into(),
        ));
    }
    let grid = support.grid()?;
    if grid.len() != len {
        return Err(Error::SupportMismatch(format!(
            "{len} values for {} nodes",
            grid.len()
        )));
    }
    Ok(grid)
}

/// U(x) = ∫_a^x u, renormalized so that U(b) = 1.
pub fn density_to_curve(density: &[f64], support: &Support) -> Result<UtilityCurve> {
    let grid = continuous_grid(support, density.len())?;
    if let Some(bad) = density.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "negative or non-finite density {bad}"
        )));
    }
    let total = grid.integrate(density);
    if (total - 1.0).abs() > DENSITY_NORM_TOL {
        return Err(Error::InvalidInput(format!(
            "density integrates to {total}, not 1"
        )));
    }
    let mut running: f64 = 0.0;
    let curve = grid
        .cumulative(density)
        .into_iter()
        .map(|c| {
            // Interpolation ringing on rough densities must not break monotonicity.
            running = running.max((c / total).clamp(0.0, 1.0));
            running
        })
        .collect();
    Ok(UtilityCurve {
        support: support.clone(),
        grid,
        density: density.to_vec(),
        curve,
        total,
    })
}

/// u = U′ by three-point differences (one-sided at segment ends), clipped
/// at zero and renormalized.
pub fn curve_to_density(curve: &[f64], support: &Support) -> Result<Vec<f64>> {
    let grid = continuous_grid(support, curve.len())?;
    if curve.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite utility value".into()));
    }
    if let Some(i) = curve.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput(format!(
            "utility curve decreases between nodes {i} and {}",
            i + 1
        )));
    }
    if curve[0] < -CURVE_RANGE_TOL || curve[curve.len() - 1] > 1.0 + CURVE_RANGE_TOL {
        return Err(Error::InvalidInput("utility curve leaves [0, 1]".into()));
    }
    let mut density: Vec<f64> = grid
        .derivative(curve)
        .into_iter()
        .map(|d| d.max(0.0))
        .collect();
    let total = grid.integrate(&density);
    if !(total > 0.0) {
        return Err(Error::InvalidInput("utility curve is flat".into()));
    }
    density.iter_mut().for_each(|d| *d /= total);
    Ok(density)
}

/// A solved maximum-entropy utility: the curve and the density behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityFit {
    pub curve: UtilityCurve,
    pub solution: MaxEntSolution,
}

/// Maximum-entropy utility density for the problem's preference constraints,
/// integrated into a utility curve.
pub fn maxent_utility(problem: &Problem, options: &SolverOptions) -> Result<UtilityFit> {
    if !problem.support().is_continuous() {
        return Err(Error::InvalidInput(
            "maximum-entropy utility needs a continuous support".into(),
        ));
    }
    let all_equal = problem
        .constraints()
        .iter()
        .all(|c| matches!(c.target, Target::Equal(_)));
    let solution = if all_equal {
        solve_equality(problem, options)?
    } else {
        solve_interval(problem, options)?
    };
    let curve = density_to_curve(solution.density(), solution.support())?;
    Ok(UtilityFit { curve, solution })
}

/// One assessed utility value U(x) = u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assessment {
    pub x: f64,
    pub u: f64,
}

/// Maximum-entropy utility through assessed points. Each assessment becomes
/// a cumulative constraint E[1_{[a, x_k]}] = u_k, and each x_k a panel knot.
pub fn maxent_utility_from_assessments(
    support: &Support,
    assessments: &[Assessment],
    options: &SolverOptions,
) -> Result<UtilityFit> {
    let Support::Continuous { a, b, .. } = *support else {
        return Err(Error::InvalidInput(
            "assessed utilities need a continuous support".into(),
        ));
    };
    if assessments.is_empty() {
        return Err(Error::InvalidInput("no assessments given".into()));
    }
    for (k, p) in assessments.iter().enumerate() {
        if !(p.x > a && p.x < b) {
            return Err(Error::InvalidInput(format!(
                "assessment {k}: x = {} is not inside ({a}, {b})",
                p.x
            )));
        }
        if !(p.u > 0.0 && p.u < 1.0) {
            return Err(Error::InvalidInput(format!(
                "assessment {k}: utility {} is not inside (0, 1)",
                p.u
            )));
        }
    }
    if assessments
        .windows(2)
        .any(|w| w[1].x <= w[0].x || w[1].u <= w[0].u)
    {
        return Err(Error::InvalidInput(
            "assessments must be strictly increasing in x and in utility".into(),
        ));
    }
    let knots: Vec<f64> = assessments.iter().map(|p| p.x).collect();
    let support = support.clone().with_knots(&knots)?;
    let constraints = assessments
        .iter()
        .map(|p| ConstraintSpec::equal(ConstraintFunction::Indicator { lo: a, hi: p.x }, p.u))
        .collect();
    let problem = validate_problem(support, constraints)?;
    maxent_utility(&problem, options)
}

/// Named special cases of the maximum-entropy utility.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    LinearRiskNeutral,
    Cara,
    GaussianSShaped,
    General,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::LinearRiskNeutral => "linear_risk_neutral",
            Family::Cara => "cara",
            Family::GaussianSShaped => "gaussian_s_shaped",
            Family::General => "general",
        }
    }
}

pub fn classify_family(constraints: &[ConstraintSpec]) -> Family {
    let mut powers: Vec<u32> = Vec::with_capacity(constraints.len());
    for c in constraints {
        match c.function {
            ConstraintFunction::Power(k) => powers.push(k),
            _ => return Family::General,
        }
    }
    powers.sort_unstable();
    match powers.as_slice() {
        [] => Family::LinearRiskNeutral,
        [1] => Family::Cara,
        [1, 2] => Family::GaussianSShaped,
        _ => Family::General,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(nodes: usize) -> Support {
        Support::continuous(0.0, 1.0, nodes).unwrap()
    }

    #[test]
    fn increments_examples() {
        let d = increments(&UtilityVector::new(vec![0.0, 0.5, 1.0]).unwrap());
        assert_eq!(d.increments(), &[0.5, 0.5]);
        let d = increments(&UtilityVector::new(vec![0.0, 1.0]).unwrap());
        assert_eq!(d.increments(), &[1.0]);
        let d = increments(&UtilityVector::new(vec![0.0, 0.2, 0.2, 1.0]).unwrap());
        assert_eq!(d.increments(), &[0.2, 0.0, 0.8]);
    }

    #[test]
    fn cumulate_examples() {
        let u = cumulate(&UtilityIncrementVector::new(vec![0.5, 0.5]).unwrap());
        assert_eq!(u.values(), &[0.0, 0.5, 1.0]);
        let u = cumulate(&UtilityIncrementVector::new(vec![1.0]).unwrap());
        assert_eq!(u.values(), &[0.0, 1.0]);
        let u = cumulate(&UtilityIncrementVector::uniform(5).unwrap());
        assert_eq!(u.values(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn vector_invariants() {
        assert!(UtilityVector::new(vec![0.0]).is_err());
        assert!(UtilityVector::new(vec![0.1, 1.0]).is_err());
        assert!(UtilityVector::new(vec![0.0, 0.6, 0.4, 1.0]).is_err());
        assert!(UtilityIncrementVector::new(vec![0.5, 0.6]).is_err());
        assert!(UtilityIncrementVector::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn volume_examples() {
        assert_eq!(utility_volume(3).unwrap(), 1.0);
        assert_eq!(utility_volume(5).unwrap(), 1.0 / 6.0);
        assert!(utility_volume(2).is_err());
    }

    #[test]
    fn uniform_density_integrates_to_identity() {
        let curve = density_to_curve(&vec![1.0; 1024], &unit(1024)).unwrap();
        for (x, u) in curve.nodes().iter().zip(curve.values()) {
            assert!((x - u).abs() <= 1e-10);
        }
        assert_eq!(curve.value_at(0.0), 0.0);
        assert_eq!(curve.value_at(1.0), 1.0);
        assert!((curve.value_at(0.37) - 0.37).abs() < 1e-12);
    }

    #[test]
    fn curve_to_density_examples() {
        let s = unit(1024);
        let g = s.grid().unwrap();
        let d = curve_to_density(g.nodes(), &s).unwrap();
        assert!(d.iter().all(|v| (v - 1.0).abs() <= 1e-8));

        let sq: Vec<f64> = g.nodes().iter().map(|x| x * x).collect();
        let d = curve_to_density(&sq, &s).unwrap();
        for (i, (x, v)) in g.nodes().iter().zip(&d).enumerate().skip(1).take(1022) {
            assert!((v - 2.0 * x).abs() <= 1e-4, "node {i}");
        }
    }

    #[test]
    fn decreasing_curve_is_rejected() {
        let s = unit(64);
        let g = s.grid().unwrap();
        let down: Vec<f64> = g.nodes().iter().map(|x| 1.0 - x).collect();
        assert!(curve_to_density(&down, &s).is_err());
    }

    #[test]
    fn density_to_curve_errors() {
        let s = unit(64);
        assert!(density_to_curve(&vec![2.0; 64], &s).is_err());
        let mut neg = vec![1.0; 64];
        neg[0] = -0.5;
        assert!(density_to_curve(&neg, &s).is_err());
        let disc = Support::discrete(vec![0.0, 1.0]).unwrap();
        assert!(density_to_curve(&[0.5, 0.5], &disc).is_err());
    }

    #[test]
    fn family_tags() {
        assert_eq!(classify_family(&[]), Family::LinearRiskNeutral);
        assert_eq!(
            classify_family(&[ConstraintSpec::power(1, 1.0)]),
            Family::Cara
        );
        assert_eq!(
            classify_family(&[ConstraintSpec::power(1, 0.0), ConstraintSpec::power(2, 1.0)]),
            Family::GaussianSShaped
        );
        assert_eq!(
            classify_family(&[ConstraintSpec::power(2, 1.0), ConstraintSpec::power(1, 0.0)]),
            Family::GaussianSShaped
        );
        assert_eq!(
            classify_family(&[ConstraintSpec::power(3, 1.0)]),
            Family::General
        );
        assert_eq!(
            classify_family(&[ConstraintSpec::equal(
                ConstraintFunction::Indicator { lo: 0.0, hi: 0.5 },
                0.5
            )]),
            Family::General
        );
    }

    #[test]
    fn assessment_validation() {
        let s = Support::continuous(0.0, 1.0, 256).unwrap();
        let o = SolverOptions::default();
        let bad = |v: &[(f64, f64)]| {
            let a: Vec<Assessment> = v.iter().map(|&(x, u)| Assessment { x, u }).collect();
            maxent_utility_from_assessments(&s, &a, &o).is_err()
        };
        assert!(bad(&[]));
        assert!(bad(&[(0.5, 1.0)]));
        assert!(bad(&[(0.0, 0.5)]));
        assert!(bad(&[(0.5, 0.6), (0.4, 0.7)]));
        assert!(bad(&[(0.3, 0.6), (0.4, 0.5)]));
        assert!(!bad(&[(0.3, 0.6), (0.4, 0.7)]));
    }
}
