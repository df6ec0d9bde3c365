//! Arrow–Pratt absolute risk aversion of a maximum-entropy utility.
//!
//! For u(x) ∝ exp(−Σ λ_j h_j(x)) the risk aversion −d ln u/dx splits into one
//! additive term λ_j h_j′(x) per constraint. [`risk_aversion_analytic`] uses
//! that split; [`risk_aversion_numeric`] differentiates ln u directly and
//! serves as a cross-check.

use crate::entropy::ZERO_FLOOR;
use crate::error::{Error, Result};
use crate::problem::{ConstraintFunction, MaxEntSolution, Support};
use crate::quadrature::Grid;
use crate::utility::UtilityCurve;

/// γ(x) per grid node; `None` where it has no pointwise value.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskAversionProfile {
    support: Support,
    nodes: Vec<f64>,
    gamma: Vec<Option<f64>>,
    /// λ_j·h_j′(x) per constraint per node (empty for numeric profiles).
    terms: Vec<Vec<Option<f64>>>,
}

impl RiskAversionProfile {
    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn gamma(&self) -> &[Option<f64>] {
        &self.gamma
    }

    pub fn terms(&self) -> &[Vec<Option<f64>>] {
        &self.terms
    }

    /// (x, γ) at nodes where γ is defined.
    pub fn defined(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.nodes
            .iter()
            .zip(&self.gamma)
            .enumerate()
            .filter_map(|(i, (x, g))| g.map(|g| (i, *x, g)))
    }
}

/// Nodes whose difference stencil would straddle a jump of an indicator
/// constraint. Edges on the support bounds or on panel knots never do.
fn indicator_mask(grid: &Grid, support: &Support, functions: &[&ConstraintFunction]) -> Vec<bool> {
    let (a, b) = support.bounds();
    let eps = 1e-12 * (b - a);
    let x = grid.nodes();
    let n = x.len();
    let mut mask = vec![false; n];
    let knots = support.knots();
    for f in functions {
        let ConstraintFunction::Indicator { lo, hi } = f else {
            continue;
        };
        for edge in [*lo, *hi] {
            if edge <= a || edge >= b || knots.iter().any(|k| (k - edge).abs() <= eps) {
                continue;
            }
            for i in 0..n {
                let left = if i == 0 { x[0] } else { x[i - 1] };
                let right = if i + 1 == n { x[n - 1] } else { x[i + 1] };
                if edge >= left - eps && edge <= right + eps {
                    mask[i] = true;
                }
            }
        }
    }
    mask
}

/// γ(x) = Σ_j λ_j h_j′(x) from the solved multipliers.
pub fn risk_aversion_analytic(solution: &MaxEntSolution) -> Result<RiskAversionProfile> {
    let support = solution.support();
    if !support.is_continuous() {
        return Err(Error::InvalidInput(
            "risk aversion needs a continuous support".into(),
        ));
    }
    let grid = solution.grid();
    let functions: Vec<&ConstraintFunction> = solution
        .problem()
        .constraints()
        .iter()
        .map(|c| &c.function)
        .collect();
    let mask = indicator_mask(grid, support, &functions);

    let mut terms = Vec::with_capacity(functions.len());
    for (j, (f, lambda)) in functions.iter().zip(solution.multipliers()).enumerate() {
        let deriv = f
            .derivative(grid)
            .ok_or(Error::MissingDerivative { index: j })?;
        terms.push(
            deriv
                .iter()
                .zip(&mask)
                .map(|(d, masked)| (!masked).then(|| lambda * d))
                .collect::<Vec<_>>(),
        );
    }
    let gamma = (0..grid.len())
        .map(|i| {
            (!mask[i]).then(|| {
                terms
                    .iter()
                    .map(|t: &Vec<Option<f64>>| t[i].unwrap_or(0.0))
                    .sum()
            })
        })
        .collect();
    Ok(RiskAversionProfile {
        support: support.clone(),
        nodes: grid.nodes().to_vec(),
        gamma,
        terms,
    })
}

/// γ(x) = −d ln u/dx by three-point differences at interior nodes.
pub fn risk_aversion_numeric(curve: &UtilityCurve) -> Result<RiskAversionProfile> {
    let grid = curve.grid();
    let density = curve.density();
    let n = density.len();
    if let Some(i) = (1..n.saturating_sub(1)).find(|&i| !(density[i] >= ZERO_FLOOR)) {
        return Err(Error::InvalidInput(format!(
            "density is zero at interior node {i}"
        )));
    }
    let neg_log: Vec<f64> = density.iter().map(|u| -u.max(ZERO_FLOOR).ln()).collect();
    let slope = grid.derivative(&neg_log);
    let gamma = slope
        .into_iter()
        .enumerate()
        .map(|(i, g)| (i > 0 && i + 1 < n).then_some(g))
        .collect();
    Ok(RiskAversionProfile {
        support: curve.support().clone(),
        nodes: grid.nodes().to_vec(),
        gamma,
        terms: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{validate_problem, ConstraintSpec};
    use crate::solver::SolverOptions;
    use crate::utility::{density_to_curve, maxent_utility};

    #[test]
    fn no_constraints_is_risk_neutral() {
        let p = validate_problem(Support::continuous(0.0, 1.0, 256).unwrap(), vec![]).unwrap();
        let fit = maxent_utility(&p, &SolverOptions::default()).unwrap();
        let prof = risk_aversion_analytic(&fit.solution).unwrap();
        assert!(prof.gamma().iter().all(|g| *g == Some(0.0)));
        let num = risk_aversion_numeric(&fit.curve).unwrap();
        assert!(num.defined().all(|(_, _, g)| g.abs() <= 1e-10));
        assert_eq!(num.gamma()[0], None);
        assert_eq!(num.gamma()[255], None);
    }

    #[test]
    fn numeric_exponential() {
        let s = Support::continuous(0.0, 1.0, 1024).unwrap();
        let g = s.grid().unwrap();
        let z = (1.0 - (-2.0f64).exp()) / 2.0;
        let d: Vec<f64> = g.nodes().iter().map(|x| (-2.0 * x).exp() / z).collect();
        let curve = density_to_curve(&d, &s).unwrap();
        let prof = risk_aversion_numeric(&curve).unwrap();
        assert!(prof.defined().all(|(_, _, v)| (v - 2.0).abs() <= 1e-4));
    }

    #[test]
    fn numeric_gaussian() {
        let s = Support::continuous(-4.0, 4.0, 1024).unwrap();
        let g = s.grid().unwrap();
        let raw: Vec<f64> = g.nodes().iter().map(|x| (-0.5 * x * x).exp()).collect();
        let z = g.integrate(&raw);
        let d: Vec<f64> = raw.iter().map(|v| v / z).collect();
        let curve = density_to_curve(&d, &s).unwrap();
        let prof = risk_aversion_numeric(&curve).unwrap();
        assert!(prof.defined().all(|(_, x, v)| (v - x).abs() <= 1e-3));
    }

    #[test]
    fn zero_interior_density_is_rejected() {
        let s = Support::continuous(0.0, 1.0, 64).unwrap();
        let g = s.grid().unwrap();
        let d: Vec<f64> = g
            .nodes()
            .iter()
            .map(|x| if *x < 0.5 { 2.0 } else { 0.0 })
            .collect();
        let curve = density_to_curve(&d, &s).unwrap();
        assert!(risk_aversion_numeric(&curve).is_err());
    }

    #[test]
    fn tabulated_without_derivative_is_rejected() {
        let s = Support::continuous(0.0, 1.0, 64).unwrap();
        let g = s.grid().unwrap();
        let f = ConstraintFunction::Tabulated {
            values: g.nodes().to_vec(),
            derivative: None,
        };
        let p = validate_problem(s, vec![ConstraintSpec::equal(f, 0.4)]).unwrap();
        let sol = crate::solver::solve_equality(&p, &SolverOptions::default()).unwrap();
        assert_eq!(
            risk_aversion_analytic(&sol).unwrap_err(),
            Error::MissingDerivative { index: 0 }
        );
    }

    #[test]
    fn unaligned_indicator_edges_are_masked() {
        let s = Support::continuous(0.0, 1.0, 64).unwrap();
        let p = validate_problem(
            s,
            vec![ConstraintSpec::equal(
                ConstraintFunction::Indicator { lo: 0.0, hi: 0.3 },
                0.5,
            )],
        )
        .unwrap();
        let sol = crate::solver::solve_equality(&p, &SolverOptions::default()).unwrap();
        let prof = risk_aversion_analytic(&sol).unwrap();
        let masked: Vec<f64> = prof
            .nodes()
            .iter()
            .zip(prof.gamma())
            .filter(|(_, g)| g.is_none())
            .map(|(x, _)| *x)
            .collect();
        assert!(!masked.is_empty() && masked.len() <= 3);
        assert!(masked.iter().all(|x| (x - 0.3).abs() < 0.05));
        assert!(prof.defined().all(|(_, _, g)| g == 0.0));
    }
}
