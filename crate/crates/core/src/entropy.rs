//! Shannon entropy of masses, differential entropy of densities, and the
//! entropy of utility increment vectors.

use crate::error::{Error, Result};
use crate::problem::Support;
use crate::utility::UtilityIncrementVector;

/// Values below this are treated as exact zeros in p·log p.
pub const ZERO_FLOOR: f64 = 1e-300;

const MASS_SUM_TOL: f64 = 1e-9;
const DENSITY_NORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Base {
    #[default]
    Natural,
    Base2,
}

impl Base {
    pub fn name(self) -> &'static str {
        match self {
            Base::Natural => "nats",
            Base::Base2 => "bits",
        }
    }

    fn convert(self, nats: f64) -> f64 {
        match self {
            Base::Natural => nats,
            Base::Base2 => nats / std::f64::consts::LN_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyValue {
    pub value: f64,
    pub base: Base,
}

/// −Σ w_i p_i ln p_i with the 0·ln 0 = 0 convention. No validation.
pub(crate) fn raw_entropy(values: &[f64], weights: &[f64]) -> f64 {
    -values
        .iter()
        .zip(weights)
        .filter(|(p, _)| **p >= ZERO_FLOOR)
        .map(|(p, w)| w * p * p.ln())
        .sum::<f64>()
}

fn check_masses(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidInput("empty mass sequence".into()));
    }
    if let Some(bad) = p.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "negative or non-finite mass {bad}"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > MASS_SUM_TOL {
        return Err(Error::InvalidInput(format!("masses sum to {total}, not 1")));
    }
    Ok(())
}

pub fn discrete_entropy(p: &[f64], base: Base) -> Result<EntropyValue> {
    check_masses(p)?;
    let ones = vec![1.0; p.len()];
    Ok(EntropyValue {
        value: base.convert(raw_entropy(p, &ones)),
        base,
    })
}

/// −∫ p log p over a continuous support, by the support's quadrature.
pub fn differential_entropy(
    density: &[f64],
    support: &Support,
    base: Base,
) -> Result<EntropyValue> {
    if !support.is_continuous() {
        return Err(Error::InvalidInput(
            "differential entropy needs a continuous support".into(),
        ));
    }
    let grid = support.grid()?;
    if density.len() != grid.len() {
        return Err(Error::SupportMismatch(format!(
            "{} density values for {} nodes",
            density.len(),
            grid.len()
        )));
    }
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
    Ok(EntropyValue {
        value: base.convert(raw_entropy(density, grid.weights())),
        base,
    })
}

/// Spread of a utility increment vector: −Σ Δu_i log Δu_i.
pub fn entropy_of_increments(du: &UtilityIncrementVector, base: Base) -> Result<EntropyValue> {
    discrete_entropy(du.increments(), base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_examples() {
        let h = discrete_entropy(&[0.5, 0.5], Base::Natural).unwrap().value;
        assert!((h - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(
            discrete_entropy(&[1.0, 0.0], Base::Natural).unwrap().value,
            0.0
        );
        // -(0.25 ln 0.25 + 0.75 ln 0.75)
        let h = discrete_entropy(&[0.25, 0.75], Base::Natural)
            .unwrap()
            .value;
        assert!((h - 0.562_335_144_618_808_1).abs() < 1e-12, "{h}");
        let bits = discrete_entropy(&[0.5, 0.5], Base::Base2).unwrap().value;
        assert!((bits - 1.0).abs() < 1e-15);
    }

    #[test]
    fn discrete_errors() {
        assert!(discrete_entropy(&[-0.1, 1.1], Base::Natural).is_err());
        assert!(discrete_entropy(&[0.5, 0.4], Base::Natural).is_err());
        assert!(discrete_entropy(&[], Base::Natural).is_err());
    }

    #[test]
    fn differential_examples() {
        let unit = Support::continuous(0.0, 1.0, 1024).unwrap();
        let h = differential_entropy(&vec![1.0; 1024], &unit, Base::Natural).unwrap();
        assert_eq!(h.value, 0.0);

        let wide = Support::continuous(0.0, 2.0, 1024).unwrap();
        let h = differential_entropy(&vec![0.5; 1024], &wide, Base::Natural).unwrap();
        assert!((h.value - std::f64::consts::LN_2).abs() < 1e-12);

        let narrow = Support::continuous(0.0, 0.5, 1024).unwrap();
        let h = differential_entropy(&vec![2.0; 1024], &narrow, Base::Natural).unwrap();
        assert!((h.value + std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn differential_errors() {
        let unit = Support::continuous(0.0, 1.0, 64).unwrap();
        assert!(differential_entropy(&vec![2.0; 64], &unit, Base::Natural).is_err());
        let mut neg = vec![1.0; 64];
        neg[3] = -1.0;
        assert!(differential_entropy(&neg, &unit, Base::Natural).is_err());
        assert!(differential_entropy(&vec![1.0; 32], &unit, Base::Natural).is_err());
        let disc = Support::discrete(vec![0.0, 1.0]).unwrap();
        assert!(differential_entropy(&[0.5, 0.5], &disc, Base::Natural).is_err());
    }

    #[test]
    fn zero_density_nodes_contribute_nothing() {
        let s = Support::continuous(0.0, 1.0, 32).unwrap();
        let g = s.grid().unwrap();
        // twice the density on the left half, zero on the right
        let d: Vec<f64> = g
            .nodes()
            .iter()
            .map(|x| if *x < 0.5 { 2.0 } else { 0.0 })
            .collect();
        let h = differential_entropy(&d, &s, Base::Natural).unwrap().value;
        assert!((h + std::f64::consts::LN_2).abs() < 1e-12);
    }
}
