//! Named scalar functions for configuring custom problems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A function of the physical point, selected by name in a config file.
///
/// In TOML: `{ kind = "sin_product", scale = 2.0 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NamedFn {
    Zero,
    Const { value: f64 },
    /// `scale * prod_i sin(x_i)`
    SinProduct { scale: f64 },
    /// `scale * cos(pi x_1)`
    CosPi { scale: f64 },
    /// `offset + slope . x`
    Linear { offset: f64, slope: Vec<f64> },
    /// `scale * |x - center|^2`
    QuadraticBowl { center: Vec<f64>, scale: f64 },
}

impl NamedFn {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            NamedFn::Zero => 0.0,
            NamedFn::Const { value } => *value,
            NamedFn::SinProduct { scale } => scale * x.iter().map(|t| t.sin()).product::<f64>(),
            NamedFn::CosPi { scale } => scale * (std::f64::consts::PI * x[0]).cos(),
            NamedFn::Linear { offset, slope } => offset + slope.iter().zip(x).map(|(s, t)| s * t).sum::<f64>(),
            NamedFn::QuadraticBowl { center, scale } => {
                scale * center.iter().zip(x).map(|(c, t)| (t - c) * (t - c)).sum::<f64>()
            }
        }
    }

    /// Check parameter lengths and finiteness for a `dim`-dimensional domain.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|t| t.is_finite());
        let ok = match self {
            NamedFn::Zero => true,
            NamedFn::Const { value: s } | NamedFn::SinProduct { scale: s } | NamedFn::CosPi { scale: s } => s.is_finite(),
            NamedFn::Linear { offset, slope } => offset.is_finite() && slope.len() == dim && finite(slope),
            NamedFn::QuadraticBowl { center, scale } => scale.is_finite() && center.len() == dim && finite(center),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("bad parameters for function {self:?} in dimension {dim}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation() {
        assert_eq!(NamedFn::Zero.eval(&[0.3]), 0.0);
        assert_eq!(NamedFn::Const { value: 2.5 }.eval(&[0.3, 0.1]), 2.5);
        let s = NamedFn::SinProduct { scale: 1.0 }.eval(&[0.5, 0.5]);
        assert!((s - 0.229_848_847_065_930_14).abs() < 1e-15);
        assert!(NamedFn::CosPi { scale: 2.0 }.eval(&[0.5]).abs() < 1e-15);
        let l = NamedFn::Linear { offset: 1.0, slope: vec![2.0, -1.0] };
        assert_eq!(l.eval(&[0.5, 1.0]), 1.0);
        let q = NamedFn::QuadraticBowl { center: vec![0.5, 0.5], scale: 4.0 };
        assert_eq!(q.eval(&[1.0, 0.5]), 1.0);
    }

    #[test]
    fn validation_checks_lengths() {
        assert!(NamedFn::Linear { offset: 0.0, slope: vec![1.0] }.validate(2).is_err());
        assert!(NamedFn::Const { value: f64::NAN }.validate(1).is_err());
        assert!(NamedFn::QuadraticBowl { center: vec![0.0], scale: 1.0 }.validate(1).is_ok());
    }

    #[test]
    fn parses_from_toml() {
        #[derive(Deserialize)]
        struct W {
            f: NamedFn,
        }
        let w: W = toml::from_str("f = { kind = \"linear\", offset = 1.0, slope = [2.0] }").unwrap();
        assert_eq!(w.f, NamedFn::Linear { offset: 1.0, slope: vec![2.0] });
        assert!(toml::from_str::<W>("f = { kind = \"nope\" }").is_err());
    }
}
