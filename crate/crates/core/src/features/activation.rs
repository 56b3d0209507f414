use std::fmt;
use std::str::FromStr;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest derivative order exposed through the public derivative API.
pub const MAX_DERIVATIVE_ORDER: usize = 4;

/// Smooth activation with closed-form derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sin,
    Tanh,
}

impl Activation {
    /// Derivatives of orders `0..=5` at `x`.
    ///
    /// Order 5 is needed internally: parameter gradients of a fourth-order
    /// operator differentiate `σ⁗` once more.
    pub fn derivatives<T: Float>(self, x: T) -> [T; 6] {
        let c = |v: f64| T::from(v).expect("constant representable");
        match self {
            Activation::Sin => {
                let (s, co) = x.sin_cos();
                [s, co, -s, -co, s, co]
            }
            Activation::Tanh => {
                let t = x.tanh();
                let t2 = t * t;
                let sech2 = T::one() - t2;
                [
                    t,
                    sech2,
                    c(-2.0) * t * sech2,
                    c(-2.0) + c(8.0) * t2 - c(6.0) * t2 * t2,
                    t * (c(16.0) - c(40.0) * t2 + c(24.0) * t2 * t2),
                    c(16.0) - c(136.0) * t2 + c(240.0) * t2 * t2 - c(120.0) * t2 * t2 * t2,
                ]
            }
        }
    }

    pub fn value(self, x: f64) -> f64 {
        match self {
            Activation::Sin => x.sin(),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Closed-form `k`-th derivative, `k <= 4`.
    pub fn derivative(self, k: usize, x: f64) -> Result<f64> {
        if k > MAX_DERIVATIVE_ORDER {
            return Err(Error::UnsupportedOrder(k));
        }
        Ok(self.derivatives(x)[k])
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sin => "sin",
            Activation::Tanh => "tanh",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sin" => Ok(Activation::Sin),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidArgument(format!("unknown activation `{other}`"))),
        }
    }
}

/// `σ⁽ᵏ⁾(x)` for `k <= 4`.
pub fn activation_derivative(act: Activation, k: usize, x: f64) -> Result<f64> {
    act.derivative(k, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Richardson-extrapolated central difference of `g` at `x`.
    fn richardson(g: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        let d = |h: f64| (g(x + h) - g(x - h)) / (2.0 * h);
        let d1 = d(h);
        let d2 = d(h / 2.0);
        let d3 = d(h / 4.0);
        let r1 = (4.0 * d2 - d1) / 3.0;
        let r2 = (4.0 * d3 - d2) / 3.0;
        (16.0 * r2 - r1) / 15.0
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(activation_derivative(Activation::Sin, 2, 0.0).unwrap(), 0.0);
        assert_eq!(activation_derivative(Activation::Tanh, 1, 0.0).unwrap(), 1.0);
        assert!(matches!(
            activation_derivative(Activation::Sin, 5, 0.0),
            Err(Error::UnsupportedOrder(5))
        ));
    }

    #[test]
    fn tanh_third_derivative_matches_richardson() {
        let x = 0.7;
        let oracle = richardson(|y| Activation::Tanh.derivative(2, y).unwrap(), x, 1e-2);
        let exact = Activation::Tanh.derivative(3, x).unwrap();
        assert!(((exact - oracle) / exact).abs() < 1e-7);
    }

    #[test]
    fn every_order_is_derivative_of_previous() {
        for act in [Activation::Sin, Activation::Tanh] {
            for &x in &[-1.3, -0.2, 0.0, 0.45, 2.1] {
                let d = act.derivatives(x);
                for k in 0..5 {
                    let oracle = richardson(|y| act.derivatives(y)[k], x, 1e-2);
                    let scale = d[k + 1].abs().max(1.0);
                    assert!(
                        (d[k + 1] - oracle).abs() < 1e-7 * scale,
                        "{act} order {} at {x}: {} vs {oracle}",
                        k + 1,
                        d[k + 1]
                    );
                }
            }
        }
    }

    #[test]
    fn single_precision_agrees() {
        let d64 = Activation::Tanh.derivatives(0.3_f64);
        let d32 = Activation::Tanh.derivatives(0.3_f32);
        for (a, b) in d64.iter().zip(d32) {
            assert!((a - b as f64).abs() < 1e-5);
        }
    }
}
