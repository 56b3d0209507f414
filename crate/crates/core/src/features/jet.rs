//! Truncated Taylor arithmetic along one input direction.
//!
//! A jet of order `K` stores `c_k = u⁽ᵏ⁾/k!` for `k = 0..=K`. Sums, products
//! and composition with an activation are exact up to order `K`, so pushing a
//! jet through a network yields exact directional derivatives of its output.

use std::ops::{Add, AddAssign, Mul, Sub};

use crate::error::{Error, Result};
use crate::features::activation::Activation;

pub const MAX_JET_ORDER: usize = 4;

const FACTORIAL: [f64; 6] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaylorJet {
    coeffs: [f64; MAX_JET_ORDER + 1],
    order: usize,
}

impl TaylorJet {
    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = [0.0; MAX_JET_ORDER + 1];
        coeffs[0] = value;
        Self { coeffs, order }
    }

    /// The jet of `t ↦ x + slope·t`.
    pub fn variable(x: f64, slope: f64, order: usize) -> Self {
        let mut j = Self::constant(x, order);
        if order >= 1 {
            j.coeffs[1] = slope;
        }
        j
    }

    pub fn from_coeffs(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > MAX_JET_ORDER + 1 {
            return Err(Error::UnsupportedOrder(coeffs.len().saturating_sub(1)));
        }
        let mut c = [0.0; MAX_JET_ORDER + 1];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Ok(Self {
            coeffs: c,
            order: coeffs.len() - 1,
        })
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs[..=self.order]
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// `k`-th derivative, `k!·c_k`.
    pub fn derivative(&self, k: usize) -> f64 {
        assert!(k <= self.order, "derivative {k} beyond jet order {}", self.order);
        FACTORIAL[k] * self.coeffs[k]
    }

    /// All derivatives `u, u', …, u⁽ᴷ⁾`.
    pub fn derivatives(&self) -> Vec<f64> {
        (0..=self.order).map(|k| self.derivative(k)).collect()
    }

    pub fn scale(mut self, s: f64) -> Self {
        for c in &mut self.coeffs[..=self.order] {
            *c *= s;
        }
        self
    }

    /// Composes with a scalar function whose derivatives at `c_0` are
    /// `derivs[0..=K]`.
    pub fn compose(&self, derivs: &[f64]) -> Self {
        let k_max = self.order;
        debug_assert!(derivs.len() > k_max);
        let mut delta = *self;
        delta.coeffs[0] = 0.0;
        let mut out = Self::constant(derivs[0], k_max);
        let mut power = Self::constant(1.0, k_max);
        for k in 1..=k_max {
            power = power * delta;
            let w = derivs[k] / FACTORIAL[k];
            for n in k..=k_max {
                out.coeffs[n] += w * power.coeffs[n];
            }
        }
        out
    }

    /// `σ(self)` for an activation.
    pub fn activate(&self, act: Activation) -> Self {
        self.compose(&act.derivatives(self.coeffs[0]))
    }

    /// Adjoint of [`TaylorJet::activate`]: maps the cotangent of the output
    /// coefficients to the cotangent of the input coefficients.
    ///
    /// With `p = σ'(z)` as a jet, `∂y_n/∂z_m = p_{n-m}`.
    pub fn activate_adjoint(&self, act: Activation, out_bar: &[f64]) -> [f64; MAX_JET_ORDER + 1] {
        let d = act.derivatives(self.coeffs[0]);
        let p = self.compose(&d[1..]);
        let mut z_bar = [0.0; MAX_JET_ORDER + 1];
        for (m, zb) in z_bar.iter_mut().enumerate().take(self.order + 1) {
            for n in m..=self.order {
                *zb += out_bar[n] * p.coeffs[n - m];
            }
        }
        z_bar
    }
}

impl Add for TaylorJet {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for TaylorJet {
    fn add_assign(&mut self, rhs: Self) {
        debug_assert_eq!(self.order, rhs.order);
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs) {
            *a += b;
        }
    }
}

impl Sub for TaylorJet {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        debug_assert_eq!(self.order, rhs.order);
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs) {
            *a -= b;
        }
        self
    }
}

impl Mul for TaylorJet {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        debug_assert_eq!(self.order, rhs.order);
        let k = self.order;
        let mut out = Self::constant(0.0, k);
        for n in 0..=k {
            out.coeffs[n] = (0..=n).map(|i| self.coeffs[i] * rhs.coeffs[n - i]).sum();
        }
        out
    }
}

impl Mul<f64> for TaylorJet {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}
