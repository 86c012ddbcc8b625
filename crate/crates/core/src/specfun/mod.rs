//! Special functions and the normalisation constants built from them.

mod bessel;
mod gamma;

pub use bessel::{
    bessel_j, bessel_j_asymptotic, bessel_j_miller, bessel_j_norm, bessel_j_series,
    ASYMPTOTIC_MIN, BESSEL_MAX_ARG, SERIES_MAX,
};
pub(crate) use bessel::bessel_j_norm_unchecked;
pub use gamma::{gamma_fn, gamma_ratio, GAMMA_MAX_ARG};

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// The multi-index γ = (γ₁, …, γₙ) of the Bessel operators, with its
/// dimension and the cached sum |γ|.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselIndex {
    gamma: Vec<f64>,
    abs_gamma: f64,
}

impl BesselIndex {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::Invalid("multi-index must have n >= 1 components".into()));
        }
        if let Some(&g) = gamma.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::Invalid(format!("gamma components must be finite and >= 0, got {g}")));
        }
        let abs_gamma = gamma.iter().sum();
        Ok(Self { gamma, abs_gamma })
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn n(&self) -> usize {
        self.gamma.len()
    }

    pub fn abs_gamma(&self) -> f64 {
        self.abs_gamma
    }

    /// n + |γ|, the effective dimension that appears throughout.
    pub fn eff_dim(&self) -> f64 {
        self.n() as f64 + self.abs_gamma
    }

    /// Smallest order strictly above the convergence threshold n + |γ| - 1.
    pub fn min_order(&self) -> f64 {
        self.eff_dim() - 1.0
    }

    /// Smallest m with 2m > n + |γ| - 1.
    pub fn minimal_m(&self) -> u32 {
        let thr = self.min_order();
        let mut m = 1u32;
        while 2.0 * m as f64 <= thr {
            m += 1;
        }
        m
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Order of a potential or of the operator M^{γ,k}; `m` is set when k = 2m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialOrder {
    k: f64,
    m: Option<u32>,
}

impl PotentialOrder {
    pub fn new(k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::Invalid(format!("order must be positive, got {k}")));
        }
        let m = if k.fract() == 0.0 && (k as u64).is_multiple_of(2) {
            Some((k / 2.0) as u32)
        } else {
            None
        };
        Ok(Self { k, m })
    }

    pub fn even(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::Invalid("m must be positive".into()));
        }
        Ok(Self {
            k: 2.0 * m as f64,
            m: Some(m),
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn m(&self) -> Option<u32> {
        self.m
    }

    /// k > n + |γ| - 1.
    pub fn is_valid_for(&self, idx: &BesselIndex) -> bool {
        self.k > idx.min_order()
    }

    pub fn require_valid(&self, idx: &BesselIndex) -> Result<()> {
        if self.is_valid_for(idx) {
            Ok(())
        } else {
            Err(Error::OrderTooSmall {
                k: self.k,
                min: idx.min_order(),
            })
        }
    }

    /// λ = (k - n - |γ| - 1)/2, the exponent of (t² - |y|²).
    pub fn lambda(&self, idx: &BesselIndex) -> f64 {
        0.5 * (self.k - idx.eff_dim() - 1.0)
    }
}

/// 𝐣_γ(x; ξ) = ∏ j_{(γᵢ-1)/2}(xᵢ ξᵢ).
pub fn jgamma_n(idx: &BesselIndex, x: &[f64], xi: &[f64]) -> Result<f64> {
    idx.check_point(x)?;
    idx.check_point(xi)?;
    let mut prod = 1.0;
    for ((g, xv), xiv) in idx.gamma().iter().zip(x).zip(xi) {
        prod *= bessel_j_norm(0.5 * (g - 1.0), xv * xiv)?;
    }
    Ok(prod)
}

/// C(ν) = Γ((ν+1)/2) / (√π Γ(ν/2)), the normalisation of the Poisson operator.
pub fn poisson_const(nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain {
            func: "poisson_const",
            value: nu,
            expected: "nu > 0",
        });
    }
    Ok(gamma_fn(0.5 * (nu + 1.0))? / (PI.sqrt() * gamma_fn(0.5 * nu)?))
}

/// Weighted area |S₁⁺(n)|_γ = ∏Γ((γᵢ+1)/2) / (2^{n-1} Γ((n+|γ|)/2)).
pub fn sphere_const(idx: &BesselIndex) -> Result<f64> {
    let mut prod = 1.0;
    for g in idx.gamma() {
        prod *= gamma_fn(0.5 * (g + 1.0))?;
    }
    Ok(prod / (2f64.powi(idx.n() as i32 - 1) * gamma_fn(0.5 * idx.eff_dim())?))
}

/// N(k, γ, n) = 2^{k-n-1}/√π · ∏Γ((γᵢ+1)/2) · Γ((k-n-|γ|+1)/2) · Γ(k/2).
pub fn riesz_const(k: f64, idx: &BesselIndex) -> Result<f64> {
    let shifted = 0.5 * (k - idx.eff_dim() + 1.0);
    if !(shifted > 0.0) || !(k > 0.0) {
        return Err(Error::Domain {
            func: "riesz_const",
            value: k,
            expected: "k > n + |gamma| - 1",
        });
    }
    let mut prod = 1.0;
    for g in idx.gamma() {
        prod *= gamma_fn(0.5 * (g + 1.0))?;
    }
    Ok(2f64.powf(k - idx.n() as f64 - 1.0) / PI.sqrt() * prod * gamma_fn(shifted)? * gamma_fn(0.5 * k)?)
}
