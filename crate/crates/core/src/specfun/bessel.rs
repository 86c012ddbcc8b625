//! Bessel functions of the first kind for real order `nu >= -1/2` and
//! argument `0 <= x <= 100`.
//!
//! Three evaluation branches are used:
//!
//! * ascending power series for small arguments (`x <= SERIES_MAX`),
//! * Miller's backward recurrence, normalised with the Neumann sum
//!   `(x/2)^mu = sum_k c_k J_{mu+2k}(x)`, for the middle range,
//! * Hankel's asymptotic expansion once `x` is large compared to both 18
//!   and `nu^2`; its smallest term is near `e^{-2x}`.
//!
//! Each branch is exposed so the switchovers can be cross-checked.

use std::f64::consts::PI;

use super::gamma::gamma_unchecked;
use crate::error::{Error, Result};

/// Upper argument for the power-series branch.
pub const SERIES_MAX: f64 = 12.0;
/// Lower argument for the asymptotic branch.
pub const ASYMPTOTIC_MIN: f64 = 18.0;
pub const BESSEL_MAX_ARG: f64 = 100.0;

fn check(func: &'static str, nu: f64, x: f64) -> Result<()> {
    if !(nu >= -0.5) || nu > 50.0 {
        return Err(Error::Domain {
            func,
            value: nu,
            expected: "-1/2 <= nu <= 50",
        });
    }
    if !(0.0..=BESSEL_MAX_ARG).contains(&x) {
        return Err(Error::Domain {
            func,
            value: x,
            expected: "0 <= x <= 100",
        });
    }
    Ok(())
}

/// J_ν(x).
///
/// `J_ν(0)` is infinite for `-1/2 <= ν < 0`; that case is reported as a domain
/// error.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    check("bessel_j", nu, x)?;
    if x == 0.0 {
        return if nu == 0.0 {
            Ok(1.0)
        } else if nu > 0.0 {
            Ok(0.0)
        } else {
            Err(Error::Domain {
                func: "bessel_j",
                value: x,
                expected: "x > 0 for negative order",
            })
        };
    }
    Ok(bessel_j_unchecked(nu, x))
}

pub(crate) fn bessel_j_unchecked(nu: f64, x: f64) -> f64 {
    if x <= SERIES_MAX {
        bessel_j_series(nu, x)
    } else if x >= ASYMPTOTIC_MIN && x > nu * nu {
        bessel_j_asymptotic(nu, x)
    } else {
        bessel_j_miller(nu, x)
    }
}

/// Normalised Bessel function j_ν(x) = 2^ν Γ(ν+1) x^{-ν} J_ν(x), with
/// j_ν(0) = 1.
pub fn bessel_j_norm(nu: f64, x: f64) -> Result<f64> {
    check("bessel_j_norm", nu, x)?;
    Ok(bessel_j_norm_unchecked(nu, x))
}

pub(crate) fn bessel_j_norm_unchecked(nu: f64, x: f64) -> f64 {
    if x <= SERIES_MAX {
        norm_series(nu, x)
    } else {
        (2.0 / x).powf(nu) * gamma_unchecked(nu + 1.0) * bessel_j_unchecked(nu, x)
    }
}

/// Σ_k (-x²/4)^k / (k! (ν+1)_k) with Neumaier-compensated summation.
fn norm_series(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut comp = 0.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (nu + k));
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        if term.abs() <= 1e-18 * sum.abs().max(1e-300) && k > 0.5 * x {
            break;
        }
        if k > 500.0 {
            break;
        }
    }
    sum + comp
}

/// Ascending series branch.
pub fn bessel_j_series(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    (0.5 * x).powf(nu) / gamma_unchecked(nu + 1.0) * norm_series(nu, x)
}

/// Hankel asymptotic branch; accurate once x is well beyond max(18, ν²).
pub fn bessel_j_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        a *= (mu - odd * odd) / (kf * 8.0 * x);
        if a == 0.0 {
            break;
        }
        if a.abs() > prev {
            break;
        }
        prev = a.abs();
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Miller backward-recurrence branch.
pub fn bessel_j_miller(nu: f64, x: f64) -> f64 {
    let base = nu.floor();
    let mu = nu - base;
    let order = base as i64; // -1 only for nu in [-1/2, 0)
    let top = x.max(order.max(0) as f64);
    let start = (top + (160.0 * top).sqrt()) as usize + 20;
    let start = start + (start % 2);
    // Neumann weights (mu + 2k) Γ(mu+k)/k!, kept up to a common factor:
    // g_{k-1} = g_k k / (mu + k - 1), and the k = 0 weight is Γ(mu+1) = g_1.
    let mut gk = 1.0;
    let mut kk = start / 2;
    let (mut above, mut cur) = (0.0, 1e-30);
    let mut norm = (mu + 2.0 * kk as f64) * gk * cur;
    let (mut at_order, mut at_zero, mut at_one) = (0.0, 0.0, 0.0);
    let wanted = order.max(0) as usize;
    if start == wanted {
        at_order = cur;
    }
    let two_over_x = 2.0 / x;
    for k in (1..=start).rev() {
        let next = two_over_x * (mu + k as f64) * cur - above;
        above = cur;
        cur = next;
        let idx = k - 1;
        if idx == wanted {
            at_order = cur;
        }
        if idx == 1 {
            at_one = cur;
        }
        if idx == 0 {
            at_zero = cur;
        }
        if idx % 2 == 0 {
            let half = idx / 2;
            if half >= 1 {
                gk *= (kk as f64) / (mu + kk as f64 - 1.0);
                kk -= 1;
                norm += (mu + 2.0 * half as f64) * gk * cur;
            } else {
                // g_1 holds Γ(mu+1) up to the common factor
                norm += gk * cur;
            }
        }
        if cur.abs() > 1e200 {
            above *= 1e-200;
            cur *= 1e-200;
            norm *= 1e-200;
            at_order *= 1e-200;
            at_one *= 1e-200;
            at_zero *= 1e-200;
        }
    }
    // the common factor is Γ(mu+1) / g_1
    let scale = (0.5 * x).powf(mu) * gk / (gamma_unchecked(mu + 1.0) * norm);
    if order >= 0 {
        at_order * scale
    } else {
        // J_{mu-1} = (2 mu / x) J_mu - J_{mu+1}
        (2.0 * mu / x * at_zero - at_one) * scale
    }
}
