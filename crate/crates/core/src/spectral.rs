//! Fourier-Bessel transforms in one spatial dimension and a numerical check
//! of the potential's multiplier
//!
//! ```text
//! ℱ_γ[I^k_{s,γ} hF](τ, ξ) = 𝒬 |τ² - ξ²|^{-k/2} ℱ_γ[hF](τ, ξ),
//! ℱ_γ[g](τ, ξ) = ∫∫ g(t, x) e^{-itτ} j_{(γ-1)/2}(xξ) x^γ dt dx.
//! ```
//!
//! The left side is computed by transforming the potential sampled on a
//! `(t, x)` lattice. Inside the light cone the potential decays only like a
//! power of t, so the time axis carries a smooth taper; the discarded part
//! oscillates without stationary phase away from `|τ| = ξ`, which is why
//! frequencies near the cone are rejected.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::means::{uniform_radii, MeanProfile};
use crate::potential::TimeWindow;
use crate::quadrature::{integrate_semi_infinite, tanh_sinh, DecayHint, GaussLegendre, QuadSpec};
use crate::specfun::{bessel_j_norm, bessel_j_norm_unchecked, gamma_fn, riesz_const, sphere_const, BesselIndex, PotentialOrder};

/// Relative cone margin used by [`symbol_check`].
pub const CONE_MARGIN: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `ξ² >= τ²`.
    Outside,
    /// `ξ² < τ²`, `τ >= 0`.
    Forward,
    /// `ξ² < τ²`, `τ < 0`.
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqPoint {
    pub tau: f64,
    pub xi: f64,
}

impl FreqPoint {
    pub fn new(tau: f64, xi: f64) -> Result<Self> {
        if !(tau.is_finite() && xi.is_finite() && xi >= 0.0) {
            return Err(Error::Invalid(format!("frequency point needs finite tau and xi >= 0, got ({tau}, {xi})")));
        }
        Ok(Self { tau, xi })
    }

    pub fn region(&self) -> Region {
        if self.xi * self.xi >= self.tau * self.tau {
            Region::Outside
        } else if self.tau >= 0.0 {
            Region::Forward
        } else {
            Region::Backward
        }
    }

    /// The phase 𝒬 for order `k`.
    pub fn phase(&self, k: f64) -> Complex64 {
        match self.region() {
            Region::Outside => Complex64::new(1.0, 0.0),
            Region::Forward => Complex64::from_polar(1.0, -k * FRAC_PI_2),
            Region::Backward => Complex64::from_polar(1.0, k * FRAC_PI_2),
        }
    }

    /// `𝒬 |τ² - ξ²|^{-k/2}`.
    pub fn symbol(&self, k: f64) -> Complex64 {
        self.phase(k) * (self.tau * self.tau - self.xi * self.xi).abs().powf(-0.5 * k)
    }

    /// Fails when `||τ| - ξ| < margin · max(|τ|, ξ)`.
    pub fn require_off_cone(&self, margin: f64) -> Result<()> {
        let scale = self.tau.abs().max(self.xi);
        if (self.tau.abs() - self.xi).abs() < margin * scale || scale == 0.0 {
            Err(Error::NearCone {
                tau: self.tau,
                xi: self.xi,
                margin: margin * scale,
            })
        } else {
            Ok(())
        }
    }
}

/// Smallest `c` with `envelope(c) <= eps · envelope(0)`, on a doubling-then-bisection search.
fn negligible_beyond(hint: &DecayHint, eps: f64) -> f64 {
    let target = eps * hint.envelope(0.0);
    let mut hi = 1.0;
    while hint.envelope(hi) > target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if hint.envelope(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn two_sided(h: &TimeWindow) -> Result<DecayHint> {
    h.two_sided()
        .copied()
        .ok_or(Error::DecayMissing("window has no two-sided decay bound"))
}

fn spatial_decay(f: &ScalarField) -> Result<DecayHint> {
    f.decay().copied().ok_or(Error::DecayMissing("field has no decay bound"))
}

/// `ĥ(τ) = ∫ h(t) e^{-itτ} dt`.
pub fn fourier_time(h: &TimeWindow, tau: f64, spec: &QuadSpec) -> Result<Complex64> {
    let hint = two_sided(h)?;
    let both = DecayHint {
        scale: 2.0 * hint.scale,
        ..hint
    };
    let re = integrate_semi_infinite(|t| Ok((h.eval(t) + h.eval(-t)) * (t * tau).cos()), 0.0, &both, spec)?;
    let im = integrate_semi_infinite(|t| Ok(-(h.eval(t) - h.eval(-t)) * (t * tau).sin()), 0.0, &both, spec)?;
    Ok(Complex64::new(re.value, im.value))
}

/// `∫₀^∞ F(x) j_{(γ-1)/2}(xξ) x^γ dx`; uses `|j_ν| <= 1` for `ν >= -1/2`.
/// Arguments `xξ` past the public Bessel range go to the asymptotic branch.
pub fn hankel_1d(f: &ScalarField, gamma1: f64, xi: f64, spec: &QuadSpec) -> Result<f64> {
    BesselIndex::new(vec![gamma1])?;
    let nu = 0.5 * (gamma1 - 1.0);
    bessel_j_norm(nu, 0.0)?;
    if f.n() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: f.n() });
    }
    let hint = spatial_decay(f)?;
    let env = DecayHint {
        power: hint.power + gamma1,
        ..hint
    };
    let r = integrate_semi_infinite(|x| Ok(f.eval(&[x]) * bessel_j_norm_unchecked(nu, x * xi) * x.powf(gamma1)), 0.0, &env, spec)?;
    Ok(r.value)
}

/// `ℱ_γ[hF](τ, ξ) = ĥ(τ) · ∫₀^∞ F(x) j_{(γ-1)/2}(xξ) x^γ dx` for n = 1.
pub fn fourier_bessel_1d(h: &TimeWindow, f: &ScalarField, gamma1: f64, p: FreqPoint, spec: &QuadSpec) -> Result<Complex64> {
    if !(gamma1 >= 0.0 && gamma1.is_finite()) {
        return Err(Error::Invalid(format!("gamma must be >= 0, got {gamma1}")));
    }
    let space = hankel_1d(f, gamma1, p.xi, spec)?;
    if space == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(fourier_time(h, p.tau, spec)? * space)
}

/// Sampling of the potential: common step for t, x and radius, latest time,
/// and the start of the time taper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGrid {
    pub step: f64,
    pub t_max: f64,
    pub taper_from: f64,
}

impl Default for SpectralGrid {
    fn default() -> Self {
        Self {
            step: 0.1,
            t_max: 50.0,
            taper_from: 20.0,
        }
    }
}

impl SpectralGrid {
    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.taper_from > 0.0 && self.t_max > self.taper_from + 4.0 * self.step) {
            return Err(Error::Invalid(format!("bad spectral grid {self:?}")));
        }
        Ok(())
    }

    /// `1` up to `taper_from`, then a C^∞ step down to `0` at `t_max`.
    pub fn taper(&self, t: f64) -> f64 {
        let u = (self.t_max - t) / (self.t_max - self.taper_from);
        if u >= 1.0 {
            return 1.0;
        }
        if u <= 0.0 {
            return 0.0;
        }
        let psi = |v: f64| if v <= 0.0 { 0.0 } else { (-1.0 / v).exp() };
        psi(u) / (psi(u) + psi(1.0 - u))
    }
}

/// `(I^k_{s,γ} hF)(t_i, x_j)` on a lattice, row-major in x.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialGrid {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    pub grid: SpectralGrid,
    pub gamma1: f64,
}

impl PotentialGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.t.len() + i]
    }

    /// Trapezoid-rule `ℱ_γ` of the tapered samples. The x rule has an
    /// `O(step^{1+γ})` error from the `x^γ` weight at the wall.
    pub fn transform(&self, p: FreqPoint) -> Result<Complex64> {
        let nu = 0.5 * (self.gamma1 - 1.0);
        let d = self.grid.step;
        let phases: Vec<Complex64> = self
            .t
            .iter()
            .map(|&t| Complex64::from_polar(self.grid.taper(t), -t * p.tau))
            .collect();
        let mut total = Complex64::new(0.0, 0.0);
        for (j, &x) in self.x.iter().enumerate() {
            let wx = if j == 0 || j + 1 == self.x.len() { 0.5 } else { 1.0 };
            let spatial = wx * x.powf(self.gamma1) * bessel_j_norm_unchecked(nu, x * p.xi);
            if spatial == 0.0 {
                continue;
            }
            let row = &self.values[j * self.t.len()..(j + 1) * self.t.len()];
            let s: Complex64 = row.iter().zip(&phases).map(|(v, ph)| ph * v).sum();
            total += s * spatial;
        }
        Ok(total * d * d)
    }
}

/// Even cubic interpolant on `0, step, 2 step, …`, ghosts mirrored through 0.
struct EvenCubic {
    step: f64,
    values: Vec<f64>,
}

impl EvenCubic {
    fn value(&self, i: isize) -> f64 {
        self.values[i.unsigned_abs()]
    }

    fn eval(&self, s: f64) -> f64 {
        let u = s / self.step;
        let last = self.values.len() as isize - 1;
        let j = (u.floor() as isize).clamp(0, last - 1);
        let first = (j - 1).min(last - 3);
        let mut sum = 0.0;
        for a in 0..4 {
            let mut l = self.value(first + a);
            for b in 0..4 {
                if a != b {
                    l *= (u - (first + b) as f64) / (a - b) as f64;
                }
            }
            sum += l;
        }
        sum
    }
}

/// Samples `(I^k_{s,γ} hF)(t, x)` through the windowed mean integral:
/// per x, the means are tabulated once, `𝓜_s = s^{k-1} B(s)` is sampled
/// with `B` smooth and even, and the window is convolved against it on the
/// shared t/s lattice.
pub fn potential_grid(
    h: &TimeWindow,
    f: &ScalarField,
    gamma1: f64,
    k: f64,
    grid: SpectralGrid,
    spec: &QuadSpec,
) -> Result<PotentialGrid> {
    grid.validate()?;
    let idx = BesselIndex::new(vec![gamma1])?;
    bessel_j_norm(0.5 * (gamma1 - 1.0), 0.0)?;
    PotentialOrder::new(k)?.require_valid(&idx)?;
    if f.n() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: f.n() });
    }
    let d = grid.step;
    let c_h = negligible_beyond(&two_sided(h)?, 1e-13);
    let c_f = negligible_beyond(&spatial_decay(f)?, 1e-13);
    let lag = (c_h / d).ceil() as isize;
    let t_hi = (grid.t_max / d).ceil() as isize;
    let t: Vec<f64> = (-lag..=t_hi).map(|i| i as f64 * d).collect();
    let s_hi = (t_hi + lag) as usize;
    let radii = uniform_radii(d, s_hi as f64 * d)?;
    let x_hi = s_hi + (c_f / d).ceil() as usize;
    let x: Vec<f64> = (0..=x_hi).map(|j| j as f64 * d).collect();

    let ratio = sphere_const(&idx)? / riesz_const(k, &idx)?;
    let dim = idx.eff_dim();
    let lambda = PotentialOrder::new(k)?.lambda(&idx);
    let b0_factor = gamma_fn(lambda + 1.0)? * gamma_fn(0.5 * dim)? / (2.0 * gamma_fn(0.5 * (k + 1.0))?);
    let gl = GaussLegendre::new(6);
    // window at lattice lag m and Gauss node q inside a panel: h(m d - node)
    let lags: Vec<Vec<f64>> = (-lag - 1..=lag + 1)
        .map(|m| gl.nodes.iter().map(|z| h.eval(m as f64 * d - 0.5 * d * (1.0 + z))).collect())
        .collect();
    let inner = spec.tightened(3.0);

    let rows: Vec<Vec<f64>> = x
        .par_iter()
        .map(|&xj| -> Result<Vec<f64>> {
            let profile = MeanProfile::compute(f, &idx, &[xj], radii.clone(), &inner)?;
            let mut b = vec![f.eval(&[xj]) * b0_factor];
            for &s in &radii[1..] {
                b.push(profile.mkt(k, s, &inner)? / s.powf(k - 1.0));
            }
            let b = EvenCubic { step: d, values: b };
            // s^{k-1} B(s) at the Gauss nodes of every panel [l d, (l+1) d]
            let panels: Vec<Vec<f64>> = (0..s_hi)
                .map(|l| {
                    gl.nodes
                        .iter()
                        .map(|z| {
                            let s = (l as f64 + 0.5 * (1.0 + z)) * d;
                            s.powf(k - 1.0) * b.eval(s)
                        })
                        .collect()
                })
                .collect();
            let mut row = Vec::with_capacity(t.len());
            for (i, &ti) in t.iter().enumerate() {
                let ti_idx = i as isize - lag;
                let lo = (ti_idx - lag).max(1);
                let hi = (ti_idx + lag).min(s_hi as isize - 1);
                let mut acc = 0.0;
                for l in lo..=hi {
                    let hrow = &lags[(ti_idx - l + lag + 1) as usize];
                    let prow = &panels[l as usize];
                    for q in 0..gl.nodes.len() {
                        acc += gl.weights[q] * hrow[q] * prow[q];
                    }
                }
                acc *= 0.5 * d;
                if ti_idx - lag <= 0 {
                    // first panel: s^{k-1} is not smooth at 0
                    let (r, _) = tanh_sinh(|s, _, _| Ok(h.eval(ti - s) * s.powf(k - 1.0) * b.eval(s)), 0.0, d, &inner)?;
                    acc += r.value;
                }
                row.push(ratio * acc);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(PotentialGrid {
        t,
        x,
        values: rows.concat(),
        grid,
        gamma1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolCheck {
    pub points: Vec<FreqPoint>,
    /// Transform of the sampled potential.
    pub lhs: Vec<Complex64>,
    /// Symbol times the transform of the input.
    pub rhs: Vec<Complex64>,
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
}

/// Both sides of the multiplier identity at each point, with `|lhs - rhs| / |rhs|`.
pub fn symbol_check(
    k: f64,
    gamma1: f64,
    h: &TimeWindow,
    f: &ScalarField,
    points: &[FreqPoint],
    spec: &QuadSpec,
) -> Result<SymbolCheck> {
    symbol_check_on(SpectralGrid::default(), k, gamma1, h, f, points, spec)
}

pub fn symbol_check_on(
    grid: SpectralGrid,
    k: f64,
    gamma1: f64,
    h: &TimeWindow,
    f: &ScalarField,
    points: &[FreqPoint],
    spec: &QuadSpec,
) -> Result<SymbolCheck> {
    let d = 1.0 + gamma1;
    if !(k > d - 1.0 && k < d + 1.0) {
        return Err(Error::Invalid(format!("order {k} outside ({}, {})", d - 1.0, d + 1.0)));
    }
    for p in points {
        p.require_off_cone(CONE_MARGIN)?;
    }
    let pot = potential_grid(h, f, gamma1, k, grid, spec)?;
    let mut lhs = Vec::with_capacity(points.len());
    let mut rhs = Vec::with_capacity(points.len());
    let mut deviations = Vec::with_capacity(points.len());
    for &p in points {
        let l = pot.transform(p)?;
        let r = p.symbol(k) * fourier_bessel_1d(h, f, gamma1, p, spec)?;
        deviations.push((l - r).norm() / r.norm());
        lhs.push(l);
        rhs.push(r);
    }
    let max_deviation = deviations.iter().fold(0.0f64, |a, &b| a.max(b));
    Ok(SymbolCheck {
        points: points.to_vec(),
        lhs,
        rhs,
        deviations,
        max_deviation,
    })
}

/// The frequency panel used by the acceptance run: two points per region.
pub fn default_panel() -> Vec<FreqPoint> {
    [(0.0, 1.0), (0.5, 1.5), (1.5, 0.5), (2.0, 1.0), (-1.5, 0.5), (-2.0, 1.2)]
        .iter()
        .map(|&(t, x)| FreqPoint { tau: t, xi: x })
        .collect()
}
