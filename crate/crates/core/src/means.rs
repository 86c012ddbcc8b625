//! Weighted spherical means, the Poisson operator, and the operator
//! `𝓜^{γ,k}_t f(x) = ∫₀^t (t² - ρ²)^λ ρ^{d-1} (M^γ_ρ f)(x) dρ`,
//! `d = n + |γ|`, `λ = (k - d - 1)/2`, in its radial, ball and Poisson forms.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::quadrature::{sphere_quad, tanh_sinh, tanh_sinh_ref, GaussLegendre, QuadSpec};
use crate::specfun::{bessel_j_norm, gamma_fn, jgamma_n, poisson_const, sphere_const, BesselIndex, PotentialOrder};
use crate::translation::{gt1d, gtn};

/// `(M^γ_t f)(at)`. For n = 1 this is the one-dimensional translation by `t`.
pub fn spherical_mean(f: &ScalarField, idx: &BesselIndex, at: &[f64], t: f64, spec: &QuadSpec) -> Result<f64> {
    idx.check_point(at)?;
    if f.n() != idx.n() {
        return Err(Error::DimensionMismatch {
            expected: idx.n(),
            got: f.n(),
        });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain {
            func: "spherical_mean",
            value: t,
            expected: "radius t >= 0",
        });
    }
    if t == 0.0 {
        return Ok(f.eval(at));
    }
    match idx.n() {
        1 => gt1d(idx.gamma()[0], 0, t, f, at, spec),
        2 | 3 => {
            let inner = spec.tightened(3.0);
            let mut y = vec![0.0; idx.n()];
            let r = sphere_quad(
                idx,
                |th| {
                    for (yi, &c) in y.iter_mut().zip(th) {
                        *yi = t * c;
                    }
                    gtn(idx, &y, f, at, &inner)
                },
                spec,
            )?;
            Ok(r.value / sphere_const(idx)?)
        }
        n => Err(Error::UnsupportedDimension(n)),
    }
}

/// Closed-form mean of the eigenfunction: `𝐣_γ(at; ξ) j_{d/2-1}(ρ|ξ|)`.
pub fn eigen_mean(idx: &BesselIndex, xi: &[f64], at: &[f64], rho: f64) -> Result<f64> {
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(jgamma_n(idx, at, xi)? * bessel_j_norm(0.5 * idx.eff_dim() - 1.0, rho * norm)?)
}

/// Closed form of `𝓜^{γ,k}_t` applied to the eigenfunction:
/// `Γ(d/2) Γ((k-d+1)/2) / (2 Γ((k+1)/2)) · t^{k-1} j_{(k-1)/2}(t|ξ|) · 𝐣_γ(at; ξ)`.
pub fn eigen_mkt(idx: &BesselIndex, xi: &[f64], k: f64, at: &[f64], t: f64) -> Result<f64> {
    PotentialOrder::new(k)?.require_valid(idx)?;
    let d = idx.eff_dim();
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c = gamma_fn(0.5 * d)? * gamma_fn(0.5 * (k - d + 1.0))? / (2.0 * gamma_fn(0.5 * (k + 1.0))?);
    Ok(c * t.powf(k - 1.0) * bessel_j_norm(0.5 * (k - 1.0), t * norm)? * jgamma_n(idx, at, xi)?)
}

/// `𝒫^ν_x g = C(ν) ∫₀^π g(x cos φ) sin^{ν-1}φ dφ` for even `g`, with `𝒫⁰ = I`.
///
/// Evaluated on `[0, π/2]` as
/// `2C(ν) [g(x)/ν + ∫ sin^{ν-1}φ (g(x cos φ) - g(x) cos φ) dφ]`, so that the
/// quadrature never sees the `φ^{ν-1}` spike at the origin undamped.
pub fn poisson_1d<G>(nu: f64, g: G, x: f64, spec: &QuadSpec) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
{
    poisson_pieces(nu, g, x, &[], spec)
}

/// Poisson average split at the angles where `x cos φ` crosses `breaks`.
fn poisson_pieces<G>(nu: f64, mut g: G, x: f64, breaks: &[f64], spec: &QuadSpec) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
{
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::Domain {
            func: "poisson_1d",
            value: nu,
            expected: "nu >= 0",
        });
    }
    if !(x >= 0.0) {
        return Err(Error::Domain {
            func: "poisson_1d",
            value: x,
            expected: "x >= 0",
        });
    }
    let gx = g(x)?;
    if nu == 0.0 || x == 0.0 {
        return Ok(gx);
    }
    let c = poisson_const(nu)?;
    let ref_mass = gx.abs().max(g(0.0)?.abs()) / (2.0 * c);
    let expo = nu - 1.0;
    // angles in increasing order: u = x cos φ decreases from x to 0
    let mut angles = vec![0.0];
    for &u in breaks.iter().rev() {
        if u > 0.0 && u < x {
            angles.push((u / x).acos());
        }
    }
    angles.push(FRAC_PI_2);
    let mut total = 0.0;
    for w in angles.windows(2) {
        let (pa, pb) = (w[0], w[1]);
        if pb <= pa {
            continue;
        }
        let (r, _) = tanh_sinh_ref(
            |_, da, db| {
                let sin_phi = (pa + da).sin();
                let cos_phi = ((FRAC_PI_2 - pb) + db).sin();
                let gu = g(x * cos_phi)?;
                let v = gu - gx * cos_phi;
                let noise = 4.0 * f64::EPSILON * (gu.abs() + gx.abs());
                Ok(if v.abs() <= noise { 0.0 } else { v * sin_phi.powf(expo) })
            },
            pa,
            pb,
            spec,
            ref_mass,
        )?;
        total += r.value;
    }
    Ok(2.0 * c * (gx / nu + total))
}

fn order_checked(idx: &BesselIndex, k: f64) -> Result<f64> {
    let order = PotentialOrder::new(k)?;
    order.require_valid(idx)?;
    Ok(order.lambda(idx))
}

/// `𝓜^{γ,k}_t f(at)` as a radial integral of spherical means.
pub fn mkt_radial(f: &ScalarField, idx: &BesselIndex, k: f64, at: &[f64], t: f64, spec: &QuadSpec) -> Result<f64> {
    let lambda = order_checked(idx, k)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    positive_radius("mkt_radial", t)?;
    let d1 = idx.eff_dim() - 1.0;
    let inner = spec.tightened(3.0);
    let (r, _) = tanh_sinh(
        |rho, _, db| {
            let w = (db * (t + rho)).powf(lambda) * rho.powf(d1);
            Ok(w * spherical_mean(f, idx, at, rho, &inner)?)
        },
        0.0,
        t,
        spec,
    )?;
    Ok(r.value)
}

fn positive_radius(func: &'static str, t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            func,
            value: t,
            expected: "radius t > 0",
        })
    }
}

/// `𝓜^{γ,k}_t f(at)` as the direct integral over the orthant part of the
/// ball `|y| < t` in Cartesian coordinates, normalized by `|S₁⁺(n)|_γ`.
/// Computed on the unit ball, `y = t u`, so that small `t` only enters
/// through the factor `t^{k-1}`.
pub fn mkt_ball(f: &ScalarField, idx: &BesselIndex, k: f64, at: &[f64], t: f64, spec: &QuadSpec) -> Result<f64> {
    let lambda = order_checked(idx, k)?;
    idx.check_point(at)?;
    if idx.n() > 3 {
        return Err(Error::UnsupportedDimension(idx.n()));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    positive_radius("mkt_ball", t)?;
    let inner = spec.tightened(3.0 * idx.n() as f64);
    let mut y = vec![0.0; idx.n()];
    let v = ball_level(f, idx, lambda, at, t, 1.0, 0, &mut y, spec, &inner)?;
    Ok(t.powf(k - 1.0) * v / sphere_const(idx)?)
}

/// Integrates `u_level` over `(0, radius)` where `radius² = 1 - Σ_{i<level} u_i²`;
/// the translation is taken at `y = t u`.
#[allow(clippy::too_many_arguments)]
fn ball_level(
    f: &ScalarField,
    idx: &BesselIndex,
    lambda: f64,
    at: &[f64],
    t: f64,
    radius: f64,
    level: usize,
    y: &mut [f64],
    spec: &QuadSpec,
    inner: &QuadSpec,
) -> Result<f64> {
    let g = idx.gamma()[level];
    let last = level + 1 == idx.n();
    let mut local = y.to_vec();
    let (r, _) = tanh_sinh(
        |yl, _, db| {
            local[level] = yl;
            // radius² - yl², without cancellation
            let rest = db * (radius + yl);
            let w = yl.powf(g);
            if last {
                let y: Vec<f64> = local.iter().map(|u| t * u).collect();
                Ok(w * rest.powf(lambda) * gtn(idx, &y, f, at, inner)?)
            } else {
                Ok(w * ball_level(f, idx, lambda, at, t, rest.sqrt(), level + 1, &mut local, inner, inner)?)
            }
        },
        0.0,
        radius,
        spec,
    )?;
    Ok(r.value)
}

/// Sampled mean profile `ρ ↦ (M^γ_ρ f)(at)` on a grid starting at ρ = 0.
///
/// Between samples the profile is the cubic through the four nearest
/// nodes, with ghost nodes mirrored through ρ = 0 (the mean is even in ρ).
#[derive(Debug, Clone, PartialEq)]
pub struct MeanProfile {
    radii: Vec<f64>,
    values: Vec<f64>,
    at: Vec<f64>,
    idx: BesselIndex,
}

/// `0, step, 2 step, …` up to and including the first node `>= max`.
pub fn uniform_radii(step: f64, max: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && max >= 0.0 && max.is_finite()) {
        return Err(Error::Invalid(format!("bad radius grid: step {step}, max {max}")));
    }
    let count = (max / step - 1e-9).ceil().max(0.0) as usize;
    Ok((0..=count.max(3)).map(|i| i as f64 * step).collect())
}

impl MeanProfile {
    pub fn new(idx: BesselIndex, at: Vec<f64>, radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        idx.check_point(&at)?;
        if radii.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: radii.len(),
                got: values.len(),
            });
        }
        if radii.len() < 4 || radii[0] != 0.0 {
            return Err(Error::Invalid("profile needs at least 4 radii starting at 0".into()));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("profile radii must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("profile values must be finite".into()));
        }
        Ok(Self { radii, values, at, idx })
    }

    /// Means of `f` at every radius, computed in parallel.
    pub fn compute(f: &ScalarField, idx: &BesselIndex, at: &[f64], radii: Vec<f64>, spec: &QuadSpec) -> Result<Self> {
        let values = radii
            .par_iter()
            .map(|&r| spherical_mean(f, idx, at, r, spec))
            .collect::<Result<Vec<_>>>()?;
        Self::new(idx.clone(), at.to_vec(), radii, values)
    }

    pub fn from_fn<F>(idx: &BesselIndex, at: &[f64], radii: Vec<f64>, mut mean: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let values = radii.iter().map(|&r| mean(r)).collect::<Result<Vec<_>>>()?;
        Self::new(idx.clone(), at.to_vec(), radii, values)
    }

    /// Appends means of `f` beyond the current range, continuing with the
    /// last grid spacing, until the profile reaches `max`.
    pub fn extend(&mut self, f: &ScalarField, max: f64, spec: &QuadSpec) -> Result<()> {
        let n = self.radii.len();
        let step = self.radii[n - 1] - self.radii[n - 2];
        let start = self.radii[n - 1];
        let extra = ((max - start) / step - 1e-9).ceil().max(0.0) as usize;
        let new: Vec<f64> = (1..=extra).map(|i| start + i as f64 * step).collect();
        let values = new
            .par_iter()
            .map(|&r| spherical_mean(f, &self.idx, &self.at, r, spec))
            .collect::<Result<Vec<_>>>()?;
        self.radii.extend(new);
        self.values.extend(values);
        Ok(())
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self) -> &[f64] {
        &self.at
    }

    pub fn idx(&self) -> &BesselIndex {
        &self.idx
    }

    pub fn max_radius(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    fn node(&self, i: isize) -> (f64, f64) {
        if i < 0 {
            let j = (-i) as usize;
            (-self.radii[j], self.values[j])
        } else {
            (self.radii[i as usize], self.values[i as usize])
        }
    }

    /// Interval index `j` with `radii[j] <= rho <= radii[j+1]`.
    fn interval(&self, rho: f64) -> usize {
        let last = self.radii.len() - 2;
        match self.radii.binary_search_by(|r| r.partial_cmp(&rho).unwrap()) {
            Ok(i) => i.min(last),
            Err(i) => (i - 1).min(last),
        }
    }

    fn cubic_on(&self, j: usize, rho: f64) -> f64 {
        let first = (j as isize - 1).min(self.radii.len() as isize - 4);
        let nodes = [self.node(first), self.node(first + 1), self.node(first + 2), self.node(first + 3)];
        let mut sum = 0.0;
        for (a, &(ra, va)) in nodes.iter().enumerate() {
            let mut l = va;
            for (b, &(rb, _)) in nodes.iter().enumerate() {
                if a != b {
                    l *= (rho - rb) / (ra - rb);
                }
            }
            sum += l;
        }
        sum
    }

    /// Interpolated mean at `|rho|`.
    pub fn interpolate(&self, rho: f64) -> Result<f64> {
        let rho = rho.abs();
        if rho > self.max_radius() * (1.0 + 1e-12) {
            return Err(Error::ProfileRange {
                required: rho,
                available: self.max_radius(),
            });
        }
        Ok(self.cubic_on(self.interval(rho), rho))
    }

    /// `∫₀^t (t² - ρ²)^λ ρ^{d-1} M(ρ) dρ` over the interpolant: Gauss-Legendre
    /// on interior grid intervals, where the integrand is smooth, and
    /// tanh-sinh on the pieces touching the endpoint singularities.
    pub fn mkt(&self, k: f64, t: f64, spec: &QuadSpec) -> Result<f64> {
        let lambda = order_checked(&self.idx, k)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        positive_radius("MeanProfile::mkt", t)?;
        if t > self.max_radius() * (1.0 + 1e-12) {
            return Err(Error::ProfileRange {
                required: t,
                available: self.max_radius(),
            });
        }
        let d1 = self.idx.eff_dim() - 1.0;
        let last = self.interval(t);
        let gl = gauss8();
        let mut total = 0.0f64;
        for j in 0..=last {
            let a = self.radii[j];
            let b = self.radii[j + 1].min(t);
            if b <= a {
                continue;
            }
            if b == t {
                // piece ending on the cone: take out (t - ρ)^λ φ(t) analytically,
                // the rest vanishes like (t - ρ)^{λ+1}
                let phi = |rho: f64| (t + rho).powf(lambda) * rho.powf(d1) * self.cubic_on(j, rho);
                let phi_t = phi(t);
                let head = phi_t * (b - a).powf(lambda + 1.0) / (lambda + 1.0);
                let (r, _) = tanh_sinh_ref(
                    |rho, _, db| Ok(db.powf(lambda) * (phi(rho) - phi_t)),
                    a,
                    b,
                    spec,
                    head.abs() + total.abs(),
                )?;
                total += r.value + head;
            } else if j == 0 || j + 2 >= last {
                let gap = t - b;
                let (r, _) = tanh_sinh(
                    |rho, _, db| {
                        let dt = db + gap;
                        Ok((dt * (t + rho)).powf(lambda) * rho.powf(d1) * self.cubic_on(j, rho))
                    },
                    a,
                    b,
                    spec,
                )?;
                total += r.value;
            } else {
                total += gl.integrate(|rho| (t * t - rho * rho).powf(lambda) * rho.powf(d1) * self.cubic_on(j, rho), a, b);
            }
        }
        Ok(total)
    }
}

fn gauss8() -> &'static GaussLegendre {
    static GL: std::sync::OnceLock<GaussLegendre> = std::sync::OnceLock::new();
    GL.get_or_init(|| GaussLegendre::new(8))
}

/// `𝓜^{γ,k}_t` from a sampled profile through the Poisson form
/// `t^{k-d} / (2 C(ν)) · 𝒫^ν_t [ρ^{d-1} M(ρ)](t)`, `ν = k - d + 1`.
pub fn mkt_via_poisson(profile: &MeanProfile, k: f64, t: f64, spec: &QuadSpec) -> Result<f64> {
    let idx = profile.idx();
    order_checked(idx, k)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    positive_radius("mkt_via_poisson", t)?;
    if t > profile.max_radius() * (1.0 + 1e-12) {
        return Err(Error::ProfileRange {
            required: t,
            available: profile.max_radius(),
        });
    }
    let d = idx.eff_dim();
    let nu = k - d + 1.0;
    let p = poisson_pieces(
        nu,
        |u| {
            let u = u.abs();
            Ok(u.powf(d - 1.0) * profile.interpolate(u)?)
        },
        t,
        profile.radii(),
        spec,
    )?;
    Ok(t.powf(k - d) / (2.0 * poisson_const(nu)?) * p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{bump, constant, eigenfunction, gaussian};
    use crate::quadrature::integrate_endpoint_aware;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn spec() -> QuadSpec {
        QuadSpec::with_tol(1e-10)
    }

    fn idx(g: &[f64]) -> BesselIndex {
        BesselIndex::new(g.to_vec()).unwrap()
    }

    #[test]
    fn mean_of_constant_and_zero_radius() {
        for g in [vec![0.4], vec![0.6, 0.8], vec![0.2, 1.0, 0.5]] {
            let i = idx(&g);
            let one = constant(i.n(), 1.0).unwrap();
            let at = vec![0.7; i.n()];
            assert!((spherical_mean(&one, &i, &at, 1.3, &spec()).unwrap() - 1.0).abs() < 1e-10);
            let f = gaussian(i.n(), 1.0).unwrap();
            assert_eq!(spherical_mean(&f, &i, &at, 0.0, &spec()).unwrap(), f.eval(&at));
        }
    }

    #[test]
    fn eigenfunction_mean_closed_form() {
        for (g, xi) in [
            (vec![1.3], vec![0.9]),
            (vec![0.6, 0.8], vec![1.0, 0.5]),
            (vec![0.3, 0.0, 1.1], vec![0.4, 0.8, 0.6]),
        ] {
            let i = idx(&g);
            let f = eigenfunction(&i, &xi).unwrap();
            let at: Vec<f64> = (0..i.n()).map(|j| 0.4 + 0.5 * j as f64).collect();
            for &rho in &[0.25, 1.0, 2.0] {
                let m = spherical_mean(&f, &i, &at, rho, &QuadSpec::with_tol(1e-9)).unwrap();
                let exact = eigen_mean(&i, &xi, &at, rho).unwrap();
                assert!((m - exact).abs() <= 1e-8 * exact.abs().max(1e-3), "{g:?} rho={rho}: {m} vs {exact}");
            }
        }
    }

    #[test]
    fn quadratic_decay_at_small_radius() {
        let i = idx(&[0.6, 0.8]);
        let f = gaussian(2, 1.5).unwrap();
        let at = [0.6, 0.7];
        let dev = |t: f64| spherical_mean(&f, &i, &at, t, &spec()).unwrap() - f.eval(&at);
        let (a, b, c) = (dev(0.1), dev(0.05), dev(0.025));
        assert!((a / b - 4.0).abs() < 0.1 && (b / c - 4.0).abs() < 0.05, "{a} {b} {c}");
    }

    #[test]
    fn poisson_normalization_and_identity() {
        for &nu in &[0.3, 1.0, 2.0, 4.7] {
            let v = poisson_1d(nu, |_| Ok(1.0), 1.7, &spec()).unwrap();
            assert!((v - 1.0).abs() <= 1e-10, "nu={nu}");
        }
        let g = |u: f64| Ok((u * 0.8).cos() + u * u);
        assert_eq!(poisson_1d(0.0, g, 1.3, &spec()).unwrap(), g(1.3).unwrap());
        let v = poisson_1d(2.0, |u| Ok(u * u), 1.5, &spec()).unwrap();
        assert!((v - 0.75).abs() < 1e-12);
    }

    #[test]
    fn poisson_const_normalizes_its_weight() {
        let nu = 2.6;
        let r = integrate_endpoint_aware(
            |_, da, db| Ok(if da < db { da.sin() } else { db.sin() }.powf(nu - 1.0)),
            0.0,
            PI,
            &spec(),
        )
        .unwrap();
        assert!((poisson_const(nu).unwrap() * r.value - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn poisson_against_direct_angular_integral() {
        let (nu, x) = (0.45, 1.2);
        let g = |u: f64| (-u * u).exp() * (1.0 + u * u);
        let direct = integrate_endpoint_aware(
            |phi, da, db| Ok(g(x * phi.cos()) * if da < db { da.sin() } else { db.sin() }.powf(nu - 1.0)),
            0.0,
            PI,
            &QuadSpec::with_tol(1e-12),
        )
        .unwrap()
        .value
            * poisson_const(nu).unwrap();
        let v = poisson_1d(nu, |u| Ok(g(u)), x, &spec()).unwrap();
        assert!((v - direct).abs() < 1e-9, "{v} vs {direct}");
    }

    #[test]
    fn flat_cases() {
        let i = idx(&[0.6, 0.8]);
        let d = i.eff_dim();
        let one = constant(2, 1.0).unwrap();
        let t: f64 = 1.4;
        let v = mkt_radial(&one, &i, d + 1.0, &[0.5, 0.5], t, &spec()).unwrap();
        assert!((v - t.powf(d) / d).abs() < 1e-9);
        let i1 = idx(&[0.0]);
        let one1 = constant(1, 1.0).unwrap();
        let b = mkt_ball(&one1, &i1, 2.0, &[0.3], 0.8, &spec()).unwrap();
        assert!((b - 0.8).abs() < 1e-10);
        assert_eq!(mkt_ball(&one1, &i1, 2.0, &[0.3], 0.0, &spec()).unwrap(), 0.0);
        assert!(matches!(
            mkt_radial(&one, &i, 1.0, &[0.5, 0.5], t, &spec()),
            Err(Error::OrderTooSmall { .. })
        ));
    }

    #[test]
    fn radial_form_matches_eigen_closed_form() {
        let i = idx(&[0.5, 0.5]);
        let xi = [0.8, 0.6];
        let f = eigenfunction(&i, &xi).unwrap();
        let at = [0.4, 1.1];
        for &(k, t) in &[(4.0, 1.5), (2.5, 0.7), (6.0, 2.2)] {
            let v = mkt_radial(&f, &i, k, &at, t, &QuadSpec::with_tol(1e-9)).unwrap();
            let exact = eigen_mkt(&i, &xi, k, &at, t).unwrap();
            assert!((v - exact).abs() <= 1e-7 * exact.abs(), "k={k}: {v} vs {exact}");
        }
    }

    #[test]
    fn eigen_closed_form_matches_half_integer_bessel_form() {
        // k = 2m form with J_{m-1/2}
        let i = idx(&[0.5, 0.5]);
        let (xi, at, t) = ([0.8, 0.6], [0.4, 1.1], 1.7f64);
        let d = i.eff_dim();
        let m = 2.0;
        let a: f64 = 1.0;
        let bessel_form = 2f64.powf(m - 1.5)
            * t.powf(m - 0.5)
            * a.powf(-(m - 0.5))
            * gamma_fn(0.5 * d).unwrap()
            * gamma_fn(0.5 * (2.0 * m - d + 1.0)).unwrap()
            * jgamma_n(&i, &at, &xi).unwrap()
            * crate::specfun::bessel_j(m - 0.5, a * t).unwrap();
        let v = eigen_mkt(&i, &xi, 2.0 * m, &at, t).unwrap();
        assert!((v - bessel_form).abs() < 1e-12 * bessel_form.abs());
    }

    #[test]
    fn profile_interpolation_is_even_and_exact_on_cubics() {
        let i = idx(&[1.0]);
        let radii = uniform_radii(0.1, 2.0).unwrap();
        let p = MeanProfile::from_fn(&i, &[0.0], radii, |r| Ok(1.0 + r * r - 0.2 * r.powi(4) / 4.0)).unwrap();
        let q = MeanProfile::from_fn(&i, &[0.0], uniform_radii(0.1, 2.0).unwrap(), |r| Ok(1.0 - 2.0 * r * r)).unwrap();
        for &r in &[0.0, 0.03, 0.55, 1.37, 1.99, 2.0] {
            assert!((q.interpolate(r).unwrap() - (1.0 - 2.0 * r * r)).abs() < 1e-13);
            assert!((p.interpolate(r).unwrap() - p.interpolate(-r).unwrap()).abs() < 1e-15);
        }
        assert!(matches!(p.interpolate(2.5), Err(Error::ProfileRange { .. })));
        assert!(MeanProfile::new(i.clone(), vec![0.0], vec![0.1, 0.2, 0.3, 0.4], vec![0.0; 4]).is_err());
    }

    #[test]
    fn poisson_form_on_profiles() {
        let i = idx(&[0.6, 0.8]);
        let d = i.eff_dim();
        let radii = uniform_radii(0.05, 3.0).unwrap();
        let flat = MeanProfile::from_fn(&i, &[0.5, 0.5], radii.clone(), |_| Ok(1.0)).unwrap();
        let t: f64 = 2.3;
        let v = mkt_via_poisson(&flat, d + 1.0, t, &spec()).unwrap();
        assert!((v - t.powf(d) / d).abs() < 1e-9);
        assert!((flat.mkt(d + 1.0, t, &spec()).unwrap() - t.powf(d) / d).abs() < 1e-9);

        let xi = [1.0, 0.5];
        let at = [0.7, 1.3];
        let eig = MeanProfile::from_fn(&i, &at, uniform_radii(0.025, 3.0).unwrap(), |r| eigen_mean(&i, &xi, &at, r)).unwrap();
        for &(k, t) in &[(4.0, 2.0), (2.5, 1.1), (3.0, 2.9), (5.1, 1.37)] {
            let exact = eigen_mkt(&i, &xi, k, &at, t).unwrap();
            let a = mkt_via_poisson(&eig, k, t, &spec()).unwrap();
            let b = eig.mkt(k, t, &spec()).unwrap();
            assert!((a - exact).abs() <= 1e-6 * exact.abs(), "poisson k={k}: {a} vs {exact}");
            assert!((b - exact).abs() <= 1e-6 * exact.abs(), "radial k={k}: {b} vs {exact}");
        }
        assert!(matches!(mkt_via_poisson(&eig, 4.0, 3.5, &spec()), Err(Error::ProfileRange { .. })));
    }

    #[test]
    fn poisson_form_matches_radial_form_on_fields() {
        let s = QuadSpec::with_tol(1e-8);
        let i = idx(&[0.4]);
        let f = bump(&[0.6], 1.1).unwrap();
        let at = [0.5];
        let prof = MeanProfile::compute(&f, &i, &at, uniform_radii(0.01, 1.6).unwrap(), &s).unwrap();
        for &(k, t) in &[(1.0, 1.5), (2.0, 0.9), (3.3, 1.2)] {
            let direct = mkt_radial(&f, &i, k, &at, t, &s).unwrap();
            let via = mkt_via_poisson(&prof, k, t, &s).unwrap();
            assert!((via - direct).abs() <= 5.0 * s.tol * direct.abs().max(1.0), "k={k}: {via} vs {direct}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]

        #[test]
        fn mean_stays_within_field_range(
            g1 in 0.0f64..2.0, g2 in 0.0f64..2.0,
            x1 in 0.0f64..2.0, x2 in 0.0f64..2.0, t in 0.0f64..2.5,
        ) {
            let s = QuadSpec::with_tol(1e-9);
            let i = BesselIndex::new(vec![g1, g2]).unwrap();
            let f = gaussian(2, 1.2).unwrap();
            let m = spherical_mean(&f, &i, &[x1, x2], t, &s).unwrap();
            prop_assert!(m >= -s.tol && m <= 1.0 + s.tol);
        }
    }
}
