//! Numerical integration: tanh-sinh on finite intervals (endpoint
//! singularities of algebraic type), truncated semi-infinite integration
//! driven by a decay hint, and weighted quadrature over the orthant part of
//! the unit sphere.
//!
//! Integrands that are singular at an endpoint lose accuracy if they are
//! handed the abscissa `x` alone, because `b - x` cancels. The
//! endpoint-aware entry point [`integrate_endpoint_aware`] passes the exact
//! distances to both endpoints alongside `x`.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::specfun::BesselIndex;

/// Deepest refinement level available in the node table.
pub const MAX_LEVEL: usize = 12;
const U_MAX: f64 = 5.0;
const NEGLIGIBLE: f64 = 1e-19;

/// Integration policy shared by every integral in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    /// Target error, relative to the L1 mass of the integrand.
    pub tol: f64,
    /// Number of tanh-sinh levels allowed (step 1, 1/2, 1/4, ...).
    pub max_levels: usize,
    /// Semi-infinite truncation: the analytic tail bound must fall below
    /// `tail_cut * tol` (relative, like `tol`).
    pub tail_cut: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_levels: 10,
            tail_cut: 0.1,
        }
    }
}

impl QuadSpec {
    pub fn new(tol: f64, max_levels: usize, tail_cut: f64) -> Result<Self> {
        let spec = Self {
            tol,
            max_levels,
            tail_cut,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_levels < 3 || self.max_levels > MAX_LEVEL + 1 {
            return Err(Error::Invalid(format!(
                "max_levels must lie in 3..={}, got {}",
                MAX_LEVEL + 1,
                self.max_levels
            )));
        }
        if !(self.tail_cut > 0.0) {
            return Err(Error::Invalid("tail_cut must be positive".into()));
        }
        Ok(())
    }

    /// Copy with the tolerance divided by `factor` (used for nested integrals).
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            tol: self.tol / factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub err_est: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy)]
struct Node {
    u: f64,
    /// 1 - x for the node at +u (equivalently 1 + x for the node at -u).
    comp: f64,
    weight: f64,
}

fn node(u: f64) -> Node {
    let s = FRAC_PI_2 * u.sinh();
    let e = (-2.0 * s).exp();
    let comp = 2.0 * e / (1.0 + e);
    let weight = FRAC_PI_2 * u.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
    Node { u, comp, weight }
}

/// Positive-u nodes per level; level 0 holds u = 1, 2, ..., level L the odd
/// multiples of 2^-L.
fn table() -> &'static [Vec<Node>] {
    static TABLE: OnceLock<Vec<Vec<Node>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut levels = Vec::with_capacity(MAX_LEVEL + 1);
        levels.push((1..=U_MAX as usize).map(|k| node(k as f64)).collect());
        for level in 1..=MAX_LEVEL {
            let h = 0.5f64.powi(level as i32);
            let mut v = Vec::new();
            let mut j = 1usize;
            while j as f64 * h <= U_MAX {
                v.push(node(j as f64 * h));
                j += 2;
            }
            levels.push(v);
        }
        levels
    })
}

/// Integrate `g(x, x - a, b - x)` over `(a, b)` with tanh-sinh refinement.
///
/// The integrand may be unbounded at either endpoint provided the
/// singularity is integrable; it is never evaluated at the endpoints.
pub fn integrate_endpoint_aware<G>(g: G, a: f64, b: f64, spec: &QuadSpec) -> Result<QuadResult>
where
    G: FnMut(f64, f64, f64) -> Result<f64>,
{
    tanh_sinh(g, a, b, spec).map(|(r, _)| r)
}

/// Tanh-sinh core; also returns the L1 mass estimate of the integrand.
pub(crate) fn tanh_sinh<G>(mut g: G, a: f64, b: f64, spec: &QuadSpec) -> Result<(QuadResult, f64)>
where
    G: FnMut(f64, f64, f64) -> Result<f64>,
{
    tanh_sinh_dyn(&mut g, a, b, spec, 0.0)
}

/// As [`tanh_sinh`], but the convergence test uses at least `ref_mass` as
/// the integrand's L1 mass. Callers integrating a remainder that may be
/// pure rounding noise pass the mass of the quantity it corrects.
pub(crate) fn tanh_sinh_ref<G>(mut g: G, a: f64, b: f64, spec: &QuadSpec, ref_mass: f64) -> Result<(QuadResult, f64)>
where
    G: FnMut(f64, f64, f64) -> Result<f64>,
{
    tanh_sinh_dyn(&mut g, a, b, spec, ref_mass)
}

fn tanh_sinh_dyn(
    g: &mut dyn FnMut(f64, f64, f64) -> Result<f64>,
    a: f64,
    b: f64,
    spec: &QuadSpec,
    ref_mass: f64,
) -> Result<(QuadResult, f64)> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Invalid(format!("finite interval required, got ({a}, {b})")));
    }
    if a == b {
        return Ok((
            QuadResult {
                value: 0.0,
                err_est: 0.0,
                evaluations: 0,
            },
            0.0,
        ));
    }
    if b < a {
        let (r, mass) = tanh_sinh_dyn(&mut |x, da, db| g(x, db, da), b, a, spec, ref_mass)?;
        return Ok((QuadResult { value: -r.value, ..r }, mass));
    }
    let half = 0.5 * (b - a);
    let width = b - a;
    let mut evals = 0usize;

    let centre = g(a + half, half, half)?;
    evals += 1;
    if !centre.is_finite() {
        return Err(Error::NonFinite(a + half));
    }
    let levels = table();

    let mut eval_pair = |nd: &Node, evals: &mut usize| -> Result<(f64, f64)> {
        // right node: distance to b is half*comp
        let db = half * nd.comp;
        let da = width - db;
        let x = b - db;
        let fr = g(x, da, db)?;
        let da2 = half * nd.comp;
        let db2 = width - da2;
        let x2 = a + da2;
        let fl = g(x2, da2, db2)?;
        *evals += 2;
        if !fr.is_finite() {
            return Err(Error::NonFinite(x));
        }
        if !fl.is_finite() {
            return Err(Error::NonFinite(x2));
        }
        Ok((nd.weight * fr, nd.weight * fl))
    };

    let mut sum = FRAC_PI_2 * centre;
    let mut abs_sum = sum.abs();
    let mut peak = abs_sum;
    // cut-offs in u for each tail, found at level 0
    let mut cut_r = U_MAX;
    let mut cut_l = U_MAX;
    let (mut done_r, mut done_l) = (false, false);
    let (mut small_r, mut small_l) = (0, 0);
    for nd in &levels[0] {
        let (tr, tl) = eval_pair(nd, &mut evals)?;
        peak = peak.max(tr.abs()).max(tl.abs());
        if !done_r {
            sum += tr;
            abs_sum += tr.abs();
            if tr.abs() <= NEGLIGIBLE * peak {
                small_r += 1;
                if small_r >= 2 {
                    done_r = true;
                    cut_r = nd.u;
                }
            } else {
                small_r = 0;
            }
        }
        if !done_l {
            sum += tl;
            abs_sum += tl.abs();
            if tl.abs() <= NEGLIGIBLE * peak {
                small_l += 1;
                if small_l >= 2 {
                    done_l = true;
                    cut_l = nd.u;
                }
            } else {
                small_l = 0;
            }
        }
    }

    let mut estimate = half * sum;
    let mut err = f64::INFINITY;
    let max_levels = spec.max_levels.min(MAX_LEVEL + 1);
    for level in 1..max_levels {
        let h = 0.5f64.powi(level as i32);
        for nd in &levels[level] {
            if nd.u > cut_r && nd.u > cut_l {
                break;
            }
            let (tr, tl) = eval_pair(nd, &mut evals)?;
            if nd.u <= cut_r {
                sum += tr;
                abs_sum += tr.abs();
            }
            if nd.u <= cut_l {
                sum += tl;
                abs_sum += tl.abs();
            }
        }
        let next = half * h * sum;
        let mass = half * h * abs_sum;
        err = (next - estimate).abs();
        estimate = next;
        if level >= 2 {
            let scale = mass.max(ref_mass);
            let floor = 16.0 * f64::EPSILON * scale;
            if scale == 0.0 || err <= spec.tol * scale || err <= floor {
                return Ok((
                    QuadResult {
                        value: estimate,
                        err_est: err,
                        evaluations: evals,
                    },
                    mass,
                ));
            }
        }
    }
    Err(Error::NonConvergence {
        value: estimate,
        err_est: err,
        levels: max_levels,
    })
}

/// Integrate `g` over `(a, b)`; `g` may have integrable algebraic
/// singularities at the endpoints.
pub fn integrate_singular<G>(g: G, a: f64, b: f64, spec: &QuadSpec) -> Result<QuadResult>
where
    G: Fn(f64) -> f64,
{
    integrate_endpoint_aware(|x, _, _| Ok(g(x)), a, b, spec)
}

/// Envelope `|g(τ)| <= scale * (1 + τ)^power * exp(-rate * τ)` for τ >= a.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayHint {
    pub scale: f64,
    pub rate: f64,
    pub power: f64,
}

impl DecayHint {
    pub fn exponential(rate: f64) -> Self {
        Self {
            scale: 1.0,
            rate,
            power: 0.0,
        }
    }

    pub fn envelope(&self, tau: f64) -> f64 {
        self.scale * (1.0 + tau).powf(self.power) * (-self.rate * tau).exp()
    }

    /// Upper bound on the envelope integrated over `(cut, ∞)`.
    pub fn tail_bound(&self, cut: f64) -> f64 {
        let slope = self.rate - self.power.max(0.0) / (1.0 + cut);
        if slope <= 0.0 {
            return f64::INFINITY;
        }
        self.envelope(cut) / slope
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.scale >= 0.0 && self.power.is_finite()) {
            return Err(Error::DecayMissing("decay rate must be positive"));
        }
        Ok(())
    }

    /// Smallest cut (to within a few percent) whose tail bound is below `target`.
    pub fn cut_for(&self, a: f64, target: f64) -> f64 {
        let mut hi = a.max(0.0) + 1.0;
        while self.tail_bound(hi) > target {
            hi = 2.0 * hi + 1.0;
            if hi > 1e6 {
                return hi;
            }
        }
        let mut lo = a;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.tail_bound(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-3 * (1.0 + hi) {
                break;
            }
        }
        hi
    }
}

/// Integrate `g` over `(a, ∞)` by truncating where the hinted envelope makes
/// the remaining tail negligible and integrating the finite part panel by
/// panel. The analytic tail bound is added to the error estimate.
pub fn integrate_semi_infinite<G>(g: G, a: f64, decay: &DecayHint, spec: &QuadSpec) -> Result<QuadResult>
where
    G: FnMut(f64) -> Result<f64>,
{
    integrate_semi_infinite_capped(g, a, decay, spec, f64::INFINITY)
}

/// First truncation point tried by [`integrate_semi_infinite`]; later cuts
/// only move outwards.
pub fn initial_cut(a: f64, decay: &DecayHint, spec: &QuadSpec) -> f64 {
    let peak_at = (decay.power / decay.rate - 1.0).max(a);
    let mass_guess = decay.envelope(peak_at) / decay.rate;
    decay.cut_for(a, spec.tail_cut * spec.tol * mass_guess)
}

/// As [`integrate_semi_infinite`], but `g` is only available up to `cap`.
/// A truncation point beyond it is reported as [`Error::CutBeyondCap`].
pub fn integrate_semi_infinite_capped<G>(
    mut g: G,
    a: f64,
    decay: &DecayHint,
    spec: &QuadSpec,
    cap: f64,
) -> Result<QuadResult>
where
    G: FnMut(f64) -> Result<f64>,
{
    decay.validate()?;
    if decay.scale == 0.0 {
        return Ok(QuadResult {
            value: 0.0,
            err_est: 0.0,
            evaluations: 0,
        });
    }
    let panel = 4.0 / decay.rate;
    let mut cut = initial_cut(a, decay, spec);

    let mut value = 0.0;
    let mut err = 0.0;
    let mut mass = 0.0;
    let mut evals = 0;
    let mut lo = a;
    loop {
        if cut > cap {
            return Err(Error::CutBeyondCap { cut, cap });
        }
        while lo < cut {
            let hi = (lo + panel).min(cut);
            // far panels hold little mass; judge them against what came before
            let (r, panel_mass) = tanh_sinh_dyn(&mut |x, _, _| g(x), lo, hi, spec, mass)?;
            value += r.value;
            err += r.err_est;
            mass += panel_mass;
            evals += r.evaluations;
            lo = hi;
        }
        let tail = decay.tail_bound(cut);
        if tail <= spec.tail_cut * spec.tol * mass.max(f64::MIN_POSITIVE) || cut > 1e5 {
            let at_cut = g(cut)?;
            let bound = decay.envelope(cut);
            if at_cut.abs() > bound * (1.0 + 1e-9) + 1e-300 {
                return Err(Error::TailBound {
                    cut,
                    measured: at_cut.abs(),
                    bound,
                });
            }
            return Ok(QuadResult {
                value,
                err_est: err + tail,
                evaluations: evals + 1,
            });
        }
        cut = decay.cut_for(cut, spec.tail_cut * spec.tol * mass);
    }
}

/// ∫ over S₁⁺(n) of g(θ) θ^γ dS, for n = 1, 2, 3.
///
/// For n = 1 the sphere part is the single point θ = 1.
pub fn sphere_quad<G>(idx: &BesselIndex, mut g: G, spec: &QuadSpec) -> Result<QuadResult>
where
    G: FnMut(&[f64]) -> Result<f64>,
{
    let gam = idx.gamma();
    match idx.n() {
        1 => Ok(QuadResult {
            value: g(&[1.0])?,
            err_est: 0.0,
            evaluations: 1,
        }),
        2 => integrate_endpoint_aware(
            |_, da, db| {
                let (c, s) = if da <= db { (da.cos(), da.sin()) } else { (db.sin(), db.cos()) };
                Ok(g(&[c, s])? * c.powf(gam[0]) * s.powf(gam[1]))
            },
            0.0,
            FRAC_PI_2,
            spec,
        ),
        3 => {
            let inner_spec = spec.tightened(3.0);
            integrate_endpoint_aware(
                |_, pa, pb| {
                    // polar angle from the x3 axis
                    let (sp, cp) = if pa <= pb { (pa.sin(), pa.cos()) } else { (pb.cos(), pb.sin()) };
                    let inner = integrate_endpoint_aware(
                        |_, da, db| {
                            let (c, s) = if da <= db { (da.cos(), da.sin()) } else { (db.sin(), db.cos()) };
                            let th = [sp * c, sp * s, cp];
                            Ok(g(&th)? * th[0].powf(gam[0]) * th[1].powf(gam[1]))
                        },
                        0.0,
                        FRAC_PI_2,
                        &inner_spec,
                    )?;
                    Ok(inner.value * cp.powf(gam[2]) * sp)
                },
                0.0,
                FRAC_PI_2,
                spec,
            )
        }
        n => Err(Error::UnsupportedDimension(n)),
    }
}

/// Fixed Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        Self { nodes, weights }
    }

    pub fn integrate<G: FnMut(f64) -> f64>(&self, mut g: G, a: f64, b: f64) -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * g(c + h * x))
            .sum::<f64>()
            * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{gamma_fn, sphere_const};
    use std::f64::consts::PI;

    fn spec(tol: f64) -> QuadSpec {
        QuadSpec::with_tol(tol)
    }

    #[test]
    fn constant_and_polynomials() {
        let r = integrate_singular(|_| 1.0, 0.0, 1.0, &spec(1e-12)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
        let coef = [0.3, -1.2, 0.7, 2.0, -0.4, 1.1, 0.25];
        let p = |x: f64| coef.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let exact: f64 = coef.iter().enumerate().map(|(i, c)| c / (i as f64 + 1.0)).sum();
        let r = integrate_singular(p, 0.0, 1.0, &spec(1e-12)).unwrap();
        assert!((r.value - exact).abs() < 1e-12);
    }

    #[test]
    fn inverse_sqrt_sine() {
        // ∫₀^π sin^{-1/2} = B(1/4, 1/2) = √π Γ(1/4)/Γ(3/4)
        let exact = PI.sqrt() * gamma_fn(0.25).unwrap() / gamma_fn(0.75).unwrap();
        let r = integrate_endpoint_aware(
            |_, da, db| Ok(if da < db { da.sin() } else { db.sin() }.powf(-0.5)),
            0.0,
            PI,
            &spec(1e-12),
        )
        .unwrap();
        assert!((r.value - exact).abs() < 1e-10, "{} vs {exact}", r.value);
    }

    #[test]
    fn radial_weight_closed_form() {
        let t: f64 = 2.0;
        let r = integrate_endpoint_aware(|rho, _, db| Ok((db * (t + rho)).powf(-0.4) * rho), 0.0, t, &spec(1e-12))
            .unwrap();
        assert!((r.value - t.powf(1.2) / 1.2).abs() < 1e-11);
    }

    #[test]
    fn reversed_and_empty() {
        let r = integrate_singular(|x| x, 1.0, 0.0, &spec(1e-10)).unwrap();
        assert!((r.value + 0.5).abs() < 1e-13);
        assert_eq!(integrate_singular(|x| x, 1.0, 1.0, &spec(1e-10)).unwrap().value, 0.0);
    }

    #[test]
    fn nonconvergence_reported() {
        let tight = QuadSpec {
            tol: 1e-14,
            max_levels: 3,
            tail_cut: 0.1,
        };
        let r = integrate_singular(|x| (40.0 * x).sin().abs(), 0.0, 3.0, &tight);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn semi_infinite_exponentials() {
        let s = spec(1e-10);
        let r = integrate_semi_infinite(|t| Ok((-t).exp()), 0.0, &DecayHint::exponential(1.0), &s).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        let hint = DecayHint::exponential(2.0);
        let r = integrate_semi_infinite(|t| Ok((-2.0 * t).exp()), 1.0, &hint, &s).unwrap();
        assert!((r.value - (-2.0f64).exp() / 2.0).abs() < 1e-11);
    }

    #[test]
    fn semi_infinite_laplace_bessel() {
        // ∫₀^∞ e^{-τ} τ^{1/2} J_{1/2}(τ) dτ = 2^{1/2} Γ(1) / (√π 2)
        let s = spec(1e-11);
        let hint = DecayHint {
            scale: 1.0,
            rate: 1.0,
            power: 0.0,
        };
        let r = integrate_semi_infinite(
            |t| Ok((-t).exp() * t.sqrt() * crate::specfun::bessel_j(0.5, t)?),
            0.0,
            &hint,
            &s,
        )
        .unwrap();
        let exact = 2f64.sqrt() * 2f64.powi(-1) / PI.sqrt();
        assert!((r.value - exact).abs() < 1e-8);
    }

    #[test]
    fn tail_bound_violation() {
        let hint = DecayHint::exponential(2.0);
        let r = integrate_semi_infinite(|t| Ok((-t).exp()), 0.0, &hint, &spec(1e-8));
        assert!(matches!(r, Err(Error::TailBound { .. })));
    }

    #[test]
    fn sphere_constants() {
        let s = spec(1e-12);
        let i2 = BesselIndex::new(vec![0.0, 0.0]).unwrap();
        let r = sphere_quad(&i2, |_| Ok(1.0), &s).unwrap();
        assert!((r.value - PI / 2.0).abs() < 1e-12);
        let r = sphere_quad(&i2, |th| Ok(th[0]), &s).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        for g in [vec![2.5], vec![0.3, 1.7], vec![1.0, 1.0], vec![0.2, 0.9, 1.4], vec![0.0, 0.0, 0.0]] {
            let i = BesselIndex::new(g).unwrap();
            let r = sphere_quad(&i, |_| Ok(1.0), &s).unwrap();
            let c = sphere_const(&i).unwrap();
            assert!((r.value - c).abs() < 1e-9 * c.max(1.0), "{:?}", i.gamma());
        }
        let i1 = BesselIndex::new(vec![0.7]).unwrap();
        assert_eq!(sphere_quad(&i1, |th| Ok(th[0] * 3.0), &s).unwrap().value, 3.0);
        let i4 = BesselIndex::new(vec![0.0; 4]).unwrap();
        assert!(matches!(sphere_quad(&i4, |_| Ok(1.0), &s), Err(Error::UnsupportedDimension(4))));
    }

    #[test]
    fn gauss_legendre_exactness() {
        let gl = GaussLegendre::new(4);
        let v = gl.integrate(|x| x.powi(7) + x.powi(6), 0.0, 1.0);
        assert!((v - (1.0 / 8.0 + 1.0 / 7.0)).abs() < 1e-15);
    }
}
