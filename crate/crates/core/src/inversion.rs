//! Finite-difference Bessel operators, the wave operator `(∂²_t - Δ_γ)^m`,
//! and reconstruction of `f` from its weighted spherical means through
//!
//! ```text
//! h(t) f(x) = |S₁⁺(n)|_γ / N(2m, γ, n) · (∂²_t - Δ_γ)^m ∫₀^∞ h(t - τ) (𝓜^{γ,2m}_τ f)(x) dτ.
//! ```
//!
//! Difference stencils are assembled as linear functionals over physical
//! sample points before anything is evaluated, so the samples (the expensive
//! part) can be computed once, in parallel, and summed in a fixed order.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{ScalarField, SeparableTerm};
use crate::means::{uniform_radii, MeanProfile};
use crate::potential::{required_radius, windowed_from_profile, TimeWindow};
use crate::quadrature::QuadSpec;
use crate::specfun::{riesz_const, sphere_const, BesselIndex, PotentialOrder};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FDScheme {
    pub h_x: f64,
    pub h_t: f64,
    /// 2 or 4.
    pub order: u32,
    /// Combine steps h and h/2 to cancel the leading error term.
    pub richardson: bool,
}

impl Default for FDScheme {
    fn default() -> Self {
        Self {
            h_x: 0.05,
            h_t: 0.05,
            order: 2,
            richardson: false,
        }
    }
}

impl FDScheme {
    pub fn new(h_x: f64, h_t: f64, order: u32, richardson: bool) -> Result<Self> {
        let fd = Self {
            h_x,
            h_t,
            order,
            richardson,
        };
        fd.validate()?;
        Ok(fd)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_x > 0.0 && self.h_x.is_finite() && self.h_t > 0.0 && self.h_t.is_finite()) {
            return Err(Error::Invalid(format!("steps must be positive: h_x {}, h_t {}", self.h_x, self.h_t)));
        }
        if self.order != 2 && self.order != 4 {
            return Err(Error::Invalid(format!("difference order must be 2 or 4, got {}", self.order)));
        }
        Ok(())
    }

    /// Default scheme for `(∂²_t - Δ_γ)^m`: plain central differences for
    /// m = 1, Richardson-extrapolated ones at a coarser step above that.
    pub fn for_power(m: u32) -> Self {
        if m <= 1 {
            Self::default()
        } else {
            Self {
                h_x: 0.1,
                h_t: 0.1,
                order: 2,
                richardson: true,
            }
        }
    }

    /// Both steps scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            h_x: self.h_x * factor,
            h_t: self.h_t * factor,
            ..*self
        }
    }

    fn passes(&self) -> Vec<(f64, f64)> {
        if self.richardson {
            let p = 2f64.powi(self.order as i32);
            vec![(1.0, -1.0 / (p - 1.0)), (0.5, p / (p - 1.0))]
        } else {
            vec![(1.0, 1.0)]
        }
    }
}

// (offset, weight) pairs: second derivative, first derivative
const D2_2: [(i32, f64); 3] = [(-1, 1.0), (0, -2.0), (1, 1.0)];
const D1_2: [(i32, f64); 2] = [(-1, -0.5), (1, 0.5)];
const D2_4: [(i32, f64); 5] = [
    (-2, -1.0 / 12.0),
    (-1, 16.0 / 12.0),
    (0, -30.0 / 12.0),
    (1, 16.0 / 12.0),
    (2, -1.0 / 12.0),
];
const D1_4: [(i32, f64); 4] = [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];

fn d2(order: u32) -> &'static [(i32, f64)] {
    if order == 4 {
        &D2_4
    } else {
        &D2_2
    }
}

fn d1(order: u32) -> &'static [(i32, f64)] {
    if order == 4 {
        &D1_4
    } else {
        &D1_2
    }
}

/// `B_γ u = u'' + (γ/x) u'` at a signed coordinate `x` on the even extension,
/// as offsets of `x` in units of `h`. At the origin the limit `(1+γ) u''` is used.
fn bessel_stencil(gamma: f64, x: f64, h: f64, order: u32) -> Vec<(i32, f64)> {
    let mut out: Vec<(i32, f64)> = Vec::with_capacity(5);
    let mut push = |o: i32, w: f64| match out.iter_mut().find(|(p, _)| *p == o) {
        Some(e) => e.1 += w,
        None => out.push((o, w)),
    };
    let h2 = h * h;
    if x.abs() <= 1e-9 * h {
        for &(o, w) in d2(order) {
            push(o, (1.0 + gamma) * w / h2);
        }
    } else {
        for &(o, w) in d2(order) {
            push(o, w / h2);
        }
        if gamma != 0.0 {
            for &(o, w) in d1(order) {
                push(o, gamma / x * w / h);
            }
        }
    }
    out
}

/// Below this multiple of `h_x`, [`bessel_op_1d`] evaluates at the threshold.
const WALL_CLAMP: f64 = 5e-4;

/// Central-difference `(B_γ u)(x)` for even `u`, sampled on `|x ± j h|`.
///
/// For `0 < x < 5e-4 h_x` the value at `5e-4 h_x` is returned: `B_γ u` is even
/// and smooth there, while the `(γ/x) u'` quotient loses its digits to
/// cancellation as `x → 0`.
pub fn bessel_op_1d<U: FnMut(f64) -> f64>(gamma: f64, mut u: U, x: f64, fd: &FDScheme) -> Result<f64> {
    fd.validate()?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Domain {
            func: "bessel_op_1d",
            value: gamma,
            expected: "gamma >= 0",
        });
    }
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Domain {
            func: "bessel_op_1d",
            value: x,
            expected: "x >= 0",
        });
    }
    let x = if x > 0.0 { x.max(WALL_CLAMP * fd.h_x) } else { x };
    let mut total = 0.0;
    for (scale, weight) in fd.passes() {
        let h = fd.h_x * scale;
        let v: f64 = bessel_stencil(gamma, x, h, fd.order)
            .iter()
            .map(|&(o, w)| w * u((x + o as f64 * h).abs()))
            .sum();
        total += weight * v;
    }
    Ok(total)
}

/// `(Δ_γ f)(at)` as the sum of per-axis [`bessel_op_1d`] values.
pub fn laplace_bessel(idx: &BesselIndex, f: &ScalarField, at: &[f64], fd: &FDScheme) -> Result<f64> {
    idx.check_point(at)?;
    if f.n() != idx.n() {
        return Err(Error::DimensionMismatch {
            expected: idx.n(),
            got: f.n(),
        });
    }
    let mut total = 0.0;
    let mut p = at.to_vec();
    for (axis, &g) in idx.gamma().iter().enumerate() {
        total += bessel_op_1d(
            g,
            |v| {
                p[axis] = v;
                let r = f.eval(&p);
                p[axis] = at[axis];
                r
            },
            at[axis],
            fd,
        )?;
    }
    Ok(total)
}

/// `Δ_γ f` as a field. A separable `f` stays separable: each term becomes
/// `n` terms, with one factor replaced by its difference-quotient image.
pub fn laplace_bessel_field(idx: &BesselIndex, f: &ScalarField, fd: &FDScheme) -> Result<ScalarField> {
    fd.validate()?;
    if f.n() != idx.n() {
        return Err(Error::DimensionMismatch {
            expected: idx.n(),
            got: f.n(),
        });
    }
    let out = match f.terms() {
        Some(terms) => {
            let mut out = Vec::with_capacity(terms.len() * idx.n());
            for term in terms {
                for (axis, &g) in idx.gamma().iter().enumerate() {
                    let mut factors = term.factors.clone();
                    let base = term.factors[axis].clone();
                    let fd = *fd;
                    factors[axis] = Arc::new(move |x: f64| {
                        bessel_op_1d(g, |v| base(v), x.abs(), &fd).unwrap_or(f64::NAN)
                    });
                    out.push(SeparableTerm {
                        coef: term.coef,
                        factors,
                    });
                }
            }
            ScalarField::separable(idx.n(), out)?
        }
        None => {
            let (idx, f, fd) = (idx.clone(), f.clone(), *fd);
            ScalarField::new(idx.n(), move |x| laplace_bessel(&idx, &f, x, &fd).unwrap_or(f64::NAN))
        }
    };
    if f.even_certified() {
        out.certify_even()
    } else {
        Ok(out)
    }
}

/// A linear functional `G ↦ Σ w_i G(t_i, x_i)` with merged, ordered sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub points: Vec<(f64, Vec<f64>)>,
    pub weights: Vec<f64>,
}

impl Stencil {
    pub fn apply<G>(&self, g: G) -> Result<f64>
    where
        G: Fn(f64, &[f64]) -> Result<f64> + Sync,
    {
        let values: Vec<f64> = self.points.par_iter().map(|(t, x)| g(*t, x)).collect::<Result<_>>()?;
        Ok(self.weights.iter().zip(&values).map(|(w, v)| w * v).sum())
    }
}

fn key(t: f64, x: &[f64]) -> Vec<u64> {
    std::iter::once(t).chain(x.iter().copied()).map(f64::to_bits).collect()
}

/// One application of `∂²_t - Δ_γ` (or `1 - Δ_γ` when `∂_t G = G`) to a
/// lattice functional; lattice points are integer offsets from `(t, x)`.
fn apply_wave(
    idx: &BesselIndex,
    exp_in_t: bool,
    x: &[f64],
    hx: f64,
    ht: f64,
    order: u32,
    input: &BTreeMap<Vec<i32>, f64>,
) -> BTreeMap<Vec<i32>, f64> {
    let mut out: BTreeMap<Vec<i32>, f64> = BTreeMap::new();
    for (p, &c) in input {
        let mut add = |q: Vec<i32>, w: f64| *out.entry(q).or_insert(0.0) += c * w;
        if exp_in_t {
            add(p.clone(), 1.0);
        } else {
            for &(o, w) in d2(order) {
                let mut q = p.clone();
                q[0] += o;
                add(q, w / (ht * ht));
            }
        }
        for (axis, &g) in idx.gamma().iter().enumerate() {
            let xs = x[axis] + p[axis + 1] as f64 * hx;
            for (o, w) in bessel_stencil(g, xs, hx, order) {
                let mut q = p.clone();
                q[axis + 1] += o;
                add(q, -w);
            }
        }
    }
    out
}

/// The functional for `(∂²_t - Δ_γ)^m G (t, x)`, Richardson passes included.
/// With `exp_in_t` the time derivatives are taken analytically (`∂_t G = G`)
/// and every sample sits at time `t`.
pub fn wave_stencil(idx: &BesselIndex, m: u32, exp_in_t: bool, t: f64, x: &[f64], fd: &FDScheme) -> Result<Stencil> {
    fd.validate()?;
    idx.check_point(x)?;
    if x.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !t.is_finite() {
        return Err(Error::Invalid(format!("stencil centre must be finite with x >= 0, got t = {t}, x = {x:?}")));
    }
    let mut merged: BTreeMap<Vec<u64>, ((f64, Vec<f64>), f64)> = BTreeMap::new();
    for (scale, weight) in fd.passes() {
        let (hx, ht) = (fd.h_x * scale, fd.h_t * scale);
        let mut lattice = BTreeMap::new();
        lattice.insert(vec![0; idx.n() + 1], 1.0);
        for _ in 0..m {
            lattice = apply_wave(idx, exp_in_t, x, hx, ht, fd.order, &lattice);
        }
        for (p, w) in lattice {
            let tp = t + p[0] as f64 * ht;
            let xp: Vec<f64> = x.iter().zip(&p[1..]).map(|(&c, &o)| (c + o as f64 * hx).abs()).collect();
            let entry = merged.entry(key(tp, &xp)).or_insert(((tp, xp), 0.0));
            entry.1 += weight * w;
        }
    }
    let (points, weights) = merged.into_values().filter(|(_, w)| *w != 0.0).unzip();
    Ok(Stencil { points, weights })
}

/// `(∂²_t - Δ_γ)^m G` at `(t, x)` by nested central differences on the even
/// extension in every `x_i`.
pub fn wave_power<G>(idx: &BesselIndex, m: u32, g: G, exp_in_t: bool, t: f64, x: &[f64], fd: &FDScheme) -> Result<f64>
where
    G: Fn(f64, &[f64]) -> Result<f64> + Sync,
{
    wave_stencil(idx, m, exp_in_t, t, x, fd)?.apply(g)
}

/// Radius spacing of the mean profiles a plan asks for. The interpolation
/// error it causes is smooth in x, so the difference operator does not
/// amplify it the way it amplifies sampling noise.
pub const PLAN_RADIUS_STEP: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct ReconstructionPlan {
    idx: BesselIndex,
    m: u32,
    h: TimeWindow,
    t_eval: Vec<f64>,
    fd: FDScheme,
    spec: QuadSpec,
    radius_step: f64,
}

impl ReconstructionPlan {
    /// `m = None` picks the smallest m with `2m > n + |γ| - 1`.
    pub fn new(
        idx: BesselIndex,
        m: Option<u32>,
        h: TimeWindow,
        t_eval: Vec<f64>,
        fd: FDScheme,
        spec: QuadSpec,
    ) -> Result<Self> {
        let m = m.unwrap_or_else(|| idx.minimal_m());
        PotentialOrder::even(m)?.require_valid(&idx)?;
        fd.validate()?;
        spec.validate()?;
        if t_eval.is_empty() {
            return Err(Error::Invalid("at least one evaluation time is required".into()));
        }
        for &t in &t_eval {
            if !t.is_finite() {
                return Err(Error::Invalid(format!("evaluation time {t} is not finite")));
            }
            h.check_nonvanishing(t)?;
        }
        Ok(Self {
            idx,
            m,
            h,
            t_eval,
            fd,
            spec,
            radius_step: PLAN_RADIUS_STEP,
        })
    }

    /// Minimal m, window `e^t`, times `{0.5, 1.25, 2}`, [`FDScheme::for_power`].
    pub fn with_defaults(idx: BesselIndex, spec: QuadSpec) -> Result<Self> {
        let m = idx.minimal_m();
        Self::new(idx, Some(m), TimeWindow::exp(), vec![0.5, 1.25, 2.0], FDScheme::for_power(m), spec)
    }

    pub fn with_fd(mut self, fd: FDScheme) -> Result<Self> {
        fd.validate()?;
        self.fd = fd;
        Ok(self)
    }

    pub fn with_radius_step(mut self, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Invalid(format!("radius step must be positive, got {step}")));
        }
        self.radius_step = step;
        Ok(self)
    }

    pub fn idx(&self) -> &BesselIndex {
        &self.idx
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn k(&self) -> f64 {
        2.0 * self.m as f64
    }

    pub fn window(&self) -> &TimeWindow {
        &self.h
    }

    pub fn t_eval(&self) -> &[f64] {
        &self.t_eval
    }

    pub fn fd(&self) -> &FDScheme {
        &self.fd
    }

    pub fn spec(&self) -> &QuadSpec {
        &self.spec
    }

    pub fn radius_step(&self) -> f64 {
        self.radius_step
    }

    /// `|S₁⁺(n)|_γ / N(2m, γ, n)`.
    pub fn ratio(&self) -> Result<f64> {
        Ok(sphere_const(&self.idx)? / riesz_const(self.k(), &self.idx)?)
    }

    fn stencils(&self, x: &[f64]) -> Result<Vec<Stencil>> {
        self.t_eval
            .iter()
            .map(|&t| wave_stencil(&self.idx, self.m, self.h.exp_certified(), t, x, &self.fd))
            .collect()
    }

    /// Spatial points whose mean profiles [`reconstruct_from_profile`] reads
    /// for a reconstruction at `x`, in a fixed order.
    pub fn stencil_points(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut seen = BTreeMap::new();
        for s in self.stencils(x)? {
            for (_, p) in s.points {
                seen.entry(key(0.0, &p)).or_insert(p);
            }
        }
        Ok(seen.into_values().collect())
    }

    /// Latest time at which a windowed integral is needed for `x`.
    pub fn latest_time(&self, x: &[f64]) -> Result<f64> {
        Ok(self
            .stencils(x)?
            .iter()
            .flat_map(|s| s.points.iter().map(|(t, _)| *t))
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Profile radius that suffices for every sample of a reconstruction at
    /// `x` when the field (and so every mean) is bounded by `sup`.
    pub fn required_radius(&self, sup: f64, x: &[f64]) -> Result<f64> {
        required_radius(&self.h, sup, &self.idx, self.k(), self.latest_time(x)?, &self.spec)
    }
}

/// Mean profiles keyed by their centre point.
#[derive(Debug, Clone, Default)]
pub struct ProfileFamily {
    profiles: BTreeMap<Vec<u64>, MeanProfile>,
}

impl ProfileFamily {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, profile: MeanProfile) {
        self.profiles.insert(key(0.0, profile.at()), profile);
    }

    pub fn get(&self, at: &[f64]) -> Result<&MeanProfile> {
        self.profiles
            .get(&key(0.0, at))
            .ok_or_else(|| Error::MissingProfile(at.to_vec()))
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

impl FromIterator<MeanProfile> for ProfileFamily {
    fn from_iter<I: IntoIterator<Item = MeanProfile>>(iter: I) -> Self {
        let mut fam = Self::new();
        for p in iter {
            fam.insert(p);
        }
        fam
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// Mean of the per-time estimates.
    pub value: f64,
    /// `max - min` of the per-time estimates.
    pub spread: f64,
    pub per_t: Vec<f64>,
}

impl Reconstruction {
    pub fn relative_spread(&self) -> f64 {
        if self.spread == 0.0 {
            0.0
        } else {
            self.spread / self.value.abs()
        }
    }
}

/// `f(x)` from mean profiles measured at [`ReconstructionPlan::stencil_points`].
/// Means beyond the sampled range are bounded by the largest sampled value
/// when choosing the τ truncation.
pub fn reconstruct_from_profile(plan: &ReconstructionPlan, profiles: &ProfileFamily, x: &[f64]) -> Result<Reconstruction> {
    plan.idx.check_point(x)?;
    let ratio = plan.ratio()?;
    let k = plan.k();
    let mut per_t = Vec::with_capacity(plan.t_eval.len());
    for (stencil, &t) in plan.stencils(x)?.iter().zip(&plan.t_eval) {
        let rhs = stencil.apply(|tau, p| {
            let profile = profiles.get(p)?;
            if profile.idx() != &plan.idx {
                return Err(Error::Invalid("profile built for a different multi-index".into()));
            }
            let sup = profile.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            windowed_from_profile(&plan.h, profile, sup, k, tau, &plan.spec)
        })?;
        per_t.push(ratio * rhs / plan.h.eval(t));
    }
    let value = per_t.iter().sum::<f64>() / per_t.len() as f64;
    let (lo, hi) = per_t
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(Reconstruction {
        value,
        spread: hi - lo,
        per_t,
    })
}

/// Mean profiles of `f` at every stencil point of a reconstruction at `x`.
pub fn stencil_profiles(plan: &ReconstructionPlan, f: &ScalarField, x: &[f64]) -> Result<ProfileFamily> {
    let sup = f.sup().ok_or(Error::DecayMissing("field has no sup bound"))?;
    let max = plan.required_radius(sup, x)?;
    let radii = uniform_radii(plan.radius_step, max)?;
    let inner = plan.spec.tightened(3.0);
    let profiles: Vec<MeanProfile> = plan
        .stencil_points(x)?
        .par_iter()
        .map(|p| MeanProfile::compute(f, &plan.idx, p, radii.clone(), &inner))
        .collect::<Result<_>>()?;
    Ok(profiles.into_iter().collect())
}

/// `f(x)` recovered from the spherical means of an evaluable `f`: the means
/// are computed at the stencil points and fed to [`reconstruct_from_profile`].
pub fn reconstruct_point(plan: &ReconstructionPlan, f: &ScalarField, x: &[f64]) -> Result<Reconstruction> {
    if f.n() != plan.idx.n() {
        return Err(Error::DimensionMismatch {
            expected: plan.idx.n(),
            got: f.n(),
        });
    }
    if !f.even_certified() {
        return Err(Error::Invalid("reconstruction needs an even-certified field".into()));
    }
    let profiles = stencil_profiles(plan, f, x)?;
    reconstruct_from_profile(plan, &profiles, x)
}
