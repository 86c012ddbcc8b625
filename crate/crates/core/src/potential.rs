//! Time windows, the kernel `s^λ`, the mixed hyperbolic Riesz B-potential of
//! a separable input `h(t)F(x)`, and the windowed integral
//! `∫₀^∞ h(t - τ) (𝓜^{γ,k}_τ f)(x) dτ` that it reduces to.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::means::{mkt_ball, uniform_radii, MeanProfile};
use crate::quadrature::{initial_cut, integrate_semi_infinite, integrate_semi_infinite_capped, DecayHint, QuadSpec};
use crate::specfun::{gamma_fn, jgamma_n, riesz_const, sphere_const, BesselIndex, PotentialOrder};

/// Radius spacing of the mean profiles built by [`windowed_mean_integral`].
pub const DEFAULT_RADIUS_STEP: f64 = 0.05;

/// `|h(t - τ)| <= exp(offset + slope·t) · exp(-rate·τ)` for all τ >= 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowDecay {
    pub rate: f64,
    pub offset: f64,
    pub slope: f64,
}

impl WindowDecay {
    pub fn scale_at(&self, t: f64) -> f64 {
        (self.offset + self.slope * t).exp()
    }
}

#[derive(Clone)]
pub struct TimeWindow {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    decay: WindowDecay,
    nonvanishing_on: Option<(f64, f64)>,
    exp_certified: bool,
    two_sided: Option<DecayHint>,
    label: String,
}

impl fmt::Debug for TimeWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeWindow")
            .field("label", &self.label)
            .field("decay", &self.decay)
            .field("nonvanishing_on", &self.nonvanishing_on)
            .field("exp_certified", &self.exp_certified)
            .finish()
    }
}

impl TimeWindow {
    /// A window with a caller-supplied decay envelope, spot-checked on a grid
    /// of `(t, τ)` before it is accepted.
    pub fn new<F>(label: &str, h: F, decay: WindowDecay) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(decay.rate > 0.0 && decay.offset.is_finite() && decay.slope.is_finite()) {
            return Err(Error::DecayMissing("window decay rate must be positive"));
        }
        let w = Self {
            eval: Arc::new(h),
            decay,
            nonvanishing_on: None,
            exp_certified: false,
            two_sided: None,
            label: label.to_string(),
        };
        for &t in &[-2.0, -1.0, 0.0, 0.5, 1.0, 2.0, 5.0] {
            for i in 0..=120 {
                let tau = 0.5 * i as f64;
                let v = w.eval(t - tau);
                let bound = decay.scale_at(t) * (-decay.rate * tau).exp();
                if !v.is_finite() || v.abs() > bound * (1.0 + 1e-9) + 1e-300 {
                    return Err(Error::DecayMissing("window exceeds its decay envelope"));
                }
            }
        }
        Ok(w)
    }

    /// `h(t) = e^t`; `∂_t h = h`, nonvanishing everywhere.
    pub fn exp() -> Self {
        let mut w = Self::new(
            "exp",
            f64::exp,
            WindowDecay {
                rate: 1.0,
                offset: 0.0,
                slope: 1.0,
            },
        )
        .expect("exp window satisfies its envelope");
        w.exp_certified = true;
        w.nonvanishing_on = Some((f64::NEG_INFINITY, f64::INFINITY));
        w
    }

    /// `h(t) = exp(-t²/w²)`.
    pub fn gaussian(width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::Invalid(format!("window width must be positive, got {width}")));
        }
        let inv = 1.0 / (width * width);
        let rate = 2.0 / width;
        // (τ - t)²/w² >= rate (τ - t) - 1
        let mut w = Self::new(
            &format!("gaussian({width})"),
            move |s| (-s * s * inv).exp(),
            WindowDecay {
                rate,
                offset: 1.0,
                slope: rate,
            },
        )?;
        w.nonvanishing_on = Some((f64::NEG_INFINITY, f64::INFINITY));
        w.two_sided = Some(DecayHint {
            scale: std::f64::consts::E,
            rate,
            power: 0.0,
        });
        Ok(w)
    }

    pub fn with_nonvanishing_on(mut self, lo: f64, hi: f64) -> Self {
        self.nonvanishing_on = Some((lo, hi));
        self
    }

    /// Envelope `|h(s)| <= scale·exp(-rate·|s|)` in both directions, needed
    /// for Fourier transforms in t.
    pub fn with_two_sided_decay(mut self, decay: DecayHint) -> Self {
        self.two_sided = Some(decay);
        self
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.eval)(s)
    }

    pub fn decay(&self) -> &WindowDecay {
        &self.decay
    }

    pub fn nonvanishing_on(&self) -> Option<(f64, f64)> {
        self.nonvanishing_on
    }

    pub fn exp_certified(&self) -> bool {
        self.exp_certified
    }

    pub fn two_sided(&self) -> Option<&DecayHint> {
        self.two_sided.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `Ok` when `h(t) != 0` and t lies in the declared nonvanishing window.
    pub fn check_nonvanishing(&self, t: f64) -> Result<()> {
        let inside = self.nonvanishing_on.is_some_and(|(lo, hi)| t >= lo && t <= hi);
        if inside && self.eval(t) != 0.0 {
            Ok(())
        } else {
            Err(Error::WindowVanishes(t))
        }
    }
}

/// `s^λ(t, x) = (t² - |x|²)^λ / N(k, γ, n)` inside the forward cone, zero
/// outside.
#[derive(Debug, Clone, PartialEq)]
pub struct SLambdaKernel {
    k: f64,
    idx: BesselIndex,
    norm: f64,
    lambda: f64,
}

impl SLambdaKernel {
    pub fn new(k: f64, idx: &BesselIndex) -> Result<Self> {
        let order = PotentialOrder::new(k)?;
        order.require_valid(idx)?;
        Ok(Self {
            k,
            idx: idx.clone(),
            norm: riesz_const(k, idx)?,
            lambda: order.lambda(idx),
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn idx(&self) -> &BesselIndex {
        &self.idx
    }
}

pub fn s_lambda(kern: &SLambdaKernel, t: f64, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if t < 0.0 || r2 > t * t {
        return 0.0;
    }
    (t * t - r2).powf(kern.lambda) / kern.norm
}

/// Envelope of `τ ↦ h(t - τ) 𝓜^{γ,k}_τ f` from the window decay, a bound on
/// `|f|`, and `|𝓜_τ| <= sup|f| Γ(d/2)Γ(λ+1)/(2Γ((k+1)/2)) τ^{k-1}`.
fn windowed_envelope(h: &TimeWindow, sup: f64, idx: &BesselIndex, k: f64, t: f64) -> Result<DecayHint> {
    let d = idx.eff_dim();
    let lambda = PotentialOrder::new(k)?.lambda(idx);
    let growth = gamma_fn(0.5 * d)? * gamma_fn(lambda + 1.0)? / (2.0 * gamma_fn(0.5 * (k + 1.0))?);
    Ok(DecayHint {
        scale: h.decay().scale_at(t) * sup * growth,
        rate: h.decay().rate,
        power: (k - 1.0).max(0.0),
    })
}

fn field_sup(f: &ScalarField) -> Result<f64> {
    f.sup().ok_or(Error::DecayMissing("field has no sup bound"))
}

/// `∫₀^∞ h(t - τ) 𝓜^{γ,k}_τ dτ` with `𝓜` taken from a sampled mean profile.
/// `sup` bounds the underlying field. The profile has to reach the
/// truncation point; otherwise [`Error::ProfileRange`] names the radius
/// required.
pub fn windowed_from_profile(
    h: &TimeWindow,
    profile: &MeanProfile,
    sup: f64,
    k: f64,
    t: f64,
    spec: &QuadSpec,
) -> Result<f64> {
    let idx = profile.idx();
    PotentialOrder::new(k)?.require_valid(idx)?;
    let env = windowed_envelope(h, sup, idx, k, t)?;
    let inner = spec.tightened(3.0);
    let r = integrate_semi_infinite_capped(
        |tau| Ok(h.eval(t - tau) * profile.mkt(k, tau, &inner)?),
        0.0,
        &env,
        spec,
        profile.max_radius(),
    );
    match r {
        Ok(r) => Ok(r.value),
        Err(Error::CutBeyondCap { cut, cap }) => Err(Error::ProfileRange {
            required: cut,
            available: cap,
        }),
        Err(e) => Err(e),
    }
}

/// Radius a profile should cover for [`windowed_from_profile`] at time `t`.
pub fn required_radius(h: &TimeWindow, sup: f64, idx: &BesselIndex, k: f64, t: f64, spec: &QuadSpec) -> Result<f64> {
    let env = windowed_envelope(h, sup, idx, k, t)?;
    if env.scale == 0.0 {
        return Ok(1.0);
    }
    // margin for the mass of the integrand being well below its envelope
    Ok(1.2 * initial_cut(0.0, &env, &spec.tightened(10.0)) + 1.0)
}

/// `∫₀^∞ h(t - τ) (𝓜^{γ,k}_τ f)(x) dτ`, with the spherical means of `f` at `x`
/// sampled once on a radius grid and reused for every τ.
pub fn windowed_mean_integral(
    h: &TimeWindow,
    f: &ScalarField,
    idx: &BesselIndex,
    k: f64,
    t: f64,
    x: &[f64],
    spec: &QuadSpec,
) -> Result<f64> {
    let sup = field_sup(f)?;
    if sup == 0.0 {
        return Ok(0.0);
    }
    let max = required_radius(h, sup, idx, k, t, spec)?;
    let inner = spec.tightened(3.0);
    let mut profile = MeanProfile::compute(f, idx, x, uniform_radii(DEFAULT_RADIUS_STEP, max)?, &inner)?;
    for _ in 0..4 {
        match windowed_from_profile(h, &profile, sup, k, t, spec) {
            Err(Error::ProfileRange { required, .. }) => profile.extend(f, 1.1 * required + 1.0, &inner)?,
            other => return other,
        }
    }
    windowed_from_profile(h, &profile, sup, k, t, spec)
}

/// `(I^k_{s,γ} hF)(t, x)` for a separable input: the outer τ integral of
/// `h(t - τ)` against `(1/N) ∫_{|y|<τ} (τ² - |y|²)^λ (𝕋^y F)(x) y^γ dy`,
/// the inner one done in Cartesian coordinates over the ball.
pub fn riesz_potential_separable(
    h: &TimeWindow,
    big_f: &ScalarField,
    idx: &BesselIndex,
    k: f64,
    t: f64,
    x: &[f64],
    spec: &QuadSpec,
) -> Result<f64> {
    let kern = SLambdaKernel::new(k, idx)?;
    if idx.n() > 3 {
        return Err(Error::UnsupportedDimension(idx.n()));
    }
    let sup = field_sup(big_f)?;
    let env = windowed_envelope(h, sup, idx, k, t)?;
    let factor = sphere_const(idx)? / kern.norm();
    let inner = spec.tightened(3.0);
    let r = integrate_semi_infinite(
        |tau| {
            let hv = h.eval(t - tau);
            if hv == 0.0 || tau == 0.0 {
                return Ok(0.0);
            }
            Ok(hv * mkt_ball(big_f, idx, k, x, tau, &inner)?)
        },
        0.0,
        &env,
        spec,
    )?;
    Ok(factor * r.value)
}

/// Closed form of the windowed integral for `h = exp` and the eigenfunction:
/// `e^t 𝐣_γ(x; ξ) Γ(k/2) Γ(d/2) Γ((k-d+1)/2) / (2^{2-k} √π (1+|ξ|²)^{k/2})`.
pub fn eigen_windowed_exp(idx: &BesselIndex, xi: &[f64], k: f64, t: f64, x: &[f64]) -> Result<f64> {
    PotentialOrder::new(k)?.require_valid(idx)?;
    let d = idx.eff_dim();
    let xi2: f64 = xi.iter().map(|v| v * v).sum();
    let c = gamma_fn(0.5 * k)? * gamma_fn(0.5 * d)? * gamma_fn(0.5 * (k - d + 1.0))?
        / (2f64.powf(2.0 - k) * std::f64::consts::PI.sqrt() * (1.0 + xi2).powf(0.5 * k));
    Ok(c * t.exp() * jgamma_n(idx, x, xi)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{eigenfunction, gaussian, zero};

    fn idx(g: &[f64]) -> BesselIndex {
        BesselIndex::new(g.to_vec()).unwrap()
    }

    #[test]
    fn windows_and_their_envelopes() {
        let e = TimeWindow::exp();
        assert!(e.exp_certified());
        assert!(e.check_nonvanishing(1.0).is_ok());
        let g = TimeWindow::gaussian(1.0).unwrap();
        assert!(g.two_sided().is_some());
        assert!(g.check_nonvanishing(0.3).is_ok());
        let bad = TimeWindow::new(
            "slow",
            |s| (0.5 * s).exp(),
            WindowDecay {
                rate: 1.0,
                offset: 0.0,
                slope: 1.0,
            },
        );
        assert!(matches!(bad, Err(Error::DecayMissing(_))));
        let narrow = TimeWindow::exp().with_nonvanishing_on(0.0, 1.0);
        assert!(matches!(narrow.check_nonvanishing(1.5), Err(Error::WindowVanishes(_))));
    }

    #[test]
    fn kernel_support_and_value() {
        let i = idx(&[0.5, 0.5]);
        let kern = SLambdaKernel::new(4.5, &i).unwrap();
        assert!((kern.lambda() - 0.25).abs() < 1e-15);
        assert_eq!(s_lambda(&kern, -0.5, &[0.0, 0.0]), 0.0);
        assert_eq!(s_lambda(&kern, 1.0, &[0.8, 0.7]), 0.0);
        let v = s_lambda(&kern, 2.0, &[0.6, 0.8]);
        assert!((v - 3f64.powf(0.25) / riesz_const(4.5, &i).unwrap()).abs() < 1e-15);
        for a in 0..20 {
            for b in 0..20 {
                let (t, r) = (-2.0 + 0.2 * a as f64, 0.15 * b as f64);
                if t < 0.0 || r > t {
                    assert_eq!(s_lambda(&kern, t, &[r, 0.0]), 0.0);
                }
            }
        }
        assert!(SLambdaKernel::new(1.5, &i).is_err());
    }

    #[test]
    fn windowed_integral_of_eigenfunction() {
        let i = idx(&[1.0]);
        let xi = [0.8];
        let f = eigenfunction(&i, &xi).unwrap();
        let spec = QuadSpec::with_tol(1e-9);
        for &(t, x) in &[(0.5, 0.3), (1.2, 1.1)] {
            let k = 2.0;
            let v = windowed_mean_integral(&TimeWindow::exp(), &f, &i, k, t, &[x], &spec).unwrap();
            let exact = eigen_windowed_exp(&i, &xi, k, t, &[x]).unwrap();
            assert!((v - exact).abs() <= 1e-6 * exact.abs(), "{v} vs {exact}");
        }
    }

    #[test]
    fn zero_inputs() {
        let i = idx(&[0.7]);
        let z = zero(1).unwrap();
        let spec = QuadSpec::with_tol(1e-8);
        assert_eq!(windowed_mean_integral(&TimeWindow::exp(), &z, &i, 2.0, 1.0, &[0.5], &spec).unwrap(), 0.0);
        assert_eq!(riesz_potential_separable(&TimeWindow::exp(), &z, &i, 2.0, 1.0, &[0.5], &spec).unwrap(), 0.0);
    }

    #[test]
    fn two_paths_agree_in_one_dimension() {
        let i = idx(&[0.8]);
        let f = gaussian(1, 1.2).unwrap();
        let h = TimeWindow::gaussian(1.5).unwrap();
        let spec = QuadSpec::with_tol(1e-8);
        let k = 2.4;
        let (t, x) = (1.3, [0.6]);
        let w = windowed_mean_integral(&h, &f, &i, k, t, &x, &spec).unwrap();
        let p = riesz_potential_separable(&h, &f, &i, k, t, &x, &spec).unwrap();
        let ratio = sphere_const(&i).unwrap() / riesz_const(k, &i).unwrap();
        assert!((ratio * w - p).abs() <= 1e-6 * p.abs(), "{} vs {p}", ratio * w);
    }
}
