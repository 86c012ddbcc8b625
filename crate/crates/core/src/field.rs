//! Evaluable functions on the closed positive orthant, plus the phantoms
//! used by the tests and the CLI.
//!
//! A field may carry a sum-of-products representation
//! `f(x) = Σ_j c_j ∏_i g_{ji}(x_i)`. Generalized translations factor over
//! coordinates, so translating such a field costs n one-dimensional
//! integrals per term instead of an n-fold nested one.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::DecayHint;
use crate::specfun::{bessel_j_norm_unchecked, BesselIndex};

pub type Eval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type Factor = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One product term `coef * ∏ factors[i](x_i)`.
#[derive(Clone)]
pub struct SeparableTerm {
    pub coef: f64,
    pub factors: Vec<Factor>,
}

impl SeparableTerm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.factors.iter().zip(x).fold(self.coef, |acc, (g, &xi)| acc * g(xi))
    }
}

#[derive(Clone)]
pub struct ScalarField {
    eval: Eval,
    n: usize,
    even_certified: bool,
    /// Envelope of |f| in terms of |x|.
    decay: Option<DecayHint>,
    sup: Option<f64>,
    terms: Option<Vec<SeparableTerm>>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("n", &self.n)
            .field("even_certified", &self.even_certified)
            .field("decay", &self.decay)
            .field("sup", &self.sup)
            .field("separable_terms", &self.terms.as_ref().map(Vec::len))
            .finish()
    }
}

impl ScalarField {
    pub fn new<F>(n: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            n,
            even_certified: false,
            decay: None,
            sup: None,
            terms: None,
        }
    }

    /// Field given as a sum of product terms; every term needs `n` factors.
    pub fn separable(n: usize, terms: Vec<SeparableTerm>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("field dimension must be positive".into()));
        }
        if let Some(t) = terms.iter().find(|t| t.factors.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: t.factors.len(),
            });
        }
        let shared = terms.clone();
        let mut field = Self::new(n, move |x| shared.iter().map(|t| t.eval(x)).sum());
        field.terms = Some(terms);
        Ok(field)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn even_certified(&self) -> bool {
        self.even_certified
    }

    pub fn decay(&self) -> Option<&DecayHint> {
        self.decay.as_ref()
    }

    pub fn sup(&self) -> Option<f64> {
        self.sup
    }

    pub fn terms(&self) -> Option<&[SeparableTerm]> {
        self.terms.as_deref()
    }

    pub fn with_decay(mut self, decay: DecayHint) -> Self {
        self.decay = Some(decay);
        self
    }

    pub fn with_sup(mut self, sup: f64) -> Self {
        self.sup = Some(sup);
        self
    }

    /// Marks the field as even in every coordinate after a numerical check:
    /// the one-sided slope at `x_i = 1e-4` must be small against the local
    /// second-difference scale, at a fixed set of sample points.
    pub fn certify_even(mut self) -> Result<Self> {
        let samples = [0.0, 0.37, 0.91, 1.6];
        let mut base = vec![0.0; self.n];
        for s in 0..samples.len().pow(self.n.min(3) as u32) {
            let mut c = s;
            for b in base.iter_mut() {
                *b = samples[c % samples.len()];
                c /= samples.len();
            }
            for axis in 0..self.n {
                let at = |v: f64| {
                    let mut p = base.clone();
                    p[axis] = v;
                    self.eval(&p)
                };
                let (x0, h) = (1e-4, 1e-5);
                let slope = (at(x0 + h) - at(x0 - h)) / (2.0 * h);
                let q = 0.05;
                let curv = ((at(2.0 * q) - 2.0 * at(q) + at(0.0)) / (q * q)).abs();
                let scale = curv.max(at(0.0).abs()).max(1e-8);
                if slope.abs() > 1e-2 * scale {
                    return Err(Error::Invalid(format!(
                        "field is not even in x{axis} at {base:?}: slope {slope:e} near the wall"
                    )));
                }
            }
        }
        self.even_certified = true;
        Ok(self)
    }

    /// `a * self + b * other`. Stays separable when both inputs are.
    pub fn combine(&self, a: f64, other: &ScalarField, b: f64) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut out = match (&self.terms, &other.terms) {
            (Some(s), Some(o)) => {
                let scaled = |ts: &[SeparableTerm], c: f64| {
                    ts.iter()
                        .map(|t| SeparableTerm {
                            coef: c * t.coef,
                            factors: t.factors.clone(),
                        })
                        .collect::<Vec<_>>()
                };
                let mut terms = scaled(s, a);
                terms.extend(scaled(o, b));
                Self::separable(self.n, terms)?
            }
            _ => {
                let (f, g) = (self.eval.clone(), other.eval.clone());
                Self::new(self.n, move |x| a * f(x) + b * g(x))
            }
        };
        out.even_certified = self.even_certified && other.even_certified;
        out.sup = match (self.sup, other.sup) {
            (Some(s), Some(o)) => Some(a.abs() * s + b.abs() * o),
            _ => None,
        };
        out.decay = match (self.decay, other.decay) {
            (Some(d), Some(e)) => Some(DecayHint {
                scale: a.abs() * d.scale + b.abs() * e.scale,
                rate: d.rate.min(e.rate),
                power: d.power.max(e.power),
            }),
            _ => None,
        };
        Ok(out)
    }
}

fn factor<F: Fn(f64) -> f64 + Send + Sync + 'static>(g: F) -> Factor {
    Arc::new(g)
}

/// `𝐣_γ(·; ξ)`, the eigenfunction of Δ_γ with eigenvalue `-|ξ|²`.
pub fn eigenfunction(idx: &BesselIndex, xi: &[f64]) -> Result<ScalarField> {
    idx.check_point(xi)?;
    let factors = idx
        .gamma()
        .iter()
        .zip(xi)
        .map(|(&g, &k)| {
            let nu = 0.5 * (g - 1.0);
            factor(move |x: f64| bessel_j_norm_unchecked(nu, (x * k).abs()))
        })
        .collect();
    let mut f = ScalarField::separable(idx.n(), vec![SeparableTerm { coef: 1.0, factors }])?;
    f.even_certified = true;
    f.sup = Some(1.0);
    Ok(f)
}

/// `exp(-|x|² / s²)`.
pub fn gaussian(n: usize, s: f64) -> Result<ScalarField> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Invalid(format!("gaussian scale must be positive, got {s}")));
    }
    let inv = 1.0 / (s * s);
    let factors = (0..n).map(|_| factor(move |x: f64| (-x * x * inv).exp())).collect();
    let mut f = ScalarField::separable(n, vec![SeparableTerm { coef: 1.0, factors }])?;
    f.even_certified = true;
    f.sup = Some(1.0);
    // exp(-r²/s²) <= e · exp(-2r/s)
    f.decay = Some(DecayHint {
        scale: std::f64::consts::E,
        rate: 2.0 / s,
        power: 0.0,
    });
    Ok(f)
}

fn bump_1d(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

/// Smooth compactly supported bump: the product over coordinates of
/// `b((x_i - c_i)/r) + b((x_i + c_i)/r)` with `b(u) = exp(1 - 1/(1-u²))`.
/// The mirrored copy keeps it even at the walls.
pub fn bump(center: &[f64], radius: f64) -> Result<ScalarField> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Invalid(format!("bump radius must be positive, got {radius}")));
    }
    if center.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::Invalid("bump centre must lie in the closed orthant".into()));
    }
    let factors = center
        .iter()
        .map(|&c| factor(move |x: f64| bump_1d((x - c) / radius) + bump_1d((x + c) / radius)))
        .collect();
    let mut f = ScalarField::separable(center.len(), vec![SeparableTerm { coef: 1.0, factors }])?;
    f.even_certified = true;
    f.sup = Some(2f64.powi(center.len() as i32));
    Ok(f)
}

pub fn constant(n: usize, c: f64) -> Result<ScalarField> {
    let mut factors: Vec<Factor> = vec![factor(move |_| c)];
    factors.extend((1..n).map(|_| factor(|_| 1.0)));
    let mut f = ScalarField::separable(n, vec![SeparableTerm { coef: 1.0, factors }])?;
    f.even_certified = true;
    f.sup = Some(c.abs());
    Ok(f)
}

pub fn zero(n: usize) -> Result<ScalarField> {
    let mut f = ScalarField::separable(n, Vec::new())?;
    f.even_certified = true;
    f.sup = Some(0.0);
    f.decay = Some(DecayHint {
        scale: 0.0,
        rate: 1.0,
        power: 0.0,
    });
    Ok(f)
}
