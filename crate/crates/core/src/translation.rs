//! Bessel generalized translation.
//!
//! In one variable
//!
//! ```text
//! T^y g(x) = C(γ) ∫₀^π g(√(x² + y² - 2xy cos φ)) sin^{γ-1}φ dφ,   γ > 0,
//! T^y g(x) = (g(x + y) + g(|x - y|)) / 2,                          γ = 0,
//! ```
//!
//! with `C(γ) = Γ((γ+1)/2)/(√π Γ(γ/2))`. The n-dimensional translation is the
//! composition of the one-dimensional ones along each axis.
//!
//! The γ = 0 branch is the even average. Versions of this formula that
//! subtract the two shifts instead are wrong: they give `T^y 1 = 0` and do
//! not match the γ → 0⁺ limit of the integral.
//!
//! For small γ the weight piles up at both ends of `[0, π]`. The quadrature
//! therefore runs on `g(r(φ)) - g(r(0)) cos²(φ/2) - g(r(π)) sin²(φ/2)`, which
//! vanishes at both endpoints; the subtracted part integrates exactly to the
//! even average. As γ → 0 the constant `C(γ)` vanishes and the γ = 0 formula
//! is recovered continuously.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::quadrature::{tanh_sinh_ref, QuadSpec};
use crate::specfun::{poisson_const, BesselIndex};

/// One-dimensional translation of an even function `g` of one variable.
pub fn translate_1d<G>(gamma: f64, x: f64, y: f64, mut g: G, spec: &QuadSpec) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
{
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Domain {
            func: "translate_1d",
            value: gamma,
            expected: "gamma >= 0",
        });
    }
    if !(y >= 0.0) {
        return Err(Error::Domain {
            func: "translate_1d",
            value: y,
            expected: "shift y >= 0",
        });
    }
    if !(x >= 0.0) {
        return Err(Error::Domain {
            func: "translate_1d",
            value: x,
            expected: "point x >= 0",
        });
    }
    let near = g((x - y).abs())?;
    let far = g(x + y)?;
    let even_avg = 0.5 * (near + far);
    if gamma == 0.0 {
        return Ok(even_avg);
    }
    let diff2 = (x - y) * (x - y);
    let cross = 4.0 * x * y;
    let expo = gamma - 1.0;
    let c = poisson_const(gamma)?;
    // an error of tol * max|g| / C in the remainder is tol * max|g| in the result
    let ref_mass = near.abs().max(far.abs()) / c;
    let (rem, _) = tanh_sinh_ref(
        |_, da, db| {
            // s2 = sin²(φ/2), c2 = cos²(φ/2), taken from the closer endpoint
            let (s2, c2, sin_phi) = if da <= db {
                let s = (0.5 * da).sin();
                (s * s, 1.0 - s * s, da.sin())
            } else {
                let c = (0.5 * db).sin();
                (1.0 - c * c, c * c, db.sin())
            };
            let r = (diff2 + cross * s2).sqrt();
            let gr = g(r)?;
            let v = gr - near * c2 - far * s2;
            let noise = 4.0 * f64::EPSILON * (gr.abs() + near.abs() + far.abs());
            Ok(if v.abs() <= noise { 0.0 } else { v * sin_phi.powf(expo) })
        },
        0.0,
        std::f64::consts::PI,
        spec,
        ref_mass,
    )?;
    Ok(even_avg + c * rem.value)
}

/// Translation along one axis of `f`, evaluated at `at`.
pub fn gt1d(gamma_i: f64, axis: usize, y_i: f64, f: &ScalarField, at: &[f64], spec: &QuadSpec) -> Result<f64> {
    if at.len() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            got: at.len(),
        });
    }
    if axis >= f.n() {
        return Err(Error::Invalid(format!("axis {axis} out of range for n = {}", f.n())));
    }
    let mut p = at.to_vec();
    translate_1d(
        gamma_i,
        at[axis],
        y_i,
        |u| {
            p[axis] = u;
            Ok(f.eval(&p))
        },
        spec,
    )
}

fn check_dims(idx: &BesselIndex, y: &[f64], f: &ScalarField, at: &[f64]) -> Result<()> {
    idx.check_point(y)?;
    idx.check_point(at)?;
    if f.n() != idx.n() {
        return Err(Error::DimensionMismatch {
            expected: idx.n(),
            got: f.n(),
        });
    }
    Ok(())
}

/// `(𝕋^y f)(at)`. Separable fields are translated factor by factor; other
/// fields go through [`gtn_nested`].
pub fn gtn(idx: &BesselIndex, y: &[f64], f: &ScalarField, at: &[f64], spec: &QuadSpec) -> Result<f64> {
    check_dims(idx, y, f, at)?;
    let Some(terms) = f.terms() else {
        return gtn_nested(idx, y, f, at, spec);
    };
    let inner = spec.tightened(3.0 * idx.n() as f64);
    let mut total = 0.0;
    for term in terms {
        let mut prod = term.coef;
        for (i, g) in term.factors.iter().enumerate() {
            if prod == 0.0 {
                break;
            }
            prod *= translate_1d(idx.gamma()[i], at[i], y[i], |u| Ok(g(u)), &inner)?;
        }
        total += prod;
    }
    Ok(total)
}

/// `(𝕋^y f)(at)` as an n-fold nested quadrature, one axis per level, with
/// the inner levels run at `tol / (3n)`.
pub fn gtn_nested(idx: &BesselIndex, y: &[f64], f: &ScalarField, at: &[f64], spec: &QuadSpec) -> Result<f64> {
    check_dims(idx, y, f, at)?;
    let inner = spec.tightened(3.0 * idx.n() as f64);
    let mut point = at.to_vec();
    nested(idx.gamma(), y, f, at, &mut point, 0, spec, &inner)
}

#[allow(clippy::too_many_arguments)]
fn nested(
    gam: &[f64],
    y: &[f64],
    f: &ScalarField,
    at: &[f64],
    point: &mut [f64],
    axis: usize,
    spec: &QuadSpec,
    inner: &QuadSpec,
) -> Result<f64> {
    if axis == gam.len() {
        return Ok(f.eval(point));
    }
    let level_spec = if axis == 0 { spec } else { inner };
    let mut local = point.to_vec();
    translate_1d(
        gam[axis],
        at[axis],
        y[axis],
        |u| {
            local[axis] = u;
            nested(gam, y, f, at, &mut local, axis + 1, spec, inner)
        },
        level_spec,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{bump, constant, eigenfunction, gaussian};
    use crate::specfun::bessel_j_norm;
    use proptest::prelude::*;

    fn spec() -> QuadSpec {
        QuadSpec::with_tol(1e-10)
    }

    #[test]
    fn constants_are_fixed() {
        for &g in &[1e-6, 0.05, 0.6, 1.0, 1.4, 3.0, 7.5] {
            for &(x, y) in &[(0.3, 1.7), (2.0, 2.0), (0.0, 0.8), (4.1, 0.2)] {
                let v = translate_1d(g, x, y, |_| Ok(1.0), &spec()).unwrap();
                assert!((v - 1.0).abs() < 1e-12, "gamma={g} x={x} y={y}: {v}");
            }
        }
    }

    #[test]
    fn zero_index_is_even_average() {
        let (x, y) = (0.7, 1.9);
        let v = translate_1d(0.0, x, y, |u| Ok(u * u), &spec()).unwrap();
        assert!((v - (x * x + y * y)).abs() < 1e-14);
        let w = translate_1d(1e-9, x, y, |u| Ok((u * 1.3).cos()), &spec()).unwrap();
        let avg = 0.5 * (((x + y) * 1.3).cos() + ((x - y) * 1.3).cos());
        assert!((w - avg).abs() < 1e-8);
    }

    #[test]
    fn origin_collapses_to_radius() {
        let g = |u: f64| (-(u - 0.3) * (u - 0.3)).exp() + u * u;
        let v = translate_1d(1.4, 0.0, 1.25, |u| Ok(g(u)), &spec()).unwrap();
        assert!((v - g(1.25)).abs() < 1e-10);
        let v = translate_1d(1.4, 0.9, 0.0, |u| Ok(g(u)), &spec()).unwrap();
        assert_eq!(v, g(0.9));
    }

    #[test]
    fn index_two_closed_form() {
        // γ = 2: substituting r gives (1/(2xy)) ∫_{|x-y|}^{x+y} g(r) r dr
        for &(x, y) in &[(0.4, 1.1), (1.0, 1.0), (2.5, 0.3)] {
            let v = translate_1d(2.0, x, y, |u| Ok((-u * u).exp()), &spec()).unwrap();
            let d: f64 = x - y;
            let s: f64 = x + y;
            let exact = ((-d * d).exp() - (-s * s).exp()) / (4.0 * x * y);
            assert!((v - exact).abs() < 1e-12, "x={x} y={y}");
        }
    }

    #[test]
    fn product_formula_for_normalized_bessel() {
        for &g in &[0.15, 0.6, 1.0, 2.7] {
            let nu = 0.5 * (g - 1.0);
            let (x, y, xi) = (0.8, 1.7, 1.3);
            let v = translate_1d(g, x, y, |u| bessel_j_norm(nu, u * xi), &spec()).unwrap();
            let exact = bessel_j_norm(nu, x * xi).unwrap() * bessel_j_norm(nu, y * xi).unwrap();
            assert!((v - exact).abs() < 1e-10, "gamma={g}: {v} vs {exact}");
        }
    }

    #[test]
    fn gt1d_on_fields() {
        let f = gaussian(2, 1.0).unwrap();
        let v = gt1d(0.0, 1, 0.5, &f, &[0.2, 1.0], &spec()).unwrap();
        let expect = (-0.04f64).exp() * 0.5 * ((-2.25f64).exp() + (-0.25f64).exp());
        assert!((v - expect).abs() < 1e-14);
        assert!(gt1d(1.0, 2, 0.5, &f, &[0.2, 1.0], &spec()).is_err());
        assert!(gt1d(1.0, 0, -0.5, &f, &[0.2, 1.0], &spec()).is_err());
    }

    #[test]
    fn identity_shift_and_constants() {
        let idx = BesselIndex::new(vec![0.6, 0.8]).unwrap();
        let f = gaussian(2, 1.3).unwrap();
        let at = [0.4, 1.2];
        assert_eq!(gtn(&idx, &[0.0, 0.0], &f, &at, &spec()).unwrap(), f.eval(&at));
        let one = constant(2, 1.0).unwrap();
        assert!((gtn(&idx, &[0.3, 2.0], &one, &at, &spec()).unwrap() - 1.0).abs() < 1e-12);
        assert!(gtn(&idx, &[0.3], &one, &at, &spec()).is_err());
    }

    #[test]
    fn separable_and_nested_paths_agree() {
        let s = QuadSpec::with_tol(1e-9);
        let idx = BesselIndex::new(vec![0.6, 0.8]).unwrap();
        let fields = [
            eigenfunction(&idx, &[1.0, 0.5]).unwrap(),
            gaussian(2, 0.9).unwrap(),
            bump(&[0.5, 0.7], 0.8).unwrap(),
        ];
        for f in &fields {
            let plain = {
                let g = f.clone();
                ScalarField::new(2, move |x| g.eval(x))
            };
            let (y, at) = ([0.7, 0.45], [0.3, 0.9]);
            let a = gtn(&idx, &y, f, &at, &s).unwrap();
            let b = gtn(&idx, &y, &plain, &at, &s).unwrap();
            assert!((a - b).abs() <= 2.0 * s.tol, "{f:?}: {a} vs {b}");
        }
    }

    fn smooth_field() -> ScalarField {
        // deliberately non-separable
        ScalarField::new(2, |x| (-(x[0] * x[0] + 0.5 * x[1] * x[1])).exp() * (1.0 + 0.3 * (x[0] * x[1]).powi(2)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn translation_is_symmetric(
            g1 in 0.0f64..2.5, g2 in 0.0f64..2.5,
            x1 in 0.0f64..2.0, x2 in 0.0f64..2.0,
            y1 in 0.0f64..2.0, y2 in 0.0f64..2.0,
        ) {
            let s = QuadSpec::with_tol(1e-9);
            let idx = BesselIndex::new(vec![g1, g2]).unwrap();
            let f = smooth_field();
            let a = gtn(&idx, &[y1, y2], &f, &[x1, x2], &s).unwrap();
            let b = gtn(&idx, &[x1, x2], &f, &[y1, y2], &s).unwrap();
            prop_assert!((a - b).abs() <= 2.0 * s.tol, "{} vs {}", a, b);
        }

        #[test]
        fn normalization_holds(
            g in proptest::collection::vec(0.0f64..4.0, 1..=3),
            seed in proptest::collection::vec(0.0f64..3.0, 6),
        ) {
            let s = QuadSpec::with_tol(1e-9);
            let n = g.len();
            let idx = BesselIndex::new(g).unwrap();
            let one = ScalarField::new(n, |_| 1.0);
            let v = gtn(&idx, &seed[..n], &one, &seed[3..3 + n], &s).unwrap();
            prop_assert!((v - 1.0).abs() <= s.tol);
        }

        #[test]
        fn translation_is_bounded(
            g1 in 0.0f64..3.0, g2 in 0.0f64..3.0,
            x1 in 0.0f64..2.0, x2 in 0.0f64..2.0,
            y1 in 0.0f64..2.0, y2 in 0.0f64..2.0,
        ) {
            let s = QuadSpec::with_tol(1e-9);
            let idx = BesselIndex::new(vec![g1, g2]).unwrap();
            let f = bump(&[0.6, 0.4], 0.9).unwrap();
            let v = gtn(&idx, &[y1, y2], &f, &[x1, x2], &s).unwrap();
            prop_assert!(v.abs() <= f.sup().unwrap() + s.tol);
        }
    }
}
