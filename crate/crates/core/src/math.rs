//! Special functions and quadrature kernels.
//!
//! Fresnel integrals `C(u) = ∫₀ᵘ cos(πx²/2) dx` and `S(u) = ∫₀ᵘ sin(πx²/2) dx`
//! are evaluated by their Maclaurin series for `|u| < 1.5` and by a
//! continued fraction for the complementary error function above that
//! (`C + iS = (1+i)/2 · erf(√π (1-i) u / 2)`). Both branches are accurate to a
//! few ulps of 0.5, so they agree at the joint far inside 1e-12.

use std::f64::consts::{FRAC_PI_2, PI};
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use crate::error::{ensure, Error, Result};

/// Below this `|u|` the power series is used.
pub const FRESNEL_SERIES_LIMIT: f64 = 1.5;

const FRESNEL_EPS: f64 = 1e-17;
const FRESNEL_MAX_ITER: usize = 500;

/// Minimum number of Simpson samples per local 2π of integrand phase.
pub const SAMPLES_PER_CYCLE: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresnelPair {
    pub c: f64,
    pub s: f64,
}

impl FresnelPair {
    /// `C(u) + i S(u)`.
    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.c, self.s)
    }
}

pub fn fresnel(u: f64) -> Result<FresnelPair> {
    ensure(u.is_finite(), || Error::Domain(format!("Fresnel integral of non-finite argument {u}")))?;
    let x = u.abs();
    let (c, s) = if x < FRESNEL_SERIES_LIMIT {
        fresnel_series(x)
    } else {
        fresnel_continued_fraction(x)?
    };
    let sign = if u < 0.0 { -1.0 } else { 1.0 };
    Ok(FresnelPair { c: sign * c, s: sign * s })
}

pub fn fresnel_c(u: f64) -> Result<f64> {
    fresnel(u).map(|p| p.c)
}

pub fn fresnel_s(u: f64) -> Result<f64> {
    fresnel(u).map(|p| p.s)
}

/// Maclaurin series in `t = πx²/2`; even powers feed C, odd powers feed S.
pub(crate) fn fresnel_series(x: f64) -> (f64, f64) {
    if x == 0.0 {
        return (0.0, 0.0);
    }
    let t = FRAC_PI_2 * x * x;
    let mut term = 1.0; // t^k / k!
    let (mut c, mut s) = (0.0, 0.0);
    for k in 0..FRESNEL_MAX_ITER {
        if k > 0 {
            term *= t / k as f64;
        }
        let contrib = term * x / (2 * k + 1) as f64;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            c += sign * contrib;
        } else {
            s += sign * contrib;
        }
        if k as f64 > t && contrib < FRESNEL_EPS * (c.abs() + s.abs()) {
            break;
        }
    }
    (c, s)
}

/// Modified-Lentz evaluation of the erfc continued fraction, `x ≥ 1.5`.
pub(crate) fn fresnel_continued_fraction(x: f64) -> Result<(f64, f64)> {
    let pix2 = PI * x * x;
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, -pix2);
    let mut cc = Complex64::new(1.0 / tiny, 0.0);
    let mut d = b.inv();
    let mut h = d;
    let mut n = -1.0;
    let mut converged = false;
    for _ in 2..FRESNEL_MAX_ITER {
        n += 2.0;
        let a = -n * (n + 1.0);
        b += 4.0;
        d = (d * a + b).inv();
        cc = b + cc.inv() * a;
        let del = cc * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < 4.0 * f64::EPSILON {
            converged = true;
            break;
        }
    }
    ensure(converged, || Error::Convergence(format!("Fresnel continued fraction at x = {x}")))?;
    h *= Complex64::new(x, -x);
    let half_phase = 0.5 * pix2;
    let cs = Complex64::new(0.5, 0.5)
        * (Complex64::new(1.0, 0.0) - Complex64::new(half_phase.cos(), half_phase.sin()) * h);
    Ok((cs.re, cs.im))
}

/// Composite Simpson estimate of `∫_lo^hi f`. `n` is the number of samples;
/// an even count is bumped to the next odd one.
pub fn complex_quadrature<F>(f: F, lo: f64, hi: f64, n: usize) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    simpson_pair(f, lo, hi, n).map(|(fine, _)| fine)
}

/// Simpson estimates with `m` and `m/2` intervals from one sampling pass, where
/// `m` is `n - 1` rounded up to a multiple of four. The gap between the two is
/// the convergence indicator used by callers that must detect under-sampling.
pub fn simpson_pair<F>(f: F, lo: f64, hi: f64, n: usize) -> Result<(Complex64, Complex64)>
where
    F: Fn(f64) -> Complex64,
{
    ensure(lo.is_finite() && hi.is_finite() && lo < hi, || {
        Error::Domain(format!("quadrature needs finite lo < hi, got [{lo}, {hi}]"))
    })?;
    ensure(n >= 2, || Error::Domain(format!("quadrature needs at least 2 samples, got {n}")))?;
    let intervals = (n.max(5) - 1).div_ceil(4) * 4;
    let h = (hi - lo) / intervals as f64;
    let mut fine = Complex64::new(0.0, 0.0);
    let mut coarse = Complex64::new(0.0, 0.0);
    for k in 0..=intervals {
        let x = if k == intervals { hi } else { lo + k as f64 * h };
        let v = f(x);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { abscissa: x, context: "quadrature integrand".into() });
        }
        let wf = if k == 0 || k == intervals {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        fine += v * wf;
        if k % 2 == 0 {
            let j = k / 2;
            let wc = if j == 0 || j == intervals / 2 {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            coarse += v * wc;
        }
    }
    Ok((fine * (h / 3.0), coarse * (2.0 * h / 3.0)))
}

/// Sample count giving at least [`SAMPLES_PER_CYCLE`] points per local phase
/// cycle when the integrand's phase changes at most `max_phase_rate` rad per
/// unit abscissa over a span of length `span`.
pub fn samples_for_phase(span: f64, max_phase_rate: f64, minimum: usize) -> usize {
    let cycles = (max_phase_rate.abs() * span) / (2.0 * PI);
    ((SAMPLES_PER_CYCLE * cycles).ceil() as usize + 1).max(minimum).max(5)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Result<Vec<(f64, f64)>> {
    let degree = NonZeroUsize::new(n).ok_or_else(|| Error::Domain("Gauss-Legendre rule of degree 0".into()))?;
    let mut pairs = GaussLegendre::new(degree).as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs)
}
