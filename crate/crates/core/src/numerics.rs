//! Scalar probit kernel and single-feature weighted least squares.
//!
//! Everything that divides by `Φ(u)` goes through the inverse Mills ratio
//! `r(u) = φ(u)/Φ(u)`, which is evaluated from the scaled complementary
//! error function so that it stays finite for very negative margins.

use libm::{erfc, exp, log, log1p};

use crate::{Error, Result};

/// Margins are clamped to `[-U_MAX, U_MAX]` before computing Newton
/// responses and weights.
pub const U_MAX: f64 = 8.0;

/// Weighted feature variance below which a feature is treated as constant.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const LN_2: f64 = core::f64::consts::LN_2;

/// A signed margin `y·f(x)` for `y ∈ {-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Margin(pub f64);

impl Margin {
    pub fn new(label: f64, score: f64) -> Self {
        Margin(label * score)
    }

    /// The margin restricted to `[-U_MAX, U_MAX]`.
    pub fn clamped(self) -> f64 {
        self.0.clamp(-U_MAX, U_MAX)
    }
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * exp(-0.5 * x * x)
}

/// Standard normal distribution function, accurate in relative terms in the
/// lower tail.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * core::f64::consts::FRAC_1_SQRT_2)
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
fn erfcx(x: f64) -> f64 {
    if x < 2.0 {
        return exp(x * x) * erfc(x);
    }
    // Continued fraction erfc(x) = exp(-x²)/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
    // evaluated with the modified Lentz method.
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d == 0.0 {
            d = TINY;
        }
        c = x + a / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    FRAC_1_SQRT_PI / f
}

/// Inverse Mills ratio `φ(u)/Φ(u)`; strictly positive and decreasing.
pub fn inv_mills(u: f64) -> f64 {
    if u >= 0.0 {
        norm_pdf(u) / norm_cdf(u)
    } else {
        SQRT_2_OVER_PI / erfcx(-u * core::f64::consts::FRAC_1_SQRT_2)
    }
}

/// Probit loss `Q(u) = -log Φ(u)`, evaluated in log space.
pub fn probit_loss(u: f64) -> f64 {
    if u >= 0.0 {
        -log1p(-0.5 * erfc(u * core::f64::consts::FRAC_1_SQRT_2))
    } else {
        let x = -u * core::f64::consts::FRAC_1_SQRT_2;
        LN_2 + 0.5 * u * u - log(erfcx(x))
    }
}

/// Newton working response `z` and Hessian weight `w` for label `y` at
/// score `f`.
///
/// With `u = clamp(y·f)` and `r = r(u)`: `z = y/(u + r)` and
/// `w = r·(u + r)`. `u + r(u) > max(0, u)` holds for every `u`, so `w > 0`
/// and `z` has the sign of `y`.
pub fn working_response_and_weight(y: f64, f: f64) -> (f64, f64) {
    let u = Margin::new(y, f).clamped();
    let r = inv_mills(u);
    let denom = u + r;
    (y / denom, r * denom)
}

/// Result of a weighted simple linear regression `z ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WlsFit {
    pub slope: f64,
    pub intercept: f64,
    pub weighted_sse: f64,
}

/// Response-side sufficient statistics, shared across all candidate features
/// in one boosting step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct WlsResponse {
    total_weight: f64,
    mean: f64,
    /// Σ w (z - z̄)²
    centered_ss: f64,
}

impl WlsResponse {
    pub(crate) fn new(z: &[f64], w: &[f64]) -> Self {
        let mut total_weight = 0.0;
        let mut wz = 0.0;
        for (&zi, &wi) in z.iter().zip(w) {
            total_weight += wi;
            wz += wi * zi;
        }
        let mean = wz / total_weight;
        let centered_ss = z
            .iter()
            .zip(w)
            .map(|(&zi, &wi)| {
                let d = zi - mean;
                wi * d * d
            })
            .sum();
        Self {
            total_weight,
            mean,
            centered_ss,
        }
    }

    /// Fits one feature column against the response.
    pub(crate) fn fit(&self, x: &[f64], z: &[f64], w: &[f64]) -> WlsFit {
        let mut wx = 0.0;
        for (&xi, &wi) in x.iter().zip(w) {
            wx += wi * xi;
        }
        let x_mean = wx / self.total_weight;
        let mut sxx = 0.0;
        let mut sxz = 0.0;
        for ((&xi, &zi), &wi) in x.iter().zip(z).zip(w) {
            let dx = xi - x_mean;
            sxx += wi * dx * dx;
            sxz += wi * dx * (zi - self.mean);
        }
        if sxx / self.total_weight < DEGENERATE_VARIANCE {
            return WlsFit {
                slope: 0.0,
                intercept: self.mean,
                weighted_sse: self.centered_ss,
            };
        }
        let slope = sxz / sxx;
        WlsFit {
            slope,
            intercept: self.mean - slope * x_mean,
            weighted_sse: (self.centered_ss - slope * sxz).max(0.0),
        }
    }
}

/// Closed-form weighted least squares of `z` on a single feature `x`.
///
/// A feature whose weighted variance is below [`DEGENERATE_VARIANCE`] gets
/// slope 0 and the weighted mean of `z` as intercept.
pub fn wls_fit(x: &[f64], z: &[f64], w: &[f64]) -> Result<WlsFit> {
    if x.is_empty() {
        return Err(Error::EmptyRegression);
    }
    if z.len() != x.len() {
        return Err(Error::LengthMismatch {
            what: "regression response",
            expected: x.len(),
            actual: z.len(),
        });
    }
    crate::dataset::validate_weights(w, x.len())?;
    Ok(WlsResponse::new(z, w).fit(x, z, w))
}
