//! Sample quantiles, interquantile ranges, and the Gaussian normalization.
//!
//! Quantiles interpolate order statistics linearly at rank (n-1)p + 1, the
//! common continuous convention. Every golden number downstream depends on
//! this choice, so it is fixed here and not configurable.

use crate::error::{Error, Result};

/// A probability level, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level(f64);

impl Level {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 0.0 && p < 1.0 {
            Ok(Self(p))
        } else {
            Err(Error::InvalidLevel {
                value: p,
                reason: "must lie strictly inside (0, 1)",
            })
        }
    }

    /// A level usable as an interquantile-range endpoint, i.e. above one half.
    pub fn upper(p: f64) -> Result<Self> {
        let level = Self::new(p)?;
        if p > 0.5 {
            Ok(level)
        } else {
            Err(Error::InvalidLevel {
                value: p,
                reason: "an interquantile range needs p > 0.5",
            })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// The two levels of the estimator: tau scales the body, xi probes the tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelPair {
    tau: Level,
    xi: Level,
}

impl LevelPair {
    /// Requires 0.5 < tau < xi < 1.
    pub fn new(tau: f64, xi: f64) -> Result<Self> {
        let tau = Level::upper(tau)?;
        let xi = Level::upper(xi)?;
        if tau.get() < xi.get() {
            Ok(Self { tau, xi })
        } else {
            Err(Error::InvalidLevel {
                value: xi.get(),
                reason: "tail level xi must exceed body level tau",
            })
        }
    }

    pub fn tau(self) -> Level {
        self.tau
    }

    pub fn xi(self) -> Level {
        self.xi
    }
}

impl Default for LevelPair {
    /// The conventional choice: tau = 0.75, xi = 0.95.
    fn default() -> Self {
        Self::new(0.75, 0.95).expect("default levels are valid")
    }
}

fn check_series(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::InvalidInput("empty series".into()));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite value at position {i}"
        )));
    }
    Ok(())
}

/// Sorts a copy of the data for repeated quantile lookups.
pub(crate) fn sorted_copy(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    s
}

/// Quantile of an already sorted slice, linear interpolation at rank (n-1)p + 1.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// The p-quantile of a sample, linearly interpolated between order statistics.
pub fn sample_quantile(x: &[f64], p: Level) -> Result<f64> {
    check_series(x)?;
    Ok(quantile_sorted(&sorted_copy(x), p.get()))
}

/// Interquantile range Q(p) - Q(1-p); needs p > 0.5 to be non-negative.
/// Assembled from the two semi-ranges around the median so that the
/// upper/lower split is exact down to the last bit.
pub fn iqr(x: &[f64], p: Level) -> Result<f64> {
    let p = Level::upper(p.get())?;
    check_series(x)?;
    let s = sorted_copy(x);
    let med = quantile_sorted(&s, 0.5);
    Ok((quantile_sorted(&s, p.get()) - med) + (med - quantile_sorted(&s, 1.0 - p.get())))
}

/// Upper semi-interquantile range Q(p) - Q(0.5).
pub fn semi_iqr_upper(x: &[f64], p: Level) -> Result<f64> {
    let p = Level::upper(p.get())?;
    check_series(x)?;
    let s = sorted_copy(x);
    Ok(quantile_sorted(&s, p.get()) - quantile_sorted(&s, 0.5))
}

/// Lower semi-interquantile range Q(0.5) - Q(1-p).
pub fn semi_iqr_lower(x: &[f64], p: Level) -> Result<f64> {
    let p = Level::upper(p.get())?;
    check_series(x)?;
    let s = sorted_copy(x);
    Ok(quantile_sorted(&s, 0.5) - quantile_sorted(&s, 1.0 - p.get()))
}

/// Standard normal CDF, evaluated through the complementary error function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

// Rational approximation coefficients for the central and tail regions of the
// inverse normal CDF (Acklam's fit, relative error about 1e-9 before polish).
const INV_A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const INV_B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const INV_C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const INV_D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];

/// Inverse standard normal CDF.
///
/// A rational approximation supplies the starting point and one Halley step
/// against the erfc-based CDF polishes it, leaving the round-trip error
/// |norm_cdf(result) - p| below 1e-12 across the whole open interval.
pub fn inv_norm_cdf(p: Level) -> f64 {
    let p = p.get();
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((INV_C[0] * q + INV_C[1]) * q + INV_C[2]) * q + INV_C[3]) * q + INV_C[4]) * q
            + INV_C[5])
            / ((((INV_D[0] * q + INV_D[1]) * q + INV_D[2]) * q + INV_D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((INV_A[0] * r + INV_A[1]) * r + INV_A[2]) * r + INV_A[3]) * r + INV_A[4]) * r
            + INV_A[5])
            * q
            / (((((INV_B[0] * r + INV_B[1]) * r + INV_B[2]) * r + INV_B[3]) * r + INV_B[4]) * r
                + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((INV_C[0] * q + INV_C[1]) * q + INV_C[2]) * q + INV_C[3]) * q + INV_C[4]) * q
            + INV_C[5])
            / ((((INV_D[0] * q + INV_D[1]) * q + INV_D[2]) * q + INV_D[3]) * q + 1.0)
    };

    // Halley refinement: e is the CDF residual, u the Newton step.
    let e = norm_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}

/// Gaussian normalization s_g(xi, tau) = z(tau) / z(xi) with z the standard
/// normal quantile. Multiplying the projection's tail range by this constant
/// makes independent Gaussian pairs score exactly 1.
pub fn s_g(levels: LevelPair) -> f64 {
    inv_norm_cdf(levels.tau()) / inv_norm_cdf(levels.xi())
}

/// Quantile-based descriptive statistics of one series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Descriptives {
    pub median: f64,
    /// Interquantile range at the 0.75 level.
    pub iqr75: f64,
    /// Excess kurtosis proxy: IQR(0.975) / IQR(0.75) - 2.91, roughly zero
    /// for Gaussian data.
    pub qkurtosis: f64,
    /// Skewness proxy: (Q(0.975) - Q(0.5)) - (Q(0.5) - Q(0.025)).
    pub qskewness: f64,
}

/// Robust descriptives from sample quantiles. Needs at least 40 observations
/// so the 0.975 tail quantiles rest on real order statistics.
pub fn quantile_descriptives(x: &[f64]) -> Result<Descriptives> {
    check_series(x)?;
    if x.len() < 40 {
        return Err(Error::InvalidInput(format!(
            "descriptives need at least 40 observations, got {}",
            x.len()
        )));
    }
    let s = sorted_copy(x);
    let q = |p: f64| quantile_sorted(&s, p);
    let iqr75 = q(0.75) - q(0.25);
    if iqr75 <= 0.0 {
        return Err(Error::DegenerateScale("series".into()));
    }
    let iqr975 = q(0.975) - q(0.025);
    Ok(Descriptives {
        median: q(0.5),
        iqr75,
        qkurtosis: iqr975 / iqr75 - 2.91,
        qskewness: (q(0.975) - q(0.5)) - (q(0.5) - q(0.025)),
    })
}
