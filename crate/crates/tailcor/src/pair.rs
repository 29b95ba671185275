//! The pairwise tail-correlation estimator.
//!
//! Pipeline: standardize each margin by its median and tau-level
//! interquantile range, project the standardized pair on a line, then scale
//! the xi-level interquantile range of the projection by the Gaussian
//! normalization. Independent Gaussian data score 1; heavier joint tails or
//! stronger linear dependence push the score up. The estimate factors as
//! s_g * nonlinear * linear where linear = sqrt(1 + |rho|) comes from the
//! Kendall-sine correlation and nonlinear carries the tail thickness.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, SQRT_2};

use crate::error::{Error, Result};
use crate::quantile::{self, LevelPair};
use crate::rank::{self, SemiCenter, SemiSide};

/// How the projection angle is picked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnglePolicy {
    /// 45 degrees when rho is non-negative, 135 degrees otherwise. This is
    /// the principal-axis direction under ellipticity and the default.
    AutoSign,
    /// Try a uniform grid of this many angles over [0, pi) and keep the one
    /// maximizing the tail interquantile range. Resolution must be >= 8.
    GridSearch(usize),
    /// Use exactly this angle, in radians within [0, pi).
    Fixed(f64),
}

/// Full configuration of the pairwise estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailConfig {
    pub levels: LevelPair,
    pub angle: AnglePolicy,
    /// Center used by the semi-moments of the asymmetric variant.
    pub semi_center: SemiCenter,
}

impl Default for TailConfig {
    fn default() -> Self {
        Self {
            levels: LevelPair::default(),
            angle: AnglePolicy::AutoSign,
            semi_center: SemiCenter::Median,
        }
    }
}

impl TailConfig {
    pub fn new(levels: LevelPair, angle: AnglePolicy) -> Result<Self> {
        let cfg = Self {
            levels,
            angle,
            semi_center: SemiCenter::Median,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match self.angle {
            AnglePolicy::AutoSign => Ok(()),
            AnglePolicy::GridSearch(res) if res >= 8 => Ok(()),
            AnglePolicy::GridSearch(res) => Err(Error::BadParameter(format!(
                "grid search needs at least 8 angles, got {res}"
            ))),
            AnglePolicy::Fixed(phi) if phi.is_finite() && (0.0..std::f64::consts::PI).contains(&phi) => {
                Ok(())
            }
            AnglePolicy::Fixed(phi) => Err(Error::BadParameter(format!(
                "fixed angle must lie in [0, pi), got {phi}"
            ))),
        }
    }

    /// Fewest observations the tail quantile can tolerate: at least two
    /// points beyond each xi tail, i.e. ceil(2 / (1 - xi)). The small slack
    /// keeps rounding in 1 - xi from bumping exact integer thresholds.
    pub fn min_length(&self) -> usize {
        (2.0 / (1.0 - self.levels.xi().get()) - 1e-9).ceil() as usize
    }
}

/// A pair standardized to median 0 and tau-interquantile-range 1, with the
/// centers and scales kept for reporting.
#[derive(Debug, Clone)]
pub struct StandardizedPair {
    yj: Vec<f64>,
    yk: Vec<f64>,
    centers: (f64, f64),
    scales: (f64, f64),
}

impl StandardizedPair {
    pub fn yj(&self) -> &[f64] {
        &self.yj
    }

    pub fn yk(&self) -> &[f64] {
        &self.yk
    }

    pub fn centers(&self) -> (f64, f64) {
        self.centers
    }

    pub fn scales(&self) -> (f64, f64) {
        self.scales
    }
}

fn check_aligned(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "paired series differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    for (label, s) in [("first", x), ("second", y)] {
        if let Some(i) = s.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value in {label} series at position {i}"
            )));
        }
    }
    Ok(())
}

/// Standardize both margins with their own sample median and tau-level
/// interquantile range.
pub fn standardize(x: &[f64], y: &[f64], levels: LevelPair) -> Result<StandardizedPair> {
    check_aligned(x, y)?;
    let tau = levels.tau().get();
    let sx = quantile::sorted_copy(x);
    let sy = quantile::sorted_copy(y);
    let centers = (
        quantile::quantile_sorted(&sx, 0.5),
        quantile::quantile_sorted(&sy, 0.5),
    );
    let scales = (
        quantile::quantile_sorted(&sx, tau) - quantile::quantile_sorted(&sx, 1.0 - tau),
        quantile::quantile_sorted(&sy, tau) - quantile::quantile_sorted(&sy, 1.0 - tau),
    );
    standardize_with(x, y, centers, scales)
}

/// Standardize with externally supplied centers and scales, e.g. population
/// quantiles in simulation studies.
pub fn standardize_with(
    x: &[f64],
    y: &[f64],
    centers: (f64, f64),
    scales: (f64, f64),
) -> Result<StandardizedPair> {
    check_aligned(x, y)?;
    if scales.0 <= 0.0 {
        return Err(Error::DegenerateScale("first series".into()));
    }
    if scales.1 <= 0.0 {
        return Err(Error::DegenerateScale("second series".into()));
    }
    let yj = x.iter().map(|v| (v - centers.0) / scales.0).collect();
    let yk = y.iter().map(|v| (v - centers.1) / scales.1).collect();
    Ok(StandardizedPair {
        yj,
        yk,
        centers,
        scales,
    })
}

/// Projection z_t = yj_t cos(phi) + yk_t sin(phi).
///
/// The two canonical angles are special-cased to (yj + yk)/sqrt(2) and
/// (yk - yj)/sqrt(2) so that swapping the pair's order leaves the projection
/// bitwise identical or exactly negated.
pub fn project(sp: &StandardizedPair, phi: f64) -> Vec<f64> {
    let pairs = sp.yj.iter().zip(&sp.yk);
    if phi == FRAC_PI_4 {
        pairs.map(|(a, b)| (a + b) * FRAC_1_SQRT_2).collect()
    } else if phi == 3.0 * FRAC_PI_4 {
        pairs.map(|(a, b)| (b - a) * FRAC_1_SQRT_2).collect()
    } else {
        let (c, s) = (phi.cos(), phi.sin());
        pairs.map(|(a, b)| a * c + b * s).collect()
    }
}

/// Pick the projection angle according to policy.
pub fn choose_angle(sp: &StandardizedPair, cfg: &TailConfig, rho: f64) -> f64 {
    match cfg.angle {
        AnglePolicy::AutoSign => {
            if rho >= 0.0 {
                FRAC_PI_4
            } else {
                3.0 * FRAC_PI_4
            }
        }
        AnglePolicy::Fixed(phi) => phi,
        AnglePolicy::GridSearch(res) => {
            let xi = cfg.levels.xi().get();
            let mut best_phi = 0.0;
            let mut best_iqr = f64::NEG_INFINITY;
            for k in 0..res {
                let phi = k as f64 * std::f64::consts::PI / res as f64;
                let z = quantile::sorted_copy(&project(sp, phi));
                let r = quantile::quantile_sorted(&z, xi)
                    - quantile::quantile_sorted(&z, 1.0 - xi);
                // strict comparison keeps the smallest angle on ties
                if r > best_iqr {
                    best_iqr = r;
                    best_phi = phi;
                }
            }
            best_phi
        }
    }
}

/// Everything the pairwise estimator produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEstimate {
    /// The headline number: s_g times the xi-interquantile range of the
    /// projection. 1 for independent Gaussian data, sqrt(2) for a perfectly
    /// dependent Gaussian pair.
    pub tailcor: f64,
    /// Shape correlation, sin(pi/2 * kendall tau).
    pub rho: f64,
    /// sqrt(1 + |rho|), always inside [1, sqrt(2)].
    pub linear: f64,
    /// Raw tail-thickness factor, the projection's xi-range over the linear
    /// part. Equals 1/s_g in the Gaussian case, larger under heavy tails.
    pub nonlinear: f64,
    /// Projection angle actually used, radians.
    pub angle: f64,
    /// Bounded transform in [-1, 1]; None where it is undefined.
    pub alt: Option<f64>,
    /// Tail co-movement below the center, normalized like tailcor.
    pub downside: f64,
    /// Tail co-movement above the center.
    pub upside: f64,
}

impl PairEstimate {
    /// The raw nonlinear component s-hat, not multiplied by s_g.
    pub fn nonlinear_component(&self) -> f64 {
        self.nonlinear
    }
}

fn sign_with_positive_zero(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn alternative_from(tailcor: f64, rho: f64, s_product: f64) -> Result<f64> {
    let rho_abs = rho.abs();
    if rho_abs >= 1.0 {
        // the transform is pinned to the endpoints whenever |rho| = 1
        return Ok(sign_with_positive_zero(rho));
    }
    let denom = s_product * SQRT_2 - 1.0;
    if denom <= 0.0 {
        return Err(Error::BadParameter(format!(
            "alternative transform needs s_g * s-hat > 1/sqrt(2), got {s_product}"
        )));
    }
    if tailcor < 1.0 {
        return Err(Error::PathologicalRegion { tailcor, rho_abs });
    }
    Ok(sign_with_positive_zero(rho) * (tailcor - 1.0) / denom)
}

/// The bounded alternative transform of an estimate, in [-1, 1].
///
/// `s_product` is s_g times the estimated nonlinear component. The transform
/// is undefined when the estimate falls below 1 while |rho| < 1, a region the
/// projection arithmetic cannot reach at the optimal angle.
pub fn alternative_tailcor(est: &PairEstimate, s_product: f64) -> Result<f64> {
    alternative_from(est.tailcor, est.rho, s_product)
}

struct ProjectionStats {
    rho: f64,
    angle: f64,
    q_low: f64,
    q_mid: f64,
    q_high: f64,
}

fn projection_stats(
    sp: &StandardizedPair,
    x: &[f64],
    y: &[f64],
    cfg: &TailConfig,
) -> Result<ProjectionStats> {
    let kappa = rank::kendall_tau(x, y)?;
    let rho = rank::rho_from_kendall(kappa)?;
    let angle = choose_angle(sp, cfg, rho);
    let z = quantile::sorted_copy(&project(sp, angle));
    let xi = cfg.levels.xi().get();
    Ok(ProjectionStats {
        rho,
        angle,
        q_low: quantile::quantile_sorted(&z, 1.0 - xi),
        q_mid: quantile::quantile_sorted(&z, 0.5),
        q_high: quantile::quantile_sorted(&z, xi),
    })
}

fn estimate_from(
    sp: &StandardizedPair,
    x: &[f64],
    y: &[f64],
    cfg: &TailConfig,
) -> Result<PairEstimate> {
    let st = projection_stats(sp, x, y, cfg)?;
    let iqr_z = st.q_high - st.q_low;
    if iqr_z <= 0.0 {
        return Err(Error::DegenerateScale("projection".into()));
    }
    let sg = quantile::s_g(cfg.levels);
    let tailcor = sg * iqr_z;
    let linear = (1.0 + st.rho.abs()).sqrt();
    let nonlinear = iqr_z / linear;
    let alt = alternative_from(tailcor, st.rho, sg * nonlinear).ok();
    Ok(PairEstimate {
        tailcor,
        rho: st.rho,
        linear,
        nonlinear,
        angle: st.angle,
        alt,
        downside: 2.0 * sg * (st.q_mid - st.q_low),
        upside: 2.0 * sg * (st.q_high - st.q_mid),
    })
}

fn check_length(n: usize, cfg: &TailConfig) -> Result<()> {
    let needed = cfg.min_length();
    if n < needed {
        return Err(Error::TooShort { needed, got: n });
    }
    Ok(())
}

/// The pairwise tail correlation of two aligned series.
pub fn tailcor(x: &[f64], y: &[f64], cfg: &TailConfig) -> Result<PairEstimate> {
    cfg.validate()?;
    check_aligned(x, y)?;
    check_length(x.len(), cfg)?;
    let sp = standardize(x, y, cfg.levels)?;
    estimate_from(&sp, x, y, cfg)
}

/// Same estimator, but standardizing with caller-supplied centers and scales
/// instead of sample quantiles.
pub fn tailcor_standardized_with(
    x: &[f64],
    y: &[f64],
    centers: (f64, f64),
    scales: (f64, f64),
    cfg: &TailConfig,
) -> Result<PairEstimate> {
    cfg.validate()?;
    check_aligned(x, y)?;
    check_length(x.len(), cfg)?;
    let sp = standardize_with(x, y, centers, scales)?;
    estimate_from(&sp, x, y, cfg)
}

/// Downside/upside split of the pairwise estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymmetricEstimate {
    /// 2 s_g times the lower semi-range of the projection; co-movement in
    /// joint losses.
    pub downside: f64,
    /// 2 s_g times the upper semi-range; co-movement in joint gains.
    pub upside: f64,
    /// Semi-correlation over observations above the centers.
    pub semi_rho_pos: f64,
    /// Semi-correlation over observations below the centers.
    pub semi_rho_neg: f64,
    /// Off-axis correction sqrt(1 + 2 |semi rho| |sin cos|) for the downside,
    /// populated only when the angle is not one of the two canonical ones.
    pub angle_factor_down: Option<f64>,
    /// Same correction for the upside.
    pub angle_factor_up: Option<f64>,
    pub angle: f64,
}

/// Downside and upside tail correlation plus the semi-correlations.
///
/// The average of the two sides reproduces the symmetric estimate exactly
/// because the semi-ranges split the full interquantile range at the median.
pub fn tailcor_asymmetric(x: &[f64], y: &[f64], cfg: &TailConfig) -> Result<AsymmetricEstimate> {
    cfg.validate()?;
    check_aligned(x, y)?;
    check_length(x.len(), cfg)?;
    let sp = standardize(x, y, cfg.levels)?;
    let st = projection_stats(&sp, x, y, cfg)?;
    let sg = quantile::s_g(cfg.levels);
    let semi_rho_pos = rank::semi_correlation(x, y, SemiSide::Positive, cfg.semi_center)?;
    let semi_rho_neg = rank::semi_correlation(x, y, SemiSide::Negative, cfg.semi_center)?;

    let canonical = st.angle == FRAC_PI_4 || st.angle == 3.0 * FRAC_PI_4;
    let (factor_down, factor_up) = if canonical {
        (None, None)
    } else {
        let cross = (st.angle.sin() * st.angle.cos()).abs();
        (
            Some((1.0 + 2.0 * semi_rho_neg.abs() * cross).sqrt()),
            Some((1.0 + 2.0 * semi_rho_pos.abs() * cross).sqrt()),
        )
    };

    Ok(AsymmetricEstimate {
        downside: 2.0 * sg * (st.q_mid - st.q_low),
        upside: 2.0 * sg * (st.q_high - st.q_mid),
        semi_rho_pos,
        semi_rho_neg,
        angle_factor_down: factor_down,
        angle_factor_up: factor_up,
        angle: st.angle,
    })
}
