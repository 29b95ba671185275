//! Samplers for elliptical and mean-variance-mixture laws, and the Monte
//! Carlo harness used to validate the estimator against known truths.
//!
//! All families share the representation x = mu + scale_t * L g_t with g
//! standard normal and L a Cholesky factor of the dispersion matrix; the
//! families differ only in the random scale:
//!
//! - Gaussian: scale 1
//! - Student-t: sqrt(df / w), w chi-square with df degrees of freedom
//! - sub-Gaussian alpha-stable: sqrt(A) with A a totally skewed positive
//!   (alpha/2)-stable variable, scaled so the margins approach N(0, Sigma_jj)
//!   as alpha approaches 2
//! - Student-t mean-variance mixture: adds a common skew term R^2 gamma
//!   before the elliptical part, R^2 = df / w
//!
//! Replicates derive their seeds independently, so Monte Carlo results do
//! not depend on scheduling.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use rayon::prelude::*;
use statrs::distribution::ContinuousCDF;

use crate::error::{Error, Result};
use crate::pair::{self, PairEstimate, TailConfig};
use crate::panel::Panel;
use crate::quantile::{self, Level};
use crate::seeding;

/// Distribution family of the sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Gaussian,
    /// Degrees of freedom may be fractional; anything positive works.
    StudentT { df: f64 },
    /// Stability index strictly inside (0, 2).
    SubGaussianStable { alpha: f64 },
    /// Student-t mixture with a common skew shift gamma per unit of mixing
    /// variance.
    NmvmStudentT { df: f64, gamma: f64 },
}

/// A location vector, dispersion matrix, and family, validated once.
#[derive(Debug, Clone)]
pub struct EllipticalModel {
    family: Family,
    mu: Vec<f64>,
    sigma: Vec<Vec<f64>>,
    chol: Vec<Vec<f64>>,
}

impl EllipticalModel {
    pub fn new(family: Family, mu: Vec<f64>, sigma: Vec<Vec<f64>>) -> Result<Self> {
        match family {
            Family::Gaussian => {}
            Family::StudentT { df } | Family::NmvmStudentT { df, .. } => {
                if !(df > 0.0 && df.is_finite()) {
                    return Err(Error::BadParameter(format!(
                        "degrees of freedom must be positive, got {df}"
                    )));
                }
            }
            Family::SubGaussianStable { alpha } => {
                if !(alpha > 0.0 && alpha < 2.0) {
                    return Err(Error::BadParameter(format!(
                        "stability index must lie in (0, 2), got {alpha}"
                    )));
                }
            }
        }
        if let Family::NmvmStudentT { gamma, .. } = family {
            if !gamma.is_finite() {
                return Err(Error::BadParameter("skew must be finite".into()));
            }
        }

        let n = mu.len();
        if n == 0 {
            return Err(Error::BadParameter("empty location vector".into()));
        }
        if sigma.len() != n || sigma.iter().any(|row| row.len() != n) {
            return Err(Error::BadParameter(format!(
                "dispersion matrix must be {n} x {n}"
            )));
        }
        for j in 0..n {
            for k in 0..n {
                if !sigma[j][k].is_finite() {
                    return Err(Error::BadParameter("non-finite dispersion entry".into()));
                }
                if (sigma[j][k] - sigma[k][j]).abs() > 1e-12 {
                    return Err(Error::BadParameter("dispersion matrix must be symmetric".into()));
                }
            }
        }
        let flat: Vec<f64> = sigma.iter().flatten().copied().collect();
        let dm = nalgebra::DMatrix::from_row_slice(n, n, &flat);
        let chol = nalgebra::Cholesky::new(dm).ok_or(Error::NotPositiveDefinite)?;
        let l = chol.l();
        let chol_rows = (0..n)
            .map(|j| (0..n).map(|k| l[(j, k)]).collect())
            .collect();

        Ok(Self {
            family,
            mu,
            sigma,
            chol: chol_rows,
        })
    }

    /// The standard two-series design used throughout validation: zero
    /// locations, unit dispersion diagonal, off-diagonal rho.
    pub fn standard_pair(family: Family, rho: f64) -> Result<Self> {
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::BadParameter(format!(
                "pair dispersion needs |rho| < 1, got {rho}"
            )));
        }
        Self::new(
            family,
            vec![0.0, 0.0],
            vec![vec![1.0, rho], vec![rho, 1.0]],
        )
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[Vec<f64>] {
        &self.sigma
    }
}

/// Totally skewed positive stable variable with index `a` in (0, 1), via the
/// Chambers-Mallows-Stuck transform specialized to skewness 1.
fn positive_stable<R: Rng>(rng: &mut R, a: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let b = FRAC_PI_2;
    let s = (1.0 + (PI * a / 2.0).tan().powi(2)).powf(1.0 / (2.0 * a));
    let v = (rng.random::<f64>() - 0.5) * PI;
    let w: f64 = rng.sample(Exp1);
    s * (a * (v + b)).sin() / v.cos().powf(1.0 / a)
        * ((v - a * (v + b)).cos() / w).powf((1.0 - a) / a)
}

/// Draw a T x N panel from the model. Deterministic in the seed.
pub fn sample(model: &EllipticalModel, t: usize, seed: u64) -> Result<Panel> {
    if t == 0 {
        return Err(Error::InvalidInput("cannot sample zero observations".into()));
    }
    let n = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // distribution objects for the mixing variables, built once
    let chi2 = match model.family {
        Family::StudentT { df } | Family::NmvmStudentT { df, .. } => Some(
            Gamma::new(df / 2.0, 2.0)
                .map_err(|e| Error::BadParameter(format!("chi-square setup failed: {e}")))?,
        ),
        _ => None,
    };
    let stable_scale = match model.family {
        Family::SubGaussianStable { alpha } => {
            Some((std::f64::consts::PI * alpha / 4.0).cos().powf(2.0 / alpha))
        }
        _ => None,
    };

    let mut columns = vec![Vec::with_capacity(t); n];
    let mut g = vec![0.0; n];
    for _ in 0..t {
        for gj in g.iter_mut() {
            *gj = rng.sample(StandardNormal);
        }
        match model.family {
            Family::Gaussian => {
                for j in 0..n {
                    let lg: f64 = (0..=j).map(|k| model.chol[j][k] * g[k]).sum();
                    columns[j].push(model.mu[j] + lg);
                }
            }
            Family::StudentT { df } => {
                let w = chi2.as_ref().expect("configured").sample(&mut rng);
                let factor = (df / w).sqrt();
                for j in 0..n {
                    let lg: f64 = (0..=j).map(|k| model.chol[j][k] * g[k]).sum();
                    columns[j].push(model.mu[j] + factor * lg);
                }
            }
            Family::SubGaussianStable { alpha } => {
                let a = stable_scale.expect("configured") * positive_stable(&mut rng, alpha / 2.0);
                let factor = a.sqrt();
                for j in 0..n {
                    let lg: f64 = (0..=j).map(|k| model.chol[j][k] * g[k]).sum();
                    columns[j].push(model.mu[j] + factor * lg);
                }
            }
            Family::NmvmStudentT { df, gamma } => {
                let w = chi2.as_ref().expect("configured").sample(&mut rng);
                let r2 = df / w;
                let r = r2.sqrt();
                for j in 0..n {
                    let lg: f64 = (0..=j).map(|k| model.chol[j][k] * g[k]).sum();
                    columns[j].push(model.mu[j] + r2 * gamma + r * lg);
                }
            }
        }
    }
    Panel::unlabeled(columns)
}

/// Closed-form marginal quantile of series j. Only the Gaussian and
/// Student-t margins have usable closed forms here.
pub fn population_quantile(model: &EllipticalModel, j: usize, p: Level) -> Result<f64> {
    if j >= model.dim() {
        return Err(Error::InvalidInput(format!(
            "series index {j} out of range for {} series",
            model.dim()
        )));
    }
    let scale = model.sigma[j][j].sqrt();
    match model.family {
        Family::Gaussian => Ok(model.mu[j] + scale * quantile::inv_norm_cdf(p)),
        Family::StudentT { df } => {
            let dist = statrs::distribution::StudentsT::new(0.0, 1.0, df)
                .map_err(|e| Error::BadParameter(format!("student-t setup failed: {e}")))?;
            Ok(model.mu[j] + scale * dist.inverse_cdf(p.get()))
        }
        Family::SubGaussianStable { .. } | Family::NmvmStudentT { .. } => Err(Error::Unsupported(
            "population quantiles are only available for the Gaussian and Student-t families",
        )),
    }
}

/// Whether Monte Carlo replicates standardize with sample quantiles, the
/// model's population quantiles, or both at once on the same draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step1Mode {
    SampleQuantiles,
    PopulationQuantiles,
    Both,
}

/// One Monte Carlo experiment.
#[derive(Debug, Clone)]
pub struct McDesign {
    pub model: EllipticalModel,
    pub t: usize,
    pub h: usize,
    pub cfg: TailConfig,
    pub step1: Step1Mode,
    pub seed: u64,
}

/// Kernel density estimate on an evenly spaced grid, Gaussian kernel with
/// Silverman's bandwidth. Presentation output only.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

/// Replicate values of one statistic with its summary.
#[derive(Debug, Clone, PartialEq)]
pub struct McStat {
    pub values: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub kde: Kde,
}

/// All statistics of one standardization mode.
#[derive(Debug, Clone, PartialEq)]
pub struct McRun {
    pub tailcor: McStat,
    pub nonlinear: McStat,
    pub linear: McStat,
    pub replicates_failed: usize,
}

/// Results for the requested mode or modes.
#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub sample: Option<McRun>,
    pub population: Option<McRun>,
}

fn silverman_kde(values: &[f64], sd: f64) -> Kde {
    let n = values.len();
    let sorted = quantile::sorted_copy(values);
    let iqr = quantile::quantile_sorted(&sorted, 0.75) - quantile::quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let mut bw = 0.9 * spread * (n as f64).powf(-0.2);
    if !(bw > 0.0) {
        bw = 1e-9 + sorted[n - 1].abs() * 1e-9;
    }
    const POINTS: usize = 256;
    let lo = sorted[0] - 3.0 * bw;
    let hi = sorted[n - 1] + 3.0 * bw;
    let step = (hi - lo) / (POINTS - 1) as f64;
    let norm = 1.0 / (n as f64 * bw * (2.0 * std::f64::consts::PI).sqrt());
    let grid: Vec<f64> = (0..POINTS).map(|i| lo + i as f64 * step).collect();
    let density = grid
        .iter()
        .map(|&x| {
            norm * values
                .iter()
                .map(|&v| (-0.5 * ((x - v) / bw).powi(2)).exp())
                .sum::<f64>()
        })
        .collect();
    Kde { grid, density }
}

fn mc_stat(values: Vec<f64>) -> McStat {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    let sorted = quantile::sorted_copy(&values);
    let median = quantile::quantile_sorted(&sorted, 0.5);
    let kde = silverman_kde(&values, sd);
    McStat {
        values,
        mean,
        sd,
        median,
        kde,
    }
}

fn collect_run(replicates: Vec<Option<PairEstimate>>) -> Result<McRun> {
    let total = replicates.len();
    let kept: Vec<PairEstimate> = replicates.into_iter().flatten().collect();
    let failed = total - kept.len();
    if kept.is_empty() {
        return Err(Error::InvalidInput(
            "every Monte Carlo replicate failed".into(),
        ));
    }
    Ok(McRun {
        tailcor: mc_stat(kept.iter().map(|e| e.tailcor).collect()),
        nonlinear: mc_stat(kept.iter().map(|e| e.nonlinear).collect()),
        linear: mc_stat(kept.iter().map(|e| e.linear).collect()),
        replicates_failed: failed,
    })
}

/// Run the Monte Carlo experiment: H independent panels of length T, the
/// pairwise estimator on the first two series of each, and summaries of the
/// replicate distribution.
pub fn run_mc(design: &McDesign) -> Result<McReport> {
    design.cfg.validate()?;
    if design.model.dim() < 2 {
        return Err(Error::BadParameter(
            "the Monte Carlo design needs at least two series".into(),
        ));
    }
    if design.h == 0 {
        return Err(Error::BadParameter("need at least one replication".into()));
    }
    if design.t < design.cfg.min_length() {
        return Err(Error::TooShort {
            needed: design.cfg.min_length(),
            got: design.t,
        });
    }

    let want_sample = matches!(design.step1, Step1Mode::SampleQuantiles | Step1Mode::Both);
    let want_population = matches!(
        design.step1,
        Step1Mode::PopulationQuantiles | Step1Mode::Both
    );

    // population centers and scales are properties of the model, not of any
    // replicate, so compute them once up front
    let pop = if want_population {
        let tau = design.cfg.levels.tau().get();
        let q = |j: usize, p: f64| population_quantile(&design.model, j, Level::new(p)?);
        let centers = (q(0, 0.5)?, q(1, 0.5)?);
        let scales = (
            q(0, tau)? - q(0, 1.0 - tau)?,
            q(1, tau)? - q(1, 1.0 - tau)?,
        );
        Some((centers, scales))
    } else {
        None
    };

    let replicates: Vec<Result<(Option<PairEstimate>, Option<PairEstimate>)>> = (0..design.h
        as u64)
        .into_par_iter()
        .map(|r| {
            let panel = sample(&design.model, design.t, seeding::derive_seed(design.seed, r))?;
            let x = panel.column(0);
            let y = panel.column(1);
            let s = if want_sample {
                pair::tailcor(x, y, &design.cfg).ok()
            } else {
                None
            };
            let p = if let Some((centers, scales)) = pop {
                pair::tailcor_standardized_with(x, y, centers, scales, &design.cfg).ok()
            } else {
                None
            };
            Ok((s, p))
        })
        .collect();

    let mut sample_reps = Vec::with_capacity(design.h);
    let mut pop_reps = Vec::with_capacity(design.h);
    for rep in replicates {
        let (s, p) = rep?;
        sample_reps.push(s);
        pop_reps.push(p);
    }

    Ok(McReport {
        sample: if want_sample {
            Some(collect_run(sample_reps)?)
        } else {
            None
        },
        population: if want_population {
            Some(collect_run(pop_reps)?)
        } else {
            None
        },
    })
}
