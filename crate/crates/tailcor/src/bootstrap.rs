//! Moving-block bootstrap standard errors.
//!
//! Returns are serially dependent, so replicates resample contiguous time
//! blocks rather than single observations, and always the same time indices
//! for every series so cross-sectional dependence survives. Each replicate
//! reruns the full estimation pipeline, standardization included.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{self, MatrixEstimate};
use crate::pair::{self, PairEstimate, TailConfig};
use crate::panel::Panel;
use crate::quantile;
use crate::seeding;

/// Bootstrap controls. The defaults elsewhere are block length 50 and 500
/// replications; the seed is always explicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BootstrapSpec {
    pub block_length: usize,
    pub replications: usize,
    pub seed: u64,
}

impl BootstrapSpec {
    pub fn new(block_length: usize, replications: usize, seed: u64) -> Result<Self> {
        if block_length == 0 {
            return Err(Error::BadParameter("block length must be positive".into()));
        }
        if replications < 2 {
            return Err(Error::BadParameter(format!(
                "need at least 2 replications, got {replications}"
            )));
        }
        Ok(Self {
            block_length,
            replications,
            seed,
        })
    }
}

/// Point estimate with its bootstrap spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapEstimate {
    pub point: f64,
    /// Sample standard deviation of the replicate values.
    pub std_error: f64,
    /// 2.5% quantile of the bootstrap distribution.
    pub q025: f64,
    /// 97.5% quantile.
    pub q975: f64,
    pub replicates_kept: usize,
}

fn summarize(point: f64, values: &[f64]) -> BootstrapEstimate {
    let kept = values.len();
    let mean = values.iter().sum::<f64>() / kept as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (kept as f64 - 1.0);
    let sorted = quantile::sorted_copy(values);
    BootstrapEstimate {
        point,
        std_error: var.sqrt(),
        q025: quantile::quantile_sorted(&sorted, 0.025),
        q975: quantile::quantile_sorted(&sorted, 0.975),
        replicates_kept: kept,
    }
}

/// Time indices for one replicate: ceil(n / L) overlapping blocks with
/// uniform start offsets, concatenated and truncated to length n. The result
/// depends only on (n, spec.seed, spec.block_length, r).
pub fn block_indices(n: usize, spec: &BootstrapSpec, r: u64) -> Result<Vec<usize>> {
    let l = spec.block_length;
    if n < l {
        return Err(Error::InvalidInput(format!(
            "series length {n} is below the block length {l}"
        )));
    }
    let mut rng = seeding::stream_rng(spec.seed, r);
    let mut idx = Vec::with_capacity(n + l);
    while idx.len() < n {
        let start = rng.random_range(0..=n - l);
        idx.extend(start..start + l);
    }
    idx.truncate(n);
    Ok(idx)
}

fn gather(data: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| data[i]).collect()
}

/// Errors that just mean "this replicate produced unusable data".
fn droppable(e: &Error) -> bool {
    match e {
        Error::DegenerateScale(_) | Error::DegenerateSide(_) | Error::DegenerateRanks => true,
        Error::Pair { source, .. } => droppable(source),
        _ => false,
    }
}

fn check_failures(failed: usize, total: usize) -> Result<()> {
    if failed * 5 > total {
        Err(Error::UnstableBootstrap { failed, total })
    } else {
        Ok(())
    }
}

/// Bootstrap spread for every field of the pairwise estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBootstrap {
    pub tailcor: BootstrapEstimate,
    pub rho: BootstrapEstimate,
    pub linear: BootstrapEstimate,
    pub nonlinear: BootstrapEstimate,
    pub downside: BootstrapEstimate,
    pub upside: BootstrapEstimate,
    /// Present when the point estimate's bounded transform is defined;
    /// summarizes the replicates where it was defined too.
    pub alt: Option<BootstrapEstimate>,
    pub replicates_failed: usize,
}

/// Moving-block bootstrap of the pairwise estimator.
pub fn bootstrap_pair(
    x: &[f64],
    y: &[f64],
    cfg: &TailConfig,
    spec: &BootstrapSpec,
) -> Result<PairBootstrap> {
    let point = pair::tailcor(x, y, cfg)?;
    let n = x.len();
    if n < spec.block_length {
        return Err(Error::InvalidInput(format!(
            "series length {n} is below the block length {}",
            spec.block_length
        )));
    }

    let replicates: Vec<Result<PairEstimate>> = (0..spec.replications as u64)
        .into_par_iter()
        .map(|r| {
            let idx = block_indices(n, spec, r)?;
            pair::tailcor(&gather(x, &idx), &gather(y, &idx), cfg)
        })
        .collect();

    let mut kept: Vec<PairEstimate> = Vec::with_capacity(spec.replications);
    let mut failed = 0usize;
    for rep in replicates {
        match rep {
            Ok(est) => kept.push(est),
            Err(e) if droppable(&e) => failed += 1,
            Err(e) => return Err(e),
        }
    }
    check_failures(failed, spec.replications)?;

    let field = |f: fn(&PairEstimate) -> f64| -> Vec<f64> { kept.iter().map(f).collect() };
    let alts: Vec<f64> = kept.iter().filter_map(|e| e.alt).collect();
    let alt = match point.alt {
        Some(a) if alts.len() >= 2 => Some(summarize(a, &alts)),
        _ => None,
    };

    Ok(PairBootstrap {
        tailcor: summarize(point.tailcor, &field(|e| e.tailcor)),
        rho: summarize(point.rho, &field(|e| e.rho)),
        linear: summarize(point.linear, &field(|e| e.linear)),
        nonlinear: summarize(point.nonlinear, &field(|e| e.nonlinear)),
        downside: summarize(point.downside, &field(|e| e.downside)),
        upside: summarize(point.upside, &field(|e| e.upside)),
        alt,
        replicates_failed: failed,
    })
}

/// Entrywise bootstrap standard errors for a matrix estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixBootstrap {
    pub tailcor_se: Vec<Vec<f64>>,
    pub linear_se: Vec<Vec<f64>>,
    pub pooled_nonlinear_se: f64,
    pub replicates_kept: usize,
    pub replicates_failed: usize,
}

/// Moving-block bootstrap of the matrix estimator, resampling the same time
/// indices across all series.
pub fn bootstrap_matrix(
    panel: &Panel,
    cfg: &TailConfig,
    spec: &BootstrapSpec,
) -> Result<MatrixBootstrap> {
    let n = panel.len();
    let width = panel.width();
    if n < spec.block_length {
        return Err(Error::InvalidInput(format!(
            "panel length {n} is below the block length {}",
            spec.block_length
        )));
    }

    let replicates: Vec<Result<MatrixEstimate>> = (0..spec.replications as u64)
        .into_par_iter()
        .map(|r| {
            let idx = block_indices(n, spec, r)?;
            let columns = (0..width).map(|j| gather(panel.column(j), &idx)).collect();
            let resampled = Panel::new(panel.labels().to_vec(), columns)?;
            matrix::tailcor_matrix(&resampled, cfg)
        })
        .collect();

    let mut kept: Vec<MatrixEstimate> = Vec::with_capacity(spec.replications);
    let mut failed = 0usize;
    for rep in replicates {
        match rep {
            Ok(est) => kept.push(est),
            Err(e) if droppable(&e) => failed += 1,
            Err(e) => return Err(e),
        }
    }
    check_failures(failed, spec.replications)?;
    if kept.len() < 2 {
        return Err(Error::UnstableBootstrap {
            failed,
            total: spec.replications,
        });
    }

    let se_of = |pick: &dyn Fn(&MatrixEstimate) -> f64| -> f64 {
        let vals: Vec<f64> = kept.iter().map(pick).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (vals.len() as f64 - 1.0))
            .sqrt()
    };

    let mut tailcor_se = vec![vec![0.0; width]; width];
    let mut linear_se = vec![vec![0.0; width]; width];
    for j in 0..width {
        for k in 0..width {
            tailcor_se[j][k] = se_of(&|m: &MatrixEstimate| m.tailcor[j][k]);
            linear_se[j][k] = se_of(&|m: &MatrixEstimate| m.linear[j][k]);
        }
    }

    Ok(MatrixBootstrap {
        tailcor_se,
        linear_se,
        pooled_nonlinear_se: se_of(&|m: &MatrixEstimate| m.pooled_nonlinear),
        replicates_kept: kept.len(),
        replicates_failed: failed,
    })
}
