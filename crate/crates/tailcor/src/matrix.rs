//! Tail correlation matrices over a panel of series.
//!
//! Every pair, diagonal self-pairs included, runs through the exact pairwise
//! pipeline. The diagonal therefore reads as a per-series tail-risk number
//! (sqrt(2) for Gaussian tails, larger when they are heavy), while the
//! off-diagonal entries measure pairwise dependence. The nonlinear component
//! is reported per pair and pooled across the N(N+1)/2 distinct pairs.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pair::{self, TailConfig};
use crate::panel::Panel;
use crate::quantile;

/// The matrix estimate and its decomposition pieces.
#[derive(Debug, Clone)]
pub struct MatrixEstimate {
    pub labels: Vec<String>,
    /// N x N symmetric, row-major.
    pub tailcor: Vec<Vec<f64>>,
    /// N x N matrix of sqrt(1 + |rho|); diagonal exactly sqrt(2).
    pub linear: Vec<Vec<f64>>,
    /// Mean of the per-pair nonlinear components.
    pub pooled_nonlinear: f64,
    /// Nonlinear components in half-vectorized order (lower triangle,
    /// column by column, diagonal included).
    pub per_pair_nonlinear: Vec<f64>,
    pub config: TailConfig,
    /// Smallest eigenvalue of the shape matrix psi = linear / sqrt(2);
    /// non-positive values flag a finite-sample violation of positive
    /// definiteness.
    pub min_psi_eigenvalue: f64,
}

impl MatrixEstimate {
    pub fn width(&self) -> usize {
        self.labels.len()
    }

    /// The shape matrix psi with entries sqrt((1 + |rho|)/2), unit diagonal.
    pub fn psi(&self) -> Vec<Vec<f64>> {
        self.linear
            .iter()
            .map(|row| row.iter().map(|v| v / std::f64::consts::SQRT_2).collect())
            .collect()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.min_psi_eigenvalue > 0.0
    }

    /// Matrix rebuilt from the pooled nonlinear component instead of the
    /// per-pair ones: sqrt(2) * s_g * pooled * psi. Useful when a single
    /// tail-thickness number for the whole panel is wanted.
    pub fn pooled_reconstruction(&self) -> Vec<Vec<f64>> {
        let sg = quantile::s_g(self.config.levels);
        let scale = std::f64::consts::SQRT_2 * sg * self.pooled_nonlinear;
        self.psi()
            .iter()
            .map(|row| row.iter().map(|v| scale * v).collect())
            .collect()
    }
}

fn smallest_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let flat: Vec<f64> = m.iter().flatten().copied().collect();
    let dm = DMatrix::from_row_slice(n, n, &flat);
    dm.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Estimate the full matrix for a panel.
pub fn tailcor_matrix(panel: &Panel, cfg: &TailConfig) -> Result<MatrixEstimate> {
    cfg.validate()?;
    let n = panel.width();
    if n < 2 {
        return Err(Error::PanelShape(
            "a tail correlation matrix needs at least 2 series".into(),
        ));
    }

    let mut tailcor = vec![vec![0.0; n]; n];
    let mut linear = vec![vec![0.0; n]; n];
    let mut per_pair_nonlinear = Vec::with_capacity(n * (n + 1) / 2);

    // half-vectorized order: column k, rows j >= k
    for k in 0..n {
        for j in k..n {
            let est = pair::tailcor(panel.column(j), panel.column(k), cfg).map_err(|e| {
                Error::Pair {
                    row: panel.labels()[j].clone(),
                    col: panel.labels()[k].clone(),
                    source: Box::new(e),
                }
            })?;
            tailcor[j][k] = est.tailcor;
            tailcor[k][j] = est.tailcor;
            linear[j][k] = est.linear;
            linear[k][j] = est.linear;
            per_pair_nonlinear.push(est.nonlinear);
        }
    }

    let pooled = pooled_nonlinear(&per_pair_nonlinear)?;
    let psi: Vec<Vec<f64>> = linear
        .iter()
        .map(|row| row.iter().map(|v| v / std::f64::consts::SQRT_2).collect())
        .collect();

    Ok(MatrixEstimate {
        labels: panel.labels().to_vec(),
        tailcor,
        linear,
        pooled_nonlinear: pooled,
        per_pair_nonlinear,
        config: *cfg,
        min_psi_eigenvalue: smallest_eigenvalue(&psi),
    })
}

/// Arithmetic mean of per-pair nonlinear components.
pub fn pooled_nonlinear(per_pair: &[f64]) -> Result<f64> {
    if per_pair.is_empty() {
        return Err(Error::InvalidInput(
            "pooling needs at least one pairwise value".into(),
        ));
    }
    Ok(per_pair.iter().sum::<f64>() / per_pair.len() as f64)
}

/// Half-vectorize a symmetric matrix: lower triangle including the diagonal,
/// stacked column by column.
pub fn vech(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut v = Vec::with_capacity(n * (n + 1) / 2);
    for k in 0..n {
        for j in k..n {
            v.push(m[j][k]);
        }
    }
    v
}

/// Rebuild the symmetric matrix from its half-vectorization.
pub fn unvech(v: &[f64]) -> Result<Vec<Vec<f64>>> {
    // recover n from len = n(n+1)/2
    let len = v.len();
    let n = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    if n * (n + 1) / 2 != len {
        return Err(Error::InvalidInput(format!(
            "{len} values do not fill a triangular matrix"
        )));
    }
    let mut m = vec![vec![0.0; n]; n];
    let mut i = 0;
    for k in 0..n {
        for j in k..n {
            m[j][k] = v[i];
            m[k][j] = v[i];
            i += 1;
        }
    }
    Ok(m)
}
