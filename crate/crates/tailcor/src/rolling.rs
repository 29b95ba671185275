//! Rolling-window application of the matrix estimator.
//!
//! Windows are defined in observation counts. Full windows start at
//! 0, step, 2*step, ... for as long as a complete window fits; one trailing
//! partial window is emitted when at least `min_obs` observations remain
//! after the last full window.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{self, MatrixEstimate};
use crate::pair::TailConfig;
use crate::panel::Panel;

/// Window length, stride, and the minimum length a trailing partial window
/// must have to be emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    window: usize,
    step: usize,
    min_obs: usize,
}

impl WindowSpec {
    pub fn new(window: usize, step: usize, min_obs: usize) -> Result<Self> {
        if window == 0 || step == 0 || min_obs == 0 {
            return Err(Error::BadParameter(
                "window, step, and min_obs must all be positive".into(),
            ));
        }
        if min_obs > window {
            return Err(Error::BadParameter(format!(
                "min_obs {min_obs} exceeds the window length {window}"
            )));
        }
        Ok(Self {
            window,
            step,
            min_obs,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn min_obs(&self) -> usize {
        self.min_obs
    }
}

/// Whether a cross-sectional average counts the series' own diagonal entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diagonal {
    #[default]
    Exclude,
    Include,
}

/// One matrix estimate per emitted window, keyed by window start.
#[derive(Debug, Clone)]
pub struct RollingResult {
    pub window_starts: Vec<usize>,
    pub window_lens: Vec<usize>,
    pub estimates: Vec<MatrixEstimate>,
}

impl RollingResult {
    /// Per-window, per-series averages of the tail correlation of that
    /// series against the panel.
    pub fn cross_sectional_averages(&self, diagonal: Diagonal) -> Vec<Vec<f64>> {
        self.estimates
            .iter()
            .map(|m| {
                (0..m.width())
                    .map(|j| cross_sectional_average(m, j, diagonal).expect("estimate width >= 2"))
                    .collect()
            })
            .collect()
    }
}

/// The (start, length) pairs a window plan induces on a series of `len`
/// observations.
pub fn window_partition(len: usize, spec: &WindowSpec) -> Vec<(usize, usize)> {
    let mut windows = Vec::new();
    let mut start = 0;
    while start + spec.window <= len {
        windows.push((start, spec.window));
        start += spec.step;
    }
    if start < len {
        let remaining = len - start;
        if remaining >= spec.min_obs {
            windows.push((start, remaining));
        }
    }
    windows
}

/// Run the matrix estimator on every window of the panel.
pub fn roll(panel: &Panel, wspec: &WindowSpec, cfg: &TailConfig) -> Result<RollingResult> {
    cfg.validate()?;
    let len = panel.len();
    if wspec.window > len {
        return Err(Error::InvalidInput(format!(
            "window of {} observations exceeds the panel length {len}",
            wspec.window
        )));
    }
    let windows = window_partition(len, wspec);

    let estimates: Vec<MatrixEstimate> = windows
        .par_iter()
        .map(|&(start, wlen)| {
            let view = panel.window(start, wlen)?;
            matrix::tailcor_matrix(&view, cfg)
        })
        .collect::<Result<_>>()?;

    Ok(RollingResult {
        window_starts: windows.iter().map(|w| w.0).collect(),
        window_lens: windows.iter().map(|w| w.1).collect(),
        estimates,
    })
}

/// Mean tail correlation of series j against the rest of the panel; the
/// diagonal self-entry joins the mean only when asked for.
pub fn cross_sectional_average(m: &MatrixEstimate, j: usize, diagonal: Diagonal) -> Result<f64> {
    let n = m.width();
    if j >= n {
        return Err(Error::InvalidInput(format!(
            "series index {j} out of range for {n} series"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput(
            "a cross-sectional average needs at least 2 series".into(),
        ));
    }
    let row = &m.tailcor[j];
    match diagonal {
        Diagonal::Exclude => {
            let sum: f64 = row
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, v)| v)
                .sum();
            Ok(sum / (n - 1) as f64)
        }
        Diagonal::Include => Ok(row.iter().sum::<f64>() / n as f64),
    }
}
