//! Rank-based correlation and semi-moments.
//!
//! The linear part of the estimator never touches Pearson correlation. It
//! goes through Kendall's tau, counted in O(n log n) with a merge sort, and
//! the sine transform, which recovers the shape correlation of an elliptical
//! distribution from tau alone. Semi-moments restrict variances and
//! covariances to one side of a center and feed the downside/upside variants.

use crate::error::{Error, Result};
use crate::quantile;

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "paired series differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput(
            "paired statistics need at least 2 observations".into(),
        ));
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

/// Merge sort that counts how many elements jump over how many others,
/// which is exactly the number of discordant-order exchanges.
fn merge_count(v: &mut [f64], scratch: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], scratch) + merge_count(&mut v[mid..], scratch);
    scratch.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[i] <= v[j] {
            scratch.push(v[i]);
            i += 1;
        } else {
            // v[j] passes every element still waiting in the left half
            swaps += (mid - i) as u64;
            scratch.push(v[j]);
            j += 1;
        }
    }
    scratch.extend_from_slice(&v[i..mid]);
    scratch.extend_from_slice(&v[j..n]);
    v.copy_from_slice(scratch);
    swaps
}

/// Pairs tied within runs of equal values in a sorted slice: sum of t(t-1)/2.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Kendall's tau with tie correction (the tau-b form).
///
/// Without ties this is (concordant - discordant) / (n(n-1)/2); with ties the
/// denominator shrinks by the tied pairs on each margin. A fully tied margin
/// leaves tau undefined and errors instead of returning 0.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len();
    let n0 = (n as u64) * (n as u64 - 1) / 2;

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_unstable_by(|&a, &b| {
        x[a].partial_cmp(&x[b])
            .expect("finite")
            .then(y[a].partial_cmp(&y[b]).expect("finite"))
    });

    // Tied pairs on the x margin, and pairs tied on both margins at once;
    // within a run of equal x the y values are already sorted.
    let mut xtie = 0u64;
    let mut joint = 0u64;
    let mut start = 0;
    for i in 1..=n {
        if i == n || x[idx[i]] != x[idx[start]] {
            let run = &idx[start..i];
            let t = run.len() as u64;
            xtie += t * (t - 1) / 2;
            let ys: Vec<f64> = run.iter().map(|&k| y[k]).collect();
            joint += tied_pairs(&ys);
            start = i;
        }
    }

    let mut ys: Vec<f64> = idx.iter().map(|&k| y[k]).collect();
    let mut scratch = Vec::with_capacity(n);
    let swaps = merge_count(&mut ys, &mut scratch);
    let ytie = tied_pairs(&ys);

    if xtie == n0 || ytie == n0 {
        return Err(Error::DegenerateRanks);
    }

    let num = n0 as i128 - xtie as i128 - ytie as i128 + joint as i128 - 2 * swaps as i128;
    let den = ((n0 - xtie) as f64 * (n0 - ytie) as f64).sqrt();
    Ok((num as f64 / den).clamp(-1.0, 1.0))
}

/// Shape correlation from Kendall's tau: sin(pi/2 * kappa).
pub fn rho_from_kendall(kappa: f64) -> Result<f64> {
    if !kappa.is_finite() || kappa.abs() > 1.0 {
        return Err(Error::InvalidInput(format!(
            "kendall tau must lie in [-1, 1], got {kappa}"
        )));
    }
    Ok((std::f64::consts::FRAC_PI_2 * kappa).sin())
}

/// Which side of the center a semi-moment looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemiSide {
    Positive,
    Negative,
}

/// Center used by semi-moments. The median keeps the whole pipeline on
/// robust location measures; the mean matches the textbook definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SemiCenter {
    #[default]
    Median,
    Mean,
}

fn center_value(x: &[f64], center: SemiCenter) -> f64 {
    match center {
        SemiCenter::Median => quantile::quantile_sorted(&quantile::sorted_copy(x), 0.5),
        SemiCenter::Mean => x.iter().sum::<f64>() / x.len() as f64,
    }
}

/// Deviations clipped to one side: (x - c) where x is strictly on the
/// requested side of c, zero elsewhere.
fn clip_side(x: &[f64], c: f64, side: SemiSide) -> (Vec<f64>, usize) {
    let mut kept = 0;
    let v = x
        .iter()
        .map(|&v| {
            let keep = match side {
                SemiSide::Positive => v > c,
                SemiSide::Negative => v < c,
            };
            if keep {
                kept += 1;
                v - c
            } else {
                0.0
            }
        })
        .collect();
    (v, kept)
}

fn side_name(side: SemiSide) -> &'static str {
    match side {
        SemiSide::Positive => "above",
        SemiSide::Negative => "below",
    }
}

/// One-sided second moment around the center, E[(X-c)^2 on the side].
pub fn semi_variance(x: &[f64], side: SemiSide, center: SemiCenter) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::InvalidInput(
            "semi-variance needs at least 2 observations".into(),
        ));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite value at position {i}"
        )));
    }
    let (u, kept) = clip_side(x, center_value(x, center), side);
    if kept == 0 {
        return Err(Error::DegenerateSide(side_name(side)));
    }
    Ok(u.iter().map(|v| v * v).sum::<f64>() / x.len() as f64)
}

/// One-sided cross moment, E[(X-cx)(Y-cy) with each factor clipped to the side].
pub fn semi_covariance(x: &[f64], y: &[f64], side: SemiSide, center: SemiCenter) -> Result<f64> {
    check_pair(x, y)?;
    let (u, kx) = clip_side(x, center_value(x, center), side);
    let (v, ky) = clip_side(y, center_value(y, center), side);
    if kx == 0 || ky == 0 {
        return Err(Error::DegenerateSide(side_name(side)));
    }
    Ok(u.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / x.len() as f64)
}

/// Semi-covariance normalized by the same-side semi standard deviations.
pub fn semi_correlation(x: &[f64], y: &[f64], side: SemiSide, center: SemiCenter) -> Result<f64> {
    let cov = semi_covariance(x, y, side, center)?;
    let vx = semi_variance(x, side, center)?;
    let vy = semi_variance(y, side, center)?;
    Ok((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}
