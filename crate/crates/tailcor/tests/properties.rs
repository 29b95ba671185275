//! Property-based checks of the estimator's structural guarantees: order
//! statistics behave like order statistics, the fast Kendall implementation
//! agrees with the obvious quadratic one, and the pairwise estimate respects
//! the symmetries the math promises.

use proptest::prelude::*;

use tailcor::matrix::{unvech, vech};
use tailcor::pair::{self, TailConfig};
use tailcor::quantile::{sample_quantile, Level};
use tailcor::rank;

/// Quadratic tau-b oracle. Returns None when a margin is fully tied and the
/// coefficient is undefined.
fn kendall_brute(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let n0 = (n * (n - 1) / 2) as i64;
    let mut net = 0i64;
    let mut tied_x = 0i64;
    let mut tied_y = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 {
                tied_x += 1;
            }
            if dy == 0.0 {
                tied_y += 1;
            }
            if dx != 0.0 && dy != 0.0 {
                net += if (dx > 0.0) == (dy > 0.0) { 1 } else { -1 };
            }
        }
    }
    let den = ((n0 - tied_x) as f64 * (n0 - tied_y) as f64).sqrt();
    if den > 0.0 {
        Some(net as f64 / den)
    } else {
        None
    }
}

fn series(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1000.0f64..1000.0, len)
}

/// Same length twice, so the pair functions accept them.
fn aligned_pair(len: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    len.prop_flat_map(|n| {
        (
            prop::collection::vec(-1000.0f64..1000.0, n),
            prop::collection::vec(-1000.0f64..1000.0, n),
        )
    })
}

fn quantize(v: &[f64], grid: f64) -> Vec<f64> {
    v.iter().map(|x| (x / grid).round() * grid).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn quantiles_are_monotone_in_the_level(x in series(2..200), a in 0.01f64..0.99, b in 0.01f64..0.99) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let qlo = sample_quantile(&x, Level::new(lo).unwrap()).unwrap();
        let qhi = sample_quantile(&x, Level::new(hi).unwrap()).unwrap();
        prop_assert!(qlo <= qhi);
        let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(min <= qlo && qhi <= max);
    }

    #[test]
    fn quantiles_are_location_scale_equivariant(x in series(2..200), scale in 0.001f64..100.0, shift in -500.0f64..500.0, p in 0.01f64..0.99) {
        let level = Level::new(p).unwrap();
        let q = sample_quantile(&x, level).unwrap();
        let moved: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
        let qm = sample_quantile(&moved, level).unwrap();
        let expect = scale * q + shift;
        prop_assert!((qm - expect).abs() <= 1e-9 * (1.0 + expect.abs()));
    }

    #[test]
    fn fast_kendall_matches_the_quadratic_oracle(pair in aligned_pair(2..150)) {
        let (x, y) = pair;
        match kendall_brute(&x, &y) {
            Some(expect) => {
                let got = rank::kendall_tau(&x, &y).unwrap();
                prop_assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
            }
            None => prop_assert!(rank::kendall_tau(&x, &y).is_err()),
        }
    }

    #[test]
    fn fast_kendall_matches_the_oracle_under_heavy_ties(pair in aligned_pair(2..150)) {
        let (x, y) = pair;
        let x = quantize(&x, 250.0);
        let y = quantize(&y, 400.0);
        match kendall_brute(&x, &y) {
            Some(expect) => {
                let got = rank::kendall_tau(&x, &y).unwrap();
                prop_assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
            }
            None => prop_assert!(rank::kendall_tau(&x, &y).is_err()),
        }
    }

    #[test]
    fn kendall_ignores_monotone_transforms(pair in aligned_pair(10..150)) {
        let (x, y) = pair;
        if let Ok(base) = rank::kendall_tau(&x, &y) {
            // strictly increasing and tie-preserving maps leave ranks alone
            let tx: Vec<f64> = x.iter().map(|v| v.atan()).collect();
            let ty: Vec<f64> = y.iter().map(|v| 3.0 * v + 5.0).collect();
            prop_assert_eq!(rank::kendall_tau(&tx, &ty).unwrap(), base);
        }
    }

    #[test]
    fn vech_runs_a_clean_round_trip(v in prop::collection::vec(-100.0f64..100.0, 1..36)) {
        let len = v.len();
        // keep only triangular lengths
        let n = (((8 * len + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
        prop_assume!(n >= 1 && n * (n + 1) / 2 == len);
        let m = unvech(&v).unwrap();
        prop_assert_eq!(vech(&m), v);
        for j in 0..n {
            for k in 0..n {
                prop_assert_eq!(m[j][k], m[k][j]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pair_order_does_not_matter(pair in aligned_pair(40..200)) {
        let (x, y) = pair;
        let cfg = TailConfig::default();
        if let Ok(a) = pair::tailcor(&x, &y, &cfg) {
            let b = pair::tailcor(&y, &x, &cfg).unwrap();
            prop_assert!((a.tailcor - b.tailcor).abs() <= 1e-12 * (1.0 + a.tailcor.abs()));
            prop_assert_eq!(a.rho, b.rho);
            prop_assert_eq!(a.linear, b.linear);
        }
    }

    #[test]
    fn estimates_sit_in_their_documented_ranges(pair in aligned_pair(40..200)) {
        let (x, y) = pair;
        if let Ok(est) = pair::tailcor(&x, &y, &TailConfig::default()) {
            prop_assert!(est.rho >= -1.0 && est.rho <= 1.0);
            prop_assert!(est.linear >= 1.0 && est.linear <= std::f64::consts::SQRT_2 + 1e-15);
            prop_assert!(est.tailcor > 0.0);
            prop_assert!(est.nonlinear > 0.0);
            if let Some(alt) = est.alt {
                prop_assert!((-1.0..=1.0).contains(&alt), "alt {alt}");
            }
            // the two sides always average back to the symmetric number
            let mean = 0.5 * (est.downside + est.upside);
            prop_assert!((mean - est.tailcor).abs() <= 1e-12 * (1.0 + est.tailcor));
        }
    }

    #[test]
    fn standardization_is_location_scale_invariant(pair in aligned_pair(40..150), scale in 0.01f64..50.0, shift in -100.0f64..100.0) {
        let (x, y) = pair;
        let cfg = TailConfig::default();
        if let Ok(base) = pair::tailcor(&x, &y, &cfg) {
            let moved: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            let est = pair::tailcor(&moved, &y, &cfg).unwrap();
            prop_assert!((est.tailcor - base.tailcor).abs() <= 1e-9 * (1.0 + base.tailcor));
            prop_assert!((est.rho - base.rho).abs() <= 1e-12);
        }
    }
}
