//! Release gate: eight checks that must all hold before the toolkit ships.
//! Each test prints one verdict line (run with --nocapture to see them) and
//! panics with the measured numbers when something drifted.

use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use tailcor::bootstrap::{bootstrap_pair, BootstrapSpec};
use tailcor::pair::{tailcor, AnglePolicy, TailConfig};
use tailcor::quantile::{iqr, sample_quantile, semi_iqr_lower, semi_iqr_upper, Level, LevelPair};
use tailcor::rank::{kendall_tau, semi_covariance, semi_variance, SemiCenter, SemiSide};
use tailcor::seeding::derive_seed;
use tailcor::simulation::{
    run_mc, sample, EllipticalModel, Family, McDesign, McReport, McStat, Step1Mode,
};
use tempfile::TempDir;

type Checks = Vec<(bool, String)>;

fn verdict(number: usize, name: &str, checks: Checks) {
    let pass = checks.iter().all(|c| c.0);
    println!(
        "ACCEPTANCE {number} {name}: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    let failures: Vec<&String> = checks.iter().filter(|c| !c.0).map(|c| &c.1).collect();
    assert!(pass, "criterion {number} ({name}): {failures:?}");
}

fn band(v: f64, lo: f64, hi: f64, what: &str) -> (bool, String) {
    (
        (lo..=hi).contains(&v),
        format!("{what} = {v:.6}, wanted [{lo}, {hi}]"),
    )
}

fn cfg(xi: f64) -> TailConfig {
    TailConfig::new(LevelPair::new(0.75, xi).unwrap(), AnglePolicy::AutoSign).unwrap()
}

fn mc(family: Family, xi: f64, step1: Step1Mode, seed: u64) -> McReport {
    let model = EllipticalModel::standard_pair(family, 0.5).unwrap();
    run_mc(&McDesign {
        model,
        t: 10_000,
        h: 1_000,
        cfg: cfg(xi),
        step1,
        seed,
    })
    .unwrap()
}

static G90: OnceLock<McReport> = OnceLock::new();
static G95: OnceLock<McReport> = OnceLock::new();
static G99: OnceLock<McReport> = OnceLock::new();
static T90: OnceLock<McReport> = OnceLock::new();
static T95: OnceLock<McReport> = OnceLock::new();
static T99: OnceLock<McReport> = OnceLock::new();
static ES95: OnceLock<McReport> = OnceLock::new();

fn g90() -> &'static McReport {
    G90.get_or_init(|| mc(Family::Gaussian, 0.90, Step1Mode::SampleQuantiles, 101))
}
fn g95() -> &'static McReport {
    G95.get_or_init(|| mc(Family::Gaussian, 0.95, Step1Mode::Both, 102))
}
fn g99() -> &'static McReport {
    G99.get_or_init(|| mc(Family::Gaussian, 0.99, Step1Mode::SampleQuantiles, 103))
}
fn t90() -> &'static McReport {
    T90.get_or_init(|| mc(Family::StudentT { df: 2.5 }, 0.90, Step1Mode::SampleQuantiles, 201))
}
fn t95() -> &'static McReport {
    T95.get_or_init(|| mc(Family::StudentT { df: 2.5 }, 0.95, Step1Mode::Both, 202))
}
fn t99() -> &'static McReport {
    T99.get_or_init(|| mc(Family::StudentT { df: 2.5 }, 0.99, Step1Mode::SampleQuantiles, 203))
}
fn es95() -> &'static McReport {
    ES95.get_or_init(|| {
        mc(
            Family::SubGaussianStable { alpha: 1.5 },
            0.95,
            Step1Mode::SampleQuantiles,
            301,
        )
    })
}

const NA: f64 = f64::NAN;

/// Reference values for the Gaussian normalization constant on the usual
/// grid, three decimals, with `--` where tau < xi fails.
#[rustfmt::skip]
const SG_EXPECTED: [[f64; 14]; 13] = [
    [0.483, 0.424, 0.375, 0.335, 0.301, 0.271, 0.244, 0.220, 0.198, 0.176, 0.154, 0.129, 0.109, 0.098],
    [0.607, 0.533, 0.472, 0.422, 0.379, 0.341, 0.307, 0.277, 0.249, 0.221, 0.194, 0.163, 0.137, 0.124],
    [0.735, 0.644, 0.571, 0.510, 0.458, 0.412, 0.372, 0.335, 0.301, 0.268, 0.234, 0.196, 0.166, 0.150],
    [0.865, 0.759, 0.673, 0.601, 0.539, 0.486, 0.438, 0.394, 0.354, 0.315, 0.276, 0.231, 0.195, 0.176],
    [NA,    0.877, 0.778, 0.694, 0.623, 0.561, 0.506, 0.456, 0.409, 0.364, 0.319, 0.267, 0.226, 0.204],
    [NA,    NA,    0.886, 0.791, 0.711, 0.640, 0.577, 0.520, 0.466, 0.415, 0.363, 0.305, 0.257, 0.232],
    [NA,    NA,    NA,    0.893, 0.801, 0.722, 0.651, 0.586, 0.526, 0.468, 0.410, 0.344, 0.290, 0.262],
    [NA,    NA,    NA,    NA,    0.898, 0.808, 0.729, 0.657, 0.589, 0.525, 0.459, 0.385, 0.325, 0.293],
    [NA,    NA,    NA,    NA,    NA,    0.900, 0.812, 0.731, 0.657, 0.585, 0.512, 0.429, 0.362, 0.327],
    [NA,    NA,    NA,    NA,    NA,    NA,    0.902, 0.812, 0.729, 0.649, 0.568, 0.477, 0.402, 0.363],
    [NA,    NA,    NA,    NA,    NA,    NA,    NA,    0.901, 0.809, 0.720, 0.630, 0.529, 0.445, 0.402],
    [NA,    NA,    NA,    NA,    NA,    NA,    NA,    NA,    0.898, 0.799, 0.699, 0.587, 0.494, 0.447],
    [NA,    NA,    NA,    NA,    NA,    NA,    NA,    NA,    NA,    0.890, 0.779, 0.654, 0.551, 0.497],
];

#[test]
fn acceptance_1_normalization_table() {
    let taus: Vec<f64> = (0..13).map(|i| 0.600 + 0.025 * i as f64).collect();
    let xis: Vec<f64> = (0..12)
        .map(|i| 0.700 + 0.025 * i as f64)
        .chain([0.990, 0.995])
        .collect();
    let fmt = |v: &Vec<f64>| {
        v.iter()
            .map(|x| format!("{x:.3}"))
            .collect::<Vec<_>>()
            .join(",")
    };

    let started = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_tailcor"))
        .args([
            "sg-table",
            "--tau-grid",
            &fmt(&taus),
            "--xi-grid",
            &fmt(&xis),
            "--format",
            "csv",
        ])
        .output()
        .unwrap();
    let elapsed = started.elapsed();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 13, "expected 13 tau rows");

    let mut worst = 0.0f64;
    let mut populated = 0usize;
    let mut shape_ok = true;
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 15, "tau row plus 14 cells");
        for (j, cell) in cells[1..].iter().enumerate() {
            let want = SG_EXPECTED[i][j];
            if want.is_nan() {
                shape_ok &= *cell == "--";
            } else {
                populated += 1;
                let got: f64 = cell.parse().unwrap();
                worst = worst.max((got - want).abs());
            }
        }
    }

    verdict(
        1,
        "normalization table",
        vec![
            (shape_ok, "undefined cells should print as --".into()),
            (populated == 137, format!("saw {populated} populated cells")),
            (
                worst <= 0.0015,
                format!("worst absolute deviation {worst:.5}"),
            ),
            (
                elapsed < Duration::from_secs(1),
                format!("table took {elapsed:?}"),
            ),
        ],
    );
}

#[test]
fn acceptance_2_gaussian_golden_numbers() {
    let run = g95().sample.as_ref().unwrap();
    verdict(
        2,
        "gaussian golden numbers",
        vec![
            band(run.tailcor.mean, 1.221, 1.229, "mean"),
            band(run.tailcor.sd, 0.008, 0.014, "sd"),
            band(run.nonlinear.mean, 2.42, 2.46, "nonlinear mean"),
            band(run.linear.mean, 1.221, 1.229, "linear mean"),
        ],
    );
}

#[test]
fn acceptance_3_student_t_golden_numbers() {
    let run = t95().sample.as_ref().unwrap();
    verdict(
        3,
        "student-t golden numbers",
        vec![
            band(run.tailcor.mean, 1.62, 1.655, "mean"),
            band(run.tailcor.sd, 0.018, 0.030, "sd"),
            band(run.nonlinear.mean, 3.21, 3.31, "nonlinear mean"),
        ],
    );
}

#[test]
fn acceptance_4_step1_negligibility() {
    let mut checks = Checks::new();
    for (name, report) in [("gaussian", g95()), ("student-t", t95())] {
        let s = report.sample.as_ref().unwrap();
        let p = report.population.as_ref().unwrap();
        let se = |st: &McStat| st.sd / (st.values.len() as f64).sqrt();
        let gap = (s.tailcor.mean - p.tailcor.mean).abs();
        let bound = 2.0 * (se(&s.tailcor).powi(2) + se(&p.tailcor).powi(2)).sqrt();
        checks.push((
            gap <= bound,
            format!("{name}: step-1 gap {gap:.5} exceeds {bound:.5}"),
        ));
    }
    verdict(4, "step-1 negligibility", checks);
}

#[test]
fn acceptance_5_distribution_ordering() {
    let g = g95().sample.as_ref().unwrap().tailcor.median;
    let es = es95().sample.as_ref().unwrap().tailcor.median;
    let t = t95().sample.as_ref().unwrap().tailcor.median;
    verdict(
        5,
        "distribution ordering",
        vec![
            band(g, 1.22 - 0.03, 1.22 + 0.03, "gaussian median"),
            band(es, 1.58 - 0.03, 1.58 + 0.03, "stable median"),
            band(t, 1.64 - 0.03, 1.64 + 0.03, "student-t median"),
            (
                g < es && es < t,
                format!("ordering broken: {g:.4}, {es:.4}, {t:.4}"),
            ),
        ],
    );
}

#[test]
fn acceptance_6_tail_level_monotonicity() {
    let t_means: Vec<f64> = [t90(), t95(), t99()]
        .iter()
        .map(|r| r.sample.as_ref().unwrap().tailcor.mean)
        .collect();
    let g: Vec<&McStat> = [g90(), g95(), g99()]
        .iter()
        .map(|r| &r.sample.as_ref().unwrap().tailcor)
        .collect();
    let max_sd = g.iter().map(|s| s.sd).fold(0.0f64, f64::max);
    let g_spread = g.iter().map(|s| s.mean).fold(f64::MIN, f64::max)
        - g.iter().map(|s| s.mean).fold(f64::MAX, f64::min);
    verdict(
        6,
        "tail-level monotonicity",
        vec![
            (
                t_means[0] < t_means[1] && t_means[1] < t_means[2],
                format!("student-t means not increasing: {t_means:.4?}"),
            ),
            (
                g_spread <= 2.0 * max_sd,
                format!("gaussian means spread {g_spread:.5} beyond {:.5}", 2.0 * max_sd),
            ),
        ],
    );
}

/// Quadratic-time Kendall with the usual tie correction, kept deliberately
/// naive so it cannot share a bug with the fast path.
fn kendall_brute(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut net, mut n0, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            n0 += 1;
            if dx == 0.0 && dy == 0.0 {
                tx += 1;
                ty += 1;
            } else if dx == 0.0 {
                tx += 1;
            } else if dy == 0.0 {
                ty += 1;
            } else if dx * dy > 0.0 {
                net += 1;
            } else {
                net -= 1;
            }
        }
    }
    net as f64 / (((n0 - tx) as f64) * ((n0 - ty) as f64)).sqrt()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn stdev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[test]
fn acceptance_7_property_suite() {
    let mut checks = Checks::new();
    let push = |checks: &mut Checks, ok: bool, msg: String| checks.push((ok, msg));

    // quantile monotonicity and affine equivariance
    let base: Vec<f64> = (0..500)
        .map(|i| ((i * 37) % 367) as f64 * 0.1 - 12.0)
        .collect();
    let shifted: Vec<f64> = base.iter().map(|v| 3.0 * v - 7.0).collect();
    let mut mono = true;
    let mut affine = true;
    let mut prev = f64::MIN;
    for k in 1..20 {
        let p = Level::new(k as f64 / 20.0).unwrap();
        let q = sample_quantile(&base, p).unwrap();
        mono &= q >= prev;
        prev = q;
        let qs = sample_quantile(&shifted, p).unwrap();
        affine &= (qs - (3.0 * q - 7.0)).abs() <= 1e-9 * (1.0 + qs.abs());
    }
    push(&mut checks, mono, "quantiles must be monotone in p".into());
    push(&mut checks, affine, "quantiles must be affine-equivariant".into());

    // fast Kendall against the quadratic oracle, ties included
    let kx: Vec<f64> = (0..2000).map(|i| ((i * 83) % 601) as f64).collect();
    let ky: Vec<f64> = (0..2000)
        .map(|i| ((i * 149) % 443) as f64 - 0.5 * kx[i])
        .collect();
    let fast = kendall_tau(&kx, &ky).unwrap();
    let brute = kendall_brute(&kx, &ky);
    push(
        &mut checks,
        (fast - brute).abs() <= 1e-12,
        format!("kendall fast {fast} vs brute {brute}"),
    );

    // sine transform recovers the Gaussian correlation
    let model = EllipticalModel::standard_pair(Family::Gaussian, 0.6).unwrap();
    let big = sample(&model, 100_000, 7777).unwrap();
    let est_big = tailcor(big.column(0), big.column(1), &cfg(0.95)).unwrap();
    push(
        &mut checks,
        (est_big.rho - 0.6).abs() <= 0.01,
        format!("sine-recovered rho {:.4}", est_big.rho),
    );

    // symmetry in the argument order and location-scale invariance
    let model2 = EllipticalModel::standard_pair(Family::Gaussian, 0.5).unwrap();
    let small = sample(&model2, 5_000, 4242).unwrap();
    let (x, y) = (small.column(0), small.column(1));
    let e_xy = tailcor(x, y, &cfg(0.95)).unwrap();
    let e_yx = tailcor(y, x, &cfg(0.95)).unwrap();
    push(
        &mut checks,
        (e_xy.tailcor - e_yx.tailcor).abs() <= 1e-12 * e_xy.tailcor,
        format!("order swap moved {} to {}", e_xy.tailcor, e_yx.tailcor),
    );
    let xs: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
    let ys: Vec<f64> = y.iter().map(|v| 0.5 * v - 2.0).collect();
    let e_scaled = tailcor(&xs, &ys, &cfg(0.95)).unwrap();
    push(
        &mut checks,
        (e_xy.tailcor - e_scaled.tailcor).abs() <= 1e-9 * e_xy.tailcor,
        format!("rescaling moved {} to {}", e_xy.tailcor, e_scaled.tailcor),
    );

    // the two semi-ranges partition the interquantile range bit for bit
    let mut semi_exact = true;
    for p in [0.75, 0.9, 0.95] {
        let lv = Level::new(p).unwrap();
        let total = iqr(&base, lv).unwrap();
        let split = semi_iqr_upper(&base, lv).unwrap() + semi_iqr_lower(&base, lv).unwrap();
        semi_exact &= total.to_bits() == split.to_bits();
    }
    push(&mut checks, semi_exact, "semi-range split must be exact".into());

    // one-sided variance of a sum expands like the two-sided one when the
    // side events of the summands coincide
    let a: Vec<f64> = (0..21).map(|i| (i as f64 - 10.0) * 0.3).collect();
    let b: Vec<f64> = a.iter().map(|v| v.powi(3)).collect();
    let s: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + q).collect();
    for side in [SemiSide::Positive, SemiSide::Negative] {
        let lhs = semi_variance(&s, side, SemiCenter::Median).unwrap();
        let rhs = semi_variance(&a, side, SemiCenter::Median).unwrap()
            + semi_variance(&b, side, SemiCenter::Median).unwrap()
            + 2.0 * semi_covariance(&a, &b, side, SemiCenter::Median).unwrap();
        push(
            &mut checks,
            (lhs - rhs).abs() <= 1e-10,
            format!("semi-variance sum rule off by {}", (lhs - rhs).abs()),
        );
    }

    // bounded transform: inside [-1, 1] generally, exactly at the endpoints
    push(
        &mut checks,
        e_xy.alt.map(|v| (-1.0..=1.0).contains(&v)) == Some(true),
        format!("bounded transform out of range: {:?}", e_xy.alt),
    );
    let e_self = tailcor(&base, &base, &cfg(0.95)).unwrap();
    let negged: Vec<f64> = base.iter().map(|v| -v).collect();
    let e_anti = tailcor(&base, &negged, &cfg(0.95)).unwrap();
    push(
        &mut checks,
        e_self.alt == Some(1.0) && e_anti.alt == Some(-1.0),
        format!("endpoints gave {:?} and {:?}", e_self.alt, e_anti.alt),
    );

    // symmetric data splits evenly across the two tails, and the two sides
    // average back to the headline number exactly
    push(
        &mut checks,
        (est_big.downside - est_big.upside).abs() <= 0.03,
        format!(
            "sides {:.4} / {:.4} should agree on symmetric data",
            est_big.downside, est_big.upside
        ),
    );
    let avg = 0.5 * (est_big.downside + est_big.upside);
    push(
        &mut checks,
        (avg - est_big.tailcor).abs() <= 1e-12 * est_big.tailcor,
        "side average must reproduce the estimate".into(),
    );

    // the block bootstrap is a pure function of its seed, and its errors
    // track the true sampling spread within a factor of two
    let spec = BootstrapSpec::new(25, 50, 999).unwrap();
    let b1 = bootstrap_pair(x, y, &cfg(0.95), &spec).unwrap();
    let b2 = bootstrap_pair(x, y, &cfg(0.95), &spec).unwrap();
    push(
        &mut checks,
        b1.tailcor.std_error.to_bits() == b2.tailcor.std_error.to_bits()
            && b1.tailcor.q025.to_bits() == b2.tailcor.q025.to_bits()
            && b1.tailcor.q975.to_bits() == b2.tailcor.q975.to_bits(),
        "bootstrap reruns must be bit-identical".into(),
    );
    let mut points = Vec::new();
    let mut ses = Vec::new();
    for w in 0..40 {
        let panel = sample(&model2, 1_000, derive_seed(7000, w)).unwrap();
        let (wx, wy) = (panel.column(0), panel.column(1));
        points.push(tailcor(wx, wy, &cfg(0.95)).unwrap().tailcor);
        let bs = BootstrapSpec::new(25, 40, derive_seed(7100, w)).unwrap();
        ses.push(bootstrap_pair(wx, wy, &cfg(0.95), &bs).unwrap().tailcor.std_error);
    }
    let ratio = mean(&ses) / stdev(&points);
    push(
        &mut checks,
        (0.5..=2.0).contains(&ratio),
        format!("bootstrap SE calibration ratio {ratio:.3}"),
    );

    // identical command lines produce identical bytes
    let dir = TempDir::new().unwrap();
    let fixture = dir.path().join("pair.csv");
    let mut csv = String::from("x,y\n");
    let cli_panel = sample(&model2, 300, 31).unwrap();
    for i in 0..300 {
        csv.push_str(&format!(
            "{},{}\n",
            cli_panel.column(0)[i],
            cli_panel.column(1)[i]
        ));
    }
    std::fs::write(&fixture, csv).unwrap();
    let cli = || {
        Command::new(env!("CARGO_BIN_EXE_tailcor"))
            .args([
                "pair",
                "--input",
                fixture.to_str().unwrap(),
                "--bootstrap",
                "25",
                "--seed",
                "5",
            ])
            .output()
            .unwrap()
    };
    let r1 = cli();
    let r2 = cli();
    push(
        &mut checks,
        r1.status.success() && r1.stdout == r2.stdout,
        "CLI reruns must be byte-stable".into(),
    );

    verdict(7, "property suite", checks);
}

#[test]
fn acceptance_8_descriptives_by_hand() {
    // s runs 0..=100 so every quantile is a textbook interpolation; t is an
    // affine image; u is a scrambled lattice checked against a longhand
    // sort-and-interpolate oracle below
    let dir = TempDir::new().unwrap();
    let fixture = dir.path().join("desc.csv");
    let u: Vec<f64> = (0..=100).map(|i| ((i * 37) % 101) as f64 * 0.37 - 5.0).collect();
    let mut csv = String::from("s,t,u\n");
    for i in 0..=100usize {
        csv.push_str(&format!("{},{},{}\n", i as f64, 2.0 * i as f64 + 3.0, u[i]));
    }
    std::fs::write(&fixture, csv).unwrap();

    let out = Command::new(env!("CARGO_BIN_EXE_tailcor"))
        .args([
            "descriptives",
            "--input",
            fixture.to_str().unwrap(),
            "--format",
            "csv",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let parse_row = |label: &str| -> Vec<f64> {
        let row = text
            .lines()
            .find(|l| l.starts_with(&format!("{label},")))
            .unwrap();
        row.split(',').skip(1).map(|c| c.parse().unwrap()).collect()
    };

    // longhand oracle: sort, take rank (n-1)p, interpolate
    let handq = |sorted: &[f64], p: f64| -> f64 {
        let h = (sorted.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        sorted[lo] + (h - lo as f64) * (sorted[lo.min(sorted.len() - 2) + 1] - sorted[lo])
    };
    let mut su = u.clone();
    su.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let uq = |p: f64| handq(&su, p);
    let u_expect = [
        uq(0.5),
        uq(0.75) - uq(0.25),
        (uq(0.975) - uq(0.025)) / (uq(0.75) - uq(0.25)) - 2.91,
        (uq(0.975) - uq(0.5)) - (uq(0.5) - uq(0.025)),
    ];

    let mut checks = Checks::new();
    for (label, expect) in [
        ("s", vec![50.0, 50.0, 95.0 / 50.0 - 2.91, 0.0]),
        ("t", vec![103.0, 100.0, 190.0 / 100.0 - 2.91, 0.0]),
        ("u", u_expect.to_vec()),
    ] {
        let got = parse_row(label);
        for (g, e) in got.iter().zip(&expect) {
            checks.push((
                (g - e).abs() <= 1e-9 * (1.0 + e.abs()),
                format!("series {label}: got {g}, expected {e}"),
            ));
        }
    }
    verdict(8, "descriptives by hand", checks);
}
