//! Command execution: translate parsed flags into library calls and emit
//! deterministic artifacts.

use std::f64::consts::PI;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use tailcor::bootstrap::{bootstrap_matrix, bootstrap_pair, BootstrapEstimate, BootstrapSpec};
use tailcor::matrix::{tailcor_matrix, MatrixEstimate};
use tailcor::pair::{self, AnglePolicy, TailConfig};
use tailcor::quantile::{self, quantile_descriptives, LevelPair};
use tailcor::rolling::{self, Diagonal, WindowSpec};
use tailcor::simulation::{run_mc, EllipticalModel, Family, McDesign, McRun, McStat, Step1Mode};

use crate::args::*;
use crate::emit::{self, fmt_num, Artifacts};
use crate::error::{CliError, Result};
use crate::load::{load_panel, LoadedPanel};

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Pair(a) => cmd_pair(a),
        Command::Matrix(a) => cmd_matrix(a),
        Command::Rolling(a) => cmd_rolling(a),
        Command::Mc(a) => cmd_mc(a),
        Command::SgTable(a) => cmd_sg_table(a),
        Command::Descriptives(a) => cmd_descriptives(a),
    }
}

fn parse_angle(s: &str) -> Result<AnglePolicy> {
    if s == "auto" {
        return Ok(AnglePolicy::AutoSign);
    }
    if let Some(n) = s.strip_prefix("grid:") {
        let res: usize = n
            .parse()
            .map_err(|_| CliError::Usage(format!("bad grid resolution {n:?}")))?;
        return Ok(AnglePolicy::GridSearch(res));
    }
    if let Some(deg) = s.strip_prefix("fixed:") {
        let d: f64 = deg
            .parse()
            .map_err(|_| CliError::Usage(format!("bad angle {deg:?}")))?;
        if !(0.0..180.0).contains(&d) {
            return Err(CliError::Usage(format!(
                "fixed angle must lie in [0, 180) degrees, got {d}"
            )));
        }
        return Ok(AnglePolicy::Fixed(d * PI / 180.0));
    }
    Err(CliError::Usage(format!(
        "--angle must be auto, grid:<n>, or fixed:<degrees>, got {s:?}"
    )))
}

fn build_cfg(tail: &TailOpts) -> Result<TailConfig> {
    let levels = LevelPair::new(tail.tau, tail.xi)?;
    Ok(TailConfig::new(levels, parse_angle(&tail.angle)?)?)
}

fn init_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

/// An explicit seed, or a fresh one that the manifest will record.
fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0)
    })
}

fn na_str(na: NaPolicy) -> &'static str {
    match na {
        NaPolicy::Error => "error",
        NaPolicy::Drop => "drop",
    }
}

fn format_str(f: Format) -> &'static str {
    match f {
        Format::Json => "json",
        Format::Csv => "csv",
    }
}

fn input_manifest(opts: &InputOpts, loaded: &LoadedPanel) -> Value {
    json!({
        "path": opts.input.display().to_string(),
        "sha256": loaded.sha256,
        "dropped_rows": loaded.dropped_rows,
        "date_column": opts.date_column,
        "na": na_str(opts.na),
    })
}

fn manifest(command: &str, seed: Option<u64>, input: Value, config: Value) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "input": input,
        "config": config,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn table_json(labels: &[String], rows: &[Vec<f64>]) -> Value {
    json!({ "labels": labels, "rows": rows })
}

/// Upper triangle plus diagonal, the usual orientation of printed
/// correlation tables.
fn matrix_csv(labels: &[String], rows: &[Vec<f64>]) -> String {
    let n = labels.len();
    let mut s = String::from("series");
    for l in labels {
        s.push(',');
        s.push_str(&csv_field(l));
    }
    s.push('\n');
    for j in 0..n {
        s.push_str(&csv_field(&labels[j]));
        for k in 0..n {
            s.push(',');
            if k >= j {
                s.push_str(&fmt_num(rows[j][k]));
            }
        }
        s.push('\n');
    }
    s
}

fn boot_est_json(e: &BootstrapEstimate) -> Value {
    json!({
        "point": e.point,
        "std_error": e.std_error,
        "q025": e.q025,
        "q975": e.q975,
        "replicates_kept": e.replicates_kept,
    })
}

fn deliver_json(manifest: Value, result: Value, out: &OutputOpts) -> Result<()> {
    let artifacts = Artifacts {
        primary: emit::json_document(manifest, result),
        manifest: None,
        se_table: None,
    };
    emit::deliver(&artifacts, out.output.as_deref())
}

fn deliver_csv(
    manifest: Value,
    primary: String,
    se_table: Option<String>,
    out: &OutputOpts,
) -> Result<()> {
    if se_table.is_some() && out.output.is_none() {
        return Err(CliError::Usage(
            "csv output with bootstrap errors writes a companion file; pass --output".into(),
        ));
    }
    let artifacts = Artifacts {
        primary,
        manifest: Some(emit::manifest_document(manifest)),
        se_table,
    };
    emit::deliver(&artifacts, out.output.as_deref())
}

fn pick_pair_columns(loaded: &LoadedPanel, columns: &Option<Vec<String>>) -> Result<(usize, usize)> {
    let labels = loaded.panel.labels();
    match columns {
        Some(cols) => {
            if cols.len() != 2 {
                return Err(CliError::Usage(format!(
                    "--columns takes exactly two names, got {}",
                    cols.len()
                )));
            }
            let find = |name: &str| {
                labels
                    .iter()
                    .position(|l| l == name)
                    .ok_or_else(|| CliError::Schema(format!("column {name:?} not in the panel")))
            };
            let j = find(&cols[0])?;
            let k = find(&cols[1])?;
            if j == k {
                return Err(CliError::Usage("the two columns must differ".into()));
            }
            Ok((j, k))
        }
        None => {
            if labels.len() == 2 {
                Ok((0, 1))
            } else {
                Err(CliError::Usage(format!(
                    "panel has {} series; pick two with --columns",
                    labels.len()
                )))
            }
        }
    }
}

fn cmd_pair(a: PairArgs) -> Result<()> {
    let cfg = build_cfg(&a.tail)?;
    init_jobs(a.out.jobs)?;
    let loaded = load_panel(&a.input.input, a.input.date_column.as_deref(), a.input.na)?;
    let (j, k) = pick_pair_columns(&loaded, &a.columns)?;
    let x = loaded.panel.column(j);
    let y = loaded.panel.column(k);
    let names = [
        loaded.panel.labels()[j].clone(),
        loaded.panel.labels()[k].clone(),
    ];

    let est = pair::tailcor(x, y, &cfg)?;
    let seed = a.boot.bootstrap.map(|_| resolve_seed(a.boot.seed));
    let boot = match a.boot.bootstrap {
        Some(reps) => Some(bootstrap_pair(
            x,
            y,
            &cfg,
            &BootstrapSpec::new(a.boot.block_length, reps, seed.expect("set above"))?,
        )?),
        None => None,
    };

    let config = json!({
        "tau": a.tail.tau,
        "xi": a.tail.xi,
        "angle": a.tail.angle,
        "columns": names,
        "bootstrap": a.boot.bootstrap,
        "block_length": a.boot.block_length,
        "format": format_str(a.out.format),
    });
    let man = manifest("pair", seed, input_manifest(&a.input, &loaded), config);

    let boot_json = match &boot {
        Some(b) => json!({
            "tailcor": boot_est_json(&b.tailcor),
            "rho": boot_est_json(&b.rho),
            "linear": boot_est_json(&b.linear),
            "nonlinear": boot_est_json(&b.nonlinear),
            "downside": boot_est_json(&b.downside),
            "upside": boot_est_json(&b.upside),
            "alt": b.alt.as_ref().map(boot_est_json),
            "replicates_failed": b.replicates_failed,
        }),
        None => Value::Null,
    };
    let result = json!({
        "columns": names,
        "estimate": {
            "tailcor": est.tailcor,
            "rho": est.rho,
            "linear": est.linear,
            "nonlinear": est.nonlinear,
            "angle": est.angle,
            "alt": emit::option_num(est.alt),
            "downside": est.downside,
            "upside": est.upside,
        },
        "bootstrap": boot_json,
    });

    match a.out.format {
        Format::Json => deliver_json(man, result, &a.out),
        Format::Csv => {
            let mut s = String::new();
            let se = |f: fn(&tailcor::bootstrap::PairBootstrap) -> &BootstrapEstimate| {
                boot.as_ref().map(|b| fmt_num(f(b).std_error))
            };
            let rows: Vec<(&str, Option<String>, Option<String>)> = vec![
                ("tailcor", Some(fmt_num(est.tailcor)), se(|b| &b.tailcor)),
                ("rho", Some(fmt_num(est.rho)), se(|b| &b.rho)),
                ("linear", Some(fmt_num(est.linear)), se(|b| &b.linear)),
                ("nonlinear", Some(fmt_num(est.nonlinear)), se(|b| &b.nonlinear)),
                ("angle", Some(fmt_num(est.angle)), None),
                (
                    "alt",
                    est.alt.map(fmt_num),
                    boot.as_ref()
                        .and_then(|b| b.alt.as_ref())
                        .map(|e| fmt_num(e.std_error)),
                ),
                ("downside", Some(fmt_num(est.downside)), se(|b| &b.downside)),
                ("upside", Some(fmt_num(est.upside)), se(|b| &b.upside)),
            ];
            s.push_str(if boot.is_some() {
                "metric,value,se\n"
            } else {
                "metric,value\n"
            });
            for (name, value, se) in rows {
                s.push_str(name);
                s.push(',');
                if let Some(v) = value {
                    s.push_str(&v);
                }
                if boot.is_some() {
                    s.push(',');
                    if let Some(v) = se {
                        s.push_str(&v);
                    }
                }
                s.push('\n');
            }
            deliver_csv(man, s, None, &a.out)
        }
    }
}

fn matrix_result_json(m: &MatrixEstimate, boot: Option<&tailcor::bootstrap::MatrixBootstrap>) -> Value {
    let boot_json = match boot {
        Some(b) => json!({
            "tailcor_se": table_json(&m.labels, &b.tailcor_se),
            "linear_se": table_json(&m.labels, &b.linear_se),
            "pooled_nonlinear_se": b.pooled_nonlinear_se,
            "replicates_kept": b.replicates_kept,
            "replicates_failed": b.replicates_failed,
        }),
        None => Value::Null,
    };
    json!({
        "labels": m.labels,
        "tailcor": table_json(&m.labels, &m.tailcor),
        "linear": table_json(&m.labels, &m.linear),
        "pooled_nonlinear": m.pooled_nonlinear,
        "per_pair_nonlinear": m.per_pair_nonlinear,
        "min_psi_eigenvalue": m.min_psi_eigenvalue,
        "positive_definite": m.is_positive_definite(),
        "bootstrap": boot_json,
    })
}

fn cmd_matrix(a: MatrixArgs) -> Result<()> {
    let cfg = build_cfg(&a.tail)?;
    init_jobs(a.out.jobs)?;
    let loaded = load_panel(&a.input.input, a.input.date_column.as_deref(), a.input.na)?;

    let m = tailcor_matrix(&loaded.panel, &cfg)?;
    let seed = a.boot.bootstrap.map(|_| resolve_seed(a.boot.seed));
    let boot = match a.boot.bootstrap {
        Some(reps) => Some(bootstrap_matrix(
            &loaded.panel,
            &cfg,
            &BootstrapSpec::new(a.boot.block_length, reps, seed.expect("set above"))?,
        )?),
        None => None,
    };

    let config = json!({
        "tau": a.tail.tau,
        "xi": a.tail.xi,
        "angle": a.tail.angle,
        "bootstrap": a.boot.bootstrap,
        "block_length": a.boot.block_length,
        "format": format_str(a.out.format),
    });
    let man = manifest("matrix", seed, input_manifest(&a.input, &loaded), config);
    let result = matrix_result_json(&m, boot.as_ref());

    match a.out.format {
        Format::Json => deliver_json(man, result, &a.out),
        Format::Csv => {
            let primary = matrix_csv(&m.labels, &m.tailcor);
            let se_table = boot.as_ref().map(|b| matrix_csv(&m.labels, &b.tailcor_se));
            deliver_csv(man, primary, se_table, &a.out)
        }
    }
}

fn cmd_rolling(a: RollingArgs) -> Result<()> {
    let cfg = build_cfg(&a.tail)?;
    init_jobs(a.out.jobs)?;
    let loaded = load_panel(&a.input.input, a.input.date_column.as_deref(), a.input.na)?;

    let step = a.step.unwrap_or(a.window);
    let min_obs = a.min_obs.unwrap_or(a.window);
    let wspec = WindowSpec::new(a.window, step, min_obs)?;
    let rolled = rolling::roll(&loaded.panel, &wspec, &cfg)?;
    let excl = rolled.cross_sectional_averages(Diagonal::Exclude);
    let incl = rolled.cross_sectional_averages(Diagonal::Include);

    let date_at = |start: usize| -> Value {
        match &loaded.dates {
            Some(d) => json!(d[start].to_string()),
            None => Value::Null,
        }
    };

    let config = json!({
        "tau": a.tail.tau,
        "xi": a.tail.xi,
        "angle": a.tail.angle,
        "window": a.window,
        "step": step,
        "min_obs": min_obs,
        "format": format_str(a.out.format),
    });
    let man = manifest("rolling", None, input_manifest(&a.input, &loaded), config);

    let windows: Vec<Value> = (0..rolled.estimates.len())
        .map(|i| {
            let m = &rolled.estimates[i];
            json!({
                "start": rolled.window_starts[i],
                "date": date_at(rolled.window_starts[i]),
                "len": rolled.window_lens[i],
                "tailcor": table_json(&m.labels, &m.tailcor),
                "linear": table_json(&m.labels, &m.linear),
                "pooled_nonlinear": m.pooled_nonlinear,
                "min_psi_eigenvalue": m.min_psi_eigenvalue,
                "avg_excluding_diagonal": excl[i],
                "avg_including_diagonal": incl[i],
            })
        })
        .collect();
    let result = Value::Array(windows);

    match a.out.format {
        Format::Json => deliver_json(man, result, &a.out),
        Format::Csv => {
            let mut s = String::from("start,date,len,row,col,tailcor,linear\n");
            for i in 0..rolled.estimates.len() {
                let m = &rolled.estimates[i];
                let start = rolled.window_starts[i];
                let date = match &loaded.dates {
                    Some(d) => d[start].to_string(),
                    None => String::new(),
                };
                let n = m.labels.len();
                for j in 0..n {
                    for k in j..n {
                        s.push_str(&format!(
                            "{},{},{},{},{},{},{}\n",
                            start,
                            date,
                            rolled.window_lens[i],
                            csv_field(&m.labels[j]),
                            csv_field(&m.labels[k]),
                            fmt_num(m.tailcor[j][k]),
                            fmt_num(m.linear[j][k]),
                        ));
                    }
                }
            }
            deliver_csv(man, s, None, &a.out)
        }
    }
}

fn family_config(a: &McArgs) -> Result<(Family, &'static str)> {
    let need = |v: Option<f64>, what: &str| {
        v.ok_or_else(|| CliError::Usage(format!("--family {} needs {what}", family_name(a.family))))
    };
    let none = |v: Option<f64>, what: &str| {
        if v.is_some() {
            Err(CliError::Usage(format!(
                "--family {} does not take {what}",
                family_name(a.family)
            )))
        } else {
            Ok(())
        }
    };
    match a.family {
        FamilyArg::Gaussian => {
            none(a.alpha, "--alpha")?;
            none(a.gamma, "--gamma")?;
            Ok((Family::Gaussian, "gaussian"))
        }
        FamilyArg::StudentT => {
            none(a.gamma, "--gamma")?;
            Ok((
                Family::StudentT {
                    df: need(a.alpha, "--alpha")?,
                },
                "student-t",
            ))
        }
        FamilyArg::Stable => {
            none(a.gamma, "--gamma")?;
            Ok((
                Family::SubGaussianStable {
                    alpha: need(a.alpha, "--alpha")?,
                },
                "stable",
            ))
        }
        FamilyArg::Nmvm => Ok((
            Family::NmvmStudentT {
                df: need(a.alpha, "--alpha")?,
                gamma: need(a.gamma, "--gamma")?,
            },
            "nmvm",
        )),
    }
}

fn family_name(f: FamilyArg) -> &'static str {
    match f {
        FamilyArg::Gaussian => "gaussian",
        FamilyArg::StudentT => "student-t",
        FamilyArg::Stable => "stable",
        FamilyArg::Nmvm => "nmvm",
    }
}

fn step1_name(s: Step1Arg) -> &'static str {
    match s {
        Step1Arg::Sample => "sample",
        Step1Arg::Population => "population",
        Step1Arg::Both => "both",
    }
}

fn stat_json(s: &McStat) -> Value {
    json!({
        "mean": s.mean,
        "sd": s.sd,
        "median": s.median,
        "kde": { "grid": s.kde.grid, "density": s.kde.density },
    })
}

fn mc_run_json(r: &McRun) -> Value {
    json!({
        "tailcor": stat_json(&r.tailcor),
        "nonlinear": stat_json(&r.nonlinear),
        "linear": stat_json(&r.linear),
        "replicates_failed": r.replicates_failed,
    })
}

fn cmd_mc(a: McArgs) -> Result<()> {
    let cfg = build_cfg(&a.tail)?;
    init_jobs(a.out.jobs)?;
    let (family, family_str) = family_config(&a)?;
    let model = EllipticalModel::standard_pair(family, a.rho)?;
    let step1 = match a.step1 {
        Step1Arg::Sample => Step1Mode::SampleQuantiles,
        Step1Arg::Population => Step1Mode::PopulationQuantiles,
        Step1Arg::Both => Step1Mode::Both,
    };
    let seed = resolve_seed(a.seed);
    let design = McDesign {
        model,
        t: a.t,
        h: a.h,
        cfg,
        step1,
        seed,
    };
    let report = run_mc(&design)?;

    let config = json!({
        "tau": a.tail.tau,
        "xi": a.tail.xi,
        "angle": a.tail.angle,
        "family": family_str,
        "alpha": a.alpha,
        "gamma": a.gamma,
        "rho": a.rho,
        "T": a.t,
        "H": a.h,
        "step1": step1_name(a.step1),
        "format": format_str(a.out.format),
    });
    let man = manifest("mc", Some(seed), Value::Null, config);

    let result = json!({
        "sample": report.sample.as_ref().map(mc_run_json),
        "population": report.population.as_ref().map(mc_run_json),
    });

    match a.out.format {
        Format::Json => deliver_json(man, result, &a.out),
        Format::Csv => {
            let mut s = String::from("mode,statistic,mean,sd,median\n");
            let mut block = |mode: &str, run: &McRun| {
                for (name, st) in [
                    ("tailcor", &run.tailcor),
                    ("nonlinear", &run.nonlinear),
                    ("linear", &run.linear),
                ] {
                    s.push_str(&format!(
                        "{mode},{name},{},{},{}\n",
                        fmt_num(st.mean),
                        fmt_num(st.sd),
                        fmt_num(st.median)
                    ));
                }
            };
            if let Some(run) = &report.sample {
                block("sample", run);
            }
            if let Some(run) = &report.population {
                block("population", run);
            }
            deliver_csv(man, s, None, &a.out)
        }
    }
}

/// start:end[:step] with an inclusive, fp-tolerant endpoint, or a comma list.
fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| CliError::Usage(msg);
    let levels: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 2 && parts.len() != 3 {
            return Err(bad(format!("grid {s:?} must be start:end or start:end:step")));
        }
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| bad(format!("bad grid number {t:?}")))
        };
        let start = num(parts[0])?;
        let end = num(parts[1])?;
        let step = if parts.len() == 3 { num(parts[2])? } else { 0.025 };
        if !(step > 0.0) {
            return Err(bad("grid step must be positive".into()));
        }
        if end < start {
            return Err(bad(format!("grid {s:?} runs backwards")));
        }
        let mut v = Vec::new();
        let mut k = 0u32;
        loop {
            let value = start + f64::from(k) * step;
            if value > end + 1e-9 {
                break;
            }
            // snap accumulated fp error to a tidy lattice value
            v.push((value * 1e9).round() / 1e9);
            k += 1;
        }
        v
    } else {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("bad grid number {t:?}")))
            })
            .collect::<Result<_>>()?
    };
    if levels.is_empty() {
        return Err(bad(format!("grid {s:?} is empty")));
    }
    Ok(levels)
}

fn cmd_sg_table(a: SgTableArgs) -> Result<()> {
    let taus = parse_grid(&a.tau_grid)?;
    let xis = parse_grid(&a.xi_grid)?;

    let cells: Vec<Vec<Option<f64>>> = taus
        .iter()
        .map(|&tau| {
            xis.iter()
                .map(|&xi| LevelPair::new(tau, xi).ok().map(quantile::s_g))
                .collect()
        })
        .collect();

    let config = json!({
        "tau_grid": a.tau_grid,
        "xi_grid": a.xi_grid,
        "format": format_str(a.out.format),
    });
    let man = manifest("sg-table", None, Value::Null, config);
    let result = json!({ "tau": taus, "xi": xis, "cells": cells });

    match a.out.format {
        Format::Json => deliver_json(man, result, &a.out),
        Format::Csv => {
            let mut s = String::from("tau");
            for xi in &xis {
                s.push(',');
                s.push_str(&fmt_num(*xi));
            }
            s.push('\n');
            for (i, tau) in taus.iter().enumerate() {
                s.push_str(&fmt_num(*tau));
                for cell in &cells[i] {
                    s.push(',');
                    match cell {
                        Some(v) => s.push_str(&fmt_num(*v)),
                        None => s.push_str("--"),
                    }
                }
                s.push('\n');
            }
            deliver_csv(man, s, None, &a.out)
        }
    }
}

fn cmd_descriptives(a: DescriptivesArgs) -> Result<()> {
    let loaded = load_panel(&a.input.input, a.input.date_column.as_deref(), a.input.na)?;

    let mut stats = Vec::new();
    for j in 0..loaded.panel.width() {
        let d = quantile_descriptives(loaded.panel.column(j))?;
        stats.push((loaded.panel.labels()[j].clone(), d));
    }

    let config = json!({ "format": format_str(a.out.format) });
    let man = manifest("descriptives", None, input_manifest(&a.input, &loaded), config);
    let result = Value::Array(
        stats
            .iter()
            .map(|(label, d)| {
                json!({
                    "series": label,
                    "median": d.median,
                    "iqr": d.iqr75,
                    "qkurtosis": d.qkurtosis,
                    "qskewness": d.qskewness,
                })
            })
            .collect(),
    );

    match a.out.format {
        Format::Json => deliver_json(man, result, &a.out),
        Format::Csv => {
            let mut s = String::from("series,median,iqr,qkurtosis,qskewness\n");
            for (label, d) in &stats {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    csv_field(label),
                    fmt_num(d.median),
                    fmt_num(d.iqr75),
                    fmt_num(d.qkurtosis),
                    fmt_num(d.qskewness)
                ));
            }
            deliver_csv(man, s, None, &a.out)
        }
    }
}
