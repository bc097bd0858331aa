//! Command-line front end: coupling generation, benchmark-table
//! reproduction, discrete solvers, and the verification suites.
//!
//! Config precedence is flags > `--config` key=value file > defaults.
//! Identical (config, seed) pairs produce byte-identical output. Exit
//! codes: 0 success, 1 verification-check failure, 2 usage error,
//! 3 numeric error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use qot::costs::{Bivariate, CostFn, CostKind, Quadratic};
use qot::couplings::{sample_coupling, to_plan, Copula, CouplingSpec, TransportPlan};
use qot::estimator::qcost_mc;
use qot::marginals::Marginal;
use qot::oracle::grid_search;
use qot::solver::{
    build_qp, convexity_certificate, solve_exhaustive, solve_frank_wolfe, solve_pair_exchange,
    solve_quadratic_product, Direction, SolveReport, DEFAULT_QP_LIMIT,
};
use qot::verify::{
    check_comonotone_submodular, check_diamond_kernel, check_diamond_rectangular,
    check_gw_location_scale, check_inequality_ranking, check_qrect_symmetric, check_separability,
    check_v_transport, gamma_sweep, CheckReport, CheckStatus, KernelSpec, Univariate,
};
use qot::{Error, Result};

#[derive(Parser)]
#[command(name = "qot", version, about = "Quadratic-form optimal transport on the real line")]
struct Cli {
    /// Flat key=value config file supplying defaults for omitted flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a coupling or emit its discretized transport plan as CSV
    Couple(CoupleArgs),
    /// Reproduce the six-marginal benchmark table for the cost (|x-x'|+|y-y'|)^2
    Table2(Table2Args),
    /// Solve a discrete QOT instance and emit a solve report
    Solve(SolveArgs),
    /// Run a verification suite; emits one JSON check report per line
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CoupleArgs {
    /// Coupling: com | ant | ind | x:<lambda> | v | dia
    #[arg(long)]
    coupling: Option<String>,
    /// First marginal, e.g. "U(0,1)", "N(0,1)", "Exp(1)", "Bern(0.5)", "discrete:<path>"
    #[arg(long)]
    mu: Option<String>,
    /// Second marginal
    #[arg(long)]
    nu: Option<String>,
    /// Number of samples to draw
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Emit the discretized plan instead of samples
    #[arg(long)]
    plan: bool,
    /// Discretization level for --plan
    #[arg(long)]
    ndisc: Option<usize>,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Table2Args {
    /// Monte-Carlo sample count per cell (scientific notation accepted)
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// fw | swap | grid | exact-perm | xquad
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    nu: Option<String>,
    /// Cost spec, e.g. "rect", "gauss:alpha=0.5", "quadprod:<f>;<g>"
    #[arg(long)]
    cost: Option<String>,
    #[arg(long)]
    ndisc: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Pair-exchange restarts for --method swap
    #[arg(long)]
    restarts: Option<usize>,
    /// Grid step for --method grid
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    gap_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Maximize instead of minimize (xquad only)
    #[arg(long)]
    maximize: bool,
    /// Output path for the report JSON; the plan CSV goes to <out>.plan.csv
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// diamond | submodular | gw | vtransport | kernel | qrect | separability | gamma | all
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Flat key=value defaults loaded from --config.
struct Config(BTreeMap<String, String>);

impl Config {
    fn load(path: Option<&PathBuf>) -> Result<Self> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            for (lineno, line) in std::fs::read_to_string(path)?.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    Error::Parse(format!("config line {}: expected key=value", lineno + 1))
                })?;
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Config(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| Error::Parse(format!("config key `{key}`: bad value `{raw}`"))),
        }
    }
}

fn resolve<T: FromStr>(flag: Option<T>, cfg: &Config, key: &str, default: T) -> Result<T> {
    match flag {
        Some(v) => Ok(v),
        None => Ok(cfg.get(key)?.unwrap_or(default)),
    }
}

/// Parse a sample count, accepting scientific notation like "1e6".
fn parse_count(s: &str) -> Result<usize> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad count `{s}`")))?;
    if !v.is_finite() || v < 0.0 || v.fract().abs() > 1e-6 * v.abs().max(1.0) {
        return Err(Error::Parse(format!("count `{s}` is not a nonnegative integer")));
    }
    Ok(v.round() as usize)
}

fn emit(out: Option<&PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(Error::from),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn header(seed: u64, config: &[(&str, String)]) -> String {
    let echo: Vec<String> = config.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!(
        "# qot {}\n# seed={seed}\n# config: {}\n",
        env!("CARGO_PKG_VERSION"),
        echo.join(" ")
    )
}

fn discretized(m: &Marginal, n_disc: usize) -> Result<Marginal> {
    if m.is_discrete() {
        Ok(m.clone())
    } else {
        m.discretize(n_disc)
    }
}

fn cmd_couple(args: CoupleArgs, cfg: &Config) -> Result<()> {
    let coupling = resolve(args.coupling, cfg, "coupling", "dia".to_string())?;
    let mu_spec = resolve(args.mu, cfg, "mu", "U(0,1)".to_string())?;
    let nu_spec = resolve(args.nu, cfg, "nu", "U(0,1)".to_string())?;
    let n = parse_count(&resolve(args.n, cfg, "n", "1000".to_string())?)?;
    let seed = resolve(args.seed, cfg, "seed", 0)?;
    let ndisc = resolve(args.ndisc, cfg, "ndisc", 30)?;

    let copula = Copula::parse(&coupling)?;
    let mu = Marginal::parse(&mu_spec)?;
    let nu = Marginal::parse(&nu_spec)?;
    let echo = [
        ("coupling", copula.label()),
        ("mu", mu_spec.clone()),
        ("nu", nu_spec.clone()),
        (if args.plan { "ndisc" } else { "n" }, if args.plan { ndisc.to_string() } else { n.to_string() }),
    ];
    let mut body = header(seed, &echo);
    if args.plan {
        let mu_d = discretized(&mu, ndisc)?;
        let nu_d = discretized(&nu, ndisc)?;
        let spec = CouplingSpec::new(copula, mu_d.clone(), nu_d.clone())?;
        body.push_str(&to_plan(&spec, &mu_d, &nu_d)?.to_csv());
    } else {
        let spec = CouplingSpec::new(copula, mu, nu)?;
        body.push_str("x,y\n");
        for (x, y) in sample_coupling(&spec, n, seed)? {
            writeln!(body, "{x},{y}").unwrap();
        }
    }
    emit(args.out.as_ref(), &body)
}

/// The benchmark table's marginal rows and coupling columns.
fn table2_rows() -> Vec<(&'static str, &'static str)> {
    vec![
        ("U(0,1)", "N(0,1)"),
        ("U(0,1)", "U(0,1)"),
        ("N(0,1)", "N(0,1)"),
        ("Exp(1)", "Exp(1)"),
        ("U(0,1)", "Exp(1)"),
        ("N(0,1)", "Exp(1)"),
    ]
}

fn table2_columns() -> Vec<Copula> {
    vec![
        Copula::Comonotone,
        Copula::Antimonotone,
        Copula::Independent,
        Copula::X { lambda: 0.5 },
        Copula::Diamond,
    ]
}

fn cmd_table2(args: Table2Args, cfg: &Config) -> Result<()> {
    let samples = parse_count(&resolve(args.samples, cfg, "samples", "1e6".to_string())?)?;
    if samples < 10_000 {
        return Err(Error::BadParams(format!(
            "table2 needs samples >= 1e4, got {samples}"
        )));
    }
    let seed = resolve(args.seed, cfg, "seed", 0)?;
    let format = resolve(args.format, cfg, "format", "csv".to_string())?;
    let cost = CostFn::inequality(1.0, 1.0)?;

    let mut cells = Vec::new();
    for (row, (mu_spec, nu_spec)) in table2_rows().into_iter().enumerate() {
        let mu = Marginal::parse(mu_spec)?;
        let nu = Marginal::parse(nu_spec)?;
        for (col, copula) in table2_columns().into_iter().enumerate() {
            let spec = CouplingSpec::new(copula, mu.clone(), nu.clone())?;
            let cell_seed = seed.wrapping_add((row * 5 + col) as u64);
            let est = qcost_mc(&spec, &cost, samples, cell_seed)?;
            cells.push((mu_spec, nu_spec, spec.copula.label(), est));
        }
    }

    let echo = [("samples", samples.to_string()), ("format", format.clone())];
    let body = match format.as_str() {
        "csv" => {
            let mut s = header(seed, &echo);
            s.push_str("mu,nu,coupling,value,stderr,samples\n");
            for (mu, nu, label, est) in &cells {
                writeln!(s, "{mu},{nu},{label},{:.6},{:.6},{}", est.value, est.stderr, est.samples)
                    .unwrap();
            }
            s
        }
        "json" => {
            let rows: Vec<serde_json::Value> = cells
                .iter()
                .map(|(mu, nu, label, est)| {
                    serde_json::json!({
                        "mu": mu, "nu": nu, "coupling": label,
                        "value": est.value, "stderr": est.stderr, "samples": est.samples,
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "version": env!("CARGO_PKG_VERSION"),
                "seed": seed,
                "config": {"samples": samples, "format": format},
                "cells": rows,
            });
            format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())
        }
        other => return Err(Error::Parse(format!("unknown format `{other}`"))),
    };
    emit(args.out.as_ref(), &body)
}

fn cmd_solve(args: SolveArgs, cfg: &Config) -> Result<()> {
    let method = resolve(args.method, cfg, "method", "fw".to_string())?;
    let mu_spec = resolve(args.mu, cfg, "mu", "U(0,1)".to_string())?;
    let nu_spec = resolve(args.nu, cfg, "nu", "U(0,1)".to_string())?;
    let cost_spec = resolve(args.cost, cfg, "cost", "rect".to_string())?;
    let ndisc = resolve(args.ndisc, cfg, "ndisc", 20)?;
    let seed = resolve(args.seed, cfg, "seed", 0)?;
    let restarts = resolve(args.restarts, cfg, "restarts", 1)?;
    let h = resolve(args.h, cfg, "h", 0.01)?;
    let gap_tol = resolve(args.gap_tol, cfg, "gap_tol", 1e-8)?;
    let max_iter = resolve(args.max_iter, cfg, "max_iter", 10_000)?;

    let mu = Marginal::parse(&mu_spec)?;
    let nu = Marginal::parse(&nu_spec)?;

    // xquad works on the continuous marginals directly
    if method == "xquad" {
        let spec = cost_spec
            .strip_prefix("quadprod:")
            .ok_or_else(|| Error::Parse("xquad needs a quadprod:<f>;<g> cost".into()))?;
        let (f_spec, g_spec) = spec
            .split_once(';')
            .ok_or_else(|| Error::Parse("quadprod needs two quadratics separated by `;`".into()))?;
        let direction = if args.maximize { Direction::Maximize } else { Direction::Minimize };
        let solution = solve_quadratic_product(
            &mu,
            &nu,
            Quadratic::parse(f_spec)?,
            Quadratic::parse(g_spec)?,
            direction,
        )?;
        let doc = serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "config": {"method": method, "mu": mu_spec, "nu": nu_spec, "cost": cost_spec},
            "solution": solution,
        });
        return emit(args.out.as_ref(), &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()));
    }

    let mu_d = discretized(&mu, ndisc)?;
    let nu_d = discretized(&nu, ndisc)?;
    let cost = CostFn::parse(&cost_spec, Some((&mu_d, &nu_d)))?;
    let report: SolveReport = match method.as_str() {
        "fw" => {
            let qp = build_qp(&mu_d, &nu_d, &cost, DEFAULT_QP_LIMIT)?;
            let cert = convexity_certificate(&qp);
            let init = TransportPlan::independent(&mu_d, &nu_d)?;
            let mut report = solve_frank_wolfe(&qp, &init, gap_tol, max_iter)?;
            report.certificate = Some(cert);
            report
        }
        "swap" | "exact-perm" => {
            let (xs, _) = mu_d.atoms()?;
            let (ys, _) = nu_d.atoms()?;
            if method == "exact-perm" {
                solve_exhaustive(&xs, &ys, &cost)?
            } else {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                let mut best: Option<SolveReport> = None;
                for r in 0..restarts.max(1) {
                    let mut perm: Vec<usize> = (0..xs.len()).collect();
                    if r > 0 {
                        perm.shuffle(&mut rng);
                    }
                    let cand = solve_pair_exchange(&xs, &ys, &cost, &perm, max_iter)?;
                    if best.as_ref().map_or(true, |b| cand.objective < b.objective) {
                        best = Some(cand);
                    }
                }
                best.unwrap()
            }
        }
        "grid" => grid_search(&mu_d, &nu_d, &cost, h)?,
        other => return Err(Error::Parse(format!("unknown method `{other}`"))),
    };

    let doc = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "config": {
            "method": method, "mu": mu_spec, "nu": nu_spec, "cost": cost_spec,
            "ndisc": ndisc, "restarts": restarts,
        },
        "report": report,
    });
    let json = format!("{}\n", serde_json::to_string_pretty(&doc).unwrap());
    if let Some(out) = &args.out {
        std::fs::write(out, &json)?;
        let mut plan_path = out.clone().into_os_string();
        plan_path.push(".plan.csv");
        std::fs::write(plan_path, report.plan.to_csv())?;
    } else {
        print!("{json}");
    }
    Ok(())
}

/// Documented default instance set for every verification suite.
fn suite_checks(suite: &str, seed: u64) -> Result<Vec<CheckReport>> {
    let u01 = Marginal::uniform(0.0, 1.0)?;
    let u_sym = Marginal::uniform(-0.5, 0.5)?;
    let n01 = Marginal::normal(0.0, 1.0)?;
    let exp1 = Marginal::exponential(1.0)?;
    let mut reports = Vec::new();
    match suite {
        "diamond" => {
            reports.push(check_diamond_rectangular(&u01, &u01, 30)?);
            reports.push(check_diamond_rectangular(&n01, &exp1, 30)?);
            let tiny_mu = Marginal::discrete(vec![0.0, 1.0], vec![0.5, 0.5])?;
            let tiny_nu = Marginal::discrete(vec![-1.0, 0.0, 2.0], vec![0.3, 0.4, 0.3])?;
            reports.push(check_diamond_rectangular(&tiny_mu, &tiny_nu, 0)?);
            for (mu_spec, nu_spec) in table2_rows() {
                reports.push(check_inequality_ranking(
                    &Marginal::parse(mu_spec)?,
                    &Marginal::parse(nu_spec)?,
                    20,
                )?);
            }
        }
        "submodular" => {
            let kendall = CostFn::kendall();
            reports.push(check_comonotone_submodular(&u01, &exp1, &kendall, 20)?);
            reports.push(check_comonotone_submodular(&u01, &u01, &kendall.scaled(-1.0), 20)?);
            let cov = CostFn::covariance();
            reports.push(check_comonotone_submodular(&n01, &n01, &cov, 20)?);
            reports.push(check_comonotone_submodular(&exp1, &n01, &cov.scaled(-1.0), 20)?);
            let max_xy = CostFn::custom(
                "max_mismatch",
                CostKind::TypeXy,
                true,
                Arc::new(|x: f64, y: f64, xp: f64, yp: f64| (x - y).abs().max((xp - yp).abs())),
            );
            reports.push(check_comonotone_submodular(&u01, &u01, &max_xy, 20)?);
            let bilinear = CostFn::custom(
                "neg_bilinear",
                CostKind::TypeXy,
                true,
                Arc::new(|x, y, xp, yp| -(x * y + xp * yp)),
            );
            reports.push(check_comonotone_submodular(&exp1, &u01, &bilinear, 20)?);
        }
        "gw" => {
            let h_max: Bivariate = Arc::new(|u: f64, v: f64| u.max(v));
            reports.push(check_gw_location_scale(&exp1, 1.0, 0.0, h_max.clone(), "max", 20)?);
            reports.push(check_gw_location_scale(&exp1, -1.0, 0.0, h_max.clone(), "max", 20)?);
            let h_negprod: Bivariate = Arc::new(|u: f64, v: f64| -u * v);
            reports.push(check_gw_location_scale(&n01, 1.0, 0.0, h_negprod, "negprod", 20)?);
            let h_sq: Bivariate = Arc::new(|u: f64, v: f64| (u - v) * (u - v));
            reports.push(check_gw_location_scale(&u01, 2.0, 1.0, h_sq, "sqdiff", 20)?);
        }
        "vtransport" => {
            let f_id: Univariate = Arc::new(|d| d);
            let g_prod: Bivariate = Arc::new(|y: f64, yp: f64| y * yp);
            reports.push(check_v_transport(&u01, f_id.clone(), g_prod.clone(), ("id", "prod"), 30)?);
            reports.push(check_v_transport(&exp1, f_id.clone(), g_prod, ("id", "prod"), 30)?);
            let g_coprod: Bivariate = Arc::new(|y: f64, yp: f64| (1.0 - y) * (1.0 - yp));
            reports.push(check_v_transport(&u01, f_id, g_coprod, ("id", "coprod"), 30)?);
        }
        "kernel" => {
            reports.push(check_diamond_kernel(&u_sym, &u_sym, KernelSpec::Exp { alpha: 0.5 }, 20)?);
            reports.push(check_diamond_kernel(
                &u_sym,
                &u_sym,
                KernelSpec::Power { beta: 4.0, gamma: 1.0 },
                20,
            )?);
            reports.push(check_diamond_kernel(
                &u_sym,
                &u_sym,
                KernelSpec::StretchedExp { alpha: 0.3, p: 0.75 },
                20,
            )?);
            // out of the admissible range: reported, but does not fail the run
            reports.push(check_diamond_kernel(&u_sym, &u_sym, KernelSpec::Exp { alpha: 3.0 }, 20)?);
        }
        "qrect" => {
            let u11 = Marginal::uniform(-1.0, 1.0)?;
            reports.push(check_qrect_symmetric(&u11, &u11, 1.5, 20, 50, seed)?);
            reports.push(check_qrect_symmetric(&u11, &u_sym, 2.0, 20, 50, seed)?);
        }
        "separability" => {
            let mu = Marginal::discrete(vec![0.0, 1.0], vec![0.5, 0.5])?;
            let nu = Marginal::discrete(vec![0.0, 1.0, 2.0], vec![0.3, 0.4, 0.3])?;
            reports.push(check_separability(&mu, &nu, &CostFn::quadratic_regularizer(&mu, &nu)?)?);
            reports.push(check_separability(&mu, &nu, &CostFn::rectangular())?);
            let (b3_mu, b3_nu) = example_b3_marginals();
            reports.push(check_separability(&b3_mu, &b3_nu, &example_b3_cost())?);
        }
        "gamma" => {
            reports.push(gamma_sweep(&u_sym, &u_sym, &[0.3, 2.0, 6.0], 50, 3, seed)?);
        }
        "all" => {
            for s in [
                "diamond", "submodular", "gw", "vtransport", "kernel", "qrect", "separability",
                "gamma",
            ] {
                reports.extend(suite_checks(s, seed)?);
            }
        }
        other => return Err(Error::Parse(format!("unknown suite `{other}`"))),
    }
    Ok(reports)
}

/// Two-point x four-point sparse-cost instance whose marginal-averaged cost
/// depends on y only, yet the independent coupling is not a minimizer.
fn example_b3_marginals() -> (Marginal, Marginal) {
    let mu = Marginal::discrete(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
    let nu = Marginal::discrete(vec![0.0, 1.0, 2.0, 3.0], vec![0.25; 4]).unwrap();
    (mu, nu)
}

fn example_b3_cost() -> CostFn {
    CostFn::custom(
        "sparse_table",
        CostKind::TypeXy,
        true,
        Arc::new(|x, y, xp, yp| {
            if x != xp || y != yp {
                return 0.0;
            }
            match (x as i64, y as i64) {
                (1, 0) | (0, 0) | (1, 2) | (0, 2) => 1.0,
                (1, 1) | (0, 1) => -1.0,
                _ => 0.0,
            }
        }),
    )
}

fn cmd_verify(args: VerifyArgs, cfg: &Config) -> Result<bool> {
    let suite = resolve(args.suite, cfg, "suite", "all".to_string())?;
    let seed = resolve(args.seed, cfg, "seed", 0)?;
    let reports = suite_checks(&suite, seed)?;
    let mut body = String::new();
    let head = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "config": {"suite": suite},
        "checks": reports.len(),
    });
    writeln!(body, "{}", serde_json::to_string(&head).unwrap()).unwrap();
    let mut all_ok = true;
    for report in &reports {
        all_ok &= report.status != CheckStatus::Fail;
        writeln!(body, "{}", serde_json::to_string(report).unwrap()).unwrap();
    }
    emit(args.out.as_ref(), &body)?;
    Ok(all_ok)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = Config::load(cli.config.as_ref())?;
    match cli.command {
        Command::Couple(args) => cmd_couple(args, &cfg).map(|_| true),
        Command::Table2(args) => cmd_table2(args, &cfg).map(|_| true),
        Command::Solve(args) => cmd_solve(args, &cfg).map(|_| true),
        Command::Verify(args) => cmd_verify(args, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Parse(_) | Error::BadParams(_) | Error::UnknownCost(_) => 2,
                _ => 3,
            };
            ExitCode::from(code)
        }
    }
}
