//! Numerical verification harness: each optimality theorem with a testable
//! consequence becomes a named check comparing the predicted coupling
//! against the full closed-form coupling panel and, on tiny instances, a
//! brute-force grid oracle.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::costs::{Bivariate, CostFn};
use crate::couplings::{to_plan, Copula, CouplingSpec, TransportPlan};
use crate::error::{Error, Result};
use crate::estimator::{eta_association, qcost_exact};
use crate::marginals::Marginal;
use crate::oracle::grid_search;
use crate::solver::{build_qp, convexity_certificate, solve_frank_wolfe, solve_pair_exchange};

/// Tolerance for "predicted coupling is minimal" panel comparisons.
pub const PANEL_TOL: f64 = 1e-9;

pub type Univariate = std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// A numeric precondition of the theorem failed on this instance, so no
    /// optimality conclusion is asserted (distinct from a counterexample).
    HypothesisViolated,
}

/// Pass/fail evidence for one theorem check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: String,
    pub status: CheckStatus,
    pub instance: String,
    pub seed: u64,
    /// Named numbers the status was decided from (panel objectives, gaps,
    /// tolerances).
    pub details: BTreeMap<String, f64>,
}

impl CheckReport {
    fn new(check_id: &str, instance: String) -> Self {
        CheckReport {
            check_id: check_id.into(),
            status: CheckStatus::Fail,
            instance,
            seed: 0,
            details: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }

    fn put(&mut self, key: &str, value: f64) {
        self.details.insert(key.into(), value);
    }
}

/// The eight closed-form couplings every check compares against.
pub fn coupling_panel() -> Vec<(&'static str, Copula)> {
    vec![
        ("com", Copula::Comonotone),
        ("ant", Copula::Antimonotone),
        ("ind", Copula::Independent),
        ("x(0.25)", Copula::X { lambda: 0.25 }),
        ("x(0.5)", Copula::X { lambda: 0.5 }),
        ("x(0.75)", Copula::X { lambda: 0.75 }),
        ("v", Copula::V),
        ("dia", Copula::Diamond),
    ]
}

/// Exact objective of every panel coupling on the discretized marginals.
pub fn panel_objectives(
    mu_d: &Marginal,
    nu_d: &Marginal,
    c: &CostFn,
) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (name, copula) in coupling_panel() {
        let spec = CouplingSpec::new(copula, mu_d.clone(), nu_d.clone())?;
        let plan = to_plan(&spec, mu_d, nu_d)?;
        out.insert(name.to_string(), qcost_exact(&plan, c)?);
    }
    Ok(out)
}

fn discretized(m: &Marginal, n_disc: usize) -> Result<Marginal> {
    if m.is_discrete() {
        let (p, w) = m.atoms()?;
        Marginal::discrete(p, w)
    } else {
        m.discretize(n_disc)
    }
}

/// Grid-oracle comparison when the instance is small enough: returns the
/// oracle minimum and the grid-resolution tolerance, or None when the free
/// dimension exceeds the oracle's cap.
fn grid_oracle(mu_d: &Marginal, nu_d: &Marginal, c: &CostFn, h: f64) -> Result<Option<(f64, f64)>> {
    let (xs, _) = mu_d.atoms()?;
    let (ys, _) = nu_d.atoms()?;
    let free_dim = (xs.len() - 1) * (ys.len() - 1);
    if free_dim > 4 || free_dim == 0 {
        return Ok(None);
    }
    let report = grid_search(mu_d, nu_d, c, h)?;
    let mut max_abs = 0.0_f64;
    for &x in &xs {
        for &y in &ys {
            for &xp in &xs {
                for &yp in &ys {
                    max_abs = max_abs.max(c.eval(x, y, xp, yp).abs());
                }
            }
        }
    }
    // moving each free coordinate by < h perturbs at most 4 entries of
    // mass h each; the bilinear objective moves by at most 8 |C| h dim
    let tol = 8.0 * max_abs * h * free_dim as f64;
    Ok(Some((report.objective, tol)))
}

/// Resolve the panel-minimality verdict for the coupling named `expect`.
fn judge_panel(report: &mut CheckReport, objectives: &BTreeMap<String, f64>, expect: &str) -> bool {
    for (name, v) in objectives {
        report.put(&format!("objective_{name}"), *v);
    }
    let target = objectives[expect];
    let ok = objectives.values().all(|&v| target <= v + PANEL_TOL);
    report.put("panel_gap", objectives.values().cloned().fold(f64::INFINITY, f64::min) - target);
    ok
}

/// Theorem: for the rectangular cost `|(x-x')(y-y')|` the diamond transport
/// minimizes the QOT objective for arbitrary marginals.
pub fn check_diamond_rectangular(mu: &Marginal, nu: &Marginal, n_disc: usize) -> Result<CheckReport> {
    let mut report = CheckReport::new(
        "diamond_rectangular",
        format!("mu={mu:?}, nu={nu:?}, n_disc={n_disc}"),
    );
    let c = CostFn::rectangular();
    let mu_d = discretized(mu, n_disc)?;
    let nu_d = discretized(nu, n_disc)?;
    let objectives = panel_objectives(&mu_d, &nu_d, &c)?;
    let mut ok = judge_panel(&mut report, &objectives, "dia");
    if let Some((oracle, tol)) = grid_oracle(&mu_d, &nu_d, &c, 0.005)? {
        report.put("grid_oracle", oracle);
        report.put("grid_tol", tol);
        ok &= objectives["dia"] <= oracle + tol;
    }
    report.status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
    Ok(report)
}

/// Ranking check for the benchmark cost `(|x-x'| + |y-y'|)^2`: the diamond
/// transport has the smallest exact objective in the coupling panel.
pub fn check_inequality_ranking(mu: &Marginal, nu: &Marginal, n_disc: usize) -> Result<CheckReport> {
    let mut report = CheckReport::new(
        "inequality_ranking",
        format!("mu={mu:?}, nu={nu:?}, n_disc={n_disc}"),
    );
    let c = CostFn::inequality(1.0, 1.0)?;
    let mu_d = discretized(mu, n_disc)?;
    let nu_d = discretized(nu, n_disc)?;
    let objectives = panel_objectives(&mu_d, &nu_d, &c)?;
    let ok = judge_panel(&mut report, &objectives, "dia");
    report.status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Modularity {
    Submodular,
    Supermodular,
    Neither,
}

/// Classify the two pairwise maps `(x,y) -> c(x,y,x0',y0')` and
/// `(x',y') -> c(x0,y0,x',y')` on the support grids.
fn pairwise_modularity(c: &CostFn, xs: &[f64], ys: &[f64]) -> Modularity {
    let mut sub = true;
    let mut sup = true;
    let mut scan = |increment: &mut dyn FnMut(usize, usize, usize, usize) -> f64| {
        for i in 0..xs.len() - 1 {
            for j in 0..ys.len() - 1 {
                for a in 0..xs.len() {
                    for b in 0..ys.len() {
                        let d = increment(i, j, a, b);
                        if d > 1e-12 {
                            sub = false;
                        }
                        if d < -1e-12 {
                            sup = false;
                        }
                    }
                }
            }
        }
    };
    scan(&mut |i, j, a, b| {
        c.eval(xs[i], ys[j], xs[a], ys[b]) + c.eval(xs[i + 1], ys[j + 1], xs[a], ys[b])
            - c.eval(xs[i], ys[j + 1], xs[a], ys[b])
            - c.eval(xs[i + 1], ys[j], xs[a], ys[b])
    });
    scan(&mut |i, j, a, b| {
        c.eval(xs[a], ys[b], xs[i], ys[j]) + c.eval(xs[a], ys[b], xs[i + 1], ys[j + 1])
            - c.eval(xs[a], ys[b], xs[i], ys[j + 1])
            - c.eval(xs[a], ys[b], xs[i + 1], ys[j])
    });
    match (sub, sup) {
        (true, _) => Modularity::Submodular,
        (_, true) => Modularity::Supermodular,
        _ => Modularity::Neither,
    }
}

/// Theorem: when both pairwise maps of `c` are submodular the comonotone
/// coupling minimizes; when both are supermodular the antimonotone does.
/// The direction is certified on the discretized support grid first; a cost
/// that is neither reports `hypothesis_violated`.
pub fn check_comonotone_submodular(
    mu: &Marginal,
    nu: &Marginal,
    c: &CostFn,
    n_disc: usize,
) -> Result<CheckReport> {
    let mut report = CheckReport::new(
        "comonotone_submodular",
        format!("mu={mu:?}, nu={nu:?}, cost={}, n_disc={n_disc}", c.id),
    );
    let mu_d = discretized(mu, n_disc)?;
    let nu_d = discretized(nu, n_disc)?;
    let (xs, _) = mu_d.atoms()?;
    let (ys, _) = nu_d.atoms()?;
    let expect = match pairwise_modularity(c, &xs, &ys) {
        Modularity::Submodular => "com",
        Modularity::Supermodular => "ant",
        Modularity::Neither => {
            report.status = CheckStatus::HypothesisViolated;
            return Ok(report);
        }
    };
    report.put("expect_com", if expect == "com" { 1.0 } else { 0.0 });
    let objectives = panel_objectives(&mu_d, &nu_d, c)?;
    let mut ok = judge_panel(&mut report, &objectives, expect);
    if let Some((oracle, tol)) = grid_oracle(&mu_d, &nu_d, c, 0.01)? {
        report.put("grid_oracle", oracle);
        report.put("grid_tol", tol);
        ok &= objectives[expect] <= oracle + tol;
    }
    report.status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
    Ok(report)
}

/// Theorem: for `c = h(|x-x'|, |y-y'|)` with submodular `h` and `nu` the law
/// of `a X + b`, the comonotone (`a > 0`) or antimonotone (`a < 0`) coupling
/// minimizes; for symmetric `mu` the two tie.
pub fn check_gw_location_scale(
    mu: &Marginal,
    a: f64,
    b: f64,
    h: Bivariate,
    h_name: &str,
    n_disc: usize,
) -> Result<CheckReport> {
    let mut report = CheckReport::new(
        "gw_location_scale",
        format!("mu={mu:?}, nu=law({a}X+{b}), h={h_name}, n_disc={n_disc}"),
    );
    if a == 0.0 {
        return Err(Error::BadParams("location-scale transform needs a != 0".into()));
    }
    let mu_d = discretized(mu, n_disc)?;
    let (xs, ws) = mu_d.atoms()?;
    let mut pairs: Vec<(f64, f64)> = xs.iter().zip(&ws).map(|(&x, &w)| (a * x + b, w)).collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let nu_d = Marginal::discrete(
        pairs.iter().map(|p| p.0).collect(),
        pairs.iter().map(|p| p.1).collect(),
    )?;
    let (ys, _) = nu_d.atoms()?;

    // hypothesis gate: h submodular on the grid of attained distances
    let mut dists: Vec<f64> = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        for &xp in &xs[i..] {
            dists.push((x - xp).abs());
        }
    }
    for (i, &y) in ys.iter().enumerate() {
        for &yp in &ys[i..] {
            dists.push((y - yp).abs());
        }
    }
    dists.sort_by(|p, q| p.partial_cmp(q).unwrap());
    dists.dedup();
    if !crate::costs::is_submodular_on_grid(&|u, v| h(u, v), &dists) {
        report.status = CheckStatus::HypothesisViolated;
        return Ok(report);
    }

    let hh = h.clone();
    let c = CostFn::custom(
        &format!("gw_{h_name}"),
        crate::costs::CostKind::TypeXx,
        true,
        std::sync::Arc::new(move |x, y, xp, yp| hh((x - xp).abs(), (y - yp).abs())),
    );

    let expect = if a > 0.0 { "com" } else { "ant" };
    let objectives = panel_objectives(&mu_d, &nu_d, &c)?;
    let mut ok = judge_panel(&mut report, &objectives, expect);
    if let Some((oracle, tol)) = grid_oracle(&mu_d, &nu_d, &c, 0.01)? {
        report.put("grid_oracle", oracle);
        report.put("grid_tol", tol);
        ok &= objectives[expect] <= oracle + tol;
    }
    if mu_d.is_symmetric(1e-9).0 {
        let tie = (objectives["com"] - objectives["ant"]).abs();
        report.put("com_ant_tie_gap", tie);
        ok &= tie <= 1e-9;
    }
    report.status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
    Ok(report)
}

/// The coupling `(Q_mu(U), Q_nu(1 - |2U - 1|))`: the reflection of the
/// V-transport along the second marginal, with tent-shaped support. Its
/// copula is `C(u, v) = min(u, v/2) + max(0, u - 1 + v/2)`.
pub fn tent_plan(mu_d: &Marginal, nu_d: &Marginal) -> Result<TransportPlan> {
    let (xs, wx) = mu_d.atoms()?;
    let (ys, wy) = nu_d.atoms()?;
    let cdf = |u: f64, v: f64| u.min(v / 2.0) + (u - 1.0 + v / 2.0).max(0.0);
    let cum = |w: &[f64]| -> Vec<f64> {
        let mut acc = 0.0;
        w.iter()
            .map(|&x| {
                acc += x;
                acc.min(1.0)
            })
            .collect()
    };
    let cu = cum(&wx);
    let cv = cum(&wy);
    let (n, m) = (xs.len(), ys.len());
    let mut mass = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            let (u0, u1) = (if i == 0 { 0.0 } else { cu[i - 1] }, cu[i]);
            let (v0, v1) = (if j == 0 { 0.0 } else { cv[j - 1] }, cv[j]);
            mass[i * m + j] = (cdf(u1, v1) - cdf(u0, v1) - cdf(u1, v0) + cdf(u0, v0)).max(0.0);
        }
    }
    TransportPlan::new(xs, ys, wx, wy, mass)
}

/// Theorem: for `mu = U(a, b)` and `c = f(|x-x'|) g(y, y')` with `f`
/// nonnegative increasing and `g` supermodular, the minimizer concentrates
/// the large values of `g` at the center of the `x`-range: the tent
/// transport when `g` is increasing in both arguments (vanishing at `-inf`)
/// and the V-transport when `g` is decreasing (vanishing at `+inf`).
pub fn check_v_transport(
    nu: &Marginal,
    f: Univariate,
    g: Bivariate,
    names: (&str, &str),
    n_disc: usize,
) -> Result<CheckReport> {
    let mu = Marginal::uniform(0.0, 1.0)?;
    let mut report = CheckReport::new(
        "v_transport",
        format!("mu=U(0,1), nu={nu:?}, f={}, g={}, n_disc={n_disc}", names.0, names.1),
    );
    let mu_d = discretized(&mu, n_disc)?;
    let nu_d = discretized(nu, n_disc)?;
    let (xs, _) = mu_d.atoms()?;
    let (ys, _) = nu_d.atoms()?;

    // hypothesis gates: f increasing and nonnegative on attained distances,
    // g monotone in both arguments and supermodular on the nu-grid
    let mut dists: Vec<f64> = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        for &xp in &xs[i..] {
            dists.push((xp - x).abs());
        }
    }
    dists.sort_by(|p, q| p.partial_cmp(q).unwrap());
    dists.dedup();
    let f_ok = dists.iter().all(|&d| f(d) >= 0.0)
        && dists.windows(2).all(|w| f(w[0]) <= f(w[1]) + 1e-12);
    let g_increasing = ys.windows(2).all(|w| {
        ys.iter().all(|&z| {
            g(w[0], z) <= g(w[1], z) + 1e-12 && g(z, w[0]) <= g(z, w[1]) + 1e-12
        })
    });
    let g_decreasing = ys.windows(2).all(|w| {
        ys.iter().all(|&z| {
            g(w[1], z) <= g(w[0], z) + 1e-12 && g(z, w[1]) <= g(z, w[0]) + 1e-12
        })
    });
    let g_super = crate::costs::is_submodular_on_grid(&|y, yp| -g(y, yp), &ys);
    if !f_ok || !(g_increasing || g_decreasing) || !g_super {
        report.status = CheckStatus::HypothesisViolated;
        return Ok(report);
    }
    report.put("g_increasing", if g_increasing { 1.0 } else { 0.0 });

    let gg = g.clone();
    let c = CostFn::custom(
        &format!("v_{}_{}", names.0, names.1),
        crate::costs::CostKind::TypeXy,
        true,
        std::sync::Arc::new(move |x, y, xp, yp| f((x - xp).abs()) * gg(y, yp)),
    );

    let mut objectives = panel_objectives(&mu_d, &nu_d, &c)?;
    objectives.insert("tent".into(), qcost_exact(&tent_plan(&mu_d, &nu_d)?, &c)?);
    let expect = if g_increasing { "tent" } else { "v" };
    let mut ok = judge_panel(&mut report, &objectives, expect);
    if let Some((oracle, tol)) = grid_oracle(&mu_d, &nu_d, &c, 0.01)? {
        report.put("grid_oracle", oracle);
        report.put("grid_tol", tol);
        ok &= objectives[expect] <= oracle + tol;
    }
    report.status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
    Ok(report)
}

/// The kernel families of the diamond-optimality theorem for
/// `c = phi(|x-x'|^2) phi(|y-y'|^2)` with completely monotone `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `phi(u) = exp(-alpha u)`, valid for `alpha` in (0, 1/2].
    Exp { alpha: f64 },
    /// `phi(u) = (beta + u)^{-gamma}`, valid for `beta > 2 gamma + 1` on
    /// supports within [-1/2, 1/2].
    Power { beta: f64, gamma: f64 },
    /// `phi(u) = exp(-alpha u^p)`, valid for `p` in (1/2, 1) and
    /// `alpha <= (2p-1) / (2p (4L^2)^p)` on supports within [-L, L].
    StretchedExp { alpha: f64, p: f64 },
}

/// Theorem: for symmetric marginals and a kernel cost satisfying the
/// complete-monotonicity condition, the QP is convex and the diamond
/// transport is the minimizer. Confirms the psd certificate, Frank–Wolfe
/// convergence to the diamond objective, and panel minimality.
pub fn check_diamond_kernel(
    mu: &Marginal,
    nu: &Marginal,
    phi: KernelSpec,
    n_disc: usize,
) -> Result<CheckReport> {
    let mut report = CheckReport::new(
        "diamond_kernel",
        format!("mu={mu:?}, nu={nu:?}, phi={phi:?}, n_disc={n_disc}"),
    );
    if !mu.is_symmetric(1e-9).0 || !nu.is_symmetric(1e-9).0 {
        return Err(Error::NotSymmetric(format!("mu={mu:?}, nu={nu:?}")));
    }
    let mu_d = discretized(mu, n_disc)?;
    let nu_d = discretized(nu, n_disc)?;
    let (xs, _) = mu_d.atoms()?;
    let (ys, _) = nu_d.atoms()?;
    let radius = xs
        .iter()
        .chain(ys.iter())
        .fold(0.0_f64, |acc, &v| acc.max(v.abs()));

    let (c, in_range) = match phi {
        KernelSpec::Exp { alpha } => (CostFn::gauss_kernel(alpha)?, alpha > 0.0 && alpha <= 0.5),
        KernelSpec::Power { beta, gamma } => (
            CostFn::power_kernel(beta, gamma)?,
            beta > 2.0 * gamma + 1.0 && radius <= 0.5 + 1e-12,
        ),
        KernelSpec::StretchedExp { alpha, p } => {
            let bound = (2.0 * p - 1.0) / (2.0 * p * (4.0 * radius * radius).powf(p));
            (CostFn::stretched_exp_kernel(alpha, p)?, alpha <= bound)
        }
    };
    if !in_range {
        report.status = CheckStatus::HypothesisViolated;
        return Ok(report);
    }

    let qp = build_qp(&mu_d, &nu_d, &c, crate::solver::DEFAULT_QP_LIMIT)?;
    let cert = convexity_certificate(&qp);
    report.put("min_eigenvalue", cert.min_eigenvalue);
    report.put("psd", if cert.psd { 1.0 } else { 0.0 });

    let init = TransportPlan::independent(&mu_d, &nu_d)?;
    let fw = solve_frank_wolfe(&qp, &init, 1e-10, 10_000)?;
    let dia = to_plan(
        &CouplingSpec::new(Copula::Diamond, mu_d.clone(), nu_d.clone())?,
        &mu_d,
        &nu_d,
    )?;
    let dia_obj = qcost_exact(&dia, &c)?;
    report.put("fw_objective", fw.objective);
    report.put("dia_objective", dia_obj);
    report.put("fw_iterations", fw.iterations as f64);

    let objectives = panel_objectives(&mu_d, &nu_d, &c)?;
    let panel_ok = judge_panel(&mut report, &objectives, "dia");
    let ok = cert.psd && (fw.objective - dia_obj).abs() <= 1e-6 && panel_ok;
    report.status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
    Ok(report)
}

/// Theorem: for `q` in (1, 2] and symmetric marginals the diamond transport
/// minimizes `|(x-x')(y-y')|^q`. Compared against the panel and the best of
/// seeded pair-exchange restarts (Monge upper bounds).
pub fn check_qrect_symmetric(
    mu: &Marginal,
    nu: &Marginal,
    q: f64,
    n_disc: usize,
    restarts: usize,
    seed: u64,
) -> Result<CheckReport> {
    if q == 1.0 {
        return check_diamond_rectangular(mu, nu, n_disc);
    }
    let mut report = CheckReport::new(
        "qrect_symmetric",
        format!("mu={mu:?}, nu={nu:?}, q={q}, n_disc={n_disc}, restarts={restarts}"),
    );
    report.seed = seed;
    if !mu.is_symmetric(1e-9).0 || !nu.is_symmetric(1e-9).0 {
        return Err(Error::NotSymmetric(format!("mu={mu:?}, nu={nu:?}")));
    }
    if !(1.0..=2.0).contains(&q) {
        report.status = CheckStatus::HypothesisViolated;
        return Ok(report);
    }
    let c = CostFn::q_rectangular(q)?;
    let mu_d = discretized(mu, n_disc)?;
    let nu_d = discretized(nu, n_disc)?;
    let objectives = panel_objectives(&mu_d, &nu_d, &c)?;
    let mut ok = judge_panel(&mut report, &objectives, "dia");

    // Monge upper bounds from multi-restart local search on equal-size
    // uniform discretizations
    let xs = mu.discretize(n_disc)?;
    let ys = nu.discretize(n_disc)?;
    let (xs, _) = xs.atoms()?;
    let (ys, _) = ys.atoms()?;
    if xs.len() == ys.len() {
        let n = xs.len();
        let mut best = f64::INFINITY;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        for _ in 0..restarts {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let r = solve_pair_exchange(&xs, &ys, &c, &perm, 10_000)?;
            best = best.min(r.objective);
        }
        report.put("best_monge_restart", best);
        ok &= objectives["dia"] <= best + PANEL_TOL;
    }
    if let Some((oracle, tol)) = grid_oracle(&mu_d, &nu_d, &c, 0.01)? {
        report.put("grid_oracle", oracle);
        report.put("grid_tol", tol);
        ok &= objectives["dia"] <= oracle + tol;
    }
    report.status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
    Ok(report)
}

/// Criterion: the independent coupling can only be optimal when the
/// marginal-averaged cost `c~(x,y)` separates as `phi(x) + psi(y)`.
/// Computes `c~` exactly and tests all double differences, cross-checked by
/// the row/column-mean residual.
pub fn check_separability(mu_d: &Marginal, nu_d: &Marginal, c: &CostFn) -> Result<CheckReport> {
    let mut report = CheckReport::new(
        "separability",
        format!("mu={mu_d:?}, nu={nu_d:?}, cost={}", c.id),
    );
    let (xs, wx) = mu_d.atoms()?;
    let (ys, wy) = nu_d.atoms()?;
    let ctilde = |x: f64, y: f64| -> f64 {
        let mut total = 0.0;
        for (xp, wxp) in xs.iter().zip(&wx) {
            for (yp, wyp) in ys.iter().zip(&wy) {
                total += 0.5 * (c.eval(x, y, *xp, *yp) + c.eval(*xp, *yp, x, y)) * wxp * wyp;
            }
        }
        total
    };
    let grid: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| ys.iter().map(|&y| ctilde(x, y)).collect())
        .collect();
    let mut max_dd = 0.0_f64;
    for i in 0..xs.len() {
        for j in 0..ys.len() {
            let dd = grid[i][j] - grid[i][0] - grid[0][j] + grid[0][0];
            max_dd = max_dd.max(dd.abs());
        }
    }
    let separable = max_dd <= 1e-9;

    // independent cross-check: subtract row and column means
    let n = xs.len() as f64;
    let m = ys.len() as f64;
    let row_means: Vec<f64> = grid.iter().map(|r| r.iter().sum::<f64>() / m).collect();
    let col_means: Vec<f64> = (0..ys.len())
        .map(|j| grid.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let grand = row_means.iter().sum::<f64>() / n;
    let mut max_resid = 0.0_f64;
    for i in 0..xs.len() {
        for j in 0..ys.len() {
            max_resid = max_resid.max((grid[i][j] - row_means[i] - col_means[j] + grand).abs());
        }
    }
    let separable_by_means = max_resid <= 1e-9;

    report.put("max_double_difference", max_dd);
    report.put("max_mean_residual", max_resid);
    report.put("separable", if separable { 1.0 } else { 0.0 });
    report.status = if separable == separable_by_means { CheckStatus::Pass } else { CheckStatus::Fail };
    Ok(report)
}

/// Trend check for the cost `|y-y'| exp(-gamma |x-x'|)`: its maximizer
/// interpolates from the diamond transport (small `gamma`) to the
/// independent coupling (large `gamma`).
///
/// Marginals are discretized to 10 distinct atoms, each replicated over
/// `n_disc / 10` slots so the pair-exchange maximizer can realize non-Monge
/// aggregated plans. Verifies the TV distance to the diamond plan increases
/// and the eta association decreases along the sweep, and (for location-
/// scale pairs) the comonotone/antimonotone minimizer property.
pub fn gamma_sweep(
    mu: &Marginal,
    nu: &Marginal,
    gammas: &[f64],
    n_disc: usize,
    restarts: usize,
    seed: u64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new(
        "gamma_sweep",
        format!("mu={mu:?}, nu={nu:?}, gammas={gammas:?}, n_disc={n_disc}, restarts={restarts}"),
    );
    report.seed = seed;
    if gammas.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::BadParams("gamma values must be positive".into()));
    }
    let atoms = 10.min(n_disc);
    let reps = (n_disc / atoms).max(1);
    let mu_d = discretized(mu, atoms)?;
    let nu_d = discretized(nu, atoms)?;
    let (xs_a, _) = mu_d.atoms()?;
    let (ys_a, _) = nu_d.atoms()?;
    let slots_x: Vec<f64> = xs_a.iter().flat_map(|&x| std::iter::repeat(x).take(reps)).collect();
    let slots_y: Vec<f64> = ys_a.iter().flat_map(|&y| std::iter::repeat(y).take(reps)).collect();
    let n = slots_x.len();

    let dia = to_plan(
        &CouplingSpec::new(Copula::Diamond, mu_d.clone(), nu_d.clone())?,
        &mu_d,
        &nu_d,
    )?;
    let mut tvs = Vec::new();
    let mut etas = Vec::new();
    for (gi, &gamma) in gammas.iter().enumerate() {
        let c = CostFn::linear_exponential(gamma)?;
        let neg = c.scaled(-1.0);
        let mut best_obj = f64::INFINITY;
        let mut best_perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(gi as u64));
        for r in 0..restarts {
            let mut perm: Vec<usize> = (0..n).collect();
            if r > 0 {
                perm.shuffle(&mut rng);
            }
            let rep = solve_pair_exchange(&slots_x, &slots_y, &neg, &perm, 10_000)?;
            if rep.objective < best_obj {
                best_obj = rep.objective;
                best_perm = (0..n)
                    .map(|i| (0..n).find(|&j| rep.plan.at(i, j) > 0.0).unwrap())
                    .collect();
            }
        }
        // aggregate the slot permutation to the distinct-atom grid
        let mut mass = vec![0.0; atoms * atoms];
        for (i, &j) in best_perm.iter().enumerate() {
            let ai = i / reps;
            let aj = slots_y[j];
            let col = ys_a.iter().position(|&v| v == aj).unwrap();
            mass[ai * atoms + col] += 1.0 / n as f64;
        }
        let (pw, ww) = mu_d.atoms()?;
        let (qw, vw) = nu_d.atoms()?;
        let plan = TransportPlan::new(pw, qw, ww, vw, mass)?;
        let tv = plan.tv_distance(&dia)?;
        let eta = eta_association(&plan)?;
        report.put(&format!("tv_to_diamond_gamma_{gamma}"), tv);
        report.put(&format!("eta_gamma_{gamma}"), eta);
        report.put(&format!("max_objective_gamma_{gamma}"), -best_obj);
        tvs.push(tv);
        etas.push(eta);
    }
    let mut ok = tvs.windows(2).all(|w| w[1] >= w[0] - 1e-12)
        && etas.windows(2).all(|w| w[1] <= w[0] + 1e-12);

    // location-scale pairs additionally satisfy the com/ant minimizer
    // property for the (minimized) cost
    if let Some(a) = location_scale_factor(&xs_a, &ys_a) {
        let expect = if a > 0.0 { "com" } else { "ant" };
        let c = CostFn::linear_exponential(gammas[0])?;
        let objectives = panel_objectives(&mu_d, &nu_d, &c)?;
        let target = objectives[expect];
        let min_ok = objectives.values().all(|&v| target <= v + PANEL_TOL);
        report.put("location_scale_min_ok", if min_ok { 1.0 } else { 0.0 });
        ok &= min_ok;
    }
    report.status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
    Ok(report)
}

/// Detect `ys = a * xs + b` (elementwise after sorting); returns `a`.
pub(crate) fn location_scale_factor(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let check = |a: f64, ys_ord: &[f64]| -> bool {
        let b = ys_ord[0] - a * xs[0];
        xs.iter()
            .zip(ys_ord)
            .all(|(&x, &y)| (a * x + b - y).abs() <= 1e-9 * (1.0 + y.abs()))
    };
    let a_inc = (ys[ys.len() - 1] - ys[0]) / (xs[xs.len() - 1] - xs[0]);
    if a_inc > 0.0 && check(a_inc, ys) {
        return Some(a_inc);
    }
    let rev: Vec<f64> = ys.iter().rev().cloned().collect();
    let a_dec = (rev[rev.len() - 1] - rev[0]) / (xs[xs.len() - 1] - xs[0]);
    if a_dec < 0.0 && check(a_dec, &rev) {
        return Some(a_dec);
    }
    None
}
