//! Brute-force ground truth for tiny instances: grid search over the
//! transport polytope, vertex enumeration for linear transportation
//! problems, and the interleave support construction.

use crate::costs::CostFn;
use crate::couplings::TransportPlan;
use crate::error::{Error, Result};
use crate::marginals::Marginal;
use crate::solver::{build_qp, QpForm, SolveReport, Termination};

/// Grid search over the transport polytope: the top-left `(N-1) x (M-1)`
/// block parameterizes a plan, the last row and column are determined by
/// the marginals. Grid points violating nonnegativity are skipped.
pub fn grid_search(mu_d: &Marginal, nu_d: &Marginal, c: &CostFn, h: f64) -> Result<SolveReport> {
    Ok(grid_search_tied(mu_d, nu_d, c, h, 0.0)?.0)
}

/// Like [`grid_search`], additionally returning every visited plan whose
/// objective is within `tie_tol` of the minimum.
pub fn grid_search_tied(
    mu_d: &Marginal,
    nu_d: &Marginal,
    c: &CostFn,
    h: f64,
    tie_tol: f64,
) -> Result<(SolveReport, Vec<TransportPlan>)> {
    if !(h > 0.0) {
        return Err(Error::BadParams(format!("grid step must be positive, got {h}")));
    }
    let qp = build_qp(mu_d, nu_d, c, crate::solver::DEFAULT_QP_LIMIT)?;
    let (n, m) = (qp.n, qp.m);
    let free_dim = (n - 1) * (m - 1);
    if free_dim > 4 {
        return Err(Error::SizeLimit(format!("grid search capped at free dimension 4, got {free_dim}")));
    }

    let mut free = vec![0.0_f64; free_dim];
    let mut best_val = f64::INFINITY;
    let mut best: Option<Vec<f64>> = None;
    let mut tied: Vec<Vec<f64>> = Vec::new();
    let mut visited = 0usize;

    // upper bound per free coordinate keeps the enumeration tight
    let bound = |idx: usize| -> f64 {
        let (i, j) = (idx / (m.max(2) - 1), idx % (m.max(2) - 1));
        qp.mu[i].min(qp.nu[j])
    };
    enumerate(&mut free, 0, h, &bound, &mut |vals| {
        if let Some(pi) = complete_plan(&qp, vals) {
            visited += 1;
            let v = qp.objective(&pi);
            if v < best_val {
                best_val = v;
                best = Some(pi.clone());
            }
            if tie_tol > 0.0 && v <= best_val + tie_tol {
                tied.push(pi);
            }
        }
    });
    let Some(pi) = best else {
        return Err(Error::InvalidMarginal("no feasible grid point".into()));
    };
    let report = SolveReport {
        plan: qp.plan_from_vec(pi)?,
        objective: best_val,
        method: "grid_search".into(),
        iterations: visited,
        trace: vec![best_val],
        termination: Termination::Exact,
        certificate: None,
    };
    // a second retain pass: entries collected before the final minimum may
    // no longer be within tolerance
    let plans = tied
        .into_iter()
        .filter(|pi| qp.objective(pi) <= best_val + tie_tol)
        .map(|pi| qp.plan_from_vec(pi))
        .collect::<Result<Vec<_>>>()?;
    Ok((report, plans))
}

fn enumerate(
    free: &mut Vec<f64>,
    idx: usize,
    h: f64,
    bound: &dyn Fn(usize) -> f64,
    visit: &mut dyn FnMut(&[f64]),
) {
    if idx == free.len() {
        visit(free);
        return;
    }
    let hi = bound(idx);
    let steps = (hi / h).floor() as usize;
    for k in 0..=steps {
        free[idx] = k as f64 * h;
        enumerate(free, idx + 1, h, bound, visit);
    }
}

/// Fill in the determined row/column; None when any entry is negative.
fn complete_plan(qp: &QpForm, free: &[f64]) -> Option<Vec<f64>> {
    let (n, m) = (qp.n, qp.m);
    let mut pi = vec![0.0; n * m];
    for i in 0..n - 1 {
        for j in 0..m - 1 {
            pi[i * m + j] = free[i * (m - 1) + j];
        }
    }
    for i in 0..n - 1 {
        let partial: f64 = pi[i * m..i * m + m - 1].iter().sum();
        let rest = qp.mu[i] - partial;
        if rest < -1e-12 {
            return None;
        }
        pi[i * m + m - 1] = rest.max(0.0);
    }
    for j in 0..m {
        let partial: f64 = (0..n - 1).map(|i| pi[i * m + j]).sum();
        let rest = qp.nu[j] - partial;
        if rest < -1e-12 {
            return None;
        }
        pi[(n - 1) * m + j] = rest.max(0.0);
    }
    Some(pi)
}

/// Minimum of the linear transportation problem by enumerating all basic
/// feasible solutions (spanning-tree bases of the bipartite support graph).
pub fn vertex_enumerate_linear(cost: &[f64], mu: &[f64], nu: &[f64]) -> Result<f64> {
    let (n, m) = (mu.len(), nu.len());
    if n * m > 12 {
        return Err(Error::SizeLimit(format!("vertex enumeration capped at N*M = 12, got {}", n * m)));
    }
    if cost.len() != n * m {
        return Err(Error::SizeMismatch("cost matrix does not match marginals".into()));
    }
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let basis_size = n + m - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(basis_size);
    combinations(&cells, basis_size, &mut chosen, 0, &mut |basis| {
        if let Some(flow) = solve_tree_basis(basis, mu, nu) {
            let v: f64 = basis.iter().zip(&flow).map(|(&(i, j), f)| cost[i * m + j] * f).sum();
            best = best.min(v);
        }
    });
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::InvalidMarginal("no feasible basis".into()))
    }
}

fn combinations<'a>(
    cells: &'a [(usize, usize)],
    k: usize,
    chosen: &mut Vec<(usize, usize)>,
    start: usize,
    visit: &mut dyn FnMut(&[(usize, usize)]),
) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    let needed = k - chosen.len();
    for idx in start..=cells.len().saturating_sub(needed) {
        chosen.push(cells[idx]);
        combinations(cells, k, chosen, idx + 1, visit);
        chosen.pop();
    }
}

/// Solve the flows of a candidate basis by leaf elimination; None when the
/// basis is not a spanning tree or some flow is negative.
fn solve_tree_basis(basis: &[(usize, usize)], mu: &[f64], nu: &[f64]) -> Option<Vec<f64>> {
    let (n, m) = (mu.len(), nu.len());
    let mut residual: Vec<f64> = mu.iter().chain(nu.iter()).cloned().collect();
    let mut flow = vec![f64::NAN; basis.len()];
    let mut alive: Vec<bool> = vec![true; basis.len()];
    let mut degree = vec![0usize; n + m];
    for &(i, j) in basis {
        degree[i] += 1;
        degree[n + j] += 1;
    }
    for _ in 0..basis.len() {
        // find a live edge incident to a degree-1 node
        let e = (0..basis.len()).find(|&e| {
            alive[e] && (degree[basis[e].0] == 1 || degree[n + basis[e].1] == 1)
        })?;
        let (i, j) = basis[e];
        let leaf = if degree[i] == 1 { i } else { n + j };
        let f = residual[leaf];
        if f < -1e-12 {
            return None;
        }
        flow[e] = f.max(0.0);
        residual[i] -= flow[e];
        residual[n + j] -= flow[e];
        alive[e] = false;
        degree[i] -= 1;
        degree[n + j] -= 1;
    }
    // all supplies and demands must now be exhausted
    if residual.iter().any(|r| r.abs() > 1e-9) {
        return None;
    }
    Some(flow)
}

/// The interleave sequence `1, n, 2, n-1, 3, ...` and its last `p` and
/// last `q` elements; these supports maximize the near-coincidence
/// probability among independent uniform laws on sub-supports of `[n]`.
pub fn lemma_f2_supports(n: usize, p: usize, q: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if n == 0 || p == 0 || q == 0 || p > n || q > n {
        return Err(Error::BadParams(format!("need 1 <= p, q <= n, got n={n}, p={p}, q={q}")));
    }
    let mut seq = Vec::with_capacity(n);
    let (mut lo, mut hi) = (1, n);
    while lo <= hi {
        seq.push(lo);
        lo += 1;
        if lo > hi {
            break;
        }
        seq.push(hi);
        hi -= 1;
    }
    Ok((seq[n - p..].to_vec(), seq[n - q..].to_vec()))
}
