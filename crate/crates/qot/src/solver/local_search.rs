//! Monge (permutation) QOT: best-improvement pair-exchange local search
//! with incremental deltas, and exhaustive enumeration for tiny instances.

use super::{SolveReport, Termination};
use crate::costs::CostFn;
use crate::couplings::TransportPlan;
use crate::error::{Error, Result};

/// Quadratic-form cost of the permutation plan that sends `x_i` to
/// `y_{perm[i]}` with uniform weights `1/n`.
pub fn permutation_objective(xs: &[f64], ys: &[f64], c: &CostFn, perm: &[usize]) -> f64 {
    let n = xs.len();
    let w = 1.0 / (n * n) as f64;
    let mut total = 0.0;
    for a in 0..n {
        for b in 0..n {
            total += c.eval(xs[a], ys[perm[a]], xs[b], ys[perm[b]]);
        }
    }
    total * w
}

/// The uniform-weight plan of a permutation.
pub fn permutation_plan(xs: &[f64], ys: &[f64], perm: &[usize]) -> Result<TransportPlan> {
    let n = xs.len();
    let w = vec![1.0 / n as f64; n];
    let mut mass = vec![0.0; n * n];
    for (i, &j) in perm.iter().enumerate() {
        mass[i * n + j] = 1.0 / n as f64;
    }
    TransportPlan::new(xs.to_vec(), ys.to_vec(), w.clone(), w, mass)
}

/// Objective change from swapping the images of positions `i` and `j`,
/// computed in O(n) from the unchanged terms.
fn swap_delta(xs: &[f64], ys: &[f64], c: &CostFn, perm: &[usize], i: usize, j: usize) -> f64 {
    let n = xs.len();
    let (yi, yj) = (ys[perm[i]], ys[perm[j]]);
    let mut delta = 0.0;
    for k in 0..n {
        if k == i || k == j {
            continue;
        }
        let yk = ys[perm[k]];
        delta += c.eval(xs[i], yj, xs[k], yk) - c.eval(xs[i], yi, xs[k], yk);
        delta += c.eval(xs[k], yk, xs[i], yj) - c.eval(xs[k], yk, xs[i], yi);
        delta += c.eval(xs[j], yi, xs[k], yk) - c.eval(xs[j], yj, xs[k], yk);
        delta += c.eval(xs[k], yk, xs[j], yi) - c.eval(xs[k], yk, xs[j], yj);
    }
    delta += c.eval(xs[i], yj, xs[i], yj) - c.eval(xs[i], yi, xs[i], yi);
    delta += c.eval(xs[j], yi, xs[j], yi) - c.eval(xs[j], yj, xs[j], yj);
    delta += c.eval(xs[i], yj, xs[j], yi) - c.eval(xs[i], yi, xs[j], yj);
    delta += c.eval(xs[j], yi, xs[i], yj) - c.eval(xs[j], yj, xs[i], yi);
    delta / (xs.len() * xs.len()) as f64
}

/// Best-improvement 2-swap local search over permutations. Ties between
/// equally improving swaps go to the lexicographically smallest `(i, j)`,
/// so trajectories are deterministic.
pub fn solve_pair_exchange(
    xs: &[f64],
    ys: &[f64],
    c: &CostFn,
    init_perm: &[usize],
    max_iter: usize,
) -> Result<SolveReport> {
    let n = xs.len();
    if ys.len() != n || init_perm.len() != n {
        return Err(Error::SizeMismatch(format!(
            "pair exchange needs |xs| = |ys| = |perm|, got {}, {}, {}",
            n,
            ys.len(),
            init_perm.len()
        )));
    }
    let mut perm = init_perm.to_vec();
    let mut objective = permutation_objective(xs, ys, c, &perm);
    let mut trace = vec![objective];
    let mut termination = Termination::MaxIter;
    let mut iterations = 0;
    for _ in 0..max_iter {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = swap_delta(xs, ys, c, &perm, i, j);
                if d < -1e-12 && best.map_or(true, |(_, _, bd)| d < bd) {
                    best = Some((i, j, d));
                }
            }
        }
        match best {
            Some((i, j, d)) => {
                perm.swap(i, j);
                objective += d;
                trace.push(objective);
                iterations += 1;
            }
            None => {
                termination = Termination::LocalOpt;
                break;
            }
        }
    }
    // recompute to shed accumulated increment error
    let objective = permutation_objective(xs, ys, c, &perm);
    Ok(SolveReport {
        plan: permutation_plan(xs, ys, &perm)?,
        objective,
        method: "pair_exchange".into(),
        iterations,
        trace,
        termination,
        certificate: None,
    })
}

/// Exact Monge optimum by lexicographic enumeration of all permutations.
pub fn solve_exhaustive(xs: &[f64], ys: &[f64], c: &CostFn) -> Result<SolveReport> {
    let n = xs.len();
    if ys.len() != n {
        return Err(Error::SizeMismatch(format!("|xs| = {n} but |ys| = {}", ys.len())));
    }
    if n > 9 {
        return Err(Error::SizeLimit(format!("exhaustive search capped at n = 9, got {n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best_perm = perm.clone();
    let mut best = permutation_objective(xs, ys, c, &perm);
    let mut count = 1usize;
    while next_permutation(&mut perm) {
        count += 1;
        let v = permutation_objective(xs, ys, c, &perm);
        if v < best {
            best = v;
            best_perm = perm.clone();
        }
    }
    Ok(SolveReport {
        plan: permutation_plan(xs, ys, &best_perm)?,
        objective: best,
        method: "exhaustive".into(),
        iterations: count,
        trace: vec![best],
        termination: Termination::Exact,
        certificate: None,
    })
}

/// Advance to the lexicographically next permutation; false after the last.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let Some(i) = (0..n - 1).rev().find(|&i| perm[i] < perm[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).unwrap();
    perm.swap(i, j);
    perm[i + 1..].reverse();
    true
}
