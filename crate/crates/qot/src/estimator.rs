//! Quadratic-form transport cost: exact evaluation on discrete plans,
//! Monte Carlo evaluation on sampled couplings, and derived statistics
//! (Kendall tau, Gini objective, eta association).

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::costs::CostFn;
use crate::couplings::{sample_one, CouplingSpec, TransportPlan};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    Exact,
    McPairs,
    McUstat,
}

/// A cost value with its sampling provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub value: f64,
    /// Normal-approximation standard error; 0 for exact evaluation.
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    pub method: EstimateMethod,
    pub workers: usize,
}

/// Kahan-compensated accumulator for long mixed-sign sums.
#[derive(Default)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Exact double sum `sum_{ijkl} c(x_i, y_j, x_k, y_l) pi_ij pi_kl`.
pub fn qcost_exact(plan: &TransportPlan, c: &CostFn) -> Result<f64> {
    let (n, m) = (plan.n(), plan.m());
    let support: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j, 0.0)))
        .map(|(i, j, _)| (i, j, plan.at(i, j)))
        .filter(|&(_, _, w)| w > 0.0)
        .collect();
    let mut acc = Kahan::default();
    for &(i, j, wij) in &support {
        for &(k, l, wkl) in &support {
            let v = c.eval(plan.xs[i], plan.ys[j], plan.xs[k], plan.ys[l]);
            if !v.is_finite() {
                return Err(Error::NonFiniteCost(plan.xs[i], plan.ys[j], plan.xs[k], plan.ys[l]));
            }
            acc.add(v * wij * wkl);
        }
    }
    Ok(acc.sum)
}

/// Monte Carlo estimate of the quadratic-form cost with a single worker.
pub fn qcost_mc(spec: &CouplingSpec, c: &CostFn, n: usize, seed: u64) -> Result<CostEstimate> {
    qcost_mc_workers(spec, c, n, seed, 1)
}

/// Monte Carlo estimate with the sample split across `workers` chunks on
/// per-chunk derived streams. Output is identical for any execution order
/// of a fixed (seed, workers) configuration.
///
/// For `n > 10^4` the estimator averages the cost over `n/2` disjoint couples
/// of iid pairs; for smaller `n` it is the full U-statistic over all
/// unordered couples with the symmetrized evaluator.
pub fn qcost_mc_workers(
    spec: &CouplingSpec,
    c: &CostFn,
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<CostEstimate> {
    if n < 2 {
        return Err(Error::BadParams(format!("Monte Carlo needs n >= 2, got {n}")));
    }
    if workers == 0 {
        return Err(Error::BadParams("workers must be >= 1".into()));
    }
    let use_pairs = n > 10_000;
    if use_pairs && n % 2 != 0 {
        return Err(Error::BadParams(format!("pair estimator needs even n, got {n}")));
    }
    let mut pairs = Vec::with_capacity(n);
    let per = n / workers;
    let rem = n % workers;
    for w in 0..workers {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(w as u64);
        let count = per + usize::from(w < rem);
        for _ in 0..count {
            pairs.push(sample_one(spec, &mut rng)?);
        }
    }

    let (mean, stderr, terms, method) = if use_pairs {
        let terms: Vec<f64> = pairs
            .chunks_exact(2)
            .map(|ch| c.eval(ch[0].0, ch[0].1, ch[1].0, ch[1].1))
            .collect();
        let (m, s) = mean_stderr(&terms)?;
        (m, s, terms.len(), EstimateMethod::McPairs)
    } else {
        let mut terms = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..pairs.len() {
            for j in (i + 1)..pairs.len() {
                let (a, b) = (pairs[i], pairs[j]);
                terms.push(0.5 * (c.eval(a.0, a.1, b.0, b.1) + c.eval(b.0, b.1, a.0, a.1)));
            }
        }
        let (m, s) = mean_stderr(&terms)?;
        (m, s, terms.len(), EstimateMethod::McUstat)
    };
    let _ = terms;
    Ok(CostEstimate { value: mean, stderr, samples: n, seed, method, workers })
}

fn mean_stderr(terms: &[f64]) -> Result<(f64, f64)> {
    let k = terms.len() as f64;
    let mut acc = Kahan::default();
    for &t in terms {
        if !t.is_finite() {
            return Err(Error::NonFiniteCost(f64::NAN, f64::NAN, f64::NAN, f64::NAN));
        }
        acc.add(t);
    }
    let mean = acc.sum / k;
    let mut var = Kahan::default();
    for &t in terms {
        var.add((t - mean) * (t - mean));
    }
    let sd = if terms.len() > 1 { (var.sum / (k - 1.0)).sqrt() } else { 0.0 };
    Ok((mean, sd / k.sqrt()))
}

/// Population Kendall tau of the plan, `E[sgn((X-X')(Y-Y'))]` for iid pairs.
pub fn kendall_tau(plan: &TransportPlan) -> Result<f64> {
    qcost_exact(plan, &CostFn::kendall())
}

/// Gini objective `E|X+Y-X'-Y'| / (2 (E X + E Y))` of the plan.
pub fn gini_objective(plan: &TransportPlan) -> Result<f64> {
    let mean_x: f64 = plan.xs.iter().zip(&plan.mu).map(|(x, w)| x * w).sum();
    let mean_y: f64 = plan.ys.iter().zip(&plan.nu).map(|(y, w)| y * w).sum();
    let denom = 2.0 * (mean_x + mean_y);
    if denom <= 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(qcost_exact(plan, &CostFn::gini())? / denom)
}

/// Chatterjee-style association `eta = 1 - E|Y-Y''| / E|Y-Y'|`, where
/// `Y, Y''` are conditionally iid given `X` under the plan and `Y'` is an
/// independent copy from the second marginal.
pub fn eta_association(plan: &TransportPlan) -> Result<f64> {
    let m = plan.m();
    let mut denom = 0.0;
    for j in 0..m {
        for jp in 0..m {
            denom += plan.nu[j] * plan.nu[jp] * (plan.ys[j] - plan.ys[jp]).abs();
        }
    }
    if denom <= 0.0 {
        return Err(Error::DegenerateMarginal("eta needs a non-degenerate second marginal".into()));
    }
    let mut numer = 0.0;
    for i in 0..plan.n() {
        let wi = plan.mu[i];
        if wi <= 0.0 {
            continue;
        }
        // row-normalized conditional law of Y given X = x_i
        for j in 0..m {
            for jp in 0..m {
                numer += plan.at(i, j) * plan.at(i, jp) / wi * (plan.ys[j] - plan.ys[jp]).abs();
            }
        }
    }
    Ok(1.0 - numer / denom)
}
