//! Discrete QOT solvers: quadratic-program assembly, a convexity
//! certificate, Frank–Wolfe descent, exact linear OT, pair-exchange local
//! search, exhaustive permutation search, and the closed-form X-transport
//! solvers for product costs.

mod frank_wolfe;
mod linear_ot;
mod local_search;
mod product;

pub use frank_wolfe::solve_frank_wolfe;
pub use linear_ot::exact_linear_ot;
pub use local_search::{permutation_objective, permutation_plan, solve_exhaustive, solve_pair_exchange};
pub use product::{
    solve_quadratic_product, solve_submodular_product, Direction, ProductSolution,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::costs::CostFn;
use crate::couplings::TransportPlan;
use crate::error::{Error, Result};
use crate::marginals::Marginal;

/// Default cap on the vectorized dimension `N*M` of assembled QPs.
pub const DEFAULT_QP_LIMIT: usize = 4096;

/// The QOT instance in vectorized form: minimize `pi^T C pi` over the
/// transportation polytope, with `pi` row-major (`pi[i*M + j] = pi_ij`).
#[derive(Debug, Clone)]
pub struct QpForm {
    pub n: usize,
    pub m: usize,
    /// Row-major `(NM) x (NM)` matrix, `C[(i*M+j)*NM + k*M+l] = c(x_i, y_j, x_k, y_l)`.
    pub c: Vec<f64>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub psd: bool,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GapTol,
    MaxIter,
    LocalOpt,
    Exact,
}

/// Outcome of a solver run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub plan: TransportPlan,
    pub objective: f64,
    pub method: String,
    pub iterations: usize,
    /// Objective after each iteration; nonincreasing for the descent methods.
    pub trace: Vec<f64>,
    pub termination: Termination,
    pub certificate: Option<Certificate>,
}

/// Assemble the vectorized QP for discrete marginals and a cost function.
pub fn build_qp(mu_d: &Marginal, nu_d: &Marginal, c: &CostFn, limit: usize) -> Result<QpForm> {
    let (xs, mu) = mu_d.atoms()?;
    let (ys, nu) = nu_d.atoms()?;
    let (n, m) = (xs.len(), ys.len());
    let dim = n * m;
    if dim > limit {
        return Err(Error::SizeLimit(format!("QP dimension {dim} exceeds limit {limit}")));
    }
    let mut mat = vec![0.0; dim * dim];
    for i in 0..n {
        for j in 0..m {
            for k in 0..n {
                for l in 0..m {
                    let v = c.eval(xs[i], ys[j], xs[k], ys[l]);
                    if !v.is_finite() {
                        return Err(Error::NonFiniteCost(xs[i], ys[j], xs[k], ys[l]));
                    }
                    mat[(i * m + j) * dim + (k * m + l)] = v;
                }
            }
        }
    }
    Ok(QpForm { n, m, c: mat, xs, ys, mu, nu })
}

impl QpForm {
    pub fn dim(&self) -> usize {
        self.n * self.m
    }

    /// `pi^T C pi` for a vectorized plan.
    pub fn objective(&self, pi: &[f64]) -> f64 {
        let d = self.dim();
        let mut total = 0.0;
        for a in 0..d {
            if pi[a] == 0.0 {
                continue;
            }
            let row = &self.c[a * d..(a + 1) * d];
            let mut inner = 0.0;
            for b in 0..d {
                inner += row[b] * pi[b];
            }
            total += pi[a] * inner;
        }
        total
    }

    /// Gradient `(C + C^T) pi`.
    pub fn gradient(&self, pi: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut g = vec![0.0; d];
        for a in 0..d {
            let row = &self.c[a * d..(a + 1) * d];
            for b in 0..d {
                g[a] += row[b] * pi[b];
                g[b] += row[b] * pi[a];
            }
        }
        g
    }

    pub fn plan_from_vec(&self, pi: Vec<f64>) -> Result<TransportPlan> {
        TransportPlan::new(self.xs.clone(), self.ys.clone(), self.mu.clone(), self.nu.clone(), pi)
    }

    pub fn vec_from_plan(&self, plan: &TransportPlan) -> Result<Vec<f64>> {
        if plan.n() != self.n || plan.m() != self.m {
            return Err(Error::SizeMismatch("plan shape does not match QP".into()));
        }
        Ok(plan.mass.clone())
    }
}

/// Positive-semidefiniteness certificate for the symmetrized cost matrix
/// `(C + C^T)/2`; a psd matrix makes the QOT objective convex in `pi`.
pub fn convexity_certificate(qp: &QpForm) -> Certificate {
    let d = qp.dim();
    let mut sym = DMatrix::zeros(d, d);
    let mut max_abs = 0.0_f64;
    for a in 0..d {
        for b in 0..d {
            let v = 0.5 * (qp.c[a * d + b] + qp.c[b * d + a]);
            sym[(a, b)] = v;
            max_abs = max_abs.max(qp.c[a * d + b].abs());
        }
    }
    let eigs = sym.symmetric_eigenvalues();
    let min_eigenvalue = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    Certificate { psd: min_eigenvalue >= -1e-9 * max_abs.max(1.0), min_eigenvalue }
}
