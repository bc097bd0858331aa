//! Closed-form X-transport solvers for separable product costs
//! `c = f(x,y) g(x',y')`: the quadratic case reduces to a univariate
//! quadratic in `s = E[XY]`, the submodular case to one in `t = E[f(X,Y)]`.

use serde::{Deserialize, Serialize};

use crate::costs::{is_submodular_on_grid, Quadratic};
use crate::couplings::{to_plan, Copula, CouplingSpec};
use crate::error::{Error, Result};
use crate::marginals::{quantile_cross_moment, Marginal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

/// Solution of a product-cost QOT: an optimal X-transport mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductSolution {
    /// Mixture weight of the comonotone coupling.
    pub lambda: f64,
    /// Optimal value of the reduced scalar variable (`E[XY]` or `E[f(X,Y)]`).
    pub s_star: f64,
    /// Optimal objective value.
    pub objective: f64,
    pub plan_spec: CouplingSpec,
}

/// Optimize `E[f(X,Y)] * E[g(X',Y')]` for bivariate quadratics `f`, `g` over
/// all couplings of `mu` and `nu`.
///
/// Both expectations are affine in `s = E[XY]`, so the objective is a
/// univariate quadratic minimized over `[s_ant, s_com]`; every value of `s`
/// in that range is attained by the mixture `x(lambda)`.
pub fn solve_quadratic_product(
    mu: &Marginal,
    nu: &Marginal,
    f: Quadratic,
    g: Quadratic,
    direction: Direction,
) -> Result<ProductSolution> {
    let affine = |q: &Quadratic| -> (f64, f64) {
        let base = q.c0
            + q.cx * mu.mean()
            + q.cy * nu.mean()
            + q.cxx * mu.second_moment()
            + q.cyy * nu.second_moment();
        (base, q.cxy)
    };
    let (af, bf) = affine(&f);
    let (ag, bg) = affine(&g);
    // objective in s: (af + bf s)(ag + bg s) = q2 s^2 + q1 s + q0
    let q2 = bf * bg;
    let q1 = af * bg + ag * bf;
    let q0 = af * ag;

    let s_com = quantile_cross_moment(mu, nu, false)?;
    let s_ant = quantile_cross_moment(mu, nu, true)?;
    if (s_com - s_ant).abs() <= 1e-14 {
        return Err(Error::DegenerateMarginal(
            "E[XY] is constant over all couplings; every plan is optimal".into(),
        ));
    }
    let (s_star, objective) = optimize_quadratic(q2, q1, q0, s_ant, s_com, direction);
    let lambda = ((s_star - s_ant) / (s_com - s_ant)).clamp(0.0, 1.0);
    Ok(ProductSolution {
        lambda,
        s_star,
        objective,
        plan_spec: CouplingSpec::new(Copula::X { lambda }, mu.clone(), nu.clone())?,
    })
}

/// Optimize `q2 s^2 + q1 s + q0` over `[lo, hi]`.
fn optimize_quadratic(
    q2: f64,
    q1: f64,
    q0: f64,
    lo: f64,
    hi: f64,
    direction: Direction,
) -> (f64, f64) {
    let eval = |s: f64| q2 * s * s + q1 * s + q0;
    let mut candidates = vec![lo, hi];
    if q2 != 0.0 {
        let vertex = -q1 / (2.0 * q2);
        if vertex > lo && vertex < hi {
            candidates.push(vertex);
        }
    }
    let pick = match direction {
        Direction::Minimize => candidates
            .iter()
            .cloned()
            .min_by(|&a, &b| eval(a).partial_cmp(&eval(b)).unwrap()),
        Direction::Maximize => candidates
            .iter()
            .cloned()
            .max_by(|&a, &b| eval(a).partial_cmp(&eval(b)).unwrap()),
    }
    .unwrap();
    (pick, eval(pick))
}

/// Minimize `(E[f] + a1)(E[f'] + a2)` over couplings, for a submodular
/// bivariate `f`, via the range `[t_com, t_ant]` of `t = E[f(X,Y)]` computed
/// on `n_disc`-point discretizations.
pub fn solve_submodular_product(
    mu: &Marginal,
    nu: &Marginal,
    f: &dyn Fn(f64, f64) -> f64,
    a1: f64,
    a2: f64,
    n_disc: usize,
) -> Result<ProductSolution> {
    let mu_d = mu.discretize(n_disc)?;
    let nu_d = nu.discretize(n_disc)?;
    let (xs, _) = mu_d.atoms()?;
    let (ys, _) = nu_d.atoms()?;
    let mut grid: Vec<f64> = xs.iter().chain(ys.iter()).cloned().collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    if !is_submodular_on_grid(f, &grid) {
        return Err(Error::NotSubmodular);
    }

    let expect = |copula: Copula| -> Result<f64> {
        let spec = CouplingSpec::new(copula, mu_d.clone(), nu_d.clone())?;
        let plan = to_plan(&spec, &mu_d, &nu_d)?;
        let mut t = 0.0;
        for i in 0..plan.n() {
            for j in 0..plan.m() {
                let w = plan.at(i, j);
                if w > 0.0 {
                    t += w * f(plan.xs[i], plan.ys[j]);
                }
            }
        }
        Ok(t)
    };
    // submodular f: comonotone minimizes E[f], antimonotone maximizes it
    let t_com = expect(Copula::Comonotone)?;
    let t_ant = expect(Copula::Antimonotone)?;
    if (t_ant - t_com).abs() <= 1e-14 {
        return Err(Error::DegenerateMarginal(
            "E[f(X,Y)] is constant over all couplings; every plan is optimal".into(),
        ));
    }
    let (lo, hi) = (t_com.min(t_ant), t_com.max(t_ant));
    // (t + a1)(t + a2) = t^2 + (a1 + a2) t + a1 a2
    let (t_star, objective) = optimize_quadratic(1.0, a1 + a2, a1 * a2, lo, hi, Direction::Minimize);
    let lambda = ((t_ant - t_star) / (t_ant - t_com)).clamp(0.0, 1.0);
    Ok(ProductSolution {
        lambda,
        s_star: t_star,
        objective,
        plan_spec: CouplingSpec::new(Copula::X { lambda }, mu.clone(), nu.clone())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn std_normal() -> Marginal {
        Marginal::normal(0.0, 1.0).unwrap()
    }

    #[test]
    fn normal_example_gives_nine_sixteenths() {
        // c = -(x+y)^2 (2x'-y')^2: f = -(x+y)^2, g = (2x-y)^2
        let f = Quadratic { c0: 0.0, cx: 0.0, cy: 0.0, cxx: -1.0, cxy: -2.0, cyy: -1.0 };
        let g = Quadratic { c0: 0.0, cx: 0.0, cy: 0.0, cxx: 4.0, cxy: -4.0, cyy: 1.0 };
        let sol =
            solve_quadratic_product(&std_normal(), &std_normal(), f, g, Direction::Minimize).unwrap();
        assert_abs_diff_eq!(sol.s_star, 0.125, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.lambda, 9.0 / 16.0, epsilon = 1e-9);

        let max =
            solve_quadratic_product(&std_normal(), &std_normal(), f, g, Direction::Maximize).unwrap();
        assert_abs_diff_eq!(max.s_star, -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(max.lambda, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn pure_product_cost_centers() {
        // c = xy * x'y': objective s^2, minimized at s* = 0
        let q = Quadratic { c0: 0.0, cx: 0.0, cy: 0.0, cxx: 0.0, cxy: 1.0, cyy: 0.0 };
        let sol =
            solve_quadratic_product(&std_normal(), &std_normal(), q, q, Direction::Minimize).unwrap();
        assert_abs_diff_eq!(sol.s_star, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.lambda, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.objective, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn lambda_reproduces_s_star_by_mixture_linearity() {
        let mu = Marginal::uniform(-1.0, 2.0).unwrap();
        let nu = Marginal::exponential(1.5).unwrap();
        let f = Quadratic { c0: 1.0, cx: 0.5, cy: 0.0, cxx: 0.0, cxy: 2.0, cyy: 0.0 };
        let g = Quadratic { c0: -2.0, cx: 0.0, cy: 1.0, cxx: 0.0, cxy: 1.0, cyy: 0.0 };
        let sol = solve_quadratic_product(&mu, &nu, f, g, Direction::Minimize).unwrap();
        let s_com = quantile_cross_moment(&mu, &nu, false).unwrap();
        let s_ant = quantile_cross_moment(&mu, &nu, true).unwrap();
        let mixed = sol.lambda * s_com + (1.0 - sol.lambda) * s_ant;
        assert_abs_diff_eq!(mixed, sol.s_star, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_marginal_rejected() {
        let point = Marginal::point_mass(1.0);
        let q = Quadratic { c0: 0.0, cx: 0.0, cy: 0.0, cxx: 0.0, cxy: 1.0, cyy: 0.0 };
        assert!(matches!(
            solve_quadratic_product(&point, &std_normal(), q, q, Direction::Minimize),
            Err(Error::DegenerateMarginal(_))
        ));
    }

    #[test]
    fn submodular_examples() {
        let u = Marginal::uniform(0.0, 1.0).unwrap();
        // f = -xy: t = -E[XY] ranges over [-1/3, -1/6]; with a1 = a2 = 0 the
        // objective t^2 is minimized at the endpoint closest to 0, which is
        // t_ant = -1/6 (antimonotone, lambda = 0)
        let sol = solve_submodular_product(&u, &u, &|x, y| -x * y, 0.0, 0.0, 200).unwrap();
        assert_abs_diff_eq!(sol.s_star, -1.0 / 6.0, epsilon = 1e-4);
        assert_abs_diff_eq!(sol.lambda, 0.0);

        // large positive shifts make the product increasing in t, so the
        // comonotone endpoint t_com = -1/3 wins
        let sol = solve_submodular_product(&u, &u, &|x, y| -x * y, 10.0, 10.0, 100).unwrap();
        assert_abs_diff_eq!(sol.lambda, 1.0);

        // a1 = -a2 puts the quadratic vertex at 0, clamped to t_ant again
        let sol = solve_submodular_product(&u, &u, &|x, y| -x * y, 3.0, -3.0, 100).unwrap();
        assert_abs_diff_eq!(sol.lambda, 0.0);
    }

    #[test]
    fn supermodular_rejected() {
        let u = Marginal::uniform(0.0, 1.0).unwrap();
        assert!(matches!(
            solve_submodular_product(&u, &u, &|x, y| x * y, 0.0, 0.0, 50),
            Err(Error::NotSubmodular)
        ));
    }
}
