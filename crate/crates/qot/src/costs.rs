//! Catalog of 4-argument cost functions `c(x, y, x', y')`, augmentation by
//! terms that change every plan's objective by the same constant, and a grid
//! submodularity certificate.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::marginals::Marginal;

pub type Bivariate = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Evaluator = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;

/// Structural form of a cost: a function of the differences `(x-x', y-y')`
/// (type XX) or of the two points `(x,y)` and `(x',y')` (type XY).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    TypeXx,
    TypeXy,
}

/// A pure 4-argument cost function with its catalog identity and parameters.
#[derive(Clone)]
pub struct CostFn {
    pub id: String,
    pub params: BTreeMap<String, f64>,
    pub kind: CostKind,
    /// Whether `c(x,y,x',y') = c(x',y',x,y)` pointwise.
    pub exchangeable: bool,
    eval: Evaluator,
}

impl fmt::Debug for CostFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostFn")
            .field("id", &self.id)
            .field("params", &self.params)
            .field("kind", &self.kind)
            .finish()
    }
}

/// A bivariate quadratic `c0 + cx*x + cy*y + cxx*x^2 + cxy*x*y + cyy*y^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub c0: f64,
    pub cx: f64,
    pub cy: f64,
    pub cxx: f64,
    pub cxy: f64,
    pub cyy: f64,
}

impl Quadratic {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.c0 + self.cx * x + self.cy * y + self.cxx * x * x + self.cxy * x * y + self.cyy * y * y
    }

    /// Parse six comma-separated coefficients `c0,cx,cy,cxx,cxy,cyy`.
    pub fn parse(s: &str) -> Result<Self> {
        let vals: Vec<f64> = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad quadratic coefficient `{t}`")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != 6 {
            return Err(Error::Parse(format!(
                "quadratic needs 6 coefficients c0,cx,cy,cxx,cxy,cyy, got {}",
                vals.len()
            )));
        }
        Ok(Quadratic { c0: vals[0], cx: vals[1], cy: vals[2], cxx: vals[3], cxy: vals[4], cyy: vals[5] })
    }
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

impl CostFn {
    pub fn eval(&self, x: f64, y: f64, xp: f64, yp: f64) -> f64 {
        (self.eval)(x, y, xp, yp)
    }

    fn new(
        id: &str,
        params: BTreeMap<String, f64>,
        kind: CostKind,
        exchangeable: bool,
        eval: Evaluator,
    ) -> Self {
        CostFn { id: id.into(), params, kind, exchangeable, eval }
    }

    /// Wrap an arbitrary evaluator as a catalog-less cost.
    pub fn custom(id: &str, kind: CostKind, exchangeable: bool, eval: Evaluator) -> Self {
        CostFn::new(id, BTreeMap::new(), kind, exchangeable, eval)
    }

    /// `|(x-x')(y-y')|`.
    pub fn rectangular() -> Self {
        Self::new("rect", BTreeMap::new(), CostKind::TypeXx, true, Arc::new(|x, y, xp, yp| ((x - xp) * (y - yp)).abs()))
    }

    /// `|(x-x')(y-y')|^q`, `q > 0`.
    pub fn q_rectangular(q: f64) -> Result<Self> {
        if !(q > 0.0) {
            return Err(Error::BadParams(format!("qrect requires q > 0, got {q}")));
        }
        Ok(Self::new(
            "qrect",
            params(&[("q", q)]),
            CostKind::TypeXx,
            true,
            Arc::new(move |x, y, xp, yp| ((x - xp) * (y - yp)).abs().powf(q)),
        ))
    }

    /// `(t1*|x-x'| + t2*|y-y'|)^2`, `t1, t2 >= 0`.
    pub fn inequality(t1: f64, t2: f64) -> Result<Self> {
        if t1 < 0.0 || t2 < 0.0 {
            return Err(Error::BadParams(format!("ineq requires t1, t2 >= 0, got ({t1}, {t2})")));
        }
        Ok(Self::new(
            "ineq",
            params(&[("t1", t1), ("t2", t2)]),
            CostKind::TypeXx,
            true,
            Arc::new(move |x, y, xp, yp| {
                let s = t1 * (x - xp).abs() + t2 * (y - yp).abs();
                s * s
            }),
        ))
    }

    /// `| |x-x'|^q - |y-y'|^q |^p`, the (p,q) Gromov–Wasserstein integrand.
    pub fn gromov_wasserstein(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0) || !(q > 0.0) {
            return Err(Error::BadParams(format!("gw requires p, q > 0, got ({p}, {q})")));
        }
        Ok(Self::new(
            "gw",
            params(&[("p", p), ("q", q)]),
            CostKind::TypeXx,
            true,
            Arc::new(move |x, y, xp, yp| ((x - xp).abs().powf(q) - (y - yp).abs().powf(q)).abs().powf(p)),
        ))
    }

    /// `-|x-x'|^{-alpha} |y-y'|^{-alpha}`, `alpha` in (0, 1/2).
    ///
    /// Singular where `x = x'` or `y = y'`: evaluation there returns `-inf`
    /// as a sentinel. Only integrable against atomless marginals.
    pub fn gw_negative_power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::BadParams(format!("gwneg requires alpha in (0, 1/2), got {alpha}")));
        }
        Ok(Self::new(
            "gwneg",
            params(&[("alpha", alpha)]),
            CostKind::TypeXx,
            true,
            Arc::new(move |x, y, xp, yp| {
                let (u, v) = ((x - xp).abs(), (y - yp).abs());
                if u == 0.0 || v == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -u.powf(-alpha) * v.powf(-alpha)
                }
            }),
        ))
    }

    /// `sgn(x-x') * sgn(y-y')`, the Kendall concordance indicator.
    pub fn kendall() -> Self {
        Self::new(
            "kendall",
            BTreeMap::new(),
            CostKind::TypeXx,
            true,
            Arc::new(|x, y, xp, yp| (x - xp).signum_or_zero() * (y - yp).signum_or_zero()),
        )
    }

    /// `(x-x')(y-y')/2`; its quadratic-form cost is the covariance of the plan.
    pub fn covariance() -> Self {
        Self::new(
            "cov",
            BTreeMap::new(),
            CostKind::TypeXx,
            true,
            Arc::new(|x, y, xp, yp| 0.5 * (x - xp) * (y - yp)),
        )
    }

    /// `|x + y - x' - y'|`; the quadratic-form cost is the mean absolute
    /// difference of the sums, the numerator of the Gini objective.
    pub fn gini() -> Self {
        Self::new(
            "gini",
            BTreeMap::new(),
            CostKind::TypeXy,
            true,
            Arc::new(|x, y, xp, yp| (x + y - xp - yp).abs()),
        )
    }

    /// `(f(x,y) - f(x',y'))^2 / 2`; the quadratic-form cost is the variance
    /// of `f` under the plan.
    pub fn variance(f: Bivariate) -> Self {
        Self::new(
            "variance",
            BTreeMap::new(),
            CostKind::TypeXy,
            true,
            Arc::new(move |x, y, xp, yp| {
                let d = f(x, y) - f(xp, yp);
                0.5 * d * d
            }),
        )
    }

    /// `exp(-alpha ((x-x')^2 + (y-y')^2))`, `alpha > 0`.
    pub fn gauss_kernel(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::BadParams(format!("gauss requires alpha > 0, got {alpha}")));
        }
        Ok(Self::new(
            "gauss",
            params(&[("alpha", alpha)]),
            CostKind::TypeXx,
            true,
            Arc::new(move |x, y, xp, yp| (-alpha * ((x - xp).powi(2) + (y - yp).powi(2))).exp()),
        ))
    }

    /// `(beta + (x-x')^2)^{-gamma} (beta + (y-y')^2)^{-gamma}`.
    pub fn power_kernel(beta: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !(beta > 0.0) {
            return Err(Error::BadParams(format!("powker requires beta, gamma > 0, got ({beta}, {gamma})")));
        }
        Ok(Self::new(
            "powker",
            params(&[("beta", beta), ("gamma", gamma)]),
            CostKind::TypeXx,
            true,
            Arc::new(move |x, y, xp, yp| {
                (beta + (x - xp).powi(2)).powf(-gamma) * (beta + (y - yp).powi(2)).powf(-gamma)
            }),
        ))
    }

    /// `exp(-alpha(|x-x'|^{2p} + |y-y'|^{2p}))`, `p` in (1/2, 1).
    pub fn stretched_exp_kernel(alpha: f64, p: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(p > 0.5 && p < 1.0) {
            return Err(Error::BadParams(format!("sexp requires alpha > 0, p in (1/2,1), got ({alpha}, {p})")));
        }
        Ok(Self::new(
            "sexp",
            params(&[("alpha", alpha), ("p", p)]),
            CostKind::TypeXx,
            true,
            Arc::new(move |x, y, xp, yp| {
                (-alpha * ((x - xp).abs().powf(2.0 * p) + (y - yp).abs().powf(2.0 * p))).exp()
            }),
        ))
    }

    /// `|y-y'| exp(-gamma |x-x'|)`, `gamma > 0`.
    pub fn linear_exponential(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::BadParams(format!("linexp requires gamma > 0, got {gamma}")));
        }
        Ok(Self::new(
            "linexp",
            params(&[("gamma", gamma)]),
            CostKind::TypeXx,
            true,
            Arc::new(move |x, y, xp, yp| (y - yp).abs() * (-gamma * (x - xp).abs()).exp()),
        ))
    }

    /// `1{(x,y)=(x',y')} / (mu(x) nu(y))` on the discrete supports; the
    /// quadratic-form cost of a plan is then the quadratic regularizer
    /// `sum_{ij} pi_ij^2 / (mu_i nu_j)`.
    pub fn quadratic_regularizer(mu_d: &Marginal, nu_d: &Marginal) -> Result<Self> {
        let (xs, mu) = mu_d.atoms()?;
        let (ys, nu) = nu_d.atoms()?;
        let lookup = move |pts: &[f64], ws: &[f64], v: f64| -> Option<f64> {
            pts.iter().position(|&p| p == v).map(|i| ws[i])
        };
        Ok(Self::new(
            "qreg",
            BTreeMap::new(),
            CostKind::TypeXy,
            true,
            Arc::new(move |x, y, xp, yp| {
                if x == xp && y == yp {
                    match (lookup(&xs, &mu, x), lookup(&ys, &nu, y)) {
                        (Some(wx), Some(wy)) if wx > 0.0 && wy > 0.0 => 1.0 / (wx * wy),
                        _ => f64::NAN,
                    }
                } else {
                    0.0
                }
            }),
        ))
    }

    /// `f(x,y) g(x',y')` for bivariate quadratics `f`, `g`.
    pub fn quadratic_product(f: Quadratic, g: Quadratic) -> Self {
        Self::new(
            "quadprod",
            BTreeMap::new(),
            CostKind::TypeXy,
            f == g,
            Arc::new(move |x, y, xp, yp| f.eval(x, y) * g.eval(xp, yp)),
        )
    }

    /// `(f(x,y) + a1)(f(x',y') + a2)` for a user-supplied bivariate `f`.
    pub fn submodular_product(f: Bivariate, a1: f64, a2: f64) -> Self {
        Self::new(
            "subprod",
            params(&[("a1", a1), ("a2", a2)]),
            CostKind::TypeXy,
            a1 == a2,
            Arc::new(move |x, y, xp, yp| (f(x, y) + a1) * (f(xp, yp) + a2)),
        )
    }

    /// `max(|x-x'|, |y-y'|)`.
    pub fn max_distance() -> Self {
        Self::new(
            "max",
            BTreeMap::new(),
            CostKind::TypeXx,
            true,
            Arc::new(|x, y, xp, yp| (x - xp).abs().max((y - yp).abs())),
        )
    }

    /// The cost scaled by a constant factor (e.g. `-1` to turn a
    /// maximization objective into a minimization one).
    pub fn scaled(&self, k: f64) -> CostFn {
        let base = self.eval.clone();
        CostFn {
            id: format!("{}*{k}", self.id),
            params: self.params.clone(),
            kind: self.kind,
            exchangeable: self.exchangeable,
            eval: Arc::new(move |x, y, xp, yp| k * base(x, y, xp, yp)),
        }
    }

    /// Parse the CLI cost grammar: `rect`, `qrect:q=1.5`, `ineq:t1=1,t2=2`,
    /// `gw:p=2,q=1`, `kendall`, `cov`, `gini`, `linexp:gamma=2`,
    /// `gauss:alpha=0.5`, `qreg`, `quadprod:<f coeffs>;<g coeffs>`.
    ///
    /// `marginals` supplies the discrete supports that `qreg` requires.
    pub fn parse(spec: &str, marginals: Option<(&Marginal, &Marginal)>) -> Result<Self> {
        let spec = spec.trim();
        let (id, args) = match spec.split_once(':') {
            Some((id, args)) => (id, Some(args)),
            None => (spec, None),
        };
        let kv = |args: Option<&str>| -> Result<BTreeMap<String, f64>> {
            let mut out = BTreeMap::new();
            if let Some(args) = args {
                for part in args.split(',') {
                    let (k, v) = part
                        .split_once('=')
                        .ok_or_else(|| Error::Parse(format!("cost spec `{spec}`: expected key=value, got `{part}`")))?;
                    let v: f64 = v
                        .trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("cost spec `{spec}`: bad number `{v}`")))?;
                    out.insert(k.trim().to_string(), v);
                }
            }
            Ok(out)
        };
        let get = |m: &BTreeMap<String, f64>, k: &str, default: f64| *m.get(k).unwrap_or(&default);
        match id {
            "rect" => Ok(Self::rectangular()),
            "qrect" => Self::q_rectangular(get(&kv(args)?, "q", 1.0)),
            "ineq" => {
                let m = kv(args)?;
                Self::inequality(get(&m, "t1", 1.0), get(&m, "t2", 1.0))
            }
            "gw" => {
                let m = kv(args)?;
                Self::gromov_wasserstein(get(&m, "p", 1.0), get(&m, "q", 1.0))
            }
            "gwneg" => Self::gw_negative_power(get(&kv(args)?, "alpha", 0.25)),
            "kendall" => Ok(Self::kendall()),
            "cov" => Ok(Self::covariance()),
            "gini" => Ok(Self::gini()),
            "max" => Ok(Self::max_distance()),
            "linexp" => Self::linear_exponential(get(&kv(args)?, "gamma", 1.0)),
            "gauss" => Self::gauss_kernel(get(&kv(args)?, "alpha", 0.5)),
            "powker" => {
                let m = kv(args)?;
                Self::power_kernel(get(&m, "beta", 4.0), get(&m, "gamma", 1.0))
            }
            "sexp" => {
                let m = kv(args)?;
                Self::stretched_exp_kernel(get(&m, "alpha", 0.1), get(&m, "p", 0.75))
            }
            "qreg" => {
                let (mu, nu) = marginals.ok_or_else(|| {
                    Error::BadParams("qreg needs discrete marginals in context".into())
                })?;
                Self::quadratic_regularizer(mu, nu)
            }
            "quadprod" => {
                let args = args.ok_or_else(|| Error::Parse("quadprod needs coefficients".into()))?;
                let (f, g) = match args.split_once(';') {
                    Some((f, g)) => (Quadratic::parse(f)?, Quadratic::parse(g)?),
                    None => {
                        let q = Quadratic::parse(args)?;
                        (q, q)
                    }
                };
                Ok(Self::quadratic_product(f, g))
            }
            other => Err(Error::UnknownCost(other.to_string())),
        }
    }
}

/// Add terms `w1(x,x') + w2(y,y') + w3(x,y') + w4(x',y)` to `c`. The
/// quadratic-form cost of every plan with fixed marginals changes by the
/// same constant, so minimizers are unchanged.
pub fn augment_irrelevant(
    c: &CostFn,
    w1: Option<Bivariate>,
    w2: Option<Bivariate>,
    w3: Option<Bivariate>,
    w4: Option<Bivariate>,
) -> CostFn {
    let base = c.eval.clone();
    CostFn {
        id: format!("{}+irrelevant", c.id),
        params: c.params.clone(),
        kind: CostKind::TypeXy,
        exchangeable: false,
        eval: Arc::new(move |x, y, xp, yp| {
            let mut v = base(x, y, xp, yp);
            if let Some(w) = &w1 {
                v += w(x, xp);
            }
            if let Some(w) = &w2 {
                v += w(y, yp);
            }
            if let Some(w) = &w3 {
                v += w(x, yp);
            }
            if let Some(w) = &w4 {
                v += w(xp, y);
            }
            v
        }),
    }
}

/// Certify `f(x,y) + f(x',y') <= f(x,y') + f(x',y)` for `x <= x'`, `y <= y'`
/// by checking every adjacent 2x2 rectangle increment on the grid.
pub fn is_submodular_on_grid(f: &dyn Fn(f64, f64) -> f64, grid: &[f64]) -> bool {
    grid.windows(2).all(|gx| {
        grid.windows(2).all(|gy| {
            f(gx[0], gy[0]) + f(gx[1], gy[1]) - f(gx[0], gy[1]) - f(gx[1], gy[0]) <= 1e-12
        })
    })
}

trait SignumOrZero {
    fn signum_or_zero(self) -> f64;
}

impl SignumOrZero for f64 {
    /// `signum` with `sgn(0) = 0`, unlike `f64::signum`.
    fn signum_or_zero(self) -> f64 {
        if self == 0.0 {
            0.0
        } else {
            self.signum()
        }
    }
}
