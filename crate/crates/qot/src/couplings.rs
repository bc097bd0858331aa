//! Explicit couplings of two marginals, parameterized by a copula: cdf
//! evaluation, sampling, and discretization into transport plans.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginals::{unit_open, Marginal};

/// The copula families with closed-form cdfs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Copula {
    Comonotone,
    Antimonotone,
    Independent,
    /// Mixture `lambda * comonotone + (1 - lambda) * antimonotone`.
    X { lambda: f64 },
    /// Law of `(U, |2U - 1|)` for uniform `U`.
    V,
    /// Uniform distribution on the diamond `|u - 1/2| + |v - 1/2| = 1/2`.
    Diamond,
}

impl Copula {
    /// Parse the CLI names: `com`, `ant`, `ind`, `x:lambda=0.25`, `v`, `dia`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("x:") {
            let rest = rest.strip_prefix("lambda=").unwrap_or(rest);
            let lambda: f64 = rest
                .parse()
                .map_err(|_| Error::Parse(format!("bad lambda in copula spec `{s}`")))?;
            if !(0.0..=1.0).contains(&lambda) {
                return Err(Error::BadParams(format!("lambda {lambda} outside [0,1]")));
            }
            return Ok(Copula::X { lambda });
        }
        match s {
            "com" => Ok(Copula::Comonotone),
            "ant" => Ok(Copula::Antimonotone),
            "ind" => Ok(Copula::Independent),
            "v" => Ok(Copula::V),
            "dia" => Ok(Copula::Diamond),
            other => Err(Error::Parse(format!("unknown copula `{other}`"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Copula::Comonotone => "com".into(),
            Copula::Antimonotone => "ant".into(),
            Copula::Independent => "ind".into(),
            Copula::X { lambda } => format!("x({lambda})"),
            Copula::V => "v".into(),
            Copula::Diamond => "dia".into(),
        }
    }
}

/// A coupling of `mu` and `nu` with the given copula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub copula: Copula,
    pub mu: Marginal,
    pub nu: Marginal,
}

impl CouplingSpec {
    pub fn new(copula: Copula, mu: Marginal, nu: Marginal) -> Result<Self> {
        if let Copula::X { lambda } = copula {
            if !(0.0..=1.0).contains(&lambda) || !lambda.is_finite() {
                return Err(Error::BadParams(format!("x-copula lambda {lambda} outside [0,1]")));
            }
        }
        Ok(CouplingSpec { copula, mu, nu })
    }
}

fn check_unit_square(u: f64, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("copula argument ({u}, {v}) outside [0,1]^2")));
    }
    Ok(())
}

/// Cdf of the diamond copula. With `a <> b = a/2 + b/2 - 1/4`:
///
/// * `[0,1/2]^2`:        `max(u <> v, 0)`
/// * `(1/2,1] x [0,1/2]`: `min(u <> v, v)`
/// * `[0,1/2] x (1/2,1]`: `min(u <> v, u)`
/// * `(1/2,1]^2`:        `max(u <> v, u + v - 1)`
pub fn diamond_cdf(u: f64, v: f64) -> Result<f64> {
    check_unit_square(u, v)?;
    let d = 0.5 * u + 0.5 * v - 0.25;
    Ok(match (u <= 0.5, v <= 0.5) {
        (true, true) => d.max(0.0),
        (false, true) => d.min(v),
        (true, false) => d.min(u),
        (false, false) => d.max(u + v - 1.0),
    })
}

/// Cdf of the V copula, `P(U <= u, |2U - 1| <= v)`: the length of
/// `[0, u]` intersected with `[(1-v)/2, (1+v)/2]`.
fn v_cdf(u: f64, v: f64) -> f64 {
    (u.min(0.5 * (1.0 + v)) - 0.5 * (1.0 - v)).max(0.0)
}

/// Copula cdf of the coupling at `(u, v)`.
pub fn copula_cdf(spec: &CouplingSpec, u: f64, v: f64) -> Result<f64> {
    check_unit_square(u, v)?;
    Ok(match spec.copula {
        Copula::Comonotone => u.min(v),
        Copula::Antimonotone => (u + v - 1.0).max(0.0),
        Copula::Independent => u * v,
        Copula::X { lambda } => lambda * u.min(v) + (1.0 - lambda) * (u + v - 1.0).max(0.0),
        Copula::V => v_cdf(u, v),
        Copula::Diamond => diamond_cdf(u, v)?,
    })
}

/// Draw `count` iid pairs from the coupling; deterministic given `seed`.
///
/// All auxiliary randomness (the x-copula branch switch, the diamond sign)
/// is interleaved into the same stream, so one seed fixes the output.
pub fn sample_coupling(spec: &CouplingSpec, count: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(sample_one(spec, &mut rng)?);
    }
    Ok(out)
}

pub(crate) fn sample_one(spec: &CouplingSpec, rng: &mut impl RngCore) -> Result<(f64, f64)> {
    let u = unit_open(rng);
    let v = match spec.copula {
        Copula::Comonotone => u,
        Copula::Antimonotone => 1.0 - u,
        Copula::Independent => unit_open(rng),
        Copula::X { lambda } => {
            if unit_open(rng) < lambda {
                u
            } else {
                1.0 - u
            }
        }
        Copula::V => (2.0 * u - 1.0).abs(),
        Copula::Diamond => {
            let s = if rng.next_u64() & 1 == 1 { 1.0 } else { -1.0 };
            0.5 + s * (0.5 - (u - 0.5).abs())
        }
    };
    Ok((spec.mu.quantile(u)?, spec.nu.quantile(v)?))
}

/// A discrete coupling: nonnegative mass matrix with prescribed marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    /// Support of the first marginal, sorted.
    pub xs: Vec<f64>,
    /// Support of the second marginal, sorted.
    pub ys: Vec<f64>,
    /// Row weights (first marginal).
    pub mu: Vec<f64>,
    /// Column weights (second marginal).
    pub nu: Vec<f64>,
    /// Row-major `xs.len() x ys.len()` mass matrix.
    pub mass: Vec<f64>,
}

impl TransportPlan {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, mu: Vec<f64>, nu: Vec<f64>, mass: Vec<f64>) -> Result<Self> {
        if xs.len() != mu.len() || ys.len() != nu.len() || mass.len() != xs.len() * ys.len() {
            return Err(Error::SizeMismatch(format!(
                "plan dimensions: {} xs, {} mu, {} ys, {} nu, {} mass entries",
                xs.len(),
                mu.len(),
                ys.len(),
                nu.len(),
                mass.len()
            )));
        }
        let plan = TransportPlan { xs, ys, mu, nu, mass };
        plan.validate(1e-9)?;
        Ok(plan)
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn m(&self) -> usize {
        self.ys.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.ys.len() + j]
    }

    /// Check nonnegativity and marginal consistency within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let (n, m) = (self.n(), self.m());
        if self.mass.iter().any(|&v| v < -1e-12 || !v.is_finite()) {
            return Err(Error::InvalidMarginal("plan has negative or non-finite mass".into()));
        }
        for i in 0..n {
            let row: f64 = (0..m).map(|j| self.at(i, j)).sum();
            if (row - self.mu[i]).abs() > tol {
                return Err(Error::InvalidMarginal(format!(
                    "row {i} sums to {row}, marginal weight is {}",
                    self.mu[i]
                )));
            }
        }
        for j in 0..m {
            let col: f64 = (0..n).map(|i| self.at(i, j)).sum();
            if (col - self.nu[j]).abs() > tol {
                return Err(Error::InvalidMarginal(format!(
                    "column {j} sums to {col}, marginal weight is {}",
                    self.nu[j]
                )));
            }
        }
        Ok(())
    }

    /// The product plan `mu (x) nu`.
    pub fn independent(mu_d: &Marginal, nu_d: &Marginal) -> Result<Self> {
        let (xs, mu) = mu_d.atoms()?;
        let (ys, nu) = nu_d.atoms()?;
        let mut mass = Vec::with_capacity(xs.len() * ys.len());
        for wi in &mu {
            for wj in &nu {
                mass.push(wi * wj);
            }
        }
        TransportPlan::new(xs, ys, mu, nu, mass)
    }

    /// Total-variation distance to another plan on the same supports.
    pub fn tv_distance(&self, other: &TransportPlan) -> Result<f64> {
        if self.n() != other.n() || self.m() != other.m() {
            return Err(Error::SizeMismatch("plans have different shapes".into()));
        }
        Ok(0.5
            * self
                .mass
                .iter()
                .zip(&other.mass)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// Serialize nonzero entries as CSV with header `x,y,mass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,mass\n");
        for i in 0..self.n() {
            for j in 0..self.m() {
                let v = self.at(i, j);
                if v > 0.0 {
                    out.push_str(&format!("{},{},{}\n", self.xs[i], self.ys[j], v));
                }
            }
        }
        out
    }
}

/// Discretize the coupling onto discrete marginals via Sklar rectangle
/// increments of the copula composed with the marginal cdfs.
pub fn to_plan(spec: &CouplingSpec, mu_d: &Marginal, nu_d: &Marginal) -> Result<TransportPlan> {
    let (xs, mu) = mu_d.atoms()?;
    let (ys, nu) = nu_d.atoms()?;
    let (n, m) = (xs.len(), ys.len());

    let mut fu = Vec::with_capacity(n + 1);
    fu.push(0.0);
    let mut acc = 0.0;
    for w in &mu {
        acc += w;
        fu.push(acc.min(1.0));
    }
    *fu.last_mut().unwrap() = 1.0;
    let mut gv = Vec::with_capacity(m + 1);
    gv.push(0.0);
    acc = 0.0;
    for w in &nu {
        acc += w;
        gv.push(acc.min(1.0));
    }
    *gv.last_mut().unwrap() = 1.0;

    let mut mass = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            let inc = copula_cdf(spec, fu[i + 1], gv[j + 1])? - copula_cdf(spec, fu[i], gv[j + 1])?
                - copula_cdf(spec, fu[i + 1], gv[j])?
                + copula_cdf(spec, fu[i], gv[j])?;
            // clamp floating-point cancellation
            mass[i * m + j] = inc.max(0.0);
        }
    }
    // renormalize rows whose clamped sum drifted from the marginal weight
    for i in 0..n {
        let row: f64 = mass[i * m..(i + 1) * m].iter().sum();
        if (row - mu[i]).abs() > 1e-12 && row > 0.0 {
            let scale = mu[i] / row;
            for v in &mut mass[i * m..(i + 1) * m] {
                *v *= scale;
            }
        }
    }
    TransportPlan::new(xs, ys, mu, nu, mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit() -> Marginal {
        Marginal::uniform(0.0, 1.0).unwrap()
    }

    fn spec(c: Copula) -> CouplingSpec {
        CouplingSpec::new(c, unit(), unit()).unwrap()
    }

    #[test]
    fn diamond_cdf_examples() {
        assert_abs_diff_eq!(diamond_cdf(0.5, 0.5).unwrap(), 0.25);
        assert_abs_diff_eq!(diamond_cdf(1.0, 0.3).unwrap(), 0.3);
        assert_abs_diff_eq!(diamond_cdf(0.4, 1.0).unwrap(), 0.4);
        assert_abs_diff_eq!(diamond_cdf(0.9, 0.9).unwrap(), 0.8);
        assert_abs_diff_eq!(diamond_cdf(0.1, 0.1).unwrap(), 0.0);
        assert!(diamond_cdf(1.1, 0.5).is_err());
    }

    #[test]
    fn copula_cdf_examples() {
        assert_abs_diff_eq!(copula_cdf(&spec(Copula::Comonotone), 0.3, 0.7).unwrap(), 0.3);
        assert_abs_diff_eq!(copula_cdf(&spec(Copula::X { lambda: 0.5 }), 0.6, 0.6).unwrap(), 0.4);
        for t in [0.0, 0.2, 0.5, 0.9, 1.0] {
            assert_abs_diff_eq!(copula_cdf(&spec(Copula::V), 0.5, t).unwrap(), t / 2.0);
        }
        assert!(copula_cdf(&spec(Copula::Independent), -0.1, 0.5).is_err());
    }

    #[test]
    fn frechet_bounds_and_margins() {
        let specs = [
            spec(Copula::Comonotone),
            spec(Copula::Antimonotone),
            spec(Copula::Independent),
            spec(Copula::X { lambda: 0.3 }),
            spec(Copula::V),
            spec(Copula::Diamond),
        ];
        for s in &specs {
            for iu in 0..=100 {
                for iv in 0..=100 {
                    let (u, v) = (iu as f64 / 100.0, iv as f64 / 100.0);
                    let c = copula_cdf(s, u, v).unwrap();
                    assert!(c >= (u + v - 1.0).max(0.0) - 1e-12, "{} ({u},{v})", s.copula.label());
                    assert!(c <= u.min(v) + 1e-12, "{} ({u},{v})", s.copula.label());
                }
                let t = iu as f64 / 100.0;
                assert_abs_diff_eq!(copula_cdf(s, t, 1.0).unwrap(), t, epsilon = 1e-12);
                assert_abs_diff_eq!(copula_cdf(s, 1.0, t).unwrap(), t, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn diamond_samples_on_support() {
        let s = spec(Copula::Diamond);
        let pairs = sample_coupling(&s, 10_000, 9).unwrap();
        for (u, v) in pairs {
            assert_abs_diff_eq!((u - 0.5).abs() + (v - 0.5).abs(), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn diamond_conditional_mean_is_half() {
        let s = spec(Copula::Diamond);
        let pairs = sample_coupling(&s, 100_000, 11).unwrap();
        let mut sums = [0.0; 10];
        let mut counts = [0usize; 10];
        for (u, v) in pairs {
            let bin = ((u * 10.0) as usize).min(9);
            sums[bin] += v;
            counts[bin] += 1;
        }
        for b in 0..10 {
            let mean = sums[b] / counts[b] as f64;
            assert!((mean - 0.5).abs() < 0.02, "bin {b}: E[V|U] ~ {mean}");
        }
    }

    #[test]
    fn comonotone_equal_marginals_samples_on_diagonal() {
        let s = spec(Copula::Comonotone);
        for (x, y) in sample_coupling(&s, 1000, 5).unwrap() {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn empirical_cdf_matches_copula() {
        for c in [Copula::X { lambda: 0.7 }, Copula::V, Copula::Diamond, Copula::Independent] {
            let s = spec(c);
            let pairs = sample_coupling(&s, 100_000, 123).unwrap();
            let n = pairs.len() as f64;
            let mut worst = 0.0_f64;
            for iu in 1..10 {
                for iv in 1..10 {
                    let (u, v) = (iu as f64 / 10.0, iv as f64 / 10.0);
                    let emp = pairs.iter().filter(|(x, y)| *x <= u && *y <= v).count() as f64 / n;
                    worst = worst.max((emp - copula_cdf(&s, u, v).unwrap()).abs());
                }
            }
            assert!(worst < 0.02, "{}: sup-norm {worst}", c.label());
        }
    }

    #[test]
    fn to_plan_examples() {
        let two = Marginal::discrete(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap();
        let s = CouplingSpec::new(Copula::Comonotone, two.clone(), two.clone()).unwrap();
        let p = to_plan(&s, &two, &two).unwrap();
        assert_eq!(p.mass, vec![0.5, 0.0, 0.0, 0.5]);

        let s = CouplingSpec::new(Copula::Antimonotone, two.clone(), two.clone()).unwrap();
        let p = to_plan(&s, &two, &two).unwrap();
        assert_eq!(p.mass, vec![0.0, 0.5, 0.5, 0.0]);

        let b = Marginal::bernoulli(0.5).unwrap();
        let s = CouplingSpec::new(Copula::Diamond, b.clone(), b.clone()).unwrap();
        let p = to_plan(&s, &b, &b).unwrap();
        for v in &p.mass {
            assert_abs_diff_eq!(*v, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn to_plan_marginals_exact() {
        let mu = Marginal::exponential(1.0).unwrap().discretize(17).unwrap();
        let nu = Marginal::normal(0.0, 1.0).unwrap().discretize(23).unwrap();
        for c in [
            Copula::Comonotone,
            Copula::Antimonotone,
            Copula::Independent,
            Copula::X { lambda: 0.25 },
            Copula::V,
            Copula::Diamond,
        ] {
            let s = CouplingSpec::new(c, mu.clone(), nu.clone()).unwrap();
            let p = to_plan(&s, &mu, &nu).unwrap();
            p.validate(1e-12).unwrap();
        }
    }

    #[test]
    fn plan_csv_roundtrip_shape() {
        let two = Marginal::discrete(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap();
        let s = CouplingSpec::new(Copula::Comonotone, two.clone(), two.clone()).unwrap();
        let csv = to_plan(&s, &two, &two).unwrap().to_csv();
        assert_eq!(csv, "x,y,mass\n1,1,0.5\n2,2,0.5\n");
    }

    #[test]
    fn copula_parse() {
        assert_eq!(Copula::parse("com").unwrap(), Copula::Comonotone);
        assert_eq!(Copula::parse("x:lambda=0.25").unwrap(), Copula::X { lambda: 0.25 });
        assert!(Copula::parse("x:lambda=2").is_err());
        assert!(Copula::parse("w").is_err());
    }
}
