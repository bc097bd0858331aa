//! One-dimensional probability measures exposed through their cdf and left
//! quantile function, with midpoint-quantile discretization and
//! inverse-transform sampling.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf;

use crate::error::{Error, Result};

/// `E[Z * (-ln(1 - Phi(Z)))]` for standard normal `Z`, i.e. the integral of
/// `Phi^{-1}(t) * (-ln(1-t))` over (0,1). Precomputed to full precision.
const GAUSS_EXP_CROSS: f64 = 0.903_197_285_568_625_35;
/// Integral of `t * Phi^{-1}(t)` over (0,1), equal to `1/(2*sqrt(pi))`.
const UNIT_GAUSS_CROSS: f64 = 0.282_094_791_773_878_14;

/// A probability measure on the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Marginal {
    Uniform { a: f64, b: f64 },
    Normal { mean: f64, sd: f64 },
    Exponential { rate: f64 },
    Bernoulli { p: f64 },
    Discrete { points: Vec<f64>, weights: Vec<f64> },
}

impl Marginal {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidMarginal(format!("uniform requires a < b, got ({a}, {b})")));
        }
        Ok(Marginal::Uniform { a, b })
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) || !mean.is_finite() || !sd.is_finite() {
            return Err(Error::InvalidMarginal(format!("normal requires sd > 0, got ({mean}, {sd})")));
        }
        Ok(Marginal::Normal { mean, sd })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidMarginal(format!("exponential requires rate > 0, got {rate}")));
        }
        Ok(Marginal::Exponential { rate })
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidMarginal(format!("bernoulli requires p in [0,1], got {p}")));
        }
        Ok(Marginal::Bernoulli { p })
    }

    /// A discrete measure on strictly increasing support points. Weights must
    /// be nonnegative and sum to 1 within 1e-12.
    pub fn discrete(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(Error::InvalidMarginal("points and weights must be nonempty and equal-length".into()));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidMarginal("points must be strictly increasing".into()));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidMarginal("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMarginal(format!("weights sum to {total}, expected 1")));
        }
        Ok(Marginal::Discrete { points, weights })
    }

    /// A single atom at `x`.
    pub fn point_mass(x: f64) -> Self {
        Marginal::Discrete { points: vec![x], weights: vec![1.0] }
    }

    /// Parse the CLI mini-language: `U(a,b)`, `N(m,s)`, `Exp(rate)`,
    /// `Bern(p)`, `discrete:<path.csv>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if let Some(path) = spec.strip_prefix("discrete:") {
            return Self::from_csv(path.trim());
        }
        let (name, rest) = spec
            .split_once('(')
            .ok_or_else(|| Error::Parse(format!("marginal spec `{spec}`: expected `Name(args)`")))?;
        let args = rest
            .strip_suffix(')')
            .ok_or_else(|| Error::Parse(format!("marginal spec `{spec}`: missing `)`")))?;
        let vals: Vec<f64> = args
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("marginal spec `{spec}`: bad number `{s}`")))
            })
            .collect::<Result<_>>()?;
        let expect = |n: usize| {
            if vals.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!("marginal spec `{spec}`: expected {n} arguments")))
            }
        };
        match name.trim() {
            "U" => {
                expect(2)?;
                Self::uniform(vals[0], vals[1])
            }
            "N" => {
                expect(2)?;
                Self::normal(vals[0], vals[1])
            }
            "Exp" => {
                expect(1)?;
                Self::exponential(vals[0])
            }
            "Bern" => {
                expect(1)?;
                Self::bernoulli(vals[0])
            }
            other => Err(Error::Parse(format!("unknown marginal kind `{other}`"))),
        }
    }

    /// Read a discrete marginal from a CSV file with header `point,prob`,
    /// rows sorted by point, probabilities summing to 1 within 1e-9.
    pub fn from_csv(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "point,prob" => {}
            _ => return Err(Error::Parse(format!("{path}:1: expected header `point,prob`"))),
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (p, w) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("{path}:{}: expected `point,prob`", i + 1)))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("{path}:{}: bad point `{p}`", i + 1)))?;
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("{path}:{}: bad prob `{w}`", i + 1)))?;
            points.push(p);
            weights.push(w);
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Parse(format!("{path}: probabilities sum to {total}")));
        }
        // renormalize the <=1e-9 drift so the Marginal invariant holds exactly
        for w in &mut weights {
            *w /= total;
        }
        Self::discrete(points, weights)
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Marginal::Discrete { .. } | Marginal::Bernoulli { .. })
    }

    /// Left quantile `Q(t) = inf {x : F(x) >= t}`.
    ///
    /// `t = 0` maps to the essential infimum when finite and errors for
    /// measures unbounded below.
    pub fn quantile(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("quantile level {t} outside [0,1]")));
        }
        if t == 0.0 {
            return match self {
                Marginal::Uniform { a, .. } => Ok(*a),
                Marginal::Normal { .. } => Err(Error::Unbounded),
                Marginal::Exponential { .. } => Ok(0.0),
                Marginal::Bernoulli { .. } => Ok(0.0),
                Marginal::Discrete { points, .. } => Ok(points[0]),
            };
        }
        Ok(match self {
            Marginal::Uniform { a, b } => a + (b - a) * t,
            Marginal::Normal { mean, sd } => mean + sd * std_normal_quantile(t),
            Marginal::Exponential { rate } => {
                if t == 1.0 {
                    f64::INFINITY
                } else {
                    -(-t).ln_1p() / rate
                }
            }
            Marginal::Bernoulli { p } => {
                if t <= 1.0 - p {
                    0.0
                } else {
                    1.0
                }
            }
            Marginal::Discrete { points, weights } => {
                let mut cum = 0.0;
                for (x, w) in points.iter().zip(weights) {
                    cum += w;
                    // left quantile: first point whose cdf reaches t
                    if cum >= t - 1e-15 {
                        return Ok(*x);
                    }
                }
                *points.last().unwrap()
            }
        })
    }

    /// Right-continuous cdf `F(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Marginal::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Marginal::Normal { mean, sd } => std_normal_cdf((x - mean) / sd),
            Marginal::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Marginal::Bernoulli { p } => {
                if x < 0.0 {
                    0.0
                } else if x < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            Marginal::Discrete { points, weights } => {
                let mut cum = 0.0;
                for (xi, w) in points.iter().zip(weights) {
                    if *xi <= x {
                        cum += w;
                    } else {
                        break;
                    }
                }
                cum
            }
        }
    }

    /// Discretize to `n` atoms of weight `1/n` at the midpoint quantile
    /// levels `(2i-1)/(2n)`. Duplicate support points are merged.
    pub fn discretize(&self, n: usize) -> Result<Marginal> {
        if n == 0 {
            return Err(Error::BadParams("discretize requires n >= 1".into()));
        }
        let w = 1.0 / n as f64;
        let mut points: Vec<f64> = Vec::with_capacity(n);
        let mut weights: Vec<f64> = Vec::with_capacity(n);
        for i in 1..=n {
            let t = (2 * i - 1) as f64 / (2 * n) as f64;
            let x = self.quantile(t)?;
            match points.last() {
                Some(&last) if last == x => *weights.last_mut().unwrap() += w,
                _ => {
                    points.push(x);
                    weights.push(w);
                }
            }
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Marginal::discrete(points, weights)
    }

    /// Inverse-transform sampling; deterministic given `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| self.quantile(unit_open(&mut rng)).expect("u in (0,1)"))
            .collect()
    }

    pub fn mean(&self) -> f64 {
        match self {
            Marginal::Uniform { a, b } => 0.5 * (a + b),
            Marginal::Normal { mean, .. } => *mean,
            Marginal::Exponential { rate } => 1.0 / rate,
            Marginal::Bernoulli { p } => *p,
            Marginal::Discrete { points, weights } => {
                points.iter().zip(weights).map(|(x, w)| x * w).sum()
            }
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            Marginal::Uniform { a, b } => (a * a + a * b + b * b) / 3.0,
            Marginal::Normal { mean, sd } => mean * mean + sd * sd,
            Marginal::Exponential { rate } => 2.0 / (rate * rate),
            Marginal::Bernoulli { p } => *p,
            Marginal::Discrete { points, weights } => {
                points.iter().zip(weights).map(|(x, w)| x * x * w).sum()
            }
        }
    }

    /// Symmetry test: returns the center when the measure is symmetric.
    ///
    /// Parametric kinds are decided in closed form up to `tol`; discrete
    /// supports use an exact weight-mirror check (points compared within
    /// `tol`, weights within 1e-12).
    pub fn is_symmetric(&self, tol: f64) -> (bool, Option<f64>) {
        match self {
            Marginal::Uniform { a, b } => (true, Some(0.5 * (a + b))),
            Marginal::Normal { mean, .. } => (true, Some(*mean)),
            Marginal::Exponential { .. } => (false, None),
            Marginal::Bernoulli { p } => {
                if *p == 0.0 {
                    (true, Some(0.0))
                } else if *p == 1.0 {
                    (true, Some(1.0))
                } else if (*p - 0.5).abs() <= tol {
                    (true, Some(0.5))
                } else {
                    (false, None)
                }
            }
            Marginal::Discrete { points, weights } => {
                let n = points.len();
                let center = 0.5 * (points[0] + points[n - 1]);
                let scale = 1.0_f64.max(points[n - 1] - points[0]);
                for i in 0..n {
                    let j = n - 1 - i;
                    if (points[i] + points[j] - 2.0 * center).abs() > tol * scale
                        || (weights[i] - weights[j]).abs() > 1e-12
                    {
                        return (false, None);
                    }
                }
                (true, Some(center))
            }
        }
    }

    /// Discrete support and weights; Bernoulli is viewed as a two-point law.
    pub fn atoms(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            Marginal::Discrete { points, weights } => Ok((points.clone(), weights.clone())),
            Marginal::Bernoulli { p } => {
                if *p == 0.0 {
                    Ok((vec![0.0], vec![1.0]))
                } else if *p == 1.0 {
                    Ok((vec![1.0], vec![1.0]))
                } else {
                    Ok((vec![0.0, 1.0], vec![1.0 - p, *p]))
                }
            }
            other => Err(Error::InvalidMarginal(format!("expected a discrete marginal, got {other:?}"))),
        }
    }
}

/// `E[Q_mu(U) Q_nu(U)]` (comonotone) or `E[Q_mu(U) Q_nu(1-U)]` (antimonotone),
/// computed in closed form for every kind pair.
pub fn quantile_cross_moment(mu: &Marginal, nu: &Marginal, antimonotone: bool) -> Result<f64> {
    match (affine_base(mu), affine_base(nu)) {
        (Some((a1, b1, k1)), Some((a2, b2, k2))) => {
            let cross = if antimonotone { base_cross_ant(k1, k2) } else { base_cross_com(k1, k2) };
            Ok(a1 * a2 + a1 * b2 * base_mean(k2) + a2 * b1 * base_mean(k1) + b1 * b2 * cross)
        }
        (None, Some(_)) => atoms_vs_parametric(mu, nu, antimonotone),
        (Some(_), None) => atoms_vs_parametric(nu, mu, antimonotone),
        (None, None) => atoms_vs_atoms(mu, nu, antimonotone),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Base {
    Unit,  // B(t) = t
    Gauss, // B(t) = Phi^{-1}(t)
    Exp,   // B(t) = -ln(1-t)
}

/// Quantile as `a + b * B(t)` for the parametric kinds.
fn affine_base(m: &Marginal) -> Option<(f64, f64, Base)> {
    match m {
        Marginal::Uniform { a, b } => Some((*a, b - a, Base::Unit)),
        Marginal::Normal { mean, sd } => Some((*mean, *sd, Base::Gauss)),
        Marginal::Exponential { rate } => Some((0.0, 1.0 / rate, Base::Exp)),
        _ => None,
    }
}

fn base_mean(k: Base) -> f64 {
    match k {
        Base::Unit => 0.5,
        Base::Gauss => 0.0,
        Base::Exp => 1.0,
    }
}

/// Integral of `B1(t) B2(t)` over (0,1).
fn base_cross_com(k1: Base, k2: Base) -> f64 {
    use Base::*;
    match (k1, k2) {
        (Unit, Unit) => 1.0 / 3.0,
        (Unit, Gauss) | (Gauss, Unit) => UNIT_GAUSS_CROSS,
        (Unit, Exp) | (Exp, Unit) => 0.75,
        (Gauss, Gauss) => 1.0,
        (Gauss, Exp) | (Exp, Gauss) => GAUSS_EXP_CROSS,
        (Exp, Exp) => 2.0,
    }
}

/// Integral of `B1(t) B2(1-t)` over (0,1).
fn base_cross_ant(k1: Base, k2: Base) -> f64 {
    use Base::*;
    match (k1, k2) {
        (Unit, Unit) => 1.0 / 6.0,
        (Unit, Gauss) | (Gauss, Unit) => -UNIT_GAUSS_CROSS,
        (Unit, Exp) | (Exp, Unit) => 0.25,
        (Gauss, Gauss) => -1.0,
        (Gauss, Exp) | (Exp, Gauss) => -GAUSS_EXP_CROSS,
        (Exp, Exp) => 2.0 - std::f64::consts::PI * std::f64::consts::PI / 6.0,
    }
}

/// Antiderivative `M(t)` of the quantile with `M(0) = 0`.
fn quantile_antiderivative(m: &Marginal, t: f64) -> f64 {
    let (a, b, k) = affine_base(m).expect("parametric marginal");
    let mb = match k {
        Base::Unit => 0.5 * t * t,
        // d/dt [-pdf(Phi^{-1}(t))] = Phi^{-1}(t); vanishes at t in {0,1}
        Base::Gauss => {
            if t <= 0.0 || t >= 1.0 {
                0.0
            } else {
                let z = std_normal_quantile(t);
                -(-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
            }
        }
        Base::Exp => {
            if t >= 1.0 {
                1.0
            } else {
                (1.0 - t) * (1.0 - t).ln() + t
            }
        }
    };
    a * t + b * mb
}

fn atoms_vs_parametric(disc: &Marginal, par: &Marginal, antimonotone: bool) -> Result<f64> {
    let (points, weights) = disc.atoms()?;
    let mut cum = 0.0;
    let mut total = 0.0;
    for (x, w) in points.iter().zip(&weights) {
        let (lo, hi) = (cum, cum + w);
        let seg = if antimonotone {
            quantile_antiderivative(par, 1.0 - lo) - quantile_antiderivative(par, 1.0 - hi)
        } else {
            quantile_antiderivative(par, hi) - quantile_antiderivative(par, lo)
        };
        total += x * seg;
        cum = hi;
    }
    Ok(total)
}

fn atoms_vs_atoms(mu: &Marginal, nu: &Marginal, antimonotone: bool) -> Result<f64> {
    let (xs, wx) = mu.atoms()?;
    let (ys, wy) = nu.atoms()?;
    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    let mut acc = 0.0;
    for w in wx.iter().take(wx.len() - 1) {
        acc += w;
        cuts.push(acc);
    }
    acc = 0.0;
    for w in wy.iter().take(wy.len() - 1) {
        acc += w;
        cuts.push(acc);
        cuts.push(1.0 - acc);
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let level = |ws: &[f64], t: f64| -> usize {
        let mut cum = 0.0;
        for (i, w) in ws.iter().enumerate() {
            cum += w;
            if t < cum {
                return i;
            }
        }
        ws.len() - 1
    };
    let mut total = 0.0;
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let x = xs[level(&wx, mid)];
        let y = if antimonotone { ys[level(&wy, 1.0 - mid)] } else { ys[level(&wy, mid)] };
        total += x * y * (hi - lo);
    }
    Ok(total)
}

/// Standard normal quantile: inverse error function refined by one Newton
/// step on the cdf, giving near machine-precision round trips.
pub fn std_normal_quantile(t: f64) -> f64 {
    if t == 0.5 {
        return 0.0;
    }
    if t > 0.5 {
        // work in the accurate left tail of erfc
        return -std_normal_quantile(1.0 - t);
    }
    let mut z = std::f64::consts::SQRT_2 * erf::erf_inv(2.0 * t - 1.0);
    for _ in 0..2 {
        let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if pdf <= f64::MIN_POSITIVE {
            break;
        }
        z -= (std_normal_cdf(z) - t) / pdf;
    }
    z
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Uniform draw strictly inside (0,1), 53-bit resolution.
pub(crate) fn unit_open(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantile_examples() {
        let u = Marginal::uniform(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(u.quantile(0.3).unwrap(), 0.3);
        let d = Marginal::discrete(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(d.quantile(0.5).unwrap(), 0.0);
        let n = Marginal::normal(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(n.quantile(0.5).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn quantile_domain_errors() {
        let n = Marginal::normal(0.0, 1.0).unwrap();
        assert!(matches!(n.quantile(-0.1), Err(Error::Domain(_))));
        assert!(matches!(n.quantile(1.5), Err(Error::Domain(_))));
        assert!(matches!(n.quantile(0.0), Err(Error::Unbounded)));
        assert_eq!(Marginal::exponential(1.0).unwrap().quantile(0.0).unwrap(), 0.0);
    }

    #[test]
    fn cdf_examples() {
        let u = Marginal::uniform(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(u.cdf(0.25), 0.25);
        let d = Marginal::discrete(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(d.cdf(0.0), 0.5);
        let e = Marginal::exponential(1.0).unwrap();
        assert_abs_diff_eq!(e.cdf(4.0_f64.ln()), 0.75, epsilon = 1e-14);
    }

    #[test]
    fn normal_quantile_accuracy() {
        // spot values from standard tables
        assert_abs_diff_eq!(std_normal_quantile(0.975), 1.959963984540054, epsilon = 1e-9);
        assert_abs_diff_eq!(std_normal_quantile(0.005), -2.5758293035489004, epsilon = 1e-9);
        for &t in &[1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9] {
            assert_abs_diff_eq!(std_normal_cdf(std_normal_quantile(t)), t, epsilon = 1e-12);
        }
    }

    #[test]
    fn discretize_examples() {
        let u = Marginal::uniform(0.0, 1.0).unwrap().discretize(2).unwrap();
        assert_eq!(u, Marginal::discrete(vec![0.25, 0.75], vec![0.5, 0.5]).unwrap());
        let e = Marginal::exponential(1.0).unwrap().discretize(2).unwrap();
        let (pts, _) = e.atoms().unwrap();
        assert_abs_diff_eq!(pts[0], -(0.75_f64.ln()), epsilon = 1e-12);
        assert_abs_diff_eq!(pts[1], -(0.25_f64.ln()), epsilon = 1e-12);
        let b = Marginal::bernoulli(0.5).unwrap().discretize(4).unwrap();
        assert_eq!(b, Marginal::discrete(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap());
    }

    #[test]
    fn sampling_reproducible_and_consistent() {
        let m = Marginal::bernoulli(0.5).unwrap();
        assert!(m.sample(0, 1).is_empty());
        let s1 = m.sample(1000, 42);
        let s2 = m.sample(1000, 42);
        assert_eq!(s1, s2);
        let big = m.sample(100_000, 7);
        let mean = big.iter().sum::<f64>() / big.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn uniform_sample_ks_statistic() {
        let m = Marginal::uniform(0.0, 1.0).unwrap();
        let mut s = m.sample(100_000, 3);
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = s.len() as f64;
        let ks = s
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = m.cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    #[test]
    fn symmetry_examples() {
        assert_eq!(Marginal::normal(0.0, 1.0).unwrap().is_symmetric(1e-9), (true, Some(0.0)));
        assert_eq!(Marginal::exponential(1.0).unwrap().is_symmetric(1e-9), (false, None));
        let d = Marginal::discrete(vec![-1.0, 0.0, 2.0], vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(d.is_symmetric(0.0), (false, None));
        let s = Marginal::discrete(vec![-1.0, 0.0, 1.0], vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(s.is_symmetric(0.0), (true, Some(0.0)));
    }

    #[test]
    fn galois_pair() {
        for m in [
            Marginal::uniform(-1.0, 3.0).unwrap(),
            Marginal::normal(1.0, 2.0).unwrap(),
            Marginal::exponential(0.7).unwrap(),
            Marginal::bernoulli(0.3).unwrap(),
            Marginal::discrete(vec![0.0, 0.5, 2.0], vec![0.2, 0.5, 0.3]).unwrap(),
        ] {
            for i in 1..20 {
                let t = i as f64 / 20.0;
                let q = m.quantile(t).unwrap();
                assert!(m.cdf(q) >= t - 1e-12, "cdf(quantile({t})) < {t} for {m:?}");
                let q2 = m.quantile(m.cdf(q)).unwrap();
                assert_abs_diff_eq!(q, q2, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn cross_moments_closed_forms() {
        let n = Marginal::normal(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(quantile_cross_moment(&n, &n, false).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(quantile_cross_moment(&n, &n, true).unwrap(), -1.0, epsilon = 1e-12);
        let u = Marginal::uniform(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(quantile_cross_moment(&u, &u, false).unwrap(), 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(quantile_cross_moment(&u, &u, true).unwrap(), 1.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn cross_moments_match_discretized() {
        // closed forms vs fine midpoint discretization, all kind pairs
        let kinds = [
            Marginal::uniform(-1.0, 2.0).unwrap(),
            Marginal::normal(0.5, 1.5).unwrap(),
            Marginal::exponential(2.0).unwrap(),
            Marginal::bernoulli(0.3).unwrap(),
            Marginal::discrete(vec![-1.0, 0.0, 4.0], vec![0.25, 0.25, 0.5]).unwrap(),
        ];
        for mu in &kinds {
            for nu in &kinds {
                for anti in [false, true] {
                    let exact = quantile_cross_moment(mu, nu, anti).unwrap();
                    let n = 4000;
                    let mut approx_val = 0.0;
                    for i in 1..=n {
                        let t = (2 * i - 1) as f64 / (2 * n) as f64;
                        let s = if anti { 1.0 - t } else { t };
                        approx_val += mu.quantile(t).unwrap() * nu.quantile(s).unwrap() / n as f64;
                    }
                    assert!(
                        (exact - approx_val).abs() < 5e-3,
                        "{mu:?} x {nu:?} anti={anti}: closed {exact} vs disc {approx_val}"
                    );
                }
            }
        }
    }

    #[test]
    fn parse_mini_language() {
        assert_eq!(Marginal::parse("U(0,1)").unwrap(), Marginal::Uniform { a: 0.0, b: 1.0 });
        assert_eq!(Marginal::parse("N(0, 1)").unwrap(), Marginal::Normal { mean: 0.0, sd: 1.0 });
        assert_eq!(Marginal::parse("Exp(2)").unwrap(), Marginal::Exponential { rate: 2.0 });
        assert_eq!(Marginal::parse("Bern(0.25)").unwrap(), Marginal::Bernoulli { p: 0.25 });
        assert!(Marginal::parse("Gamma(1)").is_err());
        assert!(Marginal::parse("U(1,0)").is_err());
    }
}
