//! Offspring distributions and their generating functions.
//!
//! For an offspring law `p = (p0, p1, ...)` the generating function is
//! `G(x) = sum p_i x^i`; the game maps are `F = 1 - G` and `H = 1 - G + p0`.
//! Parametric laws keep closed forms for `G` and `G'`; finite-support laws
//! are evaluated with a sparse Horner scheme, which also handles laws such
//! as `p0 = p1 = 1/K, p_{K^3} = 1 - 2/K` without materializing `K^3`
//! coefficients.

mod family;
mod literal;
mod sampler;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub use family::{Family, FamilyId};
pub use sampler::OffspringSampler;

/// Largest tolerated deviation of a probability vector's sum from one.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Nonzero coefficients `(degree, probability)` in increasing degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSupport {
    terms: Vec<(u64, f64)>,
}

impl FiniteSupport {
    pub fn terms(&self) -> &[(u64, f64)] {
        &self.terms
    }

    pub fn max_degree(&self) -> u64 {
        self.terms.last().map_or(0, |t| t.0)
    }

    fn prob(&self, k: u64) -> f64 {
        self.terms
            .binary_search_by_key(&k, |t| t.0)
            .map_or(0.0, |i| self.terms[i].1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    FiniteSupport(FiniteSupport),
    Poisson { lambda: f64 },
    Geometric { alpha: f64 },
    Binomial { n: u32, p: f64 },
}

/// A validated offspring law. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringDistribution {
    law: Law,
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::OutOfDomain { x })
    }
}

#[inline]
fn pow(x: f64, k: u64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        2 => x * x,
        k if k <= i32::MAX as u64 => x.powi(k as i32),
        k => x.powf(k as f64),
    }
}

/// `sum p x^d` over ascending `(d, p)` terms, Horner-style across gaps.
#[inline]
fn sparse_horner(terms: impl DoubleEndedIterator<Item = (u64, f64)>, x: f64) -> f64 {
    let mut acc = 0.0;
    let mut deg: Option<u64> = None;
    for (d, p) in terms.rev() {
        acc = match deg {
            None => p,
            Some(prev) => acc * pow(x, prev - d) + p,
        };
        deg = Some(d);
    }
    acc * pow(x, deg.unwrap_or(0))
}

impl OffspringDistribution {
    /// Finite-support law from a dense vector `p0, p1, ..., pd`.
    pub fn finite(probs: &[f64]) -> Result<Self> {
        let terms = probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (i as u64, p))
            .collect::<Vec<_>>();
        Self::from_terms(terms)
    }

    /// Finite-support law from `(degree, probability)` pairs in any order.
    /// Repeated degrees are summed and zero entries dropped.
    pub fn from_terms(mut terms: Vec<(u64, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidDistribution("empty probability vector".into()));
        }
        for &(d, p) in &terms {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "p{d} = {p} is not a nonnegative number"
                )));
            }
        }
        terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(u64, f64)> = Vec::with_capacity(terms.len());
        for (d, p) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == d => last.1 += p,
                _ => merged.push((d, p)),
            }
        }
        merged.retain(|t| t.1 > 0.0);
        let sum: f64 = merged.iter().map(|t| t.1).sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        if sum != 1.0 {
            for t in &mut merged {
                t.1 /= sum;
            }
        }
        Ok(Self {
            law: Law::FiniteSupport(FiniteSupport { terms: merged }),
        })
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "Poisson mean must be positive, got {lambda}"
            )));
        }
        Ok(Self {
            law: Law::Poisson { lambda },
        })
    }

    pub fn geometric(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidDistribution(format!(
                "geometric parameter must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(Self {
            law: Law::Geometric { alpha },
        })
    }

    pub fn binomial(n: u32, p: f64) -> Result<Self> {
        if n == 0 || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDistribution(format!(
                "binomial needs n >= 1 and p in [0, 1], got n = {n}, p = {p}"
            )));
        }
        Ok(Self {
            law: Law::Binomial { n, p },
        })
    }

    /// Point mass at `k` children.
    pub fn point_mass(k: u64) -> Self {
        Self {
            law: Law::FiniteSupport(FiniteSupport {
                terms: vec![(k, 1.0)],
            }),
        }
    }

    /// Finite-support law on `{0..max_support}` with weights proportional to
    /// independent standard exponential draws. Deterministic in `seed`.
    pub fn random(seed: u64, max_support: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..=max_support).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
        Self::finite(&probs).expect("normalized exponential weights form a distribution")
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn is_finite_support(&self) -> bool {
        matches!(self.law, Law::FiniteSupport(_))
    }

    /// Dense probability vector for finite-support laws.
    pub fn probs(&self) -> Option<Vec<f64>> {
        match &self.law {
            Law::FiniteSupport(fs) => {
                let mut v = vec![0.0; fs.max_degree() as usize + 1];
                for &(d, p) in &fs.terms {
                    v[d as usize] = p;
                }
                Some(v)
            }
            _ => None,
        }
    }

    pub fn pmf(&self, k: u64) -> f64 {
        match self.law {
            Law::FiniteSupport(ref fs) => fs.prob(k),
            Law::Poisson { lambda } => {
                let ln = -lambda + k as f64 * lambda.ln() - ln_factorial(k);
                ln.exp()
            }
            Law::Geometric { alpha } => (1.0 - alpha) * pow(alpha, k),
            Law::Binomial { n, p } => {
                if k > n as u64 {
                    return 0.0;
                }
                let k32 = k as u32;
                binomial_coefficient(n, k32) * p.powi(k32 as i32) * (1.0 - p).powi((n - k32) as i32)
            }
        }
    }

    pub fn p0(&self) -> f64 {
        match self.law {
            Law::FiniteSupport(ref fs) => fs.prob(0),
            Law::Poisson { lambda } => (-lambda).exp(),
            Law::Geometric { alpha } => 1.0 - alpha,
            Law::Binomial { n, p } => (1.0 - p).powi(n as i32),
        }
    }

    pub fn p1(&self) -> f64 {
        self.pmf(1)
    }

    pub fn mean(&self) -> f64 {
        match self.law {
            Law::FiniteSupport(ref fs) => fs.terms.iter().map(|&(d, p)| d as f64 * p).sum(),
            Law::Poisson { lambda } => lambda,
            Law::Geometric { alpha } => alpha / (1.0 - alpha),
            Law::Binomial { n, p } => n as f64 * p,
        }
    }

    /// `G(x) - p0`, computed without cancellation at small `x`.
    #[inline]
    pub(crate) fn g_above_p0(&self, x: f64) -> f64 {
        match self.law {
            Law::FiniteSupport(ref fs) => {
                sparse_horner(fs.terms.iter().copied().filter(|t| t.0 > 0), x)
            }
            Law::Poisson { lambda } => (-lambda).exp() * (lambda * x).exp_m1(),
            Law::Geometric { alpha } => (1.0 - alpha) * alpha * x / (1.0 - alpha * x),
            Law::Binomial { n, p } => (1.0 - p + p * x).powi(n as i32) - (1.0 - p).powi(n as i32),
        }
    }

    #[inline]
    pub(crate) fn g_unchecked(&self, x: f64) -> f64 {
        if x == 1.0 {
            return 1.0;
        }
        match self.law {
            Law::FiniteSupport(ref fs) => sparse_horner(fs.terms.iter().copied(), x),
            Law::Poisson { lambda } => (-lambda * (1.0 - x)).exp(),
            Law::Geometric { alpha } => (1.0 - alpha) / (1.0 - alpha * x),
            Law::Binomial { n, p } => (1.0 - p + p * x).powi(n as i32),
        }
    }

    #[inline]
    pub(crate) fn g_prime_unchecked(&self, x: f64) -> f64 {
        match self.law {
            Law::FiniteSupport(ref fs) => sparse_horner(
                fs.terms
                    .iter()
                    .filter(|t| t.0 > 0)
                    .map(|&(d, p)| (d - 1, d as f64 * p)),
                x,
            ),
            Law::Poisson { lambda } => lambda * (-lambda * (1.0 - x)).exp(),
            Law::Geometric { alpha } => {
                let q = 1.0 - alpha * x;
                (1.0 - alpha) * alpha / (q * q)
            }
            Law::Binomial { n, p } => {
                n as f64 * p * (1.0 - p + p * x).powi(n as i32 - 1)
            }
        }
    }

    /// Divided difference `(G(y) - G(x)) / (y - x)`, equal to `G'(x)` when
    /// `x == y`. Evaluated without subtracting nearly equal values.
    pub(crate) fn g_slope(&self, x: f64, y: f64) -> f64 {
        let (x, y) = if x <= y { (x, y) } else { (y, x) };
        if x == y {
            return self.g_prime_unchecked(x);
        }
        match self.law {
            Law::FiniteSupport(ref fs) => fs
                .terms
                .iter()
                .filter(|t| t.0 > 0)
                .map(|&(d, p)| p * monomial_slope(d, x, y))
                .sum(),
            Law::Poisson { lambda } => {
                (-lambda * (1.0 - x)).exp() * (lambda * (y - x)).exp_m1() / (y - x)
            }
            Law::Geometric { alpha } => {
                (1.0 - alpha) * alpha / ((1.0 - alpha * x) * (1.0 - alpha * y))
            }
            Law::Binomial { n, p } => {
                let u = 1.0 - p + p * x;
                let v = 1.0 - p + p * y;
                if u == v {
                    n as f64 * p * u.powi(n as i32 - 1)
                } else {
                    p * monomial_slope(n as u64, u, v)
                }
            }
        }
    }

    #[inline]
    pub(crate) fn f_unchecked(&self, x: f64) -> f64 {
        1.0 - self.g_unchecked(x)
    }

    #[inline]
    pub(crate) fn h_unchecked(&self, x: f64) -> f64 {
        1.0 - self.g_above_p0(x)
    }

    /// Generating function `G(x)` on `[0, 1]`.
    pub fn g(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.g_unchecked(x))
    }

    /// Derivative `G'(x)`; `G'(1)` is the mean.
    pub fn g_prime(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.g_prime_unchecked(x))
    }

    /// `F(x) = 1 - G(x)`.
    pub fn f(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.f_unchecked(x))
    }

    /// `H(x) = 1 - G(x) + p0`.
    pub fn h(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.h_unchecked(x))
    }

    /// Finite-support copy of this law, cut where the remaining tail mass
    /// drops below `tail` and renormalized.
    pub fn truncated(&self, tail: f64) -> Result<Self> {
        if let Law::FiniteSupport(_) = self.law {
            return Ok(self.clone());
        }
        let mut probs = Vec::new();
        let mut mass = 0.0;
        let mut k = 0;
        while 1.0 - mass >= tail {
            let p = self.pmf(k);
            probs.push(p);
            mass += p;
            k += 1;
            if k > 100_000 {
                return Err(Error::InvalidDistribution(
                    "tail too heavy to truncate".into(),
                ));
            }
        }
        let sum: f64 = probs.iter().sum();
        let probs: Vec<f64> = probs.iter().map(|p| p / sum).collect();
        Self::finite(&probs)
    }

    pub fn sampler(&self) -> OffspringSampler {
        OffspringSampler::new(self)
    }
}

/// `(y^d - x^d) / (y - x)` for `0 <= x < y`.
fn monomial_slope(d: u64, x: f64, y: f64) -> f64 {
    if d == 1 {
        return 1.0;
    }
    if x == 0.0 {
        return pow(y, d - 1);
    }
    let delta = (y - x) / x;
    let growth = d as f64 * delta.ln_1p();
    if growth > 1.0 {
        (pow(y, d) - pow(x, d)) / (y - x)
    } else {
        pow(x, d - 1) * growth.exp_m1() / delta
    }
}

fn ln_factorial(k: u64) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

fn binomial_coefficient(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Finite-support law on `{0..max_support}` built from normalized
/// exponential draws seeded by `seed`.
pub fn random_distribution(seed: u64, max_support: usize) -> OffspringDistribution {
    OffspringDistribution::random(seed, max_support)
}

impl Serialize for OffspringDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn binary(t: f64) -> OffspringDistribution {
        OffspringDistribution::finite(&[1.0 - t, 0.0, t]).unwrap()
    }

    #[test]
    fn binary_generating_function() {
        let d = binary(0.85);
        assert_abs_diff_eq!(d.g(0.0).unwrap(), 0.15, epsilon = 1e-15);
        for &x in &[0.0, 0.2, 0.5, 0.9] {
            assert_abs_diff_eq!(d.f(x).unwrap(), 0.85 * (1.0 - x * x), epsilon = 1e-15);
            assert_abs_diff_eq!(d.h(x).unwrap(), 1.0 - 0.85 * x * x, epsilon = 1e-15);
            assert_abs_diff_eq!(d.g_prime(x).unwrap(), 2.0 * 0.85 * x, epsilon = 1e-15);
        }
    }

    #[test]
    fn unit_at_one_and_mean_slope() {
        let laws = [
            binary(0.3),
            OffspringDistribution::poisson(2.5).unwrap(),
            OffspringDistribution::geometric(0.4).unwrap(),
            OffspringDistribution::binomial(3, 0.8).unwrap(),
            OffspringDistribution::random(9, 6),
        ];
        for d in &laws {
            assert_eq!(d.g(1.0).unwrap(), 1.0);
            assert_abs_diff_eq!(d.g_prime(1.0).unwrap(), d.mean(), epsilon = 1e-12);
            assert_abs_diff_eq!(d.f(1.0).unwrap(), 0.0);
            assert_abs_diff_eq!(d.h(1.0).unwrap(), d.p0(), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(OffspringDistribution::geometric(0.4).unwrap().mean(), 0.4 / 0.6);
    }

    #[test]
    fn poisson_closed_form() {
        let d = OffspringDistribution::poisson(2.0).unwrap();
        assert_abs_diff_eq!(d.g(0.5).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        let e = std::f64::consts::E;
        let d = OffspringDistribution::poisson(e).unwrap();
        assert_abs_diff_eq!(d.g_prime(1.0 - 1.0 / e).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(binary(0.5).g(1.5).is_err());
        assert!(binary(0.5).g(-0.1).is_err());
        assert!(OffspringDistribution::finite(&[0.5, 0.6]).is_err());
        assert!(OffspringDistribution::finite(&[-0.1, 1.1]).is_err());
        assert!(OffspringDistribution::finite(&[]).is_err());
        assert!(OffspringDistribution::poisson(0.0).is_err());
        assert!(OffspringDistribution::geometric(1.0).is_err());
        assert!(OffspringDistribution::binomial(0, 0.5).is_err());
    }

    #[test]
    fn near_unit_sums_are_renormalized() {
        let d = OffspringDistribution::finite(&[0.3, 0.3, 0.4 + 5e-13]).unwrap();
        let total: f64 = d.probs().unwrap().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn random_distribution_is_reproducible() {
        let single = random_distribution(1, 0);
        assert_eq!(single.probs().unwrap(), vec![1.0]);
        let a = random_distribution(42, 5);
        let b = random_distribution(42, 5);
        assert_eq!(a, b);
        assert_ne!(a, random_distribution(43, 5));
        let total: f64 = a.probs().unwrap().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sparse_law_with_huge_degree() {
        let k = 1000.0f64;
        let d = OffspringDistribution::from_terms(vec![
            (0, 1.0 / k),
            (1, 1.0 / k),
            (1_000_000_000, 1.0 - 2.0 / k),
        ])
        .unwrap();
        assert_abs_diff_eq!(d.mean(), 1.0 / k + 1e9 * (1.0 - 2.0 / k), epsilon = 1e-3);
        assert_abs_diff_eq!(d.g(0.5).unwrap(), 1.0 / k + 0.5 / k, epsilon = 1e-15);
    }

    #[test]
    fn poisson_truncation_matches_closed_form() {
        for &lambda in &[0.5, 2.5, 7.0] {
            let d = OffspringDistribution::poisson(lambda).unwrap();
            let t = d.truncated(1e-12).unwrap();
            for i in 0..100 {
                let x = i as f64 / 99.0;
                assert_abs_diff_eq!(t.g(x).unwrap(), d.g(x).unwrap(), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn divided_differences() {
        let laws = [
            OffspringDistribution::finite(&[0.1, 0.2, 0.3, 0.0, 0.4]).unwrap(),
            OffspringDistribution::from_terms(vec![(0, 0.5), (40, 0.5)]).unwrap(),
            OffspringDistribution::poisson(3.0).unwrap(),
            OffspringDistribution::geometric(0.6).unwrap(),
            OffspringDistribution::binomial(4, 0.7).unwrap(),
        ];
        for d in &laws {
            for &(x, y) in &[(0.0, 1.0), (0.2, 0.7), (0.9, 0.3), (0.5, 0.5 + 1e-9), (0.0, 0.4)] {
                let direct = (d.g_unchecked(y) - d.g_unchecked(x)) / (y - x);
                let tol = if (y - x).abs() < 1e-6 { 1e-6 } else { 1e-13 };
                assert_abs_diff_eq!(d.g_slope(x, y), direct, epsilon = tol);
            }
            assert_abs_diff_eq!(d.g_slope(0.4, 0.4), d.g_prime_unchecked(0.4), epsilon = 1e-15);
            assert_abs_diff_eq!(d.g_slope(0.4, 0.4 + 1e-12), d.g_prime_unchecked(0.4), epsilon = 1e-10);
        }
    }

    #[test]
    fn pmf_matches_generating_function() {
        for d in [
            OffspringDistribution::poisson(1.7).unwrap(),
            OffspringDistribution::geometric(0.3).unwrap(),
            OffspringDistribution::binomial(5, 0.35).unwrap(),
        ] {
            let x: f64 = 0.37;
            let series: f64 = (0..200).map(|k| d.pmf(k) * x.powi(k as i32)).sum();
            assert_abs_diff_eq!(series, d.g(x).unwrap(), epsilon = 1e-13);
            assert_abs_diff_eq!(d.pmf(0), d.p0(), epsilon = 1e-15);
        }
    }
}
