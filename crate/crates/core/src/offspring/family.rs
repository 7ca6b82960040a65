use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use super::OffspringDistribution;
use crate::error::{Error, Result};

/// One-parameter families of offspring laws.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyId {
    /// `(p0, p1, p2) = (1 - t, 0, t)`.
    Binary,
    /// Poisson with mean `t`.
    Poisson,
    /// Geometric with `P(k) = (1 - t) t^k`.
    Geometric,
    /// Binomial with fixed `n` and success probability `t`.
    Binomial { n: u32 },
    /// `G(x) = (1 - t) + t (x^2 + x^10) / 2`.
    Exotic1,
    /// `G(x) = (1 - t) + t (0.15 x^2 + 0.85 x^20)`.
    Exotic2,
    /// `G(x) = (1/18 - t) + (2/3) x + (5/18 + t) x^3`.
    Exotic3,
    /// Componentwise `(1 - t) p + t q` between two finite-support laws.
    LinearInterpolation {
        from: Box<OffspringDistribution>,
        to: Box<OffspringDistribution>,
    },
}

impl FamilyId {
    /// Default parameter range.
    pub fn default_range(&self) -> (f64, f64) {
        match self {
            Self::Poisson => (0.01, 20.0),
            Self::Geometric => (1e-6, 1.0 - 1e-6),
            Self::Exotic3 => (-5.0 / 18.0, 1.0 / 18.0),
            _ => (0.0, 1.0),
        }
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Binary => f.write_str("binary"),
            Self::Poisson => f.write_str("poisson"),
            Self::Geometric => f.write_str("geometric"),
            Self::Binomial { n } => write!(f, "binomial-{n}"),
            Self::Exotic1 => f.write_str("exotic1"),
            Self::Exotic2 => f.write_str("exotic2"),
            Self::Exotic3 => f.write_str("exotic3"),
            Self::LinearInterpolation { from, to } => write!(f, "lerp({from};{to})"),
        }
    }
}

impl FromStr for FamilyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Literal {
            literal: s.to_string(),
            reason: reason.to_string(),
        };
        let lower = s.trim().to_ascii_lowercase();
        Ok(match lower.as_str() {
            "binary" => Self::Binary,
            "poisson" => Self::Poisson,
            "geometric" => Self::Geometric,
            "exotic1" => Self::Exotic1,
            "exotic2" => Self::Exotic2,
            "exotic3" => Self::Exotic3,
            other => {
                if let Some(n) = other.strip_prefix("binomial") {
                    let n = n.trim_start_matches(['-', ':']);
                    let n: u32 = n.parse().map_err(|_| bad("expected binomial-<n>"))?;
                    if n == 0 {
                        return Err(bad("binomial needs n >= 1"));
                    }
                    Self::Binomial { n }
                } else if let Some(body) = other
                    .strip_prefix("lerp(")
                    .and_then(|b| b.strip_suffix(')'))
                {
                    let (a, b) = body
                        .split_once(';')
                        .ok_or_else(|| bad("expected lerp(<dist>;<dist>)"))?;
                    let from: OffspringDistribution = a.parse()?;
                    let to: OffspringDistribution = b.parse()?;
                    Family::interpolation(from, to)?.id
                } else {
                    return Err(bad("unknown family"));
                }
            }
        })
    }
}

impl Serialize for FamilyId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A family together with the closed parameter interval it is defined on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Family {
    pub id: FamilyId,
    pub range: (f64, f64),
}

impl Family {
    pub fn new(id: FamilyId) -> Self {
        let range = id.default_range();
        Self { id, range }
    }

    pub fn binary() -> Self {
        Self::new(FamilyId::Binary)
    }

    pub fn interpolation(from: OffspringDistribution, to: OffspringDistribution) -> Result<Self> {
        if !from.is_finite_support() || !to.is_finite_support() {
            return Err(Error::InvalidDistribution(
                "interpolation needs finite-support endpoints".into(),
            ));
        }
        Ok(Self::new(FamilyId::LinearInterpolation {
            from: Box::new(from),
            to: Box::new(to),
        }))
    }

    /// Restrict to a sub-interval of the default range.
    pub fn with_range(mut self, lo: f64, hi: f64) -> Result<Self> {
        let (a, b) = self.id.default_range();
        if !(lo <= hi && lo >= a && hi <= b) {
            return Err(Error::InvalidArgument(format!(
                "range [{lo}, {hi}] is not inside [{a}, {b}] for family {}",
                self.id
            )));
        }
        self.range = (lo, hi);
        Ok(self)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.range.0 && t <= self.range.1
    }

    /// Member of the family at parameter `t`.
    /// Parameters within `1e-12` of an endpoint are clamped onto it.
    pub fn at(&self, t: f64) -> Result<OffspringDistribution> {
        let slack = 1e-12 * (1.0 + self.range.1.abs().max(self.range.0.abs()));
        let t = if t < self.range.0 && t >= self.range.0 - slack {
            self.range.0
        } else if t > self.range.1 && t <= self.range.1 + slack {
            self.range.1
        } else {
            t
        };
        if !self.contains(t) {
            return Err(Error::InvalidArgument(format!(
                "parameter {t} outside [{}, {}] for family {}",
                self.range.0, self.range.1, self.id
            )));
        }
        match &self.id {
            FamilyId::Binary => OffspringDistribution::finite(&[1.0 - t, 0.0, t]),
            FamilyId::Poisson => OffspringDistribution::poisson(t),
            FamilyId::Geometric => OffspringDistribution::geometric(t),
            FamilyId::Binomial { n } => OffspringDistribution::binomial(*n, t),
            FamilyId::Exotic1 => {
                OffspringDistribution::from_terms(vec![(0, 1.0 - t), (2, 0.5 * t), (10, 0.5 * t)])
            }
            FamilyId::Exotic2 => OffspringDistribution::from_terms(vec![
                (0, 1.0 - t),
                (2, 0.15 * t),
                (20, 0.85 * t),
            ]),
            FamilyId::Exotic3 => OffspringDistribution::from_terms(vec![
                (0, (1.0 / 18.0 - t).max(0.0)),
                (1, 2.0 / 3.0),
                (3, 5.0 / 18.0 + t),
            ]),
            FamilyId::LinearInterpolation { from, to } => {
                let p = from.probs().expect("finite endpoint");
                let q = to.probs().expect("finite endpoint");
                let len = p.len().max(q.len());
                let mix: Vec<f64> = (0..len)
                    .map(|i| {
                        let a = p.get(i).copied().unwrap_or(0.0);
                        let b = q.get(i).copied().unwrap_or(0.0);
                        (1.0 - t) * a + t * b
                    })
                    .collect();
                OffspringDistribution::finite(&mix)
            }
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.id.fmt(f)
    }
}
