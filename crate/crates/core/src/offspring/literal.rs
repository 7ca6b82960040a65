//! Text literals for distributions:
//! `finite:0.15,0,0.85`, `sparse:0:0.01,1:0.01,1000000:0.98`, `poisson:2.5`,
//! `geometric:0.4`, `binomial:3,0.8`, `family:binary@0.9`.

use std::fmt;
use std::str::FromStr;

use super::{Family, FamilyId, Law, OffspringDistribution};
use crate::error::{Error, Result};

/// Dense `finite:` output is used up to this degree, `sparse:` beyond.
const DENSE_DISPLAY_MAX_DEGREE: u64 = 64;

fn literal_error(literal: &str, reason: impl Into<String>) -> Error {
    Error::Literal {
        literal: literal.to_string(),
        reason: reason.into(),
    }
}

fn parse_f64(literal: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| literal_error(literal, format!("`{s}` is not a number")))
}

impl FromStr for OffspringDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| literal_error(s, "expected <kind>:<parameters>"))?;
        match kind.to_ascii_lowercase().as_str() {
            "finite" => {
                let probs = body
                    .split(',')
                    .map(|p| parse_f64(s, p))
                    .collect::<Result<Vec<_>>>()?;
                Self::finite(&probs)
            }
            "sparse" => {
                let terms = body
                    .split(',')
                    .map(|term| {
                        let (d, p) = term
                            .split_once(':')
                            .ok_or_else(|| literal_error(s, "expected <degree>:<prob>"))?;
                        let d: u64 = d
                            .trim()
                            .parse()
                            .map_err(|_| literal_error(s, format!("`{d}` is not a degree")))?;
                        Ok((d, parse_f64(s, p)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::from_terms(terms)
            }
            "poisson" => Self::poisson(parse_f64(s, body)?),
            "geometric" => Self::geometric(parse_f64(s, body)?),
            "binomial" => {
                let (n, p) = body
                    .split_once(',')
                    .ok_or_else(|| literal_error(s, "expected binomial:<n>,<p>"))?;
                let n: u32 = n
                    .trim()
                    .parse()
                    .map_err(|_| literal_error(s, format!("`{n}` is not a trial count")))?;
                Self::binomial(n, parse_f64(s, p)?)
            }
            "family" => {
                let (id, t) = body
                    .rsplit_once('@')
                    .ok_or_else(|| literal_error(s, "expected family:<id>@<t>"))?;
                let id: FamilyId = id.parse()?;
                Family::new(id).at(parse_f64(s, t)?)
            }
            other => Err(literal_error(s, format!("unknown distribution kind `{other}`"))),
        }
    }
}

impl fmt::Display for OffspringDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.law {
            Law::FiniteSupport(fs) if fs.max_degree() <= DENSE_DISPLAY_MAX_DEGREE => {
                f.write_str("finite:")?;
                let probs = self.probs().expect("finite support");
                for (i, p) in probs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            Law::FiniteSupport(fs) => {
                f.write_str("sparse:")?;
                for (i, (d, p)) in fs.terms().iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{d}:{p}")?;
                }
                Ok(())
            }
            Law::Poisson { lambda } => write!(f, "poisson:{lambda}"),
            Law::Geometric { alpha } => write!(f, "geometric:{alpha}"),
            Law::Binomial { n, p } => write!(f, "binomial:{n},{p}"),
        }
    }
}
