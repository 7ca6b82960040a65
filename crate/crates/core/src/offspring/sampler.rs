use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Binomial, Distribution, Geometric, Poisson};

use super::{Law, OffspringDistribution};

/// Draws offspring counts for one law.
#[derive(Debug, Clone)]
pub enum OffspringSampler {
    Constant(u64),
    Table {
        degrees: Vec<u64>,
        alias: WeightedAliasIndex<f64>,
    },
    Poisson(Poisson<f64>),
    Geometric(Geometric),
    Binomial(Binomial),
}

impl OffspringSampler {
    pub(super) fn new(dist: &OffspringDistribution) -> Self {
        match dist.law {
            Law::FiniteSupport(ref fs) => {
                if fs.terms.len() == 1 {
                    return Self::Constant(fs.terms[0].0);
                }
                let degrees = fs.terms.iter().map(|t| t.0).collect();
                let weights = fs.terms.iter().map(|t| t.1).collect();
                let alias = WeightedAliasIndex::new(weights)
                    .expect("validated probabilities are usable weights");
                Self::Table { degrees, alias }
            }
            Law::Poisson { lambda } => {
                Self::Poisson(Poisson::new(lambda).expect("validated Poisson mean"))
            }
            Law::Geometric { alpha } => {
                Self::Geometric(Geometric::new(1.0 - alpha).expect("validated geometric parameter"))
            }
            Law::Binomial { n, p } => {
                Self::Binomial(Binomial::new(n as u64, p).expect("validated binomial parameters"))
            }
        }
    }
}

impl Distribution<u64> for OffspringSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            Self::Constant(k) => *k,
            Self::Table { degrees, alias } => degrees[alias.sample(rng)],
            Self::Poisson(d) => d.sample(rng) as u64,
            Self::Geometric(d) => d.sample(rng),
            Self::Binomial(d) => d.sample(rng),
        }
    }
}
