//! The inequality system between the ten outcome probabilities.
//!
//! Ten relations hold for every offspring law:
//! `N, Ñ <= S1`, `P, P̃ <= S2`, `S2 <= S1` (equivalently `E2 <= E1`),
//! `P̃ <= Ñ`, `P̃ <= P`, `P̃ <= N` and `D <= D̃`. Any pairwise inequality
//! outside their transitive closure fails for some law, and
//! [`counterexample_suite`] exhibits a witness for each.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::analytic::{outcomes, GameOutcomes, Quantity};
use crate::error::Result;
use crate::exec::Execution;
use crate::offspring::{random_distribution, OffspringDistribution};

pub const DEFAULT_TOL: f64 = 1e-9;

/// `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    pub lhs: Quantity,
    pub rhs: Quantity,
}

impl Relation {
    pub const fn new(lhs: Quantity, rhs: Quantity) -> Self {
        Relation { lhs, rhs }
    }

    /// How far `lhs` exceeds `rhs`.
    pub fn excess(&self, o: &GameOutcomes) -> f64 {
        o.get(self.lhs) - o.get(self.rhs)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <= {}", self.lhs, self.rhs)
    }
}

impl Serialize for Relation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

pub const RELATIONS: [Relation; 10] = {
    use Quantity::*;
    [
        Relation::new(N, S1),
        Relation::new(NMis, S1),
        Relation::new(P, S2),
        Relation::new(PMis, S2),
        Relation::new(S2, S1),
        Relation::new(PMis, NMis),
        Relation::new(PMis, P),
        Relation::new(PMis, N),
        Relation::new(D, DMis),
        Relation::new(E2, E1),
    ]
};

fn index(q: Quantity) -> usize {
    Quantity::ALL.iter().position(|&x| x == q).expect("listed quantity")
}

/// Every ordered pair `a <= b` (with `a != b`) that follows from
/// [`RELATIONS`] by transitivity.
pub fn implied_relations() -> Vec<Relation> {
    let n = Quantity::ALL.len();
    let mut reach = vec![vec![false; n]; n];
    for r in RELATIONS {
        reach[index(r.lhs)][index(r.rhs)] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let mut out = Vec::new();
    for (i, &a) in Quantity::ALL.iter().enumerate() {
        for (j, &b) in Quantity::ALL.iter().enumerate() {
            if i != j && reach[i][j] {
                out.push(Relation::new(a, b));
            }
        }
    }
    out
}

/// Ordered pairs not in [`implied_relations`].
pub fn non_implied_relations() -> Vec<Relation> {
    let implied = implied_relations();
    let mut out = Vec::new();
    for &a in &Quantity::ALL {
        for &b in &Quantity::ALL {
            let r = Relation::new(a, b);
            if a != b && !implied.contains(&r) {
                out.push(r);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub relation: Relation,
    /// `lhs - rhs`, above the tolerance.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditResult {
    pub distribution: OffspringDistribution,
    pub outcomes: GameOutcomes,
    pub violations: Vec<Violation>,
    pub pass: bool,
}

/// Checks [`RELATIONS`] with slack `tol`.
pub fn verify_inequalities(dist: &OffspringDistribution, tol: f64) -> Result<AuditResult> {
    let o = outcomes(dist)?.outcomes;
    let violations: Vec<Violation> = RELATIONS
        .iter()
        .filter_map(|r| {
            let margin = r.excess(&o);
            (margin > tol).then_some(Violation { relation: *r, margin })
        })
        .collect();
    Ok(AuditResult {
        distribution: dist.clone(),
        pass: violations.is_empty(),
        outcomes: o,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomAudit {
    pub count: usize,
    pub max_support: usize,
    pub first_seed: u64,
    /// Largest `lhs - rhs` seen over all relations and laws.
    pub worst_margin: f64,
    pub failures: Vec<AuditResult>,
}

/// Audits `count` laws from [`random_distribution`] with seeds
/// `first_seed..first_seed + count`.
pub fn verify_random(count: usize, max_support: usize, first_seed: u64, tol: f64) -> Result<RandomAudit> {
    let results = Execution::default().map(count, |i| {
        verify_inequalities(&random_distribution(first_seed + i as u64, max_support), tol)
    });
    let mut worst_margin = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for r in results {
        let r = r?;
        for rel in RELATIONS {
            worst_margin = worst_margin.max(rel.excess(&r.outcomes));
        }
        if !r.pass {
            failures.push(r);
        }
    }
    Ok(RandomAudit {
        count,
        max_support,
        first_seed,
        worst_margin,
        failures,
    })
}

/// A named expectation checked on one suite case.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, pass: bool) -> Self {
        Check {
            name: name.into(),
            value,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteCase {
    pub name: String,
    pub distribution: OffspringDistribution,
    pub outcomes: GameOutcomes,
    /// Quantities from largest to smallest.
    pub ordering: Vec<Quantity>,
    pub checks: Vec<Check>,
}

impl SuiteCase {
    fn new(name: impl Into<String>, dist: OffspringDistribution) -> Result<Self> {
        let o = outcomes(&dist)?.outcomes;
        let mut ordering = Quantity::ALL.to_vec();
        ordering.sort_by(|a, b| o.get(*b).total_cmp(&o.get(*a)));
        Ok(SuiteCase {
            name: name.into(),
            distribution: dist,
            outcomes: o,
            ordering,
            checks: Vec::new(),
        })
    }

    fn get(&self, q: Quantity) -> f64 {
        self.outcomes.get(q)
    }

    fn check(&mut self, name: impl Into<String>, value: f64, pass: bool) {
        self.checks.push(Check::new(name, value, pass));
    }
}

/// Coefficients of `Q(eps) = a eps + b eps^2 + O(eps^3)` estimated from
/// two small parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Expansion {
    pub quantity: Quantity,
    /// `a` with the quadratic term eliminated.
    pub linear: f64,
    /// `b` from `(Q - a eps) / eps^2` with the expected `a`, its linear
    /// error term eliminated.
    pub quadratic: f64,
    pub expected_linear: f64,
    pub expected_quadratic: Option<f64>,
    pub pass: bool,
}

/// With `eps` in `{1e-2, 1e-3}` the leftover error in `a` is about
/// `1e-5` times the cubic coefficient, and the one in `b` about `1e-5`
/// times the quartic one.
pub const LINEAR_TOL: f64 = 1e-2;
pub const QUADRATIC_TOL: f64 = 0.05;

fn linear_coefficient(eps: [f64; 2], values: [f64; 2]) -> f64 {
    let [e1, e2] = eps;
    let [v1, v2] = values;
    let b = (v1 / e1 - v2 / e2) / (e1 - e2);
    v1 / e1 - b * e1
}

fn quadratic_coefficient(eps: [f64; 2], values: [f64; 2], linear: f64) -> f64 {
    let [e1, e2] = eps;
    let r1 = (values[0] - linear * e1) / (e1 * e1);
    let r2 = (values[1] - linear * e2) / (e2 * e2);
    (e1 * r2 - e2 * r1) / (e1 - e2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub cases: Vec<SuiteCase>,
    pub expansions: Vec<Expansion>,
    /// Each relation outside the implied closure with the first case that
    /// breaks it.
    pub coverage: Vec<(Relation, Option<String>)>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn uncovered(&self) -> Vec<Relation> {
        self.coverage
            .iter()
            .filter(|(_, c)| c.is_none())
            .map(|(r, _)| *r)
            .collect()
    }
}

fn k_family(k: u64) -> Result<OffspringDistribution> {
    let kf = k as f64;
    OffspringDistribution::from_terms(vec![(0, 1.0 / kf), (1, 1.0 / kf), (k * k * k, 1.0 - 2.0 / kf)])
}

fn binary(t: f64) -> Result<OffspringDistribution> {
    OffspringDistribution::finite(&[1.0 - t, 0.0, t])
}

/// The fixed cases that separate every pair of quantities not ordered by
/// [`RELATIONS`].
pub fn counterexample_suite() -> Result<SuiteReport> {
    use Quantity::*;
    let mut cases = Vec::new();

    let mut c = SuiteCase::new("leaf", OffspringDistribution::point_mass(0))?;
    for q in [P, NMis, S1, S2] {
        c.check(format!("{q} = 1"), c.get(q), c.get(q) == 1.0);
    }
    for q in [N, D, PMis, DMis, E1, E2] {
        c.check(format!("{q} = 0"), c.get(q), c.get(q) == 0.0);
    }
    cases.push(c);

    let mut c = SuiteCase::new("no leaves", OffspringDistribution::point_mass(2))?;
    for q in [D, DMis, E1, E2] {
        c.check(format!("{q} = 1"), c.get(q), c.get(q) == 1.0);
    }
    for q in [N, P, NMis, PMis, S1, S2] {
        c.check(format!("{q} = 0"), c.get(q), c.get(q) == 0.0);
    }
    cases.push(c);

    for k in [100u64, 1000] {
        let mut c = SuiteCase::new(format!("K = {k}"), k_family(k)?)?;
        for q in [N, NMis, E1, S1] {
            c.check(format!("{q} >= 0.9"), c.get(q), c.get(q) >= 0.9);
        }
        for q in [P, D, PMis, DMis, E2, S2] {
            c.check(format!("{q} <= 0.1"), c.get(q), c.get(q) <= 0.1);
        }
        cases.push(c);
    }

    let mut c = SuiteCase::new("binary 0.9", binary(0.9)?)?;
    c.check("D > E1", c.get(D) - c.get(E1), c.get(D) > c.get(E1));
    cases.push(c);

    let eps = [1e-2, 1e-3];
    let mut near_one = Vec::new();
    for e in eps {
        let mut c = SuiteCase::new(format!("binary 1 - {e}"), binary(1.0 - e)?)?;
        let chain = [N, S2, P, NMis];
        let ordered = chain.windows(2).all(|w| c.get(w[0]) > c.get(w[1]));
        c.check("N > S2 > P > Nm", c.get(N) - c.get(NMis), ordered);
        let err = (c.get(N) - 2.0 * e).abs();
        c.check("|N - 2 eps| <= 10 eps^2", err, err <= 10.0 * e * e);
        near_one.push(c.outcomes);
        cases.push(c);
    }
    let expansions: Vec<Expansion> = [(N, 2.0, None), (S2, 1.0, Some(9.0)), (P, 1.0, Some(4.0)), (NMis, 1.0, None)]
        .into_iter()
        .map(|(q, a, b)| {
            let v = [near_one[0].get(q), near_one[1].get(q)];
            let linear = linear_coefficient(eps, v);
            let quadratic = quadratic_coefficient(eps, v, a);
            let pass = (linear - a).abs() <= LINEAR_TOL && b.is_none_or(|b: f64| (quadratic - b).abs() <= QUADRATIC_TOL);
            Expansion {
                quantity: q,
                linear,
                quadratic,
                expected_linear: a,
                expected_quadratic: b,
                pass,
            }
        })
        .collect();

    let e = 1e-3;
    let mut c = SuiteCase::new(
        format!("({e}, 2/3, 0, 1/3 - {e})"),
        OffspringDistribution::finite(&[e, 2.0 / 3.0, 0.0, 1.0 / 3.0 - e])?,
    )?;
    c.check("D = 0", c.get(D), c.get(D) == 0.0);
    c.check("Dm = 0", c.get(DMis), c.get(DMis) == 0.0);
    c.check("E2 > 0", c.get(E2), c.get(E2) > 0.0);
    cases.push(c);

    let coverage: Vec<(Relation, Option<String>)> = non_implied_relations()
        .into_iter()
        .map(|r| {
            let witness = cases
                .iter()
                .find(|c| r.excess(&c.outcomes) > DEFAULT_TOL)
                .map(|c| c.name.clone());
            (r, witness)
        })
        .collect();
    let pass = cases.iter().all(|c| c.checks.iter().all(|k| k.pass))
        && expansions.iter().all(|x| x.pass)
        && coverage.iter().all(|(_, w)| w.is_some());
    Ok(SuiteReport {
        cases,
        expansions,
        coverage,
        pass,
    })
}
