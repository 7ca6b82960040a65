//! Phase transitions along one-parameter families.
//!
//! The order parameter of a game is its draw probability (normal, misère) or
//! the Escaper-first win probability (escape). A transition is where it
//! becomes positive; [`critical_parameter`] brackets that point by bisection
//! on the predicate `order > POSITIVE_THRESHOLD`, and
//! [`classify_transition`] extrapolates the one-sided limits to decide
//! whether the onset is continuous. [`locate_jump`] finds a discontinuity
//! inside a region where the order parameter is already positive.

use std::fmt::Write as _;

use serde::Serialize;

use crate::analytic::{
    escape_outcome, isolate_fixed_points, outcomes, play_outcome, GameOutcomes, MapId, Quantity,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::game::Game;
use crate::offspring::{Family, FamilyId, OffspringDistribution};

/// An order parameter above this value counts as positive.
pub const POSITIVE_THRESHOLD: f64 = 1e-9;
/// One-sided limits closer than this are a continuous transition.
pub const CLASSIFY_TOL: f64 = 1e-4;
pub const DEFAULT_TOL_T: f64 = 1e-10;
pub const PRESCAN_POINTS: usize = 1000;
/// Offsets from the critical point used to extrapolate one-sided limits.
pub const DELTAS: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
const ROOT_RESOLUTION: usize = 20_000;

/// Draw probability (normal, misère) or `E1` (escape).
pub fn order_parameter(dist: &OffspringDistribution, game: Game) -> Result<f64> {
    match game {
        Game::Normal | Game::Misere => Ok(play_outcome(dist, game)?.draw),
        Game::Escape => Ok(escape_outcome(dist).e1),
    }
}

/// `mu * p1`. Escaper wins with positive probability when it exceeds 1.
pub fn escape_criterion(dist: &OffspringDistribution) -> f64 {
    dist.mean() * dist.p1()
}

fn order_at(family: &Family, game: Game, t: f64) -> Result<f64> {
    order_parameter(&family.at(t)?, game)
}

fn positive_at(family: &Family, game: Game, t: f64) -> Result<bool> {
    Ok(order_at(family, game, t)? > POSITIVE_THRESHOLD)
}

/// Bracket around the onset of a positive order parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    /// Bracket midpoint.
    pub t: f64,
    /// Last parameter with zero order parameter.
    pub lo: f64,
    /// First parameter with positive order parameter.
    pub hi: f64,
}

impl CriticalPoint {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Bisects the positivity predicate on `[t_lo, t_hi]` down to width `tol_t`.
///
/// The predicate must be false at `t_lo` and true at `t_hi`, and a
/// [`PRESCAN_POINTS`] grid must show a single switch; families with several
/// transitions have to be scanned piecewise.
pub fn locate_critical(family: &Family, game: Game, t_lo: f64, t_hi: f64, tol_t: f64) -> Result<CriticalPoint> {
    if !(t_lo < t_hi) || !(tol_t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need t_lo < t_hi and tol_t > 0, got [{t_lo}, {t_hi}] and {tol_t}"
        )));
    }
    let grid: Vec<f64> = (0..=PRESCAN_POINTS)
        .map(|i| {
            if i == PRESCAN_POINTS {
                t_hi
            } else {
                t_lo + (t_hi - t_lo) * i as f64 / PRESCAN_POINTS as f64
            }
        })
        .collect();
    let flags = Execution::default()
        .map_slice(&grid, |&t| positive_at(family, game, t))
        .into_iter()
        .collect::<Result<Vec<bool>>>()?;
    if flags[0] {
        return Err(Error::NotBracketed {
            lo: t_lo,
            hi: t_hi,
            reason: format!("order parameter of the {game} game is already positive at {t_lo}"),
        });
    }
    if !flags[PRESCAN_POINTS] {
        return Err(Error::NotBracketed {
            lo: t_lo,
            hi: t_hi,
            reason: format!("order parameter of the {game} game is zero at {t_hi}"),
        });
    }
    let switch = flags.iter().position(|&f| f).expect("last flag is true");
    if let Some(back) = flags[switch..].iter().position(|&f| !f) {
        let i = switch + back;
        return Err(Error::NonMonotone {
            lo: grid[i - 1],
            hi: grid[i],
        });
    }
    let (mut lo, mut hi) = (grid[switch - 1], grid[switch]);
    while hi - lo > tol_t {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if positive_at(family, game, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalPoint {
        t: 0.5 * (lo + hi),
        lo,
        hi,
    })
}

/// Midpoint of the bracket found by [`locate_critical`].
pub fn critical_parameter(family: &Family, game: Game, t_lo: f64, t_hi: f64, tol_t: f64) -> Result<f64> {
    Ok(locate_critical(family, game, t_lo, t_hi, tol_t)?.t)
}

/// A discontinuity of the order parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpLocation {
    pub t: f64,
    pub lo: f64,
    pub hi: f64,
    /// Order parameter at `lo` and `hi`.
    pub below: f64,
    pub above: f64,
}

/// Bisects towards the largest increment of the order parameter on
/// `[t_lo, t_hi]`. Fails if the remaining increment is below
/// [`CLASSIFY_TOL`], i.e. the order parameter is continuous there.
pub fn locate_jump(family: &Family, game: Game, t_lo: f64, t_hi: f64, tol_t: f64) -> Result<JumpLocation> {
    if !(t_lo < t_hi) || !(tol_t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need t_lo < t_hi and tol_t > 0, got [{t_lo}, {t_hi}] and {tol_t}"
        )));
    }
    let (mut lo, mut hi) = (t_lo, t_hi);
    let (mut below, mut above) = (order_at(family, game, lo)?, order_at(family, game, hi)?);
    while hi - lo > tol_t {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m = order_at(family, game, mid)?;
        if (m - below).abs() >= (above - m).abs() {
            hi = mid;
            above = m;
        } else {
            lo = mid;
            below = m;
        }
    }
    if (above - below).abs() <= CLASSIFY_TOL {
        return Err(Error::NotBracketed {
            lo: t_lo,
            hi: t_hi,
            reason: format!("no discontinuity of the {game} order parameter larger than {CLASSIFY_TOL}"),
        });
    }
    Ok(JumpLocation {
        t: 0.5 * (lo + hi),
        lo,
        hi,
        below,
        above,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Continuous,
    Discontinuous,
    /// Escape transition where `mu * p1` crosses 1.
    BoundaryCrossingMuP1,
    /// The one-sided sequences were not monotone.
    Indeterminate,
}

/// Order parameter sampled at `t_critical ± delta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideSamples {
    pub deltas: Vec<f64>,
    pub values: Vec<f64>,
    /// Extrapolated limit as the offset goes to zero.
    pub limit: f64,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionReport {
    pub family: FamilyId,
    pub game: Game,
    pub t_critical: f64,
    pub classification: Classification,
    /// Whether the extrapolated jump is within [`CLASSIFY_TOL`].
    pub continuous: bool,
    /// Limit from above minus limit from below, floored at 0.
    pub jump: f64,
    /// `F'(x*)` (normal), `H'` at its fixed point (misère), or
    /// `(H∘F)'(1) = mu * p1` (escape) at `t_critical`.
    pub slope_diagnostic: f64,
    pub mu_p1_crossing: bool,
    /// Width of the bracket that produced `t_critical`, when known.
    pub bracket_width: Option<f64>,
    pub above: SideSamples,
    pub below: SideSamples,
    /// Fixed points present just above `t_critical` but not just below it,
    /// grouped into clusters of nearby roots.
    pub emerging_roots: Vec<f64>,
}

/// Value at `h = 0` of the polynomial through `(h_i, v_i)` (Neville's
/// scheme). With `h = sqrt(delta)` this is Richardson extrapolation for
/// expansions in powers of `sqrt(delta)`, which covers both square-root
/// onsets and jumps approached along a square-root branch.
pub fn richardson_limit(h: &[f64], values: &[f64]) -> f64 {
    assert_eq!(h.len(), values.len());
    assert!(!h.is_empty(), "at least one sample");
    let mut p = values.to_vec();
    let n = p.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i]);
        }
    }
    p[0]
}

fn is_monotone(values: &[f64]) -> bool {
    let slack = 1e-12;
    let up = values.windows(2).all(|w| w[1] >= w[0] - slack);
    let down = values.windows(2).all(|w| w[1] <= w[0] + slack);
    up || down
}

fn side(family: &Family, game: Game, t_c: f64, sign: f64) -> Result<SideSamples> {
    let mut deltas = Vec::new();
    let mut values = Vec::new();
    for &d in &DELTAS {
        let t = t_c + sign * d;
        if family.contains(t) {
            deltas.push(d);
            values.push(order_at(family, game, t)?);
        }
    }
    if values.is_empty() {
        let t = t_c.clamp(family.range.0, family.range.1);
        return Ok(SideSamples {
            deltas: vec![(t - t_c).abs()],
            values: vec![order_at(family, game, t)?],
            limit: order_at(family, game, t)?,
            monotone: true,
        });
    }
    let monotone = is_monotone(&values);
    let h: Vec<f64> = deltas.iter().map(|d| d.sqrt()).collect();
    let raw = richardson_limit(&h, &values);
    let limit = if raw > 0.0 { raw.min(1.0) } else { 0.0 };
    Ok(SideSamples {
        deltas,
        values,
        limit,
        monotone,
    })
}

fn square_map(game: Game) -> MapId {
    match game {
        Game::Normal => MapId::F2,
        Game::Misere => MapId::H2,
        Game::Escape => MapId::FH,
    }
}

fn emerging_roots(family: &Family, game: Game, t_c: f64) -> Result<Vec<f64>> {
    let offset = 1e-7;
    let (lo, hi) = (
        (t_c - offset).max(family.range.0),
        (t_c + offset).min(family.range.1),
    );
    let map = square_map(game);
    let before = isolate_fixed_points(&family.at(lo)?, map, ROOT_RESOLUTION)?.all_fps;
    let after = isolate_fixed_points(&family.at(hi)?, map, ROOT_RESOLUTION)?.all_fps;
    let fresh: Vec<f64> = after
        .into_iter()
        .filter(|x| before.iter().all(|y| (x - y).abs() > 1e-3))
        .collect();
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for x in fresh {
        match clusters.last_mut() {
            Some(c) if x - c[c.len() - 1] < 1e-2 => c.push(x),
            _ => clusters.push(vec![x]),
        }
    }
    Ok(clusters
        .iter()
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect())
}

fn slope_diagnostic(dist: &OffspringDistribution, game: Game) -> Result<f64> {
    match game {
        Game::Normal | Game::Misere => Ok(play_outcome(dist, game)?.slope),
        Game::Escape => Ok(escape_criterion(dist)),
    }
}

/// Classifies the transition at `t_critical` from one-sided limits of the
/// order parameter. Offsets that leave `family.range` are dropped, so a
/// restricted range keeps a neighbouring transition out of the samples.
pub fn classify_transition(family: &Family, game: Game, t_critical: f64) -> Result<TransitionReport> {
    if !family.contains(t_critical) {
        return Err(Error::InvalidArgument(format!(
            "critical parameter {t_critical} outside [{}, {}]",
            family.range.0, family.range.1
        )));
    }
    let above = side(family, game, t_critical, 1.0)?;
    let below = side(family, game, t_critical, -1.0)?;
    let jump = (above.limit - below.limit).max(0.0);
    let continuous = jump <= CLASSIFY_TOL;
    let dist = family.at(t_critical)?;
    let slope = slope_diagnostic(&dist, game)?;

    let mu_p1_crossing = game == Game::Escape && {
        let d = DELTAS[DELTAS.len() - 1];
        let lo = family.at((t_critical - d).max(family.range.0))?;
        let hi = family.at((t_critical + d).min(family.range.1))?;
        (escape_criterion(&lo) - 1.0) * (escape_criterion(&hi) - 1.0) <= 0.0
    };
    let classification = if !above.monotone || !below.monotone {
        Classification::Indeterminate
    } else if mu_p1_crossing {
        Classification::BoundaryCrossingMuP1
    } else if continuous {
        Classification::Continuous
    } else {
        Classification::Discontinuous
    };
    Ok(TransitionReport {
        family: family.id.clone(),
        game,
        t_critical,
        classification,
        continuous,
        jump,
        slope_diagnostic: slope,
        mu_p1_crossing,
        bracket_width: None,
        emerging_roots: emerging_roots(family, game, t_critical)?,
        above,
        below,
    })
}

/// [`locate_critical`] followed by [`classify_transition`].
pub fn transition(family: &Family, game: Game, t_lo: f64, t_hi: f64, tol_t: f64) -> Result<TransitionReport> {
    let cp = locate_critical(family, game, t_lo, t_hi, tol_t)?;
    let mut report = classify_transition(family, game, cp.t)?;
    report.bracket_width = Some(cp.width());
    Ok(report)
}

/// One row of a bifurcation table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub t: f64,
    pub outcomes: Option<GameOutcomes>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveTable {
    pub family: FamilyId,
    pub rows: Vec<CurveRow>,
}

pub const CURVE_HEADER: &str = "t,N,P,D,Nm,Pm,Dm,S1,S2,E1,E2";

impl CurveTable {
    /// CSV with [`CURVE_HEADER`]; failed rows carry `NaN`.
    pub fn to_csv(&self, fmt_num: impl Fn(f64) -> String) -> String {
        let mut out = String::from(CURVE_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&fmt_num(row.t));
            for q in Quantity::ALL {
                let v = row.outcomes.map_or(f64::NAN, |o| o.get(q));
                let _ = write!(out, ",{}", fmt_num(v));
            }
            out.push('\n');
        }
        out
    }
}

/// All ten outcomes at each grid point. Failures are recorded per row.
pub fn scan_curve(family: &Family, grid: &[f64]) -> CurveTable {
    let rows = Execution::default().map_slice(grid, |&t| match family.at(t).and_then(|d| outcomes(&d)) {
        Ok(r) => CurveRow {
            t,
            outcomes: Some(r.outcomes),
            error: None,
        },
        Err(e) => CurveRow {
            t,
            outcomes: None,
            error: Some(e.to_string()),
        },
    });
    CurveTable {
        family: family.id.clone(),
        rows,
    }
}

/// `n + 1` evenly spaced points on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n)
        .map(|i| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_parameter_examples() {
        let b = |t| Family::binary().at(t).unwrap();
        assert_eq!(order_parameter(&b(0.85), Game::Normal).unwrap(), 0.0);
        assert!(order_parameter(&b(0.89), Game::Normal).unwrap() > 0.0);
        let g = OffspringDistribution::geometric(0.7).unwrap();
        assert_eq!(order_parameter(&g, Game::Escape).unwrap(), 0.0);
    }

    #[test]
    fn escape_criterion_examples() {
        assert_eq!(escape_criterion(&OffspringDistribution::point_mass(1)), 1.0);
        let eps = 1e-3;
        let d = OffspringDistribution::finite(&[eps, 2.0 / 3.0, 0.0, 1.0 / 3.0 - eps]).unwrap();
        assert!(escape_criterion(&d) > 1.0);
        let ex3 = Family::new(FamilyId::Exotic3);
        for e in [-0.01, 0.01] {
            assert_eq!(escape_criterion(&ex3.at(e).unwrap()) > 1.0, e > 0.0);
        }
    }

    #[test]
    fn richardson_removes_square_root_terms() {
        let h: Vec<f64> = DELTAS.iter().map(|d| d.sqrt()).collect();
        let v: Vec<f64> = h.iter().map(|x| 0.3 + 2.0 * x - 5.0 * x * x + x.powi(3)).collect();
        assert!((richardson_limit(&h, &v) - 0.3).abs() < 1e-12);
        assert_eq!(richardson_limit(&h, &[0.0; 5]), 0.0);
    }

    #[test]
    fn binary_normal_threshold() {
        let t = critical_parameter(&Family::binary(), Game::Normal, 0.5, 1.0, DEFAULT_TOL_T).unwrap();
        assert!((t - 3f64.sqrt() / 2.0).abs() < 1e-6, "{t}");
    }

    #[test]
    fn unbracketed_and_non_monotone_inputs() {
        let fam = Family::binary();
        assert!(matches!(
            critical_parameter(&fam, Game::Normal, 0.9, 1.0, 1e-8),
            Err(Error::NotBracketed { .. })
        ));
        assert!(matches!(
            critical_parameter(&fam, Game::Normal, 0.1, 0.5, 1e-8),
            Err(Error::NotBracketed { .. })
        ));
    }

    #[test]
    fn curve_csv_shape() {
        let table = scan_curve(&Family::binary(), &[0.7, 0.8, 0.9]);
        let csv = table.to_csv(|x| format!("{x}"));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CURVE_HEADER);
        assert_eq!(lines.len(), 4);
        let d: Vec<f64> = table.rows.iter().map(|r| r.outcomes.unwrap().d).collect();
        assert_eq!(&d[..2], &[0.0, 0.0]);
        assert!(d[2] > 0.0);
    }

    #[test]
    fn geometric_curve_has_no_draws_or_escapes() {
        let grid = uniform_grid(0.05, 0.95, 18);
        let table = scan_curve(&Family::new(FamilyId::Geometric), &grid);
        for row in &table.rows {
            let o = row.outcomes.unwrap();
            for v in [o.d, o.d_mis, o.e1, o.e2] {
                assert!(v < 1e-9, "t = {}: {o:?}", row.t);
            }
        }
    }
}
