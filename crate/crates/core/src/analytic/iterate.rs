//! Plain monotone iteration of the composed maps.

use serde::Serialize;

use super::MapId;
use crate::error::{Error, Result};
use crate::game::Game;
use crate::offspring::OffspringDistribution;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

/// How often the iteration tries to jump ahead with an extrapolated bracket.
const BRACKET_EVERY: usize = 16;
const BRACKET_CELLS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointRun {
    pub value: f64,
    pub iterations: usize,
    /// True when the value came from bisecting an extrapolated bracket.
    pub bracketed: bool,
}

/// Least fixed point of a nondecreasing self-map of `[0, 1]`, iterating from 0.
pub fn min_fixed_point(map: impl Fn(f64) -> f64, tol: f64, max_iter: usize) -> Result<FixedPointRun> {
    monotone_limit(&map, 0.0, tol, max_iter, "map from 0")
}

/// Greatest fixed point of a nondecreasing self-map of `[0, 1]`, iterating from 1.
pub fn max_fixed_point(map: impl Fn(f64) -> f64, tol: f64, max_iter: usize) -> Result<FixedPointRun> {
    monotone_limit(&map, 1.0, tol, max_iter, "map from 1")
}

pub(crate) fn monotone_limit(
    map: &dyn Fn(f64) -> f64,
    start: f64,
    tol: f64,
    max_iter: usize,
    label: &str,
) -> Result<FixedPointRun> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let dir = if start <= 0.5 { 1.0 } else { -1.0 };
    let m = |x: f64| map(x).clamp(0.0, 1.0);
    // Positive strictly before the limit in the direction of travel.
    let inside = |z: f64| dir * (m(z) - z) > 0.0;

    let mut x = start;
    let mut prev_step = f64::NAN;
    let mut recent = Vec::with_capacity(8);
    for it in 1..=max_iter {
        let next = m(x);
        let step = (next - x).abs();
        if recent.len() == 8 {
            recent.remove(0);
        }
        recent.push(next);
        if step == 0.0 || dir * (next - x) < 0.0 {
            return Ok(FixedPointRun { value: next, iterations: it, bracketed: false });
        }
        let ratio = step / prev_step;
        let remaining = if ratio < 1.0 { step * ratio / (1.0 - ratio) } else { f64::INFINITY };
        if step <= tol && (remaining <= tol || step <= 1e-15) {
            return Ok(FixedPointRun { value: next, iterations: it, bracketed: false });
        }
        if it % BRACKET_EVERY == 0 {
            let reach = if remaining.is_finite() { 4.0 * remaining } else { 0.0 };
            let width = reach.max(4.0 * step);
            let far = (next + dir * width).clamp(0.0, 1.0);
            if let Some(v) = scan_bracket(&inside, next, far) {
                return Ok(FixedPointRun { value: v, iterations: it, bracketed: true });
            }
        }
        prev_step = step;
        x = next;
    }
    Err(Error::NonConvergence {
        map: label.to_string(),
        iterations: max_iter,
        last: x,
        trace: recent,
    })
}

/// First grid cell on `[from, to]` where the iteration stops pointing onward,
/// bisected down to rounding level.
fn scan_bracket(
    inside: &dyn Fn(f64) -> bool,
    from: f64,
    to: f64,
) -> Option<f64> {
    if from == to || !inside(from) {
        return None;
    }
    let mut lo = from;
    for i in 1..=BRACKET_CELLS {
        let z = from + (to - from) * i as f64 / BRACKET_CELLS as f64;
        if !inside(z) {
            let mut hi = z;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if inside(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        lo = z;
    }
    None
}

/// Iterates of a composed map started at 0 and at 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub map: MapId,
    pub values_from_0: Vec<f64>,
    pub values_from_1: Vec<f64>,
    pub converged: bool,
    pub iterations_used: usize,
}

/// Runs `map` from both ends for at most `max_steps` steps each, stopping
/// early once successive iterates move by less than `tol`.
pub fn iteration_trace(
    dist: &OffspringDistribution,
    map: MapId,
    max_steps: usize,
    tol: f64,
) -> IterationTrace {
    let run = |start: f64| {
        let mut v = vec![start];
        let mut x = start;
        let mut done = false;
        for _ in 0..max_steps {
            let next = map.eval(dist, x);
            v.push(next);
            let step = (next - x).abs();
            x = next;
            if step < tol {
                done = true;
                break;
            }
        }
        (v, done)
    };
    let (values_from_0, a) = run(0.0);
    let (values_from_1, b) = run(1.0);
    IterationTrace {
        map,
        iterations_used: values_from_0.len().max(values_from_1.len()) - 1,
        values_from_0,
        values_from_1,
        converged: a && b,
    }
}

/// Outcome bounds of the game truncated after `n` rounds of the recursion.
///
/// `lower` is the probability the first-listed outcome is already forced
/// (next-player win, or Stopper win with Stopper moving first) and
/// `upper` is one minus the probability the other outcome is forced
/// (previous-player win, or Stopper win with Stopper moving second).
/// Their gap is the mass still undecided at that depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedOutcome {
    pub depth: usize,
    pub lower: f64,
    pub upper: f64,
}

impl TruncatedOutcome {
    pub fn undecided(&self) -> f64 {
        self.upper - self.lower
    }
}

/// The pair recursion from `(0, 1)` for depths `0..=n`.
pub fn truncated_outcomes(dist: &OffspringDistribution, game: Game, n: usize) -> Vec<TruncatedOutcome> {
    let (a, b): (MapId, MapId) = match game {
        Game::Normal => (MapId::F, MapId::F),
        Game::Misere => (MapId::H, MapId::H),
        Game::Escape => (MapId::H, MapId::F),
    };
    let mut out = Vec::with_capacity(n + 1);
    let (mut lo, mut hi) = (0.0, 1.0);
    out.push(TruncatedOutcome { depth: 0, lower: lo, upper: hi });
    for depth in 1..=n {
        let next_lo = a.eval(dist, hi);
        let next_hi = b.eval(dist, lo);
        lo = next_lo;
        hi = next_hi;
        out.push(TruncatedOutcome { depth, lower: lo, upper: hi });
    }
    out
}
