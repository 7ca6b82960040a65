//! Outcome probabilities as extremal fixed points of composed maps.
//!
//! With `N`, `P`, `D` the next-player-win, previous-player-win and draw
//! probabilities of normal play (and `Nm`, `Pm`, `Dm` for misère play):
//!
//! * `N = min FP(F∘F)`, `1 - P = max FP(F∘F)`;
//! * `Nm = min FP(H∘H)`, `1 - Pm = max FP(H∘H)`;
//! * `E1 = max FP(F∘H)` is the probability that Escaper wins moving first,
//!   `S1 = min FP(H∘F)` that Stopper wins moving first, and
//!   `S2 = 1 - E1`, `E2 = 1 - S1`.

mod iterate;
mod roots;

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

pub use iterate::{
    iteration_trace, max_fixed_point, min_fixed_point, truncated_outcomes, FixedPointRun,
    IterationTrace, TruncatedOutcome, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
pub use roots::{curve_samples, isolate_fixed_points, FixedPointSet, DEFAULT_GRID_RESOLUTION};

use crate::error::{Error, Result};
use crate::game::Game;
use crate::offspring::OffspringDistribution;
use roots::{decreasing_fixed_point, deflated_residual, scan_roots, OUTCOME_CELLS};

/// Draw probabilities below this are reported as exactly zero.
pub const DRAW_FREE_THRESHOLD: f64 = 1e-9;

/// The maps whose fixed points carry the outcome probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapId {
    /// `F∘F`
    F2,
    /// `H∘H`
    H2,
    /// `F∘H`
    FH,
    /// `H∘F`
    HF,
    F,
    H,
}

impl MapId {
    pub const ALL: [MapId; 6] = [MapId::F2, MapId::H2, MapId::FH, MapId::HF, MapId::F, MapId::H];

    /// `map(x)` for `x` in `[0, 1]`, clamped into `[0, 1]` between stages.
    pub fn eval(self, dist: &OffspringDistribution, x: f64) -> f64 {
        let f = |x: f64| dist.f_unchecked(x).clamp(0.0, 1.0);
        let h = |x: f64| dist.h_unchecked(x).clamp(0.0, 1.0);
        match self {
            MapId::F2 => f(f(x)),
            MapId::H2 => h(h(x)),
            MapId::FH => f(h(x)),
            MapId::HF => h(f(x)),
            MapId::F => f(x),
            MapId::H => h(x),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MapId::F2 => "F2",
            MapId::H2 => "H2",
            MapId::FH => "FH",
            MapId::HF => "HF",
            MapId::F => "F",
            MapId::H => "H",
        }
    }
}

impl fmt::Display for MapId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MapId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MapId::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Literal {
                literal: s.to_string(),
                reason: "expected one of F2, H2, FH, HF, F, H".into(),
            })
    }
}

impl Serialize for MapId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

/// Names the ten outcome probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    N,
    P,
    D,
    NMis,
    PMis,
    DMis,
    S1,
    S2,
    E1,
    E2,
}

impl Quantity {
    pub const ALL: [Quantity; 10] = [
        Quantity::N,
        Quantity::P,
        Quantity::D,
        Quantity::NMis,
        Quantity::PMis,
        Quantity::DMis,
        Quantity::S1,
        Quantity::S2,
        Quantity::E1,
        Quantity::E2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::N => "N",
            Quantity::P => "P",
            Quantity::D => "D",
            Quantity::NMis => "Nm",
            Quantity::PMis => "Pm",
            Quantity::DMis => "Dm",
            Quantity::S1 => "S1",
            Quantity::S2 => "S2",
            Quantity::E1 => "E1",
            Quantity::E2 => "E2",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

/// The ten outcome probabilities of one offspring law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameOutcomes {
    pub n: f64,
    pub p: f64,
    pub d: f64,
    pub n_mis: f64,
    pub p_mis: f64,
    pub d_mis: f64,
    pub s1: f64,
    pub s2: f64,
    pub e1: f64,
    pub e2: f64,
}

impl GameOutcomes {
    pub fn get(&self, q: Quantity) -> f64 {
        match q {
            Quantity::N => self.n,
            Quantity::P => self.p,
            Quantity::D => self.d,
            Quantity::NMis => self.n_mis,
            Quantity::PMis => self.p_mis,
            Quantity::DMis => self.d_mis,
            Quantity::S1 => self.s1,
            Quantity::S2 => self.s2,
            Quantity::E1 => self.e1,
            Quantity::E2 => self.e2,
        }
    }

    pub fn values(&self) -> [f64; 10] {
        Quantity::ALL.map(|q| self.get(q))
    }
}

/// Normal or misère play solved at one distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlayOutcome {
    pub game: Game,
    /// Next-player (first mover) win probability.
    pub next: f64,
    /// Previous-player win probability.
    pub prev: f64,
    /// Draw probability, zeroed below [`DRAW_FREE_THRESHOLD`].
    pub draw: f64,
    /// Draw probability before zeroing.
    pub draw_raw: f64,
    /// Least and greatest fixed points of the squared map.
    pub low_fp: f64,
    pub high_fp: f64,
    /// Fixed point of `F` (of `H` for misère play).
    pub x_star: f64,
    /// `F'(x_star)` (resp. `H'`).
    pub slope: f64,
    /// One of the extremal fixed points only touches the diagonal.
    pub tangential: bool,
}

/// Escape game solved at one distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EscapeOutcome {
    pub s1: f64,
    pub s2: f64,
    pub e1: f64,
    pub e2: f64,
    /// `mu * p1`; Escaper wins with positive probability when it exceeds 1.
    pub mu_p1: f64,
    pub tangential: bool,
}

/// Solves normal (`F`) or misère (`H`) play.
pub fn play_outcome(dist: &OffspringDistribution, game: Game) -> Result<PlayOutcome> {
    let (map, square) = match game {
        Game::Normal => (MapId::F, MapId::F2),
        Game::Misere => (MapId::H, MapId::H2),
        Game::Escape => {
            return Err(Error::InvalidArgument(
                "the escape game has no draw structure; use escape_outcome".into(),
            ))
        }
    };
    let phi = |x: f64| map.eval(dist, x);
    let x_star = decreasing_fixed_point(&phi);
    let slope = -dist.g_prime_unchecked(x_star);
    let residual = deflated_residual(dist, square);

    let (low, low_tangent) = if square.eval(dist, 0.0) <= 0.0 {
        (0.0, false)
    } else {
        scan_roots(&*residual, 0.0, x_star, OUTCOME_CELLS, true)
            .first()
            .map_or((x_star, false), |r| (r.x, r.tangential))
    };
    let high_tangent = square.eval(dist, 1.0) < 1.0
        && scan_roots(&*residual, 1.0, x_star, OUTCOME_CELLS, true)
            .first()
            .is_some_and(|r| r.tangential);
    // The map sends the smallest fixed point of its square to the largest.
    // Taking the image keeps the pair consistent where both roots are
    // double and each is only located to about sqrt(eps).
    let high = phi(low).clamp(low, 1.0);
    let draw_raw = (high - low).max(0.0);
    let (next, prev, draw) = if draw_raw < DRAW_FREE_THRESHOLD {
        (x_star, 1.0 - x_star, 0.0)
    } else {
        (low, 1.0 - high, draw_raw)
    };
    Ok(PlayOutcome {
        game,
        next,
        prev,
        draw,
        draw_raw,
        low_fp: low,
        high_fp: high,
        x_star,
        slope,
        tangential: low_tangent || high_tangent,
    })
}

pub fn escape_outcome(dist: &OffspringDistribution) -> EscapeOutcome {
    let (e1, e_tangent) = if MapId::FH.eval(dist, 1.0) >= 1.0 {
        (1.0, false)
    } else {
        let residual = deflated_residual(dist, MapId::FH);
        scan_roots(&*residual, 1.0, 0.0, OUTCOME_CELLS, true)
            .first()
            .map_or((0.0, false), |r| (r.x.max(0.0), r.tangential))
    };
    let s_tangent = MapId::HF.eval(dist, 0.0) > 0.0 && {
        let residual = deflated_residual(dist, MapId::HF);
        scan_roots(&*residual, 0.0, 1.0, OUTCOME_CELLS, true)
            .first()
            .is_some_and(|r| r.tangential)
    };
    // S1 = H(E1), for the same reason as in `play_outcome`.
    let s1 = MapId::H.eval(dist, e1).clamp(0.0, 1.0);
    EscapeOutcome {
        s1,
        s2: 1.0 - e1,
        e1,
        e2: 1.0 - s1,
        mu_p1: dist.mean() * dist.p1(),
        tangential: e_tangent || s_tangent,
    }
}

/// Residuals of the identities linking the extremal fixed points:
/// `1-P = F(N)`, `N = F(1-P)`, their misère analogues with `H`, and
/// `S1 = H(E1)`, `E1 = F(S1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtrasResiduals {
    pub normal_high: f64,
    pub normal_low: f64,
    pub misere_high: f64,
    pub misere_low: f64,
    pub stopper: f64,
    pub escaper: f64,
}

impl ExtrasResiduals {
    pub fn max(&self) -> f64 {
        [
            self.normal_high,
            self.normal_low,
            self.misere_high,
            self.misere_low,
            self.stopper,
            self.escaper,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Diagnostics for one of the two draw-capable games.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlayDiagnostics {
    pub x_star: f64,
    pub slope: f64,
    pub draw_raw: f64,
    pub low_fp: f64,
    pub high_fp: f64,
    pub tangential: bool,
}

impl From<&PlayOutcome> for PlayDiagnostics {
    fn from(o: &PlayOutcome) -> Self {
        Self {
            x_star: o.x_star,
            slope: o.slope,
            draw_raw: o.draw_raw,
            low_fp: o.low_fp,
            high_fp: o.high_fp,
            tangential: o.tangential,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeReport {
    pub distribution: OffspringDistribution,
    pub outcomes: GameOutcomes,
    pub normal: PlayDiagnostics,
    pub misere: PlayDiagnostics,
    pub mu_p1: f64,
    pub escape_tangential: bool,
    pub residuals: ExtrasResiduals,
    pub max_residual: f64,
}

/// All ten outcome probabilities with diagnostics.
pub fn outcomes(dist: &OffspringDistribution) -> Result<OutcomeReport> {
    let normal = play_outcome(dist, Game::Normal)?;
    let misere = play_outcome(dist, Game::Misere)?;
    let escape = escape_outcome(dist);
    let o = GameOutcomes {
        n: normal.next,
        p: normal.prev,
        d: normal.draw,
        n_mis: misere.next,
        p_mis: misere.prev,
        d_mis: misere.draw,
        s1: escape.s1,
        s2: escape.s2,
        e1: escape.e1,
        e2: escape.e2,
    };
    let f = |x: f64| MapId::F.eval(dist, x);
    let h = |x: f64| MapId::H.eval(dist, x);
    let residuals = ExtrasResiduals {
        normal_high: (1.0 - o.p - f(o.n)).abs(),
        normal_low: (o.n - f(1.0 - o.p)).abs(),
        misere_high: (1.0 - o.p_mis - h(o.n_mis)).abs(),
        misere_low: (o.n_mis - h(1.0 - o.p_mis)).abs(),
        stopper: (o.s1 - h(o.e1)).abs(),
        escaper: (o.e1 - f(o.s1)).abs(),
    };
    Ok(OutcomeReport {
        distribution: dist.clone(),
        outcomes: o,
        normal: (&normal).into(),
        misere: (&misere).into(),
        mu_p1: escape.mu_p1,
        escape_tangential: escape.tangential,
        max_residual: residuals.max(),
        residuals,
    })
}

impl GameOutcomes {
    pub fn of(dist: &OffspringDistribution) -> Result<Self> {
        Ok(outcomes(dist)?.outcomes)
    }
}
