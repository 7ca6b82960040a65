//! Expected game length.
//!
//! `T` counts moves until the player to move is stuck. A game that is still
//! open after `n` moves is undecided on the depth-`n` truncation, so
//! `P(T >= n) = D_n`, the undecided mass of the truncated recursion, and
//! `E[T] = D_1 + D_2 + ...`. The reported `raw_sum` also includes
//! `D_0 = 1`, so `e_t = raw_sum - 1`.
//!
//! `T*`, the height of the reduced tree, has no closed form; it is estimated
//! by sampling, either from solved truncated trees or directly from the
//! two-type branching law of the reduced tree.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::Serialize;

use crate::analytic::{play_outcome, truncated_outcomes};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::game::Game;
use crate::offspring::OffspringDistribution;
use crate::simulate::{monte_carlo_with, sample_rng, CountStats, MonteCarloConfig};

pub const DEFAULT_N_MAX: usize = 10_000;
pub const DEFAULT_TOL: f64 = 1e-12;
/// Ratio `D_{n+2} / D_n` at or above which the tail is treated as not
/// contracting.
pub const DIVERGENCE_RATIO: f64 = 1.0 - 1e-6;
/// Number of trailing ratios that must all reach [`DIVERGENCE_RATIO`].
pub const DIVERGENCE_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesStatus {
    Converged,
    /// `n_max` terms summed while the tail was still contracting; the error
    /// bound extrapolates the tail geometrically.
    NMaxReached,
    /// Positive draw probability or a tail that stopped contracting.
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthReport {
    pub game: Game,
    pub status: SeriesStatus,
    /// Expected number of moves; `None` when divergent.
    pub e_t: Option<f64>,
    /// `sum_{n >= 0} D_n` as far as it was summed.
    pub raw_sum: f64,
    /// Running sums `D_0 + ... + D_n`.
    pub partial_sums: Vec<f64>,
    /// Last observed `D_{n+2} / D_n`.
    pub tail_ratio: f64,
    /// Estimated size of the unsummed tail.
    pub error_bound: f64,
    pub draw: f64,
    /// `G'(N)^2` (`G'(Ñ)^2` for misère play) when draw-free.
    pub grandchild_mean: Option<f64>,
}

fn require_playable(game: Game) -> Result<()> {
    if game == Game::Escape {
        return Err(Error::InvalidArgument(
            "game lengths are defined for normal and misere play only".into(),
        ));
    }
    Ok(())
}

/// Sums the undecided masses of the truncated recursion.
pub fn expected_t(dist: &OffspringDistribution, game: Game, n_max: usize, tol: f64) -> Result<LengthReport> {
    require_playable(game)?;
    if n_max < 2 {
        return Err(Error::InvalidArgument("n_max must be at least 2".into()));
    }
    let outcome = play_outcome(dist, game)?;
    let draw = outcome.draw;
    let undecided: Vec<f64> = truncated_outcomes(dist, game, n_max)
        .iter()
        .map(|t| t.undecided().max(0.0))
        .collect();

    let mut partial_sums = Vec::with_capacity(n_max + 1);
    let mut sum = 0.0;
    let mut status = SeriesStatus::NMaxReached;
    let mut tail_ratio = f64::NAN;
    let mut error_bound = f64::INFINITY;
    let mut stalled = 0usize;
    for (n, &d) in undecided.iter().enumerate() {
        sum += d;
        partial_sums.push(sum);
        if n < 2 {
            continue;
        }
        let prev = undecided[n - 2];
        if prev > 0.0 {
            tail_ratio = d / prev;
        } else {
            tail_ratio = 0.0;
        }
        stalled = if tail_ratio >= DIVERGENCE_RATIO { stalled + 1 } else { 0 };
        if draw > 0.0 || stalled >= DIVERGENCE_WINDOW {
            status = SeriesStatus::Divergent;
            break;
        }
        // both parities of the tail shrink by about tail_ratio per two steps
        let r = tail_ratio.clamp(0.0, DIVERGENCE_RATIO);
        error_bound = (d + undecided[n - 1]) * r / (1.0 - r);
        if d == 0.0 && undecided[n - 1] == 0.0 {
            error_bound = 0.0;
        }
        if d.max(undecided[n - 1]) < tol * (1.0 - r) {
            status = SeriesStatus::Converged;
            break;
        }
    }
    if status == SeriesStatus::Divergent {
        error_bound = f64::INFINITY;
    }
    let grandchild_mean = if draw > 0.0 {
        None
    } else {
        Some(grandchild_mean(dist, game)?)
    };
    Ok(LengthReport {
        game,
        status,
        e_t: (status != SeriesStatus::Divergent).then_some(sum - 1.0),
        raw_sum: sum,
        partial_sums,
        tail_ratio,
        error_bound,
        draw,
        grandchild_mean,
    })
}

/// `(N G'(N) / P) (P G'(N) / N) = G'(N)^2`: the mean number of
/// same-type grandchildren in the reduced tree. Misère play uses `Ñ`.
pub fn grandchild_mean(dist: &OffspringDistribution, game: Game) -> Result<f64> {
    require_playable(game)?;
    let o = play_outcome(dist, game)?;
    if o.draw > 0.0 {
        return Err(Error::DrawPositive { draw: o.draw });
    }
    let slope = dist.g_prime(o.next)?;
    Ok(slope * slope)
}

/// Monte Carlo estimate of `E[T*]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TstarEstimate {
    pub game: Game,
    pub depth_cutoff: u32,
    pub mean: f64,
    pub stderr: f64,
    /// Samples contributing a height.
    pub samples: u64,
    /// Decided samples whose reduced tree hit the cutoff.
    pub censored: u64,
    /// Samples with the root undecided at the cutoff.
    pub undecided: u64,
    pub skipped: u64,
    /// `(censored + undecided) / completed samples`.
    pub censored_fraction: f64,
    /// The law has positive draw probability, so censoring dominates and
    /// the estimate is not meaningful.
    pub draw_positive: bool,
    pub histogram: Vec<u64>,
}

pub fn expected_tstar_mc(
    dist: &OffspringDistribution,
    game: Game,
    depth_cutoff: u32,
    n_samples: usize,
    seed: u64,
) -> Result<TstarEstimate> {
    let cfg = MonteCarloConfig::new(depth_cutoff, n_samples, seed).with_tstar(true);
    expected_tstar_mc_with(dist, game, &cfg)
}

pub fn expected_tstar_mc_with(
    dist: &OffspringDistribution,
    game: Game,
    cfg: &MonteCarloConfig,
) -> Result<TstarEstimate> {
    require_playable(game)?;
    let cfg = cfg.with_tstar(true);
    let draw = play_outcome(dist, game)?.draw;
    let mc = monte_carlo_with(dist, game, &cfg)?;
    let ts = mc.tstar.expect("reduced-tree heights requested");
    let lost = ts.censored + mc.censored;
    Ok(TstarEstimate {
        game,
        depth_cutoff: cfg.depth_cutoff,
        mean: ts.stats.mean,
        stderr: ts.stats.stderr,
        samples: ts.stats.samples,
        censored: ts.censored,
        undecided: mc.censored,
        skipped: mc.skipped,
        censored_fraction: if mc.samples == 0 {
            f64::NAN
        } else {
            lost as f64 / mc.samples as f64
        },
        draw_positive: draw > 0.0,
        histogram: ts.stats.histogram,
    })
}

/// Height at which a directly sampled reduced tree counts as censored.
pub const DEFAULT_HEIGHT_CAP: u32 = 100_000;
/// Nodes per directly sampled reduced tree before it counts as censored.
const REDUCED_NODE_BUDGET: usize = 10_000_000;
const CHUNK: usize = 256;

/// The reduced tree of a draw-free law as a two-type branching process.
///
/// Given its status, a previous-player-win node has `k` children, all
/// next-player wins, with probability `p_k N^k / P` (`k >= 1` in misère
/// play). A next-player-win node keeps a child only when exactly one child
/// is a previous-player win, which happens with probability `P G'(N) / N`.
/// Subtrees below are again conditioned only on their own status.
struct ReducedLaw {
    next: f64,
    degrees: Vec<u32>,
    prev_children: Option<WeightedAliasIndex<f64>>,
    keep: f64,
}

impl ReducedLaw {
    fn new(dist: &OffspringDistribution, game: Game) -> Result<Self> {
        let o = play_outcome(dist, game)?;
        if o.draw > 0.0 {
            return Err(Error::DrawPositive { draw: o.draw });
        }
        let (next, prev) = (o.next, o.prev);
        let first = u64::from(game == Game::Misere);
        let (mut degrees, mut weights) = (Vec::new(), Vec::new());
        let mut mass = 0.0;
        let last = dist.probs().map_or(u64::from(u32::MAX), |p| p.len() as u64 - 1);
        let mut k = first;
        while k <= last && mass < prev * (1.0 - 1e-15) {
            let w = dist.pmf(k) * next.powi(k as i32);
            if w > 0.0 {
                degrees.push(k as u32);
                weights.push(w);
                mass += w;
            }
            k += 1;
        }
        let prev_children = if weights.is_empty() {
            None
        } else {
            Some(WeightedAliasIndex::new(weights).map_err(|e| Error::InvalidArgument(e.to_string()))?)
        };
        let keep = if next > 0.0 {
            (prev * dist.g_prime(next)? / next).min(1.0)
        } else {
            0.0
        };
        Ok(Self {
            next,
            degrees,
            prev_children,
            keep,
        })
    }

    /// Height of one reduced tree, `None` when it reaches `cap` or the node
    /// budget.
    fn sample_height<R: Rng>(&self, rng: &mut R, cap: u32) -> Option<u32> {
        // (depth, is previous-player win)
        let root_prev = rng.random::<f64>() >= self.next;
        let mut stack = vec![(0u32, root_prev)];
        let mut height = 0;
        let mut visited = 0usize;
        while let Some((d, prev)) = stack.pop() {
            height = height.max(d);
            visited += 1;
            if d >= cap || visited > REDUCED_NODE_BUDGET {
                return None;
            }
            if prev {
                let k = match &self.prev_children {
                    Some(alias) => self.degrees[alias.sample(rng)],
                    None => 0,
                };
                stack.extend((0..k).map(|_| (d + 1, false)));
            } else if rng.random::<f64>() < self.keep {
                stack.push((d + 1, true));
            }
        }
        Some(height)
    }
}

/// Estimate of `E[T*]` from reduced trees sampled directly from their
/// two-type law. Needs a draw-free law; heights reaching `height_cap` are
/// censored. Sample `i` uses [`sample_rng`]`(seed, i)`.
pub fn expected_tstar_reduced(
    dist: &OffspringDistribution,
    game: Game,
    n_samples: usize,
    seed: u64,
    height_cap: u32,
    execution: Execution,
) -> Result<TstarEstimate> {
    require_playable(game)?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    let law = ReducedLaw::new(dist, game)?;
    let (hist, censored) = execution
        .fold_chunks(
            n_samples,
            CHUNK,
            |range| {
                let mut hist: Vec<u64> = Vec::new();
                let mut censored = 0u64;
                for i in range {
                    let mut rng = sample_rng(seed, i as u64);
                    match law.sample_height(&mut rng, height_cap) {
                        Some(h) => {
                            let h = h as usize;
                            if hist.len() <= h {
                                hist.resize(h + 1, 0);
                            }
                            hist[h] += 1;
                        }
                        None => censored += 1,
                    }
                }
                (hist, censored)
            },
            |(mut a, ca), (b, cb)| {
                if a.len() < b.len() {
                    a.resize(b.len(), 0);
                }
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                (a, ca + cb)
            },
        )
        .expect("at least one chunk");
    let stats = CountStats::from_histogram(hist);
    Ok(TstarEstimate {
        game,
        depth_cutoff: height_cap,
        mean: stats.mean,
        stderr: stats.stderr,
        samples: stats.samples,
        censored,
        undecided: 0,
        skipped: 0,
        censored_fraction: censored as f64 / n_samples as f64,
        draw_positive: false,
        histogram: stats.histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::MonteCarloConfig;
    use approx::assert_abs_diff_eq;

    fn binary(t: f64) -> OffspringDistribution {
        OffspringDistribution::finite(&[1.0 - t, 0.0, t]).unwrap()
    }

    #[test]
    fn leaf_root_has_no_moves() {
        let d = OffspringDistribution::point_mass(0);
        let r = expected_t(&d, Game::Normal, 100, 1e-12).unwrap();
        assert_eq!(r.status, SeriesStatus::Converged);
        assert_eq!(r.raw_sum, 1.0);
        assert_eq!(r.e_t, Some(0.0));
        let ts = expected_tstar_mc(&d, Game::Normal, 10, 100, 0).unwrap();
        assert_eq!(ts.mean, 0.0);
    }

    #[test]
    fn draws_diverge() {
        let r = expected_t(&binary(0.9), Game::Normal, 1000, 1e-12).unwrap();
        assert_eq!(r.status, SeriesStatus::Divergent);
        assert!(r.e_t.is_none());
        assert!(matches!(
            grandchild_mean(&binary(0.9), Game::Normal),
            Err(Error::DrawPositive { .. })
        ));
    }

    #[test]
    fn partial_sums_are_nondecreasing() {
        let r = expected_t(&binary(0.8), Game::Normal, 10_000, 1e-12).unwrap();
        assert!(r.partial_sums.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(r.status, SeriesStatus::Converged);
    }

    #[test]
    fn one_child_always_is_all_draw() {
        // G' is identically 1, but the path never ends, so there is no
        // draw-free reduced tree to speak of
        let d = OffspringDistribution::point_mass(1);
        assert_eq!(d.g_prime(0.3).unwrap(), 1.0);
        assert!(matches!(
            grandchild_mean(&d, Game::Normal),
            Err(Error::DrawPositive { draw }) if draw == 1.0
        ));
    }

    #[test]
    fn grandchild_mean_below_one_inside() {
        let g = grandchild_mean(&binary(0.5), Game::Normal).unwrap();
        assert!(g < 1.0);
        let g = grandchild_mean(&binary(3f64.sqrt() / 2.0 - 1e-9), Game::Normal).unwrap();
        assert_abs_diff_eq!(g, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn moves_match_sampled_mean() {
        let d = binary(0.5);
        let r = expected_t(&d, Game::Normal, 10_000, 1e-12).unwrap();
        let cfg = MonteCarloConfig::new(40, 20_000, 11).with_lengths(true);
        let mc = monte_carlo_with(&d, Game::Normal, &cfg).unwrap();
        let len = mc.lengths.unwrap();
        let z = (len.mean - r.e_t.unwrap()).abs() / len.stderr;
        assert!(z < 4.0, "analytic {} sampled {} ± {}", r.e_t.unwrap(), len.mean, len.stderr);
    }

    #[test]
    fn second_player_roots_follow_tilted_offspring_law() {
        // given a second-player win, every child is a first-player win
        let d = OffspringDistribution::finite(&[0.3, 0.3, 0.4]).unwrap();
        let o = play_outcome(&d, Game::Normal).unwrap();
        let cfg = MonteCarloConfig::new(40, 20_000, 4);
        let mc = monte_carlo_with(&d, Game::Normal, &cfg).unwrap();
        let hist = mc.second_win_root_offspring.unwrap();
        let total: u64 = hist.iter().sum();
        for (k, &c) in hist.iter().enumerate() {
            let p = d.pmf(k as u64) * o.next.powi(k as i32) / o.prev;
            let se = (p * (1.0 - p) / total as f64).sqrt();
            assert!((c as f64 / total as f64 - p).abs() < 4.0 * se + 1e-12, "k = {k}");
        }
    }

    #[test]
    fn reduced_law_matches_solved_trees() {
        for (dist, game) in [
            (binary(0.5), Game::Normal),
            (OffspringDistribution::finite(&[0.3, 0.3, 0.4]).unwrap(), Game::Normal),
            (OffspringDistribution::finite(&[0.4, 0.2, 0.4]).unwrap(), Game::Misere),
        ] {
            let solved = expected_tstar_mc(&dist, game, 40, 20_000, 3).unwrap();
            assert!(solved.censored_fraction < 1e-3, "{dist}: {}", solved.censored_fraction);
            let direct = expected_tstar_reduced(&dist, game, 20_000, 3, DEFAULT_HEIGHT_CAP, Execution::default()).unwrap();
            assert_eq!(direct.censored, 0);
            let z = (solved.mean - direct.mean).abs() / solved.stderr.hypot(direct.stderr);
            assert!(z < 4.0, "{dist} {game}: solved {} ± {}, direct {} ± {}", solved.mean, solved.stderr, direct.mean, direct.stderr);
        }
    }

    #[test]
    fn reduced_law_edge_cases() {
        let leaf = OffspringDistribution::point_mass(0);
        let r = expected_tstar_reduced(&leaf, Game::Normal, 100, 0, 10, Execution::Sequential).unwrap();
        assert_eq!((r.mean, r.samples), (0.0, 100));
        assert!(matches!(
            expected_tstar_reduced(&binary(0.9), Game::Normal, 10, 0, 10, Execution::Sequential),
            Err(Error::DrawPositive { .. })
        ));
        let a = expected_tstar_reduced(&binary(0.8), Game::Normal, 2000, 7, 100, Execution::Sequential).unwrap();
        let b = expected_tstar_reduced(&binary(0.8), Game::Normal, 2000, 7, 100, Execution::default()).unwrap();
        assert_eq!(a, b);
    }
}
