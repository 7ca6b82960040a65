//! Monte Carlo estimates from sampled, depth-truncated trees.
//!
//! Two evaluators share the same game recursions: [`solve`] works on a fully
//! materialised [`SampledTree`], while the estimator grows each tree lazily
//! and stops drawing offspring once the root is decided. Both treat nodes at
//! the cutoff depth as unresolved: undecided for normal and misère play,
//! Escaper wins for the escape game.

mod lazy;
mod tree;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use lazy::MAX_LAZY_CUTOFF;
pub use tree::{
    reduced_tree, sample_tree, solve, solve_escape, solve_misere, solve_normal, EscapeStatus, NodeStatus,
    ReducedTree, RootSummary, SampledTree, Solution, DEFAULT_NODE_BUDGET,
};

use crate::analytic::Quantity;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::game::Game;
use crate::offspring::OffspringDistribution;
use lazy::{Height, LazyTree, Random};

const CHUNK: usize = 256;

/// Settings shared by all Monte Carlo runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloConfig {
    pub depth_cutoff: u32,
    pub n_samples: usize,
    pub seed: u64,
    pub node_budget: usize,
    /// Record the move count of decided games. Costs a search over the
    /// recursion index at the root.
    pub lengths: bool,
    /// Also measure the reduced-tree height on decided samples.
    pub tstar: bool,
    pub execution: Execution,
    /// Samples not started by this instant are abandoned and the run fails
    /// with [`Error::TimeLimit`].
    #[serde(skip)]
    pub deadline: Option<Instant>,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            depth_cutoff: 30,
            n_samples: 100_000,
            seed: 0,
            node_budget: DEFAULT_NODE_BUDGET,
            lengths: false,
            tstar: false,
            execution: Execution::default(),
            deadline: None,
        }
    }
}

impl MonteCarloConfig {
    pub fn new(depth_cutoff: u32, n_samples: usize, seed: u64) -> Self {
        MonteCarloConfig {
            depth_cutoff,
            n_samples,
            seed,
            ..Default::default()
        }
    }

    pub fn with_lengths(mut self, on: bool) -> Self {
        self.lengths = on;
        self
    }

    pub fn with_tstar(mut self, on: bool) -> Self {
        self.tstar = on;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_deadline(mut self, deadline: Option<Instant>) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn with_node_budget(mut self, budget: usize) -> Self {
        self.node_budget = budget;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
        }
        if self.depth_cutoff > MAX_LAZY_CUTOFF {
            return Err(Error::InvalidArgument(format!(
                "depth cutoff {} exceeds {MAX_LAZY_CUTOFF}",
                self.depth_cutoff
            )));
        }
        Ok(())
    }
}

/// Random stream for sample `index`: the master seed picks the key and the
/// index picks the stream, so samples do not depend on scheduling.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A sample mean with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub quantity: Quantity,
    pub value: f64,
    pub stderr: f64,
    pub count: u64,
}

impl Estimate {
    fn from_count(quantity: Quantity, count: u64, n: u64) -> Self {
        let value = if n == 0 { f64::NAN } else { count as f64 / n as f64 };
        let stderr = (value * (1.0 - value) / n as f64).sqrt();
        Estimate {
            quantity,
            value,
            stderr,
            count,
        }
    }

    /// Standardised distance from `target`. A zero standard error counts as
    /// agreement only on exact equality.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.value - target).abs();
        if diff == 0.0 {
            0.0
        } else if self.stderr == 0.0 {
            f64::INFINITY
        } else {
            diff / self.stderr
        }
    }
}

/// Mean and standard error of an integer-valued statistic, with its
/// histogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountStats {
    pub samples: u64,
    pub mean: f64,
    pub stderr: f64,
    pub histogram: Vec<u64>,
}

impl CountStats {
    pub(crate) fn from_histogram(histogram: Vec<u64>) -> Self {
        let samples: u64 = histogram.iter().sum();
        let (mut s1, mut s2) = (0.0, 0.0);
        for (k, &c) in histogram.iter().enumerate() {
            let (k, c) = (k as f64, c as f64);
            s1 += k * c;
            s2 += k * k * c;
        }
        let n = samples as f64;
        let mean = if samples == 0 { f64::NAN } else { s1 / n };
        let stderr = if samples < 2 {
            f64::NAN
        } else {
            ((s2 - n * mean * mean).max(0.0) / (n - 1.0) / n).sqrt()
        };
        CountStats {
            samples,
            mean,
            stderr,
            histogram,
        }
    }
}

/// Reduced-tree heights on decided samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TstarStats {
    #[serde(flatten)]
    pub stats: CountStats,
    /// Decided samples whose reduced tree reaches an unresolved node.
    pub censored: u64,
}

/// Monte Carlo summary for one game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub game: Game,
    pub depth_cutoff: u32,
    /// Samples that completed (skipped ones excluded).
    pub samples: u64,
    /// Samples abandoned because the tree outgrew the node budget.
    pub skipped: u64,
    pub estimates: Vec<Estimate>,
    /// Samples whose root is undecided at the cutoff (normal and misère).
    pub censored: u64,
    /// Move counts of decided games. Absent for the escape game.
    pub lengths: Option<CountStats>,
    pub tstar: Option<TstarStats>,
    /// Offspring counts of the root on samples where the second player wins
    /// (normal and misère).
    pub second_win_root_offspring: Option<Vec<u64>>,
}

impl McEstimate {
    pub fn get(&self, quantity: Quantity) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.quantity == quantity)
    }
}

#[derive(Debug, Clone, Default)]
struct Tally {
    first: u64,
    second: u64,
    undecided: u64,
    lengths: Vec<u64>,
    tstar: Vec<u64>,
    tstar_censored: u64,
    root_offspring: Vec<u64>,
}

fn bump(hist: &mut Vec<u64>, k: usize) {
    if hist.len() <= k {
        hist.resize(k + 1, 0);
    }
    hist[k] += 1;
}

fn add_hist(a: &mut Vec<u64>, b: &[u64]) {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

impl Tally {
    fn merge(&mut self, other: &Tally) {
        self.first += other.first;
        self.second += other.second;
        self.undecided += other.undecided;
        add_hist(&mut self.lengths, &other.lengths);
        add_hist(&mut self.tstar, &other.tstar);
        self.tstar_censored += other.tstar_censored;
        add_hist(&mut self.root_offspring, &other.root_offspring);
    }
}

#[derive(Debug, Clone)]
struct Totals {
    samples: u64,
    skipped: u64,
    abandoned: u64,
    per_game: Vec<Tally>,
}

struct GameSample {
    first: bool,
    second: bool,
    /// Least recursion index at the root, when requested and decided.
    index: Option<u32>,
    tstar: Option<Height>,
    root_offspring: usize,
}

fn evaluate<S: lazy::Offspring>(
    tree: &mut LazyTree<S>,
    game: Game,
    cfg: &MonteCarloConfig,
) -> std::result::Result<GameSample, lazy::OverBudget> {
    let top = cfg.depth_cutoff;
    let first = tree.holds(0, game, false, top)?;
    // in normal and misère play the two predicates exclude each other
    let second = if first && game != Game::Escape {
        false
    } else {
        tree.holds(0, game, true, top)?
    };
    let playable = game != Game::Escape;
    let index = if cfg.lengths && playable && (first || second) {
        tree.least_index(game, second)?
    } else {
        None
    };
    let tstar = if cfg.tstar && playable && (first || second) {
        Some(tree.reduced_height(0, game)?)
    } else {
        None
    };
    let root_offspring = if second { tree.root_offspring() } else { 0 };
    Ok(GameSample {
        first,
        second,
        index,
        tstar,
        root_offspring,
    })
}

/// Estimates outcome probabilities for several games, evaluating every game
/// on the same sampled trees.
pub fn simulate_games(
    dist: &OffspringDistribution,
    games: &[Game],
    cfg: &MonteCarloConfig,
) -> Result<Vec<McEstimate>> {
    cfg.validate()?;
    let sampler = dist.sampler();
    let cutoff = cfg.depth_cutoff;
    let blank = Totals {
        samples: 0,
        skipped: 0,
        abandoned: 0,
        per_game: vec![Tally::default(); games.len()],
    };
    let totals = cfg
        .execution
        .fold_chunks(
            cfg.n_samples,
            CHUNK,
            |range| {
                let mut acc = blank.clone();
                let mut tree: Option<LazyTree<Random<'_, ChaCha8Rng>>> = None;
                let mut results = Vec::with_capacity(games.len());
                for i in range {
                    if cfg.deadline.is_some_and(|d| Instant::now() >= d) {
                        acc.abandoned += 1;
                        continue;
                    }
                    let source = Random {
                        sampler: &sampler,
                        rng: sample_rng(cfg.seed, i as u64),
                    };
                    let tree = match tree.as_mut() {
                        Some(t) => {
                            t.reset_with(Some(source));
                            t
                        }
                        None => tree.insert(LazyTree::new(source, cutoff, cfg.node_budget)),
                    };
                    results.clear();
                    let mut over = false;
                    for &game in games {
                        match evaluate(tree, game, cfg) {
                            Ok(r) => results.push(r),
                            Err(_) => {
                                over = true;
                                break;
                            }
                        }
                    }
                    if over {
                        acc.skipped += 1;
                        continue;
                    }
                    acc.samples += 1;
                    for (t, r) in acc.per_game.iter_mut().zip(&results) {
                        if r.first {
                            t.first += 1;
                        }
                        if r.second {
                            t.second += 1;
                            bump(&mut t.root_offspring, r.root_offspring);
                        }
                        if !r.first && !r.second {
                            t.undecided += 1;
                        }
                        if let Some(k) = r.index {
                            bump(&mut t.lengths, k as usize - 1);
                        }
                        match r.tstar {
                            Some(Height::Exact(h)) => bump(&mut t.tstar, h as usize),
                            Some(Height::Censored) => t.tstar_censored += 1,
                            None => {}
                        }
                    }
                }
                acc
            },
            |mut a, b| {
                a.samples += b.samples;
                a.skipped += b.skipped;
                a.abandoned += b.abandoned;
                for (x, y) in a.per_game.iter_mut().zip(&b.per_game) {
                    x.merge(y);
                }
                a
            },
        )
        .unwrap_or(blank);
    if totals.abandoned > 0 {
        return Err(Error::TimeLimit {
            completed: cfg.n_samples - totals.abandoned as usize,
            requested: cfg.n_samples,
        });
    }

    Ok(games
        .iter()
        .zip(totals.per_game)
        .map(|(&game, t)| summarize(game, cfg, totals.samples, totals.skipped, t))
        .collect())
}

fn summarize(game: Game, cfg: &MonteCarloConfig, n: u64, skipped: u64, t: Tally) -> McEstimate {
    let est = |q, c| Estimate::from_count(q, c, n);
    let (estimates, censored, lengths, offspring) = match game {
        Game::Normal => (
            vec![
                est(Quantity::N, t.first),
                est(Quantity::P, t.second),
                est(Quantity::D, t.undecided),
            ],
            t.undecided,
            cfg.lengths.then(|| CountStats::from_histogram(t.lengths.clone())),
            Some(t.root_offspring.clone()),
        ),
        Game::Misere => (
            vec![
                est(Quantity::NMis, t.first),
                est(Quantity::PMis, t.second),
                est(Quantity::DMis, t.undecided),
            ],
            t.undecided,
            cfg.lengths.then(|| CountStats::from_histogram(t.lengths.clone())),
            Some(t.root_offspring.clone()),
        ),
        // truncated nodes are Escaper wins, so every sample is decided
        Game::Escape => (
            vec![
                est(Quantity::S1, t.first),
                est(Quantity::S2, t.second),
                est(Quantity::E1, n - t.second),
                est(Quantity::E2, n - t.first),
            ],
            0,
            None,
            None,
        ),
    };
    let tstar = (cfg.tstar && game != Game::Escape).then(|| TstarStats {
        stats: CountStats::from_histogram(t.tstar),
        censored: t.tstar_censored,
    });
    McEstimate {
        game,
        depth_cutoff: cfg.depth_cutoff,
        samples: n,
        skipped,
        estimates,
        censored,
        lengths,
        tstar,
        second_win_root_offspring: offspring,
    }
}

/// Estimates the outcome probabilities of one game.
pub fn monte_carlo(
    dist: &OffspringDistribution,
    game: Game,
    depth_cutoff: u32,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    let cfg = MonteCarloConfig::new(depth_cutoff, n_samples, seed);
    monte_carlo_with(dist, game, &cfg)
}

pub fn monte_carlo_with(dist: &OffspringDistribution, game: Game, cfg: &MonteCarloConfig) -> Result<McEstimate> {
    let mut v = simulate_games(dist, &[game], cfg)?;
    Ok(v.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::truncated_outcomes;

    fn binary(t: f64) -> OffspringDistribution {
        OffspringDistribution::finite(&[1.0 - t, 0.0, t]).unwrap()
    }

    #[test]
    fn extinct_law_is_second_player_win() {
        let d = OffspringDistribution::point_mass(0);
        let cfg = MonteCarloConfig::new(10, 100, 1).with_lengths(true);
        let mc = monte_carlo_with(&d, Game::Normal, &cfg).unwrap();
        assert_eq!(mc.get(Quantity::N).unwrap().value, 0.0);
        assert_eq!(mc.get(Quantity::P).unwrap().value, 1.0);
        assert_eq!(mc.lengths.as_ref().unwrap().mean, 0.0);
    }

    #[test]
    fn path_is_undecided_or_escaper_win() {
        let d = OffspringDistribution::point_mass(1);
        let out = simulate_games(&d, &Game::ALL, &MonteCarloConfig::new(7, 50, 3)).unwrap();
        assert_eq!(out[0].censored, 50);
        assert_eq!(out[1].censored, 50);
        assert_eq!(out[2].get(Quantity::E1).unwrap().value, 1.0);
        assert_eq!(out[2].get(Quantity::E2).unwrap().value, 1.0);
    }

    #[test]
    fn independent_of_execution_strategy() {
        let d = binary(0.7);
        let cfg = MonteCarloConfig::new(12, 3000, 42).with_lengths(true).with_tstar(true);
        let seq = simulate_games(&d, &Game::ALL, &cfg.with_execution(Execution::Sequential)).unwrap();
        let par = simulate_games(&d, &Game::ALL, &cfg.with_execution(Execution::default())).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn lazy_estimator_agrees_with_explicit_trees() {
        // same laws, independent random streams; both must hit the truncated values
        let d = binary(0.6);
        let cutoff = 8;
        let n = 4000;
        let mc = monte_carlo(&d, Game::Normal, cutoff, n, 9).unwrap();
        let mut first = 0;
        for i in 0..n {
            let t = sample_tree(&d, cutoff, 10_000 + i as u64, DEFAULT_NODE_BUDGET).unwrap();
            if solve(&t, Game::Normal).first_index(0).is_some() {
                first += 1;
            }
        }
        let exact = truncated_outcomes(&d, Game::Normal, cutoff as usize)[cutoff as usize].lower;
        let explicit = Estimate::from_count(Quantity::N, first, n as u64);
        assert!(explicit.z_score(exact) < 4.0);
        assert!(mc.get(Quantity::N).unwrap().z_score(exact) < 4.0);
    }

    #[test]
    fn undecided_mass_tracks_truncated_recursion() {
        let d = binary(0.9);
        for cutoff in [10u32, 20] {
            let mc = monte_carlo(&d, Game::Normal, cutoff, 20_000, 5).unwrap();
            let t = truncated_outcomes(&d, Game::Normal, cutoff as usize)[cutoff as usize];
            assert!(mc.get(Quantity::D).unwrap().z_score(t.undecided()) < 4.0);
        }
    }

    #[test]
    fn budget_overflow_is_counted() {
        let d = OffspringDistribution::point_mass(3);
        let cfg = MonteCarloConfig::new(12, 20, 0).with_node_budget(50);
        let mc = monte_carlo_with(&d, Game::Escape, &cfg).unwrap();
        assert_eq!(mc.skipped, 20);
        assert_eq!(mc.samples, 0);
    }
}
