//! Trees grown only as far as the game evaluation looks.
//!
//! The recursion predicates are evaluated depth first with short-circuiting,
//! so a subtree is drawn only when some line of play needs it. Answers are
//! memoised per node as monotone bounds in the recursion index.

use rand::Rng;
use rand_distr::Distribution;

#[cfg(test)]
use super::tree::SampledTree;
use crate::game::Game;
use crate::offspring::OffspringSampler;

/// Largest supported depth cutoff (indices are stored in a byte).
pub const MAX_LAZY_CUTOFF: u32 = 250;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct OverBudget;

/// Supplies offspring for a node on first visit.
pub(crate) trait Offspring {
    /// Appends one tag per child of the node tagged `tag`.
    fn expand(&mut self, tag: u32, out: &mut Vec<u32>);
}

pub(crate) struct Random<'a, R> {
    pub sampler: &'a OffspringSampler,
    pub rng: R,
}

impl<R: Rng> Offspring for Random<'_, R> {
    fn expand(&mut self, _tag: u32, out: &mut Vec<u32>) {
        let k = self.sampler.sample(&mut self.rng);
        // counts beyond u32 are caught by the node budget
        let k = k.min(u32::MAX as u64) as usize;
        out.resize(out.len() + k, 0);
    }
}

/// Replays an explicit tree.
#[cfg(test)]
pub(crate) struct Replay<'a>(pub &'a SampledTree);

#[cfg(test)]
impl Offspring for Replay<'_> {
    fn expand(&mut self, tag: u32, out: &mut Vec<u32>) {
        out.extend(self.0.children(tag as usize).map(|c| c as u32));
    }
}

#[derive(Debug, Clone, Copy)]
struct Memo {
    false_upto: u8,
    true_from: u8,
}

const UNKNOWN: Memo = Memo {
    false_upto: 0,
    true_from: u8::MAX,
};

/// Outcome of the reduced-tree height computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Height {
    Exact(u32),
    Censored,
}

pub(crate) struct LazyTree<S> {
    source: S,
    cutoff: u32,
    budget: usize,
    depth: Vec<u8>,
    first: Vec<u32>,
    count: Vec<u32>,
    expanded: Vec<bool>,
    tag: Vec<u32>,
    memo: Vec<[Memo; 6]>,
    scratch: Vec<u32>,
}

fn slot(game: Game, second: bool) -> usize {
    let g = match game {
        Game::Normal => 0,
        Game::Misere => 1,
        Game::Escape => 2,
    };
    2 * g + usize::from(second)
}

impl<S: Offspring> LazyTree<S> {
    pub fn new(source: S, cutoff: u32, budget: usize) -> Self {
        assert!(cutoff <= MAX_LAZY_CUTOFF, "depth cutoff above {MAX_LAZY_CUTOFF}");
        let mut t = LazyTree {
            source,
            cutoff,
            budget: budget.max(1),
            depth: Vec::new(),
            first: Vec::new(),
            count: Vec::new(),
            expanded: Vec::new(),
            tag: Vec::new(),
            memo: Vec::new(),
            scratch: Vec::new(),
        };
        t.reset_with(None);
        t
    }

    /// Starts a fresh tree, optionally with a new offspring source, keeping
    /// the allocations.
    pub fn reset_with(&mut self, source: Option<S>) {
        if let Some(s) = source {
            self.source = s;
        }
        self.depth.clear();
        self.first.clear();
        self.count.clear();
        self.expanded.clear();
        self.tag.clear();
        self.memo.clear();
        self.push(0, 0);
    }

    fn push(&mut self, depth: u8, tag: u32) {
        self.depth.push(depth);
        self.first.push(0);
        self.count.push(0);
        self.expanded.push(false);
        self.tag.push(tag);
        self.memo.push([UNKNOWN; 6]);
    }

    pub fn len(&self) -> usize {
        self.depth.len()
    }

    fn expand(&mut self, v: usize) -> Result<(), OverBudget> {
        if self.expanded[v] {
            return Ok(());
        }
        self.expanded[v] = true;
        if u32::from(self.depth[v]) >= self.cutoff {
            return Ok(());
        }
        let mut kids = std::mem::take(&mut self.scratch);
        kids.clear();
        self.source.expand(self.tag[v], &mut kids);
        if self.len() + kids.len() > self.budget {
            self.scratch = kids;
            return Err(OverBudget);
        }
        self.first[v] = self.len() as u32;
        self.count[v] = kids.len() as u32;
        let d = self.depth[v] + 1;
        for &t in &kids {
            self.push(d, t);
        }
        self.scratch = kids;
        Ok(())
    }

    fn remaining(&self, v: usize) -> u32 {
        self.cutoff - u32::from(self.depth[v])
    }

    /// The game predicate at node `v` with recursion index `k`: for
    /// `second == false` the first-role player (mover, or Stopper) is forced
    /// to win, otherwise the second-role one.
    pub fn holds(&mut self, v: usize, game: Game, second: bool, k: u32) -> Result<bool, OverBudget> {
        let k = k.min(self.remaining(v));
        if k == 0 {
            return Ok(false);
        }
        let s = slot(game, second);
        let m = self.memo[v][s];
        if k <= u32::from(m.false_upto) {
            return Ok(false);
        }
        if k >= u32::from(m.true_from) {
            return Ok(true);
        }
        self.expand(v)?;
        let (first, count) = (self.first[v] as usize, self.count[v] as usize);
        let result = if count == 0 {
            let (leaf_first, leaf_second) = game.leaf_values();
            if second {
                leaf_second
            } else {
                leaf_first
            }
        } else if second {
            let mut all = true;
            for c in first..first + count {
                if !self.holds(c, game, false, k - 1)? {
                    all = false;
                    break;
                }
            }
            all
        } else {
            let mut any = false;
            for c in first..first + count {
                if self.holds(c, game, true, k - 1)? {
                    any = true;
                    break;
                }
            }
            any
        };
        let m = &mut self.memo[v][s];
        if result {
            m.true_from = m.true_from.min(k as u8);
        } else {
            m.false_upto = m.false_upto.max(k as u8);
        }
        Ok(result)
    }

    /// Number of children of the root. Only meaningful once the root has
    /// been evaluated at a positive index.
    pub fn root_offspring(&self) -> usize {
        debug_assert!(self.expanded[0]);
        self.count[0] as usize
    }

    /// Least index at which the predicate holds at the root, if any.
    pub fn least_index(&mut self, game: Game, second: bool) -> Result<Option<u32>, OverBudget> {
        let top = self.cutoff;
        if !self.holds(0, game, second, top)? {
            return Ok(None);
        }
        let (mut lo, mut hi) = (0, top);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.holds(0, game, second, mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some(hi))
    }

    /// Height of the reduced tree below a decided node `v`.
    pub fn reduced_height(&mut self, v: usize, game: Game) -> Result<Height, OverBudget> {
        let rem = self.remaining(v);
        let next_wins = self.holds(v, game, false, rem)?;
        debug_assert!(next_wins || self.holds(v, game, true, rem)?);
        self.expand(v)?;
        let (first, count) = (self.first[v] as usize, self.count[v] as usize);
        if next_wins {
            let mut prev_child = None;
            let mut undecided = false;
            for c in first..first + count {
                if self.holds(c, game, true, rem - 1)? {
                    if prev_child.is_some() {
                        return Ok(Height::Exact(0));
                    }
                    prev_child = Some(c);
                } else if !self.holds(c, game, false, rem - 1)? {
                    undecided = true;
                }
            }
            match prev_child {
                None => Ok(Height::Exact(0)),
                Some(_) if undecided => Ok(Height::Censored),
                Some(c) => Ok(match self.reduced_height(c, game)? {
                    Height::Exact(h) => Height::Exact(h + 1),
                    Height::Censored => Height::Censored,
                }),
            }
        } else {
            let mut h = 0;
            for c in first..first + count {
                match self.reduced_height(c, game)? {
                    Height::Exact(hc) => h = h.max(hc + 1),
                    Height::Censored => return Ok(Height::Censored),
                }
            }
            Ok(Height::Exact(h))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::tree::{reduced_tree, solve};

    fn tree(counts: &[u32], cutoff: u32) -> SampledTree {
        SampledTree::from_bfs_counts(counts, cutoff).unwrap()
    }

    #[test]
    fn replay_matches_explicit_solver() {
        let cases: &[(&[u32], u32)] = &[
            (&[0], 3),
            (&[1, 0], 3),
            (&[2, 0, 1, 0], 3),
            (&[2, 1, 2, 0, 1, 0, 0], 4),
            (&[2, 0, 1], 2),
            (&[1, 1, 1], 3),
        ];
        for &(counts, cutoff) in cases {
            let t = tree(counts, cutoff);
            for game in Game::ALL {
                let sol = solve(&t, game);
                let mut lazy = LazyTree::new(Replay(&t), cutoff, 1000);
                assert_eq!(lazy.least_index(game, false).unwrap(), sol.first_index(0));
                assert_eq!(lazy.least_index(game, true).unwrap(), sol.second_index(0));
                if game != Game::Escape && sol.status(0).index().is_some() {
                    let r = reduced_tree(&t, &sol).unwrap();
                    let expect = if r.censored { Height::Censored } else { Height::Exact(r.height) };
                    assert_eq!(lazy.reduced_height(0, game).unwrap(), expect, "{counts:?}");
                }
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let t = tree(&[3, 3, 3, 3], 2);
        let mut lazy = LazyTree::new(Replay(&t), 2, 5);
        assert_eq!(lazy.holds(0, Game::Normal, true, 2), Err(OverBudget));
    }
}
