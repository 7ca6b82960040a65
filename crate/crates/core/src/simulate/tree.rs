//! Depth-truncated sampled trees and the explicit backward-induction solver.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::Game;
use crate::offspring::OffspringDistribution;

pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;
const NO_PARENT: u32 = u32::MAX;

/// Breadth-first arena of a Galton-Watson tree cut at `depth_cutoff`.
/// Children of a node are contiguous. Nodes at the cutoff depth are
/// truncated: their offspring were never drawn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledTree {
    parent: Vec<u32>,
    depth: Vec<u32>,
    child_start: Vec<u32>,
    child_count: Vec<u32>,
    depth_cutoff: u32,
}

impl SampledTree {
    /// Builds a tree from offspring counts listed in breadth-first order for
    /// every node above the cutoff.
    pub fn from_bfs_counts(counts: &[u32], depth_cutoff: u32) -> Result<Self> {
        let mut it = counts.iter().copied();
        let tree = Self::grow(depth_cutoff, usize::MAX, || {
            it.next()
                .ok_or_else(|| Error::InvalidArgument("offspring list ends early".into()))
        })?;
        if it.next().is_some() {
            return Err(Error::InvalidArgument("offspring list has unused entries".into()));
        }
        Ok(tree)
    }

    fn grow(
        depth_cutoff: u32,
        budget: usize,
        mut draw: impl FnMut() -> Result<u32>,
    ) -> Result<Self> {
        let mut t = SampledTree {
            parent: vec![NO_PARENT],
            depth: vec![0],
            child_start: vec![0],
            child_count: vec![0],
            depth_cutoff,
        };
        let mut v = 0;
        while v < t.len() {
            let d = t.depth[v];
            if d < depth_cutoff {
                let k = draw()?;
                if t.len() + k as usize > budget {
                    return Err(Error::TreeTooLarge { budget });
                }
                t.child_start[v] = t.len() as u32;
                t.child_count[v] = k;
                for _ in 0..k {
                    t.parent.push(v as u32);
                    t.depth.push(d + 1);
                    t.child_start.push(0);
                    t.child_count.push(0);
                }
            }
            v += 1;
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.depth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depth.is_empty()
    }

    pub fn depth_cutoff(&self) -> u32 {
        self.depth_cutoff
    }

    pub fn depth(&self, v: usize) -> u32 {
        self.depth[v]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        let p = self.parent[v];
        (p != NO_PARENT).then_some(p as usize)
    }

    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        let s = self.child_start[v] as usize;
        s..s + self.child_count[v] as usize
    }

    /// Node at the cutoff whose subtree was not sampled.
    pub fn is_truncated(&self, v: usize) -> bool {
        self.depth[v] == self.depth_cutoff
    }

    /// A genuine leaf: no children and not truncated.
    pub fn is_leaf(&self, v: usize) -> bool {
        !self.is_truncated(v) && self.child_count[v] == 0
    }

    /// Number of nodes at each depth.
    pub fn level_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.depth_cutoff as usize + 1];
        for &d in &self.depth {
            sizes[d as usize] += 1;
        }
        sizes
    }

    /// Same tree cut at a smaller depth.
    pub fn truncate(&self, depth_cutoff: u32) -> SampledTree {
        let cutoff = depth_cutoff.min(self.depth_cutoff);
        let mut counts = Vec::new();
        for v in 0..self.len() {
            if self.depth[v] < cutoff {
                counts.push(self.child_count[v]);
            }
        }
        Self::from_bfs_counts(&counts, cutoff).expect("counts come from a valid tree")
    }
}

/// Draws a tree with i.i.d. offspring counts, breadth first.
pub fn sample_tree(
    dist: &OffspringDistribution,
    depth_cutoff: u32,
    seed: u64,
    budget: usize,
) -> Result<SampledTree> {
    let sampler = dist.sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SampledTree::grow(depth_cutoff, budget, || {
        let k = sampler.sample(&mut rng);
        u32::try_from(k).map_err(|_| Error::TreeTooLarge { budget })
    })
}

/// Least recursion indices for the two predicates of a game.
///
/// For normal and misère play `first[v]` is the least `k` with `v` a
/// next-player win within `k` levels and `second[v]` the same for a
/// previous-player win. For the escape game they are the least indices at
/// which Stopper wins with Stopper, respectively Escaper, to move.
/// Zero means not forced above the cutoff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub game: Game,
    first: Vec<u32>,
    second: Vec<u32>,
}

/// Outcome class of one node in normal or misère play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeStatus {
    NextWin(u32),
    PrevWin(u32),
    Undecided,
}

impl NodeStatus {
    pub fn index(self) -> Option<u32> {
        match self {
            NodeStatus::NextWin(k) | NodeStatus::PrevWin(k) => Some(k),
            NodeStatus::Undecided => None,
        }
    }

    /// Number of moves under optimal play, `index - 1`.
    pub fn moves(self) -> Option<u32> {
        self.index().map(|k| k - 1)
    }
}

/// Winner of the escape game from one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EscapeStatus {
    StopperWin(u32),
    EscaperWin,
}

impl Solution {
    fn opt(x: u32) -> Option<u32> {
        (x > 0).then_some(x)
    }

    pub fn first_index(&self, v: usize) -> Option<u32> {
        Self::opt(self.first[v])
    }

    pub fn second_index(&self, v: usize) -> Option<u32> {
        Self::opt(self.second[v])
    }

    /// Status for normal or misère play.
    pub fn status(&self, v: usize) -> NodeStatus {
        debug_assert!(self.game != Game::Escape);
        match (self.first_index(v), self.second_index(v)) {
            (Some(k), _) => NodeStatus::NextWin(k),
            (None, Some(k)) => NodeStatus::PrevWin(k),
            (None, None) => NodeStatus::Undecided,
        }
    }

    /// Status for the escape game.
    pub fn escape_status(&self, v: usize, stopper_moves_first: bool) -> EscapeStatus {
        let idx = if stopper_moves_first { self.first[v] } else { self.second[v] };
        match idx {
            0 => EscapeStatus::EscaperWin,
            k => EscapeStatus::StopperWin(k),
        }
    }
}

/// Bottom-up pass over the arena.
pub fn solve(tree: &SampledTree, game: Game) -> Solution {
    let (leaf_first, leaf_second) = game.leaf_values();
    let n = tree.len();
    let mut first = vec![0u32; n];
    let mut second = vec![0u32; n];
    for v in (0..n).rev() {
        if tree.is_truncated(v) {
            continue;
        }
        let ch = tree.children(v);
        if ch.is_empty() {
            first[v] = u32::from(leaf_first);
            second[v] = u32::from(leaf_second);
            continue;
        }
        let mut best = 0;
        let mut worst = 0;
        let mut all_forced = true;
        for c in ch {
            let s = second[c];
            if s > 0 && (best == 0 || s < best) {
                best = s;
            }
            let f = first[c];
            if f == 0 {
                all_forced = false;
            } else {
                worst = worst.max(f);
            }
        }
        first[v] = if best > 0 { best + 1 } else { 0 };
        second[v] = if all_forced { worst + 1 } else { 0 };
    }
    Solution { game, first, second }
}

pub fn solve_normal(tree: &SampledTree) -> Solution {
    solve(tree, Game::Normal)
}

pub fn solve_misere(tree: &SampledTree) -> Solution {
    solve(tree, Game::Misere)
}

/// Escape game; the root status is read with the requested first mover.
pub fn solve_escape(tree: &SampledTree, stopper_moves_first: bool) -> (Solution, EscapeStatus) {
    let sol = solve(tree, Game::Escape);
    let root = sol.escape_status(0, stopper_moves_first);
    (sol, root)
}

/// Root status with the move count when decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RootSummary {
    pub status: NodeStatus,
    pub moves: Option<u32>,
}

impl Solution {
    pub fn root_summary(&self) -> RootSummary {
        let status = self.status(0);
        RootSummary { status, moves: status.moves() }
    }
}

/// Component of the root after removing next-player-win children of
/// next-player-win nodes and previous-player-win nodes with a
/// previous-player-win sibling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReducedTree {
    /// Nodes of the reduced tree in breadth-first order.
    pub nodes: Vec<usize>,
    /// Height, meaningful only when not censored.
    pub height: u32,
    /// The cutoff hides a child that could change the reduction.
    pub censored: bool,
}

/// Reduced tree of a decided root in normal or misère play.
/// Returns `None` when the root is undecided.
pub fn reduced_tree(tree: &SampledTree, sol: &Solution) -> Option<ReducedTree> {
    if sol.status(0) == NodeStatus::Undecided {
        return None;
    }
    let mut nodes = vec![0];
    let mut height = 0;
    let mut censored = false;
    let mut i = 0;
    while i < nodes.len() {
        let v = nodes[i];
        i += 1;
        height = height.max(tree.depth(v));
        match sol.status(v) {
            NodeStatus::PrevWin(_) => nodes.extend(tree.children(v)),
            NodeStatus::NextWin(_) => {
                let mut p_children = tree
                    .children(v)
                    .filter(|&c| matches!(sol.status(c), NodeStatus::PrevWin(_)));
                let only = p_children.next();
                let more = p_children.next().is_some();
                if let (Some(c), false) = (only, more) {
                    if tree.children(v).any(|c| sol.status(c) == NodeStatus::Undecided) {
                        censored = true;
                    } else {
                        nodes.push(c);
                    }
                }
            }
            NodeStatus::Undecided => unreachable!("reduced tree only reaches decided nodes"),
        }
    }
    Some(ReducedTree { nodes, height, censored })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(counts: &[u32], cutoff: u32) -> SampledTree {
        SampledTree::from_bfs_counts(counts, cutoff).unwrap()
    }

    #[test]
    fn degenerate_laws() {
        let t = sample_tree(&OffspringDistribution::point_mass(0), 7, 1, 100).unwrap();
        assert_eq!(t.len(), 1);
        let t = sample_tree(&OffspringDistribution::point_mass(1), 5, 1, 100).unwrap();
        assert_eq!(t.len(), 6);
        assert!(t.is_truncated(5));
        let err = sample_tree(&OffspringDistribution::point_mass(3), 20, 1, 1000).unwrap_err();
        assert!(matches!(err, Error::TreeTooLarge { budget: 1000 }));
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = OffspringDistribution::poisson(1.5).unwrap();
        let a = sample_tree(&d, 8, 99, DEFAULT_NODE_BUDGET).unwrap();
        let b = sample_tree(&d, 8, 99, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn normal_examples() {
        let single = tree(&[0], 5);
        assert_eq!(solve_normal(&single).root_summary().status, NodeStatus::PrevWin(1));
        assert_eq!(solve_normal(&single).root_summary().moves, Some(0));
        let edge = tree(&[1, 0], 5);
        assert_eq!(solve_normal(&edge).root_summary().moves, Some(1));
        assert!(matches!(solve_normal(&edge).status(0), NodeStatus::NextWin(_)));
        let path = tree(&[1, 1, 0], 5);
        assert_eq!(solve_normal(&path).root_summary().status, NodeStatus::PrevWin(3));
        assert_eq!(solve_normal(&path).root_summary().moves, Some(2));
    }

    #[test]
    fn misere_examples() {
        assert_eq!(solve_misere(&tree(&[0], 5)).status(0), NodeStatus::NextWin(1));
        assert!(matches!(solve_misere(&tree(&[1, 0], 5)).status(0), NodeStatus::PrevWin(_)));
        assert!(matches!(solve_misere(&tree(&[2, 0, 0], 5)).status(0), NodeStatus::PrevWin(_)));
    }

    #[test]
    fn escape_examples() {
        let (_, s) = solve_escape(&tree(&[0], 5), true);
        assert_eq!(s, EscapeStatus::StopperWin(1));
        let (_, s) = solve_escape(&tree(&[1, 1, 1], 3), true);
        assert_eq!(s, EscapeStatus::EscaperWin);
        let (_, s) = solve_escape(&tree(&[2, 0, 0], 5), false);
        assert_eq!(s, EscapeStatus::StopperWin(2));
    }

    #[test]
    fn truncated_nodes_are_undecided() {
        let t = tree(&[1], 1);
        assert_eq!(solve_normal(&t).status(0), NodeStatus::Undecided);
        assert_eq!(solve_misere(&t).status(0), NodeStatus::Undecided);
    }

    #[test]
    fn reduced_tree_examples() {
        let single = tree(&[0], 5);
        let r = reduced_tree(&single, &solve_normal(&single)).unwrap();
        assert_eq!((r.height, r.censored), (0, false));
        let edge = tree(&[1, 0], 5);
        let r = reduced_tree(&edge, &solve_normal(&edge)).unwrap();
        assert_eq!((r.nodes.len(), r.height), (2, 1));
        let two_leaves = tree(&[2, 0, 0], 5);
        let r = reduced_tree(&two_leaves, &solve_normal(&two_leaves)).unwrap();
        assert_eq!(r.nodes, vec![0]);
        // unique leaf child next to a subtree cut by the depth limit
        let hidden = tree(&[2, 0, 1], 2);
        let r = reduced_tree(&hidden, &solve_normal(&hidden)).unwrap();
        assert!(r.censored);
    }

    #[test]
    fn truncate_matches_shallower_build() {
        let d = OffspringDistribution::finite(&[0.3, 0.3, 0.4]).unwrap();
        let t = sample_tree(&d, 6, 3, DEFAULT_NODE_BUDGET).unwrap();
        let s = t.truncate(3);
        assert_eq!(s.depth_cutoff(), 3);
        assert!(s.len() <= t.len());
        assert_eq!(s.level_sizes()[..4], t.level_sizes()[..4]);
    }
}
