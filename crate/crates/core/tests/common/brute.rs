//! Reference solver for small explicit trees.
//!
//! The reference values come from direct game search on nested trees:
//! win/loss search with move counts for normal play, the leaf-extension
//! reduction for misère play, minimax over move counts for the escape game
//! and explicit path enumeration for forcing paths.

use gwgames::simulate::{reduced_tree, solve, EscapeStatus, NodeStatus, SampledTree};
use gwgames::Game;

macro_rules! ensure_eq {
    ($a:expr, $b:expr, $($ctx:tt)+) => {{
        let (a, b) = (&$a, &$b);
        if a != b {
            return Err(format!("{:?} != {:?}: {}", a, b, format!($($ctx)+)));
        }
    }};
}

#[derive(Clone, Debug)]
pub enum Node {
    /// Below the depth cutoff; offspring never drawn.
    Cut,
    Inner(Vec<Node>),
}

fn leaf() -> Node {
    Node::Inner(Vec::new())
}

/// All trees whose nodes at depth `h` are leaves (or cut, when `cut`).
pub fn trees(h: u32, cut: bool) -> Vec<Node> {
    if h == 0 {
        return vec![if cut { Node::Cut } else { leaf() }];
    }
    let sub = trees(h - 1, cut);
    let mut out = vec![leaf()];
    out.extend(sub.iter().map(|a| Node::Inner(vec![a.clone()])));
    for a in &sub {
        for b in &sub {
            out.push(Node::Inner(vec![a.clone(), b.clone()]));
        }
    }
    out
}

pub fn bfs(root: &Node) -> Vec<&Node> {
    let mut order = vec![root];
    let mut i = 0;
    while i < order.len() {
        if let Node::Inner(kids) = order[i] {
            order.extend(kids.iter());
        }
        i += 1;
    }
    order
}

pub fn to_sampled(root: &Node, cutoff: u32) -> SampledTree {
    let counts: Vec<u32> = bfs(root)
        .into_iter()
        .filter_map(|n| match n {
            Node::Inner(k) => Some(k.len() as u32),
            Node::Cut => None,
        })
        .collect();
    SampledTree::from_bfs_counts(&counts, cutoff).unwrap()
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Outcome {
    /// Player to move wins; the number of moves under optimal play.
    Win(u32),
    Loss(u32),
    Unknown,
}

/// Normal play: the player who cannot move loses. The winner hurries, the
/// loser stalls.
fn normal(n: &Node) -> Outcome {
    let kids = match n {
        Node::Cut => return Outcome::Unknown,
        Node::Inner(k) => k,
    };
    let results: Vec<Outcome> = kids.iter().map(normal).collect();
    let fastest_win = results
        .iter()
        .filter_map(|r| match r {
            Outcome::Loss(m) => Some(m + 1),
            _ => None,
        })
        .min();
    if let Some(m) = fastest_win {
        return Outcome::Win(m);
    }
    if results.iter().any(|r| *r == Outcome::Unknown) {
        return Outcome::Unknown;
    }
    let longest = results
        .iter()
        .map(|r| match r {
            Outcome::Win(m) => m + 1,
            _ => unreachable!(),
        })
        .max()
        .unwrap_or(0);
    Outcome::Loss(longest)
}

/// Every leaf gets one leaf child. Normal play on the result is misère play
/// on the original, one move longer.
fn extend_leaves(n: &Node) -> Node {
    match n {
        Node::Cut => Node::Cut,
        Node::Inner(k) if k.is_empty() => Node::Inner(vec![leaf()]),
        Node::Inner(k) => Node::Inner(k.iter().map(extend_leaves).collect()),
    }
}

fn misere(n: &Node) -> Outcome {
    match normal(&extend_leaves(n)) {
        Outcome::Win(m) => Outcome::Win(m - 1),
        Outcome::Loss(m) => Outcome::Loss(m - 1),
        Outcome::Unknown => Outcome::Unknown,
    }
}

/// Escape game: moves until somebody is stuck when Stopper wins, `None`
/// when Escaper survives (reaching the cutoff counts as surviving).
fn escape(n: &Node, stopper_to_move: bool) -> Option<u32> {
    let kids = match n {
        Node::Cut => return None,
        Node::Inner(k) => k,
    };
    if kids.is_empty() {
        return Some(0);
    }
    let results: Vec<Option<u32>> = kids.iter().map(|c| escape(c, !stopper_to_move)).collect();
    if stopper_to_move {
        results.iter().flatten().min().map(|m| m + 1)
    } else if results.iter().all(Option::is_some) {
        results.iter().flatten().max().map(|m| m + 1)
    } else {
        None
    }
}

fn expected_status(o: Outcome) -> NodeStatus {
    match o {
        Outcome::Win(m) => NodeStatus::NextWin(m + 1),
        Outcome::Loss(m) => NodeStatus::PrevWin(m + 1),
        Outcome::Unknown => NodeStatus::Undecided,
    }
}

/// Longest forcing path from the root, found by walking every root path.
/// On a forcing path the losing side moves freely and the winning side has
/// exactly one winning reply. The flag reports a winning-side node whose
/// unique known reply sits next to an undecided child.
fn forcing_height(root: &Node, rule: fn(&Node) -> Outcome) -> (u32, bool) {
    fn walk(n: &Node, len: u32, rule: fn(&Node) -> Outcome, best: &mut (u32, bool)) {
        best.0 = best.0.max(len);
        let Node::Inner(kids) = n else { unreachable!() };
        let results: Vec<Outcome> = kids.iter().map(rule).collect();
        match rule(n) {
            Outcome::Loss(_) => {
                for k in kids {
                    walk(k, len + 1, rule, best);
                }
            }
            Outcome::Win(_) => {
                let losing: Vec<usize> = (0..kids.len())
                    .filter(|&i| matches!(results[i], Outcome::Loss(_)))
                    .collect();
                if losing.len() == 1 {
                    if results.contains(&Outcome::Unknown) {
                        best.1 = true;
                    } else {
                        walk(&kids[losing[0]], len + 1, rule, best);
                    }
                }
            }
            Outcome::Unknown => unreachable!(),
        }
    }
    let mut best = (0, false);
    walk(root, 0, rule, &mut best);
    best
}

pub fn check_tree(root: &Node, cutoff: u32) -> Result<(), String> {
    let t = to_sampled(root, cutoff);
    let nodes = bfs(root);
    ensure_eq!(nodes.len(), t.len(), "node count");

    for (game, rule) in [(Game::Normal, normal as fn(&Node) -> Outcome), (Game::Misere, misere)] {
        let sol = solve(&t, game);
        for (v, n) in nodes.iter().enumerate() {
            if matches!(n, Node::Cut) {
                continue;
            }
            ensure_eq!(sol.status(v), expected_status(rule(n)), "{game} node {v} of {root:?}");
        }
        let summary = sol.root_summary();
        match rule(root) {
            Outcome::Win(m) | Outcome::Loss(m) => ensure_eq!(summary.moves, Some(m), "{game} moves of {root:?}"),
            Outcome::Unknown => ensure_eq!(summary.moves, None, "{game} moves of {root:?}"),
        }
        match reduced_tree(&t, &sol) {
            None => ensure_eq!(rule(root), Outcome::Unknown, "{game} reduced tree of {root:?}"),
            Some(r) => {
                let (height, censored) = forcing_height(root, rule);
                ensure_eq!(r.censored, censored, "{game} {root:?}");
                ensure_eq!(r.height, height, "{game} {root:?}");
            }
        }
    }

    let sol = solve(&t, Game::Escape);
    for (v, n) in nodes.iter().enumerate() {
        if matches!(n, Node::Cut) {
            continue;
        }
        for stopper_first in [true, false] {
            let expect = match escape(n, stopper_first) {
                Some(m) => EscapeStatus::StopperWin(m + 1),
                None => EscapeStatus::EscaperWin,
            };
            ensure_eq!(sol.escape_status(v, stopper_first), expect, "node {v} of {root:?}");
        }
    }
    Ok(())
}

/// Probability of the tree when offspring counts are drawn from `p`.
pub fn weight(n: &Node, p: &[f64; 3]) -> f64 {
    match n {
        Node::Cut => 1.0,
        Node::Inner(k) => p[k.len()] * k.iter().map(|c| weight(c, p)).product::<f64>(),
    }
}
