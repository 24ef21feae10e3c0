//! Play-based node valuations and their orderings.
//!
//! A play under a pair of positional strategies is a lasso
//! `v_1 .. v_k (w_1 .. w_l)^ω` where `w_1` is the highest-priority node on
//! the cycle and no tail node equals `w_1`. Its valuation seen from `v_1` is
//! the triple `(w_1, {v_i | Ω(v_i) > Ω(w_1)}, k)`: cycle component, the set
//! of tail nodes more relevant than the cycle component, and tail length.

use std::cmp::Ordering;

use crate::game::{joint_successor, NodeId, ParityGame, Strategy};

/// Reward of a node: its priority if even, the negated priority if odd.
/// Injective priorities make rewards pairwise distinct.
pub fn reward(g: &ParityGame, v: NodeId) -> i64 {
    let p = g.priority(v) as i64;
    if p % 2 == 0 {
        p
    } else {
        -p
    }
}

/// Reward ordering on nodes (total, by injectivity of priorities).
pub fn compare_rewards(g: &ParityGame, a: NodeId, b: NodeId) -> Ordering {
    reward(g, a).cmp(&reward(g, b))
}

/// Set of nodes kept sorted by descending priority, the canonical shape for
/// symmetric-difference comparisons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSet(Vec<NodeId>);

impl PathSet {
    pub fn empty() -> PathSet {
        PathSet(Vec::new())
    }

    pub fn from_nodes(g: &ParityGame, nodes: &[NodeId]) -> PathSet {
        let mut v: Vec<NodeId> = nodes.to_vec();
        v.sort_by(|&a, &b| g.priority(b).cmp(&g.priority(a)));
        v.dedup();
        PathSet(v)
    }

    pub fn insert(&mut self, g: &ParityGame, v: NodeId) {
        let p = g.priority(v);
        match self.0.binary_search_by(|&w| g.priority(w).cmp(&p).reverse()) {
            Ok(_) => {}
            Err(pos) => self.0.insert(pos, v),
        }
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.0.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().copied()
    }
}

/// Compares node sets by the parity of the most relevant element of their
/// symmetric difference: `M < N` iff that element lies in `N` with even
/// priority or in `M` with odd priority. Inputs are treated as sets.
pub fn compare_node_sets(g: &ParityGame, m: &[NodeId], n: &[NodeId]) -> Ordering {
    compare_path_sets(
        g,
        &PathSet::from_nodes(g, m),
        &PathSet::from_nodes(g, n),
    )
}

/// Same ordering on the canonical sorted representation. Scans both sequences
/// in descending priority order; the first disagreement is the most relevant
/// element of the symmetric difference.
pub fn compare_path_sets(g: &ParityGame, m: &PathSet, n: &PathSet) -> Ordering {
    let mut i = 0;
    let mut j = 0;
    loop {
        match (m.0.get(i), n.0.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some(&a), None) => return side_decides(g, a, Side::Left),
            (None, Some(&b)) => return side_decides(g, b, Side::Right),
            (Some(&a), Some(&b)) => {
                if a == b {
                    i += 1;
                    j += 1;
                } else if g.priority(a) > g.priority(b) {
                    return side_decides(g, a, Side::Left);
                } else {
                    return side_decides(g, b, Side::Right);
                }
            }
        }
    }
}

enum Side {
    Left,
    Right,
}

/// Outcome when the most relevant symmetric-difference element `v` belongs to
/// the given side: an even node makes its side greater, an odd node smaller.
fn side_decides(g: &ParityGame, v: NodeId, side: Side) -> Ordering {
    let even = g.priority(v) % 2 == 0;
    match (side, even) {
        (Side::Left, true) => Ordering::Greater,
        (Side::Left, false) => Ordering::Less,
        (Side::Right, true) => Ordering::Less,
        (Side::Right, false) => Ordering::Greater,
    }
}

/// Valuation of a play: cycle component, path component, tail length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeValuation {
    pub cycle: NodeId,
    pub path: PathSet,
    pub length: usize,
}

impl NodeValuation {
    pub fn new(cycle: NodeId, path: PathSet, length: usize) -> NodeValuation {
        NodeValuation {
            cycle,
            path,
            length,
        }
    }
}

/// Lexicographic valuation ordering: first by cycle reward, then by the path
/// set ordering, then by tail length with direction given by the cycle
/// parity (longer tails are better when the cycle is even for the opponent:
/// with an odd cycle a shorter tail is smaller, with an even cycle a longer
/// tail is smaller).
pub fn compare_valuations(
    g: &ParityGame,
    a: &NodeValuation,
    b: &NodeValuation,
) -> Ordering {
    let by_cycle = compare_rewards(g, a.cycle, b.cycle);
    if by_cycle != Ordering::Equal {
        return by_cycle;
    }
    let by_path = compare_path_sets(g, &a.path, &b.path);
    if by_path != Ordering::Equal {
        return by_path;
    }
    if a.length == b.length {
        return Ordering::Equal;
    }
    let cycle_even = g.priority(a.cycle) % 2 == 0;
    if cycle_even {
        // Longer tails postpone the good cycle: worse for player 0.
        b.length.cmp(&a.length)
    } else {
        // Longer tails postpone the bad cycle: better for player 0.
        a.length.cmp(&b.length)
    }
}

/// One valuation per node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameValuation(pub Vec<NodeValuation>);

impl GameValuation {
    pub fn get(&self, v: NodeId) -> &NodeValuation {
        &self.0[v]
    }

    pub fn node_count(&self) -> usize {
        self.0.len()
    }

    /// Stable digest of the full valuation (FNV-1a over a canonical byte
    /// encoding), identical across runs and platforms.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |x: u64| {
            for byte in x.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for val in &self.0 {
            eat(val.cycle as u64);
            eat(val.path.len() as u64);
            for v in val.path.iter() {
                eat(v as u64);
            }
            eat(val.length as u64);
        }
        h
    }
}

/// Pointwise comparison of two game valuations: `Less` means every node
/// weakly below with at least one strictly below.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GameValuationOrder {
    Equal,
    Below,
    Above,
    Incomparable,
}

pub fn compare_game_valuations(
    g: &ParityGame,
    a: &GameValuation,
    b: &GameValuation,
) -> GameValuationOrder {
    let mut some_less = false;
    let mut some_greater = false;
    for v in g.nodes() {
        match compare_valuations(g, a.get(v), b.get(v)) {
            Ordering::Less => some_less = true,
            Ordering::Greater => some_greater = true,
            Ordering::Equal => {}
        }
    }
    match (some_less, some_greater) {
        (false, false) => GameValuationOrder::Equal,
        (true, false) => GameValuationOrder::Below,
        (false, true) => GameValuationOrder::Above,
        (true, true) => GameValuationOrder::Incomparable,
    }
}

/// Valuations of every node under the pair `(sigma, tau)`, computed in one
/// pass over the functional graph the two strategies induce. The play from a
/// node follows the unique successor chain into a cycle; the cycle component
/// is the cycle's highest-priority node, tail valuations extend the
/// successor's valuation by one node.
pub fn evaluate_all(g: &ParityGame, sigma: &Strategy, tau: &Strategy) -> GameValuation {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        OnStack,
        Done,
    }
    let n = g.node_count();
    let succ = |v: NodeId| joint_successor(g, sigma, tau, v);
    let mut mark = vec![Mark::White; n];
    let mut vals: Vec<Option<NodeValuation>> = vec![None; n];
    let mut stack: Vec<NodeId> = Vec::new();
    let mut pos = vec![usize::MAX; n];

    for start in g.nodes() {
        if mark[start] != Mark::White {
            continue;
        }
        debug_assert!(stack.is_empty());
        let mut v = start;
        while mark[v] == Mark::White {
            mark[v] = Mark::OnStack;
            pos[v] = stack.len();
            stack.push(v);
            v = succ(v);
        }
        if mark[v] == Mark::OnStack {
            // A new cycle: stack[pos[v]..] in forward play order.
            let first = pos[v];
            let cycle: Vec<NodeId> = stack[first..].to_vec();
            let len = cycle.len();
            let top_idx = (0..len)
                .max_by_key(|&i| g.priority(cycle[i]))
                .expect("cycle is nonempty");
            let top = cycle[top_idx];
            vals[top] = Some(NodeValuation::new(top, PathSet::empty(), 0));
            // Walking backwards from the cycle component assigns each cycle
            // node its forward distance to the component; no cycle node is
            // more relevant than the component, so path sets stay empty.
            for d in 1..len {
                let w = cycle[(top_idx + len - d) % len];
                vals[w] = Some(NodeValuation::new(top, PathSet::empty(), d));
            }
            for &w in &cycle {
                mark[w] = Mark::Done;
            }
            stack.truncate(first);
        }
        // Remaining stack entries form a tail into a valued node.
        while let Some(w) = stack.pop() {
            let u = succ(w);
            let base = vals[u].as_ref().expect("successor already valued");
            let mut path = base.path.clone();
            if g.priority(w) > g.priority(base.cycle) {
                path.insert(g, w);
            }
            vals[w] = Some(NodeValuation::new(base.cycle, path, base.length + 1));
            mark[w] = Mark::Done;
        }
    }
    GameValuation(vals.into_iter().map(|v| v.expect("all nodes valued")).collect())
}

/// Valuation of the single play starting at `v` under `(sigma, tau)`.
pub fn evaluate_play(
    g: &ParityGame,
    sigma: &Strategy,
    tau: &Strategy,
    v: NodeId,
) -> NodeValuation {
    evaluate_all(g, sigma, tau).0[v].clone()
}
