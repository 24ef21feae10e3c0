//! Improvement arena of a strategy: the subgame keeping, at each player-0
//! node, only the edges whose target valuation is at least the current
//! choice's valuation. Equal-valued edges stay in; improving switches are the
//! strictly better ones.

use std::cmp::Ordering;

use crate::game::{Node, NodeId, ParityGame, Player, Strategy};
use crate::valuation::{compare_valuations, GameValuation};

/// Arena of allowed player-0 edges under a fixed valuation. Player-1 edges
/// are unrestricted.
#[derive(Clone, Debug)]
pub struct ImprovementArena {
    /// Allowed successors per node; equals the full successor list at
    /// player-1 nodes.
    pub allowed: Vec<Vec<NodeId>>,
}

/// Builds the arena of `sigma` from its best-response valuation `vals`.
pub fn improvement_arena(
    g: &ParityGame,
    sigma: &Strategy,
    vals: &GameValuation,
) -> ImprovementArena {
    let allowed = g
        .nodes()
        .map(|v| match g.owner(v) {
            Player::P1 => g.successors(v).to_vec(),
            Player::P0 => {
                let current = vals.get(sigma.get(v));
                g.successors(v)
                    .iter()
                    .copied()
                    .filter(|&u| {
                        compare_valuations(g, current, vals.get(u)) != Ordering::Greater
                    })
                    .collect()
            }
        })
        .collect();
    ImprovementArena { allowed }
}

impl ImprovementArena {
    /// Materializes the arena as a parity game (same nodes and priorities,
    /// restricted player-0 edges) for nested strategy iteration.
    pub fn to_game(&self, g: &ParityGame) -> ParityGame {
        let nodes = g
            .nodes()
            .map(|v| Node {
                owner: g.owner(v),
                priority: g.priority(v),
                successors: self.allowed[v].clone(),
                label: g.label(v).map(str::to_owned),
            })
            .collect();
        ParityGame::new(nodes)
    }

    pub fn contains_edge(&self, v: NodeId, u: NodeId) -> bool {
        self.allowed[v].contains(&u)
    }
}

/// All strictly improving player-0 switches of `sigma`, sorted by (node,
/// target). `sigma` is improvable iff the result is nonempty.
pub fn improving_switches(
    g: &ParityGame,
    sigma: &Strategy,
    vals: &GameValuation,
) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for v in g.owned_by(Player::P0) {
        let current = vals.get(sigma.get(v));
        for &u in g.successors(v) {
            if u != sigma.get(v)
                && compare_valuations(g, current, vals.get(u)) == Ordering::Less
            {
                out.push((v, u));
            }
        }
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::best_response;

    fn node(owner: Player, priority: u32, successors: Vec<NodeId>) -> Node {
        Node {
            owner,
            priority,
            successors,
            label: None,
        }
    }

    /// 0 = odd sink; 1 = P0 Ω=4 -> {0}; 2 = P0 Ω=2 -> {0, 1, 21?}
    /// Node 2 options: direct sink (tail {2}), via 1 (tail {1, 2}).
    fn g() -> ParityGame {
        ParityGame::new(vec![
            node(Player::P1, 1, vec![0]),
            node(Player::P0, 4, vec![0]),
            node(Player::P0, 2, vec![0, 1]),
        ])
    }

    #[test]
    fn strictly_worse_edges_leave_the_arena() {
        let g = g();
        let mut sigma = Strategy::empty(3, Player::P0);
        sigma.set(1, 0);
        sigma.set(2, 1);
        let (_, vals) = best_response(&g, &sigma);
        let arena = improvement_arena(&g, &sigma, &vals);
        // Via node 1 the valuation gains an even node: direct sink is worse.
        assert_eq!(arena.allowed[2], vec![1]);
        assert!(improving_switches(&g, &sigma, &vals).is_empty());
    }

    #[test]
    fn improving_switch_detected_and_arena_keeps_ties() {
        let g = g();
        let mut sigma = Strategy::empty(3, Player::P0);
        sigma.set(1, 0);
        sigma.set(2, 0);
        let (_, vals) = best_response(&g, &sigma);
        let arena = improvement_arena(&g, &sigma, &vals);
        assert_eq!(arena.allowed[2], vec![0, 1]);
        assert_eq!(improving_switches(&g, &sigma, &vals), vec![(2, 1)]);
        let restricted = arena.to_game(&g);
        assert_eq!(restricted.successors(2), &[0, 1]);
        assert_eq!(restricted.successors(0), &[0]);
    }
}
