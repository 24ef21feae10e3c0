//! Improvement policies. Every policy maps an improvable strategy to a new
//! strategy choosing only arena-allowed edges (never strictly worse under
//! the current valuation) and strictly improving at least one node.

use std::cmp::Ordering;

use crate::arena::improvement_arena;
use crate::game::{NodeId, ParityGame, Player, Strategy};
use crate::solver::{solve, SolveError, SolveOptions};
use crate::valuation::{compare_valuations, GameValuation};

/// Which improvement policy a solve run applies.
#[derive(Clone, Debug)]
pub enum PolicyKind {
    /// Switch every node to a most profitable successor.
    Local,
    /// Switch to an optimal strategy of the improvement arena.
    Global,
    /// Adopt the target's choice wherever the arena allows it.
    Linear(Strategy),
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Local => "local",
            PolicyKind::Global => "global",
            PolicyKind::Linear(_) => "linear",
        }
    }
}

/// Applies the policy to `sigma` under its best-response valuation `vals`.
pub fn apply(
    g: &ParityGame,
    kind: &PolicyKind,
    sigma: &Strategy,
    vals: &GameValuation,
) -> Result<Strategy, SolveError> {
    match kind {
        PolicyKind::Local => Ok(local_policy(g, sigma, vals)),
        PolicyKind::Global => global_policy(g, sigma, vals),
        PolicyKind::Linear(target) => Ok(linear_policy(g, target, sigma, vals)),
    }
}

/// Locally optimizing policy: at every player-0 node pick a successor of
/// maximal valuation, keeping the current choice when it is among the maxima
/// and otherwise taking the smallest-id maximal successor.
pub fn local_policy(g: &ParityGame, sigma: &Strategy, vals: &GameValuation) -> Strategy {
    let mut next = sigma.clone();
    for v in g.owned_by(Player::P0) {
        let current = sigma.get(v);
        let mut best = current;
        for &u in g.successors(v) {
            if u == best {
                continue;
            }
            match compare_valuations(g, vals.get(u), vals.get(best)) {
                Ordering::Greater => best = u,
                Ordering::Equal if best != current && u < best => best = u,
                _ => {}
            }
        }
        next.set(v, best);
    }
    next
}

/// Globally optimizing policy: strategy iteration restricted to the arena's
/// allowed edges until its fixpoint, which is an optimal strategy of the
/// arena subgame. The nested run uses the local policy; only the fixpoint
/// matters.
pub fn global_policy(
    g: &ParityGame,
    sigma: &Strategy,
    vals: &GameValuation,
) -> Result<Strategy, SolveError> {
    let arena = improvement_arena(g, sigma, vals);
    let restricted = arena.to_game(g);
    let opts = SolveOptions {
        record_trace: false,
        ..SolveOptions::default()
    };
    let report = solve(&restricted, sigma, &PolicyKind::Local, &opts)?;
    Ok(report.fixpoint_sigma)
}

/// Linearly inductive policy: move towards a fixed optimal target strategy,
/// adopting the target's choice at exactly the nodes where the arena allows
/// it. The set of nodes already agreeing with the target never shrinks and
/// grows at every improvement step, so a full run needs at most one step per
/// player-0 node.
pub fn linear_policy(
    g: &ParityGame,
    target: &Strategy,
    sigma: &Strategy,
    vals: &GameValuation,
) -> Strategy {
    let mut next = sigma.clone();
    for v in g.owned_by(Player::P0) {
        let wanted = target.get(v);
        let allowed = compare_valuations(g, vals.get(sigma.get(v)), vals.get(wanted))
            != Ordering::Greater;
        if allowed {
            next.set(v, wanted);
        }
    }
    next
}

/// Nodes where `sigma` already agrees with `target`.
pub fn agreement_set(g: &ParityGame, sigma: &Strategy, target: &Strategy) -> Vec<NodeId> {
    g.owned_by(Player::P0)
        .filter(|&v| sigma.get(v) == target.get(v))
        .collect()
}

/// An optimal strategy reached from `from` by local-policy iteration, used
/// as the target of the linear policy.
pub fn optimal_by_local(g: &ParityGame, from: &Strategy) -> Result<Strategy, SolveError> {
    let opts = SolveOptions {
        record_trace: false,
        ..SolveOptions::default()
    };
    Ok(solve(g, from, &PolicyKind::Local, &opts)?.fixpoint_sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Node;
    use crate::response::best_response;

    fn node(owner: Player, priority: u32, successors: Vec<NodeId>) -> Node {
        Node {
            owner,
            priority,
            successors,
            label: None,
        }
    }

    /// 0 = odd sink, 1 = P0 Ω=4 -> 0, 2 = P0 Ω=6 -> {0, 1}, 3 = P0 Ω=2 -> {0, 1, 2}.
    fn ladder() -> (ParityGame, Strategy) {
        let g = ParityGame::new(vec![
            node(Player::P1, 1, vec![0]),
            node(Player::P0, 4, vec![0]),
            node(Player::P0, 6, vec![0, 1]),
            node(Player::P0, 2, vec![0, 1, 2]),
        ]);
        let mut s = Strategy::empty(4, Player::P0);
        s.set(1, 0);
        s.set(2, 0);
        s.set(3, 0);
        (g, s)
    }

    #[test]
    fn local_policy_picks_maximal_successors() {
        let (g, sigma) = ladder();
        let (_, vals) = best_response(&g, &sigma);
        let next = local_policy(&g, &sigma, &vals);
        // Node 2 gains the even node 1 on its path; node 3 prefers node 2's
        // path {2,1} over {1} and over the direct sink.
        assert_eq!(next.get(2), 1);
        assert_eq!(next.get(3), 2);
        assert_eq!(next.get(1), 0);
    }

    #[test]
    fn non_improvable_strategies_are_fixed_points_of_all_policies() {
        let (g, mut sigma) = ladder();
        sigma.set(2, 1);
        sigma.set(3, 2);
        let (_, vals) = best_response(&g, &sigma);
        assert_eq!(local_policy(&g, &sigma, &vals), sigma);
        assert_eq!(global_policy(&g, &sigma, &vals).unwrap(), sigma);
        let target = optimal_by_local(&g, &sigma).unwrap();
        assert_eq!(linear_policy(&g, &target, &sigma, &vals), sigma);
    }

    #[test]
    fn global_policy_reaches_arena_optimum_in_one_step() {
        let (g, sigma) = ladder();
        let (_, vals) = best_response(&g, &sigma);
        let next = global_policy(&g, &sigma, &vals).unwrap();
        assert_eq!(next.get(2), 1);
        assert_eq!(next.get(3), 2);
    }

    #[test]
    fn linear_policy_only_moves_through_allowed_edges() {
        let (g, sigma) = ladder();
        let target = optimal_by_local(&g, &sigma).unwrap();
        assert_eq!(target.get(3), 2);
        let (_, vals) = best_response(&g, &sigma);
        let next = linear_policy(&g, &target, &sigma, &vals);
        let before = agreement_set(&g, &sigma, &target).len();
        let after = agreement_set(&g, &next, &target).len();
        assert!(after > before);
        for (v, u) in next.choices() {
            let cmp = compare_valuations(&g, vals.get(sigma.get(v)), vals.get(u));
            assert_ne!(cmp, Ordering::Greater);
        }
    }
}
