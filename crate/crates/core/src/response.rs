//! Optimal counterstrategy for player 1 against a fixed player-0 strategy.
//!
//! With `sigma` fixed the game is a one-player game for the opponent, and
//! policy iteration applies: sweep over player-1 nodes, switch each to a
//! strictly smaller-valued successor (keeping the current choice on ties,
//! preferring the smallest id among equally minimal new targets), re-evaluate,
//! repeat until no switch exists. Each changed sweep strictly lowers the game
//! valuation, so the loop terminates; the fixpoint is pointwise minimal and
//! its valuation is unique even where the strategy is not.

use std::cmp::Ordering;

use crate::game::{ParityGame, Player, Strategy};
use crate::valuation::{compare_valuations, evaluate_all, GameValuation};

/// Generous safety cap; a hit indicates a bug, not an input problem.
const SWEEP_CAP: usize = 1 << 22;

/// Computes the optimal player-1 counterstrategy against `sigma` and the
/// resulting game valuation.
pub fn best_response(g: &ParityGame, sigma: &Strategy) -> (Strategy, GameValuation) {
    debug_assert_eq!(sigma.player, Player::P0);
    let mut tau = Strategy::min_successor(g, Player::P1);
    for _ in 0..SWEEP_CAP {
        let vals = evaluate_all(g, sigma, &tau);
        let mut changed = false;
        for v in g.owned_by(Player::P1) {
            let current = tau.get(v);
            let mut best = current;
            for &u in g.successors(v) {
                if u == best {
                    continue;
                }
                match compare_valuations(g, vals.get(u), vals.get(best)) {
                    Ordering::Less => best = u,
                    // Ties never displace the kept current choice, only an
                    // equally minimal strict improvement with a larger id.
                    Ordering::Equal if best != current && u < best => best = u,
                    _ => {}
                }
            }
            if best != current {
                tau.set(v, best);
                changed = true;
            }
        }
        if !changed {
            return (tau, vals);
        }
    }
    unreachable!("best response exceeded {SWEEP_CAP} sweeps; this is a bug");
}
