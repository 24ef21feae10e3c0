//! Brute-force reference implementations used to validate the solver on
//! small games: full enumeration of positional strategies for both players.

use thiserror::Error;

use crate::arena::ImprovementArena;
use crate::game::{NodeId, ParityGame, Player, Strategy};
use crate::valuation::{
    compare_valuations, evaluate_all, GameValuation, NodeValuation,
};

const ENUM_CAP: u64 = 1_000_000;

/// Tighter cap for arena enumeration inside the global-policy reference.
const ARENA_ENUM_CAP: u64 = 100_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("player {player} strategy space of size {count} exceeds the enumeration cap")]
    TooLarge { player: Player, count: u64 },
}

/// Iterates all positional strategies of `player` over the given successor
/// lists (odometer order: earlier nodes vary fastest through ascending
/// successor positions).
fn enumerate_strategies(
    g: &ParityGame,
    player: Player,
    successors: impl Fn(NodeId) -> Vec<NodeId>,
    cap: u64,
) -> Result<Vec<Strategy>, OracleError> {
    let owned: Vec<NodeId> = g.owned_by(player).collect();
    let options: Vec<Vec<NodeId>> = owned.iter().map(|&v| successors(v)).collect();
    let mut count: u64 = 1;
    for opts in &options {
        count = count.saturating_mul(opts.len() as u64);
        if count > cap {
            return Err(OracleError::TooLarge { player, count });
        }
    }
    let mut all = Vec::with_capacity(count as usize);
    let mut idx = vec![0usize; owned.len()];
    loop {
        let mut s = Strategy::empty(g.node_count(), player);
        for (k, &v) in owned.iter().enumerate() {
            s.set(v, options[k][idx[k]]);
        }
        all.push(s);
        let mut carry = 0;
        while carry < owned.len() {
            idx[carry] += 1;
            if idx[carry] < options[carry].len() {
                break;
            }
            idx[carry] = 0;
            carry += 1;
        }
        if carry == owned.len() {
            return Ok(all);
        }
    }
}

pub fn all_strategies(g: &ParityGame, player: Player) -> Result<Vec<Strategy>, OracleError> {
    enumerate_strategies(g, player, |v| g.successors(v).to_vec(), ENUM_CAP)
}

/// Result of exhaustive analysis: the optimal game valuation, winning sets
/// obtained independently by strategy enumeration, and one optimal player-0
/// strategy.
#[derive(Clone, Debug)]
pub struct BruteForce {
    pub valuation: GameValuation,
    pub w0: Vec<NodeId>,
    pub w1: Vec<NodeId>,
    pub optimal_sigma: Strategy,
}

/// Pointwise minimum over all opponent strategies; panics unless a single
/// opponent strategy attains the minimum at every node simultaneously (which
/// the theory guarantees).
fn response_valuation(g: &ParityGame, sigma: &Strategy, taus: &[Strategy]) -> GameValuation {
    let evals: Vec<GameValuation> = taus.iter().map(|t| evaluate_all(g, sigma, t)).collect();
    let min_vals: Vec<NodeValuation> = g
        .nodes()
        .map(|v| {
            evals
                .iter()
                .map(|e| e.get(v))
                .min_by(|a, b| compare_valuations(g, a, b))
                .expect("at least one opponent strategy")
                .clone()
        })
        .collect();
    let witness = evals.iter().any(|e| {
        g.nodes()
            .all(|v| compare_valuations(g, e.get(v), &min_vals[v]) == std::cmp::Ordering::Equal)
    });
    assert!(
        witness,
        "no single opponent strategy is nodewise minimal; valuation theory violated"
    );
    GameValuation(min_vals)
}

/// Exhaustive solve: maximizes the response valuation over every player-0
/// strategy and derives winning sets by direct play inspection (a node is
/// won by player 0 iff some strategy forces an even cycle component against
/// every opponent strategy).
pub fn brute_force_parity(g: &ParityGame) -> Result<BruteForce, OracleError> {
    let sigmas = all_strategies(g, Player::P0)?;
    let taus = all_strategies(g, Player::P1)?;
    let mut best: Option<(GameValuation, Strategy)> = None;
    let mut w0_enum = vec![false; g.node_count()];
    for sigma in &sigmas {
        let vals = response_valuation(g, sigma, &taus);
        // Independent winning check: does sigma win v against every tau?
        let mut wins = vec![true; g.node_count()];
        for tau in &taus {
            let e = evaluate_all(g, sigma, tau);
            for v in g.nodes() {
                if g.priority(e.get(v).cycle) % 2 != 0 {
                    wins[v] = false;
                }
            }
        }
        for v in g.nodes() {
            if wins[v] {
                w0_enum[v] = true;
            }
        }
        let replace = match &best {
            None => true,
            Some((cur, _)) => g.nodes().any(|v| {
                compare_valuations(g, cur.get(v), vals.get(v)) == std::cmp::Ordering::Less
            }),
        };
        if replace {
            best = Some((vals, sigma.clone()));
        }
    }
    let (valuation, optimal_sigma) = best.expect("games are nonempty");
    // The chosen valuation must dominate every strategy's valuation.
    for sigma in &sigmas {
        let vals = response_valuation(g, sigma, &taus);
        for v in g.nodes() {
            assert_ne!(
                compare_valuations(g, valuation.get(v), vals.get(v)),
                std::cmp::Ordering::Less,
                "brute force found incomparable optimal valuations"
            );
        }
    }
    let w0: Vec<NodeId> = g.nodes().filter(|&v| w0_enum[v]).collect();
    let w1: Vec<NodeId> = g.nodes().filter(|&v| !w0_enum[v]).collect();
    // Fixpoint theorem: valuation cycle parities agree with the enumerated
    // winning sets.
    for v in g.nodes() {
        let even = g.priority(valuation.get(v).cycle) % 2 == 0;
        assert_eq!(even, w0_enum[v], "valuation and winning sets disagree at {v}");
    }
    Ok(BruteForce {
        valuation,
        w0,
        w1,
        optimal_sigma,
    })
}

/// Exhaustive reference for the globally optimizing policy: enumerates every
/// strategy inside the improvement arena, maximizes the response valuation,
/// and returns the realizer with smallest-id choices. Two arbitrary arena
/// strategies may have incomparable valuations, but the maximum dominates
/// all of them (the arena subgame's optimum); that domination is asserted.
pub fn brute_force_global(
    g: &ParityGame,
    arena: &ImprovementArena,
) -> Result<(Strategy, GameValuation), OracleError> {
    let candidates =
        enumerate_strategies(g, Player::P0, |v| arena.allowed[v].clone(), ARENA_ENUM_CAP)?;
    let taus = all_strategies(g, Player::P1)?;
    let scored: Vec<(GameValuation, &Strategy)> = candidates
        .iter()
        .map(|sigma| (response_valuation(g, sigma, &taus), sigma))
        .collect();
    let dominates = |a: &GameValuation, b: &GameValuation| {
        g.nodes()
            .all(|v| compare_valuations(g, a.get(v), b.get(v)) != std::cmp::Ordering::Less)
    };
    let mut best: Option<(&GameValuation, &Strategy)> = None;
    for (vals, sigma) in &scored {
        let replace = match best {
            None => true,
            Some((cur_vals, cur_sigma)) => {
                let equal = g.nodes().all(|v| {
                    compare_valuations(g, cur_vals.get(v), vals.get(v))
                        == std::cmp::Ordering::Equal
                });
                if equal {
                    smaller_choices(sigma, cur_sigma)
                } else {
                    dominates(vals, cur_vals) && !dominates(cur_vals, vals)
                }
            }
        };
        if replace {
            best = Some((vals, sigma));
        }
    }
    let (vals, sigma) = best.expect("arena contains the current strategy");
    for (other, _) in &scored {
        assert!(
            dominates(vals, other),
            "no arena strategy dominates all others; fixpoint theory violated"
        );
    }
    Ok((sigma.clone(), vals.clone()))
}

fn smaller_choices(a: &Strategy, b: &Strategy) -> bool {
    let av: Vec<_> = a.choices().collect();
    let bv: Vec<_> = b.choices().collect();
    av < bv
}
