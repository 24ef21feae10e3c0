//! Strategy iteration driver: repeatedly best-respond, collect improving
//! switches, apply the policy, and assert the improvement contract plus
//! strict valuation growth at every step. The fixpoint yields the winning
//! sets via the parity of each node's cycle component.

use std::cmp::Ordering;

use thiserror::Error;

use crate::arena::improving_switches;
use crate::game::{NodeId, ParityGame, Player, Strategy};
use crate::policies::{apply, PolicyKind};
use crate::response::best_response;
use crate::valuation::{
    compare_game_valuations, compare_valuations, GameValuation, GameValuationOrder,
};

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Abort with [`SolveError::IterationCap`] after this many improvement
    /// steps.
    pub iteration_cap: u64,
    /// Keep per-step records in the report.
    pub record_trace: bool,
    /// Retain full valuations in each trace step instead of digests only.
    pub full_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> SolveOptions {
        SolveOptions {
            iteration_cap: 1 << 24,
            record_trace: true,
            full_trace: false,
        }
    }
}

/// One strategy of the iteration. The final step has no improving switches
/// and empty `chosen_switches`.
#[derive(Clone, Debug)]
pub struct TraceStep {
    pub iteration: u64,
    pub sigma: Strategy,
    pub improving_switches: Vec<(NodeId, NodeId)>,
    pub chosen_switches: Vec<(NodeId, NodeId)>,
    pub valuation_digest: u64,
    /// Present when the run keeps full traces.
    pub valuation: Option<GameValuation>,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub fixpoint_sigma: Strategy,
    pub fixpoint_tau: Strategy,
    pub fixpoint_valuation: GameValuation,
    pub w0: Vec<NodeId>,
    pub w1: Vec<NodeId>,
    /// Number of improvement steps; the trace, when recorded, has one more
    /// entry than this.
    pub iterations: u64,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("iteration cap of {cap} improvement steps exceeded")]
    IterationCap { cap: u64 },
    #[error("improvement policy violated its contract at iteration {iteration}: {detail}")]
    PolicyContract { iteration: u64, detail: String },
    #[error("a node's valuation regressed at iteration {iteration}")]
    Monotonicity { iteration: u64 },
}

/// Runs strategy iteration from `init` under the given policy.
pub fn solve(
    g: &ParityGame,
    init: &Strategy,
    policy: &PolicyKind,
    opts: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    solve_observed(g, init, policy, opts, |_, _| ())
}

/// As [`solve`], invoking `observer` with every step record and the step's
/// full valuation (also during runs that do not retain traces).
pub fn solve_observed(
    g: &ParityGame,
    init: &Strategy,
    policy: &PolicyKind,
    opts: &SolveOptions,
    mut observer: impl FnMut(&TraceStep, &GameValuation),
) -> Result<SolveReport, SolveError> {
    let mut sigma = init.clone();
    let mut trace: Vec<TraceStep> = Vec::new();
    let mut iteration: u64 = 0;
    let mut previous: Option<GameValuation> = None;
    loop {
        let (tau, vals) = best_response(g, &sigma);
        // Valuations never regress at any node, but equality of the whole
        // map is possible: a switch can rebuild a cycle dominated by the
        // switched node itself, changing no valuation. (On 1-sink games
        // growth is strict; the tests assert that separately.) Termination
        // rests on the policy contract and the iteration cap.
        if let Some(prev) = &previous {
            match compare_game_valuations(g, prev, &vals) {
                GameValuationOrder::Below | GameValuationOrder::Equal => {}
                GameValuationOrder::Above | GameValuationOrder::Incomparable => {
                    return Err(SolveError::Monotonicity { iteration });
                }
            }
        }
        let switches = improving_switches(g, &sigma, &vals);
        let improvable = !switches.is_empty();
        let next = if improvable {
            let next = apply(g, policy, &sigma, &vals)?;
            check_policy_contract(g, &sigma, &next, &vals, iteration)?;
            Some(next)
        } else {
            None
        };
        let chosen = match &next {
            Some(next) => diff_switches(&sigma, next),
            None => Vec::new(),
        };
        let step = TraceStep {
            iteration,
            sigma: sigma.clone(),
            improving_switches: switches,
            chosen_switches: chosen,
            valuation_digest: vals.digest(),
            valuation: opts.full_trace.then(|| vals.clone()),
        };
        observer(&step, &vals);
        if opts.record_trace {
            trace.push(step);
        }
        match next {
            None => {
                let mut w0 = Vec::new();
                let mut w1 = Vec::new();
                for v in g.nodes() {
                    if g.priority(vals.get(v).cycle) % 2 == 0 {
                        w0.push(v);
                    } else {
                        w1.push(v);
                    }
                }
                return Ok(SolveReport {
                    fixpoint_sigma: sigma,
                    fixpoint_tau: tau,
                    fixpoint_valuation: vals,
                    w0,
                    w1,
                    iterations: iteration,
                    trace,
                });
            }
            Some(next) => {
                if iteration >= opts.iteration_cap {
                    return Err(SolveError::IterationCap {
                        cap: opts.iteration_cap,
                    });
                }
                sigma = next;
                previous = Some(vals);
                iteration += 1;
            }
        }
    }
}

fn diff_switches(old: &Strategy, new: &Strategy) -> Vec<(NodeId, NodeId)> {
    let mut out: Vec<(NodeId, NodeId)> = new
        .choices()
        .filter(|&(v, u)| old.get(v) != u)
        .collect();
    out.sort_unstable();
    out
}

/// Improvement policy contract: choices are edges of the improvement arena
/// (never strictly worse) and, on improvable strategies, at least one choice
/// is strictly better.
fn check_policy_contract(
    g: &ParityGame,
    sigma: &Strategy,
    next: &Strategy,
    vals: &GameValuation,
    iteration: u64,
) -> Result<(), SolveError> {
    if let Err(e) = next.validate(g) {
        return Err(SolveError::PolicyContract {
            iteration,
            detail: e.to_string(),
        });
    }
    let mut some_strict = false;
    for v in g.owned_by(Player::P0) {
        match compare_valuations(g, vals.get(sigma.get(v)), vals.get(next.get(v))) {
            Ordering::Greater => {
                return Err(SolveError::PolicyContract {
                    iteration,
                    detail: format!(
                        "choice at node {v} moved to a strictly worse successor {}",
                        next.get(v)
                    ),
                });
            }
            Ordering::Less => some_strict = true,
            Ordering::Equal => {}
        }
    }
    if !some_strict {
        return Err(SolveError::PolicyContract {
            iteration,
            detail: "no strictly improving choice on an improvable strategy".into(),
        });
    }
    Ok(())
}

/// Certificate that a game is a 1-sink game: a central sink exists, player 1
/// wins everywhere, and all initial plays already end in the sink.
#[derive(Clone, Debug)]
pub struct OneSinkCertificate {
    pub sink: Option<NodeId>,
    pub sink_existence: bool,
    pub all_won_by_p1: bool,
    pub initial_cycle_components_ok: bool,
    /// Diagnostic: every strategy met during the validation solve kept all
    /// cycle components at the sink.
    pub per_step_sink_seeking_ok: bool,
}

impl OneSinkCertificate {
    pub fn is_valid(&self) -> bool {
        self.sink_existence && self.all_won_by_p1 && self.initial_cycle_components_ok
    }
}

/// Checks the 1-sink conditions for `g` with initial strategy `init`:
/// a node with a self-loop, priority 1, uniquely minimal priority and
/// reachable from every node; all nodes won by player 1 (established by a
/// solve run); and every cycle component of the initial valuation equal to
/// the sink.
pub fn validate_one_sink(
    g: &ParityGame,
    init: &Strategy,
) -> Result<OneSinkCertificate, SolveError> {
    let sink = match find_sink(g) {
        Some(sink) => sink,
        // The remaining clauses are relative to a sink; without one there
        // is nothing to establish (and no guarantee the game even meets the
        // solver's invariants).
        None => {
            return Ok(OneSinkCertificate {
                sink: None,
                sink_existence: false,
                all_won_by_p1: false,
                initial_cycle_components_ok: false,
                per_step_sink_seeking_ok: false,
            })
        }
    };
    let (_, init_vals) = best_response(g, init);
    let initial_cycle_components_ok = g.nodes().all(|v| init_vals.get(v).cycle == sink);
    let mut per_step_ok = true;
    let opts = SolveOptions {
        record_trace: false,
        ..SolveOptions::default()
    };
    let report = solve_observed(g, init, &PolicyKind::Local, &opts, |_, vals| {
        if g.nodes().any(|v| vals.get(v).cycle != sink) {
            per_step_ok = false;
        }
    })?;
    let all_won_by_p1 = report.w1.len() == g.node_count();
    Ok(OneSinkCertificate {
        sink: Some(sink),
        sink_existence: true,
        all_won_by_p1,
        initial_cycle_components_ok,
        per_step_sink_seeking_ok: per_step_ok,
    })
}

fn find_sink(g: &ParityGame) -> Option<NodeId> {
    let v_star = g.nodes().find(|&v| {
        g.priority(v) == 1
            && g.has_edge(v, v)
            && g.nodes().all(|w| w == v || g.priority(w) > g.priority(v))
    })?;
    // Backward reachability from the sink.
    let mut reaches = vec![false; g.node_count()];
    reaches[v_star] = true;
    let mut queue = vec![v_star];
    let mut preds: Vec<Vec<NodeId>> = vec![Vec::new(); g.node_count()];
    for v in g.nodes() {
        for &u in g.successors(v) {
            preds[u].push(v);
        }
    }
    while let Some(v) = queue.pop() {
        for &p in &preds[v] {
            if !reaches[p] {
                reaches[p] = true;
                queue.push(p);
            }
        }
    }
    if reaches.iter().all(|&b| b) {
        Some(v_star)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::gen_locally;
    use crate::game::Node;

    fn node(owner: Player, priority: u32, successors: Vec<NodeId>) -> Node {
        Node {
            owner,
            priority,
            successors,
            label: None,
        }
    }

    #[test]
    fn trivially_optimal_start_needs_no_iterations() {
        let g = ParityGame::new(vec![node(Player::P0, 2, vec![0])]);
        let mut init = Strategy::empty(1, Player::P0);
        init.set(0, 0);
        let report = solve(&g, &init, &PolicyKind::Local, &SolveOptions::default()).unwrap();
        assert_eq!(report.iterations, 0);
        assert_eq!(report.w0, vec![0]);
        assert_eq!(report.trace.len(), 1);
        assert!(report.trace[0].improving_switches.is_empty());
    }

    #[test]
    fn iteration_cap_is_enforced() {
        let (g, init, _) = gen_locally(3, false).unwrap();
        let opts = SolveOptions {
            iteration_cap: 2,
            ..SolveOptions::default()
        };
        match solve(&g, &init, &PolicyKind::Local, &opts) {
            Err(SolveError::IterationCap { cap: 2 }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn trace_records_strategies_and_switches() {
        let (g, init, _) = gen_locally(1, false).unwrap();
        let report = solve(&g, &init, &PolicyKind::Local, &SolveOptions::default()).unwrap();
        assert_eq!(report.trace.len() as u64, report.iterations + 1);
        for pair in report.trace.windows(2) {
            assert_eq!(pair[0].iteration + 1, pair[1].iteration);
            assert!(!pair[0].improving_switches.is_empty());
            assert!(!pair[0].chosen_switches.is_empty());
            // Chosen switches transform this sigma into the next.
            let mut s = pair[0].sigma.clone();
            for &(v, u) in &pair[0].chosen_switches {
                s.set(v, u);
            }
            assert_eq!(&s, &pair[1].sigma);
        }
        assert!(report.trace.last().unwrap().improving_switches.is_empty());
    }

    #[test]
    fn one_sink_certificate_for_generated_family() {
        let (g, init, _) = gen_locally(2, false).unwrap();
        let cert = validate_one_sink(&g, &init).unwrap();
        assert!(cert.is_valid());
        assert_eq!(cert.sink, Some(0));
        assert!(cert.per_step_sink_seeking_ok);
    }

    #[test]
    fn sink_existence_fails_without_unique_minimal_priority() {
        // Self-loop node with priority 1 exists but another node shares the
        // minimum once priorities collide.
        let g = ParityGame::new(vec![
            node(Player::P1, 1, vec![0]),
            node(Player::P0, 1, vec![0, 1]),
        ]);
        let mut init = Strategy::empty(2, Player::P0);
        init.set(1, 0);
        let cert = validate_one_sink(&g, &init).unwrap();
        assert!(!cert.sink_existence);
        assert!(!cert.is_valid());
    }

    #[test]
    fn sink_must_be_reachable_from_everywhere() {
        let g = ParityGame::new(vec![
            node(Player::P1, 1, vec![0]),
            node(Player::P0, 2, vec![1]),
        ]);
        let mut init = Strategy::empty(2, Player::P0);
        init.set(1, 1);
        let cert = validate_one_sink(&g, &init).unwrap();
        assert!(!cert.sink_existence);
    }
}
