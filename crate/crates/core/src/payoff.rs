//! Reductions from parity games to mean payoff, discounted payoff and simple
//! stochastic games, with exact evaluation and strategy iteration on the
//! reduced games.
//!
//! All arithmetic is exact over arbitrary-precision rationals; the discount
//! factor is chosen so close to 1 that the discounted order of plays agrees
//! with the parity valuation order on 1-sink games, which is what the
//! correspondence checker at the bottom verifies.

use std::cmp::Ordering;

use num::{BigInt, BigRational, One, Signed, Zero};
use thiserror::Error;

use crate::arena::improving_switches;
use crate::game::{NodeId, ParityGame, Player, Strategy};
use crate::linalg::{solve_linear, SingularError};
use crate::response::best_response;
use crate::valuation::compare_valuations;

/// Exact rational scalar used throughout the payoff reductions. The library
/// keeps values in canonical form (coprime, positive denominator).
pub type Rational = BigRational;

/// One exact value per node.
pub type ValueAssignment = Vec<Rational>;

/// Generous safety cap on policy-iteration sweeps; a hit indicates a bug.
const SWEEP_CAP: usize = 1 << 22;

/// Cap on outer improvement steps of the payoff solvers.
const IMPROVEMENT_CAP: u64 = 1 << 24;

/// A two-player payoff game on the same arena shape as a parity game:
/// owners and successor lists per node, plus an exact integer reward.
#[derive(Clone, Debug)]
pub struct MeanPayoffGame {
    pub owners: Vec<Player>,
    pub successors: Vec<Vec<NodeId>>,
    pub rewards: Vec<BigInt>,
}

impl MeanPayoffGame {
    pub fn node_count(&self) -> usize {
        self.owners.len()
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    pub fn owned_by(&self, p: Player) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.owners.len()).filter(move |&v| self.owners[v] == p)
    }

    pub fn joint_successor(&self, sigma: &Strategy, rho: &Strategy, v: NodeId) -> NodeId {
        match self.owners[v] {
            Player::P0 => sigma.get(v),
            Player::P1 => rho.get(v),
        }
    }

    /// The strategy choosing the smallest-id successor at every owned node.
    pub fn min_successor(&self, player: Player) -> Strategy {
        let mut s = Strategy::empty(self.node_count(), player);
        for v in self.owned_by(player) {
            let u = *self.successors[v].iter().min().expect("total edge relation");
            s.set(v, u);
        }
        s
    }

    fn reward_of(&self, v: NodeId) -> Rational {
        Rational::from_integer(self.rewards[v].clone())
    }
}

/// A mean payoff game together with a discount factor in (0, 1).
#[derive(Clone, Debug)]
pub struct DiscountedPayoffGame {
    pub mpg: MeanPayoffGame,
    pub beta: Rational,
}

#[derive(Debug, Error)]
pub enum PayoffError {
    #[error("improvement iteration cap of {cap} exceeded")]
    IterationCap { cap: u64 },
    #[error("fixed-policy chain is singular; this is a bug")]
    SingularChain(#[from] SingularError),
}

/// Maps a parity game to the mean payoff game on the same arena with reward
/// `(-|V|)^priority(v)`: even priorities become large positive rewards, odd
/// ones large negative, and higher priorities dominate any combination of
/// lower ones.
pub fn to_mpg(g: &ParityGame) -> MeanPayoffGame {
    let base = BigInt::from(-(g.node_count() as i64));
    MeanPayoffGame {
        owners: g.nodes().map(|v| g.owner(v)).collect(),
        successors: g.nodes().map(|v| g.successors(v).to_vec()).collect(),
        rewards: g
            .nodes()
            .map(|v| num::pow(base.clone(), g.priority(v) as usize))
            .collect(),
    }
}

/// Attaches the discount factor `1 - 1/(4|V|^3 max|r|)`, exactly.
pub fn to_dpg(m: MeanPayoffGame) -> DiscountedPayoffGame {
    let n = BigInt::from(m.node_count());
    let max_r = m
        .rewards
        .iter()
        .map(|r| r.abs())
        .max()
        .unwrap_or_else(BigInt::one)
        .max(BigInt::one());
    let denom = BigInt::from(4) * &n * &n * &n * max_r;
    let beta = Rational::new(&denom - BigInt::one(), denom);
    DiscountedPayoffGame { mpg: m, beta }
}

/// Discounted value of every node under a fixed strategy pair: the play from
/// `v` is a lasso, its tail contributes a finite discounted sum and the cycle
/// `w_0 .. w_{L-1}` the closed form `(sum of beta^k r(w_k)) / (1 - beta^L)`,
/// combined through the Bellman identity `value(v) = r(v) + beta *
/// value(next)` which the result satisfies exactly at every node.
pub fn dpg_evaluate(d: &DiscountedPayoffGame, sigma: &Strategy, rho: &Strategy) -> ValueAssignment {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        OnStack,
        Done,
    }
    let m = &d.mpg;
    let beta = &d.beta;
    let n = m.node_count();
    let succ = |v: NodeId| m.joint_successor(sigma, rho, v);
    let mut mark = vec![Mark::White; n];
    let mut vals: Vec<Option<Rational>> = vec![None; n];
    let mut stack: Vec<NodeId> = Vec::new();
    let mut pos = vec![usize::MAX; n];

    for start in 0..n {
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
            // New cycle: stack[pos[v]..] in forward play order, closing at v.
            let first = pos[v];
            let cycle: Vec<NodeId> = stack[first..].to_vec();
            let mut discounted_sum = Rational::zero();
            let mut power = Rational::one();
            for &w in &cycle {
                discounted_sum += &power * m.reward_of(w);
                power *= beta;
            }
            // After the loop `power` is beta^L.
            vals[v] = Some(discounted_sum / (Rational::one() - power));
            // The rest of the cycle in reverse play order, each one Bellman
            // step from its successor.
            for idx in (1..cycle.len()).rev() {
                let w = cycle[idx];
                let next_val = vals[succ(w)].clone().expect("successor already valued");
                vals[w] = Some(m.reward_of(w) + beta * next_val);
            }
            for &w in &cycle {
                mark[w] = Mark::Done;
            }
            stack.truncate(first);
        }
        while let Some(w) = stack.pop() {
            let next_val = vals[succ(w)].clone().expect("successor already valued");
            vals[w] = Some(m.reward_of(w) + beta * next_val);
            mark[w] = Mark::Done;
        }
    }
    vals.into_iter()
        .map(|v| v.expect("all nodes valued"))
        .collect()
}

/// Optimal player-1 counterstrategy against `sigma` in the discounted game,
/// by policy iteration: sweep player-1 nodes, switch to successors of
/// strictly smaller value (keeping the current choice on ties, preferring
/// the smallest id among equally minimal new targets), re-evaluate, repeat.
/// The result satisfies `value(v) = r(v) + beta * min over successors` at
/// player-1 nodes with the returned strategy attaining the minima.
pub fn dpg_best_response(
    d: &DiscountedPayoffGame,
    sigma: &Strategy,
) -> (Strategy, ValueAssignment) {
    debug_assert_eq!(sigma.player, Player::P0);
    let m = &d.mpg;
    let mut rho = m.min_successor(Player::P1);
    for _ in 0..SWEEP_CAP {
        let phi = dpg_evaluate(d, sigma, &rho);
        let mut changed = false;
        for v in m.owned_by(Player::P1) {
            let current = rho.get(v);
            let mut best = current;
            for &u in &m.successors[v] {
                if u == best {
                    continue;
                }
                match phi[u].cmp(&phi[best]) {
                    Ordering::Less => best = u,
                    Ordering::Equal if best != current && u < best => best = u,
                    _ => {}
                }
            }
            if best != current {
                rho.set(v, best);
                changed = true;
            }
        }
        if !changed {
            return (rho, phi);
        }
    }
    unreachable!("discounted best response exceeded {SWEEP_CAP} sweeps; this is a bug");
}

/// Player-0 switches that strictly increase the discounted value, sorted by
/// (node, target).
pub fn dpg_improving_switches(
    m: &MeanPayoffGame,
    sigma: &Strategy,
    phi: &ValueAssignment,
) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for v in m.owned_by(Player::P0) {
        let current = sigma.get(v);
        for &u in &m.successors[v] {
            if u != current && phi[u] > phi[current] {
                out.push((v, u));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Locally optimizing step on discounted values: at every player-0 node pick
/// a successor of maximal value, keeping the current choice when it is among
/// the maxima and otherwise the smallest-id maximal successor. Mirrors the
/// parity-side local policy with valuations replaced by values.
fn local_on_values(m: &MeanPayoffGame, sigma: &Strategy, phi: &ValueAssignment) -> Strategy {
    let mut next = sigma.clone();
    for v in m.owned_by(Player::P0) {
        let current = sigma.get(v);
        let mut best = current;
        for &u in &m.successors[v] {
            if u == best {
                continue;
            }
            match phi[u].cmp(&phi[best]) {
                Ordering::Greater => best = u,
                Ordering::Equal if best != current && u < best => best = u,
                _ => {}
            }
        }
        next.set(v, best);
    }
    next
}

/// The only improvement rule the discounted solver ships.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PuriPolicy {
    /// Switch every node to a most valuable successor.
    LocalOnValues,
}

/// One strategy of the discounted iteration; the final step has no improving
/// switches and empty `chosen_switches`.
#[derive(Clone, Debug)]
pub struct PuriStep {
    pub iteration: u64,
    pub sigma: Strategy,
    pub improving_switches: Vec<(NodeId, NodeId)>,
    pub chosen_switches: Vec<(NodeId, NodeId)>,
}

#[derive(Clone, Debug)]
pub struct PuriReport {
    pub fixpoint_sigma: Strategy,
    pub fixpoint_rho: Strategy,
    pub values: ValueAssignment,
    /// Number of improvement steps; the trace has one more entry than this.
    pub iterations: u64,
    pub trace: Vec<PuriStep>,
}

/// Strategy iteration for the discounted game: best-respond, switch improving
/// edges under the chosen rule, repeat until no switch strictly increases the
/// value anywhere.
pub fn puri_solve(
    d: &DiscountedPayoffGame,
    init: &Strategy,
    policy: PuriPolicy,
) -> Result<PuriReport, PayoffError> {
    let PuriPolicy::LocalOnValues = policy;
    let m = &d.mpg;
    let mut sigma = init.clone();
    let mut trace: Vec<PuriStep> = Vec::new();
    let mut iteration: u64 = 0;
    loop {
        let (rho, phi) = dpg_best_response(d, &sigma);
        let switches = dpg_improving_switches(m, &sigma, &phi);
        let next = if switches.is_empty() {
            None
        } else {
            Some(local_on_values(m, &sigma, &phi))
        };
        let chosen = match &next {
            Some(next) => sigma
                .choices()
                .filter(|&(v, old)| next.get(v) != old)
                .map(|(v, _)| (v, next.get(v)))
                .collect(),
            None => Vec::new(),
        };
        trace.push(PuriStep {
            iteration,
            sigma: sigma.clone(),
            improving_switches: switches,
            chosen_switches: chosen,
        });
        match next {
            None => {
                return Ok(PuriReport {
                    fixpoint_sigma: sigma,
                    fixpoint_rho: rho,
                    values: phi,
                    iterations: iteration,
                    trace,
                });
            }
            Some(next) => {
                if iteration >= IMPROVEMENT_CAP {
                    return Err(PayoffError::IterationCap {
                        cap: IMPROVEMENT_CAP,
                    });
                }
                sigma = next;
                iteration += 1;
            }
        }
    }
}

/// Mean payoff value of every node under a fixed strategy pair: the exact
/// cycle mean of the reached cycle (the finite tail does not affect the
/// long-run average).
pub fn mpg_values_from_optimal(
    m: &MeanPayoffGame,
    sigma: &Strategy,
    rho: &Strategy,
) -> ValueAssignment {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        OnStack,
        Done,
    }
    let n = m.node_count();
    let succ = |v: NodeId| m.joint_successor(sigma, rho, v);
    let mut mark = vec![Mark::White; n];
    let mut vals: Vec<Option<Rational>> = vec![None; n];
    let mut stack: Vec<NodeId> = Vec::new();
    let mut pos = vec![usize::MAX; n];
    for start in 0..n {
        if mark[start] != Mark::White {
            continue;
        }
        let mut v = start;
        while mark[v] == Mark::White {
            mark[v] = Mark::OnStack;
            pos[v] = stack.len();
            stack.push(v);
            v = succ(v);
        }
        if mark[v] == Mark::OnStack {
            let first = pos[v];
            let cycle = &stack[first..];
            let total: BigInt = cycle.iter().map(|&w| m.rewards[w].clone()).sum();
            let mean = Rational::new(total, BigInt::from(cycle.len()));
            for &w in cycle {
                vals[w] = Some(mean.clone());
                mark[w] = Mark::Done;
            }
            stack.truncate(first);
        }
        while let Some(w) = stack.pop() {
            vals[w] = vals[succ(w)].clone();
            mark[w] = Mark::Done;
        }
    }
    vals.into_iter()
        .map(|v| v.expect("all nodes valued"))
        .collect()
}

/// Sign classification of mean payoff values: player 0 wins exactly the nodes
/// of nonnegative value.
pub fn mpg_winning_sets(values: &ValueAssignment) -> (Vec<NodeId>, Vec<NodeId>) {
    let mut w0 = Vec::new();
    let mut w1 = Vec::new();
    for (v, value) in values.iter().enumerate() {
        if value >= &Rational::zero() {
            w0.push(v);
        } else {
            w1.push(v);
        }
    }
    (w0, w1)
}

/// Reward bounds used by the stochastic reduction: minimum `l`, maximum `u`
/// and span `d = max(1, u - l)`.
pub fn reward_bounds(m: &MeanPayoffGame) -> (BigInt, BigInt, BigInt) {
    let l = m.rewards.iter().min().expect("nonempty game").clone();
    let u = m.rewards.iter().max().expect("nonempty game").clone();
    let span = &u - &l;
    let d = if span.is_zero() { BigInt::one() } else { span };
    (l, u, d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsgNodeKind {
    Max,
    Min,
    Avg,
    Sink0,
    Sink1,
}

/// A simple stochastic game with two absorbing sinks. Max and min nodes pick
/// a successor; average nodes move to each successor with the listed exact
/// probability. The construction below leaks probability at least `1 - beta`
/// to the sinks on every second step, so play halts with probability 1 under
/// every strategy pair.
#[derive(Clone, Debug)]
pub struct SimpleStochasticGame {
    pub kinds: Vec<SsgNodeKind>,
    pub successors: Vec<Vec<NodeId>>,
    /// Edge probabilities parallel to `successors`, nonempty exactly at
    /// average nodes.
    pub probs: Vec<Vec<Rational>>,
    pub sink0: NodeId,
    pub sink1: NodeId,
    /// The first `originals` ids are the nodes of the source payoff game.
    pub originals: usize,
}

impl SimpleStochasticGame {
    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn nodes_of_kind(&self, kind: SsgNodeKind) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.kinds.len()).filter(move |&v| self.kinds[v] == kind)
    }
}

/// Zwick-Paterson style reduction of a discounted game to a simple stochastic
/// game. Each original node keeps its id and becomes a max or min node by
/// owner; each edge `(v, u)` becomes an average node (ids follow the
/// originals in (source, successor-position) order) that moves on to `u`
/// with probability `beta`, to sink 1 with probability
/// `(1-beta)(r(v)-l)/d` and to sink 0 with the complement; the two sinks
/// take the last two ids.
pub fn to_ssg(d: &DiscountedPayoffGame) -> SimpleStochasticGame {
    let m = &d.mpg;
    let n = m.node_count();
    let e = m.edge_count();
    let sink0 = n + e;
    let sink1 = n + e + 1;
    let (l, _, span) = reward_bounds(m);
    let one_minus_beta = Rational::one() - &d.beta;

    let mut kinds: Vec<SsgNodeKind> = Vec::with_capacity(n + e + 2);
    let mut successors: Vec<Vec<NodeId>> = vec![Vec::new(); n + e + 2];
    let mut probs: Vec<Vec<Rational>> = vec![Vec::new(); n + e + 2];

    for v in 0..n {
        kinds.push(match m.owners[v] {
            Player::P0 => SsgNodeKind::Max,
            Player::P1 => SsgNodeKind::Min,
        });
    }
    let mut avg = n;
    for v in 0..n {
        let to_sink1 =
            &one_minus_beta * Rational::new(&m.rewards[v] - &l, span.clone());
        let to_sink0 = &one_minus_beta - &to_sink1;
        for &u in &m.successors[v] {
            successors[v].push(avg);
            kinds.push(SsgNodeKind::Avg);
            successors[avg] = vec![u, sink1, sink0];
            probs[avg] = vec![d.beta.clone(), to_sink1.clone(), to_sink0.clone()];
            avg += 1;
        }
    }
    kinds.push(SsgNodeKind::Sink0);
    kinds.push(SsgNodeKind::Sink1);
    SimpleStochasticGame {
        kinds,
        successors,
        probs,
        sink0,
        sink1,
        originals: n,
    }
}

/// Lifts a payoff-game strategy to the stochastic game: at each owned
/// original node, choose the average node of the chosen edge. Player 0 maps
/// to max, player 1 to min.
pub fn lift_strategy(
    s: &SimpleStochasticGame,
    m: &MeanPayoffGame,
    strategy: &Strategy,
) -> Strategy {
    let mut out = Strategy::empty(s.node_count(), strategy.player);
    for v in m.owned_by(strategy.player) {
        let choice = strategy.get(v);
        let k = m.successors[v]
            .iter()
            .position(|&u| u == choice)
            .expect("choice is a successor");
        out.set(v, s.successors[v][k]);
    }
    out
}

/// The strategy choosing the smallest-id successor at every node of the given
/// kind (max or min).
pub fn ssg_min_successor(s: &SimpleStochasticGame, kind: SsgNodeKind) -> Strategy {
    let player = match kind {
        SsgNodeKind::Max => Player::P0,
        SsgNodeKind::Min => Player::P1,
        _ => panic!("only max and min nodes carry strategies"),
    };
    let mut out = Strategy::empty(s.node_count(), player);
    for v in s.nodes_of_kind(kind) {
        out.set(v, *s.successors[v].iter().min().expect("choice node has successors"));
    }
    out
}

/// Exact probability of reaching sink 1 from every node under a fixed
/// strategy pair, via one linear solve of the fixed-policy chain: sinks are
/// constant, choice nodes copy their chosen successor, average nodes mix.
pub fn ssg_evaluate(
    s: &SimpleStochasticGame,
    sigma: &Strategy,
    rho: &Strategy,
) -> Result<ValueAssignment, PayoffError> {
    let n = s.node_count();
    let mut a = vec![vec![Rational::zero(); n]; n];
    let mut b = vec![Rational::zero(); n];
    for v in 0..n {
        a[v][v] = Rational::one();
        match s.kinds[v] {
            SsgNodeKind::Sink0 => {}
            SsgNodeKind::Sink1 => b[v] = Rational::one(),
            SsgNodeKind::Max => {
                let u = sigma.get(v);
                a[v][u] -= Rational::one();
            }
            SsgNodeKind::Min => {
                let u = rho.get(v);
                a[v][u] -= Rational::one();
            }
            SsgNodeKind::Avg => {
                for (k, &u) in s.successors[v].iter().enumerate() {
                    let p = s.probs[v][k].clone();
                    a[v][u] -= p;
                }
            }
        }
    }
    Ok(solve_linear(a, b)?)
}

/// Optimal min counterstrategy against a fixed max strategy, by policy
/// iteration with exact chain solves; same sweep and tie rules as the other
/// best responses. The result satisfies the Bellman system: 1 at sink 1,
/// 0 at sink 0, the chosen successor's value at max nodes, the minimum
/// successor value at min nodes, the probability mix at average nodes.
pub fn ssg_best_response(
    s: &SimpleStochasticGame,
    sigma: &Strategy,
) -> Result<(Strategy, ValueAssignment), PayoffError> {
    debug_assert_eq!(sigma.player, Player::P0);
    let mut rho = ssg_min_successor(s, SsgNodeKind::Min);
    for _ in 0..SWEEP_CAP {
        let phi = ssg_evaluate(s, sigma, &rho)?;
        let mut changed = false;
        for v in s.nodes_of_kind(SsgNodeKind::Min) {
            let current = rho.get(v);
            let mut best = current;
            for &u in &s.successors[v] {
                if u == best {
                    continue;
                }
                match phi[u].cmp(&phi[best]) {
                    Ordering::Less => best = u,
                    Ordering::Equal if best != current && u < best => best = u,
                    _ => {}
                }
            }
            if best != current {
                rho.set(v, best);
                changed = true;
            }
        }
        if !changed {
            return Ok((rho, phi));
        }
    }
    unreachable!("stochastic best response exceeded {SWEEP_CAP} sweeps; this is a bug");
}

#[derive(Clone, Debug)]
pub struct SsgReport {
    pub fixpoint_sigma: Strategy,
    pub fixpoint_rho: Strategy,
    pub values: ValueAssignment,
    pub iterations: u64,
}

/// Strategy iteration for the max player of a simple stochastic game:
/// best-respond, switch max nodes to successors of strictly larger value
/// (keep-current ties, smallest-id maxima), repeat to the fixpoint.
pub fn ssg_solve(s: &SimpleStochasticGame, init: &Strategy) -> Result<SsgReport, PayoffError> {
    let mut sigma = init.clone();
    let mut iterations: u64 = 0;
    loop {
        let (rho, phi) = ssg_best_response(s, &sigma)?;
        let mut next = sigma.clone();
        let mut changed = false;
        for v in s.nodes_of_kind(SsgNodeKind::Max) {
            let current = sigma.get(v);
            let mut best = current;
            for &u in &s.successors[v] {
                if u == best {
                    continue;
                }
                match phi[u].cmp(&phi[best]) {
                    Ordering::Greater => best = u,
                    Ordering::Equal if best != current && u < best => best = u,
                    _ => {}
                }
            }
            if best != current {
                next.set(v, best);
                changed = true;
            }
        }
        if !changed {
            return Ok(SsgReport {
                fixpoint_sigma: sigma,
                fixpoint_rho: rho,
                values: phi,
                iterations,
            });
        }
        if iterations >= IMPROVEMENT_CAP {
            return Err(PayoffError::IterationCap {
                cap: IMPROVEMENT_CAP,
            });
        }
        sigma = next;
        iterations += 1;
    }
}

/// Checks the affine correspondence between discounted and stochastic values
/// on the original nodes: `(1 - beta) * dpg_value(v) = d * ssg_value(v) + l`.
pub fn affine_identity_holds(
    d: &DiscountedPayoffGame,
    dpg_values: &ValueAssignment,
    ssg_values: &ValueAssignment,
) -> bool {
    let (l, _, span) = reward_bounds(&d.mpg);
    let one_minus_beta = Rational::one() - &d.beta;
    let span = Rational::from_integer(span);
    let l = Rational::from_integer(l);
    (0..d.mpg.node_count()).all(|v| {
        &one_minus_beta * &dpg_values[v] == &span * &ssg_values[v] + &l
    })
}

/// Per-step result of the parity/discounted correspondence check.
#[derive(Clone, Debug)]
pub struct CorrespondenceReport {
    pub steps: usize,
    pub violations: Vec<String>,
}

impl CorrespondenceReport {
    pub fn all_pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Runs the parity and discounted sides against each other on every strategy
/// of a recorded improvement trace of a 1-sink game: the parity valuation
/// order on nodes must equal the order of discounted values under the
/// respective best responses (both directions), every play under the
/// discounted counterstrategy must end in the sink's self-loop, and the two
/// improving-switch sets must coincide. Violations are reported, not fatal:
/// games that are not 1-sink are expected to fail some clause.
pub fn check_switch_correspondence(g: &ParityGame, trace: &[Strategy]) -> CorrespondenceReport {
    let d = to_dpg(to_mpg(g));
    let mut violations = Vec::new();

    let sink = g.nodes().find(|&v| g.priority(v) == 1);
    match sink {
        Some(v) if g.has_edge(v, v) => {}
        _ => violations.push("no priority-1 node with a self-loop".to_string()),
    }

    for (step, sigma) in trace.iter().enumerate() {
        let (_, xi) = best_response(g, sigma);
        let (rho, phi) = dpg_best_response(&d, sigma);

        for v in g.nodes() {
            for u in v + 1..g.node_count() {
                let parity_order = compare_valuations(g, xi.get(v), xi.get(u));
                let value_order = phi[v].cmp(&phi[u]);
                if parity_order != value_order {
                    violations.push(format!(
                        "step {step}: nodes {v} and {u}: parity order {parity_order:?}, \
                         value order {value_order:?}"
                    ));
                }
            }
        }

        if let Some(sink) = sink {
            for v in g.nodes() {
                if !play_ends_in_sink(&d.mpg, sigma, &rho, v, sink) {
                    violations.push(format!(
                        "step {step}: play from node {v} does not end in the sink loop"
                    ));
                }
            }
        }

        let parity_switches = improving_switches(g, sigma, &xi);
        let value_switches = dpg_improving_switches(&d.mpg, sigma, &phi);
        if parity_switches != value_switches {
            violations.push(format!(
                "step {step}: improving switches differ: parity {parity_switches:?}, \
                 discounted {value_switches:?}"
            ));
        }
    }
    CorrespondenceReport {
        steps: trace.len(),
        violations,
    }
}

fn play_ends_in_sink(
    m: &MeanPayoffGame,
    sigma: &Strategy,
    rho: &Strategy,
    start: NodeId,
    sink: NodeId,
) -> bool {
    let mut v = start;
    for _ in 0..=m.node_count() {
        if v == sink {
            return m.joint_successor(sigma, rho, sink) == sink;
        }
        v = m.joint_successor(sigma, rho, v);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{gen_locally, gen_random};
    use crate::game::Node;
    use crate::oracle::all_strategies;
    use crate::policies::PolicyKind;
    use crate::solver::{solve, SolveOptions};

    fn node(owner: Player, priority: u32, successors: Vec<NodeId>) -> Node {
        Node {
            owner,
            priority,
            successors,
            label: None,
        }
    }

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn pow_int(base: i64, exp: u32) -> BigInt {
        num::pow(BigInt::from(base), exp as usize)
    }

    #[test]
    fn rewards_are_signed_powers_of_the_node_count() {
        let tiny = ParityGame::new(vec![node(Player::P0, 0, vec![0])]);
        assert_eq!(to_mpg(&tiny).rewards[0], BigInt::one());

        let (g, _, map) = gen_locally(1, false).unwrap();
        let m = to_mpg(&g);
        assert_eq!(g.node_count(), 14);
        let x = map.node(crate::families::Role::X);
        let r = map.node(crate::families::Role::R);
        assert_eq!(m.rewards[x], BigInt::from(-14));
        assert_eq!(g.priority(r), 16);
        assert_eq!(m.rewards[r], pow_int(14, 16));
    }

    #[test]
    fn discount_factor_formula() {
        let m = MeanPayoffGame {
            owners: vec![Player::P0, Player::P1],
            successors: vec![vec![1], vec![0]],
            rewards: vec![BigInt::from(2), BigInt::from(-1)],
        };
        let d = to_dpg(m);
        assert_eq!(d.beta, rat(63, 64));

        let (g, _, _) = gen_locally(1, false).unwrap();
        let d = to_dpg(to_mpg(&g));
        assert!(d.beta > Rational::zero() && d.beta < Rational::one());
        // Highest priority in the instance is 20, so max|r| = 14^20 and the
        // canonical denominator is 4 * 14^3 * 14^20.
        assert_eq!(g.max_priority(), 20);
        assert_eq!(
            d.beta.denom().clone(),
            BigInt::from(4) * pow_int(14, 23)
        );
    }

    #[test]
    fn lasso_values_match_closed_forms_and_bellman() {
        // Single self-loop, reward 1, beta 1/2: geometric series sums to 2.
        let loop_game = DiscountedPayoffGame {
            mpg: MeanPayoffGame {
                owners: vec![Player::P0],
                successors: vec![vec![0]],
                rewards: vec![BigInt::one()],
            },
            beta: rat(1, 2),
        };
        let mut sigma = Strategy::empty(1, Player::P0);
        sigma.set(0, 0);
        let rho = Strategy::empty(1, Player::P1);
        assert_eq!(dpg_evaluate(&loop_game, &sigma, &rho), vec![rat(2, 1)]);

        // Two-node cycle with rewards (0, c): value at the first node is
        // beta*c / (1 - beta^2).
        let c = 7;
        let two_cycle = DiscountedPayoffGame {
            mpg: MeanPayoffGame {
                owners: vec![Player::P0, Player::P0],
                successors: vec![vec![1], vec![0]],
                rewards: vec![BigInt::zero(), BigInt::from(c)],
            },
            beta: rat(1, 3),
        };
        let mut sigma = Strategy::empty(2, Player::P0);
        sigma.set(0, 1);
        sigma.set(1, 0);
        let rho = Strategy::empty(2, Player::P1);
        let vals = dpg_evaluate(&two_cycle, &sigma, &rho);
        let beta = rat(1, 3);
        let expected = &beta * rat(c, 1) / (Rational::one() - &beta * &beta);
        assert_eq!(vals[0], expected);

        // Bellman identity on a generated instance under its initial pair.
        let (g, iota, _) = gen_locally(2, false).unwrap();
        let d = to_dpg(to_mpg(&g));
        let rho = d.mpg.min_successor(Player::P1);
        let vals = dpg_evaluate(&d, &iota, &rho);
        for v in 0..d.mpg.node_count() {
            let next = d.mpg.joint_successor(&iota, &rho, v);
            assert_eq!(vals[v], d.mpg.reward_of(v) + &d.beta * &vals[next]);
        }
    }

    #[test]
    fn closed_form_agrees_with_truncated_summation() {
        // Tiny discount keeps the truncation error well below the gap.
        let d = DiscountedPayoffGame {
            mpg: MeanPayoffGame {
                owners: vec![Player::P0, Player::P0, Player::P0],
                successors: vec![vec![1], vec![2], vec![0]],
                rewards: vec![BigInt::from(1), BigInt::from(2), BigInt::from(3)],
            },
            beta: rat(1, 16),
        };
        let mut sigma = Strategy::empty(3, Player::P0);
        sigma.set(0, 1);
        sigma.set(1, 2);
        sigma.set(2, 0);
        let rho = Strategy::empty(3, Player::P1);
        let vals = dpg_evaluate(&d, &sigma, &rho);

        let steps = 40;
        let mut truncated = Rational::zero();
        let mut power = Rational::one();
        let mut v = 0;
        for _ in 0..steps {
            truncated += &power * d.mpg.reward_of(v);
            power *= &d.beta;
            v = sigma.get(v);
        }
        // |value - truncated| <= max|r| * beta^steps / (1 - beta).
        let bound = rat(3, 1) * &power / (Rational::one() - &d.beta);
        assert!((vals[0].clone() - truncated).abs() <= bound);
    }

    #[test]
    fn best_response_matches_enumeration_on_small_games() {
        for seed in 0..6 {
            let (g, sigma) = gen_random(seed, 5, 3).unwrap();
            let d = to_dpg(to_mpg(&g));
            let (_, phi) = dpg_best_response(&d, &sigma);
            let taus = all_strategies(&g, Player::P1).unwrap();
            for v in 0..g.node_count() {
                let minimum = taus
                    .iter()
                    .map(|tau| dpg_evaluate(&d, &sigma, tau)[v].clone())
                    .min()
                    .unwrap();
                assert_eq!(phi[v], minimum, "node {v} of seed {seed}");
            }
        }
    }

    #[test]
    fn discounted_and_parity_counterstrategies_agree_on_sink_games() {
        let (g, iota, _) = gen_locally(1, false).unwrap();
        let d = to_dpg(to_mpg(&g));
        let report = solve(&g, &iota, &PolicyKind::Local, &SolveOptions::default()).unwrap();
        for step in &report.trace {
            let (tau, _) = best_response(&g, &step.sigma);
            let (rho, _) = dpg_best_response(&d, &step.sigma);
            assert_eq!(tau, rho, "iteration {}", step.iteration);
        }
    }

    #[test]
    fn puri_stops_immediately_on_optimal_strategies() {
        // One choice node whose better target is obvious: after one switch
        // the strategy is optimal, starting there takes zero iterations.
        let d = DiscountedPayoffGame {
            mpg: MeanPayoffGame {
                owners: vec![Player::P0, Player::P0, Player::P0],
                successors: vec![vec![1, 2], vec![1], vec![2]],
                rewards: vec![BigInt::zero(), BigInt::from(-5), BigInt::from(5)],
            },
            beta: rat(1, 2),
        };
        let mut best = Strategy::empty(3, Player::P0);
        best.set(0, 2);
        best.set(1, 1);
        best.set(2, 2);
        let report = puri_solve(&d, &best, PuriPolicy::LocalOnValues).unwrap();
        assert_eq!(report.iterations, 0);
        assert_eq!(report.trace.len(), 1);
        assert!(report.trace[0].improving_switches.is_empty());

        let mut worst = best.clone();
        worst.set(0, 1);
        let report = puri_solve(&d, &worst, PuriPolicy::LocalOnValues).unwrap();
        assert_eq!(report.iterations, 1);
        assert_eq!(report.fixpoint_sigma.get(0), 2);
    }

    #[test]
    fn puri_mirrors_the_parity_iteration_on_an_induced_instance() {
        let (g, iota, _) = gen_locally(1, false).unwrap();
        let d = to_dpg(to_mpg(&g));
        let parity = solve(&g, &iota, &PolicyKind::Local, &SolveOptions::default()).unwrap();
        let puri = puri_solve(&d, &iota, PuriPolicy::LocalOnValues).unwrap();
        assert_eq!(puri.iterations, parity.iterations);
        assert_eq!(puri.trace.len(), parity.trace.len());
        for (p, q) in parity.trace.iter().zip(&puri.trace) {
            assert_eq!(p.sigma, q.sigma, "iteration {}", p.iteration);
            assert_eq!(
                p.improving_switches, q.improving_switches,
                "iteration {}",
                p.iteration
            );
        }
    }

    #[test]
    fn cycle_means_classify_winners() {
        let single = MeanPayoffGame {
            owners: vec![Player::P1],
            successors: vec![vec![0]],
            rewards: vec![BigInt::from(-14)],
        };
        let sigma = Strategy::empty(1, Player::P0);
        let mut rho = Strategy::empty(1, Player::P1);
        rho.set(0, 0);
        let vals = mpg_values_from_optimal(&single, &sigma, &rho);
        assert_eq!(vals[0], rat(-14, 1));
        let (w0, w1) = mpg_winning_sets(&vals);
        assert!(w0.is_empty());
        assert_eq!(w1, vec![0]);

        // The smallest lower-bound instance is completely won by player 1,
        // and the discounted detour agrees.
        let (g, iota, _) = gen_locally(1, false).unwrap();
        let d = to_dpg(to_mpg(&g));
        let puri = puri_solve(&d, &iota, PuriPolicy::LocalOnValues).unwrap();
        let means = mpg_values_from_optimal(&d.mpg, &puri.fixpoint_sigma, &puri.fixpoint_rho);
        assert!(means.iter().all(|m| m < &Rational::zero()));
        let parity = solve(&g, &iota, &PolicyKind::Local, &SolveOptions::default()).unwrap();
        assert_eq!(parity.w1, g.nodes().collect::<Vec<_>>());
    }

    #[test]
    fn stochastic_reduction_structure_and_probabilities() {
        let (g, _, _) = gen_locally(1, false).unwrap();
        let d = to_dpg(to_mpg(&g));
        let s = to_ssg(&d);
        assert_eq!(s.node_count(), g.node_count() + g.edge_count() + 2);
        assert_eq!(s.sink0, g.node_count() + g.edge_count());
        assert_eq!(s.sink1, s.sink0 + 1);

        let (l, u, _) = reward_bounds(&d.mpg);
        let mut low_seen = false;
        let mut high_seen = false;
        for a in s.nodes_of_kind(SsgNodeKind::Avg) {
            let total: Rational = s.probs[a].iter().cloned().sum();
            assert_eq!(total, Rational::one());
            assert_eq!(s.probs[a][0], d.beta);
        }
        for v in 0..s.originals {
            let first_avg = s.successors[v][0];
            if d.mpg.rewards[v] == l {
                assert_eq!(s.probs[first_avg][1], Rational::zero());
                low_seen = true;
            }
            if d.mpg.rewards[v] == u {
                assert_eq!(s.probs[first_avg][2], Rational::zero());
                high_seen = true;
            }
        }
        assert!(low_seen && high_seen);
    }

    #[test]
    fn absorption_probabilities_solve_the_chain() {
        // Hand-built: one avg node that moves straight to sink 1.
        let s = SimpleStochasticGame {
            kinds: vec![SsgNodeKind::Avg, SsgNodeKind::Sink0, SsgNodeKind::Sink1],
            successors: vec![vec![2], vec![], vec![]],
            probs: vec![vec![Rational::one()], vec![], vec![]],
            sink0: 1,
            sink1: 2,
            originals: 0,
        };
        let sigma = Strategy::empty(3, Player::P0);
        let rho = Strategy::empty(3, Player::P1);
        let vals = ssg_evaluate(&s, &sigma, &rho).unwrap();
        assert_eq!(vals, vec![Rational::one(), Rational::zero(), Rational::one()]);

        // On a reduced instance the fixed-pair values satisfy the average
        // node mixing equation exactly.
        let (g, iota, _) = gen_locally(1, false).unwrap();
        let d = to_dpg(to_mpg(&g));
        let s = to_ssg(&d);
        let rho = d.mpg.min_successor(Player::P1);
        let sigma_l = lift_strategy(&s, &d.mpg, &iota);
        let rho_l = lift_strategy(&s, &d.mpg, &rho);
        let vals = ssg_evaluate(&s, &sigma_l, &rho_l).unwrap();
        for a in s.nodes_of_kind(SsgNodeKind::Avg) {
            let mixed: Rational = s.successors[a]
                .iter()
                .zip(&s.probs[a])
                .map(|(&u, p)| p * &vals[u])
                .sum();
            assert_eq!(vals[a], mixed);
        }

        // Affine correspondence against the discounted values of the same
        // pair.
        let dpg_vals = dpg_evaluate(&d, &iota, &rho);
        assert!(affine_identity_holds(&d, &dpg_vals, &vals));
    }

    #[test]
    fn stochastic_best_response_matches_enumeration() {
        for seed in [1, 4] {
            let (g, init) = gen_random(seed, 2, 2).unwrap();
            let d = to_dpg(to_mpg(&g));
            let s = to_ssg(&d);
            let sigma = lift_strategy(&s, &d.mpg, &init);
            let (_, phi) = ssg_best_response(&s, &sigma).unwrap();

            // Odometer over the min nodes' successor lists.
            let mins: Vec<NodeId> = s.nodes_of_kind(SsgNodeKind::Min).collect();
            let mut counters = vec![0usize; mins.len()];
            let mut assignments = Vec::new();
            loop {
                let mut rho = Strategy::empty(s.node_count(), Player::P1);
                for (i, &v) in mins.iter().enumerate() {
                    rho.set(v, s.successors[v][counters[i]]);
                }
                assignments.push(ssg_evaluate(&s, &sigma, &rho).unwrap());
                let mut i = 0;
                loop {
                    if i == mins.len() {
                        break;
                    }
                    counters[i] += 1;
                    if counters[i] < s.successors[mins[i]].len() {
                        break;
                    }
                    counters[i] = 0;
                    i += 1;
                }
                if i == mins.len() {
                    break;
                }
            }
            for v in 0..s.node_count() {
                let minimum = assignments.iter().map(|a| a[v].clone()).min().unwrap();
                assert_eq!(phi[v], minimum, "node {v} of seed {seed}");
            }
        }
    }

    #[test]
    fn stochastic_fixpoint_corresponds_affinely_to_the_discounted_one() {
        let (g, iota, _) = gen_locally(1, false).unwrap();
        let d = to_dpg(to_mpg(&g));
        let s = to_ssg(&d);
        let puri = puri_solve(&d, &iota, PuriPolicy::LocalOnValues).unwrap();
        let ssg = ssg_solve(&s, &lift_strategy(&s, &d.mpg, &iota)).unwrap();
        assert!(affine_identity_holds(&d, &puri.values, &ssg.values));
    }

    #[test]
    fn correspondence_holds_on_sink_games_and_fails_on_a_counterexample() {
        let (g, iota, _) = gen_locally(1, false).unwrap();
        let report = solve(&g, &iota, &PolicyKind::Local, &SolveOptions::default()).unwrap();
        let sigmas: Vec<Strategy> = report.trace.iter().map(|s| s.sigma.clone()).collect();
        let check = check_switch_correspondence(&g, &sigmas);
        assert_eq!(check.steps, sigmas.len());
        assert!(check.all_pass(), "violations: {:?}", check.violations);

        // Two tails of different low priority into the same even self-loop:
        // equal parity valuations but distinct discounted values.
        let g = ParityGame::new(vec![
            node(Player::P0, 1, vec![2]),
            node(Player::P0, 3, vec![2]),
            node(Player::P0, 6, vec![2]),
        ]);
        let mut sigma = Strategy::empty(3, Player::P0);
        sigma.set(0, 2);
        sigma.set(1, 2);
        sigma.set(2, 2);
        let check = check_switch_correspondence(&g, &[sigma]);
        assert!(!check.all_pass());
        assert!(check
            .violations
            .iter()
            .any(|v| v.contains("parity order Equal")));
    }
}
