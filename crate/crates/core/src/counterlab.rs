//! Decoders for the binary counter that the lower-bound families embed in
//! player-0 strategies, and a trace auditor that verifies the counter really
//! steps through its values one by one.
//!
//! Each gate of a family instance stores one bit: a closed gate cycle is a
//! set bit, an open cycle an unset bit. A full increment takes several
//! improvement steps, grouped into four phases: *waiting* (the lane absorbs
//! switches while open cycles idle), *set* (the lowest open cycle closes),
//! *access* (the root `s` routes into the freshly closed gate), and *reset*
//! (lower bits reopen and the lane restarts). The auditor classifies every
//! strategy of a trace prefix into exactly one phase and checks the phase
//! order as well as the increment-by-one behaviour of the decoded values.

use thiserror::Error;

use crate::families::{Family, Role, RoleMap};
use crate::game::{NodeId, ParityGame, Strategy};

/// Counter state over `n` bits; bit 1 is the least significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitState {
    bits: Vec<bool>,
}

impl BitState {
    pub fn zeros(n: u32) -> BitState {
        BitState {
            bits: vec![false; n as usize],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> BitState {
        BitState { bits }
    }

    pub fn n(&self) -> u32 {
        self.bits.len() as u32
    }

    /// Bit `i` for `1 <= i <= n`.
    pub fn get(&self, i: u32) -> bool {
        self.bits[i as usize - 1]
    }

    pub fn with(&self, i: u32, value: bool) -> BitState {
        let mut out = self.clone();
        out.bits[i as usize - 1] = value;
        out
    }

    /// Least unset bit, or `n + 1` if all bits are set.
    pub fn mu(&self) -> u32 {
        self.bits
            .iter()
            .position(|&b| !b)
            .map_or(self.n() + 1, |p| p as u32 + 1)
    }

    /// Least set bit, or `n + 1` if no bit is set.
    pub fn nu(&self) -> u32 {
        self.bits
            .iter()
            .position(|&b| b)
            .map_or(self.n() + 1, |p| p as u32 + 1)
    }

    pub fn value(&self) -> u64 {
        self.bits
            .iter()
            .rev()
            .fold(0, |acc, &b| (acc << 1) | u64::from(b))
    }

    /// Value of the low `k` bits only.
    pub fn low_value(&self, k: u32) -> u64 {
        let k = (k as usize).min(self.bits.len());
        self.bits[..k]
            .iter()
            .rev()
            .fold(0, |acc, &b| (acc << 1) | u64::from(b))
    }

    /// The incremented state, or `None` when all bits are set.
    pub fn incremented(&self) -> Option<BitState> {
        let mu = self.mu();
        if mu > self.n() {
            return None;
        }
        let mut out = self.clone();
        for bit in &mut out.bits[..mu as usize - 1] {
            *bit = false;
        }
        out.bits[mu as usize - 1] = true;
        Some(out)
    }

    pub fn all_set(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }
}

impl std::fmt::Display for BitState {
    /// Most significant bit first.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in self.bits.iter().rev() {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaneRoot {
    S,
    R,
}

/// Lane configuration: the root every direct exit uses, and the first index
/// whose node exits directly instead of moving down the lane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LaneState {
    pub root: LaneRoot,
    pub index: u32,
}

/// Decodes the deceleration lane, or `None` when the lane edges do not form
/// the well-behaved pattern (a move-down prefix followed by uniform exits).
pub fn deceleration_state(map: &RoleMap, sigma: &Strategy) -> Option<LaneState> {
    let m = map.lane_length();
    let down_target = |i: u32| {
        if i == 1 {
            map.node(Role::C)
        } else {
            map.node(Role::T(i - 1))
        }
    };
    let mut index = m + 1;
    for i in 1..=m {
        if sigma.get(map.node(Role::T(i))) != down_target(i) {
            index = i;
            break;
        }
    }
    let root = if index <= m {
        let target = sigma.get(map.node(Role::T(index)));
        let root = match map.role(target) {
            Role::S => LaneRoot::S,
            Role::R => LaneRoot::R,
            _ => return None,
        };
        for i in index + 1..=m {
            if sigma.get(map.node(Role::T(i))) != target {
                return None;
            }
        }
        root
    } else {
        // Fully assembled lane: every play exits through the lane base.
        match map.family {
            Family::Loc => match map.role(sigma.get(map.node(Role::C))) {
                Role::S => LaneRoot::S,
                Role::R => LaneRoot::R,
                _ => return None,
            },
            // The base is opponent-controlled and hardwired to `r`.
            Family::Glo => LaneRoot::R,
        }
    };
    if map.family == Family::Loc {
        // The lane base must exit through the same root.
        let expect = match root {
            LaneRoot::S => Role::S,
            LaneRoot::R => Role::R,
        };
        if map.role(sigma.get(map.node(Role::C))) != expect {
            return None;
        }
    }
    Some(LaneState { root, index })
}

/// Gate state: how many cycle edges point inward, and whether the access
/// nodes route through the gate interior.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GateState {
    pub cycle: u8,
    pub access: u8,
}

pub fn gate_states(map: &RoleMap, sigma: &Strategy) -> Vec<GateState> {
    (1..=map.n)
        .map(|i| match map.family {
            Family::Loc => GateState {
                cycle: u8::from(sigma.get(map.node(Role::D(i))) == map.node(Role::E(i))),
                access: u8::from(sigma.get(map.node(Role::G(i))) == map.node(Role::F(i))),
            },
            Family::Glo => {
                let inward = [
                    (Role::D1(i), Role::D2(i)),
                    (Role::D2(i), Role::D3(i)),
                    (Role::D3(i), Role::E(i)),
                ];
                let cycle = inward
                    .iter()
                    .filter(|&&(from, to)| sigma.get(map.node(from)) == map.node(to))
                    .count() as u8;
                let access = if sigma.get(map.node(Role::G(i))) == map.node(Role::Y(i)) {
                    2
                } else if sigma.get(map.node(Role::Y(i))) == map.node(Role::K(i)) {
                    0
                } else {
                    1
                };
                GateState { cycle, access }
            }
        })
        .collect()
}

fn closed_cycle_count(family: Family) -> u8 {
    match family {
        Family::Loc => 1,
        Family::Glo => 3,
    }
}

fn full_access_level(family: Family) -> u8 {
    match family {
        Family::Loc => 1,
        Family::Glo => 2,
    }
}

/// Bit `i` is set iff gate `i`'s cycle is fully closed.
pub fn cycle_bits(map: &RoleMap, sigma: &Strategy) -> BitState {
    let closed = closed_cycle_count(map.family);
    BitState::from_bits(
        gate_states(map, sigma)
            .iter()
            .map(|st| st.cycle == closed)
            .collect(),
    )
}

/// Bit `i` is set iff gate `i` is fully accessed.
pub fn access_bits(map: &RoleMap, sigma: &Strategy) -> BitState {
    let accessed = full_access_level(map.family);
    BitState::from_bits(
        gate_states(map, sigma)
            .iter()
            .map(|st| st.access == accessed)
            .collect(),
    )
}

/// True when every gate is in one of the two rest states that represent a
/// bit: fully closed and accessed, or minimally closed and skipped.
pub fn gates_settled(map: &RoleMap, sigma: &Strategy) -> bool {
    let set = GateState {
        cycle: closed_cycle_count(map.family),
        access: full_access_level(map.family),
    };
    let unset = match map.family {
        Family::Loc => GateState { cycle: 0, access: 0 },
        Family::Glo => GateState { cycle: 1, access: 0 },
    };
    gate_states(map, sigma)
        .iter()
        .all(|st| *st == set || *st == unset)
}

/// Gate indices selected by the roots and the selector nodes, with `n + 1`
/// standing for the central sink.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootTargets {
    /// Gate whose entry node `f_i` the root `s` selects.
    pub s: u32,
    /// Gate whose access node `g_i` the root `r` selects.
    pub r: u32,
    /// Gate each selector `k_i` forwards to.
    pub k: Vec<u32>,
}

fn entry_index(map: &RoleMap, v: NodeId) -> Option<u32> {
    match map.role(v) {
        Role::F(i) => Some(i),
        Role::X => Some(map.n + 1),
        _ => None,
    }
}

fn access_index(map: &RoleMap, v: NodeId) -> Option<u32> {
    match map.role(v) {
        Role::G(i) => Some(i),
        Role::X => Some(map.n + 1),
        _ => None,
    }
}

pub fn root_targets(map: &RoleMap, sigma: &Strategy) -> Option<RootTargets> {
    let s = entry_index(map, sigma.get(map.node(Role::S)))?;
    let r = access_index(map, sigma.get(map.node(Role::R)))?;
    let k = (1..=map.n)
        .map(|i| access_index(map, sigma.get(map.node(Role::K(i)))))
        .collect::<Option<Vec<u32>>>()?;
    Some(RootTargets { s, r, k })
}

/// Counter phase of a strategy. One increment walks
/// waiting -> set -> access -> reset and back to waiting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Waiting,
    Set,
    Access,
    Reset,
    Unclassified,
}

impl Phase {
    /// Conventional numbering 1 to 4.
    pub fn number(self) -> Option<u8> {
        match self {
            Phase::Waiting => Some(1),
            Phase::Set => Some(2),
            Phase::Access => Some(3),
            Phase::Reset => Some(4),
            Phase::Unclassified => None,
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.number() {
            Some(k) => write!(f, "{k}"),
            None => write!(f, "unclassified"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PhaseReport {
    pub phase: Phase,
    /// Counter state the phase refers to; for `Unclassified` the raw cycle
    /// bits.
    pub b: BitState,
    pub lane: Option<LaneState>,
    pub targets: Option<RootTargets>,
}

/// Selector target expected for each gate: the next higher set bit of `b`,
/// else `n + 1`.
fn expected_selectors(b: &BitState) -> Vec<u32> {
    let n = b.n();
    (1..=n)
        .map(|i| (i + 1..=n).find(|&j| b.get(j)).unwrap_or(n + 1))
        .collect()
}

fn open_gates(b: &BitState) -> impl Iterator<Item = u32> + '_ {
    (1..=b.n()).filter(|&j| !b.get(j))
}

/// Classifies a strategy on a local-family game into its counter phase.
/// The four definitions are pairwise exclusive (they disagree on the lane
/// root or on the cycle/access bit agreement), so the first match is the
/// unique match. Global-family strategies report `Unclassified`; phases are
/// only defined for the local family.
pub fn classify_phase(map: &RoleMap, sigma: &Strategy) -> PhaseReport {
    let b_sigma = cycle_bits(map, sigma);
    let lane = deceleration_state(map, sigma);
    let targets = root_targets(map, sigma);
    let unclassified = |b: BitState| PhaseReport {
        phase: Phase::Unclassified,
        b,
        lane,
        targets: targets.clone(),
    };
    if map.family != Family::Loc {
        return unclassified(b_sigma);
    }
    let (Some(lane_state), Some(tg)) = (lane, targets.clone()) else {
        return unclassified(b_sigma);
    };
    let a_sigma = access_bits(map, sigma);
    let found = match_waiting(map, sigma, &b_sigma, &a_sigma, lane_state, &tg)
        .map(|b| (Phase::Waiting, b))
        .or_else(|| {
            match_set(map, sigma, &b_sigma, &a_sigma, lane_state, &tg).map(|b| (Phase::Set, b))
        })
        .or_else(|| {
            match_access(map, sigma, &b_sigma, &a_sigma, lane_state, &tg)
                .map(|b| (Phase::Access, b))
        })
        .or_else(|| {
            match_reset(map, sigma, &b_sigma, &a_sigma, lane_state, &tg).map(|b| (Phase::Reset, b))
        });
    match found {
        Some((phase, b)) => PhaseReport {
            phase,
            b,
            lane,
            targets,
        },
        None => unclassified(b_sigma),
    }
}

/// Phase 1: cycle and access bits agree with `b`, lane rooted in `r`, both
/// roots on the least set bit, selectors on the next set bit, lane index at
/// most `2*mu(b) + 2`, and no open cycle sits on the best-valued lane input.
fn match_waiting(
    map: &RoleMap,
    sigma: &Strategy,
    b_sigma: &BitState,
    a_sigma: &BitState,
    lane: LaneState,
    tg: &RootTargets,
) -> Option<BitState> {
    let b = b_sigma.clone();
    if *a_sigma != b || lane.root != LaneRoot::R {
        return None;
    }
    let nu = b.nu();
    if tg.s != nu || tg.r != nu || tg.k != expected_selectors(&b) {
        return None;
    }
    if lane.index > 2 * b.mu() + 2 {
        return None;
    }
    if lane.index >= 2 {
        let best = map.node(Role::A(lane.index - 1));
        if open_gates(&b).any(|j| sigma.get(map.node(Role::D(j))) == best) {
            return None;
        }
    }
    Some(b)
}

/// Phase 2: as phase 1 but the least unset bit's cycle has just closed (the
/// access bits still show the old state) and the lane may run one step
/// further.
fn match_set(
    map: &RoleMap,
    sigma: &Strategy,
    b_sigma: &BitState,
    a_sigma: &BitState,
    lane: LaneState,
    tg: &RootTargets,
) -> Option<BitState> {
    let b = a_sigma.clone();
    let mu = b.mu();
    if mu > b.n() || *b_sigma != b.with(mu, true) || lane.root != LaneRoot::R {
        return None;
    }
    let nu = b.nu();
    if tg.s != nu || tg.r != nu || tg.k != expected_selectors(&b) {
        return None;
    }
    if lane.index > 2 * mu + 3 {
        return None;
    }
    if lane.index >= 2 {
        let best = map.node(Role::A(lane.index - 1));
        if open_gates(&b)
            .filter(|&j| j > mu)
            .any(|j| sigma.get(map.node(Role::D(j))) == best)
        {
            return None;
        }
    }
    Some(b)
}

/// Phase 3: the new bit is closed and accessed, root `s` has moved onto it
/// while `r` still selects the former least set bit, and no higher open
/// cycle exits through `s`.
fn match_access(
    map: &RoleMap,
    sigma: &Strategy,
    b_sigma: &BitState,
    a_sigma: &BitState,
    lane: LaneState,
    tg: &RootTargets,
) -> Option<BitState> {
    if a_sigma != b_sigma || lane.root != LaneRoot::R {
        return None;
    }
    let mu = tg.s;
    if mu > map.n || !b_sigma.get(mu) {
        return None;
    }
    let b = b_sigma.with(mu, false);
    if b.mu() != mu || tg.r != b.nu() || tg.k != expected_selectors(&b) {
        return None;
    }
    let s_node = map.node(Role::S);
    if open_gates(&b)
        .filter(|&j| j > mu)
        .any(|j| sigma.get(map.node(Role::D(j))) == s_node)
    {
        return None;
    }
    Some(b)
}

/// Phase 4: the increment is complete on the cycle bits, the access bits
/// still carry the pre-reset state, both roots select the new bit, the lane
/// has fully reset to `s`, and every open cycle exits through `s`.
fn match_reset(
    map: &RoleMap,
    sigma: &Strategy,
    b_sigma: &BitState,
    a_sigma: &BitState,
    lane: LaneState,
    tg: &RootTargets,
) -> Option<BitState> {
    let mu = b_sigma.nu();
    if mu > b_sigma.n() {
        return None;
    }
    // Invert the increment: bits below the carry point were all set before.
    let mut b = b_sigma.with(mu, false);
    for j in 1..mu {
        b = b.with(j, true);
    }
    if *a_sigma != b.with(mu, true) {
        return None;
    }
    if lane.root != LaneRoot::S || lane.index != 1 {
        return None;
    }
    if tg.s != mu || tg.r != mu || tg.k != expected_selectors(b_sigma) {
        return None;
    }
    let s_node = map.node(Role::S);
    if open_gates(b_sigma).any(|j| sigma.get(map.node(Role::D(j))) != s_node) {
        return None;
    }
    Some(b)
}

/// Bits available for counting: the top two bits stay clear over an audited
/// run, so `n - 2` bits carry the observed values.
pub fn counting_bits(n: u32) -> u32 {
    n.saturating_sub(2)
}

/// Number of distinct counter values a family instance must traverse.
pub fn required_values(n: u32) -> u64 {
    1 << counting_bits(n)
}

#[derive(Clone, Debug)]
pub struct CounterReport {
    /// Audited prefix length; the counter leaves the counting range after.
    pub steps_checked: usize,
    /// Distinct counter values observed over the counting bits, in order.
    pub values: Vec<u64>,
    /// Phase of every audited step (local family only).
    pub phases: Vec<Phase>,
    /// Audited steps with all gates in a rest state (global family only).
    pub settled_steps: usize,
}

#[derive(Debug, Error)]
pub enum CounterError {
    #[error("trace contains no strategies")]
    EmptyTrace,
    #[error("step {step}: invalid strategy: {detail}")]
    BadStrategy { step: usize, detail: String },
    #[error("step {step}: strategy does not match any counter phase")]
    Unclassified { step: usize },
    #[error("step {step}: illegal transition from phase {from} to phase {to}")]
    BadTransition { step: usize, from: Phase, to: Phase },
    #[error("step {step}: lane index moved from {prev} to {next} within the waiting phase")]
    LaneSkip { step: usize, prev: u32, next: u32 },
    #[error("step {step}: counter moved from {prev} to {next} instead of incrementing")]
    NonIncrement { step: usize, prev: u64, next: u64 },
    #[error("counter attained {found} distinct values, needs at least {need}")]
    TooFewValues { found: usize, need: u64 },
}

/// Audits a solve trace (the sequence of encountered strategies) against the
/// counter discipline of the family recorded in `map`.
///
/// Local family: every strategy of the audited prefix must classify into a
/// phase, consecutive phases must follow one of the five legal transitions,
/// and the waiting-phase counter values must increment by exactly one,
/// attaining at least `2^(n-2)` distinct values. Global family: at every
/// step where all gates rest, the decoded value must increment likewise.
pub fn check_counter_trace(
    g: &ParityGame,
    map: &RoleMap,
    strategies: &[Strategy],
) -> Result<CounterReport, CounterError> {
    if strategies.is_empty() {
        return Err(CounterError::EmptyTrace);
    }
    for (step, sigma) in strategies.iter().enumerate() {
        sigma.validate(g).map_err(|e| CounterError::BadStrategy {
            step,
            detail: e.to_string(),
        })?;
    }
    match map.family {
        Family::Loc => check_local(map, strategies),
        Family::Glo => check_global(map, strategies),
    }
}

fn leaves_counting_range(b: &BitState, k: u32) -> bool {
    b.value() != b.low_value(k)
}

fn push_incrementing(
    values: &mut Vec<u64>,
    v: u64,
    step: usize,
) -> Result<(), CounterError> {
    match values.last() {
        Some(&prev) if prev == v => Ok(()),
        Some(&prev) if v != prev + 1 => Err(CounterError::NonIncrement {
            step,
            prev,
            next: v,
        }),
        _ => {
            values.push(v);
            Ok(())
        }
    }
}

fn check_local(map: &RoleMap, strategies: &[Strategy]) -> Result<CounterReport, CounterError> {
    let k = counting_bits(map.n);
    let stop = strategies
        .iter()
        .position(|s| leaves_counting_range(&cycle_bits(map, s), k))
        .unwrap_or(strategies.len());
    let mut reports = Vec::with_capacity(stop);
    for (step, sigma) in strategies[..stop].iter().enumerate() {
        let rep = classify_phase(map, sigma);
        if rep.phase == Phase::Unclassified {
            return Err(CounterError::Unclassified { step });
        }
        reports.push(rep);
    }
    for (prev_step, pair) in reports.windows(2).enumerate() {
        let (prev, next) = (&pair[0], &pair[1]);
        let step = prev_step + 1;
        let ok = match (prev.phase, next.phase) {
            (Phase::Waiting, Phase::Waiting) => {
                if next.b != prev.b {
                    false
                } else {
                    // Both carry a lane state: classification requires it.
                    let pi = prev.lane.expect("classified phase has lane").index;
                    let ni = next.lane.expect("classified phase has lane").index;
                    if ni != pi + 1 {
                        return Err(CounterError::LaneSkip {
                            step,
                            prev: pi,
                            next: ni,
                        });
                    }
                    true
                }
            }
            (Phase::Waiting, Phase::Set)
            | (Phase::Set, Phase::Access)
            | (Phase::Access, Phase::Reset) => next.b == prev.b,
            (Phase::Reset, Phase::Waiting) => {
                prev.b.incremented().as_ref() == Some(&next.b)
                    && next.lane.expect("classified phase has lane").index == 1
            }
            _ => false,
        };
        if !ok {
            return Err(CounterError::BadTransition {
                step,
                from: prev.phase,
                to: next.phase,
            });
        }
    }
    let mut values = Vec::new();
    for (step, rep) in reports.iter().enumerate() {
        if rep.phase == Phase::Waiting {
            push_incrementing(&mut values, rep.b.low_value(k), step)?;
        }
    }
    let need = required_values(map.n);
    if (values.len() as u64) < need {
        return Err(CounterError::TooFewValues {
            found: values.len(),
            need,
        });
    }
    Ok(CounterReport {
        steps_checked: stop,
        values,
        phases: reports.iter().map(|r| r.phase).collect(),
        settled_steps: 0,
    })
}

fn check_global(map: &RoleMap, strategies: &[Strategy]) -> Result<CounterReport, CounterError> {
    let k = counting_bits(map.n);
    let stop = strategies
        .iter()
        .position(|s| {
            gates_settled(map, s) && leaves_counting_range(&cycle_bits(map, s), k)
        })
        .unwrap_or(strategies.len());
    let mut values = Vec::new();
    let mut settled_steps = 0;
    for (step, sigma) in strategies[..stop].iter().enumerate() {
        if !gates_settled(map, sigma) {
            continue;
        }
        settled_steps += 1;
        push_incrementing(&mut values, cycle_bits(map, sigma).low_value(k), step)?;
    }
    let need = required_values(map.n);
    if (values.len() as u64) < need {
        return Err(CounterError::TooFewValues {
            found: values.len(),
            need,
        });
    }
    Ok(CounterReport {
        steps_checked: stop,
        values,
        phases: Vec::new(),
        settled_steps,
    })
}
