//! Generators for the lower-bound game families and seeded random games.
//!
//! Both families compose a simple-cycle gate per counter bit with a shared
//! deceleration lane and two root distribution nodes. The local family `G_n`
//! uses one cycle node per gate; the global family `H_n` uses a three-node
//! stubborn cycle and a two-level access path per gate, which defeats the
//! globally optimizing policy as well. Node ids, priorities and successor
//! lists are fully deterministic; successor lists are sorted ascending.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::game::{Node, NodeId, ParityGame, Player, Strategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// Lower bound family for the locally optimizing policy.
    Loc,
    /// Lower bound family for the globally optimizing policy.
    Glo,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Loc => write!(f, "loc"),
            Family::Glo => write!(f, "glo"),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Family, String> {
        match s {
            "loc" => Ok(Family::Loc),
            "glo" => Ok(Family::Glo),
            other => Err(format!("unknown family '{other}' (expected loc or glo)")),
        }
    }
}

/// Structural role of a node within a generated family instance. Indices are
/// 1-based as in the construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    /// Central sink.
    X,
    /// Root feeding the gate entries through `f`.
    S,
    /// Root feeding the gate access nodes `g`.
    R,
    /// Lane head target.
    C,
    /// Deceleration lane node `t_i`.
    T(u32),
    /// Lane input node `a_i`.
    A(u32),
    /// Gate cycle node (local family).
    D(u32),
    /// Stubborn cycle nodes (global family).
    D1(u32),
    D2(u32),
    D3(u32),
    /// Gate cycle opponent node.
    E(u32),
    /// Second-level access node (global family).
    Y(u32),
    /// Gate access node.
    G(u32),
    /// Gate exit selector.
    K(u32),
    /// Gate entry from root `s`.
    F(u32),
    /// Gate top node.
    H(u32),
}

impl Role {
    pub fn label(self) -> String {
        match self {
            Role::X => "x".into(),
            Role::S => "s".into(),
            Role::R => "r".into(),
            Role::C => "c".into(),
            Role::T(i) => format!("t{i}"),
            Role::A(i) => format!("a{i}"),
            Role::D(i) => format!("d{i}"),
            Role::D1(i) => format!("d1_{i}"),
            Role::D2(i) => format!("d2_{i}"),
            Role::D3(i) => format!("d3_{i}"),
            Role::E(i) => format!("e{i}"),
            Role::Y(i) => format!("y{i}"),
            Role::G(i) => format!("g{i}"),
            Role::K(i) => format!("k{i}"),
            Role::F(i) => format!("f{i}"),
            Role::H(i) => format!("h{i}"),
        }
    }
}

/// Bidirectional mapping between node ids and roles for one family instance.
#[derive(Clone, Debug)]
pub struct RoleMap {
    pub family: Family,
    pub n: u32,
    roles: Vec<Role>,
    index: HashMap<Role, NodeId>,
}

impl RoleMap {
    fn new(family: Family, n: u32, roles: Vec<Role>) -> RoleMap {
        let index = roles.iter().enumerate().map(|(v, &r)| (r, v)).collect();
        RoleMap {
            family,
            n,
            roles,
            index,
        }
    }

    pub fn node(&self, role: Role) -> NodeId {
        self.index[&role]
    }

    pub fn role(&self, v: NodeId) -> Role {
        self.roles[v]
    }

    pub fn try_node(&self, role: Role) -> Option<NodeId> {
        self.index.get(&role).copied()
    }

    /// Number of `t_i`/`a_i` pairs in this instance's deceleration lane.
    pub fn lane_length(&self) -> u32 {
        match self.family {
            Family::Loc => 2 * self.n,
            Family::Glo => 6 * self.n - 2,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FamilyError {
    #[error("family size must be at least 1 (got {0})")]
    BadSize(u32),
    #[error("random games need at least one node")]
    EmptyRandomGame,
    #[error("random games need max_outdegree of at least 1")]
    ZeroOutdegree,
}

struct Builder {
    roles: Vec<Role>,
    owners: Vec<Player>,
    priorities: Vec<u32>,
}

impl Builder {
    fn new() -> Builder {
        Builder {
            roles: Vec::new(),
            owners: Vec::new(),
            priorities: Vec::new(),
        }
    }

    fn add(&mut self, role: Role, owner: Player, priority: u32) {
        self.roles.push(role);
        self.owners.push(owner);
        self.priorities.push(priority);
    }

    fn finish(
        self,
        family: Family,
        n: u32,
        successors_of: impl Fn(Role, &RoleMap) -> Vec<Role>,
    ) -> (ParityGame, RoleMap) {
        let map = RoleMap::new(family, n, self.roles.clone());
        let nodes = self
            .roles
            .iter()
            .enumerate()
            .map(|(v, &role)| {
                let mut succ: Vec<NodeId> = successors_of(role, &map)
                    .into_iter()
                    .map(|r| map.node(r))
                    .collect();
                succ.sort_unstable();
                Node {
                    owner: self.owners[v],
                    priority: self.priorities[v],
                    successors: succ,
                    label: Some(role.label()),
                }
            })
            .collect();
        (ParityGame::new(nodes), map)
    }
}

/// Generates the locally optimizing lower bound game with `n` gates, its
/// initial strategy and the role map. With `drop_top_edge` the top gate's
/// escape edge from `e_n` to `h_n` is omitted, which hands the gate's cycle
/// to player 0 while still forcing exponentially many improvement steps.
///
/// Size: `10n + 4` nodes, `(3n^2 + 41n + 10) / 2` edges, highest priority
/// `12n + 8`.
pub fn gen_locally(
    n: u32,
    drop_top_edge: bool,
) -> Result<(ParityGame, Strategy, RoleMap), FamilyError> {
    if n == 0 {
        return Err(FamilyError::BadSize(n));
    }
    let m = 2 * n; // lane length
    let mut b = Builder::new();
    b.add(Role::X, Player::P1, 1);
    b.add(Role::S, Player::P0, 8 * n + 6);
    b.add(Role::R, Player::P0, 8 * n + 8);
    b.add(Role::C, Player::P0, 8 * n + 4);
    b.add(Role::T(1), Player::P0, 4 * n + 3);
    for i in 2..=m {
        b.add(Role::T(i), Player::P0, 4 * n + 2 * i + 1);
    }
    for i in 1..=m {
        b.add(Role::A(i), Player::P1, 4 * n + 2 * i + 2);
    }
    for i in 1..=n {
        b.add(Role::D(i), Player::P0, 4 * i + 1);
        b.add(Role::E(i), Player::P1, 4 * i + 2);
        b.add(Role::G(i), Player::P0, 4 * i);
        b.add(Role::K(i), Player::P0, 8 * n + 4 * i + 5);
        b.add(Role::F(i), Player::P1, 8 * n + 4 * i + 7);
        b.add(Role::H(i), Player::P1, 8 * n + 4 * i + 8);
    }
    let (game, map) = b.finish(Family::Loc, n, |role, _| match role {
        Role::X => vec![Role::X],
        Role::S => (1..=n).map(Role::F).chain([Role::X]).collect(),
        Role::R => (1..=n).map(Role::G).chain([Role::X]).collect(),
        Role::C => vec![Role::S, Role::R],
        Role::T(1) => vec![Role::S, Role::R, Role::C],
        Role::T(i) => vec![Role::S, Role::R, Role::T(i - 1)],
        Role::A(i) => vec![Role::T(i)],
        Role::D(i) => [Role::S, Role::E(i), Role::R]
            .into_iter()
            .chain((1..=2 * i).map(Role::A))
            .collect(),
        Role::E(i) => {
            if drop_top_edge && i == n {
                vec![Role::D(i)]
            } else {
                vec![Role::D(i), Role::H(i)]
            }
        }
        Role::G(i) => vec![Role::F(i), Role::K(i)],
        Role::K(i) => (i + 1..=n).map(Role::G).chain([Role::X]).collect(),
        Role::F(i) => vec![Role::E(i)],
        Role::H(i) => vec![Role::K(i)],
        _ => unreachable!("role not in local family"),
    });
    let mut init = Strategy::empty(game.node_count(), Player::P0);
    init.set(map.node(Role::S), map.node(Role::X));
    init.set(map.node(Role::R), map.node(Role::X));
    init.set(map.node(Role::C), map.node(Role::R));
    init.set(map.node(Role::T(1)), map.node(Role::C));
    for i in 2..=m {
        init.set(map.node(Role::T(i)), map.node(Role::R));
    }
    for i in 1..=n {
        init.set(map.node(Role::D(i)), map.node(Role::R));
        init.set(map.node(Role::G(i)), map.node(Role::K(i)));
        init.set(map.node(Role::K(i)), map.node(Role::X));
    }
    Ok((game, init, map))
}

/// Generates the globally optimizing lower bound game with `n` gates, its
/// initial strategy and the role map.
///
/// Size: `21n` nodes, `(7n^2 + 81n - 8) / 2` edges, highest priority
/// `24n + 6`.
pub fn gen_globally(n: u32) -> Result<(ParityGame, Strategy, RoleMap), FamilyError> {
    if n == 0 {
        return Err(FamilyError::BadSize(n));
    }
    let m = 6 * n - 2; // lane length
    let mut b = Builder::new();
    b.add(Role::X, Player::P1, 1);
    b.add(Role::S, Player::P0, 20 * n + 2);
    b.add(Role::R, Player::P0, 20 * n + 4);
    b.add(Role::C, Player::P1, 20 * n);
    b.add(Role::T(1), Player::P0, 8 * n + 3);
    for i in 2..=m {
        b.add(Role::T(i), Player::P0, 8 * n + 2 * i + 1);
    }
    for i in 1..=m {
        b.add(Role::A(i), Player::P1, 8 * n + 2 * i + 2);
    }
    for i in 1..=n {
        b.add(Role::D1(i), Player::P0, 8 * i - 5);
        b.add(Role::D2(i), Player::P0, 8 * i - 3);
        b.add(Role::D3(i), Player::P0, 8 * i - 1);
        b.add(Role::E(i), Player::P1, 8 * i);
        b.add(Role::Y(i), Player::P0, 8 * i + 1);
        b.add(Role::G(i), Player::P0, 8 * i + 2);
        b.add(Role::K(i), Player::P0, 20 * n + 4 * i + 3);
        b.add(Role::F(i), Player::P1, 20 * n + 4 * i + 5);
        b.add(Role::H(i), Player::P1, 20 * n + 4 * i + 6);
    }
    let (game, map) = b.finish(Family::Glo, n, |role, _| match role {
        Role::X => vec![Role::X],
        Role::S => (1..=n).map(Role::F).chain([Role::X]).collect(),
        Role::R => (1..=n).map(Role::G).chain([Role::X]).collect(),
        Role::C => vec![Role::R],
        Role::T(1) => vec![Role::S, Role::R, Role::C],
        Role::T(i) => vec![Role::S, Role::R, Role::T(i - 1)],
        Role::A(i) => vec![Role::T(i)],
        // The stubborn cycle spreads its lane inputs over three residue
        // classes so that at most one of its nodes can improve per step.
        Role::D1(i) => [Role::S, Role::C, Role::D2(i)]
            .into_iter()
            .chain((0..=2 * i - 2).map(|j| Role::A(3 * j + 3)))
            .collect(),
        Role::D2(i) => [Role::D3(i)]
            .into_iter()
            .chain((0..=2 * i - 2).map(|j| Role::A(3 * j + 2)))
            .collect(),
        Role::D3(i) => [Role::E(i)]
            .into_iter()
            .chain((0..=2 * i - 1).map(|j| Role::A(3 * j + 1)))
            .collect(),
        Role::E(i) => vec![Role::D1(i), Role::H(i)],
        Role::Y(i) => vec![Role::F(i), Role::K(i)],
        Role::G(i) => vec![Role::Y(i), Role::K(i)],
        Role::K(i) => (i + 1..=n).map(Role::G).chain([Role::X]).collect(),
        Role::F(i) => vec![Role::E(i)],
        Role::H(i) => vec![Role::K(i)],
        _ => unreachable!("role not in global family"),
    });
    let mut init = Strategy::empty(game.node_count(), Player::P0);
    init.set(map.node(Role::S), map.node(Role::X));
    init.set(map.node(Role::R), map.node(Role::X));
    init.set(map.node(Role::T(1)), map.node(Role::C));
    for i in 2..=m {
        let target = if i <= 3 { Role::T(i - 1) } else { Role::R };
        init.set(map.node(Role::T(i)), map.node(target));
    }
    for i in 1..=n {
        init.set(map.node(Role::D1(i)), map.node(Role::D2(i)));
        init.set(map.node(Role::D2(i)), map.node(Role::A(2)));
        init.set(map.node(Role::D3(i)), map.node(Role::A(1)));
        init.set(map.node(Role::G(i)), map.node(Role::K(i)));
        init.set(map.node(Role::Y(i)), map.node(Role::K(i)));
        init.set(map.node(Role::K(i)), map.node(Role::X));
    }
    Ok((game, init, map))
}

/// Generates a reproducible random parity game: injective priorities (a
/// random permutation of `1..=node_count`), random owners, between 1 and
/// `max_outdegree` distinct successors per node, and the smallest-id initial
/// strategy. The same seed yields the same game on every platform.
pub fn gen_random(
    seed: u64,
    node_count: usize,
    max_outdegree: usize,
) -> Result<(ParityGame, Strategy), FamilyError> {
    if node_count == 0 {
        return Err(FamilyError::EmptyRandomGame);
    }
    if max_outdegree == 0 {
        return Err(FamilyError::ZeroOutdegree);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut priorities: Vec<u32> = (1..=node_count as u32).collect();
    priorities.shuffle(&mut rng);
    let cap = max_outdegree.min(node_count);
    let nodes = (0..node_count)
        .map(|v| {
            let owner = if rng.gen::<bool>() {
                Player::P0
            } else {
                Player::P1
            };
            let outdeg = rng.gen_range(1..=cap);
            let mut pool: Vec<NodeId> = (0..node_count).collect();
            pool.shuffle(&mut rng);
            let mut succ: Vec<NodeId> = pool.into_iter().take(outdeg).collect();
            succ.sort_unstable();
            Node {
                owner,
                priority: priorities[v],
                successors: succ,
                label: None,
            }
        })
        .collect();
    let game = ParityGame::new(nodes);
    let init = Strategy::min_successor(&game, Player::P0);
    Ok((game, init))
}
