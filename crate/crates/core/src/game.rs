//! Parity game representation: nodes with owners, injective priorities and a
//! total edge relation, plus positional strategies for either player.

use std::collections::HashMap;

use thiserror::Error;

/// Dense zero-based node identifier.
pub type NodeId = usize;

/// Owner of a node. Player 0 wins a play iff the highest priority seen
/// infinitely often is even.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Player {
    P0,
    P1,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::P0 => Player::P1,
            Player::P1 => Player::P0,
        }
    }
}

impl std::fmt::Display for Player {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Player::P0 => write!(f, "0"),
            Player::P1 => write!(f, "1"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub owner: Player,
    pub priority: u32,
    pub successors: Vec<NodeId>,
    pub label: Option<String>,
}

/// A parity game with nodes `0..node_count()`. Every node must have at least
/// one successor; generators and the file loader additionally keep priorities
/// injective (checked by [`ParityGame::validate`]).
#[derive(Clone, Debug)]
pub struct ParityGame {
    nodes: Vec<Node>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("node {node} has no successors (edge relation must be total)")]
    NoSuccessors { node: NodeId },
    #[error("node {node} has successor {succ} out of range (node count {count})")]
    SuccessorOutOfRange {
        node: NodeId,
        succ: NodeId,
        count: usize,
    },
    #[error("node {node} lists successor {succ} twice")]
    DuplicateSuccessor { node: NodeId, succ: NodeId },
    #[error("nodes {first} and {second} share priority {priority} (priorities must be injective)")]
    DuplicatePriority {
        first: NodeId,
        second: NodeId,
        priority: u32,
    },
    #[error("game has no nodes")]
    Empty,
    #[error("strategy for player {player} misses a choice at node {node}")]
    MissingChoice { player: Player, node: NodeId },
    #[error("strategy chooses {choice} at node {node}, which is not a successor")]
    ChoiceNotSuccessor { node: NodeId, choice: NodeId },
}

impl ParityGame {
    pub fn new(nodes: Vec<Node>) -> ParityGame {
        ParityGame { nodes }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        0..self.nodes.len()
    }

    pub fn owner(&self, v: NodeId) -> Player {
        self.nodes[v].owner
    }

    pub fn priority(&self, v: NodeId) -> u32 {
        self.nodes[v].priority
    }

    pub fn successors(&self, v: NodeId) -> &[NodeId] {
        &self.nodes[v].successors
    }

    pub fn label(&self, v: NodeId) -> Option<&str> {
        self.nodes[v].label.as_deref()
    }

    pub fn set_label(&mut self, v: NodeId, label: String) {
        self.nodes[v].label = Some(label);
    }

    pub fn raw_nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn max_priority(&self) -> u32 {
        self.nodes.iter().map(|n| n.priority).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.successors.len()).sum()
    }

    pub fn owned_by(&self, p: Player) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(move |&v| self.nodes[v].owner == p)
    }

    pub fn has_edge(&self, v: NodeId, u: NodeId) -> bool {
        self.nodes[v].successors.contains(&u)
    }

    /// Structural validation: nonempty, total edge relation, successors in
    /// range and duplicate-free, injective priorities.
    pub fn validate(&self) -> Result<(), GameError> {
        if self.nodes.is_empty() {
            return Err(GameError::Empty);
        }
        let count = self.nodes.len();
        for (v, node) in self.nodes.iter().enumerate() {
            if node.successors.is_empty() {
                return Err(GameError::NoSuccessors { node: v });
            }
            for (i, &u) in node.successors.iter().enumerate() {
                if u >= count {
                    return Err(GameError::SuccessorOutOfRange {
                        node: v,
                        succ: u,
                        count,
                    });
                }
                if node.successors[..i].contains(&u) {
                    return Err(GameError::DuplicateSuccessor { node: v, succ: u });
                }
            }
        }
        let mut seen: HashMap<u32, NodeId> = HashMap::new();
        for (v, node) in self.nodes.iter().enumerate() {
            if let Some(&first) = seen.get(&node.priority) {
                return Err(GameError::DuplicatePriority {
                    first,
                    second: v,
                    priority: node.priority,
                });
            }
            seen.insert(node.priority, v);
        }
        Ok(())
    }
}

/// A positional strategy for one player: a successor choice at every node
/// owned by that player.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Strategy {
    pub player: Player,
    choice: Vec<Option<NodeId>>,
}

impl Strategy {
    pub fn empty(game_size: usize, player: Player) -> Strategy {
        Strategy {
            player,
            choice: vec![None; game_size],
        }
    }

    /// The strategy choosing the smallest-id successor at every owned node.
    pub fn min_successor(g: &ParityGame, player: Player) -> Strategy {
        let mut s = Strategy::empty(g.node_count(), player);
        for v in g.owned_by(player) {
            let u = *g.successors(v).iter().min().expect("total edge relation");
            s.set(v, u);
        }
        s
    }

    pub fn set(&mut self, v: NodeId, u: NodeId) {
        self.choice[v] = Some(u);
    }

    pub fn get(&self, v: NodeId) -> NodeId {
        self.choice[v].expect("strategy queried at a node it does not own")
    }

    pub fn try_get(&self, v: NodeId) -> Option<NodeId> {
        self.choice[v]
    }

    /// Owned nodes in ascending id order with their choices.
    pub fn choices(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.choice
            .iter()
            .enumerate()
            .filter_map(|(v, c)| c.map(|u| (v, u)))
    }

    pub fn validate(&self, g: &ParityGame) -> Result<(), GameError> {
        for v in g.owned_by(self.player) {
            match self.choice[v] {
                None => {
                    return Err(GameError::MissingChoice {
                        player: self.player,
                        node: v,
                    })
                }
                Some(u) => {
                    if !g.has_edge(v, u) {
                        return Err(GameError::ChoiceNotSuccessor { node: v, choice: u });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Successor of `v` under the pair `(sigma, tau)` of total strategies.
pub fn joint_successor(g: &ParityGame, sigma: &Strategy, tau: &Strategy, v: NodeId) -> NodeId {
    match g.owner(v) {
        Player::P0 => sigma.get(v),
        Player::P1 => tau.get(v),
    }
}
