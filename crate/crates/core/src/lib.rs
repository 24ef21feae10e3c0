//! Strategy iteration laboratory for parity games.
//!
//! The crate implements discrete strategy iteration with play-based node
//! valuations, three improvement policies (locally optimizing, globally
//! optimizing, linearly inductive), exact generators for game families on
//! which the local and global policies need exponentially many improvement
//! steps, machinery that verifies the binary-counter structure of those runs,
//! and exact-arithmetic reductions to mean payoff, discounted payoff and
//! simple stochastic games.

pub mod arena;
pub mod counterlab;
pub mod families;
pub mod format;
pub mod game;
pub mod linalg;
pub mod oracle;
pub mod payoff;
pub mod policies;
pub mod response;
pub mod solver;
pub mod valuation;

pub use game::{NodeId, ParityGame, Player, Strategy};
pub use valuation::{GameValuation, NodeValuation};
