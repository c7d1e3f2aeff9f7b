//! Exact perfect-play endgame databases for Bridge double-dummy card play.
//!
//! The crate builds databases bottom-up by retrograde distance `d` (tricks
//! remaining). Two engines are provided: a classical state-wise retrograde
//! solver backed by a perfect ranking function ([`retro`]), and a set-based
//! solver that stores consistent sets of deals in a shallow bitwise tree
//! ([`setro`], [`sets`], [`setdb`]). Both are cross-checked against a plain
//! minimax evaluator ([`rules`]).

mod error;

pub mod builder;
pub mod cards;
pub mod deal;
pub mod retro;
pub mod rules;
pub mod setdb;
pub mod setro;
pub mod sets;
pub mod shape;
pub mod store;

pub use builder::{BuildOutcome, BuildPlan, Engine, SuitMode};
pub use cards::{Card, Player, Suit, Trump};
pub use deal::{canonicalize, first_deal, next_suit_permutation, AbsoluteDeal, CanonicalDeal, Position};
pub use error::{Error, Result};
pub use retro::{RetroDb, StateIndexer};
pub use rules::{legal_plays, minimax_value, trick_successors, trick_winner, TrickState, Value};
pub use setdb::{PartitionTree, TreeNode, TreeStats};
pub use setro::{build_setro_db, database_lookup, generalize_to_set, oracle, oracle_setwise, BuildReport, OpenList};
pub use sets::{HolderMask, SetEntry};
pub use shape::{enumerate_shapes, successor_shapes, Shape};
pub use store::{Partition, Store};
