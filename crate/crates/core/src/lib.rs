//! Determination-depth analysis toolkit.
//!
//! The crate measures how many rounds of irreversible narrowing a process
//! needs before a single outcome is pinned down, across several concrete
//! carriers of that structure:
//!
//! * [`spec`] and [`depth`]: explicit commitment specifications, offline
//!   dependency depth, and the online minimax rounds-to-resolution game.
//! * [`genchain`]: randomized constraint chains and the parallel-guessing
//!   separation between deep and shallow resolution orders.
//! * [`matching`]: stable matchings, rotation posets, and layered elimination.
//! * [`games`]: finite extensive-form games, backward induction, and the
//!   depth of non-forced choices along subgame-perfect play.
//! * [`metacomplexity`]: decision-tree depth of boolean functions and the
//!   variable-assignment depth game, including quantified formulas.
//! * [`distsim`]: two-agent asynchronous resolution and the number of
//!   synchronization points needed to realize a layered strategy.

pub mod depth;
pub mod distsim;
pub mod games;
pub mod genchain;
pub mod fixtures;
pub mod matching;
pub mod metacomplexity;
pub mod report;
pub mod spec;
