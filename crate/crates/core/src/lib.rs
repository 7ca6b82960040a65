//! Two-player games on Galton-Watson trees.
//!
//! A token starts at the root of a Galton-Watson tree and the players take
//! turns moving it to a child. Three rule sets are covered:
//!
//! * **normal** play, where a player who cannot move loses;
//! * **misère** play, where a player who cannot move wins;
//! * the **escape** game, where Stopper wins as soon as either player is
//!   stuck and Escaper wins if play goes on forever.
//!
//! Outcome probabilities are extremal fixed points of compositions of
//! `F = 1 - G` and `H = 1 - G + p0`, where `G` is the offspring generating
//! function ([`analytic`]). Every analytic quantity has an independent
//! tree-sampling estimator in [`simulate`]. [`scan`] locates and classifies
//! phase transitions along one-parameter families, [`lengths`] handles the
//! expected game length, and [`audit`] checks the inequality system between
//! the ten outcome probabilities.

pub mod analytic;
pub mod audit;
pub mod cli;
pub mod error;
pub mod exec;
pub mod game;
pub mod lengths;
pub mod offspring;
pub mod report;
pub mod scan;
pub mod simulate;

pub use analytic::{outcomes, GameOutcomes, MapId, OutcomeReport};
pub use error::{Error, Result};
pub use exec::Execution;
pub use game::Game;
pub use offspring::{Family, FamilyId, OffspringDistribution};
