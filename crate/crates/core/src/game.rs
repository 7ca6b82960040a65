use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Rule set for the token game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Game {
    Normal,
    Misere,
    Escape,
}

impl Game {
    pub const ALL: [Game; 3] = [Game::Normal, Game::Misere, Game::Escape];

    /// Outcome of the `A`/`B` predicates at a vertex with no children.
    ///
    /// `A` is "the player to move wins" for normal/misère and "Stopper to
    /// move wins" for escape; `B` is the complementary-role predicate.
    pub(crate) fn leaf_values(self) -> (bool, bool) {
        match self {
            Game::Normal => (false, true),
            Game::Misere => (true, false),
            Game::Escape => (true, true),
        }
    }
}

impl fmt::Display for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Game::Normal => "normal",
            Game::Misere => "misere",
            Game::Escape => "escape",
        })
    }
}

impl FromStr for Game {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(Game::Normal),
            "misere" | "misère" => Ok(Game::Misere),
            "escape" => Ok(Game::Escape),
            _ => Err(Error::Literal {
                literal: s.to_string(),
                reason: "expected one of normal, misere, escape".into(),
            }),
        }
    }
}
