pub mod error;
pub mod graphical_games;
pub mod harness;
pub mod logic;
pub mod couples;
pub mod dynamic_matching;
pub mod lp;
pub mod matching;
pub mod networks;
pub mod orders;
pub mod revealed_pref;
pub mod stoch_choice;

pub use error::{Error, Result};
