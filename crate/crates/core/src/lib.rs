#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity, clippy::needless_range_loop)]

pub mod amg;
pub mod bench;
pub mod error;
pub mod famgpi;
pub mod game_model;
pub mod isaacs_disc;
pub mod policy_iteration;

pub use error::{Error, Result};

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/games.md")]
    pub mod games {}
    #[doc = include_str!("../../../book/src/amg.md")]
    pub mod amg {}
    #[doc = include_str!("../../../book/src/grid_problems.md")]
    pub mod grid_problems {}
    #[doc = include_str!("../../../book/src/famg.md")]
    pub mod famg {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
