//! The guide under `book/`, compiled so that `cargo test` runs every
//! snippet in it. One module per chapter, so a failing doc-test names the
//! chapter it came from.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/games.md")]
pub mod games {}
#[doc = include_str!("../../../book/src/classical.md")]
pub mod classical {}
#[doc = include_str!("../../../book/src/quantum.md")]
pub mod quantum {}
#[doc = include_str!("../../../book/src/engine.md")]
pub mod engine {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
