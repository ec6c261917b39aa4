//! Runs the code listings of the guide in `book/src` as doc-tests.
//!
//! mdbook cannot test listings that depend on external crates, so each
//! chapter is included here as the documentation of an empty module and
//! `cargo test` compiles and runs its listings.

#[doc = include_str!("../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../book/src/polytopes.md")]
pub mod polytopes {}

#[doc = include_str!("../../book/src/stability.md")]
pub mod stability {}

#[doc = include_str!("../../book/src/lattice.md")]
pub mod lattice {}

#[doc = include_str!("../../book/src/abreu.md")]
pub mod abreu {}

#[doc = include_str!("../../book/src/kempf_ness.md")]
pub mod kempf_ness {}

#[doc = include_str!("../../book/src/cli.md")]
pub mod cli {}
