//! The book under `book/` is the narrative companion to `musob`. This crate
//! exists so every code block in it compiles and runs: each chapter is
//! included as module documentation, and `cargo test --doc -p musob-guide`
//! executes the snippets.
//!
//! When a test here fails, a chapter is out of sync with the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}

#[doc = include_str!("../../../book/src/paths.md")]
pub mod paths {}

#[doc = include_str!("../../../book/src/modulus.md")]
pub mod modulus {}

#[doc = include_str!("../../../book/src/gradients.md")]
pub mod gradients {}

#[doc = include_str!("../../../book/src/sobolev.md")]
pub mod sobolev {}

#[doc = include_str!("../../../book/src/conditions.md")]
pub mod conditions {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
