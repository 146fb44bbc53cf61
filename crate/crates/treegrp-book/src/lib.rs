//! The guide in `book/` with every Rust sample compiled and run as a doctest.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}
#[doc = include_str!("../../../book/src/trees.md")]
pub mod trees {}
#[doc = include_str!("../../../book/src/scaffolds.md")]
pub mod scaffolds {}
#[doc = include_str!("../../../book/src/divisibility.md")]
pub mod divisibility {}
#[doc = include_str!("../../../book/src/endomorphisms.md")]
pub mod endomorphisms {}
#[doc = include_str!("../../../book/src/nilpotent.md")]
pub mod nilpotent {}
#[doc = include_str!("../../../book/src/profinite.md")]
pub mod profinite {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
