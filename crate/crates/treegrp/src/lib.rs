//! Finite-scale models of tree-indexed abelian and 2-nilpotent groups.
//!
//! The crate turns a stratified rooted tree into a scaffold of sets and
//! partial maps, and builds on it exact-arithmetic models of three groups:
//! a torsion-free abelian group whose automorphisms feel the branches of the
//! tree, a Hopfian-flavour variant, and a 2-nilpotent group with Prüfer
//! central coordinates. A small window model of products of finite abelian
//! p-groups covers the reduced co-Hopfian case.

pub mod dump;
pub mod endo;
pub mod g1;
pub mod lattice;
pub mod nil2;
pub mod profinite;
pub mod qvec;
pub mod scaffold;
pub mod structure;
pub mod tags;
pub mod tree;
