//! Exact-arithmetic toolkit for log-linear partition models.
//!
//! A *partition model* is the log-linear model of a 0/1 matrix that stacks
//! blocks whose columns each sum to 1, exactly the models the classical
//! iterative proportional scaling (IPS) algorithm applies to. This crate
//! provides:
//!
//! - exact rational arithmetic and linear algebra ([`fraction`], [`linalg`]);
//! - multipartition matrices with validation and a text format ([`matrix`]);
//! - the generalized running intersection property (GRIP) checker with
//!   connection ratios, florets and compressions ([`grip`]);
//! - classical IPS in exact-rational and floating-point modes ([`ips`]);
//! - closed-form rational maximum likelihood estimates for GRIP matrices,
//!   with independent verification via Birch's conditions and lattice
//!   relations ([`mle`]);
//! - staged trees: construction from matrices, stratified/balanced
//!   predicates, interpolating polynomials, and a balanced-tree generator
//!   ([`staged_tree`]);
//! - hierarchical models over simplicial complexes, decomposability and the
//!   running intersection property ([`hierarchical`]);
//! - toric fiber product verification with Quad/Lift generator families
//!   ([`tfp`]).
//!
//! Everything that decides a verdict runs on exact rationals; floating point
//! appears only in the numeric IPS mode and KL diagnostics.

pub mod error;
pub mod fraction;
pub mod grip;
pub mod hierarchical;
pub mod ips;
pub mod linalg;
pub mod matrix;
pub mod mle;
pub mod staged_tree;
pub mod tfp;

pub use error::Error;
pub use fraction::{Fraction, FractionVector};
pub use matrix::{MultipartitionMatrix, PartitionMatrix};
