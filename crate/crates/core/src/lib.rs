//! # actsym
//!
//! A mixed-binary branch-and-bound solver library built around symmetry
//! handling. Binary variables may be organized in matrices whose column
//! permutations leave the problem invariant; the solver restricts the search
//! to lexicographically maximal representatives by orbitopal fixing, by
//! static symmetry-handling inequalities, or by *activation handlers* that
//! detect sub-symmetries arising at search-tree nodes and handle them on the
//! fly.
//!
//! The crate ships three problem families with generators, model builders,
//! handlers and inequality generators:
//!
//! * multiple knapsack (equal remaining-capacity sub-symmetries),
//! * min-up/min-down unit commitment (start-up/shut-down sub-symmetries),
//! * max-k-colorable subgraph (color-pair sub-symmetries on components).
//!
//! Ground truth for all of it lives in [`oracle`]: exhaustive enumeration of
//! feasible points, orbits and forced cells on instances small enough to
//! brute-force. The [`bench`] module drives the experimental protocol
//! (settings matrix, CSV reports, shifted-geometric-mean summaries) used by
//! the `actsym` command-line tool.
//!
//! With the default `parallel` feature, batch runs and enumeration sweeps
//! use rayon; disabling it falls back to equivalent sequential code paths.

pub mod bench;
pub mod bnb;
pub mod instances;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod orbitope;
pub mod par;
pub mod subsym;

pub use model::{MixedBinaryProgram, Rat, VarId};
