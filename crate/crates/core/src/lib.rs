//! Random ordinal games on the grid `[k]^n`.
//!
//! The crate materializes the uniform random game model in which every line
//! of the grid (the k profiles differing only in one player's action)
//! independently gets a uniform winner, and analyzes the induced
//! best-/better-response digraphs: connectivity classification, sink
//! censuses, two-dimensional slice cycles, Galton-Watson limits for the
//! associated constants, and the best-response-with-inertia dynamic.
//! A reproducible Monte Carlo harness ties these together and an exhaustive
//! enumerator provides exact ground truth at desk scales.

pub mod asymptotics;
pub mod bitset;
pub mod branching;
pub mod census;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod harness;
pub mod numeric;
pub mod response;
pub mod rng;
pub mod slice;
pub mod table;

pub use error::{Error, Result};
pub use grid::{GridShape, LineId, VertexId, DEFAULT_MEM_CAP};
pub use response::{classify_br, classify_better, scc, sinks, ClassFlags};
pub use table::{RankTable, WinnerTable};
