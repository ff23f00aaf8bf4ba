//! Decision-support benchmark harness.
//!
//! Covers the whole apparatus of a TPC-H style run: deterministic flat-file
//! generation, parameterised query streams, load / power / throughput phases
//! with refresh functions, the composite metrics, a predicate-factoring
//! query rewriter and a reference encoded-bitmap index.

pub mod backend;
pub mod bitmap;
pub mod datagen;
pub mod driver;
pub mod flatfile;
pub mod metrics;
pub mod par;
pub mod querygen;
pub mod refresh;
pub mod report;
pub mod rewriter;
pub mod schema;

pub use par::Parallelism;
pub use schema::{ScaleFactor, Table};
