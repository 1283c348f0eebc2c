//! Topological clustering, mapper graphs and topological hierarchical
//! decompositions (THDs) of finite data, together with brute-force
//! verifiers for the cosheaf-theoretic statements behind them.
//!
//! The crate is organised bottom-up:
//!
//! * [`metric`]: finite metric samples, closed balls, offsets and the
//!   Hausdorff family of subset distances.
//! * [`complex`]: covers, nerves (Čech, Rips, witness), the canonical map
//!   `eta` into a nerve and pixelization of open sets.
//! * [`topology`]: finite posets under the specialization topology and
//!   their connected components.
//! * [`cosheaf`]: precosheaves on finite posets, colimits and limits of
//!   finite sets, the cosheaf axiom, Reeb cosheaves, the mapper functor and
//!   the category of elements.
//! * [`mapper`]: the single-scale mapper pipeline.
//! * [`multiscale`]: refinement towers, the limit nerve and the multiscale
//!   mapper THD.
//! * [`hierarchy`]: linkage THDs, density-based clustering and radius
//!   filtrations.
//! * [`cli`]: the `thdkit` command line.

pub mod cli;
pub mod complex;
pub mod cosheaf;
pub mod error;
pub mod fixtures;
pub mod hierarchy;
pub mod instances;
pub mod io;
pub mod mapper;
pub mod metric;
pub mod miniball;
pub mod multiscale;
pub mod subset;
pub mod suite;
pub mod thd;
pub mod topology;
pub mod union_find;
pub mod verify;

pub use error::{Error, Result};
pub use metric::PointCloud;
pub use subset::{Partition, SubsetId};
