//! Analytics toolkit for mobile-cellular traffic traces.
//!
//! The library turns raw flow and call records into three kinds of
//! "social" graphs over network entities:
//!
//! * **BSSN** — base stations linked by how similar their traffic time
//!   series are (Pearson correlation, filtered down to a planar maximally
//!   filtered graph, then clustered into communities),
//! * **ASN** — apps linked the same way, sized by graph degree,
//! * **USN** — users linked directly by who calls whom.
//!
//! The pipeline stages are independent modules so intermediate artifacts
//! (per-entity series, correlation matrices, filtered graphs, partitions)
//! can be produced and inspected on their own. The [`synth`] module
//! generates cities, subscriber populations and call graphs with planted
//! ground truth so every stage can be verified end to end.

pub mod cli;
pub mod community;
pub mod corr;
pub mod error;
pub mod graph;
pub mod records;
pub mod series;
pub mod socialnets;
pub mod synth;

pub use error::{Error, Result};
