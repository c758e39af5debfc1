//! Memorization auditing and mitigation for synthetic mixed-type tabular data.
//!
//! - [`table`]: schema-checked tables, CSV I/O, seeded splits
//! - [`distance`]: mixed numerical/categorical distance and exact 2-NN search
//! - [`memorization`]: distance-ratio memorization rate and Mem-AUC
//! - [`association`]: Pearson / Cramér's V / η² and feature clustering
//! - [`augment`]: TabCutMix, TabCutMixPlus and the independent-feature baseline
//! - [`fidelity`]: shape, trend, DCR, C2ST, α-precision / β-recall
//! - [`scorelab`]: closed-form optimal score and the backward SDE sampler

pub mod association;
pub mod augment;
pub mod distance;
pub mod error;
pub mod fidelity;
pub mod memorization;
pub mod rng;
pub mod scorelab;
pub mod symbol;
pub mod table;

pub use error::{Error, Result};
pub use symbol::Symbol;
pub use table::{Cell, Feature, FeatureKind, Row, Schema, Table};
