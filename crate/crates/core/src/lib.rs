//! Hybrid classification that blends an ordinary "low-level" classifier with
//! a "high-level" score read off deterministic tourist walks on per-class
//! networks.
//!
//! Typical flow: load a [`LabeledDataset`], fit a [`HybridModel`] (which
//! builds the class network and its baseline walk profiles), then classify
//! instances with [`HybridModel::classify_one`] or
//! [`HybridModel::classify_batch`].

pub mod dataset;
pub mod error;
pub mod eval;
pub mod graph;
pub mod highlevel;
pub mod hybrid;
pub mod idx;
pub mod lowlevel;
pub mod netbuild;
pub mod walker;

pub use dataset::{AttributeKind, ClassId, LabeledDataset, Metric, Standardizer};
pub use error::{Error, Result};
pub use graph::ClassNetwork;
pub use highlevel::{ClassDeltas, HighLevelConfig, HighLevelModel, Topology};
pub use hybrid::{Decision, HybridConfig, HybridModel};
pub use lowlevel::{LowLevelModel, LowLevelSpec, Membership};
pub use netbuild::{AbsorbPolicy, NetConfig};
pub use walker::{tourist_walk, WalkOutcome, WalkProfile};
