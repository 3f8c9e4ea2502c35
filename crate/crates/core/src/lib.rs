//! Deterministic generation of graph-based multi-hop reasoning datasets.
//!
//! The pipeline grows a relational graph from engine ground facts, samples a
//! non-repeating walk as a reasoning chain, augments it, withholds the
//! head-to-tail relation as the label and renders the result as a story,
//! a query and prompt/target pairs. An independent oracle re-derives every
//! label for verification.

pub mod augment;
pub mod data;
pub mod error;
pub mod evalkit;
pub mod kinship;
pub mod oracle;
pub mod promptkit;
pub mod relgraph;
pub mod sampler;
pub mod seed;
pub mod spatial;
pub mod taskgen;
pub mod verbalizer;

pub use error::*;
pub use augment::{AugmentMix, Augmentation};
pub use kinship::{Gender, Genealogy, KinRelation};
pub use promptkit::PromptStyle;
pub use relgraph::{grow_graph, GraphDocument, GrowthConfig, NodeId, Relation, RelationalGraph, Task, Triple, World};
pub use sampler::ReasoningChain;
pub use spatial::{Layout, SpatialRelation};
pub use taskgen::{DatasetSpec, Example};
