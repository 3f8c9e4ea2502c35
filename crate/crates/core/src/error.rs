//! Error types for every stage of the pipeline.

use thiserror::Error;

use crate::relgraph::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown relation label `{0}`")]
pub struct ParseLabelError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node {0} is not in the graph")]
    UnknownNode(NodeId),
    #[error("relation `{relation}` belongs to the other task vocabulary")]
    WrongTask { relation: String },
    #[error("edge ({subject}, {relation}, {object}) contradicts the ground facts")]
    Inconsistent {
        subject: NodeId,
        relation: String,
        object: NodeId,
    },
    #[error("relation chain is empty")]
    EmptyChain,
    #[error("growth set is empty")]
    EmptyGrowthSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SampleError {
    #[error("chain length must be at least 1")]
    ZeroLength,
    #[error("no non-repeating walk of length {length} found after {attempts} attempts")]
    Exhausted { length: usize, attempts: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AugmentError {
    #[error("requested {requested} distractor edges but only {available} are available")]
    NoiseUnavailable { requested: usize, available: usize },
    #[error("cannot flip {flip} edges of a {hop}-hop chain")]
    FlipCountExceedsHop { flip: usize, hop: usize },
    #[error("invalid augmentation `{0}`")]
    Parse(String),
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("could not generate enough examples for hop {hop}")]
    Exhausted { hop: usize },
    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Verbalize(#[from] VerbalizeError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerbalizeError {
    #[error("no name for node {0}")]
    MissingName(NodeId),
    #[error("cannot verbalize an empty chain")]
    EmptyChain,
    #[error("name pool too small: need {needed}, have {available}")]
    NamePoolExhausted { needed: usize, available: usize },
    #[error("relation `{0}` has no templates")]
    NoTemplate(String),
    #[error("bad template `{0}`: {1}")]
    BadTemplate(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("shot `{0}` is the query example")]
    ShotOverlap(String),
    #[error("need {needed} shots but the pool only has {available} usable examples")]
    NotEnoughShots { needed: usize, available: usize },
    #[error("no relation label found in response")]
    Unparseable,
    #[error("prompt asset is missing the `{0}` placeholder")]
    BadAsset(String),
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("prediction id `{0}` is not in the gold dataset")]
    UnknownId(String),
    #[error("prediction id `{0}` appears more than once")]
    DuplicateId(String),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{u} and {v} match several labels: {labels:?}")]
    Inconsistent {
        u: NodeId,
        v: NodeId,
        labels: Vec<String>,
    },
    #[error("node {0} is unknown to the world")]
    UnknownNode(NodeId),
    #[error("triples are contradictory")]
    Contradiction,
    #[error("triples do not connect head and tail")]
    Disconnected,
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}
