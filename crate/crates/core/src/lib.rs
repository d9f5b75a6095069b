//! Joint knowledge-graph and type-space embeddings for entity type
//! prediction.
//!
//! An entity embedding (dimension `k`) is mapped into the type space
//! (dimension `l`) by a linear complex regression, and candidate types are
//! ranked by their distance to the projection. Entity and type spaces each
//! carry their own relation embeddings, scored with either RotatE or
//! ComplEx.

pub mod baseline;
pub mod cli;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod losses;
pub mod model;
pub mod regression;
pub mod synthetic;
pub mod training;

pub use dataset::{load_dataset, Dataset, EntityId, LoadOptions, RelationId, TripleStore, TypeId};
pub use embedding::ModelKind;
pub use error::{Error, Result};
pub use evaluation::{evaluate, RankingReport};
pub use model::CoreModel;
pub use training::{run_training, TrainConfig};
