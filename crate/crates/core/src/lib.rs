//! Qualitative street-network descriptions built on the dipole relation
//! algebra, and the tooling to test them as language-model context.
//!
//! The pipeline runs: GeoJSON or Overpass data ([`ingest`]) → street
//! segments and intersections → a graph with dipole relations on its edges
//! ([`graph`]) → a plain-text description of every street ([`verbalize`]) →
//! prompts and model gateways ([`rag`]) → labeled trials and summaries
//! ([`harness`]).

pub mod algebra;
pub mod collate;
pub mod dipole;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod harness;
pub mod ingest;
pub mod net;
pub mod rag;
pub mod synthetic;
pub mod verbalize;

pub use algebra::{enumerate_relations, RelationSet};
pub use dipole::{
    converse, point_class, relate, reverse, Dipole, DipoleRelation, PointClass, RelationCode,
    RelationTier,
};
pub use error::{Error, Result};
pub use geometry::{orientation, Orientation, Point};
pub use graph::{build_graph, load_graph, save_graph, Edge, EdgeKind, SpatialGraph};
pub use harness::{run_experiment, summarize, GroupBy, Label, TrialRecord};
pub use ingest::{load_geojson, snap_and_segment, RawStreet, StreetSegment};
pub use rag::{
    assemble_prompt, build_context, Group, NavigationTask, PromptBundle, ProviderConfig, Scope,
};
pub use verbalize::{verbalize_area, verbalize_street, VerbalizationDocument};
