//! Shared inputs for the benchmarks.

use dipolar_core::graph::{build_graph, SpatialGraph};
use dipolar_core::ingest::{load_geojson, snap_and_segment, DEFAULT_SNAP_TOLERANCE};
use dipolar_core::synthetic::grid_city;

pub const SEED: u64 = 42;

/// GeoJSON of a grid city with `streets` streets.
pub fn city_document(streets: usize) -> Vec<u8> {
    grid_city(streets, SEED)
}

/// Ingest a GeoJSON document all the way to a graph.
pub fn ingest(document: &[u8]) -> SpatialGraph {
    let loaded = load_geojson(document).expect("generated city loads");
    let seg = snap_and_segment(&loaded.streets, DEFAULT_SNAP_TOLERANCE).expect("segmentation");
    build_graph(&seg, Some(loaded.projection)).expect("graph")
}
