//! The qualitative knowledge graph: street segments as nodes, dipole
//! relations as edges between segments meeting at a crossing, plus chain
//! edges between consecutive segments of one street.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::collate;
use crate::dipole::{relate, DipoleRelation};
use crate::error::{json_location, Error, Result};
use crate::geometry::Point;
use crate::ingest::{Intersection, Projection, Segmentation, StreetSegment};

pub const GRAPH_SCHEMA_VERSION: u32 = 1;

/// Relation carried by every chain edge: the end of one segment is the start
/// of the next and the street carries on forward.
pub const CHAIN_RELATION: &str = "efbs";

pub fn chain_relation() -> DipoleRelation {
    CHAIN_RELATION.parse().expect("efbs is realizable")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Crossing,
    Chain,
}

/// One stored edge, oriented so that `a < b` lexicographically. The edge
/// from `b` to `a` is the converse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub relation: DipoleRelation,
    pub location: Point,
    pub kind: EdgeKind,
}

/// A street met at some point along another street.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor {
    pub street: String,
    pub location: Point,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpatialGraph {
    schema_version: u32,
    origin: Option<Projection>,
    nodes: BTreeMap<String, StreetSegment>,
    intersections: Vec<Intersection>,
    edges: Vec<Edge>,
    street_index: BTreeMap<String, Vec<String>>,
    #[serde(skip)]
    lookup: Lookup,
}

#[derive(Clone, Debug, Default)]
struct Lookup {
    intersection_at: HashMap<(u64, u64), usize>,
    edge_of: HashMap<(String, String), usize>,
}

impl PartialEq for SpatialGraph {
    fn eq(&self, other: &Self) -> bool {
        self.schema_version == other.schema_version
            && self.origin == other.origin
            && self.nodes == other.nodes
            && self.intersections == other.intersections
            && self.edges == other.edges
            && self.street_index == other.street_index
    }
}

/// Build the graph from segmentation output.
pub fn build_graph(
    segmentation: &Segmentation,
    origin: Option<Projection>,
) -> Result<SpatialGraph> {
    SpatialGraph::build(
        segmentation.segments.clone(),
        segmentation.intersections.clone(),
        origin,
    )
}

impl SpatialGraph {
    pub fn build(
        segments: Vec<StreetSegment>,
        intersections: Vec<Intersection>,
        origin: Option<Projection>,
    ) -> Result<SpatialGraph> {
        let mut nodes = BTreeMap::new();
        for s in segments {
            if let Some(prev) = nodes.insert(s.id.clone(), s) {
                return Err(Error::Dataset(format!("duplicate segment id {}", prev.id)));
            }
        }
        let street_index = index_streets(&nodes)?;

        for x in &intersections {
            for inc in &x.incident {
                let seg = nodes.get(&inc.segment).ok_or_else(|| {
                    Error::Dataset(format!(
                        "intersection at {} names unknown segment {}",
                        x.location, inc.segment
                    ))
                })?;
                if seg.start() != x.location && seg.end() != x.location {
                    return Err(Error::Dataset(format!(
                        "segment {} does not end at its intersection {}",
                        seg.id, x.location
                    )));
                }
            }
        }

        let mut edges: BTreeMap<(String, String), Edge> = BTreeMap::new();
        let mut chain_pairs = HashSet::new();
        for ids in street_index.values() {
            for w in ids.windows(2) {
                let (a, b) = (&nodes[&w[0]], &nodes[&w[1]]);
                if a.end() != b.start() {
                    return Err(Error::Dataset(format!(
                        "segments {} and {} are consecutive but do not touch",
                        a.id, b.id
                    )));
                }
                chain_pairs.insert((a.id.clone(), b.id.clone()));
                edges.insert(
                    ordered(&a.id, &b.id),
                    Edge {
                        a: a.id.clone(),
                        b: b.id.clone(),
                        relation: chain_relation(),
                        location: a.end(),
                        kind: EdgeKind::Chain,
                    },
                );
            }
        }
        for x in &intersections {
            let mut incident: Vec<&str> = x.incident.iter().map(|i| i.segment.as_str()).collect();
            incident.sort_unstable();
            incident.dedup();
            for (i, a) in incident.iter().enumerate() {
                for b in &incident[i + 1..] {
                    let key = ordered(a, b);
                    if edges.contains_key(&key) {
                        continue;
                    }
                    let (sa, sb) = (&nodes[*a], &nodes[*b]);
                    edges.insert(
                        key,
                        Edge {
                            a: sa.id.clone(),
                            b: sb.id.clone(),
                            relation: relate(&sa.dipole, &sb.dipole),
                            location: x.location,
                            kind: EdgeKind::Crossing,
                        },
                    );
                }
            }
        }

        let mut graph = SpatialGraph {
            schema_version: GRAPH_SCHEMA_VERSION,
            origin,
            nodes,
            intersections,
            edges: edges.into_values().collect(),
            street_index,
            lookup: Lookup::default(),
        };
        graph.reindex();
        let components = graph.street_components();
        if components.len() > 1 {
            let summary: Vec<String> = components
                .iter()
                .map(|c| format!("{} streets starting with {}", c.len(), c[0]))
                .collect();
            log::warn!(
                "graph has {} disconnected components: {}",
                components.len(),
                summary.join("; ")
            );
        }
        Ok(graph)
    }

    fn reindex(&mut self) {
        self.lookup = Lookup {
            intersection_at: self
                .intersections
                .iter()
                .enumerate()
                .map(|(i, x)| (x.location.key(), i))
                .collect(),
            edge_of: self
                .edges
                .iter()
                .enumerate()
                .map(|(i, e)| ((e.a.clone(), e.b.clone()), i))
                .collect(),
        };
    }

    pub fn origin(&self) -> Option<&Projection> {
        self.origin.as_ref()
    }

    pub fn segments(&self) -> impl Iterator<Item = &StreetSegment> {
        self.nodes.values()
    }

    pub fn segment(&self, id: &str) -> Option<&StreetSegment> {
        self.nodes.get(id)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn intersections(&self) -> &[Intersection] {
        &self.intersections
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn has_street(&self, name: &str) -> bool {
        self.street_index.contains_key(name)
    }

    /// Street names in display order.
    pub fn street_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.street_index.keys().map(String::as_str).collect();
        collate::sort_names(&mut names);
        names
    }

    /// Segments of a street, first to last.
    pub fn street_segments(&self, name: &str) -> Result<Vec<&StreetSegment>> {
        let ids = self
            .street_index
            .get(name)
            .ok_or_else(|| Error::NotFound(format!("street {name:?}")))?;
        Ok(ids.iter().map(|id| &self.nodes[id]).collect())
    }

    pub fn intersection_at(&self, p: Point) -> Option<&Intersection> {
        self.lookup
            .intersection_at
            .get(&p.key())
            .map(|&i| &self.intersections[i])
    }

    /// Relation from segment `a` to segment `b`, if they share an edge.
    pub fn relation(&self, a: &str, b: &str) -> Option<DipoleRelation> {
        if let Some(&i) = self.lookup.edge_of.get(&(a.to_string(), b.to_string())) {
            return Some(self.edges[i].relation);
        }
        self.lookup
            .edge_of
            .get(&(b.to_string(), a.to_string()))
            .map(|&i| self.edges[i].relation.converse())
    }

    /// Streets (other than `name`) with a segment incident at `x`, in
    /// display order, each once.
    pub fn streets_at(&self, x: &Intersection, name: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for inc in &x.incident {
            let street = &self.nodes[&inc.segment].street_name;
            if street != name && !out.contains(street) {
                out.push(street.clone());
            }
        }
        collate::sort_names(&mut out);
        out
    }

    /// Streets met along `name`, in along-street order. A street met at two
    /// different crossings is listed twice.
    pub fn neighbors(&self, name: &str) -> Result<Vec<Neighbor>> {
        let segs = self.street_segments(name)?;
        let mut stops = vec![segs[0].start()];
        stops.extend(segs.iter().map(|s| s.end()));
        let mut out = Vec::new();
        for p in stops {
            if let Some(x) = self.intersection_at(p) {
                out.extend(self.streets_at(x, name).into_iter().map(|street| Neighbor {
                    street,
                    location: p,
                }));
            }
        }
        Ok(out)
    }

    /// Street-level adjacency: streets sharing at least one intersection.
    pub fn street_adjacency(&self) -> BTreeMap<String, BTreeSet<String>> {
        let mut adj: BTreeMap<String, BTreeSet<String>> = self
            .street_index
            .keys()
            .map(|k| (k.clone(), BTreeSet::new()))
            .collect();
        for x in &self.intersections {
            let streets: BTreeSet<&String> = x
                .incident
                .iter()
                .map(|i| &self.nodes[&i.segment].street_name)
                .collect();
            for a in &streets {
                for b in &streets {
                    if a != b {
                        adj.get_mut(*a).expect("indexed").insert((*b).clone());
                    }
                }
            }
        }
        adj
    }

    /// Connected groups of streets, largest first.
    pub fn street_components(&self) -> Vec<Vec<String>> {
        let adj = self.street_adjacency();
        let mut seen = HashSet::new();
        let mut comps = Vec::new();
        for start in adj.keys() {
            if !seen.insert(start.clone()) {
                continue;
            }
            let mut comp = vec![start.clone()];
            let mut stack = vec![start.clone()];
            while let Some(s) = stack.pop() {
                for n in &adj[&s] {
                    if seen.insert(n.clone()) {
                        comp.push(n.clone());
                        stack.push(n.clone());
                    }
                }
            }
            collate::sort_names(&mut comp);
            comps.push(comp);
        }
        comps.sort_by_key(|c| std::cmp::Reverse(c.len()));
        comps
    }
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

fn index_streets(nodes: &BTreeMap<String, StreetSegment>) -> Result<BTreeMap<String, Vec<String>>> {
    let mut by_street: BTreeMap<String, Vec<&StreetSegment>> = BTreeMap::new();
    for s in nodes.values() {
        by_street.entry(s.street_name.clone()).or_default().push(s);
    }
    by_street
        .into_iter()
        .map(|(name, mut segs)| {
            segs.sort_by_key(|s| s.index);
            for (k, s) in segs.iter().enumerate() {
                if s.index != k + 1 {
                    return Err(Error::Dataset(format!(
                        "street {name}: segment {} has index {}, expected {}",
                        s.id,
                        s.index,
                        k + 1
                    )));
                }
            }
            Ok((name, segs.into_iter().map(|s| s.id.clone()).collect()))
        })
        .collect()
}

/// Serialize to pretty JSON. Equal graphs give identical bytes.
pub fn save_graph(graph: &SpatialGraph) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(graph).expect("graph serializes");
    out.push(b'\n');
    out
}

pub fn load_graph(bytes: &[u8]) -> Result<SpatialGraph> {
    let value: Value =
        serde_json::from_slice(bytes).map_err(|e| Error::parse(json_location(&e), e))?;
    let found = value
        .get("schema_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::parse("schema_version", "missing or not an integer"))?;
    if found != GRAPH_SCHEMA_VERSION as u64 {
        return Err(Error::SchemaVersion {
            found: found.min(u32::MAX as u64) as u32,
            expected: GRAPH_SCHEMA_VERSION,
        });
    }
    let mut graph: SpatialGraph =
        serde_json::from_value(value).map_err(|e| Error::parse("graph document", e))?;
    let rebuilt = index_streets(&graph.nodes)?;
    if rebuilt != graph.street_index {
        return Err(Error::Dataset(
            "street_index disagrees with segment nodes".into(),
        ));
    }
    graph.reindex();
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{snap_and_segment, RawStreet};

    fn street(name: &str, pts: &[(f64, f64)]) -> RawStreet {
        RawStreet {
            name: name.into(),
            polyline: pts.iter().map(|&(x, y)| Point::new(x, y)).collect(),
            source_id: name.into(),
        }
    }

    fn graph(streets: &[RawStreet]) -> SpatialGraph {
        build_graph(&snap_and_segment(streets, 1.0).unwrap(), None).unwrap()
    }

    #[test]
    fn three_segments_two_chain_edges() {
        let g = graph(&[
            street("Main", &[(0., 0.), (100., 0.), (200., 0.), (300., 0.)]),
            street("X", &[(100., -50.), (100., 0.)]),
            street("Y", &[(200., 50.), (200., 0.)]),
        ]);
        let chains: Vec<_> = g
            .edges()
            .iter()
            .filter(|e| e.kind == EdgeKind::Chain)
            .collect();
        assert_eq!(chains.len(), 2);
        assert!(chains.iter().all(|e| e.relation.to_string() == "efbs"));
    }

    #[test]
    fn shared_start_right_branch() {
        // B starts where A starts and heads off to the right of A
        let g = graph(&[
            street("A", &[(0., 0.), (10., 0.)]),
            street("B", &[(0., 0.), (3., -10.)]),
        ]);
        let r = g.relation("A#001", "B#001").unwrap();
        assert_eq!(r.to_string(), "srsl");
        assert_eq!(g.relation("B#001", "A#001").unwrap(), r.converse());
    }

    #[test]
    fn neighbors_in_street_order() {
        let g = graph(&[
            street("Main", &[(0., 0.), (100., 0.), (200., 0.)]),
            street("Loop", &[(100., 0.), (100., 50.), (200., 50.), (200., 0.)]),
            street("Start", &[(0., 0.), (-10., 10.)]),
            street("Alone", &[(500., 500.), (600., 500.)]),
        ]);
        let n: Vec<_> = g
            .neighbors("Main")
            .unwrap()
            .into_iter()
            .map(|n| (n.street, n.location))
            .collect();
        assert_eq!(
            n,
            vec![
                ("Start".to_string(), Point::new(0., 0.)),
                ("Loop".to_string(), Point::new(100., 0.)),
                ("Loop".to_string(), Point::new(200., 0.)),
            ]
        );
        assert!(g.neighbors("Alone").unwrap().is_empty());
        assert!(matches!(g.neighbors("Nowhere"), Err(Error::NotFound(_))));
        assert_eq!(g.street_components().len(), 2);
    }

    #[test]
    fn save_load_round_trip_and_determinism() {
        let g = graph(&[
            street("Main", &[(0., 0.), (100., 0.), (200., 0.)]),
            street("Cross", &[(100., -50.), (100., 0.), (100.5, 50.)]),
        ]);
        let bytes = save_graph(&g);
        let back = load_graph(&bytes).unwrap();
        assert_eq!(back, g);
        assert_eq!(save_graph(&back), bytes);
        assert_eq!(
            back.relation("Cross#001", "Main#001"),
            g.relation("Cross#001", "Main#001")
        );

        assert!(matches!(
            load_graph(&bytes[..bytes.len() / 2]),
            Err(Error::Parse { .. })
        ));
        let text = String::from_utf8(bytes).unwrap().replacen(
            "\"schema_version\": 1",
            "\"schema_version\": 99",
            1,
        );
        assert!(matches!(
            load_graph(text.as_bytes()),
            Err(Error::SchemaVersion {
                found: 99,
                expected: 1
            })
        ));
    }

    #[test]
    fn bad_intersections_are_dataset_errors() {
        let seg = snap_and_segment(
            &[
                street("A", &[(0., 0.), (10., 0.)]),
                street("B", &[(10., 0.), (10., 10.)]),
            ],
            1.0,
        )
        .unwrap();
        let mut xs = seg.intersections.clone();
        xs[0].incident[0].segment = "Ghost#001".into();
        assert!(matches!(
            SpatialGraph::build(seg.segments.clone(), xs, None),
            Err(Error::Dataset(_))
        ));
        let mut xs = seg.intersections.clone();
        xs[0].location = Point::new(5., 5.);
        assert!(SpatialGraph::build(seg.segments, xs, None).is_err());
    }
}
