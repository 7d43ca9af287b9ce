use std::collections::HashMap;

use geojson::{GeoJson, GeometryValue, Position};
use serde_json::Value;

use super::projection::{LonLat, Projection};
use super::RawStreet;
use crate::error::{json_location, Error, Result};

/// Streets read from a GeoJSON document, already projected.
#[derive(Clone, Debug)]
pub struct LoadedStreets {
    pub streets: Vec<RawStreet>,
    pub projection: Projection,
    /// Line features without a usable `name` property.
    pub dropped_unnamed: usize,
    /// Features whose geometry is not a (multi)line string.
    pub ignored_geometries: usize,
}

struct Piece {
    coords: Vec<LonLat>,
    source: String,
}

/// Parse a GeoJSON FeatureCollection of named (Multi)LineStrings.
///
/// Features sharing a name are chained end to end wherever their endpoints
/// coincide exactly, flipping a piece when it was digitized the other way.
/// Pieces of one name that never connect stay separate streets; the second
/// and later ones get a ` (2)`, ` (3)` suffix.
pub fn load_geojson(document: &[u8]) -> Result<LoadedStreets> {
    let value: Value =
        serde_json::from_slice(document).map_err(|e| Error::parse(json_location(&e), e))?;
    let collection = match serde_json::from_value::<GeoJson>(value) {
        Ok(GeoJson::FeatureCollection(fc)) => fc,
        Ok(other) => {
            return Err(Error::parse(
                "document root",
                format!(
                    "expected a FeatureCollection, found {}",
                    geojson_kind(&other)
                ),
            ))
        }
        Err(e) => return Err(Error::parse("document root", e)),
    };

    let mut order: Vec<String> = Vec::new();
    let mut by_name: HashMap<String, Vec<Piece>> = HashMap::new();
    let mut dropped_unnamed = 0;
    let mut ignored_geometries = 0;

    for (i, feature) in collection.features.iter().enumerate() {
        let lines: Vec<&Vec<Position>> = match feature.geometry.as_ref().map(|g| &g.value) {
            Some(GeometryValue::LineString { coordinates }) => vec![coordinates],
            Some(GeometryValue::MultiLineString { coordinates }) => coordinates.iter().collect(),
            _ => {
                ignored_geometries += 1;
                continue;
            }
        };
        let name = feature
            .properties
            .as_ref()
            .and_then(|p| p.get("name"))
            .and_then(canonical_street_name);
        let Some(name) = name else {
            dropped_unnamed += 1;
            continue;
        };
        let source = source_id(feature, i);
        for (j, line) in lines.into_iter().enumerate() {
            let coords = line
                .iter()
                .enumerate()
                .map(|(k, pos)| position(pos, &format!("features[{i}] line {j} position {k}")))
                .collect::<Result<Vec<_>>>()?;
            let mut coords = coords;
            coords.dedup();
            if coords.len() < 2 {
                log::warn!("feature {source} ({name}): line {j} has fewer than two distinct positions, skipped");
                continue;
            }
            if !by_name.contains_key(&name) {
                order.push(name.clone());
            }
            by_name.entry(name.clone()).or_default().push(Piece {
                coords,
                source: source.clone(),
            });
        }
    }
    if dropped_unnamed > 0 {
        log::warn!("dropped {dropped_unnamed} unnamed line features");
    }
    if order.is_empty() {
        return Err(Error::EmptyDataset("no named line features".into()));
    }

    let mut chains: Vec<(String, Piece)> = Vec::new();
    for name in order {
        let pieces = by_name.remove(&name).unwrap_or_default();
        for (k, chain) in merge_pieces(pieces).into_iter().enumerate() {
            let label = if k == 0 {
                name.clone()
            } else {
                format!("{name} ({})", k + 1)
            };
            chains.push((label, chain));
        }
    }

    let all: Vec<LonLat> = chains
        .iter()
        .flat_map(|(_, c)| c.coords.iter().copied())
        .collect();
    let projection = Projection::centered_on(&all)?;
    let streets = chains
        .into_iter()
        .map(|(name, piece)| RawStreet {
            name,
            polyline: piece
                .coords
                .iter()
                .map(|p| projection.project(*p))
                .collect(),
            source_id: piece.source,
        })
        .collect();
    Ok(LoadedStreets {
        streets,
        projection,
        dropped_unnamed,
        ignored_geometries,
    })
}

fn geojson_kind(g: &GeoJson) -> &'static str {
    match g {
        GeoJson::Geometry(_) => "a Geometry",
        GeoJson::Feature(_) => "a Feature",
        GeoJson::FeatureCollection(_) => "a FeatureCollection",
    }
}

fn position(pos: &Position, at: &str) -> Result<LonLat> {
    let s = pos.as_slice();
    if s.len() < 2 {
        return Err(Error::parse(at, "position needs at least two numbers"));
    }
    let p = LonLat::new(s[0], s[1]);
    if !p.lon.is_finite() || !p.lat.is_finite() || p.lat.abs() > 90.0 || p.lon.abs() > 180.0 {
        return Err(Error::parse(
            at,
            format!("invalid position [{}, {}]", s[0], s[1]),
        ));
    }
    Ok(p)
}

fn source_id(feature: &geojson::Feature, index: usize) -> String {
    if let Some(id) = &feature.id {
        return match id {
            geojson::feature::Id::String(s) => s.clone(),
            geojson::feature::Id::Number(n) => n.to_string(),
        };
    }
    let props = feature.properties.as_ref();
    for key in ["@id", "osm_id", "osmid", "id"] {
        match props.and_then(|p| p.get(key)) {
            Some(Value::String(s)) => return s.clone(),
            Some(Value::Number(n)) => return n.to_string(),
            _ => {}
        }
    }
    format!("feature-{index}")
}

/// Normalize a `name` property to a display name. Lists of names (a JSON
/// array, or the stringified `['A', 'B']` form some exporters produce) are
/// joined with `" / "`.
pub fn canonical_street_name(value: &Value) -> Option<String> {
    let parts: Vec<String> = match value {
        Value::String(s) => {
            let s = s.trim();
            if s.len() > 2 && s.starts_with('[') && s.ends_with(']') {
                s[1..s.len() - 1]
                    .split(',')
                    .map(|p| {
                        p.trim()
                            .trim_matches(|c| c == '\'' || c == '"')
                            .trim()
                            .to_string()
                    })
                    .collect()
            } else {
                vec![s.to_string()]
            }
        }
        Value::Array(items) => items
            .iter()
            .filter_map(|v| v.as_str())
            .map(|s| s.trim().to_string())
            .collect(),
        _ => return None,
    };
    let mut seen: Vec<String> = Vec::new();
    for p in parts {
        if !p.is_empty() && !seen.contains(&p) {
            seen.push(p);
        }
    }
    if seen.is_empty() {
        None
    } else {
        Some(seen.join(" / "))
    }
}

fn merge_pieces(mut remaining: Vec<Piece>) -> Vec<Piece> {
    let mut chains = Vec::new();
    while !remaining.is_empty() {
        let mut chain = remaining.remove(0);
        let mut sources = vec![chain.source.clone()];
        loop {
            let head = chain.coords[0];
            let tail = *chain.coords.last().expect("non-empty");
            let hit = remaining.iter().position(|p| {
                let (s, e) = (p.coords[0], *p.coords.last().expect("non-empty"));
                s == tail || e == head || e == tail || s == head
            });
            let Some(i) = hit else { break };
            let mut piece = remaining.remove(i);
            let (s, e) = (piece.coords[0], *piece.coords.last().expect("non-empty"));
            if s == tail {
                chain.coords.extend_from_slice(&piece.coords[1..]);
            } else if e == head {
                piece.coords.extend_from_slice(&chain.coords[1..]);
                chain.coords = piece.coords;
            } else if e == tail {
                piece.coords.reverse();
                chain.coords.extend_from_slice(&piece.coords[1..]);
            } else {
                piece.coords.reverse();
                piece.coords.extend_from_slice(&chain.coords[1..]);
                chain.coords = piece.coords;
            }
            sources.push(piece.source);
        }
        chain.source = sources.join(",");
        chains.push(chain);
    }
    chains
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn feature(name: Value, coords: Value) -> Value {
        json!({
            "type": "Feature",
            "properties": { "name": name },
            "geometry": { "type": "LineString", "coordinates": coords }
        })
    }

    fn collection(features: Vec<Value>) -> Vec<u8> {
        serde_json::to_vec(&json!({ "type": "FeatureCollection", "features": features })).unwrap()
    }

    #[test]
    fn single_named_line() {
        let doc = collection(vec![feature(
            json!("Hafenweg"),
            json!([[7.63, 51.95], [7.64, 51.95]]),
        )]);
        let loaded = load_geojson(&doc).unwrap();
        assert_eq!(loaded.streets.len(), 1);
        assert_eq!(loaded.streets[0].name, "Hafenweg");
        assert_eq!(loaded.streets[0].polyline.len(), 2);
    }

    #[test]
    fn pieces_of_one_name_are_chained_in_either_direction() {
        let doc = collection(vec![
            feature(json!("A"), json!([[7.0, 51.0], [7.001, 51.0]])),
            feature(json!("A"), json!([[7.002, 51.0], [7.001, 51.0]])),
            feature(json!("A"), json!([[6.999, 51.0], [7.0, 51.0]])),
        ]);
        let loaded = load_geojson(&doc).unwrap();
        assert_eq!(loaded.streets.len(), 1);
        let xs: Vec<f64> = loaded.streets[0].polyline.iter().map(|p| p.x).collect();
        assert_eq!(xs.len(), 4);
        assert!(xs.windows(2).all(|w| w[0] < w[1]), "{xs:?}");
    }

    #[test]
    fn disconnected_pieces_become_suffixed_streets() {
        let doc = collection(vec![
            feature(json!("A"), json!([[7.0, 51.0], [7.001, 51.0]])),
            feature(json!("A"), json!([[7.1, 51.0], [7.101, 51.0]])),
        ]);
        let names: Vec<_> = load_geojson(&doc)
            .unwrap()
            .streets
            .into_iter()
            .map(|s| s.name)
            .collect();
        assert_eq!(names, ["A", "A (2)"]);
    }

    #[test]
    fn unnamed_features_are_counted() {
        let doc = collection(vec![
            feature(Value::Null, json!([[7.0, 51.0], [7.001, 51.0]])),
            feature(json!("B"), json!([[7.0, 51.0], [7.0, 51.001]])),
        ]);
        let loaded = load_geojson(&doc).unwrap();
        assert_eq!(loaded.dropped_unnamed, 1);
        assert_eq!(loaded.streets.len(), 1);
    }

    #[test]
    fn empty_and_malformed_documents() {
        let doc = collection(vec![feature(
            Value::Null,
            json!([[7.0, 51.0], [7.001, 51.0]]),
        )]);
        assert!(matches!(load_geojson(&doc), Err(Error::EmptyDataset(_))));
        match load_geojson(b"{\"type\": \"FeatureCollection\",\n \"features\": [") {
            Err(Error::Parse { location, .. }) => {
                assert!(location.starts_with("line 2"), "{location}")
            }
            other => panic!("{other:?}"),
        }
        let point = br#"{"type":"Feature","properties":{},"geometry":{"type":"Point","coordinates":[1,2]}}"#;
        assert!(matches!(load_geojson(point), Err(Error::Parse { .. })));
    }

    #[test]
    fn multi_names_are_joined() {
        assert_eq!(
            canonical_street_name(&json!("['Walderseestraße', 'Behringstraße']")).as_deref(),
            Some("Walderseestraße / Behringstraße")
        );
        assert_eq!(
            canonical_street_name(&json!(["A", "B", "A"])).as_deref(),
            Some("A / B")
        );
        assert_eq!(canonical_street_name(&json!("  ")), None);
        assert_eq!(canonical_street_name(&json!(3)), None);
    }
}
