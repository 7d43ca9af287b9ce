//! Generated datasets for tests and benchmarks: a grid city as GeoJSON,
//! navigation tasks over it, and trial records with prescribed counts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::harness::{Label, LabelSource, TrialRecord};
use crate::rag::{Group, NavigationTask};

const STEMS: [&str; 16] = [
    "Ahorn",
    "Birken",
    "Eichen",
    "Erlen",
    "Föhren",
    "Kastanien",
    "Linden",
    "Ulmen",
    "Weiden",
    "Eschen",
    "Buchen",
    "Tannen",
    "Pappel",
    "Holunder",
    "Lärchen",
    "Mispel",
];
const KINDS: [&str; 4] = ["straße", "weg", "allee", "stieg"];

/// Name of the `i`-th generated street. Unique for every `i`.
pub fn street_name(i: usize) -> String {
    let stem = STEMS[i % STEMS.len()];
    let kind = KINDS[(i / STEMS.len()) % KINDS.len()];
    let round = i / (STEMS.len() * KINDS.len());
    if round == 0 {
        format!("{stem}{kind}")
    } else {
        format!("{stem}{kind} {}", round + 1)
    }
}

/// A grid of `n` named streets near (53.55 N, 9.9 E), half running east-west
/// and half north-south, every street crossing every street of the other
/// direction. Blocks are about 80 m; vertices are slightly jittered so the
/// streets are polylines, not straight lines. Needs at least two streets.
pub fn grid_city(n: usize, seed: u64) -> Vec<u8> {
    assert!(n >= 2, "a grid city needs at least two streets");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = n.div_ceil(2);
    let cols = n - rows;
    let (lat0, lon0): (f64, f64) = (53.55, 9.9);
    let dlat = 80.0 / 111_320.0;
    let dlon = dlat / lat0.to_radians().cos();
    let lat_at = |r: f64| lat0 + r * dlat;
    let lon_at = |c: f64| lon0 + c * dlon;
    let mut features = Vec::with_capacity(n);

    // crossings are exact grid points; the points between them wobble
    for r in 0..rows {
        let lat = lat_at(r as f64);
        let mut coords = vec![json!([
            lon_at(-0.5),
            lat + rng.gen_range(-0.05..0.05) * dlat
        ])];
        for c in 0..cols {
            coords.push(json!([lon_at(c as f64), lat]));
            coords.push(json!([
                lon_at(c as f64 + 0.5),
                lat + rng.gen_range(-0.05..0.05) * dlat
            ]));
        }
        features.push(feature(&street_name(r), coords, r));
    }
    for c in 0..cols {
        let lon = lon_at(c as f64);
        let mut coords = vec![json!([
            lon + rng.gen_range(-0.05..0.05) * dlon,
            lat_at(-0.5)
        ])];
        for r in 0..rows {
            coords.push(json!([lon, lat_at(r as f64)]));
            coords.push(json!([
                lon + rng.gen_range(-0.05..0.05) * dlon,
                lat_at(r as f64 + 0.5)
            ]));
        }
        features.push(feature(&street_name(rows + c), coords, rows + c));
    }
    serde_json::to_vec(&json!({"type": "FeatureCollection", "features": features}))
        .expect("serializable")
}

fn feature(name: &str, coords: Vec<Value>, id: usize) -> Value {
    json!({
        "type": "Feature",
        "id": format!("way/{}", 1000 + id),
        "properties": {"name": name, "highway": "residential"},
        "geometry": {"type": "LineString", "coordinates": coords},
    })
}

/// `count` tasks between distinct random streets of a [`grid_city`] of
/// `n` streets.
pub fn grid_tasks(city: &str, n: usize, count: usize, seed: u64) -> Vec<NavigationTask> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..n).map(street_name).collect();
    (0..count)
        .map(|i| {
            let pair: Vec<&String> = names.choose_multiple(&mut rng, 2).collect();
            NavigationTask {
                id: format!("{}-{:03}", city.to_lowercase(), i + 1),
                city: city.to_string(),
                origin: pair[0].clone(),
                destination: pair[1].clone(),
                origin_streets: Vec::new(),
                expected_region: None,
            }
        })
        .collect()
}

/// One prescribed cell of a results table.
#[derive(Clone, Debug)]
pub struct CountCell {
    pub city: String,
    pub provider: String,
    pub group: Group,
    pub trials: usize,
    pub successes: usize,
}

/// Trial records reproducing the given counts exactly; completions are
/// placeholders.
pub fn records_with_counts(cells: &[CountCell]) -> Vec<TrialRecord> {
    let mut out = Vec::new();
    for cell in cells {
        for i in 0..cell.trials {
            let success = i < cell.successes;
            out.push(TrialRecord {
                task_id: format!("{}-{:03}", cell.city.to_lowercase(), i + 1),
                city: cell.city.clone(),
                provider: cell.provider.clone(),
                group: cell.group,
                prompt_hash: String::new(),
                completion: String::new(),
                route: Vec::new(),
                label: if success {
                    Label::Success
                } else {
                    Label::Failure
                },
                label_source: LabelSource::ManualOverride,
                reason: None,
                latency_ms: 0,
                attempts: 0,
            });
        }
    }
    out
}

/// Cells of the reported study: 20 tasks per city and provider in each
/// group, no control-group successes.
pub fn study_cells() -> Vec<CountCell> {
    let test = [
        ("Hamburg", "Gemini 2.5 Pro", 18),
        ("Hamburg", "Claude 4.5", 17),
        ("Hamburg", "GPT-4o", 17),
        ("Münster", "Gemini 2.5 Pro", 10),
        ("Münster", "Claude 4.5", 9),
        ("Münster", "GPT-4o", 4),
    ];
    let mut cells = Vec::new();
    for group in [Group::Control, Group::Test] {
        for (city, provider, successes) in test {
            cells.push(CountCell {
                city: city.into(),
                provider: provider.into(),
                group,
                trials: 20,
                successes: if group == Group::Test { successes } else { 0 },
            });
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::load_geojson;

    #[test]
    fn names_are_unique() {
        let names: std::collections::HashSet<_> = (0..200).map(street_name).collect();
        assert_eq!(names.len(), 200);
    }

    #[test]
    fn grid_has_requested_streets() {
        let loaded = load_geojson(&grid_city(10, 1)).unwrap();
        assert_eq!(loaded.streets.len(), 10);
        assert_eq!(grid_city(10, 1), grid_city(10, 1));
    }

    #[test]
    fn tasks_are_distinct_pairs() {
        for t in grid_tasks("Grid", 10, 50, 3) {
            assert_ne!(t.origin, t.destination);
        }
    }
}
