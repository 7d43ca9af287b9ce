#![allow(dead_code)]

use dipolar_core::graph::{build_graph, SpatialGraph};
use dipolar_core::ingest::{snap_and_segment, RawStreet};
use dipolar_core::Point;

pub fn street(name: &str, pts: &[(f64, f64)]) -> RawStreet {
    RawStreet {
        name: name.into(),
        polyline: pts.iter().map(|&(x, y)| Point::new(x, y)).collect(),
        source_id: name.into(),
    }
}

pub fn graph_of(streets: &[RawStreet]) -> SpatialGraph {
    build_graph(&snap_and_segment(streets, 1.0).unwrap(), None).unwrap()
}

/// Fourteen one-segment streets around two hubs, (0,0) for A..G and
/// (100,0) for H..N.
pub fn two_hub_area() -> Vec<RawStreet> {
    vec![
        street("A", &[(0., 0.), (10., 0.)]),
        street("B", &[(-10., 0.), (0., 0.)]),
        street("C", &[(5., -10.), (0., 0.)]),
        street("D", &[(5., -10.), (10., 0.)]),
        street("E", &[(10., 0.), (20., 0.)]),
        street("F", &[(10., 0.), (10., 10.)]),
        street("G", &[(0., 0.), (0., 10.)]),
        street("H", &[(100., 0.), (110., 0.)]),
        street("I", &[(100., 0.), (90., 0.)]),
        street("J", &[(100., 0.), (100., -10.)]),
        street("K", &[(110., 0.), (110., -10.)]),
        street("L", &[(120., 0.), (110., 0.)]),
        street("M", &[(105., 10.), (110., 0.)]),
        street("N", &[(105., 10.), (100., 0.)]),
    ]
}

/// The twelve expected relations of the two-hub layout.
pub const TWO_HUB_RELATIONS: [(&str, &str, &str); 12] = [
    ("A", "bsef", "B"),
    ("A", "rser", "C"),
    ("A", "rele", "D"),
    ("A", "efbs", "E"),
    ("A", "ells", "F"),
    ("A", "slsr", "G"),
    ("H", "sbsb", "I"),
    ("H", "srsl", "J"),
    ("H", "errs", "K"),
    ("H", "fefe", "L"),
    ("H", "lere", "M"),
    ("H", "lsel", "N"),
];

/// A small planar neighbourhood (meters) shaped after the Hamburg streets
/// around Ansorgestraße.
pub fn hamburg_excerpt() -> Vec<RawStreet> {
    vec![
        street("Agathe-Lasch-Weg", &[(-100., 0.), (0., 0.), (300., 0.)]),
        street("Holmbrook", &[(-100., 0.), (-200., 60.)]),
        street("Paul-Ehrlich-Straße", &[(-100., 0.), (-200., -60.)]),
        street("Emkendorfstraße", &[(0., 0.), (0., -100.), (0., -300.)]),
        street(
            "Ansorgestraße",
            &[(0., -100.), (100., -100.), (250., -100.)],
        ),
        street("Liebermannstraße", &[(0., -100.), (-150., -150.)]),
        street("Roosens Weg", &[(100., -100.), (100., -250.)]),
    ]
}

pub const ANSORGESTRASSE_SECTION: &str = "=== Ansorgestraße ===
Ansorgestraße begins at the intersection with Emkendorfstraße, Liebermannstraße.
Roosens Weg then branches off to the right.
";

pub const HOLMBROOK_SECTION: &str = "=== Holmbrook ===
Holmbrook begins at the intersection with Agathe-Lasch-Weg, Paul-Ehrlich-Straße.
";
