//! Natural-language rendering of the street graph, one section per street:
//!
//! ```text
//! === Ansorgestraße ===
//! Ansorgestraße begins at the intersection with Emkendorfstraße, Liebermannstraße.
//! Roosens Weg then branches off to the right.
//! ```

use std::fmt;

use crate::dipole::{point_class, PointClass};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::graph::SpatialGraph;
use crate::ingest::{Intersection, StreetSegment};

const BEGINS: &str = " begins at the intersection with ";
const BRANCHES: &str = " then branches off ";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
    StraightAhead,
}

impl Side {
    pub fn phrase(self) -> &'static str {
        match self {
            Side::Left => "to the left",
            Side::Right => "to the right",
            Side::StraightAhead => "straight ahead",
        }
    }

    fn from_phrase(s: &str) -> Option<Side> {
        match s {
            "to the left" => Some(Side::Left),
            "to the right" => Some(Side::Right),
            "straight ahead" => Some(Side::StraightAhead),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Line {
    /// `<street> begins at the intersection with <a>, <b>.`
    Begins {
        street: String,
        neighbors: Vec<String>,
    },
    /// `<street> then branches off to the left.`, `... to the right.` or
    /// `... straight ahead.`
    Branch { street: String, side: Side },
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Line::Begins { street, neighbors } => {
                write!(f, "{street}{BEGINS}{}.", neighbors.join(", "))
            }
            Line::Branch { street, side } => write!(f, "{street}{BRANCHES}{}.", side.phrase()),
        }
    }
}

impl Line {
    pub fn parse(text: &str) -> Result<Line> {
        let bad = || Error::parse(format!("line {text:?}"), "not a street description line");
        let body = text.strip_suffix('.').ok_or_else(bad)?;
        if let Some((street, rest)) = body.split_once(BRANCHES) {
            let side = Side::from_phrase(rest).ok_or_else(bad)?;
            return Ok(Line::Branch {
                street: street.to_string(),
                side,
            });
        }
        if let Some((street, rest)) = body.split_once(BEGINS) {
            return Ok(Line::Begins {
                street: street.to_string(),
                neighbors: rest.split(", ").map(str::to_string).collect(),
            });
        }
        Err(bad())
    }

    /// Streets this line mentions as met along the described street.
    pub fn neighbors(&self) -> Vec<&str> {
        match self {
            Line::Begins { neighbors, .. } => neighbors.iter().map(String::as_str).collect(),
            Line::Branch { street, .. } => vec![street.as_str()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Section {
    pub street: String,
    pub lines: Vec<Line>,
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "=== {} ===", self.street)?;
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerbalizationDocument {
    pub sections: Vec<Section>,
}

impl VerbalizationDocument {
    pub fn section(&self, street: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.street == street)
    }

    pub fn rendered(&self) -> String {
        self.to_string()
    }

    /// Parse a rendered document back into its structured form.
    pub fn parse(text: &str) -> Result<VerbalizationDocument> {
        let mut sections: Vec<Section> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            if raw.is_empty() {
                continue;
            }
            if let Some(name) = raw
                .strip_prefix("=== ")
                .and_then(|r| r.strip_suffix(" ==="))
            {
                sections.push(Section {
                    street: name.to_string(),
                    lines: Vec::new(),
                });
                continue;
            }
            let section = sections.last_mut().ok_or_else(|| {
                Error::parse(format!("line {}", n + 1), "text before the first header")
            })?;
            let line = Line::parse(raw).map_err(|e| match e {
                Error::Parse { message, .. } => Error::parse(format!("line {}", n + 1), message),
                other => other,
            })?;
            section.lines.push(line);
        }
        Ok(VerbalizationDocument { sections })
    }
}

impl fmt::Display for VerbalizationDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, section) in self.sections.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{section}")?;
        }
        Ok(())
    }
}

/// Side of the branching street, seen while travelling along `current`.
pub fn branch_side(current: &StreetSegment, far_end: Point) -> Side {
    match point_class(&current.dipole, far_end).unwrap_or(PointClass::Front) {
        PointClass::Left => Side::Left,
        PointClass::Right => Side::Right,
        PointClass::Front => Side::StraightAhead,
        other => {
            log::debug!(
                "branch at {} from {} lies {} of the segment, rendered as straight ahead",
                current.end(),
                current.id,
                other.letter()
            );
            Side::StraightAhead
        }
    }
}

/// The segment of `street` incident at `x`, leaving it if possible, and its
/// endpoint away from `x`.
fn branch_far_end(graph: &SpatialGraph, x: &Intersection, street: &str) -> Option<Point> {
    let mut incoming = None;
    for inc in &x.incident {
        let seg = graph.segment(&inc.segment)?;
        if seg.street_name != street {
            continue;
        }
        if seg.start() == x.location {
            return Some(seg.end());
        }
        incoming.get_or_insert(seg.start());
    }
    incoming
}

pub fn verbalize_street(graph: &SpatialGraph, street: &str) -> Result<Section> {
    let segments = graph.street_segments(street)?;
    let mut lines = Vec::new();
    let mut stops: Vec<(Point, &StreetSegment)> = vec![(segments[0].start(), segments[0])];
    stops.extend(segments.iter().map(|s| (s.end(), *s)));
    for (p, current) in stops {
        let Some(x) = graph.intersection_at(p) else {
            continue;
        };
        let others = graph.streets_at(x, street);
        if others.is_empty() {
            continue;
        }
        if lines.is_empty() {
            lines.push(Line::Begins {
                street: street.to_string(),
                neighbors: others,
            });
            continue;
        }
        for other in others {
            let far = branch_far_end(graph, x, &other).expect("street is incident at intersection");
            lines.push(Line::Branch {
                side: branch_side(current, far),
                street: other,
            });
        }
    }
    Ok(Section {
        street: street.to_string(),
        lines,
    })
}

pub fn verbalize_area(graph: &SpatialGraph) -> Result<VerbalizationDocument> {
    if graph.is_empty() {
        return Err(Error::EmptyDataset("graph has no streets".into()));
    }
    let sections = graph
        .street_names()
        .into_iter()
        .map(|name| verbalize_street(graph, name))
        .collect::<Result<_>>()?;
    Ok(VerbalizationDocument { sections })
}

/// Verbalization restricted to the named streets, in document order.
pub fn verbalize_streets<S: AsRef<str>>(
    graph: &SpatialGraph,
    streets: &[S],
) -> Result<VerbalizationDocument> {
    let mut names: Vec<&str> = streets.iter().map(AsRef::as_ref).collect();
    crate::collate::sort_names(&mut names);
    names.dedup();
    let sections = names
        .into_iter()
        .map(|name| verbalize_street(graph, name))
        .collect::<Result<_>>()?;
    Ok(VerbalizationDocument { sections })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
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
    fn sides_follow_travel_direction() {
        let g = graph(&[
            street("Main", &[(0., 0.), (100., 0.), (200., 0.), (300., 0.)]),
            street("North", &[(100., 0.), (100., 80.)]),
            street("South", &[(200., -80.), (200., 0.)]),
            street("Ahead", &[(300., 0.), (400., 0.)]),
            street("First", &[(0., 0.), (0., -50.)]),
        ]);
        let s = verbalize_street(&g, "Main").unwrap();
        let text: Vec<String> = s.lines.iter().map(ToString::to_string).collect();
        assert_eq!(
            text,
            [
                "Main begins at the intersection with First.",
                "North then branches off to the left.",
                "South then branches off to the right.",
                "Ahead then branches off straight ahead.",
            ]
        );
    }

    #[test]
    fn no_start_crossing_uses_first_crossing() {
        let g = graph(&[
            street("Main", &[(0., 0.), (100., 0.), (200., 0.)]),
            street("X", &[(100., -50.), (100., 0.), (100., 50.)]),
            street("Y", &[(200., 0.), (200., 50.)]),
        ]);
        let s = verbalize_street(&g, "Main").unwrap();
        assert_eq!(
            s.lines,
            [
                Line::Begins {
                    street: "Main".into(),
                    neighbors: vec!["X".into()]
                },
                Line::Branch {
                    street: "Y".into(),
                    side: Side::Left
                },
            ]
        );
    }

    #[test]
    fn isolated_street_is_header_only() {
        let g = graph(&[street("Solo", &[(0., 0.), (10., 0.)])]);
        let doc = verbalize_area(&g).unwrap();
        assert_eq!(doc.rendered(), "=== Solo ===\n");
    }

    #[test]
    fn round_trip_parse() {
        let g = graph(&[
            street("Main", &[(0., 0.), (100., 0.), (200., 0.)]),
            street("Cross", &[(100., -50.), (100., 0.), (100., 50.)]),
            street("Öse", &[(200., 0.), (250., 30.)]),
        ]);
        let doc = verbalize_area(&g).unwrap();
        let text = doc.rendered();
        assert_eq!(VerbalizationDocument::parse(&text).unwrap(), doc);
        assert_eq!(verbalize_area(&g).unwrap().rendered(), text);
        let names: Vec<&str> = doc.sections.iter().map(|s| s.street.as_str()).collect();
        assert_eq!(names, ["Cross", "Main", "Öse"]);
    }

    #[test]
    fn bad_lines_do_not_parse() {
        assert!(Line::parse("Main goes somewhere.").is_err());
        assert!(Line::parse("X then branches off to the up.").is_err());
        assert!(VerbalizationDocument::parse("X then branches off to the left.").is_err());
    }
}
