use std::collections::HashMap;

use super::{segment_id, EndpointRole, Incidence, Intersection, RawStreet, StreetSegment};
use crate::dipole::Dipole;
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Default node snapping distance in meters.
pub const DEFAULT_SNAP_TOLERANCE: f64 = 1.0;

#[derive(Clone, Debug, Default)]
pub struct Segmentation {
    pub segments: Vec<StreetSegment>,
    pub intersections: Vec<Intersection>,
    /// Streets that collapsed to a single point after snapping.
    pub dropped: Vec<String>,
}

impl Segmentation {
    /// Segments of `street` in order.
    pub fn street_segments<'a>(
        &'a self,
        street: &'a str,
    ) -> impl Iterator<Item = &'a StreetSegment> + 'a {
        self.segments
            .iter()
            .filter(move |s| s.street_name == street)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    /// The smaller index wins, so each cluster's root is its first vertex.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Snap nearby vertices of different streets together and split every street
/// at each location it shares with another street.
///
/// Vertices of different streets within `tolerance` meters end up at one
/// exact location, that of the first such vertex in input order. Segments
/// keep the digitization order of their street.
pub fn snap_and_segment(streets: &[RawStreet], tolerance: f64) -> Result<Segmentation> {
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "snap tolerance must be positive, got {tolerance}"
        )));
    }
    for street in streets {
        for p in &street.polyline {
            p.checked()
                .map_err(|e| Error::Dataset(format!("street {}: {e}", street.name)))?;
        }
    }

    // flat vertex table: (street index, point)
    let vertices: Vec<(usize, Point)> = streets
        .iter()
        .enumerate()
        .flat_map(|(si, s)| s.polyline.iter().map(move |p| (si, *p)))
        .collect();
    let mut uf = UnionFind::new(vertices.len());
    let cell = |p: Point| {
        (
            (p.x / tolerance).floor() as i64,
            (p.y / tolerance).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, (_, p)) in vertices.iter().enumerate() {
        grid.entry(cell(*p)).or_default().push(i);
    }
    let tol_sq = tolerance * tolerance;
    for (i, (si, p)) in vertices.iter().enumerate() {
        let (cx, cy) = cell(*p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(bucket) = grid.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &j in bucket {
                    let (sj, q) = vertices[j];
                    if j > i && sj != *si && p.distance_sq(q) <= tol_sq {
                        uf.union(i, j);
                    }
                }
            }
        }
    }

    // snapped polylines, consecutive duplicates removed
    let mut snapped: Vec<Vec<Point>> = Vec::with_capacity(streets.len());
    let mut offset = 0;
    for street in streets {
        let mut line: Vec<Point> = (0..street.polyline.len())
            .map(|k| vertices[uf.find(offset + k)].1)
            .collect();
        offset += street.polyline.len();
        line.dedup();
        snapped.push(line);
    }

    let mut dropped = Vec::new();
    // location -> streets touching it, in first-seen order
    let mut touching: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    let mut location_order: Vec<Point> = Vec::new();
    for (si, line) in snapped.iter().enumerate() {
        if line.len() < 2 {
            continue;
        }
        for p in line {
            let entry = touching.entry(p.key()).or_default();
            if entry.is_empty() {
                location_order.push(*p);
            }
            if !entry.contains(&si) {
                entry.push(si);
            }
        }
    }
    let shared = |p: &Point| touching.get(&p.key()).is_some_and(|s| s.len() >= 2);

    let mut segments = Vec::new();
    for (si, line) in snapped.iter().enumerate() {
        let name = &streets[si].name;
        if line.len() < 2 {
            log::warn!("street {name} collapsed to a point after snapping, dropped");
            dropped.push(name.clone());
            continue;
        }
        let mut pieces: Vec<Vec<Point>> = Vec::new();
        let mut current = vec![line[0]];
        for (k, p) in line.iter().enumerate().skip(1) {
            current.push(*p);
            if k + 1 < line.len() && shared(p) {
                pieces.push(std::mem::replace(&mut current, vec![*p]));
            }
        }
        pieces.push(current);

        // a closed piece has no dipole; split it at its middle vertex
        let pieces: Vec<Vec<Point>> = pieces
            .into_iter()
            .flat_map(|piece| {
                if piece.len() >= 3 && piece[0] == piece[piece.len() - 1] {
                    let mid = piece.len() / 2;
                    vec![piece[..=mid].to_vec(), piece[mid..].to_vec()]
                } else {
                    vec![piece]
                }
            })
            .collect();

        for (k, polyline) in pieces.into_iter().enumerate() {
            let index = k + 1;
            let id = segment_id(name, index);
            let dipole = Dipole::new(polyline[0], polyline[polyline.len() - 1])
                .map_err(|e| Error::Dataset(format!("segment {id}: {e}")))?;
            segments.push(StreetSegment {
                id,
                street_name: name.clone(),
                index,
                polyline,
                dipole,
            });
        }
    }

    // segments per street for role lookup
    let mut last_index: HashMap<&str, usize> = HashMap::new();
    for s in &segments {
        last_index.insert(s.street_name.as_str(), s.index);
    }
    let mut by_location: HashMap<(u64, u64), Vec<Incidence>> = HashMap::new();
    for s in &segments {
        let last = last_index[s.street_name.as_str()];
        for (p, at_start) in [(s.start(), true), (s.end(), false)] {
            if !shared(&p) {
                continue;
            }
            let role = match (at_start, s.index == 1, s.index == last) {
                (true, true, _) => EndpointRole::Start,
                (false, _, true) => EndpointRole::End,
                _ => EndpointRole::InteriorSplit,
            };
            by_location.entry(p.key()).or_default().push(Incidence {
                segment: s.id.clone(),
                role,
            });
        }
    }
    let intersections = location_order
        .into_iter()
        .filter_map(|loc| {
            by_location.remove(&loc.key()).map(|incident| Intersection {
                location: loc,
                incident,
            })
        })
        .collect();

    Ok(Segmentation {
        segments,
        intersections,
        dropped,
    })
}
