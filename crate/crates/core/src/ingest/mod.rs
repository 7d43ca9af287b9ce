//! Street geometry ingestion: GeoJSON loading, Overpass fetching, projection
//! to a local planar frame, node snapping and segmentation at crossings.

mod load;
pub mod overpass;
pub mod projection;
mod segment;

use serde::{Deserialize, Serialize};

use crate::dipole::Dipole;
use crate::geometry::Point;

pub use self::load::{canonical_street_name, load_geojson, LoadedStreets};
pub use self::overpass::{fetch_overpass, BoundingBox, OverpassClient};
pub use self::projection::{project, LonLat, Projection};
pub use self::segment::{snap_and_segment, Segmentation, DEFAULT_SNAP_TOLERANCE};

/// A named street polyline in projected meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawStreet {
    pub name: String,
    pub polyline: Vec<Point>,
    pub source_id: String,
}

/// A piece of a street between two consecutive crossings (or street ends).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreetSegment {
    pub id: String,
    pub street_name: String,
    /// 1-based position within the street.
    pub index: usize,
    pub polyline: Vec<Point>,
    /// From the first to the last polyline point.
    pub dipole: Dipole,
}

impl StreetSegment {
    pub fn start(&self) -> Point {
        self.dipole.start()
    }

    pub fn end(&self) -> Point {
        self.dipole.end()
    }

    pub fn length(&self) -> f64 {
        self.polyline.windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

/// Stable node id for segment `index` of `street`.
pub fn segment_id(street: &str, index: usize) -> String {
    format!("{street}#{index:03}")
}

/// What the intersection location is for the incident street.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndpointRole {
    /// The street begins here.
    Start,
    /// The street ends here.
    End,
    /// The street runs through and was split here.
    InteriorSplit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Incidence {
    pub segment: String,
    pub role: EndpointRole,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub location: Point,
    pub incident: Vec<Incidence>,
}
