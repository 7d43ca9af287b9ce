use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Length of one degree of latitude, in meters.
pub const METERS_PER_DEGREE: f64 = 111_320.0;

pub const MAX_ABS_LATITUDE: f64 = 85.0;

/// A WGS84 position, serialized as `[lon, lat]` like GeoJSON.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LonLat {
    pub lon: f64,
    pub lat: f64,
}

impl LonLat {
    pub const fn new(lon: f64, lat: f64) -> Self {
        LonLat { lon, lat }
    }

    fn validate(&self) -> Result<()> {
        if !self.lon.is_finite() || !self.lat.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite position [{}, {}]",
                self.lon, self.lat
            )));
        }
        if self.lat.abs() > MAX_ABS_LATITUDE {
            return Err(Error::InvalidInput(format!(
                "latitude {} outside ±{MAX_ABS_LATITUDE}°",
                self.lat
            )));
        }
        Ok(())
    }
}

impl Serialize for LonLat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [self.lon, self.lat].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LonLat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [lon, lat] = <[f64; 2]>::deserialize(deserializer)?;
        Ok(LonLat { lon, lat })
    }
}

/// Equirectangular projection about a fixed origin. Good to well under a
/// meter across a few kilometers, which is all a study area needs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LonLat", into = "LonLat")]
pub struct Projection {
    origin: LonLat,
    cos_lat: f64,
}

impl TryFrom<LonLat> for Projection {
    type Error = Error;

    fn try_from(origin: LonLat) -> Result<Self> {
        Projection::new(origin)
    }
}

impl From<Projection> for LonLat {
    fn from(p: Projection) -> Self {
        p.origin
    }
}

impl Projection {
    pub fn new(origin: LonLat) -> Result<Self> {
        origin.validate()?;
        Ok(Projection {
            origin,
            cos_lat: origin.lat.to_radians().cos(),
        })
    }

    /// Centered on the mean of `points`.
    pub fn centered_on(points: &[LonLat]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDataset(
                "no positions to center a projection on".into(),
            ));
        }
        let n = points.len() as f64;
        let lon = points.iter().map(|p| p.lon).sum::<f64>() / n;
        let lat = points.iter().map(|p| p.lat).sum::<f64>() / n;
        Projection::new(LonLat { lon, lat })
    }

    pub fn origin(&self) -> LonLat {
        self.origin
    }

    pub fn project(&self, p: LonLat) -> Point {
        Point::new(
            METERS_PER_DEGREE * self.cos_lat * (p.lon - self.origin.lon),
            METERS_PER_DEGREE * (p.lat - self.origin.lat),
        )
    }

    pub fn unproject(&self, p: Point) -> LonLat {
        LonLat {
            lon: self.origin.lon + p.x / (METERS_PER_DEGREE * self.cos_lat),
            lat: self.origin.lat + p.y / METERS_PER_DEGREE,
        }
    }
}

/// Project positions into meters about `origin`.
pub fn project(points: &[LonLat], origin: LonLat) -> Result<Vec<Point>> {
    let proj = Projection::new(origin)?;
    points
        .iter()
        .map(|p| {
            p.validate()?;
            Ok(proj.project(*p))
        })
        .collect()
}
