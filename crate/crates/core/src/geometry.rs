//! Planar points and the orientation predicate everything else is built on.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative collinearity band for non-integral input, scaled by the squared
/// longest side of the tested triangle.
pub const DEFAULT_RELATIVE_EPSILON: f64 = 1e-9;

/// Integral coordinates up to this magnitude are handled without any
/// tolerance band.
const EXACT_INTEGER_LIMIT: f64 = 4_503_599_627_370_496.0; // 2^52

/// A point in a local planar frame, in meters.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn checked(self) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::InvalidInput(format!(
                "non-finite coordinate in {self}"
            )))
        }
    }

    pub fn delta(self, other: Point) -> (f64, f64) {
        (self.x - other.x, self.y - other.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(self, other: Point) -> f64 {
        let (dx, dy) = self.delta(other);
        dx * dx + dy * dy
    }

    /// Bit-level identity usable as a hash key; `-0.0` and `0.0` collapse.
    pub fn key(&self) -> (u64, u64) {
        fn bits(v: f64) -> u64 {
            if v == 0.0 {
                0
            } else {
                v.to_bits()
            }
        }
        (bits(self.x), bits(self.y))
    }

    fn lex_cmp(&self, other: &Point) -> Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }

    fn is_integral(&self) -> bool {
        self.x.fract() == 0.0
            && self.y.fract() == 0.0
            && self.x.abs() <= EXACT_INTEGER_LIMIT
            && self.y.abs() <= EXACT_INTEGER_LIMIT
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(deserializer)?;
        Point::new(x, y).checked().map_err(serde::de::Error::custom)
    }
}

/// Side of a directed line on which a point lies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Left,
    Collinear,
    Right,
}

impl Orientation {
    pub fn signum(self) -> i8 {
        match self {
            Orientation::Left => 1,
            Orientation::Collinear => 0,
            Orientation::Right => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::Left => Orientation::Right,
            Orientation::Collinear => Orientation::Collinear,
            Orientation::Right => Orientation::Left,
        }
    }
}

/// Orientation of `r` relative to the directed line `p -> q`.
pub fn orientation(p: Point, q: Point, r: Point) -> Result<Orientation> {
    orientation_with_epsilon(p, q, r, DEFAULT_RELATIVE_EPSILON)
}

/// Like [`orientation`] with an explicit relative collinearity band.
///
/// The determinant sign is evaluated exactly (adaptive-precision arithmetic).
/// When all coordinates are integers the exact sign is final. Otherwise a
/// result whose magnitude falls within `epsilon` times the squared longest
/// side is reported as collinear, which absorbs projection and rotation
/// noise. The three points are put in a canonical order before evaluation so
/// that permuting the arguments permutes the sign exactly.
pub fn orientation_with_epsilon(p: Point, q: Point, r: Point, epsilon: f64) -> Result<Orientation> {
    for pt in [p, q, r] {
        pt.checked()?;
    }
    let mut pts = [p, q, r];
    let mut parity = 1.0;
    // three-element sort network tracking permutation parity
    for (i, j) in [(0, 1), (1, 2), (0, 1)] {
        if pts[i].lex_cmp(&pts[j]) == Ordering::Greater {
            pts.swap(i, j);
            parity = -parity;
        }
    }
    let [a, b, c] = pts;
    let det = robust::orient2d(coord(a), coord(b), coord(c));
    if det == 0.0 {
        return Ok(Orientation::Collinear);
    }
    let exact = a.is_integral() && b.is_integral() && c.is_integral();
    if !exact {
        let scale = a.distance_sq(b).max(b.distance_sq(c)).max(a.distance_sq(c));
        if det.abs() <= epsilon * scale {
            return Ok(Orientation::Collinear);
        }
    }
    Ok(if det * parity > 0.0 {
        Orientation::Left
    } else {
        Orientation::Right
    })
}

fn coord(p: Point) -> robust::Coord<f64> {
    robust::Coord { x: p.x, y: p.y }
}
