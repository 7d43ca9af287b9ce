//! Dipoles (oriented segments), the seven point classes and the four-letter
//! relation codes between two dipoles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{orientation, Orientation, Point};

/// An oriented straight segment with distinct, finite endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDipole")]
pub struct Dipole {
    start: Point,
    end: Point,
}

#[derive(Deserialize)]
struct RawDipole {
    start: Point,
    end: Point,
}

impl TryFrom<RawDipole> for Dipole {
    type Error = Error;

    fn try_from(raw: RawDipole) -> Result<Self> {
        Dipole::new(raw.start, raw.end)
    }
}

impl Dipole {
    pub fn new(start: Point, end: Point) -> Result<Self> {
        let start = start
            .checked()
            .map_err(|e| Error::InvalidDipole(e.to_string()))?;
        let end = end
            .checked()
            .map_err(|e| Error::InvalidDipole(e.to_string()))?;
        if start == end {
            return Err(Error::InvalidDipole(format!(
                "start and end coincide at {start}"
            )));
        }
        Ok(Dipole { start, end })
    }

    pub fn start(&self) -> Point {
        self.start
    }

    pub fn end(&self) -> Point {
        self.end
    }

    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    pub fn reversed(&self) -> Dipole {
        Dipole {
            start: self.end,
            end: self.start,
        }
    }

    /// Qualitative position of `p` with respect to this dipole.
    pub fn classify(&self, p: Point) -> Result<PointClass> {
        if p == self.start {
            return Ok(PointClass::Start);
        }
        if p == self.end {
            return Ok(PointClass::End);
        }
        Ok(match orientation(self.start, self.end, p)? {
            Orientation::Left => PointClass::Left,
            Orientation::Right => PointClass::Right,
            Orientation::Collinear => {
                let (ux, uy) = self.end.delta(self.start);
                let (bx, by) = p.delta(self.start);
                let (fx, fy) = p.delta(self.end);
                if bx * ux + by * uy < 0.0 {
                    PointClass::Behind
                } else if fx * -ux + fy * -uy < 0.0 {
                    PointClass::Front
                } else {
                    PointClass::Interior
                }
            }
        })
    }
}

/// Flip the orientation of a dipole.
pub fn reverse(d: &Dipole) -> Dipole {
    d.reversed()
}

/// Classify `p` against `d`. See [`Dipole::classify`].
pub fn point_class(d: &Dipole, p: Point) -> Result<PointClass> {
    d.classify(p)
}

/// Where a point lies relative to a dipole: left or right of its carrier
/// line, or on the line at its start, at its end, behind it, inside it or
/// in front of it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointClass {
    Left,
    Right,
    Start,
    End,
    Behind,
    Interior,
    Front,
}

impl PointClass {
    pub const ALL: [PointClass; 7] = [
        PointClass::Left,
        PointClass::Right,
        PointClass::Start,
        PointClass::End,
        PointClass::Behind,
        PointClass::Interior,
        PointClass::Front,
    ];

    pub fn letter(self) -> char {
        match self {
            PointClass::Left => 'l',
            PointClass::Right => 'r',
            PointClass::Start => 's',
            PointClass::End => 'e',
            PointClass::Behind => 'b',
            PointClass::Interior => 'i',
            PointClass::Front => 'f',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        Some(match c {
            'l' => PointClass::Left,
            'r' => PointClass::Right,
            's' => PointClass::Start,
            'e' => PointClass::End,
            'b' => PointClass::Behind,
            'i' => PointClass::Interior,
            'f' => PointClass::Front,
            _ => return None,
        })
    }

    /// The class the same point gets once the dipole is reversed.
    pub fn under_reversal(self) -> Self {
        match self {
            PointClass::Left => PointClass::Right,
            PointClass::Right => PointClass::Left,
            PointClass::Start => PointClass::End,
            PointClass::End => PointClass::Start,
            PointClass::Behind => PointClass::Front,
            PointClass::Front => PointClass::Behind,
            PointClass::Interior => PointClass::Interior,
        }
    }

    /// The class under a reflection of the plane.
    pub fn mirrored(self) -> Self {
        match self {
            PointClass::Left => PointClass::Right,
            PointClass::Right => PointClass::Left,
            other => other,
        }
    }

    /// On the carrier line (any of s, e, b, i, f).
    pub fn is_collinear(self) -> bool {
        !matches!(self, PointClass::Left | PointClass::Right)
    }
}

/// A syntactically valid four-letter code, not necessarily realizable.
///
/// Letter order: start of B w.r.t. A, end of B w.r.t. A, start of A w.r.t. B,
/// end of A w.r.t. B.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationCode(pub [PointClass; 4]);

impl RelationCode {
    pub fn letters(&self) -> [PointClass; 4] {
        self.0
    }

    pub fn is_realizable(&self) -> bool {
        let code = self.to_string();
        FINE_RELATIONS.contains(&code.as_str())
    }
}

impl fmt::Display for RelationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.0 {
            write!(f, "{}", c.letter())?;
        }
        Ok(())
    }
}

impl FromStr for RelationCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters: Vec<PointClass> = s
            .chars()
            .map(|c| {
                PointClass::from_letter(c)
                    .ok_or_else(|| Error::InvalidRelation(format!("{s:?}: unknown letter {c:?}")))
            })
            .collect::<Result<_>>()?;
        let letters: [PointClass; 4] = letters
            .try_into()
            .map_err(|_| Error::InvalidRelation(format!("{s:?}: expected four letters")))?;
        Ok(RelationCode(letters))
    }
}

/// A realizable qualitative relation between two dipoles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DipoleRelation(RelationCode);

impl DipoleRelation {
    pub fn code(&self) -> RelationCode {
        self.0
    }

    pub fn letters(&self) -> [PointClass; 4] {
        self.0 .0
    }

    /// The relation from B to A: the two letter halves swap.
    pub fn converse(&self) -> DipoleRelation {
        let [a, b, c, d] = self.letters();
        DipoleRelation(RelationCode([c, d, a, b]))
    }

    /// `relate(A, reverse(B))` given `self = relate(A, B)`.
    pub fn with_second_reversed(&self) -> DipoleRelation {
        let [a, b, c, d] = self.letters();
        DipoleRelation(RelationCode([b, a, c.under_reversal(), d.under_reversal()]))
    }

    /// `relate(reverse(A), B)` given `self = relate(A, B)`.
    pub fn with_first_reversed(&self) -> DipoleRelation {
        let [a, b, c, d] = self.letters();
        DipoleRelation(RelationCode([a.under_reversal(), b.under_reversal(), d, c]))
    }

    /// The relation after reflecting both dipoles.
    pub fn mirrored(&self) -> DipoleRelation {
        DipoleRelation(RelationCode(self.letters().map(PointClass::mirrored)))
    }

    pub fn tier(&self) -> RelationTier {
        let letters = self.letters();
        if letters
            .iter()
            .all(|c| matches!(c, PointClass::Left | PointClass::Right))
        {
            RelationTier::General14
        } else if letters.iter().all(|c| {
            matches!(
                c,
                PointClass::Left | PointClass::Right | PointClass::Start | PointClass::End
            )
        }) {
            RelationTier::Coarse24
        } else {
            RelationTier::Fine72
        }
    }
}

impl TryFrom<RelationCode> for DipoleRelation {
    type Error = Error;

    fn try_from(code: RelationCode) -> Result<Self> {
        if code.is_realizable() {
            Ok(DipoleRelation(code))
        } else {
            Err(Error::InvalidRelation(format!(
                "{code} is not realizable in the plane"
            )))
        }
    }
}

impl FromStr for DipoleRelation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<RelationCode>()?.try_into()
    }
}

impl fmt::Display for DipoleRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for DipoleRelation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DipoleRelation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The qualitative relation between two dipoles.
pub fn relate(a: &Dipole, b: &Dipole) -> DipoleRelation {
    // Both dipoles are validated at construction, so every endpoint is finite.
    let class = |d: &Dipole, p: Point| d.classify(p).expect("dipole endpoints are finite");
    DipoleRelation(RelationCode([
        class(a, b.start),
        class(a, b.end),
        class(b, a.start),
        class(b, a.end),
    ]))
}

/// Flip the letter halves of a relation.
pub fn converse(r: &DipoleRelation) -> DipoleRelation {
    r.converse()
}

/// Nested relation tiers: general position, coarse and fine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationTier {
    General14,
    Coarse24,
    Fine72,
}

impl RelationTier {
    pub const ALL: [RelationTier; 3] = [
        RelationTier::General14,
        RelationTier::Coarse24,
        RelationTier::Fine72,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RelationTier::General14 => "general14",
            RelationTier::Coarse24 => "coarse24",
            RelationTier::Fine72 => "fine72",
        }
    }

    pub fn expected_size(self) -> usize {
        match self {
            RelationTier::General14 => 14,
            RelationTier::Coarse24 => 24,
            RelationTier::Fine72 => 72,
        }
    }

    /// Smallest tier containing `code`; fails for unrealizable codes.
    pub fn of_code(code: &RelationCode) -> Result<RelationTier> {
        DipoleRelation::try_from(*code).map(|r| r.tier())
    }

    /// Whether a relation of tier `self` is a member of tier `outer`.
    pub fn within(self, outer: RelationTier) -> bool {
        self <= outer
    }
}

impl fmt::Display for RelationTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Every realizable relation code. This table is what geometric enumeration
/// over the plane produces (see `algebra::enumerate_relations`); the
/// enumeration tests keep it honest.
pub const FINE_RELATIONS: [&str; 72] = [
    // general position
    "rrrr", "rrrl", "rrlr", "rrll", "rlrr", "rllr", "rlll", "lrrr", "lrrl", "lrll", "llrr", "llrl",
    "lllr", "llll", // shared endpoints
    "ells", "errs", "lere", "rele", "slsr", "srsl", "lsel", "rser", "sese", "eses",
    // one endpoint on the other carrier line
    "lllb", "llfl", "llbr", "llrf", "lirl", "lfrr", "lril", "lrri", "blrr", "irrl", "frrr", "rbrr",
    "lbll", "flll", "brll", "rfll", "rlli", "rrlf", "illr", "rilr", "rrbl", "rlir", "rrfr", "rrrb",
    // all four points collinear
    "ffbb", "efbs", "ifbi", "bfii", "sfsi", "beie", "bbff", "bsef", "biif", "iibf", "sisf", "iebe",
    "ffff", "fefe", "fifi", "fbii", "fsei", "ebis", "iifb", "eifs", "iseb", "bbbb", "sbsb", "ibib",
];

#[cfg(test)]
mod tests {
    use super::*;

    fn d(sx: f64, sy: f64, ex: f64, ey: f64) -> Dipole {
        Dipole::new(Point::new(sx, sy), Point::new(ex, ey)).unwrap()
    }

    fn code(s: &str) -> DipoleRelation {
        s.parse().unwrap()
    }

    #[test]
    fn degenerate_dipole_is_rejected() {
        let p = Point::new(1.0, 1.0);
        assert!(matches!(Dipole::new(p, p), Err(Error::InvalidDipole(_))));
        assert!(Dipole::new(p, Point::new(f64::NAN, 0.0)).is_err());
        let json = r#"{"start":[0,0],"end":[0,0]}"#;
        assert!(serde_json::from_str::<Dipole>(json).is_err());
    }

    #[test]
    fn point_classes_on_the_x_axis() {
        let a = d(0., 0., 4., 0.);
        let cases = [
            ((2., 3.), PointClass::Left),
            ((2., -3.), PointClass::Right),
            ((0., 0.), PointClass::Start),
            ((4., 0.), PointClass::End),
            ((-2., 0.), PointClass::Behind),
            ((2., 0.), PointClass::Interior),
            ((6., 0.), PointClass::Front),
        ];
        for ((x, y), want) in cases {
            assert_eq!(
                point_class(&a, Point::new(x, y)).unwrap(),
                want,
                "({x}, {y})"
            );
        }
        assert!(point_class(&a, Point::new(f64::NAN, 1.0)).is_err());
    }

    #[test]
    fn partition_holds_on_a_lattice() {
        let a = d(-1., -1., 2., 1.);
        for x in -4..=4 {
            for y in -4..=4 {
                let p = Point::new(x as f64, y as f64);
                let class = point_class(&a, p).unwrap();
                let o = orientation(a.start(), a.end(), p).unwrap();
                let conditions = [
                    o == Orientation::Left && p != a.start() && p != a.end(),
                    o == Orientation::Right && p != a.start() && p != a.end(),
                    p == a.start(),
                    p == a.end(),
                    class == PointClass::Behind,
                    class == PointClass::Interior,
                    class == PointClass::Front,
                ];
                assert_eq!(conditions.iter().filter(|c| **c).count(), 1, "{p}");
                assert_eq!(class.is_collinear(), o == Orientation::Collinear);
            }
        }
    }

    #[test]
    fn relate_worked_examples() {
        let a = d(0., 0., 1., 0.);
        assert_eq!(relate(&a, &a), code("sese"));
        assert_eq!(relate(&a, &d(1., 0., 0., 0.)), code("eses"));
        assert_eq!(relate(&a, &d(1., 0., 2., 0.)), code("efbs"));
        assert_eq!(relate(&a, &d(2., 0., 3., 0.)), code("ffbb"));
        assert_eq!(relate(&d(2., 0., 3., 0.), &a), code("bbff"));
    }

    #[test]
    fn converse_swaps_halves() {
        assert_eq!(converse(&code("ells")), code("lsel"));
        assert_eq!(converse(&code("sese")), code("sese"));
        assert_eq!(converse(&code("ffbb")), code("bbff"));
    }

    #[test]
    fn reverse_is_an_involution() {
        let a = d(0., 0., 1., 0.);
        assert_eq!(reverse(&a), d(1., 0., 0., 0.));
        assert_eq!(reverse(&reverse(&a)), a);
    }

    #[test]
    fn tiers() {
        assert_eq!(code("rrrr").tier(), RelationTier::General14);
        assert_eq!(code("slsr").tier(), RelationTier::Coarse24);
        assert_eq!(code("ffbb").tier(), RelationTier::Fine72);
        let bad: RelationCode = "rlrl".parse().unwrap();
        assert!(matches!(
            RelationTier::of_code(&bad),
            Err(Error::InvalidRelation(_))
        ));
        assert!(RelationTier::General14.within(RelationTier::Fine72));
        assert!(!RelationTier::Fine72.within(RelationTier::Coarse24));
    }

    #[test]
    fn relation_parsing() {
        assert!("rlrl".parse::<DipoleRelation>().is_err());
        assert!("lrlr".parse::<DipoleRelation>().is_err());
        assert!("efb".parse::<RelationCode>().is_err());
        assert!("efbx".parse::<RelationCode>().is_err());
        assert_eq!(serde_json::to_string(&code("efbs")).unwrap(), "\"efbs\"");
        let r: DipoleRelation = serde_json::from_str("\"bsef\"").unwrap();
        assert_eq!(r, code("bsef"));
    }

    #[test]
    fn table_has_no_duplicates_and_is_tiered() {
        let mut all: Vec<_> = FINE_RELATIONS.to_vec();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 72);
        let count = |t: RelationTier| {
            FINE_RELATIONS
                .iter()
                .filter(|c| code(c).tier().within(t))
                .count()
        };
        assert_eq!(count(RelationTier::General14), 14);
        assert_eq!(count(RelationTier::Coarse24), 24);
        assert_eq!(count(RelationTier::Fine72), 72);
    }
}
