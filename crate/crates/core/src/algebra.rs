//! Derivation of the realizable relation sets by geometric enumeration, and
//! comparison against a transcribed reference list.
//!
//! Random real-valued sampling only ever produces general-position
//! configurations, so it is combined with an exhaustive sweep over an integer
//! lattice. The lattice contains every shared-endpoint, touching, overlapping
//! and containment configuration up to similarity, which is what the
//! collinear letters need.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dipole::{relate, Dipole, DipoleRelation, RelationCode, RelationTier};
use crate::error::Result;
use crate::geometry::{orientation, Orientation, Point};

pub const DEFAULT_SAMPLE_BUDGET: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 0x005e_edd1_b01e;

/// Largest lattice coordinate used for the degenerate families.
pub const LATTICE_MAX: i32 = 4;

const CHUNK: usize = 1 << 15;

/// The reference list of the 72 fine relations as first listed in the literature,
/// one code per line. It contains a duplicate, kept verbatim.
pub const REFERENCE_FINE_RELATIONS: &str = include_str!("../data/reference_fine_relations.txt");

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationSet {
    pub tier: RelationTier,
    pub codes: BTreeSet<DipoleRelation>,
}

impl RelationSet {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn contains(&self, r: &DipoleRelation) -> bool {
        self.codes.contains(r)
    }

    /// Members whose letters fall inside `tier`.
    pub fn restrict(&self, tier: RelationTier) -> RelationSet {
        RelationSet {
            tier,
            codes: self
                .codes
                .iter()
                .filter(|r| r.tier().within(tier))
                .copied()
                .collect(),
        }
    }

    /// Codes as strings in alphabetical order.
    pub fn sorted_codes(&self) -> Vec<String> {
        let mut v: Vec<String> = self.codes.iter().map(|r| r.to_string()).collect();
        v.sort();
        v
    }

    /// The shipped table of realizable relations.
    pub fn canonical() -> RelationSet {
        RelationSet {
            tier: RelationTier::Fine72,
            codes: crate::dipole::FINE_RELATIONS
                .iter()
                .map(|c| c.parse().expect("table entries are realizable"))
                .collect(),
        }
    }
}

/// Relations observed over `budget` random general-position dipole pairs.
///
/// Samples in which any three of the four endpoints come out collinear are
/// discarded, so only l/r letters can appear.
pub fn sample_general_position(budget: usize, seed: u64) -> BTreeSet<DipoleRelation> {
    let chunks = budget.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let n = CHUNK.min(budget - chunk * CHUNK);
            let mut seen = HashSet::new();
            for _ in 0..n {
                let mut pt = || Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let pts = [pt(), pt(), pt(), pt()];
                if !in_general_position(&pts) {
                    continue;
                }
                let a = Dipole::new(pts[0], pts[1]).expect("distinct points");
                let b = Dipole::new(pts[2], pts[3]).expect("distinct points");
                seen.insert(relate(&a, &b));
            }
            seen
        })
        .reduce(HashSet::new, |mut acc, s| {
            acc.extend(s);
            acc
        })
        .into_iter()
        .collect()
}

fn in_general_position(pts: &[Point; 4]) -> bool {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    TRIPLES.iter().all(|[i, j, k]| {
        matches!(
            orientation(pts[*i], pts[*j], pts[*k]),
            Ok(Orientation::Left | Orientation::Right)
        )
    })
}

/// All dipoles with endpoints on the `[0, max]²` integer lattice.
pub fn lattice_dipoles(max: i32) -> Vec<Dipole> {
    let points: Vec<Point> = (0..=max)
        .flat_map(|x| (0..=max).map(move |y| Point::new(x as f64, y as f64)))
        .collect();
    let mut out = Vec::with_capacity(points.len() * (points.len() - 1));
    for &s in &points {
        for &e in &points {
            if s != e {
                out.push(Dipole::new(s, e).expect("distinct lattice points"));
            }
        }
    }
    out
}

/// Relations observed over every ordered pair of lattice dipoles.
pub fn sweep_lattice(max: i32) -> BTreeSet<DipoleRelation> {
    let dipoles = lattice_dipoles(max);
    dipoles
        .par_iter()
        .map(|a| dipoles.iter().map(|b| relate(a, b)).collect::<HashSet<_>>())
        .reduce(HashSet::new, |mut acc, s| {
            acc.extend(s);
            acc
        })
        .into_iter()
        .collect()
}

/// The fine relation set: random general-position sampling plus the lattice
/// sweep. Deterministic for a given seed; the result does not depend on the
/// seed once `sample_budget` is at least [`DEFAULT_SAMPLE_BUDGET`].
pub fn enumerate_relations(sample_budget: usize, seed: u64) -> RelationSet {
    if sample_budget < DEFAULT_SAMPLE_BUDGET {
        log::warn!("sample budget {sample_budget} is below {DEFAULT_SAMPLE_BUDGET}; general-position coverage is not guaranteed");
    }
    let mut codes = sample_general_position(sample_budget, seed);
    codes.extend(sweep_lattice(LATTICE_MAX));
    RelationSet {
        tier: RelationTier::Fine72,
        codes,
    }
}

/// Parse a reference list: codes separated by whitespace, commas or
/// newlines; `#` starts a comment.
pub fn parse_reference_list(text: &str) -> Result<Vec<RelationCode>> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or(""))
        .flat_map(|line| line.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|tok| !tok.is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReferenceDiff {
    /// Enumerated but absent from the reference list.
    pub missing_from_reference: BTreeSet<String>,
    /// Listed but never produced by the geometry.
    pub not_realized: BTreeSet<String>,
    /// Codes listed more than once, with their 1-based positions.
    pub duplicates: BTreeMap<String, Vec<usize>>,
}

impl ReferenceDiff {
    pub fn is_empty(&self) -> bool {
        self.missing_from_reference.is_empty()
            && self.not_realized.is_empty()
            && self.duplicates.is_empty()
    }
}

pub fn diff_against_reference(found: &RelationSet, reference: &[RelationCode]) -> ReferenceDiff {
    let mut positions: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, code) in reference.iter().enumerate() {
        positions.entry(code.to_string()).or_default().push(i + 1);
    }
    let listed: BTreeSet<String> = positions.keys().cloned().collect();
    let found: BTreeSet<String> = found.codes.iter().map(|r| r.to_string()).collect();
    ReferenceDiff {
        missing_from_reference: found.difference(&listed).cloned().collect(),
        not_realized: listed.difference(&found).cloned().collect(),
        duplicates: positions.into_iter().filter(|(_, p)| p.len() > 1).collect(),
    }
}

/// Line-oriented report: each tier as a sorted code list, then the diff.
pub fn render_report(found: &RelationSet, diff: &ReferenceDiff) -> String {
    let mut out = String::new();
    for tier in RelationTier::ALL {
        let set = found.restrict(tier);
        let _ = writeln!(out, "# {} ({})", tier, set.len());
        for code in set.sorted_codes() {
            let _ = writeln!(out, "{code}");
        }
    }
    let _ = writeln!(out, "# reference diff");
    for (code, pos) in &diff.duplicates {
        let pos: Vec<String> = pos.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(out, "duplicate {code} at positions {}", pos.join(", "));
    }
    for code in &diff.missing_from_reference {
        let _ = writeln!(out, "missing {code}");
    }
    for code in &diff.not_realized {
        let _ = writeln!(out, "unrealizable {code}");
    }
    if diff.is_empty() {
        let _ = writeln!(out, "none");
    }
    out
}
