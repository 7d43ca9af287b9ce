use std::collections::BTreeSet;

use dipolar_core::algebra::{
    diff_against_reference, enumerate_relations, parse_reference_list, sample_general_position,
    sweep_lattice, RelationSet, LATTICE_MAX, REFERENCE_FINE_RELATIONS,
};
use dipolar_core::dipole::{
    point_class, relate, reverse, Dipole, DipoleRelation, PointClass, RelationTier,
};
use dipolar_core::geometry::{orientation, Orientation, Point};
use proptest::prelude::*;

fn code(s: &str) -> DipoleRelation {
    s.parse().unwrap()
}

/// Independent point classifier: parametric position along the carrier line
/// from plain f64 arithmetic, only used on integer input where it is exact.
fn oracle_class(s: Point, e: Point, p: Point) -> PointClass {
    let cross = (e.x - s.x) * (p.y - s.y) - (e.y - s.y) * (p.x - s.x);
    if cross > 0.0 {
        return PointClass::Left;
    }
    if cross < 0.0 {
        return PointClass::Right;
    }
    let len2 = (e.x - s.x).powi(2) + (e.y - s.y).powi(2);
    let t = ((p.x - s.x) * (e.x - s.x) + (p.y - s.y) * (e.y - s.y)) / len2;
    if t == 0.0 {
        PointClass::Start
    } else if t == 1.0 {
        PointClass::End
    } else if t < 0.0 {
        PointClass::Behind
    } else if t < 1.0 {
        PointClass::Interior
    } else {
        PointClass::Front
    }
}

#[test]
fn point_class_matches_parametric_oracle_on_lattice() {
    for d in dipolar_core::algebra::lattice_dipoles(3) {
        for x in -1..=4 {
            for y in -1..=4 {
                let p = Point::new(x as f64, y as f64);
                assert_eq!(
                    point_class(&d, p).unwrap(),
                    oracle_class(d.start(), d.end(), p),
                    "{d:?} {p}"
                );
            }
        }
    }
}

#[test]
fn general_position_sampling_yields_fourteen() {
    let set = sample_general_position(200_000, 7);
    assert_eq!(set.len(), 14);
    assert!(set.iter().all(|r| r.tier() == RelationTier::General14));
}

#[test]
fn lattice_and_sampling_give_the_shipped_table() {
    let found = enumerate_relations(1_000_000, 1);
    assert_eq!(found, RelationSet::canonical());
    assert_eq!(found.restrict(RelationTier::General14).len(), 14);
    assert_eq!(found.restrict(RelationTier::Coarse24).len(), 24);
    assert_eq!(found.len(), 72);
}

#[test]
fn lattice_alone_covers_every_degenerate_relation() {
    let lattice = sweep_lattice(LATTICE_MAX);
    let canon = RelationSet::canonical();
    let degenerate: BTreeSet<_> = canon
        .codes
        .iter()
        .filter(|r| r.tier() != RelationTier::General14)
        .copied()
        .collect();
    assert!(degenerate.is_subset(&lattice));
}

#[test]
fn sampling_is_seed_stable() {
    assert_eq!(
        enumerate_relations(1_000_000, 11),
        enumerate_relations(1_000_000, 12)
    );
}

#[test]
fn reference_diff_flags_duplicate_and_converse() {
    let reference = parse_reference_list(REFERENCE_FINE_RELATIONS).unwrap();
    let diff = diff_against_reference(&RelationSet::canonical(), &reference);
    assert_eq!(diff.duplicates.len(), 1);
    assert_eq!(diff.duplicates["ffbb"], vec![49, 55]);
    assert_eq!(
        diff.missing_from_reference,
        BTreeSet::from(["bbff".to_string()])
    );
    assert!(diff.not_realized.is_empty());
}

#[test]
fn canonical_set_is_closed() {
    let canon = RelationSet::canonical();
    for r in &canon.codes {
        assert!(canon.contains(&r.converse()), "converse of {r}");
        assert!(
            canon.contains(&r.with_first_reversed()),
            "first reversed of {r}"
        );
        assert!(
            canon.contains(&r.with_second_reversed()),
            "second reversed of {r}"
        );
        assert!(canon.contains(&r.mirrored()), "mirror of {r}");
    }
    assert!(!canon
        .codes
        .iter()
        .any(|r| ["rlrl", "lrlr"].contains(&r.to_string().as_str())));
}

#[test]
fn fixed_examples() {
    let a = Dipole::new(Point::new(0., 0.), Point::new(1., 0.)).unwrap();
    let b = Dipole::new(Point::new(2., 0.), Point::new(3., 0.)).unwrap();
    assert_eq!(relate(&a, &b), code("ffbb"));
    assert_eq!(relate(&b, &a), code("ffbb").converse());
    assert_eq!(code("ffbb").converse(), code("bbff"));
}

fn coord() -> impl Strategy<Value = f64> {
    -100.0..100.0f64
}

fn point() -> impl Strategy<Value = Point> {
    (coord(), coord()).prop_map(|(x, y)| Point::new(x, y))
}

fn dipole() -> impl Strategy<Value = Dipole> {
    (point(), point())
        .prop_filter("distinct", |(s, e)| s != e)
        .prop_map(|(s, e)| Dipole::new(s, e).unwrap())
}

fn lattice_dipole() -> impl Strategy<Value = Dipole> {
    ((0..5i32, 0..5i32), (0..5i32, 0..5i32))
        .prop_filter("distinct", |(s, e)| s != e)
        .prop_map(|((sx, sy), (ex, ey))| {
            Dipole::new(
                Point::new(sx as f64, sy as f64),
                Point::new(ex as f64, ey as f64),
            )
            .unwrap()
        })
}

fn any_dipole() -> impl Strategy<Value = Dipole> {
    prop_oneof![dipole(), lattice_dipole()]
}

fn transform(p: Point, angle: f64, scale: f64, dx: f64, dy: f64, reflect: bool) -> Point {
    let (s, c) = angle.sin_cos();
    let y = if reflect { -p.y } else { p.y };
    Point::new(
        scale * (c * p.x - s * y) + dx,
        scale * (s * p.x + c * y) + dy,
    )
}

fn moved(d: &Dipole, angle: f64, scale: f64, dx: f64, dy: f64, reflect: bool) -> Dipole {
    Dipole::new(
        transform(d.start(), angle, scale, dx, dy, reflect),
        transform(d.end(), angle, scale, dx, dy, reflect),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20_000))]

    #[test]
    fn converse_law(a in any_dipole(), b in any_dipole()) {
        let r = relate(&a, &b);
        prop_assert_eq!(r.converse(), relate(&b, &a));
        prop_assert!(r.code().is_realizable());
    }

    #[test]
    fn reversal_laws(a in any_dipole(), b in any_dipole()) {
        let r = relate(&a, &b);
        prop_assert_eq!(relate(&a, &reverse(&b)), r.with_second_reversed());
        prop_assert_eq!(relate(&reverse(&a), &b), r.with_first_reversed());
    }

    #[test]
    fn point_class_under_reversal(d in any_dipole(), p in point()) {
        prop_assert_eq!(
            point_class(&reverse(&d), p).unwrap(),
            point_class(&d, p).unwrap().under_reversal()
        );
    }

    #[test]
    fn similarity_invariance(
        a in any_dipole(),
        b in any_dipole(),
        angle in 0.0..std::f64::consts::TAU,
        scale in 0.01..100.0f64,
        dx in -1e4..1e4f64,
        dy in -1e4..1e4f64,
    ) {
        let r = relate(&a, &b);
        let moved_r = relate(&moved(&a, angle, scale, dx, dy, false), &moved(&b, angle, scale, dx, dy, false));
        prop_assert_eq!(moved_r, r);
        let mirrored = relate(&moved(&a, angle, scale, dx, dy, true), &moved(&b, angle, scale, dx, dy, true));
        prop_assert_eq!(mirrored, r.mirrored());
    }

    #[test]
    fn orientation_partition(d in any_dipole(), p in point()) {
        let class = point_class(&d, p).unwrap();
        let o = orientation(d.start(), d.end(), p).unwrap();
        prop_assert_eq!(class == PointClass::Left, o == Orientation::Left && p != d.start() && p != d.end());
        prop_assert_eq!(class == PointClass::Right, o == Orientation::Right && p != d.start() && p != d.end());
    }
}
