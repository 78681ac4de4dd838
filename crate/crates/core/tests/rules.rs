use std::collections::BTreeSet;

use pegasus_core::bundle::Bundle;
use pegasus_core::rules::{canonical_star, Star};
use pegasus_core::{RuleSet, Shape, TipLabel};
use proptest::prelude::*;

fn pegasus() -> RuleSet {
    Bundle::embedded().rules
}

/// Distinct corner sequences among all twelve dihedral images of a
/// hexagon, read straight off the prototile line.
fn orbit_size(rs: &RuleSet, corners: &[TipLabel]) -> usize {
    let n = corners.len();
    let mut seen = BTreeSet::new();
    for r in 0..n {
        let rotated: Vec<TipLabel> = (0..n).map(|k| corners[(k + n - r) % n]).collect();
        seen.insert(rotated.clone());
        if rs.reflections_allowed() {
            let flipped: Vec<TipLabel> = (0..n).map(|k| rs.mirror(rotated[(n - k) % n])).collect();
            seen.insert(flipped);
        }
    }
    seen.len()
}

#[test]
fn bundled_rules_are_a_hexagon_and_a_triangle() {
    let rs = pegasus();
    let shapes: Vec<Shape> = rs.prototiles().iter().map(|p| p.shape).collect();
    assert_eq!(shapes, vec![Shape::Hexagon, Shape::Triangle]);
    assert!(rs.reflections_allowed());
    assert_eq!(rs.alphabet().len(), 12);
}

#[test]
fn variant_counts_match_orbit_oracle() {
    let rs = pegasus();
    for (i, p) in rs.prototiles().iter().enumerate() {
        let expect = orbit_size(&rs, &p.corners);
        assert_eq!(rs.variants(p.shape).len(), expect, "{}", p.name);
        let seqs: BTreeSet<Vec<TipLabel>> = rs.variants(p.shape).iter().map(|t| rs.labels(t).to_vec()).collect();
        assert_eq!(seqs.len(), expect);
        for t in rs.variants(p.shape) {
            assert_eq!(t.prototile(), i);
        }
    }
    assert_eq!(rs.variants(Shape::Hexagon).len(), 12);
    assert_eq!(rs.variants(Shape::Triangle).len(), 6);
}

#[test]
fn every_dihedral_image_is_some_variant() {
    let rs = pegasus();
    for (i, p) in rs.prototiles().iter().enumerate() {
        let seqs: BTreeSet<Vec<TipLabel>> = rs.variants(p.shape).iter().map(|t| rs.labels(t).to_vec()).collect();
        for r in 0..p.corners.len() as u8 {
            for m in [false, true] {
                assert!(seqs.contains(&rs.sequence(i, r, m)));
            }
        }
        assert_eq!(rs.sequence(i, 0, false), p.corners);
        assert_eq!(rs.sequence(i, p.corners.len() as u8, false), p.corners);
    }
}

#[test]
fn exhaustive_star_enumeration_recovers_the_atlas() {
    let rs = pegasus();
    let n = rs.alphabet().len() as u16;
    let mut canonical = BTreeSet::new();
    let mut allowed = BTreeSet::new();
    for l in 0..n.pow(4) {
        let d = [l % n, l / n % n, l / n / n % n, l / n / n / n];
        let star: Star = [
            (Shape::Hexagon, TipLabel(d[0])),
            (Shape::Triangle, TipLabel(d[1])),
            (Shape::Hexagon, TipLabel(d[2])),
            (Shape::Triangle, TipLabel(d[3])),
        ];
        let c = canonical_star(&star).unwrap();
        canonical.insert(c);
        if rs.vertex_allowed(&star).unwrap() {
            allowed.insert(c);
        }
    }
    assert_eq!(allowed, *rs.atlas());
    assert_eq!(allowed.len(), 88);
    // 12^4 sequences, of which 12^2 are fixed by the half turn
    assert_eq!(canonical.len(), (12usize.pow(4) + 12usize.pow(2)) / 2);
}

#[test]
fn atlas_is_closed_under_reflection() {
    let rs = pegasus();
    for s in rs.atlas() {
        let rev: Star = [s[0], s[3], s[2], s[1]].map(|(sh, l)| (sh, rs.mirror(l)));
        assert!(rs.vertex_allowed(&rev).unwrap(), "{}", rs.star_to_string(s));
    }
}

#[test]
fn bundled_rules_round_trip() {
    let rs = pegasus();
    let again = RuleSet::parse(&rs.serialize()).unwrap();
    assert_eq!(again, rs);
    assert_eq!(again.fingerprint(), "a6387f482cc0");
}

fn any_star() -> impl Strategy<Value = Star> {
    proptest::array::uniform4(0u16..12).prop_map(|d| {
        [
            (Shape::Hexagon, TipLabel(d[0])),
            (Shape::Triangle, TipLabel(d[1])),
            (Shape::Hexagon, TipLabel(d[2])),
            (Shape::Triangle, TipLabel(d[3])),
        ]
    })
}

proptest! {
    #[test]
    fn judgement_ignores_rotation(s in any_star(), r in 0usize..4) {
        let rs = pegasus();
        let rot: Star = [s[r % 4], s[(r + 1) % 4], s[(r + 2) % 4], s[(r + 3) % 4]];
        prop_assert_eq!(rs.vertex_allowed(&rot).unwrap(), rs.vertex_allowed(&s).unwrap());
    }

    #[test]
    fn judgement_ignores_reflection(s in any_star()) {
        let rs = pegasus();
        let rev: Star = [s[0], s[3], s[2], s[1]].map(|(sh, l)| (sh, rs.mirror(l)));
        prop_assert_eq!(rs.vertex_allowed(&rev).unwrap(), rs.vertex_allowed(&s).unwrap());
    }

    #[test]
    fn mirrored_corner_labels_are_involutive(proto in 0usize..2, r in 0u8..6) {
        let rs = pegasus();
        let n = rs.prototiles()[proto].corners.len() as u8;
        let t = rs.orient(proto, r % n, true).unwrap();
        let back = rs.remap(&rs.remap(&t, 0, true), 0, true);
        prop_assert_eq!(back, t);
        prop_assert_eq!(rs.orient(proto, r % n, false).map(|t| rs.labels(&t).to_vec()), Some(rs.sequence(proto, r % n, false)));
    }
}
