use std::collections::{BTreeMap, BTreeSet};

use pegasus_core::bundle::Bundle;
use pegasus_core::forcing::reproduce_case_tree;
use pegasus_core::hierarchy::{
    case_book, classify_hexagon, compose, decompose, derive_substitution, hierarchy_atlas, inflate, on_coset,
    verify_self_similarity, CaseBook, CaseLabel, HierarchyError, SubstitutionError, SuperPatch,
};
use pegasus_core::rules::{canonical_star, Star};
use pegasus_core::{CellIndex, Isometry, Patch, RuleSet, Shape};
use proptest::prelude::*;

fn bundle() -> Bundle {
    Bundle::embedded()
}

fn book(b: &Bundle) -> CaseBook {
    let tree = reproduce_case_tree(&b.rules, &b.seed, &b.schedule, &b.manifest, 1_000_000).unwrap();
    case_book(&b.rules, &tree, &b.manifest).unwrap()
}

fn level(patch: Patch, level: u32) -> SuperPatch {
    SuperPatch { level, patch, anchor: (0, 0) }
}

#[test]
fn lone_hexagon_is_undetermined() {
    let b = bundle();
    let bk = book(&b);
    let p = Patch::new().place(CellIndex::hex(0, 0), b.rules.variants(Shape::Hexagon)[0]).unwrap();
    assert_eq!(classify_hexagon(&b.rules, &bk, &p, CellIndex::hex(0, 0)), Ok(CaseLabel::Undetermined));
    assert_eq!(
        classify_hexagon(&b.rules, &bk, &p, CellIndex::hex(1, 0)),
        Err(HierarchyError::Unplaced(CellIndex::hex(1, 0)))
    );
}

#[test]
fn terminal_configurations_classify_as_themselves() {
    let b = bundle();
    let bk = book(&b);
    for (label, term) in bk.entries() {
        assert_eq!(classify_hexagon(&b.rules, &bk, term, CellIndex::hex(0, 0)), Ok(*label));
    }
    assert!(bk.terminal(CaseLabel::Case1).is_some());
    assert!(bk.terminal(CaseLabel::Case2).is_some());
}

#[test]
fn terminal_configurations_are_mutually_exclusive() {
    let b = bundle();
    let bk = book(&b);
    let rs = &b.rules;
    for (i, (li, pi)) in bk.entries().iter().enumerate() {
        for (lj, pj) in &bk.entries()[i + 1..] {
            if li == lj {
                continue;
            }
            for g in Isometry::point_group() {
                assert_eq!(g.apply_cell(CellIndex::hex(0, 0)), CellIndex::hex(0, 0));
                let moved = pj.transformed(&g, rs);
                let clash = pi.iter().any(|(c, t)| moved.get(c).is_some_and(|u| u != t));
                assert!(clash, "{li} and {lj} agree under {g:?}");
            }
        }
    }
}

#[test]
fn inflation_sizes() {
    let b = bundle();
    let (rs, sub) = (&b.rules, &b.substitution);
    assert_eq!(inflate(rs, sub, Shape::Hexagon, 0).len(), 1);
    let t1 = inflate(rs, sub, Shape::Triangle, 1);
    assert_eq!((t1.len(), t1.count_shape(Shape::Hexagon)), (1, 1));
    let h1 = inflate(rs, sub, Shape::Hexagon, 1);
    assert_eq!((h1.count_shape(Shape::Hexagon), h1.count_shape(Shape::Triangle)), (1, 6));
    assert!(h1.is_legal(rs));
    // a hexagon has one hexagon and six triangles as children, a triangle one hexagon
    let (mut h, mut t) = (1usize, 0usize);
    for k in 0..=5 {
        let p = inflate(rs, sub, Shape::Hexagon, k);
        assert_eq!((p.count_shape(Shape::Hexagon), p.count_shape(Shape::Triangle)), (h, t), "level {k}");
        assert!(p.is_legal(rs), "level {k}");
        (h, t) = (h + t, 6 * h);
    }
}

#[test]
fn empty_patches() {
    let b = bundle();
    let bk = book(&b);
    let c = compose(&b.rules, &b.substitution, &bk, &SuperPatch::ground(Patch::new())).unwrap();
    assert!(c.supertiles.patch.is_empty());
    assert!(c.residue.is_empty());
    assert_eq!(c.supertiles.level, 1);
    let d = decompose(&b.rules, &b.substitution, &level(Patch::new(), 1)).unwrap();
    assert!(d.patch.is_empty());
    assert_eq!(d.level, 0);
    assert_eq!(decompose(&b.rules, &b.substitution, &SuperPatch::ground(Patch::new())), Err(HierarchyError::GroundLevel));
}

#[test]
fn single_supertiles_decompose() {
    let b = bundle();
    let rs = &b.rules;
    for &t in rs.variants(Shape::Triangle) {
        for cell in [CellIndex::tri_up(2, -1), CellIndex::tri_down(0, 3)] {
            let sp = level(Patch::new().place(cell, t).unwrap(), 1);
            let d = decompose(rs, &b.substitution, &sp).unwrap();
            assert_eq!((d.patch.len(), d.patch.count_shape(Shape::Hexagon)), (1, 1));
        }
    }
    for &t in rs.variants(Shape::Hexagon) {
        let sp = level(Patch::new().place(CellIndex::hex(1, 1), t).unwrap(), 1);
        let d = decompose(rs, &b.substitution, &sp).unwrap();
        assert_eq!(d.patch.len(), 7);
        assert!(d.patch.legality_violations(rs).is_empty());
    }
}

#[test]
fn bundled_substitution_is_valid() {
    let b = bundle();
    b.substitution.validate(&b.rules).unwrap();
    assert_eq!(b.substitution.hex_children.len(), 7);
    assert_eq!(b.substitution.tri_children.len(), 1);
    let mut sorted = b.substitution.bijection.clone();
    sorted.sort();
    assert_eq!(sorted, (0..12).map(pegasus_core::TipLabel).collect::<Vec<_>>());
}

/// The supertiles of `sp` whose full vertex neighbourhood is placed.
fn interior_of(sp: &Patch) -> Patch {
    pegasus_core::analysis::interior(sp)
}

#[test]
fn compose_inverts_decompose() {
    let b = bundle();
    let bk = book(&b);
    let (rs, sub) = (&b.rules, &b.substitution);
    for k in 1..=4 {
        let top = level(inflate(rs, sub, Shape::Hexagon, k - 1), 1);
        let ground = decompose(rs, sub, &top).unwrap();
        let c = compose(rs, sub, &bk, &ground).unwrap();
        assert_eq!(c.supertiles.anchor, top.anchor);
        for (cell, t) in c.supertiles.patch.iter() {
            assert_eq!(top.patch.get(cell), Some(t), "level {k}");
        }
        for (cell, t) in interior_of(&top.patch).iter() {
            assert_eq!(c.supertiles.patch.get(cell), Some(t), "level {k}: {cell} missing");
        }
    }
}

#[test]
fn supertile_round_trip_through_every_level() {
    let b = bundle();
    let bk = book(&b);
    let (rs, sub) = (&b.rules, &b.substitution);
    let top = level(inflate(rs, sub, Shape::Hexagon, 1), 3);
    let mut sp = top.clone();
    while sp.level > 0 {
        sp = decompose(rs, sub, &sp).unwrap();
    }
    assert_eq!(sp.patch, inflate(rs, sub, Shape::Hexagon, 4));
    let mut up = sp;
    for _ in 0..3 {
        up = compose(rs, sub, &bk, &up).unwrap().supertiles;
    }
    assert_eq!(up.level, 3);
    assert_eq!(up.anchor, top.anchor);
    for (cell, t) in up.patch.iter() {
        assert_eq!(top.patch.get(cell), Some(t));
    }
}

#[test]
fn super_hexagon_centres_form_the_index_three_sublattice() {
    let b = bundle();
    let bk = book(&b);
    let (rs, sub) = (&b.rules, &b.substitution);
    for k in 3..=5 {
        let p = inflate(rs, sub, Shape::Hexagon, k);
        let c = compose(rs, sub, &bk, &SuperPatch::ground(p)).unwrap();
        let centres: Vec<CellIndex> =
            c.labels.iter().filter(|(_, l)| l.is_centre()).map(|(h, _)| *h).collect();
        assert!(centres.len() > 1);
        for x in &centres {
            for y in &centres {
                // (1,1) and (-1,2) generate exactly the vectors with a - b divisible by 3
                assert_eq!(((x.a - y.a) - (x.b - y.b)).rem_euclid(3), 0);
            }
        }
        let side: Vec<&CellIndex> = c.labels.iter().filter(|(_, l)| **l == CaseLabel::Case1).map(|(h, _)| h).collect();
        assert!(side.iter().all(|h| !on_coset((h.a - centres[0].a, h.b - centres[0].b), (0, 0))));
    }
}

#[test]
fn case_one_is_two_thirds_of_the_interior() {
    let b = bundle();
    let bk = book(&b);
    let p = inflate(&b.rules, &b.substitution, Shape::Hexagon, 6);
    let inner = interior_of(&interior_of(&p));
    assert!(inner.count_shape(Shape::Hexagon) > 100);
    let mut counts: BTreeMap<CaseLabel, usize> = BTreeMap::new();
    for h in inner.cells().filter(|c| c.is_hex()) {
        *counts.entry(classify_hexagon(&b.rules, &bk, &p, *h).unwrap()).or_default() += 1;
    }
    let total: usize = counts.values().sum();
    let one = counts.get(&CaseLabel::Case1).copied().unwrap_or(0) as f64 / total as f64;
    assert!((one - 2.0 / 3.0).abs() < 0.1, "{counts:?}");
    assert_eq!(counts.get(&CaseLabel::Undetermined), None, "{counts:?}");
}

#[test]
fn interior_hexagons_get_exactly_one_label() {
    let b = bundle();
    let bk = book(&b);
    for shape in [Shape::Hexagon, Shape::Triangle] {
        let p = inflate(&b.rules, &b.substitution, shape, 7);
        let inner = interior_of(&interior_of(&p));
        assert!(inner.count_shape(Shape::Hexagon) > 20);
        for h in inner.cells().filter(|c| c.is_hex()) {
            let l = classify_hexagon(&b.rules, &bk, &p, *h).unwrap();
            assert_ne!(l, CaseLabel::Undetermined, "{h}");
        }
    }
}

fn generated() -> Patch {
    let b = bundle();
    inflate(&b.rules, &b.substitution, Shape::Hexagon, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn compose_commutes_with_isometries(rot in 0u8..6, refl: bool, da in -4i32..5, db in -4i32..5) {
        let b = bundle();
        let bk = book(&b);
        let (rs, sub) = (&b.rules, &b.substitution);
        let p = generated();
        let g = Isometry::new(rot, refl, (da, db));
        let q = p.transformed(&g, rs);
        let cp = compose(rs, sub, &bk, &SuperPatch::ground(p)).unwrap();
        let cq = compose(rs, sub, &bk, &SuperPatch::ground(q)).unwrap();
        for (h, l) in &cp.labels {
            prop_assert_eq!(cq.labels.get(&g.apply_cell(*h)), Some(l));
        }
        prop_assert_eq!(cq.residue, cp.residue.transformed(&g, rs));
        prop_assert_eq!(cq.supertiles.patch.len(), cp.supertiles.patch.len());
        // the composed patches, pushed back down, are images of each other
        let dp = decompose(rs, sub, &cp.supertiles).unwrap().patch;
        let dq = decompose(rs, sub, &cq.supertiles).unwrap().patch;
        prop_assert_eq!(dq, dp.transformed(&g, rs));
    }
}

/// Every star over two labels is allowed; the hexagon and triangle each
/// have several variants, so nothing around a lone hexagon is forced.
fn free_rules() -> RuleSet {
    let mut text = String::from(
        "alphabet: x, y\nreflections: allowed\nprototile h hexagon: x,x,x,x,x,y\nprototile t triangle: x,x,y\n",
    );
    let mut seen = BTreeSet::new();
    for d in 0..16u8 {
        let l = |k: u8| if d >> k & 1 == 1 { "y" } else { "x" };
        let line = format!("allow hex:{}, tri:{}, hex:{}, tri:{}\n", l(0), l(1), l(2), l(3));
        if seen.insert(line.clone()) {
            text.push_str(&line);
        }
    }
    RuleSet::parse(&text).unwrap()
}

#[test]
fn unconstrained_children_are_not_forced() {
    let rs = free_rules();
    let hv = rs.variants(Shape::Hexagon);
    let centre = Patch::new().place(CellIndex::hex(0, 0), hv[0]).unwrap();
    let side = Patch::new().place(CellIndex::hex(0, 0), hv[1]).unwrap();
    let bk = CaseBook::new(vec![(CaseLabel::Case2, centre), (CaseLabel::Case1, side)]).unwrap();
    assert!(matches!(derive_substitution(&rs, &bk), Err(SubstitutionError::NotForced(_))));
}

#[test]
fn unmarked_rules_never_yield_a_substitution() {
    let rs = RuleSet::parse(
        "alphabet: x\nreflections: allowed\nprototile H hexagon: x,x,x,x,x,x\nprototile T triangle: x,x,x\nallow hex:x, tri:x, hex:x, tri:x\n",
    )
    .unwrap();
    let b = bundle();
    let seed = Patch::parse(&b.seed.serialize(&b.rules).replace(&b.rules.fingerprint(), &rs.fingerprint()).replace(" m", ""), &rs)
        .map(|p| p.iter().map(|(c, _)| (*c, rs.variants(Shape::Hexagon)[0])).collect::<Patch>())
        .unwrap();
    let derived = reproduce_case_tree(&rs, &seed, &b.schedule, &b.manifest, 1_000_000)
        .map_err(|e| e.to_string())
        .and_then(|tree| case_book(&rs, &tree, &b.manifest).map_err(|e| e.to_string()))
        .and_then(|bk| derive_substitution(&rs, &bk).map_err(|e| e.to_string()));
    assert!(derived.is_err());
}

#[test]
fn bundled_case_data_leaves_children_unforced() {
    let b = bundle();
    let bk = book(&b);
    assert_eq!(derive_substitution(&b.rules, &bk), Err(SubstitutionError::NotForced(CellIndex::tri_up(-1, 0))));
}

#[test]
fn bundled_substitution_is_self_similar() {
    let b = bundle();
    let report = verify_self_similarity(&b.rules, &b.substitution);
    assert!(report.holds(), "missing {:?} extra {:?}", report.missing, report.extra);
    assert_eq!(hierarchy_atlas(&b.rules, &b.substitution), *b.rules.atlas());
}

fn lift(rs: &RuleSet, bijection: &[pegasus_core::TipLabel], s: &Star) -> Star {
    let swapped = s.map(|(sh, l)| {
        let sh = if sh == Shape::Hexagon { Shape::Triangle } else { Shape::Hexagon };
        (sh, bijection[l.0 as usize])
    });
    let _ = rs;
    canonical_star(&swapped).unwrap()
}

#[test]
fn bijection_applied_twice_still_preserves_the_atlas() {
    let b = bundle();
    let rs = &b.rules;
    let bij = &b.substitution.bijection;
    let once: BTreeSet<Star> = rs.atlas().iter().map(|s| lift(rs, bij, s)).collect();
    assert_eq!(once, *rs.atlas());
    let twice: BTreeSet<Star> = once.iter().map(|s| lift(rs, bij, s)).collect();
    assert_eq!(twice, *rs.atlas());
    let squared: Vec<_> = bij.iter().map(|l| bij[l.0 as usize]).collect();
    let direct: BTreeSet<Star> =
        rs.atlas().iter().map(|s| canonical_star(&s.map(|(sh, l)| (sh, squared[l.0 as usize]))).unwrap()).collect();
    assert_eq!(direct, *rs.atlas());
}

#[test]
fn deleting_any_atlas_entry_breaks_the_hierarchy() {
    let b = bundle();
    let rs0 = &b.rules;
    let text = rs0.serialize();
    // the parser closes the atlas under reflection, so a star goes together with its mirror image
    let mirror = |s: &Star| canonical_star(&[s[0], s[3], s[2], s[1]].map(|(sh, l)| (sh, rs0.mirror(l)))).unwrap();
    let mut tried = 0;
    for star in rs0.atlas() {
        let gone = [rs0.star_to_string(star), rs0.star_to_string(&mirror(star))];
        let mutated: String = text
            .lines()
            .filter(|l| !gone.iter().any(|g| l.strip_prefix("allow ").is_some_and(|x| x.trim() == g.trim())))
            .map(|l| format!("{l}\n"))
            .collect();
        let rs = RuleSet::parse(&mutated).unwrap();
        assert!(rs.atlas().len() < rs0.atlas().len(), "{}", gone[0]);
        tried += 1;
        assert!(!verify_self_similarity(&rs, &b.substitution).holds(), "deleting `{}` went unnoticed", gone[0]);
        let derived = reproduce_case_tree(&rs, &b.seed, &b.schedule, &b.manifest, 1_000_000)
            .map_err(|e| e.to_string())
            .and_then(|tree| case_book(&rs, &tree, &b.manifest).map_err(|e| e.to_string()))
            .and_then(|bk| derive_substitution(&rs, &bk).map_err(|e| e.to_string()));
        assert!(derived.is_err() || !verify_self_similarity(&rs, &derived.unwrap()).holds());
    }
    assert_eq!(tried, 88);
}
