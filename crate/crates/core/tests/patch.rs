use pegasus_core::bundle::Bundle;
use pegasus_core::hierarchy::inflate;
use pegasus_core::patch::PatchError;
use pegasus_core::rules::TipLabel;
use pegasus_core::{CellIndex, Isometry, Patch, RuleSet, Shape, VertexId};
use proptest::prelude::*;

fn pegasus() -> RuleSet {
    Bundle::embedded().rules
}

#[test]
fn placing() {
    let rs = pegasus();
    let h = rs.variants(Shape::Hexagon)[0];
    let p = Patch::new().place(CellIndex::hex(0, 0), h).unwrap();
    assert_eq!(p.len(), 1);
    assert_eq!(p.place(CellIndex::hex(0, 0), h), Err(PatchError::Occupied(CellIndex::hex(0, 0))));
    assert!(matches!(Patch::new().place(CellIndex::tri_up(0, 0), h), Err(PatchError::ShapeMismatch { .. })));
}

#[test]
fn small_patches_have_no_violations() {
    let rs = pegasus();
    assert!(Patch::new().legality_violations(&rs).is_empty());
    let p = Patch::new().place(CellIndex::hex(0, 0), rs.variants(Shape::Hexagon)[5]).unwrap();
    assert!(p.legality_violations(&rs).is_empty());
}

/// Realises an atlas star around `VertexId(0,0,E)` by choosing, per cell,
/// a variant with the wanted label on the right corner.
fn realise(rs: &RuleSet, labels: [TipLabel; 4]) -> Option<Patch> {
    let v = VertexId::between((0, 0), (1, 0));
    let mut p = Patch::new();
    for ((c, k), l) in v.star().into_iter().zip(labels) {
        let shape = if c.is_hex() { Shape::Hexagon } else { Shape::Triangle };
        let t = rs.variants(shape).iter().find(|t| rs.labels(t)[k] == l)?;
        p.insert(c, *t).unwrap();
    }
    Some(p)
}

#[test]
fn atlas_stars_are_legal_and_a_swap_breaks_one_vertex() {
    let rs = pegasus();
    let v = VertexId::between((0, 0), (1, 0));
    let mut checked = 0;
    for star in rs.atlas() {
        // place the star with its first hexagon on the cell that comes first around v
        let shapes: Vec<bool> = v.star().iter().map(|(c, _)| c.is_hex()).collect();
        let labels = if shapes[0] { star.map(|e| e.1) } else { [star[3].1, star[0].1, star[1].1, star[2].1] };
        let Some(p) = realise(&rs, labels) else { continue };
        assert_eq!(p.full_star(&rs, v).map(|s| rs.vertex_allowed(&s).unwrap()), Some(true));
        assert!(p.legality_violations(&rs).is_empty());
        for swap in 0..12 {
            let mut broken = labels;
            broken[0] = TipLabel(swap);
            let Some(q) = realise(&rs, broken) else { continue };
            let bad = q.legality_violations(&rs);
            let s = q.full_star(&rs, v).unwrap();
            assert_eq!(bad.len(), usize::from(!rs.atlas().contains(&pegasus_core::rules::canonical_star(&s).unwrap())));
            if let Some(b) = bad.first() {
                assert_eq!(b.vertex, v);
            }
        }
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn serialization() {
    let rs = pegasus();
    let empty = Patch::new().serialize(&rs);
    assert_eq!(empty.lines().count(), 1);
    assert_eq!(Patch::parse(&empty, &rs).unwrap(), Patch::new());
    let sub = Bundle::embedded().substitution;
    let p = inflate(&rs, &sub, Shape::Hexagon, 2);
    assert_eq!(Patch::parse(&p.serialize(&rs), &rs).unwrap(), p);
    let bad = format!("ruleset: {}\nhex 0 0 H r7\n", rs.fingerprint());
    assert_eq!(Patch::parse(&bad, &rs).unwrap_err().line, 2);
}

fn generated() -> Patch {
    let b = Bundle::embedded();
    inflate(&b.rules, &b.substitution, Shape::Hexagon, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn legality_is_isometry_invariant(
        picks in proptest::collection::vec(0usize..200, 1..30),
        tweak in proptest::option::of((0usize..200, 0usize..12)),
        rot in 0u8..6, refl: bool, da in -5i32..6, db in -5i32..6,
    ) {
        let rs = pegasus();
        let big = generated();
        let cells: Vec<CellIndex> = big.cells().copied().collect();
        let mut p: Patch = picks.iter().map(|&i| cells[i % cells.len()]).map(|c| (c, *big.get(&c).unwrap())).collect();
        if let Some((i, v)) = tweak {
            let c = cells[i % cells.len()];
            p.remove(&c);
            let shape = if c.is_hex() { Shape::Hexagon } else { Shape::Triangle };
            let vs = rs.variants(shape);
            p.insert(c, vs[v % vs.len()]).unwrap();
        }
        let g = Isometry::new(rot, refl, (da, db));
        let q = p.transformed(&g, &rs);
        prop_assert_eq!(q.legality_violations(&rs).len(), p.legality_violations(&rs).len());
    }

    #[test]
    fn placing_never_clears_a_violation(
        picks in proptest::collection::vec(0usize..200, 1..40),
        extra in 0usize..200,
        v in 0usize..12,
    ) {
        let rs = pegasus();
        let big = generated();
        let cells: Vec<CellIndex> = big.cells().copied().collect();
        let mut p: Patch = picks.iter().map(|&i| cells[i % cells.len()]).map(|c| (c, *big.get(&c).unwrap())).collect();
        let c = cells[extra % cells.len()];
        if let Some(old) = p.remove(&c) {
            let shape = old.shape();
            let vs = rs.variants(shape);
            let before: Vec<VertexId> = p.legality_violations(&rs).into_iter().map(|x| x.vertex).collect();
            let after: Vec<VertexId> = p.place(c, vs[v % vs.len()]).unwrap().legality_violations(&rs).into_iter().map(|x| x.vertex).collect();
            prop_assert!(before.iter().all(|x| after.contains(x)));
        }
    }

    #[test]
    fn text_form_round_trips(picks in proptest::collection::vec(0usize..200, 0..40)) {
        let rs = pegasus();
        let big = generated();
        let cells: Vec<CellIndex> = big.cells().copied().collect();
        let p: Patch = picks.iter().map(|&i| cells[i % cells.len()]).map(|c| (c, *big.get(&c).unwrap())).collect();
        prop_assert_eq!(Patch::parse(&p.serialize(&rs), &rs).unwrap(), p);
    }
}
