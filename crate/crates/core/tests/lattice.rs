use std::collections::BTreeSet;

use pegasus_core::lattice::{disk, hex_tri_neighbors, tri_corner_hexes};
use pegasus_core::{CellIndex, CellKind, Isometry};
use proptest::prelude::*;

fn any_cell() -> impl Strategy<Value = CellIndex> {
    (0u8..3, -20i32..20, -20i32..20).prop_map(|(k, a, b)| match k {
        0 => CellIndex::hex(a, b),
        1 => CellIndex::tri_up(a, b),
        _ => CellIndex::tri_down(a, b),
    })
}

fn any_isometry() -> impl Strategy<Value = Isometry> {
    (0u8..6, any::<bool>(), -10i32..10, -10i32..10).prop_map(|(r, m, a, b)| Isometry::new(r, m, (a, b)))
}

proptest! {
    #[test]
    fn composition_is_associative(f in any_isometry(), g in any_isometry(), h in any_isometry(), c in any_cell()) {
        prop_assert_eq!(f.compose(&g).compose(&h), f.compose(&g.compose(&h)));
        prop_assert_eq!(f.compose(&Isometry::IDENTITY), f);
        prop_assert_eq!(f.compose(&f.inverse()), Isometry::IDENTITY);
        prop_assert_eq!(f.compose(&g).apply_cell(c), f.apply_cell(g.apply_cell(c)));
    }

    #[test]
    fn isometries_preserve_incidence(g in any_isometry(), c in any_cell()) {
        let image = g.apply_cell(c);
        prop_assert_eq!(image.kind == CellKind::Hex, c.kind == CellKind::Hex);
        for k in 0..c.corner_count() {
            let v = g.apply_vertex(c.vertex(k));
            prop_assert!(image.corner_at(v).is_some());
            let (shift, rev) = g.corner_map(c);
            let n = c.corner_count();
            let mapped = if rev { (shift + n - k) % n } else { (k + shift) % n };
            prop_assert_eq!(image.vertex(mapped), v);
        }
        let touching: BTreeSet<CellIndex> = c.touching().into_iter().map(|t| g.apply_cell(t)).collect();
        prop_assert_eq!(touching, image.touching().into_iter().collect::<BTreeSet<_>>());
    }

    #[test]
    fn neighbours_are_translation_covariant(a in -30i32..30, b in -30i32..30) {
        let h = CellIndex::hex(a, b);
        for (t, o) in hex_tri_neighbors(h).unwrap().iter().zip(hex_tri_neighbors(CellIndex::hex(0, 0)).unwrap()) {
            prop_assert_eq!(*t, o.translated(a, b));
            prop_assert!(tri_corner_hexes(*t).unwrap().contains(&h));
        }
        let moved: BTreeSet<CellIndex> = disk(CellIndex::hex(0, 0), 2).into_iter().map(|c| c.translated(a, b)).collect();
        prop_assert_eq!(disk(h, 2), moved);
    }

    #[test]
    fn vertices_have_one_name(c in any_cell(), k in 0usize..6) {
        let v = c.vertex(k % c.corner_count());
        for (d, j) in v.star() {
            prop_assert_eq!(d.vertex(j), v);
        }
        let (x, y) = v.pos6();
        prop_assert_eq!(pegasus_core::VertexId::from_pos6(x, y), Some(v));
    }
}
