//! Independent checks: an unpruned brute-force counter, a translation
//! scanner and tile statistics.

use std::collections::{BTreeMap, BTreeSet};

use crate::lattice::{CellIndex, VertexId};
use crate::par;
use crate::patch::Patch;
use crate::rules::{RuleSet, Shape, Star, StarEntry};

/// Largest region [`brute_force_count`] accepts.
pub const BRUTE_FORCE_CAP: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("region has {0} free cells; brute force is capped at {BRUTE_FORCE_CAP}")]
    RegionTooLarge(usize),
}

/// Can the partial star be filled in to an atlas entry?
fn completable(rs: &RuleSet, partial: &[Option<StarEntry>; 4]) -> bool {
    rs.atlas().iter().any(|s: &Star| {
        [0, 2].iter().any(|&r| (0..4).all(|i| partial[i].is_none_or(|e| e == s[(i + r) % 4])))
    })
}

/// Judges every vertex touched by `p`: full stars must be in the atlas,
/// partial ones must be completable.
pub fn locally_legal(rs: &RuleSet, p: &Patch) -> bool {
    p.vertices().into_iter().all(|v| vertex_ok(rs, p, v))
}

fn vertex_ok(rs: &RuleSet, p: &Patch, v: VertexId) -> bool {
    let star = p.star_at(rs, v);
    match p.full_star(rs, v) {
        Some(full) => rs.vertex_allowed(&full).unwrap_or(false),
        None => completable(rs, &star),
    }
}

/// Counts assignments of every free cell of `region` (cells not already in
/// `seed`) by walking the full product of variants, keeping those for which
/// [`locally_legal`] holds.
pub fn brute_force_count(rs: &RuleSet, region: &BTreeSet<CellIndex>, seed: &Patch) -> Result<u64, AnalysisError> {
    let free: Vec<CellIndex> = region.iter().filter(|c| !seed.contains(c)).copied().collect();
    if free.len() > BRUTE_FORCE_CAP {
        return Err(AnalysisError::RegionTooLarge(free.len()));
    }
    let options: Vec<_> = free.iter().map(|c| rs.variants(Shape::of_cell(c.kind))).collect();
    if options.iter().any(|o| o.is_empty()) {
        return Ok(0);
    }
    let mut vertices: BTreeSet<VertexId> = seed.vertices();
    vertices.extend(free.iter().flat_map(|c| c.vertices()));
    let mut digits = vec![0usize; free.len()];
    let mut count = 0;
    loop {
        let mut p = seed.clone();
        for (i, c) in free.iter().enumerate() {
            p.insert(*c, options[i][digits[i]]).expect("free cells are empty and shaped");
        }
        if vertices.iter().all(|&v| vertex_ok(rs, &p, v)) {
            count += 1;
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                return Ok(count);
            }
            digits[i] += 1;
            if digits[i] < options[i].len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Hexagonal distance of a lattice vector.
pub fn lattice_norm((a, b): (i32, i32)) -> i32 {
    a.abs().max(b.abs()).max((a + b).abs())
}

/// Largest lattice distance between two placed cells.
pub fn diameter(p: &Patch) -> i32 {
    let pts: BTreeSet<(i32, i32)> = p.cells().map(|c| (c.a, c.b)).collect();
    let mut best = 0;
    for x in &pts {
        for y in &pts {
            best = best.max(lattice_norm((x.0 - y.0, x.1 - y.1)));
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodReport {
    pub max_norm: i32,
    /// Accepted translation vectors, sorted.
    pub periods: Vec<(i32, i32)>,
    /// Overlap as a fraction of the patch, per accepted vector.
    pub coverage: Vec<f64>,
}

/// Fraction of placed cells `c` whose translate `c + v` is also placed, and
/// whether all those translates carry the same tile.
pub fn translation_overlap(p: &Patch, v: (i32, i32)) -> (usize, bool) {
    let mut overlap = 0;
    for (c, t) in p.iter() {
        if let Some(u) = p.get(&c.translated(v.0, v.1)) {
            overlap += 1;
            if u != t {
                return (overlap, false);
            }
        }
    }
    (overlap, true)
}

/// Nonzero vectors of norm at most `max_norm` under which `p` agrees with
/// its own translate on an overlap of at least `min_overlap` of its cells.
pub fn periodicity_scan(p: &Patch, max_norm: i32, min_overlap: f64) -> PeriodReport {
    let mut vectors = Vec::new();
    for a in -max_norm..=max_norm {
        for b in -max_norm..=max_norm {
            if (a, b) != (0, 0) && lattice_norm((a, b)) <= max_norm {
                vectors.push((a, b));
            }
        }
    }
    let n = p.len();
    let hits: Vec<Option<((i32, i32), f64)>> = par::map(vectors, |v| {
        let (overlap, agree) = translation_overlap(p, v);
        let frac = if n == 0 { 0.0 } else { overlap as f64 / n as f64 };
        (agree && n > 0 && frac >= min_overlap).then_some((v, frac))
    });
    let (periods, coverage) = hits.into_iter().flatten().unzip();
    PeriodReport { max_norm, periods, coverage }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Census {
    pub hexagons: usize,
    pub triangles: usize,
    /// Tiles per prototile name.
    pub per_prototile: BTreeMap<String, usize>,
    /// Tiles per oriented variant, keyed `name r<rot>[m]`.
    pub per_orientation: BTreeMap<String, usize>,
}

impl Census {
    pub fn total(&self) -> usize {
        self.hexagons + self.triangles
    }

    /// Triangles per hexagon, or `None` without hexagons.
    pub fn ratio(&self) -> Option<f64> {
        (self.hexagons > 0).then(|| self.triangles as f64 / self.hexagons as f64)
    }
}

pub fn census(rs: &RuleSet, p: &Patch) -> Census {
    let mut c = Census::default();
    for proto in rs.prototiles() {
        c.per_prototile.insert(proto.name.clone(), 0);
    }
    for (_, t) in p.iter() {
        match t.shape() {
            Shape::Hexagon => c.hexagons += 1,
            Shape::Triangle => c.triangles += 1,
        }
        let name = &rs.prototiles()[t.prototile()].name;
        *c.per_prototile.entry(name.clone()).or_default() += 1;
        let key = format!("{name} r{}{}", t.rotation(), if t.reflected() { "m" } else { "" });
        *c.per_orientation.entry(key).or_default() += 1;
    }
    c
}

/// Cells of `p` whose whole vertex neighbourhood is placed.
pub fn interior(p: &Patch) -> Patch {
    let keep: BTreeSet<CellIndex> =
        p.cells().filter(|c| c.touching().iter().all(|n| p.contains(n))).copied().collect();
    p.restrict(&keep)
}
