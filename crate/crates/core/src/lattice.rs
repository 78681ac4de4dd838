//! Integer arithmetic on the trihexagonal (3.6.3.6) cell complex.
//!
//! Hexagon centres sit on the triangular lattice `p(a, b) = a·u + b·v` with
//! `u = (1, 0)` and `v = (1/2, √3/2)`. Every lattice triangle carries one
//! small triangle cell whose corners are the midpoints of its edges, and every
//! lattice edge midpoint is a vertex where two hexagons and two triangles meet.
//!
//! Internally positions are handled in "sixfold" coordinates: hexagon centres
//! at `6·p`, triangle centroids at `2·(p₁ + p₂ + p₃)` and vertices at
//! `3·(p + q)`. All of them are integral, so isometries act exactly.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

/// The six lattice directions, counter-clockwise from 0°.
pub const DIRECTIONS: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellKind {
    Hex,
    TriUp,
    TriDown,
}

impl CellKind {
    pub fn is_hex(self) -> bool {
        self == CellKind::Hex
    }

    pub fn corner_count(self) -> usize {
        if self.is_hex() {
            6
        } else {
            3
        }
    }

    /// Token used in patch and schedule files.
    pub fn token(self) -> &'static str {
        match self {
            CellKind::Hex => "hex",
            CellKind::TriUp => "triu",
            CellKind::TriDown => "trid",
        }
    }

    pub fn from_token(s: &str) -> Option<CellKind> {
        match s {
            "hex" => Some(CellKind::Hex),
            "triu" => Some(CellKind::TriUp),
            "trid" => Some(CellKind::TriDown),
            _ => None,
        }
    }
}

/// Address of a cell of the complex. Every `(kind, a, b)` is a valid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellIndex {
    pub kind: CellKind,
    pub a: i32,
    pub b: i32,
}

impl CellIndex {
    pub const fn hex(a: i32, b: i32) -> Self {
        CellIndex { kind: CellKind::Hex, a, b }
    }

    pub const fn tri_up(a: i32, b: i32) -> Self {
        CellIndex { kind: CellKind::TriUp, a, b }
    }

    pub const fn tri_down(a: i32, b: i32) -> Self {
        CellIndex { kind: CellKind::TriDown, a, b }
    }

    pub fn is_hex(&self) -> bool {
        self.kind.is_hex()
    }

    pub fn translated(&self, da: i32, db: i32) -> Self {
        CellIndex { kind: self.kind, a: self.a + da, b: self.b + db }
    }

    /// Position in sixfold coordinates.
    pub fn center6(&self) -> (i32, i32) {
        match self.kind {
            CellKind::Hex => (6 * self.a, 6 * self.b),
            CellKind::TriUp => (6 * self.a + 2, 6 * self.b + 2),
            CellKind::TriDown => (6 * self.a + 4, 6 * self.b + 4),
        }
    }

    pub fn from_center6(x: i32, y: i32) -> Option<Self> {
        let (qa, ra) = (x.div_euclid(6), x.rem_euclid(6));
        let (qb, rb) = (y.div_euclid(6), y.rem_euclid(6));
        match (ra, rb) {
            (0, 0) => Some(CellIndex::hex(qa, qb)),
            (2, 2) => Some(CellIndex::tri_up(qa, qb)),
            (4, 4) => Some(CellIndex::tri_down(qa, qb)),
            _ => None,
        }
    }

    pub fn corner_count(&self) -> usize {
        self.kind.corner_count()
    }

    /// The vertex at corner `k`. Hexagon corner `k` points along `DIRECTIONS[k]`;
    /// triangle corner `k` lies between corner hexagons `k` and `k + 1`.
    pub fn vertex(&self, k: usize) -> VertexId {
        match self.kind {
            CellKind::Hex => {
                let (da, db) = DIRECTIONS[k % 6];
                VertexId::between((self.a, self.b), (self.a + da, self.b + db))
            }
            _ => {
                let hs = tri_hexes(*self);
                let p = hs[k % 3];
                let q = hs[(k + 1) % 3];
                VertexId::between((p.a, p.b), (q.a, q.b))
            }
        }
    }

    pub fn vertices(&self) -> Vec<VertexId> {
        (0..self.corner_count()).map(|k| self.vertex(k)).collect()
    }

    /// Corner index of `v` on this cell, if `v` is one of its corners.
    pub fn corner_at(&self, v: VertexId) -> Option<usize> {
        (0..self.corner_count()).find(|&k| self.vertex(k) == v)
    }

    /// Cells sharing at least one vertex with this one.
    pub fn touching(&self) -> Vec<CellIndex> {
        let mut out = BTreeSet::new();
        for v in self.vertices() {
            for (c, _) in v.star() {
                if c != *self {
                    out.insert(c);
                }
            }
        }
        out.into_iter().collect()
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.kind.token(), self.a, self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeDir {
    E,
    NE,
    NW,
}

impl EdgeDir {
    fn offset(self) -> (i32, i32) {
        match self {
            EdgeDir::E => (1, 0),
            EdgeDir::NE => (0, 1),
            EdgeDir::NW => (-1, 1),
        }
    }
}

/// A vertex of the complex: the midpoint of the lattice edge from `p(a, b)`
/// along `dir`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId {
    pub a: i32,
    pub b: i32,
    pub dir: EdgeDir,
}

impl VertexId {
    pub const fn new(a: i32, b: i32, dir: EdgeDir) -> Self {
        VertexId { a, b, dir }
    }

    /// The vertex between two adjacent lattice points.
    pub fn between(p: (i32, i32), q: (i32, i32)) -> Self {
        VertexId::from_doubled(p.0 + q.0, p.1 + q.1)
            .expect("lattice points are not adjacent")
    }

    /// Decode `p + q` (twice the midpoint) into a canonical id.
    pub fn from_doubled(x: i32, y: i32) -> Option<Self> {
        let dir = match (x.rem_euclid(2), y.rem_euclid(2)) {
            (1, 0) => EdgeDir::E,
            (0, 1) => EdgeDir::NE,
            (1, 1) => EdgeDir::NW,
            _ => return None,
        };
        let (da, db) = dir.offset();
        Some(VertexId { a: (x - da) / 2, b: (y - db) / 2, dir })
    }

    pub fn doubled(&self) -> (i32, i32) {
        let (da, db) = self.dir.offset();
        (2 * self.a + da, 2 * self.b + db)
    }

    pub fn pos6(&self) -> (i32, i32) {
        let (x, y) = self.doubled();
        (3 * x, 3 * y)
    }

    pub fn from_pos6(x: i32, y: i32) -> Option<Self> {
        if x % 3 != 0 || y % 3 != 0 {
            return None;
        }
        VertexId::from_doubled(x / 3, y / 3)
    }

    /// The two hexagons at this vertex, base point first.
    pub fn hexes(&self) -> [CellIndex; 2] {
        let (da, db) = self.dir.offset();
        [CellIndex::hex(self.a, self.b), CellIndex::hex(self.a + da, self.b + db)]
    }

    /// The four cells around the vertex in counter-clockwise order,
    /// `(Hex p, Tri, Hex q, Tri)`, each with the corner index touching it.
    pub fn star(&self) -> [(CellIndex, usize); 4] {
        let (a, b) = (self.a, self.b);
        let [p, q] = self.hexes();
        let (right, left) = match self.dir {
            EdgeDir::E => (CellIndex::tri_down(a, b - 1), CellIndex::tri_up(a, b)),
            EdgeDir::NE => (CellIndex::tri_up(a, b), CellIndex::tri_down(a - 1, b)),
            EdgeDir::NW => (CellIndex::tri_down(a - 1, b), CellIndex::tri_up(a - 1, b)),
        };
        let v = *self;
        let corner = |c: CellIndex| c.corner_at(v).expect("star cell misses its vertex");
        [(p, corner(p)), (right, corner(right)), (q, corner(q)), (left, corner(left))]
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {:?})", self.a, self.b, self.dir)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error("expected a hexagon cell, got {0}")]
    NotHex(CellIndex),
    #[error("expected a triangle cell, got {0}")]
    NotTriangle(CellIndex),
}

fn tri_hexes(t: CellIndex) -> [CellIndex; 3] {
    let (a, b) = (t.a, t.b);
    match t.kind {
        CellKind::TriUp => [CellIndex::hex(a, b), CellIndex::hex(a + 1, b), CellIndex::hex(a, b + 1)],
        CellKind::TriDown => {
            [CellIndex::hex(a + 1, b), CellIndex::hex(a + 1, b + 1), CellIndex::hex(a, b + 1)]
        }
        CellKind::Hex => unreachable!("tri_hexes on a hexagon"),
    }
}

/// The six triangles sharing an edge with `h`, counter-clockwise from 30°.
pub fn hex_tri_neighbors(h: CellIndex) -> Result<[CellIndex; 6], LatticeError> {
    if !h.is_hex() {
        return Err(LatticeError::NotHex(h));
    }
    let (a, b) = (h.a, h.b);
    Ok([
        CellIndex::tri_up(a, b),
        CellIndex::tri_down(a - 1, b),
        CellIndex::tri_up(a - 1, b),
        CellIndex::tri_down(a - 1, b - 1),
        CellIndex::tri_up(a, b - 1),
        CellIndex::tri_down(a, b - 1),
    ])
}

/// The three hexagons sharing an edge with triangle `t`, counter-clockwise.
pub fn tri_corner_hexes(t: CellIndex) -> Result<[CellIndex; 3], LatticeError> {
    if t.is_hex() {
        return Err(LatticeError::NotTriangle(t));
    }
    Ok(tri_hexes(t))
}

/// Cells within `r` steps of `center` under vertex-sharing adjacency.
pub fn disk(center: CellIndex, r: usize) -> BTreeSet<CellIndex> {
    let mut seen = BTreeSet::from([center]);
    let mut queue = VecDeque::from([(center, 0usize)]);
    while let Some((c, d)) = queue.pop_front() {
        if d == r {
            continue;
        }
        for n in c.touching() {
            if seen.insert(n) {
                queue.push_back((n, d + 1));
            }
        }
    }
    seen
}

/// Cells of `region` in breadth-first order from `start` (ties broken by
/// cell order); cells unreachable inside the region come last.
pub fn bfs_order(start: CellIndex, region: &BTreeSet<CellIndex>) -> Vec<CellIndex> {
    let mut out = Vec::with_capacity(region.len());
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    if region.contains(&start) {
        seen.insert(start);
        queue.push_back(start);
    }
    while let Some(c) = queue.pop_front() {
        out.push(c);
        for n in c.touching() {
            if region.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    out.extend(region.iter().filter(|c| !seen.contains(c)));
    out
}

/// 2×2 integer matrix acting on `(a, b)` lattice coordinates.
type Mat = [[i32; 2]; 2];

const ROT60: Mat = [[0, -1], [1, 1]];
const MIRROR: Mat = [[1, 1], [0, -1]];
const IDENTITY: Mat = [[1, 0], [0, 1]];

fn mat_mul(x: Mat, y: Mat) -> Mat {
    let mut out = [[0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

fn mat_apply(m: Mat, (x, y): (i32, i32)) -> (i32, i32) {
    (m[0][0] * x + m[0][1] * y, m[1][0] * x + m[1][1] * y)
}

/// A symmetry of the complex: `x ↦ R^rotation · F^reflected · x + translation`,
/// where `R` turns 60° counter-clockwise about `Hex(0, 0)` and `F` mirrors in
/// the line through `Hex(0, 0)` and `Hex(1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Isometry {
    pub rotation: u8,
    pub reflected: bool,
    pub translation: (i32, i32),
}

impl Default for Isometry {
    fn default() -> Self {
        Isometry::IDENTITY
    }
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry { rotation: 0, reflected: false, translation: (0, 0) };

    pub fn new(rotation: u8, reflected: bool, translation: (i32, i32)) -> Self {
        Isometry { rotation: rotation % 6, reflected, translation }
    }

    pub fn rotation(steps: i32) -> Self {
        Isometry::new(steps.rem_euclid(6) as u8, false, (0, 0))
    }

    pub fn reflection() -> Self {
        Isometry::new(0, true, (0, 0))
    }

    pub fn translation(da: i32, db: i32) -> Self {
        Isometry::new(0, false, (da, db))
    }

    /// All twelve symmetries fixing `Hex(0, 0)`.
    pub fn point_group() -> impl Iterator<Item = Isometry> {
        (0..6u8).flat_map(|r| [false, true].map(move |f| Isometry::new(r, f, (0, 0))))
    }

    pub(crate) fn linear(&self) -> Mat {
        let mut m = if self.reflected { MIRROR } else { IDENTITY };
        for _ in 0..self.rotation {
            m = mat_mul(ROT60, m);
        }
        m
    }

    /// Preserves orientation (no reflection)?
    pub fn is_proper(&self) -> bool {
        !self.reflected
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        let rot = if self.reflected {
            self.rotation as i32 - other.rotation as i32
        } else {
            self.rotation as i32 + other.rotation as i32
        };
        let t = mat_apply(self.linear(), other.translation);
        Isometry::new(
            rot.rem_euclid(6) as u8,
            self.reflected ^ other.reflected,
            (t.0 + self.translation.0, t.1 + self.translation.1),
        )
    }

    pub fn inverse(&self) -> Isometry {
        let lin = Isometry::new(self.rotation, self.reflected, (0, 0));
        let lin_inv = if self.reflected {
            lin
        } else {
            Isometry::rotation(-(self.rotation as i32))
        };
        let t = mat_apply(lin_inv.linear(), self.translation);
        Isometry { translation: (-t.0, -t.1), ..lin_inv }
    }

    pub fn apply_point6(&self, p: (i32, i32)) -> (i32, i32) {
        let (x, y) = mat_apply(self.linear(), p);
        (x + 6 * self.translation.0, y + 6 * self.translation.1)
    }

    pub fn apply_cell(&self, c: CellIndex) -> CellIndex {
        let (x, y) = self.apply_point6(c.center6());
        CellIndex::from_center6(x, y).expect("isometry maps cells to cells")
    }

    pub fn apply_vertex(&self, v: VertexId) -> VertexId {
        let (x, y) = self.apply_point6(v.pos6());
        VertexId::from_pos6(x, y).expect("isometry maps vertices to vertices")
    }

    /// Corner correspondence `c` → `g(c)`: returns `(shift, reversed)` such
    /// that corner `k` of `c` lands on corner `shift + k` (or `shift - k` when
    /// reversed) of the image cell.
    pub fn corner_map(&self, c: CellIndex) -> (usize, bool) {
        let image = self.apply_cell(c);
        let n = c.corner_count();
        let k0 = image.corner_at(self.apply_vertex(c.vertex(0))).expect("corner image");
        let k1 = image.corner_at(self.apply_vertex(c.vertex(1))).expect("corner image");
        (k0, (k1 + n - k0) % n != 1)
    }
}

/// Maps a level-(k+1) lattice into the level-k lattice: super-lattice
/// coordinates `(A, B)` land on `(A - B, A + 2B)`, an index-3 sublattice
/// rotated by 30°.
pub fn super_to_base(p: (i32, i32)) -> (i32, i32) {
    (p.0 - p.1, p.0 + 2 * p.1)
}

/// Inverse of [`super_to_base`] where defined.
pub fn base_to_super(p: (i32, i32)) -> Option<(i32, i32)> {
    let (x, y) = (2 * p.0 + p.1, p.1 - p.0);
    if x % 3 == 0 && y % 3 == 0 {
        Some((x / 3, y / 3))
    } else {
        None
    }
}

/// Level-k image of a level-(k+1) vertex.
pub fn super_vertex_to_base(v: VertexId) -> VertexId {
    let (x, y) = super_to_base(v.doubled());
    VertexId::from_doubled(x, y).expect("super vertex lands on a vertex")
}

/// Conjugate a level-(k+1) isometry to the level-k lattice.
pub fn super_isometry_to_base(g: &Isometry) -> Isometry {
    // the linear part commutes with rotations; the mirror becomes the mirror
    // in the 30° line, i.e. R·F
    let (rotation, reflected) = if g.reflected {
        ((g.rotation + 1) % 6, true)
    } else {
        (g.rotation, false)
    };
    Isometry::new(rotation, reflected, super_to_base(g.translation))
}
