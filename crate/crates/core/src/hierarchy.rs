//! Supertiles: substitution, inflation and composition.
//!
//! One level up, hexagon centres form the index-3 sublattice `a ≡ b (mod 3)`
//! (see [`super_to_base`]). A super-hexagon at `Hex(A, B)` consists of the
//! hexagon at `L(A, B)` and its six triangles; each super-triangle consists of
//! the single hexagon at its centroid. Super-hexagon corner `K` is the outer
//! tip of triangle child `K`; super-triangle corners are alternate corners of
//! their hexagon child.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::lattice::{
    base_to_super, hex_tri_neighbors, super_isometry_to_base, super_to_base, CellIndex, CellKind, Isometry,
    VertexId,
};
use crate::forcing::{terminal_configuration, CaseTree, Forcer, Manifest};
use crate::patch::Patch;
use crate::rules::{OrientedTile, RuleSet, Shape, Star, TipLabel};

/// Corner of triangle child `K` that is super-hexagon corner `K`.
pub const HEX_TIP_CORNER: [usize; 3 * 2] = [1, 1, 2, 2, 0, 0];
/// Hexagon-child corners carrying super-triangle corners 0, 1, 2.
pub const TRI_UP_CHILD_CORNERS: [usize; 3] = [5, 1, 3];
pub const TRI_DOWN_CHILD_CORNERS: [usize; 3] = [0, 2, 4];

/// Completion cap for the forcing runs made here.
pub const FORCING_LIMIT: u64 = 1_000_000;

/// Level-k cell of the child hexagon for a level-(k+1) cell.
pub fn child_hex(super_cell: CellIndex) -> CellIndex {
    let (x, y) = super_to_base((super_cell.a, super_cell.b));
    match super_cell.kind {
        CellKind::Hex => CellIndex::hex(x, y),
        CellKind::TriUp => CellIndex::hex(x, y + 1),
        CellKind::TriDown => CellIndex::hex(x, y + 2),
    }
}

/// All level-k cells making up a level-(k+1) cell.
pub fn child_cells(super_cell: CellIndex) -> Vec<CellIndex> {
    let h = child_hex(super_cell);
    let mut out = vec![h];
    if super_cell.is_hex() {
        out.extend(hex_tri_neighbors(h).expect("hex"));
    }
    out
}

/// The level-(k+1) cell a level-k cell belongs to, given the coset of
/// super-hexagon centres (`offset` is one such centre, reduced mod the
/// sublattice).
pub fn parent_cell(c: CellIndex, offset: (i32, i32)) -> CellIndex {
    let h = match c.kind {
        CellKind::Hex => c,
        _ => {
            // the triangle's unique corner hexagon on the centre coset
            *crate::lattice::tri_corner_hexes(c)
                .expect("triangle")
                .iter()
                .find(|h| on_coset((h.a, h.b), offset))
                .expect("one corner per coset")
        }
    };
    let (x, y) = (h.a - offset.0, h.b - offset.1);
    if let Some((a, b)) = base_to_super((x, y)) {
        return CellIndex::hex(a, b);
    }
    // a super-triangle child: TriUp children sit at L(A,B) + (0,1)
    if let Some((a, b)) = base_to_super((x, y - 1)) {
        return CellIndex::tri_up(a, b);
    }
    let (a, b) = base_to_super((x, y - 2)).expect("three cosets");
    CellIndex::tri_down(a, b)
}

/// Is `p` a super-hexagon centre for the coset through `offset`?
pub fn on_coset(p: (i32, i32), offset: (i32, i32)) -> bool {
    (p.0 - offset.0 - (p.1 - offset.1)).rem_euclid(3) == 0
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubstitutionError {
    #[error("child {0} is not forced")]
    NotForced(CellIndex),
    #[error("no label bijection: {0}")]
    NoBijection(String),
    #[error("children of {0} depend on the choice of symmetry")]
    Inconsistent(CellIndex),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Children of the canonical supertiles plus the label bijection.
///
/// The canonical super-hexagon is `Hex(0, 0)` carrying the hexagon prototile
/// at rotation 0; the canonical super-triangle is `TriUp(0, 0)` carrying the
/// triangle prototile at rotation 0. Every other supertile is an isometric
/// image of one of these. `bijection[l]` is the super-level label shown by a
/// tip labelled `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutionRule {
    pub hex_children: Vec<(CellIndex, OrientedTile)>,
    pub tri_children: Vec<(CellIndex, OrientedTile)>,
    pub bijection: Vec<TipLabel>,
}

fn proto_of(rs: &RuleSet, shape: Shape) -> usize {
    rs.prototiles().iter().position(|p| p.shape == shape).expect("rule set has both shapes")
}

/// The canonical super cell and tile for a shape.
pub fn canonical_super(rs: &RuleSet, shape: Shape) -> (CellIndex, OrientedTile) {
    let cell = match shape {
        Shape::Hexagon => CellIndex::hex(0, 0),
        Shape::Triangle => CellIndex::tri_up(0, 0),
    };
    (cell, rs.orient(proto_of(rs, shape), 0, false).expect("identity orientation"))
}

/// Super-level isometries taking the canonical supertile onto `tile` at `cell`.
pub fn placing_isometries(rs: &RuleSet, cell: CellIndex, tile: OrientedTile) -> Vec<Isometry> {
    let (c0, t0) = canonical_super(rs, tile.shape());
    let mut out = Vec::new();
    for h in Isometry::point_group() {
        if !h.is_proper() && !rs.reflections_allowed() {
            continue;
        }
        let img = h.apply_cell(c0);
        if img.kind != cell.kind {
            continue;
        }
        let g = Isometry::translation(cell.a - img.a, cell.b - img.b).compose(&h);
        let (shift, rev) = g.corner_map(c0);
        if rs.remap(&t0, shift, rev) == tile {
            out.push(g);
        }
    }
    out
}

impl SubstitutionRule {
    fn canonical_children(&self, shape: Shape) -> &[(CellIndex, OrientedTile)] {
        match shape {
            Shape::Hexagon => &self.hex_children,
            Shape::Triangle => &self.tri_children,
        }
    }

    /// Children of one supertile, in level-k coordinates.
    pub fn children(&self, rs: &RuleSet, cell: CellIndex, tile: OrientedTile) -> Vec<(CellIndex, OrientedTile)> {
        let g = placing_isometries(rs, cell, tile)[0];
        self.children_via(rs, &g, tile.shape())
    }

    fn children_via(&self, rs: &RuleSet, g: &Isometry, shape: Shape) -> Vec<(CellIndex, OrientedTile)> {
        let base = super_isometry_to_base(g);
        let mut out: Vec<_> = self
            .canonical_children(shape)
            .iter()
            .map(|(c, t)| {
                let (shift, rev) = base.corner_map(*c);
                (base.apply_cell(*c), rs.remap(t, shift, rev))
            })
            .collect();
        out.sort();
        out
    }

    /// Checks that children are well defined for every orientation and that
    /// the tips read back the parent's labels through the bijection.
    pub fn validate(&self, rs: &RuleSet) -> Result<(), SubstitutionError> {
        for shape in [Shape::Hexagon, Shape::Triangle] {
            let (c0, _) = canonical_super(rs, shape);
            let expect = child_cells(c0);
            let got: BTreeSet<_> = self.canonical_children(shape).iter().map(|(c, _)| *c).collect();
            if got != expect.iter().copied().collect() {
                return Err(SubstitutionError::NoBijection(format!("wrong child cells for the {shape:?}")));
            }
            for &tile in rs.variants(shape) {
                let gs = placing_isometries(rs, c0, tile);
                let first = self.children_via(rs, &gs[0], shape);
                if gs.iter().any(|g| self.children_via(rs, g, shape) != first) {
                    return Err(SubstitutionError::Inconsistent(c0));
                }
                let kids: Patch = first.into_iter().collect();
                let labels = super_labels(rs, &kids, c0, &self.bijection)
                    .ok_or_else(|| SubstitutionError::NoBijection("missing tip".into()))?;
                if labels != rs.labels(&tile) {
                    return Err(SubstitutionError::NoBijection(format!(
                        "tips of {} read {:?}, expected {:?}",
                        c0,
                        labels,
                        rs.labels(&tile)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Replace every supertile of `sp` by its children.
    pub fn decompose(&self, rs: &RuleSet, sp: &Patch) -> Patch {
        let mut out = Patch::new();
        for (c, t) in sp.iter() {
            for (cc, ct) in self.children(rs, *c, *t) {
                out.insert(cc, ct).expect("children of distinct supertiles are disjoint");
            }
        }
        out
    }

    /// Text form: the bijection, then one line per canonical child.
    pub fn serialize(&self, rs: &RuleSet) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ruleset: {}", rs.fingerprint());
        let pairs: Vec<String> = self
            .bijection
            .iter()
            .enumerate()
            .map(|(i, l)| format!("{}->{}", rs.symbol(TipLabel(i as u16)), rs.symbol(*l)))
            .collect();
        let _ = writeln!(out, "bijection: {}", pairs.join(", "));
        for (name, kids) in [("hexagon", &self.hex_children), ("triangle", &self.tri_children)] {
            for (c, t) in kids.iter() {
                let _ = write!(
                    out,
                    "{name} {} {} {} {} r{}",
                    c.kind.token(),
                    c.a,
                    c.b,
                    rs.prototiles()[t.prototile()].name,
                    t.rotation()
                );
                if t.reflected() {
                    out.push_str(" m");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str, rs: &RuleSet) -> Result<SubstitutionRule, SubstitutionError> {
        let err = |line: usize, message: String| SubstitutionError::Parse { line, message };
        let mut bijection: Option<Vec<TipLabel>> = None;
        let mut hex_body = String::new();
        let mut tri_body = String::new();
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || line.starts_with("ruleset:") {
                if let Some(f) = line.strip_prefix("ruleset:") {
                    if f.trim() != rs.fingerprint() {
                        return Err(err(ln, format!("written for ruleset `{}`", f.trim())));
                    }
                }
                continue;
            }
            if let Some(body) = line.strip_prefix("bijection:") {
                let mut map = vec![None; rs.alphabet().len()];
                for pair in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                    let (from, to) = pair.split_once("->").ok_or_else(|| err(ln, format!("bad pair `{pair}`")))?;
                    let from = rs.label(from.trim()).ok_or_else(|| err(ln, format!("unknown label `{from}`")))?;
                    let to = rs.label(to.trim()).ok_or_else(|| err(ln, format!("unknown label `{to}`")))?;
                    map[from.0 as usize] = Some(to);
                }
                let map: Option<Vec<TipLabel>> = map.into_iter().collect();
                bijection = Some(map.ok_or_else(|| err(ln, "bijection is not total".into()))?);
                continue;
            }
            let (which, rest) = line.split_once(' ').ok_or_else(|| err(ln, format!("malformed line `{line}`")))?;
            let body = match which {
                "hexagon" => &mut hex_body,
                "triangle" => &mut tri_body,
                _ => return Err(err(ln, format!("unknown supertile `{which}`"))),
            };
            body.push_str(rest);
            body.push('\n');
        }
        let bijection = bijection.ok_or_else(|| err(1, "missing `bijection:` line".into()))?;
        let header = format!("ruleset: {}\n", rs.fingerprint());
        let kids = |body: &str| -> Result<Vec<(CellIndex, OrientedTile)>, SubstitutionError> {
            let p = Patch::parse(&(header.clone() + body), rs).map_err(|e| err(e.line, e.message))?;
            Ok(p.iter().map(|(c, t)| (*c, *t)).collect())
        };
        let sub = SubstitutionRule { hex_children: kids(&hex_body)?, tri_children: kids(&tri_body)?, bijection };
        sub.validate(rs)?;
        Ok(sub)
    }
}

/// Super-level corner labels of the supertile on `super_cell` read from the
/// tips of its children in `p`, or `None` if a tip is missing.
pub fn super_labels(rs: &RuleSet, p: &Patch, super_cell: CellIndex, bijection: &[TipLabel]) -> Option<Vec<TipLabel>> {
    let h = child_hex(super_cell);
    let tips: Vec<(CellIndex, usize)> = match super_cell.kind {
        CellKind::Hex => {
            let tris = hex_tri_neighbors(h).expect("hex");
            (0..6).map(|k| (tris[k], HEX_TIP_CORNER[k])).collect()
        }
        CellKind::TriUp => TRI_UP_CHILD_CORNERS.iter().map(|&k| (h, k)).collect(),
        CellKind::TriDown => TRI_DOWN_CHILD_CORNERS.iter().map(|&k| (h, k)).collect(),
    };
    tips.into_iter()
        .map(|(c, k)| p.get(&c).map(|t| bijection[rs.labels(t)[k].0 as usize]))
        .collect()
}

/// `levels` rounds of decomposition starting from one canonical supertile.
pub fn inflate(rs: &RuleSet, sub: &SubstitutionRule, seed: Shape, levels: u32) -> Patch {
    let (cell, tile) = canonical_super(rs, seed);
    let mut p: Patch = [(cell, tile)].into_iter().collect();
    for _ in 0..levels {
        p = sub.decompose(rs, &p);
    }
    p
}

/// Every vertex star occurring in the fully surrounded part of `p`.
pub fn stars_of(rs: &RuleSet, p: &Patch) -> BTreeSet<Star> {
    p.surrounded_vertices()
        .filter_map(|v| p.full_star(rs, v))
        .map(|s| crate::rules::canonical_star(&s).expect("lattice stars alternate"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CaseLabel {
    Case1,
    Case2,
    Case3,
    Undetermined,
}

impl CaseLabel {
    pub const CASES: [CaseLabel; 3] = [CaseLabel::Case1, CaseLabel::Case2, CaseLabel::Case3];

    pub fn token(self) -> &'static str {
        match self {
            CaseLabel::Case1 => "case1",
            CaseLabel::Case2 => "case2",
            CaseLabel::Case3 => "case3",
            CaseLabel::Undetermined => "undetermined",
        }
    }

    /// Case two and three hexagons centre super-hexagons; case one hexagons
    /// are super-triangles.
    pub fn is_centre(self) -> bool {
        matches!(self, CaseLabel::Case2 | CaseLabel::Case3)
    }
}

impl std::fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HierarchyError {
    #[error("no tile at {0}")]
    Unplaced(CellIndex),
    #[error("hexagon at {0} matches more than one case")]
    Ambiguous(CellIndex),
    #[error("terminal configurations of {0} and {1} cannot be told apart")]
    IndistinctCases(CaseLabel, CaseLabel),
    #[error("patch is not legal")]
    Illegal,
    #[error("partition conflict at {0}")]
    Conflict(CellIndex),
    #[error("cells around {0} do not form a supertile")]
    NotASupertile(CellIndex),
    #[error("case tree: {0}")]
    CaseTree(String),
    #[error("level-0 patch has nothing to decompose")]
    GroundLevel,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Image of a placed tile under `g`.
fn image(rs: &RuleSet, g: &Isometry, c: CellIndex, t: OrientedTile) -> (CellIndex, OrientedTile) {
    let (shift, rev) = g.corner_map(c);
    (g.apply_cell(c), rs.remap(&t, shift, rev))
}

/// Terminal configurations of the cases, in the frame where the examined
/// hexagon is the canonical hexagon tile on `Hex(0, 0)`. Several
/// configurations may share a label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseBook {
    entries: Vec<(CaseLabel, Patch)>,
    /// Cells on which some pair of terminals disagrees.
    key: Vec<CellIndex>,
}

impl CaseBook {
    pub fn new(entries: Vec<(CaseLabel, Patch)>) -> Result<CaseBook, HierarchyError> {
        let mut key = BTreeSet::new();
        for (i, (li, pi)) in entries.iter().enumerate() {
            for (lj, pj) in &entries[i + 1..] {
                let split = pi
                    .iter()
                    .find(|(c, t)| pj.get(c).is_some_and(|u| u != *t))
                    .map(|(c, _)| *c)
                    .ok_or(HierarchyError::IndistinctCases(*li, *lj))?;
                key.insert(split);
            }
        }
        Ok(CaseBook { entries, key: key.into_iter().collect() })
    }

    pub fn entries(&self) -> &[(CaseLabel, Patch)] {
        &self.entries
    }

    /// First terminal configuration carrying `case`.
    pub fn terminal(&self, case: CaseLabel) -> Option<&Patch> {
        self.entries.iter().find(|(l, _)| *l == case).map(|(_, p)| p)
    }

    /// Cells (relative to the examined hexagon) that must be placed for a
    /// label to be given.
    pub fn key_cells(&self) -> &[CellIndex] {
        &self.key
    }
}

/// The case book of a reproduced case tree: the terminal configuration of
/// each case, and of each further child named in `manifest`, under its
/// label.
pub fn case_book(rs: &RuleSet, tree: &CaseTree, manifest: &Manifest) -> Result<CaseBook, HierarchyError> {
    let named = tree.cases.into_iter().zip(manifest.labels).chain(manifest.also.iter().map(|&(k, l)| (k - 1, l)));
    let mut entries = Vec::new();
    for (child, l) in named {
        let term = terminal_configuration(rs, tree, child, FORCING_LIMIT).map_err(HierarchyError::CaseTree)?;
        entries.push((CaseLabel::CASES[(l.clamp(1, 3) - 1) as usize], term));
    }
    CaseBook::new(entries)
}

/// Case of the hexagon at `h`: the terminal configuration that `p` agrees
/// with around `h`, up to isometry.
pub fn classify_hexagon(rs: &RuleSet, book: &CaseBook, p: &Patch, h: CellIndex) -> Result<CaseLabel, HierarchyError> {
    let t = *p.get(&h).ok_or(HierarchyError::Unplaced(h))?;
    if !h.is_hex() {
        return Err(HierarchyError::Unplaced(h));
    }
    let mut found = CaseLabel::Undetermined;
    for g in placing_isometries(rs, h, t) {
        if book.key.iter().any(|c| !p.contains(&g.apply_cell(*c))) {
            continue;
        }
        for (case, term) in &book.entries {
            let agrees = term.iter().all(|(c, ct)| {
                let (ic, it) = image(rs, &g, *c, *ct);
                p.get(&ic).is_none_or(|x| *x == it)
            });
            if agrees {
                if found != CaseLabel::Undetermined && found != *case {
                    return Err(HierarchyError::Ambiguous(h));
                }
                found = *case;
            }
        }
    }
    Ok(found)
}

/// A patch of level-`level` supertiles. Level-k cell `X` has its child
/// hexagon at `L(X) + s` one level down, where `s` is that level's offset;
/// `anchor` packs the offsets of all levels as the level-0 position of the
/// level-`level` origin.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SuperPatch {
    pub level: u32,
    pub patch: Patch,
    pub anchor: (i32, i32),
}

fn offset_of(p: (i32, i32)) -> (i32, i32) {
    ((p.0 - p.1).rem_euclid(3), 0)
}

fn lift(p: (i32, i32), k: u32) -> (i32, i32) {
    (0..k).fold(p, |q, _| super_to_base(q))
}

impl SuperPatch {
    pub fn ground(patch: Patch) -> SuperPatch {
        SuperPatch { level: 0, patch, anchor: (0, 0) }
    }

    /// Per-level offsets, lowest level first, or `None` if the anchor does
    /// not reduce to offsets in `{0, 1, 2} × {0}`.
    pub fn offsets(&self) -> Option<Vec<(i32, i32)>> {
        let mut t = self.anchor;
        let mut out = Vec::new();
        for _ in 0..self.level {
            let s = offset_of(t);
            out.push(s);
            t = base_to_super((t.0 - s.0, t.1 - s.1))?;
        }
        (t == (0, 0)).then_some(out)
    }

    pub fn anchor_isometry(&self) -> Isometry {
        Isometry::translation(self.anchor.0, self.anchor.1)
    }

    /// Patch file with `level:` and `anchor:` headers.
    pub fn serialize(&self, rs: &RuleSet) -> String {
        let mut text = self.patch.serialize_with_level(rs, Some(self.level));
        let at = text.find("level:").expect("level header");
        let eol = at + text[at..].find('\n').expect("newline");
        text.insert_str(eol + 1, &format!("anchor: {} {}\n", self.anchor.0, self.anchor.1));
        text
    }

    pub fn parse(text: &str, rs: &RuleSet) -> Result<SuperPatch, HierarchyError> {
        let mut anchor = (0, 0);
        let mut rest = String::new();
        for (i, line) in text.lines().enumerate() {
            if let Some(a) = line.trim().strip_prefix("anchor:") {
                let nums: Vec<i32> = a.split_whitespace().filter_map(|w| w.parse().ok()).collect();
                if nums.len() != 2 {
                    return Err(HierarchyError::Parse { line: i + 1, message: format!("bad anchor `{}`", a.trim()) });
                }
                anchor = (nums[0], nums[1]);
                rest.push('\n');
            } else {
                rest.push_str(line);
                rest.push('\n');
            }
        }
        let (patch, level) =
            Patch::parse_with_level(&rest, rs).map_err(|e| HierarchyError::Parse { line: e.line, message: e.message })?;
        let sp = SuperPatch { level: level.unwrap_or(0), patch, anchor };
        if sp.offsets().is_none() {
            return Err(HierarchyError::Parse { line: 1, message: "anchor does not match the level".into() });
        }
        Ok(sp)
    }
}

/// Result of one composition step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Composition {
    pub supertiles: SuperPatch,
    /// Cells of the input not covered by an emitted supertile.
    pub residue: Patch,
    pub labels: BTreeMap<CellIndex, CaseLabel>,
}

/// Groups the tiles of `sp` into supertiles one level up. Supertiles are
/// emitted only when their centre hexagon is classified and all children
/// are placed; other cells are residue.
pub fn compose(
    rs: &RuleSet,
    sub: &SubstitutionRule,
    book: &CaseBook,
    sp: &SuperPatch,
) -> Result<Composition, HierarchyError> {
    let p = &sp.patch;
    if !p.is_legal(rs) {
        return Err(HierarchyError::Illegal);
    }
    let mut labels = BTreeMap::new();
    for c in p.cells().filter(|c| c.is_hex()) {
        labels.insert(*c, classify_hexagon(rs, book, p, *c)?);
    }
    let empty = |labels| Composition {
        supertiles: SuperPatch { level: sp.level + 1, patch: Patch::new(), anchor: sp.anchor },
        residue: p.clone(),
        labels,
    };
    let Some(first) = labels.iter().find(|(_, l)| l.is_centre()).map(|(c, _)| *c) else {
        return Ok(empty(labels));
    };
    let s = offset_of((first.a, first.b));
    for (c, l) in &labels {
        if *l != CaseLabel::Undetermined && on_coset((c.a, c.b), s) != l.is_centre() {
            return Err(HierarchyError::Conflict(*c));
        }
    }
    let shifted = p.translated(-s.0, -s.1);
    let mut claimed: BTreeSet<CellIndex> = BTreeSet::new();
    let mut out = Patch::new();
    for (c, l) in &labels {
        if *l == CaseLabel::Undetermined {
            continue;
        }
        let h = c.translated(-s.0, -s.1);
        let sc = parent_cell(h, (0, 0));
        let kids = child_cells(sc);
        if !kids.iter().all(|k| shifted.contains(k)) {
            continue;
        }
        let seq = super_labels(rs, &shifted, sc, &sub.bijection).ok_or(HierarchyError::NotASupertile(*c))?;
        let shape = if sc.is_hex() { Shape::Hexagon } else { Shape::Triangle };
        let tile = rs.tile_with_sequence(proto_of(rs, shape), &seq).ok_or(HierarchyError::NotASupertile(*c))?;
        for (kc, kt) in sub.children(rs, sc, tile) {
            if shifted.get(&kc) != Some(&kt) {
                return Err(HierarchyError::NotASupertile(*c));
            }
            if !claimed.insert(kc) {
                return Err(HierarchyError::Conflict(kc.translated(s.0, s.1)));
            }
        }
        out.insert(sc, tile).map_err(|_| HierarchyError::Conflict(*c))?;
    }
    let residue: Patch =
        p.iter().filter(|(c, _)| !claimed.contains(&c.translated(-s.0, -s.1))).map(|(c, t)| (*c, *t)).collect();
    let (ax, ay) = lift(s, sp.level);
    Ok(Composition {
        supertiles: SuperPatch {
            level: sp.level + 1,
            patch: out,
            anchor: (sp.anchor.0 + ax, sp.anchor.1 + ay),
        },
        residue,
        labels,
    })
}

/// Replaces every supertile by its children, one level down.
pub fn decompose(rs: &RuleSet, sub: &SubstitutionRule, sp: &SuperPatch) -> Result<SuperPatch, HierarchyError> {
    if sp.level == 0 {
        return Err(HierarchyError::GroundLevel);
    }
    let offsets = sp.offsets().ok_or(HierarchyError::Parse { line: 1, message: "bad anchor".into() })?;
    let s = offsets[sp.level as usize - 1];
    let patch = sub.decompose(rs, &sp.patch).translated(s.0, s.1);
    let (ax, ay) = lift(s, sp.level - 1);
    Ok(SuperPatch { level: sp.level - 1, patch, anchor: (sp.anchor.0 - ax, sp.anchor.1 - ay) })
}

/// Level-0 stars at the super-vertices of `p`, read one level up: shapes
/// swap (a super-hexagon shows a triangle tip) and labels go through
/// `bijection`.
fn super_stars(rs: &RuleSet, p: &Patch, level1: &Patch, bijection: &[TipLabel]) -> BTreeSet<Star> {
    let mut out = BTreeSet::new();
    for v in level1.vertices() {
        let base = crate::lattice::super_vertex_to_base(v);
        if let Some(star) = p.full_star(rs, base) {
            let lifted = star.map(|(s, l)| {
                let s = match s {
                    Shape::Hexagon => Shape::Triangle,
                    Shape::Triangle => Shape::Hexagon,
                };
                (s, bijection[l.0 as usize])
            });
            out.insert(crate::rules::canonical_star(&lifted).expect("lattice stars alternate"));
        }
    }
    out
}

/// Outcome of [`verify_self_similarity`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityReport {
    pub bijection: Vec<TipLabel>,
    /// Atlas entries never seen one level up.
    pub missing: Vec<Star>,
    /// Stars seen one level up that the atlas lacks.
    pub extra: Vec<Star>,
}

impl SimilarityReport {
    pub fn holds(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty()
    }
}

/// The four tiles around `v`, moved so that `v` sits at lattice point
/// `(0, 0)`.
fn neighbourhood(p: &Patch, v: VertexId) -> Option<Patch> {
    v.star()
        .iter()
        .map(|(c, _)| p.get(c).map(|t| (c.translated(-v.a, -v.b), *t)))
        .collect()
}

/// Every four-tile vertex neighbourhood occurring in the hierarchy, up to
/// translation. Each base vertex lies among the children of the supertiles
/// around one super-vertex, so decomposing known neighbourhoods until
/// nothing new appears finds them all.
pub fn vertex_neighbourhoods(rs: &RuleSet, sub: &SubstitutionRule) -> BTreeSet<Patch> {
    let mut found = BTreeSet::new();
    let mut todo = Vec::new();
    let scan = |p: &Patch, found: &mut BTreeSet<Patch>, todo: &mut Vec<Patch>| {
        for v in p.surrounded_vertices() {
            let q = neighbourhood(p, v).expect("surrounded");
            if found.insert(q.clone()) {
                todo.push(q);
            }
        }
    };
    for shape in [Shape::Hexagon, Shape::Triangle] {
        scan(&inflate(rs, sub, shape, 3), &mut found, &mut todo);
    }
    while let Some(q) = todo.pop() {
        scan(&sub.decompose(rs, &q), &mut found, &mut todo);
    }
    found
}

/// Stars of [`vertex_neighbourhoods`]: the atlas the substitution induces.
pub fn hierarchy_atlas(rs: &RuleSet, sub: &SubstitutionRule) -> BTreeSet<Star> {
    vertex_neighbourhoods(rs, sub).iter().flat_map(|q| stars_of(rs, q)).collect()
}

/// Compares the atlas induced one level up (stars at super-vertices, read
/// through the bijection, over every vertex neighbourhood of the
/// hierarchy) with the atlas itself.
pub fn verify_self_similarity(rs: &RuleSet, sub: &SubstitutionRule) -> SimilarityReport {
    let mut seen = BTreeSet::new();
    for q in vertex_neighbourhoods(rs, sub) {
        seen.extend(super_stars(rs, &sub.decompose(rs, &q), &q, &sub.bijection));
    }
    let atlas = rs.atlas();
    SimilarityReport {
        bijection: sub.bijection.clone(),
        missing: atlas.difference(&seen).copied().collect(),
        extra: seen.difference(atlas).copied().collect(),
    }
}

/// Canonical children of a supertile whose children `kids` surround the
/// super cell `sc` carrying `tile`.
fn canonicalise(
    rs: &RuleSet,
    sc: CellIndex,
    tile: OrientedTile,
    kids: &[(CellIndex, OrientedTile)],
) -> Vec<(CellIndex, OrientedTile)> {
    let g = placing_isometries(rs, sc, tile)[0];
    let back = super_isometry_to_base(&g).inverse();
    let mut out: Vec<_> = kids.iter().map(|(c, t)| image(rs, &back, *c, *t)).collect();
    out.sort();
    out
}

/// Assigns `from -> to` in a partial bijection; false on a clash.
fn assign(map: &mut [Option<TipLabel>], from: TipLabel, to: TipLabel) -> bool {
    match map[from.0 as usize] {
        Some(x) => x == to,
        None => {
            if map.contains(&Some(to)) {
                return false;
            }
            map[from.0 as usize] = Some(to);
            true
        }
    }
}

/// Reads the substitution off the terminal configurations: a centre case
/// supplies the super-hexagon's seven children, case one the super-triangle's
/// hexagon. The label bijection is whichever assignment of supertile
/// orientations makes the children consistent and the induced atlas equal
/// the original one; the search order is fixed, so the result is too.
pub fn derive_substitution(rs: &RuleSet, book: &CaseBook) -> Result<SubstitutionRule, SubstitutionError> {
    let missing = |l: CaseLabel| SubstitutionError::NoBijection(format!("no {l} configuration"));
    let centre = book.terminal(CaseLabel::Case2).ok_or(missing(CaseLabel::Case2))?;
    let side = book.terminal(CaseLabel::Case1).ok_or(missing(CaseLabel::Case1))?;
    let hsc = CellIndex::hex(0, 0);
    let kids_region: BTreeSet<CellIndex> = child_cells(hsc).into_iter().collect();
    let forcer = Forcer::new(rs);
    let forced_kids = |term: &Patch| {
        let (forced, _) = forcer.forced(term, &kids_region, FORCING_LIMIT);
        let mut kids = Vec::new();
        for c in child_cells(hsc) {
            let t = term.get(&c).or(forced.get(&c)).ok_or(SubstitutionError::NotForced(c))?;
            kids.push((c, *t));
        }
        Ok(kids)
    };
    let hex_kids = forced_kids(centre)?;
    for (_, term) in book.entries.iter().filter(|(l, _)| l.is_centre()) {
        let other = forced_kids(term)?;
        if let Some((c, _)) = hex_kids.iter().zip(&other).find(|(x, y)| x != y).map(|(x, _)| x) {
            return Err(SubstitutionError::NotForced(*c));
        }
    }
    let h = side.get(&hsc).ok_or(SubstitutionError::NotForced(hsc))?;
    let tips: Vec<TipLabel> = (0..6)
        .map(|k| {
            let (c, t) = hex_kids[1 + k];
            debug_assert_eq!(c, hex_tri_neighbors(hsc).expect("hex")[k]);
            rs.labels(&t)[HEX_TIP_CORNER[k]]
        })
        .collect();
    let n = rs.alphabet().len();
    let mut last_err = SubstitutionError::NoBijection("no orientation of the supertiles fits".into());
    for &v in rs.variants(Shape::Hexagon) {
        for (tsc, corners) in [(CellIndex::tri_up(0, 0), TRI_UP_CHILD_CORNERS), (CellIndex::tri_down(0, 0), TRI_DOWN_CHILD_CORNERS)]
        {
            let child = child_hex(tsc);
            for &w in rs.variants(Shape::Triangle) {
                let mut map = vec![None; n];
                let ok = (0..6).all(|k| assign(&mut map, tips[k], rs.labels(&v)[k]))
                    && (0..3).all(|j| assign(&mut map, rs.labels(h)[corners[j]], rs.labels(&w)[j]));
                if !ok {
                    continue;
                }
                for bijection in completions(rs, &map) {
                    let sub = SubstitutionRule {
                        hex_children: canonicalise(rs, hsc, v, &hex_kids),
                        tri_children: canonicalise(rs, tsc, w, &[(child, *h)]),
                        bijection,
                    };
                    match sub.validate(rs) {
                        Ok(()) if verify_self_similarity(rs, &sub).holds() => return Ok(sub),
                        Ok(()) => last_err = SubstitutionError::NoBijection("induced atlas differs".into()),
                        Err(e) => last_err = e,
                    }
                }
            }
        }
    }
    Err(last_err)
}

/// Every way to extend a partial bijection to a permutation that commutes
/// with the mirror, smallest first.
fn completions(rs: &RuleSet, partial: &[Option<TipLabel>]) -> Vec<Vec<TipLabel>> {
    let mut map = partial.to_vec();
    // a directed pair maps to a directed pair
    for i in 0..map.len() {
        if let Some(to) = map[i] {
            let (mi, mt) = (rs.mirror(TipLabel(i as u16)), rs.mirror(to));
            if !assign(&mut map, mi, mt) {
                return Vec::new();
            }
        }
    }
    let free: Vec<usize> = (0..map.len()).filter(|&i| map[i].is_none()).collect();
    let unused: Vec<TipLabel> =
        (0..map.len() as u16).map(TipLabel).filter(|l| !map.contains(&Some(*l))).collect();
    if free.len() > 6 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..unused.len()).collect();
    loop {
        let mut m = map.clone();
        for (i, &f) in free.iter().enumerate() {
            m[f] = Some(unused[perm[i]]);
        }
        let full: Vec<TipLabel> = m.into_iter().map(|x| x.expect("total")).collect();
        if (0..full.len()).all(|i| rs.mirror(full[i]) == full[rs.mirror(TipLabel(i as u16)).0 as usize]) {
            out.push(full);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    out
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("pivot");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::super_vertex_to_base;

    #[test]
    fn tips_sit_on_super_vertices() {
        for sc in [CellIndex::hex(0, 0), CellIndex::hex(2, -1)] {
            let tris = hex_tri_neighbors(child_hex(sc)).unwrap();
            for k in 0..6 {
                assert_eq!(super_vertex_to_base(sc.vertex(k)), tris[k].vertex(HEX_TIP_CORNER[k]));
            }
        }
        for sc in [CellIndex::tri_up(0, 0), CellIndex::tri_up(-1, 3)] {
            for (k, &corner) in TRI_UP_CHILD_CORNERS.iter().enumerate() {
                assert_eq!(super_vertex_to_base(sc.vertex(k)), child_hex(sc).vertex(corner));
            }
        }
        for sc in [CellIndex::tri_down(0, 0), CellIndex::tri_down(4, 1)] {
            for (k, &corner) in TRI_DOWN_CHILD_CORNERS.iter().enumerate() {
                assert_eq!(super_vertex_to_base(sc.vertex(k)), child_hex(sc).vertex(corner));
            }
        }
    }

    #[test]
    fn children_partition_the_plane() {
        let mut seen = BTreeSet::new();
        for a in -4..4 {
            for b in -4..4 {
                for sc in [CellIndex::hex(a, b), CellIndex::tri_up(a, b), CellIndex::tri_down(a, b)] {
                    for c in child_cells(sc) {
                        assert!(seen.insert(c), "{c} claimed twice");
                        assert_eq!(parent_cell(c, (0, 0)), sc);
                    }
                }
            }
        }
        for a in -3..3 {
            for b in -3..3 {
                for c in [CellIndex::hex(a, b), CellIndex::tri_up(a, b), CellIndex::tri_down(a, b)] {
                    assert!(seen.contains(&c));
                }
            }
        }
    }

    #[test]
    fn super_isometries_commute_with_children() {
        for g in Isometry::point_group().map(|h| Isometry::translation(2, -1).compose(&h)) {
            let base = super_isometry_to_base(&g);
            for sc in [CellIndex::hex(1, 0), CellIndex::tri_up(0, 1), CellIndex::tri_down(-1, 0)] {
                let mut lhs: Vec<_> = child_cells(g.apply_cell(sc));
                let mut rhs: Vec<_> = child_cells(sc).into_iter().map(|c| base.apply_cell(c)).collect();
                lhs.sort();
                rhs.sort();
                assert_eq!(lhs, rhs);
                for v in sc.vertices() {
                    assert_eq!(super_vertex_to_base(g.apply_vertex(v)), base.apply_vertex(super_vertex_to_base(v)));
                }
            }
        }
    }
}
