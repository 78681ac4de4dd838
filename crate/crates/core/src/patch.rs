//! Finite partial tilings and their legality.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::lattice::{CellIndex, CellKind, Isometry, VertexId};
use crate::rules::{OrientedTile, RuleSet, Shape, Star, StarEntry};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatchError {
    #[error("cell {0} is already occupied")]
    Occupied(CellIndex),
    #[error("a {shape:?} tile cannot sit on {cell}")]
    ShapeMismatch { cell: CellIndex, shape: Shape },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct PatchParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlacedTile {
    pub cell: CellIndex,
    pub tile: OrientedTile,
}

/// A fully surrounded vertex whose star is not in the atlas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub vertex: VertexId,
    pub star: [Option<StarEntry>; 4],
}

/// At most one oriented tile per cell; tile shape always matches the cell.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Patch {
    tiles: BTreeMap<CellIndex, OrientedTile>,
}

impl Patch {
    pub fn new() -> Self {
        Patch::default()
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn get(&self, c: &CellIndex) -> Option<&OrientedTile> {
        self.tiles.get(c)
    }

    pub fn contains(&self, c: &CellIndex) -> bool {
        self.tiles.contains_key(c)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CellIndex, &OrientedTile)> {
        self.tiles.iter()
    }

    pub fn cells(&self) -> impl Iterator<Item = &CellIndex> {
        self.tiles.keys()
    }

    pub fn tiles(&self) -> &BTreeMap<CellIndex, OrientedTile> {
        &self.tiles
    }

    /// New patch with the placement added; `self` is left untouched.
    pub fn place(&self, cell: CellIndex, tile: OrientedTile) -> Result<Patch, PatchError> {
        let mut p = self.clone();
        p.insert(cell, tile)?;
        Ok(p)
    }

    pub fn insert(&mut self, cell: CellIndex, tile: OrientedTile) -> Result<(), PatchError> {
        if !tile.shape().fits(cell.kind) {
            return Err(PatchError::ShapeMismatch { cell, shape: tile.shape() });
        }
        if self.tiles.contains_key(&cell) {
            return Err(PatchError::Occupied(cell));
        }
        self.tiles.insert(cell, tile);
        Ok(())
    }

    pub fn remove(&mut self, cell: &CellIndex) -> Option<OrientedTile> {
        self.tiles.remove(cell)
    }

    /// Restriction to the given cells.
    pub fn restrict(&self, cells: &BTreeSet<CellIndex>) -> Patch {
        Patch {
            tiles: self.tiles.iter().filter(|(c, _)| cells.contains(c)).map(|(c, t)| (*c, *t)).collect(),
        }
    }

    /// Corners present at `v`, in star order.
    pub fn star_at(&self, rs: &RuleSet, v: VertexId) -> [Option<StarEntry>; 4] {
        v.star().map(|(c, k)| {
            self.tiles.get(&c).map(|t| (t.shape(), rs.labels(t)[k]))
        })
    }

    /// Full star at `v`, or `None` if a cell around it is empty.
    pub fn full_star(&self, rs: &RuleSet, v: VertexId) -> Option<Star> {
        let s = self.star_at(rs, v);
        Some([s[0]?, s[1]?, s[2]?, s[3]?])
    }

    /// Every vertex touched by a placed tile, sorted.
    pub fn vertices(&self) -> BTreeSet<VertexId> {
        self.tiles.keys().flat_map(|c| c.vertices()).collect()
    }

    /// Vertices with all four cells placed.
    pub fn surrounded_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().into_iter().filter(|v| v.star().iter().all(|(c, _)| self.tiles.contains_key(c)))
    }

    /// Fully surrounded vertices whose star is not permitted, in vertex order.
    pub fn legality_violations(&self, rs: &RuleSet) -> Vec<Violation> {
        self.vertices()
            .into_iter()
            .filter_map(|v| {
                let star = self.full_star(rs, v)?;
                if rs.vertex_allowed(&star).unwrap_or(false) {
                    None
                } else {
                    Some(Violation { vertex: v, star: star.map(Some) })
                }
            })
            .collect()
    }

    pub fn is_legal(&self, rs: &RuleSet) -> bool {
        self.legality_violations(rs).is_empty()
    }

    /// Image of the patch under a lattice isometry.
    pub fn transformed(&self, g: &Isometry, rs: &RuleSet) -> Patch {
        Patch {
            tiles: self
                .tiles
                .iter()
                .map(|(c, t)| {
                    let (shift, reversed) = g.corner_map(*c);
                    (g.apply_cell(*c), rs.remap(t, shift, reversed))
                })
                .collect(),
        }
    }

    pub fn translated(&self, da: i32, db: i32) -> Patch {
        Patch { tiles: self.tiles.iter().map(|(c, t)| (c.translated(da, db), *t)).collect() }
    }

    pub fn count_shape(&self, shape: Shape) -> usize {
        self.tiles.values().filter(|t| t.shape() == shape).count()
    }

    /// Text form: `ruleset:` header, optional `level:` header, then one
    /// `<kind> <a> <b> <prototile> r<rotation> [m]` line per tile.
    pub fn serialize(&self, rs: &RuleSet) -> String {
        self.serialize_with_level(rs, None)
    }

    pub fn serialize_with_level(&self, rs: &RuleSet, level: Option<u32>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ruleset: {}", rs.fingerprint());
        if let Some(l) = level {
            let _ = writeln!(out, "level: {l}");
        }
        for (c, t) in &self.tiles {
            let _ = write!(
                out,
                "{} {} {} {} r{}",
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
        out
    }

    pub fn parse(text: &str, rs: &RuleSet) -> Result<Patch, PatchParseError> {
        Patch::parse_with_level(text, rs).map(|(p, _)| p)
    }

    /// Parse a patch file, returning the `level:` header when present.
    pub fn parse_with_level(text: &str, rs: &RuleSet) -> Result<(Patch, Option<u32>), PatchParseError> {
        let err = |line: usize, message: String| PatchParseError { line, message };
        let mut patch = Patch::new();
        let mut level = None;
        let mut seen_header = false;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix("ruleset:") {
                let name = name.trim();
                if name != rs.fingerprint() {
                    return Err(err(ln, format!("patch was written for ruleset `{name}`, not `{}`", rs.fingerprint())));
                }
                seen_header = true;
                continue;
            }
            if let Some(l) = line.strip_prefix("level:") {
                level = Some(l.trim().parse().map_err(|_| err(ln, format!("bad level `{}`", l.trim())))?);
                continue;
            }
            if !seen_header {
                return Err(err(ln, "missing `ruleset:` header".into()));
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            if words.len() != 5 && words.len() != 6 {
                return Err(err(ln, format!("malformed tile line `{line}`")));
            }
            let kind = CellKind::from_token(words[0]).ok_or_else(|| err(ln, format!("unknown cell kind `{}`", words[0])))?;
            let a: i32 = words[1].parse().map_err(|_| err(ln, format!("bad coordinate `{}`", words[1])))?;
            let b: i32 = words[2].parse().map_err(|_| err(ln, format!("bad coordinate `{}`", words[2])))?;
            let proto = rs
                .prototile_index(words[3])
                .ok_or_else(|| err(ln, format!("unknown prototile `{}`", words[3])))?;
            let rot: u8 = words[4]
                .strip_prefix('r')
                .and_then(|r| r.parse().ok())
                .ok_or_else(|| err(ln, format!("bad rotation `{}`", words[4])))?;
            let n = rs.prototiles()[proto].shape.corner_count() as u8;
            if rot >= n {
                return Err(err(ln, format!("rotation {rot} out of range for a {n}-cornered tile")));
            }
            let reflected = match words.get(5) {
                None => false,
                Some(&"m") => true,
                Some(other) => return Err(err(ln, format!("unexpected `{other}`"))),
            };
            let tile = rs
                .orient(proto, rot, reflected)
                .ok_or_else(|| err(ln, "reflection not allowed by this ruleset".into()))?;
            patch
                .insert(CellIndex { kind, a, b }, tile)
                .map_err(|e| err(ln, e.to_string()))?;
        }
        if !seen_header {
            return Err(err(1, "missing `ruleset:` header".into()));
        }
        Ok((patch, level))
    }
}

impl FromIterator<(CellIndex, OrientedTile)> for Patch {
    fn from_iter<I: IntoIterator<Item = (CellIndex, OrientedTile)>>(iter: I) -> Self {
        Patch { tiles: iter.into_iter().collect() }
    }
}
