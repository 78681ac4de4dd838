//! Decorated prototiles and tip-to-tip matching rules.
//!
//! A rule set declares an alphabet of tip labels, prototiles whose corners
//! carry those labels, and an atlas of permitted vertex stars. A vertex star
//! lists the four corners meeting at a vertex in counter-clockwise order,
//! always alternating hexagon and triangle.
//!
//! Tokens `x+` and `x-` declared together form a directed pair: mirroring a
//! tile turns every `x+` corner into `x-` and back.
//!
//! Rule file format (UTF-8, `#` starts a comment):
//!
//! ```text
//! alphabet: a, b, c
//! reflections: allowed
//! prototile big hexagon: a,b,c,a,b,c
//! prototile small triangle: a,b,c
//! allow hex:a, tri:b, hex:c, tri:a
//! ```

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};

use sha2::{Digest, Sha256};

use crate::lattice::CellKind;

/// Index of a tip label in its rule set's alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TipLabel(pub u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Shape {
    Hexagon,
    Triangle,
}

impl Shape {
    pub fn corner_count(self) -> usize {
        match self {
            Shape::Hexagon => 6,
            Shape::Triangle => 3,
        }
    }

    pub fn of_cell(kind: CellKind) -> Shape {
        if kind.is_hex() {
            Shape::Hexagon
        } else {
            Shape::Triangle
        }
    }

    pub fn fits(self, kind: CellKind) -> bool {
        Shape::of_cell(kind) == self
    }

    pub fn star_token(self) -> &'static str {
        match self {
            Shape::Hexagon => "hex",
            Shape::Triangle => "tri",
        }
    }

    fn file_token(self) -> &'static str {
        match self {
            Shape::Hexagon => "hexagon",
            Shape::Triangle => "triangle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prototile {
    pub name: String,
    pub shape: Shape,
    /// Corner labels, counter-clockwise.
    pub corners: Vec<TipLabel>,
}

impl Prototile {
    /// Labels of the tile turned by `rotation` steps and optionally mirrored.
    /// Corner `rotation` always carries prototile corner 0; mirroring
    /// reverses the sequence around that anchor. Directed labels are not
    /// flipped here; see [`RuleSet::sequence`].
    pub fn sequence(&self, rotation: u8, reflected: bool) -> Vec<TipLabel> {
        let n = self.corners.len();
        let r = rotation as usize % n;
        (0..n)
            .map(|k| {
                let src = if reflected { (r + n - k) % n } else { (k + n - r) % n };
                self.corners[src]
            })
            .collect()
    }
}

/// A prototile in a particular orientation. Orientations inducing the same
/// corner sequence are identified; [`RuleSet::orient`] returns the
/// representative with the smallest `(reflected, rotation)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrientedTile {
    proto: u16,
    shape: Shape,
    rotation: u8,
    reflected: bool,
}

impl OrientedTile {
    pub fn prototile(&self) -> usize {
        self.proto as usize
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn rotation(&self) -> u8 {
        self.rotation
    }

    pub fn reflected(&self) -> bool {
        self.reflected
    }
}

/// One corner at a vertex.
pub type StarEntry = (Shape, TipLabel);
/// Four corners around a vertex, counter-clockwise.
pub type Star = [StarEntry; 4];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StarError {
    #[error("vertex star does not alternate hexagon and triangle")]
    NotAlternating,
}

fn alternates(star: &Star) -> bool {
    let hex = |e: &StarEntry| e.0 == Shape::Hexagon;
    hex(&star[0]) != hex(&star[1])
        && hex(&star[1]) != hex(&star[2])
        && hex(&star[2]) != hex(&star[3])
        && hex(&star[3]) != hex(&star[0])
}

fn rotate_star(star: &Star, r: usize) -> Star {
    [star[r % 4], star[(r + 1) % 4], star[(r + 2) % 4], star[(r + 3) % 4]]
}

fn reverse_star(star: &Star, mirror: &[TipLabel]) -> Star {
    [star[0], star[3], star[2], star[1]].map(|(s, l)| (s, mirror[l.0 as usize]))
}

/// Mirror image of every label: `x+` and `x-` swap when both are declared,
/// every other token is its own mirror image.
fn mirror_map(alphabet: &[String]) -> Vec<TipLabel> {
    alphabet
        .iter()
        .enumerate()
        .map(|(i, tok)| {
            let partner = if let Some(stem) = tok.strip_suffix('+') {
                format!("{stem}-")
            } else if let Some(stem) = tok.strip_suffix('-') {
                format!("{stem}+")
            } else {
                return TipLabel(i as u16);
            };
            TipLabel(alphabet.iter().position(|t| *t == partner).unwrap_or(i) as u16)
        })
        .collect()
}

/// Least cyclic rotation that starts with a hexagon.
pub fn canonical_star(star: &Star) -> Result<Star, StarError> {
    if !alternates(star) {
        return Err(StarError::NotAlternating);
    }
    let first = if star[0].0 == Shape::Hexagon { 0 } else { 1 };
    let a = rotate_star(star, first);
    let b = rotate_star(star, first + 2);
    Ok(a.min(b))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct RuleParseError {
    pub line: usize,
    pub kind: RuleErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleErrorKind {
    #[error("expected `{0}`")]
    Expected(&'static str),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate label `{0}` in alphabet")]
    DuplicateLabel(String),
    #[error("prototile `{name}` is a {shape} but lists {found} corners")]
    CornerCount { name: String, shape: &'static str, found: usize },
    #[error("duplicate prototile name `{0}`")]
    DuplicatePrototile(String),
    #[error("unknown shape `{0}`")]
    UnknownShape(String),
    #[error("atlas entry does not alternate hex and tri")]
    NotAlternating,
    #[error("malformed line: {0}")]
    Malformed(String),
}

/// Prototiles plus their matching rules. Immutable once built.
#[derive(Debug, Clone)]
pub struct RuleSet {
    alphabet: Vec<String>,
    prototiles: Vec<Prototile>,
    reflections_allowed: bool,
    atlas: BTreeSet<Star>,
    mirror: Vec<TipLabel>,
    hex_variants: Vec<OrientedTile>,
    tri_variants: Vec<OrientedTile>,
    sequences: HashMap<OrientedTile, Vec<TipLabel>>,
}

impl PartialEq for RuleSet {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet
            && self.prototiles == other.prototiles
            && self.reflections_allowed == other.reflections_allowed
            && self.atlas == other.atlas
    }
}

impl Eq for RuleSet {}

impl RuleSet {
    /// Build a rule set from parts. Atlas entries are canonicalised and, when
    /// reflections are allowed, closed under reversal.
    pub fn new(
        alphabet: Vec<String>,
        prototiles: Vec<Prototile>,
        reflections_allowed: bool,
        atlas: impl IntoIterator<Item = Star>,
    ) -> Result<RuleSet, StarError> {
        let mirror = mirror_map(&alphabet);
        let mut canon = BTreeSet::new();
        for s in atlas {
            canon.insert(canonical_star(&s)?);
            if reflections_allowed {
                canon.insert(canonical_star(&reverse_star(&s, &mirror))?);
            }
        }
        let mut rs = RuleSet {
            alphabet,
            prototiles,
            reflections_allowed,
            atlas: canon,
            mirror,
            hex_variants: Vec::new(),
            tri_variants: Vec::new(),
            sequences: HashMap::new(),
        };
        rs.build_variants();
        Ok(rs)
    }

    fn build_variants(&mut self) {
        let mut hex: Vec<(Vec<TipLabel>, OrientedTile)> = Vec::new();
        let mut tri: Vec<(Vec<TipLabel>, OrientedTile)> = Vec::new();
        for (i, p) in self.prototiles.iter().enumerate() {
            for t in orbit(i, p, self.reflections_allowed, &self.mirror) {
                let seq = mirrored(p, t.rotation, t.reflected, &self.mirror);
                self.sequences.insert(t, seq.clone());
                match p.shape {
                    Shape::Hexagon => hex.push((seq, t)),
                    Shape::Triangle => tri.push((seq, t)),
                }
            }
        }
        hex.sort();
        tri.sort();
        self.hex_variants = hex.into_iter().map(|(_, t)| t).collect();
        self.tri_variants = tri.into_iter().map(|(_, t)| t).collect();
    }

    pub fn parse(text: &str) -> Result<RuleSet, RuleParseError> {
        parse_rules(text)
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn label(&self, token: &str) -> Option<TipLabel> {
        self.alphabet.iter().position(|t| t == token).map(|i| TipLabel(i as u16))
    }

    pub fn symbol(&self, l: TipLabel) -> &str {
        &self.alphabet[l.0 as usize]
    }

    pub fn prototiles(&self) -> &[Prototile] {
        &self.prototiles
    }

    pub fn prototile_index(&self, name: &str) -> Option<usize> {
        self.prototiles.iter().position(|p| p.name == name)
    }

    pub fn reflections_allowed(&self) -> bool {
        self.reflections_allowed
    }

    pub fn atlas(&self) -> &BTreeSet<Star> {
        &self.atlas
    }

    /// Mirror image of a label (itself unless the label is directed).
    pub fn mirror(&self, l: TipLabel) -> TipLabel {
        self.mirror[l.0 as usize]
    }

    /// Corner labels of a prototile in the given orientation; mirroring also
    /// flips directed labels.
    pub fn sequence(&self, proto: usize, rotation: u8, reflected: bool) -> Vec<TipLabel> {
        mirrored(&self.prototiles[proto], rotation, reflected, &self.mirror)
    }

    /// Representative orientation for `(rotation, reflected)` of a prototile.
    /// Returns `None` when the prototile does not exist or a reflection is
    /// requested but not allowed.
    pub fn orient(&self, proto: usize, rotation: u8, reflected: bool) -> Option<OrientedTile> {
        let p = self.prototiles.get(proto)?;
        if reflected && !self.reflections_allowed {
            return None;
        }
        let n = p.corners.len() as u8;
        let target = self.sequence(proto, rotation % n, reflected);
        for refl in [false, true] {
            if refl && !self.reflections_allowed {
                continue;
            }
            for r in 0..n {
                if self.sequence(proto, r, refl) == target {
                    return Some(OrientedTile { proto: proto as u16, shape: p.shape, rotation: r, reflected: refl });
                }
            }
        }
        unreachable!("target sequence lies in its own orbit")
    }

    /// Distinct orientations of every prototile fitting `shape`, in
    /// canonical sequence order.
    pub fn variants(&self, shape: Shape) -> &[OrientedTile] {
        match shape {
            Shape::Hexagon => &self.hex_variants,
            Shape::Triangle => &self.tri_variants,
        }
    }

    /// Label sequence of an oriented tile.
    pub fn labels(&self, t: &OrientedTile) -> &[TipLabel] {
        &self.sequences[t]
    }

    pub fn corner_label(&self, t: &OrientedTile, k: usize) -> Option<TipLabel> {
        self.labels(t).get(k).copied()
    }

    /// Oriented tile of the given prototile whose corners read `seq`.
    pub fn tile_with_sequence(&self, proto: usize, seq: &[TipLabel]) -> Option<OrientedTile> {
        let shape = self.prototiles.get(proto)?.shape;
        self.variants(shape)
            .iter()
            .find(|t| t.prototile() == proto && self.labels(t) == seq)
            .copied()
    }

    /// Is the star (in any cyclic rotation) in the atlas?
    pub fn vertex_allowed(&self, star: &Star) -> Result<bool, StarError> {
        Ok(self.atlas.contains(&canonical_star(star)?))
    }

    /// Orientation after applying a corner map `k ↦ shift ± k`.
    pub fn remap(&self, t: &OrientedTile, shift: usize, reversed: bool) -> OrientedTile {
        let n = t.shape.corner_count();
        let r = t.rotation as usize;
        let (rot, refl) = match (t.reflected, reversed) {
            (false, false) => (r + shift, false),
            (false, true) => (shift + n - r, true),
            (true, false) => (r + shift, true),
            (true, true) => (shift + n - r, false),
        };
        let proto = t.proto as usize;
        let seq = self.sequence(proto, (rot % n) as u8, refl);
        // reflected images of an unreflectable set still need a home; look
        // the sequence up among all orientations
        for refl2 in [false, true] {
            for r2 in 0..n as u8 {
                if self.sequence(proto, r2, refl2) == seq {
                    if refl2 && !self.reflections_allowed {
                        continue;
                    }
                    return OrientedTile { proto: t.proto, shape: t.shape, rotation: r2, reflected: refl2 };
                }
            }
        }
        OrientedTile { proto: t.proto, shape: t.shape, rotation: (rot % n) as u8, reflected: refl }
    }

    /// Short stable identifier derived from the canonical serialisation.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.serialize().as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    pub fn star_to_string(&self, star: &Star) -> String {
        star.iter()
            .map(|(s, l)| format!("{}:{}", s.star_token(), self.symbol(*l)))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Canonical text form; `parse(serialize(rs)) == rs`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "alphabet: {}", self.alphabet.join(", "));
        let _ = writeln!(
            out,
            "reflections: {}",
            if self.reflections_allowed { "allowed" } else { "forbidden" }
        );
        for p in &self.prototiles {
            let labels: Vec<&str> = p.corners.iter().map(|l| self.symbol(*l)).collect();
            let _ = writeln!(out, "prototile {} {}: {}", p.name, p.shape.file_token(), labels.join(","));
        }
        for s in &self.atlas {
            let _ = writeln!(out, "allow {}", self.star_to_string(s));
        }
        out
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

fn mirrored(p: &Prototile, rotation: u8, reflected: bool, mirror: &[TipLabel]) -> Vec<TipLabel> {
    let mut seq = p.sequence(rotation, reflected);
    if reflected {
        for l in seq.iter_mut() {
            *l = mirror[l.0 as usize];
        }
    }
    seq
}

fn orbit(proto: usize, p: &Prototile, reflections: bool, mirror: &[TipLabel]) -> Vec<OrientedTile> {
    let n = p.corners.len() as u8;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for refl in [false, true] {
        if refl && !reflections {
            continue;
        }
        for r in 0..n {
            if seen.insert(mirrored(p, r, refl, mirror)) {
                out.push(OrientedTile { proto: proto as u16, shape: p.shape, rotation: r, reflected: refl });
            }
        }
    }
    out
}

/// One representative per distinct corner sequence, in canonical sequence
/// order. Labels are treated as undirected; [`RuleSet::variants`] accounts
/// for directed ones.
pub fn oriented_variants(p: &Prototile, reflections_allowed: bool) -> Vec<(OrientedTile, Vec<TipLabel>)> {
    let identity: Vec<TipLabel> = (0..=p.corners.iter().map(|l| l.0).max().unwrap_or(0)).map(TipLabel).collect();
    let mut v: Vec<_> = orbit(0, p, reflections_allowed, &identity)
        .into_iter()
        .map(|t| (t, p.sequence(t.rotation, t.reflected)))
        .collect();
    v.sort_by(|a, b| a.1.cmp(&b.1));
    v
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
    .trim()
}

fn parse_rules(text: &str) -> Result<RuleSet, RuleParseError> {
    let err = |line: usize, kind: RuleErrorKind| RuleParseError { line, kind };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l)))
        .filter(|(_, l)| !l.is_empty());

    let (ln, first) = lines.next().ok_or(err(1, RuleErrorKind::Expected("alphabet: ...")))?;
    let body = first
        .strip_prefix("alphabet:")
        .ok_or(err(ln, RuleErrorKind::Expected("alphabet: ...")))?;
    let mut alphabet: Vec<String> = Vec::new();
    for tok in body.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if alphabet.iter().any(|t| t == tok) {
            return Err(err(ln, RuleErrorKind::DuplicateLabel(tok.to_string())));
        }
        alphabet.push(tok.to_string());
    }
    let lookup = |ln: usize, tok: &str| -> Result<TipLabel, RuleParseError> {
        alphabet
            .iter()
            .position(|t| t == tok)
            .map(|i| TipLabel(i as u16))
            .ok_or_else(|| err(ln, RuleErrorKind::UnknownLabel(tok.to_string())))
    };

    let (ln, second) = lines.next().ok_or(err(ln + 1, RuleErrorKind::Expected("reflections: ...")))?;
    let reflections = match second.strip_prefix("reflections:").map(str::trim) {
        Some("allowed") => true,
        Some("forbidden") => false,
        _ => return Err(err(ln, RuleErrorKind::Expected("reflections: allowed|forbidden"))),
    };

    let mut prototiles: Vec<Prototile> = Vec::new();
    let mut atlas = Vec::new();
    for (ln, line) in lines {
        if let Some(rest) = line.strip_prefix("prototile ") {
            let (head, labels) = rest
                .split_once(':')
                .ok_or_else(|| err(ln, RuleErrorKind::Malformed(line.to_string())))?;
            let mut words = head.split_whitespace();
            let (Some(name), Some(shape), None) = (words.next(), words.next(), words.next()) else {
                return Err(err(ln, RuleErrorKind::Malformed(line.to_string())));
            };
            let shape = match shape {
                "hexagon" => Shape::Hexagon,
                "triangle" => Shape::Triangle,
                other => return Err(err(ln, RuleErrorKind::UnknownShape(other.to_string()))),
            };
            if prototiles.iter().any(|p| p.name == name) {
                return Err(err(ln, RuleErrorKind::DuplicatePrototile(name.to_string())));
            }
            let corners = labels
                .split(',')
                .map(str::trim)
                .map(|t| lookup(ln, t))
                .collect::<Result<Vec<_>, _>>()?;
            if corners.len() != shape.corner_count() {
                return Err(err(
                    ln,
                    RuleErrorKind::CornerCount {
                        name: name.to_string(),
                        shape: shape.file_token(),
                        found: corners.len(),
                    },
                ));
            }
            prototiles.push(Prototile { name: name.to_string(), shape, corners });
        } else if let Some(rest) = line.strip_prefix("allow ") {
            let entries: Vec<&str> = rest.split(',').map(str::trim).collect();
            if entries.len() != 4 {
                return Err(err(ln, RuleErrorKind::Malformed(line.to_string())));
            }
            let mut star = [(Shape::Hexagon, TipLabel(0)); 4];
            for (slot, e) in star.iter_mut().zip(&entries) {
                let (shape, tok) = e
                    .split_once(':')
                    .ok_or_else(|| err(ln, RuleErrorKind::Malformed(line.to_string())))?;
                let shape = match shape.trim() {
                    "hex" => Shape::Hexagon,
                    "tri" => Shape::Triangle,
                    other => return Err(err(ln, RuleErrorKind::UnknownShape(other.to_string()))),
                };
                *slot = (shape, lookup(ln, tok.trim())?);
            }
            if !alternates(&star) {
                return Err(err(ln, RuleErrorKind::NotAlternating));
            }
            atlas.push(star);
        } else {
            return Err(err(ln, RuleErrorKind::Malformed(line.to_string())));
        }
    }
    Ok(RuleSet::new(alphabet, prototiles, reflections, atlas).expect("entries validated above"))
}
