//! Depth-first forcing search.
//!
//! Tiles are tried cell by cell; a placement survives only if every fully
//! surrounded vertex it touches is in the atlas and every partially
//! surrounded vertex can still be completed to some atlas entry. Branches
//! with no surviving placement for some cell are contradictions.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use crate::lattice::{CellIndex, VertexId};
use crate::par;
use crate::patch::{Patch, PlacedTile};
use crate::rules::{OrientedTile, RuleSet, Shape, TipLabel};

/// Default ceiling on enumerated completions.
pub const DEFAULT_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ForcingError {
    #[error("cell {0} is already occupied")]
    Occupied(CellIndex),
    #[error("more than {0} completions; search aborted")]
    LimitExceeded(u64),
}

/// Lookup tables for full and partial vertex stars, keyed by the four labels
/// in star order (`0` marks an empty cell).
#[derive(Debug, Clone)]
pub struct StarTable {
    full: HashSet<u64>,
    partial: HashSet<u64>,
}

fn star_key(entries: [u16; 4]) -> u64 {
    entries.iter().fold(0u64, |acc, &e| (acc << 16) | e as u64)
}

impl StarTable {
    pub fn new(rs: &RuleSet) -> Self {
        let mut full = HashSet::new();
        let mut partial = HashSet::new();
        for s in rs.atlas() {
            let codes = s.map(|(_, l)| l.0 + 1);
            for form in [codes, [codes[2], codes[3], codes[0], codes[1]]] {
                full.insert(star_key(form));
                for mask in 0u8..16 {
                    let mut m = form;
                    for (i, e) in m.iter_mut().enumerate() {
                        if mask >> i & 1 == 0 {
                            *e = 0;
                        }
                    }
                    partial.insert(star_key(m));
                }
            }
        }
        StarTable { full, partial }
    }

    /// Entries in star order; `0` is an empty cell, otherwise label + 1.
    pub fn accepts(&self, entries: [u16; 4]) -> bool {
        if entries.contains(&0) {
            self.partial.contains(&star_key(entries))
        } else {
            self.full.contains(&star_key(entries))
        }
    }
}

/// Cells to branch on, in order. Cells of the region left over once the list
/// is exhausted are chosen most-constrained-first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProbeSchedule {
    pub cells: Vec<CellIndex>,
}

impl ProbeSchedule {
    pub fn automatic() -> Self {
        ProbeSchedule::default()
    }

    pub fn new(cells: Vec<CellIndex>) -> Self {
        ProbeSchedule { cells }
    }

    /// Lines `<kind> <a> <b>`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cells = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            cells.push(parse_cell(line).map_err(|e| format!("line {}: {e}", i + 1))?);
        }
        let distinct: BTreeSet<_> = cells.iter().collect();
        if distinct.len() != cells.len() {
            return Err("schedule lists a cell twice".into());
        }
        Ok(ProbeSchedule { cells })
    }

    pub fn serialize(&self) -> String {
        self.cells.iter().map(|c| format!("{c}\n")).collect()
    }
}

pub(crate) fn parse_cell(text: &str) -> Result<CellIndex, String> {
    let w: Vec<&str> = text.split_whitespace().collect();
    if w.len() != 3 {
        return Err(format!("expected `<kind> <a> <b>`, got `{text}`"));
    }
    let kind = crate::lattice::CellKind::from_token(w[0]).ok_or_else(|| format!("unknown cell kind `{}`", w[0]))?;
    let a = w[1].parse().map_err(|_| format!("bad coordinate `{}`", w[1]))?;
    let b = w[2].parse().map_err(|_| format!("bad coordinate `{}`", w[2]))?;
    Ok(CellIndex { kind, a, b })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeStatus {
    /// No legal completion below this node.
    Contradiction,
    /// Search stopped at the completion limit.
    Open,
    /// Exactly one legal completion below this node.
    ClosedUnique,
    ClosedMultiple,
}

impl NodeStatus {
    pub fn token(self) -> &'static str {
        match self {
            NodeStatus::Contradiction => "contradiction",
            NodeStatus::Open => "open",
            NodeStatus::ClosedUnique => "unique",
            NodeStatus::ClosedMultiple => "multiple",
        }
    }
}

/// A node of the case tree. The root has no placement; every other node
/// records the tile tried at its parent's probe cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseNode {
    pub placement: Option<PlacedTile>,
    /// Cell branched on below this node, if any.
    pub probe: Option<CellIndex>,
    pub children: Vec<CaseNode>,
    pub status: NodeStatus,
    pub completions: u64,
}

impl CaseNode {
    pub fn contradictions(&self) -> usize {
        self.children.iter().filter(|c| c.status == NodeStatus::Contradiction).count()
    }

    /// Number of nodes in the subtree.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(CaseNode::size).sum::<usize>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompletionCount {
    Exact(u64),
    ExceedsLimit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForcingReport {
    pub seed: Patch,
    pub region: BTreeSet<CellIndex>,
    pub tree: CaseNode,
    /// Placements shared by every legal completion.
    pub forced: BTreeMap<CellIndex, OrientedTile>,
    pub completion_count: CompletionCount,
}

impl ForcingReport {
    pub fn forced_patch(&self) -> Patch {
        self.forced.iter().map(|(c, t)| (*c, *t)).collect()
    }
}

const EMPTY: u16 = u16::MAX;

/// Dense search state over the seed and region cells.
#[derive(Clone)]
struct Board<'a> {
    rs: &'a RuleSet,
    table: &'a StarTable,
    cells: Vec<CellIndex>,
    /// Vertex stars as `(slot, corner)`; `usize::MAX` marks an untracked cell.
    stars: Vec<[(usize, usize); 4]>,
    cell_vertices: Vec<Vec<usize>>,
    free: Vec<bool>,
    state: Vec<u16>,
    hex_labels: Vec<Vec<TipLabel>>,
    tri_labels: Vec<Vec<TipLabel>>,
}

impl<'a> Board<'a> {
    fn new(rs: &'a RuleSet, table: &'a StarTable, seed: &Patch, region: &BTreeSet<CellIndex>) -> Self {
        let mut cells: Vec<CellIndex> = seed.cells().copied().collect();
        cells.extend(region.iter().filter(|c| !seed.contains(c)));
        let slot: HashMap<CellIndex, usize> = cells.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let mut vindex: HashMap<VertexId, usize> = HashMap::new();
        let mut stars = Vec::new();
        let mut cell_vertices = vec![Vec::new(); cells.len()];
        for (i, c) in cells.iter().enumerate() {
            for v in c.vertices() {
                let vi = *vindex.entry(v).or_insert_with(|| {
                    stars.push(v.star().map(|(c, k)| (slot.get(&c).copied().unwrap_or(usize::MAX), k)));
                    stars.len() - 1
                });
                cell_vertices[i].push(vi);
            }
        }
        let hex_labels = rs.variants(Shape::Hexagon).iter().map(|t| rs.labels(t).to_vec()).collect();
        let tri_labels = rs.variants(Shape::Triangle).iter().map(|t| rs.labels(t).to_vec()).collect();
        let mut state = vec![EMPTY; cells.len()];
        let mut free = vec![true; cells.len()];
        for (c, t) in seed.iter() {
            let i = slot[c];
            let idx = rs.variants(t.shape()).iter().position(|v| v == t).expect("seed tile from this ruleset");
            state[i] = idx as u16;
            free[i] = false;
        }
        Board { rs, table, cells, stars, cell_vertices, free, state, hex_labels, tri_labels }
    }

    fn shape(&self, i: usize) -> Shape {
        Shape::of_cell(self.cells[i].kind)
    }

    fn label(&self, slot: usize, corner: usize) -> u16 {
        let v = self.state[slot];
        if v == EMPTY {
            return 0;
        }
        let labels = if self.cells[slot].is_hex() { &self.hex_labels } else { &self.tri_labels };
        labels[v as usize][corner].0 + 1
    }

    fn vertex_ok(&self, vi: usize) -> bool {
        let entries = self.stars[vi].map(|(s, k)| if s == usize::MAX { 0 } else { self.label(s, k) });
        self.table.accepts(entries)
    }

    fn placement_ok(&self, slot: usize) -> bool {
        self.cell_vertices[slot].iter().all(|&vi| self.vertex_ok(vi))
    }

    /// Seed itself passes every vertex check.
    fn consistent(&self) -> bool {
        (0..self.stars.len()).all(|vi| {
            self.stars[vi].iter().all(|&(s, _)| s == usize::MAX || self.state[s] == EMPTY) || self.vertex_ok(vi)
        })
    }

    fn variant_count(&self, slot: usize) -> usize {
        self.rs.variants(self.shape(slot)).len()
    }

    fn extensions(&mut self, slot: usize) -> Vec<u16> {
        let mut out = Vec::new();
        for v in 0..self.variant_count(slot) as u16 {
            self.state[slot] = v;
            if self.placement_ok(slot) {
                out.push(v);
            }
        }
        self.state[slot] = EMPTY;
        out
    }

    fn tile(&self, slot: usize) -> Option<OrientedTile> {
        let v = self.state[slot];
        (v != EMPTY).then(|| self.rs.variants(self.shape(slot))[v as usize])
    }

    fn patch(&self) -> Patch {
        (0..self.cells.len()).filter_map(|i| Some((self.cells[i], self.tile(i)?))).collect()
    }

    /// Next cell to branch on: the first unplaced schedule cell, otherwise the
    /// free cell with fewest extensions. `Err(())` if some free cell already
    /// has none.
    fn next_probe(&mut self, schedule: &[usize]) -> Result<Option<(usize, Vec<u16>)>, ()> {
        if let Some(&s) = schedule.iter().find(|&&s| self.state[s] == EMPTY) {
            let ext = self.extensions(s);
            return Ok(Some((s, ext)));
        }
        let mut best: Option<(usize, Vec<u16>)> = None;
        for s in 0..self.cells.len() {
            if !self.free[s] || self.state[s] != EMPTY {
                continue;
            }
            let ext = self.extensions(s);
            if ext.is_empty() {
                return Err(());
            }
            if best.as_ref().is_none_or(|(_, b)| ext.len() < b.len()) {
                best = Some((s, ext));
            }
        }
        Ok(best)
    }
}

/// Accumulates completion statistics.
type Visitor<'v> = &'v (dyn Fn(&Patch) + Sync);

#[derive(Clone)]
struct Tally<'v> {
    count: u64,
    limit: u64,
    forced: Option<Vec<u16>>,
    collect: bool,
    patches: Vec<Patch>,
    visit: Option<Visitor<'v>>,
}

impl<'v> Tally<'v> {
    fn new(limit: u64, collect: bool) -> Self {
        Tally { count: 0, limit, forced: None, collect, patches: Vec::new(), visit: None }
    }

    fn full(&self) -> bool {
        self.count > self.limit
    }

    fn record(&mut self, board: &Board) {
        self.count += 1;
        if self.count > self.limit {
            return;
        }
        match &mut self.forced {
            None => self.forced = Some(board.state.clone()),
            Some(f) => {
                for (x, y) in f.iter_mut().zip(&board.state) {
                    if *x != *y {
                        *x = EMPTY;
                    }
                }
            }
        }
        if self.collect {
            self.patches.push(board.patch());
        }
        if let Some(f) = self.visit {
            f(&board.patch());
        }
    }

    fn merge(&mut self, other: Tally) {
        self.count += other.count;
        match (&mut self.forced, other.forced) {
            (_, None) => {}
            (None, f) => self.forced = f,
            (Some(f), Some(g)) => {
                for (x, y) in f.iter_mut().zip(g) {
                    if *x != y {
                        *x = EMPTY;
                    }
                }
            }
        }
        self.patches.extend(other.patches);
    }
}

fn dfs(board: &mut Board, schedule: &[usize], tally: &mut Tally) {
    if tally.full() {
        return;
    }
    let (slot, exts) = match board.next_probe(schedule) {
        Err(()) => return,
        Ok(None) => {
            tally.record(board);
            return;
        }
        Ok(Some(x)) => x,
    };
    for v in exts {
        board.state[slot] = v;
        dfs(board, schedule, tally);
        if tally.full() {
            break;
        }
    }
    board.state[slot] = EMPTY;
}

/// Runs the search, splitting the first branching level across threads.
fn search<'v>(board: &mut Board, schedule: &[usize], limit: u64, collect: bool, visit: Option<Visitor<'v>>) -> Tally<'v> {
    let mut tally = Tally { visit, ..Tally::new(limit, collect) };
    if !board.consistent() {
        return tally;
    }
    let (slot, exts) = match board.next_probe(schedule) {
        Err(()) => return tally,
        Ok(None) => {
            tally.record(board);
            return tally;
        }
        Ok(Some(x)) => x,
    };
    let parts: Vec<Tally> = par::map(exts, |v| {
        let mut b = board.clone();
        b.state[slot] = v;
        let mut t = Tally { visit, ..Tally::new(limit, collect) };
        dfs(&mut b, schedule, &mut t);
        t
    });
    for p in parts {
        tally.merge(p);
    }
    tally
}

fn schedule_slots(board: &Board, schedule: &ProbeSchedule) -> Vec<usize> {
    schedule
        .cells
        .iter()
        .filter_map(|c| board.cells.iter().position(|x| x == c))
        .filter(|&s| board.free[s])
        .collect()
}

/// Oriented tiles that can go on `cell` next to the placed tiles of `p`.
pub fn legal_extensions(rs: &RuleSet, p: &Patch, cell: CellIndex) -> Result<Vec<OrientedTile>, ForcingError> {
    if p.contains(&cell) {
        return Err(ForcingError::Occupied(cell));
    }
    let table = StarTable::new(rs);
    let region = BTreeSet::from([cell]);
    let mut board = Board::new(rs, &table, p, &region);
    let slot = board.cells.iter().position(|c| *c == cell).expect("cell tracked");
    let exts = board.extensions(slot);
    Ok(exts.into_iter().map(|v| rs.variants(Shape::of_cell(cell.kind))[v as usize]).collect())
}

/// Reusable search context for one rule set.
pub struct Forcer<'a> {
    rs: &'a RuleSet,
    table: StarTable,
}

impl<'a> Forcer<'a> {
    pub fn new(rs: &'a RuleSet) -> Self {
        Forcer { rs, table: StarTable::new(rs) }
    }

    pub fn rules(&self) -> &RuleSet {
        self.rs
    }

    pub fn table(&self) -> &StarTable {
        &self.table
    }

    pub fn legal_extensions(&self, p: &Patch, cell: CellIndex) -> Result<Vec<OrientedTile>, ForcingError> {
        if p.contains(&cell) {
            return Err(ForcingError::Occupied(cell));
        }
        let region = BTreeSet::from([cell]);
        let mut board = Board::new(self.rs, &self.table, p, &region);
        let slot = board.cells.iter().position(|c| *c == cell).expect("cell tracked");
        let exts = board.extensions(slot);
        Ok(exts.into_iter().map(|v| self.rs.variants(Shape::of_cell(cell.kind))[v as usize]).collect())
    }

    /// Does every vertex touched by `p` pass the star checks?
    pub fn locally_consistent(&self, p: &Patch) -> bool {
        Board::new(self.rs, &self.table, p, &BTreeSet::new()).consistent()
    }

    /// Number of legal completions, or `None` past `limit`.
    pub fn count(&self, seed: &Patch, region: &BTreeSet<CellIndex>, limit: u64) -> Option<u64> {
        let mut board = Board::new(self.rs, &self.table, seed, region);
        let t = search(&mut board, &[], limit, false, None);
        (!t.full()).then_some(t.count)
    }

    /// Calls `f` on every legal completion, in no particular order; returns
    /// the count, or `None` past `limit`.
    pub fn visit<F: Fn(&Patch) + Sync>(&self, seed: &Patch, region: &BTreeSet<CellIndex>, limit: u64, f: F) -> Option<u64> {
        let mut board = Board::new(self.rs, &self.table, seed, region);
        let t = search(&mut board, &[], limit, false, Some(&f));
        (!t.full()).then_some(t.count)
    }

    /// Any legal completion at all?
    pub fn extendable(&self, seed: &Patch, region: &BTreeSet<CellIndex>) -> bool {
        let mut board = Board::new(self.rs, &self.table, seed, region);
        if !board.consistent() {
            return false;
        }
        let mut t = Tally::new(0, false);
        dfs(&mut board, &[], &mut t);
        t.count > 0
    }

    /// All legal total assignments of `region` extending `seed`, sorted, and
    /// whether the list was cut at `limit`.
    pub fn enumerate(&self, seed: &Patch, region: &BTreeSet<CellIndex>, limit: u64) -> (Vec<Patch>, bool) {
        let mut board = Board::new(self.rs, &self.table, seed, region);
        let t = search(&mut board, &[], limit, true, None);
        let truncated = t.full();
        let mut patches = t.patches;
        patches.sort();
        patches.truncate(limit as usize);
        (patches, truncated)
    }

    /// Placements common to all completions plus the completion count.
    pub fn forced(
        &self,
        seed: &Patch,
        region: &BTreeSet<CellIndex>,
        limit: u64,
    ) -> (BTreeMap<CellIndex, OrientedTile>, CompletionCount) {
        let mut board = Board::new(self.rs, &self.table, seed, region);
        let t = search(&mut board, &[], limit, false, None);
        let count = if t.full() { CompletionCount::ExceedsLimit } else { CompletionCount::Exact(t.count) };
        (forced_map(&board, &t), count)
    }

    /// Depth-first case analysis following `schedule`.
    pub fn force_region(
        &self,
        seed: &Patch,
        region: &BTreeSet<CellIndex>,
        schedule: &ProbeSchedule,
        limit: u64,
    ) -> ForcingReport {
        let mut region = region.clone();
        region.extend(schedule.cells.iter().filter(|c| !seed.contains(c)));
        let mut board = Board::new(self.rs, &self.table, seed, &region);
        let slots = schedule_slots(&board, schedule);
        let mut tally = Tally::new(limit, false);
        let tree = if board.consistent() {
            build_tree(&mut board, &slots, None, &mut tally)
        } else {
            CaseNode { placement: None, probe: None, children: vec![], status: NodeStatus::Contradiction, completions: 0 }
        };
        let count = if tally.full() { CompletionCount::ExceedsLimit } else { CompletionCount::Exact(tally.count) };
        ForcingReport { seed: seed.clone(), region, tree, forced: forced_map(&board, &tally), completion_count: count }
    }
}

fn forced_map(board: &Board, t: &Tally) -> BTreeMap<CellIndex, OrientedTile> {
    let mut out = BTreeMap::new();
    if let Some(f) = &t.forced {
        for (i, &v) in f.iter().enumerate() {
            if v != EMPTY && board.free[i] {
                out.insert(board.cells[i], board.rs.variants(board.shape(i))[v as usize]);
            }
        }
    }
    out
}

fn build_tree(
    board: &mut Board,
    schedule: &[usize],
    placement: Option<PlacedTile>,
    tally: &mut Tally,
) -> CaseNode {
    let before = tally.count;
    let leaf = |status, completions| CaseNode { placement, probe: None, children: vec![], status, completions };
    if tally.full() {
        return leaf(NodeStatus::Open, 0);
    }
    let (slot, exts) = match board.next_probe(schedule) {
        Err(()) => return leaf(NodeStatus::Contradiction, 0),
        Ok(None) => {
            tally.record(board);
            return leaf(NodeStatus::ClosedUnique, 1);
        }
        Ok(Some(x)) => x,
    };
    let cell = board.cells[slot];
    let shape = board.shape(slot);
    let mut children = Vec::with_capacity(exts.len());
    for v in exts {
        board.state[slot] = v;
        let tile = board.rs.variants(shape)[v as usize];
        children.push(build_tree(board, schedule, Some(PlacedTile { cell, tile }), tally));
    }
    board.state[slot] = EMPTY;
    let completions = tally.count - before;
    let status = if children.iter().any(|c| c.status == NodeStatus::Open) || tally.full() {
        NodeStatus::Open
    } else {
        match completions {
            0 => NodeStatus::Contradiction,
            1 => NodeStatus::ClosedUnique,
            _ => NodeStatus::ClosedMultiple,
        }
    };
    CaseNode { placement, probe: Some(cell), children, status, completions }
}

/// Convenience wrapper over [`Forcer::force_region`].
pub fn force_region(
    rs: &RuleSet,
    seed: &Patch,
    region: &BTreeSet<CellIndex>,
    schedule: &ProbeSchedule,
    limit: u64,
) -> ForcingReport {
    Forcer::new(rs).force_region(seed, region, schedule, limit)
}

/// Convenience wrapper over [`Forcer::enumerate`].
pub fn enumerate_completions(
    rs: &RuleSet,
    seed: &Patch,
    region: &BTreeSet<CellIndex>,
    limit: u64,
) -> (Vec<Patch>, bool) {
    Forcer::new(rs).enumerate(seed, region, limit)
}

/// One `node-path branches contradictions` line of an expected-counts
/// manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expectation {
    pub path: String,
    pub branches: usize,
    pub contradictions: usize,
}

/// Expected case-tree counts.
///
/// ```text
/// cases 2 1 3        # root children (1-based) holding cases one, two, three
/// labels 1 2 3       # case label given to each when classifying (optional)
/// also 4 1           # a further root child classified under label 1 (optional)
/// root 3 0
/// case2 3 2
/// case3.* 3 2        # `*` steps into the only surviving child
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub cases: [usize; 3],
    /// Case label number (1 to 3) carried by each case's terminal.
    pub labels: [u8; 3],
    /// Further root children (1-based) and their label numbers.
    pub also: Vec<(usize, u8)>,
    pub expectations: Vec<Expectation>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Manifest, String> {
        let mut cases = None;
        let mut labels = [1, 2, 3];
        let mut also = Vec::new();
        let mut expectations = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| format!("line {}: {m}", i + 1);
            let w: Vec<&str> = line.split_whitespace().collect();
            let nums: Result<Vec<usize>, _> = w[1..].iter().map(|x| x.parse::<usize>()).collect();
            let nums = nums.map_err(|_| err("expected counts"))?;
            if w[0] == "cases" {
                if nums.len() != 3 || nums.contains(&0) {
                    return Err(err("`cases` takes three 1-based child numbers"));
                }
                cases = Some([nums[0], nums[1], nums[2]]);
            } else if w[0] == "labels" {
                if nums.len() != 3 || nums.iter().any(|&n| !(1..=3).contains(&n)) {
                    return Err(err("`labels` takes three case numbers from 1 to 3"));
                }
                labels = [nums[0] as u8, nums[1] as u8, nums[2] as u8];
            } else if w[0] == "also" {
                if nums.len() != 2 || nums[0] == 0 || !(1..=3).contains(&nums[1]) {
                    return Err(err("`also` takes a 1-based child number and a case number"));
                }
                also.push((nums[0], nums[1] as u8));
            } else {
                if nums.len() != 2 {
                    return Err(err("expected `node-path branches contradictions`"));
                }
                expectations.push(Expectation { path: w[0].to_string(), branches: nums[0], contradictions: nums[1] });
            }
        }
        Ok(Manifest { cases: cases.ok_or("missing `cases` line")?, labels, also, expectations })
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("cases {} {} {}\n", self.cases[0], self.cases[1], self.cases[2]);
        if self.labels != [1, 2, 3] {
            let _ = writeln!(out, "labels {} {} {}", self.labels[0], self.labels[1], self.labels[2]);
        }
        for (k, l) in &self.also {
            let _ = writeln!(out, "also {k} {l}");
        }
        for e in &self.expectations {
            let _ = writeln!(out, "{} {} {}", e.path, e.branches, e.contradictions);
        }
        out
    }
}

/// Outcome of checking one expectation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckedNode {
    pub expected: Expectation,
    /// `(branches, contradictions)` found, or `None` if the path is missing.
    pub found: Option<(usize, usize)>,
}

impl CheckedNode {
    pub fn passed(&self) -> bool {
        self.found == Some((self.expected.branches, self.expected.contradictions))
    }
}

/// The case tree: a forcing report whose root children are the cases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseTree {
    pub report: ForcingReport,
    /// Root child index (0-based) of cases one, two and three.
    pub cases: [usize; 3],
}

impl CaseTree {
    /// Follows a node path; see [`Manifest`].
    pub fn node(&self, path: &str) -> Option<&CaseNode> {
        let mut parts = path.split('.');
        let head = parts.next()?;
        let mut node = &self.report.tree;
        if let Some(k) = head.strip_prefix("case") {
            let k: usize = k.parse().ok()?;
            node = node.children.get(*self.cases.get(k.checked_sub(1)?)?)?;
        } else if head != "root" {
            return None;
        }
        for part in parts {
            node = if part == "*" {
                let mut alive = node.children.iter().filter(|c| c.status != NodeStatus::Contradiction);
                let only = alive.next()?;
                if alive.next().is_some() {
                    return None;
                }
                only
            } else {
                node.children.get(part.parse::<usize>().ok()?.checked_sub(1)?)?
            };
        }
        Some(node)
    }

    pub fn check(&self, manifest: &Manifest) -> Vec<CheckedNode> {
        manifest
            .expectations
            .iter()
            .map(|e| CheckedNode {
                expected: e.clone(),
                found: self.node(&e.path).map(|n| (n.children.len(), n.contradictions())),
            })
            .collect()
    }

    /// The placement made at the root for case `k` (1-based).
    pub fn case_placement(&self, k: usize) -> Option<PlacedTile> {
        self.report.tree.children.get(self.cases[k - 1])?.placement
    }
}

/// Runs the case analysis from `seed`, with the root children assigned to
/// cases by `manifest`.
pub fn reproduce_case_tree(
    rs: &RuleSet,
    seed: &Patch,
    schedule: &ProbeSchedule,
    manifest: &Manifest,
    limit: u64,
) -> Result<CaseTree, String> {
    let report = Forcer::new(rs).force_region(seed, &BTreeSet::new(), schedule, limit);
    let n = report.tree.children.len();
    if let Some(k) = manifest.cases.iter().find(|&&k| k > n) {
        return Err(format!("manifest names root child {k}, but the root has {n}"));
    }
    Ok(CaseTree { report, cases: manifest.cases.map(|k| k - 1) })
}

/// Terminal configuration below root child `child` (0-based): the seed, the
/// child's placement and everything forced below it within the tree's
/// region. When the child does not close uniquely this is less than a full
/// assignment of the region.
pub fn terminal_configuration(rs: &RuleSet, tree: &CaseTree, child: usize, limit: u64) -> Result<Patch, String> {
    let node = tree.report.tree.children.get(child).ok_or_else(|| format!("no root child {}", child + 1))?;
    if node.status == NodeStatus::Contradiction {
        return Err(format!("root child {} is contradictory", child + 1));
    }
    let p = node.placement.expect("children carry placements");
    let seed = tree.report.seed.place(p.cell, p.tile).map_err(|e| e.to_string())?;
    let (forced, _) = Forcer::new(rs).forced(&seed, &tree.report.region, limit);
    let mut patch = seed;
    for (c, t) in forced {
        if !patch.contains(&c) {
            patch.insert(c, t).expect("free cell");
        }
    }
    Ok(patch)
}

/// [`terminal_configuration`] of cases one, two and three.
pub fn terminal_configurations(rs: &RuleSet, tree: &CaseTree, limit: u64) -> Result<[Patch; 3], String> {
    let mut out = Vec::new();
    for k in tree.cases {
        out.push(terminal_configuration(rs, tree, k, limit)?);
    }
    Ok(out.try_into().expect("three cases"))
}

/// Human-readable outline of a case tree.
pub fn render_tree(rs: &RuleSet, node: &CaseNode) -> String {
    let mut out = String::new();
    fn walk(rs: &RuleSet, n: &CaseNode, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        let what = match &n.placement {
            None => "root".to_string(),
            Some(p) => format!(
                "{} <- {} r{}{}",
                p.cell,
                rs.prototiles()[p.tile.prototile()].name,
                p.tile.rotation(),
                if p.tile.reflected() { " m" } else { "" }
            ),
        };
        let probe = n.probe.map(|c| format!(" probe [{c}]")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{pad}{what}: {} ({} completion{}){probe}",
            n.status.token(),
            n.completions,
            if n.completions == 1 { "" } else { "s" }
        );
        if n.status != NodeStatus::Contradiction {
            for c in &n.children {
                walk(rs, c, depth + 1, out);
            }
        }
    }
    walk(rs, node, 0, &mut out);
    out
}
