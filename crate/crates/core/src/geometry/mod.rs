//! Braided-defect geometry: qubit rails, CNOT braids, distillation boxes
//! and their connections, on an integer lattice with x as the time axis.
//!
//! Layout: op index `s` owns x ∈ [4s, 4s+4). Wire `i` has its two primal
//! rails at y = 4i and y = 4i+2 in the plane z = 0. Primal vertices are all
//! even and dual vertices all odd, so a primal and a dual segment can never
//! cover the same cell.

mod boxes;
mod export;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Basis, InitState, Operation, QubitId};
use crate::distill::MagicKind;
use crate::schedule::{EpisodeEnd, EpisodeStart, Schedule};

pub use boxes::{place_boxes, wire_outputs, BoxPlacement, Connection, InitSite, BOX_GAP};
pub use export::{export_assembly, export_obj, import_assembly, ExportError};

/// Lattice cells per op slot along x.
pub const SLOT: i64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i64; 3]", into = "[i64; 3]")]
pub struct Point3 {
    pub x: i64,
    pub y: i64,
    pub z: i64,
}

impl Point3 {
    pub const fn new(x: i64, y: i64, z: i64) -> Self {
        Point3 { x, y, z }
    }

    pub fn all_even(self) -> bool {
        self.x % 2 == 0 && self.y % 2 == 0 && self.z % 2 == 0
    }

    pub fn all_odd(self) -> bool {
        self.x.rem_euclid(2) == 1 && self.y.rem_euclid(2) == 1 && self.z.rem_euclid(2) == 1
    }

    pub fn manhattan(self, o: Point3) -> i64 {
        (self.x - o.x).abs() + (self.y - o.y).abs() + (self.z - o.z).abs()
    }

    fn differing_axes(self, o: Point3) -> usize {
        (self.x != o.x) as usize + (self.y != o.y) as usize + (self.z != o.z) as usize
    }
}

impl From<[i64; 3]> for Point3 {
    fn from([x, y, z]: [i64; 3]) -> Self {
        Point3 { x, y, z }
    }
}

impl From<Point3> for [i64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefectKind {
    Primal,
    Dual,
}

/// What a defect realizes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum DefectLabel {
    /// Rail(s) of one episode, including its caps and box connection.
    Rail { episode: usize },
    /// Braid loop of the CNOT at this ICM op index.
    Braid { cnot: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Defect {
    pub kind: DefectKind,
    /// A closed path also has the segment from the last point back to the first.
    pub closed: bool,
    pub path: Vec<Point3>,
    #[serde(flatten)]
    pub label: DefectLabel,
}

impl Defect {
    pub fn segments(&self) -> impl Iterator<Item = (Point3, Point3)> + '_ {
        let n = self.path.len();
        let count = if self.closed && n > 1 { n } else { n.saturating_sub(1) };
        (0..count).map(move |i| (self.path[i], self.path[(i + 1) % n]))
    }

    /// Every lattice point on the path.
    pub fn cells(&self) -> BTreeSet<Point3> {
        let mut out: BTreeSet<Point3> = self.path.iter().copied().collect();
        for (a, b) in self.segments() {
            out.extend(segment_cells(a, b));
        }
        out
    }
}

/// Lattice points of an axis-aligned segment, both ends included.
pub fn segment_cells(a: Point3, b: Point3) -> Vec<Point3> {
    let steps = a.manhattan(b);
    let d = Point3::new((b.x - a.x).signum(), (b.y - a.y).signum(), (b.z - a.z).signum());
    (0..=steps).map(|k| Point3::new(a.x + k * d.x, a.y + k * d.y, a.z + k * d.z)).collect()
}

/// How an episode's rail pair is terminated at one end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Z-type: the rails are joined by a third primal segment.
    Capped,
    /// X-type, circuit input/output, or a selective measurement.
    Open,
    /// Fed by a distillation box.
    Connected,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeGeometry {
    pub qubit: QubitId,
    pub wire: usize,
    pub x_start: i64,
    pub x_end: i64,
    pub rail_y: [i64; 2],
    pub start: Boundary,
    pub end: Boundary,
    /// Box index feeding this episode.
    pub source_box: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Braid {
    pub cnot: usize,
    pub defect: usize,
    pub crossings: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: Point3,
    pub max: Point3,
}

impl BoundingBox {
    pub fn volume(&self) -> u64 {
        ((self.max.x - self.min.x + 1) * (self.max.y - self.min.y + 1) * (self.max.z - self.min.z + 1)) as u64
    }

    fn include(&mut self, p: Point3) {
        self.min = Point3::new(self.min.x.min(p.x), self.min.y.min(p.y), self.min.z.min(p.z));
        self.max = Point3::new(self.max.x.max(p.x), self.max.y.max(p.y), self.max.z.max(p.z));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub bbox_volume: u64,
    pub occupied_cells: u64,
    /// Rounded to 3 decimals.
    pub occupancy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assembly {
    pub version: u32,
    pub defects: Vec<Defect>,
    pub braids: Vec<Braid>,
    pub boxes: Vec<BoxPlacement>,
    pub episodes: Vec<EpisodeGeometry>,
    pub bbox: Option<BoundingBox>,
    pub metrics: Option<Metrics>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("op {op}: rail of `{qubit}` is not live")]
    RailNotLive { op: usize, qubit: QubitId },
    #[error("episode of `{qubit}` starts with {state:?} but has no successful box")]
    MissingBoxOutput { qubit: QubitId, state: InitState },
    #[error("assembly has no geometry")]
    EmptyAssembly,
    #[error("defect {defect}: {msg}")]
    BadDefect { defect: usize, msg: String },
    #[error("defects {a} and {b} share cell {cell:?}")]
    SharedCell { a: usize, b: usize, cell: Point3 },
    #[error("braid for cnot {cnot} has {crossings} crossings")]
    BadBraid { cnot: usize, crossings: usize },
    #[error("box {index}: {msg}")]
    BadBox { index: usize, msg: String },
}

pub fn rail_y(wire: usize) -> [i64; 2] {
    let w = wire as i64;
    [4 * w, 4 * w + 2]
}

fn start_boundary(s: EpisodeStart) -> Boundary {
    match s {
        EpisodeStart::Init(InitState::Zero) => Boundary::Capped,
        EpisodeStart::Init(InitState::A | InitState::Y) => Boundary::Connected,
        EpisodeStart::Init(InitState::Plus) | EpisodeStart::Input => Boundary::Open,
    }
}

fn end_boundary(e: EpisodeEnd) -> Boundary {
    match e {
        EpisodeEnd::Measure(Basis::Z) => Boundary::Capped,
        EpisodeEnd::Measure(Basis::X) | EpisodeEnd::Selective { .. } | EpisodeEnd::Output => Boundary::Open,
    }
}

/// Rail geometry per episode, in schedule order. No polylines yet.
pub fn episode_geometry(s: &Schedule) -> Vec<EpisodeGeometry> {
    s.episodes
        .iter()
        .map(|e| EpisodeGeometry {
            qubit: e.qubit.clone(),
            wire: e.wire,
            x_start: SLOT * e.birth as i64,
            x_end: SLOT * e.death as i64,
            rail_y: rail_y(e.wire),
            start: start_boundary(e.start),
            end: end_boundary(e.end),
            source_box: None,
        })
        .collect()
}

fn push_point(path: &mut Vec<Point3>, p: Point3) {
    if path.last() != Some(&p) {
        path.push(p);
    }
}

/// Primal polylines for every episode: the two rails, merged with the
/// end caps and the box connection when there is one.
pub fn lay_qubit_rails(episodes: &[EpisodeGeometry], connections: &BTreeMap<usize, Connection>) -> Vec<Defect> {
    let mut out = Vec::new();
    for (idx, e) in episodes.iter().enumerate() {
        let [y0, y1] = e.rail_y;
        let (xs, xe) = (e.x_start, e.x_end);
        let (lead0, lead1): (Vec<Point3>, Vec<Point3>) = match connections.get(&idx) {
            Some(c) => (c.lower.clone(), c.upper.clone()),
            None => (Vec::new(), Vec::new()),
        };
        let label = DefectLabel::Rail { episode: idx };
        let (start_cap, end_cap) = (e.start == Boundary::Capped, e.end == Boundary::Capped);
        let mut add = |path: Vec<Point3>, closed: bool| {
            out.push(Defect { kind: DefectKind::Primal, closed, path, label: label.clone() });
        };
        let corner = |x, y| Point3::new(x, y, 0);
        match (start_cap, end_cap) {
            (true, true) => {
                let mut p = Vec::new();
                for q in [corner(xs, y0), corner(xe, y0), corner(xe, y1), corner(xs, y1)] {
                    push_point(&mut p, q);
                }
                let closed = p.len() > 2;
                add(p, closed);
            }
            (true, false) => {
                let mut p = Vec::new();
                for q in [corner(xe, y0), corner(xs, y0), corner(xs, y1), corner(xe, y1)] {
                    push_point(&mut p, q);
                }
                add(p, false);
            }
            (false, true) => {
                let mut p = Vec::new();
                for q in lead0.iter().copied().chain([corner(xs, y0), corner(xe, y0), corner(xe, y1), corner(xs, y1)]) {
                    push_point(&mut p, q);
                }
                for q in lead1.iter().rev().copied() {
                    push_point(&mut p, q);
                }
                add(p, false);
            }
            (false, false) => {
                for (lead, y) in [(&lead0, y0), (&lead1, y1)] {
                    let mut p = Vec::new();
                    for q in lead.iter().copied().chain([corner(xs, y), corner(xe, y)]) {
                        push_point(&mut p, q);
                    }
                    add(p, false);
                }
            }
        }
    }
    out
}

/// Closed dual loop for a CNOT at op index `slot`: it passes between the
/// control rails twice and between the target rails once.
pub fn lay_cnot(slot: usize, control_wire: usize, target_wire: usize) -> Defect {
    let x0 = SLOT * slot as i64 + 1;
    let x1 = x0 + 2;
    let yc = rail_y(control_wire)[0] + 1;
    let yt = rail_y(target_wire)[0] + 1;
    // side step past the target pair, away from the control
    let ys = if target_wire > control_wire { yt + 2 } else { yt - 2 };
    let p = Point3::new;
    let mut path = Vec::new();
    for q in [
        p(x0, yc, 1),
        p(x0, yc, -1),
        p(x1, yc, -1),
        p(x1, yc, 1),
        p(x1, yt, 1),
        p(x1, yt, -3),
        p(x0, yt, -3),
        p(x0, ys, -3),
        p(x0, ys, 3),
        p(x0, yc, 3),
    ] {
        push_point(&mut path, q);
    }
    Defect { kind: DefectKind::Dual, closed: true, path, label: DefectLabel::Braid { cnot: slot } }
}

/// Map from primal cell to the episode whose rails cover it.
fn primal_owner(defects: &[Defect]) -> HashMap<Point3, usize> {
    let mut owner = HashMap::new();
    for d in defects.iter().filter(|d| d.kind == DefectKind::Primal) {
        if let DefectLabel::Rail { episode } = d.label {
            for c in d.cells() {
                owner.insert(c, episode);
            }
        }
    }
    owner
}

/// Crossings of one dual defect: z-segments through the plane z = 0 whose
/// crossing point has primal cells of the same episode at y − 1 and y + 1.
fn crossings_with(d: &Defect, owner: &HashMap<Point3, usize>) -> usize {
    d.segments()
        .filter(|(a, b)| a.x == b.x && a.y == b.y && a.z.min(b.z) < 0 && a.z.max(b.z) > 0)
        .filter(|(a, _)| {
            let below = owner.get(&Point3::new(a.x, a.y - 1, 0));
            let above = owner.get(&Point3::new(a.x, a.y + 1, 0));
            matches!((below, above), (Some(p), Some(q)) if p == q)
        })
        .count()
}

pub fn count_crossings(dual: &Defect, defects: &[Defect]) -> usize {
    crossings_with(dual, &primal_owner(defects))
}

/// Builds the assembly of a scheduled ICM circuit. `boxes` and
/// `connections` (keyed by episode index) come from [`place_boxes`] and
/// [`wire_outputs`].
pub fn build_assembly(
    ops: &[Operation],
    schedule: &Schedule,
    boxes: Vec<BoxPlacement>,
    connections: &BTreeMap<usize, Connection>,
) -> Result<Assembly, GeometryError> {
    let mut episodes = episode_geometry(schedule);
    for (idx, e) in episodes.iter_mut().enumerate() {
        if e.start == Boundary::Connected {
            let c = connections.get(&idx).ok_or_else(|| {
                let state = match schedule.episodes[idx].start {
                    EpisodeStart::Init(s) => s,
                    EpisodeStart::Input => InitState::A,
                };
                GeometryError::MissingBoxOutput { qubit: e.qubit.clone(), state }
            })?;
            e.source_box = Some(c.box_index);
        }
    }
    let mut defects = lay_qubit_rails(&episodes, connections);
    let live_at = |q: &QubitId, op: usize| -> Option<usize> {
        schedule.episodes.iter().find(|e| &e.qubit == q && e.birth <= op && op < e.death).map(|e| e.wire)
    };
    let mut braids = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        if let Operation::Cnot { control, target } = op {
            let cw = live_at(control, i).ok_or(GeometryError::RailNotLive { op: i, qubit: control.clone() })?;
            let tw = live_at(target, i).ok_or(GeometryError::RailNotLive { op: i, qubit: target.clone() })?;
            braids.push(Braid { cnot: i, defect: defects.len(), crossings: 0 });
            defects.push(lay_cnot(i, cw, tw));
        }
    }
    let owner = primal_owner(&defects);
    for b in &mut braids {
        b.crossings = crossings_with(&defects[b.defect], &owner);
    }
    let mut a = Assembly { version: 1, defects, braids, boxes, episodes, bbox: None, metrics: None };
    a.bbox = bounding_box(&a);
    a.metrics = compute_metrics(&a).ok();
    Ok(a)
}

/// Cells of a box.
pub fn box_cells(b: &BoxPlacement) -> impl Iterator<Item = Point3> + '_ {
    let [dx, dy, dz] = b.dims;
    (0..dx).flat_map(move |i| {
        (0..dy).flat_map(move |j| (0..dz).map(move |k| Point3::new(b.origin.x + i, b.origin.y + j, b.origin.z + k)))
    })
}

pub fn bounding_box(a: &Assembly) -> Option<BoundingBox> {
    let mut pts = a.defects.iter().flat_map(|d| d.path.iter().copied()).chain(a.boxes.iter().flat_map(|b| {
        let [dx, dy, dz] = b.dims;
        [b.origin, Point3::new(b.origin.x + dx - 1, b.origin.y + dy - 1, b.origin.z + dz - 1)]
    }));
    let first = pts.next()?;
    let mut bb = BoundingBox { min: first, max: first };
    for p in pts {
        bb.include(p);
    }
    Some(bb)
}

pub fn compute_metrics(a: &Assembly) -> Result<Metrics, GeometryError> {
    let bb = bounding_box(a).ok_or(GeometryError::EmptyAssembly)?;
    let mut cells: BTreeSet<Point3> = BTreeSet::new();
    for d in &a.defects {
        cells.extend(d.cells());
    }
    for b in &a.boxes {
        cells.extend(box_cells(b));
    }
    let occupied = cells.len() as u64;
    let volume = bb.volume();
    let occupancy = (occupied as f64 / volume as f64 * 1000.0).round() / 1000.0;
    Ok(Metrics { bbox_volume: volume, occupied_cells: occupied, occupancy })
}

/// Checks the structural invariants: axis-aligned paths, parity by kind,
/// pairwise cell-disjoint defects, 3 crossings per braid, disjoint boxes.
pub fn check_assembly(a: &Assembly) -> Result<(), GeometryError> {
    for (i, d) in a.defects.iter().enumerate() {
        let bad = |msg: String| GeometryError::BadDefect { defect: i, msg };
        for (p, q) in d.segments() {
            if p.differing_axes(q) != 1 {
                return Err(bad(format!("segment {p:?} -> {q:?} is not axis-aligned")));
            }
        }
        for p in &d.path {
            let ok = match d.kind {
                DefectKind::Primal => p.all_even(),
                DefectKind::Dual => p.all_odd(),
            };
            if !ok {
                return Err(bad(format!("point {p:?} has the wrong parity")));
            }
        }
    }
    let mut owner: HashMap<Point3, usize> = HashMap::new();
    for (i, d) in a.defects.iter().enumerate() {
        for c in d.cells() {
            if let Some(&j) = owner.get(&c) {
                return Err(GeometryError::SharedCell { a: j, b: i, cell: c });
            }
            owner.insert(c, i);
        }
    }
    let primal = primal_owner(&a.defects);
    for b in &a.braids {
        let fresh = crossings_with(&a.defects[b.defect], &primal);
        if b.crossings != 3 || fresh != 3 {
            return Err(GeometryError::BadBraid { cnot: b.cnot, crossings: fresh });
        }
    }
    let mut box_owner: HashMap<Point3, usize> = HashMap::new();
    for (i, b) in a.boxes.iter().enumerate() {
        for c in box_cells(b) {
            if let Some(&j) = box_owner.get(&c) {
                return Err(GeometryError::BadBox { index: i, msg: format!("overlaps box {j}") });
            }
            if let Some(&d) = owner.get(&c) {
                return Err(GeometryError::BadBox { index: i, msg: format!("overlaps defect {d}") });
            }
            box_owner.insert(c, i);
        }
    }
    Ok(())
}

impl MagicKind {
    pub fn label(self) -> &'static str {
        match self {
            MagicKind::A => "A",
            MagicKind::Y => "Y",
        }
    }
}
