use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Boundary, EpisodeGeometry, Point3};
use crate::distill::{MagicKind, PlanError};

/// Free cells between neighbouring boxes along x, and between the circuit
/// and the first box.
pub const BOX_GAP: i64 = 2;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxPlacement {
    pub state_kind: MagicKind,
    /// Minimum corner.
    pub origin: Point3,
    pub dims: [i64; 3],
    pub succeeded: bool,
    /// Lower output pin; the upper one is `output_pin + (2, 0, 0)`.
    pub output_pin: Point3,
}

impl BoxPlacement {
    pub fn pins(&self) -> [Point3; 2] {
        let p = self.output_pin;
        [p, Point3::new(p.x + 2, p.y, p.z)]
    }
}

/// Lays boxes in one row toward −x, left of the circuit and below y = −4:
/// all A boxes, then all Y boxes. Each box's pins sit on its circuit-facing
/// face at y = −4, z = 0.
pub fn place_boxes(
    counts: &BTreeMap<MagicKind, usize>,
    dims: &BTreeMap<MagicKind, [i64; 3]>,
    masks: &BTreeMap<MagicKind, Vec<bool>>,
) -> Vec<BoxPlacement> {
    let mut out = Vec::new();
    let mut cursor = -BOX_GAP;
    for kind in MagicKind::ALL {
        let [dx, dy, dz] = dims[&kind];
        // pins need 3 cells of face and an even origin
        let width = {
            let w = dx.max(3);
            w + w % 2
        };
        for i in 0..counts.get(&kind).copied().unwrap_or(0) {
            let ox = cursor - width;
            let origin = Point3::new(ox, -4 - dy, -(dz / 2));
            let succeeded = masks.get(&kind).and_then(|m| m.get(i)).copied().unwrap_or(false);
            out.push(BoxPlacement {
                state_kind: kind,
                origin,
                dims: [dx, dy, dz],
                succeeded,
                output_pin: Point3::new(ox, -4, 0),
            });
            cursor = ox - BOX_GAP;
        }
    }
    out
}

/// An episode that starts from a distilled state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InitSite {
    pub episode: usize,
    pub kind: MagicKind,
    /// First points of the two rails.
    pub rail_start: [Point3; 2],
}

impl InitSite {
    pub fn from_episodes(episodes: &[EpisodeGeometry], kind_of: impl Fn(usize) -> Option<MagicKind>) -> Vec<InitSite> {
        let mut sites: Vec<InitSite> = episodes
            .iter()
            .enumerate()
            .filter(|(_, e)| e.start == Boundary::Connected)
            .filter_map(|(i, e)| {
                Some(InitSite {
                    episode: i,
                    kind: kind_of(i)?,
                    rail_start: [Point3::new(e.x_start, e.rail_y[0], 0), Point3::new(e.x_start, e.rail_y[1], 0)],
                })
            })
            .collect();
        sites.sort_by_key(|s| (s.rail_start[0].x, s.rail_start[0].y));
        sites
    }
}

/// Primal pair from a box's pins to an episode's rail starts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connection {
    pub box_index: usize,
    /// Pin to the lower rail's start.
    pub lower: Vec<Point3>,
    /// Pin to the upper rail's start.
    pub upper: Vec<Point3>,
}

fn route(pin: Point3, rail: Point3, depth: i64) -> Vec<Point3> {
    vec![
        pin,
        Point3::new(pin.x, pin.y, depth),
        Point3::new(pin.x, -2, depth),
        Point3::new(rail.x, -2, depth),
        Point3::new(rail.x, rail.y, depth),
        rail,
    ]
}

/// Greedy nearest-pin matching: sites in order of their rail start, each
/// taking the unused successful box of its kind with the closest pin
/// (Manhattan distance, ties to the lower box index). Connection `k` runs
/// its two legs at depths z = −4k−2 and z = −4k−4, so legs never meet.
pub fn wire_outputs(placements: &[BoxPlacement], sites: &[InitSite]) -> Result<BTreeMap<usize, Connection>, PlanError> {
    let mut used: BTreeSet<usize> = BTreeSet::new();
    let mut out = BTreeMap::new();
    for (k, site) in sites.iter().enumerate() {
        let best = placements
            .iter()
            .enumerate()
            .filter(|(i, b)| b.state_kind == site.kind && b.succeeded && !used.contains(i))
            .min_by_key(|(i, b)| (b.output_pin.manhattan(site.rail_start[0]), *i));
        let Some((index, b)) = best else {
            let required = sites.iter().filter(|s| s.kind == site.kind).count();
            let successes = placements.iter().filter(|b| b.state_kind == site.kind && b.succeeded).count();
            return Err(PlanError::InsufficientSuccesses { kind: site.kind, required, successes });
        };
        used.insert(index);
        let k = k as i64;
        let [pl, pu] = b.pins();
        out.insert(
            site.episode,
            Connection {
                box_index: index,
                lower: route(pl, site.rail_start[0], -4 * k - 2),
                upper: route(pu, site.rail_start[1], -4 * k - 4),
            },
        );
    }
    Ok(out)
}
