//! Qubit lifetimes and wire sharing for ICM circuits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{controller_source, is_icm, Basis, Circuit, InitState, Operation, QubitDecl, QubitId, Validation};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("circuit is not in ICM form (op {0})")]
    NotIcm(usize),
    #[error("qubit `{0}` has more than one lifetime; schedule the unshared circuit")]
    Reinitialized(QubitId),
    #[error("qubits `{a}` and `{b}` overlap on wire {wire}")]
    OverlapViolation { wire: usize, a: QubitId, b: QubitId },
    #[error("qubit `{0}` has no wire")]
    Unassigned(QubitId),
    #[error("op {index}: controller `{controller}` would read a later episode of its wire")]
    AmbiguousController { index: usize, controller: QubitId },
    #[error("rewritten circuit is invalid: {0}")]
    Invalid(#[from] crate::circuit::CircuitError),
}

/// Closed op-index interval during which a qubit occupies a wire.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Lifetime {
    pub qubit: QubitId,
    /// Index of the `Init`, or 0 for inputs.
    pub birth: usize,
    /// Index of the measurement, or `ops.len()` if never measured.
    /// `birth == death` only for an input measured by op 0.
    pub death: usize,
}

impl Lifetime {
    pub fn new(qubit: impl Into<QubitId>, birth: usize, death: usize) -> Self {
        Lifetime { qubit: qubit.into(), birth, death }
    }

    /// Whether `self` must finish before `other` may start on the same wire.
    pub fn precedes(&self, other: &Lifetime) -> bool {
        self.death < other.birth
    }

    pub fn overlaps(&self, other: &Lifetime) -> bool {
        !(self.precedes(other) || other.precedes(self))
    }
}

/// One lifetime per qubit that is an input or gets initialized, in
/// declaration order.
pub fn compute_lifetimes(c: &Circuit) -> Result<Vec<Lifetime>, ScheduleError> {
    if let Some(i) = c.ops().iter().position(|op| !op.is_icm()) {
        return Err(ScheduleError::NotIcm(i));
    }
    debug_assert!(is_icm(c));
    let end = c.ops().len();
    let mut span: BTreeMap<&QubitId, (Option<usize>, Option<usize>)> = BTreeMap::new();
    for q in c.inputs() {
        span.insert(q, (Some(0), None));
    }
    for (i, op) in c.ops().iter().enumerate() {
        match op {
            Operation::Init { qubit, .. } => {
                let e = span.entry(qubit).or_default();
                if e.0.is_some() {
                    return Err(ScheduleError::Reinitialized(qubit.clone()));
                }
                e.0 = Some(i);
            }
            Operation::Measure { qubit, .. } | Operation::SelectiveMeasure { qubit, .. } => {
                span.entry(qubit).or_default().1 = Some(i);
            }
            _ => {}
        }
    }
    Ok(c.qubit_ids()
        .filter_map(|q| {
            let (b, d) = span.get(q)?;
            Some(Lifetime { qubit: q.clone(), birth: (*b)?, death: d.unwrap_or(end) })
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireAssignment {
    pub wire_of: BTreeMap<QubitId, usize>,
    pub wire_count: usize,
    /// Largest number of lifetimes containing one op index.
    pub max_live: usize,
}

impl WireAssignment {
    /// Each qubit on its own wire, in the given order.
    pub fn identity(lifetimes: &[Lifetime]) -> Self {
        WireAssignment {
            wire_of: lifetimes.iter().enumerate().map(|(i, l)| (l.qubit.clone(), i)).collect(),
            wire_count: lifetimes.len(),
            max_live: max_live(lifetimes),
        }
    }

    /// Qubits on each wire, sorted by birth.
    pub fn episodes<'a>(&self, lifetimes: &'a [Lifetime]) -> Vec<Vec<&'a Lifetime>> {
        let mut wires: Vec<Vec<&Lifetime>> = vec![Vec::new(); self.wire_count];
        for l in lifetimes {
            if let Some(&w) = self.wire_of.get(&l.qubit) {
                wires[w].push(l);
            }
        }
        for w in &mut wires {
            w.sort_by_key(|l| (l.birth, l.death));
        }
        wires
    }

    /// Checks that no wire hosts two overlapping lifetimes.
    pub fn check(&self, lifetimes: &[Lifetime]) -> Result<(), ScheduleError> {
        for l in lifetimes {
            if !self.wire_of.contains_key(&l.qubit) {
                return Err(ScheduleError::Unassigned(l.qubit.clone()));
            }
        }
        for (wire, eps) in self.episodes(lifetimes).iter().enumerate() {
            for pair in eps.windows(2) {
                if !pair[0].precedes(pair[1]) {
                    return Err(ScheduleError::OverlapViolation {
                        wire,
                        a: pair[0].qubit.clone(),
                        b: pair[1].qubit.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn report(&self) -> WireReport {
        WireReport { version: 1, wire_of: self.wire_of.clone(), wire_count: self.wire_count, max_live: self.max_live }
    }
}

/// JSON form of a wire assignment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireReport {
    pub version: u32,
    pub wire_of: BTreeMap<QubitId, usize>,
    pub wire_count: usize,
    pub max_live: usize,
}

/// Maximum number of lifetimes sharing an op index.
pub fn max_live(lifetimes: &[Lifetime]) -> usize {
    let mut events: Vec<(usize, i32)> = Vec::with_capacity(lifetimes.len() * 2);
    for l in lifetimes {
        events.push((l.birth, 1));
        events.push((l.death + 1, -1));
    }
    // ends before starts at the same index
    events.sort_by_key(|&(i, d)| (i, d));
    let (mut live, mut best) = (0i32, 0i32);
    for (_, d) in events {
        live += d;
        best = best.max(live);
    }
    best as usize
}

/// First-fit over lifetimes ordered by (birth, death, name): each goes on
/// the lowest wire whose last occupant died before it is born.
pub fn assign_wires(lifetimes: &[Lifetime]) -> WireAssignment {
    let mut order: Vec<&Lifetime> = lifetimes.iter().collect();
    order.sort_by(|a, b| (a.birth, a.death, &a.qubit).cmp(&(b.birth, b.death, &b.qubit)));
    let mut last_death: Vec<usize> = Vec::new();
    let mut wire_of = BTreeMap::new();
    for l in order {
        let w = match last_death.iter().position(|&d| d < l.birth) {
            Some(w) => {
                last_death[w] = l.death;
                w
            }
            None => {
                last_death.push(l.death);
                last_death.len() - 1
            }
        };
        wire_of.insert(l.qubit.clone(), w);
    }
    let a = WireAssignment { wire_of, wire_count: last_death.len(), max_live: max_live(lifetimes) };
    debug_assert_eq!(a.wire_count, a.max_live);
    a
}

pub fn wire_name(w: usize) -> QubitId {
    QubitId::new(format!("w{w}"))
}

/// Renames every qubit to its wire `w<n>`. The result uses episodic
/// validation: each wire is a sequence of complete init..measure episodes.
pub fn rewrite_on_wires(c: &Circuit, w: &WireAssignment) -> Result<Circuit, ScheduleError> {
    let lifetimes = compute_lifetimes(c)?;
    w.check(&lifetimes)?;
    let name = |q: &QubitId| -> QubitId { w.wire_of.get(q).map_or_else(|| q.clone(), |&i| wire_name(i)) };
    for (index, op) in c.ops().iter().enumerate() {
        if let Operation::SelectiveMeasure { controller, .. } = op {
            let src = controller_source(c.ops(), index, controller).expect("validated circuit");
            let wire = w.wire_of[controller];
            let reused = lifetimes.iter().any(|l| {
                l.qubit != *controller && w.wire_of.get(&l.qubit) == Some(&wire) && l.birth > src && l.birth < index
            });
            if reused {
                return Err(ScheduleError::AmbiguousController { index, controller: controller.clone() });
            }
        }
    }
    let by_wire = w.episodes(&lifetimes);
    let decls: Vec<QubitDecl> = by_wire
        .iter()
        .enumerate()
        .map(|(i, eps)| QubitDecl { id: wire_name(i), input: eps.first().is_some_and(|l| c.is_input(&l.qubit)) })
        .collect();
    let ops: Vec<Operation> = c.ops().iter().map(|op| op.renamed(name)).collect();
    let outputs: Vec<QubitId> = c.outputs().iter().map(name).collect();
    Ok(Circuit::with_validation(decls, ops, outputs, Validation::Episodic)?)
}

/// How an episode starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EpisodeStart {
    Input,
    Init(InitState),
}

/// How an episode ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EpisodeEnd {
    Output,
    Measure(Basis),
    /// Selective measurement; the basis is decided at run time.
    Selective {
        if_zero: Basis,
        if_one: Basis,
    },
}

/// One qubit's stay on a wire, with its boundary types.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub qubit: QubitId,
    pub wire: usize,
    pub birth: usize,
    pub death: usize,
    pub start: EpisodeStart,
    pub end: EpisodeEnd,
}

/// A scheduled circuit: the ICM ops plus per-wire episodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub lifetimes: Vec<Lifetime>,
    pub assignment: WireAssignment,
    pub episodes: Vec<Episode>,
    pub op_count: usize,
}

pub fn schedule(c: &Circuit) -> Result<Schedule, ScheduleError> {
    let lifetimes = compute_lifetimes(c)?;
    let assignment = assign_wires(&lifetimes);
    assignment.check(&lifetimes)?;
    let mut episodes = Vec::with_capacity(lifetimes.len());
    for l in &lifetimes {
        let start = match c.ops().get(l.birth) {
            Some(Operation::Init { qubit, state }) if *qubit == l.qubit => EpisodeStart::Init(*state),
            _ => EpisodeStart::Input,
        };
        let end = match c.ops().get(l.death) {
            Some(Operation::Measure { qubit, basis }) if *qubit == l.qubit => EpisodeEnd::Measure(*basis),
            Some(Operation::SelectiveMeasure { qubit, basis_if_zero, basis_if_one, .. }) if *qubit == l.qubit => {
                EpisodeEnd::Selective { if_zero: *basis_if_zero, if_one: *basis_if_one }
            }
            _ => EpisodeEnd::Output,
        };
        episodes.push(Episode {
            qubit: l.qubit.clone(),
            wire: assignment.wire_of[&l.qubit],
            birth: l.birth,
            death: l.death,
            start,
            end,
        });
    }
    episodes.sort_by_key(|e| (e.wire, e.birth));
    Ok(Schedule { lifetimes, assignment, episodes, op_count: c.ops().len() })
}
