//! Expansion of normalized circuits into ICM form (initializations, CNOTs
//! and measurements only) plus the classical Pauli frame that tracks the
//! outcome-dependent corrections.

mod frame;
mod gadgets;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{reduce_angle, Angle, Axis, Circuit, CircuitError, Operation, QubitDecl, QubitId, Validation};
use crate::oracle::Pauli;

pub use frame::{propagate_frame, DeferredFrame, FrameBits, InlineCorrection, PauliFrame};
pub use gadgets::{
    build_gadget, derive_correction_table, gadget_circuit, CorrectionRule, GadgetCircuit, GadgetExpansion, GadgetKind,
    TTableFixture, TableError, T_ANCILLA_STATES, T_TABLE_FIXTURE,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum IcmError {
    #[error("op {index}: qubit `{qubit}` is not live")]
    QubitNotLive { index: usize, qubit: QubitId },
    #[error("op {index}: rotation by {angle} has no gadget")]
    UnsupportedAngle { index: usize, angle: Angle },
    #[error("op {index}: named gate found; normalize the circuit first")]
    NotNormalized { index: usize },
    #[error("expanded circuit is invalid: {0}")]
    Invalid(#[from] CircuitError),
}

/// One tracked correction, anchored in the ICM circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameCorrection {
    pub id: String,
    pub gadget: GadgetKind,
    /// Index of the rotation in the source circuit.
    pub source_op: usize,
    /// Wire whose frame receives the Pauli.
    pub wire: QubitId,
    /// The Pauli is XORed into the frame just before this ICM op index
    /// (`ops.len()` for the end of the circuit).
    pub apply_before: usize,
    /// ICM op indices of the measurements indexing `table`, bit `k` first.
    pub measured: Vec<usize>,
    pub measured_qubits: Vec<QubitId>,
    pub table: Vec<Pauli>,
}

/// Result of [`expand_all`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IcmProgram {
    pub circuit: Circuit,
    pub corrections: Vec<FrameCorrection>,
    /// Source qubit to the wire that carries it at the end.
    pub final_wire: BTreeMap<QubitId, QubitId>,
    /// `(source index, ICM index)` for every measurement copied through.
    pub measurement_map: Vec<(usize, usize)>,
}

impl IcmProgram {
    pub fn corrections_report(&self) -> CorrectionsReport {
        CorrectionsReport {
            version: 1,
            gadgets: self.corrections.iter().map(|c| (c.id.clone(), c.clone())).collect(),
            final_wire: self.final_wire.clone(),
            measurement_map: self.measurement_map.clone(),
        }
    }

    /// Rebuilds a program from a printed ICM circuit and its corrections report.
    pub fn from_parts(circuit: Circuit, report: CorrectionsReport) -> IcmProgram {
        let mut corrections: Vec<FrameCorrection> = report.gadgets.into_values().collect();
        corrections.sort_by_key(|c| (c.source_op, c.apply_before));
        IcmProgram { circuit, corrections, final_wire: report.final_wire, measurement_map: report.measurement_map }
    }
}

/// JSON form of the correction rules, keyed by gadget instance id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionsReport {
    pub version: u32,
    pub gadgets: BTreeMap<String, FrameCorrection>,
    pub final_wire: BTreeMap<QubitId, QubitId>,
    pub measurement_map: Vec<(usize, usize)>,
}

/// Hands out ancilla names `a0`, `a1`, ... skipping names already taken.
/// Reservation goes through one atomic counter so concurrent expansions
/// never collide.
#[derive(Debug, Default)]
pub struct NameAllocator {
    next: AtomicUsize,
    taken: BTreeSet<String>,
}

impl NameAllocator {
    pub fn new<'a>(taken: impl IntoIterator<Item = &'a QubitId>) -> Self {
        NameAllocator { next: AtomicUsize::new(0), taken: taken.into_iter().map(|q| q.as_str().to_string()).collect() }
    }

    pub fn fresh(&self) -> QubitId {
        loop {
            let n = self.next.fetch_add(1, Ordering::Relaxed);
            let name = format!("a{n}");
            if !self.taken.contains(&name) {
                return QubitId::new(name);
            }
        }
    }

    pub fn reserve(&self, count: usize) -> Vec<QubitId> {
        (0..count).map(|_| self.fresh()).collect()
    }
}

/// Gadget realizing a reduced rotation, as a sequence in application order.
/// `None` for angles outside the Clifford+T set.
pub fn gadgets_for(axis: Axis, angle: Angle) -> Option<Vec<GadgetKind>> {
    use GadgetKind::*;
    let r = reduce_angle(angle);
    let seq = match (axis, r.num(), r.den()) {
        (_, 0, _) => vec![],
        (Axis::Z, 1, 2) => vec![S],
        (Axis::Z, -1, 2) => vec![Sdg],
        (Axis::Z, 1, 4) => vec![T],
        (Axis::Z, -1, 4) => vec![Tdg],
        (Axis::Z, 1, 1) => vec![PauliZ],
        (Axis::X, 1, 2) => vec![V],
        (Axis::X, -1, 2) => vec![Vdg],
        (Axis::X, 1, 1) => vec![PauliX],
        // Rx(θ) = H Rz(θ) H with H = S V S
        (Axis::X, 1, 4) => vec![S, V, S, T, S, V, S],
        (Axis::X, -1, 4) => vec![S, V, S, Tdg, S, V, S],
        _ => return None,
    };
    Some(seq)
}

/// Incremental expander: tracks which wire carries each source qubit and
/// appends gadget ops to an ICM op list.
pub struct Expander<'a> {
    alloc: &'a NameAllocator,
    wire_of: BTreeMap<QubitId, QubitId>,
    live: BTreeSet<QubitId>,
    ops: Vec<Operation>,
    ancillas: Vec<QubitId>,
    corrections: Vec<FrameCorrection>,
}

impl<'a> Expander<'a> {
    pub fn new<'q>(alloc: &'a NameAllocator, inputs: impl IntoIterator<Item = &'q QubitId>) -> Self {
        let live: BTreeSet<QubitId> = inputs.into_iter().cloned().collect();
        Expander {
            alloc,
            wire_of: live.iter().map(|q| (q.clone(), q.clone())).collect(),
            live,
            ops: Vec::new(),
            ancillas: Vec::new(),
            corrections: Vec::new(),
        }
    }

    fn wire(&self, q: &QubitId) -> QubitId {
        self.wire_of.get(q).cloned().unwrap_or_else(|| q.clone())
    }

    fn require_live(&self, index: usize, q: &QubitId) -> Result<QubitId, IcmError> {
        if !self.live.contains(q) {
            return Err(IcmError::QubitNotLive { index, qubit: q.clone() });
        }
        Ok(self.wire(q))
    }

    /// Expands one gadget on source qubit `q` (source op `index`).
    pub fn expand(&mut self, index: usize, kind: GadgetKind, q: &QubitId) -> Result<GadgetExpansion, IcmError> {
        let data = self.require_live(index, q)?;
        let ancillas = self.alloc.reserve(kind.ancilla_count());
        let gx = build_gadget(kind, &data, &ancillas);
        let base = self.ops.len();
        let measured: Vec<usize> = gx
            .correction
            .measured
            .iter()
            .map(|m| {
                base + gx
                    .new_ops
                    .iter()
                    .position(|op| op.is_measurement() && op.qubits()[0] == m)
                    .expect("measured qubit is measured inside its gadget")
            })
            .collect();
        self.ops.extend(gx.new_ops.iter().cloned());
        self.ancillas.extend(ancillas);
        self.corrections.push(FrameCorrection {
            id: format!("g{}", self.corrections.len()),
            gadget: kind,
            source_op: index,
            wire: gx.output_wire.clone(),
            apply_before: self.ops.len(),
            measured,
            measured_qubits: gx.correction.measured.clone(),
            table: gx.correction.table.clone(),
        });
        self.wire_of.insert(q.clone(), gx.output_wire.clone());
        Ok(gx)
    }

    pub fn expand_s(&mut self, index: usize, q: &QubitId) -> Result<GadgetExpansion, IcmError> {
        self.expand(index, GadgetKind::S, q)
    }

    pub fn expand_v(&mut self, index: usize, q: &QubitId) -> Result<GadgetExpansion, IcmError> {
        self.expand(index, GadgetKind::V, q)
    }

    pub fn expand_t(&mut self, index: usize, q: &QubitId) -> Result<GadgetExpansion, IcmError> {
        self.expand(index, GadgetKind::T, q)
    }

    /// Copies an ICM op through with source names replaced by wires.
    /// Returns its ICM index.
    pub fn pass_through(&mut self, index: usize, op: &Operation) -> Result<usize, IcmError> {
        match op {
            Operation::Init { qubit, .. } => {
                self.live.insert(qubit.clone());
                self.wire_of.insert(qubit.clone(), qubit.clone());
            }
            _ => {
                for q in op.qubits() {
                    self.require_live(index, q)?;
                }
            }
        }
        let renamed = op.renamed(|q| self.wire(q));
        if op.is_measurement() {
            self.live.remove(op.qubits()[0]);
        }
        self.ops.push(renamed);
        Ok(self.ops.len() - 1)
    }
}

/// Expands every rotation of a normalized circuit into gadgets.
///
/// Zero-angle rotations are dropped. Rz(π) and Rx(π) emit no ops and are
/// recorded as frame-only corrections.
pub fn expand_all(c: &Circuit) -> Result<IcmProgram, IcmError> {
    let alloc = NameAllocator::new(c.qubit_ids());
    let mut ex = Expander::new(&alloc, c.inputs());
    let mut measurement_map = Vec::new();
    for (index, op) in c.ops().iter().enumerate() {
        match op {
            Operation::Gate { .. } => return Err(IcmError::NotNormalized { index }),
            Operation::Rotation { axis, angle, qubit } => {
                let seq = gadgets_for(*axis, *angle).ok_or(IcmError::UnsupportedAngle { index, angle: *angle })?;
                if seq.is_empty() {
                    ex.require_live(index, qubit)?;
                }
                for kind in seq {
                    ex.expand(index, kind, qubit)?;
                }
            }
            other => {
                let at = ex.pass_through(index, other)?;
                if other.is_measurement() {
                    measurement_map.push((index, at));
                }
            }
        }
    }
    let mut decls: Vec<QubitDecl> = c.qubits().to_vec();
    decls.extend(ex.ancillas.iter().map(|a| QubitDecl { id: a.clone(), input: false }));
    let outputs: Vec<QubitId> = c.outputs().iter().map(|o| ex.wire(o)).collect();
    let final_wire: BTreeMap<QubitId, QubitId> = c.qubit_ids().map(|q| (q.clone(), ex.wire(q))).collect();
    let circuit = Circuit::with_validation(decls, ex.ops, outputs, Validation::Strict)?;
    Ok(IcmProgram { circuit, corrections: ex.corrections, final_wire, measurement_map })
}

/// Number of T-type gadgets (T or T†) an expansion would use.
pub fn t_count(c: &Circuit) -> usize {
    c.ops()
        .iter()
        .filter_map(|op| match op {
            Operation::Rotation { axis, angle, .. } => gadgets_for(*axis, *angle),
            Operation::Gate { kind: crate::circuit::GateKind::T, .. } => Some(vec![GadgetKind::T]),
            _ => None,
        })
        .flatten()
        .filter(|k| matches!(k, GadgetKind::T | GadgetKind::Tdg))
        .count()
}

#[cfg(test)]
mod tests;
