//! Teleportation gadgets that realize single-qubit rotations with only
//! initializations, CNOTs and measurements.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::circuit::{Axis, Basis, Circuit, InitState, Operation, QubitDecl, QubitId};
use crate::oracle::{
    enumerate_branches, equal_up_to_phase, input_state, rx_matrix, rz_matrix, OracleError, Pauli, Plain, StateVector,
    BRANCH_TOL,
};

/// Which rotation a gadget instance realizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GadgetKind {
    /// Rz(π/2)
    S,
    /// Rz(−π/2)
    Sdg,
    /// Rx(π/2)
    V,
    /// Rx(−π/2)
    Vdg,
    /// Rz(π/4)
    T,
    /// Rz(−π/4)
    Tdg,
    /// Rx(π): frame update only.
    PauliX,
    /// Rz(π): frame update only.
    PauliZ,
}

impl GadgetKind {
    pub fn rotation(self) -> (Axis, f64) {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
        match self {
            GadgetKind::S => (Axis::Z, FRAC_PI_2),
            GadgetKind::Sdg => (Axis::Z, -FRAC_PI_2),
            GadgetKind::V => (Axis::X, FRAC_PI_2),
            GadgetKind::Vdg => (Axis::X, -FRAC_PI_2),
            GadgetKind::T => (Axis::Z, FRAC_PI_4),
            GadgetKind::Tdg => (Axis::Z, -FRAC_PI_4),
            GadgetKind::PauliX => (Axis::X, PI),
            GadgetKind::PauliZ => (Axis::Z, PI),
        }
    }

    pub fn ancilla_count(self) -> usize {
        match self {
            GadgetKind::S | GadgetKind::Sdg | GadgetKind::V | GadgetKind::Vdg => 1,
            GadgetKind::T | GadgetKind::Tdg => 5,
            GadgetKind::PauliX | GadgetKind::PauliZ => 0,
        }
    }

    /// Tracked Pauli per outcome vector, indexed by `Σ bit_k << k` over
    /// [`GadgetExpansion::correction`]'s measured qubits.
    pub fn correction_table(self) -> &'static [Pauli] {
        match self {
            // outcome 0 realizes S, outcome 1 realizes S† = Z·S
            GadgetKind::S => &[Pauli::I, Pauli::Z],
            GadgetKind::Sdg => &[Pauli::Z, Pauli::I],
            // outcome 0 realizes V†, outcome 1 realizes V
            GadgetKind::V => &[Pauli::X, Pauli::I],
            GadgetKind::Vdg => &[Pauli::I, Pauli::X],
            GadgetKind::T => &t_tables().t,
            GadgetKind::Tdg => &t_tables().tdg,
            GadgetKind::PauliX => &[Pauli::X],
            GadgetKind::PauliZ => &[Pauli::Z],
        }
    }
}

/// Outcome-indexed Pauli correction for one gadget instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionRule {
    /// Measured qubits; bit `k` of the table index is the outcome of `measured[k]`.
    pub measured: Vec<QubitId>,
    pub table: Vec<Pauli>,
}

impl CorrectionRule {
    pub fn lookup(&self, bits: &[u8]) -> Pauli {
        let idx = bits.iter().enumerate().fold(0usize, |acc, (k, b)| acc | ((*b as usize) << k));
        self.table[idx]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetExpansion {
    pub kind: GadgetKind,
    pub new_ops: Vec<Operation>,
    pub ancillas: Vec<QubitId>,
    pub output_wire: QubitId,
    pub correction: CorrectionRule,
}

/// T-gadget selective bases for ancilla rows 1-4: `(if_zero, if_one)`.
/// Outcome 0 of the data `M_Z` leaves `T|ψ⟩` on the `|A⟩` row, so the `zero`
/// column teleports it unchanged; the `one` column also applies the S fix-up.
const T_SELECTIVE: [(Basis, Basis); 4] =
    [(Basis::X, Basis::Z), (Basis::Z, Basis::X), (Basis::Z, Basis::X), (Basis::X, Basis::Z)];

/// Init states of the five T-gadget ancillas in row order.
pub const T_ANCILLA_STATES: [InitState; 5] =
    [InitState::A, InitState::Zero, InitState::Y, InitState::Plus, InitState::Zero];

/// Builds the op list for `kind` acting on `data` with pre-allocated
/// ancilla names. Frame-only kinds take no ancillas and emit nothing.
pub fn build_gadget(kind: GadgetKind, data: &QubitId, ancillas: &[QubitId]) -> GadgetExpansion {
    let (new_ops, output_wire, measured) = wiring(kind, data, ancillas);
    let table = kind.correction_table().to_vec();
    GadgetExpansion {
        kind,
        new_ops,
        ancillas: ancillas.to_vec(),
        output_wire,
        correction: CorrectionRule { measured, table },
    }
}

/// Ops, output wire and table-indexing measurements of a gadget.
fn wiring(kind: GadgetKind, data: &QubitId, ancillas: &[QubitId]) -> (Vec<Operation>, QubitId, Vec<QubitId>) {
    assert_eq!(ancillas.len(), kind.ancilla_count(), "wrong ancilla count for {kind:?}");
    match kind {
        GadgetKind::S | GadgetKind::Sdg => {
            let a = &ancillas[0];
            let ops = vec![
                Operation::Init { qubit: a.clone(), state: InitState::Y },
                Operation::Cnot { control: data.clone(), target: a.clone() },
                Operation::Measure { qubit: a.clone(), basis: Basis::Z },
            ];
            (ops, data.clone(), vec![a.clone()])
        }
        GadgetKind::V | GadgetKind::Vdg => {
            let a = &ancillas[0];
            let ops = vec![
                Operation::Init { qubit: a.clone(), state: InitState::Y },
                Operation::Cnot { control: a.clone(), target: data.clone() },
                Operation::Measure { qubit: a.clone(), basis: Basis::X },
            ];
            (ops, data.clone(), vec![a.clone()])
        }
        GadgetKind::T | GadgetKind::Tdg => {
            let r = ancillas;
            let mut ops: Vec<Operation> =
                r.iter().zip(T_ANCILLA_STATES).map(|(q, state)| Operation::Init { qubit: q.clone(), state }).collect();
            let cnot = |c: &QubitId, t: &QubitId| Operation::Cnot { control: c.clone(), target: t.clone() };
            ops.extend([
                cnot(&r[0], data),
                cnot(&r[0], &r[1]),
                cnot(&r[2], &r[0]),
                cnot(&r[3], &r[1]),
                cnot(&r[2], &r[4]),
                cnot(&r[3], &r[4]),
            ]);
            ops.push(Operation::Measure { qubit: data.clone(), basis: Basis::Z });
            for (q, (zero, one)) in r[..4].iter().zip(T_SELECTIVE) {
                let (basis_if_zero, basis_if_one) = if kind == GadgetKind::T { (zero, one) } else { (one, zero) };
                ops.push(Operation::SelectiveMeasure {
                    qubit: q.clone(),
                    controller: data.clone(),
                    basis_if_zero,
                    basis_if_one,
                });
            }
            let mut measured = vec![data.clone()];
            measured.extend(r[..4].iter().cloned());
            (ops, r[4].clone(), measured)
        }
        GadgetKind::PauliX | GadgetKind::PauliZ => (Vec::new(), data.clone(), Vec::new()),
    }
}

/// Stand-alone gadget on an input qubit `d`, ancillas named `a1`, `a2`, ...
#[derive(Clone, Debug)]
pub struct GadgetCircuit {
    pub circuit: Circuit,
    pub output_wire: QubitId,
    /// Table-indexing measurements, bit `k` first.
    pub measured: Vec<QubitId>,
}

pub fn gadget_circuit(kind: GadgetKind) -> GadgetCircuit {
    let data = QubitId::new("d");
    let ancillas: Vec<QubitId> = (1..=kind.ancilla_count()).map(|i| QubitId::new(format!("a{i}"))).collect();
    let (ops, output_wire, measured) = wiring(kind, &data, &ancillas);
    let mut decls = vec![QubitDecl { id: data, input: true }];
    decls.extend(ancillas.iter().map(|a| QubitDecl { id: a.clone(), input: false }));
    let circuit = Circuit::new(decls, ops, vec![output_wire.clone()]).expect("gadget circuits are well formed");
    GadgetCircuit { circuit, output_wire, measured }
}

/// Branch-by-branch Pauli correction of a gadget, solved with the oracle on
/// each of `inputs`. Fails if any branch is not Pauli-equivalent to the
/// target rotation, or if two inputs disagree.
pub fn derive_correction_table(kind: GadgetKind, inputs: &[StateVector]) -> Result<Vec<Pauli>, TableError> {
    let GadgetCircuit { circuit, output_wire, measured } = gadget_circuit(kind);
    let (axis, theta) = kind.rotation();
    let m = match axis {
        Axis::Z => rz_matrix(theta),
        Axis::X => rx_matrix(theta),
    };
    let width = measured.len();
    let mut table: Vec<Option<Pauli>> = vec![None; 1 << width];
    let data = QubitId::new("d");
    for psi in inputs {
        let mut expected = psi.renamed(|_| data.clone());
        expected.apply_matrix(&data, &m)?;
        let initial = input_state(&circuit, &BTreeMap::from([(data.clone(), psi.clone())]))?;
        for branch in enumerate_branches(circuit.ops(), initial, Plain)? {
            let bits: Vec<u8> =
                measured.iter().map(|q| branch.outcome_of(q).expect("every gadget measurement is recorded")).collect();
            let idx = bits.iter().enumerate().fold(0usize, |acc, (k, b)| acc | ((*b as usize) << k));
            let target = expected.renamed(|_| output_wire.clone());
            let mut found = None;
            for p in Pauli::ALL {
                let mut s = branch.state.clone();
                s.apply_pauli(p, &output_wire)?;
                if equal_up_to_phase(&s, &target, BRANCH_TOL)? {
                    found = Some(p);
                    break;
                }
            }
            let p = found.ok_or(TableError::NoPauli { kind, branch: idx })?;
            match table[idx] {
                Some(prev) if prev != p => return Err(TableError::Inconsistent { kind, branch: idx }),
                _ => table[idx] = Some(p),
            }
        }
    }
    table.into_iter().enumerate().map(|(i, p)| p.ok_or(TableError::Unreached { kind, branch: i })).collect()
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TableError {
    #[error("{kind:?} branch {branch}: no Pauli maps the branch state onto the target rotation")]
    NoPauli { kind: GadgetKind, branch: usize },
    #[error("{kind:?} branch {branch}: different inputs need different Paulis")]
    Inconsistent { kind: GadgetKind, branch: usize },
    #[error("{kind:?} branch {branch}: never reached")]
    Unreached { kind: GadgetKind, branch: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// On-disk form of the T-gadget branch tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTableFixture {
    pub version: u32,
    /// Documentation of the index layout.
    pub index: String,
    pub t: Vec<Pauli>,
    pub tdg: Vec<Pauli>,
}

pub const T_TABLE_FIXTURE: &str = include_str!("../../fixtures/t_gadget_table.json");

fn t_tables() -> &'static TTableFixture {
    static TABLES: OnceLock<TTableFixture> = OnceLock::new();
    TABLES.get_or_init(|| {
        let f: TTableFixture = serde_json::from_str(T_TABLE_FIXTURE).expect("t_gadget_table.json parses");
        assert_eq!(f.t.len(), 32);
        assert_eq!(f.tdg.len(), 32);
        f
    })
}
