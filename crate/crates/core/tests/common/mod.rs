#![allow(dead_code)]

use std::collections::BTreeMap;

use defect_forge::circuit::{Angle, Axis, Basis, Circuit, GateKind, InitState, Operation, QubitDecl, QubitId};
use defect_forge::icm::{FrameCorrection, GadgetKind};
use defect_forge::oracle::{equal_up_to_phase, Branch, Pauli, StateVector, BRANCH_TOL};
use rand::seq::IndexedRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    Live,
    Measured,
}

struct Builder {
    decls: Vec<QubitDecl>,
    phase: Vec<Phase>,
    ops: Vec<Operation>,
    plain_measured: Vec<usize>,
}

impl Builder {
    fn q(&self, i: usize) -> QubitId {
        self.decls[i].id.clone()
    }

    fn live(&self) -> Vec<usize> {
        (0..self.phase.len()).filter(|&i| self.phase[i] == Phase::Live).collect()
    }

    fn finish(self, rng: &mut impl Rng) -> Circuit {
        let mut ops = self.ops;
        let mut outputs = Vec::new();
        for (i, p) in self.phase.iter().enumerate() {
            if *p == Phase::Live {
                if rng.random_bool(0.5) {
                    outputs.push(self.decls[i].id.clone());
                } else {
                    let basis = if rng.random_bool(0.5) { Basis::Z } else { Basis::X };
                    ops.push(Operation::Measure { qubit: self.decls[i].id.clone(), basis });
                }
            }
        }
        Circuit::new(self.decls, ops, outputs).expect("generator builds valid circuits")
    }
}

fn random_state(rng: &mut impl Rng) -> InitState {
    *[InitState::Zero, InitState::Plus, InitState::A, InitState::Y].choose(rng).unwrap()
}

fn random_basis(rng: &mut impl Rng) -> Basis {
    if rng.random_bool(0.5) {
        Basis::Z
    } else {
        Basis::X
    }
}

/// Random valid ICM circuit over at most `max_qubits` qubits with about
/// `steps` operations. Live qubits left at the end become outputs or are
/// measured.
pub fn random_icm(rng: &mut impl Rng, max_qubits: usize, steps: usize) -> Circuit {
    let mut b = Builder { decls: Vec::new(), phase: Vec::new(), ops: Vec::new(), plain_measured: Vec::new() };
    for _ in 0..steps {
        let live = b.live();
        let roll = rng.random_range(0..10);
        if (roll < 3 || live.is_empty()) && b.decls.len() < max_qubits {
            let id = QubitId::new(format!("q{}", b.decls.len()));
            let input = rng.random_bool(0.3);
            b.decls.push(QubitDecl { id: id.clone(), input });
            b.phase.push(Phase::Live);
            if !input {
                b.ops.push(Operation::Init { qubit: id, state: random_state(rng) });
            }
        } else if roll < 7 && live.len() >= 2 {
            let pair: Vec<&usize> = live.choose_multiple(rng, 2).collect();
            b.ops.push(Operation::Cnot { control: b.q(*pair[0]), target: b.q(*pair[1]) });
        } else if !live.is_empty() {
            let i = *live.choose(rng).unwrap();
            let q = b.q(i);
            if roll >= 9 && !b.plain_measured.is_empty() {
                let c = *b.plain_measured.choose(rng).unwrap();
                b.ops.push(Operation::SelectiveMeasure {
                    qubit: q,
                    controller: b.q(c),
                    basis_if_zero: random_basis(rng),
                    basis_if_one: random_basis(rng),
                });
            } else {
                b.ops.push(Operation::Measure { qubit: q, basis: random_basis(rng) });
                b.plain_measured.push(i);
            }
            b.phase[i] = Phase::Measured;
        }
    }
    b.finish(rng)
}

/// Random Clifford+T source circuit on `n` input qubits: gates, CNOTs,
/// measurements and rotations by 0, ±π/4, ±π/2, π or 2π.
pub fn random_source(rng: &mut impl Rng, n: usize, steps: usize, allow_measure: bool) -> Circuit {
    let decls: Vec<QubitDecl> = (0..n).map(|i| QubitDecl { id: QubitId::new(format!("q{i}")), input: true }).collect();
    let mut b = Builder { phase: vec![Phase::Live; n], decls, ops: Vec::new(), plain_measured: Vec::new() };
    for _ in 0..steps {
        let live = b.live();
        if live.is_empty() {
            break;
        }
        let i = *live.choose(rng).unwrap();
        let q = b.q(i);
        match rng.random_range(0..12) {
            0 => b.ops.push(Operation::Gate { kind: GateKind::H, qubit: q }),
            1 => b.ops.push(Operation::Gate { kind: GateKind::S, qubit: q }),
            2 => b.ops.push(Operation::Gate { kind: GateKind::V, qubit: q }),
            3 | 4 => b.ops.push(Operation::Gate { kind: GateKind::T, qubit: q }),
            5..=7 => {
                let axis = if rng.random_bool(0.5) { Axis::Z } else { Axis::X };
                let num = *[-8, -4, -2, -1, 0, 1, 2, 4, 8].choose(rng).unwrap();
                b.ops.push(Operation::Rotation { axis, angle: Angle::new(num, 4), qubit: q });
            }
            8..=10 if live.len() >= 2 => {
                let other = *live.iter().filter(|&&j| j != i).collect::<Vec<_>>().choose(rng).unwrap();
                b.ops.push(Operation::Cnot { control: q, target: b.q(*other) });
            }
            11 if allow_measure => {
                b.ops.push(Operation::Measure { qubit: q, basis: random_basis(rng) });
                b.phase[i] = Phase::Measured;
            }
            _ => b.ops.push(Operation::Gate { kind: GateKind::H, qubit: q }),
        }
    }
    let outputs = b.live().into_iter().map(|i| b.q(i)).collect();
    Circuit::new(b.decls, b.ops, outputs).expect("generator builds valid circuits")
}

/// Random Pauli corrections on a circuit: each anchored just before a random
/// op, on a wire live there, indexed by up to three earlier measurements.
pub fn random_corrections(rng: &mut impl Rng, c: &Circuit, count: usize) -> Vec<FrameCorrection> {
    let ops = c.ops();
    let mut live_before: Vec<Vec<QubitId>> = Vec::with_capacity(ops.len() + 1);
    let mut live: Vec<QubitId> = c.inputs().cloned().collect();
    let mut measures: Vec<usize> = Vec::new();
    let mut measures_before = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        live_before.push(live.clone());
        measures_before.push(measures.clone());
        match op {
            Operation::Init { qubit, .. } => live.push(qubit.clone()),
            Operation::Measure { qubit, .. } | Operation::SelectiveMeasure { qubit, .. } => {
                live.retain(|q| q != qubit);
                measures.push(i);
            }
            _ => {}
        }
    }
    live_before.push(live);
    measures_before.push(measures);
    let mut out = Vec::new();
    let candidates: Vec<usize> = (0..=ops.len()).filter(|&i| !live_before[i].is_empty()).collect();
    if candidates.is_empty() {
        return out;
    }
    for n in 0..count {
        let at = *candidates.choose(rng).unwrap();
        let wire = live_before[at].choose(rng).unwrap().clone();
        let pool = &measures_before[at];
        let k = rng.random_range(0..=pool.len().min(3));
        let measured: Vec<usize> = pool.choose_multiple(rng, k).copied().collect();
        let table = (0..1usize << k).map(|_| *[Pauli::I, Pauli::X, Pauli::Z, Pauli::XZ].choose(rng).unwrap()).collect();
        let measured_qubits = measured
            .iter()
            .map(|&m| match &ops[m] {
                Operation::Measure { qubit, .. } | Operation::SelectiveMeasure { qubit, .. } => qubit.clone(),
                _ => unreachable!(),
            })
            .collect();
        out.push(FrameCorrection {
            id: format!("r{n}"),
            gadget: GadgetKind::PauliZ,
            source_op: at,
            wire,
            apply_before: at,
            measured,
            measured_qubits,
            table,
        });
    }
    out
}

/// One random single-qubit state per input of `c`.
pub fn random_inputs(rng: &mut impl RngCore, c: &Circuit) -> BTreeMap<QubitId, StateVector> {
    c.inputs().map(|q| (q.clone(), StateVector::random_single(q.clone(), rng))).collect()
}

/// Outcome key → (probability, state) for a branch set.
pub fn by_key(branches: Vec<Branch>) -> BTreeMap<String, (f64, StateVector)> {
    branches.into_iter().map(|b| (b.key(), (b.probability, b.state))).collect()
}

/// Compares two branch distributions; states are compared up to global
/// phase after reordering `b`'s qubits to `a`'s order.
pub fn same_distribution(
    a: &BTreeMap<String, (f64, StateVector)>,
    b: &BTreeMap<String, (f64, StateVector)>,
) -> Result<(), String> {
    let keys = a.keys().chain(b.keys()).collect::<std::collections::BTreeSet<_>>();
    for k in keys {
        let pa = a.get(k).map_or(0.0, |x| x.0);
        let pb = b.get(k).map_or(0.0, |x| x.0);
        if (pa - pb).abs() > BRANCH_TOL {
            return Err(format!("branch {k}: probability {pa} vs {pb}"));
        }
        if let (Some((_, sa)), Some((_, sb))) = (a.get(k), b.get(k)) {
            let sb = sb.reordered(sa.qubit_order()).map_err(|e| format!("branch {k}: {e}"))?;
            if !equal_up_to_phase(sa, &sb, BRANCH_TOL).map_err(|e| e.to_string())? {
                return Err(format!("branch {k}: states differ"));
            }
        }
    }
    Ok(())
}
