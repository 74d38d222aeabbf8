//! Dense state-vector simulator used as ground truth for every equivalence
//! check in the crate.
//!
//! Conventions:
//! * position `k` in [`StateVector::qubit_order`] is bit `k` of the amplitude
//!   index (little-endian);
//! * `Rz(θ) = diag(1, e^{iθ})`, `Rx(θ) = cos(θ/2)·I − i·sin(θ/2)·X`;
//! * outcome bit 0 projects onto the +1 eigenstate (`|0⟩` for Z, `|+⟩` for X);
//! * measured qubits are removed from the state after projection, so a
//!   branch state only spans the qubits still alive.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Axis, Basis, Circuit, GateKind, InitState, Operation, QubitId};

/// Hard cap on simultaneously live qubits.
pub const MAX_QUBITS: usize = 20;
/// Tolerance for algebraic identities (norms, involutions).
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Tolerance for branch probabilities and fidelities.
pub const BRANCH_TOL: f64 = 1e-10;
/// Conditional probabilities below this are treated as exact zeros.
const PRUNE: f64 = 1e-14;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub type Amp = Complex64;
pub type Matrix2 = [[Amp; 2]; 2];

#[derive(Clone, Debug, PartialEq, Error)]
pub enum OracleError {
    #[error("unknown qubit `{0}`")]
    UnknownQubit(QubitId),
    #[error("qubit `{0}` already present in the state")]
    DuplicateQubit(QubitId),
    #[error("{requested} live qubits exceed the oracle cap of {cap}")]
    CapacityExceeded { requested: usize, cap: usize },
    #[error("dimension mismatch: {0} vs {1} qubits")]
    DimensionMismatch(usize, usize),
    #[error("every measurement branch has zero probability")]
    ZeroProbabilityOnly,
    #[error("no state supplied for circuit input `{0}`")]
    MissingInput(QubitId),
    #[error("operation is not unitary: {0}")]
    NotUnitary(String),
}

fn c(re: f64, im: f64) -> Amp {
    Complex64::new(re, im)
}

/// Single-qubit amplitudes for an initialization kind.
pub fn init_amplitudes(kind: InitState) -> [Amp; 2] {
    let h = FRAC_1_SQRT_2;
    match kind {
        InitState::Zero => [c(1.0, 0.0), c(0.0, 0.0)],
        InitState::Plus => [c(h, 0.0), c(h, 0.0)],
        InitState::Y => [c(h, 0.0), c(0.0, h)],
        InitState::A => [c(h, 0.0), Complex64::from_polar(h, std::f64::consts::FRAC_PI_4)],
    }
}

pub fn rz_matrix(theta: f64) -> Matrix2 {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), Complex64::from_polar(1.0, theta)]]
}

pub fn rx_matrix(theta: f64) -> Matrix2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
}

/// Matrices of the named gates, written out directly rather than via their
/// rotation decompositions.
pub fn gate_matrix(kind: GateKind) -> Matrix2 {
    let h = FRAC_1_SQRT_2;
    match kind {
        GateKind::H => [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]],
        GateKind::S => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]],
        GateKind::V => [[c(h, 0.0), c(0.0, -h)], [c(0.0, -h), c(h, 0.0)]],
        GateKind::T => rz_matrix(std::f64::consts::FRAC_PI_4),
    }
}

/// Pauli operator used for frame corrections. `XZ` means apply Z then X.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, serde::Deserialize)]
pub enum Pauli {
    I,
    X,
    Z,
    XZ,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Z, Pauli::XZ];

    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (false, true) => Pauli::Z,
            (true, true) => Pauli::XZ,
        }
    }

    pub fn has_x(self) -> bool {
        matches!(self, Pauli::X | Pauli::XZ)
    }

    pub fn has_z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::XZ)
    }

    /// Product up to phase.
    pub fn compose(self, other: Pauli) -> Pauli {
        Pauli::from_bits(self.has_x() ^ other.has_x(), self.has_z() ^ other.has_z())
    }

    pub fn matrix(self) -> Matrix2 {
        let (o, l) = (c(0.0, 0.0), c(1.0, 0.0));
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Z => [[l, o], [o, -l]],
            Pauli::XZ => [[o, -l], [l, o]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateVector {
    amplitudes: Vec<Amp>,
    qubit_order: Vec<QubitId>,
}

impl Default for StateVector {
    fn default() -> Self {
        Self::scalar()
    }
}

impl StateVector {
    /// Zero-qubit state with amplitude 1.
    pub fn scalar() -> Self {
        StateVector { amplitudes: vec![c(1.0, 0.0)], qubit_order: Vec::new() }
    }

    pub fn single(qubit: QubitId, amps: [Amp; 2]) -> Self {
        StateVector { amplitudes: amps.to_vec(), qubit_order: vec![qubit] }
    }

    pub fn init_state(qubit: QubitId, kind: InitState) -> Self {
        Self::single(qubit, init_amplitudes(kind))
    }

    /// Builds a state from raw amplitudes; the length must be `2^order.len()`.
    pub fn from_amplitudes(order: Vec<QubitId>, amplitudes: Vec<Amp>) -> Result<Self, OracleError> {
        if order.len() > MAX_QUBITS {
            return Err(OracleError::CapacityExceeded { requested: order.len(), cap: MAX_QUBITS });
        }
        if amplitudes.len() != 1 << order.len() {
            return Err(OracleError::DimensionMismatch(order.len(), amplitudes.len().trailing_zeros() as usize));
        }
        Ok(StateVector { amplitudes, qubit_order: order })
    }

    /// Haar-random single-qubit state.
    pub fn random_single<R: Rng + ?Sized>(qubit: QubitId, rng: &mut R) -> Self {
        let mut v = [0.0f64; 4];
        for x in v.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        Self::single(qubit, [c(v[0] / n, v[1] / n), c(v[2] / n, v[3] / n)])
    }

    pub fn amplitudes(&self) -> &[Amp] {
        &self.amplitudes
    }

    pub fn qubit_order(&self) -> &[QubitId] {
        &self.qubit_order
    }

    pub fn num_qubits(&self) -> usize {
        self.qubit_order.len()
    }

    pub fn position(&self, q: &QubitId) -> Result<usize, OracleError> {
        self.qubit_order.iter().position(|x| x == q).ok_or_else(|| OracleError::UnknownQubit(q.clone()))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Tensor product; `other`'s qubits take the higher bit positions.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector, OracleError> {
        let n = self.num_qubits() + other.num_qubits();
        if n > MAX_QUBITS {
            return Err(OracleError::CapacityExceeded { requested: n, cap: MAX_QUBITS });
        }
        if let Some(q) = other.qubit_order.iter().find(|q| self.qubit_order.contains(q)) {
            return Err(OracleError::DuplicateQubit(q.clone()));
        }
        let mut amplitudes = Vec::with_capacity(1 << n);
        for hi in &other.amplitudes {
            for lo in &self.amplitudes {
                amplitudes.push(lo * hi);
            }
        }
        let mut qubit_order = self.qubit_order.clone();
        qubit_order.extend(other.qubit_order.iter().cloned());
        Ok(StateVector { amplitudes, qubit_order })
    }

    pub fn push_qubit(&mut self, q: QubitId, amps: [Amp; 2]) -> Result<(), OracleError> {
        *self = self.tensor(&StateVector::single(q, amps))?;
        Ok(())
    }

    pub fn apply_matrix(&mut self, q: &QubitId, m: &Matrix2) -> Result<(), OracleError> {
        let bit = 1usize << self.position(q)?;
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | bit]);
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    pub fn apply_rotation(&mut self, axis: Axis, theta: f64, q: &QubitId) -> Result<(), OracleError> {
        let m = match axis {
            Axis::Z => rz_matrix(theta),
            Axis::X => rx_matrix(theta),
        };
        self.apply_matrix(q, &m)
    }

    pub fn apply_cnot(&mut self, control: &QubitId, target: &QubitId) -> Result<(), OracleError> {
        let cb = 1usize << self.position(control)?;
        let tb = 1usize << self.position(target)?;
        for i in 0..self.amplitudes.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amplitudes.swap(i, i | tb);
            }
        }
        Ok(())
    }

    pub fn apply_pauli(&mut self, p: Pauli, q: &QubitId) -> Result<(), OracleError> {
        if p == Pauli::I {
            self.position(q)?;
            return Ok(());
        }
        self.apply_matrix(q, &p.matrix())
    }

    /// Applies a unitary operation (named gate, rotation or CNOT).
    pub fn apply(&mut self, op: &Operation) -> Result<(), OracleError> {
        match op {
            Operation::Gate { kind, qubit } => self.apply_matrix(qubit, &gate_matrix(*kind)),
            Operation::Rotation { axis, angle, qubit } => self.apply_rotation(*axis, angle.radians(), qubit),
            Operation::Cnot { control, target } => self.apply_cnot(control, target),
            other => Err(OracleError::NotUnitary(format!("{other:?}"))),
        }
    }

    /// Projects `q` onto the outcome `bit` of `basis` and removes it.
    /// Returns the outcome probability and the renormalized remaining state
    /// (`None` when the probability is numerically zero).
    pub fn project(&self, q: &QubitId, basis: Basis, bit: u8) -> Result<(f64, Option<StateVector>), OracleError> {
        let k = self.position(q)?;
        let h = FRAC_1_SQRT_2;
        let v: [Amp; 2] = match (basis, bit) {
            (Basis::Z, 0) => [c(1.0, 0.0), c(0.0, 0.0)],
            (Basis::Z, _) => [c(0.0, 0.0), c(1.0, 0.0)],
            (Basis::X, 0) => [c(h, 0.0), c(h, 0.0)],
            (Basis::X, _) => [c(h, 0.0), c(-h, 0.0)],
        };
        let low_mask = (1usize << k) - 1;
        let half = self.amplitudes.len() / 2;
        let mut out = Vec::with_capacity(half);
        for j in 0..half {
            let i0 = (j & low_mask) | ((j & !low_mask) << 1);
            let i1 = i0 | (1 << k);
            out.push(v[0].conj() * self.amplitudes[i0] + v[1].conj() * self.amplitudes[i1]);
        }
        let p: f64 = out.iter().map(|a| a.norm_sqr()).sum();
        let p = p / self.norm_sqr();
        if p < PRUNE {
            return Ok((p, None));
        }
        let scale = 1.0 / out.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in out.iter_mut() {
            *a *= scale;
        }
        let mut qubit_order = self.qubit_order.clone();
        qubit_order.remove(k);
        Ok((p, Some(StateVector { amplitudes: out, qubit_order })))
    }

    /// Same state with qubits permuted into `order` (a permutation of the
    /// current order).
    pub fn reordered(&self, order: &[QubitId]) -> Result<StateVector, OracleError> {
        if order.len() != self.num_qubits() {
            return Err(OracleError::DimensionMismatch(self.num_qubits(), order.len()));
        }
        let src: Vec<usize> = order.iter().map(|q| self.position(q)).collect::<Result<_, _>>()?;
        let mut amplitudes = vec![c(0.0, 0.0); self.amplitudes.len()];
        for (i, a) in amplitudes.iter_mut().enumerate() {
            let mut j = 0;
            for (new_pos, &old_pos) in src.iter().enumerate() {
                if i >> new_pos & 1 == 1 {
                    j |= 1 << old_pos;
                }
            }
            *a = self.amplitudes[j];
        }
        Ok(StateVector { amplitudes, qubit_order: order.to_vec() })
    }

    /// Renames qubits in place via `f`.
    pub fn renamed(&self, f: impl Fn(&QubitId) -> QubitId) -> StateVector {
        StateVector { amplitudes: self.amplitudes.clone(), qubit_order: self.qubit_order.iter().map(f).collect() }
    }
}

/// ⟨a|b⟩ over amplitude positions.
pub fn inner(a: &StateVector, b: &StateVector) -> Result<Amp, OracleError> {
    if a.num_qubits() != b.num_qubits() {
        return Err(OracleError::DimensionMismatch(a.num_qubits(), b.num_qubits()));
    }
    Ok(a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.conj() * y).sum())
}

/// `|⟨a|b⟩|` for normalized states.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64, OracleError> {
    Ok(inner(a, b)?.norm())
}

pub fn equal_up_to_phase(a: &StateVector, b: &StateVector, tol: f64) -> Result<bool, OracleError> {
    Ok(fidelity(a, b)? >= 1.0 - tol)
}

/// One recorded measurement outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Outcome {
    pub index: usize,
    pub qubit: QubitId,
    pub basis: Basis,
    pub bit: u8,
}

#[derive(Clone, Debug, Serialize)]
pub struct Branch {
    /// In op order.
    pub outcomes: Vec<Outcome>,
    pub probability: f64,
    pub state: StateVector,
}

impl Branch {
    /// Latest recorded bit for `q`.
    pub fn outcome_of(&self, q: &QubitId) -> Option<u8> {
        latest_bit(&self.outcomes, q)
    }

    /// Outcome bits as a string in op order, e.g. `"01101"`.
    pub fn key(&self) -> String {
        self.outcomes.iter().map(|o| if o.bit == 1 { '1' } else { '0' }).collect()
    }
}

pub fn latest_bit(outcomes: &[Outcome], q: &QubitId) -> Option<u8> {
    outcomes.iter().rev().find(|o| &o.qubit == q).map(|o| o.bit)
}

/// Classical side-channel of a branch walk. The default methods give the
/// plain circuit semantics: bases come straight from the ops, selective
/// bases use the recorded controller bit, and raw outcomes are recorded.
pub trait Feedforward: Clone {
    /// Called before op `index` (and once with `index == ops.len()` at the
    /// end); may mutate the state to apply inline corrections.
    fn before_op(&mut self, _index: usize, _state: &mut StateVector, _outcomes: &[Outcome]) -> Result<(), OracleError> {
        Ok(())
    }

    /// Called after a unitary op or an init has been applied to the state.
    fn after_op(&mut self, _index: usize, _op: &Operation) {}

    fn basis(&self, _index: usize, op: &Operation, outcomes: &[Outcome]) -> Basis {
        match op {
            Operation::Measure { basis, .. } => *basis,
            Operation::SelectiveMeasure { controller, basis_if_zero, basis_if_one, .. } => {
                match latest_bit(outcomes, controller) {
                    Some(1) => *basis_if_one,
                    _ => *basis_if_zero,
                }
            }
            _ => unreachable!("basis requested for a non-measurement"),
        }
    }

    /// Converts a raw outcome into the recorded bit.
    fn record(&mut self, _index: usize, _qubit: &QubitId, _basis: Basis, raw: u8) -> u8 {
        raw
    }

    /// Called once per completed branch.
    fn finish(&mut self, _state: &mut StateVector, _outcomes: &[Outcome]) -> Result<(), OracleError> {
        Ok(())
    }
}

/// Plain circuit semantics.
#[derive(Clone, Copy, Debug, Default)]
pub struct Plain;

impl Feedforward for Plain {}

/// Tensor product of the supplied input states in declaration order.
pub fn input_state(c: &Circuit, inputs: &BTreeMap<QubitId, StateVector>) -> Result<StateVector, OracleError> {
    let mut state = StateVector::scalar();
    for q in c.inputs() {
        let s = inputs.get(q).ok_or_else(|| OracleError::MissingInput(q.clone()))?;
        if s.qubit_order() == [q.clone()] {
            state = state.tensor(s)?;
        } else {
            state = state.tensor(&s.renamed(|_| q.clone()))?;
        }
    }
    Ok(state)
}

/// Depth-first enumeration of every measurement branch with nonzero
/// probability under plain circuit semantics.
pub fn measure_all_branches(c: &Circuit, inputs: &BTreeMap<QubitId, StateVector>) -> Result<Vec<Branch>, OracleError> {
    enumerate_branches(c.ops(), input_state(c, inputs)?, Plain)
}

/// Branch enumeration from an explicit initial state with custom
/// feed-forward.
pub fn enumerate_branches<F: Feedforward>(
    ops: &[Operation],
    initial: StateVector,
    hooks: F,
) -> Result<Vec<Branch>, OracleError> {
    let mut out = Vec::new();
    for_each_branch(ops, initial, hooks, |b| {
        out.push(b);
        Ok(())
    })?;
    Ok(out)
}

/// Depth-first walk handing each completed branch to `visit` without
/// collecting them. Returns the number of branches visited.
pub fn for_each_branch<F: Feedforward>(
    ops: &[Operation],
    initial: StateVector,
    hooks: F,
    mut visit: impl FnMut(Branch) -> Result<(), OracleError>,
) -> Result<usize, OracleError> {
    let mut count = 0usize;
    walk(ops, 0, initial, Vec::new(), 1.0, hooks, &mut |b| {
        count += 1;
        visit(b)
    })?;
    if count == 0 {
        return Err(OracleError::ZeroProbabilityOnly);
    }
    Ok(count)
}

/// One branch drawn with Born-rule probabilities.
pub fn sample_branch<F: Feedforward, R: Rng + ?Sized>(
    ops: &[Operation],
    initial: StateVector,
    mut hooks: F,
    rng: &mut R,
) -> Result<Branch, OracleError> {
    let mut state = initial;
    let mut outcomes = Vec::new();
    let mut prob = 1.0;
    for (index, op) in ops.iter().enumerate() {
        hooks.before_op(index, &mut state, &outcomes)?;
        match op {
            Operation::Init { qubit, state: kind } => state.push_qubit(qubit.clone(), init_amplitudes(*kind))?,
            Operation::Measure { qubit, .. } | Operation::SelectiveMeasure { qubit, .. } => {
                let basis = hooks.basis(index, op, &outcomes);
                let (p0, s0) = state.project(qubit, basis, 0)?;
                let (p1, s1) = state.project(qubit, basis, 1)?;
                let (raw, p, next) = match (s0, s1) {
                    (Some(s0), Some(s1)) => {
                        if rng.random::<f64>() * (p0 + p1) < p0 {
                            (0, p0, s0)
                        } else {
                            (1, p1, s1)
                        }
                    }
                    (Some(s0), None) => (0, p0, s0),
                    (None, Some(s1)) => (1, p1, s1),
                    (None, None) => return Err(OracleError::ZeroProbabilityOnly),
                };
                let bit = hooks.record(index, qubit, basis, raw);
                outcomes.push(Outcome { index, qubit: qubit.clone(), basis, bit });
                prob *= p;
                state = next;
                continue;
            }
            unitary => state.apply(unitary)?,
        }
        hooks.after_op(index, op);
    }
    hooks.before_op(ops.len(), &mut state, &outcomes)?;
    hooks.finish(&mut state, &outcomes)?;
    Ok(Branch { outcomes, probability: prob, state })
}

type Visit<'v> = dyn FnMut(Branch) -> Result<(), OracleError> + 'v;

fn walk<F: Feedforward>(
    ops: &[Operation],
    mut index: usize,
    mut state: StateVector,
    mut outcomes: Vec<Outcome>,
    prob: f64,
    mut hooks: F,
    out: &mut Visit<'_>,
) -> Result<(), OracleError> {
    while index < ops.len() {
        hooks.before_op(index, &mut state, &outcomes)?;
        let op = &ops[index];
        match op {
            Operation::Init { qubit, state: kind } => {
                state.push_qubit(qubit.clone(), init_amplitudes(*kind))?;
            }
            Operation::Measure { qubit, .. } | Operation::SelectiveMeasure { qubit, .. } => {
                let basis = hooks.basis(index, op, &outcomes);
                for raw in [0u8, 1u8] {
                    let (p, next) = state.project(qubit, basis, raw)?;
                    let Some(next) = next else { continue };
                    let mut h = hooks.clone();
                    let bit = h.record(index, qubit, basis, raw);
                    let mut o = outcomes.clone();
                    o.push(Outcome { index, qubit: qubit.clone(), basis, bit });
                    walk(ops, index + 1, next, o, prob * p, h, out)?;
                }
                return Ok(());
            }
            unitary => state.apply(unitary)?,
        }
        hooks.after_op(index, op);
        index += 1;
    }
    hooks.before_op(ops.len(), &mut state, &outcomes)?;
    hooks.finish(&mut state, &outcomes)?;
    out(Branch { outcomes: std::mem::take(&mut outcomes), probability: prob, state })
}

/// Final state of a measurement-free circuit.
pub fn run_unitary(c: &Circuit, inputs: &BTreeMap<QubitId, StateVector>) -> Result<StateVector, OracleError> {
    let mut branches = measure_all_branches(c, inputs)?;
    if branches.len() != 1 || !branches[0].outcomes.is_empty() {
        return Err(OracleError::NotUnitary("circuit contains measurements".into()));
    }
    Ok(branches.remove(0).state)
}
