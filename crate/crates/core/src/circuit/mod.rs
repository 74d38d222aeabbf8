//! Circuit intermediate representation shared by every compiler stage.
//!
//! A [`Circuit`] is an ordered list of [`Operation`]s over declared qubits.
//! The same type carries the Clifford+T input, the normalized rotation form,
//! the expanded ICM form, and (in [`Validation::Episodic`] mode) the
//! wire-scheduled form where one wire hosts several init..measure episodes.

mod normalize;
mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use normalize::{normalize_gates, reduce_angle, NormalizeError};
pub use parse::{parse_circuit, parse_circuit_with, ParseError, ParseErrorKind};
pub use print::print_circuit;

/// Name of a qubit (or, after wire scheduling, of a wire).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QubitId(String);

impl QubitId {
    pub fn new(name: impl Into<String>) -> Self {
        QubitId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Identifier syntax accepted by the text format.
    pub fn is_valid_name(name: &str) -> bool {
        let mut chars = name.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return false,
        }
        chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
    }
}

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<String> for QubitId {
    fn from(s: String) -> Self {
        QubitId(s)
    }
}

impl From<&str> for QubitId {
    fn from(s: &str) -> Self {
        QubitId::new(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InitState {
    Zero,
    Plus,
    A,
    Y,
}

impl InitState {
    pub const ALL: [InitState; 4] = [InitState::Zero, InitState::Plus, InitState::A, InitState::Y];

    pub fn token(self) -> &'static str {
        match self {
            InitState::Zero => "|0>",
            InitState::Plus => "|+>",
            InitState::A => "|A>",
            InitState::Y => "|Y>",
        }
    }

    /// True for the magic states that have to come out of a distillation box.
    pub fn is_distilled(self) -> bool {
        matches!(self, InitState::A | InitState::Y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn token(self) -> &'static str {
        match self {
            Basis::Z => "Z",
            Basis::X => "X",
        }
    }

    pub fn other(self) -> Basis {
        match self {
            Basis::Z => Basis::X,
            Basis::X => Basis::Z,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    S,
    V,
    T,
}

impl GateKind {
    pub fn token(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::V => "v",
            GateKind::T => "t",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Z,
}

/// Exact rotation angle `num/den · π`, kept in lowest terms with `den > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Angle {
    num: i64,
    den: i64,
}

impl Angle {
    pub const PI: Angle = Angle { num: 1, den: 1 };
    pub const HALF_PI: Angle = Angle { num: 1, den: 2 };
    pub const QUARTER_PI: Angle = Angle { num: 1, den: 4 };
    pub const ZERO: Angle = Angle { num: 0, den: 1 };

    /// Panics if `den == 0`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "angle denominator must be nonzero");
        let (mut num, mut den) = if den < 0 { (-num, -den) } else { (num, den) };
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        if g > 1 {
            num /= g;
            den /= g;
        }
        if num == 0 {
            den = 1;
        }
        Angle { num, den }
    }

    pub fn num(self) -> i64 {
        self.num
    }

    pub fn den(self) -> i64 {
        self.den
    }

    pub fn radians(self) -> f64 {
        self.num as f64 / self.den as f64 * std::f64::consts::PI
    }
}

impl std::ops::Neg for Angle {
    type Output = Angle;

    fn neg(self) -> Angle {
        Angle::new(-self.num, self.den)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}pi", self.num, self.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operation {
    Init {
        qubit: QubitId,
        state: InitState,
    },
    Gate {
        kind: GateKind,
        qubit: QubitId,
    },
    Rotation {
        axis: Axis,
        angle: Angle,
        qubit: QubitId,
    },
    Cnot {
        control: QubitId,
        target: QubitId,
    },
    Measure {
        qubit: QubitId,
        basis: Basis,
    },
    /// Measurement whose basis depends on the outcome of an earlier plain
    /// measurement of `controller`.
    SelectiveMeasure {
        qubit: QubitId,
        controller: QubitId,
        basis_if_zero: Basis,
        basis_if_one: Basis,
    },
}

impl Operation {
    /// Qubits whose quantum state the operation touches (the controller of a
    /// selective measurement is classical and not included).
    pub fn qubits(&self) -> Vec<&QubitId> {
        match self {
            Operation::Init { qubit, .. }
            | Operation::Gate { qubit, .. }
            | Operation::Rotation { qubit, .. }
            | Operation::Measure { qubit, .. }
            | Operation::SelectiveMeasure { qubit, .. } => vec![qubit],
            Operation::Cnot { control, target } => vec![control, target],
        }
    }

    pub fn is_icm(&self) -> bool {
        matches!(
            self,
            Operation::Init { .. }
                | Operation::Cnot { .. }
                | Operation::Measure { .. }
                | Operation::SelectiveMeasure { .. }
        )
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Operation::Measure { .. } | Operation::SelectiveMeasure { .. })
    }

    /// Returns a copy with every qubit name passed through `f`.
    pub fn renamed(&self, mut f: impl FnMut(&QubitId) -> QubitId) -> Operation {
        match self {
            Operation::Init { qubit, state } => Operation::Init { qubit: f(qubit), state: *state },
            Operation::Gate { kind, qubit } => Operation::Gate { kind: *kind, qubit: f(qubit) },
            Operation::Rotation { axis, angle, qubit } => {
                Operation::Rotation { axis: *axis, angle: *angle, qubit: f(qubit) }
            }
            Operation::Cnot { control, target } => Operation::Cnot { control: f(control), target: f(target) },
            Operation::Measure { qubit, basis } => Operation::Measure { qubit: f(qubit), basis: *basis },
            Operation::SelectiveMeasure { qubit, controller, basis_if_zero, basis_if_one } => {
                Operation::SelectiveMeasure {
                    qubit: f(qubit),
                    controller: f(controller),
                    basis_if_zero: *basis_if_zero,
                    basis_if_one: *basis_if_one,
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitDecl {
    pub id: QubitId,
    /// Circuit inputs carry an externally supplied state and have no `Init`.
    pub input: bool,
}

/// How strictly per-qubit op sequences are checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Validation {
    /// At most one init..measure lifetime per qubit.
    Strict,
    /// A qubit name is a wire hosting consecutive complete episodes.
    Episodic,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("qubit `{0}` declared twice")]
    DuplicateQubit(QubitId),
    #[error("op {index}: unknown qubit `{qubit}`")]
    UnknownQubit { index: usize, qubit: QubitId },
    #[error("op {index}: qubit `{qubit}` used after it was measured")]
    UseAfterMeasure { index: usize, qubit: QubitId },
    #[error("op {index}: selective measurement controller `{controller}` was not measured earlier")]
    ControllerNotMeasured { index: usize, controller: QubitId },
    #[error("op {index}: qubit `{qubit}` used before initialization")]
    UseBeforeInit { index: usize, qubit: QubitId },
    #[error("op {index}: qubit `{qubit}` initialized twice")]
    DoubleInit { index: usize, qubit: QubitId },
    #[error("op {index}: cnot control and target are both `{qubit}`")]
    CnotSelfLoop { index: usize, qubit: QubitId },
    #[error("output `{0}` is measured")]
    OutputMeasured(QubitId),
    #[error("output `{0}` is not a declared qubit")]
    UnknownOutput(QubitId),
    #[error("output `{0}` listed twice")]
    DuplicateOutput(QubitId),
}

impl CircuitError {
    /// Index of the offending operation, if the error is tied to one.
    pub fn op_index(&self) -> Option<usize> {
        match self {
            CircuitError::UnknownQubit { index, .. }
            | CircuitError::UseAfterMeasure { index, .. }
            | CircuitError::ControllerNotMeasured { index, .. }
            | CircuitError::UseBeforeInit { index, .. }
            | CircuitError::DoubleInit { index, .. }
            | CircuitError::CnotSelfLoop { index, .. } => Some(*index),
            _ => None,
        }
    }
}

/// A validated circuit. Fields are private so every value satisfies the
/// per-qubit ordering rules of the [`Validation`] mode it was built with.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    qubits: Vec<QubitDecl>,
    ops: Vec<Operation>,
    outputs: Vec<QubitId>,
}

impl Circuit {
    pub fn empty() -> Self {
        Circuit { qubits: Vec::new(), ops: Vec::new(), outputs: Vec::new() }
    }

    pub fn new(qubits: Vec<QubitDecl>, ops: Vec<Operation>, outputs: Vec<QubitId>) -> Result<Self, CircuitError> {
        Self::with_validation(qubits, ops, outputs, Validation::Strict)
    }

    pub fn with_validation(
        qubits: Vec<QubitDecl>,
        ops: Vec<Operation>,
        outputs: Vec<QubitId>,
        mode: Validation,
    ) -> Result<Self, CircuitError> {
        validate(&qubits, &ops, &outputs, mode)?;
        Ok(Circuit { qubits, ops, outputs })
    }

    pub fn qubits(&self) -> &[QubitDecl] {
        &self.qubits
    }

    pub fn qubit_ids(&self) -> impl Iterator<Item = &QubitId> {
        self.qubits.iter().map(|d| &d.id)
    }

    pub fn ops(&self) -> &[Operation] {
        &self.ops
    }

    pub fn outputs(&self) -> &[QubitId] {
        &self.outputs
    }

    pub fn inputs(&self) -> impl Iterator<Item = &QubitId> {
        self.qubits.iter().filter(|d| d.input).map(|d| &d.id)
    }

    pub fn is_input(&self, q: &QubitId) -> bool {
        self.qubits.iter().any(|d| d.input && &d.id == q)
    }

    pub fn is_output(&self, q: &QubitId) -> bool {
        self.outputs.contains(q)
    }

    pub fn cnot_count(&self) -> usize {
        self.ops.iter().filter(|op| matches!(op, Operation::Cnot { .. })).count()
    }

    /// Count of `Init` ops per state kind (every kind present, possibly 0).
    pub fn init_counts(&self) -> BTreeMap<InitState, usize> {
        let mut counts: BTreeMap<InitState, usize> = InitState::ALL.iter().map(|k| (*k, 0)).collect();
        for op in &self.ops {
            if let Operation::Init { state, .. } = op {
                *counts.entry(*state).or_default() += 1;
            }
        }
        counts
    }

    /// Qubits never measured, in declaration order.
    pub fn unmeasured(&self) -> Vec<QubitId> {
        let measured: BTreeSet<&QubitId> = self
            .ops
            .iter()
            .filter_map(|op| match op {
                Operation::Measure { qubit, .. } | Operation::SelectiveMeasure { qubit, .. } => Some(qubit),
                _ => None,
            })
            .collect();
        self.qubit_ids().filter(|q| !measured.contains(q)).cloned().collect()
    }

    /// Qubits live at the end of the circuit: inputs or initialized, and not
    /// measured afterwards. Declaration order.
    pub fn live_at_end(&self) -> Vec<QubitId> {
        let mut live: BTreeMap<&QubitId, bool> = self.qubits.iter().map(|d| (&d.id, d.input)).collect();
        for op in &self.ops {
            match op {
                Operation::Init { qubit, .. } => {
                    live.insert(qubit, true);
                }
                Operation::Measure { qubit, .. } | Operation::SelectiveMeasure { qubit, .. } => {
                    live.insert(qubit, false);
                }
                _ => {}
            }
        }
        self.qubit_ids().filter(|q| live[q]).cloned().collect()
    }
}

/// True iff the circuit contains only initializations, CNOTs and measurements.
pub fn is_icm(c: &Circuit) -> bool {
    c.ops.iter().all(Operation::is_icm)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// Declared, not initialized.
    Fresh,
    Live,
    Measured,
}

fn validate(
    qubits: &[QubitDecl],
    ops: &[Operation],
    outputs: &[QubitId],
    mode: Validation,
) -> Result<(), CircuitError> {
    let mut phase: BTreeMap<&QubitId, Phase> = BTreeMap::new();
    for d in qubits {
        let p = if d.input { Phase::Live } else { Phase::Fresh };
        if phase.insert(&d.id, p).is_some() {
            return Err(CircuitError::DuplicateQubit(d.id.clone()));
        }
    }
    let mut ever_measured: BTreeSet<&QubitId> = BTreeSet::new();
    for (index, op) in ops.iter().enumerate() {
        for q in op.qubits() {
            if !phase.contains_key(q) {
                return Err(CircuitError::UnknownQubit { index, qubit: q.clone() });
            }
        }
        if let Operation::SelectiveMeasure { controller, .. } = op {
            if !phase.contains_key(controller) {
                return Err(CircuitError::UnknownQubit { index, qubit: controller.clone() });
            }
        }
        match op {
            Operation::Init { qubit, .. } => match phase[qubit] {
                Phase::Fresh => {
                    phase.insert(qubit, Phase::Live);
                }
                Phase::Measured if mode == Validation::Episodic => {
                    phase.insert(qubit, Phase::Live);
                }
                Phase::Measured => return Err(CircuitError::UseAfterMeasure { index, qubit: qubit.clone() }),
                Phase::Live => return Err(CircuitError::DoubleInit { index, qubit: qubit.clone() }),
            },
            _ => {
                if let Operation::Cnot { control, target } = op {
                    if control == target {
                        return Err(CircuitError::CnotSelfLoop { index, qubit: control.clone() });
                    }
                }
                if let Operation::SelectiveMeasure { controller, .. } = op {
                    if !controller_measured_before(ops, index, controller) {
                        return Err(CircuitError::ControllerNotMeasured { index, controller: controller.clone() });
                    }
                }
                for q in op.qubits() {
                    match phase[q] {
                        Phase::Live => {}
                        Phase::Fresh => return Err(CircuitError::UseBeforeInit { index, qubit: q.clone() }),
                        Phase::Measured => return Err(CircuitError::UseAfterMeasure { index, qubit: q.clone() }),
                    }
                }
                if op.is_measurement() {
                    let q = op.qubits()[0];
                    phase.insert(q, Phase::Measured);
                    ever_measured.insert(q);
                }
            }
        }
    }
    let mut seen = BTreeSet::new();
    for o in outputs {
        let Some(p) = phase.get(o) else {
            return Err(CircuitError::UnknownOutput(o.clone()));
        };
        if !seen.insert(o) {
            return Err(CircuitError::DuplicateOutput(o.clone()));
        }
        let bad = match mode {
            Validation::Strict => ever_measured.contains(o),
            Validation::Episodic => *p == Phase::Measured,
        };
        if bad {
            return Err(CircuitError::OutputMeasured(o.clone()));
        }
    }
    Ok(())
}

/// The controller must have been measured by a plain `Measure` before `index`.
/// When a wire is measured several times the latest measurement counts.
fn controller_measured_before(ops: &[Operation], index: usize, controller: &QubitId) -> bool {
    for op in ops[..index].iter().rev() {
        match op {
            Operation::Measure { qubit, .. } if qubit == controller => return true,
            Operation::SelectiveMeasure { qubit, .. } if qubit == controller => return false,
            _ => {}
        }
    }
    false
}

/// Index of the measurement whose outcome a selective measurement at
/// `index` reads.
pub fn controller_source(ops: &[Operation], index: usize, controller: &QubitId) -> Option<usize> {
    ops[..index].iter().rposition(|op| matches!(op, Operation::Measure { qubit, .. } if qubit == controller))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> QubitId {
        QubitId::new(s)
    }

    fn decl(s: &str, input: bool) -> QubitDecl {
        QubitDecl { id: q(s), input }
    }

    #[test]
    fn angle_reduces_to_lowest_terms() {
        assert_eq!(Angle::new(2, 8), Angle::QUARTER_PI);
        assert_eq!(Angle::new(-1, -2), Angle::HALF_PI);
        assert_eq!(Angle::new(1, -4).num(), -1);
        assert_eq!(Angle::new(0, 7), Angle::ZERO);
    }

    #[test]
    fn rejects_use_after_measure() {
        let ops = vec![
            Operation::Init { qubit: q("a"), state: InitState::Zero },
            Operation::Measure { qubit: q("a"), basis: Basis::Z },
            Operation::Gate { kind: GateKind::H, qubit: q("a") },
        ];
        let err = Circuit::new(vec![decl("a", false)], ops, vec![]).unwrap_err();
        assert_eq!(err, CircuitError::UseAfterMeasure { index: 2, qubit: q("a") });
    }

    #[test]
    fn episodic_mode_allows_reinit_after_measure() {
        let ops = vec![
            Operation::Init { qubit: q("w"), state: InitState::Zero },
            Operation::Measure { qubit: q("w"), basis: Basis::Z },
            Operation::Init { qubit: q("w"), state: InitState::Plus },
        ];
        assert!(Circuit::new(vec![decl("w", false)], ops.clone(), vec![]).is_err());
        let c = Circuit::with_validation(vec![decl("w", false)], ops, vec![q("w")], Validation::Episodic).unwrap();
        assert_eq!(c.live_at_end(), vec![q("w")]);
    }

    #[test]
    fn selective_needs_plain_measured_controller() {
        let ops = vec![
            Operation::Init { qubit: q("a"), state: InitState::Zero },
            Operation::Init { qubit: q("b"), state: InitState::Zero },
            Operation::SelectiveMeasure {
                qubit: q("b"),
                controller: q("a"),
                basis_if_zero: Basis::Z,
                basis_if_one: Basis::X,
            },
        ];
        let err = Circuit::new(vec![decl("a", false), decl("b", false)], ops, vec![]).unwrap_err();
        assert!(matches!(err, CircuitError::ControllerNotMeasured { index: 2, .. }));
    }

    #[test]
    fn input_cannot_be_initialized_and_outputs_must_be_live() {
        let ops = vec![Operation::Init { qubit: q("a"), state: InitState::Zero }];
        assert!(matches!(Circuit::new(vec![decl("a", true)], ops, vec![]), Err(CircuitError::DoubleInit { .. })));
        let ops = vec![Operation::Measure { qubit: q("a"), basis: Basis::X }];
        assert_eq!(
            Circuit::new(vec![decl("a", true)], ops, vec![q("a")]).unwrap_err(),
            CircuitError::OutputMeasured(q("a"))
        );
    }

    #[test]
    fn cnot_self_loop_rejected() {
        let ops = vec![Operation::Cnot { control: q("a"), target: q("a") }];
        assert!(matches!(Circuit::new(vec![decl("a", true)], ops, vec![]), Err(CircuitError::CnotSelfLoop { .. })));
    }

    #[test]
    fn empty_circuit_is_icm() {
        assert!(is_icm(&Circuit::empty()));
    }

    #[test]
    fn names() {
        assert!(QubitId::is_valid_name("q0"));
        assert!(QubitId::is_valid_name("_anc.3"));
        assert!(!QubitId::is_valid_name("0q"));
        assert!(!QubitId::is_valid_name("a=b"));
        assert!(!QubitId::is_valid_name(""));
    }
}
