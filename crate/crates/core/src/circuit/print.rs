use std::fmt::Write;

use super::{Axis, Circuit, Operation};

const HEADER: &str = "# defect-forge circuit v1\n";

/// Deterministic printer: declarations in order, then ops by index, then
/// outputs. `parse_circuit(&print_circuit(c)) == c` for every valid circuit.
pub fn print_circuit(c: &Circuit) -> String {
    let mut out = String::from(HEADER);
    let _ = writeln!(out, "# qubits: {}, ops: {}", c.qubits().len(), c.ops().len());
    for d in c.qubits() {
        let kw = if d.input { "input" } else { "qubit" };
        let _ = writeln!(out, "{kw} {}", d.id);
    }
    for op in c.ops() {
        let _ = writeln!(out, "{}", format_op(op));
    }
    for o in c.outputs() {
        let _ = writeln!(out, "output {o}");
    }
    out
}

pub(crate) fn format_op(op: &Operation) -> String {
    match op {
        Operation::Init { qubit, state } => format!("init {qubit} {}", state.token()),
        Operation::Gate { kind, qubit } => format!("{} {qubit}", kind.token()),
        Operation::Rotation { axis, angle, qubit } => {
            let kw = match axis {
                Axis::Z => "rz",
                Axis::X => "rx",
            };
            format!("{kw} {qubit} {angle}")
        }
        Operation::Cnot { control, target } => format!("cnot {control} {target}"),
        Operation::Measure { qubit, basis } => format!("measure {qubit} {}", basis.token()),
        Operation::SelectiveMeasure { qubit, controller, basis_if_zero, basis_if_one } => {
            format!("smeasure {qubit} ctrl={controller} zero={} one={}", basis_if_zero.token(), basis_if_one.token())
        }
    }
}
