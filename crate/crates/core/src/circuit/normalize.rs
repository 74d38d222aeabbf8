use thiserror::Error;

use super::{Angle, Axis, Circuit, GateKind, Operation};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("op {index}: rotation by {angle} is not one of ±pi/4, ±pi/2, pi")]
    UnsupportedAngle { index: usize, angle: Angle },
}

/// Reduces an angle to the interval (-π, π].
pub fn reduce_angle(a: Angle) -> Angle {
    let period = 2 * a.den();
    let mut num = a.num().rem_euclid(period);
    if num > a.den() {
        num -= period;
    }
    Angle::new(num, a.den())
}

pub(crate) fn is_supported(a: Angle) -> bool {
    let r = reduce_angle(a);
    r.num() == 0 || matches!((r.num().abs(), r.den()), (1, 4) | (1, 2) | (1, 1))
}

/// Rotation sequence for a named gate, in application order.
pub fn gate_rotations(kind: GateKind) -> &'static [(Axis, Angle)] {
    match kind {
        GateKind::H => &[(Axis::Z, Angle::HALF_PI), (Axis::X, Angle::HALF_PI), (Axis::Z, Angle::HALF_PI)],
        GateKind::V => &[(Axis::X, Angle::HALF_PI)],
        GateKind::S => &[(Axis::Z, Angle::HALF_PI)],
        GateKind::T => &[(Axis::Z, Angle::QUARTER_PI)],
    }
}

/// Rewrites every named gate into Z/X rotations and checks every rotation
/// angle is one the ICM expansion supports.
pub fn normalize_gates(c: &Circuit) -> Result<Circuit, NormalizeError> {
    let mut ops = Vec::with_capacity(c.ops().len());
    for (index, op) in c.ops().iter().enumerate() {
        match op {
            Operation::Gate { kind, qubit } => {
                ops.extend(gate_rotations(*kind).iter().map(|&(axis, angle)| Operation::Rotation {
                    axis,
                    angle,
                    qubit: qubit.clone(),
                }));
            }
            Operation::Rotation { angle, .. } => {
                if !is_supported(*angle) {
                    return Err(NormalizeError::UnsupportedAngle { index, angle: *angle });
                }
                ops.push(op.clone());
            }
            other => ops.push(other.clone()),
        }
    }
    Ok(Circuit::new(c.qubits().to_vec(), ops, c.outputs().to_vec())
        .expect("gate-to-rotation rewrite preserves per-qubit op order"))
}

#[cfg(test)]
mod tests {
    use super::super::parse_circuit;
    use super::*;

    #[test]
    fn hadamard_becomes_three_rotations() {
        let c = parse_circuit("input q0\nh q0\n").unwrap();
        let n = normalize_gates(&c).unwrap();
        let q = || "q0".into();
        assert_eq!(
            n.ops(),
            &[
                Operation::Rotation { axis: Axis::Z, angle: Angle::HALF_PI, qubit: q() },
                Operation::Rotation { axis: Axis::X, angle: Angle::HALF_PI, qubit: q() },
                Operation::Rotation { axis: Axis::Z, angle: Angle::HALF_PI, qubit: q() },
            ]
        );
    }

    #[test]
    fn t_becomes_quarter_rotation() {
        let c = parse_circuit("input q0\nt q0\n").unwrap();
        let n = normalize_gates(&c).unwrap();
        assert_eq!(n.ops(), &[Operation::Rotation { axis: Axis::Z, angle: Angle::QUARTER_PI, qubit: "q0".into() }]);
    }

    #[test]
    fn cnot_only_circuit_unchanged() {
        let c = parse_circuit("input a\ninput b\ncnot a b\ncnot b a\n").unwrap();
        assert_eq!(normalize_gates(&c).unwrap(), c);
    }

    #[test]
    fn unsupported_angle() {
        let c = parse_circuit("input a\nrz a 1/8pi\n").unwrap();
        assert_eq!(
            normalize_gates(&c).unwrap_err(),
            NormalizeError::UnsupportedAngle { index: 0, angle: Angle::new(1, 8) }
        );
    }

    #[test]
    fn reduction_into_half_open_interval() {
        assert_eq!(reduce_angle(Angle::new(7, 4)), Angle::new(-1, 4));
        assert_eq!(reduce_angle(Angle::new(-1, 1)), Angle::PI);
        assert_eq!(reduce_angle(Angle::new(2, 1)), Angle::ZERO);
        assert_eq!(reduce_angle(Angle::new(5, 2)), Angle::HALF_PI);
        assert!(is_supported(Angle::new(9, 4)));
        assert!(!is_supported(Angle::new(1, 3)));
    }
}
