//! Pauli frame: the classical record of X/Z corrections that are tracked
//! through the ICM circuit instead of being executed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::FrameCorrection;
use crate::circuit::{Basis, Operation, QubitId};
use crate::oracle::{Feedforward, OracleError, Outcome, Pauli, StateVector};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameBits {
    pub x_flip: bool,
    pub z_flip: bool,
}

impl FrameBits {
    pub fn pauli(self) -> Pauli {
        Pauli::from_bits(self.x_flip, self.z_flip)
    }
}

/// Frame bits for every live wire.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliFrame {
    bits: BTreeMap<QubitId, FrameBits>,
}

impl PauliFrame {
    pub fn new() -> Self {
        Self::default()
    }

    /// Frame with a fresh zero record for each given wire.
    pub fn with_wires<'a>(wires: impl IntoIterator<Item = &'a QubitId>) -> Self {
        PauliFrame { bits: wires.into_iter().map(|q| (q.clone(), FrameBits::default())).collect() }
    }

    pub fn set(&mut self, q: QubitId, bits: FrameBits) {
        self.bits.insert(q, bits);
    }

    pub fn get(&self, q: &QubitId) -> FrameBits {
        self.bits.get(q).copied().unwrap_or_default()
    }

    pub fn contains(&self, q: &QubitId) -> bool {
        self.bits.contains_key(q)
    }

    pub fn wires(&self) -> impl Iterator<Item = (&QubitId, &FrameBits)> {
        self.bits.iter()
    }

    /// XORs a Pauli into a wire's record.
    pub fn toggle(&mut self, q: &QubitId, p: Pauli) {
        let b = self.bits.entry(q.clone()).or_default();
        b.x_flip ^= p.has_x();
        b.z_flip ^= p.has_z();
    }

    pub fn is_identity(&self) -> bool {
        self.bits.values().all(|b| !b.x_flip && !b.z_flip)
    }

    /// Whether a pending frame flips the outcome of measuring `q` in `basis`.
    pub fn flips_outcome(&self, q: &QubitId, basis: Basis) -> bool {
        let b = self.get(q);
        match basis {
            Basis::Z => b.x_flip,
            Basis::X => b.z_flip,
        }
    }

    /// Removes a measured wire.
    pub fn retire(&mut self, q: &QubitId) -> FrameBits {
        self.bits.remove(q).unwrap_or_default()
    }
}

/// Frame after `op`.
///
/// * `Init`: the wire gets a fresh zero record.
/// * `Cnot`: X on the control spreads to the target; Z on the target spreads
///   to the control.
/// * `Measure`/`SelectiveMeasure`: the wire is retired. Use
///   [`PauliFrame::flips_outcome`] first to correct the outcome bit.
/// * Anything else leaves the frame unchanged.
pub fn propagate_frame(frame: &PauliFrame, op: &Operation) -> PauliFrame {
    let mut next = frame.clone();
    propagate_in_place(&mut next, op);
    next
}

pub(crate) fn propagate_in_place(frame: &mut PauliFrame, op: &Operation) {
    match op {
        Operation::Init { qubit, .. } => frame.set(qubit.clone(), FrameBits::default()),
        Operation::Cnot { control, target } => {
            let c = frame.get(control);
            let t = frame.get(target);
            frame.set(control.clone(), FrameBits { x_flip: c.x_flip, z_flip: c.z_flip ^ t.z_flip });
            frame.set(target.clone(), FrameBits { x_flip: t.x_flip ^ c.x_flip, z_flip: t.z_flip });
        }
        Operation::Measure { qubit, .. } | Operation::SelectiveMeasure { qubit, .. } => {
            frame.retire(qubit);
        }
        Operation::Gate { .. } | Operation::Rotation { .. } => {}
    }
}

/// Looks up the table entry of a correction from recorded outcomes.
pub(crate) fn correction_pauli(corr: &FrameCorrection, outcomes: &[Outcome]) -> Pauli {
    let mut idx = 0usize;
    for (k, m) in corr.measured.iter().enumerate() {
        let bit = outcomes
            .iter()
            .find(|o| o.index == *m)
            .map(|o| o.bit)
            .expect("correction anchored after all of its measurements");
        idx |= (bit as usize) << k;
    }
    corr.table[idx]
}

/// Branch semantics with deferred corrections: outcomes are recorded after
/// removing the pending frame, selective bases use those corrected bits, and
/// the final frame is applied to the surviving wires at the end.
#[derive(Clone)]
pub struct DeferredFrame<'a> {
    pub frame: PauliFrame,
    corrections: &'a [FrameCorrection],
}

impl<'a> DeferredFrame<'a> {
    /// `inputs` are the wires live before the first op.
    pub fn new<'q>(corrections: &'a [FrameCorrection], inputs: impl IntoIterator<Item = &'q QubitId>) -> Self {
        DeferredFrame { frame: PauliFrame::with_wires(inputs), corrections }
    }
}

impl Feedforward for DeferredFrame<'_> {
    fn before_op(&mut self, index: usize, _state: &mut StateVector, outcomes: &[Outcome]) -> Result<(), OracleError> {
        for corr in self.corrections.iter().filter(|c| c.apply_before == index) {
            let p = correction_pauli(corr, outcomes);
            self.frame.toggle(&corr.wire, p);
        }
        Ok(())
    }

    fn after_op(&mut self, _index: usize, op: &Operation) {
        propagate_in_place(&mut self.frame, op);
    }

    fn record(&mut self, _index: usize, qubit: &QubitId, basis: Basis, raw: u8) -> u8 {
        let flip = self.frame.flips_outcome(qubit, basis);
        self.frame.retire(qubit);
        raw ^ flip as u8
    }

    fn finish(&mut self, state: &mut StateVector, _outcomes: &[Outcome]) -> Result<(), OracleError> {
        for (q, bits) in self.frame.wires() {
            if state.qubit_order().contains(q) {
                state.apply_pauli(bits.pauli(), q)?;
            }
        }
        Ok(())
    }
}

/// Branch semantics where every correction is applied to the state as a
/// Pauli gate as soon as its measurements are known.
#[derive(Clone)]
pub struct InlineCorrection<'a> {
    corrections: &'a [FrameCorrection],
}

impl<'a> InlineCorrection<'a> {
    pub fn new(corrections: &'a [FrameCorrection]) -> Self {
        InlineCorrection { corrections }
    }
}

impl Feedforward for InlineCorrection<'_> {
    fn before_op(&mut self, index: usize, state: &mut StateVector, outcomes: &[Outcome]) -> Result<(), OracleError> {
        for corr in self.corrections.iter().filter(|c| c.apply_before == index) {
            state.apply_pauli(correction_pauli(corr, outcomes), &corr.wire)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> QubitId {
        QubitId::new(s)
    }

    fn frame(entries: &[(&str, bool, bool)]) -> PauliFrame {
        let mut f = PauliFrame::new();
        for (name, x, z) in entries {
            f.set(q(name), FrameBits { x_flip: *x, z_flip: *z });
        }
        f
    }

    #[test]
    fn cnot_copies_control_x_to_target() {
        let f = frame(&[("c", true, false), ("t", false, false)]);
        let g = propagate_frame(&f, &Operation::Cnot { control: q("c"), target: q("t") });
        assert_eq!(g, frame(&[("c", true, false), ("t", true, false)]));
    }

    #[test]
    fn cnot_copies_target_z_to_control() {
        let f = frame(&[("c", false, false), ("t", false, true)]);
        let g = propagate_frame(&f, &Operation::Cnot { control: q("c"), target: q("t") });
        assert_eq!(g, frame(&[("c", false, true), ("t", false, true)]));
    }

    #[test]
    fn zero_frame_is_fixed_point() {
        let f = frame(&[("a", false, false), ("b", false, false)]);
        let ops = [
            Operation::Cnot { control: q("a"), target: q("b") },
            Operation::Init { qubit: q("c"), state: crate::circuit::InitState::Y },
            Operation::Measure { qubit: q("a"), basis: Basis::X },
        ];
        let mut g = f.clone();
        for op in &ops {
            g = propagate_frame(&g, op);
            assert!(g.is_identity());
        }
    }

    #[test]
    fn measurement_flip_and_retire() {
        let mut f = frame(&[("a", true, false), ("b", false, true)]);
        assert!(f.flips_outcome(&q("a"), Basis::Z));
        assert!(!f.flips_outcome(&q("a"), Basis::X));
        assert!(f.flips_outcome(&q("b"), Basis::X));
        f = propagate_frame(&f, &Operation::Measure { qubit: q("a"), basis: Basis::Z });
        assert!(!f.contains(&q("a")));
        assert!(f.contains(&q("b")));
    }
}
