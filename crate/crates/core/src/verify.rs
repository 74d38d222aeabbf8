//! Oracle equivalence between a source circuit and its ICM expansion, up to
//! the tracked Pauli frame and global phase.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, Operation, QubitId};
use crate::icm::{DeferredFrame, IcmProgram};
use crate::oracle::{
    fidelity, for_each_branch, input_state, sample_branch, Branch, OracleError, Plain, StateVector, BRANCH_TOL,
    MAX_QUBITS,
};

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    /// Random product input states to try.
    pub inputs: usize,
    pub seed: u64,
    pub max_qubits: usize,
    /// Above this many ICM branches per input, branches are sampled instead
    /// of enumerated.
    pub max_branches: usize,
    /// Sample size in sampled mode.
    pub samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { inputs: 4, seed: 0, max_qubits: MAX_QUBITS, max_branches: 1 << 16, samples: 2048 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("{which} circuit needs {requested} simultaneous qubits, limit is {cap}")]
    CapacityExceeded { which: &'static str, requested: usize, cap: usize },
    #[error("ICM program does not match its source: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchCheck {
    pub input: usize,
    /// All ICM outcome bits in op order.
    pub branch: String,
    /// Bits of the measurements copied from the source circuit.
    pub source_branch: String,
    pub probability: f64,
    pub fidelity: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub exhaustive: bool,
    pub checks: Vec<BranchCheck>,
    /// Largest gap between source and ICM marginal probabilities
    /// (exhaustive mode only).
    pub max_probability_error: f64,
    pub min_fidelity: f64,
    pub passed: bool,
}

impl VerifyReport {
    pub fn first_failure(&self) -> Option<&BranchCheck> {
        self.checks.iter().find(|c| !c.pass)
    }
}

/// Largest number of qubits alive at once while running `c`.
pub fn peak_live(c: &Circuit) -> usize {
    let mut live = c.inputs().count();
    let mut peak = live;
    for op in c.ops() {
        match op {
            Operation::Init { .. } => {
                live += 1;
                peak = peak.max(live);
            }
            Operation::Measure { .. } | Operation::SelectiveMeasure { .. } => live -= 1,
            _ => {}
        }
    }
    peak
}

/// Upper bound on the number of measurement branches.
fn branch_bound(c: &Circuit) -> f64 {
    2f64.powi(c.ops().iter().filter(|o| o.is_measurement()).count() as i32)
}

fn source_key(bits: impl Iterator<Item = u8>) -> String {
    bits.map(|b| if b == 1 { '1' } else { '0' }).collect()
}

/// Checks every ICM branch (or a Born-rule sample of them) against the
/// source branch with the same copied-through outcomes.
pub fn verify_program(source: &Circuit, program: &IcmProgram, cfg: &VerifyConfig) -> Result<VerifyReport, VerifyError> {
    let cap = cfg.max_qubits.min(MAX_QUBITS);
    for (which, c) in [("source", source), ("ICM", &program.circuit)] {
        let requested = peak_live(c);
        if requested > cap {
            return Err(VerifyError::CapacityExceeded { which, requested, cap });
        }
    }
    // Copied-through measurements are matched to the source ones by order,
    // so the source may be given before or after normalization.
    let src_measures = source.ops().iter().filter(|o| o.is_measurement()).count();
    if program.measurement_map.len() != src_measures {
        return Err(VerifyError::Mismatch(format!(
            "{} copied measurements for {src_measures} source measurements",
            program.measurement_map.len()
        )));
    }
    let icm_measure: Vec<usize> = program.measurement_map.iter().map(|(_, i)| *i).collect();
    let back: BTreeMap<&QubitId, &QubitId> = program.final_wire.iter().map(|(s, w)| (w, s)).collect();

    let exhaustive = branch_bound(&program.circuit) <= cfg.max_branches as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();
    let mut max_probability_error: f64 = 0.0;

    for input in 0..cfg.inputs {
        let states: BTreeMap<QubitId, StateVector> =
            source.inputs().map(|q| (q.clone(), StateVector::random_single(q.clone(), &mut rng))).collect();
        let mut expected: BTreeMap<String, (f64, StateVector)> = BTreeMap::new();
        for_each_branch(source.ops(), input_state(source, &states)?, Plain, |b| {
            let key = source_key(b.outcomes.iter().map(|o| o.bit));
            expected.insert(key, (b.probability, b.state));
            Ok(())
        })?;

        let hooks = DeferredFrame::new(&program.corrections, program.circuit.inputs());
        let initial = input_state(&program.circuit, &states)?;
        let mut marginal: BTreeMap<String, f64> = BTreeMap::new();
        let mut check = |b: Branch| -> Result<(), OracleError> {
            let key =
                source_key(icm_measure.iter().map(|i| b.outcomes.iter().find(|o| o.index == *i).map_or(0, |o| o.bit)));
            let fid = match expected.get(&key) {
                Some((_, want)) => compare(&b.state, want, &back)?,
                None => 0.0,
            };
            *marginal.entry(key.clone()).or_default() += b.probability;
            checks.push(BranchCheck {
                input,
                branch: b.key(),
                source_branch: key,
                probability: b.probability,
                fidelity: fid,
                pass: fid >= 1.0 - BRANCH_TOL,
            });
            Ok(())
        };
        if exhaustive {
            for_each_branch(program.circuit.ops(), initial, hooks, &mut check)?;
            for (key, (p, _)) in &expected {
                let got = marginal.get(key).copied().unwrap_or(0.0);
                max_probability_error = max_probability_error.max((got - p).abs());
            }
            for (key, got) in &marginal {
                if !expected.contains_key(key) {
                    max_probability_error = max_probability_error.max(*got);
                }
            }
        } else {
            for _ in 0..cfg.samples {
                check(sample_branch(program.circuit.ops(), initial.clone(), hooks.clone(), &mut rng)?)?;
            }
        }
    }
    let min_fidelity = checks.iter().map(|c| c.fidelity).fold(1.0, f64::min);
    let passed = checks.iter().all(|c| c.pass) && max_probability_error <= BRANCH_TOL;
    Ok(VerifyReport { exhaustive, checks, max_probability_error, min_fidelity, passed })
}

/// Fidelity of an ICM branch state against a source state after mapping
/// final wires back to source names. Zero when the qubit sets differ.
fn compare(got: &StateVector, want: &StateVector, back: &BTreeMap<&QubitId, &QubitId>) -> Result<f64, OracleError> {
    if got.num_qubits() != want.num_qubits() {
        return Ok(0.0);
    }
    let renamed = got.renamed(|w| back.get(w).map_or_else(|| w.clone(), |s| (*s).clone()));
    if !want.qubit_order().iter().all(|q| renamed.qubit_order().contains(q)) {
        return Ok(0.0);
    }
    fidelity(&renamed.reordered(want.qubit_order())?, want)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{normalize_gates, parse_circuit};
    use crate::icm::expand_all;

    fn check(text: &str) -> VerifyReport {
        let c = parse_circuit(text).unwrap();
        let p = expand_all(&normalize_gates(&c).unwrap()).unwrap();
        verify_program(&c, &p, &VerifyConfig { inputs: 3, seed: 9, ..Default::default() }).unwrap()
    }

    #[test]
    fn s_gate_passes_both_branches() {
        let r = check("input q\ns q\noutput q\n");
        assert!(r.passed);
        assert!(r.exhaustive);
        assert_eq!(r.checks.len(), 6);
    }

    #[test]
    fn t_gate_passes_all_32_branches() {
        let r = check("input q\nt q\noutput q\n");
        assert!(r.passed, "{:?}", r.first_failure());
        assert_eq!(r.checks.iter().filter(|c| c.input == 0).count(), 32);
    }

    #[test]
    fn mixed_circuit_with_measurements() {
        let r = check("input a\ninput b\nh a\nt b\ncnot a b\nrx b -1/4pi\nmeasure a X\ns b\nv b\noutput b\n");
        assert!(r.passed, "{:?}", r.first_failure());
        assert!(r.max_probability_error <= BRANCH_TOL);
    }

    #[test]
    fn chained_t_gates_with_pending_frames() {
        let r = check("input q\nt q\nt q\nrz q -1/4pi\nh q\nt q\noutput q\n");
        assert!(r.passed, "{:?}", r.first_failure());
    }

    #[test]
    fn sampled_mode_for_large_branch_counts() {
        let c = parse_circuit("input q\nt q\nt q\nt q\nt q\noutput q\n").unwrap();
        let p = expand_all(&normalize_gates(&c).unwrap()).unwrap();
        let cfg = VerifyConfig { inputs: 2, samples: 200, max_branches: 1 << 12, ..Default::default() };
        let r = verify_program(&c, &p, &cfg).unwrap();
        assert!(!r.exhaustive);
        assert!(r.passed);
        assert_eq!(r.checks.len(), 400);
    }

    #[test]
    fn corrupted_table_fails() {
        let c = parse_circuit("input q\nt q\noutput q\n").unwrap();
        let mut p = expand_all(&normalize_gates(&c).unwrap()).unwrap();
        p.corrections[0].table[3] = p.corrections[0].table[3].compose(crate::oracle::Pauli::X);
        let r = verify_program(&c, &p, &VerifyConfig::default()).unwrap();
        assert!(!r.passed);
        assert!(r.first_failure().unwrap().branch.len() == 5);
    }

    #[test]
    fn capacity_limit() {
        let c = parse_circuit("input a\ninput b\ninput c\nt a\n").unwrap();
        let p = expand_all(&normalize_gates(&c).unwrap()).unwrap();
        let err = verify_program(&c, &p, &VerifyConfig { max_qubits: 4, ..Default::default() }).unwrap_err();
        assert_eq!(err, VerifyError::CapacityExceeded { which: "ICM", requested: 8, cap: 4 });
    }
}
