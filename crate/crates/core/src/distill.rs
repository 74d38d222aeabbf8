//! Sizing of heralded distillation batches for |A⟩ and |Y⟩ states.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, InitState, Operation};

/// Slack on the reliability comparison so that targets written as
/// round decimals (e.g. 1 − 0.1³ = 0.999) are met exactly.
pub const TARGET_SLACK: f64 = 1e-12;
/// Default largest batch size considered before giving up.
pub const DEFAULT_BOX_CAP: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MagicKind {
    A,
    Y,
}

impl MagicKind {
    pub const ALL: [MagicKind; 2] = [MagicKind::A, MagicKind::Y];

    pub fn init_state(self) -> InitState {
        match self {
            MagicKind::A => InitState::A,
            MagicKind::Y => InitState::Y,
        }
    }

    pub fn of(state: InitState) -> Option<MagicKind> {
        match state {
            InitState::A => Some(MagicKind::A),
            InitState::Y => Some(MagicKind::Y),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum PlanError {
    #[error("circuit is not in ICM form (op {0})")]
    NotIcm(usize),
    #[error("success probability {0} is outside (0, 1]")]
    BadProbability(f64),
    #[error("reliability target {0} is outside (0, 1)")]
    BadTarget(f64),
    #[error("box dimensions must be positive, got {0:?}")]
    BadDims([i64; 3]),
    #[error("{kind:?}: {required} states at success probability {p} need more than {cap} boxes")]
    TargetUnreachable { kind: MagicKind, required: usize, p: f64, cap: usize },
    #[error("{kind:?}: {successes} successful boxes for {required} required states")]
    InsufficientSuccesses { kind: MagicKind, required: usize, successes: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillationSpec {
    pub state_kind: MagicKind,
    pub success_prob: f64,
    pub box_dims: [i64; 3],
}

impl DistillationSpec {
    pub fn new(state_kind: MagicKind, success_prob: f64, box_dims: [i64; 3]) -> Result<Self, PlanError> {
        if !(success_prob > 0.0 && success_prob <= 1.0) {
            return Err(PlanError::BadProbability(success_prob));
        }
        if box_dims.iter().any(|d| *d <= 0) {
            return Err(PlanError::BadDims(box_dims));
        }
        Ok(DistillationSpec { state_kind, success_prob, box_dims })
    }

    /// A: p = 0.9, 8×6×6. Y: p = 0.9, 4×4×4.
    pub fn default_for(kind: MagicKind) -> Self {
        match kind {
            MagicKind::A => DistillationSpec { state_kind: kind, success_prob: 0.9, box_dims: [8, 6, 6] },
            MagicKind::Y => DistillationSpec { state_kind: kind, success_prob: 0.9, box_dims: [4, 4, 4] },
        }
    }
}

/// Number of `|A⟩` and `|Y⟩` initializations.
pub fn count_required(c: &Circuit) -> Result<BTreeMap<MagicKind, usize>, PlanError> {
    let mut out: BTreeMap<MagicKind, usize> = MagicKind::ALL.iter().map(|k| (*k, 0)).collect();
    for (i, op) in c.ops().iter().enumerate() {
        if !op.is_icm() {
            return Err(PlanError::NotIcm(i));
        }
        if let Operation::Init { state, .. } = op {
            if let Some(k) = MagicKind::of(*state) {
                *out.get_mut(&k).unwrap() += 1;
            }
        }
    }
    Ok(out)
}

fn ln_choose(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// `P[Binomial(n, p) ≥ r]`.
pub fn success_probability(n: usize, p: f64, r: usize) -> f64 {
    if r == 0 {
        return 1.0;
    }
    if r > n {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let term = |k: usize| (ln_choose(n, k) + k as f64 * lp + (n - k) as f64 * lq).exp();
    // sum the shorter side
    if r <= n - r + 1 {
        let below: f64 = (0..r).map(term).sum();
        (1.0 - below).clamp(0.0, 1.0)
    } else {
        (r..=n).map(term).sum::<f64>().clamp(0.0, 1.0)
    }
}

/// Smallest batch `n` with `P[Binomial(n, p) ≥ required] ≥ target`.
pub fn boxes_needed(required: usize, spec: &DistillationSpec, target: f64) -> Result<usize, PlanError> {
    boxes_needed_capped(required, spec, target, DEFAULT_BOX_CAP)
}

pub fn boxes_needed_capped(
    required: usize,
    spec: &DistillationSpec,
    target: f64,
    cap: usize,
) -> Result<usize, PlanError> {
    if !(target > 0.0 && target < 1.0) {
        return Err(PlanError::BadTarget(target));
    }
    let p = spec.success_prob;
    if !(p > 0.0 && p <= 1.0) {
        return Err(PlanError::BadProbability(p));
    }
    if required == 0 {
        return Ok(0);
    }
    // the tail grows with n; a rough lower bound keeps the scan short
    let start = required.max(((required as f64 / p).floor() as usize).saturating_sub(1));
    let start = if success_probability(start, p, required) >= target - TARGET_SLACK { required } else { start };
    for n in start..=cap {
        if success_probability(n, p, required) >= target - TARGET_SLACK {
            return Ok(n);
        }
    }
    Err(PlanError::TargetUnreachable { kind: spec.state_kind, required, p, cap })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillationPlan {
    pub required: BTreeMap<MagicKind, usize>,
    pub boxes: BTreeMap<MagicKind, usize>,
    pub reliability_target: f64,
    pub achieved: BTreeMap<MagicKind, f64>,
}

pub fn make_plan(
    required: &BTreeMap<MagicKind, usize>,
    specs: &BTreeMap<MagicKind, DistillationSpec>,
    target: f64,
) -> Result<DistillationPlan, PlanError> {
    let mut boxes = BTreeMap::new();
    let mut achieved = BTreeMap::new();
    for kind in MagicKind::ALL {
        let r = required.get(&kind).copied().unwrap_or(0);
        let spec = specs.get(&kind).copied().unwrap_or_else(|| DistillationSpec::default_for(kind));
        let n = boxes_needed(r, &spec, target)?;
        boxes.insert(kind, n);
        achieved.insert(kind, success_probability(n, spec.success_prob, r));
    }
    Ok(DistillationPlan { required: required.clone(), boxes, reliability_target: target, achieved })
}

/// Per-kind success flags, one per box.
pub type SuccessMasks = BTreeMap<MagicKind, Vec<bool>>;

/// Heralded outcome per box, drawn in order: all A boxes, then all Y boxes.
pub fn draw_successes<R: Rng + ?Sized>(
    plan: &DistillationPlan,
    specs: &BTreeMap<MagicKind, DistillationSpec>,
    rng: &mut R,
) -> SuccessMasks {
    MagicKind::ALL
        .iter()
        .map(|k| {
            let p = specs.get(k).map_or(DistillationSpec::default_for(*k).success_prob, |s| s.success_prob);
            let n = plan.boxes.get(k).copied().unwrap_or(0);
            (*k, (0..n).map(|_| rng.random::<f64>() < p).collect())
        })
        .collect()
}

/// Checks that each kind has enough successful boxes.
pub fn check_successes(plan: &DistillationPlan, masks: &SuccessMasks) -> Result<(), PlanError> {
    for kind in MagicKind::ALL {
        let required = plan.required.get(&kind).copied().unwrap_or(0);
        let successes = masks.get(&kind).map_or(0, |m| m.iter().filter(|b| **b).count());
        if successes < required {
            return Err(PlanError::InsufficientSuccesses { kind, required, successes });
        }
    }
    Ok(())
}

/// Draws success masks and, while a kind falls short, runs one more box of
/// that kind (drawn from the same generator). Returns the masks and the
/// number of extra boxes per kind.
pub fn herald<R: Rng + ?Sized>(
    plan: &DistillationPlan,
    specs: &BTreeMap<MagicKind, DistillationSpec>,
    rng: &mut R,
    cap: usize,
) -> Result<(SuccessMasks, BTreeMap<MagicKind, usize>), PlanError> {
    let mut masks = draw_successes(plan, specs, rng);
    let mut extra = BTreeMap::new();
    while let Err(PlanError::InsufficientSuccesses { kind, required, .. }) = check_successes(plan, &masks) {
        let p = specs.get(&kind).map_or(DistillationSpec::default_for(kind).success_prob, |s| s.success_prob);
        let m = masks.get_mut(&kind).expect("every kind has a mask");
        if m.len() >= cap {
            return Err(PlanError::TargetUnreachable { kind, required, p, cap });
        }
        m.push(rng.random::<f64>() < p);
        *extra.entry(kind).or_insert(0) += 1;
    }
    Ok((masks, extra))
}
