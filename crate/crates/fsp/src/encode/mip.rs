//! Mixed-integer program: binary inclusion variables, one continuous
//! position variable per feature in [1, n], big-M inequalities forcing
//! strict position order for committed hard pairs and kept user precedences,
//! and a maximisation objective over the kept weights.

use std::collections::BTreeSet;

use crate::model::{topological_order, FeatureId, PrecSet, Subscription};

/// One linear inequality of the model; `n` is the feature count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MipInequality {
    /// pf_i − pf_j + n·bf_i + n·bf_j ≤ 2n − 1, for (i ≺ j) ∈ H.
    HardPair { i: FeatureId, j: FeatureId },
    /// pf_i − pf_j + n·bp_ij ≤ n − 1, for (i ≺ j) ∈ P.
    PrecPosition { i: FeatureId, j: FeatureId },
    /// bp_ij − bf_i ≤ 0.
    PrecSupportsSource { i: FeatureId, j: FeatureId },
    /// bp_ij − bf_j ≤ 0.
    PrecSupportsTarget { i: FeatureId, j: FeatureId },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MipModel {
    pub features: Vec<FeatureId>,
    pub precs: Vec<(FeatureId, FeatureId)>,
    /// n = |F|; positions are continuous in [1, n].
    pub n: u64,
    /// Maximise Σ w(i)·bf_i + Σ w(i≺j)·bp_ij; weights aligned with
    /// `features` then `precs`.
    pub objective: Vec<u64>,
    pub inequalities: Vec<MipInequality>,
}

pub fn encode_mip(sub: &Subscription) -> MipModel {
    let features: Vec<FeatureId> = sub.features().iter().copied().collect();
    let precs: Vec<(FeatureId, FeatureId)> = sub.user().iter().collect();
    let mut objective: Vec<u64> = features.iter().map(|&f| sub.feature_weight(f)).collect();
    objective.extend(precs.iter().map(|&(i, j)| sub.prec_weight(i, j)));
    let mut inequalities = Vec::new();
    for (i, j) in sub.hard().iter() {
        inequalities.push(MipInequality::HardPair { i, j });
    }
    for &(i, j) in &precs {
        inequalities.push(MipInequality::PrecPosition { i, j });
        inequalities.push(MipInequality::PrecSupportsSource { i, j });
        inequalities.push(MipInequality::PrecSupportsTarget { i, j });
    }
    MipModel {
        n: features.len() as u64,
        features,
        precs,
        objective,
        inequalities,
    }
}

/// Checks a binary assignment for feasibility: the support inequalities
/// must hold, and the strict position system induced by the committed hard
/// pairs and kept precedences must admit positions in [1, n] — equivalently,
/// that digraph is acyclic (topological ranks give integer positions).
pub fn mip_feasible(model: &MipModel, sub: &Subscription, bf: &[bool], bp: &[bool]) -> bool {
    let kept: BTreeSet<FeatureId> = model
        .features
        .iter()
        .zip(bf)
        .filter(|(_, &b)| b)
        .map(|(&f, _)| f)
        .collect();
    let mut strict = PrecSet::new();
    for (i, j) in sub.hard().iter() {
        if kept.contains(&i) && kept.contains(&j) {
            strict.insert(i, j).unwrap();
        }
    }
    for (&(i, j), &b) in model.precs.iter().zip(bp) {
        if b {
            if !kept.contains(&i) || !kept.contains(&j) {
                return false; // violates (8) or (9)
            }
            strict.insert(i, j).unwrap();
        }
    }
    let universe: BTreeSet<FeatureId> = model.features.iter().copied().collect();
    topological_order(&strict, &universe).is_some()
}

/// Optimum by enumerating the binary variables and checking position
/// feasibility. Small instances only.
pub fn mip_optimum(model: &MipModel, sub: &Subscription) -> u64 {
    let nf = model.features.len();
    let np = model.precs.len();
    assert!(nf + np <= 20, "instance too large for exhaustive evaluation");
    let mut best = 0u64;
    for mask in 0u64..(1 << (nf + np)) {
        let bf: Vec<bool> = (0..nf).map(|k| mask >> k & 1 == 1).collect();
        let bp: Vec<bool> = (0..np).map(|k| mask >> (nf + k) & 1 == 1).collect();
        if !mip_feasible(model, sub, &bf, &bp) {
            continue;
        }
        let value: u64 = model
            .objective
            .iter()
            .zip(bf.iter().chain(bp.iter()))
            .filter(|(_, &b)| b)
            .map(|(&w, _)| w)
            .sum();
        best = best.max(value);
    }
    best
}
