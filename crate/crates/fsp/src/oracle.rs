//! Brute-force ground truth for optima, consistency and pair enumeration on
//! small instances. Deliberately independent of the solver and enumeration
//! code paths: acyclicity here is DFS-based, consistency is permutation
//! search, and optima come from exhaustive subset enumeration.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use thiserror::Error;

use crate::enumerate::OrderPair;
use crate::model::{
    BiRegionSubscription, FeatureId, PrecSet, Relaxation, Subscription, TotalOrder,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large for brute force: {0}")]
    SizeGuard(&'static str),
}

const MAX_FEATURES_OPTIMAL: usize = 12;
const MAX_USER_PRECS_OPTIMAL: usize = 10;
const MAX_FEATURES_CONSISTENCY: usize = 8;
const MAX_REGION_FEATURES: usize = 7;

/// DFS cycle detection, independent of the Kahn-style sort in `model`.
fn is_acyclic_dfs(nodes: &[FeatureId], edges: &[(FeatureId, FeatureId)]) -> bool {
    let index: BTreeMap<FeatureId, usize> =
        nodes.iter().enumerate().map(|(k, &f)| (f, k)).collect();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for &(i, j) in edges {
        succ[index[&i]].push(index[&j]);
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; nodes.len()];
    fn visit(v: usize, succ: &[Vec<usize>], state: &mut [u8]) -> bool {
        state[v] = 1;
        for &w in &succ[v] {
            if state[w] == 1 || (state[w] == 0 && !visit(w, succ, state)) {
                return false;
            }
        }
        state[v] = 2;
        true
    }
    (0..nodes.len()).all(|v| state[v] != 0 || visit(v, &succ, &mut state))
}

/// Exhaustive optimal relaxation: enumerate every kept feature subset and
/// every kept subset of the restricted user precedences, keep the maximum
/// value among acyclic candidates. Ties resolve to the lowest feature
/// bitmask, then the lowest precedence bitmask.
pub fn brute_force_optimal(sub: &Subscription) -> Result<(u64, Relaxation), OracleError> {
    let features: Vec<FeatureId> = sub.features().iter().copied().collect();
    let user: Vec<(FeatureId, FeatureId)> = sub.user().iter().collect();
    if features.len() > MAX_FEATURES_OPTIMAL {
        return Err(OracleError::SizeGuard("too many features"));
    }
    if user.len() > MAX_USER_PRECS_OPTIMAL {
        return Err(OracleError::SizeGuard("too many user precedences"));
    }
    let mut best: Option<(u64, Relaxation)> = None;
    for fmask in 0u32..(1 << features.len()) {
        let kept_features: BTreeSet<FeatureId> = features
            .iter()
            .enumerate()
            .filter(|(k, _)| fmask >> k & 1 == 1)
            .map(|(_, &f)| f)
            .collect();
        let nodes: Vec<FeatureId> = kept_features.iter().copied().collect();
        let hard_edges: Vec<(FeatureId, FeatureId)> = sub
            .hard()
            .iter()
            .filter(|(i, j)| kept_features.contains(i) && kept_features.contains(j))
            .collect();
        let candidate_precs: Vec<(FeatureId, FeatureId)> = user
            .iter()
            .filter(|(i, j)| kept_features.contains(i) && kept_features.contains(j))
            .copied()
            .collect();
        for pmask in 0u32..(1 << candidate_precs.len()) {
            let kept: Vec<(FeatureId, FeatureId)> = candidate_precs
                .iter()
                .enumerate()
                .filter(|(k, _)| pmask >> k & 1 == 1)
                .map(|(_, &p)| p)
                .collect();
            let mut edges = hard_edges.clone();
            edges.extend(kept.iter().copied());
            if !is_acyclic_dfs(&nodes, &edges) {
                continue;
            }
            let value = kept_features
                .iter()
                .map(|&f| sub.feature_weight(f))
                .sum::<u64>()
                + kept.iter().map(|&(i, j)| sub.prec_weight(i, j)).sum::<u64>();
            if best.as_ref().map_or(true, |(v, _)| value > *v) {
                best = Some((
                    value,
                    Relaxation {
                        kept_features: kept_features.clone(),
                        kept_precs: kept.iter().copied().collect(),
                        value,
                    },
                ));
            }
        }
    }
    Ok(best.expect("empty relaxation always exists"))
}

/// True iff some permutation of the features extends `H ∪ P`.
pub fn brute_force_consistency(sub: &Subscription) -> Result<bool, OracleError> {
    let features: Vec<FeatureId> = sub.features().iter().copied().collect();
    if features.len() > MAX_FEATURES_CONSISTENCY {
        return Err(OracleError::SizeGuard("too many features"));
    }
    let rel = sub.hard().union(sub.user());
    let n = features.len();
    Ok(features
        .into_iter()
        .permutations(n)
        .any(|perm| TotalOrder(perm).extends(&rel)))
}

/// All compatible pairs of source/target total orders, by filtering every
/// permutation pair through the three compatibility conditions: the orders
/// extend their region's `H ∪ P`, and reversible features appear in inverse
/// order.
pub fn brute_force_pairs(bi: &BiRegionSubscription) -> Result<BTreeSet<OrderPair>, OracleError> {
    let source: Vec<FeatureId> = bi.source_features.iter().copied().collect();
    let target: Vec<FeatureId> = bi.target_features.iter().copied().collect();
    if source.len() > MAX_REGION_FEATURES || target.len() > MAX_REGION_FEATURES {
        return Err(OracleError::SizeGuard("region too large"));
    }
    let source_rel = bi.source_hard.union(&bi.source_user);
    let target_rel = bi.target_hard.union(&bi.target_user);
    let reversible = bi.reversible();
    let (ns, nt) = (source.len(), target.len());
    let source_orders: Vec<TotalOrder> = source
        .into_iter()
        .permutations(ns)
        .map(TotalOrder)
        .filter(|t| t.extends(&source_rel))
        .collect();
    let target_orders: Vec<TotalOrder> = target
        .into_iter()
        .permutations(nt)
        .map(TotalOrder)
        .filter(|t| t.extends(&target_rel))
        .collect();
    let mut out = BTreeSet::new();
    for ts in &source_orders {
        let spairs = ts.pairs();
        for tt in &target_orders {
            let tpairs = tt.pairs();
            let inverse_ok = reversible.iter().tuple_combinations().all(|(&f, &g)| {
                spairs.contains(f, g) == tpairs.contains(g, f)
            });
            if inverse_ok {
                out.insert(OrderPair {
                    source_order: ts.clone(),
                    target_order: tt.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// Minimum feedback vertex set size by enumeration over vertex subsets,
/// for cross-checking the unit-weight, no-user-precedence special case.
pub fn brute_force_fvs(nodes: &[FeatureId], edges: &PrecSet) -> usize {
    let n = nodes.len();
    assert!(n <= MAX_FEATURES_OPTIMAL);
    (0u32..(1 << n))
        .filter(|mask| {
            let kept: Vec<FeatureId> = nodes
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 0)
                .map(|(_, &f)| f)
                .collect();
            let kept_set: BTreeSet<FeatureId> = kept.iter().copied().collect();
            let e: Vec<_> = edges
                .iter()
                .filter(|(i, j)| kept_set.contains(i) && kept_set.contains(j))
                .collect();
            is_acyclic_dfs(&kept, &e)
        })
        .map(|mask| mask.count_ones() as usize)
        .min()
        .unwrap()
}
