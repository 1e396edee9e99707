//! Symmetry-aware enumeration of compatible source/target total-order pairs,
//! with lazy generation and anti-subscription-based ranking.
//!
//! The generator loops over total orders of the reversible-feature restriction
//! and, for each, pairs the source extensions with the target extensions, so
//! no ordering is imposed between non-reversible source and target features
//! and every compatible pair is produced exactly once.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{
    self, anti_subscription, reformulate, transitive_closure, BiRegionSubscription, Catalogue,
    FeatureId, ModelError, PrecSet, Subscription, TotalOrder,
};

/// A compatible pair of total orders on source and target features.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct OrderPair {
    pub source_order: TotalOrder,
    pub target_order: TotalOrder,
}

/// Lazy backtracking generator of all total orders extending an acyclic base
/// relation. Branches on the smallest available id first, so the stream is
/// deterministic and lexicographic.
pub struct LinearExtensions {
    ids: Vec<FeatureId>,
    succ: Vec<Vec<usize>>,
    indegree: Vec<usize>,
    // Stack of (chosen index, candidates tried so far at this depth).
    prefix: Vec<usize>,
    choices: Vec<Vec<usize>>,
    used: Vec<bool>,
    started: bool,
    remaining: Option<usize>,
}

impl LinearExtensions {
    /// Errors when `base` is cyclic over `universe`.
    pub fn new(
        base: &PrecSet,
        universe: &BTreeSet<FeatureId>,
        limit: Option<usize>,
    ) -> Result<Self, ModelError> {
        if model::topological_order(base, universe).is_none() {
            return Err(ModelError::Inconsistent);
        }
        let ids: Vec<FeatureId> = universe.iter().copied().collect();
        let index: BTreeMap<FeatureId, usize> =
            ids.iter().enumerate().map(|(k, &f)| (f, k)).collect();
        let n = ids.len();
        let mut succ = vec![Vec::new(); n];
        let mut indegree = vec![0usize; n];
        for (i, j) in base.iter() {
            succ[index[&i]].push(index[&j]);
            indegree[index[&j]] += 1;
        }
        Ok(Self {
            ids,
            succ,
            indegree,
            prefix: Vec::new(),
            choices: Vec::new(),
            used: vec![false; n],
            started: false,
            remaining: limit,
        })
    }

    fn ready(&self) -> Vec<usize> {
        (0..self.ids.len())
            .filter(|&k| !self.used[k] && self.indegree[k] == 0)
            .collect()
    }

    fn push(&mut self, k: usize) {
        self.used[k] = true;
        for c in 0..self.succ[k].len() {
            let m = self.succ[k][c];
            self.indegree[m] -= 1;
        }
        self.prefix.push(k);
    }

    fn pop(&mut self) -> usize {
        let k = self.prefix.pop().unwrap();
        self.used[k] = false;
        for c in 0..self.succ[k].len() {
            let m = self.succ[k][c];
            self.indegree[m] += 1;
        }
        k
    }

    /// Advance to the next complete extension; None when exhausted.
    fn advance(&mut self) -> Option<TotalOrder> {
        let n = self.ids.len();
        if !self.started {
            self.started = true;
            // Descend along smallest-ready choices to the first extension.
            while self.prefix.len() < n {
                let ready = self.ready();
                let &k = ready.first()?; // ready is non-empty: base is acyclic
                self.choices.push(ready);
                self.push(k);
            }
            return Some(self.order());
        }
        // Backtrack: replace the deepest choice that still has alternatives.
        loop {
            if self.prefix.is_empty() {
                return None;
            }
            let k = self.pop();
            let ready = self.choices.pop().unwrap();
            let pos = ready.iter().position(|&r| r == k).unwrap();
            if pos + 1 < ready.len() {
                let next = ready[pos + 1];
                self.choices.push(ready);
                self.push(next);
                while self.prefix.len() < n {
                    let ready = self.ready();
                    let &k = ready.first().unwrap();
                    self.choices.push(ready);
                    self.push(k);
                }
                return Some(self.order());
            }
        }
    }

    fn order(&self) -> TotalOrder {
        TotalOrder(self.prefix.iter().map(|&k| self.ids[k]).collect())
    }
}

impl Iterator for LinearExtensions {
    type Item = TotalOrder;

    fn next(&mut self) -> Option<TotalOrder> {
        if let Some(r) = self.remaining.as_mut() {
            if *r == 0 {
                return None;
            }
            *r -= 1;
        }
        self.advance()
    }
}

/// All total orders extending `base` over `universe`, lazily, in
/// deterministic lexicographic order; stops after `limit` when given.
pub fn linear_extensions(
    base: &PrecSet,
    universe: &BTreeSet<FeatureId>,
    limit: Option<usize>,
) -> Result<LinearExtensions, ModelError> {
    LinearExtensions::new(base, universe, limit)
}

/// Lazy stream of compatible order pairs. Outer loop: total orders on the
/// reversible features extending the closure's restriction; inner loop:
/// product of source and target extensions of that reversible order.
pub struct Solutions {
    source_features: BTreeSet<FeatureId>,
    target_features: BTreeSet<FeatureId>,
    source_base: PrecSet,
    target_base: PrecSet,
    reversible_orders: LinearExtensions,
    current_source: Option<LinearExtensions>,
    current_source_order: Option<TotalOrder>,
    // Target extensions for the current reversible order; regenerated per
    // source order would also work but caching keeps the product cheap.
    current_targets: Vec<TotalOrder>,
    current_target_idx: usize,
    current_target_base: PrecSet,
    remaining: Option<usize>,
}

/// Enumerates every compatible pair of total orders exactly once, lazily.
pub fn get_solutions(
    bi: &BiRegionSubscription,
    limit: Option<usize>,
) -> Result<Solutions, ModelError> {
    let merged = reformulate(bi)?;
    let closure = transitive_closure(
        &merged.sub.hard().union(merged.sub.user()),
        merged.sub.features(),
    );
    if closure.cyclic {
        return Err(ModelError::Inconsistent);
    }
    let reversible = merged.reversible();
    let source_base = closure.pairs.restrict(&merged.source_features);
    let target_base = closure.pairs.restrict(&merged.target_features);
    let reversible_base = closure.pairs.restrict(&reversible);
    let reversible_orders = LinearExtensions::new(&reversible_base, &reversible, None)?;
    Ok(Solutions {
        source_features: merged.source_features,
        target_features: merged.target_features,
        source_base,
        target_base,
        reversible_orders,
        current_source: None,
        current_source_order: None,
        current_targets: Vec::new(),
        current_target_idx: 0,
        current_target_base: PrecSet::new(),
        remaining: limit,
    })
}

impl Solutions {
    fn next_reversible(&mut self) -> bool {
        for rev in self.reversible_orders.by_ref() {
            let rev_pairs = rev.pairs();
            let source_base = self.source_base.union(&rev_pairs);
            let target_base = self.target_base.union(&rev_pairs);
            // Both restrictions extend the consistent closure, so neither
            // side can be cyclic here.
            let source =
                LinearExtensions::new(&source_base, &self.source_features, None).unwrap();
            let targets: Vec<TotalOrder> =
                LinearExtensions::new(&target_base, &self.target_features, None)
                    .unwrap()
                    .collect();
            if targets.is_empty() {
                continue;
            }
            self.current_source = Some(source);
            self.current_source_order = None;
            self.current_targets = targets;
            self.current_target_idx = 0;
            self.current_target_base = target_base;
            return true;
        }
        false
    }
}

impl Iterator for Solutions {
    type Item = OrderPair;

    fn next(&mut self) -> Option<OrderPair> {
        if let Some(r) = self.remaining.as_mut() {
            if *r == 0 {
                return None;
            }
            *r -= 1;
        }
        loop {
            if self.current_source.is_none() && !self.next_reversible() {
                return None;
            }
            if self.current_source_order.is_none()
                || self.current_target_idx >= self.current_targets.len()
            {
                match self.current_source.as_mut().unwrap().next() {
                    Some(order) => {
                        self.current_source_order = Some(order);
                        self.current_target_idx = 0;
                    }
                    None => {
                        self.current_source = None;
                        continue;
                    }
                }
            }
            let target_merged = &self.current_targets[self.current_target_idx];
            self.current_target_idx += 1;
            // Orders were generated in the merged orientation; the target
            // order is reported transposed, i.e. reversed.
            return Some(OrderPair {
                source_order: self.current_source_order.clone().unwrap(),
                target_order: target_merged.reversed(),
            });
        }
    }
}

/// Checks the three compatibility conditions for a pair against a bi-region
/// subscription. The union of the two orders need not be total.
pub fn pair_is_compatible(bi: &BiRegionSubscription, pair: &OrderPair) -> bool {
    let source_set: BTreeSet<FeatureId> = pair.source_order.0.iter().copied().collect();
    let target_set: BTreeSet<FeatureId> = pair.target_order.0.iter().copied().collect();
    if source_set != bi.source_features || target_set != bi.target_features {
        return false;
    }
    if !pair.source_order.extends(&bi.source_hard.union(&bi.source_user)) {
        return false;
    }
    if !pair.target_order.extends(&bi.target_hard.union(&bi.target_user)) {
        return false;
    }
    let spairs = pair.source_order.pairs();
    let tpairs = pair.target_order.pairs();
    let reversible = bi.reversible();
    for &f in &reversible {
        for &g in &reversible {
            if f != g && spairs.contains(f, g) != tpairs.contains(g, f) {
                return false;
            }
        }
    }
    true
}

/// Anti-subscription size of a pair: the pair's orders (merged orientation)
/// become the user precedence set of a probe subscription over the merged
/// catalogue, and the key is |F_a| + |P_a|.
pub fn pair_rank_key(
    cat: &Catalogue,
    bi: &BiRegionSubscription,
    pair: &OrderPair,
) -> Result<usize, ModelError> {
    let features: BTreeSet<FeatureId> = bi
        .source_features
        .union(&bi.target_features)
        .copied()
        .collect();
    let induced = pair
        .source_order
        .pairs()
        .union(&pair.target_order.pairs().transpose());
    let probe = Subscription::unit_weights(cat.clone(), features, induced)?;
    Ok(anti_subscription(&probe, false)?.size())
}

/// Sorts pairs by ascending anti-subscription size; stable, so ties keep
/// their enumeration order.
pub fn rank_pairs(
    cat: &Catalogue,
    bi: &BiRegionSubscription,
    pairs: Vec<OrderPair>,
) -> Result<Vec<OrderPair>, ModelError> {
    let mut keyed: Vec<(usize, OrderPair)> = pairs
        .into_iter()
        .map(|p| Ok((pair_rank_key(cat, bi, &p)?, p)))
        .collect::<Result<_, ModelError>>()?;
    keyed.sort_by_key(|(k, _)| *k);
    Ok(keyed.into_iter().map(|(_, p)| p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BiRegionCatalogue;

    fn fid(i: u32) -> FeatureId {
        FeatureId(i)
    }

    fn fids(ids: &[u32]) -> BTreeSet<FeatureId> {
        ids.iter().map(|&i| fid(i)).collect()
    }

    fn precs(pairs: &[(u32, u32)]) -> PrecSet {
        pairs.iter().map(|&(i, j)| (fid(i), fid(j))).collect()
    }

    fn order(ids: &[u32]) -> TotalOrder {
        TotalOrder(ids.iter().map(|&i| fid(i)).collect())
    }

    fn example_bi() -> BiRegionSubscription {
        let cat = BiRegionCatalogue::new(
            fids(&[1, 2, 3]),
            fids(&[2, 3, 4]),
            precs(&[(1, 2)]),
            precs(&[(4, 3)]),
        )
        .unwrap();
        BiRegionSubscription::new(
            &cat,
            fids(&[1, 2, 3]),
            fids(&[2, 3, 4]),
            PrecSet::new(),
            PrecSet::new(),
        )
        .unwrap()
    }

    #[test]
    fn extensions_of_empty_base() {
        let exts: Vec<_> = linear_extensions(&PrecSet::new(), &fids(&[1, 2, 3]), None)
            .unwrap()
            .collect();
        assert_eq!(exts.len(), 6);
        assert_eq!(exts[0], order(&[1, 2, 3]));
        assert_eq!(exts[5], order(&[3, 2, 1]));
    }

    #[test]
    fn extensions_of_two_chains() {
        let exts: Vec<_> =
            linear_extensions(&precs(&[(1, 2), (3, 4)]), &fids(&[1, 2, 3, 4]), None)
                .unwrap()
                .collect();
        assert_eq!(exts.len(), 6);
        for e in &exts {
            assert!(e.extends(&precs(&[(1, 2), (3, 4)])));
        }
    }

    #[test]
    fn extension_of_total_order_is_itself() {
        let exts: Vec<_> =
            linear_extensions(&precs(&[(2, 1), (1, 3)]), &fids(&[1, 2, 3]), None)
                .unwrap()
                .collect();
        assert_eq!(exts, vec![order(&[2, 1, 3])]);
    }

    #[test]
    fn extensions_respect_limit() {
        let exts: Vec<_> = linear_extensions(&PrecSet::new(), &fids(&[1, 2, 3]), Some(2))
            .unwrap()
            .collect();
        assert_eq!(exts.len(), 2);
    }

    #[test]
    fn cyclic_base_is_rejected() {
        assert!(linear_extensions(&precs(&[(1, 2), (2, 1)]), &fids(&[1, 2]), None).is_err());
    }

    #[test]
    fn example_yields_the_five_listed_pairs() {
        let pairs: BTreeSet<OrderPair> = get_solutions(&example_bi(), None).unwrap().collect();
        let expected: BTreeSet<OrderPair> = [
            (order(&[1, 2, 3]), order(&[4, 3, 2])),
            (order(&[1, 3, 2]), order(&[4, 2, 3])),
            (order(&[1, 3, 2]), order(&[2, 4, 3])),
            (order(&[3, 1, 2]), order(&[4, 2, 3])),
            (order(&[3, 1, 2]), order(&[2, 4, 3])),
        ]
        .into_iter()
        .map(|(source_order, target_order)| OrderPair {
            source_order,
            target_order,
        })
        .collect();
        assert_eq!(pairs, expected);
    }

    #[test]
    fn no_reversibles_means_full_product() {
        let cat = BiRegionCatalogue::new(
            fids(&[1, 2]),
            fids(&[3, 4]),
            PrecSet::new(),
            PrecSet::new(),
        )
        .unwrap();
        let bi = BiRegionSubscription::new(
            &cat,
            fids(&[1, 2]),
            fids(&[3, 4]),
            PrecSet::new(),
            PrecSet::new(),
        )
        .unwrap();
        let pairs: Vec<_> = get_solutions(&bi, None).unwrap().collect();
        assert_eq!(pairs.len(), 4);
    }

    #[test]
    fn solutions_match_brute_force_on_example() {
        let bi = example_bi();
        let lazy: BTreeSet<OrderPair> = get_solutions(&bi, None).unwrap().collect();
        let brute = crate::oracle::brute_force_pairs(&bi).unwrap();
        assert_eq!(lazy, brute);
    }

    #[test]
    fn every_emitted_pair_is_compatible() {
        let bi = example_bi();
        for pair in get_solutions(&bi, None).unwrap() {
            assert!(pair_is_compatible(&bi, &pair));
        }
    }

    #[test]
    fn union_of_pair_orders_need_not_be_total() {
        // For the pair (3<1<2, 3<4<2) there is no order between 1 and 4,
        // yet the pair is compatible.
        let bi = example_bi();
        let pair = OrderPair {
            source_order: order(&[3, 1, 2]),
            target_order: order(&[2, 4, 3]),
        };
        assert!(pair_is_compatible(&bi, &pair));
        let union = pair
            .source_order
            .pairs()
            .union(&pair.target_order.pairs().transpose());
        assert!(!union.contains(fid(1), fid(4)) && !union.contains(fid(4), fid(1)));
    }

    #[test]
    fn rank_pairs_orders_by_key() {
        let bi = example_bi();
        let cat = crate::model::reformulate(&bi).unwrap().sub.catalogue().clone();
        let pairs: Vec<OrderPair> = get_solutions(&bi, None).unwrap().collect();
        let single = rank_pairs(&cat, &bi, vec![pairs[0].clone()]).unwrap();
        assert_eq!(single, vec![pairs[0].clone()]);
        let ranked = rank_pairs(&cat, &bi, pairs.clone()).unwrap();
        let keys: Vec<usize> = ranked
            .iter()
            .map(|p| pair_rank_key(&cat, &bi, p).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(ranked.len(), pairs.len());
    }
}
