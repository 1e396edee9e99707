//! Weighted CSP formulation: one position variable per feature with domain
//! {0,…,|F|} where 0 means excluded, a unary cost for exclusion, and binary
//! cost tables enforcing hard precedences (cost k) and charging dropped user
//! precedences their weight.

use crate::model::{FeatureId, Subscription};

/// Full (n+1)×(n+1) cost table between two position variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryCost {
    /// Variable indices into the model's feature list.
    pub i: usize,
    pub j: usize,
    /// Row-major: cost of (a, b) at `a * (n + 1) + b`.
    pub costs: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WcspModel {
    pub features: Vec<FeatureId>,
    /// Domain of each variable is {0, …, n}.
    pub n: usize,
    /// Maximum acceptable cost: the sum of all weights. Assignments of cost
    /// ≥ k are inconsistent, so an instance whose optimum relaxation is
    /// empty reports no consistent assignment under this convention.
    pub k: u64,
    /// Unary exclusion costs, indexed per feature then per value.
    pub unary: Vec<Vec<u64>>,
    pub binary: Vec<BinaryCost>,
}

impl WcspModel {
    fn domain(&self) -> usize {
        self.n + 1
    }

    /// Cost of a full assignment under bounded addition a ⊕ b = min(k, a+b).
    pub fn cost(&self, assignment: &[usize]) -> u64 {
        let mut total = 0u64;
        let add = |c: u64, total: &mut u64| *total = (*total + c).min(self.k);
        for (f, table) in self.unary.iter().enumerate() {
            add(table[assignment[f]], &mut total);
        }
        let d = self.domain();
        for bc in &self.binary {
            add(bc.costs[assignment[bc.i] * d + assignment[bc.j]], &mut total);
        }
        total
    }
}

/// Builds the weighted CSP model with fully materialized cost tables.
pub fn encode_wcsp(sub: &Subscription) -> WcspModel {
    let features: Vec<FeatureId> = sub.features().iter().copied().collect();
    let index = |f: FeatureId| features.iter().position(|&g| g == f).unwrap();
    let n = features.len();
    let d = n + 1;
    let k = sub.total_weight();
    let unary = features
        .iter()
        .map(|&f| {
            let w = sub.feature_weight(f);
            (0..d).map(|a| if a == 0 { w } else { 0 }).collect()
        })
        .collect();
    let mut binary = Vec::new();
    for (i, j) in sub.hard().iter() {
        let costs = (0..d * d)
            .map(|cell| {
                let (a, b) = (cell / d, cell % d);
                if a == 0 || b == 0 || a < b {
                    0
                } else {
                    k
                }
            })
            .collect();
        binary.push(BinaryCost {
            i: index(i),
            j: index(j),
            costs,
        });
    }
    for (i, j) in sub.user().iter() {
        let w = sub.prec_weight(i, j);
        let costs = (0..d * d)
            .map(|cell| {
                let (a, b) = (cell / d, cell % d);
                if a != 0 && b != 0 && a < b {
                    0
                } else {
                    w
                }
            })
            .collect();
        binary.push(BinaryCost {
            i: index(i),
            j: index(j),
            costs,
        });
    }
    WcspModel {
        features,
        n,
        k,
        unary,
        binary,
    }
}

/// Minimum cost over every full assignment, or `None` when every assignment
/// reaches k (inconsistent). Enumerates (n+1)^n tuples; small n only.
pub fn wcsp_min_cost(model: &WcspModel) -> Option<u64> {
    let n = model.features.len();
    assert!(n <= 7, "instance too large for exhaustive evaluation");
    let d = model.domain();
    let mut assignment = vec![0usize; n];
    let mut best: Option<u64> = None;
    loop {
        let cost = model.cost(&assignment);
        if cost < model.k && best.map_or(true, |b| cost < b) {
            best = Some(cost);
        }
        // Odometer increment over the d-ary tuple.
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            assignment[pos] += 1;
            if assignment[pos] < d {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_util::*;
    use super::*;
    use crate::oracle::brute_force_optimal;

    #[test]
    fn k_is_total_weight() {
        let sub = unit_sub(2, &[1, 2], &[], &[(1, 2)]);
        let model = encode_wcsp(&sub);
        assert_eq!(model.k, 3);
    }

    #[test]
    fn excluded_feature_disables_hard_cost() {
        let sub = unit_sub(6, &[1, 2, 3, 4, 5, 6], &[(1, 2)], &[]);
        let model = encode_wcsp(&sub);
        let table = &model.binary[0];
        let d = model.n + 1;
        assert_eq!(table.costs[0 * d + 5], 0);
        assert_eq!(table.costs[5 * d + 0], 0);
        assert_eq!(table.costs[5 * d + 2], model.k);
        assert_eq!(table.costs[2 * d + 5], 0);
    }

    #[test]
    fn dropped_user_precedence_costs_its_weight() {
        let sub = unit_sub(2, &[1, 2], &[], &[(1, 2)]);
        let model = encode_wcsp(&sub);
        // Positions 2, 1 violate 1 ≺ 2: unary costs 0, binary costs 1.
        assert_eq!(model.cost(&[2, 1]), 1);
        assert_eq!(model.cost(&[1, 2]), 0);
        // Excluding feature 1 loses both its weight and the precedence.
        assert_eq!(model.cost(&[0, 1]), 2);
    }

    #[test]
    fn min_cost_matches_oracle() {
        let subs = [
            unit_sub(4, &[1, 2, 3, 4], &[(1, 2), (2, 1)], &[(3, 4), (4, 3)]),
            unit_sub(3, &[1, 2, 3], &[], &[(1, 2), (2, 3), (3, 1)]),
            unit_sub(5, &[1, 2, 3, 4, 5], &[(1, 2), (2, 3), (3, 1)], &[]),
        ];
        for sub in subs {
            let (opt, _) = brute_force_optimal(&sub).unwrap();
            let model = encode_wcsp(&sub);
            assert_eq!(wcsp_min_cost(&model), Some(sub.total_weight() - opt));
        }
    }

    #[test]
    fn all_excluded_assignment_is_inconsistent_at_cost_k() {
        let sub = unit_sub(2, &[1, 2], &[(1, 2), (2, 1)], &[]);
        let model = encode_wcsp(&sub);
        assert_eq!(model.cost(&[0, 0]), model.k);
    }
}
