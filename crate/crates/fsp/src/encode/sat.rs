//! The three MaxSAT encodings: atom-based (explicit asymmetry and
//! transitivity over precedence atoms, optionally reduced to the transitive
//! closure of H ∪ P) and the two symbol-based position encodings (unary and
//! binary), which enforce acyclicity implicitly through per-feature position
//! variables.

use std::collections::BTreeMap;

use crate::model::{transitive_closure, FeatureId, PrecSet, Subscription};

use super::{ClauseGroup, Lit, VarRole, WeightedClauseSet};

struct Builder {
    set: WeightedClauseSet,
    feature_var: BTreeMap<FeatureId, usize>,
    prec_var: BTreeMap<(FeatureId, FeatureId), usize>,
    bit_var: BTreeMap<(FeatureId, u32), usize>,
}

impl Builder {
    fn new() -> Self {
        Self {
            set: WeightedClauseSet {
                roles: Vec::new(),
                clauses: Vec::new(),
            },
            feature_var: BTreeMap::new(),
            prec_var: BTreeMap::new(),
            bit_var: BTreeMap::new(),
        }
    }

    fn add_var(&mut self, role: VarRole) -> usize {
        self.set.roles.push(role);
        self.set.roles.len()
    }

    /// Declares bf variables (sorted by id), then bp variables for the
    /// given pair domain (sorted pair order).
    fn declare_problem_vars(&mut self, sub: &Subscription, pair_domain: &PrecSet) {
        for &f in sub.features() {
            let v = self.add_var(VarRole::Feature(f));
            self.feature_var.insert(f, v);
        }
        for (i, j) in pair_domain.iter() {
            let v = self.add_var(VarRole::Prec(i, j));
            self.prec_var.insert((i, j), v);
        }
    }

    fn bf(&self, f: FeatureId) -> Lit {
        self.feature_var[&f] as Lit
    }

    fn bp(&self, i: FeatureId, j: FeatureId) -> Lit {
        self.prec_var[&(i, j)] as Lit
    }

    fn bit(&self, f: FeatureId, k: u32) -> Lit {
        self.bit_var[&(f, k)] as Lit
    }

    fn hard(&mut self, lits: Vec<Lit>, group: ClauseGroup) {
        self.set.push(None, lits, group);
    }

    /// Catalogue clauses ⟨⊤, (¬bf_i ∨ ¬bf_j ∨ bp_ij)⟩ for every H pair.
    fn catalogue_clauses(&mut self, sub: &Subscription) {
        for (i, j) in sub.hard().iter() {
            let clause = vec![-self.bf(i), -self.bf(j), self.bp(i, j)];
            self.hard(clause, ClauseGroup::CatalogueHard);
        }
    }

    /// Support clauses ⟨⊤, (¬bp_ij ∨ bf_i)⟩, ⟨⊤, (¬bp_ij ∨ bf_j)⟩ for every
    /// pair carrying a bp variable.
    fn support_clauses(&mut self) {
        let pairs: Vec<(FeatureId, FeatureId)> = self.prec_var.keys().copied().collect();
        for (i, j) in pairs {
            self.hard(vec![-self.bp(i, j), self.bf(i)], ClauseGroup::Support);
            self.hard(vec![-self.bp(i, j), self.bf(j)], ClauseGroup::Support);
        }
    }

    /// Soft clauses ⟨w(i), bf_i⟩ and ⟨w(i≺j), bp_ij⟩.
    fn soft_clauses(&mut self, sub: &Subscription) {
        for &f in sub.features() {
            let lit = self.bf(f);
            self.set
                .push(Some(sub.feature_weight(f)), vec![lit], ClauseGroup::SoftFeature);
        }
        for (i, j) in sub.user().iter() {
            let lit = self.bp(i, j);
            self.set
                .push(Some(sub.prec_weight(i, j)), vec![lit], ClauseGroup::SoftPrec);
        }
    }
}

/// Atom-based encoding. Unreduced, the pair domain is every ordered pair
/// over F; reduced, it is the irreflexive transitive closure of H ∪ P, and
/// transitivity clauses already entailed by the catalogue clauses (any of
/// j≺i, k≺j, i≺k in H) are dropped.
pub fn encode_atom(sub: &Subscription, reduced: bool) -> WeightedClauseSet {
    let mut b = Builder::new();
    let pair_domain: PrecSet = if reduced {
        transitive_closure(&sub.hard().union(sub.user()), sub.features()).pairs
    } else {
        let mut all = PrecSet::new();
        for &i in sub.features() {
            for &j in sub.features() {
                if i != j {
                    all.insert(i, j).unwrap();
                }
            }
        }
        all
    };
    b.declare_problem_vars(sub, &pair_domain);
    b.catalogue_clauses(sub);
    for (i, j) in pair_domain.iter() {
        if i < j && pair_domain.contains(j, i) {
            b.hard(vec![-b.bp(i, j), -b.bp(j, i)], ClauseGroup::Asymmetry);
        }
    }
    for (i, j) in pair_domain.iter() {
        for (j2, k) in pair_domain.iter() {
            if j2 != j || k == i {
                continue;
            }
            if reduced
                && (sub.hard().contains(j, i) || sub.hard().contains(k, j) || sub.hard().contains(i, k))
            {
                continue;
            }
            debug_assert!(pair_domain.contains(i, k));
            b.hard(
                vec![-b.bp(i, j), -b.bp(j, k), b.bp(i, k)],
                ClauseGroup::Transitivity,
            );
        }
    }
    b.support_clauses();
    b.soft_clauses(sub);
    b.set
}

/// Symbol-based unary encoding: n position bits per feature with the order
/// chain ¬m_{k+1} ∨ m_k, bp variables only for H ∪ P, and per precedence the
/// schema (¬bp ∨ ¬i_n), (¬bp ∨ j_1), and (¬bp ∨ ¬i_k ∨ j_{k+1}) for
/// 1 ≤ k ≤ n−1.
pub fn encode_symbol_unary(sub: &Subscription) -> WeightedClauseSet {
    let mut b = Builder::new();
    let pair_domain = sub.hard().union(sub.user());
    b.declare_problem_vars(sub, &pair_domain);
    let n = sub.features().len() as u32;
    for &f in sub.features() {
        for k in 1..=n {
            let v = b.add_var(VarRole::PositionBit(f, k));
            b.bit_var.insert((f, k), v);
        }
    }
    b.catalogue_clauses(sub);
    b.support_clauses();
    for &f in sub.features() {
        for k in 1..n {
            b.hard(vec![-b.bit(f, k + 1), b.bit(f, k)], ClauseGroup::OrderBit);
        }
    }
    for (i, j) in pair_domain.iter() {
        let bp = b.bp(i, j);
        b.hard(vec![-bp, -b.bit(i, n)], ClauseGroup::PrecedenceDef);
        b.hard(vec![-bp, b.bit(j, 1)], ClauseGroup::PrecedenceDef);
        for k in 1..n {
            b.hard(
                vec![-bp, -b.bit(i, k), b.bit(j, k + 1)],
                ClauseGroup::PrecedenceDef,
            );
        }
    }
    b.soft_clauses(sub);
    b.set
}

/// Symbol-based binary encoding: κ = ⌈log₂ n⌉ position bits per feature
/// (at least one), most significant first, and per precedence the
/// lexicographic comparator LT_m ≡ (¬i_m ∧ j_m) ∨ ((i_m ↔ j_m) ∧ LT_{m+1})
/// flattened by Tseitin equivalences. With a single bit the comparator
/// collapses to the two clauses (¬bp ∨ ¬i_1), (¬bp ∨ j_1).
pub fn encode_symbol_binary(sub: &Subscription) -> WeightedClauseSet {
    let mut b = Builder::new();
    let pair_domain = sub.hard().union(sub.user());
    b.declare_problem_vars(sub, &pair_domain);
    let n = sub.features().len();
    let kappa = if n <= 2 {
        1
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as u32
    };
    for &f in sub.features() {
        for m in 1..=kappa {
            let v = b.add_var(VarRole::PositionBit(f, m));
            b.bit_var.insert((f, m), v);
        }
    }
    b.catalogue_clauses(sub);
    b.support_clauses();
    for (i, j) in pair_domain.iter() {
        let bp = b.bp(i, j);
        if kappa == 1 {
            b.hard(vec![-bp, -b.bit(i, 1)], ClauseGroup::PrecedenceDef);
            b.hard(vec![-bp, b.bit(j, 1)], ClauseGroup::PrecedenceDef);
            continue;
        }
        // lt_m ⇔ LT_m, defined top-down; bp ⇒ lt_1.
        let lt: Vec<Lit> = (1..=kappa)
            .map(|m| b.add_var(VarRole::Aux(format!("lt[{i},{j},{m}]"))) as Lit)
            .collect();
        b.hard(vec![-bp, lt[0]], ClauseGroup::PrecedenceDef);
        for m in 1..=kappa {
            let (im, jm) = (b.bit(i, m), b.bit(j, m));
            let ltm = lt[(m - 1) as usize];
            if m == kappa {
                // lt_κ ⇔ (¬i_κ ∧ j_κ)
                b.hard(vec![-ltm, -im], ClauseGroup::PrecedenceDef);
                b.hard(vec![-ltm, jm], ClauseGroup::PrecedenceDef);
                b.hard(vec![ltm, im, -jm], ClauseGroup::PrecedenceDef);
            } else {
                let a = b.add_var(VarRole::Aux(format!("first[{i},{j},{m}]"))) as Lit;
                let eq = b.add_var(VarRole::Aux(format!("eq[{i},{j},{m}]"))) as Lit;
                let rest = b.add_var(VarRole::Aux(format!("rest[{i},{j},{m}]"))) as Lit;
                // a ⇔ (¬i_m ∧ j_m)
                b.hard(vec![-a, -im], ClauseGroup::PrecedenceDef);
                b.hard(vec![-a, jm], ClauseGroup::PrecedenceDef);
                b.hard(vec![a, im, -jm], ClauseGroup::PrecedenceDef);
                // eq ⇔ (i_m ↔ j_m)
                b.hard(vec![-eq, -im, jm], ClauseGroup::PrecedenceDef);
                b.hard(vec![-eq, im, -jm], ClauseGroup::PrecedenceDef);
                b.hard(vec![eq, im, jm], ClauseGroup::PrecedenceDef);
                b.hard(vec![eq, -im, -jm], ClauseGroup::PrecedenceDef);
                // rest ⇔ (eq ∧ lt_{m+1})
                let next = lt[m as usize];
                b.hard(vec![-rest, eq], ClauseGroup::PrecedenceDef);
                b.hard(vec![-rest, next], ClauseGroup::PrecedenceDef);
                b.hard(vec![rest, -eq, -next], ClauseGroup::PrecedenceDef);
                // lt_m ⇔ (a ∨ rest)
                b.hard(vec![-ltm, a, rest], ClauseGroup::PrecedenceDef);
                b.hard(vec![ltm, -a], ClauseGroup::PrecedenceDef);
                b.hard(vec![ltm, -rest], ClauseGroup::PrecedenceDef);
            }
        }
    }
    b.soft_clauses(sub);
    b.set
}

#[cfg(test)]
mod tests {
    use super::super::test_util::*;
    use super::*;
    use crate::encode::wcnf_min_cost;
    use crate::oracle::brute_force_optimal;

    /// Six features in three mutually exclusive pairs, no user precedences.
    fn three_mutex_sub() -> Subscription {
        unit_sub(
            6,
            &[1, 2, 3, 4, 5, 6],
            &[(1, 2), (2, 1), (3, 4), (4, 3), (5, 6), (6, 5)],
            &[],
        )
    }

    #[test]
    fn naive_census_on_three_mutex_example() {
        let clauses = encode_atom(&three_mutex_sub(), false);
        assert_eq!(clauses.count_group(ClauseGroup::Transitivity), 120);
        assert_eq!(clauses.count_group(ClauseGroup::Asymmetry), 15);
        // Θ(n²) bp variables: all ordered pairs.
        let bp_count = clauses
            .roles
            .iter()
            .filter(|r| matches!(r, VarRole::Prec(_, _)))
            .count();
        assert_eq!(bp_count, 30);
    }

    #[test]
    fn reduced_census_on_three_mutex_example() {
        let clauses = encode_atom(&three_mutex_sub(), true);
        assert_eq!(clauses.count_group(ClauseGroup::Transitivity), 0);
        assert_eq!(clauses.count_group(ClauseGroup::Asymmetry), 3);
    }

    #[test]
    fn single_free_feature_is_one_soft_clause() {
        let sub = unit_sub(1, &[1], &[], &[]);
        let clauses = encode_atom(&sub, false);
        assert_eq!(clauses.clauses.len(), 1);
        assert_eq!(clauses.clauses[0].weight, Some(1));
        assert_eq!(clauses.clauses[0].lits, vec![1]);
    }

    #[test]
    fn reduced_drops_entailed_transitivity() {
        // With 1<3 also in H, the clause bp_12 ∧ bp_23 ⇒ bp_13 is entailed
        // by the catalogue clauses and gets dropped.
        let sub = unit_sub(3, &[1, 2, 3], &[(1, 2), (2, 3), (1, 3)], &[]);
        let clauses = encode_atom(&sub, true);
        assert_eq!(clauses.count_group(ClauseGroup::Transitivity), 0);
        // Without it, the clause is kept.
        let sub = unit_sub(3, &[1, 2, 3], &[(1, 2), (2, 3)], &[]);
        let clauses = encode_atom(&sub, true);
        assert_eq!(clauses.count_group(ClauseGroup::Transitivity), 1);
    }

    #[test]
    fn unary_schema_for_one_precedence() {
        let sub = unit_sub(3, &[1, 2, 3], &[], &[(1, 2)]);
        let clauses = encode_symbol_unary(&sub);
        let bp = clauses.var_for(&VarRole::Prec(fid(1), fid(2))).unwrap() as Lit;
        let bit = |f: u32, k: u32| {
            clauses
                .var_for(&VarRole::PositionBit(fid(f), k))
                .unwrap() as Lit
        };
        let defs: Vec<Vec<Lit>> = clauses
            .clauses
            .iter()
            .filter(|c| c.group == ClauseGroup::PrecedenceDef)
            .map(|c| c.lits.clone())
            .collect();
        assert_eq!(
            defs,
            vec![
                vec![-bp, -bit(1, 3)],
                vec![-bp, bit(2, 1)],
                vec![-bp, -bit(1, 1), bit(2, 2)],
                vec![-bp, -bit(1, 2), bit(2, 3)],
            ]
        );
    }

    #[test]
    fn unary_clause_count_is_theta_kn() {
        // k = |H ∪ P| precedence pairs, n bits each: n+1 definition clauses
        // per pair.
        let sub = unit_sub(4, &[1, 2, 3, 4], &[(1, 2), (3, 4)], &[(2, 3)]);
        let clauses = encode_symbol_unary(&sub);
        assert_eq!(clauses.count_group(ClauseGroup::PrecedenceDef), 3 * (4 + 1));
        assert_eq!(clauses.count_group(ClauseGroup::OrderBit), 4 * 3);
    }

    #[test]
    fn binary_single_bit_collapses_to_unit_style_clauses() {
        let sub = unit_sub(2, &[1, 2], &[], &[(1, 2)]);
        let clauses = encode_symbol_binary(&sub);
        let bp = clauses.var_for(&VarRole::Prec(fid(1), fid(2))).unwrap() as Lit;
        let i1 = clauses.var_for(&VarRole::PositionBit(fid(1), 1)).unwrap() as Lit;
        let j1 = clauses.var_for(&VarRole::PositionBit(fid(2), 1)).unwrap() as Lit;
        let defs: Vec<Vec<Lit>> = clauses
            .clauses
            .iter()
            .filter(|c| c.group == ClauseGroup::PrecedenceDef)
            .map(|c| c.lits.clone())
            .collect();
        assert_eq!(defs, vec![vec![-bp, -i1], vec![-bp, j1]]);
        assert!(!clauses.roles.iter().any(|r| matches!(r, VarRole::Aux(_))));
    }

    #[test]
    fn position_bit_widths_match_feature_counts() {
        for (n, unary_bits, binary_bits) in [(2u32, 2u32, 1u32), (4, 4, 2), (6, 6, 3)] {
            let features: Vec<u32> = (1..=n).collect();
            let sub = unit_sub(n, &features, &[(1, 2)], &[]);
            let unary = encode_symbol_unary(&sub);
            let binary = encode_symbol_binary(&sub);
            for &f in sub.features() {
                let count = |set: &WeightedClauseSet| {
                    set.roles
                        .iter()
                        .filter(|r| matches!(r, VarRole::PositionBit(g, _) if *g == f))
                        .count() as u32
                };
                assert_eq!(count(&unary), unary_bits);
                assert_eq!(count(&binary), binary_bits);
            }
        }
    }

    #[test]
    fn all_encodings_agree_with_oracle_on_mixed_instance() {
        let sub = unit_sub(4, &[1, 2, 3, 4], &[(1, 2), (2, 1)], &[(2, 3), (3, 2)]);
        let (opt, _) = brute_force_optimal(&sub).unwrap();
        let total = sub.total_weight();
        for clauses in [
            encode_atom(&sub, false),
            encode_atom(&sub, true),
            encode_symbol_unary(&sub),
            encode_symbol_binary(&sub),
        ] {
            assert_eq!(wcnf_min_cost(&clauses), Some(total - opt));
        }
    }
}
