//! Translations of a subscription into equivalent optimization formulations:
//! partial weighted MaxSAT (atom-based and two symbol-based position
//! encodings), weighted CSP cost tables, a mixed-integer program, and a
//! pseudo-Boolean view of any clause set. Includes a unit-propagation engine
//! for comparing encoding strength, decoding of assignments back into
//! relaxations, and bit-exact writers/readers for the solver file formats.

mod io;
mod mip;
mod pb;
mod sat;
mod wcsp;

pub use io::{
    read_lp, read_opb, read_wcnf, read_wcsp, write_lp, write_opb, write_wcnf, write_wcsp,
};
pub use mip::{encode_mip, mip_feasible, mip_optimum, MipInequality, MipModel};
pub use pb::{pb_minimum, to_pseudo_boolean, PbConstraint, PbModel};
pub use sat::{encode_atom, encode_symbol_binary, encode_symbol_unary};
pub use wcsp::{encode_wcsp, wcsp_min_cost, BinaryCost, WcspModel};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{verify_relaxation, FeatureId, ModelError, PrecSet, Relaxation, Subscription};

/// DIMACS-style literal: nonzero, negative for negation, variables 1-based.
pub type Lit = i64;

#[derive(Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("assignment is missing problem variable {0}")]
    MissingVariable(usize),
    #[error("assignment violates a hard clause")]
    HardClauseViolated,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("line {0}: {1}")]
    Parse(usize, String),
}

/// What a propositional variable stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarRole {
    Feature(FeatureId),
    Prec(FeatureId, FeatureId),
    /// k-th position bit of a feature, 1-based.
    PositionBit(FeatureId, u32),
    /// Tseitin auxiliary, labelled for the comment table.
    Aux(String),
}

/// Which schema produced a clause; used for census checks, not emission.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClauseGroup {
    CatalogueHard,
    Asymmetry,
    Transitivity,
    Support,
    /// Unary order chain on position bits.
    OrderBit,
    /// Clauses defining bp ⇒ (position of i < position of j).
    PrecedenceDef,
    SoftFeature,
    SoftPrec,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    /// `None` marks a hard clause (weight ⊤ in files).
    pub weight: Option<u64>,
    pub lits: Vec<Lit>,
    pub group: ClauseGroup,
}

/// A partial weighted MaxSAT instance plus the variable-role table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedClauseSet {
    /// Role of variable v is `roles[v - 1]`.
    pub roles: Vec<VarRole>,
    pub clauses: Vec<Clause>,
}

impl WeightedClauseSet {
    pub fn n_vars(&self) -> usize {
        self.roles.len()
    }

    /// File representation of ⊤: one more than the sum of soft weights.
    pub fn top(&self) -> u64 {
        self.clauses.iter().filter_map(|c| c.weight).sum::<u64>() + 1
    }

    pub fn count_group(&self, group: ClauseGroup) -> usize {
        self.clauses.iter().filter(|c| c.group == group).count()
    }

    pub fn var_for(&self, role: &VarRole) -> Option<usize> {
        self.roles.iter().position(|r| r == role).map(|k| k + 1)
    }

    pub fn hard_clauses(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| c.weight.is_none())
    }

    fn push(&mut self, weight: Option<u64>, lits: Vec<Lit>, group: ClauseGroup) {
        debug_assert!(!lits.is_empty());
        debug_assert!(lits
            .iter()
            .all(|&l| l != 0 && l.unsigned_abs() as usize <= self.roles.len()));
        self.clauses.push(Clause { weight, lits, group });
    }
}

/// Unit propagation over the hard clauses under the given assumption
/// literals. Returns the fixpoint assignment, or `Err` when an empty clause
/// is derived.
pub fn unit_propagate(
    clauses: &WeightedClauseSet,
    assumptions: &[Lit],
) -> Result<BTreeMap<usize, bool>, ()> {
    let mut assignment: BTreeMap<usize, bool> = BTreeMap::new();
    for &lit in assumptions {
        let var = lit.unsigned_abs() as usize;
        match assignment.get(&var) {
            Some(&v) if v != (lit > 0) => return Err(()),
            _ => {
                assignment.insert(var, lit > 0);
            }
        }
    }
    loop {
        let mut changed = false;
        for clause in clauses.hard_clauses() {
            let mut unassigned: Option<Lit> = None;
            let mut satisfied = false;
            let mut open = 0usize;
            for &lit in &clause.lits {
                let var = lit.unsigned_abs() as usize;
                match assignment.get(&var) {
                    Some(&v) if v == (lit > 0) => {
                        satisfied = true;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        open += 1;
                        unassigned = Some(lit);
                    }
                }
            }
            if satisfied {
                continue;
            }
            match open {
                0 => return Err(()), // empty clause
                1 => {
                    let lit = unassigned.unwrap();
                    assignment.insert(lit.unsigned_abs() as usize, lit > 0);
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            return Ok(assignment);
        }
    }
}

/// Reads a relaxation off an assignment of the problem variables: kept
/// features from the bf variables, kept precedences from the bp variables of
/// user pairs. Fully assigned hard clauses must be satisfied, and the result
/// must verify against the subscription.
pub fn decode_relaxation(
    sub: &Subscription,
    clauses: &WeightedClauseSet,
    assignment: &BTreeMap<usize, bool>,
) -> Result<Relaxation, EncodeError> {
    for clause in clauses.hard_clauses() {
        let values: Vec<Option<bool>> = clause
            .lits
            .iter()
            .map(|&l| assignment.get(&(l.unsigned_abs() as usize)).map(|&v| v == (l > 0)))
            .collect();
        if values.iter().all(|v| v.is_some()) && !values.iter().any(|v| *v == Some(true)) {
            return Err(EncodeError::HardClauseViolated);
        }
    }
    let mut kept_features = std::collections::BTreeSet::new();
    let mut kept_precs = PrecSet::new();
    for (k, role) in clauses.roles.iter().enumerate() {
        let var = k + 1;
        match role {
            VarRole::Feature(f) => {
                let value = *assignment
                    .get(&var)
                    .ok_or(EncodeError::MissingVariable(var))?;
                if value {
                    kept_features.insert(*f);
                }
            }
            VarRole::Prec(i, j) if sub.user().contains(*i, *j) => {
                let value = *assignment
                    .get(&var)
                    .ok_or(EncodeError::MissingVariable(var))?;
                if value {
                    kept_precs.insert(*i, *j).map_err(EncodeError::Model)?;
                }
            }
            _ => {}
        }
    }
    let mut relax = Relaxation {
        kept_features,
        kept_precs,
        value: 0,
    };
    relax.value = crate::model::value_of(&relax, sub)?;
    verify_relaxation(sub, &relax)?;
    Ok(relax)
}

/// Minimum cost of a clause set over all completions of its cost-relevant
/// variables: enumerate the variables carried by soft clauses (which are
/// unit in every encoding here), use a small DPLL to check that the hard
/// clauses extend to a full satisfying assignment, and charge each
/// unsatisfied soft clause its weight. Intended for small instances only.
pub fn wcnf_min_cost(clauses: &WeightedClauseSet) -> Option<u64> {
    let mut problem_vars: Vec<usize> = clauses
        .clauses
        .iter()
        .filter(|c| c.weight.is_some())
        .flat_map(|c| {
            debug_assert_eq!(c.lits.len(), 1, "soft clauses are unit");
            c.lits.iter().map(|l| l.unsigned_abs() as usize)
        })
        .collect();
    problem_vars.sort_unstable();
    problem_vars.dedup();
    assert!(problem_vars.len() <= 26, "too many problem variables");
    let hard: Vec<&Clause> = clauses.hard_clauses().collect();
    let mut best: Option<u64> = None;
    for mask in 0u64..(1 << problem_vars.len()) {
        let mut assignment: BTreeMap<usize, bool> = BTreeMap::new();
        for (k, &var) in problem_vars.iter().enumerate() {
            assignment.insert(var, mask >> k & 1 == 1);
        }
        if !dpll_completable(&hard, clauses.n_vars(), &mut assignment) {
            continue;
        }
        let cost: u64 = clauses
            .clauses
            .iter()
            .filter_map(|c| {
                let w = c.weight?;
                let satisfied = c
                    .lits
                    .iter()
                    .any(|&l| assignment.get(&(l.unsigned_abs() as usize)) == Some(&(l > 0)));
                (!satisfied).then_some(w)
            })
            .sum();
        if best.map_or(true, |b| cost < b) {
            best = Some(cost);
        }
    }
    best
}

/// DPLL on the hard clauses with the problem variables pinned. Soft clauses
/// are unit on problem variables in every encoding here, so their cost is
/// unaffected by how the completion chooses the remaining variables.
fn dpll_completable(
    hard: &[&Clause],
    n_vars: usize,
    assignment: &mut BTreeMap<usize, bool>,
) -> bool {
    loop {
        let mut changed = false;
        for clause in hard {
            let mut unassigned = None;
            let mut satisfied = false;
            let mut open = 0;
            for &lit in &clause.lits {
                match assignment.get(&(lit.unsigned_abs() as usize)) {
                    Some(&v) if v == (lit > 0) => {
                        satisfied = true;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        open += 1;
                        unassigned = Some(lit);
                    }
                }
            }
            if satisfied {
                continue;
            }
            match open {
                0 => return false,
                1 => {
                    let lit = unassigned.unwrap();
                    assignment.insert(lit.unsigned_abs() as usize, lit > 0);
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }
    let branch = (1..=n_vars).find(|v| !assignment.contains_key(v));
    match branch {
        None => true,
        Some(var) => {
            for value in [true, false] {
                let mut trial = assignment.clone();
                trial.insert(var, value);
                if dpll_completable(hard, n_vars, &mut trial) {
                    return true;
                }
            }
            false
        }
    }
}


#[cfg(test)]
mod tests {
    use super::test_util::*;
    use super::*;
    use crate::oracle::brute_force_optimal;

    #[test]
    fn unit_propagation_noop_without_units() {
        let sub = unit_sub(2, &[1, 2], &[(1, 2)], &[]);
        let clauses = encode_atom(&sub, false);
        let assignment = unit_propagate(&clauses, &[]).unwrap();
        assert!(assignment.is_empty());
    }

    #[test]
    fn unit_propagation_chains_through_support() {
        let sub = unit_sub(2, &[1, 2], &[], &[(1, 2)]);
        let clauses = encode_atom(&sub, true);
        let bp = clauses.var_for(&VarRole::Prec(fid(1), fid(2))).unwrap();
        let bf1 = clauses.var_for(&VarRole::Feature(fid(1))).unwrap();
        let bf2 = clauses.var_for(&VarRole::Feature(fid(2))).unwrap();
        let assignment = unit_propagate(&clauses, &[bp as Lit]).unwrap();
        assert_eq!(assignment.get(&bf1), Some(&true));
        assert_eq!(assignment.get(&bf2), Some(&true));
    }

    #[test]
    fn conflict_in_atom_but_not_binary_on_user_three_cycle() {
        let sub = unit_sub(3, &[1, 2, 3], &[], &[(1, 2), (2, 3), (3, 1)]);
        let assume = |clauses: &WeightedClauseSet| -> Vec<Lit> {
            [(1, 2), (2, 3), (3, 1)]
                .iter()
                .map(|&(i, j)| clauses.var_for(&VarRole::Prec(fid(i), fid(j))).unwrap() as Lit)
                .collect()
        };
        for reduced in [false, true] {
            let atom = encode_atom(&sub, reduced);
            assert!(unit_propagate(&atom, &assume(&atom)).is_err(), "reduced={reduced}");
        }
        let binary = encode_symbol_binary(&sub);
        assert!(unit_propagate(&binary, &assume(&binary)).is_ok());
    }

    #[test]
    fn decode_full_inclusion_on_consistent_instance() {
        let sub = unit_sub(3, &[1, 2, 3], &[(1, 2)], &[(2, 3)]);
        let clauses = encode_atom(&sub, true);
        // Set every problem variable true and let DPLL-style hand assignment
        // fill nothing: the closure pairs all hold in the order 1,2,3.
        let mut assignment = BTreeMap::new();
        for (k, role) in clauses.roles.iter().enumerate() {
            let value = match role {
                VarRole::Feature(_) => true,
                VarRole::Prec(i, j) => i.0 < j.0,
                _ => unreachable!("atom encoding has no auxiliaries"),
            };
            assignment.insert(k + 1, value);
        }
        let relax = decode_relaxation(&sub, &clauses, &assignment).unwrap();
        assert_eq!(relax.kept_features, fids(&[1, 2, 3]));
        assert_eq!(relax.value, 4);
    }

    #[test]
    fn decode_all_false_is_empty_relaxation() {
        let sub = unit_sub(2, &[1, 2], &[(1, 2), (2, 1)], &[]);
        let clauses = encode_atom(&sub, false);
        let assignment: BTreeMap<usize, bool> =
            (1..=clauses.n_vars()).map(|v| (v, false)).collect();
        let relax = decode_relaxation(&sub, &clauses, &assignment).unwrap();
        assert!(relax.kept_features.is_empty());
        assert_eq!(relax.value, 0);
    }

    #[test]
    fn decode_rejects_violated_hard_clause() {
        let sub = unit_sub(2, &[1, 2], &[(1, 2), (2, 1)], &[]);
        let clauses = encode_atom(&sub, false);
        // Both features in, every bp false: violates a catalogue clause.
        let mut assignment: BTreeMap<usize, bool> =
            (1..=clauses.n_vars()).map(|v| (v, false)).collect();
        for f in [1, 2] {
            let var = clauses.var_for(&VarRole::Feature(fid(f))).unwrap();
            assignment.insert(var, true);
        }
        assert_eq!(
            decode_relaxation(&sub, &clauses, &assignment),
            Err(EncodeError::HardClauseViolated)
        );
    }

    #[test]
    fn wcnf_min_cost_matches_oracle_across_encodings() {
        let sub = unit_sub(4, &[1, 2, 3, 4], &[(1, 2), (2, 1)], &[(3, 4), (4, 3)]);
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
