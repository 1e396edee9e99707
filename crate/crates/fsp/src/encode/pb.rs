//! Linear pseudo-Boolean view of a weighted clause set: every hard clause
//! becomes a ≥-constraint, soft unit clauses enter the minimisation
//! objective directly, and non-unit soft clauses get a relaxation indicator
//! variable.

use super::{VarRole, WeightedClauseSet};

/// Σ coeff·x ≥ rhs over 0/1 variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PbConstraint {
    /// (coefficient, 1-based variable index) terms.
    pub terms: Vec<(i64, usize)>,
    pub rhs: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PbModel {
    pub roles: Vec<VarRole>,
    /// Minimise constant + Σ coeff·x.
    pub objective: Vec<(i64, usize)>,
    pub constant: i64,
    pub constraints: Vec<PbConstraint>,
}

impl PbModel {
    pub fn n_vars(&self) -> usize {
        self.roles.len()
    }

    pub fn satisfied(&self, assignment: &[bool]) -> bool {
        self.constraints.iter().all(|c| {
            let sum: i64 = c
                .terms
                .iter()
                .map(|&(coeff, var)| if assignment[var - 1] { coeff } else { 0 })
                .sum();
            sum >= c.rhs
        })
    }

    pub fn objective_value(&self, assignment: &[bool]) -> i64 {
        self.constant
            + self
                .objective
                .iter()
                .map(|&(coeff, var)| if assignment[var - 1] { coeff } else { 0 })
                .sum::<i64>()
    }
}

/// Clause (l₁ ∨ … ∨ l_m) as Σ signed terms ≥ 1 − #negative literals.
fn clause_constraint(lits: &[i64], extra: Option<usize>) -> PbConstraint {
    let mut terms: Vec<(i64, usize)> = lits
        .iter()
        .map(|&l| (if l > 0 { 1 } else { -1 }, l.unsigned_abs() as usize))
        .collect();
    let negatives = lits.iter().filter(|&&l| l < 0).count() as i64;
    if let Some(var) = extra {
        terms.push((1, var));
    }
    PbConstraint {
        terms,
        rhs: 1 - negatives,
    }
}

/// Translates a clause set: hard clauses become constraints; a soft unit
/// clause ⟨w, (l)⟩ contributes w·(1−l) to the objective; a non-unit soft
/// clause gets a fresh indicator r, the constraint clause ∨ r, and the
/// objective term w·r.
pub fn to_pseudo_boolean(wcnf: &WeightedClauseSet) -> PbModel {
    let mut model = PbModel {
        roles: wcnf.roles.clone(),
        objective: Vec::new(),
        constant: 0,
        constraints: Vec::new(),
    };
    for clause in &wcnf.clauses {
        match clause.weight {
            None => model.constraints.push(clause_constraint(&clause.lits, None)),
            Some(w) => {
                let w = w as i64;
                if let [lit] = clause.lits[..] {
                    let var = lit.unsigned_abs() as usize;
                    if lit > 0 {
                        // w·(1 − x)
                        model.constant += w;
                        model.objective.push((-w, var));
                    } else {
                        // w·x
                        model.objective.push((w, var));
                    }
                } else {
                    model.roles.push(VarRole::Aux(format!(
                        "relax[{}]",
                        model.constraints.len()
                    )));
                    let indicator = model.roles.len();
                    model
                        .constraints
                        .push(clause_constraint(&clause.lits, Some(indicator)));
                    model.objective.push((w, indicator));
                }
            }
        }
    }
    model
}

/// Minimum objective over all satisfying assignments, by full enumeration.
/// `None` when unsatisfiable. Small variable counts only.
pub fn pb_minimum(model: &PbModel) -> Option<i64> {
    let n = model.n_vars();
    assert!(n <= 24, "instance too large for exhaustive evaluation");
    let mut best: Option<i64> = None;
    for mask in 0u64..(1 << n) {
        let assignment: Vec<bool> = (0..n).map(|k| mask >> k & 1 == 1).collect();
        if !model.satisfied(&assignment) {
            continue;
        }
        let value = model.objective_value(&assignment);
        if best.map_or(true, |b| value < b) {
            best = Some(value);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::super::test_util::*;
    use super::super::{encode_atom, wcnf_min_cost, Clause, ClauseGroup};
    use super::*;

    #[test]
    fn hard_clause_translation() {
        // (x ∨ ¬y) → x − y ≥ 0
        let wcnf = WeightedClauseSet {
            roles: vec![
                VarRole::Aux("x".into()),
                VarRole::Aux("y".into()),
            ],
            clauses: vec![Clause {
                weight: None,
                lits: vec![1, -2],
                group: ClauseGroup::CatalogueHard,
            }],
        };
        let model = to_pseudo_boolean(&wcnf);
        assert_eq!(
            model.constraints,
            vec![PbConstraint {
                terms: vec![(1, 1), (-1, 2)],
                rhs: 0,
            }]
        );
    }

    #[test]
    fn soft_unit_becomes_objective_term() {
        // ⟨3, (x)⟩ → minimise 3·(1−x)
        let wcnf = WeightedClauseSet {
            roles: vec![VarRole::Aux("x".into())],
            clauses: vec![Clause {
                weight: Some(3),
                lits: vec![1],
                group: ClauseGroup::SoftFeature,
            }],
        };
        let model = to_pseudo_boolean(&wcnf);
        assert_eq!(model.constant, 3);
        assert_eq!(model.objective, vec![(-3, 1)]);
        assert!(model.constraints.is_empty());
        assert_eq!(model.objective_value(&[true]), 0);
        assert_eq!(model.objective_value(&[false]), 3);
    }

    #[test]
    fn non_unit_soft_gets_indicator() {
        let wcnf = WeightedClauseSet {
            roles: vec![
                VarRole::Aux("x".into()),
                VarRole::Aux("y".into()),
            ],
            clauses: vec![Clause {
                weight: Some(2),
                lits: vec![1, 2],
                group: ClauseGroup::SoftFeature,
            }],
        };
        let model = to_pseudo_boolean(&wcnf);
        assert_eq!(model.n_vars(), 3);
        assert_eq!(model.objective, vec![(2, 3)]);
        // x + y + r ≥ 1: dropping both x and y forces the indicator.
        assert!(!model.satisfied(&[false, false, false]));
        assert!(model.satisfied(&[false, false, true]));
        assert_eq!(pb_minimum(&model), Some(0));
    }

    #[test]
    fn pb_optimum_equals_wcnf_optimum() {
        let subs = [
            unit_sub(3, &[1, 2, 3], &[(1, 2), (2, 1)], &[(2, 3)]),
            unit_sub(3, &[1, 2, 3], &[], &[(1, 2), (2, 3), (3, 1)]),
        ];
        for sub in subs {
            let wcnf = encode_atom(&sub, true);
            let model = to_pseudo_boolean(&wcnf);
            assert_eq!(
                pb_minimum(&model),
                wcnf_min_cost(&wcnf).map(|c| c as i64)
            );
        }
    }
}
