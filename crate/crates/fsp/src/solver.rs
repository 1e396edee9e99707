//! Depth-first branch and bound for optimal relaxation over the basic
//! constraint-optimisation model: Boolean inclusion variables for features
//! and user precedences, integer position intervals, and a value variable
//! bounded by the two weighted-sum inequalities.
//!
//! Propagation levels: arc consistency, restricted singleton arc consistency
//! (one pass per variable-value pair), and singleton arc consistency (SAC-1,
//! restart on removal). A fourth method delegates pruning to the soft
//! precedence propagator in [`crate::softprec`].

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use crate::model::{topological_order, FeatureId, PrecSet, Relaxation, Subscription};
use crate::softprec;

/// Three-valued Boolean domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tv {
    In,
    Out,
    Unknown,
}

impl Tv {
    pub fn is_assigned(self) -> bool {
        self != Tv::Unknown
    }
}

/// Propagation level / pruning method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Ac,
    RsacB,
    SacB,
    SoftPrec,
}

/// Variable ordering heuristic over the Boolean decision variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Heuristic {
    DomDeg,
    DomWdeg,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub method: Method,
    pub heuristic: Heuristic,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    /// Reserved; no randomised component uses it yet.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::RsacB,
            heuristic: Heuristic::DomWdeg,
            time_limit: None,
            node_limit: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SearchStats {
    pub nodes: u64,
    pub wall_time: Duration,
    /// (nodes at improvement, incumbent value) trace.
    pub best_trace: Vec<(u64, u64)>,
    pub completed: bool,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub relaxation: Relaxation,
    pub stats: SearchStats,
}

/// One search node: three-valued inclusion domains, position intervals and
/// value bounds. Cloned on branching; the solver context holds everything
/// immutable plus the constraint weights for dom/wdeg.
#[derive(Clone, Debug)]
pub struct SearchState {
    pub bf: Vec<Tv>,
    pub bp: Vec<Tv>,
    /// Inclusive position bounds, 1-based.
    pub pf: Vec<(i64, i64)>,
    pub v: (u64, u64),
}

/// Index space of Boolean decision variables: features first, then user
/// precedences.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoolVar {
    Feature(usize),
    Prec(usize),
}

#[derive(Clone, Debug)]
enum Constraint {
    /// (i < j) in H: bf_i ∧ bf_j ⇒ pf_i < pf_j.
    Hard { i: usize, j: usize },
    /// (i < j) in P: bp ⇔ (bf_i ∧ bf_j ∧ pf_i < pf_j).
    User { p: usize, i: usize, j: usize },
    /// v ≥ Σ w·b (lower inequality of the value decomposition).
    ValueLower,
    /// v ≤ Σ w·b.
    ValueUpper,
}

/// Immutable problem view shared by all nodes of one solve.
pub struct Problem {
    features: Vec<FeatureId>,
    precs: Vec<(FeatureId, FeatureId)>,
    feature_weight: Vec<u64>,
    prec_weight: Vec<u64>,
    constraints: Vec<Constraint>,
    /// Static constraint degree contribution per Boolean variable.
    degree: Vec<u64>,
    n: i64,
}

impl Problem {
    pub fn new(sub: &Subscription) -> Self {
        let features: Vec<FeatureId> = sub.features().iter().copied().collect();
        let index: BTreeMap<FeatureId, usize> =
            features.iter().enumerate().map(|(k, &f)| (f, k)).collect();
        let precs: Vec<(FeatureId, FeatureId)> = sub.user().iter().collect();
        let feature_weight = features.iter().map(|&f| sub.feature_weight(f)).collect();
        let prec_weight = precs.iter().map(|&(i, j)| sub.prec_weight(i, j)).collect();
        let mut constraints = Vec::new();
        for (i, j) in sub.hard().iter() {
            constraints.push(Constraint::Hard {
                i: index[&i],
                j: index[&j],
            });
        }
        for (p, &(i, j)) in precs.iter().enumerate() {
            constraints.push(Constraint::User {
                p,
                i: index[&i],
                j: index[&j],
            });
        }
        constraints.push(Constraint::ValueLower);
        constraints.push(Constraint::ValueUpper);
        let nbool = features.len() + precs.len();
        let mut degree = vec![0u64; nbool];
        for c in &constraints {
            for var in Self::scope_of(c, features.len(), precs.len()) {
                degree[var] += 1;
            }
        }
        Self {
            n: features.len() as i64,
            features,
            precs,
            feature_weight,
            prec_weight,
            constraints,
            degree,
        }
    }

    fn scope_of(c: &Constraint, nf: usize, np: usize) -> Vec<usize> {
        match *c {
            Constraint::Hard { i, j } => vec![i, j],
            Constraint::User { p, i, j } => vec![nf + p, i, j],
            Constraint::ValueLower | Constraint::ValueUpper => (0..nf + np).collect(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn n_precs(&self) -> usize {
        self.precs.len()
    }

    fn bool_domain(&self, state: &SearchState, var: usize) -> Tv {
        if var < self.features.len() {
            state.bf[var]
        } else {
            state.bp[var - self.features.len()]
        }
    }

    fn weight_of(&self, var: usize) -> u64 {
        if var < self.features.len() {
            self.feature_weight[var]
        } else {
            self.prec_weight[var - self.features.len()]
        }
    }

    pub fn root_state(&self, total: u64) -> SearchState {
        SearchState {
            bf: vec![Tv::Unknown; self.features.len()],
            bp: vec![Tv::Unknown; self.precs.len()],
            pf: vec![(1, self.n); self.features.len()],
            v: (0, total),
        }
    }
}

/// Per-constraint weights for dom/wdeg, incremented on domain wipeout.
pub struct Wdeg(Vec<u64>);

impl Wdeg {
    fn new(n: usize) -> Self {
        Self(vec![1; n])
    }
}

struct Conflict(usize);

fn set_bool(state: &mut SearchState, nf: usize, var: usize, value: Tv) -> Result<bool, ()> {
    let slot = if var < nf {
        &mut state.bf[var]
    } else {
        &mut state.bp[var - nf]
    };
    match *slot {
        Tv::Unknown => {
            *slot = value;
            Ok(true)
        }
        v if v == value => Ok(false),
        _ => Err(()),
    }
}

/// Arc consistency to fixpoint. Interval reasoning on positions, the user
/// precedence equivalence in both directions, and bounds reasoning on the
/// two value inequalities. Wipeouts bump the responsible constraint's
/// dom/wdeg weight.
pub fn propagate_ac(
    problem: &Problem,
    state: &mut SearchState,
    wdeg: &mut Wdeg,
) -> Result<(), ()> {
    match ac_fixpoint(problem, state) {
        Ok(()) => Ok(()),
        Err(Conflict(c)) => {
            wdeg.0[c] += 1;
            Err(())
        }
    }
}

fn ac_fixpoint(problem: &Problem, state: &mut SearchState) -> Result<(), Conflict> {
    let nf = problem.features.len();
    loop {
        let mut changed = false;
        for (ci, c) in problem.constraints.iter().enumerate() {
            let fail = Conflict(ci);
            match *c {
                Constraint::Hard { i, j } => {
                    changed |= revise_hard_prec(state, nf, i, j, ci)?;
                    let _ = fail;
                }
                Constraint::User { p, i, j } => {
                    match state.bp[p] {
                        Tv::In => {
                            if set_bool(state, nf, i, Tv::In).map_err(|_| Conflict(ci))? {
                                changed = true;
                            }
                            if set_bool(state, nf, j, Tv::In).map_err(|_| Conflict(ci))? {
                                changed = true;
                            }
                            changed |= tighten_lt(state, i, j).map_err(|_| Conflict(ci))?;
                        }
                        Tv::Out => {
                            // ¬(bf_i ∧ bf_j ∧ pf_i < pf_j)
                            if state.bf[i] == Tv::In && state.bf[j] == Tv::In {
                                changed |= tighten_ge(state, i, j).map_err(|_| Conflict(ci))?;
                            }
                        }
                        Tv::Unknown => {
                            let infeasible_lt = state.pf[i].0 >= state.pf[j].1;
                            if state.bf[i] == Tv::Out
                                || state.bf[j] == Tv::Out
                                || infeasible_lt
                            {
                                state.bp[p] = Tv::Out;
                                changed = true;
                            } else if state.bf[i] == Tv::In
                                && state.bf[j] == Tv::In
                                && state.pf[i].1 < state.pf[j].0
                            {
                                // pf_i < pf_j is entailed.
                                state.bp[p] = Tv::In;
                                changed = true;
                            }
                        }
                    }
                }
                Constraint::ValueLower => {
                    // v ≥ Σ: committed sum bounds v from below; an unknown
                    // item cannot be included past v's upper bound.
                    let committed = committed_sum(problem, state);
                    if committed > state.v.1 {
                        return Err(fail);
                    }
                    if committed > state.v.0 {
                        state.v.0 = committed;
                        changed = true;
                    }
                    for var in 0..nf + problem.precs.len() {
                        if problem.bool_domain(state, var) == Tv::Unknown
                            && committed + problem.weight_of(var) > state.v.1
                        {
                            set_bool(state, nf, var, Tv::Out).map_err(|_| Conflict(ci))?;
                            changed = true;
                        }
                    }
                }
                Constraint::ValueUpper => {
                    // v ≤ Σ: potential sum bounds v from above; an unknown
                    // item whose exclusion would drop the sum below v's
                    // lower bound is forced in.
                    let potential = potential_sum(problem, state);
                    if potential < state.v.0 {
                        return Err(fail);
                    }
                    if potential < state.v.1 {
                        state.v.1 = potential;
                        changed = true;
                    }
                    for var in 0..nf + problem.precs.len() {
                        if problem.bool_domain(state, var) == Tv::Unknown
                            && potential - problem.weight_of(var) < state.v.0
                        {
                            set_bool(state, nf, var, Tv::In).map_err(|_| Conflict(ci))?;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return Ok(());
        }
    }
}

fn committed_sum(problem: &Problem, state: &SearchState) -> u64 {
    let mut sum = 0;
    for (k, &tv) in state.bf.iter().enumerate() {
        if tv == Tv::In {
            sum += problem.feature_weight[k];
        }
    }
    for (k, &tv) in state.bp.iter().enumerate() {
        if tv == Tv::In {
            sum += problem.prec_weight[k];
        }
    }
    sum
}

fn potential_sum(problem: &Problem, state: &SearchState) -> u64 {
    let mut sum = 0;
    for (k, &tv) in state.bf.iter().enumerate() {
        if tv != Tv::Out {
            sum += problem.feature_weight[k];
        }
    }
    for (k, &tv) in state.bp.iter().enumerate() {
        if tv != Tv::Out {
            sum += problem.prec_weight[k];
        }
    }
    sum
}

/// Enforce pf_i < pf_j on the interval bounds. Errors on empty interval.
fn tighten_lt(state: &mut SearchState, i: usize, j: usize) -> Result<bool, ()> {
    let mut changed = false;
    if state.pf[j].0 < state.pf[i].0 + 1 {
        state.pf[j].0 = state.pf[i].0 + 1;
        changed = true;
    }
    if state.pf[i].1 > state.pf[j].1 - 1 {
        state.pf[i].1 = state.pf[j].1 - 1;
        changed = true;
    }
    if state.pf[i].0 > state.pf[i].1 || state.pf[j].0 > state.pf[j].1 {
        return Err(());
    }
    Ok(changed)
}

/// Enforce pf_i ≥ pf_j on the interval bounds.
fn tighten_ge(state: &mut SearchState, i: usize, j: usize) -> Result<bool, ()> {
    let mut changed = false;
    if state.pf[i].0 < state.pf[j].0 {
        state.pf[i].0 = state.pf[j].0;
        changed = true;
    }
    if state.pf[j].1 > state.pf[i].1 {
        state.pf[j].1 = state.pf[i].1;
        changed = true;
    }
    if state.pf[i].0 > state.pf[i].1 || state.pf[j].0 > state.pf[j].1 {
        return Err(());
    }
    Ok(changed)
}

fn revise_hard_prec(
    state: &mut SearchState,
    nf: usize,
    i: usize,
    j: usize,
    ci: usize,
) -> Result<bool, Conflict> {
    let mut changed = false;
    let feasible_lt = state.pf[i].0 < state.pf[j].1;
    if state.bf[i] == Tv::In && state.bf[j] == Tv::In {
        if !feasible_lt {
            return Err(Conflict(ci));
        }
        changed |= tighten_lt(state, i, j).map_err(|_| Conflict(ci))?;
    } else if !feasible_lt {
        // One committed endpoint forces the other one out.
        if state.bf[i] == Tv::In && set_bool(state, nf, j, Tv::Out).map_err(|_| Conflict(ci))? {
            changed = true;
        }
        if state.bf[j] == Tv::In && set_bool(state, nf, i, Tv::Out).map_err(|_| Conflict(ci))? {
            changed = true;
        }
    }
    Ok(changed)
}

/// Singleton arc consistency over the Boolean variables. `restricted` makes a
/// single pass over the variable-value pairs (RSAC); otherwise any removal
/// restarts the pass (SAC-1). AC is re-established after each removal.
pub fn propagate_singleton(
    problem: &Problem,
    state: &mut SearchState,
    wdeg: &mut Wdeg,
    restricted: bool,
) -> Result<(), ()> {
    let nbool = problem.features.len() + problem.precs.len();
    let nf = problem.features.len();
    loop {
        let mut removed = false;
        'pairs: for var in 0..nbool {
            for value in [Tv::In, Tv::Out] {
                if problem.bool_domain(state, var).is_assigned() {
                    continue;
                }
                let mut probe = state.clone();
                set_bool(&mut probe, nf, var, value).unwrap();
                if propagate_ac(problem, &mut probe, wdeg).is_err() {
                    let opposite = if value == Tv::In { Tv::Out } else { Tv::In };
                    set_bool(state, nf, var, opposite).map_err(|_| ())?;
                    propagate_ac(problem, state, wdeg)?;
                    removed = true;
                    if !restricted {
                        break 'pairs; // SAC-1: restart the whole pass
                    }
                }
            }
        }
        if !removed || restricted {
            return Ok(());
        }
    }
}

/// Picks the next Boolean decision variable, minimising dom/deg or dom/wdeg.
/// For dom/wdeg only constraints with at least two uninstantiated Boolean
/// variables count. Ties break to the smallest variable index. Returns None
/// when every Boolean is assigned.
pub fn choose_variable(
    problem: &Problem,
    state: &SearchState,
    wdeg: &Wdeg,
    heuristic: Heuristic,
) -> Option<usize> {
    let nbool = problem.features.len() + problem.precs.len();
    let nf = problem.features.len();
    let np = problem.precs.len();
    let mut best: Option<(u64, usize)> = None; // (score, var); maximise score
    for var in 0..nbool {
        if problem.bool_domain(state, var).is_assigned() {
            continue;
        }
        let score = match heuristic {
            Heuristic::DomDeg => problem.degree[var],
            Heuristic::DomWdeg => problem
                .constraints
                .iter()
                .enumerate()
                .filter(|(_, c)| {
                    let scope = Problem::scope_of(c, nf, np);
                    scope.contains(&var)
                        && scope
                            .iter()
                            .filter(|&&v| !problem.bool_domain(state, v).is_assigned())
                            .count()
                            >= 2
                })
                .map(|(ci, _)| wdeg.0[ci])
                .sum(),
        };
        // Unknown Boolean domains all have size 2, so minimising dom/score
        // is maximising score.
        if best.map_or(true, |(s, _)| score > s) {
            best = Some((score, var));
        }
    }
    best.map(|(_, var)| var)
}

struct Search<'a> {
    problem: &'a Problem,
    sub: &'a Subscription,
    config: &'a SolverConfig,
    wdeg: Wdeg,
    incumbent: Relaxation,
    stats: SearchStats,
    started: Instant,
    aborted: bool,
}

impl Search<'_> {
    fn limits_hit(&self) -> bool {
        self.config
            .node_limit
            .is_some_and(|n| self.stats.nodes >= n)
            || self
                .config
                .time_limit
                .is_some_and(|t| self.started.elapsed() >= t)
    }

    fn propagate(&mut self, state: &mut SearchState) -> Result<(), ()> {
        propagate_ac(self.problem, state, &mut self.wdeg)?;
        match self.config.method {
            Method::Ac | Method::SoftPrec => Ok(()),
            Method::RsacB => propagate_singleton(self.problem, state, &mut self.wdeg, true),
            Method::SacB => propagate_singleton(self.problem, state, &mut self.wdeg, false),
        }
    }

    fn dfs(&mut self, mut state: SearchState) {
        if self.aborted {
            return;
        }
        self.stats.nodes += 1;
        if self.limits_hit() {
            self.aborted = true;
            return;
        }
        // Strict improvement over the incumbent is required.
        state.v.0 = state.v.0.max(self.incumbent.value + 1);
        if state.v.0 > state.v.1 || self.propagate(&mut state).is_err() {
            return;
        }
        match choose_variable(self.problem, &state, &self.wdeg, self.config.heuristic) {
            None => self.record_leaf(&state),
            Some(var) => {
                let nf = self.problem.features.len();
                for value in [Tv::In, Tv::Out] {
                    let mut child = state.clone();
                    set_bool(&mut child, nf, var, value).unwrap();
                    self.dfs(child);
                    if self.aborted {
                        return;
                    }
                }
            }
        }
    }

    fn record_leaf(&mut self, state: &SearchState) {
        let value = committed_sum(self.problem, state);
        if value <= self.incumbent.value && !(value == 0 && self.incumbent.value == 0) {
            return;
        }
        let kept_features: BTreeSet<FeatureId> = self
            .problem
            .features
            .iter()
            .zip(&state.bf)
            .filter(|(_, &tv)| tv == Tv::In)
            .map(|(&f, _)| f)
            .collect();
        let kept_precs: PrecSet = self
            .problem
            .precs
            .iter()
            .zip(&state.bp)
            .filter(|(_, &tv)| tv == Tv::In)
            .map(|(&p, _)| p)
            .collect();
        // Positions are recoverable by topological sort; AC at a full Boolean
        // assignment guarantees the kept graph is acyclic.
        let kept_rel = self.sub.hard().restrict(&kept_features).union(&kept_precs);
        debug_assert!(topological_order(&kept_rel, &kept_features).is_some());
        if value > self.incumbent.value || self.stats.best_trace.is_empty() {
            self.incumbent = Relaxation {
                kept_features,
                kept_precs,
                value,
            };
            self.stats.best_trace.push((self.stats.nodes, value));
        }
    }
}

/// Finds an optimal relaxation by depth-first branch and bound over the
/// Boolean variables, trying `in` before `out`. On a node or time limit the
/// best incumbent is returned with `stats.completed == false`.
pub fn solve(sub: &Subscription, config: &SolverConfig) -> Solution {
    if config.method == Method::SoftPrec {
        return softprec::solve_softprec(sub, config);
    }
    let problem = Problem::new(sub);
    let total = sub.total_weight();
    let nconstraints = problem.constraints.len();
    let mut search = Search {
        problem: &problem,
        sub,
        config,
        wdeg: Wdeg::new(nconstraints),
        incumbent: Relaxation {
            kept_features: BTreeSet::new(),
            kept_precs: PrecSet::new(),
            value: 0,
        },
        stats: SearchStats::default(),
        started: Instant::now(),
        aborted: false,
    };
    let root = problem.root_state(total);
    search.dfs(root);
    let mut stats = search.stats;
    stats.completed = !search.aborted;
    stats.wall_time = search.started.elapsed();
    Solution {
        relaxation: search.incumbent,
        stats,
    }
}
