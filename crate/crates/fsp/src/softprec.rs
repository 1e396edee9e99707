//! Soft global precedence propagator: a single constraint over the feature
//! inclusion Booleans, an |F|×|F| three-valued order matrix, and the value
//! variable. Pruning is the deductive closure of the defining rules —
//! restriction, asymmetry, transitivity, compatibility with the hard
//! precedences — plus a matching-based admissible upper bound over inferred
//! pairwise incompatibilities. Used as an alternative pruning method inside
//! the branch-and-bound solver.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use crate::model::{FeatureId, PrecSet, Relaxation, Subscription};
use crate::solver::{SearchStats, Solution, SolverConfig, Tv};

/// Three-valued |F|×|F| order matrix. The diagonal is pinned to false; the
/// true part stays asymmetric and transitively closed after propagation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderMatrix {
    n: usize,
    cells: Vec<Tv>,
}

impl OrderMatrix {
    pub fn new(n: usize) -> Self {
        let mut m = Self {
            n,
            cells: vec![Tv::Unknown; n * n],
        };
        for i in 0..n {
            m.cells[i * n + i] = Tv::Out;
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> Tv {
        self.cells[i * self.n + j]
    }

    /// Returns whether the cell changed; errors on contradiction.
    pub fn set(&mut self, i: usize, j: usize, value: Tv) -> Result<bool, ()> {
        debug_assert!(value.is_assigned());
        let cell = &mut self.cells[i * self.n + j];
        match *cell {
            Tv::Unknown => {
                *cell = value;
                Ok(true)
            }
            v if v == value => Ok(false),
            _ => Err(()),
        }
    }

    /// Checks asymmetry and transitive closure of the true part.
    pub fn is_closed(&self) -> bool {
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) != Tv::In {
                    continue;
                }
                if self.get(j, i) == Tv::In {
                    return false;
                }
                for k in 0..self.n {
                    if self.get(j, k) == Tv::In && self.get(i, k) != Tv::In {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Undirected edges {i, j} where including both features forces an order
/// cycle between them, so at most one endpoint may be `in`.
#[derive(Clone, Debug, Default)]
pub struct IncompatibilityGraph {
    pub edges: BTreeSet<(usize, usize)>,
}

impl IncompatibilityGraph {
    fn insert(&mut self, i: usize, j: usize) {
        self.edges.insert((i.min(j), i.max(j)));
    }
}

/// Search state for the soft precedence method.
#[derive(Clone, Debug)]
pub struct SoftState {
    pub bf: Vec<Tv>,
    pub matrix: OrderMatrix,
    pub v: (u64, u64),
}

/// Indexed problem view: features, hard pairs and user pairs mapped to
/// contiguous indices.
pub struct SoftProblem {
    features: Vec<FeatureId>,
    feature_weight: Vec<u64>,
    hard: Vec<(usize, usize)>,
    hard_set: BTreeSet<(usize, usize)>,
    user: Vec<(usize, usize)>,
    user_weight: Vec<u64>,
}

impl SoftProblem {
    pub fn new(sub: &Subscription) -> Self {
        let features: Vec<FeatureId> = sub.features().iter().copied().collect();
        let index: BTreeMap<FeatureId, usize> =
            features.iter().enumerate().map(|(k, &f)| (f, k)).collect();
        let hard: Vec<(usize, usize)> =
            sub.hard().iter().map(|(i, j)| (index[&i], index[&j])).collect();
        let user: Vec<(usize, usize)> =
            sub.user().iter().map(|(i, j)| (index[&i], index[&j])).collect();
        let user_weight = sub
            .user()
            .iter()
            .map(|(i, j)| sub.prec_weight(i, j))
            .collect();
        Self {
            feature_weight: features.iter().map(|&f| sub.feature_weight(f)).collect(),
            hard_set: hard.iter().copied().collect(),
            features,
            hard,
            user,
            user_weight,
        }
    }

    pub fn root_state(&self, total: u64) -> SoftState {
        SoftState {
            bf: vec![Tv::Unknown; self.features.len()],
            matrix: OrderMatrix::new(self.features.len()),
            v: (0, total),
        }
    }

}

/// Prunes to the fixpoint of the order-matrix rules plus value bounds.
/// Cost is O(|F|³) per sweep. Returns `Err` on wipeout: a forced 2-cycle,
/// both endpoints of an incompatibility committed in, or empty value bounds.
pub fn softprec_propagate(problem: &SoftProblem, state: &mut SoftState) -> Result<(), ()> {
    let n = problem.features.len();
    loop {
        let mut changed = false;
        // Restriction and asymmetry of true entries.
        for i in 0..n {
            for j in 0..n {
                if state.matrix.get(i, j) != Tv::In {
                    continue;
                }
                for f in [i, j] {
                    match state.bf[f] {
                        Tv::Unknown => {
                            state.bf[f] = Tv::In;
                            changed = true;
                        }
                        Tv::Out => return Err(()),
                        Tv::In => {}
                    }
                }
                changed |= state.matrix.set(j, i, Tv::Out)?;
            }
        }
        // Excluded features carry no order entries.
        for i in 0..n {
            if state.bf[i] != Tv::Out {
                continue;
            }
            for j in 0..n {
                if i != j {
                    changed |= state.matrix.set(i, j, Tv::Out)?;
                    changed |= state.matrix.set(j, i, Tv::Out)?;
                }
            }
        }
        // Transitivity of the true part.
        for k in 0..n {
            for i in 0..n {
                if state.matrix.get(i, k) != Tv::In {
                    continue;
                }
                for j in 0..n {
                    if state.matrix.get(k, j) == Tv::In && i != j {
                        changed |= state.matrix.set(i, j, Tv::In)?;
                    } else if state.matrix.get(k, j) == Tv::In && i == j {
                        return Err(()); // closed a cycle onto the diagonal
                    }
                }
            }
        }
        // Hard precedences: both in forces the entry true; entry false
        // forbids both endpoints in.
        for &(i, j) in &problem.hard {
            if state.bf[i] == Tv::In && state.bf[j] == Tv::In {
                changed |= state.matrix.set(i, j, Tv::In)?;
            }
            if state.matrix.get(i, j) == Tv::Out {
                match (state.bf[i], state.bf[j]) {
                    (Tv::In, Tv::In) => return Err(()),
                    (Tv::In, Tv::Unknown) => {
                        state.bf[j] = Tv::Out;
                        changed = true;
                    }
                    (Tv::Unknown, Tv::In) => {
                        state.bf[i] = Tv::Out;
                        changed = true;
                    }
                    _ => {}
                }
            }
        }
        // Incompatibilities prune directly too.
        let graph = incompatibility_graph(problem, state);
        for &(i, j) in &graph.edges {
            match (state.bf[i], state.bf[j]) {
                (Tv::In, Tv::In) => return Err(()),
                (Tv::In, Tv::Unknown) => {
                    state.bf[j] = Tv::Out;
                    changed = true;
                }
                (Tv::Unknown, Tv::In) => {
                    state.bf[i] = Tv::Out;
                    changed = true;
                }
                _ => {}
            }
        }
        // Value bounds from the committed / still-possible sums.
        let committed = committed_value(problem, state);
        let ub = upper_bound_with(problem, state, &graph);
        if committed > state.v.0 {
            state.v.0 = committed;
            changed = true;
        }
        if ub < state.v.1 {
            state.v.1 = ub;
            changed = true;
        }
        if state.v.0 > state.v.1 {
            return Err(());
        }
        // An unknown item too heavy for the upper bound goes out; one whose
        // loss makes the lower bound unreachable comes in. The forcing-in
        // test uses the plain potential sum so it stays sound alongside the
        // matching penalty.
        let potential = potential_value(problem, state);
        for i in 0..n {
            if state.bf[i] != Tv::Unknown {
                continue;
            }
            let w = problem.feature_weight[i];
            if committed + w > state.v.1 {
                state.bf[i] = Tv::Out;
                changed = true;
            } else if potential - w < state.v.0 {
                state.bf[i] = Tv::In;
                changed = true;
            }
        }
        for (p, &(i, j)) in problem.user.iter().enumerate() {
            if state.matrix.get(i, j) != Tv::Unknown {
                continue;
            }
            if state.bf[i] == Tv::Out || state.bf[j] == Tv::Out {
                state.matrix.set(i, j, Tv::Out)?;
                changed = true;
                continue;
            }
            let w = problem.user_weight[p];
            if committed + w > state.v.1 {
                state.matrix.set(i, j, Tv::Out)?;
                changed = true;
            } else if potential - w < state.v.0 {
                state.matrix.set(i, j, Tv::In)?;
                changed = true;
            }
        }
        if !changed {
            return Ok(());
        }
    }
}

/// Pairs whose joint inclusion closes a 2-cycle through hard precedences
/// and/or committed order entries.
pub fn incompatibility_graph(problem: &SoftProblem, state: &SoftState) -> IncompatibilityGraph {
    let n = problem.features.len();
    let mut graph = IncompatibilityGraph::default();
    for i in 0..n {
        for j in i + 1..n {
            let fwd = problem.hard_set.contains(&(i, j)) || state.matrix.get(i, j) == Tv::In;
            let bwd = problem.hard_set.contains(&(j, i)) || state.matrix.get(j, i) == Tv::In;
            if fwd && bwd {
                graph.insert(i, j);
            }
        }
    }
    graph
}

fn committed_value(problem: &SoftProblem, state: &SoftState) -> u64 {
    let mut sum = 0;
    for (i, &tv) in state.bf.iter().enumerate() {
        if tv == Tv::In {
            sum += problem.feature_weight[i];
        }
    }
    for (p, &(i, j)) in problem.user.iter().enumerate() {
        if state.matrix.get(i, j) == Tv::In {
            sum += problem.user_weight[p];
        }
    }
    sum
}

fn potential_value(problem: &SoftProblem, state: &SoftState) -> u64 {
    let mut sum = 0;
    for (i, &tv) in state.bf.iter().enumerate() {
        if tv != Tv::Out {
            sum += problem.feature_weight[i];
        }
    }
    for (p, &(i, j)) in problem.user.iter().enumerate() {
        if state.matrix.get(i, j) != Tv::Out
            && state.bf[i] != Tv::Out
            && state.bf[j] != Tv::Out
        {
            sum += problem.user_weight[p];
        }
    }
    sum
}

/// Admissible upper bound: the still-possible value minus a penalty from a
/// greedy maximal matching of the incompatibility graph restricted to
/// non-out features. Each matched edge sacrifices at least the lighter
/// endpoint. Edges are taken heaviest-min-weight first to tighten the bound;
/// any maximal matching would keep admissibility.
pub fn upper_bound(problem: &SoftProblem, state: &SoftState) -> u64 {
    let graph = incompatibility_graph(problem, state);
    upper_bound_with(problem, state, &graph)
}

fn upper_bound_with(
    problem: &SoftProblem,
    state: &SoftState,
    graph: &IncompatibilityGraph,
) -> u64 {
    let mut edges: Vec<(u64, usize, usize)> = graph
        .edges
        .iter()
        .filter(|&&(i, j)| state.bf[i] != Tv::Out && state.bf[j] != Tv::Out)
        .map(|&(i, j)| {
            (
                problem.feature_weight[i].min(problem.feature_weight[j]),
                i,
                j,
            )
        })
        .collect();
    edges.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used = vec![false; problem.features.len()];
    let mut penalty = 0u64;
    for (w, i, j) in edges {
        if !used[i] && !used[j] {
            used[i] = true;
            used[j] = true;
            penalty += w;
        }
    }
    potential_value(problem, state).saturating_sub(penalty)
}

/// Branch-and-bound over the feature Booleans plus the matrix entries that
/// carry user precedences, with soft-precedence propagation at every node.
pub fn solve_softprec(sub: &Subscription, config: &SolverConfig) -> Solution {
    let problem = SoftProblem::new(sub);
    let mut search = SoftSearch {
        problem: &problem,
        sub,
        config,
        incumbent: Relaxation {
            kept_features: BTreeSet::new(),
            kept_precs: PrecSet::new(),
            value: 0,
        },
        stats: SearchStats::default(),
        started: Instant::now(),
        aborted: false,
    };
    let root = problem.root_state(sub.total_weight());
    search.dfs(root);
    let mut stats = search.stats;
    stats.completed = !search.aborted;
    stats.wall_time = search.started.elapsed();
    Solution {
        relaxation: search.incumbent,
        stats,
    }
}

struct SoftSearch<'a> {
    problem: &'a SoftProblem,
    sub: &'a Subscription,
    config: &'a SolverConfig,
    incumbent: Relaxation,
    stats: SearchStats,
    started: Instant,
    aborted: bool,
}

impl SoftSearch<'_> {
    fn limits_hit(&self) -> bool {
        self.config
            .node_limit
            .is_some_and(|n| self.stats.nodes >= n)
            || self
                .config
                .time_limit
                .is_some_and(|t| self.started.elapsed() >= t)
    }

    /// Unassigned decision variable with the most hard/user occurrences:
    /// with a single global constraint both heuristics reduce to static
    /// degree over its internal structure. Features before matrix entries
    /// on ties.
    fn choose(&self, state: &SoftState) -> Option<Decision> {
        let mut best: Option<(u64, Decision)> = None;
        for (i, &tv) in state.bf.iter().enumerate() {
            if tv.is_assigned() {
                continue;
            }
            let deg = self
                .problem
                .hard
                .iter()
                .chain(&self.problem.user)
                .filter(|&&(a, b)| a == i || b == i)
                .count() as u64;
            if best.as_ref().map_or(true, |&(d, _)| deg > d) {
                best = Some((deg, Decision::Feature(i)));
            }
        }
        if let Some((_, d)) = best {
            return Some(d);
        }
        for &(i, j) in &self.problem.user {
            if state.matrix.get(i, j) == Tv::Unknown {
                return Some(Decision::Entry(i, j));
            }
        }
        None
    }

    fn dfs(&mut self, mut state: SoftState) {
        if self.aborted {
            return;
        }
        self.stats.nodes += 1;
        if self.limits_hit() {
            self.aborted = true;
            return;
        }
        state.v.0 = state.v.0.max(self.incumbent.value + 1);
        if state.v.0 > state.v.1 || softprec_propagate(self.problem, &mut state).is_err() {
            return;
        }
        match self.choose(&state) {
            None => self.record_leaf(&state),
            Some(decision) => {
                for value in [Tv::In, Tv::Out] {
                    let mut child = state.clone();
                    let ok = match decision {
                        Decision::Feature(i) => {
                            child.bf[i] = value;
                            true
                        }
                        Decision::Entry(i, j) => child.matrix.set(i, j, value).is_ok(),
                    };
                    if ok {
                        self.dfs(child);
                    }
                    if self.aborted {
                        return;
                    }
                }
            }
        }
    }

    fn record_leaf(&mut self, state: &SoftState) {
        debug_assert!(state.matrix.is_closed());
        let value = committed_value(self.problem, state);
        if value <= self.incumbent.value && !self.stats.best_trace.is_empty() {
            return;
        }
        let kept_features: BTreeSet<FeatureId> = state
            .bf
            .iter()
            .enumerate()
            .filter(|(_, &tv)| tv == Tv::In)
            .map(|(i, _)| self.problem.features[i])
            .collect();
        let kept_precs: PrecSet = self
            .problem
            .user
            .iter()
            .filter(|&&(i, j)| state.matrix.get(i, j) == Tv::In)
            .map(|&(i, j)| (self.problem.features[i], self.problem.features[j]))
            .collect();
        let _ = self.sub;
        self.incumbent = Relaxation {
            kept_features,
            kept_precs,
            value,
        };
        self.stats.best_trace.push((self.stats.nodes, value));
    }
}

#[derive(Clone, Copy)]
enum Decision {
    Feature(usize),
    Entry(usize, usize),
}
