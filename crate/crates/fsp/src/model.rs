//! Domain types for catalogues, subscriptions and relaxations, plus the
//! polynomial-time services: consistency, completion, anti-subscription,
//! bi-region reformulation, and relaxation value/verification.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use thiserror::Error;

/// 1-based feature identifier, dense in `[1, n]` within one catalogue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureId(pub u32);

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("reflexive precedence {0} < {0} is not allowed")]
    ReflexivePair(FeatureId),
    #[error("feature {0} is not part of the catalogue")]
    UnknownFeature(FeatureId),
    #[error("feature {0} is not part of the subscription")]
    DanglingFeature(FeatureId),
    #[error("precedence {0} < {1} is not part of the subscription")]
    DanglingPrec(FeatureId, FeatureId),
    #[error("weight must be >= 1")]
    ZeroWeight,
    #[error("subscription is inconsistent")]
    Inconsistent,
    #[error("reversible feature {0} is missing from the {1} region")]
    MissingReversible(FeatureId, &'static str),
    #[error("kept precedence {0} < {1} has a dropped endpoint")]
    PrecWithoutEndpoint(FeatureId, FeatureId),
    #[error("relaxation value mismatch: stated {stated}, recomputed {actual}")]
    ValueMismatch { stated: u64, actual: u64 },
    #[error("kept sets are cyclic")]
    CyclicRelaxation,
}

/// An irreflexive set of ordered precedence pairs `(i, j)` meaning `i < j`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrecSet {
    pairs: BTreeSet<(FeatureId, FeatureId)>,
}

impl PrecSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (FeatureId, FeatureId)>>(
        iter: I,
    ) -> Result<Self, ModelError> {
        let mut set = Self::new();
        for (i, j) in iter {
            set.insert(i, j)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, i: FeatureId, j: FeatureId) -> Result<bool, ModelError> {
        if i == j {
            return Err(ModelError::ReflexivePair(i));
        }
        Ok(self.pairs.insert((i, j)))
    }

    pub fn contains(&self, i: FeatureId, j: FeatureId) -> bool {
        self.pairs.contains(&(i, j))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (FeatureId, FeatureId)> + '_ {
        self.pairs.iter().copied()
    }

    /// `R ↓ Y`: pairs with both endpoints in `keep`.
    pub fn restrict(&self, keep: &BTreeSet<FeatureId>) -> Self {
        Self {
            pairs: self
                .pairs
                .iter()
                .filter(|(i, j)| keep.contains(i) && keep.contains(j))
                .copied()
                .collect(),
        }
    }

    /// The transpose relation `{(j, i) | (i, j) ∈ R}`.
    pub fn transpose(&self) -> Self {
        Self {
            pairs: self.pairs.iter().map(|&(i, j)| (j, i)).collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            pairs: self.pairs.union(&other.pairs).copied().collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.pairs.is_subset(&other.pairs)
    }
}

impl FromIterator<(FeatureId, FeatureId)> for PrecSet {
    /// Panics on reflexive pairs; use `from_pairs` for fallible construction.
    fn from_iter<I: IntoIterator<Item = (FeatureId, FeatureId)>>(iter: I) -> Self {
        Self::from_pairs(iter).expect("reflexive pair")
    }
}

/// Result of a transitive-closure computation. Reflexive pairs are never
/// stored; a closure that would contain one reports `cyclic` instead.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Closure {
    pub pairs: PrecSet,
    pub cyclic: bool,
}

/// Transitive closure of `rel` over `universe`, O(|universe|^3).
pub fn transitive_closure(rel: &PrecSet, universe: &BTreeSet<FeatureId>) -> Closure {
    let ids: Vec<FeatureId> = universe.iter().copied().collect();
    let index: BTreeMap<FeatureId, usize> = ids.iter().enumerate().map(|(k, &f)| (f, k)).collect();
    let n = ids.len();
    let mut reach = vec![false; n * n];
    for (i, j) in rel.iter() {
        reach[index[&i] * n + index[&j]] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i * n + k] {
                for j in 0..n {
                    if reach[k * n + j] {
                        reach[i * n + j] = true;
                    }
                }
            }
        }
    }
    let mut pairs = PrecSet::new();
    let mut cyclic = false;
    for i in 0..n {
        for j in 0..n {
            if reach[i * n + j] {
                if i == j {
                    cyclic = true;
                } else {
                    pairs.insert(ids[i], ids[j]).unwrap();
                }
            }
        }
    }
    Closure { pairs, cyclic }
}

/// Merged catalogue: a feature universe `[1, n_features]` plus hard
/// precedences. An exclusion between i and j is stored as both (i,j) and (j,i).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Catalogue {
    n_features: u32,
    hard: PrecSet,
}

impl Catalogue {
    pub fn new(n_features: u32, hard: PrecSet) -> Result<Self, ModelError> {
        for (i, j) in hard.iter() {
            for f in [i, j] {
                if f.0 < 1 || f.0 > n_features {
                    return Err(ModelError::UnknownFeature(f));
                }
            }
        }
        Ok(Self { n_features, hard })
    }

    pub fn n_features(&self) -> u32 {
        self.n_features
    }

    pub fn hard(&self) -> &PrecSet {
        &self.hard
    }

    pub fn features(&self) -> impl Iterator<Item = FeatureId> + '_ {
        (1..=self.n_features).map(FeatureId)
    }
}

/// Original two-region catalogue: source/target feature sets with their own
/// hard precedences. Reversible features are the intersection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BiRegionCatalogue {
    pub source_features: BTreeSet<FeatureId>,
    pub target_features: BTreeSet<FeatureId>,
    pub source_hard: PrecSet,
    pub target_hard: PrecSet,
}

impl BiRegionCatalogue {
    pub fn new(
        source_features: BTreeSet<FeatureId>,
        target_features: BTreeSet<FeatureId>,
        source_hard: PrecSet,
        target_hard: PrecSet,
    ) -> Result<Self, ModelError> {
        for (i, j) in source_hard.iter() {
            for f in [i, j] {
                if !source_features.contains(&f) {
                    return Err(ModelError::UnknownFeature(f));
                }
            }
        }
        for (i, j) in target_hard.iter() {
            for f in [i, j] {
                if !target_features.contains(&f) {
                    return Err(ModelError::UnknownFeature(f));
                }
            }
        }
        Ok(Self {
            source_features,
            target_features,
            source_hard,
            target_hard,
        })
    }

    pub fn reversible(&self) -> BTreeSet<FeatureId> {
        self.source_features
            .intersection(&self.target_features)
            .copied()
            .collect()
    }

    /// Merge into a single-region catalogue: target precedences transposed.
    pub fn merge(&self) -> Result<Catalogue, ModelError> {
        let n = self
            .source_features
            .iter()
            .chain(self.target_features.iter())
            .map(|f| f.0)
            .max()
            .unwrap_or(0);
        Catalogue::new(n, self.source_hard.union(&self.target_hard.transpose()))
    }
}

/// A user's feature subscription over a merged catalogue: selected features,
/// induced hard precedences, and weighted user precedences. Immutable after
/// construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subscription {
    catalogue: Catalogue,
    features: BTreeSet<FeatureId>,
    hard: PrecSet,
    user: PrecSet,
    feature_weight: BTreeMap<FeatureId, u64>,
    prec_weight: BTreeMap<(FeatureId, FeatureId), u64>,
}

impl Subscription {
    /// Builds a subscription; `hard` is derived by restricting the catalogue
    /// precedences to `features`.
    pub fn new(
        catalogue: Catalogue,
        features: BTreeSet<FeatureId>,
        feature_weight: BTreeMap<FeatureId, u64>,
        user: PrecSet,
        prec_weight: BTreeMap<(FeatureId, FeatureId), u64>,
    ) -> Result<Self, ModelError> {
        for &f in &features {
            if f.0 < 1 || f.0 > catalogue.n_features() {
                return Err(ModelError::UnknownFeature(f));
            }
        }
        for (i, j) in user.iter() {
            for f in [i, j] {
                if !features.contains(&f) {
                    return Err(ModelError::DanglingFeature(f));
                }
            }
        }
        let mut feature_weight = feature_weight;
        for &f in &features {
            let w = *feature_weight.entry(f).or_insert(1);
            if w == 0 {
                return Err(ModelError::ZeroWeight);
            }
        }
        feature_weight.retain(|f, _| features.contains(f));
        let mut prec_weight = prec_weight;
        for (i, j) in user.iter() {
            let w = *prec_weight.entry((i, j)).or_insert(1);
            if w == 0 {
                return Err(ModelError::ZeroWeight);
            }
        }
        prec_weight.retain(|&(i, j), _| user.contains(i, j));
        let hard = catalogue.hard().restrict(&features);
        Ok(Self {
            catalogue,
            features,
            hard,
            user,
            feature_weight,
            prec_weight,
        })
    }

    /// Unit-weight subscription helper.
    pub fn unit_weights(
        catalogue: Catalogue,
        features: BTreeSet<FeatureId>,
        user: PrecSet,
    ) -> Result<Self, ModelError> {
        Self::new(catalogue, features, BTreeMap::new(), user, BTreeMap::new())
    }

    pub fn catalogue(&self) -> &Catalogue {
        &self.catalogue
    }

    pub fn features(&self) -> &BTreeSet<FeatureId> {
        &self.features
    }

    pub fn hard(&self) -> &PrecSet {
        &self.hard
    }

    pub fn user(&self) -> &PrecSet {
        &self.user
    }

    pub fn feature_weight(&self, f: FeatureId) -> u64 {
        self.feature_weight[&f]
    }

    pub fn prec_weight(&self, i: FeatureId, j: FeatureId) -> u64 {
        self.prec_weight[&(i, j)]
    }

    /// Sum of all feature and user-precedence weights.
    pub fn total_weight(&self) -> u64 {
        self.feature_weight.values().sum::<u64>() + self.prec_weight.values().sum::<u64>()
    }

    fn all_precs(&self) -> PrecSet {
        self.hard.union(&self.user)
    }
}

/// A strict total order, listed first-to-last.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TotalOrder(pub Vec<FeatureId>);

impl TotalOrder {
    /// All ordered pairs (earlier, later) induced by the sequence.
    pub fn pairs(&self) -> PrecSet {
        let mut set = PrecSet::new();
        for (k, &i) in self.0.iter().enumerate() {
            for &j in &self.0[k + 1..] {
                set.insert(i, j).unwrap();
            }
        }
        set
    }

    /// True iff every pair of `rel` appears in this order.
    pub fn extends(&self, rel: &PrecSet) -> bool {
        let pos: BTreeMap<FeatureId, usize> =
            self.0.iter().enumerate().map(|(k, &f)| (f, k)).collect();
        rel.iter()
            .all(|(i, j)| matches!((pos.get(&i), pos.get(&j)), (Some(a), Some(b)) if a < b))
    }

    pub fn reversed(&self) -> TotalOrder {
        TotalOrder(self.0.iter().rev().copied().collect())
    }
}

impl fmt::Display for TotalOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join(" < "))
    }
}

/// Kahn topological sort of `rel` over `universe`, popping the smallest ready
/// id first. Returns None when the relation is cyclic.
pub fn topological_order(rel: &PrecSet, universe: &BTreeSet<FeatureId>) -> Option<TotalOrder> {
    let ids: Vec<FeatureId> = universe.iter().copied().collect();
    let index: BTreeMap<FeatureId, usize> = ids.iter().enumerate().map(|(k, &f)| (f, k)).collect();
    let n = ids.len();
    let mut indegree = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j) in rel.iter() {
        let (a, b) = (index[&i], index[&j]);
        succ[a].push(b);
        indegree[b] += 1;
    }
    let mut ready: BinaryHeap<std::cmp::Reverse<usize>> = (0..n)
        .filter(|&k| indegree[k] == 0)
        .map(std::cmp::Reverse)
        .collect();
    let mut out = Vec::with_capacity(n);
    while let Some(std::cmp::Reverse(k)) = ready.pop() {
        out.push(ids[k]);
        for &m in &succ[k] {
            indegree[m] -= 1;
            if indegree[m] == 0 {
                ready.push(std::cmp::Reverse(m));
            }
        }
    }
    (out.len() == n).then_some(TotalOrder(out))
}

/// True iff `<F, H ∪ P>` is acyclic; O(|F| + |H| + |P|).
pub fn is_consistent(sub: &Subscription) -> bool {
    consistency_witness(sub).is_some()
}

/// A witness total order extending `H ∪ P`, or None when inconsistent.
pub fn consistency_witness(sub: &Subscription) -> Option<TotalOrder> {
    topological_order(&sub.all_precs(), sub.features())
}

/// Deterministic completion of a consistent subscription (smallest feature id
/// first among ready nodes).
pub fn complete(sub: &Subscription) -> Result<TotalOrder, ModelError> {
    consistency_witness(sub).ok_or(ModelError::Inconsistent)
}

/// The partial order `(H ∪ P)*` of a consistent subscription.
pub fn partial_completion(sub: &Subscription) -> Result<PrecSet, ModelError> {
    let closure = transitive_closure(&sub.all_precs(), sub.features());
    if closure.cyclic {
        return Err(ModelError::Inconsistent);
    }
    Ok(closure.pairs)
}

/// Features and precedences whose addition would break a consistent
/// subscription.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AntiSubscription {
    pub blocked_features: BTreeSet<FeatureId>,
    pub blocked_precs: PrecSet,
}

impl AntiSubscription {
    pub fn size(&self) -> usize {
        self.blocked_features.len() + self.blocked_precs.len()
    }
}

/// Computes the anti-subscription by probing each candidate addition with a
/// consistency check. `include_existing` controls whether pairs already in
/// `(H ∪ P)*` are probed; they can never flip a consistent subscription, so
/// the default path excludes them.
pub fn anti_subscription(
    sub: &Subscription,
    include_existing: bool,
) -> Result<AntiSubscription, ModelError> {
    if !is_consistent(sub) {
        return Err(ModelError::Inconsistent);
    }
    let mut blocked_features = BTreeSet::new();
    for f in sub.catalogue().features() {
        if sub.features().contains(&f) {
            continue; // trivial non-member
        }
        let mut extended: BTreeSet<FeatureId> = sub.features().clone();
        extended.insert(f);
        let rel = sub.catalogue().hard().restrict(&extended).union(sub.user());
        if topological_order(&rel, &extended).is_none() {
            blocked_features.insert(f);
        }
    }
    let existing = transitive_closure(&sub.all_precs(), sub.features()).pairs;
    let base = sub.all_precs();
    let mut blocked_precs = PrecSet::new();
    for &i in sub.features() {
        for &j in sub.features() {
            if i == j || (!include_existing && existing.contains(i, j)) {
                continue;
            }
            let mut probe = base.clone();
            probe.insert(i, j).unwrap();
            if topological_order(&probe, sub.features()).is_none() {
                blocked_precs.insert(i, j).unwrap();
            }
        }
    }
    Ok(AntiSubscription {
        blocked_features,
        blocked_precs,
    })
}

/// Bi-region subscription: source and target region tuples plus weights,
/// weights keyed in merged (source) orientation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BiRegionSubscription {
    pub source_features: BTreeSet<FeatureId>,
    pub target_features: BTreeSet<FeatureId>,
    pub source_hard: PrecSet,
    pub target_hard: PrecSet,
    pub source_user: PrecSet,
    pub target_user: PrecSet,
    pub feature_weight: BTreeMap<FeatureId, u64>,
    pub prec_weight: BTreeMap<(FeatureId, FeatureId), u64>,
}

impl BiRegionSubscription {
    /// Derives the per-region hard sets from the catalogue and mirrors user
    /// precedences between reversible features, as the region definitions
    /// require.
    pub fn new(
        cat: &BiRegionCatalogue,
        source_features: BTreeSet<FeatureId>,
        target_features: BTreeSet<FeatureId>,
        source_user: PrecSet,
        target_user: PrecSet,
    ) -> Result<Self, ModelError> {
        for &f in &source_features {
            if !cat.source_features.contains(&f) {
                return Err(ModelError::UnknownFeature(f));
            }
        }
        for &f in &target_features {
            if !cat.target_features.contains(&f) {
                return Err(ModelError::UnknownFeature(f));
            }
        }
        // Reversible features selected in one region must appear in both.
        for &f in source_features.union(&target_features) {
            if cat.source_features.contains(&f) && cat.target_features.contains(&f) {
                if !source_features.contains(&f) {
                    return Err(ModelError::MissingReversible(f, "source"));
                }
                if !target_features.contains(&f) {
                    return Err(ModelError::MissingReversible(f, "target"));
                }
            }
        }
        let reversible: BTreeSet<FeatureId> = source_features
            .intersection(&target_features)
            .copied()
            .collect();
        let mut source_hard = cat.source_hard.restrict(&source_features);
        for (i, j) in cat.target_hard.iter() {
            if reversible.contains(&i) && reversible.contains(&j) {
                source_hard.insert(j, i)?;
            }
        }
        let mut target_hard = cat.target_hard.restrict(&target_features);
        for (i, j) in cat.source_hard.iter() {
            if reversible.contains(&i) && reversible.contains(&j) {
                target_hard.insert(j, i)?;
            }
        }
        for (i, j) in source_user.iter() {
            for f in [i, j] {
                if !source_features.contains(&f) {
                    return Err(ModelError::DanglingFeature(f));
                }
            }
        }
        for (i, j) in target_user.iter() {
            for f in [i, j] {
                if !target_features.contains(&f) {
                    return Err(ModelError::DanglingFeature(f));
                }
            }
        }
        let mut source_user = source_user;
        let mut target_user = target_user;
        // Mirror user precedences between reversible pairs.
        let mirror_s: Vec<_> = target_user
            .iter()
            .filter(|(i, j)| reversible.contains(i) && reversible.contains(j))
            .collect();
        for (i, j) in mirror_s {
            source_user.insert(j, i)?;
        }
        let mirror_t: Vec<_> = source_user
            .iter()
            .filter(|(i, j)| reversible.contains(i) && reversible.contains(j))
            .collect();
        for (i, j) in mirror_t {
            target_user.insert(j, i)?;
        }
        Ok(Self {
            source_features,
            target_features,
            source_hard,
            target_hard,
            source_user,
            target_user,
            feature_weight: BTreeMap::new(),
            prec_weight: BTreeMap::new(),
        })
    }

    pub fn reversible(&self) -> BTreeSet<FeatureId> {
        self.source_features
            .intersection(&self.target_features)
            .copied()
            .collect()
    }
}

/// A reformulated bi-region subscription with its region labels retained.
#[derive(Clone, Debug)]
pub struct Reformulated {
    pub sub: Subscription,
    pub source_features: BTreeSet<FeatureId>,
    pub target_features: BTreeSet<FeatureId>,
}

impl Reformulated {
    pub fn reversible(&self) -> BTreeSet<FeatureId> {
        self.source_features
            .intersection(&self.target_features)
            .copied()
            .collect()
    }
}

/// Merges a bi-region subscription into a single-region one: target relations
/// are transposed and unioned with the source relations.
pub fn reformulate(bi: &BiRegionSubscription) -> Result<Reformulated, ModelError> {
    let features: BTreeSet<FeatureId> = bi
        .source_features
        .union(&bi.target_features)
        .copied()
        .collect();
    let n = features.iter().map(|f| f.0).max().unwrap_or(0);
    let hard = bi.source_hard.union(&bi.target_hard.transpose());
    let user = bi.source_user.union(&bi.target_user.transpose());
    let catalogue = Catalogue::new(n, hard)?;
    let mut prec_weight = bi.prec_weight.clone();
    for (i, j) in user.iter() {
        prec_weight.entry((i, j)).or_insert(1);
    }
    let sub = Subscription::new(
        catalogue,
        features,
        bi.feature_weight.clone(),
        user,
        prec_weight,
    )?;
    Ok(Reformulated {
        sub,
        source_features: bi.source_features.clone(),
        target_features: bi.target_features.clone(),
    })
}

/// A relaxation: kept features, kept user precedences, and its value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relaxation {
    pub kept_features: BTreeSet<FeatureId>,
    pub kept_precs: PrecSet,
    pub value: u64,
}

/// `Value` of a relaxation: sum of kept feature and precedence weights.
pub fn value_of(relax: &Relaxation, sub: &Subscription) -> Result<u64, ModelError> {
    let mut value = 0u64;
    for &f in &relax.kept_features {
        if !sub.features().contains(&f) {
            return Err(ModelError::DanglingFeature(f));
        }
        value += sub.feature_weight(f);
    }
    for (i, j) in relax.kept_precs.iter() {
        if !sub.user().contains(i, j) {
            return Err(ModelError::DanglingPrec(i, j));
        }
        value += sub.prec_weight(i, j);
    }
    Ok(value)
}

/// Checks a relaxation: kept sets must reference the subscription, kept
/// precedences must not dangle, and the kept graph must be acyclic. Returns
/// the recomputed value. The first violated condition is reported.
pub fn verify_relaxation(sub: &Subscription, relax: &Relaxation) -> Result<u64, ModelError> {
    let value = value_of(relax, sub)?;
    for (i, j) in relax.kept_precs.iter() {
        if !relax.kept_features.contains(&i) || !relax.kept_features.contains(&j) {
            return Err(ModelError::PrecWithoutEndpoint(i, j));
        }
    }
    let rel = sub
        .hard()
        .restrict(&relax.kept_features)
        .union(&relax.kept_precs);
    if topological_order(&rel, &relax.kept_features).is_none() {
        return Err(ModelError::CyclicRelaxation);
    }
    if relax.value != value {
        return Err(ModelError::ValueMismatch {
            stated: relax.value,
            actual: value,
        });
    }
    Ok(value)
}
