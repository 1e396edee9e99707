//! Random catalogue and subscription generation: B_c unordered feature
//! pairs drawn uniformly without replacement, each given a uniformly chosen
//! constraint type; subscriptions pick a uniform feature subset, uniform
//! precedence pairs with uniform orientation, and uniform weights in [1, w].

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{Catalogue, FeatureId, ModelError, PrecSet, Subscription};

use super::rng::Rng;

/// Constraint types for a catalogue pair {i, j} with i < j: `i < j`,
/// `i > j`, or mutual exclusion (both directions).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PairType {
    Lt,
    Gt,
    Mutex,
}

#[derive(Clone, Debug)]
pub struct CatalogueSpec {
    pub n_features: u32,
    pub n_pairs: u64,
    /// Allowed constraint types; sampled in sorted order.
    pub types: BTreeSet<PairType>,
}

#[derive(Clone, Debug)]
pub struct SubscriptionSpec {
    pub n_features: u32,
    pub n_precs: u64,
    /// Weights are uniform in [1, max_weight].
    pub max_weight: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("requested {requested} pairs but only {available} exist")]
    TooManyPairs { requested: u64, available: u64 },
    #[error("empty constraint type set")]
    NoTypes,
    #[error("requested {requested} features but the catalogue has {available}")]
    TooManyFeatures { requested: u32, available: u32 },
    #[error("weight bound must be at least 1")]
    ZeroWeightBound,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Colexicographic bijection between pair index p ∈ [0, n(n−1)/2) and the
/// unordered pair {i, j}, 1 ≤ i < j ≤ n: p = (j−1)(j−2)/2 + (i−1).
pub fn pair_from_index(p: u64) -> (u32, u32) {
    // Smallest j with j(j−1)/2 > p.
    let mut j = 2u64;
    while j * (j - 1) / 2 <= p {
        j += 1;
    }
    let i = p - (j - 1) * (j - 2) / 2 + 1;
    (i as u32, j as u32)
}

/// Inverse of [`pair_from_index`].
pub fn index_from_pair(i: u32, j: u32) -> u64 {
    assert!(0 < i && i < j);
    let (i, j) = (i as u64, j as u64);
    (j - 1) * (j - 2) / 2 + (i - 1)
}

pub fn gen_catalogue(spec: &CatalogueSpec, seed: u64) -> Result<Catalogue, GenError> {
    let n = spec.n_features as u64;
    let available = n * n.saturating_sub(1) / 2;
    if spec.n_pairs > available {
        return Err(GenError::TooManyPairs {
            requested: spec.n_pairs,
            available,
        });
    }
    if spec.types.is_empty() {
        return Err(GenError::NoTypes);
    }
    let types: Vec<PairType> = spec.types.iter().copied().collect();
    let mut rng = Rng::new(seed);
    let mut hard = PrecSet::new();
    for p in rng.sample_without_replacement(available, spec.n_pairs) {
        let (i, j) = pair_from_index(p);
        let (i, j) = (FeatureId(i), FeatureId(j));
        let ty = types[rng.below(types.len() as u64) as usize];
        match ty {
            PairType::Lt => {
                hard.insert(i, j)?;
            }
            PairType::Gt => {
                hard.insert(j, i)?;
            }
            PairType::Mutex => {
                hard.insert(i, j)?;
                hard.insert(j, i)?;
            }
        }
    }
    Ok(Catalogue::new(spec.n_features, hard)?)
}

pub fn gen_subscription(
    cat: &Catalogue,
    spec: &SubscriptionSpec,
    seed: u64,
) -> Result<Subscription, GenError> {
    if spec.n_features > cat.n_features() {
        return Err(GenError::TooManyFeatures {
            requested: spec.n_features,
            available: cat.n_features(),
        });
    }
    if spec.max_weight == 0 {
        return Err(GenError::ZeroWeightBound);
    }
    let f = spec.n_features as u64;
    let available = f * f.saturating_sub(1) / 2;
    if spec.n_precs > available {
        return Err(GenError::TooManyPairs {
            requested: spec.n_precs,
            available,
        });
    }
    let mut rng = Rng::new(seed);
    let mut chosen: Vec<FeatureId> = rng
        .sample_without_replacement(cat.n_features() as u64, f)
        .into_iter()
        .map(|k| FeatureId(k as u32 + 1))
        .collect();
    chosen.sort();
    let mut user = PrecSet::new();
    let mut attempts = rng.sample_without_replacement(available, spec.n_precs);
    // Pair indices address positions in the sorted chosen list.
    for p in attempts.drain(..) {
        let (a, b) = pair_from_index(p);
        let (i, j) = (chosen[a as usize - 1], chosen[b as usize - 1]);
        if rng.coin() {
            user.insert(j, i)?;
        } else {
            user.insert(i, j)?;
        }
    }
    let features: BTreeSet<FeatureId> = chosen.iter().copied().collect();
    let mut feature_weight = BTreeMap::new();
    for &f in &chosen {
        feature_weight.insert(f, rng.range(1, spec.max_weight));
    }
    let mut prec_weight = BTreeMap::new();
    for (i, j) in user.iter() {
        prec_weight.insert((i, j), rng.range(1, spec.max_weight));
    }
    Ok(Subscription::new(
        cat.clone(),
        features,
        feature_weight,
        user,
        prec_weight,
    )?)
}
