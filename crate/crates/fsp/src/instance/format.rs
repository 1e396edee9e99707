//! Line-oriented `.fsp` instance text format and the generator manifest.
//!
//! Directives (1-based feature ids, `#` starts a comment):
//!   catalogue <n>
//!   hard <i> <j>            one catalogue precedence i before j
//!   mutex <i> <j>           sugar for `hard i j` plus `hard j i`
//!   feature <id> <weight>   subscribed feature
//!   uprec <i> <j> <weight>  user precedence
//!   source <ids…>           optional region partition for enumeration
//!   target <ids…>

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{
    BiRegionCatalogue, BiRegionSubscription, Catalogue, FeatureId, ModelError, PrecSet,
    Subscription,
};

#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("line {0}: {1}")]
    Syntax(usize, String),
    #[error("line {0}: feature id {1} out of range")]
    IdOutOfRange(usize, u32),
    #[error("line {0}: duplicate declaration of {1}")]
    Duplicate(usize, String),
    #[error("missing catalogue directive")]
    MissingCatalogue,
    #[error("instance has no source/target partition")]
    MissingPartition,
    #[error("region partition does not cover pair ({0}, {1})")]
    PairCrossesRegions(FeatureId, FeatureId),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Parsed instance file, in canonical (sorted) order for lossless
/// write∘parse round-trips.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub catalogue_n: u32,
    pub hard: PrecSet,
    pub feature_weight: BTreeMap<FeatureId, u64>,
    pub prec_weight: BTreeMap<(FeatureId, FeatureId), u64>,
    pub source: Option<BTreeSet<FeatureId>>,
    pub target: Option<BTreeSet<FeatureId>>,
}

impl Instance {
    pub fn from_subscription(sub: &Subscription) -> Self {
        Self {
            catalogue_n: sub.catalogue().n_features(),
            hard: sub.catalogue().hard().clone(),
            feature_weight: sub
                .features()
                .iter()
                .map(|&f| (f, sub.feature_weight(f)))
                .collect(),
            prec_weight: sub
                .user()
                .iter()
                .map(|(i, j)| ((i, j), sub.prec_weight(i, j)))
                .collect(),
            source: None,
            target: None,
        }
    }

    /// Stores the merged form of a bi-region subscription along with its
    /// region partition.
    pub fn from_bi_region(bi: &BiRegionSubscription) -> Result<Self, ModelError> {
        let reformulated = crate::model::reformulate(bi)?;
        let mut instance = Self::from_subscription(&reformulated.sub);
        instance.source = Some(reformulated.source_features);
        instance.target = Some(reformulated.target_features);
        Ok(instance)
    }

    pub fn to_subscription(&self) -> Result<Subscription, ModelError> {
        let catalogue = Catalogue::new(self.catalogue_n, self.hard.clone())?;
        Subscription::new(
            catalogue,
            self.feature_weight.keys().copied().collect(),
            self.feature_weight.clone(),
            self.prec_weight.keys().map(|&(i, j)| (i, j)).collect(),
            self.prec_weight.clone(),
        )
    }

    /// Rebuilds the bi-region subscription from the merged form plus the
    /// partition: pairs within the source region keep their orientation,
    /// pairs within the target region are transposed back. A pair crossing
    /// the two regions cannot have come from either region and is rejected.
    pub fn to_bi_region(&self) -> Result<BiRegionSubscription, FormatError> {
        let (source, target) = match (&self.source, &self.target) {
            (Some(s), Some(t)) => (s.clone(), t.clone()),
            _ => return Err(FormatError::MissingPartition),
        };
        let within = |set: &BTreeSet<FeatureId>, i: FeatureId, j: FeatureId| {
            set.contains(&i) && set.contains(&j)
        };
        let check = |i: FeatureId, j: FeatureId| -> Result<(), FormatError> {
            if !within(&source, i, j) && !within(&target, i, j) {
                return Err(FormatError::PairCrossesRegions(i, j));
            }
            Ok(())
        };
        for (i, j) in self.hard.iter() {
            check(i, j)?;
        }
        for &(i, j) in self.prec_weight.keys() {
            check(i, j)?;
        }
        let cat = BiRegionCatalogue::new(
            source.clone(),
            target.clone(),
            self.hard.restrict(&source),
            self.hard.restrict(&target).transpose(),
        )?;
        let user: PrecSet = self.prec_weight.keys().copied().collect();
        let subscribed: BTreeSet<FeatureId> = self.feature_weight.keys().copied().collect();
        let mut bi = BiRegionSubscription::new(
            &cat,
            source.intersection(&subscribed).copied().collect(),
            target.intersection(&subscribed).copied().collect(),
            user.restrict(&source),
            user.restrict(&target).transpose(),
        )?;
        bi.feature_weight = self.feature_weight.clone();
        bi.prec_weight = self.prec_weight.clone();
        Ok(bi)
    }
}

pub fn write_fsp(instance: &Instance) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "catalogue {}", instance.catalogue_n);
    let mut emitted_mutex: BTreeSet<(FeatureId, FeatureId)> = BTreeSet::new();
    for (i, j) in instance.hard.iter() {
        if instance.hard.contains(j, i) {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if emitted_mutex.insert((a, b)) {
                let _ = writeln!(out, "mutex {} {}", a.0, b.0);
            }
        } else {
            let _ = writeln!(out, "hard {} {}", i.0, j.0);
        }
    }
    for (&f, &w) in &instance.feature_weight {
        let _ = writeln!(out, "feature {} {}", f.0, w);
    }
    for (&(i, j), &w) in &instance.prec_weight {
        let _ = writeln!(out, "uprec {} {} {}", i.0, j.0, w);
    }
    for (name, set) in [("source", &instance.source), ("target", &instance.target)] {
        if let Some(set) = set {
            let ids: Vec<String> = set.iter().map(|f| f.0.to_string()).collect();
            let _ = writeln!(out, "{} {}", name, ids.join(" "));
        }
    }
    out
}

pub fn parse_fsp(text: &str) -> Result<Instance, FormatError> {
    let mut catalogue_n: Option<u32> = None;
    let mut hard = PrecSet::new();
    let mut feature_weight: BTreeMap<FeatureId, u64> = BTreeMap::new();
    let mut prec_weight: BTreeMap<(FeatureId, FeatureId), u64> = BTreeMap::new();
    let mut source: Option<BTreeSet<FeatureId>> = None;
    let mut target: Option<BTreeSet<FeatureId>> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = body.split_whitespace().collect();
        let syntax = |msg: &str| FormatError::Syntax(line, msg.to_string());
        let parse_id = |tok: &str| -> Result<FeatureId, FormatError> {
            let id: u32 = tok.parse().map_err(|_| syntax("bad feature id"))?;
            if id == 0 {
                return Err(FormatError::IdOutOfRange(line, id));
            }
            if let Some(n) = catalogue_n {
                if id > n {
                    return Err(FormatError::IdOutOfRange(line, id));
                }
            }
            Ok(FeatureId(id))
        };
        match fields.as_slice() {
            [] => {}
            ["catalogue", n] => {
                if catalogue_n.is_some() {
                    return Err(FormatError::Duplicate(line, "catalogue".to_string()));
                }
                catalogue_n = Some(n.parse().map_err(|_| syntax("bad feature count"))?);
            }
            ["hard", i, j] | ["mutex", i, j] => {
                if catalogue_n.is_none() {
                    return Err(FormatError::MissingCatalogue);
                }
                let (i, j) = (parse_id(i)?, parse_id(j)?);
                if i == j {
                    return Err(syntax("reflexive precedence"));
                }
                let mutex = fields[0] == "mutex";
                if !hard.insert(i, j).map_err(FormatError::Model)? {
                    return Err(FormatError::Duplicate(line, format!("hard {} {}", i.0, j.0)));
                }
                if mutex && !hard.insert(j, i).map_err(FormatError::Model)? {
                    return Err(FormatError::Duplicate(line, format!("hard {} {}", j.0, i.0)));
                }
            }
            ["feature", id, w] => {
                let f = parse_id(id)?;
                let w: u64 = w.parse().map_err(|_| syntax("bad weight"))?;
                if feature_weight.insert(f, w).is_some() {
                    return Err(FormatError::Duplicate(line, format!("feature {}", f.0)));
                }
            }
            ["uprec", i, j, w] => {
                let (i, j) = (parse_id(i)?, parse_id(j)?);
                if i == j {
                    return Err(syntax("reflexive precedence"));
                }
                let w: u64 = w.parse().map_err(|_| syntax("bad weight"))?;
                if prec_weight.insert((i, j), w).is_some() {
                    return Err(FormatError::Duplicate(line, format!("uprec {} {}", i.0, j.0)));
                }
            }
            ["source", ids @ ..] | ["target", ids @ ..] => {
                let slot = if fields[0] == "source" {
                    &mut source
                } else {
                    &mut target
                };
                if slot.is_some() {
                    return Err(FormatError::Duplicate(line, fields[0].to_string()));
                }
                let set: BTreeSet<FeatureId> = ids
                    .iter()
                    .map(|t| parse_id(t))
                    .collect::<Result<_, _>>()?;
                *slot = Some(set);
            }
            _ => return Err(syntax("unrecognised directive")),
        }
    }
    Ok(Instance {
        catalogue_n: catalogue_n.ok_or(FormatError::MissingCatalogue)?,
        hard,
        feature_weight,
        prec_weight,
        source,
        target,
    })
}

/// Generator manifest: simple `key: value` lines, sorted by key.
pub fn write_manifest(entries: &BTreeMap<String, String>) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    for (k, v) in entries {
        let _ = writeln!(out, "{k}: {v}");
    }
    out
}

pub fn parse_manifest(text: &str) -> Result<BTreeMap<String, String>, FormatError> {
    let mut out = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let (key, value) = raw
            .split_once(':')
            .ok_or_else(|| FormatError::Syntax(k + 1, "missing `:`".to_string()))?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::gen::{
        gen_catalogue, gen_subscription, CatalogueSpec, PairType, SubscriptionSpec,
    };
    use super::*;

    fn fid(i: u32) -> FeatureId {
        FeatureId(i)
    }

    #[test]
    fn round_trip_on_generated_instances() {
        let spec = CatalogueSpec {
            n_features: 12,
            n_pairs: 20,
            types: [PairType::Lt, PairType::Gt, PairType::Mutex]
                .into_iter()
                .collect(),
        };
        let sub_spec = SubscriptionSpec {
            n_features: 6,
            n_precs: 4,
            max_weight: 4,
        };
        for seed in 0..20 {
            let cat = gen_catalogue(&spec, seed).unwrap();
            let sub = gen_subscription(&cat, &sub_spec, seed + 1000).unwrap();
            let instance = Instance::from_subscription(&sub);
            let parsed = parse_fsp(&write_fsp(&instance)).unwrap();
            assert_eq!(parsed, instance);
            assert_eq!(parsed.to_subscription().unwrap(), sub);
        }
    }

    #[test]
    fn reflexive_hard_is_rejected() {
        let err = parse_fsp("catalogue 2\nhard 1 1\n").unwrap_err();
        assert_eq!(err, FormatError::Syntax(2, "reflexive precedence".to_string()));
    }

    #[test]
    fn id_out_of_range_is_rejected() {
        let err = parse_fsp("catalogue 2\nfeature 3 1\n").unwrap_err();
        assert_eq!(err, FormatError::IdOutOfRange(2, 3));
    }

    #[test]
    fn duplicates_are_rejected() {
        let err = parse_fsp("catalogue 2\nfeature 1 1\nfeature 1 2\n").unwrap_err();
        assert!(matches!(err, FormatError::Duplicate(3, _)));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# header\ncatalogue 3\n\nhard 1 2 # trailing\nfeature 1 2\n";
        let instance = parse_fsp(text).unwrap();
        assert_eq!(instance.catalogue_n, 3);
        assert!(instance.hard.contains(fid(1), fid(2)));
        assert_eq!(instance.feature_weight[&fid(1)], 2);
    }

    #[test]
    fn mutex_expands_to_both_orientations() {
        let instance = parse_fsp("catalogue 2\nmutex 1 2\n").unwrap();
        assert!(instance.hard.contains(fid(1), fid(2)));
        assert!(instance.hard.contains(fid(2), fid(1)));
        // And the writer folds it back into one directive.
        assert_eq!(write_fsp(&instance).matches("mutex").count(), 1);
    }

    #[test]
    fn bi_region_round_trip_through_partition() {
        use crate::model::{reformulate, PrecSet};
        let cat = BiRegionCatalogue::new(
            [1, 2, 3].map(fid).into(),
            [2, 3, 4].map(fid).into(),
            [(fid(1), fid(2))].into_iter().collect(),
            [(fid(4), fid(3))].into_iter().collect(),
        )
        .unwrap();
        let bi = BiRegionSubscription::new(
            &cat,
            [1, 2, 3].map(fid).into(),
            [2, 3, 4].map(fid).into(),
            [(fid(2), fid(3))].into_iter().collect(),
            PrecSet::new(),
        )
        .unwrap();
        let instance = Instance::from_bi_region(&bi).unwrap();
        let parsed = parse_fsp(&write_fsp(&instance)).unwrap();
        let rebuilt = parsed.to_bi_region().unwrap();
        let before = reformulate(&bi).unwrap();
        let after = reformulate(&rebuilt).unwrap();
        assert_eq!(before.sub, after.sub);
        assert_eq!(before.source_features, after.source_features);
        assert_eq!(before.target_features, after.target_features);
    }

    #[test]
    fn manifest_round_trip() {
        let entries: BTreeMap<String, String> = [
            ("seed".to_string(), "42".to_string()),
            ("catalogue".to_string(), "50,250,<>".to_string()),
        ]
        .into_iter()
        .collect();
        let text = write_manifest(&entries);
        assert_eq!(parse_manifest(&text).unwrap(), entries);
    }
}
