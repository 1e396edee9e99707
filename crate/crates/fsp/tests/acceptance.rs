//! End-to-end acceptance suite. Each criterion is checked independently and
//! reported with a single pass/fail line; the test fails if any criterion
//! fails.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use fsp::encode::{
    encode_atom, encode_mip, encode_symbol_binary, encode_symbol_unary, encode_wcsp,
    mip_feasible, mip_optimum, unit_propagate, wcnf_min_cost, wcsp_min_cost, ClauseGroup,
    VarRole,
};
use fsp::enumerate::{get_solutions, linear_extensions, OrderPair};
use fsp::instance::{gen_catalogue, gen_subscription, CatalogueSpec, PairType, Rng,
    SubscriptionSpec};
use fsp::model::{
    is_consistent, reformulate, transitive_closure, BiRegionCatalogue, BiRegionSubscription,
    Catalogue, FeatureId, PrecSet, Subscription, TotalOrder,
};
use fsp::oracle::{brute_force_optimal, brute_force_pairs};
use fsp::solver::{solve, Heuristic, Method, SolverConfig};

fn fid(i: u32) -> FeatureId {
    FeatureId(i)
}

fn fids(ids: &[u32]) -> BTreeSet<FeatureId> {
    ids.iter().map(|&i| fid(i)).collect()
}

fn precs(pairs: &[(u32, u32)]) -> PrecSet {
    pairs.iter().map(|&(i, j)| (fid(i), fid(j))).collect()
}

fn cat_spec(n: u32, pairs: u64, types: &[PairType]) -> CatalogueSpec {
    CatalogueSpec {
        n_features: n,
        n_pairs: pairs,
        types: types.iter().copied().collect(),
    }
}

fn sub_spec(f: u32, p: u64, w: u64) -> SubscriptionSpec {
    SubscriptionSpec {
        n_features: f,
        n_precs: p,
        max_weight: w,
    }
}

fn config(method: Method, heuristic: Heuristic) -> SolverConfig {
    SolverConfig {
        method,
        heuristic,
        time_limit: Some(Duration::from_secs(60)),
        node_limit: None,
        seed: 0,
    }
}

/// Every exact search configuration agrees with the exhaustive optimum on a
/// large sample of generated instances.
fn criterion_solver_oracle_equivalence() -> Result<(), String> {
    let catalogues = [
        cat_spec(12, 20, &[PairType::Lt, PairType::Gt]),
        cat_spec(12, 30, &[PairType::Lt, PairType::Gt, PairType::Mutex]),
    ];
    let configs = [
        config(Method::Ac, Heuristic::DomDeg),
        config(Method::Ac, Heuristic::DomWdeg),
        config(Method::RsacB, Heuristic::DomDeg),
        config(Method::RsacB, Heuristic::DomWdeg),
        config(Method::SacB, Heuristic::DomDeg),
        config(Method::SacB, Heuristic::DomWdeg),
        config(Method::SoftPrec, Heuristic::DomWdeg),
    ];
    let mut checked = 0usize;
    for (c, spec) in catalogues.iter().enumerate() {
        let cat = gen_catalogue(spec, 1000 + c as u64).map_err(|e| e.to_string())?;
        for k in 0..100u64 {
            let f = 4 + (k % 5) as u32; // f_u in [4, 8]
            let p = 2 + (k % 5); // p_u in [2, 6]
            let sub = gen_subscription(&cat, &sub_spec(f, p, 4), 7 * k + c as u64)
                .map_err(|e| e.to_string())?;
            let (opt, _) = brute_force_optimal(&sub).map_err(|e| e.to_string())?;
            for cfg in &configs {
                let solution = solve(&sub, cfg);
                if !solution.stats.completed {
                    return Err(format!("instance {c}/{k}: {:?} hit a limit", cfg.method));
                }
                if solution.relaxation.value != opt {
                    return Err(format!(
                        "instance {c}/{k}: {:?}/{:?} found {} but optimum is {opt}",
                        cfg.method, cfg.heuristic, solution.relaxation.value
                    ));
                }
            }
            checked += 1;
        }
    }
    if checked < 200 {
        return Err(format!("only {checked} instances checked"));
    }
    Ok(())
}

/// The worked four-feature example: six total orders of the merged
/// subscription collapse to exactly five compatible order pairs.
fn criterion_order_pair_collapse() -> Result<(), String> {
    let cat = BiRegionCatalogue::new(
        fids(&[1, 2, 3]),
        fids(&[2, 3, 4]),
        precs(&[(1, 2)]),
        precs(&[(4, 3)]),
    )
    .map_err(|e| e.to_string())?;
    let bi = BiRegionSubscription::new(
        &cat,
        fids(&[1, 2, 3]),
        fids(&[2, 3, 4]),
        PrecSet::new(),
        PrecSet::new(),
    )
    .map_err(|e| e.to_string())?;
    let merged = reformulate(&bi).map_err(|e| e.to_string())?;
    let base = transitive_closure(
        &merged.sub.hard().union(merged.sub.user()),
        merged.sub.features(),
    );
    let orders: Vec<TotalOrder> =
        linear_extensions(&base.pairs, merged.sub.features(), None)
            .map_err(|e| e.to_string())?
            .collect();
    if orders.len() != 6 {
        return Err(format!("expected 6 merged total orders, got {}", orders.len()));
    }
    let pairs: BTreeSet<OrderPair> = get_solutions(&bi, None)
        .map_err(|e| e.to_string())?
        .collect();
    let order = |ids: &[u32]| TotalOrder(ids.iter().map(|&i| fid(i)).collect());
    let expected: BTreeSet<OrderPair> = [
        (vec![1, 2, 3], vec![4, 3, 2]),
        (vec![1, 3, 2], vec![4, 2, 3]),
        (vec![1, 3, 2], vec![2, 4, 3]),
        (vec![3, 1, 2], vec![4, 2, 3]),
        (vec![3, 1, 2], vec![2, 4, 3]),
    ]
    .into_iter()
    .map(|(s, t)| OrderPair {
        source_order: order(&s),
        target_order: order(&t),
    })
    .collect();
    if pairs != expected {
        return Err(format!("pair set mismatch: got {pairs:?}"));
    }
    Ok(())
}

/// Clause census for the six-feature catalogue with three exclusions.
fn criterion_clause_census() -> Result<(), String> {
    let hard = precs(&[(1, 2), (2, 1), (3, 4), (4, 3), (5, 6), (6, 5)]);
    let cat = Catalogue::new(6, hard).map_err(|e| e.to_string())?;
    let sub = Subscription::unit_weights(cat, fids(&[1, 2, 3, 4, 5, 6]), PrecSet::new())
        .map_err(|e| e.to_string())?;
    let full = encode_atom(&sub, false);
    let reduced = encode_atom(&sub, true);
    let census = [
        (full.count_group(ClauseGroup::Transitivity), 120usize, "full transitivity"),
        (full.count_group(ClauseGroup::Asymmetry), 15, "full asymmetry"),
        (reduced.count_group(ClauseGroup::Transitivity), 0, "reduced transitivity"),
        (reduced.count_group(ClauseGroup::Asymmetry), 3, "reduced asymmetry"),
    ];
    for (got, want, what) in census {
        if got != want {
            return Err(format!("{what}: expected {want}, got {got}"));
        }
    }
    Ok(())
}

/// Unit propagation detects the three-cycle under the atom-based encoding but
/// not under the bitwise position encoding.
fn criterion_propagation_strength_gap() -> Result<(), String> {
    let cat = Catalogue::new(3, PrecSet::new()).map_err(|e| e.to_string())?;
    let sub = Subscription::unit_weights(
        cat,
        fids(&[1, 2, 3]),
        precs(&[(1, 2), (2, 3), (3, 1)]),
    )
    .map_err(|e| e.to_string())?;
    let cycle = [(1, 2), (2, 3), (3, 1)];
    let assume = |clauses: &fsp::encode::WeightedClauseSet| {
        cycle
            .iter()
            .map(|&(i, j)| {
                clauses
                    .var_for(&VarRole::Prec(fid(i), fid(j)))
                    .expect("bp variable") as i64
            })
            .collect::<Vec<_>>()
    };
    let atom = encode_atom(&sub, false);
    if unit_propagate(&atom, &assume(&atom)).is_ok() {
        return Err("atom encoding: no conflict on the assumed 3-cycle".into());
    }
    let binary = encode_symbol_binary(&sub);
    if unit_propagate(&binary, &assume(&binary)).is_err() {
        return Err("bitwise encoding: unexpected conflict on the assumed 3-cycle".into());
    }
    Ok(())
}

/// Every encoding reaches the same optimum cost as the exhaustive reference.
fn criterion_encoding_optimum_equivalence() -> Result<(), String> {
    let spec = cat_spec(8, 10, &[PairType::Lt, PairType::Gt, PairType::Mutex]);
    let cat = gen_catalogue(&spec, 5000).map_err(|e| e.to_string())?;
    for k in 0..50u64 {
        let f = 3 + (k % 4) as u32; // |F| in [3, 6]
        let p = 1 + (k % 4); // |P| in [1, 4]
        let sub = gen_subscription(&cat, &sub_spec(f, p, 4), 11 * k + 3)
            .map_err(|e| e.to_string())?;
        let (opt, relax) = brute_force_optimal(&sub).map_err(|e| e.to_string())?;
        let cost = sub.total_weight() - opt;
        let wcnf_checks = [
            (wcnf_min_cost(&encode_atom(&sub, false)), "atom"),
            (wcnf_min_cost(&encode_atom(&sub, true)), "atom reduced"),
            (wcnf_min_cost(&encode_symbol_unary(&sub)), "unary"),
            (wcnf_min_cost(&encode_symbol_binary(&sub)), "binary"),
        ];
        for (got, what) in wcnf_checks {
            if got != Some(cost) {
                return Err(format!("instance {k}: {what} optimum {got:?}, expected {cost}"));
            }
        }
        let wcsp = wcsp_min_cost(&encode_wcsp(&sub));
        if wcsp != Some(cost) {
            return Err(format!("instance {k}: wcsp optimum {wcsp:?}, expected {cost}"));
        }
        let mip = encode_mip(&sub);
        let bf: Vec<bool> = mip
            .features
            .iter()
            .map(|f| relax.kept_features.contains(f))
            .collect();
        let bp: Vec<bool> = mip
            .precs
            .iter()
            .map(|&(i, j)| relax.kept_precs.contains(i, j))
            .collect();
        if !mip_feasible(&mip, &sub, &bf, &bp) {
            return Err(format!("instance {k}: MIP infeasible at the reference optimum"));
        }
        let mip_opt = mip_optimum(&mip, &sub);
        if mip_opt != opt {
            return Err(format!("instance {k}: MIP optimum {mip_opt}, expected {opt}"));
        }
    }
    Ok(())
}

/// At full catalogue scale, random subscriptions are almost never consistent.
fn criterion_consistency_rate() -> Result<(), String> {
    let catalogues = [
        cat_spec(50, 250, &[PairType::Lt, PairType::Gt]),
        cat_spec(50, 500, &[PairType::Lt, PairType::Gt, PairType::Mutex]),
        cat_spec(50, 750, &[PairType::Lt, PairType::Gt]),
    ];
    let classes = [
        (10u32, 5u64),
        (15, 20),
        (20, 10),
        (25, 40),
        (30, 20),
        (35, 35),
        (40, 40),
        (45, 90),
        (50, 5),
    ];
    let mut consistent = 0usize;
    let mut total = 0usize;
    for (c, spec) in catalogues.iter().enumerate() {
        let cat = gen_catalogue(spec, 9000 + c as u64).map_err(|e| e.to_string())?;
        for (f, p) in classes {
            for k in 0..10u64 {
                let seed = 100 * c as u64 + 10 * f as u64 + k;
                let sub = gen_subscription(&cat, &sub_spec(f, p, 4), seed)
                    .map_err(|e| e.to_string())?;
                total += 1;
                if is_consistent(&sub) {
                    consistent += 1;
                }
            }
        }
    }
    if total != 270 {
        return Err(format!("expected 270 instances, generated {total}"));
    }
    if consistent > 10 {
        return Err(format!("{consistent}/270 consistent, expected at most 10"));
    }
    Ok(())
}

/// Stronger propagation explores no more nodes: median node counts order as
/// full singleton ≤ restricted singleton ≤ plain arc consistency.
fn criterion_propagation_node_trend() -> Result<(), String> {
    let spec = cat_spec(50, 250, &[PairType::Lt, PairType::Gt]);
    let cat = gen_catalogue(&spec, 20250).map_err(|e| e.to_string())?;
    let mut nodes: BTreeMap<Method, Vec<u64>> = BTreeMap::new();
    for k in 0..30u64 {
        let sub = gen_subscription(&cat, &sub_spec(20, 10, 4), 400 + k)
            .map_err(|e| e.to_string())?;
        for method in [Method::Ac, Method::RsacB, Method::SacB] {
            let solution = solve(&sub, &config(method, Heuristic::DomWdeg));
            if method == Method::RsacB && !solution.stats.completed {
                return Err(format!("instance {k} exceeded the 60 s budget"));
            }
            nodes.entry(method).or_default().push(solution.stats.nodes);
        }
    }
    let median = |method: Method| -> u64 {
        let mut v = nodes[&method].clone();
        v.sort_unstable();
        v[v.len() / 2]
    };
    let (ac, rsac, sac) = (median(Method::Ac), median(Method::RsacB), median(Method::SacB));
    if !(sac <= rsac && rsac <= ac) {
        return Err(format!(
            "median nodes not ordered: sac={sac}, rsac={rsac}, ac={ac}"
        ));
    }
    Ok(())
}

/// Consistency of the merged single-region form coincides with the existence
/// of a compatible pair of per-region total orders, on random two-region
/// subscriptions.
fn criterion_reformulation_equivalence() -> Result<(), String> {
    let mut rng = Rng::new(0xACCE55);
    let mut checked = 0usize;
    while checked < 500 {
        let n = rng.range(2, 7) as u32;
        let mut source = BTreeSet::new();
        let mut target = BTreeSet::new();
        for i in 1..=n {
            match rng.below(3) {
                0 => {
                    source.insert(fid(i));
                }
                1 => {
                    target.insert(fid(i));
                }
                _ => {
                    source.insert(fid(i));
                    target.insert(fid(i));
                }
            }
        }
        let random_rel = |rng: &mut Rng, feats: &BTreeSet<FeatureId>, max: u64| {
            let pool: Vec<FeatureId> = feats.iter().copied().collect();
            let mut rel = PrecSet::new();
            if pool.len() < 2 {
                return rel;
            }
            for _ in 0..rng.below(max + 1) {
                let a = pool[rng.below(pool.len() as u64) as usize];
                let b = pool[rng.below(pool.len() as u64) as usize];
                if a != b {
                    let _ = rel.insert(a, b);
                }
            }
            rel
        };
        let source_hard = random_rel(&mut rng, &source, 3);
        let target_hard = random_rel(&mut rng, &target, 3);
        let source_user = random_rel(&mut rng, &source, 2);
        let target_user = random_rel(&mut rng, &target, 2);
        let cat = match BiRegionCatalogue::new(
            source.clone(),
            target.clone(),
            source_hard,
            target_hard,
        ) {
            Ok(cat) => cat,
            Err(_) => continue,
        };
        let bi = match BiRegionSubscription::new(&cat, source, target, source_user, target_user)
        {
            Ok(bi) => bi,
            Err(_) => continue,
        };
        let merged = match reformulate(&bi) {
            Ok(m) => m,
            Err(_) => continue,
        };
        let direct = !brute_force_pairs(&bi).map_err(|e| e.to_string())?.is_empty();
        let via_merge = is_consistent(&merged.sub);
        if direct != via_merge {
            return Err(format!(
                "instance {checked}: direct={direct}, merged={via_merge}: {bi:?}"
            ));
        }
        checked += 1;
    }
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Result<(), String>); 8] = [
        ("solver configurations match exhaustive optimum", criterion_solver_oracle_equivalence),
        ("worked example: 6 orders collapse to 5 pairs", criterion_order_pair_collapse),
        ("clause census of the 6-feature exclusion example", criterion_clause_census),
        ("unit-propagation gap between encodings", criterion_propagation_strength_gap),
        ("all encodings reach the reference optimum", criterion_encoding_optimum_equivalence),
        ("consistency rate at full catalogue scale", criterion_consistency_rate),
        ("median search nodes order by propagation strength", criterion_propagation_node_trend),
        ("merged-form consistency matches order-pair existence", criterion_reformulation_equivalence),
    ];
    let mut failures = 0usize;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(()) => println!("criterion {}: pass — {name}", k + 1),
            Err(why) => {
                println!("criterion {}: FAIL — {name}: {why}", k + 1);
                failures += 1;
            }
        }
    }
    assert_eq!(failures, 0, "{failures} acceptance criteria failed");
}
