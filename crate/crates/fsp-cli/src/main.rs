//! `fsp` — command-line tools for the feature-subscription toolkit:
//! instance generation, consistency services, compatible-order enumeration,
//! optimal relaxation, model-file emission, and a benchmark harness.
//!
//! Exit codes: 0 success, 1 infeasible/inconsistent verdict, 2 usage or
//! input errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fsp::encode::{
    encode_atom, encode_mip, encode_symbol_binary, encode_symbol_unary, encode_wcsp,
    to_pseudo_boolean, write_lp, write_opb, write_wcnf, write_wcsp,
};
use fsp::enumerate::{get_solutions, rank_pairs, OrderPair};
use fsp::instance::{
    gen_catalogue, gen_subscription, parse_fsp, write_fsp, write_manifest, CatalogueSpec,
    Instance, PairType, SubscriptionSpec,
};
use fsp::model::{
    anti_subscription, complete, consistency_witness, verify_relaxation, FeatureId, PrecSet,
    Relaxation, Subscription,
};
use fsp::oracle::brute_force_optimal;
use fsp::solver::{solve, Heuristic, Method, SolverConfig};

#[derive(Parser)]
#[command(name = "fsp", version, about = "Feature-subscription relaxation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Ac,
    Rsac,
    Sac,
    Softprec,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum HeuristicArg {
    DomDeg,
    DomWdeg,
}

impl From<HeuristicArg> for Heuristic {
    fn from(h: HeuristicArg) -> Self {
        match h {
            HeuristicArg::DomDeg => Heuristic::DomDeg,
            HeuristicArg::DomWdeg => Heuristic::DomWdeg,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EncodingArg {
    WcnfAtom,
    WcnfUnary,
    WcnfBinary,
    Opb,
    Lp,
    Wcsp,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random instances from a catalogue and subscription spec.
    Gen(GenArgs),
    /// Check consistency; prints a witness order when consistent.
    Check { file: PathBuf },
    /// Print a completion (total order) of a consistent instance.
    Complete { file: PathBuf },
    /// Print the anti-subscription of a consistent instance.
    Antisub {
        file: PathBuf,
        /// Also probe precedences already entailed by the instance.
        #[arg(long)]
        include_existing: bool,
    },
    /// Enumerate compatible source/target order pairs (needs a partition).
    Enumerate {
        file: PathBuf,
        /// Stop after this many pairs.
        #[arg(long)]
        limit: Option<usize>,
        /// Sort pairs by ascending anti-subscription size.
        #[arg(long)]
        rank: bool,
    },
    /// Find an optimal relaxation.
    Relax {
        file: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long, value_enum, default_value = "dom-wdeg")]
        heuristic: HeuristicArg,
        /// Wall-clock cap in seconds for the search.
        #[arg(long)]
        time_limit: Option<u64>,
    },
    /// Verify a relaxation file against an instance.
    Verify { file: PathBuf, relaxfile: PathBuf },
    /// Emit a solver model file for the instance.
    Encode {
        file: PathBuf,
        #[arg(long, value_enum)]
        to: EncodingArg,
        /// Restrict the atom encoding to the transitive closure of H ∪ P.
        #[arg(long)]
        reduced: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every method over a directory of instances and emit a CSV report.
    Bench {
        dir: PathBuf,
        /// Comma-separated list from ac, rsac, sac, softprec.
        #[arg(long)]
        methods: String,
        #[arg(long, value_enum, default_value = "dom-wdeg")]
        heuristic: HeuristicArg,
        /// Per-solve wall-clock cap in seconds.
        #[arg(long, default_value = "60")]
        time_limit: u64,
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Args)]
struct GenArgs {
    /// Catalogue spec `f,B,types` with types from `<`, `>`, `<>`
    /// (e.g. `50,250,<,>`).
    #[arg(long)]
    catalogue: String,
    /// Subscription spec `f,p,w`.
    #[arg(long)]
    sub: String,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "1")]
    count: u32,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn load_subscription(path: &Path) -> Result<(Instance, Subscription)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let instance = parse_fsp(&text).with_context(|| format!("parsing {}", path.display()))?;
    let sub = instance
        .to_subscription()
        .with_context(|| format!("building subscription from {}", path.display()))?;
    Ok((instance, sub))
}

fn relaxation_text(relax: &Relaxation) -> String {
    let mut out = String::new();
    for f in &relax.kept_features {
        let _ = writeln!(out, "feature {}", f.0);
    }
    for (i, j) in relax.kept_precs.iter() {
        let _ = writeln!(out, "prec {} {}", i.0, j.0);
    }
    let _ = writeln!(out, "value {}", relax.value);
    out
}

fn parse_relaxation(text: &str) -> Result<Relaxation> {
    let mut relax = Relaxation {
        kept_features: Default::default(),
        kept_precs: PrecSet::new(),
        value: 0,
    };
    for (k, raw) in text.lines().enumerate() {
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let bad = || anyhow!("relaxation line {}: unrecognised `{raw}`", k + 1);
        match fields.as_slice() {
            [] => {}
            ["feature", id] => {
                relax.kept_features.insert(FeatureId(id.parse().map_err(|_| bad())?));
            }
            ["prec", i, j] => {
                relax
                    .kept_precs
                    .insert(
                        FeatureId(i.parse().map_err(|_| bad())?),
                        FeatureId(j.parse().map_err(|_| bad())?),
                    )
                    .map_err(|e| anyhow!("relaxation line {}: {e}", k + 1))?;
            }
            ["value", v] => relax.value = v.parse().map_err(|_| bad())?,
            _ => return Err(bad()),
        }
    }
    Ok(relax)
}

fn parse_catalogue_spec(text: &str) -> Result<CatalogueSpec> {
    let fields: Vec<&str> = text.split(',').collect();
    if fields.len() < 3 {
        bail!("catalogue spec needs `f,B,types`, got `{text}`");
    }
    let types = fields[2..]
        .iter()
        .map(|t| match *t {
            "<" => Ok(PairType::Lt),
            ">" => Ok(PairType::Gt),
            "<>" => Ok(PairType::Mutex),
            other => Err(anyhow!("unknown constraint type `{other}`")),
        })
        .collect::<Result<_>>()?;
    Ok(CatalogueSpec {
        n_features: fields[0].parse().context("bad feature count")?,
        n_pairs: fields[1].parse().context("bad pair count")?,
        types,
    })
}

fn parse_sub_spec(text: &str) -> Result<SubscriptionSpec> {
    let fields: Vec<&str> = text.split(',').collect();
    if fields.len() != 3 {
        bail!("subscription spec needs `f,p,w`, got `{text}`");
    }
    Ok(SubscriptionSpec {
        n_features: fields[0].parse().context("bad feature count")?,
        n_precs: fields[1].parse().context("bad precedence count")?,
        max_weight: fields[2].parse().context("bad weight bound")?,
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Check { file } => {
            let (_, sub) = load_subscription(&file)?;
            match consistency_witness(&sub) {
                Some(order) => {
                    println!("consistent: {order}");
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    println!("inconsistent");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Complete { file } => {
            let (_, sub) = load_subscription(&file)?;
            match complete(&sub) {
                Ok(order) => {
                    println!("{order}");
                    Ok(ExitCode::SUCCESS)
                }
                Err(_) => {
                    println!("inconsistent");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Antisub {
            file,
            include_existing,
        } => {
            let (_, sub) = load_subscription(&file)?;
            match anti_subscription(&sub, include_existing) {
                Ok(anti) => {
                    for f in &anti.blocked_features {
                        println!("blocked-feature {}", f.0);
                    }
                    for (i, j) in anti.blocked_precs.iter() {
                        println!("blocked-prec {} {}", i.0, j.0);
                    }
                    println!("size {}", anti.size());
                    Ok(ExitCode::SUCCESS)
                }
                Err(_) => {
                    println!("inconsistent");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Enumerate { file, limit, rank } => cmd_enumerate(&file, limit, rank),
        Command::Relax {
            file,
            method,
            heuristic,
            time_limit,
        } => cmd_relax(&file, method, heuristic, time_limit),
        Command::Verify { file, relaxfile } => {
            let (_, sub) = load_subscription(&file)?;
            let text = std::fs::read_to_string(&relaxfile)
                .with_context(|| format!("reading {}", relaxfile.display()))?;
            let relax = parse_relaxation(&text)?;
            match verify_relaxation(&sub, &relax) {
                Ok(value) => {
                    println!("valid value {value}");
                    Ok(ExitCode::SUCCESS)
                }
                Err(err) => {
                    println!("invalid: {err}");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Encode {
            file,
            to,
            reduced,
            out,
        } => {
            let (_, sub) = load_subscription(&file)?;
            if reduced && to != EncodingArg::WcnfAtom {
                bail!("--reduced only applies to wcnf-atom");
            }
            let text = match to {
                EncodingArg::WcnfAtom => write_wcnf(&encode_atom(&sub, reduced)),
                EncodingArg::WcnfUnary => write_wcnf(&encode_symbol_unary(&sub)),
                EncodingArg::WcnfBinary => write_wcnf(&encode_symbol_binary(&sub)),
                EncodingArg::Opb => write_opb(&to_pseudo_boolean(&encode_atom(&sub, true))),
                EncodingArg::Lp => write_lp(&encode_mip(&sub)),
                EncodingArg::Wcsp => write_wcsp(&encode_wcsp(&sub)),
            };
            std::fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            dir,
            methods,
            heuristic,
            time_limit,
            report,
        } => cmd_bench(&dir, &methods, heuristic, time_limit, &report),
    }
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode> {
    let cat_spec = parse_catalogue_spec(&args.catalogue)?;
    let sub_spec = parse_sub_spec(&args.sub)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let catalogue = gen_catalogue(&cat_spec, args.seed)?;
    for k in 0..args.count {
        // Subscription streams are derived from the base seed so each
        // instance is reproducible in isolation.
        let sub_seed = args.seed.wrapping_add(1 + k as u64);
        let sub = gen_subscription(&catalogue, &sub_spec, sub_seed)?;
        let instance = Instance::from_subscription(&sub);
        let stem = format!("instance_{k:03}");
        std::fs::write(args.out.join(format!("{stem}.fsp")), write_fsp(&instance))?;
        let manifest: BTreeMap<String, String> = [
            ("catalogue".to_string(), args.catalogue.clone()),
            ("subscription".to_string(), args.sub.clone()),
            ("catalogue_seed".to_string(), args.seed.to_string()),
            ("subscription_seed".to_string(), sub_seed.to_string()),
        ]
        .into_iter()
        .collect();
        std::fs::write(
            args.out.join(format!("{stem}.manifest")),
            write_manifest(&manifest),
        )?;
    }
    println!("wrote {} instances to {}", args.count, args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_enumerate(file: &Path, limit: Option<usize>, rank: bool) -> Result<ExitCode> {
    let text =
        std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let instance = parse_fsp(&text)?;
    let bi = instance
        .to_bi_region()
        .context("enumeration needs a source/target partition")?;
    let solutions = match get_solutions(&bi, limit) {
        Ok(s) => s,
        Err(_) => {
            println!("inconsistent");
            return Ok(ExitCode::from(1));
        }
    };
    let mut pairs: Vec<OrderPair> = solutions.collect();
    if rank {
        let merged = fsp::model::reformulate(&bi)?;
        pairs = rank_pairs(merged.sub.catalogue(), &bi, pairs)?;
    }
    for (k, pair) in pairs.iter().enumerate() {
        println!(
            "pair {}: source {} ; target {}",
            k + 1,
            pair.source_order,
            pair.target_order
        );
    }
    println!("pairs {}", pairs.len());
    Ok(ExitCode::SUCCESS)
}

fn method_config(
    method: MethodArg,
    heuristic: HeuristicArg,
    time_limit: Option<u64>,
) -> Option<SolverConfig> {
    let method = match method {
        MethodArg::Ac => Method::Ac,
        MethodArg::Rsac => Method::RsacB,
        MethodArg::Sac => Method::SacB,
        MethodArg::Softprec => Method::SoftPrec,
        MethodArg::Oracle => return None,
    };
    Some(SolverConfig {
        method,
        heuristic: heuristic.into(),
        time_limit: time_limit.map(Duration::from_secs),
        node_limit: None,
        seed: 0,
    })
}

fn cmd_relax(
    file: &Path,
    method: MethodArg,
    heuristic: HeuristicArg,
    time_limit: Option<u64>,
) -> Result<ExitCode> {
    let (_, sub) = load_subscription(file)?;
    let relaxation = match method_config(method, heuristic, time_limit) {
        None => brute_force_optimal(&sub).map_err(|e| anyhow!(e))?.1,
        Some(config) => {
            let solution = solve(&sub, &config);
            if !solution.stats.completed {
                eprintln!(
                    "warning: search hit its limit after {} nodes; best incumbent follows",
                    solution.stats.nodes
                );
            }
            solution.relaxation
        }
    };
    print!("{}", relaxation_text(&relaxation));
    Ok(ExitCode::SUCCESS)
}

struct BenchRow {
    instance: String,
    method: MethodArg,
    nodes: u64,
    millis: u128,
    optimum: Option<u64>,
    completed: bool,
    error: Option<String>,
}

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Ac => "ac",
        MethodArg::Rsac => "rsac",
        MethodArg::Sac => "sac",
        MethodArg::Softprec => "softprec",
        MethodArg::Oracle => "oracle",
    }
}

fn cmd_bench(
    dir: &Path,
    methods: &str,
    heuristic: HeuristicArg,
    time_limit: u64,
    report: &Path,
) -> Result<ExitCode> {
    let methods: Vec<MethodArg> = methods
        .split(',')
        .map(|t| {
            MethodArg::from_str(t.trim(), true).map_err(|_| anyhow!("unknown method `{t}`"))
        })
        .collect::<Result<_>>()?;
    if methods.is_empty() {
        bail!("no methods given");
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "fsp"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .fsp instances in {}", dir.display());
    }
    let mut rows: Vec<BenchRow> = Vec::new();
    for file in &files {
        let name = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let loaded = load_subscription(file);
        for &method in &methods {
            match &loaded {
                Err(err) => rows.push(BenchRow {
                    instance: name.clone(),
                    method,
                    nodes: 0,
                    millis: 0,
                    optimum: None,
                    completed: false,
                    error: Some(format!("{err:#}")),
                }),
                Ok((_, sub)) => {
                    let config = method_config(method, heuristic, Some(time_limit))
                        .ok_or_else(|| anyhow!("oracle is not a bench method"))?;
                    let solution = solve(sub, &config);
                    rows.push(BenchRow {
                        instance: name.clone(),
                        method,
                        nodes: solution.stats.nodes,
                        millis: solution.stats.wall_time.as_millis(),
                        optimum: Some(solution.relaxation.value),
                        completed: solution.stats.completed,
                        error: None,
                    });
                }
            }
        }
    }
    // Completed rows of the same instance must agree on the optimum.
    let mut agreed: BTreeMap<&str, bool> = BTreeMap::new();
    for file_rows in rows.chunks(methods.len()) {
        let optima: Vec<u64> = file_rows
            .iter()
            .filter(|r| r.completed)
            .filter_map(|r| r.optimum)
            .collect();
        let ok = optima.windows(2).all(|w| w[0] == w[1]);
        agreed.insert(&file_rows[0].instance, ok);
    }
    let mut csv = String::from("instance,method,heuristic,nodes,time_ms,optimum,completed,agreement\n");
    let heuristic_name = match heuristic {
        HeuristicArg::DomDeg => "dom-deg",
        HeuristicArg::DomWdeg => "dom-wdeg",
    };
    let mut disagreements = 0usize;
    for row in &rows {
        let agreement = match row.error {
            Some(_) => "error",
            None if agreed[row.instance.as_str()] => "ok",
            None => "disagree",
        };
        if agreement == "disagree" {
            disagreements += 1;
        }
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            row.instance,
            method_name(row.method),
            heuristic_name,
            row.nodes,
            row.millis,
            row.optimum.map(|v| v.to_string()).unwrap_or_default(),
            row.completed,
            agreement
        );
    }
    for &method in &methods {
        let cells: Vec<&BenchRow> = rows
            .iter()
            .filter(|r| r.method == method && r.error.is_none())
            .collect();
        if cells.is_empty() {
            continue;
        }
        let mean_nodes = cells.iter().map(|r| r.nodes).sum::<u64>() as f64 / cells.len() as f64;
        let mean_ms = cells.iter().map(|r| r.millis).sum::<u128>() as f64 / cells.len() as f64;
        let _ = writeln!(
            csv,
            "mean,{},{},{mean_nodes:.1},{mean_ms:.1},,,",
            method_name(method),
            heuristic_name
        );
    }
    std::fs::write(report, csv).with_context(|| format!("writing {}", report.display()))?;
    if disagreements > 0 {
        eprintln!("correctness failure: methods disagree on {disagreements} rows");
        return Ok(ExitCode::from(1));
    }
    println!(
        "benchmarked {} instances x {} methods -> {}",
        files.len(),
        methods.len(),
        report.display()
    );
    Ok(ExitCode::SUCCESS)
}
