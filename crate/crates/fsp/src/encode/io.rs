//! Deterministic text emission and re-parsing of the four model formats:
//! DIMACS weighted-partial CNF, OPB pseudo-Boolean, LP linear program, and
//! toulbar2-style WCSP. Writers are byte-deterministic; each reader parses
//! exactly what its writer emits, for round-trip checking.

use std::fmt::Write as _;

use crate::model::FeatureId;

use super::{
    Clause, ClauseGroup, EncodeError, MipInequality, MipModel, PbConstraint, PbModel,
    VarRole, WcspModel, WeightedClauseSet,
};
use super::wcsp::BinaryCost;

fn role_token(role: &VarRole) -> String {
    match role {
        VarRole::Feature(f) => format!("bf({})", f.0),
        VarRole::Prec(i, j) => format!("bp({},{})", i.0, j.0),
        VarRole::PositionBit(f, k) => format!("pos({},{})", f.0, k),
        VarRole::Aux(name) => format!("aux({name})"),
    }
}

fn parse_role(token: &str, line: usize) -> Result<VarRole, EncodeError> {
    let err = || EncodeError::Parse(line, format!("bad variable role `{token}`"));
    let (kind, rest) = token.split_once('(').ok_or_else(err)?;
    let body = rest.strip_suffix(')').ok_or_else(err)?;
    match kind {
        "bf" => Ok(VarRole::Feature(FeatureId(body.parse().map_err(|_| err())?))),
        "bp" | "pos" => {
            let (a, b) = body.split_once(',').ok_or_else(err)?;
            let a = a.parse().map_err(|_| err())?;
            if kind == "bp" {
                Ok(VarRole::Prec(FeatureId(a), FeatureId(b.parse().map_err(|_| err())?)))
            } else {
                Ok(VarRole::PositionBit(FeatureId(a), b.parse().map_err(|_| err())?))
            }
        }
        "aux" => Ok(VarRole::Aux(body.to_string())),
        _ => Err(err()),
    }
}

fn group_code(group: ClauseGroup) -> &'static str {
    match group {
        ClauseGroup::CatalogueHard => "H",
        ClauseGroup::Asymmetry => "A",
        ClauseGroup::Transitivity => "T",
        ClauseGroup::Support => "S",
        ClauseGroup::OrderBit => "O",
        ClauseGroup::PrecedenceDef => "D",
        ClauseGroup::SoftFeature => "F",
        ClauseGroup::SoftPrec => "P",
    }
}

fn parse_group(code: &str, line: usize) -> Result<ClauseGroup, EncodeError> {
    Ok(match code {
        "H" => ClauseGroup::CatalogueHard,
        "A" => ClauseGroup::Asymmetry,
        "T" => ClauseGroup::Transitivity,
        "S" => ClauseGroup::Support,
        "O" => ClauseGroup::OrderBit,
        "D" => ClauseGroup::PrecedenceDef,
        "F" => ClauseGroup::SoftFeature,
        "P" => ClauseGroup::SoftPrec,
        _ => return Err(EncodeError::Parse(line, format!("bad clause group `{code}`"))),
    })
}

/// Weighted-partial DIMACS: `p wcnf <nvars> <nclauses> <top>`, weight-first
/// 0-terminated clause lines, with the variable-role table and clause groups
/// in `c` comments.
pub fn write_wcnf(wcnf: &WeightedClauseSet) -> String {
    let top = wcnf.top();
    let mut out = String::new();
    for (k, role) in wcnf.roles.iter().enumerate() {
        let _ = writeln!(out, "c var {} {}", k + 1, role_token(role));
    }
    let groups: Vec<&str> = wcnf.clauses.iter().map(|c| group_code(c.group)).collect();
    let _ = writeln!(out, "c groups {}", groups.join(" "));
    let _ = writeln!(out, "p wcnf {} {} {}", wcnf.n_vars(), wcnf.clauses.len(), top);
    for clause in &wcnf.clauses {
        let weight = clause.weight.unwrap_or(top);
        let lits: Vec<String> = clause.lits.iter().map(|l| l.to_string()).collect();
        let _ = writeln!(out, "{} {} 0", weight, lits.join(" "));
    }
    out
}

pub fn read_wcnf(text: &str) -> Result<WeightedClauseSet, EncodeError> {
    let mut roles = Vec::new();
    let mut groups: Vec<ClauseGroup> = Vec::new();
    let mut clauses = Vec::new();
    let mut top: Option<u64> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let bad = |msg: &str| EncodeError::Parse(line, msg.to_string());
        let fields: Vec<&str> = raw.split_whitespace().collect();
        match fields.as_slice() {
            [] => {}
            ["c", "var", idx, token] => {
                let idx: usize = idx.parse().map_err(|_| bad("bad variable index"))?;
                if idx != roles.len() + 1 {
                    return Err(bad("variable table out of order"));
                }
                roles.push(parse_role(token, line)?);
            }
            ["c", "groups", rest @ ..] => {
                groups = rest
                    .iter()
                    .map(|code| parse_group(code, line))
                    .collect::<Result<_, _>>()?;
            }
            ["c", ..] => {}
            ["p", "wcnf", _nv, _nc, t] => {
                top = Some(t.parse().map_err(|_| bad("bad top"))?);
            }
            [weight, body @ ..] => {
                let top = top.ok_or_else(|| bad("clause before header"))?;
                let weight: u64 = weight.parse().map_err(|_| bad("bad weight"))?;
                let mut lits: Vec<i64> = body
                    .iter()
                    .map(|t| t.parse().map_err(|_| bad("bad literal")))
                    .collect::<Result<_, _>>()?;
                if lits.pop() != Some(0) {
                    return Err(bad("clause not 0-terminated"));
                }
                let group = groups
                    .get(clauses.len())
                    .copied()
                    .ok_or_else(|| bad("missing clause group"))?;
                clauses.push(Clause {
                    weight: (weight != top).then_some(weight),
                    lits,
                    group,
                });
            }
        }
    }
    Ok(WeightedClauseSet { roles, clauses })
}

/// OPB: `* #variable= N #constraint= M` header, role comments, `min:`
/// objective (constant in a comment), constraints `±k x_i ... >= b ;`.
pub fn write_opb(model: &PbModel) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "* #variable= {} #constraint= {}",
        model.n_vars(),
        model.constraints.len()
    );
    for (k, role) in model.roles.iter().enumerate() {
        let _ = writeln!(out, "* var {} {}", k + 1, role_token(role));
    }
    let _ = writeln!(out, "* constant= {}", model.constant);
    let terms: Vec<String> = model
        .objective
        .iter()
        .map(|&(c, v)| format!("{c:+} x{v}"))
        .collect();
    let _ = writeln!(out, "min: {} ;", terms.join(" "));
    for constraint in &model.constraints {
        let terms: Vec<String> = constraint
            .terms
            .iter()
            .map(|&(c, v)| format!("{c:+} x{v}"))
            .collect();
        let _ = writeln!(out, "{} >= {} ;", terms.join(" "), constraint.rhs);
    }
    out
}

pub fn read_opb(text: &str) -> Result<PbModel, EncodeError> {
    let mut model = PbModel {
        roles: Vec::new(),
        objective: Vec::new(),
        constant: 0,
        constraints: Vec::new(),
    };
    let parse_terms = |fields: &[&str], line: usize| -> Result<Vec<(i64, usize)>, EncodeError> {
        let bad = |msg: &str| EncodeError::Parse(line, msg.to_string());
        fields
            .chunks(2)
            .map(|chunk| match chunk {
                [coeff, var] => {
                    let coeff: i64 = coeff.parse().map_err(|_| bad("bad coefficient"))?;
                    let var: usize = var
                        .strip_prefix('x')
                        .ok_or_else(|| bad("bad variable"))?
                        .parse()
                        .map_err(|_| bad("bad variable"))?;
                    Ok((coeff, var))
                }
                _ => Err(bad("dangling term")),
            })
            .collect()
    };
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let bad = |msg: &str| EncodeError::Parse(line, msg.to_string());
        let fields: Vec<&str> = raw.split_whitespace().collect();
        match fields.as_slice() {
            [] | ["*", "#variable=", ..] => {}
            ["*", "var", idx, token] => {
                let idx: usize = idx.parse().map_err(|_| bad("bad variable index"))?;
                if idx != model.roles.len() + 1 {
                    return Err(bad("variable table out of order"));
                }
                model.roles.push(parse_role(token, line)?);
            }
            ["*", "constant=", c] => {
                model.constant = c.parse().map_err(|_| bad("bad constant"))?;
            }
            ["*", ..] => {}
            ["min:", rest @ ..] => {
                let rest = rest.strip_suffix(&[";"][..]).ok_or_else(|| bad("missing ;"))?;
                model.objective = parse_terms(rest, line)?;
            }
            rest => {
                let rest = rest.strip_suffix(&[";"][..]).ok_or_else(|| bad("missing ;"))?;
                let ge = rest
                    .iter()
                    .position(|&t| t == ">=")
                    .ok_or_else(|| bad("missing >="))?;
                let rhs: i64 = rest[ge + 1..]
                    .first()
                    .ok_or_else(|| bad("missing rhs"))?
                    .parse()
                    .map_err(|_| bad("bad rhs"))?;
                model.constraints.push(PbConstraint {
                    terms: parse_terms(&rest[..ge], line)?,
                    rhs,
                });
            }
        }
    }
    Ok(model)
}

fn pair_label(i: FeatureId, j: FeatureId) -> String {
    format!("{}_{}", i.0, j.0)
}

/// LP text: `Maximize`, `Subject To` with labelled rows in the four
/// canonical inequality shapes, `Bounds` with pf in [1, n], `Binaries`.
pub fn write_lp(model: &MipModel) -> String {
    let n = model.n;
    let mut out = String::new();
    out.push_str("Maximize\n");
    let mut terms: Vec<String> = Vec::new();
    for (f, w) in model.features.iter().zip(&model.objective) {
        terms.push(format!("{w} bf{}", f.0));
    }
    for ((i, j), w) in model.precs.iter().zip(&model.objective[model.features.len()..]) {
        terms.push(format!("{w} bp{}", pair_label(*i, *j)));
    }
    let _ = writeln!(out, " obj: {}", terms.join(" + "));
    out.push_str("Subject To\n");
    for ineq in &model.inequalities {
        match *ineq {
            MipInequality::HardPair { i, j } => {
                let _ = writeln!(
                    out,
                    " h{}: pf{} - pf{} + {} bf{} + {} bf{} <= {}",
                    pair_label(i, j), i.0, j.0, n, i.0, n, j.0,
                    2 * n - 1
                );
            }
            MipInequality::PrecPosition { i, j } => {
                let _ = writeln!(
                    out,
                    " p{}: pf{} - pf{} + {} bp{} <= {}",
                    pair_label(i, j), i.0, j.0, n,
                    pair_label(i, j),
                    n - 1
                );
            }
            MipInequality::PrecSupportsSource { i, j } => {
                let _ = writeln!(out, " s{}: bp{} - bf{} <= 0", pair_label(i, j), pair_label(i, j), i.0);
            }
            MipInequality::PrecSupportsTarget { i, j } => {
                let _ = writeln!(out, " t{}: bp{} - bf{} <= 0", pair_label(i, j), pair_label(i, j), j.0);
            }
        }
    }
    out.push_str("Bounds\n");
    for f in &model.features {
        let _ = writeln!(out, " 1 <= pf{} <= {}", f.0, n);
    }
    out.push_str("Binaries\n");
    let mut names: Vec<String> = model.features.iter().map(|f| format!("bf{}", f.0)).collect();
    names.extend(model.precs.iter().map(|&(i, j)| format!("bp{}", pair_label(i, j))));
    let _ = writeln!(out, " {}", names.join(" "));
    out.push_str("End\n");
    out
}

pub fn read_lp(text: &str) -> Result<MipModel, EncodeError> {
    let mut model = MipModel {
        features: Vec::new(),
        precs: Vec::new(),
        n: 0,
        objective: Vec::new(),
        inequalities: Vec::new(),
    };
    let parse_pair = |label: &str, line: usize| -> Result<(FeatureId, FeatureId), EncodeError> {
        let bad = || EncodeError::Parse(line, format!("bad pair label `{label}`"));
        let (i, j) = label.split_once('_').ok_or_else(bad)?;
        Ok((
            FeatureId(i.parse().map_err(|_| bad())?),
            FeatureId(j.parse().map_err(|_| bad())?),
        ))
    };
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let bad = |msg: &str| EncodeError::Parse(line, msg.to_string());
        let trimmed = raw.trim();
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match fields.as_slice() {
            [] | ["Maximize"] | ["Subject", "To"] | ["Bounds"] | ["Binaries"] | ["End"] => {}
            ["obj:", rest @ ..] => {
                // Alternating `w name` triples joined by +.
                let mut iter = rest.iter().filter(|&&t| t != "+");
                while let Some(w) = iter.next() {
                    let name = iter.next().ok_or_else(|| bad("dangling objective term"))?;
                    let w: u64 = w.parse().map_err(|_| bad("bad weight"))?;
                    if let Some(f) = name.strip_prefix("bf") {
                        model
                            .features
                            .push(FeatureId(f.parse().map_err(|_| bad("bad feature"))?));
                    } else if let Some(p) = name.strip_prefix("bp") {
                        model.precs.push(parse_pair(p, line)?);
                    } else {
                        return Err(bad("bad objective variable"));
                    }
                    model.objective.push(w);
                }
                model.n = model.features.len() as u64;
            }
            [label, ..] if label.starts_with('h') && label.ends_with(':') => {
                let (i, j) = parse_pair(&label[1..label.len() - 1], line)?;
                model.inequalities.push(MipInequality::HardPair { i, j });
            }
            [label, ..] if label.starts_with('p') && label.ends_with(':') => {
                let (i, j) = parse_pair(&label[1..label.len() - 1], line)?;
                model.inequalities.push(MipInequality::PrecPosition { i, j });
            }
            [label, ..] if label.starts_with('s') && label.ends_with(':') => {
                let (i, j) = parse_pair(&label[1..label.len() - 1], line)?;
                model
                    .inequalities
                    .push(MipInequality::PrecSupportsSource { i, j });
            }
            [label, ..] if label.starts_with('t') && label.ends_with(':') => {
                let (i, j) = parse_pair(&label[1..label.len() - 1], line)?;
                model
                    .inequalities
                    .push(MipInequality::PrecSupportsTarget { i, j });
            }
            ["1", "<=", _, "<=", _] => {}
            names
                if names
                    .iter()
                    .all(|t| t.starts_with("bf") || t.starts_with("bp")) => {} // Binaries list
            _ => return Err(bad("unrecognised line")),
        }
    }
    Ok(model)
}

/// toulbar2-style WCSP text: header `<name> <nvars> <maxdomain>
/// <nconstraints> <k>`, domain-size line, then per cost function a header
/// `<arity> <vars...> <default> <ntuples>` followed by non-default tuples.
/// Feature ids ride in the instance name.
pub fn write_wcsp(model: &WcspModel) -> String {
    let d = model.n + 1;
    let mut out = String::new();
    let ids: Vec<String> = model.features.iter().map(|f| f.0.to_string()).collect();
    let _ = writeln!(
        out,
        "fsp_{} {} {} {} {}",
        ids.join("_"),
        model.features.len(),
        d,
        model.unary.len() + model.binary.len(),
        model.k
    );
    let domains: Vec<String> = (0..model.features.len()).map(|_| d.to_string()).collect();
    let _ = writeln!(out, "{}", domains.join(" "));
    for (v, table) in model.unary.iter().enumerate() {
        let nonzero: Vec<(usize, u64)> = table
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(a, &c)| (a, c))
            .collect();
        let _ = writeln!(out, "1 {} 0 {}", v, nonzero.len());
        for (a, c) in nonzero {
            let _ = writeln!(out, "{a} {c}");
        }
    }
    for bc in &model.binary {
        let default = bc.costs[0];
        let tuples: Vec<(usize, usize, u64)> = bc
            .costs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != default)
            .map(|(cell, &c)| (cell / d, cell % d, c))
            .collect();
        let _ = writeln!(out, "2 {} {} {} {}", bc.i, bc.j, default, tuples.len());
        for (a, b, c) in tuples {
            let _ = writeln!(out, "{a} {b} {c}");
        }
    }
    out
}

pub fn read_wcsp(text: &str) -> Result<WcspModel, EncodeError> {
    let mut lines = text.lines().enumerate();
    let mut next_fields = |expect: &str| -> Result<(usize, Vec<String>), EncodeError> {
        lines
            .next()
            .map(|(k, raw)| (k + 1, raw.split_whitespace().map(String::from).collect()))
            .ok_or_else(|| EncodeError::Parse(0, format!("missing {expect}")))
    };
    let (line, header) = next_fields("header")?;
    let bad = |line: usize, msg: &str| EncodeError::Parse(line, msg.to_string());
    if header.len() != 5 {
        return Err(bad(line, "bad header"));
    }
    let features: Vec<FeatureId> = header[0]
        .strip_prefix("fsp_")
        .ok_or_else(|| bad(line, "bad instance name"))?
        .split('_')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map(FeatureId))
        .collect::<Result<_, _>>()
        .map_err(|_| bad(line, "bad feature id"))?;
    let nvars: usize = header[1].parse().map_err(|_| bad(line, "bad nvars"))?;
    let ncons: usize = header[3].parse().map_err(|_| bad(line, "bad count"))?;
    let k: u64 = header[4].parse().map_err(|_| bad(line, "bad k"))?;
    let n = if nvars == 0 { 0 } else { features.len() };
    let d = n + 1;
    let (_, _domains) = next_fields("domain line")?;
    let mut unary: Vec<Vec<u64>> = Vec::new();
    let mut binary = Vec::new();
    for _ in 0..ncons {
        let (line, head) = next_fields("cost function")?;
        let arity: usize = head
            .first()
            .ok_or_else(|| bad(line, "empty cost function"))?
            .parse()
            .map_err(|_| bad(line, "bad arity"))?;
        match arity {
            1 => {
                if head.len() != 4 {
                    return Err(bad(line, "bad unary header"));
                }
                let default: u64 = head[2].parse().map_err(|_| bad(line, "bad default"))?;
                let ntuples: usize = head[3].parse().map_err(|_| bad(line, "bad count"))?;
                let mut table = vec![default; d];
                for _ in 0..ntuples {
                    let (line, t) = next_fields("unary tuple")?;
                    let a: usize = t[0].parse().map_err(|_| bad(line, "bad value"))?;
                    table[a] = t[1].parse().map_err(|_| bad(line, "bad cost"))?;
                }
                unary.push(table);
            }
            2 => {
                if head.len() != 5 {
                    return Err(bad(line, "bad binary header"));
                }
                let i: usize = head[1].parse().map_err(|_| bad(line, "bad var"))?;
                let j: usize = head[2].parse().map_err(|_| bad(line, "bad var"))?;
                let default: u64 = head[3].parse().map_err(|_| bad(line, "bad default"))?;
                let ntuples: usize = head[4].parse().map_err(|_| bad(line, "bad count"))?;
                let mut costs = vec![default; d * d];
                for _ in 0..ntuples {
                    let (line, t) = next_fields("binary tuple")?;
                    let a: usize = t[0].parse().map_err(|_| bad(line, "bad value"))?;
                    let b: usize = t[1].parse().map_err(|_| bad(line, "bad value"))?;
                    costs[a * d + b] = t[2].parse().map_err(|_| bad(line, "bad cost"))?;
                }
                binary.push(BinaryCost { i, j, costs });
            }
            _ => return Err(bad(line, "unsupported arity")),
        }
    }
    Ok(WcspModel {
        features,
        n,
        k,
        unary,
        binary,
    })
}
