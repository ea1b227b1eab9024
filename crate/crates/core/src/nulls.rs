//! Completeness reasoning over databases with nulls: certain and SQL
//! evaluation, statements with projection, null versions, the chase and
//! bag semantics under keys.

use std::collections::{BTreeMap, BTreeSet};

use crate::containment::{eliminate_equalities, for_each_test_database, satisfiable, Valuation, DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::eval::{evaluate_with, find_answer, for_each_valuation, ground_terms, Answers, Db, NullMode};
use crate::model::{
    substitute_condition, substitute_term, Atom, Condition, Fact, IncompleteDatabase, Instance, Query, Regime, Semantics,
    TcStatement, Term, Tuple, Verdict, Witness,
};
use crate::value::{NullKind, Sym, Value};

/// Key prefix length per relation.
pub type Keys = BTreeMap<Sym, usize>;

/// Cap on null versions per test database.
const VERSION_CAP: usize = 1 << 16;

fn erase(t: &[Value]) -> Tuple {
    t.iter().map(|v| if v.is_null() { Value::null(NullKind::Plain, 0) } else { v.clone() }).collect()
}

/// Merge answers whose tuples differ only in which null they carry.
pub fn erase_answers(a: &Answers, sem: Semantics) -> Answers {
    let mut out = Answers::new();
    for (t, n) in a {
        *out.entry(erase(t)).or_insert(0) += n;
    }
    if sem == Semantics::Set {
        out.values_mut().for_each(|n| *n = 1);
    }
    out
}

fn certain_tuple(t: &[Value]) -> bool {
    t.iter().all(|v| matches!(v.null_kind(), None | Some(NullKind::NotApplicable)))
}

/// Certain answers with mixed nulls: unknown nulls join only with
/// themselves, other nulls never join, and tuples carrying a null other
/// than `_na` are dropped.
pub fn eval_cert_with(q: &Query, d: &Instance, sem: Semantics) -> Answers {
    let mut a = evaluate_with(q, d, sem, NullMode::Certain);
    a.retain(|t, _| certain_tuple(t));
    a
}

pub fn eval_cert(q: &Query, d: &Instance) -> BTreeSet<Tuple> {
    eval_cert_with(q, d, Semantics::Set).into_keys().collect()
}

/// SQL evaluation: join variables never bind to a null; nothing is dropped.
pub fn eval_sql(q: &Query, d: &Instance) -> BTreeSet<Tuple> {
    evaluate_with(q, d, Semantics::Set, NullMode::Sql).into_keys().collect()
}

/// Answers on one side of an incomplete database under its regime, with
/// null identities erased.
pub fn regime_answers(q: &Query, d: &Instance, regime: Regime, ideal: bool, sem: Semantics) -> Answers {
    let raw = match (regime, ideal) {
        (Regime::NoNulls, _) | (Regime::IncompleteFacts, true) => evaluate_with(q, d, sem, NullMode::Identity),
        (Regime::IncompleteFacts, false) | (Regime::PartialFacts, false) => eval_cert_with(q, d, sem),
        _ => evaluate_with(q, d, sem, NullMode::Sql),
    };
    erase_answers(&raw, sem)
}

/// Query completeness of `q` over `idb`, read under the database's regime.
pub fn satisfies_qc_nulls(idb: &IncompleteDatabase, q: &Query, sem: Semantics) -> bool {
    regime_answers(q, &idb.ideal, idb.regime, true, sem) == regime_answers(q, &idb.available, idb.regime, false, sem)
}

fn max_null_id(d: &Instance) -> u32 {
    d.iter()
        .flat_map(|f| f.args.iter())
        .filter_map(|v| match v {
            Value::Null(t) => Some(t.id),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

/// The minimal available database for `d`: one indicator per constrained
/// fact and statement, with projected-out positions padded by fresh nulls
/// of kind `pad`. Statement bodies are evaluated with SQL semantics.
pub fn t_c_proj_with(cs: &[TcStatement], d: &Instance, pad: NullKind) -> Instance {
    let mut next = max_null_id(d) + 1;
    let mut out = Instance::new();
    for c in cs {
        let q = c.query();
        let mut seen = BTreeSet::new();
        for_each_valuation(&q.body, d, NullMode::Sql, &BTreeMap::new(), &mut |m| {
            let args = ground_terms(&q.head, m).expect("safe statement");
            let kept: Vec<Option<Value>> =
                args.into_iter().enumerate().map(|(p, v)| c.projected(p).then_some(v)).collect();
            if seen.insert(kept.clone()) {
                let args = kept
                    .into_iter()
                    .map(|v| {
                        v.unwrap_or_else(|| {
                            next += 1;
                            Value::null(pad, next - 1)
                        })
                    })
                    .collect();
                out.insert(Fact { rel: c.head.rel.clone(), args });
            }
            true
        });
    }
    out
}

pub fn t_c_proj(cs: &[TcStatement], d: &Instance) -> Instance {
    t_c_proj_with(cs, d, NullKind::Plain)
}

/// Variables occurring exactly once among the relational atoms.
pub fn singleton_vars(q: &Query) -> BTreeSet<Sym> {
    let mut count: BTreeMap<&Sym, usize> = BTreeMap::new();
    for a in &q.body.atoms {
        for v in a.vars() {
            *count.entry(v).or_insert(0) += 1;
        }
    }
    count.into_iter().filter(|(_, n)| *n == 1).map(|(v, _)| v.clone()).collect()
}

/// Singleton variables that a null version may set to null. Variables in
/// comparisons are left alone: a null there fails the comparison, so such
/// versions produce no ideal answer.
fn nullable_vars(q: &Query, keys: Option<&Keys>) -> Vec<Sym> {
    let compared: BTreeSet<Sym> = Condition::new(Vec::new(), q.body.comparisons.clone()).vars().into_iter().collect();
    let mut keyed = BTreeSet::new();
    if let Some(keys) = keys {
        for a in &q.body.atoms {
            let k = keys.get(&a.rel).copied().unwrap_or(0);
            keyed.extend(a.args.iter().take(k).filter_map(|t| t.as_var().cloned()));
        }
    }
    singleton_vars(q).into_iter().filter(|v| !compared.contains(v) && !keyed.contains(v)).collect()
}

fn prototype(q: &Query, theta: &Valuation, nulled: &[Sym]) -> (Instance, Valuation) {
    let mut m = theta.clone();
    for (i, v) in nulled.iter().enumerate() {
        m.insert(v.clone(), Value::null(NullKind::NotApplicable, i as u32 + 1));
    }
    let inst = q.body.atoms.iter().map(|a| crate::eval::ground_atom(a, &m).expect("safe query")).collect();
    (inst, m)
}

/// Drop equalities; `None` when the query cannot produce answers.
fn prepare(q: &Query) -> Result<Option<Query>> {
    match eliminate_equalities(q) {
        Some(e) if satisfiable(&e)? => Ok(Some(e)),
        _ => Ok(None),
    }
}

fn vacuous() -> Verdict {
    Verdict::yes(Witness::None).with_note("query is unsatisfiable")
}

/// Set semantics over incomplete facts: the head tuple is a certain answer
/// over the minimal available database of each test database.
pub fn tc_qc_inc(cs: &[TcStatement], q: &Query) -> Result<Verdict> {
    let Some(q) = prepare(q)? else { return Ok(vacuous()) };
    let sq: Vec<Query> = cs.iter().map(|c| c.query()).collect();
    let others: Vec<&Query> = sq.iter().collect();
    let mut failure = None;
    for_each_test_database(&q, &others, &BTreeSet::new(), DEFAULT_CAP, &mut |_, l, head| {
        let avail = t_c_proj(cs, l);
        if find_answer(&q, &Db::new(&avail), head, NullMode::Certain).is_some() {
            true
        } else {
            failure = Some(IncompleteDatabase::new(l.clone(), avail).with_regime(Regime::IncompleteFacts));
            false
        }
    })?;
    Ok(match failure {
        Some(idb) => Verdict::no(Witness::Counterexample(idb)),
        None => Verdict::yes(Witness::None),
    })
}

fn res_check(cs: &[TcStatement], q: &Query, all_versions: bool) -> Result<Verdict> {
    let Some(q) = prepare(q)? else { return Ok(vacuous()) };
    let nullable = nullable_vars(&q, None);
    if all_versions && nullable.len() > 16 {
        return Err(Error::CapExceeded { cap: VERSION_CAP, what: "null versions" });
    }
    let sq: Vec<Query> = cs.iter().map(|c| c.query()).collect();
    let others: Vec<&Query> = sq.iter().collect();
    let masks: Vec<u32> = if all_versions { (0..1u32 << nullable.len()).collect() } else { vec![(1u32 << nullable.len()) - 1] };
    let mut failure = None;
    for_each_test_database(&q, &others, &BTreeSet::new(), DEFAULT_CAP, &mut |theta, _, _| {
        for &mask in &masks {
            let nulled: Vec<Sym> =
                nullable.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, v)| v.clone()).collect();
            let (l, m) = prototype(&q, theta, &nulled);
            let head = erase(&ground_terms(&q.head, &m).expect("safe query"));
            let avail = t_c_proj(cs, &l);
            if !eval_sql(&q, &avail).iter().any(|t| erase(t) == head) {
                let ideal = l.union(&avail);
                failure = Some(IncompleteDatabase::new(ideal, avail).with_regime(Regime::RestrictedFacts));
                return false;
            }
        }
        true
    })?;
    Ok(match failure {
        Some(idb) => Verdict::no(Witness::Counterexample(idb)),
        None => Verdict::yes(Witness::None),
    })
}

/// Set semantics over restricted facts. Boolean queries, and linear
/// queries in which no distinguished variable can be null, are checked on
/// the single version with every singleton variable null; all other
/// queries on every null version.
pub fn tc_qc_res(cs: &[TcStatement], q: &Query) -> Result<Verdict> {
    let head = q.head_vars();
    let single = q.head.is_empty() || (q.is_linear() && nullable_vars(q, None).iter().all(|v| !head.contains(v)));
    res_check(cs, q, !single)
}

/// [`tc_qc_res`] without the shortcut for boolean and linear queries.
pub fn tc_qc_res_all_versions(cs: &[TcStatement], q: &Query) -> Result<Verdict> {
    res_check(cs, q, true)
}

/// Set semantics with the three kinds of nulls reduces to restricted facts.
pub fn tc_qc_3null(cs: &[TcStatement], q: &Query) -> Result<Verdict> {
    tc_qc_res(cs, q)
}

/// Does `a` carry less information than `b`? Nulls are weaker than values
/// and ambiguous nulls weaker than any other null.
fn weaker(a: &Value, b: &Value) -> bool {
    match (a.null_kind(), b.null_kind()) {
        (Some(_), None) => true,
        (Some(NullKind::Ambiguous), Some(k)) => k != NullKind::Ambiguous,
        _ => false,
    }
}

/// Merge facts that agree on their key, preferring non-null values.
pub fn chase(d: &Instance, keys: &Keys) -> Result<Instance> {
    let mut merged: BTreeMap<(Sym, Vec<Value>), Vec<Value>> = BTreeMap::new();
    let mut out = Instance::new();
    for f in d.iter() {
        let Some(&k) = keys.get(&f.rel) else {
            out.insert(f.clone());
            continue;
        };
        let k = k.min(f.args.len());
        if f.args[..k].iter().any(|v| v.is_null()) {
            return Err(Error::ChaseConflict(format!("null in key position of {f}")));
        }
        let key = (f.rel.clone(), f.args[..k].to_vec());
        match merged.get_mut(&key) {
            None => {
                merged.insert(key, f.args.clone());
            }
            Some(old) => {
                for (p, v) in f.args.iter().enumerate() {
                    if old[p] == *v || weaker(v, &old[p]) {
                        continue;
                    }
                    if weaker(&old[p], v) {
                        old[p] = v.clone();
                        continue;
                    }
                    if !old[p].is_null() {
                        return Err(Error::ChaseConflict(format!(
                            "{} facts with key {:?} disagree at position {}",
                            f.rel,
                            f.args[..k].iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                            p + 1
                        )));
                    }
                }
            }
        }
    }
    for ((rel, _), args) in merged {
        out.insert(Fact { rel, args });
    }
    Ok(out)
}

/// Apply the keys to the query itself: atoms of a keyed relation with the
/// same key terms must agree elsewhere. `None` if that forces two distinct
/// constants together.
pub fn chase_query(q: &Query, keys: &Keys) -> Option<Query> {
    let mut q = q.clone();
    'outer: loop {
        let atoms = &q.body.atoms;
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                let (a, b) = (&atoms[i], &atoms[j]);
                let Some(&k) = keys.get(&a.rel) else { continue };
                if a.rel != b.rel || a.args[..k.min(a.args.len())] != b.args[..k.min(b.args.len())] {
                    continue;
                }
                for p in k..a.args.len() {
                    let (s, t) = (&a.args[p], &b.args[p]);
                    if s == t {
                        continue;
                    }
                    let (from, to) = match (s, t) {
                        (Term::Const(_), Term::Const(_)) => return None,
                        (Term::Var(v), other) | (other, Term::Var(v)) => (v.clone(), other.clone()),
                    };
                    let map = BTreeMap::from([(from, to)]);
                    q = Query {
                        name: q.name.clone(),
                        head: q.head.iter().map(|t| substitute_term(t, &map)).collect(),
                        body: substitute_condition(&q.body, &map),
                    };
                    continue 'outer;
                }
            }
        }
        return Some(q);
    }
}

/// The crucial query: same body, head extended by the key-position
/// variables of the body.
pub fn crucial_query(q: &Query, keys: &Keys) -> Query {
    let mut head = q.head.clone();
    let mut seen: BTreeSet<Sym> = q.head_vars();
    for a in &q.body.atoms {
        let k = keys.get(&a.rel).copied().unwrap_or(0);
        for t in a.args.iter().take(k) {
            if let Term::Var(v) = t {
                if seen.insert(v.clone()) {
                    head.push(t.clone());
                }
            }
        }
    }
    Query { name: q.name.clone(), head, body: q.body.clone() }
}

fn is_key_preserving(c: &TcStatement, keys: &Keys) -> bool {
    keys.get(&c.head.rel).is_some_and(|&k| (0..k).all(|p| c.projected(p)))
}

/// Bag semantics under keys, for key-preserving statements.
pub fn tc_qc_bag_keys(cs: &[TcStatement], q: &Query, keys: &Keys) -> Result<Verdict> {
    if let Some(r) = q.body.relations().into_iter().find(|r| !keys.contains_key(r)) {
        return Err(Error::Refused(format!("bag semantics with nulls needs a key for relation {r}")));
    }
    let rels = q.body.relations();
    let relevant: Vec<TcStatement> = cs.iter().filter(|c| rels.contains(&c.head.rel)).cloned().collect();
    if let Some(c) = relevant.iter().find(|c| !is_key_preserving(c, keys)) {
        return Err(Error::Refused(format!("statement {} does not preserve the key of {}", c.name, c.head.rel)));
    }
    let Some(q) = prepare(q)? else { return Ok(vacuous()) };
    let Some(q) = chase_query(&q, keys) else {
        return Ok(Verdict::yes(Witness::None).with_note("query contradicts the keys"));
    };
    let crucial = crucial_query(&q, keys);
    let nullable = nullable_vars(&q, Some(keys));
    let sq: Vec<Query> = relevant.iter().map(|c| c.query()).collect();
    let others: Vec<&Query> = sq.iter().collect();
    let mut failure = None;
    let mut inner = Ok(());
    for_each_test_database(&q, &others, &BTreeSet::new(), DEFAULT_CAP, &mut |theta, _, _| {
        let (l, m) = prototype(&q, theta, &nullable);
        // Null kinds matter here: an ambiguous padding null does not recover
        // a not-applicable value of the ideal database.
        let w: Tuple = ground_terms(&crucial.head, &m).expect("safe query").iter().map(Value::erase_null_id).collect();
        let avail = match chase(&t_c_proj_with(&relevant, &l, NullKind::Ambiguous), keys) {
            Ok(a) => a,
            Err(e) => {
                inner = Err(e);
                return false;
            }
        };
        if eval_sql(&crucial, &avail).iter().any(|t| t.iter().map(Value::erase_null_id).eq(w.iter().cloned())) {
            true
        } else {
            failure = Some(IncompleteDatabase::new(l, avail).with_regime(Regime::PartialFacts));
            false
        }
    })?;
    inner?;
    Ok(match failure {
        Some(idb) => Verdict::no(Witness::Counterexample(idb)),
        None => Verdict::yes(Witness::None),
    })
}

/// Entry point by regime and semantics.
pub fn tc_qc_nulls(cs: &[TcStatement], q: &Query, regime: Regime, sem: Semantics, keys: &Keys) -> Result<Verdict> {
    match (regime, sem) {
        (_, Semantics::Bag) => tc_qc_bag_keys(cs, q, keys),
        (Regime::NoNulls, Semantics::Set) => {
            if cs.iter().any(|c| !c.is_full_projection()) {
                tc_qc_inc(cs, q)
            } else {
                crate::completeness::tc_qc_set(cs, q)
            }
        }
        (Regime::IncompleteFacts, Semantics::Set) => tc_qc_inc(cs, q),
        (Regime::RestrictedFacts, Semantics::Set) => tc_qc_res(cs, q),
        (Regime::PartialFacts, Semantics::Set) => tc_qc_3null(cs, q),
        (Regime::AmbiguousNulls, Semantics::Set) => Err(Error::Refused(
            "no set of table completeness statements can guarantee set completeness with ambiguous nulls".into(),
        )),
    }
}

/// Atom helper used by tests and the CLI: `R(x1..xk)` with fresh variables.
pub fn generic_atom(rel: &str, arity: usize) -> Atom {
    Atom::new(rel, (1..=arity).map(|i| Term::var(&format!("a{i}"))).collect())
}
