//! Query evaluation by backtracking over body atoms, satisfaction of
//! completeness statements, and freezing.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::model::{
    Atom, CmpOp, Condition, Fact, IncompleteDatabase, Instance, Query, Semantics,
    TcStatement, Term, Tuple,
};
use crate::value::{NullKind, Sym, Value};

/// How variables may bind to null tokens.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NullMode {
    /// Nulls behave like ordinary constants compared by token identity.
    Identity,
    /// Join variables never bind to a null (SQL evaluation).
    Sql,
    /// Join variables never bind to `_na` or `_amb`; other nulls join by
    /// token identity (certain answers with mixed nulls).
    Certain,
}

/// A multiset of answer tuples. Under set semantics every count is 1.
pub type Answers = BTreeMap<Tuple, usize>;

/// Relation index over an instance.
pub struct Db<'a> {
    rels: HashMap<&'a str, Vec<&'a [Value]>>,
}

impl<'a> Db<'a> {
    pub fn new(inst: &'a Instance) -> Db<'a> {
        let mut rels: HashMap<&'a str, Vec<&'a [Value]>> = HashMap::new();
        for f in inst.iter() {
            rels.entry(&f.rel).or_default().push(&f.args);
        }
        Db { rels }
    }

    fn rel(&self, r: &str) -> &[&'a [Value]] {
        self.rels.get(r).map(|v| v.as_slice()).unwrap_or(&[])
    }
}

#[derive(Clone, Debug)]
enum Slot {
    Var(usize),
    Const(Value),
}

struct Plan {
    vars: Vec<Sym>,
    index: HashMap<Sym, usize>,
    atoms: Vec<(Sym, Vec<Slot>)>,
    /// comparisons to test once the atom with this step index is matched;
    /// entry 0 holds those decidable before any atom.
    checks: Vec<Vec<(Slot, CmpOp, Slot)>>,
    join: Vec<bool>,
    mode: NullMode,
}

fn slot_of(t: &Term, index: &HashMap<Sym, usize>) -> Slot {
    match t {
        Term::Var(v) => Slot::Var(index[v]),
        Term::Const(c) => Slot::Const(c.clone()),
    }
}

impl Plan {
    fn new(cond: &Condition, db: &Db, mode: NullMode, prebound: &BTreeSet<Sym>) -> Plan {
        let mut vars: Vec<Sym> = cond.vars();
        for v in prebound {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
        let index: HashMap<Sym, usize> = vars.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        let mut occurrences = vec![0usize; vars.len()];
        for a in &cond.atoms {
            for v in a.vars() {
                occurrences[index[v]] += 1;
            }
        }
        let join = occurrences.iter().map(|&n| n >= 2).collect();

        // Greedy order: most bound positions first, then the smaller relation.
        let mut bound: Vec<bool> = vars.iter().map(|v| prebound.contains(v)).collect();
        let mut remaining: Vec<usize> = (0..cond.atoms.len()).collect();
        let mut order = Vec::new();
        while !remaining.is_empty() {
            let score = |i: usize| {
                let a = &cond.atoms[i];
                let b = a
                    .args
                    .iter()
                    .filter(|t| match t {
                        Term::Var(v) => bound[index[v]],
                        Term::Const(_) => true,
                    })
                    .count();
                (std::cmp::Reverse(b), db.rel(&a.rel).len(), i)
            };
            let best = remaining.iter().copied().min_by_key(|&i| score(i)).unwrap();
            remaining.retain(|&i| i != best);
            for v in cond.atoms[best].vars() {
                bound[index[v]] = true;
            }
            order.push(best);
        }

        let atoms: Vec<(Sym, Vec<Slot>)> = order
            .iter()
            .map(|&i| {
                let a = &cond.atoms[i];
                (a.rel.clone(), a.args.iter().map(|t| slot_of(t, &index)).collect())
            })
            .collect();

        // Step at which each variable becomes bound.
        let mut bound_at: Vec<usize> = vars.iter().map(|v| if prebound.contains(v) { 0 } else { usize::MAX }).collect();
        for (step, (_, slots)) in atoms.iter().enumerate() {
            for s in slots {
                if let Slot::Var(i) = s {
                    if bound_at[*i] == usize::MAX {
                        bound_at[*i] = step + 1;
                    }
                }
            }
        }
        let mut checks = vec![Vec::new(); atoms.len() + 1];
        for c in &cond.comparisons {
            let step = c
                .terms()
                .iter()
                .map(|t| match t {
                    Term::Var(v) => bound_at[index[v]],
                    Term::Const(_) => 0,
                })
                .max()
                .unwrap_or(0);
            // Unsafe comparisons can never be decided; they fail at the end.
            let step = step.min(atoms.len());
            checks[step].push((slot_of(&c.left, &index), c.op, slot_of(&c.right, &index)));
        }
        Plan { vars, index, atoms, checks, join, mode }
    }

    fn may_bind(&self, var: usize, v: &Value) -> bool {
        match v {
            Value::Null(t) => match self.mode {
                NullMode::Identity => true,
                NullMode::Sql => !self.join[var],
                NullMode::Certain => {
                    !self.join[var] || matches!(t.kind, NullKind::Plain | NullKind::Unknown)
                }
            },
            _ => true,
        }
    }
}

fn slot_value<'v>(s: &'v Slot, env: &'v [Option<Value>]) -> Option<&'v Value> {
    match s {
        Slot::Const(c) => Some(c),
        Slot::Var(i) => env[*i].as_ref(),
    }
}

fn checks_pass(checks: &[(Slot, CmpOp, Slot)], env: &[Option<Value>]) -> bool {
    checks.iter().all(|(l, op, r)| match (slot_value(l, env), slot_value(r, env)) {
        (Some(a), Some(b)) => op.eval(a, b),
        _ => false,
    })
}

fn search(
    plan: &Plan,
    db: &Db,
    step: usize,
    env: &mut Vec<Option<Value>>,
    f: &mut dyn FnMut(&[Option<Value>]) -> bool,
) -> bool {
    if step == plan.atoms.len() {
        return f(env);
    }
    let (rel, slots) = &plan.atoms[step];
    for args in db.rel(rel) {
        if args.len() != slots.len() {
            continue;
        }
        let mut newly = Vec::new();
        let mut ok = true;
        for (s, v) in slots.iter().zip(args.iter()) {
            match s {
                Slot::Const(c) => {
                    if c != v {
                        ok = false;
                        break;
                    }
                }
                Slot::Var(i) => match &env[*i] {
                    Some(b) => {
                        if b != v {
                            ok = false;
                            break;
                        }
                    }
                    None => {
                        if !plan.may_bind(*i, v) {
                            ok = false;
                            break;
                        }
                        env[*i] = Some(v.clone());
                        newly.push(*i);
                    }
                },
            }
        }
        if ok && checks_pass(&plan.checks[step + 1], env) && !search(plan, db, step + 1, env, f) {
            for i in newly {
                env[i] = None;
            }
            return false;
        }
        for i in newly {
            env[i] = None;
        }
    }
    true
}

/// Enumerate every valuation of `cond` over `inst` that extends `pre`.
/// The callback receives the full valuation and returns `false` to stop.
pub fn for_each_valuation(
    cond: &Condition,
    inst: &Instance,
    mode: NullMode,
    pre: &BTreeMap<Sym, Value>,
    f: &mut dyn FnMut(&BTreeMap<Sym, Value>) -> bool,
) {
    let db = Db::new(inst);
    for_each_valuation_db(cond, &db, mode, pre, f)
}

pub fn for_each_valuation_db(
    cond: &Condition,
    db: &Db,
    mode: NullMode,
    pre: &BTreeMap<Sym, Value>,
    f: &mut dyn FnMut(&BTreeMap<Sym, Value>) -> bool,
) {
    let prebound: BTreeSet<Sym> = pre.keys().cloned().collect();
    let plan = Plan::new(cond, db, mode, &prebound);
    let mut env: Vec<Option<Value>> = vec![None; plan.vars.len()];
    for (k, v) in pre {
        let i = plan.index[k];
        if !plan.may_bind(i, v) {
            return;
        }
        env[i] = Some(v.clone());
    }
    if !checks_pass(&plan.checks[0], &env) {
        return;
    }
    search(&plan, db, 0, &mut env, &mut |e| {
        let m: BTreeMap<Sym, Value> = plan
            .vars
            .iter()
            .zip(e.iter())
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.clone(), v.clone())))
            .collect();
        f(&m)
    });
}

fn instantiate_head(head: &[Term], m: &BTreeMap<Sym, Value>) -> Option<Tuple> {
    head.iter()
        .map(|t| match t {
            Term::Var(v) => m.get(v).cloned(),
            Term::Const(c) => Some(c.clone()),
        })
        .collect()
}

/// Evaluate `q` with an explicit null mode. Bag counts are numbers of
/// valuations of all body variables.
pub fn evaluate_with(q: &Query, inst: &Instance, sem: Semantics, mode: NullMode) -> Answers {
    let mut out = Answers::new();
    for_each_valuation(&q.body, inst, mode, &BTreeMap::new(), &mut |m| {
        if let Some(t) = instantiate_head(&q.head, m) {
            *out.entry(t).or_insert(0) += 1;
        }
        true
    });
    if sem == Semantics::Set {
        for c in out.values_mut() {
            *c = 1;
        }
    }
    out
}

pub fn evaluate(q: &Query, inst: &Instance, sem: Semantics) -> Answers {
    evaluate_with(q, inst, sem, NullMode::Identity)
}

pub fn eval_set(q: &Query, inst: &Instance) -> BTreeSet<Tuple> {
    evaluate(q, inst, Semantics::Set).into_keys().collect()
}

/// Bind the head of `q` to `tuple`; `None` if the head cannot take it.
pub fn head_binding(head: &[Term], tuple: &[Value]) -> Option<BTreeMap<Sym, Value>> {
    if head.len() != tuple.len() {
        return None;
    }
    let mut m = BTreeMap::new();
    for (t, v) in head.iter().zip(tuple) {
        match t {
            Term::Const(c) => {
                if c != v {
                    return None;
                }
            }
            Term::Var(x) => {
                if let Some(old) = m.insert(x.clone(), v.clone()) {
                    if &old != v {
                        return None;
                    }
                }
            }
        }
    }
    Some(m)
}

/// A valuation witnessing `tuple ∈ q(inst)`, if any.
pub fn find_answer(q: &Query, db: &Db, tuple: &[Value], mode: NullMode) -> Option<BTreeMap<Sym, Value>> {
    let pre = head_binding(&q.head, tuple)?;
    let mut found = None;
    for_each_valuation_db(&q.body, db, mode, &pre, &mut |m| {
        found = Some(m.clone());
        false
    });
    found
}

pub fn has_answer(q: &Query, inst: &Instance, tuple: &[Value]) -> bool {
    find_answer(q, &Db::new(inst), tuple, NullMode::Identity).is_some()
}

/// Apply a ground valuation to an atom; `None` if a variable is unmapped.
pub fn ground_atom(a: &Atom, m: &BTreeMap<Sym, Value>) -> Option<Fact> {
    let args = a
        .args
        .iter()
        .map(|t| match t {
            Term::Var(v) => m.get(v).cloned(),
            Term::Const(c) => Some(c.clone()),
        })
        .collect::<Option<Vec<_>>>()?;
    Some(Fact { rel: a.rel.clone(), args })
}

pub fn ground_condition(c: &Condition, m: &BTreeMap<Sym, Value>) -> Option<Instance> {
    c.atoms.iter().map(|a| ground_atom(a, m)).collect()
}

pub fn ground_terms(ts: &[Term], m: &BTreeMap<Sym, Value>) -> Option<Tuple> {
    instantiate_head(ts, m)
}

/// Does the valuation satisfy every comparison of `c`?
pub fn comparisons_hold(c: &Condition, m: &BTreeMap<Sym, Value>) -> bool {
    c.comparisons.iter().all(|k| {
        let l = ground_terms(std::slice::from_ref(&k.left), m);
        let r = ground_terms(std::slice::from_ref(&k.right), m);
        match (l, r) {
            (Some(l), Some(r)) => k.holds(&l[0], &r[0]),
            _ => false,
        }
    })
}

pub const FRESH_PREFIX: &str = "#f";

/// Replace every variable by a distinct fresh constant `#fN`, with `N` above
/// any such index already present in `c`.
pub fn freeze(c: &Condition) -> (Instance, BTreeMap<Sym, Value>) {
    let start = c
        .constants()
        .iter()
        .filter_map(|v| match v {
            Value::Str(s) => s.strip_prefix(FRESH_PREFIX).and_then(|n| n.parse::<u64>().ok()),
            _ => None,
        })
        .max()
        .map_or(0, |n| n + 1);
    let mapping: BTreeMap<Sym, Value> = c
        .vars()
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, Value::str(&format!("{FRESH_PREFIX}{}", start + i as u64))))
        .collect();
    let inst = ground_condition(c, &mapping).expect("all variables mapped");
    (inst, mapping)
}

/// Is `avail` an indicator for `ideal` with respect to statement `c`?
pub fn is_indicator(c: &TcStatement, ideal: &Fact, avail: &Fact) -> bool {
    avail.rel == ideal.rel
        && avail.args.len() == ideal.args.len()
        && (0..ideal.args.len()).all(|p| !c.projected(p) || avail.args[p] == ideal.args[p])
}

/// Ideal facts constrained by `c`. The statement's body is evaluated with
/// SQL null semantics, as nulls in an ideal database mark absent values.
pub fn constrained_facts(c: &TcStatement, ideal: &Instance) -> BTreeSet<Fact> {
    let q = c.query();
    evaluate_with(&q, ideal, Semantics::Set, NullMode::Sql)
        .into_keys()
        .map(|args| Fact { rel: c.head.rel.clone(), args })
        .collect()
}

pub fn satisfies_tc(idb: &IncompleteDatabase, c: &TcStatement) -> bool {
    let avail: Vec<&Fact> = idb.available.relation(&c.head.rel).collect();
    constrained_facts(c, &idb.ideal)
        .iter()
        .all(|f| avail.iter().any(|a| is_indicator(c, f, a)))
}

pub fn satisfies_all(idb: &IncompleteDatabase, cs: &[TcStatement]) -> bool {
    cs.iter().all(|c| satisfies_tc(idb, c))
}

pub fn satisfies_qc(idb: &IncompleteDatabase, q: &Query, sem: Semantics) -> bool {
    evaluate(q, &idb.ideal, sem) == evaluate(q, &idb.available, sem)
}
