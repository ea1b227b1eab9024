//! Random generators and brute-force oracles shared by the integration
//! tests. The oracles evaluate queries with their own backtracking matcher
//! and never call the decision procedures they check.

#![allow(dead_code)]

pub mod nulls;
pub mod process;

use std::collections::{BTreeMap, BTreeSet};

use compl_core::parse::{parse_query, parse_statement};
use compl_core::{Fact, IncompleteDatabase, Instance, Query, Semantics, Sym, TcStatement, Term, Tuple, Value};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Schema used by most generators.
pub const SCHEMA: [(&str, usize); 2] = [("R", 2), ("S", 1)];

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub max_atoms: usize,
    pub vars: &'static [&'static str],
    /// Chance that an argument is one of the constants 0, 1.
    pub const_prob: f64,
    pub max_comparisons: usize,
}

pub const CONTAINMENT: Shape = Shape { max_atoms: 3, vars: &["x", "y", "z"], const_prob: 0.15, max_comparisons: 0 };

impl Shape {
    pub fn with_comparisons(mut self, n: usize) -> Shape {
        self.max_comparisons = n;
        self
    }
}

fn rand_term(rng: &mut StdRng, vars: &[&str], const_prob: f64) -> String {
    if rng.gen_bool(const_prob) {
        rng.gen_range(0..2).to_string()
    } else {
        vars.choose(rng).unwrap().to_string()
    }
}

fn rand_atom_text(rng: &mut StdRng, vars: &[&str], const_prob: f64) -> String {
    let (rel, arity) = SCHEMA.choose(rng).unwrap();
    let args: Vec<String> = (0..*arity).map(|_| rand_term(rng, vars, const_prob)).collect();
    format!("{rel}({})", args.join(","))
}

fn rand_comparison_text(rng: &mut StdRng, used: &[String]) -> Option<String> {
    if used.is_empty() {
        return None;
    }
    let side = |rng: &mut StdRng| {
        if rng.gen_bool(0.35) {
            rng.gen_range(0..2).to_string()
        } else {
            used.choose(rng).unwrap().clone()
        }
    };
    let l = side(rng);
    let r = side(rng);
    if l.parse::<i64>().is_ok() && r.parse::<i64>().is_ok() {
        return None;
    }
    let op = ["=", "<", "<="].choose(rng).unwrap();
    Some(format!("{l} {op} {r}"))
}

fn used_vars(atoms: &[String], vars: &[&str]) -> Vec<String> {
    vars.iter()
        .filter(|v| atoms.iter().any(|a| a[a.find('(').unwrap()..].split(['(', ',', ')']).any(|t| t == **v)))
        .map(|v| v.to_string())
        .collect()
}

/// Body text and the variables it binds.
fn rand_body(rng: &mut StdRng, shape: Shape) -> (Vec<String>, Vec<String>) {
    let n = rng.gen_range(1..=shape.max_atoms);
    let atoms: Vec<String> = (0..n).map(|_| rand_atom_text(rng, shape.vars, shape.const_prob)).collect();
    let used = used_vars(&atoms, shape.vars);
    let mut parts = atoms;
    let k = rng.gen_range(0..=shape.max_comparisons);
    for _ in 0..k {
        if let Some(c) = rand_comparison_text(rng, &used) {
            parts.push(c);
        }
    }
    (parts, used)
}

/// A random query with the given head arity. Retries until the head can
/// be built from bound variables.
pub fn rand_query(rng: &mut StdRng, name: &str, arity: usize, shape: Shape) -> Query {
    loop {
        let (parts, used) = rand_body(rng, shape);
        if arity > 0 && used.is_empty() {
            continue;
        }
        let head: Vec<String> = (0..arity).map(|_| used.choose(rng).unwrap().clone()).collect();
        let text = format!("{name}({}) :- {}", head.join(","), parts.join(", "));
        return parse_query(&text).unwrap_or_else(|e| panic!("generated {text}: {e}"));
    }
}

/// A random statement: head atom with distinct variables, a condition of
/// at most `max_cond` atoms and optionally one comparison.
pub fn rand_statement(rng: &mut StdRng, name: &str, max_cond: usize, comparisons: bool) -> TcStatement {
    let (rel, arity) = *SCHEMA.choose(rng).unwrap();
    let head_vars = ["x", "y"];
    let head: Vec<&str> = head_vars[..arity].to_vec();
    let n = rng.gen_range(0..=max_cond);
    let pool = ["x", "y", "z"];
    let mut parts: Vec<String> = (0..n).map(|_| rand_atom_text(rng, &pool[..arity + 1], 0.15)).collect();
    if comparisons && rng.gen_bool(0.5) {
        let mut bound: Vec<String> = head.iter().map(|s| s.to_string()).collect();
        for v in used_vars(&parts, &pool) {
            if !bound.contains(&v) {
                bound.push(v);
            }
        }
        if let Some(c) = rand_comparison_text(rng, &bound) {
            parts.push(c);
        }
    }
    let text = if parts.is_empty() {
        format!("{name} : {rel}({})", head.join(","))
    } else {
        format!("{name} : {rel}({}) ; {}", head.join(","), parts.join(", "))
    };
    parse_statement(&text).unwrap_or_else(|e| panic!("generated {text}: {e}"))
}

pub fn rand_statements(rng: &mut StdRng, max: usize, comparisons: bool) -> Vec<TcStatement> {
    let n = rng.gen_range(0..=max);
    (0..n).map(|i| rand_statement(rng, &format!("C{i}"), 1, comparisons)).collect()
}

// ---------------------------------------------------------------------------
// Naive evaluation

fn term_value(t: &Term, m: &BTreeMap<Sym, Value>) -> Option<Value> {
    match t {
        Term::Const(c) => Some(c.clone()),
        Term::Var(v) => m.get(v).cloned(),
    }
}

fn extend(q: &Query, i: usize, d: &Instance, m: &mut BTreeMap<Sym, Value>, out: &mut BTreeMap<Tuple, usize>) {
    if i == q.body.atoms.len() {
        let ok = q.body.comparisons.iter().all(|c| {
            let l = term_value(&c.left, m).unwrap();
            let r = term_value(&c.right, m).unwrap();
            c.holds(&l, &r)
        });
        if ok {
            let t: Tuple = q.head.iter().map(|t| term_value(t, m).unwrap()).collect();
            *out.entry(t).or_insert(0) += 1;
        }
        return;
    }
    let a = &q.body.atoms[i];
    for f in d.iter() {
        if f.rel != a.rel || f.args.len() != a.args.len() {
            continue;
        }
        let mut bound = Vec::new();
        let mut ok = true;
        for (t, v) in a.args.iter().zip(&f.args) {
            match t {
                Term::Const(c) => ok &= c == v,
                Term::Var(x) => match m.get(x) {
                    Some(w) => ok &= w == v,
                    None => {
                        m.insert(x.clone(), v.clone());
                        bound.push(x.clone());
                    }
                },
            }
            if !ok {
                break;
            }
        }
        if ok {
            extend(q, i + 1, d, m, out);
        }
        for x in bound {
            m.remove(&x);
        }
    }
}

/// Answers with multiplicities: one per satisfying assignment of the body
/// variables. Null-free instances only.
pub fn naive_bag(q: &Query, d: &Instance) -> BTreeMap<Tuple, usize> {
    let mut out = BTreeMap::new();
    extend(q, 0, d, &mut BTreeMap::new(), &mut out);
    out
}

pub fn naive_set(q: &Query, d: &Instance) -> BTreeSet<Tuple> {
    naive_bag(q, d).into_keys().collect()
}

pub fn naive_answers(q: &Query, d: &Instance, sem: Semantics) -> BTreeMap<Tuple, usize> {
    let mut a = naive_bag(q, d);
    if sem == Semantics::Set {
        a.values_mut().for_each(|n| *n = 1);
    }
    a
}

/// The least available database satisfying the statements.
pub fn naive_t_c(cs: &[TcStatement], d: &Instance) -> Instance {
    let mut out = Instance::new();
    for c in cs {
        for t in naive_set(&c.query(), d) {
            out.insert(Fact { rel: c.head.rel.clone(), args: t });
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Valuation grids

/// Points around the sorted integer `anchors`: the anchors themselves and
/// `per_gap` distinct points in each open interval between and around them.
/// Every order type of `per_gap` variables relative to the anchors is
/// realized by some assignment into the grid.
pub fn grid(anchors: &[i64], per_gap: usize) -> Vec<Value> {
    let mut a: Vec<i64> = anchors.to_vec();
    a.sort();
    a.dedup();
    let mut out = Vec::new();
    let k = per_gap as i64;
    let lo = a.first().copied().unwrap_or(0);
    for i in 0..k {
        out.push(Value::int(lo - k + i));
    }
    for (j, &x) in a.iter().enumerate() {
        out.push(Value::int(x));
        if let Some(&y) = a.get(j + 1) {
            for i in 1..=k {
                // x + i(y-x)/(k+1)
                out.push(Value::ratio(x * (k + 1) + i * (y - x), k + 1));
            }
        }
    }
    let hi = a.last().copied().unwrap_or(0);
    for i in 1..=k {
        out.push(Value::int(hi + i));
    }
    if a.is_empty() {
        out.retain(|v| *v != Value::int(0));
        out.truncate(k as usize);
    }
    out
}

/// Domain for relational checks: the anchors and one fresh value per variable.
pub fn fresh_domain(anchors: &[i64], fresh: usize) -> Vec<Value> {
    let mut out: Vec<Value> = anchors.iter().map(|&i| Value::int(i)).collect();
    out.extend((0..fresh).map(|i| Value::str(&format!("v{i}"))));
    out
}

/// Call `f` with every assignment of `vars` into `domain`.
pub fn for_each_assignment(vars: &[Sym], domain: &[Value], f: &mut dyn FnMut(&BTreeMap<Sym, Value>) -> bool) {
    fn go(
        i: usize,
        vars: &[Sym],
        domain: &[Value],
        m: &mut BTreeMap<Sym, Value>,
        f: &mut dyn FnMut(&BTreeMap<Sym, Value>) -> bool,
    ) -> bool {
        if i == vars.len() {
            return f(m);
        }
        for v in domain {
            m.insert(vars[i].clone(), v.clone());
            if !go(i + 1, vars, domain, m, f) {
                return false;
            }
        }
        true
    }
    go(0, vars, domain, &mut BTreeMap::new(), f);
}

pub fn ground(q: &Query, m: &BTreeMap<Sym, Value>) -> Option<(Instance, Tuple)> {
    let ok = q.body.comparisons.iter().all(|c| c.holds(&term_value(&c.left, m).unwrap(), &term_value(&c.right, m).unwrap()));
    if !ok {
        return None;
    }
    let body = q
        .body
        .atoms
        .iter()
        .map(|a| Fact { rel: a.rel.clone(), args: a.args.iter().map(|t| term_value(t, m).unwrap()).collect() })
        .collect();
    Some((body, q.head.iter().map(|t| term_value(t, m).unwrap()).collect()))
}

fn has_comparisons(qs: &[&Query]) -> bool {
    qs.iter().any(|q| !q.body.comparisons.is_empty())
}

/// Domain for instantiating `vars` relative to the integer constants.
pub fn oracle_domain(anchors: &[i64], nvars: usize, dense: bool) -> Vec<Value> {
    if dense {
        grid(anchors, nvars)
    } else {
        fresh_domain(anchors, nvars)
    }
}

/// Containment by instantiating the containee over a domain that realizes
/// every configuration of its variables relative to the constants 0 and 1.
/// A violation on any database also shows on the instantiated body alone,
/// as the containers are monotone.
pub fn oracle_contained(q1: &Query, union: &[Query]) -> bool {
    let mut all: Vec<&Query> = vec![q1];
    all.extend(union.iter());
    let vars = q1.body.vars();
    let domain = oracle_domain(&[0, 1], vars.len(), has_comparisons(&all));
    let mut holds = true;
    for_each_assignment(&vars, &domain, &mut |m| {
        if let Some((d, head)) = ground(q1, m) {
            if !union.iter().any(|p| naive_set(p, &d).contains(&head)) {
                holds = false;
            }
        }
        holds
    });
    holds
}

/// Completeness of `q` under the statements, checked on every instantiated
/// body as ideal database and its least available database.
pub fn oracle_tc_qc(cs: &[TcStatement], q: &Query, sem: Semantics) -> bool {
    let sq: Vec<Query> = cs.iter().map(|c| c.query()).collect();
    let mut all: Vec<&Query> = vec![q];
    all.extend(sq.iter());
    let vars = q.body.vars();
    let domain = oracle_domain(&[0, 1], vars.len(), has_comparisons(&all));
    let mut holds = true;
    for_each_assignment(&vars, &domain, &mut |m| {
        if let Some((ideal, _)) = ground(q, m) {
            let avail = naive_t_c(cs, &ideal);
            holds = naive_answers(q, &ideal, sem) == naive_answers(q, &avail, sem);
        }
        holds
    });
    holds
}

/// All instances over `facts` with at most `max` facts.
pub fn for_each_subset(facts: &[Fact], max: usize, f: &mut dyn FnMut(&Instance) -> bool) {
    fn go(i: usize, facts: &[Fact], max: usize, cur: &mut Vec<Fact>, f: &mut dyn FnMut(&Instance) -> bool) -> bool {
        if i == facts.len() {
            return f(&cur.iter().cloned().collect());
        }
        if !go(i + 1, facts, max, cur, f) {
            return false;
        }
        if cur.len() < max {
            cur.push(facts[i].clone());
            let r = go(i + 1, facts, max, cur, f);
            cur.pop();
            return r;
        }
        true
    }
    go(0, facts, max, &mut Vec::new(), f);
}

/// Every fact of the schema over `domain`.
pub fn all_facts(schema: &[(&str, usize)], domain: &[Value]) -> Vec<Fact> {
    let mut out = Vec::new();
    for &(rel, arity) in schema {
        let mut idx = vec![0usize; arity];
        loop {
            out.push(Fact::new(rel, idx.iter().map(|&i| domain[i].clone()).collect()));
            let mut p = 0;
            while p < arity {
                idx[p] += 1;
                if idx[p] < domain.len() {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
            if p == arity {
                break;
            }
        }
    }
    out
}

/// Search incomplete databases whose ideal part has at most `max` facts
/// over `domain`, with the least available part. Returns a violation.
pub fn enumerate_tc_qc(cs: &[TcStatement], q: &Query, sem: Semantics, domain: &[Value], max: usize) -> Option<IncompleteDatabase> {
    let facts = all_facts(&SCHEMA, domain);
    let mut found = None;
    for_each_subset(&facts, max, &mut |ideal| {
        let avail = naive_t_c(cs, ideal);
        if naive_answers(q, ideal, sem) != naive_answers(q, &avail, sem) {
            found = Some(IncompleteDatabase::new(ideal.clone(), avail));
            return false;
        }
        true
    });
    found
}

pub fn int_constants(qs: &[&Query]) -> Vec<i64> {
    let mut out = BTreeSet::new();
    for q in qs {
        for c in q.constants() {
            if let Value::Num(r) = &c {
                if r.is_integer() {
                    out.insert(r.to_integer().try_into().unwrap());
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Property-test configuration without failure persistence files; cases
/// are reproducible from the printed seed.
pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config { cases: n, failure_persistence: None, ..Default::default() }
}
