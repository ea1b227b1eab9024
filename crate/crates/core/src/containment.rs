//! Containment of a conjunctive query in a union of conjunctive queries.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::eval::{find_answer, freeze, ground_condition, ground_terms, Db, NullMode};
use crate::model::{
    substitute_atom, substitute_term, Atom, CertEntry, CmpOp, Comparison, Condition, Instance,
    Query, Term, Verdict, Witness,
};
use crate::value::{sym, values_between, Sym, Value};

pub type Valuation = BTreeMap<Sym, Value>;

pub const DEFAULT_CAP: usize = 1_000_000;

/// Positive certificates keep at most this many entries.
const CERT_LIMIT: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Place {
    Const(usize),
    /// gap index, block index within the gap
    Gap(usize, usize),
}

impl Place {
    fn key(self) -> (usize, usize) {
        match self {
            Place::Const(j) => (2 * j + 1, 0),
            Place::Gap(g, b) => (2 * g, b),
        }
    }
}

struct Enumerator<'a> {
    vars: &'a [Sym],
    consts: Vec<Value>,
    /// comparisons indexed by the position of their last variable in `vars`
    checks: Vec<Vec<&'a Comparison>>,
    /// gap -> blocks -> members (indexes into vars)
    gaps: Vec<Vec<Vec<usize>>>,
    at_const: Vec<Option<usize>>,
    cap: usize,
    count: usize,
}

impl<'a> Enumerator<'a> {
    fn place_of(&self, i: usize) -> Place {
        if let Some(j) = self.at_const[i] {
            return Place::Const(j);
        }
        for (g, blocks) in self.gaps.iter().enumerate() {
            for (b, members) in blocks.iter().enumerate() {
                if members.contains(&i) {
                    return Place::Gap(g, b);
                }
            }
        }
        unreachable!("variable not placed")
    }

    fn term_key(&self, t: &Term, index: &BTreeMap<&Sym, usize>) -> (usize, usize) {
        match t {
            Term::Var(v) => self.place_of(index[v]).key(),
            Term::Const(c) => {
                let j = self.consts.binary_search(c).expect("constant registered");
                Place::Const(j).key()
            }
        }
    }

    fn consistent(&self, i: usize, index: &BTreeMap<&Sym, usize>) -> bool {
        self.checks[i].iter().all(|c| {
            let (l, r) = (self.term_key(&c.left, index), self.term_key(&c.right, index));
            match c.op {
                CmpOp::Eq => l == r,
                CmpOp::Lt => l < r,
                CmpOp::Le => l <= r,
            }
        })
    }

    fn realize(&self) -> Valuation {
        let mut out = Valuation::new();
        for (g, blocks) in self.gaps.iter().enumerate() {
            if blocks.is_empty() {
                continue;
            }
            let lo = if g == 0 { None } else { self.consts.get(g - 1) };
            let hi = self.consts.get(g);
            let vals = values_between(lo, hi, blocks.len());
            for (b, members) in blocks.iter().enumerate() {
                for &i in members {
                    out.insert(self.vars[i].clone(), vals[b].clone());
                }
            }
        }
        for (i, c) in self.at_const.iter().enumerate() {
            if let Some(j) = c {
                out.insert(self.vars[i].clone(), self.consts[*j].clone());
            }
        }
        out
    }

    fn run(
        &mut self,
        i: usize,
        index: &BTreeMap<&Sym, usize>,
        f: &mut dyn FnMut(Valuation) -> bool,
    ) -> Result<bool> {
        if i == self.vars.len() {
            self.count += 1;
            if self.count > self.cap {
                return Err(Error::CapExceeded { cap: self.cap, what: "representative valuations" });
            }
            return Ok(f(self.realize()));
        }
        for j in 0..self.consts.len() {
            self.at_const[i] = Some(j);
            if self.consistent(i, index) && !self.run(i + 1, index, f)? {
                self.at_const[i] = None;
                return Ok(false);
            }
        }
        self.at_const[i] = None;
        for g in 0..self.gaps.len() {
            for b in 0..self.gaps[g].len() {
                self.gaps[g][b].push(i);
                let go = self.consistent(i, index) && !self.run(i + 1, index, f)?;
                self.gaps[g][b].pop();
                if go {
                    return Ok(false);
                }
            }
            for b in 0..=self.gaps[g].len() {
                self.gaps[g].insert(b, vec![i]);
                let go = self.consistent(i, index) && !self.run(i + 1, index, f)?;
                self.gaps[g].remove(b);
                if go {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Enumerate one valuation per linear preorder of `vars` relative to
/// `consts` (and the constants of `m`) that satisfies `m`. The callback
/// returns `false` to stop early. Fails once more than `cap` valuations
/// have been produced.
pub fn for_each_representative(
    vars: &[Sym],
    consts: &BTreeSet<Value>,
    m: &[Comparison],
    cap: usize,
    f: &mut dyn FnMut(Valuation) -> bool,
) -> Result<()> {
    let mut all: BTreeSet<Value> = consts.iter().filter(|v| !v.is_null()).cloned().collect();
    for c in m {
        for t in c.terms() {
            if let Term::Const(v) = t {
                all.insert(v.clone());
            }
        }
    }
    let consts: Vec<Value> = all.into_iter().collect();
    let index: BTreeMap<&Sym, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut checks = vec![Vec::new(); vars.len().max(1)];
    let mut ground = Vec::new();
    for c in m {
        let last = c.terms().iter().filter_map(|t| t.as_var()).map(|v| index.get(v).copied()).max();
        match last {
            None => ground.push(c),
            Some(None) => return Err(Error::Invalid(format!("comparison {c} mentions an unknown variable"))),
            Some(Some(i)) => checks[i].push(c),
        }
    }
    for c in ground {
        let (Term::Const(l), Term::Const(r)) = (&c.left, &c.right) else { unreachable!() };
        if !c.holds(l, r) {
            return Ok(());
        }
    }
    let mut e = Enumerator {
        vars,
        gaps: vec![Vec::new(); consts.len() + 1],
        consts,
        checks,
        at_const: vec![None; vars.len()],
        cap,
        count: 0,
    };
    e.run(0, &index, f)?;
    Ok(())
}

pub fn representative_valuations(
    vars: &[Sym],
    consts: &BTreeSet<Value>,
    m: &[Comparison],
) -> Result<Vec<Valuation>> {
    let mut out = Vec::new();
    for_each_representative(vars, consts, m, DEFAULT_CAP, &mut |v| {
        out.push(v);
        true
    })?;
    Ok(out)
}

/// Is the conjunction of comparisons satisfiable over the dense domain?
pub fn comparisons_satisfiable(m: &[Comparison]) -> Result<bool> {
    let vars: Vec<Sym> = Condition::new(Vec::new(), m.to_vec()).vars();
    let mut found = false;
    for_each_representative(&vars, &BTreeSet::new(), m, DEFAULT_CAP, &mut |_| {
        found = true;
        false
    })?;
    Ok(found)
}

pub fn satisfiable(q: &Query) -> Result<bool> {
    comparisons_satisfiable(&q.body.comparisons)
}

/// Substitute away equality comparisons. `None` when they are contradictory.
pub fn eliminate_equalities(q: &Query) -> Option<Query> {
    eliminate_equalities_with_map(q).map(|(q, _)| q)
}

/// As [`eliminate_equalities`], also returning the substitution applied.
pub fn eliminate_equalities_with_map(q: &Query) -> Option<(Query, BTreeMap<Sym, Term>)> {
    fn resolve(t: &Term, s: &BTreeMap<Sym, Term>) -> Term {
        let mut t = t.clone();
        while let Term::Var(v) = &t {
            match s.get(v) {
                Some(n) => t = n.clone(),
                None => break,
            }
        }
        t
    }
    let mut subst: BTreeMap<Sym, Term> = BTreeMap::new();
    for c in q.body.comparisons.iter().filter(|c| c.op == CmpOp::Eq) {
        let (a, b) = (resolve(&c.left, &subst), resolve(&c.right, &subst));
        if a == b {
            continue;
        }
        match (&a, &b) {
            (Term::Const(_), Term::Const(_)) => return None,
            (Term::Var(v), _) => {
                subst.insert(v.clone(), b.clone());
            }
            (_, Term::Var(v)) => {
                subst.insert(v.clone(), a.clone());
            }
        }
    }
    let full: BTreeMap<Sym, Term> = subst.keys().map(|k| (k.clone(), resolve(&Term::Var(k.clone()), &subst))).collect();
    let st = |t: &Term| substitute_term(t, &full);
    let mut comparisons = Vec::new();
    for c in q.body.comparisons.iter().filter(|c| c.op != CmpOp::Eq) {
        let (l, r) = (st(&c.left), st(&c.right));
        match (&l, &r) {
            (Term::Const(a), Term::Const(b)) => {
                if !c.op.eval(a, b) {
                    return None;
                }
            }
            _ if l == r => {
                if c.op == CmpOp::Lt {
                    return None;
                }
            }
            _ => {
                let k = Comparison::new(l, c.op, r);
                if !comparisons.contains(&k) {
                    comparisons.push(k);
                }
            }
        }
    }
    let out = Query {
        name: q.name.clone(),
        head: q.head.iter().map(st).collect(),
        body: Condition::new(q.body.atoms.iter().map(|a| substitute_atom(a, &full)).collect(), comparisons),
    };
    Some((out, full))
}

fn check_arity(q1: &Query, union: &[Query]) -> Result<()> {
    for q in union {
        if q.arity() != q1.arity() {
            return Err(Error::Invalid(format!(
                "arity mismatch: {} has arity {}, {} has arity {}",
                q1.name,
                q1.arity(),
                q.name,
                q.arity()
            )));
        }
    }
    Ok(())
}

/// All constants mentioned by the queries.
pub fn constants_of(qs: &[&Query]) -> BTreeSet<Value> {
    qs.iter().flat_map(|q| q.constants()).filter(|v| !v.is_null()).collect()
}

/// Test databases of the containee: the frozen body when the containee and
/// all queries in `others` are free of order comparisons, and one
/// instantiated body per representative valuation otherwise. The callback
/// receives the valuation, the database and the head tuple, and returns
/// `false` to stop.
pub fn for_each_test_database(
    q1: &Query,
    others: &[&Query],
    extra_consts: &BTreeSet<Value>,
    cap: usize,
    f: &mut dyn FnMut(&Valuation, &Instance, &[Value]) -> bool,
) -> Result<()> {
    let Some((q, subst)) = eliminate_equalities_with_map(q1) else {
        return Ok(());
    };
    let simple: Vec<Query> = others.iter().filter_map(|o| eliminate_equalities(o)).collect();
    if q.is_relational() && simple.iter().all(|o| o.is_relational()) {
        let (db, m) = freeze(&q.body);
        let head = ground_terms(&q.head, &m).expect("safe head");
        let mut full = m.clone();
        for (v, t) in &subst {
            let val = ground_terms(std::slice::from_ref(t), &m).expect("substituted variable is frozen");
            full.insert(v.clone(), val[0].clone());
        }
        f(&full, &db, &head);
        return Ok(());
    }
    let mut all: Vec<&Query> = vec![q1];
    all.extend(others.iter().copied());
    let mut consts = constants_of(&all);
    consts.extend(extra_consts.iter().cloned());
    let vars = q1.body.vars();
    let mut inner_err = None;
    for_each_representative(&vars, &consts, &q1.body.comparisons, cap, &mut |theta| {
        let Some(db) = ground_condition(&q1.body, &theta) else {
            inner_err = Some(Error::Invalid("unsafe containee".into()));
            return false;
        };
        let head = ground_terms(&q1.head, &theta).expect("safe head");
        f(&theta, &db, &head)
    })?;
    inner_err.map_or(Ok(()), Err)
}

/// Decide `q1 ⊆ q_1 ∪ … ∪ q_n` under set semantics.
pub fn contained(q1: &Query, union: &[Query]) -> Result<Verdict> {
    contained_with_cap(q1, union, DEFAULT_CAP)
}

pub fn contained_with_cap(q1: &Query, union: &[Query], cap: usize) -> Result<Verdict> {
    check_arity(q1, union)?;
    if !satisfiable(q1)? {
        return Ok(Verdict::yes(Witness::Certificate(Vec::new())).with_note("containee is unsatisfiable"));
    }
    let others: Vec<&Query> = union.iter().collect();
    let mut cert = Vec::new();
    let mut failure = None;
    let mut truncated = false;
    for_each_test_database(q1, &others, &BTreeSet::new(), cap, &mut |_, db, head| {
        let index = Db::new(db);
        let hit = union
            .iter()
            .enumerate()
            .find_map(|(i, c)| find_answer(c, &index, head, NullMode::Identity).map(|m| (i, m)));
        match hit {
            Some((container, mapping)) => {
                if cert.len() < CERT_LIMIT {
                    cert.push(CertEntry { test_db: db.clone(), head: head.to_vec(), container, mapping });
                } else {
                    truncated = true;
                }
                true
            }
            None => {
                failure = Some(Witness::TestDatabase { db: db.clone(), head: head.to_vec() });
                false
            }
        }
    })?;
    Ok(match failure {
        Some(w) => Verdict::no(w),
        None if truncated => Verdict::yes(Witness::Certificate(cert)).with_note("certificate truncated"),
        None => Verdict::yes(Witness::Certificate(cert)),
    })
}

/// Set-equivalence of two queries.
pub fn equivalent(a: &Query, b: &Query) -> Result<bool> {
    Ok(contained(a, std::slice::from_ref(b))?.holds && contained(b, std::slice::from_ref(a))?.holds)
}

/// Remove redundant relational atoms, first removable atom first.
/// Equalities are substituted away beforehand, so a variable bound only
/// through `x = y` does not block the removal of an atom.
pub fn minimize(q: &Query) -> Result<Query> {
    let unsat = || Error::Invalid(format!("query {} is unsatisfiable", q.name));
    if !satisfiable(q)? {
        return Err(unsat());
    }
    let mut cur = eliminate_equalities(q).ok_or_else(unsat)?;
    'outer: loop {
        for i in 0..cur.body.atoms.len() {
            let mut cand = cur.clone();
            cand.body.atoms.remove(i);
            if cand.safety_violation().is_some() {
                continue;
            }
            if contained(&cand, std::slice::from_ref(&cur))?.holds {
                cur = cand;
                continue 'outer;
            }
        }
        return Ok(cur);
    }
}

pub fn is_minimal(q: &Query) -> Result<bool> {
    Ok(minimize(q)?.body.atoms.len() == q.body.atoms.len())
}

/// A propositional formula in conjunctive normal form. Variables are
/// numbered from 1; the first `universals` of them are universally
/// quantified in the forall-exists reduction. Literals are `±var`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cnf {
    pub vars: usize,
    pub universals: usize,
    pub clauses: Vec<Vec<i32>>,
}

impl Cnf {
    pub fn validate(&self) -> Result<()> {
        if self.universals > self.vars {
            return Err(Error::Invalid("more universals than variables".into()));
        }
        for c in &self.clauses {
            if c.is_empty() || c.len() > 3 {
                return Err(Error::Invalid("clauses need one to three literals".into()));
            }
            if c.iter().any(|&l| l == 0 || l.unsigned_abs() as usize > self.vars) {
                return Err(Error::Invalid("literal out of range".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdversarialKind {
    /// containment holds iff the formula is unsatisfiable
    Unsat,
    /// containment holds iff the formula is satisfiable
    Sat,
    /// containment holds iff for all universals there are existentials
    /// satisfying the formula
    ForallExists,
}

fn v(name: String) -> Term {
    Term::Var(sym(&name))
}

fn c(i: i64) -> Term {
    Term::Const(Value::int(i))
}

fn clause_facts(i: usize, clause: &[i32]) -> Vec<Atom> {
    let n = clause.len();
    (0..1u32 << n)
        .filter(|bits| (0..n).any(|j| ((bits >> j) & 1 == 1) == (clause[j] > 0)))
        .map(|bits| Atom::new(&format!("C{}", i + 1), (0..n).map(|j| c(((bits >> j) & 1) as i64)).collect()))
        .collect()
}

/// Build the containee and the union of containers for a reduction.
pub fn adversarial(kind: AdversarialKind, f: &Cnf) -> Result<(Query, Vec<Query>)> {
    f.validate()?;
    match kind {
        AdversarialKind::Unsat => {
            let p = |l: i32| v(format!("p{}", l.unsigned_abs()));
            let atoms = f
                .clauses
                .iter()
                .enumerate()
                .map(|(i, cl)| Atom::new(&format!("C{}", i + 1), cl.iter().map(|&l| p(l)).collect()))
                .collect();
            let q = Query::new("Q", vec![], Condition::relational(atoms));
            let union = f
                .clauses
                .iter()
                .enumerate()
                .map(|(i, cl)| {
                    let xs: Vec<Term> = (0..cl.len()).map(|j| v(format!("x{}", j + 1))).collect();
                    // the clause is false: positive literals negative, negative ones nonnegative
                    let cmps = cl
                        .iter()
                        .zip(&xs)
                        .map(|(&l, x)| {
                            if l > 0 {
                                Comparison::new(x.clone(), CmpOp::Lt, c(0))
                            } else {
                                Comparison::new(c(0), CmpOp::Le, x.clone())
                            }
                        })
                        .collect();
                    let atom = Atom::new(&format!("C{}", i + 1), xs);
                    Query::new(&format!("P{}", i + 1), vec![], Condition::new(vec![atom], cmps))
                })
                .collect();
            Ok((q, union))
        }
        AdversarialKind::Sat | AdversarialKind::ForallExists => {
            let m = if kind == AdversarialKind::Sat { 0 } else { f.universals };
            let name = |l: i32| {
                let k = l.unsigned_abs() as usize;
                if k <= m {
                    v(format!("x{k}"))
                } else {
                    v(format!("e{k}"))
                }
            };
            let mut facts = Vec::new();
            let mut pattern = Vec::new();
            let mut cmps = Vec::new();
            for j in 1..=m {
                let w = v(format!("w{j}"));
                let (r, s) = (format!("R{j}"), format!("S{j}"));
                facts.push(Atom::new(&r, vec![c(0), w.clone()]));
                facts.push(Atom::new(&r, vec![w.clone(), c(1)]));
                facts.push(Atom::new(&s, vec![w.clone(), c(0)]));
                facts.push(Atom::new(&s, vec![c(1), c(1)]));
                let (u, vv) = (v(format!("u{j}")), v(format!("v{j}")));
                pattern.push(Atom::new(&r, vec![u.clone(), vv.clone()]));
                pattern.push(Atom::new(&s, vec![vv.clone(), v(format!("x{j}"))]));
                cmps.push(Comparison::new(u, CmpOp::Le, c(0)));
                cmps.push(Comparison::new(c(0), CmpOp::Lt, vv));
            }
            for (i, cl) in f.clauses.iter().enumerate() {
                facts.extend(clause_facts(i, cl));
                pattern.push(Atom::new(&format!("C{}", i + 1), cl.iter().map(|&l| name(l)).collect()));
            }
            let q = Query::new("Q", vec![], Condition::relational(facts));
            let p = Query::new("P", vec![], Condition::new(pattern, cmps));
            Ok((q, vec![p]))
        }
    }
}
