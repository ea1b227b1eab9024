//! Quality-aware transition systems.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::containment::{for_each_test_database, DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::eval::{eval_set, find_answer, ground_atom, Db, NullMode};
use crate::model::{
    rename_condition, Atom, CmpOp, Comparison, Condition, Development, Fact, IncompleteDatabase, Instance,
    Query, Term, Verdict, Witness,
};
use crate::value::{sym, Sym};

/// A real-world effect `R(x̄,ȳ) <~ G` or a copy effect `R(x̄,ȳ), G -> R(x̄,ȳ)`.
/// Both share the same shape; the action they belong to says which one it is.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Effect {
    pub head: Atom,
    pub guard: Condition,
}

impl Effect {
    pub fn new(head: Atom, guard: Condition) -> Effect {
        Effect { head, guard }
    }

    /// `P(x̄,ȳ) :- R(x̄,ȳ), G`.
    pub fn query(&self) -> Query {
        let mut body = self.guard.clone();
        body.atoms.insert(0, self.head.clone());
        Query { name: self.head.rel.clone(), head: self.head.args.clone(), body }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Action {
    pub name: Sym,
    pub real_world: Vec<Effect>,
    pub copies: Vec<Effect>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Qats {
    pub states: Vec<Sym>,
    pub init: Sym,
    pub actions: Vec<Action>,
    /// (source, action, target)
    pub edges: Vec<(Sym, Sym, Sym)>,
}

impl Qats {
    pub fn action(&self, name: &str) -> Option<&Action> {
        self.actions.iter().find(|a| &*a.name == name)
    }

    fn action_index(&self, name: &str) -> Result<usize> {
        self.actions
            .iter()
            .position(|a| &*a.name == name)
            .ok_or_else(|| Error::Unknown { kind: "action", name: name.into() })
    }

    fn state_index(&self, name: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| &**s == name)
            .ok_or_else(|| Error::Unknown { kind: "state", name: name.into() })
    }

    /// Edges as (source, action, target) indices.
    fn indexed_edges(&self) -> Vec<(usize, usize, usize)> {
        self.edges
            .iter()
            .map(|(s, a, t)| {
                (
                    self.state_index(s).expect("checked edge"),
                    self.action_index(a).expect("checked edge"),
                    self.state_index(t).expect("checked edge"),
                )
            })
            .collect()
    }

    /// States reachable from the initial state.
    pub fn reachable(&self) -> BTreeSet<Sym> {
        let edges = self.indexed_edges();
        let mut seen = BTreeSet::from([self.state_index(&self.init).expect("initial state")]);
        let mut todo: Vec<usize> = seen.iter().copied().collect();
        while let Some(s) = todo.pop() {
            for &(a, _, b) in &edges {
                if a == s && seen.insert(b) {
                    todo.push(b);
                }
            }
        }
        seen.into_iter().map(|i| self.states[i].clone()).collect()
    }
}

/// `copy_CE(d)`: the facts the copy effects transfer from `d`.
pub fn copy(effects: &[Effect], d: &Instance) -> Instance {
    let mut out = Instance::new();
    for e in effects {
        for args in eval_set(&e.query(), d) {
            out.insert(Fact { rel: e.head.rel.clone(), args });
        }
    }
    out
}

/// Does every fact of `d2` missing from `d1` have a satisfied guard in `d1`?
pub fn conforms(d1: &Instance, d2: &Instance, effects: &[Effect]) -> bool {
    let db = Db::new(d1);
    d2.difference(d1).iter().all(|f| {
        effects.iter().any(|e| {
            e.head.rel == f.rel
                && e.head.args.len() == f.args.len()
                && find_answer(&Query::new(&e.head.rel, e.head.args.clone(), e.guard.clone()), &db, &f.args, NullMode::Identity)
                    .is_some()
        })
    })
}

/// The available databases of a development of `actions`.
pub fn trace(actions: &[&Action], ideal: &[Instance]) -> Vec<Instance> {
    assert_eq!(ideal.len(), actions.len() + 1, "one ideal database per step");
    let mut out = vec![ideal[0].clone()];
    for (j, a) in actions.iter().enumerate() {
        let next = out[j].union(&copy(&a.copies, &ideal[j + 1]));
        out.push(next);
    }
    out
}

/// Is `ideal` a development of `actions`? Developments only add facts.
pub fn is_development(actions: &[&Action], ideal: &[Instance]) -> bool {
    ideal.len() == actions.len() + 1
        && actions.iter().enumerate().all(|(j, a)| {
            ideal[j].is_subset(&ideal[j + 1]) && conforms(&ideal[j], &ideal[j + 1], &a.real_world)
        })
}

/// A pair `(D1, D2)` where the effect adds `new` and a new valuation of the
/// query appears.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Addition {
    before: Instance,
    new: Fact,
}

impl Addition {
    fn after(&self) -> Instance {
        let mut d = self.before.clone();
        d.insert(self.new.clone());
        d
    }
}

fn prefixed(p: &str) -> impl Fn(&Sym) -> Sym + '_ {
    move |v: &Sym| sym(&format!("{p}{v}"))
}

/// Search the disjuncts of `P_r ∩ Q^R` for an addition that none of the
/// copies transfers. With no copies this is the riskiness test.
fn unrepaired_addition(r: &Effect, copies: &[&Effect], q: &Query) -> Result<Option<Addition>> {
    let rel = &r.head.rel;
    let k = r.head.args.len();
    let guard = rename_condition(&r.guard, &prefixed("r/"));
    let r_head: Vec<Term> = r.head.args.iter().map(|t| match t {
        Term::Var(v) => Term::Var(sym(&format!("r/{v}"))),
        c => c.clone(),
    }).collect();
    let body = rename_condition(&q.body, &prefixed("q/"));
    let containers: Vec<Query> = copies
        .iter()
        .filter(|c| &c.head.rel == rel && c.head.args.len() == k)
        .enumerate()
        .map(|(j, c)| c.query().rename(&prefixed(&format!("c{j}/"))))
        .collect();
    let others: Vec<&Query> = containers.iter().collect();
    for atom in &body.atoms {
        if &atom.rel != rel || atom.args.len() != k {
            continue;
        }
        let mut comparisons = guard.comparisons.clone();
        comparisons.extend(body.comparisons.iter().cloned());
        comparisons.extend(r_head.iter().zip(&atom.args).map(|(a, b)| Comparison::new(a.clone(), CmpOp::Eq, b.clone())));
        let mut atoms = guard.atoms.clone();
        atoms.extend(body.atoms.iter().cloned());
        let containee = Query::new(rel, r_head.clone(), Condition::new(atoms, comparisons));
        let mut found = None;
        let mut bad = None;
        for_each_test_database(&containee, &others, &BTreeSet::new(), DEFAULT_CAP, &mut |theta, db, head| {
            let new = Fact { rel: rel.clone(), args: head.to_vec() };
            let mut before = Instance::new();
            for a in &guard.atoms {
                match ground_atom(a, theta) {
                    Some(f) => {
                        before.insert(f);
                    }
                    None => {
                        bad = Some(Error::Invalid(format!("unsafe variable in the guard of {}", r.head)));
                        return false;
                    }
                }
            }
            // The effect must actually add the fact.
            if before.contains(&new) {
                return true;
            }
            // Other query atoms may map onto the new fact too.
            for a in &body.atoms {
                let f = ground_atom(a, theta).expect("query atoms are ground under a test database");
                if f != new {
                    before.insert(f);
                }
            }
            let index = Db::new(db);
            if containers.iter().any(|c| find_answer(c, &index, head, NullMode::Identity).is_some()) {
                return true;
            }
            found = Some(Addition { before, new });
            false
        })?;
        if let Some(e) = bad {
            return Err(e);
        }
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

/// Can `r` add a fact that changes the answer of `q`? The witness is a
/// one-step development `(D1, D2)` without copies.
pub fn risky(r: &Effect, q: &Query) -> Result<Verdict> {
    Ok(match unrepaired_addition(r, &[], q)? {
        Some(add) => {
            let after = add.after();
            Verdict::yes(Witness::Development(Development {
                actions: Vec::new(),
                ideal: vec![add.before.clone(), after],
                available: vec![add.before.clone(), add.before],
                failing_action: 0,
            }))
        }
        None => Verdict::no(Witness::None),
    })
}

/// Is every answer-changing fact that `r` may add transferred by one of
/// the copy effects?
pub fn repaired(r: &Effect, copies: &[Effect], q: &Query) -> Result<Verdict> {
    let copies: Vec<&Effect> = copies.iter().collect();
    Ok(match unrepaired_addition(r, &copies, q)? {
        Some(add) => {
            let after = add.after();
            let available = add.before.union(&copy(&copies.iter().map(|c| (*c).clone()).collect::<Vec<_>>(), &after));
            Verdict::no(Witness::Counterexample(IncompleteDatabase::new(after, available)))
        }
        None => Verdict::yes(Witness::None),
    })
}

/// The first action whose risky effect is not repaired by its own copies
/// or those of later actions, with the unrepaired addition.
fn first_failure(qats: &Qats, alpha: &[usize], q: &Query) -> Result<Option<(usize, Addition)>> {
    for (pos, &a) in alpha.iter().enumerate() {
        let copies: Vec<&Effect> = alpha[pos..].iter().flat_map(|&b| qats.actions[b].copies.iter()).collect();
        for r in &qats.actions[a].real_world {
            if let Some(add) = unrepaired_addition(r, &copies, q)? {
                return Ok(Some((pos, add)));
            }
        }
    }
    Ok(None)
}

fn development_for(qats: &Qats, alpha: &[usize], pos: usize, add: &Addition) -> Development {
    let after = add.after();
    let ideal: Vec<Instance> =
        (0..=alpha.len()).map(|j| if j <= pos { add.before.clone() } else { after.clone() }).collect();
    let actions: Vec<&Action> = alpha.iter().map(|&a| &qats.actions[a]).collect();
    let available = trace(&actions, &ideal);
    Development {
        actions: alpha.iter().map(|&a| qats.actions[a].name.clone()).collect(),
        ideal,
        available,
        failing_action: pos,
    }
}

fn resolve(qats: &Qats, alpha: &[Sym]) -> Result<Vec<usize>> {
    alpha.iter().map(|a| qats.action_index(a)).collect()
}

/// Does every development of `alpha` leave `q` complete (bag semantics)?
pub fn sequence_complete(alpha: &[Sym], q: &Query, qats: &Qats) -> Result<Verdict> {
    let idx = resolve(qats, alpha)?;
    Ok(match first_failure(qats, &idx, q)? {
        Some((pos, add)) => Verdict::no(Witness::Development(development_for(qats, &idx, pos, &add)))
            .with_note(format!("a risky effect of {} is not repaired", alpha[pos])),
        None => Verdict::yes(Witness::None),
    })
}

/// Drop all but the last occurrence of each action.
pub fn normalize(alpha: &[Sym]) -> Vec<Sym> {
    let mut out: Vec<Sym> = Vec::new();
    for (i, a) in alpha.iter().enumerate() {
        if !alpha[i + 1..].contains(a) {
            out.push(a.clone());
        }
    }
    out
}

/// Is `alpha` the normal sequence of some path from the initial state to
/// `target`? Segment i of such a path is a word over `{a_i..a_n}` ending
/// in `a_i`.
pub fn realizable(qats: &Qats, alpha: &[Sym], target: &str) -> Result<bool> {
    let idx = resolve(qats, alpha)?;
    let target = qats.state_index(target)?;
    let edges = qats.indexed_edges();
    let mut current = BTreeSet::from([qats.state_index(&qats.init)?]);
    for (i, &a) in idx.iter().enumerate() {
        let allowed: BTreeSet<usize> = idx[i..].iter().copied().collect();
        let closed = closure(&current, &edges, &allowed, false);
        current = edges.iter().filter(|(s, b, _)| *b == a && closed.contains(s)).map(|e| e.2).collect();
        if current.is_empty() {
            return Ok(false);
        }
    }
    Ok(current.contains(&target))
}

/// States reachable from `from` (or, backwards, reaching `from`) along
/// edges labelled with `allowed` actions.
fn closure(
    from: &BTreeSet<usize>,
    edges: &[(usize, usize, usize)],
    allowed: &BTreeSet<usize>,
    backwards: bool,
) -> BTreeSet<usize> {
    let mut seen = from.clone();
    let mut todo: Vec<usize> = from.iter().copied().collect();
    while let Some(s) = todo.pop() {
        for &(a, b, t) in edges {
            if !allowed.contains(&b) {
                continue;
            }
            let (x, y) = if backwards { (t, a) } else { (a, t) };
            if x == s && seen.insert(y) {
                todo.push(y);
            }
        }
    }
    seen
}

pub const DEFAULT_ACTION_CAP: usize = 9;

/// Does every path from the initial state to `state` leave `q` complete?
pub fn design_time_verify(qats: &Qats, state: &str, q: &Query) -> Result<Verdict> {
    design_time_verify_with_cap(qats, state, q, DEFAULT_ACTION_CAP)
}

pub fn design_time_verify_with_cap(qats: &Qats, state: &str, q: &Query, cap: usize) -> Result<Verdict> {
    let target = qats.state_index(state)?;
    if qats.actions.len() > cap.min(31) {
        return Err(Error::CapExceeded { cap, what: "actions" });
    }
    if !qats.reachable().iter().any(|s| &**s == state) {
        return Ok(Verdict::yes(Witness::None).with_note(format!("warning: state {state} is unreachable")));
    }
    let mut search = Search {
        qats,
        q,
        edges: qats.indexed_edges(),
        init: qats.state_index(&qats.init)?,
        ok: HashMap::new(),
        visited: HashSet::new(),
        sequences: 0,
    };
    let found = search.dfs(&mut Vec::new(), 0, &BTreeSet::from([target]), false)?;
    Ok(match found {
        Some(rev) => {
            let alpha: Vec<usize> = rev.into_iter().rev().collect();
            let (pos, add) = first_failure(qats, &alpha, q)?.expect("failing sequence");
            let dev = development_for(qats, &alpha, pos, &add);
            Verdict::no(Witness::Sequence {
                actions: dev.actions.clone(),
                inner: Box::new(Witness::Development(dev)),
            })
        }
        None => Verdict::yes(Witness::None)
            .with_note(format!("{} realizable normal sequences checked", search.sequences)),
    })
}

/// Backward search over normal sequences. A suffix `a_i..a_n` is kept
/// with the set of states from which its segments lead to the target.
struct Search<'a> {
    qats: &'a Qats,
    q: &'a Query,
    edges: Vec<(usize, usize, usize)>,
    init: usize,
    /// Are the risky effects of an action repaired by the copies of a set
    /// of actions?
    ok: HashMap<(usize, u32), bool>,
    visited: HashSet<(u32, BTreeSet<usize>, bool)>,
    sequences: usize,
}

impl Search<'_> {
    fn repaired_by(&mut self, a: usize, set: u32) -> Result<bool> {
        if let Some(&v) = self.ok.get(&(a, set)) {
            return Ok(v);
        }
        let copies: Vec<&Effect> = (0..self.qats.actions.len())
            .filter(|b| set & (1 << b) != 0)
            .flat_map(|b| self.qats.actions[b].copies.iter())
            .collect();
        let mut v = true;
        for r in &self.qats.actions[a].real_world {
            if unrepaired_addition(r, &copies, self.q)?.is_some() {
                v = false;
                break;
            }
        }
        self.ok.insert((a, set), v);
        Ok(v)
    }

    /// `suffix` holds the actions from the back. Returns a failing
    /// realizable sequence, reversed.
    fn dfs(&mut self, suffix: &mut Vec<usize>, set: u32, back: &BTreeSet<usize>, failing: bool) -> Result<Option<Vec<usize>>> {
        if back.contains(&self.init) {
            self.sequences += 1;
            if failing {
                return Ok(Some(suffix.clone()));
            }
        }
        if !self.visited.insert((set, back.clone(), failing)) {
            return Ok(None);
        }
        for a in 0..self.qats.actions.len() {
            if set & (1 << a) != 0 {
                continue;
            }
            let set2 = set | (1 << a);
            let allowed: BTreeSet<usize> = (0..self.qats.actions.len()).filter(|b| set2 & (1 << b) != 0).collect();
            let before: BTreeSet<usize> =
                self.edges.iter().filter(|(_, b, t)| *b == a && back.contains(t)).map(|e| e.0).collect();
            if before.is_empty() {
                continue;
            }
            let back2 = closure(&before, &self.edges, &allowed, true);
            let failing2 = failing || !self.repaired_by(a, set2)?;
            suffix.push(a);
            if let Some(found) = self.dfs(suffix, set2, &back2, failing2)? {
                return Ok(Some(found));
            }
            suffix.pop();
        }
        Ok(None)
    }
}

/// Completeness after a concrete path, given as its action labels.
pub fn runtime_verify(qats: &Qats, path: &[Sym], q: &Query) -> Result<Verdict> {
    let idx = resolve(qats, path)?;
    let edges = qats.indexed_edges();
    let mut current = BTreeSet::from([qats.state_index(&qats.init)?]);
    for (&a, name) in idx.iter().zip(path) {
        current = edges.iter().filter(|(s, b, _)| *b == a && current.contains(s)).map(|e| e.2).collect();
        if current.is_empty() {
            return Err(Error::Invalid(format!("no path from {} takes action {name} at that point", qats.init)));
        }
    }
    sequence_complete(path, q, qats)
}

/// Runtime verification against a known start database is not supported:
/// repairing is sufficient there but not necessary.
pub fn runtime_verify_with_database(_qats: &Qats, _path: &[Sym], _q: &Query, _d: &Instance) -> Result<Verdict> {
    Err(Error::Refused(
        "runtime verification with a concrete database is not supported; drop the database to check all developments".into(),
    ))
}

/// Encode `q0 ⊆ ∪ union` as a two-action system: `a1` adds `q0`'s answers
/// to a fresh relation, `a2` copies those also produced by the union.
/// Returns the system and the query over the fresh relation.
pub fn containment_to_qats(q0: &Query, union: &[Query]) -> Result<(Qats, Query)> {
    let k = q0.arity();
    if let Some(u) = union.iter().find(|u| u.arity() != k) {
        return Err(Error::Arity { rel: u.name.to_string(), expected: k, found: u.arity() });
    }
    let mut used: BTreeSet<Sym> = q0.body.relations();
    for u in union {
        used.extend(u.body.relations());
    }
    let mut rel = String::from("Goal");
    while used.contains(rel.as_str()) {
        rel.push('_');
    }
    let head_vars: Vec<Term> = (0..k).map(|i| Term::var(&format!("h{i}"))).collect();
    let head = Atom::new(&rel, head_vars.clone());
    let guard_of = |q: &Query, p: &str| {
        let r = q.rename(&prefixed(p));
        let mut g = r.body.clone();
        g.comparisons.extend(head_vars.iter().zip(&r.head).map(|(h, t)| Comparison::new(h.clone(), CmpOp::Eq, t.clone())));
        g
    };
    let a1 = Action {
        name: sym("a1"),
        real_world: vec![Effect::new(head.clone(), guard_of(q0, "q/"))],
        copies: Vec::new(),
    };
    let a2 = Action {
        name: sym("a2"),
        real_world: Vec::new(),
        copies: union.iter().enumerate().map(|(i, u)| Effect::new(head.clone(), guard_of(u, &format!("u{i}/")))).collect(),
    };
    let qats = Qats {
        states: vec![sym("s0"), sym("s1"), sym("s2")],
        init: sym("s0"),
        actions: vec![a1, a2],
        edges: vec![(sym("s0"), sym("a1"), sym("s1")), (sym("s1"), sym("a2"), sym("s2"))],
    };
    let goal = Query::new("Q", head_vars.clone(), Condition::relational(vec![head]));
    Ok((qats, goal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::containment::contained;
    use crate::eval::satisfies_qc;
    use crate::model::Semantics;
    use crate::parse::{parse_query, parse_workspace, Workspace};

    fn school() -> Workspace {
        parse_workspace(include_str!("../fixtures/school.cmpl")).unwrap()
    }

    fn q(s: &str) -> Query {
        parse_query(s).unwrap()
    }

    fn seq(s: &[&str]) -> Vec<Sym> {
        s.iter().map(|a| sym(a)).collect()
    }

    fn check_development(qats: &Qats, dev: &Development, goal: &Query) {
        let actions: Vec<&Action> = dev.actions.iter().map(|a| qats.action(a).unwrap()).collect();
        assert!(is_development(&actions, &dev.ideal));
        assert_eq!(trace(&actions, &dev.ideal), dev.available);
        let idb = IncompleteDatabase::new(dev.ideal.last().unwrap().clone(), dev.available.last().unwrap().clone());
        assert!(!satisfies_qc(&idb, goal, Semantics::Bag));
    }

    #[test]
    fn risky_effects() {
        let r = Effect::new(Atom::new("pupil", vec![Term::var("n"), Term::var("c"), Term::var("s")]), Condition::new(
            vec![],
            vec![Comparison::new(Term::var("c"), CmpOp::Eq, Term::Const(crate::value::Value::int(4)))],
        ));
        let v = risky(&r, &q(r#"Q(n) :- pupil(n,c,s), livesIn(n,"Bolzano")"#)).unwrap();
        assert!(v.holds);
        let Witness::Development(d) = &v.witness else { panic!() };
        assert_eq!(d.ideal[1].len(), d.ideal[0].len() + 1);
        assert!(!risky(&r, &q("Q(n) :- person(n,g)")).unwrap().holds);
        assert!(!risky(&r, &q("Q(n) :- pupil(n,c,s), c < 4")).unwrap().holds);
        // An effect whose guard already holds the fact adds nothing.
        let idle = Effect::new(Atom::new("R", vec![Term::var("x")]), Condition::relational(vec![Atom::new("R", vec![Term::var("x")])]));
        assert!(!risky(&idle, &q("Q(x) :- R(x)")).unwrap().holds);
    }

    #[test]
    fn repairs() {
        let ws = school();
        let qats = ws.qats.as_ref().unwrap();
        let ph = &qats.action("pH").unwrap().real_world[0];
        let rh = &qats.action("rH").unwrap().copies;
        let qh = ws.query("QHofer").unwrap();
        assert!(repaired(ph, rh, qh).unwrap().holds);
        assert!(!repaired(ph, &[], qh).unwrap().holds);
        let r = Effect::new(Atom::new("R", vec![Term::var("x"), Term::var("c")]), Condition::default());
        let narrow = Effect::new(
            Atom::new("R", vec![Term::var("x"), Term::var("c")]),
            Condition::new(vec![], vec![Comparison::new(Term::Const(crate::value::Value::int(3)), CmpOp::Lt, Term::var("c"))]),
        );
        let v = repaired(&r, &[narrow], &q("Q(x,c) :- R(x,c)")).unwrap();
        assert!(!v.holds);
    }

    #[test]
    fn sequences() {
        let ws = school();
        let qats = ws.qats.as_ref().unwrap();
        let qh = ws.query("QHofer").unwrap();
        assert!(sequence_complete(&seq(&["pH", "rH"]), qh, qats).unwrap().holds);
        let v = sequence_complete(&seq(&["rH", "pH"]), qh, qats).unwrap();
        assert!(!v.holds);
        let Witness::Development(d) = &v.witness else { panic!() };
        assert_eq!(d.failing_action, 1);
        check_development(qats, d, qh);
        assert!(sequence_complete(&[], qh, qats).unwrap().holds);
        assert!(sequence_complete(&[sym("nope")], qh, qats).is_err());
    }

    #[test]
    fn normal_sequences() {
        assert_eq!(normalize(&seq(&["a", "b", "a"])), seq(&["b", "a"]));
        assert_eq!(normalize(&seq(&["a", "a", "a"])), seq(&["a"]));
        assert_eq!(normalize(&seq(&["a", "b"])), seq(&["a", "b"]));
    }

    #[test]
    fn realizability() {
        let ws = school();
        let qats = ws.qats.as_ref().unwrap();
        assert!(realizable(qats, &seq(&["pH", "rH"]), "s2").unwrap());
        assert!(!realizable(qats, &seq(&["rH", "pH"]), "s2").unwrap());
        assert!(realizable(qats, &[], "s0").unwrap());
        assert!(realizable(qats, &seq(&["pH", "tD", "rD", "rH"]), "sink").unwrap());
        assert!(!realizable(qats, &seq(&["pH", "tD", "pD", "rD", "rH"]), "sink").unwrap());
    }

    #[test]
    fn design_time() {
        let ws = school();
        let qats = ws.qats.as_ref().unwrap();
        let qh = ws.query("QHofer").unwrap();
        let qd = ws.query("QDaVinci").unwrap();
        let both = ws.query("QBoth").unwrap();
        assert!(design_time_verify(qats, "sink", both).unwrap().holds);
        for s in ["s0", "s2", "d1", "h2d1", "d2", "sink"] {
            assert!(design_time_verify(qats, s, qh).unwrap().holds, "{s}");
        }
        for s in ["s0", "s1", "s2", "d2", "h1d2", "sink"] {
            assert!(design_time_verify(qats, s, qd).unwrap().holds, "{s}");
        }
        let v = design_time_verify(qats, "s1", qh).unwrap();
        assert!(!v.holds);
        let Witness::Sequence { actions, inner } = &v.witness else { panic!() };
        assert_eq!(actions, &seq(&["pH"]));
        let Witness::Development(d) = inner.as_ref() else { panic!() };
        check_development(qats, d, qh);
        assert!(!design_time_verify(qats, "h1d1", qd).unwrap().holds);
        assert!(!design_time_verify(qats, "h1d2", both).unwrap().holds);
    }

    #[test]
    fn runtime() {
        let ws = school();
        let qats = ws.qats.as_ref().unwrap();
        let qh = ws.query("QHofer").unwrap();
        assert!(runtime_verify(qats, &seq(&["pH", "rH"]), qh).unwrap().holds);
        assert!(!runtime_verify(qats, &seq(&["pD", "pH"]), qh).unwrap().holds);
        assert!(runtime_verify(qats, &seq(&["rH"]), qh).is_err());
        let d = Instance::new();
        assert!(matches!(runtime_verify_with_database(qats, &[], qh, &d), Err(Error::Refused(_))));
    }

    #[test]
    fn reduction() {
        for (a, b, expect) in [
            ("Q(x) :- R(x,y), R(y,x)", "Q(x) :- R(x,y)", true),
            ("Q(x) :- R(x,y)", "Q(x) :- R(x,y), R(y,x)", false),
            ("Q(x) :- R(x), x < 3", "Q(x) :- R(x), x < 5", true),
            ("Q() :- R(x)", "Q() :- S(x)", false),
        ] {
            let (qats, goal) = containment_to_qats(&q(a), &[q(b)]).unwrap();
            let direct = contained(&q(a), &[q(b)]).unwrap().holds;
            assert_eq!(direct, expect);
            let v = sequence_complete(&seq(&["a1", "a2"]), &goal, &qats).unwrap();
            assert_eq!(v.holds, expect, "{a} / {b}");
            if let Witness::Development(d) = &v.witness {
                check_development(&qats, d, &goal);
            }
        }
    }
}
