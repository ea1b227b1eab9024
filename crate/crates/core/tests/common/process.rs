//! Random transition systems and a brute-force search over small
//! developments.

use std::collections::BTreeSet;

use compl_core::eval::satisfies_qc;
use compl_core::parse::parse_workspace;
use compl_core::process::{is_development, trace, Action, Effect, Qats};
use compl_core::{Development, Fact, IncompleteDatabase, Instance, Query, Semantics, Sym, Value};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use super::*;

pub fn rand_arg(r: &mut StdRng, v: &str) -> String {
    if r.gen_bool(0.15) {
        r.gen_range(0..2).to_string()
    } else {
        v.to_string()
    }
}

/// `R(x,y)` or `S(x)`, followed by an optional guard.
pub fn rand_effect(r: &mut StdRng, comparisons: bool) -> (String, String) {
    let head = if r.gen_bool(0.6) {
        format!("R({},{})", rand_arg(r, "x"), rand_arg(r, "y"))
    } else {
        format!("S({})", rand_arg(r, "x"))
    };
    let mut guard = Vec::new();
    if r.gen_bool(0.6) {
        let pool = ["x", "y", "z"];
        guard.push(if r.gen_bool(0.5) {
            format!("R({},{})", pool.choose(r).unwrap(), pool.choose(r).unwrap())
        } else {
            format!("S({})", pool.choose(r).unwrap())
        });
    }
    // Comparison variables must be bound by a guard atom.
    if comparisons && guard.iter().any(|g| g.contains('x')) && r.gen_bool(0.4) {
        guard.push(format!("x {} 1", ["<", "<="].choose(r).unwrap()));
    }
    (head, guard.join(", "))
}

/// A system with up to four actions of at most two effects each.
pub fn rand_qats(r: &mut StdRng, comparisons: bool) -> Qats {
    let nstates = r.gen_range(2..=4);
    let nactions = r.gen_range(1..=4);
    let mut text = String::new();
    for s in 0..nstates {
        text += &format!("state s{s}{}.\n", if s == 0 { " init" } else { "" });
    }
    for a in 0..nactions {
        text += &format!("action a{a}.\n");
        for _ in 0..r.gen_range(0..=2) {
            let (head, guard) = rand_effect(r, comparisons);
            if r.gen_bool(0.5) {
                let guard = if guard.is_empty() { "S(w)".to_string() } else { guard };
                text += &format!("action a{a} rw {head} <~ {guard}.\n");
            } else if guard.is_empty() {
                text += &format!("action a{a} copy {head} -> {head}.\n");
            } else {
                text += &format!("action a{a} copy {head}, {guard} -> {head}.\n");
            }
        }
    }
    for _ in 0..r.gen_range(2..=7) {
        let s = r.gen_range(0..nstates);
        let t = r.gen_range(0..nstates);
        let a = r.gen_range(0..nactions);
        text += &format!("edge s{s} a{a} s{t}.\n");
    }
    parse_workspace(&text).unwrap_or_else(|e| panic!("{text}: {e}")).qats.unwrap()
}

pub fn case(seed: u64) -> (Qats, Query) {
    let mut r = rng(seed);
    let qats = rand_qats(&mut r, seed % 3 == 2);
    let arity = r.gen_range(0..=2);
    let q = rand_query(&mut r, "Q", arity, CONTAINMENT);
    (qats, q)
}

pub fn rand_sequence(r: &mut StdRng, qats: &Qats, max: usize) -> Vec<Sym> {
    let n = r.gen_range(1..=max);
    (0..n).map(|_| qats.actions.choose(r).unwrap().name.clone()).collect()
}

pub fn actions<'a>(qats: &'a Qats, alpha: &[Sym]) -> Vec<&'a Action> {
    alpha.iter().map(|a| qats.action(a).unwrap()).collect()
}

pub fn check_development(qats: &Qats, dev: &Development, q: &Query) {
    let acts = actions(qats, &dev.actions);
    assert!(is_development(&acts, &dev.ideal), "{dev:?}");
    assert_eq!(trace(&acts, &dev.ideal), dev.available);
    let idb = IncompleteDatabase::new(dev.ideal.last().unwrap().clone(), dev.available.last().unwrap().clone());
    assert!(!satisfies_qc(&idb, q, Semantics::Bag), "{dev:?}");
}

/// Can some effect add `f` to `d`? Head variables missing from the guard
/// range over the domain.
pub fn naive_adds(effects: &[Effect], d: &Instance, f: &Fact, domain: &[Value]) -> bool {
    effects.iter().any(|e| {
        if e.head.rel != f.rel {
            return false;
        }
        let rule = Query::new(&e.head.rel, e.head.args.clone(), e.guard.clone());
        let mut vars: BTreeSet<Sym> = e.guard.vars().into_iter().collect();
        vars.extend(e.head.vars().cloned());
        let vars: Vec<Sym> = vars.into_iter().collect();
        let mut found = false;
        for_each_assignment(&vars, domain, &mut |m| {
            if let Some((body, head)) = ground(&rule, m) {
                found = head == f.args && body.is_subset(d);
            }
            !found
        });
        found
    })
}

pub fn naive_copy(effects: &[Effect], d: &Instance) -> Instance {
    let mut out = Instance::new();
    for e in effects {
        for args in naive_set(&e.query(), d) {
            out.insert(Fact { rel: e.head.rel.clone(), args });
        }
    }
    out
}

/// Searches developments of `alpha` over {0,1} that start with at most two
/// facts and add at most one fact per step. Returns a development that
/// leaves `q` incomplete, if any.
pub fn violating_development(qats: &Qats, alpha: &[Sym], q: &Query) -> Option<Vec<Instance>> {
    let domain = [Value::int(0), Value::int(1)];
    let facts = all_facts(&SCHEMA, &domain);
    let acts = actions(qats, alpha);
    fn step(
        j: usize,
        ideal: &mut Vec<Instance>,
        avail: &Instance,
        acts: &[&Action],
        facts: &[Fact],
        domain: &[Value],
        q: &Query,
    ) -> bool {
        if j == acts.len() {
            return naive_bag(q, ideal.last().unwrap()) != naive_bag(q, avail);
        }
        let cur = ideal[j].clone();
        let mut options = vec![cur.clone()];
        for f in facts {
            if !cur.contains(f) && naive_adds(&acts[j].real_world, &cur, f, domain) {
                let mut next = cur.clone();
                next.insert(f.clone());
                options.push(next);
            }
        }
        for next in options {
            let avail2 = avail.union(&naive_copy(&acts[j].copies, &next));
            ideal.push(next);
            if step(j + 1, ideal, &avail2, acts, facts, domain, q) {
                return true;
            }
            ideal.pop();
        }
        false
    }
    let mut found = None;
    for_each_subset(&facts, 2, &mut |d0| {
        let mut ideal = vec![d0.clone()];
        if step(0, &mut ideal, d0, &acts, &facts, &domain, q) {
            found = Some(ideal);
        }
        found.is_none()
    });
    found
}

