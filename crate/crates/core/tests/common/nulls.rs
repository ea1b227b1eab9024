//! Regime generators and brute-force searches over small incomplete
//! databases with nulls.

use std::collections::BTreeSet;

use compl_core::eval::satisfies_all;
use compl_core::nulls::satisfies_qc_nulls;
use compl_core::parse::parse_statement;
use compl_core::{Fact, IncompleteDatabase, Instance, NullKind, Query, Regime, Semantics, TcStatement, Tuple, Value, Verdict, Witness};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use super::*;

pub const SHAPE: Shape = Shape { max_atoms: 2, vars: &["x", "y"], const_prob: 0.0, max_comparisons: 0 };

pub fn rand_proj_statement(r: &mut StdRng, name: &str, keep_key: bool) -> TcStatement {
    let (rel, arity) = *SCHEMA.choose(r).unwrap();
    let head = ["x", "y"][..arity].join(",");
    let mut proj: Vec<usize> = (1..=arity).filter(|&p| (keep_key && p == 1) || r.gen_bool(0.6)).collect();
    if proj.is_empty() {
        proj.push(r.gen_range(1..=arity));
    }
    let proj_text = if proj.len() == arity {
        String::new()
    } else {
        format!("[{}]", proj.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(","))
    };
    let pool = ["x", "y", "z"];
    let cond = if r.gen_bool(0.5) {
        let (crel, carity) = *SCHEMA.choose(r).unwrap();
        let args: Vec<&str> = (0..carity).map(|_| *pool[..arity + 1].choose(r).unwrap()).collect();
        format!(" ; {crel}({})", args.join(","))
    } else {
        String::new()
    };
    let text = format!("{name} : {rel}{proj_text}({head}){cond}");
    parse_statement(&text).unwrap_or_else(|e| panic!("generated {text}: {e}"))
}

pub fn case(seed: u64, keep_key: bool) -> (Vec<TcStatement>, Query) {
    let mut r = rng(seed);
    let n = r.gen_range(0..=3);
    let cs = (0..n).map(|i| rand_proj_statement(&mut r, &format!("C{i}"), keep_key)).collect();
    let arity = r.gen_range(0..=2);
    (cs, rand_query(&mut r, "Q", arity, SHAPE))
}

pub fn ab() -> Vec<Value> {
    vec![Value::str("a"), Value::str("b")]
}

/// Choose one option per slot and hand the union to `f`.
pub fn for_each_choice(slots: &[Vec<Vec<Fact>>], f: &mut dyn FnMut(&Instance) -> bool) {
    fn go(i: usize, slots: &[Vec<Vec<Fact>>], cur: &mut Vec<Fact>, f: &mut dyn FnMut(&Instance) -> bool) -> bool {
        if i == slots.len() {
            return f(&cur.iter().cloned().collect());
        }
        for opt in &slots[i] {
            let n = cur.len();
            cur.extend(opt.iter().cloned());
            let go_on = go(i + 1, slots, cur, f);
            cur.truncate(n);
            if !go_on {
                return false;
            }
        }
        true
    }
    go(0, slots, &mut Vec::new(), f);
}

/// `f` with the positions in `mask` replaced by fresh nulls of `kind`.
pub fn nulled(f: &Fact, mask: usize, kind: NullKind, id_base: u32) -> Fact {
    let args = f
        .args
        .iter()
        .enumerate()
        .map(|(p, v)| if mask >> p & 1 == 1 { Value::null(kind, id_base + p as u32) } else { v.clone() })
        .collect();
    Fact { rel: f.rel.clone(), args }
}

/// Give every null occurrence its own token.
pub fn fresh_nulls(d: &Instance) -> Instance {
    let mut next = 0;
    d.iter()
        .map(|f| Fact {
            rel: f.rel.clone(),
            args: f
                .args
                .iter()
                .map(|v| match v.null_kind() {
                    Some(k) => {
                        next += 1;
                        Value::null(k, next)
                    }
                    None => v.clone(),
                })
                .collect(),
        })
        .collect()
}

/// Search one regime's incomplete databases for a violation.
/// Feeds candidate ideal databases to a visitor until it returns false.
pub type Ideals<'a> = &'a mut dyn FnMut(&mut dyn FnMut(&Instance) -> bool);

#[allow(clippy::too_many_arguments)]
pub fn search(
    cs: &[TcStatement],
    q: &Query,
    regime: Regime,
    sem: Semantics,
    ideals: Ideals,
    availables: &dyn Fn(&Instance) -> Vec<Vec<Vec<Fact>>>,
    on_satisfying: &mut dyn FnMut(&IncompleteDatabase),
    exhaustive: bool,
) -> Option<IncompleteDatabase> {
    let mut found = None;
    ideals(&mut |ideal| {
        let ideal = &fresh_nulls(ideal);
        for_each_choice(&availables(ideal), &mut |avail| {
            let idb = IncompleteDatabase::new(ideal.clone(), avail.clone()).with_regime(regime);
            if !satisfies_all(&idb, cs) {
                return true;
            }
            on_satisfying(&idb);
            if satisfies_qc_nulls(&idb, q, sem) {
                return true;
            }
            found = Some(idb);
            exhaustive
        });
        exhaustive || found.is_none()
    });
    found
}

/// Incomplete facts: null-free ideal databases over {a,b}; every ideal fact
/// is available in up to two versions, each with some positions nulled.
pub fn inc_search(
    cs: &[TcStatement],
    q: &Query,
    on_satisfying: &mut dyn FnMut(&IncompleteDatabase),
    exhaustive: bool,
) -> Option<IncompleteDatabase> {
    let facts = all_facts(&SCHEMA, &ab());
    let availables = |ideal: &Instance| -> Vec<Vec<Vec<Fact>>> {
        ideal
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let base = 100 * i as u32;
                let versions: Vec<Fact> =
                    (0..1usize << f.args.len()).map(|m| nulled(f, m, NullKind::Plain, base + 10 * m as u32)).collect();
                let mut opts = vec![vec![]];
                for a in 0..versions.len() {
                    opts.push(vec![versions[a].clone()]);
                    for b in a + 1..versions.len() {
                        opts.push(vec![versions[a].clone(), versions[b].clone()]);
                    }
                }
                opts
            })
            .collect()
    };
    search(
        cs,
        q,
        Regime::IncompleteFacts,
        Semantics::Set,
        &mut |f| for_each_subset(&facts, 3, f),
        &availables,
        on_satisfying,
        exhaustive,
    )
}

/// Restricted facts: ideal databases with up to four facts over {a,b} and
/// one not-applicable null; the available database is any subset.
pub fn res_search(cs: &[TcStatement], q: &Query) -> Option<IncompleteDatabase> {
    let mut domain = ab();
    domain.push(Value::null(NullKind::NotApplicable, 1));
    let facts = all_facts(&SCHEMA, &domain);
    let availables =
        |ideal: &Instance| -> Vec<Vec<Vec<Fact>>> { ideal.iter().map(|f| vec![vec![], vec![f.clone()]]).collect() };
    search(
        cs,
        q,
        Regime::RestrictedFacts,
        Semantics::Set,
        &mut |f| for_each_subset(&facts, 4, f),
        &availables,
        &mut |_| {},
        false,
    )
}

/// Bag semantics under keys R/1 and S/1: key-satisfying ideal databases
/// over {a,b} with not-applicable nulls at non-key positions; each ideal
/// fact is absent, available in full, or available with its non-key
/// positions unknown.
pub fn bag_keys_search(cs: &[TcStatement], q: &Query) -> Option<IncompleteDatabase> {
    let mut ideals_r: Vec<Vec<Fact>> = vec![vec![]];
    for k in ab() {
        let mut next = Vec::new();
        for base in &ideals_r {
            next.push(base.clone());
            for v in [Value::str("a"), Value::str("b"), Value::null(NullKind::NotApplicable, 1)] {
                let mut b = base.clone();
                b.push(Fact::new("R", vec![k.clone(), v]));
                next.push(b);
            }
        }
        ideals_r = next;
    }
    let s_facts: Vec<Fact> = ab().into_iter().map(|v| Fact::new("S", vec![v])).collect();
    let availables = |ideal: &Instance| -> Vec<Vec<Vec<Fact>>> {
        ideal
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let mut opts = vec![vec![], vec![f.clone()]];
                if f.args.len() > 1 {
                    opts.push(vec![nulled(f, 0b10, NullKind::Ambiguous, 100 + 10 * i as u32)]);
                }
                opts
            })
            .collect()
    };
    search(
        cs,
        q,
        Regime::PartialFacts,
        Semantics::Bag,
        &mut |f| {
            for r in &ideals_r {
                let mut go_on = true;
                for_each_subset(&s_facts, 2, &mut |s| {
                    let ideal: Instance = r.iter().cloned().chain(s.iter().cloned()).collect();
                    go_on = f(&ideal);
                    go_on
                });
                if !go_on {
                    return;
                }
            }
        },
        &availables,
        &mut |_| {},
        false,
    )
}

pub fn revalidate(v: &Verdict, cs: &[TcStatement], q: &Query, sem: Semantics) {
    if v.holds {
        return;
    }
    let Witness::Counterexample(idb) = &v.witness else { panic!("no counterexample for {q}") };
    assert!(satisfies_all(idb, cs), "{q} under {cs:?}: {idb:?}");
    assert!(!satisfies_qc_nulls(idb, q, sem), "{q} under {cs:?}: {idb:?}");
}

pub fn without_nulls(ts: BTreeSet<Tuple>) -> BTreeSet<Tuple> {
    ts.into_iter().filter(|t| t.iter().all(|v| !v.is_null())).collect()
}
