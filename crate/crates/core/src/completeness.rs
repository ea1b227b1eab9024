//! Table completeness and query completeness reasoning without nulls.

use std::collections::BTreeSet;

use crate::containment::{
    contained, eliminate_equalities, for_each_test_database, is_minimal, minimize, satisfiable,
    DEFAULT_CAP,
};
use crate::error::{Error, Result};
use crate::eval::{find_answer, for_each_valuation_db, ground_terms, Db, NullMode};
use crate::model::{
    Atom, Condition, Fact, IncompleteDatabase, Instance, Query, TcStatement, Term, Verdict, Witness,
};

/// One statement per body atom, conditioned on the rest of the body.
pub fn canonical_statements(q: &Query) -> Vec<TcStatement> {
    (0..q.body.atoms.len())
        .map(|i| {
            let mut rest = q.body.atoms.clone();
            let head = rest.remove(i);
            TcStatement::new(
                &format!("{}_{}", q.name, i + 1),
                head,
                Condition::new(rest, q.body.comparisons.clone()),
            )
        })
        .collect()
}

fn require_no_projection(cs: &[TcStatement]) -> Result<()> {
    match cs.iter().find(|c| !c.is_full_projection()) {
        Some(c) => Err(Error::Refused(format!(
            "statement {} projects out attributes; use the null-aware checks",
            c.name
        ))),
        None => Ok(()),
    }
}

/// The minimal available database satisfying `cs` over the ideal `d`.
pub fn t_c(cs: &[TcStatement], d: &Instance) -> Instance {
    let db = Db::new(d);
    let mut out = Instance::new();
    for c in cs {
        let q = c.query();
        for_each_valuation_db(&q.body, &db, NullMode::Identity, &Default::default(), &mut |m| {
            if let Some(args) = ground_terms(&q.head, m) {
                out.insert(Fact { rel: c.head.rel.clone(), args });
            }
            true
        });
    }
    out
}

/// Does the set of statements entail `goal`?
pub fn tc_tc(premises: &[TcStatement], goal: &TcStatement) -> Result<Verdict> {
    require_no_projection(premises)?;
    require_no_projection(std::slice::from_ref(goal))?;
    let union: Vec<Query> = premises.iter().filter(|c| c.head.rel == goal.head.rel).map(|c| c.query()).collect();
    let v = contained(&goal.query(), &union)?;
    Ok(match v.witness {
        Witness::TestDatabase { db, head } if !v.holds => {
            let missing = Fact { rel: goal.head.rel.clone(), args: head };
            let mut avail = db.clone();
            avail.facts.remove(&missing);
            Verdict::no(Witness::Counterexample(IncompleteDatabase::new(db, avail)))
        }
        _ => v,
    })
}

/// Bag-semantics query completeness: every canonical statement is entailed.
pub fn tc_qc_bag(premises: &[TcStatement], q: &Query) -> Result<Verdict> {
    require_no_projection(premises)?;
    if !satisfiable(q)? {
        return Ok(Verdict::yes(Witness::None).with_note("query is unsatisfiable"));
    }
    let mut certs = Vec::new();
    for c in canonical_statements(q) {
        let v = tc_tc(premises, &c)?;
        if !v.holds {
            return Ok(v.with_note(format!("canonical statement {} is not entailed", c)));
        }
        if let Witness::Certificate(entries) = v.witness {
            certs.extend(entries);
        }
    }
    Ok(Verdict::yes(Witness::Certificate(certs)))
}

/// Set-semantics query completeness, checked as `Q ⊆ Q∘T_C` on test
/// databases.
pub fn tc_qc_set(premises: &[TcStatement], q: &Query) -> Result<Verdict> {
    require_no_projection(premises)?;
    if !satisfiable(q)? {
        return Err(Error::Invalid(format!("query {} is unsatisfiable", q.name)));
    }
    let premise_queries: Vec<Query> = premises.iter().map(|c| c.query()).collect();
    let others: Vec<&Query> = premise_queries.iter().collect();
    let mut failure = None;
    let mut checked = 0usize;
    for_each_test_database(q, &others, &BTreeSet::new(), DEFAULT_CAP, &mut |_, l, head| {
        checked += 1;
        let avail = t_c(premises, l);
        if find_answer(q, &Db::new(&avail), head, NullMode::Identity).is_some() {
            true
        } else {
            failure = Some(IncompleteDatabase::new(l.clone(), avail));
            false
        }
    })?;
    Ok(match failure {
        Some(idb) => Verdict::no(Witness::Counterexample(idb)),
        None => Verdict::yes(Witness::None).with_note(format!("{checked} test databases checked")),
    })
}

/// The alternative path for set semantics: minimize, then check bag
/// completeness of the minimal query.
pub fn tc_qc_set_via_minimization(premises: &[TcStatement], q: &Query) -> Result<Verdict> {
    tc_qc_bag(premises, &minimize(q)?)
}

/// The canonical statements as the weakest precondition of a minimal
/// relational query.
pub fn weakest_precondition(q: &Query) -> Result<Vec<TcStatement>> {
    let relational = eliminate_equalities(q).is_some_and(|e| e.is_relational());
    if !relational {
        return Err(Error::Refused(format!(
            "query {} has order comparisons; no weakest precondition is known",
            q.name
        )));
    }
    if !is_minimal(q)? {
        return Err(Error::Refused(format!("query {} is not minimal", q.name)));
    }
    Ok(canonical_statements(q))
}

/// Bag completeness of the premise queries entails bag completeness of `q`.
pub fn qc_qc_bag(premises: &[Query], q: &Query) -> Result<Verdict> {
    let mut cs = Vec::new();
    for p in premises {
        if satisfiable(p)? {
            cs.extend(canonical_statements(p));
        }
    }
    tc_qc_bag(&cs, q)
}

/// One unconditional statement `All_R` per relation.
pub fn unconditional(rels: &[(&str, usize)]) -> Vec<TcStatement> {
    rels.iter()
        .map(|(r, k)| {
            let args = (0..*k).map(|i| Term::var(&format!("a{}", i + 1))).collect();
            TcStatement::new(&format!("All_{r}"), Atom::new(r, args), Condition::default())
        })
        .collect()
}
