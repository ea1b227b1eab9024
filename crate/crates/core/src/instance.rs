//! Completeness reasoning relative to a concrete available database.
//!
//! Ideal databases are explored as `d ∪ θ(body)` for representative
//! valuations θ of the query body over the constants at hand. A single
//! instantiation of the body suffices: statements and premise queries are
//! monotone in the ideal database, so a smaller extension violates no more
//! than a larger one.

use std::collections::{BTreeMap, BTreeSet};

use crate::containment::{for_each_representative, Valuation, DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::eval::{eval_set, ground_condition, ground_terms, satisfies_all};
use crate::model::{
    substitute_condition, substitute_term, IncompleteDatabase, Instance, Query, TcStatement, Term,
    Tuple, Verdict, Witness,
};
use crate::value::{Sym, Value};

fn require_null_free(d: &Instance) -> Result<()> {
    if d.has_nulls() {
        return Err(Error::Invalid(
            "instance reasoning expects a null-free database; use the null-aware checks".into(),
        ));
    }
    Ok(())
}

/// Walk the extensions `d ∪ θ(body)` whose head tuple is new. `f` gets the
/// extension and returns `true` to keep going.
fn for_each_extension(
    d: &Instance,
    q: &Query,
    extra: &BTreeSet<Value>,
    f: &mut dyn FnMut(&Valuation, Instance) -> bool,
) -> Result<()> {
    let known = eval_set(q, d);
    let mut consts = d.constants();
    consts.extend(q.constants());
    consts.extend(extra.iter().cloned());
    let vars = q.body.vars();
    for_each_representative(&vars, &consts, &q.body.comparisons, DEFAULT_CAP, &mut |theta| {
        let head = ground_terms(&q.head, &theta).expect("safe query");
        if known.contains(&head) {
            return true;
        }
        let body = ground_condition(&q.body, &theta).expect("safe query");
        f(&theta, d.union(&body))
    })
}

fn statement_constants(cs: &[TcStatement]) -> BTreeSet<Value> {
    cs.iter().flat_map(|c| c.query().constants()).collect()
}

/// Does `d` together with the statements guarantee that `q` is complete?
pub fn tc_qc_instance(d: &Instance, cs: &[TcStatement], q: &Query) -> Result<Verdict> {
    require_null_free(d)?;
    let mut failure = None;
    for_each_extension(d, q, &statement_constants(cs), &mut |_, ideal| {
        let idb = IncompleteDatabase::new(ideal, d.clone());
        if satisfies_all(&idb, cs) {
            failure = Some(idb);
            false
        } else {
            true
        }
    })?;
    Ok(match failure {
        Some(idb) => Verdict::no(Witness::Counterexample(idb)),
        None => Verdict::yes(Witness::None),
    })
}

/// Does completeness of the premise queries over `d` entail completeness
/// of `q` (set semantics)?
pub fn qc_qc_instance(d: &Instance, premises: &[Query], q: &Query) -> Result<Verdict> {
    require_null_free(d)?;
    let before: Vec<BTreeSet<Tuple>> = premises.iter().map(|p| eval_set(p, d)).collect();
    let extra: BTreeSet<Value> = premises.iter().flat_map(|p| p.constants()).collect();
    let mut failure = None;
    for_each_extension(d, q, &extra, &mut |_, ideal| {
        if premises.iter().zip(&before).all(|(p, b)| eval_set(p, &ideal) == *b) {
            failure = Some(IncompleteDatabase::new(ideal, d.clone()));
            false
        } else {
            true
        }
    })?;
    Ok(match failure {
        Some(idb) => Verdict::no(Witness::Counterexample(idb)),
        None => Verdict::yes(Witness::None),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueStatus {
    Complete,
    PossiblyIncomplete,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimensionReport {
    pub dims: Vec<Sym>,
    pub per_value: BTreeMap<Tuple, ValueStatus>,
    pub new_values_possible: bool,
    /// A dimension value absent from `d` that may still appear.
    pub new_value_example: Option<Tuple>,
}

/// `q` with the dimension variables replaced by `vals`.
pub fn instantiate(q: &Query, dims: &[Sym], vals: &[Value]) -> Query {
    let map: BTreeMap<Sym, Term> =
        dims.iter().cloned().zip(vals.iter().map(|v| Term::Const(v.clone()))).collect();
    Query {
        name: q.name.clone(),
        head: q.head.iter().map(|t| substitute_term(t, &map)).collect(),
        body: substitute_condition(&q.body, &map),
    }
}

/// Which values of the dimension `dims` already have complete answers in
/// `d`, and whether values not yet in `d` may still show up.
pub fn dimension_analysis(
    d: &Instance,
    cs: &[TcStatement],
    q: &Query,
    dims: &[Sym],
) -> Result<DimensionReport> {
    require_null_free(d)?;
    let head = q.head_vars();
    if let Some(v) = dims.iter().find(|v| !head.contains(*v)) {
        return Err(Error::Invalid(format!("dimension variable {v} is not distinguished in {}", q.name)));
    }
    if dims.is_empty() {
        return Err(Error::Invalid("empty dimension".into()));
    }
    let projection = Query::new(&q.name, dims.iter().map(|v| Term::Var(v.clone())).collect(), q.body.clone());
    let present = eval_set(&projection, d);
    let mut per_value = BTreeMap::new();
    for vals in &present {
        let v = tc_qc_instance(d, cs, &instantiate(q, dims, vals))?;
        let status = if v.holds { ValueStatus::Complete } else { ValueStatus::PossiblyIncomplete };
        per_value.insert(vals.clone(), status);
    }
    // New values: one representative per placement of the dimension
    // variables among the constants of d, q and the statements.
    let mut consts = d.constants();
    consts.extend(q.constants());
    consts.extend(statement_constants(cs));
    let dim_comparisons: Vec<_> = q
        .body
        .comparisons
        .iter()
        .filter(|c| c.terms().iter().filter_map(|t| t.as_var()).all(|v| dims.contains(v)))
        .cloned()
        .collect();
    let mut example = None;
    let mut inner = Ok(());
    for_each_representative(dims, &consts, &dim_comparisons, DEFAULT_CAP, &mut |theta| {
        let vals: Tuple = dims.iter().map(|v| theta[v].clone()).collect();
        if present.contains(&vals) {
            return true;
        }
        match tc_qc_instance(d, cs, &instantiate(q, dims, &vals)) {
            Ok(v) if !v.holds => {
                example = Some(vals);
                false
            }
            Ok(_) => true,
            Err(e) => {
                inner = Err(e);
                false
            }
        }
    })?;
    inner?;
    Ok(DimensionReport {
        dims: dims.to_vec(),
        per_value,
        new_values_possible: example.is_some(),
        new_value_example: example,
    })
}
