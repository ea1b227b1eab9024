//! Completeness of count, sum, max and min queries.

use std::collections::BTreeSet;
use std::fmt;

use crate::completeness::{t_c, tc_qc_bag};
use crate::containment::{
    comparisons_satisfiable, contained, eliminate_equalities, for_each_representative, satisfiable,
    DEFAULT_CAP,
};
use crate::error::{Error, Result};
use crate::eval::{for_each_valuation_db, ground_condition, ground_terms, head_binding, Db, NullMode};
use crate::model::{
    CmpOp, Comparison, IncompleteDatabase, Instance, Query, TcStatement, Term, Verdict, Witness,
};
use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggFn {
    Count,
    Sum,
    Max,
    Min,
}

impl AggFn {
    pub fn parse(s: &str) -> Option<AggFn> {
        match s {
            "count" => Some(AggFn::Count),
            "sum" => Some(AggFn::Sum),
            "max" => Some(AggFn::Max),
            "min" => Some(AggFn::Min),
            _ => None,
        }
    }
}

impl fmt::Display for AggFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggFn::Count => "count",
            AggFn::Sum => "sum",
            AggFn::Max => "max",
            AggFn::Min => "min",
        })
    }
}

/// `Q^α(x̄, α(y))` over the core `Q(x̄, y)`. For count the core head is `x̄`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggregateQuery {
    pub core: Query,
    pub func: AggFn,
}

impl AggregateQuery {
    pub fn new(core: Query, func: AggFn) -> Result<AggregateQuery> {
        if func != AggFn::Count && core.head.is_empty() {
            return Err(Error::Invalid(format!("{func} needs an aggregated head term")));
        }
        Ok(AggregateQuery { core, func })
    }
}

pub fn tc_qc_count(cs: &[TcStatement], qa: &AggregateQuery) -> Result<Verdict> {
    tc_qc_bag(cs, &qa.core)
}

/// Merge terms that the comparisons force to be equal.
pub fn reduce(q: &Query) -> Result<Query> {
    let mut cur = eliminate_equalities(q).ok_or_else(|| Error::Invalid(format!("query {} is unsatisfiable", q.name)))?;
    loop {
        let m = &cur.body.comparisons;
        let mut terms: Vec<Term> = Vec::new();
        for c in m {
            for t in c.terms() {
                if !terms.contains(t) {
                    terms.push(t.clone());
                }
            }
        }
        let mut forced = None;
        'search: for (i, s) in terms.iter().enumerate() {
            for t in &terms[i + 1..] {
                if s.as_var().is_none() && t.as_var().is_none() {
                    continue;
                }
                let lt = |a: &Term, b: &Term| {
                    let mut m2 = m.clone();
                    m2.push(Comparison::new(a.clone(), CmpOp::Lt, b.clone()));
                    comparisons_satisfiable(&m2)
                };
                if !lt(s, t)? && !lt(t, s)? {
                    forced = Some(Comparison::new(s.clone(), CmpOp::Eq, t.clone()));
                    break 'search;
                }
            }
        }
        match forced {
            None => return Ok(cur),
            Some(eq) => {
                cur.body.comparisons.push(eq);
                cur = eliminate_equalities(&cur).expect("forced equality is consistent");
            }
        }
    }
}

fn is_relational(c: &TcStatement) -> bool {
    eliminate_equalities(&c.query()).is_some_and(|q| q.is_relational())
}

/// Sum queries. Entailment of the canonical statements always suffices.
/// It is also necessary when the core is reduced, the summed term is
/// nonnegative and the statements are relational; outside these bounds a
/// failed check is refused rather than reported as incomplete.
pub fn tc_qc_sum(cs: &[TcStatement], qa: &AggregateQuery) -> Result<Verdict> {
    if qa.func != AggFn::Sum {
        return Err(Error::Invalid("not a sum query".into()));
    }
    if !satisfiable(&qa.core)? {
        return Ok(Verdict::yes(Witness::None).with_note("query is unsatisfiable"));
    }
    let core = reduce(&qa.core)?;
    let v = tc_qc_bag(cs, &core)?;
    if v.holds {
        return Ok(v);
    }
    if let Some(c) = cs.iter().find(|c| !is_relational(c)) {
        return Err(Error::Refused(format!("statement {} has order comparisons", c.name)));
    }
    let y = core.head.last().cloned().expect("sum has an aggregated term");
    let nonneg = match &y {
        Term::Const(Value::Num(r)) => *r >= num_rational::BigRational::from_integer(0.into()),
        Term::Const(_) => false,
        Term::Var(_) => {
            let mut m = core.body.comparisons.clone();
            m.push(Comparison::new(y.clone(), CmpOp::Lt, Term::Const(Value::int(0))));
            !comparisons_satisfiable(&m)?
        }
    };
    if !nonneg {
        return Err(Error::Refused(format!("the summed term {y} may be negative")));
    }
    Ok(v.with_note(format!("reduced core: {core}")))
}

/// Is there a valuation of `q` over `db` with head `(xs, y')` and `y'`
/// related to `y` as `better` requires?
fn has_dominating(
    q: &Query,
    db: &Db,
    xs: &[Value],
    y: &Value,
    better: &dyn Fn(&Value, &Value) -> bool,
) -> bool {
    let (ylast, xhead) = q.head.split_last().expect("nonempty head");
    let Some(pre) = head_binding(xhead, xs) else {
        return false;
    };
    let mut found = false;
    for_each_valuation_db(&q.body, db, NullMode::Identity, &pre, &mut |m| {
        if let Some(v) = ground_terms(std::slice::from_ref(ylast), m) {
            if better(&v[0], y) {
                found = true;
                return false;
            }
        }
        true
    });
    found
}

fn ge(a: &Value, b: &Value) -> bool {
    a.cmp_domain(b).is_some_and(|o| o.is_ge())
}

fn le(a: &Value, b: &Value) -> bool {
    a.cmp_domain(b).is_some_and(|o| o.is_le())
}

/// Dominance checked on the instantiated containee body of every
/// representative valuation.
pub fn dominated_by_valuations(q1: &Query, q2: &Query) -> Result<Verdict> {
    check_shape(q1, q2)?;
    let consts: BTreeSet<Value> = q1.constants().into_iter().chain(q2.constants()).collect();
    let mut failure = None;
    for_each_representative(&q1.body.vars(), &consts, &q1.body.comparisons, DEFAULT_CAP, &mut |theta| {
        let db = ground_condition(&q1.body, &theta).expect("safe query");
        let head = ground_terms(&q1.head, &theta).expect("safe query");
        let (y, xs) = head.split_last().unwrap();
        if has_dominating(q2, &Db::new(&db), xs, y, &ge) {
            true
        } else {
            failure = Some(Witness::TestDatabase { db, head });
            false
        }
    })?;
    Ok(match failure {
        Some(w) => Verdict::no(w),
        None => Verdict::yes(Witness::None),
    })
}

fn check_shape(q1: &Query, q2: &Query) -> Result<()> {
    if q1.arity() != q2.arity() || q1.arity() == 0 {
        return Err(Error::Invalid(format!(
            "dominance needs heads (x̄, y) of equal length; got {} and {}",
            q1.arity(),
            q2.arity()
        )));
    }
    Ok(())
}

/// Is `q1` dominated by `q2`? For relational queries this is containment.
pub fn dominated(q1: &Query, q2: &Query) -> Result<Verdict> {
    check_shape(q1, q2)?;
    let relational = |q: &Query| eliminate_equalities(q).is_some_and(|e| e.is_relational());
    if relational(q1) && relational(q2) {
        return contained(q1, std::slice::from_ref(q2));
    }
    dominated_by_valuations(q1, q2)
}

/// Max and min queries: the core must be dominated (for min, dominated in
/// the reversed order) by its unfolding through the statements.
pub fn tc_qc_max(cs: &[TcStatement], qa: &AggregateQuery) -> Result<Verdict> {
    let better: &dyn Fn(&Value, &Value) -> bool = match qa.func {
        AggFn::Max => &ge,
        AggFn::Min => &le,
        _ => return Err(Error::Invalid("not a max or min query".into())),
    };
    let q = &qa.core;
    if !satisfiable(q)? {
        return Ok(Verdict::yes(Witness::None).with_note("query is unsatisfiable"));
    }
    let mut consts = q.constants();
    for c in cs {
        consts.extend(c.query().constants());
    }
    let mut failure = None;
    for_each_representative(&q.body.vars(), &consts, &q.body.comparisons, DEFAULT_CAP, &mut |theta| {
        let l = ground_condition(&q.body, &theta).expect("safe query");
        let head = ground_terms(&q.head, &theta).expect("safe query");
        let (yv, xs) = head.split_last().unwrap();
        let avail: Instance = t_c(cs, &l);
        if has_dominating(q, &Db::new(&avail), xs, yv, better) {
            true
        } else {
            failure = Some(IncompleteDatabase::new(l, avail));
            false
        }
    })?;
    Ok(match failure {
        Some(idb) => Verdict::no(Witness::Counterexample(idb)),
        None => Verdict::yes(Witness::None),
    })
}

/// Dispatch on the aggregate function.
pub fn tc_qc_aggregate(cs: &[TcStatement], qa: &AggregateQuery) -> Result<Verdict> {
    match qa.func {
        AggFn::Count => tc_qc_count(cs, qa),
        AggFn::Sum => tc_qc_sum(cs, qa),
        AggFn::Max | AggFn::Min => tc_qc_max(cs, qa),
    }
}
