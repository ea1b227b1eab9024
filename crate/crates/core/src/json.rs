//! JSON rendering of verdicts and reports. Facts and values use the input
//! syntax; frozen variables show up as `"#fN"` strings.

use serde_json::{json, Map, Value as Json};

use crate::error::Error;
use crate::instance::{DimensionReport, ValueStatus};
use crate::model::{Development, IncompleteDatabase, Instance, Regime, Verdict, Witness};
use crate::value::Value;

fn facts(d: &Instance) -> Json {
    Json::Array(d.iter().map(|f| Json::String(f.to_string())).collect())
}

fn values(t: &[Value]) -> Json {
    Json::Array(t.iter().map(|v| Json::String(v.to_string())).collect())
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::NoNulls => "none",
        Regime::IncompleteFacts => "inc",
        Regime::RestrictedFacts => "res",
        Regime::PartialFacts => "3null",
        Regime::AmbiguousNulls => "amb",
    }
}

fn idb_json(idb: &IncompleteDatabase) -> Json {
    json!({
        "ideal": facts(&idb.ideal),
        "available": facts(&idb.available),
        "regime": regime_name(idb.regime),
    })
}

fn development_json(d: &Development) -> Json {
    let steps: Vec<Json> = d
        .ideal
        .iter()
        .zip(&d.available)
        .map(|(i, a)| json!({ "ideal": facts(i), "available": facts(a) }))
        .collect();
    json!({
        "actions": d.actions.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
        "failing_action": d.actions.get(d.failing_action).map(|a| a.to_string()),
        "steps": steps,
    })
}

pub fn witness_json(w: &Witness) -> Json {
    match w {
        Witness::None => Json::Null,
        Witness::Certificate(entries) => {
            let list: Vec<Json> = entries
                .iter()
                .map(|e| {
                    let mapping: Map<String, Json> =
                        e.mapping.iter().map(|(k, v)| (k.to_string(), Json::String(v.to_string()))).collect();
                    json!({
                        "test_database": facts(&e.test_db),
                        "head": values(&e.head),
                        "container": e.container,
                        "mapping": mapping,
                    })
                })
                .collect();
            json!({ "certificate": list })
        }
        Witness::TestDatabase { db, head } => json!({ "test_database": facts(db), "head": values(head) }),
        Witness::Counterexample(idb) => idb_json(idb),
        Witness::Development(d) => json!({ "development": development_json(d) }),
        Witness::Sequence { actions, inner } => json!({
            "sequence": actions.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
            "inner": witness_json(inner),
        }),
    }
}

pub fn verdict_json(v: &Verdict) -> Json {
    json!({ "holds": v.holds, "witness": witness_json(&v.witness), "notes": v.notes })
}

pub fn dimension_json(r: &DimensionReport) -> Json {
    let per_value: Vec<Json> = r
        .per_value
        .iter()
        .map(|(t, s)| {
            json!({
                "value": values(t),
                "status": match s {
                    ValueStatus::Complete => "complete",
                    ValueStatus::PossiblyIncomplete => "possibly-incomplete",
                },
            })
        })
        .collect();
    json!({
        "dimensions": r.dims.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        "values": per_value,
        "new_values_possible": r.new_values_possible,
        "new_value_example": r.new_value_example.as_deref().map(values),
    })
}

pub fn error_json(e: &Error) -> Json {
    let kind = match e {
        Error::Parse { .. } => "parse",
        Error::Arity { .. } => "arity",
        Error::Unsafe { .. } => "unsafe",
        Error::Unknown { .. } => "unknown",
        Error::CapExceeded { .. } => "cap-exceeded",
        Error::Refused(_) => "refused",
        Error::Invalid(_) => "invalid",
        Error::ChaseConflict(_) => "chase-conflict",
    };
    json!({ "error": kind, "message": e.to_string() })
}

/// Pretty-printed, with a trailing newline.
pub fn render(j: &Json) -> String {
    let mut s = serde_json::to_string_pretty(j).expect("serializable");
    s.push('\n');
    s
}
