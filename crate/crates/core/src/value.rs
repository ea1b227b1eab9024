//! Ground values: rationals, strings and null tokens.
//!
//! Rationals and strings form one dense total order in which every number
//! precedes every string. Null tokens are ordered after both so that they
//! can live in sorted containers, but they never take part in comparisons.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;

pub type Sym = Arc<str>;

pub fn sym(s: &str) -> Sym {
    Arc::from(s)
}

/// The four null interpretations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NullKind {
    /// Uninterpreted null, written `_`.
    Plain,
    /// Value exists but is unknown, written `_uk`.
    Unknown,
    /// No value applies, written `_na`.
    NotApplicable,
    /// Either of the two above, written `_amb`.
    Ambiguous,
}

impl NullKind {
    pub fn literal(self) -> &'static str {
        match self {
            NullKind::Plain => "_",
            NullKind::Unknown => "_uk",
            NullKind::NotApplicable => "_na",
            NullKind::Ambiguous => "_amb",
        }
    }
}

/// A null occurrence. Two tokens are the same null only if kind and id agree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NullToken {
    pub kind: NullKind,
    pub id: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Num(BigRational),
    Str(Arc<str>),
    Null(NullToken),
}

impl Value {
    pub fn int(i: i64) -> Value {
        Value::Num(BigRational::from_integer(BigInt::from(i)))
    }

    pub fn ratio(n: i64, d: i64) -> Value {
        Value::Num(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn str(s: &str) -> Value {
        Value::Str(Arc::from(s))
    }

    pub fn null(kind: NullKind, id: u32) -> Value {
        Value::Null(NullToken { kind, id })
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null(_))
    }

    pub fn null_kind(&self) -> Option<NullKind> {
        match self {
            Value::Null(t) => Some(t.kind),
            _ => None,
        }
    }

    /// Order in the constant domain. `None` when either side is a null.
    pub fn cmp_domain(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Null(_), _) | (_, Value::Null(_)) => None,
            _ => Some(self.cmp(other)),
        }
    }

    /// Same value with null ids forgotten; used when comparing answer tuples
    /// in which any two nulls of one kind are indistinguishable.
    pub fn erase_null_id(&self) -> Value {
        match self {
            Value::Null(t) => Value::null(t.kind, 0),
            v => v.clone(),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Num(_) => 0,
            Value::Str(_) => 1,
            Value::Null(_) => 2,
        }
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Num(a), Value::Num(b)) => a.cmp(b),
            (Value::Str(a), Value::Str(b)) => a.as_bytes().cmp(b.as_bytes()),
            (Value::Null(a), Value::Null(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn quote_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\0' => out.push_str("\\0"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(r) => f.write_str(&fmt_rational(r)),
            Value::Str(s) => f.write_str(&quote_str(s)),
            Value::Null(t) => write!(f, "{}{}", t.kind.literal(), t.id),
        }
    }
}

/// `k` strictly increasing values lying strictly between `lo` and `hi`
/// (either bound may be open). Strings are extended with NUL characters,
/// which the parser rejects in literals, so such values never collide with
/// input constants.
pub fn values_between(lo: Option<&Value>, hi: Option<&Value>, k: usize) -> Vec<Value> {
    let num = |r: BigRational| Value::Num(r);
    let step = |i: usize| BigRational::from_integer(BigInt::from(i as u64));
    match (lo, hi) {
        (None, None) | (None, Some(Value::Str(_))) => (0..k).map(|i| num(step(i))).collect(),
        (None, Some(Value::Num(h))) => (0..k).map(|i| num(h - step(k - i))).collect(),
        (Some(Value::Num(l)), None) | (Some(Value::Num(l)), Some(Value::Str(_))) => {
            (1..=k).map(|i| num(l + step(i))).collect()
        }
        (Some(Value::Num(l)), Some(Value::Num(h))) => {
            let width = h - l;
            let parts = step(k + 1);
            (1..=k).map(|i| num(l + &width * step(i) / &parts)).collect()
        }
        (Some(Value::Str(s)), _) => (1..=k)
            .map(|i| {
                let mut t = s.to_string();
                t.extend(std::iter::repeat_n('\0', i));
                Value::Str(Arc::from(t.as_str()))
            })
            .collect(),
        _ => panic!("values_between: null bound"),
    }
}
