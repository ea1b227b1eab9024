//! Terms, atoms, conditions, queries, instances and completeness statements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::value::{sym, Sym, Value};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Sym),
    Const(Value),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(sym(name))
    }

    pub fn as_var(&self) -> Option<&Sym> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    pub fn as_const(&self) -> Option<&Value> {
        match self {
            Term::Const(c) => Some(c),
            Term::Var(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub rel: Sym,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(rel: &str, args: Vec<Term>) -> Atom {
        Atom { rel: sym(rel), args }
    }

    pub fn vars(&self) -> impl Iterator<Item = &Sym> {
        self.args.iter().filter_map(Term::as_var)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Lt,
    Le,
}

impl CmpOp {
    /// Truth value over ground values; comparisons with nulls are false.
    pub fn eval(self, l: &Value, r: &Value) -> bool {
        match l.cmp_domain(r) {
            None => false,
            Some(o) => match self {
                CmpOp::Eq => o.is_eq(),
                CmpOp::Lt => o.is_lt(),
                CmpOp::Le => o.is_le(),
            },
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Comparison {
    pub left: Term,
    pub op: CmpOp,
    pub right: Term,
}

impl Comparison {
    pub fn new(left: Term, op: CmpOp, right: Term) -> Comparison {
        Comparison { left, op, right }
    }

    pub fn terms(&self) -> [&Term; 2] {
        [&self.left, &self.right]
    }

    pub fn holds(&self, l: &Value, r: &Value) -> bool {
        self.op.eval(l, r)
    }
}

/// A conjunction of relational atoms and comparisons.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Condition {
    pub atoms: Vec<Atom>,
    pub comparisons: Vec<Comparison>,
}

impl Condition {
    pub fn new(atoms: Vec<Atom>, comparisons: Vec<Comparison>) -> Condition {
        Condition { atoms, comparisons }
    }

    pub fn relational(atoms: Vec<Atom>) -> Condition {
        Condition { atoms, comparisons: Vec::new() }
    }

    pub fn is_relational(&self) -> bool {
        self.comparisons.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.comparisons.is_empty()
    }

    /// Variables in first-occurrence order.
    pub fn vars(&self) -> Vec<Sym> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let atom_terms = self.atoms.iter().flat_map(|a| a.args.iter());
        let cmp_terms = self.comparisons.iter().flat_map(|c| c.terms());
        for t in atom_terms.chain(cmp_terms) {
            if let Term::Var(v) = t {
                if seen.insert(v.clone()) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    pub fn atom_vars(&self) -> BTreeSet<Sym> {
        self.atoms.iter().flat_map(|a| a.vars().cloned()).collect()
    }

    pub fn constants(&self) -> BTreeSet<Value> {
        let atom_terms = self.atoms.iter().flat_map(|a| a.args.iter());
        let cmp_terms = self.comparisons.iter().flat_map(|c| c.terms());
        atom_terms.chain(cmp_terms).filter_map(|t| t.as_const().cloned()).collect()
    }

    /// Variables occurring in comparisons but in no relational atom.
    pub fn unsafe_vars(&self) -> Vec<Sym> {
        let bound = self.atom_vars();
        let mut out: Vec<Sym> = Vec::new();
        for c in &self.comparisons {
            for t in c.terms() {
                if let Term::Var(v) = t {
                    if !bound.contains(v) && !out.contains(v) {
                        out.push(v.clone());
                    }
                }
            }
        }
        out
    }

    pub fn conjoin(&self, other: &Condition) -> Condition {
        let mut c = self.clone();
        c.atoms.extend(other.atoms.iter().cloned());
        c.comparisons.extend(other.comparisons.iter().cloned());
        c
    }

    pub fn relations(&self) -> BTreeSet<Sym> {
        self.atoms.iter().map(|a| a.rel.clone()).collect()
    }
}

/// A conjunctive query `Q(head) :- body`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Query {
    pub name: Sym,
    pub head: Vec<Term>,
    pub body: Condition,
}

impl Query {
    pub fn new(name: &str, head: Vec<Term>, body: Condition) -> Query {
        Query { name: sym(name), head, body }
    }

    pub fn arity(&self) -> usize {
        self.head.len()
    }

    pub fn is_relational(&self) -> bool {
        self.body.is_relational()
    }

    /// No relation symbol occurs twice.
    pub fn is_linear(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.body.atoms.iter().all(|a| seen.insert(a.rel.clone()))
    }

    pub fn head_vars(&self) -> BTreeSet<Sym> {
        self.head.iter().filter_map(Term::as_var).cloned().collect()
    }

    /// Safe: head variables and comparison variables occur in relational atoms.
    pub fn safety_violation(&self) -> Option<Sym> {
        let bound = self.body.atom_vars();
        for t in &self.head {
            if let Term::Var(v) = t {
                if !bound.contains(v) {
                    return Some(v.clone());
                }
            }
        }
        self.body.unsafe_vars().into_iter().next()
    }

    pub fn constants(&self) -> BTreeSet<Value> {
        let mut c = self.body.constants();
        c.extend(self.head.iter().filter_map(|t| t.as_const().cloned()));
        c
    }

    /// Rename every variable by applying `f`.
    pub fn rename(&self, f: &dyn Fn(&Sym) -> Sym) -> Query {
        let rt = |t: &Term| match t {
            Term::Var(v) => Term::Var(f(v)),
            c => c.clone(),
        };
        Query {
            name: self.name.clone(),
            head: self.head.iter().map(rt).collect(),
            body: rename_condition(&self.body, f),
        }
    }
}

pub fn rename_condition(c: &Condition, f: &dyn Fn(&Sym) -> Sym) -> Condition {
    let rt = |t: &Term| match t {
        Term::Var(v) => Term::Var(f(v)),
        c => c.clone(),
    };
    Condition {
        atoms: c
            .atoms
            .iter()
            .map(|a| Atom { rel: a.rel.clone(), args: a.args.iter().map(rt).collect() })
            .collect(),
        comparisons: c
            .comparisons
            .iter()
            .map(|k| Comparison::new(rt(&k.left), k.op, rt(&k.right)))
            .collect(),
    }
}

/// Replace variables according to `map`; unmapped variables are kept.
pub fn substitute_term(t: &Term, map: &BTreeMap<Sym, Term>) -> Term {
    match t {
        Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
        c => c.clone(),
    }
}

pub fn substitute_atom(a: &Atom, map: &BTreeMap<Sym, Term>) -> Atom {
    Atom { rel: a.rel.clone(), args: a.args.iter().map(|t| substitute_term(t, map)).collect() }
}

pub fn substitute_condition(c: &Condition, map: &BTreeMap<Sym, Term>) -> Condition {
    Condition {
        atoms: c.atoms.iter().map(|a| substitute_atom(a, map)).collect(),
        comparisons: c
            .comparisons
            .iter()
            .map(|k| Comparison::new(substitute_term(&k.left, map), k.op, substitute_term(&k.right, map)))
            .collect(),
    }
}

pub type Tuple = Vec<Value>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub rel: Sym,
    pub args: Vec<Value>,
}

impl Fact {
    pub fn new(rel: &str, args: Vec<Value>) -> Fact {
        Fact { rel: sym(rel), args }
    }

    pub fn has_null(&self) -> bool {
        self.args.iter().any(Value::is_null)
    }
}

/// A finite set of ground facts.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instance {
    pub facts: BTreeSet<Fact>,
}

impl Instance {
    pub fn new() -> Instance {
        Instance::default()
    }

    pub fn from_facts<I: IntoIterator<Item = Fact>>(facts: I) -> Instance {
        Instance { facts: facts.into_iter().collect() }
    }

    pub fn insert(&mut self, f: Fact) -> bool {
        self.facts.insert(f)
    }

    pub fn contains(&self, f: &Fact) -> bool {
        self.facts.contains(f)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    pub fn union(&self, other: &Instance) -> Instance {
        Instance { facts: self.facts.union(&other.facts).cloned().collect() }
    }

    pub fn difference(&self, other: &Instance) -> Instance {
        Instance { facts: self.facts.difference(&other.facts).cloned().collect() }
    }

    pub fn is_subset(&self, other: &Instance) -> bool {
        self.facts.is_subset(&other.facts)
    }

    pub fn relation<'a>(&'a self, rel: &'a str) -> impl Iterator<Item = &'a Fact> + 'a {
        self.facts.iter().filter(move |f| &*f.rel == rel)
    }

    pub fn constants(&self) -> BTreeSet<Value> {
        self.facts.iter().flat_map(|f| f.args.iter()).filter(|v| !v.is_null()).cloned().collect()
    }

    pub fn has_nulls(&self) -> bool {
        self.facts.iter().any(Fact::has_null)
    }
}

impl FromIterator<Fact> for Instance {
    fn from_iter<I: IntoIterator<Item = Fact>>(iter: I) -> Self {
        Instance::from_facts(iter)
    }
}

/// How nulls in an incomplete database are to be read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Regime {
    NoNulls,
    IncompleteFacts,
    RestrictedFacts,
    PartialFacts,
    /// One syntactic null of unknown meaning.
    AmbiguousNulls,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IncompleteDatabase {
    pub ideal: Instance,
    pub available: Instance,
    pub regime: Regime,
}

impl IncompleteDatabase {
    pub fn new(ideal: Instance, available: Instance) -> IncompleteDatabase {
        IncompleteDatabase { ideal, available, regime: Regime::NoNulls }
    }

    pub fn with_regime(mut self, regime: Regime) -> IncompleteDatabase {
        self.regime = regime;
        self
    }
}

/// `Compl(R(s̄); P; G)`. Projection positions are zero-based; `None` means all.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TcStatement {
    pub name: Sym,
    pub head: Atom,
    pub cond: Condition,
    pub proj: Option<BTreeSet<usize>>,
}

impl TcStatement {
    pub fn new(name: &str, head: Atom, cond: Condition) -> TcStatement {
        TcStatement { name: sym(name), head, cond, proj: None }
    }

    pub fn with_projection(mut self, positions: BTreeSet<usize>) -> TcStatement {
        self.proj = Some(positions);
        self
    }

    pub fn rel(&self) -> &Sym {
        &self.head.rel
    }

    pub fn projected(&self, pos: usize) -> bool {
        self.proj.as_ref().is_none_or(|p| p.contains(&pos))
    }

    pub fn is_full_projection(&self) -> bool {
        match &self.proj {
            None => true,
            Some(p) => (0..self.head.args.len()).all(|i| p.contains(&i)),
        }
    }

    /// The associated query `Q_C(s̄) :- R(s̄), G`.
    pub fn query(&self) -> Query {
        let mut atoms = vec![self.head.clone()];
        atoms.extend(self.cond.atoms.iter().cloned());
        Query {
            name: self.name.clone(),
            head: self.head.args.clone(),
            body: Condition::new(atoms, self.cond.comparisons.clone()),
        }
    }

    pub fn is_relational(&self) -> bool {
        self.cond.is_relational()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Semantics {
    Set,
    Bag,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QcStatement {
    pub query: Query,
    pub semantics: Semantics,
}

/// One checked test database of a positive containment verdict: the
/// container that produced the head tuple and the valuation it used.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertEntry {
    pub test_db: Instance,
    pub head: Tuple,
    pub container: usize,
    pub mapping: BTreeMap<Sym, Value>,
}

/// A development of an action sequence: ideal and available states per step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Development {
    pub actions: Vec<Sym>,
    pub ideal: Vec<Instance>,
    pub available: Vec<Instance>,
    pub failing_action: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    None,
    Certificate(Vec<CertEntry>),
    /// A database on which the containee yields `head` but no container does.
    TestDatabase { db: Instance, head: Tuple },
    Counterexample(IncompleteDatabase),
    Development(Development),
    /// An action sequence leading to the state that is not complete.
    Sequence { actions: Vec<Sym>, inner: Box<Witness> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    pub witness: Witness,
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn yes(witness: Witness) -> Verdict {
        Verdict { holds: true, witness, notes: Vec::new() }
    }

    pub fn no(witness: Witness) -> Verdict {
        Verdict { holds: false, witness, notes: Vec::new() }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Verdict {
        self.notes.push(note.into());
        self
    }
}

// Textual forms below are the concrete syntax accepted by the parser.

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

fn write_args<T: fmt::Display>(f: &mut fmt::Formatter<'_>, args: &[T]) -> fmt::Result {
    f.write_str("(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{a}")?;
    }
    f.write_str(")")
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rel)?;
        write_args(f, &self.args)
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rel)?;
        write_args(f, &self.args)
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.left, self.op.symbol(), self.right)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("true");
        }
        let mut first = true;
        for a in &self.atoms {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{a}")?;
        }
        for c in &self.comparisons {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        write_args(f, &self.head)?;
        write!(f, " :- {}", self.body)
    }
}

impl fmt::Display for TcStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.head.rel)?;
        if let Some(p) = &self.proj {
            f.write_str("[")?;
            for (i, pos) in p.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}", pos + 1)?;
            }
            f.write_str("]")?;
        }
        write_args(f, &self.head.args)?;
        write!(f, " ; {}", self.cond)
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, fact) in self.facts.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{fact}")?;
        }
        f.write_str("}")
    }
}
