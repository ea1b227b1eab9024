//! The `.cmpl` input language.
//!
//! ```text
//! rel person/2.
//! query Q1(n) :- student(n,c,s), person(n,"male").
//! tc C2 : student(n,c,s) ; person(n,"male").
//! tc Cx : student[1,3](n,c,s) ; class(s,c,f,"arts").
//! key student/3 = 1.
//! goal set Q1.
//! instance D = { person("John","male"), student("Bob",_,"Hofer") }.
//! idb DS = (D, Davail).
//! state s0 init.
//! action pH rw pupil(n,1,"Hofer") <~ request(n,"Hofer").
//! action rH copy pupil(n,1,"Hofer") -> pupil(n,1,"Hofer").
//! edge s0 pH s1.
//! ```
//!
//! Identifiers in queries, statements and effects are variables. In facts a
//! bare identifier is a string constant. Relations are declared implicitly
//! by their first use; `rel` fixes an arity up front.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::model::{
    Atom, CmpOp, Comparison, Condition, Fact, IncompleteDatabase, Instance, Query, Semantics,
    TcStatement, Term,
};
use crate::process::{Action, Effect, Qats};
use crate::value::{sym, NullKind, Sym, Value};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(BigRational),
    Str(String),
    Null(NullKind, Option<u32>),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const PUNCTS: [&str; 19] = [
    ":-", "<~", "->", "<=", ">=", "(", ")", ",", ".", ":", ";", "[", "]", "{", "}", "=", "<", ">", "/",
];

fn err(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, col, msg: msg.into() }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tl, tc) = (line, col);
        let start = i;
        if c.is_alphabetic() {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line: tl, col: tc });
            continue;
        }
        if c == '_' {
            i += 1;
            while i < chars.len() && chars[i].is_ascii_alphabetic() {
                i += 1;
            }
            let word: String = chars[start + 1..i].iter().collect();
            let kind = match word.as_str() {
                "" => NullKind::Plain,
                "uk" => NullKind::Unknown,
                "na" => NullKind::NotApplicable,
                "amb" => NullKind::Ambiguous,
                _ => return Err(err(tl, tc, format!("unknown null literal _{word}"))),
            };
            let ds = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let id = if ds < i {
                let s: String = chars[ds..i].iter().collect();
                Some(s.parse::<u32>().map_err(|_| err(tl, tc, "null id out of range"))?)
            } else {
                None
            };
            if i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                return Err(err(tl, tc, "malformed null literal"));
            }
            col += i - start;
            out.push(Token { tok: Tok::Null(kind, id), line: tl, col: tc });
            continue;
        }
        let neg = c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
        if c.is_ascii_digit() || neg {
            if neg {
                i += 1;
            }
            let digits = |i: &mut usize| {
                let s = *i;
                while *i < chars.len() && chars[*i].is_ascii_digit() {
                    *i += 1;
                }
                chars[s..*i].iter().collect::<String>()
            };
            let int = digits(&mut i);
            let mut value = BigRational::from_integer(int.parse::<BigInt>().unwrap());
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                let frac = digits(&mut i);
                let scale = BigInt::from(10u32).pow(frac.len() as u32);
                value += BigRational::new(frac.parse::<BigInt>().unwrap(), scale);
            } else if i + 1 < chars.len() && chars[i] == '/' && chars[i + 1].is_ascii_digit() {
                i += 1;
                let den = digits(&mut i).parse::<BigInt>().unwrap();
                if den == BigInt::from(0) {
                    return Err(err(tl, tc, "zero denominator"));
                }
                value /= BigRational::from_integer(den);
            }
            if neg {
                value = -value;
            }
            col += i - start;
            out.push(Token { tok: Tok::Num(value), line: tl, col: tc });
            continue;
        }
        if c == '"' {
            advance(&mut i, &mut line, &mut col, c);
            let mut s = String::new();
            loop {
                let Some(&d) = chars.get(i) else {
                    return Err(err(tl, tc, "unterminated string"));
                };
                advance(&mut i, &mut line, &mut col, d);
                match d {
                    '"' => break,
                    '\0' => return Err(err(tl, tc, "NUL character in string")),
                    '\\' => {
                        let Some(&e) = chars.get(i) else {
                            return Err(err(tl, tc, "unterminated string"));
                        };
                        advance(&mut i, &mut line, &mut col, e);
                        s.push(match e {
                            '"' => '"',
                            '\\' => '\\',
                            'n' => '\n',
                            't' => '\t',
                            _ => return Err(err(line, col, format!("unknown escape \\{e}"))),
                        });
                    }
                    d => s.push(d),
                }
            }
            if s.starts_with('#') {
                return Err(err(tl, tc, "string constants may not start with '#'"));
            }
            out.push(Token { tok: Tok::Str(s), line: tl, col: tc });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(*p)) {
            Some(p) => {
                i += p.len();
                col += p.len();
                out.push(Token { tok: Tok::Punct(p), line: tl, col: tc });
            }
            None => return Err(err(tl, tc, format!("unexpected character '{c}'"))),
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Everything declared in one input file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Workspace {
    pub schema: BTreeMap<Sym, usize>,
    pub queries: Vec<Query>,
    pub statements: Vec<TcStatement>,
    pub instances: Vec<(Sym, Instance)>,
    /// (name, ideal instance, available instance)
    pub idbs: Vec<(Sym, Sym, Sym)>,
    /// Key prefix length per relation.
    pub keys: BTreeMap<Sym, usize>,
    pub goals: Vec<(Semantics, Sym)>,
    pub qats: Option<Qats>,
}

impl Workspace {
    pub fn query(&self, name: &str) -> Result<&Query> {
        self.queries
            .iter()
            .find(|q| &*q.name == name)
            .ok_or_else(|| Error::Unknown { kind: "query", name: name.into() })
    }

    pub fn statement(&self, name: &str) -> Result<&TcStatement> {
        self.statements
            .iter()
            .find(|c| &*c.name == name)
            .ok_or_else(|| Error::Unknown { kind: "statement", name: name.into() })
    }

    pub fn instance(&self, name: &str) -> Result<&Instance> {
        self.instances
            .iter()
            .find(|(n, _)| &**n == name)
            .map(|(_, i)| i)
            .ok_or_else(|| Error::Unknown { kind: "instance", name: name.into() })
    }

    pub fn idb(&self, name: &str) -> Result<IncompleteDatabase> {
        let (_, ideal, avail) = self
            .idbs
            .iter()
            .find(|(n, _, _)| &**n == name)
            .ok_or_else(|| Error::Unknown { kind: "incomplete database", name: name.into() })?;
        Ok(IncompleteDatabase::new(self.instance(ideal)?.clone(), self.instance(avail)?.clone()))
    }
}

struct QatsBuilder {
    states: Vec<Sym>,
    init: Vec<Sym>,
    actions: Vec<Action>,
    edges: Vec<(Sym, Sym, Sym, usize, usize)>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_null: u32,
    ws: Workspace,
    qats: QatsBuilder,
}

#[derive(Clone, Copy, PartialEq)]
enum Ctx {
    Rule,
    Fact,
}

enum Item {
    Atom(Atom),
    Cmp(Comparison),
}

pub fn parse_workspace(text: &str) -> Result<Workspace> {
    let toks = lex(text)?;
    let max_id = toks
        .iter()
        .filter_map(|t| match t.tok {
            Tok::Null(_, Some(id)) => Some(id),
            _ => None,
        })
        .max();
    let mut p = Parser {
        toks,
        pos: 0,
        next_null: max_id.map_or(1, |m| m + 1),
        ws: Workspace::default(),
        qats: QatsBuilder { states: Vec::new(), init: Vec::new(), actions: Vec::new(), edges: Vec::new() },
    };
    while p.peek() != &Tok::Eof {
        p.declaration()?;
    }
    p.finish_qats()?;
    Ok(p.ws)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (l, c) = self.here();
        Err(err(l, c, msg))
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> Result<()> {
        if self.eat(p) {
            Ok(())
        } else {
            self.fail(format!("expected '{p}'"))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.fail("expected identifier"),
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Tok::Ident(s) if s == kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn natural(&mut self) -> Result<usize> {
        match self.peek().clone() {
            Tok::Num(n) if n.is_integer() && n >= BigRational::from_integer(0.into()) => {
                self.bump();
                n.to_integer().try_into().or_else(|_| self.fail("number too large"))
            }
            _ => self.fail("expected a natural number"),
        }
    }

    fn declaration(&mut self) -> Result<()> {
        let (line, col) = self.here();
        let kw = self.ident()?;
        match kw.as_str() {
            "rel" => {
                let name = self.ident()?;
                self.expect("/")?;
                let k = self.natural()?;
                self.declare_rel(&name, k, line, col)?;
            }
            "query" => {
                let q = self.query_decl()?;
                if self.ws.queries.iter().any(|o| o.name == q.name) {
                    return Err(err(line, col, format!("duplicate query {}", q.name)));
                }
                self.ws.queries.push(q);
            }
            "tc" => {
                let c = self.tc_decl()?;
                if self.ws.statements.iter().any(|o| o.name == c.name) {
                    return Err(err(line, col, format!("duplicate statement {}", c.name)));
                }
                self.ws.statements.push(c);
            }
            "key" => {
                let name = self.ident()?;
                self.expect("/")?;
                let k = self.natural()?;
                self.expect("=")?;
                let n = self.natural()?;
                self.declare_rel(&name, k, line, col)?;
                if n == 0 || n > k {
                    return Err(err(line, col, format!("key length {n} invalid for arity {k}")));
                }
                if self.ws.keys.insert(sym(&name), n).is_some() {
                    return Err(err(line, col, format!("duplicate key for {name}")));
                }
            }
            "goal" => {
                let sem = if self.keyword("set") {
                    Semantics::Set
                } else if self.keyword("bag") {
                    Semantics::Bag
                } else {
                    return self.fail("expected 'set' or 'bag'");
                };
                let q = self.ident()?;
                self.ws.goals.push((sem, sym(&q)));
            }
            "instance" => {
                let name = self.ident()?;
                self.expect("=")?;
                self.expect("{")?;
                let mut inst = Instance::new();
                if !self.eat("}") {
                    loop {
                        let (fl, fc) = self.here();
                        let a = self.atom(Ctx::Fact)?;
                        self.check_arity(&a, fl, fc)?;
                        let args = a.args.into_iter().map(|t| t.as_const().cloned().unwrap()).collect();
                        inst.insert(Fact { rel: a.rel, args });
                        if self.eat("}") {
                            break;
                        }
                        self.expect(",")?;
                    }
                }
                if self.ws.instances.iter().any(|(n, _)| **n == name) {
                    return Err(err(line, col, format!("duplicate instance {name}")));
                }
                self.ws.instances.push((sym(&name), inst));
            }
            "idb" => {
                let name = self.ident()?;
                self.expect("=")?;
                self.expect("(")?;
                let ideal = self.ident()?;
                self.expect(",")?;
                let avail = self.ident()?;
                self.expect(")")?;
                for n in [&ideal, &avail] {
                    if !self.ws.instances.iter().any(|(m, _)| &**m == n.as_str()) {
                        return Err(err(line, col, format!("unknown instance {n}")));
                    }
                }
                if self.ws.idbs.iter().any(|(n, _, _)| **n == name) {
                    return Err(err(line, col, format!("duplicate incomplete database {name}")));
                }
                self.ws.idbs.push((sym(&name), sym(&ideal), sym(&avail)));
            }
            "state" => {
                let name = sym(&self.ident()?);
                if self.qats.states.contains(&name) {
                    return Err(err(line, col, format!("duplicate state {name}")));
                }
                if self.keyword("init") {
                    self.qats.init.push(name.clone());
                }
                self.qats.states.push(name);
            }
            "action" => self.action_decl()?,
            "edge" => {
                let (s, a, t) = (sym(&self.ident()?), sym(&self.ident()?), sym(&self.ident()?));
                self.qats.edges.push((s, a, t, line, col));
            }
            other => return Err(err(line, col, format!("unknown declaration '{other}'"))),
        }
        self.expect(".")
    }

    fn declare_rel(&mut self, name: &str, k: usize, line: usize, col: usize) -> Result<()> {
        match self.ws.schema.get(name) {
            Some(&old) if old != k => {
                Err(err(line, col, format!("arity mismatch for {name}: expected {old}, found {k}")))
            }
            _ => {
                self.ws.schema.insert(sym(name), k);
                Ok(())
            }
        }
    }

    fn check_arity(&mut self, a: &Atom, line: usize, col: usize) -> Result<()> {
        self.declare_rel(&a.rel, a.args.len(), line, col)
    }

    fn term(&mut self, ctx: Ctx) -> Result<Term> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(match ctx {
                    Ctx::Rule => Term::Var(sym(&s)),
                    Ctx::Fact => Term::Const(Value::str(&s)),
                })
            }
            Tok::Num(n) => {
                self.bump();
                Ok(Term::Const(Value::Num(n)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Term::Const(Value::str(&s)))
            }
            Tok::Null(kind, id) => {
                if ctx == Ctx::Rule {
                    return self.fail("null values may only appear in facts");
                }
                self.bump();
                let id = id.unwrap_or_else(|| {
                    self.next_null += 1;
                    self.next_null - 1
                });
                Ok(Term::Const(Value::null(kind, id)))
            }
            _ => self.fail("expected a term"),
        }
    }

    fn args(&mut self, ctx: Ctx) -> Result<Vec<Term>> {
        self.expect("(")?;
        let mut args = Vec::new();
        if self.eat(")") {
            return Ok(args);
        }
        loop {
            args.push(self.term(ctx)?);
            if self.eat(")") {
                return Ok(args);
            }
            self.expect(",")?;
        }
    }

    fn atom(&mut self, ctx: Ctx) -> Result<Atom> {
        let rel = self.ident()?;
        Ok(Atom { rel: sym(&rel), args: self.args(ctx)? })
    }

    fn cmp_op(&mut self) -> Option<(CmpOp, bool)> {
        let r = match self.peek() {
            Tok::Punct("=") => (CmpOp::Eq, false),
            Tok::Punct("<") => (CmpOp::Lt, false),
            Tok::Punct("<=") => (CmpOp::Le, false),
            Tok::Punct(">") => (CmpOp::Lt, true),
            Tok::Punct(">=") => (CmpOp::Le, true),
            _ => return None,
        };
        self.bump();
        Some(r)
    }

    fn item(&mut self) -> Result<Item> {
        let (line, col) = self.here();
        if matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_at(1), Tok::Punct("(")) {
            let a = self.atom(Ctx::Rule)?;
            self.check_arity(&a, line, col)?;
            return Ok(Item::Atom(a));
        }
        let l = self.term(Ctx::Rule)?;
        let Some((op, swap)) = self.cmp_op() else {
            return self.fail("expected a comparison operator");
        };
        let r = self.term(Ctx::Rule)?;
        if let (Term::Const(a), Term::Const(b)) = (&l, &r) {
            if a.cmp_domain(b).is_some() && std::mem::discriminant(a) != std::mem::discriminant(b) {
                return Err(err(line, col, "comparison between a number and a string"));
            }
        }
        Ok(Item::Cmp(if swap { Comparison::new(r, op, l) } else { Comparison::new(l, op, r) }))
    }

    /// A comma-separated condition, or the literal `true`.
    fn condition(&mut self) -> Result<Condition> {
        let mut c = Condition::default();
        if matches!(self.peek(), Tok::Ident(s) if s == "true") && !matches!(self.peek_at(1), Tok::Punct("(")) {
            self.bump();
            return Ok(c);
        }
        loop {
            match self.item()? {
                Item::Atom(a) => c.atoms.push(a),
                Item::Cmp(k) => c.comparisons.push(k),
            }
            if !self.is_punct(",") || matches!(self.peek_at(1), Tok::Eof) {
                return Ok(c);
            }
            self.bump();
        }
    }

    fn query_decl(&mut self) -> Result<Query> {
        let (line, col) = self.here();
        let name = self.ident()?;
        let head = self.args(Ctx::Rule)?;
        self.expect(":-")?;
        let body = self.condition()?;
        let q = Query { name: sym(&name), head, body };
        check_types(&q.body, line, col)?;
        if let Some(v) = q.safety_violation() {
            return Err(err(line, col, format!("unsafe variable {v} in query {name}")));
        }
        Ok(q)
    }

    fn tc_decl(&mut self) -> Result<TcStatement> {
        let (line, col) = self.here();
        let name = self.ident()?;
        self.expect(":")?;
        let (hl, hc) = self.here();
        let rel = self.ident()?;
        let proj = if self.eat("[") {
            let mut ps = BTreeSet::new();
            if !self.eat("]") {
                loop {
                    let p = self.natural()?;
                    if p == 0 {
                        return self.fail("projection positions start at 1");
                    }
                    ps.insert(p - 1);
                    if self.eat("]") {
                        break;
                    }
                    self.expect(",")?;
                }
            }
            Some(ps)
        } else {
            None
        };
        let head = Atom { rel: sym(&rel), args: self.args(Ctx::Rule)? };
        self.check_arity(&head, hl, hc)?;
        if let Some(ps) = &proj {
            if let Some(p) = ps.iter().find(|&&p| p >= head.args.len()) {
                return Err(err(hl, hc, format!("projection position {} exceeds arity", p + 1)));
            }
        }
        let cond = if self.eat(";") { self.condition()? } else { Condition::default() };
        let (head, cond) = normalize_head(head, cond);
        let c = TcStatement { name: sym(&name), head, cond, proj };
        check_types(&c.query().body, line, col)?;
        if let Some(v) = c.query().safety_violation() {
            return Err(err(line, col, format!("unsafe variable {v} in statement {name}")));
        }
        Ok(c)
    }

    fn action_decl(&mut self) -> Result<()> {
        let (line, col) = self.here();
        let name = sym(&self.ident()?);
        let idx = match self.qats.actions.iter().position(|a| a.name == name) {
            Some(i) => i,
            None => {
                self.qats.actions.push(Action { name: name.clone(), real_world: Vec::new(), copies: Vec::new() });
                self.qats.actions.len() - 1
            }
        };
        if self.is_punct(".") {
            return Ok(());
        }
        if self.keyword("rw") {
            let (hl, hc) = self.here();
            let head = self.atom(Ctx::Rule)?;
            self.check_arity(&head, hl, hc)?;
            self.expect("<~")?;
            let guard = self.condition()?;
            let (head, guard) = normalize_head(head, guard);
            check_effect(&head, &guard, line, col)?;
            self.qats.actions[idx].real_world.push(Effect::new(head, guard));
        } else if self.keyword("copy") {
            let (hl, hc) = self.here();
            let head = self.atom(Ctx::Rule)?;
            self.check_arity(&head, hl, hc)?;
            let guard = if self.eat(",") { self.condition()? } else { Condition::default() };
            self.expect("->")?;
            let target = self.atom(Ctx::Rule)?;
            if target != head {
                return Err(err(line, col, "copy target must repeat the copied atom"));
            }
            let (head, guard) = normalize_head(head, guard);
            check_effect(&head, &guard, line, col)?;
            self.qats.actions[idx].copies.push(Effect::new(head, guard));
        } else {
            return self.fail("expected 'rw' or 'copy'");
        }
        Ok(())
    }

    fn finish_qats(&mut self) -> Result<()> {
        let q = &self.qats;
        if q.states.is_empty() && q.actions.is_empty() && q.edges.is_empty() {
            return Ok(());
        }
        let init = match q.init.as_slice() {
            [s] => s.clone(),
            [] => return Err(err(1, 1, "transition system has no initial state")),
            _ => return Err(err(1, 1, "transition system has several initial states")),
        };
        let mut edges = Vec::new();
        for (s, a, t, line, col) in &q.edges {
            for st in [s, t] {
                if !q.states.contains(st) {
                    return Err(err(*line, *col, format!("unknown state {st}")));
                }
            }
            if !q.actions.iter().any(|x| &x.name == a) {
                return Err(err(*line, *col, format!("unknown action {a}")));
            }
            edges.push((s.clone(), a.clone(), t.clone()));
        }
        self.ws.qats = Some(Qats { states: q.states.clone(), init, actions: q.actions.clone(), edges });
        Ok(())
    }
}

/// Replace constants in a head atom by fresh variables bound by equalities.
fn normalize_head(mut head: Atom, mut cond: Condition) -> (Atom, Condition) {
    let mut used: BTreeSet<Sym> = cond.vars().into_iter().collect();
    used.extend(head.vars().cloned());
    for (i, t) in head.args.iter_mut().enumerate() {
        if let Term::Const(c) = t {
            let mut name = format!("p{}", i + 1);
            let mut k = 1;
            while used.contains(name.as_str()) {
                name = format!("p{}_{k}", i + 1);
                k += 1;
            }
            let v = sym(&name);
            used.insert(v.clone());
            cond.comparisons.push(Comparison::new(Term::Var(v.clone()), CmpOp::Eq, Term::Const(c.clone())));
            *t = Term::Var(v);
        }
    }
    (head, cond)
}

fn check_effect(head: &Atom, guard: &Condition, line: usize, col: usize) -> Result<()> {
    let mut body = guard.clone();
    body.atoms.insert(0, head.clone());
    check_types(&body, line, col)?;
    if let Some(v) = body.unsafe_vars().into_iter().next() {
        return Err(err(line, col, format!("unsafe variable {v} in effect")));
    }
    Ok(())
}

/// A variable compared with both numbers and strings is a type error.
fn check_types(c: &Condition, line: usize, col: usize) -> Result<()> {
    let mut kinds: BTreeMap<&Sym, bool> = BTreeMap::new();
    for k in &c.comparisons {
        let pairs = [(&k.left, &k.right), (&k.right, &k.left)];
        for (a, b) in pairs {
            if let (Term::Var(v), Term::Const(val)) = (a, b) {
                let is_num = matches!(val, Value::Num(_));
                if let Some(old) = kinds.insert(v, is_num) {
                    if old != is_num {
                        return Err(err(line, col, format!("variable {v} compared with a number and a string")));
                    }
                }
            }
        }
    }
    Ok(())
}

impl fmt::Display for Workspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, k) in &self.schema {
            writeln!(f, "rel {r}/{k}.")?;
        }
        for (r, n) in &self.keys {
            writeln!(f, "key {r}/{} = {n}.", self.schema[r])?;
        }
        for q in &self.queries {
            writeln!(f, "query {q}.")?;
        }
        for c in &self.statements {
            writeln!(f, "tc {} : {c}.", c.name)?;
        }
        for (sem, q) in &self.goals {
            let s = if *sem == Semantics::Set { "set" } else { "bag" };
            writeln!(f, "goal {s} {q}.")?;
        }
        for (n, i) in &self.instances {
            writeln!(f, "instance {n} = {i}.")?;
        }
        for (n, a, b) in &self.idbs {
            writeln!(f, "idb {n} = ({a}, {b}).")?;
        }
        if let Some(q) = &self.qats {
            for s in &q.states {
                let init = if *s == q.init { " init" } else { "" };
                writeln!(f, "state {s}{init}.")?;
            }
            for a in &q.actions {
                if a.real_world.is_empty() && a.copies.is_empty() {
                    writeln!(f, "action {}.", a.name)?;
                }
                for e in &a.real_world {
                    writeln!(f, "action {} rw {} <~ {}.", a.name, e.head, e.guard)?;
                }
                for e in &a.copies {
                    if e.guard.is_empty() {
                        writeln!(f, "action {} copy {} -> {}.", a.name, e.head, e.head)?;
                    } else {
                        writeln!(f, "action {} copy {}, {} -> {}.", a.name, e.head, e.guard, e.head)?;
                    }
                }
            }
            for (s, a, t) in &q.edges {
                writeln!(f, "edge {s} {a} {t}.")?;
            }
        }
        Ok(())
    }
}

/// Parse a single query such as `Q(x) :- R(x,y), y < 3`.
pub fn parse_query(text: &str) -> Result<Query> {
    let ws = parse_workspace(&format!("query {text}."))?;
    Ok(ws.queries.into_iter().next().expect("one query"))
}

/// Parse a single statement such as `C : R(x) ; S(x)`.
pub fn parse_statement(text: &str) -> Result<TcStatement> {
    let ws = parse_workspace(&format!("tc {text}."))?;
    Ok(ws.statements.into_iter().next().expect("one statement"))
}

/// Parse a comma-separated fact list, without braces.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let ws = parse_workspace(&format!("instance I = {{{text}}}."))?;
    Ok(ws.instances.into_iter().next().expect("one instance").1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_file() {
        let ws = parse_workspace(r#"rel person/2. query Q1(n) :- student(n,c,s), person(n,"male")."#).unwrap();
        assert_eq!(ws.queries.len(), 1);
        assert_eq!(ws.schema[&sym("student")], 3);
    }

    #[test]
    fn running_example_statement() {
        let c = parse_statement(r#"C2 : student(n,c,s) ; person(n,"male")"#).unwrap();
        assert_eq!(c.head.rel.as_ref(), "student");
        assert_eq!(c.cond.atoms.len(), 1);
        assert!(c.proj.is_none());
    }

    #[test]
    fn projection_statement() {
        let c = parse_statement(r#"Cx : student[1,3](n,c,s) ; class(s,c,f,"arts")"#).unwrap();
        assert_eq!(c.proj, Some([0, 2].into_iter().collect()));
        assert!(parse_statement("C : R[3](x,y)").is_err());
    }

    #[test]
    fn errors_carry_positions() {
        match parse_workspace("rel R/1.\nquery Q(x) :- R(x,y).") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_workspace("query Q(x) :- R(y).").is_err());
        assert!(parse_workspace("query Q(x) :- R(x), z < 1.").is_err());
        assert!(parse_workspace("query Q(x) :- R(x), x < 1, x = \"a\".").is_err());
        assert!(parse_workspace("query Q(x) :- R(x, _).").is_err());
        assert!(parse_workspace("instance D = { R(\"#f1\") }.").is_err());
        assert!(parse_workspace("query Q(x) :- R(x)").is_err());
        assert!(parse_workspace("query Q(x) :- R(x). query Q(y) :- R(y).").is_err());
    }

    #[test]
    fn empty_body_and_comparisons() {
        let q = parse_query("Q() :- true").unwrap();
        assert!(q.body.is_empty());
        let q = parse_query("Q(x) :- R(x), x >= 2.5, x < -1/3").unwrap();
        assert_eq!(q.body.comparisons[0], Comparison::new(Term::Const(Value::ratio(5, 2)), CmpOp::Le, Term::var("x")));
        assert_eq!(q.body.comparisons[1].right, Term::Const(Value::ratio(-1, 3)));
    }

    #[test]
    fn head_constants_become_equalities() {
        let c = parse_statement(r#"C : pupil(n,1,"Hofer")"#).unwrap();
        assert!(c.head.args.iter().all(|t| t.as_var().is_some()));
        assert_eq!(c.cond.comparisons.len(), 2);
    }

    #[test]
    fn nulls_in_facts() {
        let i = parse_instance("R(_na3, _, _uk), S(a, _amb)").unwrap();
        let mut ids: Vec<u32> = i
            .iter()
            .flat_map(|f| f.args.iter())
            .filter_map(|v| match v {
                Value::Null(t) => Some(t.id),
                _ => None,
            })
            .collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 4);
        assert!(ids.iter().all(|&i| i >= 3));
    }

    #[test]
    fn qats_section() {
        let ws = parse_workspace(
            r#"state s0 init. state s1.
               action pH rw pupil(n,1,"Hofer") <~ request(n,"Hofer").
               action rH copy pupil(n,1,"Hofer") -> pupil(n,1,"Hofer").
               edge s0 pH s1. edge s1 rH s0."#,
        )
        .unwrap();
        let q = ws.qats.unwrap();
        assert_eq!(q.actions.len(), 2);
        assert_eq!(q.edges.len(), 2);
        assert!(parse_workspace("state s0 init. edge s0 a s0.").is_err());
    }

    #[test]
    fn workspace_round_trip() {
        let text = r#"
            key student/3 = 1.
            query Q(n) :- student(n,c,s), person(n,"male"), c < 3.
            tc C : student[1,3](n,c,s) ; class(s,c,f,"arts").
            goal bag Q.
            instance D = { student("John", _, "Hofer"), person(John, male) }.
            instance E = { }.
            idb X = (D, E).
            state s0 init.
            action a rw R(x) <~ true.
            action b copy R(x), x < 2 -> R(x).
            action c.
            edge s0 a s0.
        "#;
        let ws = parse_workspace(text).unwrap();
        let again = parse_workspace(&ws.to_string()).unwrap();
        assert_eq!(ws, again);
    }
}
