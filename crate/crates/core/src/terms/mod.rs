//! Message values, receive patterns, guards and constraints.
//!
//! This is one concrete instantiation of the abstract value/constraint
//! domain: Erlang-like terms, linear patterns, and guards built from
//! comparisons joined by `and` / `or`. Ordering comparisons between values
//! that are not both integers evaluate to `false`; equality is structural.

pub(crate) mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ident::{Pid, Tag};

pub use parse::{
    parse_constraint_body, parse_guard, parse_pattern, parse_term, parse_term_expr,
};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Int(i64),
    Atom(String),
    Tuple(Vec<Term>),
    List(Vec<Term>),
    Pid(Pid),
    Tag(Tag),
}

impl std::str::FromStr for Term {
    type Err = crate::ParseError;

    fn from_str(text: &str) -> Result<Term, Self::Err> {
        let mut cur = crate::syntax::Cursor::new(text);
        let t = parse_term(&mut cur)?;
        if !cur.at_end() {
            return Err(cur.unexpected(""));
        }
        Ok(t)
    }
}

impl Term {
    pub fn atom(s: &str) -> Term {
        Term::Atom(s.to_string())
    }

    pub fn tuple(items: impl IntoIterator<Item = Term>) -> Term {
        Term::Tuple(items.into_iter().collect())
    }

    pub fn map_names(&self, names: &dyn NameMap) -> Term {
        match self {
            Term::Tuple(xs) => Term::Tuple(xs.iter().map(|x| x.map_names(names)).collect()),
            Term::List(xs) => Term::List(xs.iter().map(|x| x.map_names(names)).collect()),
            Term::Pid(p) => Term::Pid(names.pid(p)),
            Term::Tag(t) => Term::Tag(names.tag(t)),
            other => other.clone(),
        }
    }
}

/// Renaming of pids and tags, used to align traces that differ only in the
/// choice of fresh identifiers.
pub trait NameMap {
    fn pid(&self, pid: &Pid) -> Pid;
    fn tag(&self, tag: &Tag) -> Tag;
}

/// A term tree with variables and wildcards. Variables occur at most once.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pattern {
    Wildcard,
    Var(String),
    Int(i64),
    Atom(String),
    Tuple(Vec<Pattern>),
    List(Vec<Pattern>),
    Pid(Pid),
    Tag(Tag),
}

pub type Substitution = BTreeMap<String, Term>;

impl Pattern {
    pub fn from_term(t: &Term) -> Pattern {
        match t {
            Term::Int(n) => Pattern::Int(*n),
            Term::Atom(a) => Pattern::Atom(a.clone()),
            Term::Tuple(xs) => Pattern::Tuple(xs.iter().map(Pattern::from_term).collect()),
            Term::List(xs) => Pattern::List(xs.iter().map(Pattern::from_term).collect()),
            Term::Pid(p) => Pattern::Pid(p.clone()),
            Term::Tag(l) => Pattern::Tag(l.clone()),
        }
    }

    /// Variables in left-to-right order, with repetitions.
    pub fn variables(&self) -> Vec<&str> {
        fn go<'a>(p: &'a Pattern, out: &mut Vec<&'a str>) {
            match p {
                Pattern::Var(v) => out.push(v),
                Pattern::Tuple(xs) | Pattern::List(xs) => xs.iter().for_each(|x| go(x, out)),
                _ => {}
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// The first variable occurring twice, if any.
    pub fn repeated_variable(&self) -> Option<&str> {
        let mut seen = BTreeSet::new();
        self.variables().into_iter().find(|v| !seen.insert(*v))
    }

    /// Replaces variables bound in `env` by their values.
    pub fn instantiate(&self, env: &Substitution) -> Pattern {
        match self {
            Pattern::Var(v) => env.get(v).map_or_else(|| self.clone(), Pattern::from_term),
            Pattern::Tuple(xs) => Pattern::Tuple(xs.iter().map(|x| x.instantiate(env)).collect()),
            Pattern::List(xs) => Pattern::List(xs.iter().map(|x| x.instantiate(env)).collect()),
            other => other.clone(),
        }
    }

    pub fn map_names(&self, names: &dyn NameMap) -> Pattern {
        match self {
            Pattern::Tuple(xs) => Pattern::Tuple(xs.iter().map(|x| x.map_names(names)).collect()),
            Pattern::List(xs) => Pattern::List(xs.iter().map(|x| x.map_names(names)).collect()),
            Pattern::Pid(p) => Pattern::Pid(names.pid(p)),
            Pattern::Tag(t) => Pattern::Tag(names.tag(t)),
            other => other.clone(),
        }
    }
}

/// Returns the unique substitution `σ` with `pσ = v`, if there is one.
pub fn match_pattern(p: &Pattern, v: &Term) -> Option<Substitution> {
    let mut sub = Substitution::new();
    bind(p, v, &mut sub).then_some(sub)
}

fn bind(p: &Pattern, v: &Term, sub: &mut Substitution) -> bool {
    match (p, v) {
        (Pattern::Wildcard, _) => true,
        (Pattern::Var(x), _) => match sub.get(x) {
            // only reachable for non-linear patterns built by hand
            Some(prev) => prev == v,
            None => {
                sub.insert(x.clone(), v.clone());
                true
            }
        },
        (Pattern::Int(a), Term::Int(b)) => a == b,
        (Pattern::Atom(a), Term::Atom(b)) => a == b,
        (Pattern::Pid(a), Term::Pid(b)) => a == b,
        (Pattern::Tag(a), Term::Tag(b)) => a == b,
        (Pattern::Tuple(ps), Term::Tuple(vs)) | (Pattern::List(ps), Term::List(vs)) => {
            ps.len() == vs.len() && ps.iter().zip(vs).all(|(p, v)| bind(p, v, sub))
        }
        _ => false,
    }
}

/// Term-building expressions: literals, variables, `self`, tuples, lists.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermExpr {
    Lit(Term),
    Var(String),
    SelfPid,
    Tuple(Vec<TermExpr>),
    List(Vec<TermExpr>),
}

impl TermExpr {
    /// Scalars become literals; tuples and lists keep their structure so that
    /// instantiated expressions compare equal to parsed ones.
    pub fn from_term(t: &Term) -> TermExpr {
        match t {
            Term::Tuple(xs) => TermExpr::Tuple(xs.iter().map(TermExpr::from_term).collect()),
            Term::List(xs) => TermExpr::List(xs.iter().map(TermExpr::from_term).collect()),
            other => TermExpr::Lit(other.clone()),
        }
    }

    pub fn eval(&self, env: &Substitution, me: Option<&Pid>) -> Option<Term> {
        Some(match self {
            TermExpr::Lit(t) => t.clone(),
            TermExpr::Var(v) => env.get(v)?.clone(),
            TermExpr::SelfPid => Term::Pid(me?.clone()),
            TermExpr::Tuple(xs) => {
                Term::Tuple(xs.iter().map(|x| x.eval(env, me)).collect::<Option<_>>()?)
            }
            TermExpr::List(xs) => {
                Term::List(xs.iter().map(|x| x.eval(env, me)).collect::<Option<_>>()?)
            }
        })
    }

    pub fn variables(&self) -> Vec<&str> {
        fn go<'a>(e: &'a TermExpr, out: &mut Vec<&'a str>) {
            match e {
                TermExpr::Var(v) => out.push(v),
                TermExpr::Tuple(xs) | TermExpr::List(xs) => xs.iter().for_each(|x| go(x, out)),
                _ => {}
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    pub fn instantiate(&self, env: &Substitution, me: Option<&Pid>) -> TermExpr {
        match self {
            TermExpr::Var(v) => env.get(v).map_or_else(|| self.clone(), TermExpr::from_term),
            TermExpr::SelfPid => match me {
                Some(p) => TermExpr::Lit(Term::Pid(p.clone())),
                None => TermExpr::SelfPid,
            },
            TermExpr::Tuple(xs) => {
                TermExpr::Tuple(xs.iter().map(|x| x.instantiate(env, me)).collect())
            }
            TermExpr::List(xs) => TermExpr::List(xs.iter().map(|x| x.instantiate(env, me)).collect()),
            TermExpr::Lit(_) => self.clone(),
        }
    }

    pub fn map_names(&self, names: &dyn NameMap) -> TermExpr {
        match self {
            TermExpr::Lit(t) => TermExpr::Lit(t.map_names(names)),
            TermExpr::Tuple(xs) => TermExpr::Tuple(xs.iter().map(|x| x.map_names(names)).collect()),
            TermExpr::List(xs) => TermExpr::List(xs.iter().map(|x| x.map_names(names)).collect()),
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "/=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "=<",
            CmpOp::Ge => ">=",
        }
    }

    pub fn apply(self, a: &Term, b: &Term) -> bool {
        match (self, a, b) {
            (CmpOp::Eq, _, _) => a == b,
            (CmpOp::Ne, _, _) => a != b,
            (CmpOp::Lt, Term::Int(x), Term::Int(y)) => x < y,
            (CmpOp::Gt, Term::Int(x), Term::Int(y)) => x > y,
            (CmpOp::Le, Term::Int(x), Term::Int(y)) => x <= y,
            (CmpOp::Ge, Term::Int(x), Term::Int(y)) => x >= y,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Guard {
    True,
    Cmp(CmpOp, TermExpr, TermExpr),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

impl Guard {
    /// Total: unbound variables make a comparison false.
    pub fn eval(&self, sub: &Substitution) -> bool {
        match self {
            Guard::True => true,
            Guard::Cmp(op, a, b) => match (a.eval(sub, None), b.eval(sub, None)) {
                (Some(a), Some(b)) => op.apply(&a, &b),
                _ => false,
            },
            Guard::And(a, b) => a.eval(sub) && b.eval(sub),
            Guard::Or(a, b) => a.eval(sub) || b.eval(sub),
        }
    }

    pub fn variables(&self) -> Vec<&str> {
        match self {
            Guard::True => Vec::new(),
            Guard::Cmp(_, a, b) => {
                let mut v = a.variables();
                v.extend(b.variables());
                v
            }
            Guard::And(a, b) | Guard::Or(a, b) => {
                let mut v = a.variables();
                v.extend(b.variables());
                v
            }
        }
    }

    pub fn uses_self(&self) -> bool {
        fn expr(e: &TermExpr) -> bool {
            match e {
                TermExpr::SelfPid => true,
                TermExpr::Tuple(xs) | TermExpr::List(xs) => xs.iter().any(expr),
                _ => false,
            }
        }
        match self {
            Guard::True => false,
            Guard::Cmp(_, a, b) => expr(a) || expr(b),
            Guard::And(a, b) | Guard::Or(a, b) => a.uses_self() || b.uses_self(),
        }
    }

    pub fn instantiate(&self, env: &Substitution, me: Option<&Pid>) -> Guard {
        match self {
            Guard::True => Guard::True,
            Guard::Cmp(op, a, b) => Guard::Cmp(*op, a.instantiate(env, me), b.instantiate(env, me)),
            Guard::And(a, b) => {
                Guard::And(Box::new(a.instantiate(env, me)), Box::new(b.instantiate(env, me)))
            }
            Guard::Or(a, b) => {
                Guard::Or(Box::new(a.instantiate(env, me)), Box::new(b.instantiate(env, me)))
            }
        }
    }

    pub fn map_names(&self, names: &dyn NameMap) -> Guard {
        match self {
            Guard::True => Guard::True,
            Guard::Cmp(op, a, b) => Guard::Cmp(*op, a.map_names(names), b.map_names(names)),
            Guard::And(a, b) => Guard::And(Box::new(a.map_names(names)), Box::new(b.map_names(names))),
            Guard::Or(a, b) => Guard::Or(Box::new(a.map_names(names)), Box::new(b.map_names(names))),
        }
    }
}

/// One `pattern [when guard]` alternative of a receive statement. Clause
/// bodies are irrelevant to trace analysis and are not stored.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause {
    pub pattern: Pattern,
    pub guard: Guard,
}

impl Clause {
    pub fn new(pattern: Pattern, guard: Guard) -> Clause {
        Clause { pattern, guard }
    }

    pub fn matches(&self, v: &Term) -> Option<Substitution> {
        match_pattern(&self.pattern, v).filter(|sub| self.guard.eval(sub))
    }
}

/// The constraint of a receive statement: an identifier plus an ordered,
/// non-empty list of clauses.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    pub id: String,
    pub clauses: Vec<Clause>,
}

impl Constraint {
    pub fn new(id: impl Into<String>, clauses: Vec<Clause>) -> Constraint {
        assert!(!clauses.is_empty(), "a constraint needs at least one clause");
        Constraint { id: id.into(), clauses }
    }

    /// Parses `cs1: {val,M} when M > 0 -> .; error -> .`.
    pub fn parse(text: &str) -> Result<Constraint, crate::ParseError> {
        let mut cur = crate::syntax::Cursor::new(text);
        let id = cur
            .lower_ident()
            .ok_or_else(|| cur.error("expected constraint id"))?
            .to_string();
        cur.expect(":")?;
        let clauses = parse_constraint_body(&mut cur)?;
        if !cur.at_end() {
            return Err(cur.unexpected(""));
        }
        Ok(Constraint { id, clauses })
    }

    /// Index of the first clause that accepts `v`.
    pub fn matching_clause(&self, v: &Term) -> Option<(usize, Substitution)> {
        self.clauses
            .iter()
            .enumerate()
            .find_map(|(i, c)| c.matches(v).map(|s| (i, s)))
    }

    pub fn matches(&self, v: &Term) -> bool {
        self.matching_clause(v).is_some()
    }

    pub fn same_clauses(&self, other: &Constraint) -> bool {
        self.clauses == other.clauses
    }

    pub fn map_names(&self, names: &dyn NameMap) -> Constraint {
        Constraint {
            id: self.id.clone(),
            clauses: self
                .clauses
                .iter()
                .map(|c| Clause::new(c.pattern.map_names(names), c.guard.map_names(names)))
                .collect(),
        }
    }
}

/// `match(v, cs)`.
pub fn matches(v: &Term, cs: &Constraint) -> bool {
    cs.matches(v)
}

pub fn matching_clause(v: &Term, cs: &Constraint) -> Option<usize> {
    cs.matching_clause(v).map(|(i, _)| i)
}

fn write_seq<T: fmt::Display>(f: &mut fmt::Formatter<'_>, open: &str, xs: &[T], close: &str) -> fmt::Result {
    f.write_str(open)?;
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x}")?;
    }
    f.write_str(close)
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(n) => write!(f, "{n}"),
            Term::Atom(a) => f.write_str(a),
            Term::Tuple(xs) => write_seq(f, "{", xs, "}"),
            Term::List(xs) => write_seq(f, "[", xs, "]"),
            Term::Pid(p) => write!(f, "<{p}>"),
            Term::Tag(t) => write!(f, "<#{t}>"),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Wildcard => f.write_str("_"),
            Pattern::Var(v) => f.write_str(v),
            Pattern::Int(n) => write!(f, "{n}"),
            Pattern::Atom(a) => f.write_str(a),
            Pattern::Tuple(xs) => write_seq(f, "{", xs, "}"),
            Pattern::List(xs) => write_seq(f, "[", xs, "]"),
            Pattern::Pid(p) => write!(f, "<{p}>"),
            Pattern::Tag(t) => write!(f, "<#{t}>"),
        }
    }
}

impl fmt::Display for TermExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermExpr::Lit(t) => write!(f, "{t}"),
            TermExpr::Var(v) => f.write_str(v),
            TermExpr::SelfPid => f.write_str("self"),
            TermExpr::Tuple(xs) => write_seq(f, "{", xs, "}"),
            TermExpr::List(xs) => write_seq(f, "[", xs, "]"),
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::True => f.write_str("true"),
            Guard::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            Guard::Or(a, b) => write!(f, "{a} or {b}"),
            Guard::And(a, b) => {
                let side = |g: &Guard, f: &mut fmt::Formatter<'_>| match g {
                    Guard::Or(..) => write!(f, "({g})"),
                    _ => write!(f, "{g}"),
                };
                side(a, f)?;
                f.write_str(" and ")?;
                side(b, f)
            }
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pattern)?;
        if self.guard != Guard::True {
            write!(f, " when {}", self.guard)?;
        }
        f.write_str(" -> .")
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.id)?;
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term(s: &str) -> Term {
        parse_term(&mut crate::syntax::Cursor::new(s)).unwrap()
    }

    fn pat(s: &str) -> Pattern {
        parse_pattern(&mut crate::syntax::Cursor::new(s)).unwrap()
    }

    fn cs1() -> Constraint {
        Constraint::parse("cs1: {val,M} when M > 0 -> .; error -> .").unwrap()
    }

    #[test]
    fn pattern_binds_variable() {
        let sub = match_pattern(&pat("{val, M}"), &term("{val,1}")).unwrap();
        assert_eq!(sub.get("M"), Some(&Term::Int(1)));
        assert_eq!(sub.len(), 1);
    }

    #[test]
    fn wildcard_matches_anything() {
        for t in ["1", "ok", "{a,[1,2]}", "<p1.2>"] {
            assert_eq!(match_pattern(&Pattern::Wildcard, &term(t)), Some(Substitution::new()));
        }
    }

    #[test]
    fn constructor_mismatch() {
        assert_eq!(match_pattern(&pat("error"), &term("{val,0}")), None);
        assert_eq!(match_pattern(&pat("{a,B}"), &term("{a,1,2}")), None);
        assert_eq!(match_pattern(&pat("[X]"), &term("{1}")), None);
    }

    #[test]
    fn fig1_constraint() {
        let cs = cs1();
        assert!(matches(&term("{val,1}"), &cs));
        assert!(!matches(&term("{val,0}"), &cs));
        assert!(matches(&term("error"), &cs));
        assert_eq!(matching_clause(&term("{val,2}"), &cs), Some(0));
        assert_eq!(matching_clause(&term("error"), &cs), Some(1));
        assert_eq!(matching_clause(&term("{val,0}"), &cs), None);
    }

    #[test]
    fn first_matching_clause_wins() {
        let cs = Constraint::parse("c: {a,X} -> .; {a,1} -> .").unwrap();
        assert_eq!(matching_clause(&term("{a,1}"), &cs), Some(0));
    }

    #[test]
    fn mixed_ordering_is_false() {
        let cs = Constraint::parse("c: {X} when X < 3 -> .").unwrap();
        assert!(!cs.matches(&term("{abc}")));
        assert!(!cs.matches(&term("{<p1>}")));
        assert!(cs.matches(&term("{2}")));
        let ne = Constraint::parse("c: {X} when X /= 1 -> .").unwrap();
        assert!(ne.matches(&term("{one}")));
    }

    #[test]
    fn pid_and_tag_literals_are_distinct_from_atoms() {
        assert_ne!(term("<p1>"), term("p1"));
        assert_ne!(term("<#l1>"), term("l1"));
        assert!(match_pattern(&pat("p1"), &term("<p1>")).is_none());
    }

    #[test]
    fn guard_connectives() {
        let cs = Constraint::parse("c: {X,Y} when X > 0 and (Y == a or Y == b) -> .").unwrap();
        assert!(cs.matches(&term("{1,b}")));
        assert!(!cs.matches(&term("{1,c}")));
        assert!(!cs.matches(&term("{0,a}")));
        assert_eq!(cs.to_string(), "c: {X,Y} when X > 0 and (Y == a or Y == b) -> .");
    }

    #[test]
    fn instantiation_matches_parsed_form() {
        let mut env = Substitution::new();
        env.insert("R".into(), term("{ref,3}"));
        let g = parse_guard(&mut crate::syntax::Cursor::new("X == R")).unwrap();
        let parsed = parse_guard(&mut crate::syntax::Cursor::new("X == {ref,3}")).unwrap();
        assert_eq!(g.instantiate(&env, None), parsed);
        assert_eq!(pat("{R,Y}").instantiate(&env), pat("{{ref,3},Y}"));
    }
}
