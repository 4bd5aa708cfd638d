use std::collections::BTreeSet;

use super::{Clause, CmpOp, Guard, Pattern, Term, TermExpr};
use crate::ident::{Pid, Tag};
use crate::syntax::{Cursor, PResult};

fn pid_or_tag_literal(cur: &mut Cursor<'_>) -> PResult<Term> {
    cur.expect("<")?;
    let tag = cur.eat("#");
    let (at, name) = cur
        .name_token()
        .ok_or_else(|| cur.error("expected a pid or tag name"))?;
    let t = if tag {
        Term::Tag(Tag::parse(name).ok_or_else(|| cur.error_at(at, format!("malformed tag `{name}`")))?)
    } else {
        Term::Pid(Pid::parse(name).ok_or_else(|| cur.error_at(at, format!("malformed pid `{name}`")))?)
    };
    cur.expect(">")?;
    Ok(t)
}

fn sequence<T>(
    cur: &mut Cursor<'_>,
    close: &str,
    mut item: impl FnMut(&mut Cursor<'_>) -> PResult<T>,
) -> PResult<Vec<T>> {
    let mut out = Vec::new();
    if cur.eat(close) {
        return Ok(out);
    }
    loop {
        out.push(item(cur)?);
        if cur.eat(close) {
            return Ok(out);
        }
        cur.expect(",")?;
    }
}

pub fn parse_term(cur: &mut Cursor<'_>) -> PResult<Term> {
    if let Some(n) = cur.integer()? {
        return Ok(Term::Int(n));
    }
    if let Some(a) = cur.lower_ident() {
        return Ok(Term::Atom(a.to_string()));
    }
    if cur.eat("{") {
        return Ok(Term::Tuple(sequence(cur, "}", parse_term)?));
    }
    if cur.eat("[") {
        return Ok(Term::List(sequence(cur, "]", parse_term)?));
    }
    if cur.looking_at("<") {
        return pid_or_tag_literal(cur);
    }
    Err(cur.expected("a term"))
}

pub fn parse_pattern(cur: &mut Cursor<'_>) -> PResult<Pattern> {
    if let Some(v) = cur.variable() {
        return Ok(Pattern::Var(v.to_string()));
    }
    if cur.eat("_") {
        return Ok(Pattern::Wildcard);
    }
    if cur.eat("{") {
        return Ok(Pattern::Tuple(sequence(cur, "}", parse_pattern)?));
    }
    if cur.eat("[") {
        return Ok(Pattern::List(sequence(cur, "]", parse_pattern)?));
    }
    match parse_term(cur) {
        Ok(t) => Ok(Pattern::from_term(&t)),
        Err(_) => Err(cur.expected("a pattern")),
    }
}

/// `allow_self` enables the `self` keyword (program text only).
pub fn parse_term_expr(cur: &mut Cursor<'_>, allow_self: bool) -> PResult<TermExpr> {
    if let Some(v) = cur.variable() {
        return Ok(TermExpr::Var(v.to_string()));
    }
    if allow_self && cur.eat("self") {
        return Ok(TermExpr::SelfPid);
    }
    if cur.eat("{") {
        return Ok(TermExpr::Tuple(sequence(cur, "}", |c| parse_term_expr(c, allow_self))?));
    }
    if cur.eat("[") {
        return Ok(TermExpr::List(sequence(cur, "]", |c| parse_term_expr(c, allow_self))?));
    }
    match parse_term(cur) {
        Ok(t) => Ok(TermExpr::Lit(t)),
        Err(_) => Err(cur.expected("an expression")),
    }
}

fn cmp_op(cur: &mut Cursor<'_>) -> Option<CmpOp> {
    // longest operators first
    for (s, op) in [
        ("==", CmpOp::Eq),
        ("/=", CmpOp::Ne),
        ("=<", CmpOp::Le),
        (">=", CmpOp::Ge),
        ("<", CmpOp::Lt),
        (">", CmpOp::Gt),
    ] {
        if cur.eat(s) {
            return Some(op);
        }
    }
    None
}

pub fn parse_guard(cur: &mut Cursor<'_>) -> PResult<Guard> {
    guard_with(cur, false)
}

pub(crate) fn guard_with(cur: &mut Cursor<'_>, allow_self: bool) -> PResult<Guard> {
    let mut g = conjunction(cur, allow_self)?;
    while cur.eat("orelse") || cur.eat("or") {
        g = Guard::Or(Box::new(g), Box::new(conjunction(cur, allow_self)?));
    }
    Ok(g)
}

fn conjunction(cur: &mut Cursor<'_>, allow_self: bool) -> PResult<Guard> {
    let mut g = guard_atom(cur, allow_self)?;
    while cur.eat("andalso") || cur.eat("and") {
        g = Guard::And(Box::new(g), Box::new(guard_atom(cur, allow_self)?));
    }
    Ok(g)
}

fn guard_atom(cur: &mut Cursor<'_>, allow_self: bool) -> PResult<Guard> {
    if cur.eat("(") {
        let g = guard_with(cur, allow_self)?;
        cur.expect(")")?;
        return Ok(g);
    }
    let save = cur.pos();
    if cur.eat("true") && cmp_op(&mut *cur).is_none() {
        return Ok(Guard::True);
    }
    cur.reset(save);
    let lhs = parse_term_expr(cur, allow_self)?;
    let op = cmp_op(cur).ok_or_else(|| {
        let next = cur.describe_next();
        cur.error(format!("expected a comparison operator, found {next}"))
    })?;
    let rhs = parse_term_expr(cur, allow_self)?;
    Ok(Guard::Cmp(op, lhs, rhs))
}

/// `pattern [when guard] -> . (; pattern [when guard] -> .)*`, checking
/// linearity and that guards only mention pattern variables.
pub fn parse_constraint_body(cur: &mut Cursor<'_>) -> PResult<Vec<Clause>> {
    let mut clauses = Vec::new();
    loop {
        let at = {
            cur.skip_ws();
            cur.pos()
        };
        let pattern = parse_pattern(cur)?;
        if let Some(v) = pattern.repeated_variable() {
            return Err(cur.error_at(at, format!("variable `{v}` occurs twice in pattern (patterns must be linear)")));
        }
        let guard = if cur.eat("when") { parse_guard(cur)? } else { Guard::True };
        let bound: BTreeSet<&str> = pattern.variables().into_iter().collect();
        if let Some(v) = guard.variables().into_iter().find(|v| !bound.contains(v)) {
            return Err(cur.error_at(at, format!("guard variable `{v}` does not occur in the pattern")));
        }
        cur.expect("->")?;
        cur.expect(".")?;
        clauses.push(Clause::new(pattern, guard));
        if !cur.eat(";") {
            return Ok(clauses);
        }
    }
}
