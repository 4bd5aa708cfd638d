//! Program syntax.
//!
//! ```text
//! program { main proc1
//!   def proc1() { P2 = spawn proc2(); P3 = spawn proc3(P2); send {val,1} to P2 }
//!   def proc2() { receive { {val,M} when M > 0 -> {ok,M}; error -> error } }
//!   def proc3(P2) { send {val,0} to P2; send {val,2} to P2 } }
//! ```
//!
//! Statements of a definition are separated by `;`, statements of a receive
//! clause body by `,`. A statement is `X = expr` or `expr`, where `expr` is
//! one of `spawn f(args)`, `send e to e`, `receive { clauses }`, a call
//! `f(args)`, or a term built from literals, bound variables and `self`.
//! Variables bound inside a clause body are local to that clause.

use std::collections::BTreeSet;
use std::fmt;

use crate::syntax::{Cursor, PResult, ParseError};
use crate::terms::parse::guard_with;
use crate::terms::{parse_pattern, parse_term_expr, Guard, Pattern, TermExpr};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub main: String,
    /// Definitions in source order.
    pub defs: Vec<Def>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Def {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Bind(String, Expr),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Value(TermExpr),
    Call { fun: String, args: Vec<TermExpr> },
    Spawn { fun: String, args: Vec<TermExpr> },
    Send { msg: TermExpr, to: TermExpr },
    Receive(Vec<RecvClause>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecvClause {
    pub pattern: Pattern,
    pub guard: Guard,
    pub body: Vec<Stmt>,
}

impl Stmt {
    pub fn expr(&self) -> &Expr {
        match self {
            Stmt::Bind(_, e) | Stmt::Expr(e) => e,
        }
    }
}

impl Expr {
    /// Spawn, send and receive are global actions; everything else is local.
    pub fn is_global(&self) -> bool {
        matches!(self, Expr::Spawn { .. } | Expr::Send { .. } | Expr::Receive(_))
    }
}

impl Program {
    pub fn def(&self, name: &str) -> Option<&Def> {
        self.defs.iter().find(|d| d.name == name)
    }
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut cur = Cursor::new(text);
    cur.expect("program")?;
    cur.expect("{")?;
    cur.expect("main")?;
    let main_at = {
        cur.skip_ws();
        cur.pos()
    };
    let main = ident(&mut cur, "a function name")?;
    let mut defs = Vec::new();
    let mut sites = Vec::new();
    while !cur.eat("}") {
        cur.skip_ws();
        let at = cur.pos();
        let def = definition(&mut cur)?;
        if defs.iter().any(|d: &Def| d.name == def.name) {
            return Err(cur.error_at(at, format!("function `{}` is defined twice", def.name)));
        }
        defs.push(def);
        sites.push(at);
    }
    if !cur.at_end() {
        return Err(cur.unexpected(" after the program"));
    }
    let program = Program { main, defs };
    match program.def(&program.main) {
        None => return Err(cur.error_at(main_at, format!("main function `{}` is not defined", program.main))),
        Some(d) if !d.params.is_empty() => {
            return Err(cur.error_at(main_at, format!("main function `{}` must take no arguments", d.name)))
        }
        Some(_) => {}
    }
    for (def, at) in program.defs.iter().zip(sites) {
        let mut scope: BTreeSet<String> = def.params.iter().cloned().collect();
        check_block(&program, &def.body, &mut scope)
            .map_err(|m| cur.error_at(at, format!("in `{}`: {m}", def.name)))?;
    }
    Ok(program)
}

fn ident(cur: &mut Cursor<'_>, what: &str) -> PResult<String> {
    match cur.lower_ident() {
        Some(s) => Ok(s.to_string()),
        None => Err(cur.expected(what)),
    }
}

fn definition(cur: &mut Cursor<'_>) -> PResult<Def> {
    cur.expect("def")?;
    let name = ident(cur, "a function name")?;
    cur.expect("(")?;
    let mut params = Vec::new();
    if !cur.eat(")") {
        loop {
            cur.skip_ws();
            let at = cur.pos();
            let v = cur.variable().ok_or_else(|| cur.expected("a parameter variable"))?;
            if params.iter().any(|p| p == v) {
                return Err(cur.error_at(at, format!("parameter `{v}` is repeated")));
            }
            params.push(v.to_string());
            if cur.eat(")") {
                break;
            }
            cur.expect(",")?;
        }
    }
    cur.expect("{")?;
    let body = if cur.eat("}") {
        Vec::new()
    } else {
        let b = statements(cur, ";")?;
        cur.expect("}")?;
        b
    };
    Ok(Def { name, params, body })
}

fn statements(cur: &mut Cursor<'_>, sep: &str) -> PResult<Vec<Stmt>> {
    let mut out = vec![statement(cur)?];
    while cur.eat(sep) {
        out.push(statement(cur)?);
    }
    Ok(out)
}

fn statement(cur: &mut Cursor<'_>) -> PResult<Stmt> {
    cur.skip_ws();
    let save = cur.pos();
    if let Some(v) = cur.variable() {
        if !cur.looking_at("==") && !cur.looking_at("=<") && cur.eat("=") {
            return Ok(Stmt::Bind(v.to_string(), expr(cur)?));
        }
    }
    cur.reset(save);
    Ok(Stmt::Expr(expr(cur)?))
}

fn args(cur: &mut Cursor<'_>) -> PResult<Vec<TermExpr>> {
    cur.expect("(")?;
    let mut out = Vec::new();
    if cur.eat(")") {
        return Ok(out);
    }
    loop {
        out.push(parse_term_expr(cur, true)?);
        if cur.eat(")") {
            return Ok(out);
        }
        cur.expect(",")?;
    }
}

fn expr(cur: &mut Cursor<'_>) -> PResult<Expr> {
    if cur.eat("spawn") {
        let fun = ident(cur, "a function name")?;
        return Ok(Expr::Spawn { fun, args: args(cur)? });
    }
    if cur.eat("send") {
        let msg = parse_term_expr(cur, true)?;
        cur.expect("to")?;
        let to = parse_term_expr(cur, true)?;
        return Ok(Expr::Send { msg, to });
    }
    if cur.eat("receive") {
        cur.expect("{")?;
        let mut clauses = vec![recv_clause(cur)?];
        while cur.eat(";") {
            clauses.push(recv_clause(cur)?);
        }
        cur.expect("}")?;
        return Ok(Expr::Receive(clauses));
    }
    cur.skip_ws();
    let save = cur.pos();
    if let Some(f) = cur.lower_ident() {
        if cur.rest().starts_with('(') {
            return Ok(Expr::Call { fun: f.to_string(), args: args(cur)? });
        }
    }
    cur.reset(save);
    Ok(Expr::Value(parse_term_expr(cur, true)?))
}

fn recv_clause(cur: &mut Cursor<'_>) -> PResult<RecvClause> {
    cur.skip_ws();
    let at = cur.pos();
    let pattern = parse_pattern(cur)?;
    if let Some(v) = pattern.repeated_variable() {
        return Err(cur.error_at(at, format!("variable `{v}` occurs twice in pattern (patterns must be linear)")));
    }
    let guard = if cur.eat("when") { guard_with(cur, true)? } else { Guard::True };
    cur.expect("->")?;
    let body = statements(cur, ",")?;
    Ok(RecvClause { pattern, guard, body })
}

fn check_exprs<'a>(
    scope: &BTreeSet<String>,
    es: impl IntoIterator<Item = &'a TermExpr>,
) -> Result<(), String> {
    for e in es {
        if let Some(v) = e.variables().into_iter().find(|v| !scope.contains(*v)) {
            return Err(format!("variable `{v}` is unbound"));
        }
    }
    Ok(())
}

fn check_call(p: &Program, kind: &str, fun: &str, n: usize) -> Result<(), String> {
    match p.def(fun) {
        None => Err(format!("{kind} of undefined function `{fun}`")),
        Some(d) if d.params.len() != n => Err(format!(
            "{kind} of `{fun}` with {n} argument(s), but it takes {}",
            d.params.len()
        )),
        Some(_) => Ok(()),
    }
}

fn check_block(p: &Program, body: &[Stmt], scope: &mut BTreeSet<String>) -> Result<(), String> {
    for s in body {
        check_expr(p, s.expr(), scope)?;
        if let Stmt::Bind(v, _) = s {
            if !scope.insert(v.clone()) {
                return Err(format!("variable `{v}` is already bound"));
            }
        }
    }
    Ok(())
}

fn check_expr(p: &Program, e: &Expr, scope: &BTreeSet<String>) -> Result<(), String> {
    match e {
        Expr::Value(t) => check_exprs(scope, [t]),
        Expr::Call { fun, args } => {
            check_call(p, "call", fun, args.len())?;
            check_exprs(scope, args)
        }
        Expr::Spawn { fun, args } => {
            check_call(p, "spawn", fun, args.len())?;
            check_exprs(scope, args)
        }
        Expr::Send { msg, to } => check_exprs(scope, [msg, to]),
        Expr::Receive(clauses) => {
            for c in clauses {
                let mut inner = scope.clone();
                inner.extend(c.pattern.variables().into_iter().map(str::to_string));
                if let Some(v) = c.guard.variables().into_iter().find(|v| !inner.contains(*v)) {
                    return Err(format!("guard variable `{v}` is unbound"));
                }
                check_block(p, &c.body, &mut inner)?;
            }
            Ok(())
        }
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[TermExpr]) -> fmt::Result {
    f.write_str("(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    f.write_str(")")
}

fn write_block(f: &mut fmt::Formatter<'_>, body: &[Stmt], sep: &str) -> fmt::Result {
    for (i, s) in body.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{s}")?;
    }
    Ok(())
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::Bind(v, e) => write!(f, "{v} = {e}"),
            Stmt::Expr(e) => write!(f, "{e}"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Value(t) => write!(f, "{t}"),
            Expr::Call { fun, args } => {
                f.write_str(fun)?;
                write_args(f, args)
            }
            Expr::Spawn { fun, args } => {
                write!(f, "spawn {fun}")?;
                write_args(f, args)
            }
            Expr::Send { msg, to } => write!(f, "send {msg} to {to}"),
            Expr::Receive(clauses) => {
                f.write_str("receive { ")?;
                for (i, c) in clauses.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{}", c.pattern)?;
                    if c.guard != Guard::True {
                        write!(f, " when {}", c.guard)?;
                    }
                    f.write_str(" -> ")?;
                    write_block(f, &c.body, ", ")?;
                }
                f.write_str(" }")
            }
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "program {{ main {}", self.main)?;
        for d in &self.defs {
            write!(f, "\n  def {}({}) {{ ", d.name, d.params.join(", "))?;
            write_block(f, &d.body, "; ")?;
            f.write_str(if d.body.is_empty() { "}" } else { " }" })?;
        }
        f.write_str(" }\n")
    }
}
