//! Reader for the textual domain/problem format and the grounder that turns
//! a parsed pair into a [`PposProblem`].
//!
//! The grammar is a contingent-planning dialect of typed STRIPS
//! s-expressions: `:action` blocks with `:precondition`, `:effect` (with
//! `when` for conditional effects) and an `:observe` clause; `:init` admits
//! `and`, `or`, `oneof` and `not`. Comments run from `;` to end of line.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::formula::{literals_consistent, Formula, Literal, PropId};
use crate::model::{Action, CondEffect, PposProblem};

pub const UNTYPED: &str = "object";

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("semantic error: {0}")]
    Semantic(String),
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum GroundError {
    #[error(
        "inconsistent effects in action `{action}`: ({cond_a} => {eff_a}) conflicts with ({cond_b} => {eff_b})"
    )]
    Consistency {
        action: String,
        cond_a: String,
        eff_a: String,
        cond_b: String,
        eff_b: String,
    },
    #[error("semantic error while grounding: {0}")]
    Semantic(String),
}

// ---------------------------------------------------------------------------
// AST

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedVar {
    pub name: String,
    pub ty: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedVar>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedAtom {
    pub pred: String,
    pub args: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedLiteral {
    pub atom: LiftedAtom,
    pub negated: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedEffect {
    pub condition: Vec<LiftedLiteral>,
    pub effect: LiftedLiteral,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedVar>,
    pub precondition: Vec<LiftedLiteral>,
    pub effects: Vec<LiftedEffect>,
    pub observes: Vec<LiftedAtom>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedDomain {
    pub name: String,
    pub types: Vec<String>,
    pub predicates: Vec<PredicateDecl>,
    pub actions: Vec<ActionSchema>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InitFormula {
    Lit(LiftedLiteral),
    And(Vec<InitFormula>),
    Or(Vec<InitFormula>),
    OneOf(Vec<LiftedLiteral>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedProblem {
    pub name: String,
    pub domain: String,
    pub objects: Vec<(String, String)>,
    pub init: InitFormula,
    pub goal: Vec<LiftedLiteral>,
}

// ---------------------------------------------------------------------------
// S-expression reader

#[derive(Clone, Debug)]
enum Sexp {
    Sym(String, u32, u32),
    List(Vec<Sexp>, u32, u32),
}

impl Sexp {
    fn loc(&self) -> (u32, u32) {
        match self {
            Sexp::Sym(_, l, c) | Sexp::List(_, l, c) => (*l, *c),
        }
    }
}

struct Reader<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Reader<'a> {
    fn new(src: &'a str) -> Self {
        Reader {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let ch = *self.src.get(self.pos)?;
        self.pos += 1;
        if ch == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(ch)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(b';') => {
                    while let Some(ch) = self.bump() {
                        if ch == b'\n' {
                            break;
                        }
                    }
                }
                Some(ch) if ch.is_ascii_whitespace() => {
                    self.bump();
                }
                _ => return,
            }
        }
    }

    fn read_all(&mut self) -> Result<Vec<Sexp>, ParseError> {
        let mut forms = Vec::new();
        loop {
            self.skip_trivia();
            if self.peek().is_none() {
                return Ok(forms);
            }
            forms.push(self.read_form()?);
        }
    }

    fn read_form(&mut self) -> Result<Sexp, ParseError> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => {
                            return Err(ParseError::Syntax {
                                line,
                                col,
                                msg: "unclosed form".into(),
                            })
                        }
                        Some(b')') => {
                            self.bump();
                            return Ok(Sexp::List(items, line, col));
                        }
                        _ => items.push(self.read_form()?),
                    }
                }
            }
            Some(b')') => Err(self.err("unexpected `)`")),
            Some(_) => {
                let mut sym = Vec::new();
                while let Some(ch) = self.peek() {
                    if ch.is_ascii_whitespace() || ch == b'(' || ch == b')' || ch == b';' {
                        break;
                    }
                    sym.push(ch);
                    self.bump();
                }
                Ok(Sexp::Sym(
                    String::from_utf8_lossy(&sym).into_owned(),
                    line,
                    col,
                ))
            }
        }
    }
}

fn syntax(sexp: &Sexp, msg: impl Into<String>) -> ParseError {
    let (line, col) = sexp.loc();
    ParseError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

fn expect_sym<'s>(sexp: &'s Sexp, what: &str) -> Result<&'s str, ParseError> {
    match sexp {
        Sexp::Sym(s, _, _) => Ok(s),
        _ => Err(syntax(sexp, format!("expected {what}, found a list"))),
    }
}

fn expect_list<'s>(sexp: &'s Sexp, what: &str) -> Result<&'s [Sexp], ParseError> {
    match sexp {
        Sexp::List(items, _, _) => Ok(items),
        Sexp::Sym(s, _, _) => Err(syntax(sexp, format!("expected {what}, found `{s}`"))),
    }
}

// ---------------------------------------------------------------------------
// Parsing proper

/// Parse a domain/problem pair and run the cross-reference checks: every
/// atom resolves a declared predicate with matching arity, every variable is
/// bound, every object has a declared type.
pub fn parse(
    domain_text: &str,
    problem_text: &str,
) -> Result<(LiftedDomain, LiftedProblem), ParseError> {
    let domain = parse_domain(domain_text)?;
    let problem = parse_problem(problem_text)?;
    validate(&domain, &problem)?;
    Ok((domain, problem))
}

pub fn parse_domain(text: &str) -> Result<LiftedDomain, ParseError> {
    for form in Reader::new(text).read_all()? {
        if let Some(d) = interpret_domain(&form)? {
            return Ok(d);
        }
    }
    Err(ParseError::Syntax {
        line: 1,
        col: 1,
        msg: "no (define (domain ...)) form found".into(),
    })
}

pub fn parse_problem(text: &str) -> Result<LiftedProblem, ParseError> {
    for form in Reader::new(text).read_all()? {
        if let Some(p) = interpret_problem(&form)? {
            return Ok(p);
        }
    }
    Err(ParseError::Syntax {
        line: 1,
        col: 1,
        msg: "no (define (problem ...)) form found".into(),
    })
}

type DefineParts<'s> = (&'s str, &'s str, &'s [Sexp]);

fn define_kind(form: &Sexp) -> Result<Option<DefineParts<'_>>, ParseError> {
    let items = match form {
        Sexp::List(items, _, _) => items,
        _ => return Err(syntax(form, "expected a (define ...) form")),
    };
    match items.first() {
        Some(Sexp::Sym(s, _, _)) if s == "define" => {}
        _ => return Ok(None),
    }
    let head = items
        .get(1)
        .ok_or_else(|| syntax(form, "define needs a (domain N) or (problem N) head"))?;
    let head_items = expect_list(head, "(domain N) or (problem N)")?;
    if head_items.len() != 2 {
        return Err(syntax(head, "expected (domain N) or (problem N)"));
    }
    let kind = expect_sym(&head_items[0], "domain/problem keyword")?;
    let name = expect_sym(&head_items[1], "name")?;
    Ok(Some((kind, name, &items[2..])))
}

fn interpret_domain(form: &Sexp) -> Result<Option<LiftedDomain>, ParseError> {
    let (kind, name, body) = match define_kind(form)? {
        Some(x) => x,
        None => return Ok(None),
    };
    if kind != "domain" {
        return Ok(None);
    }
    let mut domain = LiftedDomain {
        name: name.to_string(),
        types: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };
    for item in body {
        let items = expect_list(item, "a domain clause")?;
        let head = expect_sym(
            items
                .first()
                .ok_or_else(|| syntax(item, "empty domain clause"))?,
            "a clause keyword",
        )?;
        match head {
            ":types" => {
                for t in &items[1..] {
                    domain.types.push(expect_sym(t, "a type name")?.to_string());
                }
            }
            ":predicates" => {
                for p in &items[1..] {
                    let decl = expect_list(p, "a predicate declaration")?;
                    let name = expect_sym(
                        decl.first().ok_or_else(|| syntax(p, "empty predicate"))?,
                        "a predicate name",
                    )?;
                    let params = parse_typed_vars(&decl[1..], p)?;
                    domain.predicates.push(PredicateDecl {
                        name: name.to_string(),
                        params,
                    });
                }
            }
            ":action" => domain.actions.push(parse_action(items, item)?),
            other => return Err(syntax(item, format!("unknown domain clause `{other}`"))),
        }
    }
    Ok(Some(domain))
}

fn parse_typed_vars(items: &[Sexp], ctx: &Sexp) -> Result<Vec<TypedVar>, ParseError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut iter = items.iter().peekable();
    while let Some(item) = iter.next() {
        let sym = expect_sym(item, "a variable or `-`")?;
        if sym == "-" {
            let ty = expect_sym(
                iter.next()
                    .ok_or_else(|| syntax(ctx, "dangling `-` in typed list"))?,
                "a type name",
            )?;
            for name in pending.drain(..) {
                out.push(TypedVar {
                    name,
                    ty: ty.to_string(),
                });
            }
        } else {
            pending.push(sym.to_string());
        }
    }
    for name in pending {
        out.push(TypedVar {
            name,
            ty: UNTYPED.to_string(),
        });
    }
    Ok(out)
}

fn parse_action(items: &[Sexp], ctx: &Sexp) -> Result<ActionSchema, ParseError> {
    let name = expect_sym(
        items
            .get(1)
            .ok_or_else(|| syntax(ctx, ":action needs a name"))?,
        "an action name",
    )?;
    let mut schema = ActionSchema {
        name: name.to_string(),
        params: Vec::new(),
        precondition: Vec::new(),
        effects: Vec::new(),
        observes: Vec::new(),
    };
    let mut i = 2;
    while i < items.len() {
        let key = expect_sym(&items[i], "an action clause keyword")?;
        let value = items
            .get(i + 1)
            .ok_or_else(|| syntax(&items[i], format!("`{key}` needs a value")))?;
        match key {
            ":parameters" => {
                schema.params = parse_typed_vars(expect_list(value, "a parameter list")?, value)?;
            }
            ":precondition" => schema.precondition = parse_literal_conj(value)?,
            ":effect" => schema.effects = parse_effect(value)?,
            ":observe" => schema.observes = parse_observe(value)?,
            other => {
                return Err(syntax(
                    &items[i],
                    format!("unknown action clause `{other}`"),
                ))
            }
        }
        i += 2;
    }
    Ok(schema)
}

fn parse_atom(sexp: &Sexp) -> Result<LiftedAtom, ParseError> {
    let items = expect_list(sexp, "an atom")?;
    let pred = expect_sym(
        items.first().ok_or_else(|| syntax(sexp, "empty atom"))?,
        "a predicate name",
    )?;
    let mut args = Vec::new();
    for a in &items[1..] {
        args.push(expect_sym(a, "an atom argument")?.to_string());
    }
    Ok(LiftedAtom {
        pred: pred.to_string(),
        args,
    })
}

fn parse_literal(sexp: &Sexp) -> Result<LiftedLiteral, ParseError> {
    let items = expect_list(sexp, "a literal")?;
    match items.first() {
        Some(Sexp::Sym(s, _, _)) if s == "not" => {
            if items.len() != 2 {
                return Err(syntax(sexp, "`not` takes exactly one atom"));
            }
            Ok(LiftedLiteral {
                atom: parse_atom(&items[1])?,
                negated: true,
            })
        }
        _ => Ok(LiftedLiteral {
            atom: parse_atom(sexp)?,
            negated: false,
        }),
    }
}

/// A single literal or an `(and ...)` of literals.
fn parse_literal_conj(sexp: &Sexp) -> Result<Vec<LiftedLiteral>, ParseError> {
    let items = expect_list(sexp, "a condition")?;
    match items.first() {
        Some(Sexp::Sym(s, _, _)) if s == "and" => items[1..].iter().map(parse_literal).collect(),
        _ => Ok(vec![parse_literal(sexp)?]),
    }
}

fn parse_effect(sexp: &Sexp) -> Result<Vec<LiftedEffect>, ParseError> {
    let mut out = Vec::new();
    parse_effect_into(sexp, &mut out)?;
    Ok(out)
}

fn parse_effect_into(sexp: &Sexp, out: &mut Vec<LiftedEffect>) -> Result<(), ParseError> {
    let items = expect_list(sexp, "an effect")?;
    match items.first() {
        Some(Sexp::Sym(s, _, _)) if s == "and" => {
            for item in &items[1..] {
                parse_effect_into(item, out)?;
            }
            Ok(())
        }
        Some(Sexp::Sym(s, _, _)) if s == "when" => {
            if items.len() != 3 {
                return Err(syntax(sexp, "`when` takes a condition and an effect"));
            }
            let condition = parse_literal_conj(&items[1])?;
            for lit in parse_literal_conj(&items[2])? {
                out.push(LiftedEffect {
                    condition: condition.clone(),
                    effect: lit,
                });
            }
            Ok(())
        }
        _ => {
            out.push(LiftedEffect {
                condition: Vec::new(),
                effect: parse_literal(sexp)?,
            });
            Ok(())
        }
    }
}

/// `:observe (p ...)` or `:observe (and (p ...) (q ...))`.
fn parse_observe(sexp: &Sexp) -> Result<Vec<LiftedAtom>, ParseError> {
    let items = expect_list(sexp, "an observation clause")?;
    match items.first() {
        Some(Sexp::Sym(s, _, _)) if s == "and" => items[1..].iter().map(parse_atom).collect(),
        _ => Ok(vec![parse_atom(sexp)?]),
    }
}

fn interpret_problem(form: &Sexp) -> Result<Option<LiftedProblem>, ParseError> {
    let (kind, name, body) = match define_kind(form)? {
        Some(x) => x,
        None => return Ok(None),
    };
    if kind != "problem" {
        return Ok(None);
    }
    let mut domain = None;
    let mut objects = Vec::new();
    let mut init = None;
    let mut goal = Vec::new();
    for item in body {
        let items = expect_list(item, "a problem clause")?;
        let head = expect_sym(
            items
                .first()
                .ok_or_else(|| syntax(item, "empty problem clause"))?,
            "a clause keyword",
        )?;
        match head {
            ":domain" => {
                domain = Some(
                    expect_sym(
                        items
                            .get(1)
                            .ok_or_else(|| syntax(item, ":domain needs a name"))?,
                        "a domain name",
                    )?
                    .to_string(),
                );
            }
            ":objects" => {
                for tv in parse_typed_vars(&items[1..], item)? {
                    objects.push((tv.name, tv.ty));
                }
            }
            ":init" => {
                if items.len() != 2 {
                    return Err(syntax(item, ":init takes exactly one formula"));
                }
                init = Some(parse_init_formula(&items[1])?);
            }
            ":goal" => {
                if items.len() != 2 {
                    return Err(syntax(item, ":goal takes exactly one conjunction"));
                }
                goal = parse_literal_conj(&items[1])?;
            }
            other => return Err(syntax(item, format!("unknown problem clause `{other}`"))),
        }
    }
    Ok(Some(LiftedProblem {
        name: name.to_string(),
        domain: domain
            .ok_or_else(|| syntax(form, "problem is missing its (:domain ...) clause"))?,
        objects,
        init: init.ok_or_else(|| syntax(form, "problem is missing its (:init ...) clause"))?,
        goal,
    }))
}

fn parse_init_formula(sexp: &Sexp) -> Result<InitFormula, ParseError> {
    let items = expect_list(sexp, "an init formula")?;
    match items.first() {
        Some(Sexp::Sym(s, _, _)) if s == "and" => Ok(InitFormula::And(
            items[1..]
                .iter()
                .map(parse_init_formula)
                .collect::<Result<_, _>>()?,
        )),
        Some(Sexp::Sym(s, _, _)) if s == "or" => Ok(InitFormula::Or(
            items[1..]
                .iter()
                .map(parse_init_formula)
                .collect::<Result<_, _>>()?,
        )),
        Some(Sexp::Sym(s, _, _)) if s == "oneof" => Ok(InitFormula::OneOf(
            items[1..]
                .iter()
                .map(parse_literal)
                .collect::<Result<_, _>>()?,
        )),
        _ => Ok(InitFormula::Lit(parse_literal(sexp)?)),
    }
}

// ---------------------------------------------------------------------------
// Cross-reference validation

fn validate(domain: &LiftedDomain, problem: &LiftedProblem) -> Result<(), ParseError> {
    let mut types: Vec<&str> = domain.types.iter().map(|s| s.as_str()).collect();
    types.push(UNTYPED);
    let preds: BTreeMap<&str, usize> = domain
        .predicates
        .iter()
        .map(|p| (p.name.as_str(), p.params.len()))
        .collect();

    if problem.domain != domain.name {
        return Err(ParseError::Semantic(format!(
            "problem `{}` references domain `{}`, but the domain is `{}`",
            problem.name, problem.domain, domain.name
        )));
    }
    for p in &domain.predicates {
        for tv in &p.params {
            if !types.contains(&tv.ty.as_str()) {
                return Err(ParseError::Semantic(format!(
                    "predicate `{}` uses undeclared type `{}`",
                    p.name, tv.ty
                )));
            }
        }
    }
    for (obj, ty) in &problem.objects {
        if !types.contains(&ty.as_str()) {
            return Err(ParseError::Semantic(format!(
                "object `{obj}` has undeclared type `{ty}`"
            )));
        }
    }
    let objects: Vec<&str> = problem.objects.iter().map(|(o, _)| o.as_str()).collect();

    let check_atom = |atom: &LiftedAtom, bound: &[&str], ctx: &str| -> Result<(), ParseError> {
        match preds.get(atom.pred.as_str()) {
            None => Err(ParseError::Semantic(format!(
                "undeclared predicate `{}` in {ctx}",
                atom.pred
            ))),
            Some(&arity) if arity != atom.args.len() => Err(ParseError::Semantic(format!(
                "predicate `{}` takes {arity} arguments, got {} in {ctx}",
                atom.pred,
                atom.args.len()
            ))),
            Some(_) => {
                for arg in &atom.args {
                    if let Some(var) = arg.strip_prefix('?') {
                        if !bound.contains(&var) && !bound.contains(&arg.as_str()) {
                            return Err(ParseError::Semantic(format!(
                                "unbound variable `{arg}` in {ctx}"
                            )));
                        }
                    } else if !objects.contains(&arg.as_str()) {
                        return Err(ParseError::Semantic(format!(
                            "undeclared object `{arg}` in {ctx}"
                        )));
                    }
                }
                Ok(())
            }
        }
    };

    for schema in &domain.actions {
        for tv in &schema.params {
            if !types.contains(&tv.ty.as_str()) {
                return Err(ParseError::Semantic(format!(
                    "action `{}` uses undeclared type `{}`",
                    schema.name, tv.ty
                )));
            }
        }
        let bound: Vec<&str> = schema.params.iter().map(|p| p.name.as_str()).collect();
        let ctx = format!("action `{}`", schema.name);
        for l in &schema.precondition {
            check_atom(&l.atom, &bound, &ctx)?;
        }
        for e in &schema.effects {
            for l in &e.condition {
                check_atom(&l.atom, &bound, &ctx)?;
            }
            check_atom(&e.effect.atom, &bound, &ctx)?;
        }
        for a in &schema.observes {
            check_atom(a, &bound, &ctx)?;
        }
    }

    let check_init = |f: &InitFormula| -> Result<(), ParseError> {
        let mut stack = vec![f];
        while let Some(f) = stack.pop() {
            match f {
                InitFormula::Lit(l) => check_atom(&l.atom, &[], ":init")?,
                InitFormula::And(kids) | InitFormula::Or(kids) => stack.extend(kids.iter()),
                InitFormula::OneOf(lits) => {
                    for l in lits {
                        check_atom(&l.atom, &[], ":init")?;
                    }
                }
            }
        }
        Ok(())
    };
    check_init(&problem.init)?;
    for l in &problem.goal {
        check_atom(&l.atom, &[], ":goal")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Pretty printing (canonical form; parse(print(ast)) == ast)

fn print_typed_vars(out: &mut String, vars: &[TypedVar]) {
    for (i, tv) in vars.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&tv.name);
        out.push_str(" - ");
        out.push_str(&tv.ty);
    }
}

fn print_atom(out: &mut String, atom: &LiftedAtom) {
    out.push('(');
    out.push_str(&atom.pred);
    for a in &atom.args {
        out.push(' ');
        out.push_str(a);
    }
    out.push(')');
}

fn print_literal(out: &mut String, lit: &LiftedLiteral) {
    if lit.negated {
        out.push_str("(not ");
        print_atom(out, &lit.atom);
        out.push(')');
    } else {
        print_atom(out, &lit.atom);
    }
}

fn print_literal_conj(out: &mut String, lits: &[LiftedLiteral]) {
    out.push_str("(and");
    for l in lits {
        out.push(' ');
        print_literal(out, l);
    }
    out.push(')');
}

pub fn print_domain(domain: &LiftedDomain) -> String {
    let mut out = String::new();
    out.push_str(&format!("(define (domain {})\n", domain.name));
    if !domain.types.is_empty() {
        out.push_str("  (:types");
        for t in &domain.types {
            out.push(' ');
            out.push_str(t);
        }
        out.push_str(")\n");
    }
    out.push_str("  (:predicates");
    for p in &domain.predicates {
        out.push_str("\n    (");
        out.push_str(&p.name);
        if !p.params.is_empty() {
            out.push(' ');
            print_typed_vars(&mut out, &p.params);
        }
        out.push(')');
    }
    out.push_str(")\n");
    for a in &domain.actions {
        out.push_str(&format!("  (:action {}\n", a.name));
        out.push_str("    :parameters (");
        print_typed_vars(&mut out, &a.params);
        out.push_str(")\n");
        out.push_str("    :precondition ");
        print_literal_conj(&mut out, &a.precondition);
        out.push('\n');
        out.push_str("    :effect (and");
        for e in &a.effects {
            out.push(' ');
            if e.condition.is_empty() {
                print_literal(&mut out, &e.effect);
            } else {
                out.push_str("(when ");
                print_literal_conj(&mut out, &e.condition);
                out.push(' ');
                print_literal(&mut out, &e.effect);
                out.push(')');
            }
        }
        out.push(')');
        if !a.observes.is_empty() {
            out.push_str("\n    :observe (and");
            for o in &a.observes {
                out.push(' ');
                print_atom(&mut out, o);
            }
            out.push(')');
        }
        out.push_str(")\n");
    }
    out.push_str(")\n");
    out
}

fn print_init_formula(out: &mut String, f: &InitFormula) {
    match f {
        InitFormula::Lit(l) => print_literal(out, l),
        InitFormula::And(kids) => {
            out.push_str("(and");
            for k in kids {
                out.push(' ');
                print_init_formula(out, k);
            }
            out.push(')');
        }
        InitFormula::Or(kids) => {
            out.push_str("(or");
            for k in kids {
                out.push(' ');
                print_init_formula(out, k);
            }
            out.push(')');
        }
        InitFormula::OneOf(lits) => {
            out.push_str("(oneof");
            for l in lits {
                out.push(' ');
                print_literal(out, l);
            }
            out.push(')');
        }
    }
}

pub fn print_problem(problem: &LiftedProblem) -> String {
    let mut out = String::new();
    out.push_str(&format!("(define (problem {})\n", problem.name));
    out.push_str(&format!("  (:domain {})\n", problem.domain));
    out.push_str("  (:objects");
    for (o, ty) in &problem.objects {
        out.push(' ');
        out.push_str(o);
        out.push_str(" - ");
        out.push_str(ty);
    }
    out.push_str(")\n  (:init ");
    print_init_formula(&mut out, &problem.init);
    out.push_str(")\n  (:goal ");
    print_literal_conj(&mut out, &problem.goal);
    out.push_str(")\n)\n");
    out
}

// ---------------------------------------------------------------------------
// Grounding

struct Grounder<'a> {
    objects_by_type: BTreeMap<&'a str, Vec<&'a str>>,
    prop_names: Vec<String>,
    prop_index: BTreeMap<String, PropId>,
}

fn ground_atom_name(pred: &str, args: &[&str]) -> String {
    if args.is_empty() {
        pred.to_string()
    } else {
        let mut s = String::from(pred);
        for a in args {
            s.push('-');
            s.push_str(a);
        }
        s
    }
}

impl<'a> Grounder<'a> {
    fn new(domain: &'a LiftedDomain, problem: &'a LiftedProblem) -> Self {
        let mut objects_by_type: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (obj, ty) in &problem.objects {
            objects_by_type
                .entry(ty.as_str())
                .or_default()
                .push(obj.as_str());
        }
        // Lexicographic object ordering makes grounding deterministic.
        for objs in objects_by_type.values_mut() {
            objs.sort_unstable();
        }
        let mut g = Grounder {
            objects_by_type,
            prop_names: Vec::new(),
            prop_index: BTreeMap::new(),
        };
        for pred in &domain.predicates {
            let domains: Vec<&[&str]> = pred
                .params
                .iter()
                .map(|tv| {
                    g.objects_by_type
                        .get(tv.ty.as_str())
                        .map(|v| v.as_slice())
                        .unwrap_or(&[])
                })
                .collect();
            for combo in cartesian(&domains) {
                let name = ground_atom_name(&pred.name, &combo);
                let id = PropId(g.prop_names.len() as u32);
                g.prop_names.push(name.clone());
                g.prop_index.insert(name, id);
            }
        }
        g
    }

    fn resolve(
        &self,
        atom: &LiftedAtom,
        bindings: &BTreeMap<&str, &str>,
    ) -> Result<PropId, GroundError> {
        let args: Vec<&str> = atom
            .args
            .iter()
            .map(|a| {
                if a.starts_with('?') {
                    bindings.get(a.as_str()).copied().ok_or_else(|| {
                        GroundError::Semantic(format!("unbound variable `{a}` in `{}`", atom.pred))
                    })
                } else {
                    Ok(a.as_str())
                }
            })
            .collect::<Result<_, _>>()?;
        let name = ground_atom_name(&atom.pred, &args);
        self.prop_index
            .get(&name)
            .copied()
            .ok_or_else(|| GroundError::Semantic(format!("unknown ground atom `{name}`")))
    }

    fn resolve_literal(
        &self,
        lit: &LiftedLiteral,
        bindings: &BTreeMap<&str, &str>,
    ) -> Result<Literal, GroundError> {
        Ok(Literal {
            prop: self.resolve(&lit.atom, bindings)?,
            negated: lit.negated,
        })
    }
}

fn cartesian<'s>(domains: &[&[&'s str]]) -> Vec<Vec<&'s str>> {
    let mut out = vec![Vec::new()];
    for d in domains {
        let mut next = Vec::with_capacity(out.len() * d.len());
        for combo in &out {
            for item in *d {
                let mut c = combo.clone();
                c.push(*item);
                next.push(c);
            }
        }
        out = next;
    }
    out
}

/// Instantiate all schemas over the typed objects, prune statically-false
/// conditional effects, run the pairwise effect-consistency check, and split
/// actions that both change the world and observe into an effect action
/// followed by a sensing action.
pub fn ground(domain: &LiftedDomain, problem: &LiftedProblem) -> Result<PposProblem, GroundError> {
    let g = Grounder::new(domain, problem);
    let mut actions: Vec<Action> = Vec::new();

    for schema in &domain.actions {
        let domains: Vec<&[&str]> = schema
            .params
            .iter()
            .map(|tv| {
                g.objects_by_type
                    .get(tv.ty.as_str())
                    .map(|v| v.as_slice())
                    .unwrap_or(&[])
            })
            .collect();
        for combo in cartesian(&domains) {
            let bindings: BTreeMap<&str, &str> = schema
                .params
                .iter()
                .zip(combo.iter())
                .map(|(tv, obj)| (tv.name.as_str(), *obj))
                .collect();
            let name = ground_atom_name(&schema.name, &combo);
            let pre: Vec<Literal> = schema
                .precondition
                .iter()
                .map(|l| g.resolve_literal(l, &bindings))
                .collect::<Result<_, _>>()?;
            if !literals_consistent(&pre) {
                continue; // never executable
            }
            let mut effects: Vec<CondEffect> = Vec::new();
            for e in &schema.effects {
                let condition: Vec<Literal> = e
                    .condition
                    .iter()
                    .map(|l| g.resolve_literal(l, &bindings))
                    .collect::<Result<_, _>>()?;
                let effect = g.resolve_literal(&e.effect, &bindings)?;
                // Statically-false conditions can never trigger.
                let mut joint = condition.clone();
                joint.extend(pre.iter().copied());
                if !literals_consistent(&joint) {
                    continue;
                }
                let ce = CondEffect { condition, effect };
                if !effects.contains(&ce) {
                    effects.push(ce);
                }
            }
            let mut obs: Vec<PropId> = schema
                .observes
                .iter()
                .map(|a| g.resolve(a, &bindings))
                .collect::<Result<_, _>>()?;
            obs.sort();
            obs.dedup();

            check_consistency(&name, &pre, &effects)?;

            if !effects.is_empty() && !obs.is_empty() {
                // Normalization: effect action first, then a sensing action.
                // The sensing half keeps only the precondition literals the
                // effect half cannot have invalidated.
                let written: Vec<PropId> = effects.iter().map(|e| e.effect.prop).collect();
                let sense_pre: Vec<Literal> = pre
                    .iter()
                    .copied()
                    .filter(|l| !written.contains(&l.prop))
                    .collect();
                actions.push(Action {
                    name: name.clone(),
                    pre,
                    effects,
                    obs: Vec::new(),
                });
                actions.push(Action {
                    name: format!("{name}-obs"),
                    pre: sense_pre,
                    effects: Vec::new(),
                    obs,
                });
            } else {
                actions.push(Action {
                    name,
                    pre,
                    effects,
                    obs,
                });
            }
        }
    }

    let init = ground_init(&g, &problem.init)?;
    let goal: Vec<Literal> = problem
        .goal
        .iter()
        .map(|l| g.resolve_literal(l, &BTreeMap::new()))
        .collect::<Result<_, _>>()?;

    Ok(PposProblem {
        prop_names: g.prop_names,
        actions,
        init,
        goal,
    })
}

fn check_consistency(
    name: &str,
    pre: &[Literal],
    effects: &[CondEffect],
) -> Result<(), GroundError> {
    for (i, a) in effects.iter().enumerate() {
        for b in &effects[i + 1..] {
            if a.effect.prop == b.effect.prop && a.effect.negated != b.effect.negated {
                let mut joint: Vec<Literal> = a.condition.clone();
                joint.extend(b.condition.iter().copied());
                joint.extend(pre.iter().copied());
                if literals_consistent(&joint) {
                    return Err(GroundError::Consistency {
                        action: name.to_string(),
                        cond_a: format!("{:?}", a.condition),
                        eff_a: format!("{:?}", a.effect),
                        cond_b: format!("{:?}", b.condition),
                        eff_b: format!("{:?}", b.effect),
                    });
                }
            }
        }
    }
    Ok(())
}

fn ground_init(g: &Grounder, f: &InitFormula) -> Result<Formula, GroundError> {
    let empty = BTreeMap::new();
    Ok(match f {
        InitFormula::Lit(l) => Formula::Lit(g.resolve_literal(l, &empty)?),
        InitFormula::And(kids) => Formula::conj(
            kids.iter()
                .map(|k| ground_init(g, k))
                .collect::<Result<_, _>>()?,
        ),
        InitFormula::Or(kids) => Formula::disj(
            kids.iter()
                .map(|k| ground_init(g, k))
                .collect::<Result<_, _>>()?,
        ),
        InitFormula::OneOf(lits) => {
            let lits: Vec<Literal> = lits
                .iter()
                .map(|l| g.resolve_literal(l, &empty))
                .collect::<Result<_, _>>()?;
            let mut props: Vec<PropId> = lits.iter().map(|l| l.prop).collect();
            props.sort();
            props.dedup();
            if props.len() != lits.len() {
                return Err(GroundError::Semantic(
                    "oneof group mentions a proposition twice".into(),
                ));
            }
            Formula::OneOf(lits)
        }
    })
}
