//! Recursive-descent parsers for theory files (`.slt`) and proof files
//! (`.slp`).
//!
//! Theory files elaborate as they parse: each declaration is checked against
//! (and added to) the theory built so far, so formulas can only reference
//! symbols already declared — and the parser can tell a nullary function
//! symbol from a variable by looking it up.
//!
//! Proof files are parenthesized prefix trees, one keyword per rule. State
//! formulas are brace-delimited, main-layer and pure formulas
//! bracket-delimited; terms are self-delimiting.

use std::collections::BTreeMap;

use hoare_core::kernel::{Derivation, Theory};
use hoare_core::pl::{PlDerivation, PlFormula};
use hoare_core::statelogic::{Binding, HintSet};
use hoare_core::stlang::StType;
use hoare_core::syntax::{Ident, MainFormula, Mode, Signature, StateFormula, Term, Triple};

use crate::diag::{Diagnostic, Span};
use crate::lex::{lex, Tok, Token};
use crate::surface::{Decl, NamedProof, ProofFile, ProofItem, RPat, TheoryFile};

/// Declaration keywords; these delimit realizer patterns and are not usable
/// as bare pattern identifiers.
const DECL_KEYWORDS: &[&str] = &[
    "theory", "mode", "model", "fun", "pred", "statepred", "const", "atomlimit",
    "haxiom", "saxiom", "defeq", "derivation",
];

struct Cursor<'a> {
    file: &'a str,
    toks: Vec<Token>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(file: &'a str, text: &str) -> Result<Cursor<'a>, Diagnostic> {
        Ok(Cursor { file, toks: lex(file, text)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error(self.file, Some(self.span()), msg)
    }

    fn expected(&self, what: &str) -> Diagnostic {
        self.err(format!("expected {what}, found {}", self.peek()))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), Diagnostic> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.expected(what))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> Result<Ident, Diagnostic> {
        match self.peek() {
            Tok::Ident(s) => {
                let id = Ident::new(s);
                self.bump();
                Ok(id)
            }
            _ => Err(self.expected(what)),
        }
    }

    fn nat(&mut self, what: &str) -> Result<u64, Diagnostic> {
        match self.peek() {
            Tok::Nat(n) => {
                let n = *n;
                self.bump();
                Ok(n)
            }
            _ => Err(self.expected(what)),
        }
    }

    /// True when the next token is this identifier.
    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }
}

// ---------------------------------------------------------------------------
// Terms and formulas

/// A first-order term. Numerals become numeral terms in arithmetic mode and
/// nullary applications of the digit-named symbol otherwise; a lone
/// identifier is a nullary application exactly when the signature declares it
/// as a function symbol, and a variable otherwise.
fn term(cur: &mut Cursor, sig: &Signature) -> Result<Term, Diagnostic> {
    match cur.peek().clone() {
        Tok::Nat(n) => {
            cur.bump();
            Ok(match sig.mode {
                Mode::Sa => Term::num(n),
                Mode::Sl => Term::app(Ident::new(&n.to_string()), vec![]),
            })
        }
        Tok::Ident(s) => {
            let id = Ident::new(&s);
            cur.bump();
            if *cur.peek() == Tok::LParen {
                cur.bump();
                let mut args = vec![term(cur, sig)?];
                while cur.eat(&Tok::Comma) {
                    args.push(term(cur, sig)?);
                }
                cur.expect(Tok::RParen, "`)` after arguments")?;
                Ok(Term::App { f: id, args })
            } else if sig.fun_arity(&id) == Some(0) {
                Ok(Term::app(id, vec![]))
            } else {
                Ok(Term::var(id))
            }
        }
        _ => Err(cur.expected("a term")),
    }
}

/// The atom layer shared by all three formula grammars: a predicate
/// application, or an (in)equation written infix.
enum AtomParts {
    Pred(Ident, Vec<Term>),
    Eq(Term, Term),
    Neq(Term, Term),
}

fn atom(cur: &mut Cursor, sig: &Signature) -> Result<AtomParts, Diagnostic> {
    let at = cur.span();
    let t = term(cur, sig)?;
    if cur.eat(&Tok::Eq) {
        return Ok(AtomParts::Eq(t, term(cur, sig)?));
    }
    if cur.eat(&Tok::Neq) {
        return Ok(AtomParts::Neq(t, term(cur, sig)?));
    }
    match t {
        Term::Var { name } => Ok(AtomParts::Pred(name, vec![])),
        Term::App { f, args } => {
            if args.is_empty() && Term::app(f.clone(), vec![]).as_num().is_some() {
                return Err(Diagnostic::error(
                    cur.file,
                    Some(at),
                    "a numeral is not a formula",
                ));
            }
            Ok(AtomParts::Pred(f, args))
        }
    }
}

/// State formulas: `->` < `\/` < `/\`, all right-associative; `~a` is sugar
/// for `a -> false`.
fn state_formula(cur: &mut Cursor, sig: &Signature) -> Result<StateFormula, Diagnostic> {
    sf_imp(cur, sig)
}

fn sf_imp(cur: &mut Cursor, sig: &Signature) -> Result<StateFormula, Diagnostic> {
    let lhs = sf_or(cur, sig)?;
    if cur.eat(&Tok::Arrow) {
        Ok(StateFormula::imp(lhs, sf_imp(cur, sig)?))
    } else {
        Ok(lhs)
    }
}

fn sf_or(cur: &mut Cursor, sig: &Signature) -> Result<StateFormula, Diagnostic> {
    let lhs = sf_and(cur, sig)?;
    if cur.eat(&Tok::Or) {
        Ok(StateFormula::or(lhs, sf_or(cur, sig)?))
    } else {
        Ok(lhs)
    }
}

fn sf_and(cur: &mut Cursor, sig: &Signature) -> Result<StateFormula, Diagnostic> {
    let lhs = sf_atom(cur, sig)?;
    if cur.eat(&Tok::And) {
        Ok(StateFormula::and(lhs, sf_and(cur, sig)?))
    } else {
        Ok(lhs)
    }
}

fn sf_atom(cur: &mut Cursor, sig: &Signature) -> Result<StateFormula, Diagnostic> {
    if cur.eat_kw("true") {
        return Ok(StateFormula::Top);
    }
    if cur.eat_kw("false") {
        return Ok(StateFormula::Bot);
    }
    if cur.eat(&Tok::Tilde) {
        return Ok(StateFormula::neg(sf_atom(cur, sig)?));
    }
    if cur.eat(&Tok::LParen) {
        let inner = sf_imp(cur, sig)?;
        cur.expect(Tok::RParen, "`)`")?;
        return Ok(inner);
    }
    match atom(cur, sig)? {
        AtomParts::Pred(p, args) => Ok(StateFormula::Atom { p, args }),
        AtomParts::Eq(s, t) => Ok(StateFormula::atom("eq", vec![s, t])),
        AtomParts::Neq(s, t) => Ok(StateFormula::atom("neq", vec![s, t])),
    }
}

/// Main-layer formulas. Implication carries its triple inline
/// (`A => {pre} B {post}`), universals likewise (`all x . {pre} A {post}`),
/// existentials are bare (`ex x . A`).
fn main_formula(cur: &mut Cursor, sig: &Signature) -> Result<MainFormula, Diagnostic> {
    if cur.at_kw("ex") && matches!(cur.peek2(), Tok::Ident(_)) {
        cur.bump();
        let var = cur.ident("a variable")?;
        cur.expect(Tok::Dot, "`.` after the bound variable")?;
        return Ok(MainFormula::exists(var, main_formula(cur, sig)?));
    }
    if cur.at_kw("all") && matches!(cur.peek2(), Tok::Ident(_)) {
        cur.bump();
        let var = cur.ident("a variable")?;
        cur.expect(Tok::Dot, "`.` after the bound variable")?;
        let triple = braced_triple(cur, sig)?;
        return Ok(MainFormula::Forall { var, triple: Box::new(triple) });
    }
    let lhs = mf_or(cur, sig)?;
    if cur.eat(&Tok::DArrow) {
        let triple = braced_triple(cur, sig)?;
        return Ok(MainFormula::Imp { hyp: Box::new(lhs), triple: Box::new(triple) });
    }
    Ok(lhs)
}

fn braced_triple(cur: &mut Cursor, sig: &Signature) -> Result<Triple, Diagnostic> {
    cur.expect(Tok::LBrace, "`{` opening a precondition")?;
    let pre = state_formula(cur, sig)?;
    cur.expect(Tok::RBrace, "`}` closing the precondition")?;
    let body = main_formula(cur, sig)?;
    cur.expect(Tok::LBrace, "`{` opening a postcondition")?;
    let post = state_formula(cur, sig)?;
    cur.expect(Tok::RBrace, "`}` closing the postcondition")?;
    Ok(Triple::new(pre, body, post))
}

fn mf_or(cur: &mut Cursor, sig: &Signature) -> Result<MainFormula, Diagnostic> {
    let lhs = mf_and(cur, sig)?;
    if cur.eat(&Tok::Or) {
        Ok(MainFormula::or(lhs, mf_or(cur, sig)?))
    } else {
        Ok(lhs)
    }
}

fn mf_and(cur: &mut Cursor, sig: &Signature) -> Result<MainFormula, Diagnostic> {
    let lhs = mf_atom(cur, sig)?;
    if cur.eat(&Tok::And) {
        Ok(MainFormula::and(lhs, mf_and(cur, sig)?))
    } else {
        Ok(lhs)
    }
}

fn mf_atom(cur: &mut Cursor, sig: &Signature) -> Result<MainFormula, Diagnostic> {
    if cur.at_kw("true") && !matches!(cur.peek2(), Tok::LParen) {
        cur.bump();
        return Ok(MainFormula::Top);
    }
    if cur.at_kw("false") && !matches!(cur.peek2(), Tok::LParen) {
        cur.bump();
        return Ok(MainFormula::Bot);
    }
    if cur.eat(&Tok::LParen) {
        let inner = main_formula(cur, sig)?;
        cur.expect(Tok::RParen, "`)`")?;
        return Ok(inner);
    }
    match atom(cur, sig)? {
        AtomParts::Pred(p, args) => Ok(MainFormula::Atom { p, args }),
        AtomParts::Eq(s, t) => Ok(MainFormula::eq(s, t)),
        AtomParts::Neq(s, t) => Ok(MainFormula::neq(s, t)),
    }
}

/// Pure predicate-logic formulas: like state formulas plus quantifiers, with
/// unguarded implication.
fn pl_formula(cur: &mut Cursor, sig: &Signature) -> Result<PlFormula, Diagnostic> {
    if cur.at_kw("ex") && matches!(cur.peek2(), Tok::Ident(_)) {
        cur.bump();
        let var = cur.ident("a variable")?;
        cur.expect(Tok::Dot, "`.` after the bound variable")?;
        return Ok(PlFormula::exists(var, pl_formula(cur, sig)?));
    }
    if cur.at_kw("all") && matches!(cur.peek2(), Tok::Ident(_)) {
        cur.bump();
        let var = cur.ident("a variable")?;
        cur.expect(Tok::Dot, "`.` after the bound variable")?;
        return Ok(PlFormula::forall(var, pl_formula(cur, sig)?));
    }
    pf_imp(cur, sig)
}

fn pf_imp(cur: &mut Cursor, sig: &Signature) -> Result<PlFormula, Diagnostic> {
    let lhs = pf_or(cur, sig)?;
    if cur.eat(&Tok::Arrow) {
        Ok(PlFormula::imp(lhs, pf_imp(cur, sig)?))
    } else {
        Ok(lhs)
    }
}

fn pf_or(cur: &mut Cursor, sig: &Signature) -> Result<PlFormula, Diagnostic> {
    let lhs = pf_and(cur, sig)?;
    if cur.eat(&Tok::Or) {
        Ok(PlFormula::or(lhs, pf_or(cur, sig)?))
    } else {
        Ok(lhs)
    }
}

fn pf_and(cur: &mut Cursor, sig: &Signature) -> Result<PlFormula, Diagnostic> {
    let lhs = pf_atom(cur, sig)?;
    if cur.eat(&Tok::And) {
        Ok(PlFormula::and(lhs, pf_and(cur, sig)?))
    } else {
        Ok(lhs)
    }
}

fn pf_atom(cur: &mut Cursor, sig: &Signature) -> Result<PlFormula, Diagnostic> {
    if cur.eat_kw("true") {
        return Ok(PlFormula::Top);
    }
    if cur.eat_kw("false") {
        return Ok(PlFormula::Bot);
    }
    if cur.eat(&Tok::Tilde) {
        return Ok(PlFormula::imp(pf_atom(cur, sig)?, PlFormula::Bot));
    }
    if cur.eat(&Tok::LParen) {
        let inner = pl_formula(cur, sig)?;
        cur.expect(Tok::RParen, "`)`")?;
        return Ok(inner);
    }
    match atom(cur, sig)? {
        AtomParts::Pred(p, args) => Ok(PlFormula::Atom { p, args }),
        AtomParts::Eq(s, t) => Ok(PlFormula::eq(s, t)),
        AtomParts::Neq(s, t) => Ok(PlFormula::neq(s, t)),
    }
}

// ---------------------------------------------------------------------------
// Types and realizer patterns

/// `D`, `C`, sums, products, arrows; every connective associates right, and
/// `->` binds loosest, then `+`, then `*`.
fn st_type(cur: &mut Cursor) -> Result<StType, Diagnostic> {
    let lhs = st_type_sum(cur)?;
    if cur.eat(&Tok::Arrow) {
        Ok(StType::arrow(lhs, st_type(cur)?))
    } else {
        Ok(lhs)
    }
}

fn st_type_sum(cur: &mut Cursor) -> Result<StType, Diagnostic> {
    let lhs = st_type_prod(cur)?;
    if cur.eat(&Tok::Plus) {
        Ok(StType::sum(lhs, st_type_sum(cur)?))
    } else {
        Ok(lhs)
    }
}

fn st_type_prod(cur: &mut Cursor) -> Result<StType, Diagnostic> {
    let lhs = st_type_atom(cur)?;
    if cur.eat(&Tok::Star) {
        Ok(StType::prod(lhs, st_type_prod(cur)?))
    } else {
        Ok(lhs)
    }
}

fn st_type_atom(cur: &mut Cursor) -> Result<StType, Diagnostic> {
    if cur.eat_kw("D") {
        return Ok(StType::D);
    }
    if cur.eat_kw("C") {
        return Ok(StType::C);
    }
    if cur.eat(&Tok::LParen) {
        let inner = st_type(cur)?;
        cur.expect(Tok::RParen, "`)`")?;
        return Ok(inner);
    }
    Err(cur.expected("a type (`D`, `C`, `*`, `->`)"))
}

/// Realizer patterns: `skip`, names, juxtaposed application, parentheses.
/// The chain stops at declaration keywords so the next declaration is not
/// swallowed as an argument.
fn rpat(cur: &mut Cursor) -> Result<RPat, Diagnostic> {
    let mut head = rpat_atom(cur)?;
    loop {
        match cur.peek() {
            Tok::LParen => {}
            Tok::Ident(s) if !DECL_KEYWORDS.contains(&s.as_str()) => {}
            _ => return Ok(head),
        }
        let arg = rpat_atom(cur)?;
        head = RPat::App(Box::new(head), Box::new(arg));
    }
}

fn rpat_atom(cur: &mut Cursor) -> Result<RPat, Diagnostic> {
    if cur.eat(&Tok::LParen) {
        let inner = rpat(cur)?;
        cur.expect(Tok::RParen, "`)`")?;
        return Ok(inner);
    }
    if cur.at_kw("skip") {
        cur.bump();
        return Ok(RPat::Skip);
    }
    Ok(RPat::Name(cur.ident("a realizer pattern")?))
}

// ---------------------------------------------------------------------------
// Theory files

fn builtin_model_mode(name: &str) -> Option<Mode> {
    match name {
        "querysolve" | "swap3" => Some(Mode::Sl),
        "insertsort" => Some(Mode::Sa),
        _ => None,
    }
}

fn base_theory(model: &str) -> Option<Theory> {
    match model {
        "querysolve" => Some(hoare_core::models::querysolve::theory()),
        "swap3" => Some(hoare_core::models::swap3::theory()),
        "insertsort" => Some(hoare_core::models::insertsort::theory()),
        _ => None,
    }
}

/// Parse and elaborate a theory file. Returns both the surface declaration
/// list (for printing) and the elaborated theory.
pub fn parse_theory_file(file: &str, text: &str) -> Result<(TheoryFile, Theory), Diagnostic> {
    let mut cur = Cursor::new(file, text)?;
    let mut decls = Vec::new();
    let mut name: Option<Ident> = None;
    let mut theory: Option<Theory> = None;

    // The theory is created lazily, at the first declaration that extends it;
    // by then the header (`theory`, and `mode` or `model`) must be complete.
    fn need<'t>(
        cur: &Cursor,
        th: &'t mut Option<Theory>,
        name: &Option<Ident>,
        mode: Option<Mode>,
    ) -> Result<&'t mut Theory, Diagnostic> {
        if th.is_none() {
            let name = name
                .clone()
                .ok_or_else(|| cur.err("`theory NAME` must come before other declarations"))?;
            let mode =
                mode.ok_or_else(|| cur.err("declare `mode sl`/`mode sa` (or a `model`) first"))?;
            *th = Some(Theory::new(name, mode));
        }
        Ok(th.as_mut().unwrap())
    }

    let mut mode: Option<Mode> = None;
    while *cur.peek() != Tok::Eof {
        let at = cur.span();
        let kw = cur.ident("a declaration keyword")?;
        match kw.as_str() {
            "theory" => {
                if name.is_some() {
                    return Err(Diagnostic::error(file, Some(at), "duplicate `theory` declaration"));
                }
                let n = cur.ident("the theory name")?;
                name = Some(n.clone());
                if let Some(th) = &mut theory {
                    th.name = n.clone();
                }
                decls.push(Decl::Theory(n));
            }
            "mode" => {
                let m = match cur.ident("`sl` or `sa`")?.as_str() {
                    "sl" => Mode::Sl,
                    "sa" => Mode::Sa,
                    other => {
                        return Err(Diagnostic::error(
                            file,
                            Some(at),
                            format!("unknown mode `{other}` (expected `sl` or `sa`)"),
                        ))
                    }
                };
                if let Some(prev) = mode {
                    if prev != m {
                        return Err(Diagnostic::error(file, Some(at), "conflicting `mode` declarations"));
                    }
                }
                mode = Some(m);
                decls.push(Decl::Mode(m));
            }
            "model" => {
                if theory.is_some() {
                    return Err(Diagnostic::error(
                        file,
                        Some(at),
                        "`model` must come before signature and axiom declarations",
                    ));
                }
                let m = cur.ident("a model name")?;
                let mut base = base_theory(m.as_str()).ok_or_else(|| {
                    Diagnostic::error(
                        file,
                        Some(at),
                        format!("unknown model `{m}` (available: insertsort, querysolve, swap3)"),
                    )
                })?;
                let bmode = builtin_model_mode(m.as_str()).unwrap();
                if let Some(prev) = mode {
                    if prev != bmode {
                        return Err(Diagnostic::error(
                            file,
                            Some(at),
                            format!("model `{m}` is a `{}` model", mode_str(bmode)),
                        ));
                    }
                }
                mode = Some(bmode);
                if let Some(n) = &name {
                    base.name = n.clone();
                }
                theory = Some(base);
                decls.push(Decl::Model(m));
            }
            "fun" => {
                let th = need(&cur, &mut theory, &name, mode)?;
                let name = cur.ident("a function symbol")?;
                let arity = cur.nat("an arity")? as usize;
                th.sig
                    .declare_fun(name.clone(), arity)
                    .map_err(|e| Diagnostic::error(file, Some(at), e.to_string()))?;
                decls.push(Decl::Fun { name, arity });
            }
            "pred" => {
                let th = need(&cur, &mut theory, &name, mode)?;
                let name = cur.ident("a predicate symbol")?;
                let arity = cur.nat("an arity")? as usize;
                th.sig
                    .declare_pred(name.clone(), arity)
                    .map_err(|e| Diagnostic::error(file, Some(at), e.to_string()))?;
                decls.push(Decl::Pred { name, arity });
            }
            "statepred" => {
                let th = need(&cur, &mut theory, &name, mode)?;
                let name = cur.ident("a state predicate symbol")?;
                let arity = cur.nat("an arity")? as usize;
                th.sig
                    .declare_state_pred(name.clone(), arity)
                    .map_err(|e| Diagnostic::error(file, Some(at), e.to_string()))?;
                decls.push(Decl::StatePred { name, arity });
            }
            "const" => {
                let th = need(&cur, &mut theory, &name, mode)?;
                let name = cur.ident("a constant name")?;
                cur.expect(Tok::Colon, "`:` before the constant's type")?;
                let ty = st_type(&mut cur)?;
                th.consts
                    .declare(name.clone(), ty.clone())
                    .map_err(|e| Diagnostic::error(file, Some(at), e.to_string()))?;
                decls.push(Decl::Const { name, ty });
            }
            "atomlimit" => {
                let th = need(&cur, &mut theory, &name, mode)?;
                let n = cur.nat("an atom limit")? as usize;
                th.hconfig.atom_limit = n;
                decls.push(Decl::AtomLimit(n));
            }
            "haxiom" => {
                let th = need(&cur, &mut theory, &name, mode)?;
                let name = cur.ident("an axiom name")?;
                cur.expect(Tok::LParen, "`(` opening the metavariable list")?;
                let metavars = ident_list(&mut cur)?;
                cur.expect(Tok::RParen, "`)`")?;
                cur.expect(Tok::Colon, "`:`")?;
                let mut hyps = Vec::new();
                if *cur.peek() != Tok::Turnstile {
                    hyps.push(state_formula(&mut cur, &th.sig)?);
                    while cur.eat(&Tok::Comma) {
                        hyps.push(state_formula(&mut cur, &th.sig)?);
                    }
                }
                cur.expect(Tok::Turnstile, "`|-` before the conclusion")?;
                let goal = state_formula(&mut cur, &th.sig)?;
                th.add_haxiom(hoare_core::statelogic::HAxiomSchema {
                    name: name.clone(),
                    metavars: metavars.clone(),
                    hyps: hyps.clone(),
                    goal: goal.clone(),
                })
                .map_err(|e| Diagnostic::error(file, Some(at), e.to_string()))?;
                decls.push(Decl::HAxiom { name, metavars, hyps, goal });
            }
            "saxiom" => {
                let th = need(&cur, &mut theory, &name, mode)?;
                let name = cur.ident("an axiom name")?;
                cur.expect(Tok::LParen, "`(` opening the metavariable lists")?;
                let term_metavars = ident_list(&mut cur)?;
                let formula_metavars =
                    if cur.eat(&Tok::Semi) { ident_list(&mut cur)? } else { Vec::new() };
                cur.expect(Tok::RParen, "`)`")?;
                cur.expect(Tok::Colon, "`:`")?;
                // Formula metavariables stand for state formulas and occur in
                // the pre/post patterns as nullary atoms; parse under a
                // scratch signature that declares them so.
                let mut scratch = th.sig.clone();
                for fm in &formula_metavars {
                    scratch
                        .declare_state_pred(fm.clone(), 0)
                        .map_err(|e| Diagnostic::error(file, Some(at), e.to_string()))?;
                }
                cur.expect(Tok::LBrace, "`{` opening the precondition")?;
                let pre = state_formula(&mut cur, &scratch)?;
                cur.expect(Tok::RBrace, "`}`")?;
                let body = main_formula(&mut cur, &th.sig)?;
                cur.expect(Tok::LBrace, "`{` opening the postcondition")?;
                let post = state_formula(&mut cur, &scratch)?;
                cur.expect(Tok::RBrace, "`}`")?;
                if !cur.eat_kw("realizer") {
                    return Err(cur.expected("`realizer`"));
                }
                let pat = rpat(&mut cur)?;
                let program = resolve_rpat(&pat, &term_metavars, th)
                    .map_err(|msg| Diagnostic::error(file, Some(at), msg))?;
                th.add_saxiom(hoare_core::kernel::SAxiomSchema {
                    name: name.clone(),
                    term_metavars: term_metavars.clone(),
                    formula_metavars: formula_metavars.clone(),
                    formula_shape: hoare_core::kernel::FormulaShape::Any,
                    hyps: Vec::new(),
                    pre: pre.clone(),
                    body: body.clone(),
                    post: post.clone(),
                    post_swap: None,
                    realizer: hoare_core::kernel::RealizerSpec::Term(program),
                })
                .map_err(|e| Diagnostic::error(file, Some(at), e.to_string()))?;
                decls.push(Decl::SAxiom {
                    name,
                    term_metavars,
                    formula_metavars,
                    pre,
                    body,
                    post,
                    realizer: pat,
                });
            }
            "defeq" => {
                let th = need(&cur, &mut theory, &name, mode)?;
                let id = cur.ident("an equation name")?;
                cur.expect(Tok::LParen, "`(` opening the parameter list")?;
                let params = ident_list(&mut cur)?;
                cur.expect(Tok::RParen, "`)`")?;
                cur.expect(Tok::Colon, "`:`")?;
                let lhs = term(&mut cur, &th.sig)?;
                cur.expect(Tok::Eq, "`=`")?;
                let rhs = term(&mut cur, &th.sig)?;
                th.add_defeq(hoare_core::kernel::DefEquation {
                    id: id.clone(),
                    params: params.clone(),
                    lhs: lhs.clone(),
                    rhs: rhs.clone(),
                })
                .map_err(|e| Diagnostic::error(file, Some(at), e.to_string()))?;
                decls.push(Decl::DefEq { id, params, lhs, rhs });
            }
            other => {
                return Err(Diagnostic::error(
                    file,
                    Some(at),
                    format!("unknown declaration keyword `{other}`"),
                ))
            }
        }
    }

    let theory = match theory {
        Some(t) => t,
        None => {
            let name = name.ok_or_else(|| cur.err("empty theory file"))?;
            let mode = mode.ok_or_else(|| cur.err("missing `mode` declaration"))?;
            Theory::new(name, mode)
        }
    };
    // Every schema's realizing program must typecheck at the realizability
    // type of its body (built-in models were validated when registered, but a
    // file can add schemas on top).
    hoare_core::models::validate_realizers(&theory)
        .map_err(|e| Diagnostic::error(file, None, e.to_string()))?;
    Ok((TheoryFile { decls }, theory))
}

fn mode_str(m: Mode) -> &'static str {
    match m {
        Mode::Sl => "sl",
        Mode::Sa => "sa",
    }
}

fn ident_list(cur: &mut Cursor) -> Result<Vec<Ident>, Diagnostic> {
    let mut out = Vec::new();
    if matches!(cur.peek(), Tok::Ident(_)) {
        out.push(cur.ident("an identifier")?);
        while cur.eat(&Tok::Comma) {
            out.push(cur.ident("an identifier")?);
        }
    }
    Ok(out)
}

fn resolve_rpat(pat: &RPat, term_metavars: &[Ident], th: &Theory) -> Result<hoare_core::stlang::StTerm, String> {
    use hoare_core::stlang::StTerm;
    match pat {
        RPat::Skip => Ok(StTerm::Skip),
        RPat::Name(id) => {
            if term_metavars.contains(id) {
                Ok(StTerm::var(id.clone()))
            } else if th.consts.lookup(id).is_some() {
                Ok(StTerm::cnst(id.clone()))
            } else if th.sig.fun_arity(id).is_some() {
                Ok(StTerm::fun(id.clone()))
            } else {
                Err(format!(
                    "`{id}` in the realizer is neither a metavariable, a constant, nor a function symbol"
                ))
            }
        }
        RPat::App(f, a) => Ok(StTerm::app(
            resolve_rpat(f, term_metavars, th)?,
            resolve_rpat(a, term_metavars, th)?,
        )),
    }
}

// ---------------------------------------------------------------------------
// Proof files

/// Parse a proof file against its theory.
pub fn parse_proof_file(file: &str, text: &str, theory: &Theory) -> Result<ProofFile, Diagnostic> {
    let mut cur = Cursor::new(file, text)?;
    let mut entries = Vec::new();
    while *cur.peek() != Tok::Eof {
        if !cur.eat_kw("derivation") {
            return Err(cur.expected("`derivation`"));
        }
        let name = cur.ident("a derivation name")?;
        if entries.iter().any(|e: &NamedProof| e.name == name) {
            return Err(cur.err(format!("duplicate derivation `{name}`")));
        }
        let item = proof_item(&mut cur, theory)?;
        entries.push(NamedProof { name, item });
    }
    Ok(ProofFile { entries })
}

fn proof_item(cur: &mut Cursor, th: &Theory) -> Result<ProofItem, Diagnostic> {
    // `(embed {alpha} proof)` wraps a pure proof; anything else is a
    // derivation tree in the triple systems.
    if *cur.peek() == Tok::LParen && matches!(cur.peek2(), Tok::Ident(s) if s == "embed") {
        cur.bump();
        cur.bump();
        let alpha = braced_sf(cur, th)?;
        let proof = pl_derivation(cur, th)?;
        cur.expect(Tok::RParen, "`)` closing `embed`")?;
        return Ok(ProofItem::Embedded { alpha, proof });
    }
    Ok(ProofItem::Direct(derivation(cur, th)?))
}

fn braced_sf(cur: &mut Cursor, th: &Theory) -> Result<StateFormula, Diagnostic> {
    cur.expect(Tok::LBrace, "`{` opening a state formula")?;
    let a = state_formula(cur, &th.sig)?;
    cur.expect(Tok::RBrace, "`}`")?;
    Ok(a)
}

fn bracketed_mf(cur: &mut Cursor, th: &Theory) -> Result<MainFormula, Diagnostic> {
    cur.expect(Tok::LBracket, "`[` opening a formula")?;
    let a = main_formula(cur, &th.sig)?;
    cur.expect(Tok::RBracket, "`]`")?;
    Ok(a)
}

fn bracketed_pf(cur: &mut Cursor, th: &Theory) -> Result<PlFormula, Diagnostic> {
    cur.expect(Tok::LBracket, "`[` opening a formula")?;
    let a = pl_formula(cur, &th.sig)?;
    cur.expect(Tok::RBracket, "`]`")?;
    Ok(a)
}

/// An optional trailing `{outer}` defaults to `true`.
fn opt_outer(cur: &mut Cursor, th: &Theory) -> Result<StateFormula, Diagnostic> {
    if *cur.peek() == Tok::LBrace {
        braced_sf(cur, th)
    } else {
        Ok(StateFormula::Top)
    }
}

fn hints(cur: &mut Cursor, th: &Theory) -> Result<HintSet, Diagnostic> {
    if cur.eat_kw("auto") {
        return Ok(HintSet::auto());
    }
    if *cur.peek() != Tok::LParen {
        return Err(cur.expected("`auto` or `(use ...)`"));
    }
    cur.bump();
    if !cur.eat_kw("use") {
        return Err(cur.expected("`use`"));
    }
    let mut instances = Vec::new();
    while *cur.peek() == Tok::LParen {
        cur.bump();
        let at = cur.span();
        let name = cur.ident("an axiom name")?;
        let schema = th
            .haxioms
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Diagnostic::error(cur.file, Some(at), format!("unknown hypothesis axiom `{name}`")))?;
        let metavars = schema.metavars.clone();
        let mut args = Vec::new();
        while *cur.peek() != Tok::RParen {
            args.push(term(cur, &th.sig)?);
        }
        cur.expect(Tok::RParen, "`)`")?;
        if args.len() != metavars.len() {
            return Err(Diagnostic::error(
                cur.file,
                Some(at),
                format!("`{name}` takes {} metavariable(s), got {}", metavars.len(), args.len()),
            ));
        }
        let binding: Binding = metavars.into_iter().zip(args).collect();
        instances.push((name, binding));
    }
    cur.expect(Tok::RParen, "`)` closing `use`")?;
    Ok(HintSet::with(instances))
}

/// Terms following a schema or equation name, up to the next `{`/`)`.
fn term_args(cur: &mut Cursor, th: &Theory) -> Result<Vec<Term>, Diagnostic> {
    let mut out = Vec::new();
    while matches!(cur.peek(), Tok::Ident(_) | Tok::Nat(_)) {
        out.push(term(cur, &th.sig)?);
    }
    Ok(out)
}

fn derivation(cur: &mut Cursor, th: &Theory) -> Result<Derivation, Diagnostic> {
    cur.expect(Tok::LParen, "`(` opening a rule application")?;
    let at = cur.span();
    let kw = cur.ident("a rule keyword")?;
    let d = match kw.as_str() {
        "hyp" => {
            let label = cur.ident("a hypothesis label")?;
            let state = braced_sf(cur, th)?;
            Derivation::Hyp { label, state }
        }
        "top" => Derivation::TopAx { state: braced_sf(cur, th)? },
        "and_i" => Derivation::AndI {
            left: Box::new(derivation(cur, th)?),
            right: Box::new(derivation(cur, th)?),
        },
        "and_el" => Derivation::AndEL { from: Box::new(derivation(cur, th)?) },
        "and_er" => Derivation::AndER { from: Box::new(derivation(cur, th)?) },
        "or_il" => Derivation::OrIL {
            from: Box::new(derivation(cur, th)?),
            right: bracketed_mf(cur, th)?,
        },
        "or_ir" => Derivation::OrIR {
            left: bracketed_mf(cur, th)?,
            from: Box::new(derivation(cur, th)?),
        },
        "or_e" => Derivation::OrE {
            disj: Box::new(derivation(cur, th)?),
            left_label: cur.ident("the left case label")?,
            left_case: Box::new(derivation(cur, th)?),
            right_label: cur.ident("the right case label")?,
            right_case: Box::new(derivation(cur, th)?),
        },
        "imp_i" => Derivation::ImpI {
            label: cur.ident("a hypothesis label")?,
            hyp: bracketed_mf(cur, th)?,
            premise: Box::new(derivation(cur, th)?),
            outer: opt_outer(cur, th)?,
        },
        "imp_e" => Derivation::ImpE {
            imp: Box::new(derivation(cur, th)?),
            arg: Box::new(derivation(cur, th)?),
        },
        "bot_e" => Derivation::BotE {
            from: Box::new(derivation(cur, th)?),
            target: bracketed_mf(cur, th)?,
            post: braced_sf(cur, th)?,
        },
        "forall_i" => Derivation::ForallI {
            var: cur.ident("the bound variable")?,
            premise: Box::new(derivation(cur, th)?),
            outer: opt_outer(cur, th)?,
        },
        "forall_e" => Derivation::ForallE {
            from: Box::new(derivation(cur, th)?),
            witness: term(cur, &th.sig)?,
        },
        "exists_i" => Derivation::ExistsI {
            witness: term(cur, &th.sig)?,
            var: cur.ident("the bound variable")?,
            template: bracketed_mf(cur, th)?,
            from: Box::new(derivation(cur, th)?),
        },
        "exists_e" => Derivation::ExistsE {
            exists: Box::new(derivation(cur, th)?),
            var: cur.ident("the bound variable")?,
            label: cur.ident("the hypothesis label")?,
            body: Box::new(derivation(cur, th)?),
        },
        "cons" => Derivation::Cons {
            pre: braced_sf(cur, th)?,
            pre_hints: hints(cur, th)?,
            from: Box::new(derivation(cur, th)?),
            post_hints: hints(cur, th)?,
            post: braced_sf(cur, th)?,
        },
        "cond" => Derivation::Cond {
            case_a: braced_sf(cur, th)?,
            case_b: braced_sf(cur, th)?,
            disj_hints: hints(cur, th)?,
            left: Box::new(derivation(cur, th)?),
            right: Box::new(derivation(cur, th)?),
        },
        "sax" => {
            let name = cur.ident("a state-axiom name")?;
            let schema = th.saxiom(&name).ok_or_else(|| {
                Diagnostic::error(cur.file, Some(at), format!("unknown state axiom `{name}`"))
            })?;
            let term_metavars = schema.term_metavars.clone();
            let formula_metavars = schema.formula_metavars.clone();
            let args = term_args(cur, th)?;
            if args.len() != term_metavars.len() {
                return Err(Diagnostic::error(
                    cur.file,
                    Some(at),
                    format!(
                        "`{name}` takes {} term metavariable(s), got {}",
                        term_metavars.len(),
                        args.len()
                    ),
                ));
            }
            let mut formulas = BTreeMap::new();
            let mut fs = Vec::new();
            while *cur.peek() == Tok::LBrace {
                fs.push(braced_sf(cur, th)?);
            }
            if fs.len() != formula_metavars.len() {
                return Err(Diagnostic::error(
                    cur.file,
                    Some(at),
                    format!(
                        "`{name}` takes {} formula metavariable(s), got {}",
                        formula_metavars.len(),
                        fs.len()
                    ),
                ));
            }
            for (mv, f) in formula_metavars.into_iter().zip(fs) {
                formulas.insert(mv, f);
            }
            let terms: Binding = term_metavars.into_iter().zip(args).collect();
            Derivation::SAxiom { name, terms, formulas }
        }
        "eq_refl" => Derivation::EqRefl { term: term(cur, &th.sig)?, state: braced_sf(cur, th)? },
        "eq_sym" => Derivation::EqSym { from: Box::new(derivation(cur, th)?) },
        "eq_trans" => Derivation::EqTrans {
            left: Box::new(derivation(cur, th)?),
            right: Box::new(derivation(cur, th)?),
        },
        "ext" => Derivation::Ext {
            eq: Box::new(derivation(cur, th)?),
            body: Box::new(derivation(cur, th)?),
            var: cur.ident("the abstracted variable")?,
            template: bracketed_mf(cur, th)?,
            post_template: braced_sf(cur, th)?,
        },
        "succ_nonzero" => {
            Derivation::SuccNonzero { term: term(cur, &th.sig)?, state: braced_sf(cur, th)? }
        }
        "succ_inj" => Derivation::SuccInj { from: Box::new(derivation(cur, th)?) },
        "defeq" => {
            let id = cur.ident("an equation name")?;
            let binding = defeq_binding(cur, th, &id, at)?;
            Derivation::DefEq { id, binding, state: braced_sf(cur, th)? }
        }
        "ind" => Derivation::Ind {
            base: Box::new(derivation(cur, th)?),
            var: cur.ident("the induction variable")?,
            label: cur.ident("the hypothesis label")?,
            template: bracketed_mf(cur, th)?,
            step: Box::new(derivation(cur, th)?),
            outer: opt_outer(cur, th)?,
        },
        "while" => Derivation::While {
            var: cur.ident("the counter variable")?,
            label: cur.ident("the invariant label")?,
            hole: cur.ident("the condition's hole variable")?,
            cond: braced_sf(cur, th)?,
            body: Box::new(derivation(cur, th)?),
            exit: Box::new(derivation(cur, th)?),
            zero: Box::new(derivation(cur, th)?),
        },
        "embed" => {
            return Err(Diagnostic::error(
                cur.file,
                Some(at),
                "`embed` may only appear at the top of a named derivation",
            ))
        }
        other => {
            return Err(Diagnostic::error(file_of(cur), Some(at), format!("unknown rule `{other}`")))
        }
    };
    cur.expect(Tok::RParen, "`)` closing the rule application")?;
    Ok(d)
}

fn file_of(cur: &Cursor) -> String {
    cur.file.to_string()
}

fn defeq_binding(cur: &mut Cursor, th: &Theory, id: &Ident, at: Span) -> Result<Binding, Diagnostic> {
    let eq = th
        .defeq(id)
        .ok_or_else(|| Diagnostic::error(cur.file, Some(at), format!("unknown defining equation `{id}`")))?;
    let params = eq.params.clone();
    let args = term_args(cur, th)?;
    if args.len() != params.len() {
        return Err(Diagnostic::error(
            cur.file,
            Some(at),
            format!("`{id}` takes {} parameter(s), got {}", params.len(), args.len()),
        ));
    }
    Ok(params.into_iter().zip(args).collect())
}

fn pl_derivation(cur: &mut Cursor, th: &Theory) -> Result<PlDerivation, Diagnostic> {
    cur.expect(Tok::LParen, "`(` opening a rule application")?;
    let at = cur.span();
    let kw = cur.ident("a rule keyword")?;
    let d = match kw.as_str() {
        "hyp" => PlDerivation::Hyp { label: cur.ident("a hypothesis label")? },
        "top_i" => PlDerivation::TopI,
        "and_i" => PlDerivation::AndI {
            left: Box::new(pl_derivation(cur, th)?),
            right: Box::new(pl_derivation(cur, th)?),
        },
        "and_el" => PlDerivation::AndEL { from: Box::new(pl_derivation(cur, th)?) },
        "and_er" => PlDerivation::AndER { from: Box::new(pl_derivation(cur, th)?) },
        "or_il" => PlDerivation::OrIL {
            from: Box::new(pl_derivation(cur, th)?),
            right: bracketed_pf(cur, th)?,
        },
        "or_ir" => PlDerivation::OrIR {
            left: bracketed_pf(cur, th)?,
            from: Box::new(pl_derivation(cur, th)?),
        },
        "or_e" => PlDerivation::OrE {
            disj: Box::new(pl_derivation(cur, th)?),
            left_label: cur.ident("the left case label")?,
            left_case: Box::new(pl_derivation(cur, th)?),
            right_label: cur.ident("the right case label")?,
            right_case: Box::new(pl_derivation(cur, th)?),
        },
        "imp_i" => PlDerivation::ImpI {
            label: cur.ident("a hypothesis label")?,
            hyp: bracketed_pf(cur, th)?,
            premise: Box::new(pl_derivation(cur, th)?),
        },
        "imp_e" => PlDerivation::ImpE {
            imp: Box::new(pl_derivation(cur, th)?),
            arg: Box::new(pl_derivation(cur, th)?),
        },
        "bot_e" => PlDerivation::BotE {
            from: Box::new(pl_derivation(cur, th)?),
            target: bracketed_pf(cur, th)?,
        },
        "forall_i" => PlDerivation::ForallI {
            var: cur.ident("the bound variable")?,
            premise: Box::new(pl_derivation(cur, th)?),
        },
        "forall_e" => PlDerivation::ForallE {
            from: Box::new(pl_derivation(cur, th)?),
            witness: term(cur, &th.sig)?,
        },
        "exists_i" => PlDerivation::ExistsI {
            witness: term(cur, &th.sig)?,
            var: cur.ident("the bound variable")?,
            template: bracketed_pf(cur, th)?,
            from: Box::new(pl_derivation(cur, th)?),
        },
        "exists_e" => PlDerivation::ExistsE {
            exists: Box::new(pl_derivation(cur, th)?),
            var: cur.ident("the bound variable")?,
            label: cur.ident("the hypothesis label")?,
            body: Box::new(pl_derivation(cur, th)?),
        },
        "eq_refl" => PlDerivation::EqRefl { term: term(cur, &th.sig)? },
        "eq_sym" => PlDerivation::EqSym { from: Box::new(pl_derivation(cur, th)?) },
        "eq_trans" => PlDerivation::EqTrans {
            left: Box::new(pl_derivation(cur, th)?),
            right: Box::new(pl_derivation(cur, th)?),
        },
        "succ_nonzero" => PlDerivation::SuccNonzero { term: term(cur, &th.sig)? },
        "succ_inj" => PlDerivation::SuccInj { from: Box::new(pl_derivation(cur, th)?) },
        "defeq" => {
            let id = cur.ident("an equation name")?;
            let binding = defeq_binding(cur, th, &id, at)?;
            PlDerivation::DefEq { id, binding }
        }
        "ind" => PlDerivation::Ind {
            base: Box::new(pl_derivation(cur, th)?),
            var: cur.ident("the induction variable")?,
            label: cur.ident("the hypothesis label")?,
            template: bracketed_pf(cur, th)?,
            step: Box::new(pl_derivation(cur, th)?),
        },
        "leib" => PlDerivation::Leib {
            eq: Box::new(pl_derivation(cur, th)?),
            body: Box::new(pl_derivation(cur, th)?),
            var: cur.ident("the abstracted variable")?,
            template: bracketed_pf(cur, th)?,
        },
        other => {
            return Err(Diagnostic::error(
                cur.file,
                Some(at),
                format!("unknown pure-proof rule `{other}`"),
            ))
        }
    };
    cur.expect(Tok::RParen, "`)` closing the rule application")?;
    Ok(d)
}

// ---------------------------------------------------------------------------
// Standalone entry points used by tests and commands

/// Parse a single state formula (the whole input).
pub fn parse_state_formula(text: &str, sig: &Signature) -> Result<StateFormula, Diagnostic> {
    let mut cur = Cursor::new("<formula>", text)?;
    let a = state_formula(&mut cur, sig)?;
    cur.expect(Tok::Eof, "end of input")?;
    Ok(a)
}

/// Parse a single main formula (the whole input).
pub fn parse_main_formula(text: &str, sig: &Signature) -> Result<MainFormula, Diagnostic> {
    let mut cur = Cursor::new("<formula>", text)?;
    let a = main_formula(&mut cur, sig)?;
    cur.expect(Tok::Eof, "end of input")?;
    Ok(a)
}

/// Parse a single term (the whole input).
pub fn parse_term(text: &str, sig: &Signature) -> Result<Term, Diagnostic> {
    let mut cur = Cursor::new("<term>", text)?;
    let t = term(&mut cur, sig)?;
    cur.expect(Tok::Eof, "end of input")?;
    Ok(t)
}

/// Parse a single derivation s-expression (the whole input).
pub fn parse_derivation(text: &str, theory: &Theory) -> Result<Derivation, Diagnostic> {
    let mut cur = Cursor::new("<proof>", text)?;
    let d = derivation(&mut cur, theory)?;
    cur.expect(Tok::Eof, "end of input")?;
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hoare_core::syntax::StateFormula as SF;

    fn sl_sig() -> Signature {
        let mut sig = Signature::new(Mode::Sl);
        sig.declare_pred(Ident::new("P"), 2).unwrap();
        sig.declare_state_pred(Ident::new("stored"), 1).unwrap();
        sig.declare_state_pred(Ident::new("ok"), 0).unwrap();
        sig.declare_fun(Ident::new("c"), 0).unwrap();
        sig
    }

    #[test]
    fn precedence_matches_the_printer() {
        let sig = sl_sig();
        let a = parse_state_formula("ok /\\ ok \\/ ok -> ok", &sig).unwrap();
        assert_eq!(
            a,
            SF::imp(SF::or(SF::and(SF::atom("ok", vec![]), SF::atom("ok", vec![])), SF::atom("ok", vec![])), SF::atom("ok", vec![]))
        );
        // Round through the display form.
        let b = parse_state_formula(&a.to_string(), &sig).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nullary_funs_resolve_as_constants() {
        let sig = sl_sig();
        assert_eq!(parse_term("c", &sig).unwrap(), Term::app("c", vec![]));
        assert_eq!(parse_term("x", &sig).unwrap(), Term::var("x"));
    }

    #[test]
    fn numerals_follow_the_mode() {
        let sl = sl_sig();
        assert_eq!(parse_term("3", &sl).unwrap(), Term::app("3", vec![]));
        let sa = Signature::new(Mode::Sa);
        assert_eq!(parse_term("3", &sa).unwrap(), Term::num(3));
        assert_eq!(parse_term("succ(0)", &sa).unwrap(), Term::num(1));
    }

    #[test]
    fn negation_is_implication_to_false() {
        let sig = sl_sig();
        assert_eq!(
            parse_state_formula("~ok", &sig).unwrap(),
            SF::imp(SF::atom("ok", vec![]), SF::Bot)
        );
    }

    #[test]
    fn guarded_implication_and_quantifiers() {
        let sig = sl_sig();
        let a = parse_main_formula("all x . {true} ex y . P(x, y) {true}", &sig).unwrap();
        match &a {
            MainFormula::Forall { var, triple } => {
                assert_eq!(var.as_str(), "x");
                assert!(matches!(triple.body, MainFormula::Exists { .. }));
            }
            other => panic!("unexpected parse: {other:?}"),
        }
        let b = parse_main_formula(&a.to_string(), &sig).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_formula_reports_position() {
        let sig = sl_sig();
        let err = parse_state_formula("ok /\\", &sig).unwrap_err();
        assert!(err.span.is_some());
        assert!(err.message.contains("expected a term"));
    }

    #[test]
    fn theory_header_is_required_first() {
        let err = parse_theory_file("t.slt", "fun f 2").unwrap_err();
        assert!(err.message.contains("`theory NAME`"), "{}", err.message);
    }

    #[test]
    fn duplicate_declaration_is_rejected() {
        let text = "theory t\nmode sl\nstatepred stored 1\nstatepred stored 2\n";
        let err = parse_theory_file("t.slt", text).unwrap_err();
        assert!(err.message.contains("stored"), "{}", err.message);
    }

    #[test]
    fn model_theories_load_and_rename() {
        let (ast, th) = parse_theory_file("t.slt", "theory sort3\nmodel swap3\n").unwrap();
        assert_eq!(ast.decls.len(), 2);
        assert_eq!(th.name.as_str(), "sort3");
        assert!(th.saxiom(&Ident::new("swap")).is_some());
    }

    #[test]
    fn totality_style_haxiom_parses() {
        let text = "theory t\nmode sl\nstatepred le 2\nhaxiom tot(l, l'): |- le(l, l') \\/ le(l', l)\n";
        let (_, th) = parse_theory_file("t.slt", text).unwrap();
        let ax = &th.haxioms[0];
        assert_eq!(ax.metavars.len(), 2);
        assert!(ax.hyps.is_empty());
        assert!(matches!(ax.goal, SF::Or { .. }));
    }

    #[test]
    fn saxiom_with_formula_metavar_parses() {
        let text = "theory t\nmode sl\nstatepred stored 1\nconst store_it : C\n\
                    saxiom put(x; A): {A} true {stored(x)} realizer store_it\n";
        let (_, th) = parse_theory_file("t.slt", text).unwrap();
        let schema = th.saxiom(&Ident::new("put")).unwrap();
        assert_eq!(schema.term_metavars.len(), 1);
        assert_eq!(schema.formula_metavars.len(), 1);
    }

    #[test]
    fn ill_typed_realizer_is_rejected() {
        // The body's realizability type is C, but the pattern has a D -> C
        // constant applied to nothing well-typed at D... just use the bare
        // unapplied constant.
        let text = "theory t\nmode sl\nstatepred stored 1\nconst put : D -> C\n\
                    saxiom bad(x; ): {true} true {stored(x)} realizer put\n";
        let err = parse_theory_file("t.slt", text).unwrap_err();
        assert!(err.message.contains("put") || err.message.contains("type"), "{}", err.message);
    }

    #[test]
    fn derivation_keywords_parse() {
        let (_, th) = parse_theory_file("t.slt", "theory rw\nmodel querysolve\n").unwrap();
        let d = parse_derivation(
            "(forall_i x (and_er (and_i (and_er (and_i (sax store x {true}) (sax solve x))) (sax answer x))))",
            &th,
        )
        .unwrap();
        let seq = hoare_core::kernel::check(&d, &th).unwrap();
        assert!(seq.ctx.entries().is_empty());
    }

    #[test]
    fn missing_branch_is_an_arity_error() {
        let (_, th) = parse_theory_file("t.slt", "theory s\nmodel swap3\n").unwrap();
        let err = parse_derivation("(cond {le(2, 3)} {le(3, 2)} auto (top {true}))", &th).unwrap_err();
        assert!(err.message.contains("expected `(`"), "{}", err.message);
    }

    #[test]
    fn embed_parses_to_a_pure_proof() {
        let text = "theory t\nmode sl\npred Q 0\n";
        let (_, th) = parse_theory_file("t.slt", text).unwrap();
        let pf = parse_proof_file(
            "p.slp",
            "derivation ident (embed {true} (imp_i u [Q] (hyp u)))",
            &th,
        )
        .unwrap();
        assert_eq!(pf.entries.len(), 1);
        assert!(matches!(pf.entries[0].item, ProofItem::Embedded { .. }));
    }
}
