//! The trusted proof checker. A [`Derivation`] is a tree of rule applications
//! carrying just enough instantiation data (witness terms, eigenvariables,
//! target formulas, schema bindings) that every node's conclusion can be
//! *computed*; nothing is taken on faith from the proof author. `check`
//! reconstructs the conclusion bottom-up, enforcing the state-matching and
//! eigenvariable side conditions of each rule verbatim, and discharging the
//! classical side obligations of `cons`/`cond` through the state-logic oracle.
//!
//! Pre/post state formulas are compared syntactically (numerals are already
//! structural, so no extra normalization happens here); main formulas are
//! compared up to alpha-equality. No implicit `⊢_H` reasoning is applied —
//! where a proof needs a consequence step, it says so with a `Cons` node.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::statelogic::{
    check_h_or_fail, Binding, CheckHConfig, HAxiomSchema, HintSet, StateLogicError, StateSequent,
};
use crate::stlang::{ConstTable, StTerm};
use crate::syntax::{
    alpha_eq, Context, Ident, MainFormula, Mode, Signature, StateFormula, SyntaxError, Term,
    Triple,
};

/// A named theory: the symbols, axiom schemas, defining equations, and the
/// state model the whole development is read against.
#[derive(Clone, Debug)]
pub struct Theory {
    pub name: Ident,
    pub sig: Signature,
    pub consts: ConstTable,
    pub haxioms: Vec<HAxiomSchema>,
    pub saxioms: Vec<SAxiomSchema>,
    pub defeqs: Vec<DefEquation>,
    pub model: Option<Ident>,
    pub hconfig: CheckHConfig,
}

impl Theory {
    pub fn new(name: impl Into<Ident>, mode: Mode) -> Theory {
        Theory {
            name: name.into(),
            sig: Signature::new(mode),
            consts: ConstTable::new(),
            haxioms: Vec::new(),
            saxioms: Vec::new(),
            defeqs: Vec::new(),
            model: None,
            hconfig: CheckHConfig::default(),
        }
    }

    pub fn saxiom(&self, name: &Ident) -> Option<&SAxiomSchema> {
        self.saxioms.iter().find(|s| &s.name == name)
    }

    pub fn defeq(&self, id: &Ident) -> Option<&DefEquation> {
        self.defeqs.iter().find(|e| &e.id == id)
    }

    pub fn add_haxiom(&mut self, ax: HAxiomSchema) -> Result<(), KernelError> {
        if self.haxioms.iter().any(|h| h.name == ax.name) {
            return Err(KernelError::Syntax(SyntaxError::Duplicate { name: ax.name }));
        }
        // Metavariables read as ordinary variables, so the signature check
        // validates predicate symbols and arities without special handling.
        for h in &ax.hyps {
            self.sig.check_state_formula(h)?;
        }
        self.sig.check_state_formula(&ax.goal)?;
        self.haxioms.push(ax);
        Ok(())
    }

    pub fn add_saxiom(&mut self, ax: SAxiomSchema) -> Result<(), KernelError> {
        if self.saxioms.iter().any(|s| s.name == ax.name) {
            return Err(KernelError::Syntax(SyntaxError::Duplicate { name: ax.name }));
        }
        ax.validate(&self.sig)?;
        self.saxioms.push(ax);
        Ok(())
    }

    pub fn add_defeq(&mut self, eq: DefEquation) -> Result<(), KernelError> {
        if self.defeqs.iter().any(|e| e.id == eq.id) {
            return Err(KernelError::Syntax(SyntaxError::Duplicate { name: eq.id }));
        }
        let mut fv = eq.lhs.free_var_set();
        fv.extend(eq.rhs.free_var_set());
        for v in fv {
            if !eq.params.contains(&v) {
                return Err(KernelError::DefEqFreeVar { id: eq.id.clone(), var: v });
            }
        }
        self.sig.check_term(&eq.lhs)?;
        self.sig.check_term(&eq.rhs)?;
        self.defeqs.push(eq);
        Ok(())
    }
}

/// A defining equation of a declared (primitive-recursive) function symbol,
/// e.g. `plus(x, succ(y)) = succ(plus(x, y))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefEquation {
    pub id: Ident,
    pub params: Vec<Ident>,
    pub lhs: Term,
    pub rhs: Term,
}

/// How a state-axiom schema's realizing program is produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RealizerSpec {
    /// A program pattern; term metavariables occur as program variables and
    /// are replaced by the interpreted bound terms.
    Term(StTerm),
    /// A constant named after the two bound locations of the schema's swap,
    /// canonically ordered (`swap_1_2` for either orientation).
    SwapConst,
}

/// Restriction on what a formula metavariable may be instantiated with.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FormulaShape {
    Any,
    /// A conjunction (any association) of `pred(loc, loc')` atoms over the
    /// given location terms.
    ConjAtoms { pred: Ident, locations: Vec<Term> },
}

/// Occurrence swap applied to the instantiated postcondition: every occurrence
/// of the term bound to `l` becomes the term bound to `l2` and vice versa.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PostSwap {
    pub l: Ident,
    pub l2: Ident,
    pub locations: Vec<Term>,
}

/// An axiom schema of the main layer: a triple pattern over term and formula
/// metavariables, holding under any hypothesis context (plus optional required
/// hypothesis patterns), together with its realizing program.
#[derive(Clone, Debug)]
pub struct SAxiomSchema {
    pub name: Ident,
    pub term_metavars: Vec<Ident>,
    pub formula_metavars: Vec<Ident>,
    pub formula_shape: FormulaShape,
    pub hyps: Vec<MainFormula>,
    pub pre: StateFormula,
    pub body: MainFormula,
    pub post: StateFormula,
    pub post_swap: Option<PostSwap>,
    pub realizer: RealizerSpec,
}

impl SAxiomSchema {
    fn validate(&self, sig: &Signature) -> Result<(), KernelError> {
        let mut seen = BTreeSet::new();
        for m in self.term_metavars.iter().chain(&self.formula_metavars) {
            if !seen.insert(m.clone()) {
                return Err(KernelError::Syntax(SyntaxError::Duplicate { name: m.clone() }));
            }
        }
        if let Some(swap) = &self.post_swap {
            for v in [&swap.l, &swap.l2] {
                if !self.term_metavars.contains(v) {
                    return Err(KernelError::SchemaMetavar {
                        schema: self.name.clone(),
                        var: v.clone(),
                    });
                }
            }
        }
        if matches!(self.realizer, RealizerSpec::SwapConst) && self.post_swap.is_none() {
            return Err(KernelError::SchemaMetavar {
                schema: self.name.clone(),
                var: Ident::new("swap"),
            });
        }
        // Patterns must be well-formed with formula metavariables read as
        // nullary state atoms; extend a scratch signature accordingly.
        let mut scratch = sig.clone();
        for fm in &self.formula_metavars {
            scratch
                .declare_state_pred(fm.clone(), 0)
                .map_err(KernelError::Syntax)?;
        }
        scratch.check_state_formula(&self.pre)?;
        scratch.check_state_formula(&self.post)?;
        sig.check_main_formula(&self.body)?;
        for h in &self.hyps {
            sig.check_main_formula(h)?;
        }
        Ok(())
    }
}

/// Swap all occurrences of two terms inside a formula's atom arguments.
fn swap_occurrences(a: &StateFormula, l: &Term, l2: &Term) -> StateFormula {
    fn swap_term(t: &Term, l: &Term, l2: &Term) -> Term {
        if t == l {
            return l2.clone();
        }
        if t == l2 {
            return l.clone();
        }
        match t {
            Term::Var { .. } => t.clone(),
            Term::App { f, args } => Term::App {
                f: f.clone(),
                args: args.iter().map(|a| swap_term(a, l, l2)).collect(),
            },
        }
    }
    match a {
        StateFormula::Top | StateFormula::Bot => a.clone(),
        StateFormula::Atom { p, args } => StateFormula::Atom {
            p: p.clone(),
            args: args.iter().map(|t| swap_term(t, l, l2)).collect(),
        },
        StateFormula::And { lhs, rhs } => {
            StateFormula::and(swap_occurrences(lhs, l, l2), swap_occurrences(rhs, l, l2))
        }
        StateFormula::Or { lhs, rhs } => {
            StateFormula::or(swap_occurrences(lhs, l, l2), swap_occurrences(rhs, l, l2))
        }
        StateFormula::Imp { lhs, rhs } => {
            StateFormula::imp(swap_occurrences(lhs, l, l2), swap_occurrences(rhs, l, l2))
        }
    }
}

fn conj_of_atoms(
    a: &StateFormula,
    pred: &Ident,
    locations: &[Term],
) -> bool {
    match a {
        StateFormula::Atom { p, args } => {
            p == pred && args.len() == 2 && args.iter().all(|t| locations.contains(t))
        }
        StateFormula::And { lhs, rhs } => {
            conj_of_atoms(lhs, pred, locations) && conj_of_atoms(rhs, pred, locations)
        }
        _ => false,
    }
}

/// A fully instantiated state axiom: its triple, required hypotheses, and
/// realizing program.
#[derive(Clone, Debug)]
pub struct SAxiomInstance {
    pub hyps: Vec<MainFormula>,
    pub triple: Triple,
    pub realizer: StTerm,
}

/// Instantiate a state-axiom schema with term and formula bindings.
pub fn instantiate_saxiom(
    schema: &SAxiomSchema,
    terms: &Binding,
    formulas: &BTreeMap<Ident, StateFormula>,
    sig: &Signature,
) -> Result<SAxiomInstance, KernelError> {
    for m in &schema.term_metavars {
        if !terms.contains_key(m) {
            return Err(KernelError::SchemaUnbound { schema: schema.name.clone(), var: m.clone() });
        }
    }
    for m in &schema.formula_metavars {
        if !formulas.contains_key(m) {
            return Err(KernelError::SchemaUnbound { schema: schema.name.clone(), var: m.clone() });
        }
    }
    for k in terms.keys() {
        if !schema.term_metavars.contains(k) {
            return Err(KernelError::SchemaMetavar { schema: schema.name.clone(), var: k.clone() });
        }
    }
    for k in formulas.keys() {
        if !schema.formula_metavars.contains(k) {
            return Err(KernelError::SchemaMetavar { schema: schema.name.clone(), var: k.clone() });
        }
    }
    for t in terms.values() {
        sig.check_term(t).map_err(KernelError::Syntax)?;
    }
    for (k, a) in formulas {
        sig.check_state_formula(a).map_err(KernelError::Syntax)?;
        if let FormulaShape::ConjAtoms { pred, locations } = &schema.formula_shape {
            if !conj_of_atoms(a, pred, locations) {
                return Err(KernelError::SchemaFormulaShape {
                    schema: schema.name.clone(),
                    var: k.clone(),
                    formula: a.clone(),
                });
            }
        }
    }

    // Formula metavariables occur in patterns as nullary atoms; replace them
    // first, then substitute the term bindings.
    fn splice(a: &StateFormula, formulas: &BTreeMap<Ident, StateFormula>) -> StateFormula {
        match a {
            StateFormula::Atom { p, args } if args.is_empty() && formulas.contains_key(p) => {
                formulas[p].clone()
            }
            StateFormula::Top | StateFormula::Bot | StateFormula::Atom { .. } => a.clone(),
            StateFormula::And { lhs, rhs } => {
                StateFormula::and(splice(lhs, formulas), splice(rhs, formulas))
            }
            StateFormula::Or { lhs, rhs } => {
                StateFormula::or(splice(lhs, formulas), splice(rhs, formulas))
            }
            StateFormula::Imp { lhs, rhs } => {
                StateFormula::imp(splice(lhs, formulas), splice(rhs, formulas))
            }
        }
    }
    let subst_all = |a: &StateFormula| -> StateFormula {
        let spliced = splice(a, formulas);
        terms.iter().fold(spliced, |acc, (x, t)| acc.subst(x, t))
    };

    let pre = subst_all(&schema.pre);
    let mut post = subst_all(&schema.post);
    let mut swap_pair: Option<(Term, Term)> = None;
    if let Some(swap) = &schema.post_swap {
        let lt = &terms[&swap.l];
        let l2t = &terms[&swap.l2];
        for t in [lt, l2t] {
            if !swap.locations.contains(t) {
                return Err(KernelError::NotALocation {
                    schema: schema.name.clone(),
                    term: t.clone(),
                });
            }
        }
        if lt == l2t {
            return Err(KernelError::SameLocation {
                schema: schema.name.clone(),
                term: lt.clone(),
            });
        }
        post = swap_occurrences(&post, lt, l2t);
        swap_pair = Some((lt.clone(), l2t.clone()));
    }

    let body = terms
        .iter()
        .fold(schema.body.clone(), |acc, (x, t)| acc.subst(x, t));
    let hyps: Vec<MainFormula> = schema
        .hyps
        .iter()
        .map(|h| terms.iter().fold(h.clone(), |acc, (x, t)| acc.subst(x, t)))
        .collect();

    let realizer = match &schema.realizer {
        RealizerSpec::Term(pattern) => terms
            .iter()
            .fold(pattern.clone(), |acc, (x, t)| acc.subst_term(x, t)),
        RealizerSpec::SwapConst => {
            let swap = schema.post_swap.as_ref().expect("validated at registration");
            let (a, b) = swap_pair.expect("swap bindings resolved above");
            // Canonical order: position in the schema's location list.
            let idx = |t: &Term| swap.locations.iter().position(|l| l == t).unwrap();
            let (first, second) = if idx(&a) <= idx(&b) { (a, b) } else { (b, a) };
            StTerm::cnst(format!("swap_{first}_{second}").as_str())
        }
    };

    let triple = Triple::new(pre, body, post);
    sig.check_triple(&triple).map_err(KernelError::Syntax)?;
    Ok(SAxiomInstance { hyps, triple, realizer })
}

/// A proof tree. Each variant stores exactly the instantiation data needed to
/// reconstruct its conclusion; see `check`.
#[derive(Clone, Debug, PartialEq)]
pub enum Derivation {
    /// `Γ ⊢ {α} A {α}` for a labeled hypothesis `A`.
    Hyp { label: Ident, state: StateFormula },
    /// `Γ ⊢ {α} true {α}`.
    TopAx { state: StateFormula },
    AndI { left: Box<Derivation>, right: Box<Derivation> },
    AndEL { from: Box<Derivation> },
    AndER { from: Box<Derivation> },
    OrIL { from: Box<Derivation>, right: MainFormula },
    OrIR { left: MainFormula, from: Box<Derivation> },
    OrE {
        disj: Box<Derivation>,
        left_label: Ident,
        left_case: Box<Derivation>,
        right_label: Ident,
        right_case: Box<Derivation>,
    },
    ImpI { label: Ident, hyp: MainFormula, premise: Box<Derivation>, outer: StateFormula },
    ImpE { imp: Box<Derivation>, arg: Box<Derivation> },
    BotE { from: Box<Derivation>, target: MainFormula, post: StateFormula },
    ForallI { var: Ident, premise: Box<Derivation>, outer: StateFormula },
    ForallE { from: Box<Derivation>, witness: Term },
    ExistsI { witness: Term, var: Ident, template: MainFormula, from: Box<Derivation> },
    ExistsE { exists: Box<Derivation>, var: Ident, label: Ident, body: Box<Derivation> },
    /// Weaken the precondition and strengthen the postcondition along `⊢_H`.
    Cons {
        pre: StateFormula,
        pre_hints: HintSet,
        from: Box<Derivation>,
        post_hints: HintSet,
        post: StateFormula,
    },
    /// Case split on a classically exhaustive disjunction of state formulas.
    Cond {
        case_a: StateFormula,
        case_b: StateFormula,
        disj_hints: HintSet,
        left: Box<Derivation>,
        right: Box<Derivation>,
    },
    SAxiom { name: Ident, terms: Binding, formulas: BTreeMap<Ident, StateFormula> },
    // Arithmetic mode only:
    EqRefl { term: Term, state: StateFormula },
    EqSym { from: Box<Derivation> },
    EqTrans { left: Box<Derivation>, right: Box<Derivation> },
    /// Rewrite along an equation: from `{α} s=t {β}` and `{β} A(s) {γ(s)}`
    /// conclude `{α} A(t) {γ(t)}`. The abstraction `(var, template,
    /// post_template)` fixes which occurrences are generalized.
    Ext {
        eq: Box<Derivation>,
        body: Box<Derivation>,
        var: Ident,
        template: MainFormula,
        post_template: StateFormula,
    },
    SuccNonzero { term: Term, state: StateFormula },
    SuccInj { from: Box<Derivation> },
    DefEq { id: Ident, binding: Binding, state: StateFormula },
    Ind {
        base: Box<Derivation>,
        var: Ident,
        label: Ident,
        template: MainFormula,
        step: Box<Derivation>,
        outer: StateFormula,
    },
    While {
        var: Ident,
        label: Ident,
        hole: Ident,
        cond: StateFormula,
        body: Box<Derivation>,
        exit: Box<Derivation>,
        zero: Box<Derivation>,
    },
}

/// `Γ ⊢ {α} A {β}` — a context plus its triple.
#[derive(Clone, Debug, PartialEq)]
pub struct SSequent {
    pub ctx: Context,
    pub triple: Triple,
}

impl fmt::Display for SSequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.ctx.is_empty() {
            write!(f, "{} ", self.ctx)?;
        }
        write!(f, "|- {}", self.triple)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    StateLogic(#[from] StateLogicError),
    #[error("no hypothesis labeled `{label}` in scope")]
    UnknownLabel { label: Ident },
    #[error("unknown state axiom `{name}`")]
    UnknownSAxiom { name: Ident },
    #[error("unknown defining equation `{id}`")]
    UnknownDefEq { id: Ident },
    #[error("{rule}: expected {expected}, found {found}")]
    RuleMismatch { rule: &'static str, expected: String, found: String },
    #[error("{rule}: state mismatch, expected {{{expected}}}, found {{{found}}}")]
    StateMismatch { rule: &'static str, expected: StateFormula, found: StateFormula },
    #[error("{rule}: formula mismatch, expected `{expected}`, found `{found}`")]
    FormulaMismatch { rule: &'static str, expected: MainFormula, found: MainFormula },
    #[error("{rule}: eigenvariable `{var}` occurs free in {place}")]
    Eigenvariable { rule: &'static str, var: Ident, place: &'static str },
    #[error("{rule} is only available in arithmetic mode")]
    ArithmeticOnly { rule: &'static str },
    #[error("schema `{schema}`: metavariable `{var}` left unbound")]
    SchemaUnbound { schema: Ident, var: Ident },
    #[error("schema `{schema}`: `{var}` is not one of its metavariables")]
    SchemaMetavar { schema: Ident, var: Ident },
    #[error("schema `{schema}`: formula bound to `{var}` has the wrong shape: {formula}")]
    SchemaFormulaShape { schema: Ident, var: Ident, formula: StateFormula },
    #[error("schema `{schema}`: `{term}` is not a valid location")]
    NotALocation { schema: Ident, term: Term },
    #[error("schema `{schema}`: swap locations coincide ({term})")]
    SameLocation { schema: Ident, term: Term },
    #[error("schema `{schema}`: required hypothesis `{hyp}` not in context")]
    SchemaHyp { schema: Ident, hyp: MainFormula },
    #[error("defining equation `{id}` uses variable `{var}` outside its parameters")]
    DefEqFreeVar { id: Ident, var: Ident },
    #[error("defining equation `{id}`: parameter `{var}` unbound")]
    DefEqUnbound { id: Ident, var: Ident },
    #[error(transparent)]
    Pl(#[from] crate::pl::PlError),
}

fn expect_state(
    rule: &'static str,
    expected: &StateFormula,
    found: &StateFormula,
) -> Result<(), KernelError> {
    if expected == found {
        Ok(())
    } else {
        Err(KernelError::StateMismatch {
            rule,
            expected: expected.clone(),
            found: found.clone(),
        })
    }
}

fn expect_main(
    rule: &'static str,
    expected: &MainFormula,
    found: &MainFormula,
) -> Result<(), KernelError> {
    if alpha_eq(expected, found) {
        Ok(())
    } else {
        Err(KernelError::FormulaMismatch {
            rule,
            expected: expected.clone(),
            found: found.clone(),
        })
    }
}

fn shape_error<T>(rule: &'static str, expected: &str, found: &impl fmt::Display) -> Result<T, KernelError> {
    Err(KernelError::RuleMismatch {
        rule,
        expected: expected.to_string(),
        found: found.to_string(),
    })
}

fn succ_term(x: &Ident) -> Term {
    Term::app("succ", vec![Term::var(x.clone())])
}

fn require_sa(theory: &Theory, rule: &'static str) -> Result<(), KernelError> {
    if theory.sig.mode == Mode::Sa {
        Ok(())
    } else {
        Err(KernelError::ArithmeticOnly { rule })
    }
}

fn eq_sides(rule: &'static str, body: &MainFormula) -> Result<(Term, Term), KernelError> {
    match body {
        MainFormula::Atom { p, args } if p.as_str() == "eq" && args.len() == 2 => {
            Ok((args[0].clone(), args[1].clone()))
        }
        other => shape_error(rule, "an equation s = t", other),
    }
}

/// Check a derivation under an empty ambient context.
pub fn check(d: &Derivation, theory: &Theory) -> Result<SSequent, KernelError> {
    check_in(d, &Context::new(), theory)
}

/// Check a derivation under an ambient hypothesis context, returning its
/// conclusion sequent.
pub fn check_in(
    d: &Derivation,
    ctx: &Context,
    theory: &Theory,
) -> Result<SSequent, KernelError> {
    let triple = check_triple(d, ctx, theory)?;
    Ok(SSequent { ctx: ctx.clone(), triple })
}

fn check_triple(d: &Derivation, ctx: &Context, theory: &Theory) -> Result<Triple, KernelError> {
    let sig = &theory.sig;
    match d {
        Derivation::Hyp { label, state } => {
            let formula = ctx
                .lookup(label)
                .ok_or_else(|| KernelError::UnknownLabel { label: label.clone() })?;
            sig.check_state_formula(state)?;
            Ok(Triple::new(state.clone(), formula.clone(), state.clone()))
        }
        Derivation::TopAx { state } => {
            sig.check_state_formula(state)?;
            Ok(Triple::new(state.clone(), MainFormula::Top, state.clone()))
        }
        Derivation::AndI { left, right } => {
            let l = check_triple(left, ctx, theory)?;
            let r = check_triple(right, ctx, theory)?;
            expect_state("and_i", &l.post, &r.pre)?;
            Ok(Triple::new(l.pre, MainFormula::and(l.body, r.body), r.post))
        }
        Derivation::AndEL { from } => {
            let t = check_triple(from, ctx, theory)?;
            match t.body {
                MainFormula::And { lhs, .. } => Ok(Triple::new(t.pre, *lhs, t.post)),
                other => shape_error("and_el", "a conjunction", &other),
            }
        }
        Derivation::AndER { from } => {
            let t = check_triple(from, ctx, theory)?;
            match t.body {
                MainFormula::And { rhs, .. } => Ok(Triple::new(t.pre, *rhs, t.post)),
                other => shape_error("and_er", "a conjunction", &other),
            }
        }
        Derivation::OrIL { from, right } => {
            let t = check_triple(from, ctx, theory)?;
            sig.check_main_formula(right)?;
            Ok(Triple::new(t.pre, MainFormula::or(t.body, right.clone()), t.post))
        }
        Derivation::OrIR { left, from } => {
            let t = check_triple(from, ctx, theory)?;
            sig.check_main_formula(left)?;
            Ok(Triple::new(t.pre, MainFormula::or(left.clone(), t.body), t.post))
        }
        Derivation::OrE { disj, left_label, left_case, right_label, right_case } => {
            let dt = check_triple(disj, ctx, theory)?;
            let (a, b) = match dt.body {
                MainFormula::Or { lhs, rhs } => (*lhs, *rhs),
                other => return shape_error("or_e", "a disjunction", &other),
            };
            let lctx = ctx.push(left_label.clone(), a)?;
            let lt = check_triple(left_case, &lctx, theory)?;
            let rctx = ctx.push(right_label.clone(), b)?;
            let rt = check_triple(right_case, &rctx, theory)?;
            expect_state("or_e", &dt.post, &lt.pre)?;
            expect_state("or_e", &dt.post, &rt.pre)?;
            expect_main("or_e", &lt.body, &rt.body)?;
            expect_state("or_e", &lt.post, &rt.post)?;
            Ok(Triple::new(dt.pre, lt.body, lt.post))
        }
        Derivation::ImpI { label, hyp, premise, outer } => {
            sig.check_main_formula(hyp)?;
            sig.check_state_formula(outer)?;
            let inner = ctx.push(label.clone(), hyp.clone())?;
            let t = check_triple(premise, &inner, theory)?;
            Ok(Triple::new(
                outer.clone(),
                MainFormula::imp(hyp.clone(), t),
                outer.clone(),
            ))
        }
        Derivation::ImpE { imp, arg } => {
            let it = check_triple(imp, ctx, theory)?;
            let (hyp, inner) = match it.body {
                MainFormula::Imp { hyp, triple } => (*hyp, *triple),
                other => return shape_error("imp_e", "a guarded implication", &other),
            };
            let at = check_triple(arg, ctx, theory)?;
            expect_state("imp_e", &it.post, &at.pre)?;
            expect_main("imp_e", &hyp, &at.body)?;
            expect_state("imp_e", &inner.pre, &at.post)?;
            Ok(Triple::new(it.pre, inner.body, inner.post))
        }
        Derivation::BotE { from, target, post } => {
            let t = check_triple(from, ctx, theory)?;
            if t.body != MainFormula::Bot {
                return shape_error("bot_e", "falsity", &t.body);
            }
            sig.check_main_formula(target)?;
            sig.check_state_formula(post)?;
            Ok(Triple::new(t.pre, target.clone(), post.clone()))
        }
        Derivation::ForallI { var, premise, outer } => {
            sig.check_state_formula(outer)?;
            if ctx.free_var_set().contains(var) {
                return Err(KernelError::Eigenvariable {
                    rule: "forall_i",
                    var: var.clone(),
                    place: "the hypothesis context",
                });
            }
            let t = check_triple(premise, ctx, theory)?;
            Ok(Triple::new(
                outer.clone(),
                MainFormula::forall(var.clone(), t),
                outer.clone(),
            ))
        }
        Derivation::ForallE { from, witness } => {
            sig.check_term(witness)?;
            let t = check_triple(from, ctx, theory)?;
            let (var, inner) = match t.body {
                MainFormula::Forall { var, triple } => (var, *triple),
                other => return shape_error("forall_e", "a universal", &other),
            };
            // The rule's outer post must already sit at the instance.
            expect_state("forall_e", &inner.pre.subst(&var, witness), &t.post)?;
            Ok(Triple::new(
                t.pre,
                inner.body.subst(&var, witness),
                inner.post.subst(&var, witness),
            ))
        }
        Derivation::ExistsI { witness, var, template, from } => {
            sig.check_term(witness)?;
            sig.check_main_formula(template)?;
            let t = check_triple(from, ctx, theory)?;
            expect_main("exists_i", &template.subst(var, witness), &t.body)?;
            Ok(Triple::new(
                t.pre,
                MainFormula::exists(var.clone(), template.clone()),
                t.post,
            ))
        }
        Derivation::ExistsE { exists, var, label, body } => {
            let et = check_triple(exists, ctx, theory)?;
            let (x, matrix) = match et.body {
                MainFormula::Exists { var, body } => (var, *body),
                other => return shape_error("exists_e", "an existential", &other),
            };
            if &x != var && matrix.free_var_set().contains(var) {
                return Err(KernelError::Eigenvariable {
                    rule: "exists_e",
                    var: var.clone(),
                    place: "the existential matrix",
                });
            }
            let inst = matrix.subst(&x, &Term::var(var.clone()));
            let inner = ctx.push(label.clone(), inst)?;
            let bt = check_triple(body, &inner, theory)?;
            expect_state("exists_e", &et.post, &bt.pre)?;
            let mut fv = ctx.free_var_set();
            bt.body.free_vars(&mut fv);
            et.pre.free_vars(&mut fv);
            et.post.free_vars(&mut fv);
            bt.post.free_vars(&mut fv);
            if fv.contains(var) {
                return Err(KernelError::Eigenvariable {
                    rule: "exists_e",
                    var: var.clone(),
                    place: "the conclusion or context",
                });
            }
            Ok(Triple::new(et.pre, bt.body, bt.post))
        }
        Derivation::Cons { pre, pre_hints, from, post_hints, post } => {
            sig.check_state_formula(pre)?;
            sig.check_state_formula(post)?;
            let t = check_triple(from, ctx, theory)?;
            check_h_or_fail(
                &StateSequent::new(vec![pre.clone()], t.pre.clone()),
                &theory.haxioms,
                pre_hints,
                &theory.hconfig,
            )?;
            check_h_or_fail(
                &StateSequent::new(vec![t.post.clone()], post.clone()),
                &theory.haxioms,
                post_hints,
                &theory.hconfig,
            )?;
            Ok(Triple::new(pre.clone(), t.body, post.clone()))
        }
        Derivation::Cond { case_a, case_b, disj_hints, left, right } => {
            sig.check_state_formula(case_a)?;
            sig.check_state_formula(case_b)?;
            check_h_or_fail(
                &StateSequent::new(vec![], StateFormula::or(case_a.clone(), case_b.clone())),
                &theory.haxioms,
                disj_hints,
                &theory.hconfig,
            )?;
            let lt = check_triple(left, ctx, theory)?;
            let gamma = match &lt.pre {
                StateFormula::And { lhs, rhs } if **lhs == *case_a => (**rhs).clone(),
                other => {
                    return Err(KernelError::RuleMismatch {
                        rule: "cond",
                        expected: format!("a precondition of the form {case_a} /\\ _"),
                        found: other.to_string(),
                    })
                }
            };
            let rt = check_triple(right, ctx, theory)?;
            expect_state("cond", &StateFormula::and(case_b.clone(), gamma.clone()), &rt.pre)?;
            expect_main("cond", &lt.body, &rt.body)?;
            expect_state("cond", &lt.post, &rt.post)?;
            Ok(Triple::new(gamma, lt.body, lt.post))
        }
        Derivation::SAxiom { name, terms, formulas } => {
            let schema = theory
                .saxiom(name)
                .ok_or_else(|| KernelError::UnknownSAxiom { name: name.clone() })?;
            let inst = instantiate_saxiom(schema, terms, formulas, sig)?;
            for h in &inst.hyps {
                if !ctx.entries().iter().any(|(_, a)| alpha_eq(a, h)) {
                    return Err(KernelError::SchemaHyp {
                        schema: name.clone(),
                        hyp: h.clone(),
                    });
                }
            }
            Ok(inst.triple)
        }
        Derivation::EqRefl { term, state } => {
            require_sa(theory, "eq_refl")?;
            sig.check_term(term)?;
            sig.check_state_formula(state)?;
            Ok(Triple::new(
                state.clone(),
                MainFormula::eq(term.clone(), term.clone()),
                state.clone(),
            ))
        }
        Derivation::EqSym { from } => {
            require_sa(theory, "eq_sym")?;
            let t = check_triple(from, ctx, theory)?;
            let (s, tt) = eq_sides("eq_sym", &t.body)?;
            Ok(Triple::new(t.pre, MainFormula::eq(tt, s), t.post))
        }
        Derivation::EqTrans { left, right } => {
            require_sa(theory, "eq_trans")?;
            let lt = check_triple(left, ctx, theory)?;
            let rt = check_triple(right, ctx, theory)?;
            let (r, s1) = eq_sides("eq_trans", &lt.body)?;
            let (s2, t) = eq_sides("eq_trans", &rt.body)?;
            expect_state("eq_trans", &lt.post, &rt.pre)?;
            if s1 != s2 {
                return Err(KernelError::RuleMismatch {
                    rule: "eq_trans",
                    expected: format!("shared middle term `{s1}`"),
                    found: s2.to_string(),
                });
            }
            Ok(Triple::new(lt.pre, MainFormula::eq(r, t), rt.post))
        }
        Derivation::Ext { eq, body, var, template, post_template } => {
            require_sa(theory, "ext")?;
            sig.check_main_formula(template)?;
            sig.check_state_formula(post_template)?;
            let et = check_triple(eq, ctx, theory)?;
            let (s, t) = eq_sides("ext", &et.body)?;
            let bt = check_triple(body, ctx, theory)?;
            expect_state("ext", &et.post, &bt.pre)?;
            expect_main("ext", &template.subst(var, &s), &bt.body)?;
            expect_state("ext", &post_template.subst(var, &s), &bt.post)?;
            Ok(Triple::new(
                et.pre,
                template.subst(var, &t),
                post_template.subst(var, &t),
            ))
        }
        Derivation::SuccNonzero { term, state } => {
            require_sa(theory, "succ_nonzero")?;
            sig.check_term(term)?;
            sig.check_state_formula(state)?;
            Ok(Triple::new(
                state.clone(),
                MainFormula::neq(Term::app("succ", vec![term.clone()]), Term::num(0)),
                state.clone(),
            ))
        }
        Derivation::SuccInj { from } => {
            require_sa(theory, "succ_inj")?;
            let t = check_triple(from, ctx, theory)?;
            let (s1, s2) = eq_sides("succ_inj", &t.body)?;
            let strip = |u: &Term| match u {
                Term::App { f, args } if f.as_str() == "succ" && args.len() == 1 => {
                    Some(args[0].clone())
                }
                _ => None,
            };
            match (strip(&s1), strip(&s2)) {
                (Some(a), Some(b)) => Ok(Triple::new(t.pre, MainFormula::eq(a, b), t.post)),
                _ => shape_error("succ_inj", "an equation between successors", &t.body),
            }
        }
        Derivation::DefEq { id, binding, state } => {
            require_sa(theory, "defeq")?;
            sig.check_state_formula(state)?;
            let eq = theory
                .defeq(id)
                .ok_or_else(|| KernelError::UnknownDefEq { id: id.clone() })?;
            for p in &eq.params {
                if !binding.contains_key(p) {
                    return Err(KernelError::DefEqUnbound { id: id.clone(), var: p.clone() });
                }
            }
            for k in binding.keys() {
                if !eq.params.contains(k) {
                    return Err(KernelError::DefEqFreeVar { id: id.clone(), var: k.clone() });
                }
            }
            for t in binding.values() {
                sig.check_term(t)?;
            }
            let apply = |t: &Term| binding.iter().fold(t.clone(), |acc, (x, u)| acc.subst(x, u));
            Ok(Triple::new(
                state.clone(),
                MainFormula::eq(apply(&eq.lhs), apply(&eq.rhs)),
                state.clone(),
            ))
        }
        Derivation::Ind { base, var, label, template, step, outer } => {
            require_sa(theory, "ind")?;
            sig.check_main_formula(template)?;
            sig.check_state_formula(outer)?;
            if ctx.free_var_set().contains(var) {
                return Err(KernelError::Eigenvariable {
                    rule: "ind",
                    var: var.clone(),
                    place: "the hypothesis context",
                });
            }
            let bt = check_triple(base, ctx, theory)?;
            let alpha = bt.pre.clone();
            if alpha.free_var_set().contains(var) {
                return Err(KernelError::Eigenvariable {
                    rule: "ind",
                    var: var.clone(),
                    place: "the inner precondition",
                });
            }
            let zero = Term::num(0);
            expect_main("ind", &template.subst(var, &zero), &bt.body)?;
            let sctx = ctx.push(label.clone(), template.clone())?;
            let st = check_triple(step, &sctx, theory)?;
            let beta = st.pre.clone();
            expect_state("ind", &beta.subst(var, &zero), &bt.post)?;
            let succ_v = succ_term(var);
            expect_main("ind", &template.subst(var, &succ_v), &st.body)?;
            expect_state("ind", &beta.subst(var, &succ_v), &st.post)?;
            Ok(Triple::new(
                outer.clone(),
                MainFormula::forall(var.clone(), Triple::new(alpha, template.clone(), beta)),
                outer.clone(),
            ))
        }
        Derivation::While { var, label, hole, cond, body, exit, zero } => {
            require_sa(theory, "while")?;
            let invariant = ctx
                .lookup(label)
                .ok_or_else(|| KernelError::UnknownLabel { label: label.clone() })?
                .clone();
            let outer_ctx = ctx.remove(label);
            if outer_ctx.free_var_set().contains(var) {
                return Err(KernelError::Eigenvariable {
                    rule: "while",
                    var: var.clone(),
                    place: "the hypothesis context",
                });
            }
            let succ_v = succ_term(var);
            let inv_succ = invariant.subst(var, &succ_v);
            let step_ctx = outer_ctx.push(label.clone(), inv_succ)?;

            let bt = check_triple(body, &step_ctx, theory)?;
            expect_main("while", &invariant, &bt.body)?;
            let alpha = bt.post.clone();
            let cond_succ = cond.subst(hole, &succ_v);
            expect_state(
                "while",
                &StateFormula::and(cond_succ.clone(), alpha.subst(var, &succ_v)),
                &bt.pre,
            )?;

            let et = check_triple(exit, &step_ctx, theory)?;
            expect_state(
                "while",
                &StateFormula::and(StateFormula::neg(cond_succ), alpha.subst(var, &succ_v)),
                &et.pre,
            )?;
            let exit_body = et.body.clone();
            let beta = et.post.clone();
            let mut fv = exit_body.free_var_set();
            beta.free_vars(&mut fv);
            if fv.contains(var) {
                return Err(KernelError::Eigenvariable {
                    rule: "while",
                    var: var.clone(),
                    place: "the loop result or its postcondition",
                });
            }

            let zero_term = Term::num(0);
            let zero_ctx = outer_ctx.push(label.clone(), invariant.subst(var, &zero_term))?;
            let zt = check_triple(zero, &zero_ctx, theory)?;
            expect_state("while", &alpha.subst(var, &zero_term), &zt.pre)?;
            expect_main("while", &exit_body, &zt.body)?;
            expect_state("while", &beta, &zt.post)?;

            Ok(Triple::new(alpha, exit_body, beta))
        }
    }
}

/// Hoare composition of two trivial-body triples: from `{α} true {β}` and
/// `{β} true {γ}` conclude `{α} true {γ}` (a conjunction introduction whose
/// left projection is kept).
pub fn derive_comp(d1: Derivation, d2: Derivation) -> Derivation {
    Derivation::AndEL {
        from: Box::new(Derivation::AndI { left: Box::new(d1), right: Box::new(d2) }),
    }
}

/// Transport a derivation along a proved equation `s = t`: given an
/// equational proof and a derivation of `Γ ⊢ {pre(s)} A(s) {post(s)}` (as fixed
/// by the templates over `var`), produce a derivation of
/// `Γ ⊢ {pre(t)} A(t) {post(t)}`.
///
/// The construction rewrites twice: once to move the body and postcondition
/// from `s` to `t`, and once (with the equation reversed, under a trivial
/// body) to move the precondition. A final conjunction projection keeps the
/// rewritten goal.
pub fn derive_ext(
    eq_proof: &crate::pl::PlDerivation,
    body: Derivation,
    var: &Ident,
    body_template: &MainFormula,
    pre_template: &StateFormula,
    post_template: &StateFormula,
    theory: &Theory,
) -> Result<Derivation, KernelError> {
    let eq_formula = crate::pl::check_pl(eq_proof, &crate::pl::PlContext::new(), theory)?;
    let (s, t) = match &eq_formula {
        crate::pl::PlFormula::Atom { p, args } if p.as_str() == "eq" && args.len() == 2 => {
            (args[0].clone(), args[1].clone())
        }
        other => {
            return Err(KernelError::RuleMismatch {
                rule: "derive_ext",
                expected: "an equality proof".to_string(),
                found: other.to_string(),
            })
        }
    };
    let pre_s = pre_template.subst(var, &s);
    let pre_t = pre_template.subst(var, &t);

    let fwd = crate::pl::embed_pl(eq_proof, &pre_s, theory)?;
    let ext_body = Derivation::Ext {
        eq: Box::new(fwd),
        body: Box::new(body),
        var: var.clone(),
        template: body_template.clone(),
        post_template: post_template.clone(),
    };

    let rev_proof = crate::pl::PlDerivation::EqSym { from: Box::new(eq_proof.clone()) };
    let bwd = crate::pl::embed_pl(&rev_proof, &pre_t, theory)?;
    let ext_pre = Derivation::Ext {
        eq: Box::new(bwd),
        body: Box::new(Derivation::TopAx { state: pre_t }),
        var: var.clone(),
        template: MainFormula::Top,
        post_template: pre_template.clone(),
    };

    Ok(Derivation::AndER {
        from: Box::new(Derivation::AndI {
            left: Box::new(ext_pre),
            right: Box::new(ext_body),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::StateFormula as SF;

    fn readwrite_theory() -> Theory {
        let mut th = Theory::new("readwrite", Mode::Sl);
        th.sig.declare_pred(Ident::new("P"), 2).unwrap();
        th.sig.declare_state_pred(Ident::new("stored"), 1).unwrap();
        th.sig.declare_state_pred(Ident::new("solved"), 1).unwrap();
        // {A} true {stored(x)}  realized by  write x
        th.add_saxiom(SAxiomSchema {
            name: Ident::new("store"),
            term_metavars: vec![Ident::new("x")],
            formula_metavars: vec![Ident::new("A")],
            formula_shape: FormulaShape::Any,
            hyps: vec![],
            pre: SF::atom("A", vec![]),
            body: MainFormula::Top,
            post: SF::atom("stored", vec![Term::var("x")]),
            post_swap: None,
            realizer: RealizerSpec::Term(StTerm::app(
                StTerm::cnst("write"),
                StTerm::var("x"),
            )),
        })
        .unwrap();
        // {stored(x)} true {solved(x)}  realized by  calc
        th.add_saxiom(SAxiomSchema {
            name: Ident::new("solve"),
            term_metavars: vec![Ident::new("x")],
            formula_metavars: vec![],
            formula_shape: FormulaShape::Any,
            hyps: vec![],
            pre: SF::atom("stored", vec![Term::var("x")]),
            body: MainFormula::Top,
            post: SF::atom("solved", vec![Term::var("x")]),
            post_swap: None,
            realizer: RealizerSpec::Term(StTerm::cnst("calc")),
        })
        .unwrap();
        // {solved(x)} ex y . P(x,y) {true}  realized by  read
        th.add_saxiom(SAxiomSchema {
            name: Ident::new("answer"),
            term_metavars: vec![Ident::new("x")],
            formula_metavars: vec![],
            formula_shape: FormulaShape::Any,
            hyps: vec![],
            pre: SF::atom("solved", vec![Term::var("x")]),
            body: MainFormula::exists(
                "y",
                MainFormula::atom("P", vec![Term::var("x"), Term::var("y")]),
            ),
            post: SF::Top,
            post_swap: None,
            realizer: RealizerSpec::Term(StTerm::cnst("read")),
        })
        .unwrap();
        th
    }

    fn sax(name: &str, x: Term, a: Option<SF>) -> Derivation {
        let mut formulas = BTreeMap::new();
        if let Some(f) = a {
            formulas.insert(Ident::new("A"), f);
        }
        Derivation::SAxiom {
            name: Ident::new(name),
            terms: [(Ident::new("x"), x)].into_iter().collect(),
            formulas,
        }
    }

    /// The store-then-solve-then-read derivation generalized over x.
    fn readwrite_derivation() -> Derivation {
        let x = Term::var("x");
        let inner = Derivation::AndER {
            from: Box::new(Derivation::AndI {
                left: Box::new(Derivation::AndER {
                    from: Box::new(Derivation::AndI {
                        left: Box::new(sax("store", x.clone(), Some(SF::Top))),
                        right: Box::new(sax("solve", x.clone(), None)),
                    }),
                }),
                right: Box::new(sax("answer", x, None)),
            }),
        };
        Derivation::ForallI {
            var: Ident::new("x"),
            premise: Box::new(inner),
            outer: SF::Top,
        }
    }

    #[test]
    fn readwrite_conclusion_matches() {
        let th = readwrite_theory();
        let seq = check(&readwrite_derivation(), &th).unwrap();
        assert!(seq.ctx.is_empty());
        let expected = Triple::new(
            SF::Top,
            MainFormula::forall(
                "x",
                Triple::new(
                    SF::Top,
                    MainFormula::exists(
                        "y",
                        MainFormula::atom("P", vec![Term::var("x"), Term::var("y")]),
                    ),
                    SF::Top,
                ),
            ),
            SF::Top,
        );
        assert_eq!(seq.triple, expected);
    }

    #[test]
    fn and_i_requires_matching_mid_state() {
        let th = readwrite_theory();
        let d = Derivation::AndI {
            left: Box::new(Derivation::TopAx { state: SF::Top }),
            right: Box::new(Derivation::TopAx {
                state: SF::atom("stored", vec![Term::var("x")]),
            }),
        };
        assert!(matches!(
            check(&d, &th),
            Err(KernelError::StateMismatch { rule: "and_i", .. })
        ));
    }

    #[test]
    fn forall_i_rejects_context_capture() {
        let th = readwrite_theory();
        let ctx = Context::new()
            .push(
                Ident::new("u"),
                MainFormula::atom("P", vec![Term::var("x"), Term::var("x")]),
            )
            .unwrap();
        let d = Derivation::ForallI {
            var: Ident::new("x"),
            premise: Box::new(Derivation::TopAx { state: SF::Top }),
            outer: SF::Top,
        };
        assert!(matches!(
            check_in(&d, &ctx, &th),
            Err(KernelError::Eigenvariable { rule: "forall_i", .. })
        ));
    }

    #[test]
    fn hyp_needs_a_label_in_scope() {
        let th = readwrite_theory();
        let d = Derivation::Hyp { label: Ident::new("u"), state: SF::Top };
        assert!(matches!(check(&d, &th), Err(KernelError::UnknownLabel { .. })));
        let ctx = Context::new().push(Ident::new("u"), MainFormula::Top).unwrap();
        let seq = check_in(&d, &ctx, &th).unwrap();
        assert_eq!(seq.triple, Triple::new(SF::Top, MainFormula::Top, SF::Top));
    }

    #[test]
    fn imp_i_then_e_round_trips() {
        let th = readwrite_theory();
        let a = MainFormula::atom("P", vec![Term::var("c"), Term::var("c")]);
        // u:A |- {T} A {T}, so |- {T} A => {T} A {T} {T}
        let intro = Derivation::ImpI {
            label: Ident::new("u"),
            hyp: a.clone(),
            premise: Box::new(Derivation::Hyp { label: Ident::new("u"), state: SF::Top }),
            outer: SF::Top,
        };
        let seq = check(&intro, &th).unwrap();
        assert_eq!(
            seq.triple.body,
            MainFormula::imp(a.clone(), Triple::new(SF::Top, a.clone(), SF::Top))
        );
        // Applying it to a hypothesis of A gives A back.
        let ctx = Context::new().push(Ident::new("w"), a.clone()).unwrap();
        let app = Derivation::ImpE {
            imp: Box::new(intro),
            arg: Box::new(Derivation::Hyp { label: Ident::new("w"), state: SF::Top }),
        };
        let seq = check_in(&app, &ctx, &th).unwrap();
        assert_eq!(seq.triple, Triple::new(SF::Top, a, SF::Top));
    }

    #[test]
    fn cons_discharges_via_state_logic() {
        let mut th = readwrite_theory();
        th.add_haxiom(
            HAxiomSchema::new(
                Ident::new("always_stored"),
                vec![Ident::new("x")],
                vec![],
                SF::atom("stored", vec![Term::var("x")]),
            )
            .unwrap(),
        )
        .unwrap();
        let c = Term::var("c");
        let d = Derivation::Cons {
            pre: SF::Top,
            pre_hints: HintSet::auto(),
            from: Box::new(Derivation::TopAx {
                state: SF::atom("stored", vec![c.clone()]),
            }),
            post_hints: HintSet::auto(),
            post: SF::atom("stored", vec![c]),
        };
        // Entry obligation: true |-H stored(c) via the axiom; exit: trivial.
        let seq = check(&d, &th).unwrap();
        assert_eq!(seq.triple.pre, SF::Top);
    }

    #[test]
    fn exists_e_eigenvariable_conditions() {
        let th = readwrite_theory();
        let p = |t: Term| MainFormula::atom("P", vec![t.clone(), t]);
        let ctx = Context::new()
            .push(
                Ident::new("h"),
                MainFormula::exists("x", p(Term::var("x"))),
            )
            .unwrap();
        let ex = Derivation::Hyp { label: Ident::new("h"), state: SF::Top };
        // Eliminating into the matrix itself leaks the eigenvariable.
        let bad = Derivation::ExistsE {
            exists: Box::new(ex.clone()),
            var: Ident::new("y"),
            label: Ident::new("u"),
            body: Box::new(Derivation::Hyp { label: Ident::new("u"), state: SF::Top }),
        };
        assert!(matches!(
            check_in(&bad, &ctx, &th),
            Err(KernelError::Eigenvariable { rule: "exists_e", .. })
        ));
        // Re-packaging it under an existential is fine.
        let good = Derivation::ExistsE {
            exists: Box::new(ex),
            var: Ident::new("y"),
            label: Ident::new("u"),
            body: Box::new(Derivation::ExistsI {
                witness: Term::var("y"),
                var: Ident::new("x"),
                template: p(Term::var("x")),
                from: Box::new(Derivation::Hyp { label: Ident::new("u"), state: SF::Top }),
            }),
        };
        let seq = check_in(&good, &ctx, &th).unwrap();
        assert_eq!(seq.triple.body, MainFormula::exists("x", p(Term::var("x"))));
    }

    #[test]
    fn derive_comp_composes_trivial_triples() {
        let th = readwrite_theory();
        let x = Term::var("x");
        let d1 = sax("store", x.clone(), Some(SF::Top));
        let d2 = sax("solve", x, None);
        let seq = check(&derive_comp(d1, d2), &th).unwrap();
        assert_eq!(
            seq.triple,
            Triple::new(SF::Top, MainFormula::Top, SF::atom("solved", vec![Term::var("x")]))
        );
    }
}
