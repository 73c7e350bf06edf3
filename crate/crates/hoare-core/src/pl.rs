//! Ordinary intuitionistic predicate logic (with optional arithmetic), plus
//! the translation that re-reads such proofs as stateful ones. A pure proof
//! says nothing about the state, so the translation threads an arbitrary
//! state formula through unchanged: implication becomes a guarded implication
//! whose pre- and postcondition are both that formula, and likewise for the
//! universal quantifier. The resulting derivation always passes the main
//! checker, provided no bound or eigen variable collides with the free
//! variables of the threaded formula.

use std::collections::BTreeSet;
use std::fmt;

use crate::kernel::{Derivation, Theory};
use crate::statelogic::Binding;
use crate::syntax::{
    fresh, Context, Ident, MainFormula, Mode, Signature, StateFormula, SyntaxError, Term, Triple,
};

/// First-order formulas with unrestricted implication and quantifiers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlFormula {
    Top,
    Bot,
    Atom { p: Ident, args: Vec<Term> },
    And { lhs: Box<PlFormula>, rhs: Box<PlFormula> },
    Or { lhs: Box<PlFormula>, rhs: Box<PlFormula> },
    Imp { lhs: Box<PlFormula>, rhs: Box<PlFormula> },
    Forall { var: Ident, body: Box<PlFormula> },
    Exists { var: Ident, body: Box<PlFormula> },
}

impl PlFormula {
    pub fn atom(p: impl Into<Ident>, args: Vec<Term>) -> PlFormula {
        PlFormula::Atom { p: p.into(), args }
    }

    pub fn eq(s: Term, t: Term) -> PlFormula {
        PlFormula::atom("eq", vec![s, t])
    }

    pub fn neq(s: Term, t: Term) -> PlFormula {
        PlFormula::atom("neq", vec![s, t])
    }

    pub fn and(lhs: PlFormula, rhs: PlFormula) -> PlFormula {
        PlFormula::And { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn or(lhs: PlFormula, rhs: PlFormula) -> PlFormula {
        PlFormula::Or { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn imp(lhs: PlFormula, rhs: PlFormula) -> PlFormula {
        PlFormula::Imp { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn forall(var: impl Into<Ident>, body: PlFormula) -> PlFormula {
        PlFormula::Forall { var: var.into(), body: Box::new(body) }
    }

    pub fn exists(var: impl Into<Ident>, body: PlFormula) -> PlFormula {
        PlFormula::Exists { var: var.into(), body: Box::new(body) }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<Ident>) {
        match self {
            PlFormula::Top | PlFormula::Bot => {}
            PlFormula::Atom { args, .. } => {
                for t in args {
                    t.free_vars(out);
                }
            }
            PlFormula::And { lhs, rhs }
            | PlFormula::Or { lhs, rhs }
            | PlFormula::Imp { lhs, rhs } => {
                lhs.free_vars(out);
                rhs.free_vars(out);
            }
            PlFormula::Forall { var, body } | PlFormula::Exists { var, body } => {
                let mut inner = BTreeSet::new();
                body.free_vars(&mut inner);
                inner.remove(var);
                out.extend(inner);
            }
        }
    }

    pub fn free_var_set(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.free_vars(&mut out);
        out
    }

    /// Capture-avoiding substitution of a term for a free variable.
    pub fn subst(&self, x: &Ident, t: &Term) -> PlFormula {
        match self {
            PlFormula::Top | PlFormula::Bot => self.clone(),
            PlFormula::Atom { p, args } => PlFormula::Atom {
                p: p.clone(),
                args: args.iter().map(|a| a.subst(x, t)).collect(),
            },
            PlFormula::And { lhs, rhs } => PlFormula::and(lhs.subst(x, t), rhs.subst(x, t)),
            PlFormula::Or { lhs, rhs } => PlFormula::or(lhs.subst(x, t), rhs.subst(x, t)),
            PlFormula::Imp { lhs, rhs } => PlFormula::imp(lhs.subst(x, t), rhs.subst(x, t)),
            PlFormula::Forall { var, body } | PlFormula::Exists { var, body } => {
                let rebuild = |v: Ident, b: PlFormula| match self {
                    PlFormula::Forall { .. } => PlFormula::forall(v, b),
                    _ => PlFormula::exists(v, b),
                };
                if var == x {
                    return self.clone();
                }
                let replaced = t.free_var_set();
                if replaced.contains(var) {
                    let mut avoid = replaced;
                    avoid.extend(body.free_var_set());
                    let renamed = fresh(var, &avoid);
                    let body2 = body.subst(var, &Term::var(renamed.clone()));
                    rebuild(renamed, body2.subst(x, t))
                } else {
                    rebuild(var.clone(), body.subst(x, t))
                }
            }
        }
    }
}

fn fmt_pl_prec(a: &PlFormula, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match a {
        PlFormula::Top => write!(f, "true"),
        PlFormula::Bot => write!(f, "false"),
        PlFormula::Atom { p, args } => match p.as_str() {
            "eq" if args.len() == 2 => write!(f, "{} = {}", args[0], args[1]),
            "neq" if args.len() == 2 => write!(f, "{} != {}", args[0], args[1]),
            _ if args.is_empty() => write!(f, "{p}"),
            _ => {
                write!(f, "{p}(")?;
                for (i, t) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
        },
        PlFormula::And { lhs, rhs } => {
            let wrap = prec > 3;
            if wrap {
                write!(f, "(")?;
            }
            fmt_pl_prec(lhs, 4, f)?;
            write!(f, " /\\ ")?;
            fmt_pl_prec(rhs, 3, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        PlFormula::Or { lhs, rhs } => {
            let wrap = prec > 2;
            if wrap {
                write!(f, "(")?;
            }
            fmt_pl_prec(lhs, 3, f)?;
            write!(f, " \\/ ")?;
            fmt_pl_prec(rhs, 2, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        PlFormula::Imp { lhs, rhs } => {
            let wrap = prec > 1;
            if wrap {
                write!(f, "(")?;
            }
            fmt_pl_prec(lhs, 2, f)?;
            write!(f, " -> ")?;
            fmt_pl_prec(rhs, 1, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        PlFormula::Forall { var, body } => {
            let wrap = prec > 0;
            if wrap {
                write!(f, "(")?;
            }
            write!(f, "all {var} . ")?;
            fmt_pl_prec(body, 0, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        PlFormula::Exists { var, body } => {
            let wrap = prec > 0;
            if wrap {
                write!(f, "(")?;
            }
            write!(f, "ex {var} . ")?;
            fmt_pl_prec(body, 0, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for PlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_pl_prec(self, 0, f)
    }
}

/// Alpha-equality of pure formulas.
pub fn alpha_eq_pl(a: &PlFormula, b: &PlFormula) -> bool {
    use std::collections::HashMap;
    fn term_eq(
        a: &Term,
        b: &Term,
        la: &HashMap<Ident, usize>,
        lb: &HashMap<Ident, usize>,
    ) -> bool {
        match (a, b) {
            (Term::Var { name: x }, Term::Var { name: y }) => match (la.get(x), lb.get(y)) {
                (Some(i), Some(j)) => i == j,
                (None, None) => x == y,
                _ => false,
            },
            (Term::App { f, args }, Term::App { f: g, args: bs }) => {
                f == g
                    && args.len() == bs.len()
                    && args.iter().zip(bs).all(|(s, t)| term_eq(s, t, la, lb))
            }
            _ => false,
        }
    }
    fn go(
        a: &PlFormula,
        b: &PlFormula,
        depth: usize,
        la: &mut HashMap<Ident, usize>,
        lb: &mut HashMap<Ident, usize>,
    ) -> bool {
        match (a, b) {
            (PlFormula::Top, PlFormula::Top) | (PlFormula::Bot, PlFormula::Bot) => true,
            (PlFormula::Atom { p, args }, PlFormula::Atom { p: q, args: bs }) => {
                p == q
                    && args.len() == bs.len()
                    && args.iter().zip(bs).all(|(s, t)| term_eq(s, t, la, lb))
            }
            (PlFormula::And { lhs, rhs }, PlFormula::And { lhs: l2, rhs: r2 })
            | (PlFormula::Or { lhs, rhs }, PlFormula::Or { lhs: l2, rhs: r2 })
            | (PlFormula::Imp { lhs, rhs }, PlFormula::Imp { lhs: l2, rhs: r2 }) => {
                go(lhs, l2, depth, la, lb) && go(rhs, r2, depth, la, lb)
            }
            (PlFormula::Forall { var, body }, PlFormula::Forall { var: v2, body: b2 })
            | (PlFormula::Exists { var, body }, PlFormula::Exists { var: v2, body: b2 }) => {
                let sa = la.insert(var.clone(), depth);
                let sb = lb.insert(v2.clone(), depth);
                let r = go(body, b2, depth + 1, la, lb);
                restore(la, var, sa);
                restore(lb, v2, sb);
                r
            }
            _ => false,
        }
    }
    fn restore(m: &mut HashMap<Ident, usize>, k: &Ident, old: Option<usize>) {
        match old {
            Some(v) => {
                m.insert(k.clone(), v);
            }
            None => {
                m.remove(k);
            }
        }
    }
    go(a, b, 0, &mut HashMap::new(), &mut HashMap::new())
}

/// Labeled hypotheses for pure proofs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlContext {
    entries: Vec<(Ident, PlFormula)>,
}

impl PlContext {
    pub fn new() -> PlContext {
        PlContext::default()
    }

    pub fn entries(&self) -> &[(Ident, PlFormula)] {
        &self.entries
    }

    pub fn lookup(&self, label: &Ident) -> Option<&PlFormula> {
        self.entries.iter().rev().find(|(l, _)| l == label).map(|(_, f)| f)
    }

    pub fn push(&self, label: Ident, formula: PlFormula) -> Result<PlContext, SyntaxError> {
        if self.entries.iter().any(|(l, _)| l == &label) {
            return Err(SyntaxError::DuplicateLabel { label });
        }
        let mut next = self.clone();
        next.entries.push((label, formula));
        Ok(next)
    }

    pub fn free_var_set(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        for (_, f) in &self.entries {
            f.free_vars(&mut out);
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Pure natural-deduction proofs. Arithmetic rules require the theory to be in
/// arithmetic mode.
#[derive(Clone, Debug, PartialEq)]
pub enum PlDerivation {
    Hyp { label: Ident },
    TopI,
    AndI { left: Box<PlDerivation>, right: Box<PlDerivation> },
    AndEL { from: Box<PlDerivation> },
    AndER { from: Box<PlDerivation> },
    OrIL { from: Box<PlDerivation>, right: PlFormula },
    OrIR { left: PlFormula, from: Box<PlDerivation> },
    OrE {
        disj: Box<PlDerivation>,
        left_label: Ident,
        left_case: Box<PlDerivation>,
        right_label: Ident,
        right_case: Box<PlDerivation>,
    },
    ImpI { label: Ident, hyp: PlFormula, premise: Box<PlDerivation> },
    ImpE { imp: Box<PlDerivation>, arg: Box<PlDerivation> },
    BotE { from: Box<PlDerivation>, target: PlFormula },
    ForallI { var: Ident, premise: Box<PlDerivation> },
    ForallE { from: Box<PlDerivation>, witness: Term },
    ExistsI { witness: Term, var: Ident, template: PlFormula, from: Box<PlDerivation> },
    ExistsE { exists: Box<PlDerivation>, var: Ident, label: Ident, body: Box<PlDerivation> },
    EqRefl { term: Term },
    EqSym { from: Box<PlDerivation> },
    EqTrans { left: Box<PlDerivation>, right: Box<PlDerivation> },
    SuccNonzero { term: Term },
    SuccInj { from: Box<PlDerivation> },
    DefEq { id: Ident, binding: Binding },
    Ind {
        base: Box<PlDerivation>,
        var: Ident,
        label: Ident,
        template: PlFormula,
        step: Box<PlDerivation>,
    },
    /// Leibniz rewriting: from `s = t` and `A[s/var]` conclude `A[t/var]`.
    Leib { eq: Box<PlDerivation>, body: Box<PlDerivation>, var: Ident, template: PlFormula },
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PlError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("no hypothesis labeled `{label}` in scope")]
    UnknownLabel { label: Ident },
    #[error("{rule}: expected {expected}, found {found}")]
    RuleShape { rule: &'static str, expected: String, found: String },
    #[error("{rule}: formula mismatch, expected `{expected}`, found `{found}`")]
    FormulaMismatch { rule: &'static str, expected: PlFormula, found: PlFormula },
    #[error("{rule}: eigenvariable `{var}` occurs free where it must not")]
    Eigenvariable { rule: &'static str, var: Ident },
    #[error("{rule} is only available in arithmetic mode")]
    ArithmeticOnly { rule: &'static str },
    #[error("unknown defining equation `{id}`")]
    UnknownDefEq { id: Ident },
    #[error("defining equation `{id}`: parameter `{var}` unbound or extraneous")]
    DefEqBinding { id: Ident, var: Ident },
    #[error("variable `{var}` of the proof collides with the threaded state formula {{{state}}}")]
    StateCapture { var: Ident, state: StateFormula },
}

fn check_formula(sig: &Signature, a: &PlFormula) -> Result<(), SyntaxError> {
    match a {
        PlFormula::Top | PlFormula::Bot => Ok(()),
        PlFormula::Atom { p, args } => {
            match sig.pred_arity(p) {
                None => Err(SyntaxError::Unknown { kind: "predicate", name: p.clone() }),
                Some(n) if n != args.len() => Err(SyntaxError::Arity {
                    kind: "predicate",
                    name: p.clone(),
                    expected: n,
                    got: args.len(),
                }),
                Some(_) => args.iter().try_for_each(|t| sig.check_term(t)),
            }
        }
        PlFormula::And { lhs, rhs } | PlFormula::Or { lhs, rhs } | PlFormula::Imp { lhs, rhs } => {
            check_formula(sig, lhs)?;
            check_formula(sig, rhs)
        }
        PlFormula::Forall { body, .. } | PlFormula::Exists { body, .. } => {
            check_formula(sig, body)
        }
    }
}

fn expect_pl(
    rule: &'static str,
    expected: &PlFormula,
    found: &PlFormula,
) -> Result<(), PlError> {
    if alpha_eq_pl(expected, found) {
        Ok(())
    } else {
        Err(PlError::FormulaMismatch {
            rule,
            expected: expected.clone(),
            found: found.clone(),
        })
    }
}

fn pl_shape<T>(rule: &'static str, expected: &str, found: &impl fmt::Display) -> Result<T, PlError> {
    Err(PlError::RuleShape { rule, expected: expected.to_string(), found: found.to_string() })
}

fn eq_sides_pl(rule: &'static str, a: &PlFormula) -> Result<(Term, Term), PlError> {
    match a {
        PlFormula::Atom { p, args } if p.as_str() == "eq" && args.len() == 2 => {
            Ok((args[0].clone(), args[1].clone()))
        }
        other => pl_shape(rule, "an equation s = t", other),
    }
}

fn require_sa_pl(theory: &Theory, rule: &'static str) -> Result<(), PlError> {
    if theory.sig.mode == Mode::Sa {
        Ok(())
    } else {
        Err(PlError::ArithmeticOnly { rule })
    }
}

/// Check a pure proof and compute its conclusion.
pub fn check_pl(
    d: &PlDerivation,
    ctx: &PlContext,
    theory: &Theory,
) -> Result<PlFormula, PlError> {
    let sig = &theory.sig;
    match d {
        PlDerivation::Hyp { label } => ctx
            .lookup(label)
            .cloned()
            .ok_or_else(|| PlError::UnknownLabel { label: label.clone() }),
        PlDerivation::TopI => Ok(PlFormula::Top),
        PlDerivation::AndI { left, right } => Ok(PlFormula::and(
            check_pl(left, ctx, theory)?,
            check_pl(right, ctx, theory)?,
        )),
        PlDerivation::AndEL { from } => match check_pl(from, ctx, theory)? {
            PlFormula::And { lhs, .. } => Ok(*lhs),
            other => pl_shape("and_el", "a conjunction", &other),
        },
        PlDerivation::AndER { from } => match check_pl(from, ctx, theory)? {
            PlFormula::And { rhs, .. } => Ok(*rhs),
            other => pl_shape("and_er", "a conjunction", &other),
        },
        PlDerivation::OrIL { from, right } => {
            check_formula(sig, right)?;
            Ok(PlFormula::or(check_pl(from, ctx, theory)?, right.clone()))
        }
        PlDerivation::OrIR { left, from } => {
            check_formula(sig, left)?;
            Ok(PlFormula::or(left.clone(), check_pl(from, ctx, theory)?))
        }
        PlDerivation::OrE { disj, left_label, left_case, right_label, right_case } => {
            let (a, b) = match check_pl(disj, ctx, theory)? {
                PlFormula::Or { lhs, rhs } => (*lhs, *rhs),
                other => return pl_shape("or_e", "a disjunction", &other),
            };
            let l = check_pl(left_case, &ctx.push(left_label.clone(), a)?, theory)?;
            let r = check_pl(right_case, &ctx.push(right_label.clone(), b)?, theory)?;
            expect_pl("or_e", &l, &r)?;
            Ok(l)
        }
        PlDerivation::ImpI { label, hyp, premise } => {
            check_formula(sig, hyp)?;
            let b = check_pl(premise, &ctx.push(label.clone(), hyp.clone())?, theory)?;
            Ok(PlFormula::imp(hyp.clone(), b))
        }
        PlDerivation::ImpE { imp, arg } => {
            let (a, b) = match check_pl(imp, ctx, theory)? {
                PlFormula::Imp { lhs, rhs } => (*lhs, *rhs),
                other => return pl_shape("imp_e", "an implication", &other),
            };
            let at = check_pl(arg, ctx, theory)?;
            expect_pl("imp_e", &a, &at)?;
            Ok(b)
        }
        PlDerivation::BotE { from, target } => {
            check_formula(sig, target)?;
            match check_pl(from, ctx, theory)? {
                PlFormula::Bot => Ok(target.clone()),
                other => pl_shape("bot_e", "falsity", &other),
            }
        }
        PlDerivation::ForallI { var, premise } => {
            if ctx.free_var_set().contains(var) {
                return Err(PlError::Eigenvariable { rule: "forall_i", var: var.clone() });
            }
            Ok(PlFormula::forall(var.clone(), check_pl(premise, ctx, theory)?))
        }
        PlDerivation::ForallE { from, witness } => {
            sig.check_term(witness)?;
            match check_pl(from, ctx, theory)? {
                PlFormula::Forall { var, body } => Ok(body.subst(&var, witness)),
                other => pl_shape("forall_e", "a universal", &other),
            }
        }
        PlDerivation::ExistsI { witness, var, template, from } => {
            sig.check_term(witness)?;
            check_formula(sig, template)?;
            let got = check_pl(from, ctx, theory)?;
            expect_pl("exists_i", &template.subst(var, witness), &got)?;
            Ok(PlFormula::exists(var.clone(), template.clone()))
        }
        PlDerivation::ExistsE { exists, var, label, body } => {
            let (x, matrix) = match check_pl(exists, ctx, theory)? {
                PlFormula::Exists { var, body } => (var, *body),
                other => return pl_shape("exists_e", "an existential", &other),
            };
            if &x != var && matrix.free_var_set().contains(var) {
                return Err(PlError::Eigenvariable { rule: "exists_e", var: var.clone() });
            }
            let inst = matrix.subst(&x, &Term::var(var.clone()));
            let c = check_pl(body, &ctx.push(label.clone(), inst)?, theory)?;
            let mut fv = ctx.free_var_set();
            c.free_vars(&mut fv);
            if fv.contains(var) {
                return Err(PlError::Eigenvariable { rule: "exists_e", var: var.clone() });
            }
            Ok(c)
        }
        PlDerivation::EqRefl { term } => {
            require_sa_pl(theory, "eq_refl")?;
            sig.check_term(term)?;
            Ok(PlFormula::eq(term.clone(), term.clone()))
        }
        PlDerivation::EqSym { from } => {
            require_sa_pl(theory, "eq_sym")?;
            let (s, t) = eq_sides_pl("eq_sym", &check_pl(from, ctx, theory)?)?;
            Ok(PlFormula::eq(t, s))
        }
        PlDerivation::EqTrans { left, right } => {
            require_sa_pl(theory, "eq_trans")?;
            let (r, s1) = eq_sides_pl("eq_trans", &check_pl(left, ctx, theory)?)?;
            let (s2, t) = eq_sides_pl("eq_trans", &check_pl(right, ctx, theory)?)?;
            if s1 != s2 {
                return Err(PlError::RuleShape {
                    rule: "eq_trans",
                    expected: format!("shared middle term `{s1}`"),
                    found: s2.to_string(),
                });
            }
            Ok(PlFormula::eq(r, t))
        }
        PlDerivation::SuccNonzero { term } => {
            require_sa_pl(theory, "succ_nonzero")?;
            sig.check_term(term)?;
            Ok(PlFormula::neq(Term::app("succ", vec![term.clone()]), Term::num(0)))
        }
        PlDerivation::SuccInj { from } => {
            require_sa_pl(theory, "succ_inj")?;
            let (s, t) = eq_sides_pl("succ_inj", &check_pl(from, ctx, theory)?)?;
            let strip = |u: &Term| match u {
                Term::App { f, args } if f.as_str() == "succ" && args.len() == 1 => {
                    Some(args[0].clone())
                }
                _ => None,
            };
            match (strip(&s), strip(&t)) {
                (Some(a), Some(b)) => Ok(PlFormula::eq(a, b)),
                _ => Err(PlError::RuleShape {
                    rule: "succ_inj",
                    expected: "an equation between successors".to_string(),
                    found: PlFormula::eq(s, t).to_string(),
                }),
            }
        }
        PlDerivation::DefEq { id, binding } => {
            require_sa_pl(theory, "defeq")?;
            let eq = theory
                .defeq(id)
                .ok_or_else(|| PlError::UnknownDefEq { id: id.clone() })?;
            for p in &eq.params {
                if !binding.contains_key(p) {
                    return Err(PlError::DefEqBinding { id: id.clone(), var: p.clone() });
                }
            }
            for k in binding.keys() {
                if !eq.params.contains(k) {
                    return Err(PlError::DefEqBinding { id: id.clone(), var: k.clone() });
                }
            }
            for t in binding.values() {
                sig.check_term(t)?;
            }
            let apply = |t: &Term| binding.iter().fold(t.clone(), |acc, (x, u)| acc.subst(x, u));
            Ok(PlFormula::eq(apply(&eq.lhs), apply(&eq.rhs)))
        }
        PlDerivation::Ind { base, var, label, template, step } => {
            require_sa_pl(theory, "ind")?;
            check_formula(sig, template)?;
            if ctx.free_var_set().contains(var) {
                return Err(PlError::Eigenvariable { rule: "ind", var: var.clone() });
            }
            let b = check_pl(base, ctx, theory)?;
            expect_pl("ind", &template.subst(var, &Term::num(0)), &b)?;
            let sctx = ctx.push(label.clone(), template.clone())?;
            let s = check_pl(step, &sctx, theory)?;
            let succ_v = Term::app("succ", vec![Term::var(var.clone())]);
            expect_pl("ind", &template.subst(var, &succ_v), &s)?;
            Ok(PlFormula::forall(var.clone(), template.clone()))
        }
        PlDerivation::Leib { eq, body, var, template } => {
            require_sa_pl(theory, "leib")?;
            check_formula(sig, template)?;
            let (s, t) = eq_sides_pl("leib", &check_pl(eq, ctx, theory)?)?;
            let got = check_pl(body, ctx, theory)?;
            expect_pl("leib", &template.subst(var, &s), &got)?;
            Ok(template.subst(var, &t))
        }
    }
}

/// Thread a state formula through a pure formula, turning implications and
/// universals into their guarded forms. Fails if a binder would capture a
/// variable of the state formula.
pub fn embed_formula(a: &PlFormula, alpha: &StateFormula) -> Result<MainFormula, PlError> {
    match a {
        PlFormula::Top => Ok(MainFormula::Top),
        PlFormula::Bot => Ok(MainFormula::Bot),
        PlFormula::Atom { p, args } => Ok(MainFormula::Atom { p: p.clone(), args: args.clone() }),
        PlFormula::And { lhs, rhs } => Ok(MainFormula::and(
            embed_formula(lhs, alpha)?,
            embed_formula(rhs, alpha)?,
        )),
        PlFormula::Or { lhs, rhs } => Ok(MainFormula::or(
            embed_formula(lhs, alpha)?,
            embed_formula(rhs, alpha)?,
        )),
        PlFormula::Imp { lhs, rhs } => Ok(MainFormula::imp(
            embed_formula(lhs, alpha)?,
            Triple::new(alpha.clone(), embed_formula(rhs, alpha)?, alpha.clone()),
        )),
        PlFormula::Forall { var, body } => {
            if alpha.free_var_set().contains(var) {
                return Err(PlError::StateCapture { var: var.clone(), state: alpha.clone() });
            }
            Ok(MainFormula::forall(
                var.clone(),
                Triple::new(alpha.clone(), embed_formula(body, alpha)?, alpha.clone()),
            ))
        }
        PlFormula::Exists { var, body } => {
            if alpha.free_var_set().contains(var) {
                return Err(PlError::StateCapture { var: var.clone(), state: alpha.clone() });
            }
            Ok(MainFormula::exists(var.clone(), embed_formula(body, alpha)?))
        }
    }
}

/// Eigenvariables introduced anywhere in a proof (quantifier rules, induction,
/// rewriting abstractions).
fn eigenvars(d: &PlDerivation, out: &mut BTreeSet<Ident>) {
    match d {
        PlDerivation::Hyp { .. }
        | PlDerivation::TopI
        | PlDerivation::EqRefl { .. }
        | PlDerivation::SuccNonzero { .. }
        | PlDerivation::DefEq { .. } => {}
        PlDerivation::AndI { left, right } | PlDerivation::EqTrans { left, right } => {
            eigenvars(left, out);
            eigenvars(right, out);
        }
        PlDerivation::AndEL { from }
        | PlDerivation::AndER { from }
        | PlDerivation::OrIL { from, .. }
        | PlDerivation::OrIR { from, .. }
        | PlDerivation::BotE { from, .. }
        | PlDerivation::EqSym { from }
        | PlDerivation::SuccInj { from } => eigenvars(from, out),
        PlDerivation::OrE { disj, left_case, right_case, .. } => {
            eigenvars(disj, out);
            eigenvars(left_case, out);
            eigenvars(right_case, out);
        }
        PlDerivation::ImpI { premise, .. } => eigenvars(premise, out),
        PlDerivation::ImpE { imp, arg } => {
            eigenvars(imp, out);
            eigenvars(arg, out);
        }
        PlDerivation::ForallI { var, premise } => {
            out.insert(var.clone());
            eigenvars(premise, out);
        }
        PlDerivation::ForallE { from, .. } => eigenvars(from, out),
        PlDerivation::ExistsI { var, from, .. } => {
            out.insert(var.clone());
            eigenvars(from, out);
        }
        PlDerivation::ExistsE { exists, var, body, .. } => {
            out.insert(var.clone());
            eigenvars(exists, out);
            eigenvars(body, out);
        }
        PlDerivation::Ind { base, var, step, .. } => {
            out.insert(var.clone());
            eigenvars(base, out);
            eigenvars(step, out);
        }
        PlDerivation::Leib { eq, body, var, .. } => {
            out.insert(var.clone());
            eigenvars(eq, out);
            eigenvars(body, out);
        }
    }
}

/// Re-read a pure proof as a stateful one under an ambient state formula. The
/// proof is checked first; the result is a derivation of the embedded
/// conclusion between `alpha` and `alpha`, valid in the embedded context.
pub fn embed_pl(
    d: &PlDerivation,
    alpha: &StateFormula,
    theory: &Theory,
) -> Result<Derivation, PlError> {
    embed_pl_in(d, &PlContext::new(), alpha, theory).map(|(deriv, _)| deriv)
}

/// As `embed_pl`, but under a hypothesis context; also returns the embedded
/// context the resulting derivation must be checked in.
pub fn embed_pl_in(
    d: &PlDerivation,
    ctx: &PlContext,
    alpha: &StateFormula,
    theory: &Theory,
) -> Result<(Derivation, Context), PlError> {
    check_pl(d, ctx, theory)?;
    let mut eigen = BTreeSet::new();
    eigenvars(d, &mut eigen);
    let state_vars = alpha.free_var_set();
    if let Some(var) = eigen.intersection(&state_vars).next() {
        return Err(PlError::StateCapture { var: var.clone(), state: alpha.clone() });
    }
    let mut embedded_ctx = Context::new();
    for (label, formula) in ctx.entries() {
        embedded_ctx = embedded_ctx.push(label.clone(), embed_formula(formula, alpha)?)?;
    }
    let deriv = embed_d(d, alpha)?;
    Ok((deriv, embedded_ctx))
}

fn embed_d(d: &PlDerivation, alpha: &StateFormula) -> Result<Derivation, PlError> {
    let a = alpha.clone();
    Ok(match d {
        PlDerivation::Hyp { label } => {
            Derivation::Hyp { label: label.clone(), state: a }
        }
        PlDerivation::TopI => Derivation::TopAx { state: a },
        PlDerivation::AndI { left, right } => Derivation::AndI {
            left: Box::new(embed_d(left, alpha)?),
            right: Box::new(embed_d(right, alpha)?),
        },
        PlDerivation::AndEL { from } => {
            Derivation::AndEL { from: Box::new(embed_d(from, alpha)?) }
        }
        PlDerivation::AndER { from } => {
            Derivation::AndER { from: Box::new(embed_d(from, alpha)?) }
        }
        PlDerivation::OrIL { from, right } => Derivation::OrIL {
            from: Box::new(embed_d(from, alpha)?),
            right: embed_formula(right, alpha)?,
        },
        PlDerivation::OrIR { left, from } => Derivation::OrIR {
            left: embed_formula(left, alpha)?,
            from: Box::new(embed_d(from, alpha)?),
        },
        PlDerivation::OrE { disj, left_label, left_case, right_label, right_case } => {
            Derivation::OrE {
                disj: Box::new(embed_d(disj, alpha)?),
                left_label: left_label.clone(),
                left_case: Box::new(embed_d(left_case, alpha)?),
                right_label: right_label.clone(),
                right_case: Box::new(embed_d(right_case, alpha)?),
            }
        }
        PlDerivation::ImpI { label, hyp, premise } => Derivation::ImpI {
            label: label.clone(),
            hyp: embed_formula(hyp, alpha)?,
            premise: Box::new(embed_d(premise, alpha)?),
            outer: a,
        },
        PlDerivation::ImpE { imp, arg } => Derivation::ImpE {
            imp: Box::new(embed_d(imp, alpha)?),
            arg: Box::new(embed_d(arg, alpha)?),
        },
        PlDerivation::BotE { from, target } => Derivation::BotE {
            from: Box::new(embed_d(from, alpha)?),
            target: embed_formula(target, alpha)?,
            post: a,
        },
        PlDerivation::ForallI { var, premise } => Derivation::ForallI {
            var: var.clone(),
            premise: Box::new(embed_d(premise, alpha)?),
            outer: a,
        },
        PlDerivation::ForallE { from, witness } => Derivation::ForallE {
            from: Box::new(embed_d(from, alpha)?),
            witness: witness.clone(),
        },
        PlDerivation::ExistsI { witness, var, template, from } => Derivation::ExistsI {
            witness: witness.clone(),
            var: var.clone(),
            template: embed_formula(template, alpha)?,
            from: Box::new(embed_d(from, alpha)?),
        },
        PlDerivation::ExistsE { exists, var, label, body } => Derivation::ExistsE {
            exists: Box::new(embed_d(exists, alpha)?),
            var: var.clone(),
            label: label.clone(),
            body: Box::new(embed_d(body, alpha)?),
        },
        PlDerivation::EqRefl { term } => {
            Derivation::EqRefl { term: term.clone(), state: a }
        }
        PlDerivation::EqSym { from } => {
            Derivation::EqSym { from: Box::new(embed_d(from, alpha)?) }
        }
        PlDerivation::EqTrans { left, right } => Derivation::EqTrans {
            left: Box::new(embed_d(left, alpha)?),
            right: Box::new(embed_d(right, alpha)?),
        },
        PlDerivation::SuccNonzero { term } => {
            Derivation::SuccNonzero { term: term.clone(), state: a }
        }
        PlDerivation::SuccInj { from } => {
            Derivation::SuccInj { from: Box::new(embed_d(from, alpha)?) }
        }
        PlDerivation::DefEq { id, binding } => Derivation::DefEq {
            id: id.clone(),
            binding: binding.clone(),
            state: a,
        },
        PlDerivation::Ind { base, var, label, template, step } => Derivation::Ind {
            base: Box::new(embed_d(base, alpha)?),
            var: var.clone(),
            label: label.clone(),
            template: embed_formula(template, alpha)?,
            step: Box::new(embed_d(step, alpha)?),
            outer: a,
        },
        PlDerivation::Leib { eq, body, var, template } => Derivation::Ext {
            eq: Box::new(embed_d(eq, alpha)?),
            body: Box::new(embed_d(body, alpha)?),
            var: var.clone(),
            template: embed_formula(template, alpha)?,
            post_template: a,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{check_in, derive_ext, DefEquation};
    use crate::syntax::StateFormula as SF;

    fn arith_theory() -> Theory {
        let mut th = Theory::new("arith", Mode::Sa);
        th.sig.declare_fun(Ident::new("plus"), 2).unwrap();
        th.sig.declare_state_pred(Ident::new("sort"), 1).unwrap();
        th.add_defeq(DefEquation {
            id: Ident::new("plus_zero"),
            params: vec![Ident::new("x")],
            lhs: Term::app("plus", vec![Term::var("x"), Term::num(0)]),
            rhs: Term::var("x"),
        })
        .unwrap();
        th.add_defeq(DefEquation {
            id: Ident::new("plus_succ"),
            params: vec![Ident::new("x"), Ident::new("y")],
            lhs: Term::app(
                "plus",
                vec![Term::var("x"), Term::app("succ", vec![Term::var("y")])],
            ),
            rhs: Term::app("succ", vec![Term::app("plus", vec![Term::var("x"), Term::var("y")])]),
        })
        .unwrap();
        th
    }

    fn plus(a: Term, b: Term) -> Term {
        Term::app("plus", vec![a, b])
    }

    fn succ(a: Term) -> Term {
        Term::app("succ", vec![a])
    }

    fn bind(pairs: &[(&str, Term)]) -> Binding {
        pairs.iter().map(|(k, v)| (Ident::new(k), v.clone())).collect()
    }

    /// forall x . plus(0, x) = x, by induction on x.
    fn zero_plus_proof() -> PlDerivation {
        let x = Term::var("x");
        let template = PlFormula::eq(plus(Term::num(0), x.clone()), x.clone());
        // Base: plus(0, 0) = 0 is an instance of the zero equation.
        let base = PlDerivation::DefEq {
            id: Ident::new("plus_zero"),
            binding: bind(&[("x", Term::num(0))]),
        };
        // Step: plus(0, succ x) = succ(plus(0, x)) = succ x.
        let unfold = PlDerivation::DefEq {
            id: Ident::new("plus_succ"),
            binding: bind(&[("x", Term::num(0)), ("y", x.clone())]),
        };
        // From the hypothesis plus(0,x) = x, rewrite under succ: the template
        // abstracts the right-hand occurrence.
        let congruence = PlDerivation::Leib {
            eq: Box::new(PlDerivation::Hyp { label: Ident::new("ih") }),
            body: Box::new(PlDerivation::EqRefl {
                term: succ(plus(Term::num(0), x.clone())),
            }),
            var: Ident::new("z"),
            template: PlFormula::eq(succ(plus(Term::num(0), x.clone())), succ(Term::var("z"))),
        };
        let step = PlDerivation::EqTrans {
            left: Box::new(unfold),
            right: Box::new(congruence),
        };
        PlDerivation::Ind {
            base: Box::new(base),
            var: Ident::new("x"),
            label: Ident::new("ih"),
            template,
            step: Box::new(step),
        }
    }

    #[test]
    fn induction_proof_checks() {
        let th = arith_theory();
        let concl = check_pl(&zero_plus_proof(), &PlContext::new(), &th).unwrap();
        let x = Term::var("x");
        assert_eq!(
            concl,
            PlFormula::forall("x", PlFormula::eq(plus(Term::num(0), x.clone()), x))
        );
    }

    #[test]
    fn embedded_induction_checks_in_main_logic() {
        let th = arith_theory();
        let alpha = SF::atom("sort", vec![Term::num(3)]);
        let embedded = embed_pl(&zero_plus_proof(), &alpha, &th).unwrap();
        let seq = check_in(&embedded, &Context::new(), &th).unwrap();
        let expected = embed_formula(
            &check_pl(&zero_plus_proof(), &PlContext::new(), &th).unwrap(),
            &alpha,
        )
        .unwrap();
        assert_eq!(seq.triple, Triple::new(alpha.clone(), expected, alpha));
    }

    #[test]
    fn embedding_rejects_state_capture() {
        let th = arith_theory();
        // The state formula mentions x free; a proof binding x cannot thread it.
        let alpha = SF::atom("sort", vec![Term::var("x")]);
        let err = embed_pl(&zero_plus_proof(), &alpha, &th).unwrap_err();
        assert!(matches!(err, PlError::StateCapture { .. }));
    }

    #[test]
    fn modus_ponens_embeds() {
        let mut th = Theory::new("props", Mode::Sl);
        th.sig.declare_pred(Ident::new("P"), 0).unwrap();
        th.sig.declare_pred(Ident::new("Q"), 0).unwrap();
        th.sig.declare_state_pred(Ident::new("ready"), 0).unwrap();
        let p = PlFormula::atom("P", vec![]);
        let q = PlFormula::atom("Q", vec![]);
        // (P -> Q) -> P -> Q
        let d = PlDerivation::ImpI {
            label: Ident::new("f"),
            hyp: PlFormula::imp(p.clone(), q.clone()),
            premise: Box::new(PlDerivation::ImpI {
                label: Ident::new("x"),
                hyp: p.clone(),
                premise: Box::new(PlDerivation::ImpE {
                    imp: Box::new(PlDerivation::Hyp { label: Ident::new("f") }),
                    arg: Box::new(PlDerivation::Hyp { label: Ident::new("x") }),
                }),
            }),
        };
        let alpha = SF::atom("ready", vec![]);
        let embedded = embed_pl(&d, &alpha, &th).unwrap();
        let seq = check_in(&embedded, &Context::new(), &th).unwrap();
        assert_eq!(seq.triple.pre, alpha);
        assert_eq!(seq.triple.post, alpha);
        // The embedded shape is (P => {a} Q {a}) => {a} P => {a} Q {a} {a}.
        let pe = MainFormula::atom("P", vec![]);
        let qe = MainFormula::atom("Q", vec![]);
        let inner = MainFormula::imp(pe, Triple::new(alpha.clone(), qe, alpha.clone()));
        let outer = MainFormula::imp(
            inner.clone(),
            Triple::new(alpha.clone(), inner, alpha.clone()),
        );
        // Both the hypothesis and the guarded consequent of the result are the
        // embedded inner implication.
        let got = seq.triple.body;
        if !crate::syntax::alpha_eq(&got, &outer) {
            panic!("embedded shape differs:\n  got      {got}\n  expected {outer}");
        }
    }

    #[test]
    fn transport_along_equation() {
        let th = arith_theory();
        // 0 + 1 = 1, via the step equation then the rewritten base case.
        let one = Term::num(1);
        let zp1 = plus(Term::num(0), one.clone());
        let unfold = PlDerivation::DefEq {
            id: Ident::new("plus_succ"),
            binding: bind(&[("x", Term::num(0)), ("y", Term::num(0))]),
        };
        let base = PlDerivation::DefEq {
            id: Ident::new("plus_zero"),
            binding: bind(&[("x", Term::num(0))]),
        };
        let congruence = PlDerivation::Leib {
            eq: Box::new(base),
            body: Box::new(PlDerivation::EqRefl { term: succ(plus(Term::num(0), Term::num(0))) }),
            var: Ident::new("z"),
            template: PlFormula::eq(succ(plus(Term::num(0), Term::num(0))), succ(Term::var("z"))),
        };
        let eq_proof = PlDerivation::EqTrans {
            left: Box::new(unfold),
            right: Box::new(congruence),
        };
        assert_eq!(
            check_pl(&eq_proof, &PlContext::new(), &th).unwrap(),
            PlFormula::eq(zp1.clone(), one.clone())
        );

        // Transport {sort(0+1)} true {sort(0+1)} to {sort(1)} true {sort(1)}.
        let sort = |t: Term| SF::atom("sort", vec![t]);
        let body = Derivation::TopAx { state: sort(zp1.clone()) };
        let moved = derive_ext(
            &eq_proof,
            body,
            &Ident::new("z"),
            &MainFormula::Top,
            &sort(Term::var("z")),
            &sort(Term::var("z")),
            &th,
        )
        .unwrap();
        let seq = check_in(&moved, &Context::new(), &th).unwrap();
        assert_eq!(
            seq.triple,
            Triple::new(sort(one.clone()), MainFormula::Top, sort(one))
        );
    }
}
