//! The simply typed term language programs are extracted into: products, sums,
//! functions over a base sort `D` of individuals and a unit-like sort `C` of
//! trivial computations, plus a case construct over state formulas. In
//! arithmetic mode the language gains a primitive recursor and a bounded while
//! loop whose condition is a state formula with a counter hole.
//!
//! Terms are pure syntax here — effects only appear when a term is run under
//! the state-monad semantics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::{Ident, Mode, Signature, StateFormula, Term};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StType {
    D,
    C,
    Prod { fst: Box<StType>, snd: Box<StType> },
    Sum { left: Box<StType>, right: Box<StType> },
    Arrow { dom: Box<StType>, cod: Box<StType> },
}

impl StType {
    pub fn prod(fst: StType, snd: StType) -> StType {
        StType::Prod { fst: Box::new(fst), snd: Box::new(snd) }
    }

    pub fn sum(left: StType, right: StType) -> StType {
        StType::Sum { left: Box::new(left), right: Box::new(right) }
    }

    pub fn arrow(dom: StType, cod: StType) -> StType {
        StType::Arrow { dom: Box::new(dom), cod: Box::new(cod) }
    }

    /// The type of a declared n-ary function symbol: `D` itself for arity 0,
    /// otherwise one argument of right-nested product shape `D × (D × … × D)`.
    pub fn of_fun(arity: usize) -> StType {
        if arity == 0 {
            return StType::D;
        }
        let mut dom = StType::D;
        for _ in 1..arity {
            dom = StType::prod(StType::D, dom);
        }
        StType::arrow(dom, StType::D)
    }
}

fn fmt_type_prec(t: &StType, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        StType::D => write!(f, "D"),
        StType::C => write!(f, "C"),
        StType::Prod { fst, snd } => {
            let wrap = prec > 3;
            if wrap {
                write!(f, "(")?;
            }
            fmt_type_prec(fst, 4, f)?;
            write!(f, " * ")?;
            fmt_type_prec(snd, 3, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        StType::Sum { left, right } => {
            let wrap = prec > 2;
            if wrap {
                write!(f, "(")?;
            }
            fmt_type_prec(left, 3, f)?;
            write!(f, " + ")?;
            fmt_type_prec(right, 2, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        StType::Arrow { dom, cod } => {
            let wrap = prec > 1;
            if wrap {
                write!(f, "(")?;
            }
            fmt_type_prec(dom, 2, f)?;
            write!(f, " -> ")?;
            fmt_type_prec(cod, 1, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for StType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_type_prec(self, 0, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StTerm {
    Skip,
    Default { ty: StType },
    /// A declared computation constant (the Λ_S vocabulary of a theory).
    Const { name: Ident },
    /// A declared first-order function symbol, packaged as a program.
    Fun { name: Ident },
    Var { name: Ident },
    Proj0 { pair: Box<StTerm> },
    Proj1 { pair: Box<StTerm> },
    /// Pairing, written `s ∘ t`. Under the monadic semantics the left
    /// component runs first.
    Comp { fst: Box<StTerm>, snd: Box<StTerm> },
    Inj0 { val: Box<StTerm>, right: StType },
    Inj1 { val: Box<StTerm>, left: StType },
    Elim { scrutinee: Box<StTerm>, on_left: Box<StTerm>, on_right: Box<StTerm> },
    Lam { var: Ident, ty: StType, body: Box<StTerm> },
    App { fun: Box<StTerm>, arg: Box<StTerm> },
    /// Case over a state formula: all free variables of `cond` must be
    /// individuals. Runs exactly one branch.
    Ite { cond: StateFormula, then_branch: Box<StTerm>, else_branch: Box<StTerm> },
    /// Primitive recursion (arithmetic mode): `rec(s, t) : D → X` from a base
    /// `s : X` and a step `t : D → X → X`.
    Rec { base: Box<StTerm>, step: Box<StTerm> },
    /// Bounded loop (arithmetic mode). `cond` has the counter `hole` free;
    /// `r : D → X → X` is the body, `s : D → X → Y` the early exit,
    /// `t : X → Y` the exhausted exit, `u : D` the iteration bound. The whole
    /// loop has type `X → Y`.
    While {
        hole: Ident,
        cond: StateFormula,
        r: Box<StTerm>,
        s: Box<StTerm>,
        t: Box<StTerm>,
        u: Box<StTerm>,
    },
}

impl StTerm {
    pub fn var(name: impl Into<Ident>) -> StTerm {
        StTerm::Var { name: name.into() }
    }

    pub fn cnst(name: impl Into<Ident>) -> StTerm {
        StTerm::Const { name: name.into() }
    }

    pub fn fun(name: impl Into<Ident>) -> StTerm {
        StTerm::Fun { name: name.into() }
    }

    pub fn proj0(pair: StTerm) -> StTerm {
        StTerm::Proj0 { pair: Box::new(pair) }
    }

    pub fn proj1(pair: StTerm) -> StTerm {
        StTerm::Proj1 { pair: Box::new(pair) }
    }

    pub fn comp(fst: StTerm, snd: StTerm) -> StTerm {
        StTerm::Comp { fst: Box::new(fst), snd: Box::new(snd) }
    }

    pub fn inj0(val: StTerm, right: StType) -> StTerm {
        StTerm::Inj0 { val: Box::new(val), right }
    }

    pub fn inj1(val: StTerm, left: StType) -> StTerm {
        StTerm::Inj1 { val: Box::new(val), left }
    }

    pub fn elim(scrutinee: StTerm, on_left: StTerm, on_right: StTerm) -> StTerm {
        StTerm::Elim {
            scrutinee: Box::new(scrutinee),
            on_left: Box::new(on_left),
            on_right: Box::new(on_right),
        }
    }

    pub fn lam(var: impl Into<Ident>, ty: StType, body: StTerm) -> StTerm {
        StTerm::Lam { var: var.into(), ty, body: Box::new(body) }
    }

    pub fn app(fun: StTerm, arg: StTerm) -> StTerm {
        StTerm::App { fun: Box::new(fun), arg: Box::new(arg) }
    }

    pub fn ite(cond: StateFormula, then_branch: StTerm, else_branch: StTerm) -> StTerm {
        StTerm::Ite {
            cond,
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
        }
    }

    pub fn rec(base: StTerm, step: StTerm) -> StTerm {
        StTerm::Rec { base: Box::new(base), step: Box::new(step) }
    }

    pub fn default_of(ty: StType) -> StTerm {
        StTerm::Default { ty }
    }

    /// Free variables, both individuals and program variables (they share one
    /// namespace). Condition formulas contribute their term variables; a while
    /// loop's hole is bound within its own condition.
    pub fn free_vars(&self, out: &mut BTreeSet<Ident>) {
        match self {
            StTerm::Skip | StTerm::Default { .. } | StTerm::Const { .. } | StTerm::Fun { .. } => {}
            StTerm::Var { name } => {
                out.insert(name.clone());
            }
            StTerm::Proj0 { pair } | StTerm::Proj1 { pair } => pair.free_vars(out),
            StTerm::Comp { fst, snd } => {
                fst.free_vars(out);
                snd.free_vars(out);
            }
            StTerm::Inj0 { val, .. } | StTerm::Inj1 { val, .. } => val.free_vars(out),
            StTerm::Elim { scrutinee, on_left, on_right } => {
                scrutinee.free_vars(out);
                on_left.free_vars(out);
                on_right.free_vars(out);
            }
            StTerm::Lam { var, body, .. } => {
                let mut inner = BTreeSet::new();
                body.free_vars(&mut inner);
                inner.remove(var);
                out.extend(inner);
            }
            StTerm::App { fun, arg } => {
                fun.free_vars(out);
                arg.free_vars(out);
            }
            StTerm::Ite { cond, then_branch, else_branch } => {
                cond.free_vars(out);
                then_branch.free_vars(out);
                else_branch.free_vars(out);
            }
            StTerm::Rec { base, step } => {
                base.free_vars(out);
                step.free_vars(out);
            }
            StTerm::While { hole, cond, r, s, t, u } => {
                let mut cvars = BTreeSet::new();
                cond.free_vars(&mut cvars);
                cvars.remove(hole);
                out.extend(cvars);
                r.free_vars(out);
                s.free_vars(out);
                t.free_vars(out);
                u.free_vars(out);
            }
        }
    }

    pub fn free_var_set(&self) -> BTreeSet<Ident> {
        let mut s = BTreeSet::new();
        self.free_vars(&mut s);
        s
    }

    /// Substitute a first-order term for a variable: program-variable
    /// occurrences become the interpreted term, condition formulas substitute
    /// at the term level. Used when instantiating axiom-schema realizers.
    pub fn subst_term(&self, x: &Ident, term: &Term) -> StTerm {
        match self {
            StTerm::Skip | StTerm::Default { .. } | StTerm::Const { .. } | StTerm::Fun { .. } => {
                self.clone()
            }
            StTerm::Var { name } => {
                if name == x {
                    interp_term(term)
                } else {
                    self.clone()
                }
            }
            StTerm::Proj0 { pair } => StTerm::proj0(pair.subst_term(x, term)),
            StTerm::Proj1 { pair } => StTerm::proj1(pair.subst_term(x, term)),
            StTerm::Comp { fst, snd } => {
                StTerm::comp(fst.subst_term(x, term), snd.subst_term(x, term))
            }
            StTerm::Inj0 { val, right } => {
                StTerm::inj0(val.subst_term(x, term), right.clone())
            }
            StTerm::Inj1 { val, left } => StTerm::inj1(val.subst_term(x, term), left.clone()),
            StTerm::Elim { scrutinee, on_left, on_right } => StTerm::elim(
                scrutinee.subst_term(x, term),
                on_left.subst_term(x, term),
                on_right.subst_term(x, term),
            ),
            StTerm::Lam { var, ty, body } => {
                if var == x {
                    return self.clone();
                }
                // Extractor-made and schema-made binders are fresh by
                // construction; renaming here would hide a bug, so insist.
                debug_assert!(
                    !term.free_var_set().contains(var),
                    "substitution would capture `{var}`"
                );
                StTerm::lam(var.clone(), ty.clone(), body.subst_term(x, term))
            }
            StTerm::App { fun, arg } => {
                StTerm::app(fun.subst_term(x, term), arg.subst_term(x, term))
            }
            StTerm::Ite { cond, then_branch, else_branch } => StTerm::ite(
                cond.subst(x, term),
                then_branch.subst_term(x, term),
                else_branch.subst_term(x, term),
            ),
            StTerm::Rec { base, step } => {
                StTerm::rec(base.subst_term(x, term), step.subst_term(x, term))
            }
            StTerm::While { hole, cond, r, s, t, u } => {
                let cond = if hole == x { cond.clone() } else { cond.subst(x, term) };
                StTerm::While {
                    hole: hole.clone(),
                    cond,
                    r: Box::new(r.subst_term(x, term)),
                    s: Box::new(s.subst_term(x, term)),
                    t: Box::new(t.subst_term(x, term)),
                    u: Box::new(u.subst_term(x, term)),
                }
            }
        }
    }
}

impl StTerm {
    /// Substitute a program term for a free program variable, renaming lambda
    /// binders to avoid capture. Condition formulas can only absorb a
    /// replacement that is itself first-order (a variable or nullary symbol);
    /// callers that reduce or ground terms check this before substituting, and
    /// the debug assertion keeps them honest.
    pub fn subst_program(&self, x: &Ident, r: &StTerm) -> StTerm {
        let subst_cond = |cond: &StateFormula| -> StateFormula {
            if !cond.free_var_set().contains(x) {
                return cond.clone();
            }
            match as_first_order(r) {
                Some(t) => cond.subst(x, &t),
                None => {
                    debug_assert!(false, "cannot substitute a program into a condition");
                    cond.clone()
                }
            }
        };
        match self {
            StTerm::Skip | StTerm::Default { .. } | StTerm::Const { .. } | StTerm::Fun { .. } => {
                self.clone()
            }
            StTerm::Var { name } => {
                if name == x {
                    r.clone()
                } else {
                    self.clone()
                }
            }
            StTerm::Proj0 { pair } => StTerm::proj0(pair.subst_program(x, r)),
            StTerm::Proj1 { pair } => StTerm::proj1(pair.subst_program(x, r)),
            StTerm::Comp { fst, snd } => {
                StTerm::comp(fst.subst_program(x, r), snd.subst_program(x, r))
            }
            StTerm::Inj0 { val, right } => {
                StTerm::inj0(val.subst_program(x, r), right.clone())
            }
            StTerm::Inj1 { val, left } => {
                StTerm::inj1(val.subst_program(x, r), left.clone())
            }
            StTerm::Elim { scrutinee, on_left, on_right } => StTerm::elim(
                scrutinee.subst_program(x, r),
                on_left.subst_program(x, r),
                on_right.subst_program(x, r),
            ),
            StTerm::Lam { var, ty, body } => {
                if var == x {
                    return self.clone();
                }
                if r.free_var_set().contains(var) {
                    let mut avoid = r.free_var_set();
                    avoid.extend(body.free_var_set());
                    avoid.insert(x.clone());
                    let renamed = crate::syntax::fresh(var, &avoid);
                    let body = body.subst_program(var, &StTerm::var(renamed.clone()));
                    StTerm::lam(renamed, ty.clone(), body.subst_program(x, r))
                } else {
                    StTerm::lam(var.clone(), ty.clone(), body.subst_program(x, r))
                }
            }
            StTerm::App { fun, arg } => {
                StTerm::app(fun.subst_program(x, r), arg.subst_program(x, r))
            }
            StTerm::Ite { cond, then_branch, else_branch } => StTerm::ite(
                subst_cond(cond),
                then_branch.subst_program(x, r),
                else_branch.subst_program(x, r),
            ),
            StTerm::Rec { base, step } => {
                StTerm::rec(base.subst_program(x, r), step.subst_program(x, r))
            }
            StTerm::While { hole, cond, r: body, s, t, u } => {
                // The hole binds occurrences of its name inside the condition
                // only; rename it if the replacement would collide there.
                let (hole, cond) = if hole != x
                    && cond.free_var_set().contains(x)
                    && matches!(r, StTerm::Var { name } if name == hole)
                {
                    let mut avoid = cond.free_var_set();
                    avoid.insert(x.clone());
                    let renamed = crate::syntax::fresh(hole, &avoid);
                    let cond = cond.subst(hole, &Term::var(renamed.clone()));
                    (renamed, cond)
                } else {
                    (hole.clone(), cond.clone())
                };
                let cond = if &hole == x { cond } else { subst_cond(&cond) };
                StTerm::While {
                    hole,
                    cond,
                    r: Box::new(body.subst_program(x, r)),
                    s: Box::new(s.subst_program(x, r)),
                    t: Box::new(t.subst_program(x, r)),
                    u: Box::new(u.subst_program(x, r)),
                }
            }
        }
    }
}

/// View a program term as a first-order term when it is one (a variable or a
/// nullary function symbol). This is what lets a substitution reach into
/// condition formulas, which hold first-order terms only.
pub fn as_first_order(t: &StTerm) -> Option<Term> {
    match t {
        StTerm::Var { name } => Some(Term::var(name.clone())),
        StTerm::Fun { name } => Some(Term::cnst(name.clone())),
        _ => None,
    }
}

/// `s ∗ t := p₁(s ∘ t)`: run both, keep the right component.
pub fn star(s: StTerm, t: StTerm) -> StTerm {
    StTerm::proj1(StTerm::comp(s, t))
}

/// A first-order term as a program: function symbols apply to the right-nested
/// pairing of their arguments; nullary symbols are already individuals.
pub fn interp_term(t: &Term) -> StTerm {
    match t {
        Term::Var { name } => StTerm::var(name.clone()),
        Term::App { f, args } => {
            if args.is_empty() {
                return StTerm::fun(f.clone());
            }
            let mut iter = args.iter().rev().map(interp_term);
            let mut packed = iter.next().unwrap();
            for a in iter {
                packed = StTerm::comp(a, packed);
            }
            StTerm::app(StTerm::fun(f.clone()), packed)
        }
    }
}

/// Variable typing context for the checker.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypingCtx {
    vars: BTreeMap<Ident, StType>,
}

impl TypingCtx {
    pub fn new() -> TypingCtx {
        TypingCtx::default()
    }

    pub fn bind(&self, var: Ident, ty: StType) -> TypingCtx {
        let mut vars = self.vars.clone();
        vars.insert(var, ty);
        TypingCtx { vars }
    }

    pub fn lookup(&self, var: &Ident) -> Option<&StType> {
        self.vars.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ident, &StType)> {
        self.vars.iter()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("unbound variable `{name}`")]
    UnboundVar { name: Ident },
    #[error("unknown computation constant `{name}`")]
    UnknownConst { name: Ident },
    #[error("unknown function symbol `{name}`")]
    UnknownFun { name: Ident },
    #[error("expected type {expected}, found {found}")]
    Mismatch { expected: StType, found: StType },
    #[error("expected a product, found {found}")]
    NotAProduct { found: StType },
    #[error("expected a sum, found {found}")]
    NotASum { found: StType },
    #[error("expected a function, found {found}")]
    NotAFunction { found: StType },
    #[error("case branches have different types: {left} vs {right}")]
    BranchMismatch { left: StType, right: StType },
    #[error("condition variable `{name}` must be an individual, found {found}")]
    CondVarNotIndividual { name: Ident, found: StType },
    #[error("condition variable `{name}` is unbound")]
    CondVarUnbound { name: Ident },
    #[error("`{construct}` is only available in arithmetic mode")]
    ArithmeticOnly { construct: &'static str },
    #[error("loop hole `{name}` must not occur in the typing context")]
    HoleInContext { name: Ident },
    #[error("theory declares no nullary symbol to ground free variables with")]
    NoCanonicalGround,
    #[error(transparent)]
    Syntax(#[from] crate::syntax::SyntaxError),
}

/// Everything the checker needs to know about declared symbols: arities from
/// the signature and the types of the computation constants.
#[derive(Clone, Debug, Default)]
pub struct ConstTable {
    consts: BTreeMap<Ident, StType>,
}

impl ConstTable {
    pub fn new() -> ConstTable {
        ConstTable::default()
    }

    pub fn declare(&mut self, name: Ident, ty: StType) -> Result<(), crate::syntax::SyntaxError> {
        if self.consts.contains_key(&name) {
            return Err(crate::syntax::SyntaxError::Duplicate { name });
        }
        self.consts.insert(name, ty);
        Ok(())
    }

    pub fn lookup(&self, name: &Ident) -> Option<&StType> {
        self.consts.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ident, &StType)> {
        self.consts.iter()
    }
}

fn check_cond_vars(
    cond: &StateFormula,
    skip: Option<&Ident>,
    ctx: &TypingCtx,
    sig: &Signature,
) -> Result<(), TypeError> {
    sig.check_state_formula(cond)?;
    let mut vars = BTreeSet::new();
    cond.free_vars(&mut vars);
    for v in vars {
        if Some(&v) == skip {
            continue;
        }
        match ctx.lookup(&v) {
            None => return Err(TypeError::CondVarUnbound { name: v }),
            Some(StType::D) => {}
            Some(other) => {
                return Err(TypeError::CondVarNotIndividual { name: v, found: other.clone() })
            }
        }
    }
    Ok(())
}

/// Infer the type of `t`.
pub fn typecheck(
    t: &StTerm,
    ctx: &TypingCtx,
    consts: &ConstTable,
    sig: &Signature,
) -> Result<StType, TypeError> {
    match t {
        StTerm::Skip => Ok(StType::C),
        StTerm::Default { ty } => Ok(ty.clone()),
        StTerm::Const { name } => consts
            .lookup(name)
            .cloned()
            .ok_or_else(|| TypeError::UnknownConst { name: name.clone() }),
        StTerm::Fun { name } => {
            let arity =
                sig.fun_arity(name).ok_or_else(|| TypeError::UnknownFun { name: name.clone() })?;
            Ok(StType::of_fun(arity))
        }
        StTerm::Var { name } => ctx
            .lookup(name)
            .cloned()
            .ok_or_else(|| TypeError::UnboundVar { name: name.clone() }),
        StTerm::Proj0 { pair } => match typecheck(pair, ctx, consts, sig)? {
            StType::Prod { fst, .. } => Ok(*fst),
            found => Err(TypeError::NotAProduct { found }),
        },
        StTerm::Proj1 { pair } => match typecheck(pair, ctx, consts, sig)? {
            StType::Prod { snd, .. } => Ok(*snd),
            found => Err(TypeError::NotAProduct { found }),
        },
        StTerm::Comp { fst, snd } => Ok(StType::prod(
            typecheck(fst, ctx, consts, sig)?,
            typecheck(snd, ctx, consts, sig)?,
        )),
        StTerm::Inj0 { val, right } => Ok(StType::sum(
            typecheck(val, ctx, consts, sig)?,
            right.clone(),
        )),
        StTerm::Inj1 { val, left } => Ok(StType::sum(
            left.clone(),
            typecheck(val, ctx, consts, sig)?,
        )),
        StTerm::Elim { scrutinee, on_left, on_right } => {
            let (lt, rt) = match typecheck(scrutinee, ctx, consts, sig)? {
                StType::Sum { left, right } => (*left, *right),
                found => return Err(TypeError::NotASum { found }),
            };
            let fl = typecheck(on_left, ctx, consts, sig)?;
            let fr = typecheck(on_right, ctx, consts, sig)?;
            let zl = match fl {
                StType::Arrow { dom, cod } if *dom == lt => *cod,
                found => {
                    return Err(TypeError::Mismatch {
                        expected: StType::arrow(lt, StType::D),
                        found,
                    })
                }
            };
            let zr = match fr {
                StType::Arrow { dom, cod } if *dom == rt => *cod,
                found => {
                    return Err(TypeError::Mismatch {
                        expected: StType::arrow(rt, zl),
                        found,
                    })
                }
            };
            if zl != zr {
                return Err(TypeError::BranchMismatch { left: zl, right: zr });
            }
            Ok(zl)
        }
        StTerm::Lam { var, ty, body } => {
            let inner = ctx.bind(var.clone(), ty.clone());
            let cod = typecheck(body, &inner, consts, sig)?;
            Ok(StType::arrow(ty.clone(), cod))
        }
        StTerm::App { fun, arg } => {
            let ft = typecheck(fun, ctx, consts, sig)?;
            let at = typecheck(arg, ctx, consts, sig)?;
            match ft {
                StType::Arrow { dom, cod } => {
                    if *dom == at {
                        Ok(*cod)
                    } else {
                        Err(TypeError::Mismatch { expected: *dom, found: at })
                    }
                }
                found => Err(TypeError::NotAFunction { found }),
            }
        }
        StTerm::Ite { cond, then_branch, else_branch } => {
            check_cond_vars(cond, None, ctx, sig)?;
            let tt = typecheck(then_branch, ctx, consts, sig)?;
            let et = typecheck(else_branch, ctx, consts, sig)?;
            if tt != et {
                return Err(TypeError::BranchMismatch { left: tt, right: et });
            }
            Ok(tt)
        }
        StTerm::Rec { base, step } => {
            if sig.mode != Mode::Sa {
                return Err(TypeError::ArithmeticOnly { construct: "rec" });
            }
            let xt = typecheck(base, ctx, consts, sig)?;
            let st = typecheck(step, ctx, consts, sig)?;
            let expected = StType::arrow(StType::D, StType::arrow(xt.clone(), xt.clone()));
            if st != expected {
                return Err(TypeError::Mismatch { expected, found: st });
            }
            Ok(StType::arrow(StType::D, xt))
        }
        StTerm::While { hole, cond, r, s, t, u } => {
            if sig.mode != Mode::Sa {
                return Err(TypeError::ArithmeticOnly { construct: "while" });
            }
            if ctx.lookup(hole).is_some() {
                return Err(TypeError::HoleInContext { name: hole.clone() });
            }
            check_cond_vars(cond, Some(hole), ctx, sig)?;
            let ut = typecheck(u, ctx, consts, sig)?;
            if ut != StType::D {
                return Err(TypeError::Mismatch { expected: StType::D, found: ut });
            }
            // r : D → X → X fixes X; s : D → X → Y fixes Y; t must be X → Y.
            let rt = typecheck(r, ctx, consts, sig)?;
            let x = match &rt {
                StType::Arrow { dom, cod } if **dom == StType::D => match &**cod {
                    StType::Arrow { dom: x1, cod: x2 } if x1 == x2 => (**x1).clone(),
                    _ => {
                        return Err(TypeError::Mismatch {
                            expected: StType::arrow(
                                StType::D,
                                StType::arrow(StType::D, StType::D),
                            ),
                            found: rt.clone(),
                        })
                    }
                },
                _ => {
                    return Err(TypeError::Mismatch {
                        expected: StType::arrow(StType::D, StType::arrow(StType::D, StType::D)),
                        found: rt.clone(),
                    })
                }
            };
            let st = typecheck(s, ctx, consts, sig)?;
            let y = match &st {
                StType::Arrow { dom, cod } if **dom == StType::D => match &**cod {
                    StType::Arrow { dom: xs, cod: y } if **xs == x => (**y).clone(),
                    _ => {
                        return Err(TypeError::Mismatch {
                            expected: StType::arrow(
                                StType::D,
                                StType::arrow(x.clone(), StType::D),
                            ),
                            found: st.clone(),
                        })
                    }
                },
                _ => {
                    return Err(TypeError::Mismatch {
                        expected: StType::arrow(StType::D, StType::arrow(x.clone(), StType::D)),
                        found: st.clone(),
                    })
                }
            };
            let tt = typecheck(t, ctx, consts, sig)?;
            let expected = StType::arrow(x.clone(), y.clone());
            if tt != expected {
                return Err(TypeError::Mismatch { expected, found: tt });
            }
            Ok(StType::arrow(x, y))
        }
    }
}

/// Alpha-equality of programs: structural equality up to consistent renaming
/// of lambda-bound variables and while-condition holes. Type annotations
/// (lambda domains, injection complements, defaults) must agree.
pub fn alpha_eq_st(a: &StTerm, b: &StTerm) -> bool {
    fn term_eq(s: &Term, t: &Term, la: &HashMap<Ident, usize>, lb: &HashMap<Ident, usize>) -> bool {
        match (s, t) {
            (Term::Var { name: x }, Term::Var { name: y }) => match (la.get(x), lb.get(y)) {
                (Some(i), Some(j)) => i == j,
                (None, None) => x == y,
                _ => false,
            },
            (Term::App { f, args }, Term::App { f: g, args: bargs }) => {
                f == g
                    && args.len() == bargs.len()
                    && args.iter().zip(bargs).all(|(s, t)| term_eq(s, t, la, lb))
            }
            _ => false,
        }
    }

    fn cond_eq(
        a: &StateFormula,
        b: &StateFormula,
        la: &HashMap<Ident, usize>,
        lb: &HashMap<Ident, usize>,
    ) -> bool {
        use StateFormula::*;
        match (a, b) {
            (Top, Top) | (Bot, Bot) => true,
            (Atom { p, args }, Atom { p: q, args: bargs }) => {
                p == q
                    && args.len() == bargs.len()
                    && args.iter().zip(bargs).all(|(s, t)| term_eq(s, t, la, lb))
            }
            (And { lhs, rhs }, And { lhs: l2, rhs: r2 })
            | (Or { lhs, rhs }, Or { lhs: l2, rhs: r2 })
            | (Imp { lhs, rhs }, Imp { lhs: l2, rhs: r2 }) => {
                cond_eq(lhs, l2, la, lb) && cond_eq(rhs, r2, la, lb)
            }
            _ => false,
        }
    }

    fn go(a: &StTerm, b: &StTerm, la: &HashMap<Ident, usize>, lb: &HashMap<Ident, usize>) -> bool {
        use StTerm::*;
        match (a, b) {
            (Skip, Skip) => true,
            (Default { ty }, Default { ty: ty2 }) => ty == ty2,
            (Const { name }, Const { name: n2 }) | (Fun { name }, Fun { name: n2 }) => name == n2,
            (Var { name: x }, Var { name: y }) => match (la.get(x), lb.get(y)) {
                (Some(i), Some(j)) => i == j,
                (None, None) => x == y,
                _ => false,
            },
            (Proj0 { pair }, Proj0 { pair: p2 }) | (Proj1 { pair }, Proj1 { pair: p2 }) => {
                go(pair, p2, la, lb)
            }
            (Comp { fst, snd }, Comp { fst: f2, snd: s2 }) => {
                go(fst, f2, la, lb) && go(snd, s2, la, lb)
            }
            (Inj0 { val, right }, Inj0 { val: v2, right: r2 }) => {
                right == r2 && go(val, v2, la, lb)
            }
            (Inj1 { val, left }, Inj1 { val: v2, left: l2 }) => left == l2 && go(val, v2, la, lb),
            (
                Elim { scrutinee, on_left, on_right },
                Elim { scrutinee: sc2, on_left: ol2, on_right: or2 },
            ) => go(scrutinee, sc2, la, lb) && go(on_left, ol2, la, lb) && go(on_right, or2, la, lb),
            (Lam { var, ty, body }, Lam { var: v2, ty: t2, body: b2 }) => {
                if ty != t2 {
                    return false;
                }
                let depth = la.len();
                let mut la2 = la.clone();
                let mut lb2 = lb.clone();
                la2.insert(var.clone(), depth);
                lb2.insert(v2.clone(), depth);
                go(body, b2, &la2, &lb2)
            }
            (App { fun, arg }, App { fun: f2, arg: a2 }) => {
                go(fun, f2, la, lb) && go(arg, a2, la, lb)
            }
            (
                Ite { cond, then_branch, else_branch },
                Ite { cond: c2, then_branch: tb2, else_branch: eb2 },
            ) => cond_eq(cond, c2, la, lb) && go(then_branch, tb2, la, lb) && go(else_branch, eb2, la, lb),
            (Rec { base, step }, Rec { base: b2, step: s2 }) => {
                go(base, b2, la, lb) && go(step, s2, la, lb)
            }
            (
                While { hole, cond, r, s, t, u },
                While { hole: h2, cond: c2, r: r2, s: s2, t: t2, u: u2 },
            ) => {
                let depth = la.len();
                let mut la2 = la.clone();
                let mut lb2 = lb.clone();
                la2.insert(hole.clone(), depth);
                lb2.insert(h2.clone(), depth);
                cond_eq(cond, c2, &la2, &lb2)
                    && go(r, r2, la, lb)
                    && go(s, s2, la, lb)
                    && go(t, t2, la, lb)
                    && go(u, u2, la, lb)
            }
            _ => false,
        }
    }

    go(a, b, &HashMap::new(), &HashMap::new())
}

/// The unit-free version of a type: `C` cancels out of products and out of
/// function domains, and any function into `C` collapses to `C`.
pub fn simplify_unit_type(ty: &StType) -> StType {
    match ty {
        StType::D | StType::C => ty.clone(),
        StType::Prod { fst, snd } => {
            let f = simplify_unit_type(fst);
            let s = simplify_unit_type(snd);
            if f == StType::C {
                s
            } else if s == StType::C {
                f
            } else {
                StType::prod(f, s)
            }
        }
        StType::Sum { left, right } => {
            StType::sum(simplify_unit_type(left), simplify_unit_type(right))
        }
        StType::Arrow { dom, cod } => {
            let d = simplify_unit_type(dom);
            let c = simplify_unit_type(cod);
            if c == StType::C {
                StType::C
            } else if d == StType::C {
                c
            } else {
                StType::arrow(d, c)
            }
        }
    }
}

/// Coerce `t : ty` along the canonical isomorphism to `simplify_unit_type(ty)`.
fn coerce_down(t: StTerm, ty: &StType) -> StTerm {
    let target = simplify_unit_type(ty);
    if target == *ty {
        return t;
    }
    match ty {
        StType::Prod { fst, snd } => {
            let f = simplify_unit_type(fst);
            let s = simplify_unit_type(snd);
            if f == StType::C {
                match t {
                    StTerm::Comp { snd: b, .. } => coerce_down(*b, snd),
                    _ => coerce_down(StTerm::proj1(t), snd),
                }
            } else if s == StType::C {
                match t {
                    StTerm::Comp { fst: a, .. } => coerce_down(*a, fst),
                    _ => coerce_down(StTerm::proj0(t), fst),
                }
            } else {
                match t {
                    // Push through explicit pairs instead of re-projecting.
                    StTerm::Comp { fst: a, snd: b } => {
                        StTerm::comp(coerce_down(*a, fst), coerce_down(*b, snd))
                    }
                    _ => StTerm::comp(
                        coerce_down(StTerm::proj0(t.clone()), fst),
                        coerce_down(StTerm::proj1(t), snd),
                    ),
                }
            }
        }
        StType::Sum { left, right } => match t {
            StTerm::Inj0 { val, .. } => {
                StTerm::inj0(coerce_down(*val, left), simplify_unit_type(right))
            }
            StTerm::Inj1 { val, .. } => {
                StTerm::inj1(coerce_down(*val, right), simplify_unit_type(left))
            }
            _ => {
                // Repackage through elim; x is fresh since it is immediately bound.
                let x = Ident::new("u0");
                StTerm::elim(
                    t,
                    StTerm::lam(
                        x.clone(),
                        (**left).clone(),
                        StTerm::inj0(
                            coerce_down(StTerm::var(x.clone()), left),
                            simplify_unit_type(right),
                        ),
                    ),
                    StTerm::lam(
                        x.clone(),
                        (**right).clone(),
                        StTerm::inj1(
                            coerce_down(StTerm::var(x), right),
                            simplify_unit_type(left),
                        ),
                    ),
                )
            }
        },
        StType::Arrow { dom, cod } => {
            let d = simplify_unit_type(dom);
            let c = simplify_unit_type(cod);
            if c == StType::C {
                StTerm::Skip
            } else if d == StType::C {
                coerce_down(StTerm::app(t, StTerm::Skip), cod)
            } else if let StTerm::Lam { var, body, .. } = t {
                // Rebind the argument at the simplified type.
                let body = body.replace_var(&var, &coerce_up(StTerm::var(var.clone()), dom));
                StTerm::lam(var, d, coerce_down(body, cod))
            } else {
                let x = Ident::new("u0");
                StTerm::lam(
                    x.clone(),
                    d,
                    coerce_down(StTerm::app(t, coerce_up(StTerm::var(x), dom)), cod),
                )
            }
        }
        StType::D | StType::C => t,
    }
}

/// Coerce `t : simplify_unit_type(ty)` back up to `ty`, inserting `skip` for
/// the erased unit components.
fn coerce_up(t: StTerm, ty: &StType) -> StTerm {
    let source = simplify_unit_type(ty);
    if source == *ty {
        return t;
    }
    match ty {
        StType::Prod { fst, snd } => {
            let f = simplify_unit_type(fst);
            let s = simplify_unit_type(snd);
            if f == StType::C {
                StTerm::comp(coerce_up(StTerm::Skip, fst), coerce_up(t, snd))
            } else if s == StType::C {
                StTerm::comp(coerce_up(t, fst), coerce_up(StTerm::Skip, snd))
            } else {
                StTerm::comp(
                    coerce_up(StTerm::proj0(t.clone()), fst),
                    coerce_up(StTerm::proj1(t), snd),
                )
            }
        }
        StType::Sum { left, right } => {
            let x = Ident::new("u0");
            StTerm::elim(
                t,
                StTerm::lam(
                    x.clone(),
                    simplify_unit_type(left),
                    StTerm::inj0(coerce_up(StTerm::var(x.clone()), left), (**right).clone()),
                ),
                StTerm::lam(
                    x.clone(),
                    simplify_unit_type(right),
                    StTerm::inj1(coerce_up(StTerm::var(x), right), (**left).clone()),
                ),
            )
        }
        StType::Arrow { dom, cod } => {
            let d = simplify_unit_type(dom);
            let c = simplify_unit_type(cod);
            let x = Ident::new("u0");
            if c == StType::C {
                // t : C; the original function type only returned units.
                StTerm::lam(x, (**dom).clone(), coerce_up(StTerm::Skip, cod))
            } else if d == StType::C {
                StTerm::lam(x, (**dom).clone(), coerce_up(t, cod))
            } else {
                StTerm::lam(
                    x.clone(),
                    (**dom).clone(),
                    coerce_up(StTerm::app(t, coerce_down(StTerm::var(x), dom)), cod),
                )
            }
        }
        StType::D | StType::C => t,
    }
}

impl StTerm {
    /// Replace free occurrences of a program variable by another program.
    /// Only used internally where the replacement is closed or freshly bound.
    fn replace_var(&self, x: &Ident, replacement: &StTerm) -> StTerm {
        match self {
            StTerm::Var { name } if name == x => replacement.clone(),
            StTerm::Skip
            | StTerm::Default { .. }
            | StTerm::Const { .. }
            | StTerm::Fun { .. }
            | StTerm::Var { .. } => self.clone(),
            StTerm::Proj0 { pair } => StTerm::proj0(pair.replace_var(x, replacement)),
            StTerm::Proj1 { pair } => StTerm::proj1(pair.replace_var(x, replacement)),
            StTerm::Comp { fst, snd } => {
                StTerm::comp(fst.replace_var(x, replacement), snd.replace_var(x, replacement))
            }
            StTerm::Inj0 { val, right } => {
                StTerm::inj0(val.replace_var(x, replacement), right.clone())
            }
            StTerm::Inj1 { val, left } => {
                StTerm::inj1(val.replace_var(x, replacement), left.clone())
            }
            StTerm::Elim { scrutinee, on_left, on_right } => StTerm::elim(
                scrutinee.replace_var(x, replacement),
                on_left.replace_var(x, replacement),
                on_right.replace_var(x, replacement),
            ),
            StTerm::Lam { var, ty, body } => {
                if var == x {
                    self.clone()
                } else {
                    StTerm::lam(var.clone(), ty.clone(), body.replace_var(x, replacement))
                }
            }
            StTerm::App { fun, arg } => {
                StTerm::app(fun.replace_var(x, replacement), arg.replace_var(x, replacement))
            }
            StTerm::Ite { cond, then_branch, else_branch } => StTerm::ite(
                cond.clone(),
                then_branch.replace_var(x, replacement),
                else_branch.replace_var(x, replacement),
            ),
            StTerm::Rec { base, step } => {
                StTerm::rec(base.replace_var(x, replacement), step.replace_var(x, replacement))
            }
            StTerm::While { hole, cond, r, s, t, u } => StTerm::While {
                hole: hole.clone(),
                cond: cond.clone(),
                r: Box::new(r.replace_var(x, replacement)),
                s: Box::new(s.replace_var(x, replacement)),
                t: Box::new(t.replace_var(x, replacement)),
                u: Box::new(u.replace_var(x, replacement)),
            },
        }
    }
}

/// Presentation-level unit removal: coerce the term along the canonical
/// isomorphism to its unit-free type. The result typechecks at the simplified
/// type; run-time behaviour is for the original term, which remains the one
/// to evaluate.
pub fn simplify_units(
    t: &StTerm,
    ctx: &TypingCtx,
    consts: &ConstTable,
    sig: &Signature,
) -> Result<(StTerm, StType), TypeError> {
    let ty = typecheck(t, ctx, consts, sig)?;
    Ok((coerce_down(t.clone(), &ty), simplify_unit_type(&ty)))
}

fn fmt_term_prec(t: &StTerm, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        StTerm::Skip => write!(f, "skip"),
        StTerm::Default { ty } => write!(f, "default({ty})"),
        StTerm::Const { name } | StTerm::Fun { name } => write!(f, "{name}"),
        StTerm::Var { name } => write!(f, "{name}"),
        StTerm::Proj0 { pair } => {
            write!(f, "p0(")?;
            fmt_term_prec(pair, 0, f)?;
            write!(f, ")")
        }
        StTerm::Proj1 { pair } => {
            // p₁(s ∘ t) is the sequencing combinator; display it as s * t.
            if let StTerm::Comp { fst, snd } = &**pair {
                let wrap = prec > 5;
                if wrap {
                    write!(f, "(")?;
                }
                fmt_term_prec(fst, 5, f)?;
                write!(f, " * ")?;
                fmt_term_prec(snd, 6, f)?;
                if wrap {
                    write!(f, ")")?;
                }
                return Ok(());
            }
            write!(f, "p1(")?;
            fmt_term_prec(pair, 0, f)?;
            write!(f, ")")
        }
        StTerm::Comp { fst, snd } => {
            let wrap = prec > 5;
            if wrap {
                write!(f, "(")?;
            }
            fmt_term_prec(fst, 5, f)?;
            write!(f, " o ")?;
            fmt_term_prec(snd, 6, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        StTerm::Inj0 { val, .. } => {
            write!(f, "i0(")?;
            fmt_term_prec(val, 0, f)?;
            write!(f, ")")
        }
        StTerm::Inj1 { val, .. } => {
            write!(f, "i1(")?;
            fmt_term_prec(val, 0, f)?;
            write!(f, ")")
        }
        StTerm::Elim { scrutinee, on_left, on_right } => {
            write!(f, "elim(")?;
            fmt_term_prec(scrutinee, 0, f)?;
            write!(f, ", ")?;
            fmt_term_prec(on_left, 0, f)?;
            write!(f, ", ")?;
            fmt_term_prec(on_right, 0, f)?;
            write!(f, ")")
        }
        StTerm::Lam { var, body, .. } => {
            let wrap = prec > 1;
            if wrap {
                write!(f, "(")?;
            }
            write!(f, "fun {var} -> ")?;
            fmt_term_prec(body, 1, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        StTerm::App { fun, arg } => {
            let wrap = prec > 8;
            if wrap {
                write!(f, "(")?;
            }
            fmt_term_prec(fun, 8, f)?;
            write!(f, " ")?;
            fmt_term_prec(arg, 9, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        StTerm::Ite { cond, then_branch, else_branch } => {
            let wrap = prec > 1;
            if wrap {
                write!(f, "(")?;
            }
            write!(f, "if {{{cond}}} then ")?;
            fmt_term_prec(then_branch, 2, f)?;
            write!(f, " else ")?;
            fmt_term_prec(else_branch, 2, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        StTerm::Rec { base, step } => {
            write!(f, "rec(")?;
            fmt_term_prec(base, 0, f)?;
            write!(f, ", ")?;
            fmt_term_prec(step, 0, f)?;
            write!(f, ")")
        }
        StTerm::While { hole, cond, r, s, t, u } => {
            write!(f, "while[{hole}]{{{cond}}}(")?;
            fmt_term_prec(r, 0, f)?;
            write!(f, ", ")?;
            fmt_term_prec(s, 0, f)?;
            write!(f, ", ")?;
            fmt_term_prec(t, 0, f)?;
            write!(f, ", ")?;
            fmt_term_prec(u, 0, f)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for StTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_term_prec(self, 0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Mode;

    fn sl_sig() -> Signature {
        let mut sig = Signature::new(Mode::Sl);
        sig.declare_fun(Ident::new("g"), 2).unwrap();
        sig.declare_state_pred(Ident::new("ok"), 1).unwrap();
        sig
    }

    fn sa_sig() -> Signature {
        let mut sig = Signature::new(Mode::Sa);
        sig.declare_state_pred(Ident::new("comp"), 1).unwrap();
        sig
    }

    fn consts() -> ConstTable {
        let mut c = ConstTable::new();
        c.declare(Ident::new("write"), StType::arrow(StType::D, StType::C)).unwrap();
        c.declare(Ident::new("calc"), StType::C).unwrap();
        c.declare(Ident::new("read"), StType::prod(StType::D, StType::C)).unwrap();
        c
    }

    fn tc(t: &StTerm, sig: &Signature) -> Result<StType, TypeError> {
        typecheck(t, &TypingCtx::new(), &consts(), sig)
    }

    #[test]
    fn fun_symbol_types_follow_arity() {
        assert_eq!(StType::of_fun(0), StType::D);
        assert_eq!(StType::of_fun(1), StType::arrow(StType::D, StType::D));
        assert_eq!(
            StType::of_fun(3),
            StType::arrow(StType::prod(StType::D, StType::prod(StType::D, StType::D)), StType::D)
        );
    }

    #[test]
    fn interp_packs_arguments_right_nested() {
        let t = Term::app("g", vec![Term::var("x"), Term::var("y")]);
        assert_eq!(
            interp_term(&t),
            StTerm::app(StTerm::fun("g"), StTerm::comp(StTerm::var("x"), StTerm::var("y")))
        );
        assert_eq!(interp_term(&Term::cnst("c")), StTerm::fun("c"));
        let sig = sl_sig();
        let ctx = TypingCtx::new().bind(Ident::new("x"), StType::D).bind(Ident::new("y"), StType::D);
        assert_eq!(typecheck(&interp_term(&t), &ctx, &consts(), &sig), Ok(StType::D));
    }

    #[test]
    fn readwrite_shaped_term_typechecks() {
        // fun x -> ((write x * calc) * read) : D -> D * C
        let t = StTerm::lam(
            "x",
            StType::D,
            star(
                star(StTerm::app(StTerm::cnst("write"), StTerm::var("x")), StTerm::cnst("calc")),
                StTerm::cnst("read"),
            ),
        );
        assert_eq!(
            tc(&t, &sl_sig()),
            Ok(StType::arrow(StType::D, StType::prod(StType::D, StType::C)))
        );
        // * is left-associative, so the nesting needs no parentheses.
        assert_eq!(t.to_string(), "fun x -> write x * calc * read");
    }

    #[test]
    fn elim_requires_matching_branches() {
        let sig = sl_sig();
        let scrut = StTerm::inj0(StTerm::Skip, StType::D);
        let good = StTerm::elim(
            scrut.clone(),
            StTerm::lam("a", StType::C, StTerm::var("a")),
            StTerm::lam("b", StType::D, StTerm::Skip),
        );
        assert_eq!(tc(&good, &sig), Ok(StType::C));
        let bad = StTerm::elim(
            scrut,
            StTerm::lam("a", StType::C, StTerm::var("a")),
            StTerm::lam("b", StType::D, StTerm::var("b")),
        );
        assert!(matches!(tc(&bad, &sig), Err(TypeError::BranchMismatch { .. })));
    }

    #[test]
    fn ite_condition_variables_must_be_individuals() {
        let sig = sl_sig();
        let cond = StateFormula::atom("ok", vec![Term::var("v")]);
        let t = StTerm::ite(cond.clone(), StTerm::Skip, StTerm::Skip);
        // Unbound condition variable.
        assert!(matches!(tc(&t, &sig), Err(TypeError::CondVarUnbound { .. })));
        // Bound at D: fine.
        let ctx = TypingCtx::new().bind(Ident::new("v"), StType::D);
        assert_eq!(typecheck(&t, &ctx, &consts(), &sig), Ok(StType::C));
        // Bound at C: rejected.
        let ctx = TypingCtx::new().bind(Ident::new("v"), StType::C);
        assert!(matches!(
            typecheck(&t, &ctx, &consts(), &sig),
            Err(TypeError::CondVarNotIndividual { .. })
        ));
    }

    #[test]
    fn rec_and_while_are_arithmetic_only() {
        let t = StTerm::rec(
            StTerm::Skip,
            StTerm::lam("n", StType::D, StTerm::lam("a", StType::C, StTerm::var("a"))),
        );
        assert!(matches!(tc(&t, &sl_sig()), Err(TypeError::ArithmeticOnly { .. })));
        assert_eq!(tc(&t, &sa_sig()), Ok(StType::arrow(StType::D, StType::C)));
    }

    #[test]
    fn while_types_like_the_loop_rule() {
        let sig = sa_sig();
        let hole = Ident::new("z");
        let cond = StateFormula::atom("comp", vec![Term::var(hole.clone())]);
        let lam2 = |body: StTerm| {
            StTerm::lam("x", StType::D, StTerm::lam("y", StType::C, body))
        };
        let t = StTerm::While {
            hole,
            cond,
            r: Box::new(lam2(StTerm::var("y"))),
            s: Box::new(lam2(StTerm::var("y"))),
            t: Box::new(StTerm::lam("y", StType::C, StTerm::var("y"))),
            u: Box::new(StTerm::fun("0")),
        };
        assert_eq!(tc(&t, &sig), Ok(StType::arrow(StType::C, StType::C)));
    }

    #[test]
    fn while_hole_must_not_shadow_context() {
        let sig = sa_sig();
        let hole = Ident::new("z");
        let cond = StateFormula::atom("comp", vec![Term::var(hole.clone())]);
        let t = StTerm::While {
            hole: hole.clone(),
            cond,
            r: Box::new(StTerm::lam("x", StType::D, StTerm::lam("y", StType::C, StTerm::var("y")))),
            s: Box::new(StTerm::lam("x", StType::D, StTerm::lam("y", StType::C, StTerm::var("y")))),
            t: Box::new(StTerm::lam("y", StType::C, StTerm::var("y"))),
            u: Box::new(StTerm::fun("0")),
        };
        let ctx = TypingCtx::new().bind(hole, StType::D);
        assert!(matches!(
            typecheck(&t, &ctx, &consts(), &sig),
            Err(TypeError::HoleInContext { .. })
        ));
    }

    #[test]
    fn alpha_eq_renames_binders_and_holes() {
        let a = StTerm::lam("x", StType::D, StTerm::var("x"));
        let b = StTerm::lam("y", StType::D, StTerm::var("y"));
        assert!(alpha_eq_st(&a, &b));
        let c = StTerm::lam("y", StType::C, StTerm::var("y"));
        assert!(!alpha_eq_st(&a, &c), "annotations matter");

        let w = |hole: &str| StTerm::While {
            hole: Ident::new(hole),
            cond: StateFormula::atom("comp", vec![Term::var(hole)]),
            r: Box::new(StTerm::var("r")),
            s: Box::new(StTerm::var("s")),
            t: Box::new(StTerm::var("t")),
            u: Box::new(StTerm::var("u")),
        };
        assert!(alpha_eq_st(&w("z"), &w("w")));
    }

    #[test]
    fn free_vars_excludes_binders_includes_conditions() {
        let t = StTerm::lam(
            "x",
            StType::D,
            StTerm::ite(
                StateFormula::atom("ok", vec![Term::var("x"), Term::var("v")]),
                StTerm::var("x"),
                StTerm::var("w"),
            ),
        );
        let fv = t.free_var_set();
        assert_eq!(fv, ["v", "w"].into_iter().map(Ident::new).collect());
    }

    #[test]
    fn subst_term_reaches_conditions() {
        let t = StTerm::ite(
            StateFormula::atom("ok", vec![Term::var("n")]),
            StTerm::var("n"),
            StTerm::Skip,
        );
        let got = t.subst_term(&Ident::new("n"), &Term::num(2));
        assert_eq!(
            got,
            StTerm::ite(
                StateFormula::atom("ok", vec![Term::num(2)]),
                interp_term(&Term::num(2)),
                StTerm::Skip,
            )
        );
    }

    #[test]
    fn unit_simplification_of_types() {
        let c = StType::C;
        let d = StType::D;
        assert_eq!(simplify_unit_type(&StType::prod(c.clone(), d.clone())), d);
        assert_eq!(simplify_unit_type(&StType::prod(d.clone(), c.clone())), d);
        assert_eq!(simplify_unit_type(&StType::arrow(c.clone(), d.clone())), d);
        assert_eq!(simplify_unit_type(&StType::arrow(d.clone(), c.clone())), c);
        // D -> (C * (D * C)) simplifies to D -> D.
        let ty = StType::arrow(d.clone(), StType::prod(c.clone(), StType::prod(d.clone(), c)));
        assert_eq!(simplify_unit_type(&ty), StType::arrow(d.clone(), d));
    }

    #[test]
    fn simplify_units_produces_term_at_simplified_type() {
        let sig = sl_sig();
        // calc ∘ (x ∘ calc) : C * (D * C), which is unit-isomorphic to D.
        let pair = StTerm::comp(
            StTerm::cnst("calc"),
            StTerm::comp(StTerm::var("x"), StTerm::cnst("calc")),
        );
        let ctx = TypingCtx::new().bind(Ident::new("x"), StType::D);
        let (t2, ty2) = simplify_units(&pair, &ctx, &consts(), &sig).unwrap();
        assert_eq!(ty2, StType::D);
        assert_eq!(typecheck(&t2, &ctx, &consts(), &sig), Ok(StType::D));
        // The simplified display drops the unit components.
        assert_eq!(t2, StTerm::var("x"));
    }

    #[test]
    fn simplify_units_keeps_unitfree_terms_intact() {
        let sig = sl_sig();
        let t = StTerm::lam("x", StType::D, StTerm::var("x"));
        let (t2, ty2) = simplify_units(&t, &TypingCtx::new(), &consts(), &sig).unwrap();
        assert_eq!(t2, t);
        assert_eq!(ty2, StType::arrow(StType::D, StType::D));
    }

    #[test]
    fn json_uses_stable_tags() {
        let t = StTerm::rec(StTerm::Skip, StTerm::var("t"));
        let json = serde_json::to_value(&t).unwrap();
        assert_eq!(json["kind"], "rec");
        assert_eq!(json["base"]["kind"], "skip");
        let back: StTerm = serde_json::from_value(json).unwrap();
        assert_eq!(back, t);
    }
}
