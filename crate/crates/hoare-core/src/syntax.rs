//! Core syntax: first-order terms over a single individual sort, state formulas
//! (the classical layer that preconditions and postconditions are drawn from),
//! and main formulas (the constructive layer, where implication and universal
//! quantification only occur guarded by pre/post state annotations).
//!
//! Everything here is plain data plus the usual operations: free variables,
//! capture-avoiding substitution, alpha-equality, fresh-name generation.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Interned identifier. Equality and ordering are by string content; interning
/// only dedups allocations, so identifiers built without going through the
/// interner would still compare correctly.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ident(Arc<str>);

static INTERNER: Lazy<Mutex<HashSet<Arc<str>>>> = Lazy::new(|| Mutex::new(HashSet::new()));

impl Ident {
    pub fn new(s: &str) -> Self {
        let mut table = INTERNER.lock().unwrap();
        if let Some(existing) = table.get(s) {
            Ident(existing.clone())
        } else {
            let arc: Arc<str> = Arc::from(s);
            table.insert(arc.clone());
            Ident(arc)
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Self {
        Ident::new(s)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl Serialize for Ident {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Ident {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        Ok(Ident::new(&s))
    }
}

/// First-order terms: variables and applications of declared function symbols.
/// Numerals are succ-towers over `0` (built at the parser level), so numeral
/// identity is ordinary structural equality.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Term {
    Var { name: Ident },
    App { f: Ident, args: Vec<Term> },
}

impl Term {
    pub fn var(name: impl Into<Ident>) -> Term {
        Term::Var { name: name.into() }
    }

    pub fn app(f: impl Into<Ident>, args: Vec<Term>) -> Term {
        Term::App { f: f.into(), args }
    }

    /// Nullary application, e.g. the constant `0` or a location symbol.
    pub fn cnst(f: impl Into<Ident>) -> Term {
        Term::App { f: f.into(), args: vec![] }
    }

    /// `succ(succ(... succ(0)))` with `n` applications.
    pub fn num(n: u64) -> Term {
        let mut t = Term::cnst("0");
        for _ in 0..n {
            t = Term::app("succ", vec![t]);
        }
        t
    }

    /// Inverse of [`Term::num`]: `Some(n)` when the term is a pure succ-tower.
    pub fn as_num(&self) -> Option<u64> {
        let mut t = self;
        let mut n = 0u64;
        loop {
            match t {
                Term::App { f, args } if f.as_str() == "succ" && args.len() == 1 => {
                    n += 1;
                    t = &args[0];
                }
                Term::App { f, args } if f.as_str() == "0" && args.is_empty() => return Some(n),
                _ => return None,
            }
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<Ident>) {
        match self {
            Term::Var { name } => {
                out.insert(name.clone());
            }
            Term::App { args, .. } => {
                for a in args {
                    a.free_vars(out);
                }
            }
        }
    }

    pub fn free_var_set(&self) -> BTreeSet<Ident> {
        let mut s = BTreeSet::new();
        self.free_vars(&mut s);
        s
    }

    pub fn subst(&self, x: &Ident, t: &Term) -> Term {
        match self {
            Term::Var { name } => {
                if name == x {
                    t.clone()
                } else {
                    self.clone()
                }
            }
            Term::App { f, args } => Term::App {
                f: f.clone(),
                args: args.iter().map(|a| a.subst(x, t)).collect(),
            },
        }
    }

    /// Collect every subterm (including the term itself), deduplicated.
    pub fn subterms(&self, out: &mut BTreeSet<Term>) {
        out.insert(self.clone());
        if let Term::App { args, .. } = self {
            for a in args {
                a.subterms(out);
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var { name } => write!(f, "{name}"),
            Term::App { f: fun, args } => {
                if let Some(n) = self.as_num() {
                    return write!(f, "{n}");
                }
                if args.is_empty() {
                    write!(f, "{fun}")
                } else {
                    write!(f, "{fun}(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")
                }
            }
        }
    }
}

/// State formulas: the classical layer. No quantifiers, no binders; implication
/// is ordinary material implication.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateFormula {
    Top,
    Bot,
    Atom { p: Ident, args: Vec<Term> },
    And { lhs: Box<StateFormula>, rhs: Box<StateFormula> },
    Or { lhs: Box<StateFormula>, rhs: Box<StateFormula> },
    Imp { lhs: Box<StateFormula>, rhs: Box<StateFormula> },
}

impl StateFormula {
    pub fn atom(p: impl Into<Ident>, args: Vec<Term>) -> StateFormula {
        StateFormula::Atom { p: p.into(), args }
    }

    pub fn and(lhs: StateFormula, rhs: StateFormula) -> StateFormula {
        StateFormula::And { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn or(lhs: StateFormula, rhs: StateFormula) -> StateFormula {
        StateFormula::Or { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn imp(lhs: StateFormula, rhs: StateFormula) -> StateFormula {
        StateFormula::Imp { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    /// Negation is sugar: `¬α := α ⟹ ⊥`.
    pub fn neg(a: StateFormula) -> StateFormula {
        StateFormula::imp(a, StateFormula::Bot)
    }

    pub fn free_vars(&self, out: &mut BTreeSet<Ident>) {
        match self {
            StateFormula::Top | StateFormula::Bot => {}
            StateFormula::Atom { args, .. } => {
                for a in args {
                    a.free_vars(out);
                }
            }
            StateFormula::And { lhs, rhs }
            | StateFormula::Or { lhs, rhs }
            | StateFormula::Imp { lhs, rhs } => {
                lhs.free_vars(out);
                rhs.free_vars(out);
            }
        }
    }

    pub fn free_var_set(&self) -> BTreeSet<Ident> {
        let mut s = BTreeSet::new();
        self.free_vars(&mut s);
        s
    }

    pub fn subst(&self, x: &Ident, t: &Term) -> StateFormula {
        match self {
            StateFormula::Top | StateFormula::Bot => self.clone(),
            StateFormula::Atom { p, args } => StateFormula::Atom {
                p: p.clone(),
                args: args.iter().map(|a| a.subst(x, t)).collect(),
            },
            StateFormula::And { lhs, rhs } => {
                StateFormula::and(lhs.subst(x, t), rhs.subst(x, t))
            }
            StateFormula::Or { lhs, rhs } => StateFormula::or(lhs.subst(x, t), rhs.subst(x, t)),
            StateFormula::Imp { lhs, rhs } => StateFormula::imp(lhs.subst(x, t), rhs.subst(x, t)),
        }
    }

    /// Every atom occurring in the formula, in occurrence order (deduplicated).
    pub fn atoms(&self, out: &mut Vec<StateFormula>) {
        match self {
            StateFormula::Top | StateFormula::Bot => {}
            StateFormula::Atom { .. } => {
                if !out.contains(self) {
                    out.push(self.clone());
                }
            }
            StateFormula::And { lhs, rhs }
            | StateFormula::Or { lhs, rhs }
            | StateFormula::Imp { lhs, rhs } => {
                lhs.atoms(out);
                rhs.atoms(out);
            }
        }
    }

    pub fn subterms(&self, out: &mut BTreeSet<Term>) {
        match self {
            StateFormula::Top | StateFormula::Bot => {}
            StateFormula::Atom { args, .. } => {
                for a in args {
                    a.subterms(out);
                }
            }
            StateFormula::And { lhs, rhs }
            | StateFormula::Or { lhs, rhs }
            | StateFormula::Imp { lhs, rhs } => {
                lhs.subterms(out);
                rhs.subterms(out);
            }
        }
    }
}

fn fmt_state_prec(a: &StateFormula, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    // Precedence: -> (1, right assoc) < \/ (2) < /\ (3); atoms bind tightest.
    match a {
        StateFormula::Top => write!(f, "true"),
        StateFormula::Bot => write!(f, "false"),
        StateFormula::Atom { p, args } => match p.as_str() {
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
        StateFormula::And { lhs, rhs } => {
            let wrap = prec > 3;
            if wrap {
                write!(f, "(")?;
            }
            fmt_state_prec(lhs, 4, f)?;
            write!(f, " /\\ ")?;
            fmt_state_prec(rhs, 3, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        StateFormula::Or { lhs, rhs } => {
            let wrap = prec > 2;
            if wrap {
                write!(f, "(")?;
            }
            fmt_state_prec(lhs, 3, f)?;
            write!(f, " \\/ ")?;
            fmt_state_prec(rhs, 2, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        StateFormula::Imp { lhs, rhs } => {
            let wrap = prec > 1;
            if wrap {
                write!(f, "(")?;
            }
            fmt_state_prec(lhs, 2, f)?;
            write!(f, " -> ")?;
            fmt_state_prec(rhs, 1, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_state_prec(self, 0, f)
    }
}

/// A Hoare triple `{pre} A {post}` over a main formula.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub pre: StateFormula,
    pub body: MainFormula,
    pub post: StateFormula,
}

impl Triple {
    pub fn new(pre: StateFormula, body: MainFormula, post: StateFormula) -> Triple {
        Triple { pre, body, post }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<Ident>) {
        self.pre.free_vars(out);
        self.body.free_vars(out);
        self.post.free_vars(out);
    }

    pub fn subst(&self, x: &Ident, t: &Term) -> Triple {
        Triple {
            pre: self.pre.subst(x, t),
            body: self.body.subst(x, t),
            post: self.post.subst(x, t),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}} {} {{{}}}", self.pre, self.body, self.post)
    }
}

/// Main formulas: the constructive layer. Implication and universal
/// quantification only occur with pre/post state annotations on the
/// consequent/matrix; existential quantification is unguarded.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MainFormula {
    Top,
    Bot,
    Atom { p: Ident, args: Vec<Term> },
    And { lhs: Box<MainFormula>, rhs: Box<MainFormula> },
    Or { lhs: Box<MainFormula>, rhs: Box<MainFormula> },
    Exists { var: Ident, body: Box<MainFormula> },
    /// `A => {pre} B {post}`
    Imp { hyp: Box<MainFormula>, triple: Box<Triple> },
    /// `all x . {pre} A {post}`
    Forall { var: Ident, triple: Box<Triple> },
}

impl MainFormula {
    pub fn atom(p: impl Into<Ident>, args: Vec<Term>) -> MainFormula {
        MainFormula::Atom { p: p.into(), args }
    }

    pub fn eq(s: Term, t: Term) -> MainFormula {
        MainFormula::atom("eq", vec![s, t])
    }

    pub fn neq(s: Term, t: Term) -> MainFormula {
        MainFormula::atom("neq", vec![s, t])
    }

    pub fn and(lhs: MainFormula, rhs: MainFormula) -> MainFormula {
        MainFormula::And { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn or(lhs: MainFormula, rhs: MainFormula) -> MainFormula {
        MainFormula::Or { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn exists(var: impl Into<Ident>, body: MainFormula) -> MainFormula {
        MainFormula::Exists { var: var.into(), body: Box::new(body) }
    }

    pub fn imp(hyp: MainFormula, triple: Triple) -> MainFormula {
        MainFormula::Imp { hyp: Box::new(hyp), triple: Box::new(triple) }
    }

    pub fn forall(var: impl Into<Ident>, triple: Triple) -> MainFormula {
        MainFormula::Forall { var: var.into(), triple: Box::new(triple) }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<Ident>) {
        match self {
            MainFormula::Top | MainFormula::Bot => {}
            MainFormula::Atom { args, .. } => {
                for a in args {
                    a.free_vars(out);
                }
            }
            MainFormula::And { lhs, rhs } | MainFormula::Or { lhs, rhs } => {
                lhs.free_vars(out);
                rhs.free_vars(out);
            }
            MainFormula::Exists { var, body } => {
                let mut inner = BTreeSet::new();
                body.free_vars(&mut inner);
                inner.remove(var);
                out.extend(inner);
            }
            MainFormula::Imp { hyp, triple } => {
                hyp.free_vars(out);
                triple.free_vars(out);
            }
            MainFormula::Forall { var, triple } => {
                let mut inner = BTreeSet::new();
                triple.free_vars(&mut inner);
                inner.remove(var);
                out.extend(inner);
            }
        }
    }

    pub fn free_var_set(&self) -> BTreeSet<Ident> {
        let mut s = BTreeSet::new();
        self.free_vars(&mut s);
        s
    }

    /// Capture-avoiding substitution of `t` for free occurrences of `x`.
    pub fn subst(&self, x: &Ident, t: &Term) -> MainFormula {
        match self {
            MainFormula::Top | MainFormula::Bot => self.clone(),
            MainFormula::Atom { p, args } => MainFormula::Atom {
                p: p.clone(),
                args: args.iter().map(|a| a.subst(x, t)).collect(),
            },
            MainFormula::And { lhs, rhs } => MainFormula::and(lhs.subst(x, t), rhs.subst(x, t)),
            MainFormula::Or { lhs, rhs } => MainFormula::or(lhs.subst(x, t), rhs.subst(x, t)),
            MainFormula::Exists { var, body } => {
                if var == x {
                    return self.clone();
                }
                let t_vars = t.free_var_set();
                if t_vars.contains(var) {
                    let mut avoid = t_vars;
                    avoid.extend(body.free_var_set());
                    avoid.insert(x.clone());
                    let fresh_var = fresh(var, &avoid);
                    let renamed = body.subst(var, &Term::var(fresh_var.clone()));
                    MainFormula::exists(fresh_var, renamed.subst(x, t))
                } else {
                    MainFormula::exists(var.clone(), body.subst(x, t))
                }
            }
            MainFormula::Imp { hyp, triple } => MainFormula::Imp {
                hyp: Box::new(hyp.subst(x, t)),
                triple: Box::new(triple.subst(x, t)),
            },
            MainFormula::Forall { var, triple } => {
                if var == x {
                    return self.clone();
                }
                let t_vars = t.free_var_set();
                if t_vars.contains(var) {
                    let mut avoid = t_vars;
                    let mut trip_fv = BTreeSet::new();
                    triple.free_vars(&mut trip_fv);
                    avoid.extend(trip_fv);
                    avoid.insert(x.clone());
                    let fresh_var = fresh(var, &avoid);
                    let renamed = triple.subst(var, &Term::var(fresh_var.clone()));
                    MainFormula::Forall {
                        var: fresh_var,
                        triple: Box::new(renamed.subst(x, t)),
                    }
                } else {
                    MainFormula::Forall {
                        var: var.clone(),
                        triple: Box::new(triple.subst(x, t)),
                    }
                }
            }
        }
    }
}

fn fmt_main_prec(a: &MainFormula, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match a {
        MainFormula::Top => write!(f, "true"),
        MainFormula::Bot => write!(f, "false"),
        MainFormula::Atom { p, args } => match p.as_str() {
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
        MainFormula::And { lhs, rhs } => {
            let wrap = prec > 3;
            if wrap {
                write!(f, "(")?;
            }
            fmt_main_prec(lhs, 4, f)?;
            write!(f, " /\\ ")?;
            fmt_main_prec(rhs, 3, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        MainFormula::Or { lhs, rhs } => {
            let wrap = prec > 2;
            if wrap {
                write!(f, "(")?;
            }
            fmt_main_prec(lhs, 3, f)?;
            write!(f, " \\/ ")?;
            fmt_main_prec(rhs, 2, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        MainFormula::Exists { var, body } => {
            let wrap = prec > 1;
            if wrap {
                write!(f, "(")?;
            }
            write!(f, "ex {var} . ")?;
            fmt_main_prec(body, 1, f)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        MainFormula::Imp { hyp, triple } => {
            let wrap = prec > 1;
            if wrap {
                write!(f, "(")?;
            }
            fmt_main_prec(hyp, 2, f)?;
            write!(f, " => {{{}}} ", triple.pre)?;
            fmt_main_prec(&triple.body, 1, f)?;
            write!(f, " {{{}}}", triple.post)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        MainFormula::Forall { var, triple } => {
            let wrap = prec > 1;
            if wrap {
                write!(f, "(")?;
            }
            write!(f, "all {var} . {{{}}} ", triple.pre)?;
            fmt_main_prec(&triple.body, 1, f)?;
            write!(f, " {{{}}}", triple.post)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for MainFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_main_prec(self, 0, f)
    }
}

/// Alpha-equality of main formulas: structural equality up to consistent
/// renaming of bound variables.
pub fn alpha_eq(a: &MainFormula, b: &MainFormula) -> bool {
    fn term_eq(
        s: &Term,
        t: &Term,
        la: &HashMap<Ident, usize>,
        lb: &HashMap<Ident, usize>,
    ) -> bool {
        match (s, t) {
            (Term::Var { name: x }, Term::Var { name: y }) => {
                match (la.get(x), lb.get(y)) {
                    (Some(i), Some(j)) => i == j,
                    (None, None) => x == y,
                    _ => false,
                }
            }
            (Term::App { f, args }, Term::App { f: g, args: bargs }) => {
                f == g
                    && args.len() == bargs.len()
                    && args.iter().zip(bargs).all(|(s, t)| term_eq(s, t, la, lb))
            }
            _ => false,
        }
    }

    fn state_eq(
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
                state_eq(lhs, l2, la, lb) && state_eq(rhs, r2, la, lb)
            }
            _ => false,
        }
    }

    fn triple_eq(
        a: &Triple,
        b: &Triple,
        la: &HashMap<Ident, usize>,
        lb: &HashMap<Ident, usize>,
    ) -> bool {
        state_eq(&a.pre, &b.pre, la, lb)
            && go(&a.body, &b.body, la, lb)
            && state_eq(&a.post, &b.post, la, lb)
    }

    fn go(
        a: &MainFormula,
        b: &MainFormula,
        la: &HashMap<Ident, usize>,
        lb: &HashMap<Ident, usize>,
    ) -> bool {
        use MainFormula::*;
        match (a, b) {
            (Top, Top) | (Bot, Bot) => true,
            (Atom { p, args }, Atom { p: q, args: bargs }) => {
                p == q
                    && args.len() == bargs.len()
                    && args.iter().zip(bargs).all(|(s, t)| term_eq(s, t, la, lb))
            }
            (And { lhs, rhs }, And { lhs: l2, rhs: r2 })
            | (Or { lhs, rhs }, Or { lhs: l2, rhs: r2 }) => {
                go(lhs, l2, la, lb) && go(rhs, r2, la, lb)
            }
            (Exists { var, body }, Exists { var: v2, body: b2 }) => {
                let depth = la.len();
                let mut la2 = la.clone();
                let mut lb2 = lb.clone();
                la2.insert(var.clone(), depth);
                lb2.insert(v2.clone(), depth);
                go(body, b2, &la2, &lb2)
            }
            (Imp { hyp, triple }, Imp { hyp: h2, triple: t2 }) => {
                go(hyp, h2, la, lb) && triple_eq(triple, t2, la, lb)
            }
            (Forall { var, triple }, Forall { var: v2, triple: t2 }) => {
                let depth = la.len();
                let mut la2 = la.clone();
                let mut lb2 = lb.clone();
                la2.insert(var.clone(), depth);
                lb2.insert(v2.clone(), depth);
                triple_eq(triple, t2, &la2, &lb2)
            }
            _ => false,
        }
    }

    go(a, b, &HashMap::new(), &HashMap::new())
}

/// Pick a name based on `base` that is not in `avoid`: `base`, then `base1`,
/// `base2`, ...
pub fn fresh(base: &Ident, avoid: &BTreeSet<Ident>) -> Ident {
    if !avoid.contains(base) {
        return base.clone();
    }
    for i in 1u64.. {
        let candidate = Ident::new(&format!("{base}{i}"));
        if !avoid.contains(&candidate) {
            return candidate;
        }
    }
    unreachable!()
}

/// Labeled hypothesis context: an ordered association list with distinct
/// labels. Order matters for display only; lookup is by label.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Context {
    entries: Vec<(Ident, MainFormula)>,
}

impl Context {
    pub fn new() -> Context {
        Context::default()
    }

    pub fn entries(&self) -> &[(Ident, MainFormula)] {
        &self.entries
    }

    pub fn lookup(&self, label: &Ident) -> Option<&MainFormula> {
        self.entries.iter().find(|(l, _)| l == label).map(|(_, a)| a)
    }

    pub fn contains_label(&self, label: &Ident) -> bool {
        self.lookup(label).is_some()
    }

    /// Extend with a fresh label; duplicate labels are rejected.
    pub fn push(&self, label: Ident, formula: MainFormula) -> Result<Context, SyntaxError> {
        if self.contains_label(&label) {
            return Err(SyntaxError::DuplicateLabel { label });
        }
        let mut entries = self.entries.clone();
        entries.push((label, formula));
        Ok(Context { entries })
    }

    /// Extend, replacing any existing entry with the same label. Used by rules
    /// that rebind a hypothesis label at a different instance of a template.
    pub fn push_replacing(&self, label: Ident, formula: MainFormula) -> Context {
        let mut entries: Vec<_> =
            self.entries.iter().filter(|(l, _)| *l != label).cloned().collect();
        entries.push((label, formula));
        Context { entries }
    }

    pub fn remove(&self, label: &Ident) -> Context {
        Context {
            entries: self.entries.iter().filter(|(l, _)| l != label).cloned().collect(),
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<Ident>) {
        for (_, a) in &self.entries {
            a.free_vars(out);
        }
    }

    pub fn free_var_set(&self) -> BTreeSet<Ident> {
        let mut s = BTreeSet::new();
        self.free_vars(&mut s);
        s
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (l, a)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}^{l}")?;
        }
        Ok(())
    }
}

/// Whether a signature speaks plain predicate logic over an abstract domain or
/// includes the arithmetic primitives (`0`, `succ`, equality, induction).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sl,
    Sa,
}

/// Declared symbols: function symbols with arities, main predicates, and state
/// predicates. The two predicate namespaces are disjoint — a name may not be
/// declared in both.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub mode: Mode,
    funs: BTreeMap<Ident, usize>,
    preds: BTreeMap<Ident, usize>,
    state_preds: BTreeMap<Ident, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SyntaxError {
    #[error("duplicate declaration of `{name}`")]
    Duplicate { name: Ident },
    #[error("`{name}` is declared as both a predicate and a state predicate")]
    PredicateClash { name: Ident },
    #[error("duplicate hypothesis label `{label}`")]
    DuplicateLabel { label: Ident },
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: Ident },
    #[error("{kind} `{name}` expects {expected} argument(s), got {got}")]
    Arity { kind: &'static str, name: Ident, expected: usize, got: usize },
}

impl Signature {
    /// Fresh signature. In `Sa` mode the arithmetic base is pre-declared:
    /// `0`, `succ`, and the predicates `eq`, `neq`.
    pub fn new(mode: Mode) -> Signature {
        let mut sig = Signature {
            mode,
            funs: BTreeMap::new(),
            preds: BTreeMap::new(),
            state_preds: BTreeMap::new(),
        };
        if mode == Mode::Sa {
            sig.funs.insert(Ident::new("0"), 0);
            sig.funs.insert(Ident::new("succ"), 1);
            sig.preds.insert(Ident::new("eq"), 2);
            sig.preds.insert(Ident::new("neq"), 2);
        }
        sig
    }

    pub fn declare_fun(&mut self, name: Ident, arity: usize) -> Result<(), SyntaxError> {
        if self.funs.contains_key(&name) {
            return Err(SyntaxError::Duplicate { name });
        }
        self.funs.insert(name, arity);
        Ok(())
    }

    pub fn declare_pred(&mut self, name: Ident, arity: usize) -> Result<(), SyntaxError> {
        if self.state_preds.contains_key(&name) {
            return Err(SyntaxError::PredicateClash { name });
        }
        if self.preds.contains_key(&name) {
            return Err(SyntaxError::Duplicate { name });
        }
        self.preds.insert(name, arity);
        Ok(())
    }

    pub fn declare_state_pred(&mut self, name: Ident, arity: usize) -> Result<(), SyntaxError> {
        if self.preds.contains_key(&name) {
            return Err(SyntaxError::PredicateClash { name });
        }
        if self.state_preds.contains_key(&name) {
            return Err(SyntaxError::Duplicate { name });
        }
        self.state_preds.insert(name, arity);
        Ok(())
    }

    pub fn fun_arity(&self, name: &Ident) -> Option<usize> {
        self.funs.get(name).copied()
    }

    pub fn pred_arity(&self, name: &Ident) -> Option<usize> {
        self.preds.get(name).copied()
    }

    pub fn state_pred_arity(&self, name: &Ident) -> Option<usize> {
        self.state_preds.get(name).copied()
    }

    pub fn funs(&self) -> impl Iterator<Item = (&Ident, usize)> {
        self.funs.iter().map(|(k, v)| (k, *v))
    }

    pub fn preds(&self) -> impl Iterator<Item = (&Ident, usize)> {
        self.preds.iter().map(|(k, v)| (k, *v))
    }

    pub fn state_preds(&self) -> impl Iterator<Item = (&Ident, usize)> {
        self.state_preds.iter().map(|(k, v)| (k, *v))
    }

    /// Check that a term only uses declared function symbols at the right
    /// arities.
    pub fn check_term(&self, t: &Term) -> Result<(), SyntaxError> {
        match t {
            Term::Var { .. } => Ok(()),
            Term::App { f, args } => {
                let arity = self.fun_arity(f).ok_or_else(|| SyntaxError::Unknown {
                    kind: "function symbol",
                    name: f.clone(),
                })?;
                if arity != args.len() {
                    return Err(SyntaxError::Arity {
                        kind: "function symbol",
                        name: f.clone(),
                        expected: arity,
                        got: args.len(),
                    });
                }
                args.iter().try_for_each(|a| self.check_term(a))
            }
        }
    }

    pub fn check_state_formula(&self, a: &StateFormula) -> Result<(), SyntaxError> {
        match a {
            StateFormula::Top | StateFormula::Bot => Ok(()),
            StateFormula::Atom { p, args } => {
                let arity = self.state_pred_arity(p).ok_or_else(|| SyntaxError::Unknown {
                    kind: "state predicate",
                    name: p.clone(),
                })?;
                if arity != args.len() {
                    return Err(SyntaxError::Arity {
                        kind: "state predicate",
                        name: p.clone(),
                        expected: arity,
                        got: args.len(),
                    });
                }
                args.iter().try_for_each(|t| self.check_term(t))
            }
            StateFormula::And { lhs, rhs }
            | StateFormula::Or { lhs, rhs }
            | StateFormula::Imp { lhs, rhs } => {
                self.check_state_formula(lhs)?;
                self.check_state_formula(rhs)
            }
        }
    }

    pub fn check_main_formula(&self, a: &MainFormula) -> Result<(), SyntaxError> {
        match a {
            MainFormula::Top | MainFormula::Bot => Ok(()),
            MainFormula::Atom { p, args } => {
                let arity = self.pred_arity(p).ok_or_else(|| SyntaxError::Unknown {
                    kind: "predicate",
                    name: p.clone(),
                })?;
                if arity != args.len() {
                    return Err(SyntaxError::Arity {
                        kind: "predicate",
                        name: p.clone(),
                        expected: arity,
                        got: args.len(),
                    });
                }
                args.iter().try_for_each(|t| self.check_term(t))
            }
            MainFormula::And { lhs, rhs } | MainFormula::Or { lhs, rhs } => {
                self.check_main_formula(lhs)?;
                self.check_main_formula(rhs)
            }
            MainFormula::Exists { body, .. } => self.check_main_formula(body),
            MainFormula::Imp { hyp, triple } => {
                self.check_main_formula(hyp)?;
                self.check_triple(triple)
            }
            MainFormula::Forall { triple, .. } => self.check_triple(triple),
        }
    }

    pub fn check_triple(&self, t: &Triple) -> Result<(), SyntaxError> {
        self.check_state_formula(&t.pre)?;
        self.check_main_formula(&t.body)?;
        self.check_state_formula(&t.post)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Ident {
        Ident::new("x")
    }

    #[test]
    fn interning_dedups_but_equality_is_by_content() {
        let a = Ident::new("hello");
        let b = Ident::new("hello");
        assert_eq!(a, b);
        assert!(Arc::ptr_eq(&a.0, &b.0));
    }

    #[test]
    fn numerals_roundtrip() {
        for n in 0..10 {
            assert_eq!(Term::num(n).as_num(), Some(n));
        }
        assert_eq!(Term::var("x").as_num(), None);
        assert_eq!(Term::app("succ", vec![Term::var("x")]).as_num(), None);
    }

    #[test]
    fn term_subst_replaces_free_occurrences() {
        let t = Term::app("plus", vec![Term::var("x"), Term::var("y")]);
        let s = t.subst(&x(), &Term::num(2));
        assert_eq!(s, Term::app("plus", vec![Term::num(2), Term::var("y")]));
    }

    #[test]
    fn exists_shadows_substitution() {
        // (ex x . P(x))[t/x] leaves the body alone.
        let a = MainFormula::exists("x", MainFormula::atom("P", vec![Term::var("x")]));
        assert_eq!(a.subst(&x(), &Term::num(1)), a);
    }

    #[test]
    fn subst_avoids_capture() {
        // (ex y . P(x, y))[y/x] must rename the binder, not capture.
        let a = MainFormula::exists(
            "y",
            MainFormula::atom("P", vec![Term::var("x"), Term::var("y")]),
        );
        let b = a.subst(&x(), &Term::var("y"));
        // Result should be alpha-equal to ex z . P(y, z).
        let expected = MainFormula::exists(
            "z",
            MainFormula::atom("P", vec![Term::var("y"), Term::var("z")]),
        );
        assert!(alpha_eq(&b, &expected));
        // And the free variable must be exactly y.
        assert_eq!(b.free_var_set(), [Ident::new("y")].into_iter().collect());
    }

    #[test]
    fn alpha_eq_ignores_bound_names() {
        let a = MainFormula::exists("x", MainFormula::atom("P", vec![Term::var("x")]));
        let b = MainFormula::exists("y", MainFormula::atom("P", vec![Term::var("y")]));
        let c = MainFormula::exists("y", MainFormula::atom("P", vec![Term::var("z")]));
        assert!(alpha_eq(&a, &b));
        assert!(!alpha_eq(&a, &c));
    }

    #[test]
    fn alpha_eq_respects_free_names() {
        let a = MainFormula::atom("P", vec![Term::var("x")]);
        let b = MainFormula::atom("P", vec![Term::var("y")]);
        assert!(!alpha_eq(&a, &b));
    }

    #[test]
    fn alpha_eq_forall_binds_into_state_annotations() {
        let trip = |v: &str| {
            Triple::new(
                StateFormula::atom("q", vec![Term::var(v)]),
                MainFormula::Top,
                StateFormula::Top,
            )
        };
        let a = MainFormula::forall("x", trip("x"));
        let b = MainFormula::forall("y", trip("y"));
        let c = MainFormula::forall("y", trip("x"));
        assert!(alpha_eq(&a, &b));
        assert!(!alpha_eq(&a, &c));
    }

    #[test]
    fn fresh_appends_numeric_suffix() {
        let avoid: BTreeSet<Ident> =
            ["x", "x1"].into_iter().map(Ident::new).collect();
        assert_eq!(fresh(&x(), &avoid), Ident::new("x2"));
        assert_eq!(fresh(&Ident::new("y"), &avoid), Ident::new("y"));
    }

    #[test]
    fn context_rejects_duplicate_labels() {
        let ctx = Context::new().push(Ident::new("u"), MainFormula::Top).unwrap();
        assert!(ctx.push(Ident::new("u"), MainFormula::Bot).is_err());
        assert_eq!(ctx.lookup(&Ident::new("u")), Some(&MainFormula::Top));
    }

    #[test]
    fn signature_rejects_cross_namespace_clash() {
        let mut sig = Signature::new(Mode::Sl);
        sig.declare_pred(Ident::new("P"), 1).unwrap();
        assert!(matches!(
            sig.declare_state_pred(Ident::new("P"), 1),
            Err(SyntaxError::PredicateClash { .. })
        ));
        sig.declare_state_pred(Ident::new("q"), 0).unwrap();
        assert!(matches!(
            sig.declare_pred(Ident::new("q"), 0),
            Err(SyntaxError::PredicateClash { .. })
        ));
    }

    #[test]
    fn sa_mode_predeclares_arithmetic() {
        let sig = Signature::new(Mode::Sa);
        assert_eq!(sig.fun_arity(&Ident::new("succ")), Some(1));
        assert_eq!(sig.fun_arity(&Ident::new("0")), Some(0));
        assert_eq!(sig.pred_arity(&Ident::new("eq")), Some(2));
        sig.check_term(&Term::num(3)).unwrap();
    }

    #[test]
    fn display_uses_ascii_grammar() {
        let a = StateFormula::imp(
            StateFormula::and(
                StateFormula::atom("le", vec![Term::cnst("1"), Term::cnst("2")]),
                StateFormula::atom("le", vec![Term::cnst("2"), Term::cnst("3")]),
            ),
            StateFormula::atom("sorted", vec![]),
        );
        assert_eq!(a.to_string(), "le(1, 2) /\\ le(2, 3) -> sorted");

        let m = MainFormula::forall(
            "x",
            Triple::new(
                StateFormula::Top,
                MainFormula::exists(
                    "y",
                    MainFormula::atom("P", vec![Term::var("x"), Term::var("y")]),
                ),
                StateFormula::Top,
            ),
        );
        assert_eq!(m.to_string(), "all x . {true} ex y . P(x, y) {true}");
    }

    #[test]
    fn display_numerals_in_sa_terms() {
        let t = Term::app("plus", vec![Term::num(2), Term::var("n")]);
        assert_eq!(t.to_string(), "plus(2, n)");
        assert_eq!(Term::num(0).to_string(), "0");
    }
}
