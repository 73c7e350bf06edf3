//! Running extracted programs. A term denotes a state transformer: evaluation
//! takes a state, threads it left to right through the term, and returns a
//! value together with the final state. Concrete states, state predicates,
//! function symbols, and the extra computation constants all come from a
//! [`StateModel`]; everything else is fixed by the term language itself.
//!
//! The module also provides the bounded realizability check used by the
//! verification harness: it samples states and individuals, runs the program,
//! and tests that the value witnesses the goal formula.

use std::collections::BTreeSet;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::extract::real_type;
use crate::stlang::{StTerm, StType};
use crate::syntax::{fresh, Ident, MainFormula, StateFormula, Term, Triple};

/// Runtime values. Sums always carry both components — the side not injected
/// holds the canonical inhabitant of its type — and the tag follows the
/// convention that `false` selects the left component.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    NatV(u64),
    UnitV,
    PairV(Box<Value>, Box<Value>),
    SumV { flag: bool, left: Box<Value>, right: Box<Value> },
    ClosureV { env: Env, param: Ident, body: Rc<StTerm> },
    NativeV(NativeOp),
}

/// Function values that are not closures over source terms: partially applied
/// signature symbols and computation constants, plus the runtime forms of the
/// recursor and the counted loop.
#[derive(Clone, Debug, PartialEq)]
pub enum NativeOp {
    /// A function symbol awaiting its argument tuple.
    Fun { name: Ident, arity: usize },
    /// A computation constant still waiting for arguments.
    Const { name: Ident, need: usize, args: Vec<Value> },
    /// A recursor whose step function has been evaluated; the base term is
    /// re-evaluated in the captured environment each time the counter hits 0.
    Rec { env: Env, base: Rc<StTerm>, step: Box<Value> },
    /// A counted loop with all four components evaluated, waiting for the
    /// start value of the invariant type.
    Loop {
        env: Env,
        hole: Ident,
        cond: StateFormula,
        body: Box<Value>,
        exit: Box<Value>,
        zero: Box<Value>,
        counter: u64,
    },
}

/// Variable bindings for evaluation. Later bindings shadow earlier ones.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Env {
    entries: Vec<(Ident, Value)>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn bind(&self, var: Ident, value: Value) -> Env {
        let mut entries = self.entries.clone();
        entries.push((var, value));
        Env { entries }
    }

    pub fn lookup(&self, var: &Ident) -> Option<&Value> {
        self.entries.iter().rev().find(|(v, _)| v == var).map(|(_, x)| x)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{name}`")]
    UnboundVar { name: Ident },
    #[error("unknown computation constant `{name}`")]
    UnknownConst { name: Ident },
    #[error("unknown function symbol `{name}`")]
    UnknownFun { name: Ident },
    #[error("unknown state predicate `{name}`")]
    UnknownStatePred { name: Ident },
    #[error("unknown predicate `{name}`")]
    UnknownMainPred { name: Ident },
    #[error("expected {expected}, found {found}")]
    Shape { expected: &'static str, found: String },
    #[error("constant `{name}` rejected its arguments: {detail}")]
    ConstArgs { name: Ident, detail: String },
}

fn shape(expected: &'static str, found: &Value) -> EvalError {
    EvalError::Shape { expected, found: format!("{found:?}") }
}

/// What a concrete state implementation supplies: the state representation,
/// the meaning of state predicates and function symbols, the behaviour of the
/// extra computation constants, decidable ordinary predicates for
/// realizability testing, and a deterministic state sampler.
///
/// Symbol lookups return `None` for names the model does not know; the
/// evaluator falls back to the built-in arithmetic meaning of `0`, `succ`,
/// `eq`, and `neq` before reporting an unknown symbol.
pub trait StateModel {
    type State: Clone + PartialEq + std::fmt::Debug + Serialize + DeserializeOwned;

    fn name(&self) -> &str;

    /// The individual that `default` produces at base type, and the value of
    /// the designated ground symbol used when grounding stray variables.
    fn canonical_d(&self) -> u64 {
        0
    }

    fn fun_arity(&self, name: &Ident) -> Option<usize>;

    /// Total on the model's declared symbols for all argument values.
    fn interp_fun(&self, name: &Ident, args: &[u64]) -> Option<u64>;

    fn eval_state_atom(&self, p: &Ident, args: &[u64], state: &Self::State) -> Option<bool>;

    /// Decidable interpretation of the ordinary predicates.
    fn eval_main_atom(&self, p: &Ident, args: &[u64]) -> Option<bool>;

    fn const_type(&self, name: &Ident) -> Option<StType>;

    fn apply_const(
        &self,
        name: &Ident,
        args: &[Value],
        state: &Self::State,
    ) -> Result<(Value, Self::State), EvalError>;

    /// Deterministic per seed; used by the realizability harness.
    fn sample_states(&self, seed: u64, count: usize) -> Vec<Self::State>;
}

fn builtin_fun_arity(name: &Ident) -> Option<usize> {
    match name.as_str() {
        "0" => Some(0),
        "succ" => Some(1),
        _ => None,
    }
}

fn builtin_interp_fun(name: &Ident, args: &[u64]) -> Option<u64> {
    match (name.as_str(), args) {
        ("0", []) => Some(0),
        ("succ", [n]) => Some(n + 1),
        _ => None,
    }
}

/// One record per computation-constant application, with the states on
/// either side of it.
#[derive(Clone, Debug)]
pub struct TraceEvent<S> {
    pub constant: Ident,
    pub args: Vec<Value>,
    pub before: S,
    pub after: S,
}

#[derive(Clone, Debug, Default)]
pub struct Trace<S> {
    pub events: Vec<TraceEvent<S>>,
}

impl<S> Trace<S> {
    pub fn new() -> Trace<S> {
        Trace { events: Vec::new() }
    }
}

/// Evaluate a term in the given environment and state.
pub fn eval<M: StateModel>(
    env: &Env,
    t: &StTerm,
    state: M::State,
    model: &M,
) -> Result<(Value, M::State), EvalError> {
    Ev { model, trace: None }.eval(env, t, state)
}

/// Like [`eval`], recording every computation-constant application.
pub fn eval_traced<M: StateModel>(
    env: &Env,
    t: &StTerm,
    state: M::State,
    model: &M,
    trace: &mut Trace<M::State>,
) -> Result<(Value, M::State), EvalError> {
    Ev { model, trace: Some(trace) }.eval(env, t, state)
}

/// Apply a function value to an argument, starting from the given state.
pub fn apply<M: StateModel>(
    fun: &Value,
    arg: Value,
    state: M::State,
    model: &M,
) -> Result<(Value, M::State), EvalError> {
    Ev { model, trace: None }.apply(fun, arg, state)
}

struct Ev<'a, M: StateModel> {
    model: &'a M,
    trace: Option<&'a mut Trace<M::State>>,
}

impl<'a, M: StateModel> Ev<'a, M> {
    fn eval(
        &mut self,
        env: &Env,
        t: &StTerm,
        state: M::State,
    ) -> Result<(Value, M::State), EvalError> {
        match t {
            StTerm::Var { name } => {
                let v = env
                    .lookup(name)
                    .ok_or_else(|| EvalError::UnboundVar { name: name.clone() })?;
                Ok((v.clone(), state))
            }
            StTerm::Skip => Ok((Value::UnitV, state)),
            StTerm::Default { ty } => Ok((default_value(ty, self.model), state)),
            StTerm::Const { name } => {
                let ty = self
                    .model
                    .const_type(name)
                    .ok_or_else(|| EvalError::UnknownConst { name: name.clone() })?;
                let need = arrow_arity(&ty);
                if need == 0 {
                    self.run_const(name, &[], state)
                } else {
                    Ok((
                        Value::NativeV(NativeOp::Const { name: name.clone(), need, args: vec![] }),
                        state,
                    ))
                }
            }
            StTerm::Fun { name } => {
                let arity = self
                    .model
                    .fun_arity(name)
                    .or_else(|| builtin_fun_arity(name))
                    .ok_or_else(|| EvalError::UnknownFun { name: name.clone() })?;
                if arity == 0 {
                    let n = self
                        .model
                        .interp_fun(name, &[])
                        .or_else(|| builtin_interp_fun(name, &[]))
                        .ok_or_else(|| EvalError::UnknownFun { name: name.clone() })?;
                    Ok((Value::NatV(n), state))
                } else {
                    Ok((Value::NativeV(NativeOp::Fun { name: name.clone(), arity }), state))
                }
            }
            StTerm::Comp { fst, snd } => {
                let (a, s1) = self.eval(env, fst, state)?;
                let (b, s2) = self.eval(env, snd, s1)?;
                Ok((Value::PairV(Box::new(a), Box::new(b)), s2))
            }
            StTerm::Proj0 { pair } => {
                let (p, s1) = self.eval(env, pair, state)?;
                match p {
                    Value::PairV(a, _) => Ok((*a, s1)),
                    other => Err(shape("a pair", &other)),
                }
            }
            StTerm::Proj1 { pair } => {
                let (p, s1) = self.eval(env, pair, state)?;
                match p {
                    Value::PairV(_, b) => Ok((*b, s1)),
                    other => Err(shape("a pair", &other)),
                }
            }
            StTerm::Inj0 { val, right } => {
                let (a, s1) = self.eval(env, val, state)?;
                Ok((
                    Value::SumV {
                        flag: false,
                        left: Box::new(a),
                        right: Box::new(default_value(right, self.model)),
                    },
                    s1,
                ))
            }
            StTerm::Inj1 { val, left } => {
                let (b, s1) = self.eval(env, val, state)?;
                Ok((
                    Value::SumV {
                        flag: true,
                        left: Box::new(default_value(left, self.model)),
                        right: Box::new(b),
                    },
                    s1,
                ))
            }
            StTerm::Elim { scrutinee, on_left, on_right } => {
                // Both branch functions are evaluated from the state the
                // scrutinee leaves behind; the case split then continues from
                // the chosen branch's own output state and discards the other.
                let (sv, s1) = self.eval(env, scrutinee, state)?;
                let (f, s2) = self.eval(env, on_left, s1.clone())?;
                let (g, s3) = self.eval(env, on_right, s1)?;
                match sv {
                    Value::SumV { flag: false, left, .. } => self.apply(&f, *left, s2),
                    Value::SumV { flag: true, right, .. } => self.apply(&g, *right, s3),
                    other => Err(shape("a sum", &other)),
                }
            }
            StTerm::Lam { var, body, .. } => Ok((
                Value::ClosureV {
                    env: env.clone(),
                    param: var.clone(),
                    body: Rc::new((**body).clone()),
                },
                state,
            )),
            StTerm::App { fun, arg } => {
                let (f, s1) = self.eval(env, fun, state)?;
                let (a, s2) = self.eval(env, arg, s1)?;
                self.apply(&f, a, s2)
            }
            StTerm::Ite { cond, then_branch, else_branch } => {
                let b = eval_state_formula(cond, env, &state, self.model)?;
                if b {
                    self.eval(env, then_branch, state)
                } else {
                    self.eval(env, else_branch, state)
                }
            }
            StTerm::Rec { base, step } => {
                let (f, s1) = self.eval(env, step, state)?;
                Ok((
                    Value::NativeV(NativeOp::Rec {
                        env: env.clone(),
                        base: Rc::new((**base).clone()),
                        step: Box::new(f),
                    }),
                    s1,
                ))
            }
            StTerm::While { hole, cond, r, s, t: zero, u } => {
                let (f, s1) = self.eval(env, r, state)?;
                let (g, s2) = self.eval(env, s, s1)?;
                let (h, s3) = self.eval(env, zero, s2)?;
                let (m, s4) = self.eval(env, u, s3)?;
                let counter = match m {
                    Value::NatV(n) => n,
                    other => return Err(shape("a counter value", &other)),
                };
                Ok((
                    Value::NativeV(NativeOp::Loop {
                        env: env.clone(),
                        hole: hole.clone(),
                        cond: cond.clone(),
                        body: Box::new(f),
                        exit: Box::new(g),
                        zero: Box::new(h),
                        counter,
                    }),
                    s4,
                ))
            }
        }
    }

    fn apply(
        &mut self,
        fun: &Value,
        arg: Value,
        state: M::State,
    ) -> Result<(Value, M::State), EvalError> {
        match fun {
            Value::ClosureV { env, param, body } => {
                let inner = env.bind(param.clone(), arg);
                let body = Rc::clone(body);
                self.eval(&inner, &body, state)
            }
            Value::NativeV(NativeOp::Fun { name, arity }) => {
                // The argument is a right-nested tuple of individuals, one
                // component per place of the symbol.
                let mut args = Vec::with_capacity(*arity);
                let mut cur = arg;
                for _ in 0..arity.saturating_sub(1) {
                    match cur {
                        Value::PairV(a, rest) => {
                            match *a {
                                Value::NatV(n) => args.push(n),
                                ref other => return Err(shape("an individual", other)),
                            }
                            cur = *rest;
                        }
                        other => return Err(shape("an argument tuple", &other)),
                    }
                }
                match cur {
                    Value::NatV(n) => args.push(n),
                    other => return Err(shape("an individual", &other)),
                }
                let v = self
                    .model
                    .interp_fun(name, &args)
                    .or_else(|| builtin_interp_fun(name, &args))
                    .ok_or_else(|| EvalError::UnknownFun { name: name.clone() })?;
                Ok((Value::NatV(v), state))
            }
            Value::NativeV(NativeOp::Const { name, need, args }) => {
                let mut args = args.clone();
                args.push(arg);
                if args.len() < *need {
                    Ok((
                        Value::NativeV(NativeOp::Const { name: name.clone(), need: *need, args }),
                        state,
                    ))
                } else {
                    self.run_const(name, &args, state)
                }
            }
            Value::NativeV(NativeOp::Rec { env, base, step }) => {
                let n = match arg {
                    Value::NatV(n) => n,
                    other => return Err(shape("a recursion counter", &other)),
                };
                let base = Rc::clone(base);
                let env = env.clone();
                let step = (**step).clone();
                let (mut acc, mut st) = self.eval(&env, &base, state)?;
                for k in 0..n {
                    let (g, s1) = self.apply(&step, Value::NatV(k), st)?;
                    let (next, s2) = self.apply(&g, acc, s1)?;
                    acc = next;
                    st = s2;
                }
                Ok((acc, st))
            }
            Value::NativeV(NativeOp::Loop { env, hole, cond, body, exit, zero, counter }) => {
                let env = env.clone();
                let hole = hole.clone();
                let cond = cond.clone();
                let (body, exit, zero) = ((**body).clone(), (**exit).clone(), (**zero).clone());
                let mut n = *counter;
                let mut y = arg;
                let mut st = state;
                loop {
                    if n == 0 {
                        return self.apply(&zero, y, st);
                    }
                    let guard_env = env.bind(hole.clone(), Value::NatV(n));
                    if eval_state_formula(&cond, &guard_env, &st, self.model)? {
                        let (f, s1) = self.apply(&body, Value::NatV(n - 1), st)?;
                        let (y2, s2) = self.apply(&f, y, s1)?;
                        y = y2;
                        st = s2;
                        n -= 1;
                    } else {
                        let (g, s1) = self.apply(&exit, Value::NatV(n - 1), st)?;
                        return self.apply(&g, y, s1);
                    }
                }
            }
            other => Err(shape("a function value", other)),
        }
    }

    fn run_const(
        &mut self,
        name: &Ident,
        args: &[Value],
        state: M::State,
    ) -> Result<(Value, M::State), EvalError> {
        let before = if self.trace.is_some() { Some(state.clone()) } else { None };
        let (v, after) = self.model.apply_const(name, args, &state)?;
        if let (Some(tr), Some(before)) = (self.trace.as_deref_mut(), before) {
            tr.events.push(TraceEvent {
                constant: name.clone(),
                args: args.to_vec(),
                before,
                after: after.clone(),
            });
        }
        Ok((v, after))
    }
}

fn arrow_arity(ty: &StType) -> usize {
    let mut n = 0;
    let mut t = ty;
    while let StType::Arrow { dom: _, cod } = t {
        n += 1;
        t = cod;
    }
    n
}

/// The canonical inhabitant of a type: the model's designated individual at
/// base type, the left injection for sums, and for functions a closure that
/// returns the codomain's inhabitant without touching the state.
pub fn default_value<M: StateModel>(ty: &StType, model: &M) -> Value {
    match ty {
        StType::D => Value::NatV(model.canonical_d()),
        StType::C => Value::UnitV,
        StType::Prod { fst, snd } => Value::PairV(
            Box::new(default_value(fst, model)),
            Box::new(default_value(snd, model)),
        ),
        StType::Sum { left, right } => Value::SumV {
            flag: false,
            left: Box::new(default_value(left, model)),
            right: Box::new(default_value(right, model)),
        },
        StType::Arrow { dom: _, cod } => Value::ClosureV {
            env: Env::new(),
            param: Ident::new("_"),
            body: Rc::new(StTerm::default_of((**cod).clone())),
        },
    }
}

/// Evaluate a first-order term to an individual.
pub fn eval_term<M: StateModel>(t: &Term, env: &Env, model: &M) -> Result<u64, EvalError> {
    match t {
        Term::Var { name } => match env.lookup(name) {
            Some(Value::NatV(n)) => Ok(*n),
            Some(other) => Err(shape("an individual", other)),
            None => Err(EvalError::UnboundVar { name: name.clone() }),
        },
        Term::App { f, args } => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_term(a, env, model)?);
            }
            model
                .interp_fun(f, &vals)
                .or_else(|| builtin_interp_fun(f, &vals))
                .ok_or_else(|| EvalError::UnknownFun { name: f.clone() })
        }
    }
}

/// Classical truth of a state formula at a state; all free variables must be
/// bound to individuals in the environment.
pub fn eval_state_formula<M: StateModel>(
    alpha: &StateFormula,
    env: &Env,
    state: &M::State,
    model: &M,
) -> Result<bool, EvalError> {
    match alpha {
        StateFormula::Top => Ok(true),
        StateFormula::Bot => Ok(false),
        StateFormula::Atom { p, args } => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_term(a, env, model)?);
            }
            if let Some(b) = model.eval_state_atom(p, &vals, state) {
                return Ok(b);
            }
            match (p.as_str(), vals.as_slice()) {
                ("eq", [a, b]) => Ok(a == b),
                ("neq", [a, b]) => Ok(a != b),
                _ => Err(EvalError::UnknownStatePred { name: p.clone() }),
            }
        }
        StateFormula::And { lhs, rhs } => Ok(eval_state_formula(lhs, env, state, model)?
            && eval_state_formula(rhs, env, state, model)?),
        StateFormula::Or { lhs, rhs } => Ok(eval_state_formula(lhs, env, state, model)?
            || eval_state_formula(rhs, env, state, model)?),
        StateFormula::Imp { lhs, rhs } => Ok(!eval_state_formula(lhs, env, state, model)?
            || eval_state_formula(rhs, env, state, model)?),
    }
}

fn eval_main_atom<M: StateModel>(
    p: &Ident,
    args: &[u64],
    model: &M,
) -> Result<bool, EvalError> {
    if let Some(b) = model.eval_main_atom(p, args) {
        return Ok(b);
    }
    match (p.as_str(), args) {
        ("eq", [a, b]) => Ok(a == b),
        ("neq", [a, b]) => Ok(a != b),
        _ => Err(EvalError::UnknownMainPred { name: p.clone() }),
    }
}

/// Sampling budget for the realizability check.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub state_samples: usize,
    pub d_samples: usize,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget { state_samples: 32, d_samples: 8, seed: 0 }
    }
}

/// What to check a program against: a full triple, or a bare formula whose
/// state conditions live in its own implications and quantifiers.
#[derive(Clone, Copy, Debug)]
pub enum Goal<'a> {
    Triple(&'a Triple),
    Formula(&'a MainFormula),
}

impl<'a> From<&'a Triple> for Goal<'a> {
    fn from(t: &'a Triple) -> Goal<'a> {
        Goal::Triple(t)
    }
}

impl<'a> From<&'a MainFormula> for Goal<'a> {
    fn from(f: &'a MainFormula) -> Goal<'a> {
        Goal::Formula(f)
    }
}

#[derive(Clone, Debug)]
pub struct Counterexample<S> {
    pub state: S,
    pub assignment: Vec<(Ident, u64)>,
    pub detail: String,
}

/// Outcome of a bounded check: a pass records how many concrete checks fired,
/// and a run in which no sampled state satisfied the precondition is reported
/// as inconclusive rather than as a vacuous pass.
#[derive(Clone, Debug)]
pub enum Verdict<S> {
    Pass { checks: usize },
    Fail(Counterexample<S>),
    Inconclusive,
}

impl<S> Verdict<S> {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass { .. })
    }
}

enum Sr {
    Holds,
    Fails(String),
}

/// Test whether a program realizes a goal by sampling. The term is evaluated
/// under every sampled assignment of the goal's free variables; for triples,
/// only sampled states satisfying the precondition count as checks, and if
/// none does the verdict is inconclusive. A pass is evidence, not proof.
pub fn check_realizes<'a, M: StateModel>(
    t: &StTerm,
    goal: impl Into<Goal<'a>>,
    model: &M,
    budget: &Budget,
) -> Result<Verdict<M::State>, EvalError> {
    let goal = goal.into();
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let free: Vec<Ident> = match goal {
        Goal::Triple(tr) => {
            let mut out = BTreeSet::new();
            tr.free_vars(&mut out);
            out.into_iter().collect()
        }
        Goal::Formula(f) => f.free_var_set().into_iter().collect(),
    };
    let assignments = sample_assignments(&free, model, budget, &mut rng);
    let mut checks = 0usize;
    for assignment in &assignments {
        let mut env = Env::new();
        for (v, n) in assignment {
            env = env.bind(v.clone(), Value::NatV(*n));
        }
        let states = model.sample_states(rng.gen(), budget.state_samples);
        match goal {
            Goal::Triple(tr) => {
                for pi in &states {
                    if !eval_state_formula(&tr.pre, &env, pi, model)? {
                        continue;
                    }
                    checks += 1;
                    let (v, pi1) = eval(&env, t, pi.clone(), model)?;
                    match srel(&v, &tr.body, &env, model, budget, &mut rng)? {
                        Sr::Holds => {}
                        Sr::Fails(detail) => {
                            return Ok(Verdict::Fail(Counterexample {
                                state: pi.clone(),
                                assignment: assignment.clone(),
                                detail,
                            }))
                        }
                    }
                    if !eval_state_formula(&tr.post, &env, &pi1, model)? {
                        return Ok(Verdict::Fail(Counterexample {
                            state: pi.clone(),
                            assignment: assignment.clone(),
                            detail: format!("postcondition {} fails at the final state", tr.post),
                        }));
                    }
                }
            }
            Goal::Formula(f) => {
                for pi in &states {
                    checks += 1;
                    let (v, _) = eval(&env, t, pi.clone(), model)?;
                    if let Sr::Fails(detail) = srel(&v, f, &env, model, budget, &mut rng)? {
                        return Ok(Verdict::Fail(Counterexample {
                            state: pi.clone(),
                            assignment: assignment.clone(),
                            detail,
                        }));
                    }
                }
            }
        }
    }
    if checks == 0 {
        Ok(Verdict::Inconclusive)
    } else {
        Ok(Verdict::Pass { checks })
    }
}

fn sample_assignments<M: StateModel>(
    free: &[Ident],
    model: &M,
    budget: &Budget,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<(Ident, u64)>> {
    if free.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    // The canonical assignment first, then random small individuals.
    out.push(free.iter().map(|v| (v.clone(), model.canonical_d())).collect());
    for _ in 0..budget.d_samples {
        out.push(free.iter().map(|v| (v.clone(), rng.gen_range(0..16))).collect());
    }
    out
}

fn srel<M: StateModel>(
    v: &Value,
    a: &MainFormula,
    env: &Env,
    model: &M,
    budget: &Budget,
    rng: &mut ChaCha8Rng,
) -> Result<Sr, EvalError> {
    match a {
        MainFormula::Top => Ok(Sr::Holds),
        MainFormula::Bot => Ok(Sr::Fails("falsum has no realizer".to_string())),
        MainFormula::Atom { p, args } => {
            let mut vals = Vec::with_capacity(args.len());
            for t in args {
                vals.push(eval_term(t, env, model)?);
            }
            if eval_main_atom(p, &vals, model)? {
                Ok(Sr::Holds)
            } else {
                let shown: Vec<String> = vals.iter().map(|n| n.to_string()).collect();
                Ok(Sr::Fails(format!("{p}({}) is false", shown.join(", "))))
            }
        }
        MainFormula::And { lhs, rhs } => match v {
            Value::PairV(a0, a1) => match srel(a0, lhs, env, model, budget, rng)? {
                Sr::Holds => srel(a1, rhs, env, model, budget, rng),
                fails => Ok(fails),
            },
            other => Err(shape("a pair", other)),
        },
        MainFormula::Or { lhs, rhs } => match v {
            Value::SumV { flag: false, left, .. } => srel(left, lhs, env, model, budget, rng),
            Value::SumV { flag: true, right, .. } => srel(right, rhs, env, model, budget, rng),
            other => Err(shape("a sum", other)),
        },
        MainFormula::Exists { var, body } => match v {
            Value::PairV(w, ev) => match **w {
                Value::NatV(n) => {
                    let inner = env.bind(var.clone(), Value::NatV(n));
                    match srel(ev, body, &inner, model, budget, rng)? {
                        Sr::Holds => Ok(Sr::Holds),
                        Sr::Fails(d) => Ok(Sr::Fails(format!("witness {n}: {d}"))),
                    }
                }
                ref other => Err(shape("an individual witness", other)),
            },
            other => Err(shape("a witness pair", other)),
        },
        MainFormula::Imp { hyp, triple } => {
            // Hypotheses are tested with the canonical inhabitant of their
            // realizer type; if it does not realize the hypothesis, the
            // implication cannot be probed and holds vacuously here.
            let w = default_value(&real_type(hyp), model);
            match srel(&w, hyp, env, model, budget, rng)? {
                Sr::Fails(_) => Ok(Sr::Holds),
                Sr::Holds => triple_rel(v, Some(w), triple, env, model, budget, rng),
            }
        }
        MainFormula::Forall { var, triple } => {
            let mut ds: Vec<u64> = vec![model.canonical_d()];
            for _ in 0..budget.d_samples {
                ds.push(rng.gen_range(0..16));
            }
            for d in ds {
                let inner = env.bind(var.clone(), Value::NatV(d));
                match triple_rel(v, Some(Value::NatV(d)), triple, &inner, model, budget, rng)? {
                    Sr::Holds => {}
                    Sr::Fails(detail) => {
                        return Ok(Sr::Fails(format!("at {var} = {d}: {detail}")))
                    }
                }
            }
            Ok(Sr::Holds)
        }
    }
}

/// The state layer of the relation: from every sampled state satisfying the
/// precondition, apply the function value (when an argument is supplied),
/// check the result realizes the body, and check the postcondition at the
/// output state.
fn triple_rel<M: StateModel>(
    v: &Value,
    arg: Option<Value>,
    triple: &Triple,
    env: &Env,
    model: &M,
    budget: &Budget,
    rng: &mut ChaCha8Rng,
) -> Result<Sr, EvalError> {
    let states = model.sample_states(rng.gen(), budget.state_samples);
    for pi in states {
        if !eval_state_formula(&triple.pre, env, &pi, model)? {
            continue;
        }
        let (res, pi1) = match &arg {
            Some(a) => apply(v, a.clone(), pi.clone(), model)?,
            None => (v.clone(), pi.clone()),
        };
        match srel(&res, &triple.body, env, model, budget, rng)? {
            Sr::Holds => {}
            fails => return Ok(fails),
        }
        if !eval_state_formula(&triple.post, env, &pi1, model)? {
            return Ok(Sr::Fails(format!(
                "postcondition {} fails after running from {pi:?}",
                triple.post
            )));
        }
    }
    Ok(Sr::Holds)
}

/// Structural value comparison at a type, with functions compared
/// extensionally by applying both sides to canonical and small sampled
/// arguments from the same probe state. Approximate at arrow types.
pub fn values_agree<M: StateModel>(
    a: &Value,
    b: &Value,
    ty: &StType,
    state: &M::State,
    model: &M,
) -> Result<bool, EvalError> {
    match ty {
        StType::D | StType::C => Ok(a == b),
        StType::Prod { fst, snd } => match (a, b) {
            (Value::PairV(a0, a1), Value::PairV(b0, b1)) => {
                Ok(values_agree(a0, b0, fst, state, model)?
                    && values_agree(a1, b1, snd, state, model)?)
            }
            _ => Ok(false),
        },
        StType::Sum { left, right } => match (a, b) {
            (
                Value::SumV { flag: fa, left: la, right: ra },
                Value::SumV { flag: fb, left: lb, right: rb },
            ) => {
                if fa != fb {
                    return Ok(false);
                }
                if *fa {
                    values_agree(ra, rb, right, state, model)
                } else {
                    values_agree(la, lb, left, state, model)
                }
            }
            _ => Ok(false),
        },
        StType::Arrow { dom, cod } => {
            let mut probes = vec![default_value(dom, model)];
            if **dom == StType::D {
                probes.push(Value::NatV(1));
                probes.push(Value::NatV(2));
            }
            for p in probes {
                let (ra, sa) = apply(a, p.clone(), state.clone(), model)?;
                let (rb, sb) = apply(b, p, state.clone(), model)?;
                if sa != sb || !values_agree(&ra, &rb, cod, &sa, model)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

#[derive(Clone, Debug)]
pub enum CurryVerdict<S> {
    Agree { checked: usize },
    Disagree { state: S, detail: String },
}

impl<S> CurryVerdict<S> {
    pub fn agreed(&self) -> bool {
        matches!(self, CurryVerdict::Agree { .. })
    }
}

/// Compare the two readings of pair-splitting application on sampled states:
/// wrapping `t` in the splitting lambda and applying it to `s`, versus
/// evaluating `s` first and running `t` with its components substituted. The
/// two agree for every term; this check guards the evaluator against drift.
pub fn currying_check<M: StateModel>(
    t: &StTerm,
    x: (&Ident, &StType),
    y: (&Ident, &StType),
    result_ty: &StType,
    s: &StTerm,
    model: &M,
    budget: &Budget,
) -> Result<CurryVerdict<M::State>, EvalError> {
    let (xv, xty) = x;
    let (yv, yty) = y;
    let mut avoid = t.free_var_set();
    avoid.insert(xv.clone());
    avoid.insert(yv.clone());
    let v = fresh(&Ident::new("v"), &avoid);
    let wrapper = StTerm::lam(
        v.clone(),
        StType::prod(xty.clone(), yty.clone()),
        StTerm::app(
            StTerm::app(
                StTerm::lam(xv.clone(), xty.clone(), StTerm::lam(yv.clone(), yty.clone(), t.clone())),
                StTerm::proj0(StTerm::var(v.clone())),
            ),
            StTerm::proj1(StTerm::var(v)),
        ),
    );
    let applied = StTerm::app(wrapper, s.clone());
    let states = model.sample_states(budget.seed, budget.state_samples.max(1));
    let mut checked = 0;
    for pi in states {
        let (lhs, lpi) = eval(&Env::new(), &applied, pi.clone(), model)?;
        let (pair, pi1) = eval(&Env::new(), s, pi.clone(), model)?;
        let (a, b) = match pair {
            Value::PairV(a, b) => (*a, *b),
            other => return Err(shape("a pair", &other)),
        };
        let env = Env::new().bind(xv.clone(), a).bind(yv.clone(), b);
        let (rhs, rpi) = eval(&env, t, pi1, model)?;
        checked += 1;
        if lpi != rpi {
            return Ok(CurryVerdict::Disagree {
                state: pi,
                detail: format!("output states differ: {lpi:?} vs {rpi:?}"),
            });
        }
        if !values_agree(&lhs, &rhs, result_ty, &lpi, model)? {
            return Ok(CurryVerdict::Disagree {
                state: pi,
                detail: format!("values differ: {lhs:?} vs {rhs:?}"),
            });
        }
    }
    Ok(CurryVerdict::Agree { checked })
}

/// Render a formula as the statement its realizability unfolds to, for
/// diagnostics: triples become an implication between the precondition at an
/// input state and the postcondition at some output state.
pub fn embed_main_formula(a: &MainFormula) -> String {
    match a {
        MainFormula::Top => "⊤".to_string(),
        MainFormula::Bot => "⊥".to_string(),
        MainFormula::Atom { p, args } => {
            if args.is_empty() {
                format!("{p}")
            } else {
                let shown: Vec<String> = args.iter().map(|t| t.to_string()).collect();
                format!("{p}({})", shown.join(", "))
            }
        }
        MainFormula::And { lhs, rhs } => {
            format!("{} ∧ {}", embed_operand(lhs), embed_operand(rhs))
        }
        MainFormula::Or { lhs, rhs } => {
            format!("{} ∨ {}", embed_operand(lhs), embed_operand(rhs))
        }
        MainFormula::Exists { var, body } => format!("∃{var}. {}", embed_main_formula(body)),
        MainFormula::Imp { hyp, triple } => {
            format!("{} ⟹ ({})", embed_operand(hyp), embed_triple(triple))
        }
        MainFormula::Forall { var, triple } => format!("∀{var}. {}", embed_triple(triple)),
    }
}

fn embed_operand(a: &MainFormula) -> String {
    match a {
        MainFormula::Top | MainFormula::Bot | MainFormula::Atom { .. } => embed_main_formula(a),
        _ => format!("({})", embed_main_formula(a)),
    }
}

/// The diagnostic reading of a triple.
pub fn embed_triple(t: &Triple) -> String {
    let body = match &t.body {
        MainFormula::Imp { .. } | MainFormula::Forall { .. } => {
            format!("({})", embed_main_formula(&t.body))
        }
        _ => embed_main_formula(&t.body),
    };
    format!("∃π. [{}](π) ⟹ {body} ∧ ∃π′. [{}](π′)", t.pre, t.post)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stlang::{interp_term, star};
    use crate::syntax::StateFormula as SF;

    /// A one-cell counter state. `tick` increments it, `put` stores its
    /// argument, and `get` reads it out; `at_least(n)` and `is(n)` observe it.
    struct Counter;

    impl StateModel for Counter {
        type State = u64;

        fn name(&self) -> &str {
            "counter"
        }

        fn fun_arity(&self, name: &Ident) -> Option<usize> {
            match name.as_str() {
                "plus" => Some(2),
                _ => None,
            }
        }

        fn interp_fun(&self, name: &Ident, args: &[u64]) -> Option<u64> {
            match (name.as_str(), args) {
                ("plus", [a, b]) => Some(a + b),
                _ => None,
            }
        }

        fn eval_state_atom(&self, p: &Ident, args: &[u64], state: &u64) -> Option<bool> {
            match (p.as_str(), args) {
                ("at_least", [n]) => Some(state >= n),
                ("is", [n]) => Some(state == n),
                ("ready", []) => Some(true),
                _ => None,
            }
        }

        fn eval_main_atom(&self, p: &Ident, args: &[u64]) -> Option<bool> {
            match (p.as_str(), args) {
                ("le", [a, b]) => Some(a <= b),
                _ => None,
            }
        }

        fn const_type(&self, name: &Ident) -> Option<StType> {
            match name.as_str() {
                "tick" => Some(StType::C),
                "put" => Some(StType::arrow(StType::D, StType::C)),
                "get" => Some(StType::prod(StType::D, StType::C)),
                _ => None,
            }
        }

        fn apply_const(
            &self,
            name: &Ident,
            args: &[Value],
            state: &u64,
        ) -> Result<(Value, u64), EvalError> {
            match (name.as_str(), args) {
                ("tick", []) => Ok((Value::UnitV, state + 1)),
                ("put", [Value::NatV(n)]) => Ok((Value::UnitV, *n)),
                ("get", []) => Ok((
                    Value::PairV(Box::new(Value::NatV(*state)), Box::new(Value::UnitV)),
                    *state,
                )),
                _ => Err(EvalError::ConstArgs {
                    name: name.clone(),
                    detail: format!("{args:?}"),
                }),
            }
        }

        fn sample_states(&self, seed: u64, count: usize) -> Vec<u64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|_| rng.gen_range(0..16)).collect()
        }
    }

    fn run(t: &StTerm, state: u64) -> (Value, u64) {
        eval(&Env::new(), t, state, &Counter).unwrap()
    }

    #[test]
    fn first_order_terms_leave_the_state_alone() {
        let t = interp_term(&Term::app(
            "plus",
            vec![Term::var("x"), Term::app("plus", vec![Term::var("y"), Term::var("y")])],
        ));
        let env = Env::new()
            .bind(Ident::new("x"), Value::NatV(3))
            .bind(Ident::new("y"), Value::NatV(5));
        let (v, s) = eval(&env, &t, 7, &Counter).unwrap();
        assert_eq!(v, Value::NatV(13));
        assert_eq!(s, 7);
    }

    #[test]
    fn state_free_recursion_returns_unit() {
        let t = StTerm::app(
            StTerm::rec(
                StTerm::Skip,
                StTerm::lam("x", StType::D, StTerm::lam("y", StType::C, StTerm::var("y"))),
            ),
            interp_term(&Term::num(3)),
        );
        // num(3) builds succ(succ(succ(0))): builtin arithmetic covers it.
        let (v, s) = run(&t, 4);
        assert_eq!(v, Value::UnitV);
        assert_eq!(s, 4);
    }

    #[test]
    fn composition_threads_state_left_first() {
        let t = StTerm::comp(StTerm::cnst("tick"), StTerm::cnst("get"));
        let (v, s) = run(&t, 0);
        assert_eq!(s, 1);
        assert_eq!(
            v,
            Value::PairV(
                Box::new(Value::UnitV),
                Box::new(Value::PairV(Box::new(Value::NatV(1)), Box::new(Value::UnitV))),
            )
        );
    }

    #[test]
    fn case_split_runs_both_branch_functions_and_keeps_one_state() {
        // Each branch function performs a tick while being evaluated; the
        // split then continues from the chosen branch's state, so exactly one
        // of the two ticks survives in the final state.
        let branch = || star(StTerm::cnst("tick"), StTerm::lam("a", StType::C, StTerm::var("a")));
        let t = StTerm::elim(StTerm::inj0(StTerm::Skip, StType::C), branch(), branch());
        let (v, s) = run(&t, 0);
        assert_eq!(v, Value::UnitV);
        assert_eq!(s, 1);
    }

    #[test]
    fn conditional_runs_only_the_selected_branch() {
        let t = StTerm::ite(
            SF::atom("at_least", vec![Term::var("n")]),
            StTerm::cnst("tick"),
            StTerm::Skip,
        );
        let env = Env::new().bind(Ident::new("n"), Value::NatV(3));
        let (_, s) = eval(&env, &t, 5, &Counter).unwrap();
        assert_eq!(s, 6, "condition true: the tick branch runs");
        let (_, s) = eval(&env, &t, 2, &Counter).unwrap();
        assert_eq!(s, 2, "condition false: the tick is never executed");
    }

    #[test]
    fn recursion_applies_the_step_counter_many_times() {
        // Step: tick, then succ of the accumulator. Three steps from state
        // 10: value 3, state 13.
        let step = StTerm::lam(
            "x",
            StType::D,
            StTerm::lam(
                "y",
                StType::D,
                star(StTerm::cnst("tick"), StTerm::app(StTerm::fun("succ"), StTerm::var("y"))),
            ),
        );
        let t = StTerm::app(
            StTerm::rec(interp_term(&Term::num(0)), step),
            interp_term(&Term::num(3)),
        );
        let (v, s) = run(&t, 10);
        assert_eq!(v, Value::NatV(3));
        assert_eq!(s, 13);
    }

    fn loop_term(cond: SF, start: u64) -> StTerm {
        // Body ticks and keeps the invariant value; exit returns the counter
        // argument it was handed; the zero continuation reads the state.
        let body = StTerm::lam(
            "x",
            StType::D,
            StTerm::lam("y", StType::C, star(StTerm::cnst("tick"), StTerm::var("y"))),
        );
        let exit = StTerm::lam(
            "x",
            StType::D,
            StTerm::lam(
                "y",
                StType::C,
                StTerm::comp(StTerm::var("x"), StTerm::var("y")),
            ),
        );
        let zero = StTerm::lam("y", StType::C, StTerm::cnst("get"));
        let w = StTerm::While {
            hole: Ident::new("z"),
            cond,
            r: Box::new(body),
            s: Box::new(exit),
            t: Box::new(zero),
            u: Box::new(interp_term(&Term::num(start))),
        };
        StTerm::app(w, StTerm::Skip)
    }

    #[test]
    fn loop_with_true_guard_counts_all_the_way_down() {
        let t = loop_term(SF::Top, 3);
        let (v, s) = run(&t, 0);
        // Three guarded iterations tick the state, then the zero continuation
        // reads it back.
        assert_eq!(s, 3);
        assert_eq!(v, Value::PairV(Box::new(Value::NatV(3)), Box::new(Value::UnitV)));
    }

    #[test]
    fn loop_with_false_guard_takes_the_exit_with_the_decremented_counter() {
        let t = loop_term(SF::Bot, 3);
        let (v, s) = run(&t, 0);
        assert_eq!(s, 0, "no iteration ran");
        // The exit continuation receives the counter predecessor.
        assert_eq!(v, Value::PairV(Box::new(Value::NatV(2)), Box::new(Value::UnitV)));
    }

    #[test]
    fn loop_at_zero_takes_the_zero_continuation_immediately() {
        let t = loop_term(SF::Top, 0);
        let (v, s) = run(&t, 9);
        assert_eq!(s, 9);
        assert_eq!(v, Value::PairV(Box::new(Value::NatV(9)), Box::new(Value::UnitV)));
    }

    #[test]
    fn default_values_inhabit_their_types() {
        let f = default_value(&StType::arrow(StType::D, StType::C), &Counter);
        let (v, s) = apply(&f, Value::NatV(42), 5, &Counter).unwrap();
        assert_eq!(v, Value::UnitV);
        assert_eq!(s, 5);
        assert_eq!(
            default_value(&StType::sum(StType::D, StType::C), &Counter),
            Value::SumV {
                flag: false,
                left: Box::new(Value::NatV(0)),
                right: Box::new(Value::UnitV),
            }
        );
    }

    #[test]
    fn realizability_trivial_goals() {
        let top = Triple::new(SF::Top, MainFormula::Top, SF::Top);
        let verdict = check_realizes(&StTerm::Skip, &top, &Counter, &Budget::default()).unwrap();
        assert!(verdict.passed());

        let unreachable_post =
            Triple::new(SF::Top, MainFormula::Top, SF::atom("at_least", vec![Term::num(100)]));
        match check_realizes(&StTerm::Skip, &unreachable_post, &Counter, &Budget::default())
            .unwrap()
        {
            Verdict::Fail(ce) => assert!(ce.detail.contains("postcondition")),
            other => panic!("expected a failure, got {other:?}"),
        }

        let unsatisfiable_pre =
            Triple::new(SF::atom("is", vec![Term::num(99)]), MainFormula::Top, SF::Top);
        match check_realizes(&StTerm::Skip, &unsatisfiable_pre, &Counter, &Budget::default())
            .unwrap()
        {
            Verdict::Inconclusive => {}
            other => panic!("expected inconclusive, got {other:?}"),
        }
    }

    #[test]
    fn realizability_quantifier_structure() {
        // fun x -> succ x o skip realizes "for every x there is a larger y".
        let goal = Triple::new(
            SF::Top,
            MainFormula::forall(
                "x",
                Triple::new(
                    SF::Top,
                    MainFormula::exists(
                        "y",
                        MainFormula::atom("le", vec![Term::var("x"), Term::var("y")]),
                    ),
                    SF::Top,
                ),
            ),
            SF::Top,
        );
        let good = StTerm::lam(
            "x",
            StType::D,
            StTerm::comp(StTerm::app(StTerm::fun("succ"), StTerm::var("x")), StTerm::Skip),
        );
        assert!(check_realizes(&good, &goal, &Counter, &Budget::default()).unwrap().passed());

        // A constant witness of 0 fails as soon as some x > 0 is sampled.
        let bad = StTerm::lam(
            "x",
            StType::D,
            StTerm::comp(interp_term(&Term::num(0)), StTerm::Skip),
        );
        match check_realizes(&bad, &goal, &Counter, &Budget::default()).unwrap() {
            Verdict::Fail(ce) => assert!(ce.detail.contains("le"), "detail: {}", ce.detail),
            other => panic!("expected a failure, got {other:?}"),
        }
    }

    #[test]
    fn disjunction_checks_the_flagged_side() {
        let goal = MainFormula::or(MainFormula::Top, MainFormula::Bot);
        let left = StTerm::inj0(StTerm::Skip, StType::C);
        assert!(check_realizes(&left, &goal, &Counter, &Budget::default()).unwrap().passed());
        let right = StTerm::inj1(StTerm::Skip, StType::C);
        assert!(!check_realizes(&right, &goal, &Counter, &Budget::default()).unwrap().passed());
    }

    #[test]
    fn currying_agreement_and_a_detectable_mismatch() {
        let t = StTerm::comp(StTerm::var("x"), StTerm::var("y"));
        let s = StTerm::comp(interp_term(&Term::num(5)), interp_term(&Term::num(7)));
        let verdict = currying_check(
            &t,
            (&Ident::new("x"), &StType::D),
            (&Ident::new("y"), &StType::D),
            &StType::prod(StType::D, StType::D),
            &s,
            &Counter,
            &Budget::default(),
        )
        .unwrap();
        assert!(verdict.agreed());

        // The comparator must notice when the components are fed in swapped:
        // a hand-built wrapper that projects in the wrong order disagrees.
        let wrong = StTerm::app(
            StTerm::lam(
                "v",
                StType::prod(StType::D, StType::D),
                StTerm::app(
                    StTerm::app(
                        StTerm::lam(
                            "x",
                            StType::D,
                            StTerm::lam("y", StType::D, t.clone()),
                        ),
                        StTerm::proj1(StTerm::var("v")),
                    ),
                    StTerm::proj0(StTerm::var("v")),
                ),
            ),
            s.clone(),
        );
        let (lhs, pi) = run(&wrong, 0);
        let (pair, pi1) = run(&s, 0);
        let (a, b) = match pair {
            Value::PairV(a, b) => (*a, *b),
            _ => unreachable!(),
        };
        let env = Env::new().bind(Ident::new("x"), a).bind(Ident::new("y"), b);
        let (rhs, _) = eval(&env, &t, pi1, &Counter).unwrap();
        assert!(!values_agree(&lhs, &rhs, &StType::prod(StType::D, StType::D), &pi, &Counter)
            .unwrap());
    }

    #[test]
    fn trace_records_constant_applications() {
        let t = StTerm::comp(
            StTerm::app(StTerm::cnst("put"), interp_term(&Term::num(4))),
            StTerm::cnst("get"),
        );
        let mut trace = Trace::new();
        let (_, s) = eval_traced(&Env::new(), &t, 0, &Counter, &mut trace).unwrap();
        assert_eq!(s, 4);
        let names: Vec<&str> =
            trace.events.iter().map(|e| e.constant.as_str()).collect();
        assert_eq!(names, ["put", "get"]);
        assert_eq!(trace.events[0].before, 0);
        assert_eq!(trace.events[0].after, 4);
        assert_eq!(trace.events[1].before, 4);
        assert_eq!(trace.events[1].after, 4);
    }

    #[test]
    fn embedding_prints_the_state_reading_of_a_triple() {
        let t = Triple::new(SF::atom("ready", vec![]), MainFormula::Top, SF::atom("ready", vec![]));
        assert_eq!(embed_triple(&t), "∃π. [ready](π) ⟹ ⊤ ∧ ∃π′. [ready](π′)");
        let f = MainFormula::and(
            MainFormula::atom("le", vec![Term::var("x"), Term::var("y")]),
            MainFormula::Top,
        );
        assert_eq!(embed_main_formula(&f), "le(x, y) ∧ ⊤");
    }

    #[test]
    fn evaluation_is_deterministic() {
        let t = loop_term(SF::atom("at_least", vec![Term::num(0)]), 3);
        let a = format!("{:?}", run(&t, 1));
        let b = format!("{:?}", run(&t, 1));
        assert_eq!(a, b);
    }
}
