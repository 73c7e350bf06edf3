//! Classical consequence for the state layer: decide whether a state formula
//! follows propositionally from hypotheses plus instances of the theory's
//! hypothesis-axiom schemas.
//!
//! Instances come from two sources: explicit hints `(schema, binding)` and
//! automatic matching of every schema against all tuples of terms occurring in
//! the sequent. Ground atoms are identified iff syntactically equal; the
//! decision itself is a complete search over assignments to the distinct atoms
//! (depth-first with three-valued evaluation, so the common shallow conflicts
//! prune early).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::syntax::{Ident, StateFormula, Term};

/// `hyps ⊢_H goal`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSequent {
    pub hyps: Vec<StateFormula>,
    pub goal: StateFormula,
}

impl StateSequent {
    pub fn new(hyps: Vec<StateFormula>, goal: StateFormula) -> StateSequent {
        StateSequent { hyps, goal }
    }

    /// The sequent as a single formula: `hyp₁ ∧ … ∧ hypₙ → goal` (just the
    /// goal when there are no hypotheses).
    pub fn implication(&self) -> StateFormula {
        match self.hyps.split_first() {
            None => self.goal.clone(),
            Some((first, rest)) => {
                let conj = rest
                    .iter()
                    .fold(first.clone(), |acc, h| StateFormula::and(acc, h.clone()));
                StateFormula::imp(conj, self.goal.clone())
            }
        }
    }

    pub fn subterms(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        for h in &self.hyps {
            h.subterms(&mut out);
        }
        self.goal.subterms(&mut out);
        out
    }
}

impl fmt::Display for StateSequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, h) in self.hyps.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{h}")?;
        }
        if !self.hyps.is_empty() {
            write!(f, " ")?;
        }
        write!(f, "|-H {}", self.goal)
    }
}

/// An axiom schema for the state layer: hypothesis patterns and a goal pattern
/// over term metavariables. Formula positions are fixed; only terms vary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HAxiomSchema {
    pub name: Ident,
    pub metavars: Vec<Ident>,
    pub hyps: Vec<StateFormula>,
    pub goal: StateFormula,
}

pub type Binding = BTreeMap<Ident, Term>;

/// Explicit schema instances to include alongside automatic matching.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HintSet {
    pub instances: Vec<(Ident, Binding)>,
}

impl HintSet {
    pub fn auto() -> HintSet {
        HintSet::default()
    }

    pub fn with(instances: Vec<(Ident, Binding)>) -> HintSet {
        HintSet { instances }
    }
}

/// Resource budgets for the consequence check. The atom limit bounds the
/// assignment search space; the instance cap bounds automatic matching.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckHConfig {
    pub atom_limit: usize,
    pub instance_cap: usize,
}

impl Default for CheckHConfig {
    fn default() -> Self {
        CheckHConfig { atom_limit: 24, instance_cap: 4096 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StateLogicError {
    #[error("unknown state axiom schema `{name}`")]
    UnknownSchema { name: Ident },
    #[error("schema `{schema}` declares metavariable `{var}` twice")]
    DuplicateMetavar { schema: Ident, var: Ident },
    #[error("schema `{schema}` uses free variable `{var}` that is not a declared metavariable")]
    UndeclaredVar { schema: Ident, var: Ident },
    #[error("instantiation of `{schema}` leaves metavariable `{var}` unbound")]
    UnboundMetavar { schema: Ident, var: Ident },
    #[error("instantiation of `{schema}` binds `{var}`, which is not one of its metavariables")]
    NotAMetavar { schema: Ident, var: Ident },
    #[error("state sequent involves {count} distinct atoms, exceeding the limit of {limit}")]
    AtomLimit { count: usize, limit: usize },
    #[error("automatic instantiation produced {count} instances, exceeding the cap of {cap}")]
    InstanceCap { count: usize, cap: usize },
    #[error("state sequent not derivable: {sequent}")]
    NotDerivable { sequent: String },
}

impl HAxiomSchema {
    /// Build a schema, checking that metavariables are distinct and that every
    /// free variable of the patterns is a declared metavariable.
    pub fn new(
        name: Ident,
        metavars: Vec<Ident>,
        hyps: Vec<StateFormula>,
        goal: StateFormula,
    ) -> Result<HAxiomSchema, StateLogicError> {
        let mut seen = BTreeSet::new();
        for m in &metavars {
            if !seen.insert(m.clone()) {
                return Err(StateLogicError::DuplicateMetavar {
                    schema: name,
                    var: m.clone(),
                });
            }
        }
        let mut free = BTreeSet::new();
        for h in &hyps {
            h.free_vars(&mut free);
        }
        goal.free_vars(&mut free);
        for v in free {
            if !seen.contains(&v) {
                return Err(StateLogicError::UndeclaredVar { schema: name, var: v });
            }
        }
        Ok(HAxiomSchema { name, metavars, hyps, goal })
    }
}

/// Replace a schema's metavariables according to `binding`. The binding must
/// cover the metavariables exactly.
pub fn instantiate_haxiom(
    schema: &HAxiomSchema,
    binding: &Binding,
) -> Result<StateSequent, StateLogicError> {
    for m in &schema.metavars {
        if !binding.contains_key(m) {
            return Err(StateLogicError::UnboundMetavar {
                schema: schema.name.clone(),
                var: m.clone(),
            });
        }
    }
    for k in binding.keys() {
        if !schema.metavars.contains(k) {
            return Err(StateLogicError::NotAMetavar {
                schema: schema.name.clone(),
                var: k.clone(),
            });
        }
    }
    let apply = |a: &StateFormula| {
        binding.iter().fold(a.clone(), |acc, (x, t)| acc.subst(x, t))
    };
    Ok(StateSequent {
        hyps: schema.hyps.iter().map(apply).collect(),
        goal: apply(&schema.goal),
    })
}

fn lookup_schema<'a>(
    axioms: &'a [HAxiomSchema],
    name: &Ident,
) -> Result<&'a HAxiomSchema, StateLogicError> {
    axioms
        .iter()
        .find(|s| &s.name == name)
        .ok_or_else(|| StateLogicError::UnknownSchema { name: name.clone() })
}

/// All instances of `axioms` relevant to `seq`: hinted ones plus every binding
/// of each schema's metavariables to terms occurring in the sequent.
fn gather_instances(
    seq: &StateSequent,
    axioms: &[HAxiomSchema],
    hints: &HintSet,
    config: &CheckHConfig,
) -> Result<Vec<StateFormula>, StateLogicError> {
    let mut formulas: BTreeSet<StateFormula> = BTreeSet::new();

    for (name, binding) in &hints.instances {
        let schema = lookup_schema(axioms, name)?;
        formulas.insert(instantiate_haxiom(schema, binding)?.implication());
    }

    let pool: Vec<Term> = seq.subterms().into_iter().collect();
    let mut count = 0usize;
    for schema in axioms {
        let k = schema.metavars.len();
        if k > 0 && pool.is_empty() {
            continue;
        }
        // Iterate over pool^k via a positional odometer.
        let mut indices = vec![0usize; k];
        loop {
            count += 1;
            if count > config.instance_cap {
                return Err(StateLogicError::InstanceCap {
                    count,
                    cap: config.instance_cap,
                });
            }
            let binding: Binding = schema
                .metavars
                .iter()
                .cloned()
                .zip(indices.iter().map(|&i| pool[i].clone()))
                .collect();
            formulas.insert(instantiate_haxiom(schema, &binding)?.implication());

            // Advance the odometer; for k = 0 there is exactly one instance.
            let mut pos = 0;
            loop {
                if pos == k {
                    break;
                }
                indices[pos] += 1;
                if indices[pos] < pool.len() {
                    break;
                }
                indices[pos] = 0;
                pos += 1;
            }
            if pos == k {
                break;
            }
        }
    }
    Ok(formulas.into_iter().collect())
}

/// Compiled propositional formula over atom indices.
enum PExpr {
    T,
    F,
    A(usize),
    And(Box<PExpr>, Box<PExpr>),
    Or(Box<PExpr>, Box<PExpr>),
    Imp(Box<PExpr>, Box<PExpr>),
}

fn compile(a: &StateFormula, atoms: &mut BTreeMap<StateFormula, usize>) -> PExpr {
    match a {
        StateFormula::Top => PExpr::T,
        StateFormula::Bot => PExpr::F,
        StateFormula::Atom { .. } => {
            let next = atoms.len();
            let idx = *atoms.entry(a.clone()).or_insert(next);
            PExpr::A(idx)
        }
        StateFormula::And { lhs, rhs } => {
            PExpr::And(Box::new(compile(lhs, atoms)), Box::new(compile(rhs, atoms)))
        }
        StateFormula::Or { lhs, rhs } => {
            PExpr::Or(Box::new(compile(lhs, atoms)), Box::new(compile(rhs, atoms)))
        }
        StateFormula::Imp { lhs, rhs } => {
            PExpr::Imp(Box::new(compile(lhs, atoms)), Box::new(compile(rhs, atoms)))
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BVal {
    True,
    False,
    Unknown,
}

/// Three-valued (Kleene) evaluation under a partial assignment.
fn peval(e: &PExpr, assign: &[BVal]) -> BVal {
    match e {
        PExpr::T => BVal::True,
        PExpr::F => BVal::False,
        PExpr::A(i) => assign[*i],
        PExpr::And(l, r) => match (peval(l, assign), peval(r, assign)) {
            (BVal::False, _) | (_, BVal::False) => BVal::False,
            (BVal::True, BVal::True) => BVal::True,
            _ => BVal::Unknown,
        },
        PExpr::Or(l, r) => match (peval(l, assign), peval(r, assign)) {
            (BVal::True, _) | (_, BVal::True) => BVal::True,
            (BVal::False, BVal::False) => BVal::False,
            _ => BVal::Unknown,
        },
        PExpr::Imp(l, r) => match (peval(l, assign), peval(r, assign)) {
            (BVal::False, _) | (_, BVal::True) => BVal::True,
            (BVal::True, BVal::False) => BVal::False,
            _ => BVal::Unknown,
        },
    }
}

/// Does an assignment exist making every constraint true? Depth-first split on
/// the first atom that is still unknown in some undetermined constraint.
fn satisfiable(constraints: &[PExpr], assign: &mut Vec<BVal>) -> bool {
    let mut branch_atom = None;
    for c in constraints {
        match peval(c, assign) {
            BVal::False => return false,
            BVal::True => {}
            BVal::Unknown => {
                if branch_atom.is_none() {
                    branch_atom = first_unknown(c, assign);
                }
            }
        }
    }
    let Some(i) = branch_atom else {
        // Every constraint already evaluates true.
        return true;
    };
    for v in [BVal::True, BVal::False] {
        assign[i] = v;
        if satisfiable(constraints, assign) {
            return true;
        }
    }
    assign[i] = BVal::Unknown;
    false
}

fn first_unknown(e: &PExpr, assign: &[BVal]) -> Option<usize> {
    match e {
        PExpr::T | PExpr::F => None,
        PExpr::A(i) => (assign[*i] == BVal::Unknown).then_some(*i),
        PExpr::And(l, r) | PExpr::Or(l, r) | PExpr::Imp(l, r) => {
            first_unknown(l, assign).or_else(|| first_unknown(r, assign))
        }
    }
}

/// Is `seq.goal` a classical propositional consequence of `seq.hyps` plus the
/// axiom instances from `hints` and automatic matching?
pub fn check_h(
    seq: &StateSequent,
    axioms: &[HAxiomSchema],
    hints: &HintSet,
    config: &CheckHConfig,
) -> Result<bool, StateLogicError> {
    let instances = gather_instances(seq, axioms, hints, config)?;

    let mut atoms = BTreeMap::new();
    let mut constraints: Vec<PExpr> = Vec::new();
    for h in seq.hyps.iter().chain(instances.iter()) {
        constraints.push(compile(h, &mut atoms));
    }
    // Search for a countermodel: all hypotheses and instances true, goal false.
    let goal = compile(&seq.goal, &mut atoms);
    constraints.push(PExpr::Imp(Box::new(goal), Box::new(PExpr::F)));

    if atoms.len() > config.atom_limit {
        return Err(StateLogicError::AtomLimit {
            count: atoms.len(),
            limit: config.atom_limit,
        });
    }

    let mut assign = vec![BVal::Unknown; atoms.len()];
    Ok(!satisfiable(&constraints, &mut assign))
}

/// As [`check_h`], but an underivable sequent is an error carrying its display
/// form (this is what the kernel's cons/cond obligations use).
pub fn check_h_or_fail(
    seq: &StateSequent,
    axioms: &[HAxiomSchema],
    hints: &HintSet,
    config: &CheckHConfig,
) -> Result<(), StateLogicError> {
    if check_h(seq, axioms, hints, config)? {
        Ok(())
    } else {
        Err(StateLogicError::NotDerivable { sequent: seq.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::StateFormula as SF;

    fn atom(p: &str) -> SF {
        SF::atom(p, vec![])
    }

    fn le(a: u64, b: u64) -> SF {
        SF::atom("le", vec![Term::num(a), Term::num(b)])
    }

    fn cfg() -> CheckHConfig {
        CheckHConfig::default()
    }

    #[test]
    fn excluded_middle_holds_without_axioms() {
        let p = SF::atom("p", vec![Term::var("x")]);
        let seq = StateSequent::new(vec![], SF::or(p.clone(), SF::neg(p)));
        assert_eq!(check_h(&seq, &[], &HintSet::auto(), &cfg()), Ok(true));
    }

    #[test]
    fn atoms_are_identified_syntactically() {
        // p(x) and p(y) are different atoms, so p(x) does not give p(y)...
        let seq = StateSequent::new(
            vec![SF::atom("p", vec![Term::var("x")])],
            SF::atom("p", vec![Term::var("y")]),
        );
        assert_eq!(check_h(&seq, &[], &HintSet::auto(), &cfg()), Ok(false));
        // ...but a numeral is the same atom however it was built.
        let seq = StateSequent::new(
            vec![SF::atom("p", vec![Term::num(2)])],
            SF::atom("p", vec![Term::app("succ", vec![Term::num(1)])]),
        );
        assert_eq!(check_h(&seq, &[], &HintSet::auto(), &cfg()), Ok(true));
    }

    #[test]
    fn modus_ponens_and_contrapositive() {
        let seq = StateSequent::new(
            vec![SF::imp(atom("a"), atom("b")), atom("a")],
            atom("b"),
        );
        assert_eq!(check_h(&seq, &[], &HintSet::auto(), &cfg()), Ok(true));
        let seq = StateSequent::new(
            vec![SF::imp(atom("a"), atom("b")), SF::neg(atom("b"))],
            SF::neg(atom("a")),
        );
        assert_eq!(check_h(&seq, &[], &HintSet::auto(), &cfg()), Ok(true));
        let seq = StateSequent::new(vec![atom("b")], atom("a"));
        assert_eq!(check_h(&seq, &[], &HintSet::auto(), &cfg()), Ok(false));
    }

    fn totality() -> HAxiomSchema {
        HAxiomSchema::new(
            Ident::new("tot"),
            vec![Ident::new("l"), Ident::new("l2")],
            vec![],
            SF::or(
                SF::atom("le", vec![Term::var("l"), Term::var("l2")]),
                SF::atom("le", vec![Term::var("l2"), Term::var("l")]),
            ),
        )
        .unwrap()
    }

    fn sortedness() -> HAxiomSchema {
        HAxiomSchema::new(
            Ident::new("sortedness"),
            vec![],
            vec![SF::and(le(1, 2), le(2, 3))],
            atom("sorted"),
        )
        .unwrap()
    }

    #[test]
    fn instantiate_replaces_metavars() {
        let binding: Binding = [
            (Ident::new("l"), Term::num(1)),
            (Ident::new("l2"), Term::num(2)),
        ]
        .into_iter()
        .collect();
        let inst = instantiate_haxiom(&totality(), &binding).unwrap();
        assert_eq!(inst.goal, SF::or(le(1, 2), le(2, 1)));
        assert!(inst.hyps.is_empty());
    }

    #[test]
    fn instantiate_rejects_bad_bindings() {
        let partial: Binding = [(Ident::new("l"), Term::num(1))].into_iter().collect();
        assert!(matches!(
            instantiate_haxiom(&totality(), &partial),
            Err(StateLogicError::UnboundMetavar { .. })
        ));
        let extra: Binding = [
            (Ident::new("l"), Term::num(1)),
            (Ident::new("l2"), Term::num(2)),
            (Ident::new("zz"), Term::num(3)),
        ]
        .into_iter()
        .collect();
        assert!(matches!(
            instantiate_haxiom(&totality(), &extra),
            Err(StateLogicError::NotAMetavar { .. })
        ));
    }

    #[test]
    fn schema_validation() {
        // Free variable not declared as metavariable.
        let bad = HAxiomSchema::new(
            Ident::new("bad"),
            vec![],
            vec![],
            SF::atom("p", vec![Term::var("x")]),
        );
        assert!(matches!(bad, Err(StateLogicError::UndeclaredVar { .. })));
        let dup = HAxiomSchema::new(
            Ident::new("dup"),
            vec![Ident::new("x"), Ident::new("x")],
            vec![],
            SF::Top,
        );
        assert!(matches!(dup, Err(StateLogicError::DuplicateMetavar { .. })));
    }

    #[test]
    fn sortedness_discharges_sorted_goal() {
        // {le(2,3), le(1,2), le(1,3)} |-H sorted, via the closed sortedness axiom.
        let seq = StateSequent::new(vec![le(2, 3), le(1, 2), le(1, 3)], atom("sorted"));
        assert_eq!(check_h(&seq, &[sortedness()], &HintSet::auto(), &cfg()), Ok(true));
        // Without the axiom it is not a consequence.
        assert_eq!(check_h(&seq, &[], &HintSet::auto(), &cfg()), Ok(false));
    }

    #[test]
    fn totality_discharges_disjunction_automatically() {
        // |-H le(2,1) \/ le(1,2): the goal's own terms feed the matcher.
        let seq = StateSequent::new(vec![], SF::or(le(2, 1), le(1, 2)));
        assert_eq!(check_h(&seq, &[totality()], &HintSet::auto(), &cfg()), Ok(true));
    }

    #[test]
    fn hints_supply_instances_beyond_the_sequent() {
        // |-H sorted alone mentions no terms, so totality cannot fire on its
        // own; the sortedness hypotheses must come from somewhere else. This
        // is underivable even with hints...
        let seq = StateSequent::new(vec![], atom("sorted"));
        assert_eq!(
            check_h(&seq, &[sortedness(), totality()], &HintSet::auto(), &cfg()),
            Ok(false)
        );
        // ...but hyps le(1,2), le(2,3) with the hinted instance work even
        // though the goal mentions neither term.
        let seq = StateSequent::new(vec![le(1, 2), le(2, 3)], atom("sorted"));
        let hints = HintSet::with(vec![(Ident::new("sortedness"), Binding::new())]);
        assert_eq!(check_h(&seq, &[sortedness()], &hints, &cfg()), Ok(true));
    }

    #[test]
    fn atom_limit_is_a_resource_error() {
        let hyps: Vec<SF> = (0..30).map(|i| SF::atom(format!("p{i}").as_str(), vec![])).collect();
        let seq = StateSequent::new(hyps, atom("q"));
        assert!(matches!(
            check_h(&seq, &[], &HintSet::auto(), &cfg()),
            Err(StateLogicError::AtomLimit { count: 31, limit: 24 })
        ));
        let roomy = CheckHConfig { atom_limit: 64, ..cfg() };
        assert_eq!(check_h(&seq, &[], &HintSet::auto(), &roomy), Ok(false));
    }

    #[test]
    fn or_fail_carries_the_sequent() {
        let seq = StateSequent::new(vec![], atom("sorted"));
        let err = check_h_or_fail(&seq, &[], &HintSet::auto(), &cfg()).unwrap_err();
        assert_eq!(
            err,
            StateLogicError::NotDerivable { sequent: "|-H sorted".into() }
        );
    }

    #[test]
    fn insertion_sort_style_obligations() {
        // Axioms over comp/psort/sort with term metavariables.
        let n = || Term::var("n");
        let nn = || Term::var("N");
        let s = |t: Term| Term::app("succ", vec![t]);
        let ax1 = HAxiomSchema::new(
            Ident::new("ax1"),
            vec![Ident::new("N")],
            vec![SF::atom("sort", vec![nn()])],
            SF::atom("psort", vec![s(nn()), s(nn())]),
        )
        .unwrap();
        let ax2 = HAxiomSchema::new(
            Ident::new("ax2"),
            vec![Ident::new("n"), Ident::new("N")],
            vec![SF::neg(SF::atom("comp", vec![n()])), SF::atom("psort", vec![n(), nn()])],
            SF::atom("sort", vec![nn()]),
        )
        .unwrap();
        let ax3 = HAxiomSchema::new(
            Ident::new("ax3"),
            vec![Ident::new("N")],
            vec![SF::atom("psort", vec![Term::num(0), nn()])],
            SF::atom("sort", vec![nn()]),
        )
        .unwrap();
        let ax4 =
            HAxiomSchema::new(Ident::new("ax4"), vec![], vec![], SF::atom("sort", vec![Term::num(0)]))
                .unwrap();
        let axioms = [ax1, ax2, ax3, ax4];
        let roomy = CheckHConfig { atom_limit: 64, ..cfg() };

        // {¬comp(succ n) ∧ psort(succ n, succ N)} |-H sort(succ N)
        let seq = StateSequent::new(
            vec![SF::and(
                SF::neg(SF::atom("comp", vec![s(n())])),
                SF::atom("psort", vec![s(n()), s(nn())]),
            )],
            SF::atom("sort", vec![s(nn())]),
        );
        assert_eq!(check_h(&seq, &axioms, &HintSet::auto(), &roomy), Ok(true));

        // {psort(0, succ N)} |-H sort(succ N)
        let seq = StateSequent::new(
            vec![SF::atom("psort", vec![Term::num(0), s(nn())])],
            SF::atom("sort", vec![s(nn())]),
        );
        assert_eq!(check_h(&seq, &axioms, &HintSet::auto(), &roomy), Ok(true));

        // {sort(N)} |-H psort(succ N, succ N)
        let seq = StateSequent::new(
            vec![SF::atom("sort", vec![nn()])],
            SF::atom("psort", vec![s(nn()), s(nn())]),
        );
        assert_eq!(check_h(&seq, &axioms, &HintSet::auto(), &roomy), Ok(true));

        // |-H sort(0)
        let seq = StateSequent::new(vec![], SF::atom("sort", vec![Term::num(0)]));
        assert_eq!(check_h(&seq, &axioms, &HintSet::auto(), &roomy), Ok(true));
    }
}
