//! Three-slot array state: locations `1`, `2`, `3` name the slots, the binary
//! atom `le(l, l')` compares their contents, and the only actions are the
//! three pairwise swaps.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kernel::{FormulaShape, PostSwap, RealizerSpec, SAxiomSchema, Theory};
use crate::statelogic::HAxiomSchema;
use crate::semantics::{EvalError, StateModel, Value};
use crate::stlang::StType;
use crate::syntax::{Ident, MainFormula, Mode, StateFormula, Term};

/// Exactly three naturals; serializes as a plain JSON array.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Swap3State(pub [u64; 3]);

#[derive(Clone, Copy, Debug, Default)]
pub struct Swap3;

/// The three location terms, as the nullary symbols `1`, `2`, `3`.
pub fn locations() -> Vec<Term> {
    vec![Term::app("1", vec![]), Term::app("2", vec![]), Term::app("3", vec![])]
}

fn slot(loc: u64) -> Option<usize> {
    match loc {
        1..=3 => Some(loc as usize - 1),
        _ => None,
    }
}

impl StateModel for Swap3 {
    type State = Swap3State;

    fn name(&self) -> &str {
        "swap3"
    }

    /// `0` would fall outside the location range, so the designated
    /// individual is the first location.
    fn canonical_d(&self) -> u64 {
        1
    }

    fn fun_arity(&self, name: &Ident) -> Option<usize> {
        matches!(name.as_str(), "1" | "2" | "3").then_some(0)
    }

    fn interp_fun(&self, name: &Ident, args: &[u64]) -> Option<u64> {
        if !args.is_empty() {
            return None;
        }
        match name.as_str() {
            "1" => Some(1),
            "2" => Some(2),
            "3" => Some(3),
            _ => None,
        }
    }

    fn eval_state_atom(&self, p: &Ident, args: &[u64], state: &Self::State) -> Option<bool> {
        match (p.as_str(), args) {
            ("le", [l, l2]) => Some(state.0[slot(*l)?] <= state.0[slot(*l2)?]),
            ("sorted", []) => Some(state.0[0] <= state.0[1] && state.0[1] <= state.0[2]),
            _ => None,
        }
    }

    fn eval_main_atom(&self, _p: &Ident, _args: &[u64]) -> Option<bool> {
        None
    }

    fn const_type(&self, name: &Ident) -> Option<StType> {
        matches!(name.as_str(), "swap_1_2" | "swap_1_3" | "swap_2_3").then_some(StType::C)
    }

    fn apply_const(
        &self,
        name: &Ident,
        args: &[Value],
        state: &Self::State,
    ) -> Result<(Value, Self::State), EvalError> {
        let (i, j) = match name.as_str() {
            "swap_1_2" => (0, 1),
            "swap_1_3" => (0, 2),
            "swap_2_3" => (1, 2),
            _ => return Err(EvalError::UnknownConst { name: name.clone() }),
        };
        if !args.is_empty() {
            return Err(EvalError::ConstArgs {
                name: name.clone(),
                detail: "takes no arguments".to_string(),
            });
        }
        let mut next = state.clone();
        next.0.swap(i, j);
        Ok((Value::UnitV, next))
    }

    fn sample_states(&self, seed: u64, count: usize) -> Vec<Self::State> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| Swap3State([rng.gen_range(0..4), rng.gen_range(0..4), rng.gen_range(0..4)]))
            .collect()
    }
}

/// All 27 states over slot values `{0, 1, 2}`, for exhaustive suites.
pub fn all_small_states() -> Vec<Swap3State> {
    let mut out = Vec::with_capacity(27);
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                out.push(Swap3State([a, b, c]));
            }
        }
    }
    out
}

/// The three-slot sorting theory: ordering atoms with a sortedness criterion
/// and pairwise totality, plus the swap action over conjunctions of ordering
/// atoms.
pub fn theory() -> Theory {
    let mut th = Theory::new("sort3", Mode::Sl);
    th.model = Some(Ident::new("swap3"));
    for l in ["1", "2", "3"] {
        th.sig.declare_fun(Ident::new(l), 0).unwrap();
    }
    th.sig.declare_state_pred(Ident::new("le"), 2).unwrap();
    th.sig.declare_state_pred(Ident::new("sorted"), 0).unwrap();
    for name in ["swap_1_2", "swap_1_3", "swap_2_3"] {
        th.consts.declare(Ident::new(name), StType::C).unwrap();
    }
    let locs = locations();
    th.add_haxiom(HAxiomSchema {
        name: Ident::new("sortedness"),
        metavars: vec![],
        hyps: vec![
            StateFormula::atom("le", vec![locs[0].clone(), locs[1].clone()]),
            StateFormula::atom("le", vec![locs[1].clone(), locs[2].clone()]),
        ],
        goal: StateFormula::atom("sorted", vec![]),
    })
    .unwrap();
    // Pairwise totality, one instance per unordered location pair. The
    // diagonal instances are propositionally trivial and never needed.
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        th.add_haxiom(HAxiomSchema {
            name: Ident::new(&format!("total_{}_{}", a + 1, b + 1)),
            metavars: vec![],
            hyps: vec![],
            goal: StateFormula::or(
                StateFormula::atom("le", vec![locs[a].clone(), locs[b].clone()]),
                StateFormula::atom("le", vec![locs[b].clone(), locs[a].clone()]),
            ),
        })
        .unwrap();
    }
    th.add_saxiom(SAxiomSchema {
        name: Ident::new("swap"),
        term_metavars: vec![Ident::new("l"), Ident::new("l2")],
        formula_metavars: vec![Ident::new("A")],
        formula_shape: FormulaShape::ConjAtoms { pred: Ident::new("le"), locations: locs.clone() },
        hyps: vec![],
        pre: StateFormula::atom("A", vec![]),
        body: MainFormula::Top,
        post: StateFormula::atom("A", vec![]),
        post_swap: Some(PostSwap { l: Ident::new("l"), l2: Ident::new("l2"), locations: locs }),
        realizer: RealizerSpec::SwapConst,
    })
    .unwrap();
    th
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::instantiate_saxiom;
    use crate::semantics::{check_realizes, Budget, Verdict};
    use std::collections::BTreeMap;

    fn le(a: &Term, b: &Term) -> StateFormula {
        StateFormula::atom("le", vec![a.clone(), b.clone()])
    }

    #[test]
    fn swaps_exchange_their_slots_and_are_involutions() {
        let m = Swap3;
        let st = Swap3State([3, 1, 2]);
        let (_, once) = m.apply_const(&Ident::new("swap_1_2"), &[], &st).unwrap();
        assert_eq!(once, Swap3State([1, 3, 2]));
        let (_, twice) = m.apply_const(&Ident::new("swap_1_2"), &[], &once).unwrap();
        assert_eq!(twice, st);
    }

    #[test]
    fn ordering_atoms_read_the_slots() {
        let m = Swap3;
        let st = Swap3State([2, 1, 1]);
        assert_eq!(m.eval_state_atom(&Ident::new("le"), &[1, 2], &st), Some(false));
        assert_eq!(m.eval_state_atom(&Ident::new("le"), &[2, 3], &st), Some(true));
        assert_eq!(m.eval_state_atom(&Ident::new("le"), &[0, 2], &st), None);
        assert_eq!(m.eval_state_atom(&Ident::new("sorted"), &[], &st), Some(false));
        assert_eq!(
            m.eval_state_atom(&Ident::new("sorted"), &[], &Swap3State([1, 1, 2])),
            Some(true)
        );
    }

    #[test]
    fn swap_schema_computes_the_occurrence_swap() {
        // The worked instance: A = 3<=2 /\ 1<=2 /\ 1<=3 swapped at 2,3
        // becomes 2<=3 /\ 1<=3 /\ 1<=2.
        let th = theory();
        let locs = locations();
        let a = StateFormula::and(
            StateFormula::and(le(&locs[2], &locs[1]), le(&locs[0], &locs[1])),
            le(&locs[0], &locs[2]),
        );
        let mut terms = BTreeMap::new();
        terms.insert(Ident::new("l"), locs[1].clone());
        terms.insert(Ident::new("l2"), locs[2].clone());
        let mut formulas = BTreeMap::new();
        formulas.insert(Ident::new("A"), a);
        let schema = th.saxiom(&Ident::new("swap")).unwrap();
        let inst = instantiate_saxiom(schema, &terms, &formulas, &th.sig).unwrap();
        let want = StateFormula::and(
            StateFormula::and(le(&locs[1], &locs[2]), le(&locs[0], &locs[2])),
            le(&locs[0], &locs[1]),
        );
        assert_eq!(inst.triple.post, want);
        assert_eq!(format!("{}", inst.realizer), "swap_2_3");
    }

    #[test]
    fn swap_schema_rejects_non_conjunctive_shapes() {
        let th = theory();
        let locs = locations();
        let mut terms = BTreeMap::new();
        terms.insert(Ident::new("l"), locs[0].clone());
        terms.insert(Ident::new("l2"), locs[1].clone());
        let mut formulas = BTreeMap::new();
        formulas.insert(
            Ident::new("A"),
            StateFormula::or(le(&locs[0], &locs[1]), le(&locs[1], &locs[0])),
        );
        let schema = th.saxiom(&Ident::new("swap")).unwrap();
        assert!(instantiate_saxiom(schema, &terms, &formulas, &th.sig).is_err());
        // Locations outside {1,2,3} are rejected too.
        let mut bad_terms = BTreeMap::new();
        bad_terms.insert(Ident::new("l"), Term::var("x"));
        bad_terms.insert(Ident::new("l2"), locs[1].clone());
        let mut fs = BTreeMap::new();
        fs.insert(Ident::new("A"), le(&locs[0], &locs[1]));
        assert!(instantiate_saxiom(schema, &bad_terms, &fs, &th.sig).is_err());
    }

    #[test]
    fn swap_realizer_passes_the_harness_on_an_instance() {
        let th = theory();
        let locs = locations();
        let mut terms = BTreeMap::new();
        terms.insert(Ident::new("l"), locs[1].clone());
        terms.insert(Ident::new("l2"), locs[2].clone());
        let mut formulas = BTreeMap::new();
        formulas.insert(Ident::new("A"), le(&locs[1], &locs[0]));
        let schema = th.saxiom(&Ident::new("swap")).unwrap();
        let inst = instantiate_saxiom(schema, &terms, &formulas, &th.sig).unwrap();
        let verdict = check_realizes(&inst.realizer, &inst.triple, &Swap3, &Budget::default())
            .unwrap();
        assert!(verdict.passed(), "{verdict:?}");
    }

    #[test]
    fn totality_axioms_hold_on_every_sampled_state() {
        let m = Swap3;
        for st in m.sample_states(11, 200) {
            for (a, b) in [(1u64, 2u64), (1, 3), (2, 3)] {
                let le_ab = m.eval_state_atom(&Ident::new("le"), &[a, b], &st).unwrap();
                let le_ba = m.eval_state_atom(&Ident::new("le"), &[b, a], &st).unwrap();
                assert!(le_ab || le_ba);
            }
        }
    }

    #[test]
    fn a_misordered_swap_claim_fails_the_harness() {
        // swap_1_2 does not realize the identity triple <le(1,2)> T <le(1,2)>
        // in general: starting from [1,2,x] the swap breaks the ordering.
        let locs = locations();
        let triple = crate::syntax::Triple::new(
            le(&locs[0], &locs[1]),
            MainFormula::Top,
            le(&locs[0], &locs[1]),
        );
        let verdict = check_realizes(
            &crate::stlang::StTerm::cnst("swap_1_2"),
            &triple,
            &Swap3,
            &Budget::default(),
        )
        .unwrap();
        assert!(matches!(verdict, Verdict::Fail(_)), "{verdict:?}");
    }

    #[test]
    fn state_serializes_as_a_plain_array() {
        let st = Swap3State([3, 1, 2]);
        assert_eq!(serde_json::to_string(&st).unwrap(), "[3,1,2]");
        let back: Swap3State = serde_json::from_str("[3,1,2]").unwrap();
        assert_eq!(back, st);
    }
}
