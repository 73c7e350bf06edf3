//! Fixed-capacity array state for the insertion-sort development. The atoms
//! describe sortedness of prefixes (`sort`), sortedness with one element
//! factored out (`psort`), and the loop guard comparing a cell with its left
//! neighbour (`comp`); the single action swaps a cell with its right
//! neighbour.
//!
//! The development itself treats the array as unbounded; here it has a fixed
//! capacity `M` and every index is clamped to the last cell, so all atoms and
//! actions stay total. Callers that keep their indices below `M` never see
//! the clamping.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kernel::{DefEquation, FormulaShape, RealizerSpec, SAxiomSchema, Theory};
use crate::statelogic::HAxiomSchema;
use crate::semantics::{EvalError, StateModel, Value};
use crate::stlang::{StTerm, StType};
use crate::syntax::{Ident, MainFormula, Mode, StateFormula, Term};

/// The cells; serializes as a plain JSON array.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InsertSortState(pub Vec<u64>);

#[derive(Clone, Copy, Debug)]
pub struct InsertSort {
    m: usize,
}

pub const DEFAULT_CELLS: usize = 16;

impl InsertSort {
    /// A model over arrays of `m` cells. `m` must be at least 1.
    pub fn new(m: usize) -> InsertSort {
        assert!(m >= 1, "the array needs at least one cell");
        InsertSort { m }
    }

    pub fn cells(&self) -> usize {
        self.m
    }

    fn cell(&self, state: &InsertSortState, i: u64) -> u64 {
        let idx = (i as usize).min(self.m - 1);
        state.0.get(idx).copied().unwrap_or(0)
    }

    /// `cells[0..=end]` nondecreasing, reads clamped to the last cell.
    fn sorted_upto(&self, state: &InsertSortState, end: u64) -> bool {
        let e = end.min((self.m - 1) as u64);
        (0..e).all(|i| self.cell(state, i) <= self.cell(state, i + 1))
    }

    /// `cells[0..=end]` with index `gone` removed, nondecreasing. Iteration
    /// stops one past the clamp point: beyond it the sequence repeats the
    /// last cell and cannot introduce a descent.
    fn sorted_without(&self, state: &InsertSortState, gone: u64, end: u64) -> bool {
        let e = end.min(self.m as u64);
        let mut prev: Option<u64> = None;
        for i in 0..=e {
            if i == gone {
                continue;
            }
            let v = self.cell(state, i);
            if prev.is_some_and(|p| p > v) {
                return false;
            }
            prev = Some(v);
        }
        true
    }

    fn psort(&self, state: &InsertSortState, n: u64, cap: u64) -> bool {
        match n.cmp(&cap) {
            // The element at n is still in flight: everything else up to cap
            // is in order and n sits below its right neighbour.
            std::cmp::Ordering::Less => {
                self.sorted_without(state, n, cap) && self.cell(state, n) <= self.cell(state, n + 1)
            }
            // n = cap: the strict prefix is in order.
            std::cmp::Ordering::Equal => cap == 0 || self.sorted_upto(state, cap - 1),
            // n past cap: nothing is in flight.
            std::cmp::Ordering::Greater => self.sorted_upto(state, cap),
        }
    }
}

impl Default for InsertSort {
    fn default() -> Self {
        InsertSort::new(DEFAULT_CELLS)
    }
}

impl StateModel for InsertSort {
    type State = InsertSortState;

    fn name(&self) -> &str {
        "insertsort"
    }

    fn fun_arity(&self, name: &Ident) -> Option<usize> {
        matches!(name.as_str(), "plus" | "mult").then_some(2)
    }

    fn interp_fun(&self, name: &Ident, args: &[u64]) -> Option<u64> {
        match (name.as_str(), args) {
            ("plus", [a, b]) => Some(a.saturating_add(*b)),
            ("mult", [a, b]) => Some(a.saturating_mul(*b)),
            _ => None,
        }
    }

    fn eval_state_atom(&self, p: &Ident, args: &[u64], state: &Self::State) -> Option<bool> {
        match (p.as_str(), args) {
            ("sort", [n]) => Some(self.sorted_upto(state, *n)),
            ("psort", [n, cap]) => Some(self.psort(state, *n, *cap)),
            ("comp", [n]) => {
                Some(*n == 0 || self.cell(state, *n) <= self.cell(state, *n - 1))
            }
            _ => None,
        }
    }

    fn eval_main_atom(&self, _p: &Ident, _args: &[u64]) -> Option<bool> {
        None
    }

    fn const_type(&self, name: &Ident) -> Option<StType> {
        (name.as_str() == "swap").then(|| StType::arrow(StType::D, StType::C))
    }

    fn apply_const(
        &self,
        name: &Ident,
        args: &[Value],
        state: &Self::State,
    ) -> Result<(Value, Self::State), EvalError> {
        match (name.as_str(), args) {
            ("swap", [Value::NatV(n)]) => {
                let i = *n as usize;
                let mut next = state.clone();
                // Make sure the cells being exchanged exist even if the
                // caller handed us a short array.
                if i + 1 < self.m {
                    if next.0.len() < i + 2 {
                        next.0.resize(i + 2, 0);
                    }
                    next.0.swap(i, i + 1);
                }
                Ok((Value::UnitV, next))
            }
            ("swap", _) => Err(EvalError::ConstArgs {
                name: name.clone(),
                detail: "expected one individual argument".to_string(),
            }),
            _ => Err(EvalError::UnknownConst { name: name.clone() }),
        }
    }

    /// Three interleaved shapes: fully random arrays, arrays with a sorted
    /// random-length prefix, and "insertion in flight" arrays — sorted except
    /// for one cell that undercuts its left neighbour, the cell index
    /// rotating deterministically. The last shape guarantees that the swap
    /// axiom's precondition is represented at every position within any
    /// window of `3 * (M - 2)` states.
    fn sample_states(&self, seed: u64, count: usize) -> Vec<Self::State> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|k| {
                let mut cells: Vec<u64> = (0..self.m).map(|_| rng.gen_range(0..16)).collect();
                match k % 3 {
                    0 => {}
                    1 => {
                        let prefix = rng.gen_range(0..=self.m);
                        cells[..prefix].sort_unstable();
                    }
                    _ => {
                        cells.sort_unstable();
                        if self.m >= 3 {
                            let j = 1 + (k / 3) % (self.m - 2);
                            let bound = cells[j - 1].min(cells[j + 1]);
                            cells[j] = rng.gen_range(0..=bound);
                        }
                    }
                }
                InsertSortState(cells)
            })
            .collect()
    }
}

fn num(n: u64) -> Term {
    Term::num(n)
}

fn succ(t: Term) -> Term {
    Term::app("succ", vec![t])
}

/// The arithmetic sorting theory: prefix-sortedness atoms, the four
/// state-independent facts connecting them, and the neighbour-swap action
/// that repairs a `psort` violation one step at a time.
pub fn theory() -> Theory {
    let mut th = Theory::new("insertion_sort", Mode::Sa);
    th.model = Some(Ident::new("insertsort"));
    th.hconfig.atom_limit = 64;
    th.sig.declare_fun(Ident::new("plus"), 2).unwrap();
    th.sig.declare_fun(Ident::new("mult"), 2).unwrap();
    th.sig.declare_state_pred(Ident::new("sort"), 1).unwrap();
    th.sig.declare_state_pred(Ident::new("psort"), 2).unwrap();
    th.sig.declare_state_pred(Ident::new("comp"), 1).unwrap();
    th.consts.declare(Ident::new("swap"), StType::arrow(StType::D, StType::C)).unwrap();

    let x = || Term::var("x");
    let y = || Term::var("y");
    th.add_defeq(DefEquation {
        id: Ident::new("plus_zero"),
        params: vec![Ident::new("x")],
        lhs: Term::app("plus", vec![x(), num(0)]),
        rhs: x(),
    })
    .unwrap();
    th.add_defeq(DefEquation {
        id: Ident::new("plus_succ"),
        params: vec![Ident::new("x"), Ident::new("y")],
        lhs: Term::app("plus", vec![x(), succ(y())]),
        rhs: succ(Term::app("plus", vec![x(), y()])),
    })
    .unwrap();
    th.add_defeq(DefEquation {
        id: Ident::new("mult_zero"),
        params: vec![Ident::new("x")],
        lhs: Term::app("mult", vec![x(), num(0)]),
        rhs: num(0),
    })
    .unwrap();
    th.add_defeq(DefEquation {
        id: Ident::new("mult_succ"),
        params: vec![Ident::new("x"), Ident::new("y")],
        lhs: Term::app("mult", vec![x(), succ(y())]),
        rhs: Term::app("plus", vec![Term::app("mult", vec![x(), y()]), x()]),
    })
    .unwrap();

    let n = || Term::var("n");
    let cap = || Term::var("N");
    let sort = |t: Term| StateFormula::atom("sort", vec![t]);
    let psort = |a: Term, b: Term| StateFormula::atom("psort", vec![a, b]);
    let comp = |t: Term| StateFormula::atom("comp", vec![t]);

    // A sorted prefix is partially sorted with respect to the next element.
    th.add_haxiom(HAxiomSchema {
        name: Ident::new("sorted_extends"),
        metavars: vec![Ident::new("N")],
        hyps: vec![sort(cap())],
        goal: psort(succ(cap()), succ(cap())),
    })
    .unwrap();
    // Once the in-flight element no longer undercuts its left neighbour,
    // partial sortedness is full sortedness.
    th.add_haxiom(HAxiomSchema {
        name: Ident::new("insert_done"),
        metavars: vec![Ident::new("n"), Ident::new("N")],
        hyps: vec![StateFormula::neg(comp(n())), psort(n(), cap())],
        goal: sort(cap()),
    })
    .unwrap();
    // An element pushed all the way to the front is in place.
    th.add_haxiom(HAxiomSchema {
        name: Ident::new("insert_head"),
        metavars: vec![Ident::new("N")],
        hyps: vec![psort(num(0), cap())],
        goal: sort(cap()),
    })
    .unwrap();
    // A one-element prefix is sorted.
    th.add_haxiom(HAxiomSchema {
        name: Ident::new("sort_zero"),
        metavars: vec![],
        hyps: vec![],
        goal: sort(num(0)),
    })
    .unwrap();

    // Swapping an undercutting element with its left neighbour moves the
    // insertion point down one place.
    th.add_saxiom(SAxiomSchema {
        name: Ident::new("insert_swap"),
        term_metavars: vec![Ident::new("n"), Ident::new("N")],
        formula_metavars: vec![],
        formula_shape: FormulaShape::Any,
        hyps: vec![],
        pre: StateFormula::and(comp(succ(n())), psort(succ(n()), cap())),
        body: MainFormula::Top,
        post: psort(n(), cap()),
        post_swap: None,
        realizer: RealizerSpec::Term(StTerm::app(StTerm::cnst("swap"), StTerm::var("n"))),
    })
    .unwrap();
    th
}
