//! A proof kernel for first-order logic over abstract Hoare triples, a program
//! extractor realizing proofs as stateful programs, and an evaluator running
//! the extracted programs against concrete state models.
//!
//! The crate is layered bottom-up:
//!
//! * [`syntax`] — terms, state formulas, main formulas, signatures;
//! * [`statelogic`] — the classical consequence check `⊢_H` for state
//!   formulas, driven by hypothesis-axiom schemas;
//! * [`stlang`] — the simply typed term language programs are extracted into,
//!   with its type checker;
//! * [`kernel`] — derivations and the trusted checker for the two proof
//!   systems (predicate-logic mode and arithmetic mode);
//! * [`pl`] — ordinary intuitionistic predicate-logic/arithmetic derivations
//!   and their embedding into triple form;
//! * [`extract`] — the proof-to-program translation and realizability types;
//! * [`semantics`] — state-monad evaluation of extracted programs and the
//!   realizability checker;
//! * [`models`] — the built-in concrete state models (query/solve, three-slot
//!   sorting, array insertion sort).

pub mod extract;
pub mod kernel;
pub mod models;
pub mod pl;
pub mod semantics;
pub mod statelogic;
pub mod stlang;
pub mod syntax;
