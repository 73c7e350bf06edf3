//! Surface syntax trees for the two file formats.
//!
//! A theory file is a declaration list; it elaborates into a
//! [`hoare_core::kernel::Theory`] (see [`crate::load`]). Keeping the
//! declaration list around — rather than only the elaborated theory — is what
//! lets printing invert parsing: a theory built on a named model prints back
//! as its one `model` line, not as a dump of everything the model registered.

use hoare_core::kernel::Derivation;
use hoare_core::pl::PlDerivation;
use hoare_core::stlang::StType;
use hoare_core::syntax::{Ident, MainFormula, Mode, StateFormula, Term};

/// One theory-file declaration.
#[derive(Clone, Debug, PartialEq)]
pub enum Decl {
    /// `theory NAME`
    Theory(Ident),
    /// `mode sl` / `mode sa`
    Mode(Mode),
    /// `model NAME` — start from a built-in model's registered theory.
    Model(Ident),
    /// `fun NAME ARITY`
    Fun { name: Ident, arity: usize },
    /// `pred NAME ARITY` (main-layer predicate)
    Pred { name: Ident, arity: usize },
    /// `statepred NAME ARITY`
    StatePred { name: Ident, arity: usize },
    /// `const NAME : TYPE` (computation constant)
    Const { name: Ident, ty: StType },
    /// `atomlimit N` — consequence-check search budget.
    AtomLimit(usize),
    /// `haxiom NAME(METAVARS): HYPS |- GOAL`
    HAxiom { name: Ident, metavars: Vec<Ident>, hyps: Vec<StateFormula>, goal: StateFormula },
    /// `saxiom NAME(TERMVARS; FORMULAVARS): {PRE} BODY {POST} realizer PAT`
    SAxiom {
        name: Ident,
        term_metavars: Vec<Ident>,
        formula_metavars: Vec<Ident>,
        pre: StateFormula,
        body: MainFormula,
        post: StateFormula,
        realizer: RPat,
    },
    /// `defeq NAME(PARAMS): LHS = RHS`
    DefEq { id: Ident, params: Vec<Ident>, lhs: Term, rhs: Term },
}

/// A realizer pattern: the program fragment named in an `saxiom` declaration.
/// Identifiers are resolved against the constant table, the function symbols,
/// and the schema's term metavariables during elaboration.
#[derive(Clone, Debug, PartialEq)]
pub enum RPat {
    Skip,
    Name(Ident),
    App(Box<RPat>, Box<RPat>),
}

/// A parsed theory file.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct TheoryFile {
    pub decls: Vec<Decl>,
}

/// One named proof: either a derivation in the triple systems, or a pure
/// natural-deduction proof together with the state formula to thread through
/// its embedding.
#[derive(Clone, Debug, PartialEq)]
pub enum ProofItem {
    Direct(Derivation),
    Embedded { alpha: StateFormula, proof: PlDerivation },
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedProof {
    pub name: Ident,
    pub item: ProofItem,
}

/// A parsed proof file.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ProofFile {
    pub entries: Vec<NamedProof>,
}
