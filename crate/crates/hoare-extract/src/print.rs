//! Canonical printers for the surface formats.
//!
//! Printing inverts parsing: feeding the output back through the parser
//! reproduces the same declarations and proof trees. Formulas and terms use
//! the core display forms (the parsers were built around the same precedence
//! table), schema arguments are positional in declaration order, and optional
//! pieces are always written out in full.

use std::fmt::Write;

use hoare_core::kernel::{Derivation, Theory};
use hoare_core::pl::PlDerivation;
use hoare_core::statelogic::{Binding, HintSet};
use hoare_core::syntax::{Ident, StateFormula};

use crate::surface::{Decl, NamedProof, ProofFile, ProofItem, RPat, TheoryFile};

pub fn print_theory_file(file: &TheoryFile) -> String {
    let mut out = String::new();
    for decl in &file.decls {
        match decl {
            Decl::Theory(n) => writeln!(out, "theory {n}").unwrap(),
            Decl::Mode(m) => writeln!(
                out,
                "mode {}",
                match m {
                    hoare_core::syntax::Mode::Sl => "sl",
                    hoare_core::syntax::Mode::Sa => "sa",
                }
            )
            .unwrap(),
            Decl::Model(m) => writeln!(out, "model {m}").unwrap(),
            Decl::Fun { name, arity } => writeln!(out, "fun {name} {arity}").unwrap(),
            Decl::Pred { name, arity } => writeln!(out, "pred {name} {arity}").unwrap(),
            Decl::StatePred { name, arity } => writeln!(out, "statepred {name} {arity}").unwrap(),
            Decl::Const { name, ty } => writeln!(out, "const {name} : {ty}").unwrap(),
            Decl::AtomLimit(n) => writeln!(out, "atomlimit {n}").unwrap(),
            Decl::HAxiom { name, metavars, hyps, goal } => {
                write!(out, "haxiom {name}({})", idents(metavars)).unwrap();
                write!(out, ": ").unwrap();
                for (i, h) in hyps.iter().enumerate() {
                    if i > 0 {
                        write!(out, ", ").unwrap();
                    }
                    write!(out, "{h}").unwrap();
                }
                if !hyps.is_empty() {
                    write!(out, " ").unwrap();
                }
                writeln!(out, "|- {goal}").unwrap();
            }
            Decl::SAxiom { name, term_metavars, formula_metavars, pre, body, post, realizer } => {
                write!(out, "saxiom {name}({}", idents(term_metavars)).unwrap();
                if !formula_metavars.is_empty() {
                    write!(out, "; {}", idents(formula_metavars)).unwrap();
                }
                writeln!(out, "): {{{pre}}} {body} {{{post}}} realizer {}", rpat(realizer)).unwrap();
            }
            Decl::DefEq { id, params, lhs, rhs } => {
                writeln!(out, "defeq {id}({}): {lhs} = {rhs}", idents(params)).unwrap();
            }
        }
    }
    out
}

fn idents(xs: &[Ident]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn rpat(p: &RPat) -> String {
    match p {
        RPat::Skip => "skip".to_string(),
        RPat::Name(n) => n.to_string(),
        RPat::App(f, a) => {
            let fs = rpat(f);
            let as_ = match a.as_ref() {
                RPat::App(..) => format!("({})", rpat(a)),
                other => rpat(other),
            };
            format!("{fs} {as_}")
        }
    }
}

pub fn print_proof_file(file: &ProofFile, theory: &Theory) -> String {
    let mut out = String::new();
    for NamedProof { name, item } in &file.entries {
        match item {
            ProofItem::Direct(d) => {
                writeln!(out, "derivation {name} {}", print_derivation(d, theory)).unwrap()
            }
            ProofItem::Embedded { alpha, proof } => writeln!(
                out,
                "derivation {name} (embed {{{alpha}}} {})",
                print_pl_derivation(proof, theory)
            )
            .unwrap(),
        }
    }
    out
}

/// One positional argument list, in the order the schema declares its
/// metavariables. A metavariable the binding leaves out prints as itself,
/// which reparses to the identity instantiation.
fn binding_args(order: &[Ident], binding: &Binding) -> String {
    let mut parts = Vec::new();
    for mv in order {
        match binding.get(mv) {
            Some(t) => parts.push(format!(" {t}")),
            None => parts.push(format!(" {mv}")),
        }
    }
    parts.concat()
}

fn hints(h: &HintSet, theory: &Theory) -> String {
    if h.instances.is_empty() {
        return "auto".to_string();
    }
    let mut out = String::from("(use");
    for (name, binding) in &h.instances {
        let order: Vec<Ident> = theory
            .haxioms
            .iter()
            .find(|a| &a.name == name)
            .map(|a| a.metavars.clone())
            .unwrap_or_else(|| binding.keys().cloned().collect());
        write!(out, " ({name}{})", binding_args(&order, binding)).unwrap();
    }
    out.push(')');
    out
}

fn sf(a: &StateFormula) -> String {
    format!("{{{a}}}")
}

pub fn print_derivation(d: &Derivation, th: &Theory) -> String {
    use Derivation::*;
    match d {
        Hyp { label, state } => format!("(hyp {label} {})", sf(state)),
        TopAx { state } => format!("(top {})", sf(state)),
        AndI { left, right } => {
            format!("(and_i {} {})", print_derivation(left, th), print_derivation(right, th))
        }
        AndEL { from } => format!("(and_el {})", print_derivation(from, th)),
        AndER { from } => format!("(and_er {})", print_derivation(from, th)),
        OrIL { from, right } => format!("(or_il {} [{right}])", print_derivation(from, th)),
        OrIR { left, from } => format!("(or_ir [{left}] {})", print_derivation(from, th)),
        OrE { disj, left_label, left_case, right_label, right_case } => format!(
            "(or_e {} {left_label} {} {right_label} {})",
            print_derivation(disj, th),
            print_derivation(left_case, th),
            print_derivation(right_case, th)
        ),
        ImpI { label, hyp, premise, outer } => {
            format!("(imp_i {label} [{hyp}] {} {})", print_derivation(premise, th), sf(outer))
        }
        ImpE { imp, arg } => {
            format!("(imp_e {} {})", print_derivation(imp, th), print_derivation(arg, th))
        }
        BotE { from, target, post } => {
            format!("(bot_e {} [{target}] {})", print_derivation(from, th), sf(post))
        }
        ForallI { var, premise, outer } => {
            format!("(forall_i {var} {} {})", print_derivation(premise, th), sf(outer))
        }
        ForallE { from, witness } => format!("(forall_e {} {witness})", print_derivation(from, th)),
        ExistsI { witness, var, template, from } => {
            format!("(exists_i {witness} {var} [{template}] {})", print_derivation(from, th))
        }
        ExistsE { exists, var, label, body } => format!(
            "(exists_e {} {var} {label} {})",
            print_derivation(exists, th),
            print_derivation(body, th)
        ),
        Cons { pre, pre_hints, from, post_hints, post } => format!(
            "(cons {} {} {} {} {})",
            sf(pre),
            hints(pre_hints, th),
            print_derivation(from, th),
            hints(post_hints, th),
            sf(post)
        ),
        Cond { case_a, case_b, disj_hints, left, right } => format!(
            "(cond {} {} {} {} {})",
            sf(case_a),
            sf(case_b),
            hints(disj_hints, th),
            print_derivation(left, th),
            print_derivation(right, th)
        ),
        SAxiom { name, terms, formulas } => {
            let (torder, forder) = match th.saxiom(name) {
                Some(s) => (s.term_metavars.clone(), s.formula_metavars.clone()),
                None => (terms.keys().cloned().collect(), formulas.keys().cloned().collect()),
            };
            let mut out = format!("(sax {name}{}", binding_args(&torder, terms));
            for mv in &forder {
                match formulas.get(mv) {
                    Some(f) => write!(out, " {}", sf(f)).unwrap(),
                    None => write!(out, " {}", sf(&StateFormula::atom(mv.clone(), vec![]))).unwrap(),
                }
            }
            out.push(')');
            out
        }
        EqRefl { term, state } => format!("(eq_refl {term} {})", sf(state)),
        EqSym { from } => format!("(eq_sym {})", print_derivation(from, th)),
        EqTrans { left, right } => {
            format!("(eq_trans {} {})", print_derivation(left, th), print_derivation(right, th))
        }
        Ext { eq, body, var, template, post_template } => format!(
            "(ext {} {} {var} [{template}] {})",
            print_derivation(eq, th),
            print_derivation(body, th),
            sf(post_template)
        ),
        SuccNonzero { term, state } => format!("(succ_nonzero {term} {})", sf(state)),
        SuccInj { from } => format!("(succ_inj {})", print_derivation(from, th)),
        DefEq { id, binding, state } => {
            let order = th.defeq(id).map(|e| e.params.clone()).unwrap_or_default();
            format!("(defeq {id}{} {})", binding_args(&order, binding), sf(state))
        }
        Ind { base, var, label, template, step, outer } => format!(
            "(ind {} {var} {label} [{template}] {} {})",
            print_derivation(base, th),
            print_derivation(step, th),
            sf(outer)
        ),
        While { var, label, hole, cond, body, exit, zero } => format!(
            "(while {var} {label} {hole} {} {} {} {})",
            sf(cond),
            print_derivation(body, th),
            print_derivation(exit, th),
            print_derivation(zero, th)
        ),
    }
}

pub fn print_pl_derivation(d: &PlDerivation, th: &Theory) -> String {
    use PlDerivation::*;
    match d {
        Hyp { label } => format!("(hyp {label})"),
        TopI => "(top_i)".to_string(),
        AndI { left, right } => format!(
            "(and_i {} {})",
            print_pl_derivation(left, th),
            print_pl_derivation(right, th)
        ),
        AndEL { from } => format!("(and_el {})", print_pl_derivation(from, th)),
        AndER { from } => format!("(and_er {})", print_pl_derivation(from, th)),
        OrIL { from, right } => format!("(or_il {} [{right}])", print_pl_derivation(from, th)),
        OrIR { left, from } => format!("(or_ir [{left}] {})", print_pl_derivation(from, th)),
        OrE { disj, left_label, left_case, right_label, right_case } => format!(
            "(or_e {} {left_label} {} {right_label} {})",
            print_pl_derivation(disj, th),
            print_pl_derivation(left_case, th),
            print_pl_derivation(right_case, th)
        ),
        ImpI { label, hyp, premise } => {
            format!("(imp_i {label} [{hyp}] {})", print_pl_derivation(premise, th))
        }
        ImpE { imp, arg } => {
            format!("(imp_e {} {})", print_pl_derivation(imp, th), print_pl_derivation(arg, th))
        }
        BotE { from, target } => format!("(bot_e {} [{target}])", print_pl_derivation(from, th)),
        ForallI { var, premise } => format!("(forall_i {var} {})", print_pl_derivation(premise, th)),
        ForallE { from, witness } => {
            format!("(forall_e {} {witness})", print_pl_derivation(from, th))
        }
        ExistsI { witness, var, template, from } => {
            format!("(exists_i {witness} {var} [{template}] {})", print_pl_derivation(from, th))
        }
        ExistsE { exists, var, label, body } => format!(
            "(exists_e {} {var} {label} {})",
            print_pl_derivation(exists, th),
            print_pl_derivation(body, th)
        ),
        EqRefl { term } => format!("(eq_refl {term})"),
        EqSym { from } => format!("(eq_sym {})", print_pl_derivation(from, th)),
        EqTrans { left, right } => format!(
            "(eq_trans {} {})",
            print_pl_derivation(left, th),
            print_pl_derivation(right, th)
        ),
        SuccNonzero { term } => format!("(succ_nonzero {term})"),
        SuccInj { from } => format!("(succ_inj {})", print_pl_derivation(from, th)),
        DefEq { id, binding } => {
            let order = th.defeq(id).map(|e| e.params.clone()).unwrap_or_default();
            format!("(defeq {id}{})", binding_args(&order, binding))
        }
        Ind { base, var, label, template, step } => format!(
            "(ind {} {var} {label} [{template}] {})",
            print_pl_derivation(base, th),
            print_pl_derivation(step, th)
        ),
        Leib { eq, body, var, template } => format!(
            "(leib {} {} {var} [{template}])",
            print_pl_derivation(eq, th),
            print_pl_derivation(body, th)
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_proof_file, parse_theory_file};

    #[test]
    fn theory_files_round_trip() {
        let text = "theory demo\n\
                    mode sl\n\
                    statepred stored 1\n\
                    statepred le 2\n\
                    fun c 0\n\
                    const put : D -> C\n\
                    atomlimit 12\n\
                    haxiom tot(l, l'): |- le(l, l') \\/ le(l', l)\n\
                    haxiom chain(a, b): le(a, b), le(b, a) |- le(a, a)\n\
                    defeq myeq(x): c = c\n";
        let (ast, _) = parse_theory_file("t.slt", text).unwrap();
        let printed = print_theory_file(&ast);
        let (ast2, _) = parse_theory_file("t.slt", &printed).unwrap();
        assert_eq!(ast, ast2, "printed form:\n{printed}");
    }

    #[test]
    fn proof_files_round_trip() {
        let (_, th) = parse_theory_file("t.slt", "theory rw\nmodel querysolve\n").unwrap();
        let text = "derivation main\n\
                    (forall_i x (and_er (and_i (sax store x {stored(x)}) (sax solve x))) {true})\n\
                    derivation aux (top {stored(x)})\n";
        let pf = parse_proof_file("p.slp", text, &th).unwrap();
        let printed = print_proof_file(&pf, &th);
        let pf2 = parse_proof_file("p.slp", &printed, &th).unwrap();
        assert_eq!(pf, pf2, "printed form:\n{printed}");
    }

    #[test]
    fn embedded_proofs_round_trip() {
        let (_, th) =
            parse_theory_file("t.slt", "theory logic\nmode sl\npred P 1\npred Q 1\n").unwrap();
        let text = "derivation flip\n\
                    (embed {true} (imp_i u [P(z) /\\ Q(z)] (and_i (and_er (hyp u)) (and_el (hyp u)))))\n";
        let pf = parse_proof_file("p.slp", text, &th).unwrap();
        let printed = print_proof_file(&pf, &th);
        let pf2 = parse_proof_file("p.slp", &printed, &th).unwrap();
        assert_eq!(pf, pf2, "printed form:\n{printed}");
    }
}
