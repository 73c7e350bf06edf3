//! Program extraction. Every checked derivation yields a term of the state
//! language whose type is determined by the shape of the conclusion formula;
//! the clauses below read off the constructive content of each proof rule.
//! Extraction is deterministic — hypothesis variables are derived from labels
//! (`x_u` for label `u`), so the same proof always produces the same term.

use std::collections::BTreeSet;

use crate::kernel::{check_in, Derivation, KernelError, RealizerSpec, SAxiomSchema, Theory};
use crate::stlang::{
    as_first_order, interp_term, typecheck, StTerm, StType, TypeError, TypingCtx,
};
use crate::syntax::{Context, Ident, MainFormula, Mode, Term};

/// The type of evidence for a formula: trivial for atoms, pairs for
/// conjunctions, tagged pairs for disjunctions, a witness–evidence pair for
/// existentials, and functions for the guarded implication and universal.
pub fn real_type(a: &MainFormula) -> StType {
    match a {
        MainFormula::Top | MainFormula::Bot | MainFormula::Atom { .. } => StType::C,
        MainFormula::And { lhs, rhs } => StType::prod(real_type(lhs), real_type(rhs)),
        MainFormula::Or { lhs, rhs } => StType::sum(real_type(lhs), real_type(rhs)),
        MainFormula::Exists { body, .. } => StType::prod(StType::D, real_type(body)),
        MainFormula::Imp { hyp, triple } => {
            StType::arrow(real_type(hyp), real_type(&triple.body))
        }
        MainFormula::Forall { triple, .. } => StType::arrow(StType::D, real_type(&triple.body)),
    }
}

/// The realizer variable standing for a labeled hypothesis.
pub fn hyp_var(label: &Ident) -> Ident {
    Ident::new(&format!("x_{label}"))
}

/// Realizer variables and types for a hypothesis context.
#[derive(Clone, Debug, Default)]
pub struct RealCtx {
    entries: Vec<(Ident, (Ident, StType))>,
}

impl RealCtx {
    pub fn of_context(ctx: &Context) -> RealCtx {
        RealCtx {
            entries: ctx
                .entries()
                .iter()
                .map(|(label, a)| (label.clone(), (hyp_var(label), real_type(a))))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(Ident, (Ident, StType))] {
        &self.entries
    }

    /// The corresponding typing context for the term checker, with the given
    /// individual variables adjoined at type `D`.
    pub fn typing_ctx(&self, d_vars: &BTreeSet<Ident>) -> TypingCtx {
        let mut tctx = TypingCtx::new();
        for v in d_vars {
            tctx = tctx.bind(v.clone(), StType::D);
        }
        for (_, (var, ty)) in &self.entries {
            tctx = tctx.bind(var.clone(), ty.clone());
        }
        tctx
    }
}

/// Extract the program of a derivation checked under the empty context.
pub fn extract(d: &Derivation, theory: &Theory) -> Result<StTerm, KernelError> {
    extract_in(d, &Context::new(), theory)
}

/// Extract under an ambient hypothesis context. The derivation must already
/// check in that context; extraction re-derives only the formula data it
/// needs (branch shapes for disjunction and existential elimination).
pub fn extract_in(
    d: &Derivation,
    ctx: &Context,
    theory: &Theory,
) -> Result<StTerm, KernelError> {
    match d {
        Derivation::Hyp { label, .. } => {
            if ctx.lookup(label).is_none() {
                return Err(KernelError::UnknownLabel { label: label.clone() });
            }
            Ok(StTerm::var(hyp_var(label)))
        }
        Derivation::TopAx { .. } => Ok(StTerm::Skip),
        Derivation::AndI { left, right } => Ok(StTerm::comp(
            extract_in(left, ctx, theory)?,
            extract_in(right, ctx, theory)?,
        )),
        Derivation::AndEL { from } => Ok(StTerm::proj0(extract_in(from, ctx, theory)?)),
        Derivation::AndER { from } => Ok(StTerm::proj1(extract_in(from, ctx, theory)?)),
        Derivation::OrIL { from, right } => Ok(StTerm::inj0(
            extract_in(from, ctx, theory)?,
            real_type(right),
        )),
        Derivation::OrIR { left, from } => Ok(StTerm::inj1(
            extract_in(from, ctx, theory)?,
            real_type(left),
        )),
        Derivation::OrE { disj, left_label, left_case, right_label, right_case } => {
            let (a, b) = match check_in(disj, ctx, theory)?.triple.body {
                MainFormula::Or { lhs, rhs } => (*lhs, *rhs),
                other => {
                    return Err(KernelError::RuleMismatch {
                        rule: "or_e",
                        expected: "a disjunction".to_string(),
                        found: other.to_string(),
                    })
                }
            };
            let scrutinee = extract_in(disj, ctx, theory)?;
            let lctx = ctx.push(left_label.clone(), a.clone())?;
            let on_left = StTerm::lam(
                hyp_var(left_label),
                real_type(&a),
                extract_in(left_case, &lctx, theory)?,
            );
            let rctx = ctx.push(right_label.clone(), b.clone())?;
            let on_right = StTerm::lam(
                hyp_var(right_label),
                real_type(&b),
                extract_in(right_case, &rctx, theory)?,
            );
            Ok(StTerm::elim(scrutinee, on_left, on_right))
        }
        Derivation::ImpI { label, hyp, premise, .. } => {
            let inner = ctx.push(label.clone(), hyp.clone())?;
            Ok(StTerm::lam(
                hyp_var(label),
                real_type(hyp),
                extract_in(premise, &inner, theory)?,
            ))
        }
        Derivation::ImpE { imp, arg } => Ok(StTerm::app(
            extract_in(imp, ctx, theory)?,
            extract_in(arg, ctx, theory)?,
        )),
        Derivation::BotE { target, .. } => Ok(StTerm::default_of(real_type(target))),
        Derivation::ForallI { var, premise, .. } => Ok(StTerm::lam(
            var.clone(),
            StType::D,
            extract_in(premise, ctx, theory)?,
        )),
        Derivation::ForallE { from, witness } => Ok(StTerm::app(
            extract_in(from, ctx, theory)?,
            interp_term(witness),
        )),
        Derivation::ExistsI { witness, from, .. } => Ok(StTerm::comp(
            interp_term(witness),
            extract_in(from, ctx, theory)?,
        )),
        Derivation::ExistsE { exists, var, label, body } => {
            let matrix = match check_in(exists, ctx, theory)?.triple.body {
                MainFormula::Exists { var: x, body } => body.subst(&x, &Term::var(var.clone())),
                other => {
                    return Err(KernelError::RuleMismatch {
                        rule: "exists_e",
                        expected: "an existential".to_string(),
                        found: other.to_string(),
                    })
                }
            };
            let inner = ctx.push(label.clone(), matrix.clone())?;
            let body_term = extract_in(body, &inner, theory)?;
            let evidence = extract_in(exists, ctx, theory)?;
            Ok(StTerm::app(
                curry_pair(var, &hyp_var(label), real_type(&matrix), body_term),
                evidence,
            ))
        }
        Derivation::Cons { from, .. } => extract_in(from, ctx, theory),
        Derivation::Cond { case_a, left, right, .. } => Ok(StTerm::ite(
            case_a.clone(),
            extract_in(left, ctx, theory)?,
            extract_in(right, ctx, theory)?,
        )),
        Derivation::SAxiom { name, terms, formulas } => {
            let schema = theory
                .saxiom(name)
                .ok_or_else(|| KernelError::UnknownSAxiom { name: name.clone() })?;
            let inst = crate::kernel::instantiate_saxiom(schema, terms, formulas, &theory.sig)?;
            Ok(inst.realizer)
        }
        Derivation::EqRefl { .. }
        | Derivation::SuccNonzero { .. }
        | Derivation::DefEq { .. } => Ok(StTerm::Skip),
        Derivation::EqSym { from } | Derivation::SuccInj { from } => {
            extract_in(from, ctx, theory)
        }
        Derivation::EqTrans { left, right } => Ok(crate::stlang::star(
            extract_in(left, ctx, theory)?,
            extract_in(right, ctx, theory)?,
        )),
        Derivation::Ext { eq, body, .. } => Ok(crate::stlang::star(
            extract_in(eq, ctx, theory)?,
            extract_in(body, ctx, theory)?,
        )),
        Derivation::Ind { base, var, label, template, step, .. } => {
            let base_term = extract_in(base, ctx, theory)?;
            let sctx = ctx.push(label.clone(), template.clone())?;
            let step_term = extract_in(step, &sctx, theory)?;
            Ok(StTerm::rec(
                base_term,
                StTerm::lam(
                    var.clone(),
                    StType::D,
                    StTerm::lam(hyp_var(label), real_type(template), step_term),
                ),
            ))
        }
        Derivation::While { var, label, hole, cond, body, exit, zero } => {
            let invariant = ctx
                .lookup(label)
                .ok_or_else(|| KernelError::UnknownLabel { label: label.clone() })?
                .clone();
            let inv_ty = real_type(&invariant);
            let outer_ctx = ctx.remove(label);
            let succ_v = Term::app("succ", vec![Term::var(var.clone())]);
            let step_ctx = outer_ctx.push(label.clone(), invariant.subst(var, &succ_v))?;
            let zero_ctx =
                outer_ctx.push(label.clone(), invariant.subst(var, &Term::num(0)))?;

            let xy = hyp_var(label);
            let r = StTerm::lam(
                var.clone(),
                StType::D,
                StTerm::lam(xy.clone(), inv_ty.clone(), extract_in(body, &step_ctx, theory)?),
            );
            let s = StTerm::lam(
                var.clone(),
                StType::D,
                StTerm::lam(xy.clone(), inv_ty.clone(), extract_in(exit, &step_ctx, theory)?),
            );
            let t = StTerm::lam(
                xy.clone(),
                inv_ty,
                extract_in(zero, &zero_ctx, theory)?,
            );
            let loop_term = StTerm::While {
                hole: hole.clone(),
                cond: cond.clone(),
                r: Box::new(r),
                s: Box::new(s),
                t: Box::new(t),
                u: Box::new(StTerm::var(var.clone())),
            };
            Ok(StTerm::app(loop_term, StTerm::var(xy)))
        }
    }
}

/// The currying wrapper for existential elimination: a function on a
/// witness–evidence pair that splits it and feeds the components to the
/// two-argument body.
fn curry_pair(var: &Ident, hyp: &Ident, evidence_ty: StType, body: StTerm) -> StTerm {
    let mut avoid = body.free_var_set();
    avoid.insert(var.clone());
    avoid.insert(hyp.clone());
    let pair = crate::syntax::fresh(&Ident::new("v"), &avoid);
    let split = StTerm::app(
        StTerm::app(
            StTerm::lam(
                var.clone(),
                StType::D,
                StTerm::lam(hyp.clone(), evidence_ty.clone(), body),
            ),
            StTerm::proj0(StTerm::var(pair.clone())),
        ),
        StTerm::proj1(StTerm::var(pair.clone())),
    );
    StTerm::lam(pair, StType::prod(StType::D, evidence_ty), split)
}

/// A term is duplicable when evaluating it can neither touch the state nor
/// diverge: then a beta step that copies it is observationally harmless. The
/// class is deliberately narrow — even pure-looking applications are excluded,
/// so reductions a proof author wrote deliberately (witness instantiations)
/// survive the cleanup below.
fn duplicable(t: &StTerm) -> bool {
    match t {
        StTerm::Skip
        | StTerm::Default { .. }
        | StTerm::Fun { .. }
        | StTerm::Var { .. }
        | StTerm::Lam { .. } => true,
        StTerm::Proj0 { pair } | StTerm::Proj1 { pair } => duplicable(pair),
        StTerm::Comp { fst, snd } => duplicable(fst) && duplicable(snd),
        StTerm::Inj0 { val, .. } | StTerm::Inj1 { val, .. } => duplicable(val),
        _ => false,
    }
}

/// Whether substituting `arg` for `var` in `body` is expressible: conditions
/// only hold first-order terms, so a variable occurring in one can only be
/// replaced by a variable or nullary symbol.
fn substitutable(var: &Ident, body: &StTerm, arg: &StTerm) -> bool {
    if as_first_order(arg).is_some() {
        return true;
    }
    fn cond_vars(t: &StTerm, out: &mut BTreeSet<Ident>) {
        match t {
            StTerm::Ite { cond, then_branch, else_branch } => {
                cond.free_vars(out);
                cond_vars(then_branch, out);
                cond_vars(else_branch, out);
            }
            StTerm::While { hole, cond, r, s, t, u } => {
                let mut cv = BTreeSet::new();
                cond.free_vars(&mut cv);
                cv.remove(hole);
                out.extend(cv);
                cond_vars(r, out);
                cond_vars(s, out);
                cond_vars(t, out);
                cond_vars(u, out);
            }
            StTerm::Proj0 { pair } | StTerm::Proj1 { pair } => cond_vars(pair, out),
            StTerm::Comp { fst, snd } => {
                cond_vars(fst, out);
                cond_vars(snd, out);
            }
            StTerm::Inj0 { val, .. } | StTerm::Inj1 { val, .. } => cond_vars(val, out),
            StTerm::Elim { scrutinee, on_left, on_right } => {
                cond_vars(scrutinee, out);
                cond_vars(on_left, out);
                cond_vars(on_right, out);
            }
            StTerm::Lam { var, body, .. } => {
                let mut inner = BTreeSet::new();
                cond_vars(body, &mut inner);
                inner.remove(var);
                out.extend(inner);
            }
            StTerm::App { fun, arg } => {
                cond_vars(fun, out);
                cond_vars(arg, out);
            }
            StTerm::Rec { base, step } => {
                cond_vars(base, out);
                cond_vars(step, out);
            }
            _ => {}
        }
    }
    let mut cv = BTreeSet::new();
    cond_vars(body, &mut cv);
    !cv.contains(var)
}

/// Collapse the administrative redexes extraction introduces — the currying
/// wrappers of existential elimination and similar duplicable-argument beta
/// steps. Applications of genuinely computed arguments (function applications,
/// state operations) are left exactly as extracted.
pub fn cleanup_admin(t: &StTerm) -> StTerm {
    let mut cur = t.clone();
    for _ in 0..64 {
        let next = cleanup_pass(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

fn cleanup_pass(t: &StTerm) -> StTerm {
    match t {
        StTerm::Skip
        | StTerm::Default { .. }
        | StTerm::Const { .. }
        | StTerm::Fun { .. }
        | StTerm::Var { .. } => t.clone(),
        StTerm::Proj0 { pair } => StTerm::proj0(cleanup_pass(pair)),
        StTerm::Proj1 { pair } => StTerm::proj1(cleanup_pass(pair)),
        StTerm::Comp { fst, snd } => StTerm::comp(cleanup_pass(fst), cleanup_pass(snd)),
        StTerm::Inj0 { val, right } => StTerm::inj0(cleanup_pass(val), right.clone()),
        StTerm::Inj1 { val, left } => StTerm::inj1(cleanup_pass(val), left.clone()),
        StTerm::Elim { scrutinee, on_left, on_right } => StTerm::elim(
            cleanup_pass(scrutinee),
            cleanup_pass(on_left),
            cleanup_pass(on_right),
        ),
        StTerm::Lam { var, ty, body } => {
            StTerm::lam(var.clone(), ty.clone(), cleanup_pass(body))
        }
        StTerm::App { fun, arg } => {
            let fun = cleanup_pass(fun);
            let arg = cleanup_pass(arg);
            if let StTerm::Lam { var, body, .. } = &fun {
                if duplicable(&arg) && substitutable(var, body, &arg) {
                    return body.subst_program(var, &arg);
                }
            }
            StTerm::app(fun, arg)
        }
        StTerm::Ite { cond, then_branch, else_branch } => StTerm::ite(
            cond.clone(),
            cleanup_pass(then_branch),
            cleanup_pass(else_branch),
        ),
        StTerm::Rec { base, step } => StTerm::rec(cleanup_pass(base), cleanup_pass(step)),
        StTerm::While { hole, cond, r, s, t, u } => StTerm::While {
            hole: hole.clone(),
            cond: cond.clone(),
            r: Box::new(cleanup_pass(r)),
            s: Box::new(cleanup_pass(s)),
            t: Box::new(cleanup_pass(t)),
            u: Box::new(cleanup_pass(u)),
        },
    }
}

/// Replace every stray free individual variable by the theory's canonical
/// ground symbol. Variables bound in `keep` are left alone; a stray variable
/// used at any type other than `D` is a typing error, reported as such.
pub fn free_var_ground(
    t: &StTerm,
    keep: &TypingCtx,
    theory: &Theory,
) -> Result<StTerm, TypeError> {
    let mut strays: Vec<Ident> = t
        .free_var_set()
        .into_iter()
        .filter(|v| keep.lookup(v).is_none())
        .collect();
    if strays.is_empty() {
        return Ok(t.clone());
    }
    strays.sort();
    // Typecheck with the strays adjoined at D; a non-individual use surfaces
    // as a mismatch here rather than as a bad substitution later.
    let mut ext = keep.clone();
    for v in &strays {
        ext = ext.bind(v.clone(), StType::D);
    }
    typecheck(t, &ext, &theory.consts, &theory.sig)?;
    let ground = canonical_ground(theory).ok_or(TypeError::NoCanonicalGround)?;
    let replacement = StTerm::fun(ground);
    let mut out = t.clone();
    for v in &strays {
        out = out.subst_program(v, &replacement);
    }
    Ok(out)
}

/// The designated ground symbol of a theory: `0` in arithmetic mode, the
/// first declared nullary function symbol otherwise.
pub fn canonical_ground(theory: &Theory) -> Option<Ident> {
    match theory.sig.mode {
        Mode::Sa => Some(Ident::new("0")),
        Mode::Sl => theory
            .sig
            .funs()
            .find(|(_, arity)| *arity == 0)
            .map(|(name, _)| name.clone()),
    }
}

/// Check that a schema's bound realizer has the type its triple pattern
/// demands: term metavariables count as individuals, and swap-style realizers
/// must name declared constants of the right type for every location pair.
pub fn validate_saxiom_realizer(
    schema: &SAxiomSchema,
    theory: &Theory,
) -> Result<(), KernelError> {
    let want = real_type(&schema.body);
    match &schema.realizer {
        RealizerSpec::Term(pattern) => {
            let mut tctx = TypingCtx::new();
            for mv in &schema.term_metavars {
                tctx = tctx.bind(mv.clone(), StType::D);
            }
            let got = typecheck(pattern, &tctx, &theory.consts, &theory.sig)
                .map_err(|e| KernelError::RuleMismatch {
                    rule: "schema realizer",
                    expected: format!("a term of type {want}"),
                    found: format!("{e}"),
                })?;
            if got != want {
                return Err(KernelError::RuleMismatch {
                    rule: "schema realizer",
                    expected: format!("type {want}"),
                    found: format!("type {got}"),
                });
            }
            Ok(())
        }
        RealizerSpec::SwapConst => {
            let swap = schema.post_swap.as_ref().ok_or_else(|| {
                KernelError::SchemaMetavar {
                    schema: schema.name.clone(),
                    var: Ident::new("swap"),
                }
            })?;
            for (i, a) in swap.locations.iter().enumerate() {
                for b in swap.locations.iter().skip(i + 1) {
                    let name = Ident::new(&format!("swap_{a}_{b}"));
                    match theory.consts.lookup(&name) {
                        Some(ty) if *ty == want => {}
                        Some(ty) => {
                            return Err(KernelError::RuleMismatch {
                                rule: "schema realizer",
                                expected: format!("`{name}` of type {want}"),
                                found: format!("type {ty}"),
                            })
                        }
                        None => {
                            return Err(KernelError::RuleMismatch {
                                rule: "schema realizer",
                                expected: format!("a declared constant `{name}`"),
                                found: "nothing".to_string(),
                            })
                        }
                    }
                }
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{check, FormulaShape};
    use crate::stlang::{alpha_eq_st, star};
    use crate::syntax::{StateFormula as SF, Triple};
    use std::collections::BTreeMap;

    fn readwrite_theory() -> Theory {
        let mut th = Theory::new("readwrite", Mode::Sl);
        th.sig.declare_pred(Ident::new("P"), 2).unwrap();
        th.sig.declare_state_pred(Ident::new("stored"), 1).unwrap();
        th.sig.declare_state_pred(Ident::new("solved"), 1).unwrap();
        th.consts
            .declare(Ident::new("write"), StType::arrow(StType::D, StType::C))
            .unwrap();
        th.consts.declare(Ident::new("calc"), StType::C).unwrap();
        th.consts
            .declare(Ident::new("read"), StType::prod(StType::D, StType::C))
            .unwrap();
        th.add_saxiom(SAxiomSchema {
            name: Ident::new("store"),
            term_metavars: vec![Ident::new("x")],
            formula_metavars: vec![Ident::new("A")],
            formula_shape: FormulaShape::Any,
            hyps: vec![],
            pre: SF::atom("A", vec![]),
            body: MainFormula::Top,
            post: SF::atom("stored", vec![Term::var("x")]),
            post_swap: None,
            realizer: RealizerSpec::Term(StTerm::app(
                StTerm::cnst("write"),
                StTerm::var("x"),
            )),
        })
        .unwrap();
        th.add_saxiom(SAxiomSchema {
            name: Ident::new("solve"),
            term_metavars: vec![Ident::new("x")],
            formula_metavars: vec![],
            formula_shape: FormulaShape::Any,
            hyps: vec![],
            pre: SF::atom("stored", vec![Term::var("x")]),
            body: MainFormula::Top,
            post: SF::atom("solved", vec![Term::var("x")]),
            post_swap: None,
            realizer: RealizerSpec::Term(StTerm::cnst("calc")),
        })
        .unwrap();
        th.add_saxiom(SAxiomSchema {
            name: Ident::new("answer"),
            term_metavars: vec![Ident::new("x")],
            formula_metavars: vec![],
            formula_shape: FormulaShape::Any,
            hyps: vec![],
            pre: SF::atom("solved", vec![Term::var("x")]),
            body: MainFormula::exists(
                "y",
                MainFormula::atom("P", vec![Term::var("x"), Term::var("y")]),
            ),
            post: SF::Top,
            post_swap: None,
            realizer: RealizerSpec::Term(StTerm::cnst("read")),
        })
        .unwrap();
        th
    }

    fn sax(name: &str, x: Term, a: Option<SF>) -> Derivation {
        let mut formulas = BTreeMap::new();
        if let Some(f) = a {
            formulas.insert(Ident::new("A"), f);
        }
        Derivation::SAxiom {
            name: Ident::new(name),
            terms: [(Ident::new("x"), x)].into_iter().collect(),
            formulas,
        }
    }

    fn readwrite_derivation() -> Derivation {
        let x = Term::var("x");
        let inner = Derivation::AndER {
            from: Box::new(Derivation::AndI {
                left: Box::new(Derivation::AndER {
                    from: Box::new(Derivation::AndI {
                        left: Box::new(sax("store", x.clone(), Some(SF::Top))),
                        right: Box::new(sax("solve", x.clone(), None)),
                    }),
                }),
                right: Box::new(sax("answer", x, None)),
            }),
        };
        Derivation::ForallI {
            var: Ident::new("x"),
            premise: Box::new(inner),
            outer: SF::Top,
        }
    }

    #[test]
    fn readwrite_extracts_to_composed_pipeline() {
        let th = readwrite_theory();
        let d = readwrite_derivation();
        check(&d, &th).unwrap();
        let t = extract(&d, &th).unwrap();
        let golden = StTerm::lam(
            Ident::new("x"),
            StType::D,
            star(
                star(
                    StTerm::app(StTerm::cnst("write"), StTerm::var("x")),
                    StTerm::cnst("calc"),
                ),
                StTerm::cnst("read"),
            ),
        );
        assert!(alpha_eq_st(&t, &golden), "got {t}");
        assert_eq!(format!("{t}"), "fun x -> write x * calc * read");
    }

    #[test]
    fn extraction_type_matches_conclusion_type() {
        let th = readwrite_theory();
        let d = readwrite_derivation();
        let seq = check(&d, &th).unwrap();
        let t = extract(&d, &th).unwrap();
        let rctx = RealCtx::of_context(&seq.ctx);
        let ty = typecheck(&t, &rctx.typing_ctx(&BTreeSet::new()), &th.consts, &th.sig).unwrap();
        assert_eq!(ty, real_type(&seq.triple.body));
        assert_eq!(ty, StType::arrow(StType::D, StType::prod(StType::D, StType::C)));
    }

    #[test]
    fn hypothesis_and_implication_clauses() {
        let th = readwrite_theory();
        let p = MainFormula::atom("P", vec![Term::var("c"), Term::var("c")]);
        let d = Derivation::ImpI {
            label: Ident::new("u"),
            hyp: p.clone(),
            premise: Box::new(Derivation::Hyp { label: Ident::new("u"), state: SF::Top }),
            outer: SF::Top,
        };
        let t = extract(&d, &th).unwrap();
        assert_eq!(
            t,
            StTerm::lam(Ident::new("x_u"), StType::C, StTerm::var(Ident::new("x_u")))
        );
    }

    #[test]
    fn disjunction_elimination_binds_both_branches() {
        let th = readwrite_theory();
        let p = MainFormula::atom("P", vec![Term::var("c"), Term::var("c")]);
        let ctx = Context::new()
            .push(Ident::new("h"), MainFormula::or(p.clone(), p.clone()))
            .unwrap();
        let d = Derivation::OrE {
            disj: Box::new(Derivation::Hyp { label: Ident::new("h"), state: SF::Top }),
            left_label: Ident::new("u"),
            left_case: Box::new(Derivation::Hyp { label: Ident::new("u"), state: SF::Top }),
            right_label: Ident::new("v"),
            right_case: Box::new(Derivation::Hyp { label: Ident::new("v"), state: SF::Top }),
        };
        check_in(&d, &ctx, &th).unwrap();
        let t = extract_in(&d, &ctx, &th).unwrap();
        let expected = StTerm::elim(
            StTerm::var(Ident::new("x_h")),
            StTerm::lam(Ident::new("x_u"), StType::C, StTerm::var(Ident::new("x_u"))),
            StTerm::lam(Ident::new("x_v"), StType::C, StTerm::var(Ident::new("x_v"))),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn existential_elimination_introduces_currying_wrapper() {
        let th = readwrite_theory();
        let p = |t: Term| MainFormula::atom("P", vec![t.clone(), t]);
        let ctx = Context::new()
            .push(
                Ident::new("h"),
                MainFormula::exists("x", p(Term::var("x"))),
            )
            .unwrap();
        let d = Derivation::ExistsE {
            exists: Box::new(Derivation::Hyp { label: Ident::new("h"), state: SF::Top }),
            var: Ident::new("y"),
            label: Ident::new("u"),
            body: Box::new(Derivation::ExistsI {
                witness: Term::var("y"),
                var: Ident::new("x"),
                template: p(Term::var("x")),
                from: Box::new(Derivation::Hyp { label: Ident::new("u"), state: SF::Top }),
            }),
        };
        check_in(&d, &ctx, &th).unwrap();
        let t = extract_in(&d, &ctx, &th).unwrap();
        // Raw form: (fun v -> ((fun y -> fun x_u -> y o x_u) (p0 v)) (p1 v)) x_h
        let raw = StTerm::app(
            StTerm::lam(
                Ident::new("v"),
                StType::prod(StType::D, StType::C),
                StTerm::app(
                    StTerm::app(
                        StTerm::lam(
                            Ident::new("y"),
                            StType::D,
                            StTerm::lam(
                                Ident::new("x_u"),
                                StType::C,
                                StTerm::comp(StTerm::var("y"), StTerm::var("x_u")),
                            ),
                        ),
                        StTerm::proj0(StTerm::var("v")),
                    ),
                    StTerm::proj1(StTerm::var("v")),
                ),
            ),
            StTerm::var(Ident::new("x_h")),
        );
        assert!(alpha_eq_st(&t, &raw), "got {t}");
        // Cleanup collapses the whole administrative stack: the argument is a
        // plain variable, so every beta step duplicates nothing effectful.
        let cleaned = cleanup_admin(&t);
        let expected = StTerm::comp(
            StTerm::proj0(StTerm::var(Ident::new("x_h"))),
            StTerm::proj1(StTerm::var(Ident::new("x_h"))),
        );
        assert_eq!(cleaned, expected);
    }

    #[test]
    fn cleanup_preserves_computed_applications() {
        // (fun n -> loop n x_y) (succ x) must stay a redex: the argument is a
        // genuine computation, not an administrative artifact.
        let applied = StTerm::app(
            StTerm::lam(
                Ident::new("n"),
                StType::D,
                StTerm::app(StTerm::var("n"), StTerm::var("x_y")),
            ),
            interp_term(&Term::app("succ", vec![Term::var("x")])),
        );
        assert_eq!(cleanup_admin(&applied), applied);
    }

    #[test]
    fn grounding_replaces_stray_individuals() {
        let th = readwrite_theory();
        // No nullary symbol declared: grounding has nothing to offer.
        assert!(canonical_ground(&th).is_none());
        let mut th2 = readwrite_theory();
        th2.sig.declare_fun(Ident::new("c0"), 0).unwrap();
        let t = StTerm::lam(
            Ident::new("y"),
            StType::D,
            StTerm::comp(StTerm::var("z"), StTerm::var("y")),
        );
        let grounded = free_var_ground(&t, &TypingCtx::new(), &th2).unwrap();
        assert_eq!(
            grounded,
            StTerm::lam(
                Ident::new("y"),
                StType::D,
                StTerm::comp(StTerm::fun(Ident::new("c0")), StTerm::var("y")),
            )
        );
        // A stray at function type is a typing error, not a substitution.
        let bad = StTerm::app(StTerm::var("f"), StTerm::fun(Ident::new("c0")));
        assert!(free_var_ground(&bad, &TypingCtx::new(), &th2).is_err());
    }

    #[test]
    fn schema_realizers_validate_against_their_triples() {
        let th = readwrite_theory();
        for schema in &th.saxioms {
            validate_saxiom_realizer(schema, &th).unwrap();
        }
        // A realizer at the wrong type is rejected.
        let mut bad = th.saxiom(&Ident::new("solve")).unwrap().clone();
        bad.realizer = RealizerSpec::Term(StTerm::cnst("read"));
        assert!(validate_saxiom_realizer(&bad, &th).is_err());
    }

    #[test]
    fn bot_e_extracts_to_canonical_inhabitant() {
        let mut th = readwrite_theory();
        th.sig.declare_pred(Ident::new("Q"), 0).unwrap();
        let ctx = Context::new().push(Ident::new("absurd"), MainFormula::Bot).unwrap();
        let target = MainFormula::imp(
            MainFormula::atom("Q", vec![]),
            Triple::new(SF::Top, MainFormula::atom("Q", vec![]), SF::Top),
        );
        let d = Derivation::BotE {
            from: Box::new(Derivation::Hyp { label: Ident::new("absurd"), state: SF::Top }),
            target: target.clone(),
            post: SF::Top,
        };
        check_in(&d, &ctx, &th).unwrap();
        let t = extract_in(&d, &ctx, &th).unwrap();
        assert_eq!(t, StTerm::default_of(StType::arrow(StType::C, StType::C)));
    }
}
