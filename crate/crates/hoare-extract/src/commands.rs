//! The five commands. Each returns whether the work it did succeeded;
//! anything that stops a command from even starting (unreadable file, syntax
//! error, bad flag value) surfaces as a [`Diagnostic`] instead, so the binary
//! can map the three situations to the three exit codes.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use hoare_core::extract::{cleanup_admin, extract, real_type};
use hoare_core::kernel::{check, instantiate_saxiom, Derivation, Theory};
use hoare_core::semantics::{
    check_realizes, eval_traced, Budget, Env, StateModel, Trace, Value, Verdict,
};
use hoare_core::stlang::{interp_term, simplify_units, typecheck, StTerm, TypingCtx};
use hoare_core::syntax::{Ident, Term};

use crate::diag::Diagnostic;
use crate::load::{load_bundle, with_model, AnyModel, Bundle};

/// Did the command's subject pass? (Loading problems are `Err` instead.)
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn and(self, other: Outcome) -> Outcome {
        if self == Outcome::Pass && other == Outcome::Pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

/// Map `f` over `items` on up to `jobs` threads, returning results in input
/// order — output is identical whatever the thread count.
fn par_map<T: Sync, R: Send>(
    items: &[T],
    jobs: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(items.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.unwrap()).collect()
}

fn selected<'b>(
    bundle: &'b Bundle,
    name: Option<&str>,
) -> Result<Vec<(Ident, Derivation)>, Diagnostic> {
    match name {
        Some(n) => match bundle.proof(n) {
            Some(d) => Ok(vec![(Ident::new(n), d.clone())]),
            None => Err(Diagnostic::error(
                &bundle.name,
                None,
                format!(
                    "no derivation `{n}` (have: {})",
                    bundle
                        .proofs
                        .iter()
                        .map(|(id, _)| id.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            )),
        },
        None => Ok(bundle.proofs.clone()),
    }
}

fn resolve_model(theory: &Theory, flag: Option<&str>) -> Result<AnyModel, Diagnostic> {
    if let Some(name) = flag {
        let mut scratch = theory.clone();
        scratch.model = Some(Ident::new(name));
        return AnyModel::for_theory(&scratch).ok_or_else(|| {
            Diagnostic::error(
                "<args>",
                None,
                format!("unknown model `{name}` (available: insertsort, querysolve, swap3)"),
            )
        });
    }
    AnyModel::for_theory(theory).ok_or_else(|| {
        Diagnostic::error(
            "<args>",
            None,
            format!("theory `{}` names no model; pass --model", theory.name),
        )
    })
}

// ---------------------------------------------------------------------------
// check

pub fn cmd_check(path: &Path, jobs: usize) -> Result<Outcome, Diagnostic> {
    let bundle = load_bundle(path)?;
    if bundle.proofs.is_empty() {
        println!("{}: no derivations", bundle.name);
        return Ok(Outcome::Pass);
    }
    let rows = par_map(&bundle.proofs, jobs, |(name, d)| match check(d, &bundle.theory) {
        Ok(seq) => (Outcome::Pass, format!("{name}: {seq} ok")),
        Err(e) => (Outcome::Fail, format!("{name}: error: {e}")),
    });
    let mut all = Outcome::Pass;
    for (ok, line) in rows {
        println!("{line}");
        all = all.and(ok);
    }
    Ok(all)
}

// ---------------------------------------------------------------------------
// extract

pub struct ExtractOpts {
    pub derivation: Option<String>,
    pub cleanup: bool,
    pub simplify: bool,
    pub json: bool,
    pub jobs: usize,
}

pub fn cmd_extract(path: &Path, opts: &ExtractOpts) -> Result<Outcome, Diagnostic> {
    let bundle = load_bundle(path)?;
    let chosen = selected(&bundle, opts.derivation.as_deref())?;
    let th = &bundle.theory;
    let rows = par_map(&chosen, opts.jobs, |(name, d)| {
        let verdict: Result<StTerm, String> = (|| {
            check(d, th).map_err(|e| format!("does not check: {e}"))?;
            let mut t = extract(d, th).map_err(|e| e.to_string())?;
            if opts.cleanup {
                t = cleanup_admin(&t);
            }
            if opts.simplify {
                let ctx = TypingCtx::new();
                let (s, _) =
                    simplify_units(&t, &ctx, &th.consts, &th.sig).map_err(|e| e.to_string())?;
                t = s;
            }
            Ok(t)
        })();
        (name.clone(), verdict)
    });
    let mut all = Outcome::Pass;
    if opts.json {
        let mut map = serde_json::Map::new();
        for (name, r) in &rows {
            match r {
                Ok(t) => {
                    map.insert(name.to_string(), serde_json::to_value(t).unwrap());
                }
                Err(e) => {
                    all = Outcome::Fail;
                    map.insert(name.to_string(), serde_json::json!({ "error": e }));
                }
            }
        }
        println!("{}", serde_json::to_string_pretty(&serde_json::Value::Object(map)).unwrap());
    } else {
        for (name, r) in &rows {
            match r {
                Ok(t) => println!("{name}: {t}"),
                Err(e) => {
                    all = Outcome::Fail;
                    println!("{name}: error: {e}");
                }
            }
        }
    }
    Ok(all)
}

// ---------------------------------------------------------------------------
// run

pub struct RunOpts {
    pub derivation: Option<String>,
    pub model: Option<String>,
    pub state: Option<String>,
    pub args: Vec<u64>,
    pub trace: bool,
    pub seed: u64,
}

pub fn cmd_run(path: &Path, opts: &RunOpts) -> Result<Outcome, Diagnostic> {
    let bundle = load_bundle(path)?;
    let chosen = selected(&bundle, opts.derivation.as_deref())?;
    let (name, d) = match chosen.as_slice() {
        [one] => one,
        [] => return Err(Diagnostic::error(&bundle.name, None, "no derivations to run")),
        _ => {
            return Err(Diagnostic::error(
                &bundle.name,
                None,
                "several derivations in this bundle; pick one with --derivation",
            ))
        }
    };
    let th = &bundle.theory;
    if let Err(e) = check(d, th) {
        println!("{name}: error: does not check: {e}");
        return Ok(Outcome::Fail);
    }
    let term = cleanup_admin(&extract(d, th).map_err(|e| {
        Diagnostic::error(&bundle.name, None, format!("extraction failed: {e}"))
    })?);
    let any = resolve_model(th, opts.model.as_deref())?;
    with_model!(&any, m => run_on(m, &term, opts))
}

fn run_on<M: StateModel>(
    model: &M,
    term: &StTerm,
    opts: &RunOpts,
) -> Result<Outcome, Diagnostic> {
    let state: M::State = match &opts.state {
        Some(text) => serde_json::from_str(text)
            .map_err(|e| Diagnostic::error("<state>", None, format!("invalid state: {e}")))?,
        None => model
            .sample_states(opts.seed, 1)
            .into_iter()
            .next()
            .ok_or_else(|| Diagnostic::error("<state>", None, "model yields no states"))?,
    };
    // Fold the arguments into the term itself so the whole execution runs —
    // and traces — as one evaluation.
    let mut whole = term.clone();
    for a in &opts.args {
        whole = StTerm::app(whole, interp_term(&Term::num(*a)));
    }
    let mut trace = Trace::new();
    match eval_traced(&Env::new(), &whole, state, model, &mut trace) {
        Ok((value, after)) => {
            println!("value: {}", value_json(&value));
            println!("state: {}", serde_json::to_string(&after).unwrap());
            if opts.trace {
                println!("trace:");
                for ev in &trace.events {
                    let args = ev
                        .args
                        .iter()
                        .map(|a| value_json(a).to_string())
                        .collect::<Vec<_>>()
                        .join(", ");
                    println!(
                        "  {}({args}) : {} -> {}",
                        ev.constant,
                        serde_json::to_string(&ev.before).unwrap(),
                        serde_json::to_string(&ev.after).unwrap()
                    );
                }
            }
            Ok(Outcome::Pass)
        }
        Err(e) => {
            println!("error: {e}");
            Ok(Outcome::Fail)
        }
    }
}

/// Values as JSON: naturals are numbers, the trivial value is `null`, pairs
/// are two-element arrays, sums keep their flag and both components, and
/// function values are opaque.
pub fn value_json(v: &Value) -> serde_json::Value {
    match v {
        Value::NatV(n) => serde_json::json!(n),
        Value::UnitV => serde_json::Value::Null,
        Value::PairV(a, b) => serde_json::json!([value_json(a), value_json(b)]),
        Value::SumV { flag, left, right } => serde_json::json!({
            "flag": flag,
            "left": value_json(left),
            "right": value_json(right),
        }),
        Value::ClosureV { .. } | Value::NativeV(_) => serde_json::json!("<fun>"),
    }
}

// ---------------------------------------------------------------------------
// verify

pub struct VerifyOpts {
    pub derivation: Option<String>,
    pub model: Option<String>,
    pub samples: usize,
    pub seed: u64,
    pub jobs: usize,
}

pub fn cmd_verify(path: &Path, opts: &VerifyOpts) -> Result<Outcome, Diagnostic> {
    let bundle = load_bundle(path)?;
    let chosen = selected(&bundle, opts.derivation.as_deref())?;
    if chosen.is_empty() {
        return Err(Diagnostic::error(&bundle.name, None, "no derivations to verify"));
    }
    let th = &bundle.theory;
    let any = resolve_model(th, opts.model.as_deref())?;
    let budget = Budget { state_samples: opts.samples, d_samples: 8, seed: opts.seed };

    struct Row {
        name: String,
        line: String,
        json: serde_json::Value,
        ok: Outcome,
    }

    let rows = par_map(&chosen, opts.jobs, |(name, d)| {
        let r: Result<(String, serde_json::Value, Outcome), String> = (|| {
            let seq = check(d, th).map_err(|e| format!("does not check: {e}"))?;
            let term = cleanup_admin(&extract(d, th).map_err(|e| e.to_string())?);
            with_model!(&any, m => check_realizes(&term, &seq.triple, m, &budget)
                .map(|v| verdict_render(&v))
                .map_err(|e| format!("evaluation failed: {e}")))
        })();
        match r {
            Ok((line, json, ok)) => Row {
                name: name.to_string(),
                line: format!("{name}: {line}"),
                json,
                ok,
            },
            Err(e) => Row {
                name: name.to_string(),
                line: format!("{name}: error: {e}"),
                json: serde_json::json!({ "verdict": "error", "detail": e }),
                ok: Outcome::Fail,
            },
        }
    });

    let mut all = Outcome::Pass;
    let mut results = Vec::new();
    for row in rows {
        println!("{}", row.line);
        let mut entry = serde_json::Map::new();
        entry.insert("name".into(), serde_json::json!(row.name));
        match row.json {
            serde_json::Value::Object(m) => entry.extend(m),
            other => {
                entry.insert("verdict".into(), other);
            }
        }
        results.push(serde_json::Value::Object(entry));
        all = all.and(row.ok);
    }
    let report = serde_json::json!({
        "bundle": bundle.name,
        "samples": opts.samples,
        "seed": opts.seed,
        "results": results,
    });
    println!("report: {report}");
    Ok(all)
}

fn verdict_render<S: serde::Serialize>(
    v: &Verdict<S>,
) -> (String, serde_json::Value, Outcome) {
    match v {
        Verdict::Pass { checks } => (
            format!("pass ({checks} checks)"),
            serde_json::json!({ "verdict": "pass", "checks": checks }),
            Outcome::Pass,
        ),
        Verdict::Fail(cex) => {
            let state = serde_json::to_value(&cex.state).unwrap();
            let assignment: Vec<serde_json::Value> = cex
                .assignment
                .iter()
                .map(|(x, n)| serde_json::json!([x.to_string(), n]))
                .collect();
            (
                format!(
                    "FAIL: {} [state {}{}]",
                    cex.detail,
                    state,
                    if assignment.is_empty() {
                        String::new()
                    } else {
                        format!(
                            ", with {}",
                            cex.assignment
                                .iter()
                                .map(|(x, n)| format!("{x} = {n}"))
                                .collect::<Vec<_>>()
                                .join(", ")
                        )
                    }
                ),
                serde_json::json!({
                    "verdict": "fail",
                    "detail": cex.detail,
                    "state": state,
                    "assignment": assignment,
                }),
                Outcome::Fail,
            )
        }
        Verdict::Inconclusive => (
            "inconclusive (no sampled state satisfied the precondition)".to_string(),
            serde_json::json!({ "verdict": "inconclusive" }),
            Outcome::Fail,
        ),
    }
}

// ---------------------------------------------------------------------------
// selftest

/// Built-in sanity pass over the three models: schema realizers typecheck,
/// and each one passes the bounded realizability check on its own axiom.
pub fn cmd_selftest(seed: u64) -> Result<Outcome, Diagnostic> {
    let mut all = Outcome::Pass;
    let budget = Budget { state_samples: 24, d_samples: 4, seed };

    for theory in [
        hoare_core::models::querysolve::theory(),
        hoare_core::models::swap3::theory(),
        hoare_core::models::insertsort::theory(),
    ] {
        let model_name = theory.model.clone().unwrap();
        match hoare_core::models::validate_realizers(&theory) {
            Ok(()) => println!("{model_name}: realizer typing ok"),
            Err(e) => {
                println!("{model_name}: realizer typing FAILED: {e}");
                all = Outcome::Fail;
                continue;
            }
        }
        let any = AnyModel::for_theory(&theory).unwrap();
        for schema in &theory.saxioms {
            let (terms, formulas) = selftest_instantiation(&theory, &schema.name);
            let inst = match instantiate_saxiom(schema, &terms, &formulas, &theory.sig) {
                Ok(i) => i,
                Err(e) => {
                    println!("{model_name}: {}: instantiation FAILED: {e}", schema.name);
                    all = Outcome::Fail;
                    continue;
                }
            };
            let rendered: Result<(String, Outcome), String> = with_model!(&any, m => {
                match check_realizes(&inst.realizer, &inst.triple, m, &budget) {
                    Ok(Verdict::Pass { checks }) => {
                        Ok((format!("realizes its axiom ({checks} checks)"), Outcome::Pass))
                    }
                    Ok(other) => {
                        let (line, _, _) = verdict_render(&other);
                        Ok((line, Outcome::Fail))
                    }
                    Err(e) => Err(format!("evaluation failed: {e}")),
                }
            });
            match rendered {
                Ok((line, ok)) => {
                    println!("{model_name}: {}: {line}", schema.name);
                    all = all.and(ok);
                }
                Err(e) => {
                    println!("{model_name}: {}: {e}", schema.name);
                    all = Outcome::Fail;
                }
            }
        }
    }
    println!("typing and realizability spot checks {}", match all {
        Outcome::Pass => "passed",
        Outcome::Fail => "FAILED",
    });
    Ok(all)
}

/// A representative instantiation per schema: metavariables stay free so the
/// harness samples them, except shapes that constrain the formula argument.
fn selftest_instantiation(
    theory: &Theory,
    schema: &Ident,
) -> (BTreeMap<Ident, Term>, BTreeMap<Ident, hoare_core::syntax::StateFormula>) {
    use hoare_core::syntax::StateFormula;
    let s = theory.saxiom(schema).unwrap();
    let mut terms = BTreeMap::new();
    let mut formulas = BTreeMap::new();
    if schema.as_str() == "swap" {
        // The swap schema wants concrete locations and a conjunction of
        // ordering atoms.
        terms.insert(Ident::new("l"), Term::app("1", vec![]));
        terms.insert(Ident::new("l2"), Term::app("2", vec![]));
        formulas.insert(
            Ident::new("A"),
            StateFormula::atom("le", vec![Term::app("2", vec![]), Term::app("1", vec![])]),
        );
        return (terms, formulas);
    }
    for mv in &s.term_metavars {
        terms.insert(mv.clone(), Term::var(mv.clone()));
    }
    for mv in &s.formula_metavars {
        formulas.insert(mv.clone(), StateFormula::Top);
    }
    (terms, formulas)
}

// ---------------------------------------------------------------------------

/// Extraction plus typing for one derivation — shared by tests that sweep the
/// corpus.
pub fn extract_and_type(d: &Derivation, th: &Theory) -> Result<(StTerm, bool), String> {
    let seq = check(d, th).map_err(|e| e.to_string())?;
    let t = extract(d, th).map_err(|e| e.to_string())?;
    let mut ctx = TypingCtx::new();
    let mut free = std::collections::BTreeSet::new();
    seq.triple.free_vars(&mut free);
    for v in free {
        ctx = ctx.bind(v, hoare_core::stlang::StType::D);
    }
    let ty = typecheck(&t, &ctx, &th.consts, &th.sig).map_err(|e| e.to_string())?;
    Ok((t, ty == real_type(&seq.triple.body)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_keeps_input_order() {
        let items: Vec<usize> = (0..40).collect();
        let doubled = par_map(&items, 4, |x| x * 2);
        assert_eq!(doubled, (0..40).map(|x| x * 2).collect::<Vec<_>>());
        let single = par_map(&items, 1, |x| x * 2);
        assert_eq!(doubled, single);
    }

    #[test]
    fn value_json_shapes() {
        let pair = Value::PairV(Box::new(Value::NatV(8)), Box::new(Value::UnitV));
        assert_eq!(value_json(&pair).to_string(), "[8,null]");
        let sum = Value::SumV {
            flag: true,
            left: Box::new(Value::UnitV),
            right: Box::new(Value::NatV(1)),
        };
        assert_eq!(
            value_json(&sum).to_string(),
            "{\"flag\":true,\"left\":null,\"right\":1}"
        );
    }

    #[test]
    fn selftest_passes_on_the_builtin_models() {
        assert_eq!(cmd_selftest(0).unwrap(), Outcome::Pass);
    }
}
