//! Bundle loading: a theory file plus its proof file, elaborated and ready
//! for the commands, and the dispatch from a theory's named model to a
//! concrete state model.

use std::path::{Path, PathBuf};

use hoare_core::kernel::{Derivation, Theory};
use hoare_core::models::insertsort::{InsertSort, DEFAULT_CELLS};
use hoare_core::models::querysolve::QuerySolve;
use hoare_core::models::swap3::Swap3;
use hoare_core::pl::embed_pl;
use hoare_core::syntax::Ident;

use crate::diag::Diagnostic;
use crate::parse::{parse_proof_file, parse_theory_file};
use crate::surface::{ProofFile, ProofItem, TheoryFile};

/// A theory together with the derivations proved against it. Embedded pure
/// proofs are already elaborated into kernel derivations here.
pub struct Bundle {
    /// Stem of the file pair, e.g. `sort3` for `sort3.slt`/`sort3.slp`.
    pub name: String,
    pub theory: Theory,
    pub theory_ast: TheoryFile,
    pub proof_ast: ProofFile,
    pub proofs: Vec<(Ident, Derivation)>,
}

impl Bundle {
    pub fn proof(&self, name: &str) -> Option<&Derivation> {
        self.proofs.iter().find(|(n, _)| n.as_str() == name).map(|(_, d)| d)
    }
}

/// Resolve `PATH` (with or without the `.slt` extension) to the theory file
/// and its sibling proof file. A missing proof file is fine — the bundle just
/// has no derivations.
pub fn load_bundle(path: &Path) -> Result<Bundle, Diagnostic> {
    let slt: PathBuf = if path.extension().is_some_and(|e| e == "slt") {
        path.to_path_buf()
    } else {
        path.with_extension("slt")
    };
    let name = slt
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "bundle".to_string());
    let slt_name = slt.display().to_string();
    let text = std::fs::read_to_string(&slt)
        .map_err(|e| Diagnostic::error(&slt_name, None, format!("cannot read: {e}")))?;
    let (theory_ast, theory) = parse_theory_file(&slt_name, &text)?;

    let slp = slt.with_extension("slp");
    let (proof_ast, proofs) = if slp.exists() {
        let slp_name = slp.display().to_string();
        let text = std::fs::read_to_string(&slp)
            .map_err(|e| Diagnostic::error(&slp_name, None, format!("cannot read: {e}")))?;
        let ast = parse_proof_file(&slp_name, &text, &theory)?;
        let proofs = elaborate_proofs(&slp_name, &ast, &theory)?;
        (ast, proofs)
    } else {
        (ProofFile::default(), Vec::new())
    };

    Ok(Bundle { name, theory, theory_ast, proof_ast, proofs })
}

fn elaborate_proofs(
    file: &str,
    ast: &ProofFile,
    theory: &Theory,
) -> Result<Vec<(Ident, Derivation)>, Diagnostic> {
    let mut out = Vec::new();
    for entry in &ast.entries {
        let d = match &entry.item {
            ProofItem::Direct(d) => d.clone(),
            ProofItem::Embedded { alpha, proof } => {
                embed_pl(proof, alpha, theory).map_err(|e| {
                    Diagnostic::error(
                        file,
                        None,
                        format!("derivation `{}`: embedding failed: {e}", entry.name),
                    )
                })?
            }
        };
        out.push((entry.name.clone(), d));
    }
    Ok(out)
}

/// The concrete state models a theory can name. The semantics functions are
/// generic over the model, so commands go through [`with_model!`] to pick the
/// static type.
pub enum AnyModel {
    Query(QuerySolve),
    Swap3(Swap3),
    Insert(InsertSort),
}

impl AnyModel {
    pub fn for_theory(th: &Theory) -> Option<AnyModel> {
        match th.model.as_ref()?.as_str() {
            "querysolve" => Some(AnyModel::Query(QuerySolve::new())),
            "swap3" => Some(AnyModel::Swap3(Swap3)),
            "insertsort" => Some(AnyModel::Insert(InsertSort::new(DEFAULT_CELLS))),
            _ => None,
        }
    }
}

/// Run one expression with `m` bound to the concrete model value.
macro_rules! with_model {
    ($any:expr, $m:ident => $body:expr) => {
        match $any {
            $crate::load::AnyModel::Query($m) => $body,
            $crate::load::AnyModel::Swap3($m) => $body,
            $crate::load::AnyModel::Insert($m) => $body,
        }
    };
}
pub(crate) use with_model;

#[cfg(test)]
mod tests {
    use super::*;

    fn write_bundle(dir: &Path, stem: &str, slt: &str, slp: Option<&str>) -> PathBuf {
        let base = dir.join(stem);
        std::fs::write(base.with_extension("slt"), slt).unwrap();
        if let Some(p) = slp {
            std::fs::write(base.with_extension("slp"), p).unwrap();
        }
        base
    }

    #[test]
    fn loads_a_pair_and_elaborates_embeddings() {
        let dir = tempfile::tempdir().unwrap();
        let base = write_bundle(
            dir.path(),
            "tiny",
            "theory tiny\nmode sl\npred P 0\n",
            Some("derivation id (embed {true} (imp_i u [P] (hyp u)))\n"),
        );
        let b = load_bundle(&base).unwrap();
        assert_eq!(b.name, "tiny");
        assert_eq!(b.proofs.len(), 1);
        // The embedding produced a kernel derivation that checks.
        let seq = hoare_core::kernel::check(b.proof("id").unwrap(), &b.theory).unwrap();
        assert_eq!(seq.triple.pre, hoare_core::syntax::StateFormula::Top);
    }

    #[test]
    fn missing_proof_file_is_an_empty_bundle() {
        let dir = tempfile::tempdir().unwrap();
        let base = write_bundle(dir.path(), "solo", "theory solo\nmode sa\n", None);
        let b = load_bundle(&base).unwrap();
        assert!(b.proofs.is_empty());
    }

    #[test]
    fn model_dispatch_follows_the_theory() {
        let dir = tempfile::tempdir().unwrap();
        let base =
            write_bundle(dir.path(), "m", "theory m\nmodel swap3\n", None);
        let b = load_bundle(&base).unwrap();
        let any = AnyModel::for_theory(&b.theory).unwrap();
        let name = with_model!(&any, m => hoare_core::semantics::StateModel::name(m));
        assert_eq!(name, "swap3");
    }

    #[test]
    fn explicit_extension_also_resolves() {
        let dir = tempfile::tempdir().unwrap();
        let base = write_bundle(dir.path(), "x", "theory x\nmode sl\n", None);
        let b = load_bundle(&base.with_extension("slt")).unwrap();
        assert_eq!(b.name, "x");
    }
}
