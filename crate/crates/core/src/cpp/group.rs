use crate::diag::{Diagnostic, ElemPath};
use crate::hints::{self, SetKind};
use crate::model::{Hint, Identifier, Model};

/// The multiplicative group a protocol computes in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSpec {
    /// Exponent set.
    pub naturals: Identifier,
    /// Group element set.
    pub group: Identifier,
    pub generator: Identifier,
    pub modulus: Identifier,
    pub exp: Identifier,
    pub security_param: u32,
}

fn no_group(msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(ElemPath::root(), "no-group-structure", msg)
}

fn ambiguous(what: &str, candidates: &[&Identifier]) -> Diagnostic {
    let names: Vec<_> = candidates.iter().map(|c| format!("`{c}`")).collect();
    Diagnostic::error(ElemPath::root(), "ambiguous-group", format!("several candidate {what}s: {}", names.join(", ")))
}

/// Picks the single candidate, using the hint labels only to break ties.
fn pick<'a>(
    what: &str,
    candidates: Vec<(&'a Identifier, Option<&Hint>)>,
    labels: &[&str],
) -> Result<&'a Identifier, Diagnostic> {
    match candidates.len() {
        0 => Err(no_group(format!("no {what} found"))),
        1 => Ok(candidates[0].0),
        _ => {
            let hinted: Vec<_> = candidates.iter().filter(|(_, h)| h.is_some_and(|h| h.is_any(labels))).collect();
            if hinted.len() == 1 {
                Ok(hinted[0].0)
            } else {
                let all: Vec<_> = candidates.iter().map(|(id, _)| *id).collect();
                Err(ambiguous(what, &all))
            }
        }
    }
}

/// Finds the exponent and group sets, the exponentiation function
/// `group × naturals → group`, a global group constant (generator) and a
/// global naturals constant (modulus).
pub fn detect_group(m: &Model) -> Result<GroupSpec, Diagnostic> {
    let sets_of = |kind| {
        m.sets.iter().filter(|s| hints::set_kind(s) == kind).map(|s| (&s.id, s.hint.as_ref())).collect::<Vec<_>>()
    };
    let naturals = pick("exponent set", sets_of(SetKind::Naturals), &["naturals"])?;
    let group = pick("group set", sets_of(SetKind::Group), &["group"])?;

    let exps = m
        .functions
        .iter()
        .filter(|f| f.params.len() == 2 && f.params[0] == *group && f.params[1] == *naturals && f.result == *group)
        .map(|f| (&f.id, f.hint.as_ref()))
        .collect();
    let exp = pick("exponentiation function", exps, &["group exponentiation", "modular exponentiation"])?;

    let consts_of = |set: &Identifier| {
        m.variables
            .iter()
            .filter(|v| v.is_const() && v.is_global() && v.set == *set)
            .map(|v| (v.id(), v.hint.as_ref()))
            .collect::<Vec<_>>()
    };
    let generator = pick("generator", consts_of(group), &["group generator", "generator"])?;
    let modulus = pick("modulus", consts_of(naturals), &["group modulus", "modulus"])?;

    Ok(GroupSpec {
        naturals: naturals.clone(),
        group: group.clone(),
        generator: generator.clone(),
        modulus: modulus.clone(),
        exp: exp.clone(),
        security_param: m.security_bits(),
    })
}
