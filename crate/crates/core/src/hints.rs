//! Interpretation of hints shared by the interpreter and the exporters.

use crate::model::{FuncDecl, Model, SetDecl, VarDecl};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    Naturals,
    Group,
    Boolean,
    Opaque,
}

const NATURALS: &[&str] = &["naturals", "natural numbers", "N", "ℕ", "nat"];
const GROUP: &[&str] = &["group", "Zp", "Z_p", "ℤ_p", "cyclic group", "multiplicative group"];
const BOOLEAN: &[&str] = &["boolean", "bool"];

pub fn set_kind(set: &SetDecl) -> SetKind {
    if let Some(h) = &set.hint {
        if h.is_any(NATURALS) {
            return SetKind::Naturals;
        }
        if h.is_any(GROUP) {
            return SetKind::Group;
        }
        if h.is_any(BOOLEAN) {
            return SetKind::Boolean;
        }
        return SetKind::Opaque;
    }
    match set.id.as_str() {
        "N" | "Nat" => SetKind::Naturals,
        "Zp" | "Z_p" => SetKind::Group,
        "Bool" | "Boolean" => SetKind::Boolean,
        _ => SetKind::Opaque,
    }
}

pub fn set_kind_of(model: &Model, set: &str) -> SetKind {
    model.set(set).map_or(SetKind::Opaque, set_kind)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FuncKind {
    GroupExp,
    Equality,
    Pairing,
    First,
    Second,
    PublicKey,
    PrivateKey,
    AsymEncrypt,
    AsymDecrypt,
}

const FUNC_HINTS: &[(FuncKind, &[&str])] = &[
    (FuncKind::GroupExp, &["group exponentiation", "modular exponentiation"]),
    (FuncKind::Equality, &["equality", "equals"]),
    (FuncKind::Pairing, &["pairing", "pair", "concatenation"]),
    (FuncKind::First, &["first projection", "fst"]),
    (FuncKind::Second, &["second projection", "snd"]),
    (FuncKind::PublicKey, &["public key", "public key derivation"]),
    (FuncKind::PrivateKey, &["private key", "private key derivation"]),
    (FuncKind::AsymEncrypt, &["asymmetric encryption"]),
    (FuncKind::AsymDecrypt, &["asymmetric decryption"]),
];

/// Built-in meaning of a function. Hints take precedence; without a hint only
/// the group exponentiation signature and the conventional `eq` are recognised.
pub fn func_kind(model: &Model, f: &FuncDecl) -> Option<FuncKind> {
    if let Some(h) = &f.hint {
        return FUNC_HINTS.iter().find(|(_, labels)| h.is_any(labels)).map(|(k, _)| *k);
    }
    if is_group_exp_signature(model, f) {
        return Some(FuncKind::GroupExp);
    }
    (f.id == "eq" && f.arity() == 2).then_some(FuncKind::Equality)
}

/// `Zp × N → Zp`
pub fn is_group_exp_signature(model: &Model, f: &FuncDecl) -> bool {
    f.params.len() == 2
        && set_kind_of(model, f.params[0].as_str()) == SetKind::Group
        && set_kind_of(model, f.params[1].as_str()) == SetKind::Naturals
        && set_kind_of(model, f.result.as_str()) == SetKind::Group
}

pub fn is_private_function(f: &FuncDecl) -> bool {
    f.hint.as_ref().is_some_and(|h| h.as_str().to_ascii_lowercase().contains("private"))
}

pub fn is_private_variable(v: &VarDecl) -> bool {
    v.hint.as_ref().is_some_and(|h| h.as_str().to_ascii_lowercase().contains("private"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;
    use crate::xml;

    #[test]
    fn dhke_kinds() {
        let m = xml::parse(samples::DHKE).unwrap();
        assert_eq!(set_kind_of(&m, "N"), SetKind::Naturals);
        assert_eq!(set_kind_of(&m, "Zp"), SetKind::Group);
        assert_eq!(set_kind_of(&m, "Bool"), SetKind::Boolean);
        assert_eq!(func_kind(&m, m.function("exp").unwrap()), Some(FuncKind::GroupExp));
        assert_eq!(func_kind(&m, m.function("eq").unwrap()), Some(FuncKind::Equality));
    }

    #[test]
    fn unhinted_exp_recognised_by_signature() {
        let mut m = xml::parse(samples::DHKE).unwrap();
        for f in &mut m.functions {
            f.hint = None;
        }
        assert_eq!(func_kind(&m, m.function("exp").unwrap()), Some(FuncKind::GroupExp));
        assert_eq!(func_kind(&m, m.function("eq").unwrap()), Some(FuncKind::Equality));
    }
}
