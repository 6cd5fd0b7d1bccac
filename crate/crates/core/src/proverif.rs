//! Translation to the ProVerif applied pi calculus.
//!
//! Each entity becomes a replicated process `proc_<Entity>`. Probabilistic
//! assignments become `new`, deterministic ones `let`, and events become
//! `out`/`in` on the public channel `c` (or a private channel for named
//! authenticated or secure channels). A single equality correctness property
//! is instrumented with one table per entity, an `agreement` process and a
//! reachability query.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use crate::diag::{Diagnostic, ElemPath};
use crate::hints::{self, FuncKind};
use crate::model::*;
use crate::names::sanitize;
use crate::validator;

const RESERVED: &[&str] = &[
    "among",
    "axiom",
    "bitstring",
    "bool",
    "c",
    "channel",
    "choice",
    "clauses",
    "const",
    "def",
    "diff",
    "do",
    "elimtrue",
    "else",
    "equation",
    "equivalence",
    "event",
    "expand",
    "fail",
    "false",
    "forall",
    "foreach",
    "free",
    "fun",
    "get",
    "if",
    "implementation",
    "in",
    "insert",
    "lemma",
    "let",
    "letfun",
    "letproc",
    "nat",
    "new",
    "noninterf",
    "not",
    "nounif",
    "or",
    "otherwise",
    "out",
    "param",
    "phase",
    "pred",
    "proba",
    "process",
    "proof",
    "public_vars",
    "putbegin",
    "query",
    "reduc",
    "restriction",
    "secret",
    "select",
    "set",
    "suchthat",
    "sync",
    "table",
    "then",
    "true",
    "type",
    "weaksecret",
    "yield",
    "agreement",
    "correctness",
    "k",
];

/// Public channel shared by all unnamed and insecure messages.
pub const PUBLIC_CHANNEL: &str = "c";

pub fn name(id: &str) -> String {
    sanitize(id, RESERVED)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitMode {
    /// Variables carry their type, as in `in(c, x: T)`.
    Typed,
    Untyped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    /// Types, channels, constants, functions and equations.
    Preamble,
    /// Tables, events and queries of the correctness property.
    CorrectnessDecls,
    Processes,
    Agreement,
    Main,
}

/// A complete ProVerif script, split into sections whose concatenation is `text`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiText {
    pub sections: Vec<(Section, String)>,
    pub text: String,
}

impl PiText {
    pub fn section(&self, s: Section) -> Option<&str> {
        self.sections.iter().find(|(k, _)| *k == s).map(|(_, t)| t.as_str())
    }
}

pub fn emit_term(m: &Model, t: &Term, mode: EmitMode) -> String {
    match t {
        Term::Var(v) => {
            let n = name(v.id.as_str());
            match (mode, m.variable(v.id.as_str())) {
                (EmitMode::Typed, Some(d)) => format!("{n}: {}", name(d.set.as_str())),
                _ => n,
            }
        }
        Term::App(app) => emit_application(m, app),
    }
}

fn emit_application(m: &Model, app: &Application) -> String {
    let args: Vec<_> = app.args.iter().map(|a| emit_term(m, a, EmitMode::Untyped)).collect();
    format!("{}({})", name(app.function.as_str()), args.join(", "))
}

/// `new x: T;` or `let x = M in`.
pub fn emit_assignment(m: &Model, a: &Assignment) -> String {
    let target = name(a.target.id.as_str());
    match &a.source {
        AssignSource::Sample(set) => format!("new {target}: {};", name(set.as_str())),
        AssignSource::Term(t) => format!("let {target} = {} in", emit_term(m, t, EmitMode::Untyped)),
    }
}

fn payload(m: &Model, vars: &[VarRef], mode: EmitMode) -> String {
    let parts: Vec<_> = vars.iter().map(|v| emit_term(m, &Term::Var(v.clone()), mode)).collect();
    if parts.len() == 1 {
        parts.into_iter().next().unwrap_or_default()
    } else {
        format!("({})", parts.join(", "))
    }
}

fn channel_name(msg: &Message) -> String {
    match &msg.channel {
        Some(c) if c.modifier != ChannelModifier::Insecure => format!("ch_{}", c.id),
        _ => PUBLIC_CHANNEL.to_owned(),
    }
}

/// Output statements of a send. Authenticated channels also leak the
/// payload to the attacker on the public channel.
pub fn emit_send(m: &Model, msg: &Message) -> Vec<String> {
    let p = payload(m, &msg.send, EmitMode::Untyped);
    let ch = channel_name(msg);
    let mut out = vec![format!("out({ch}, {p});")];
    if msg.channel.as_ref().is_some_and(|c| c.modifier == ChannelModifier::Auth) {
        out.push(format!("out({PUBLIC_CHANNEL}, {p});"));
    }
    out
}

pub fn emit_receive(m: &Model, msg: &Message) -> String {
    format!("in({}, {});", channel_name(msg), payload(m, &msg.recv, EmitMode::Typed))
}

/// Correctness instrumentation for one equality property.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correctness {
    /// Table, event and query declarations.
    pub declarations: String,
    /// The `agreement` process definition.
    pub agreement: String,
    /// `insert` statement appended to each participating entity's process.
    pub inserts: BTreeMap<Identifier, String>,
}

fn unsupported(path: ElemPath, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(path, "unsupported-relation", msg)
}

/// Table suffix per entity: the first letter when those are unique,
/// otherwise the full identifier.
pub fn table_tags(m: &Model) -> BTreeMap<Identifier, String> {
    let entities = &m.protocol.entities;
    let firsts: HashSet<char> = entities.iter().filter_map(|e| e.id.as_str().chars().next()).collect();
    let short = firsts.len() == entities.len();
    entities
        .iter()
        .map(|e| {
            let tag = if short { e.id.as_str()[..1].to_owned() } else { e.id.as_str().to_owned() };
            (e.id.clone(), tag)
        })
        .collect()
}

/// Instrumentation for the model's correctness property, if it has one.
pub fn emit_correctness(m: &Model) -> Result<Option<Correctness>, Diagnostic> {
    let props = &m.protocol.properties;
    let Some(prop) = props.first() else { return Ok(None) };
    let path = ElemPath::protocol().nth("correctness", 0);
    if props.len() > 1 {
        return Err(unsupported(
            ElemPath::protocol().nth("correctness", 1),
            "only one correctness property can be exported",
        ));
    }
    let rel = &prop.relation;
    let is_eq = m.function(rel.function.as_str()).is_some_and(|f| hints::func_kind(m, f) == Some(FuncKind::Equality));
    if !is_eq || rel.args.len() != 2 {
        return Err(unsupported(path, format!("`{}` is not a binary equality", rel.function)));
    }

    let tags = table_tags(m);
    let mut sides = Vec::new();
    for arg in &rel.args {
        let Term::Var(v) = arg else {
            return Err(unsupported(path, "equality arguments must be variables"));
        };
        let assigned = m
            .protocol
            .finalise
            .iter()
            .find_map(|f| f.statements.iter().rev().find(|a| a.target.id == v.id).map(|a| (&f.entity, a)));
        let Some((entity, a)) = assigned else {
            return Err(unsupported(path, format!("`{}` is not assigned in a finalise block", v.id)));
        };
        let AssignSource::Term(value) = &a.source else {
            return Err(unsupported(path, format!("`{}` is sampled, not computed", v.id)));
        };
        let set = &m.variable(v.id.as_str()).expect("validated").set;
        sides.push((entity, &v.id, value, set));
    }
    let (a, b) = (&sides[0], &sides[1]);
    if a.0 == b.0 {
        return Err(unsupported(path, format!("both sides are computed by `{}`", a.0)));
    }
    if a.3 != b.3 {
        return Err(unsupported(path, format!("`{}` and `{}` have different types", a.1, b.1)));
    }

    let ty = name(a.3.as_str());
    let mut declarations = String::new();
    let mut inserts = BTreeMap::new();
    let mut gets = Vec::new();
    for (entity, var, value, set) in &sides {
        let table = format!("final{}", tags[*entity]);
        let _ = writeln!(declarations, "table {table}({}).", name(set.as_str()));
        inserts.insert((*entity).clone(), format!("insert {table}({});", emit_term(m, value, EmitMode::Untyped)));
        gets.push(format!("get {table}({}) in", name(var.as_str())));
    }
    let vars = format!("{}, {}", name(a.1.as_str()), name(b.1.as_str()));
    let _ = write!(
        declarations,
        "\nevent correctness({ty}, {ty}).\n\nquery k: {ty}; event(correctness(k, k)) ==> true = true.\n"
    );
    let agreement = format!("let agreement = {} event correctness({vars}).\n", gets.join(" "));
    Ok(Some(Correctness { declarations, agreement, inserts }))
}

pub fn emit_preamble(m: &Model) -> String {
    let mut out = String::new();
    if let Some(id) = &m.id {
        let _ = writeln!(out, "(* Generated by metacp from model {id}. *)\n");
    }
    for s in &m.sets {
        let _ = writeln!(out, "type {}.", name(s.id.as_str()));
    }
    out.push('\n');
    let _ = writeln!(out, "free {PUBLIC_CHANNEL}: channel.");
    let mut private: Vec<&Identifier> = Vec::new();
    for c in m.channels() {
        if c.modifier != ChannelModifier::Insecure && !private.contains(&&c.id) {
            private.push(&c.id);
            let _ = writeln!(out, "free ch_{}: channel [private].", c.id);
        }
    }

    let known: HashSet<&Identifier> =
        m.protocol.entities.iter().flat_map(|e| e.initial_knowledge().iter().map(|v| &v.id)).collect();
    let mut names = String::new();
    for v in &m.variables {
        let ty = name(v.set.as_str());
        let n = name(v.id().as_str());
        if v.is_const() {
            let private = !v.is_global() || hints::is_private_variable(v);
            let _ = writeln!(names, "const {n}: {ty}{}.", if private { " [private]" } else { "" });
        } else if known.contains(v.id()) {
            let _ = writeln!(names, "free {n}: {ty} [private].");
        }
    }
    if !names.is_empty() {
        out.push('\n');
        out.push_str(&names);
    }

    if !m.functions.is_empty() {
        out.push('\n');
    }
    for f in &m.functions {
        let params: Vec<_> = f.params.iter().map(|p| name(p.as_str())).collect();
        let private = if hints::is_private_function(f) { " [private]" } else { "" };
        let _ =
            writeln!(out, "fun {}({}): {}{private}.", name(f.id.as_str()), params.join(", "), name(f.result.as_str()));
    }

    if !m.equations.is_empty() {
        out.push('\n');
    }
    for eq in &m.equations {
        let lhs = emit_application(m, &eq.lhs);
        let rhs = emit_term(m, &eq.rhs, EmitMode::Untyped);
        if eq.quantified.is_empty() {
            let _ = writeln!(out, "equation {lhs} = {rhs}.");
        } else {
            let qs: Vec<_> =
                eq.quantified.iter().map(|q| emit_term(m, &Term::Var(q.clone()), EmitMode::Typed)).collect();
            let _ = writeln!(out, "equation forall {}; {lhs} = {rhs}.", qs.join(", "));
        }
    }
    out
}

/// `let proc_<E> = ... 0.` with statements in protocol order.
pub fn emit_entity_process(m: &Model, entity: &Identifier, insert: Option<&str>) -> String {
    let mut lines: Vec<String> = Vec::new();
    for msg in &m.protocol.messages {
        if &msg.from == entity {
            lines.extend(msg.pre.iter().map(|a| emit_assignment(m, a)));
            lines.extend(emit_send(m, msg));
        }
        if &msg.to == entity {
            lines.push(emit_receive(m, msg));
            lines.extend(msg.post.iter().map(|a| emit_assignment(m, a)));
        }
    }
    if let Some(f) = m.protocol.finalise_for(entity) {
        lines.extend(f.statements.iter().map(|a| emit_assignment(m, a)));
    }
    lines.extend(insert.map(str::to_owned));

    let mut out = format!("let {} =", process_name(entity));
    if lines.is_empty() {
        out.push_str(" 0.\n");
        return out;
    }
    out.push('\n');
    for l in lines {
        let _ = writeln!(out, "  {l}");
    }
    out.push_str("  0.\n");
    out
}

pub fn process_name(entity: &Identifier) -> String {
    format!("proc_{entity}")
}

pub fn emit_main(m: &Model, with_agreement: bool) -> String {
    let mut parts: Vec<String> = m.protocol.entities.iter().map(|e| format!("(!{})", process_name(&e.id))).collect();
    if with_agreement {
        parts.push("agreement".to_owned());
    }
    format!("process {}\n", parts.join(" | "))
}

/// Translates a validated model into a ProVerif script.
pub fn export(m: &Model) -> Result<PiText, Vec<Diagnostic>> {
    let errors: Vec<_> = validator::check_semantics(m).into_iter().filter(Diagnostic::is_error).collect();
    if !errors.is_empty() {
        return Err(errors);
    }
    let correctness = emit_correctness(m).map_err(|d| vec![d])?;

    let mut sections = vec![(Section::Preamble, emit_preamble(m))];
    if let Some(c) = &correctness {
        sections.push((Section::CorrectnessDecls, format!("\n{}", c.declarations)));
    }
    let mut procs = String::new();
    for e in &m.protocol.entities {
        let insert = correctness.as_ref().and_then(|c| c.inserts.get(&e.id)).map(String::as_str);
        procs.push('\n');
        procs.push_str(&emit_entity_process(m, &e.id, insert));
    }
    sections.push((Section::Processes, procs));
    if let Some(c) = &correctness {
        sections.push((Section::Agreement, format!("\n{}", c.agreement)));
    }
    sections.push((Section::Main, format!("\n{}", emit_main(m, correctness.is_some()))));

    let text = sections.iter().map(|(_, s)| s.as_str()).collect();
    Ok(PiText { sections, text })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;
    use crate::xml;

    fn dhke() -> Model {
        xml::parse(samples::DHKE).unwrap()
    }

    #[test]
    fn statements() {
        let m = dhke();
        let msg = &m.protocol.messages[0];
        assert_eq!(emit_assignment(&m, &msg.pre[0]), "new x: N;");
        assert_eq!(emit_assignment(&m, &msg.pre[1]), "let gx = exp(g, x) in");
        assert_eq!(emit_send(&m, msg), ["out(c, gx);"]);
        assert_eq!(emit_receive(&m, &m.protocol.messages[1]), "in(c, gy: Zp);");
    }

    #[test]
    fn correctness_instrumentation() {
        let m = dhke();
        let c = emit_correctness(&m).unwrap().unwrap();
        assert_eq!(c.agreement, "let agreement = get finalA(kA) in get finalB(kB) in event correctness(kA, kB).\n");
        assert_eq!(c.inserts[&ident("Alice")], "insert finalA(exp(gy, x));");
        assert!(c.declarations.contains("event correctness(Zp, Zp)."));
        assert!(c.declarations.contains("query k: Zp; event(correctness(k, k)) ==> true = true."));
    }

    #[test]
    fn tags_fall_back_to_full_ids() {
        let mut m = dhke();
        m.protocol.entities[1].id = ident("Amy");
        let tags = table_tags(&m);
        assert_eq!(tags[&ident("Alice")], "Alice");
        assert_eq!(tags[&ident("Amy")], "Amy");
    }

    #[test]
    fn sections_concatenate_to_text() {
        for (_, text) in samples::ALL {
            let pv = export(&xml::parse(text).unwrap()).unwrap();
            let joined: String = pv.sections.iter().map(|(_, s)| s.as_str()).collect();
            assert_eq!(joined, pv.text);
        }
    }

    #[test]
    fn reserved_names_are_renamed() {
        let mut m = dhke();
        m.protocol.messages[0].channel =
            Some(Channel { id: ident("pub1"), modifier: ChannelModifier::Auth, content: vec![] });
        let pv = export(&m).unwrap();
        assert!(pv.text.contains("free ch_pub1: channel [private]."));
        assert!(pv.text.contains("  out(ch_pub1, gx);\n  out(c, gx);\n"));
        assert!(pv.text.contains("in(ch_pub1, gx: Zp);"));
        assert_eq!(name("in"), "in_v");
    }

    #[test]
    fn non_equality_relation_is_unsupported() {
        let mut m = dhke();
        m.functions[1].hint = Some(Hint::new("less than"));
        let err = export(&m).unwrap_err();
        assert_eq!(err[0].code, "unsupported-relation");
    }

    #[test]
    fn needham_schroeder_has_private_key_function() {
        let pv = export(&xml::parse(samples::NS).unwrap()).unwrap();
        assert!(pv.text.contains("fun skey(Msg): SKey [private]."));
        assert!(pv.text.contains("equation forall u: Msg, w: Msg; adec(aenc(u, pkey(w)), skey(w)) = u."));
        assert!(pv.text.ends_with("process (!proc_Alice) | (!proc_Bob)\n"));
        assert!(pv.section(Section::Agreement).is_none());
    }
}
