//! Semantic checks over a parsed model, knowledge tracking, and a concrete
//! interpreter for executing a protocol run.

mod interp;
mod knowledge;

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::diag::{sort_document_order, Diagnostic, ElemPath};
use crate::hints::{self, FuncKind};
use crate::model::*;

pub use interp::{interpret_concrete, ConcreteEnv, InterpretError, Interpreter, Value};
pub use knowledge::{knowledge_trace, EntityTrace, KnowledgeTrace, Snapshot, Step};

/// Codes that describe a dangling or self-contradictory reference; used to
/// decide whether a document is rejected at parse time.
const REFERENCE_CODES: &[&str] =
    &["undeclared-set", "undeclared-function", "undeclared-variable", "undeclared-entity", "self-message"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("variable `{0}` is not declared")]
    UndeclaredVariable(Identifier),
    #[error("function `{0}` is not declared")]
    UndeclaredFunction(Identifier),
    #[error("`{function}` takes {expected} argument(s), got {found}")]
    Arity { function: Identifier, expected: usize, found: usize },
    #[error("argument {position} of `{function}` has type {found}, expected {expected}")]
    Mismatch { function: Identifier, position: usize, expected: Identifier, found: Identifier },
}

impl TypeError {
    pub fn code(&self) -> &'static str {
        match self {
            TypeError::UndeclaredVariable(_) => "undeclared-variable",
            TypeError::UndeclaredFunction(_) => "undeclared-function",
            TypeError::Arity { .. } => "arity-mismatch",
            TypeError::Mismatch { .. } => "type-mismatch",
        }
    }

    fn at(&self, path: ElemPath) -> Diagnostic {
        Diagnostic::error(path, self.code(), self.to_string())
    }
}

/// Set of a term: the declared set of a variable, or the result set of the
/// outermost function. Arguments are checked left to right and the first
/// problem is reported.
pub fn type_of<'m>(m: &'m Model, t: &Term) -> Result<&'m Identifier, TypeError> {
    match t {
        Term::Var(v) => {
            m.variable(v.id.as_str()).map(|d| &d.set).ok_or_else(|| TypeError::UndeclaredVariable(v.id.clone()))
        }
        Term::App(app) => type_of_application(m, app),
    }
}

pub fn type_of_application<'m>(m: &'m Model, app: &Application) -> Result<&'m Identifier, TypeError> {
    let f = m.function(app.function.as_str()).ok_or_else(|| TypeError::UndeclaredFunction(app.function.clone()))?;
    if f.arity() != app.args.len() {
        return Err(TypeError::Arity { function: f.id.clone(), expected: f.arity(), found: app.args.len() });
    }
    for (i, (arg, param)) in app.args.iter().zip(&f.params).enumerate() {
        let found = type_of(m, arg)?;
        if found != param {
            return Err(TypeError::Mismatch {
                function: f.id.clone(),
                position: i + 1,
                expected: param.clone(),
                found: found.clone(),
            });
        }
    }
    Ok(&f.result)
}

/// Dangling references only. Run by the parser.
pub fn check_references(m: &Model) -> Vec<Diagnostic> {
    check_semantics(m).into_iter().filter(|d| d.is_error() && REFERENCE_CODES.contains(&d.code.as_ref())).collect()
}

/// Declaration-level checks: unique identifiers per namespace and set
/// references that resolve to an earlier declaration.
pub fn check_declarations(m: &Model) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let root = ElemPath::root();

    let mut seen_sets: HashSet<&str> = HashSet::new();
    let all_sets: HashSet<&str> = m.sets.iter().map(|s| s.id.as_str()).collect();
    for (i, s) in m.sets.iter().enumerate() {
        let path = root.nth("set", i);
        for el in &s.element_sets {
            if seen_sets.contains(el.as_str()) {
                continue;
            }
            if all_sets.contains(el.as_str()) {
                diags.push(Diagnostic::error(
                    path.clone(),
                    "forward-reference",
                    format!("set `{}` refers to `{el}` before it is declared", s.id),
                ));
            } else {
                diags.push(undeclared_set(path.clone(), el));
            }
        }
        if !seen_sets.insert(s.id.as_str()) {
            diags.push(duplicate(path, Namespace::Set, &s.id));
        }
    }

    let mut seen: HashSet<&str> = HashSet::new();
    for (i, f) in m.functions.iter().enumerate() {
        let path = root.nth("function", i);
        for set in f.params.iter().chain(std::iter::once(&f.result)) {
            if !all_sets.contains(set.as_str()) {
                diags.push(undeclared_set(path.clone(), set));
            }
        }
        if !seen.insert(f.id.as_str()) {
            diags.push(duplicate(path, Namespace::Function, &f.id));
        }
    }

    let entities: HashSet<&str> = m.protocol.entities.iter().map(|e| e.id.as_str()).collect();
    let mut seen: HashSet<&str> = HashSet::new();
    for (i, v) in m.variables.iter().enumerate() {
        let path = root.nth("declaration", i);
        if !all_sets.contains(v.set.as_str()) {
            diags.push(undeclared_set(path.clone(), &v.set));
        }
        if let Some(scope) = &v.scope {
            if !entities.contains(scope.as_str()) {
                diags.push(undeclared_entity(path.clone(), scope));
            }
        }
        if !seen.insert(v.id().as_str()) {
            diags.push(duplicate(path, Namespace::Variable, v.id()));
        }
    }

    let mut seen: HashSet<&str> = HashSet::new();
    for (i, eq) in m.equations.iter().enumerate() {
        if !seen.insert(eq.id.as_str()) {
            diags.push(Diagnostic::error(
                root.nth("equation", i),
                "duplicate-id",
                format!("equation `{}` is declared more than once", eq.id),
            ));
        }
    }

    let protocol = ElemPath::protocol();
    let mut seen: HashSet<&str> = HashSet::new();
    for (i, e) in m.protocol.entities.iter().enumerate() {
        if !seen.insert(e.id.as_str()) {
            diags.push(duplicate(protocol.nth("entity", i), Namespace::Entity, &e.id));
        }
    }

    let mut channels: HashMap<&str, ChannelModifier> = HashMap::new();
    for (i, msg) in m.protocol.messages.iter().enumerate() {
        let Some(c) = &msg.channel else { continue };
        match channels.get(c.id.as_str()) {
            Some(&modifier) if modifier != c.modifier => diags.push(Diagnostic::error(
                protocol.nth("message", i).child("channel"),
                "duplicate-id",
                format!(
                    "channel `{}` was declared {} and is redeclared {}",
                    c.id,
                    modifier.as_str(),
                    c.modifier.as_str()
                ),
            )),
            Some(_) => {}
            None => {
                channels.insert(c.id.as_str(), c.modifier);
            }
        }
    }
    diags
}

/// Every semantic check, errors and warnings, in document order.
pub fn check_semantics(m: &Model) -> Vec<Diagnostic> {
    let mut diags = check_declarations(m);
    let mut c = Checker { m, diags: Vec::new() };
    c.equations();
    c.protocol();
    diags.append(&mut c.diags);
    diags.extend(knowledge::trace_diagnostics(m).1);
    sort_document_order(&mut diags);
    dedup(&mut diags);
    diags
}

/// Removes exact repeats (e.g. the same undeclared variable reported by two passes).
fn dedup(diags: &mut Vec<Diagnostic>) {
    let mut seen = HashSet::new();
    diags.retain(|d| seen.insert(d.clone()));
}

fn duplicate(path: ElemPath, ns: Namespace, id: &Identifier) -> Diagnostic {
    Diagnostic::error(path, "duplicate-id", format!("{} `{id}` is declared more than once", ns.as_str()))
}

fn undeclared_set(path: ElemPath, id: &Identifier) -> Diagnostic {
    Diagnostic::error(path, "undeclared-set", format!("set `{id}` is not declared"))
}

fn undeclared_entity(path: ElemPath, id: &Identifier) -> Diagnostic {
    Diagnostic::error(path, "undeclared-entity", format!("entity `{id}` is not declared"))
}

fn undeclared_variable(path: ElemPath, id: &Identifier) -> Diagnostic {
    Diagnostic::error(path, "undeclared-variable", format!("variable `{id}` is not declared"))
}

struct Checker<'m> {
    m: &'m Model,
    diags: Vec<Diagnostic>,
}

impl<'m> Checker<'m> {
    fn push(&mut self, d: Diagnostic) {
        self.diags.push(d);
    }

    fn term(&mut self, path: &ElemPath, t: &Term) -> Option<&'m Identifier> {
        match type_of(self.m, t) {
            Ok(set) => Some(set),
            Err(e) => {
                self.push(e.at(path.clone()));
                None
            }
        }
    }

    fn var(&mut self, path: &ElemPath, v: &VarRef) -> Option<&'m VarDecl> {
        let decl = self.m.variable(v.id.as_str());
        if decl.is_none() {
            self.push(undeclared_variable(path.clone(), &v.id));
        }
        decl
    }

    fn entity(&mut self, path: &ElemPath, id: &Identifier) -> bool {
        let known = self.m.entity(id.as_str()).is_some();
        if !known {
            self.push(undeclared_entity(path.clone(), id));
        }
        known
    }

    fn equations(&mut self) {
        for (i, eq) in self.m.equations.iter().enumerate() {
            let path = ElemPath::root().nth("equation", i);
            for q in &eq.quantified {
                self.var(&path, q);
            }
            let lhs = match type_of_application(self.m, &eq.lhs) {
                Ok(s) => Some(s),
                Err(e) => {
                    self.push(e.at(path.clone()));
                    None
                }
            };
            let rhs = self.term(&path, &eq.rhs);
            if let (Some(l), Some(r)) = (lhs, rhs) {
                if l != r {
                    self.push(Diagnostic::error(
                        path.clone(),
                        "type-mismatch",
                        format!("equation `{}` relates a {l} to a {r}", eq.id),
                    ));
                }
            }
            let lhs_vars = eq.lhs.free_variables();
            let rhs_vars = eq.rhs.free_variables();
            let mut reported = HashSet::new();
            for v in lhs_vars.into_iter().chain(rhs_vars) {
                let quantified = eq.quantified.iter().any(|q| q.id == v.id);
                let constant = self.m.variable(v.id.as_str()).is_some_and(VarDecl::is_const);
                if !quantified && !constant && reported.insert(&v.id) {
                    self.push(Diagnostic::error(
                        path.clone(),
                        "unquantified-variable",
                        format!("`{}` occurs in equation `{}` but is neither quantified nor a constant", v.id, eq.id),
                    ));
                }
            }
        }
    }

    fn knowledge(&mut self, path: &ElemPath, k: &Knowledge) {
        self.entity(path, &k.owner);
        for v in &k.vars {
            self.var(path, v);
        }
    }

    fn statements(&mut self, base: &ElemPath, stmts: &[Assignment]) {
        for (j, a) in stmts.iter().enumerate() {
            let path = base.nth("assignment", j);
            let target = self.var(&path, &a.target);
            if target.is_some_and(VarDecl::is_const) {
                self.push(Diagnostic::error(
                    path.clone(),
                    "assign-to-const",
                    format!("constant `{}` cannot be assigned", a.target.id),
                ));
            }
            let source = match &a.source {
                AssignSource::Term(t) => self.term(&path, t),
                AssignSource::Sample(set) => match self.m.set(set.as_str()) {
                    Some(s) => Some(&s.id),
                    None => {
                        self.push(undeclared_set(path.clone(), set));
                        None
                    }
                },
            };
            if let (Some(t), Some(s)) = (target, source) {
                if &t.set != s {
                    self.push(Diagnostic::error(
                        path.clone(),
                        "type-mismatch",
                        format!("`{}` has type {} but is assigned a {s}", a.target.id, t.set),
                    ));
                }
            }
        }
    }

    fn protocol(&mut self) {
        let p = &self.m.protocol;
        let protocol = ElemPath::protocol();
        if p.entities.len() < 2 {
            self.push(Diagnostic::error(
                protocol.clone(),
                "too-few-entities",
                format!("a protocol needs at least two entities, found {}", p.entities.len()),
            ));
        }
        if p.messages.is_empty() {
            self.push(Diagnostic::error(protocol.clone(), "no-messages", "a protocol needs at least one message"));
        }
        for (i, e) in p.entities.iter().enumerate() {
            let path = protocol.nth("entity", i);
            if let Some(k) = &e.knowledge {
                let kpath = path.child("knowledge");
                if k.owner != e.id {
                    self.push(Diagnostic::error(
                        kpath.clone(),
                        "knowledge-owner-mismatch",
                        format!("initial knowledge of `{}` is attributed to `{}`", e.id, k.owner),
                    ));
                }
                for v in &k.vars {
                    self.var(&kpath, v);
                }
            }
        }
        for (i, msg) in p.messages.iter().enumerate() {
            self.message(&protocol.nth("message", i), msg);
        }

        let mut finalised: HashSet<&Identifier> = HashSet::new();
        for (i, f) in p.finalise.iter().enumerate() {
            let path = protocol.nth("finalise", i);
            self.entity(&path, &f.entity);
            if !finalised.insert(&f.entity) {
                self.push(Diagnostic::error(
                    path.clone(),
                    "duplicate-finalise",
                    format!("entity `{}` has more than one finalise block", f.entity),
                ));
            }
            if let Some(k) = &f.knowledge {
                self.knowledge(&path.child("knowledge"), k);
            }
            self.statements(&path, &f.statements);
        }

        let final_vars: HashSet<&Identifier> =
            p.finalise.iter().flat_map(|f| f.statements.iter().map(|a| &a.target.id)).collect();
        for (i, prop) in p.properties.iter().enumerate() {
            let path = protocol.nth("correctness", i);
            if let Err(e) = type_of_application(self.m, &prop.relation) {
                self.push(e.at(path.clone()));
            }
            for arg in &prop.relation.args {
                match arg {
                    Term::Var(v) if final_vars.contains(&v.id) => {}
                    Term::Var(v) => self.push(Diagnostic::error(
                        path.clone(),
                        "property-not-final",
                        format!("`{}` is not assigned in any finalise block", v.id),
                    )),
                    Term::App(_) => self.push(Diagnostic::error(
                        path.clone(),
                        "property-not-final",
                        "correctness arguments must be variables assigned in a finalise block",
                    )),
                }
            }
            if let Some(f) = self.m.function(prop.relation.function.as_str()) {
                if hints::func_kind(self.m, f) != Some(FuncKind::Equality) {
                    self.push(Diagnostic::warning(
                        path.clone(),
                        "uninterpreted-relation",
                        format!("`{}` is not an equality; exporters may not support it", f.id),
                    ));
                }
            }
        }
    }

    fn message(&mut self, path: &ElemPath, msg: &Message) {
        let from = self.entity(path, &msg.from);
        let to = self.entity(path, &msg.to);
        if from && to && msg.from == msg.to {
            self.push(Diagnostic::error(
                path.clone(),
                "self-message",
                format!("`{}` sends a message to itself", msg.from),
            ));
        }
        for (k, know) in msg.knowledge.iter().enumerate() {
            self.knowledge(&path.nth("knowledge", k), know);
        }
        self.statements(&path.child("pre"), &msg.pre);

        let send_path = path.nth("event", 0);
        let recv_path = path.nth("event", 1);
        let sent: Vec<_> = msg.send.iter().map(|v| self.var(&send_path, v)).collect();
        let received: Vec<_> = msg.recv.iter().map(|v| self.var(&recv_path, v)).collect();
        if msg.send.is_empty() {
            self.push(Diagnostic::error(send_path.clone(), "empty-event", "send event carries no variables"));
        }
        if msg.recv.is_empty() {
            self.push(Diagnostic::error(recv_path.clone(), "empty-event", "receive event binds no variables"));
        }
        if !msg.send.is_empty() && !msg.recv.is_empty() && msg.send.len() != msg.recv.len() {
            self.push(Diagnostic::error(
                recv_path.clone(),
                "payload-arity-mismatch",
                format!("{} variable(s) sent but {} received", msg.send.len(), msg.recv.len()),
            ));
        } else {
            for (pos, (s, r)) in sent.iter().zip(&received).enumerate() {
                if let (Some(s), Some(r)) = (s, r) {
                    if s.set != r.set {
                        self.push(Diagnostic::error(
                            recv_path.clone(),
                            "type-mismatch",
                            format!(
                                "payload position {}: `{}` ({}) is received as `{}` ({})",
                                pos + 1,
                                s.id(),
                                s.set,
                                r.id(),
                                r.set
                            ),
                        ));
                    }
                }
            }
        }

        if let Some(c) = &msg.channel {
            let cpath = path.child("channel");
            for t in &c.content {
                self.term(&cpath, t);
            }
            if !c.content.is_empty() {
                self.push(Diagnostic::warning(
                    cpath,
                    "channel-transform-ignored",
                    format!("content of channel `{}` is kept but not interpreted", c.id),
                ));
            }
        }
        self.statements(&path.child("post"), &msg.post);
    }
}
