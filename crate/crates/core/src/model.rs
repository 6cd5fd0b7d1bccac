//! In-memory protocol specification model.
//!
//! Values are plain data: identifiers refer to declarations by name and are
//! resolved on demand with [`Model::resolve`]. Nothing here checks semantic
//! consistency; that is the validator's job.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentifierError {
    #[error("identifier is empty")]
    Empty,
    #[error("identifier `{0}` must start with an ASCII letter and contain only letters, digits or `_`")]
    Invalid(String),
}

/// A non-empty name: an ASCII letter followed by letters, digits or underscores.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Identifier(String);

impl Identifier {
    pub fn new(text: impl Into<String>) -> Result<Self, IdentifierError> {
        let text = text.into();
        let mut chars = text.chars();
        match chars.next() {
            None => Err(IdentifierError::Empty),
            Some(c) if c.is_ascii_alphabetic() => {
                if chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    Ok(Identifier(text))
                } else {
                    Err(IdentifierError::Invalid(text))
                }
            }
            Some(_) => Err(IdentifierError::Invalid(text)),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Identifier {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl PartialEq<str> for Identifier {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for Identifier {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

/// Shorthand for building identifiers from literals known to be valid.
///
/// Panics on an invalid identifier; intended for tests and bundled data.
pub fn ident(text: &str) -> Identifier {
    Identifier::new(text).unwrap_or_else(|e| panic!("{e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarModifier {
    Nonce,
    Const,
    Entity,
    Var,
}

impl VarModifier {
    pub fn as_str(self) -> &'static str {
        match self {
            VarModifier::Nonce => "nonce",
            VarModifier::Const => "const",
            VarModifier::Entity => "entity",
            VarModifier::Var => "var",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "nonce" => VarModifier::Nonce,
            "const" => VarModifier::Const,
            "entity" => VarModifier::Entity,
            "var" => VarModifier::Var,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ChannelModifier {
    #[default]
    Insecure,
    Auth,
    Secure,
}

impl ChannelModifier {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelModifier::Insecure => "insecure",
            ChannelModifier::Auth => "auth",
            ChannelModifier::Secure => "secure",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "insecure" => ChannelModifier::Insecure,
            "auth" => ChannelModifier::Auth,
            "secure" => ChannelModifier::Secure,
            _ => return None,
        })
    }
}

/// Free-form interpretation label attached to declarations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Hint(pub String);

impl Hint {
    pub fn new(label: impl Into<String>) -> Self {
        Hint(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Case-insensitive comparison against one of several accepted labels.
    pub fn is_any(&self, labels: &[&str]) -> bool {
        let own = self.0.trim();
        labels.iter().any(|l| own.eq_ignore_ascii_case(l))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetDecl {
    pub id: Identifier,
    pub element_sets: Vec<Identifier>,
    pub hint: Option<Hint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarRef {
    pub id: Identifier,
    pub modifier: Option<VarModifier>,
}

impl VarRef {
    pub fn new(id: Identifier) -> Self {
        VarRef { id, modifier: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub var: VarRef,
    pub set: Identifier,
    /// Owning entity; `None` means globally declared.
    pub scope: Option<Identifier>,
    pub hint: Option<Hint>,
}

impl VarDecl {
    pub fn id(&self) -> &Identifier {
        &self.var.id
    }

    pub fn modifier(&self) -> Option<VarModifier> {
        self.var.modifier
    }

    pub fn is_const(&self) -> bool {
        self.var.modifier == Some(VarModifier::Const)
    }

    pub fn is_global(&self) -> bool {
        self.scope.is_none()
    }
}

/// Function signature. The arity is the number of parameter sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncDecl {
    pub id: Identifier,
    pub params: Vec<Identifier>,
    pub result: Identifier,
    pub hint: Option<Hint>,
}

impl FuncDecl {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Application {
    pub function: Identifier,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(VarRef),
    App(Application),
}

impl Term {
    pub fn var(id: Identifier) -> Self {
        Term::Var(VarRef::new(id))
    }

    pub fn app(function: Identifier, args: Vec<Term>) -> Self {
        Term::App(Application { function, args })
    }

    /// Left-to-right, duplicate-free list of the variables occurring in the term.
    pub fn free_variables(&self) -> Vec<&VarRef> {
        let mut out: Vec<&VarRef> = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a VarRef>) {
        match self {
            Term::Var(v) => {
                if !out.iter().any(|seen| seen.id == v.id) {
                    out.push(v);
                }
            }
            Term::App(app) => app.collect_vars(out),
        }
    }

    /// Visits every application node, outermost first.
    pub fn applications(&self) -> Vec<&Application> {
        let mut out = Vec::new();
        if let Term::App(app) = self {
            app.walk(&mut out);
        }
        out
    }
}

impl Application {
    pub fn free_variables(&self) -> Vec<&VarRef> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a VarRef>) {
        for arg in &self.args {
            arg.collect_vars(out);
        }
    }

    fn walk<'a>(&'a self, out: &mut Vec<&'a Application>) {
        out.push(self);
        for arg in &self.args {
            if let Term::App(inner) = arg {
                inner.walk(out);
            }
        }
    }
}

/// Free function form of [`Term::free_variables`].
pub fn free_variables(t: &Term) -> Vec<&VarRef> {
    t.free_variables()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub id: Identifier,
    pub quantified: Vec<VarRef>,
    pub lhs: Application,
    pub rhs: Term,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Knowledge {
    pub owner: Identifier,
    pub vars: Vec<VarRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub id: Identifier,
    pub knowledge: Option<Knowledge>,
}

impl Entity {
    pub fn initial_knowledge(&self) -> &[VarRef] {
        self.knowledge.as_ref().map_or(&[], |k| &k.vars)
    }
}

/// A named channel. Messages without one travel on the generic insecure channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Channel {
    pub id: Identifier,
    pub modifier: ChannelModifier,
    /// Transformations applied in transit. Preserved, never interpreted.
    pub content: Vec<Term>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignMode {
    Deterministic,
    Probabilistic,
}

impl AssignMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AssignMode::Deterministic => "deterministic",
            AssignMode::Probabilistic => "probabilistic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssignSource {
    /// Deterministic: the target takes the value of the term.
    Term(Term),
    /// Probabilistic: the target is sampled from the set.
    Sample(Identifier),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub target: VarRef,
    pub source: AssignSource,
}

impl Assignment {
    pub fn deterministic(target: Identifier, term: Term) -> Self {
        Assignment { target: VarRef::new(target), source: AssignSource::Term(term) }
    }

    pub fn probabilistic(target: Identifier, set: Identifier) -> Self {
        Assignment { target: VarRef::new(target), source: AssignSource::Sample(set) }
    }

    pub fn mode(&self) -> AssignMode {
        match self.source {
            AssignSource::Term(_) => AssignMode::Deterministic,
            AssignSource::Sample(_) => AssignMode::Probabilistic,
        }
    }

    pub fn source_vars(&self) -> Vec<&VarRef> {
        match &self.source {
            AssignSource::Term(t) => t.free_variables(),
            AssignSource::Sample(_) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub from: Identifier,
    pub to: Identifier,
    pub knowledge: Vec<Knowledge>,
    pub pre: Vec<Assignment>,
    pub send: Vec<VarRef>,
    pub channel: Option<Channel>,
    pub recv: Vec<VarRef>,
    pub post: Vec<Assignment>,
}

impl Message {
    pub fn new(from: Identifier, to: Identifier) -> Self {
        Message {
            from,
            to,
            knowledge: Vec::new(),
            pre: Vec::new(),
            send: Vec::new(),
            channel: None,
            recv: Vec::new(),
            post: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finalise {
    pub entity: Identifier,
    pub knowledge: Option<Knowledge>,
    pub statements: Vec<Assignment>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectnessProperty {
    pub relation: Application,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Protocol {
    pub entities: Vec<Entity>,
    pub messages: Vec<Message>,
    pub finalise: Vec<Finalise>,
    pub properties: Vec<CorrectnessProperty>,
}

impl Protocol {
    pub fn finalise_for(&self, entity: &Identifier) -> Option<&Finalise> {
        self.finalise.iter().find(|f| &f.entity == entity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Model {
    pub id: Option<Identifier>,
    /// Security parameter in bits.
    pub security: Option<u32>,
    pub sets: Vec<SetDecl>,
    pub functions: Vec<FuncDecl>,
    pub variables: Vec<VarDecl>,
    pub equations: Vec<Equation>,
    pub protocol: Protocol,
}

pub const DEFAULT_SECURITY: u32 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Namespace {
    Set,
    Function,
    Variable,
    Entity,
    Channel,
}

impl Namespace {
    pub fn as_str(self) -> &'static str {
        match self {
            Namespace::Set => "set",
            Namespace::Function => "function",
            Namespace::Variable => "variable",
            Namespace::Entity => "entity",
            Namespace::Channel => "channel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decl<'a> {
    Set(&'a SetDecl),
    Function(&'a FuncDecl),
    Variable(&'a VarDecl),
    Entity(&'a Entity),
    Channel(&'a Channel),
}

impl Model {
    pub fn security_bits(&self) -> u32 {
        self.security.unwrap_or(DEFAULT_SECURITY)
    }

    /// Looks up a declaration by name. Returns the first match when a
    /// namespace holds duplicates (which the validator reports separately).
    pub fn resolve(&self, id: &str, namespace: Namespace) -> Option<Decl<'_>> {
        match namespace {
            Namespace::Set => self.set(id).map(Decl::Set),
            Namespace::Function => self.function(id).map(Decl::Function),
            Namespace::Variable => self.variable(id).map(Decl::Variable),
            Namespace::Entity => self.entity(id).map(Decl::Entity),
            Namespace::Channel => self.channels().into_iter().find(|c| c.id == id).map(Decl::Channel),
        }
    }

    pub fn set(&self, id: &str) -> Option<&SetDecl> {
        self.sets.iter().find(|s| s.id == id)
    }

    pub fn function(&self, id: &str) -> Option<&FuncDecl> {
        self.functions.iter().find(|f| f.id == id)
    }

    pub fn variable(&self, id: &str) -> Option<&VarDecl> {
        self.variables.iter().find(|v| v.var.id == id)
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.protocol.entities.iter().find(|e| e.id == id)
    }

    /// Named channels in message order.
    pub fn channels(&self) -> Vec<&Channel> {
        self.protocol.messages.iter().filter_map(|m| m.channel.as_ref()).collect()
    }

    /// Every statement of every message and finalisation, in document order.
    pub fn assignments(&self) -> impl Iterator<Item = &Assignment> {
        self.protocol
            .messages
            .iter()
            .flat_map(|m| m.pre.iter().chain(m.post.iter()))
            .chain(self.protocol.finalise.iter().flat_map(|f| f.statements.iter()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers() {
        assert!(Identifier::new("kA").is_ok());
        assert!(Identifier::new("g_1").is_ok());
        assert_eq!(Identifier::new(""), Err(IdentifierError::Empty));
        assert!(Identifier::new("1x").is_err());
        assert!(Identifier::new("a-b").is_err());
        assert!(Identifier::new("_x").is_err());
    }

    #[test]
    fn free_variables_are_ordered_and_unique() {
        let t = Term::app(
            ident("exp"),
            vec![Term::app(ident("exp"), vec![Term::var(ident("g")), Term::var(ident("x"))]), Term::var(ident("y"))],
        );
        let ids: Vec<_> = t.free_variables().iter().map(|v| v.id.as_str()).collect();
        assert_eq!(ids, ["g", "x", "y"]);

        let leaf = Term::var(ident("x"));
        assert_eq!(leaf.free_variables().len(), 1);

        let eq = Term::app(ident("eq"), vec![Term::var(ident("kA")), Term::var(ident("kB"))]);
        let ids: Vec<_> = free_variables(&eq).iter().map(|v| v.id.as_str()).collect();
        assert_eq!(ids, ["kA", "kB"]);

        let dup = Term::app(ident("f"), vec![Term::var(ident("a")), Term::var(ident("a"))]);
        assert_eq!(dup.free_variables().len(), 1);
    }

    #[test]
    fn hint_matching_is_case_insensitive() {
        assert!(Hint::new("Group Generator").is_any(&["group generator"]));
        assert!(!Hint::new("generator").is_any(&["group generator"]));
    }
}
