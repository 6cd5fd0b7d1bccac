use roxmltree::{Document, Node};

use super::grammar::{self, AttrType, Content, ContentMismatch};
use crate::diag::{Diagnostic, ElemPath, PathSegment};
use crate::model::*;

/// Elements that occur at most once under their parent and are addressed
/// without a positional index.
const SINGLETONS: &[&str] = &["model", "protocol", "pre", "post", "channel"];

pub(crate) fn is_indexed(name: &str) -> bool {
    !SINGLETONS.contains(&name)
}

pub(crate) fn node_path(node: Node<'_, '_>) -> ElemPath {
    let mut segs: Vec<PathSegment> = node
        .ancestors()
        .filter(Node::is_element)
        .map(|n| {
            let name = n.tag_name().name();
            // `prev_siblings` starts at the node itself, so the count is 1-based.
            let index = is_indexed(name)
                .then(|| n.prev_siblings().filter(|s| s.is_element() && s.tag_name().name() == name).count());
            PathSegment { name: name.to_owned(), index }
        })
        .collect();
    segs.reverse();
    ElemPath::from_segments(segs)
}

fn elements<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(Node::is_element)
}

pub(crate) fn load(text: &str) -> Result<Document<'_>, Diagnostic> {
    let opts = roxmltree::ParsingOptions { allow_dtd: true, ..Default::default() };
    Document::parse_with_options(text, opts)
        .map_err(|e| Diagnostic::error(ElemPath::default(), "malformed-xml", e.to_string()))
}

/// Checks element nesting and attributes against the bundled grammar.
pub(crate) fn check_structure(doc: &Document<'_>) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let root = doc.root_element();
    if root.tag_name().name() != "model" || root.tag_name().namespace().is_some() {
        diags.push(Diagnostic::error(
            ElemPath::default(),
            "unknown-root",
            format!("root element must be <model>, found <{}>", root.tag_name().name()),
        ));
        return diags;
    }
    check_element(root, &mut diags);
    diags
}

fn check_element(node: Node<'_, '_>, diags: &mut Vec<Diagnostic>) {
    let g = grammar::psv();
    let name = node.tag_name().name();
    let path = node_path(node);
    let Some(decl) = g.element(name) else {
        diags.push(Diagnostic::error(path, "unknown-element", format!("<{name}> is not part of the grammar")));
        return;
    };

    for attr in node.attributes() {
        match decl.attr(attr.name()) {
            None => diags.push(Diagnostic::error(
                path.clone(),
                "unknown-attribute",
                format!("<{name}> has no attribute `{}`", attr.name()),
            )),
            Some(ad) => {
                if let AttrType::Enumerated(values) = &ad.ty {
                    if !values.iter().any(|v| v == attr.value()) {
                        diags.push(Diagnostic::error(
                            path.clone(),
                            "invalid-attribute-value",
                            format!("`{}` = {:?} is not one of {}", attr.name(), attr.value(), values.join("|")),
                        ));
                    }
                }
            }
        }
    }
    for ad in decl.attrs.iter().filter(|a| a.required) {
        if node.attribute(ad.name.as_str()).is_none() {
            diags.push(Diagnostic::error(
                path.clone(),
                "missing-attribute",
                format!("<{name}> requires attribute `{}`", ad.name),
            ));
        }
    }

    if decl.content != Content::Any {
        let stray = node.children().any(|c| c.is_text() && !c.text().unwrap_or("").trim().is_empty());
        if stray {
            diags.push(Diagnostic::error(path.clone(), "unexpected-text", format!("<{name}> may not contain text")));
        }
    }

    let children: Vec<Node> = elements(node).collect();
    let names: Vec<&str> = children.iter().map(|c| c.tag_name().name()).collect();
    match g.check_children(name, &names) {
        Ok(()) => {}
        Err(ContentMismatch::Unexpected { position, expected }) => {
            let child = children[position];
            let mut allowed: Vec<_> = expected.into_iter().collect();
            if allowed.is_empty() {
                allowed.push("nothing".into());
            }
            diags.push(Diagnostic::error(
                node_path(child),
                "unexpected-element",
                format!("<{}> not allowed here in <{name}>; expected {}", names[position], allowed.join(" | ")),
            ));
        }
        Err(ContentMismatch::Missing { required, .. }) => {
            let (code, what) = match required {
                Some(r) => (format!("missing-{r}"), format!("<{r}>")),
                None => ("missing-element".to_owned(), "more children".to_owned()),
            };
            diags.push(Diagnostic::error(path.clone(), code, format!("<{name}> requires {what}")));
        }
    }

    for child in children {
        check_element(child, diags);
    }
}

/// Builds a model from a structurally valid document.
pub(crate) fn build(doc: &Document<'_>) -> Result<Model, Vec<Diagnostic>> {
    let mut b = Builder { diags: Vec::new() };
    let model = b.model(doc.root_element());
    if b.diags.iter().any(Diagnostic::is_error) {
        Err(b.diags)
    } else {
        Ok(model)
    }
}

struct Builder {
    diags: Vec<Diagnostic>,
}

impl Builder {
    fn ident(&mut self, node: Node<'_, '_>, attr: &str) -> Identifier {
        let raw = node.attribute(attr).unwrap_or("");
        match Identifier::new(raw) {
            Ok(id) => id,
            Err(e) => {
                self.diags.push(Diagnostic::error(node_path(node), "invalid-identifier", format!("`{attr}`: {e}")));
                // Placeholder so building can continue and report further problems.
                ident("invalid")
            }
        }
    }

    fn opt_ident(&mut self, node: Node<'_, '_>, attr: &str) -> Option<Identifier> {
        node.attribute(attr).map(|_| self.ident(node, attr))
    }

    fn hint(node: Node<'_, '_>) -> Option<Hint> {
        node.attribute("hint").filter(|h| !h.trim().is_empty()).map(Hint::new)
    }

    fn modifier(node: Node<'_, '_>) -> Option<VarModifier> {
        node.attribute("type").and_then(VarModifier::parse)
    }

    fn var_ref(&mut self, node: Node<'_, '_>) -> VarRef {
        VarRef { id: self.ident(node, "id"), modifier: Self::modifier(node) }
    }

    fn model(&mut self, node: Node<'_, '_>) -> Model {
        let mut model = Model { id: self.opt_ident(node, "id"), security: None, ..Default::default() };
        if let Some(raw) = node.attribute("security") {
            match raw.trim().parse::<u32>() {
                Ok(bits) if bits > 0 => model.security = Some(bits),
                _ => self.diags.push(Diagnostic::error(
                    node_path(node),
                    "invalid-attribute-value",
                    format!("security parameter {raw:?} is not a positive integer"),
                )),
            }
        }
        for child in elements(node) {
            match child.tag_name().name() {
                "set" => {
                    let decl = SetDecl {
                        id: self.ident(child, "id"),
                        element_sets: elements(child).map(|s| self.ident(s, "id")).collect(),
                        hint: Self::hint(child),
                    };
                    model.sets.push(decl);
                }
                "function" => {
                    let decl = FuncDecl {
                        id: self.ident(child, "id"),
                        params: elements(child).map(|s| self.ident(s, "id")).collect(),
                        result: self.ident(child, "set"),
                        hint: Self::hint(child),
                    };
                    let declared = child.attribute("arity").unwrap_or("");
                    if declared.trim().parse::<usize>().ok() != Some(decl.params.len()) {
                        self.diags.push(Diagnostic::error(
                            node_path(child),
                            "arity-mismatch",
                            format!(
                                "function `{}` declares arity {declared:?} but lists {} parameter set(s)",
                                decl.id,
                                decl.params.len()
                            ),
                        ));
                    }
                    model.functions.push(decl);
                }
                "declaration" => {
                    let decl = VarDecl {
                        var: VarRef { id: self.ident(child, "variable"), modifier: Self::modifier(child) },
                        set: self.ident(child, "set"),
                        scope: self.opt_ident(child, "entity"),
                        hint: Self::hint(child),
                    };
                    model.variables.push(decl);
                }
                "equation" => {
                    let eq = self.equation(child);
                    model.equations.push(eq);
                }
                "protocol" => model.protocol = self.protocol(child),
                _ => {}
            }
        }
        model
    }

    fn term(&mut self, node: Node<'_, '_>) -> Term {
        match node.tag_name().name() {
            "application" => Term::App(self.application(node)),
            _ => Term::Var(self.var_ref(node)),
        }
    }

    fn application(&mut self, node: Node<'_, '_>) -> Application {
        Application { function: self.ident(node, "function"), args: elements(node).map(|c| self.term(c)).collect() }
    }

    fn equation(&mut self, node: Node<'_, '_>) -> Equation {
        let id = self.ident(node, "id");
        let mut quantified = Vec::new();
        let mut sides = Vec::new();
        for child in elements(node) {
            match child.tag_name().name() {
                "variable" => quantified.push(self.var_ref(child)),
                _ => sides.push(child),
            }
        }
        // Grammar guarantees: application, then application|argument.
        let lhs = self.application(sides[0]);
        let rhs = self.term(sides[1]);
        Equation { id, quantified, lhs, rhs }
    }

    fn knowledge(&mut self, node: Node<'_, '_>) -> Knowledge {
        Knowledge { owner: self.ident(node, "entity"), vars: elements(node).map(|v| self.var_ref(v)).collect() }
    }

    fn assignment(&mut self, node: Node<'_, '_>) -> Option<Assignment> {
        let target = VarRef { id: self.ident(node, "variable"), modifier: None };
        let child = elements(node).next();
        let set = node.attribute("set");
        match (node.attribute("type"), child, set) {
            (Some("probabilistic"), None, Some(_)) => {
                Some(Assignment { target, source: AssignSource::Sample(self.ident(node, "set")) })
            }
            (Some("deterministic"), Some(c), None) => {
                Some(Assignment { target, source: AssignSource::Term(self.term(c)) })
            }
            (Some("probabilistic"), _, _) => {
                self.diags.push(Diagnostic::error(
                    node_path(node),
                    "invalid-assignment",
                    "probabilistic assignment needs a `set` attribute and no term",
                ));
                None
            }
            _ => {
                self.diags.push(Diagnostic::error(
                    node_path(node),
                    "invalid-assignment",
                    "deterministic assignment needs exactly one term and no `set` attribute",
                ));
                None
            }
        }
    }

    fn statements(&mut self, node: Node<'_, '_>) -> Vec<Assignment> {
        elements(node).filter_map(|a| self.assignment(a)).collect()
    }

    fn protocol(&mut self, node: Node<'_, '_>) -> Protocol {
        let mut p = Protocol::default();
        for child in elements(node) {
            match child.tag_name().name() {
                "entity" => {
                    let entity = Entity {
                        id: self.ident(child, "id"),
                        knowledge: elements(child).next().map(|k| self.knowledge(k)),
                    };
                    p.entities.push(entity);
                }
                "message" => {
                    let msg = self.message(child);
                    p.messages.push(msg);
                }
                "finalise" => {
                    let mut fin =
                        Finalise { entity: self.ident(child, "entity"), knowledge: None, statements: Vec::new() };
                    for c in elements(child) {
                        match c.tag_name().name() {
                            "knowledge" => fin.knowledge = Some(self.knowledge(c)),
                            _ => fin.statements.extend(self.assignment(c)),
                        }
                    }
                    if fin.knowledge.is_some() || !fin.statements.is_empty() {
                        p.finalise.push(fin);
                    }
                }
                "correctness" => {
                    let app = elements(child).next().expect("grammar requires an application");
                    let relation = self.application(app);
                    p.properties.push(CorrectnessProperty { relation });
                }
                _ => {}
            }
        }
        p
    }

    fn message(&mut self, node: Node<'_, '_>) -> Message {
        let mut msg = Message::new(self.ident(node, "from"), self.ident(node, "to"));
        let mut events = 0;
        for child in elements(node) {
            match child.tag_name().name() {
                "knowledge" => {
                    let k = self.knowledge(child);
                    msg.knowledge.push(k);
                }
                "pre" => msg.pre = self.statements(child),
                "post" => msg.post = self.statements(child),
                "channel" => msg.channel = self.channel(child),
                "event" => {
                    events += 1;
                    let expected = if events == 1 { "send" } else { "receive" };
                    if child.attribute("type") != Some(expected) {
                        self.diags.push(Diagnostic::error(
                            node_path(child),
                            "event-order",
                            format!("event {events} of a message must be of type `{expected}`"),
                        ));
                    }
                    let payload: Vec<VarRef> = elements(child).map(|v| self.var_ref(v)).collect();
                    if events == 1 {
                        msg.send = payload;
                    } else {
                        msg.recv = payload;
                    }
                }
                _ => {}
            }
        }
        msg
    }

    fn channel(&mut self, node: Node<'_, '_>) -> Option<Channel> {
        let content: Vec<Term> = elements(node).map(|c| self.term(c)).collect();
        let modifier = node.attribute("type").and_then(ChannelModifier::parse).unwrap_or_default();
        match self.opt_ident(node, "id") {
            Some(id) => Some(Channel { id, modifier, content }),
            None if content.is_empty() && modifier == ChannelModifier::Insecure => None,
            None => {
                self.diags.push(Diagnostic::error(
                    node_path(node),
                    "missing-attribute",
                    "a channel with a type or content requires an `id`",
                ));
                None
            }
        }
    }
}
