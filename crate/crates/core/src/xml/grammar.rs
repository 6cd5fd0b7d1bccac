//! Loader and checker for the DTD subset used by the PSV grammar.
//!
//! Supports `<!ELEMENT>` declarations with `EMPTY`, `ANY` and children
//! content models (sequences, choices, `?`, `*`, `+`), `<!ATTLIST>` with
//! `CDATA` or enumerated types and `#REQUIRED` / `#IMPLIED` defaults, and
//! parameter entities. Content models are matched with regular-expression
//! derivatives, which gives precise "unexpected" / "missing" positions.

use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("grammar: {0}")]
pub struct GrammarError(String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContentModel {
    /// Matches nothing.
    Null,
    /// Matches the empty sequence only.
    Epsilon,
    Name(String),
    Seq(Box<ContentModel>, Box<ContentModel>),
    Alt(Box<ContentModel>, Box<ContentModel>),
    Star(Box<ContentModel>),
}

use ContentModel::*;

impl ContentModel {
    fn seq(a: ContentModel, b: ContentModel) -> ContentModel {
        match (a, b) {
            (Null, _) | (_, Null) => Null,
            (Epsilon, x) | (x, Epsilon) => x,
            (a, b) => Seq(Box::new(a), Box::new(b)),
        }
    }

    fn alt(a: ContentModel, b: ContentModel) -> ContentModel {
        match (a, b) {
            (Null, x) | (x, Null) => x,
            (a, b) if a == b => a,
            (a, b) => Alt(Box::new(a), Box::new(b)),
        }
    }

    fn star(a: ContentModel) -> ContentModel {
        match a {
            Null | Epsilon => Epsilon,
            s @ Star(_) => s,
            a => Star(Box::new(a)),
        }
    }

    pub fn nullable(&self) -> bool {
        match self {
            Null | Name(_) => false,
            Epsilon | Star(_) => true,
            Seq(a, b) => a.nullable() && b.nullable(),
            Alt(a, b) => a.nullable() || b.nullable(),
        }
    }

    /// Brzozowski derivative with respect to one child element name.
    pub fn derive(&self, name: &str) -> ContentModel {
        match self {
            Null | Epsilon => Null,
            Name(n) => {
                if n == name {
                    Epsilon
                } else {
                    Null
                }
            }
            Seq(a, b) => {
                let left = Self::seq(a.derive(name), (**b).clone());
                if a.nullable() {
                    Self::alt(left, b.derive(name))
                } else {
                    left
                }
            }
            Alt(a, b) => Self::alt(a.derive(name), b.derive(name)),
            Star(a) => Self::seq(a.derive(name), self.clone()),
        }
    }

    /// Shortest sequence of child names that completes the model.
    pub fn shortest_completion(&self) -> Vec<String> {
        let mut frontier = vec![(self.clone(), Vec::<String>::new())];
        let mut seen = vec![self.clone()];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for (cm, path) in frontier {
                if cm.nullable() {
                    return path;
                }
                for name in cm.first() {
                    let d = cm.derive(&name);
                    if !seen.contains(&d) {
                        seen.push(d.clone());
                        let mut p = path.clone();
                        p.push(name);
                        next.push((d, p));
                    }
                }
            }
            frontier = next;
        }
        Vec::new()
    }

    /// Element names that may appear next.
    pub fn first(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_first(&mut out);
        out
    }

    fn collect_first(&self, out: &mut BTreeSet<String>) {
        match self {
            Null | Epsilon => {}
            Name(n) => {
                out.insert(n.clone());
            }
            Seq(a, b) => {
                a.collect_first(out);
                if a.nullable() {
                    b.collect_first(out);
                }
            }
            Alt(a, b) => {
                a.collect_first(out);
                b.collect_first(out);
            }
            Star(a) => a.collect_first(out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Content {
    Empty,
    Any,
    Children(ContentModel),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttrType {
    CData,
    Enumerated(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttrDecl {
    pub name: String,
    pub ty: AttrType,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementDecl {
    pub name: String,
    pub content: Content,
    pub attrs: Vec<AttrDecl>,
}

impl ElementDecl {
    pub fn attr(&self, name: &str) -> Option<&AttrDecl> {
        self.attrs.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Grammar {
    elements: HashMap<String, ElementDecl>,
    order: Vec<String>,
}

/// Outcome of matching a child-name sequence against a content model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContentMismatch {
    /// Child at this position is not allowed here.
    Unexpected { position: usize, expected: BTreeSet<String> },
    /// The children end too early. `required` is the first element of the
    /// shortest valid completion.
    Missing { expected: BTreeSet<String>, required: Option<String> },
}

impl Grammar {
    pub fn element(&self, name: &str) -> Option<&ElementDecl> {
        self.elements.get(name)
    }

    /// Element names in declaration order.
    pub fn element_names(&self) -> &[String] {
        &self.order
    }

    pub fn check_children(&self, element: &str, children: &[&str]) -> Result<(), ContentMismatch> {
        let Some(decl) = self.elements.get(element) else {
            return Ok(());
        };
        let mut cm = match &decl.content {
            Content::Any => return Ok(()),
            Content::Empty => Epsilon,
            Content::Children(cm) => cm.clone(),
        };
        for (position, child) in children.iter().enumerate() {
            let next = cm.derive(child);
            if next == Null {
                return Err(ContentMismatch::Unexpected { position, expected: cm.first() });
            }
            cm = next;
        }
        if cm.nullable() {
            Ok(())
        } else {
            let required = cm.shortest_completion().into_iter().next();
            Err(ContentMismatch::Missing { expected: cm.first(), required })
        }
    }

    pub fn parse(dtd: &str) -> Result<Grammar, GrammarError> {
        let mut entities: HashMap<String, String> = HashMap::new();
        let mut grammar = Grammar::default();
        let mut attlists: Vec<(String, Vec<AttrDecl>)> = Vec::new();

        for decl in declarations(dtd)? {
            let decl = expand_entities(&decl, &entities)?;
            let mut toks = Tokens::new(&decl);
            match toks.word().as_deref() {
                Some("!ENTITY") => {
                    if toks.word().as_deref() != Some("%") {
                        return Err(GrammarError("only parameter entities are supported".into()));
                    }
                    let name = toks.word().ok_or_else(|| GrammarError("entity name".into()))?;
                    let value = toks.quoted().ok_or_else(|| GrammarError(format!("entity {name} value")))?;
                    entities.insert(name, value);
                }
                Some("!ELEMENT") => {
                    let name = toks.word().ok_or_else(|| GrammarError("element name".into()))?;
                    let rest = toks.rest();
                    let content = match rest.trim() {
                        "EMPTY" => Content::Empty,
                        "ANY" => Content::Any,
                        spec => Content::Children(parse_content_model(spec)?),
                    };
                    grammar.order.push(name.clone());
                    grammar.elements.insert(name.clone(), ElementDecl { name, content, attrs: Vec::new() });
                }
                Some("!ATTLIST") => {
                    let element = toks.word().ok_or_else(|| GrammarError("attlist element".into()))?;
                    let mut attrs = Vec::new();
                    while let Some(name) = toks.word() {
                        let ty = if toks.peek() == Some('(') {
                            let group = toks.group().ok_or_else(|| GrammarError(format!("{element}@{name} type")))?;
                            AttrType::Enumerated(
                                group.split('|').map(|s| s.trim().to_owned()).filter(|s| !s.is_empty()).collect(),
                            )
                        } else {
                            match toks.word().as_deref() {
                                Some("CDATA") => AttrType::CData,
                                other => {
                                    return Err(GrammarError(format!("{element}@{name}: unsupported type {other:?}")))
                                }
                            }
                        };
                        let required = match toks.word().as_deref() {
                            Some("#REQUIRED") => true,
                            Some("#IMPLIED") => false,
                            other => {
                                return Err(GrammarError(format!("{element}@{name}: unsupported default {other:?}")))
                            }
                        };
                        attrs.push(AttrDecl { name, ty, required });
                    }
                    attlists.push((element, attrs));
                }
                other => return Err(GrammarError(format!("unsupported declaration {other:?}"))),
            }
        }

        for (element, attrs) in attlists {
            let decl = grammar
                .elements
                .get_mut(&element)
                .ok_or_else(|| GrammarError(format!("ATTLIST for undeclared element {element}")))?;
            decl.attrs.extend(attrs);
        }
        Ok(grammar)
    }
}

/// The bundled PSV grammar.
pub fn psv() -> &'static Grammar {
    static GRAMMAR: OnceLock<Grammar> = OnceLock::new();
    GRAMMAR.get_or_init(|| Grammar::parse(crate::PSV_DTD).expect("bundled PSV grammar is valid"))
}

/// Splits the DTD into `<!...>` declaration bodies, skipping comments.
fn declarations(dtd: &str) -> Result<Vec<String>, GrammarError> {
    let mut out = Vec::new();
    let mut rest = dtd;
    loop {
        rest = rest.trim_start();
        if rest.is_empty() {
            return Ok(out);
        }
        if let Some(after) = rest.strip_prefix("<!--") {
            let end = after.find("-->").ok_or_else(|| GrammarError("unterminated comment".into()))?;
            rest = &after[end + 3..];
            continue;
        }
        let Some(after) = rest.strip_prefix('<') else {
            return Err(GrammarError(format!("unexpected text near {:?}", &rest[..rest.len().min(20)])));
        };
        // Quoted values may contain '>'.
        let mut quote = None;
        let mut end = None;
        for (i, c) in after.char_indices() {
            match (quote, c) {
                (None, '"' | '\'') => quote = Some(c),
                (Some(q), c) if c == q => quote = None,
                (None, '>') => {
                    end = Some(i);
                    break;
                }
                _ => {}
            }
        }
        let end = end.ok_or_else(|| GrammarError("unterminated declaration".into()))?;
        out.push(after[..end].to_owned());
        rest = &after[end + 1..];
    }
}

fn expand_entities(decl: &str, entities: &HashMap<String, String>) -> Result<String, GrammarError> {
    if decl.starts_with("!ENTITY") {
        return Ok(decl.to_owned());
    }
    let mut out = String::new();
    let mut rest = decl;
    while let Some(start) = rest.find('%') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        let end = after.find(';').ok_or_else(|| GrammarError("unterminated entity reference".into()))?;
        let name = &after[..end];
        let value = entities.get(name).ok_or_else(|| GrammarError(format!("undefined entity %{name};")))?;
        out.push_str(value);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

struct Tokens<'a> {
    src: &'a str,
}

impl<'a> Tokens<'a> {
    fn new(src: &'a str) -> Self {
        Tokens { src }
    }

    fn skip_ws(&mut self) {
        self.src = self.src.trim_start();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src.chars().next()
    }

    fn word(&mut self) -> Option<String> {
        self.skip_ws();
        let end = self.src.find(|c: char| c.is_whitespace() || c == '(' || c == '"').unwrap_or(self.src.len());
        if end == 0 {
            return None;
        }
        let w = self.src[..end].to_owned();
        self.src = &self.src[end..];
        Some(w)
    }

    fn quoted(&mut self) -> Option<String> {
        self.skip_ws();
        let q = self.src.chars().next().filter(|c| *c == '"' || *c == '\'')?;
        let body = &self.src[1..];
        let end = body.find(q)?;
        let value = body[..end].to_owned();
        self.src = &body[end + 1..];
        Some(value)
    }

    /// Balanced parenthesised group, returned without the outer parentheses.
    fn group(&mut self) -> Option<String> {
        self.skip_ws();
        let mut depth = 0usize;
        for (i, c) in self.src.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 {
                        let inner = self.src[1..i].to_owned();
                        self.src = &self.src[i + 1..];
                        return Some(inner);
                    }
                }
                _ => {}
            }
        }
        None
    }

    fn rest(&mut self) -> String {
        let r = self.src.to_owned();
        self.src = "";
        r
    }
}

fn parse_content_model(spec: &str) -> Result<ContentModel, GrammarError> {
    let chars: Vec<char> = spec.chars().filter(|c| !c.is_whitespace()).collect();
    let mut pos = 0;
    let cm = parse_particle(&chars, &mut pos)?;
    if pos != chars.len() {
        return Err(GrammarError(format!("trailing input in content model {spec:?}")));
    }
    Ok(cm)
}

fn parse_particle(chars: &[char], pos: &mut usize) -> Result<ContentModel, GrammarError> {
    let base = if chars.get(*pos) == Some(&'(') {
        *pos += 1;
        let mut items = vec![parse_particle(chars, pos)?];
        let mut sep = None;
        loop {
            match chars.get(*pos) {
                Some(')') => {
                    *pos += 1;
                    break;
                }
                Some(&c @ (',' | '|')) => {
                    if sep.is_some_and(|s| s != c) {
                        return Err(GrammarError("mixed ',' and '|' in one group".into()));
                    }
                    sep = Some(c);
                    *pos += 1;
                    items.push(parse_particle(chars, pos)?);
                }
                other => return Err(GrammarError(format!("unexpected {other:?} in content model"))),
            }
        }
        let combine = if sep == Some('|') { ContentModel::alt } else { ContentModel::seq };
        let mut iter = items.into_iter().rev();
        let last = iter.next().expect("group has one item");
        iter.fold(last, |acc, item| combine(item, acc))
    } else {
        let start = *pos;
        while let Some(c) = chars.get(*pos) {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':' | '#') {
                *pos += 1;
            } else {
                break;
            }
        }
        if start == *pos {
            return Err(GrammarError("expected element name".into()));
        }
        Name(chars[start..*pos].iter().collect())
    };
    Ok(match chars.get(*pos) {
        Some('?') => {
            *pos += 1;
            ContentModel::alt(Epsilon, base)
        }
        Some('*') => {
            *pos += 1;
            ContentModel::star(base)
        }
        Some('+') => {
            *pos += 1;
            ContentModel::seq(base.clone(), ContentModel::star(base))
        }
        _ => base,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn bundled_grammar_loads() {
        let g = psv();
        for el in [
            "model",
            "set",
            "function",
            "declaration",
            "equation",
            "application",
            "argument",
            "variable",
            "protocol",
            "entity",
            "knowledge",
            "message",
            "pre",
            "post",
            "event",
            "channel",
            "assignment",
            "finalise",
            "correctness",
        ] {
            assert!(g.element(el).is_some(), "{el} declared");
        }
        let decl = g.element("declaration").unwrap();
        assert_eq!(
            decl.attr("type").unwrap().ty,
            AttrType::Enumerated(vec!["nonce".into(), "const".into(), "entity".into(), "var".into()])
        );
        assert!(g.element("message").unwrap().attr("to").unwrap().required);
    }

    #[test]
    fn message_content_model() {
        let g = psv();
        let ok = ["knowledge", "knowledge", "pre", "event", "channel", "event", "post"];
        assert_eq!(g.check_children("message", &ok), Ok(()));
        assert_eq!(g.check_children("message", &["event", "event"]), Ok(()));
        assert_eq!(
            g.check_children("message", &["pre", "event"]),
            Err(ContentMismatch::Missing { expected: names(&["channel", "event"]), required: Some("event".into()) })
        );
        assert_eq!(
            g.check_children("message", &["event", "pre", "event"]),
            Err(ContentMismatch::Unexpected { position: 1, expected: names(&["channel", "event"]) })
        );
    }

    #[test]
    fn missing_protocol() {
        assert_eq!(
            psv().check_children("model", &["set"]),
            Err(ContentMismatch::Missing {
                expected: names(&["declaration", "equation", "function", "protocol", "set"]),
                required: Some("protocol".into())
            })
        );
        assert!(psv().check_children("argument", &["variable"]).is_err());
    }

    #[test]
    fn plus_and_nested_groups() {
        let g = Grammar::parse("<!ELEMENT a (b+, (c|d)?)> <!ELEMENT b EMPTY>").unwrap();
        assert!(g.check_children("a", &["b"]).is_ok());
        assert!(g.check_children("a", &["b", "b", "d"]).is_ok());
        assert!(g.check_children("a", &[]).is_err());
        assert!(g.check_children("a", &["b", "c", "d"]).is_err());
    }

    #[test]
    fn rejects_bad_dtd() {
        assert!(Grammar::parse("<!ELEMENT a (b,c|d)>").is_err());
        assert!(Grammar::parse("<!ATTLIST x y CDATA #REQUIRED>").is_err());
        assert!(Grammar::parse("<!ELEMENT a EMPTY><!ATTLIST a t %m; #IMPLIED>").is_err());
    }
}
