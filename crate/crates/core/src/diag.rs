//! Diagnostics shared by the structural and semantic checks.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathSegment {
    pub name: String,
    /// 1-based position among same-named siblings, for repeatable elements.
    pub index: Option<usize>,
}

/// Element path in the document, e.g. `/model/protocol/message[1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ElemPath(Vec<PathSegment>);

impl ElemPath {
    pub fn root() -> Self {
        ElemPath(vec![PathSegment { name: "model".into(), index: None }])
    }

    pub fn protocol() -> Self {
        Self::root().child("protocol")
    }

    pub fn child(&self, name: &str) -> Self {
        let mut segs = self.0.clone();
        segs.push(PathSegment { name: name.to_owned(), index: None });
        ElemPath(segs)
    }

    /// Child at a 0-based position; rendered 1-based.
    pub fn nth(&self, name: &str, zero_based: usize) -> Self {
        let mut segs = self.0.clone();
        segs.push(PathSegment { name: name.to_owned(), index: Some(zero_based + 1) });
        ElemPath(segs)
    }

    pub fn from_segments(segs: Vec<PathSegment>) -> Self {
        ElemPath(segs)
    }

    pub fn segments(&self) -> &[PathSegment] {
        &self.0
    }

    fn rank(parent: Option<&str>, seg: &PathSegment) -> (usize, usize) {
        const MODEL: &[&str] = &["set", "function", "declaration", "equation", "protocol"];
        const PROTOCOL: &[&str] = &["entity", "message", "finalise", "correctness"];
        let idx = seg.index.unwrap_or(0);
        let order: &[&str] = match parent {
            None => &["model"],
            Some("model") => MODEL,
            Some("protocol") => PROTOCOL,
            Some("message") => {
                // knowledge*, pre, event[1], channel, event[2], post
                let r = match (seg.name.as_str(), idx) {
                    ("knowledge", _) => 0,
                    ("pre", _) => 1,
                    ("event", 0 | 1) => 2,
                    ("channel", _) => 3,
                    ("event", _) => 4,
                    ("post", _) => 5,
                    _ => 6,
                };
                return (r, idx);
            }
            Some("finalise") | Some("entity") => &["knowledge", "assignment"],
            _ => &[],
        };
        let r = order.iter().position(|n| *n == seg.name).unwrap_or(order.len());
        (r, idx)
    }

    /// Orders paths by their position in a canonically serialized document.
    /// A path sorts before all of its descendants.
    pub fn document_cmp(&self, other: &Self) -> Ordering {
        let mut parent: Option<&str> = None;
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            let ord = Self::rank(parent, a).cmp(&Self::rank(parent, b)).then_with(|| a.name.cmp(&b.name));
            if ord != Ordering::Equal {
                return ord;
            }
            parent = Some(a.name.as_str());
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl fmt::Display for ElemPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for seg in &self.0 {
            write!(f, "/{}", seg.name)?;
            if let Some(i) = seg.index {
                write!(f, "[{i}]")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagnostic {
    pub severity: Severity,
    pub path: ElemPath,
    pub code: Cow<'static, str>,
    pub message: String,
}

impl Diagnostic {
    pub fn error(path: ElemPath, code: impl Into<Cow<'static, str>>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, path, code: code.into(), message: message.into() }
    }

    pub fn warning(path: ElemPath, code: impl Into<Cow<'static, str>>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, path, code: code.into(), message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// `severity path code: message`
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}: {}", self.severity, self.path, self.code, self.message)
    }
}

/// One diagnostic per line, each terminated by a newline.
pub fn render(diags: &[Diagnostic]) -> String {
    let mut out = String::new();
    for d in diags {
        out.push_str(&d.to_string());
        out.push('\n');
    }
    out
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// Stable sort into document order.
pub fn sort_document_order(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| a.path.document_cmp(&b.path));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_paths() {
        assert_eq!(ElemPath::root().to_string(), "/model");
        let p = ElemPath::protocol().nth("message", 0).child("pre").nth("assignment", 1);
        assert_eq!(p.to_string(), "/model/protocol/message[1]/pre/assignment[2]");
        let d = Diagnostic::error(ElemPath::root(), "missing-protocol", "no protocol");
        assert_eq!(d.to_string(), "error /model missing-protocol: no protocol");
    }

    #[test]
    fn document_order() {
        let msg = ElemPath::protocol().nth("message", 0);
        let mut paths = vec![
            ElemPath::protocol().nth("finalise", 0),
            msg.nth("event", 1),
            msg.child("channel"),
            msg.child("pre"),
            msg.nth("event", 0),
            ElemPath::root().nth("declaration", 2),
            ElemPath::protocol().nth("message", 1),
            msg.clone(),
            ElemPath::root().nth("set", 0),
        ];
        paths.sort_by(|a, b| a.document_cmp(b));
        let rendered: Vec<String> = paths.iter().map(|p| p.to_string()).collect();
        assert_eq!(
            rendered,
            [
                "/model/set[1]",
                "/model/declaration[3]",
                "/model/protocol/message[1]",
                "/model/protocol/message[1]/pre",
                "/model/protocol/message[1]/event[1]",
                "/model/protocol/message[1]/channel",
                "/model/protocol/message[1]/event[2]",
                "/model/protocol/message[2]",
                "/model/protocol/finalise[1]",
            ]
        );
    }
}
