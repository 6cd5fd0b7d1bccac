use std::fmt::Write as _;

use crate::model::*;

/// Canonical PSV writer: two-space indentation, fixed attribute order,
/// self-closing empty elements, UTF-8 without BOM, trailing newline.
pub(crate) fn serialize(m: &Model) -> String {
    let mut w = Writer { out: String::new(), depth: 0 };
    w.out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    w.model(m);
    w.out
}

struct Writer {
    out: String,
    depth: usize,
}

type Attrs<'a> = Vec<(&'static str, &'a str)>;

fn escape(value: &str) -> String {
    let mut s = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '&' => s.push_str("&amp;"),
            '<' => s.push_str("&lt;"),
            '>' => s.push_str("&gt;"),
            '"' => s.push_str("&quot;"),
            '\n' => s.push_str("&#10;"),
            '\t' => s.push_str("&#9;"),
            c => s.push(c),
        }
    }
    s
}

impl Writer {
    fn tag(&mut self, name: &str, attrs: &Attrs<'_>, close: &str) {
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        self.out.push('<');
        self.out.push_str(name);
        for (k, v) in attrs {
            let _ = write!(self.out, " {k}=\"{}\"", escape(v));
        }
        self.out.push_str(close);
        self.out.push('\n');
    }

    fn empty(&mut self, name: &str, attrs: Attrs<'_>) {
        self.tag(name, &attrs, "/>");
    }

    fn open(&mut self, name: &str, attrs: Attrs<'_>) {
        self.tag(name, &attrs, ">");
        self.depth += 1;
    }

    fn close(&mut self, name: &str) {
        self.depth -= 1;
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        let _ = writeln!(self.out, "</{name}>");
    }

    /// Writes `name` with `body` as children, or self-closing when `empty`.
    fn element(&mut self, name: &str, attrs: Attrs<'_>, empty: bool, body: impl FnOnce(&mut Self)) {
        if empty {
            self.empty(name, attrs);
        } else {
            self.open(name, attrs);
            body(self);
            self.close(name);
        }
    }

    fn model(&mut self, m: &Model) {
        let security = m.security.map(|s| s.to_string());
        let mut attrs: Attrs = Vec::new();
        if let Some(id) = &m.id {
            attrs.push(("id", id.as_str()));
        }
        if let Some(s) = &security {
            attrs.push(("security", s));
        }
        self.open("model", attrs);

        for set in &m.sets {
            let mut attrs: Attrs = vec![("id", set.id.as_str())];
            push_hint(&mut attrs, &set.hint);
            self.element("set", attrs, set.element_sets.is_empty(), |w| {
                for el in &set.element_sets {
                    w.empty("set", vec![("id", el.as_str())]);
                }
            });
        }
        for f in &m.functions {
            let arity = f.arity().to_string();
            let mut attrs: Attrs = vec![("id", f.id.as_str()), ("set", f.result.as_str()), ("arity", &arity)];
            push_hint(&mut attrs, &f.hint);
            self.element("function", attrs, f.params.is_empty(), |w| {
                for p in &f.params {
                    w.empty("set", vec![("id", p.as_str())]);
                }
            });
        }
        for v in &m.variables {
            let mut attrs: Attrs = Vec::new();
            if let Some(modifier) = v.var.modifier {
                attrs.push(("type", modifier.as_str()));
            }
            attrs.push(("variable", v.var.id.as_str()));
            if let Some(scope) = &v.scope {
                attrs.push(("entity", scope.as_str()));
            }
            attrs.push(("set", v.set.as_str()));
            push_hint(&mut attrs, &v.hint);
            self.empty("declaration", attrs);
        }
        for eq in &m.equations {
            self.open("equation", vec![("id", eq.id.as_str())]);
            for q in &eq.quantified {
                self.var_ref("variable", q);
            }
            self.application(&eq.lhs);
            self.term(&eq.rhs);
            self.close("equation");
        }
        self.protocol(&m.protocol);
        self.close("model");
    }

    fn var_ref(&mut self, tag: &str, v: &VarRef) {
        let mut attrs: Attrs = Vec::new();
        if let Some(modifier) = v.modifier {
            attrs.push(("type", modifier.as_str()));
        }
        attrs.push(("id", v.id.as_str()));
        self.empty(tag, attrs);
    }

    fn term(&mut self, t: &Term) {
        match t {
            Term::Var(v) => self.var_ref("argument", v),
            Term::App(a) => self.application(a),
        }
    }

    fn application(&mut self, a: &Application) {
        self.element("application", vec![("function", a.function.as_str())], a.args.is_empty(), |w| {
            for arg in &a.args {
                w.term(arg);
            }
        });
    }

    fn knowledge(&mut self, k: &Knowledge) {
        self.element("knowledge", vec![("entity", k.owner.as_str())], k.vars.is_empty(), |w| {
            for v in &k.vars {
                w.var_ref("variable", v);
            }
        });
    }

    fn assignment(&mut self, a: &Assignment) {
        match &a.source {
            AssignSource::Sample(set) => self.empty(
                "assignment",
                vec![("type", "probabilistic"), ("variable", a.target.id.as_str()), ("set", set.as_str())],
            ),
            AssignSource::Term(t) => {
                self.open("assignment", vec![("type", "deterministic"), ("variable", a.target.id.as_str())]);
                self.term(t);
                self.close("assignment");
            }
        }
    }

    fn statements(&mut self, tag: &str, stmts: &[Assignment]) {
        self.element(tag, Vec::new(), stmts.is_empty(), |w| {
            for s in stmts {
                w.assignment(s);
            }
        });
    }

    fn event(&mut self, ty: &'static str, payload: &[VarRef]) {
        self.element("event", vec![("type", ty)], payload.is_empty(), |w| {
            for v in payload {
                w.var_ref("variable", v);
            }
        });
    }

    fn protocol(&mut self, p: &Protocol) {
        self.open("protocol", Vec::new());
        for e in &p.entities {
            self.element("entity", vec![("id", e.id.as_str())], e.knowledge.is_none(), |w| {
                if let Some(k) = &e.knowledge {
                    w.knowledge(k);
                }
            });
        }
        for m in &p.messages {
            self.open("message", vec![("from", m.from.as_str()), ("to", m.to.as_str())]);
            for k in &m.knowledge {
                self.knowledge(k);
            }
            self.statements("pre", &m.pre);
            self.event("send", &m.send);
            match &m.channel {
                None => self.empty("channel", Vec::new()),
                Some(c) => {
                    let attrs = vec![("type", c.modifier.as_str()), ("id", c.id.as_str())];
                    self.element("channel", attrs, c.content.is_empty(), |w| {
                        for t in &c.content {
                            w.term(t);
                        }
                    });
                }
            }
            self.event("receive", &m.recv);
            self.statements("post", &m.post);
            self.close("message");
        }
        for f in &p.finalise {
            if f.knowledge.is_none() && f.statements.is_empty() {
                continue;
            }
            self.open("finalise", vec![("entity", f.entity.as_str())]);
            if let Some(k) = &f.knowledge {
                self.knowledge(k);
            }
            for s in &f.statements {
                self.assignment(s);
            }
            self.close("finalise");
        }
        for prop in &p.properties {
            self.open("correctness", Vec::new());
            self.application(&prop.relation);
            self.close("correctness");
        }
        self.close("protocol");
    }
}

fn push_hint<'a>(attrs: &mut Attrs<'a>, hint: &'a Option<Hint>) {
    if let Some(h) = hint {
        attrs.push(("hint", h.as_str()));
    }
}
