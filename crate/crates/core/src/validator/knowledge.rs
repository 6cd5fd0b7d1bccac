use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::diag::{Diagnostic, ElemPath};
use crate::model::{Assignment, Identifier, Knowledge, Model};

/// Point in a protocol run at which an entity's knowledge is recorded.
/// Message indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    Initial,
    AfterPre(usize),
    AfterRecv(usize),
    AfterPost(usize),
    AfterFinalise,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Initial => f.write_str("initial"),
            Step::AfterPre(i) => write!(f, "after-pre({i})"),
            Step::AfterRecv(i) => write!(f, "after-recv({i})"),
            Step::AfterPost(i) => write!(f, "after-post({i})"),
            Step::AfterFinalise => f.write_str("after-finalise"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub step: Step,
    pub vars: BTreeSet<Identifier>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityTrace {
    pub entity: Identifier,
    /// In execution order; always starts with `initial` and ends with `after-finalise`.
    pub snapshots: Vec<Snapshot>,
}

impl EntityTrace {
    pub fn at(&self, step: Step) -> Option<&BTreeSet<Identifier>> {
        self.snapshots.iter().find(|s| s.step == step).map(|s| &s.vars)
    }

    pub fn final_knowledge(&self) -> &BTreeSet<Identifier> {
        &self.snapshots.last().expect("trace has an initial snapshot").vars
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KnowledgeTrace {
    pub entities: Vec<EntityTrace>,
}

impl KnowledgeTrace {
    pub fn entity(&self, id: &str) -> Option<&EntityTrace> {
        self.entities.iter().find(|e| e.entity == id)
    }

    pub fn knowledge(&self, entity: &str, step: Step) -> Option<&BTreeSet<Identifier>> {
        self.entity(entity)?.at(step)
    }
}

/// One line per snapshot: `Alice after-pre(1): {g, gx, x}`.
impl fmt::Display for KnowledgeTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entities {
            for s in &e.snapshots {
                let vars: Vec<&str> = s.vars.iter().map(Identifier::as_str).collect();
                writeln!(f, "{} {}: {{{}}}", e.entity, s.step, vars.join(", "))?;
            }
        }
        Ok(())
    }
}

/// Forward pass over the protocol. Fails with the error diagnostics when a
/// statement uses, or a send carries, a variable its entity does not know.
pub fn knowledge_trace(m: &Model) -> Result<KnowledgeTrace, Vec<Diagnostic>> {
    let (trace, diags) = trace_diagnostics(m);
    let errors: Vec<_> = diags.into_iter().filter(Diagnostic::is_error).collect();
    if errors.is_empty() {
        Ok(trace)
    } else {
        Err(errors)
    }
}

struct Tracer<'m> {
    current: HashMap<&'m Identifier, BTreeSet<Identifier>>,
    traces: Vec<EntityTrace>,
    diags: Vec<Diagnostic>,
}

impl<'m> Tracer<'m> {
    fn snapshot(&mut self, entity: &Identifier, step: Step) {
        let Some(vars) = self.current.get(entity) else { return };
        if let Some(t) = self.traces.iter_mut().find(|t| &t.entity == entity) {
            t.snapshots.push(Snapshot { step, vars: vars.clone() });
        }
    }

    fn annotation(&mut self, path: ElemPath, k: &Knowledge) {
        let Some(known) = self.current.get(&k.owner) else { return };
        let claimed: BTreeSet<&Identifier> = k.vars.iter().map(|v| &v.id).collect();
        let missing: Vec<&str> = known.iter().filter(|v| !claimed.contains(v)).map(Identifier::as_str).collect();
        let extra: Vec<&str> = claimed.iter().filter(|v| !known.contains(**v)).map(|v| v.as_str()).collect();
        if missing.is_empty() && extra.is_empty() {
            return;
        }
        let mut msg = format!("stated knowledge of `{}` differs from the derived one:", k.owner);
        if !missing.is_empty() {
            msg.push_str(&format!(" omits {{{}}}", missing.join(", ")));
        }
        if !extra.is_empty() {
            msg.push_str(&format!(" claims unknown {{{}}}", extra.join(", ")));
        }
        self.diags.push(Diagnostic::warning(path, "knowledge-mismatch", msg));
    }

    fn statements(&mut self, entity: &Identifier, base: &ElemPath, stmts: &[Assignment]) {
        let Some(known) = self.current.get_mut(entity) else { return };
        for (j, a) in stmts.iter().enumerate() {
            for v in a.source_vars() {
                if !known.contains(&v.id) {
                    self.diags.push(Diagnostic::error(
                        base.nth("assignment", j),
                        "unknown-variable-in-statement",
                        format!("`{entity}` uses `{}` before knowing it", v.id),
                    ));
                }
            }
            known.insert(a.target.id.clone());
        }
    }
}

pub(crate) fn trace_diagnostics(m: &Model) -> (KnowledgeTrace, Vec<Diagnostic>) {
    let p = &m.protocol;
    let mut t = Tracer { current: HashMap::new(), traces: Vec::new(), diags: Vec::new() };
    for e in &p.entities {
        if t.current.contains_key(&e.id) {
            continue;
        }
        let vars: BTreeSet<Identifier> = e.initial_knowledge().iter().map(|v| v.id.clone()).collect();
        t.traces.push(EntityTrace {
            entity: e.id.clone(),
            snapshots: vec![Snapshot { step: Step::Initial, vars: vars.clone() }],
        });
        t.current.insert(&e.id, vars);
    }

    let protocol = ElemPath::protocol();
    for (i, msg) in p.messages.iter().enumerate() {
        let n = i + 1;
        let path = protocol.nth("message", i);
        for (k, know) in msg.knowledge.iter().enumerate() {
            t.annotation(path.nth("knowledge", k), know);
        }

        t.statements(&msg.from, &path.child("pre"), &msg.pre);
        t.snapshot(&msg.from, Step::AfterPre(n));

        if let Some(known) = t.current.get(&msg.from) {
            for v in &msg.send {
                if !known.contains(&v.id) {
                    t.diags.push(Diagnostic::error(
                        path.nth("event", 0),
                        "send-of-unknown-variable",
                        format!("`{}` sends `{}` without knowing it", msg.from, v.id),
                    ));
                }
            }
        }

        if let Some(known) = t.current.get_mut(&msg.to) {
            known.extend(msg.recv.iter().map(|v| v.id.clone()));
        }
        t.snapshot(&msg.to, Step::AfterRecv(n));
        t.statements(&msg.to, &path.child("post"), &msg.post);
        t.snapshot(&msg.to, Step::AfterPost(n));
    }

    for (i, f) in p.finalise.iter().enumerate() {
        let path = protocol.nth("finalise", i);
        if let Some(k) = &f.knowledge {
            t.annotation(path.child("knowledge"), k);
        }
        t.statements(&f.entity, &path, &f.statements);
    }
    let ids: Vec<Identifier> = t.traces.iter().map(|tr| tr.entity.clone()).collect();
    for id in &ids {
        t.snapshot(id, Step::AfterFinalise);
    }
    (KnowledgeTrace { entities: t.traces }, t.diags)
}
