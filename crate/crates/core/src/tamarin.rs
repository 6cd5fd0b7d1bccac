//! Translation to Tamarin multiset rewriting rules.
//!
//! Every entity's part in a message (sending or receiving) becomes one rule.
//! Consecutive rules of an entity are chained through a state fact
//! `St_<Entity>_<n>` carrying the fresh and received values so far;
//! deterministic assignments are inlined. Constants and initial knowledge
//! become public names. An `executability` lemma asks for an honest trace.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use crate::diag::Diagnostic;
use crate::hints::{self, FuncKind};
use crate::model::*;
use crate::names::sanitize;
use crate::validator;

const RESERVED: &[&str] = &[
    "pair",
    "fst",
    "snd",
    "inv",
    "one",
    "DH_neutral",
    "h",
    "senc",
    "sdec",
    "aenc",
    "adec",
    "pk",
    "sign",
    "verify",
    "true",
    "xor",
    "zero",
    "in",
    "let",
    "rule",
    "lemma",
    "restriction",
    "builtins",
    "functions",
    "equations",
    "begin",
    "end",
    "theory",
    "All",
    "Ex",
    "not",
    "F",
    "T",
    "exists",
    "trace",
    "all",
];

fn name(id: &str) -> String {
    sanitize(id, RESERVED)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TTerm {
    Fresh(String),
    Var(String),
    Pub(String),
    App(String, Vec<TTerm>),
    Exp(Box<TTerm>, Box<TTerm>),
    Tuple(Vec<TTerm>),
}

impl fmt::Display for TTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let operand = |t: &TTerm, f: &mut fmt::Formatter<'_>| match t {
            TTerm::Exp(..) => write!(f, "({t})"),
            _ => write!(f, "{t}"),
        };
        match self {
            TTerm::Fresh(n) => write!(f, "~{n}"),
            TTerm::Var(n) => f.write_str(n),
            TTerm::Pub(n) => write!(f, "'{n}'"),
            TTerm::App(fun, args) => write!(f, "{fun}({})", join(args)),
            TTerm::Exp(base, e) => {
                operand(base, f)?;
                f.write_str("^")?;
                operand(e, f)
            }
            TTerm::Tuple(items) => write!(f, "<{}>", join(items)),
        }
    }
}

fn join(items: &[TTerm]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheorySection {
    Header,
    /// Builtins, functions and equations.
    Signature,
    Rules,
    /// The executability lemma and the closing `end`.
    Lemma,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub premises: Vec<String>,
    pub actions: Vec<String>,
    pub conclusions: Vec<String>,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let facts = |fs: &[String]| if fs.is_empty() { "[ ]".to_owned() } else { format!("[ {} ]", fs.join(", ")) };
        writeln!(f, "rule {}:", self.name)?;
        writeln!(f, "    {}", facts(&self.premises))?;
        writeln!(f, "  --{}->", facts(&self.actions))?;
        writeln!(f, "    {}", facts(&self.conclusions))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoryText {
    pub sections: Vec<(TheorySection, String)>,
    pub text: String,
    pub rules: Vec<Rule>,
}

impl TheoryText {
    pub fn section(&self, s: TheorySection) -> Option<&str> {
        self.sections.iter().find(|(k, _)| *k == s).map(|(_, t)| t.as_str())
    }
}

/// Action label recorded when `entity` performs its part in message `index` (1-based).
pub fn role_label(entity: &Identifier, send: bool, index: usize) -> String {
    format!("{}_{entity}_{index}", if send { "Send" } else { "Recv" })
}

/// The exponentiation function, when the model's equations state the
/// commutativity `exp(exp(b, x), y) = exp(exp(b, y), x)` that Tamarin's
/// Diffie-Hellman builtin provides.
fn dh_function(m: &Model) -> Option<(&Identifier, &Identifier)> {
    for eq in &m.equations {
        let f = &eq.lhs.function;
        let Some(decl) = m.function(f.as_str()) else { continue };
        if hints::func_kind(m, decl) != Some(FuncKind::GroupExp) {
            continue;
        }
        let split = |t: &Term| -> Option<(Term, Term, Term)> {
            let Term::App(outer) = t else { return None };
            let [Term::App(inner), y] = outer.args.as_slice() else { return None };
            if outer.function != *f || inner.function != *f {
                return None;
            }
            let [b, x] = inner.args.as_slice() else { return None };
            Some((b.clone(), x.clone(), y.clone()))
        };
        let lhs = split(&Term::App(eq.lhs.clone()));
        let rhs = split(&eq.rhs);
        if let (Some((b1, x1, y1)), Some((b2, x2, y2))) = (lhs, rhs) {
            if b1 == b2 && x1 == y2 && y1 == x2 && x1 != y1 {
                return Some((f, &eq.id));
            }
        }
    }
    None
}

struct Translator<'m> {
    m: &'m Model,
    dh: Option<&'m Identifier>,
}

impl Translator<'_> {
    fn term(&self, t: &Term, subst: &HashMap<Identifier, TTerm>, bound: &HashSet<&Identifier>) -> TTerm {
        match t {
            Term::Var(v) => match subst.get(&v.id) {
                Some(t) => t.clone(),
                None if bound.contains(&v.id) => TTerm::Var(name(v.id.as_str())),
                None => TTerm::Pub(v.id.to_string()),
            },
            Term::App(app) => {
                let args: Vec<_> = app.args.iter().map(|a| self.term(a, subst, bound)).collect();
                if Some(&app.function) == self.dh && args.len() == 2 {
                    let mut it = args.into_iter();
                    let (b, e) = (it.next().expect("two"), it.next().expect("two"));
                    TTerm::Exp(Box::new(b), Box::new(e))
                } else {
                    TTerm::App(name(app.function.as_str()), args)
                }
            }
        }
    }

    fn signature(&self) -> String {
        let m = self.m;
        let mut out = String::new();
        let dh_eq = dh_function(m).map(|(_, eq)| eq);
        if self.dh.is_some() {
            out.push_str("builtins: diffie-hellman\n\n");
        }
        let funs: Vec<String> = m
            .functions
            .iter()
            .filter(|f| Some(&f.id) != self.dh)
            .map(|f| {
                let private = if hints::is_private_function(f) { " [private]" } else { "" };
                format!("{}/{}{private}", name(f.id.as_str()), f.arity())
            })
            .collect();
        if !funs.is_empty() {
            let _ = writeln!(out, "functions: {}\n", funs.join(", "));
        }
        let equations: Vec<String> = m
            .equations
            .iter()
            .filter(|eq| Some(&eq.id) != dh_eq || self.dh.is_none())
            .map(|eq| {
                let bound: HashSet<&Identifier> = eq.quantified.iter().map(|q| &q.id).collect();
                let subst = HashMap::new();
                let lhs = self.term(&Term::App(eq.lhs.clone()), &subst, &bound);
                let rhs = self.term(&eq.rhs, &subst, &bound);
                format!("{lhs} = {rhs}")
            })
            .collect();
        if !equations.is_empty() {
            let _ = writeln!(out, "equations: {}\n", equations.join(",\n           "));
        }
        out
    }

    fn rules(&self) -> Vec<Rule> {
        let m = self.m;
        let reserved_names: HashSet<String> = m.variables.iter().map(|v| name(v.id().as_str())).collect();
        let mut rules: Vec<((usize, bool), Rule)> = Vec::new();
        for e in &m.protocol.entities {
            let roles: Vec<(usize, &Message, bool)> = m
                .protocol
                .messages
                .iter()
                .enumerate()
                .filter_map(|(i, msg)| {
                    if msg.from == e.id {
                        Some((i + 1, msg, true))
                    } else if msg.to == e.id {
                        Some((i + 1, msg, false))
                    } else {
                        None
                    }
                })
                .collect();
            let mut chain =
                Chain { subst: HashMap::new(), state: Vec::new(), used: HashSet::new(), reserved: &reserved_names };
            for v in e.initial_knowledge() {
                chain.subst.insert(v.id.clone(), TTerm::Pub(v.id.to_string()));
            }
            for (k, (index, msg, send)) in roles.iter().enumerate() {
                let mut premises = Vec::new();
                if k > 0 {
                    premises.push(chain.state_fact(&e.id, k));
                }
                let mut actions = vec![format!("{}()", role_label(&e.id, *send, *index))];
                let mut conclusions = Vec::new();
                if *send {
                    self.statements(&mut chain, &msg.pre, &mut premises);
                    let payload = self.payload(&msg.send, &chain);
                    conclusions.push(format!("Out({payload})"));
                } else {
                    let vars: Vec<TTerm> = msg.recv.iter().map(|v| chain.receive(&v.id)).collect();
                    let pattern = if vars.len() == 1 { vars[0].clone() } else { TTerm::Tuple(vars) };
                    premises.push(format!("In({pattern})"));
                    self.statements(&mut chain, &msg.post, &mut premises);
                }
                let last = k + 1 == roles.len();
                if last {
                    if let Some(f) = m.protocol.finalise_for(&e.id) {
                        self.statements(&mut chain, &f.statements, &mut premises);
                        let mut seen = HashSet::new();
                        let values: Vec<String> = f
                            .statements
                            .iter()
                            .filter(|a| seen.insert(&a.target.id))
                            .map(|a| chain.subst[&a.target.id].to_string())
                            .collect();
                        if !values.is_empty() {
                            actions.push(format!("Final_{}({})", e.id, values.join(", ")));
                        }
                    }
                } else {
                    conclusions.push(chain.state_fact(&e.id, k + 1));
                }
                rules.push((
                    (*index, !*send),
                    Rule {
                        name: format!("{}_{}_{index}", e.id, if *send { "send" } else { "recv" }),
                        premises,
                        actions,
                        conclusions,
                    },
                ));
            }
        }
        // Protocol order: message index, then sender before receiver.
        rules.sort_by_key(|(key, _)| *key);
        rules.into_iter().map(|(_, r)| r).collect()
    }

    fn payload(&self, vars: &[VarRef], chain: &Chain<'_>) -> TTerm {
        let items: Vec<TTerm> = vars
            .iter()
            .map(|v| chain.subst.get(&v.id).cloned().unwrap_or_else(|| TTerm::Pub(v.id.to_string())))
            .collect();
        if items.len() == 1 {
            items.into_iter().next().expect("one")
        } else {
            TTerm::Tuple(items)
        }
    }

    fn statements(&self, chain: &mut Chain<'_>, stmts: &[Assignment], premises: &mut Vec<String>) {
        for a in stmts {
            match &a.source {
                AssignSource::Sample(_) => {
                    let fresh = chain.fresh(&a.target.id);
                    premises.push(format!("Fr({fresh})"));
                }
                AssignSource::Term(t) => {
                    let value = self.term(t, &chain.subst, &HashSet::new());
                    chain.subst.insert(a.target.id.clone(), value);
                }
            }
        }
    }
}

/// Per-entity translation state across its rules.
struct Chain<'a> {
    subst: HashMap<Identifier, TTerm>,
    /// Atoms carried in state facts, in introduction order.
    state: Vec<TTerm>,
    used: HashSet<String>,
    reserved: &'a HashSet<String>,
}

impl Chain<'_> {
    fn fresh_name(&mut self, id: &Identifier) -> String {
        let base = name(id.as_str());
        let mut candidate = base.clone();
        let mut n = 2;
        while self.used.contains(&candidate) || (candidate != base && self.reserved.contains(&candidate)) {
            candidate = format!("{base}_{n}");
            n += 1;
        }
        self.used.insert(candidate.clone());
        candidate
    }

    fn fresh(&mut self, id: &Identifier) -> TTerm {
        let t = TTerm::Fresh(self.fresh_name(id));
        self.bind(id, t.clone());
        t
    }

    fn receive(&mut self, id: &Identifier) -> TTerm {
        let t = TTerm::Var(self.fresh_name(id));
        self.bind(id, t.clone());
        t
    }

    fn bind(&mut self, id: &Identifier, t: TTerm) {
        self.subst.insert(id.clone(), t.clone());
        self.state.push(t);
    }

    fn state_fact(&self, entity: &Identifier, k: usize) -> String {
        format!("St_{entity}_{k}({})", join(&self.state))
    }
}

/// `exists-trace` lemma requiring every role label, in protocol order.
pub fn emit_executability_lemma(m: &Model) -> String {
    let labels: Vec<String> = m
        .protocol
        .messages
        .iter()
        .enumerate()
        .flat_map(|(i, msg)| [role_label(&msg.from, true, i + 1), role_label(&msg.to, false, i + 1)])
        .collect();
    let times: Vec<String> = (1..=labels.len()).map(|i| format!("#t{i}")).collect();
    let mut body: Vec<String> = labels.iter().zip(&times).map(|(l, t)| format!("{l}() @ {t}")).collect();
    body.extend(times.windows(2).map(|w| format!("{} < {}", w[0], w[1])));
    format!("lemma executability:\n  exists-trace\n  \"Ex {}.\n      {}\"\n", times.join(" "), body.join("\n    & "))
}

pub fn export(m: &Model) -> Result<TheoryText, Vec<Diagnostic>> {
    let errors: Vec<_> = validator::check_semantics(m).into_iter().filter(Diagnostic::is_error).collect();
    if !errors.is_empty() {
        return Err(errors);
    }
    let t = Translator { m, dh: dh_function(m).map(|(f, _)| f) };
    let theory = m.id.as_ref().map_or("protocol", |id| id.as_str());
    let header = format!("theory {theory}\nbegin\n\n");
    let signature = t.signature();
    let rules = t.rules();
    let rules_text: String = rules.iter().map(|r| format!("{r}\n")).collect();
    let lemma = format!("{}\nend\n", emit_executability_lemma(m));
    let sections = vec![
        (TheorySection::Header, header),
        (TheorySection::Signature, signature),
        (TheorySection::Rules, rules_text),
        (TheorySection::Lemma, lemma),
    ];
    let text = sections.iter().map(|(_, s)| s.as_str()).collect();
    Ok(TheoryText { sections, text, rules })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;
    use crate::xml;

    #[test]
    fn dhke_uses_builtin() {
        let m = xml::parse(samples::DHKE).unwrap();
        let th = export(&m).unwrap();
        assert!(th.text.starts_with("theory dhke\nbegin\n"));
        assert!(th.text.contains("builtins: diffie-hellman"));
        assert!(th.text.contains("functions: eq/2\n"));
        assert!(!th.text.contains("equations:"));
        let names: Vec<_> = th.rules.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["Alice_send_1", "Bob_recv_1", "Bob_send_2", "Alice_recv_2"]);
        assert_eq!(th.rules[0].conclusions, ["Out('g'^~x)", "St_Alice_1(~x)"]);
        assert_eq!(th.rules[3].actions, ["Recv_Alice_2()", "Final_Alice(gy^~x)"]);
        assert!(th.text.trim_end().ends_with("end"));
    }

    #[test]
    fn lemma_orders_all_labels() {
        let m = xml::parse(samples::DHKE).unwrap();
        let l = emit_executability_lemma(&m);
        assert!(l.contains("Ex #t1 #t2 #t3 #t4."));
        assert!(l.contains("Send_Alice_1() @ #t1"));
        assert!(l.contains("Recv_Alice_2() @ #t4"));
        assert!(l.contains("#t3 < #t4\""));
    }

    #[test]
    fn explicit_equations_without_dh() {
        let m = xml::parse(samples::NS).unwrap();
        let th = export(&m).unwrap();
        assert!(!th.text.contains("builtins"));
        assert!(th.text.contains("skey/1 [private]"));
        assert!(th.text.contains("pair_v/2"));
        assert!(th.text.contains("adec_v(aenc_v(u, pkey(w)), skey(w)) = u"));
        assert_eq!(th.rules.len(), 6);
    }

    #[test]
    fn reused_names_are_renamed() {
        let mut m = xml::parse(samples::DHKE).unwrap();
        // Alice sends her share again; Bob receives it under the name he already used.
        let mut third = Message::new(ident("Alice"), ident("Bob"));
        third.send = vec![VarRef::new(ident("gx"))];
        third.recv = vec![VarRef::new(ident("gx"))];
        m.protocol.messages.push(third);
        let th = export(&m).unwrap();
        let bob_recv = th.rules.iter().find(|r| r.name == "Bob_recv_3").unwrap();
        assert_eq!(bob_recv.premises, ["St_Bob_2(gx, ~y)", "In(gx_2)"]);
        assert_eq!(bob_recv.actions, ["Recv_Bob_3()", "Final_Bob(gx_2^~y)"]);
    }
}
