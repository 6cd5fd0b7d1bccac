//! C++ program generation for two-party protocols over a prime-order group.
//!
//! The generated program uses the Crypto++ `Integer` API for arithmetic and
//! the `Channel` class shipped in `formats/cpp` for transport. Each party is
//! selected on the command line: `prog <g> <p> <entity> [host]`.

mod group;
pub mod wire;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::diag::{Diagnostic, ElemPath};
use crate::hints::{self, FuncKind, SetKind};
use crate::model::{AssignSource, Assignment, Identifier, Model, Term};
use crate::names::sanitize;
use crate::validator;

pub use group::{detect_group, GroupSpec};

/// Transport helper sources, to be compiled next to the generated program.
pub const CHANNEL_H: &str = include_str!("../../../../formats/cpp/channel.h");
pub const CHANNEL_CPP: &str = include_str!("../../../../formats/cpp/channel.cpp");

pub const DEFAULT_PORT: u16 = 4433;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CppSource {
    pub text: String,
    pub group: GroupSpec,
    /// Entity that accepts the connection (receiver of the first message).
    pub listener: Identifier,
    /// Entity that connects.
    pub connector: Identifier,
}

const RESERVED: &[&str] = &[
    "alignas",
    "alignof",
    "and",
    "asm",
    "auto",
    "bool",
    "break",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "constexpr",
    "continue",
    "default",
    "delete",
    "do",
    "double",
    "else",
    "enum",
    "explicit",
    "export",
    "extern",
    "false",
    "float",
    "for",
    "friend",
    "goto",
    "if",
    "inline",
    "int",
    "long",
    "main",
    "mutable",
    "namespace",
    "new",
    "noexcept",
    "not",
    "nullptr",
    "operator",
    "or",
    "private",
    "protected",
    "public",
    "register",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "struct",
    "switch",
    "template",
    "this",
    "throw",
    "true",
    "try",
    "typedef",
    "typename",
    "union",
    "unsigned",
    "using",
    "virtual",
    "void",
    "volatile",
    "while",
    "xor",
    "std",
    "CryptoPP",
    "Integer",
    "Channel",
    "rng",
    "sample",
    "send_integer",
    "receive_integer",
    "ch",
    "argc",
    "argv",
    "SECURITY_BITS",
    "DEFAULT_PORT",
];

fn name(id: &Identifier) -> String {
    sanitize(id.as_str(), RESERVED)
}

/// Generates a standalone C++17 program for the model.
pub fn export(m: &Model) -> Result<CppSource, Vec<Diagnostic>> {
    let errors: Vec<_> = validator::check_semantics(m).into_iter().filter(Diagnostic::is_error).collect();
    if !errors.is_empty() {
        return Err(errors);
    }
    let group = detect_group(m).map_err(|d| vec![d])?;
    let diags = check_supported(m, &group);
    if !diags.is_empty() {
        return Err(diags);
    }
    let first = &m.protocol.messages[0];
    let listener = first.to.clone();
    let connector = first.from.clone();
    let text = Emitter { m, group: &group, out: String::new() }.program(&listener, &connector);
    Ok(CppSource { text, group, listener, connector })
}

fn check_supported(m: &Model, group: &GroupSpec) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let protocol = ElemPath::protocol();
    if m.protocol.entities.len() != 2 {
        diags.push(Diagnostic::error(
            protocol.clone(),
            "unsupported-topology",
            format!("C++ export needs exactly two entities, found {}", m.protocol.entities.len()),
        ));
    }

    let mut check_stmt = |path: ElemPath, a: &Assignment| {
        if let AssignSource::Term(t) = &a.source {
            for app in t.applications() {
                if app.function != group.exp {
                    diags.push(Diagnostic::error(
                        path.clone(),
                        "unsupported-function",
                        format!("`{}` has no C++ implementation", app.function),
                    ));
                }
            }
        }
    };
    for (i, msg) in m.protocol.messages.iter().enumerate() {
        let path = protocol.nth("message", i);
        for (j, a) in msg.pre.iter().enumerate() {
            check_stmt(path.child("pre").nth("assignment", j), a);
        }
        for (j, a) in msg.post.iter().enumerate() {
            check_stmt(path.child("post").nth("assignment", j), a);
        }
    }
    for (i, f) in m.protocol.finalise.iter().enumerate() {
        for (j, a) in f.statements.iter().enumerate() {
            check_stmt(protocol.nth("finalise", i).nth("assignment", j), a);
        }
    }

    for (i, v) in m.variables.iter().enumerate() {
        if !used_in_protocol(m, v.id()) {
            continue;
        }
        let path = ElemPath::root().nth("declaration", i);
        if v.set != group.naturals && v.set != group.group {
            diags.push(Diagnostic::error(
                path,
                "unsupported-set",
                format!("`{}` ranges over `{}`, which has no C++ representation", v.id(), v.set),
            ));
        } else if v.is_const() && *v.id() != group.generator && *v.id() != group.modulus {
            diags.push(Diagnostic::error(
                path,
                "unsupported-constant",
                format!("constant `{}` is neither the generator nor the modulus", v.id()),
            ));
        }
    }
    diags
}

fn used_in_protocol(m: &Model, id: &Identifier) -> bool {
    let p = &m.protocol;
    p.entities.iter().any(|e| e.initial_knowledge().iter().any(|v| &v.id == id))
        || p.messages.iter().any(|msg| msg.send.iter().chain(&msg.recv).any(|v| &v.id == id))
        || m.assignments().any(|a| &a.target.id == id || a.source_vars().iter().any(|v| &v.id == id))
}

struct Emitter<'a> {
    m: &'a Model,
    group: &'a GroupSpec,
    out: String,
}

impl Emitter<'_> {
    fn line(&mut self, indent: usize, text: &str) {
        for _ in 0..indent {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn term(&self, t: &Term) -> String {
        match t {
            Term::Var(v) => name(&v.id),
            Term::App(app) => {
                let args: Vec<_> = app.args.iter().map(|a| self.term(a)).collect();
                format!("fn_{}({})", app.function, args.join(", "))
            }
        }
    }

    fn sample_expr(&self, var: &Identifier, set: &Identifier) -> String {
        let range = match hints::set_kind_of(self.m, set.as_str()) {
            SetKind::Group => format!("Integer::One(), {} - Integer::One()", name(&self.group.modulus)),
            _ => "Integer::Two(), Integer::Power2(SECURITY_BITS) - Integer::One()".to_owned(),
        };
        format!("sample(\"{var}\", {range})")
    }

    fn statements(&mut self, stmts: &[Assignment]) {
        for a in stmts {
            let rhs = match &a.source {
                AssignSource::Sample(set) => self.sample_expr(&a.target.id, set),
                AssignSource::Term(t) => self.term(t),
            };
            let line = format!("{} = {rhs};", name(&a.target.id));
            self.line(1, &line);
        }
    }

    fn program(mut self, listener: &Identifier, connector: &Identifier) -> String {
        let m = self.m;
        let g = self.group;
        let model_name = m.id.as_ref().map_or("protocol", |id| id.as_str());
        let file = format!("{model_name}.cpp");
        let exe = model_name.to_owned();
        let gen = name(&g.generator);
        let modulus = name(&g.modulus);
        let roles = m.protocol.entities.iter().map(|e| e.id.as_str()).collect::<Vec<_>>().join("|");

        let _ = write!(
            self.out,
            "\
// Generated by metacp from model `{model_name}`.
//
// Build:
//   g++ -std=c++17 -O2 -o {exe} {file} channel.cpp -lcryptopp -lpthread
// Run one process per party:
//   ./{exe} <{gen}> <{modulus}> {listener}
//   ./{exe} <{gen}> <{modulus}> {connector} [host]
// The port defaults to {DEFAULT_PORT} and can be set with METACP_PORT.
// METACP_FIX_<variable> replaces a sampled value (decimal).

#include <cstdlib>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <cryptopp/integer.h>
#include <cryptopp/nbtheory.h>
#include <cryptopp/osrng.h>

#include \"channel.h\"

using CryptoPP::Integer;

namespace {{

const unsigned SECURITY_BITS = {bits};
const unsigned short DEFAULT_PORT = {DEFAULT_PORT};

Integer {gen};
Integer {modulus};

CryptoPP::AutoSeededRandomPool rng;

Integer fn_{exp}(const Integer& base, const Integer& exponent) {{
  return CryptoPP::a_exp_b_mod_c(base, exponent, {modulus});
}}

Integer sample(const char* var, const Integer& lo, const Integer& hi) {{
  std::string key = std::string(\"METACP_FIX_\") + var;
  if (const char* fixed = std::getenv(key.c_str())) return Integer(fixed);
  return Integer(rng, lo, hi);
}}

void send_integer(Channel& ch, const Integer& v) {{
  std::vector<unsigned char> buf(v.MinEncodedSize());
  v.Encode(buf.data(), buf.size());
  ch.send(buf);
}}

Integer receive_integer(Channel& ch) {{
  std::vector<unsigned char> buf = ch.receive();
  return Integer(buf.data(), buf.size());
}}
",
            bits = g.security_param,
            exp = g.exp,
        );

        for e in &m.protocol.entities {
            self.role(&e.id);
        }

        let _ = write!(
            self.out,
            "
}}  // namespace

int main(int argc, char** argv) {{
  if (argc < 4 || argc > 5) {{
    std::cerr << \"usage: \" << argv[0] << \" <{gen}> <{modulus}> <{roles}> [host]\" << std::endl;
    return 2;
  }}
  {gen} = Integer(argv[1]);
  {modulus} = Integer(argv[2]);
  std::string entity = argv[3];
  std::string host = argc == 5 ? argv[4] : \"localhost\";
  unsigned short port = DEFAULT_PORT;
  if (const char* env = std::getenv(\"METACP_PORT\")) port = static_cast<unsigned short>(std::stoi(env));
  try {{
    if (entity == \"{listener}\") {{
      Channel ch = Channel::listen(port);
      return run_{listener}(ch);
    }}
    if (entity == \"{connector}\") {{
      Channel ch = Channel::connect(host, port);
      return run_{connector}(ch);
    }}
  }} catch (const std::exception& e) {{
    std::cerr << \"error: \" << e.what() << std::endl;
    return 1;
  }}
  std::cerr << \"unknown entity: \" << entity << std::endl;
  return 2;
}}
"
        );
        self.out
    }

    fn role(&mut self, entity: &Identifier) {
        let m = self.m;
        let g = self.group;
        let globals = [&g.generator, &g.modulus];

        let mut locals: BTreeSet<&Identifier> = BTreeSet::new();
        let e = m.entity(entity.as_str()).expect("validated");
        let initial: Vec<_> = e.initial_knowledge().iter().map(|v| &v.id).filter(|id| !globals.contains(id)).collect();
        locals.extend(initial.iter().copied());
        for msg in &m.protocol.messages {
            if &msg.from == entity {
                locals.extend(msg.pre.iter().map(|a| &a.target.id));
            }
            if &msg.to == entity {
                locals.extend(msg.recv.iter().map(|v| &v.id));
                locals.extend(msg.post.iter().map(|a| &a.target.id));
            }
        }
        let finalise = m.protocol.finalise_for(entity);
        if let Some(f) = finalise {
            locals.extend(f.statements.iter().map(|a| &a.target.id));
        }

        self.out.push('\n');
        self.line(0, &format!("int run_{entity}(Channel& ch) {{"));
        if !locals.is_empty() {
            let names: Vec<_> = locals.iter().map(|id| name(id)).collect();
            self.line(1, &format!("Integer {};", names.join(", ")));
        }
        for id in initial {
            let set = &m.variable(id.as_str()).expect("validated").set;
            let line = format!("{} = {};", name(id), self.sample_expr(id, set));
            self.line(1, &line);
        }
        for (i, msg) in m.protocol.messages.iter().enumerate() {
            if &msg.from != entity && &msg.to != entity {
                continue;
            }
            self.line(1, &format!("// message {}: {} -> {}", i + 1, msg.from, msg.to));
            if &msg.from == entity {
                self.statements(&msg.pre);
                for v in &msg.send {
                    self.line(1, &format!("send_integer(ch, {});", name(&v.id)));
                }
            } else {
                for v in &msg.recv {
                    self.line(1, &format!("{} = receive_integer(ch);", name(&v.id)));
                }
                self.statements(&msg.post);
            }
        }
        if let Some(f) = finalise {
            self.line(1, "// finalise");
            self.statements(&f.statements);
            let mut printed = BTreeSet::new();
            for id in f.statements.iter().map(|a| &a.target.id) {
                if printed.insert(id) {
                    self.line(1, &format!("std::cout << \"{id} = \" << {} << std::endl;", name(id)));
                }
            }
        }
        self.line(1, "return 0;");
        self.line(0, "}");
    }
}

/// Whether every function applied in the model's protocol has a C++
/// implementation; used to skip models up front.
pub fn supports_functions(m: &Model) -> bool {
    m.assignments().all(|a| match &a.source {
        AssignSource::Term(t) => t.applications().iter().all(|app| {
            m.function(app.function.as_str()).is_some_and(|f| hints::func_kind(m, f) == Some(FuncKind::GroupExp))
        }),
        AssignSource::Sample(_) => true,
    })
}
