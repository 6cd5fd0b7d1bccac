//! Model, checker and exporter invariants over generated models.

use std::collections::{BTreeSet, HashMap};

use metacp::model::{AssignSource, Model, Namespace, Term};
use metacp::validator::{self, Step, Value};
use metacp::{cpp, proverif, samples, tamarin, testgen, xml};
use proptest::prelude::*;

fn dhke() -> Model {
    xml::parse(samples::DHKE).unwrap()
}

/// Every term in the model: statement sources, equation sides, properties.
fn all_terms(m: &Model) -> Vec<Term> {
    let mut out: Vec<Term> = m
        .assignments()
        .filter_map(|a| match &a.source {
            AssignSource::Term(t) => Some(t.clone()),
            AssignSource::Sample(_) => None,
        })
        .collect();
    for e in &m.equations {
        out.push(Term::App(e.lhs.clone()));
        out.push(e.rhs.clone());
    }
    out.extend(m.protocol.properties.iter().map(|p| Term::App(p.relation.clone())));
    out
}

fn arity_ok(m: &Model, t: &Term) -> bool {
    match t {
        Term::Var(_) => true,
        Term::App(app) => {
            m.function(app.function.as_str()).is_some_and(|f| f.arity() == app.args.len())
                && app.args.iter().all(|a| arity_ok(m, a))
        }
    }
}

fn ids(m: &Model, ns: Namespace) -> Vec<String> {
    match ns {
        Namespace::Set => m.sets.iter().map(|s| s.id.to_string()).collect(),
        Namespace::Function => m.functions.iter().map(|f| f.id.to_string()).collect(),
        Namespace::Variable => m.variables.iter().map(|v| v.id().to_string()).collect(),
        Namespace::Entity => m.protocol.entities.iter().map(|e| e.id.to_string()).collect(),
        Namespace::Channel => m.channels().iter().map(|c| c.id.to_string()).collect(),
    }
}

/// Identifier-like tokens of a line, with whether each is followed by `(`.
fn tokens(line: &str) -> Vec<(String, bool)> {
    let mut out = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\'' {
            i += 1;
            while i < chars.len() && chars[i] != '\'' {
                i += 1;
            }
            i += 1;
        } else if c.is_ascii_alphanumeric() || c == '_' || c == '~' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '~') {
                i += 1;
            }
            let tok: String = chars[start..i].iter().collect();
            let called = chars.get(i) == Some(&'(');
            if !tok.chars().all(|c| c.is_ascii_digit()) {
                out.push((tok, called));
            }
        } else {
            i += 1;
        }
    }
    out
}

/// Names declared at the top level of a ProVerif script.
fn pv_declared(script: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for l in script.lines() {
        for kw in ["type ", "const ", "free ", "fun ", "table ", "event "] {
            if let Some(rest) = l.strip_prefix(kw) {
                let name: String = rest.chars().take_while(|c| c.is_ascii_alphanumeric() || *c == '_').collect();
                out.insert(name);
            }
        }
    }
    out
}

/// Identifiers in process bodies that are neither declared nor bound.
fn pv_free_identifiers(script: &str) -> Vec<String> {
    let declared = pv_declared(script);
    let keywords = ["new", "let", "in", "out", "insert", "get", "event"];
    let mut free = Vec::new();
    let mut bound: BTreeSet<String> = BTreeSet::new();
    let mut in_proc = false;
    for l in script.lines() {
        if l.starts_with("let proc_") {
            in_proc = !l.trim_end().ends_with("0.");
            bound.clear();
            continue;
        }
        if !in_proc {
            continue;
        }
        let l = l.trim();
        if l == "0." {
            in_proc = false;
            continue;
        }
        let toks = tokens(l);
        let mut binders = BTreeSet::new();
        if l.starts_with("new ") || l.starts_with("let ") {
            binders.insert(toks[1].0.clone());
        } else if l.starts_with("in(") {
            for part in l.split([',', '(', ')']) {
                if let Some((v, _)) = part.split_once(':') {
                    binders.insert(v.trim().to_owned());
                }
            }
        }
        for (t, _) in &toks {
            if !keywords.contains(&t.as_str()) && !declared.contains(t) && !bound.contains(t) && !binders.contains(t) {
                free.push(t.clone());
            }
        }
        bound.extend(binders);
    }
    free
}

/// Variables of a rule's actions and conclusions not bound by its premises.
fn tamarin_unbound(rule: &tamarin::Rule) -> Vec<String> {
    let vars = |facts: &[String]| -> BTreeSet<String> {
        facts.iter().flat_map(|f| tokens(f)).filter(|(_, called)| !called).map(|(t, _)| t).collect()
    };
    let lhs = vars(&rule.premises);
    let mut rhs = vars(&rule.conclusions);
    rhs.extend(vars(&rule.actions));
    rhs.difference(&lhs).cloned().collect()
}

fn small_primes() -> Vec<u64> {
    vec![23, 47, 59, 83, 107, 1019, 65_537, 2_147_483_647, 4_294_967_291, 18_446_744_073_709_551_557]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn applications_match_arity(seed in any::<u64>()) {
        let m = testgen::model(seed);
        for t in all_terms(&m) {
            prop_assert!(arity_ok(&m, &t));
        }
    }

    #[test]
    fn resolve_is_partial_function(seed in any::<u64>()) {
        let m = testgen::model(seed);
        for ns in [Namespace::Set, Namespace::Function, Namespace::Variable, Namespace::Entity, Namespace::Channel] {
            let mut seen = HashMap::new();
            for id in ids(&m, ns) {
                *seen.entry(id).or_insert(0) += 1;
            }
            prop_assert!(seen.values().all(|n| *n == 1), "duplicate in {:?}", ns);
        }
    }

    #[test]
    fn round_trip_and_stable_free_variables(seed in any::<u64>()) {
        let m = testgen::model(seed);
        let text = xml::serialize(&m);
        prop_assert_eq!(&text, &xml::serialize(&m));
        let back = xml::parse(&text).unwrap();
        prop_assert_eq!(&back, &m);
        for (a, b) in all_terms(&m).iter().zip(all_terms(&back).iter()) {
            prop_assert_eq!(a.free_variables(), b.free_variables());
        }
    }

    #[test]
    fn structure_check_ignores_references(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let mut m = testgen::model(seed);
        let n = m.protocol.messages.len();
        let msg = &mut m.protocol.messages[pick.index(n)];
        msg.to = metacp::model::ident("Mallory");
        let text = xml::serialize(&m);
        prop_assert!(xml::validate_structure(&text).is_empty());
        let errs = xml::parse(&text).unwrap_err();
        prop_assert!(errs.iter().any(|d| d.code == "undeclared-entity"));
    }

    #[test]
    fn knowledge_is_monotone(seed in any::<u64>()) {
        let m = testgen::model(seed);
        let trace = validator::knowledge_trace(&m).unwrap();
        for e in &trace.entities {
            prop_assert_eq!(e.snapshots[0].step, Step::Initial);
            for w in e.snapshots.windows(2) {
                prop_assert!(w[0].vars.is_subset(&w[1].vars));
            }
        }
    }

    #[test]
    fn sends_are_known(seed in any::<u64>()) {
        let m = testgen::model(seed);
        prop_assert!(!metacp::diag::has_errors(&validator::check_semantics(&m)));
        let mut known: HashMap<String, BTreeSet<String>> = m
            .protocol
            .entities
            .iter()
            .map(|e| (e.id.to_string(), e.initial_knowledge().iter().map(|v| v.id.to_string()).collect()))
            .collect();
        for msg in &m.protocol.messages {
            let k = known.get_mut(msg.from.as_str()).unwrap();
            k.extend(msg.pre.iter().map(|a| a.target.id.to_string()));
            for v in &msg.send {
                prop_assert!(k.contains(v.id.as_str()));
            }
            let k = known.get_mut(msg.to.as_str()).unwrap();
            k.extend(msg.recv.iter().map(|v| v.id.to_string()));
            k.extend(msg.post.iter().map(|a| a.target.id.to_string()));
        }
    }

    #[test]
    fn typing_is_total(seed in any::<u64>()) {
        let m = testgen::model(seed);
        for t in all_terms(&m) {
            prop_assert!(validator::type_of(&m, &t).is_ok(), "untyped term {:?}", t);
        }
    }

    #[test]
    fn dhke_keys_agree(pi in 0..10usize, seed in any::<u64>()) {
        let p = small_primes()[pi];
        let m = dhke();
        let bind = [("g", Value::from(3u64)), ("p", Value::from(p))];
        let a = validator::interpret_concrete(&m, seed, &bind).unwrap();
        let b = validator::interpret_concrete(&m, seed, &bind).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.final_value("kA").is_some());
        prop_assert_eq!(a.final_value("kA"), a.final_value("kB"));
        prop_assert_eq!(a.properties(&m).unwrap(), vec![true]);
    }

    #[test]
    fn proverif_has_no_free_identifiers(seed in any::<u64>()) {
        let m = testgen::model(seed);
        let pi = proverif::export(&m).unwrap();
        prop_assert_eq!(pi.sections.iter().map(|(_, s)| s.as_str()).collect::<String>(), pi.text.clone());
        let free = pv_free_identifiers(&pi.text);
        prop_assert!(free.is_empty(), "free {:?} in\n{}", free, pi.text);
        prop_assert_eq!(proverif::export(&m).unwrap().text, pi.text);
    }

    #[test]
    fn tamarin_rules_are_well_formed(seed in any::<u64>()) {
        let m = testgen::model(seed);
        let th = tamarin::export(&m).unwrap();
        prop_assert_eq!(th.sections.iter().map(|(_, s)| s.as_str()).collect::<String>(), th.text.clone());
        prop_assert_eq!(th.rules.len(), 2 * m.protocol.messages.len());
        for r in &th.rules {
            let unbound = tamarin_unbound(r);
            prop_assert!(unbound.is_empty(), "{} leaves {:?} unbound", r.name, unbound);
        }
        prop_assert_eq!(tamarin::export(&m).unwrap().text, th.text);
    }
}

#[test]
fn equations_quantify_their_variables() {
    let m = dhke();
    for e in &m.equations {
        let q: BTreeSet<_> = e.quantified.iter().map(|v| v.id.clone()).collect();
        for t in [Term::App(e.lhs.clone()), e.rhs.clone()] {
            for v in t.free_variables() {
                let decl = m.variable(v.id.as_str()).unwrap();
                assert!(q.contains(&v.id) || decl.is_const(), "{} not quantified", v.id);
            }
        }
    }

    let mut broken = dhke();
    broken.equations[0].quantified.pop();
    assert!(validator::check_semantics(&broken).iter().any(|d| d.code == "unquantified-variable"));
}

#[test]
fn tamarin_dhke_rules_well_formed() {
    let th = tamarin::export(&dhke()).unwrap();
    assert_eq!(th.rules.len(), 4);
    for r in &th.rules {
        assert!(tamarin_unbound(r).is_empty(), "{}: {:?}", r.name, tamarin_unbound(r));
    }
}

#[test]
fn proverif_samples_have_no_free_identifiers() {
    for (name, doc) in samples::ALL {
        let pi = proverif::export(&xml::parse(doc).unwrap()).unwrap();
        assert!(pv_free_identifiers(&pi.text).is_empty(), "{name}: {:?}", pv_free_identifiers(&pi.text));
    }
}

#[test]
fn cpp_emission_is_deterministic() {
    let m = dhke();
    assert_eq!(cpp::export(&m).unwrap(), cpp::export(&m).unwrap());
}

#[test]
fn checkers_catch_free_names() {
    let script = "free c: channel.\n\nlet proc_A =\n  new x: N;\n  out(c, (x, zz));\n  0.\n";
    assert_eq!(pv_free_identifiers(script), ["N", "zz"]);
    let rule = tamarin::Rule {
        name: "r".into(),
        premises: vec!["In(a)".into(), "Fr(~n)".into()],
        actions: vec!["Act(b)".into()],
        conclusions: vec!["Out(<a, ~n, 'g'^~m>)".into()],
    };
    assert_eq!(tamarin_unbound(&rule), ["b", "~m"]);
}
