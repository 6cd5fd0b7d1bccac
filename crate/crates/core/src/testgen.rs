//! Seeded generator of small valid models, for property tests and benches.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::*;
use crate::validator;

const ENTITIES: &[&str] = &["Alice", "Bob", "Carol"];
const MAX_VARIABLES: usize = 6;
const MAX_MESSAGES: usize = 3;

/// A model with two or three entities, at most three messages and at most
/// six variables that passes every semantic check. Equal seeds give equal models.
pub fn model(seed: u64) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let m = Gen::new(&mut rng).build();
        if !crate::diag::has_errors(&validator::check_semantics(&m)) {
            return m;
        }
    }
}

struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    m: Model,
}

impl<'r> Gen<'r> {
    fn new(rng: &'r mut ChaCha8Rng) -> Self {
        Gen { rng, m: Model::default() }
    }

    fn set_of(&self, var: &Identifier) -> Identifier {
        self.m.variable(var.as_str()).expect("declared").set.clone()
    }

    /// A term of `set` built from `known`, or `None` when there is none.
    fn term(&mut self, set: &Identifier, known: &[Identifier], depth: usize) -> Option<Term> {
        let vars: Vec<&Identifier> =
            known.iter().filter(|v| self.m.variable(v.as_str()).is_some_and(|d| &d.set == set)).collect();
        let funcs: Vec<FuncDecl> = self.m.functions.iter().filter(|f| &f.result == set).cloned().collect();
        let use_fn = depth > 0 && !funcs.is_empty() && (vars.is_empty() || self.rng.gen_bool(0.7));
        if use_fn {
            let f = funcs.choose(self.rng).expect("non-empty").clone();
            let mut args = Vec::new();
            for p in &f.params {
                args.push(self.term(p, known, depth - 1)?);
            }
            return Some(Term::app(f.id, args));
        }
        vars.choose(self.rng).map(|v| Term::var((*v).clone()))
    }

    fn statements(&mut self, known: &mut Vec<Identifier>, targets: &[Identifier]) -> Vec<Assignment> {
        let n = self.rng.gen_range(0..=2);
        let mut out = Vec::new();
        for _ in 0..n {
            let target = targets.choose(self.rng).expect("non-empty").clone();
            let set = self.set_of(&target);
            let det = if self.rng.gen_bool(0.5) { self.term(&set, known, 2) } else { None };
            out.push(match det {
                Some(t) => Assignment::deterministic(target.clone(), t),
                None => Assignment::probabilistic(target.clone(), set),
            });
            if !known.contains(&target) {
                known.push(target);
            }
        }
        out
    }

    fn build(mut self) -> Model {
        let rng = &mut *self.rng;
        self.m.id = Some(ident("generated"));
        let sets = [ident("S0"), ident("S1")];
        for s in &sets {
            self.m.sets.push(SetDecl { id: s.clone(), element_sets: vec![], hint: None });
        }
        for i in 0..rng.gen_range(1..=3) {
            let arity = rng.gen_range(1..=2);
            let params = (0..arity).map(|_| sets.choose(rng).expect("two").clone()).collect();
            let result = sets.choose(rng).expect("two").clone();
            self.m.functions.push(FuncDecl { id: ident(&format!("f{i}")), params, result, hint: None });
        }

        // Variables: at least one assignable variable per set, and one constant.
        let n_vars = rng.gen_range(3..=MAX_VARIABLES);
        let n_const = rng.gen_range(1..=2.min(n_vars - 2));
        let mut assignable = Vec::new();
        let mut constants = Vec::new();
        for i in 0..n_vars {
            let id = ident(&format!("v{i}"));
            let is_const = i >= n_vars - n_const;
            let set = if i < 2 { sets[i].clone() } else { sets.choose(rng).expect("two").clone() };
            let modifier = if is_const { Some(VarModifier::Const) } else { None };
            self.m.variables.push(VarDecl { var: VarRef { id: id.clone(), modifier }, set, scope: None, hint: None });
            if is_const {
                constants.push(id);
            } else {
                assignable.push(id);
            }
        }

        let n_entities = if rng.gen_bool(0.8) { 2 } else { 3 };
        let entities: Vec<Identifier> = ENTITIES[..n_entities].iter().map(|e| ident(e)).collect();
        let mut known: Vec<Vec<Identifier>> = Vec::new();
        for e in &entities {
            let vars: Vec<VarRef> = constants.iter().cloned().map(VarRef::new).collect();
            self.m
                .protocol
                .entities
                .push(Entity { id: e.clone(), knowledge: Some(Knowledge { owner: e.clone(), vars }) });
            known.push(constants.clone());
        }

        let n_messages = self.rng.gen_range(1..=MAX_MESSAGES);
        for _ in 0..n_messages {
            let from = self.rng.gen_range(0..n_entities);
            let to = (from + self.rng.gen_range(1..n_entities)) % n_entities;
            let mut msg = Message::new(entities[from].clone(), entities[to].clone());

            let mut k = std::mem::take(&mut known[from]);
            msg.pre = self.statements(&mut k, &assignable);
            let n_send = self.rng.gen_range(1..=2);
            for _ in 0..n_send {
                let v = k.choose(self.rng).expect("constants are known").clone();
                let set = self.set_of(&v);
                let same: Vec<&Identifier> = assignable.iter().filter(|a| self.set_of(a) == set).collect();
                let r = (*same.choose(self.rng).expect("one per set")).clone();
                msg.send.push(VarRef::new(v));
                msg.recv.push(VarRef::new(r));
            }
            known[from] = k;

            let mut k = std::mem::take(&mut known[to]);
            for r in &msg.recv {
                if !k.contains(&r.id) {
                    k.push(r.id.clone());
                }
            }
            msg.post = self.statements(&mut k, &assignable);
            known[to] = k;
            self.m.protocol.messages.push(msg);
        }

        for (i, e) in entities.iter().enumerate() {
            if self.rng.gen_bool(0.5) {
                let mut k = known[i].clone();
                let statements = self.statements(&mut k, &assignable);
                if !statements.is_empty() {
                    self.m.protocol.finalise.push(Finalise { entity: e.clone(), knowledge: None, statements });
                }
            }
        }
        self.m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_bounded() {
        for seed in 0..50 {
            let m = model(seed);
            assert_eq!(m, model(seed));
            assert!(m.variables.len() <= MAX_VARIABLES);
            assert!((1..=MAX_MESSAGES).contains(&m.protocol.messages.len()));
            assert!(validator::check_semantics(&m).iter().all(|d| !d.is_error()));
        }
    }

    #[test]
    fn generated_models_round_trip() {
        for seed in 0..20 {
            let m = model(seed);
            assert_eq!(crate::xml::parse(&crate::xml::serialize(&m)).unwrap(), m);
        }
    }
}
