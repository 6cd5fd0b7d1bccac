use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::{BigUint, RandBigInt};
use num_traits::One;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::diag::{self, Diagnostic};
use crate::hints::{self, FuncKind, SetKind};
use crate::model::{AssignSource, Assignment, Identifier, Model, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int(BigUint),
    Bytes(Vec<u8>),
    Bool(bool),
    Pair(Box<Value>, Box<Value>),
    PublicKey(Box<Value>),
    PrivateKey(Box<Value>),
    /// Plaintext sealed for the owner of a public key.
    Cipher {
        plain: Box<Value>,
        owner: Box<Value>,
    },
}

impl Value {
    pub fn as_int(&self) -> Option<&BigUint> {
        match self {
            Value::Int(n) => Some(n),
            _ => None,
        }
    }
}

impl From<BigUint> for Value {
    fn from(n: BigUint) -> Self {
        Value::Int(n)
    }
}

impl From<u64> for Value {
    fn from(n: u64) -> Self {
        Value::Int(BigUint::from(n))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bytes(b) => {
                for byte in b {
                    write!(f, "{byte:02x}")?;
                }
                Ok(())
            }
            Value::Bool(b) => write!(f, "{b}"),
            Value::Pair(a, b) => write!(f, "<{a}, {b}>"),
            Value::PublicKey(k) => write!(f, "pk({k})"),
            Value::PrivateKey(k) => write!(f, "sk({k})"),
            Value::Cipher { plain, owner } => write!(f, "enc({plain}, pk({owner}))"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpretError {
    #[error("model has errors:\n{}", diag::render(.0))]
    InvalidModel(Vec<Diagnostic>),
    #[error("function `{0}` has no concrete semantics")]
    UninterpretableFunction(Identifier),
    #[error("constant `{0}` needs a value")]
    UnboundConstant(Identifier),
    #[error("no group structure: {0}")]
    NoGroupStructure(String),
    #[error("`{entity}` has no value for `{var}`")]
    Unbound { entity: Identifier, var: Identifier },
    #[error("`{function}` cannot be applied to {found}")]
    BadArgument { function: Identifier, found: String },
    #[error("decryption with `{0}` failed")]
    DecryptionFailed(Identifier),
    #[error("correctness relation `{0}` did not produce a boolean")]
    NotBoolean(Identifier),
}

/// Values held by every entity at the end of a run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConcreteEnv {
    pub entities: BTreeMap<Identifier, BTreeMap<Identifier, Value>>,
    finals: Vec<(Identifier, Identifier)>,
    modulus: Option<BigUint>,
}

impl ConcreteEnv {
    pub fn value(&self, entity: &str, var: &str) -> Option<&Value> {
        self.entities
            .iter()
            .find(|(e, _)| e.as_str() == entity)?
            .1
            .iter()
            .find(|(v, _)| v.as_str() == var)
            .map(|(_, x)| x)
    }

    /// Value of a variable assigned in some finalise block.
    pub fn final_value(&self, var: &str) -> Option<&Value> {
        let (entity, _) = self.finals.iter().rev().find(|(_, v)| v == var)?;
        self.value(entity.as_str(), var)
    }

    /// Evaluates each correctness property over the final values.
    pub fn properties(&self, m: &Model) -> Result<Vec<bool>, InterpretError> {
        let mut env = BTreeMap::new();
        for (entity, var) in &self.finals {
            if let Some(v) = self.value(entity.as_str(), var.as_str()) {
                env.insert(var.clone(), v.clone());
            }
        }
        let group = self.modulus.clone().ok_or_else(|| InterpretError::NoGroupStructure("no modulus bound".into()));
        let eval = Eval { m, modulus: &group, entity: &m.protocol.entities[0].id };
        m.protocol
            .properties
            .iter()
            .map(|p| match eval.term(&env, &Term::App(p.relation.clone()))? {
                Value::Bool(b) => Ok(b),
                _ => Err(InterpretError::NotBoolean(p.relation.function.clone())),
            })
            .collect()
    }
}

/// Executes one honest run of a protocol with concrete values.
///
/// Constants of numeric sets must be bound; opaque constants default to
/// their name. Sampled variables come from a ChaCha stream seeded by the
/// run seed, unless fixed.
#[derive(Debug, Clone)]
pub struct Interpreter<'m> {
    model: &'m Model,
    bindings: BTreeMap<Identifier, Value>,
    fixed: HashMap<String, Value>,
}

impl<'m> Interpreter<'m> {
    pub fn new(model: &'m Model) -> Self {
        Interpreter { model, bindings: BTreeMap::new(), fixed: HashMap::new() }
    }

    /// Value for a constant or an initially known variable.
    pub fn bind(mut self, var: &str, value: impl Into<Value>) -> Self {
        if let Ok(id) = Identifier::new(var) {
            self.bindings.insert(id, value.into());
        }
        self
    }

    /// Replaces the sampled value of a probabilistic assignment.
    pub fn fix(mut self, var: &str, value: impl Into<Value>) -> Self {
        self.fixed.insert(var.to_owned(), value.into());
        self
    }

    pub fn run(&self, seed: u64) -> Result<ConcreteEnv, InterpretError> {
        let m = self.model;
        let errors: Vec<_> = crate::validator::check_semantics(m).into_iter().filter(Diagnostic::is_error).collect();
        if !errors.is_empty() {
            return Err(InterpretError::InvalidModel(errors));
        }
        let modulus = modulus(m, &self.bindings);
        let mut run = Run {
            rng: ChaCha20Rng::seed_from_u64(seed),
            interp: self,
            modulus,
            env: BTreeMap::new(),
            finals: Vec::new(),
        };

        for e in &m.protocol.entities {
            let mut vals = BTreeMap::new();
            for v in e.initial_knowledge() {
                let value = run.initial_value(&v.id)?;
                vals.insert(v.id.clone(), value);
            }
            run.env.insert(e.id.clone(), vals);
        }
        for msg in &m.protocol.messages {
            run.statements(&msg.from, &msg.pre)?;
            let payload = msg.send.iter().map(|v| run.lookup(&msg.from, &v.id)).collect::<Result<Vec<_>, _>>()?;
            let receiver = run.env.entry(msg.to.clone()).or_default();
            for (r, value) in msg.recv.iter().zip(payload) {
                receiver.insert(r.id.clone(), value);
            }
            run.statements(&msg.to, &msg.post)?;
        }
        for f in &m.protocol.finalise {
            run.statements(&f.entity, &f.statements)?;
            run.finals.extend(f.statements.iter().map(|a| (f.entity.clone(), a.target.id.clone())));
        }
        Ok(ConcreteEnv { entities: run.env, finals: run.finals, modulus: run.modulus.ok() })
    }
}

/// Runs the protocol once with the given constant bindings.
pub fn interpret_concrete(m: &Model, seed: u64, bindings: &[(&str, Value)]) -> Result<ConcreteEnv, InterpretError> {
    bindings.iter().fold(Interpreter::new(m), |i, (k, v)| i.bind(k, v.clone())).run(seed)
}

fn modulus(m: &Model, bindings: &BTreeMap<Identifier, Value>) -> Result<BigUint, InterpretError> {
    let spec = crate::cpp::detect_group(m).map_err(|d| InterpretError::NoGroupStructure(d.message))?;
    match bindings.get(&spec.modulus) {
        Some(Value::Int(p)) if *p > BigUint::one() => Ok(p.clone()),
        _ => Err(InterpretError::UnboundConstant(spec.modulus)),
    }
}

struct Run<'a, 'm> {
    rng: ChaCha20Rng,
    interp: &'a Interpreter<'m>,
    modulus: Result<BigUint, InterpretError>,
    env: BTreeMap<Identifier, BTreeMap<Identifier, Value>>,
    finals: Vec<(Identifier, Identifier)>,
}

impl Run<'_, '_> {
    fn initial_value(&mut self, var: &Identifier) -> Result<Value, InterpretError> {
        if let Some(v) = self.interp.bindings.get(var) {
            return Ok(v.clone());
        }
        let m = self.interp.model;
        let decl = m.variable(var.as_str()).expect("validated");
        if decl.is_const() {
            return match hints::set_kind_of(m, decl.set.as_str()) {
                SetKind::Opaque => Ok(Value::Bytes(var.as_str().as_bytes().to_vec())),
                _ => Err(InterpretError::UnboundConstant(var.clone())),
            };
        }
        self.sample(&decl.set)
    }

    fn sample(&mut self, set: &Identifier) -> Result<Value, InterpretError> {
        let m = self.interp.model;
        Ok(match hints::set_kind_of(m, set.as_str()) {
            SetKind::Naturals => {
                let bound = BigUint::one() << m.security_bits();
                Value::Int(self.rng.gen_biguint_range(&BigUint::from(2u8), &bound))
            }
            SetKind::Group => {
                let p = self.modulus.as_ref().map_err(Clone::clone)?;
                Value::Int(self.rng.gen_biguint_range(&BigUint::one(), p))
            }
            SetKind::Boolean => Value::Bool(self.rng.gen()),
            SetKind::Opaque => {
                let mut bytes = vec![0u8; (m.security_bits() as usize / 8).max(16)];
                self.rng.fill_bytes(&mut bytes);
                Value::Bytes(bytes)
            }
        })
    }

    fn lookup(&self, entity: &Identifier, var: &Identifier) -> Result<Value, InterpretError> {
        self.env
            .get(entity)
            .and_then(|vals| vals.get(var))
            .cloned()
            .ok_or_else(|| InterpretError::Unbound { entity: entity.clone(), var: var.clone() })
    }

    fn statements(&mut self, entity: &Identifier, stmts: &[Assignment]) -> Result<(), InterpretError> {
        for a in stmts {
            let value = match &a.source {
                AssignSource::Sample(set) => match self.interp.fixed.get(a.target.id.as_str()) {
                    Some(v) => v.clone(),
                    None => self.sample(set)?,
                },
                AssignSource::Term(t) => {
                    let vals = self.env.get(entity).cloned().unwrap_or_default();
                    let eval = Eval { m: self.interp.model, modulus: &self.modulus, entity };
                    eval.term(&vals, t)?
                }
            };
            self.env.entry(entity.clone()).or_default().insert(a.target.id.clone(), value);
        }
        Ok(())
    }
}

struct Eval<'a> {
    m: &'a Model,
    modulus: &'a Result<BigUint, InterpretError>,
    entity: &'a Identifier,
}

impl Eval<'_> {
    fn term(&self, vals: &BTreeMap<Identifier, Value>, t: &Term) -> Result<Value, InterpretError> {
        match t {
            Term::Var(v) => vals
                .get(&v.id)
                .cloned()
                .ok_or_else(|| InterpretError::Unbound { entity: self.entity.clone(), var: v.id.clone() }),
            Term::App(app) => {
                let f = self.m.function(app.function.as_str()).expect("validated");
                let kind =
                    hints::func_kind(self.m, f).ok_or_else(|| InterpretError::UninterpretableFunction(f.id.clone()))?;
                let args = app.args.iter().map(|a| self.term(vals, a)).collect::<Result<Vec<_>, _>>()?;
                apply(kind, &f.id, args, self.modulus)
            }
        }
    }
}

fn apply(
    kind: FuncKind,
    name: &Identifier,
    args: Vec<Value>,
    modulus: &Result<BigUint, InterpretError>,
) -> Result<Value, InterpretError> {
    let bad = |v: &[Value]| InterpretError::BadArgument {
        function: name.clone(),
        found: v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "),
    };
    let mut it = args.clone().into_iter();
    let (a, b) = (it.next(), it.next());
    Ok(match (kind, a, b) {
        (FuncKind::GroupExp, Some(Value::Int(base)), Some(Value::Int(e))) => {
            let p = modulus.as_ref().map_err(Clone::clone)?;
            Value::Int(base.modpow(&e, p))
        }
        (FuncKind::Equality, Some(x), Some(y)) => Value::Bool(x == y),
        (FuncKind::Pairing, Some(x), Some(y)) => Value::Pair(Box::new(x), Box::new(y)),
        (FuncKind::First, Some(Value::Pair(x, _)), None) => *x,
        (FuncKind::Second, Some(Value::Pair(_, y)), None) => *y,
        (FuncKind::PublicKey, Some(x), None) => Value::PublicKey(Box::new(x)),
        (FuncKind::PrivateKey, Some(x), None) => Value::PrivateKey(Box::new(x)),
        (FuncKind::AsymEncrypt, Some(plain), Some(Value::PublicKey(owner))) => {
            Value::Cipher { plain: Box::new(plain), owner }
        }
        (FuncKind::AsymDecrypt, Some(Value::Cipher { plain, owner }), Some(Value::PrivateKey(k))) => {
            if owner != k {
                return Err(InterpretError::DecryptionFailed(name.clone()));
            }
            *plain
        }
        _ => return Err(bad(&args)),
    })
}
