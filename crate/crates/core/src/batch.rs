//! Many-model operations. Data-parallel with the `parallel` feature,
//! sequential otherwise; [`sequential`] is always available.

use crate::diag::Diagnostic;
use crate::model::Model;
use crate::pipeline::{self, ExportTarget};
use crate::validator::{self, ConcreteEnv, InterpretError, Interpreter};

/// One interpreter run: a seed and the constant bindings.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub seed: u64,
    pub bindings: Vec<(String, validator::Value)>,
}

fn run_one(m: &Model, spec: &RunSpec) -> Result<ConcreteEnv, InterpretError> {
    spec.bindings.iter().fold(Interpreter::new(m), |i, (k, v)| i.bind(k, v.clone())).run(spec.seed)
}

#[cfg(feature = "parallel")]
fn map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.iter().map(f).collect()
}

pub fn check_all(models: &[Model]) -> Vec<Vec<Diagnostic>> {
    map(models, validator::check_semantics)
}

pub fn export_all(models: &[Model], target: ExportTarget) -> Vec<Result<String, Vec<Diagnostic>>> {
    map(models, |m| pipeline::export_model(m, target))
}

pub fn interpret_sweep(m: &Model, runs: &[RunSpec]) -> Vec<Result<ConcreteEnv, InterpretError>> {
    map(runs, |r| run_one(m, r))
}

/// Single-threaded versions of the batch operations.
pub mod sequential {
    use super::*;

    pub fn check_all(models: &[Model]) -> Vec<Vec<Diagnostic>> {
        models.iter().map(validator::check_semantics).collect()
    }

    pub fn export_all(models: &[Model], target: ExportTarget) -> Vec<Result<String, Vec<Diagnostic>>> {
        models.iter().map(|m| pipeline::export_model(m, target)).collect()
    }

    pub fn interpret_sweep(m: &Model, runs: &[RunSpec]) -> Vec<Result<ConcreteEnv, InterpretError>> {
        runs.iter().map(|r| run_one(m, r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{samples, testgen, xml};

    #[test]
    fn parallel_matches_sequential() {
        let models: Vec<Model> = (0..24).map(testgen::model).collect();
        assert_eq!(check_all(&models), sequential::check_all(&models));
        assert_eq!(
            export_all(&models, ExportTarget::ProVerif),
            sequential::export_all(&models, ExportTarget::ProVerif)
        );
        assert_eq!(export_all(&models, ExportTarget::Tamarin), sequential::export_all(&models, ExportTarget::Tamarin));

        let dhke = xml::parse(samples::DHKE).unwrap();
        let runs: Vec<RunSpec> = (0..16)
            .map(|seed| RunSpec { seed, bindings: vec![("g".into(), 3u64.into()), ("p".into(), 1019u64.into())] })
            .collect();
        assert_eq!(interpret_sweep(&dhke, &runs), sequential::interpret_sweep(&dhke, &runs));
    }
}
