//! Document-level entry points shared by the command line and the service.

use std::fmt;
use std::str::FromStr;

use crate::diag::Diagnostic;
use crate::model::Model;
use crate::xml::{self, FailureKind};
use crate::{cpp, proverif, tamarin, validator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExportTarget {
    ProVerif,
    Tamarin,
    Cpp,
}

impl ExportTarget {
    pub const ALL: [ExportTarget; 3] = [ExportTarget::ProVerif, ExportTarget::Tamarin, ExportTarget::Cpp];

    pub fn as_str(self) -> &'static str {
        match self {
            ExportTarget::ProVerif => "proverif",
            ExportTarget::Tamarin => "tamarin",
            ExportTarget::Cpp => "cpp",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ExportTarget::ProVerif => "pv",
            ExportTarget::Tamarin => "spthy",
            ExportTarget::Cpp => "cpp",
        }
    }
}

impl fmt::Display for ExportTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownTarget(pub String);

impl fmt::Display for UnknownTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown export target `{}` (expected proverif, tamarin or cpp)", self.0)
    }
}

impl std::error::Error for UnknownTarget {}

impl FromStr for ExportTarget {
    type Err = UnknownTarget;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExportTarget::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| UnknownTarget(s.to_owned()))
    }
}

/// Where a document was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Not well-formed XML.
    Malformed,
    /// Violates the element grammar.
    Structure,
    /// Structurally valid but semantically wrong, or not exportable.
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub stage: Stage,
    pub diagnostics: Vec<Diagnostic>,
}

fn semantic(diagnostics: Vec<Diagnostic>) -> Failure {
    Failure { stage: Stage::Semantic, diagnostics }
}

pub fn load(doc: &str) -> Result<Model, Failure> {
    xml::read_model(doc).map_err(|f| Failure {
        stage: match f.kind {
            FailureKind::Malformed => Stage::Malformed,
            FailureKind::Structure => Stage::Structure,
            FailureKind::Reference => Stage::Semantic,
        },
        diagnostics: f.diagnostics,
    })
}

/// Full validation. On success returns the warnings, if any.
pub fn validate(doc: &str) -> Result<Vec<Diagnostic>, Failure> {
    let m = load(doc)?;
    let diags = validator::check_semantics(&m);
    if crate::diag::has_errors(&diags) {
        Err(semantic(diags))
    } else {
        Ok(diags)
    }
}

pub fn export_model(m: &Model, target: ExportTarget) -> Result<String, Vec<Diagnostic>> {
    match target {
        ExportTarget::ProVerif => proverif::export(m).map(|t| t.text),
        ExportTarget::Tamarin => tamarin::export(m).map(|t| t.text),
        ExportTarget::Cpp => cpp::export(m).map(|t| t.text),
    }
}

pub fn export(doc: &str, target: ExportTarget) -> Result<String, Failure> {
    let m = load(doc)?;
    export_model(&m, target).map_err(semantic)
}
