//! Local service backing the editor, plus the shared command logic.
//!
//! Request bodies are raw PSV documents. Diagnostics are returned in the
//! same line format the command line prints.

use std::collections::HashMap;

use axum::extract::{Path, Query};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::Router;
use metacp::diag;
use metacp::pipeline::{self, ExportTarget, Failure, Stage};
use metacp::{samples, validator};

type Reply = (StatusCode, String);

pub fn router() -> Router {
    Router::new()
        .route("/samples", get(list_samples))
        .route("/samples/{name}", get(sample))
        .route("/validate", post(validate))
        .route("/export", post(export))
        .route("/knowledge", post(knowledge))
}

/// 400 when the body is not a structurally valid document, 422 otherwise.
fn failure(f: Failure) -> Reply {
    let status = match f.stage {
        Stage::Malformed | Stage::Structure => StatusCode::BAD_REQUEST,
        Stage::Semantic => StatusCode::UNPROCESSABLE_ENTITY,
    };
    (status, diag::render(&f.diagnostics))
}

async fn list_samples() -> String {
    samples::ALL.iter().map(|(name, _)| format!("{name}\n")).collect()
}

async fn sample(Path(name): Path<String>) -> Reply {
    match samples::by_name(&name) {
        Some(doc) => (StatusCode::OK, doc.to_owned()),
        None => (StatusCode::NOT_FOUND, format!("no sample named `{name}`\n")),
    }
}

async fn validate(body: String) -> Reply {
    match pipeline::validate(&body) {
        Ok(warnings) => (StatusCode::OK, diag::render(&warnings)),
        Err(f) => failure(f),
    }
}

async fn export(Query(params): Query<HashMap<String, String>>, body: String) -> Reply {
    let Some(target) = params.get("target") else {
        return (StatusCode::BAD_REQUEST, "missing `target` query parameter\n".into());
    };
    let target: ExportTarget = match target.parse() {
        Ok(t) => t,
        Err(e) => return (StatusCode::NOT_FOUND, format!("{e}\n")),
    };
    match pipeline::export(&body, target) {
        Ok(artifact) => (StatusCode::OK, artifact),
        Err(f) => failure(f),
    }
}

/// Knowledge of every entity at every step, one line per snapshot.
async fn knowledge(body: String) -> Reply {
    let m = match pipeline::load(&body) {
        Ok(m) => m,
        Err(f) => return failure(f),
    };
    match validator::knowledge_trace(&m) {
        Ok(trace) => (StatusCode::OK, trace.to_string()),
        Err(diags) => (StatusCode::UNPROCESSABLE_ENTITY, diag::render(&diags)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failure_status() {
        let malformed = pipeline::validate("<model").unwrap_err();
        assert_eq!(failure(malformed).0, StatusCode::BAD_REQUEST);
        let bad = samples::DHKE.replace("<set id=\"Bool\"", "<set id=\"Boolean\"");
        assert_eq!(failure(pipeline::validate(&bad).unwrap_err()).0, StatusCode::UNPROCESSABLE_ENTITY);
    }
}
