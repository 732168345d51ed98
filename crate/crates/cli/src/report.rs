use std::path::Path;

use riemann_kit::Error;
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA: &str = "riemann-kit/1";

/// Report envelope shared by every subcommand.
#[derive(Serialize)]
pub struct Report<'a> {
    pub schema: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub settings: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifold: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<Value>,
}

pub fn error_value(e: &Error) -> Value {
    let mut v = json!({ "kind": e.kind(), "message": e.to_string() });
    let extra = match e {
        Error::Parse { line, column, found, expected } => {
            json!({ "line": line, "column": column, "found": found, "expected": expected })
        }
        Error::UnknownIdentifier { name, line, column } => json!({ "name": name, "line": line, "column": column }),
        Error::DomainExit { t, last_point, last_velocity } => {
            json!({ "t": t, "last_point": last_point, "last_velocity": last_velocity })
        }
        Error::ConjugatePresent(t) | Error::BarrierNotTransversal(t) => json!({ "t": t }),
        Error::NoConvergence { iterations, best_residual } => {
            json!({ "iterations": iterations, "best_residual": best_residual })
        }
        _ => Value::Null,
    };
    if !extra.is_null() {
        v["details"] = extra;
    }
    v
}

pub fn write_text(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn render(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}
