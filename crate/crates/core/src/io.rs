//! JSON envelopes shared by the command-line tools.

use serde::Serialize;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    kind: &'a str,
    #[serde(flatten)]
    payload: &'a T,
}

/// Pretty JSON with a top-level `schema_version` and `kind`. Floats are written
/// in shortest round-trip form, so no precision is lost.
pub fn to_json<T: Serialize>(kind: &str, payload: &T) -> Result<String> {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        kind,
        payload,
    };
    serde_json::to_string_pretty(&env)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))
}
