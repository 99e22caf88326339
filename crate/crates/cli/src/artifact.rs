//! Artifact envelope: every output file carries a format-version line and
//! its generating spec, and lands on disk atomically (write then rename).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::spec::ExperimentSpec;

pub const ARTIFACT_VERSION: u32 = 1;

/// One output file; `name` is relative to the run's output stem.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn text(name: impl Into<String>, content: String) -> Self {
        Artifact {
            name: name.into(),
            bytes: content.into_bytes(),
        }
    }

    pub fn binary(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Artifact {
            name: name.into(),
            bytes,
        }
    }
}

/// Prefix a CSV body with the artifact header comments.
pub fn csv_with_header(spec: &ExperimentSpec, body: &str) -> String {
    format!(
        "# bnn-rram-artifact v{ARTIFACT_VERSION}\n# spec: {}\n{body}",
        spec.to_json()
    )
}

/// Wrap a JSON value with the artifact envelope fields.
pub fn json_with_header(spec: &ExperimentSpec, body: serde_json::Value) -> String {
    let mut root = serde_json::Map::new();
    root.insert(
        "format_version".into(),
        serde_json::Value::from(ARTIFACT_VERSION),
    );
    root.insert("spec".into(), serde_json::to_value(spec).expect("spec"));
    root.insert("result".into(), body);
    let mut out = serde_json::to_string_pretty(&serde_json::Value::Object(root)).expect("json");
    out.push('\n');
    out
}

/// Recover the embedded spec from an artifact (CSV header or JSON field).
pub fn extract_spec(content: &[u8]) -> Result<ExperimentSpec> {
    let text = std::str::from_utf8(content).context("artifact is not UTF-8 text")?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let value: serde_json::Value =
            serde_json::from_str(trimmed).context("artifact is not valid JSON")?;
        let spec = value
            .get("spec")
            .context("JSON artifact has no 'spec' field")?;
        return Ok(serde_json::from_value(spec.clone())?);
    }
    for line in text.lines() {
        if let Some(json) = line.strip_prefix("# spec: ") {
            return Ok(ExperimentSpec::from_json(json)?);
        }
        if !line.starts_with('#') {
            break;
        }
    }
    bail!("no embedded spec found in artifact");
}

/// Atomic write: the file appears complete or not at all.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    let tmp: PathBuf = path.with_extension("tmp-partial");
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} into place", tmp.display()))?;
    Ok(())
}

/// Resolve an artifact's on-disk path from the run's output stem.
pub fn artifact_path(out: &Path, name: &str) -> PathBuf {
    if name.is_empty() {
        out.to_path_buf()
    } else {
        let mut file_name = out
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        file_name.push('.');
        file_name.push_str(name);
        out.with_file_name(file_name)
    }
}
