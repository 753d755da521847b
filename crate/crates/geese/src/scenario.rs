//! Scenario documents: a deployment request plus the catalog it is planned
//! against.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use geese_core::catalog::{default_catalog, load_catalog, parse_json, Catalog, CatalogError};
use geese_core::perf_models::{Regime, Role};
use geese_core::planner::DeploymentRequest;

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: CatalogError },
    #[error("{path}: unsupported schema_version {found} (expected {SCENARIO_SCHEMA_VERSION})")]
    Schema { path: PathBuf, found: u32 },
    #[error("{path}: `catalog` must be a file path or an inline catalog object")]
    CatalogRef { path: PathBuf },
}

/// Defaults for `simulate --collab`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CollabSection {
    pub regime: Option<Regime>,
    pub role: Option<Role>,
    pub workers: Option<u32>,
    pub jobs: Option<u32>,
    pub work_ms: Option<f64>,
    pub repetitions: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub request: DeploymentRequest,
    /// Inline catalog object, or a path relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<Value>,
    /// Keys merged over the catalog's `calibration` block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<serde_json::Map<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collab: Option<CollabSection>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub catalog: Catalog,
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a catalog file, or the built-in catalog when `path` is `None`.
pub fn catalog_from(path: Option<&Path>) -> Result<Catalog, ScenarioError> {
    match path {
        None => Ok(default_catalog()),
        Some(p) => load_catalog(&read(p)?).map_err(|source| ScenarioError::Parse {
            path: p.to_path_buf(),
            source,
        }),
    }
}

/// Reads a scenario. `catalog_override` (the `--catalog` flag) wins over the
/// scenario's own `catalog` entry; with neither, the built-in catalog is used.
pub fn load_scenario(path: &Path, catalog_override: Option<&Path>) -> Result<Scenario, ScenarioError> {
    let text = read(path)?;
    let file: ScenarioFile = parse_json(&text).map_err(|source| ScenarioError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    if file.schema_version != SCENARIO_SCHEMA_VERSION {
        return Err(ScenarioError::Schema {
            path: path.to_path_buf(),
            found: file.schema_version,
        });
    }
    let mut catalog = match (catalog_override, &file.catalog) {
        (Some(p), _) => catalog_from(Some(p))?,
        (None, None) => default_catalog(),
        (None, Some(Value::String(rel))) => {
            let base = path.parent().unwrap_or(Path::new("."));
            catalog_from(Some(&base.join(rel)))?
        }
        (None, Some(obj @ Value::Object(_))) => load_catalog(&obj.to_string()).map_err(|e| ScenarioError::Parse {
            path: path.to_path_buf(),
            source: prefix_field(e, "catalog"),
        })?,
        (None, Some(_)) => {
            return Err(ScenarioError::CatalogRef {
                path: path.to_path_buf(),
            })
        }
    };
    if let Some(over) = &file.calibration {
        catalog = apply_calibration(&catalog, over).map_err(|e| ScenarioError::Parse {
            path: path.to_path_buf(),
            source: prefix_field(e, "calibration"),
        })?;
    }
    Ok(Scenario { file, catalog })
}

fn prefix_field(e: CatalogError, prefix: &str) -> CatalogError {
    match e {
        CatalogError::Parse {
            field,
            line,
            column,
            message,
        } => CatalogError::Parse {
            field: format!("{prefix}.{field}"),
            line,
            column,
            message,
        },
        other => other,
    }
}

/// `catalog` with `overrides` merged key by key over its calibration block.
pub fn apply_calibration(
    catalog: &Catalog,
    overrides: &serde_json::Map<String, Value>,
) -> Result<Catalog, CatalogError> {
    let mut doc = serde_json::to_value(catalog).expect("catalog serializes");
    let cal = doc
        .get_mut("calibration")
        .and_then(Value::as_object_mut)
        .expect("catalog has a calibration object");
    for (k, v) in overrides {
        cal.insert(k.clone(), v.clone());
    }
    load_catalog(&doc.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    const REQ: &str = r#"{"workload_users": 10, "response_bound_ms": 2000,
        "legs": [{"location_id": "A", "allowed_modalities": ["ground"]}]}"#;

    #[test]
    fn default_catalog_when_absent() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "s.json", &format!(r#"{{"schema_version": 1, "request": {REQ}}}"#));
        let s = load_scenario(&p, None).unwrap();
        assert_eq!(s.catalog, default_catalog());
    }

    #[test]
    fn relative_catalog_path() {
        let d = tempfile::tempdir().unwrap();
        let mut cat = default_catalog();
        cat.fleet_bound.insert("romeo-v2".into(), 5);
        write(d.path(), "cat.json", &cat.to_json());
        let p = write(
            d.path(),
            "s.json",
            &format!(r#"{{"schema_version": 1, "catalog": "cat.json", "request": {REQ}}}"#),
        );
        assert_eq!(load_scenario(&p, None).unwrap().catalog.fleet_bound_of("romeo-v2"), 5);
    }

    #[test]
    fn calibration_overrides_merge() {
        let d = tempfile::tempdir().unwrap();
        let p = write(
            d.path(),
            "s.json",
            &format!(r#"{{"schema_version": 1, "calibration": {{"battery_floor": 0.3}}, "request": {REQ}}}"#),
        );
        let s = load_scenario(&p, None).unwrap();
        assert_eq!(s.catalog.calibration.battery_floor, 0.3);
        assert_eq!(s.catalog.calibration.load_curves, default_catalog().calibration.load_curves);
    }

    #[test]
    fn malformed_names_line_and_field() {
        let d = tempfile::tempdir().unwrap();
        let p = write(
            d.path(),
            "s.json",
            "{\n  \"schema_version\": 1,\n  \"request\": {\n    \"workload_users\": \"many\"\n  }\n}\n",
        );
        let msg = load_scenario(&p, None).unwrap_err().to_string();
        assert!(msg.contains("line 4"), "{msg}");
        assert!(msg.contains("request.workload_users"), "{msg}");
    }

    #[test]
    fn unsupported_schema() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "s.json", &format!(r#"{{"schema_version": 9, "request": {REQ}}}"#));
        assert!(matches!(load_scenario(&p, None), Err(ScenarioError::Schema { found: 9, .. })));
    }
}
