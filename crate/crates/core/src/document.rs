//! The registry's at-rest format: a UTF-8 JSON document with top-level keys
//! `schema`, `domains`, `edges`, and `offerings`. Saving always emits the
//! canonical form — object keys sorted, offerings sorted by (from, to, id),
//! integral numbers printed without a fractional part — so that saving a
//! loaded document reproduces it byte for byte.

use serde::Deserialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::model::{
    DomainGraph, DomainId, ModelError, OfferingId, ParamValue, ParameterDecl, ParameterSchema,
    SlaOffering,
};
use crate::registry::{build_snapshot, RegistryError, RegistrySnapshot};

/// How to treat dominated offerings found in a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    /// Fail, reporting the dominated ids.
    Strict,
    /// Drop them and keep the per-segment frontiers.
    Prune,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    schema: Vec<ParameterDecl>,
    domains: Vec<DomainId>,
    edges: Vec<(DomainId, DomainId)>,
    offerings: Vec<RawOffering>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOffering {
    id: OfferingId,
    from: DomainId,
    to: DomainId,
    label: String,
    values: Vec<ParamValue>,
}

/// Parses and validates a registry document. The snapshot starts at
/// version 0; version numbers are runtime state, not part of the document.
pub fn load_registry(text: &str, mode: LoadMode) -> Result<RegistrySnapshot, DocumentError> {
    let raw: RawDocument = serde_json::from_str(text)?;
    let schema = ParameterSchema::new(raw.schema)?;
    let graph = DomainGraph::new(raw.domains, raw.edges)?;
    let offerings = raw
        .offerings
        .into_iter()
        .map(|o| SlaOffering::new(o.id, o.from, o.to, o.label, o.values))
        .collect();
    let (snapshot, _pruned) =
        build_snapshot(graph, schema, offerings, mode == LoadMode::Prune).map_err(
            |err| match err {
                RegistryError::Dominated { ids } => DocumentError::Dominated { ids },
                other => DocumentError::Registry(other),
            },
        )?;
    Ok(snapshot)
}

/// Loads a document and also reports which offerings pruning dropped.
pub fn load_registry_pruning(
    text: &str,
) -> Result<(RegistrySnapshot, Vec<OfferingId>), DocumentError> {
    let raw: RawDocument = serde_json::from_str(text)?;
    let schema = ParameterSchema::new(raw.schema)?;
    let graph = DomainGraph::new(raw.domains, raw.edges)?;
    let offerings = raw
        .offerings
        .into_iter()
        .map(|o| SlaOffering::new(o.id, o.from, o.to, o.label, o.values))
        .collect();
    Ok(build_snapshot(graph, schema, offerings, true)?)
}

/// Checks a well-formed document for semantic violations and reports all of
/// them: schema consistency, graph referential integrity, offering values,
/// duplicate ids, and per-segment Pareto-frontier violations. A clean
/// document yields an empty list; a document that does not parse at all is
/// an error.
pub fn validate_document(text: &str) -> Result<Vec<String>, serde_json::Error> {
    let raw: RawDocument = serde_json::from_str(text)?;
    let mut violations = Vec::new();
    let schema = match ParameterSchema::new(raw.schema) {
        Ok(s) => Some(s),
        Err(e) => {
            violations.push(format!("schema: {e}"));
            None
        }
    };
    let graph = match DomainGraph::new(raw.domains, raw.edges) {
        Ok(g) => Some(g),
        Err(e) => {
            violations.push(format!("graph: {e}"));
            None
        }
    };

    let mut ids = std::collections::BTreeSet::new();
    let mut valid_rows: Vec<SlaOffering> = Vec::new();
    for o in raw.offerings {
        let o = SlaOffering::new(o.id, o.from, o.to, o.label, o.values);
        if !ids.insert(o.id.clone()) {
            violations.push(format!("offering `{}`: duplicate id", o.id));
            continue;
        }
        if let Some(g) = &graph {
            if !g.has_edge(&o.from, &o.to) {
                violations.push(format!(
                    "offering `{}`: segment {} is not an edge of the domain graph",
                    o.id,
                    o.segment()
                ));
            }
        }
        let mut ok = true;
        if let Some(s) = &schema {
            if let Err(e) = o.validate_against(s) {
                violations.push(format!("offering `{}`: {e}", o.id));
                ok = false;
            }
        }
        if ok {
            valid_rows.push(o);
        }
    }

    if let Some(schema) = &schema {
        let mut by_segment: std::collections::BTreeMap<_, Vec<&SlaOffering>> =
            std::collections::BTreeMap::new();
        for o in &valid_rows {
            by_segment.entry(o.segment()).or_default().push(o);
        }
        for rows in by_segment.values() {
            for row in rows {
                if let Some(dominator) = rows.iter().find(|other| {
                    crate::model::pareto_dominates(other, row, schema).unwrap_or(false)
                }) {
                    violations.push(format!(
                        "offering `{}`: dominated by `{}`",
                        row.id, dominator.id
                    ));
                }
            }
        }
    }
    Ok(violations)
}

/// Renders the canonical document for a snapshot.
pub fn save_registry(snapshot: &RegistrySnapshot) -> String {
    let schema: Vec<Value> = snapshot
        .schema()
        .params()
        .iter()
        .map(|decl| serde_json::to_value(decl).expect("schema serializes"))
        .collect();
    let domains: Vec<Value> =
        snapshot.graph().domains().map(|d| Value::from(d.as_str())).collect();
    let edges: Vec<Value> = snapshot
        .graph()
        .edges()
        .map(|seg| json!([seg.from.as_str(), seg.to.as_str()]))
        .collect();
    let offerings: Vec<Value> = snapshot.all_offerings().map(offering_value).collect();

    // serde_json's default map keeps keys sorted, which is exactly the
    // canonical key order.
    let mut doc = Map::new();
    doc.insert("domains".into(), Value::Array(domains));
    doc.insert("edges".into(), Value::Array(edges));
    doc.insert("offerings".into(), Value::Array(offerings));
    doc.insert("schema".into(), Value::Array(schema));
    let mut text =
        serde_json::to_string_pretty(&Value::Object(doc)).expect("document serializes");
    text.push('\n');
    text
}

fn offering_value(offering: &SlaOffering) -> Value {
    let values: Vec<Value> = offering
        .values
        .iter()
        .map(|v| match v {
            ParamValue::Scalar(x) => number(*x),
            ParamValue::Normal { mean, var } => {
                let mut m = Map::new();
                m.insert("mean".into(), number(*mean));
                m.insert("var".into(), number(*var));
                Value::Object(m)
            }
        })
        .collect();
    let mut m = Map::new();
    m.insert("from".into(), Value::from(offering.from.as_str()));
    m.insert("id".into(), Value::from(offering.id.as_str()));
    m.insert("label".into(), Value::from(offering.label.as_str()));
    m.insert("to".into(), Value::from(offering.to.as_str()));
    m.insert("values".into(), Value::Array(values));
    Value::Object(m)
}

/// Integral values print as integers, everything else as the shortest
/// round-tripping decimal.
fn number(v: f64) -> Value {
    const SAFE: f64 = 9_007_199_254_740_992.0; // 2^53
    if v.fract() == 0.0 && v.abs() < SAFE {
        Value::from(v as i64)
    } else {
        Value::from(v)
    }
}

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("malformed registry document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("dominated offerings in document: {}", ids.iter().map(|id| id.as_str()).collect::<Vec<_>>().join(", "))]
    Dominated { ids: Vec<OfferingId> },
}
