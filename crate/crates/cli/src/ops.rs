//! The command-line operations: each returns the text to print and an exit
//! code, leaving process handling to `main`.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;

use piqos_core::{
    load_registry, load_registry_pruning, rank, validate_document, Credential, CredentialStore,
    DomainId, LoadMode, ParamValue, QosQuery, RegisterOutcome, Registry, SlaOffering,
};

use crate::output::{self, Format};
use crate::store;

pub struct QueryArgs {
    pub origin: String,
    pub destination: String,
    pub command: String,
    pub deadline: Option<f64>,
    pub max_hops: usize,
    /// Keep candidates that violate a constraint (flagged) instead of
    /// dropping them.
    pub all: bool,
    pub obfuscate: bool,
}

pub struct RegisterArgs {
    pub from: String,
    pub to: String,
    pub label: String,
    pub id: Option<String>,
    /// JSON array of parameter values, in schema order.
    pub values: String,
    pub secret: String,
}

/// Ranks candidate paths against the registry on disk and renders them.
pub fn cmd_query(registry_path: &Path, args: QueryArgs, format: Format) -> anyhow::Result<String> {
    let snapshot = store::load_snapshot(registry_path)?;
    let mut query = QosQuery::new(args.origin, args.destination, args.command);
    query.deadline_hours = args.deadline;
    query.max_hops = args.max_hops;
    query.include_disallowed = args.all;
    query.obfuscate = args.obfuscate;
    let result = rank(&query, &snapshot)?;
    Ok(match format {
        Format::Table => output::render_table(&result, snapshot.schema()),
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&result)?;
            text.push('\n');
            text
        }
    })
}

/// Builds a credential store from a credentials file (a JSON object mapping
/// domain ids to secrets).
fn credential_store(credentials_path: Option<&Path>) -> anyhow::Result<CredentialStore> {
    let path = credentials_path.context(
        "no credentials file: pass --credentials or set PIQOS_CREDENTIALS",
    )?;
    let map: BTreeMap<String, String> = crate::config::load_credentials(path)?;
    Ok(map.into_iter().map(|(domain, secret)| (DomainId::new(domain), secret)).collect())
}

/// Derives an offering id from its segment and label, e.g. `2-4-express`.
pub fn default_offering_id(from: &str, to: &str, label: &str) -> String {
    let mut slug = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            slug.push(c.to_ascii_lowercase());
        } else if !slug.ends_with('-') && !slug.is_empty() {
            slug.push('-');
        }
    }
    let slug = slug.trim_end_matches('-');
    let slug = if slug.is_empty() { "offer" } else { slug };
    format!("{from}-{to}-{slug}")
}

/// Registers an offering and persists the registry if it changed. A
/// submission the frontier rejects as dominated exits nonzero.
pub fn cmd_register(
    registry_path: &Path,
    credentials_path: Option<&Path>,
    args: RegisterArgs,
) -> anyhow::Result<(String, i32)> {
    let values: Vec<ParamValue> =
        serde_json::from_str(&args.values).context("malformed --values: expected a JSON array")?;
    let id = args
        .id
        .unwrap_or_else(|| default_offering_id(&args.from, &args.to, &args.label));
    let credential = Credential::new(args.from.as_str(), args.secret);
    let offering = SlaOffering::new(id, args.from, args.to, args.label, values);

    let snapshot = store::load_snapshot(registry_path)?;
    let registry = Registry::new(snapshot, credential_store(credentials_path)?);
    let outcome = registry.register_offering(offering, &credential)?;
    if outcome.mutated() {
        store::save_snapshot(registry_path, &registry.snapshot())?;
    }
    let version = registry.snapshot().version();
    Ok(match outcome {
        RegisterOutcome::Accepted { id } => {
            (format!("accepted `{id}` (registry version {version})"), 0)
        }
        RegisterOutcome::ReplacedExisting { id, evicted } => (
            format!(
                "accepted `{id}`, evicted dominated: {} (registry version {version})",
                join_ids(&evicted)
            ),
            0,
        ),
        RegisterOutcome::PrunedDominated { id, dominated_by } => (
            format!(
                "rejected `{id}`: dominated by {} (registry unchanged)",
                join_ids(&dominated_by)
            ),
            1,
        ),
    })
}

/// Removes an offering owned by the caller's domain and persists.
pub fn cmd_remove(
    registry_path: &Path,
    credentials_path: Option<&Path>,
    id: &str,
    secret: String,
) -> anyhow::Result<String> {
    let snapshot = store::load_snapshot(registry_path)?;
    let id = piqos_core::OfferingId::new(id);
    // The credential names the offering's owner; an unknown id keeps a
    // placeholder domain so the not-found error takes precedence.
    let owner = snapshot
        .offering(&id)
        .map(|o| o.from.clone())
        .unwrap_or_else(|| DomainId::new(""));
    let credential = Credential::new(owner, secret);
    let registry = Registry::new(snapshot, credential_store(credentials_path)?);
    let removed = registry.remove_offering(&id, &credential)?;
    store::save_snapshot(registry_path, &registry.snapshot())?;
    Ok(format!(
        "removed `{}` from segment {} (registry version {})",
        removed.id,
        removed.segment(),
        registry.snapshot().version()
    ))
}

/// Checks a registry document. Exit 0 when clean, 1 with a violation list,
/// 2 when the file cannot be read or parsed at all.
pub fn cmd_validate(path: &Path) -> (String, i32) {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(err) => return (format!("error: cannot read {}: {err}", path.display()), 2),
    };
    match validate_document(&text) {
        Err(err) => (format!("error: {} is not a registry document: {err}", path.display()), 2),
        Ok(violations) if violations.is_empty() => {
            let count = load_registry(&text, LoadMode::Strict)
                .map(|s| s.offering_count())
                .unwrap_or(0);
            (format!("ok: {} is valid ({count} offerings)", path.display()), 0)
        }
        Ok(violations) => {
            let mut out = String::new();
            for v in &violations {
                out.push_str("violation: ");
                out.push_str(v);
                out.push('\n');
            }
            out.push_str(&format!("{} violation(s) found", violations.len()));
            (out, 1)
        }
    }
}

/// Loads a document (strictly, or pruning dominated rows) and writes its
/// canonical form to the registry path.
pub fn cmd_import(input: &Path, registry_path: &Path, prune: bool) -> anyhow::Result<String> {
    let text = std::fs::read_to_string(input)
        .with_context(|| format!("cannot read {}", input.display()))?;
    let (snapshot, pruned) = if prune {
        load_registry_pruning(&text)?
    } else {
        (load_registry(&text, LoadMode::Strict)?, Vec::new())
    };
    store::save_snapshot(registry_path, &snapshot)?;
    let mut message = format!(
        "imported {} offerings into {}",
        snapshot.offering_count(),
        registry_path.display()
    );
    if !pruned.is_empty() {
        message.push_str(&format!(" (pruned {} dominated: {})", pruned.len(), join_ids(&pruned)));
    }
    Ok(message)
}

fn join_ids(ids: &[piqos_core::OfferingId]) -> String {
    ids.iter().map(|i| format!("`{i}`")).collect::<Vec<_>>().join(", ")
}
