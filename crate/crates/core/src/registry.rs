//! Versioned SLA registry. Each directed segment holds a Pareto frontier of
//! offerings: submissions dominated by an incumbent are rejected, and an
//! accepted submission evicts every incumbent it dominates.
//!
//! Mutations are serialized and bump the registry version; reads hand out
//! immutable snapshots that stay valid while later mutations proceed.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    pareto_dominates, DomainGraph, DomainId, ModelError, OfferingId, ParameterSchema, Segment,
    SlaOffering,
};

/// Caller identity for mutations and raw read-back: a domain plus its shared
/// secret.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Credential {
    pub domain: DomainId,
    pub secret: String,
}

impl Credential {
    pub fn new(domain: impl Into<DomainId>, secret: impl Into<String>) -> Self {
        Credential { domain: domain.into(), secret: secret.into() }
    }
}

/// Per-domain shared secrets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CredentialStore {
    secrets: BTreeMap<DomainId, String>,
}

impl CredentialStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, domain: impl Into<DomainId>, secret: impl Into<String>) {
        self.secrets.insert(domain.into(), secret.into());
    }

    pub fn authorizes(&self, credential: &Credential) -> bool {
        self.secrets.get(&credential.domain) == Some(&credential.secret)
    }
}

impl FromIterator<(DomainId, String)> for CredentialStore {
    fn from_iter<T: IntoIterator<Item = (DomainId, String)>>(iter: T) -> Self {
        CredentialStore { secrets: iter.into_iter().collect() }
    }
}

/// Immutable view of the registry at one version.
#[derive(Debug, Clone, PartialEq)]
pub struct RegistrySnapshot {
    version: u64,
    graph: DomainGraph,
    schema: ParameterSchema,
    /// Offerings per segment, sorted by id.
    offerings: BTreeMap<Segment, Vec<SlaOffering>>,
    /// Segment of every live offering, for id lookups.
    ids: BTreeMap<OfferingId, Segment>,
    /// Version of the last mutation that touched each segment.
    segment_versions: BTreeMap<Segment, u64>,
}

impl RegistrySnapshot {
    pub fn new(graph: DomainGraph, schema: ParameterSchema) -> Self {
        RegistrySnapshot {
            version: 0,
            graph,
            schema,
            offerings: BTreeMap::new(),
            ids: BTreeMap::new(),
            segment_versions: BTreeMap::new(),
        }
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn graph(&self) -> &DomainGraph {
        &self.graph
    }

    pub fn schema(&self) -> &ParameterSchema {
        &self.schema
    }

    /// Current Pareto frontier of a segment, ordered by offering id. The
    /// segment must be an edge of the domain graph; an edge with nothing
    /// registered yields an empty slice.
    pub fn offerings_for_segment(
        &self,
        from: &DomainId,
        to: &DomainId,
    ) -> Result<&[SlaOffering], RegistryError> {
        if !self.graph.has_edge(from, to) {
            return Err(RegistryError::UnknownSegment(Segment {
                from: from.clone(),
                to: to.clone(),
            }));
        }
        Ok(self
            .offerings
            .get(&Segment { from: from.clone(), to: to.clone() })
            .map_or(&[], Vec::as_slice))
    }

    pub fn offering(&self, id: &OfferingId) -> Option<&SlaOffering> {
        let segment = self.ids.get(id)?;
        self.offerings.get(segment)?.iter().find(|o| &o.id == id)
    }

    /// Every live offering, ordered by (from, to, id).
    pub fn all_offerings(&self) -> impl Iterator<Item = &SlaOffering> {
        self.offerings.values().flatten()
    }

    pub fn offering_count(&self) -> usize {
        self.offerings.values().map(Vec::len).sum()
    }

    /// Version of the last mutation that touched the segment; 0 if none has.
    pub fn segment_version(&self, segment: &Segment) -> u64 {
        self.segment_versions.get(segment).copied().unwrap_or(0)
    }

    fn validate_offering(&self, offering: &SlaOffering) -> Result<(), RegistryError> {
        if !self.graph.has_edge(&offering.from, &offering.to) {
            return Err(RegistryError::UnknownSegment(offering.segment()));
        }
        offering.validate_against(&self.schema)?;
        if self.ids.contains_key(&offering.id) {
            return Err(RegistryError::DuplicateId(offering.id.clone()));
        }
        Ok(())
    }

    fn apply_insert(&mut self, mut offering: SlaOffering) -> Result<RegisterOutcome, RegistryError> {
        self.validate_offering(&offering)?;
        let segment = offering.segment();
        let frontier = self.offerings.entry(segment.clone()).or_default();

        let dominated_by: Vec<OfferingId> = frontier
            .iter()
            .filter(|incumbent| pareto_dominates(incumbent, &offering, &self.schema).unwrap_or(false))
            .map(|incumbent| incumbent.id.clone())
            .collect();
        if !dominated_by.is_empty() {
            return Ok(RegisterOutcome::PrunedDominated { id: offering.id, dominated_by });
        }

        let evicted: Vec<OfferingId> = frontier
            .iter()
            .filter(|incumbent| pareto_dominates(&offering, incumbent, &self.schema).unwrap_or(false))
            .map(|incumbent| incumbent.id.clone())
            .collect();
        frontier.retain(|incumbent| !evicted.contains(&incumbent.id));
        for id in &evicted {
            self.ids.remove(id);
        }

        self.version += 1;
        offering.updated_at = self.version;
        let id = offering.id.clone();
        self.ids.insert(id.clone(), segment.clone());
        frontier.push(offering);
        frontier.sort_by(|a, b| a.id.cmp(&b.id));
        self.segment_versions.insert(segment, self.version);

        if evicted.is_empty() {
            Ok(RegisterOutcome::Accepted { id })
        } else {
            Ok(RegisterOutcome::ReplacedExisting { id, evicted })
        }
    }

    fn apply_remove(&mut self, id: &OfferingId) -> Result<SlaOffering, RegistryError> {
        let segment = self
            .ids
            .remove(id)
            .ok_or_else(|| RegistryError::NotFound(id.clone()))?;
        let frontier = self.offerings.get_mut(&segment).expect("id index is consistent");
        let at = frontier
            .iter()
            .position(|o| &o.id == id)
            .expect("id index is consistent");
        let removed = frontier.remove(at);
        if frontier.is_empty() {
            self.offerings.remove(&segment);
        }
        self.version += 1;
        self.segment_versions.insert(segment, self.version);
        Ok(removed)
    }
}

/// Outcome of a registration attempt.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum RegisterOutcome {
    /// Inserted; no incumbent was affected.
    Accepted { id: OfferingId },
    /// Rejected: an incumbent dominates the submission. The registry is
    /// unchanged and the version does not move.
    PrunedDominated { id: OfferingId, dominated_by: Vec<OfferingId> },
    /// Inserted, evicting the incumbents the submission dominates.
    ReplacedExisting { id: OfferingId, evicted: Vec<OfferingId> },
}

impl RegisterOutcome {
    /// Whether the registry changed.
    pub fn mutated(&self) -> bool {
        !matches!(self, RegisterOutcome::PrunedDominated { .. })
    }
}

/// Shared, mutable registry handle.
#[derive(Debug)]
pub struct Registry {
    state: RwLock<Arc<RegistrySnapshot>>,
    credentials: CredentialStore,
}

impl Registry {
    pub fn new(snapshot: RegistrySnapshot, credentials: CredentialStore) -> Self {
        Registry { state: RwLock::new(Arc::new(snapshot)), credentials }
    }

    /// Cheap immutable view; never blocked by mutations in progress.
    pub fn snapshot(&self) -> Arc<RegistrySnapshot> {
        self.state.read().expect("registry lock poisoned").clone()
    }

    /// Registers an offering on behalf of its origin domain. The credential
    /// must belong to that domain.
    pub fn register_offering(
        &self,
        offering: SlaOffering,
        credential: &Credential,
    ) -> Result<RegisterOutcome, RegistryError> {
        if credential.domain != offering.from
            || offering.registered_by != offering.from
            || !self.credentials.authorizes(credential)
        {
            return Err(RegistryError::Unauthorized(credential.domain.clone()));
        }
        let mut state = self.state.write().expect("registry lock poisoned");
        let mut next = (**state).clone();
        let outcome = next.apply_insert(offering)?;
        if outcome.mutated() {
            *state = Arc::new(next);
        }
        Ok(outcome)
    }

    /// Removes an offering by id. The credential must belong to the
    /// offering's origin domain. Returns the removed offering.
    pub fn remove_offering(
        &self,
        id: &OfferingId,
        credential: &Credential,
    ) -> Result<SlaOffering, RegistryError> {
        let mut state = self.state.write().expect("registry lock poisoned");
        let owner = state
            .ids
            .get(id)
            .map(|segment| segment.from.clone())
            .ok_or_else(|| RegistryError::NotFound(id.clone()))?;
        if credential.domain != owner || !self.credentials.authorizes(credential) {
            return Err(RegistryError::Unauthorized(credential.domain.clone()));
        }
        let mut next = (**state).clone();
        let removed = next.apply_remove(id)?;
        *state = Arc::new(next);
        Ok(removed)
    }

    /// Raw read-back of a domain's own rows, credentialed.
    pub fn offerings_for_domain(
        &self,
        domain: &DomainId,
        credential: &Credential,
    ) -> Result<Vec<SlaOffering>, RegistryError> {
        if credential.domain != *domain || !self.credentials.authorizes(credential) {
            return Err(RegistryError::Unauthorized(credential.domain.clone()));
        }
        let snapshot = self.snapshot();
        Ok(snapshot
            .all_offerings()
            .filter(|o| &o.from == domain)
            .cloned()
            .collect())
    }
}

/// Builds a snapshot from loose offerings, enforcing per-segment frontiers.
/// In strict mode any dominated offering fails the build; with `prune` the
/// dominated ones are dropped instead. Returns the snapshot at version 0 and
/// the ids that were pruned.
pub fn build_snapshot(
    graph: DomainGraph,
    schema: ParameterSchema,
    offerings: Vec<SlaOffering>,
    prune: bool,
) -> Result<(RegistrySnapshot, Vec<OfferingId>), RegistryError> {
    let mut snapshot = RegistrySnapshot::new(graph, schema);
    let mut by_segment: BTreeMap<Segment, Vec<SlaOffering>> = BTreeMap::new();
    for offering in offerings {
        snapshot.validate_offering(&offering)?;
        snapshot.ids.insert(offering.id.clone(), offering.segment());
        by_segment.entry(offering.segment()).or_default().push(offering);
    }
    snapshot.ids.clear();

    let mut pruned = Vec::new();
    for (segment, mut rows) in by_segment {
        rows.sort_by(|a, b| a.id.cmp(&b.id));
        let mut dominated = Vec::new();
        for row in &rows {
            if rows
                .iter()
                .any(|other| pareto_dominates(other, row, &snapshot.schema).unwrap_or(false))
            {
                dominated.push(row.id.clone());
            }
        }
        if !dominated.is_empty() {
            if !prune {
                return Err(RegistryError::Dominated { ids: dominated });
            }
            pruned.extend(dominated.iter().cloned());
            rows.retain(|row| !dominated.contains(&row.id));
        }
        for row in &rows {
            snapshot.ids.insert(row.id.clone(), segment.clone());
        }
        if !rows.is_empty() {
            snapshot.offerings.insert(segment, rows);
        }
    }
    Ok((snapshot, pruned))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistryError {
    #[error("segment {0} is not an edge of the domain graph")]
    UnknownSegment(Segment),
    #[error("offering id `{0}` is already registered")]
    DuplicateId(OfferingId),
    #[error("no offering with id `{0}`")]
    NotFound(OfferingId),
    #[error("credential does not authorize domain `{0}`")]
    Unauthorized(DomainId),
    #[error("dominated offerings: {}", ids.iter().map(|id| id.as_str()).collect::<Vec<_>>().join(", "))]
    Dominated { ids: Vec<OfferingId> },
    #[error(transparent)]
    Invalid(#[from] ModelError),
}
