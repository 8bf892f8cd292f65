//! The QoS processor: enumerates candidate paths between two domains,
//! composes each combination of per-segment offerings end to end, filters by
//! the command's constraints, and ranks by the weighted score. Results are
//! deterministic for a given snapshot version, which makes them cacheable.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, RwLock};

use serde::Serialize;
use thiserror::Error;

use crate::calculus::{
    compose_path, extract_decision_vector, Bindings, CalculusError, ComposedValues, DecisionVector,
};
use crate::command::{check_constraints, parse_command, score, CommandError};
use crate::model::{DomainGraph, DomainId, OfferingId, Segment, SlaOffering};
use crate::registry::{Registry, RegistryError, RegistrySnapshot};

pub const DEFAULT_MAX_HOPS: usize = 8;

/// A shipment routing question against one registry.
#[derive(Debug, Clone, PartialEq)]
pub struct QosQuery {
    pub origin: DomainId,
    pub destination: DomainId,
    /// Command text; parsed against the registry schema.
    pub command: String,
    pub deadline_hours: Option<f64>,
    /// Upper bound on path length in edges.
    pub max_hops: usize,
    /// Keep candidates that fail a constraint, flagged as not allowed.
    pub include_disallowed: bool,
    /// Replace raw scores with normalized display scores and withhold
    /// composed values.
    pub obfuscate: bool,
}

impl QosQuery {
    pub fn new(
        origin: impl Into<DomainId>,
        destination: impl Into<DomainId>,
        command: impl Into<String>,
    ) -> Self {
        QosQuery {
            origin: origin.into(),
            destination: destination.into(),
            command: command.into(),
            deadline_hours: None,
            max_hops: DEFAULT_MAX_HOPS,
            include_disallowed: true,
            obfuscate: false,
        }
    }

    pub fn with_deadline(mut self, hours: f64) -> Self {
        self.deadline_hours = Some(hours);
        self
    }
}

/// One fully evaluated path-and-offerings combination.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCandidate {
    pub path: Vec<DomainId>,
    /// One offering per path segment, in path order.
    pub offering_ids: Vec<OfferingId>,
    pub composed: ComposedValues,
    pub decision: DecisionVector,
    pub score: f64,
    /// Whether every constraint of the command holds.
    pub allowed: bool,
}

/// A candidate as a query response row. Under obfuscation the composed
/// values and the decision vector are withheld and the score is a
/// normalized display value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedCandidate {
    pub path: Vec<DomainId>,
    pub offering_ids: Vec<OfferingId>,
    pub score: f64,
    pub allowed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composed: Option<ComposedValues>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
}

/// Echo of the query a result answers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryEcho {
    pub origin: DomainId,
    pub destination: DomainId,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deadline_hours: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedResult {
    pub query: QueryEcho,
    /// Registry version the result was computed from.
    pub registry_version: u64,
    pub obfuscated: bool,
    pub candidates: Vec<RankedCandidate>,
}

/// All simple directed paths from `origin` to `destination` with at most
/// `max_hops` edges, in lexicographic order.
pub fn enumerate_paths(
    graph: &DomainGraph,
    origin: &DomainId,
    destination: &DomainId,
    max_hops: usize,
) -> Result<Vec<Vec<DomainId>>, ProcessorError> {
    if !graph.contains(origin) {
        return Err(ProcessorError::UnknownDomain(origin.clone()));
    }
    if !graph.contains(destination) {
        return Err(ProcessorError::UnknownDomain(destination.clone()));
    }
    if origin == destination {
        return Err(ProcessorError::OriginIsDestination);
    }
    if max_hops == 0 {
        return Err(ProcessorError::InvalidMaxHops);
    }
    let mut paths = Vec::new();
    let mut trail = vec![origin.clone()];
    let mut visited = BTreeSet::from([origin.clone()]);
    walk(graph, destination, max_hops, &mut trail, &mut visited, &mut paths);
    Ok(paths)
}

fn walk(
    graph: &DomainGraph,
    destination: &DomainId,
    max_hops: usize,
    trail: &mut Vec<DomainId>,
    visited: &mut BTreeSet<DomainId>,
    paths: &mut Vec<Vec<DomainId>>,
) {
    let here = trail.last().expect("trail is never empty").clone();
    // Edges used so far; taking one more must stay within the bound.
    let used = trail.len() - 1;
    if used == max_hops {
        return;
    }
    for next in graph.successors(&here) {
        if next == destination {
            let mut path = trail.clone();
            path.push(destination.clone());
            paths.push(path);
        } else if !visited.contains(next) {
            trail.push(next.clone());
            visited.insert(next.clone());
            walk(graph, destination, max_hops, trail, visited, paths);
            visited.remove(next);
            trail.pop();
        }
    }
}

/// Offering combinations along a path: the cartesian product of the
/// per-segment frontiers, as id tuples ordered lexicographically by
/// per-segment position (first segment most significant). Empty if any
/// segment has nothing registered.
pub fn enumerate_candidates(
    path: &[DomainId],
    snapshot: &RegistrySnapshot,
) -> Result<Vec<Vec<OfferingId>>, ProcessorError> {
    let frontiers = segment_frontiers(path, snapshot)?;
    Ok(product(&frontiers)
        .map(|combo| combo.iter().map(|o| o.id.clone()).collect())
        .collect())
}

fn segment_frontiers<'a>(
    path: &[DomainId],
    snapshot: &'a RegistrySnapshot,
) -> Result<Vec<&'a [SlaOffering]>, ProcessorError> {
    path.windows(2)
        .map(|leg| Ok(snapshot.offerings_for_segment(&leg[0], &leg[1])?))
        .collect()
}

/// Odometer over one pick per frontier; the last position spins fastest.
fn product<'a>(
    frontiers: &'a [&'a [SlaOffering]],
) -> impl Iterator<Item = Vec<&'a SlaOffering>> + 'a {
    let mut indices = vec![0usize; frontiers.len()];
    let mut done = frontiers.iter().any(|f| f.is_empty());
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let combo: Vec<&SlaOffering> =
            indices.iter().zip(frontiers).map(|(&i, f)| &f[i]).collect();
        done = true;
        for pos in (0..indices.len()).rev() {
            indices[pos] += 1;
            if indices[pos] < frontiers[pos].len() {
                done = false;
                break;
            }
            indices[pos] = 0;
        }
        Some(combo)
    })
}

/// Evaluated and sorted candidates, before display shaping. Sorted ascending
/// by score; ties break on the path, then on the offering ids.
pub fn rank_candidates(
    query: &QosQuery,
    snapshot: &RegistrySnapshot,
) -> Result<Vec<PathCandidate>, ProcessorError> {
    Ok(evaluate(query, snapshot)?.0)
}

fn evaluate(
    query: &QosQuery,
    snapshot: &RegistrySnapshot,
) -> Result<(Vec<PathCandidate>, BTreeSet<Segment>), ProcessorError> {
    let command = parse_command(&query.command, snapshot.schema())?;
    let bindings = Bindings { deadline_hours: query.deadline_hours };
    let paths = enumerate_paths(
        snapshot.graph(),
        &query.origin,
        &query.destination,
        query.max_hops,
    )?;

    let mut touched = BTreeSet::new();
    let mut candidates = Vec::new();
    for path in paths {
        for leg in path.windows(2) {
            touched.insert(Segment { from: leg[0].clone(), to: leg[1].clone() });
        }
        let frontiers = segment_frontiers(&path, snapshot)?;
        for combo in product(&frontiers) {
            let values: Vec<&[crate::model::ParamValue]> =
                combo.iter().map(|o| o.values.as_slice()).collect();
            let composed = compose_path(&values, snapshot.schema())?;
            let decision = extract_decision_vector(&composed, snapshot.schema(), &bindings)?;
            let allowed = check_constraints(&command, &decision);
            let s = score(&command, &decision, snapshot.schema());
            candidates.push(PathCandidate {
                path: path.clone(),
                offering_ids: combo.iter().map(|o| o.id.clone()).collect(),
                composed,
                decision,
                score: s,
                allowed,
            });
        }
    }
    candidates.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then_with(|| a.path.cmp(&b.path))
            .then_with(|| a.offering_ids.cmp(&b.offering_ids))
    });
    if !query.include_disallowed {
        candidates.retain(|c| c.allowed);
    }
    Ok((candidates, touched))
}

/// Display scores for an already sorted candidate list: each raw score is
/// normalized to 0..=100 over the list's span and rounded, and the raw
/// composed values are withheld. Relative order is preserved; if every raw
/// score is equal, every display score is 0.
pub fn obfuscate_scores(candidates: &[PathCandidate]) -> Vec<RankedCandidate> {
    let min = candidates.iter().map(|c| c.score).fold(f64::INFINITY, f64::min);
    let max = candidates.iter().map(|c| c.score).fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    candidates
        .iter()
        .map(|c| RankedCandidate {
            path: c.path.clone(),
            offering_ids: c.offering_ids.clone(),
            score: if span > 0.0 { (100.0 * (c.score - min) / span).round() } else { 0.0 },
            allowed: c.allowed,
            composed: None,
            x: None,
        })
        .collect()
}

fn reveal(candidates: Vec<PathCandidate>) -> Vec<RankedCandidate> {
    candidates
        .into_iter()
        .map(|c| RankedCandidate {
            path: c.path,
            offering_ids: c.offering_ids,
            score: c.score,
            allowed: c.allowed,
            composed: Some(c.composed),
            x: Some(c.decision.x),
        })
        .collect()
}

/// Answers a query against a snapshot. Pure: the same query against the same
/// snapshot version yields an identical result.
pub fn rank(query: &QosQuery, snapshot: &RegistrySnapshot) -> Result<RankedResult, ProcessorError> {
    let (candidates, _) = evaluate(query, snapshot)?;
    Ok(shape(query, snapshot, candidates))
}

fn shape(
    query: &QosQuery,
    snapshot: &RegistrySnapshot,
    candidates: Vec<PathCandidate>,
) -> RankedResult {
    let candidates = if query.obfuscate {
        obfuscate_scores(&candidates)
    } else {
        reveal(candidates)
    };
    RankedResult {
        query: QueryEcho {
            origin: query.origin.clone(),
            destination: query.destination.clone(),
            command: query.command.clone(),
            deadline_hours: query.deadline_hours,
        },
        registry_version: snapshot.version(),
        obfuscated: query.obfuscate,
        candidates,
    }
}

#[derive(Hash, PartialEq, Eq)]
struct CacheKey {
    origin: DomainId,
    destination: DomainId,
    command: String,
    deadline_bits: Option<u64>,
    max_hops: usize,
    include_disallowed: bool,
    obfuscate: bool,
}

impl CacheKey {
    fn of(query: &QosQuery) -> Self {
        CacheKey {
            origin: query.origin.clone(),
            destination: query.destination.clone(),
            command: query.command.clone(),
            deadline_bits: query.deadline_hours.map(f64::to_bits),
            max_hops: query.max_hops,
            include_disallowed: query.include_disallowed,
            obfuscate: query.obfuscate,
        }
    }
}

struct CacheEntry {
    result: Arc<RankedResult>,
    /// Segments of every enumerated path, including ones with empty
    /// frontiers: a registration there changes the answer.
    segments: BTreeSet<Segment>,
}

/// A registry handle plus a memo of past query results. An entry is reused
/// only while no mutation has touched any segment of its enumerated paths,
/// so a hit is exactly what recomputing against the entry's snapshot would
/// return.
pub struct QosProcessor {
    registry: Arc<Registry>,
    cache: RwLock<HashMap<CacheKey, CacheEntry>>,
}

impl QosProcessor {
    pub fn new(registry: Arc<Registry>) -> Self {
        QosProcessor { registry, cache: RwLock::new(HashMap::new()) }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// Answers a query, reusing a cached result when it is provably still
    /// current. Staleness is decided against the snapshot taken at call
    /// time: an entry computed at version v survives only if no segment it
    /// depends on has been mutated after v.
    pub fn cached_rank(&self, query: &QosQuery) -> Result<Arc<RankedResult>, ProcessorError> {
        let snapshot = self.registry.snapshot();
        let key = CacheKey::of(query);
        {
            let cache = self.cache.read().expect("cache lock poisoned");
            if let Some(entry) = cache.get(&key) {
                let current = entry
                    .segments
                    .iter()
                    .all(|s| snapshot.segment_version(s) <= entry.result.registry_version);
                if current {
                    return Ok(entry.result.clone());
                }
            }
        }
        let (candidates, segments) = evaluate(query, &snapshot)?;
        let result = Arc::new(shape(query, &snapshot, candidates));
        let mut cache = self.cache.write().expect("cache lock poisoned");
        cache.insert(key, CacheEntry { result: result.clone(), segments });
        Ok(result)
    }

    /// Drops every cached entry whose paths traverse the segment. Reads that
    /// race with this stay correct either way: validity is re-checked
    /// against the live snapshot on every hit.
    pub fn invalidate_segment(&self, segment: &Segment) {
        let mut cache = self.cache.write().expect("cache lock poisoned");
        cache.retain(|_, entry| !entry.segments.contains(segment));
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.read().expect("cache lock poisoned").len()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProcessorError {
    #[error("unknown domain `{0}`")]
    UnknownDomain(DomainId),
    #[error("origin and destination must differ")]
    OriginIsDestination,
    #[error("max hops must be at least 1")]
    InvalidMaxHops,
    #[error(transparent)]
    Command(#[from] CommandError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}
