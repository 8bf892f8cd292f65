//! End-to-end QoS selection for multi-domain logistics networks.
//!
//! Transport domains publish per-segment SLA offerings into a shared
//! registry, each offering guaranteeing one value per network-wide
//! parameter (price, emissions, a normally distributed duration, ...).
//! The registry keeps only Pareto-efficient offerings per directed segment.
//! A query names an origin, a destination, and a command vector that turns
//! each parameter into either a constraint or a weighted objective; the
//! processor enumerates candidate paths, composes the per-segment values end
//! to end, and returns the candidates ranked by weighted score without
//! exposing any individual offering's raw values.

pub mod calculus;
pub mod command;
pub mod document;
pub mod model;
pub mod processor;
pub mod registry;

pub use calculus::{
    compose_path, extract_decision_vector, std_normal_cdf, Bindings, CalculusError,
    ComposedValues, DecisionVector,
};
pub use command::{
    check_constraints, parse_command, score, CommandEntry, CommandError, ConstraintOp, QosCommand,
    EQ_TOLERANCE,
};
pub use document::{
    load_registry, load_registry_pruning, save_registry, validate_document, DocumentError,
    LoadMode,
};
pub use model::{
    dominance_key, pareto_dominates, Composition, DomainGraph, DomainId, Extraction, ModelError,
    OfferingId, ParamValue, ParameterDecl, ParameterSchema, Segment, Sense, SlaOffering,
};
pub use processor::{
    enumerate_candidates, enumerate_paths, obfuscate_scores, rank, rank_candidates, PathCandidate,
    ProcessorError, QosProcessor, QosQuery, QueryEcho, RankedCandidate, RankedResult,
    DEFAULT_MAX_HOPS,
};
pub use registry::{
    build_snapshot, Credential, CredentialStore, RegisterOutcome, Registry, RegistryError,
    RegistrySnapshot,
};
