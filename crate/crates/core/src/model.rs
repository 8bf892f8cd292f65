//! Core value types shared by the registry and the QoS processor: the
//! inter-domain graph, the per-network parameter schema, and SLA offerings
//! with Pareto dominance between offerings on the same segment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Opaque identifier of an administrative transport domain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DomainId(String);

impl DomainId {
    pub fn new(id: impl Into<String>) -> Self {
        DomainId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DomainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for DomainId {
    fn from(id: &str) -> Self {
        DomainId(id.to_owned())
    }
}

impl From<String> for DomainId {
    fn from(id: String) -> Self {
        DomainId(id)
    }
}

/// Unique identifier of a registered SLA offering.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OfferingId(String);

impl OfferingId {
    pub fn new(id: impl Into<String>) -> Self {
        OfferingId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for OfferingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for OfferingId {
    fn from(id: &str) -> Self {
        OfferingId(id.to_owned())
    }
}

impl From<String> for OfferingId {
    fn from(id: String) -> Self {
        OfferingId(id)
    }
}

/// Directed leg between two adjacent domains.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub from: DomainId,
    pub to: DomainId,
}

impl Segment {
    pub fn new(from: impl Into<DomainId>, to: impl Into<DomainId>) -> Self {
        Segment { from: from.into(), to: to.into() }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

/// How per-segment values of a parameter combine along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composition {
    /// Scalar values add up segment by segment.
    Additive,
    /// Independent normal distributions add: means sum, variances sum.
    NormalSum,
}

/// Orientation of a parameter: whether smaller or larger raw values are
/// preferable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    LowerBetter,
    HigherBetter,
}

/// How a composed parameter turns into one decision value for a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extraction {
    /// The composed scalar itself (for a normal, its mean).
    Value,
    /// Probability that a normally distributed total stays within the
    /// query deadline.
    OnTimeProbability,
}

/// Declaration of one QoS parameter shared by every offering in a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDecl {
    pub name: String,
    pub unit: String,
    pub composition: Composition,
    pub sense: Sense,
    pub extraction: Extraction,
}

impl ParameterDecl {
    /// Orientation of the decision value this parameter contributes to a
    /// query. An on-time probability is higher-better regardless of how the
    /// underlying raw parameter is declared.
    pub fn decision_sense(&self) -> Sense {
        match self.extraction {
            Extraction::OnTimeProbability => Sense::HigherBetter,
            Extraction::Value => self.sense,
        }
    }
}

/// Ordered list of parameter declarations. All offerings in a registry carry
/// exactly one value per declared parameter, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSchema {
    params: Vec<ParameterDecl>,
}

impl ParameterSchema {
    /// Validates and builds a schema. At least one parameter is required,
    /// names must be unique, on-time probability extraction only applies to
    /// normal-sum parameters, and normal-sum parameters must be declared
    /// lower-better (dominance orders their mean and variance downward, so a
    /// higher-better declaration would prune toward the worst offerings).
    pub fn new(params: Vec<ParameterDecl>) -> Result<Self, ModelError> {
        if params.is_empty() {
            return Err(ModelError::EmptySchema);
        }
        let mut seen = BTreeSet::new();
        for decl in &params {
            if !seen.insert(decl.name.clone()) {
                return Err(ModelError::DuplicateParameter(decl.name.clone()));
            }
            if decl.extraction == Extraction::OnTimeProbability
                && decl.composition != Composition::NormalSum
            {
                return Err(ModelError::ExtractionMismatch(decl.name.clone()));
            }
            if decl.composition == Composition::NormalSum && decl.sense == Sense::HigherBetter {
                return Err(ModelError::NormalSense(decl.name.clone()));
            }
        }
        Ok(ParameterSchema { params })
    }

    pub fn params(&self) -> &[ParameterDecl] {
        &self.params
    }

    /// Number of declared parameters; every offering carries this many values.
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// Length of a dominance key: one component per scalar parameter, two
    /// (mean, variance) per normal-sum parameter.
    pub fn key_width(&self) -> usize {
        self.params
            .iter()
            .map(|p| match p.composition {
                Composition::Additive => 1,
                Composition::NormalSum => 2,
            })
            .sum()
    }
}

/// One per-segment guarantee of an offering, matching the parameter's
/// composition rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    Normal { mean: f64, var: f64 },
}

impl ParamValue {
    pub fn validate(&self, decl: &ParameterDecl) -> Result<(), ModelError> {
        match (self, decl.composition) {
            (ParamValue::Scalar(v), Composition::Additive) => {
                if !v.is_finite() {
                    return Err(ModelError::InvalidValue {
                        name: decl.name.clone(),
                        reason: "scalar value must be finite".into(),
                    });
                }
                Ok(())
            }
            (ParamValue::Normal { mean, var }, Composition::NormalSum) => {
                if !mean.is_finite() || !var.is_finite() {
                    return Err(ModelError::InvalidValue {
                        name: decl.name.clone(),
                        reason: "mean and variance must be finite".into(),
                    });
                }
                if *mean < 0.0 {
                    return Err(ModelError::InvalidValue {
                        name: decl.name.clone(),
                        reason: "mean must be non-negative".into(),
                    });
                }
                if *var < 0.0 {
                    return Err(ModelError::InvalidValue {
                        name: decl.name.clone(),
                        reason: "variance must be non-negative".into(),
                    });
                }
                Ok(())
            }
            _ => Err(ModelError::ValueKind { name: decl.name.clone() }),
        }
    }
}

/// A per-segment SLA published by the segment's origin domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlaOffering {
    pub id: OfferingId,
    pub from: DomainId,
    pub to: DomainId,
    pub label: String,
    /// One value per schema parameter, in declaration order.
    pub values: Vec<ParamValue>,
    pub registered_by: DomainId,
    /// Registry version at which the offering was last written; 0 until
    /// registered.
    pub updated_at: u64,
}

impl SlaOffering {
    pub fn new(
        id: impl Into<OfferingId>,
        from: impl Into<DomainId>,
        to: impl Into<DomainId>,
        label: impl Into<String>,
        values: Vec<ParamValue>,
    ) -> Self {
        let from = from.into();
        SlaOffering {
            id: id.into(),
            registered_by: from.clone(),
            from,
            to: to.into(),
            label: label.into(),
            values,
            updated_at: 0,
        }
    }

    pub fn segment(&self) -> Segment {
        Segment { from: self.from.clone(), to: self.to.clone() }
    }

    pub fn validate_against(&self, schema: &ParameterSchema) -> Result<(), ModelError> {
        if self.values.len() != schema.arity() {
            return Err(ModelError::ArityMismatch {
                expected: schema.arity(),
                got: self.values.len(),
            });
        }
        for (value, decl) in self.values.iter().zip(schema.params()) {
            value.validate(decl)?;
        }
        Ok(())
    }
}

/// Canonical all-lower-better comparison key of an offering: higher-better
/// scalars are negated, a normal contributes its mean and variance (smaller
/// mean and smaller variance never yield a worse on-time probability).
pub fn dominance_key(
    offering: &SlaOffering,
    schema: &ParameterSchema,
) -> Result<Vec<f64>, ModelError> {
    offering.validate_against(schema)?;
    let mut key = Vec::with_capacity(schema.key_width());
    for (value, decl) in offering.values.iter().zip(schema.params()) {
        match value {
            ParamValue::Scalar(v) => key.push(match decl.sense {
                Sense::LowerBetter => *v,
                Sense::HigherBetter => -*v,
            }),
            ParamValue::Normal { mean, var } => {
                key.push(*mean);
                key.push(*var);
            }
        }
    }
    Ok(key)
}

/// Whether `a` Pareto-dominates `b`: no worse in every key component and
/// strictly better in at least one. Only offerings on the same segment are
/// comparable.
pub fn pareto_dominates(
    a: &SlaOffering,
    b: &SlaOffering,
    schema: &ParameterSchema,
) -> Result<bool, ModelError> {
    if a.from != b.from || a.to != b.to {
        return Err(ModelError::SegmentMismatch);
    }
    let ka = dominance_key(a, schema)?;
    let kb = dominance_key(b, schema)?;
    let mut strict = false;
    for (x, y) in ka.iter().zip(&kb) {
        if x > y {
            return Ok(false);
        }
        if x < y {
            strict = true;
        }
    }
    Ok(strict)
}

/// Directed graph of domains. Edges are the segments offerings may cover.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainGraph {
    domains: BTreeSet<DomainId>,
    adjacency: BTreeMap<DomainId, BTreeSet<DomainId>>,
}

impl DomainGraph {
    pub fn new(
        domains: impl IntoIterator<Item = DomainId>,
        edges: impl IntoIterator<Item = (DomainId, DomainId)>,
    ) -> Result<Self, ModelError> {
        let domains: BTreeSet<DomainId> = domains.into_iter().collect();
        let mut adjacency: BTreeMap<DomainId, BTreeSet<DomainId>> = BTreeMap::new();
        for (from, to) in edges {
            if !domains.contains(&from) {
                return Err(ModelError::UnknownDomain(from));
            }
            if !domains.contains(&to) {
                return Err(ModelError::UnknownDomain(to));
            }
            if from == to {
                return Err(ModelError::SelfLoop(from));
            }
            adjacency.entry(from).or_default().insert(to);
        }
        Ok(DomainGraph { domains, adjacency })
    }

    pub fn contains(&self, domain: &DomainId) -> bool {
        self.domains.contains(domain)
    }

    pub fn has_edge(&self, from: &DomainId, to: &DomainId) -> bool {
        self.adjacency.get(from).is_some_and(|next| next.contains(to))
    }

    pub fn domains(&self) -> impl Iterator<Item = &DomainId> {
        self.domains.iter()
    }

    /// Out-neighbors of a domain in ascending identifier order.
    pub fn successors(&self, domain: &DomainId) -> impl Iterator<Item = &DomainId> {
        self.adjacency.get(domain).into_iter().flatten()
    }

    /// All edges as segments, ordered by (from, to).
    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        self.adjacency.iter().flat_map(|(from, tos)| {
            tos.iter().map(move |to| Segment { from: from.clone(), to: to.clone() })
        })
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeSet::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("schema must declare at least one parameter")]
    EmptySchema,
    #[error("duplicate parameter name `{0}`")]
    DuplicateParameter(String),
    #[error("parameter `{0}`: on-time probability extraction requires normal-sum composition")]
    ExtractionMismatch(String),
    #[error("parameter `{0}`: normal-sum parameters must be declared lower-better")]
    NormalSense(String),
    #[error("expected {expected} parameter values, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("parameter `{name}`: value kind does not match the declared composition")]
    ValueKind { name: String },
    #[error("parameter `{name}`: {reason}")]
    InvalidValue { name: String, reason: String },
    #[error("offerings on different segments are not comparable")]
    SegmentMismatch,
    #[error("unknown domain `{0}`")]
    UnknownDomain(DomainId),
    #[error("self-loop edge on `{0}`")]
    SelfLoop(DomainId),
}
