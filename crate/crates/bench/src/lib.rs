//! Workload builders for the engine benchmarks: the bundled example
//! network plus synthetic layered networks whose path and frontier
//! counts are controlled exactly.

use std::path::Path;

use piqos_core::{
    build_snapshot, load_registry, Composition, DomainGraph, DomainId, Extraction, LoadMode,
    ParamValue, ParameterDecl, ParameterSchema, QosQuery, RegistrySnapshot, Sense, SlaOffering,
};

/// The example network bundled with the repository.
pub fn example_snapshot() -> RegistrySnapshot {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/example-network.json");
    let text = std::fs::read_to_string(&path).expect("read example network");
    load_registry(&text, LoadMode::Strict).expect("example network is valid")
}

/// The reference shipment query used throughout the documentation.
pub fn example_query() -> QosQuery {
    let mut query = QosQuery::new("1", "6", "(w=3/5, w=2/5, >60%)");
    query.deadline_hours = Some(60.0);
    query.include_disallowed = true;
    query
}

/// Cost / emissions / transit-time schema shared by all synthetic
/// workloads.
pub fn standard_schema() -> ParameterSchema {
    ParameterSchema::new(vec![
        ParameterDecl {
            name: "cost".into(),
            unit: "EUR".into(),
            composition: Composition::Additive,
            sense: Sense::LowerBetter,
            extraction: Extraction::Value,
        },
        ParameterDecl {
            name: "co2".into(),
            unit: "kg".into(),
            composition: Composition::Additive,
            sense: Sense::LowerBetter,
            extraction: Extraction::Value,
        },
        ParameterDecl {
            name: "transport_time".into(),
            unit: "h".into(),
            composition: Composition::NormalSum,
            sense: Sense::LowerBetter,
            extraction: Extraction::OnTimeProbability,
        },
    ])
    .expect("schema is valid")
}

/// A layered network: `src -> layer 0 -> ... -> layer L-1 -> dst`, each
/// consecutive pair fully connected, `width` domains per layer and
/// `offerings_per_edge` mutually non-dominated offerings on every edge
/// (cheap-but-slow through expensive-but-fast). Candidate count for a
/// src->dst query is exactly `width^layers * offerings_per_edge^(layers+1)`.
pub fn layered_snapshot(layers: usize, width: usize, offerings_per_edge: usize) -> RegistrySnapshot {
    assert!(layers >= 1 && width >= 1);
    assert!(
        (1..=8).contains(&offerings_per_edge),
        "diagonal construction stays positive for up to 8 offerings"
    );
    let node = |layer: usize, slot: usize| DomainId::new(format!("L{layer}-{slot}"));
    let src = DomainId::new("src");
    let dst = DomainId::new("dst");

    let mut domains = vec![src.clone(), dst.clone()];
    for layer in 0..layers {
        for slot in 0..width {
            domains.push(node(layer, slot));
        }
    }
    let mut edges = Vec::new();
    for slot in 0..width {
        edges.push((src.clone(), node(0, slot)));
        edges.push((node(layers - 1, slot), dst.clone()));
    }
    for layer in 1..layers {
        for a in 0..width {
            for b in 0..width {
                edges.push((node(layer - 1, a), node(layer, b)));
            }
        }
    }
    let graph = DomainGraph::new(domains, edges.clone()).expect("layered graph is valid");

    // Offering k trades money for time: cost and emissions rise with k
    // while the transit-time distribution improves, so no offering on an
    // edge dominates another and every one survives in the frontier.
    let mut offerings = Vec::new();
    for (from, to) in &edges {
        for k in 0..offerings_per_edge {
            let k_f = k as f64;
            offerings.push(SlaOffering::new(
                format!("{from}-{to}-{k}"),
                from.clone(),
                to.clone(),
                String::new(),
                vec![
                    ParamValue::Scalar(50.0 + 10.0 * k_f),
                    ParamValue::Scalar(40.0 + 5.0 * k_f),
                    ParamValue::Normal { mean: 40.0 - 4.0 * k_f, var: 4.0 + k_f },
                ],
            ));
        }
    }

    let (snapshot, pruned) =
        build_snapshot(graph, standard_schema(), offerings, false).expect("snapshot builds");
    assert!(pruned.is_empty());
    snapshot
}

/// A src->dst query across a layered network with a deadline loose
/// enough that on-time probabilities stay informative.
pub fn layered_query(layers: usize) -> QosQuery {
    let mut query = QosQuery::new("src", "dst", "(w=3/5, w=2/5, >50%)");
    // Roughly the expected transit time of the mid-priced ladder rung.
    query.deadline_hours = Some(38.0 * (layers + 1) as f64);
    query.max_hops = layers + 1;
    query.include_disallowed = true;
    query
}
