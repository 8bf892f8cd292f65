//! Acceptance suite: one test per acceptance criterion, each printing a
//! single pass/fail line (run with `--nocapture` to see them). The checks
//! lean on independent reference implementations in `oracle` rather than
//! re-deriving expectations from engine internals.

// Reference constants are recorded at full precision, beyond what f64
// resolves, so the rounding is explicit rather than hidden in the source.
#![allow(clippy::excessive_precision)]

mod oracle;

use std::sync::Arc;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use piqos_core::{
    pareto_dominates, parse_command, rank, std_normal_cdf, CommandEntry, Composition, ConstraintOp,
    Credential, CredentialStore, DomainId, Extraction, ParamValue, ParameterDecl, ParameterSchema,
    QosProcessor, RegisterOutcome, Registry, RegistrySnapshot, Sense, SlaOffering,
};

use support::report;

/// One expected row: score, path, cost, co2, on-time percent, allowed.
type GoldenRow = (f64, &'static [&'static str], f64, f64, i64, bool);

/// Expected golden ranking over the example network.
const GOLDEN: [GoldenRow; 16] = [
    (134.0, &["1", "2", "4", "6"], 150.0, 110.0, 50, false),
    (137.0, &["1", "2", "5", "6"], 155.0, 110.0, 65, true),
    (139.0, &["1", "3", "5", "6"], 145.0, 130.0, 100, true),
    (141.0, &["1", "2", "4", "6"], 155.0, 120.0, 86, true),
    (142.0, &["1", "3", "4", "6"], 170.0, 100.0, 0, false),
    (143.0, &["1", "3", "5", "6"], 165.0, 110.0, 65, true),
    (146.0, &["1", "2", "5", "6"], 160.0, 125.0, 90, true),
    (148.0, &["1", "3", "5", "6"], 150.0, 145.0, 100, true),
    (149.0, &["1", "3", "4", "6"], 175.0, 110.0, 2, false),
    (151.0, &["1", "2", "5", "6"], 165.0, 130.0, 100, true),
    (152.0, &["1", "3", "5", "6"], 170.0, 125.0, 90, true),
    (160.0, &["1", "2", "5", "6"], 170.0, 145.0, 100, true),
    (162.0, &["1", "2", "4", "6"], 170.0, 150.0, 99, true),
    (169.0, &["1", "2", "4", "6"], 175.0, 160.0, 100, true),
    (178.0, &["1", "3", "4", "6"], 190.0, 160.0, 98, true),
    (185.0, &["1", "3", "4", "6"], 195.0, 170.0, 100, true),
];

#[test]
fn criterion_1_golden_table_reproduction() {
    report("criterion 1", "example dataset reproduces the 16-row golden ranking in under 1s", || {
        let snapshot = support::example_snapshot();
        let query = support::golden_query();
        let started = Instant::now();
        let result = rank(&query, &snapshot).expect("golden query ranks");
        let elapsed = started.elapsed();

        assert_eq!(result.candidates.len(), 16, "expected 16 candidates");
        for (row, (score, path, cost, co2, percent, allowed)) in
            result.candidates.iter().zip(GOLDEN)
        {
            assert!(
                (row.score - score).abs() <= 1e-9,
                "score {} != {score}",
                row.score
            );
            let got_path: Vec<&str> = row.path.iter().map(|d| d.as_str()).collect();
            assert_eq!(got_path, path);
            let composed = row.composed.as_ref().expect("clear result carries values");
            assert_eq!(composed.values[0], ParamValue::Scalar(cost), "cost mismatch");
            assert_eq!(composed.values[1], ParamValue::Scalar(co2), "co2 mismatch");
            let x = row.x.as_ref().expect("clear result carries decisions");
            let got_percent = (x[2] * 100.0).round() as i64;
            assert!(
                (got_percent - percent).abs() <= 1,
                "on-time {got_percent}% not within 1 point of {percent}%"
            );
            assert_eq!(row.allowed, allowed);
        }
        assert!(elapsed.as_secs_f64() < 1.0, "golden query took {elapsed:?}");
    });
}

#[test]
fn criterion_2_command_example_conformance() {
    report("criterion 2", "command (=10, >20, w=5, w=1) parses to the documented structure", || {
        let schema = ParameterSchema::new(
            (0..4)
                .map(|i| ParameterDecl {
                    name: format!("x{}", i + 1),
                    unit: "u".to_string(),
                    composition: Composition::Additive,
                    sense: Sense::LowerBetter,
                    extraction: Extraction::Value,
                })
                .collect(),
        )
        .unwrap();
        let command = parse_command("(=10, >20, w=5, w=1)", &schema).unwrap();

        assert_eq!(
            command.entries()[0],
            CommandEntry::Constraint { op: ConstraintOp::Eq, bound: 10.0 },
            "x1 must be constrained to = 10"
        );
        assert_eq!(
            command.entries()[1],
            CommandEntry::Constraint { op: ConstraintOp::Gt, bound: 20.0 },
            "x2 must be constrained to > 20"
        );
        assert_eq!(command.entries()[2], CommandEntry::Objective { weight: 5.0 });
        assert_eq!(command.entries()[3], CommandEntry::Objective { weight: 1.0 });

        let one_based: Vec<usize> = command.objective_indices().map(|i| i + 1).collect();
        assert_eq!(one_based, vec![3, 4], "objective indices must be {{3, 4}}");
    });
}

#[test]
fn criterion_3_oracle_equivalence() {
    report("criterion 3", "rank() matches a brute-force oracle on 500 random instances", || {
        let started = Instant::now();
        let mut rng = StdRng::seed_from_u64(0x5eed_cafe);
        let mut nonempty = 0usize;
        for case in 0..500 {
            let instance = support::random_instance(&mut rng);
            let produced =
                rank(&instance.query, &instance.snapshot).expect("generated query ranks");
            let expected = oracle::oracle_rank(&instance.query, &instance.snapshot);

            assert_eq!(
                produced.candidates.len(),
                expected.len(),
                "case {case}: candidate count mismatch"
            );
            for (got, want) in produced.candidates.iter().zip(&expected) {
                assert_eq!(got.path, want.path, "case {case}: path mismatch");
                assert_eq!(
                    got.offering_ids, want.offering_ids,
                    "case {case}: offering mismatch"
                );
                assert_eq!(
                    got.score.to_bits(),
                    want.score.to_bits(),
                    "case {case}: score {} != {}",
                    got.score,
                    want.score
                );
                assert_eq!(got.allowed, want.allowed, "case {case}: allowed mismatch");
            }
            nonempty += usize::from(!expected.is_empty());
        }
        assert!(nonempty >= 100, "suite degenerated: only {nonempty} non-empty rankings");
        let elapsed = started.elapsed();
        assert!(elapsed.as_secs() < 60, "oracle suite took {elapsed:?}");
    });
}

#[test]
fn criterion_4_normal_cdf_accuracy() {
    report("criterion 4", "Φ matches an independent series oracle to 1e-7 with exact midpoint", || {
        // Anchor the oracle itself against high-precision reference values.
        let anchors = [
            (-2.0, 0.022750131948179207),
            (-1.0, 0.15865525393145705),
            (-0.75, 0.2266273523768682),
            (0.3, 0.61791142218895264),
            (0.39223227027636806, 0.65255669881376329),
            (1.0, 0.84134474606854295),
            (1.0660035817780522, 0.85678898861107061),
            (3.5, 0.99976737092096447),
            (6.0, 0.99999999901341235),
            (-6.0, 9.8658764503769814e-10),
        ];
        for (z, reference) in anchors {
            assert!(
                (phi_oracle_checked(z) - reference).abs() <= 1e-13,
                "series oracle drifted at z={z}"
            );
            assert!(
                (std_normal_cdf(z) - reference).abs() <= 1e-7,
                "cdf off reference at z={z}"
            );
        }

        let mut max_err: f64 = 0.0;
        for step in -60..=60 {
            let z = step as f64 / 10.0;
            max_err = max_err.max((std_normal_cdf(z) - phi_oracle_checked(z)).abs());
        }
        assert!(max_err <= 1e-7, "max |Φ - oracle| = {max_err:e} on [-6, 6]");

        assert_eq!(std_normal_cdf(0.0), 0.5, "Φ(0) must be exactly one half");

        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..2_000 {
            let z: f64 = rng.random_range(-37.0..37.0);
            let residue = (std_normal_cdf(z) + std_normal_cdf(-z) - 1.0).abs();
            assert!(residue <= 1e-12, "symmetry residue {residue:e} at z={z}");
        }
    });
}

fn phi_oracle_checked(z: f64) -> f64 {
    let phi = oracle::phi_series(z);
    assert!((0.0..=1.0).contains(&phi));
    phi
}

#[test]
fn criterion_5_pareto_frontier_maintenance() {
    report("criterion 5", "random register/remove sequences never leave a dominated offering", || {
        let mut counter = 0usize;
        for seed in 0..60u64 {
            let mut rng = StdRng::seed_from_u64(seed);
            let (schema, graph, seeds) = support::random_network(&mut rng);
            let edges: Vec<_> = graph.edges().collect();
            if edges.is_empty() {
                continue;
            }
            let credentials: CredentialStore = graph
                .domains()
                .map(|d| (d.clone(), format!("s-{d}")))
                .collect();
            let registry = Registry::new(
                RegistrySnapshot::new(graph.clone(), schema.clone()),
                credentials,
            );

            for step in 0..40 {
                let remove = rng.random_bool(0.3);
                let pre = registry.snapshot();
                if remove {
                    let existing: Vec<_> = pre.all_offerings().map(|o| o.id.clone()).collect();
                    if existing.is_empty() {
                        continue;
                    }
                    let id = existing[rng.random_range(0..existing.len())].clone();
                    let owner = pre.offering(&id).unwrap().from.clone();
                    let secret = format!("s-{owner}");
                    let removed = registry
                        .remove_offering(&id, &Credential::new(owner, secret))
                        .expect("owned removal succeeds");
                    assert_eq!(removed.id, id);
                    assert!(registry.snapshot().offering(&id).is_none());
                } else {
                    let edge = &edges[rng.random_range(0..edges.len())];
                    // Values borrowed from the generator pool when possible
                    // so duplicates and dominated rows occur often.
                    let values = if !seeds.is_empty() && rng.random_bool(0.5) {
                        seeds[rng.random_range(0..seeds.len())].values.clone()
                    } else {
                        support::random_values(&mut rng, &schema)
                    };
                    counter += 1;
                    let offering = SlaOffering::new(
                        format!("o{seed}-{step}-{counter}"),
                        edge.from.clone(),
                        edge.to.clone(),
                        "r".to_string(),
                        values,
                    );
                    let submitted = offering.clone();
                    let secret = format!("s-{}", edge.from);
                    let credential = Credential::new(edge.from.clone(), secret);
                    match registry.register_offering(offering, &credential).unwrap() {
                        RegisterOutcome::Accepted { id } => {
                            assert!(registry.snapshot().offering(&id).is_some());
                        }
                        RegisterOutcome::PrunedDominated { dominated_by, .. } => {
                            assert!(!dominated_by.is_empty());
                            // A rejection must be justified by a pre-existing dominator.
                            let justified = dominated_by.iter().all(|d| {
                                pre.offering(d).is_some_and(|incumbent| {
                                    pareto_dominates(incumbent, &submitted, &schema).unwrap()
                                })
                            });
                            assert!(justified, "pruned without a dominating incumbent");
                            assert_eq!(pre.version(), registry.snapshot().version());
                        }
                        RegisterOutcome::ReplacedExisting { id, evicted } => {
                            let post = registry.snapshot();
                            assert!(post.offering(&id).is_some());
                            for gone in &evicted {
                                assert!(post.offering(gone).is_none());
                                let old = pre.offering(gone).unwrap();
                                assert!(
                                    pareto_dominates(&submitted, old, &schema).unwrap(),
                                    "evicted `{gone}` was not dominated by the new row"
                                );
                            }
                        }
                    }
                }

                // The standing invariant: every segment frontier is mutually
                // non-dominated.
                let snapshot = registry.snapshot();
                let rows: Vec<_> = snapshot.all_offerings().collect();
                for a in &rows {
                    for b in &rows {
                        if a.id != b.id && a.segment() == b.segment() {
                            assert!(
                                !pareto_dominates(a, b, &schema).unwrap(),
                                "frontier holds dominated `{}` (by `{}`)",
                                b.id,
                                a.id
                            );
                        }
                    }
                }
            }
        }
        assert!(counter > 300, "too few register operations exercised: {counter}");
    });
}

#[test]
fn criterion_6_cache_correctness() {
    report("criterion 6", "cache hits are bit-identical and mutations invalidate with a version bump", || {
        let snapshot = support::example_snapshot();
        let credentials: CredentialStore =
            [(DomainId::new("2"), "s2".to_string())].into_iter().collect();
        let registry = Arc::new(Registry::new(snapshot, credentials));
        let processor = QosProcessor::new(Arc::clone(&registry));
        let query = support::golden_query();

        let first = processor.cached_rank(&query).unwrap();
        let second = processor.cached_rank(&query).unwrap();
        assert!(Arc::ptr_eq(&first, &second), "repeat query must hit the cache");

        let recomputed = rank(&query, &registry.snapshot()).unwrap();
        assert_eq!(*first, recomputed, "cache hit differs from recomputation");
        assert_eq!(
            serde_json::to_string(&*first).unwrap(),
            serde_json::to_string(&recomputed).unwrap(),
            "serialized cache hit differs from recomputation"
        );

        // Mutate a segment on an enumerated path (2->4 lies on 1-2-4-6).
        let version_before = registry.snapshot().version();
        let outcome = registry
            .register_offering(
                SlaOffering::new(
                    "2-4-balanced",
                    "2",
                    "4",
                    "Balanced",
                    vec![
                        ParamValue::Scalar(120.0),
                        ParamValue::Scalar(30.0),
                        ParamValue::Normal { mean: 45.0, var: 30.0 },
                    ],
                ),
                &Credential::new("2", "s2"),
            )
            .unwrap();
        assert!(outcome.mutated(), "the new offering must join the frontier");
        let version_after = registry.snapshot().version();
        assert!(version_after > version_before, "mutation must bump the version");

        let third = processor.cached_rank(&query).unwrap();
        assert!(!Arc::ptr_eq(&first, &third), "stale entry served after mutation");
        assert!(third.registry_version > first.registry_version);
        assert_eq!(
            third.candidates.len(),
            first.candidates.len() + 2,
            "one more 2->4 offering adds two 1-2-4-6 combinations"
        );
    });
}

#[test]
fn criterion_7_confidentiality_boundary() {
    report("criterion 7", "query responses carry no per-offering data; read-back is owner-only", || {
        cli_confidentiality();
        tokio::runtime::Runtime::new().unwrap().block_on(service_confidentiality());
    });
}

fn cli_confidentiality() {
    let registry = support::example_dataset();
    let run = |extra: &[&str]| -> serde_json::Value {
        let mut args = vec![
            "--registry".to_string(),
            registry.display().to_string(),
            "--format".to_string(),
            "json".to_string(),
            "query".to_string(),
            "--origin".to_string(),
            "1".to_string(),
            "--dest".to_string(),
            "6".to_string(),
            "--command".to_string(),
            "(w=3/5, w=2/5, >60%)".to_string(),
            "--deadline".to_string(),
            "60".to_string(),
            "--all".to_string(),
        ];
        args.extend(extra.iter().map(|s| s.to_string()));
        let output = std::process::Command::new(env!("CARGO_BIN_EXE_piqos"))
            .args(&args)
            .output()
            .expect("binary runs");
        assert!(output.status.success(), "query failed: {:?}", output);
        serde_json::from_slice(&output.stdout).expect("json output parses")
    };

    let clear = run(&[]);
    support::assert_no_offering_data(&clear);
    assert_eq!(clear["candidates"].as_array().unwrap().len(), 16);

    let blurred = run(&["--obfuscate"]);
    support::assert_no_offering_data(&blurred);
    for candidate in blurred["candidates"].as_array().unwrap() {
        let keys: Vec<&str> =
            candidate.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys, ["allowed", "offering_ids", "path", "score"]);
    }
}

async fn service_confidentiality() {
    use axum::body::Body;
    use axum::http::{Request, StatusCode};
    use http_body_util::BodyExt;
    use tower::ServiceExt;

    use piqos_cli::server::{build_router, AppState, SECRET_HEADER};

    let snapshot = support::example_snapshot();
    let credentials: CredentialStore = [
        (DomainId::new("1"), "s1".to_string()),
        (DomainId::new("2"), "s2".to_string()),
    ]
    .into_iter()
    .collect();
    let registry = Arc::new(Registry::new(snapshot, credentials));
    let dir = tempfile::tempdir().unwrap();
    let state = Arc::new(AppState::new(
        registry,
        dir.path().join("registry.json"),
        8,
        false,
    ));
    let app = build_router(state);

    let body = serde_json::json!({
        "origin": "1",
        "destination": "6",
        "command": "(w=3/5, w=2/5, >60%)",
        "deadline": 60.0,
    });
    let response = app
        .clone()
        .oneshot(
            Request::builder()
                .method("POST")
                .uri("/query")
                .header("content-type", "application/json")
                .body(Body::from(body.to_string()))
                .unwrap(),
        )
        .await
        .unwrap();
    assert_eq!(response.status(), StatusCode::OK);
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let payload: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    support::assert_no_offering_data(&payload);
    assert_eq!(payload["candidates"].as_array().unwrap().len(), 16);

    // Credentialed read-back returns only the caller's own rows.
    let response = app
        .clone()
        .oneshot(
            Request::builder()
                .uri("/offerings?domain=2")
                .header(SECRET_HEADER, "s2")
                .body(Body::empty())
                .unwrap(),
        )
        .await
        .unwrap();
    assert_eq!(response.status(), StatusCode::OK);
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let payload: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    let rows = payload["offerings"].as_array().unwrap();
    assert_eq!(rows.len(), 4, "domain 2 owns two offerings each on 2->4 and 2->5");
    for row in rows {
        assert_eq!(row["from"], "2");
        assert!(row.get("values").is_some(), "raw read-back carries the SLA values");
    }

    // Wrong secret, missing secret, and cross-domain secrets are rejected.
    for (uri, secret) in [
        ("/offerings?domain=2", Some("wrong")),
        ("/offerings?domain=2", None),
        ("/offerings?domain=1", Some("s2")),
    ] {
        let mut builder = Request::builder().uri(uri);
        if let Some(secret) = secret {
            builder = builder.header(SECRET_HEADER, secret);
        }
        let response =
            app.clone().oneshot(builder.body(Body::empty()).unwrap()).await.unwrap();
        assert_eq!(
            response.status(),
            StatusCode::UNAUTHORIZED,
            "expected 401 for {uri} with secret {secret:?}"
        );
    }
}

#[test]
fn criterion_8_persistence_round_trip() {
    report("criterion 8", "save-load-save is byte-identical on the example and 100 random registries", || {
        let text = std::fs::read_to_string(support::example_dataset()).unwrap();
        let loaded = piqos_core::load_registry(&text, piqos_core::LoadMode::Strict).unwrap();
        assert_eq!(
            piqos_core::save_registry(&loaded),
            text,
            "example dataset is not in canonical form"
        );

        let mut rng = StdRng::seed_from_u64(0xd0c5);
        for case in 0..100 {
            let snapshot = support::random_snapshot(&mut rng);
            let first = piqos_core::save_registry(&snapshot);
            let reloaded = piqos_core::load_registry(&first, piqos_core::LoadMode::Strict)
                .unwrap_or_else(|e| panic!("case {case}: canonical save does not load: {e}"));
            let second = piqos_core::save_registry(&reloaded);
            assert_eq!(first, second, "case {case}: round trip not byte-identical");
        }
    });
}
