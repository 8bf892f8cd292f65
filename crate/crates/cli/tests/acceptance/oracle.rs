//! Independent reference implementations the acceptance checks compare the
//! engine against. The ranking oracle re-derives candidate rankings from
//! first principles (its own path walker, product enumerator, evaluator,
//! and sort); the CDF oracle uses a Taylor series, a different algorithm
//! family from the engine's rational approximation.

use std::collections::BTreeSet;

use piqos_core::{
    parse_command, std_normal_cdf, CommandEntry, Composition, ConstraintOp, DomainId, Extraction,
    OfferingId, ParamValue, QosQuery, RegistrySnapshot, Sense, SlaOffering,
};

/// Reference standard normal CDF: Φ(z) = 1/2 + φ(z)·Σ z^(2k+1)/(2k+1)!!.
/// The series has only positive terms for z > 0, so there is no
/// cancellation; truncation stops at f64 resolution.
pub fn phi_series(z: f64) -> f64 {
    if z < 0.0 {
        return 1.0 - phi_series(-z);
    }
    if z == 0.0 {
        return 0.5;
    }
    if z > 12.0 {
        return 1.0;
    }
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut term = z;
    let mut sum = z;
    let mut k = 1u32;
    loop {
        term *= z * z / (2 * k + 1) as f64;
        let next = sum + term;
        if next == sum || k > 600 {
            break;
        }
        sum = next;
        k += 1;
    }
    0.5 + pdf * sum
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub path: Vec<DomainId>,
    pub offering_ids: Vec<OfferingId>,
    pub score: f64,
    pub allowed: bool,
}

/// Brute-force ranking: worklist path enumeration, recursive offering
/// product, direct per-parameter evaluation, then one big sort.
pub fn oracle_rank(query: &QosQuery, snapshot: &RegistrySnapshot) -> Vec<OracleRow> {
    let schema = snapshot.schema();
    let command = parse_command(&query.command, schema).expect("oracle called with valid command");

    let edges: BTreeSet<(DomainId, DomainId)> = snapshot
        .graph()
        .edges()
        .map(|s| (s.from.clone(), s.to.clone()))
        .collect();
    let domains: BTreeSet<DomainId> =
        edges.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();

    // Grow partial paths on a worklist; a path ends the moment it reaches
    // the destination, so the destination is never an interior node.
    let mut paths: Vec<Vec<DomainId>> = Vec::new();
    let mut work: Vec<Vec<DomainId>> = vec![vec![query.origin.clone()]];
    while let Some(partial) = work.pop() {
        let last = partial.last().unwrap().clone();
        if last == query.destination {
            paths.push(partial);
            continue;
        }
        if partial.len() > query.max_hops {
            continue;
        }
        for next in &domains {
            if edges.contains(&(last.clone(), next.clone())) && !partial.contains(next) {
                let mut extended = partial.clone();
                extended.push(next.clone());
                work.push(extended);
            }
        }
    }
    paths.sort();

    let mut rows: Vec<OracleRow> = Vec::new();
    for path in &paths {
        let mut per_segment: Vec<Vec<&SlaOffering>> = Vec::new();
        let mut reachable = true;
        for hop in path.windows(2) {
            let mut rows_here: Vec<&SlaOffering> = snapshot
                .offerings_for_segment(&hop[0], &hop[1])
                .expect("path hop is an edge")
                .iter()
                .collect();
            rows_here.sort_by(|a, b| a.id.cmp(&b.id));
            if rows_here.is_empty() {
                reachable = false;
                break;
            }
            per_segment.push(rows_here);
        }
        if !reachable {
            continue;
        }
        let mut combo: Vec<&SlaOffering> = Vec::new();
        product(&per_segment, &mut combo, &mut |combo| {
            rows.push(evaluate(query, snapshot, &command, path, combo));
        });
    }

    rows.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then_with(|| a.path.cmp(&b.path))
            .then_with(|| a.offering_ids.cmp(&b.offering_ids))
    });
    if !query.include_disallowed {
        rows.retain(|r| r.allowed);
    }
    rows
}

fn product<'a>(
    per_segment: &[Vec<&'a SlaOffering>],
    combo: &mut Vec<&'a SlaOffering>,
    emit: &mut impl FnMut(&[&'a SlaOffering]),
) {
    if combo.len() == per_segment.len() {
        emit(combo);
        return;
    }
    for offering in &per_segment[combo.len()] {
        combo.push(offering);
        product(per_segment, combo, emit);
        combo.pop();
    }
}

fn evaluate(
    query: &QosQuery,
    snapshot: &RegistrySnapshot,
    command: &piqos_core::QosCommand,
    path: &[DomainId],
    combo: &[&SlaOffering],
) -> OracleRow {
    let schema = snapshot.schema();
    let mut x = vec![0.0; schema.arity()];
    for (i, decl) in schema.params().iter().enumerate() {
        match decl.composition {
            Composition::Additive => {
                let mut sum = 0.0;
                for offering in combo {
                    match offering.values[i] {
                        ParamValue::Scalar(v) => sum += v,
                        ParamValue::Normal { .. } => unreachable!("validated offering"),
                    }
                }
                x[i] = sum;
            }
            Composition::NormalSum => {
                let (mut mean, mut var) = (0.0, 0.0);
                for offering in combo {
                    match offering.values[i] {
                        ParamValue::Normal { mean: m, var: v } => {
                            mean += m;
                            var += v;
                        }
                        ParamValue::Scalar(_) => unreachable!("validated offering"),
                    }
                }
                x[i] = match decl.extraction {
                    Extraction::Value => mean,
                    Extraction::OnTimeProbability => {
                        let deadline = query.deadline_hours.expect("deadline provided");
                        if var == 0.0 {
                            if mean <= deadline {
                                1.0
                            } else {
                                0.0
                            }
                        } else {
                            // Same CDF primitive as production: criterion 3
                            // checks the ranking pipeline, criterion 4 checks
                            // the CDF itself against an independent series.
                            std_normal_cdf((deadline - mean) / var.sqrt())
                        }
                    }
                };
            }
        }
    }

    let mut score = 0.0;
    let mut allowed = true;
    for (i, entry) in command.entries().iter().enumerate() {
        match entry {
            CommandEntry::Constraint { op, bound } => {
                let holds = match op {
                    ConstraintOp::Eq => (x[i] - bound).abs() <= 1e-9,
                    ConstraintOp::Lt => x[i] < *bound,
                    ConstraintOp::Le => x[i] <= *bound,
                    ConstraintOp::Gt => x[i] > *bound,
                    ConstraintOp::Ge => x[i] >= *bound,
                };
                if !holds {
                    allowed = false;
                }
            }
            CommandEntry::Objective { weight } => {
                let decl = &schema.params()[i];
                let higher_better = decl.extraction == Extraction::OnTimeProbability
                    || decl.sense == Sense::HigherBetter;
                let sign = if higher_better { -1.0 } else { 1.0 };
                score += weight * sign * x[i];
            }
        }
    }

    OracleRow {
        path: path.to_vec(),
        offering_ids: combo.iter().map(|o| o.id.clone()).collect(),
        score,
        allowed,
    }
}
