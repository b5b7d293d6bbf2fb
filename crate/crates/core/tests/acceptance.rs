//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};

use bellfrac::behavior::Classification;
use bellfrac::enumeration::{derive_q, derive_s, dual_polyhedron, enumerate_vertices};
use bellfrac::lp;
use bellfrac::measures::{generate_from_orbits, solution_set, SetKind, VectorClass};
use bellfrac::polytopes::ns_vertices;
use bellfrac::sampler::{self, SampleConfig};
use bellfrac::verify::{
    decomposition_failure, identity_failures, landmark_failures, reference_shares, triple_agreement,
};
use bellfrac::{Behavior, Target};

const SEED: u64 = 20_240_501;
/// Criterion 1 runtime bound.
const ENUMERATION_BUDGET: Duration = Duration::from_secs(180);
/// Random behaviors for criteria 2 and 4.
const RANDOM_BEHAVIORS: usize = 1_000;
/// Criterion 6 sample size, share tolerance (percentage points) and runtime.
const PREVALENCE_N: usize = 100_000;
const SHARE_TOLERANCE_PP: f64 = 0.75;
const PREVALENCE_BUDGET: Duration = Duration::from_secs(600);
/// Criterion 8 sample size.
const DECOMPOSITION_BEHAVIORS: usize = 200;

type Outcome = Result<String, String>;

fn first_failure(failures: Vec<String>, ok: String) -> Outcome {
    match failures.first() {
        None => Ok(ok),
        Some(f) => Err(format!("{} failure(s); first: {f}", failures.len())),
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let q = generate_from_orbits(SetKind::Q);
    let s = generate_from_orbits(SetKind::S);
    let q_counts: Vec<usize> = q.class_counts().values().copied().collect();
    let s_counts: Vec<usize> = s.class_counts().values().copied().collect();
    if q.len() != 128 || q_counts != [8, 16, 32, 64, 8] {
        failures.push(format!(
            "orbit ℚ: {} vectors, classes {q_counts:?}",
            q.len()
        ));
    }
    if s.len() != 120 || s_counts != [8, 16, 32, 64] {
        failures.push(format!(
            "orbit 𝕊: {} vectors, classes {s_counts:?}",
            s.len()
        ));
    }
    let local = enumerate_vertices(&dual_polyhedron(Target::Local)).map_err(|e| e.to_string())?;
    let ns =
        enumerate_vertices(&dual_polyhedron(Target::NonSignaling)).map_err(|e| e.to_string())?;
    if local.vertices.len() != 132 || local.rays.len() != 16 {
        failures.push(format!(
            "local dual: {} vertices, {} rays",
            local.vertices.len(),
            local.rays.len()
        ));
    }
    if ns.vertices.len() != 124 {
        failures.push(format!("NS dual: {} vertices", ns.vertices.len()));
    }
    let dq = derive_q().map_err(|e| e.to_string())?;
    let ds = derive_s().map_err(|e| e.to_string())?;
    if dq != q.coefficient_set() {
        failures.push("derived ℚ differs from orbit ℚ".into());
    }
    if ds != s.coefficient_set() {
        failures.push("derived 𝕊 differs from orbit 𝕊".into());
    }
    if dq != solution_set(SetKind::Q).coefficient_set()
        || ds != solution_set(SetKind::S).coefficient_set()
    {
        failures.push("derived sets differ from the shipped data".into());
    }
    let elapsed = start.elapsed();
    if elapsed > ENUMERATION_BUDGET {
        failures.push(format!("took {elapsed:?}"));
    }
    first_failure(
        failures,
        format!(
            "orbits 128/120, enumeration {}/{} vertices, derived sets equal, {:.2}s",
            local.vertices.len(),
            ns.vertices.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2(behaviors: &[Behavior]) -> Outcome {
    let pool: Vec<&Behavior> = behaviors.iter().chain(ns_vertices()).collect();
    let mut failures = Vec::new();
    let mut nonlocal = 0;
    for b in &pool {
        for target in [Target::Local, Target::NonSignaling] {
            match triple_agreement(b, target) {
                Ok(v) => {
                    if target == Target::Local && v < bellfrac::Rational::one() {
                        nonlocal += 1;
                    }
                }
                Err(e) => failures.push(e),
            }
        }
    }
    first_failure(
        failures,
        format!(
            "{} behaviors × 2 targets agree exactly ({nonlocal} with μ_L < 1)",
            pool.len()
        ),
    )
}

fn criterion_3() -> Outcome {
    first_failure(
        landmark_failures(),
        "PR 0/1, 16 locals 1, noisy PR 1/2, copy 0/0, Tsirelson 2 − √2".into(),
    )
}

fn criterion_4(behaviors: &[Behavior]) -> Outcome {
    let q = solution_set(SetKind::Q);
    let s = solution_set(SetKind::S);
    let failures: Vec<String> = behaviors
        .iter()
        .flat_map(|b| identity_failures(b, q, s))
        .collect();
    let ns = behaviors.iter().filter(|b| b.is_nonsignaling()).count();
    first_failure(
        failures,
        format!(
            "{} behaviors ({ns} non-signaling), all identities exact",
            behaviors.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut failures = Vec::new();
    let mut total = 0;
    for kind in [SetKind::Q, SetKind::S] {
        let outcomes = sampler::witness_suite(kind).map_err(|e| e.to_string())?;
        total += outcomes.len();
        failures.extend(
            outcomes
                .iter()
                .filter(|o| !o.passes())
                .map(|o| o.describe()),
        );
    }
    if total != 248 {
        failures.push(format!("{total} witnesses, expected 248"));
    }
    first_failure(
        failures,
        format!("{total} witnesses, each a unique exact zero"),
    )
}

fn criteria_6_and_7() -> (Outcome, Outcome) {
    let start = Instant::now();
    let cfg = SampleConfig::new(PREVALENCE_N, SEED).expect("valid config");
    let study = match sampler::study(&cfg) {
        Ok(s) => s,
        Err(e) => return (Err(e.to_string()), Err(e.to_string())),
    };
    let elapsed = start.elapsed();
    let mut failures = Vec::new();
    let mut shares = Vec::new();
    let mut worst: f64 = 0.0;
    for report in [&study.local, &study.nonsignaling] {
        for &(class, reference) in reference_shares(report.kind) {
            let got = report.percentage(class);
            let diff = (got - reference).abs();
            worst = worst.max(diff);
            shares.push(format!("{}:{class} {got:.2}", report.kind));
            if diff > SHARE_TOLERANCE_PP {
                failures.push(format!(
                    "{} {class}: {got:.3}% vs {reference}%",
                    report.kind
                ));
            }
        }
    }
    if elapsed > PREVALENCE_BUDGET {
        failures.push(format!("took {elapsed:?}"));
    }
    let six = first_failure(
        failures,
        format!(
            "n = {PREVALENCE_N}, max deviation {worst:.3} pp [{}], {:.2}s",
            shares.join(", "),
            elapsed.as_secs_f64()
        ),
    );
    let sources: BTreeSet<VectorClass> = study
        .migration
        .transitions
        .keys()
        .map(|(f, _)| *f)
        .collect();
    let seven = if sources
        .iter()
        .all(|c| matches!(c, VectorClass::S | VectorClass::E))
        && !sources.is_empty()
    {
        let moves: Vec<String> = study
            .migration
            .transitions
            .iter()
            .map(|((f, t), n)| format!("{f}→{t} {n}"))
            .collect();
        Ok(format!(
            "{} migrations, all from s or e [{}]",
            study.migration.total_migrated(),
            moves.join(", ")
        ))
    } else {
        Err(format!("migration sources {sources:?}"))
    };
    (six, seven)
}

fn criterion_8() -> Outcome {
    let behaviors = sampler::random_rational_behaviors(SEED ^ 0x8, DECOMPOSITION_BEHAVIORS);
    let mut failures = Vec::new();
    let mut partial = 0;
    for b in &behaviors {
        for target in [Target::Local, Target::NonSignaling] {
            if let Some(f) = decomposition_failure(b, target) {
                failures.push(f);
            }
        }
        let d = lp::decompose(b, Target::Local);
        if let Some(inner) = &d.inner {
            if inner.classify() != Classification::Local {
                failures.push("local inner part fails Fine's conditions".into());
            }
        }
        if !d.p.is_zero() && !d.p.is_one() {
            partial += 1;
        }
    }
    first_failure(
        failures,
        format!(
            "{} behaviors × 2 targets recombine bit-exactly ({partial} with 0 < p < 1)",
            behaviors.len()
        ),
    )
}

fn main() {
    let behaviors = sampler::random_rational_behaviors(SEED, RANDOM_BEHAVIORS);
    let (six, seven) = criteria_6_and_7();
    let results: Vec<(u8, &str, Outcome)> = vec![
        (1, "set derivation", criterion_1()),
        (2, "triple agreement", criterion_2(&behaviors)),
        (3, "landmark values", criterion_3()),
        (4, "identity suite", criterion_4(&behaviors)),
        (5, "non-redundancy", criterion_5()),
        (6, "prevalence", six),
        (7, "migration structure", seven),
        (8, "decomposition soundness", criterion_8()),
    ];
    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n} ({name}): PASS  {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL  {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
