//! Cross-module self-check suite behind `bellfrac verify`.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::behavior::{flat_index, labels_of, Behavior, Classification, DIM};
use crate::enumeration::{self, dual_polyhedron, dual_vertices};
use crate::lp;
use crate::measures::{
    build_against, evaluate, fraction, fraction_f64, has_class_shape, local_fraction_ns_formula,
    max_signaling_via_f, symmetry_group, SetKind, VectorClass, VectorSet, E_VECTORS, F_VECTORS,
};
use crate::polytopes::{local_strategies, mix, ns_vertices, pr_boxes};
use crate::rational::{format_rational, Rational};
use crate::sampler::{self, SampleConfig};
use crate::Target;

/// Reference class shares (percent) from a 500,000-sample run.
pub const REFERENCE_SHARES_Q: [(VectorClass, f64); 5] = [
    (VectorClass::F, 76.18),
    (VectorClass::G, 17.35),
    (VectorClass::T, 2.62),
    (VectorClass::S, 3.81),
    (VectorClass::E, 0.04),
];
pub const REFERENCE_SHARES_S: [(VectorClass, f64); 4] = [
    (VectorClass::F, 77.83),
    (VectorClass::G, 18.27),
    (VectorClass::T, 3.13),
    (VectorClass::Z, 0.76),
];

pub fn reference_shares(kind: SetKind) -> &'static [(VectorClass, f64)] {
    match kind {
        SetKind::Q => &REFERENCE_SHARES_Q,
        SetKind::S => &REFERENCE_SHARES_S,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn from_failures(name: &'static str, ok_detail: String, failures: Vec<String>) -> Self {
        match failures.first() {
            None => CheckResult {
                name,
                passed: true,
                detail: ok_detail,
            },
            Some(first) => CheckResult {
                name,
                passed: false,
                detail: format!("{} failure(s); first: {first}", failures.len()),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub quick: bool,
    /// Replacement texts for the shipped vector files.
    pub q_text: Option<String>,
    pub s_text: Option<String>,
    pub seed: u64,
    pub random_count: usize,
    pub sample_n: usize,
    /// Allowed deviation from the published shares, percentage points.
    pub share_tolerance: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            quick: false,
            q_text: None,
            s_text: None,
            seed: sampler::DEFAULT_SEED,
            random_count: 300,
            sample_n: 500_000,
            share_tolerance: 0.25,
        }
    }
}

// ---------------------------------------------------------------------------
// Landmark behaviors

/// Alice outputs 0; Bob outputs Alice's setting.
pub fn copy_behavior() -> Behavior {
    let mut v = vec![Rational::zero(); DIM];
    for (x, y) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        v[flat_index(0, x, x, y)] = Rational::one();
    }
    Behavior::from_flat(v).expect("copy behavior")
}

/// `(3/4)·PR + (1/4)·uniform`.
pub fn noisy_pr() -> Behavior {
    let w = [
        Rational::new(3.into(), 4.into()),
        Rational::new(1.into(), 4.into()),
    ];
    mix(&w, &[pr_boxes()[0].clone(), Behavior::uniform()]).expect("convex weights")
}

/// Tsirelson-optimal behavior `P(ab|xy) = (1 + (−1)^{a⊕b⊕xy}/√2)/4`.
pub fn tsirelson_f64() -> [f64; DIM] {
    std::array::from_fn(|i| {
        let (a, b, x, y) = labels_of(i);
        let sign = if (a ^ b ^ (x & y)) == 0 { 1.0 } else { -1.0 };
        0.25 * (1.0 + sign * std::f64::consts::FRAC_1_SQRT_2)
    })
}

pub fn landmark_failures() -> Vec<String> {
    let mut out = Vec::new();
    let mut expect = |what: &str, got: Rational, want: Rational| {
        if got != want {
            out.push(format!(
                "{what}: got {}, expected {}",
                format_rational(&got),
                format_rational(&want)
            ));
        }
    };
    let pr = &pr_boxes()[0];
    expect(
        "μ_L(PR)",
        fraction(pr, Target::Local).value,
        Rational::zero(),
    );
    expect(
        "μ_NS(PR)",
        fraction(pr, Target::NonSignaling).value,
        Rational::one(),
    );
    for (i, l) in local_strategies().iter().enumerate() {
        expect(
            &format!("μ_L(L{})", i + 1),
            fraction(l, Target::Local).value,
            Rational::one(),
        );
    }
    expect(
        "μ_L(noisy PR)",
        fraction(&noisy_pr(), Target::Local).value,
        Rational::new(1.into(), 2.into()),
    );
    expect(
        "μ_L(copy)",
        fraction(&copy_behavior(), Target::Local).value,
        Rational::zero(),
    );
    expect(
        "μ_NS(copy)",
        fraction(&copy_behavior(), Target::NonSignaling).value,
        Rational::zero(),
    );
    let t = tsirelson_f64();
    let got = fraction_f64(crate::measures::solution_set(SetKind::Q), &t);
    let want = 2.0 - std::f64::consts::SQRT_2;
    if (got - want).abs() > 1e-12 {
        out.push(format!("μ_L(Tsirelson) = {got}, expected {want}"));
    }
    out
}

// ---------------------------------------------------------------------------
// Identities

/// Every exact identity linking measure vectors to `Δ_i`, `S_i` and each
/// other; returns descriptions of the violated ones.
pub fn identity_failures(b: &Behavior, q: &VectorSet, s: &VectorSet) -> Vec<String> {
    let mut out = Vec::new();
    let one = Rational::one();
    let two = Rational::from_integer(2.into());
    let four = Rational::from_integer(4.into());
    let delta = b.max_signaling();
    if max_signaling_via_f(b) != delta {
        out.push("min f-measure ≠ 1 − Δ".to_string());
    }
    let sig = b.signaling_signatures();
    for i in 0..4 {
        let plus = evaluate(&F_VECTORS[2 * i], b);
        let minus = evaluate(&F_VECTORS[2 * i + 1], b);
        if plus != &one + &sig[i] || minus != &one - &sig[i] {
            out.push(format!("f{}/f{} ≠ 1 ± Δ{}", 2 * i + 1, 2 * i + 2, i + 1));
        }
        if plus + minus != two {
            out.push(format!("f{} + f{} ≠ 2", 2 * i + 1, 2 * i + 2));
        }
    }
    let chsh = b.chsh_expressions();
    for k in 0..4 {
        let s_half = &chsh[3 - k] / &two;
        let lo = evaluate(&E_VECTORS[2 * k], b);
        let hi = evaluate(&E_VECTORS[2 * k + 1], b);
        if lo != &two - &s_half || hi != &two + &s_half {
            out.push(format!("e{}/e{} ≠ 2 ∓ S{}/2", 2 * k + 1, 2 * k + 2, 4 - k));
        }
        if lo + hi != four {
            out.push(format!("e{} + e{} ≠ 4", 2 * k + 1, 2 * k + 2));
        }
    }
    if delta.is_zero() {
        match local_fraction_ns_formula(b) {
            Ok(v) if v == fraction(b, Target::Local).value => {}
            _ => out.push("μ_L ≠ min{1, (4 − S)/2} on a non-signaling behavior".to_string()),
        }
    }
    for z in s.of_class(VectorClass::Z) {
        let Some(i) = z.coeffs.iter().position(|&c| c == 2) else {
            out.push(format!("z#{} has no coefficient 2", z.id));
            continue;
        };
        let mut paired = z.coeffs;
        paired[i] = 1;
        match q.find(&paired) {
            Some(sv) if sv.class == VectorClass::S => {
                if evaluate(&z.coeffs, b) != evaluate(&paired, b) + &b.entries()[i] {
                    out.push(format!("z#{} ≠ s#{} + P[{i}]", z.id, sv.id));
                }
            }
            _ => out.push(format!("z#{} has no paired s-vector", z.id)),
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Route agreement

/// Closed form, primal LP optimum and enumerated dual minimum for one
/// behavior and target; `Err` describes the disagreement.
pub fn triple_agreement(b: &Behavior, target: Target) -> Result<Rational, String> {
    let closed = fraction(b, target).value;
    let sol = lp::solve_primal(b, target);
    let dual = lp::dual_value(b, target);
    if !sol.is_feasible_for(b) || !sol.certifies_optimality(b) {
        return Err(format!(
            "{}: LP solution fails its own certificate",
            target.name()
        ));
    }
    if closed != sol.p_star || closed != dual {
        return Err(format!(
            "{}: closed {} lp {} dual {}",
            target.name(),
            format_rational(&closed),
            format_rational(&sol.p_star),
            format_rational(&dual)
        ));
    }
    Ok(closed)
}

/// Decomposition recombines exactly and the inner part lies in the target.
pub fn decomposition_failure(b: &Behavior, target: Target) -> Option<String> {
    let d = lp::decompose(b, target);
    if d.recombine() != *b.entries() {
        return Some(format!(
            "{}: recombination differs from input",
            target.name()
        ));
    }
    if let Some(inner) = &d.inner {
        let ok = match target {
            Target::Local => inner.classify() == Classification::Local,
            Target::NonSignaling => inner.is_nonsignaling(),
        };
        if !ok {
            return Some(format!(
                "{}: inner part is outside the polytope",
                target.name()
            ));
        }
    }
    if d.p != fraction(b, target).value {
        return Some(format!(
            "{}: decomposition weight is not the fraction",
            target.name()
        ));
    }
    None
}

// ---------------------------------------------------------------------------
// Checks

fn load(kind: SetKind, text: &Option<String>) -> Result<VectorSet, String> {
    match text {
        None => Ok(crate::measures::solution_set(kind).clone()),
        Some(t) => VectorSet::parse(kind, t).map_err(|e| format!("{kind} file: {e}")),
    }
}

fn data_check(
    name: &'static str,
    kind: SetKind,
    text: &Option<String>,
) -> (CheckResult, Option<VectorSet>) {
    let set = match load(kind, text) {
        Ok(s) => s,
        Err(e) => {
            return (
                CheckResult {
                    name,
                    passed: false,
                    detail: e,
                },
                None,
            )
        }
    };
    let result = match build_against(kind, &set) {
        Ok(_) => CheckResult {
            name,
            passed: true,
            detail: format!("{} vectors match orbit generation", set.len()),
        },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: e.to_string(),
        },
    };
    (result, Some(set))
}

fn class_count_check(sets: &[&VectorSet]) -> CheckResult {
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for set in sets {
        let counts: Vec<usize> = set.class_counts().values().copied().collect();
        let expected: Vec<usize> = match set.kind {
            SetKind::Q => vec![8, 16, 32, 64, 8],
            SetKind::S => vec![8, 16, 32, 64],
        };
        if counts != expected || set.len() != set.kind.expected_len() {
            failures.push(format!("{}: class counts {counts:?}", set.kind));
        }
        if let Some(v) = set
            .vectors
            .iter()
            .find(|v| !has_class_shape(v.class, &v.coeffs))
        {
            failures.push(format!("{}: {} has the wrong shape", set.kind, v.label()));
        }
        summary.push(format!("{} = {}", set.kind, set.len()));
    }
    CheckResult::from_failures("vector counts", summary.join(", "), failures)
}

fn enumeration_check(name: &'static str, target: Target, expected: usize) -> CheckResult {
    let v = dual_vertices(target);
    let h = dual_polyhedron(target);
    let mut failures = Vec::new();
    if v.vertices.len() != expected {
        failures.push(format!(
            "{} vertices, expected {expected}",
            v.vertices.len()
        ));
    }
    if v.rays.len() != DIM {
        failures.push(format!("{} extreme rays, expected 16", v.rays.len()));
    }
    for vertex in &v.vertices {
        if !h.satisfies(vertex) || h.tight_rank(vertex) < DIM {
            failures.push("a vertex fails feasibility or the rank condition".to_string());
            break;
        }
    }
    if v.rays.iter().any(|r| !h.satisfies_homogeneous(r)) {
        failures.push("a ray leaves the recession cone".to_string());
    }
    CheckResult::from_failures(
        name,
        format!("{} vertices, {} rays", v.vertices.len(), v.rays.len()),
        failures,
    )
}

fn derivation_check(name: &'static str, kind: SetKind, data: Option<&VectorSet>) -> CheckResult {
    let Some(data) = data else {
        return CheckResult {
            name,
            passed: false,
            detail: "data file unavailable".into(),
        };
    };
    let mut failures = Vec::new();
    if let Err(e) = enumeration::check_derivation(kind, data) {
        failures.push(e.to_string());
    }
    if let Ok(derived) = enumeration::derive_set(kind) {
        let closed = derived.iter().all(|c| {
            symmetry_group()
                .iter()
                .all(|op| derived.contains(&op.apply(c)))
        });
        if !closed {
            failures.push("derived set is not closed under the symmetry group".into());
        }
    }
    CheckResult::from_failures(
        name,
        "enumeration reproduces the vector set".into(),
        failures,
    )
}

fn witness_check() -> CheckResult {
    let mut failures = Vec::new();
    let mut total = 0;
    for kind in [SetKind::Q, SetKind::S] {
        match sampler::witness_suite(kind) {
            Ok(outcomes) => {
                total += outcomes.len();
                failures.extend(
                    outcomes
                        .iter()
                        .filter(|o| !o.passes())
                        .map(|o| o.describe()),
                );
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    CheckResult::from_failures(
        "witnesses",
        format!("{total} witnesses, each with a unique zero"),
        failures,
    )
}

fn random_checks(opts: &VerifyOptions, q: &VectorSet, s: &VectorSet) -> Vec<CheckResult> {
    let behaviors = sampler::random_rational_behaviors(opts.seed, opts.random_count);
    let identities: Vec<String> = behaviors
        .par_iter()
        .flat_map_iter(|b| identity_failures(b, q, s))
        .collect();
    let pool: Vec<&Behavior> = behaviors.iter().chain(ns_vertices()).collect();
    let agreement: Vec<String> = pool
        .par_iter()
        .flat_map_iter(|b| {
            [Target::Local, Target::NonSignaling]
                .into_iter()
                .filter_map(|t| triple_agreement(b, t).err())
        })
        .collect();
    let decomposition: Vec<String> = behaviors
        .par_iter()
        .flat_map_iter(|b| {
            [Target::Local, Target::NonSignaling]
                .into_iter()
                .filter_map(|t| decomposition_failure(b, t))
        })
        .collect();
    vec![
        CheckResult::from_failures(
            "identities",
            format!("{} random behaviors", behaviors.len()),
            identities,
        ),
        CheckResult::from_failures(
            "closed form = LP = dual",
            format!("{} behaviors, both targets", pool.len()),
            agreement,
        ),
        CheckResult::from_failures(
            "decompositions",
            format!("{} behaviors recombine exactly", behaviors.len()),
            decomposition,
        ),
    ]
}

fn sampling_check(opts: &VerifyOptions) -> CheckResult {
    let cfg = match SampleConfig::new(opts.sample_n, opts.seed) {
        Ok(c) => c,
        Err(e) => {
            return CheckResult {
                name: "sampling",
                passed: false,
                detail: e.to_string(),
            }
        }
    };
    let study = match sampler::study(&cfg) {
        Ok(s) => s,
        Err(e) => {
            return CheckResult {
                name: "sampling",
                passed: false,
                detail: e.to_string(),
            }
        }
    };
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for report in [&study.local, &study.nonsignaling] {
        for &(class, reference) in reference_shares(report.kind) {
            let diff = (report.percentage(class) - reference).abs();
            worst = worst.max(diff);
            if diff > opts.share_tolerance {
                failures.push(format!(
                    "{} {class}: {:.2}% vs {reference}%",
                    report.kind,
                    report.percentage(class)
                ));
            }
        }
    }
    let sources: BTreeSet<VectorClass> = study
        .migration
        .transitions
        .keys()
        .map(|(f, _)| *f)
        .collect();
    if sources
        .iter()
        .any(|c| !matches!(c, VectorClass::S | VectorClass::E))
    {
        failures.push(format!("migration from {sources:?}"));
    }
    CheckResult::from_failures(
        "sampling",
        format!(
            "n = {}, largest share deviation {worst:.3} pp",
            opts.sample_n
        ),
        failures,
    )
}

/// Runs every check in table order.
pub fn run(opts: &VerifyOptions) -> Vec<CheckResult> {
    let mut results = Vec::new();
    let (q_check, q_set) = data_check("data Q", SetKind::Q, &opts.q_text);
    let (s_check, s_set) = data_check("data S", SetKind::S, &opts.s_text);
    results.push(q_check);
    results.push(s_check);
    let generated_q = crate::measures::generate_from_orbits(SetKind::Q);
    let generated_s = crate::measures::generate_from_orbits(SetKind::S);
    results.push(class_count_check(&[&generated_q, &generated_s]));
    results.push(enumeration_check("enumeration local", Target::Local, 132));
    results.push(enumeration_check(
        "enumeration NS",
        Target::NonSignaling,
        124,
    ));
    results.push(derivation_check("derivation Q", SetKind::Q, q_set.as_ref()));
    results.push(derivation_check("derivation S", SetKind::S, s_set.as_ref()));
    results.push(CheckResult::from_failures(
        "landmarks",
        "PR, locals, noisy PR, copy, Tsirelson".into(),
        landmark_failures(),
    ));
    results.push(witness_check());
    results.extend(random_checks(opts, &generated_q, &generated_s));
    if opts.quick {
        results.push(CheckResult {
            name: "sampling",
            passed: true,
            detail: "skipped (--quick)".into(),
        });
    } else {
        results.push(sampling_check(opts));
    }
    results
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}

pub fn render_table(results: &[CheckResult]) -> String {
    let width = results
        .iter()
        .map(|r| r.name.chars().count())
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    for r in results {
        let pad = width - r.name.chars().count();
        out.push_str(&format!(
            "{}{}  {}  {}\n",
            r.name,
            " ".repeat(pad),
            if r.passed { "PASS" } else { "FAIL" },
            r.detail
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn landmarks_hold() {
        assert!(landmark_failures().is_empty(), "{:?}", landmark_failures());
    }

    #[test]
    fn identities_on_random_behaviors() {
        let q = crate::measures::solution_set(SetKind::Q);
        let s = crate::measures::solution_set(SetKind::S);
        for b in sampler::random_rational_behaviors(5, 60) {
            assert!(
                identity_failures(&b, q, s).is_empty(),
                "{:?}",
                identity_failures(&b, q, s)
            );
        }
    }

    #[test]
    fn quick_run_passes() {
        let opts = VerifyOptions {
            quick: true,
            random_count: 40,
            ..VerifyOptions::default()
        };
        let results = run(&opts);
        assert!(all_passed(&results), "{}", render_table(&results));
    }

    #[test]
    fn corrupted_file_fails_with_data_mismatch() {
        let text = crate::measures::shipped_text(SetKind::Q);
        let corrupted = format!("0{}", &text[1..]);
        let opts = VerifyOptions {
            quick: true,
            random_count: 5,
            q_text: Some(corrupted),
            ..VerifyOptions::default()
        };
        let results = run(&opts);
        let data = results.iter().find(|r| r.name == "data Q").unwrap();
        assert!(!data.passed);
        assert!(data.detail.starts_with("DataMismatch"));
    }
}
