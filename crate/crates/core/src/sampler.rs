//! Random behaviors, prevalence and migration statistics, and the exact
//! non-redundancy witnesses.
//!
//! Sampling runs in binary64. Each context block is an independent uniform
//! Dirichlet(1,1,1,1) draw. The stream is split into chunks of
//! [`CHUNK`] samples; chunk `k` uses `ChaCha8Rng::seed_from_u64(seed)` on
//! stream `k`, so the result does not depend on the number of worker threads.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::behavior::{Behavior, CONTEXTS, CONTEXT_LABELS, DIM};
use crate::measures::{
    fraction_over, solution_set, Coeffs, MeasureVector, SetKind, VectorClass, VectorSet,
};
use crate::rational::{format_rational, Rational};

/// Recorded in every report.
pub const GENERATOR: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64(seed), stream = chunk index, 1024 samples per chunk";
pub const CHUNK: usize = 1024;
pub const DEFAULT_SEED: u64 = 20_240_501;
pub const DEFAULT_GAP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("uniqueness gap must be finite and non-negative")]
    BadGap,
    #[error("DegenerateRow: complemented block xy={0} sums to 0")]
    DegenerateRow(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleConfig {
    pub n: usize,
    pub seed: u64,
    pub uniqueness_gap: f64,
}

impl SampleConfig {
    pub fn new(n: usize, seed: u64) -> Result<Self, SamplerError> {
        SampleConfig {
            n,
            seed,
            uniqueness_gap: DEFAULT_GAP,
        }
        .checked()
    }

    pub fn checked(self) -> Result<Self, SamplerError> {
        if self.n == 0 {
            return Err(SamplerError::EmptySample);
        }
        if !self.uniqueness_gap.is_finite() || self.uniqueness_gap < 0.0 {
            return Err(SamplerError::BadGap);
        }
        Ok(self)
    }
}

/// One behavior with every block drawn from Dirichlet(1,1,1,1).
pub fn random_behavior<R: Rng + ?Sized>(rng: &mut R) -> [f64; DIM] {
    let mut p = [0.0; DIM];
    for block in p.chunks_mut(4) {
        for slot in block.iter_mut() {
            *slot = rng.sample(Exp1);
        }
        let sum: f64 = block.iter().sum();
        for slot in block.iter_mut() {
            *slot /= sum;
        }
    }
    p
}

/// Generator for chunk `k` of the stream.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// The first `n` behaviors of the stream, in order.
pub fn sample_behaviors(seed: u64, n: usize) -> Vec<[f64; DIM]> {
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = chunk_rng(seed, k as u64);
            let len = CHUNK.min(n - k * CHUNK);
            (0..len)
                .map(move |_| random_behavior(&mut rng))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Flattened evaluation table for one set.
struct ClassTable {
    vectors: Vec<(usize, [usize; 8], usize, Option<usize>)>,
}

fn class_slot(class: VectorClass) -> usize {
    VectorClass::ALL
        .iter()
        .position(|&c| c == class)
        .expect("known class")
}

impl ClassTable {
    fn new(set: &VectorSet) -> Self {
        let vectors = set
            .vectors
            .iter()
            .map(|v| {
                let mut ones = [0usize; 8];
                let mut len = 0;
                let mut two = None;
                for (i, &c) in v.coeffs.iter().enumerate() {
                    match c {
                        0 => {}
                        2 => two = Some(i),
                        _ => {
                            ones[len] = i;
                            len += 1;
                        }
                    }
                }
                (class_slot(v.class), ones, len, two)
            })
            .collect();
        ClassTable { vectors }
    }

    fn minima(&self, p: &[f64; DIM]) -> [f64; 6] {
        let mut out = [f64::INFINITY; 6];
        for (slot, ones, len, two) in &self.vectors {
            let mut value: f64 = ones[..*len].iter().map(|&i| p[i]).sum();
            if let Some(i) = two {
                value += 2.0 * p[*i];
            }
            if value < out[*slot] {
                out[*slot] = value;
            }
        }
        out
    }
}

/// The class attaining the minimum, or `None` when another class comes
/// within `gap` of it.
pub fn attribute(minima: &[f64; 6], gap: f64) -> Option<VectorClass> {
    let mut order: Vec<usize> = (0..6).filter(|&i| minima[i].is_finite()).collect();
    order.sort_by(|&a, &b| minima[a].total_cmp(&minima[b]));
    match order.as_slice() {
        [] => None,
        [only] => Some(VectorClass::ALL[*only]),
        [first, second, ..] => {
            (minima[*second] - minima[*first] > gap).then_some(VectorClass::ALL[*first])
        }
    }
}

/// Per-class minima of one float behavior over a set, keyed by class.
pub fn class_minima(set: &VectorSet, p: &[f64; DIM]) -> BTreeMap<VectorClass, f64> {
    let minima = ClassTable::new(set).minima(p);
    VectorClass::ALL
        .iter()
        .zip(minima)
        .filter(|(_, m)| m.is_finite())
        .map(|(c, m)| (*c, m))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrevalenceReport {
    pub kind: SetKind,
    pub n: usize,
    pub seed: u64,
    pub generator: &'static str,
    /// Every class of the set, including those with zero count.
    pub counts: BTreeMap<VectorClass, usize>,
    pub ties: usize,
}

impl PrevalenceReport {
    fn empty(kind: SetKind, cfg: &SampleConfig) -> Self {
        let counts = VectorClass::members_of(kind)
            .iter()
            .map(|&c| (c, 0))
            .collect();
        PrevalenceReport {
            kind,
            n: cfg.n,
            seed: cfg.seed,
            generator: GENERATOR,
            counts,
            ties: 0,
        }
    }

    fn record(&mut self, class: Option<VectorClass>) {
        match class {
            Some(c) => *self.counts.entry(c).or_insert(0) += 1,
            None => self.ties += 1,
        }
    }

    /// Share of all `n` samples, in percent.
    pub fn percentage(&self, class: VectorClass) -> f64 {
        100.0 * self.counts.get(&class).copied().unwrap_or(0) as f64 / self.n as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,count,percentage\n");
        for (class, count) in &self.counts {
            out.push_str(&format!("{class},{count},{:.4}\n", self.percentage(*class)));
        }
        out.push_str(&format!(
            "tie,{},{:.4}\n",
            self.ties,
            100.0 * self.ties as f64 / self.n as f64
        ));
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let classes: Vec<_> = self
            .counts
            .iter()
            .map(|(c, n)| json!({"class": c.tag(), "count": n, "percentage": self.percentage(*c)}))
            .collect();
        json!({
            "set": self.kind.name(),
            "n": self.n,
            "seed": self.seed,
            "generator": self.generator,
            "classes": classes,
            "ties": self.ties,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MigrationReport {
    pub n: usize,
    pub seed: u64,
    pub generator: &'static str,
    pub transitions: BTreeMap<(VectorClass, VectorClass), usize>,
    /// Samples uniquely attributed under both sets to the same class.
    pub unchanged: usize,
    /// Samples tied under at least one of the two sets.
    pub ties: usize,
}

impl MigrationReport {
    pub fn total_migrated(&self) -> usize {
        self.transitions.values().sum()
    }

    pub fn sources(&self) -> Vec<VectorClass> {
        let mut out: Vec<VectorClass> = self.transitions.keys().map(|(from, _)| *from).collect();
        out.dedup();
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("from,to,count\n");
        for ((from, to), count) in &self.transitions {
            out.push_str(&format!("{from},{to},{count}\n"));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<_> = self
            .transitions
            .iter()
            .map(|((f, t), n)| json!({"from": f.tag(), "to": t.tag(), "count": n}))
            .collect();
        json!({
            "n": self.n,
            "seed": self.seed,
            "generator": self.generator,
            "transitions": rows,
            "unchanged": self.unchanged,
            "ties": self.ties,
        })
    }
}

/// Prevalence under ℚ and 𝕊 and the migration between them, from one pass
/// over the same samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Study {
    pub local: PrevalenceReport,
    pub nonsignaling: PrevalenceReport,
    pub migration: MigrationReport,
}

#[derive(Default)]
struct Tally {
    q: [usize; 6],
    s: [usize; 6],
    q_ties: usize,
    s_ties: usize,
    moves: BTreeMap<(VectorClass, VectorClass), usize>,
    unchanged: usize,
    either_tied: usize,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for i in 0..6 {
            self.q[i] += other.q[i];
            self.s[i] += other.s[i];
        }
        self.q_ties += other.q_ties;
        self.s_ties += other.s_ties;
        for (k, v) in other.moves {
            *self.moves.entry(k).or_insert(0) += v;
        }
        self.unchanged += other.unchanged;
        self.either_tied += other.either_tied;
        self
    }
}

pub fn study(cfg: &SampleConfig) -> Result<Study, SamplerError> {
    let cfg = cfg.checked()?;
    let q_table = ClassTable::new(solution_set(SetKind::Q));
    let s_table = ClassTable::new(solution_set(SetKind::S));
    let chunks = cfg.n.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = chunk_rng(cfg.seed, k as u64);
            let mut t = Tally::default();
            for _ in 0..CHUNK.min(cfg.n - k * CHUNK) {
                let p = random_behavior(&mut rng);
                let q = attribute(&q_table.minima(&p), cfg.uniqueness_gap);
                let s = attribute(&s_table.minima(&p), cfg.uniqueness_gap);
                match q {
                    Some(c) => t.q[class_slot(c)] += 1,
                    None => t.q_ties += 1,
                }
                match s {
                    Some(c) => t.s[class_slot(c)] += 1,
                    None => t.s_ties += 1,
                }
                match (q, s) {
                    (Some(a), Some(b)) if a == b => t.unchanged += 1,
                    (Some(a), Some(b)) => *t.moves.entry((a, b)).or_insert(0) += 1,
                    _ => t.either_tied += 1,
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge);

    let mut local = PrevalenceReport::empty(SetKind::Q, &cfg);
    let mut nonsignaling = PrevalenceReport::empty(SetKind::S, &cfg);
    for (i, class) in VectorClass::ALL.iter().enumerate() {
        if tally.q[i] > 0 || local.counts.contains_key(class) {
            local.counts.insert(*class, tally.q[i]);
        }
        if tally.s[i] > 0 || nonsignaling.counts.contains_key(class) {
            nonsignaling.counts.insert(*class, tally.s[i]);
        }
    }
    local.ties = tally.q_ties;
    nonsignaling.ties = tally.s_ties;
    let migration = MigrationReport {
        n: cfg.n,
        seed: cfg.seed,
        generator: GENERATOR,
        transitions: tally.moves,
        unchanged: tally.unchanged,
        ties: tally.either_tied,
    };
    Ok(Study {
        local,
        nonsignaling,
        migration,
    })
}

pub fn prevalence(cfg: &SampleConfig, kind: SetKind) -> Result<PrevalenceReport, SamplerError> {
    let cfg = cfg.checked()?;
    let table = ClassTable::new(solution_set(kind));
    let mut report = PrevalenceReport::empty(kind, &cfg);
    let per_chunk: Vec<Vec<Option<VectorClass>>> = (0..cfg.n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|k| {
            let mut rng = chunk_rng(cfg.seed, k as u64);
            (0..CHUNK.min(cfg.n - k * CHUNK))
                .map(|_| {
                    attribute(
                        &table.minima(&random_behavior(&mut rng)),
                        cfg.uniqueness_gap,
                    )
                })
                .collect()
        })
        .collect();
    for class in per_chunk.into_iter().flatten() {
        report.record(class);
    }
    Ok(report)
}

pub fn migration(cfg: &SampleConfig) -> Result<MigrationReport, SamplerError> {
    Ok(study(cfg)?.migration)
}

/// An exact random behavior for cross-checks. Rotates through three
/// families so that signaling, non-signaling nonlocal and local behaviors
/// all appear: independent integer-weighted blocks, random convex mixtures
/// of the 24 NS vertices, and an even blend of the two.
pub fn random_rational_behavior<R: Rng + ?Sized>(rng: &mut R) -> Behavior {
    let blocks = |rng: &mut R| -> Vec<Rational> {
        let mut flat = Vec::with_capacity(DIM);
        for _ in 0..CONTEXTS {
            let mut w: Vec<u32> = (0..4).map(|_| rng.random_range(0..=9)).collect();
            if w.iter().all(|&x| x == 0) {
                w[rng.random_range(0..4)] = 1;
            }
            let sum: u32 = w.iter().sum();
            flat.extend(w.iter().map(|&x| Rational::new(x.into(), sum.into())));
        }
        flat
    };
    let vertex_mix = |rng: &mut R| -> Vec<Rational> {
        let vertices = crate::polytopes::ns_vertices();
        let k = rng.random_range(1..=4);
        let picks: Vec<usize> = (0..k)
            .map(|_| rng.random_range(0..vertices.len()))
            .collect();
        let w: Vec<u32> = (0..k).map(|_| rng.random_range(1..=7)).collect();
        let sum: u32 = w.iter().sum();
        let mut weights = vec![Rational::zero(); vertices.len()];
        for (&i, &x) in picks.iter().zip(&w) {
            weights[i] += Rational::new(x.into(), sum.into());
        }
        crate::polytopes::combine(&weights, vertices).to_vec()
    };
    let flat = match rng.random_range(0..3) {
        0 => blocks(rng),
        1 => vertex_mix(rng),
        _ => {
            let half = Rational::new(1.into(), 2.into());
            let a = blocks(rng);
            let b = vertex_mix(rng);
            a.iter()
                .zip(&b)
                .map(|(x, y)| &half * x + &half * y)
                .collect()
        }
    };
    Behavior::from_flat(flat).expect("random mixture is a behavior")
}

/// `n` exact random behaviors from a fixed seed.
pub fn random_rational_behaviors(seed: u64, n: usize) -> Vec<Behavior> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_rational_behavior(&mut rng)).collect()
}

// ---------------------------------------------------------------------------
// Witnesses

/// Complements `coeffs` within each block (1→0, 0→1, 2→0) and normalizes.
pub fn witness_of(coeffs: &Coeffs) -> Result<Behavior, SamplerError> {
    let mut flat = Vec::with_capacity(DIM);
    for ctx in 0..CONTEXTS {
        let block: Vec<u8> = coeffs[4 * ctx..4 * ctx + 4]
            .iter()
            .map(|&c| u8::from(c == 0))
            .collect();
        let sum: u32 = block.iter().map(|&c| u32::from(c)).sum();
        if sum == 0 {
            return Err(SamplerError::DegenerateRow(CONTEXT_LABELS[ctx]));
        }
        flat.extend(block.iter().map(|&c| Rational::new(c.into(), sum.into())));
    }
    Ok(Behavior::from_flat(flat).expect("normalized complement is a behavior"))
}

pub fn witness(v: &MeasureVector) -> Result<Behavior, SamplerError> {
    witness_of(&v.coeffs)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessOutcome {
    pub kind: SetKind,
    pub id: usize,
    pub class: VectorClass,
    pub value: Rational,
    pub minimizers: Vec<usize>,
}

impl WitnessOutcome {
    /// Fraction 0, attained only by the generating vector.
    pub fn passes(&self) -> bool {
        self.value.is_zero() && self.minimizers == [self.id]
    }

    pub fn describe(&self) -> String {
        format!(
            "{} {}#{}: value {} minimizers {:?}",
            self.kind,
            self.class,
            self.id,
            format_rational(&self.value),
            self.minimizers
        )
    }
}

pub fn check_witness(set: &VectorSet, v: &MeasureVector) -> Result<WitnessOutcome, SamplerError> {
    let w = witness(v)?;
    let result = fraction_over(set, &w);
    Ok(WitnessOutcome {
        kind: set.kind,
        id: v.id,
        class: v.class,
        value: result.value,
        minimizers: result.minimizers,
    })
}

/// Witness checks for every vector of the set, in id order.
pub fn witness_suite(kind: SetKind) -> Result<Vec<WitnessOutcome>, SamplerError> {
    let set = solution_set(kind);
    set.vectors
        .par_iter()
        .map(|v| check_witness(set, v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::F_VECTORS;
    use crate::rational::{int, ratio};

    #[test]
    fn blocks_are_normalized_and_reproducible() {
        let a = sample_behaviors(7, 3000);
        assert_eq!(a, sample_behaviors(7, 3000));
        assert_ne!(a, sample_behaviors(8, 3000));
        for p in &a {
            for block in p.chunks(4) {
                assert!((block.iter().sum::<f64>() - 1.0).abs() < 1e-15);
                assert!(block.iter().all(|&x| x >= 0.0));
            }
        }
        // prefix property across chunk boundaries
        assert_eq!(sample_behaviors(7, 1500)[..], a[..1500]);
    }

    #[test]
    fn dirichlet_means() {
        let samples = sample_behaviors(11, 100_000);
        for i in 0..DIM {
            let mean = samples.iter().map(|p| p[i]).sum::<f64>() / samples.len() as f64;
            assert!((mean - 0.25).abs() < 0.005, "entry {i}: {mean}");
        }
    }

    #[test]
    fn attribution_and_ties() {
        let mut m = [f64::INFINITY; 6];
        m[0] = 0.5;
        m[1] = 0.7;
        assert_eq!(attribute(&m, 1e-12), Some(VectorClass::F));
        m[1] = 0.5 + 1e-13;
        assert_eq!(attribute(&m, 1e-12), None);
    }

    #[test]
    fn single_sample_counts_once() {
        let cfg = SampleConfig::new(1, 3).unwrap();
        let r = prevalence(&cfg, SetKind::Q).unwrap();
        assert_eq!(r.counts.values().sum::<usize>() + r.ties, 1);
        assert_eq!(SampleConfig::new(0, 3), Err(SamplerError::EmptySample));
    }

    #[test]
    fn study_matches_separate_runs() {
        let cfg = SampleConfig::new(5000, 42).unwrap();
        let s = study(&cfg).unwrap();
        assert_eq!(s.local, prevalence(&cfg, SetKind::Q).unwrap());
        assert_eq!(s.nonsignaling, prevalence(&cfg, SetKind::S).unwrap());
        for r in [&s.local, &s.nonsignaling] {
            assert_eq!(r.counts.values().sum::<usize>() + r.ties, 5000);
        }
        let m = &s.migration;
        assert_eq!(m.total_migrated() + m.unchanged + m.ties, 5000);
    }

    #[test]
    fn witness_of_f1() {
        let w = witness_of(&F_VECTORS[0]).unwrap();
        let h = ratio(1, 2);
        let q = ratio(1, 4);
        let z = int(0);
        let expected = [
            &z, &z, &h, &h, &h, &h, &z, &z, &q, &q, &q, &q, &q, &q, &q, &q,
        ];
        for (a, b) in w.entries().iter().zip(expected) {
            assert_eq!(a, b);
        }
        assert_eq!(crate::measures::evaluate(&F_VECTORS[0], &w), int(0));
        let mut full = [0u8; DIM];
        full[..4].copy_from_slice(&[1, 1, 1, 1]);
        assert_eq!(witness_of(&full), Err(SamplerError::DegenerateRow("00")));
    }
}
