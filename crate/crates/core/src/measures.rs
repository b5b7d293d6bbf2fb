//! Closed-form fractions: `μ_L(P) = min_{q∈ℚ} q·P` and
//! `μ_NS(P) = min_{q∈𝕊} q·P`, where ℚ (128 vectors) and 𝕊 (120 vectors)
//! are unions of orbits of 11 representative vectors under a 32-element
//! relabeling group.
//!
//! The shipped data files under `data/` are authoritative; orbit generation
//! and vertex enumeration both have to reproduce them as sets.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::behavior::{flat_index, labels_of, Behavior, DIM};
use crate::rational::{clamp_unit, format_rational, Rational};
use crate::Target;

pub type Coeffs = [u8; DIM];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("DataMismatch: {kind} regenerated set differs from data ({missing} missing, {extra} extra, {relabeled} relabeled)")]
    DataMismatch {
        kind: SetKind,
        missing: usize,
        extra: usize,
        relabeled: usize,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("behavior is signaling (Δ = {0}); the CHSH formula needs Δ = 0")]
    NotNonsignaling(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VectorClass {
    F,
    G,
    T,
    S,
    Z,
    E,
}

impl VectorClass {
    pub const ALL: [VectorClass; 6] = [
        VectorClass::F,
        VectorClass::G,
        VectorClass::T,
        VectorClass::S,
        VectorClass::Z,
        VectorClass::E,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            VectorClass::F => "f",
            VectorClass::G => "g",
            VectorClass::T => "t",
            VectorClass::S => "s",
            VectorClass::Z => "z",
            VectorClass::E => "e",
        }
    }

    /// Classes present in the given solution set, in report order.
    pub fn members_of(kind: SetKind) -> &'static [VectorClass] {
        match kind {
            SetKind::Q => &[
                VectorClass::F,
                VectorClass::G,
                VectorClass::T,
                VectorClass::S,
                VectorClass::E,
            ],
            SetKind::S => &[
                VectorClass::F,
                VectorClass::G,
                VectorClass::T,
                VectorClass::Z,
            ],
        }
    }

    fn support_shape(self) -> (usize, usize) {
        // (number of 1s, number of 2s)
        match self {
            VectorClass::F => (4, 0),
            VectorClass::G => (5, 0),
            VectorClass::T | VectorClass::S => (6, 0),
            VectorClass::Z => (5, 1),
            VectorClass::E => (8, 0),
        }
    }
}

impl fmt::Display for VectorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for VectorClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VectorClass::ALL
            .into_iter()
            .find(|c| c.tag() == s)
            .ok_or_else(|| format!("unknown class tag `{s}`"))
    }
}

/// Orbit label; α, β, γ, δ have cardinalities 8, 16, 16 and 32.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orbit {
    Alpha,
    Beta,
    Gamma,
    Delta,
}

impl Orbit {
    pub fn tag(self) -> &'static str {
        match self {
            Orbit::Alpha => "alpha",
            Orbit::Beta => "beta",
            Orbit::Gamma => "gamma",
            Orbit::Delta => "delta",
        }
    }

    pub fn cardinality(self) -> usize {
        match self {
            Orbit::Alpha => 8,
            Orbit::Beta | Orbit::Gamma => 16,
            Orbit::Delta => 32,
        }
    }
}

impl FromStr for Orbit {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Orbit::Alpha, Orbit::Beta, Orbit::Gamma, Orbit::Delta]
            .into_iter()
            .find(|o| o.tag() == s)
            .ok_or_else(|| format!("unknown orbit tag `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SetKind {
    Q,
    S,
}

impl SetKind {
    pub fn name(self) -> &'static str {
        match self {
            SetKind::Q => "Q",
            SetKind::S => "S",
        }
    }

    pub fn expected_len(self) -> usize {
        match self {
            SetKind::Q => 128,
            SetKind::S => 120,
        }
    }

    pub fn target(self) -> Target {
        match self {
            SetKind::Q => Target::Local,
            SetKind::S => Target::NonSignaling,
        }
    }
}

impl fmt::Display for SetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MeasureVector {
    pub coeffs: Coeffs,
    pub class: VectorClass,
    pub orbit: Orbit,
    pub id: usize,
}

impl MeasureVector {
    pub fn evaluate(&self, behavior: &Behavior) -> Rational {
        evaluate(&self.coeffs, behavior)
    }

    pub fn evaluate_f64(&self, p: &[f64; DIM]) -> f64 {
        evaluate_f64(&self.coeffs, p)
    }

    pub fn label(&self) -> String {
        format!("{}#{}", self.class, self.id)
    }
}

/// Exact inner product `q·P`.
pub fn evaluate(coeffs: &Coeffs, behavior: &Behavior) -> Rational {
    let mut acc = Rational::zero();
    for (&c, value) in coeffs.iter().zip(behavior.entries()) {
        match c {
            0 => {}
            1 => acc += value,
            _ => acc += value * Rational::from_integer(c.into()),
        }
    }
    acc
}

pub fn evaluate_f64(coeffs: &Coeffs, p: &[f64; DIM]) -> f64 {
    coeffs.iter().zip(p).map(|(&c, &v)| c as f64 * v).sum()
}

// ---------------------------------------------------------------------------
// Symmetry group

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Generator {
    /// a ↔ 1−a
    FlipA,
    /// b ↔ 1−b
    FlipB,
    /// x ↔ 1−x
    FlipX,
    /// y ↔ 1−y
    FlipY,
    /// (x,a) ↔ (y,b)
    SwapParties,
}

impl Generator {
    pub const ALL: [Generator; 5] = [
        Generator::FlipA,
        Generator::FlipB,
        Generator::FlipX,
        Generator::FlipY,
        Generator::SwapParties,
    ];

    pub fn permutation(self) -> [usize; DIM] {
        std::array::from_fn(|i| {
            let (a, b, x, y) = labels_of(i);
            match self {
                Generator::FlipA => flat_index(1 - a, b, x, y),
                Generator::FlipB => flat_index(a, 1 - b, x, y),
                Generator::FlipX => flat_index(a, b, 1 - x, y),
                Generator::FlipY => flat_index(a, b, x, 1 - y),
                Generator::SwapParties => flat_index(b, a, y, x),
            }
        })
    }
}

/// An index permutation: the value at flat index `i` moves to `perm[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryOp {
    pub perm: [usize; DIM],
    /// Generators applied left to right to reach `perm` from the identity.
    pub word: Vec<Generator>,
}

impl SymmetryOp {
    pub fn identity() -> Self {
        SymmetryOp {
            perm: std::array::from_fn(|i| i),
            word: Vec::new(),
        }
    }

    pub fn apply(&self, coeffs: &Coeffs) -> Coeffs {
        let mut out = [0u8; DIM];
        for (i, &c) in coeffs.iter().enumerate() {
            out[self.perm[i]] = c;
        }
        out
    }

    pub fn apply_behavior(&self, behavior: &Behavior) -> Behavior {
        behavior.permuted(&self.perm)
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }
}

/// The closure of the five generators, in breadth-first order (identity first).
pub fn symmetry_group() -> &'static [SymmetryOp] {
    static GROUP: OnceLock<Vec<SymmetryOp>> = OnceLock::new();
    GROUP.get_or_init(|| {
        let generators: Vec<(Generator, [usize; DIM])> = Generator::ALL
            .iter()
            .map(|&g| (g, g.permutation()))
            .collect();
        let mut seen: HashMap<[usize; DIM], usize> = HashMap::new();
        let mut ops = vec![SymmetryOp::identity()];
        seen.insert(ops[0].perm, 0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(k) = queue.pop_front() {
            for (g, gp) in &generators {
                let current = &ops[k];
                let composed: [usize; DIM] = std::array::from_fn(|i| gp[current.perm[i]]);
                if let Entry::Vacant(slot) = seen.entry(composed) {
                    let mut word = current.word.clone();
                    word.push(*g);
                    slot.insert(ops.len());
                    queue.push_back(ops.len());
                    ops.push(SymmetryOp {
                        perm: composed,
                        word,
                    });
                }
            }
        }
        ops
    })
}

pub fn orbit(coeffs: &Coeffs) -> BTreeSet<Coeffs> {
    symmetry_group().iter().map(|op| op.apply(coeffs)).collect()
}

// ---------------------------------------------------------------------------
// Representatives and named vectors

/// The 11 orbit representatives.
pub const REPRESENTATIVES: [(VectorClass, Orbit, Coeffs); 11] = [
    (
        VectorClass::F,
        Orbit::Alpha,
        [1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0],
    ),
    (
        VectorClass::G,
        Orbit::Beta,
        [1, 0, 0, 0, 0, 0, 1, 1, 0, 1, 0, 1, 0, 0, 0, 0],
    ),
    (
        VectorClass::T,
        Orbit::Beta,
        [1, 1, 0, 0, 0, 0, 1, 0, 1, 1, 0, 0, 0, 0, 0, 1],
    ),
    (
        VectorClass::T,
        Orbit::Gamma,
        [1, 1, 0, 0, 0, 0, 1, 0, 0, 0, 1, 1, 0, 1, 0, 0],
    ),
    (
        VectorClass::S,
        Orbit::Beta,
        [1, 1, 1, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1],
    ),
    (
        VectorClass::S,
        Orbit::Gamma,
        [1, 1, 1, 0, 0, 0, 0, 1, 0, 0, 0, 1, 1, 0, 0, 0],
    ),
    (
        VectorClass::S,
        Orbit::Delta,
        [1, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 1, 0, 0],
    ),
    (
        VectorClass::Z,
        Orbit::Beta,
        [2, 1, 1, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1],
    ),
    (
        VectorClass::Z,
        Orbit::Gamma,
        [2, 1, 1, 0, 0, 0, 0, 1, 0, 0, 0, 1, 1, 0, 0, 0],
    ),
    (
        VectorClass::Z,
        Orbit::Delta,
        [2, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 1, 0, 0],
    ),
    (
        VectorClass::E,
        Orbit::Alpha,
        [1, 0, 0, 1, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0],
    ),
];

/// Builds a 0/1 vector from `(row, column)` pairs of the 4×4 grid view,
/// 1-based: row = context (00, 01, 10, 11), column = outcome (00, 01, 10, 11).
const fn cells<const N: usize>(cells: [(usize, usize); N]) -> Coeffs {
    let mut out = [0u8; DIM];
    let mut k = 0;
    while k < N {
        out[4 * (cells[k].0 - 1) + (cells[k].1 - 1)] = 1;
        k += 1;
    }
    out
}

/// `f₁..f₈`, numbered so that `f_{2i−1}·P = 1 + Δ_i` and `f_{2i}·P = 1 − Δ_i`.
pub const F_VECTORS: [Coeffs; 8] = [
    cells([(1, 1), (1, 2), (2, 3), (2, 4)]),
    cells([(1, 3), (1, 4), (2, 1), (2, 2)]),
    cells([(3, 1), (3, 2), (4, 3), (4, 4)]),
    cells([(3, 3), (3, 4), (4, 1), (4, 2)]),
    cells([(1, 1), (1, 3), (3, 2), (3, 4)]),
    cells([(1, 2), (1, 4), (3, 1), (3, 3)]),
    cells([(2, 1), (2, 3), (4, 2), (4, 4)]),
    cells([(2, 2), (2, 4), (4, 1), (4, 3)]),
];

/// `e₁..e₈`, numbered so that `e_{2k−1}·P = 2 − S_{5−k}/2` and
/// `e_{2k}·P = 2 + S_{5−k}/2`.
pub const E_VECTORS: [Coeffs; 8] = [
    cells([
        (1, 1),
        (1, 4),
        (2, 2),
        (2, 3),
        (3, 2),
        (3, 3),
        (4, 2),
        (4, 3),
    ]),
    cells([
        (1, 2),
        (1, 3),
        (2, 1),
        (2, 4),
        (3, 1),
        (3, 4),
        (4, 1),
        (4, 4),
    ]),
    cells([
        (1, 2),
        (1, 3),
        (2, 1),
        (2, 4),
        (3, 2),
        (3, 3),
        (4, 2),
        (4, 3),
    ]),
    cells([
        (1, 1),
        (1, 4),
        (2, 2),
        (2, 3),
        (3, 1),
        (3, 4),
        (4, 1),
        (4, 4),
    ]),
    cells([
        (1, 2),
        (1, 3),
        (2, 2),
        (2, 3),
        (3, 1),
        (3, 4),
        (4, 2),
        (4, 3),
    ]),
    cells([
        (1, 1),
        (1, 4),
        (2, 1),
        (2, 4),
        (3, 2),
        (3, 3),
        (4, 1),
        (4, 4),
    ]),
    cells([
        (1, 2),
        (1, 3),
        (2, 2),
        (2, 3),
        (3, 2),
        (3, 3),
        (4, 1),
        (4, 4),
    ]),
    cells([
        (1, 1),
        (1, 4),
        (2, 1),
        (2, 4),
        (3, 1),
        (3, 4),
        (4, 2),
        (4, 3),
    ]),
];

/// The four full-context indicator vectors; each evaluates to 1 on every
/// behavior.
pub fn normalization_vectors() -> [Coeffs; 4] {
    std::array::from_fn(|ctx| std::array::from_fn(|i| u8::from(i / 4 == ctx)))
}

/// Whether the coefficient multiset fits the class (counts of 1s and 2s).
pub fn has_class_shape(class: VectorClass, coeffs: &Coeffs) -> bool {
    let ones = coeffs.iter().filter(|&&c| c == 1).count();
    let twos = coeffs.iter().filter(|&&c| c == 2).count();
    let others = coeffs.iter().filter(|&&c| c > 2).count();
    others == 0 && (ones, twos) == class.support_shape()
}

// ---------------------------------------------------------------------------
// Solution sets

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorSet {
    pub kind: SetKind,
    pub vectors: Vec<MeasureVector>,
}

impl VectorSet {
    /// Sorts canonically (class, orbit, coefficients descending) and assigns
    /// ids `1..=n` in that order.
    pub fn from_unsorted(kind: SetKind, mut entries: Vec<(Coeffs, VectorClass, Orbit)>) -> Self {
        entries.sort_by(|a, b| (a.1, a.2).cmp(&(b.1, b.2)).then_with(|| b.0.cmp(&a.0)));
        let vectors = entries
            .into_iter()
            .enumerate()
            .map(|(k, (coeffs, class, orbit))| MeasureVector {
                coeffs,
                class,
                orbit,
                id: k + 1,
            })
            .collect();
        VectorSet { kind, vectors }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn by_id(&self, id: usize) -> Option<&MeasureVector> {
        self.vectors.get(id.checked_sub(1)?).filter(|v| v.id == id)
    }

    pub fn find(&self, coeffs: &Coeffs) -> Option<&MeasureVector> {
        self.vectors.iter().find(|v| &v.coeffs == coeffs)
    }

    pub fn coefficient_set(&self) -> BTreeSet<Coeffs> {
        self.vectors.iter().map(|v| v.coeffs).collect()
    }

    pub fn class_counts(&self) -> BTreeMap<VectorClass, usize> {
        let mut counts = BTreeMap::new();
        for v in &self.vectors {
            *counts.entry(v.class).or_insert(0) += 1;
        }
        counts
    }

    pub fn of_class(&self, class: VectorClass) -> impl Iterator<Item = &MeasureVector> {
        self.vectors.iter().filter(move |v| v.class == class)
    }

    /// Compares coefficient sets and per-vector labels.
    pub fn check_matches(&self, other: &VectorSet) -> Result<(), MeasureError> {
        let mine: HashMap<Coeffs, (VectorClass, Orbit)> = self
            .vectors
            .iter()
            .map(|v| (v.coeffs, (v.class, v.orbit)))
            .collect();
        let theirs: HashMap<Coeffs, (VectorClass, Orbit)> = other
            .vectors
            .iter()
            .map(|v| (v.coeffs, (v.class, v.orbit)))
            .collect();
        let missing = mine.keys().filter(|c| !theirs.contains_key(*c)).count();
        let extra = theirs.keys().filter(|c| !mine.contains_key(*c)).count();
        let relabeled = mine
            .iter()
            .filter(|(c, l)| theirs.get(*c).is_some_and(|t| t != *l))
            .count();
        if missing == 0 && extra == 0 && relabeled == 0 && self.len() == other.len() {
            Ok(())
        } else {
            Err(MeasureError::DataMismatch {
                kind: self.kind,
                missing,
                extra,
                relabeled,
            })
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.vectors {
            let digits: Vec<String> = v.coeffs.iter().map(|c| c.to_string()).collect();
            out.push_str(&format!(
                "{} {} {}\n",
                digits.join(" "),
                v.class.tag(),
                v.orbit.tag()
            ));
        }
        out
    }

    /// Parses the data-file format: one vector per line, 16 integers, then a
    /// class tag and an orbit tag. Blank lines and `#` comments are skipped.
    /// Content is not checked here; [`build_against`] compares it with the
    /// regenerated set.
    pub fn parse(kind: SetKind, text: &str) -> Result<Self, MeasureError> {
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| MeasureError::Parse { line, message };
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if tokens.len() != DIM + 2 {
                return Err(err(format!("expected 18 tokens, found {}", tokens.len())));
            }
            let mut coeffs = [0u8; DIM];
            for (slot, tok) in coeffs.iter_mut().zip(&tokens[..DIM]) {
                *slot = tok
                    .parse()
                    .map_err(|_| err(format!("bad coefficient `{tok}`")))?;
            }
            let class: VectorClass = tokens[DIM].parse().map_err(err)?;
            let orbit: Orbit = tokens[DIM + 1].parse().map_err(err)?;
            if !VectorClass::members_of(kind).contains(&class) {
                return Err(err(format!(
                    "class `{class}` does not belong to set {kind}"
                )));
            }
            if !seen.insert(coeffs) {
                return Err(err("duplicate vector".to_string()));
            }
            entries.push((coeffs, class, orbit));
        }
        Ok(VectorSet::from_unsorted(kind, entries))
    }
}

const SHIPPED_Q: &str = include_str!("../data/solution_vectors_q.txt");
const SHIPPED_S: &str = include_str!("../data/solution_vectors_s.txt");

pub fn shipped_text(kind: SetKind) -> &'static str {
    match kind {
        SetKind::Q => SHIPPED_Q,
        SetKind::S => SHIPPED_S,
    }
}

/// The shipped solution set. The files are compiled in and covered by the
/// test suite, so a parse failure here is a build defect.
pub fn solution_set(kind: SetKind) -> &'static VectorSet {
    static Q: OnceLock<VectorSet> = OnceLock::new();
    static S: OnceLock<VectorSet> = OnceLock::new();
    let cell = match kind {
        SetKind::Q => &Q,
        SetKind::S => &S,
    };
    cell.get_or_init(|| {
        VectorSet::parse(kind, shipped_text(kind)).expect("shipped vector file is well formed")
    })
}

/// Union of the orbits of the representatives belonging to `kind`.
pub fn generate_from_orbits(kind: SetKind) -> VectorSet {
    let classes = VectorClass::members_of(kind);
    let mut entries = Vec::new();
    for (class, orbit_tag, rep) in REPRESENTATIVES.iter() {
        if classes.contains(class) {
            entries.extend(orbit(rep).into_iter().map(|c| (c, *class, *orbit_tag)));
        }
    }
    VectorSet::from_unsorted(kind, entries)
}

fn build_checked(kind: SetKind, data: &VectorSet) -> Result<VectorSet, MeasureError> {
    let generated = generate_from_orbits(kind);
    generated.check_matches(data)?;
    Ok(generated)
}

/// ℚ from orbit generation, checked against the shipped data.
pub fn build_q() -> Result<VectorSet, MeasureError> {
    build_checked(SetKind::Q, solution_set(SetKind::Q))
}

/// 𝕊 from orbit generation, checked against the shipped data.
pub fn build_s() -> Result<VectorSet, MeasureError> {
    build_checked(SetKind::S, solution_set(SetKind::S))
}

/// Orbit generation checked against an arbitrary (e.g. user-supplied) file.
pub fn build_against(kind: SetKind, data: &VectorSet) -> Result<VectorSet, MeasureError> {
    build_checked(kind, data)
}

// ---------------------------------------------------------------------------
// Fractions

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractionResult {
    pub value: Rational,
    /// Ids of every vector attaining the exact minimum, ascending.
    pub minimizers: Vec<usize>,
    pub minimizing_classes: BTreeSet<VectorClass>,
    pub unique: bool,
}

/// Minimum of `q·P` over `set`, clamped at 1 (the normalization vectors).
pub fn fraction_over(set: &VectorSet, behavior: &Behavior) -> FractionResult {
    let values: Vec<Rational> = set.vectors.iter().map(|v| v.evaluate(behavior)).collect();
    let min = values.iter().min().cloned().unwrap_or_else(Rational::one);
    let clamped = min > Rational::one();
    let minimizers: Vec<usize> = if clamped {
        Vec::new()
    } else {
        set.vectors
            .iter()
            .zip(&values)
            .filter(|(_, val)| **val == min)
            .map(|(v, _)| v.id)
            .collect()
    };
    let minimizing_classes = minimizers
        .iter()
        .filter_map(|&id| set.by_id(id))
        .map(|v| v.class)
        .collect();
    FractionResult {
        value: clamp_unit(min),
        unique: minimizers.len() == 1,
        minimizers,
        minimizing_classes,
    }
}

pub fn local_fraction(behavior: &Behavior) -> FractionResult {
    fraction_over(solution_set(SetKind::Q), behavior)
}

pub fn ns_fraction(behavior: &Behavior) -> FractionResult {
    fraction_over(solution_set(SetKind::S), behavior)
}

pub fn fraction(behavior: &Behavior, target: Target) -> FractionResult {
    fraction_over(solution_set(target.solution_set()), behavior)
}

/// `μ_L = min{1, (4 − S)/2}`, valid for non-signaling behaviors only.
pub fn local_fraction_ns_formula(behavior: &Behavior) -> Result<Rational, MeasureError> {
    let delta = behavior.max_signaling();
    if !delta.is_zero() {
        return Err(MeasureError::NotNonsignaling(format_rational(&delta)));
    }
    let s = behavior.chsh().1;
    let four = Rational::from_integer(4.into());
    let two = Rational::from_integer(2.into());
    Ok(clamp_unit((four - s) / two))
}

/// `Δ = 1 − min_j f_j·P`.
pub fn max_signaling_via_f(behavior: &Behavior) -> Rational {
    let min_f = F_VECTORS
        .iter()
        .map(|f| evaluate(f, behavior))
        .min()
        .expect("eight f-vectors");
    Rational::one() - min_f
}

/// Float minimum over a set (clamped at 1).
pub fn fraction_f64(set: &VectorSet, p: &[f64; DIM]) -> f64 {
    set.vectors
        .iter()
        .map(|v| v.evaluate_f64(p))
        .fold(1.0, f64::min)
}

/// Smallest measure value per class, float path.
pub fn class_minima_f64(set: &VectorSet, p: &[f64; DIM]) -> BTreeMap<VectorClass, f64> {
    let mut minima = BTreeMap::new();
    for v in &set.vectors {
        let value = v.evaluate_f64(p);
        minima
            .entry(v.class)
            .and_modify(|m: &mut f64| *m = m.min(value))
            .or_insert(value);
    }
    minima
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytopes::{local_strategies, pr_boxes};
    use crate::rational::{int, ratio};

    fn copy_behavior() -> Behavior {
        let mut v = vec![int(0); DIM];
        v[flat_index(0, 0, 0, 0)] = int(1);
        v[flat_index(1, 0, 0, 1)] = int(1);
        v[flat_index(0, 0, 1, 0)] = int(1);
        v[flat_index(1, 0, 1, 1)] = int(1);
        Behavior::from_flat(v).unwrap()
    }

    fn mix2(p: Rational, b1: &Behavior, b2: &Behavior) -> Behavior {
        crate::polytopes::mix(&[p.clone(), Rational::one() - p], &[b1.clone(), b2.clone()]).unwrap()
    }

    #[test]
    fn group_has_32_distinct_elements() {
        let g = symmetry_group();
        assert_eq!(g.len(), 32);
        assert!(g[0].is_identity());
        let distinct: BTreeSet<_> = g.iter().map(|op| op.perm).collect();
        assert_eq!(distinct.len(), 32);
        // closed under composition
        for a in g {
            for b in g {
                let c: [usize; DIM] = std::array::from_fn(|i| b.perm[a.perm[i]]);
                assert!(distinct.contains(&c));
            }
        }
        // words reproduce the permutations
        for op in g {
            let mut perm: [usize; DIM] = std::array::from_fn(|i| i);
            for gen in &op.word {
                let gp = gen.permutation();
                perm = std::array::from_fn(|i| gp[perm[i]]);
            }
            assert_eq!(perm, op.perm);
        }
    }

    #[test]
    fn flipping_a_maps_f1_to_f2() {
        let flip = SymmetryOp {
            perm: Generator::FlipA.permutation(),
            word: vec![Generator::FlipA],
        };
        assert_eq!(flip.apply(&F_VECTORS[0]), F_VECTORS[1]);
        assert_eq!(flip.apply(&F_VECTORS[2]), F_VECTORS[3]);
    }

    #[test]
    fn orbit_cardinalities() {
        for (class, orbit_tag, rep) in REPRESENTATIVES.iter() {
            assert_eq!(
                orbit(rep).len(),
                orbit_tag.cardinality(),
                "{class} {orbit_tag:?}"
            );
        }
    }

    #[test]
    fn orbit_generation_counts() {
        let q = generate_from_orbits(SetKind::Q);
        assert_eq!(q.len(), 128);
        let counts: Vec<usize> = q.class_counts().values().copied().collect();
        assert_eq!(counts, vec![8, 16, 32, 64, 8]);
        let s = generate_from_orbits(SetKind::S);
        assert_eq!(s.len(), 120);
        let counts: Vec<usize> = s.class_counts().values().copied().collect();
        assert_eq!(counts, vec![8, 16, 32, 64]);
        for v in q.vectors.iter().chain(&s.vectors) {
            assert!(has_class_shape(v.class, &v.coeffs), "{v:?}");
        }
    }

    #[test]
    fn shipped_files_match_orbits() {
        let q = build_q().unwrap();
        assert_eq!(q, *solution_set(SetKind::Q));
        let s = build_s().unwrap();
        assert_eq!(s, *solution_set(SetKind::S));
        assert_eq!(q.find(&REPRESENTATIVES[0].2).unwrap().class, VectorClass::F);
    }

    #[test]
    fn named_vectors_are_in_both_sets() {
        let q = solution_set(SetKind::Q);
        let s = solution_set(SetKind::S);
        for f in &F_VECTORS {
            assert_eq!(q.find(f).unwrap().class, VectorClass::F);
            assert_eq!(s.find(f).unwrap().class, VectorClass::F);
        }
        for e in &E_VECTORS {
            assert_eq!(q.find(e).unwrap().class, VectorClass::E);
            assert!(s.find(e).is_none());
        }
    }

    #[test]
    fn every_z_is_an_s_plus_a_unit() {
        let q = solution_set(SetKind::Q);
        for z in solution_set(SetKind::S).of_class(VectorClass::Z) {
            let two = z.coeffs.iter().position(|&c| c == 2).unwrap();
            let mut s = z.coeffs;
            s[two] = 1;
            let paired = q.find(&s).expect("paired s-vector");
            assert_eq!(paired.class, VectorClass::S);
            assert_eq!(paired.orbit, z.orbit);
        }
    }

    #[test]
    fn data_file_round_trip_and_errors() {
        let q = solution_set(SetKind::Q);
        assert_eq!(VectorSet::parse(SetKind::Q, &q.to_text()).unwrap(), *q);
        assert!(matches!(
            VectorSet::parse(SetKind::Q, "1 1 0"),
            Err(MeasureError::Parse { line: 1, .. })
        ));
        let bad_class = "1 1 0 0 0 0 1 1 0 0 0 0 0 0 0 0 z alpha";
        assert!(VectorSet::parse(SetKind::Q, bad_class).is_err());
        let dup =
            "1 1 0 0 0 0 1 1 0 0 0 0 0 0 0 0 f alpha\n1 1 0 0 0 0 1 1 0 0 0 0 0 0 0 0 f alpha";
        assert!(VectorSet::parse(SetKind::Q, dup).is_err());
    }

    #[test]
    fn corrupted_data_is_a_mismatch() {
        let text = shipped_text(SetKind::Q);
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        // swap two coefficients of a g-vector so the shape survives
        let idx = lines.iter().position(|l| l.ends_with("g beta")).unwrap();
        let mut tokens: Vec<String> = lines[idx].split_whitespace().map(str::to_string).collect();
        let one = tokens[..DIM].iter().position(|t| t == "1").unwrap();
        let zero = tokens[..DIM].iter().position(|t| t == "0").unwrap();
        tokens.swap(one, zero);
        lines[idx] = tokens.join(" ");
        let corrupted = VectorSet::parse(SetKind::Q, &lines.join("\n")).unwrap();
        assert!(matches!(
            build_against(SetKind::Q, &corrupted),
            Err(MeasureError::DataMismatch { .. })
        ));
        // a single flipped coefficient breaks the shape and is also a mismatch
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        lines[0] = format!("0{}", &lines[0][1..]);
        let flipped = VectorSet::parse(SetKind::Q, &lines.join("\n")).unwrap();
        let err = build_against(SetKind::Q, &flipped).unwrap_err();
        assert!(err.to_string().starts_with("DataMismatch"));
    }

    #[test]
    fn evaluate_examples() {
        let u = Behavior::uniform();
        for f in &F_VECTORS {
            assert_eq!(evaluate(f, &u), int(1));
        }
        for e in &E_VECTORS {
            assert_eq!(evaluate(e, &u), int(2));
        }
        assert_eq!(evaluate(&F_VECTORS[0], &copy_behavior()), int(2));
    }

    #[test]
    fn local_fraction_examples() {
        assert_eq!(local_fraction(&local_strategies()[0]).value, int(1));
        let pr = local_fraction(&pr_boxes()[0]);
        assert_eq!(pr.value, int(0));
        assert!(pr.minimizing_classes.contains(&VectorClass::E));
        assert_eq!(local_fraction(&copy_behavior()).value, int(0));
    }

    #[test]
    fn ns_fraction_examples() {
        assert_eq!(ns_fraction(&pr_boxes()[0]).value, int(1));
        assert_eq!(ns_fraction(&copy_behavior()).value, int(0));
        let half = mix2(ratio(1, 2), &copy_behavior(), &Behavior::uniform());
        assert_eq!(ns_fraction(&half).value, ratio(1, 2));
    }

    #[test]
    fn chsh_formula_examples() {
        assert_eq!(local_fraction_ns_formula(&pr_boxes()[0]).unwrap(), int(0));
        let noisy = mix2(ratio(3, 4), &pr_boxes()[0], &Behavior::uniform());
        assert_eq!(local_fraction_ns_formula(&noisy).unwrap(), ratio(1, 2));
        assert_eq!(local_fraction(&noisy).value, ratio(1, 2));
        assert!(matches!(
            local_fraction_ns_formula(&copy_behavior()),
            Err(MeasureError::NotNonsignaling(_))
        ));
    }

    #[test]
    fn tsirelson_float_path() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let p: [f64; DIM] = std::array::from_fn(|i| {
            let (a, b, x, y) = labels_of(i);
            let sign = if (a + b + x * y) % 2 == 0 { 1.0 } else { -1.0 };
            0.25 * (1.0 + sign * r)
        });
        let expected = 2.0 - std::f64::consts::SQRT_2;
        assert!((fraction_f64(solution_set(SetKind::Q), &p) - expected).abs() < 1e-12);
        assert!((fraction_f64(solution_set(SetKind::S), &p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_signaling_via_f_examples() {
        assert_eq!(max_signaling_via_f(&Behavior::uniform()), int(0));
        assert_eq!(max_signaling_via_f(&copy_behavior()), int(1));
        let half = mix2(ratio(1, 2), &copy_behavior(), &Behavior::uniform());
        assert_eq!(max_signaling_via_f(&half), ratio(1, 2));
    }

    #[test]
    fn ties_are_reported_in_id_order() {
        let r = local_fraction(&Behavior::uniform());
        assert_eq!(r.value, int(1));
        assert!(!r.unique);
        assert!(r.minimizers.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(r.minimizers.len(), 8);
    }
}
