//! Vertex descriptions of the local polytope (16 deterministic strategies)
//! and the non-signaling polytope (those plus 8 PR boxes).
//!
//! The column order is a published convention that the dual-vertex data
//! depends on, so the vertices are stored literally rather than generated.

use std::sync::OnceLock;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::behavior::{Behavior, DIM};
use crate::rational::{format_rational, Rational};
use crate::Target;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolytopeError {
    #[error("weights are not convex: {0}")]
    WeightsNotConvex(String),
}

/// Columns `L₁..L₁₆`, each a flat 0/1 behavior.
const LOCAL_COLUMNS: [[u8; DIM]; 16] = [
    [1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0],
    [0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0],
    [1, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0],
    [0, 1, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0],
    [0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0],
    [0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1],
    [0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 1],
    [0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 1, 0],
    [1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0],
    [0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1],
    [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1],
    [0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0],
    [0, 0, 1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 1, 0, 0],
    [0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 1, 0, 0],
    [0, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 0],
];

/// Columns `R₁..R₈`; a 1 marks an entry equal to 1/2.
const PR_COLUMNS: [[u8; DIM]; 8] = [
    [1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0],
    [1, 0, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0, 0, 1],
    [1, 0, 0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 1, 0, 0, 1],
    [0, 1, 1, 0, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1],
    [0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 1, 0, 0, 1],
    [0, 1, 1, 0, 0, 1, 1, 0, 1, 0, 0, 1, 0, 1, 1, 0],
    [0, 1, 1, 0, 1, 0, 0, 1, 0, 1, 1, 0, 0, 1, 1, 0],
    [1, 0, 0, 1, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0],
];

/// A local deterministic strategy: Alice answers `f(x)`, Bob answers `g(y)`.
/// Function tables are `[f(0), f(1)]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StrategyLabel {
    pub f: [usize; 2],
    pub g: [usize; 2],
}

/// Function tables in label order: constant 0, constant 1, identity, negation.
const FUNCTION_TABLES: [[usize; 2]; 4] = [[0, 0], [1, 1], [0, 1], [1, 0]];

impl StrategyLabel {
    /// Label of column `L_{i+1}`: `i = 4·(f index) + (g index)`.
    pub fn of_column(i: usize) -> Self {
        StrategyLabel {
            f: FUNCTION_TABLES[i / 4],
            g: FUNCTION_TABLES[i % 4],
        }
    }

    /// `δ(a = f(x))·δ(b = g(y))`.
    pub fn behavior(&self) -> Behavior {
        let flat = (0..DIM)
            .map(|i| {
                let (a, b, x, y) = crate::behavior::labels_of(i);
                if a == self.f[x] && b == self.g[y] {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        Behavior::from_flat(flat).expect("deterministic strategy is a behavior")
    }
}

pub struct VertexCatalog {
    pub locals: Vec<Behavior>,
    pub pr_boxes: Vec<Behavior>,
    pub ns_all: Vec<Behavior>,
}

fn column_behavior(column: &[u8; DIM], scale: &Rational) -> Behavior {
    Behavior::from_flat(
        column
            .iter()
            .map(|&v| scale * Rational::from_integer(v.into()))
            .collect(),
    )
    .expect("shipped vertex is a behavior")
}

pub fn catalog() -> &'static VertexCatalog {
    static CATALOG: OnceLock<VertexCatalog> = OnceLock::new();
    CATALOG.get_or_init(|| {
        let one = Rational::one();
        let half = Rational::new(1.into(), 2.into());
        let locals: Vec<Behavior> = LOCAL_COLUMNS
            .iter()
            .map(|c| column_behavior(c, &one))
            .collect();
        let pr_boxes: Vec<Behavior> = PR_COLUMNS
            .iter()
            .map(|c| column_behavior(c, &half))
            .collect();
        let ns_all = locals.iter().chain(&pr_boxes).cloned().collect();
        VertexCatalog {
            locals,
            pr_boxes,
            ns_all,
        }
    })
}

pub fn local_strategies() -> &'static [Behavior] {
    &catalog().locals
}

pub fn pr_boxes() -> &'static [Behavior] {
    &catalog().pr_boxes
}

pub fn ns_vertices() -> &'static [Behavior] {
    &catalog().ns_all
}

/// Vertices of the target polytope, in column order (L, or N = L ∪ R).
pub fn vertices(target: Target) -> &'static [Behavior] {
    match target {
        Target::Local => local_strategies(),
        Target::NonSignaling => ns_vertices(),
    }
}

/// Entrywise convex combination `Σ wᵢ·vᵢ`.
pub fn mix(weights: &[Rational], vertices: &[Behavior]) -> Result<Behavior, PolytopeError> {
    if weights.len() != vertices.len() {
        return Err(PolytopeError::WeightsNotConvex(format!(
            "{} weights for {} vertices",
            weights.len(),
            vertices.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| w.is_negative()) {
        return Err(PolytopeError::WeightsNotConvex(format!(
            "negative weight {}",
            format_rational(w)
        )));
    }
    let total: Rational = weights.iter().sum();
    if !total.is_one() {
        return Err(PolytopeError::WeightsNotConvex(format!(
            "weights sum to {}",
            format_rational(&total)
        )));
    }
    let flat = combine(weights, vertices);
    Ok(Behavior::from_flat(flat.to_vec()).expect("convex combination of behaviors"))
}

/// Unnormalized `Σ wᵢ·vᵢ` as a raw 16-vector.
pub fn combine(weights: &[Rational], vertices: &[Behavior]) -> [Rational; DIM] {
    let mut acc: [Rational; DIM] = std::array::from_fn(|_| Rational::zero());
    for (w, v) in weights.iter().zip(vertices) {
        if w.is_zero() {
            continue;
        }
        for (slot, value) in acc.iter_mut().zip(v.entries()) {
            *slot += w * value;
        }
    }
    acc
}
