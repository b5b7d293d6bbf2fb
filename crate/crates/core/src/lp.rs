//! Exact linear programming for the decomposition problem.
//!
//! For target vertices `V` (the 16 local strategies, or all 24 NS vertices)
//! the primal is
//!
//! ```text
//! maximize 1·p  subject to  V p ≤ P,  p ≥ 0
//! ```
//!
//! solved by a dense-tableau simplex over rationals with Bland's rule. The
//! final tableau also yields a dual vertex `y ≥ 0, Vᵀy ≥ 1` with `P·y = p*`,
//! which is kept as an optimality certificate.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::behavior::{Behavior, DIM};
use crate::enumeration;
use crate::polytopes::{self, combine};
use crate::rational::Rational;
use crate::Target;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("DegenerateInner: p = 0, the inner part is undefined")]
    DegenerateInner,
    #[error("DegenerateOuter: p = 1, the outer part is undefined")]
    DegenerateOuter,
    #[error("solution does not fit the behavior: {0}")]
    InvalidSolution(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimalSolution {
    pub target: Target,
    pub p_star: Rational,
    /// One weight per target vertex, in column order.
    pub weights: Vec<Rational>,
    /// Non-basic variables at the optimum, as constraint indices: `0..16` are
    /// the rows of `V p ≤ P`, `16 + j` is `p_j ≥ 0`.
    pub active_constraints: Vec<usize>,
    /// Dual vertex read off the final tableau.
    pub dual: Vec<Rational>,
    pub pivots: usize,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    objective: Vec<Rational>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    /// Columns `0..n` structural, `n..n+m` slack, last column the right-hand side.
    fn new(columns: &[Behavior], rhs: &Behavior) -> Self {
        let n = columns.len();
        let m = DIM;
        let width = n + m + 1;
        let rows = (0..m)
            .map(|i| {
                let mut row = vec![Rational::zero(); width];
                for (j, col) in columns.iter().enumerate() {
                    row[j] = col.entries()[i].clone();
                }
                row[n + i] = Rational::one();
                row[width - 1] = rhs.entries()[i].clone();
                row
            })
            .collect();
        let mut objective = vec![Rational::zero(); width];
        for slot in objective.iter_mut().take(n) {
            *slot = -Rational::one();
        }
        Tableau {
            rows,
            objective,
            basis: (n..n + m).collect(),
            width,
        }
    }

    fn entering(&self) -> Option<usize> {
        (0..self.width - 1).find(|&j| self.objective[j].is_negative())
    }

    fn leaving(&self, col: usize) -> Option<usize> {
        let rhs = self.width - 1;
        let mut best: Option<(usize, Rational)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            if !row[col].is_positive() {
                continue;
            }
            let ratio = &row[rhs] / &row[col];
            let better = match &best {
                None => true,
                Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
            };
            if better {
                best = Some((i, ratio));
            }
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let pivot = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &pivot;
        }
        let pivot_row = self.rows[r].clone();
        let eliminate = |row: &mut Vec<Rational>| {
            let factor = row[c].clone();
            if factor.is_zero() {
                return;
            }
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.objective);
        self.basis[r] = c;
    }
}

fn solve(columns: &[Behavior], behavior: &Behavior, target: Target) -> PrimalSolution {
    let n = columns.len();
    let mut t = Tableau::new(columns, behavior);
    let mut pivots = 0;
    while let Some(col) = t.entering() {
        // The feasible region is bounded (every column has entries summing
        // to 4), so an improving column always has a positive entry.
        let row = t.leaving(col).expect("primal LP is bounded");
        t.pivot(row, col);
        pivots += 1;
    }
    let rhs = t.width - 1;
    let mut weights = vec![Rational::zero(); n];
    for (i, &var) in t.basis.iter().enumerate() {
        if var < n {
            weights[var] = t.rows[i][rhs].clone();
        }
    }
    let p_star = weights.iter().sum();
    let dual = (0..DIM).map(|i| t.objective[n + i].clone()).collect();
    let mut active_constraints: Vec<usize> = (0..n + DIM)
        .filter(|v| !t.basis.contains(v))
        .map(|v| if v < n { DIM + v } else { v - n })
        .collect();
    active_constraints.sort_unstable();
    PrimalSolution {
        target,
        p_star,
        weights,
        active_constraints,
        dual,
        pivots,
    }
}

pub fn solve_local_primal(behavior: &Behavior) -> PrimalSolution {
    solve(polytopes::local_strategies(), behavior, Target::Local)
}

pub fn solve_ns_primal(behavior: &Behavior) -> PrimalSolution {
    solve(polytopes::ns_vertices(), behavior, Target::NonSignaling)
}

pub fn solve_primal(behavior: &Behavior, target: Target) -> PrimalSolution {
    match target {
        Target::Local => solve_local_primal(behavior),
        Target::NonSignaling => solve_ns_primal(behavior),
    }
}

impl PrimalSolution {
    /// `p ≥ 0`, `V p ≤ P` and `Σp = p*`, checked exactly.
    pub fn is_feasible_for(&self, behavior: &Behavior) -> bool {
        let vertices = polytopes::vertices(self.target);
        if self.weights.len() != vertices.len() || self.weights.iter().any(|w| w.is_negative()) {
            return false;
        }
        let used = combine(&self.weights, vertices);
        let sum: Rational = self.weights.iter().sum();
        sum == self.p_star && used.iter().zip(behavior.entries()).all(|(u, p)| u <= p)
    }

    /// The dual vector is feasible (`y ≥ 0`, `Vᵀy ≥ 1`) and its objective
    /// equals `p*`, which proves optimality.
    pub fn certifies_optimality(&self, behavior: &Behavior) -> bool {
        let vertices = polytopes::vertices(self.target);
        if self.dual.len() != DIM || self.dual.iter().any(|y| y.is_negative()) {
            return false;
        }
        let covers = vertices.iter().all(|v| {
            let dot: Rational = v.entries().iter().zip(&self.dual).map(|(a, y)| a * y).sum();
            dot >= Rational::one()
        });
        let objective: Rational = behavior
            .entries()
            .iter()
            .zip(&self.dual)
            .map(|(p, y)| p * y)
            .sum();
        covers && objective == self.p_star
    }
}

/// `P = p·inner + (1−p)·outer`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub target: Target,
    pub p: Rational,
    /// Absent when `p = 0`.
    pub inner: Option<Behavior>,
    /// Absent when `p = 1`.
    pub outer: Option<Behavior>,
}

impl Decomposition {
    pub fn inner(&self) -> Result<&Behavior, LpError> {
        self.inner.as_ref().ok_or(LpError::DegenerateInner)
    }

    pub fn outer(&self) -> Result<&Behavior, LpError> {
        self.outer.as_ref().ok_or(LpError::DegenerateOuter)
    }

    /// Recombines the parts entrywise.
    pub fn recombine(&self) -> [Rational; DIM] {
        let q = Rational::one() - &self.p;
        std::array::from_fn(|i| {
            let a = self
                .inner
                .as_ref()
                .map_or_else(Rational::zero, |b| &self.p * &b.entries()[i]);
            let b = self
                .outer
                .as_ref()
                .map_or_else(Rational::zero, |b| &q * &b.entries()[i]);
            a + b
        })
    }
}

pub fn extract_decomposition(
    behavior: &Behavior,
    sol: &PrimalSolution,
    target: Target,
) -> Result<Decomposition, LpError> {
    if sol.target != target {
        return Err(LpError::InvalidSolution(format!(
            "solution is for target {}",
            sol.target.name()
        )));
    }
    if !sol.is_feasible_for(behavior) {
        return Err(LpError::InvalidSolution("weights violate V p ≤ P".into()));
    }
    let vertices = polytopes::vertices(target);
    let used = combine(&sol.weights, vertices);
    let p = sol.p_star.clone();
    let inner = if p.is_zero() {
        None
    } else {
        let flat = used.iter().map(|v| v / &p).collect();
        Some(Behavior::from_flat(flat).map_err(|e| LpError::InvalidSolution(e.to_string()))?)
    };
    let outer = if p.is_one() {
        None
    } else {
        let rest = Rational::one() - &p;
        let flat = behavior
            .entries()
            .iter()
            .zip(&used)
            .map(|(b, u)| (b - u) / &rest)
            .collect();
        Some(Behavior::from_flat(flat).map_err(|e| LpError::InvalidSolution(e.to_string()))?)
    };
    Ok(Decomposition {
        target,
        p,
        inner,
        outer,
    })
}

/// Solves the primal and extracts the decomposition in one step.
pub fn decompose(behavior: &Behavior, target: Target) -> Decomposition {
    let sol = solve_primal(behavior, target);
    extract_decomposition(behavior, &sol, target).expect("simplex output is feasible")
}

/// Minimum of `q·P` over the enumerated vertices of the dual polyhedron
/// `{Vᵀq ≥ 1, q ≥ 0}` (normalization vectors included).
pub fn dual_value(behavior: &Behavior, target: Target) -> Rational {
    enumeration::dual_vertices(target)
        .vertices
        .iter()
        .map(|q| {
            q.iter()
                .zip(behavior.entries())
                .map(|(a, b)| a * b)
                .sum::<Rational>()
        })
        .min()
        .expect("dual polyhedron has vertices")
}
