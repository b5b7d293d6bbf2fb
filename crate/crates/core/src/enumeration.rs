//! Vertex enumeration by the double description method, in exact integer
//! arithmetic on the homogenized cone.
//!
//! A polyhedron `{x : A x ≥ b}` in `ℝ^d` is lifted to the cone
//! `{(t, x) : A x − b t ≥ 0, t ≥ 0}` in `ℝ^{d+1}`. Constraints are inserted
//! one at a time starting from the whole space (all of it lineality); each
//! insertion either turns a lineality direction into a ray or combines
//! adjacent rays across the new hyperplane. At the end, extreme rays with
//! `t > 0` are vertices and rays with `t = 0` span the recession cone.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::behavior::DIM;
use crate::measures::{normalization_vectors, Coeffs, SetKind, VectorSet};
use crate::polytopes;
use crate::rational::{format_rational, Rational};
use crate::Target;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnumerationError {
    #[error("EmptyPolyhedron: the inequalities have no common solution")]
    EmptyPolyhedron,
    #[error("polyhedron contains a line; only pointed polyhedra are supported")]
    NotPointed,
    #[error("row {row} has {found} coefficients, expected {expected}")]
    DimensionMismatch {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("DerivationMismatch: {0}")]
    DerivationMismatch(String),
}

/// One inequality `coeffs · x ≥ offset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HRow {
    pub coeffs: Vec<Rational>,
    pub offset: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HPolyhedron {
    pub dim: usize,
    pub rows: Vec<HRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct VRepresentation {
    /// Sorted lexicographically.
    pub vertices: Vec<Vec<Rational>>,
    /// Extreme rays scaled to coprime integers, sorted lexicographically.
    pub rays: Vec<Vec<Rational>>,
}

impl HPolyhedron {
    pub fn new(dim: usize, rows: Vec<HRow>) -> Result<Self, EnumerationError> {
        for (row, r) in rows.iter().enumerate() {
            if r.coeffs.len() != dim {
                return Err(EnumerationError::DimensionMismatch {
                    row,
                    found: r.coeffs.len(),
                    expected: dim,
                });
            }
        }
        Ok(HPolyhedron { dim, rows })
    }

    pub fn satisfies(&self, point: &[Rational]) -> bool {
        self.rows.iter().all(|r| dot(&r.coeffs, point) >= r.offset)
    }

    /// Recession-cone membership: `coeffs · d ≥ 0` for every row.
    pub fn satisfies_homogeneous(&self, direction: &[Rational]) -> bool {
        self.rows
            .iter()
            .all(|r| !dot(&r.coeffs, direction).is_negative())
    }

    /// Indices of rows holding with equality at `point`.
    pub fn tight_rows(&self, point: &[Rational]) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&i| dot(&self.rows[i].coeffs, point) == self.rows[i].offset)
            .collect()
    }

    /// Rank of the coefficient vectors of the rows tight at `point`.
    pub fn tight_rank(&self, point: &[Rational]) -> usize {
        let rows: Vec<Vec<Rational>> = self
            .tight_rows(point)
            .into_iter()
            .map(|i| self.rows[i].coeffs.clone())
            .collect();
        rank(rows)
    }
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rank by Gaussian elimination over the rationals.
pub fn rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let (top, rest) = rows.split_at_mut(r + 1);
        let pivot_row = &top[r];
        for row in rest.iter_mut() {
            if row[c].is_zero() {
                continue;
            }
            let factor = &row[c] / &pivot_row[c];
            for (x, p) in row[c..].iter_mut().zip(&pivot_row[c..]) {
                *x -= &factor * p;
            }
        }
        r += 1;
    }
    r
}

// ---------------------------------------------------------------------------
// Double description core

#[derive(Clone, Debug, PartialEq, Eq)]
struct ZeroSet(Vec<u64>);

impl ZeroSet {
    fn empty(bits: usize) -> Self {
        ZeroSet(vec![0; bits.div_ceil(64).max(1)])
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn intersect(&self, other: &ZeroSet) -> ZeroSet {
        ZeroSet(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn contains_all(&self, other: &ZeroSet) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & b == *b)
    }

    fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
}

#[derive(Clone, Debug)]
struct Ray {
    coords: Vec<BigInt>,
    zeros: ZeroSet,
}

fn idot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn primitive(mut v: Vec<BigInt>) -> Vec<BigInt> {
    let g = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in v.iter_mut() {
            *x /= &g;
        }
    }
    v
}

/// Scales a rational row to coprime integers with the same sign.
fn integer_row(coeffs: &[Rational]) -> Vec<BigInt> {
    let lcm = coeffs
        .iter()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    primitive(
        coeffs
            .iter()
            .map(|c| (c * Rational::from_integer(lcm.clone())).to_integer())
            .collect(),
    )
}

struct Cone {
    width: usize,
    n_constraints: usize,
    lineality: Vec<Vec<BigInt>>,
    rays: Vec<Ray>,
    processed: Vec<usize>,
}

impl Cone {
    fn whole_space(width: usize, n_constraints: usize) -> Self {
        let lineality = (0..width)
            .map(|i| (0..width).map(|j| BigInt::from(u8::from(i == j))).collect())
            .collect();
        Cone {
            width,
            n_constraints,
            lineality,
            rays: Vec::new(),
            processed: Vec::new(),
        }
    }

    fn insert(&mut self, k: usize, a: &[BigInt]) {
        let pivot = self.lineality.iter().position(|l| !idot(a, l).is_zero());
        match pivot {
            Some(p) => self.absorb_lineality(k, a, p),
            None => self.split_rays(k, a),
        }
        self.processed.push(k);
    }

    fn absorb_lineality(&mut self, k: usize, a: &[BigInt], p: usize) {
        let mut l = self.lineality.swap_remove(p);
        let mut al = idot(a, &l);
        if al.sign() == Sign::Minus {
            for x in l.iter_mut() {
                *x = -x.clone();
            }
            al = -al;
        }
        let project = |v: &[BigInt]| -> Vec<BigInt> {
            let av = idot(a, v);
            primitive(
                v.iter()
                    .zip(&l)
                    .map(|(vi, li)| &al * vi - &av * li)
                    .collect(),
            )
        };
        self.lineality = self.lineality.iter().map(|v| project(v)).collect();
        for ray in self.rays.iter_mut() {
            ray.coords = project(&ray.coords);
            ray.zeros.insert(k);
        }
        let mut zeros = ZeroSet::empty(self.n_constraints);
        for &j in &self.processed {
            zeros.insert(j);
        }
        self.rays.push(Ray { coords: l, zeros });
    }

    fn split_rays(&mut self, k: usize, a: &[BigInt]) {
        let values: Vec<BigInt> = self.rays.iter().map(|r| idot(a, &r.coords)).collect();
        let positive: Vec<usize> = (0..self.rays.len())
            .filter(|&i| values[i].is_positive())
            .collect();
        let negative: Vec<usize> = (0..self.rays.len())
            .filter(|&i| values[i].is_negative())
            .collect();
        if negative.is_empty() {
            for (ray, v) in self.rays.iter_mut().zip(&values) {
                if v.is_zero() {
                    ray.zeros.insert(k);
                }
            }
            return;
        }
        // Two rays are adjacent when their common zero set is not contained in
        // the zero set of any third ray, and is large enough to span a 2-face.
        let pointed_dim = self.width - self.lineality.len();
        let min_common = pointed_dim.saturating_sub(2);
        let mut created = Vec::new();
        for &i in &positive {
            for &j in &negative {
                let common = self.rays[i].zeros.intersect(&self.rays[j].zeros);
                if common.len() < min_common {
                    continue;
                }
                let blocked = self
                    .rays
                    .iter()
                    .enumerate()
                    .any(|(m, r)| m != i && m != j && r.zeros.contains_all(&common));
                if blocked {
                    continue;
                }
                let (vi, vj) = (&values[i], &values[j]);
                let coords = primitive(
                    self.rays[i]
                        .coords
                        .iter()
                        .zip(&self.rays[j].coords)
                        .map(|(x, y)| vi * y - vj * x)
                        .collect(),
                );
                let mut zeros = common;
                zeros.insert(k);
                created.push(Ray { coords, zeros });
            }
        }
        let mut kept: Vec<Ray> =
            Vec::with_capacity(self.rays.len() - negative.len() + created.len());
        for (mut ray, v) in std::mem::take(&mut self.rays).into_iter().zip(values) {
            if v.is_negative() {
                continue;
            }
            if v.is_zero() {
                ray.zeros.insert(k);
            }
            kept.push(ray);
        }
        kept.extend(created);
        self.rays = kept;
    }
}

/// Complete, duplicate-free vertex and extreme-ray lists of a pointed
/// polyhedron. Rows are inserted in the order given.
pub fn enumerate_vertices(h: &HPolyhedron) -> Result<VRepresentation, EnumerationError> {
    let width = h.dim + 1;
    let n_constraints = h.rows.len() + 1;
    let mut cone = Cone::whole_space(width, n_constraints);
    let mut t_row = vec![BigInt::zero(); width];
    t_row[0] = BigInt::one();
    cone.insert(0, &t_row);
    for (i, row) in h.rows.iter().enumerate() {
        let mut lifted = Vec::with_capacity(width);
        lifted.push(-row.offset.clone());
        lifted.extend(row.coeffs.iter().cloned());
        cone.insert(i + 1, &integer_row(&lifted));
    }
    if !cone.lineality.is_empty() {
        return Err(EnumerationError::NotPointed);
    }
    let mut vertices = BTreeSet::new();
    let mut rays = BTreeSet::new();
    for ray in &cone.rays {
        let t = &ray.coords[0];
        if t.is_zero() {
            rays.insert(
                ray.coords[1..]
                    .iter()
                    .map(|c| Rational::from_integer(c.clone()))
                    .collect::<Vec<_>>(),
            );
        } else {
            vertices.insert(
                ray.coords[1..]
                    .iter()
                    .map(|c| Rational::new(c.clone(), t.clone()))
                    .collect::<Vec<_>>(),
            );
        }
    }
    if vertices.is_empty() {
        return Err(EnumerationError::EmptyPolyhedron);
    }
    Ok(VRepresentation {
        vertices: vertices.into_iter().collect(),
        rays: rays.into_iter().collect(),
    })
}

// ---------------------------------------------------------------------------
// Dual polyhedra of the decomposition LPs

/// `{q ≥ 0, Vᵀq ≥ 1}`: the 16 orthant rows first, then one row per target
/// vertex in column order.
pub fn dual_polyhedron(target: Target) -> HPolyhedron {
    let mut rows = Vec::new();
    for i in 0..DIM {
        let coeffs = (0..DIM)
            .map(|j| Rational::from_integer(BigInt::from(u8::from(i == j))))
            .collect();
        rows.push(HRow {
            coeffs,
            offset: Rational::zero(),
        });
    }
    for v in polytopes::vertices(target) {
        rows.push(HRow {
            coeffs: v.entries().to_vec(),
            offset: Rational::one(),
        });
    }
    HPolyhedron::new(DIM, rows).expect("rows have dimension 16")
}

/// Cached V-representation of [`dual_polyhedron`].
pub fn dual_vertices(target: Target) -> &'static VRepresentation {
    static LOCAL: OnceLock<VRepresentation> = OnceLock::new();
    static NS: OnceLock<VRepresentation> = OnceLock::new();
    let cell = match target {
        Target::Local => &LOCAL,
        Target::NonSignaling => &NS,
    };
    cell.get_or_init(|| {
        enumerate_vertices(&dual_polyhedron(target))
            .expect("dual polyhedron is pointed and non-empty")
    })
}

fn to_coeffs(v: &[Rational]) -> Option<Coeffs> {
    let mut out = [0u8; DIM];
    for (slot, x) in out.iter_mut().zip(v) {
        if !x.is_integer() || x.is_negative() || *x > Rational::from_integer(255.into()) {
            return None;
        }
        *slot = x.to_integer().try_into().ok()?;
    }
    Some(out)
}

fn derive(target: Target) -> Result<BTreeSet<Coeffs>, EnumerationError> {
    let v = dual_vertices(target);
    let unit_rays: BTreeSet<Vec<Rational>> = (0..DIM)
        .map(|i| {
            (0..DIM)
                .map(|j| Rational::from_integer(BigInt::from(u8::from(i == j))))
                .collect()
        })
        .collect();
    if v.rays.iter().cloned().collect::<BTreeSet<_>>() != unit_rays {
        return Err(EnumerationError::DerivationMismatch(
            "recession cone is not the non-negative orthant".into(),
        ));
    }
    let mut set = BTreeSet::new();
    for vertex in &v.vertices {
        let c = to_coeffs(vertex).ok_or_else(|| {
            let shown: Vec<String> = vertex.iter().map(format_rational).collect();
            EnumerationError::DerivationMismatch(format!(
                "non-integral vertex [{}]",
                shown.join(" ")
            ))
        })?;
        set.insert(c);
    }
    for n in normalization_vectors() {
        if !set.remove(&n) {
            return Err(EnumerationError::DerivationMismatch(
                "normalization vector missing".into(),
            ));
        }
    }
    Ok(set)
}

/// Vertices of the dual local polyhedron minus the four normalization vectors.
pub fn derive_q() -> Result<BTreeSet<Coeffs>, EnumerationError> {
    derive(Target::Local)
}

/// Vertices of the dual NS polyhedron minus the four normalization vectors.
pub fn derive_s() -> Result<BTreeSet<Coeffs>, EnumerationError> {
    derive(Target::NonSignaling)
}

pub fn derive_set(kind: SetKind) -> Result<BTreeSet<Coeffs>, EnumerationError> {
    derive(kind.target())
}

/// Compares a derived set against a labelled set.
pub fn check_derivation(kind: SetKind, against: &VectorSet) -> Result<(), EnumerationError> {
    let derived = derive_set(kind)?;
    let expected = against.coefficient_set();
    if derived == expected {
        Ok(())
    } else {
        Err(EnumerationError::DerivationMismatch(format!(
            "{kind}: {} derived, {} expected, {} missing, {} extra",
            derived.len(),
            expected.len(),
            expected.difference(&derived).count(),
            derived.difference(&expected).count()
        )))
    }
}

impl VRepresentation {
    /// Same text layout as the measure-vector files; the last token is
    /// `vertex` or `ray`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (tag, list) in [("vertex", &self.vertices), ("ray", &self.rays)] {
            for v in list {
                let parts: Vec<String> = v.iter().map(format_rational).collect();
                out.push_str(&format!("{} {tag}\n", parts.join(" ")));
            }
        }
        out
    }
}
