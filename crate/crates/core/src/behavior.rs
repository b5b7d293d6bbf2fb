//! Behaviors `P(a,b|x,y)` and their scalar statistics: marginals,
//! correlators, signaling signatures `Δ_i` and CHSH expressions `S_i`.
//!
//! The flat index order is context-major, outcome-minor:
//! `index = 4·(2x + y) + (2a + b)`, so entries run
//! `P(00|00), P(01|00), P(10|00), P(11|00), P(00|01), …, P(11|11)`.

use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{format_rational, from_f64, Rational};

pub const DIM: usize = 16;
pub const CONTEXTS: usize = 4;

/// Context labels in flat order.
pub const CONTEXT_LABELS: [&str; CONTEXTS] = ["00", "01", "10", "11"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BehaviorError {
    #[error("entry {index} ({label}) is negative: {value}")]
    NegativeEntry {
        index: usize,
        label: String,
        value: String,
    },
    #[error("context xy={context} sums to {sum}, expected 1")]
    BlockNotNormalized { context: String, sum: String },
    #[error("expected 16 entries, got {0}")]
    WrongLength(usize),
    #[error("tolerance must be a finite non-negative number")]
    BadTolerance,
}

pub const fn flat_index(a: usize, b: usize, x: usize, y: usize) -> usize {
    4 * (2 * x + y) + 2 * a + b
}

/// `(a, b, x, y)` for a flat index.
pub const fn labels_of(index: usize) -> (usize, usize, usize, usize) {
    let ctx = index / 4;
    let out = index % 4;
    (out >> 1, out & 1, ctx >> 1, ctx & 1)
}

pub fn entry_label(index: usize) -> String {
    let (a, b, x, y) = labels_of(index);
    format!("P{a}{b}|{x}{y}")
}

/// A validated behavior: 16 non-negative exact rationals, each context
/// block summing to exactly 1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Behavior {
    entries: [Rational; DIM],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    Local,
    NonsignalingNonlocal,
    Signaling,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Local => "local",
            Classification::NonsignalingNonlocal => "nonsignaling-nonlocal",
            Classification::Signaling => "signaling",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BehaviorStats {
    pub delta: [Rational; 4],
    pub delta_max: Rational,
    pub chsh: [Rational; 4],
    pub chsh_max: Rational,
    pub correlators: [Rational; 4],
    pub marginals_a: [Rational; 4],
    pub marginals_b: [Rational; 4],
}

impl Behavior {
    /// Validates a 4×4 grid, rows in context order, columns in outcome order.
    pub fn validate(raw: &[[Rational; 4]; 4]) -> Result<Self, BehaviorError> {
        let flat: Vec<Rational> = raw.iter().flatten().cloned().collect();
        Self::from_flat(flat)
    }

    pub fn from_flat(flat: Vec<Rational>) -> Result<Self, BehaviorError> {
        let entries: [Rational; DIM] = flat
            .try_into()
            .map_err(|v: Vec<Rational>| BehaviorError::WrongLength(v.len()))?;
        for (index, value) in entries.iter().enumerate() {
            if value.is_negative() {
                return Err(BehaviorError::NegativeEntry {
                    index,
                    label: entry_label(index),
                    value: format_rational(value),
                });
            }
        }
        for ctx in 0..CONTEXTS {
            let sum: Rational = entries[4 * ctx..4 * ctx + 4].iter().sum();
            if !sum.is_one() {
                return Err(BehaviorError::BlockNotNormalized {
                    context: CONTEXT_LABELS[ctx].to_string(),
                    sum: format_rational(&sum),
                });
            }
        }
        Ok(Behavior { entries })
    }

    /// Lenient constructor for measured frequencies: each block whose sum is
    /// within `tol` of 1 is rescaled to sum exactly to 1.
    pub fn validate_approx(raw: &[[Rational; 4]; 4], tol: f64) -> Result<Self, BehaviorError> {
        if !tol.is_finite() || tol < 0.0 {
            return Err(BehaviorError::BadTolerance);
        }
        let tol = from_f64(tol).ok_or(BehaviorError::BadTolerance)?;
        let mut flat = Vec::with_capacity(DIM);
        for (ctx, row) in raw.iter().enumerate() {
            let sum: Rational = row.iter().sum();
            if (sum.clone() - Rational::one()).abs() > tol || sum.is_zero() {
                return Err(BehaviorError::BlockNotNormalized {
                    context: CONTEXT_LABELS[ctx].to_string(),
                    sum: format_rational(&sum),
                });
            }
            flat.extend(row.iter().map(|v| v / &sum));
        }
        Self::from_flat(flat)
    }

    /// The behavior with every entry equal to 1/4.
    pub fn uniform() -> Self {
        let quarter = Rational::new(1.into(), 4.into());
        Behavior {
            entries: std::array::from_fn(|_| quarter.clone()),
        }
    }

    pub fn entries(&self) -> &[Rational; DIM] {
        &self.entries
    }

    pub fn entry(&self, a: usize, b: usize, x: usize, y: usize) -> &Rational {
        &self.entries[flat_index(a, b, x, y)]
    }

    pub fn grid(&self) -> [[Rational; 4]; 4] {
        std::array::from_fn(|ctx| std::array::from_fn(|out| self.entries[4 * ctx + out].clone()))
    }

    pub fn to_f64(&self) -> [f64; DIM] {
        std::array::from_fn(|i| crate::rational::to_f64(&self.entries[i]))
    }

    /// Entry `i` of the result is entry `perm⁻¹(i)` of `self`, i.e. the
    /// value at index `i` moves to `perm[i]`.
    pub fn permuted(&self, perm: &[usize; DIM]) -> Behavior {
        let mut entries: [Rational; DIM] = std::array::from_fn(|_| Rational::zero());
        for (i, value) in self.entries.iter().enumerate() {
            entries[perm[i]] = value.clone();
        }
        Behavior { entries }
    }

    /// `P(a=0|xy)` per context.
    pub fn marginals_a(&self) -> [Rational; 4] {
        std::array::from_fn(|ctx| &self.entries[4 * ctx] + &self.entries[4 * ctx + 1])
    }

    /// `P(b=0|xy)` per context.
    pub fn marginals_b(&self) -> [Rational; 4] {
        std::array::from_fn(|ctx| &self.entries[4 * ctx] + &self.entries[4 * ctx + 2])
    }

    /// `⟨ab⟩_xy = Σ (−1)^(a+b) P(a,b|x,y)` per context.
    pub fn correlators(&self) -> [Rational; 4] {
        std::array::from_fn(|ctx| {
            let e = &self.entries[4 * ctx..4 * ctx + 4];
            &e[0] - &e[1] - &e[2] + &e[3]
        })
    }

    pub fn signaling_signatures(&self) -> [Rational; 4] {
        let ma = self.marginals_a();
        let mb = self.marginals_b();
        [
            &ma[0] - &ma[1],
            &ma[2] - &ma[3],
            &mb[0] - &mb[2],
            &mb[1] - &mb[3],
        ]
    }

    pub fn max_signaling(&self) -> Rational {
        max_abs(&self.signaling_signatures())
    }

    pub fn chsh_expressions(&self) -> [Rational; 4] {
        chsh_from_correlators(&self.correlators())
    }

    /// `(S₁..S₄, S)` with `S = max |S_i|`.
    pub fn chsh(&self) -> ([Rational; 4], Rational) {
        let s = self.chsh_expressions();
        let max = max_abs(&s);
        (s, max)
    }

    pub fn stats(&self) -> BehaviorStats {
        let delta = self.signaling_signatures();
        let delta_max = max_abs(&delta);
        let correlators = self.correlators();
        let chsh = chsh_from_correlators(&correlators);
        let chsh_max = max_abs(&chsh);
        BehaviorStats {
            delta,
            delta_max,
            chsh,
            chsh_max,
            correlators,
            marginals_a: self.marginals_a(),
            marginals_b: self.marginals_b(),
        }
    }

    /// Fine's criterion: local iff non-signaling and `S ≤ 2`.
    pub fn classify(&self) -> Classification {
        if !self.max_signaling().is_zero() {
            Classification::Signaling
        } else if self.chsh().1 <= Rational::from_integer(2.into()) {
            Classification::Local
        } else {
            Classification::NonsignalingNonlocal
        }
    }

    pub fn is_nonsignaling(&self) -> bool {
        self.max_signaling().is_zero()
    }
}

impl fmt::Debug for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(format_rational).collect();
        write!(f, "Behavior[{}]", parts.join(" "))
    }
}

fn chsh_from_correlators(e: &[Rational; 4]) -> [Rational; 4] {
    [
        &e[0] + &e[1] + &e[2] - &e[3],
        &e[0] + &e[1] - &e[2] + &e[3],
        &e[0] - &e[1] + &e[2] + &e[3],
        -&e[0] + &e[1] + &e[2] + &e[3],
    ]
}

fn max_abs(values: &[Rational; 4]) -> Rational {
    values.iter().map(|v| v.abs()).max().expect("four values")
}

/// CHSH expressions of a float behavior, same layout as the exact path.
pub fn chsh_f64(p: &[f64; DIM]) -> [f64; 4] {
    let e: [f64; 4] =
        std::array::from_fn(|c| p[4 * c] - p[4 * c + 1] - p[4 * c + 2] + p[4 * c + 3]);
    [
        e[0] + e[1] + e[2] - e[3],
        e[0] + e[1] - e[2] + e[3],
        e[0] - e[1] + e[2] + e[3],
        -e[0] + e[1] + e[2] + e[3],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn flat(values: [(i64, i64); DIM]) -> Behavior {
        Behavior::from_flat(values.iter().map(|&(n, d)| ratio(n, d)).collect()).unwrap()
    }

    /// a = y, b = 0 deterministically.
    fn copy_behavior() -> Behavior {
        let mut v = vec![int(0); DIM];
        v[flat_index(0, 0, 0, 0)] = int(1);
        v[flat_index(1, 0, 0, 1)] = int(1);
        v[flat_index(0, 0, 1, 0)] = int(1);
        v[flat_index(1, 0, 1, 1)] = int(1);
        Behavior::from_flat(v).unwrap()
    }

    fn pr_box() -> Behavior {
        let mut v = vec![int(0); DIM];
        for (i, slot) in v.iter_mut().enumerate() {
            let (a, b, x, y) = labels_of(i);
            if (a ^ b) == (x & y) {
                *slot = ratio(1, 2);
            }
        }
        Behavior::from_flat(v).unwrap()
    }

    fn mix(p: Rational, b1: &Behavior, b2: &Behavior) -> Behavior {
        let q = Rational::one() - &p;
        Behavior::from_flat(
            b1.entries()
                .iter()
                .zip(b2.entries())
                .map(|(x, y)| &p * x + &q * y)
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn index_convention() {
        assert_eq!(flat_index(0, 0, 0, 0), 0);
        assert_eq!(flat_index(1, 1, 0, 0), 3);
        assert_eq!(flat_index(0, 0, 0, 1), 4);
        assert_eq!(flat_index(1, 1, 1, 1), 15);
        for i in 0..DIM {
            let (a, b, x, y) = labels_of(i);
            assert_eq!(flat_index(a, b, x, y), i);
        }
        assert_eq!(entry_label(6), "P10|01");
    }

    #[test]
    fn validate_accepts_uniform() {
        let raw: [[Rational; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| ratio(1, 4)));
        assert_eq!(Behavior::validate(&raw).unwrap(), Behavior::uniform());
    }

    #[test]
    fn validate_rejects_negative_entry() {
        let mut raw: [[Rational; 4]; 4] =
            std::array::from_fn(|_| std::array::from_fn(|_| ratio(1, 4)));
        raw[0][0] = ratio(-1, 8);
        raw[0][1] = ratio(5, 8);
        match Behavior::validate(&raw) {
            Err(BehaviorError::NegativeEntry { index: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_rejects_unnormalized_block() {
        let mut raw: [[Rational; 4]; 4] =
            std::array::from_fn(|_| std::array::from_fn(|_| ratio(1, 4)));
        raw[1] = [ratio(1, 4), ratio(1, 4), ratio(1, 4), ratio(3, 20)];
        match Behavior::validate(&raw) {
            Err(BehaviorError::BlockNotNormalized { context, sum }) => {
                assert_eq!(context, "01");
                assert_eq!(sum, "9/10");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            Behavior::from_flat(vec![int(0); 3]),
            Err(BehaviorError::WrongLength(3))
        );
    }

    #[test]
    fn validate_approx_renormalizes() {
        let mut raw: [[Rational; 4]; 4] =
            std::array::from_fn(|_| std::array::from_fn(|_| ratio(1, 4)));
        raw[2][3] = ratio(1, 4) + ratio(1, 10_000_000_000);
        let b = Behavior::validate_approx(&raw, 1e-9).unwrap();
        let sum: Rational = b.entries()[8..12].iter().sum();
        assert!(sum.is_one());
        assert!(Behavior::validate(&raw).is_err());
        raw[2][3] = ratio(1, 2);
        assert!(Behavior::validate_approx(&raw, 1e-9).is_err());
        assert_eq!(
            Behavior::validate_approx(&raw, -1.0),
            Err(BehaviorError::BadTolerance)
        );
    }

    #[test]
    fn signatures_of_landmarks() {
        let zero = [int(0), int(0), int(0), int(0)];
        assert_eq!(Behavior::uniform().signaling_signatures(), zero);
        assert_eq!(
            copy_behavior().signaling_signatures(),
            [int(1), int(1), int(0), int(0)]
        );
        assert_eq!(pr_box().signaling_signatures(), zero);
    }

    #[test]
    fn max_signaling_of_landmarks() {
        assert_eq!(Behavior::uniform().max_signaling(), int(0));
        assert_eq!(copy_behavior().max_signaling(), int(1));
        let half = mix(ratio(1, 2), &copy_behavior(), &Behavior::uniform());
        assert_eq!(half.max_signaling(), ratio(1, 2));
    }

    #[test]
    fn chsh_of_landmarks() {
        let (s, max) = Behavior::uniform().chsh();
        assert_eq!(s, [int(0), int(0), int(0), int(0)]);
        assert_eq!(max, int(0));
        let (s, max) = pr_box().chsh();
        assert_eq!(s[0], int(4));
        assert_eq!(max, int(4));
        let noisy = mix(ratio(3, 4), &pr_box(), &Behavior::uniform());
        assert_eq!(noisy.chsh().1, int(3));
    }

    #[test]
    fn classify_landmarks() {
        let l1 = flat([
            (1, 1),
            (0, 1),
            (0, 1),
            (0, 1),
            (1, 1),
            (0, 1),
            (0, 1),
            (0, 1),
            (1, 1),
            (0, 1),
            (0, 1),
            (0, 1),
            (1, 1),
            (0, 1),
            (0, 1),
            (0, 1),
        ]);
        assert_eq!(l1.classify(), Classification::Local);
        assert_eq!(pr_box().classify(), Classification::NonsignalingNonlocal);
        assert_eq!(copy_behavior().classify(), Classification::Signaling);
        assert_eq!(Behavior::uniform().classify(), Classification::Local);
    }

    #[test]
    fn stats_are_consistent() {
        let st = copy_behavior().stats();
        assert_eq!(st.delta_max, int(1));
        assert_eq!(st.marginals_a, [int(1), int(0), int(1), int(0)]);
        assert_eq!(st.marginals_b, [int(1), int(1), int(1), int(1)]);
        assert_eq!(st.correlators, [int(1), int(-1), int(1), int(-1)]);
    }

    #[test]
    fn chsh_f64_matches_exact() {
        let b = mix(ratio(3, 4), &pr_box(), &copy_behavior());
        let exact = b.chsh_expressions();
        let float = chsh_f64(&b.to_f64());
        for i in 0..4 {
            assert!((crate::rational::to_f64(&exact[i]) - float[i]).abs() < 1e-12);
        }
    }
}
