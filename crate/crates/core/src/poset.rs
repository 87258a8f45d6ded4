//! Ordered-space algebra: nonnegative reals completed with a top element,
//! coordinate-wise product orders, and antichain containers.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PosetError {
    #[error("dimension mismatch: expected arity {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("value {0} is not a finite nonnegative real")]
    InvalidValue(f64),
}

/// A point of the completed nonnegative reals: either a finite value `>= 0`
/// or the distinguished top element, which dominates every finite value.
///
/// Top is a tagged variant, not a sentinel float, so it survives arithmetic
/// and ordering without overflow surprises.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Ext {
    Finite(f64),
    Top,
}

impl Ext {
    pub fn finite(value: f64) -> Result<Self, PosetError> {
        if value.is_finite() && value >= 0.0 {
            Ok(Ext::Finite(value))
        } else {
            Err(PosetError::InvalidValue(value))
        }
    }

    /// Panics on negative or non-finite input; use for literals.
    pub fn from_f64(value: f64) -> Self {
        Self::finite(value).expect("finite nonnegative value")
    }

    pub fn is_top(&self) -> bool {
        matches!(self, Ext::Top)
    }

    pub fn as_finite(&self) -> Option<f64> {
        match self {
            Ext::Finite(v) => Some(*v),
            Ext::Top => None,
        }
    }
}

impl Eq for Ext {}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ext {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Ext::Top, Ext::Top) => Ordering::Equal,
            (Ext::Top, Ext::Finite(_)) => Ordering::Greater,
            (Ext::Finite(_), Ext::Top) => Ordering::Less,
            // Finite values are constructed finite and nonnegative, so
            // partial_cmp cannot fail.
            (Ext::Finite(a), Ext::Finite(b)) => a.partial_cmp(b).expect("finite values"),
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Finite(v) => write!(f, "{v}"),
            Ext::Top => write!(f, "top"),
        }
    }
}

/// Outcome of comparing two points under the coordinate-wise product order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Less,
    Equal,
    Greater,
    Incomparable,
}

/// A point of a product of completed nonnegative-real coordinates.
///
/// The partial order is coordinate-wise; lexicographic ordering is used only
/// for deterministic iteration and output, never for dominance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<Ext>,
}

impl Point {
    pub fn new(coords: Vec<Ext>) -> Self {
        Point { coords }
    }

    pub fn from_values(values: &[f64]) -> Self {
        Point {
            coords: values.iter().map(|&v| Ext::from_f64(v)).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Ext] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> Ext {
        self.coords[i]
    }

    /// Coordinate-wise comparison in the product order.
    pub fn compare(&self, other: &Point) -> Result<Rel, PosetError> {
        if self.arity() != other.arity() {
            return Err(PosetError::DimensionMismatch {
                expected: self.arity(),
                got: other.arity(),
            });
        }
        let mut le = true;
        let mut ge = true;
        for (a, b) in self.coords.iter().zip(&other.coords) {
            match a.cmp(b) {
                Ordering::Less => ge = false,
                Ordering::Greater => le = false,
                Ordering::Equal => {}
            }
        }
        Ok(match (le, ge) {
            (true, true) => Rel::Equal,
            (true, false) => Rel::Less,
            (false, true) => Rel::Greater,
            (false, false) => Rel::Incomparable,
        })
    }

    /// `self <= other` in the product order. Arity mismatch is a caller bug
    /// when reaching this helper; prefer `compare` on untrusted input.
    pub fn le(&self, other: &Point) -> bool {
        matches!(
            self.compare(other).expect("points from the same space"),
            Rel::Less | Rel::Equal
        )
    }

    /// Total lexicographic order used for deterministic sorting.
    pub fn lex_cmp(&self, other: &Point) -> Ordering {
        self.coords.cmp(&other.coords)
    }

    /// Concatenation, for product spaces.
    pub fn concat(&self, other: &Point) -> Point {
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Point { coords }
    }

    /// Maximum absolute coordinate distance; `None` if any Top/Finite pair
    /// differs in kind.
    fn max_abs_diff(&self, other: &Point) -> Option<f64> {
        let mut d: f64 = 0.0;
        for (a, b) in self.coords.iter().zip(&other.coords) {
            match (a, b) {
                (Ext::Top, Ext::Top) => {}
                (Ext::Finite(x), Ext::Finite(y)) => d = d.max((x - y).abs()),
                _ => return None,
            }
        }
        Some(d)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A finite set of pairwise incomparable points in one product space.
///
/// The empty antichain is valid and denotes infeasibility. Points are kept
/// sorted lexicographically so iteration and output are reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Antichain {
    arity: usize,
    points: Vec<Point>,
}

impl Antichain {
    pub fn empty(arity: usize) -> Self {
        Antichain {
            arity,
            points: Vec::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True iff some minimal point is at-or-below `r`, i.e. the resource `r`
    /// is enough to realize one of the recorded alternatives.
    pub fn dominates(&self, r: &Point) -> Result<bool, PosetError> {
        if r.arity() != self.arity {
            return Err(PosetError::DimensionMismatch {
                expected: self.arity,
                got: r.arity(),
            });
        }
        Ok(self.points.iter().any(|p| p.le(r)))
    }

    /// Minimal elements of `self.points ∪ other.points`.
    pub fn union_min(&self, other: &Antichain) -> Result<Antichain, PosetError> {
        if self.arity != other.arity {
            return Err(PosetError::DimensionMismatch {
                expected: self.arity,
                got: other.arity,
            });
        }
        let mut all = self.points.clone();
        all.extend(other.points.iter().cloned());
        pareto_min(self.arity, all)
    }

    /// Merge points whose coordinates all lie within `tol` of each other,
    /// keeping the lexicographically smaller representative. Intended for
    /// collapsing solver noise; `tol = 0` is a no-op.
    pub fn merge_close(&self, tol: f64) -> Antichain {
        if tol <= 0.0 || self.points.len() < 2 {
            return self.clone();
        }
        let mut kept: Vec<Point> = Vec::new();
        for p in &self.points {
            let close = kept
                .iter()
                .any(|q| matches!(q.max_abs_diff(p), Some(d) if d <= tol));
            if !close {
                kept.push(p.clone());
            }
        }
        Antichain {
            arity: self.arity,
            points: kept,
        }
    }
}

/// Pareto-minimal subset of a finite multiset of points, duplicates collapsed.
pub fn pareto_min(arity: usize, points: Vec<Point>) -> Result<Antichain, PosetError> {
    for p in &points {
        if p.arity() != arity {
            return Err(PosetError::DimensionMismatch {
                expected: arity,
                got: p.arity(),
            });
        }
    }
    // Sorting lexicographically first means a point can only be dominated by
    // one already kept, so a single forward pass suffices.
    let mut sorted = points;
    sorted.sort_by(|a, b| a.lex_cmp(b));
    sorted.dedup();
    let mut kept: Vec<Point> = Vec::new();
    'outer: for p in sorted {
        for q in &kept {
            if q.le(&p) {
                continue 'outer;
            }
        }
        kept.retain(|q| !p.le(q));
        kept.push(p);
    }
    kept.sort_by(|a, b| a.lex_cmp(b));
    Ok(Antichain {
        arity,
        points: kept,
    })
}
