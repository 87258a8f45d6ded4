//! Design problems as monotone functionality-to-resource maps.
//!
//! A design problem is backed either by a finite implementation catalog or by
//! a computation hook. Querying one at a functionality point yields the
//! minimal antichain of resource points, each carrying the provenance of the
//! implementation (or computation) that realizes it.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::poset::{pareto_min, Antichain, Point, PosetError, Rel};

#[derive(Debug, Error)]
pub enum DpError {
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error("series composition: first resource arity {0} != second functionality arity {1}")]
    SeriesMismatch(usize, usize),
    #[error("functionality arity {got} does not match design problem ({expected})")]
    FunctionalityArity { expected: usize, got: usize },
    #[error("implementation '{id}': {what} arity {got}, space expects {expected}")]
    ImplementationArity {
        id: String,
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

/// One entry of an implementation catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Implementation {
    pub id: String,
    pub provides: Point,
    pub requires: Point,
    pub attributes: BTreeMap<String, String>,
}

impl Implementation {
    pub fn new(id: impl Into<String>, provides: Point, requires: Point) -> Self {
        Implementation {
            id: id.into(),
            provides,
            requires,
            attributes: BTreeMap::new(),
        }
    }
}

/// How a minimal resource point was realized.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Catalog implementation, plus ids of same-resource ties broken by
    /// catalog order.
    Catalog { id: String, ties: Vec<String> },
    /// Deterministic computation, identified by a label chosen by the hook.
    Computed { label: String },
    Series {
        first: Box<Provenance>,
        second: Box<Provenance>,
    },
    Parallel {
        left: Box<Provenance>,
        right: Box<Provenance>,
    },
}

impl Provenance {
    pub fn describe(&self) -> String {
        match self {
            Provenance::Catalog { id, .. } => id.clone(),
            Provenance::Computed { label } => label.clone(),
            Provenance::Series { first, second } => {
                format!("{};{}", first.describe(), second.describe())
            }
            Provenance::Parallel { left, right } => {
                format!("{}|{}", left.describe(), right.describe())
            }
        }
    }
}

/// One minimal resource point with its provenance.
#[derive(Debug, Clone)]
pub struct FrontEntry {
    pub resources: Point,
    pub provenance: Provenance,
}

/// Minimal antichain of resources with per-point provenance, sorted
/// lexicographically by resource point.
#[derive(Debug, Clone)]
pub struct ResourceFront {
    arity: usize,
    entries: Vec<FrontEntry>,
}

impl ResourceFront {
    pub fn entries(&self) -> &[FrontEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn antichain(&self) -> Antichain {
        pareto_min(
            self.arity,
            self.entries.iter().map(|e| e.resources.clone()).collect(),
        )
        .expect("front entries share the space")
    }

    /// Minimize candidates into a front. Exact-duplicate resource points are
    /// merged: the first candidate (input order) wins and later ids are
    /// recorded as ties when both are catalog entries.
    fn minimize(arity: usize, candidates: Vec<FrontEntry>) -> Result<Self, DpError> {
        let min = pareto_min(
            arity,
            candidates.iter().map(|e| e.resources.clone()).collect(),
        )?;
        let mut entries: Vec<FrontEntry> = Vec::with_capacity(min.len());
        for p in min.points() {
            let mut winner: Option<FrontEntry> = None;
            for cand in candidates.iter().filter(|c| &c.resources == p) {
                match &mut winner {
                    None => winner = Some(cand.clone()),
                    Some(w) => {
                        if let (
                            Provenance::Catalog { ties, .. },
                            Provenance::Catalog { id, .. },
                        ) = (&mut w.provenance, &cand.provenance)
                        {
                            ties.push(id.clone());
                        }
                    }
                }
            }
            entries.push(winner.expect("minimal point comes from a candidate"));
        }
        Ok(ResourceFront { arity, entries })
    }
}

type HookFn = dyn Fn(&Point) -> Vec<(Point, Provenance)> + Send + Sync;

enum Body {
    Catalog(Vec<Implementation>),
    Hook {
        eval: Arc<HookFn>,
        /// Declared finite evaluation grid for the functionality inputs;
        /// used when sampling the problem (e.g. monotonicity checks).
        grid: Vec<Point>,
    },
    Series(Box<DesignProblem>, Box<DesignProblem>),
    Parallel(Box<DesignProblem>, Box<DesignProblem>),
}

/// A monotone map from functionality points to minimal resource antichains.
pub struct DesignProblem {
    name: String,
    functionality_arity: usize,
    resource_arity: usize,
    body: Body,
}

impl DesignProblem {
    pub fn from_catalog(
        name: impl Into<String>,
        functionality_arity: usize,
        resource_arity: usize,
        catalog: Vec<Implementation>,
    ) -> Result<Self, DpError> {
        for imp in &catalog {
            if imp.provides.arity() != functionality_arity {
                return Err(DpError::ImplementationArity {
                    id: imp.id.clone(),
                    what: "provides",
                    expected: functionality_arity,
                    got: imp.provides.arity(),
                });
            }
            if imp.requires.arity() != resource_arity {
                return Err(DpError::ImplementationArity {
                    id: imp.id.clone(),
                    what: "requires",
                    expected: resource_arity,
                    got: imp.requires.arity(),
                });
            }
        }
        Ok(DesignProblem {
            name: name.into(),
            functionality_arity,
            resource_arity,
            body: Body::Catalog(catalog),
        })
    }

    /// A design problem backed by a deterministic computation. The hook must
    /// be a pure function of its input; `grid` declares the finite set of
    /// functionality points the problem is meant to be evaluated on.
    pub fn from_hook(
        name: impl Into<String>,
        functionality_arity: usize,
        resource_arity: usize,
        grid: Vec<Point>,
        eval: Arc<HookFn>,
    ) -> Self {
        DesignProblem {
            name: name.into(),
            functionality_arity,
            resource_arity,
            body: Body::Hook { eval, grid },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn functionality_arity(&self) -> usize {
        self.functionality_arity
    }

    pub fn resource_arity(&self) -> usize {
        self.resource_arity
    }

    pub fn evaluation_grid(&self) -> &[Point] {
        match &self.body {
            Body::Hook { grid, .. } => grid,
            _ => &[],
        }
    }

    /// Minimal antichain of resources providing functionality `f`.
    /// Infeasibility is the empty front, never an error.
    pub fn query(&self, f: &Point) -> Result<ResourceFront, DpError> {
        let candidates = self.feasible(f)?;
        ResourceFront::minimize(self.resource_arity, candidates)
    }

    /// All feasible (resource, provenance) candidates at `f`, unminimized.
    ///
    /// Compositions branch over this set rather than over `query` results:
    /// an intermediate resource that is dominated in its own space can still
    /// lead to a minimal final resource when a downstream catalog is not
    /// monotone, so composition must enumerate every implementation chain.
    pub fn feasible(&self, f: &Point) -> Result<Vec<FrontEntry>, DpError> {
        if f.arity() != self.functionality_arity {
            return Err(DpError::FunctionalityArity {
                expected: self.functionality_arity,
                got: f.arity(),
            });
        }
        let candidates = match &self.body {
            Body::Catalog(catalog) => catalog
                .iter()
                .filter(|imp| {
                    matches!(
                        f.compare(&imp.provides).expect("checked arity"),
                        Rel::Less | Rel::Equal
                    )
                })
                .map(|imp| FrontEntry {
                    resources: imp.requires.clone(),
                    provenance: Provenance::Catalog {
                        id: imp.id.clone(),
                        ties: Vec::new(),
                    },
                })
                .collect(),
            Body::Hook { eval, .. } => eval(f)
                .into_iter()
                .map(|(resources, provenance)| FrontEntry {
                    resources,
                    provenance,
                })
                .collect(),
            Body::Series(first, second) => {
                let mut cands = Vec::new();
                for e1 in &first.feasible(f)? {
                    for e2 in &second.feasible(&e1.resources)? {
                        cands.push(FrontEntry {
                            resources: e2.resources.clone(),
                            provenance: Provenance::Series {
                                first: Box::new(e1.provenance.clone()),
                                second: Box::new(e2.provenance.clone()),
                            },
                        });
                    }
                }
                cands
            }
            Body::Parallel(left, right) => {
                let (f1_coords, f2_coords) = f.coords().split_at(left.functionality_arity);
                let f1 = Point::new(f1_coords.to_vec());
                let f2 = Point::new(f2_coords.to_vec());
                let mut cands = Vec::new();
                for e1 in &left.feasible(&f1)? {
                    for e2 in &right.feasible(&f2)? {
                        cands.push(FrontEntry {
                            resources: e1.resources.concat(&e2.resources),
                            provenance: Provenance::Parallel {
                                left: Box::new(e1.provenance.clone()),
                                right: Box::new(e2.provenance.clone()),
                            },
                        });
                    }
                }
                cands
            }
        };
        Ok(candidates)
    }

    /// Series composition: the resources of `self` feed the functionality of
    /// `next`.
    pub fn series(self, next: DesignProblem) -> Result<DesignProblem, DpError> {
        if self.resource_arity != next.functionality_arity {
            return Err(DpError::SeriesMismatch(
                self.resource_arity,
                next.functionality_arity,
            ));
        }
        Ok(DesignProblem {
            name: format!("{} >> {}", self.name, next.name),
            functionality_arity: self.functionality_arity,
            resource_arity: next.resource_arity,
            body: Body::Series(Box::new(self), Box::new(next)),
        })
    }

    /// Parallel composition: functionality and resource spaces are products.
    pub fn parallel(self, other: DesignProblem) -> DesignProblem {
        DesignProblem {
            name: format!("{} || {}", self.name, other.name),
            functionality_arity: self.functionality_arity + other.functionality_arity,
            resource_arity: self.resource_arity + other.resource_arity,
            body: Body::Parallel(Box::new(self), Box::new(other)),
        }
    }
}

/// One monotonicity violation: a resource point needed at the larger
/// functionality that no smaller-functionality resource point sits below.
#[derive(Debug, Clone)]
pub struct MonotoneViolation {
    pub f1: Point,
    pub f2: Point,
    pub r2: Point,
}

#[derive(Debug, Clone, Default)]
pub struct MonotoneReport {
    pub pairs_checked: usize,
    pub pairs_skipped: usize,
    pub violations: Vec<MonotoneViolation>,
}

impl MonotoneReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the dominance direction of monotonicity on sampled functionality
/// pairs: for every `f1 <= f2`, each resource point feasible at `f2` must
/// dominate some resource point feasible at `f1`. Pairs that are not ordered
/// `f1 <= f2` are skipped and counted.
pub fn check_monotone(
    dp: &DesignProblem,
    pairs: &[(Point, Point)],
) -> Result<MonotoneReport, DpError> {
    let mut report = MonotoneReport::default();
    for (f1, f2) in pairs {
        if !matches!(f1.compare(f2)?, Rel::Less | Rel::Equal) {
            report.pairs_skipped += 1;
            continue;
        }
        report.pairs_checked += 1;
        let low = dp.query(f1)?.antichain();
        let high = dp.query(f2)?;
        for e in high.entries() {
            if !low.dominates(&e.resources)? {
                report.violations.push(MonotoneViolation {
                    f1: f1.clone(),
                    f2: f2.clone(),
                    r2: e.resources.clone(),
                });
            }
        }
    }
    Ok(report)
}
